use cbseg::evaluation::*;
use cbseg::imagecore::BinaryMask;
use proptest::prelude::*;

fn counts() -> impl Strategy<Value = ConfusionCounts> {
    (0u64..10_000, 0u64..10_000, 0u64..10_000, 0u64..10_000)
        .prop_filter("non-empty", |c| c.0 + c.1 + c.2 + c.3 > 0)
        .prop_map(|(tp, fp, fn_, tn)| ConfusionCounts::new(tp, fp, fn_, tn))
}

proptest! {
    #[test]
    fn metric_identities(c in counts()) {
        let m = metrics(&c).unwrap();
        if let Some(fpr) = m.fpr {
            prop_assert!((fpr + c.tn as f64 / (c.tn + c.fp) as f64 - 1.0).abs() <= 1e-12);
        }
        if let (Some(pr), Some(tpr), Some(fm)) = (m.pr, m.tpr, m.fm) {
            prop_assert!((fm - 2.0 * pr * tpr / (pr + tpr)).abs() <= 1e-12);
        }
        if let (Some(jc), Some(pr), Some(tpr)) = (m.jc, m.pr, m.tpr) {
            prop_assert!(jc <= pr.min(tpr) + 1e-12);
        }
        let pcc = m.pcc.unwrap();
        prop_assert!((pcc + (c.fp + c.fn_) as f64 / c.total() as f64 - 1.0).abs() <= 1e-12);
        for v in [m.fpr, m.tpr, m.pr, m.fm, m.pcc, m.jc].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn metrics_are_scale_free(c in counts(), k in 1u64..50) {
        let a = metrics(&c).unwrap();
        let b = metrics(&c.scaled(k)).unwrap();
        let pairs = [(a.fpr, b.fpr), (a.tpr, b.tpr), (a.pr, b.pr), (a.fm, b.fm), (a.pcc, b.pcc), (a.jc, b.jc)];
        for (x, y) in pairs {
            match (x, y) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-12),
                (None, None) => {}
                _ => prop_assert!(false, "definedness changed under scaling"),
            }
        }
    }

    #[test]
    fn micro_average_equals_metrics_of_the_sum(frames in prop::collection::vec(counts(), 1..10)) {
        let total = frames.iter().fold(ConfusionCounts::default(), |a, &b| a + b);
        prop_assert_eq!(aggregate(&frames, Averaging::Micro).unwrap(), metrics(&total).unwrap());
    }

    #[test]
    fn macro_average_of_identical_frames_is_the_frame(c in counts(), n in 1usize..6) {
        let a = aggregate(&vec![c; n], Averaging::Macro).unwrap();
        let m = metrics(&c).unwrap();
        for (x, y) in [(a.fpr, m.fpr), (a.tpr, m.tpr), (a.pr, m.pr), (a.fm, m.fm), (a.pcc, m.pcc), (a.jc, m.jc)] {
            prop_assert_eq!(x.is_some(), y.is_some());
            if let (Some(x), Some(y)) = (x, y) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn confusion_partitions_the_evaluated_pixels(
        labels in prop::collection::vec(prop::sample::select(vec![0u8, 50, 85, 170, 255]), 1..200),
        sys in prop::collection::vec(any::<bool>(), 200),
    ) {
        let n = labels.len();
        let truth = GroundTruth::new(n, 1, labels.clone()).unwrap();
        let mask = BinaryMask::from_labels(n, 1, sys[..n].to_vec()).unwrap();
        let c = confusion(&mask, &truth, None).unwrap();
        let evaluated = labels.iter().filter(|&&l| l == 0 || l == 50 || l == 255).count();
        prop_assert_eq!(c.total() as usize, evaluated);
        prop_assert_eq!(c.total() as usize, truth.evaluated_pixels());
        prop_assert_eq!((c.tp + c.fn_) as usize, labels.iter().filter(|&&l| l == 255).count());
    }
}

#[test]
fn undefined_metrics_render_as_a_dash() {
    let m = metrics(&ConfusionCounts::new(0, 0, 0, 10)).unwrap();
    assert_eq!(m.tpr, None);
    assert_eq!(m.pr, None);
    assert_eq!(format_percent(m.tpr), "—");
    assert_eq!(format_percent(m.pcc), "100.00");
}

#[test]
fn unknown_labels_are_rejected() {
    assert!(GroundTruth::new(2, 1, vec![0, 7]).is_err());
}
