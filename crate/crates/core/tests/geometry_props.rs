use cbseg::geometry::*;
use cbseg::imagecore::BinaryMask;
use proptest::prelude::*;

fn points() -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((-30i64..30, -30i64..30), 1..100)
}

fn mask(w: usize, h: usize) -> impl Strategy<Value = BinaryMask> {
    prop::collection::vec(prop::bool::weighted(0.2), w * h)
        .prop_map(move |l| BinaryMask::from_labels(w, h, l).unwrap())
}

fn three_masks() -> impl Strategy<Value = (BinaryMask, BinaryMask, BinaryMask)> {
    (1usize..16, 1usize..16).prop_flat_map(|(w, h)| (mask(w, h), mask(w, h), mask(w, h)))
}

proptest! {
    #[test]
    fn hull_is_convex_and_contains_its_points(pts in points()) {
        let pts: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        let hull = convex_hull(&pts);
        let v = &hull.vertices;
        prop_assert!(!v.is_empty());
        if v.len() >= 3 {
            for i in 0..v.len() {
                prop_assert!(cross(v[i], v[(i + 1) % v.len()], v[(i + 2) % v.len()]) > 0);
            }
        }
        for &p in &pts {
            prop_assert!(polygon_contains(&hull, p));
        }
        for q in v {
            prop_assert!(pts.contains(q));
        }
    }

    #[test]
    fn rasterized_hull_is_exactly_the_contained_lattice_points(pts in points()) {
        let pts: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new(x + 30, y + 30)).collect();
        let hull = convex_hull(&pts);
        let mut out = BinaryMask::new(60, 60);
        rasterize_polygon(&hull, &mut out);
        for y in 0..60 {
            for x in 0..60 {
                prop_assert_eq!(out.get(x, y), polygon_contains(&hull, Point::new(x as i64, y as i64)));
            }
        }
    }

    #[test]
    fn fill_is_an_idempotent_superset((m, _, _) in three_masks()) {
        let f = fill_hulls(&m);
        prop_assert!(m.is_subset_of(&f));
        prop_assert_eq!(fill_hulls(&f), f);
    }

    #[test]
    fn contours_lie_on_their_components((m, _, _) in three_masks()) {
        let contours = find_contours(&m);
        for c in &contours {
            prop_assert!(!c.points.is_empty());
            for p in &c.points {
                prop_assert!(m.get(p.x as usize, p.y as usize));
            }
        }
        prop_assert_eq!(contours.is_empty(), m.is_empty());
    }

    #[test]
    fn intersection_obeys_and_laws((a, b, c) in three_masks()) {
        let ab = intersect(&a, &b).unwrap();
        prop_assert_eq!(&ab, &intersect(&b, &a).unwrap());
        prop_assert_eq!(
            intersect(&ab, &c).unwrap(),
            intersect(&a, &intersect(&b, &c).unwrap()).unwrap()
        );
        prop_assert_eq!(&intersect(&a, &a).unwrap(), &a);
        prop_assert!(ab.is_subset_of(&a) && ab.is_subset_of(&b));
        let (w, h) = a.dims();
        prop_assert_eq!(&intersect(&a, &BinaryMask::filled(w, h, true)).unwrap(), &a);
        prop_assert!(intersect(&a, &BinaryMask::new(w, h)).unwrap().is_empty());
    }
}

#[test]
fn intersect_rejects_mismatched_sizes() {
    assert!(intersect(&BinaryMask::new(3, 4), &BinaryMask::new(4, 3)).is_err());
}
