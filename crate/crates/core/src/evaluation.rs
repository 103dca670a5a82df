//! Pixel-level comparison against ground truth and the derived rate metrics.
//!
//! Ground-truth frames follow the changedetection.net labelling: 255 marks
//! moving objects, 0 static background and 50 hard shadow (both negative),
//! while 85 (outside the region of interest) and 170 (unknown motion) are
//! not evaluated.

use std::fmt;
use std::fs;
use std::ops::{Add, AddAssign};
use std::path::{Path, PathBuf};

use crate::error::{check_dims, Error, Result};
use crate::imagecore::{self, BinaryMask};

pub const LABEL_STATIC: u8 = 0;
pub const LABEL_SHADOW: u8 = 50;
pub const LABEL_OUTSIDE_ROI: u8 = 85;
pub const LABEL_UNKNOWN: u8 = 170;
pub const LABEL_MOTION: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthClass {
    Positive,
    Negative,
    Excluded,
}

pub fn classify_label(label: u8) -> Option<TruthClass> {
    match label {
        LABEL_MOTION => Some(TruthClass::Positive),
        LABEL_STATIC | LABEL_SHADOW => Some(TruthClass::Negative),
        LABEL_OUTSIDE_ROI | LABEL_UNKNOWN => Some(TruthClass::Excluded),
        _ => None,
    }
}

/// A single-channel labelled ground-truth frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl GroundTruth {
    /// Fails if any label is outside the known alphabet.
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "ground truth has {} labels, expected {}",
                labels.len(),
                width * height
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| classify_label(l).is_none()) {
            return Err(Error::InvalidInput(format!("unknown ground-truth label {bad}")));
        }
        Ok(GroundTruth {
            width,
            height,
            labels,
        })
    }

    /// Truth with foreground pixels labelled 255 and the rest 0.
    pub fn from_mask(mask: &BinaryMask) -> Self {
        GroundTruth {
            width: mask.width(),
            height: mask.height(),
            labels: mask.to_bytes(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn evaluated_pixels(&self) -> usize {
        self.labels
            .iter()
            .filter(|&&l| classify_label(l) != Some(TruthClass::Excluded))
            .count()
    }
}

/// Reads `gt%06d.png` for frame `index` from `directory`.
pub fn load_groundtruth(directory: impl AsRef<Path>, index: u32) -> Result<GroundTruth> {
    load_groundtruth_with(directory, "gt%06d.png", index)
}

pub fn load_groundtruth_with(directory: impl AsRef<Path>, pattern: &str, index: u32) -> Result<GroundTruth> {
    let path = directory.as_ref().join(imagecore::format_index(pattern, index)?);
    if !path.is_file() {
        return Err(Error::MissingFrame { index, path });
    }
    let (w, h, labels) = imagecore::load_gray(&path)?;
    GroundTruth::new(w, h, labels).map_err(|e| Error::Format {
        path,
        reason: e.to_string(),
    })
}

/// Parses `temporalROI.txt` (two integers: first and last evaluated frame).
pub fn read_temporal_roi(path: impl AsRef<Path>) -> Result<(u32, u32)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let nums: Vec<u32> = text
        .split_whitespace()
        .map(|t| t.parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    match nums.as_slice() {
        [a, b] if a <= b => Ok((*a, *b)),
        _ => Err(Error::Format {
            path: path.to_path_buf(),
            reason: "expected two ascending frame numbers".into(),
        }),
    }
}

/// Locates `temporalROI.txt` next to or inside a ground-truth directory.
pub fn find_temporal_roi(gt_dir: &Path) -> Option<PathBuf> {
    [Some(gt_dir.to_path_buf()), gt_dir.parent().map(Path::to_path_buf)]
        .into_iter()
        .flatten()
        .map(|d| d.join("temporalROI.txt"))
        .find(|p| p.is_file())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn scaled(&self, k: u64) -> Self {
        ConfusionCounts::new(self.tp * k, self.fp * k, self.fn_ * k, self.tn * k)
    }
}

impl Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: Self) -> Self {
        ConfusionCounts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_, self.tn + o.tn)
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Tallies agreement between a system mask and ground truth. Pixels outside
/// `roi` (when given) and pixels with excluded labels are skipped.
pub fn confusion(
    mask: &BinaryMask,
    truth: &GroundTruth,
    roi: Option<&BinaryMask>,
) -> Result<ConfusionCounts> {
    check_dims(truth.dims(), mask.dims())?;
    if let Some(r) = roi {
        check_dims(truth.dims(), r.dims())?;
    }
    let mut c = ConfusionCounts::default();
    for (i, (&sys, &label)) in mask.labels().iter().zip(&truth.labels).enumerate() {
        if roi.is_some_and(|r| !r.labels()[i]) {
            continue;
        }
        match (classify_label(label), sys) {
            (Some(TruthClass::Positive), true) => c.tp += 1,
            (Some(TruthClass::Positive), false) => c.fn_ += 1,
            (Some(TruthClass::Negative), true) => c.fp += 1,
            (Some(TruthClass::Negative), false) => c.tn += 1,
            _ => {}
        }
    }
    Ok(c)
}

/// Rate metrics in `[0, 1]`; `None` marks a ratio with a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub fpr: Option<f64>,
    pub tpr: Option<f64>,
    pub pr: Option<f64>,
    pub fm: Option<f64>,
    pub pcc: Option<f64>,
    pub jc: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Applies the six metric definitions. All-zero counts are rejected.
pub fn metrics(c: &ConfusionCounts) -> Result<MetricsReport> {
    if c.total() == 0 {
        return Err(Error::InvalidInput("metrics of empty confusion counts".into()));
    }
    let fpr = ratio(c.tn, c.tn + c.fp).map(|s| 1.0 - s);
    let tpr = ratio(c.tp, c.tp + c.fn_);
    let pr = ratio(c.tp, c.tp + c.fp);
    let fm = match (pr, tpr) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(MetricsReport {
        fpr,
        tpr,
        pr,
        fm,
        pcc: ratio(c.tp + c.tn, c.total()),
        jc: ratio(c.tp, c.tp + c.fp + c.fn_),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Averaging {
    /// Sum the counts over frames, then compute each metric once.
    #[default]
    Micro,
    /// Mean of per-frame metrics, skipping frames where a metric is undefined.
    Macro,
}

pub fn aggregate(per_frame: &[ConfusionCounts], averaging: Averaging) -> Result<MetricsReport> {
    if per_frame.is_empty() {
        return Err(Error::InvalidInput("aggregate of an empty frame list".into()));
    }
    match averaging {
        Averaging::Micro => {
            let total = per_frame.iter().fold(ConfusionCounts::default(), |a, &b| a + b);
            metrics(&total)
        }
        Averaging::Macro => {
            let reports = per_frame
                .iter()
                .filter(|c| c.total() > 0)
                .map(metrics)
                .collect::<Result<Vec<_>>>()?;
            if reports.is_empty() {
                return Err(Error::InvalidInput("every frame has empty counts".into()));
            }
            let mean = |f: fn(&MetricsReport) -> Option<f64>| {
                let vals: Vec<f64> = reports.iter().filter_map(f).collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            };
            Ok(MetricsReport {
                fpr: mean(|r| r.fpr),
                tpr: mean(|r| r.tpr),
                pr: mean(|r| r.pr),
                fm: mean(|r| r.fm),
                pcc: mean(|r| r.pcc),
                jc: mean(|r| r.jc),
            })
        }
    }
}

/// Undefined metrics render as an em dash, never as zero.
pub const UNDEFINED: &str = "\u{2014}";

/// Formats a metric as a percentage with two decimals.
pub fn format_percent(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.2}", x * 100.0),
        None => UNDEFINED.to_string(),
    }
}

pub const CSV_HEADER: &str = "dataset,method,FPR,TPR,PR,FM,PCC,JC";

/// One result line of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub method: String,
    pub metrics: MetricsReport,
}

impl ReportRow {
    fn cells(&self) -> [String; 6] {
        let m = &self.metrics;
        [m.fpr, m.tpr, m.pr, m.fm, m.pcc, m.jc].map(format_percent)
    }

    pub fn to_csv(&self) -> String {
        format!("{},{},{}", self.dataset, self.method, self.cells().join(","))
    }
}

pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Metrics as rows, methods as columns.
pub struct ReportTable<'a>(pub &'a [ReportRow]);

impl fmt::Display for ReportTable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = self.0;
        write!(f, "{:<8}", "Metrics")?;
        for r in rows {
            write!(f, " {:>10}", r.method)?;
        }
        writeln!(f)?;
        let names = ["FPR", "TPR", "PR", "FM", "PCC", "JC"];
        let cells: Vec<[String; 6]> = rows.iter().map(ReportRow::cells).collect();
        for (i, name) in names.iter().enumerate() {
            write!(f, "{name:<8}")?;
            for c in &cells {
                write!(f, " {:>10}", c[i])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
