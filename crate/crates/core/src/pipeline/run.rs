use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use super::{benchmark, Method, PipelineConfig, Segmenter, TimingReport};
use crate::error::{Error, Result};
use crate::evaluation::{self, ConfusionCounts, MetricsReport, ReportRow};
use crate::imagecore::{self, format_index};
use crate::model_io;

/// What a pipeline run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dataset: String,
    pub method: Method,
    pub first_frame: u32,
    pub last_frame: u32,
    /// Number of masks produced, one per post-training frame.
    pub masks: u32,
    /// Per-frame confusion counts over the evaluation window.
    pub confusion: Vec<(u32, ConfusionCounts)>,
    pub metrics: Option<MetricsReport>,
    pub timing: Option<TimingReport>,
}

impl RunSummary {
    pub fn report_row(&self) -> Option<ReportRow> {
        self.metrics.map(|metrics| ReportRow {
            dataset: self.dataset.clone(),
            method: self.method.to_string(),
            metrics,
        })
    }

    pub fn total_confusion(&self) -> ConfusionCounts {
        self.confusion
            .iter()
            .fold(ConfusionCounts::default(), |acc, &(_, c)| acc + c)
    }
}

/// Runs `f` inside a dedicated pool when a thread count is configured.
pub(super) fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Index of the last frame: the configured one, or the last consecutive file
/// found on disk.
pub(super) fn last_frame(config: &PipelineConfig) -> Result<u32> {
    if let Some(last) = config.last_frame {
        return Ok(last);
    }
    let exists =
        |i: u32| -> Result<bool> { Ok(config.input.join(format_index(&config.pattern, i)?).is_file()) };
    if !exists(config.first_frame)? {
        return Err(Error::MissingFrame {
            index: config.first_frame,
            path: config
                .input
                .join(format_index(&config.pattern, config.first_frame)?),
        });
    }
    let mut last = config.first_frame;
    while exists(last + 1)? {
        last += 1;
    }
    Ok(last)
}

fn evaluation_window(
    config: &PipelineConfig,
    gt_dir: &Path,
    first_segmented: u32,
    last: u32,
) -> Result<RangeInclusive<u32>> {
    let (mut lo, mut hi) = (first_segmented, last);
    if let Some(roi) = evaluation::find_temporal_roi(gt_dir) {
        let (a, b) = evaluation::read_temporal_roi(roi)?;
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if lo > hi {
        return Err(Error::Config(format!(
            "no frames to evaluate: sequence {}..={last} with {} training frames",
            config.first_frame,
            config.train_frames()
        )));
    }
    Ok(lo..=hi)
}

/// Trains on the first `N` frames, segments the rest, writes masks and the
/// report, and optionally benchmarks the configured methods.
pub fn run(config: &PipelineConfig) -> Result<RunSummary> {
    config.validate()?;
    with_threads(config.threads, || run_inner(config))?
}

fn run_inner(config: &PipelineConfig) -> Result<RunSummary> {
    if !config.input.is_dir() {
        return Err(Error::io(
            &config.input,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input directory not found"),
        ));
    }
    let last = last_frame(config)?;
    let available = (last + 1).saturating_sub(config.first_frame);
    if config.load_model.is_none() && available < config.train_frames() {
        return Err(Error::Config(format!(
            "sequence has {available} frames but training needs {}",
            config.train_frames()
        )));
    }

    let mut segmenter = None;
    let mut start = config.first_frame;
    if let Some(path) = &config.load_model {
        let seg = if config.method == Method::Mog {
            Segmenter::from_mog(config, model_io::load_mog(path)?)?
        } else {
            Segmenter::from_codebook(config, model_io::load_codebook(path)?)?
        };
        start += seg.train_frames;
        segmenter = Some(seg);
    }
    let first_segmented = config.first_frame
        + match &segmenter {
            Some(s) => s.train_frames,
            None => config.train_frames(),
        };

    let window = match &config.groundtruth {
        Some(gt) => {
            if !gt.is_dir() {
                return Err(Error::io(
                    gt,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "ground-truth directory not found"),
                ));
            }
            Some(evaluation_window(config, gt, first_segmented, last)?)
        }
        None => None,
    };
    if let Some(out) = &config.output {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    }

    let mut masks = 0;
    let mut confusion = Vec::new();
    for item in imagecore::load_sequence(&config.input, &config.pattern, start, last)? {
        let (index, frame) = item?;
        let seg = match &mut segmenter {
            Some(s) => s,
            None => segmenter.insert(Segmenter::new(config, frame.width(), frame.height())?),
        };
        if !seg.is_trained() {
            seg.train(&frame)?;
            if seg.is_trained() {
                if let Some(path) = &config.save_model {
                    match (seg.codebook(), seg.mog()) {
                        (Some(m), _) => model_io::save_codebook(m, path)?,
                        (_, Some(m)) => model_io::save_mog(m, path)?,
                        _ => {}
                    }
                }
            }
            continue;
        }
        let out = seg.segment(&frame)?;
        masks += 1;
        if let Some(dir) = &config.output {
            imagecore::write_mask(&out.mask, dir.join(format_index(&config.mask_pattern, index)?))?;
        }
        if let (Some(gt), Some(w)) = (&config.groundtruth, &window) {
            if w.contains(&index) {
                let truth = evaluation::load_groundtruth_with(gt, &config.gt_pattern, index)?;
                confusion.push((index, evaluation::confusion(&out.mask, &truth, None)?));
            }
        }
    }

    let metrics = if confusion.is_empty() {
        None
    } else {
        let counts: Vec<ConfusionCounts> = confusion.iter().map(|&(_, c)| c).collect();
        Some(evaluation::aggregate(&counts, config.averaging)?)
    };
    let mut summary = RunSummary {
        dataset: config.dataset_name(),
        method: config.method,
        first_frame: config.first_frame,
        last_frame: last,
        masks,
        confusion,
        metrics,
        timing: None,
    };
    if let Some(path) = &config.report {
        let rows: Vec<ReportRow> = summary.report_row().into_iter().collect();
        fs::write(path, evaluation::render_csv(&rows)).map_err(|e| Error::io(path, e))?;
    }
    if config.bench.is_some() {
        summary.timing = Some(benchmark(config)?);
    }
    Ok(summary)
}
