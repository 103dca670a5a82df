use std::fmt;
use std::time::Instant;

use super::run::{last_frame, with_threads};
use super::{Method, PipelineConfig, Segmenter};
use crate::error::{Error, Result};
use crate::imagecore::{self, Frame};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub methods: Vec<Method>,
    /// Timed passes over the frames; the reported time is their median.
    pub repetitions: u32,
    /// Post-training frames segmented before timing starts in each pass.
    pub warmup_frames: usize,
    /// Worker threads for the timed passes.
    pub threads: usize,
}

impl BenchOptions {
    pub fn new(methods: Vec<Method>, repetitions: u32) -> Self {
        BenchOptions {
            methods,
            repetitions,
            warmup_frames: 5,
            threads: 1,
        }
    }
}

/// Mean per-frame segmentation time of each method and the overhead of the
/// fused methods relative to plain codebook subtraction.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    /// Frames timed per pass.
    pub frames: usize,
    pub repetitions: u32,
    /// Median over passes of the mean seconds per frame.
    pub per_frame_secs: Vec<(Method, f64)>,
    /// `(fused - cb) / cb * 100` for each fused method; empty without `cb`.
    pub overhead_pct: Vec<(Method, f64)>,
}

impl TimingReport {
    pub fn per_frame(&self, method: Method) -> Option<f64> {
        self.per_frame_secs
            .iter()
            .find(|(m, _)| *m == method)
            .map(|&(_, s)| s)
    }

    pub fn overhead(&self, method: Method) -> Option<f64> {
        self.overhead_pct
            .iter()
            .find(|(m, _)| *m == method)
            .map(|&(_, p)| p)
    }
}

impl fmt::Display for TimingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "timing over {} frames, median of {} passes",
            self.frames, self.repetitions
        )?;
        writeln!(f, "{:<10} {:>12} {:>10}", "method", "ms/frame", "overhead")?;
        for &(m, secs) in &self.per_frame_secs {
            let over = match self.overhead(m) {
                Some(p) => format!("{p:.2}%"),
                None => "-".into(),
            };
            writeln!(f, "{:<10} {:>12.3} {:>10}", m.to_string(), secs * 1e3, over)?;
        }
        Ok(())
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Loads the configured sequence into memory and times `config.bench_methods`.
pub fn benchmark(config: &PipelineConfig) -> Result<TimingReport> {
    let repetitions = config
        .bench
        .ok_or_else(|| Error::Config("benchmark requested without repetitions".into()))?;
    let last = last_frame(config)?;
    let frames = imagecore::load_sequence(&config.input, &config.pattern, config.first_frame, last)?
        .map(|r| r.map(|(_, f)| f))
        .collect::<Result<Vec<_>>>()?;
    let mut opts = BenchOptions::new(config.bench_methods.clone(), repetitions);
    if let Some(t) = config.threads {
        opts.threads = t;
    }
    benchmark_frames(&frames, config, &opts)
}

/// Times each method over `frames`. Every pass trains a fresh model on the
/// first `N` frames (untimed), so all methods start from the same state and
/// the model memory is laid out as in a real run. Passes interleave the
/// methods in rotating order to spread drift in machine load evenly.
pub fn benchmark_frames(
    frames: &[Frame],
    config: &PipelineConfig,
    opts: &BenchOptions,
) -> Result<TimingReport> {
    if opts.repetitions < 3 {
        return Err(Error::Config("benchmark needs at least 3 repetitions".into()));
    }
    if opts.methods.is_empty() {
        return Err(Error::Config("benchmark needs at least one method".into()));
    }
    let n = config.train_frames() as usize;
    if frames.len() <= n + opts.warmup_frames {
        return Err(Error::InvalidInput(format!(
            "benchmark needs more than {} frames, got {}",
            n + opts.warmup_frames,
            frames.len()
        )));
    }
    let (w, h) = frames[0].dims();

    with_threads(Some(opts.threads.max(1)), || {
        let configs: Vec<PipelineConfig> = opts
            .methods
            .iter()
            .map(|&method| PipelineConfig {
                method,
                ..config.clone()
            })
            .collect();
        let timed = &frames[n + opts.warmup_frames..];
        let mut samples = vec![Vec::with_capacity(opts.repetitions as usize); configs.len()];
        for rep in 0..opts.repetitions as usize {
            for k in 0..configs.len() {
                let i = (k + rep) % configs.len();
                let mut seg = Segmenter::new(&configs[i], w, h)?;
                for f in &frames[..n] {
                    seg.train(f)?;
                }
                for f in &frames[n..n + opts.warmup_frames] {
                    seg.segment(f)?;
                }
                let mut total = 0.0;
                for f in timed {
                    let start = Instant::now();
                    let out = seg.segment(f)?;
                    total += start.elapsed().as_secs_f64();
                    std::hint::black_box(out);
                }
                samples[i].push(total / timed.len() as f64);
            }
        }

        let per_frame_secs: Vec<(Method, f64)> = opts
            .methods
            .iter()
            .zip(samples.iter_mut())
            .map(|(&m, s)| (m, median(s)))
            .collect();
        let cb = per_frame_secs
            .iter()
            .find(|(m, _)| *m == Method::Codebook)
            .map(|&(_, s)| s);
        let overhead_pct = match cb {
            Some(base) if base > 0.0 => per_frame_secs
                .iter()
                .filter(|(m, _)| matches!(m, Method::Fused(_)))
                .map(|&(m, s)| (m, (s - base) / base * 100.0))
                .collect(),
            _ => Vec::new(),
        };
        Ok(TimingReport {
            frames: timed.len(),
            repetitions: opts.repetitions,
            per_frame_secs,
            overhead_pct,
        })
    })?
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn codebook_only_has_no_overheads() {
        let frames: Vec<Frame> = (0..12)
            .map(|i| Frame::filled(8, 8, &[i as u8, 50, 60]).unwrap())
            .collect();
        let config = PipelineConfig::with_train_frames(4);
        let opts = BenchOptions::new(vec![Method::Codebook], 3);
        let report = benchmark_frames(&frames, &config, &opts).unwrap();
        assert!(report.overhead_pct.is_empty());
        assert_eq!(report.frames, 12 - 4 - 5);
        assert!(report.per_frame(Method::Codebook).unwrap() >= 0.0);
    }

    #[test]
    fn rejects_too_few_repetitions_or_frames() {
        let frames = vec![Frame::filled(4, 4, &[1, 2, 3]).unwrap(); 6];
        let config = PipelineConfig::with_train_frames(2);
        let opts = BenchOptions::new(vec![Method::Codebook], 2);
        assert!(benchmark_frames(&frames, &config, &opts).is_err());
        let opts = BenchOptions::new(vec![Method::Codebook], 3);
        assert!(benchmark_frames(&frames, &config, &opts).is_err());
    }
}
