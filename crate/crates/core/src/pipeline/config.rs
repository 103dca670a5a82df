use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::Method;
use crate::codebook::CodebookParams;
use crate::edges::{Detector, EdgeParams};
use crate::error::{Error, Result};
use crate::evaluation::Averaging;
use crate::mog::MogParams;

/// Parameter sets shipped with the crate for the two reference sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Canoe,
    Fountain01,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Canoe, Preset::Fountain01];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Canoe => "canoe",
            Preset::Fountain01 => "fountain01",
        }
    }

    /// The preset as `key = value` text.
    pub fn text(self) -> &'static str {
        match self {
            Preset::Canoe => include_str!("../../../../presets/canoe.conf"),
            Preset::Fountain01 => include_str!("../../../../presets/fountain01.conf"),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}")))
    }
}

/// Everything a pipeline run needs.
///
/// A config is assembled from layers: built-in defaults, then an optional
/// preset, then a `key = value` file, then command-line flags. Each layer is
/// a list of entries applied through [`PipelineConfig::set`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub pattern: String,
    pub first_frame: u32,
    /// Last frame to read; `None` reads until the first missing file.
    pub last_frame: Option<u32>,
    pub method: Method,
    /// Codebook parameters. `train_frames` doubles as `N` for every method.
    pub codebook: CodebookParams,
    pub mog: MogParams,
    /// Edge parameters. The detector field is overridden by `method`.
    pub edges: EdgeParams,
    /// Contours enclosing fewer pixels are not filled.
    pub min_hull_area: usize,
    pub groundtruth: Option<PathBuf>,
    pub gt_pattern: String,
    pub output: Option<PathBuf>,
    pub mask_pattern: String,
    pub report: Option<PathBuf>,
    /// Dataset label for reports; defaults to the input directory name.
    pub dataset: Option<String>,
    pub averaging: Averaging,
    /// Benchmark repetitions; `None` disables timing.
    pub bench: Option<u32>,
    pub bench_methods: Vec<Method>,
    /// Worker threads for per-pixel work; `None` uses the global pool.
    pub threads: Option<usize>,
    pub save_model: Option<PathBuf>,
    pub load_model: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: PathBuf::from("input"),
            pattern: "in%06d.jpg".into(),
            first_frame: 1,
            last_frame: None,
            method: Method::Fused(Detector::Sobel),
            codebook: CodebookParams::default(),
            mog: MogParams::default(),
            edges: EdgeParams::default(),
            min_hull_area: 0,
            groundtruth: None,
            gt_pattern: "gt%06d.png".into(),
            output: None,
            mask_pattern: "bin%06d.png".into(),
            report: None,
            dataset: None,
            averaging: Averaging::Micro,
            bench: None,
            bench_methods: vec![
                Method::Codebook,
                Method::Fused(Detector::Sobel),
                Method::Fused(Detector::Log),
                Method::Fused(Detector::Canny),
            ],
            threads: None,
            save_model: None,
            load_model: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_opt_f32(key: &str, value: &str) -> Result<Option<f32>> {
    if value.eq_ignore_ascii_case("auto") || value.is_empty() {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

/// Splits `key = value` text into entries. `#` starts a comment; blank lines
/// are ignored.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", n + 1)));
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

impl PipelineConfig {
    /// Defaults with a given training length.
    pub fn with_train_frames(n: u32) -> Self {
        let mut config = PipelineConfig::default();
        config.codebook.train_frames = n;
        config
    }

    pub fn train_frames(&self) -> u32 {
        self.codebook.train_frames
    }

    /// Edge parameters with the detector implied by `method`.
    pub fn edge_params(&self) -> EdgeParams {
        let mut edges = self.edges.clone();
        if let Some(d) = self.method.detector() {
            edges.detector = d;
        }
        edges
    }

    /// Applies one `key = value` entry. Keys match the long command-line flags
    /// with `-` and `_` treated alike.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_").to_ascii_lowercase();
        let value = value.trim();
        let k = key.as_str();
        match k {
            "input" => self.input = PathBuf::from(value),
            "pattern" => self.pattern = value.to_string(),
            "first" | "first_frame" => self.first_frame = parse(k, value)?,
            "last" | "last_frame" => {
                self.last_frame = if value.is_empty() || value == "auto" {
                    None
                } else {
                    Some(parse(k, value)?)
                }
            }
            "method" => self.method = value.parse()?,
            "train" | "train_frames" => self.codebook.train_frames = parse(k, value)?,
            "epsilon" => self.codebook.epsilon = parse(k, value)?,
            "alpha" => self.codebook.alpha = parse(k, value)?,
            "beta" => self.codebook.beta = parse(k, value)?,
            "mnrl_prune_factor" => self.codebook.mnrl_prune_factor = parse(k, value)?,
            "cache_promote_freq" => self.codebook.cache_promote_freq = parse(k, value)?,
            "cache_stale_frames" => self.codebook.cache_stale_frames = parse(k, value)?,
            "mog_learning_rate" => self.mog.learning_rate = parse(k, value)?,
            "mog_second_rate" => self.mog.second_rate = parse(k, value)?,
            "mog_components" => self.mog.component_count = parse(k, value)?,
            "mog_background_fraction" => self.mog.background_fraction = parse(k, value)?,
            "mog_match_sigma" => self.mog.match_sigma = parse(k, value)?,
            "mog_initial_variance" => self.mog.initial_variance = parse(k, value)?,
            "mog_initial_weight" => self.mog.initial_weight = parse(k, value)?,
            "mog_min_variance" => self.mog.min_variance = parse(k, value)?,
            "theta" => self.edges.theta = parse(k, value)?,
            "log_sigma" => self.edges.log_sigma = parse(k, value)?,
            "canny_sigma" => self.edges.canny_sigma = parse(k, value)?,
            "canny_low" => self.edges.canny_low = parse_opt_f32(k, value)?,
            "canny_high" => self.edges.canny_high = parse_opt_f32(k, value)?,
            "min_hull_area" => self.min_hull_area = parse(k, value)?,
            "gt" | "groundtruth" => self.groundtruth = opt_path(value),
            "gt_pattern" => self.gt_pattern = value.to_string(),
            "out" | "output" => self.output = opt_path(value),
            "mask_pattern" => self.mask_pattern = value.to_string(),
            "report" => self.report = opt_path(value),
            "dataset" => self.dataset = (!value.is_empty()).then(|| value.to_string()),
            "averaging" => {
                self.averaging = match value.to_ascii_lowercase().as_str() {
                    "micro" => Averaging::Micro,
                    "macro" => Averaging::Macro,
                    _ => return Err(Error::Config(format!("invalid averaging {value:?}"))),
                }
            }
            "bench" => {
                self.bench = if value.is_empty() || value == "0" {
                    None
                } else {
                    Some(parse(k, value)?)
                }
            }
            "bench_methods" => {
                self.bench_methods = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "threads" => {
                self.threads = if value.is_empty() || value == "0" {
                    None
                } else {
                    Some(parse(k, value)?)
                }
            }
            "save_model" => self.save_model = opt_path(value),
            "load_model" => self.load_model = opt_path(value),
            "preset" => self.apply_text(Preset::from_str(value)?.text())?,
            _ => return Err(Error::Config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Applies every entry of a `key = value` document in order.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_entries(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    /// Builds a config from layered sources: defaults, then the preset named by
    /// `flags` or else by the file, then the remaining file entries, then the
    /// remaining flags.
    pub fn layered(file: Option<&str>, flags: &[(String, String)]) -> Result<Self> {
        let file_entries = match file {
            Some(text) => parse_entries(text)?,
            None => Vec::new(),
        };
        let is_preset = |k: &str| k.trim().eq_ignore_ascii_case("preset");
        let preset = flags
            .iter()
            .rev()
            .find(|(k, _)| is_preset(k))
            .or_else(|| file_entries.iter().rev().find(|(k, _)| is_preset(k)));

        let mut config = PipelineConfig::default();
        if let Some((k, v)) = preset {
            config.set(k, v)?;
        }
        for (k, v) in file_entries.iter().chain(flags) {
            if !is_preset(k) {
                config.set(k, v)?;
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.codebook.train_frames < 1 {
            return Err(Error::Config("train must be at least 1".into()));
        }
        self.codebook.validate()?;
        self.mog.validate()?;
        self.edge_params().validate()?;
        for (name, pattern) in [
            ("pattern", &self.pattern),
            ("gt_pattern", &self.gt_pattern),
            ("mask_pattern", &self.mask_pattern),
        ] {
            crate::imagecore::format_index(pattern, 0).map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        if let Some(last) = self.last_frame {
            if last < self.first_frame {
                return Err(Error::Config(format!(
                    "last frame {last} precedes first frame {}",
                    self.first_frame
                )));
            }
        }
        if let Some(reps) = self.bench {
            if reps < 3 {
                return Err(Error::Config("bench needs at least 3 repetitions".into()));
            }
            if self.bench_methods.is_empty() {
                return Err(Error::Config("bench_methods is empty".into()));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        if self.report.is_some() && self.groundtruth.is_none() {
            return Err(Error::Config("report requires a ground-truth directory".into()));
        }
        Ok(())
    }

    /// Label used for the dataset column of reports.
    pub fn dataset_name(&self) -> String {
        if let Some(name) = &self.dataset {
            return name.clone();
        }
        let name_of = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned());
        match name_of(&self.input) {
            Some(n) if n == "input" => self.input.parent().and_then(name_of).unwrap_or(n),
            Some(n) => n,
            None => "sequence".into(),
        }
    }
}
