//! End-to-end segmentation: train on the leading frames, then classify each
//! later frame with plain codebook subtraction, the MoG baseline, or the
//! codebook/edge fusion.
//!
//! The fused path for a frame `F` is:
//!
//! ```text
//! psi   = codebook subtraction of F
//! t1    = convex hulls of the contours of psi, filled
//! varpi = threshold(edge detector(grayscale(F)), theta)
//! t2    = convex hulls of the contours of varpi, filled
//! r     = t1 AND t2
//! ```

mod bench;
mod config;
mod run;

pub use bench::{benchmark, benchmark_frames, BenchOptions, TimingReport};
pub use config::{parse_entries, PipelineConfig, Preset};
pub use run::{run, RunSummary};

use std::fmt;
use std::str::FromStr;

use crate::codebook::CodebookModel;
use crate::edges::{self, Detector, EdgeParams, EdgeScratch};
use crate::error::{Error, Result};
use crate::geometry;
use crate::imagecore::{BinaryMask, Frame};
use crate::mog::MogModel;

/// Segmentation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Raw codebook subtraction mask.
    Codebook,
    /// Mixture-of-Gaussians baseline.
    Mog,
    /// Codebook fused with an edge detector.
    Fused(Detector),
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Codebook,
        Method::Mog,
        Method::Fused(Detector::Sobel),
        Method::Fused(Detector::Log),
        Method::Fused(Detector::Canny),
    ];

    pub fn uses_codebook(self) -> bool {
        !matches!(self, Method::Mog)
    }

    pub fn detector(self) -> Option<Detector> {
        match self {
            Method::Fused(d) => Some(d),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Codebook => f.write_str("cb"),
            Method::Mog => f.write_str("mog"),
            Method::Fused(d) => write!(f, "cb+{d}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "cb" => Ok(Method::Codebook),
            "mog" => Ok(Method::Mog),
            _ => match s.strip_prefix("cb+") {
                Some(d) => Ok(Method::Fused(d.parse()?)),
                None => Err(Error::Config(format!("unknown method {s:?}"))),
            },
        }
    }
}

/// Intermediate masks of one fused frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionStages {
    pub psi: BinaryMask,
    pub t1: BinaryMask,
    pub varpi: BinaryMask,
    pub t2: BinaryMask,
    pub r: BinaryMask,
}

/// Combines a codebook mask with the edge structure of `frame`.
pub fn fuse(psi: BinaryMask, frame: &Frame, edge: &EdgeParams, min_hull_area: usize) -> Result<FusionStages> {
    fuse_with(psi, frame, edge, min_hull_area, &mut EdgeScratch::new())
}

/// Like [`fuse`], reusing edge-detector buffers across calls.
pub fn fuse_with(
    psi: BinaryMask,
    frame: &Frame,
    edge: &EdgeParams,
    min_hull_area: usize,
    scratch: &mut EdgeScratch,
) -> Result<FusionStages> {
    let t1 = geometry::fill_hulls_min_area(&psi, min_hull_area);
    let gray = frame.to_grayscale()?;
    let response = edges::detect_with(&gray, edge, scratch)?;
    let varpi = edges::threshold(&response, edge.theta);
    scratch.recycle(response);
    let t2 = geometry::fill_hulls_min_area(&varpi, min_hull_area);
    let r = geometry::intersect(&t1, &t2)?;
    debug_assert!(r.is_subset_of(&t1) && r.is_subset_of(&t2));
    Ok(FusionStages {
        psi,
        t1,
        varpi,
        t2,
        r,
    })
}

/// Output of [`Segmenter::segment`].
#[derive(Debug, Clone)]
pub struct FrameOutput {
    /// Final foreground mask.
    pub mask: BinaryMask,
    /// Fusion intermediates; present for fused methods only.
    pub stages: Option<FusionStages>,
}

#[derive(Debug, Clone)]
enum Model {
    Codebook(CodebookModel),
    Mog(MogModel),
}

/// Stateful per-sequence segmenter. Frames must be fed in temporal order:
/// `train` for the first `N` frames, then `segment` for every later one.
#[derive(Debug, Clone)]
pub struct Segmenter {
    method: Method,
    model: Model,
    edges: EdgeParams,
    scratch: EdgeScratch,
    min_hull_area: usize,
    train_frames: u32,
    trained: u32,
}

impl Segmenter {
    pub fn new(config: &PipelineConfig, width: usize, height: usize) -> Result<Self> {
        let model = if config.method.uses_codebook() {
            Model::Codebook(CodebookModel::new(width, height, config.codebook.clone())?)
        } else {
            Model::Mog(MogModel::new(width, height, config.mog.clone())?)
        };
        Ok(Segmenter {
            method: config.method,
            model,
            edges: config.edge_params(),
            scratch: EdgeScratch::new(),
            min_hull_area: config.min_hull_area,
            train_frames: config.train_frames(),
            trained: 0,
        })
    }

    /// Resumes from a trained codebook model.
    pub fn from_codebook(config: &PipelineConfig, model: CodebookModel) -> Result<Self> {
        if !config.method.uses_codebook() {
            return Err(Error::Config(format!(
                "method {} cannot use a codebook model",
                config.method
            )));
        }
        if !model.is_finalized() {
            return Err(Error::InvalidInput("codebook model is not trained".into()));
        }
        let trained = model.frames_trained();
        Ok(Segmenter {
            method: config.method,
            model: Model::Codebook(model),
            edges: config.edge_params(),
            scratch: EdgeScratch::new(),
            min_hull_area: config.min_hull_area,
            train_frames: trained,
            trained,
        })
    }

    /// Resumes from a MoG model that has observed its training frames.
    pub fn from_mog(config: &PipelineConfig, model: MogModel) -> Result<Self> {
        if config.method != Method::Mog {
            return Err(Error::Config(format!(
                "method {} cannot use a MoG model",
                config.method
            )));
        }
        let trained = model.frames_seen();
        Ok(Segmenter {
            method: Method::Mog,
            model: Model::Mog(model),
            edges: config.edge_params(),
            scratch: EdgeScratch::new(),
            min_hull_area: config.min_hull_area,
            train_frames: trained,
            trained,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn is_trained(&self) -> bool {
        self.trained >= self.train_frames
    }

    pub fn codebook(&self) -> Option<&CodebookModel> {
        match &self.model {
            Model::Codebook(m) => Some(m),
            Model::Mog(_) => None,
        }
    }

    pub fn mog(&self) -> Option<&MogModel> {
        match &self.model {
            Model::Mog(m) => Some(m),
            Model::Codebook(_) => None,
        }
    }

    /// Feeds one training frame. The codebook is finalized after the last one.
    pub fn train(&mut self, frame: &Frame) -> Result<()> {
        if self.is_trained() {
            return Err(Error::InvalidInput("training window already complete".into()));
        }
        match &mut self.model {
            Model::Codebook(m) => m.train_frame(frame)?,
            Model::Mog(m) => {
                m.segment(frame)?;
            }
        }
        self.trained += 1;
        if self.is_trained() {
            if let Model::Codebook(m) = &mut self.model {
                m.finalize();
            }
        }
        Ok(())
    }

    /// Segments the next post-training frame.
    pub fn segment(&mut self, frame: &Frame) -> Result<FrameOutput> {
        if !self.is_trained() {
            return Err(Error::InvalidInput(
                "segment called before training finished".into(),
            ));
        }
        match (&mut self.model, self.method) {
            (Model::Mog(m), _) => Ok(FrameOutput {
                mask: m.segment(frame)?,
                stages: None,
            }),
            (Model::Codebook(m), Method::Fused(_)) => {
                let psi = m.subtract(frame)?;
                let stages = fuse_with(psi, frame, &self.edges, self.min_hull_area, &mut self.scratch)?;
                Ok(FrameOutput {
                    mask: stages.r.clone(),
                    stages: Some(stages),
                })
            }
            (Model::Codebook(m), _) => Ok(FrameOutput {
                mask: m.subtract(frame)?,
                stages: None,
            }),
        }
    }
}
