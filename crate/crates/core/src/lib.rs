//! Codebook background subtraction refined with edge detection.
//!
//! A per-pixel codebook model produces a raw foreground mask. The convex
//! hulls of its contours are intersected with the filled hulls of a
//! thresholded edge map (Sobel, Laplacian of Gaussian or Canny) computed on
//! the same frame, which removes most false positives caused by dynamic
//! background. A Mixture-of-Gaussians segmenter is included as a baseline,
//! together with per-pixel evaluation against changedetection.net style
//! ground truth and a synthetic sequence generator.

pub mod codebook;
pub mod edges;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod imagecore;
pub mod model_io;
pub mod mog;
pub mod pipeline;
pub mod synthgen;

pub use error::{Error, Result};
