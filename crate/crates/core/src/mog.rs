//! Mixture-of-Gaussians baseline (online Stauffer–Grimson update).
//!
//! Each pixel keeps up to `K` isotropic RGB Gaussians ordered by
//! `weight / sigma`. The leading components whose weights first exceed `T`
//! form the background.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::imagecore::{BinaryMask, Frame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MogParams {
    /// Weight learning rate. Zero freezes the model entirely.
    pub learning_rate: f64,
    /// Mean/variance blending rate for the matched component.
    pub second_rate: f64,
    pub component_count: usize,
    pub background_fraction: f64,
    /// A pixel matches when its distance to the mean is within this many sigmas.
    pub match_sigma: f64,
    pub initial_variance: f64,
    /// Weight given to a component that replaces the weakest one.
    pub initial_weight: f64,
    pub min_variance: f64,
}

impl Default for MogParams {
    fn default() -> Self {
        MogParams {
            learning_rate: 0.01,
            second_rate: 0.001,
            component_count: 5,
            background_fraction: 0.8,
            match_sigma: 2.5,
            initial_variance: 225.0,
            initial_weight: 0.05,
            min_variance: 4.0,
        }
    }
}

impl MogParams {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..1.0).contains(&v);
        if !in_unit(self.learning_rate) {
            return Err(Error::Config(format!(
                "learning rate must lie in [0, 1), got {}",
                self.learning_rate
            )));
        }
        if !in_unit(self.second_rate) {
            return Err(Error::Config(format!(
                "second rate must lie in [0, 1), got {}",
                self.second_rate
            )));
        }
        if self.component_count == 0 {
            return Err(Error::Config("component count must be at least 1".into()));
        }
        if !(self.background_fraction > 0.0 && self.background_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "background fraction must lie in (0, 1], got {}",
                self.background_fraction
            )));
        }
        if !(self.match_sigma > 0.0) {
            return Err(Error::Config("match sigma multiplier must be positive".into()));
        }
        if !(self.initial_variance > 0.0 && self.min_variance > 0.0) {
            return Err(Error::Config("variances must be positive".into()));
        }
        if !(self.initial_weight > 0.0 && self.initial_weight <= 1.0) {
            return Err(Error::Config("initial weight must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: [f64; 3],
    pub variance: f64,
    pub weight: f64,
}

impl GaussianComponent {
    fn fitness(&self) -> f64 {
        self.weight / self.variance.sqrt()
    }

    fn dist_sq(&self, p: [f64; 3]) -> f64 {
        let d = [p[0] - self.mean[0], p[1] - self.mean[1], p[2] - self.mean[2]];
        d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Foreground,
    Background,
}

/// Classifies `pixel` against a pixel's mixture and updates it in place.
///
/// `components` is kept sorted by descending `weight / sigma`.
pub fn mog_observe(
    pixel: [f64; 3],
    components: &mut Vec<GaussianComponent>,
    params: &MogParams,
) -> Classification {
    let lambda2 = params.match_sigma * params.match_sigma;
    let matched = components
        .iter()
        .position(|c| c.dist_sq(pixel) <= lambda2 * c.variance);

    if params.learning_rate == 0.0 {
        return classify(components, matched, params);
    }

    let alpha = params.learning_rate;
    let rho = params.second_rate;
    let matched = match matched {
        Some(k) => {
            for (j, c) in components.iter_mut().enumerate() {
                c.weight *= 1.0 - alpha;
                if j == k {
                    c.weight += alpha;
                }
            }
            let c = &mut components[k];
            for ch in 0..3 {
                c.mean[ch] = (1.0 - rho) * c.mean[ch] + rho * pixel[ch];
            }
            c.variance = ((1.0 - rho) * c.variance + rho * c.dist_sq(pixel)).max(params.min_variance);
            Some(k)
        }
        None => {
            for c in components.iter_mut() {
                c.weight *= 1.0 - alpha;
            }
            if components.len() < params.component_count {
                // A free slot behaves like a zero-weight component that just matched.
                components.push(GaussianComponent {
                    mean: pixel,
                    variance: params.initial_variance,
                    weight: alpha,
                });
            } else {
                let weakest = weakest_index(components);
                components[weakest] = GaussianComponent {
                    mean: pixel,
                    variance: params.initial_variance,
                    weight: params.initial_weight,
                };
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if total > 1.0 {
                    for c in components.iter_mut() {
                        c.weight /= total;
                    }
                }
            }
            None
        }
    };

    // Track the matched component through the re-sort.
    let matched = matched.map(|k| {
        let key = components[k].clone();
        sort_components(components);
        components.iter().position(|c| *c == key).unwrap_or(0)
    });
    if matched.is_none() {
        sort_components(components);
    }
    classify(components, matched, params)
}

fn weakest_index(components: &[GaussianComponent]) -> usize {
    let mut idx = 0;
    for (j, c) in components.iter().enumerate() {
        if c.weight < components[idx].weight {
            idx = j;
        }
    }
    idx
}

fn sort_components(components: &mut [GaussianComponent]) {
    components.sort_by(|a, b| b.fitness().total_cmp(&a.fitness()));
}

/// Number of leading components that make up the background model.
fn background_count(components: &[GaussianComponent], params: &MogParams) -> usize {
    let mut acc = 0.0;
    for (j, c) in components.iter().enumerate() {
        acc += c.weight;
        if acc > params.background_fraction {
            return j + 1;
        }
    }
    0
}

fn classify(components: &[GaussianComponent], matched: Option<usize>, params: &MogParams) -> Classification {
    match matched {
        Some(k) if k < background_count(components, params) => Classification::Background,
        _ => Classification::Foreground,
    }
}

/// Per-pixel mixtures for a whole frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MogModel {
    width: usize,
    height: usize,
    params: MogParams,
    pixels: Vec<Vec<GaussianComponent>>,
    frames_seen: u32,
}

impl MogModel {
    pub fn new(width: usize, height: usize, params: MogParams) -> Result<Self> {
        params.validate()?;
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("model dimensions must be positive".into()));
        }
        let k = params.component_count;
        Ok(MogModel {
            width,
            height,
            params,
            pixels: vec![Vec::with_capacity(k); width * height],
            frames_seen: 0,
        })
    }

    pub fn params(&self) -> &MogParams {
        &self.params
    }

    pub fn frames_seen(&self) -> u32 {
        self.frames_seen
    }

    pub fn components(&self, x: usize, y: usize) -> &[GaussianComponent] {
        &self.pixels[y * self.width + x]
    }

    /// Observes `frame`, updating every pixel, and returns the foreground mask.
    pub fn segment(&mut self, frame: &Frame) -> Result<BinaryMask> {
        check_dims((self.width, self.height), frame.dims())?;
        let pixels = frame.rgb_pixels()?;
        let mut mask = BinaryMask::new(self.width, self.height);
        let params = &self.params;
        self.pixels
            .par_iter_mut()
            .with_min_len(256)
            .zip(pixels.par_iter())
            .zip(mask.labels_mut().par_iter_mut())
            .for_each(|((comps, p), label)| {
                let px = [p[0] as f64, p[1] as f64, p[2] as f64];
                *label = mog_observe(px, comps, params) == Classification::Foreground;
            });
        self.frames_seen += 1;
        Ok(mask)
    }
}
