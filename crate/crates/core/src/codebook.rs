//! Per-pixel codebook background model.
//!
//! Every pixel owns a short list of codewords, each a mean RGB vector with
//! brightness bounds and access bookkeeping. Training builds the lists from
//! the first `N` frames; afterwards [`CodebookModel::subtract`] classifies
//! new frames and keeps adapting, staging unseen colors in a per-pixel cache
//! until they recur often enough to be accepted as background.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::imagecore::{BinaryMask, Frame};

/// Tuning constants of the codebook model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookParams {
    /// Lower brightness factor; a match needs `I >= alpha * I_max`.
    pub alpha: f64,
    /// Upper brightness factor; a match needs `I <= min(beta * I_max, I_min / alpha)`.
    pub beta: f64,
    /// Largest accepted color distortion, in 8-bit RGB units.
    pub epsilon: f64,
    /// Number of leading frames used for training.
    pub train_frames: u32,
    /// Words whose wrapped MNRL exceeds `mnrl_prune_factor * N` are dropped after training.
    pub mnrl_prune_factor: f64,
    /// A cache word matched this many times moves into the main codebook.
    pub cache_promote_freq: u32,
    /// A cache word unmatched for more than this many frames is discarded.
    pub cache_stale_frames: u32,
}

impl Default for CodebookParams {
    fn default() -> Self {
        CodebookParams {
            alpha: 0.4,
            beta: 1.25,
            epsilon: 10.0,
            train_frames: 100,
            mnrl_prune_factor: 0.5,
            cache_promote_freq: 50,
            cache_stale_frames: 50,
        }
    }
}

impl CodebookParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.beta > 1.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("beta must be > 1, got {}", self.beta)));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if self.train_frames == 0 {
            return Err(Error::Config("train_frames must be at least 1".into()));
        }
        if !(self.mnrl_prune_factor >= 0.0) {
            return Err(Error::Config(format!(
                "mnrl_prune_factor must be >= 0, got {}",
                self.mnrl_prune_factor
            )));
        }
        if self.cache_promote_freq == 0 {
            return Err(Error::Config("cache_promote_freq must be at least 1".into()));
        }
        Ok(())
    }
}

/// `sqrt(R^2 + G^2 + B^2)`.
#[inline]
pub fn brightness(pixel: [f64; 3]) -> f64 {
    norm_sq(pixel).sqrt()
}

#[inline]
fn norm_sq([r, g, b]: [f64; 3]) -> f64 {
    r * r + g * g + b * b
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Distance from `pixel` to the line through the origin along `word`.
///
/// Fails when `word` is the zero vector, for which the projection is undefined.
pub fn color_distortion(pixel: [f64; 3], word: [f64; 3]) -> Result<f64> {
    let w2 = norm_sq(word);
    if w2 == 0.0 {
        return Err(Error::Domain(
            "color distortion against a zero codeword vector".into(),
        ));
    }
    Ok(distortion_with(pixel, norm_sq(pixel), word, w2))
}

#[inline]
fn distortion_with(pixel: [f64; 3], p2: f64, word: [f64; 3], w2: f64) -> f64 {
    if w2 == 0.0 {
        // A black codeword spans no direction; its distance is the pixel norm.
        return p2.sqrt();
    }
    let k = dot(pixel, word) / w2;
    let r = [
        pixel[0] - k * word[0],
        pixel[1] - k * word[1],
        pixel[2] - k * word[2],
    ];
    norm_sq(r).sqrt()
}

/// One background color prototype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codeword {
    pub v: [f64; 3],
    pub i_min: f64,
    pub i_max: f64,
    pub freq: u32,
    /// Maximum negative run length: longest stretch of frames without a match.
    pub mnrl: u32,
    pub first_access: u32,
    pub last_access: u32,
}

impl Codeword {
    /// A fresh word for `pixel` first seen at frame `t` (1-based).
    pub fn new(pixel: [f64; 3], i: f64, t: u32) -> Self {
        debug_assert!(t >= 1);
        Codeword {
            v: pixel,
            i_min: i,
            i_max: i,
            freq: 1,
            mnrl: t.saturating_sub(1),
            first_access: t,
            last_access: t,
        }
    }

    /// Folds a matched observation into the word.
    #[inline]
    pub fn absorb(&mut self, pixel: [f64; 3], i: f64, t: u32) {
        debug_assert!(t >= self.last_access);
        let f = self.freq as f64;
        let f1 = f + 1.0;
        for c in 0..3 {
            self.v[c] = (f * self.v[c] + pixel[c]) / f1;
        }
        self.i_min = self.i_min.min(i);
        self.i_max = self.i_max.max(i);
        self.freq += 1;
        self.mnrl = self.mnrl.max(t - self.last_access);
        self.last_access = t;
    }

    /// Brightness interval `[alpha * I_max, min(beta * I_max, I_min / alpha)]`.
    pub fn brightness_bounds(&self, params: &CodebookParams) -> (f64, f64) {
        let lo = params.alpha * self.i_max;
        let hi = (params.beta * self.i_max).min(self.i_min / params.alpha);
        (lo, hi)
    }
}

/// Creates the word for an unmatched observation.
pub fn create_codeword(pixel: [f64; 3], i: f64, t: u32) -> Codeword {
    Codeword::new(pixel, i, t)
}

/// Returns `word` updated with a matched observation at frame `t`.
pub fn update_codeword(word: &Codeword, pixel: [f64; 3], i: f64, t: u32) -> Codeword {
    let mut w = word.clone();
    w.absorb(pixel, i, t);
    w
}

#[inline]
pub fn brightness_match(i: f64, word: &Codeword, params: &CodebookParams) -> bool {
    let (lo, hi) = word.brightness_bounds(params);
    lo <= i && i <= hi
}

/// Index of the first word that matches both the color and brightness tests.
#[inline]
pub fn find_match(words: &[Codeword], pixel: [f64; 3], i: f64, params: &CodebookParams) -> Option<usize> {
    let p2 = i * i;
    words.iter().position(|w| {
        brightness_match(i, w, params) && distortion_with(pixel, p2, w.v, norm_sq(w.v)) <= params.epsilon
    })
}

/// Main and cache codeword lists for one pixel position.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PixelCodebook {
    pub words: Vec<Codeword>,
    pub cache: Vec<Codeword>,
}

impl PixelCodebook {
    /// Training step at frame `t`: update the first matching word or append a new one.
    #[inline]
    pub fn train(&mut self, pixel: [f64; 3], t: u32, params: &CodebookParams) {
        let i = brightness(pixel);
        match find_match(&self.words, pixel, i, params) {
            Some(k) => self.words[k].absorb(pixel, i, t),
            None => self.words.push(Codeword::new(pixel, i, t)),
        }
    }

    /// Wraps each word's MNRL around the training window of `n` frames and
    /// prunes words that stayed absent too long.
    pub fn finalize(&mut self, n: u32, params: &CodebookParams) {
        for w in &mut self.words {
            let wrap = (n - w.last_access) + w.first_access - 1;
            w.mnrl = w.mnrl.max(wrap);
        }
        let limit = params.mnrl_prune_factor * n as f64;
        self.words.retain(|w| (w.mnrl as f64) <= limit);
    }

    /// Post-training classification at frame `t`. Returns `true` for foreground.
    #[inline]
    pub fn subtract(&mut self, pixel: [f64; 3], t: u32, params: &CodebookParams) -> bool {
        let i = brightness(pixel);
        let foreground = match find_match(&self.words, pixel, i, params) {
            Some(k) => {
                self.words[k].absorb(pixel, i, t);
                false
            }
            None => {
                match find_match(&self.cache, pixel, i, params) {
                    Some(k) => self.cache[k].absorb(pixel, i, t),
                    None => self.cache.push(Codeword::new(pixel, i, t)),
                }
                true
            }
        };
        if !self.cache.is_empty() {
            self.maintain_cache(t, params);
        }
        foreground
    }

    fn maintain_cache(&mut self, t: u32, params: &CodebookParams) {
        self.cache
            .retain(|w| t - w.last_access <= params.cache_stale_frames);
        if self.cache.iter().any(|w| w.freq >= params.cache_promote_freq) {
            let (promoted, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut self.cache)
                .into_iter()
                .partition(|w| w.freq >= params.cache_promote_freq);
            self.words.extend(promoted);
            self.cache = kept;
        }
    }
}

#[inline]
fn to_f64(p: &[u8; 3]) -> [f64; 3] {
    [p[0] as f64, p[1] as f64, p[2] as f64]
}

/// Codebooks for every pixel of a fixed-size frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookModel {
    width: usize,
    height: usize,
    params: CodebookParams,
    pixels: Vec<PixelCodebook>,
    frames_trained: u32,
    finalized: bool,
    last_frame: u32,
}

impl CodebookModel {
    pub fn new(width: usize, height: usize, params: CodebookParams) -> Result<Self> {
        params.validate()?;
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("model dimensions must be positive".into()));
        }
        Ok(CodebookModel {
            width,
            height,
            params,
            pixels: vec![PixelCodebook::default(); width * height],
            frames_trained: 0,
            finalized: false,
            last_frame: 0,
        })
    }

    /// Trains on `frames` (which must hold exactly `params.train_frames`
    /// frames) and finalizes the model.
    pub fn train<'a, I>(frames: I, params: CodebookParams) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Frame>,
    {
        let mut frames = frames.into_iter().peekable();
        let first = frames
            .peek()
            .ok_or_else(|| Error::InvalidInput("cannot train on an empty sequence".into()))?;
        let mut model = CodebookModel::new(first.width(), first.height(), params)?;
        for frame in frames {
            model.train_frame(frame)?;
        }
        if model.frames_trained != model.params.train_frames {
            return Err(Error::InvalidInput(format!(
                "expected {} training frames, got {}",
                model.params.train_frames, model.frames_trained
            )));
        }
        model.finalize();
        Ok(model)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn params(&self) -> &CodebookParams {
        &self.params
    }

    pub fn frames_trained(&self) -> u32 {
        self.frames_trained
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    /// Index of the most recent frame seen, training or subtraction.
    pub fn last_frame(&self) -> u32 {
        self.last_frame
    }

    pub fn pixel(&self, x: usize, y: usize) -> &PixelCodebook {
        &self.pixels[y * self.width + x]
    }

    pub fn pixels(&self) -> &[PixelCodebook] {
        &self.pixels
    }

    pub fn total_words(&self) -> usize {
        self.pixels.iter().map(|p| p.words.len()).sum()
    }

    /// Feeds the next training frame.
    pub fn train_frame(&mut self, frame: &Frame) -> Result<()> {
        if self.finalized {
            return Err(Error::InvalidInput("model is already finalized".into()));
        }
        check_dims(self.dims(), frame.dims())?;
        let pixels = frame.rgb_pixels()?;
        let t = self.frames_trained + 1;
        let params = &self.params;
        self.pixels
            .par_iter_mut()
            .with_min_len(256)
            .zip(pixels.par_iter())
            .for_each(|(cb, p)| cb.train(to_f64(p), t, params));
        self.frames_trained = t;
        self.last_frame = t;
        Ok(())
    }

    /// Applies MNRL wrap-around and pruning. Idempotent.
    pub fn finalize(&mut self) {
        if self.finalized {
            return;
        }
        let n = self.frames_trained;
        let params = &self.params;
        self.pixels
            .par_iter_mut()
            .with_min_len(256)
            .for_each(|cb| cb.finalize(n, params));
        self.finalized = true;
    }

    /// Background subtraction of `frame`, the model's next frame after training.
    ///
    /// Matched words adapt, and unmatched pixels are staged in the cache layer.
    pub fn subtract(&mut self, frame: &Frame) -> Result<BinaryMask> {
        let t = self.last_frame + 1;
        self.subtract_at(frame, t)
    }

    /// Like [`subtract`](Self::subtract) with an explicit frame index `t`,
    /// which must come after every frame already seen.
    pub fn subtract_at(&mut self, frame: &Frame, t: u32) -> Result<BinaryMask> {
        if !self.finalized {
            return Err(Error::InvalidInput("subtraction before training finished".into()));
        }
        if t <= self.last_frame {
            return Err(Error::InvalidInput(format!(
                "frame index {t} does not follow frame {}",
                self.last_frame
            )));
        }
        check_dims(self.dims(), frame.dims())?;
        let pixels = frame.rgb_pixels()?;
        let mut mask = BinaryMask::new(self.width, self.height);
        let params = &self.params;
        self.pixels
            .par_iter_mut()
            .with_min_len(256)
            .zip(pixels.par_iter())
            .zip(mask.labels_mut().par_iter_mut())
            .for_each(|((cb, p), label)| *label = cb.subtract(to_f64(p), t, params));
        self.last_frame = t;
        Ok(mask)
    }

    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}
