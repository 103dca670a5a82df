//! Edge responses (Sobel, Laplacian of Gaussian, Canny) and the
//! max-relative thresholding that turns a response into a mask.
//!
//! All filters clamp coordinates at the border, so every response has the
//! same size as its input.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{BinaryMask, Channels, Frame};

/// Per-pixel non-negative response magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseImage {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl ResponseImage {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "response has {} values, expected {}",
                values.len(),
                width * height
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput("responses must be non-negative".into()));
        }
        Ok(ResponseImage {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// Largest response value (the `G` of the thresholding rule).
    pub fn max(&self) -> f32 {
        self.values.iter().copied().fold(0.0, f32::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Sobel,
    Log,
    Canny,
}

impl Detector {
    pub const ALL: [Detector; 3] = [Detector::Sobel, Detector::Log, Detector::Canny];

    pub fn name(self) -> &'static str {
        match self {
            Detector::Sobel => "sobel",
            Detector::Log => "log",
            Detector::Canny => "canny",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sobel" => Ok(Detector::Sobel),
            "log" | "laplacian" => Ok(Detector::Log),
            "canny" => Ok(Detector::Canny),
            other => Err(Error::Config(format!("unknown edge detector {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams {
    pub detector: Detector,
    /// Fraction of the maximum response below it that is still kept, in `[0, 1]`.
    pub theta: f64,
    pub log_sigma: f64,
    pub canny_sigma: f64,
    /// Hysteresis thresholds on the gradient magnitude. When unset they are
    /// derived per frame as `(0.4 * otsu, otsu)`.
    pub canny_low: Option<f32>,
    pub canny_high: Option<f32>,
}

impl Default for EdgeParams {
    fn default() -> Self {
        EdgeParams {
            detector: Detector::Sobel,
            theta: 0.85,
            log_sigma: 1.4,
            canny_sigma: 1.4,
            canny_low: None,
            canny_high: None,
        }
    }
}

impl EdgeParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        if !(self.log_sigma > 0.0) || !(self.canny_sigma > 0.0) {
            return Err(Error::Config("smoothing sigmas must be positive".into()));
        }
        match (self.canny_low, self.canny_high) {
            (Some(lo), Some(hi)) if !(lo <= hi) => Err(Error::Config(format!(
                "canny low threshold {lo} exceeds high threshold {hi}"
            ))),
            (Some(_), None) | (None, Some(_)) => {
                Err(Error::Config("canny thresholds must be given together".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Reusable buffers for the edge detectors.
///
/// Detectors need several full-frame float images per call. Keeping one
/// scratch per video stream avoids reallocating (and page-faulting) them on
/// every frame; pass responses back through [`EdgeScratch::recycle`] when
/// done with them.
#[derive(Debug, Clone, Default)]
pub struct EdgeScratch {
    pool: Vec<Vec<f32>>,
    stack: Vec<usize>,
}

impl EdgeScratch {
    pub fn new() -> Self {
        Self::default()
    }

    /// A buffer of length `n` with unspecified contents.
    fn take(&mut self, n: usize) -> Vec<f32> {
        let mut v = self.pool.pop().unwrap_or_default();
        v.resize(n, 0.0);
        v
    }

    fn give(&mut self, v: Vec<f32>) {
        self.pool.push(v);
    }

    /// Returns a response's storage to the pool.
    pub fn recycle(&mut self, response: ResponseImage) {
        self.give(response.values);
    }
}

fn gray_values(gray: &Frame, dst: &mut [f32]) -> Result<()> {
    if gray.channels() != Channels::Gray {
        return Err(Error::InvalidInput(
            "edge detectors take a single-channel frame".into(),
        ));
    }
    for (d, &v) in dst.iter_mut().zip(gray.data()) {
        *d = v as f32;
    }
    Ok(())
}

/// Horizontal and vertical 3x3 Sobel derivatives with clamped borders.
///
/// Each row is computed from two separable intermediates: the vertical
/// smoothing `up + 2 mid + down` and the vertical difference `down - up`.
fn sobel_gradients(src: &[f32], w: usize, h: usize, gx: &mut [f32], gy: &mut [f32]) {
    gx.par_chunks_mut(w)
        .zip(gy.par_chunks_mut(w))
        .enumerate()
        .for_each_init(
            || (vec![0f32; w], vec![0f32; w]),
            |(smooth, diff), (y, (rx, ry))| {
                let up = &src[y.saturating_sub(1) * w..][..w];
                let mid = &src[y * w..][..w];
                let down = &src[(y + 1).min(h - 1) * w..][..w];
                for (((s, d), (u, m)), dn) in smooth
                    .iter_mut()
                    .zip(diff.iter_mut())
                    .zip(up.iter().zip(mid))
                    .zip(down)
                {
                    *s = u + 2.0 * m + dn;
                    *d = dn - u;
                }
                if w == 1 {
                    rx[0] = 0.0;
                    ry[0] = 4.0 * diff[0];
                    return;
                }
                for (o, (a, b)) in rx[1..w - 1]
                    .iter_mut()
                    .zip(smooth[2..].iter().zip(&smooth[..w - 2]))
                {
                    *o = a - b;
                }
                for (o, ((a, b), c)) in ry[1..w - 1]
                    .iter_mut()
                    .zip(diff[..w - 2].iter().zip(&diff[1..w - 1]).zip(&diff[2..]))
                {
                    *o = a + 2.0 * b + c;
                }
                rx[0] = smooth[1] - smooth[0];
                ry[0] = 3.0 * diff[0] + diff[1];
                rx[w - 1] = smooth[w - 1] - smooth[w - 2];
                ry[w - 1] = diff[w - 2] + 3.0 * diff[w - 1];
            },
        );
}

fn magnitude(gx: &[f32], gy: &[f32], dst: &mut [f32]) {
    for (d, (a, b)) in dst.iter_mut().zip(gx.iter().zip(gy)) {
        *d = (a * a + b * b).sqrt();
    }
}

fn sobel_with(gray: &Frame, scratch: &mut EdgeScratch) -> Result<ResponseImage> {
    let (w, h) = gray.dims();
    let mut src = scratch.take(w * h);
    gray_values(gray, &mut src)?;
    let mut gx = scratch.take(w * h);
    let mut gy = scratch.take(w * h);
    sobel_gradients(&src, w, h, &mut gx, &mut gy);
    magnitude(&gx, &gy, &mut src);
    scratch.give(gx);
    scratch.give(gy);
    Ok(ResponseImage {
        width: w,
        height: h,
        values: src,
    })
}

/// Sobel gradient magnitude `sqrt(gx^2 + gy^2)`.
pub fn sobel(gray: &Frame) -> Result<ResponseImage> {
    sobel_with(gray, &mut EdgeScratch::new())
}

fn kernel_radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}

/// Sampled Gaussian over `[-r, r]`, normalized to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = kernel_radius(sigma) as i64;
    let k: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.into_iter().map(|v| v / sum).collect()
}

/// Sampled second derivative of the Gaussian, shifted to zero sum.
fn gaussian_second_derivative(sigma: f64) -> Vec<f64> {
    let g = gaussian_kernel(sigma);
    let r = (g.len() / 2) as i64;
    let s2 = sigma * sigma;
    let d: Vec<f64> = g
        .iter()
        .zip(-r..=r)
        .map(|(gv, i)| ((i * i) as f64 / (s2 * s2) - 1.0 / s2) * gv)
        .collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    d.into_iter().map(|v| v - mean).collect()
}

/// The 2-D Laplacian-of-Gaussian kernel `g''(x) g(y) + g(x) g''(y)`, row-major,
/// side `2 * ceil(3 sigma) + 1`. Its entries sum to zero.
pub fn log_kernel(sigma: f64) -> Result<Vec<Vec<f64>>> {
    check_sigma(sigma)?;
    let g = gaussian_kernel(sigma);
    let d = gaussian_second_derivative(sigma);
    Ok((0..g.len())
        .map(|y| (0..g.len()).map(|x| d[x] * g[y] + g[x] * d[y]).collect())
        .collect())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "sigma must be positive, got {sigma}"
        )))
    }
}

fn convolve_rows(src: &[f32], w: usize, kernel: &[f32], out: &mut [f32]) {
    let r = kernel.len() / 2;
    out.par_chunks_mut(w)
        .zip(src.par_chunks(w))
        .for_each(|(dst, row)| {
            let clamped = |x: usize| -> f32 {
                kernel
                    .iter()
                    .enumerate()
                    .map(|(i, k)| k * row[(x + i).saturating_sub(r).min(w - 1)])
                    .sum()
            };
            if w > 2 * r {
                // Interior: one scaled, shifted copy of the row per tap.
                let inner = &mut dst[r..w - r];
                inner.fill(0.0);
                for (i, k) in kernel.iter().enumerate() {
                    for (d, v) in inner.iter_mut().zip(&row[i..i + w - 2 * r]) {
                        *d += k * v;
                    }
                }
                for x in (0..r).chain(w - r..w) {
                    dst[x] = clamped(x);
                }
            } else {
                for (x, d) in dst.iter_mut().enumerate() {
                    *d = clamped(x);
                }
            }
        });
}

/// Vertical convolution; adds into `out` when `accumulate` is set.
fn convolve_cols(src: &[f32], w: usize, h: usize, kernel: &[f32], out: &mut [f32], accumulate: bool) {
    let r = kernel.len() / 2;
    out.par_chunks_mut(w).enumerate().for_each(|(y, dst)| {
        if !accumulate {
            dst.fill(0.0);
        }
        for (i, k) in kernel.iter().enumerate() {
            let yy = (y + i).saturating_sub(r).min(h - 1);
            let row = &src[yy * w..][..w];
            for (d, v) in dst.iter_mut().zip(row) {
                *d += k * v;
            }
        }
    });
}

fn to_f32(k: &[f64]) -> Vec<f32> {
    k.iter().map(|&v| v as f32).collect()
}

/// Signed LoG response into a pooled buffer.
fn log_signed_with(gray: &Frame, sigma: f64, scratch: &mut EdgeScratch) -> Result<Vec<f32>> {
    check_sigma(sigma)?;
    let (w, h) = gray.dims();
    let g = to_f32(&gaussian_kernel(sigma));
    let d = to_f32(&gaussian_second_derivative(sigma));
    let mut src = scratch.take(w * h);
    gray_values(gray, &mut src)?;
    let mut tmp = scratch.take(w * h);
    let mut out = scratch.take(w * h);
    convolve_rows(&src, w, &d, &mut tmp);
    convolve_cols(&tmp, w, h, &g, &mut out, false);
    convolve_rows(&src, w, &g, &mut tmp);
    convolve_cols(&tmp, w, h, &d, &mut out, true);
    scratch.give(src);
    scratch.give(tmp);
    Ok(out)
}

/// Signed Laplacian-of-Gaussian response, evaluated separably.
pub fn log_signed(gray: &Frame, sigma: f64) -> Result<Vec<f32>> {
    log_signed_with(gray, sigma, &mut EdgeScratch::new())
}

fn log_filter_with(gray: &Frame, sigma: f64, scratch: &mut EdgeScratch) -> Result<ResponseImage> {
    let mut values = log_signed_with(gray, sigma, scratch)?;
    for v in &mut values {
        *v = v.abs();
    }
    Ok(ResponseImage {
        width: gray.width(),
        height: gray.height(),
        values,
    })
}

/// Absolute Laplacian-of-Gaussian response.
pub fn log_filter(gray: &Frame, sigma: f64) -> Result<ResponseImage> {
    log_filter_with(gray, sigma, &mut EdgeScratch::new())
}

fn gaussian_blur_with(gray: &Frame, sigma: f64, scratch: &mut EdgeScratch) -> Result<Vec<f32>> {
    check_sigma(sigma)?;
    let (w, h) = gray.dims();
    let g = to_f32(&gaussian_kernel(sigma));
    let mut src = scratch.take(w * h);
    gray_values(gray, &mut src)?;
    let mut tmp = scratch.take(w * h);
    convolve_rows(&src, w, &g, &mut tmp);
    convolve_cols(&tmp, w, h, &g, &mut src, false);
    scratch.give(tmp);
    Ok(src)
}

/// Gaussian smoothing with clamped borders.
pub fn gaussian_blur(gray: &Frame, sigma: f64) -> Result<Vec<f32>> {
    gaussian_blur_with(gray, sigma, &mut EdgeScratch::new())
}

/// Otsu's threshold over `values` binned into 256 levels on `[0, max]`,
/// returned in the units of `values`.
pub fn otsu_threshold(values: &[f32]) -> f32 {
    let max = values.iter().copied().fold(0.0f32, f32::max);
    if max <= 0.0 {
        return 0.0;
    }
    let scale = 255.0 / max;
    let mut hist = [0u64; 256];
    for &v in values {
        hist[((v * scale) as usize).min(255)] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w_b, mut sum_b) = (0.0f64, 0.0f64);
    let (mut best, mut best_var) = (0usize, -1.0f64);
    for (i, &c) in hist.iter().enumerate() {
        w_b += c as f64;
        if w_b == 0.0 {
            continue;
        }
        let w_f = total - w_b;
        if w_f == 0.0 {
            break;
        }
        sum_b += i as f64 * c as f64;
        let m_b = sum_b / w_b;
        let m_f = (sum_all - sum_b) / w_f;
        let var = w_b * w_f * (m_b - m_f) * (m_b - m_f);
        if var > best_var {
            best_var = var;
            best = i;
        }
    }
    // Upper edge of the last background bin.
    (best + 1) as f32 / scale
}

/// Thins the gradient magnitude to ridge pixels along the quantized
/// gradient direction. Of two equal neighbours across the ridge the one on
/// the positive side survives.
/// Pixels below `floor` are cleared without inspecting their neighbours.
fn non_maximum_suppression(
    mag: &[f32],
    gx: &[f32],
    gy: &[f32],
    w: usize,
    h: usize,
    floor: f32,
    out: &mut [f32],
) {
    // tan(22.5deg)
    const TAN_22_5: f32 = 0.414_213_57;
    // Neighbour step across the ridge for each quantized direction:
    // horizontal, vertical, main diagonal, anti-diagonal.
    const STEPS: [(i64, i64); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];
    let wi = w as isize;
    let offsets = [1, wi, wi + 1, 1 - wi];
    let sector = |dx: f32, dy: f32| -> usize {
        let (ax, ay) = (dx.abs(), dy.abs());
        if ay <= TAN_22_5 * ax {
            0
        } else if ax <= TAN_22_5 * ay {
            1
        } else if (dx > 0.0) == (dy > 0.0) {
            2
        } else {
            3
        }
    };
    let at = |x: i64, y: i64| -> f32 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let base = y * w;
        let interior_row = y >= 1 && y + 1 < h;
        for (x, o) in row.iter_mut().enumerate() {
            let i = base + x;
            let m = mag[i];
            *o = 0.0;
            if m <= 0.0 || m < floor {
                continue;
            }
            let s = sector(gx[i], gy[i]);
            let (plus, minus) = if interior_row && x >= 1 && x + 1 < w {
                let off = offsets[s];
                (mag[(i as isize + off) as usize], mag[(i as isize - off) as usize])
            } else {
                let (ox, oy) = STEPS[s];
                let (xi, yi) = (x as i64, y as i64);
                (at(xi + ox, yi + oy), at(xi - ox, yi - oy))
            };
            if m > plus && m >= minus {
                *o = m;
            }
        }
    });
}

/// Keeps ridge pixels at or above `high` and every ridge pixel at or above
/// `low` 8-connected to them; output is 0 or 255.
fn hysteresis(
    thin: &[f32],
    w: usize,
    h: usize,
    low: f32,
    high: f32,
    out: &mut [f32],
    stack: &mut Vec<usize>,
) {
    out.fill(0.0);
    stack.clear();
    for (i, &m) in thin.iter().enumerate() {
        if m > 0.0 && m >= high {
            out[i] = 255.0;
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if out[j] == 0.0 && thin[j] > 0.0 && thin[j] >= low {
                    out[j] = 255.0;
                    stack.push(j);
                }
            }
        }
    }
}

fn canny_with(gray: &Frame, params: &EdgeParams, scratch: &mut EdgeScratch) -> Result<ResponseImage> {
    params.validate()?;
    let (w, h) = gray.dims();
    let blurred = gaussian_blur_with(gray, params.canny_sigma, scratch)?;
    let mut gx = scratch.take(w * h);
    let mut gy = scratch.take(w * h);
    sobel_gradients(&blurred, w, h, &mut gx, &mut gy);
    let mut mag = blurred;
    magnitude(&gx, &gy, &mut mag);
    let (low, high) = match (params.canny_low, params.canny_high) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => {
            let t = otsu_threshold(&mag);
            (0.4 * t, t)
        }
    };
    let mut thin = scratch.take(w * h);
    non_maximum_suppression(&mag, &gx, &gy, w, h, low.min(high), &mut thin);
    let mut stack = std::mem::take(&mut scratch.stack);
    hysteresis(&thin, w, h, low, high, &mut mag, &mut stack);
    scratch.stack = stack;
    scratch.give(gx);
    scratch.give(gy);
    scratch.give(thin);
    Ok(ResponseImage {
        width: w,
        height: h,
        values: mag,
    })
}

/// Canny edge map: smoothing, Sobel gradients, non-maximum suppression and
/// hysteresis. Output values are 0 or 255.
pub fn canny(gray: &Frame, params: &EdgeParams) -> Result<ResponseImage> {
    canny_with(gray, params, &mut EdgeScratch::new())
}

/// Runs the configured detector on a grayscale frame.
pub fn detect(gray: &Frame, params: &EdgeParams) -> Result<ResponseImage> {
    detect_with(gray, params, &mut EdgeScratch::new())
}

/// Like [`detect`], drawing intermediate buffers from `scratch`.
pub fn detect_with(gray: &Frame, params: &EdgeParams, scratch: &mut EdgeScratch) -> Result<ResponseImage> {
    match params.detector {
        Detector::Sobel => sobel_with(gray, scratch),
        Detector::Log => log_filter_with(gray, params.log_sigma, scratch),
        Detector::Canny => canny_with(gray, params, scratch),
    }
}

/// Keeps pixels whose response is at least `G * (1 - theta)`, where `G` is
/// the image maximum. An all-zero response yields an empty mask.
pub fn threshold(response: &ResponseImage, theta: f64) -> BinaryMask {
    let g = response.max() as f64;
    let mut mask = BinaryMask::new(response.width, response.height);
    if g <= 0.0 {
        return mask;
    }
    // Guard the >= comparison against rounding in G * (1 - theta).
    let phi = g * (1.0 - theta) - g * 1e-12;
    // Smallest f32 not below phi, so `v >= phi32` agrees with `v as f64 >= phi`.
    let mut phi32 = phi as f32;
    if (phi32 as f64) < phi {
        phi32 = phi32.next_up();
    }
    for (label, &v) in mask.labels_mut().iter_mut().zip(&response.values) {
        *label = v >= phi32;
    }
    mask
}
