//! Deterministic synthetic sequences with exact ground truth.
//!
//! A [`SceneSpec`] describes a background (constant, two-color flicker or
//! seeded per-channel noise), an optional illumination ramp and a list of
//! solid moving shapes. Every frame is a pure function of the spec and its
//! index, so frames can be rendered independently and in any order.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{self, BinaryMask, Channels, Frame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Background {
    Constant {
        color: [u8; 3],
    },
    /// Alternates between two colors every `period` frames.
    Flicker {
        colors: [[u8; 3]; 2],
        period: u32,
    },
    /// Uniform integer jitter in `[-amplitude, amplitude]` per channel around `base`.
    Noise {
        base: [u8; 3],
        amplitude: u8,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// Axis-aligned rectangle; the object position is its top-left corner.
    Rect { width: u32, height: u32 },
    /// Disk of the given radius; the object position is its center.
    Disk { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub shape: Shape,
    pub color: [u8; 3],
    /// Position at frame `enter`.
    pub start: [i64; 2],
    /// Pixels per frame.
    #[serde(default)]
    pub velocity: [i64; 2],
    #[serde(default = "first_frame")]
    pub enter: u32,
    /// Last frame the object is visible in; unbounded when absent.
    #[serde(default)]
    pub exit: Option<u32>,
}

fn first_frame() -> u32 {
    1
}

impl SceneObject {
    fn visible(&self, t: u32) -> bool {
        t >= self.enter && self.exit.is_none_or(|e| t <= e)
    }

    fn position(&self, t: u32) -> (i64, i64) {
        let dt = (t - self.enter) as i64;
        (
            self.start[0] + self.velocity[0] * dt,
            self.start[1] + self.velocity[1] * dt,
        )
    }

    /// Calls `f(x, y)` for every in-frame pixel the object covers at frame `t`.
    fn for_each_pixel(&self, t: u32, w: usize, h: usize, mut f: impl FnMut(usize, usize)) {
        if !self.visible(t) {
            return;
        }
        let (px, py) = self.position(t);
        let (w, h) = (w as i64, h as i64);
        match self.shape {
            Shape::Rect { width, height } => {
                for y in py.max(0)..(py + height as i64).min(h) {
                    for x in px.max(0)..(px + width as i64).min(w) {
                        f(x as usize, y as usize);
                    }
                }
            }
            Shape::Disk { radius } => {
                let r = radius.ceil() as i64;
                let r2 = radius * radius;
                for y in (py - r).max(0)..=(py + r).min(h - 1) {
                    for x in (px - r).max(0)..=(px + r).min(w - 1) {
                        let (dx, dy) = ((x - px) as f64, (y - py) as f64);
                        if dx * dx + dy * dy <= r2 {
                            f(x as usize, y as usize);
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub frames: u32,
    pub background: Background,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
    /// Frame `t` is scaled by `1 + illumination_ramp * (t - 1)`.
    #[serde(default)]
    pub illumination_ramp: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return Err(Error::InvalidInput(format!(
                "degenerate scene: {}x{} with {} frames",
                self.width, self.height, self.frames
            )));
        }
        if let Background::Flicker { period: 0, .. } = self.background {
            return Err(Error::InvalidInput("flicker period must be positive".into()));
        }
        if !self.illumination_ramp.is_finite() {
            return Err(Error::InvalidInput("illumination ramp must be finite".into()));
        }
        for (i, o) in self.objects.iter().enumerate() {
            let ok = match o.shape {
                Shape::Rect { width, height } => width > 0 && height > 0,
                Shape::Disk { radius } => radius >= 0.0 && radius.is_finite(),
            };
            if !ok {
                return Err(Error::InvalidInput(format!("object {i} has an empty shape")));
            }
            if o.enter == 0 || o.exit.is_some_and(|e| e < o.enter) {
                return Err(Error::InvalidInput(format!(
                    "object {i} has an invalid frame range"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SceneSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("scene spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Renders frame `t` (1-based) and its truth mask.
    pub fn render(&self, t: u32) -> Result<(Frame, BinaryMask)> {
        self.validate()?;
        if t == 0 || t > self.frames {
            return Err(Error::InvalidInput(format!(
                "frame {t} outside 1..={}",
                self.frames
            )));
        }
        let (w, h) = (self.width, self.height);
        let mut data = vec![0u8; w * h * 3];
        match &self.background {
            Background::Constant { color } => fill(&mut data, *color),
            Background::Flicker { colors, period } => {
                fill(&mut data, colors[(((t - 1) / period) % 2) as usize])
            }
            Background::Noise { base, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(t as u64);
                let a = *amplitude as i16;
                for px in data.chunks_exact_mut(3) {
                    for c in 0..3 {
                        let j: i16 = rng.gen_range(-a..=a);
                        px[c] = (base[c] as i16 + j).clamp(0, 255) as u8;
                    }
                }
            }
        }
        let mut truth = BinaryMask::new(w, h);
        for o in &self.objects {
            o.for_each_pixel(t, w, h, |x, y| {
                data[(y * w + x) * 3..][..3].copy_from_slice(&o.color);
                truth.set(x, y, true);
            });
        }
        if self.illumination_ramp != 0.0 {
            let k = 1.0 + self.illumination_ramp * (t - 1) as f64;
            for v in &mut data {
                *v = (*v as f64 * k).round().clamp(0.0, 255.0) as u8;
            }
        }
        Ok((Frame::new(w, h, Channels::Rgb, data)?, truth))
    }
}

fn fill(data: &mut [u8], color: [u8; 3]) {
    for px in data.chunks_exact_mut(3) {
        px.copy_from_slice(&color);
    }
}

/// Every frame of the scene with its truth mask.
pub fn generate(spec: &SceneSpec) -> Result<(Vec<Frame>, Vec<BinaryMask>)> {
    spec.validate()?;
    let mut frames = Vec::with_capacity(spec.frames as usize);
    let mut truths = Vec::with_capacity(spec.frames as usize);
    for t in 1..=spec.frames {
        let (f, m) = spec.render(t)?;
        frames.push(f);
        truths.push(m);
    }
    Ok((frames, truths))
}

/// Quality used for synthetic JPEG input frames.
pub const JPEG_QUALITY: u8 = 95;

/// Writes the scene as an input sequence plus `gt` masks under `out`.
///
/// Input frames use `input_pattern` (JPEG or PNG by extension); truth masks
/// are written as `gt%06d.png` in `out/groundtruth` with a `temporalROI.txt`
/// covering the whole sequence.
pub fn write_scene(spec: &SceneSpec, out: &Path, input_pattern: &str) -> Result<()> {
    spec.validate()?;
    let input_dir = out.join("input");
    let gt_dir = out.join("groundtruth");
    for d in [&input_dir, &gt_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    for t in 1..=spec.frames {
        let (frame, truth) = spec.render(t)?;
        let path = input_dir.join(imagecore::format_index(input_pattern, t)?);
        write_frame(&frame, &path)?;
        let gt = gt_dir.join(imagecore::format_index("gt%06d.png", t)?);
        imagecore::write_mask(&truth, gt)?;
    }
    let roi = out.join("temporalROI.txt");
    fs::write(&roi, format!("1 {}\n", spec.frames)).map_err(|e| Error::io(&roi, e))?;
    Ok(())
}

/// Writes an RGB frame; `.jpg`/`.jpeg` paths are JPEG-encoded at
/// [`JPEG_QUALITY`], anything else goes through the format implied by the extension.
pub fn write_frame(frame: &Frame, path: &Path) -> Result<()> {
    let img_err = |source| Error::Image {
        path: path.to_path_buf(),
        source,
    };
    let img = image::RgbImage::from_raw(frame.width() as u32, frame.height() as u32, frame.data().to_vec())
        .ok_or_else(|| Error::InvalidInput("write_frame expects an RGB frame".into()))?;
    let is_jpeg = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("jpg") || e.eq_ignore_ascii_case("jpeg"));
    if is_jpeg {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut enc = JpegEncoder::new_with_quality(BufWriter::new(file), JPEG_QUALITY);
        enc.encode_image(&img).map_err(img_err)
    } else {
        img.save(path).map_err(img_err)
    }
}
