//! Frame and mask rasters shared by every stage of the pipeline.
//!
//! Frames are row-major 8-bit rasters with either one (grayscale) or three
//! (RGB) interleaved channels. Masks carry one boolean label per pixel.

mod io;

pub(crate) use io::load_gray;
pub use io::{format_index, load_frame, load_sequence, read_mask, write_mask, SequenceReader};

use crate::error::{Error, Result};

/// Number of interleaved channels in a [`Frame`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channels {
    Gray,
    Rgb,
}

impl Channels {
    pub fn count(self) -> usize {
        match self {
            Channels::Gray => 1,
            Channels::Rgb => 3,
        }
    }
}

/// A dense 8-bit raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    channels: Channels,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, channels: Channels, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width * height * channels.count();
        if data.len() != expected {
            return Err(Error::InvalidInput(format!(
                "frame data has {} bytes, expected {expected} for {width}x{height}x{}",
                data.len(),
                channels.count()
            )));
        }
        Ok(Frame {
            width,
            height,
            channels,
            data,
        })
    }

    /// A frame with every pixel set to `value` (one entry per channel).
    pub fn filled(width: usize, height: usize, value: &[u8]) -> Result<Self> {
        let channels = match value.len() {
            1 => Channels::Gray,
            3 => Channels::Rgb,
            n => {
                return Err(Error::InvalidInput(format!(
                    "fill value must have 1 or 3 channels, got {n}"
                )))
            }
        };
        let data = value
            .iter()
            .copied()
            .cycle()
            .take(width * height * value.len())
            .collect();
        Frame::new(width, height, channels, data)
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

    pub fn channels(&self) -> Channels {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// RGB triple at `(x, y)`. Grayscale frames replicate their single value.
    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let idx = y * self.width + x;
        match self.channels {
            Channels::Rgb => {
                let o = idx * 3;
                [self.data[o], self.data[o + 1], self.data[o + 2]]
            }
            Channels::Gray => [self.data[idx]; 3],
        }
    }

    /// Single-channel value at `(x, y)`; panics on RGB frames.
    pub fn gray(&self, x: usize, y: usize) -> u8 {
        assert_eq!(self.channels, Channels::Gray, "gray() on an RGB frame");
        self.data[y * self.width + x]
    }

    pub fn set_rgb(&mut self, x: usize, y: usize, value: [u8; 3]) {
        assert_eq!(self.channels, Channels::Rgb, "set_rgb() on a gray frame");
        let o = (y * self.width + x) * 3;
        self.data[o..o + 3].copy_from_slice(&value);
    }

    /// RGB triples in row-major order.
    pub fn rgb_pixels(&self) -> Result<&[[u8; 3]]> {
        if self.channels != Channels::Rgb {
            return Err(Error::InvalidInput("expected a 3-channel frame".into()));
        }
        let (chunks, rest) = self.data.as_chunks::<3>();
        debug_assert!(rest.is_empty());
        Ok(chunks)
    }

    /// Luma conversion with ITU-R BT.601 weights, rounding half up.
    pub fn to_grayscale(&self) -> Result<Frame> {
        let pixels = self
            .rgb_pixels()
            .map_err(|_| Error::InvalidInput("to_grayscale requires a 3-channel frame".into()))?;
        let data = pixels.iter().map(|&p| luma(p)).collect();
        Frame::new(self.width, self.height, Channels::Gray, data)
    }
}

/// BT.601 luma in integer arithmetic: `(299 R + 587 G + 114 B + 500) / 1000`.
#[inline]
pub fn luma([r, g, b]: [u8; 3]) -> u8 {
    let acc = 299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500;
    (acc / 1000).min(255) as u8
}

/// Per-pixel foreground/background labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    labels: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, false)
    }

    pub fn filled(width: usize, height: usize, foreground: bool) -> Self {
        BinaryMask {
            width,
            height,
            labels: vec![foreground; width * height],
        }
    }

    pub fn from_labels(width: usize, height: usize, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "mask has {} labels, expected {}",
                labels.len(),
                width * height
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            labels,
        })
    }

    /// Builds a mask of the given size with the listed pixels set to foreground.
    pub fn from_points(width: usize, height: usize, points: &[(usize, usize)]) -> Self {
        let mut mask = BinaryMask::new(width, height);
        for &(x, y) in points {
            mask.set(x, y, true);
        }
        mask
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

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [bool] {
        &mut self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.labels[y * self.width + x]
    }

    /// Like [`get`](Self::get) but treats out-of-bounds coordinates as background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.labels[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, foreground: bool) {
        self.labels[y * self.width + x] = foreground;
    }

    pub fn count_foreground(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.labels.iter().any(|&l| l)
    }

    /// True when every foreground pixel of `self` is also foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.labels.iter().zip(&other.labels).all(|(&a, &b)| !a || b)
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            labels: self.labels.iter().map(|l| !l).collect(),
        }
    }

    pub fn transpose(&self) -> BinaryMask {
        let mut out = BinaryMask::new(self.height, self.width);
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(y, x, self.get(x, y));
            }
        }
        out
    }

    /// Foreground as 255, background as 0.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.labels.iter().map(|&l| if l { 255 } else { 0 }).collect()
    }
}
