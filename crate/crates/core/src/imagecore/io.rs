use std::path::{Path, PathBuf};

use image::{GrayImage, ImageReader};

use super::{BinaryMask, Channels, Frame};
use crate::error::{Error, Result};

/// Expands a printf-style integer template such as `in%06d.jpg`.
///
/// Supports `%d`, `%Nd` and `%0Nd`; `%%` is a literal percent sign.
pub fn format_index(template: &str, index: u32) -> Result<String> {
    let mut out = String::with_capacity(template.len() + 8);
    let mut chars = template.chars().peekable();
    let mut substituted = false;
    while let Some(c) = chars.next() {
        if c != '%' {
            out.push(c);
            continue;
        }
        if chars.peek() == Some(&'%') {
            chars.next();
            out.push('%');
            continue;
        }
        let zero = chars.peek() == Some(&'0');
        if zero {
            chars.next();
        }
        let mut width = 0usize;
        while let Some(d) = chars.peek().and_then(|c| c.to_digit(10)) {
            width = width * 10 + d as usize;
            chars.next();
        }
        match chars.next() {
            Some('d') | Some('u') => {
                if zero {
                    out.push_str(&format!("{index:0width$}"));
                } else {
                    out.push_str(&format!("{index:width$}"));
                }
                substituted = true;
            }
            _ => {
                return Err(Error::Config(format!(
                    "unsupported conversion in filename template {template:?}"
                )))
            }
        }
    }
    if !substituted {
        return Err(Error::Config(format!(
            "filename template {template:?} has no %d conversion"
        )));
    }
    Ok(out)
}

/// Decodes an image file into a 3-channel frame.
pub fn load_frame(path: &Path) -> Result<Frame> {
    let img = open_image(path)?.into_rgb8();
    let (w, h) = img.dimensions();
    Frame::new(w as usize, h as usize, Channels::Rgb, img.into_raw())
}

fn open_image(path: &Path) -> Result<image::DynamicImage> {
    ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// Decodes a single-channel image, converting color inputs to luma.
pub(crate) fn load_gray(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let img = open_image(path)?.into_luma8();
    let (w, h) = img.dimensions();
    Ok((w as usize, h as usize, img.into_raw()))
}

/// Lazily reads frames `first..=last` of an image sequence.
///
/// Every frame is checked against the dimensions of the first one read.
pub struct SequenceReader {
    directory: PathBuf,
    pattern: String,
    next: u32,
    last: u32,
    dims: Option<(usize, usize)>,
    failed: bool,
}

impl SequenceReader {
    pub fn len(&self) -> usize {
        if self.next > self.last {
            0
        } else {
            (self.last - self.next + 1) as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Path of the frame with the given index.
    pub fn path_of(&self, index: u32) -> Result<PathBuf> {
        Ok(self.directory.join(format_index(&self.pattern, index)?))
    }
}

impl Iterator for SequenceReader {
    type Item = Result<(u32, Frame)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.next > self.last {
            return None;
        }
        let index = self.next;
        self.next += 1;
        let res = self.path_of(index).and_then(|path| {
            if !path.is_file() {
                return Err(Error::MissingFrame { index, path });
            }
            let frame = load_frame(&path)?;
            match self.dims {
                None => self.dims = Some(frame.dims()),
                Some(d) if d != frame.dims() => {
                    return Err(Error::Format {
                        path,
                        reason: format!(
                            "frame {index} is {}x{}, sequence is {}x{}",
                            frame.width(),
                            frame.height(),
                            d.0,
                            d.1
                        ),
                    })
                }
                Some(_) => {}
            }
            Ok((index, frame))
        });
        if res.is_err() {
            self.failed = true;
        }
        Some(res)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (0, Some(self.len()))
    }
}

/// Opens the sequence `directory/pattern` over the inclusive index range.
///
/// An inverted range yields no frames. The directory itself must exist.
pub fn load_sequence(
    directory: impl AsRef<Path>,
    pattern: &str,
    first: u32,
    last: u32,
) -> Result<SequenceReader> {
    let directory = directory.as_ref().to_path_buf();
    format_index(pattern, first)?;
    if !directory.is_dir() {
        return Err(Error::io(
            &directory,
            std::io::Error::new(std::io::ErrorKind::NotFound, "sequence directory not found"),
        ));
    }
    Ok(SequenceReader {
        directory,
        pattern: pattern.to_string(),
        next: first,
        last,
        dims: None,
        failed: false,
    })
}

/// Writes a mask as an 8-bit single-channel PNG (foreground 255, background 0).
pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let img = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, mask.to_bytes())
        .expect("mask buffer matches its dimensions");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// Reads a mask image; any value of 128 or more is foreground.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let (w, h, data) = load_gray(path.as_ref())?;
    BinaryMask::from_labels(w, h, data.into_iter().map(|v| v >= 128).collect())
}
