//! Stateless pixel kernels shared by the pre- and post-assistance stages.
//!
//! Everything in here is a pure function of its inputs. Images are stored as
//! row-major `u16` samples regardless of bit depth so 8- and 16-bit data share
//! one code path; masks are row-major `u8` values restricted to `{0, 1}`.

mod components;
mod features;
mod filters;
mod morphology;
mod threshold;

use thiserror::Error;

pub use components::{connected_components, count_holes, fill_holes, remove_small_segments};
pub use features::{gray_features, FeatureVector, FEATURE_LEN};
pub use filters::{denoise_median, normalize_intensity, percentile_level, to_grayscale};
pub use morphology::{dilate, erode, morph_close, morph_open};
pub use threshold::{apply_threshold, between_class_variance, otsu_threshold};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImgError {
    #[error("expected {expected} channel(s), found {found}")]
    ChannelMismatch { expected: u8, found: u8 },
    #[error("histogram holds a single intensity level; no threshold separates two classes")]
    DegenerateHistogram,
    #[error("radius must be at least 1, got {0}")]
    InvalidRadius(u32),
    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: u32,
        left_height: u32,
        right_width: u32,
        right_height: u32,
    },
    #[error("percentiles must satisfy 0 <= low < high <= 100, got low={low} high={high}")]
    InvalidPercentiles { low: f64, high: f64 },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid mask: {0}")]
    InvalidMask(String),
}

pub type Result<T> = std::result::Result<T, ImgError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    /// Largest representable intensity, `2^bits - 1`.
    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => u8::MAX as u16,
            BitDepth::Sixteen => u16::MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub(crate) fn offsets(self) -> &'static [(i32, i32)] {
        const FOUR: [(i32, i32); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        const EIGHT: [(i32, i32); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// A raw or pre-processed sample: 1 (gray) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u8,
    depth: BitDepth,
    data: Vec<u16>,
}

impl Image {
    pub fn new(width: u32, height: u32, channels: u8, depth: BitDepth, data: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImgError::InvalidImage(format!("empty extent {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(ImgError::InvalidImage(format!("unsupported channel count {channels}")));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(ImgError::InvalidImage(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        let max = depth.max_value();
        if let Some(v) = data.iter().find(|&&v| v > max) {
            return Err(ImgError::InvalidImage(format!(
                "value {v} exceeds {}-bit range",
                depth.bits()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            depth,
            data,
        })
    }

    /// Single-channel image from row-major samples.
    pub fn gray(width: u32, height: u32, depth: BitDepth, data: Vec<u16>) -> Result<Self> {
        Self::new(width, height, 1, depth, data)
    }

    pub fn gray8(width: u32, height: u32, data: &[u8]) -> Result<Self> {
        Self::gray(width, height, BitDepth::Eight, data.iter().map(|&v| v as u16).collect())
    }

    pub fn filled(width: u32, height: u32, depth: BitDepth, value: u16) -> Result<Self> {
        Self::gray(width, height, depth, vec![value; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn depth(&self) -> BitDepth {
        self.depth
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Sample at `(x, y)` of channel `c`.
    pub fn get(&self, x: u32, y: u32, c: u8) -> u16 {
        let idx = (y as usize * self.width as usize + x as usize) * self.channels as usize + c as usize;
        self.data[idx]
    }

    pub(crate) fn require_channels(&self, expected: u8) -> Result<()> {
        if self.channels != expected {
            return Err(ImgError::ChannelMismatch {
                expected,
                found: self.channels,
            });
        }
        Ok(())
    }

    /// Grayscale view of the image: a clone for single-channel input, the luma
    /// conversion for RGB.
    pub fn to_gray(&self) -> Image {
        if self.channels == 1 {
            self.clone()
        } else {
            to_grayscale(self).expect("three-channel image")
        }
    }
}

/// Binary segmentation map with values in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Mask {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImgError::InvalidMask(format!("empty extent {width}x{height}")));
        }
        if data.len() != width as usize * height as usize {
            return Err(ImgError::InvalidMask(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|&&v| v > 1) {
            return Err(ImgError::InvalidMask(format!("non-binary value {v}")));
        }
        Ok(Self { width, height, data })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        assert!(width > 0 && height > 0, "mask extent must be non-zero");
        Self {
            width,
            height,
            data: vec![0; width as usize * height as usize],
        }
    }

    /// Builds a mask by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut mask = Self::empty(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    mask.set(x, y, true);
                }
            }
        }
        mask
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize] != 0
    }

    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        self.data[y as usize * self.width as usize + x as usize] = on as u8;
    }

    /// Foreground pixel count, `|m|`.
    pub fn area(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn same_shape(&self, other: &Mask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, other: &Mask) -> Result<()> {
        if !self.same_shape(other) {
            return Err(ImgError::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            });
        }
        Ok(())
    }

    /// Number of pixels that differ between two equally shaped masks.
    pub fn xor_count(&self, other: &Mask) -> Result<usize> {
        self.check_shape(other)?;
        Ok(self.data.iter().zip(&other.data).filter(|(a, b)| a != b).count())
    }

    /// True if every foreground pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.same_shape(other) && self.data.iter().zip(&other.data).all(|(&a, &b)| a <= b)
    }
}

/// Dice-Sørensen coefficient `2|a ∩ b| / (|a| + |b|)`.
///
/// Two empty masks agree perfectly and score 1.0.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    a.check_shape(b)?;
    let mut inter = 0usize;
    let mut total = 0usize;
    for (&x, &y) in a.data.iter().zip(&b.data) {
        inter += (x & y) as usize;
        total += x as usize + y as usize;
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_with(width: u32, height: u32, on: &[(u32, u32)]) -> Mask {
        Mask::from_fn(width, height, |x, y| on.contains(&(x, y)))
    }

    #[test]
    fn image_rejects_bad_lengths_and_values() {
        assert!(Image::gray8(2, 2, &[1, 2, 3]).is_err());
        assert!(Image::gray(1, 1, BitDepth::Eight, vec![256]).is_err());
        assert!(Image::new(1, 1, 2, BitDepth::Eight, vec![0, 0]).is_err());
        assert!(Image::gray8(0, 1, &[]).is_err());
    }

    #[test]
    fn mask_rejects_non_binary() {
        assert!(Mask::new(1, 2, vec![0, 2]).is_err());
        assert!(Mask::new(1, 2, vec![0, 1]).is_ok());
    }

    #[test]
    fn dice_identity_disjoint_and_half() {
        let a = mask_with(4, 4, &[(0, 0), (1, 0), (0, 1), (1, 1)]);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);

        let b = mask_with(4, 4, &[(3, 3), (2, 3), (3, 2), (2, 2)]);
        assert_eq!(dice(&a, &b).unwrap(), 0.0);

        let c = mask_with(4, 4, &[(0, 0), (1, 0), (2, 0), (3, 0)]);
        assert_eq!(dice(&a, &c).unwrap(), 0.5);
    }

    #[test]
    fn dice_of_two_empty_masks_is_one() {
        let e = Mask::empty(3, 3);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
    }

    #[test]
    fn dice_shape_mismatch() {
        let err = dice(&Mask::empty(2, 2), &Mask::empty(2, 3)).unwrap_err();
        assert!(matches!(err, ImgError::DimensionMismatch { .. }));
    }
}
