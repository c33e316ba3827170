use std::cmp::Ordering;

use super::{Image, ImgError, Mask, Result};

/// Largest pixel count for which class separations are compared in exact
/// integer arithmetic. Beyond this the comparison falls back to `f64`.
const EXACT_PIXEL_LIMIT: u64 = 1 << 24;

/// Unnormalized between-class separation of the split `{v <= t}`, `{v > t}`.
///
/// With class sizes `n0, n1` and intensity sums `s0, s1` the between-class
/// variance is `(n1*s0 - n0*s1)^2 / (n^2 * n0 * n1)`; `n^2` is common to all
/// thresholds so only `numerator / denominator` is kept.
#[derive(Debug, Clone, Copy)]
struct Separation {
    diff: u128,
    denominator: u64,
}

impl Separation {
    fn new(n0: u64, s0: u64, n1: u64, s1: u64) -> Option<Self> {
        if n0 == 0 || n1 == 0 {
            return None;
        }
        let diff = (n1 as u128 * s0 as u128).abs_diff(n0 as u128 * s1 as u128);
        Some(Self {
            diff,
            denominator: n0 * n1,
        })
    }

    fn as_f64(self) -> f64 {
        let d = self.diff as f64;
        d * d / self.denominator as f64
    }

    /// Exact comparison; `diff^2` fits in `u128` while `n <= EXACT_PIXEL_LIMIT`.
    fn cmp_exact(&self, other: &Self) -> Ordering {
        let lhs = wide_mul(self.diff * self.diff, other.denominator);
        let rhs = wide_mul(other.diff * other.diff, self.denominator);
        lhs.cmp(&rhs)
    }
}

/// `a * b` as a (high, low) pair; the high part cannot overflow because
/// `(2^64 - 1)^2 + 2^64 - 1 < 2^128`.
fn wide_mul(a: u128, b: u64) -> (u128, u64) {
    let a_hi = a >> 64;
    let a_lo = a & u64::MAX as u128;
    let lo = a_lo * b as u128;
    (a_hi * b as u128 + (lo >> 64), lo as u64)
}

fn histogram(img: &Image) -> Vec<u64> {
    let mut hist = vec![0u64; img.depth().max_value() as usize + 1];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    hist
}

/// Otsu's threshold: the level `t` maximizing the between-class variance of
/// `{v <= t}` and `{v > t}`. Ties resolve to the smallest `t`.
pub fn otsu_threshold(img: &Image) -> Result<u16> {
    img.require_channels(1)?;
    let hist = histogram(img);
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(ImgError::DegenerateHistogram);
    }

    let n: u64 = img.pixel_count() as u64;
    let sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    let exact = n <= EXACT_PIXEL_LIMIT;

    let mut best: Option<(u16, Separation)> = None;
    let (mut n0, mut s0) = (0u64, 0u64);
    // t ranges over [0, max - 1]; t = max leaves the upper class empty.
    for (t, &count) in hist.iter().enumerate().take(hist.len() - 1) {
        n0 += count;
        s0 += t as u64 * count;
        let Some(sep) = Separation::new(n0, s0, n - n0, sum - s0) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((_, current)) if exact => sep.cmp_exact(current) == Ordering::Greater,
            Some((_, current)) => sep.as_f64() > current.as_f64(),
        };
        if better {
            best = Some((t as u16, sep));
        }
    }
    // At least two occupied bins guarantee a split with both classes non-empty.
    Ok(best.map(|(t, _)| t).expect("two occupied histogram bins"))
}

/// Between-class variance `w0 * w1 * (mu0 - mu1)^2` of the split at `t`, with
/// class weights as pixel fractions. Zero when either class is empty.
pub fn between_class_variance(img: &Image, t: u16) -> Result<f64> {
    img.require_channels(1)?;
    let (mut n0, mut s0, mut n1, mut s1) = (0u64, 0u64, 0u64, 0u64);
    for &v in img.data() {
        if v <= t {
            n0 += 1;
            s0 += v as u64;
        } else {
            n1 += 1;
            s1 += v as u64;
        }
    }
    let n = (n0 + n1) as f64;
    Ok(Separation::new(n0, s0, n1, s1).map_or(0.0, |s| s.as_f64() / (n * n)))
}

/// Binarizes a single-channel image: `mask[p] = 1` iff `img[p] > t`.
pub fn apply_threshold(img: &Image, t: u16) -> Result<Mask> {
    img.require_channels(1)?;
    let data = img.data().iter().map(|&v| (v > t) as u8).collect();
    Mask::new(img.width(), img.height(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::BitDepth;

    #[test]
    fn two_level_image_picks_lower_level() {
        let mut data = vec![10u8; 32];
        data.extend(vec![200u8; 32]);
        let img = Image::gray8(8, 8, &data).unwrap();
        assert_eq!(otsu_threshold(&img).unwrap(), 10);
    }

    #[test]
    fn constant_image_is_degenerate() {
        let img = Image::filled(4, 4, BitDepth::Eight, 7).unwrap();
        assert_eq!(otsu_threshold(&img), Err(ImgError::DegenerateHistogram));
    }

    #[test]
    fn rgb_input_is_rejected() {
        let img = Image::new(1, 1, 3, BitDepth::Eight, vec![1, 2, 3]).unwrap();
        assert!(matches!(otsu_threshold(&img), Err(ImgError::ChannelMismatch { .. })));
    }

    #[test]
    fn symmetric_three_level_tie_takes_smallest() {
        // {0,1,2} with equal counts: t = 0 and t = 1 separate equally well.
        let img = Image::gray8(3, 1, &[0, 1, 2]).unwrap();
        assert_eq!(otsu_threshold(&img).unwrap(), 0);
    }

    #[test]
    fn sixteen_bit_two_levels() {
        let img = Image::gray(2, 1, BitDepth::Sixteen, vec![1000, 60000]).unwrap();
        assert_eq!(otsu_threshold(&img).unwrap(), 1000);
    }

    #[test]
    fn top_level_threshold_is_never_returned() {
        let img = Image::gray8(2, 1, &[254, 255]).unwrap();
        assert_eq!(otsu_threshold(&img).unwrap(), 254);
    }

    #[test]
    fn apply_threshold_cases() {
        let zeros = Image::gray8(2, 2, &[0; 4]).unwrap();
        assert_eq!(apply_threshold(&zeros, 0).unwrap().area(), 0);

        let img = Image::gray8(2, 1, &[10, 200]).unwrap();
        assert_eq!(apply_threshold(&img, 10).unwrap().data(), &[0, 1]);
        assert_eq!(apply_threshold(&img, 255).unwrap().area(), 0);
    }

    #[test]
    fn wide_mul_matches_small_products() {
        assert_eq!(wide_mul(3, 5), (0, 15));
        assert_eq!(wide_mul(u64::MAX as u128 + 1, 2), (2, 0));
        let (hi, lo) = wide_mul(u128::MAX, u64::MAX);
        // (2^128 - 1)(2^64 - 1) = 2^192 - 2^128 - 2^64 + 1
        assert_eq!(lo, 1);
        assert_eq!(hi, u128::MAX - u64::MAX as u128 - 1);
    }
}
