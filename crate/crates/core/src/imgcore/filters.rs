use super::{BitDepth, Image, ImgError, Result};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Luma conversion `round(0.299 R + 0.587 G + 0.114 B)`, same bit depth.
pub fn to_grayscale(img: &Image) -> Result<Image> {
    img.require_channels(3)?;
    let max = img.depth().max_value() as f64;
    let data = img
        .data()
        .chunks_exact(3)
        .map(|px| {
            let y: f64 = px.iter().zip(LUMA).map(|(&v, k)| v as f64 * k).sum();
            y.round().min(max) as u16
        })
        .collect();
    Image::gray(img.width(), img.height(), img.depth(), data)
}

/// Nearest-rank percentile: the value at sorted index
/// `round(p / 100 * (n - 1))`, so `p = 0` is the minimum and `p = 100` the
/// maximum.
pub fn percentile_level(img: &Image, p: f64) -> Result<u16> {
    img.require_channels(1)?;
    if !(0.0..=100.0).contains(&p) {
        return Err(ImgError::InvalidPercentiles { low: p, high: p });
    }
    let n = img.pixel_count();
    let rank = (p / 100.0 * (n - 1) as f64).round() as usize;
    let mut hist = vec![0usize; img.depth().max_value() as usize + 1];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    let mut seen = 0usize;
    for (level, &count) in hist.iter().enumerate() {
        seen += count;
        if seen > rank {
            return Ok(level as u16);
        }
    }
    unreachable!("rank {rank} is below the pixel count {n}")
}

/// Percentile-window contrast stretch to 8 bit:
/// `clamp(round(255 (v - lo) / (hi - lo)), 0, 255)`. A flat window (`hi == lo`)
/// maps every pixel to 0.
pub fn normalize_intensity(img: &Image, p_low: f64, p_high: f64) -> Result<Image> {
    img.require_channels(1)?;
    if !(p_low >= 0.0 && p_low < p_high && p_high <= 100.0) {
        return Err(ImgError::InvalidPercentiles {
            low: p_low,
            high: p_high,
        });
    }
    let lo = percentile_level(img, p_low)?;
    let hi = percentile_level(img, p_high)?;
    let data = if hi == lo {
        vec![0u16; img.pixel_count()]
    } else {
        let span = (hi - lo) as f64;
        img.data()
            .iter()
            .map(|&v| (255.0 * (v as f64 - lo as f64) / span).round().clamp(0.0, 255.0) as u16)
            .collect()
    };
    Image::gray(img.width(), img.height(), BitDepth::Eight, data)
}

/// Median over the `(2r + 1)²` neighborhood with edge pixels replicated.
pub fn denoise_median(img: &Image, radius: u32) -> Result<Image> {
    img.require_channels(1)?;
    if radius < 1 {
        return Err(ImgError::InvalidRadius(radius));
    }
    let (w, h) = (img.width() as i64, img.height() as i64);
    let r = radius as i64;
    let src = img.data();
    let mut window = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in 0..w {
            window.clear();
            for dy in -r..=r {
                let sy = (y + dy).clamp(0, h - 1);
                for dx in -r..=r {
                    let sx = (x + dx).clamp(0, w - 1);
                    window.push(src[(sy * w + sx) as usize]);
                }
            }
            let mid = window.len() / 2;
            out.push(*window.select_nth_unstable(mid).1);
        }
    }
    Image::gray(img.width(), img.height(), img.depth(), out)
}
