use super::Image;

/// Side length of the gray-level thumbnail used as feature space.
const GRID: usize = 8;
pub const FEATURE_LEN: usize = GRID * GRID;

/// Reduced gray-level representation of an image: an 8×8 box-averaged
/// thumbnail scaled to `[0, 1]`, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector([f64; FEATURE_LEN]);

impl FeatureVector {
    pub fn new(values: [f64; FEATURE_LEN]) -> Option<Self> {
        values
            .iter()
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v))
            .then_some(Self(values))
    }

    pub fn values(&self) -> &[f64; FEATURE_LEN] {
        &self.0
    }

    pub fn distance(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Cell `i` of `n` along an axis of length `len`: `[floor(i len / n),
/// floor((i + 1) len / n))`, widened to one pixel when the axis is shorter
/// than the grid.
fn cell_span(i: usize, len: usize) -> (usize, usize) {
    let start = i * len / GRID;
    let end = ((i + 1) * len / GRID).max(start + 1);
    (start, end)
}

pub fn gray_features(img: &Image) -> FeatureVector {
    let gray = img.to_gray();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let max = gray.depth().max_value() as f64;
    let data = gray.data();
    let mut values = [0.0; FEATURE_LEN];
    for gy in 0..GRID {
        let (y0, y1) = cell_span(gy, h);
        for gx in 0..GRID {
            let (x0, x1) = cell_span(gx, w);
            let mut sum = 0u64;
            for y in y0..y1 {
                sum += data[y * w + x0..y * w + x1].iter().map(|&v| v as u64).sum::<u64>();
            }
            let count = ((y1 - y0) * (x1 - x0)) as f64;
            values[gy * GRID + gx] = (sum as f64 / count / max).clamp(0.0, 1.0);
        }
    }
    FeatureVector(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::BitDepth;

    #[test]
    fn constant_images() {
        let white = Image::filled(13, 9, BitDepth::Eight, 255).unwrap();
        assert!(gray_features(&white).values().iter().all(|&v| v == 1.0));
        let black = Image::filled(3, 20, BitDepth::Sixteen, 0).unwrap();
        assert!(gray_features(&black).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn block_constant_image_maps_blocks() {
        // 16x16 image whose 2x2 blocks hold distinct levels.
        let level = |bx: usize, by: usize| ((by * 8 + bx) * 3) as u16;
        let mut data = Vec::new();
        for y in 0..16 {
            for x in 0..16 {
                data.push(level(x / 2, y / 2));
            }
        }
        let img = Image::gray(16, 16, BitDepth::Eight, data).unwrap();
        let f = gray_features(&img);
        for by in 0..8 {
            for bx in 0..8 {
                assert_eq!(f.values()[by * 8 + bx], level(bx, by) as f64 / 255.0);
            }
        }
    }

    #[test]
    fn rgb_goes_through_luma() {
        let img = Image::new(1, 1, 3, BitDepth::Eight, vec![255, 0, 0]).unwrap();
        let f = gray_features(&img);
        assert!(f.values().iter().all(|&v| v == 76.0 / 255.0));
    }

    #[test]
    fn distance_is_euclidean() {
        let a = FeatureVector::new([0.0; FEATURE_LEN]).unwrap();
        let mut v = [0.0; FEATURE_LEN];
        v[0] = 0.3;
        v[1] = 0.4;
        let b = FeatureVector::new(v).unwrap();
        assert!((a.distance(&b) - 0.5).abs() < 1e-15);
        assert!(FeatureVector::new([1.5; FEATURE_LEN]).is_none());
    }
}
