//! Binary morphology with a square `(2r + 1)²` structuring element.
//!
//! Both passes are separable: a horizontal run over each row followed by a
//! vertical run over each column, each using a sliding window count.
//!
//! Pixels outside the image are background for dilation and for erosion, so
//! erosion shrinks foreground that touches the border. Closing evaluates the
//! dilation on a canvas padded by `r` so the intermediate result is not
//! clipped; this keeps closing extensive (`close(m) ⊇ m`) at the border.

use super::{ImgError, Mask, Result};

#[derive(Clone, Copy)]
enum Pass {
    Dilate,
    Erode,
}

fn check_radius(radius: u32) -> Result<()> {
    if radius < 1 {
        return Err(ImgError::InvalidRadius(radius));
    }
    Ok(())
}

/// One-dimensional sliding-window pass over `len` samples spaced `stride`
/// apart starting at `offset`.
fn pass_line(src: &[u8], dst: &mut [u8], offset: usize, stride: usize, len: usize, r: usize, pass: Pass) {
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(0usize);
    for i in 0..len {
        prefix.push(prefix[i] + src[offset + i * stride] as usize);
    }
    for i in 0..len {
        let lo = i.saturating_sub(r);
        let hi = (i + r + 1).min(len);
        let ones = prefix[hi] - prefix[lo];
        dst[offset + i * stride] = match pass {
            Pass::Dilate => (ones > 0) as u8,
            // Out-of-range samples count as background.
            Pass::Erode => (ones == 2 * r + 1) as u8,
        };
    }
}

fn apply(data: &[u8], w: usize, h: usize, r: usize, pass: Pass) -> Vec<u8> {
    let mut rows = vec![0u8; w * h];
    for y in 0..h {
        pass_line(data, &mut rows, y * w, 1, w, r, pass);
    }
    let mut out = vec![0u8; w * h];
    for x in 0..w {
        pass_line(&rows, &mut out, x, w, h, r, pass);
    }
    out
}

fn from_data(m: &Mask, data: Vec<u8>) -> Mask {
    Mask::new(m.width(), m.height(), data).expect("same shape")
}

pub fn dilate(m: &Mask, radius: u32) -> Result<Mask> {
    check_radius(radius)?;
    let data = apply(m.data(), m.width() as usize, m.height() as usize, radius as usize, Pass::Dilate);
    Ok(from_data(m, data))
}

pub fn erode(m: &Mask, radius: u32) -> Result<Mask> {
    check_radius(radius)?;
    let data = apply(m.data(), m.width() as usize, m.height() as usize, radius as usize, Pass::Erode);
    Ok(from_data(m, data))
}

/// Closing, `erode(dilate(m))`, with the dilation kept unclipped.
pub fn morph_close(m: &Mask, radius: u32) -> Result<Mask> {
    check_radius(radius)?;
    let r = radius as usize;
    let (w, h) = (m.width() as usize, m.height() as usize);
    let (pw, ph) = (w + 2 * r, h + 2 * r);
    let mut padded = vec![0u8; pw * ph];
    for y in 0..h {
        padded[(y + r) * pw + r..(y + r) * pw + r + w].copy_from_slice(&m.data()[y * w..(y + 1) * w]);
    }
    let closed = apply(&apply(&padded, pw, ph, r, Pass::Dilate), pw, ph, r, Pass::Erode);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        out.extend_from_slice(&closed[(y + r) * pw + r..(y + r) * pw + r + w]);
    }
    Ok(from_data(m, out))
}

/// Opening, `dilate(erode(m))`.
pub fn morph_open(m: &Mask, radius: u32) -> Result<Mask> {
    dilate(&erode(m, radius)?, radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(rows: &[&str]) -> Mask {
        let h = rows.len() as u32;
        let w = rows[0].len() as u32;
        Mask::from_fn(w, h, |x, y| rows[y as usize].as_bytes()[x as usize] == b'#')
    }

    #[test]
    fn closing_fills_single_pixel_hole() {
        // Hand evaluation: dilating the ring by one covers a 5x5 block (in a
        // 7x7 padded canvas); eroding that block by one leaves the 3x3 core.
        let m = parse(&[".....", ".###.", ".#.#.", ".###.", "....."]);
        let closed = morph_close(&m, 1).unwrap();
        assert_eq!(closed, parse(&[".....", ".###.", ".###.", ".###.", "....."]));
    }

    #[test]
    fn closing_keeps_border_foreground() {
        let m = parse(&["##...", "##...", ".....", "....#"]);
        let closed = morph_close(&m, 1).unwrap();
        assert_eq!(closed, m);
    }

    #[test]
    fn erosion_shrinks_at_border() {
        let full = Mask::from_fn(5, 4, |_, _| true);
        let eroded = erode(&full, 1).unwrap();
        assert_eq!(eroded, parse(&[".....", ".###.", ".###.", "....."]));
    }

    #[test]
    fn empty_stays_empty() {
        let e = Mask::empty(6, 4);
        assert_eq!(morph_close(&e, 1).unwrap(), e);
        assert_eq!(morph_open(&e, 2).unwrap(), e);
    }

    #[test]
    fn opening_removes_isolated_pixel() {
        let m = parse(&[".....", "..#..", "....."]);
        assert_eq!(morph_open(&m, 1).unwrap().area(), 0);
    }

    #[test]
    fn zero_radius_is_rejected() {
        let m = Mask::empty(2, 2);
        assert_eq!(morph_close(&m, 0), Err(ImgError::InvalidRadius(0)));
        assert_eq!(morph_open(&m, 0), Err(ImgError::InvalidRadius(0)));
        assert_eq!(dilate(&m, 0), Err(ImgError::InvalidRadius(0)));
    }

    #[test]
    fn dilation_matches_square_window() {
        let m = parse(&[".......", ".......", "...#...", ".......", "......."]);
        let d = dilate(&m, 1).unwrap();
        assert_eq!(d, parse(&[".......", "..###..", "..###..", "..###..", "......."]));
        assert_eq!(dilate(&m, 2).unwrap().area(), 25);
    }
}
