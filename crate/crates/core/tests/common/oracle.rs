//! Brute-force reference implementations used as test oracles. They share
//! no code with the library beyond the `Image`/`Mask` containers.
#![allow(dead_code)]

use std::collections::VecDeque;

use labelassist::imgcore::{BitDepth, Image, Mask};
use rand::Rng;

/// Exhaustive Otsu scan over every `t` that leaves both classes `{v <= t}`
/// and `{v > t}` nonempty, using Otsu's original form
/// `(mu_T w(t) - mu(t))^2 / (w(t) (1 - w(t)))` scaled to integers and
/// compared by cross-multiplication. Ties keep the lowest `t`.
pub fn otsu(img: &Image) -> Option<u16> {
    let v = img.data();
    let n = v.len() as u128;
    let total: u128 = v.iter().map(|&x| x as u128).sum();
    let top = *v.iter().max()?;
    let mut best: Option<(u16, u128, u128)> = None;
    for t in 0..top {
        let c = v.iter().filter(|&&x| x <= t).count() as u128;
        if c == 0 || c == n {
            continue;
        }
        let m: u128 = v.iter().filter(|&&x| x <= t).map(|&x| x as u128).sum();
        let a = (total * c).abs_diff(m * n);
        let num = a * a;
        let den = c * (n - c);
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    best.map(|(t, _, _)| t)
}

fn neighbours(eight: bool) -> Vec<(i64, i64)> {
    let mut out = vec![(1, 0), (-1, 0), (0, 1), (0, -1)];
    if eight {
        out.extend([(1, 1), (1, -1), (-1, 1), (-1, -1)]);
    }
    out
}

/// Component ids (0 = not in any component) of the pixels with value
/// `value`, found by breadth-first search.
fn label_bfs(m: &Mask, value: bool, eight: bool) -> (Vec<usize>, usize) {
    let (w, h) = (m.width() as i64, m.height() as i64);
    let mut ids = vec![0usize; (w * h) as usize];
    let mut count = 0;
    for start in 0..(w * h) {
        if m.get((start % w) as u32, (start / w) as u32) != value || ids[start as usize] != 0 {
            continue;
        }
        count += 1;
        ids[start as usize] = count;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            let (x, y) = (p % w, p / w);
            for (dx, dy) in neighbours(eight) {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let q = (ny * w + nx) as usize;
                if ids[q] == 0 && m.get(nx as u32, ny as u32) == value {
                    ids[q] = count;
                    queue.push_back(q as i64);
                }
            }
        }
    }
    (ids, count)
}

pub fn components(m: &Mask, eight: bool) -> usize {
    label_bfs(m, true, eight).1
}

/// Background pixels not four-connected to the border.
fn hole_pixels(m: &Mask) -> Vec<bool> {
    let (ids, count) = label_bfs(m, false, false);
    let (w, h) = (m.width() as usize, m.height() as usize);
    let mut on_border = vec![false; count + 1];
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                on_border[ids[y * w + x]] = true;
            }
        }
    }
    ids.iter().map(|&i| i != 0 && !on_border[i]).collect()
}

pub fn holes(m: &Mask) -> usize {
    let (ids, count) = label_bfs(m, false, false);
    let hole = hole_pixels(m);
    let mut seen = vec![false; count + 1];
    for (i, &is_hole) in hole.iter().enumerate() {
        if is_hole {
            seen[ids[i]] = true;
        }
    }
    seen.iter().filter(|&&s| s).count()
}

pub fn fill_holes(m: &Mask) -> Mask {
    let hole = hole_pixels(m);
    let w = m.width();
    Mask::from_fn(m.width(), m.height(), |x, y| m.get(x, y) || hole[(y * w + x) as usize])
}

pub fn remove_small(m: &Mask, min_area: usize) -> Mask {
    let (ids, count) = label_bfs(m, true, true);
    let mut area = vec![0usize; count + 1];
    for &i in &ids {
        area[i] += 1;
    }
    let w = m.width();
    Mask::from_fn(m.width(), m.height(), |x, y| {
        let i = ids[(y * w + x) as usize];
        i != 0 && area[i] >= min_area
    })
}

fn window_any(m: &Mask, x: i64, y: i64, r: i64) -> bool {
    for dy in -r..=r {
        for dx in -r..=r {
            let (sx, sy) = (x + dx, y + dy);
            if sx >= 0 && sy >= 0 && sx < m.width() as i64 && sy < m.height() as i64 && m.get(sx as u32, sy as u32) {
                return true;
            }
        }
    }
    false
}

fn window_all(m: &Mask, x: i64, y: i64, r: i64) -> bool {
    for dy in -r..=r {
        for dx in -r..=r {
            let (sx, sy) = (x + dx, y + dy);
            if sx < 0 || sy < 0 || sx >= m.width() as i64 || sy >= m.height() as i64 || !m.get(sx as u32, sy as u32) {
                return false;
            }
        }
    }
    true
}

/// Square `(2r+1)` dilation; pixels outside the image are background.
pub fn dilate(m: &Mask, r: u32) -> Mask {
    Mask::from_fn(m.width(), m.height(), |x, y| window_any(m, x as i64, y as i64, r as i64))
}

/// Square `(2r+1)` erosion; pixels outside the image are background.
pub fn erode(m: &Mask, r: u32) -> Mask {
    Mask::from_fn(m.width(), m.height(), |x, y| window_all(m, x as i64, y as i64, r as i64))
}

/// Closing evaluated on a canvas enlarged by `r` on every side, then cropped.
pub fn close(m: &Mask, r: u32) -> Mask {
    let padded = Mask::from_fn(m.width() + 2 * r, m.height() + 2 * r, |x, y| {
        x >= r && y >= r && x < m.width() + r && y < m.height() + r && m.get(x - r, y - r)
    });
    let closed = erode(&dilate(&padded, r), r);
    Mask::from_fn(m.width(), m.height(), |x, y| closed.get(x + r, y + r))
}

pub fn open(m: &Mask, r: u32) -> Mask {
    dilate(&erode(m, r), r)
}

pub fn dice(a: &Mask, b: &Mask) -> f64 {
    let inter = a.data().iter().zip(b.data()).filter(|(&x, &y)| x == 1 && y == 1).count();
    let total = a.area() + b.area();
    if total == 0 {
        1.0
    } else {
        2.0 * inter as f64 / total as f64
    }
}

/// Median of the edge-replicated square neighbourhood, by full sort.
pub fn median(img: &Image, r: u32) -> Vec<u16> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let r = r as i64;
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let mut win = Vec::new();
            for dy in -r..=r {
                for dx in -r..=r {
                    win.push(img.get((x + dx).clamp(0, w - 1) as u32, (y + dy).clamp(0, h - 1) as u32, 0));
                }
            }
            win.sort_unstable();
            out.push(win[win.len() / 2]);
        }
    }
    out
}

/// Nearest-rank percentile by sorting.
pub fn percentile(img: &Image, p: f64) -> u16 {
    let mut v = img.data().to_vec();
    v.sort_unstable();
    v[(p / 100.0 * (v.len() - 1) as f64).round() as usize]
}

pub fn normalize(img: &Image, p_low: f64, p_high: f64) -> Vec<u16> {
    let (lo, hi) = (percentile(img, p_low) as f64, percentile(img, p_high) as f64);
    img.data()
        .iter()
        .map(|&v| {
            if hi == lo {
                0
            } else {
                (255.0 * (v as f64 - lo) / (hi - lo)).round().clamp(0.0, 255.0) as u16
            }
        })
        .collect()
}

/// Random 8-bit gray image up to `max_side` with at least two levels.
pub fn random_image(rng: &mut impl Rng, max_side: u32) -> Image {
    loop {
        let w = rng.gen_range(1..=max_side);
        let h = rng.gen_range(1..=max_side);
        let levels = rng.gen_range(2..=256u32);
        let data: Vec<u16> = match rng.gen_range(0..3) {
            // Uniform noise over a random level count.
            0 => (0..w * h).map(|_| rng.gen_range(0..levels) as u16).collect(),
            // Two noisy modes.
            1 => {
                let (a, b) = (rng.gen_range(0..128u16), rng.gen_range(128..256u16));
                let s = rng.gen_range(0..40i32);
                (0..w * h)
                    .map(|_| {
                        let c = if rng.gen_bool(0.5) { a } else { b } as i32;
                        (c + rng.gen_range(-s..=s)).clamp(0, 255) as u16
                    })
                    .collect()
            }
            // Few distinct levels, many ties.
            _ => {
                let palette: Vec<u16> = (0..rng.gen_range(2..5)).map(|_| rng.gen_range(0..256)).collect();
                (0..w * h).map(|_| palette[rng.gen_range(0..palette.len())]).collect()
            }
        };
        let img = Image::gray(w, h, BitDepth::Eight, data).unwrap();
        if img.data().iter().any(|&v| v != img.data()[0]) {
            return img;
        }
    }
}

/// Random mask up to `max_side`: noise of random density, or a union of
/// rectangles and rings.
pub fn random_mask(rng: &mut impl Rng, max_side: u32) -> Mask {
    let w = rng.gen_range(1..=max_side);
    let h = rng.gen_range(1..=max_side);
    if rng.gen_bool(0.5) {
        let p = rng.gen_range(0.0..=1.0);
        return Mask::from_fn(w, h, |_, _| rng.gen_bool(p));
    }
    let mut m = Mask::empty(w, h);
    for _ in 0..rng.gen_range(0..6) {
        let (x0, y0) = (rng.gen_range(0..w), rng.gen_range(0..h));
        let (x1, y1) = (rng.gen_range(x0..=w), rng.gen_range(y0..=h));
        let ring = rng.gen_bool(0.5);
        for y in y0..y1 {
            for x in x0..x1 {
                let edge = x == x0 || y == y0 || x + 1 == x1 || y + 1 == y1;
                if !ring || edge {
                    m.set(x, y, true);
                }
            }
        }
    }
    m
}
