use super::{Connectivity, Mask};

/// Labels maximal connected foreground regions.
///
/// Returns a row-major label map (0 = background, regions numbered `1..=count`
/// in raster order of their first pixel) and the region count.
pub fn connected_components(m: &Mask, c: Connectivity) -> (Vec<u32>, u32) {
    label_value(m, 1, c)
}

/// Flood-fills every component of pixels equal to `value`.
fn label_value(m: &Mask, value: u8, c: Connectivity) -> (Vec<u32>, u32) {
    let (w, h) = (m.width() as i32, m.height() as i32);
    let data = m.data();
    let mut labels = vec![0u32; data.len()];
    let mut count = 0u32;
    let mut stack = Vec::new();

    for start in 0..data.len() {
        if data[start] != value || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (x, y) = ((idx as i32) % w, (idx as i32) / w);
            for &(dx, dy) in c.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let n = (ny * w + nx) as usize;
                if data[n] == value && labels[n] == 0 {
                    labels[n] = count;
                    stack.push(n);
                }
            }
        }
    }
    (labels, count)
}

/// Background labels of four-connected components that touch the image border.
fn border_background(m: &Mask) -> (Vec<u32>, Vec<bool>) {
    let (labels, count) = label_value(m, 0, Connectivity::Four);
    let (w, h) = (m.width() as usize, m.height() as usize);
    let mut touches = vec![false; count as usize + 1];
    let mut mark = |idx: usize| {
        if m.data()[idx] == 0 {
            touches[labels[idx] as usize] = true;
        }
    };
    for x in 0..w {
        mark(x);
        mark((h - 1) * w + x);
    }
    for y in 0..h {
        mark(y * w);
        mark(y * w + w - 1);
    }
    (labels, touches)
}

/// Number of holes: four-connected background components that contain no
/// border pixel.
pub fn count_holes(m: &Mask) -> usize {
    let (_, touches) = border_background(m);
    // Index 0 is the foreground placeholder.
    touches.iter().skip(1).filter(|&&t| !t).count()
}

/// Sets every hole to foreground.
pub fn fill_holes(m: &Mask) -> Mask {
    let (labels, touches) = border_background(m);
    let data = m
        .data()
        .iter()
        .zip(&labels)
        .map(|(&v, &l)| if v == 0 && !touches[l as usize] { 1 } else { v })
        .collect();
    Mask::new(m.width(), m.height(), data).expect("same shape")
}

/// Drops eight-connected foreground components smaller than `min_area` pixels.
pub fn remove_small_segments(m: &Mask, min_area: usize) -> Mask {
    if min_area == 0 {
        return m.clone();
    }
    let (labels, count) = connected_components(m, Connectivity::Eight);
    let mut areas = vec![0usize; count as usize + 1];
    for &l in &labels {
        areas[l as usize] += 1;
    }
    let data = labels
        .iter()
        .map(|&l| (l != 0 && areas[l as usize] >= min_area) as u8)
        .collect();
    Mask::new(m.width(), m.height(), data).expect("same shape")
}
