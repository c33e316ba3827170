//! Seeded synthetic video-like datasets: `scenes` sequences of `frames`
//! frames, each showing one bright disk on a dark background. The disk keeps
//! its scene-specific position and size up to one pixel of jitter per frame,
//! so consecutive frames of a scene look alike and scene changes are jumps.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imageio::{self, IoError};
use crate::imgcore::{BitDepth, Image, Mask};
use crate::selector::SampleId;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub scenes: usize,
    pub frames: usize,
    pub width: u32,
    pub height: u32,
    pub background: u8,
    pub foreground: u8,
    /// Added to both intensities for every scene index.
    pub scene_intensity_step: u8,
    /// Uniform noise amplitude in gray levels.
    pub noise: u8,
    /// Swaps foreground and background intensities in the images while the
    /// ground truth keeps marking the disk.
    pub invert: bool,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            scenes: 4,
            frames: 10,
            width: 64,
            height: 64,
            background: 20,
            foreground: 220,
            scene_intensity_step: 0,
            noise: 5,
            invert: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub id: SampleId,
    pub scene: usize,
    pub frame: usize,
    pub image: Image,
    pub truth: Mask,
}

pub fn sample_id(scene: usize, frame: usize) -> SampleId {
    SampleId::new(format!("s{scene:02}_f{frame:03}"))
}

struct Disk {
    cx: f64,
    cy: f64,
    r: f64,
}

impl Disk {
    fn contains(&self, x: u32, y: u32) -> bool {
        let (dx, dy) = (x as f64 - self.cx, y as f64 - self.cy);
        dx * dx + dy * dy <= self.r * self.r
    }
}

/// All samples in pool order (scene-major).
pub fn generate(p: &SyntheticParams) -> Vec<SyntheticSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let min_dim = p.width.min(p.height) as f64;
    let (cx0, cy0) = (p.width as f64 / 2.0, p.height as f64 / 2.0);
    let phase = rng.gen_range(0.0..TAU);
    let mut out = Vec::with_capacity(p.scenes * p.frames);
    for scene in 0..p.scenes {
        let r = rng.gen_range(0.18..=0.25) * min_dim;
        let orbit = (min_dim / 2.0 - r - 2.0).max(0.0);
        let angle = phase + TAU * scene as f64 / p.scenes.max(1) as f64;
        let (sx, sy) = (cx0 + orbit * angle.cos(), cy0 + orbit * angle.sin());
        let lift = (scene as u32 * p.scene_intensity_step as u32) as i32;
        let (mut fg, mut bg) = (p.foreground as i32 + lift, p.background as i32 + lift);
        if p.invert {
            std::mem::swap(&mut fg, &mut bg);
        }
        for frame in 0..p.frames {
            let disk = Disk {
                cx: sx + rng.gen_range(-1..=1) as f64,
                cy: sy + rng.gen_range(-1..=1) as f64,
                r,
            };
            let truth = Mask::from_fn(p.width, p.height, |x, y| disk.contains(x, y));
            let noise = p.noise as i32;
            let data = truth
                .data()
                .iter()
                .map(|&m| {
                    let base = if m == 1 { fg } else { bg };
                    (base + rng.gen_range(-noise..=noise)).clamp(0, 255) as u16
                })
                .collect();
            out.push(SyntheticSample {
                id: sample_id(scene, frame),
                scene,
                frame,
                image: Image::gray(p.width, p.height, BitDepth::Eight, data).expect("extent"),
                truth,
            });
        }
    }
    out
}

/// Paths of a dataset written by [`write_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub root: PathBuf,
    pub images_dir: PathBuf,
    pub ground_truth_dir: PathBuf,
    /// CSV `sample_id,scene`.
    pub scenes_file: PathBuf,
    pub config_path: PathBuf,
}

pub const PROJECT_TOML: &str = r#"dataset_dir = "images"
labels_dir = "labels"

[selector]
strategies = [{ kind = "sequence_aware", weight = 1.0 }]

[prelabel]
kind = "otsu"
"#;

/// Writes `images/<id>.png`, `ground_truth/<id>.png`, `scenes.csv` and a
/// `project.toml` under `root`.
pub fn write_dataset(root: &Path, p: &SyntheticParams) -> Result<SyntheticDataset, IoError> {
    let ds = SyntheticDataset {
        root: root.to_path_buf(),
        images_dir: root.join("images"),
        ground_truth_dir: root.join("ground_truth"),
        scenes_file: root.join("scenes.csv"),
        config_path: root.join("project.toml"),
    };
    for dir in [&ds.images_dir, &ds.ground_truth_dir] {
        fs::create_dir_all(dir).map_err(|source| IoError::Io {
            path: dir.clone(),
            source,
        })?;
    }
    let mut scenes = String::from("sample_id,scene\n");
    for s in generate(p) {
        imageio::save_image_png(&ds.images_dir.join(format!("{}.png", s.id)), &s.image)?;
        imageio::save_mask(&ds.ground_truth_dir.join(format!("{}.png", s.id)), &s.truth)?;
        writeln!(scenes, "{},{}", s.id, s.scene).expect("string write");
    }
    imageio::write_atomic(&ds.scenes_file, scenes.as_bytes())?;
    imageio::write_atomic(&ds.config_path, PROJECT_TOML.as_bytes())?;
    Ok(ds)
}
