//! Reading samples and reading/writing binary masks.
//!
//! Samples may be 8/16-bit grayscale or 8-bit RGB, PNG or TIFF. Masks are
//! written as single-channel 8-bit PNG with 0 for background and 255 for
//! foreground; on read any nonzero color value is foreground.

use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use image::{ColorType, DynamicImage, ImageDecoder, ImageFormat};
use thiserror::Error;

use crate::imgcore::{BitDepth, Image, Mask};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: cannot decode image: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("{path}: unsupported pixel format {format} (expected 8/16-bit gray or 8-bit RGB)")]
    UnsupportedFormat { path: PathBuf, format: String },
    #[error("cannot encode PNG: {0}")]
    Encode(String),
}

pub type Result<T> = std::result::Result<T, IoError>;

/// Extensions treated as candidate samples when scanning a dataset directory.
pub const SAMPLE_EXTENSIONS: [&str; 3] = ["png", "tif", "tiff"];

pub fn is_sample_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| SAMPLE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn convert(dynamic: DynamicImage, path: &Path) -> Result<Image> {
    let (w, h) = (dynamic.width(), dynamic.height());
    let built = match dynamic {
        DynamicImage::ImageLuma8(buf) => {
            Image::gray(w, h, BitDepth::Eight, buf.into_raw().into_iter().map(u16::from).collect())
        }
        DynamicImage::ImageLuma16(buf) => Image::gray(w, h, BitDepth::Sixteen, buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => Image::new(
            w,
            h,
            3,
            BitDepth::Eight,
            buf.into_raw().into_iter().map(u16::from).collect(),
        ),
        other => {
            return Err(IoError::UnsupportedFormat {
                path: path.to_path_buf(),
                format: format!("{:?}", other.color()),
            })
        }
    };
    built.map_err(|e| IoError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads only the header: `(width, height, channels, depth)`.
pub fn probe_image(path: &Path) -> Result<(u32, u32, u8, BitDepth)> {
    let decode_err = |message: String| IoError::Decode {
        path: path.to_path_buf(),
        message,
    };
    let decoder = image::ImageReader::open(path)
        .map_err(io_err(path))?
        .with_guessed_format()
        .map_err(io_err(path))?
        .into_decoder()
        .map_err(|e| decode_err(e.to_string()))?;
    let (w, h) = decoder.dimensions();
    let (channels, depth) = match decoder.color_type() {
        ColorType::L8 => (1, BitDepth::Eight),
        ColorType::L16 => (1, BitDepth::Sixteen),
        ColorType::Rgb8 => (3, BitDepth::Eight),
        other => {
            return Err(IoError::UnsupportedFormat {
                path: path.to_path_buf(),
                format: format!("{other:?}"),
            })
        }
    };
    Ok((w, h, channels, depth))
}

pub fn load_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_image_from(&bytes, path)
}

/// Decodes an in-memory PNG or TIFF sample.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    decode_image_from(bytes, Path::new("<image>"))
}

fn decode_image_from(bytes: &[u8], path: &Path) -> Result<Image> {
    let dynamic = image::load_from_memory(bytes).map_err(|e| IoError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    convert(dynamic, path)
}

/// Decodes mask bytes; a pixel is foreground when any color channel is
/// nonzero (alpha is ignored).
pub fn decode_mask(bytes: &[u8]) -> Result<Mask> {
    let origin = Path::new("<mask>");
    let dynamic = image::load_from_memory(bytes).map_err(|e| IoError::Decode {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    let (w, h) = (dynamic.width(), dynamic.height());
    let data: Vec<u8> = match &dynamic {
        DynamicImage::ImageLuma8(buf) => buf.as_raw().iter().map(|&v| (v != 0) as u8).collect(),
        DynamicImage::ImageLuma16(buf) => buf.as_raw().iter().map(|&v| (v != 0) as u8).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| (p.0[0] != 0) as u8).collect(),
        other => other
            .to_rgb16()
            .pixels()
            .map(|p| p.0.iter().any(|&c| c != 0) as u8)
            .collect(),
    };
    Mask::new(w, h, data).map_err(|e| IoError::Decode {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_mask(path: &Path) -> Result<Mask> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_mask(&bytes).map_err(|e| match e {
        IoError::Decode { message, .. } => IoError::Decode {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

fn png_bytes(dynamic: &DynamicImage) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    dynamic
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| IoError::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

/// Mask as single-channel 8-bit PNG, foreground 255.
pub fn encode_mask_png(mask: &Mask) -> Result<Vec<u8>> {
    let raw = mask.data().iter().map(|&v| v * 255).collect();
    let buf = image::GrayImage::from_raw(mask.width(), mask.height(), raw).expect("mask extent");
    png_bytes(&DynamicImage::ImageLuma8(buf))
}

/// Image as PNG at its native depth (16-bit grayscale stays 16-bit).
pub fn encode_image_png(img: &Image) -> Result<Vec<u8>> {
    let (w, h) = (img.width(), img.height());
    let dynamic = match (img.channels(), img.depth()) {
        (1, BitDepth::Eight) => {
            DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, to_u8(img.data())).expect("extent"))
        }
        (1, BitDepth::Sixteen) => DynamicImage::ImageLuma16(
            image::ImageBuffer::from_raw(w, h, img.data().to_vec()).expect("extent"),
        ),
        (3, BitDepth::Eight) => {
            DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, to_u8(img.data())).expect("extent"))
        }
        (3, BitDepth::Sixteen) => DynamicImage::ImageRgb16(
            image::ImageBuffer::from_raw(w, h, img.data().to_vec()).expect("extent"),
        ),
        _ => unreachable!("Image guarantees 1 or 3 channels"),
    };
    png_bytes(&dynamic)
}

fn to_u8(data: &[u16]) -> Vec<u8> {
    data.iter().map(|&v| v as u8).collect()
}

/// 8-bit rendition for display: 16-bit samples are rescaled by
/// `round(v * 255 / 65535)`, 8-bit images pass through unchanged.
pub fn render_8bit(img: &Image) -> Image {
    match img.depth() {
        BitDepth::Eight => img.clone(),
        BitDepth::Sixteen => {
            let data = img
                .data()
                .iter()
                .map(|&v| ((v as u32 * 255 + 32767) / 65535) as u16)
                .collect();
            Image::new(img.width(), img.height(), img.channels(), BitDepth::Eight, data).expect("same extent")
        }
    }
}

/// Writes `bytes` to `path` through a synced temporary file in the same
/// directory, so readers see either the old or the new content.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| IoError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn save_mask(path: &Path, mask: &Mask) -> Result<()> {
    write_atomic(path, &encode_mask_png(mask)?)
}

pub fn save_image_png(path: &Path, img: &Image) -> Result<()> {
    write_atomic(path, &encode_image_png(img)?)
}
