//! Image and disparity file formats.
//!
//! Disparity maps are read from PFM (float, `inf` marks invalid pixels) or
//! KITTI-style 16-bit PNG (`raw / 256`, `0` marks invalid pixels). Images are
//! PNG, PGM or PPM with 8 or 16 bits per sample.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageReader, Luma};

use crate::error::{Error, Result};
use crate::types::{DisparityMap, Image, OcclusionMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Pfm,
    Png,
    Pnm,
    HintCsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisparityFormat {
    Pfm,
    KittiPng,
}

impl DisparityFormat {
    /// Picks the format from the file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match extension(path).as_deref() {
            Some("pfm") => Ok(Self::Pfm),
            Some("png") => Ok(Self::KittiPng),
            _ => Err(file_error(path, "disparity output must end in .pfm or .png")),
        }
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

fn file_error(path: &Path, message: impl Into<String>) -> Error {
    Error::File {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn kind_from_magic(head: &[u8]) -> Option<FileKind> {
    if head.starts_with(b"\x89PNG\r\n\x1a\n") {
        Some(FileKind::Png)
    } else if head.starts_with(b"Pf") || head.starts_with(b"PF") {
        Some(FileKind::Pfm)
    } else if head.len() >= 2 && head[0] == b'P' && matches!(head[1], b'2' | b'3' | b'5' | b'6') {
        Some(FileKind::Pnm)
    } else {
        None
    }
}

/// Determines the file kind from its extension and leading bytes. Files whose
/// content disagrees with their name are rejected.
pub fn detect_kind(path: &Path) -> Result<FileKind> {
    let by_ext = match extension(path).as_deref() {
        Some("pfm") => Some(FileKind::Pfm),
        Some("png") => Some(FileKind::Png),
        Some("pgm" | "ppm" | "pnm") => Some(FileKind::Pnm),
        Some("csv") => Some(FileKind::HintCsv),
        _ => None,
    };
    let mut head = [0u8; 8];
    let n = File::open(path)?.read(&mut head)?;
    let by_magic = kind_from_magic(&head[..n]);
    match (by_ext, by_magic) {
        (Some(FileKind::HintCsv), None) => Ok(FileKind::HintCsv),
        (Some(a), Some(b)) if a == b => Ok(a),
        (None, Some(b)) => Ok(b),
        (Some(a), Some(b)) => Err(file_error(
            path,
            format!("extension says {a:?} but content looks like {b:?}"),
        )),
        (_, None) => Err(file_error(path, "unrecognized file format")),
    }
}

pub fn read_disparity(path: &Path) -> Result<DisparityMap> {
    match detect_kind(path)? {
        FileKind::Pfm => read_pfm(path),
        FileKind::Png => read_kitti_png(path),
        other => Err(file_error(path, format!("{other:?} is not a disparity format"))),
    }
}

pub fn write_disparity(map: &DisparityMap, path: &Path, format: DisparityFormat) -> Result<()> {
    match format {
        DisparityFormat::Pfm => write_pfm(map, path),
        DisparityFormat::KittiPng => write_kitti_png(map, path),
    }
}

fn read_pfm(path: &Path) -> Result<DisparityMap> {
    let bytes = std::fs::read(path)?;
    let bad = |m: &str| file_error(path, format!("malformed PFM: {m}"));
    // Header: magic, width, height, scale, each whitespace separated, then a
    // single whitespace byte before the payload.
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    if pos >= bytes.len() {
        return Err(bad("missing payload"));
    }
    pos += 1;
    match tokens[0] {
        "Pf" => {}
        "PF" => return Err(bad("three-channel PFM is not a disparity map")),
        _ => return Err(bad("bad magic")),
    }
    let w: usize = tokens[1].parse().map_err(|_| bad("bad width"))?;
    let h: usize = tokens[2].parse().map_err(|_| bad("bad height"))?;
    let scale: f64 = tokens[3].parse().map_err(|_| bad("bad scale"))?;
    if w == 0 || h == 0 {
        return Err(bad("empty image"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(bad("scale must be finite and non-zero"));
    }
    let little = scale < 0.0;
    let payload = &bytes[pos..];
    let need = w * h * 4;
    if payload.len() < need {
        return Err(bad(&format!("payload has {} bytes, need {need}", payload.len())));
    }
    let mut values = vec![0f32; w * h];
    let mut valid = vec![false; w * h];
    for (i, chunk) in payload[..need].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (x, file_row) = (i % w, i / w);
        let idx = (h - 1 - file_row) * w + x;
        if v.is_finite() {
            if v < 0.0 {
                return Err(bad(&format!("negative disparity {v} at ({x}, {})", h - 1 - file_row)));
            }
            values[idx] = v;
            valid[idx] = true;
        }
    }
    DisparityMap::new(w, h, values, valid)
}

fn write_pfm(map: &DisparityMap, path: &Path) -> Result<()> {
    let (w, h) = (map.width(), map.height());
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "Pf\n{w} {h}\n-1.0\n")?;
    for y in (0..h).rev() {
        for x in 0..w {
            let v = map.get(x, y).unwrap_or(f32::INFINITY);
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn decode(path: &Path) -> Result<DynamicImage> {
    Ok(ImageReader::open(path)?.with_guessed_format()?.decode()?)
}

fn read_kitti_png(path: &Path) -> Result<DisparityMap> {
    let DynamicImage::ImageLuma16(buf) = decode(path)? else {
        return Err(file_error(
            path,
            "disparity PNG must be single-channel 16-bit",
        ));
    };
    let (w, h) = (buf.width() as usize, buf.height() as usize);
    let raw = buf.into_raw();
    let values = raw.iter().map(|&r| r as f32 / 256.0).collect();
    let valid = raw.iter().map(|&r| r != 0).collect();
    DisparityMap::new(w, h, values, valid)
}

/// Raw KITTI value for a valid disparity. Tiny positive disparities map to 1
/// so they stay distinguishable from the invalid sentinel.
pub fn kitti_raw(d: f32) -> Result<u16> {
    let raw = (d as f64 * 256.0).round();
    if raw > u16::MAX as f64 {
        return Err(Error::OutOfRange {
            value: d as f64,
            format: "16-bit PNG disparity",
        });
    }
    Ok((raw as u16).max(1))
}

fn write_kitti_png(map: &DisparityMap, path: &Path) -> Result<()> {
    let mut raw = Vec::with_capacity(map.len());
    for i in 0..map.len() {
        raw.push(match map.get_index(i) {
            Some(d) => kitti_raw(d)?,
            None => 0,
        });
    }
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(map.width() as u32, map.height() as u32, raw).expect("buffer sized to map");
    buf.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

/// Reads an 8-bit gray or color image. 16-bit samples are scaled to 8 bits
/// and alpha channels are dropped.
pub fn read_image(path: &Path) -> Result<Image> {
    match detect_kind(path)? {
        FileKind::Png | FileKind::Pnm => {}
        other => return Err(file_error(path, format!("{other:?} is not an image format"))),
    }
    let img = decode(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        Image::new(w, h, 3, img.to_rgb8().into_raw())
    } else {
        Image::new(w, h, 1, img.to_luma8().into_raw())
    }
}

/// Writes PNG, or binary PGM/PPM, chosen by extension.
pub fn write_image(img: &Image, path: &Path) -> Result<()> {
    let (w, h, ch) = (img.width() as u32, img.height() as u32, img.channels());
    match extension(path).as_deref() {
        Some("png") => {
            let color = if ch == 1 { image::ExtendedColorType::L8 } else { image::ExtendedColorType::Rgb8 };
            image::save_buffer_with_format(path, img.data(), w, h, color, image::ImageFormat::Png)?;
        }
        Some(ext @ ("pgm" | "ppm" | "pnm")) => {
            let magic = match (ch, ext) {
                (1, "pgm" | "pnm") => "P5",
                (3, "ppm" | "pnm") => "P6",
                _ => return Err(file_error(path, format!("cannot store {ch} channels as .{ext}"))),
            };
            let mut out = BufWriter::new(File::create(path)?);
            write!(out, "{magic}\n{w} {h}\n255\n")?;
            out.write_all(img.data())?;
            out.flush()?;
        }
        _ => return Err(file_error(path, "image output must end in .png, .pgm or .ppm")),
    }
    Ok(())
}

/// Binary mask as an 8-bit PNG, 255 where set.
pub fn write_mask(mask: &OcclusionMask, path: &Path) -> Result<()> {
    let data = mask.as_slice().iter().map(|&m| if m { 255 } else { 0 }).collect();
    write_image(&Image::new(mask.width(), mask.height(), 1, data)?, path)
}
