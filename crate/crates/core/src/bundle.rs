//! On-disk volume bundles and grayscale PNG interchange.
//!
//! A bundle is a directory holding `manifest.json` and one headerless raw
//! sample file per band, row-major little-endian floats:
//!
//! ```text
//! out/
//!   manifest.json   {"width":64,"height":64,"encoding":"f32le-planar",
//!                    "bands":[{"name":"b1","file":"b1.raw"}, ...]}
//!   b1.raw          64*64*4 bytes
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ImagePlane, MultibandVolume};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SampleEncoding {
    #[default]
    #[serde(rename = "f32le-planar")]
    F32LePlanar,
    /// Lossless for `f64` samples; not part of the interchange default.
    #[serde(rename = "f64le-planar")]
    F64LePlanar,
}

impl SampleEncoding {
    fn bytes_per_sample(self) -> usize {
        match self {
            SampleEncoding::F32LePlanar => 4,
            SampleEncoding::F64LePlanar => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandEntry {
    pub name: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeBundleManifest {
    pub width: usize,
    pub height: usize,
    pub encoding: SampleEncoding,
    pub bands: Vec<BandEntry>,
}

impl VolumeBundleManifest {
    pub fn band_count(&self) -> usize {
        self.bands.len()
    }
}

fn band_file_name(label: &str, index: usize) -> String {
    let clean: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if clean.is_empty() {
        format!("band{index}.raw")
    } else {
        format!("{clean}.raw")
    }
}

pub fn save_bundle(volume: &MultibandVolume, dir: impl AsRef<Path>) -> Result<()> {
    save_bundle_with(volume, dir, SampleEncoding::F32LePlanar)
}

pub fn save_bundle_with(
    volume: &MultibandVolume,
    dir: impl AsRef<Path>,
    encoding: SampleEncoding,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut entries = Vec::with_capacity(volume.band_count());
    let mut used = std::collections::HashSet::new();
    for (i, (band, label)) in volume.bands().iter().zip(volume.labels()).enumerate() {
        let mut file = band_file_name(label, i);
        if !used.insert(file.clone()) {
            file = format!("band{i}.raw");
            used.insert(file.clone());
        }
        let mut bytes = Vec::with_capacity(band.len() * encoding.bytes_per_sample());
        match encoding {
            SampleEncoding::F32LePlanar => {
                for &v in band.samples() {
                    bytes.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
            SampleEncoding::F64LePlanar => {
                for &v in band.samples() {
                    bytes.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        let path = dir.join(&file);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        entries.push(BandEntry {
            name: label.clone(),
            file,
        });
    }

    let manifest = VolumeBundleManifest {
        width: volume.width(),
        height: volume.height(),
        encoding,
        bands: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Manifest {
        path: path.clone(),
        message: e.to_string(),
    })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<VolumeBundleManifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: VolumeBundleManifest =
        serde_json::from_str(&text).map_err(|e| Error::Manifest {
            path: path.clone(),
            message: e.to_string(),
        })?;
    if manifest.width == 0 || manifest.height == 0 {
        return Err(Error::Manifest {
            path,
            message: format!("invalid dimensions {}x{}", manifest.width, manifest.height),
        });
    }
    if manifest.bands.is_empty() {
        return Err(Error::Manifest {
            path,
            message: "no bands listed".into(),
        });
    }
    Ok(manifest)
}

pub fn load_bundle(dir: impl AsRef<Path>) -> Result<MultibandVolume> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let n = manifest.width * manifest.height;
    let bps = manifest.encoding.bytes_per_sample();

    let mut bands = Vec::with_capacity(manifest.band_count());
    let mut labels = Vec::with_capacity(manifest.band_count());
    for entry in &manifest.bands {
        let path: PathBuf = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() != n * bps {
            return Err(Error::Manifest {
                path,
                message: format!(
                    "expected {} bytes ({}x{} samples), found {}",
                    n * bps,
                    manifest.width,
                    manifest.height,
                    bytes.len()
                ),
            });
        }
        let data: Vec<f64> = match manifest.encoding {
            SampleEncoding::F32LePlanar => bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect(),
            SampleEncoding::F64LePlanar => bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect(),
        };
        let plane = ImagePlane::new(manifest.width, manifest.height, data).map_err(|e| {
            Error::Manifest {
                path: path.clone(),
                message: e.to_string(),
            }
        })?;
        bands.push(plane);
        labels.push(entry.name.clone());
    }
    MultibandVolume::with_labels(bands, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PngDepth {
    Eight,
    Sixteen,
}

/// Reads an 8- or 16-bit image as one normalized plane per channel
/// (alpha is dropped).
pub fn read_png_channels(path: impl AsRef<Path>) -> Result<Vec<ImagePlane>> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let is16 = matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    );
    let color = img.color();
    let channels = match color.channel_count() {
        1 | 2 => 1,
        _ => 3,
    };
    let (samples, max): (Vec<f64>, f64) = if is16 {
        if channels == 1 {
            (
                img.to_luma16()
                    .into_raw()
                    .into_iter()
                    .map(f64::from)
                    .collect(),
                65535.0,
            )
        } else {
            (
                img.to_rgb16()
                    .into_raw()
                    .into_iter()
                    .map(f64::from)
                    .collect(),
                65535.0,
            )
        }
    } else if channels == 1 {
        (
            img.to_luma8()
                .into_raw()
                .into_iter()
                .map(f64::from)
                .collect(),
            255.0,
        )
    } else {
        (
            img.to_rgb8()
                .into_raw()
                .into_iter()
                .map(f64::from)
                .collect(),
            255.0,
        )
    };
    (0..channels)
        .map(|ch| {
            let data = samples
                .iter()
                .skip(ch)
                .step_by(channels)
                .map(|v| v / max)
                .collect();
            ImagePlane::new(w, h, data)
        })
        .collect()
}

/// Reads a grayscale PNG (colour images are converted to luma).
pub fn read_png_gray(path: impl AsRef<Path>) -> Result<ImagePlane> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => img
            .to_luma16()
            .into_raw()
            .into_iter()
            .map(|v| f64::from(v) / 65535.0)
            .collect(),
        _ => img
            .to_luma8()
            .into_raw()
            .into_iter()
            .map(|v| f64::from(v) / 255.0)
            .collect(),
    };
    ImagePlane::new(w, h, data)
}

/// Writes a plane as grayscale PNG; samples are clamped to `[0, 1]`.
pub fn write_png_gray(plane: &ImagePlane, path: impl AsRef<Path>, depth: PngDepth) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (plane.width() as u32, plane.height() as u32);
    let result = match depth {
        PngDepth::Eight => {
            let raw: Vec<u8> = plane
                .samples()
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect();
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, raw)
                .expect("buffer sized from plane")
                .save(path)
        }
        PngDepth::Sixteen => {
            let raw: Vec<u16> = plane
                .samples()
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
                .collect();
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, raw)
                .expect("buffer sized from plane")
                .save(path)
        }
    };
    result.map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}
