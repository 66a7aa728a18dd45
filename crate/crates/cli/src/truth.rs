//! Ground-truth volumes for simulated experiments.

use std::f64::consts::TAU;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pansrr_core::bundle::{load_bundle, read_png_channels};
use pansrr_core::{ImagePlane, MultibandVolume};

pub const SYNTHETIC_BANDS: usize = 6;

/// Per-band weights over (R, G, B) of the natural image.
const SPECTRAL_MIX: [[f64; 3]; SYNTHETIC_BANDS] = [
    [0.1, 0.2, 0.7],
    [0.1, 0.7, 0.2],
    [0.7, 0.2, 0.1],
    [0.5, 0.4, 0.1],
    [0.4, 0.3, 0.3],
    [0.3, 0.3, 0.4],
];

/// Zone plate, checkerboard, bars and a disc on a `size`x`size` grid, in `[0, 1]`.
pub fn test_pattern(size: usize) -> Result<ImagePlane> {
    let n = size as f64;
    let c = (n - 1.0) / 2.0;
    // Local frequency of the zone plate reaches 0.3 cycles/pixel at the rim.
    let k = 0.3 / (n / 2.0);
    Ok(ImagePlane::from_fn(size, size, |r, col| {
        let (x, y) = (col as f64, r as f64);
        let rr = (x - c).powi(2) + (y - c).powi(2);
        let zone = 0.5 + 0.5 * (std::f64::consts::PI * k * rr).cos();
        let checker = if ((col / 6) + (r / 6)) % 2 == 0 {
            1.0
        } else {
            0.0
        };
        let bars = if ((col as f64 / (2.0 + y / 16.0)) as usize).is_multiple_of(2) {
            1.0
        } else {
            0.0
        };
        let disc = if rr.sqrt() < n / 6.0 { 1.0 } else { 0.0 };
        let (left, top) = (col < size / 2, r < size / 2);
        let structure = match (left, top) {
            (true, true) => checker,
            (false, true) => bars,
            _ => 0.5 * zone + 0.5 * disc,
        };
        0.5 * zone + 0.5 * structure
    })?)
}

fn smooth_field(size: usize, band: usize) -> Result<ImagePlane> {
    let n = size as f64;
    let p = band as f64;
    Ok(ImagePlane::from_fn(size, size, |r, c| {
        let (x, y) = (c as f64 / n, r as f64 / n);
        0.5 + 0.25 * (TAU * (2.0 * x + y) + p).sin() + 0.2 * (TAU * (3.0 * y - x) + 0.5 * p).cos()
    })?)
}

fn center_crop(p: &ImagePlane, size: usize) -> Result<ImagePlane> {
    let (w, h) = p.dims();
    if w < size || h < size {
        bail!("natural image is {w}x{h}, smaller than the requested {size}x{size}");
    }
    Ok(p.crop((w - size) / 2, (h - size) / 2, size, size)?)
}

/// Six-band truth: half test pattern, half a spectral mix of `natural`
/// (grey or RGB planes, centre-cropped), or of smooth fields without it.
pub fn synthetic_truth(size: usize, natural: Option<&[ImagePlane]>) -> Result<MultibandVolume> {
    if size == 0 || !size.is_multiple_of(2) {
        bail!("synthetic truth size must be even and positive, got {size}");
    }
    let pattern = test_pattern(size)?;
    let channels = match natural {
        Some(ch) if !ch.is_empty() => {
            let mut v: Vec<ImagePlane> = ch
                .iter()
                .map(|p| center_crop(p, size))
                .collect::<Result<_>>()?;
            while v.len() < 3 {
                v.push(v[0].clone());
            }
            Some(v)
        }
        _ => None,
    };
    let bands = (0..SYNTHETIC_BANDS)
        .map(|b| {
            let texture = match &channels {
                Some(ch) => {
                    let w = SPECTRAL_MIX[b];
                    ch[0]
                        .scale(w[0])
                        .add_scaled(&ch[1], w[1])?
                        .add_scaled(&ch[2], w[2])?
                }
                None => smooth_field(size, b)?,
            };
            let gain = 0.6 + 0.06 * b as f64;
            Ok(pattern
                .scale(0.5 * gain)
                .add_scaled(&texture, 0.5 * gain)?
                .map(|v| v + 0.05))
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = (1..=SYNTHETIC_BANDS).map(|i| format!("band{i}")).collect();
    Ok(MultibandVolume::with_labels(bands, labels)?)
}

/// Resolves a truth source: `builtin:<size>`, a PNG file, or a bundle directory.
pub fn load_truth(source: &str, natural: Option<&Path>) -> Result<MultibandVolume> {
    if let Some(size) = source.strip_prefix("builtin:") {
        let size: usize = size
            .parse()
            .with_context(|| format!("bad builtin size `{size}`"))?;
        let channels = natural
            .map(|p| read_png_channels(p).with_context(|| format!("reading {}", p.display())))
            .transpose()?;
        return synthetic_truth(size, channels.as_deref());
    }
    let path = Path::new(source);
    if !path.exists() {
        bail!("truth input {} does not exist", path.display());
    }
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
    {
        let bands = read_png_channels(path)?;
        return Ok(MultibandVolume::new(bands)?);
    }
    Ok(load_bundle(path)?)
}
