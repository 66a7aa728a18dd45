//! Comparison methods: interpolation of the reference frame and classic
//! pixel-domain iterated back projection over all frames.

use anyhow::{bail, Result};
use pansrr_core::resample::{
    block_mean2, convolve_periodic, translate_periodic, upscale2x, Interpolation, Kernel,
};
use pansrr_core::srr::{BlurSpec, ConvergenceReport, IbpConfig};
use pansrr_core::{ImagePlane, MultibandVolume};
use rayon::prelude::*;

use crate::config::Baseline;
use crate::simulate::FrameSet;

/// Nearest-neighbour 2x enlargement.
fn replicate2(plane: &ImagePlane) -> Result<ImagePlane> {
    Ok(ImagePlane::from_fn(
        2 * plane.width(),
        2 * plane.height(),
        |r, c| plane.get(r / 2, c / 2),
    )?)
}

fn predict(hr: &ImagePlane, shift: (f64, f64), blur: &BlurSpec) -> Result<ImagePlane> {
    Ok(block_mean2(
        &blur.apply(&translate_periodic(hr, shift.0, shift.1)),
    )?)
}

/// Irani-Peleg style IBP on one band. Frames are LR intensity planes,
/// `shifts` in HR pixels. The estimate starts from bilinear interpolation of
/// the reference; residuals are replicated onto the HR grid, smoothed by the
/// 3x3 binomial back-projection kernel and translated back.
pub fn classic_ibp(
    frames: &[&ImagePlane],
    shifts: &[(f64, f64)],
    blur: &BlurSpec,
    config: &IbpConfig,
) -> Result<(ImagePlane, ConvergenceReport)> {
    config.validate()?;
    if frames.is_empty() || frames.len() != shifts.len() {
        bail!(
            "classic IBP needs one shift per frame, got {} frames and {} shifts",
            frames.len(),
            shifts.len()
        );
    }
    let h_bp = Kernel::binomial3();
    let mut hr = upscale2x(frames[0], Interpolation::Bilinear);
    let k = frames.len() as f64;
    let mut residuals = Vec::new();
    let mut converged = false;
    for iteration in 1..=config.max_iterations {
        let mut mse_sum = 0.0;
        let mut acc = ImagePlane::zeros(hr.width(), hr.height())?;
        for (lr, &shift) in frames.iter().zip(shifts) {
            let r = lr.sub(&predict(&hr, shift, blur)?)?;
            mse_sum += r.sum_of_squares() / r.len() as f64;
            let back = translate_periodic(
                &convolve_periodic(&replicate2(&r)?, &h_bp),
                -shift.0,
                -shift.1,
            );
            acc = acc.add_scaled(&back, 1.0)?;
        }
        let mean = mse_sum / k;
        if !mean.is_finite() {
            bail!("classic IBP diverged at iteration {iteration}");
        }
        residuals.push(mean);
        if mean <= config.tau {
            converged = true;
            break;
        }
        hr = hr.add_scaled(&acc, config.lambda / k)?;
    }
    let monotone = residuals.windows(2).all(|w| w[1] <= w[0]);
    Ok((
        hr,
        ConvergenceReport {
            residuals,
            converged,
            monotone,
        },
    ))
}

/// Runs one baseline over every band. Interpolation uses only the reference
/// frame; classic IBP also returns one convergence report per band.
pub fn run_baseline(
    baseline: Baseline,
    set: &FrameSet,
    blur: &BlurSpec,
    config: &IbpConfig,
) -> Result<(MultibandVolume, Vec<ConvergenceReport>)> {
    let reference = set.reference();
    let labels = reference.labels().to_vec();
    let interp = |method| -> Result<(MultibandVolume, Vec<ConvergenceReport>)> {
        let bands = reference
            .bands()
            .par_iter()
            .map(|b| upscale2x(b, method))
            .collect();
        Ok((
            MultibandVolume::with_labels(bands, labels.clone())?,
            Vec::new(),
        ))
    };
    match baseline {
        Baseline::Linear => interp(Interpolation::Bilinear),
        Baseline::Bicubic => interp(Interpolation::Bicubic),
        Baseline::ClassicIbp => {
            let results: Vec<(ImagePlane, ConvergenceReport)> = (0..reference.band_count())
                .into_par_iter()
                .map(|b| {
                    let planes: Vec<&ImagePlane> = set.frames.iter().map(|f| f.band(b)).collect();
                    classic_ibp(&planes, &set.shifts, blur, config)
                })
                .collect::<Result<_>>()?;
            let (bands, reports): (Vec<_>, Vec<_>) = results.into_iter().unzip();
            Ok((MultibandVolume::with_labels(bands, labels)?, reports))
        }
    }
}
