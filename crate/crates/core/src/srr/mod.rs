//! Multiframe super-resolution by a factor of two.
//!
//! Every observation is modelled as the approximation subband of the blurred
//! high-resolution image after a translation, with the translation applied in
//! the wavelet domain by [`crate::inband`]:
//!
//! ```text
//! A_k = approx( shift_k( analyze( B_k * I ) ) )
//! ```
//!
//! Frames therefore carry LR planes in approximation units, which are
//! [`APPROX_GAIN`] times the intensity of a 2x2 block mean. Shifts are in HR
//! pixels; use [`lr_to_hr_shift`] for estimates measured on LR frames.
//!
//! Two solvers are provided: [`reconstruct_ibp`] (iterated back projection
//! with in-band forward modelling) and [`reconstruct_least_squares`] (direct
//! recovery of the detail subbands from the stacked linear relations).

mod ibp;
mod lsq;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::haar::{
    haar_analyze, haar_synthesize, upsample_via_zero_details, SubbandSet, APPROX_GAIN,
};
use crate::inband::{Boundary, InbandShift, DEFAULT_H_MAX};
use crate::raster::{ImagePlane, MultibandVolume};
use crate::resample::{convolve_periodic, Kernel};

pub use ibp::{reconstruct_ibp, ConvergenceReport, IbpConfig};
pub use lsq::{reconstruct_least_squares, shift_set_conditioning, LsqConfig, ResidualReport};

/// Shift measured on an LR grid, expressed in HR pixels.
pub fn lr_to_hr_shift(lr_pixels: f64) -> f64 {
    2.0 * lr_pixels
}

/// Per-frame blur. Kernels are normalised to unit sum.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum BlurSpec {
    #[default]
    Identity,
    Kernel(Kernel),
}

impl BlurSpec {
    pub fn kernel(k: Kernel) -> Result<Self> {
        if (k.sum() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "blur kernel must sum to 1, got {}",
                k.sum()
            )));
        }
        Ok(if k.is_delta() {
            BlurSpec::Identity
        } else {
            BlurSpec::Kernel(k)
        })
    }

    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        Self::kernel(Kernel::gaussian(size, sigma)?)
    }

    pub fn apply(&self, plane: &ImagePlane) -> ImagePlane {
        match self {
            BlurSpec::Identity => plane.clone(),
            BlurSpec::Kernel(k) => convolve_periodic(plane, k),
        }
    }
}

/// One LR observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationFrame {
    /// LR plane in approximation units.
    pub approx: ImagePlane,
    /// Translation relative to the reference, in HR pixels.
    pub shift_x: f64,
    pub shift_y: f64,
    pub blur: BlurSpec,
}

impl ObservationFrame {
    pub fn new(approx: ImagePlane, shift_x: f64, shift_y: f64, blur: BlurSpec) -> Result<Self> {
        if !shift_x.is_finite() || !shift_y.is_finite() {
            return Err(Error::InvalidArgument("frame shift must be finite".into()));
        }
        Ok(Self {
            approx,
            shift_x,
            shift_y,
            blur,
        })
    }

    /// From an LR plane in intensity units (2x2 block means).
    pub fn from_intensity(
        lr: &ImagePlane,
        shift_x: f64,
        shift_y: f64,
        blur: BlurSpec,
    ) -> Result<Self> {
        Self::new(lr.scale(APPROX_GAIN), shift_x, shift_y, blur)
    }

    pub fn is_reference(&self) -> bool {
        self.shift_x == 0.0 && self.shift_y == 0.0
    }

    pub(crate) fn inband(&self, h_max: u32, boundary: Boundary) -> Result<InbandShift> {
        let (w, h) = self.approx.dims();
        InbandShift::new(self.shift_x, self.shift_y, h, w, h_max, boundary)
    }
}

/// Shared frame-set checks: non-empty, equal sizes, zero-shift reference.
fn check_frames(frames: &[ObservationFrame]) -> Result<()> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidArgument("no observation frames".into()))?;
    if !first.is_reference() {
        return Err(Error::InvalidArgument(format!(
            "frame 0 must be the zero-shift reference, has shift ({}, {})",
            first.shift_x, first.shift_y
        )));
    }
    for (i, f) in frames.iter().enumerate().skip(1) {
        first
            .approx
            .ensure_same_dims(&f.approx, &format!("frame {i} vs reference"))?;
    }
    Ok(())
}

fn check_hr(hr: &ImagePlane, lr: &ImagePlane) -> Result<()> {
    if hr.width() != 2 * lr.width() || hr.height() != 2 * lr.height() {
        return Err(Error::DimensionMismatch(format!(
            "HR {}x{} is not twice LR {}x{}",
            hr.width(),
            hr.height(),
            lr.width(),
            lr.height()
        )));
    }
    Ok(())
}

/// Predicted observation of `hr` for `frame` (noise-free).
pub fn forward_project(hr: &ImagePlane, frame: &ObservationFrame) -> Result<ImagePlane> {
    forward_project_with(hr, frame, DEFAULT_H_MAX)
}

pub(crate) fn forward_project_with(
    hr: &ImagePlane,
    frame: &ObservationFrame,
    h_max: u32,
) -> Result<ImagePlane> {
    check_hr(hr, &frame.approx)?;
    let s = haar_analyze(&frame.blur.apply(hr))?;
    if frame.is_reference() {
        return Ok(s.approx);
    }
    frame.inband(h_max, Boundary::Periodic)?.apply_approx(&s)
}

/// Initial HR estimate from the reference approximation `a_ref`: its own
/// detail subbands one level down, divided by [`APPROX_GAIN`] and brought up
/// one level with zero-detail synthesis, serve as the missing first-level
/// details. A linear ramp is reproduced exactly.
pub fn initialize_estimate(a_ref: &ImagePlane) -> Result<ImagePlane> {
    let coarse = haar_analyze(a_ref)?;
    let up = |p: &ImagePlane| upsample_via_zero_details(&p.scale(1.0 / APPROX_GAIN), 1);
    let details = SubbandSet::new(
        a_ref.clone(),
        up(&coarse.horizontal)?,
        up(&coarse.vertical)?,
        up(&coarse.diagonal)?,
    )?;
    haar_synthesize(&details)
}

/// Inverse transform of the reference approximation with estimated details
/// (the approximation band of `details` is ignored).
pub fn finalize(a_ref: &ImagePlane, details: &SubbandSet) -> Result<ImagePlane> {
    a_ref.ensure_same_dims(&details.approx, "finalize")?;
    haar_synthesize(&SubbandSet {
        approx: a_ref.clone(),
        horizontal: details.horizontal.clone(),
        vertical: details.vertical.clone(),
        diagonal: details.diagonal.clone(),
    })
}

/// Solver selection with its configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Solver {
    Ibp(IbpConfig),
    LeastSquares(LsqConfig),
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::Ibp(_) => "ibp",
            Solver::LeastSquares(_) => "lsq",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverReport {
    Ibp(ConvergenceReport),
    LeastSquares(ResidualReport),
}

impl SolverReport {
    pub fn to_table(&self) -> String {
        match self {
            SolverReport::Ibp(r) => r.to_table(),
            SolverReport::LeastSquares(r) => r.to_table(),
        }
    }
}

/// Reconstructs a single band from its frames.
pub fn reconstruct_band(
    frames: &[ObservationFrame],
    solver: &Solver,
) -> Result<(ImagePlane, SolverReport)> {
    match solver {
        Solver::Ibp(cfg) => {
            let (hr, rep) = reconstruct_ibp(frames, cfg)?;
            Ok((hr, SolverReport::Ibp(rep)))
        }
        Solver::LeastSquares(cfg) => {
            let (est, rep) = reconstruct_least_squares(frames, cfg)?;
            Ok((
                finalize(&frames[0].approx, &est)?,
                SolverReport::LeastSquares(rep),
            ))
        }
    }
}

/// Band-parallel reconstruction of registered LR volumes (intensity units).
/// `volumes[0]` is the reference; `shifts[k]` is volume `k`'s translation in
/// HR pixels and `shifts[0]` must be zero.
pub fn reconstruct_volume(
    volumes: &[MultibandVolume],
    shifts: &[(f64, f64)],
    blur: &BlurSpec,
    solver: &Solver,
) -> Result<(MultibandVolume, Vec<SolverReport>)> {
    let first = volumes
        .first()
        .ok_or_else(|| Error::InvalidArgument("no input volumes".into()))?;
    if shifts.len() != volumes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} shifts for {} volumes",
            shifts.len(),
            volumes.len()
        )));
    }
    for (i, v) in volumes.iter().enumerate().skip(1) {
        if v.band_count() != first.band_count() {
            return Err(Error::DimensionMismatch(format!(
                "volume {i} has {} bands, reference has {}",
                v.band_count(),
                first.band_count()
            )));
        }
        if v.dims() != first.dims() {
            return Err(Error::DimensionMismatch(format!(
                "volume {i} size differs from reference"
            )));
        }
    }
    let results: Vec<(ImagePlane, SolverReport)> = (0..first.band_count())
        .into_par_iter()
        .map(|band| {
            let frames = volumes
                .iter()
                .zip(shifts)
                .map(|(v, &(sx, sy))| {
                    ObservationFrame::from_intensity(v.band(band), sx, sy, blur.clone())
                })
                .collect::<Result<Vec<_>>>()?;
            reconstruct_band(&frames, solver)
        })
        .collect::<Result<_>>()?;
    let (bands, reports): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((
        MultibandVolume::with_labels(bands, first.labels().to_vec())?,
        reports,
    ))
}
