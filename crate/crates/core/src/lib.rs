//! Multiframe super-resolution of pansharpened multispectral imagery using
//! in-band (wavelet-domain) shifts.
//!
//! Pipeline: [`awlp`] fusion, [`registration`] and rotation removal, then
//! per-band reconstruction in [`srr`] by iterated back projection or a
//! structured least-squares solve. [`metrics`] scores results.
//!
//! # Units
//!
//! | quantity               | unit                                  |
//! |------------------------|---------------------------------------|
//! | raster samples         | normalised intensity, nominally [0,1] |
//! | LR frame on disk       | intensity (2x2 block mean of HR)      |
//! | LR frame in the solver | approximation subband = 2 x intensity |
//! | frame shifts           | HR pixels                             |
//! | registration output    | pixels of the registered image        |
//!
//! [`srr::lr_to_hr_shift`] is the only conversion between the last two rows.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod awlp;
pub mod bundle;
pub mod error;
pub mod haar;
pub mod inband;
pub mod metrics;
pub mod raster;
pub mod registration;
pub mod resample;
pub mod srr;

pub use error::{Error, Result};
pub use haar::{haar_analyze, haar_synthesize, SubbandSet, APPROX_GAIN};
pub use raster::{ImagePlane, MultibandVolume};
