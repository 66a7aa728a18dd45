//! One-level orthonormal 2D Haar transform.
//!
//! For the 2x2 block `[[p, q], [r, s]]` at block `(i, j)`:
//!
//! ```text
//! A = (p + q + r + s) / 2     approximation
//! a = (p - q + r - s) / 2     horizontal detail (difference across columns)
//! b = (p + q - r - s) / 2     vertical detail (difference across rows)
//! c = (p - q - r + s) / 2     diagonal detail
//! ```
//!
//! Under this convention the approximation of a block whose samples all equal
//! `v` is `2v`; [`APPROX_GAIN`] is that factor and is the only place the
//! convention leaks into intensity units.

use crate::error::{Error, Result};
use crate::raster::ImagePlane;

/// Approximation coefficient of a unit-valued 2x2 block.
pub const APPROX_GAIN: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub approx: ImagePlane,
    pub horizontal: ImagePlane,
    pub vertical: ImagePlane,
    pub diagonal: ImagePlane,
}

impl SubbandSet {
    pub fn new(
        approx: ImagePlane,
        horizontal: ImagePlane,
        vertical: ImagePlane,
        diagonal: ImagePlane,
    ) -> Result<Self> {
        for (name, p) in [
            ("horizontal", &horizontal),
            ("vertical", &vertical),
            ("diagonal", &diagonal),
        ] {
            approx.ensure_same_dims(p, name)?;
        }
        Ok(Self {
            approx,
            horizontal,
            vertical,
            diagonal,
        })
    }

    /// Approximation only; all details zero.
    pub fn from_approx(approx: ImagePlane) -> Self {
        let z = ImagePlane::from_raw(approx.width(), approx.height(), vec![0.0; approx.len()]);
        Self {
            horizontal: z.clone(),
            vertical: z.clone(),
            diagonal: z,
            approx,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Ok(Self::from_approx(ImagePlane::zeros(width, height)?))
    }

    /// Subband dimensions `(n, m)` = (columns, rows).
    pub fn dims(&self) -> (usize, usize) {
        self.approx.dims()
    }

    pub fn bands(&self) -> [&ImagePlane; 4] {
        [
            &self.approx,
            &self.horizontal,
            &self.vertical,
            &self.diagonal,
        ]
    }

    pub fn map(&self, f: impl Fn(&ImagePlane) -> ImagePlane) -> SubbandSet {
        SubbandSet {
            approx: f(&self.approx),
            horizontal: f(&self.horizontal),
            vertical: f(&self.vertical),
            diagonal: f(&self.diagonal),
        }
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.bands().iter().map(|b| b.sum_of_squares()).sum()
    }
}

fn ensure_even(plane: &ImagePlane) -> Result<()> {
    if !plane.width().is_multiple_of(2) {
        return Err(Error::OddDimension {
            axis: "width",
            size: plane.width(),
        });
    }
    if !plane.height().is_multiple_of(2) {
        return Err(Error::OddDimension {
            axis: "height",
            size: plane.height(),
        });
    }
    Ok(())
}

pub fn haar_analyze(plane: &ImagePlane) -> Result<SubbandSet> {
    ensure_even(plane)?;
    let (w, h) = (plane.width() / 2, plane.height() / 2);
    let src = plane.samples();
    let stride = plane.width();
    let mut bands = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    for i in 0..h {
        let top = 2 * i * stride;
        let bot = top + stride;
        for j in 0..w {
            let p = src[top + 2 * j];
            let q = src[top + 2 * j + 1];
            let r = src[bot + 2 * j];
            let s = src[bot + 2 * j + 1];
            bands[0].push((p + q + r + s) * 0.5);
            bands[1].push((p - q + r - s) * 0.5);
            bands[2].push((p + q - r - s) * 0.5);
            bands[3].push((p - q - r + s) * 0.5);
        }
    }
    let [a, ha, v, d] = bands;
    Ok(SubbandSet {
        approx: ImagePlane::from_raw(w, h, a),
        horizontal: ImagePlane::from_raw(w, h, ha),
        vertical: ImagePlane::from_raw(w, h, v),
        diagonal: ImagePlane::from_raw(w, h, d),
    })
}

pub fn haar_synthesize(subbands: &SubbandSet) -> Result<ImagePlane> {
    let (w, h) = subbands.dims();
    for (name, p) in [
        ("horizontal", &subbands.horizontal),
        ("vertical", &subbands.vertical),
        ("diagonal", &subbands.diagonal),
    ] {
        subbands.approx.ensure_same_dims(p, name)?;
    }
    let stride = 2 * w;
    let mut out = vec![0.0; 4 * w * h];
    let (sa, sh, sv, sd) = (
        subbands.approx.samples(),
        subbands.horizontal.samples(),
        subbands.vertical.samples(),
        subbands.diagonal.samples(),
    );
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let (a, ha, v, d) = (sa[k], sh[k], sv[k], sd[k]);
            let top = 2 * i * stride + 2 * j;
            out[top] = (a + ha + v + d) * 0.5;
            out[top + 1] = (a - ha + v - d) * 0.5;
            out[top + stride] = (a + ha - v - d) * 0.5;
            out[top + stride + 1] = (a - ha - v + d) * 0.5;
        }
    }
    Ok(ImagePlane::from_raw(stride, 2 * h, out))
}

/// Treats `plane` as an approximation subband and synthesizes with zero
/// details, `levels` times. Each level doubles both dimensions and halves the
/// sample values (see [`APPROX_GAIN`]).
pub fn upsample_via_zero_details(plane: &ImagePlane, levels: u32) -> Result<ImagePlane> {
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    let mut cur = plane.clone();
    for _ in 0..levels {
        cur = haar_synthesize(&SubbandSet::from_approx(cur))?;
    }
    Ok(cur)
}

/// Pixel-replication upsampling of an intensity image: zero-detail synthesis
/// with the approximation gain compensated, so a constant stays constant.
pub fn upsample_intensity(plane: &ImagePlane, levels: u32) -> Result<ImagePlane> {
    let gain = APPROX_GAIN.powi(levels as i32);
    upsample_via_zero_details(&plane.scale(gain), levels)
}

/// Approximation subband after `levels` analysis steps.
pub fn approximation_at(plane: &ImagePlane, levels: u32) -> Result<ImagePlane> {
    let mut cur = plane.clone();
    for _ in 0..levels {
        cur = haar_analyze(&cur)?.approx;
    }
    Ok(cur)
}

/// Circularly shifts every subband: `out[i][j] = in[i + dy][j + dx]`.
pub fn circular_shift_subbands(subbands: &SubbandSet, dx: i64, dy: i64) -> SubbandSet {
    subbands.map(|p| p.roll(dx as isize, dy as isize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plane(w: usize, h: usize, v: &[f64]) -> ImagePlane {
        ImagePlane::new(w, h, v.to_vec()).unwrap()
    }

    #[test]
    fn constant_block_has_no_detail() {
        let s = haar_analyze(&plane(2, 2, &[1.0; 4])).unwrap();
        assert_eq!(s.approx.samples(), &[2.0]);
        assert_eq!(s.horizontal.samples(), &[0.0]);
        assert_eq!(s.vertical.samples(), &[0.0]);
        assert_eq!(s.diagonal.samples(), &[0.0]);
    }

    #[test]
    fn single_corner_pixel() {
        let s = haar_analyze(&plane(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        for b in s.bands() {
            assert_eq!(b.samples(), &[0.5]);
        }
    }

    #[test]
    fn odd_dimension_names_axis() {
        let err = haar_analyze(&ImagePlane::zeros(3, 2).unwrap()).unwrap_err();
        assert!(matches!(
            err,
            Error::OddDimension {
                axis: "width",
                size: 3
            }
        ));
        let err = haar_analyze(&ImagePlane::zeros(2, 5).unwrap()).unwrap_err();
        assert!(matches!(
            err,
            Error::OddDimension {
                axis: "height",
                size: 5
            }
        ));
    }

    #[test]
    fn synthesize_examples() {
        let s = SubbandSet::from_approx(plane(1, 1, &[2.0]));
        assert_eq!(haar_synthesize(&s).unwrap().samples(), &[1.0; 4]);
        let z = SubbandSet::zeros(3, 2).unwrap();
        let p = haar_synthesize(&z).unwrap();
        assert_eq!(p.dims(), (6, 4));
        assert!(p.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn synthesize_rejects_mismatch() {
        let a = ImagePlane::zeros(2, 2).unwrap();
        let b = ImagePlane::zeros(3, 2).unwrap();
        let s = SubbandSet {
            approx: a.clone(),
            horizontal: b,
            vertical: a.clone(),
            diagonal: a,
        };
        assert!(matches!(
            haar_synthesize(&s),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn upsample_examples() {
        let up = upsample_via_zero_details(&plane(1, 1, &[2.0]), 1).unwrap();
        assert_eq!(up.samples(), &[1.0; 4]);
        let z = upsample_via_zero_details(&ImagePlane::zeros(3, 2).unwrap(), 3).unwrap();
        assert_eq!(z.dims(), (24, 16));
        assert!(z.samples().iter().all(|&v| v == 0.0));

        let q = ImagePlane::from_fn(4, 3, |r, c| (r as f64) - 0.25 * c as f64).unwrap();
        let s = haar_analyze(&upsample_via_zero_details(&q, 1).unwrap()).unwrap();
        assert_eq!(s.approx, q);
        for d in [&s.horizontal, &s.vertical, &s.diagonal] {
            assert!(d.samples().iter().all(|&v| v == 0.0));
        }
        assert!(upsample_via_zero_details(&q, 0).is_err());
    }

    #[test]
    fn upsample_intensity_keeps_constants() {
        let c = ImagePlane::filled(3, 3, 0.7).unwrap();
        let up = upsample_intensity(&c, 2).unwrap();
        assert_eq!(up.dims(), (12, 12));
        assert!(up.samples().iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn circular_shift_examples() {
        let p = ImagePlane::from_fn(8, 6, |r, c| (r * 8 + c) as f64).unwrap();
        let s = haar_analyze(&p).unwrap();
        assert_eq!(circular_shift_subbands(&s, 0, 0), s);
        assert_eq!(circular_shift_subbands(&s, 4, 0), s);
        assert_eq!(
            circular_shift_subbands(&circular_shift_subbands(&s, 1, 0), -1, 0),
            s
        );
    }

    fn arb_plane() -> impl Strategy<Value = ImagePlane> {
        (1usize..=16, 1usize..=16).prop_flat_map(|(hw, hh)| {
            prop::collection::vec(-1.0f64..1.0, 4 * hw * hh)
                .prop_map(move |v| ImagePlane::new(2 * hw, 2 * hh, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn perfect_reconstruction(p in arb_plane()) {
            let back = haar_synthesize(&haar_analyze(&p).unwrap()).unwrap();
            for (a, b) in back.samples().iter().zip(p.samples()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn energy_preserved(p in arb_plane()) {
            let e0 = p.sum_of_squares();
            let e1 = haar_analyze(&p).unwrap().sum_of_squares();
            prop_assert!((e0 - e1).abs() <= 1e-9 * e0.max(1e-300));
        }

        #[test]
        fn even_roll_commutes_with_analysis(p in arb_plane(), k in -3i64..=3) {
            let s = haar_analyze(&p).unwrap();
            let shifted = haar_analyze(&p.roll(2 * k as isize, 0)).unwrap();
            prop_assert_eq!(circular_shift_subbands(&s, k, 0), shifted);
        }
    }
}
