//! Closed-form in-band shifts of first-level Haar subbands.
//!
//! Translating an image and re-analysing it can be computed directly from the
//! subbands of the untranslated image:
//!
//! ```text
//! A_s =  Fy A Fx  + Fy a K1 + L1 b Fx + L1 c K1
//! a_s = -Fy A K1  + Fy a K2 - L1 b K1 + L1 c K2
//! b_s = -L1 A Fx  - L1 a K1 + L2 b Fx + L2 c K1
//! c_s =  L1 A K1  - L1 a K2 - L2 b K1 + L2 c K2
//! ```
//!
//! The x-operators multiply from the right, the y-operators from the left. All
//! six are bidiagonal Toeplitz matrices and are applied as two-tap stencils.
//!
//! # Shift convention
//!
//! A shift of `t` pixels along an axis means the shifted image samples the
//! original at `k + t`: `out[k] = in[k + t]`. Fractional shifts follow the
//! box (area) model of upsampling by zero-detail synthesis, shifting by an
//! integer on the finer grid and analysing back, which for `0 <= t <= 1` is
//! `out[k] = (1 - t) in[k] + t in[k + 1]`. All shifts are in units of the
//! image the subbands were computed from (the HR grid); one subband sample
//! spans two such pixels.

use crate::error::{Error, Result};
use crate::haar::{circular_shift_subbands, SubbandSet};
use crate::raster::ImagePlane;

/// Default cap on hypothetically added levels: shifts resolve to 1/64 px.
pub const DEFAULT_H_MAX: u32 = 6;

const INTEGER_EPS: f64 = 1e-9;

/// A subpixel shift `s / 2^h` expressed as an integer shift `s` after `h`
/// hypothetically added levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ShiftSpec {
    pub h: u32,
    pub s: i64,
}

impl ShiftSpec {
    pub const ZERO: ShiftSpec = ShiftSpec { h: 0, s: 0 };

    /// Validated constructor. The box model is exact for `|s| <= 2^h`.
    pub fn new(h: u32, s: i64) -> Result<Self> {
        if h > 30 {
            return Err(Error::InvalidArgument(format!("h={h} is too large")));
        }
        if s.unsigned_abs() > 1u64 << h {
            return Err(Error::ShiftOutOfRange { h, s });
        }
        Ok(Self { h, s })
    }

    /// The represented shift in pixels.
    pub fn value(&self) -> f64 {
        self.s as f64 / (1u64 << self.h) as f64
    }

    fn denom(&self) -> f64 {
        (1u64 << (self.h + 1)) as f64
    }
}

/// How the stencils treat the last row/column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Wrap around; matches circular shifts of the image.
    #[default]
    Periodic,
    /// Drop the wrapped entry, i.e. zero extension beyond the border.
    Truncated,
}

/// Which off-diagonal of the matrix is populated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Sub-diagonal: `M[k + 1][k] = off`.
    Lower,
    /// Super-diagonal: `M[k][k + 1] = off`.
    Upper,
}

impl Orientation {
    fn flipped(self) -> Self {
        match self {
            Orientation::Lower => Orientation::Upper,
            Orientation::Upper => Orientation::Lower,
        }
    }
}

/// `size x size` bidiagonal Toeplitz matrix stored as two scalars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidiagonalToeplitz {
    pub size: usize,
    pub diag: f64,
    pub off: f64,
    pub orientation: Orientation,
    pub boundary: Boundary,
}

impl BidiagonalToeplitz {
    pub fn identity(size: usize, boundary: Boundary) -> Self {
        Self {
            size,
            diag: 1.0,
            off: 0.0,
            orientation: Orientation::Lower,
            boundary,
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            orientation: self.orientation.flipped(),
            ..*self
        }
    }

    /// Offset of the coupled neighbour when multiplying a row vector from the
    /// right (`x M`): lower pulls from `j + 1`, upper from `j - 1`.
    fn right_step(&self) -> isize {
        match self.orientation {
            Orientation::Lower => 1,
            Orientation::Upper => -1,
        }
    }

    /// Neighbour offset for `M x` with `x` a column vector.
    fn left_step(&self) -> isize {
        -self.right_step()
    }

    /// Applies to a 1D signal with neighbour offset `step`.
    fn stencil(&self, x: &[f64], stride: usize, step: isize, out: &mut [f64]) {
        let n = self.size as isize;
        for k in 0..n {
            let nb = k + step;
            let neighbour = if (0..n).contains(&nb) {
                x[nb as usize * stride]
            } else {
                match self.boundary {
                    Boundary::Periodic => x[nb.rem_euclid(n) as usize * stride],
                    Boundary::Truncated => 0.0,
                }
            };
            out[k as usize * stride] = self.diag * x[k as usize * stride] + self.off * neighbour;
        }
    }

    /// `X M`, acting along rows; requires `X.width() == size`.
    pub fn right_apply(&self, x: &ImagePlane) -> Result<ImagePlane> {
        if x.width() != self.size {
            return Err(Error::DimensionMismatch(format!(
                "right operand width {} vs operator size {}",
                x.width(),
                self.size
            )));
        }
        let (w, h) = x.dims();
        let src = x.samples();
        let mut out = vec![0.0; w * h];
        let step = self.right_step();
        for r in 0..h {
            self.stencil(
                &src[r * w..(r + 1) * w],
                1,
                step,
                &mut out[r * w..(r + 1) * w],
            );
        }
        Ok(ImagePlane::from_raw(w, h, out))
    }

    /// `M X`, acting along columns; requires `X.height() == size`.
    pub fn left_apply(&self, x: &ImagePlane) -> Result<ImagePlane> {
        if x.height() != self.size {
            return Err(Error::DimensionMismatch(format!(
                "left operand height {} vs operator size {}",
                x.height(),
                self.size
            )));
        }
        let (w, h) = x.dims();
        let src = x.samples();
        let mut out = vec![0.0; w * h];
        let step = self.left_step();
        for c in 0..w {
            self.stencil(&src[c..], w, step, &mut out[c..]);
        }
        Ok(ImagePlane::from_raw(w, h, out))
    }

    /// `Y M^{-1}` for a truncated matrix with non-zero diagonal.
    pub fn solve_right(&self, y: &ImagePlane) -> Result<ImagePlane> {
        self.check_solvable()?;
        if y.width() != self.size {
            return Err(Error::DimensionMismatch("solve_right width".into()));
        }
        let (w, h) = y.dims();
        let mut out = y.samples().to_vec();
        let step = self.right_step();
        for r in 0..h {
            self.substitute(&mut out[r * w..(r + 1) * w], 1, step);
        }
        Ok(ImagePlane::from_raw(w, h, out))
    }

    /// `M^{-1} Y` for a truncated matrix with non-zero diagonal.
    pub fn solve_left(&self, y: &ImagePlane) -> Result<ImagePlane> {
        self.check_solvable()?;
        if y.height() != self.size {
            return Err(Error::DimensionMismatch("solve_left height".into()));
        }
        let (w, h) = y.dims();
        let mut out = y.samples().to_vec();
        let step = self.left_step();
        for c in 0..w {
            self.substitute(&mut out[c..], w, step);
        }
        Ok(ImagePlane::from_raw(w, h, out))
    }

    fn check_solvable(&self) -> Result<()> {
        if self.boundary != Boundary::Truncated || self.diag == 0.0 {
            return Err(Error::InvalidArgument(
                "triangular solve needs a truncated operator with non-zero diagonal".into(),
            ));
        }
        Ok(())
    }

    /// In-place solve of `d x[k] + o x[k + step] = y[k]` (zero outside).
    fn substitute(&self, v: &mut [f64], stride: usize, step: isize) {
        let n = self.size;
        let order: Box<dyn Iterator<Item = usize>> = if step > 0 {
            Box::new((0..n).rev())
        } else {
            Box::new(0..n)
        };
        for k in order {
            let nb = k as isize + step;
            let coupled = if (0..n as isize).contains(&nb) {
                self.off * v[nb as usize * stride]
            } else {
                0.0
            };
            v[k * stride] = (v[k * stride] - coupled) / self.diag;
        }
    }

    /// Dense row-major copy, for verification against matrix products.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size;
        let mut m = vec![vec![0.0; n]; n];
        for k in 0..n {
            m[k][k] += self.diag;
        }
        for k in 0..n {
            let (row, col) = match self.orientation {
                Orientation::Lower => (k + 1, k),
                Orientation::Upper => (k, k + 1),
            };
            if row < n && col < n {
                m[row][col] += self.off;
            } else if self.boundary == Boundary::Periodic {
                m[row % n][col % n] += self.off;
            }
        }
        m
    }
}

/// The six coefficient matrices for one pair of axis shifts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftOperator {
    pub spec_x: ShiftSpec,
    pub spec_y: ShiftSpec,
    pub fx: BidiagonalToeplitz,
    pub k1: BidiagonalToeplitz,
    pub k2: BidiagonalToeplitz,
    pub fy: BidiagonalToeplitz,
    pub l1: BidiagonalToeplitz,
    pub l2: BidiagonalToeplitz,
}

/// `(F, K1, K2)` for one axis, with orientation given for positive shifts.
fn axis_matrices(
    spec: ShiftSpec,
    size: usize,
    positive: Orientation,
    boundary: Boundary,
) -> [BidiagonalToeplitz; 3] {
    let d = spec.denom();
    let s = spec.s as f64;
    let sa = s.abs();
    let orientation = if spec.s >= 0 {
        positive
    } else {
        positive.flipped()
    };
    let mk = |diag: f64, off: f64| BidiagonalToeplitz {
        size,
        diag,
        off,
        orientation,
        boundary,
    };
    [
        mk((d - sa) / d, sa / d),
        mk(-s / d, s / d),
        mk((d - 3.0 * sa) / d, -sa / d),
    ]
}

/// Builds the operator for subbands of `m` rows and `n` columns with
/// periodic stencils.
pub fn build_operator(
    spec_x: ShiftSpec,
    spec_y: ShiftSpec,
    m: usize,
    n: usize,
) -> Result<ShiftOperator> {
    build_operator_with(spec_x, spec_y, m, n, Boundary::Periodic)
}

pub fn build_operator_with(
    spec_x: ShiftSpec,
    spec_y: ShiftSpec,
    m: usize,
    n: usize,
    boundary: Boundary,
) -> Result<ShiftOperator> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!("operator size {m}x{n}")));
    }
    let spec_x = ShiftSpec::new(spec_x.h, spec_x.s)?;
    let spec_y = ShiftSpec::new(spec_y.h, spec_y.s)?;
    let [fx, k1, k2] = axis_matrices(spec_x, n, Orientation::Lower, boundary);
    let [fy, l1, l2] = axis_matrices(spec_y, m, Orientation::Upper, boundary);
    Ok(ShiftOperator {
        spec_x,
        spec_y,
        fx,
        k1,
        k2,
        fy,
        l1,
        l2,
    })
}

impl ShiftOperator {
    /// Subband dimensions `(n, m)` the operator applies to.
    pub fn dims(&self) -> (usize, usize) {
        (self.fx.size, self.fy.size)
    }

    fn check(&self, s: &SubbandSet) -> Result<()> {
        if s.dims() != self.dims() {
            let (n, m) = self.dims();
            let (w, h) = s.dims();
            return Err(Error::DimensionMismatch(format!(
                "subbands {w}x{h} vs operator {n}x{m}"
            )));
        }
        Ok(())
    }

    /// Shifted approximation subband only (first line of the relations).
    pub fn apply_approx(&self, s: &SubbandSet) -> Result<ImagePlane> {
        self.check(s)?;
        let p = self
            .fx
            .right_apply(&s.approx)?
            .add_scaled(&self.k1.right_apply(&s.horizontal)?, 1.0)?;
        let r = self
            .fx
            .right_apply(&s.vertical)?
            .add_scaled(&self.k1.right_apply(&s.diagonal)?, 1.0)?;
        self.fy
            .left_apply(&p)?
            .add_scaled(&self.l1.left_apply(&r)?, 1.0)
    }
}

/// Evaluates the four in-band shift relations.
pub fn apply_inband_shift(s: &SubbandSet, op: &ShiftOperator) -> Result<SubbandSet> {
    op.check(s)?;
    // Horizontal stage on the row-lowpass pair (A, a) and row-highpass pair (b, c).
    let p = op
        .fx
        .right_apply(&s.approx)?
        .add_scaled(&op.k1.right_apply(&s.horizontal)?, 1.0)?;
    let q = op
        .k2
        .right_apply(&s.horizontal)?
        .add_scaled(&op.k1.right_apply(&s.approx)?, -1.0)?;
    let r = op
        .fx
        .right_apply(&s.vertical)?
        .add_scaled(&op.k1.right_apply(&s.diagonal)?, 1.0)?;
    let t = op
        .k2
        .right_apply(&s.diagonal)?
        .add_scaled(&op.k1.right_apply(&s.vertical)?, -1.0)?;

    let approx = op
        .fy
        .left_apply(&p)?
        .add_scaled(&op.l1.left_apply(&r)?, 1.0)?;
    let horizontal = op
        .fy
        .left_apply(&q)?
        .add_scaled(&op.l1.left_apply(&t)?, 1.0)?;
    let vertical = op
        .l2
        .left_apply(&r)?
        .add_scaled(&op.l1.left_apply(&p)?, -1.0)?;
    let diagonal = op
        .l2
        .left_apply(&t)?
        .add_scaled(&op.l1.left_apply(&q)?, -1.0)?;
    Ok(SubbandSet {
        approx,
        horizontal,
        vertical,
        diagonal,
    })
}

/// An arbitrary shift split into a circular subband shift and a subpixel
/// remainder: `shift = 2 * circular + subpixel.value()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftDecomposition {
    pub circular: i64,
    pub subpixel: ShiftSpec,
}

impl ShiftDecomposition {
    pub fn total(&self) -> f64 {
        2.0 * self.circular as f64 + self.subpixel.value()
    }
}

fn encode_remainder(rem: f64, h_max: u32) -> ShiftSpec {
    for h in 0..=h_max {
        let scaled = rem * (1u64 << h) as f64;
        if (scaled - scaled.round()).abs() < INTEGER_EPS * (1u64 << h) as f64 {
            return ShiftSpec {
                h,
                s: scaled.round() as i64,
            };
        }
    }
    let mut h = h_max;
    let mut s = (rem * (1u64 << h_max) as f64).round() as i64;
    if s == 0 {
        return ShiftSpec::ZERO;
    }
    while h > 0 && s % 2 == 0 {
        s /= 2;
        h -= 1;
    }
    ShiftSpec { h, s }
}

/// Splits a shift (in pixels of the analysed image) into a circular subband
/// shift and a remainder in `[-1, 1]`.
///
/// | shift                  | circular  | remainder   |
/// |------------------------|-----------|-------------|
/// | even integer           | `s/2`     | `0`         |
/// | odd integer            | `floor(s/2)` | `1`      |
/// | `ceil(s)` even         | `ceil(s)/2` | `s - ceil(s)` |
/// | `floor(s)` even        | `floor(s)/2` | `s - floor(s)` |
///
/// The remainder uses the smallest `h <= h_max` that makes it an integer at
/// the added level, otherwise it is rounded to the nearest multiple of
/// `2^-h_max`.
pub fn decompose_shift(shift: f64, h_max: u32) -> ShiftDecomposition {
    let nearest = shift.round();
    if (shift - nearest).abs() < INTEGER_EPS {
        let s = nearest as i64;
        return if s.rem_euclid(2) == 0 {
            ShiftDecomposition {
                circular: s / 2,
                subpixel: ShiftSpec::ZERO,
            }
        } else {
            ShiftDecomposition {
                circular: s.div_euclid(2),
                subpixel: ShiftSpec { h: 0, s: 1 },
            }
        };
    }
    let ceil = shift.ceil();
    let floor = shift.floor();
    let (anchor, rem) = if (ceil as i64).rem_euclid(2) == 0 {
        (ceil, shift - ceil)
    } else {
        (floor, shift - floor)
    };
    ShiftDecomposition {
        circular: (anchor as i64) / 2,
        subpixel: encode_remainder(rem, h_max),
    }
}

/// A translation prepared for subbands of a fixed size: decomposition of each
/// axis plus the matching operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InbandShift {
    pub shift_x: f64,
    pub shift_y: f64,
    pub x: ShiftDecomposition,
    pub y: ShiftDecomposition,
    pub h_max: u32,
    pub operator: ShiftOperator,
}

impl InbandShift {
    pub fn new(
        shift_x: f64,
        shift_y: f64,
        m: usize,
        n: usize,
        h_max: u32,
        boundary: Boundary,
    ) -> Result<Self> {
        if !shift_x.is_finite() || !shift_y.is_finite() {
            return Err(Error::InvalidArgument("shift must be finite".into()));
        }
        let x = decompose_shift(shift_x, h_max);
        let y = decompose_shift(shift_y, h_max);
        let operator = build_operator_with(x.subpixel, y.subpixel, m, n, boundary)?;
        Ok(Self {
            shift_x,
            shift_y,
            x,
            y,
            h_max,
            operator,
        })
    }

    /// The shift in the opposite direction; the adjoint of `self` under the
    /// periodic model.
    pub fn inverse(&self) -> Result<Self> {
        let (n, m) = self.operator.dims();
        Self::new(
            -self.shift_x,
            -self.shift_y,
            m,
            n,
            self.h_max,
            self.operator.fx.boundary,
        )
    }

    fn circular(&self, s: &SubbandSet) -> SubbandSet {
        if self.x.circular == 0 && self.y.circular == 0 {
            s.clone()
        } else {
            circular_shift_subbands(s, self.x.circular, self.y.circular)
        }
    }

    pub fn apply(&self, s: &SubbandSet) -> Result<SubbandSet> {
        apply_inband_shift(&self.circular(s), &self.operator)
    }

    pub fn apply_approx(&self, s: &SubbandSet) -> Result<ImagePlane> {
        self.operator.apply_approx(&self.circular(s))
    }
}

/// Shifts subbands by an arbitrary amount: circular part first, then the
/// subpixel remainder through the in-band relations.
pub fn shift_subbands(
    s: &SubbandSet,
    shift_x: f64,
    shift_y: f64,
    h_max: u32,
) -> Result<SubbandSet> {
    let (n, m) = s.dims();
    InbandShift::new(shift_x, shift_y, m, n, h_max, Boundary::Periodic)?.apply(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::haar_analyze;

    fn spec(h: u32, s: i64) -> ShiftSpec {
        ShiftSpec::new(h, s).unwrap()
    }

    #[test]
    fn zero_shift_operator_is_identity() {
        let op = build_operator(ShiftSpec::ZERO, ShiftSpec::ZERO, 3, 4).unwrap();
        assert_eq!((op.fx.diag, op.fx.off), (1.0, 0.0));
        assert_eq!((op.k1.diag, op.k1.off), (0.0, 0.0));
        assert_eq!((op.k2.diag, op.k2.off), (1.0, 0.0));
        assert_eq!((op.l1.diag, op.l1.off), (0.0, 0.0));
    }

    #[test]
    fn half_pixel_coefficients() {
        let op = build_operator(spec(1, 1), ShiftSpec::ZERO, 4, 4).unwrap();
        assert_eq!((op.fx.diag, op.fx.off), (0.75, 0.25));
        assert_eq!((op.k1.diag, op.k1.off), (-0.25, 0.25));
        assert_eq!((op.k2.diag, op.k2.off), (0.25, -0.25));
        assert_eq!(op.fx.orientation, Orientation::Lower);
        assert_eq!(op.fy.orientation, Orientation::Upper);

        let neg = build_operator(spec(1, -1), spec(1, -1), 4, 4).unwrap();
        assert_eq!((neg.fx.diag, neg.fx.off), (0.75, 0.25));
        assert_eq!((neg.k1.diag, neg.k1.off), (0.25, -0.25));
        assert_eq!((neg.k2.diag, neg.k2.off), (0.25, -0.25));
        assert_eq!(neg.fx.orientation, Orientation::Upper);
        assert_eq!(neg.fy.orientation, Orientation::Lower);
    }

    #[test]
    fn out_of_range_shift_rejected() {
        assert!(matches!(
            ShiftSpec::new(1, 4),
            Err(Error::ShiftOutOfRange { h: 1, s: 4 })
        ));
        assert!(matches!(
            build_operator(ShiftSpec { h: 0, s: 3 }, ShiftSpec::ZERO, 2, 2),
            Err(Error::ShiftOutOfRange { .. })
        ));
    }

    #[test]
    fn decomposition_rows() {
        let d = decompose_shift(3.0, 6);
        assert_eq!((d.circular, d.subpixel), (1, spec(0, 1)));
        let d = decompose_shift(1.5, 6);
        assert_eq!((d.circular, d.subpixel), (1, spec(1, -1)));
        let d = decompose_shift(0.75, 2);
        assert_eq!((d.circular, d.subpixel), (0, spec(2, 3)));
        let d = decompose_shift(-4.0, 6);
        assert_eq!((d.circular, d.subpixel), (-2, ShiftSpec::ZERO));
        let d = decompose_shift(-3.0, 6);
        assert_eq!((d.circular, d.subpixel), (-2, spec(0, 1)));
        let d = decompose_shift(-1.5, 6);
        assert_eq!((d.circular, d.subpixel), (-1, spec(1, 1)));
    }

    #[test]
    fn decomposition_rounds_to_grid() {
        let d = decompose_shift(0.3, 3);
        assert_eq!(d.subpixel, spec(2, 1));
        assert!((d.total() - 0.25).abs() < 1e-15);
        let d = decompose_shift(0.999, 6);
        assert!((d.total() - 1.0).abs() < 1e-15);
        for t in [-7.3, -0.01, 0.0, 2.49, 5.125, 9.999] {
            let d = decompose_shift(t, 6);
            assert!((d.total() - t).abs() <= 0.5 / 64.0 + 1e-12, "{t}");
            assert!(d.subpixel.s.unsigned_abs() <= 1 << d.subpixel.h);
        }
    }

    #[test]
    fn horizontal_only_collapse() {
        let p = ImagePlane::from_fn(8, 8, |r, c| ((r * 13 + c * 7) % 5) as f64).unwrap();
        let s = haar_analyze(&p).unwrap();
        let op = build_operator(spec(1, 1), ShiftSpec::ZERO, 4, 4).unwrap();
        assert_eq!((op.fy.diag, op.fy.off), (1.0, 0.0));
        assert_eq!((op.l1.diag, op.l1.off), (0.0, 0.0));
        let out = apply_inband_shift(&s, &op).unwrap();
        let expect_v = op
            .fx
            .right_apply(&s.vertical)
            .unwrap()
            .add_scaled(&op.k1.right_apply(&s.diagonal).unwrap(), 1.0)
            .unwrap();
        assert_eq!(out.vertical, expect_v);
        // Outputs do not depend on the vertical detail for the lowpass pair.
        let mut s2 = s.clone();
        s2.vertical = s.vertical.scale(-3.0);
        let out2 = apply_inband_shift(&s2, &op).unwrap();
        assert_eq!(out.approx, out2.approx);
        assert_eq!(out.horizontal, out2.horizontal);
    }

    #[test]
    fn solve_inverts_apply() {
        let x = ImagePlane::from_fn(5, 4, |r, c| (r as f64 + 1.0) * (c as f64 - 2.0)).unwrap();
        for orientation in [Orientation::Lower, Orientation::Upper] {
            let mx = BidiagonalToeplitz {
                size: 5,
                diag: -0.25,
                off: 0.25,
                orientation,
                boundary: Boundary::Truncated,
            };
            let back = mx.solve_right(&mx.right_apply(&x).unwrap()).unwrap();
            let my = BidiagonalToeplitz { size: 4, ..mx };
            let back2 = my.solve_left(&my.left_apply(&x).unwrap()).unwrap();
            for (a, b) in back.samples().iter().zip(x.samples()) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in back2.samples().iter().zip(x.samples()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let periodic = BidiagonalToeplitz::identity(3, Boundary::Periodic);
        assert!(periodic
            .solve_right(&ImagePlane::zeros(3, 1).unwrap())
            .is_err());
    }
}
