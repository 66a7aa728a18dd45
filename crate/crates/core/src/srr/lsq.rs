//! Detail-subband recovery from the stacked in-band shift relations.
//!
//! With the reference approximation `A` known, each shifted frame contributes
//!
//! ```text
//! A_k - Fy A Fx = Fy a K1 + L1 b Fx + L1 c K1
//! ```
//!
//! (after the frame's circular subband shift). Written with row-major
//! vectorisation, `vec(P X Q) = (P kron Q^T) vec(X)`, this is an ordinary
//! overdetermined linear system in `(a, b, c)`. It is solved by conjugate
//! gradients on the normal equations (CGLS) using only the bidiagonal
//! stencils; no matrix is ever formed.

use std::fmt::Write as _;

use nalgebra::{Complex, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::haar::SubbandSet;
use crate::inband::{BidiagonalToeplitz, Boundary, InbandShift, Orientation, DEFAULT_H_MAX};
use crate::raster::ImagePlane;

use super::{check_frames, ObservationFrame};

#[derive(Debug, Clone, PartialEq)]
pub struct LsqConfig {
    /// Stop when `|M^T r| / |M^T y|` falls to this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub boundary: Boundary,
    pub h_max: u32,
    /// Rank diagnostic threshold on the smallest singular value of the
    /// per-frequency system.
    pub rank_tolerance: f64,
}

impl Default for LsqConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 500,
            boundary: Boundary::Periodic,
            h_max: DEFAULT_H_MAX,
            rank_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub iterations: usize,
    /// `|r|` of the zero-detail starting point.
    pub initial_residual: f64,
    /// `|r|` of the returned solution.
    pub final_residual: f64,
    /// Relative normal-equation residual after each iteration.
    pub history: Vec<f64>,
    pub converged: bool,
    /// Smallest singular value found by the rank diagnostic.
    pub conditioning: f64,
}

impl ResidualReport {
    pub fn to_table(&self) -> String {
        let mut s = String::from("iteration  residual\n");
        for (i, r) in self.history.iter().enumerate() {
            let _ = writeln!(s, "{:>9}  {:.6e}", i + 1, r);
        }
        let _ = writeln!(
            s,
            "# converged={} |r0|={:.6e} |r|={:.6e} min_singular={:.3e}",
            self.converged, self.initial_residual, self.final_residual, self.conditioning
        );
        s
    }
}

type Details = [ImagePlane; 3];

fn dot(u: &Details, v: &Details) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| {
            a.samples()
                .iter()
                .zip(b.samples())
                .map(|(x, y)| x * y)
                .sum::<f64>()
        })
        .sum()
}

fn axpy(y: &Details, k: f64, x: &Details) -> Result<Details> {
    Ok([
        y[0].add_scaled(&x[0], k)?,
        y[1].add_scaled(&x[1], k)?,
        y[2].add_scaled(&x[2], k)?,
    ])
}

fn stacked_dot(u: &[ImagePlane], v: &[ImagePlane]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| {
            a.samples()
                .iter()
                .zip(b.samples())
                .map(|(x, y)| x * y)
                .sum::<f64>()
        })
        .sum()
}

/// The stacked detail operator `M` and its adjoint.
struct System {
    shifts: Vec<InbandShift>,
}

impl System {
    fn roll(p: &ImagePlane, s: &InbandShift, sign: i64) -> ImagePlane {
        if s.x.circular == 0 && s.y.circular == 0 {
            p.clone()
        } else {
            p.roll(
                (sign * s.x.circular) as isize,
                (sign * s.y.circular) as isize,
            )
        }
    }

    fn apply(&self, x: &Details) -> Result<Vec<ImagePlane>> {
        self.shifts
            .iter()
            .map(|s| {
                let op = &s.operator;
                let [a, b, c] = [0, 1, 2].map(|i| Self::roll(&x[i], s, 1));
                let t1 = op.fy.left_apply(&op.k1.right_apply(&a)?)?;
                let t2 = op.l1.left_apply(&op.fx.right_apply(&b)?)?;
                let t3 = op.l1.left_apply(&op.k1.right_apply(&c)?)?;
                t1.add_scaled(&t2, 1.0)?.add_scaled(&t3, 1.0)
            })
            .collect()
    }

    fn adjoint(&self, y: &[ImagePlane], zero: &ImagePlane) -> Result<Details> {
        let mut acc = [zero.clone(), zero.clone(), zero.clone()];
        for (s, r) in self.shifts.iter().zip(y) {
            let op = &s.operator;
            let k1t = op.k1.transpose().right_apply(r)?;
            let a = op.fy.transpose().left_apply(&k1t)?;
            let b = op
                .l1
                .transpose()
                .left_apply(&op.fx.transpose().right_apply(r)?)?;
            let c = op.l1.transpose().left_apply(&k1t)?;
            for (slot, v) in acc.iter_mut().zip([a, b, c]) {
                *slot = slot.add_scaled(&Self::roll(&v, s, -1), 1.0)?;
            }
        }
        Ok(acc)
    }
}

/// Right preconditioner for the truncated system: rescales the unknowns by
/// the inverses of the first non-trivial horizontal and vertical coupling
/// matrices, `a = a' Dx^-1`, `b = Dy^-1 b'`, `c = Dy^-1 c' Dx^-1`.
struct Preconditioner {
    dx: Option<BidiagonalToeplitz>,
    dy: Option<BidiagonalToeplitz>,
}

impl Preconditioner {
    fn new(system: &System, boundary: Boundary) -> Self {
        if boundary != Boundary::Truncated {
            return Self { dx: None, dy: None };
        }
        let dx = system
            .shifts
            .iter()
            .map(|s| s.operator.k1)
            .find(|m| m.diag != 0.0);
        let dy = system
            .shifts
            .iter()
            .map(|s| s.operator.l1)
            .find(|m| m.diag != 0.0);
        Self { dx, dy }
    }

    fn right(
        m: &Option<BidiagonalToeplitz>,
        p: &ImagePlane,
        transpose: bool,
    ) -> Result<ImagePlane> {
        match m {
            None => Ok(p.clone()),
            Some(m) if transpose => m.transpose().solve_right(p),
            Some(m) => m.solve_right(p),
        }
    }

    fn left(m: &Option<BidiagonalToeplitz>, p: &ImagePlane, transpose: bool) -> Result<ImagePlane> {
        match m {
            None => Ok(p.clone()),
            Some(m) if transpose => m.transpose().solve_left(p),
            Some(m) => m.solve_left(p),
        }
    }

    fn apply(&self, x: &Details, transpose: bool) -> Result<Details> {
        Ok([
            Self::right(&self.dx, &x[0], transpose)?,
            Self::left(&self.dy, &x[1], transpose)?,
            Self::left(
                &self.dy,
                &Self::right(&self.dx, &x[2], transpose)?,
                transpose,
            )?,
        ])
    }
}

fn symbol(m: &BidiagonalToeplitz, omega: f64, right: bool) -> Complex<f64> {
    // Eigenvalue of the circulant on exp(i omega k): the neighbour pulled is
    // k + 1 for (lower, right) and (upper, left), else k - 1.
    let forward = matches!(
        (m.orientation, right),
        (Orientation::Lower, true) | (Orientation::Upper, false)
    );
    let phase = if forward { omega } else { -omega };
    Complex::new(m.diag, 0.0) + Complex::from_polar(m.off, phase)
}

/// Smallest singular value of the per-frequency `K x 3` system over all
/// frequencies with non-zero horizontal and vertical components. Zero when
/// the shift set cannot separate the three detail subbands.
pub fn shift_set_conditioning(shifts: &[InbandShift]) -> f64 {
    let Some(first) = shifts.first() else {
        return 0.0;
    };
    let (n, m) = first.operator.dims();
    let mut smallest = f64::INFINITY;
    for v in 1..m {
        let wy = 2.0 * std::f64::consts::PI * v as f64 / m as f64;
        for u in 1..n {
            let wx = 2.0 * std::f64::consts::PI * u as f64 / n as f64;
            let mut gram = Matrix3::<Complex<f64>>::zeros();
            for s in shifts {
                let op = &s.operator;
                let (fx, k1) = (symbol(&op.fx, wx, true), symbol(&op.k1, wx, true));
                let (fy, l1) = (symbol(&op.fy, wy, false), symbol(&op.l1, wy, false));
                let row = Vector3::new(fy * k1, l1 * fx, l1 * k1);
                gram += row.conjugate() * row.transpose();
            }
            let ev = gram.symmetric_eigenvalues();
            let min = ev.iter().fold(f64::INFINITY, |a, &b| a.min(b)).max(0.0);
            smallest = smallest.min(min.sqrt());
        }
    }
    if smallest.is_finite() {
        smallest
    } else {
        0.0
    }
}

/// Recovers the detail subbands of the HR image given the zero-shift
/// reference `frames[0]` and at least three shifted frames. Frame blur is
/// not part of this model. Returns the full subband set (approximation =
/// reference) and the solver report.
///
/// With [`Boundary::Periodic`] the relations cannot see the detail content
/// that is constant along a row or column; CGLS started from zero returns the
/// minimum-norm solution, which sets that content to zero.
pub fn reconstruct_least_squares(
    frames: &[ObservationFrame],
    config: &LsqConfig,
) -> Result<(SubbandSet, ResidualReport)> {
    check_frames(frames)?;
    let shifted = &frames[1..];
    if shifted.len() < 3 {
        return Err(Error::TooFewFrames {
            required: 3,
            actual: shifted.len(),
        });
    }
    let a_ref = &frames[0].approx;
    let shifts = shifted
        .iter()
        .map(|f| f.inband(config.h_max, config.boundary))
        .collect::<Result<Vec<_>>>()?;
    let conditioning = shift_set_conditioning(&shifts);
    if conditioning < config.rank_tolerance {
        return Err(Error::RankDeficient {
            smallest_singular: conditioning,
        });
    }
    let system = System { shifts };
    let precond = Preconditioner::new(&system, config.boundary);

    let rhs = system
        .shifts
        .iter()
        .zip(shifted)
        .map(|(s, f)| {
            let op = &s.operator;
            let a = System::roll(a_ref, s, 1);
            f.approx.sub(&op.fy.left_apply(&op.fx.right_apply(&a)?)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let zero = ImagePlane::zeros(a_ref.width(), a_ref.height())?;
    let initial_residual = stacked_dot(&rhs, &rhs).sqrt();

    // CGLS on M P, with x = P x'.
    let mut xp: Details = [zero.clone(), zero.clone(), zero.clone()];
    let mut r = rhs;
    let mut s = precond.apply(&system.adjoint(&r, &zero)?, true)?;
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let gamma0 = gamma;
    let mut history = Vec::new();
    let mut converged = gamma0 == 0.0;
    let mut iterations = 0;
    while !converged && iterations < config.max_iterations {
        iterations += 1;
        let q = system.apply(&precond.apply(&p, false)?)?;
        let qq = stacked_dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        xp = axpy(&xp, alpha, &p)?;
        r = r
            .iter()
            .zip(&q)
            .map(|(ri, qi)| ri.add_scaled(qi, -alpha))
            .collect::<Result<_>>()?;
        s = precond.apply(&system.adjoint(&r, &zero)?, true)?;
        let gamma_next = dot(&s, &s);
        let rel = (gamma_next / gamma0).sqrt();
        if !rel.is_finite() {
            return Err(Error::Diverged {
                iteration: iterations,
            });
        }
        history.push(rel);
        if rel <= config.tolerance {
            converged = true;
            break;
        }
        let beta = gamma_next / gamma;
        p = axpy(&s, beta, &p)?;
        gamma = gamma_next;
    }
    let [horizontal, vertical, diagonal] = precond.apply(&xp, false)?;
    let final_residual = stacked_dot(&r, &r).sqrt();
    Ok((
        SubbandSet::new(a_ref.clone(), horizontal, vertical, diagonal)?,
        ResidualReport {
            iterations,
            initial_residual,
            final_residual,
            history,
            converged,
            conditioning,
        },
    ))
}
