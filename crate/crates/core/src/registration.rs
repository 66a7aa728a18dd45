//! Rigid (rotation + translation) registration and rotation removal.
//!
//! The motion model maps a target pixel `p` to the reference position
//! `R(theta) (p - c) + c + t`, where `c` is the image centre, so that
//! `target(p) = reference(R(theta) (p - c) + c + t)`.
//!
//! Estimation runs in three stages:
//! 1. rotation hypotheses from the strongest peaks of the angular profile of
//!    the log magnitude spectrum (translation invariant), each taken with its
//!    half-turn alternative;
//! 2. translation hypotheses from the strongest phase correlation peaks of
//!    the derotated target, refined with a parabolic fit; the pair with the
//!    highest normalised cross-correlation wins;
//! 3. damped Gauss-Newton on the sum of squared differences over all three
//!    parameters, sampling the reference bicubically and ignoring pixels that
//!    map outside it.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::raster::{ImagePlane, MultibandVolume};
use crate::resample::{center, rotate_about_center, rotate_point, sample_bicubic};

/// Result of [`estimate_transform`]. Frames with `valid == false` must not
/// be used downstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidParams {
    pub rotation: f64,
    pub translation_x: f64,
    pub translation_y: f64,
    pub valid: bool,
    /// Normalised cross-correlation of the aligned overlap, in `[-1, 1]`.
    pub score: f64,
}

impl Default for RigidParams {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidParams {
    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn new(rotation: f64, translation_x: f64, translation_y: f64) -> Self {
        Self {
            rotation,
            translation_x,
            translation_y,
            valid: true,
            score: 1.0,
        }
    }

    /// Reference position of target pixel `(x, y)` for an image centred at
    /// `(cx, cy)`.
    pub fn map_point(&self, x: f64, y: f64, cx: f64, cy: f64) -> (f64, f64) {
        let (u, v) = rotate_point(x, y, self.rotation, cx, cy);
        (u + self.translation_x, v + self.translation_y)
    }

    /// Transform whose mapping is `self` applied after `inner`:
    /// `p -> self.map(inner.map(p))`.
    pub fn compose(&self, inner: &RigidParams) -> RigidParams {
        let (s, c) = self.rotation.sin_cos();
        let (tx, ty) = (inner.translation_x, inner.translation_y);
        RigidParams {
            rotation: wrap_angle(self.rotation + inner.rotation),
            translation_x: c * tx - s * ty + self.translation_x,
            translation_y: s * tx + c * ty + self.translation_y,
            valid: self.valid && inner.valid,
            score: self.score.min(inner.score),
        }
    }

    pub fn inverse(&self) -> RigidParams {
        let (s, c) = (-self.rotation).sin_cos();
        let (tx, ty) = (self.translation_x, self.translation_y);
        RigidParams {
            rotation: wrap_angle(-self.rotation),
            translation_x: -(c * tx - s * ty),
            translation_y: -(s * tx + c * ty),
            ..*self
        }
    }

    fn ensure_valid(&self) -> Result<()> {
        if !self.valid {
            return Err(Error::InvalidParams("parameters flagged invalid".into()));
        }
        if !(self.rotation.abs() < std::f64::consts::PI)
            || !self.translation_x.is_finite()
            || !self.translation_y.is_finite()
        {
            return Err(Error::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    if a > -PI && a <= PI {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

fn is_constant(p: &ImagePlane) -> bool {
    let (lo, hi) = p.min_max();
    hi - lo == 0.0
}

fn fft2(data: &mut [Complex64], w: usize, h: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row, col) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    row.process(data);
    let mut t = vec![Complex64::default(); w * h];
    for y in 0..h {
        for x in 0..w {
            t[x * h + y] = data[y * w + x];
        }
    }
    col.process(&mut t);
    for x in 0..w {
        for y in 0..h {
            data[y * w + x] = t[x * h + y];
        }
    }
}

fn windowed_spectrum(p: &ImagePlane, window: &[f64]) -> Vec<Complex64> {
    let mean = p.mean();
    let mut d: Vec<Complex64> = p
        .samples()
        .iter()
        .zip(window)
        .map(|(v, w)| Complex64::new((v - mean) * w, 0.0))
        .collect();
    fft2(&mut d, p.width(), p.height(), false);
    d
}

fn hann_separable(w: usize, h: usize) -> Vec<f64> {
    let hann = |i: usize, n: usize| {
        if n < 2 {
            1.0
        } else {
            0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()
        }
    };
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push(hann(x, w) * hann(y, h));
        }
    }
    out
}

fn hann_radial(w: usize, h: usize) -> Vec<f64> {
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let r_max = w.min(h) as f64 / 2.0;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let r = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            out.push(if r < r_max {
                0.5 + 0.5 * (std::f64::consts::PI * r / r_max).cos()
            } else {
                0.0
            });
        }
    }
    out
}

fn parabolic_offset(left: f64, mid: f64, right: f64) -> f64 {
    let denom = left - 2.0 * mid + right;
    if denom.abs() < 1e-300 {
        0.0
    } else {
        (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
    }
}

/// Number of phase correlation peaks tried as translation hypotheses.
const TRANSLATION_CANDIDATES: usize = 4;

/// Translations `t` with `moving(p) ~ fixed(p + t)` at the strongest phase
/// correlation peaks, highest first.
fn phase_correlate(fixed: &ImagePlane, moving: &ImagePlane) -> Vec<(f64, f64)> {
    let (w, h) = fixed.dims();
    let win = hann_separable(w, h);
    let a = windowed_spectrum(fixed, &win);
    let b = windowed_spectrum(moving, &win);
    let mut r: Vec<Complex64> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| {
            let c = x * y.conj();
            let n = c.norm();
            if n > 1e-12 {
                c / n
            } else {
                Complex64::default()
            }
        })
        .collect();
    fft2(&mut r, w, h, true);
    let corr: Vec<f64> = r.iter().map(|c| c.re / (w * h) as f64).collect();
    let at = |x: isize, y: isize| {
        corr[(y.rem_euclid(h as isize) as usize) * w + x.rem_euclid(w as isize) as usize]
    };
    let is_peak = |i: usize| {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        (-1..=1).all(|dy| (-1..=1).all(|dx| (dx, dy) == (0, 0) || corr[i] > at(x + dx, y + dy)))
    };
    let mut peaks: Vec<usize> = (0..w * h).filter(|&i| is_peak(i)).collect();
    peaks.sort_by(|&i, &j| corr[j].total_cmp(&corr[i]));
    let signed = |p: isize, n: usize| {
        if p > n as isize / 2 {
            p - n as isize
        } else {
            p
        }
    };
    peaks
        .into_iter()
        .take(TRANSLATION_CANDIDATES)
        .map(|i| {
            let (px, py) = ((i % w) as isize, (i / w) as isize);
            let peak = at(px, py);
            let dx = parabolic_offset(at(px - 1, py), peak, at(px + 1, py));
            let dy = parabolic_offset(at(px, py - 1), peak, at(px, py + 1));
            (signed(px, w) as f64 + dx, signed(py, h) as f64 + dy)
        })
        .collect()
}

const ANGLE_BINS: usize = 360;

/// Zero-mean log-magnitude spectrum sampled on a polar grid over half a turn.
fn polar_profile(p: &ImagePlane) -> Vec<Vec<f64>> {
    let (w, h) = p.dims();
    let spec = windowed_spectrum(p, &hann_radial(w, h));
    let mag: Vec<f64> = spec.iter().map(|c| c.norm().ln_1p()).collect();
    let sample = |kx: f64, ky: f64| {
        let (x0, y0) = (kx.floor(), ky.floor());
        let (fx, fy) = (kx - x0, ky - y0);
        let at = |x: isize, y: isize| {
            mag[(y.rem_euclid(h as isize) as usize) * w + x.rem_euclid(w as isize) as usize]
        };
        let (x0, y0) = (x0 as isize, y0 as isize);
        (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x0 + 1, y0))
            + fy * ((1.0 - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1))
    };
    let m = w.min(h) as f64;
    let (r_lo, r_hi) = ((0.06 * m).max(3.0), 0.45 * m);
    let n_r = ((r_hi - r_lo).ceil() as usize).max(1);
    (0..n_r)
        .map(|i| {
            let r = r_lo + (r_hi - r_lo) * i as f64 / n_r as f64;
            let mut row: Vec<f64> = (0..ANGLE_BINS)
                .map(|k| {
                    let phi = std::f64::consts::PI * k as f64 / ANGLE_BINS as f64;
                    sample(r * phi.cos() * w as f64 / m, r * phi.sin() * h as f64 / m)
                })
                .collect();
            let mean = row.iter().sum::<f64>() / ANGLE_BINS as f64;
            row.iter_mut().for_each(|v| *v -= mean);
            row
        })
        .collect()
}

/// Number of angular correlation peaks tried as rotation hypotheses.
const ROTATION_CANDIDATES: usize = 3;

/// Rotation hypotheses modulo a half turn, in `(-pi/2, pi/2]`, strongest
/// angular correlation peak first.
fn coarse_rotations(reference: &ImagePlane, target: &ImagePlane) -> Vec<f64> {
    let pr = polar_profile(reference);
    let pt = polar_profile(target);
    let corr: Vec<f64> = (0..ANGLE_BINS)
        .into_par_iter()
        .map(|d| {
            pr.iter()
                .zip(&pt)
                .map(|(rf, tg)| {
                    (0..ANGLE_BINS)
                        .map(|k| tg[k] * rf[(k + d) % ANGLE_BINS])
                        .sum::<f64>()
                })
                .sum()
        })
        .collect();
    let at = |i: isize| corr[i.rem_euclid(ANGLE_BINS as isize) as usize];
    let mut peaks: Vec<usize> = (0..ANGLE_BINS)
        .filter(|&i| {
            let b = i as isize;
            at(b) >= at(b - 1) && at(b) > at(b + 1)
        })
        .collect();
    peaks.sort_by(|&a, &b| corr[b].total_cmp(&corr[a]));
    let step = std::f64::consts::PI / ANGLE_BINS as f64;
    peaks
        .into_iter()
        .take(ROTATION_CANDIDATES)
        .map(|best| {
            let b = best as isize;
            let frac = parabolic_offset(at(b - 1), at(b), at(b + 1));
            let theta = (best as f64 + frac) * step;
            if theta > std::f64::consts::FRAC_PI_2 {
                theta - std::f64::consts::PI
            } else {
                theta
            }
        })
        .collect()
}

struct Refiner<'a> {
    reference: &'a ImagePlane,
    target: &'a ImagePlane,
    grad_x: ImagePlane,
    grad_y: ImagePlane,
    cx: f64,
    cy: f64,
}

struct Evaluation {
    cost: f64,
    count: usize,
    normal: Matrix3<f64>,
    gradient: Vector3<f64>,
}

impl<'a> Refiner<'a> {
    fn new(reference: &'a ImagePlane, target: &'a ImagePlane) -> Self {
        let (w, h) = reference.dims();
        let gx = ImagePlane::from_fn(w, h, |r, c| {
            let (r, c) = (r as isize, c as isize);
            0.5 * (reference.get_clamped(r, c + 1) - reference.get_clamped(r, c - 1))
        })
        .expect("finite gradient");
        let gy = ImagePlane::from_fn(w, h, |r, c| {
            let (r, c) = (r as isize, c as isize);
            0.5 * (reference.get_clamped(r + 1, c) - reference.get_clamped(r - 1, c))
        })
        .expect("finite gradient");
        let (cx, cy) = center(reference);
        Self {
            reference,
            target,
            grad_x: gx,
            grad_y: gy,
            cx,
            cy,
        }
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        let (w, h) = self.reference.dims();
        x >= 1.0 && y >= 1.0 && x <= w as f64 - 2.0 && y <= h as f64 - 2.0
    }

    fn evaluate(&self, p: &RigidParams, with_jacobian: bool) -> Evaluation {
        let (w, h) = self.reference.dims();
        let (s, c) = p.rotation.sin_cos();
        let rows: Vec<Evaluation> = (0..h)
            .into_par_iter()
            .map(|y| {
                let mut e = Evaluation {
                    cost: 0.0,
                    count: 0,
                    normal: Matrix3::zeros(),
                    gradient: Vector3::zeros(),
                };
                for x in 0..w {
                    let (qx, qy) = p.map_point(x as f64, y as f64, self.cx, self.cy);
                    if !self.inside(qx, qy) {
                        continue;
                    }
                    let r = sample_bicubic(self.reference, qx, qy) - self.target.get(y, x);
                    e.cost += r * r;
                    e.count += 1;
                    if with_jacobian {
                        let gx = sample_bicubic(&self.grad_x, qx, qy);
                        let gy = sample_bicubic(&self.grad_y, qx, qy);
                        let (dx, dy) = (x as f64 - self.cx, y as f64 - self.cy);
                        let dtheta = gx * (-s * dx - c * dy) + gy * (c * dx - s * dy);
                        let j = Vector3::new(dtheta, gx, gy);
                        e.normal += j * j.transpose();
                        e.gradient += j * r;
                    }
                }
                e
            })
            .collect();
        rows.into_iter().fold(
            Evaluation {
                cost: 0.0,
                count: 0,
                normal: Matrix3::zeros(),
                gradient: Vector3::zeros(),
            },
            |mut a, b| {
                a.cost += b.cost;
                a.count += b.count;
                a.normal += b.normal;
                a.gradient += b.gradient;
                a
            },
        )
    }

    fn mean_cost(e: &Evaluation) -> f64 {
        if e.count == 0 {
            f64::INFINITY
        } else {
            e.cost / e.count as f64
        }
    }

    /// Levenberg-Marquardt style damped Gauss-Newton.
    fn refine(&self, start: RigidParams) -> (RigidParams, bool) {
        let mut p = start;
        let mut eval = self.evaluate(&p, true);
        let mut mu = 1e-3;
        for _ in 0..200 {
            if eval.count == 0 {
                return (p, false);
            }
            let n = eval.count as f64;
            let mut a = eval.normal / n;
            for i in 0..3 {
                a[(i, i)] *= 1.0 + mu;
            }
            let Some(step) = a.lu().solve(&(-eval.gradient / n)) else {
                return (p, false);
            };
            let cand = RigidParams::new(
                p.rotation + step[0],
                p.translation_x + step[1],
                p.translation_y + step[2],
            );
            let next = self.evaluate(&cand, true);
            if Self::mean_cost(&next) <= Self::mean_cost(&eval) {
                let small = step[0].abs() < 1e-10 && step[1].abs() < 1e-7 && step[2].abs() < 1e-7;
                p = cand;
                eval = next;
                mu = (mu / 3.0).max(1e-9);
                if small {
                    return (p, true);
                }
            } else {
                mu *= 4.0;
                if mu > 1e8 {
                    return (p, true);
                }
            }
        }
        (p, true)
    }

    /// Normalised cross-correlation and overlap fraction.
    fn score(&self, p: &RigidParams) -> (f64, f64) {
        let (w, h) = self.reference.dims();
        let mut pairs = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let (qx, qy) = p.map_point(x as f64, y as f64, self.cx, self.cy);
                if self.inside(qx, qy) {
                    pairs.push((
                        sample_bicubic(self.reference, qx, qy),
                        self.target.get(y, x),
                    ));
                }
            }
        }
        if pairs.is_empty() {
            return (0.0, 0.0);
        }
        let n = pairs.len() as f64;
        let (ma, mb) = pairs
            .iter()
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (ma, mb) = (ma / n, mb / n);
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (a, b) in &pairs {
            sab += (a - ma) * (b - mb);
            saa += (a - ma).powi(2);
            sbb += (b - mb).powi(2);
        }
        let ncc = if saa > 0.0 && sbb > 0.0 {
            sab / (saa * sbb).sqrt()
        } else {
            0.0
        };
        (ncc, n / (w * h) as f64)
    }
}

/// Minimum normalised cross-correlation for a usable estimate.
pub const MIN_SCORE: f64 = 0.5;

/// Estimates the rigid transform taking `reference` to `target`.
pub fn estimate_transform(reference: &ImagePlane, target: &ImagePlane) -> Result<RigidParams> {
    reference.ensure_same_dims(target, "registration")?;
    if is_constant(reference) || is_constant(target) {
        return Err(Error::ConstantPlane);
    }
    if reference == target {
        return Ok(RigidParams::identity());
    }
    let refiner = Refiner::new(reference, target);
    let mut best: Option<(RigidParams, f64)> = None;
    for theta0 in coarse_rotations(reference, target) {
        let alt = if theta0 > 0.0 {
            theta0 - std::f64::consts::PI
        } else {
            theta0 + std::f64::consts::PI
        };
        for theta in [theta0, alt] {
            let g = rotate_about_center(target, -theta);
            for (tx, ty) in phase_correlate(reference, &g) {
                let cand = RigidParams::new(theta, tx, ty);
                let (ncc, _) = refiner.score(&cand);
                if best.as_ref().is_none_or(|(_, s)| ncc > *s) {
                    best = Some((cand, ncc));
                }
            }
        }
    }
    let (coarse, _) = best.ok_or(Error::ConstantPlane)?;
    let (mut params, converged) = refiner.refine(coarse);
    let (ncc, overlap) = refiner.score(&params);
    params.rotation = wrap_angle(params.rotation);
    params.score = ncc;
    params.valid = converged
        && ncc >= MIN_SCORE
        && overlap >= 0.25
        && params.rotation.is_finite()
        && params.translation_x.is_finite()
        && params.translation_y.is_finite();
    Ok(params)
}

/// Removes the estimated rotation; translation is left in place.
pub fn derotate(target: &ImagePlane, params: &RigidParams) -> Result<ImagePlane> {
    params.ensure_valid()?;
    Ok(rotate_about_center(target, -params.rotation))
}

/// Derotates every band with the same parameters.
pub fn propagate_params(params: &RigidParams, volume: &MultibandVolume) -> Result<MultibandVolume> {
    params.ensure_valid()?;
    let bands: Vec<ImagePlane> = volume
        .bands()
        .par_iter()
        .map(|b| rotate_about_center(b, -params.rotation))
        .collect();
    MultibandVolume::with_labels(bands, volume.labels().to_vec())
}

/// Crop window `(x0, y0, width, height)`.
pub type CropWindow = (usize, usize, usize, usize);

/// Largest axis-aligned rectangle with even sides in which every derotated
/// frame of size `width`x`height` has in-bounds source samples. A source
/// position may overshoot the border by `slack` pixels.
pub fn common_crop(
    width: usize,
    height: usize,
    rotations: &[f64],
    slack: f64,
) -> Result<CropWindow> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyPlane { width, height });
    }
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let ok = |x: usize, y: usize| {
        rotations.iter().all(|&theta| {
            let (u, v) = rotate_point(x as f64, y as f64, -theta, cx, cy);
            u >= -slack
                && v >= -slack
                && u <= width as f64 - 1.0 + slack
                && v <= height as f64 - 1.0 + slack
        })
    };
    // Maximal rectangle in a binary mask via per-row histograms.
    let mut heights = vec![0usize; width];
    let mut best: (usize, CropWindow) = (0, (0, 0, 0, 0));
    for y in 0..height {
        for (x, hgt) in heights.iter_mut().enumerate() {
            *hgt = if ok(x, y) { *hgt + 1 } else { 0 };
        }
        for x0 in 0..width {
            let mut hmin = usize::MAX;
            for x1 in x0..width {
                hmin = hmin.min(heights[x1]);
                if hmin == 0 {
                    break;
                }
                let (w, h) = ((x1 - x0 + 1) & !1, hmin & !1);
                if w * h > best.0 {
                    best = (w * h, (x0, y + 1 - h, w, h));
                }
            }
        }
    }
    if best.0 == 0 {
        return Err(Error::InvalidParams(
            "no common region after rotation removal".into(),
        ));
    }
    Ok(best.1)
}
