//! Pixel-domain resampling: stencils, translations, rotations and 2x
//! interpolation.

use crate::error::{Error, Result};
use crate::raster::ImagePlane;

/// Odd-sized 2D stencil, row-major, centred.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) || weights.len() != size * size {
            return Err(Error::InvalidArgument(format!(
                "kernel must be odd-sized and square, got size {size} with {} weights",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("non-finite kernel weight".into()));
        }
        Ok(Self { size, weights })
    }

    pub fn delta() -> Self {
        Self {
            size: 1,
            weights: vec![1.0],
        }
    }

    /// `[1 2 1; 2 4 2; 1 2 1] / 16`.
    pub fn binomial3() -> Self {
        let w = [1.0, 2.0, 1.0, 2.0, 4.0, 2.0, 1.0, 2.0, 1.0];
        Self {
            size: 3,
            weights: w.iter().map(|v| v / 16.0).collect(),
        }
    }

    /// Sampled Gaussian normalised to unit sum.
    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if size.is_multiple_of(2) {
            return Err(Error::InvalidArgument("gaussian size must be odd".into()));
        }
        let r = (size / 2) as isize;
        let g: Vec<f64> = (-r..=r)
            .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let mut weights = Vec::with_capacity(size * size);
        for gy in &g {
            for gx in &g {
                weights.push(gy * gx);
            }
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok(Self { size, weights })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            size: self.size,
            weights: self.weights.iter().map(|w| w * k).collect(),
        }
    }

    pub fn is_delta(&self) -> bool {
        self.size == 1 && self.weights[0] == 1.0
    }

    /// Mirrored kernel; the adjoint of periodic convolution.
    pub fn flipped(&self) -> Self {
        Self {
            size: self.size,
            weights: self.weights.iter().rev().copied().collect(),
        }
    }
}

/// Periodic convolution: `out(p) = sum_q k(q) in(p - q)`.
pub fn convolve_periodic(plane: &ImagePlane, kernel: &Kernel) -> ImagePlane {
    if kernel.is_delta() {
        return plane.clone();
    }
    let (w, h) = plane.dims();
    let r = (kernel.size / 2) as isize;
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for ky in -r..=r {
                for kx in -r..=r {
                    let wgt = kernel.weights[((ky + r) as usize) * kernel.size + (kx + r) as usize];
                    if wgt != 0.0 {
                        acc += wgt * plane.get_wrapped(y - ky, x - kx);
                    }
                }
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    ImagePlane::from_raw(w, h, out)
}

fn shift_axis_periodic(plane: &ImagePlane, t: f64, horizontal: bool) -> ImagePlane {
    let k = t.floor();
    let f = t - k;
    let k = k as isize;
    let rolled = if horizontal {
        plane.roll(k, 0)
    } else {
        plane.roll(0, k)
    };
    if f == 0.0 {
        return rolled;
    }
    let next = if horizontal {
        rolled.roll(1, 0)
    } else {
        rolled.roll(0, 1)
    };
    let data = rolled
        .samples()
        .iter()
        .zip(next.samples())
        .map(|(a, b)| (1.0 - f) * a + f * b)
        .collect();
    ImagePlane::from_raw(plane.width(), plane.height(), data)
}

/// Periodic translation `out(p) = in(p + t)` with linear interpolation
/// between the two nearest samples on each axis.
pub fn translate_periodic(plane: &ImagePlane, tx: f64, ty: f64) -> ImagePlane {
    let tmp = shift_axis_periodic(plane, tx, true);
    shift_axis_periodic(&tmp, ty, false)
}

/// Bilinear sample at `(x, y)`, clamping outside the border.
pub fn sample_bilinear(plane: &ImagePlane, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as isize, y0 as isize);
    let p00 = plane.get_clamped(y0, x0);
    let p01 = plane.get_clamped(y0, x0 + 1);
    let p10 = plane.get_clamped(y0 + 1, x0);
    let p11 = plane.get_clamped(y0 + 1, x0 + 1);
    (1.0 - fy) * ((1.0 - fx) * p00 + fx * p01) + fy * ((1.0 - fx) * p10 + fx * p11)
}

/// Keys cubic convolution weight, `a = -0.5`.
fn cubic_weight(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Bicubic (Keys) sample at `(x, y)`, clamping outside the border.
pub fn sample_bicubic(plane: &ImagePlane, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as isize, y0 as isize);
    let wx = [
        cubic_weight(fx + 1.0),
        cubic_weight(fx),
        cubic_weight(1.0 - fx),
        cubic_weight(2.0 - fx),
    ];
    let wy = [
        cubic_weight(fy + 1.0),
        cubic_weight(fy),
        cubic_weight(1.0 - fy),
        cubic_weight(2.0 - fy),
    ];
    let mut acc = 0.0;
    for (j, wyj) in wy.iter().enumerate() {
        let mut row = 0.0;
        for (i, wxi) in wx.iter().enumerate() {
            row += wxi * plane.get_clamped(y0 + j as isize - 1, x0 + i as isize - 1);
        }
        acc += wyj * row;
    }
    acc
}

pub fn center(plane: &ImagePlane) -> (f64, f64) {
    (
        (plane.width() as f64 - 1.0) / 2.0,
        (plane.height() as f64 - 1.0) / 2.0,
    )
}

/// Maps an output pixel to the source position `R(theta) (p - c) + c`.
#[inline]
pub fn rotate_point(x: f64, y: f64, theta: f64, cx: f64, cy: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    let (dx, dy) = (x - cx, y - cy);
    (c * dx - s * dy + cx, s * dx + c * dy + cy)
}

/// `out(p) = in(R(theta) (p - c) + c)` about the image centre, bilinear.
pub fn rotate_about_center(plane: &ImagePlane, theta: f64) -> ImagePlane {
    if theta == 0.0 {
        return plane.clone();
    }
    let (w, h) = plane.dims();
    let (cx, cy) = center(plane);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = rotate_point(x as f64, y as f64, theta, cx, cy);
            out.push(sample_bilinear(plane, sx, sy));
        }
    }
    ImagePlane::from_raw(w, h, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Bilinear,
    Bicubic,
}

/// 2x upscaling with pixel-centre alignment: output pixel `k` sits at source
/// coordinate `(k + 0.5) / 2 - 0.5`.
pub fn upscale2x(plane: &ImagePlane, method: Interpolation) -> ImagePlane {
    let (w, h) = plane.dims();
    let mut out = Vec::with_capacity(4 * w * h);
    for y in 0..2 * h {
        let sy = (y as f64 + 0.5) / 2.0 - 0.5;
        for x in 0..2 * w {
            let sx = (x as f64 + 0.5) / 2.0 - 0.5;
            out.push(match method {
                Interpolation::Bilinear => sample_bilinear(plane, sx, sy),
                Interpolation::Bicubic => sample_bicubic(plane, sx, sy),
            });
        }
    }
    ImagePlane::from_raw(2 * w, 2 * h, out)
}

/// Keeps every second sample starting at `(0, 0)`.
pub fn decimate2(plane: &ImagePlane) -> Result<ImagePlane> {
    let (w, h) = plane.dims();
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "decimate2 needs even size, got {w}x{h}"
        )));
    }
    let mut out = Vec::with_capacity(w * h / 4);
    for y in (0..h).step_by(2) {
        for x in (0..w).step_by(2) {
            out.push(plane.get(y, x));
        }
    }
    Ok(ImagePlane::from_raw(w / 2, h / 2, out))
}

/// Adjoint of [`decimate2`]: places samples at even positions, zeros elsewhere.
pub fn zero_insert2(plane: &ImagePlane) -> ImagePlane {
    let (w, h) = plane.dims();
    let mut out = vec![0.0; 4 * w * h];
    for y in 0..h {
        for x in 0..w {
            out[2 * y * 2 * w + 2 * x] = plane.get(y, x);
        }
    }
    ImagePlane::from_raw(2 * w, 2 * h, out)
}

/// 2x2 block means.
pub fn block_mean2(plane: &ImagePlane) -> Result<ImagePlane> {
    let (w, h) = plane.dims();
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "block_mean2 needs even size, got {w}x{h}"
        )));
    }
    let mut out = Vec::with_capacity(w * h / 4);
    for y in (0..h).step_by(2) {
        for x in (0..w).step_by(2) {
            out.push(
                0.25 * (plane.get(y, x)
                    + plane.get(y, x + 1)
                    + plane.get(y + 1, x)
                    + plane.get(y + 1, x + 1)),
            );
        }
    }
    Ok(ImagePlane::from_raw(w / 2, h / 2, out))
}
