#![allow(dead_code)]

use pansrr_core::inband::BidiagonalToeplitz;
use pansrr_core::ImagePlane;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_plane(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ImagePlane {
    ImagePlane::from_fn(w, h, |_, _| rng.random::<f64>()).unwrap()
}

pub fn max_abs_diff(a: &ImagePlane, b: &ImagePlane) -> f64 {
    assert_eq!(a.dims(), b.dims());
    a.samples()
        .iter()
        .zip(b.samples())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Row-major dense matrix.
pub type Dense = Vec<Vec<f64>>;

pub fn dense_of(p: &ImagePlane) -> Dense {
    (0..p.height())
        .map(|r| (0..p.width()).map(|c| p.get(r, c)).collect())
        .collect()
}

pub fn plane_of(d: &Dense) -> ImagePlane {
    ImagePlane::from_fn(d[0].len(), d.len(), |r, c| d[r][c]).unwrap()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    assert_eq!(a[0].len(), k);
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let v = a[i][l];
            if v != 0.0 {
                for j in 0..m {
                    out[i][j] += v * b[l][j];
                }
            }
        }
    }
    out
}

pub fn add(a: &Dense, b: &Dense, k: f64) -> Dense {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + k * v).collect())
        .collect()
}

pub fn dense(m: &BidiagonalToeplitz) -> Dense {
    m.to_dense()
}

/// Shift by `t = (tx, ty)` pixels with the box (area-overlap) model, built
/// by replicating every pixel `2^levels` times per axis, rolling by an
/// integer amount at that scale, and averaging back. `t * 2^levels` must be
/// an integer.
pub fn box_shift_oracle(p: &ImagePlane, tx: f64, ty: f64, levels: u32) -> ImagePlane {
    let f = 1usize << levels;
    let (w, h) = p.dims();
    let fine = ImagePlane::from_fn(w * f, h * f, |r, c| p.get(r / f, c / f)).unwrap();
    let (kx, ky) = (tx * f as f64, ty * f as f64);
    assert!(kx.fract() == 0.0 && ky.fract() == 0.0);
    let rolled = fine.roll(kx as isize, ky as isize);
    ImagePlane::from_fn(w, h, |r, c| {
        let mut s = 0.0;
        for i in 0..f {
            for j in 0..f {
                s += rolled.get(r * f + i, c * f + j);
            }
        }
        s / (f * f) as f64
    })
    .unwrap()
}
