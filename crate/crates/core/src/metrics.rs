//! Full-reference image quality: MSE, PSNR and SSIM.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{ImagePlane, MultibandVolume};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

pub fn mse(x: &ImagePlane, y: &ImagePlane) -> Result<f64> {
    x.ensure_same_dims(y, "mse")?;
    let sum: f64 = x
        .samples()
        .iter()
        .zip(y.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / x.len() as f64)
}

/// `10 log10(peak^2 / mse)`, or `+inf` for identical planes.
pub fn psnr(x: &ImagePlane, y: &ImagePlane, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "peak must be positive, got {peak}"
        )));
    }
    Ok(psnr_from_mse(mse(x, y)?, peak))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

fn gaussian_taps() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-((i as f64 - r).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Separable Gaussian filter keeping only fully covered window positions.
fn filter_valid(data: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * data[y * w + x + i])
                .sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * rows[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean structural similarity on the `[0, 1]` range, 11x11 Gaussian window
/// (sigma 1.5), over windows that lie entirely inside the image.
pub fn ssim(x: &ImagePlane, y: &ImagePlane) -> Result<f64> {
    x.ensure_same_dims(y, "ssim")?;
    let (w, h) = x.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let taps = gaussian_taps();
    let (xs, ys) = (x.samples(), y.samples());
    let xx: Vec<f64> = xs.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = ys.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = xs.iter().zip(ys).map(|(a, b)| a * b).collect();
    let [mx, my, exx, eyy, exy] =
        [xs, ys, &xx[..], &yy[..], &xy[..]].map(|d| filter_valid(d, w, h, &taps));
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = exx[i] - ux * ux;
        let vy = eyy[i] - uy * uy;
        let cov = exy[i] - ux * uy;
        total +=
            ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    Ok(total / mx.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub band: String,
    pub psnr: f64,
    pub mse: f64,
    pub ssim: f64,
}

impl MetricsRow {
    pub fn compute(
        band: impl Into<String>,
        truth: &ImagePlane,
        estimate: &ImagePlane,
    ) -> Result<Self> {
        let m = mse(truth, estimate)?;
        Ok(Self {
            band: band.into(),
            psnr: psnr_from_mse(m, 1.0),
            mse: m,
            ssim: ssim(truth, estimate)?,
        })
    }
}

/// One row per band, labelled with the truth volume's band labels.
pub fn volume_report(
    truth: &MultibandVolume,
    estimate: &MultibandVolume,
) -> Result<Vec<MetricsRow>> {
    if truth.band_count() != estimate.band_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} truth bands vs {} estimate bands",
            truth.band_count(),
            estimate.band_count()
        )));
    }
    truth
        .bands()
        .par_iter()
        .zip(estimate.bands())
        .zip(truth.labels())
        .map(|((t, e), l)| MetricsRow::compute(l.clone(), t, e))
        .collect()
}

/// Per-method rows, in the order given.
pub type MetricsTable = Vec<(String, MetricsRow)>;

pub fn to_csv(table: &MetricsTable) -> String {
    let mut s = String::from("method,band,psnr_db,mse,ssim\n");
    for (method, r) in table {
        let _ = writeln!(
            s,
            "{method},{},{:.6},{:.9e},{:.6}",
            r.band, r.psnr, r.mse, r.ssim
        );
    }
    s
}

pub fn to_text_table(table: &MetricsTable) -> String {
    let mw = table
        .iter()
        .map(|(m, _)| m.len())
        .max()
        .unwrap_or(0)
        .max("method".len());
    let bw = table
        .iter()
        .map(|(_, r)| r.band.len())
        .max()
        .unwrap_or(0)
        .max("band".len());
    let mut s = format!(
        "{:<mw$}  {:<bw$}  {:>10}  {:>12}  {:>8}\n",
        "method", "band", "PSNR(dB)", "MSE", "SSIM"
    );
    for (method, r) in table {
        let _ = writeln!(
            s,
            "{method:<mw$}  {:<bw$}  {:>10.3}  {:>12.4e}  {:>8.4}",
            r.band, r.psnr, r.mse, r.ssim
        );
    }
    s
}

/// Mean PSNR and SSIM over the rows of one method. Infinite PSNR rows make
/// the mean infinite.
pub fn method_means(table: &MetricsTable, method: &str) -> Option<(f64, f64)> {
    let rows: Vec<&MetricsRow> = table
        .iter()
        .filter(|(m, _)| m == method)
        .map(|(_, r)| r)
        .collect();
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    Some((
        rows.iter().map(|r| r.psnr).sum::<f64>() / n,
        rows.iter().map(|r| r.ssim).sum::<f64>() / n,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn checker(n: usize) -> ImagePlane {
        ImagePlane::from_fn(
            n,
            n,
            |r, c| if (r / 3 + c / 3) % 2 == 0 { 0.9 } else { 0.1 },
        )
        .unwrap()
    }

    #[test]
    fn closed_forms() {
        let x = checker(16);
        let y = x.map(|v| v + 0.1);
        assert!((mse(&x, &y).unwrap() - 0.01).abs() < 1e-15);
        assert!((psnr(&x, &y, 1.0).unwrap() - 20.0).abs() < 1e-10);
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        assert_eq!(psnr(&x, &x, 1.0).unwrap(), f64::INFINITY);
        assert!(psnr(&x, &y, 0.0).is_err());
    }

    #[test]
    fn ssim_structure() {
        let x = checker(32);
        assert_eq!(ssim(&x, &x).unwrap(), 1.0);
        let inv = x.map(|v| 1.0 - v);
        assert!(ssim(&x, &inv).unwrap() < 0.5);
        assert!(ssim(&checker(10), &checker(10)).is_err());
    }

    #[test]
    fn ssim_small_perturbation() {
        let x = checker(32);
        let y = ImagePlane::from_fn(32, 32, |r, c| {
            x.get(r, c) + 1e-4 * (((r * 131 + c * 71) % 17) as f64 / 8.0 - 1.0)
        })
        .unwrap();
        assert!(ssim(&x, &y).unwrap() > 0.99);
    }

    #[test]
    fn ssim_matches_direct_window_sum() {
        // Direct evaluation at every valid window position.
        let x = ImagePlane::from_fn(13, 12, |r, c| ((r * 7 + c * 3) % 11) as f64 / 10.0).unwrap();
        let y = ImagePlane::from_fn(13, 12, |r, c| ((r * 5 + c * 2) % 9) as f64 / 8.0).unwrap();
        let g = gaussian_taps();
        let mut total = 0.0;
        let mut count = 0;
        for oy in 0..=12 - SSIM_WINDOW {
            for ox in 0..=13 - SSIM_WINDOW {
                let (mut ux, mut uy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..SSIM_WINDOW {
                    for j in 0..SSIM_WINDOW {
                        let wgt = g[i] * g[j];
                        let (a, b) = (x.get(oy + i, ox + j), y.get(oy + i, ox + j));
                        ux += wgt * a;
                        uy += wgt * b;
                        sxx += wgt * a * a;
                        syy += wgt * b * b;
                        sxy += wgt * a * b;
                    }
                }
                let (c1, c2) = (1e-4, 9e-4);
                total += (2.0 * ux * uy + c1) * (2.0 * (sxy - ux * uy) + c2)
                    / ((ux * ux + uy * uy + c1) * (sxx - ux * ux + syy - uy * uy + c2));
                count += 1;
            }
        }
        assert!((ssim(&x, &y).unwrap() - total / count as f64).abs() < 1e-12);
    }

    #[test]
    fn reports_and_rendering() {
        let t = MultibandVolume::new(vec![checker(16), checker(16).map(|v| v * 0.5)]).unwrap();
        let rows = volume_report(&t, &t).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows
            .iter()
            .all(|r| r.mse == 0.0 && r.ssim == 1.0 && r.psnr.is_infinite()));
        let e = t.try_map_bands(|b| Ok(b.map(|v| v + 0.05))).unwrap();
        let rows = volume_report(&t, &e).unwrap();
        for (r, (tb, eb)) in rows.iter().zip(t.bands().iter().zip(e.bands())) {
            assert_eq!(r.mse, mse(tb, eb).unwrap());
            assert_eq!(r.ssim, ssim(tb, eb).unwrap());
        }
        let table: MetricsTable = rows
            .into_iter()
            .map(|r| ("bilinear".to_string(), r))
            .collect();
        let csv = to_csv(&table);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("method,band,psnr_db,mse,ssim\nbilinear,b1,"));
        assert_eq!(to_text_table(&table).lines().count(), 3);
        let (p, _) = method_means(&table, "bilinear").unwrap();
        assert!((p - 26.0206).abs() < 1e-3);
        assert!(method_means(&table, "other").is_none());
        let one = MultibandVolume::new(vec![checker(16)]).unwrap();
        assert!(volume_report(&t, &one).is_err());
    }

    fn arb_pair() -> impl Strategy<Value = (ImagePlane, ImagePlane)> {
        (11usize..24, 11usize..24).prop_flat_map(|(w, h)| {
            (
                proptest::collection::vec(0.0f64..1.0, w * h),
                proptest::collection::vec(0.0f64..1.0, w * h),
            )
                .prop_map(move |(a, b)| {
                    (
                        ImagePlane::new(w, h, a).unwrap(),
                        ImagePlane::new(w, h, b).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn symmetric_and_self_identical((x, y) in arb_pair()) {
            prop_assert_eq!(mse(&x, &y).unwrap(), mse(&y, &x).unwrap());
            prop_assert!((ssim(&x, &y).unwrap() - ssim(&y, &x).unwrap()).abs() <= 1e-12);
            prop_assert_eq!(ssim(&x, &x).unwrap(), 1.0);
            let naive = {
                let mut s = 0.0;
                for r in 0..x.height() {
                    for c in 0..x.width() {
                        s += (x.get(r, c) - y.get(r, c)).powi(2);
                    }
                }
                s / x.len() as f64
            };
            prop_assert!((mse(&x, &y).unwrap() - naive).abs() <= 1e-12);
        }

        #[test]
        fn psnr_decreases_with_error((x, y) in arb_pair(), k in 0.1f64..0.9) {
            // Nested perturbations: x + k d is closer to x than x + d.
            let d = y.sub(&x).unwrap();
            let near = x.add_scaled(&d, k).unwrap();
            let far = x.add_scaled(&d, 1.0).unwrap();
            let pn = psnr(&x, &near, 1.0).unwrap();
            let pf = psnr(&x, &far, 1.0).unwrap();
            prop_assert!(pn > pf);
            let half = x.add_scaled(&d, 0.5).unwrap();
            let gain = psnr(&x, &half, 1.0).unwrap() - pf;
            prop_assert!((gain - 20.0 * 2f64.log10()).abs() < 1e-9);
        }
    }
}
