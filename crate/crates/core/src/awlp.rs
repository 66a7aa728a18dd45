//! Proportional wavelet detail injection (AWLP-style pansharpening) on the
//! decimated Haar stack.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::haar::{approximation_at, upsample_intensity, upsample_via_zero_details};
use crate::raster::{ImagePlane, MultibandVolume};

/// High-frequency content of a PAN image summed over `levels` Haar levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PanDetail {
    pub levels: u32,
    pub injection: ImagePlane,
}

/// `PAN - lowpass(PAN)`, where the lowpass is the depth-`levels`
/// approximation synthesised back to full size with zero details.
pub fn pan_detail_stack(pan: &ImagePlane, levels: u32) -> Result<PanDetail> {
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    let unit = 1usize << levels;
    if !pan.width().is_multiple_of(unit) || !pan.height().is_multiple_of(unit) {
        return Err(Error::InvalidArgument(format!(
            "PAN {}x{} not divisible by 2^{levels}",
            pan.width(),
            pan.height()
        )));
    }
    let low = upsample_via_zero_details(&approximation_at(pan, levels)?, levels)?;
    Ok(PanDetail {
        levels,
        injection: pan.sub(&low)?,
    })
}

/// `log2(PAN / MS)` when the two grids differ by a power-of-two factor.
pub fn ratio_levels(ms: (usize, usize), pan: (usize, usize)) -> Result<u32> {
    let bad = || {
        Error::DimensionMismatch(format!(
            "PAN {}x{} is not a power-of-two multiple of MS {}x{}",
            pan.0, pan.1, ms.0, ms.1
        ))
    };
    if !pan.0.is_multiple_of(ms.0) || !pan.1.is_multiple_of(ms.1) {
        return Err(bad());
    }
    let (rx, ry) = (pan.0 / ms.0, pan.1 / ms.1);
    if rx != ry || !rx.is_power_of_two() || rx < 2 {
        return Err(bad());
    }
    Ok(rx.trailing_zeros())
}

/// Fuses PAN detail into every MS band in proportion to the band's share of
/// the band sum. `levels` must equal `log2(PAN / MS)`.
pub fn awlp_fuse(ms: &MultibandVolume, pan: &ImagePlane, levels: u32) -> Result<MultibandVolume> {
    let ratio = ratio_levels(ms.dims(), pan.dims())?;
    if ratio != levels {
        return Err(Error::DimensionMismatch(format!(
            "PAN/MS ratio is 2^{ratio}, but {levels} levels were requested"
        )));
    }
    for (band, plane) in ms.bands().iter().enumerate() {
        if let Some((index, &value)) = plane.samples().iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeSample { band, index, value });
        }
    }
    let detail = pan_detail_stack(pan, levels)?;
    let up: Vec<ImagePlane> = ms
        .bands()
        .par_iter()
        .map(|b| upsample_intensity(b, levels))
        .collect::<Result<_>>()?;
    let count = up.len() as f64;
    let npix = pan.len();
    let mut total = vec![0.0; npix];
    for b in &up {
        for (t, v) in total.iter_mut().zip(b.samples()) {
            *t += v;
        }
    }
    let inj = detail.injection.samples();
    let fused: Vec<ImagePlane> = up
        .par_iter()
        .map(|b| {
            let data = b
                .samples()
                .iter()
                .zip(&total)
                .zip(inj)
                .map(|((&v, &sum), &d)| {
                    let w = if sum > 0.0 { v / sum } else { 1.0 / count };
                    v + w * d
                })
                .collect();
            ImagePlane::new(pan.width(), pan.height(), data)
        })
        .collect::<Result<_>>()?;
    MultibandVolume::with_labels(fused, ms.labels().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{haar_analyze, haar_synthesize, SubbandSet};

    #[test]
    fn constant_pan_gives_upsampled_ms() {
        let ms = MultibandVolume::new(vec![
            ImagePlane::from_fn(4, 4, |r, c| 0.1 * (r + c) as f64).unwrap(),
            ImagePlane::from_fn(4, 4, |r, c| 0.05 * (r * c) as f64).unwrap(),
        ])
        .unwrap();
        let pan = ImagePlane::filled(8, 8, 0.6).unwrap();
        let out = awlp_fuse(&ms, &pan, 1).unwrap();
        for (o, b) in out.bands().iter().zip(ms.bands()) {
            assert_eq!(o, &upsample_intensity(b, 1).unwrap());
        }
    }

    #[test]
    fn proportional_injection_example() {
        // MS pixel (1, 2, 1); PAN chosen so the detail at pixel (0,0) is 2.
        let ms = MultibandVolume::new(
            [1.0, 2.0, 1.0]
                .iter()
                .map(|&v| ImagePlane::filled(1, 1, v).unwrap())
                .collect(),
        )
        .unwrap();
        let pan = ImagePlane::new(2, 2, vec![2.0, -2.0, -2.0, 2.0]).unwrap();
        let d = pan_detail_stack(&pan, 1).unwrap();
        assert_eq!(d.injection.get(0, 0), 2.0);
        let out = awlp_fuse(&ms, &pan, 1).unwrap();
        let px: Vec<f64> = out.bands().iter().map(|b| b.get(0, 0)).collect();
        assert_eq!(px, vec![1.5, 3.0, 1.5]);
    }

    #[test]
    fn equal_and_zero_bands_share_uniformly() {
        let ms = MultibandVolume::new(vec![ImagePlane::zeros(1, 1).unwrap(); 4]).unwrap();
        let pan = ImagePlane::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let d = pan_detail_stack(&pan, 1).unwrap().injection;
        let out = awlp_fuse(&ms, &pan, 1).unwrap();
        for b in out.bands() {
            for (v, dv) in b.samples().iter().zip(d.samples()) {
                assert_eq!(*v, dv / 4.0);
            }
        }
    }

    #[test]
    fn low_pass_pan_has_no_detail() {
        let q = ImagePlane::from_fn(3, 2, |r, c| (r * 5 + c * 3) as f64 * 0.1).unwrap();
        let pan = upsample_via_zero_details(&q, 2).unwrap();
        let d = pan_detail_stack(&pan, 2).unwrap();
        assert!(d.injection.samples().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn bright_pixel_matches_wavelet_oracle() {
        let mut data = vec![0.0; 64];
        data[9] = 1.0;
        let pan = ImagePlane::new(8, 8, data).unwrap();
        let d = pan_detail_stack(&pan, 2).unwrap();
        // Oracle: analyse twice, drop the coarse approximation, synthesise the
        // details back.
        let l1 = haar_analyze(&pan).unwrap();
        let l2 = haar_analyze(&l1.approx).unwrap();
        let zero2 = SubbandSet {
            approx: l2.approx.scale(0.0),
            ..l2
        };
        let approx1 = haar_synthesize(&zero2).unwrap();
        let oracle = haar_synthesize(&SubbandSet {
            approx: approx1,
            ..l1
        })
        .unwrap();
        for (a, b) in d.injection.samples().iter().zip(oracle.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
        // The pixel keeps everything except its share of the 4x4 block mean.
        assert!((d.injection.get(1, 1) - (1.0 - 1.0 / 16.0)).abs() < 1e-12);
        assert!((d.injection.get(0, 0) + 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let ms = MultibandVolume::new(vec![ImagePlane::new(1, 1, vec![-0.1]).unwrap()]).unwrap();
        assert!(matches!(
            awlp_fuse(&ms, &ImagePlane::zeros(2, 2).unwrap(), 1),
            Err(Error::NegativeSample { .. })
        ));
        let ms = MultibandVolume::new(vec![ImagePlane::zeros(2, 2).unwrap()]).unwrap();
        assert!(awlp_fuse(&ms, &ImagePlane::zeros(6, 6).unwrap(), 1).is_err());
        assert!(awlp_fuse(&ms, &ImagePlane::zeros(4, 8).unwrap(), 1).is_err());
        assert!(awlp_fuse(&ms, &ImagePlane::zeros(8, 8).unwrap(), 1).is_err());
    }
}
