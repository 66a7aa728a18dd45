use pansrr_core::awlp::{awlp_fuse, pan_detail_stack};
use pansrr_core::haar::upsample_intensity;
use pansrr_core::{ImagePlane, MultibandVolume};
use proptest::prelude::*;

fn arb_case() -> impl Strategy<Value = (MultibandVolume, ImagePlane, u32)> {
    (1usize..5, 1usize..5, 1usize..5, 1u32..3).prop_flat_map(|(w, h, bands, levels)| {
        let f = 1usize << levels;
        (
            proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, w * h), bands),
            proptest::collection::vec(0.0f64..1.0, w * h * f * f),
        )
            .prop_map(move |(ms, pan)| {
                let vol = MultibandVolume::new(
                    ms.into_iter()
                        .map(|d| ImagePlane::new(w, h, d).unwrap())
                        .collect(),
                )
                .unwrap();
                (vol, ImagePlane::new(w * f, h * f, pan).unwrap(), levels)
            })
    })
}

proptest! {
    #[test]
    fn band_ratios_are_preserved((ms, pan, levels) in arb_case()) {
        let out = awlp_fuse(&ms, &pan, levels).unwrap();
        prop_assert_eq!(out.dims(), pan.dims());
        prop_assert_eq!(out.band_count(), ms.band_count());
        let up: Vec<ImagePlane> = ms.bands().iter().map(|b| upsample_intensity(b, levels).unwrap()).collect();
        let detail = pan_detail_stack(&pan, levels).unwrap().injection;
        for k in 0..pan.len() {
            let sum: f64 = up.iter().map(|u| u.samples()[k]).sum();
            if sum <= 0.0 {
                continue;
            }
            // Each fused value is l * (1 + d / sum); bound rounding by the magnitudes involved.
            let gain = 1.0 + detail.samples()[k].abs() / sum;
            for i in 0..up.len() {
                for j in 0..up.len() {
                    let (li, lj) = (up[i].samples()[k], up[j].samples()[k]);
                    let (hi, hj) = (out.band(i).samples()[k], out.band(j).samples()[k]);
                    let scale = (li * lj).abs() * gain;
                    prop_assert!((hi * lj - hj * li).abs() <= 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn constant_pan_injects_nothing((ms, pan, levels) in arb_case(), v in 0.0f64..1.0) {
        let flat = pan.map(|_| v);
        prop_assert!(pan_detail_stack(&flat, levels).unwrap().injection.samples().iter().all(|d| *d == 0.0));
        let out = awlp_fuse(&ms, &flat, levels).unwrap();
        for (o, b) in out.bands().iter().zip(ms.bands()) {
            let u = upsample_intensity(b, levels).unwrap();
            for (x, y) in o.samples().iter().zip(u.samples()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
