//! Synthetic LR frame sets: shift, blur, 2x2 block mean, optional noise.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use pansrr_core::bundle::{load_bundle, save_bundle_with, SampleEncoding};
use pansrr_core::resample::{block_mean2, translate_periodic};
use pansrr_core::srr::BlurSpec;
use pansrr_core::{ImagePlane, MultibandVolume};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const SHIFTS_FILE: &str = "shifts.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationParams {
    /// HR pixels; the first entry is the reference and must be zero.
    pub shifts: Vec<(f64, f64)>,
    pub blur: BlurSpec,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// LR frames in intensity units with the translations that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub frames: Vec<MultibandVolume>,
    pub shifts: Vec<(f64, f64)>,
}

impl FrameSet {
    pub fn reference(&self) -> &MultibandVolume {
        &self.frames[0]
    }
}

fn degrade(band: &ImagePlane, shift: (f64, f64), blur: &BlurSpec) -> Result<ImagePlane> {
    let moved = translate_periodic(band, shift.0, shift.1);
    Ok(block_mean2(&blur.apply(&moved))?)
}

pub fn simulate_lr_set(truth: &MultibandVolume, params: &SimulationParams) -> Result<FrameSet> {
    let (w, h) = truth.dims();
    if w % 2 != 0 || h % 2 != 0 {
        bail!("truth must have even dimensions, got {w}x{h}");
    }
    if params.shifts.first() != Some(&(0.0, 0.0)) {
        bail!("the first shift must be the zero reference");
    }
    let noise = if params.noise_sigma > 0.0 {
        Some(Normal::new(0.0, params.noise_sigma).map_err(|e| anyhow!("noise sigma: {e}"))?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut frames = Vec::with_capacity(params.shifts.len());
    for &shift in &params.shifts {
        let mut bands = Vec::with_capacity(truth.band_count());
        for band in truth.bands() {
            let lr = degrade(band, shift, &params.blur)?;
            bands.push(match &noise {
                Some(n) => lr.add_scaled(&noise_plane(&lr, n, &mut rng)?, 1.0)?,
                None => lr,
            });
        }
        frames.push(MultibandVolume::with_labels(
            bands,
            truth.labels().to_vec(),
        )?);
    }
    Ok(FrameSet {
        frames,
        shifts: params.shifts.clone(),
    })
}

fn noise_plane(like: &ImagePlane, dist: &Normal<f64>, rng: &mut ChaCha8Rng) -> Result<ImagePlane> {
    Ok(ImagePlane::from_fn(like.width(), like.height(), |_, _| {
        dist.sample(rng)
    })?)
}

fn frame_dir(dir: &Path, k: usize) -> std::path::PathBuf {
    dir.join(format!("frame_{k}"))
}

/// Writes `frame_<k>/` bundles (lossless f64) and `shifts.txt`.
pub fn write_frame_set(set: &FrameSet, dir: &Path) -> Result<()> {
    let mut text = String::from("# frame shift_x shift_y (HR pixels)\n");
    for (k, (frame, (sx, sy))) in set.frames.iter().zip(&set.shifts).enumerate() {
        save_bundle_with(frame, frame_dir(dir, k), SampleEncoding::F64LePlanar)?;
        let _ = writeln!(text, "{k} {sx} {sy}");
    }
    let path = dir.join(SHIFTS_FILE);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_frame_set(dir: &Path) -> Result<FrameSet> {
    let path = dir.join(SHIFTS_FILE);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut frames = Vec::new();
    let mut shifts = Vec::new();
    for line in text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [k, sx, sy] = fields[..] else {
            bail!("{}: malformed line `{line}`", path.display());
        };
        let k: usize = k.parse().with_context(|| format!("frame index `{k}`"))?;
        if k != frames.len() {
            bail!("{}: frames must be listed in order", path.display());
        }
        frames.push(load_bundle(frame_dir(dir, k))?);
        shifts.push((sx.parse()?, sy.parse()?));
    }
    if frames.is_empty() {
        bail!("{}: no frames listed", path.display());
    }
    Ok(FrameSet { frames, shifts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pansrr_core::haar::{haar_analyze, APPROX_GAIN};
    use pansrr_core::srr::{forward_project, ObservationFrame};

    fn truth(n: usize) -> MultibandVolume {
        let b = |p: f64| {
            ImagePlane::from_fn(n, n, |r, c| {
                0.5 + 0.3 * ((c as f64) * 0.7 + p).sin() * ((r as f64) * 0.45).cos()
            })
            .unwrap()
        };
        MultibandVolume::new(vec![b(0.0), b(1.0)]).unwrap()
    }

    fn params(blur: BlurSpec) -> SimulationParams {
        SimulationParams {
            shifts: vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
            blur,
            noise_sigma: 0.0,
            seed: 1,
        }
    }

    #[test]
    fn reference_frame_is_scaled_approximation() {
        let t = truth(16);
        let set = simulate_lr_set(&t, &params(BlurSpec::Identity)).unwrap();
        assert_eq!(set.frames.len(), 4);
        for f in &set.frames {
            assert_eq!(f.dims(), (8, 8));
        }
        let approx = haar_analyze(t.band(0)).unwrap().approx;
        let d = set
            .reference()
            .band(0)
            .scale(APPROX_GAIN)
            .sub(&approx)
            .unwrap();
        assert!(d.samples().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn frames_agree_with_the_reconstruction_forward_model() {
        let t = truth(16);
        let blur = BlurSpec::gaussian(5, 0.8).unwrap();
        let set = simulate_lr_set(&t, &params(blur.clone())).unwrap();
        for (f, &(sx, sy)) in set.frames.iter().zip(&set.shifts) {
            let obs = ObservationFrame::from_intensity(f.band(1), sx, sy, blur.clone()).unwrap();
            let pred = forward_project(t.band(1), &obs).unwrap();
            let d = pred.sub(&obs.approx).unwrap();
            assert!(
                d.samples().iter().all(|v| v.abs() < 1e-12),
                "shift ({sx}, {sy})"
            );
        }
    }

    #[test]
    fn noise_is_seeded() {
        let t = truth(16);
        let mut p = params(BlurSpec::Identity);
        p.noise_sigma = 0.01;
        let a = simulate_lr_set(&t, &p).unwrap();
        assert_eq!(a, simulate_lr_set(&t, &p).unwrap());
        p.seed = 2;
        assert_ne!(a, simulate_lr_set(&t, &p).unwrap());
    }

    #[test]
    fn odd_truth_and_nonzero_reference_rejected() {
        let odd = MultibandVolume::new(vec![ImagePlane::zeros(15, 16).unwrap()]).unwrap();
        assert!(simulate_lr_set(&odd, &params(BlurSpec::Identity)).is_err());
        let mut p = params(BlurSpec::Identity);
        p.shifts[0] = (1.0, 0.0);
        assert!(simulate_lr_set(&truth(16), &p).is_err());
    }

    #[test]
    fn frame_set_round_trips_on_disk() {
        let set =
            simulate_lr_set(&truth(16), &params(BlurSpec::gaussian(5, 0.8).unwrap())).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_frame_set(&set, dir.path()).unwrap();
        assert_eq!(read_frame_set(dir.path()).unwrap(), set);
    }
}
