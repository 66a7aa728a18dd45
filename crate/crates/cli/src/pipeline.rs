//! End-to-end runs: inputs, pansharpening, registration, reconstruction,
//! baselines and evaluation. Every stage failure names its stage.

use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use pansrr_core::awlp::{awlp_fuse, ratio_levels};
use pansrr_core::bundle::load_bundle;
use pansrr_core::metrics::{volume_report, MetricsTable};
use pansrr_core::registration::{
    common_crop, estimate_transform, propagate_params, CropWindow, RigidParams,
};
use pansrr_core::srr::{lr_to_hr_shift, reconstruct_volume, BlurSpec};
use pansrr_core::MultibandVolume;

use crate::baselines::run_baseline;
use crate::config::{ExperimentConfig, Mode};
use crate::report;
use crate::simulate::{read_frame_set, simulate_lr_set, FrameSet, SimulationParams};
use crate::truth::load_truth;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Truth,
    Simulation,
    Inputs,
    Pansharpening,
    Registration,
    Reconstruction,
    Baselines,
    Evaluation,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Truth => "truth",
            Stage::Simulation => "simulation",
            Stage::Inputs => "inputs",
            Stage::Pansharpening => "pansharpening",
            Stage::Registration => "registration",
            Stage::Reconstruction => "reconstruction",
            Stage::Baselines => "baselines",
            Stage::Evaluation => "evaluation",
            Stage::Output => "output",
        })
    }
}

pub trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

impl<T, E: Into<anyhow::Error>> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.into().context(format!("stage `{stage}` failed")))
    }
}

/// Output of one method, with per-band solver logs where available.
#[derive(Debug, Clone)]
pub struct MethodResult {
    pub name: String,
    pub volume: MultibandVolume,
    /// `(band label, convergence table)`.
    pub logs: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct Registered {
    pub set: FrameSet,
    pub params: Vec<RigidParams>,
    pub crop: Option<CropWindow>,
}

/// Aligns every volume to `volumes[0]` using one band. Rotations above
/// `threshold` radians are removed from all bands, after which every frame is
/// cropped to the common valid window; translations become HR shifts.
pub fn register_frames(
    volumes: Vec<MultibandVolume>,
    band: usize,
    threshold: f64,
) -> Result<Registered> {
    let first = volumes
        .first()
        .ok_or_else(|| anyhow!("no frames to register"))?;
    if band >= first.band_count() {
        bail!(
            "registration band {band} out of range for {} bands",
            first.band_count()
        );
    }
    let reference = first.band(band).clone();
    let mut params = vec![RigidParams::identity()];
    for (k, v) in volumes.iter().enumerate().skip(1) {
        let p =
            estimate_transform(&reference, v.band(band)).with_context(|| format!("frame {k}"))?;
        if !p.valid {
            bail!("frame {k}: no reliable alignment (score {:.3})", p.score);
        }
        params.push(p);
    }
    let rotated: Vec<bool> = params
        .iter()
        .map(|p| p.rotation.abs() > threshold)
        .collect();
    let mut aligned = Vec::with_capacity(volumes.len());
    for ((v, p), rot) in volumes.into_iter().zip(&params).zip(&rotated) {
        aligned.push(if *rot { propagate_params(p, &v)? } else { v });
    }
    let crop = if rotated.iter().any(|r| *r) {
        let angles: Vec<f64> = params
            .iter()
            .zip(&rotated)
            .map(|(p, r)| if *r { p.rotation } else { 0.0 })
            .collect();
        let (w, h) = aligned[0].dims();
        let win = common_crop(w, h, &angles, 0.0)?;
        aligned = aligned
            .iter()
            .map(|v| crop_volume(v, win))
            .collect::<Result<_>>()?;
        Some(win)
    } else {
        None
    };
    let shifts = params
        .iter()
        .map(|p| {
            (
                lr_to_hr_shift(p.translation_x),
                lr_to_hr_shift(p.translation_y),
            )
        })
        .collect();
    Ok(Registered {
        set: FrameSet {
            frames: aligned,
            shifts,
        },
        params,
        crop,
    })
}

pub fn crop_volume(v: &MultibandVolume, (x0, y0, w, h): CropWindow) -> Result<MultibandVolume> {
    let bands = v
        .bands()
        .iter()
        .map(|b| b.crop(x0, y0, w, h))
        .collect::<pansrr_core::Result<_>>()?;
    Ok(MultibandVolume::with_labels(bands, v.labels().to_vec())?)
}

/// Pansharpens one acquisition directory holding `ms/` and `pan/` bundles.
pub fn pansharpen_acquisition(dir: &Path) -> Result<MultibandVolume> {
    let ms =
        load_bundle(dir.join("ms")).with_context(|| format!("loading {}/ms", dir.display()))?;
    let pan =
        load_bundle(dir.join("pan")).with_context(|| format!("loading {}/pan", dir.display()))?;
    if pan.band_count() != 1 {
        bail!(
            "{}/pan must hold a single band, found {}",
            dir.display(),
            pan.band_count()
        );
    }
    let levels = ratio_levels(ms.dims(), pan.dims())?;
    Ok(awlp_fuse(&ms, pan.band(0), levels)?)
}

fn real_frames(cfg: &ExperimentConfig) -> Result<Vec<MultibandVolume>> {
    for dir in &cfg.inputs {
        if !dir.is_dir() {
            return Err(anyhow!("input {} is not a directory", dir.display())).at(Stage::Inputs);
        }
    }
    cfg.inputs
        .iter()
        .map(|d| pansharpen_acquisition(d))
        .collect::<Result<Vec<_>>>()
        .at(Stage::Pansharpening)
}

pub fn simulation_params(cfg: &ExperimentConfig) -> Result<SimulationParams> {
    Ok(SimulationParams {
        shifts: cfg.shifts.clone(),
        blur: cfg.blur()?,
        noise_sigma: cfg.noise_sigma,
        seed: cfg.seed,
    })
}

/// Enabled baselines in configuration order, then the proposed solvers.
pub fn run_methods(
    set: &FrameSet,
    blur: &BlurSpec,
    cfg: &ExperimentConfig,
) -> Result<Vec<MethodResult>> {
    let labels = set.reference().labels().to_vec();
    let mut out = Vec::new();
    for baseline in &cfg.baselines {
        let (volume, reports) = run_baseline(*baseline, set, blur, &cfg.ibp)
            .with_context(|| baseline.name())
            .at(Stage::Baselines)?;
        out.push(MethodResult {
            name: baseline.name().to_string(),
            volume,
            logs: labels
                .iter()
                .cloned()
                .zip(reports.iter().map(|r| r.to_table()))
                .collect(),
        });
    }
    for solver in cfg.solvers() {
        let (volume, reports) = reconstruct_volume(&set.frames, &set.shifts, blur, &solver)
            .with_context(|| format!("solver {}", solver.name()))
            .at(Stage::Reconstruction)?;
        out.push(MethodResult {
            name: cfg.method_name(&solver),
            volume,
            logs: labels
                .iter()
                .cloned()
                .zip(reports.iter().map(|r| r.to_table()))
                .collect(),
        });
    }
    Ok(out)
}

pub fn evaluate(
    truth: &MultibandVolume,
    results: &[(String, MultibandVolume)],
) -> Result<MetricsTable> {
    let mut table = MetricsTable::new();
    for (name, volume) in results {
        let rows = volume_report(truth, volume).with_context(|| format!("method {name}"))?;
        table.extend(rows.into_iter().map(|r| (name.clone(), r)));
    }
    Ok(table)
}

/// Frames for reconstruction: read from `cfg.frames`, simulated from the
/// truth, or pansharpened from real acquisitions; registered when enabled.
/// Returns the frames and the crop applied by registration.
fn frames_for(
    cfg: &ExperimentConfig,
    simulated: Option<FrameSet>,
) -> Result<(FrameSet, Option<CropWindow>)> {
    let set = match (cfg.mode, simulated) {
        (Mode::Real, _) => {
            let frames = real_frames(cfg)?;
            let n = frames.len();
            FrameSet {
                frames,
                shifts: vec![(0.0, 0.0); n],
            }
        }
        (Mode::Simulated, Some(set)) => set,
        (Mode::Simulated, None) => {
            let dir = cfg
                .frames
                .as_ref()
                .ok_or_else(|| anyhow!("no frame directory given"))
                .at(Stage::Inputs)?;
            read_frame_set(dir).at(Stage::Inputs)?
        }
    };
    if !cfg.use_registration() {
        return Ok((set, None));
    }
    let reg = register_frames(
        set.frames,
        cfg.registration_band,
        cfg.rotation_threshold_deg.to_radians(),
    )
    .at(Stage::Registration)?;
    Ok((reg.set, reg.crop))
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub methods: Vec<String>,
    pub metrics: Option<MetricsTable>,
}

/// Simulates LR frames from the truth and writes them with the truth itself.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<FrameSet> {
    cfg.validate().at(Stage::Config)?;
    let source = cfg
        .truth
        .as_deref()
        .ok_or_else(|| anyhow!("no truth given"))
        .at(Stage::Truth)?;
    let truth = load_truth(source, cfg.natural.as_deref()).at(Stage::Truth)?;
    let set = simulate_lr_set(&truth, &simulation_params(cfg)?).at(Stage::Simulation)?;
    report::write_simulation(&cfg.out, &truth, &set, cfg).at(Stage::Output)?;
    Ok(set)
}

/// Reconstructs from `cfg.frames` (simulated) or `cfg.inputs` (real).
pub fn run_reconstruct(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate().at(Stage::Config)?;
    let blur = cfg.blur().at(Stage::Config)?;
    let (set, _) = frames_for(cfg, None)?;
    let results = run_methods(&set, &blur, cfg)?;
    report::write_methods(&cfg.out, &set, &results, cfg).at(Stage::Output)?;
    Ok(RunSummary {
        methods: results.into_iter().map(|r| r.name).collect(),
        metrics: None,
    })
}

/// Scores every bundle under `<out>/methods` against the truth.
pub fn run_evaluate(cfg: &ExperimentConfig) -> Result<MetricsTable> {
    let source = cfg
        .truth
        .as_deref()
        .ok_or_else(|| anyhow!("no truth given"))
        .at(Stage::Truth)?;
    let truth = load_truth(source, cfg.natural.as_deref()).at(Stage::Truth)?;
    let results = report::read_methods(&cfg.out).at(Stage::Inputs)?;
    let table = evaluate(&truth, &results).at(Stage::Evaluation)?;
    report::write_metrics(&cfg.out, &table, cfg).at(Stage::Output)?;
    Ok(table)
}

/// Complete experiment. Simulated mode scores every method against the
/// truth; real mode only writes reconstructions.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate().at(Stage::Config)?;
    let blur = cfg.blur().at(Stage::Config)?;
    let truth = match cfg.mode {
        Mode::Simulated => {
            let source = cfg
                .truth
                .as_deref()
                .ok_or_else(|| anyhow!("no truth given"))
                .at(Stage::Truth)?;
            Some(load_truth(source, cfg.natural.as_deref()).at(Stage::Truth)?)
        }
        Mode::Real => None,
    };
    let simulated = match &truth {
        Some(t) => {
            let set = simulate_lr_set(t, &simulation_params(cfg)?).at(Stage::Simulation)?;
            report::write_simulation(&cfg.out, t, &set, cfg).at(Stage::Output)?;
            Some(set)
        }
        None => None,
    };
    let (set, crop) = frames_for(cfg, simulated)?;
    let results = run_methods(&set, &blur, cfg)?;
    report::write_methods(&cfg.out, &set, &results, cfg).at(Stage::Output)?;
    let metrics = match truth {
        Some(t) => {
            let t = match crop {
                Some((x0, y0, w, h)) => {
                    crop_volume(&t, (2 * x0, 2 * y0, 2 * w, 2 * h)).at(Stage::Evaluation)?
                }
                None => t,
            };
            let named: Vec<(String, MultibandVolume)> = results
                .iter()
                .map(|r| (r.name.clone(), r.volume.clone()))
                .collect();
            let table = evaluate(&t, &named).at(Stage::Evaluation)?;
            report::write_metrics(&cfg.out, &table, cfg).at(Stage::Output)?;
            Some(table)
        }
        None => None,
    };
    Ok(RunSummary {
        methods: results.into_iter().map(|r| r.name).collect(),
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pansrr_core::resample::translate_periodic;
    use pansrr_core::ImagePlane;

    fn blobs(n: usize) -> ImagePlane {
        ImagePlane::from_fn(n, n, |r, c| {
            let g = |x0: f64, y0: f64, s: f64| {
                (-((c as f64 - x0).powi(2) + (r as f64 - y0).powi(2)) / (2.0 * s * s)).exp()
            };
            0.2 + g(20.0, 18.0, 4.0)
                + 0.7 * g(40.0, 44.0, 6.0)
                + 0.5 * g(12.0, 50.0, 3.0)
                + 0.4 * g(50.0, 12.0, 5.0)
        })
        .unwrap()
    }

    #[test]
    fn registration_yields_hr_shifts() {
        let p = blobs(64);
        let frames = [(0.0, 0.0), (0.5, 0.0), (0.0, -0.5)]
            .iter()
            .map(|&(tx, ty)| MultibandVolume::new(vec![translate_periodic(&p, tx, ty)]).unwrap())
            .collect();
        let reg = register_frames(frames, 0, 0.05f64.to_radians()).unwrap();
        assert!(reg.crop.is_none());
        assert_eq!(reg.set.shifts[0], (0.0, 0.0));
        assert!(
            (reg.set.shifts[1].0 - 1.0).abs() < 0.2,
            "{:?}",
            reg.set.shifts
        );
        assert!(
            (reg.set.shifts[2].1 + 1.0).abs() < 0.2,
            "{:?}",
            reg.set.shifts
        );
        assert!(register_frames(vec![], 0, 0.0).is_err());
    }

    #[test]
    fn stage_names_appear_in_errors() {
        let cfg = ExperimentConfig {
            truth: Some("/nonexistent/truth".into()),
            ..Default::default()
        };
        let err = run_pipeline(&cfg).unwrap_err();
        assert!(
            format!("{err:#}").contains("stage `truth` failed"),
            "{err:#}"
        );
    }
}
