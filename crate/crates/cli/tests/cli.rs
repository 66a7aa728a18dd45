use std::path::Path;
use std::process::{Command, Output};

use pansrr_cli::pipeline::register_frames;
use pansrr_cli::simulate::{read_frame_set, simulate_lr_set, SimulationParams};
use pansrr_cli::truth::synthetic_truth;
use pansrr_core::bundle::{load_bundle, save_bundle};
use pansrr_core::haar::haar_analyze;
use pansrr_core::resample::{block_mean2, translate_periodic};
use pansrr_core::srr::BlurSpec;
use pansrr_core::{ImagePlane, MultibandVolume};

fn pansrr(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pansrr"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn sorted_rows(csv: &str) -> Vec<String> {
    let mut rows: Vec<String> = csv.lines().skip(1).map(str::to_owned).collect();
    rows.sort();
    rows
}

#[test]
fn missing_truth_names_the_failing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = pansrr(
        &["full-run", "--truth", "no/such/truth.png", "--out", "o"],
        dir.path(),
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stage `truth` failed"), "{err}");
}

#[test]
fn missing_real_input_names_the_failing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = pansrr(
        &[
            "reconstruct",
            "--mode",
            "real",
            "--inputs",
            "a,b,c,d",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stage `inputs` failed"), "{err}");
}

#[test]
fn unblurred_reference_frame_is_the_scaled_approximation() {
    let dir = tempfile::tempdir().unwrap();
    let out = pansrr(
        &[
            "simulate",
            "--truth",
            "builtin:32",
            "--blur-sigma",
            "0",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let set = read_frame_set(&dir.path().join("o/frames")).unwrap();
    let truth = load_bundle(dir.path().join("o/truth")).unwrap();
    assert_eq!(set.frames.len(), 4);
    assert!(set.frames.iter().all(|f| f.dims() == (16, 16)));
    for (lr, hr) in set.reference().bands().iter().zip(truth.bands()) {
        let want = haar_analyze(hr).unwrap().approx.scale(0.5);
        let err = lr
            .sub(&want)
            .unwrap()
            .samples()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-12, "{err}");
    }
}

#[test]
fn registration_recovers_recorded_shifts() {
    let truth = synthetic_truth(64, None).unwrap();
    let params = SimulationParams {
        shifts: vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (-1.0, 2.0)],
        blur: BlurSpec::gaussian(5, 0.8).unwrap(),
        noise_sigma: 0.0,
        seed: 0,
    };
    let set = simulate_lr_set(&truth, &params).unwrap();
    let reg = register_frames(set.frames.clone(), 0, 0.05f64.to_radians()).unwrap();
    assert!(reg.crop.is_none());
    for (got, want) in reg.set.shifts.iter().zip(&set.shifts) {
        // Shifts are in HR pixels; the tolerance is 0.1 LR pixel.
        assert!(
            (got.0 - want.0).abs() < 0.2 && (got.1 - want.1).abs() < 0.2,
            "{got:?} vs {want:?}"
        );
    }
}

#[test]
fn simulated_run_scores_every_method_and_evaluate_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = pansrr(
        &["full-run", "--truth", "builtin:64", "--out", "o"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("o/metrics.csv")).unwrap();
    for method in ["linear", "bicubic", "classic_ibp", "proposed"] {
        let rows = csv
            .lines()
            .filter(|l| l.starts_with(&format!("{method},")))
            .count();
        assert_eq!(rows, 6, "{method} rows in\n{csv}");
    }
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("classic_ibp"));

    let again = pansrr(
        &["evaluate", "--truth", "builtin:64", "--out", "o"],
        dir.path(),
    );
    assert!(
        again.status.success(),
        "{}",
        String::from_utf8_lossy(&again.stderr)
    );
    let rescored = std::fs::read_to_string(dir.path().join("o/metrics.csv")).unwrap();
    assert_eq!(sorted_rows(&rescored), sorted_rows(&csv));
}

#[test]
fn reconstruct_reads_frames_written_by_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let sim = pansrr(
        &["simulate", "--truth", "builtin:64", "--out", "o"],
        dir.path(),
    );
    assert!(sim.status.success());
    let rec = pansrr(
        &[
            "reconstruct",
            "--frames",
            "o/frames",
            "--baselines",
            "linear",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert!(
        rec.status.success(),
        "{}",
        String::from_utf8_lossy(&rec.stderr)
    );
    for method in ["linear", "proposed"] {
        let v = load_bundle(dir.path().join("o/methods").join(method)).unwrap();
        assert_eq!((v.dims(), v.band_count()), ((64, 64), 6));
    }
}

/// MS at a quarter and PAN at half the scene resolution, for a scene moved
/// by `shift` scene pixels.
fn acquisition(scene: &MultibandVolume, shift: (f64, f64), dir: &Path) {
    let moved: Vec<ImagePlane> = scene
        .bands()
        .iter()
        .map(|b| block_mean2(&translate_periodic(b, shift.0, shift.1)).unwrap())
        .collect();
    let ms: Vec<ImagePlane> = moved.iter().map(|b| block_mean2(b).unwrap()).collect();
    let (w, h) = moved[0].dims();
    let pan = ImagePlane::from_fn(w, h, |r, c| {
        moved.iter().map(|b| b.get(r, c)).sum::<f64>() / moved.len() as f64
    })
    .unwrap();
    save_bundle(&MultibandVolume::new(ms).unwrap(), dir.join("ms")).unwrap();
    save_bundle(&MultibandVolume::new(vec![pan]).unwrap(), dir.join("pan")).unwrap();
}

#[test]
fn real_mode_pansharpens_registers_and_reconstructs() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synthetic_truth(128, None).unwrap();
    let shifts = [(0.0, 0.0), (2.0, 0.0), (0.0, 2.0), (2.0, 2.0)];
    for (k, s) in shifts.iter().enumerate() {
        acquisition(&scene, *s, &dir.path().join(format!("acq{k}")));
    }
    let out = pansrr(
        &[
            "reconstruct",
            "--mode",
            "real",
            "--inputs",
            "acq0,acq1,acq2,acq3",
            "--baselines",
            "bicubic",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = load_bundle(dir.path().join("o/methods/proposed")).unwrap();
    assert_eq!((v.dims(), v.band_count()), ((128, 128), 6));
    assert!(v
        .bands()
        .iter()
        .all(|b| b.samples().iter().all(|x| x.is_finite())));
    assert!(!dir.path().join("o/metrics.csv").exists());
}
