//! Artifact layout under the output directory:
//!
//! ```text
//! config.txt            effective configuration
//! truth/                simulated mode: ground-truth bundle
//! frames/               simulated LR frames and shifts.txt
//! methods/<name>/       one reconstructed bundle per method
//! convergence.txt       per-band solver logs
//! previews/<name>_<band>.png
//! metrics.csv, metrics.txt
//! ```
//!
//! Bundles are written as f64 so that re-evaluation from disk reproduces the
//! in-memory metrics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use pansrr_core::bundle::{
    load_bundle, save_bundle_with, write_png_gray, PngDepth, SampleEncoding,
};
use pansrr_core::metrics::{method_means, to_csv, to_text_table, MetricsTable};
use pansrr_core::MultibandVolume;

use crate::config::ExperimentConfig;
use crate::pipeline::MethodResult;
use crate::simulate::{write_frame_set, FrameSet};

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn write_config(out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    write_text(&out.join("config.txt"), &cfg.to_text())
}

pub fn write_simulation(
    out: &Path,
    truth: &MultibandVolume,
    set: &FrameSet,
    cfg: &ExperimentConfig,
) -> Result<()> {
    save_bundle_with(truth, out.join("truth"), SampleEncoding::F64LePlanar)?;
    write_frame_set(set, &out.join("frames"))?;
    write_config(out, cfg)
}

/// Bundles, convergence logs and previews. Previews of every method share
/// the value range of the reference frame's band.
pub fn write_methods(
    out: &Path,
    set: &FrameSet,
    results: &[MethodResult],
    cfg: &ExperimentConfig,
) -> Result<()> {
    let previews = out.join("previews");
    fs::create_dir_all(&previews).with_context(|| format!("creating {}", previews.display()))?;
    let reference = set.reference();
    let ranges: Vec<(f64, f64)> = reference
        .bands()
        .iter()
        .map(|b| {
            let (lo, hi) = b.min_max();
            if hi > lo {
                (lo, hi)
            } else {
                (lo, lo + 1.0)
            }
        })
        .collect();
    let mut log = String::new();
    for r in results {
        save_bundle_with(
            &r.volume,
            out.join("methods").join(&r.name),
            SampleEncoding::F64LePlanar,
        )?;
        for ((band, label), &(lo, hi)) in
            r.volume.bands().iter().zip(r.volume.labels()).zip(&ranges)
        {
            let path = previews.join(format!("{}_{}.png", r.name, file_safe(label)));
            write_png_gray(&band.map(|v| (v - lo) / (hi - lo)), path, PngDepth::Eight)?;
        }
        for (label, table) in &r.logs {
            let _ = writeln!(log, "## {} {}", r.name, label);
            log.push_str(table);
            log.push('\n');
        }
    }
    write_text(&out.join("convergence.txt"), &log)?;
    write_config(out, cfg)
}

/// Every bundle under `<out>/methods`, in name order.
pub fn read_methods(out: &Path) -> Result<Vec<(String, MultibandVolume)>> {
    let dir = out.join("methods");
    let mut names: Vec<String> = fs::read_dir(&dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let v = load_bundle(dir.join(&n))?;
            Ok((n, v))
        })
        .collect()
}

pub fn write_metrics(out: &Path, table: &MetricsTable, cfg: &ExperimentConfig) -> Result<()> {
    write_text(&out.join("metrics.csv"), &to_csv(table))?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "# blur: gaussian sigma={} size={}x{}  noise sigma={}  seed={}",
        cfg.blur_sigma, cfg.blur_size, cfg.blur_size, cfg.noise_sigma, cfg.seed
    );
    let shifts: Vec<String> = cfg
        .shifts
        .iter()
        .map(|(x, y)| format!("({x}, {y})"))
        .collect();
    let _ = writeln!(text, "# shifts (HR px): {}", shifts.join(" "));
    text.push_str(&to_text_table(table));
    text.push_str("\nmeans\n");
    let mut seen: Vec<&str> = Vec::new();
    for (m, _) in table {
        if !seen.contains(&m.as_str()) {
            seen.push(m);
        }
    }
    for m in seen {
        if let Some((p, s)) = method_means(table, m) {
            let _ = writeln!(text, "{m:<16}  PSNR {p:>8.3} dB  SSIM {s:.4}");
        }
    }
    write_text(&out.join("metrics.txt"), &text)
}
