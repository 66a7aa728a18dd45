//! Experiment configuration: a plain `key = value` file whose entries can be
//! overridden one by one from the command line.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use pansrr_core::inband::Boundary;
use pansrr_core::resample::Kernel;
use pansrr_core::srr::{BlurSpec, IbpConfig, LsqConfig, Solver};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulated,
    Real,
}

impl FromStr for Mode {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulated" => Ok(Mode::Simulated),
            "real" => Ok(Mode::Real),
            _ => bail!("unknown mode `{s}` (expected simulated or real)"),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Simulated => "simulated",
            Mode::Real => "real",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Ibp,
    Lsq,
    Both,
}

impl FromStr for SolverChoice {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ibp" => Ok(SolverChoice::Ibp),
            "lsq" => Ok(SolverChoice::Lsq),
            "both" => Ok(SolverChoice::Both),
            _ => bail!("unknown solver `{s}` (expected ibp, lsq or both)"),
        }
    }
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverChoice::Ibp => "ibp",
            SolverChoice::Lsq => "lsq",
            SolverChoice::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Baseline {
    Linear,
    Bicubic,
    ClassicIbp,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::Linear, Baseline::Bicubic, Baseline::ClassicIbp];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Linear => "linear",
            Baseline::Bicubic => "bicubic",
            Baseline::ClassicIbp => "classic_ibp",
        }
    }
}

impl FromStr for Baseline {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                anyhow!("unknown baseline `{s}` (expected linear, bicubic or classic_ibp)")
            })
    }
}

/// Whether translations come from registration or from the frame record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Registration {
    Estimate,
    /// Simulated mode only: use the shifts the frames were generated with.
    Recorded,
}

impl FromStr for Registration {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimate" => Ok(Registration::Estimate),
            "recorded" => Ok(Registration::Recorded),
            _ => bail!("unknown registration `{s}` (expected estimate or recorded)"),
        }
    }
}

impl fmt::Display for Registration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Registration::Estimate => "estimate",
            Registration::Recorded => "recorded",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Bundle directory, PNG file, or `builtin:<size>`.
    pub truth: Option<String>,
    /// Optional PNG mixed into a builtin truth.
    pub natural: Option<PathBuf>,
    /// Real mode: one directory per acquisition, each holding `ms/` and `pan/` bundles.
    pub inputs: Vec<PathBuf>,
    /// Directory written by `simulate` (frame bundles plus `shifts.txt`).
    pub frames: Option<PathBuf>,
    pub solver: SolverChoice,
    pub ibp: IbpConfig,
    pub lsq: LsqConfig,
    /// Simulated translations in HR pixels; the first must be zero.
    pub shifts: Vec<(f64, f64)>,
    pub blur_sigma: f64,
    pub blur_size: usize,
    pub noise_sigma: f64,
    pub baselines: Vec<Baseline>,
    pub registration: Registration,
    pub registration_band: usize,
    /// Frames rotated by less than this are only translated.
    pub rotation_threshold_deg: f64,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Simulated,
            truth: None,
            natural: None,
            inputs: Vec::new(),
            frames: None,
            solver: SolverChoice::Ibp,
            ibp: IbpConfig::default(),
            lsq: LsqConfig::default(),
            shifts: vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
            blur_sigma: 0.8,
            blur_size: 5,
            noise_sigma: 0.0,
            baselines: Baseline::ALL.to_vec(),
            registration: Registration::Estimate,
            registration_band: 0,
            rotation_threshold_deg: 0.05,
            out: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("invalid value `{value}` for `{key}`: {e}"))
}

fn parse_shifts(value: &str) -> Result<Vec<(f64, f64)>> {
    value
        .split(';')
        .map(|pair| {
            let (x, y) = pair
                .split_once(',')
                .ok_or_else(|| anyhow!("shift `{pair}` is not of the form x,y"))?;
            Ok((parse("shifts", x.trim())?, parse("shifts", y.trim())?))
        })
        .collect()
}

fn parse_list<T: FromStr<Err = anyhow::Error>>(value: &str) -> Result<Vec<T>> {
    if value.trim() == "none" || value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|s| s.trim().parse()).collect()
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parses a config file on top of the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)
            .with_context(|| format!("in config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("line {}", n + 1))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "mode" => self.mode = parse(key, value)?,
            "truth" => self.truth = Some(value.to_string()),
            "natural" => self.natural = Some(PathBuf::from(value)),
            "inputs" => {
                self.inputs = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from)
                    .collect()
            }
            "frames" => self.frames = Some(PathBuf::from(value)),
            "solver" => self.solver = parse(key, value)?,
            "lambda" => self.ibp.lambda = parse(key, value)?,
            "tau" => self.ibp.tau = parse(key, value)?,
            "max_iters" => self.ibp.max_iterations = parse(key, value)?,
            "bp_kernel" => {
                self.ibp.bp_kernel = match value {
                    "delta" => Kernel::delta(),
                    "binomial" => Kernel::binomial3(),
                    _ => bail!("unknown bp_kernel `{value}` (expected delta or binomial)"),
                }
            }
            "h_max" => {
                let h: u32 = parse(key, value)?;
                self.ibp.h_max = h;
                self.lsq.h_max = h;
            }
            "lsq_tolerance" => self.lsq.tolerance = parse(key, value)?,
            "lsq_max_iters" => self.lsq.max_iterations = parse(key, value)?,
            "lsq_boundary" => {
                self.lsq.boundary = match value {
                    "periodic" => Boundary::Periodic,
                    "truncated" => Boundary::Truncated,
                    _ => bail!("unknown lsq_boundary `{value}` (expected periodic or truncated)"),
                }
            }
            "shifts" => self.shifts = parse_shifts(value)?,
            "blur_sigma" => self.blur_sigma = parse(key, value)?,
            "blur_size" => self.blur_size = parse(key, value)?,
            "noise_sigma" => self.noise_sigma = parse(key, value)?,
            "baselines" => self.baselines = parse_list(value)?,
            "registration" => self.registration = parse(key, value)?,
            "registration_band" => self.registration_band = parse(key, value)?,
            "rotation_threshold_deg" => self.rotation_threshold_deg = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            _ => bail!("unknown config key `{key}`"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.ibp.validate()?;
        if !(self.blur_sigma >= 0.0) || !(self.noise_sigma >= 0.0) {
            bail!("blur_sigma and noise_sigma must be non-negative");
        }
        if self.blur_size.is_multiple_of(2) {
            bail!("blur_size must be odd, got {}", self.blur_size);
        }
        if self.shifts.first() != Some(&(0.0, 0.0)) {
            bail!("the first simulated shift must be 0,0");
        }
        if self.mode == Mode::Real && self.inputs.len() < 4 {
            bail!(
                "real mode needs at least 4 MS+PAN acquisitions, got {}",
                self.inputs.len()
            );
        }
        if self.mode == Mode::Real && self.registration == Registration::Recorded {
            bail!("real mode has no recorded shifts; use registration = estimate");
        }
        Ok(())
    }

    pub fn blur(&self) -> Result<BlurSpec> {
        if self.blur_sigma == 0.0 {
            return Ok(BlurSpec::Identity);
        }
        Ok(BlurSpec::gaussian(self.blur_size, self.blur_sigma)?)
    }

    pub fn solvers(&self) -> Vec<Solver> {
        let ibp = Solver::Ibp(self.ibp.clone());
        let lsq = Solver::LeastSquares(self.lsq.clone());
        match self.solver {
            SolverChoice::Ibp => vec![ibp],
            SolverChoice::Lsq => vec![lsq],
            SolverChoice::Both => vec![ibp, lsq],
        }
    }

    /// Name of the proposed method's metrics rows for `solver`.
    pub fn method_name(&self, solver: &Solver) -> String {
        match self.solver {
            SolverChoice::Both => format!("proposed_{}", solver.name()),
            _ => "proposed".to_string(),
        }
    }

    pub fn use_registration(&self) -> bool {
        self.registration == Registration::Estimate
    }

    /// Canonical `key = value` rendering; parses back to the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mode", self.mode.to_string());
        if let Some(t) = &self.truth {
            kv("truth", t.clone());
        }
        if let Some(p) = &self.natural {
            kv("natural", p.display().to_string());
        }
        if !self.inputs.is_empty() {
            kv("inputs", join(&self.inputs, |p| p.display().to_string()));
        }
        if let Some(p) = &self.frames {
            kv("frames", p.display().to_string());
        }
        kv("solver", self.solver.to_string());
        kv("lambda", self.ibp.lambda.to_string());
        kv("tau", self.ibp.tau.to_string());
        kv("max_iters", self.ibp.max_iterations.to_string());
        kv(
            "bp_kernel",
            if self.ibp.bp_kernel.is_delta() {
                "delta"
            } else {
                "binomial"
            }
            .to_string(),
        );
        kv("h_max", self.ibp.h_max.to_string());
        kv("lsq_tolerance", self.lsq.tolerance.to_string());
        kv("lsq_max_iters", self.lsq.max_iterations.to_string());
        kv(
            "lsq_boundary",
            match self.lsq.boundary {
                Boundary::Periodic => "periodic",
                Boundary::Truncated => "truncated",
            }
            .to_string(),
        );
        kv(
            "shifts",
            self.shifts
                .iter()
                .map(|(x, y)| format!("{x},{y}"))
                .collect::<Vec<_>>()
                .join(";"),
        );
        kv("blur_sigma", self.blur_sigma.to_string());
        kv("blur_size", self.blur_size.to_string());
        kv("noise_sigma", self.noise_sigma.to_string());
        kv(
            "baselines",
            if self.baselines.is_empty() {
                "none".to_string()
            } else {
                join(&self.baselines, |b| b.name().to_string())
            },
        );
        kv("registration", self.registration.to_string());
        kv("registration_band", self.registration_band.to_string());
        kv(
            "rotation_threshold_deg",
            self.rotation_threshold_deg.to_string(),
        );
        kv("out", self.out.display().to_string());
        kv("seed", self.seed.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(
            "# comment\nsolver = both\nlambda=0.5\nshifts = 0,0; 0.5,0 ;0,1.5\nbaselines = linear,classic_ibp\n\
             lsq_boundary = truncated\nbp_kernel = binomial\nseed = 9 # trailing\n",
        )
        .unwrap();
        assert_eq!(cfg.solver, SolverChoice::Both);
        assert_eq!(cfg.ibp.lambda, 0.5);
        assert_eq!(cfg.shifts, vec![(0.0, 0.0), (0.5, 0.0), (0.0, 1.5)]);
        assert_eq!(cfg.baselines, vec![Baseline::Linear, Baseline::ClassicIbp]);
        assert_eq!(cfg.seed, 9);
        let mut back = ExperimentConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_entries() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.set("colour", "red").is_err());
        assert!(cfg.set("solver", "magic").is_err());
        assert!(cfg.set("lambda", "fast").is_err());
        assert!(cfg.apply_text("no equals sign").is_err());
        cfg.set("shifts", "1,0;0,0").unwrap();
        assert!(cfg.validate().is_err());
        let mut real = ExperimentConfig {
            mode: Mode::Real,
            ..Default::default()
        };
        real.set("inputs", "a,b,c").unwrap();
        assert!(real.validate().is_err());
    }

    #[test]
    fn method_names_follow_solver_choice() {
        let mut cfg = ExperimentConfig::default();
        let names = |c: &ExperimentConfig| {
            c.solvers()
                .iter()
                .map(|s| c.method_name(s))
                .collect::<Vec<_>>()
        };
        assert_eq!(names(&cfg), ["proposed"]);
        cfg.solver = SolverChoice::Both;
        assert_eq!(names(&cfg), ["proposed_ibp", "proposed_lsq"]);
    }

    #[test]
    fn zero_sigma_means_no_blur() {
        let cfg = ExperimentConfig {
            blur_sigma: 0.0,
            ..Default::default()
        };
        assert_eq!(cfg.blur().unwrap(), BlurSpec::Identity);
    }
}
