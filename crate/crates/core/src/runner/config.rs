//! TOML run configuration.

use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{EvolveOptions, Exponents};
use crate::hypotheses::ConstantOverrides;
use crate::profiles::ProfileSpec;
use crate::spectral::{snapshot, ComplexField, Grid};

/// A complete run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub initial: InitialConfig,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub overrides: ConstantOverrides,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
    #[serde(rename = "L", alias = "l")]
    pub l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(alias = "σ₁")]
    pub sigma1: f64,
    #[serde(alias = "σ₂")]
    pub sigma2: f64,
    #[serde(alias = "σ₃")]
    pub sigma3: f64,
    #[serde(default = "ProfileSpec::zero")]
    pub a: ProfileSpec,
    #[serde(rename = "V", alias = "v", default = "ProfileSpec::zero")]
    pub v: ProfileSpec,
}

/// Initial data: a real profile times `exp(i k·x)`, or a DNLSFLD1 file,
/// plus optional seeded smooth noise.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub noise: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    #[serde(rename = "T", alias = "t")]
    pub t_end: f64,
    #[serde(default = "default_cadence")]
    pub cadence: u64,
    #[serde(default)]
    pub dealias: bool,
}

fn default_cadence() -> u64 {
    10
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "yes")]
    pub virial: bool,
    #[serde(rename = "interaction_B", alias = "interaction_b", default)]
    pub interaction_b: bool,
    /// Write a field snapshot every this many checkpoints (0 = never).
    #[serde(default)]
    pub snapshots: u64,
    #[serde(default)]
    pub dyadic_scattering: bool,
    /// First dyadic time; defaults to `T/16`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scattering_t0: Option<f64>,
    #[serde(default = "default_threshold")]
    pub scattering_threshold: f64,
    #[serde(default = "default_leak_tol")]
    pub leak_tol: f64,
    #[serde(rename = "C_mon", alias = "c_mon", default = "default_c_mon")]
    pub c_mon: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            virial: true,
            interaction_b: false,
            snapshots: 0,
            dyadic_scattering: false,
            scattering_t0: None,
            scattering_threshold: default_threshold(),
            leak_tol: default_leak_tol(),
            c_mon: default_c_mon(),
        }
    }
}

fn yes() -> bool {
    true
}

fn default_threshold() -> f64 {
    0.05
}

fn default_leak_tol() -> f64 {
    1e-8
}

fn default_c_mon() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub json: bool,
    #[serde(default)]
    pub fields: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            csv: true,
            json: true,
            fields: false,
        }
    }
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

/// Axes of a parameter sweep; empty axes keep the base value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub sigma1: Vec<f64>,
    #[serde(default)]
    pub sigma2: Vec<f64>,
    #[serde(default)]
    pub sigma3: Vec<f64>,
    #[serde(default)]
    pub a_amplitude: Vec<f64>,
    #[serde(rename = "V_amplitude", alias = "v_amplitude", default)]
    pub v_amplitude: Vec<f64>,
    #[serde(default)]
    pub dt: Vec<f64>,
    #[serde(rename = "N", alias = "n", default)]
    pub n: Vec<usize>,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sigma1: Vec::new(),
            sigma2: Vec::new(),
            sigma3: Vec::new(),
            a_amplitude: Vec::new(),
            v_amplitude: Vec::new(),
            dt: Vec::new(),
            n: Vec::new(),
            cap: default_cap(),
        }
    }
}

fn default_cap() -> usize {
    64
}

/// Parses and validates a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.d, self.grid.n, self.grid.l)
    }

    pub fn exponents(&self) -> Result<Exponents> {
        Exponents::new(self.physics.sigma1, self.physics.sigma2, self.physics.sigma3)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        let grid = self.grid().map_err(cfg)?;
        self.exponents().map_err(cfg)?;
        let it = &self.integrator;
        if !(it.dt.is_finite() && it.dt > 0.0) {
            return Err(Error::Config(format!("integrator.dt must be positive, got {}", it.dt)));
        }
        if !(it.t_end.is_finite() && it.t_end >= it.dt) {
            return Err(Error::Config(format!(
                "integrator.T = {} must be at least dt = {}",
                it.t_end, it.dt
            )));
        }
        self.evolve_options().steps().map_err(cfg)?;
        let diag = &self.diagnostics;
        if !(diag.leak_tol.is_finite() && diag.leak_tol > 0.0) {
            return Err(Error::Config(format!("diagnostics.leak_tol must be positive, got {}", diag.leak_tol)));
        }
        if !(diag.c_mon.is_finite() && diag.c_mon >= 1.0) {
            return Err(Error::Config(format!("diagnostics.C_mon must be at least 1, got {}", diag.c_mon)));
        }
        if !(diag.scattering_threshold.is_finite() && diag.scattering_threshold > 0.0) {
            return Err(Error::Config("diagnostics.scattering_threshold must be positive".into()));
        }
        if let Some(t0) = diag.scattering_t0 {
            if !(t0.is_finite() && t0 > 0.0 && t0 <= it.t_end) {
                return Err(Error::Config(format!("diagnostics.scattering_t0 must lie in (0, T], got {t0}")));
            }
        }
        let init = &self.initial;
        match (&init.profile, &init.file) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("initial: give either `profile` or `file`, not both".into()))
            }
            (None, None) => return Err(Error::Config("initial: `profile` or `file` is required".into())),
            _ => {}
        }
        if !init.k.is_empty() && init.k.len() != grid.dim() {
            return Err(Error::Config(format!(
                "initial.k has {} components, grid has d = {}",
                init.k.len(),
                grid.dim()
            )));
        }
        if !(init.noise.is_finite() && init.noise >= 0.0) {
            return Err(Error::Config("initial.noise must be nonnegative".into()));
        }
        for (name, value) in [("eta", self.overrides.eta), ("lambda", self.overrides.lambda)] {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Config(format!("overrides.{name} must be finite and nonnegative")));
                }
            }
        }
        if self.sweep.cap == 0 {
            return Err(Error::Config("sweep.cap must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dyadic_times(&self) -> Vec<f64> {
        if !self.diagnostics.dyadic_scattering {
            return Vec::new();
        }
        let t_end = self.integrator.t_end;
        let t0 = self.diagnostics.scattering_t0.unwrap_or(t_end / 16.0);
        crate::scattering::dyadic_times(t0, t_end)
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        let mut opts = EvolveOptions::new(self.integrator.dt, self.integrator.t_end);
        opts.cadence = self.integrator.cadence;
        opts.dealias = self.integrator.dealias;
        opts.leak_tol = self.diagnostics.leak_tol;
        opts.snapshot_times = self.dyadic_times();
        opts
    }

    /// Samples the initial field. Relative `file` paths resolve against
    /// `base_dir`.
    pub fn initial_field(&self, base_dir: Option<&std::path::Path>) -> Result<ComplexField> {
        let grid = self.grid()?;
        let d = grid.dim();
        let init = &self.initial;
        let mut u = if let Some(path) = &init.file {
            let path = match base_dir {
                Some(b) if path.is_relative() => b.join(path),
                _ => path.clone(),
            };
            let u = snapshot::load(&path)?;
            if u.grid() != &grid {
                return Err(Error::Config(format!(
                    "initial field {} is on {:?}, config grid is {:?}",
                    path.display(),
                    u.grid(),
                    grid
                )));
            }
            u
        } else {
            let profile = init.profile.as_ref().expect("validated");
            profile.validate()?;
            let k = init.k.clone();
            ComplexField::from_fn(grid, |x| {
                let phase: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
                Complex64::from_polar(profile.eval_point(&x[..d]).value, phase)
            })
        };
        if init.noise > 0.0 {
            let noise = smooth_noise(&grid, self.seed);
            let data: Vec<Complex64> = u
                .samples()
                .iter()
                .zip(noise.samples())
                .map(|(a, b)| a + b * init.noise)
                .collect();
            u = ComplexField::from_vec(grid, data, crate::spectral::Space::Physical)?;
        }
        Ok(u)
    }
}

/// Seeded low-mode random field under a Gaussian envelope of width `L/4`,
/// normalized to unit maximum modulus.
pub fn smooth_noise(grid: &Grid, seed: u64) -> ComplexField {
    const MODES: i64 = 3;
    let d = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = std::f64::consts::PI / grid.half_length();
    let count = (2 * MODES + 1).pow(d as u32);
    let mut terms = Vec::with_capacity(count as usize);
    for idx in 0..count {
        let mut k = [0.0; 3];
        let mut rest = idx;
        for ki in k.iter_mut().take(d) {
            *ki = ((rest % (2 * MODES + 1)) - MODES) as f64 * base;
            rest /= 2 * MODES + 1;
        }
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        terms.push((k, c));
    }
    let w = grid.half_length() / 4.0;
    let field = ComplexField::from_fn(*grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let s: Complex64 = terms
            .iter()
            .map(|(k, c)| c * Complex64::from_polar(1.0, k.iter().zip(x).map(|(a, b)| a * b).sum()))
            .sum();
        s * (-r2 / (w * w)).exp()
    });
    let max = field.max_modulus();
    if max > 0.0 {
        field.scale(Complex64::new(1.0 / max, 0.0))
    } else {
        field
    }
}
