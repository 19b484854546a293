//! Configuration, single runs, sweeps and re-verification from stored
//! output.
//!
//! A run directory holds `config.toml`, `hypotheses.json`, `series.csv`,
//! `verdicts.json`, `scattering.json` (when dyadic snapshots are enabled)
//! and `fields/*.dnls` snapshots (when field output is on).

pub mod config;
pub mod series;
pub mod sweep;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{evolve, Problem};
use crate::functionals::{high_frequency_fraction, Diagnostics};
use crate::hypotheses::{check_hypotheses, HypothesisReport};
use crate::identities::{
    calibrate_c_id, monitor_bounds, verify_all, BoundMonitor, IdentityVerdict, Verdict, VerifyInput,
};
use crate::scattering::{scattering_report, ScatteringOptions, ScatteringReport};
use crate::spectral::{snapshot, Spectral};

pub use config::{parse_config, RunConfig};
pub use sweep::{sweep, SweepRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ABORT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Exit code for an error raised before or outside the time loop.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidGrid(_)
        | Error::InvalidExponents(_)
        | Error::InvalidProfile(_)
        | Error::NegativeDamping { .. }
        | Error::InvalidArgument(_) => EXIT_CONFIG,
        _ => EXIT_ABORT,
    }
}

/// Contents of `verdicts.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerdictReport {
    pub c_id: f64,
    pub tol_id: f64,
    pub identities: Vec<IdentityVerdict>,
    pub bounds: Option<BoundMonitor>,
    pub scattering_verdict: Option<String>,
    pub warnings: Vec<String>,
    pub aborted: Option<String>,
}

impl VerdictReport {
    pub fn has_failure(&self) -> bool {
        self.identities.iter().any(|v| v.verdict == Verdict::Fail)
    }
}

/// What a run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub hypotheses: HypothesisReport,
    pub verdicts: VerdictReport,
    pub scattering: Option<ScatteringReport>,
    pub out_dir: PathBuf,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn field_path(dir: &Path, step: u64) -> PathBuf {
    dir.join("fields").join(format!("u_{step:08}.dnls"))
}

/// hypotheses → evolve → identities → scattering, writing artifacts to
/// `out_dir`. Relative initial-field paths resolve against `config_dir`.
pub fn run(config: &RunConfig, out_dir: &Path, config_dir: Option<&Path>) -> Result<RunOutcome> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let want_fields = config.output.fields;
    if want_fields {
        let dir = out_dir.join("fields");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    write_text(&out_dir.join("config.toml"), &config.to_toml()?)?;

    let grid = config.grid()?;
    let problem = Problem::new(grid, config.exponents()?, &config.physics.a, &config.physics.v)?;
    let hypotheses = check_hypotheses(&problem, config.overrides);
    if config.output.json {
        write_text(&out_dir.join("hypotheses.json"), &hypotheses.to_json()?)?;
    }

    let u0 = config.initial_field(config_dir)?;
    let spectral = Spectral::new(grid);
    let lambda = if hypotheses.lambda.is_finite() { hypotheses.lambda } else { 0.0 };
    let eta = hypotheses.eta.unwrap_or(f64::NAN);
    let diagnostics = Diagnostics::new(spectral.clone(), lambda, eta, config.diagnostics.interaction_b);

    let mut csv = if config.output.csv {
        Some(series::SeriesWriter::create(&out_dir.join("series.csv"))?)
    } else {
        None
    };
    let stride = config.diagnostics.snapshots;
    let mut seen = 0u64;
    let opts = config.evolve_options();
    let series = evolve(&problem, u0, &opts, diagnostics, |cp, state| {
        if let Some(w) = csv.as_mut() {
            w.push(cp)?;
        }
        if want_fields && (seen == 0 || (stride > 0 && seen % stride == 0)) {
            snapshot::save(&state.u, &field_path(out_dir, cp.step))?;
        }
        seen += 1;
        Ok(())
    })?;
    if let Some(w) = csv {
        w.into_inner()?;
    }

    let mut warnings = series.warnings.clone();
    warnings.extend(hypotheses.caveats.iter().cloned());
    if series.aborted.is_some() {
        let path = out_dir.join("fields").join("last_good.dnls");
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        snapshot::save(&series.final_state.u, &path)?;
    } else if want_fields {
        snapshot::save(&series.final_state.u, &out_dir.join("fields").join("final.dnls"))?;
    }

    let c_id = calibrate_c_id(&grid, opts.dt)?;
    let tol = c_id * opts.dt * opts.dt;
    let input = VerifyInput::from_series(&series, tol, config.diagnostics.leak_tol);
    let mut identities = verify_all(&input, None);
    if !config.diagnostics.virial {
        identities.retain(|v| v.identity != "virial");
    }
    let bounds = monitor_bounds(&series, config.diagnostics.c_mon, hypotheses.global_bound_hypotheses());

    let mut scattering = None;
    if config.diagnostics.dyadic_scattering && series.aborted.is_none() {
        let opts = ScatteringOptions {
            leak_tol: config.diagnostics.leak_tol,
            mass_ref: series.initial().record.mass,
            threshold: config.diagnostics.scattering_threshold,
        };
        let snaps: Vec<_> = series.snapshots.iter().filter(|s| s.0 > 0.0).cloned().collect();
        let l2s2: Option<Vec<(f64, f64)>> = hypotheses.scattering_case.asymptotically_flat.then(|| {
            series
                .checkpoints
                .iter()
                .map(|cp| (cp.record.t, cp.accumulators.l2s2))
                .collect()
        });
        match scattering_report(&spectral, &snaps, &opts, l2s2.as_deref()) {
            Ok(rep) => {
                if config.output.json {
                    write_text(&out_dir.join("scattering.json"), &rep.to_json()?)?;
                }
                scattering = Some(rep);
            }
            Err(e) => warnings.push(e.to_string()),
        }
    }

    let verdicts = VerdictReport {
        c_id,
        tol_id: tol,
        identities,
        bounds: Some(bounds),
        scattering_verdict: scattering.as_ref().map(|s| s.verdict.to_string()),
        warnings,
        aborted: series.aborted.clone(),
    };
    if config.output.json {
        write_text(&out_dir.join("verdicts.json"), &serde_json::to_string_pretty(&verdicts)?)?;
    }
    let exit_code = if series.aborted.is_some() {
        EXIT_ABORT
    } else if verdicts.has_failure() {
        EXIT_FAIL
    } else {
        EXIT_OK
    };
    Ok(RunOutcome {
        exit_code,
        hypotheses,
        verdicts,
        scattering,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Recomputes the identity verdicts from a run directory's `series.csv`
/// and, when present, its initial field snapshot.
pub fn verify(config: &RunConfig, out_dir: &Path) -> Result<Vec<IdentityVerdict>> {
    let rows = series::load_series(&out_dir.join("series.csv"))?;
    if rows.is_empty() {
        return Err(Error::Series("series.csv has no rows".into()));
    }
    let grid = config.grid()?;
    let dt = config.integrator.dt;
    let initial_high_frequency = match snapshot::load(&field_path(out_dir, 0)) {
        Ok(u0) => {
            let spectral = Spectral::new(grid);
            let u_hat = spectral.to_frequency(&u0)?;
            high_frequency_fraction(&spectral, u_hat.samples())
        }
        Err(_) => {
            let u0 = config.initial_field(None)?;
            let spectral = Spectral::new(grid);
            let u_hat = spectral.to_frequency(&u0)?;
            high_frequency_fraction(&spectral, u_hat.samples())
        }
    };
    let input = VerifyInput {
        residuals: rows.iter().map(|r| r.residuals()).collect(),
        rows: rows.iter().map(|r| r.scale_row()).collect(),
        tol: calibrate_c_id(&grid, dt)? * dt * dt,
        initial_high_frequency,
        leak_tol: config.diagnostics.leak_tol,
    };
    let mut out = verify_all(&input, None);
    if !config.diagnostics.virial {
        out.retain(|v| v.identity != "virial");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> RunConfig {
        let text = format!(
            r#"
[grid]
d = 1
N = 64
L = 12.0

[physics]
sigma1 = 1.0
sigma2 = 0.5
sigma3 = 0.5
a = {{ kind = "gaussian", amplitude = 0.5, width = 2.0 }}

[initial]
profile = {{ kind = "gaussian", amplitude = 0.8, width = 1.0 }}

[integrator]
dt = 0.01
T = 0.2
cadence = 5
{extra}
"#
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn run_writes_artifacts_and_verify_agrees() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config("[output]\nfields = true");
        c.diagnostics.interaction_b = true;
        let out = run(&c, dir.path(), None).unwrap();
        assert_eq!(out.exit_code, EXIT_OK, "{:?}", out.verdicts);
        for f in ["config.toml", "hypotheses.json", "series.csv", "verdicts.json", "fields/u_00000000.dnls", "fields/final.dnls"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let rows = series::load_series(&dir.path().join("series.csv")).unwrap();
        assert_eq!(rows.len(), 5);
        let again = verify(&c, dir.path()).unwrap();
        for (a, b) in out.verdicts.identities.iter().zip(&again) {
            assert_eq!(a.verdict, b.verdict);
            assert!((a.max_rel_residual - b.max_rel_residual).abs() <= 1e-12 * a.max_rel_residual.max(1e-300));
        }
    }

    #[test]
    fn rerun_is_byte_identical() {
        let c = config("");
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run(&c, d1.path(), None).unwrap();
        run(&c, d2.path(), None).unwrap();
        let a = fs::read(d1.path().join("series.csv")).unwrap();
        let b = fs::read(d2.path().join("series.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_data_gives_zero_series() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config("");
        c.initial.profile = Some(crate::profiles::ProfileSpec::zero());
        let out = run(&c, dir.path(), None).unwrap();
        assert_eq!(out.exit_code, EXIT_OK);
        for row in series::load_series(&dir.path().join("series.csv")).unwrap() {
            for (i, v) in row.values.iter().enumerate() {
                if i > 0 {
                    assert_eq!(v.unwrap_or(0.0), 0.0, "column {}", series::COLUMNS[i]);
                }
            }
        }
    }

    #[test]
    fn config_errors_map_to_exit_three() {
        assert_eq!(exit_code_for(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(
            exit_code_for(&Error::NegativeDamping { value: -1.0, location: vec![0.0] }),
            EXIT_CONFIG
        );
        assert_eq!(exit_code_for(&Error::Scattering("x".into())), EXIT_ABORT);
    }
}
