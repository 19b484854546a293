//! Cartesian parameter sweeps over independent cells.

use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{exit_code_for, run, RunConfig, EXIT_ABORT};
use crate::error::{Error, Result};
use crate::profiles::{ProfileKind, ProfileSpec};

/// One summary row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub a_amplitude: Option<f64>,
    #[serde(rename = "V_amplitude")]
    pub v_amplitude: Option<f64>,
    pub dt: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub control_holds: Option<bool>,
    pub pair_a: Option<String>,
    #[serde(rename = "pair_V")]
    pub pair_v: Option<String>,
    pub delta_a_decay: Option<bool>,
    pub trapping_decay: Option<String>,
    pub sup_h1: Option<f64>,
    pub led: Option<f64>,
    pub l4: Option<f64>,
    pub scattering: Option<String>,
    pub mass_residual: Option<f64>,
    pub energy_residual: Option<f64>,
    pub virial_residual: Option<f64>,
    /// Measured order against the next-larger `dt` with otherwise equal
    /// parameters.
    pub order_mass: Option<f64>,
    pub order_energy: Option<f64>,
    pub order_virial: Option<f64>,
    pub exit_code: i32,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
struct Cell {
    sigma: [f64; 3],
    a_amplitude: Option<f64>,
    v_amplitude: Option<f64>,
    dt: f64,
    n: usize,
}

fn axis<T: Copy>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

fn optional_axis(values: &[f64]) -> Vec<Option<f64>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

fn cells(base: &RunConfig) -> Result<Vec<Cell>> {
    let s = &base.sweep;
    let p = &base.physics;
    let s1 = axis(&s.sigma1, p.sigma1);
    let s2 = axis(&s.sigma2, p.sigma2);
    let s3 = axis(&s.sigma3, p.sigma3);
    let aa = optional_axis(&s.a_amplitude);
    let va = optional_axis(&s.v_amplitude);
    let dts = axis(&s.dt, base.integrator.dt);
    let ns = axis(&s.n, base.grid.n);
    let size = [s1.len(), s2.len(), s3.len(), aa.len(), va.len(), dts.len(), ns.len()]
        .iter()
        .product::<usize>();
    if size > s.cap {
        return Err(Error::Config(format!(
            "sweep has {size} cells, above the cap of {}",
            s.cap
        )));
    }
    let mut out = Vec::with_capacity(size);
    for &x1 in &s1 {
        for &x2 in &s2 {
            for &x3 in &s3 {
                for &a in &aa {
                    for &v in &va {
                        for &dt in &dts {
                            for &n in &ns {
                                out.push(Cell {
                                    sigma: [x1, x2, x3],
                                    a_amplitude: a,
                                    v_amplitude: v,
                                    dt,
                                    n,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Replaces the amplitude of a primitive profile.
pub fn with_amplitude(spec: &ProfileSpec, amplitude: f64) -> Result<ProfileSpec> {
    let kind = match spec.kind.clone() {
        ProfileKind::Constant { .. } => ProfileKind::Constant { value: amplitude },
        ProfileKind::Gaussian { width, center, .. } => ProfileKind::Gaussian {
            amplitude,
            width,
            center,
        },
        ProfileKind::Plateau { r1, r2, .. } => ProfileKind::Plateau { amplitude, r1, r2 },
        ProfileKind::PolyDecay { rate, .. } => ProfileKind::PolyDecay { amplitude, rate },
        ProfileKind::AsymptoticallyFlat { r1, r2, .. } => {
            ProfileKind::AsymptoticallyFlat { amplitude, r1, r2 }
        }
        ProfileKind::Zero | ProfileKind::Sum(_) => {
            return Err(Error::Config(
                "an amplitude axis needs a constant, gaussian, plateau, poly-decay or asymptotically-flat profile"
                    .into(),
            ))
        }
    };
    ProfileSpec::signed(kind, spec.sign)
}

fn cell_config(base: &RunConfig, cell: &Cell) -> Result<RunConfig> {
    let mut c = base.clone();
    c.physics.sigma1 = cell.sigma[0];
    c.physics.sigma2 = cell.sigma[1];
    c.physics.sigma3 = cell.sigma[2];
    if let Some(a) = cell.a_amplitude {
        c.physics.a = with_amplitude(&base.physics.a, a)?;
    }
    if let Some(v) = cell.v_amplitude {
        c.physics.v = with_amplitude(&base.physics.v, v)?;
    }
    c.integrator.dt = cell.dt;
    c.grid.n = cell.n;
    c.sweep = Default::default();
    c.validate()?;
    Ok(c)
}

fn run_cell(base: &RunConfig, index: usize, cell: &Cell, out_dir: &Path, config_dir: Option<&Path>) -> SweepRow {
    let mut row = SweepRow {
        cell: index,
        sigma1: cell.sigma[0],
        sigma2: cell.sigma[1],
        sigma3: cell.sigma[2],
        a_amplitude: cell.a_amplitude,
        v_amplitude: cell.v_amplitude,
        dt: cell.dt,
        n: cell.n,
        control_holds: None,
        pair_a: None,
        pair_v: None,
        delta_a_decay: None,
        trapping_decay: None,
        sup_h1: None,
        led: None,
        l4: None,
        scattering: None,
        mass_residual: None,
        energy_residual: None,
        virial_residual: None,
        order_mass: None,
        order_energy: None,
        order_virial: None,
        exit_code: 0,
        error: None,
    };
    let dir = out_dir.join(format!("cell_{index:04}"));
    let result = std::panic::catch_unwind(|| {
        let config = cell_config(base, cell)?;
        run(&config, &dir, config_dir)
    });
    match result {
        Ok(Ok(outcome)) => {
            let h = &outcome.hypotheses;
            row.control_holds = Some(h.control_holds);
            row.pair_a = Some(h.pair_a.to_string());
            row.pair_v = Some(h.pair_v.to_string());
            row.delta_a_decay = Some(h.delta_a_decay);
            row.trapping_decay = Some(h.trapping_decay.clone());
            if let Some(b) = &outcome.verdicts.bounds {
                row.sup_h1 = Some(b.sup_h1);
                row.led = Some(b.led);
                row.l4 = Some(b.l4);
            }
            row.scattering = outcome.verdicts.scattering_verdict.clone();
            for v in &outcome.verdicts.identities {
                let slot = match v.identity.as_str() {
                    "mass" => &mut row.mass_residual,
                    "energy" => &mut row.energy_residual,
                    _ => &mut row.virial_residual,
                };
                *slot = Some(v.max_rel_residual);
            }
            row.exit_code = outcome.exit_code;
        }
        Ok(Err(e)) => {
            row.exit_code = exit_code_for(&e);
            row.error = Some(e.to_string());
        }
        Err(_) => {
            row.exit_code = EXIT_ABORT;
            row.error = Some("cell panicked".into());
        }
    }
    row
}

/// Fills the order columns by pairing each cell with the cell whose `dt`
/// is the next larger one and whose other parameters agree.
fn fill_orders(rows: &mut [SweepRow]) {
    let key = |r: &SweepRow| {
        (
            r.sigma1.to_bits(),
            r.sigma2.to_bits(),
            r.sigma3.to_bits(),
            r.a_amplitude.map(f64::to_bits),
            r.v_amplitude.map(f64::to_bits),
            r.n,
        )
    };
    let snapshot: Vec<SweepRow> = rows.to_vec();
    for row in rows.iter_mut() {
        let coarser = snapshot
            .iter()
            .filter(|o| key(o) == key(row) && o.dt > row.dt)
            .min_by(|a, b| a.dt.total_cmp(&b.dt));
        if let Some(c) = coarser {
            let ratio = (c.dt / row.dt).log2();
            let order = |coarse: Option<f64>, fine: Option<f64>| match (coarse, fine) {
                (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).log2() / ratio),
                _ => None,
            };
            row.order_mass = order(c.mass_residual, row.mass_residual);
            row.order_energy = order(c.energy_residual, row.energy_residual);
            row.order_virial = order(c.virial_residual, row.virial_residual);
        }
    }
}

/// Runs every cell of the cartesian product on `threads` workers and writes
/// `sweep.csv`. Cell failures are recorded in their rows.
pub fn sweep(base: &RunConfig, out_dir: &Path, threads: usize, config_dir: Option<&Path>) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let cells = cells(base)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, cell)| run_cell(base, i, cell, out_dir, config_dir))
            .collect()
    });
    fill_orders(&mut rows);
    let path = out_dir.join("sweep.csv");
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
