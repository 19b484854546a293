//! Scattering diagnostics from free-propagator pull-backs
//! `v(t) = e^{-itΔ}u(t)`.
//!
//! The candidate asymptotic state is the last pull-back. In the continuum
//! the Duhamel formula for `u₊` telescopes to exactly this limit, so no
//! nonlinear Duhamel integrals are quadratured.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::boundary_leak;
use crate::spectral::{ComplexField, Spectral};

/// Snapshots needed for a report.
pub const MIN_SNAPSHOTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScatteringVerdict {
    #[serde(rename = "SCATTERING-CONSISTENT")]
    Consistent,
    #[serde(rename = "NOT-CONSISTENT")]
    NotConsistent,
    #[serde(rename = "NO-VERDICT")]
    NoVerdict,
}

impl std::fmt::Display for ScatteringVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            ScatteringVerdict::Consistent => "SCATTERING-CONSISTENT",
            ScatteringVerdict::NotConsistent => "NOT-CONSISTENT",
            ScatteringVerdict::NoVerdict => "NO-VERDICT",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringOptions {
    /// Shell mass above `leak_tol·mass_ref` trips the leak guard.
    pub leak_tol: f64,
    pub mass_ref: f64,
    /// The last consecutive Cauchy difference must be at most
    /// `threshold·‖v(T_m)‖_{H¹}`.
    pub threshold: f64,
}

/// Plateau check of `∫₀ᵗ‖u‖^{2σ₂+2}_{L^{2σ₂+2}}` for asymptotically flat
/// damping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2s2Plateau {
    pub total: f64,
    pub last_quarter_fraction: f64,
    pub plateaus: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScatteringReport {
    pub times: Vec<f64>,
    /// `cauchy[i][j] = ‖v(T_i) - v(T_j)‖_{H¹}` for `j < i`.
    pub cauchy: Vec<Vec<f64>>,
    /// `c_{i,i+1}` over the leak-free prefix.
    pub consecutive: Vec<f64>,
    pub final_h1_gap: f64,
    /// `‖u(T_i) - e^{iT_iΔ}u₊‖_{H¹}`.
    pub forward_errors: Vec<f64>,
    /// `max_i |e_i - c_{im}| / max(‖u₊‖_{H¹}, tiny)`.
    pub unitarity_defect: f64,
    /// Snapshots before the first leak.
    pub usable: usize,
    pub leak_time: Option<f64>,
    pub shell_mass: Vec<f64>,
    pub l2s2: Option<L2s2Plateau>,
    pub verdict: ScatteringVerdict,
    #[serde(skip)]
    pub u_plus: Option<ComplexField>,
}

impl ScatteringReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `e^{-itΔ}u`.
pub fn pullback(spectral: &Spectral, u: &ComplexField, t: f64) -> Result<ComplexField> {
    spectral.free_propagate(u, -t)
}

fn h1_distance(spectral: &Spectral, a: &ComplexField, b: &ComplexField) -> Result<f64> {
    spectral.h1_norm(&a.sub(b)?)
}

/// Builds the report from snapshots at increasing times. `l2s2` is the
/// accumulator history, given only for asymptotically flat damping.
pub fn scattering_report(
    spectral: &Spectral,
    snapshots: &[(f64, ComplexField)],
    opts: &ScatteringOptions,
    l2s2: Option<&[(f64, f64)]>,
) -> Result<ScatteringReport> {
    if snapshots.len() < MIN_SNAPSHOTS {
        return Err(Error::Scattering(format!(
            "need at least {MIN_SNAPSHOTS} snapshots, got {}",
            snapshots.len()
        )));
    }
    if snapshots.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Scattering("snapshot times must increase".into()));
    }
    let times: Vec<f64> = snapshots.iter().map(|s| s.0).collect();
    let shell_mass: Vec<f64> = snapshots.iter().map(|s| boundary_leak(&s.1)).collect();
    let limit = opts.leak_tol * opts.mass_ref;
    let usable = shell_mass.iter().position(|&m| m > limit).unwrap_or(snapshots.len());
    let leak_time = (usable < snapshots.len()).then(|| times[usable]);

    let pulled = snapshots
        .iter()
        .map(|(t, u)| pullback(spectral, u, *t))
        .collect::<Result<Vec<_>>>()?;
    let mut cauchy = Vec::with_capacity(pulled.len());
    for i in 0..pulled.len() {
        let row = (0..i)
            .map(|j| h1_distance(spectral, &pulled[i], &pulled[j]))
            .collect::<Result<Vec<_>>>()?;
        cauchy.push(row);
    }
    let consecutive: Vec<f64> = (1..usable).map(|i| cauchy[i][i - 1]).collect();
    let final_h1_gap = consecutive.last().copied().unwrap_or(0.0);

    let mut forward_errors = Vec::new();
    let mut unitarity_defect = 0.0;
    let mut u_plus = None;
    if usable > 0 {
        let m = usable - 1;
        let up = pulled[m].clone();
        let scale = spectral.h1_norm(&up)?.max(f64::MIN_POSITIVE);
        for (i, (t, u)) in snapshots[..usable].iter().enumerate() {
            let e = h1_distance(spectral, u, &spectral.free_propagate(&up, *t)?)?;
            let c = match i.cmp(&m) {
                std::cmp::Ordering::Less => cauchy[m][i],
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Greater => cauchy[i][m],
            };
            unitarity_defect = f64::max(unitarity_defect, (e - c).abs() / scale);
            forward_errors.push(e);
        }
        u_plus = Some(up);
    }

    let l2s2 = l2s2.map(l2s2_plateau);
    let verdict = if leak_time.is_some() || usable < MIN_SNAPSHOTS {
        ScatteringVerdict::NoVerdict
    } else {
        let scale = match &u_plus {
            Some(up) => spectral.h1_norm(up)?,
            None => 0.0,
        };
        let tail = &consecutive[consecutive.len() - 3..];
        let slack = 1e-12 * scale.max(tail[0]);
        let decreasing = tail.windows(2).all(|w| w[1] <= w[0] + slack);
        let small = final_h1_gap <= opts.threshold * scale + slack;
        let plateau = l2s2.as_ref().map_or(true, |p| p.plateaus);
        if decreasing && small && plateau {
            ScatteringVerdict::Consistent
        } else {
            ScatteringVerdict::NotConsistent
        }
    };

    Ok(ScatteringReport {
        times,
        cauchy,
        consecutive,
        final_h1_gap,
        forward_errors,
        unitarity_defect,
        usable,
        leak_time,
        shell_mass,
        l2s2,
        verdict,
        u_plus,
    })
}

fn l2s2_plateau(points: &[(f64, f64)]) -> L2s2Plateau {
    let total = points.last().map_or(0.0, |p| p.1);
    let t_end = points.last().map_or(0.0, |p| p.0);
    let at = points
        .iter()
        .rev()
        .find(|p| p.0 <= 0.75 * t_end)
        .map_or(0.0, |p| p.1);
    let fraction = if total > 0.0 { (total - at) / total } else { 0.0 };
    L2s2Plateau {
        total,
        last_quarter_fraction: fraction,
        plateaus: fraction <= crate::identities::PLATEAU_FRACTION,
    }
}

/// `t0·2^k` for `k ≥ 0` up to `t_end`.
pub fn dyadic_times(t0: f64, t_end: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if t0.is_nan() || t0 <= 0.0 {
        return out;
    }
    let mut t = t0;
    while t <= t_end * (1.0 + 1e-12) {
        out.push(t);
        t *= 2.0;
    }
    out
}
