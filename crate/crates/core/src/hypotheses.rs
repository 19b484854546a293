//! Checkable forms of the structural hypotheses on `a`, `V` and the
//! exponents, plus constructors for the constants `Λ` and `η`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Exponents, Problem};
use crate::profiles::{trapping_part, EvaluatedProfile, ProfileSpec};
use crate::spectral::Grid;
use crate::weights::{bracket, chi3};

/// `a` counts as vanishing below `A_FLOOR_REL·‖a‖_∞`.
pub const A_FLOOR_REL: f64 = 1e-10;
/// Trapping counts as absent below `TRAP_VANISH_REL·‖V‖_∞`.
pub const TRAP_VANISH_REL: f64 = 1e-12;
/// A dyadic shell whose sup exceeds this multiple of every inner shell's
/// sup is read as unbounded growth.
const SHELL_GROWTH: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstPoint {
    pub location: Vec<f64>,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlCheck {
    pub holds: bool,
    /// `sup trapping/a^{(σ₃+1)/(σ₂+1)}` over samples where `a` is positive.
    pub c0: f64,
    /// Where the supremum defining `c₀` is attained.
    pub argsup: Option<WorstPoint>,
    /// Largest trapping value found where `a` vanishes, relative to `‖V‖_∞`.
    pub violation: Option<WorstPoint>,
}

/// Checks `V₋ + (∇V·x)₊ ≤ c₀ a^{(σ₃+1)/(σ₂+1)}` on the grid.
pub fn check_control(
    a: &EvaluatedProfile,
    v: &EvaluatedProfile,
    sigma2: f64,
    sigma3: f64,
) -> ControlCheck {
    let grid = a.grid();
    let d = grid.dim();
    let trap = trapping_part(v);
    let power = (sigma3 + 1.0) / (sigma2 + 1.0);
    let a_floor = A_FLOOR_REL * a.sup_norm();
    let vanish = TRAP_VANISH_REL * v.sup_norm();

    let mut c0 = 0.0;
    let mut argsup = None;
    let mut violation: Option<WorstPoint> = None;
    for (i, (&t, &av)) in trap.iter().zip(a.values()).enumerate() {
        if av > a_floor {
            let ratio = t / av.powf(power);
            if ratio > c0 {
                c0 = ratio;
                argsup = Some(i);
            }
        } else if t > vanish {
            let rel = t / v.sup_norm();
            if violation.as_ref().map_or(true, |w| rel > w.ratio) {
                violation = Some(WorstPoint {
                    location: grid.point(i)[..d].to_vec(),
                    ratio: rel,
                });
            }
        }
    }
    ControlCheck {
        holds: violation.is_none(),
        c0,
        argsup: argsup.map(|i| WorstPoint {
            location: grid.point(i)[..d].to_vec(),
            ratio: c0,
        }),
        violation,
    }
}

/// Sup of `|f|·⟨x⟩^{rate}` over dyadic radial shells `[0,1), [1,2), [2,4), …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellProfile {
    /// `(inner radius, sup)` for each nonempty shell.
    pub shells: Vec<(f64, f64)>,
}

impl ShellProfile {
    pub fn sample(grid: &Grid, values: &[f64], rate: f64) -> Self {
        let mut shells: Vec<(f64, f64)> = Vec::new();
        let mut sups: Vec<Option<f64>> = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            let x = grid.point(i);
            let x = &x[..grid.dim()];
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            let shell = if r < 1.0 { 0 } else { 1 + r.log2().floor() as usize };
            if sups.len() <= shell {
                sups.resize(shell + 1, None);
            }
            let weighted = v.abs() * bracket(x).powf(rate);
            let entry = sups[shell].get_or_insert(0.0);
            *entry = entry.max(weighted);
        }
        for (k, sup) in sups.into_iter().enumerate() {
            if let Some(s) = sup {
                let inner = if k == 0 { 0.0 } else { 2f64.powi(k as i32 - 1) };
                shells.push((inner, s));
            }
        }
        ShellProfile { shells }
    }

    /// The outermost shell's sup does not outgrow all inner shells.
    pub fn is_stable(&self) -> bool {
        match self.shells.split_last() {
            None => true,
            Some((&(_, last), inner)) => {
                if !last.is_finite() {
                    return false;
                }
                let inner_max = inner.iter().map(|s| s.1).fold(0.0, f64::max);
                last == 0.0 || last <= SHELL_GROWTH * inner_max
            }
        }
    }

    pub fn sup(&self) -> f64 {
        self.shells.iter().map(|s| s.1).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub holds: bool,
    pub required_rate: f64,
    /// Symbolic rate from library metadata, when available.
    pub metadata_rate: Option<f64>,
    pub sampled_stable: bool,
    pub caveats: Vec<String>,
}

/// Decides `|f| ≲ ⟨x⟩^{-required}` from metadata when present, otherwise
/// from sampled dyadic shells alone.
pub fn decay_check(
    grid: &Grid,
    values: &[f64],
    required_rate: f64,
    metadata_rate: Option<f64>,
) -> DecayCheck {
    let sampled = ShellProfile::sample(grid, values, required_rate);
    let sampled_stable = sampled.is_stable();
    let mut caveats = vec![format!(
        "decay sampled only up to radius {:.3}; the box cannot certify behavior beyond it",
        grid.half_length() * (grid.dim() as f64).sqrt()
    )];
    let holds = match metadata_rate {
        Some(rate) => {
            let holds = rate >= required_rate;
            if holds != sampled_stable {
                caveats.push(format!(
                    "sampled shells disagree with metadata (rate {rate} vs required {required_rate})"
                ));
            }
            holds
        }
        None => {
            caveats.push("numerical-only: no decay metadata, verdict from sampled shells".into());
            sampled_stable
        }
    };
    DecayCheck {
        holds,
        required_rate,
        metadata_rate,
        sampled_stable,
        caveats,
    }
}

/// Required decay of `|Δa|`: `7(σ₂+1)` when `σ₂ < σ₁`, `1` when `σ₂ = σ₁`.
pub fn required_delta_a_rate(sigma1: f64, sigma2: f64) -> f64 {
    if sigma2 < sigma1 {
        7.0 * (sigma2 + 1.0)
    } else {
        1.0
    }
}

pub fn check_delta_a_decay(a: &EvaluatedProfile, sigma1: f64, sigma2: f64) -> DecayCheck {
    let required = required_delta_a_rate(sigma1, sigma2);
    decay_check(a.grid(), a.laplacian(), required, Some(a.decay().laplacian_rate))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TrappingDecay {
    NotRequired,
    Checked(DecayCheck),
}

impl TrappingDecay {
    pub fn holds(&self) -> bool {
        match self {
            TrappingDecay::NotRequired => true,
            TrappingDecay::Checked(c) => c.holds,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TrappingDecay::NotRequired => "not-required",
            TrappingDecay::Checked(c) if c.holds => "holds",
            TrappingDecay::Checked(_) => "fails",
        }
    }
}

/// Required decay of the trapping part, `None` when `σ₂ = σ₃`.
pub fn required_trapping_rate(exps: &Exponents) -> Option<f64> {
    let Exponents {
        sigma1,
        sigma2,
        sigma3,
    } = *exps;
    if sigma3 == sigma2 {
        None
    } else if sigma3 < sigma2 {
        Some(7.0 * (sigma3 + 1.0))
    } else {
        Some((sigma3 + 1.0) / (sigma1 + 1.0))
    }
}

pub fn check_trapping_decay(v: &EvaluatedProfile, exps: &Exponents) -> TrappingDecay {
    match required_trapping_rate(exps) {
        None => TrappingDecay::NotRequired,
        Some(rate) => TrappingDecay::Checked(decay_check(
            v.grid(),
            &trapping_part(v),
            rate,
            Some(v.decay().trapping_rate),
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairClass {
    Intercritical,
    Critical,
    Neither,
}

impl std::fmt::Display for PairClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            PairClass::Intercritical => "intercritical",
            PairClass::Critical => "critical",
            PairClass::Neither => "neither",
        })
    }
}

/// `σ` within this distance of `2/3` is treated as exactly critical.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Classifies `(ψ, σ)`. Below `2/3` the pair is intercritical when `ψ, ∇ψ`
/// lie in `L^{6/(4-5σ)}(ℝ³)`, i.e. when the decay rate exceeds `(4-5σ)/2`.
pub fn classify_pair(psi: &ProfileSpec, sigma: f64) -> PairClass {
    let critical = 2.0 / 3.0;
    if (sigma - critical).abs() <= CRITICAL_TOL {
        PairClass::Critical
    } else if sigma > critical || psi.decay().value_rate > (4.0 - 5.0 * sigma) / 2.0 {
        PairClass::Intercritical
    } else {
        PairClass::Neither
    }
}

/// Smallest `Λ ≥ 0` with `V_sup·x^{2σ₃+2} ≤ Λx² + x^{2σ₁+2}/(2σ₁+2)` for
/// all `x ≥ 0`.
pub fn compute_lambda(v_sup: f64, sigma1: f64, sigma3: f64) -> Result<f64> {
    if !(v_sup.is_finite() && v_sup >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "‖V‖_∞ must be finite and nonnegative, got {v_sup}"
        )));
    }
    if !(sigma3 > 0.0 && sigma3 < sigma1 && sigma1.is_finite()) {
        return Err(Error::InvalidExponents(format!(
            "Λ needs 0 < σ₃ < σ₁, got σ₁={sigma1}, σ₃={sigma3}"
        )));
    }
    if v_sup == 0.0 {
        return Ok(0.0);
    }
    // In y = x² the excess is g(y) = V y^{σ₃} - y^{σ₁}/(2σ₁+2), maximized at
    // y* = (V σ₃ (2σ₁+2)/σ₁)^{1/(σ₁-σ₃)}.
    let denom = 2.0 * sigma1 + 2.0;
    let g = |y: f64| v_sup * y.powf(sigma3) - y.powf(sigma1) / denom;
    let y_star = (v_sup * sigma3 * denom / sigma1).powf(1.0 / (sigma1 - sigma3));
    let (mut lo, mut hi) = ((0.5 * y_star).ln(), (2.0 * y_star).ln());
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = g(y_star);
    for _ in 0..200 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        let (g1, g2) = (g(m1.exp()), g(m2.exp()));
        best = best.max(g1).max(g2);
        if g1 < g2 {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    Ok(best.max(0.0))
}

/// Returns `η ≥ 1` such that
/// `(1/(2σ₂+2))|Δa|y^{σ₂+1} ≤ (η/4)[(-Δ²χ)y + Δχ y^{σ₁+1}]` at every sample
/// and every `y ≥ 0`, using the three-dimensional weights of `|x|`.
pub fn compute_eta(a: &EvaluatedProfile, sigma1: f64, sigma2: f64) -> Result<f64> {
    let k = eta_sups(a, sigma1, sigma2)?;
    Ok(eta_from_sups(k.0, k.1, sigma1, sigma2))
}

fn eta_from_sups(k1: f64, k2: f64, sigma1: f64, sigma2: f64) -> f64 {
    let theta = sigma2 / sigma1;
    let pieces = ((1.0 - theta) * k1).max(theta * k2 * (sigma1 + 1.0) / sigma1);
    (4.0 / (2.0 * sigma2 + 2.0) * pieces).max(1.0)
}

/// `(K₁, K₂)` = sups of `|Δa|^{1/(σ₂+1)}/(-Δ²χ)` and
/// `|Δa|^{(σ₁+1)/(σ₂+1)}/Δχ`.
fn eta_sups(a: &EvaluatedProfile, sigma1: f64, sigma2: f64) -> Result<(f64, f64)> {
    let grid = a.grid();
    let d = grid.dim();
    let p1 = 1.0 / (sigma2 + 1.0);
    let p2 = (sigma1 + 1.0) / (sigma2 + 1.0);
    let mut r1 = Vec::with_capacity(grid.len());
    let mut r2 = Vec::with_capacity(grid.len());
    for (i, &lap) in a.laplacian().iter().enumerate() {
        let b = bracket(&grid.point(i)[..d]);
        let m = lap.abs();
        r1.push(m.powf(p1) / chi3::neg_bilaplacian(b));
        r2.push(m.powf(p2) / chi3::laplacian(b));
    }
    for (name, ratios) in [("K₁", &r1), ("K₂", &r2)] {
        let shells = ShellProfile::sample(grid, ratios, 0.0);
        if !shells.is_stable() {
            return Err(Error::UnboundedSup(format!(
                "{name} still growing at the outermost dyadic shell ({:?})",
                shells.shells.last()
            )));
        }
    }
    let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok((sup(&r1), sup(&r2)))
}

/// Checks the η inequality at every sample for each `y` in `ys`; returns
/// the worst ratio lhs/rhs (≤ 1 means it holds).
pub fn audit_eta(a: &EvaluatedProfile, sigma1: f64, sigma2: f64, eta: f64, ys: &[f64]) -> f64 {
    let grid = a.grid();
    let d = grid.dim();
    let mut worst: f64 = 0.0;
    for (i, &lap) in a.laplacian().iter().enumerate() {
        if lap == 0.0 {
            continue;
        }
        let b = bracket(&grid.point(i)[..d]);
        for &y in ys {
            let lhs = lap.abs() * y.powf(sigma2 + 1.0) / (2.0 * sigma2 + 2.0);
            let rhs = eta / 4.0
                * (chi3::neg_bilaplacian(b) * y + chi3::laplacian(b) * y.powf(sigma1 + 1.0));
            if lhs > 0.0 {
                worst = worst.max(lhs / rhs);
            }
        }
    }
    worst
}

/// Which scattering statement's hypotheses a configuration meets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringCase {
    /// `σ₁ > 2/3` and both `(a,σ₂)`, `(V,σ₃)` intercritical.
    pub intercritical: bool,
    /// `1 - a` compactly supported, `σ₁, σ₂ ≥ 2/3`, `(V,σ₃)` critical or
    /// intercritical.
    pub asymptotically_flat: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub control_holds: bool,
    pub c0: f64,
    pub control: ControlCheck,
    pub eta: Option<f64>,
    pub lambda: f64,
    pub pair_a: PairClass,
    #[serde(rename = "pair_V")]
    pub pair_v: PairClass,
    pub delta_a_decay: bool,
    pub delta_a_detail: DecayCheck,
    pub trapping_decay: String,
    pub trapping_detail: TrappingDecay,
    pub scattering_case: ScatteringCase,
    pub overrides: Vec<String>,
    pub caveats: Vec<String>,
}

impl HypothesisReport {
    /// Control, Δa decay and trapping decay all hold.
    pub fn global_bound_hypotheses(&self) -> bool {
        self.control_holds && self.delta_a_decay && self.trapping_detail.holds()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Optional user overrides for the computed constants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantOverrides {
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
}

pub fn check_hypotheses(problem: &Problem, overrides: ConstantOverrides) -> HypothesisReport {
    let exps = problem.exponents();
    let (a, v) = (problem.damping(), problem.potential());
    let mut caveats = Vec::new();
    let mut override_notes = Vec::new();

    let control = check_control(a, v, exps.sigma2, exps.sigma3);
    let delta_a = check_delta_a_decay(a, exps.sigma1, exps.sigma2);
    let trapping = check_trapping_decay(v, &exps);
    let pair_a = classify_pair(a.spec(), exps.sigma2);
    let pair_v = classify_pair(v.spec(), exps.sigma3);

    let lambda = match overrides.lambda {
        Some(l) => {
            override_notes.push(format!("lambda overridden to {l}"));
            l
        }
        None => compute_lambda(v.sup_norm(), exps.sigma1, exps.sigma3).unwrap_or_else(|e| {
            caveats.push(format!("Λ not computed: {e}"));
            f64::NAN
        }),
    };
    let eta = match overrides.eta {
        Some(e) => {
            override_notes.push(format!("eta overridden to {e}"));
            Some(e)
        }
        None => match compute_eta(a, exps.sigma1, exps.sigma2) {
            Ok(e) => Some(e),
            Err(e) => {
                caveats.push(format!("η not computed: {e}"));
                None
            }
        },
    };
    if a.grid().dim() != 3 {
        caveats.push(format!(
            "d = {}: η uses the three-dimensional weights of |x|; decay thresholds assume ℝ³",
            a.grid().dim()
        ));
    }
    caveats.extend(delta_a.caveats.iter().cloned());
    if let TrappingDecay::Checked(c) = &trapping {
        caveats.extend(c.caveats.iter().skip(1).cloned());
    }

    let critical = 2.0 / 3.0 - CRITICAL_TOL;
    let scattering_case = ScatteringCase {
        intercritical: exps.sigma1 > 2.0 / 3.0 + CRITICAL_TOL
            && pair_a == PairClass::Intercritical
            && pair_v == PairClass::Intercritical,
        asymptotically_flat: a.decay().one_minus_compact()
            && exps.sigma1 >= critical
            && exps.sigma2 >= critical
            && pair_v != PairClass::Neither,
    };

    HypothesisReport {
        control_holds: control.holds,
        c0: control.c0,
        control,
        eta,
        lambda,
        pair_a,
        pair_v,
        delta_a_decay: delta_a.holds,
        delta_a_detail: delta_a,
        trapping_decay: trapping.label().to_string(),
        trapping_detail: trapping,
        scattering_case,
        overrides: override_notes,
        caveats,
    }
}
