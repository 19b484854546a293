//! Damping and potential profiles with analytic value, gradient and
//! Laplacian, plus decay metadata for the hypothesis checkers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Grid;

/// Maximum number of primitives in a `sum` profile.
pub const MAX_SUM_TERMS: usize = 8;

/// A spatial coefficient `a(x)` or `V(x)`.
///
/// Radial primitives are centered at the origin except `Gaussian`, which
/// carries its own center. `sign` multiplies the whole primitive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    pub sign: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileKind {
    Zero,
    Constant {
        value: f64,
    },
    /// `A exp(-|x-x₀|²/w²)`.
    Gaussian {
        amplitude: f64,
        width: f64,
        center: Vec<f64>,
    },
    /// `A` inside `r₁`, zero outside `r₂`, quintic smoothstep between.
    Plateau {
        amplitude: f64,
        r1: f64,
        r2: f64,
    },
    /// `A⟨x⟩^{-m}`.
    PolyDecay {
        amplitude: f64,
        rate: f64,
    },
    /// `1 - A·plateau(r₁, r₂)`: equal to one outside `r₂`.
    AsymptoticallyFlat {
        amplitude: f64,
        r1: f64,
        r2: f64,
    },
    Sum(Vec<ProfileSpec>),
}

/// Value, gradient and Laplacian at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointEval {
    pub value: f64,
    pub grad: [f64; 3],
    pub laplacian: f64,
}

impl std::ops::AddAssign for PointEval {
    fn add_assign(&mut self, rhs: PointEval) {
        self.value += rhs.value;
        for (a, b) in self.grad.iter_mut().zip(rhs.grad) {
            *a += b;
        }
        self.laplacian += rhs.laplacian;
    }
}

/// Polynomial decay rates: `|f| ≲ ⟨x⟩^{-rate}`. `INFINITY` means compact
/// support or faster-than-polynomial decay.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayInfo {
    pub value_rate: f64,
    pub laplacian_rate: f64,
    /// Rate of the trapping part `V₋ + (∇V·x)₊`.
    pub trapping_rate: f64,
    /// `Some(c)` when the profile equals `c` outside a compact set.
    pub far_field: Option<f64>,
}

impl DecayInfo {
    fn all(rate: f64, far_field: Option<f64>) -> Self {
        DecayInfo {
            value_rate: rate,
            laplacian_rate: rate,
            trapping_rate: rate,
            far_field,
        }
    }

    /// True when `1 - a` is compactly supported.
    pub fn one_minus_compact(&self) -> bool {
        self.far_field == Some(1.0)
    }
}

/// Radial profile data at radius `r`: `f`, `f'/r` and `f''`.
struct Radial {
    f: f64,
    fp_over_r: f64,
    fpp: f64,
}

impl Radial {
    fn into_point(self, offset: &[f64]) -> PointEval {
        let d = offset.len() as f64;
        let mut grad = [0.0; 3];
        for (g, &o) in grad.iter_mut().zip(offset) {
            *g = self.fp_over_r * o;
        }
        PointEval {
            value: self.f,
            grad,
            laplacian: self.fpp + (d - 1.0) * self.fp_over_r,
        }
    }
}

/// `S(r)`: 1 for `r ≤ r₁`, 0 for `r ≥ r₂`, `1 - (6s⁵ - 15s⁴ + 10s³)` between.
fn smoothstep_plateau(r: f64, r1: f64, r2: f64) -> Radial {
    if r <= r1 {
        return Radial {
            f: 1.0,
            fp_over_r: 0.0,
            fpp: 0.0,
        };
    }
    if r >= r2 {
        return Radial {
            f: 0.0,
            fp_over_r: 0.0,
            fpp: 0.0,
        };
    }
    let width = r2 - r1;
    let s = (r - r1) / width;
    let q = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
    let dq = 30.0 * s * s * (s - 1.0) * (s - 1.0);
    let ddq = 60.0 * s * (2.0 * s - 1.0) * (s - 1.0);
    Radial {
        f: (1.0 - q).clamp(0.0, 1.0),
        fp_over_r: -dq / width / r,
        fpp: -ddq / (width * width),
    }
}

impl ProfileSpec {
    pub fn new(kind: ProfileKind) -> Result<Self> {
        Self::signed(kind, 1.0)
    }

    pub fn signed(kind: ProfileKind, sign: f64) -> Result<Self> {
        let spec = ProfileSpec { kind, sign };
        spec.validate()?;
        Ok(spec)
    }

    pub fn zero() -> Self {
        ProfileSpec {
            kind: ProfileKind::Zero,
            sign: 1.0,
        }
    }

    pub fn negated(&self) -> Self {
        ProfileSpec {
            kind: self.kind.clone(),
            sign: -self.sign,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            ProfileKind::Zero => true,
            ProfileKind::Constant { value } => *value == 0.0,
            ProfileKind::Gaussian { amplitude, .. }
            | ProfileKind::Plateau { amplitude, .. }
            | ProfileKind::PolyDecay { amplitude, .. } => *amplitude == 0.0,
            ProfileKind::AsymptoticallyFlat { .. } => false,
            ProfileKind::Sum(terms) => terms.iter().all(ProfileSpec::is_zero),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProfile(msg));
        if self.sign != 1.0 && self.sign != -1.0 {
            return bad(format!("sign must be +1 or -1, got {}", self.sign));
        }
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidProfile(format!("{name} must be finite, got {v}")))
            }
        };
        let radii = |r1: f64, r2: f64| {
            finite("r1", r1)?;
            finite("r2", r2)?;
            if r1 > 0.0 && r1 < r2 {
                Ok(())
            } else {
                Err(Error::InvalidProfile(format!(
                    "plateau radii need 0 < r1 < r2, got r1={r1}, r2={r2}"
                )))
            }
        };
        match &self.kind {
            ProfileKind::Zero => Ok(()),
            ProfileKind::Constant { value } => finite("value", *value),
            ProfileKind::Gaussian {
                amplitude,
                width,
                center,
            } => {
                finite("amplitude", *amplitude)?;
                finite("width", *width)?;
                if *width <= 0.0 {
                    return bad(format!("gaussian width must be positive, got {width}"));
                }
                if center.len() > 3 {
                    return bad(format!("center has {} components", center.len()));
                }
                center.iter().try_for_each(|&c| finite("center", c))
            }
            ProfileKind::Plateau { amplitude, r1, r2 }
            | ProfileKind::AsymptoticallyFlat { amplitude, r1, r2 } => {
                finite("amplitude", *amplitude)?;
                radii(*r1, *r2)
            }
            ProfileKind::PolyDecay { amplitude, rate } => {
                finite("amplitude", *amplitude)?;
                finite("rate", *rate)?;
                if *rate < 0.0 {
                    return bad(format!("decay rate must be nonnegative, got {rate}"));
                }
                Ok(())
            }
            ProfileKind::Sum(terms) => {
                if terms.is_empty() || terms.len() > MAX_SUM_TERMS {
                    return bad(format!(
                        "sum needs 1..={MAX_SUM_TERMS} terms, got {}",
                        terms.len()
                    ));
                }
                for t in terms {
                    if matches!(t.kind, ProfileKind::Sum(_)) {
                        return bad("sums may not be nested".into());
                    }
                    t.validate()?;
                }
                Ok(())
            }
        }
    }

    /// Exact value, gradient and Laplacian at `x` (dimension `x.len()`).
    pub fn eval_point(&self, x: &[f64]) -> PointEval {
        let d = x.len();
        let r_of = |offset: &[f64]| offset.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut out = match &self.kind {
            ProfileKind::Zero => PointEval::default(),
            ProfileKind::Constant { value } => PointEval {
                value: *value,
                ..Default::default()
            },
            ProfileKind::Gaussian {
                amplitude,
                width,
                center,
            } => {
                let mut offset = [0.0; 3];
                for i in 0..d {
                    offset[i] = x[i] - center.get(i).copied().unwrap_or(0.0);
                }
                let offset = &offset[..d];
                let w2 = width * width;
                let r2: f64 = offset.iter().map(|v| v * v).sum();
                let f = amplitude * (-r2 / w2).exp();
                Radial {
                    f,
                    fp_over_r: -2.0 / w2 * f,
                    fpp: (-2.0 / w2 + 4.0 * r2 / (w2 * w2)) * f,
                }
                .into_point(offset)
            }
            ProfileKind::Plateau { amplitude, r1, r2 } => {
                let s = smoothstep_plateau(r_of(x), *r1, *r2);
                Radial {
                    f: amplitude * s.f,
                    fp_over_r: amplitude * s.fp_over_r,
                    fpp: amplitude * s.fpp,
                }
                .into_point(x)
            }
            ProfileKind::AsymptoticallyFlat { amplitude, r1, r2 } => {
                let s = smoothstep_plateau(r_of(x), *r1, *r2);
                Radial {
                    f: 1.0 - amplitude * s.f,
                    fp_over_r: -amplitude * s.fp_over_r,
                    fpp: -amplitude * s.fpp,
                }
                .into_point(x)
            }
            ProfileKind::PolyDecay { amplitude, rate } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let b2 = 1.0 + r2;
                let f = amplitude * b2.powf(-rate / 2.0);
                Radial {
                    f,
                    fp_over_r: -rate * f / b2,
                    fpp: -rate * f / b2 + rate * (rate + 2.0) * r2 * f / (b2 * b2),
                }
                .into_point(x)
            }
            ProfileKind::Sum(terms) => {
                let mut acc = PointEval::default();
                for t in terms {
                    acc += t.eval_point(x);
                }
                acc
            }
        };
        if self.sign < 0.0 {
            out.value = -out.value;
            for g in &mut out.grad {
                *g = -*g;
            }
            out.laplacian = -out.laplacian;
        }
        out
    }

    pub fn decay(&self) -> DecayInfo {
        let s = self.sign;
        match &self.kind {
            ProfileKind::Zero => DecayInfo::all(f64::INFINITY, Some(0.0)),
            ProfileKind::Constant { value } => {
                let c = s * value;
                DecayInfo {
                    value_rate: if c == 0.0 { f64::INFINITY } else { 0.0 },
                    laplacian_rate: f64::INFINITY,
                    trapping_rate: if c < 0.0 { 0.0 } else { f64::INFINITY },
                    far_field: Some(c),
                }
            }
            ProfileKind::Gaussian { .. } => DecayInfo::all(f64::INFINITY, None),
            ProfileKind::Plateau { .. } => DecayInfo::all(f64::INFINITY, Some(0.0)),
            ProfileKind::PolyDecay { amplitude, rate } => {
                let c = s * amplitude;
                if c == 0.0 {
                    return DecayInfo::all(f64::INFINITY, Some(0.0));
                }
                DecayInfo {
                    value_rate: *rate,
                    laplacian_rate: rate + 2.0,
                    // A positive ⟨x⟩^{-m} is nonnegative and repulsive.
                    trapping_rate: if c < 0.0 { *rate } else { f64::INFINITY },
                    far_field: None,
                }
            }
            ProfileKind::AsymptoticallyFlat { .. } => DecayInfo {
                value_rate: 0.0,
                laplacian_rate: f64::INFINITY,
                trapping_rate: if s > 0.0 { f64::INFINITY } else { 0.0 },
                far_field: Some(s),
            },
            ProfileKind::Sum(terms) => {
                let parts: Vec<DecayInfo> = terms.iter().map(|t| t.negate_if(s).decay()).collect();
                let min = |f: fn(&DecayInfo) -> f64| parts.iter().map(f).fold(f64::INFINITY, f64::min);
                let far_field = parts
                    .iter()
                    .map(|p| p.far_field)
                    .sum::<Option<f64>>();
                DecayInfo {
                    value_rate: min(|p| p.value_rate),
                    laplacian_rate: min(|p| p.laplacian_rate),
                    trapping_rate: min(|p| p.trapping_rate),
                    far_field,
                }
            }
        }
    }

    fn negate_if(&self, sign: f64) -> ProfileSpec {
        if sign < 0.0 {
            self.negated()
        } else {
            self.clone()
        }
    }
}

/// Which coefficient a profile plays in the equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// `a(x)`, required to be nonnegative.
    Damping,
    /// `V(x)`.
    Potential,
}

/// A profile sampled on a grid together with its analytic derivatives.
#[derive(Clone, Debug)]
pub struct EvaluatedProfile {
    grid: Grid,
    spec: ProfileSpec,
    value: Vec<f64>,
    grad: Vec<Vec<f64>>,
    laplacian: Vec<f64>,
    sup_norm: f64,
}

impl EvaluatedProfile {
    pub fn evaluate(spec: &ProfileSpec, grid: &Grid, role: Role) -> Result<Self> {
        spec.validate()?;
        let d = grid.dim();
        let len = grid.len();
        let mut value = Vec::with_capacity(len);
        let mut grad = vec![Vec::with_capacity(len); d];
        let mut laplacian = Vec::with_capacity(len);
        for i in 0..len {
            let x = grid.point(i);
            let p = spec.eval_point(&x[..d]);
            if role == Role::Damping && p.value < 0.0 {
                return Err(Error::NegativeDamping {
                    value: p.value,
                    location: x[..d].to_vec(),
                });
            }
            value.push(p.value);
            for (axis, g) in grad.iter_mut().enumerate() {
                g.push(p.grad[axis]);
            }
            laplacian.push(p.laplacian);
        }
        let sup_norm = value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(EvaluatedProfile {
            grid: *grid,
            spec: spec.clone(),
            value,
            grad,
            laplacian,
            sup_norm,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    /// Gradient component along `axis`.
    pub fn gradient(&self, axis: usize) -> &[f64] {
        &self.grad[axis]
    }

    pub fn laplacian(&self) -> &[f64] {
        &self.laplacian
    }

    /// `‖·‖_∞` over the grid samples.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn decay(&self) -> DecayInfo {
        self.spec.decay()
    }

    pub fn is_identically_zero(&self) -> bool {
        self.sup_norm == 0.0
            && self.laplacian.iter().all(|&v| v == 0.0)
            && self.grad.iter().flatten().all(|&v| v == 0.0)
    }

    /// `∇V·x` at sample `i`.
    pub fn radial_derivative(&self, i: usize) -> f64 {
        let x = self.grid.point(i);
        self.grad.iter().zip(x).map(|(g, xi)| g[i] * xi).sum()
    }
}

/// Pointwise `max(-V, 0) + max(∇V·x, 0)`.
pub fn trapping_part(v: &EvaluatedProfile) -> Vec<f64> {
    v.values()
        .iter()
        .enumerate()
        .map(|(i, &val)| (-val).max(0.0) + v.radial_derivative(i).max(0.0))
        .collect()
}

/// Config-file form of a profile, e.g.
/// `{ kind = "plateau", amplitude = 1.0, r1 = 4.0, r2 = 6.0 }`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sign: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    terms: Option<Vec<RawProfile>>,
}

/// Parses one profile from TOML, either as a table body
/// (`kind = "gaussian"` and so on, one key per line) or as an inline table.
pub fn parse_profile(text: &str) -> Result<ProfileSpec> {
    #[derive(Deserialize)]
    struct Inline {
        p: RawProfile,
    }
    let trimmed = text.trim_start();
    let raw = if trimmed.starts_with('{') {
        toml::from_str::<Inline>(&format!("p = {trimmed}")).map(|w| w.p)
    } else {
        toml::from_str::<RawProfile>(text)
    }
    .map_err(|e| Error::InvalidProfile(e.message().to_string()))?;
    ProfileSpec::try_from(raw)
}

pub const PROFILE_KINDS: &[&str] = &[
    "zero",
    "constant",
    "gaussian",
    "plateau",
    "poly-decay",
    "asymptotically-flat",
    "sum",
];

impl TryFrom<RawProfile> for ProfileSpec {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        let kind_name = raw.kind.as_str();
        let need = |field: Option<f64>, name: &str| {
            field.ok_or_else(|| {
                Error::InvalidProfile(format!("profile kind \"{kind_name}\" requires `{name}`"))
            })
        };
        let mut allowed: Vec<&str> = vec!["sign"];
        let kind = match kind_name {
            "zero" => ProfileKind::Zero,
            "constant" => {
                allowed.push("value");
                ProfileKind::Constant {
                    value: need(raw.value, "value")?,
                }
            }
            "gaussian" => {
                allowed.extend(["amplitude", "width", "center"]);
                ProfileKind::Gaussian {
                    amplitude: need(raw.amplitude, "amplitude")?,
                    width: need(raw.width, "width")?,
                    center: raw.center.clone().unwrap_or_default(),
                }
            }
            "plateau" | "smooth-plateau" => {
                allowed.extend(["amplitude", "r1", "r2"]);
                ProfileKind::Plateau {
                    amplitude: need(raw.amplitude, "amplitude")?,
                    r1: need(raw.r1, "r1")?,
                    r2: need(raw.r2, "r2")?,
                }
            }
            "poly-decay" | "polynomial-decay" => {
                allowed.extend(["amplitude", "rate"]);
                ProfileKind::PolyDecay {
                    amplitude: need(raw.amplitude, "amplitude")?,
                    rate: need(raw.rate, "rate")?,
                }
            }
            "asymptotically-flat" => {
                allowed.extend(["amplitude", "r1", "r2"]);
                ProfileKind::AsymptoticallyFlat {
                    amplitude: need(raw.amplitude, "amplitude")?,
                    r1: need(raw.r1, "r1")?,
                    r2: need(raw.r2, "r2")?,
                }
            }
            "sum" => {
                allowed.push("terms");
                let terms = raw
                    .terms
                    .clone()
                    .ok_or_else(|| Error::InvalidProfile("sum requires `terms`".into()))?
                    .into_iter()
                    .map(ProfileSpec::try_from)
                    .collect::<Result<Vec<_>>>()?;
                ProfileKind::Sum(terms)
            }
            other => {
                return Err(Error::InvalidProfile(format!(
                    "unknown profile kind \"{other}\"; expected one of {}",
                    PROFILE_KINDS.join(", ")
                )))
            }
        };
        let present = [
            ("value", raw.value.is_some()),
            ("amplitude", raw.amplitude.is_some()),
            ("width", raw.width.is_some()),
            ("center", raw.center.is_some()),
            ("r1", raw.r1.is_some()),
            ("r2", raw.r2.is_some()),
            ("rate", raw.rate.is_some()),
            ("terms", raw.terms.is_some()),
        ];
        if let Some((name, _)) = present
            .iter()
            .find(|(name, set)| *set && !allowed.contains(name))
        {
            return Err(Error::InvalidProfile(format!(
                "`{name}` does not apply to profile kind \"{kind_name}\"; allowed: {}",
                allowed.join(", ")
            )));
        }
        ProfileSpec::signed(kind, raw.sign.unwrap_or(1.0))
    }
}

impl From<ProfileSpec> for RawProfile {
    fn from(spec: ProfileSpec) -> RawProfile {
        let mut raw = RawProfile {
            sign: (spec.sign != 1.0).then_some(spec.sign),
            ..Default::default()
        };
        match spec.kind {
            ProfileKind::Zero => raw.kind = "zero".into(),
            ProfileKind::Constant { value } => {
                raw.kind = "constant".into();
                raw.value = Some(value);
            }
            ProfileKind::Gaussian {
                amplitude,
                width,
                center,
            } => {
                raw.kind = "gaussian".into();
                raw.amplitude = Some(amplitude);
                raw.width = Some(width);
                raw.center = (!center.is_empty()).then_some(center);
            }
            ProfileKind::Plateau { amplitude, r1, r2 } => {
                raw.kind = "plateau".into();
                raw.amplitude = Some(amplitude);
                raw.r1 = Some(r1);
                raw.r2 = Some(r2);
            }
            ProfileKind::PolyDecay { amplitude, rate } => {
                raw.kind = "poly-decay".into();
                raw.amplitude = Some(amplitude);
                raw.rate = Some(rate);
            }
            ProfileKind::AsymptoticallyFlat { amplitude, r1, r2 } => {
                raw.kind = "asymptotically-flat".into();
                raw.amplitude = Some(amplitude);
                raw.r1 = Some(r1);
                raw.r2 = Some(r2);
            }
            ProfileKind::Sum(terms) => {
                raw.kind = "sum".into();
                raw.terms = Some(terms.into_iter().map(RawProfile::from).collect());
            }
        }
        raw
    }
}
