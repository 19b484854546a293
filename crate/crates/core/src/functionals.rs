//! Scalar functionals of a field snapshot and the per-step integrands of the
//! cumulative spacetime quantities.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use std::sync::{Arc, OnceLock};

use crate::error::Result;
use crate::evolution::{Exponents, Problem};
use crate::profiles::ProfileSpec;
use crate::spectral::{ComplexField, FftPlan, Grid, Spectral};
use crate::weights::{bracket, rho_gradient, ChiStack};

/// Below `MODGRAD_GUARD·‖u‖_∞` the `|u|^{2σ₂}|∇|u||²` density is set to zero
/// when `σ₂ < 1`.
pub const MODGRAD_GUARD: f64 = 1e-12;

/// Values of every functional at one checkpoint.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionalRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub energy_kinetic: f64,
    pub energy_defocusing: f64,
    pub energy_potential: f64,
    /// `E + Λ M`.
    pub energy_plus: f64,
    /// `Im ∫ ū ∇u·∇χ` with `χ = ⟨x⟩`.
    pub morawetz_i: f64,
    /// `E₊ - η I`.
    pub modified_e: f64,
    /// Interaction functional; `None` when not requested.
    pub interaction_b: Option<f64>,
    pub h1: f64,
    pub shell_mass: f64,
    /// `‖∇u‖_{L²}` from the sampled gradient.
    pub grad_l2: f64,
}

/// A physical-space field together with its spectrum and gradient.
#[derive(Clone, Debug)]
pub struct FieldView {
    pub u: ComplexField,
    pub u_hat: Vec<Complex64>,
    pub grad: Vec<ComplexField>,
}

/// Spatial integrals whose time integrals are accumulated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Integrands {
    /// `∫ a|u|^{2σ₂+2}`.
    pub diss_mass: f64,
    /// `∫ a|u|^{2σ₁+2σ₂+2}`.
    pub energy_defocusing: f64,
    /// `∫ aV|u|^{2σ₃+2σ₂+2}`.
    pub energy_potential: f64,
    /// `∫ a|u|^{2σ₂}|∇u|²`.
    pub energy_gradient: f64,
    /// `2σ₂ ∫ a|u|^{2σ₂}|∇|u||²`.
    pub energy_modgrad: f64,
    /// `(1/(2σ₂+2)) ∫ Δa |u|^{2σ₂+2}`.
    pub energy_delta_a: f64,
    /// `∫ |∇u|²/⟨x⟩³ + |u|^{2σ₁+2}/⟨x⟩ + |u|²/⟨x⟩⁷`.
    pub led: f64,
    /// `∫ a|u|^{2σ₂}(|u|^{2σ₁+2} + |∇u|² + |u|²)`.
    pub a_int: f64,
    /// `‖u‖⁴_{L⁴}`.
    pub l4: f64,
    /// `‖u‖^{2σ₂+2}_{L^{2σ₂+2}}`.
    pub l2s2: f64,
    /// Right-hand side density of the virial identity, integrated in space.
    pub virial: f64,
}

/// Time integrals `∫₀ᵗ` of [`Integrands`], trapezoidal in time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Accumulators {
    pub diss_mass: f64,
    pub energy_defocusing: f64,
    pub energy_potential: f64,
    pub energy_gradient: f64,
    pub energy_modgrad: f64,
    pub energy_delta_a: f64,
    pub led: f64,
    pub a_int: f64,
    pub l4: f64,
    pub l2s2: f64,
    pub virial: f64,
}

impl Accumulators {
    /// Trapezoidal update over a step of length `dt`.
    pub fn advance(&mut self, prev: &Integrands, cur: &Integrands, dt: f64) {
        let h = 0.5 * dt;
        self.diss_mass += h * (prev.diss_mass + cur.diss_mass);
        self.energy_defocusing += h * (prev.energy_defocusing + cur.energy_defocusing);
        self.energy_potential += h * (prev.energy_potential + cur.energy_potential);
        self.energy_gradient += h * (prev.energy_gradient + cur.energy_gradient);
        self.energy_modgrad += h * (prev.energy_modgrad + cur.energy_modgrad);
        self.energy_delta_a += h * (prev.energy_delta_a + cur.energy_delta_a);
        self.led += h * (prev.led + cur.led);
        self.a_int += h * (prev.a_int + cur.a_int);
        self.l4 += h * (prev.l4 + cur.l4);
        self.l2s2 += h * (prev.l2s2 + cur.l2s2);
        self.virial += h * (prev.virial + cur.virial);
    }

    /// Net change of `E` predicted by the energy law.
    pub fn energy_change(&self) -> f64 {
        -(self.energy_defocusing + self.energy_potential + self.energy_gradient + self.energy_modgrad)
            + self.energy_delta_a
    }
}

/// Per-sample weights that do not change during a run.
#[derive(Clone, Debug)]
struct PointWeights {
    points: Vec<[f64; 3]>,
    chi: Vec<ChiStack>,
    inv_b3: Vec<f64>,
    inv_b: Vec<f64>,
    inv_b7: Vec<f64>,
    shell: Vec<bool>,
}

impl PointWeights {
    fn new(grid: &Grid) -> Self {
        let d = grid.dim();
        let len = grid.len();
        let mut w = PointWeights {
            points: Vec::with_capacity(len),
            chi: Vec::with_capacity(len),
            inv_b3: Vec::with_capacity(len),
            inv_b: Vec::with_capacity(len),
            inv_b7: Vec::with_capacity(len),
            shell: Vec::with_capacity(len),
        };
        for i in 0..len {
            let x = grid.point(i);
            let b = bracket(&x[..d]);
            w.points.push(x);
            w.chi.push(ChiStack::at(&x[..d]));
            w.inv_b.push(1.0 / b);
            w.inv_b3.push(b.powi(-3));
            w.inv_b7.push(b.powi(-7));
            w.shell.push(grid.in_shell(i));
        }
        w
    }
}

/// The vector kernel `z/|z|` sampled with minimum-image offsets, in
/// frequency space, for periodic convolution.
#[derive(Clone, Debug)]
pub struct InteractionKernel {
    components_hat: Vec<Vec<Complex64>>,
}

impl InteractionKernel {
    pub fn new(spectral: &Spectral) -> Self {
        let grid = *spectral.grid();
        let d = grid.dim();
        let h = grid.spacing();
        let components_hat = (0..d)
            .map(|axis| {
                let mut data: Vec<Complex64> = (0..grid.len())
                    .map(|flat| {
                        let idx = grid.multi_index(flat);
                        let mut z = [0.0; 3];
                        for a in 0..d {
                            z[a] = grid.mode(idx[a]) as f64 * h;
                        }
                        Complex64::new(rho_gradient(&z[..d])[axis], 0.0)
                    })
                    .collect();
                spectral.plan().forward(&mut data);
                data
            })
            .collect();
        InteractionKernel { components_hat }
    }
}

/// Evaluates functionals and integrands for one problem on one grid.
#[derive(Clone, Debug)]
pub struct Diagnostics {
    spectral: Spectral,
    weights: PointWeights,
    lambda: f64,
    eta: f64,
    interaction: Option<InteractionKernel>,
    weight_oversampling: usize,
    virial_weights: OnceLock<Arc<VirialWeights>>,
}

/// Default oversampling factor used to project the virial weights.
pub const WEIGHT_OVERSAMPLING: usize = 2;

impl Diagnostics {
    pub fn new(spectral: Spectral, lambda: f64, eta: f64, with_interaction: bool) -> Self {
        let weights = PointWeights::new(spectral.grid());
        let interaction = with_interaction.then(|| InteractionKernel::new(&spectral));
        Diagnostics {
            spectral,
            weights,
            lambda,
            eta,
            interaction,
            weight_oversampling: WEIGHT_OVERSAMPLING,
            virial_weights: OnceLock::new(),
        }
    }

    /// Sets the oversampling used to project the virial weights; `1` uses
    /// point samples.
    pub fn with_weight_oversampling(mut self, factor: usize) -> Self {
        self.weight_oversampling = factor.max(1);
        self.virial_weights = OnceLock::new();
        self
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn view(&self, u: &ComplexField) -> Result<FieldView> {
        let u_hat = self.spectral.to_frequency(u)?.into_samples();
        Ok(self.view_with_spectrum(u.clone(), u_hat))
    }

    /// Builds a view when the spectrum is already known.
    pub fn view_with_spectrum(&self, u: ComplexField, u_hat: Vec<Complex64>) -> FieldView {
        let grad = self.spectral.gradient_of_spectrum(&u_hat);
        FieldView { u, u_hat, grad }
    }

    pub fn record(&self, view: &FieldView, t: f64, problem: &Problem) -> FunctionalRecord {
        let grid = view.u.grid();
        let cell = grid.cell_volume();
        let exps = problem.exponents();
        let v = problem.potential().values();
        let u = view.u.samples();
        let nonlinear = problem.is_nonlinear();

        let mut mass = 0.0;
        let mut defocusing = 0.0;
        let mut potential = 0.0;
        let mut morawetz = 0.0;
        let mut grad_sq = 0.0;
        let mut shell = 0.0;
        for i in 0..u.len() {
            let y = u[i].norm_sqr();
            mass += y;
            if self.weights.shell[i] {
                shell += y;
            }
            let mut dot = 0.0;
            for (axis, g) in view.grad.iter().enumerate() {
                let gi = g.samples()[i];
                grad_sq += gi.norm_sqr();
                dot += (u[i].conj() * gi).im * self.weights.chi[i].grad[axis];
            }
            morawetz += dot;
            if y > 0.0 && nonlinear {
                let ln_y = y.ln();
                defocusing += (ln_y * (exps.sigma1 + 1.0)).exp();
                if v[i] != 0.0 {
                    potential += v[i] * (ln_y * (exps.sigma3 + 1.0)).exp();
                }
            }
        }
        let mass = mass * cell;
        let energy_kinetic = 0.5 * self.spectral.weighted_spectral_sum(&view.u_hat, |k2| k2);
        let energy_defocusing = defocusing * cell / (2.0 * exps.sigma1 + 2.0);
        let energy_potential = potential * cell / (2.0 * exps.sigma3 + 2.0);
        let energy = energy_kinetic + energy_defocusing + energy_potential;
        let energy_plus = energy + self.lambda * mass;
        let morawetz_i = morawetz * cell;
        FunctionalRecord {
            t,
            mass,
            energy,
            energy_kinetic,
            energy_defocusing,
            energy_potential,
            energy_plus,
            morawetz_i,
            modified_e: energy_plus - self.eta * morawetz_i,
            interaction_b: self.interaction.as_ref().map(|k| self.interaction_with(k, view)),
            h1: self.spectral.h1_norm_of_spectrum(&view.u_hat),
            shell_mass: shell * cell,
            grad_l2: (grad_sq * cell).sqrt(),
        }
    }

    /// `B = ∫ Im(ū∇u)·(K ∗ |u|²)` with `K(z) = z/|z|`.
    pub fn interaction_b(&self, view: &FieldView) -> f64 {
        match &self.interaction {
            Some(k) => self.interaction_with(k, view),
            None => self.interaction_with(&InteractionKernel::new(&self.spectral), view),
        }
    }

    fn interaction_with(&self, kernel: &InteractionKernel, view: &FieldView) -> f64 {
        let grid = view.u.grid();
        let cell = grid.cell_volume();
        let plan = self.spectral.plan();
        let mut density: Vec<Complex64> = view
            .u
            .samples()
            .iter()
            .map(|z| Complex64::new(z.norm_sqr(), 0.0))
            .collect();
        plan.forward(&mut density);
        let u = view.u.samples();
        let mut total = 0.0;
        for (axis, k_hat) in kernel.components_hat.iter().enumerate() {
            let mut conv: Vec<Complex64> = density.iter().zip(k_hat).map(|(a, b)| a * b).collect();
            plan.inverse(&mut conv);
            let g = view.grad[axis].samples();
            total += u
                .iter()
                .zip(g)
                .zip(&conv)
                .map(|((z, gz), c)| (z.conj() * gz).im * c.re)
                .sum::<f64>();
        }
        total * cell * cell
    }

    pub fn integrands(&self, view: &FieldView, problem: &Problem) -> Integrands {
        let grid = view.u.grid();
        let d = grid.dim();
        let cell = grid.cell_volume();
        let exps = problem.exponents();
        let (s1, s2, s3) = (exps.sigma1, exps.sigma2, exps.sigma3);
        let a = problem.damping();
        let v = problem.potential();
        let av = a.values();
        let lap_a = a.laplacian();
        let vv = v.values();
        let u = view.u.samples();
        let nonlinear = problem.is_nonlinear();
        let guard = if s2 < 1.0 {
            (MODGRAD_GUARD * view.u.max_modulus()).powi(2)
        } else {
            0.0
        };

        let mut out = Integrands::default();
        for i in 0..u.len() {
            let z = u[i];
            let y = z.norm_sqr();
            let mut grad_sq = 0.0;
            let mut re_dot = [0.0; 3];
            let mut im_dot = [0.0; 3];
            let mut g_re = [0.0; 3];
            let mut g_im = [0.0; 3];
            for axis in 0..d {
                let g = view.grad[axis].samples()[i];
                grad_sq += g.norm_sqr();
                let p = z.conj() * g;
                re_dot[axis] = p.re;
                im_dot[axis] = p.im;
                g_re[axis] = g.re;
                g_im[axis] = g.im;
            }
            out.led += grad_sq * self.weights.inv_b3[i] + y * self.weights.inv_b7[i];
            out.l4 += y * y;
            if y == 0.0 || !nonlinear {
                continue;
            }
            let ln_y = y.ln();
            let y_s1 = (s1 * ln_y).exp();
            let y_s2 = (s2 * ln_y).exp();
            let y_s1p1 = y_s1 * y;
            let y_s2p1 = y_s2 * y;
            out.led += y_s1p1 * self.weights.inv_b[i];
            out.l2s2 += y_s2p1;
            if lap_a[i] != 0.0 {
                out.energy_delta_a += lap_a[i] * y_s2p1;
            }
            let ai = av[i];
            if ai == 0.0 {
                continue;
            }
            out.diss_mass += ai * y_s2p1;
            out.energy_defocusing += ai * y_s2 * y_s1p1;
            if vv[i] != 0.0 {
                out.energy_potential += ai * vv[i] * y_s2 * (s3 * ln_y).exp() * y;
            }
            out.energy_gradient += ai * y_s2 * grad_sq;
            if y > guard {
                let re_sq: f64 = re_dot[..d].iter().map(|r| r * r).sum();
                out.energy_modgrad += ai * y_s2 / y * re_sq;
            }
            out.a_int += ai * y_s2 * (y_s1p1 + grad_sq + y);
        }
        out.diss_mass *= cell;
        out.energy_defocusing *= cell;
        out.energy_potential *= cell;
        out.energy_gradient *= cell;
        out.energy_modgrad *= 2.0 * s2 * cell;
        out.energy_delta_a *= cell / (2.0 * s2 + 2.0);
        out.led *= cell;
        out.a_int *= cell;
        out.l4 *= cell;
        out.l2s2 *= cell;
        out.virial = self.virial_integrand(view, problem);
        out
    }

    /// Right-hand side of the virial identity, with the weights replaced by
    /// their band-limited projections.
    fn virial_integrand(&self, view: &FieldView, problem: &Problem) -> f64 {
        let grid = view.u.grid();
        let w = self.virial_weights(problem);
        let grad: Vec<&[Complex64]> = view.grad.iter().map(|g| g.samples()).collect();
        virial_sum(&w, grid.dim(), view.u.samples(), &grad, problem.exponents(), problem.is_nonlinear())
            * grid.cell_volume()
    }

    fn virial_weights(&self, problem: &Problem) -> Arc<VirialWeights> {
        let matches = |w: &VirialWeights| {
            w.grid == *problem.grid()
                && w.damping == *problem.damping().spec()
                && w.potential == *problem.potential().spec()
        };
        let build = || Arc::new(VirialWeights::new(problem, self.weight_oversampling));
        let cached = self.virial_weights.get_or_init(build);
        if matches(cached) {
            cached.clone()
        } else {
            build()
        }
    }
}

/// Weights of the virial density on the simulation grid.
///
/// The `⟨x⟩` weights have poles at `|x| = i`, so their samples alias badly
/// on coarse grids. Each weight is sampled on a grid refined by
/// `oversampling`, transformed, truncated to the simulation modes and
/// transformed back. Sums against band-limited densities then reproduce the
/// continuum integrals.
#[derive(Debug)]
struct VirialWeights {
    grid: Grid,
    damping: ProfileSpec,
    potential: ProfileSpec,
    /// `1/⟨x⟩`.
    inv_b: Vec<f64>,
    /// `x_i x_j/⟨x⟩³` for `i ≤ j`, in `pairs` order.
    outer: Vec<Vec<f64>>,
    pairs: Vec<(usize, usize)>,
    bilaplacian: Vec<f64>,
    laplacian: Vec<f64>,
    /// `Δχ V`, empty when `V = 0`.
    lap_v: Vec<f64>,
    /// `∇χ·∇V`, empty when `V = 0`.
    grad_v: Vec<f64>,
    /// `a ∂_iχ`, empty when `a = 0`.
    damping_grad: Vec<Vec<f64>>,
}

impl VirialWeights {
    fn new(problem: &Problem, oversampling: usize) -> Self {
        let grid = *problem.grid();
        let d = grid.dim();
        let a = problem.damping().spec();
        let v = problem.potential().spec();
        let projector = Projector::new(&grid, oversampling);
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
        let outer = pairs
            .iter()
            .map(|&(i, j)| {
                projector.project(|x| {
                    let b = bracket(x);
                    x[i] * x[j] / (b * b * b)
                })
            })
            .collect();
        let has_v = !problem.potential().is_identically_zero();
        let has_a = !problem.damping().is_identically_zero();
        VirialWeights {
            grid,
            damping: a.clone(),
            potential: v.clone(),
            inv_b: projector.project(|x| 1.0 / bracket(x)),
            outer,
            pairs,
            bilaplacian: projector.project(|x| ChiStack::at(x).bilaplacian),
            laplacian: projector.project(|x| ChiStack::at(x).laplacian),
            lap_v: if has_v {
                projector.project(|x| ChiStack::at(x).laplacian * v.eval_point(x).value)
            } else {
                Vec::new()
            },
            grad_v: if has_v {
                projector.project(|x| {
                    let chi = ChiStack::at(x);
                    let p = v.eval_point(x);
                    (0..x.len()).map(|k| chi.grad[k] * p.grad[k]).sum()
                })
            } else {
                Vec::new()
            },
            damping_grad: if has_a {
                (0..d)
                    .map(|k| projector.project(|x| a.eval_point(x).value * ChiStack::at(x).grad[k]))
                    .collect()
            } else {
                Vec::new()
            },
        }
    }
}

/// Band-limited projection of functions onto the modes of one grid.
struct Projector {
    grid: Grid,
    plans: Option<(FftPlan, FftPlan, Vec<usize>)>,
}

impl Projector {
    fn new(grid: &Grid, oversampling: usize) -> Self {
        let plans = (oversampling > 1)
            .then(|| {
                let m = grid.n() * oversampling;
                let fine = Grid::new(grid.dim(), m, grid.half_length()).ok()?;
                Some((FftPlan::new(*grid), FftPlan::new(fine), grid.embedding(m)))
            })
            .flatten();
        Projector { grid: *grid, plans }
    }

    fn project(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let d = self.grid.dim();
        let Some((coarse, fine, map)) = &self.plans else {
            return (0..self.grid.len()).map(|i| f(&self.grid.point(i)[..d])).collect();
        };
        let fine_grid = *fine.grid();
        let mut buf: Vec<Complex64> = (0..fine_grid.len())
            .map(|i| Complex64::new(f(&fine_grid.point(i)[..d]), 0.0))
            .collect();
        fine.forward(&mut buf);
        let ratio = fine_grid.len() as f64 / self.grid.len() as f64;
        let mut out: Vec<Complex64> = map.iter().map(|&j| buf[j] / ratio).collect();
        drop(buf);
        coarse.inverse(&mut out);
        out.into_iter().map(|z| z.re).collect()
    }
}

/// `Σ 2D²χ(∇u,∇ū) - ½Δ²χ|u|² + σ₁/(σ₁+1)Δχ|u|^{2σ₁+2}
///  + σ₃/(σ₃+1)ΔχV|u|^{2σ₃+2} - |u|^{2σ₃+2}∇χ·∇V/(σ₃+1)
///  - 2a|u|^{2σ₂}∇χ·Im(ū∇u)` without the cell volume.
fn virial_sum(
    w: &VirialWeights,
    d: usize,
    u: &[Complex64],
    grad: &[&[Complex64]],
    exps: Exponents,
    nonlinear: bool,
) -> f64 {
    let (s1, s2, s3) = (exps.sigma1, exps.sigma2, exps.sigma3);
    let mut total = 0.0;
    for (i, &z) in u.iter().enumerate() {
        let y = z.norm_sqr();
        let mut g = [Complex64::new(0.0, 0.0); 3];
        let mut grad_sq = 0.0;
        for axis in 0..d {
            g[axis] = grad[axis][i];
            grad_sq += g[axis].norm_sqr();
        }
        let mut outer = 0.0;
        for (k, &(p, q)) in w.pairs.iter().enumerate() {
            let re = (g[p] * g[q].conj()).re;
            outer += if p == q { re } else { 2.0 * re } * w.outer[k][i];
        }
        total += 2.0 * (grad_sq * w.inv_b[i] - outer) - 0.5 * w.bilaplacian[i] * y;
        if y == 0.0 || !nonlinear {
            continue;
        }
        let ln_y = y.ln();
        total += s1 / (s1 + 1.0) * w.laplacian[i] * (s1 * ln_y).exp() * y;
        if !w.lap_v.is_empty() {
            let y_s3p1 = (s3 * ln_y).exp() * y;
            total += (s3 * w.lap_v[i] - w.grad_v[i]) / (s3 + 1.0) * y_s3p1;
        }
        if !w.damping_grad.is_empty() {
            let momentum: f64 = (0..d).map(|k| w.damping_grad[k][i] * (z.conj() * g[k]).im).sum();
            total -= 2.0 * (s2 * ln_y).exp() * momentum;
        }
    }
    total
}

/// Mass in the outermost eighth of the box along each axis.
pub fn boundary_leak(u: &ComplexField) -> f64 {
    let grid = u.grid();
    u.samples()
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.in_shell(*i))
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        * grid.cell_volume()
}

/// Fraction of `‖u‖²_{H¹}` carried by wavenumbers above two thirds of the
/// Nyquist wavenumber.
pub fn high_frequency_fraction(spectral: &Spectral, u_hat: &[Complex64]) -> f64 {
    let cutoff = (2.0 / 3.0 * spectral.grid().nyquist()).powi(2);
    let total = spectral.weighted_spectral_sum(u_hat, |k2| 1.0 + k2);
    if total == 0.0 {
        return 0.0;
    }
    let high = spectral.weighted_spectral_sum(u_hat, |k2| if k2 > cutoff { 1.0 + k2 } else { 0.0 });
    high / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::Exponents;
    use crate::profiles::{ProfileKind, ProfileSpec};
    use std::f64::consts::PI;

    fn gaussian_field(grid: Grid, kx: f64) -> ComplexField {
        ComplexField::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::from_polar((-r2 / 2.0).exp(), kx * x[0])
        })
    }

    fn free_problem(grid: Grid, sigma1: f64) -> Problem {
        Problem::new(
            grid,
            Exponents::new(sigma1, sigma1 / 2.0, sigma1 / 2.0).unwrap(),
            &ProfileSpec::zero(),
            &ProfileSpec::zero(),
        )
        .unwrap()
    }

    fn morawetz_rate(diag: &Diagnostics, problem: &Problem, u: &ComplexField) -> f64 {
        let s = diag.spectral();
        let del = 1e-3;
        let at = |t: f64| {
            let view = diag.view(&s.free_propagate(u, t).unwrap()).unwrap();
            diag.record(&view, 0.0, problem).morawetz_i
        };
        (at(del) - at(-del)) / (2.0 * del)
    }

    #[test]
    fn virial_density_is_morawetz_rate_for_free_flow() {
        let grid = Grid::new(3, 32, 8.0).unwrap();
        let problem = Problem::linear(grid);
        let u = ComplexField::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::from_polar((-r2 / 4.0).exp(), 0.5 * x[0])
        });
        let diag = Diagnostics::new(Spectral::new(grid), 0.0, 1.0, false);
        let rate = morawetz_rate(&diag, &problem, &u);
        let projected = diag.integrands(&diag.view(&u).unwrap(), &problem).virial;
        assert!(((projected - rate) / rate).abs() < 1e-5, "{projected} {rate}");
        let sampled = Diagnostics::new(Spectral::new(grid), 0.0, 1.0, false).with_weight_oversampling(1);
        let raw = sampled.integrands(&sampled.view(&u).unwrap(), &problem).virial;
        assert!((raw - rate).abs() > 10.0 * (projected - rate).abs());
    }

    #[test]
    fn zero_field_has_zero_functionals() {
        let grid = Grid::new(2, 16, 5.0).unwrap();
        let problem = free_problem(grid, 1.0);
        let diag = Diagnostics::new(Spectral::new(grid), 0.5, 1.0, true);
        let view = diag.view(&ComplexField::zeros(grid)).unwrap();
        let rec = diag.record(&view, 0.0, &problem);
        assert_eq!(rec.mass, 0.0);
        assert_eq!(rec.energy, 0.0);
        assert_eq!(rec.morawetz_i, 0.0);
        assert_eq!(rec.interaction_b, Some(0.0));
        assert_eq!(diag.integrands(&view, &problem), Integrands::default());
    }

    #[test]
    fn real_fields_carry_no_momentum() {
        let grid = Grid::new(3, 16, 6.0).unwrap();
        let problem = free_problem(grid, 1.0);
        let diag = Diagnostics::new(Spectral::new(grid), 0.0, 1.0, true);
        let view = diag.view(&gaussian_field(grid, 0.0)).unwrap();
        let rec = diag.record(&view, 0.0, &problem);
        assert!(rec.morawetz_i.abs() < 1e-14);
        assert!(rec.interaction_b.unwrap().abs() < 1e-14);
    }

    #[test]
    fn odd_symmetry_cancels_morawetz() {
        // N odd-symmetric about the origin needs the sample at +L as well; use
        // a centered grid where x ↦ -x maps samples to samples except the
        // first one, where the Gaussian is negligible.
        let grid = Grid::new(3, 32, 8.0).unwrap();
        let problem = free_problem(grid, 1.0);
        let diag = Diagnostics::new(Spectral::new(grid), 0.0, 1.0, false);
        let view = diag.view(&gaussian_field(grid, PI / 8.0 * 4.0)).unwrap();
        let rec = diag.record(&view, 0.0, &problem);
        assert!(rec.morawetz_i.abs() < 1e-12, "{}", rec.morawetz_i);
    }

    #[test]
    fn gaussian_energy_pieces() {
        let grid = Grid::new(3, 64, 10.0).unwrap();
        let problem = free_problem(grid, 1.0);
        let diag = Diagnostics::new(Spectral::new(grid), 0.0, 1.0, false);
        let view = diag.view(&gaussian_field(grid, 0.0)).unwrap();
        let rec = diag.record(&view, 0.0, &problem);
        let p32 = PI.powf(1.5);
        assert!((rec.mass - p32).abs() < 1e-10);
        assert!((rec.energy_kinetic - 0.75 * p32).abs() < 1e-10);
        assert!((rec.energy_defocusing - 0.25 * (PI / 2.0).powf(1.5)).abs() < 1e-10);
        assert_eq!(rec.energy_potential, 0.0);
    }

    #[test]
    fn constant_field_shell_fraction() {
        for d in 1..=3 {
            let grid = Grid::new(d, 16, 3.0).unwrap();
            let one = ComplexField::from_fn(grid, |_| Complex64::new(1.0, 0.0));
            let expect = (1.0 - 0.75f64.powi(d as i32)) * one.mass();
            assert!((boundary_leak(&one) - expect).abs() < 1e-12 * expect);
        }
        let grid = Grid::new(3, 64, 16.0).unwrap();
        assert!(boundary_leak(&gaussian_field(grid, 0.0)) < 1e-15);
        assert_eq!(boundary_leak(&ComplexField::zeros(grid)), 0.0);
    }

    #[test]
    fn damping_free_problem_has_no_dissipation() {
        let grid = Grid::new(2, 16, 6.0).unwrap();
        let problem = free_problem(grid, 1.0);
        let diag = Diagnostics::new(Spectral::new(grid), 0.0, 1.0, false);
        let view = diag.view(&gaussian_field(grid, 0.5)).unwrap();
        let it = diag.integrands(&view, &problem);
        assert_eq!(it.diss_mass, 0.0);
        assert_eq!(it.a_int, 0.0);
        assert!(it.led > 0.0 && it.l4 > 0.0);
    }

    #[test]
    fn accumulators_integrate_constants_linearly() {
        let grid = Grid::new(1, 16, 6.0).unwrap();
        let problem = free_problem(grid, 1.0);
        let diag = Diagnostics::new(Spectral::new(grid), 0.0, 1.0, false);
        let view = diag.view(&gaussian_field(grid, 0.0)).unwrap();
        let it = diag.integrands(&view, &problem);
        let mut acc = Accumulators::default();
        for _ in 0..10 {
            acc.advance(&it, &it, 0.1);
        }
        assert!((acc.led - it.led).abs() < 1e-14 * it.led);
    }

    #[test]
    fn plateau_damping_contributes() {
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let a = ProfileSpec::new(ProfileKind::Plateau {
            amplitude: 1.0,
            r1: 1.0,
            r2: 3.0,
        })
        .unwrap();
        let problem =
            Problem::new(grid, Exponents::new(1.0, 0.5, 0.5).unwrap(), &a, &ProfileSpec::zero()).unwrap();
        let diag = Diagnostics::new(Spectral::new(grid), 0.0, 1.0, false);
        let view = diag.view(&gaussian_field(grid, 0.5)).unwrap();
        let it = diag.integrands(&view, &problem);
        assert!(it.diss_mass > 0.0 && it.energy_gradient > 0.0 && it.energy_modgrad > 0.0);
        assert!(it.energy_delta_a != 0.0);
    }
}
