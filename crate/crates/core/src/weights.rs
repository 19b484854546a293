//! Closed-form derivative stacks of the Morawetz weight `χ(x) = ⟨x⟩` and the
//! interaction weight `ρ(x) = |x|`.
//!
//! Every ⟨x⟩-weighted quantity in the crate goes through these functions.
//! For radial `f(r)` in `d` dimensions, `Δf = f'' + (d-1) f'/r`; applied to
//! `⟨x⟩^{-p}` this gives `p(p+2-d)⟨x⟩^{-p-2} - p(p+2)⟨x⟩^{-p-4}`, from which
//! the stacks below follow.

/// `⟨x⟩ = sqrt(1 + |x|²)`.
pub fn bracket(x: &[f64]) -> f64 {
    (1.0 + norm_sq(x)).sqrt()
}

pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Laplacian of `⟨x⟩^{-p}` in `d` dimensions, as a function of `⟨x⟩`.
pub fn laplacian_of_bracket_power(p: f64, d: usize, bracket: f64) -> f64 {
    let d = d as f64;
    p * (p + 2.0 - d) * bracket.powf(-p - 2.0) - p * (p + 2.0) * bracket.powf(-p - 4.0)
}

/// Values of `χ = ⟨x⟩` and its derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiStack {
    pub chi: f64,
    /// `∇χ = x/⟨x⟩` (trailing components zero when `d < 3`).
    pub grad: [f64; 3],
    /// `Δχ = (d-1)/⟨x⟩ + 1/⟨x⟩³`.
    pub laplacian: f64,
    /// `Δ²χ`; in three dimensions `-15/⟨x⟩⁷`.
    pub bilaplacian: f64,
}

impl ChiStack {
    pub fn at(x: &[f64]) -> ChiStack {
        let d = x.len();
        let b = bracket(x);
        let mut grad = [0.0; 3];
        for (g, &xi) in grad.iter_mut().zip(x) {
            *g = xi / b;
        }
        let df = d as f64;
        let laplacian = (df - 1.0) / b + b.powi(-3);
        let bilaplacian = (df - 1.0) * laplacian_of_bracket_power(1.0, d, b)
            + laplacian_of_bracket_power(3.0, d, b);
        ChiStack {
            chi: b,
            grad,
            laplacian,
            bilaplacian,
        }
    }

    /// `D²χ ξ·ξ̄ = |ξ|²/⟨x⟩ - |x·ξ|²/⟨x⟩³` for complex `ξ`.
    pub fn hessian_form(&self, x: &[f64], xi_re: &[f64], xi_im: &[f64]) -> f64 {
        let b = self.chi;
        let xi_sq: f64 = xi_re.iter().chain(xi_im).map(|v| v * v).sum();
        let dot_re: f64 = x.iter().zip(xi_re).map(|(a, b)| a * b).sum();
        let dot_im: f64 = x.iter().zip(xi_im).map(|(a, b)| a * b).sum();
        xi_sq / b - (dot_re * dot_re + dot_im * dot_im) / (b * b * b)
    }
}

/// Three-dimensional closed forms used by the η constructor.
pub mod chi3 {
    /// `Δχ = 2/⟨x⟩ + 1/⟨x⟩³`.
    pub fn laplacian(bracket: f64) -> f64 {
        2.0 / bracket + bracket.powi(-3)
    }

    /// `-Δ²χ = 15/⟨x⟩⁷`.
    pub fn neg_bilaplacian(bracket: f64) -> f64 {
        15.0 * bracket.powi(-7)
    }
}

/// Interaction weight `ρ = |x|`: gradient `x/|x|` (zero at the origin).
pub fn rho_gradient(z: &[f64]) -> [f64; 3] {
    let r = norm_sq(z).sqrt();
    let mut g = [0.0; 3];
    if r > 0.0 {
        for (gi, &zi) in g.iter_mut().zip(z) {
            *gi = zi / r;
        }
    }
    g
}

/// `Δρ = (d-1)/|x|` away from the origin.
pub fn rho_laplacian(z: &[f64]) -> f64 {
    (z.len() as f64 - 1.0) / norm_sq(z).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_stack_at_origin() {
        for d in 1..=3 {
            let x = vec![0.0; d];
            let s = ChiStack::at(&x);
            assert_eq!(s.chi, 1.0);
            // Δ⟨x⟩(0) = d
            assert!((s.laplacian - d as f64).abs() < 1e-15);
        }
        let s = ChiStack::at(&[0.0, 0.0, 0.0]);
        assert!((s.bilaplacian + 15.0).abs() < 1e-13);
    }

    #[test]
    fn one_dimensional_stack_matches_direct_derivatives() {
        // χ'' = ⟨x⟩^{-3}, χ'''' = 12⟨x⟩^{-5} - 15⟨x⟩^{-7}
        for &x in &[0.3, -1.7, 4.2] {
            let s = ChiStack::at(&[x]);
            let b: f64 = (1.0 + x * x).sqrt();
            assert!((s.laplacian - b.powi(-3)).abs() < 1e-14);
            assert!((s.bilaplacian - (12.0 * b.powi(-5) - 15.0 * b.powi(-7))).abs() < 1e-14);
        }
    }

    #[test]
    fn three_dimensional_forms_agree() {
        let x = [0.4, -2.0, 1.1];
        let s = ChiStack::at(&x);
        assert!((s.laplacian - chi3::laplacian(s.chi)).abs() < 1e-15);
        assert!((-s.bilaplacian - chi3::neg_bilaplacian(s.chi)).abs() < 1e-14);
    }

    #[test]
    fn rho_stack() {
        let g = rho_gradient(&[3.0, 4.0, 0.0]);
        assert_eq!(g, [0.6, 0.8, 0.0]);
        assert_eq!(rho_gradient(&[0.0, 0.0, 0.0]), [0.0; 3]);
        assert!((rho_laplacian(&[3.0, 4.0, 0.0]) - 0.4).abs() < 1e-15);
    }
}
