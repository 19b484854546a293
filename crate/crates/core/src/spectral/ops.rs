use num_complex::Complex64;

use super::{ComplexField, FftPlan, Grid, Space};
use crate::error::Result;

/// Fourier-multiplier operators on one grid: derivatives, norms and the free
/// Schrödinger propagator `e^{itΔ}`.
///
/// All operators take and return physical-space fields unless noted.
#[derive(Clone, Debug)]
pub struct Spectral {
    plan: FftPlan,
    k_squared: Vec<f64>,
    deriv_k: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let deriv_k = (0..grid.n()).map(|i| grid.derivative_wavenumber(i)).collect();
        Spectral {
            plan: FftPlan::new(grid),
            k_squared: grid.k_squared(),
            deriv_k,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.plan.grid()
    }

    pub fn plan(&self) -> &FftPlan {
        &self.plan
    }

    /// `|k|²` in storage order.
    pub fn k_squared(&self) -> &[f64] {
        &self.k_squared
    }

    pub fn to_frequency(&self, f: &ComplexField) -> Result<ComplexField> {
        f.expect_grid(self.grid())?;
        f.expect_space(Space::Physical)?;
        f.check_finite()?;
        let mut data = f.samples().to_vec();
        self.plan.forward(&mut data);
        Ok(ComplexField::from_parts(*self.grid(), data, Space::Frequency))
    }

    pub fn to_physical(&self, f: &ComplexField) -> Result<ComplexField> {
        f.expect_grid(self.grid())?;
        f.expect_space(Space::Frequency)?;
        f.check_finite()?;
        let mut data = f.samples().to_vec();
        self.plan.inverse(&mut data);
        Ok(ComplexField::from_parts(*self.grid(), data, Space::Physical))
    }

    /// Spectral partial derivatives `∂_j f`, one field per axis.
    pub fn gradient(&self, f: &ComplexField) -> Result<Vec<ComplexField>> {
        let f_hat = self.to_frequency(f)?;
        Ok(self.gradient_of_spectrum(f_hat.samples()))
    }

    /// Gradient from frequency coefficients already in hand.
    pub fn gradient_of_spectrum(&self, f_hat: &[Complex64]) -> Vec<ComplexField> {
        let grid = *self.grid();
        (0..grid.dim())
            .map(|axis| {
                let mut data: Vec<Complex64> = f_hat
                    .iter()
                    .enumerate()
                    .map(|(flat, &c)| {
                        let k = self.deriv_k[grid.multi_index(flat)[axis]];
                        c * Complex64::new(0.0, k)
                    })
                    .collect();
                self.plan.inverse(&mut data);
                ComplexField::from_parts(grid, data, Space::Physical)
            })
            .collect()
    }

    pub fn laplacian(&self, f: &ComplexField) -> Result<ComplexField> {
        let mut f_hat = self.to_frequency(f)?;
        for (c, &k2) in f_hat.samples_mut().iter_mut().zip(&self.k_squared) {
            *c *= -k2;
        }
        self.to_physical(&f_hat)
    }

    /// `e^{itΔ} f`: multiplies each Fourier coefficient by `exp(-i|k|²t)`.
    pub fn free_propagate(&self, f: &ComplexField, t: f64) -> Result<ComplexField> {
        if t == 0.0 {
            f.expect_grid(self.grid())?;
            f.expect_space(Space::Physical)?;
            return Ok(f.clone());
        }
        let mut f_hat = self.to_frequency(f)?;
        self.propagate_spectrum(f_hat.samples_mut(), t);
        self.to_physical(&f_hat)
    }

    pub(crate) fn propagate_spectrum(&self, f_hat: &mut [Complex64], t: f64) {
        if t == 0.0 {
            return;
        }
        for (c, &k2) in f_hat.iter_mut().zip(&self.k_squared) {
            *c *= Complex64::from_polar(1.0, -k2 * t);
        }
    }

    /// `Σ w(k)|f̂|²` scaled so that `w ≡ 1` gives `‖f‖²_{L²}`.
    pub fn weighted_spectral_sum(&self, f_hat: &[Complex64], weight: impl Fn(f64) -> f64) -> f64 {
        let grid = self.grid();
        let norm = grid.cell_volume() / grid.len() as f64;
        f_hat
            .iter()
            .zip(&self.k_squared)
            .map(|(c, &k2)| weight(k2) * c.norm_sqr())
            .sum::<f64>()
            * norm
    }

    /// `‖f‖²_{L²}` from frequency coefficients (Parseval).
    pub fn spectral_l2_sq(&self, f_hat: &[Complex64]) -> f64 {
        self.weighted_spectral_sum(f_hat, |_| 1.0)
    }

    /// `sqrt(Σ (1+|k|²)|f̂|²)`, the discrete H¹ norm.
    pub fn h1_norm(&self, f: &ComplexField) -> Result<f64> {
        let f_hat = self.to_frequency(f)?;
        Ok(self.h1_norm_of_spectrum(f_hat.samples()))
    }

    pub fn h1_norm_of_spectrum(&self, f_hat: &[Complex64]) -> f64 {
        self.weighted_spectral_sum(f_hat, |k2| 1.0 + k2).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn plane_wave(grid: Grid, modes: [i64; 3]) -> (ComplexField, [f64; 3]) {
        let scale = PI / grid.half_length();
        let k = modes.map(|m| m as f64 * scale);
        let f = ComplexField::from_fn(grid, |x| {
            let phase: f64 = x.iter().zip(&k).map(|(a, b)| a * b).sum();
            Complex64::from_polar(1.0, phase)
        });
        (f, k)
    }

    fn gaussian_1d(n: usize, l: f64) -> (Grid, ComplexField) {
        let grid = Grid::new(1, n, l).unwrap();
        let f = ComplexField::from_fn(grid, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0));
        (grid, f)
    }

    #[test]
    fn plane_wave_gradient_is_ik() {
        let grid = Grid::new(3, 16, PI).unwrap();
        let ops = Spectral::new(grid);
        let (f, k) = plane_wave(grid, [2, -3, 5]);
        let grad = ops.gradient(&f).unwrap();
        for axis in 0..3 {
            for (g, z) in grad[axis].samples().iter().zip(f.samples()) {
                let expect = z * Complex64::new(0.0, k[axis]);
                assert!((g - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
            }
        }
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let grid = Grid::new(2, 16, 1.3).unwrap();
        let ops = Spectral::new(grid);
        let f = ComplexField::from_fn(grid, |_| Complex64::new(1.0, 0.0));
        for g in ops.gradient(&f).unwrap() {
            assert!(g.max_modulus() < 1e-14);
        }
        assert!(ops.laplacian(&f).unwrap().max_modulus() < 1e-14);
    }

    #[test]
    fn gaussian_derivatives_match_closed_form() {
        let (grid, f) = gaussian_1d(256, 16.0);
        let ops = Spectral::new(grid);
        let grad = ops.gradient(&f).unwrap();
        let lap = ops.laplacian(&f).unwrap();
        for i in 0..grid.n() {
            let x = grid.coordinate(i);
            let g = (-x * x / 2.0).exp();
            assert!((grad[0].samples()[i].re + x * g).abs() < 1e-10);
            assert!((lap.samples()[i].re - (x * x - 1.0) * g).abs() < 1e-10);
        }
    }

    #[test]
    fn plane_wave_laplacian_and_propagator() {
        let grid = Grid::new(2, 16, PI).unwrap();
        let ops = Spectral::new(grid);
        let (f, k) = plane_wave(grid, [3, -1, 0]);
        let k2 = k[0] * k[0] + k[1] * k[1];
        let lap = ops.laplacian(&f).unwrap();
        let t = 0.37;
        let prop = ops.free_propagate(&f, t).unwrap();
        for ((l, p), z) in lap.samples().iter().zip(prop.samples()).zip(f.samples()) {
            assert!((l + z * k2).norm() <= 1e-12 * k2);
            assert!((p - z * Complex64::from_polar(1.0, -k2 * t)).norm() <= 1e-12);
        }
    }

    #[test]
    fn propagator_round_trip() {
        let (grid, f) = gaussian_1d(128, 12.0);
        let ops = Spectral::new(grid);
        let same = ops.free_propagate(&f, 0.0).unwrap();
        assert_eq!(same.samples(), f.samples());
        let back = ops
            .free_propagate(&ops.free_propagate(&f, 0.7).unwrap(), -0.7)
            .unwrap();
        let err = back.sub(&f).unwrap().lp_norm(2.0).unwrap();
        assert!(err <= 1e-12 * f.lp_norm(2.0).unwrap());
    }

    #[test]
    fn norms_of_known_fields() {
        let grid = Grid::new(3, 16, PI).unwrap();
        let one = ComplexField::from_fn(grid, |_| Complex64::new(1.0, 0.0));
        for p in [1.0, 2.0, 3.5] {
            let expect = (2.0 * PI).powf(3.0 / p);
            assert!((one.lp_norm(p).unwrap() / expect - 1.0).abs() < 1e-12);
        }
        assert_eq!(one.lp_norm(f64::INFINITY).unwrap(), 1.0);
        assert_eq!(ComplexField::zeros(grid).lp_norm(2.0).unwrap(), 0.0);
        assert!(one.lp_norm(0.5).is_err());

        let ops = Spectral::new(grid);
        let (f, k) = plane_wave(grid, [1, 2, -2]);
        let k2: f64 = k.iter().map(|v| v * v).sum();
        let expect = (2.0 * PI).powf(1.5) * (1.0 + k2).sqrt();
        assert!((ops.h1_norm(&f).unwrap() / expect - 1.0).abs() < 1e-12);
        assert_eq!(ops.h1_norm(&ComplexField::zeros(grid)).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_norms() {
        let grid = Grid::new(3, 64, 10.0).unwrap();
        let g = ComplexField::from_fn(grid, |x| {
            Complex64::new((-x.iter().map(|v| v * v).sum::<f64>() / 2.0).exp(), 0.0)
        });
        let l2 = g.lp_norm(2.0).unwrap();
        assert!((l2 - PI.powf(0.75)).abs() < 1e-10);

        let (grid1, g1) = gaussian_1d(256, 16.0);
        let h1 = Spectral::new(grid1).h1_norm(&g1).unwrap();
        assert!((h1 - (PI.sqrt() * 1.5).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn non_finite_input_names_index() {
        let grid = Grid::new(1, 8, 1.0).unwrap();
        let mut data = vec![Complex64::default(); 8];
        data[5] = Complex64::new(f64::NAN, 0.0);
        let f = ComplexField::from_parts(grid, data, Space::Physical);
        let err = Spectral::new(grid).gradient(&f).unwrap_err();
        assert!(err.to_string().contains("index 5"), "{err}");
    }

    #[test]
    fn frequency_field_rejected_where_physical_expected() {
        let grid = Grid::new(1, 8, 1.0).unwrap();
        let ops = Spectral::new(grid);
        let f_hat = ops.to_frequency(&ComplexField::zeros(grid)).unwrap();
        assert!(ops.laplacian(&f_hat).is_err());
        assert!(f_hat.lp_norm(2.0).is_err());
    }
}
