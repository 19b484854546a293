use num_complex::Complex64;

use super::Grid;
use crate::error::{Error, Result};

/// Which representation a [`ComplexField`] currently holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Physical,
    Frequency,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Physical => "physical",
            Space::Frequency => "frequency",
        }
    }
}

/// Complex samples on a [`Grid`], in physical or frequency representation.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    data: Vec<Complex64>,
    space: Space,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        ComplexField {
            grid,
            data: vec![Complex64::default(); grid.len()],
            space: Space::Physical,
        }
    }

    /// Samples `f` at every grid point. `f` receives the first `d` coordinates.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let d = grid.dim();
        let data = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..d])
            })
            .collect();
        ComplexField {
            grid,
            data,
            space: Space::Physical,
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<Complex64>, space: Space) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {}",
                data.len(),
                grid.len()
            )));
        }
        let field = ComplexField { grid, data, space };
        field.check_finite()?;
        Ok(field)
    }

    pub(crate) fn from_parts(grid: Grid, data: Vec<Complex64>, space: Space) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        ComplexField { grid, data, space }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.data
    }

    /// First non-finite sample, if any.
    pub fn check_finite(&self) -> Result<()> {
        match self
            .data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            Some(index) => Err(Error::NonFinite {
                index,
                value: self.data[index].to_string(),
            }),
            None => Ok(()),
        }
    }

    pub(crate) fn expect_space(&self, space: Space) -> Result<()> {
        if self.space == space {
            Ok(())
        } else {
            Err(Error::WrongSpace {
                expected: space.name(),
                found: self.space.name(),
            })
        }
    }

    pub(crate) fn expect_grid(&self, grid: &Grid) -> Result<()> {
        if &self.grid == grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "field on {:?}, operator on {:?}",
                self.grid, grid
            )))
        }
    }

    pub fn scale(&self, factor: Complex64) -> ComplexField {
        let data = self.data.iter().map(|&z| z * factor).collect();
        ComplexField::from_parts(self.grid, data, self.space)
    }

    /// `self - other`, sample by sample.
    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        other.expect_grid(&self.grid)?;
        other.expect_space(self.space)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ComplexField::from_parts(self.grid, data, self.space))
    }

    /// `(Σ |f_i|^p h^d)^{1/p}`, or the max modulus for `p = ∞`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidArgument(format!("L^p norm needs p >= 1, got {p}")));
        }
        self.expect_space(Space::Physical)?;
        if p.is_infinite() {
            return Ok(self.max_modulus());
        }
        let h = self.grid.cell_volume();
        let sum: f64 = if p == 2.0 {
            self.data.iter().map(|z| z.norm_sqr()).sum()
        } else {
            self.data.iter().map(|z| z.norm().powf(p)).sum()
        };
        Ok((sum * h).powf(1.0 / p))
    }

    pub fn max_modulus(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `∫ |f|²` by uniform quadrature.
    pub fn mass(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Index and modulus of the largest sample.
    pub fn argmax_modulus(&self) -> (usize, f64) {
        self.data
            .iter()
            .enumerate()
            .map(|(i, z)| (i, z.norm()))
            .fold((0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 || cur.1.is_nan() {
                    cur
                } else {
                    best
                }
            })
    }
}
