use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on the box `[-L, L)^d`.
///
/// Samples are stored row-major: axis 0 varies slowest. Wavenumbers follow the
/// usual FFT ordering, `m = 0, 1, …, N/2-1, -N/2, …, -1`, scaled by `π/L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 8, got {n}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half box length must be positive and finite, got {half_length}"
            )));
        }
        n.checked_pow(dim as u32)
            .filter(|&len| len <= 1 << 31)
            .ok_or_else(|| Error::InvalidGrid(format!("{n}^{dim} samples is too large")))?;
        Ok(Grid {
            dim,
            n,
            half_length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn box_volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.dim as i32)
    }

    /// Total number of samples, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical coordinate of index `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.spacing()
    }

    /// Integer frequency offset of index `i`, in `[-N/2, N/2)`.
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Storage index on the `(d, m, L)` grid of each mode of this grid, for
    /// zero-padded spectral interpolation. Requires `m ≥ n`.
    pub fn embedding(&self, m: usize) -> Vec<usize> {
        let d = self.dim();
        (0..self.len())
            .map(|flat| {
                let idx = self.multi_index(flat);
                (0..d).fold(0, |out, axis| {
                    out * m + self.mode(idx[axis]).rem_euclid(m as i64) as usize
                })
            })
            .collect()
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        PI / self.half_length * self.mode(i) as f64
    }

    /// Wavenumber used by first derivatives: the Nyquist mode is zeroed.
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    /// Largest representable wavenumber magnitude, `πN/(2L)`.
    pub fn nyquist(&self) -> f64 {
        PI / self.half_length * (self.n / 2) as f64
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Per-axis indices of a flat index; unused trailing axes are zero.
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rest % self.n;
            rest /= self.n;
        }
        idx
    }

    /// Physical point of a flat index; unused trailing coordinates are zero.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    /// `|k|²` for every frequency sample, in storage order.
    pub fn k_squared(&self) -> Vec<f64> {
        let k = self.wavenumbers();
        (0..self.len())
            .map(|flat| {
                let idx = self.multi_index(flat);
                (0..self.dim).map(|a| k[idx[a]] * k[idx[a]]).sum()
            })
            .collect()
    }

    /// Stride (in samples) between neighbours along `axis`.
    pub(crate) fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Width of the boundary shell along each axis: the outermost eighth.
    pub fn shell_width(&self) -> usize {
        (self.n / 8).max(1)
    }

    /// True when the flat index lies in the outer shell on any axis.
    pub fn in_shell(&self, flat: usize) -> bool {
        let w = self.shell_width();
        let idx = self.multi_index(flat);
        idx[..self.dim].iter().any(|&i| i < w || i >= self.n - w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(0, 16, 1.0).is_err());
        assert!(Grid::new(4, 16, 1.0).is_err());
        assert!(Grid::new(1, 6, 1.0).is_err());
        assert!(Grid::new(1, 9, 1.0).is_err());
        assert!(Grid::new(1, 16, 0.0).is_err());
        assert!(Grid::new(1, 16, f64::NAN).is_err());
        assert!(Grid::new(3, 96, 24.0).is_ok());
    }

    #[test]
    fn wavenumbers_symmetric_up_to_nyquist() {
        let g = Grid::new(1, 16, 3.0).unwrap();
        let k = g.wavenumbers();
        assert_eq!(k[0], 0.0);
        for m in 1..8 {
            assert_eq!(k[m], -k[16 - m]);
        }
        assert_eq!(k[8], -g.nyquist());
        assert_eq!(g.derivative_wavenumber(8), 0.0);
    }

    #[test]
    fn quadrature_of_one_is_box_volume() {
        for d in 1..=3 {
            let g = Grid::new(d, 16, 2.7).unwrap();
            let total = g.len() as f64 * g.cell_volume();
            assert!((total / g.box_volume() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn multi_index_is_row_major() {
        let g = Grid::new(3, 8, 1.0).unwrap();
        assert_eq!(g.multi_index(0), [0, 0, 0]);
        assert_eq!(g.multi_index(1), [0, 0, 1]);
        assert_eq!(g.multi_index(8), [0, 1, 0]);
        assert_eq!(g.multi_index(64 + 8 + 3), [1, 1, 3]);
        assert_eq!(g.stride(0), 64);
        assert_eq!(g.stride(2), 1);
    }

    #[test]
    fn shell_fraction_of_box() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let inside = (0..g.len()).filter(|&i| !g.in_shell(i)).count();
        assert_eq!(inside, 12 * 12);
    }
}
