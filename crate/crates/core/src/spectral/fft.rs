use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

/// Columns gathered per batch when transforming a strided axis.
const COLUMN_BATCH: usize = 32;

/// Planned d-dimensional complex FFT over a [`Grid`].
///
/// Forward transforms are unnormalized; inverse transforms divide by `N^d`.
#[derive(Clone)]
pub struct FftPlan {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FftPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftPlan").field("grid", &self.grid).finish()
    }
}

impl FftPlan {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        FftPlan {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &*self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &*self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn run(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        assert_eq!(data.len(), self.grid.len(), "buffer does not match grid");
        let n = self.grid.n();
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut columns = Vec::new();
        for axis in 0..self.grid.dim() {
            let stride = self.grid.stride(axis);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            columns.resize(n * COLUMN_BATCH.min(stride), Complex64::default());
            for block in data.chunks_mut(n * stride) {
                let mut first = 0;
                while first < stride {
                    let width = COLUMN_BATCH.min(stride - first);
                    let buf = &mut columns[..n * width];
                    for i in 0..n {
                        let row = &block[i * stride + first..i * stride + first + width];
                        for (c, &z) in row.iter().enumerate() {
                            buf[c * n + i] = z;
                        }
                    }
                    fft.process_with_scratch(buf, &mut scratch);
                    for i in 0..n {
                        let row = &mut block[i * stride + first..i * stride + first + width];
                        for (c, z) in row.iter_mut().enumerate() {
                            *z = buf[c * n + i];
                        }
                    }
                    first += width;
                }
            }
        }
    }
}
