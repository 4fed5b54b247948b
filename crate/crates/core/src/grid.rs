//! Periodic tensor grids and 2D transforms.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{EdgeError, Result};
use crate::wall::DomainWall;

/// Angular wavenumbers of an `n`-point periodic grid on `[-l, l)`, in
/// transform order, with the Nyquist entry set to zero.
pub fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    let dk = PI / l;
    (0..n)
        .map(|k| {
            if 2 * k < n {
                k as f64 * dk
            } else if 2 * k == n {
                0.0
            } else {
                (k as f64 - n as f64) * dk
            }
        })
        .collect()
}

/// `N1 x N2` points on `[-L1, L1) x [-L2, L2)`, index `i2 * N1 + i1`.
#[derive(Clone)]
pub struct Grid2D {
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
    k1: Vec<f64>,
    k2: Vec<f64>,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Grid2D({}x{} on [-{}, {}) x [-{}, {}))",
            self.n1, self.n2, self.l1, self.l1, self.l2, self.l2
        )
    }
}

impl Grid2D {
    pub fn new(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Self> {
        for n in [n1, n2] {
            if n < 4 || !n.is_power_of_two() {
                return Err(EdgeError::InvalidParameter(format!(
                    "grid size {n} must be a power of two >= 4"
                )));
            }
        }
        if !(l1 > 0.0 && l2 > 0.0 && l1.is_finite() && l2.is_finite()) {
            return Err(EdgeError::InvalidParameter("grid extents must be positive".into()));
        }
        let mut planner = FftPlanner::new();
        Ok(Grid2D {
            n1,
            n2,
            l1,
            l2,
            k1: wavenumbers(n1, l1),
            k2: wavenumbers(n2, l2),
            row_fwd: planner.plan_fft_forward(n1),
            row_inv: planner.plan_fft_inverse(n1),
            col_fwd: planner.plan_fft_forward(n2),
            col_inv: planner.plan_fft_inverse(n2),
        })
    }

    pub fn square(n: usize, l: f64) -> Result<Self> {
        Self::new(n, n, l, l)
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h1(&self) -> f64 {
        2.0 * self.l1 / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        2.0 * self.l2 / self.n2 as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.h1() * self.h2()
    }

    pub fn x1(&self, i1: usize) -> f64 {
        -self.l1 + i1 as f64 * self.h1()
    }

    pub fn x2(&self, i2: usize) -> f64 {
        -self.l2 + i2 as f64 * self.h2()
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        [self.x1(idx % self.n1), self.x2(idx / self.n1)]
    }

    pub fn k1(&self) -> &[f64] {
        &self.k1
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    /// Wavevector of transformed index `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        [self.k1[idx % self.n1], self.k2[idx / self.n1]]
    }

    /// Index of the grid point nearest to `x` (periodic).
    pub fn nearest(&self, x: [f64; 2]) -> usize {
        let wrap = |v: f64, l: f64, n: usize, h: f64| -> usize {
            let s = ((v + l) / h).round() as i64;
            s.rem_euclid(n as i64) as usize
        };
        wrap(x[1], self.l2, self.n2, self.h2()) * self.n1 + wrap(x[0], self.l1, self.n1, self.h1())
    }

    /// Require at least `points` grid points per length `sigma` in both directions.
    pub fn check_resolution(&self, sigma: f64, points: f64) -> Result<()> {
        let h = self.h1().max(self.h2());
        if h * points > sigma {
            return Err(EdgeError::Resolution(format!(
                "spacing {h:.4} gives {:.2} points per width {sigma:.4}, need {points}",
                sigma / h
            )));
        }
        Ok(())
    }

    /// Wall values at every grid point.
    pub fn sample_wall(&self, wall: &DomainWall) -> Result<Vec<f64>> {
        (0..self.len())
            .into_par_iter()
            .map(|i| wall.value(self.point(i)))
            .collect()
    }

    pub fn fft_forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse 2D transform including normalization.
    pub fn fft_inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.row_inv, &self.col_inv);
        let s = 1.0 / self.len() as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }

    fn transform(&self, data: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        let (n1, n2) = (self.n1, self.n2);
        batched(data, n1, row);
        let mut t = vec![Complex64::default(); n1 * n2];
        transpose(data, &mut t, n1, n2);
        batched(&mut t, n2, col);
        transpose(&t, data, n2, n1);
    }
}

/// Apply `fft` to consecutive chunks of length `n`, one batch per worker.
fn batched(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let rows = data.len() / n;
    let per = rows.div_ceil(rayon::current_num_threads()).max(1);
    data.par_chunks_mut(per * n).for_each(|chunk| {
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

/// `dst[c * rows + r] = src[r * cols + c]` for a `rows x cols` source, in tiles.
fn transpose(src: &[Complex64], dst: &mut [Complex64], cols: usize, rows: usize) {
    const TILE: usize = 32;
    dst.par_chunks_mut(rows * TILE).enumerate().for_each(|(cb, out)| {
        let c0 = cb * TILE;
        let width = out.len() / rows;
        for r0 in (0..rows).step_by(TILE) {
            for c in 0..width {
                let o = &mut out[c * rows..(c + 1) * rows];
                for r in r0..(r0 + TILE).min(rows) {
                    o[r] = src[r * cols + c0 + c];
                }
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_layout() {
        let k = wavenumbers(8, PI);
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, 0.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn fft_round_trip_and_derivative() {
        let g = Grid2D::new(32, 16, 3.0, 2.0).unwrap();
        let mut f: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let [x, y] = g.point(i);
                Complex64::new((PI * x / 3.0).sin() * (PI * y).cos(), 0.0)
            })
            .collect();
        let orig = f.clone();
        g.fft_forward(&mut f);
        let mut d = f.clone();
        for (i, v) in d.iter_mut().enumerate() {
            *v *= Complex64::new(0.0, g.wavevector(i)[0]);
        }
        g.fft_inverse(&mut f);
        g.fft_inverse(&mut d);
        for i in 0..g.len() {
            assert!((f[i] - orig[i]).norm() < 1e-13);
            let [x, y] = g.point(i);
            let exact = PI / 3.0 * (PI * x / 3.0).cos() * (PI * y).cos();
            assert!((d[i].re - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn nearest_point_wraps() {
        let g = Grid2D::square(16, 4.0).unwrap();
        assert_eq!(g.point(g.nearest([0.0, 0.0])), [0.0, 0.0]);
        assert_eq!(g.nearest([4.0, 0.0]), g.nearest([-4.0, 0.0]));
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Grid2D::square(100, 1.0).is_err());
    }
}
