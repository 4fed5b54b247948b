//! Two-component amplitudes in the canonical frame, stored as
//! (`z1` grid point) x (Hermite index in `z2`) coefficients.
//!
//! Components are kept in the tilde basis `c = M u` with `M = [[1, -1], [1, 1]]`,
//! where the transport operator reads `L = [[0, a*], [a, 2 D_1]]` and the
//! ladder maps are `a phi_n = sqrt(2n) phi_(n-1)`, `a* phi_n = sqrt(2n+2) phi_(n+1)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{EdgeError, Result};

/// `phi_0 .. phi_(count-1)` at `z`, by the three-term recurrence.
pub fn hermite_functions(z: f64, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    if count == 0 {
        return out;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * z * z).exp();
    if count > 1 {
        out[1] = 2f64.sqrt() * z * out[0];
    }
    for n in 1..count.saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * z * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
    out
}

/// Periodic `z1` grid on `[-L, L)` with cached transforms and wavenumbers.
pub struct Z1Basis {
    n1: usize,
    half_width: f64,
    xi: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Z1Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Z1Basis")
            .field("n1", &self.n1)
            .field("half_width", &self.half_width)
            .finish()
    }
}

impl Z1Basis {
    pub fn new(n1: usize, half_width: f64) -> Result<Arc<Self>> {
        if n1 < 4 || !n1.is_power_of_two() {
            return Err(EdgeError::InvalidParameter(format!(
                "z1 grid size {n1} must be a power of two >= 4"
            )));
        }
        if !(half_width > 0.0) {
            return Err(EdgeError::InvalidParameter("z1 half-width must be positive".into()));
        }
        let mut planner = FftPlanner::new();
        let xi = crate::grid::wavenumbers(n1, half_width);
        Ok(Arc::new(Z1Basis {
            n1,
            half_width,
            xi,
            fwd: planner.plan_fft_forward(n1),
            inv: planner.plan_fft_inverse(n1),
        }))
    }

    pub fn len(&self) -> usize {
        self.n1
    }

    pub fn is_empty(&self) -> bool {
        self.n1 == 0
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n1 as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Wavenumbers in transform order; the Nyquist entry is zero.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn forward(&self, v: &mut [Complex64]) {
        self.fwd.process(v);
    }

    /// Inverse transform including the `1/N` factor.
    pub fn inverse(&self, v: &mut [Complex64]) {
        self.inv.process(v);
        let s = 1.0 / self.n1 as f64;
        for x in v.iter_mut() {
            *x *= s;
        }
    }

    /// Trigonometric interpolation weights `w_j` with `u(z) = sum_j w_j u_j`
    /// expressed on transformed data: returns `e^(i xi_k (z + L)) / N`.
    pub fn interpolation_kernel(&self, z: f64) -> Vec<Complex64> {
        let s = z + self.half_width;
        let n = self.n1 as f64;
        self.xi.iter().map(|&k| Complex64::from_polar(1.0 / n, k * s)).collect()
    }
}

/// Two-component canonical-frame amplitude.
#[derive(Clone, Debug)]
pub struct HermiteAmplitude {
    basis: Arc<Z1Basis>,
    nh: usize,
    /// `c[comp][j * nh + n]`.
    pub c: [Vec<Complex64>; 2],
}

impl PartialEq for HermiteAmplitude {
    fn eq(&self, other: &Self) -> bool {
        self.nh == other.nh && self.basis.n1 == other.basis.n1 && self.c == other.c
    }
}

/// Orthogonal decomposition against the transport kernel.
#[derive(Clone, Debug)]
pub struct KernelSplit {
    /// Kernel profile on the `z1` grid.
    pub profile: Vec<Complex64>,
    pub remainder: HermiteAmplitude,
}

/// Normalization linking a kernel profile `f` and its amplitude band:
/// the kernel element with profile `f` has tilde component one equal to
/// `KERNEL_WEIGHT f(z1) phi_0(z2)`.
pub fn kernel_weight() -> f64 {
    2.0 * PI.powf(0.25)
}

impl HermiteAmplitude {
    pub fn zeros(basis: Arc<Z1Basis>, nh: usize) -> Self {
        let len = basis.n1 * nh;
        HermiteAmplitude {
            basis,
            nh,
            c: [vec![Complex64::default(); len], vec![Complex64::default(); len]],
        }
    }

    pub fn basis(&self) -> &Arc<Z1Basis> {
        &self.basis
    }

    pub fn n1(&self) -> usize {
        self.basis.n1
    }

    pub fn nh(&self) -> usize {
        self.nh
    }

    #[inline]
    pub fn at(&self, comp: usize, j: usize, n: usize) -> Complex64 {
        self.c[comp][j * self.nh + n]
    }

    #[inline]
    pub fn set(&mut self, comp: usize, j: usize, n: usize, v: Complex64) {
        self.c[comp][j * self.nh + n] = v;
    }

    /// Kernel element `K f`.
    pub fn kernel_element(basis: Arc<Z1Basis>, nh: usize, profile: &[Complex64]) -> Self {
        let mut a = Self::zeros(basis, nh);
        let w = kernel_weight();
        for (j, &f) in profile.iter().enumerate() {
            a.set(0, j, 0, f * w);
        }
        a
    }

    /// `||u||^2` of the untilded field, `(1/2) sum |c|^2 dz1`.
    pub fn norm_sq(&self) -> f64 {
        let s: f64 = self.c.iter().flatten().map(|v| v.norm_sqr()).sum();
        0.5 * s * self.basis.spacing()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `<self, other>` in the untilded `L^2` product.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let mut s = Complex64::default();
        for k in 0..2 {
            for (a, b) in self.c[k].iter().zip(&other.c[k]) {
                s += a.conj() * b;
            }
        }
        s * 0.5 * self.basis.spacing()
    }

    /// Fraction of the squared norm in bands `n >= nh - 2`.
    pub fn top_band_fraction(&self) -> f64 {
        let total: f64 = self.c.iter().flatten().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let mut top = 0.0;
        for comp in &self.c {
            for j in 0..self.basis.n1 {
                for n in self.nh.saturating_sub(2)..self.nh {
                    top += comp[j * self.nh + n].norm_sqr();
                }
            }
        }
        top / total
    }

    pub fn check_truncation(&self, limit: f64) -> Result<()> {
        let f = self.top_band_fraction();
        if f < limit {
            Ok(())
        } else {
            Err(EdgeError::Truncation { fraction: f })
        }
    }

    /// Highest band carrying a nonzero coefficient, plus one.
    pub fn active_bands(&self) -> usize {
        let mut top = 0;
        for comp in &self.c {
            for j in 0..self.basis.n1 {
                for n in (top..self.nh).rev() {
                    if comp[j * self.nh + n] != Complex64::default() {
                        top = n + 1;
                        break;
                    }
                }
            }
        }
        top
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.c.iter_mut().flatten() {
            *v *= s;
        }
        out
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: Complex64, other: &Self) -> Self {
        let mut out = self.clone();
        for k in 0..2 {
            for (a, b) in out.c[k].iter_mut().zip(&other.c[k]) {
                *a += s * b;
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Swap the two components (`sigma_1`).
    pub fn swap_components(&self) -> Self {
        let mut out = self.clone();
        out.c.swap(0, 1);
        out
    }

    // ---- single-component building blocks -------------------------------

    fn map_bands(&self, comp: &[Complex64], f: impl Fn(&[Complex64], &mut [Complex64])) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); comp.len()];
        for j in 0..self.basis.n1 {
            let r = j * self.nh..(j + 1) * self.nh;
            f(&comp[r.clone()], &mut out[r]);
        }
        out
    }

    /// `a`: `out[n] = sqrt(2n+2) v[n+1]`.
    pub(crate) fn annihilate(&self, comp: &[Complex64]) -> Vec<Complex64> {
        let nh = self.nh;
        self.map_bands(comp, |v, o| {
            for n in 0..nh - 1 {
                o[n] = v[n + 1] * (2.0 * n as f64 + 2.0).sqrt();
            }
        })
    }

    /// `a*`: `out[n] = sqrt(2n) v[n-1]`, top band dropped.
    pub(crate) fn create(&self, comp: &[Complex64]) -> Vec<Complex64> {
        let nh = self.nh;
        self.map_bands(comp, |v, o| {
            for n in 1..nh {
                o[n] = v[n - 1] * (2.0 * n as f64).sqrt();
            }
        })
    }

    /// Multiplication by `z2 = (a + a*)/2`.
    pub(crate) fn mul_z2(&self, comp: &[Complex64]) -> Vec<Complex64> {
        let nh = self.nh;
        self.map_bands(comp, |v, o| {
            for n in 0..nh {
                let mut s = Complex64::default();
                if n + 1 < nh {
                    s += v[n + 1] * (2.0 * n as f64 + 2.0).sqrt();
                }
                if n >= 1 {
                    s += v[n - 1] * (2.0 * n as f64).sqrt();
                }
                o[n] = 0.5 * s;
            }
        })
    }

    /// `d/dz2 = (a - a*)/2`.
    pub(crate) fn d_z2(&self, comp: &[Complex64]) -> Vec<Complex64> {
        let nh = self.nh;
        self.map_bands(comp, |v, o| {
            for n in 0..nh {
                let mut s = Complex64::default();
                if n + 1 < nh {
                    s += v[n + 1] * (2.0 * n as f64 + 2.0).sqrt();
                }
                if n >= 1 {
                    s -= v[n - 1] * (2.0 * n as f64).sqrt();
                }
                o[n] = 0.5 * s;
            }
        })
    }

    /// Multiplication by `z1^p`.
    pub(crate) fn mul_z1_pow(&self, comp: &[Complex64], p: i32) -> Vec<Complex64> {
        let mut out = comp.to_vec();
        for j in 0..self.basis.n1 {
            let w = self.basis.point(j).powi(p);
            for v in &mut out[j * self.nh..(j + 1) * self.nh] {
                *v *= w;
            }
        }
        out
    }

    /// Apply `m(xi)` along `z1` in Fourier space, band by band.
    pub(crate) fn fourier_multiply(&self, comp: &[Complex64], m: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let (n1, nh) = (self.basis.n1, self.nh);
        let mut out = vec![Complex64::default(); comp.len()];
        let mut col = vec![Complex64::default(); n1];
        for n in 0..nh {
            let mut any = false;
            for j in 0..n1 {
                col[j] = comp[j * nh + n];
                any |= col[j] != Complex64::default();
            }
            if !any {
                continue;
            }
            self.basis.forward(&mut col);
            for (v, &k) in col.iter_mut().zip(&self.basis.xi) {
                *v *= m(k);
            }
            self.basis.inverse(&mut col);
            for j in 0..n1 {
                out[j * nh + n] = col[j];
            }
        }
        out
    }

    /// `d/dz1`.
    pub(crate) fn d_z1(&self, comp: &[Complex64]) -> Vec<Complex64> {
        self.fourier_multiply(comp, |k| Complex64::new(0.0, k))
    }

    pub(crate) fn with_components(&self, c0: Vec<Complex64>, c1: Vec<Complex64>) -> Self {
        HermiteAmplitude {
            basis: self.basis.clone(),
            nh: self.nh,
            c: [c0, c1],
        }
    }

    // ---- transport operator ----------------------------------------------

    /// `sqrt(r) [[0, a*], [a, 2 D_1]]` acting per `(xi, n)`; `r = 1` is the
    /// canonical operator.
    pub fn apply_transport(&self, r: f64) -> Self {
        let sr = r.sqrt();
        let top = self.create(&self.c[1]);
        let lower = self.annihilate(&self.c[0]);
        let d1 = self.fourier_multiply(&self.c[1], |k| Complex64::new(2.0 * k, 0.0));
        let c0: Vec<_> = top.iter().map(|v| v * sr).collect();
        let c1: Vec<_> = lower.iter().zip(&d1).map(|(a, b)| a * sr + b).collect();
        self.with_components(c0, c1)
    }

    /// Inverse of [`apply_transport`] on the kernel complement. The kernel
    /// component (component one, band zero) of the input is discarded; the
    /// output has no kernel component and its top component-two band is zero.
    pub fn invert_transport(&self, r: f64) -> Self {
        let (n1, nh) = (self.basis.n1, self.nh);
        let sr = r.sqrt();
        let mut h0 = vec![Complex64::default(); n1];
        let mut h1 = vec![Complex64::default(); n1];
        let mut out0 = vec![Complex64::default(); n1 * nh];
        let mut out1 = vec![Complex64::default(); n1 * nh];
        for n in 0..nh - 1 {
            // pair (u1 at n+1, u2 at n) <- (v1 at n+1, v2 at n)
            let mut any = false;
            for j in 0..n1 {
                h0[j] = self.c[0][j * nh + n + 1];
                h1[j] = self.c[1][j * nh + n];
                any |= h0[j] != Complex64::default() || h1[j] != Complex64::default();
            }
            if !any {
                continue;
            }
            self.basis.forward(&mut h0);
            self.basis.forward(&mut h1);
            let b = sr * (2.0 * n as f64 + 2.0).sqrt();
            let inv_b2 = 1.0 / (b * b);
            for k in 0..n1 {
                let xi2 = 2.0 * self.basis.xi[k];
                let (v1, v2) = (h0[k], h1[k]);
                // [[0, b], [b, 2xi]]^-1 = -(1/b^2) [[2xi, -b], [-b, 0]]
                h0[k] = -(v1 * xi2 - v2 * b) * inv_b2;
                h1[k] = v1 * b * inv_b2;
            }
            self.basis.inverse(&mut h0);
            self.basis.inverse(&mut h1);
            for j in 0..n1 {
                out0[j * nh + n + 1] = h0[j];
                out1[j * nh + n] = h1[j];
            }
        }
        self.with_components(out0, out1)
    }

    /// Canonical operator `L`.
    pub fn apply_l(&self) -> Self {
        self.apply_transport(1.0)
    }

    pub fn invert_l(&self) -> Self {
        self.invert_transport(1.0)
    }

    pub fn kernel_project(&self) -> KernelSplit {
        let w = kernel_weight();
        let profile: Vec<_> = (0..self.basis.n1).map(|j| self.at(0, j, 0) / w).collect();
        let mut remainder = self.clone();
        for j in 0..self.basis.n1 {
            remainder.set(0, j, 0, Complex64::default());
        }
        KernelSplit { profile, remainder }
    }

    // ---- physical-space conversion ---------------------------------------

    /// Untilded field `u(z1_j, x2_k)` on the tensor grid `z1 x x2`, returned as
    /// `[u1, u2]` with index `j * x2.len() + k`.
    pub fn synthesize(&self, x2: &[f64]) -> Result<[Vec<Complex64>; 2]> {
        check_x2_grid(x2, self.nh)?;
        let (n1, nh, m) = (self.basis.n1, self.nh, x2.len());
        let table: Vec<Vec<f64>> = x2.iter().map(|&z| hermite_functions(z, nh)).collect();
        let mut out = [vec![Complex64::default(); n1 * m], vec![Complex64::default(); n1 * m]];
        for j in 0..n1 {
            for (k, phis) in table.iter().enumerate() {
                let mut t = [Complex64::default(); 2];
                for (comp, tv) in t.iter_mut().enumerate() {
                    let row = &self.c[comp][j * nh..(j + 1) * nh];
                    *tv = row.iter().zip(phis).map(|(c, p)| c * p).sum();
                }
                out[0][j * m + k] = 0.5 * (t[0] + t[1]);
                out[1][j * m + k] = 0.5 * (t[1] - t[0]);
            }
        }
        Ok(out)
    }

    /// Inverse of [`synthesize`] by trapezoid quadrature on a uniform `x2` grid.
    pub fn analyze(basis: Arc<Z1Basis>, nh: usize, x2: &[f64], field: &[Vec<Complex64>; 2]) -> Result<Self> {
        check_x2_grid(x2, nh)?;
        let (n1, m) = (basis.n1, x2.len());
        let h = x2[1] - x2[0];
        let table: Vec<Vec<f64>> = x2.iter().map(|&z| hermite_functions(z, nh)).collect();
        let mut a = Self::zeros(basis, nh);
        for j in 0..n1 {
            for (k, phis) in table.iter().enumerate() {
                let (u1, u2) = (field[0][j * m + k], field[1][j * m + k]);
                let t = [u1 - u2, u1 + u2];
                for n in 0..nh {
                    for comp in 0..2 {
                        a.c[comp][j * nh + n] += t[comp] * phis[n] * h;
                    }
                }
            }
        }
        Ok(a)
    }
}

/// Uniform `x2` grid resolving `phi_(nh-1)` with four points per local oscillation.
fn check_x2_grid(x2: &[f64], nh: usize) -> Result<()> {
    if x2.len() < 2 {
        return Err(EdgeError::Resolution("x2 grid needs at least two points".into()));
    }
    let h = x2[1] - x2[0];
    let wavelength = 2.0 * PI / (2.0 * nh as f64 + 1.0).sqrt();
    if !(h > 0.0) || h > wavelength / 4.0 {
        return Err(EdgeError::Resolution(format!(
            "x2 spacing {h:.3e} exceeds a quarter wavelength {:.3e} of band {}",
            wavelength / 4.0,
            nh - 1
        )));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn basis() -> Arc<Z1Basis> {
        Z1Basis::new(128, 10.0).unwrap()
    }

    /// Random amplitude with Gaussian decay in `z1` and in `n`, zero in the
    /// two top bands and without kernel component.
    pub(crate) fn random_amplitude(rng: &mut ChaCha8Rng, basis: Arc<Z1Basis>, nh: usize) -> HermiteAmplitude {
        let mut a = HermiteAmplitude::zeros(basis.clone(), nh);
        let shift: f64 = rng.gen_range(-1.0..1.0);
        let width: f64 = rng.gen_range(0.8..1.5);
        let kmax = 12.min(nh - 2);
        for comp in 0..2 {
            for n in 0..kmax {
                let cre: f64 = rng.gen_range(-1.0..1.0);
                let cim: f64 = rng.gen_range(-1.0..1.0);
                let freq: f64 = rng.gen_range(-2.0..2.0);
                let decay = (-(n as f64) / 3.0).exp();
                for j in 0..basis.len() {
                    let z = basis.point(j);
                    let env = (-((z - shift) / width).powi(2) / 2.0).exp() * decay;
                    let ph = Complex64::from_polar(1.0, freq * z);
                    a.set(comp, j, n, Complex64::new(cre, cim) * ph * env);
                }
            }
        }
        for j in 0..basis.len() {
            a.set(0, j, 0, Complex64::default());
        }
        a
    }

    fn grid(l: f64, h: f64) -> Vec<f64> {
        let m = (2.0 * l / h).round() as usize;
        (0..m).map(|k| -l + k as f64 * h).collect()
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let h = 0.02;
        let xs = grid(16.0, h);
        let tab: Vec<_> = xs.iter().map(|&z| hermite_functions(z, 40)).collect();
        for n in [0, 3, 17, 39] {
            for m in [0, 3, 18, 39] {
                let s: f64 = tab.iter().map(|t| t[n] * t[m]).sum::<f64>() * h;
                let expect = if n == m { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-10, "{n} {m} {s}");
            }
        }
    }

    #[test]
    fn ladder_operators_match_derivative() {
        // (z - d/dz) phi_n = sqrt(2n+2) phi_(n+1)
        let z = 0.731;
        let d = 1e-5;
        let p = hermite_functions(z, 8);
        let pp = hermite_functions(z + d, 8);
        let pm = hermite_functions(z - d, 8);
        for n in 0..7 {
            let der = (pp[n] - pm[n]) / (2.0 * d);
            assert!((z * p[n] - der - (2.0 * n as f64 + 2.0).sqrt() * p[n + 1]).abs() < 1e-8);
        }
    }

    #[test]
    fn synthesize_single_band() {
        let b = Z1Basis::new(8, 4.0).unwrap();
        let mut a = HermiteAmplitude::zeros(b, 4);
        for j in 0..8 {
            a.set(0, j, 0, Complex64::new(1.0, 0.0));
        }
        let x2 = grid(3.0, 0.1);
        let u = a.synthesize(&x2).unwrap();
        for (k, &z) in x2.iter().enumerate() {
            let g = PI.powf(-0.25) * (-0.5 * z * z).exp();
            assert!((u[0][k].re - 0.5 * g).abs() < 1e-15);
            assert!((u[1][k].re + 0.5 * g).abs() < 1e-15);
        }
    }

    #[test]
    fn synthesize_rejects_coarse_grid() {
        let a = HermiteAmplitude::zeros(basis(), 64);
        assert!(matches!(a.synthesize(&grid(12.0, 0.5)), Err(EdgeError::Resolution(_))));
    }

    #[test]
    fn analyze_inverts_synthesize_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = Z1Basis::new(32, 8.0).unwrap();
        let mut a = random_amplitude(&mut rng, b.clone(), 24);
        a.set(0, 3, 0, Complex64::new(0.3, 0.1));
        let h = 0.05;
        let x2 = grid(16.0, h);
        let u = a.synthesize(&x2).unwrap();
        let back = HermiteAmplitude::analyze(b.clone(), 24, &x2, &u).unwrap();
        assert!(back.sub(&a).max_abs() < 1e-12 * a.max_abs().max(1.0));
        let l2: f64 = u.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>() * h * b.spacing();
        assert!((l2 - a.norm_sq()).abs() < 1e-10 * a.norm_sq());
    }

    #[test]
    fn kernel_is_annihilated() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = basis();
        for _ in 0..5 {
            let c: f64 = rng.gen_range(-2.0..2.0);
            let prof: Vec<_> = (0..b.len())
                .map(|j| Complex64::new((-(b.point(j) - c).powi(2)).exp(), 0.0))
                .collect();
            let k = HermiteAmplitude::kernel_element(b.clone(), 16, &prof);
            assert!(k.apply_l().max_abs() < 1e-13);
        }
    }

    #[test]
    fn pure_mode_matches_block_matrix() {
        // component 1 at band n+1 with e^(i xi0 z1) maps to sqrt(2n+2) in
        // component 2 at band n and nothing else
        let b = Z1Basis::new(32, PI).unwrap();
        let xi0 = 3.0;
        let n = 2;
        let mut a = HermiteAmplitude::zeros(b.clone(), 8);
        for j in 0..32 {
            a.set(0, j, n + 1, Complex64::from_polar(1.0, xi0 * b.point(j)));
        }
        let la = a.apply_l();
        for j in 0..32 {
            let e = Complex64::from_polar(1.0, xi0 * b.point(j));
            assert!((la.at(1, j, n) - e * 6f64.sqrt()).norm() < 1e-12);
            assert!(la.at(0, j, n + 2).norm() < 1e-12);
        }
        // component 2 at band n maps to sqrt(2n+2) at component 1 band n+1 plus 2 xi0 on itself
        let mut a = HermiteAmplitude::zeros(b.clone(), 8);
        for j in 0..32 {
            a.set(1, j, n, Complex64::from_polar(1.0, xi0 * b.point(j)));
        }
        let la = a.apply_l();
        for j in 0..32 {
            let e = Complex64::from_polar(1.0, xi0 * b.point(j));
            assert!((la.at(0, j, n + 1) - e * 6f64.sqrt()).norm() < 1e-12);
            assert!((la.at(1, j, n) - e * 2.0 * xi0).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_at_band_zero() {
        // second component, band 0, constant in z1 (xi = 0): the block inverse
        // gives first component band 1 equal to +1/sqrt(2) times the input
        let b = Z1Basis::new(16, 5.0).unwrap();
        let mut a = HermiteAmplitude::zeros(b, 6);
        for j in 0..16 {
            a.set(1, j, 0, Complex64::new(1.0, 0.0));
        }
        let inv = a.invert_l();
        for j in 0..16 {
            assert!((inv.at(0, j, 1).re - 1.0 / 2f64.sqrt()).abs() < 1e-14);
            assert!(inv.at(1, j, 0).norm() < 1e-14);
        }
        assert!(inv.apply_l().sub(&a).max_abs() < 1e-14);
    }

    #[test]
    fn invert_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for r in [1.0, 2.3] {
            let bvec = random_amplitude(&mut rng, basis(), 64);
            let a = bvec.apply_transport(r);
            let back = a.invert_transport(r);
            assert!(back.sub(&bvec).norm() <= 1e-10 * bvec.norm());
            let again = back.apply_transport(r);
            assert!(again.sub(&a).norm() <= 1e-10 * a.norm());
        }
    }

    #[test]
    fn kernel_input_inverts_to_zero() {
        let b = basis();
        let prof: Vec<_> = (0..b.len())
            .map(|j| Complex64::new((-b.point(j).powi(2)).exp(), 0.0))
            .collect();
        let k = HermiteAmplitude::kernel_element(b, 10, &prof);
        assert_eq!(k.invert_l().max_abs(), 0.0);
    }

    #[test]
    fn kernel_projection() {
        let b = basis();
        let prof: Vec<_> = (0..b.len())
            .map(|j| Complex64::new((-b.point(j).powi(2) / 2.0).exp(), 0.0))
            .collect();
        let k = HermiteAmplitude::kernel_element(b.clone(), 10, &prof);
        let split = k.kernel_project();
        assert!(split.remainder.max_abs() < 1e-15);
        for (a, b) in split.profile.iter().zip(&prof) {
            assert!((a - b).norm() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let orth = random_amplitude(&mut rng, b.clone(), 10);
        assert!(orth.kernel_project().profile.iter().all(|v| v.norm() == 0.0));
        let mut mixed = orth.clone();
        for j in 0..b.len() {
            mixed.set(
                0,
                j,
                0,
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
        }
        let rem = mixed.kernel_project().remainder;
        assert!(rem.inner(&k).norm() < 1e-12);
    }

    #[test]
    fn adjoint_against_dense_matrix() {
        // dense L on a tiny instance equals its conjugate transpose
        let b = Z1Basis::new(8, 3.0).unwrap();
        let nh = 6;
        let dim = 2 * 8 * nh;
        let unit = |i: usize| {
            let mut a = HermiteAmplitude::zeros(b.clone(), nh);
            a.c[i / (8 * nh)][i % (8 * nh)] = Complex64::new(1.0, 0.0);
            a
        };
        let cols: Vec<_> = (0..dim).map(|i| unit(i).apply_l()).collect();
        let entry = |row: usize, col: usize| cols[col].c[row / (8 * nh)][row % (8 * nh)];
        for i in 0..dim {
            for j in 0..dim {
                assert!((entry(i, j) - entry(j, i).conj()).norm() < 1e-12, "{i} {j}");
            }
        }
    }
}
