//! Restarted GMRES for complex linear systems given as a matrix-free operator.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{EdgeError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresConfig {
    /// Relative residual target `||b - A x|| / ||b||`.
    pub tol: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            tol: 1e-12,
            restart: 30,
            max_iterations: 300,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresResult {
    pub iterations: usize,
    pub residual: f64,
}

const BLOCK: usize = 4096;

/// Conjugated inner product with a fixed reduction order, so results do not
/// depend on the thread count.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let partial: Vec<Complex64> = a
        .par_chunks(BLOCK)
        .zip(b.par_chunks(BLOCK))
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u.conj() * v).sum())
        .collect();
    partial.into_iter().sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(BLOCK)
        .map(|x| x.iter().map(|u| u.norm_sqr()).sum())
        .collect();
    partial.into_iter().sum::<f64>().sqrt()
}

fn axpy(y: &mut [Complex64], s: Complex64, x: &[Complex64]) {
    y.par_chunks_mut(BLOCK)
        .zip(x.par_chunks(BLOCK))
        .for_each(|(yc, xc)| yc.iter_mut().zip(xc).for_each(|(u, v)| *u += s * v));
}

/// Solve `A x = b` starting from the content of `x`.
pub fn gmres<F>(apply: F, b: &[Complex64], x: &mut [Complex64], cfg: &GmresConfig) -> Result<GmresResult>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = Complex64::default());
        return Ok(GmresResult {
            iterations: 0,
            residual: 0.0,
        });
    }
    let m = cfg.restart.max(1);
    let mut total = 0;
    let mut ax = vec![Complex64::default(); n];
    let mut rel;
    loop {
        apply(x, &mut ax);
        let mut r: Vec<Complex64> = b.par_iter().zip(&ax).map(|(u, v)| u - v).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= cfg.tol {
            return Ok(GmresResult {
                iterations: total,
                residual: rel,
            });
        }
        if total >= cfg.max_iterations {
            return Err(EdgeError::KrylovDivergence {
                iterations: total,
                residual: rel,
            });
        }
        r.par_iter_mut().for_each(|v| *v /= beta);
        let mut basis: Vec<Vec<Complex64>> = vec![r];
        let mut h = vec![vec![Complex64::default(); m]; m + 1];
        let mut cs = vec![Complex64::default(); m];
        let mut sn = vec![Complex64::default(); m];
        let mut g = vec![Complex64::default(); m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            let mut w = vec![Complex64::default(); n];
            apply(&basis[k], &mut w);
            total += 1;
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(v, &w);
                h[i][k] = hik;
                axpy(&mut w, -hik, v);
            }
            let hn = norm(&w);
            h[k + 1][k] = Complex64::new(hn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * h[i][k] + sn[i].conj() * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let (a, bb) = (h[k][k], h[k + 1][k]);
            let d = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if d == 0.0 {
                (Complex64::new(1.0, 0.0), Complex64::default())
            } else {
                (a / d, bb / d)
            };
            cs[k] = c;
            sn[k] = s;
            h[k][k] = Complex64::new(d, 0.0);
            h[k + 1][k] = Complex64::default();
            g[k + 1] = -s * g[k];
            g[k] = c.conj() * g[k];
            k_used = k + 1;
            rel = g[k + 1].norm() / bnorm;
            if rel <= cfg.tol || hn == 0.0 || total >= cfg.max_iterations {
                break;
            }
            w.par_iter_mut().for_each(|v| *v /= hn);
            basis.push(w);
        }
        // back substitution
        let mut y = vec![Complex64::default(); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            axpy(x, *yi, &basis[i]);
        }
        if rel <= cfg.tol {
            return Ok(GmresResult {
                iterations: total,
                residual: rel,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_nonnormal_system() {
        let n = 50;
        let apply = |v: &[Complex64], out: &mut [Complex64]| {
            for i in 0..n {
                let mut s = v[i] * Complex64::new(2.0, 0.3 * i as f64 / n as f64);
                if i + 1 < n {
                    s += v[i + 1] * 0.5;
                }
                if i >= 3 {
                    s += v[i - 3] * Complex64::new(0.0, -0.4);
                }
                out[i] = s;
            }
        };
        let xs: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut b = vec![Complex64::default(); n];
        apply(&xs, &mut b);
        let mut x = vec![Complex64::default(); n];
        let cfg = GmresConfig {
            restart: 10,
            ..Default::default()
        };
        let res = gmres(apply, &b, &mut x, &cfg).unwrap();
        assert!(res.residual <= 1e-12);
        for i in 0..n {
            assert!((x[i] - xs[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let b: Vec<Complex64> = (0..100).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let mut x = vec![Complex64::default(); 100];
        let res = gmres(|v, o| o.copy_from_slice(v), &b, &mut x, &GmresConfig::default()).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(x
            .iter()
            .zip(&b)
            .all(|(u, v)| (u - v).norm() <= 1e-13 * v.norm().max(1.0)));
    }

    #[test]
    fn reports_divergence() {
        // a rotation needs n iterations; cap below that
        let n = 20;
        let apply = |v: &[Complex64], o: &mut [Complex64]| {
            for i in 0..n {
                o[i] = v[(i + 1) % n];
            }
        };
        let mut b = vec![Complex64::default(); n];
        b[0] = Complex64::new(1.0, 0.0);
        let mut x = vec![Complex64::default(); n];
        let cfg = GmresConfig {
            tol: 1e-12,
            restart: 5,
            max_iterations: 10,
        };
        assert!(matches!(
            gmres(apply, &b, &mut x, &cfg),
            Err(EdgeError::KrylovDivergence { .. })
        ));
    }
}
