//! Exact edge states and ballistic waves of straight walls
//! `kappa(x) = r [-sin(theta), cos(theta)] . x`.

use num_complex::Complex64;

use crate::error::{EdgeError, Result};
use crate::geometry::rotate;
use crate::grid::Grid2D;
use crate::profile::Profile;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StraightWall {
    pub theta: f64,
    pub r: f64,
    pub epsilon: f64,
}

impl StraightWall {
    pub fn new(theta: f64, r: f64, epsilon: f64) -> Result<Self> {
        if !(r > 0.0) || !(epsilon > 0.0) {
            return Err(EdgeError::InvalidParameter(
                "straight wall needs r > 0 and epsilon > 0".into(),
            ));
        }
        Ok(StraightWall { theta, r, epsilon })
    }

    /// `[e^(-i theta/2), -e^(i theta/2)]`.
    pub fn spinor(&self) -> [Complex64; 2] {
        [
            Complex64::from_polar(1.0, -0.5 * self.theta),
            -Complex64::from_polar(1.0, 0.5 * self.theta),
        ]
    }

    /// Propagation direction `-(cos theta, sin theta)`.
    pub fn velocity(&self) -> [f64; 2] {
        [-self.theta.cos(), -self.theta.sin()]
    }
}

/// `exp(i xi (R x)_1 / eps - r (R x)_2^2 / (2 eps)) [e^(-i theta/2), -e^(i theta/2)]`,
/// which satisfies `(H + xi) F = 0`.
pub fn edge_state(w: &StraightWall, xi: f64, x: [f64; 2]) -> [Complex64; 2] {
    let rx = rotate(w.theta, x);
    let e = Complex64::new(-w.r * rx[1] * rx[1] / (2.0 * w.epsilon), xi * rx[0] / w.epsilon).exp();
    let s = w.spinor();
    [e * s[0], e * s[1]]
}

/// `eps^(-1/2) f(t + (R x)_1) exp(-r (R x)_2^2 / (2 eps)) [e^(-i theta/2), -e^(i theta/2)]`.
pub fn ballistic_wave(w: &StraightWall, f: &Profile, t: f64, x: [f64; 2]) -> [Complex64; 2] {
    let rx = rotate(w.theta, x);
    let amp = f.eval(t + rx[0]) * (-w.r * rx[1] * rx[1] / (2.0 * w.epsilon)).exp() / w.epsilon.sqrt();
    let s = w.spinor();
    [s[0] * amp, s[1] * amp]
}

/// Ballistic wave sampled on a grid.
pub fn ballistic_on_grid(w: &StraightWall, f: &Profile, t: f64, grid: &Grid2D) -> [Vec<Complex64>; 2] {
    let vals: Vec<_> = (0..grid.len())
        .map(|i| ballistic_wave(w, f, t, grid.point(i)))
        .collect();
    [vals.iter().map(|v| v[0]).collect(), vals.iter().map(|v| v[1]).collect()]
}

/// Frame/gauge change `(U g)(x) = diag(e^(-i theta/2), e^(i theta/2)) g(R_theta x)`.
pub fn conjugate(theta: f64, g: impl Fn([f64; 2]) -> [Complex64; 2], x: [f64; 2]) -> [Complex64; 2] {
    let v = g(rotate(theta, x));
    [
        v[0] * Complex64::from_polar(1.0, -0.5 * theta),
        v[1] * Complex64::from_polar(1.0, 0.5 * theta),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const I: Complex64 = Complex64::new(0.0, 1.0);

    #[test]
    fn edge_state_values() {
        let w = StraightWall::new(0.0, 1.0, 1.0).unwrap();
        let v = edge_state(&w, 0.0, [0.0, 0.0]);
        assert_eq!(v, [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        let v = edge_state(&w, 0.0, [0.0, 1.0]);
        assert!((v[0].re - 0.60653).abs() < 1e-5 && (v[1].re + 0.60653).abs() < 1e-5);
    }

    /// `(H + xi) F` with the derivatives of `F` written out by hand.
    fn stationary_residual(w: &StraightWall, xi: f64, x: [f64; 2]) -> f64 {
        let (s, c) = w.theta.sin_cos();
        let rx = rotate(w.theta, x);
        let f = edge_state(w, xi, x);
        // grad of the exponent
        let g1 = I * xi * c / w.epsilon + w.r * rx[1] * s / w.epsilon;
        let g2 = I * xi * s / w.epsilon - w.r * rx[1] * c / w.epsilon;
        let kappa = w.r * (-s * x[0] + c * x[1]);
        let d = |g: Complex64, v: Complex64| -I * g * v;
        let e = w.epsilon;
        let h0 = kappa * f[0] + e * (d(g1, f[1]) - I * d(g2, f[1]));
        let h1 = e * (d(g1, f[0]) + I * d(g2, f[0])) - kappa * f[1];
        ((h0 + xi * f[0]).norm()).max((h1 + xi * f[1]).norm())
    }

    #[test]
    fn edge_state_is_stationary() {
        let w = StraightWall::new(PI / 2.0, 2.0, 0.1).unwrap();
        for x in [[0.1, 0.2], [-0.3, 0.05], [0.7, -0.1]] {
            let scale = edge_state(&w, 1.0, x)[0].norm().max(1e-300);
            assert!(stationary_residual(&w, 1.0, x) <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn ballistic_examples() {
        let w = StraightWall::new(0.0, 1.0, 1.0).unwrap();
        let f = Profile::gaussian();
        let v = ballistic_wave(&w, &f, 0.0, [0.0, 0.0]);
        assert!((v[0] - 1.0).norm() < 1e-15 && (v[1] + 1.0).norm() < 1e-15);
        let v = ballistic_wave(&w, &f, 2.0, [-2.0, 0.0]);
        assert!((v[0] - 1.0).norm() < 1e-15 && (v[1] + 1.0).norm() < 1e-15);
    }

    #[test]
    fn ballistic_translates_along_velocity() {
        let w = StraightWall::new(0.9, 1.4, 0.2).unwrap();
        let f = Profile::Gaussian { width: 0.4 };
        let v = w.velocity();
        for t in [0.3, 1.7] {
            for x in [[0.1, -0.2], [0.5, 0.4]] {
                let a = ballistic_wave(&w, &f, t, [x[0] + t * v[0], x[1] + t * v[1]]);
                let b = ballistic_wave(&w, &f, 0.0, x);
                assert!((a[0] - b[0]).norm() < 1e-13 && (a[1] - b[1]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn conjugation_rotates_edge_states() {
        let w0 = StraightWall::new(0.0, 1.3, 0.3).unwrap();
        for theta in [0.4, 2.0, -2.7] {
            let wt = StraightWall { theta, ..w0 };
            for x in [[0.2, 0.1], [-0.4, 0.3]] {
                let a = conjugate(theta, |p| edge_state(&w0, 0.7, p), x);
                let b = edge_state(&wt, 0.7, x);
                assert!((a[0] - b[0]).norm() < 1e-12 && (a[1] - b[1]).norm() < 1e-12);
            }
        }
    }
}
