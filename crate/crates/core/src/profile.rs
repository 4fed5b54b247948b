//! Longitudinal profiles `f(s)` for edge-state wavepackets.

use crate::error::{EdgeError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `exp(-s^2 / (2 w^2))`.
    Gaussian { width: f64 },
    /// Normalized Hermite function `phi_n(s / w)` times `pi^(1/4)`, so `n = 0`
    /// coincides with the Gaussian.
    Hermite { n: usize, width: f64 },
    /// `exp(1 - 1 / (1 - (s/w)^2))` on `|s| < w`, zero outside.
    Bump { width: f64 },
}

impl Profile {
    pub fn gaussian() -> Self {
        Profile::Gaussian { width: 1.0 }
    }

    pub fn from_spec(kind: &str, width: f64, n: usize) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(EdgeError::Config("profile width must be positive".into()));
        }
        match kind {
            "gaussian" => Ok(Profile::Gaussian { width }),
            "hermite" => Ok(Profile::Hermite { n, width }),
            "bump" => Ok(Profile::Bump { width }),
            other => Err(EdgeError::Config(format!("unknown profile '{other}'"))),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Profile::Gaussian { width } => (-0.5 * (s / width).powi(2)).exp(),
            Profile::Hermite { n, width } => {
                crate::hermite::hermite_functions(s / width, n + 1)[n] * std::f64::consts::PI.powf(0.25)
            }
            Profile::Bump { width } => {
                let u = s / width;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - u * u)).exp()
                }
            }
        }
    }

    /// Same profile with all lengths multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            Profile::Gaussian { width } => Profile::Gaussian { width: width * factor },
            Profile::Hermite { n, width } => Profile::Hermite {
                n,
                width: width * factor,
            },
            Profile::Bump { width } => Profile::Bump { width: width * factor },
        }
    }

    /// Distance beyond which the profile is below double-precision relevance.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Profile::Gaussian { width } => 9.0 * width,
            Profile::Hermite { n, width } => (9.0 + (2.0 * n as f64 + 1.0).sqrt()) * width,
            Profile::Bump { width } => width,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_and_hermite_zero_agree() {
        let g = Profile::Gaussian { width: 0.7 };
        let h = Profile::Hermite { n: 0, width: 0.7 };
        for s in [-1.0, 0.0, 0.3, 2.0] {
            assert!((g.eval(s) - h.eval(s)).abs() < 1e-15);
        }
    }

    #[test]
    fn bump_is_compact() {
        let b = Profile::Bump { width: 2.0 };
        assert_eq!(b.eval(0.0), 1.0);
        assert_eq!(b.eval(2.0), 0.0);
        assert!(b.eval(1.9) > 0.0);
    }

    #[test]
    fn scaling_stretches() {
        let g = Profile::gaussian().scaled(2.0);
        assert!((g.eval(2.0) - (-0.5f64).exp()).abs() < 1e-15);
    }
}
