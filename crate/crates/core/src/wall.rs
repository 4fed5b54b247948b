//! Domain-wall mass functions and their derivatives.
//!
//! Every family is written once as a function on [`Jet`]s, so the analytic
//! backend gets exact derivatives up to third order (and higher, which the
//! normalization stage consumes). The finite-difference backend differentiates
//! point values with second-order central stencils.

use crate::error::{EdgeError, Result};
use crate::jet::Jet;

pub type Point = [f64; 2];

/// Derivatives of a wall up to third order at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallDerivatives {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
    /// `[k_111, k_112, k_122, k_222]`.
    pub third: [f64; 4],
}

impl WallDerivatives {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient[0].hypot(self.gradient[1])
    }

    /// `H . grad`.
    pub fn hessian_times_gradient(&self) -> [f64; 2] {
        let [g1, g2] = self.gradient;
        let h = self.hessian;
        [h[0][0] * g1 + h[0][1] * g2, h[1][0] * g1 + h[1][1] * g2]
    }

    /// Fully symmetric third-derivative tensor entry `k_ijk`.
    pub fn third_entry(&self, i: usize, j: usize, k: usize) -> f64 {
        self.third[i + j + k]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeBackend {
    Analytic,
    FiniteDifference { step: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum WallFamily {
    /// `g . x + c`.
    Linear { gradient: [f64; 2], offset: f64 },
    /// `x2 - amplitude * tanh(steepness * x1)`.
    Tanh { amplitude: f64, steepness: f64 },
    /// `|x - center| - radius`.
    Circle { center: [f64; 2], radius: f64 },
    /// `(1 - depth * sin(x1)) * x2`.
    ModulatedStraight { depth: f64 },
    /// `x2 - shift + sqrt(x1^2 + mu^2)`, interface `x2 = shift - sqrt(x1^2 + mu^2)`.
    Corner { mu: f64, shift: f64 },
    /// `x1 * x2`.
    Crossing,
    /// `|x + e1| |x - e1| - 1`.
    TwoRing,
    /// Output of [`normalize_wall`].
    Normalized {
        inner: Box<DomainWall>,
        tube_halfwidth: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainWall {
    pub family: WallFamily,
    pub backend: DerivativeBackend,
}

/// Gradient floor used inside the normalization tube.
const NORMALIZE_FLOOR: f64 = 1e-8;

impl DomainWall {
    pub fn new(family: WallFamily) -> Self {
        DomainWall {
            family,
            backend: DerivativeBackend::Analytic,
        }
    }

    pub fn with_backend(mut self, backend: DerivativeBackend) -> Self {
        self.backend = backend;
        self
    }

    /// Straight wall `r [-sin(theta), cos(theta)] . x`.
    pub fn straight(theta: f64, r: f64) -> Self {
        Self::new(WallFamily::Linear {
            gradient: [-r * theta.sin(), r * theta.cos()],
            offset: 0.0,
        })
    }

    pub fn tanh() -> Self {
        Self::new(WallFamily::Tanh {
            amplitude: 1.0,
            steepness: 1.0,
        })
    }

    pub fn circle(radius: f64) -> Self {
        Self::new(WallFamily::Circle {
            center: [0.0, 0.0],
            radius,
        })
    }

    /// Build a wall from a family tag and a flat parameter list, as written in
    /// experiment configs. Missing trailing parameters take their defaults.
    pub fn from_spec(family: &str, params: &[f64]) -> Result<Self> {
        let p = |i: usize, default: f64| params.get(i).copied().unwrap_or(default);
        let family = match family {
            "linear" => WallFamily::Linear {
                gradient: [p(0, 0.0), p(1, 1.0)],
                offset: p(2, 0.0),
            },
            "tanh" => WallFamily::Tanh {
                amplitude: p(0, 1.0),
                steepness: p(1, 1.0),
            },
            "circle" => WallFamily::Circle {
                radius: p(0, 1.0),
                center: [p(1, 0.0), p(2, 0.0)],
            },
            "modulated_straight" => WallFamily::ModulatedStraight { depth: p(0, 0.9) },
            "corner" => WallFamily::Corner {
                mu: p(0, 0.5),
                shift: p(1, 0.0),
            },
            "crossing" => WallFamily::Crossing,
            "two_ring" => WallFamily::TwoRing,
            other => {
                return Err(EdgeError::Config(format!("unknown wall family '{other}'")));
            }
        };
        if let WallFamily::Circle { radius, .. } = family {
            if radius <= 0.0 {
                return Err(EdgeError::InvalidParameter("circle radius must be positive".into()));
            }
        }
        if let WallFamily::Corner { mu, .. } = family {
            if mu < 0.0 {
                return Err(EdgeError::InvalidParameter("corner mu must be >= 0".into()));
            }
        }
        Ok(Self::new(family))
    }

    /// `true` for walls whose zero set has a degenerate point by construction.
    pub fn is_flagged_degenerate(&self) -> bool {
        match &self.family {
            WallFamily::Corner { mu, .. } => *mu == 0.0,
            WallFamily::Crossing | WallFamily::TwoRing => true,
            WallFamily::Normalized { inner, .. } => inner.is_flagged_degenerate(),
            _ => false,
        }
    }

    /// Taylor jet of the wall at `x` to the given order.
    pub fn jet(&self, x: Point, order: usize) -> Result<Jet> {
        let j = self.raw_jet(x, order)?;
        if j.is_finite() {
            Ok(j)
        } else {
            Err(EdgeError::SingularPoint { x: x[0], y: x[1] })
        }
    }

    fn raw_jet(&self, x: Point, order: usize) -> Result<Jet> {
        let x1 = Jet::var_x(x[0], order);
        let x2 = Jet::var_y(x[1], order);
        let j = match &self.family {
            WallFamily::Linear { gradient, offset } => {
                (x1.scale(gradient[0]) + x2.scale(gradient[1])).add_const(*offset)
            }
            WallFamily::Tanh { amplitude, steepness } => x2 - x1.scale(*steepness).tanh().scale(*amplitude),
            WallFamily::Circle { center, radius } => {
                let dx = x1.add_const(-center[0]);
                let dy = x2.add_const(-center[1]);
                (dx.square() + dy.square()).sqrt().add_const(-radius)
            }
            WallFamily::ModulatedStraight { depth } => x1.sin().scale(-depth).add_const(1.0) * x2,
            WallFamily::Corner { mu, shift } => x2.add_const(-shift) + x1.square().add_const(mu * mu).sqrt(),
            WallFamily::Crossing => x1 * x2,
            WallFamily::TwoRing => {
                let a = (x1.add_const(1.0).square() + x2.square()).sqrt();
                let b = (x1.add_const(-1.0).square() + x2.square()).sqrt();
                (a * b).add_const(-1.0)
            }
            WallFamily::Normalized { inner, tube_halfwidth } => normalized_jet(inner, *tube_halfwidth, x, order)?,
        };
        Ok(j)
    }

    /// Wall value only.
    pub fn value(&self, x: Point) -> Result<f64> {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(EdgeError::InvalidParameter("non-finite evaluation point".into()));
        }
        Ok(self.jet(x, 0)?.value())
    }

    /// All derivatives up to third order at `x`.
    pub fn evaluate(&self, x: Point) -> Result<WallDerivatives> {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(EdgeError::InvalidParameter("non-finite evaluation point".into()));
        }
        let d = match self.backend {
            DerivativeBackend::Analytic => {
                let j = self.jet(x, 3)?;
                WallDerivatives {
                    value: j.value(),
                    gradient: [j.derivative(1, 0), j.derivative(0, 1)],
                    hessian: [
                        [j.derivative(2, 0), j.derivative(1, 1)],
                        [j.derivative(1, 1), j.derivative(0, 2)],
                    ],
                    third: [
                        j.derivative(3, 0),
                        j.derivative(2, 1),
                        j.derivative(1, 2),
                        j.derivative(0, 3),
                    ],
                }
            }
            DerivativeBackend::FiniteDifference { step } => self.finite_difference(x, step)?,
        };
        let finite = d.value.is_finite()
            && d.gradient.iter().all(|v| v.is_finite())
            && d.hessian.iter().flatten().all(|v| v.is_finite())
            && d.third.iter().all(|v| v.is_finite());
        if finite {
            Ok(d)
        } else {
            Err(EdgeError::SingularPoint { x: x[0], y: x[1] })
        }
    }

    fn finite_difference(&self, x: Point, h: f64) -> Result<WallDerivatives> {
        let f = |i: i32, j: i32| self.value([x[0] + i as f64 * h, x[1] + j as f64 * h]);
        let f00 = f(0, 0)?;
        let (fp0, fm0, f0p, f0m) = (f(1, 0)?, f(-1, 0)?, f(0, 1)?, f(0, -1)?);
        let (fpp, fpm, fmp, fmm) = (f(1, 1)?, f(1, -1)?, f(-1, 1)?, f(-1, -1)?);
        let (f20, fm20, f02, f0m2) = (f(2, 0)?, f(-2, 0)?, f(0, 2)?, f(0, -2)?);
        let h2 = h * h;
        let h3 = h2 * h;
        let k12 = (fpp - fpm - fmp + fmm) / (4.0 * h2);
        // mixed third derivatives: second difference in one variable of the
        // central first difference in the other
        let k112 = ((fpp - fpm) - 2.0 * (f0p - f0m) + (fmp - fmm)) / (2.0 * h3);
        let k122 = ((fpp - fmp) - 2.0 * (fp0 - fm0) + (fpm - fmm)) / (2.0 * h3);
        Ok(WallDerivatives {
            value: f00,
            gradient: [(fp0 - fm0) / (2.0 * h), (f0p - f0m) / (2.0 * h)],
            hessian: [[(fp0 - 2.0 * f00 + fm0) / h2, k12], [k12, (f0p - 2.0 * f00 + f0m) / h2]],
            third: [
                (f20 - 2.0 * fp0 + 2.0 * fm0 - fm20) / (2.0 * h3),
                k112,
                k122,
                (f02 - 2.0 * f0p + 2.0 * f0m - f0m2) / (2.0 * h3),
            ],
        })
    }
}

/// C2 quintic step: 1 on `|s| <= 1/2`, 0 on `|s| >= 1`.
fn blend(s: Jet) -> Jet {
    let a = if s.value() < 0.0 { -s } else { s };
    let v = a.value();
    if v <= 0.5 {
        return Jet::constant(1.0, s.order());
    }
    if v >= 1.0 {
        return Jet::constant(0.0, s.order());
    }
    let u = a.add_const(-0.5).scale(2.0);
    let u3 = u * u * u;
    let poly = (u * u).scale(6.0) - u.scale(15.0);
    let step = u3 * poly.add_const(10.0);
    -step.add_const(-1.0)
}

fn normalized_jet(inner: &DomainWall, halfwidth: f64, x: Point, order: usize) -> Result<Jet> {
    let kt = inner.jet(x, order + 3)?;
    let s = kt.value() / halfwidth;
    let g = if s.abs() >= 1.0 {
        Jet::constant(1.0, order + 2)
    } else {
        let grad_norm = (kt.d1().square() + kt.d2().square()).sqrt();
        if grad_norm.value() < NORMALIZE_FLOOR {
            return Err(EdgeError::Transversality {
                x: x[0],
                y: x[1],
                gradient_norm: grad_norm.value(),
                floor: NORMALIZE_FLOOR,
            });
        }
        let chi = blend(kt.truncate(order + 2).scale(1.0 / halfwidth));
        (chi * grad_norm.add_const(-1.0)).add_const(1.0)
    };
    let kh = kt.truncate(order + 2) * g.recip();
    let (kh1, kh2) = (kh.d1(), kh.d2());
    let (h11, h12, h22) = (kh1.d1(), kh1.d2(), kh2.d2());
    let (a, b) = (kh1.truncate(order), kh2.truncate(order));
    let rho_t = a * a * h11 + (a * b * h12).scale(2.0) + b * b * h22;
    let k = kh.truncate(order);
    let rho = rho_t * (rho_t.square() * k.square()).add_const(1.0).recip();
    Ok(k - (rho * k.square()).scale(0.5))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransversalityReport {
    pub min_gradient: f64,
    pub near_samples: usize,
    pub floor: f64,
    pub pass: bool,
}

/// Minimum `|grad kappa|` over the samples lying within `tol` of the interface.
pub fn check_transversality(
    wall: &DomainWall,
    samples: &[Point],
    tol: f64,
    floor: f64,
) -> Result<TransversalityReport> {
    let mut min_gradient = f64::INFINITY;
    let mut near = 0;
    for &p in samples {
        let d = match wall.evaluate(p) {
            Ok(d) => d,
            // a singular point on the interface is a transversality failure
            Err(EdgeError::SingularPoint { .. }) if wall.value(p)?.abs() <= tol => {
                near += 1;
                min_gradient = 0.0;
                continue;
            }
            Err(e) => return Err(e),
        };
        if d.value.abs() <= tol {
            near += 1;
            min_gradient = min_gradient.min(d.gradient_norm());
        }
    }
    if near == 0 {
        return Err(EdgeError::EmptySamples);
    }
    Ok(TransversalityReport {
        min_gradient,
        near_samples: near,
        floor,
        pass: min_gradient >= floor,
    })
}

/// Rebuild `wall` so that on its zero set `|grad kappa| = 1` and
/// `hess kappa . grad kappa = 0`, keeping the zero set.
///
/// Stage one divides by `|grad kappa|` inside the tube `|kappa| < tube_halfwidth`
/// (blended to the identity outside); stage two subtracts `rho kappa^2 / 2`
/// with `rho` the damped normal curvature `<grad, hess grad>`.
pub fn normalize_wall(wall: &DomainWall, tube_halfwidth: f64) -> Result<DomainWall> {
    if !(tube_halfwidth > 0.0 && tube_halfwidth.is_finite()) {
        return Err(EdgeError::InvalidParameter("tube half-width must be positive".into()));
    }
    if matches!(wall.family, WallFamily::Normalized { .. }) {
        return Err(EdgeError::InvalidParameter("wall is already normalized".into()));
    }
    Ok(DomainWall {
        family: WallFamily::Normalized {
            inner: Box::new(DomainWall {
                family: wall.family.clone(),
                backend: DerivativeBackend::Analytic,
            }),
            tube_halfwidth,
        },
        backend: wall.backend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn linear_wall_values() {
        let w = DomainWall::from_spec("linear", &[0.0, 1.0]).unwrap();
        let d = w.evaluate([3.0, 0.5]).unwrap();
        assert_eq!(d.value, 0.5);
        assert_eq!(d.gradient, [0.0, 1.0]);
        assert_eq!(d.hessian, [[0.0; 2]; 2]);
    }

    #[test]
    fn circle_wall_values() {
        let d = DomainWall::circle(1.0).evaluate([1.0, 0.0]).unwrap();
        assert!(close(d.value, 0.0, 1e-15));
        assert!(close(d.gradient[0], 1.0, 1e-15) && close(d.gradient[1], 0.0, 1e-15));
        assert!(close(d.hessian[0][0], 0.0, 1e-15));
        assert!(close(d.hessian[0][1], 0.0, 1e-15));
        assert!(close(d.hessian[1][1], 1.0, 1e-15));
    }

    #[test]
    fn tanh_wall_values() {
        let d = DomainWall::tanh().evaluate([0.0, 0.0]).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(close(d.gradient[0], -1.0, 1e-15) && close(d.gradient[1], 1.0, 1e-15));
    }

    #[test]
    fn corner_without_smoothing_is_singular_at_apex() {
        let w = DomainWall::from_spec("corner", &[0.0]).unwrap();
        assert!(w.is_flagged_degenerate());
        assert!(matches!(w.evaluate([0.0, 0.0]), Err(EdgeError::SingularPoint { .. })));
        assert!(w.evaluate([0.5, -0.5]).is_ok());
    }

    #[test]
    fn unknown_family_is_config_error() {
        assert!(matches!(
            DomainWall::from_spec("spiral", &[]),
            Err(EdgeError::Config(_))
        ));
    }

    #[test]
    fn transversality_examples() {
        let circle = DomainWall::circle(1.0);
        let ring: Vec<Point> = (0..64)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / 64.0;
                [a.cos(), a.sin()]
            })
            .collect();
        let rep = check_transversality(&circle, &ring, 1e-9, 0.5).unwrap();
        assert!(close(rep.min_gradient, 1.0, 1e-12) && rep.pass);

        let crossing = DomainWall::from_spec("crossing", &[]).unwrap();
        let rep = check_transversality(&crossing, &[[0.0, 0.0]], 1e-9, 0.5).unwrap();
        assert_eq!(rep.min_gradient, 0.0);
        assert!(!rep.pass);

        let far = check_transversality(&circle, &[[3.0, 0.0]], 1e-9, 0.5);
        assert!(matches!(far, Err(EdgeError::EmptySamples)));
    }

    #[test]
    fn tanh_transversality_minimum() {
        // oracle: min over the samples of sqrt(1 + sech^4(x1)) computed directly
        let xs: Vec<f64> = (0..401).map(|k| -5.0 + k as f64 * 0.025).collect();
        let oracle = xs
            .iter()
            .map(|&s| (1.0 + (1.0 / s.cosh()).powi(4)).sqrt())
            .fold(f64::INFINITY, f64::min);
        let samples: Vec<Point> = xs.iter().map(|&s| [s, s.tanh()]).collect();
        let rep = check_transversality(&DomainWall::tanh(), &samples, 1e-12, 0.5).unwrap();
        assert!(close(rep.min_gradient, oracle, 1e-13));
        assert!(rep.min_gradient >= 1.0 && rep.pass);
        assert_eq!(rep.near_samples, samples.len());
    }

    #[test]
    fn finite_differences_converge_at_second_order() {
        let walls = [
            DomainWall::tanh(),
            DomainWall::circle(1.3),
            DomainWall::from_spec("modulated_straight", &[0.9]).unwrap(),
            DomainWall::from_spec("corner", &[0.7, 0.2]).unwrap(),
            DomainWall::from_spec("two_ring", &[]).unwrap(),
        ];
        let p = [0.37, -0.61];
        for w in &walls {
            let exact = w.evaluate(p).unwrap();
            let err = |h: f64| {
                let fd = w
                    .clone()
                    .with_backend(DerivativeBackend::FiniteDifference { step: h })
                    .evaluate(p)
                    .unwrap();
                let mut e: f64 = 0.0;
                for i in 0..2 {
                    e = e.max((fd.gradient[i] - exact.gradient[i]).abs());
                    for j in 0..2 {
                        e = e.max((fd.hessian[i][j] - exact.hessian[i][j]).abs());
                    }
                }
                for k in 0..4 {
                    e = e.max((fd.third[k] - exact.third[k]).abs());
                }
                e
            };
            let ratio = err(2e-2) / err(1e-2);
            assert!((3.5..4.5).contains(&ratio), "{:?}: ratio {ratio}", w.family);
        }
    }

    fn tanh_interface(n: usize) -> Vec<Point> {
        (0..n)
            .map(|k| {
                let s = -4.0 + 8.0 * k as f64 / (n - 1) as f64;
                [s, s.tanh()]
            })
            .collect()
    }

    #[test]
    fn normalized_circle_is_unchanged_on_interface() {
        let circle = DomainWall::circle(1.0);
        let norm = normalize_wall(&circle, 0.5).unwrap();
        for k in 0..16 {
            let a = k as f64 * 0.4;
            let p = [a.cos(), a.sin()];
            let d0 = circle.evaluate(p).unwrap();
            let d1 = norm.evaluate(p).unwrap();
            assert!(close(d1.value, 0.0, 1e-14));
            for i in 0..2 {
                assert!(close(d0.gradient[i], d1.gradient[i], 1e-13));
                for j in 0..2 {
                    assert!(close(d0.hessian[i][j], d1.hessian[i][j], 1e-12));
                }
            }
        }
    }

    #[test]
    fn normalized_linear_has_unit_gradient() {
        let w = DomainWall::from_spec("linear", &[0.0, 2.0]).unwrap();
        let n = normalize_wall(&w, 0.5).unwrap();
        for x in [-2.0, 0.0, 1.5] {
            let d = n.evaluate([x, 0.0]).unwrap();
            assert!(close(d.gradient_norm(), 1.0, 1e-14));
        }
    }

    #[test]
    fn normalized_tanh_satisfies_geometric_condition() {
        let n = normalize_wall(&DomainWall::tanh(), 0.4).unwrap();
        for p in tanh_interface(401) {
            let d = n.evaluate(p).unwrap();
            assert!(d.value.abs() <= 1e-8);
            assert!((d.gradient_norm() - 1.0).abs() <= 1e-6);
            let hg = d.hessian_times_gradient();
            assert!(hg[0].hypot(hg[1]) <= 1e-6, "{hg:?} at {p:?}");
        }
    }

    #[test]
    fn normalization_preserves_zero_set_and_sign() {
        let base = DomainWall::tanh();
        let n = normalize_wall(&base, 0.4).unwrap();
        for k in 0..200 {
            let x = -3.0 + 0.03 * k as f64;
            for dy in [-0.3, -0.05, 0.05, 0.3, 2.0] {
                let p = [x, x.tanh() + dy];
                assert_eq!(base.value(p).unwrap().signum(), n.value(p).unwrap().signum());
            }
        }
    }
}
