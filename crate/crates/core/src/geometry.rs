//! Interface trajectory `y' = grad(kappa)^perp / |grad(kappa)|` and its frame data.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{EdgeError, Result};
use crate::wall::{DomainWall, Point, WallDerivatives};

/// Smallest `|grad kappa|` tolerated along a trajectory.
pub const GRADIENT_FLOOR: f64 = 1e-6;
/// Re-projection threshold for `|kappa(y)|`.
pub const DRIFT_TOLERANCE: f64 = 1e-10;
const PROJECTION_TARGET: f64 = 1e-12;
const PROJECTION_ITERATIONS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub y: Point,
    /// Unwrapped frame angle: `grad kappa = r (-sin theta, cos theta)`.
    pub theta: f64,
    pub r: f64,
    pub theta_dot: f64,
    pub r_dot: f64,
    /// Accumulated `int_0^t theta_dot^2`.
    pub big_theta: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    wall: DomainWall,
    dt: f64,
    samples: Vec<TrajectorySample>,
}

/// Rotation `R_theta = [[cos, sin], [-sin, cos]]`; `(R_theta x)_1` runs along the
/// interface against the direction of motion, `(R_theta x)_2` along the normal.
pub fn rotate(theta: f64, x: [f64; 2]) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * x[0] + s * x[1], -s * x[0] + c * x[1]]
}

/// `R_theta^T x`.
pub fn rotate_back(theta: f64, x: [f64; 2]) -> [f64; 2] {
    rotate(-theta, x)
}

fn velocity(d: &WallDerivatives) -> [f64; 2] {
    let r = d.gradient_norm();
    [-d.gradient[1] / r, d.gradient[0] / r]
}

fn checked(wall: &DomainWall, y: Point) -> Result<WallDerivatives> {
    let d = wall.evaluate(y)?;
    let r = d.gradient_norm();
    if r < GRADIENT_FLOOR {
        return Err(EdgeError::Transversality {
            x: y[0],
            y: y[1],
            gradient_norm: r,
            floor: GRADIENT_FLOOR,
        });
    }
    Ok(d)
}

/// Damped Newton along `grad kappa` until `|kappa| <= 1e-12`.
pub fn project_to_interface(wall: &DomainWall, x0: Point) -> Result<Point> {
    let mut y = x0;
    let mut k = wall.value(y)?;
    for _ in 0..PROJECTION_ITERATIONS {
        if k.abs() <= PROJECTION_TARGET {
            return Ok(y);
        }
        let d = wall.evaluate(y)?;
        let g2 = d.gradient[0].powi(2) + d.gradient[1].powi(2);
        if g2 < GRADIENT_FLOOR * GRADIENT_FLOOR {
            break;
        }
        let step = [k * d.gradient[0] / g2, k * d.gradient[1] / g2];
        let mut lambda = 1.0;
        loop {
            let trial = [y[0] - lambda * step[0], y[1] - lambda * step[1]];
            let kt = wall.value(trial)?;
            if kt.abs() < k.abs() || lambda < 1e-4 {
                y = trial;
                k = kt;
                break;
            }
            lambda *= 0.5;
        }
    }
    if k.abs() <= PROJECTION_TARGET {
        return Ok(y);
    }
    Err(EdgeError::ProjectionFailed {
        x: x0[0],
        y: x0[1],
        residual: k.abs(),
    })
}

fn rk4_step(wall: &DomainWall, y: Point, h: f64) -> Result<Point> {
    let f = |p: Point| -> Result<[f64; 2]> { Ok(velocity(&checked(wall, p)?)) };
    let k1 = f(y)?;
    let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]])?;
    let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]])?;
    let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]])?;
    Ok([
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ])
}

fn advance(wall: &DomainWall, y: Point, h: f64) -> Result<Point> {
    let next = rk4_step(wall, y, h)?;
    if wall.value(next)?.abs() > DRIFT_TOLERANCE {
        project_to_interface(wall, next)
    } else {
        Ok(next)
    }
}

/// Frame quantities at `y`, with `theta` unwrapped against `reference`.
fn frame(wall: &DomainWall, t: f64, y: Point, reference: Option<f64>) -> Result<TrajectorySample> {
    let d = checked(wall, y)?;
    let [g1, g2] = d.gradient;
    let r = d.gradient_norm();
    let mut theta = (-g1).atan2(g2);
    if let Some(prev) = reference {
        let mut inc = theta - prev;
        inc -= 2.0 * PI * (inc / (2.0 * PI)).round();
        theta = prev + inc;
    }
    let v = velocity(&d);
    let h = d.hessian;
    let hv = [h[0][0] * v[0] + h[0][1] * v[1], h[1][0] * v[0] + h[1][1] * v[1]];
    Ok(TrajectorySample {
        t,
        y,
        theta,
        r,
        theta_dot: (hv[0] * v[0] + hv[1] * v[1]) / r,
        r_dot: (hv[0] * g1 + hv[1] * g2) / r,
        big_theta: 0.0,
    })
}

/// RK4 trajectory from `y0` (projected onto the interface) to `t_end`.
///
/// The step is adjusted to `t_end / round(t_end / dt)` so the last sample
/// lands on `t_end`.
pub fn integrate_trajectory(wall: &DomainWall, y0: Point, t_end: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(EdgeError::InvalidParameter("need dt > 0 and t_end >= 0".into()));
    }
    let steps = ((t_end / dt).round() as usize).max(1);
    let h = t_end / steps as f64;
    let mut y = project_to_interface(wall, y0)?;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut current = frame(wall, 0.0, y, None)?;
    samples.push(current);
    if t_end == 0.0 {
        return Ok(Trajectory {
            wall: wall.clone(),
            dt: 0.0,
            samples,
        });
    }
    for k in 1..=steps {
        y = advance(wall, y, h)?;
        let mut next = frame(wall, k as f64 * h, y, Some(current.theta))?;
        next.big_theta = current.big_theta + 0.5 * h * (current.theta_dot.powi(2) + next.theta_dot.powi(2));
        samples.push(next);
        current = next;
    }
    Ok(Trajectory {
        wall: wall.clone(),
        dt: h,
        samples,
    })
}

impl Trajectory {
    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn wall(&self) -> &DomainWall {
        &self.wall
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }

    /// Frame data at an arbitrary time in `[0, t_end]`: one RK4 substep from
    /// the preceding sample and a trapezoid increment of the curvature integral.
    pub fn frame_at(&self, t: f64) -> Result<TrajectorySample> {
        let t_end = self.t_end();
        let slack = 1e-12 * t_end.max(1.0);
        if !(t >= -slack && t <= t_end + slack) {
            return Err(EdgeError::OutsideTrajectory { t, t_end });
        }
        let t = t.clamp(0.0, t_end);
        if self.dt == 0.0 {
            return Ok(self.samples[0]);
        }
        let k = ((t / self.dt).floor() as usize).min(self.samples.len() - 1);
        let base = self.samples[k];
        let h = t - base.t;
        if h.abs() <= 1e-14 * t_end.max(1.0) {
            return Ok(base);
        }
        let y = advance(&self.wall, base.y, h)?;
        let mut s = frame(&self.wall, t, y, Some(base.theta))?;
        s.big_theta = base.big_theta + 0.5 * h * (base.theta_dot.powi(2) + s.theta_dot.powi(2));
        Ok(s)
    }

    /// Wall derivatives at the trajectory point for time `t`.
    pub fn derivatives_at(&self, t: f64) -> Result<(TrajectorySample, WallDerivatives)> {
        let s = self.frame_at(t)?;
        Ok((s, self.wall.evaluate(s.y)?))
    }

    /// CSV with columns `t,y1,y2,theta,r,theta_dot,Theta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,y1,y2,theta,r,theta_dot,Theta\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                s.t, s.y[0], s.y[1], s.theta, s.r, s.theta_dot, s.big_theta
            );
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// `max |<R^T x, hess(kappa) R^T x> - theta_dot x1^2|` over samples and probes.
pub fn hessian_frame_residual(traj: &Trajectory, probes: &[[f64; 2]]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in traj.samples() {
        let d = traj.wall().evaluate(s.y)?;
        for &x in probes {
            let u = rotate_back(s.theta, x);
            let h = d.hessian;
            let q = u[0] * (h[0][0] * u[0] + h[0][1] * u[1]) + u[1] * (h[1][0] * u[0] + h[1][1] * u[1]);
            worst = worst.max((q - s.theta_dot * x[0] * x[0]).abs());
        }
    }
    Ok(worst)
}
