//! Transport hierarchy along a trajectory: leading amplitude, first-order
//! corrector `a1 = b1 + K f1`, second-order `b2`, and lab-frame sampling of
//! `W[a](x) = eps^(-1/2) a((x - y_t) / sqrt(eps))`.
//!
//! A lab amplitude is represented as
//! `a(X) = r^(1/4) U_theta M^(-1) c(z)`, `z = (w1, sqrt(r) w2)`, `w = R_theta X`,
//! `U_theta = diag(e^(-i theta/2), e^(i theta/2))`. In these variables
//! `T0 = sqrt(r) L`, the moving-frame time derivative picks up the drift terms
//! of [`FrameContext::frame_term`], and the mass Taylor terms act as
//! `Q(z) sigma_1` and `C(z) sigma_1`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{EdgeError, Result};
use crate::geometry::{integrate_trajectory, rotate, Trajectory, TrajectorySample};
use crate::grid::Grid2D;
use crate::hermite::{hermite_functions, kernel_weight, HermiteAmplitude, Z1Basis};
use crate::poly::Poly3;
use crate::profile::Profile;
use crate::wall::{DomainWall, Point, WallDerivatives};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Frame coefficients of the hierarchy operators at one time.
#[derive(Clone, Copy, Debug)]
pub struct FrameContext {
    pub t: f64,
    pub y: Point,
    pub theta: f64,
    pub theta_dot: f64,
    pub r: f64,
    pub r_dot: f64,
    pub big_theta: f64,
    pub derivatives: WallDerivatives,
}

impl FrameContext {
    pub fn new(s: &TrajectorySample, derivatives: WallDerivatives) -> Result<Self> {
        if !(s.r > 0.0) {
            return Err(EdgeError::InvalidParameter("frame needs r > 0".into()));
        }
        Ok(FrameContext {
            t: s.t,
            y: s.y,
            theta: s.theta,
            theta_dot: s.theta_dot,
            r: s.r,
            r_dot: s.r_dot,
            big_theta: s.big_theta,
            derivatives,
        })
    }

    /// `X = R_theta^T D^(-1) z`.
    fn substitution(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        let q = 1.0 / self.r.sqrt();
        [[c, -s * q], [s, c * q]]
    }

    pub fn quadratic(&self) -> Poly3 {
        Poly3::quadratic_form(&self.derivatives).substitute(self.substitution())
    }

    pub fn cubic(&self) -> Poly3 {
        Poly3::cubic_form(&self.derivatives).substitute(self.substitution())
    }

    /// Moving-frame part of `D_t` (everything except `-i d/dt` of the coefficients).
    pub fn frame_term(&self, a: &HermiteAmplitude) -> HermiteAmplitude {
        let sr = self.r.sqrt();
        let c_scalar = self.r_dot / (4.0 * self.r);
        let c_z2d1 = self.theta_dot / sr;
        let c_z2d2 = self.r_dot / (2.0 * self.r);
        let c_z1d2 = -self.theta_dot * sr;
        let half = 0.5 * self.theta_dot;
        let comps: Vec<Vec<Complex64>> = (0..2)
            .map(|k| {
                let u = &a.c[k];
                let mut acc: Vec<Complex64> = u.iter().map(|v| v * c_scalar).collect();
                if c_z2d1 != 0.0 {
                    add_scaled(&mut acc, &a.mul_z2(&a.d_z1(u)), c_z2d1);
                }
                if c_z2d2 != 0.0 || c_z1d2 != 0.0 {
                    let d2 = a.d_z2(u);
                    if c_z2d2 != 0.0 {
                        add_scaled(&mut acc, &a.mul_z2(&d2), c_z2d2);
                    }
                    if c_z1d2 != 0.0 {
                        add_scaled(&mut acc, &a.mul_z1_pow(&d2, 1), c_z1d2);
                    }
                }
                acc.iter_mut().for_each(|v| *v *= -I);
                // gauge term: -(theta_dot/2) sigma_1
                let other = &a.c[1 - k];
                acc.iter_mut().zip(other).for_each(|(v, o)| *v -= half * o);
                acc
            })
            .collect();
        let mut it = comps.into_iter();
        a.with_components(it.next().unwrap(), it.next().unwrap())
    }

    /// `T1 a = frame_term(a) - i da/dt + Q sigma_1 a`.
    pub fn apply_t1(&self, a: &HermiteAmplitude, dadt: Option<&HermiteAmplitude>) -> HermiteAmplitude {
        let mut out = self.frame_term(a);
        if let Some(d) = dadt {
            out = out.axpy(-I, d);
        }
        let q = apply_poly(&self.quadratic(), &a.swap_components());
        out.axpy(Complex64::new(1.0, 0.0), &q)
    }

    /// `T2 a = C sigma_1 a`.
    pub fn apply_t2(&self, a: &HermiteAmplitude) -> HermiteAmplitude {
        apply_poly(&self.cubic(), &a.swap_components())
    }
}

fn add_scaled(acc: &mut [Complex64], v: &[Complex64], s: f64) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b * s);
}

/// Multiplication operator `p(z1, z2)` on both components.
pub fn apply_poly(p: &Poly3, a: &HermiteAmplitude) -> HermiteAmplitude {
    let mut out = [
        vec![Complex64::default(); a.c[0].len()],
        vec![Complex64::default(); a.c[0].len()],
    ];
    if p.is_zero() {
        return a.with_components(out[0].clone(), out[1].clone());
    }
    let basis = a.basis().clone();
    let nh = a.nh();
    for (k, o) in out.iter_mut().enumerate() {
        let mut zq = a.c[k].clone();
        for q in 0..4 {
            if q > 0 {
                zq = a.mul_z2(&zq);
            }
            let active = (0..4 - q).any(|pp| p.c[pp][q] != 0.0);
            if !active {
                continue;
            }
            for j in 0..basis.len() {
                let z1 = basis.point(j);
                let w: f64 = (0..4 - q).map(|pp| p.c[pp][q] * z1.powi(pp as i32)).sum();
                if w == 0.0 {
                    continue;
                }
                for n in 0..nh {
                    o[j * nh + n] += zq[j * nh + n] * w;
                }
            }
        }
    }
    let [c0, c1] = out;
    a.with_components(c0, c1)
}

/// Canonical leading amplitude `K f0`: tilde component one `2 pi^(1/4) f0(z1) phi_0(z2)`.
pub fn build_leading_amplitude(f0: &Profile, basis: Arc<Z1Basis>, nh: usize) -> Result<HermiteAmplitude> {
    if f0.support_radius() > basis.half_width() {
        return Err(EdgeError::InvalidParameter(format!(
            "profile support {:.2} exceeds the z1 window {:.2}",
            f0.support_radius(),
            basis.half_width()
        )));
    }
    let prof: Vec<_> = (0..basis.len())
        .map(|j| Complex64::new(f0.eval(basis.point(j)), 0.0))
        .collect();
    Ok(HermiteAmplitude::kernel_element(basis, nh, &prof))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HierarchySettings {
    pub n1: usize,
    pub z1_half_width: f64,
    pub nh: usize,
    /// Trajectory step, also the quadrature step of the `f1` recursion.
    pub dt: f64,
    /// Step of the finite-difference time derivative of `b1`.
    pub fd_step: f64,
    pub solvability_tol: f64,
    pub truncation_limit: f64,
}

impl Default for HierarchySettings {
    fn default() -> Self {
        HierarchySettings {
            n1: 256,
            z1_half_width: 10.0,
            nh: 64,
            dt: 0.01,
            fd_step: 1e-3,
            solvability_tol: 1e-6,
            truncation_limit: 1e-8,
        }
    }
}

/// Correctors of one trajectory, with the `f1` integrand tabulated on the
/// trajectory samples.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    traj: Trajectory,
    t_max: f64,
    basis: Arc<Z1Basis>,
    settings: HierarchySettings,
    c0: HermiteAmplitude,
    /// `d f1/dt` on the sample times up to `t_max`, when correctors were requested.
    f1_rate: Vec<Vec<Complex64>>,
    /// Cumulative trapezoid of `f1_rate`.
    f1_table: Vec<Vec<Complex64>>,
}

/// Amplitude pieces at a single time.
#[derive(Clone, Debug)]
pub struct AmplitudeTerms {
    pub ctx: FrameContext,
    pub a0: HermiteAmplitude,
    pub b1: Option<HermiteAmplitude>,
    pub f1: Option<Vec<Complex64>>,
    pub b2: Option<HermiteAmplitude>,
}

impl AmplitudeTerms {
    /// `a0 + sqrt(eps) (b1 + K f1) + eps b2` truncated at `order`.
    pub fn combine(&self, order: usize, eps: f64) -> HermiteAmplitude {
        let mut a = self.a0.clone();
        if order >= 1 {
            let se = Complex64::new(eps.sqrt(), 0.0);
            if let Some(b1) = &self.b1 {
                a = a.axpy(se, b1);
            }
            if let Some(f1) = &self.f1 {
                let k = HermiteAmplitude::kernel_element(a.basis().clone(), a.nh(), f1);
                a = a.axpy(se, &k);
            }
        }
        if order >= 2 {
            if let Some(b2) = &self.b2 {
                a = a.axpy(Complex64::new(eps, 0.0), b2);
            }
        }
        a
    }
}

impl Hierarchy {
    /// Integrate the trajectory from `y0` and prepare correctors up to
    /// `max_order` for times in `[0, t_max]`.
    pub fn new(
        wall: &DomainWall,
        y0: Point,
        f0: &Profile,
        t_max: f64,
        max_order: usize,
        settings: HierarchySettings,
    ) -> Result<Self> {
        if max_order > 2 {
            return Err(EdgeError::InvalidParameter(format!("corrector order {max_order} > 2")));
        }
        if !(t_max >= 0.0) {
            return Err(EdgeError::InvalidParameter("t_max must be >= 0".into()));
        }
        let margin = 3.0 * settings.fd_step + settings.dt;
        let traj = integrate_trajectory(wall, y0, t_max + margin, settings.dt)?;
        let basis = Z1Basis::new(settings.n1, settings.z1_half_width)?;
        let c0 = build_leading_amplitude(f0, basis.clone(), settings.nh)?;
        let mut h = Hierarchy {
            traj,
            t_max,
            basis,
            settings,
            c0,
            f1_rate: Vec::new(),
            f1_table: Vec::new(),
        };
        if max_order >= 1 {
            let times: Vec<f64> = h
                .traj
                .samples()
                .iter()
                .map(|s| s.t)
                .take_while(|&t| t <= t_max + h.traj.dt())
                .collect();
            let rates: Result<Vec<_>> = times.par_iter().map(|&t| h.f1_rate_at(t)).collect();
            let rates = rates?;
            let mut table = Vec::with_capacity(rates.len());
            let zero = vec![Complex64::default(); h.basis.len()];
            table.push(zero);
            for k in 1..rates.len() {
                let dt = times[k] - times[k - 1];
                let next: Vec<_> = table[k - 1]
                    .iter()
                    .zip(rates[k - 1].iter().zip(&rates[k]))
                    .map(|(acc, (a, b))| acc + 0.5 * dt * (a + b))
                    .collect();
                table.push(next);
            }
            h.f1_rate = rates;
            h.f1_table = table;
        }
        Ok(h)
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    pub fn basis(&self) -> &Arc<Z1Basis> {
        &self.basis
    }

    pub fn leading(&self) -> &HermiteAmplitude {
        &self.c0
    }

    pub fn context(&self, t: f64) -> Result<FrameContext> {
        let (s, d) = self.traj.derivatives_at(t)?;
        FrameContext::new(&s, d)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < 0.0 || t > self.t_max * (1.0 + 1e-12) + 1e-12 {
            return Err(EdgeError::OutsideTrajectory { t, t_end: self.t_max });
        }
        Ok(())
    }

    /// Kernel component of `T1 a0`, which must vanish for a time-independent profile.
    pub fn solvability_residual(&self, ctx: &FrameContext) -> f64 {
        let src = ctx.apply_t1(&self.c0, None);
        let k = src.kernel_project().profile;
        let scale = self.c0.max_abs() / kernel_weight();
        k.iter().map(|v| v.norm()).fold(0.0, f64::max) / scale
    }

    fn b1_with(&self, ctx: &FrameContext) -> Result<HermiteAmplitude> {
        let src = ctx.apply_t1(&self.c0, None);
        let split = src.kernel_project();
        let scale = self.c0.max_abs() / kernel_weight();
        let resid = split.profile.iter().map(|v| v.norm()).fold(0.0, f64::max) / scale;
        if resid > self.settings.solvability_tol {
            return Err(EdgeError::Solvability {
                residual: resid,
                time: ctx.t,
            });
        }
        let b1 = split.remainder.invert_transport(ctx.r).scale(Complex64::new(-1.0, 0.0));
        b1.check_truncation(self.settings.truncation_limit)?;
        Ok(b1)
    }

    /// `b1 = -T0^(-1) T1 a0`.
    pub fn b1(&self, t: f64) -> Result<HermiteAmplitude> {
        let ctx = self.context(t)?;
        self.b1_with(&ctx)
    }

    fn db1_dt(&self, t: f64) -> Result<HermiteAmplitude> {
        let d = self.settings.fd_step;
        if t >= d {
            let p = self.b1(t + d)?;
            let m = self.b1(t - d)?;
            Ok(p.sub(&m).scale(Complex64::new(0.5 / d, 0.0)))
        } else {
            let b0 = self.b1(t)?;
            let b1 = self.b1(t + d)?;
            let b2 = self.b1(t + 2.0 * d)?;
            let s = b1
                .scale(Complex64::new(4.0, 0.0))
                .sub(&b0.scale(Complex64::new(3.0, 0.0)))
                .sub(&b2);
            Ok(s.scale(Complex64::new(0.5 / d, 0.0)))
        }
    }

    /// `beta1 = -T1 b1 - T2 a0`.
    fn beta1(&self, ctx: &FrameContext, b1: &HermiteAmplitude) -> Result<HermiteAmplitude> {
        let db1 = self.db1_dt(ctx.t)?;
        let t1b1 = ctx.apply_t1(b1, Some(&db1));
        let t2a0 = ctx.apply_t2(&self.c0);
        Ok(t1b1
            .axpy(Complex64::new(1.0, 0.0), &t2a0)
            .scale(Complex64::new(-1.0, 0.0)))
    }

    /// `df1/dt = i beta1_kernel / (2 pi^(1/4))`, from solvability of the `b2` equation.
    fn f1_rate_at(&self, t: f64) -> Result<Vec<Complex64>> {
        let ctx = self.context(t)?;
        let b1 = self.b1_with(&ctx)?;
        let beta = self.beta1(&ctx, &b1)?;
        Ok(beta.kernel_project().profile.iter().map(|v| I * v).collect())
    }

    /// `f1(t)` on the `z1` grid, with `f1(0) = 0`.
    pub fn f1(&self, t: f64) -> Result<Vec<Complex64>> {
        self.check_time(t)?;
        if self.f1_table.is_empty() {
            return Err(EdgeError::InvalidParameter(
                "hierarchy was built without correctors".into(),
            ));
        }
        let dt = self.traj.dt();
        let k = ((t / dt).floor() as usize).min(self.f1_table.len() - 1);
        let tk = self.traj.samples()[k].t;
        let h = t - tk;
        if h.abs() <= 1e-14 * t.max(1.0) {
            return Ok(self.f1_table[k].clone());
        }
        let rate = self.f1_rate_at(t)?;
        Ok(self.f1_table[k]
            .iter()
            .zip(self.f1_rate[k].iter().zip(&rate))
            .map(|(acc, (a, b))| acc + 0.5 * h * (a + b))
            .collect())
    }

    /// All amplitude pieces needed for the order-`order` ansatz at `t`.
    pub fn terms(&self, t: f64, order: usize) -> Result<AmplitudeTerms> {
        self.check_time(t)?;
        let ctx = self.context(t)?;
        let mut out = AmplitudeTerms {
            ctx,
            a0: self.c0.clone(),
            b1: None,
            f1: None,
            b2: None,
        };
        if order == 0 {
            return Ok(out);
        }
        let b1 = self.b1_with(&ctx)?;
        let f1 = self.f1(t)?;
        if order >= 2 {
            let beta = self.beta1(&ctx, &b1)?;
            let rate: Vec<Complex64> = beta.kernel_project().profile.iter().map(|v| I * v).collect();
            let kf1 = HermiteAmplitude::kernel_element(self.basis.clone(), self.settings.nh, &f1);
            let kdf1 = HermiteAmplitude::kernel_element(self.basis.clone(), self.settings.nh, &rate);
            let t1kf1 = ctx.apply_t1(&kf1, Some(&kdf1));
            let src = beta.sub(&t1kf1);
            let b2 = src.invert_transport(ctx.r);
            b2.check_truncation(self.settings.truncation_limit)?;
            out.b2 = Some(b2);
        }
        out.b1 = Some(b1);
        out.f1 = Some(f1);
        Ok(out)
    }

    /// Canonical amplitude of the order-`order` ansatz.
    pub fn amplitude(&self, t: f64, order: usize, eps: f64) -> Result<(FrameContext, HermiteAmplitude)> {
        let terms = self.terms(t, order)?;
        Ok((terms.ctx, terms.combine(order, eps)))
    }

    /// Order-`order` ansatz `W[a](x)` sampled on a lab grid.
    pub fn sample(&self, t: f64, order: usize, eps: f64, grid: &Grid2D) -> Result<[Vec<Complex64>; 2]> {
        let (ctx, a) = self.amplitude(t, order, eps)?;
        sample_lab(&a, &ctx, eps, grid)
    }
}

/// Point evaluator of a canonical amplitude.
pub struct AmplitudeEvaluator {
    basis: Arc<Z1Basis>,
    bands: usize,
    /// Fourier coefficients along `z1`, `ft[comp][k * bands + n]`.
    ft: [Vec<Complex64>; 2],
    theta: f64,
    r: f64,
}

/// Beyond this `|z2|` the evaluated amplitude is set to zero.
const Z2_CUTOFF: f64 = 14.0;

impl AmplitudeEvaluator {
    pub fn new(a: &HermiteAmplitude, theta: f64, r: f64) -> Self {
        let basis = a.basis().clone();
        let n1 = basis.len();
        let bands = a.active_bands().max(1);
        let mut ft = [
            vec![Complex64::default(); n1 * bands],
            vec![Complex64::default(); n1 * bands],
        ];
        let mut col = vec![Complex64::default(); n1];
        for comp in 0..2 {
            for n in 0..bands {
                for (j, v) in col.iter_mut().enumerate() {
                    *v = a.at(comp, j, n);
                }
                basis.forward(&mut col);
                for (k, v) in col.iter().enumerate() {
                    ft[comp][k * bands + n] = *v;
                }
            }
        }
        AmplitudeEvaluator {
            basis,
            bands,
            ft,
            theta,
            r,
        }
    }

    /// Tilde components at canonical coordinates `z`.
    pub fn canonical(&self, z: [f64; 2]) -> [Complex64; 2] {
        if z[0].abs() >= self.basis.half_width() || z[1].abs() > Z2_CUTOFF {
            return [Complex64::default(); 2];
        }
        let ker = self.basis.interpolation_kernel(z[0]);
        let phis = hermite_functions(z[1], self.bands);
        let mut out = [Complex64::default(); 2];
        for (comp, o) in out.iter_mut().enumerate() {
            let mut band = vec![Complex64::default(); self.bands];
            for (k, w) in ker.iter().enumerate() {
                let row = &self.ft[comp][k * self.bands..(k + 1) * self.bands];
                for (b, v) in band.iter_mut().zip(row) {
                    *b += w * v;
                }
            }
            *o = band.iter().zip(&phis).map(|(b, p)| b * p).sum();
        }
        out
    }

    /// Physical amplitude `a` at frame coordinates `w = R_theta X`.
    pub fn at_frame(&self, w: [f64; 2]) -> [Complex64; 2] {
        let t = self.canonical([w[0], self.r.sqrt() * w[1]]);
        let pre = self.r.powf(0.25);
        let u1 = 0.5 * (t[0] + t[1]) * pre;
        let u2 = 0.5 * (t[1] - t[0]) * pre;
        [
            u1 * Complex64::from_polar(1.0, -0.5 * self.theta),
            u2 * Complex64::from_polar(1.0, 0.5 * self.theta),
        ]
    }

    /// Physical amplitude at lab-scaled coordinates `X`.
    pub fn at(&self, x: [f64; 2]) -> [Complex64; 2] {
        self.at_frame(rotate(self.theta, x))
    }
}

/// `W[a](x) = eps^(-1/2) a((x - y) / sqrt(eps))` on every point of `grid`.
pub fn sample_lab(a: &HermiteAmplitude, ctx: &FrameContext, eps: f64, grid: &Grid2D) -> Result<[Vec<Complex64>; 2]> {
    let se = eps.sqrt();
    grid.check_resolution(se, 4.0)?;
    let ev = AmplitudeEvaluator::new(a, ctx.theta, ctx.r);
    let reach = se * (a.basis().half_width().max(Z2_CUTOFF / ctx.r.sqrt()) + 1.0);
    let vals: Vec<[Complex64; 2]> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = grid.point(i);
            let d = [p[0] - ctx.y[0], p[1] - ctx.y[1]];
            if d[0].abs() > reach || d[1].abs() > reach {
                return [Complex64::default(); 2];
            }
            let v = ev.at([d[0] / se, d[1] / se]);
            [v[0] / se, v[1] / se]
        })
        .collect();
    Ok([vals.iter().map(|v| v[0]).collect(), vals.iter().map(|v| v[1]).collect()])
}

/// Closed-form first corrector on the unit circle for `f0 = e^(-s^2/2)`:
/// `b1(x) = ((1 - x1^2)/2) x2 e^(-|x|^2/2) theta_dot [e^(-i theta/2), -e^(i theta/2)]`.
pub fn circle_b1(x: [f64; 2], theta: f64, theta_dot: f64) -> [Complex64; 2] {
    let s = 0.5 * (1.0 - x[0] * x[0]) * x[1] * (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp() * theta_dot;
    [
        Complex64::from_polar(s, -0.5 * theta),
        -Complex64::from_polar(s, 0.5 * theta),
    ]
}

/// Closed-form `f1(x1) = ((2 x1 - x1^3)/2) e^(-x1^2/2) Theta_t` on the unit circle.
pub fn circle_f1(x1: f64, big_theta: f64) -> f64 {
    0.5 * (2.0 * x1 - x1.powi(3)) * (-x1 * x1 / 2.0).exp() * big_theta
}
