//! Pseudospectral Dirac operator and Crank–Nicolson time stepping.
//!
//! `H = [[kappa, eps(D1 - i D2)], [eps(D1 + i D2), -kappa]]` on a periodic grid.
//! A step solves `(I + i tau H) psi' = (I - i tau H) psi`, `tau = dt / (2 eps)`,
//! in Fourier space with GMRES, right-preconditioned by the exact inverse of
//! the free part `I + i tau H_free(k)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{EdgeError, Result};
use crate::gmres::{self, GmresConfig};
use crate::grid::Grid2D;
use crate::wall::DomainWall;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Two-component field on a grid.
#[derive(Clone, Debug)]
pub struct SpinorField {
    pub grid: Grid2D,
    pub psi: [Vec<Complex64>; 2],
    pub time: f64,
}

impl SpinorField {
    pub fn zeros(grid: &Grid2D) -> Self {
        SpinorField {
            grid: grid.clone(),
            psi: [
                vec![Complex64::default(); grid.len()],
                vec![Complex64::default(); grid.len()],
            ],
            time: 0.0,
        }
    }

    pub fn from_components(grid: &Grid2D, psi: [Vec<Complex64>; 2], time: f64) -> Result<Self> {
        if psi[0].len() != grid.len() || psi[1].len() != grid.len() {
            return Err(EdgeError::InvalidParameter("field size does not match grid".into()));
        }
        Ok(SpinorField {
            grid: grid.clone(),
            psi,
            time,
        })
    }

    pub fn from_fn(grid: &Grid2D, time: f64, f: impl Fn([f64; 2]) -> [Complex64; 2] + Sync) -> Self {
        let vals: Vec<_> = (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect();
        SpinorField {
            grid: grid.clone(),
            psi: [vals.iter().map(|v| v[0]).collect(), vals.iter().map(|v| v[1]).collect()],
            time,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.psi.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        let s: f64 = self.psi.iter().map(|c| gmres::norm(c).powi(2)).sum();
        s * self.grid.cell_area()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn inner(&self, other: &SpinorField) -> Complex64 {
        (gmres::dot(&self.psi[0], &other.psi[0]) + gmres::dot(&self.psi[1], &other.psi[1])) * self.grid.cell_area()
    }

    /// `||self - other||`.
    pub fn distance(&self, other: &SpinorField) -> f64 {
        let mut s = 0.0;
        for k in 0..2 {
            let d: Vec<Complex64> = self.psi[k].iter().zip(&other.psi[k]).map(|(a, b)| a - b).collect();
            s += gmres::norm(&d).powi(2);
        }
        (s * self.grid.cell_area()).sqrt()
    }

    pub fn scale(&mut self, s: Complex64) {
        self.psi.iter_mut().flatten().for_each(|v| *v *= s);
    }

    /// Density `|psi_1|^2 + |psi_2|^2` per grid point.
    pub fn density(&self) -> Vec<f64> {
        self.psi[0]
            .iter()
            .zip(&self.psi[1])
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect()
    }

    /// Center of mass of the density (zero field gives the origin).
    pub fn center_of_mass(&self) -> [f64; 2] {
        let dens = self.density();
        let (mut m, mut x, mut y) = (0.0, 0.0, 0.0);
        for (i, d) in dens.iter().enumerate() {
            let p = self.grid.point(i);
            m += d;
            x += d * p[0];
            y += d * p[1];
        }
        if m == 0.0 {
            [0.0, 0.0]
        } else {
            [x / m, y / m]
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.density().into_iter().fold(0.0, f64::max).sqrt()
    }
}

/// Dirac operator with a sampled mass term.
#[derive(Clone, Debug)]
pub struct DiracOperator {
    pub grid: Grid2D,
    pub kappa: Vec<f64>,
    pub epsilon: f64,
}

impl DiracOperator {
    pub fn new(grid: &Grid2D, wall: &DomainWall, epsilon: f64) -> Result<Self> {
        Self::from_samples(grid, grid.sample_wall(wall)?, epsilon)
    }

    pub fn from_samples(grid: &Grid2D, kappa: Vec<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(EdgeError::InvalidParameter(format!("epsilon {epsilon} not in (0, 1]")));
        }
        if kappa.len() != grid.len() || kappa.iter().any(|v| !v.is_finite()) {
            return Err(EdgeError::InvalidParameter(
                "wall samples must be finite and match the grid".into(),
            ));
        }
        Ok(DiracOperator {
            grid: grid.clone(),
            kappa,
            epsilon,
        })
    }

    /// `H psi`.
    pub fn apply(&self, field: &SpinorField) -> SpinorField {
        let mut a = field.psi[0].clone();
        let mut b = field.psi[1].clone();
        self.grid.fft_forward(&mut a);
        self.grid.fft_forward(&mut b);
        let eps = self.epsilon;
        let g = &self.grid;
        let mut ha: Vec<Complex64> = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let [k1, k2] = g.wavevector(i);
                eps * Complex64::new(k1, -k2) * b[i]
            })
            .collect();
        let mut hb: Vec<Complex64> = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let [k1, k2] = g.wavevector(i);
                eps * Complex64::new(k1, k2) * a[i]
            })
            .collect();
        g.fft_inverse(&mut ha);
        g.fft_inverse(&mut hb);
        ha.par_iter_mut()
            .zip(&field.psi[0])
            .zip(&self.kappa)
            .for_each(|((h, p), k)| *h += k * p);
        hb.par_iter_mut()
            .zip(&field.psi[1])
            .zip(&self.kappa)
            .for_each(|((h, p), k)| *h -= k * p);
        SpinorField {
            grid: g.clone(),
            psi: [ha, hb],
            time: field.time,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub krylov: GmresConfig,
    /// Relative norm drift that aborts a run.
    pub drift_limit: f64,
}

impl EvolutionConfig {
    /// `dt = eps / 20`, tolerance `1e-12`.
    pub fn new(epsilon: f64) -> Self {
        EvolutionConfig {
            epsilon,
            dt: epsilon / 20.0,
            krylov: GmresConfig::default(),
            drift_limit: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(EdgeError::InvalidParameter(format!(
                "epsilon {} not in (0, 1]",
                self.epsilon
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EdgeError::InvalidParameter("dt must be positive".into()));
        }
        if !(self.krylov.tol > 0.0 && self.krylov.tol <= 1e-6) {
            return Err(EdgeError::InvalidParameter(
                "Krylov tolerance must lie in (0, 1e-6]".into(),
            ));
        }
        Ok(())
    }
}

/// Crank–Nicolson stepper holding the Fourier-space preconditioner data.
pub struct CrankNicolson<'a> {
    op: &'a DiracOperator,
    tau: f64,
    krylov: GmresConfig,
    last_iterations: usize,
    /// Per mode: `tau eps (k1 - i k2)` and `1 / (1 + tau^2 eps^2 |k|^2)`.
    symbol: Vec<(Complex64, f64)>,
}

impl<'a> CrankNicolson<'a> {
    pub fn new(op: &'a DiracOperator, dt: f64, krylov: GmresConfig) -> Self {
        let tau = dt / (2.0 * op.epsilon);
        let s = tau * op.epsilon;
        let symbol = (0..op.grid.len())
            .map(|i| {
                let [k1, k2] = op.grid.wavevector(i);
                (s * Complex64::new(k1, -k2), 1.0 / (1.0 + s * s * (k1 * k1 + k2 * k2)))
            })
            .collect();
        CrankNicolson {
            op,
            tau,
            krylov,
            last_iterations: 0,
            symbol,
        }
    }

    pub fn last_iterations(&self) -> usize {
        self.last_iterations
    }

    /// `(I - i tau B(k))` applied per mode to a stacked Fourier vector,
    /// optionally divided by `1 + tau^2 eps^2 |k|^2`.
    fn free_map(&self, v: &[Complex64], divide: bool) -> Vec<Complex64> {
        let n = self.symbol.len();
        let mut out = vec![Complex64::default(); 2 * n];
        let (o1, o2) = out.split_at_mut(n);
        o1.par_iter_mut()
            .zip(o2.par_iter_mut())
            .zip(self.symbol.par_iter())
            .enumerate()
            .for_each(|(i, ((a, b), (km, d)))| {
                let (u, w) = (v[i], v[n + i]);
                let x = u - I * km * w;
                let y = w - I * km.conj() * u;
                let d = if divide { *d } else { 1.0 };
                *a = x * d;
                *b = y * d;
            });
        out
    }

    /// `F(kappa sigma_3 F^-1 v)` on a stacked Fourier vector.
    fn mass_map(&self, v: &[Complex64]) -> Vec<Complex64> {
        let g = &self.op.grid;
        let n = g.len();
        let mut a = v[..n].to_vec();
        let mut b = v[n..].to_vec();
        g.fft_inverse(&mut a);
        g.fft_inverse(&mut b);
        a.par_iter_mut().zip(&self.op.kappa).for_each(|(x, k)| *x *= k);
        b.par_iter_mut().zip(&self.op.kappa).for_each(|(x, k)| *x *= -k);
        g.fft_forward(&mut a);
        g.fft_forward(&mut b);
        a.extend_from_slice(&b);
        a
    }

    /// One step of length `dt`.
    pub fn step(&mut self, field: &SpinorField, dt_time: f64) -> Result<SpinorField> {
        let g = &self.op.grid;
        let n = g.len();
        let tau = self.tau;
        let mut hat = field.psi[0].clone();
        let mut hat2 = field.psi[1].clone();
        g.fft_forward(&mut hat);
        g.fft_forward(&mut hat2);
        hat.extend_from_slice(&hat2);
        // b = (I - i tau H_free) psi^ - i tau F(kappa sigma_3 psi)
        let mut rhs = self.free_map(&hat, false);
        let m = self.mass_map(&hat);
        rhs.par_iter_mut().zip(&m).for_each(|(r, v)| *r -= I * tau * v);
        let apply = |w: &[Complex64], out: &mut [Complex64]| {
            let pw = self.free_map(w, true);
            let m = self.mass_map(&pw);
            out.par_iter_mut()
                .zip(w.par_iter().zip(&m))
                .for_each(|(o, (wi, mi))| *o = wi + I * tau * mi);
        };
        let mut w = rhs.clone();
        let res = gmres::gmres(apply, &rhs, &mut w, &self.krylov)?;
        self.last_iterations = res.iterations;
        let mut next = self.free_map(&w, true);
        let mut b = next.split_off(n);
        g.fft_inverse(&mut next);
        g.fft_inverse(&mut b);
        Ok(SpinorField {
            grid: g.clone(),
            psi: [next, b],
            time: field.time + dt_time,
        })
    }
}

/// One Crank–Nicolson step of `config.dt`.
pub fn step_crank_nicolson(field: &SpinorField, op: &DiracOperator, config: &EvolutionConfig) -> Result<SpinorField> {
    config.validate()?;
    CrankNicolson::new(op, config.dt, config.krylov).step(field, config.dt)
}

/// Per-snapshot record of an evolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotInfo {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    pub center: [f64; 2],
    pub krylov_iterations: usize,
}

/// Returned by snapshot callbacks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Debug)]
pub struct EvolutionSummary {
    pub steps: usize,
    pub dt: f64,
    pub max_drift: f64,
    pub max_krylov_iterations: usize,
    pub snapshots: Vec<SnapshotInfo>,
    pub final_field: SpinorField,
    /// The callback ended the run before `t_end`.
    pub stopped_early: bool,
}

/// Evolve to `t_end` in `round(t_end / dt)` equal steps. `snapshot_every`
/// steps (and at the end) the callback receives the field and may stop the run.
pub fn evolve(
    initial: &SpinorField,
    op: &DiracOperator,
    config: &EvolutionConfig,
    t_end: f64,
    snapshot_every: usize,
    mut on_snapshot: impl FnMut(&SpinorField, &SnapshotInfo) -> Result<Control>,
) -> Result<EvolutionSummary> {
    config.validate()?;
    if !initial.is_finite() {
        return Err(EdgeError::InvalidParameter("initial field is not finite".into()));
    }
    if (op.epsilon - config.epsilon).abs() > 1e-15 {
        return Err(EdgeError::InvalidParameter(
            "operator and config disagree on epsilon".into(),
        ));
    }
    let steps = if t_end > 0.0 {
        ((t_end / config.dt).round() as usize).max(1)
    } else {
        0
    };
    let dt = if steps > 0 { t_end / steps as f64 } else { config.dt };
    let mut cn = CrankNicolson::new(op, dt, config.krylov);
    let n0 = initial.norm();
    let mut field = initial.clone();
    let mut max_drift: f64 = 0.0;
    let mut max_iter = 0;
    let mut snapshots = Vec::new();
    let every = snapshot_every.max(1);
    let info0 = SnapshotInfo {
        step: 0,
        time: field.time,
        norm: n0,
        center: field.center_of_mass(),
        krylov_iterations: 0,
    };
    let mut stopped_early = on_snapshot(&field, &info0)? == Control::Stop;
    snapshots.push(info0);
    let t0 = initial.time;
    for k in 1..=steps {
        if stopped_early {
            break;
        }
        field = cn.step(&field, dt)?;
        field.time = t0 + k as f64 * dt;
        max_iter = max_iter.max(cn.last_iterations());
        let nk = field.norm();
        let drift = if n0 > 0.0 { (nk - n0).abs() / n0 } else { nk };
        max_drift = max_drift.max(drift);
        if drift > config.drift_limit || !nk.is_finite() {
            return Err(EdgeError::NormDrift {
                drift,
                limit: config.drift_limit,
                time: field.time,
            });
        }
        if k % every == 0 || k == steps {
            let info = SnapshotInfo {
                step: k,
                time: field.time,
                norm: nk,
                center: field.center_of_mass(),
                krylov_iterations: cn.last_iterations(),
            };
            stopped_early = on_snapshot(&field, &info)? == Control::Stop && k < steps;
            snapshots.push(info);
        }
    }
    Ok(EvolutionSummary {
        steps,
        dt,
        max_drift,
        max_krylov_iterations: max_iter,
        snapshots,
        final_field: field,
        stopped_early,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Overlap {
    pub l2_error: f64,
    /// `l2_error / ||ansatz||`.
    pub relative_error: f64,
    /// Distance between the field's center of mass and `center`.
    pub center_offset: f64,
    /// `arg(field_1 / ansatz_1)` at the grid point nearest `center`.
    pub phase: f64,
}

/// Compare a field against an ansatz sampled on the same grid.
pub fn overlap_diagnostics(field: &SpinorField, ansatz: &SpinorField, center: [f64; 2]) -> Overlap {
    let l2 = field.distance(ansatz);
    let an = ansatz.norm();
    let com = field.center_of_mass();
    let idx = field.grid.nearest(center);
    let ratio = field.psi[0][idx] * ansatz.psi[0][idx].conj();
    Overlap {
        l2_error: l2,
        relative_error: if an > 0.0 { l2 / an } else { l2 },
        center_offset: (com[0] - center[0]).hypot(com[1] - center[1]),
        phase: if ratio.norm() > 0.0 { ratio.arg() } else { 0.0 },
    }
}

/// Unwraps a sequence of phase samples relative to the first.
#[derive(Clone, Copy, Debug, Default)]
pub struct PhaseTracker {
    first: Option<f64>,
    last: f64,
    total: f64,
}

impl PhaseTracker {
    /// Feed the raw phase (radians); returns the unwrapped phase relative to the first sample.
    pub fn push(&mut self, raw: f64) -> f64 {
        match self.first {
            None => {
                self.first = Some(raw);
                self.last = raw;
                self.total = 0.0;
            }
            Some(_) => {
                let mut d = raw - self.last;
                d -= 2.0 * PI * (d / (2.0 * PI)).round();
                self.total += d;
                self.last = raw;
            }
        }
        self.total
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}

/// Argument of the first component at the grid point nearest `x`.
pub fn first_component_phase(field: &SpinorField, x: [f64; 2]) -> f64 {
    field.psi[0][field.grid.nearest(x)].arg()
}
