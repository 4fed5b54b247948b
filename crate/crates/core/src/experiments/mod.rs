//! Config-driven experiment runs: evolutions, error scaling, Berry phase,
//! dispersion probe and hierarchy residuals, with CSV and metadata output.

pub mod config;
pub mod fit;
pub mod table;

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::dirac::{
    evolve, overlap_diagnostics, Control, DiracOperator, EvolutionConfig, PhaseTracker, SnapshotInfo, SpinorField,
};
use crate::error::{EdgeError, Result};
use crate::geometry::{TrajectorySample, GRADIENT_FLOOR};
use crate::grid::Grid2D;
use crate::profile::Profile;
use crate::snapshot::{write_heatmap, write_snapshot};
use crate::transport::{Hierarchy, HierarchySettings};
use crate::wall::{check_transversality, DomainWall, WallFamily};

pub use config::{ExperimentConfig, ExperimentKind, InitialData};
pub use fit::{fit_line, fit_power_law, LineFit};
pub use table::{num, Table};

/// Packets must stay this many `sqrt(eps)` widths away from the box edge.
const BOX_MARGIN_WIDTHS: f64 = 5.0;
/// A packet whose center is farther than this many `sqrt(eps)` from the
/// interface has decohered.
const TUBE_WIDTHS: f64 = 3.0;

fn profile_width(p: &Profile) -> f64 {
    match *p {
        Profile::Gaussian { width } | Profile::Hermite { width, .. } | Profile::Bump { width } => width,
    }
}

/// Default start point: on the circle for circular walls, the origin otherwise.
pub fn default_start(wall: &DomainWall) -> [f64; 2] {
    match wall.family {
        WallFamily::Circle { center, radius } => [center[0] + radius, center[1]],
        _ => [0.0, 0.0],
    }
}

/// One `(wall, eps)` combination with its grid, operator and ansatz hierarchy.
pub struct Cell {
    pub epsilon: f64,
    pub grid: Grid2D,
    pub op: DiracOperator,
    pub hierarchy: Hierarchy,
    pub evolution: EvolutionConfig,
    /// Smallest `|grad kappa|` along the trajectory.
    pub min_gradient: f64,
}

impl Cell {
    pub fn prepare(
        cfg: &ExperimentConfig,
        wall: &DomainWall,
        epsilon: f64,
        start: [f64; 2],
        t_max: f64,
        order: usize,
    ) -> Result<Cell> {
        let grid = Grid2D::new(cfg.n1, cfg.n2, cfg.l1, cfg.l2)?;
        let se = epsilon.sqrt();
        grid.check_resolution(se, 4.0)?;
        let hierarchy = Hierarchy::new(wall, start, &cfg.profile, t_max, order, HierarchySettings::default())?;
        let margin = BOX_MARGIN_WIDTHS * se * profile_width(&cfg.profile).max(1.0);
        let traj = hierarchy.trajectory();
        for s in traj.samples().iter().filter(|s| s.t <= t_max + 1e-12) {
            if s.y[0].abs() > grid.l1 - margin || s.y[1].abs() > grid.l2 - margin {
                return Err(EdgeError::Resolution(format!(
                    "trajectory reaches ({:.3}, {:.3}) at t = {:.3}, within {margin:.3} of the box edge",
                    s.y[0], s.y[1], s.t
                )));
            }
        }
        let points: Vec<[f64; 2]> = traj.samples().iter().map(|s| s.y).collect();
        let report = check_transversality(wall, &points, 1e-8, GRADIENT_FLOOR)?;
        let op = DiracOperator::new(&grid, wall, epsilon)?;
        let evolution = EvolutionConfig {
            epsilon,
            dt: cfg.dt_factor * epsilon,
            krylov: cfg.krylov,
            drift_limit: cfg.drift_limit,
        };
        Ok(Cell {
            epsilon,
            grid,
            op,
            hierarchy,
            evolution,
            min_gradient: report.min_gradient,
        })
    }

    pub fn frame(&self, t: f64) -> Result<TrajectorySample> {
        self.hierarchy.trajectory().frame_at(t)
    }

    /// Order-`order` ansatz on the grid at time `t`.
    pub fn ansatz(&self, t: f64, order: usize) -> Result<SpinorField> {
        let psi = self.hierarchy.sample(t, order, self.epsilon, &self.grid)?;
        SpinorField::from_components(&self.grid, psi, t)
    }

    /// Initial field for the configured data kind.
    pub fn initial(&self, data: InitialData, order: usize) -> Result<SpinorField> {
        match data {
            InitialData::Ansatz => self.ansatz(0.0, order),
            InitialData::Orthogonal => {
                let theta = self.frame(0.0)?.theta;
                self.carried_by([
                    Complex64::from_polar(1.0, -0.5 * theta),
                    Complex64::from_polar(1.0, 0.5 * theta),
                ])
            }
            InitialData::Mix { alpha } => self.carried_by(alpha),
        }
    }

    /// Leading scalar Gaussian profile carried by the spinor `alpha`.
    fn carried_by(&self, alpha: [Complex64; 2]) -> Result<SpinorField> {
        let a0 = self.ansatz(0.0, 0)?;
        let theta = self.frame(0.0)?.theta;
        let undo = Complex64::from_polar(1.0, 0.5 * theta);
        let scalar: Vec<Complex64> = a0.psi[0].iter().map(|v| v * undo).collect();
        let psi = [
            scalar.iter().map(|v| v * alpha[0]).collect(),
            scalar.iter().map(|v| v * alpha[1]).collect(),
        ];
        SpinorField::from_components(&self.grid, psi, 0.0)
    }

    /// Evolve to `t_end`, calling `visit` after every step with a flag telling
    /// whether the step is the one closest to a requested time.
    pub fn run(
        &self,
        initial: &SpinorField,
        t_end: f64,
        targets: &[f64],
        mut visit: impl FnMut(&SpinorField, &SnapshotInfo, bool) -> Result<Control>,
    ) -> Result<CellStats> {
        let steps = ((t_end / self.evolution.dt).round() as usize).max(1);
        let dt = t_end / steps as f64;
        let mut wanted: Vec<usize> = targets.iter().map(|t| (t / dt).round() as usize).collect();
        wanted.sort_unstable();
        wanted.dedup();
        let summary = evolve(initial, &self.op, &self.evolution, t_end, 1, |f, info| {
            visit(f, info, wanted.binary_search(&info.step).is_ok())
        })?;
        Ok(CellStats {
            epsilon: self.epsilon,
            dt: summary.dt,
            steps: summary.steps,
            max_drift: summary.max_drift,
            max_krylov_iterations: summary.max_krylov_iterations,
            min_gradient: self.min_gradient,
            stopped_early: summary.stopped_early,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellStats {
    pub epsilon: f64,
    pub dt: f64,
    pub steps: usize,
    pub max_drift: f64,
    pub max_krylov_iterations: usize,
    pub min_gradient: f64,
    pub stopped_early: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRow {
    pub epsilon: f64,
    pub t: f64,
    pub l2_error: f64,
    /// `l2_error / ||psi_0||`.
    pub relative_error: f64,
    pub center_offset: f64,
    pub big_theta: f64,
}

/// Fitted `log(error)` against `log(eps)` at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonFit {
    pub t: f64,
    pub fit: LineFit,
}

#[derive(Clone, Debug, Default)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
    pub fits: Vec<EpsilonFit>,
    pub cells: Vec<CellStats>,
}

impl ErrorTable {
    pub fn row(&self, epsilon: f64, t: f64) -> Option<&ErrorRow> {
        self.rows
            .iter()
            .find(|r| (r.epsilon - epsilon).abs() < 1e-12 && (r.t - t).abs() < 1e-9)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "epsilon",
            "t",
            "l2_error",
            "relative_error",
            "center_offset",
            "big_theta",
        ]);
        for r in &self.rows {
            t.push(vec![
                num(r.epsilon),
                num(r.t),
                num(r.l2_error),
                num(r.relative_error),
                num(r.center_offset),
                num(r.big_theta),
            ]);
        }
        t
    }

    pub fn fit_table(&self) -> Table {
        let mut t = Table::new(&["t", "slope", "intercept", "slope_ci95", "points"]);
        for f in &self.fits {
            t.push(vec![
                num(f.t),
                num(f.fit.slope),
                num(f.fit.intercept),
                num(f.fit.slope_ci),
                f.fit.points.to_string(),
            ]);
        }
        t
    }
}

fn sort_rows(rows: &mut [ErrorRow]) {
    rows.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon).then(a.t.total_cmp(&b.t)));
}

/// Evolve the configured initial data at one `eps` and compare with the
/// order-`cfg.order` ansatz at `times`.
pub fn error_rows(
    cfg: &ExperimentConfig,
    wall: &DomainWall,
    epsilon: f64,
    times: &[f64],
) -> Result<(Vec<ErrorRow>, CellStats)> {
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let start = cfg.y0.unwrap_or_else(|| default_start(wall));
    let cell = Cell::prepare(cfg, wall, epsilon, start, t_end, cfg.order)?;
    let initial = cell.initial(cfg.initial, cfg.order)?;
    let n0 = initial.norm();
    let mut rows = Vec::new();
    let stats = cell.run(&initial, t_end, times, |field, info, hit| {
        if hit {
            let frame = cell.frame(info.time)?;
            let ansatz = cell.ansatz(info.time, cfg.order)?;
            let o = overlap_diagnostics(field, &ansatz, frame.y);
            rows.push(ErrorRow {
                epsilon,
                t: info.time,
                l2_error: o.l2_error,
                relative_error: o.l2_error / n0,
                center_offset: o.center_offset,
                big_theta: frame.big_theta,
            });
        }
        Ok(Control::Continue)
    })?;
    Ok((rows, stats))
}

/// Errors against the ansatz for every `eps`, with per-time exponent fits.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<ErrorTable> {
    let wall = cfg.wall()?;
    let times = if cfg.sample_times.is_empty() {
        vec![cfg.t_end]
    } else {
        cfg.sample_times.clone()
    };
    let mut table = ErrorTable::default();
    for &eps in &cfg.epsilons {
        let (rows, stats) = error_rows(cfg, &wall, eps, &times)?;
        table.rows.extend(rows);
        table.cells.push(stats);
    }
    sort_rows(&mut table.rows);
    let mut ts: Vec<f64> = table.rows.iter().map(|r| r.t).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    for t in ts {
        let (e, err): (Vec<f64>, Vec<f64>) = table
            .rows
            .iter()
            .filter(|r| (r.t - t).abs() < 1e-9)
            .map(|r| (r.epsilon, r.relative_error))
            .unzip();
        if e.len() >= 3 {
            table.fits.push(EpsilonFit {
                t,
                fit: fit_power_law(&e, &err)?,
            });
        }
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BerryMark {
    pub fraction: f64,
    pub t: f64,
    /// Unwrapped first-component phase relative to `t = 0`.
    pub phase: f64,
    /// `-(theta_t - theta_0) / 2`.
    pub predicted: f64,
    pub center_offset: f64,
}

#[derive(Clone, Debug)]
pub struct BerryTrace {
    pub radius: f64,
    pub epsilon: f64,
    pub marks: Vec<BerryMark>,
    pub total_phase: f64,
    pub predicted_total: f64,
    pub complete: bool,
    pub warning: Option<String>,
    pub stats: CellStats,
}

/// Track the phase of the first component at the packet center from `0` to
/// `t_end`, with `marks` uniformly spaced records.
pub fn phase_trace(
    cfg: &ExperimentConfig,
    wall: &DomainWall,
    epsilon: f64,
    start: [f64; 2],
    t_end: f64,
    marks: usize,
) -> Result<BerryTrace> {
    let cell = Cell::prepare(cfg, wall, epsilon, start, t_end, cfg.order)?;
    let initial = cell.initial(cfg.initial, cfg.order)?;
    let theta0 = cell.frame(0.0)?.theta;
    let marks = marks.max(1);
    let times: Vec<f64> = (0..=marks).map(|k| t_end * k as f64 / marks as f64).collect();
    let tube = TUBE_WIDTHS * epsilon.sqrt();
    let mut tracker = PhaseTracker::default();
    let mut out = Vec::new();
    let mut warning = None;
    let mut last = 0.0;
    let stats = cell.run(&initial, t_end, &times, |field, info, hit| {
        let frame = cell.frame(info.time)?;
        let phase = tracker.push(crate::dirac::first_component_phase(field, frame.y));
        last = phase;
        let d = wall.evaluate(info.center)?;
        let off_interface = d.value.abs() / d.gradient_norm().max(GRADIENT_FLOOR);
        if hit {
            out.push(BerryMark {
                fraction: info.time / t_end,
                t: info.time,
                phase,
                predicted: -(frame.theta - theta0) / 2.0,
                center_offset: (info.center[0] - frame.y[0]).hypot(info.center[1] - frame.y[1]),
            });
        }
        if off_interface > tube {
            warning = Some(format!(
                "packet center left the interface tube at t = {:.4} (distance {off_interface:.3e})",
                info.time
            ));
            return Ok(Control::Stop);
        }
        Ok(Control::Continue)
    })?;
    let final_frame = cell.frame(t_end)?;
    Ok(BerryTrace {
        radius: match wall.family {
            WallFamily::Circle { radius, .. } => radius,
            _ => f64::INFINITY,
        },
        epsilon,
        marks: out,
        total_phase: last,
        predicted_total: -(final_frame.theta - theta0) / 2.0,
        complete: !stats.stopped_early,
        warning,
        stats,
    })
}

/// One revolution per configured radius and `eps`.
pub fn run_berry(cfg: &ExperimentConfig) -> Result<Vec<BerryTrace>> {
    let base = cfg.wall()?;
    let (radius0, center) = match base.family {
        WallFamily::Circle { radius, center } => (radius, center),
        _ => return Err(EdgeError::Config("berry runs need a circular wall".into())),
    };
    let radii = if cfg.berry_radii.is_empty() {
        vec![radius0]
    } else {
        cfg.berry_radii.clone()
    };
    let mut traces = Vec::new();
    for &radius in &radii {
        let wall = DomainWall::from_spec("circle", &[radius, center[0], center[1]])?;
        let start = cfg.y0.unwrap_or_else(|| default_start(&wall));
        for &eps in &cfg.epsilons {
            traces.push(phase_trace(cfg, &wall, eps, start, 2.0 * PI * radius, cfg.berry_marks)?);
        }
    }
    Ok(traces)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRow {
    pub t: f64,
    pub sup_norm: f64,
    /// `|<W[a0](t), psi(t)>| / ||W[a0](t)||`.
    pub ansatz_overlap: f64,
}

#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub epsilon: f64,
    pub rows: Vec<ProbeRow>,
    /// Sup-norm against `t` in log-log over the window.
    pub fit: LineFit,
    /// Coefficient of the propagating spinor in the initial data.
    pub lambda1: Complex64,
    /// `min_t ansatz_overlap / (|lambda1| ||K0 f||)` over the window.
    pub retained_fraction: f64,
    pub stats: CellStats,
}

/// Split `alpha = l1 [e^(-i t/2), -e^(i t/2)] + l2 [e^(-i t/2), e^(i t/2)]`.
pub fn split_spinor(alpha: [Complex64; 2], theta: f64) -> (Complex64, Complex64) {
    let p = Complex64::from_polar(1.0, 0.5 * theta);
    let m = Complex64::from_polar(1.0, -0.5 * theta);
    ((alpha[0] * p - alpha[1] * m) / 2.0, (alpha[0] * p + alpha[1] * m) / 2.0)
}

pub fn run_dispersion_probe(cfg: &ExperimentConfig) -> Result<Vec<ProbeReport>> {
    let wall = cfg.wall()?;
    let start = cfg.y0.unwrap_or_else(|| default_start(&wall));
    let times: Vec<f64> = if cfg.sample_times.is_empty() {
        (1..=40).map(|k| cfg.t_end * k as f64 / 40.0).collect()
    } else {
        cfg.sample_times.clone()
    };
    let mut reports = Vec::new();
    for &eps in &cfg.epsilons {
        let cell = Cell::prepare(cfg, &wall, eps, start, cfg.t_end, cfg.order)?;
        let initial = cell.initial(cfg.initial, cfg.order)?;
        let theta0 = cell.frame(0.0)?.theta;
        let lambda1 = match cfg.initial {
            InitialData::Ansatz => Complex64::new(1.0, 0.0),
            InitialData::Orthogonal => Complex64::default(),
            InitialData::Mix { alpha } => split_spinor(alpha, theta0).0,
        };
        let mut rows = Vec::new();
        let stats = cell.run(&initial, cfg.t_end, &times, |field, info, hit| {
            if hit {
                let a0 = cell.ansatz(info.time, 0)?;
                let na = a0.norm();
                rows.push(ProbeRow {
                    t: info.time,
                    sup_norm: field.sup_norm(),
                    ansatz_overlap: if na > 0.0 { a0.inner(field).norm() / na } else { 0.0 },
                });
            }
            Ok(Control::Continue)
        })?;
        let [a, b] = cfg.probe_window;
        let window: Vec<&ProbeRow> = rows.iter().filter(|r| r.t >= a - 1e-12 && r.t <= b + 1e-12).collect();
        let (ts, sups): (Vec<f64>, Vec<f64>) = window.iter().map(|r| (r.t, r.sup_norm)).unzip();
        let fit = fit_power_law(&ts, &sups)?;
        let k0 = cell.ansatz(0.0, 0)?.norm();
        let retained_fraction = if lambda1.norm() > 0.0 {
            window
                .iter()
                .map(|r| r.ansatz_overlap / (lambda1.norm() * k0))
                .fold(f64::INFINITY, f64::min)
        } else {
            0.0
        };
        reports.push(ProbeReport {
            epsilon: eps,
            rows,
            fit,
            lambda1,
            retained_fraction,
            stats,
        });
    }
    Ok(reports)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualRow {
    pub order: usize,
    pub epsilon: f64,
    pub t: f64,
    /// `||(eps D_t + H) W[a]||`.
    pub residual: f64,
    /// Residual divided by `||W[a]||`.
    pub relative: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderFit {
    pub order: usize,
    pub target: f64,
    pub fit: LineFit,
}

#[derive(Clone, Debug, Default)]
pub struct HierarchyReport {
    pub residuals: Vec<ResidualRow>,
    pub residual_fits: Vec<OrderFit>,
    /// Evolution error against the order-`m` ansatz started from it, as
    /// `(order, row)`, when requested.
    pub evolution: Vec<(usize, ErrorRow)>,
    pub evolution_fits: Vec<OrderFit>,
    pub cells: Vec<CellStats>,
}

/// `||(eps D_t + H) W[a]||` at time `t`, with `D_t` from a five-point
/// central difference of step `delta`.
pub fn ansatz_residual(cell: &Cell, order: usize, t: f64, delta: f64) -> Result<(f64, f64)> {
    if t < 2.0 * delta {
        return Err(EdgeError::InvalidParameter(format!(
            "residual time {t} needs t >= 2 * fd step {delta}"
        )));
    }
    let w = |s: f64| cell.ansatz(s, order);
    let (m2, m1, p1, p2) = (w(t - 2.0 * delta)?, w(t - delta)?, w(t + delta)?, w(t + 2.0 * delta)?);
    let center = w(t)?;
    let h = cell.op.apply(&center);
    let eps = cell.epsilon;
    // eps D_t = -i eps d/dt
    let c = Complex64::new(0.0, -eps / (12.0 * delta));
    let mut r = h;
    for k in 0..2 {
        for (i, v) in r.psi[k].iter_mut().enumerate() {
            *v += c * (m2.psi[k][i] - 8.0 * m1.psi[k][i] + 8.0 * p1.psi[k][i] - p2.psi[k][i]);
        }
    }
    let res = r.norm();
    let n = center.norm();
    Ok((res, if n > 0.0 { res / n } else { res }))
}

pub fn run_hierarchy_check(cfg: &ExperimentConfig) -> Result<HierarchyReport> {
    let wall = cfg.wall()?;
    let start = cfg.y0.unwrap_or_else(|| default_start(&wall));
    let max_order = cfg.hierarchy_orders.iter().copied().max().unwrap_or(0);
    let delta = cfg.hierarchy_fd_step;
    let t_res = cfg.hierarchy_times.iter().copied().fold(0.0, f64::max) + 2.0 * delta;
    let mut report = HierarchyReport::default();
    for &eps in &cfg.epsilons {
        let t_max = if cfg.hierarchy_evolve {
            t_res.max(cfg.t_end)
        } else {
            t_res
        };
        let cell = Cell::prepare(cfg, &wall, eps, start, t_max, max_order)?;
        for &order in &cfg.hierarchy_orders {
            for &t in &cfg.hierarchy_times {
                let (residual, relative) = ansatz_residual(&cell, order, t, delta)?;
                report.residuals.push(ResidualRow {
                    order,
                    epsilon: eps,
                    t,
                    residual,
                    relative,
                });
            }
            if cfg.hierarchy_evolve {
                let initial = cell.ansatz(0.0, order)?;
                let n0 = initial.norm();
                let mut row = None;
                let stats = cell.run(&initial, cfg.t_end, &[cfg.t_end], |field, info, hit| {
                    if hit && info.step > 0 {
                        let frame = cell.frame(info.time)?;
                        let o = overlap_diagnostics(field, &cell.ansatz(info.time, order)?, frame.y);
                        row = Some(ErrorRow {
                            epsilon: eps,
                            t: info.time,
                            l2_error: o.l2_error,
                            relative_error: o.l2_error / n0,
                            center_offset: o.center_offset,
                            big_theta: frame.big_theta,
                        });
                    }
                    Ok(Control::Continue)
                })?;
                report.cells.push(stats);
                if let Some(r) = row {
                    report.evolution.push((order, r));
                }
            }
        }
    }
    report.residuals.sort_by(|a, b| {
        a.order
            .cmp(&b.order)
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.t.total_cmp(&b.t))
    });
    for &order in &cfg.hierarchy_orders {
        let mut e = Vec::new();
        let mut v = Vec::new();
        for &eps in &cfg.epsilons {
            let worst = report
                .residuals
                .iter()
                .filter(|r| r.order == order && r.epsilon == eps)
                .map(|r| r.relative)
                .fold(0.0, f64::max);
            e.push(eps);
            v.push(worst);
        }
        if e.len() >= 3 {
            report.residual_fits.push(OrderFit {
                order,
                target: (order as f64 + 2.0) / 2.0,
                fit: fit_power_law(&e, &v)?,
            });
        }
        let (ee, ev): (Vec<f64>, Vec<f64>) = report
            .evolution
            .iter()
            .filter(|(o, _)| *o == order)
            .map(|(_, r)| (r.epsilon, r.relative_error))
            .unzip();
        if ee.len() >= 3 {
            report.evolution_fits.push(OrderFit {
                order,
                target: (order as f64 + 1.0) / 2.0,
                fit: fit_power_law(&ee, &ev)?,
            });
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveRow {
    pub epsilon: f64,
    pub step: usize,
    pub t: f64,
    pub norm: f64,
    pub center: [f64; 2],
    pub y: [f64; 2],
    pub center_offset: f64,
    pub relative_error: f64,
    pub phase: f64,
}

#[derive(Clone, Debug, Default)]
pub struct EvolveReport {
    pub rows: Vec<EvolveRow>,
    pub cells: Vec<CellStats>,
    pub files: Vec<PathBuf>,
}

pub fn run_evolve(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<EvolveReport> {
    let wall = cfg.wall()?;
    let start = cfg.y0.unwrap_or_else(|| default_start(&wall));
    let mut report = EvolveReport::default();
    for (ie, &eps) in cfg.epsilons.iter().enumerate() {
        let cell = Cell::prepare(cfg, &wall, eps, start, cfg.t_end, cfg.order)?;
        let initial = cell.initial(cfg.initial, cfg.order)?;
        let n0 = initial.norm();
        let times: Vec<f64> = if !cfg.sample_times.is_empty() {
            cfg.sample_times.clone()
        } else {
            (0..=10).map(|k| cfg.t_end * k as f64 / 10.0).collect()
        };
        let snap_dir = out.map(|d| d.join("snapshots"));
        if let (Some(d), true) = (&snap_dir, cfg.snapshot_every > 0) {
            fs::create_dir_all(d)?;
        }
        let mut tracker = PhaseTracker::default();
        let stats = cell.run(&initial, cfg.t_end, &times, |field, info, hit| {
            let frame = cell.frame(info.time)?;
            let phase = tracker.push(crate::dirac::first_component_phase(field, frame.y));
            if hit {
                let a = cell.ansatz(info.time, cfg.order)?;
                let o = overlap_diagnostics(field, &a, frame.y);
                report.rows.push(EvolveRow {
                    epsilon: eps,
                    step: info.step,
                    t: info.time,
                    norm: info.norm,
                    center: info.center,
                    y: frame.y,
                    center_offset: o.center_offset,
                    relative_error: o.l2_error / n0,
                    phase,
                });
            }
            if let Some(d) = &snap_dir {
                if cfg.snapshot_every > 0 && info.step % cfg.snapshot_every == 0 {
                    let base = d.join(format!("eps{ie}_step{:06}", info.step));
                    let p = base.with_extension("desl");
                    write_snapshot(&p, field, eps)?;
                    report.files.push(p);
                    if cfg.heatmaps {
                        let h = base.with_extension("pgm");
                        write_heatmap(&h, field)?;
                        report.files.push(h);
                    }
                }
            }
            Ok(Control::Continue)
        })?;
        if let Some(d) = out {
            let p = d.join(format!("trajectory_eps{ie}.csv"));
            cell.hierarchy.trajectory().write_csv(&p)?;
            report.files.push(p);
        }
        report.cells.push(stats);
    }
    Ok(report)
}

pub enum RunReport {
    Evolve(EvolveReport),
    Scaling(ErrorTable),
    Berry(Vec<BerryTrace>),
    DispersionProbe(Vec<ProbeReport>),
    HierarchyCheck(HierarchyReport),
}

impl RunReport {
    pub fn cells(&self) -> Vec<CellStats> {
        match self {
            RunReport::Evolve(r) => r.cells.clone(),
            RunReport::Scaling(t) => t.cells.clone(),
            RunReport::Berry(b) => b.iter().map(|t| t.stats).collect(),
            RunReport::DispersionProbe(p) => p.iter().map(|r| r.stats).collect(),
            RunReport::HierarchyCheck(h) => h.cells.clone(),
        }
    }

    pub fn max_drift(&self) -> f64 {
        self.cells().iter().map(|c| c.max_drift).fold(0.0, f64::max)
    }

    /// Human-readable result lines.
    pub fn summary(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            RunReport::Evolve(r) => {
                for row in &r.rows {
                    out.push(format!(
                        "eps={} t={:.4} norm={:.12} offset={:.3e} rel_err={:.3e}",
                        row.epsilon, row.t, row.norm, row.center_offset, row.relative_error
                    ));
                }
            }
            RunReport::Scaling(t) => {
                for f in &t.fits {
                    out.push(format!(
                        "t={}: error ~ eps^{:.3} (95% +- {:.3}, {} points)",
                        f.t, f.fit.slope, f.fit.slope_ci, f.fit.points
                    ));
                }
                for r in &t.rows {
                    out.push(format!(
                        "eps={} t={} relative_error={:.4e}",
                        r.epsilon, r.t, r.relative_error
                    ));
                }
            }
            RunReport::Berry(traces) => {
                for tr in traces {
                    out.push(format!(
                        "radius={} eps={}: phase {:.4} (predicted {:.4}){}",
                        tr.radius,
                        tr.epsilon,
                        tr.total_phase,
                        tr.predicted_total,
                        tr.warning
                            .as_ref()
                            .map(|w| format!(" warning: {w}"))
                            .unwrap_or_default()
                    ));
                }
            }
            RunReport::DispersionProbe(reports) => {
                for r in reports {
                    out.push(format!(
                        "eps={}: sup-norm ~ t^{:.3} (95% +- {:.3}); retained fraction {:.3}",
                        r.epsilon, r.fit.slope, r.fit.slope_ci, r.retained_fraction
                    ));
                }
            }
            RunReport::HierarchyCheck(h) => {
                for f in &h.residual_fits {
                    out.push(format!(
                        "order {}: residual ~ eps^{:.3} (target {}, 95% +- {:.3})",
                        f.order, f.fit.slope, f.target, f.fit.slope_ci
                    ));
                }
                for f in &h.evolution_fits {
                    out.push(format!(
                        "order {}: evolution error ~ eps^{:.3} (target {})",
                        f.order, f.fit.slope, f.target
                    ));
                }
            }
        }
        out.push(format!("max norm drift {:.3e}", self.max_drift()));
        out
    }

    /// Write the CSV tables of this run into `dir`.
    pub fn write_tables(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        let mut put = |name: &str, t: Table| -> Result<()> {
            let p = dir.join(name);
            t.write(&p)?;
            written.push(p);
            Ok(())
        };
        match self {
            RunReport::Evolve(r) => {
                let mut t = Table::new(&[
                    "epsilon",
                    "step",
                    "t",
                    "norm",
                    "center_x",
                    "center_y",
                    "y_x",
                    "y_y",
                    "center_offset",
                    "relative_error",
                    "phase",
                ]);
                for row in &r.rows {
                    t.push(vec![
                        num(row.epsilon),
                        row.step.to_string(),
                        num(row.t),
                        num(row.norm),
                        num(row.center[0]),
                        num(row.center[1]),
                        num(row.y[0]),
                        num(row.y[1]),
                        num(row.center_offset),
                        num(row.relative_error),
                        num(row.phase),
                    ]);
                }
                put("evolve.csv", t)?;
            }
            RunReport::Scaling(e) => {
                put("errors.csv", e.to_table())?;
                put("fits.csv", e.fit_table())?;
            }
            RunReport::Berry(traces) => {
                let mut t = Table::new(&[
                    "radius",
                    "epsilon",
                    "fraction",
                    "t",
                    "phase",
                    "predicted",
                    "center_offset",
                ]);
                let mut s = Table::new(&["radius", "epsilon", "total_phase", "predicted", "complete", "warning"]);
                for tr in traces {
                    for m in &tr.marks {
                        t.push(vec![
                            num(tr.radius),
                            num(tr.epsilon),
                            num(m.fraction),
                            num(m.t),
                            num(m.phase),
                            num(m.predicted),
                            num(m.center_offset),
                        ]);
                    }
                    s.push(vec![
                        num(tr.radius),
                        num(tr.epsilon),
                        num(tr.total_phase),
                        num(tr.predicted_total),
                        tr.complete.to_string(),
                        tr.warning.clone().unwrap_or_default(),
                    ]);
                }
                put("berry.csv", t)?;
                put("berry_summary.csv", s)?;
            }
            RunReport::DispersionProbe(reports) => {
                let mut t = Table::new(&["epsilon", "t", "sup_norm", "ansatz_overlap"]);
                let mut f = Table::new(&[
                    "epsilon",
                    "slope",
                    "intercept",
                    "slope_ci95",
                    "points",
                    "retained_fraction",
                ]);
                for r in reports {
                    for row in &r.rows {
                        t.push(vec![
                            num(r.epsilon),
                            num(row.t),
                            num(row.sup_norm),
                            num(row.ansatz_overlap),
                        ]);
                    }
                    f.push(vec![
                        num(r.epsilon),
                        num(r.fit.slope),
                        num(r.fit.intercept),
                        num(r.fit.slope_ci),
                        r.fit.points.to_string(),
                        num(r.retained_fraction),
                    ]);
                }
                put("probe.csv", t)?;
                put("probe_fit.csv", f)?;
            }
            RunReport::HierarchyCheck(h) => {
                let mut t = Table::new(&["order", "epsilon", "t", "residual", "relative"]);
                for r in &h.residuals {
                    t.push(vec![
                        r.order.to_string(),
                        num(r.epsilon),
                        num(r.t),
                        num(r.residual),
                        num(r.relative),
                    ]);
                }
                put("residuals.csv", t)?;
                put("residual_fits.csv", order_fit_table(&h.residual_fits))?;
                if !h.evolution.is_empty() {
                    let mut t = Table::new(&["order", "epsilon", "t", "l2_error", "relative_error"]);
                    for (o, r) in &h.evolution {
                        t.push(vec![
                            o.to_string(),
                            num(r.epsilon),
                            num(r.t),
                            num(r.l2_error),
                            num(r.relative_error),
                        ]);
                    }
                    put("evolution.csv", t)?;
                    put("evolution_fits.csv", order_fit_table(&h.evolution_fits))?;
                }
            }
        }
        Ok(written)
    }
}

fn order_fit_table(fits: &[OrderFit]) -> Table {
    let mut t = Table::new(&["order", "target", "slope", "intercept", "slope_ci95", "points"]);
    for f in fits {
        t.push(vec![
            f.order.to_string(),
            num(f.target),
            num(f.fit.slope),
            num(f.fit.intercept),
            num(f.fit.slope_ci),
            f.fit.points.to_string(),
        ]);
    }
    t
}

/// Metadata sufficient to rerun: config echo, grid, steps, solver settings
/// and per-cell wall checks.
pub fn meta_text(cfg: &ExperimentConfig, report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "edgelab {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "kind = {}", cfg.kind.name());
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "\n[config]");
    s.push_str(&cfg.echo());
    let _ = writeln!(s, "\n[grid]");
    let _ = writeln!(s, "n1 = {}\nn2 = {}\nl1 = {}\nl2 = {}", cfg.n1, cfg.n2, cfg.l1, cfg.l2);
    let _ = writeln!(s, "\n[solver]");
    let _ = writeln!(
        s,
        "scheme = crank-nicolson, gmres with free-dirac preconditioner\ndt_factor = {}\ntol = {}\nrestart = {}\nmax_iterations = {}\ndrift_limit = {}",
        cfg.dt_factor, cfg.krylov.tol, cfg.krylov.restart, cfg.krylov.max_iterations, cfg.drift_limit
    );
    let _ = writeln!(s, "\n[cells]");
    for c in report.cells() {
        let _ = writeln!(
            s,
            "epsilon = {}, dt = {}, steps = {}, max_drift = {:e}, max_krylov_iterations = {}, min_grad_kappa_on_trajectory = {}, transversality = {}, stopped_early = {}",
            c.epsilon,
            c.dt,
            c.steps,
            c.max_drift,
            c.max_krylov_iterations,
            c.min_gradient,
            if c.min_gradient >= GRADIENT_FLOOR { "pass" } else { "fail" },
            c.stopped_early
        );
    }
    s
}

/// Validate, run, and when `out` is given write tables and `meta.txt` there.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunReport> {
    cfg.validate()?;
    if let Some(d) = out {
        fs::create_dir_all(d)?;
        fs::write(
            d.join("meta.txt"),
            format!("status = running\n\n[config]\n{}", cfg.echo()),
        )?;
    }
    let report = match cfg.kind {
        ExperimentKind::Evolve => RunReport::Evolve(run_evolve(cfg, out)?),
        ExperimentKind::Scaling => RunReport::Scaling(run_scaling(cfg)?),
        ExperimentKind::Berry => RunReport::Berry(run_berry(cfg)?),
        ExperimentKind::DispersionProbe => RunReport::DispersionProbe(run_dispersion_probe(cfg)?),
        ExperimentKind::HierarchyCheck => RunReport::HierarchyCheck(run_hierarchy_check(cfg)?),
    };
    if let Some(d) = out {
        report.write_tables(d)?;
        fs::write(d.join("meta.txt"), meta_text(cfg, &report))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_spinor_examples() {
        let th = 0.8;
        let v1 = [Complex64::from_polar(1.0, -0.4), -Complex64::from_polar(1.0, 0.4)];
        let (l1, l2) = split_spinor(v1, th);
        assert!((l1 - 1.0).norm() < 1e-15 && l2.norm() < 1e-15);
        let v2 = [Complex64::from_polar(1.0, -0.4), Complex64::from_polar(1.0, 0.4)];
        let (l1, l2) = split_spinor(v2, th);
        assert!(l1.norm() < 1e-15 && (l2 - 1.0).norm() < 1e-15);
        // [0, e^(-i theta/2)] splits evenly
        let (l1, l2) = split_spinor([Complex64::default(), Complex64::from_polar(1.0, -0.4)], th);
        assert!((l1.norm() - 0.5).abs() < 1e-15 && (l2.norm() - 0.5).abs() < 1e-15);
    }

    fn small_cfg() -> ExperimentConfig {
        let mut c =
            ExperimentConfig::parse("grid.n = 64\ngrid.half_extent = 4\ntime.epsilons = 0.25\ntime.t_end = 0.25")
                .unwrap();
        c.wall_family = "linear".into();
        c
    }

    #[test]
    fn straight_wall_ansatz_is_exact() {
        let cfg = small_cfg();
        let (rows, stats) = error_rows(&cfg, &cfg.wall().unwrap(), 0.25, &[0.25]).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].relative_error < 1e-4, "{:?}", rows[0]);
        assert!(stats.max_drift < 1e-10);
    }

    #[test]
    fn orthogonal_data_is_orthogonal_to_ansatz() {
        let cfg = small_cfg();
        let wall = cfg.wall().unwrap();
        let cell = Cell::prepare(&cfg, &wall, 0.25, [0.0, 0.0], 0.25, 0).unwrap();
        let a = cell.initial(InitialData::Ansatz, 0).unwrap();
        let o = cell.initial(InitialData::Orthogonal, 0).unwrap();
        assert!(a.inner(&o).norm() < 1e-12 * a.norm_sq());
        assert!((a.norm() - o.norm()).abs() < 1e-12);
    }

    #[test]
    fn box_margin_is_enforced() {
        let mut cfg = small_cfg();
        cfg.t_end = 3.9;
        let wall = cfg.wall().unwrap();
        assert!(matches!(
            Cell::prepare(&cfg, &wall, 0.25, [0.0, 0.0], 3.9, 0),
            Err(EdgeError::Resolution(_))
        ));
    }
}
