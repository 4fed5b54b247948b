//! Fast self-checks of the solver invariants, driven by a seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dirac::{CrankNicolson, DiracOperator, SpinorField};
use crate::error::Result;
use crate::experiments::{error_rows, ExperimentConfig};
use crate::geometry::{hessian_frame_residual, integrate_trajectory, project_to_interface};
use crate::gmres::GmresConfig;
use crate::grid::Grid2D;
use crate::hermite::{HermiteAmplitude, Z1Basis};
use crate::wall::{normalize_wall, DomainWall};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckResult {
    fn at_most(name: &'static str, value: f64, threshold: f64) -> Self {
        CheckResult {
            name,
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

fn random_field(grid: &Grid2D, rng: &mut ChaCha8Rng) -> SpinorField {
    let mut f = SpinorField::zeros(grid);
    for v in f.psi.iter_mut().flatten() {
        *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    f
}

/// Random smooth profile on the `z1` grid: shifted, modulated Gaussian.
pub fn random_profile(basis: &Z1Basis, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let shift: f64 = rng.gen_range(-1.5..1.5);
    let width: f64 = rng.gen_range(0.7..1.6);
    let freq: f64 = rng.gen_range(-2.0..2.0);
    let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    (0..basis.len())
        .map(|j| {
            let z = basis.point(j);
            c * Complex64::from_polar((-((z - shift) / width).powi(2) / 2.0).exp(), freq * z)
        })
        .collect()
}

/// Random amplitude with decaying Hermite content and no kernel component.
pub fn random_orthogonal_amplitude(
    basis: &std::sync::Arc<Z1Basis>,
    nh: usize,
    rng: &mut ChaCha8Rng,
) -> HermiteAmplitude {
    let mut a = HermiteAmplitude::zeros(basis.clone(), nh);
    let bands = 12.min(nh.saturating_sub(2));
    for comp in 0..2 {
        for n in 0..bands {
            let p = random_profile(basis, rng);
            let decay = (-(n as f64) / 3.0).exp();
            for (j, v) in p.iter().enumerate() {
                if !(comp == 0 && n == 0) {
                    a.set(comp, j, n, v * decay);
                }
            }
        }
    }
    a
}

/// Worst `||T0 K f|| / ||K f||` over `count` random profiles.
pub fn kernel_annihilation(seed: u64, count: usize, r: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = Z1Basis::new(256, 10.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let k = HermiteAmplitude::kernel_element(basis.clone(), 64, &random_profile(&basis, &mut rng));
        worst = worst.max(k.apply_transport(r).norm() / k.norm());
    }
    Ok(worst)
}

/// Worst relative error of `T0^(-1) T0 a = a` over `count` random kernel-orthogonal amplitudes.
pub fn transport_round_trip(seed: u64, count: usize, nh: usize, r: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = Z1Basis::new(256, 10.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let a = random_orthogonal_amplitude(&basis, nh, &mut rng);
        let back = a.apply_transport(r).invert_transport(r);
        worst = worst.max(back.sub(&a).norm() / a.norm());
    }
    Ok(worst)
}

/// `max | |grad k| - 1 |` and `max |<grad k, hess k grad k>|` on interface points.
pub fn normalized_condition(wall: &DomainWall, points: &[[f64; 2]]) -> Result<(f64, f64)> {
    let (mut g, mut h) = (0.0f64, 0.0f64);
    for p in points {
        let d = wall.evaluate(*p)?;
        g = g.max((d.gradient_norm() - 1.0).abs());
        let hg = d.hessian_times_gradient();
        h = h.max((hg[0] * d.gradient[0] + hg[1] * d.gradient[1]).abs());
    }
    Ok((g, h))
}

/// Points of the tanh interface `x2 = tanh(x1)` for `x1` in `[-3, 3]`.
pub fn tanh_interface(n: usize) -> Result<Vec<[f64; 2]>> {
    let w = DomainWall::tanh();
    (0..n)
        .map(|k| {
            let x = -3.0 + 6.0 * k as f64 / (n - 1).max(1) as f64;
            project_to_interface(&w, [x, x.tanh()])
        })
        .collect()
}

/// The smoke suite run by `edgelab check`.
pub fn smoke_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let g = Grid2D::square(32, 3.0)?;
    let op = DiracOperator::new(&g, &DomainWall::tanh(), 0.1)?;
    let (u, v) = (random_field(&g, &mut rng), random_field(&g, &mut rng));
    let a = u.inner(&op.apply(&v));
    let b = op.apply(&u).inner(&v);
    out.push(CheckResult::at_most("hermiticity", (a - b).norm() / a.norm(), 1e-12));

    let mut cn = CrankNicolson::new(&op, 0.005, GmresConfig::default());
    let next = cn.step(&u, 0.005)?;
    out.push(CheckResult::at_most(
        "crank_nicolson_unitarity",
        (next.norm() - u.norm()).abs() / u.norm(),
        1e-11,
    ));

    let free = DiracOperator::from_samples(&g, vec![0.0; g.len()], 0.1)?;
    let mut cn = CrankNicolson::new(&free, 0.005, GmresConfig::default());
    cn.step(&u, 0.005)?;
    out.push(CheckResult::at_most(
        "free_preconditioner_iterations",
        cn.last_iterations() as f64,
        1.0,
    ));

    out.push(CheckResult::at_most(
        "kernel_annihilation",
        kernel_annihilation(rng.gen(), 5, 1.7)?,
        1e-10,
    ));
    out.push(CheckResult::at_most(
        "transport_round_trip",
        transport_round_trip(rng.gen(), 5, 64, 1.7)?,
        1e-8,
    ));

    let traj = integrate_trajectory(&DomainWall::circle(1.0), [1.0, 0.0], 2.0, 0.01)?;
    let last = traj.samples().last().copied().expect("non-empty trajectory");
    out.push(CheckResult::at_most(
        "circle_big_theta",
        (last.big_theta - 2.0).abs(),
        1e-6,
    ));
    out.push(CheckResult::at_most(
        "hessian_frame_identity",
        hessian_frame_residual(&traj, &[[0.3, -0.2], [1.0, 0.5], [-0.7, 0.9]])?,
        1e-8,
    ));

    let nw = normalize_wall(&DomainWall::tanh(), 0.5)?;
    let (dg, dh) = normalized_condition(&nw, &tanh_interface(41)?)?;
    out.push(CheckResult::at_most("normalized_wall_condition", dg.max(dh), 1e-6));

    let cfg = ExperimentConfig::parse(
        "wall.family = linear\nwall.params = 0, 1, 0\ngrid.n = 64\ngrid.half_extent = 4\ntime.epsilons = 0.25",
    )?;
    let (rows, stats) = error_rows(&cfg, &cfg.wall()?, 0.25, &[0.25])?;
    out.push(CheckResult::at_most(
        "straight_wall_exactness",
        rows[0].relative_error,
        1e-4,
    ));
    out.push(CheckResult::at_most("norm_drift", stats.max_drift, 1e-8));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in smoke_suite(7).unwrap() {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn random_amplitudes_avoid_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let basis = Z1Basis::new(64, 8.0).unwrap();
        let a = random_orthogonal_amplitude(&basis, 16, &mut rng);
        assert!((0..64).all(|j| a.at(0, j, 0) == Complex64::default()));
        assert!(a.norm() > 0.0);
    }
}
