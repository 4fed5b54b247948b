use edgelab::check::{kernel_annihilation, normalized_condition, transport_round_trip};
use edgelab::dirac::{CrankNicolson, DiracOperator, SpinorField};
use edgelab::experiments::{num, split_spinor, ExperimentConfig};
use edgelab::geometry::{hessian_frame_residual, integrate_trajectory, project_to_interface, rotate, rotate_back};
use edgelab::gmres::GmresConfig;
use edgelab::grid::Grid2D;
use edgelab::snapshot::{decode_snapshot, encode_snapshot};
use edgelab::wall::normalize_wall;
use edgelab::DomainWall;
use num_complex::Complex64;
use proptest::prelude::*;

fn field_from(grid: &Grid2D, seed: u64) -> SpinorField {
    // cheap deterministic pseudo-random fill
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let mut f = SpinorField::zeros(grid);
    for v in f.psi.iter_mut().flatten() {
        *v = Complex64::new(next(), next());
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dirac_operator_is_hermitian(seed in any::<u64>(), amp in 0.3f64..2.0, steep in 0.3f64..2.0, eps in 0.05f64..1.0) {
        let g = Grid2D::square(16, 3.0).unwrap();
        let op = DiracOperator::new(&g, &DomainWall::from_spec("tanh", &[amp, steep]).unwrap(), eps).unwrap();
        let (u, v) = (field_from(&g, seed), field_from(&g, seed ^ 0x9e37));
        let a = u.inner(&op.apply(&v));
        let b = op.apply(&u).inner(&v);
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn crank_nicolson_preserves_norm(seed in any::<u64>(), eps in 0.05f64..0.5, factor in 0.01f64..0.2) {
        let g = Grid2D::square(16, 3.0).unwrap();
        let op = DiracOperator::new(&g, &DomainWall::tanh(), eps).unwrap();
        let dt = eps * factor;
        let mut cn = CrankNicolson::new(&op, dt, GmresConfig::default());
        let u = field_from(&g, seed);
        let v = cn.step(&u, dt).unwrap();
        prop_assert!((v.norm() - u.norm()).abs() <= 1e-10 * u.norm());
    }

    #[test]
    fn snapshot_round_trip(seed in any::<u64>(), eps in 0.01f64..1.0, t in 0.0f64..10.0) {
        let g = Grid2D::new(8, 16, 1.5, 2.5).unwrap();
        let mut f = field_from(&g, seed);
        f.time = t;
        let (h, back) = decode_snapshot(&encode_snapshot(&f, eps)).unwrap();
        prop_assert_eq!(h.epsilon, eps);
        prop_assert_eq!(back.time, t);
        prop_assert_eq!(back.psi, f.psi);
    }

    #[test]
    fn rotation_inverts(theta in -10.0f64..10.0, x in -5.0f64..5.0, y in -5.0f64..5.0) {
        let b = rotate_back(theta, rotate(theta, [x, y]));
        prop_assert!((b[0] - x).abs() < 1e-12 && (b[1] - y).abs() < 1e-12);
    }

    #[test]
    fn spinor_split_reconstructs(theta in -7.0f64..7.0, a in prop::array::uniform4(-2.0f64..2.0)) {
        let alpha = [Complex64::new(a[0], a[1]), Complex64::new(a[2], a[3])];
        let (l1, l2) = split_spinor(alpha, theta);
        let (m, p) = (Complex64::from_polar(1.0, -theta / 2.0), Complex64::from_polar(1.0, theta / 2.0));
        let back = [m * (l1 + l2), p * (l2 - l1)];
        prop_assert!((back[0] - alpha[0]).norm() < 1e-12 && (back[1] - alpha[1]).norm() < 1e-12);
    }

    #[test]
    fn csv_numbers_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn config_echo_reparses(eps in prop::collection::vec(0.01f64..1.0, 1..4), n in 3u32..9, half in 1.0f64..10.0) {
        let mut cfg = ExperimentConfig::default();
        let list: Vec<String> = eps.iter().map(|e| num(*e)).collect();
        cfg.apply_override(&format!("time.epsilons = {}", list.join(", "))).unwrap();
        cfg.apply_override(&format!("grid.n = {}", 1usize << n)).unwrap();
        cfg.apply_override(&format!("grid.half_extent = {half}")).unwrap();
        let again = ExperimentConfig::parse(&cfg.echo()).unwrap();
        prop_assert_eq!(again.echo(), cfg.echo());
        prop_assert_eq!(again.epsilons, eps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn transport_kernel_and_inverse(seed in any::<u64>(), r in 0.5f64..3.0) {
        prop_assert!(kernel_annihilation(seed, 2, r).unwrap() <= 1e-10);
        prop_assert!(transport_round_trip(seed, 2, 64, r).unwrap() <= 1e-8);
    }

    #[test]
    fn circle_frame_identity(radius in 0.6f64..3.0, angle in -3.0f64..3.0) {
        let w = DomainWall::circle(radius);
        let traj = integrate_trajectory(&w, [radius * angle.cos(), radius * angle.sin()], 2.0, 0.01).unwrap();
        let res = hessian_frame_residual(&traj, &[[0.2, 0.1], [-0.5, 0.8], [1.0, -1.0]]).unwrap();
        prop_assert!(res <= 1e-8);
        let s = traj.samples();
        prop_assert!(s.windows(2).all(|p| p[1].big_theta >= p[0].big_theta));
    }

    #[test]
    fn normalized_tanh_walls(amp in 0.5f64..1.5, steep in 0.5f64..1.5) {
        let w = DomainWall::from_spec("tanh", &[amp, steep]).unwrap();
        let nw = normalize_wall(&w, 0.4).unwrap();
        let pts: Vec<[f64; 2]> = (0..9)
            .map(|k| {
                let x = -2.0 + 0.5 * k as f64;
                project_to_interface(&w, [x, amp * (steep * x).tanh()]).unwrap()
            })
            .collect();
        let (dg, dh) = normalized_condition(&nw, &pts).unwrap();
        prop_assert!(dg <= 1e-6 && dh <= 1e-6, "{} {}", dg, dh);
    }
}
