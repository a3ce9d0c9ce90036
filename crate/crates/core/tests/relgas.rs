use std::f64::consts::PI;
use std::time::Instant;

use extphase::relgas::*;
use extphase::{Exec, Vec3};
use proptest::prelude::*;

/// Root of `d/dε ln g_T = 2/ε + ε/(ε² - 1) - 1/T` by bisection (m0 = c = 1).
fn argmax_oracle(t: f64) -> f64 {
    let d = |e: f64| 2.0 / e + e / (e * e - 1.0) - 1.0 / t;
    let (mut lo, mut hi) = (1.0 + 1e-12, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if d(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn energy_routes_agree_and_match_bessel_values() {
    let p = GasParams::default();
    let th = thermo_integrals(&p, f64::INFINITY).unwrap();
    assert!(th.route_gap() <= 1e-7);
    // 8π K2(1) and 8π (3 K2(1) + K1(1))
    assert!((th.n / 40.83665557775363 - 1.0).abs() < 1e-8);
    assert!((th.e / 137.6375453935025 - 1.0).abs() < 1e-8);
}

#[test]
fn chemical_potential_scaling() {
    for t in [0.5, 1.0, 2.0] {
        let a = thermo_integrals(&GasParams { t, ..Default::default() }, f64::INFINITY).unwrap();
        let b = thermo_integrals(&GasParams { t, mu: 1.0, ..Default::default() }, f64::INFINITY).unwrap();
        assert!((b.n / a.n - (1.0 / t).exp()).abs() < 1e-9);
    }
}

#[test]
fn cutoff_energy_fraction_is_pinned() {
    let p = GasParams::default();
    let cut = thermo_integrals(&p, 3.0).unwrap();
    let all = thermo_integrals(&p, f64::INFINITY).unwrap();
    assert!(cut.route_gap() <= 1e-7);
    assert!((cut.e - 42.58248492046023).abs() < 1e-6);
    assert!((cut.e / all.e - 0.30938131596809504).abs() < 1e-9);
}

#[test]
fn gt_maximum() {
    let e = gt_argmax(1.0, 1.0, 1.0).unwrap();
    assert!((e - argmax_oracle(1.0)).abs() < 1e-7);
    assert!((e - 3.1149075414767555).abs() < 1e-7);
    assert!((e - 3.11).abs() <= 0.02);
    assert!((e - 3.0).abs() / 3.0 <= 0.05);
    let seq: Vec<f64> = [1.0, 0.5, 0.1].iter().map(|t| gt_argmax(*t, 1.0, 1.0).unwrap()).collect();
    assert!(seq[0] > seq[1] && seq[1] > seq[2] && seq[2] > 1.0);
    assert!((seq[2] - 1.0634754275212823).abs() < 1e-7);
    assert!((gt_argmax(2.0, 1.0, 1.0).unwrap() - 6.056060306305989).abs() < 1e-7);
}

#[test]
fn equilibrium_is_stationary_on_fine_grid() {
    let p = GasParams::default();
    let grid = MomentumGrid { n: 64, half_width: 8.0 };
    let start = Instant::now();
    let r = fokker_planck_residual(&p, &grid, 0.7).unwrap();
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert!(r.term_scale > 0.0);
    assert!(r.relative() <= 1e-6, "{}", r.relative());
}

#[test]
fn zero_friction_gives_zero_residual() {
    let p = GasParams::default();
    let grid = MomentumGrid { n: 12, half_width: 4.0 };
    let r = fokker_planck_residual(&p, &grid, 0.0).unwrap();
    assert!(r.residual.iter().all(|v| *v == 0.0));
}

#[test]
fn perturbation_drives_analytic_residual() {
    let p = GasParams { t: 1.3, ..Default::default() };
    let (a, gamma) = (0.1, 0.5);
    let grid = MomentumGrid { n: 40, half_width: 6.0 };
    let f = |q: &Vec3| equilibrium_f(&p, q) * (1.0 + a * q.x);
    let r = fokker_planck_residual_of(&p, &grid, gamma, f, FpScheme::WellBalanced, Exec::default()).unwrap();
    // γ T a ∂1 f_eq = -γ a c² p1 f_eq / ε
    let n = grid.n;
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            for k in 1..n - 1 {
                let q = Vec3::new(grid.coord(i), grid.coord(j), grid.coord(k));
                let exact = -gamma * a * q.x * equilibrium_f(&p, &q) / p.energy(q.norm());
                worst = worst.max((r.residual[(i * n + j) * n + k] - exact).abs());
                peak = peak.max(exact.abs());
            }
        }
    }
    assert!(worst <= 1e-2 * peak, "{worst} vs {peak}");
    let rel = r.relative();
    assert!(rel > 0.01 && rel < 1.0, "{rel}");
}

#[test]
fn central_scheme_is_second_order() {
    let p = GasParams::default();
    let res: Vec<f64> = [32usize, 64]
        .iter()
        .map(|n| {
            let grid = MomentumGrid { n: *n, half_width: 6.0 };
            let r = fokker_planck_residual_of(&p, &grid, 1.0, |q| equilibrium_f(&p, q), FpScheme::Central, Exec::default())
                .unwrap();
            r.relative()
        })
        .collect();
    let ratio = res[0] / res[1];
    assert!(ratio > 3.0 && ratio < 5.0, "{res:?}");
}

#[test]
fn fp_residual_is_deterministic_across_execution_modes() {
    let p = GasParams::default();
    let grid = MomentumGrid { n: 20, half_width: 5.0 };
    let f = |q: &Vec3| equilibrium_f(&p, q) * (1.0 + 0.2 * q.y);
    let a = fokker_planck_residual_of(&p, &grid, 1.0, f, FpScheme::WellBalanced, Exec::Sequential).unwrap();
    let b = fokker_planck_residual_of(&p, &grid, 1.0, f, FpScheme::WellBalanced, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn parseval_for_gaussian() {
    let delta = 6.0;
    let m = 2048;
    let f = |x: f64| (-x * x / 2.0).exp();
    let samples: Vec<f64> = (0..=m).map(|j| f(-delta + 2.0 * delta * j as f64 / m as f64)).collect();
    let s = finite_fourier(&samples, delta, 64).unwrap();
    let direct = PI.sqrt();
    assert!((s.energy() - direct).abs() < 1e-6);
    for x in [-2.0, 0.0, 0.7, 3.1] {
        assert!((s.reconstruct(x).re - f(x)).abs() < 1e-8);
    }
}

#[test]
fn band_limited_reconstruction() {
    let delta = 1.5;
    let m = 128;
    let f = |x: f64| 0.3 + (2.0 * PI * x / delta).sin() - 0.4 * (5.0 * PI * x / delta).cos();
    let samples: Vec<f64> = (0..=m).map(|j| f(-delta + 2.0 * delta * j as f64 / m as f64)).collect();
    let s = finite_fourier(&samples, delta, 8).unwrap();
    for j in 0..50 {
        let x = -delta + 3.0 * j as f64 / 50.0;
        assert!((s.reconstruct(x).re - f(x)).abs() < 1e-8);
        assert!(s.reconstruct(x).im.abs() < 1e-8);
    }
}

#[test]
fn sweep_csv() {
    let rows = sweep(&GasParams::default(), &[0.5, 1.0], &[0.0, 0.5], f64::INFINITY, Exec::default()).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!((rows[2].t, rows[2].mu), (1.0, 0.0));
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("T,mu,N,E,eps_star\n"));
    assert_eq!(text.lines().count(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn argmax_increases_with_temperature(t in 0.1f64..1.9, dt in 0.01f64..0.1) {
        let a = gt_argmax(t, 1.0, 1.0).unwrap();
        let b = gt_argmax(t + dt, 1.0, 1.0).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn equilibrium_is_positive_and_decreasing(p1 in 0.0f64..20.0, dp in 0.001f64..5.0, t in 0.2f64..3.0) {
        let g = GasParams { t, ..Default::default() };
        let a = equilibrium_f(&g, &Vec3::new(p1, 0.0, 0.0));
        let b = equilibrium_f(&g, &Vec3::new(0.0, p1 + dp, 0.0));
        prop_assert!(a > 0.0 && b < a);
    }

    #[test]
    fn cutoff_fraction_in_unit_interval(e in 1.0f64..1e6) {
        let v = velocity_cutoff_fraction(e, 1.0, 1.0).unwrap();
        prop_assert!((0.0..1.0).contains(&v));
    }
}
