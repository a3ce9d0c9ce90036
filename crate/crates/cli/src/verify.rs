//! Reproduction of every acceptance check with a deterministic pass/fail
//! table. Runtime limits are enforced but elapsed times are kept out of the
//! table so that reruns print identical text.

use std::time::Instant;

use extphase::actionwave::{linear_time_slope, ActionWaveState, Boundary, Grid2};
use extphase::dynamics::{eom_rhs, hamiltonian_eval, inertial_parameters, HamiltonianSpec};
use extphase::relgas::{fokker_planck_residual, g_t, gt_argmax, velocity_cutoff_fraction, GasParams, MomentumGrid};
use extphase::resonance::{fit_inverse_width, standard_widths, synthetic_table, NoiseTarget, ResonanceClass};
use extphase::symmetry::{boost_finite, check_canonical, Branch};
use extphase::wigner::{
    coherence_limit_error, evolve_nonrel, glauber_uncertainty, hydrogen_corrections, kg_residual_plane_wave,
    phase_space_overlap, GlauberPacket, NonrelParams, SpatialGrid, WavePacket,
};
use extphase::{ExtendedState, Vec3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

pub const CRITERIA: u8 = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    /// Deterministic numeric evidence.
    pub detail: String,
    /// Wall-clock seconds; not part of the rendered table.
    pub elapsed_s: f64,
}

type Outcome = Result<(bool, String), CliError>;

fn timed(id: u8, title: &'static str, limit_s: Option<f64>, f: impl FnOnce() -> Outcome) -> Check {
    let start = Instant::now();
    let result = f();
    let elapsed_s = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match result {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(limit) = limit_s {
        if elapsed_s >= limit {
            passed = false;
            detail.push_str(&format!("; runtime limit {limit} s exceeded"));
        }
    }
    Check {
        id,
        title,
        passed,
        detail,
        elapsed_s,
    }
}

/// Runs a single criterion, `1..=16`.
pub fn run(id: u8) -> Check {
    match id {
        1 => timed(1, "canonical invariance of boosts", Some(1.0), canonical_invariance),
        2 => timed(2, "invariant Hamiltonian under boosts", None, invariant_hamiltonian),
        3 => timed(3, "inertial parameters on shell", None, inertial),
        4 => timed(4, "linear time law", Some(30.0), time_law),
        5 => timed(5, "characteristics equivalence", None, characteristics),
        6 => timed(6, "mass conservation", None, mass_conservation),
        7 => timed(7, "uncertainty relation", None, uncertainty),
        8 => timed(8, "overlap identity", None, overlap),
        9 => timed(9, "coherence limit", None, coherence),
        10 => timed(10, "Klein-Gordon residual", None, klein_gordon),
        11 => timed(11, "nonrelativistic limit", None, nonrelativistic),
        12 => timed(12, "hydrogen corrections", None, hydrogen),
        13 => timed(13, "velocity cutoff", None, cutoff),
        14 => timed(14, "gas energy maximum", None, gas_maximum),
        15 => timed(15, "Fokker-Planck stationarity", Some(10.0), fokker_planck),
        16 => timed(16, "inverse-width fit recovery", None, fit_recovery),
        _ => Check {
            id,
            title: "unknown criterion",
            passed: false,
            detail: format!("criteria are numbered 1..={CRITERIA}"),
            elapsed_s: 0.0,
        },
    }
}

pub fn run_all() -> Vec<Check> {
    (1..=CRITERIA).map(run).collect()
}

/// Fixed-width text table, one line per criterion.
pub fn render_table(checks: &[Check]) -> String {
    let mut s = format!("{:<3} {:<38} {:<6} {}\n", "id", "criterion", "result", "evidence");
    for c in checks {
        s.push_str(&format!(
            "{:<3} {:<38} {:<6} {}\n",
            c.id,
            c.title,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        ));
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    s.push_str(&format!("{passed}/{} criteria passed\n", checks.len()));
    s
}

fn random_velocity(rng: &mut ChaCha8Rng, max: f64) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm() <= 1.0 && v.norm() > 1e-3 {
            return v * max;
        }
    }
}

fn random_on_shell(rng: &mut ChaCha8Rng, m0: f64) -> ExtendedState {
    let mut coord = || rng.gen_range(-5.0..5.0);
    let (q0, q) = (coord(), Vec3::new(coord(), coord(), coord()));
    let p = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    ExtendedState::on_shell(q0, q, p, m0, 1.0)
}

fn canonical_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let v = random_velocity(&mut rng, 0.9);
        let r = check_canonical(move |x| boost_finite(x, &v, 1.0, Branch::Lorentz).expect("|V| < c"), 10)?;
        worst = worst.max(r.max_deviation);
    }
    Ok((worst <= 1e-10, format!("20 boosts |V| <= 0.9c, max bracket deviation {worst:.2e}")))
}

fn invariant_hamiltonian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let m0 = 1.0;
    let spec = HamiltonianSpec::free(m0, 1.0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = random_on_shell(&mut rng, m0);
        let v = random_velocity(&mut rng, 0.95);
        let h = hamiltonian_eval(&spec, &boost_finite(&x, &v, 1.0, Branch::Lorentz)?)?;
        worst = worst.max((h + m0).abs());
    }
    Ok((worst <= 1e-10, format!("100 states, max |H + m0c^2| {worst:.2e}")))
}

fn inertial() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst = 0.0f64;
    for m0 in [0.5, 1.0, 2.0] {
        for _ in 0..50 {
            let i = inertial_parameters(&random_on_shell(&mut rng, m0), 1.0)?;
            for (got, want) in i.iter().zip([-m0, m0, m0, m0]) {
                worst = worst.max((got - want).abs());
            }
        }
    }
    let rest = inertial_parameters(&ExtendedState::at_rest(1.0, 1.0), 1.0)?;
    let rest_ok = rest == [-1.0, 1.0, 1.0, 1.0];
    Ok((
        worst <= 1e-8 && rest_ok,
        format!("150 states, max |I - (-m0,m0,m0,m0)| {worst:.2e}; rest state {rest:?}"),
    ))
}

fn blob_slope(center: (f64, f64), p: f64) -> Result<(f64, f64), CliError> {
    let g = Grid2::new(256, 256, -6.4, 6.4, -6.4, 6.4)?;
    let e = (1.0 + p * p).sqrt();
    let st = ActionWaveState::gaussian(g, center, (0.4, 0.4), move |a, b| -e * a + p * b, 1.0, 1.0, Boundary::Periodic)?;
    let du = st.max_stable_step();
    let (_, rec) = st.evolve_recording(du, 100, 10, Default::default())?;
    let samples: Vec<(f64, f64)> = rec.iter().map(|(u, m)| (*u, m.mean_t)).collect();
    let fit = linear_time_slope(&samples)?;
    Ok((fit.slope, fit.residual_norm))
}

fn time_law() -> Outcome {
    let (rest, r1) = blob_slope((-2.0, 0.0), 0.0)?;
    let (boosted, r2) = blob_slope((-2.0, -1.0), 0.75)?;
    Ok((
        (rest - 1.0).abs() <= 0.01 && (boosted - 1.25).abs() <= 0.02,
        format!("256x256: rest slope {rest:.6} (res {r1:.1e}), boosted slope {boosted:.6} (res {r2:.1e})"),
    ))
}

/// Diverging on-shell action `-√((q0-T)² - (q∥-X)²)`, rays through the apex.
const APEX: (f64, f64) = (-10.0, -1.0);

fn diverging_action(q0: f64, q1: f64) -> f64 {
    let (a, b) = (q0 - APEX.0, q1 - APEX.1);
    -(a * a - b * b).sqrt()
}

fn trajectory_velocity(q0: f64, q1: f64) -> Result<(f64, f64), CliError> {
    let (a, b) = (q0 - APEX.0, q1 - APEX.1);
    let r = (a * a - b * b).sqrt();
    let x = ExtendedState::new(0.0, Vec3::zeros(), -a / r, Vec3::new(b / r, 0.0, 0.0));
    let v = eom_rhs(&HamiltonianSpec::free(1.0, 1.0), &x)?;
    Ok((v.dq0, v.dq.x))
}

fn characteristics() -> Outcome {
    let (center, w, u_end) = ((-0.5, 0.0), 0.25, 0.5);
    // density-weighted trajectory velocity by midpoint quadrature
    let m = 400;
    let h = 8.0 * w / m as f64;
    let (mut v0, mut v1, mut den) = (0.0, 0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            let a = center.0 - 4.0 * w + (i as f64 + 0.5) * h;
            let b = center.1 - 4.0 * w + (j as f64 + 0.5) * h;
            let n = (-0.5 * (((a - center.0) / w).powi(2) + ((b - center.1) / w).powi(2))).exp();
            let (e0, e1) = trajectory_velocity(a, b)?;
            den += n;
            v0 += n * e0;
            v1 += n * e1;
        }
    }
    let exact = (v0 / den, v1 / den);
    let speed = exact.0.hypot(exact.1);
    let mut errs = Vec::new();
    for delta in [0.1f64, 0.05, 0.025] {
        let n = (4.0 / delta).round() as usize;
        let g = Grid2::new(n, n, -2.0, 2.0, -2.0, 2.0)?;
        let st = ActionWaveState::gaussian(g, center, (w, w), diverging_action, 1.0, 1.0, Boundary::Periodic)?;
        let steps = (u_end / st.max_stable_step()).ceil() as usize;
        let a = st.spacetime_moments()?;
        let b = st.evolve(u_end / steps as f64, steps)?.spacetime_moments()?;
        let v = ((b.mean_q0 - a.mean_q0) / u_end, (b.mean_q1 - a.mean_q1) / u_end);
        errs.push((v.0 - exact.0).hypot(v.1 - exact.1) / speed);
    }
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    let ok = errs[1] < 0.02 && ratios.iter().all(|r| (1.8..2.2).contains(r));
    Ok((
        ok,
        format!(
            "relative error {:.2e}/{:.2e}/{:.2e} at delta 0.1/0.05/0.025, ratios {:.3}/{:.3}",
            errs[0], errs[1], errs[2], ratios[0], ratios[1]
        ),
    ))
}

fn mass_conservation() -> Outcome {
    let g = Grid2::new(64, 64, -1.6, 1.6, -1.6, 1.6)?;
    let mut worst = 0.0f64;
    for (boundary, p) in [(Boundary::Periodic, 0.75f64), (Boundary::Reflecting, -0.4)] {
        let e = (1.0 + p * p).sqrt();
        let st = ActionWaveState::gaussian(g, (0.2, -0.3), (0.3, 0.3), move |a, b| -e * a + p * b, 1.0, 1.0, boundary)?;
        let end = st.evolve(st.max_stable_step(), 1000)?;
        worst = worst.max((end.total_mass() - st.total_mass()).abs() / st.total_mass());
    }
    Ok((worst <= 1e-8, format!("1000 steps, periodic and reflecting, max relative drift {worst:.2e}")))
}

fn uncertainty() -> Outcome {
    let mut worst = 0.0f64;
    for omega in [0.5, 1.0, 2.0] {
        for sigma in [0.5, 1.0, 2.0] {
            let u = glauber_uncertainty(&GlauberPacket::new(0.3, -1.1, omega, sigma, 1.0)?)?;
            worst = worst.max((u.product - sigma / 2.0).abs());
        }
    }
    Ok((worst <= 1e-8, format!("9 packets, max |dE dt - sigma/2| {worst:.2e}")))
}

fn overlap() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let grid = SpatialGrid::centered(256, 0.0, 0.1)?;
    let packet = |rng: &mut ChaCha8Rng| -> Result<WavePacket, CliError> {
        let chi = GlauberPacket::new(rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..-0.5), rng.gen_range(0.5..2.0), 1.0, 1.0)?;
        Ok(WavePacket::gaussian(chi, grid, rng.gen_range(-1.5..1.5), rng.gen_range(0.6..1.5), rng.gen_range(-1.0..1.0), 1.0)?)
    };
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (a, b) = (packet(&mut rng)?, packet(&mut rng)?);
        worst = worst.max(phase_space_overlap(&a, &b)?.relative_gap());
    }
    Ok((worst <= 1e-6, format!("10 Gaussian pairs, max relative gap {worst:.2e}")))
}

fn coherence() -> Outcome {
    let n = |x: [f64; 2]| (-(x[0] * x[0]) - 0.5 * x[1] * x[1]).exp();
    let s = |x: [f64; 2]| -1.3 * x[0] + 0.6 * x[1] + 0.2 * x[0] * x[1] + 0.1 * x[1].powi(3);
    let grad = |x: [f64; 2]| [-1.3 + 0.2 * x[1], 0.6 + 0.2 * x[0] + 0.3 * x[1] * x[1]];
    let (q, k) = ([0.2, 0.4], [0.7, -1.1]);
    let e: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|sg| coherence_limit_error(n, s, grad, q, k, *sg)).collect();
    let ratios = [e[0] / e[1], e[1] / e[2]];
    let order = ratios.map(f64::log2);
    let ok = ratios.iter().all(|r| (r - 4.0).abs() < 0.1);
    Ok((ok, format!("error ratios {:.4}/{:.4}, observed order {:.3}/{:.3}", ratios[0], ratios[1], order[0], order[1])))
}

fn klein_gordon() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let (mut on, mut off) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (m0, p, amp): (f64, f64, f64) = (rng.gen_range(0.5..2.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.1..2.0));
        let p0 = -(m0 * m0 + p * p).sqrt();
        on = on.max(kg_residual_plane_wave(p0, p, amp, m0, 1.0).abs());
        let q0 = p0 * rng.gen_range(1.05..2.0);
        let expected = (q0 * q0 - p * p - m0 * m0) * amp;
        off = off.max((kg_residual_plane_wave(q0, p, amp, m0, 1.0) - expected).abs() / expected.abs().max(1.0));
    }
    let example = kg_residual_plane_wave(-2.0, 1.0, 1.0, 1.0, 1.0);
    Ok((
        on <= 1e-12 && off <= 1e-15 && example == 2.0,
        format!("on shell max {on:.2e}; off shell max rel gap {off:.2e}; (p0,p)=(-2,1) gives {example}"),
    ))
}

fn width(psi: &[Complex64], g: &SpatialGrid) -> f64 {
    let q = g.points();
    let m: f64 = psi.iter().zip(&q).map(|(z, x)| z.norm_sqr() * x).sum::<f64>() * g.dx;
    let v: f64 = psi.iter().zip(&q).map(|(z, x)| z.norm_sqr() * (x - m).powi(2)).sum::<f64>() * g.dx;
    v.sqrt()
}

fn nonrelativistic() -> Outcome {
    let g = SpatialGrid::centered(1024, 0.0, 0.1)?;
    let sigma = 1.0;
    let wp = WavePacket::gaussian(GlauberPacket::new(0.0, -1.0, 1.0, sigma, 1.0)?, g, 0.0, 1.0, 0.0, 1.0)?;
    let free = NonrelParams {
        m_x: 1.0,
        mean_p2: 0.0,
        sigma,
        c: f64::INFINITY,
    };
    let traj = evolve_nonrel(&wp.psi, g.dx, &free, 5.0, 10)?;
    let mut width_err = 0.0f64;
    for (s, psi) in traj.iter().enumerate() {
        let t = 0.5 * s as f64;
        let exact = (1.0 + (sigma * t / 2.0).powi(2)).sqrt();
        width_err = width_err.max((width(psi, &g) / exact - 1.0).abs());
    }
    let slow = NonrelParams {
        mean_p2: 0.2,
        c: 1.0,
        ..free
    };
    let corrected = evolve_nonrel(&wp.psi, g.dx, &slow, 5.0, 10)?;
    let w0 = width(&wp.psi, &g);
    let mut rate_err = 0.0f64;
    for s in 1..=10 {
        let (wu, wc) = (width(&traj[s], &g), width(&corrected[s], &g));
        rate_err = rate_err.max((((wc * wc - w0 * w0) / (wu * wu - w0 * w0)).sqrt() - 0.9).abs());
    }
    Ok((
        width_err < 0.005 && rate_err <= 1e-6,
        format!("1024 points, t in [0,5]: max relative width error {width_err:.2e}; rate factor error {rate_err:.2e}"),
    ))
}

fn hydrogen() -> Outcome {
    let alpha = 7.297_352_569_3e-3;
    let r = hydrogen_corrections(1.0, 5.0, alpha);
    let a2 = alpha * alpha;
    let ok = r.h_c == -a2 / 4.0 && r.h1 == -5.0 * a2 / 8.0 && r.dirac_ref == -a2 / 8.0;
    Ok((
        ok,
        format!(
            "H_c {:.6e}, H1 {:.6e}, sum {:.6e} a.u. vs Dirac reference {:.6e}",
            r.h_c,
            r.h1,
            r.h_c + r.h1,
            r.dirac_ref
        ),
    ))
}

fn cutoff() -> Outcome {
    let f = velocity_cutoff_fraction(3.0, 1.0, 1.0)?;
    let gap = (f - 8f64.sqrt() / 3.0).abs();
    Ok((gap <= 1e-10 && (f - 0.94).abs() < 0.005, format!("v_max/c = {f:.10} at 3 m0c^2 (gap {gap:.1e})")))
}

fn gas_maximum() -> Outcome {
    let star = gt_argmax(1.0, 1.0, 1.0)?;
    // brute-force oracle: dense scan of g_T on (1, 20)
    let (mut best, mut best_e) = (f64::NEG_INFINITY, 0.0);
    for k in 1..=190_000 {
        let e = 1.0 + k as f64 * 1e-4;
        let v = g_t(e, 1.0, 1.0, 1.0);
        if v > best {
            best = v;
            best_e = e;
        }
    }
    let ok = (star - 3.11).abs() <= 0.02 && (star - best_e).abs() <= 2e-4 && (star - 3.0).abs() / 3.0 <= 0.05;
    Ok((ok, format!("argmax {star:.6} m0c^2, dense scan {best_e:.4}, {:.2}% from 3", 100.0 * (star - 3.0) / 3.0)))
}

fn fokker_planck() -> Outcome {
    let r = fokker_planck_residual(&GasParams::default(), &MomentumGrid { n: 64, half_width: 8.0 }, 1.0)?;
    let rel = r.relative();
    Ok((rel <= 1e-6, format!("64^3 grid, interior residual / term scale {rel:.2e}")))
}

fn fit_recovery() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for (c, class) in [(1222.0, ResonanceClass::Meson), (1487.0, ResonanceClass::Baryon)] {
        let exact = fit_inverse_width(&synthetic_table(2.1, c, &standard_widths(), 0.0, NoiseTarget::Width, 0, class)?, None)?;
        let gap = (exact.a - 2.1).abs().max((exact.c - c).abs());
        let (mut inside, mut sum, mut se) = (0usize, 0.0, 0.0);
        for seed in 0..100 {
            let recs = synthetic_table(2.1, c, &standard_widths(), 0.01, NoiseTarget::Width, seed, class)?;
            let f = fit_inverse_width(&recs, None)?;
            if (f.c - c).abs() <= 3.0 * f.c_std_err {
                inside += 1;
            }
            sum += f.c;
            se += f.c_std_err;
        }
        let ensemble_z = (sum / 100.0 - c) / (se / 100.0 / 10.0);
        ok &= gap <= 1e-9 && inside >= 95 && ensemble_z.abs() <= 3.0;
        detail.push(format!("C={c}: noiseless gap {gap:.1e}, {inside}/100 seeds within 3 SE, ensemble z {ensemble_z:.2}"));
    }
    Ok((ok, detail.join("; ")))
}

/// Ratio-noise variant of the noisy fit: the `Γ = 10` point dominates the
/// design and OLS standard errors undercover. Reported, not asserted.
pub fn ratio_noise_coverage(c: f64) -> Result<(usize, f64), CliError> {
    let (mut inside, mut worst) = (0usize, 0.0f64);
    for seed in 0..100 {
        let recs = synthetic_table(2.1, c, &standard_widths(), 0.01, NoiseTarget::Ratio, seed, ResonanceClass::Meson)?;
        let f = fit_inverse_width(&recs, None)?;
        let z = (f.c - c).abs() / f.c_std_err;
        if z <= 3.0 {
            inside += 1;
        }
        worst = worst.max(z);
    }
    Ok((inside, worst))
}
