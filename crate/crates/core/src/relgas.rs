//! Nondegenerate relativistic gas in equilibrium.
//!
//! `k_B` is absorbed into the temperature, so `T` is an energy. The
//! single-particle energy is `ε_p = √(p²c² + m0²c⁴)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{golden_section_max, integrate, integrate_to_infinity, pairwise_sum, trapezoid};
use crate::par::{self, Exec};
use crate::phase::Vec3;

const REL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    pub mu: f64,
    /// Temperature in energy units.
    pub t: f64,
    pub m0: f64,
    pub c: f64,
    /// Confinement volume.
    pub volume: f64,
    /// Phase-cell constant.
    pub h: f64,
}

impl Default for GasParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            t: 1.0,
            m0: 1.0,
            c: 1.0,
            volume: 1.0,
            h: 1.0,
        }
    }
}

impl GasParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("T", self.t), ("m0", self.m0), ("c", self.c), ("V", self.volume), ("h", self.h)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.mu.is_finite() {
            return Err(Error::domain("mu must be finite"));
        }
        Ok(())
    }

    pub fn rest_energy(&self) -> f64 {
        self.m0 * self.c * self.c
    }

    /// `ε_p` for momentum magnitude `p`.
    pub fn energy(&self, p: f64) -> f64 {
        let mc = self.m0 * self.c;
        self.c * (p * p + mc * mc).sqrt()
    }
}

/// `f = (2/h³) exp((μ - ε_p)/T)`.
pub fn equilibrium_f(params: &GasParams, p: &Vec3) -> f64 {
    equilibrium_f_abs(params, p.norm())
}

fn equilibrium_f_abs(params: &GasParams, p: f64) -> f64 {
    2.0 / params.h.powi(3) * ((params.mu - params.energy(p)) / params.t).exp()
}

/// `g_T(ε) = ε² √(ε² - m0²c⁴) e^{-ε/T}`.
pub fn g_t(eps: f64, t: f64, m0: f64, c: f64) -> f64 {
    let rest = m0 * c * c;
    if eps <= rest {
        return 0.0;
    }
    eps * eps * (eps * eps - rest * rest).sqrt() * (-eps / t).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermoIntegrals {
    /// Particle number.
    pub n: f64,
    /// Total energy from the momentum integral.
    pub e: f64,
    /// Total energy from the `g_T` integral.
    pub e_gt: f64,
}

impl ThermoIntegrals {
    pub fn route_gap(&self) -> f64 {
        if self.e == 0.0 && self.e_gt == 0.0 {
            0.0
        } else {
            (self.e - self.e_gt).abs() / self.e.abs().max(self.e_gt.abs())
        }
    }
}

/// `N` and `E` up to the energy cutoff `eps_max` (`f64::INFINITY` for none).
pub fn thermo_integrals(params: &GasParams, eps_max: f64) -> Result<ThermoIntegrals> {
    params.validate()?;
    let rest = params.rest_energy();
    if !(eps_max >= rest) {
        return Err(Error::domain(format!(
            "energy cutoff {eps_max} is below the rest energy {rest}"
        )));
    }
    if eps_max == rest {
        return Ok(ThermoIntegrals { n: 0.0, e: 0.0, e_gt: 0.0 });
    }
    let pref = 2.0 * params.volume / params.h.powi(3) * 4.0 * PI;
    let weight = |p: f64| p * p * ((params.mu - params.energy(p)) / params.t).exp();
    let (n, e) = if eps_max.is_infinite() {
        let scale = params.t.max(rest) / params.c;
        let n = integrate_to_infinity(weight, 0.0, scale, REL_TOL, 0.0)?.value;
        let e = integrate_to_infinity(|p| weight(p) * params.energy(p), 0.0, scale, REL_TOL, 0.0)?.value;
        (n, e)
    } else {
        let p_max = (eps_max * eps_max - rest * rest).sqrt() / params.c;
        let n = integrate(weight, 0.0, p_max, REL_TOL, 0.0)?.value;
        let e = integrate(|p| weight(p) * params.energy(p), 0.0, p_max, REL_TOL, 0.0)?.value;
        (n, e)
    };
    let g = |eps: f64| g_t(eps, params.t, params.m0, params.c);
    let gt = if eps_max.is_infinite() {
        integrate_to_infinity(g, rest, rest, REL_TOL, 0.0)?.value
    } else {
        integrate(g, rest, eps_max, REL_TOL, 0.0)?.value
    };
    let e_gt = 8.0 * PI * params.volume / (params.h * params.c).powi(3) * (params.mu / params.t).exp() * gt;
    Ok(ThermoIntegrals {
        n: pref * n,
        e: pref * e,
        e_gt,
    })
}

/// Energy of the maximum of `g_T` on `(m0c², 20m0c²)`.
pub fn gt_argmax(t: f64, m0: f64, c: f64) -> Result<f64> {
    if !(t > 0.0 && m0 > 0.0 && c > 0.0) {
        return Err(Error::domain("T, m0 and c must be positive"));
    }
    let rest = m0 * c * c;
    Ok(golden_section_max(|e| g_t(e, t, m0, c), rest, 20.0 * rest, 1e-8 * rest))
}

/// `v_max/c = √(1 - (m0c²/ε_max)²)`.
pub fn velocity_cutoff_fraction(eps_max: f64, m0: f64, c: f64) -> Result<f64> {
    let rest = m0 * c * c;
    if !(eps_max >= rest) {
        return Err(Error::domain(format!(
            "energy cutoff {eps_max} is below the rest energy {rest}"
        )));
    }
    let r = rest / eps_max;
    Ok((1.0 - r * r).sqrt())
}

/// `√(T/m0)`.
pub fn sound_velocity(t: f64, m0: f64) -> f64 {
    (t / m0).sqrt()
}

/// Cubic cell-centered momentum grid over `[-L, L]³`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumGrid {
    pub n: usize,
    pub half_width: f64,
}

impl MomentumGrid {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FpScheme {
    /// Face fluxes `T e^{-ε/T} ∇(e^{ε/T} f)`, which vanish on the
    /// equilibrium to round-off.
    #[default]
    WellBalanced,
    /// Central differences of the drift and Laplacian terms separately.
    Central,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FokkerPlanckReport {
    /// `γ ∇_p·((p/m) f + T ∇_p f)` at every grid point; zero on the boundary
    /// layer.
    pub residual: Vec<f64>,
    pub max_interior_residual: f64,
    /// `max |γ ∇_p·(p f / m)|` over the interior.
    pub term_scale: f64,
}

impl FokkerPlanckReport {
    pub fn relative(&self) -> f64 {
        if self.term_scale == 0.0 {
            0.0
        } else {
            self.max_interior_residual / self.term_scale
        }
    }
}

/// Right-hand side of the homogeneous Fokker–Planck equation with
/// `m = ε_p/c²`, evaluated for the equilibrium distribution.
pub fn fokker_planck_residual(params: &GasParams, grid: &MomentumGrid, gamma: f64) -> Result<FokkerPlanckReport> {
    fokker_planck_residual_of(params, grid, gamma, |p| equilibrium_f(params, p), FpScheme::default(), Exec::default())
}

/// Same as [`fokker_planck_residual`] for an arbitrary homogeneous `f`.
pub fn fokker_planck_residual_of<F>(
    params: &GasParams,
    grid: &MomentumGrid,
    gamma: f64,
    f: F,
    scheme: FpScheme,
    exec: Exec,
) -> Result<FokkerPlanckReport>
where
    F: Fn(&Vec3) -> f64 + Sync + Send,
{
    params.validate()?;
    if grid.n < 3 || !(grid.half_width > 0.0) {
        return Err(Error::Config("momentum grid needs n ≥ 3 and a positive extent".into()));
    }
    let n = grid.n;
    let h = grid.spacing();
    let t = params.t;
    let c2 = params.c * params.c;
    let point = |i: usize, j: usize, k: usize| Vec3::new(grid.coord(i), grid.coord(j), grid.coord(k));
    let eps = |p: &Vec3| params.energy(p.norm());

    let values: Vec<f64> = par::map_indices(n, exec, |i| {
        let mut slab = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                slab.push(f(&point(i, j, k)));
            }
        }
        slab
    })
    .concat();

    let at = |i: usize, j: usize, k: usize| values[grid.index(i, j, k)];
    let unit = [Vec3::x(), Vec3::y(), Vec3::z()];

    let rows = par::map_indices(n, exec, |i| {
        let mut res = vec![0.0; n * n];
        let mut drift = vec![0.0; n * n];
        if i == 0 || i == n - 1 {
            return (res, drift);
        }
        for j in 1..n - 1 {
            for k in 1..n - 1 {
                let idx = [i, j, k];
                let p = point(i, j, k);
                let f0 = at(i, j, k);
                let mut total = 0.0;
                let mut dterm = 0.0;
                for (d, e) in unit.iter().enumerate() {
                    let mut up = idx;
                    up[d] += 1;
                    let mut dn = idx;
                    dn[d] -= 1;
                    let (fp, fm) = (at(up[0], up[1], up[2]), at(dn[0], dn[1], dn[2]));
                    let (pp, pm) = (p + e * h, p - e * h);
                    // drift flux component c²p_d f/ε on neighbors
                    let vp = c2 * pp[d] / eps(&pp) * fp;
                    let vm = c2 * pm[d] / eps(&pm) * fm;
                    dterm += (vp - vm) / (2.0 * h);
                    total += match scheme {
                        FpScheme::Central => (vp - vm) / (2.0 * h) + t * (fp - 2.0 * f0 + fm) / (h * h),
                        FpScheme::WellBalanced => {
                            let e0 = eps(&p);
                            let (ep, em) = (eps(&pp), eps(&pm));
                            let face_hi = eps(&(p + e * (0.5 * h)));
                            let face_lo = eps(&(p - e * (0.5 * h)));
                            let j_hi = t * (((ep - face_hi) / t).exp() * fp - ((e0 - face_hi) / t).exp() * f0) / h;
                            let j_lo = t * (((e0 - face_lo) / t).exp() * f0 - ((em - face_lo) / t).exp() * fm) / h;
                            (j_hi - j_lo) / h
                        }
                    };
                }
                res[j * n + k] = gamma * total;
                drift[j * n + k] = gamma * dterm;
            }
        }
        (res, drift)
    });

    let mut residual = Vec::with_capacity(grid.len());
    let mut max_res = 0.0f64;
    let mut scale = 0.0f64;
    for (r, d) in rows {
        max_res = r.iter().fold(max_res, |m, v| m.max(v.abs()));
        scale = d.iter().fold(scale, |m, v| m.max(v.abs()));
        residual.extend(r);
    }
    Ok(FokkerPlanckReport {
        residual,
        max_interior_residual: max_res,
        term_scale: scale,
    })
}

/// Fourier coefficients `f̃_n = ∫_{-Δ}^{Δ} e^{inπX/Δ} f(X) dX`,
/// `n = -n_max..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    pub delta: f64,
    pub n_max: usize,
    pub coeffs: Vec<Complex64>,
}

impl FourierSeries {
    pub fn coeff(&self, n: i64) -> Complex64 {
        self.coeffs[(n + self.n_max as i64) as usize]
    }

    /// `(1/2Δ) Σ_n e^{-inπX/Δ} f̃_n`.
    pub fn reconstruct(&self, x: f64) -> Complex64 {
        let terms: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, f)| {
                let n = idx as f64 - self.n_max as f64;
                f * Complex64::new(0.0, -n * PI * x / self.delta).exp()
            })
            .collect();
        let re: Vec<f64> = terms.iter().map(|z| z.re).collect();
        let im: Vec<f64> = terms.iter().map(|z| z.im).collect();
        Complex64::new(pairwise_sum(&re), pairwise_sum(&im)) / (2.0 * self.delta)
    }

    /// `(1/2Δ) Σ |f̃_n|²`.
    pub fn energy(&self) -> f64 {
        let sq: Vec<f64> = self.coeffs.iter().map(|z| z.norm_sqr()).collect();
        pairwise_sum(&sq) / (2.0 * self.delta)
    }
}

/// Coefficients from uniform samples on `[-Δ, Δ]`, endpoints included, by
/// the composite trapezoid rule.
pub fn finite_fourier(samples: &[f64], delta: f64, n_max: usize) -> Result<FourierSeries> {
    if samples.len() < 2 {
        return Err(Error::Config("need at least two samples".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::domain(format!("half-width must be positive, got {delta}")));
    }
    let m = samples.len() - 1;
    let dx = 2.0 * delta / m as f64;
    let coeffs = (-(n_max as i64)..=n_max as i64)
        .map(|n| {
            let arg = |j: usize| n as f64 * PI * (-delta + j as f64 * dx) / delta;
            let re: Vec<f64> = samples.iter().enumerate().map(|(j, f)| f * arg(j).cos()).collect();
            let im: Vec<f64> = samples.iter().enumerate().map(|(j, f)| f * arg(j).sin()).collect();
            Complex64::new(trapezoid(&re, dx), trapezoid(&im, dx))
        })
        .collect();
    Ok(FourierSeries { delta, n_max, coeffs })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub t: f64,
    pub mu: f64,
    pub n: f64,
    pub e: f64,
    pub eps_star: f64,
}

/// Thermodynamic sweep over the `(T, μ)` product, `T` outermost.
pub fn sweep(base: &GasParams, temps: &[f64], mus: &[f64], eps_max: f64, exec: Exec) -> Result<Vec<SweepRow>> {
    let points: Vec<(f64, f64)> = temps.iter().flat_map(|t| mus.iter().map(move |m| (*t, *m))).collect();
    par::map_indices(points.len(), exec, |i| {
        let (t, mu) = points[i];
        let p = GasParams { t, mu, ..*base };
        let th = thermo_integrals(&p, eps_max)?;
        Ok(SweepRow {
            t,
            mu,
            n: th.n,
            e: th.e,
            eps_star: gt_argmax(t, p.m0, p.c)?,
        })
    })
    .into_iter()
    .collect()
}

/// Writes `T,mu,N,E,eps_star` rows.
pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["T", "mu", "N", "E", "eps_star"])?;
    for r in rows {
        wr.write_record([r.t, r.mu, r.n, r.e, r.eps_star].map(|v| v.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_examples() {
        let p = GasParams::default();
        assert!((equilibrium_f(&p, &Vec3::zeros()) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        let q = Vec3::new(0.3, -1.2, 0.4);
        let ratio = equilibrium_f(&p, &q) / equilibrium_f(&p, &Vec3::zeros());
        assert!((ratio - (1.0 - p.energy(q.norm())).exp()).abs() < 1e-15);
        assert!(equilibrium_f(&p, &Vec3::new(1e3, 0.0, 0.0)) < 1e-300);
    }

    #[test]
    fn cutoff_examples() {
        assert!((velocity_cutoff_fraction(3.0, 1.0, 1.0).unwrap() - 8f64.sqrt() / 3.0).abs() < 1e-15);
        assert_eq!(velocity_cutoff_fraction(1.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(velocity_cutoff_fraction(f64::INFINITY, 1.0, 1.0).unwrap(), 1.0);
        assert!(velocity_cutoff_fraction(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn empty_range_and_validation() {
        let p = GasParams::default();
        let th = thermo_integrals(&p, 1.0).unwrap();
        assert_eq!((th.n, th.e), (0.0, 0.0));
        assert!(thermo_integrals(&p, 0.9).is_err());
        assert!(thermo_integrals(&GasParams { t: 0.0, ..p }, 2.0).is_err());
    }

    #[test]
    fn sound_velocity_at_rest_energy_temperature() {
        assert_eq!(sound_velocity(1.0, 1.0), 1.0);
        let (m0, c) = (2.0, 3.0);
        assert_eq!(sound_velocity(m0 * c * c, m0), c);
    }

    #[test]
    fn cosine_coefficients() {
        let delta = 2.0;
        let m = 256;
        let xs: Vec<f64> = (0..=m).map(|j| -delta + 2.0 * delta * j as f64 / m as f64).collect();
        let samples: Vec<f64> = xs.iter().map(|x| (PI * x / delta).cos()).collect();
        let s = finite_fourier(&samples, delta, 5).unwrap();
        for n in -5..=5i64 {
            let expected = if n.abs() == 1 { delta } else { 0.0 };
            assert!((s.coeff(n) - Complex64::new(expected, 0.0)).norm() <= 1e-10, "n = {n}");
        }
        for x in [-1.7, 0.0, 0.4, 1.9] {
            assert!((s.reconstruct(x).re - (PI * x / delta).cos()).abs() < 1e-8);
        }
    }
}
