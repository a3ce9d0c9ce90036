//! Points of the extended phase space and the extended Poisson bracket.
//!
//! Time and energy enter as the canonical pair `q0 = c·t`, `p0 = -E/c`, so a
//! physical (positive energy) state has `p0 < 0`. Everything is in model
//! units; the defaults are `c = 1`, `m0 = 1`, `σ = 1`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Number of canonical coordinates, ordered `(q0, q1, q2, q3, p0, p1, p2, p3)`.
pub const DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedState {
    /// Time coordinate `c·t`.
    pub q0: f64,
    pub q: Vec3,
    /// Energy coordinate `-E/c`.
    pub p0: f64,
    pub p: Vec3,
    /// Universal time.
    pub u: f64,
}

impl ExtendedState {
    /// Arbitrary (possibly off-shell) state at universal time zero.
    pub fn new(q0: f64, q: Vec3, p0: f64, p: Vec3) -> Self {
        Self {
            q0,
            q,
            p0,
            p,
            u: 0.0,
        }
    }

    /// Positive-energy state on the mass shell `p0² - |p|² = m0²c²`.
    pub fn on_shell(q0: f64, q: Vec3, p: Vec3, m0: f64, c: f64) -> Self {
        let p0 = -(m0 * m0 * c * c + p.norm_squared()).sqrt();
        debug_assert!(p0 < 0.0);
        Self::new(q0, q, p0, p)
    }

    pub fn at_rest(m0: f64, c: f64) -> Self {
        Self::on_shell(0.0, Vec3::zeros(), Vec3::zeros(), m0, c)
    }

    pub fn with_u(mut self, u: f64) -> Self {
        self.u = u;
        self
    }

    /// Energy `E = -c·p0`.
    pub fn energy(&self, c: f64) -> f64 {
        -c * self.p0
    }

    pub fn is_physical(&self) -> bool {
        self.p0 < 0.0
    }

    pub fn is_timelike(&self) -> bool {
        self.p0 * self.p0 - self.p.norm_squared() > 0.0
    }

    pub fn to_array(&self) -> [f64; DIM] {
        [
            self.q0, self.q.x, self.q.y, self.q.z, self.p0, self.p.x, self.p.y, self.p.z,
        ]
    }

    pub fn from_array(x: [f64; DIM], u: f64) -> Self {
        Self {
            q0: x[0],
            q: Vec3::new(x[1], x[2], x[3]),
            p0: x[4],
            p: Vec3::new(x[5], x[6], x[7]),
            u,
        }
    }

    /// `max(|x_i|)` over the eight canonical coordinates.
    pub fn sup_norm(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Coordinate `i` in canonical order; `0..4` are positions, `4..8` momenta.
    pub fn coord(&self, i: usize) -> f64 {
        self.to_array()[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Units {
    /// Speed-of-light constant.
    pub c: f64,
    /// Phase-space action quantum.
    pub sigma: f64,
}

impl Default for Units {
    fn default() -> Self {
        Self { c: 1.0, sigma: 1.0 }
    }
}

impl Units {
    pub fn new(c: f64, sigma: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("c must be positive, got {c}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { c, sigma })
    }
}

/// Default finite-difference step `1e-5 · max(1, |x|∞)`.
pub fn default_step(x: &ExtendedState) -> f64 {
    1e-5 * x.sup_norm().max(1.0)
}

fn shifted(x: &ExtendedState, i: usize, h: f64) -> ExtendedState {
    let mut a = x.to_array();
    a[i] += h;
    ExtendedState::from_array(a, x.u)
}

fn checked<F: Fn(&ExtendedState) -> f64>(f: &F, x: &ExtendedState) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation {
            value: v,
            context: format!("{:?}", x.to_array()),
        })
    }
}

/// Central-difference gradient of `f` in canonical coordinate order.
pub fn gradient_numeric<F>(f: &F, x: &ExtendedState, h: f64) -> Result<[f64; DIM]>
where
    F: Fn(&ExtendedState) -> f64,
{
    let mut g = [0.0; DIM];
    for (i, gi) in g.iter_mut().enumerate() {
        let fp = checked(f, &shifted(x, i, h))?;
        let fm = checked(f, &shifted(x, i, -h))?;
        *gi = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Extended Poisson bracket `{f, g} = Σ_μ ∂f/∂q_μ ∂g/∂p_μ - ∂f/∂p_μ ∂g/∂q_μ`
/// by central differences with step `h`.
pub fn poisson_bracket_numeric<F, G>(f: F, g: G, x: &ExtendedState, h: f64) -> Result<f64>
where
    F: Fn(&ExtendedState) -> f64,
    G: Fn(&ExtendedState) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {h}")));
    }
    checked(&f, x)?;
    checked(&g, x)?;
    let df = gradient_numeric(&f, x, h)?;
    let dg = gradient_numeric(&g, x, h)?;
    Ok((0..4)
        .map(|mu| df[mu] * dg[mu + 4] - df[mu + 4] * dg[mu])
        .sum())
}

/// `p0² - |p|² - m0²c²`; zero on the mass shell.
pub fn mass_shell_residual(x: &ExtendedState, m0: f64, c: f64) -> f64 {
    x.p0 * x.p0 - x.p.norm_squared() - m0 * m0 * c * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng) -> ExtendedState {
        let mut a = [0.0; DIM];
        for v in a.iter_mut() {
            *v = rng.gen_range(-3.0..3.0);
        }
        ExtendedState::from_array(a, 0.0)
    }

    #[test]
    fn canonical_pairs() {
        let x = ExtendedState::new(0.3, Vec3::new(1.0, -2.0, 0.5), -1.7, Vec3::new(0.1, 0.2, 0.3));
        let h = default_step(&x);
        let b = poisson_bracket_numeric(|s| s.q0, |s| s.p0, &x, h).unwrap();
        assert!((b - 1.0).abs() < 1e-10);
        let b = poisson_bracket_numeric(|s| s.q.x, |s| s.p.y, &x, h).unwrap();
        assert!(b.abs() < 1e-10);
    }

    #[test]
    fn fundamental_brackets_at_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let x = random_state(&mut rng);
            let h = default_step(&x);
            for a in 0..DIM {
                for b in 0..DIM {
                    let v = poisson_bracket_numeric(|s| s.coord(a), |s| s.coord(b), &x, h).unwrap();
                    let expected = if a + 4 == b {
                        1.0
                    } else if b + 4 == a {
                        -1.0
                    } else {
                        0.0
                    };
                    assert!((v - expected).abs() < 1e-10, "{{x{a}, x{b}}} = {v}");
                }
            }
        }
    }

    #[test]
    fn free_hamiltonian_commutes_with_momentum() {
        let x = ExtendedState::new(0.0, Vec3::zeros(), -2f64.sqrt(), Vec3::new(1.0, 0.0, 0.0));
        let h0 = |s: &ExtendedState| -(s.p0 * s.p0 - s.p.norm_squared()).sqrt();
        let b = poisson_bracket_numeric(h0, |s| s.p.x, &x, default_step(&x)).unwrap();
        assert!(b.abs() < 1e-8);
    }

    #[test]
    fn non_finite_observable_is_reported() {
        let x = ExtendedState::at_rest(1.0, 1.0);
        let err = poisson_bracket_numeric(|s| (s.q0 - 1.0).sqrt(), |s| s.p0, &x, 1e-5).unwrap_err();
        assert!(matches!(err, Error::Evaluation { .. }));
    }

    #[test]
    fn mass_shell_examples() {
        let rest = ExtendedState::new(0.0, Vec3::zeros(), -1.0, Vec3::zeros());
        assert_eq!(mass_shell_residual(&rest, 1.0, 1.0), 0.0);
        let moving = ExtendedState::on_shell(0.0, Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), 1.0, 1.0);
        assert!(mass_shell_residual(&moving, 1.0, 1.0).abs() < 1e-15);
        let off = ExtendedState::new(0.0, Vec3::zeros(), -2.0, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(mass_shell_residual(&off, 1.0, 1.0), 2.0);
    }

    #[test]
    fn units_validation() {
        assert!(Units::new(1.0, 1.0).is_ok());
        assert!(Units::new(0.0, 1.0).is_err());
        assert!(Units::new(1.0, -1.0).is_err());
    }
}
