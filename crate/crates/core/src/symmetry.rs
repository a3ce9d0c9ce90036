//! Galilei and Lorentz group actions on the extended phase space.
//!
//! Infinitesimal transformations act on the column vectors
//! `q̃ = (q, q0)`, `p̃ = (p, p0)` as
//!
//! ```text
//! q̃' = q̃ - Ỹ - âᵀ q̃
//! p̃' = p̃ - X̃ + â p̃
//! ```
//!
//! which is canonical for any `â`. Finite boosts are closed-form
//! hyperbolic (Lorentz, `E > 0`) or trigonometric (SO(4), `E < 0`) rotations
//! of the `(q∥, q0)` and `(p∥, p0)` planes.

use nalgebra::{Matrix3, Matrix4, SMatrix, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::phase::{ExtendedState, Vec3, DIM};

/// Infinitesimal Galilei generator `γ(ξ, d, v, τ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GalileiElement {
    /// Antisymmetric rotation generator.
    pub xi: Matrix3<f64>,
    pub d: Vec3,
    pub v: Vec3,
    pub tau: f64,
}

impl GalileiElement {
    pub fn new(xi: Matrix3<f64>, d: Vec3, v: Vec3, tau: f64) -> Result<Self> {
        let asym = (xi + xi.transpose()).abs().max();
        if asym > 1e-14 {
            return Err(Error::domain(format!(
                "rotation generator is not antisymmetric (|ξ + ξᵀ| = {asym:e})"
            )));
        }
        Ok(Self { xi, d, v, tau })
    }

    pub fn identity() -> Self {
        Self {
            xi: Matrix3::zeros(),
            d: Vec3::zeros(),
            v: Vec3::zeros(),
            tau: 0.0,
        }
    }

    pub fn translation(d: Vec3) -> Self {
        Self { d, ..Self::identity() }
    }

    pub fn boost(v: Vec3) -> Self {
        Self { v, ..Self::identity() }
    }

    pub fn time_shift(tau: f64) -> Self {
        Self { tau, ..Self::identity() }
    }

    /// Generator of rotations about `axis` (ξ q = axis × q).
    pub fn rotation(axis: Vec3) -> Self {
        Self {
            xi: axis.cross_matrix(),
            ..Self::identity()
        }
    }
}

/// Galilei action `[q', t'] = [q + ξq - d - t v, t - τ]`.
pub fn galilei_act(g: &GalileiElement, q: &Vec3, t: f64) -> (Vec3, f64) {
    (q + g.xi * q - g.d - g.v * t, t - g.tau)
}

/// Lorentz action; differs from [`galilei_act`] by the `-v·q/c²` time shift.
pub fn lorentz_act_infinitesimal(g: &GalileiElement, q: &Vec3, t: f64, c: f64) -> (Vec3, f64) {
    let (q1, _) = galilei_act(g, q, t);
    (q1, t - g.v.dot(q) / (c * c) - g.tau)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Positive energy: hyperbolic rotations, group SO(3,1).
    Lorentz,
    /// Negative energy: trigonometric rotations, group SO(4).
    So4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftMode {
    /// Velocity enters the momentum shift `X̃ = (m v, 0)`.
    GalileiLift,
    /// Velocity enters the matrix `â`; `X̃ = 0`.
    LorentzLift(Branch),
}

/// Affine infinitesimal map on the extended phase space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedLinearMap {
    /// The 4×4 block `â` in `(q1, q2, q3, q0)` ordering.
    pub a: Matrix4<f64>,
    /// `Ỹ = (d, c·τ)`.
    pub b_q: Vector4<f64>,
    /// `X̃`.
    pub b_p: Vector4<f64>,
    pub branch: Branch,
}

fn tilde(v: &Vec3, zero: f64) -> Vector4<f64> {
    Vector4::new(v.x, v.y, v.z, zero)
}

impl ExtendedLinearMap {
    pub fn apply(&self, x: &ExtendedState) -> ExtendedState {
        let q = tilde(&x.q, x.q0);
        let p = tilde(&x.p, x.p0);
        let q1 = q - self.b_q - self.a.transpose() * q;
        let p1 = p - self.b_p + self.a * p;
        ExtendedState {
            q0: q1[3],
            q: Vec3::new(q1[0], q1[1], q1[2]),
            p0: p1[3],
            p: Vec3::new(p1[0], p1[1], p1[2]),
            u: x.u,
        }
    }
}

/// Lifts an infinitesimal Galilei generator to the extended phase space.
///
/// The time translation `τ` is carried in `Ỹ` as the length `c·τ`, so the
/// `q0` component shifts consistently with `t' = t - τ`.
pub fn lift_to_extended(g: &GalileiElement, m: f64, c: f64, mode: LiftMode) -> ExtendedLinearMap {
    let mut a = Matrix4::zeros();
    a.fixed_view_mut::<3, 3>(0, 0).copy_from(&g.xi);
    for k in 0..3 {
        a[(3, k)] = g.v[k] / c;
    }
    let (b_p, branch) = match mode {
        LiftMode::GalileiLift => (tilde(&(g.v * m), 0.0), Branch::Lorentz),
        LiftMode::LorentzLift(branch) => {
            let sign = match branch {
                Branch::Lorentz => 1.0,
                Branch::So4 => -1.0,
            };
            for k in 0..3 {
                a[(k, 3)] = sign * g.v[k] / c;
            }
            (Vector4::zeros(), branch)
        }
    };
    ExtendedLinearMap {
        a,
        b_q: tilde(&g.d, c * g.tau),
        b_p,
        branch,
    }
}

/// Finite transformation with parameter `rho` along the unit vector `n`:
/// hyperbolic for the Lorentz branch, trigonometric for SO(4).
pub fn boost_by_parameter(x: &ExtendedState, n: &Vec3, rho: f64, branch: Branch) -> ExtendedState {
    let q_par = n.dot(&x.q);
    let p_par = n.dot(&x.p);
    let (q_par1, q01, p_par1, p01) = match branch {
        Branch::Lorentz => {
            let (ch, sh) = (rho.cosh(), rho.sinh());
            (
                ch * q_par - sh * x.q0,
                ch * x.q0 - sh * q_par,
                ch * p_par + sh * x.p0,
                ch * x.p0 + sh * p_par,
            )
        }
        Branch::So4 => {
            let (co, si) = (rho.cos(), rho.sin());
            (
                co * q_par - si * x.q0,
                co * x.q0 + si * q_par,
                co * p_par - si * x.p0,
                co * x.p0 + si * p_par,
            )
        }
    };
    ExtendedState {
        q0: q01,
        q: x.q + n * (q_par1 - q_par),
        p0: p01,
        p: x.p + n * (p_par1 - p_par),
        u: x.u,
    }
}

/// Finite boost by velocity `v`.
///
/// On the Lorentz branch the rapidity is `atanh(|v|/c)` and `|v| < c` is
/// required. On the SO(4) branch the rotation angle is `|v|/c` directly; no
/// velocity interpretation is attached to it.
pub fn boost_finite(x: &ExtendedState, v: &Vec3, c: f64, branch: Branch) -> Result<ExtendedState> {
    let speed = v.norm();
    if speed == 0.0 {
        return Ok(*x);
    }
    let beta = speed / c;
    let rho = match branch {
        Branch::Lorentz => {
            if beta >= 1.0 {
                return Err(Error::domain(format!(
                    "boost speed {speed} is not below c = {c}"
                )));
            }
            beta.atanh()
        }
        Branch::So4 => beta,
    };
    Ok(boost_by_parameter(x, &(v / speed), rho, branch))
}

/// Finite rotation `exp(ξ)` of positions and momenta (Rodrigues formula).
pub fn rotate_finite(x: &ExtendedState, xi: &Matrix3<f64>) -> ExtendedState {
    let w = Vec3::new(xi[(2, 1)], xi[(0, 2)], xi[(1, 0)]);
    let angle = w.norm();
    let r = if angle == 0.0 {
        Matrix3::identity()
    } else {
        let k = (w / angle).cross_matrix();
        Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
    };
    ExtendedState {
        q: r * x.q,
        p: r * x.p,
        ..*x
    }
}

/// Outcome of a canonicity check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalReport {
    /// `max |{x'_a, x'_b} - Ω_ab|` over samples and index pairs.
    pub max_deviation: f64,
    /// Index pair `(a, b)` in canonical order where the maximum occurred.
    pub worst_pair: (usize, usize),
    pub samples: usize,
}

type Jacobian = SMatrix<f64, DIM, DIM>;

fn jacobian_at<M>(map: &M, x: &ExtendedState, h: f64) -> Jacobian
where
    M: Fn(&ExtendedState) -> ExtendedState,
{
    let diff = |h: f64| {
        let mut j = Jacobian::zeros();
        for col in 0..DIM {
            let mut a = x.to_array();
            a[col] += h;
            let fp = map(&ExtendedState::from_array(a, x.u)).to_array();
            a[col] -= 2.0 * h;
            let fm = map(&ExtendedState::from_array(a, x.u)).to_array();
            for row in 0..DIM {
                j[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        j
    };
    // Richardson-extrapolated central differences: exact for affine maps,
    // O(h⁴) otherwise.
    (diff(0.5 * h) * 4.0 - diff(h)) / 3.0
}

fn symplectic_form() -> Jacobian {
    let mut omega = Jacobian::zeros();
    for mu in 0..4 {
        omega[(mu, mu + 4)] = 1.0;
        omega[(mu + 4, mu)] = -1.0;
    }
    omega
}

/// Deterministic sample of extended states used by [`check_canonical`].
pub fn sample_states(n: usize, seed: u64) -> Vec<ExtendedState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut a = [0.0; DIM];
            for v in a.iter_mut().take(4) {
                *v = rng.gen_range(-5.0..5.0);
            }
            let p = Vec3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let m = rng.gen_range(0.5..2.0);
            let mut s = ExtendedState::on_shell(a[0], Vec3::new(a[1], a[2], a[3]), p, m, 1.0);
            s.u = 0.0;
            s
        })
        .collect()
}

/// Maximum deviation of the transformed coordinates' extended Poisson
/// brackets from the canonical values, over `samples` pseudo-random states.
pub fn check_canonical<M>(map: M, samples: usize) -> Result<CanonicalReport>
where
    M: Fn(&ExtendedState) -> ExtendedState + Sync + Send,
{
    check_canonical_with(map, samples, Exec::default())
}

pub fn check_canonical_with<M>(map: M, samples: usize, exec: Exec) -> Result<CanonicalReport>
where
    M: Fn(&ExtendedState) -> ExtendedState + Sync + Send,
{
    if samples == 0 {
        return Err(Error::domain("need at least one sample state"));
    }
    let states = sample_states(samples, 0x5eed);
    let omega = symplectic_form();
    let per_state = par::map_indices(samples, exec, |i| {
        let x = &states[i];
        let h = 1e-2 * x.sup_norm().max(1.0);
        let j = jacobian_at(&map, x, h);
        let dev = j * omega * j.transpose() - omega;
        let mut worst = (0.0f64, (0, 0));
        for a in 0..DIM {
            for b in 0..DIM {
                let d = dev[(a, b)].abs();
                if d > worst.0 || d.is_nan() {
                    worst = (d, (a, b));
                }
            }
        }
        worst
    });
    let (max_deviation, worst_pair) = per_state
        .into_iter()
        .fold((0.0, (0, 0)), |acc, w| if w.0 > acc.0 || w.0.is_nan() { w } else { acc });
    Ok(CanonicalReport {
        max_deviation,
        worst_pair,
        samples,
    })
}

/// Boost velocity along the mean-momentum direction that brings the
/// ensemble to its intrinsic frame (`⟨p∥⟩' = 0`).
pub fn intrinsic_frame_boost(mean_p_parallel: f64, mean_e: f64, c: f64) -> Result<f64> {
    if !(mean_e > 0.0) {
        return Err(Error::domain(format!("mean energy must be positive, got {mean_e}")));
    }
    if mean_p_parallel.abs() * c >= mean_e {
        return Err(Error::domain(format!(
            "moment pair is not timelike: |<p>|c = {} >= <E> = {mean_e}",
            mean_p_parallel.abs() * c
        )));
    }
    Ok(c * c * mean_p_parallel / mean_e)
}
