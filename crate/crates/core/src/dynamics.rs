//! Extended Hamiltonians and their canonical flow in universal time `u`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::phase::{ExtendedState, Vec3};

/// Static external potential `V(q)`.
pub trait Potential: Send + Sync {
    fn value(&self, q: &Vec3) -> f64;
    fn gradient(&self, q: &Vec3) -> Vec3;
}

/// Time-dependent nonrelativistic Hamilton function `H(q, p, t)` on the
/// ordinary phase space.
pub trait BaseHamiltonian: Send + Sync {
    fn value(&self, q: &Vec3, p: &Vec3, t: f64) -> f64;
    fn grad_q(&self, q: &Vec3, p: &Vec3, t: f64) -> Vec3;
    fn grad_p(&self, q: &Vec3, p: &Vec3, t: f64) -> Vec3;
    fn dt(&self, q: &Vec3, p: &Vec3, t: f64) -> f64;
}

/// `V(q) = k/2 |q - center|²`.
#[derive(Clone, Copy, Debug)]
pub struct HarmonicPotential {
    pub k: f64,
    pub center: Vec3,
}

impl Potential for HarmonicPotential {
    fn value(&self, q: &Vec3) -> f64 {
        0.5 * self.k * (q - self.center).norm_squared()
    }
    fn gradient(&self, q: &Vec3) -> Vec3 {
        self.k * (q - self.center)
    }
}

/// Constant potential; a zero constant reproduces the free particle.
#[derive(Clone, Copy, Debug)]
pub struct ConstantPotential(pub f64);

impl Potential for ConstantPotential {
    fn value(&self, _: &Vec3) -> f64 {
        self.0
    }
    fn gradient(&self, _: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
}

/// `H = |p|²/2m`.
#[derive(Clone, Copy, Debug)]
pub struct FreeNonrelativistic {
    pub m: f64,
}

impl BaseHamiltonian for FreeNonrelativistic {
    fn value(&self, _: &Vec3, p: &Vec3, _: f64) -> f64 {
        p.norm_squared() / (2.0 * self.m)
    }
    fn grad_q(&self, _: &Vec3, _: &Vec3, _: f64) -> Vec3 {
        Vec3::zeros()
    }
    fn grad_p(&self, _: &Vec3, p: &Vec3, _: f64) -> Vec3 {
        p / self.m
    }
    fn dt(&self, _: &Vec3, _: &Vec3, _: f64) -> f64 {
        0.0
    }
}

#[derive(Clone)]
pub enum HamiltonianKind {
    /// `H = -c √(p0² - |p|²)`.
    FreeRelativistic,
    /// `H = H_base(q, p, t) + c·p0`.
    Nonrelativistic(Arc<dyn BaseHamiltonian>),
    /// `H = -c √((p0 + V/c)² - |p|²)`.
    WithPotential(Arc<dyn Potential>),
}

impl fmt::Debug for HamiltonianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HamiltonianKind::FreeRelativistic => f.write_str("FreeRelativistic"),
            HamiltonianKind::Nonrelativistic(_) => f.write_str("Nonrelativistic(..)"),
            HamiltonianKind::WithPotential(_) => f.write_str("WithPotential(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    pub m0: f64,
    pub c: f64,
}

impl HamiltonianSpec {
    pub fn free(m0: f64, c: f64) -> Self {
        Self {
            kind: HamiltonianKind::FreeRelativistic,
            m0,
            c,
        }
    }

    pub fn nonrelativistic(base: Arc<dyn BaseHamiltonian>, m0: f64, c: f64) -> Self {
        Self {
            kind: HamiltonianKind::Nonrelativistic(base),
            m0,
            c,
        }
    }

    pub fn with_potential(potential: Arc<dyn Potential>, m0: f64, c: f64) -> Self {
        Self {
            kind: HamiltonianKind::WithPotential(potential),
            m0,
            c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m0 > 0.0 && self.m0.is_finite()) {
            return Err(Error::domain(format!("m0 must be positive, got {}", self.m0)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::domain(format!("c must be positive, got {}", self.c)));
        }
        Ok(())
    }

    /// Effective energy coordinate `p0 + V/c` and the positive root of the
    /// radicand, for the relativistic kinds.
    fn root(&self, x: &ExtendedState) -> Result<(f64, f64)> {
        let p0 = match &self.kind {
            HamiltonianKind::WithPotential(v) => x.p0 + v.value(&x.q) / self.c,
            _ => x.p0,
        };
        let radicand = p0 * p0 - x.p.norm_squared();
        if radicand > 0.0 {
            Ok((p0, radicand.sqrt()))
        } else {
            Err(Error::Spacelike { radicand })
        }
    }
}

/// Value of the extended Hamiltonian at `x`.
pub fn hamiltonian_eval(spec: &HamiltonianSpec, x: &ExtendedState) -> Result<f64> {
    match &spec.kind {
        HamiltonianKind::Nonrelativistic(h) => {
            Ok(h.value(&x.q, &x.p, x.q0 / spec.c) + spec.c * x.p0)
        }
        _ => {
            let (_, r) = spec.root(x)?;
            Ok(-spec.c * r)
        }
    }
}

/// Universal-time derivative of every canonical coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseVelocity {
    pub dq0: f64,
    pub dq: Vec3,
    pub dp0: f64,
    pub dp: Vec3,
}

/// Canonical equations `d_u q = ∂H/∂p`, `d_u p = -∂H/∂q`.
pub fn eom_rhs(spec: &HamiltonianSpec, x: &ExtendedState) -> Result<PhaseVelocity> {
    let c = spec.c;
    match &spec.kind {
        HamiltonianKind::FreeRelativistic => {
            let (p0, r) = spec.root(x)?;
            Ok(PhaseVelocity {
                dq0: -c * p0 / r,
                dq: x.p * (c / r),
                dp0: 0.0,
                dp: Vec3::zeros(),
            })
        }
        HamiltonianKind::WithPotential(v) => {
            let (p0, r) = spec.root(x)?;
            Ok(PhaseVelocity {
                dq0: -c * p0 / r,
                dq: x.p * (c / r),
                dp0: 0.0,
                dp: v.gradient(&x.q) * (p0 / r),
            })
        }
        HamiltonianKind::Nonrelativistic(h) => {
            let t = x.q0 / c;
            Ok(PhaseVelocity {
                dq0: c,
                dq: h.grad_p(&x.q, &x.p, t),
                dp0: -h.dt(&x.q, &x.p, t) / c,
                dp: -h.grad_q(&x.q, &x.p, t),
            })
        }
    }
}

fn advance(x: &ExtendedState, k: &PhaseVelocity, h: f64) -> ExtendedState {
    ExtendedState {
        q0: x.q0 + h * k.dq0,
        q: x.q + k.dq * h,
        p0: x.p0 + h * k.dp0,
        p: x.p + k.dp * h,
        u: x.u + h,
    }
}

fn rk4_step(spec: &HamiltonianSpec, x: &ExtendedState, du: f64) -> Result<ExtendedState> {
    let k1 = eom_rhs(spec, x)?;
    let k2 = eom_rhs(spec, &advance(x, &k1, 0.5 * du))?;
    let k3 = eom_rhs(spec, &advance(x, &k2, 0.5 * du))?;
    let k4 = eom_rhs(spec, &advance(x, &k3, du))?;
    let w = du / 6.0;
    Ok(ExtendedState {
        q0: x.q0 + w * (k1.dq0 + 2.0 * k2.dq0 + 2.0 * k3.dq0 + k4.dq0),
        q: x.q + (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq) * w,
        p0: x.p0 + w * (k1.dp0 + 2.0 * k2.dp0 + 2.0 * k3.dp0 + k4.dp0),
        p: x.p + (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp) * w,
        u: x.u + du,
    })
}

/// Fixed-step classical Runge–Kutta integration; returns `n + 1` states
/// starting with `x0`.
///
/// Free flow is affine in `u`, so the scheme is exact there up to round-off.
/// With a potential, halve `du` until the observables of interest stabilize.
pub fn integrate_trajectory(
    spec: &HamiltonianSpec,
    x0: &ExtendedState,
    du: f64,
    n: usize,
) -> Result<Vec<ExtendedState>> {
    spec.validate()?;
    if !(du > 0.0 && du.is_finite()) {
        return Err(Error::domain(format!("step du must be positive, got {du}")));
    }
    if n == 0 {
        return Err(Error::domain("step count must be at least 1"));
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(*x0);
    let mut x = *x0;
    for step in 0..n {
        x = rk4_step(spec, &x, du).map_err(|e| Error::Trajectory {
            step,
            source: Box::new(e),
        })?;
        out.push(x);
    }
    Ok(out)
}

/// Ordinary velocity `v = c d_u q / d_u q0 = -c p / p0`.
pub fn velocity_from_momentum(x: &ExtendedState, c: f64) -> Result<Vec3> {
    if x.p0 == 0.0 {
        return Err(Error::domain("p0 = 0: velocity undefined"));
    }
    Ok(x.p * (-c / x.p0))
}

/// Inertial parameters `1/I_μ = (1/p_μ) ∂H/∂p_μ` of the free Hamiltonian,
/// ordered `(I0, I1, I2, I3)`.
///
/// Components with `p_μ = 0` take the limit value `∓√(p0² - |p|²)/c`, which
/// is `∓m0` on the mass shell.
pub fn inertial_parameters(x: &ExtendedState, c: f64) -> Result<[f64; 4]> {
    let radicand = x.p0 * x.p0 - x.p.norm_squared();
    if radicand <= 0.0 {
        return Err(Error::Spacelike { radicand });
    }
    let r = radicand.sqrt();
    let dh = [-c * x.p0 / r, c * x.p.x / r, c * x.p.y / r, c * x.p.z / r];
    let p = [x.p0, x.p.x, x.p.y, x.p.z];
    let limit = [-r / c, r / c, r / c, r / c];
    let mut out = [0.0; 4];
    for mu in 0..4 {
        out[mu] = if p[mu] == 0.0 { limit[mu] } else { p[mu] / dh[mu] };
    }
    Ok(out)
}

/// Writes `u,q0,q1,q2,q3,p0,p1,p2,p3` rows with round-trip float formatting.
pub fn write_trajectory_csv<W: Write>(w: W, states: &[ExtendedState]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["u", "q0", "q1", "q2", "q3", "p0", "p1", "p2", "p3"])?;
    for s in states {
        let a = s.to_array();
        let mut row = Vec::with_capacity(9);
        row.push(s.u.to_string());
        row.extend(a.iter().map(f64::to_string));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{default_step, gradient_numeric};

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn boosted() -> ExtendedState {
        ExtendedState::new(0.0, Vec3::zeros(), -SQRT2, Vec3::new(1.0, 0.0, 0.0))
    }

    #[test]
    fn free_hamiltonian_values() {
        let h = HamiltonianSpec::free(1.0, 1.0);
        let rest = ExtendedState::new(0.0, Vec3::zeros(), -1.0, Vec3::zeros());
        assert_eq!(hamiltonian_eval(&h, &rest).unwrap(), -1.0);
        assert!((hamiltonian_eval(&h, &boosted()).unwrap() + 1.0).abs() < 1e-15);
        let spacelike = ExtendedState::new(0.0, Vec3::zeros(), -1.0, Vec3::new(2.0, 0.0, 0.0));
        match hamiltonian_eval(&h, &spacelike) {
            Err(Error::Spacelike { radicand }) => assert_eq!(radicand, -3.0),
            other => panic!("expected spacelike error, got {other:?}"),
        }
    }

    #[test]
    fn free_equations_of_motion() {
        let h = HamiltonianSpec::free(1.0, 1.0);
        let d = eom_rhs(&h, &boosted()).unwrap();
        assert!((d.dq0 - SQRT2).abs() < 1e-15);
        assert!((d.dq - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(d.dp0, 0.0);
        assert_eq!(d.dp, Vec3::zeros());

        let d = eom_rhs(&h, &ExtendedState::at_rest(1.0, 1.0)).unwrap();
        assert_eq!(d.dq0, 1.0);
        assert_eq!(d.dq, Vec3::zeros());
    }

    #[test]
    fn nonrelativistic_universal_time_is_time() {
        let h = HamiltonianSpec::nonrelativistic(Arc::new(FreeNonrelativistic { m: 1.0 }), 1.0, 3.0);
        let x = ExtendedState::new(0.0, Vec3::zeros(), -1.0 / 3.0, Vec3::new(0.5, 0.0, 0.0));
        let d = eom_rhs(&h, &x).unwrap();
        // d_u t = d_u q0 / c, d_u E = -c d_u p0
        assert_eq!(d.dq0 / 3.0, 1.0);
        assert_eq!(-3.0 * d.dp0, 0.0);
        assert!((d.dq - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn straight_line_trajectory() {
        let h = HamiltonianSpec::free(1.0, 1.0);
        let traj = integrate_trajectory(&h, &boosted(), 0.1, 100).unwrap();
        assert_eq!(traj.len(), 101);
        let last = traj.last().unwrap();
        assert!((last.q0 - 10.0 * SQRT2).abs() < 1e-9);
        assert!((last.q - Vec3::new(10.0, 0.0, 0.0)).norm() < 1e-9);
        assert!((last.u - 10.0).abs() < 1e-12);
        for s in &traj {
            assert_eq!(s.p0.to_bits(), boosted().p0.to_bits());
            assert_eq!(s.p, boosted().p);
        }
        let h0 = hamiltonian_eval(&h, &traj[0]).unwrap();
        let hn = hamiltonian_eval(&h, last).unwrap();
        assert!((h0 - hn).abs() <= 1e-10);
    }

    #[test]
    fn zero_potential_matches_free() {
        let free = HamiltonianSpec::free(1.0, 1.0);
        let zero = HamiltonianSpec::with_potential(Arc::new(ConstantPotential(0.0)), 1.0, 1.0);
        let x0 = ExtendedState::on_shell(0.5, Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.3, -0.2, 0.7), 1.0, 1.0);
        let a = integrate_trajectory(&free, &x0, 0.05, 200).unwrap();
        let b = integrate_trajectory(&zero, &x0, 0.05, 200).unwrap();
        for (s, t) in a.iter().zip(&b) {
            for (u, v) in s.to_array().iter().zip(t.to_array()) {
                assert!((u - v).abs() <= 1e-12);
            }
        }
    }

    /// Value ramps along x while the force is switched off, so the effective
    /// energy coordinate is driven through the light cone at a known place.
    struct Ramp;
    impl Potential for Ramp {
        fn value(&self, q: &Vec3) -> f64 {
            2.0 * q.x
        }
        fn gradient(&self, _: &Vec3) -> Vec3 {
            Vec3::zeros()
        }
    }

    #[test]
    fn trajectory_reports_failing_step() {
        let h = HamiltonianSpec::with_potential(Arc::new(Ramp), 1.0, 1.0);
        let x0 = ExtendedState::new(0.0, Vec3::zeros(), -1.0, Vec3::new(0.3, 0.0, 0.0));
        match integrate_trajectory(&h, &x0, 0.01, 1000) {
            Err(Error::Trajectory { step, source }) => {
                assert!(step > 10, "failed too early at {step}");
                assert!(matches!(*source, Error::Spacelike { .. }));
            }
            other => panic!("expected trajectory error, got {other:?}"),
        }
        assert!(integrate_trajectory(&HamiltonianSpec::free(1.0, 1.0), &x0, 0.0, 3).is_err());
        assert!(integrate_trajectory(&HamiltonianSpec::free(1.0, 1.0), &x0, 0.1, 0).is_err());
    }

    #[test]
    fn velocity_examples() {
        let v = velocity_from_momentum(&ExtendedState::at_rest(1.0, 1.0), 1.0).unwrap();
        assert_eq!(v, Vec3::zeros());
        let v = velocity_from_momentum(&boosted(), 1.0).unwrap();
        assert!((v.x - 1.0 / SQRT2).abs() < 1e-15);
        let zero = ExtendedState::new(0.0, Vec3::zeros(), 0.0, Vec3::zeros());
        assert!(velocity_from_momentum(&zero, 1.0).is_err());

        let mut prev = 0.0;
        for p in [1.0, 10.0, 100.0] {
            let x = ExtendedState::on_shell(0.0, Vec3::zeros(), Vec3::new(p, 0.0, 0.0), 1.0, 1.0);
            let speed = velocity_from_momentum(&x, 1.0).unwrap().norm();
            assert!(speed > prev && speed < 1.0);
            prev = speed;
        }
    }

    #[test]
    fn velocity_consistent_with_flow() {
        let h = HamiltonianSpec::free(1.0, 2.0);
        let x = ExtendedState::on_shell(0.0, Vec3::zeros(), Vec3::new(0.4, -1.1, 0.3), 1.0, 2.0);
        let d = eom_rhs(&h, &x).unwrap();
        let v = velocity_from_momentum(&x, 2.0).unwrap();
        assert!((v - d.dq * (2.0 / d.dq0)).norm() < 1e-12);
    }

    #[test]
    fn inertial_parameter_values() {
        let x = ExtendedState::on_shell(0.0, Vec3::zeros(), Vec3::new(0.3, 0.0, -0.8), 1.0, 1.0);
        let i = inertial_parameters(&x, 1.0).unwrap();
        for (got, want) in i.iter().zip([-1.0, 1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-8);
        }
        let x = ExtendedState::on_shell(0.0, Vec3::zeros(), Vec3::new(0.3, 0.2, -0.8), 2.0, 1.0);
        let i = inertial_parameters(&x, 1.0).unwrap();
        for (got, want) in i.iter().zip([-2.0, 2.0, 2.0, 2.0]) {
            assert!((got - want).abs() < 1e-8);
        }
        // Off shell: I_k = √(p0² - p²)/c from the analytic partials.
        let x = ExtendedState::new(0.0, Vec3::zeros(), -2.0, Vec3::new(1.0, 0.0, 0.0));
        let i = inertial_parameters(&x, 1.0).unwrap();
        let r = 3f64.sqrt();
        assert!((i[0] + r).abs() < 1e-12 && (i[1] - r).abs() < 1e-12);
        assert!((i[1] - 1.0).abs() > 0.5);
    }

    #[test]
    fn flow_matches_numerical_gradient() {
        let specs = [
            HamiltonianSpec::free(1.0, 1.0),
            HamiltonianSpec::with_potential(
                Arc::new(HarmonicPotential { k: 0.3, center: Vec3::new(0.1, 0.0, -0.2) }),
                1.0,
                1.0,
            ),
        ];
        let x = ExtendedState::new(0.2, Vec3::new(0.5, -0.3, 0.4), -1.6, Vec3::new(0.2, 0.5, -0.1));
        for spec in &specs {
            let g = gradient_numeric(&|s: &ExtendedState| hamiltonian_eval(spec, s).unwrap(), &x, default_step(&x))
                .unwrap();
            let d = eom_rhs(spec, &x).unwrap();
            let expect = [d.dq0, d.dq.x, d.dq.y, d.dq.z];
            for k in 0..4 {
                assert!((g[k + 4] - expect[k]).abs() < 1e-6);
            }
            assert!((g[0] + d.dp0).abs() < 1e-6);
            for k in 0..3 {
                assert!((g[k + 1] + d.dp[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn nonrelativistic_limit_of_spatial_velocity() {
        let h = HamiltonianSpec::free(1.0, 1.0);
        for p in [1e-4, 3e-3, 1e-2] {
            let x = ExtendedState::on_shell(0.0, Vec3::zeros(), Vec3::new(p, 0.0, 0.0), 1.0, 1.0);
            let d = eom_rhs(&h, &x).unwrap();
            assert!(((d.dq.x - p) / p).abs() < 1e-4);
        }
    }

    #[test]
    fn potential_energy_conservation() {
        let h = HamiltonianSpec::with_potential(
            Arc::new(HarmonicPotential { k: 0.01, center: Vec3::zeros() }),
            1.0,
            1.0,
        );
        let x0 = ExtendedState::new(0.0, Vec3::new(1.0, 0.0, 0.0), -1.2, Vec3::new(0.0, 0.3, 0.0));
        let traj = integrate_trajectory(&h, &x0, 1e-2, 10_000).unwrap();
        let h0 = hamiltonian_eval(&h, &x0).unwrap();
        for s in &traj {
            assert!((hamiltonian_eval(&h, s).unwrap() - h0).abs() <= 1e-8);
        }
    }

    #[test]
    fn csv_export_round_trips() {
        let h = HamiltonianSpec::free(1.0, 1.0);
        let traj = integrate_trajectory(&h, &boosted(), 0.1, 3).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "u,q0,q1,q2,q3,p0,p1,p2,p3");
        let row: Vec<f64> = lines.nth(2).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row[1].to_bits(), traj[2].q0.to_bits());
        assert_eq!(text.lines().count(), 5);
    }
}
