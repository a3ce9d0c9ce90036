//! Action distributions `n(q0, q∥)·δ(p - ∂S)` on a space-time grid.
//!
//! The action keeps its `u = 0` shape and advances by the global phase
//! `m0·c²·u`; only the density is stepped, through the continuity equation
//!
//! ```text
//! m0 ∂_u n = ∂0(n ∂0S) - ∂∥(n ∂∥S)
//! ```
//!
//! with a first-order upwind flux and explicit Euler steps. The transport
//! velocity `(-∂0S/m0, ∂∥S/m0)` is the classical trajectory velocity for
//! `p^e = ∂S` on the mass shell.
//!
//! The default boundary is periodic in both directions. The time direction
//! has no natural boundary condition, so keep the distribution away from the
//! grid edges when the periodic wrap would matter.

use std::io::Write;

use crate::error::{Error, Result};
use crate::numerics::{fit_line, pairwise_sum};
use crate::par::{self, Exec};

/// Uniform grid over `(q0, q∥)`; row index runs over `q0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2 {
    pub n0: usize,
    pub n1: usize,
    pub origin0: f64,
    pub origin1: f64,
    pub d0: f64,
    pub d1: f64,
}

impl Grid2 {
    /// `n0 × n1` points covering `[lo0, hi0) × [lo1, hi1)`.
    pub fn new(n0: usize, n1: usize, lo0: f64, hi0: f64, lo1: f64, hi1: f64) -> Result<Self> {
        if n0 < 3 || n1 < 3 {
            return Err(Error::Config(format!("grid needs at least 3×3 points, got {n0}×{n1}")));
        }
        if !(hi0 > lo0 && hi1 > lo1) {
            return Err(Error::Config("grid extents must be increasing".into()));
        }
        Ok(Self {
            n0,
            n1,
            origin0: lo0,
            origin1: lo1,
            d0: (hi0 - lo0) / n0 as f64,
            d1: (hi1 - lo1) / n1 as f64,
        })
    }

    pub fn q0(&self, i: usize) -> f64 {
        self.origin0 + i as f64 * self.d0
    }

    pub fn q1(&self, j: usize) -> f64 {
        self.origin1 + j as f64 * self.d1
    }

    pub fn len(&self) -> usize {
        self.n0 * self.n1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.d0 * self.d1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Periodic,
    /// Zero normal flux at the grid edges.
    Reflecting,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionWaveState {
    pub grid: Grid2,
    /// Density, row-major over `(q0, q∥)`.
    pub n: Vec<f64>,
    /// Action at `u = 0`.
    pub s_shape: Vec<f64>,
    pub u: f64,
    pub m0: f64,
    pub c: f64,
    pub boundary: Boundary,
}

/// Derivative of a row-major field along both axes: second-order central
/// differences inside, second-order one-sided at the edges.
fn gradient(grid: &Grid2, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (n0, n1) = (grid.n0, grid.n1);
    let at = |i: usize, j: usize| f[i * n1 + j];
    let diff = |fm: f64, f0: f64, fp: f64, h: f64, pos: i8| match pos {
        -1 => (-3.0 * fm + 4.0 * f0 - fp) / (2.0 * h),
        1 => (fm - 4.0 * f0 + 3.0 * fp) / (2.0 * h),
        _ => (fp - fm) / (2.0 * h),
    };
    let mut g0 = vec![0.0; f.len()];
    let mut g1 = vec![0.0; f.len()];
    for i in 0..n0 {
        for j in 0..n1 {
            g0[i * n1 + j] = if i == 0 {
                diff(at(0, j), at(1, j), at(2, j), grid.d0, -1)
            } else if i == n0 - 1 {
                diff(at(i - 2, j), at(i - 1, j), at(i, j), grid.d0, 1)
            } else {
                diff(at(i - 1, j), 0.0, at(i + 1, j), grid.d0, 0)
            };
            g1[i * n1 + j] = if j == 0 {
                diff(at(i, 0), at(i, 1), at(i, 2), grid.d1, -1)
            } else if j == n1 - 1 {
                diff(at(i, j - 2), at(i, j - 1), at(i, j), grid.d1, 1)
            } else {
                diff(at(i, j - 1), 0.0, at(i, j + 1), grid.d1, 0)
            };
        }
    }
    (g0, g1)
}

/// Density-weighted averages over the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacetimeMoments {
    pub mean_t: f64,
    pub mean_e: f64,
    pub mean_p_parallel: f64,
    pub var_t: f64,
    pub mean_q0: f64,
    pub mean_q1: f64,
    pub mass: f64,
}

impl ActionWaveState {
    /// Normalized Gaussian density centered at `center` with standard
    /// deviations `width`, carrying the action `action(q0, q∥)`.
    #[allow(clippy::too_many_arguments)]
    pub fn gaussian<F: Fn(f64, f64) -> f64>(
        grid: Grid2,
        center: (f64, f64),
        width: (f64, f64),
        action: F,
        m0: f64,
        c: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        let n: Vec<f64> = (0..grid.len())
            .map(|k| {
                let (i, j) = (k / grid.n1, k % grid.n1);
                let a = (grid.q0(i) - center.0) / width.0;
                let b = (grid.q1(j) - center.1) / width.1;
                (-0.5 * (a * a + b * b)).exp()
            })
            .collect();
        let s_shape = (0..grid.len())
            .map(|k| action(grid.q0(k / grid.n1), grid.q1(k % grid.n1)))
            .collect();
        let mut state = Self::from_fields(grid, n, s_shape, m0, c, boundary)?;
        let mass = state.total_mass();
        if mass <= 0.0 {
            return Err(Error::domain("Gaussian density vanishes on the grid"));
        }
        state.n.iter_mut().for_each(|v| *v /= mass);
        Ok(state)
    }

    pub fn from_fields(
        grid: Grid2,
        n: Vec<f64>,
        s_shape: Vec<f64>,
        m0: f64,
        c: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if n.len() != grid.len() || s_shape.len() != grid.len() {
            return Err(Error::Config(format!(
                "field sizes {} / {} do not match grid {}",
                n.len(),
                s_shape.len(),
                grid.len()
            )));
        }
        if let Some(v) = n.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::domain(format!("density must be nonnegative, found {v}")));
        }
        if !(m0 > 0.0 && c > 0.0) {
            return Err(Error::domain("m0 and c must be positive"));
        }
        Ok(Self {
            grid,
            n,
            s_shape,
            u: 0.0,
            m0,
            c,
            boundary,
        })
    }

    /// Current action `S(q, u) = S(q, 0) + m0 c² u`.
    pub fn action(&self) -> Vec<f64> {
        let phase = self.m0 * self.c * self.c * self.u;
        self.s_shape.iter().map(|s| s + phase).collect()
    }

    pub fn total_mass(&self) -> f64 {
        let rows = self.row_reduce(Exec::Sequential, |_, _, n, _, _| n);
        pairwise_sum(&rows) * self.grid.cell_area()
    }

    /// `(∂0S, ∂∥S)` on the grid.
    pub fn action_gradient(&self) -> (Vec<f64>, Vec<f64>) {
        gradient(&self.grid, &self.s_shape)
    }

    /// Largest `du` allowed by `du·max|∂S|/m0 ≤ 0.5·min(Δ0, Δ1)`.
    pub fn max_stable_step(&self) -> f64 {
        let (g0, g1) = self.action_gradient();
        let gmax = g0.iter().chain(&g1).fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax == 0.0 {
            f64::INFINITY
        } else {
            0.5 * self.grid.d0.min(self.grid.d1) * self.m0 / gmax
        }
    }

    fn row_reduce<F>(&self, exec: Exec, f: F) -> Vec<f64>
    where
        F: Fn(usize, usize, f64, f64, f64) -> f64 + Sync + Send,
    {
        self.row_reduce_with(exec, None, f)
    }

    fn row_reduce_with<F>(&self, exec: Exec, grads: Option<(&[f64], &[f64])>, f: F) -> Vec<f64>
    where
        F: Fn(usize, usize, f64, f64, f64) -> f64 + Sync + Send,
    {
        let n1 = self.grid.n1;
        par::map_indices(self.grid.n0, exec, |i| {
            let row: Vec<f64> = (0..n1)
                .map(|j| {
                    let k = i * n1 + j;
                    let (a, b) = grads.map_or((0.0, 0.0), |(g0, g1)| (g0[k], g1[k]));
                    f(i, j, self.n[k], a, b)
                })
                .collect();
            pairwise_sum(&row)
        })
    }

    /// Hamilton–Jacobi residual `(∂0S)² - (∂∥S)² - m0²c²` on the grid.
    pub fn hj_residual(&self) -> Vec<f64> {
        let (g0, g1) = self.action_gradient();
        let mc = self.m0 * self.c;
        g0.iter().zip(&g1).map(|(a, b)| a * a - b * b - mc * mc).collect()
    }

    pub fn spacetime_moments(&self) -> Result<SpacetimeMoments> {
        self.spacetime_moments_with(Exec::default())
    }

    /// Density-weighted moments; reductions run row by row, each row summed
    /// pairwise, then the row sums pairwise in row order.
    pub fn spacetime_moments_with(&self, exec: Exec) -> Result<SpacetimeMoments> {
        let (g0, g1) = self.action_gradient();
        let grads = Some((g0.as_slice(), g1.as_slice()));
        let g = self.grid;
        let sum = |f: &(dyn Fn(usize, usize, f64, f64, f64) -> f64 + Sync + Send)| {
            pairwise_sum(&self.row_reduce_with(exec, grads, f))
        };
        let mass = sum(&|_, _, n, _, _| n);
        if !(mass > 0.0) {
            return Err(Error::domain("total mass is zero"));
        }
        let mean_q0 = sum(&|i, _, n, _, _| n * g.q0(i)) / mass;
        let mean_q1 = sum(&|_, j, n, _, _| n * g.q1(j)) / mass;
        let var_q0 = sum(&|i, _, n, _, _| {
            let d = g.q0(i) - mean_q0;
            n * d * d
        }) / mass;
        let mean_ds0 = sum(&|_, _, n, a, _| n * a) / mass;
        let mean_ds1 = sum(&|_, _, n, _, b| n * b) / mass;
        Ok(SpacetimeMoments {
            mean_t: mean_q0 / self.c,
            mean_e: -self.c * mean_ds0,
            mean_p_parallel: mean_ds1,
            var_t: var_q0 / (self.c * self.c),
            mean_q0,
            mean_q1,
            mass: mass * g.cell_area(),
        })
    }

    pub fn evolve(&self, du: f64, n_steps: usize) -> Result<ActionWaveState> {
        self.evolve_with(du, n_steps, Exec::default())
    }

    pub fn evolve_with(&self, du: f64, n_steps: usize, exec: Exec) -> Result<ActionWaveState> {
        Ok(self.evolve_recording(du, n_steps, 0, exec)?.0)
    }

    /// Evolves `n_steps` and records `(u, moments)` every `record_every`
    /// steps (including the initial state); `record_every = 0` records
    /// nothing.
    pub fn evolve_recording(
        &self,
        du: f64,
        n_steps: usize,
        record_every: usize,
        exec: Exec,
    ) -> Result<(ActionWaveState, Vec<(f64, SpacetimeMoments)>)> {
        if !(du > 0.0 && du.is_finite()) {
            return Err(Error::Config(format!("step du must be positive, got {du}")));
        }
        let limit = self.max_stable_step();
        if du > limit {
            return Err(Error::Config(format!(
                "CFL violation: du = {du} exceeds the stable limit {limit}"
            )));
        }
        let stepper = Stepper::new(self);
        let mut state = self.clone();
        let mut buf = vec![0.0; self.n.len()];
        let mut record = Vec::new();
        if record_every > 0 {
            record.push((state.u, state.spacetime_moments_with(exec)?));
        }
        for step in 1..=n_steps {
            stepper.step(&state.n, &mut buf, du, exec);
            std::mem::swap(&mut state.n, &mut buf);
            state.u = self.u + step as f64 * du;
            if record_every > 0 && step % record_every == 0 {
                record.push((state.u, state.spacetime_moments_with(exec)?));
            }
        }
        Ok((state, record))
    }
}

/// Precomputed face velocities for the upwind update.
struct Stepper {
    grid: Grid2,
    /// Velocity on the face between rows `i` and `i+1` (wrapping).
    face0: Vec<f64>,
    /// Velocity on the face between columns `j` and `j+1` (wrapping).
    face1: Vec<f64>,
}

impl Stepper {
    fn new(state: &ActionWaveState) -> Self {
        let g = state.grid;
        let (g0, g1) = state.action_gradient();
        let a0: Vec<f64> = g0.iter().map(|v| -v / state.m0).collect();
        let a1: Vec<f64> = g1.iter().map(|v| v / state.m0).collect();
        let mut face0 = vec![0.0; g.len()];
        let mut face1 = vec![0.0; g.len()];
        for i in 0..g.n0 {
            for j in 0..g.n1 {
                let k = i * g.n1 + j;
                let up = ((i + 1) % g.n0) * g.n1 + j;
                let right = i * g.n1 + (j + 1) % g.n1;
                face0[k] = 0.5 * (a0[k] + a0[up]);
                face1[k] = 0.5 * (a1[k] + a1[right]);
                if state.boundary == Boundary::Reflecting {
                    if i == g.n0 - 1 {
                        face0[k] = 0.0;
                    }
                    if j == g.n1 - 1 {
                        face1[k] = 0.0;
                    }
                }
            }
        }
        Self {
            grid: g,
            face0,
            face1,
        }
    }

    fn step(&self, n: &[f64], out: &mut [f64], du: f64, exec: Exec) {
        let g = self.grid;
        let (n0, n1) = (g.n0, g.n1);
        let r0 = du / g.d0;
        let r1 = du / g.d1;
        let flux = |a: f64, left: f64, right: f64| if a > 0.0 { a * left } else { a * right };
        par::for_each_row_mut(out, n1, exec, |i, row| {
            let im = (i + n0 - 1) % n0;
            let ip = (i + 1) % n0;
            for (j, v) in row.iter_mut().enumerate() {
                let jm = (j + n1 - 1) % n1;
                let jp = (j + 1) % n1;
                let k = i * n1 + j;
                let f0_hi = flux(self.face0[k], n[k], n[ip * n1 + j]);
                let f0_lo = flux(self.face0[im * n1 + j], n[im * n1 + j], n[k]);
                let f1_hi = flux(self.face1[k], n[k], n[i * n1 + jp]);
                let f1_lo = flux(self.face1[i * n1 + jm], n[i * n1 + jm], n[k]);
                *v = n[k] - r0 * (f0_hi - f0_lo) - r1 * (f1_hi - f1_lo);
            }
        });
    }
}

/// Least-squares fit of `⟨t⟩` against `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeLawFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-sum-square of the residuals.
    pub residual_norm: f64,
}

pub fn linear_time_slope(samples: &[(f64, f64)]) -> Result<TimeLawFit> {
    if samples.len() < 3 {
        return Err(Error::domain(format!(
            "time-law fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let u: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let t: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let fit = fit_line(&u, &t)?;
    Ok(TimeLawFit {
        slope: fit.slope,
        intercept: fit.intercept,
        residual_norm: fit.rss.sqrt(),
    })
}

/// Writes `q0,q1,n,S` rows.
pub fn write_snapshot_csv<W: Write>(w: W, state: &ActionWaveState) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["q0", "q1", "n", "S"])?;
    let s = state.action();
    let g = state.grid;
    for i in 0..g.n0 {
        for j in 0..g.n1 {
            let k = i * g.n1 + j;
            wr.write_record([
                g.q0(i).to_string(),
                g.q1(j).to_string(),
                state.n[k].to_string(),
                s[k].to_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Writes `u,mean_t,mean_E,mean_p` rows.
pub fn write_moments_csv<W: Write>(w: W, series: &[(f64, SpacetimeMoments)]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["u", "mean_t", "mean_E", "mean_p"])?;
    for (u, m) in series {
        wr.write_record([
            u.to_string(),
            m.mean_t.to_string(),
            m.mean_e.to_string(),
            m.mean_p_parallel.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
