//! Quantum distributions on the reduced `(q0, q∥)` space-time.
//!
//! Wave packets factor as `Ψ(q0, q∥) = χ(q0)·ψ(q∥)` with a Glauber time
//! packet `χ`. The conjugate representation follows
//! `f̃(q, k) = ∫ dp e^{ik·p} f(q, p) = Ψ(q + σk/2) Ψ*(q - σk/2)`, so
//! phase-space overlaps carry `(2πσ)²` in place of the four-dimensional
//! `(2πσ)⁴`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::actionwave::Grid2;
use crate::error::{Error, Result};
use crate::numerics::{centered_fft_2d, centered_fft_with, integrate, pairwise_sum, trapezoid};
use crate::par::{self, Exec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Glauber time packet
/// `χ(q0) = √(Ω/c√π) exp(-Ω²(q0-Q0)²/2c² + iP0(q0 - Q0/2)/σ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlauberPacket {
    /// Centroid `Q0 = c⟨t⟩`.
    pub q0_center: f64,
    /// `P0 = -⟨E⟩/c`.
    pub p0_mean: f64,
    pub omega: f64,
    pub sigma: f64,
    pub c: f64,
}

impl GlauberPacket {
    pub fn new(q0_center: f64, p0_mean: f64, omega: f64, sigma: f64, c: f64) -> Result<Self> {
        for (name, v) in [("Omega", omega), ("sigma", sigma), ("c", c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(q0_center.is_finite() && p0_mean.is_finite()) {
            return Err(Error::domain("packet centroid must be finite"));
        }
        Ok(Self {
            q0_center,
            p0_mean,
            omega,
            sigma,
            c,
        })
    }

    pub fn eval(&self, q0: f64) -> Complex64 {
        let x = q0 - self.q0_center;
        let amp = (self.omega / (self.c * PI.sqrt())).sqrt();
        let re = -self.omega * self.omega * x * x / (2.0 * self.c * self.c);
        let im = self.p0_mean * (q0 - 0.5 * self.q0_center) / self.sigma;
        amp * Complex64::new(re, im).exp()
    }

    /// `dχ/dq0`.
    pub fn derivative(&self, q0: f64) -> Complex64 {
        let x = q0 - self.q0_center;
        self.eval(q0) * Complex64::new(-self.omega * self.omega * x / (self.c * self.c), self.p0_mean / self.sigma)
    }

    /// Closed-form `⟨q0²⟩ - ⟨q0⟩² = c²/2Ω²`.
    pub fn variance_q0(&self) -> f64 {
        self.c * self.c / (2.0 * self.omega * self.omega)
    }

    /// Closed-form `δp0² = σ²Ω²/2c²`.
    pub fn variance_p0(&self) -> f64 {
        self.sigma * self.sigma * self.omega * self.omega / (2.0 * self.c * self.c)
    }

    /// Half-width of the interval outside which `|χ|²` is below `1e-60`.
    fn support(&self) -> f64 {
        12.0 * self.c / self.omega
    }
}

pub fn glauber_eval(packet: &GlauberPacket, q0: f64) -> Complex64 {
    packet.eval(q0)
}

/// Time-energy factor of the packet's Wigner function,
/// `(1/πσ) exp(-Ω²(q0-Q0)²/c² - c²(p0-P0)²/Ω²σ²)`.
pub fn glauber_wigner(packet: &GlauberPacket, q0: f64, p0: f64) -> f64 {
    let GlauberPacket {
        q0_center,
        p0_mean,
        omega,
        sigma,
        c,
    } = *packet;
    let a = omega * (q0 - q0_center) / c;
    let b = c * (p0 - p0_mean) / (omega * sigma);
    (-(a * a) - b * b).exp() / (PI * sigma)
}

/// Uniform one-dimensional grid `origin + j·dx`, `j = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialGrid {
    pub n: usize,
    pub origin: f64,
    pub dx: f64,
}

impl SpatialGrid {
    /// `n` points centered on `center` with spacing `dx`.
    pub fn centered(n: usize, center: f64, dx: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::Config(format!("grid length must be even and at least 4, got {n}")));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::Config(format!("grid spacing must be positive, got {dx}")));
        }
        Ok(Self {
            n,
            origin: center - 0.5 * n as f64 * dx,
            dx,
        })
    }

    pub fn q(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.q(j)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WavePacket {
    pub chi: GlauberPacket,
    pub grid: SpatialGrid,
    /// Spatial factor `ψ(q∥)`, normalized on `grid`.
    pub psi: Vec<Complex64>,
    pub m0: f64,
}

fn norm_sq(psi: &[Complex64], dx: f64) -> f64 {
    let dens: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    trapezoid(&dens, dx)
}

impl WavePacket {
    /// Wraps sampled `ψ`, rescaling it to unit norm.
    pub fn from_samples(chi: GlauberPacket, grid: SpatialGrid, mut psi: Vec<Complex64>, m0: f64) -> Result<Self> {
        if psi.len() != grid.n {
            return Err(Error::Config(format!("ψ has {} samples, grid has {}", psi.len(), grid.n)));
        }
        if !(m0 > 0.0) {
            return Err(Error::domain(format!("m0 must be positive, got {m0}")));
        }
        let norm = norm_sq(&psi, grid.dx);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::domain("ψ has zero or non-finite norm"));
        }
        let s = 1.0 / norm.sqrt();
        psi.iter_mut().for_each(|z| *z *= s);
        Ok(Self { chi, grid, psi, m0 })
    }

    /// Gaussian `ψ ∝ exp(-(q-center)²/4w² + i p q/σ)` with `|ψ|²` of standard
    /// deviation `w`.
    pub fn gaussian(chi: GlauberPacket, grid: SpatialGrid, center: f64, width: f64, mean_p: f64, m0: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::domain(format!("width must be positive, got {width}")));
        }
        let psi = grid
            .points()
            .into_iter()
            .map(|q| {
                let x = (q - center) / width;
                Complex64::new(-0.25 * x * x, mean_p * q / chi.sigma).exp()
            })
            .collect();
        Self::from_samples(chi, grid, psi, m0)
    }

    pub fn sigma(&self) -> f64 {
        self.chi.sigma
    }

    /// Linear interpolation of `ψ`; domain error outside the grid.
    pub fn psi_at(&self, q: f64) -> Result<Complex64> {
        let x = (q - self.grid.origin) / self.grid.dx;
        let last = (self.grid.n - 1) as f64;
        if !(0.0..=last).contains(&x) {
            return Err(Error::domain(format!("q∥ = {q} lies outside the grid")));
        }
        let j = (x.floor() as usize).min(self.grid.n - 2);
        let t = x - j as f64;
        Ok(self.psi[j] * (1.0 - t) + self.psi[j + 1] * t)
    }

    /// `⟨p∥⟩ = σ Im ∫ ψ* ∂ψ` by central differences.
    pub fn mean_momentum(&self) -> f64 {
        let n = self.grid.n;
        let terms: Vec<f64> = (1..n - 1)
            .map(|j| (self.psi[j].conj() * (self.psi[j + 1] - self.psi[j - 1])).im / (2.0 * self.grid.dx))
            .collect();
        self.sigma() * pairwise_sum(&terms) * self.grid.dx
    }
}

/// `f̃(q, k) = Ψ(q + σk/2) Ψ*(q - σk/2)` for `q = (q0, q∥)`, `k = (k0, k∥)`.
pub fn quantum_distribution_eval(wp: &WavePacket, q: [f64; 2], k: [f64; 2]) -> Result<Complex64> {
    let s = wp.sigma();
    let time = wp.chi.eval(q[0] + 0.5 * s * k[0]) * wp.chi.eval(q[0] - 0.5 * s * k[0]).conj();
    let space = wp.psi_at(q[1] + 0.5 * s * k[1])? * wp.psi_at(q[1] - 0.5 * s * k[1])?.conj();
    Ok(time * space)
}

/// Same as [`quantum_distribution_eval`] for an analytic `Ψ(q0, q∥)`.
pub fn quantum_distribution_fn<F>(psi: F, q: [f64; 2], k: [f64; 2], sigma: f64) -> Complex64
where
    F: Fn([f64; 2]) -> Complex64,
{
    let plus = [q[0] + 0.5 * sigma * k[0], q[1] + 0.5 * sigma * k[1]];
    let minus = [q[0] - 0.5 * sigma * k[0], q[1] - 0.5 * sigma * k[1]];
    psi(plus) * psi(minus).conj()
}

/// Action-distribution form `n(q) exp(i k·∂S(q))`.
pub fn action_distribution_fourier(n: f64, grad_s: [f64; 2], k: [f64; 2]) -> Complex64 {
    n * (I * (k[0] * grad_s[0] + k[1] * grad_s[1])).exp()
}

/// `|f̃_Ψ - n e^{ik·∂S}|` for `Ψ = √n e^{iS/σ}`.
pub fn coherence_limit_error<N, S, G>(n: N, s: S, grad_s: G, q: [f64; 2], k: [f64; 2], sigma: f64) -> f64
where
    N: Fn([f64; 2]) -> f64,
    S: Fn([f64; 2]) -> f64,
    G: Fn([f64; 2]) -> [f64; 2],
{
    let psi = |x: [f64; 2]| n(x).sqrt() * (I * s(x) / sigma).exp();
    let quantum = quantum_distribution_fn(psi, q, k, sigma);
    (quantum - action_distribution_fourier(n(q), grad_s(q), k)).norm()
}

/// Wigner function of one factor on a `(q, p)` grid, row-major over `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Wigner1 {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest imaginary part discarded from the transform.
    pub imag_residue: f64,
}

impl Wigner1 {
    pub fn at(&self, j: usize, l: usize) -> f64 {
        self.values[j * self.p.len() + l]
    }

    pub fn dq(&self) -> f64 {
        self.q[1] - self.q[0]
    }

    pub fn dp(&self) -> f64 {
        self.p[1] - self.p[0]
    }

    /// `∫ f dp` at each `q`.
    pub fn position_marginal(&self) -> Vec<f64> {
        let np = self.p.len();
        self.values.chunks(np).map(|row| pairwise_sum(row) * self.dp()).collect()
    }

    /// `∫ f dq` at each `p`.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let np = self.p.len();
        (0..np)
            .map(|l| {
                let col: Vec<f64> = (0..self.q.len()).map(|j| self.at(j, l)).collect();
                pairwise_sum(&col) * self.dq()
            })
            .collect()
    }

    /// `∫∫ f g dq dp` on a shared grid.
    pub fn overlap(&self, other: &Wigner1) -> Result<f64> {
        if self.q != other.q || self.p != other.p {
            return Err(Error::domain("Wigner grids differ"));
        }
        let prod: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(pairwise_sum(&prod) * self.dq() * self.dp())
    }
}

/// Discrete Wigner transform
/// `f(q_j, p) = (1/2πσ) ∫ dy e^{-iyp/σ} ψ(q_j + y/2) ψ*(q_j - y/2)`
/// with `y = 2m·dx`; the momentum grid is `p_center + l·πσ/(N dx)`.
pub fn wigner_1d(psi: &[Complex64], grid: &SpatialGrid, sigma: f64, p_center: f64, exec: Exec) -> Wigner1 {
    let n = grid.n;
    let half = (n / 2) as isize;
    let dx = grid.dx;
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(n);
    let dp = PI * sigma / (n as f64 * dx);
    let demod: Vec<Complex64> = (0..n)
        .map(|i| {
            let m = i as isize - half;
            (-I * (2.0 * m as f64 * dx * p_center / sigma)).exp()
        })
        .collect();
    let rows = par::map_indices(n, exec, |j| {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        // m = -N/2 has no partner +N/2 and is left at zero
        for (i, slot) in buf.iter_mut().enumerate().skip(1) {
            let m = i as isize - half;
            let (a, b) = (j as isize + m, j as isize - m);
            if (0..n as isize).contains(&a) && (0..n as isize).contains(&b) {
                *slot = psi[a as usize] * psi[b as usize].conj() * demod[i];
            }
        }
        centered_fft_with(&mut buf, false, &*fft);
        let scale = dx / (PI * sigma);
        let imag = buf.iter().fold(0.0f64, |m, z| m.max(z.im.abs())) * scale;
        (buf.into_iter().map(|z| z.re * scale).collect::<Vec<f64>>(), imag)
    });
    let mut values = Vec::with_capacity(n * n);
    let mut imag_residue = 0.0f64;
    for (row, imag) in rows {
        values.extend(row);
        imag_residue = imag_residue.max(imag);
    }
    Wigner1 {
        q: grid.points(),
        p: (0..n).map(|l| p_center + (l as f64 - half as f64) * dp).collect(),
        values,
        imag_residue,
    }
}

/// Separable Wigner function `f(q0, q∥, p0, p∥) = f_χ(q0, p0) f_ψ(q∥, p∥)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    pub time: Wigner1,
    pub space: Wigner1,
}

impl WignerField {
    pub fn value(&self, i0: usize, l0: usize, i1: usize, l1: usize) -> f64 {
        self.time.at(i0, l0) * self.space.at(i1, l1)
    }

    pub fn imag_residue(&self) -> f64 {
        self.time.imag_residue.max(self.space.imag_residue)
    }
}

/// Time grid for `χ` resolving `±12c/Ω` around `q0_center` with `n` points.
pub fn time_grid(chi: &GlauberPacket, center: f64, half_width: f64, n: usize) -> Result<SpatialGrid> {
    SpatialGrid::centered(n, center, 2.0 * half_width.max(chi.support()) / n as f64)
}

const TIME_POINTS: usize = 256;

pub fn wigner_transform(wp: &WavePacket) -> Result<WignerField> {
    wigner_transform_with(wp, Exec::default())
}

pub fn wigner_transform_with(wp: &WavePacket, exec: Exec) -> Result<WignerField> {
    let tg = time_grid(&wp.chi, wp.chi.q0_center, 0.0, TIME_POINTS)?;
    let chi: Vec<Complex64> = tg.points().into_iter().map(|q| wp.chi.eval(q)).collect();
    Ok(WignerField {
        time: wigner_1d(&chi, &tg, wp.sigma(), wp.chi.p0_mean, exec),
        space: wigner_1d(&wp.psi, &wp.grid, wp.sigma(), wp.mean_momentum(), exec),
    })
}

/// Writes `q,p,f` rows.
pub fn write_wigner_csv<W: Write>(w: W, f: &Wigner1) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["q", "p", "f"])?;
    for (j, q) in f.q.iter().enumerate() {
        for (l, p) in f.p.iter().enumerate() {
            wr.write_record([q.to_string(), p.to_string(), f.at(j, l).to_string()])?;
        }
    }
    wr.flush()?;
    Ok(())
}

fn quad_complex<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64) -> Result<Complex64> {
    let re = integrate(|x| f(x).re, a, b, 1e-13, 1e-300)?.value;
    let im = integrate(|x| f(x).im, a, b, 1e-13, 1e-300)?.value;
    Ok(Complex64::new(re, im))
}

/// `⟨χ1|χ2⟩` by adaptive quadrature.
pub fn glauber_inner(a: &GlauberPacket, b: &GlauberPacket) -> Result<Complex64> {
    let lo = (a.q0_center - a.support()).min(b.q0_center - b.support());
    let hi = (a.q0_center + a.support()).max(b.q0_center + b.support());
    quad_complex(|x| a.eval(x).conj() * b.eval(x), lo, hi)
}

/// Both sides of the overlap identity
/// `∫∫ f1 f2 dq dp = |⟨Ψ1|Ψ2⟩|²/(2πσ)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapReport {
    /// `|⟨Ψ1|Ψ2⟩|²/(2πσ)²`.
    pub amplitude: f64,
    /// Direct phase-space quadrature of the Wigner product.
    pub quadrature: f64,
}

impl OverlapReport {
    pub fn relative_gap(&self) -> f64 {
        (self.amplitude - self.quadrature).abs() / self.amplitude.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn phase_space_overlap(wp1: &WavePacket, wp2: &WavePacket) -> Result<OverlapReport> {
    phase_space_overlap_with(wp1, wp2, Exec::default())
}

pub fn phase_space_overlap_with(wp1: &WavePacket, wp2: &WavePacket, exec: Exec) -> Result<OverlapReport> {
    if wp1.grid != wp2.grid {
        return Err(Error::domain("wave packets live on different spatial grids"));
    }
    let (a, b) = (&wp1.chi, &wp2.chi);
    if a.sigma != b.sigma || a.c != b.c {
        return Err(Error::domain("wave packets use different σ or c"));
    }
    let sigma = a.sigma;

    let time_amp = glauber_inner(a, b)?;
    let space_terms: Vec<Complex64> = wp1.psi.iter().zip(&wp2.psi).map(|(x, y)| x.conj() * y).collect();
    let dx = wp1.grid.dx;
    let space_amp = Complex64::new(
        trapezoid(&space_terms.iter().map(|z| z.re).collect::<Vec<_>>(), dx),
        trapezoid(&space_terms.iter().map(|z| z.im).collect::<Vec<_>>(), dx),
    );
    let amplitude = (time_amp * space_amp).norm_sqr() / (2.0 * PI * sigma).powi(2);

    // common time grid wide enough in q0 and p0 for both packets
    let center = 0.5 * (a.q0_center + b.q0_center);
    let half_q = 0.5 * (a.q0_center - b.q0_center).abs() + a.support().max(b.support());
    let half_p = 0.5 * (a.p0_mean - b.p0_mean).abs() + 12.0 * sigma * a.omega.max(b.omega) / a.c;
    let needed = 2.0 * half_q * 2.0 * half_p / (PI * sigma);
    let n = needed.max(TIME_POINTS as f64).log2().ceil().exp2() as usize;
    if n > 1 << 14 {
        return Err(Error::domain("time packets are too far apart for a shared phase-space grid"));
    }
    let tg = time_grid(a, center, half_q, n)?;
    let p_center = 0.5 * (a.p0_mean + b.p0_mean);
    let sample = |chi: &GlauberPacket| -> Vec<Complex64> { tg.points().into_iter().map(|q| chi.eval(q)).collect() };
    let wt1 = wigner_1d(&sample(a), &tg, sigma, p_center, exec);
    let wt2 = wigner_1d(&sample(b), &tg, sigma, p_center, exec);

    let p_space = 0.5 * (wp1.mean_momentum() + wp2.mean_momentum());
    let ws1 = wigner_1d(&wp1.psi, &wp1.grid, sigma, p_space, exec);
    let ws2 = wigner_1d(&wp2.psi, &wp2.grid, sigma, p_space, exec);
    let quadrature = wt1.overlap(&wt2)? * ws1.overlap(&ws2)?;
    Ok(OverlapReport { amplitude, quadrature })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UncertaintyProducts {
    pub delta_e: f64,
    pub delta_t: f64,
    pub product: f64,
}

/// Time-energy spreads of the Glauber factor, by quadrature of `|χ|²` and
/// `σ²|∂χ|²`.
pub fn uncertainty_products(wp: &WavePacket) -> Result<UncertaintyProducts> {
    glauber_uncertainty(&wp.chi)
}

pub fn glauber_uncertainty(chi: &GlauberPacket) -> Result<UncertaintyProducts> {
    let (lo, hi) = (chi.q0_center - chi.support(), chi.q0_center + chi.support());
    let q = |f: &dyn Fn(f64) -> f64| integrate(f, lo, hi, 1e-14, 1e-300).map(|r| r.value);
    let norm = q(&|x| chi.eval(x).norm_sqr())?;
    let mean = q(&|x| x * chi.eval(x).norm_sqr())? / norm;
    let var_q0 = q(&|x| (x - mean).powi(2) * chi.eval(x).norm_sqr())? / norm;
    let s = chi.sigma;
    let mean_p0 = s * q(&|x| (chi.eval(x).conj() * chi.derivative(x)).im)? / norm;
    let mean_p0_sq = s * s * q(&|x| chi.derivative(x).norm_sqr())? / norm;
    let delta_t = var_q0.sqrt() / chi.c;
    let delta_e = chi.c * (mean_p0_sq - mean_p0 * mean_p0).max(0.0).sqrt();
    Ok(UncertaintyProducts {
        delta_e,
        delta_t,
        product: delta_e * delta_t,
    })
}

/// Residual of `-σ²□Ψ = m0²c²Ψ` for the plane wave
/// `A exp(i(p0 q0 + p∥ q∥)/σ)`: `(p0² - p∥² - m0²c²)|A|`.
pub fn kg_residual_plane_wave(p0: f64, p_par: f64, amplitude: f64, m0: f64, c: f64) -> f64 {
    (p0 * p0 - p_par * p_par - m0 * m0 * c * c) * amplitude.abs()
}

/// Samples `exp(i(p0 q0 + p∥ q∥)/σ)` on a `(q0, q∥)` grid.
pub fn sample_plane_wave(grid: &Grid2, p0: f64, p_par: f64, sigma: f64) -> Vec<Complex64> {
    (0..grid.len())
        .map(|k| {
            let (q0, q1) = (grid.q0(k / grid.n1), grid.q1(k % grid.n1));
            (I * (p0 * q0 + p_par * q1) / sigma).exp()
        })
        .collect()
}

/// `□Ψ = ∂0²Ψ - ∂∥²Ψ` at interior points, row-major over the
/// `(n0-2) × (n1-2)` interior.
pub fn box_operator(psi: &[Complex64], grid: &Grid2) -> Vec<Complex64> {
    let (n0, n1) = (grid.n0, grid.n1);
    let mut out = Vec::with_capacity((n0 - 2) * (n1 - 2));
    for i in 1..n0 - 1 {
        for j in 1..n1 - 1 {
            let k = i * n1 + j;
            let d00 = (psi[k + n1] - 2.0 * psi[k] + psi[k - n1]) / (grid.d0 * grid.d0);
            let d11 = (psi[k + 1] - 2.0 * psi[k] + psi[k - 1]) / (grid.d1 * grid.d1);
            out.push(d00 - d11);
        }
    }
    out
}

fn interior(psi: &[Complex64], grid: &Grid2) -> Vec<Complex64> {
    (1..grid.n0 - 1)
        .flat_map(|i| (1..grid.n1 - 1).map(move |j| psi[i * grid.n1 + j]))
        .collect()
}

/// `-σ²□Ψ - m0²c²Ψ` on the interior of a gridded field.
pub fn kg_residual_grid(psi: &[Complex64], grid: &Grid2, m0: f64, c: f64, sigma: f64) -> Vec<Complex64> {
    let mc2 = m0 * m0 * c * c;
    box_operator(psi, grid)
        .into_iter()
        .zip(interior(psi, grid))
        .map(|(b, v)| -sigma * sigma * b - mc2 * v)
        .collect()
}

/// Least-squares `a` in `□Ψ = aΨ` over interior points.
pub fn fit_box_eigenvalue(psi: &[Complex64], grid: &Grid2) -> Result<f64> {
    let inner = interior(psi, grid);
    let num: Vec<f64> = box_operator(psi, grid).iter().zip(&inner).map(|(b, v)| (v.conj() * b).re).collect();
    let den: Vec<f64> = inner.iter().map(|v| v.norm_sqr()).collect();
    let d = pairwise_sum(&den);
    if !(d > 0.0) {
        return Err(Error::domain("field vanishes on the grid interior"));
    }
    Ok(pairwise_sum(&num) / d)
}

/// `m_x = √(m0² - δp0²/c²)`.
pub fn effective_mass(m0: f64, delta_p0_sq: f64, c: f64) -> Result<f64> {
    let r = m0 * m0 - delta_p0_sq / (c * c);
    if !(r > 0.0) {
        return Err(Error::domain(format!(
            "effective mass is not positive: m0² - δp0²/c² = {r}"
        )));
    }
    Ok(r.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonrelParams {
    pub m_x: f64,
    pub mean_p2: f64,
    pub sigma: f64,
    /// May be infinite, which removes the relativistic correction.
    pub c: f64,
}

impl NonrelParams {
    /// `1 - ⟨p²⟩/2m_x²c²`.
    pub fn correction_factor(&self) -> f64 {
        1.0 - self.mean_p2 / (2.0 * self.m_x * self.m_x * self.c * self.c)
    }
}

/// Free evolution under
/// `iσ ∂ψ/∂t = -(σ²∇²/2m_x)(1 - ⟨p²⟩/2m_x²c²) ψ` on a periodic grid.
/// Returns `n_steps + 1` snapshots at `t = k·t_end/n_steps`.
pub fn evolve_nonrel(
    psi0: &[Complex64],
    dx: f64,
    params: &NonrelParams,
    t_end: f64,
    n_steps: usize,
) -> Result<Vec<Vec<Complex64>>> {
    if !(params.m_x > 0.0) {
        return Err(Error::domain(format!("effective mass must be positive, got {}", params.m_x)));
    }
    if !(params.sigma > 0.0 && params.c > 0.0 && dx > 0.0) {
        return Err(Error::domain("σ, c and dx must be positive"));
    }
    if n_steps == 0 {
        return Err(Error::Config("n_steps must be at least 1".into()));
    }
    let n = psi0.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut spectrum = psi0.to_vec();
    fwd.process(&mut spectrum);
    let factor = params.correction_factor();
    let omega: Vec<f64> = (0..n)
        .map(|j| {
            let freq = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            let k = 2.0 * PI * freq / (n as f64 * dx);
            params.sigma * k * k / (2.0 * params.m_x) * factor
        })
        .collect();
    Ok((0..=n_steps)
        .map(|s| {
            let t = t_end * s as f64 / n_steps as f64;
            let mut buf: Vec<Complex64> = spectrum.iter().zip(&omega).map(|(z, w)| z * (-I * w * t).exp()).collect();
            inv.process(&mut buf);
            buf.iter_mut().for_each(|z| *z /= n as f64);
            buf
        })
        .collect())
}

/// Expectation values in atomic units (`ħ = m = 1`, `c = 1/α`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HydrogenCorrections {
    pub h_c: f64,
    pub h1: f64,
    /// Dirac fine-structure shift of the ground state, `-α²/8`.
    pub dirac_ref: f64,
}

pub fn hydrogen_corrections(mean_p2: f64, mean_p4: f64, alpha: f64) -> HydrogenCorrections {
    let a2 = alpha * alpha;
    HydrogenCorrections {
        h_c: -a2 * mean_p2 * mean_p2 / 4.0,
        h1: -a2 * mean_p4 / 8.0,
        dirac_ref: -a2 / 8.0,
    }
}

/// Conjugate-coordinate grid of `f̃`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KGrid {
    pub n0: usize,
    pub n1: usize,
    pub dk0: f64,
    pub dk1: f64,
}

impl KGrid {
    /// Momentum `(p0, p∥)` at output index `(l0, l1)`.
    pub fn momentum(&self, l0: usize, l1: usize) -> (f64, f64) {
        let p = |l: usize, n: usize, dk: f64| (l as f64 - (n / 2) as f64) * 2.0 * PI / (n as f64 * dk);
        (p(l0, self.n0, self.dk0), p(l1, self.n1, self.dk1))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SqrtOperatorOutput {
    pub field: Vec<Complex64>,
    /// L1 mass of the momentum representation on `p0² ≤ |p|²`, relative to
    /// the total.
    pub leakage: f64,
}

/// Applies `-c√(p0² - p∥²)` in the momentum representation of `f̃`, with
/// spacelike momenta masked to zero.
pub fn apply_sqrt_operator(ftilde: &[Complex64], grid: &KGrid, c: f64, exec: Exec) -> Result<SqrtOperatorOutput> {
    let (n0, n1) = (grid.n0, grid.n1);
    if ftilde.len() != n0 * n1 {
        return Err(Error::Config(format!("field has {} values, grid has {}", ftilde.len(), n0 * n1)));
    }
    if n0 % 2 != 0 || n1 % 2 != 0 {
        return Err(Error::Config("k-grid sizes must be even".into()));
    }
    let mut data = ftilde.to_vec();
    centered_fft_2d(&mut data, n0, n1, false, exec);
    let mut total = Vec::with_capacity(n0);
    let mut leaked = Vec::with_capacity(n0);
    for l0 in 0..n0 {
        let (mut t, mut s) = (Vec::with_capacity(n1), Vec::with_capacity(n1));
        for l1 in 0..n1 {
            let (p0, p1) = grid.momentum(l0, l1);
            let v = &mut data[l0 * n1 + l1];
            let mag = v.norm();
            t.push(mag);
            let r = p0 * p0 - p1 * p1;
            if r > 0.0 {
                *v *= -c * r.sqrt();
            } else {
                s.push(mag);
                *v = Complex64::new(0.0, 0.0);
            }
        }
        total.push(pairwise_sum(&t));
        leaked.push(pairwise_sum(&s));
    }
    let total = pairwise_sum(&total);
    let leakage = if total > 0.0 { pairwise_sum(&leaked) / total } else { 0.0 };
    centered_fft_2d(&mut data, n0, n1, true, exec);
    Ok(SqrtOperatorOutput { field: data, leakage })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(omega: f64, sigma: f64) -> GlauberPacket {
        GlauberPacket::new(2.0, -1.0, omega, sigma, 1.0).unwrap()
    }

    #[test]
    fn glauber_moments() {
        let chi = packet(2.0, 1.0);
        let dens = |x: f64| chi.eval(x).norm_sqr();
        let norm = integrate(dens, -10.0, 14.0, 1e-13, 0.0).unwrap().value;
        let mean = integrate(|x| x * dens(x), -10.0, 14.0, 1e-13, 0.0).unwrap().value;
        let var = integrate(|x| (x - 2.0).powi(2) * dens(x), -10.0, 14.0, 1e-13, 0.0).unwrap().value;
        assert!((norm - 1.0).abs() < 1e-10);
        assert!((mean - 2.0).abs() < 1e-10);
        assert!((var - 0.125).abs() < 1e-10);
    }

    #[test]
    fn uncertainty_examples() {
        let u = glauber_uncertainty(&GlauberPacket::new(0.0, -1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
        assert!((u.delta_t - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((u.delta_e - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((u.product - 0.5).abs() < 1e-9);
        let u10 = glauber_uncertainty(&GlauberPacket::new(0.0, -1.0, 10.0, 1.0, 1.0).unwrap()).unwrap();
        assert!((u10.delta_t * 10.0 - u.delta_t).abs() < 1e-9);
        assert!((u10.delta_e / 10.0 - u.delta_e).abs() < 1e-9);
        let u2 = glauber_uncertainty(&GlauberPacket::new(0.0, -1.0, 1.0, 2.0, 1.0).unwrap()).unwrap();
        assert!((u2.product - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hydrogen_examples() {
        let alpha = 1.0 / 137.035999;
        let h = hydrogen_corrections(1.0, 5.0, alpha);
        assert_eq!(h.h_c, -alpha * alpha / 4.0);
        assert_eq!(h.h1, -5.0 * alpha * alpha / 8.0);
        assert_eq!(h.dirac_ref, -alpha * alpha / 8.0);
        assert!((h.h_c - -1.3312838646429165e-5).abs() < 1e-18);
        assert_eq!(hydrogen_corrections(0.0, 5.0, alpha).h_c, 0.0);
    }

    #[test]
    fn plane_wave_kg() {
        assert!(kg_residual_plane_wave(-2f64.sqrt(), 1.0, 1.0, 1.0, 1.0).abs() < 1e-15);
        assert_eq!(kg_residual_plane_wave(-2.0, 1.0, 1.0, 1.0, 1.0), 2.0);
        assert_eq!(kg_residual_plane_wave(-2.0, 1.0, -0.5, 1.0, 1.0), 1.0);
    }

    #[test]
    fn effective_mass_domain() {
        assert!((effective_mass(1.0, 0.36, 1.0).unwrap() - 0.8).abs() < 1e-15);
        assert!(effective_mass(1.0, 1.0, 1.0).is_err());
        let p = NonrelParams {
            m_x: 1.0,
            mean_p2: 3.0,
            sigma: 1.0,
            c: f64::INFINITY,
        };
        assert_eq!(p.correction_factor(), 1.0);
    }

    #[test]
    fn out_of_grid_evaluation_is_an_error() {
        let g = SpatialGrid::centered(64, 0.0, 0.2).unwrap();
        let wp = WavePacket::gaussian(packet(1.0, 1.0), g, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(quantum_distribution_eval(&wp, [0.0, 0.0], [0.0, 100.0]).is_err());
        let z = quantum_distribution_eval(&wp, [2.0, 0.4], [0.0, 0.0]).unwrap();
        let expected = wp.chi.eval(2.0).norm_sqr() * wp.psi_at(0.4).unwrap().norm_sqr();
        assert!((z.re - expected).abs() < 1e-14 && z.im.abs() < 1e-14);
    }
}
