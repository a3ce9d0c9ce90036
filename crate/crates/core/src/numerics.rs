//! Small numerical building blocks shared across modules: compensated
//! reductions, adaptive Gauss–Kronrod quadrature, golden-section search,
//! straight-line least squares and a centered discrete Fourier transform.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::par::{self, Exec};

/// Pairwise (cascade) summation. Order of operations depends only on the
/// slice length, so results are reproducible.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

// 15-point Kronrod / 7-point Gauss abscissae and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Result of an adaptive quadrature.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

const MAX_INTERVALS: usize = 2000;

/// Globally adaptive Gauss–Kronrod (G7/K15) integration of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error_estimate: 0.0,
            intervals: 0,
        });
    }
    let (v, e) = gk15(&f, a, b);
    let mut segs = vec![(a, b, v, e)];
    loop {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if !total.is_finite() {
            return Err(Error::numerical(format!(
                "non-finite integrand on [{a}, {b}] after {} intervals",
                segs.len()
            )));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            // Re-sum in interval order for reproducibility.
            segs.sort_by(|x, y| x.0.total_cmp(&y.0));
            let vals: Vec<f64> = segs.iter().map(|s| s.2).collect();
            return Ok(Quadrature {
                value: pairwise_sum(&vals),
                error_estimate: err,
                intervals: segs.len(),
            });
        }
        if segs.len() >= MAX_INTERVALS {
            return Err(Error::numerical(format!(
                "quadrature on [{a}, {b}] did not converge: estimate {total:e}, \
                 error {err:e}, {} intervals",
                segs.len()
            )));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = segs.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
    }
}

/// Integrates over `[a, ∞)` through the substitution `x = a + scale·t/(1-t)`.
///
/// Only abscissae mapped to infinity contribute zero; any other non-finite
/// value is reported as a numerical failure.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Quadrature> {
    let mapped = |t: f64| {
        let s = 1.0 - t;
        let x = a + scale * t / s;
        if x.is_infinite() {
            return 0.0;
        }
        f(x) * scale / (s * s)
    };
    integrate(mapped, 0.0, 1.0, rel_tol, abs_tol)
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Ordinary least-squares straight line `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares.
    pub rss: f64,
    pub slope_std_err: f64,
    pub intercept_std_err: f64,
    pub n: usize,
}

impl LineFit {
    pub fn rms_residual(&self) -> f64 {
        (self.rss / self.n as f64).sqrt()
    }
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::domain(format!(
            "length mismatch: {} abscissae, {} ordinates",
            n,
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::domain("line fit needs at least 2 points"));
    }
    let nf = n as f64;
    let xm = pairwise_sum(x) / nf;
    let ym = pairwise_sum(y) / nf;
    let sxx: Vec<f64> = x.iter().map(|xi| (xi - xm) * (xi - xm)).collect();
    let sxy: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (xi - xm) * (yi - ym))
        .collect();
    let sxx = pairwise_sum(&sxx);
    let sxy = pairwise_sum(&sxy);
    let spread = x.iter().fold(0.0f64, |m, xi| m.max((xi - xm).abs()));
    if sxx == 0.0 || spread <= 1e-14 * xm.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::domain("degenerate design: all abscissae identical"));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let res: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let r = yi - intercept - slope * xi;
            r * r
        })
        .collect();
    let rss = pairwise_sum(&res);
    let (slope_std_err, intercept_std_err) = if n > 2 {
        let s2 = rss / (nf - 2.0);
        let xsq: Vec<f64> = x.iter().map(|xi| xi * xi).collect();
        (
            (s2 / sxx).sqrt(),
            (s2 * pairwise_sum(&xsq) / (nf * sxx)).sqrt(),
        )
    } else {
        (0.0, 0.0)
    };
    Ok(LineFit {
        slope,
        intercept,
        rss,
        slope_std_err,
        intercept_std_err,
        n,
    })
}

/// Trapezoid rule on uniform samples with spacing `dx`.
pub fn trapezoid(samples: &[f64], dx: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => {
            let inner = pairwise_sum(&samples[1..n - 1]);
            dx * (inner + 0.5 * (samples[0] + samples[n - 1]))
        }
    }
}

/// Centered DFT of even length `N` with grid indices shifted by `N/2`:
///
/// forward: `F_l = Σ_j f_j exp(-2πi (j-N/2)(l-N/2)/N)`
/// inverse: `f_j = (1/N) Σ_l F_l exp(+2πi (j-N/2)(l-N/2)/N)`
pub fn centered_fft(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    assert!(n.is_multiple_of(2), "centered FFT needs an even length, got {n}");
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    centered_fft_with(buf, inverse, &*fft);
}

pub(crate) fn centered_fft_with(buf: &mut [Complex64], inverse: bool, fft: &dyn rustfft::Fft<f64>) {
    let n = buf.len();
    let half_odd = (n / 2) % 2 == 1;
    for (j, v) in buf.iter_mut().enumerate() {
        if j % 2 == 1 {
            *v = -*v;
        }
    }
    fft.process(buf);
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    for (l, v) in buf.iter_mut().enumerate() {
        let flip = (l % 2 == 1) ^ half_odd;
        *v *= if flip { -scale } else { scale };
    }
}

/// Two-dimensional centered DFT of a row-major `n0 × n1` array.
pub fn centered_fft_2d(data: &mut [Complex64], n0: usize, n1: usize, inverse: bool, exec: Exec) {
    assert_eq!(data.len(), n0 * n1);
    let mut planner = FftPlanner::new();
    let (f1, f0) = if inverse {
        (planner.plan_fft_inverse(n1), planner.plan_fft_inverse(n0))
    } else {
        (planner.plan_fft_forward(n1), planner.plan_fft_forward(n0))
    };
    par::for_each_row_mut(data, n1, exec, |_, row| {
        centered_fft_with(row, inverse, &*f1)
    });
    let snapshot: &[Complex64] = data;
    let columns = par::map_indices(n1, exec, |j| {
        let mut col: Vec<Complex64> = (0..n0).map(|i| snapshot[i * n1 + j]).collect();
        centered_fft_with(&mut col, inverse, &*f0);
        col
    });
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            data[i * n1 + j] = v;
        }
    }
}
