//! Adaptive Gauss–Kronrod (7/15) quadrature for complex-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

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

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Number of equal pieces the range is cut into before adapting.
    pub initial_pieces: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-10, max_intervals: 4000, initial_pieces: 4 }
    }
}

impl QuadOptions {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    pub fn pieces(mut self, n: usize) -> Self {
        self.initial_pieces = n.max(1);
        self
    }

    pub fn max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub abs_err: f64,
    pub evals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut e = err;
    if resasc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / resasc).powf(1.5);
        e = if scale < 1.0 { resasc * scale } else { resasc };
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && floor > e {
        e = floor;
    }
    e
}

fn gk15<F>(f: &F, a: f64, b: f64) -> Result<Piece>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut resabs = fc.norm() * WGK[7];
    let mut fv1 = [Complex64::new(0.0, 0.0); 7];
    let mut fv2 = [Complex64::new(0.0, 0.0); 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kron += (f1 + f2) * WGK[j];
        resabs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kron * 0.5;
    let mut resasc = WGK[7] * (fc - mean).norm();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).norm() + (fv2[j] - mean).norm());
    }
    let ah = h.abs();
    let err = rescale_error(((kron - gauss) * h).norm(), resabs * ah, resasc * ah);
    Ok(Piece { a, b, value: kron * h, err })
}

/// Integrates `f` over `[a, b]` until the error estimate is below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if a == b {
        return Ok(QuadResult { value: Complex64::new(0.0, 0.0), abs_err: 0.0, evals: 0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::IntegrationFailure("infinite range; truncate with an envelope first".into()));
    }
    let n = opts.initial_pieces.max(1);
    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut evals = 0;
    for i in 0..n {
        let lo = a + (b - a) * i as f64 / n as f64;
        let hi = if i + 1 == n { b } else { a + (b - a) * (i + 1) as f64 / n as f64 };
        let p = gk15(&f, lo, hi)?;
        evals += 15;
        total += p.value;
        err += p.err;
        heap.push(p);
    }
    let tol = |v: Complex64| opts.abs_tol.max(opts.rel_tol * v.norm());
    while err > tol(total) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::IntegrationFailure(format!(
                "error estimate {err:e} above tolerance {:e} after {} intervals on [{a}, {b}]",
                tol(total),
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a.min(worst.b) && mid < worst.a.max(worst.b)) {
            return Err(Error::IntegrationFailure(format!("interval collapsed near {mid}")));
        }
        let left = gk15(&f, worst.a, mid)?;
        let right = gk15(&f, mid, worst.b)?;
        evals += 30;
        total += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        if heap.len() % 64 == 0 {
            // resum to shed accumulated rounding in the running totals
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.err).sum();
        }
    }
    let value: Complex64 = heap.iter().map(|p| p.value).sum();
    let abs_err: f64 = heap.iter().map(|p| p.err).sum();
    Ok(QuadResult { value, abs_err, evals })
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = integrate(|x| f(x).map(|v| Complex64::new(v, 0.0)), a, b, opts)?;
    Ok((r.value.re, r.abs_err))
}

/// Smallest `t >= start` (on a grid of spacing `step`) past the envelope's
/// peak where `envelope(t) <= rel * peak`. Used to cut infinite ranges.
pub fn envelope_cutoff<E>(envelope: E, start: f64, step: f64, rel: f64, limit: f64) -> f64
where
    E: Fn(f64) -> f64,
{
    let mut peak = envelope(start);
    let mut t = start;
    while t < limit {
        t += step;
        let e = envelope(t);
        if e > peak {
            peak = e;
        } else if e <= rel * peak {
            return t;
        }
    }
    limit
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Polynomial interpolant through values at Gauss–Legendre nodes, in barycentric form.
#[derive(Debug, Clone)]
pub struct LegendrePanel {
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl LegendrePanel {
    pub fn new(rule: &[(f64, f64)]) -> Self {
        let nodes: Vec<f64> = rule.iter().map(|p| p.0).collect();
        let bary = rule
            .iter()
            .enumerate()
            .map(|(j, &(x, w))| if j % 2 == 0 { 1.0 } else { -1.0 } * ((1.0 - x * x) * w).sqrt())
            .collect();
        Self { nodes, bary }
    }

    /// Interpolant at `x` in `[-1, 1]` through `values` at the nodes.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xj, &bj), &vj) in self.nodes.iter().zip(&self.bary).zip(values) {
            let d = x - xj;
            if d == 0.0 {
                return vj;
            }
            num += bj / d * vj;
            den += bj / d;
        }
        num / den
    }
}
