//! Complex log-gamma, upper incomplete gamma, the Stirling modulus, and the
//! characters `ε_d` and `(c/d)` entering half-integral automorphy factors.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;
const LN_2PI_HALF: f64 = 0.918_938_533_204_672_8;

/// A special-function value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaValue {
    pub value: Complex64,
    pub abs_err: f64,
    /// Set when cancellation cost more than half the mantissa.
    pub loss_of_precision: bool,
}

impl GammaValue {
    fn new(value: Complex64, abs_err: f64) -> Self {
        Self { value, abs_err, loss_of_precision: false }
    }
}

// B_{2k} / (2k (2k-1)) for k = 1..10
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43_867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

fn stirling_series(z: Complex64) -> Complex64 {
    let zi = z.inv();
    let zi2 = zi * zi;
    let mut corr = Complex64::new(0.0, 0.0);
    let mut p = zi;
    for c in STIRLING {
        corr += p * c;
        p *= zi2;
    }
    (z - 0.5) * z.ln() - z + LN_2PI_HALF + corr
}

/// `ln sin(πs)` without overflow for large `|Im s|` (defined modulo 2πi).
fn ln_sin_pi(s: Complex64) -> Complex64 {
    let i = Complex64::i();
    if s.im > 8.0 {
        let tail = (1.0 - (2.0 * PI * i * s).exp()).ln();
        Complex64::new(0.5, 0.0).ln() + i * (PI / 2.0) - i * PI * s + tail
    } else if s.im < -8.0 {
        let tail = (1.0 - (-2.0 * PI * i * s).exp()).ln();
        Complex64::new(0.5, 0.0).ln() - i * (PI / 2.0) + i * PI * s + tail
    } else {
        (s * PI).sin().ln()
    }
}

/// `ln Γ(s)`.
///
/// For `Re s >= 1/2` this is the branch that is continuous off the negative
/// axis and real on the positive axis. Left of that line the reflection
/// formula is used and only `exp(ln Γ)` is meaningful.
pub fn log_gamma(s: Complex64) -> Result<GammaValue> {
    if s.im == 0.0 && s.re <= 0.0 && s.re == s.re.round() {
        return Err(Error::PoleAtNonPositiveInteger(s.re as i64));
    }
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::InvalidInput(format!("log_gamma argument {s} is not finite")));
    }
    if s.re < 0.5 {
        let refl = log_gamma(1.0 - s)?;
        let ls = ln_sin_pi(s);
        let value = Complex64::new(PI.ln(), 0.0) - ls - refl.value;
        let err = refl.abs_err + 4.0 * EPS * (1.0 + (PI * s).norm() + value.norm());
        return Ok(GammaValue::new(value, err));
    }
    let mut z = s;
    let mut shift = Complex64::new(0.0, 0.0);
    let mut shift_mag = 0.0;
    if z.im.abs() < 16.0 && z.re < 16.0 {
        let m = (16.0 - z.re).ceil() as usize;
        for _ in 0..m {
            let l = z.ln();
            shift += l;
            shift_mag += l.norm();
            z += 1.0;
        }
    }
    let value = stirling_series(z) - shift;
    let mag = ((z - 0.5) * z.ln()).norm() + z.norm() + shift_mag;
    Ok(GammaValue::new(value, 2.0 * EPS * (1.0 + mag)))
}

/// `Γ(s)` itself; overflows for large real `s` like the true function.
pub fn gamma(s: Complex64) -> Result<Complex64> {
    Ok(log_gamma(s)?.value.exp())
}

/// Leading Stirling approximation `√(2π) |t|^{σ-1/2} e^{-π|t|/2}` of
/// `|Γ(σ+it)|`, meant for `|t| >= 1`.
pub fn stirling_modulus(sigma: f64, t: f64) -> f64 {
    let at = t.abs();
    (2.0 * PI).sqrt() * at.powf(sigma - 0.5) * (-PI * at / 2.0).exp()
}

/// Upper incomplete gamma `Γ(s, x) = ∫_x^∞ t^{s-1} e^{-t} dt` for real `x > 0`.
///
/// Uses the continued fraction when `x >= |s| + 2` and `Γ(s) - γ(s, x)`
/// with the power series for `γ` otherwise.
pub fn upper_incomplete_gamma(s: Complex64, x: f64) -> Result<GammaValue> {
    if !(x > 0.0) {
        return Err(Error::NonPositiveX(x));
    }
    let z = Complex64::new(x, 0.0);
    let lnz = z.ln();
    if use_continued_fraction(s, z) {
        let (f, ferr, _) = cf_tail(s, z)?;
        // Γ(s,x) = x^s e^{-x} F
        let pre_arg = s * lnz - z;
        let value = pre_arg.exp() * f;
        let rel = ferr + 2.0 * EPS * (1.0 + pre_arg.norm());
        Ok(GammaValue::new(value, rel * value.norm()))
    } else {
        let lg = log_gamma(s)?;
        let full = lg.value.exp();
        let (sum, sum_abs, n) = lower_series(s, z)?;
        let pre_arg = s * lnz - z;
        let pre = pre_arg.exp();
        let lower = pre * sum;
        let value = full - lower;
        let scale = full.norm().max(pre.norm() * sum_abs);
        let abs_err = full.norm() * (lg.abs_err + 2.0 * EPS)
            + pre.norm() * sum_abs * EPS * (4.0 + (n as f64).sqrt() + pre_arg.norm());
        let mut gv = GammaValue::new(value, abs_err);
        gv.loss_of_precision = scale > value.norm() * 2f64.powi(26);
        Ok(gv)
    }
}

/// Lower incomplete gamma `γ(s, x) = Γ(s) - Γ(s, x)` by its power series.
pub fn lower_incomplete_gamma(s: Complex64, x: f64) -> Result<GammaValue> {
    if !(x > 0.0) {
        return Err(Error::NonPositiveX(x));
    }
    let z = Complex64::new(x, 0.0);
    let (sum, sum_abs, n) = lower_series(s, z)?;
    let pre_arg = s * z.ln() - z;
    let pre = pre_arg.exp();
    let value = pre * sum;
    let abs_err = pre.norm() * sum_abs * EPS * (4.0 + (n as f64).sqrt() + pre_arg.norm());
    Ok(GammaValue::new(value, abs_err))
}

fn use_continued_fraction(w: Complex64, z: Complex64) -> bool {
    z.norm() >= w.norm() + 2.0
}

/// `Σ_{j>=0} z^j / (w (w+1) ... (w+j))`, its absolute sum, and the term count.
fn lower_series(w: Complex64, z: Complex64) -> Result<(Complex64, f64, usize)> {
    if w.norm() == 0.0 {
        return Err(Error::PoleAtNonPositiveInteger(0));
    }
    let mut term = w.inv();
    let mut sum = term;
    let mut abs_sum = term.norm();
    let mut j = 0usize;
    loop {
        j += 1;
        let denom = w + j as f64;
        if denom.norm() == 0.0 {
            return Err(Error::PoleAtNonPositiveInteger(-(j as i64)));
        }
        term *= z / denom;
        sum += term;
        let tn = term.norm();
        abs_sum += tn;
        if tn <= EPS * 0.25 * sum.norm().max(f64::MIN_POSITIVE) && (z / (w + (j + 1) as f64)).norm() < 0.5 {
            break;
        }
        if tn == 0.0 {
            break;
        }
        if j > 100_000 {
            return Err(Error::NonConvergence(format!("incomplete gamma series at w = {w}, z = {z}")));
        }
    }
    Ok((sum, abs_sum, j))
}

/// Continued fraction `F` with `Γ(w, z) = z^w e^{-z} F`, via modified Lentz.
/// Returns `(F, relative error estimate, iterations)`.
fn cf_tail(w: Complex64, z: Complex64) -> Result<(Complex64, f64, usize)> {
    let tiny = 1e-300;
    let mut b = z + 1.0 - w;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = if b.norm() < tiny { Complex64::new(1.0 / tiny, 0.0) } else { b.inv() };
    let mut h = d;
    let mut last = 1.0;
    for i in 1..20_000usize {
        let an = -(i as f64) * (i as f64 - w);
        b += 2.0;
        d = an * d + b;
        if d.norm() < tiny {
            d = Complex64::new(tiny, 0.0);
        }
        c = b + an / c;
        if c.norm() < tiny {
            c = Complex64::new(tiny, 0.0);
        }
        d = d.inv();
        let delta = d * c;
        h *= delta;
        last = (delta - 1.0).norm();
        if last < EPS {
            let rel = EPS * (4.0 + 2.0 * (i as f64).sqrt()) + last;
            return Ok((h, rel, i));
        }
    }
    Err(Error::NonConvergence(format!("incomplete gamma continued fraction at w = {w}, z = {z} (last step {last:e})")))
}

/// `G(w, z) = z^{-w} Γ(w, z) = ∫_1^∞ e^{-zu} u^{w-1} du` for `Re z > 0`.
///
/// This is the kernel of every incomplete-gamma sum in the library; complex
/// `z` is used by the rotated evaluation of completed L-functions.
pub fn incomplete_gamma_kernel(w: Complex64, z: Complex64) -> Result<GammaValue> {
    if !(z.re > 0.0) {
        return Err(Error::InvalidInput(format!("kernel needs Re z > 0, got {z}")));
    }
    let ez = (-z).exp();
    if use_continued_fraction(w, z) {
        let (f, rel, _) = cf_tail(w, z)?;
        let value = ez * f;
        let abs_err = value.norm() * (rel + 2.0 * EPS * (1.0 + z.norm()));
        Ok(GammaValue::new(value, abs_err))
    } else {
        let lnz = z.ln();
        let lg = log_gamma(w)?;
        let head_arg = lg.value - w * lnz;
        let head = head_arg.exp();
        let (sum, sum_abs, n) = lower_series(w, z)?;
        let value = head - ez * sum;
        let tail_mag = ez.norm() * sum_abs;
        let abs_err = head.norm() * (lg.abs_err + EPS * (2.0 + head_arg.norm()))
            + tail_mag * EPS * (4.0 + (n as f64).sqrt() + z.norm());
        let mut gv = GammaValue::new(value, abs_err);
        gv.loss_of_precision = head.norm().max(tail_mag) > value.norm() * 2f64.powi(26);
        Ok(gv)
    }
}

/// Shimura's `ε_d`: 1 for `d ≡ 1 (mod 4)`, `i` for `d ≡ 3 (mod 4)`.
pub fn epsilon_d(d: i64) -> Result<Complex64> {
    match d.rem_euclid(4) {
        1 => Ok(Complex64::new(1.0, 0.0)),
        3 => Ok(Complex64::i()),
        _ => Err(Error::EvenArgument(d)),
    }
}

/// Jacobi symbol `(a/n)` for odd `n > 0`; zero when `gcd(a, n) > 1`.
fn jacobi(a: i64, n: i64) -> i32 {
    debug_assert!(n > 0 && n % 2 == 1);
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut t = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Shimura's extension of the Jacobi symbol `(c/d)` for odd `d`.
///
/// For `d > 0` it is the Jacobi symbol. For `d < 0` it equals `(c/|d|)`,
/// negated when `c < 0`. `(0/±1) = 1`. Pairs with a common factor, even `d`,
/// and `(0,0)` are rejected.
pub fn shimura_jacobi(c: i64, d: i64) -> Result<i32> {
    if d % 2 == 0 || c.gcd(&d) != 1 {
        return Err(Error::UndefinedSymbol { c, d });
    }
    let base = jacobi(c, d.abs());
    if d < 0 && c < 0 {
        Ok(-base)
    } else {
        Ok(base)
    }
}
