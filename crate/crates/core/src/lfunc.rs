//! Continuation and evaluation of `L(s,f)`, `Λ(s,f)`, the critical-line
//! signatures, additive twists, and the log-weighted series `L(s,f₁)`, `ψ_f`.
//!
//! Every completed function here is a "dual sum"
//!
//! ```text
//! Λ(s) = δ^s Σ a(n) G(s, x_n δ) + ω δ^{s-w} Σ b(n) G(w-s, x_n/δ),   G(v,z) = ∫_1^∞ e^{-zu} u^{v-1} du
//! ```
//!
//! with `w = k+1/2`, `x_n = n·x` and `δ = e^{iθ}`. Turning the Mellin contour
//! by `θ` (allowed because the form is holomorphic in the half-plane) changes
//! nothing mathematically but removes the `e^{π|t|/2}` cancellation between
//! the two sums high on the critical line. `θ = 0` is the textbook
//! incomplete-gamma formula. The expression is symmetric under
//! `s ↦ w - s`, `a ↔ b`, `δ ↦ 1/δ`, so the functional equation holds by
//! construction.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{geometric_tail_bound, CoeffClass, Fricke, HalfIntegralForm};
use crate::quad::{integrate, QuadOptions};
use crate::special::{epsilon_d, incomplete_gamma_kernel, log_gamma, shimura_jacobi};

const EPS: f64 = f64::EPSILON;

/// How far short of a quarter turn the contour stops, in units of `1/|t|`.
/// Larger values cost fewer terms and more cancellation (about `e^{margin}`).
pub const ROTATION_MARGIN: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LValue {
    pub value: Complex64,
    pub abs_err: f64,
    pub terms_used: usize,
    pub loss_of_precision: bool,
    /// Set for the trivial zeros `L(-m, f) = 0` forced by the pole of `Γ`.
    pub exact_zero: bool,
}

impl LValue {
    fn exact_zero() -> Self {
        Self { value: Complex64::new(0.0, 0.0), abs_err: 0.0, terms_used: 0, loss_of_precision: false, exact_zero: true }
    }
}

/// A real quantity with an error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealValue {
    pub value: f64,
    pub abs_err: f64,
}

fn rotation_angle(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    t.signum() * (PI / 2.0 - ROTATION_MARGIN / t.abs()).max(0.0)
}

struct HalfSum {
    value: Complex64,
    err: f64,
    magnitude: f64,
    terms: usize,
    loss: bool,
}

/// `Σ coef(n) G(v, n·zstep)` with a rigorous tail bound from `|coef(n)| <= C n^a`.
fn half_sum(coef: &dyn Fn(usize) -> Complex64, v: Complex64, zstep: Complex64, growth: (f64, f64), len: usize) -> Result<HalfSum> {
    let b = (v.re - 1.0).max(0.0);
    let ratio = (-zstep.re).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut mag = 0.0;
    let mut loss = false;
    let mut n = 0usize;
    loop {
        n += 1;
        if n > len {
            return Err(Error::InsufficientCoefficients { needed: n, available: len });
        }
        let a = coef(n);
        if a.norm() != 0.0 {
            let g = incomplete_gamma_kernel(v, zstep * n as f64)?;
            let term = a * g.value;
            acc += term;
            mag += term.norm();
            err += a.norm() * g.abs_err;
            loss |= g.loss_of_precision;
        }
        let next_re = zstep.re * (n + 1) as f64;
        if next_re > b + 1.0 {
            let tail = geometric_tail_bound(growth.0, growth.1, ratio, n) / (next_re - b);
            if tail <= 1e-17 * mag || tail < 1e-300 {
                err += tail + mag * EPS * 4.0;
                return Ok(HalfSum { value: acc, err, magnitude: mag, terms: n, loss });
            }
        }
    }
}

/// Data of one dual sum.
struct DualSum<'a> {
    weight: f64,
    x_step: f64,
    front: &'a dyn Fn(usize) -> Complex64,
    back: &'a dyn Fn(usize) -> Complex64,
    omega: Complex64,
    growth: (f64, f64),
    len: usize,
}

impl DualSum<'_> {
    fn eval(&self, s: Complex64) -> Result<LValue> {
        let theta = rotation_angle(s.im);
        let delta = Complex64::from_polar(1.0, theta);
        let w = Complex64::new(self.weight, 0.0);
        let first = half_sum(self.front, s, delta * self.x_step, self.growth, self.len)?;
        let second = half_sum(self.back, w - s, delta.conj() * self.x_step, self.growth, self.len)?;
        // δ^s = e^{iθs}, δ^{s-w} = e^{iθ(s-w)}
        let p1 = (Complex64::i() * theta * s).exp();
        let p2 = (Complex64::i() * theta * (s - w)).exp() * self.omega;
        let value = p1 * first.value + p2 * second.value;
        let phase_err = EPS * (4.0 + theta.abs() * s.norm());
        let abs_err = p1.norm() * (first.err + first.magnitude * phase_err) + p2.norm() * (second.err + second.magnitude * phase_err);
        Ok(LValue {
            value,
            abs_err,
            terms_used: first.terms.max(second.terms),
            loss_of_precision: first.loss || second.loss,
            exact_zero: false,
        })
    }
}

/// `Λ(s,f) = (2π/√4N)^{-s} Γ(s) L(s,f)`, entire.
pub fn lambda_completed(form: &HalfIntegralForm, s: Complex64) -> Result<LValue> {
    let front = |n: usize| form.coeff(n);
    let back = |n: usize| form.partner_coeff(n);
    DualSum {
        weight: form.weight(),
        x_step: 2.0 * PI / form.sqrt_level(),
        front: &front,
        back: &back,
        omega: Complex64::new(1.0, 0.0),
        growth: (form.growth_c(), form.growth_exp()),
        len: form.len(),
    }
    .eval(s)
}

fn is_gamma_pole(s: Complex64) -> bool {
    s.im == 0.0 && s.re <= 0.0 && s.re == s.re.round()
}

/// `L(s,f)` by continuation: `Λ(s,f) (2π/√4N)^s / Γ(s)`.
pub fn l_value(form: &HalfIntegralForm, s: Complex64) -> Result<LValue> {
    if is_gamma_pole(s) {
        return Ok(LValue::exact_zero());
    }
    let lam = lambda_completed(form, s)?;
    let lg = log_gamma(s)?;
    let factor = (s * (2.0 * PI / form.sqrt_level()).ln() - lg.value).exp();
    let value = lam.value * factor;
    let abs_err = lam.abs_err * factor.norm() + value.norm() * (lg.abs_err + EPS * (4.0 + s.norm()));
    Ok(LValue { value, abs_err, ..lam })
}

/// `Σ coef(n) n^{-s}` for `Re s > a + 1`, with the integral tail bound.
fn dirichlet_sum(coef: &dyn Fn(usize) -> Complex64, s: Complex64, growth: (f64, f64), len: usize, start: usize) -> Result<LValue> {
    let beta = s.re - growth.1;
    if beta <= 1.0 {
        return Err(Error::InvalidInput(format!("Dirichlet series does not converge absolutely at {s}")));
    }
    let tail = |m: usize| growth.0 * (m as f64).powf(1.0 - beta) / (beta - 1.0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    let mut n = start;
    loop {
        let a = coef(n);
        if a.norm() != 0.0 {
            let term = a * (-s * (n as f64).ln()).exp();
            acc += term;
            mag += term.norm();
        }
        let t = tail(n);
        // stop at the stored length too; the tail bound then carries the cost
        if n >= len || (n > start && (t <= 1e-17 * mag || t < 1e-300)) {
            return Ok(LValue {
                value: acc,
                abs_err: t + mag * EPS * (4.0 + s.norm()),
                terms_used: n,
                loss_of_precision: false,
                exact_zero: false,
            });
        }
        n += 1;
    }
}

/// `L(s,f)` by direct summation; only where it converges absolutely.
pub fn l_direct(form: &HalfIntegralForm, s: Complex64) -> Result<LValue> {
    dirichlet_sum(&|n| form.coeff(n), s, (form.growth_c(), form.growth_exp()), form.len(), 1)
}

/// Continuation, switching to direct summation once `Re s` clears the
/// abscissa of absolute convergence by 7 (the Hecke-bound tail is then tiny).
fn l_auto(form: &HalfIntegralForm, s: Complex64) -> Result<LValue> {
    if s.re >= form.growth_exp() + 8.0 {
        l_direct(form, s)
    } else {
        l_value(form, s)
    }
}

/// Which signature of the pair `(R_f, I_f)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Signature {
    Plus,
    Minus,
}

/// `(Λ(c+it, f) ± Λ(c+it, f|W))/2` and `/(2i)` combined per coefficient class.
fn signature(form: &HalfIntegralForm, t: f64, which: Signature) -> Result<RealValue> {
    let s = Complex64::new(form.critical_re(), t);
    let lam = lambda_completed(form, s)?;
    let lam_w = match form.fricke() {
        Fricke::Eigenvalue(e) => LValue { value: lam.value * (*e as f64), ..lam },
        Fricke::Partner(_) => lambda_completed(&form.partner_form(), s)?,
    };
    let err = 0.5 * (lam.abs_err + lam_w.abs_err);
    let combo = match which {
        Signature::Plus => (lam.value + lam_w.value) * 0.5,
        Signature::Minus => (lam.value - lam_w.value) / Complex64::new(0.0, 2.0),
    };
    let value = match form.coeff_class() {
        CoeffClass::Real => combo.re,
        CoeffClass::PurelyImaginary => combo.im,
    };
    Ok(RealValue { value, abs_err: err })
}

/// `R_f(t)`; real and even for real coefficients.
pub fn r_f(form: &HalfIntegralForm, t: f64) -> Result<RealValue> {
    signature(form, t, Signature::Plus)
}

/// `I_f(t)`; real and odd for real coefficients, identically zero when `f|W = f`.
pub fn i_f(form: &HalfIntegralForm, t: f64) -> Result<RealValue> {
    signature(form, t, Signature::Minus)
}

pub fn signature_value(form: &HalfIntegralForm, t: f64, which: Signature) -> Result<RealValue> {
    signature(form, t, which)
}

/// Is `p/q` equivalent to `i∞` under `Γ₀(4N)`? True iff `gcd(p,q) = 1` and `4N | q`.
pub fn cusp_equivalent_to_infinity(p: i64, q: i64, level_4n: i64) -> bool {
    q > 0 && level_4n > 0 && p.gcd(&q) == 1 && q % level_4n == 0
}

/// An additive twist `p/q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TwistSpec {
    pub p: i64,
    pub q: i64,
    pub p_bar: i64,
    pub involutive: bool,
    pub cusp_ok: bool,
    pub level_4n: i64,
}

impl TwistSpec {
    pub fn new(p: i64, q: i64, level_4n: i64) -> Result<Self> {
        if q <= 0 || p.gcd(&q) != 1 {
            return Err(Error::InvalidCusp { p, q, level: level_4n.max(0) as u64 });
        }
        let p_bar = (mod_inverse(p.rem_euclid(q), q)).rem_euclid(q);
        Ok(Self {
            p,
            q,
            p_bar,
            involutive: (p * p - 1).rem_euclid(q) == 0,
            cusp_ok: cusp_equivalent_to_infinity(p, q, level_4n),
            level_4n,
        })
    }

    /// The twist `-p̄/q` on the other side of the functional equation.
    pub fn dual(&self) -> Result<Self> {
        TwistSpec::new(-self.p_bar, self.q, self.level_4n)
    }

    fn phase(&self, num: i64, n: usize) -> Complex64 {
        let r = ((num as i128 * n as i128).rem_euclid(self.q as i128)) as f64;
        Complex64::from_polar(1.0, 2.0 * PI * r / self.q as f64)
    }
}

fn mod_inverse(a: i64, m: i64) -> i64 {
    if m == 1 {
        return 0;
    }
    let e = a.extended_gcd(&m);
    e.x
}

/// `ω = i^{k+1/2} (−q/p)^{−2k−1} ε_p^{2k+1}`; the symbol is `±1` so its odd power is itself.
pub fn twist_root_number(form: &HalfIntegralForm, tw: &TwistSpec) -> Result<Complex64> {
    if tw.p % 2 == 0 {
        return Err(Error::OddityViolation(tw.p));
    }
    let chi = shimura_jacobi(-tw.q, tw.p)? as f64;
    let eps = epsilon_d(tw.p)?;
    let k = form.k() as i32;
    let i_pow = Complex64::from_polar(1.0, PI / 2.0 * (k as f64 + 0.5));
    Ok(i_pow * chi * eps.powi(2 * k + 1))
}

/// `η_{p/q}(s,f) = (2π/q)^{-s} Γ(s) L_{p/q}(s,f)`.
pub fn twisted_lambda(form: &HalfIntegralForm, tw: &TwistSpec, s: Complex64) -> Result<LValue> {
    if !tw.cusp_ok {
        return Err(Error::InvalidCusp { p: tw.p, q: tw.q, level: tw.level_4n as u64 });
    }
    let omega = twist_root_number(form, tw)?;
    let front = |n: usize| form.coeff(n) * tw.phase(tw.p, n);
    let back = |n: usize| form.coeff(n) * tw.phase(-tw.p_bar, n);
    DualSum {
        weight: form.weight(),
        x_step: 2.0 * PI / tw.q as f64,
        front: &front,
        back: &back,
        omega,
        growth: (form.growth_c(), form.growth_exp()),
        len: form.len(),
    }
    .eval(s)
}

/// `L_{p/q}(s,f)` by direct summation (any coprime `p/q`, absolute convergence only).
pub fn twisted_direct(form: &HalfIntegralForm, tw: &TwistSpec, s: Complex64) -> Result<LValue> {
    dirichlet_sum(&|n| form.coeff(n) * tw.phase(tw.p, n), s, (form.growth_c(), form.growth_exp()), form.len(), 1)
}

/// `Z_{f,p/q}(t) = i^{-k/2-1/4} (−q/p)^{k+1/2} ε_p^{k+1/2} η_{p/q}(k/2+1/4+it, f)`.
///
/// The real part is the signature; the imaginary part is returned as a
/// residual and should vanish to within the error bound.
pub fn z_twisted(form: &HalfIntegralForm, tw: &TwistSpec, t: f64) -> Result<LValue> {
    if !tw.involutive {
        return Err(Error::NonInvolutiveTwist { p: tw.p, q: tw.q });
    }
    if tw.p % 2 == 0 {
        return Err(Error::OddityViolation(tw.p));
    }
    let c = form.critical_re();
    let eta = twisted_lambda(form, tw, Complex64::new(c, t))?;
    let chi = shimura_jacobi(-tw.q, tw.p)?;
    let w = form.weight();
    let mut arg = -PI / 2.0 * c;
    if chi < 0 {
        arg += PI * w;
    }
    if tw.p.rem_euclid(4) == 3 {
        arg += PI / 2.0 * w;
    }
    let mut factor = Complex64::from_polar(1.0, arg);
    if form.coeff_class() == CoeffClass::PurelyImaginary {
        factor *= -Complex64::i();
    }
    Ok(LValue { value: eta.value * factor, ..eta })
}

/// `L*(s,f) = c^s L(s,f) − a(c)` with `c` the first non-zero index.
pub fn l_star(form: &HalfIntegralForm, s: Complex64) -> Result<LValue> {
    let c = first_nonzero(form)?;
    let l = l_value(form, s)?;
    l_star_from(form, c, s, l)
}

fn l_star_from(form: &HalfIntegralForm, c: usize, s: Complex64, l: LValue) -> Result<LValue> {
    let cs = (s * (c as f64).ln()).exp();
    let value = cs * l.value - form.coeff(c);
    Ok(LValue { value, abs_err: cs.norm() * l.abs_err + EPS * (cs * l.value).norm(), exact_zero: false, ..l })
}

fn first_nonzero(form: &HalfIntegralForm) -> Result<usize> {
    (1..=form.len()).find(|&n| form.coeff(n).norm() != 0.0).ok_or(Error::DegenerateAveragedForm(form.len()))
}

/// How the ray integral `∫_s^∞ L*(z) dz` is closed off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayTail {
    /// Quadrature all the way to where the integrand is negligible.
    Quadrature,
    /// Quadrature up to `Re z = a + 3`, then the remaining integral in closed
    /// form as an absolutely convergent log-weighted sum.
    Split,
}

/// `L(s,f₁) = c^{-s} ∫_s^∞ L*(z,f) dz` along the horizontal ray.
pub fn l_f1(form: &HalfIntegralForm, s: Complex64) -> Result<LValue> {
    l_f1_ray(form, s, RayTail::Quadrature, 1e-12)
}

/// Ray route with an explicit tail policy and relative quadrature target.
pub fn l_f1_ray(form: &HalfIntegralForm, s: Complex64, tail: RayTail, rel: f64) -> Result<LValue> {
    let c = first_nonzero(form)?;
    if (c + 1..=form.len()).all(|n| form.coeff(n).norm() == 0.0) {
        return Ok(LValue { value: Complex64::new(0.0, 0.0), abs_err: 0.0, terms_used: 0, loss_of_precision: false, exact_zero: false });
    }
    let (gc, ga) = (form.growth_c(), form.growth_exp());
    let cf = c as f64;
    let log_ratio = ((cf + 1.0) / cf).ln();
    // size of the leading term, used to set absolute targets
    let scale = form.coeff(c + 1).norm().max(gc) * (cf / (cf + 1.0)).powf(s.re) / log_ratio;
    // ∫_X^∞ |L*(s+x)| dx <= C c^{σ'} / log((c+1)/c) · Σ_{n>c} n^{a-σ'}, σ' = σ + X
    let ray_tail = |x: f64| {
        let sp = s.re + x;
        let beta = sp - ga;
        if beta <= 1.5 {
            return f64::INFINITY;
        }
        let c1 = cf + 1.0;
        gc * (sp * cf.ln()).exp() / log_ratio * ((-beta * c1.ln()).exp() + ((1.0 - beta) * c1.ln()).exp() / (beta - 1.0))
    };
    let x_end = match tail {
        RayTail::Quadrature => {
            let mut x = (ga + 2.0 - s.re).max(1.0);
            while ray_tail(x) > 1e-17 * scale {
                x += 1.0;
                if x > 2000.0 {
                    return Err(Error::IntegrationFailure("ray integral tail does not decay".into()));
                }
            }
            x
        }
        RayTail::Split => (ga + 3.0 - s.re).max(0.0),
    };
    let integrand = |x: f64| -> Result<Complex64> {
        let z = s + x;
        let l = l_auto(form, z)?;
        Ok(l_star_from(form, c, z, l)?.value)
    };
    let mut value = Complex64::new(0.0, 0.0);
    let mut abs_err = 0.0;
    let mut terms = 0;
    if x_end > 0.0 {
        let pieces = (x_end / 2.0).ceil().max(1.0) as usize;
        let opts = QuadOptions::new(1e-16 * scale * cf.powf(s.re), rel).pieces(pieces).max_intervals(20_000);
        let q = integrate(integrand, 0.0, x_end, opts)?;
        value += q.value;
        abs_err += q.abs_err;
        terms = q.evals;
    }
    let cs = (-s * cf.ln()).exp();
    value *= cs;
    abs_err *= cs.norm();
    match tail {
        RayTail::Quadrature => abs_err += ray_tail(x_end) * cs.norm(),
        RayTail::Split => {
            let rest = dirichlet_sum(
                &|n| if n > c { form.coeff(n) * (cf / n as f64).powf(x_end) / (n as f64 / cf).ln() } else { Complex64::new(0.0, 0.0) },
                s,
                (gc * cf.powf(x_end) / log_ratio, ga - x_end),
                form.len(),
                c + 1,
            )?;
            value += rest.value;
            abs_err += rest.abs_err;
        }
    }
    Ok(LValue { value, abs_err, terms_used: terms, loss_of_precision: false, exact_zero: false })
}

/// `L(s,f₁) = Σ_{n>c} a(n) / (n^s log(n/c))` by summation.
///
/// Inside the half-plane of absolute convergence this is a plain sum with a
/// rigorous tail. Elsewhere the sum is smoothed by `e^{-n/X}` and the
/// `X^{-m}` error terms are removed by Richardson extrapolation over
/// `X, 2X, 4X, ...`; the reported error is the last extrapolation step.
pub fn l_f1_direct(form: &HalfIntegralForm, s: Complex64) -> Result<LValue> {
    let c = first_nonzero(form)?;
    let cf = c as f64;
    let coef = |n: usize| if n > c { form.coeff(n) / (n as f64 / cf).ln() } else { Complex64::new(0.0, 0.0) };
    let log_ratio = ((cf + 1.0) / cf).ln();
    let growth = (form.growth_c() / log_ratio, form.growth_exp());
    if s.re > growth.1 + 1.5 {
        return dirichlet_sum(&coef, s, growth, form.len(), c + 1);
    }
    smoothed_richardson(&coef, s, form.len(), c + 1)
}

/// Levels of Richardson extrapolation used by [`l_f1_direct`] off the absolute-convergence region.
pub const RICHARDSON_LEVELS: usize = 6;

fn smoothed_richardson(coef: &dyn Fn(usize) -> Complex64, s: Complex64, len: usize, start: usize) -> Result<LValue> {
    // e^{-n/X} is below 1e-18 once n > 42 X
    let x_max = len as f64 / 42.0;
    let x0 = x_max / 2f64.powi(RICHARDSON_LEVELS as i32 - 1);
    if x0 < 50.0 {
        return Err(Error::InsufficientCoefficients { needed: (42.0 * 50.0 * 2f64.powi(RICHARDSON_LEVELS as i32 - 1)) as usize, available: len });
    }
    let mut rows: Vec<Complex64> = Vec::new();
    let mut mag = 0.0f64;
    for lvl in 0..RICHARDSON_LEVELS {
        let x = x0 * 2f64.powi(lvl as i32);
        let m = ((42.0 * x) as usize).min(len);
        let mut acc = Complex64::new(0.0, 0.0);
        for n in start..=m {
            let a = coef(n);
            if a.norm() != 0.0 {
                let term = a * (-s * (n as f64).ln() - n as f64 / x).exp();
                acc += term;
                mag = mag.max(term.norm());
            }
        }
        rows.push(acc);
    }
    // Neville table for the error series in h = 1/X with ratio 2
    let mut table = rows.clone();
    let mut last_delta = f64::INFINITY;
    for j in 1..RICHARDSON_LEVELS {
        let f = 2f64.powi(j as i32);
        for i in (j..RICHARDSON_LEVELS).rev() {
            table[i] = (table[i] * f - table[i - 1]) / (f - 1.0);
        }
        last_delta = (table[RICHARDSON_LEVELS - 1] - table[RICHARDSON_LEVELS - 2]).norm();
    }
    let value = table[RICHARDSON_LEVELS - 1];
    Ok(LValue {
        value,
        abs_err: last_delta + mag * EPS * len as f64,
        terms_used: len,
        loss_of_precision: false,
        exact_zero: false,
    })
}

/// The averaged form `(f + f|W)/2` as a self-dual form.
pub fn averaged_form(form: &HalfIntegralForm) -> Result<HalfIntegralForm> {
    let avg: Vec<Complex64> = (0..=form.len()).map(|n| form.averaged_coeff(n)).collect();
    if avg.iter().all(|a| a.norm() == 0.0) {
        return Err(Error::DegenerateAveragedForm(form.len()));
    }
    HalfIntegralForm::new(format!("avg({})", form.name()), form.k(), form.level_n(), avg, Fricke::Eigenvalue(1), form.coeff_class())
}

/// `ψ_f(s) = Σ_{n>r} α(n) / (n^s log(n/r))`, continued by the ray integral.
pub fn psi_f(form: &HalfIntegralForm, s: Complex64) -> Result<LValue> {
    let avg = averaged_form(form)?;
    l_f1_ray(&avg, s, RayTail::Split, 1e-10)
}

/// Same as [`psi_f`] on an already averaged form (saves the rebuild in sweeps).
pub fn psi_f_averaged(avg: &HalfIntegralForm, s: Complex64) -> Result<LValue> {
    l_f1_ray(avg, s, RayTail::Split, 1e-10)
}

/// `Ψ(t) = −i r^{c}/α(r) · {r^{it} ψ_f(c+it) − r^{i(t+H)} ψ_f(c+i(t+H))}`, `c = k/2+1/4`.
pub fn big_psi(form: &HalfIntegralForm, t: f64, h: f64) -> Result<LValue> {
    let avg = averaged_form(form)?;
    big_psi_averaged(&avg, t, h)
}

pub fn big_psi_averaged(avg: &HalfIntegralForm, t: f64, h: f64) -> Result<LValue> {
    let r = first_nonzero(avg)?;
    let crit = avg.critical_re();
    let rf = r as f64;
    let lead = -Complex64::i() * rf.powf(crit) / avg.coeff(r);
    if h == 0.0 {
        return Ok(LValue { value: Complex64::new(0.0, 0.0), abs_err: 0.0, terms_used: 0, loss_of_precision: false, exact_zero: true });
    }
    let a = psi_f_averaged(avg, Complex64::new(crit, t))?;
    let b = psi_f_averaged(avg, Complex64::new(crit, t + h))?;
    let ra = Complex64::from_polar(1.0, t * rf.ln());
    let rb = Complex64::from_polar(1.0, (t + h) * rf.ln());
    let value = lead * (ra * a.value - rb * b.value);
    Ok(LValue {
        value,
        abs_err: lead.norm() * (a.abs_err + b.abs_err),
        terms_used: a.terms_used + b.terms_used,
        loss_of_precision: a.loss_of_precision || b.loss_of_precision,
        exact_zero: false,
    })
}

/// One row of an evaluation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalRow {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub abs_err: f64,
}

pub fn write_eval_csv<W: Write>(rows: &[EvalRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "re", "im", "abs_err"])?;
    for r in rows {
        w.write_record([r.t.to_string(), r.re.to_string(), r.im.to_string(), r.abs_err.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_eval_json<W: Write>(rows: &[EvalRow], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, rows)?;
    Ok(())
}
