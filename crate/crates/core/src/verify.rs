//! Numerical checks of the identities and bounds satisfied by the L-functions.
//!
//! Every identity check compares two independent routes: the left side is
//! built from the continued `Λ` (incomplete-gamma sums), the right side from
//! the q-series of the form. Only the special-function layer is shared.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{wilton_defect, HalfIntegralForm, Side};
use crate::lfunc::{averaged_form, psi_f_averaged, l_f1_direct, l_f1_ray, l_value, r_f, signature_value, RayTail, Signature};
use crate::quad::{envelope_cutoff, gauss_legendre, integrate, LegendrePanel, QuadOptions};
use crate::zeros::gamma_scale;

/// One sampled point of a check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub at: String,
    pub measured: f64,
    pub reference: f64,
    pub residual: f64,
}

impl Sample {
    fn new(at: impl Into<String>, measured: f64, reference: f64, residual: f64) -> Self {
        Self { at: at.into(), measured, reference, residual }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    #[serde(rename = "residual")]
    pub residual_or_sup: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(rename = "samples")]
    pub detail: Vec<Sample>,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, residual_or_sup: f64, tolerance: f64, detail: Vec<Sample>) -> Self {
        // NaN never passes
        let passed = residual_or_sup <= tolerance;
        Self { name: name.into(), residual_or_sup, tolerance, passed, detail }
    }

    fn with_extra_condition(mut self, ok: bool) -> Self {
        self.passed &= ok;
        self
    }
}

fn rel_gap(a: Complex64, b: Complex64, scale: f64) -> f64 {
    let d = (a - b).norm();
    if d == 0.0 {
        0.0
    } else {
        d / scale
    }
}

/// `|Γ|`-based envelope of `|Λ(c+it)|` times a polynomial allowance for `L`.
fn lambda_envelope(form: &HalfIntegralForm, t: f64, extra_power: f64) -> f64 {
    let s = Complex64::new(form.critical_re(), t);
    gamma_scale(form, s).unwrap_or(0.0) * (1.0 + t.abs()).powf(2.0 + extra_power)
}

const ENVELOPE_REL: f64 = 1e-14;

/// Upper end of `[0, T]` past which `env(t)` stays below `ENVELOPE_REL` of its peak.
fn cutoff(env: impl Fn(f64) -> f64) -> f64 {
    envelope_cutoff(env, 0.0, 1.0, ENVELOPE_REL, 4000.0)
}

/// `∫_0^T X(t) w(t) dt` for a real integrand on unit pieces.
fn real_integral<F>(integrand: F, t_end: f64, scale: f64, pieces_per_unit: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let pieces = (t_end.ceil() as usize).max(1) * pieces_per_unit;
    let opts = QuadOptions::new(1e-14 * scale, 1e-10).pieces(pieces).max_intervals(200_000);
    let q = integrate(|t| integrand(t).map(|v| Complex64::new(v, 0.0)), 0.0, t_end, opts)?;
    Ok((q.value.re, q.abs_err))
}

/// `T1 = (π/2) i^c e^{-icu} f(-e^{-iu}/√4N)` and `T2 = (π/2) i^{-c} e^{icu} f(e^{iu}/√4N)`.
fn cusp_terms(form: &HalfIntegralForm, u: f64) -> Result<(Complex64, Complex64)> {
    let c = form.critical_re();
    let f1 = form.eval_normalized(Side::Base, -Complex64::from_polar(1.0, -u), 1e-15)?.value;
    let f2 = form.eval_normalized(Side::Base, Complex64::from_polar(1.0, u), 1e-15)?.value;
    let t1 = Complex64::from_polar(PI / 2.0, c * (PI / 2.0 - u)) * f1;
    let t2 = Complex64::from_polar(PI / 2.0, -c * (PI / 2.0 - u)) * f2;
    Ok((t1, t2))
}

fn check_u(u: f64) -> Result<()> {
    if !(u > 0.0 && u < PI / 2.0) {
        return Err(Error::InvalidInput(format!("u must lie in (0, π/2), got {u}")));
    }
    Ok(())
}

/// `∫_0^∞ R_f(t) cosh((π/2-u)t) dt` and `∫_0^∞ I_f(t) sinh((π/2-u)t) dt`.
pub fn cosh_sinh_integrals(form: &HalfIntegralForm, u: f64) -> Result<(f64, f64)> {
    check_u(u)?;
    let rate = PI / 2.0 - u;
    let env = |t: f64| lambda_envelope(form, t, 0.0) * (rate * t).cosh();
    let t_end = cutoff(env);
    let peak = env(0.0).max(env(1.0 / u.max(0.1)));
    let (cosh, _) = real_integral(|t| Ok(r_f(form, t)?.value * (rate * t).cosh()), t_end, peak, 1)?;
    let (sinh, _) = real_integral(|t| Ok(signature_value(form, t, Signature::Minus)?.value * (rate * t).sinh()), t_end, peak, 1)?;
    Ok((cosh, sinh))
}

/// Integral representations of `R_f` against cosh and `I_f` against sinh.
///
/// The residual of the cosh identity is relative to its right side. The
/// sinh right side `T1 - T2` vanishes identically for Fricke eigenforms, so
/// that residual is taken relative to `|T1| + |T2|`.
pub fn check_cosh_sinh_identities(form: &HalfIntegralForm, u_grid: &[f64]) -> Result<CheckResult> {
    let rows: Vec<Result<[Sample; 2]>> = u_grid
        .par_iter()
        .map(|&u| {
            let (cosh, sinh) = cosh_sinh_integrals(form, u)?;
            let (t1, t2) = cusp_terms(form, u)?;
            let rhs_c = t1 + t2;
            let rhs_s = t1 - t2;
            let res_c = rel_gap(Complex64::new(cosh, 0.0), rhs_c, rhs_c.norm());
            let res_s = rel_gap(Complex64::new(0.0, sinh), rhs_s, t1.norm() + t2.norm());
            Ok([
                Sample::new(format!("cosh u={u}"), cosh, rhs_c.re, res_c),
                Sample::new(format!("sinh u={u}"), sinh, rhs_s.im, res_s),
            ])
        })
        .collect();
    let mut detail = Vec::new();
    for r in rows {
        detail.extend(r?);
    }
    let worst = detail.iter().map(|s| s.residual).fold(0.0, f64::max);
    Ok(CheckResult::new("cosh_sinh_identities", worst, 1e-6, detail))
}

/// `∫ R_f(t) (-iz)^{-it} dt` against `π i^{-c} z^c {f(z/√4N) + (f|W)(z/√4N)}`.
pub fn check_fourier_representation(form: &HalfIntegralForm, z_grid: &[Complex64]) -> Result<CheckResult> {
    let c = form.critical_re();
    let rows: Vec<Result<Sample>> = z_grid
        .par_iter()
        .map(|&z| {
            if !(z.im > 0.0) {
                return Err(Error::NonPositiveImaginaryPart(z.im));
            }
            let log_w = (-Complex64::i() * z).ln();
            // |(-iz)^{-it}| = e^{t arg(-iz)}
            let arg = log_w.im;
            let up = cutoff(|t| lambda_envelope(form, t, 0.0) * (arg * t).exp());
            let down = cutoff(|t| lambda_envelope(form, t, 0.0) * (-arg * t).exp());
            let peak = lambda_envelope(form, 0.0, 0.0);
            let pieces = (up + down).ceil() as usize;
            let opts = QuadOptions::new(1e-14 * peak, 1e-10).pieces(pieces).max_intervals(200_000);
            let lhs = integrate(|t| Ok((-Complex64::i() * t * log_w).exp() * r_f(form, t)?.value), -down, up, opts)?.value;
            let fz = form.eval_normalized(Side::Base, z, 1e-15)?.value + form.eval_normalized(Side::Partner, z, 1e-15)?.value;
            let rhs = Complex64::from_polar(PI, -c * PI / 2.0) * z.powf(c) * fz;
            Ok(Sample::new(format!("z={}{:+}i", z.re, z.im), lhs.norm(), rhs.norm(), rel_gap(lhs, rhs, rhs.norm())))
        })
        .collect();
    let detail: Vec<Sample> = rows.into_iter().collect::<Result<_>>()?;
    let worst = detail.iter().map(|s| s.residual).fold(0.0, f64::max);
    Ok(CheckResult::new("fourier_representation", worst, 1e-6, detail))
}

/// Decay constant `A` of the cusp bound, either supplied or fitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayConstant {
    Candidate(f64),
    /// Least-squares fit of `log(|f| u^{k+1/2}) = log C - A/u` over the small-`u` samples.
    Fit,
}

/// `A = 2c e^{-π²/96} / (9 r √N)` from the expansion data `(c, r)` of the slashed form.
pub fn decay_constant_from_slash(c: u32, r: u32, level_n: u32) -> f64 {
    2.0 * c as f64 * (-PI * PI / 96.0).exp() / (9.0 * r as f64 * (level_n as f64).sqrt())
}

/// Largest `u` used by the fit in [`DecayConstant::Fit`].
const FIT_U_MAX: f64 = 0.35;

fn cusp_profile(form: &HalfIntegralForm, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let w = form.weight();
    let vals: Vec<Result<Option<(f64, f64)>>> = grid
        .par_iter()
        .map(|&u| {
            check_u(u)?;
            let v = form.eval_normalized(Side::Base, -Complex64::from_polar(1.0, -u), 1e-15)?;
            // samples drowned in rounding carry no information about the decay
            if v.value.norm() <= 100.0 * v.abs_err {
                return Ok(None);
            }
            Ok(Some((u, v.value.norm() * u.powf(w))))
        })
        .collect();
    Ok(vals.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

fn fit_decay(profile: &[(f64, f64)]) -> Result<f64> {
    let small: Vec<&(f64, f64)> = profile.iter().filter(|p| p.0 <= FIT_U_MAX).collect();
    let pts: Vec<&(f64, f64)> = if small.len() >= 3 { small } else { profile.iter().collect() };
    if pts.len() < 2 {
        return Err(Error::InvalidInput("too few resolved samples to fit the decay constant".into()));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| 1.0 / p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

/// `sup_u |f(-e^{-iu}/√4N)| u^{k+1/2} e^{A/u}` on the grid and on the grid with
/// midpoints inserted. Passes when the sup is finite and moves by less than 5%.
pub fn check_derivative_bound_p0(form: &HalfIntegralForm, u_grid: &[f64], decay: DecayConstant) -> Result<CheckResult> {
    let mut coarse: Vec<f64> = u_grid.to_vec();
    coarse.sort_by(f64::total_cmp);
    let mut fine = coarse.clone();
    fine.extend(coarse.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    fine.sort_by(f64::total_cmp);
    let prof_c = cusp_profile(form, &coarse)?;
    let prof_f = cusp_profile(form, &fine)?;
    let a = match decay {
        DecayConstant::Candidate(a) => a,
        DecayConstant::Fit => fit_decay(&prof_c)?,
    };
    let sup = |p: &[(f64, f64)]| p.iter().map(|&(u, v)| v * (a / u).exp()).fold(0.0, f64::max);
    let (sc, sf) = (sup(&prof_c), sup(&prof_f));
    let mut detail = vec![Sample::new("A", a, a, 0.0), Sample::new("sup coarse vs fine", sc, sf, (sf - sc).abs() / sc)];
    detail.extend(prof_f.iter().map(|&(u, v)| Sample::new(format!("u={u:.4}"), v * (a / u).exp(), sf, 0.0)));
    let change = (sf - sc).abs() / sc;
    Ok(CheckResult::new("derivative_bound_p0", change, 0.05, detail).with_extra_condition(sf.is_finite()))
}

/// The two evaluations of `b_{2j}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinhSinCoeff {
    pub closed_form: f64,
    pub nested_sum: f64,
}

/// `b_{2j} = 2^{2j+1} π^{4j} / (4j+2)!` against `Σ_{1<=r_1<...<r_j<=R} Π r_i^{-4}`.
pub fn sinh_sin_coeff(j: usize, rank: usize) -> Result<SinhSinCoeff> {
    if rank < j {
        return Err(Error::InvalidInput(format!("truncation rank {rank} is below j = {j}")));
    }
    let p4 = PI.powi(4);
    let mut closed = 1.0;
    for i in 1..=j {
        let m = 4.0 * i as f64;
        closed *= 4.0 * p4 / ((m - 1.0) * m * (m + 1.0) * (m + 2.0));
    }
    // elementary symmetric polynomials of r^{-4}, r = 1..R
    let mut e = vec![0.0; j + 1];
    e[0] = 1.0;
    for r in 1..=rank {
        let x = (r as f64).powi(-4);
        for m in (1..=j.min(r)).rev() {
            e[m] += e[m - 1] * x;
        }
    }
    Ok(SinhSinCoeff { closed_form: closed, nested_sum: e[j] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `X = R_f`
    CoshR,
    /// `X = t·I_f`
    TSinhI,
}

fn partial_product(t: f64, zeros: &[f64]) -> f64 {
    zeros.iter().map(|tau| 1.0 - (t / tau).powi(2)).product()
}

fn partial_product_with(form: &HalfIntegralForm, u: f64, zeros: &[f64], kernel: Kernel, pieces_per_unit: usize) -> Result<f64> {
    check_u(u)?;
    if zeros.iter().any(|z| !(z.abs() > 0.0)) {
        return Err(Error::InvalidInput("ordinates must be non-zero".into()));
    }
    let rate = PI / 2.0 - u;
    let degree = 2.0 * zeros.len() as f64 + if kernel == Kernel::TSinhI { 1.0 } else { 0.0 };
    let env = |t: f64| lambda_envelope(form, t, degree) * (rate * t).cosh() * zeros.iter().map(|z| z.powi(-2)).product::<f64>().max(1.0);
    let t_end = cutoff(env);
    let peak = (0..=t_end as usize).map(|t| env(t as f64)).fold(0.0, f64::max);
    let integrand = |t: f64| -> Result<f64> {
        let x = match kernel {
            Kernel::CoshR => r_f(form, t)?.value,
            Kernel::TSinhI => t * signature_value(form, t, Signature::Minus)?.value,
        };
        Ok(x * partial_product(t, zeros) * (rate * t).cosh())
    };
    Ok(real_integral(integrand, t_end, peak, pieces_per_unit)?.0)
}

/// `∫_0^∞ X(t) φ_J(t) cosh((π/2-u)t) dt` with `φ_J(t) = Π_{j<=J} (1 - t²/τ_j²)`.
pub fn partial_product_functional(form: &HalfIntegralForm, u: f64, zeros: &[f64], kernel: Kernel) -> Result<f64> {
    partial_product_with(form, u, zeros, kernel, 1)
}

/// Same integral with the initial quadrature partition refined `pieces_per_unit` times.
pub fn partial_product_functional_refined(form: &HalfIntegralForm, u: f64, zeros: &[f64], kernel: Kernel, pieces_per_unit: usize) -> Result<f64> {
    partial_product_with(form, u, zeros, kernel, pieces_per_unit.max(1))
}

/// `e^{-π²/192}/(6π) · √(2c/(r√N))`, the explicit lower constant for `N₀⁺(T)/√T`.
pub fn dlvp_constant(c: u32, r: u32, level_n: u32) -> f64 {
    (-PI * PI / 192.0).exp() / (6.0 * PI) * (2.0 * c as f64 / (r as f64 * (level_n as f64).sqrt())).sqrt()
}

/// `L(s,f₁)`: ray integral against summation where enough coefficients are
/// stored, and two quadrature refinements of the ray integral everywhere.
pub fn check_l_f1_integral(form: &HalfIntegralForm, s_grid: &[Complex64]) -> Result<CheckResult> {
    let rows: Vec<Result<Vec<Sample>>> = s_grid
        .par_iter()
        .map(|&s| {
            let fine = l_f1_ray(form, s, RayTail::Quadrature, 1e-12)?;
            let coarse = l_f1_ray(form, s, RayTail::Quadrature, 1e-8)?;
            let scale = fine.value.norm().max(f64::MIN_POSITIVE);
            let label = format!("s={}{:+}i", s.re, s.im);
            let mut out = vec![Sample::new(format!("{label} refinement"), coarse.value.norm(), fine.value.norm(), rel_gap(coarse.value, fine.value, scale))];
            match l_f1_direct(form, s) {
                Ok(direct) => out.push(Sample::new(format!("{label} direct"), fine.value.norm(), direct.value.norm(), rel_gap(fine.value, direct.value, scale))),
                Err(Error::InsufficientCoefficients { .. }) => {}
                Err(e) => return Err(e),
            }
            Ok(out)
        })
        .collect();
    let mut detail = Vec::new();
    for r in rows {
        detail.extend(r?);
    }
    let worst = detail.iter().map(|s| s.residual).fold(0.0, f64::max);
    Ok(CheckResult::new("l_f1_integral", worst, 1e-6, detail))
}

/// Nodes per unit panel for tabulated t-integrals.
const PANEL_NODES: usize = 20;

/// `F(x) = ∫_{lo}^{x} h`, from `h` tabulated at Gauss–Legendre nodes on equal panels.
struct Antiderivative {
    lo: f64,
    width: f64,
    values: Vec<Vec<f64>>,
    cum: Vec<f64>,
    rule: Vec<(f64, f64)>,
    panel: LegendrePanel,
}

impl Antiderivative {
    fn tabulate<H>(h: H, lo: f64, hi: f64) -> Result<Self>
    where
        H: Fn(f64) -> Result<f64> + Sync,
    {
        let count = ((hi - lo).ceil() as usize).max(1);
        let width = (hi - lo) / count as f64;
        let rule = gauss_legendre(PANEL_NODES);
        let points: Vec<f64> = (0..count)
            .flat_map(|p| {
                let a = lo + p as f64 * width;
                rule.iter().map(move |&(x, _)| a + 0.5 * width * (x + 1.0))
            })
            .collect();
        let flat: Vec<f64> = points.par_iter().map(|&t| h(t)).collect::<Result<_>>()?;
        let values: Vec<Vec<f64>> = flat.chunks(PANEL_NODES).map(|c| c.to_vec()).collect();
        let mut cum = vec![0.0; count + 1];
        for p in 0..count {
            let s: f64 = values[p].iter().zip(&rule).map(|(v, &(_, w))| v * w).sum();
            cum[p + 1] = cum[p] + 0.5 * width * s;
        }
        let panel = LegendrePanel::new(&rule);
        Ok(Self { lo, width, values, cum, rule, panel })
    }

    fn at(&self, x: f64) -> f64 {
        let count = self.values.len();
        let p = (((x - self.lo) / self.width).floor().max(0.0) as usize).min(count - 1);
        let a = self.lo + p as f64 * self.width;
        let d = (x - a).clamp(0.0, self.width);
        if d == 0.0 {
            return self.cum[p];
        }
        // ∫_a^{a+d} of the panel interpolant, exactly, with the same rule on [a, a+d]
        let part: f64 = self
            .rule
            .iter()
            .map(|&(y, w)| {
                let local = 2.0 * (0.5 * d * (y + 1.0)) / self.width - 1.0;
                w * self.panel.interpolate(&self.values[p], local)
            })
            .sum();
        self.cum[p] + 0.5 * d * part
    }
}

/// Both sides of the Parseval identity for `I(t) = ∫_t^{t+H} R_f(u) e^{(π/2-ε)u} du`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParsevalSides {
    pub lhs: f64,
    pub rhs: f64,
    pub t_support: f64,
}

/// Integral of `|I(t)|²` over `[-T, T]`; `T` is chosen from the decay envelope when `None`.
pub fn parseval_sides(form: &HalfIntegralForm, h: f64, eps: f64, t_support: Option<f64>) -> Result<ParsevalSides> {
    if !(h >= 0.0) || !(eps > 0.0 && eps < PI / 2.0) {
        return Err(Error::InvalidInput(format!("need H >= 0 and ε in (0, π/2), got H = {h}, ε = {eps}")));
    }
    if h == 0.0 {
        return Ok(ParsevalSides { lhs: 0.0, rhs: 0.0, t_support: t_support.unwrap_or(0.0) });
    }
    let rate = PI / 2.0 - eps;
    // |I|² below 1e-14 of its peak: envelope of the integrand below 1e-7
    let cut = |sign: f64| envelope_cutoff(|t| lambda_envelope(form, t, 0.0) * (sign * rate * t).exp(), 0.0, 1.0, 1e-7, 4000.0);
    let t_pos = t_support.unwrap_or_else(|| cut(1.0));
    let t_neg = t_support.unwrap_or_else(|| cut(-1.0) + h);
    let anti = Antiderivative::tabulate(|t| Ok(r_f(form, t)?.value * (rate * t).exp()), -t_neg, t_pos + h)?;
    let outer = gauss_legendre(PANEL_NODES);
    let count = (t_pos + t_neg).ceil() as usize;
    let width = (t_pos + t_neg) / count as f64;
    let mut lhs = 0.0;
    for p in 0..count {
        let a = -t_neg + p as f64 * width;
        for &(x, w) in &outer {
            let t = a + 0.5 * width * (x + 1.0);
            let i_t = anti.at(t + h) - anti.at(t);
            lhs += 0.5 * width * w * i_t * i_t;
        }
    }
    let rhs = parseval_rhs(form, h, eps)?;
    Ok(ParsevalSides { lhs, rhs, t_support: t_pos })
}

/// `2π ∫ sin²(ξH/2)/ξ² e^{(k+1/2)ξ} |f(z) + (f|W)(z)|² dξ`, `z = -e^{ξ-iε}/√4N`.
fn parseval_rhs(form: &HalfIntegralForm, h: f64, eps: f64) -> Result<f64> {
    let w = form.weight();
    let integrand = |xi: f64| -> Result<f64> {
        let z = -Complex64::from_polar(xi.exp(), -eps);
        let v = form.eval_normalized(Side::Base, z, 1e-15)?.value + form.eval_normalized(Side::Partner, z, 1e-15)?.value;
        let sinc = if xi.abs() < 1e-8 { 0.5 * h } else { (0.5 * xi * h).sin() / xi };
        Ok(sinc * sinc * (w * xi).exp() * v.norm_sqr())
    };
    // cusp decay is doubly exponential in |ξ|; walk out until negligible
    let peak = integrand(0.0)?.max(f64::MIN_POSITIVE);
    let mut ends = [0.0f64; 2];
    for (k, dir) in [1.0f64, -1.0].iter().enumerate() {
        let mut xi = 0.0;
        let mut best = peak;
        loop {
            xi += 0.25 * dir;
            let v = integrand(xi)?;
            best = best.max(v);
            if v < 1e-18 * best || xi.abs() > 40.0 {
                break;
            }
        }
        ends[k] = xi;
    }
    let pieces = ((ends[0] - ends[1]) * 2.0).ceil() as usize;
    let opts = QuadOptions::new(1e-16 * peak, 1e-12).pieces(pieces).max_intervals(50_000);
    let q = integrate(|x| integrand(x).map(|v| Complex64::new(v, 0.0)), ends[1], ends[0], opts)?;
    Ok(2.0 * PI * q.value.re)
}

/// `K₁ = ε^{k+1/2} ∫|I|² / H`, the constant of the mean inequality for `I(t)`.
pub fn fitted_k1(form: &HalfIntegralForm, sides: &ParsevalSides, h: f64, eps: f64) -> f64 {
    sides.lhs * eps.powf(form.weight()) / h
}

/// Parseval identity for `I(t)`; the fitted `K₁` is reported as a sample.
pub fn check_parseval_i(form: &HalfIntegralForm, h: f64, eps: f64, t_support: Option<f64>) -> Result<CheckResult> {
    let sides = parseval_sides(form, h, eps, t_support)?;
    let gap = if sides.lhs == sides.rhs { 0.0 } else { (sides.lhs - sides.rhs).abs() / sides.rhs.abs() };
    let mut detail = vec![Sample::new(format!("H={h} eps={eps}"), sides.lhs, sides.rhs, gap)];
    if h > 0.0 {
        let k1 = fitted_k1(form, &sides, h, eps);
        detail.push(Sample::new("K1", k1, k1, 0.0));
    }
    Ok(CheckResult::new("parseval_I", gap, 1e-4, detail))
}

/// Mean squares `∫_T^{2T} |Ψ(t)|² dt / T` for one quadrature order.
///
/// `ψ_f` is evaluated once per distinct point; with integer `H` the shifted
/// nodes `t + H` coincide with nodes of later panels.
fn psi_mean_squares(avg: &HalfIntegralForm, t_grid: &[f64], h: f64, nodes: usize) -> Result<Vec<f64>> {
    if h == 0.0 {
        return Ok(vec![0.0; t_grid.len()]);
    }
    let rule = gauss_legendre(nodes);
    let key = |t: f64| (t * 1e9).round() as i64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for &t in t_grid {
        let count = t.ceil() as usize;
        let width = t / count as f64;
        for p in 0..count {
            let a = t + p as f64 * width;
            for &(x, w) in &rule {
                points.push((a + 0.5 * width * (x + 1.0), 0.5 * width * w));
            }
        }
    }
    let mut needed: Vec<f64> = points.iter().flat_map(|&(t, _)| [t, t + h]).collect();
    needed.sort_by(f64::total_cmp);
    needed.dedup_by_key(|t| key(*t));
    let crit = avg.critical_re();
    let psi: Vec<Complex64> = needed
        .par_iter()
        .map(|&t| Ok(psi_f_averaged(avg, Complex64::new(crit, t))?.value))
        .collect::<Result<_>>()?;
    let table: HashMap<i64, Complex64> = needed.iter().map(|&t| key(t)).zip(psi).collect();
    let r = (1..=avg.len()).find(|&n| avg.coeff(n).norm() != 0.0).ok_or(Error::DegenerateAveragedForm(avg.len()))?;
    let rf = r as f64;
    let lead = -Complex64::i() * rf.powf(crit) / avg.coeff(r);
    let big_psi = |t: f64| {
        let a = table[&key(t)] * Complex64::from_polar(1.0, t * rf.ln());
        let b = table[&key(t + h)] * Complex64::from_polar(1.0, (t + h) * rf.ln());
        lead * (a - b)
    };
    let mut out = Vec::new();
    let mut k = 0;
    for &t in t_grid {
        let count = t.ceil() as usize * nodes;
        let s: f64 = points[k..k + count].iter().map(|&(x, w)| w * big_psi(x).norm_sqr()).sum();
        k += count;
        out.push(s / t);
    }
    Ok(out)
}

/// `∫_T^{2T} |Ψ|²/T` bounded across `T`: max/min within a decade, and two
/// quadrature orders agreeing to 1%.
pub fn check_mean_square_psi(form: &HalfIntegralForm, t_grid: &[f64], h: f64) -> Result<CheckResult> {
    if t_grid.iter().any(|&t| !(t > 0.0)) || !(h >= 0.0) {
        return Err(Error::InvalidInput("T values and H must be positive".into()));
    }
    let avg = averaged_form(form)?;
    let fine = psi_mean_squares(&avg, t_grid, h, 8)?;
    let coarse = psi_mean_squares(&avg, t_grid, h, 5)?;
    let mut detail = Vec::new();
    let mut quad_gap: f64 = 0.0;
    for ((&t, &f), &c) in t_grid.iter().zip(&fine).zip(&coarse) {
        let gap = if f == c { 0.0 } else { (f - c).abs() / f };
        quad_gap = quad_gap.max(gap);
        detail.push(Sample::new(format!("T={t}"), f, c, gap));
    }
    let hi = fine.iter().cloned().fold(0.0, f64::max);
    let lo = fine.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if hi == 0.0 { 1.0 } else { hi / lo };
    Ok(CheckResult::new("mean_square_psi", spread, 10.0, detail).with_extra_condition(quad_gap < 0.01))
}

/// Sup of the Wilton bound ratio over `Re z` samples, a log-spaced `Im z` grid and the given `M`.
fn wilton_sup(form: &HalfIntegralForm, im_lo: f64, im_hi: f64, im_points: usize, re_points: usize, ms: &[usize]) -> Result<f64> {
    // the expansion in z/√4N has period √4N in Re z
    let width = form.sqrt_level();
    let mut grid = Vec::new();
    for i in 0..im_points {
        let y = im_lo * (im_hi / im_lo).powf(i as f64 / (im_points - 1) as f64);
        for j in 0..re_points {
            let x = width * j as f64 / re_points as f64;
            for &m in ms {
                grid.push((Complex64::new(x, y), m));
            }
        }
    }
    let ratios: Vec<f64> = grid.par_iter().map(|&(z, m)| Ok(wilton_defect(form, z, m)?.bound_ratio)).collect::<Result<_>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// Truncation bound of the q-series: the constant fitted on a grid must hold
/// (×1.5) on the refined grid and move by at most 25%.
pub fn check_wilton_bound(form: &HalfIntegralForm, im_lo: f64, im_hi: f64, ms: &[usize]) -> Result<CheckResult> {
    let coarse = wilton_sup(form, im_lo, im_hi, 12, 4, ms)?;
    let fine = wilton_sup(form, im_lo, im_hi, 23, 8, ms)?;
    let change = (fine - coarse).abs() / coarse;
    let detail = vec![Sample::new("fitted constant (coarse vs refined)", coarse, fine, change)];
    Ok(CheckResult::new("wilton_bound", change, 0.25, detail).with_extra_condition(fine <= 1.5 * coarse))
}

/// Exponent of the convexity bound `L(σ+it) ≪ |t|^μ(σ)`: zero right of the
/// absolute-convergence line, `k+1/2-2σ` left of its reflection, linear between.
pub fn convexity_exponent(form: &HalfIntegralForm, sigma: f64) -> f64 {
    let right = form.critical_re() + 1.0;
    let left = form.critical_re() - 1.0;
    if sigma >= right {
        0.0
    } else if sigma <= left {
        form.weight() - 2.0 * sigma
    } else {
        right - sigma
    }
}

/// `sup |L(σ+it)| t^{-μ(σ)}` on the two halves of `[t_lo, t_hi]`; passes when
/// the upper half does not exceed twice the lower half for any `σ`.
pub fn check_convexity(form: &HalfIntegralForm, sigmas: &[f64], t_lo: f64, t_hi: f64, step: f64) -> Result<CheckResult> {
    let n = ((t_hi - t_lo) / step).round() as usize;
    let mid = 0.5 * (t_lo + t_hi);
    let jobs: Vec<(f64, f64)> = sigmas.iter().flat_map(|&s| (0..=n).map(move |i| (s, t_lo + step * i as f64))).collect();
    let vals: Vec<f64> = jobs
        .par_iter()
        .map(|&(s, t)| Ok(l_value(form, Complex64::new(s, t))?.value.norm() * t.powf(-convexity_exponent(form, s))))
        .collect::<Result<_>>()?;
    let mut detail = Vec::new();
    let mut worst: f64 = 0.0;
    for &s in sigmas {
        let (mut low, mut high) = (0.0f64, 0.0f64);
        for (&(js, t), &v) in jobs.iter().zip(&vals) {
            if js == s {
                if t < mid {
                    low = low.max(v);
                } else {
                    high = high.max(v);
                }
            }
        }
        let growth = high / low;
        worst = worst.max(growth);
        detail.push(Sample::new(format!("sigma={s}"), high, low, growth));
    }
    Ok(CheckResult::new("convexity", worst, 2.0, detail))
}

/// `|Λ(s,f) - Λ(k+1/2-s, f|W)|` against twice the reported error on a fixed grid.
pub fn check_functional_equation(form: &HalfIntegralForm, points: &[Complex64]) -> Result<CheckResult> {
    use crate::lfunc::lambda_completed;
    let partner = form.partner_form();
    let w = Complex64::new(form.weight(), 0.0);
    let rows: Vec<Sample> = points
        .par_iter()
        .map(|&s| {
            let a = lambda_completed(form, s)?;
            let b = lambda_completed(&partner, w - s)?;
            let err = a.abs_err + b.abs_err;
            let gap = (a.value - b.value).norm();
            Ok(Sample::new(format!("s={}{:+}i", s.re, s.im), gap, err, if gap == 0.0 { 0.0 } else { gap / err }))
        })
        .collect::<Result<_>>()?;
    let worst = rows.iter().map(|s| s.residual).fold(0.0, f64::max);
    Ok(CheckResult::new("functional_equation", worst, 2.0, rows))
}

/// Names accepted by [`run_check`], in report order.
pub const CHECK_NAMES: [&str; 10] = [
    "functional_equation",
    "cosh_sinh_identities",
    "fourier_representation",
    "derivative_bound_p0",
    "sinh_sin_coeff",
    "l_f1_integral",
    "parseval_I",
    "mean_square_psi",
    "wilton_bound",
    "convexity",
];

fn default_fe_points() -> Vec<Complex64> {
    (0..12).map(|i| Complex64::new(-1.0 + 0.55 * i as f64, -40.0 + 7.0 * i as f64)).collect()
}

fn sinh_sin_check() -> Result<CheckResult> {
    let mut detail = Vec::new();
    for j in 0..=3 {
        let b = sinh_sin_coeff(j, 500)?;
        detail.push(Sample::new(format!("j={j}"), b.nested_sum, b.closed_form, (b.nested_sum - b.closed_form).abs() / b.closed_form));
    }
    let worst = detail.iter().map(|s| s.residual).fold(0.0, f64::max);
    Ok(CheckResult::new("sinh_sin_coeff", worst, 1e-6, detail))
}

/// Runs one named check with its default parameters.
pub fn run_check(name: &str, form: &HalfIntegralForm) -> Result<CheckResult> {
    match name {
        "functional_equation" => check_functional_equation(form, &default_fe_points()),
        "cosh_sinh_identities" => check_cosh_sinh_identities(form, &[0.3, PI / 4.0, 1.0]),
        "fourier_representation" => check_fourier_representation(
            form,
            &[
                Complex64::new(0.0, 0.2f64.exp()),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.3, 1.1),
                Complex64::new(-0.4, 0.8),
                Complex64::new(0.2, 0.6),
            ],
        ),
        "derivative_bound_p0" => {
            let grid: Vec<f64> = (0..30).map(|i| 0.05 + 0.05 * i as f64).collect();
            check_derivative_bound_p0(form, &grid, DecayConstant::Fit)
        }
        "sinh_sin_coeff" => sinh_sin_check(),
        "l_f1_integral" => check_l_f1_integral(form, &[Complex64::new(3.0, 0.0), Complex64::new(form.critical_re(), 5.0)]),
        "parseval_I" => check_parseval_i(form, 1.0, 0.5, None),
        "mean_square_psi" => check_mean_square_psi(form, &[10.0, 20.0, 40.0], 5.0),
        "wilton_bound" => check_wilton_bound(form, 0.01, 5.0, &[10, 50, 200]),
        "convexity" => check_convexity(form, &[-0.5, 1.0, form.critical_re(), 3.5, 5.25], 5.0, 60.0, 0.5),
        other => Err(Error::InvalidInput(format!("unknown check {other:?}; expected one of {}", CHECK_NAMES.join(", ")))),
    }
}

/// Every check in [`CHECK_NAMES`]; failures to evaluate are reported as failed checks.
pub fn verify_all(form: &HalfIntegralForm) -> Vec<CheckResult> {
    CHECK_NAMES
        .par_iter()
        .map(|name| {
            run_check(name, form).unwrap_or_else(|e| CheckResult {
                name: name.to_string(),
                residual_or_sup: f64::NAN,
                tolerance: 0.0,
                passed: false,
                detail: vec![Sample::new(format!("error: {e}"), f64::NAN, f64::NAN, f64::NAN)],
            })
        })
        .collect()
}

/// Check-name keyed view of a report.
pub fn by_name(results: &[CheckResult]) -> HashMap<&str, &CheckResult> {
    results.iter().map(|r| (r.name.as_str(), r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::yoshida_g;

    #[test]
    fn sinh_sin_closed_forms() {
        let b0 = sinh_sin_coeff(0, 5).unwrap();
        assert_eq!(b0.closed_form, 1.0);
        assert_eq!(b0.nested_sum, 1.0);
        let b1 = sinh_sin_coeff(1, 500).unwrap();
        assert!((b1.closed_form - PI.powi(4) / 90.0).abs() <= f64::EPSILON * b1.closed_form);
        let b2 = sinh_sin_coeff(2, 200).unwrap();
        assert!((b2.closed_form - PI.powi(8) / 113_400.0).abs() < 1e-15 * b2.closed_form);
        assert!((b2.nested_sum - b2.closed_form).abs() < 1e-6 * b2.closed_form);
        assert!(sinh_sin_coeff(3, 2).is_err());
    }

    #[test]
    fn nested_sum_increases_with_rank() {
        let a = sinh_sin_coeff(2, 50).unwrap().nested_sum;
        let b = sinh_sin_coeff(2, 100).unwrap().nested_sum;
        let c = sinh_sin_coeff(2, 100).unwrap().closed_form;
        assert!(a < b && b < c);
    }

    #[test]
    fn dlvp_scalings() {
        let base = dlvp_constant(1, 1, 1);
        assert!((base - 0.0713).abs() < 1e-4, "{base}");
        assert!((dlvp_constant(4, 1, 1) / base - 2.0).abs() < 1e-14);
        assert!((dlvp_constant(1, 1, 16) / base - 0.5).abs() < 1e-14);
    }

    #[test]
    fn check_result_pass_flag() {
        assert!(CheckResult::new("x", 1.0, 1.0, vec![]).passed);
        assert!(!CheckResult::new("x", f64::NAN, 1.0, vec![]).passed);
    }

    #[test]
    fn cosh_identity_at_quarter_pi() {
        let g = yoshida_g(2000);
        let r = check_cosh_sinh_identities(&g, &[PI / 4.0]).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn cosh_identity_is_linear() {
        let g = yoshida_g(2000);
        let (c1, _) = cosh_sinh_integrals(&g, 1.0).unwrap();
        let (c2, _) = cosh_sinh_integrals(&g.scaled(2.0), 1.0).unwrap();
        let (t1, t2) = cusp_terms(&g, 1.0).unwrap();
        let (s1, s2) = cusp_terms(&g.scaled(2.0), 1.0).unwrap();
        let r1 = c1 - (t1 + t2).re;
        let r2 = c2 - (s1 + s2).re;
        assert!((c2 - 2.0 * c1).abs() < 1e-12 * c1.abs());
        assert!((r2 - 2.0 * r1).abs() <= 1e-9 * c1.abs());
    }

    #[test]
    fn fourier_symmetric_point() {
        let g = yoshida_g(2000);
        let r = check_fourier_representation(&g, &[Complex64::new(0.0, 1.0)]).unwrap();
        assert!(r.passed, "{r:?}");
        // eigenform collapse: f + f|W = 2f at the fixed point
        let c = g.critical_re();
        let f = g.eval_normalized(Side::Base, Complex64::i(), 1e-15).unwrap().value;
        let collapsed = Complex64::from_polar(2.0 * PI, -c * PI / 2.0) * Complex64::i().powf(c) * f;
        assert!((collapsed.norm() - r.detail[0].reference).abs() < 1e-12 * collapsed.norm());
    }

    #[test]
    fn partial_product_zero_degree_matches_lhs() {
        let g = yoshida_g(2000);
        let j0 = partial_product_functional(&g, 0.8, &[], Kernel::CoshR).unwrap();
        let (lhs, _) = cosh_sinh_integrals(&g, 0.8).unwrap();
        assert!((j0 - lhs).abs() < 1e-9 * lhs.abs());
        // I_g vanishes identically, so the TSinhI functional is zero
        assert_eq!(partial_product_functional(&g, 0.8, &[9.0], Kernel::TSinhI).unwrap(), 0.0);
    }

    #[test]
    fn parseval_zero_height() {
        let g = yoshida_g(500);
        let r = check_parseval_i(&g, 0.0, 0.5, None).unwrap();
        assert_eq!(r.detail[0].measured, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn mean_square_zero_height() {
        let g = yoshida_g(500);
        let avg = averaged_form(&g).unwrap();
        let v = psi_mean_squares(&avg, &[2.0], 0.0, 3).unwrap();
        assert_eq!(v, vec![0.0]);
    }

    #[test]
    fn shared_psi_table_matches_big_psi() {
        let g = yoshida_g(3000);
        let avg = averaged_form(&g).unwrap();
        let got = psi_mean_squares(&avg, &[2.0], 1.0, 3).unwrap()[0];
        let mut want = 0.0;
        for p in 0..2 {
            for &(x, w) in &gauss_legendre(3) {
                let t = 2.0 + p as f64 + 0.5 * (x + 1.0);
                want += 0.5 * w * crate::lfunc::big_psi_averaged(&avg, t, 1.0).unwrap().value.norm_sqr();
            }
        }
        want /= 2.0;
        assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
    }

    #[test]
    fn decay_constant_formula() {
        let a = decay_constant_from_slash(1, 1, 1);
        assert!((a - 2.0 * (-PI * PI / 96.0).exp() / 9.0).abs() < 1e-15);
    }

    #[test]
    fn fit_recovers_planted_decay() {
        let prof: Vec<(f64, f64)> = (1..10).map(|i| {
            let u = 0.03 * i as f64;
            (u, 0.7 * (-0.9 / u).exp())
        }).collect();
        assert!((fit_decay(&prof).unwrap() - 0.9).abs() < 1e-10);
    }

    #[test]
    fn convexity_exponent_is_continuous() {
        let g = yoshida_g(100);
        for s in [1.25, 3.25] {
            let a = convexity_exponent(&g, s - 1e-12);
            let b = convexity_exponent(&g, s + 1e-12);
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(convexity_exponent(&g, 2.25), 1.0);
    }

    #[test]
    fn unknown_check_is_usage_error() {
        let g = yoshida_g(100);
        assert!(matches!(run_check("nope", &g), Err(Error::InvalidInput(_))));
    }
}
