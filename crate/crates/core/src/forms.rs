//! Cusp forms of half-integral weight: coefficients, Fricke partner, growth
//! constants, direct evaluation with tail bounds, and the log-smoothed series.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::qseries;

/// Whether the stored numbers are the coefficients themselves or their
/// imaginary parts (`a(n) = i·b(n)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoeffClass {
    Real,
    PurelyImaginary,
}

#[derive(Debug, Clone)]
pub enum Fricke {
    /// `f|W_{4N} = ε f`.
    Eigenvalue(i8),
    /// Coefficients of `f|W_{4N}`; index `n` holds `a(n)`, index 0 is unused.
    Partner(Arc<Vec<Complex64>>),
}

/// A cusp form in `S_{k+1/2}(Γ₀(4N))` given by its coefficients.
#[derive(Debug, Clone)]
pub struct HalfIntegralForm {
    name: String,
    k: u32,
    level_n: u32,
    coeffs: Arc<Vec<Complex64>>,
    fricke: Fricke,
    growth_c: f64,
    growth_exp: f64,
    coeff_class: CoeffClass,
}

/// A value of a truncated series together with a bound on what was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: Complex64,
    pub abs_err: f64,
    pub terms: usize,
}

/// Which of the pair `(f, f|W)` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Base,
    Partner,
}

impl Side {
    pub fn flip(self) -> Self {
        match self {
            Side::Base => Side::Partner,
            Side::Partner => Side::Base,
        }
    }
}

/// Upper bound for `Σ_{n>m} c·n^a·x^n` with `0 < x < 1`.
///
/// This is the one place truncation bounds come from. Writing
/// `n = m+1+j` and using `n^a <= (m+1)^a e^{aj/(m+1)}` for `a >= 0` gives the
/// geometric majorant `c x^{m+1} (m+1)^a / (1 - x e^{a/(m+1)})`.
/// Returns infinity when that ratio is not below one.
pub fn geometric_tail_bound(c: f64, a: f64, x: f64, m: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let m1 = (m + 1) as f64;
    let ratio = if a > 0.0 { x * (a / m1).exp() } else { x };
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    let lead = c * ((m1 * x.ln()) + a * m1.ln()).exp();
    lead / (1.0 - ratio)
}

/// Smallest `m` (up to a doubling search) with `geometric_tail_bound < eps`.
pub fn truncation_for(c: f64, a: f64, x: f64, eps: f64) -> usize {
    if x <= 0.0 {
        return 1;
    }
    let mut hi = 1usize;
    while geometric_tail_bound(c, a, x, hi) >= eps {
        hi *= 2;
        if hi > 1 << 40 {
            return usize::MAX;
        }
    }
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if geometric_tail_bound(c, a, x, mid) < eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn fit_growth(exp: f64, seqs: &[&[Complex64]]) -> f64 {
    let mut best: f64 = 0.0;
    for s in seqs {
        for (n, a) in s.iter().enumerate().skip(1) {
            best = best.max(a.norm() / (n as f64).powf(exp));
        }
    }
    2.0 * best.max(f64::MIN_POSITIVE)
}

impl HalfIntegralForm {
    /// `coeffs[n]` is `a(n)` (index 0 ignored). The growth constants default
    /// to the Hecke exponent `k/2 + 1/4` and twice the largest observed ratio.
    pub fn new(
        name: impl Into<String>,
        k: u32,
        level_n: u32,
        mut coeffs: Vec<Complex64>,
        fricke: Fricke,
        coeff_class: CoeffClass,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("weight index k must be at least 1".into()));
        }
        if level_n == 0 {
            return Err(Error::InvalidInput("level N must be positive".into()));
        }
        if coeffs.len() < 2 {
            return Err(Error::InvalidInput("need at least a(1)".into()));
        }
        coeffs[0] = Complex64::new(0.0, 0.0);
        let fricke = match fricke {
            Fricke::Eigenvalue(e) if e == 1 || e == -1 => Fricke::Eigenvalue(e),
            Fricke::Eigenvalue(e) => {
                return Err(Error::InvalidInput(format!("Fricke eigenvalue must be ±1, got {e}")))
            }
            Fricke::Partner(p) => {
                if p.len() != coeffs.len() {
                    return Err(Error::InvalidInput(format!(
                        "partner has {} coefficients, form has {}",
                        p.len() - 1,
                        coeffs.len() - 1
                    )));
                }
                let mut p = (*p).clone();
                p[0] = Complex64::new(0.0, 0.0);
                Fricke::Partner(Arc::new(p))
            }
        };
        let growth_exp = k as f64 / 2.0 + 0.25;
        let growth_c = match &fricke {
            Fricke::Partner(p) => fit_growth(growth_exp, &[&coeffs, p]),
            Fricke::Eigenvalue(_) => fit_growth(growth_exp, &[&coeffs]),
        };
        Ok(Self {
            name: name.into(),
            k,
            level_n,
            coeffs: Arc::new(coeffs),
            fricke,
            growth_c,
            growth_exp,
            coeff_class,
        })
    }

    /// Replaces the growth constants after checking them on every stored coefficient.
    pub fn with_growth(mut self, c: f64, exp: f64) -> Result<Self> {
        let check = |s: &[Complex64]| -> Option<(usize, Complex64)> {
            s.iter().enumerate().skip(1).map(|(n, a)| (n, *a)).find(|(n, a)| a.norm() > c * (*n as f64).powf(exp) * (1.0 + 1e-12))
        };
        if let Some((n, a)) = check(&self.coeffs) {
            return Err(Error::InvalidInput(format!("|a({n})| = {} exceeds {c}·{n}^{exp}", a.norm())));
        }
        if let Fricke::Partner(p) = &self.fricke {
            if let Some((n, a)) = check(p) {
                return Err(Error::InvalidInput(format!("|a_W({n})| = {} exceeds {c}·{n}^{exp}", a.norm())));
            }
        }
        self.growth_c = c;
        self.growth_exp = exp;
        Ok(self)
    }

    /// `factor · f` with the same Fricke data (a partner is scaled too).
    pub fn scaled(&self, factor: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|a| a * factor).collect();
        let fricke = match &self.fricke {
            Fricke::Eigenvalue(e) => Fricke::Eigenvalue(*e),
            Fricke::Partner(p) => Fricke::Partner(Arc::new(p.iter().map(|a| a * factor).collect())),
        };
        Self {
            name: format!("{}*{factor}", self.name),
            coeffs: Arc::new(coeffs),
            fricke,
            growth_c: self.growth_c * factor.abs().max(f64::MIN_POSITIVE),
            ..self.clone()
        }
    }

    /// Keeps only `a(1..=m)`.
    pub fn truncated(&self, m: usize) -> Self {
        let m = m.min(self.len());
        let coeffs = self.coeffs[..=m].to_vec();
        let fricke = match &self.fricke {
            Fricke::Eigenvalue(e) => Fricke::Eigenvalue(*e),
            Fricke::Partner(p) => Fricke::Partner(Arc::new(p[..=m].to_vec())),
        };
        Self { coeffs: Arc::new(coeffs), fricke, ..self.clone() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn level_n(&self) -> u32 {
        self.level_n
    }
    pub fn n_is_square(&self) -> bool {
        let r = (self.level_n as f64).sqrt().round() as u32;
        r * r == self.level_n
    }
    /// Weight `k + 1/2`.
    pub fn weight(&self) -> f64 {
        self.k as f64 + 0.5
    }
    /// Critical abscissa `k/2 + 1/4`.
    pub fn critical_re(&self) -> f64 {
        self.k as f64 / 2.0 + 0.25
    }
    /// `√(4N)`.
    pub fn sqrt_level(&self) -> f64 {
        (4.0 * self.level_n as f64).sqrt()
    }
    pub fn growth_c(&self) -> f64 {
        self.growth_c
    }
    pub fn growth_exp(&self) -> f64 {
        self.growth_exp
    }
    pub fn coeff_class(&self) -> CoeffClass {
        self.coeff_class
    }
    pub fn fricke(&self) -> &Fricke {
        &self.fricke
    }
    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len() - 1
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    pub fn partner_coeff(&self, n: usize) -> Complex64 {
        match &self.fricke {
            Fricke::Eigenvalue(e) => self.coeff(n) * (*e as f64),
            Fricke::Partner(p) => p.get(n).copied().unwrap_or_default(),
        }
    }

    pub fn side_coeff(&self, side: Side, n: usize) -> Complex64 {
        match side {
            Side::Base => self.coeff(n),
            Side::Partner => self.partner_coeff(n),
        }
    }

    /// `(a(n) + a_{f|W}(n)) / 2`.
    pub fn averaged_coeff(&self, n: usize) -> Complex64 {
        (self.coeff(n) + self.partner_coeff(n)) * 0.5
    }

    pub fn is_self_dual(&self) -> bool {
        matches!(self.fricke, Fricke::Eigenvalue(1))
    }

    /// Truncation index for a tail of `Σ C n^a x^n` below `eps`, checked
    /// against the stored length.
    pub fn terms_needed(&self, x: f64, eps: f64) -> Result<usize> {
        let m = truncation_for(self.growth_c, self.growth_exp, x, eps);
        if m > self.len() {
            return Err(Error::InsufficientCoefficients { needed: m, available: self.len() });
        }
        Ok(m)
    }

    /// The partner `f|W` as a form in its own right.
    pub fn partner_form(&self) -> Self {
        let partner: Vec<Complex64> = (0..=self.len()).map(|n| self.partner_coeff(n)).collect();
        let fricke = match &self.fricke {
            Fricke::Eigenvalue(e) => Fricke::Eigenvalue(*e),
            Fricke::Partner(_) => Fricke::Partner(self.coeffs.clone()),
        };
        Self { name: format!("{}|W", self.name), coeffs: Arc::new(partner), fricke, ..self.clone() }
    }
}

/// The built-in form `g = θ^{-3} η(2z)^{12} ∈ S_{9/2}(Γ₀(4))` with `m` coefficients.
pub fn yoshida_g(m: usize) -> HalfIntegralForm {
    let c: Vec<Complex64> = qseries::g_form_coeffs_fast(m).into_iter().map(|a| Complex64::new(a as f64, 0.0)).collect();
    HalfIntegralForm::new("yoshida_g", 4, 1, c, Fricke::Eigenvalue(1), CoeffClass::Real)
        .expect("built-in coefficients are valid")
}

/// Default coefficient count for the built-in form.
pub const YOSHIDA_DEFAULT_TERMS: usize = 30_000;

/// Sums `Σ_{n=start}^{m} coef(n) q^{n-start}` with `q = e^{2πiz}`.
fn sum_series<F: Fn(usize) -> Complex64>(coef: F, z: Complex64, start: usize, m: usize) -> (Complex64, f64) {
    let q = (Complex64::i() * 2.0 * PI * z).exp();
    let mut qn = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    for (j, n) in (start..=m).enumerate() {
        if j > 0 {
            if j % 32 == 0 {
                qn = (Complex64::i() * 2.0 * PI * z * j as f64).exp();
            } else {
                qn *= q;
            }
        }
        let t = coef(n) * qn;
        acc += t;
        mag += t.norm();
    }
    (acc, mag)
}

impl HalfIntegralForm {
    fn eval_side(&self, side: Side, z: Complex64, eps: f64) -> Result<SeriesValue> {
        if !(z.im > 0.0) {
            return Err(Error::NonPositiveImaginaryPart(z.im));
        }
        let x = (-2.0 * PI * z.im).exp();
        let m = self.terms_needed(x, eps)?;
        let (sum, mag) = sum_series(|n| self.side_coeff(side, n), z, 1, m);
        // each q^n carries at most ~32 products of rounding plus |z| n scaled phase error
        let round = mag * f64::EPSILON * (8.0 + 2.0 * PI * z.norm() * 32.0);
        let tail = geometric_tail_bound(self.growth_c, self.growth_exp, x, m);
        Ok(SeriesValue { value: sum * q_power(z, 1), abs_err: tail + round, terms: m })
    }

    /// `f(z/√4N)` or `(f|W)(z/√4N)`, using the Fricke involution when `|z| < 1`
    /// so that the series is always summed at the larger imaginary part.
    /// `rel` is an error target relative to the size of the terms.
    pub fn eval_normalized(&self, side: Side, z: Complex64, rel: f64) -> Result<SeriesValue> {
        if !(z.im > 0.0) {
            return Err(Error::NonPositiveImaginaryPart(z.im));
        }
        let s = self.sqrt_level();
        if z.norm() >= 1.0 {
            let scale = self.growth_c * (z.im / s).powf(-self.growth_exp).max(1.0);
            self.eval_side(side, z / s, rel * scale)
        } else {
            // f(z/√4N) = (-iz)^{-(k+1/2)} (f|W)(-1/(z√4N))
            let w = -z.inv();
            let factor = (-Complex64::i() * z).powf(-self.weight());
            let scale = self.growth_c * (w.im / s).powf(-self.growth_exp).max(1.0);
            let inner = self.eval_side(side.flip(), w / s, rel * scale)?;
            Ok(SeriesValue {
                value: inner.value * factor,
                abs_err: inner.abs_err * factor.norm() + inner.value.norm() * factor.norm() * 8.0 * f64::EPSILON * (1.0 + z.norm().ln().abs() * self.weight()),
                terms: inner.terms,
            })
        }
    }
}

fn q_power(z: Complex64, n: usize) -> Complex64 {
    (Complex64::i() * 2.0 * PI * z * n as f64).exp()
}

/// `f(z) = Σ a(n) e^{2πinz}`, truncated where the geometric tail bound drops below `eps`.
pub fn evaluate_form(form: &HalfIntegralForm, z: Complex64, eps: f64) -> Result<SeriesValue> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    form.eval_side(Side::Base, z, eps)
}

/// `max |f(z/√4N)| Im(z)^{k/2+1/4}` over the grid.
pub fn uniform_bound_check(form: &HalfIntegralForm, grid: &[Complex64]) -> Result<f64> {
    let c = form.critical_re();
    let mut best: f64 = 0.0;
    for &z in grid {
        let v = form.eval_normalized(Side::Base, z, 1e-13)?;
        best = best.max(v.value.norm() * z.im.powf(c));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientStats {
    /// `max_{n<=M} |a(n)| / n^{k/2+1/4}`
    pub hecke_ratio: f64,
    /// `Σ_{n<=M} |a(n)|² / M^{k+1/2}`
    pub meansq_ratio: f64,
}

pub fn coefficient_stats(form: &HalfIntegralForm, m: usize) -> Result<CoefficientStats> {
    if m == 0 || m > form.len() {
        return Err(Error::InvalidInput(format!("M must be in 1..={}, got {m}", form.len())));
    }
    let c = form.critical_re();
    let mut hecke: f64 = 0.0;
    let mut sq = 0.0;
    for n in 1..=m {
        let a = form.coeff(n).norm();
        hecke = hecke.max(a / (n as f64).powf(c));
        sq += a * a;
    }
    Ok(CoefficientStats { hecke_ratio: hecke, meansq_ratio: sq / (m as f64).powf(form.weight()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WiltonDefect {
    pub defect: Complex64,
    pub bound_ratio: f64,
    pub delta: u8,
}

/// `Σ_{m<=M} a(m) e^{2πimz/√4N} - δ f(z/√4N)` against
/// `e^{-2π Im(z)(M+1)/√4N} M^{k/2+1/4} log M`.
///
/// `δ = 0` when `Im z <= √N/(πM)` and 1 otherwise. With `δ = 1` the defect is
/// minus the tail past `M`, which is summed directly with the factor
/// `e^{2πi(M+1)z/√4N}` pulled out so deep tails do not underflow.
pub fn wilton_defect(form: &HalfIntegralForm, z: Complex64, m: usize) -> Result<WiltonDefect> {
    if !(z.im > 0.0) {
        return Err(Error::NonPositiveImaginaryPart(z.im));
    }
    if m < 2 {
        return Err(Error::InvalidInput("M must be at least 2".into()));
    }
    let s = form.sqrt_level();
    let zn = z / s;
    let bound_log = -2.0 * PI * z.im * (m + 1) as f64 / s + form.critical_re() * (m as f64).ln() + (m as f64).ln().ln();
    let threshold = (form.level_n() as f64).sqrt() / (PI * m as f64);
    if z.im <= threshold {
        if m > form.len() {
            return Err(Error::InsufficientCoefficients { needed: m, available: form.len() });
        }
        let (partial, _) = sum_series(|n| form.coeff(n), zn, 1, m);
        let defect = partial * q_power(zn, 1);
        let ratio = (defect.norm().ln() - bound_log).exp();
        Ok(WiltonDefect { defect, bound_ratio: ratio, delta: 0 })
    } else {
        let x = (-2.0 * PI * zn.im).exp();
        // tail Σ_{j>=0} a(M+1+j) q^j; a(n) <= C n^a <= C (M+1)^a (1+j)^a
        let c_shift = form.growth_c() * ((m + 1) as f64).powf(form.growth_exp());
        let j = truncation_for(c_shift, form.growth_exp(), x, 1e-17 * c_shift);
        let last = m + 1 + j;
        if last > form.len() {
            return Err(Error::InsufficientCoefficients { needed: last, available: form.len() });
        }
        let (tail, _) = sum_series(|n| form.coeff(n), zn, m + 1, last);
        let phase = Complex64::from_polar(1.0, 2.0 * PI * zn.re * (m + 1) as f64);
        let scaled_log = tail.norm().ln() - form.critical_re() * (m as f64).ln() - (m as f64).ln().ln();
        let defect = -tail * phase * (-2.0 * PI * zn.im * (m + 1) as f64).exp();
        Ok(WiltonDefect { defect, bound_ratio: scaled_log.exp(), delta: 1 })
    }
}

/// The log-smoothed companion `f₁ = Σ_{n>c} a(n)/log(n/c) q^n` of a form,
/// `c` being the first index with `a(c) ≠ 0`.
#[derive(Debug, Clone)]
pub struct SmoothedForm {
    base: HalfIntegralForm,
    c: usize,
    coeffs: Arc<Vec<Complex64>>,
    growth_c: f64,
}

impl SmoothedForm {
    /// Smoothing of the form's own coefficients.
    pub fn new(base: &HalfIntegralForm) -> Result<Self> {
        Self::from_coeffs(base, base.coeffs().to_vec())
    }

    /// Smoothing of the averaged coefficients `(a + a_W)/2`.
    pub fn averaged(base: &HalfIntegralForm) -> Result<Self> {
        let avg = (0..=base.len()).map(|n| base.averaged_coeff(n)).collect();
        Self::from_coeffs(base, avg)
    }

    fn from_coeffs(base: &HalfIntegralForm, a: Vec<Complex64>) -> Result<Self> {
        let c = (1..a.len())
            .find(|&n| a[n].norm() != 0.0)
            .ok_or(Error::DegenerateAveragedForm(a.len() - 1))?;
        let cf = c as f64;
        let mut b = vec![Complex64::new(0.0, 0.0); a.len()];
        for n in (c + 1)..a.len() {
            b[n] = a[n] / (n as f64 / cf).ln();
        }
        let growth_c = base.growth_c() / ((cf + 1.0) / cf).ln();
        Ok(Self { base: base.clone(), c, coeffs: Arc::new(b), growth_c })
    }

    pub fn base(&self) -> &HalfIntegralForm {
        &self.base
    }
    /// Index of the first non-zero coefficient of the underlying series.
    pub fn c(&self) -> usize {
        self.c
    }
    /// `a(n)/log(n/c)` for `n > c`, zero otherwise.
    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn len(&self) -> usize {
        self.coeffs.len() - 1
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn growth_c(&self) -> f64 {
        self.growth_c
    }
}

/// `f₁(z/√4N)` with a geometric tail bound below `eps`.
pub fn smoothed_form_eval(sf: &SmoothedForm, z: Complex64, eps: f64) -> Result<SeriesValue> {
    if !(z.im > 0.0) {
        return Err(Error::NonPositiveImaginaryPart(z.im));
    }
    let zn = z / sf.base.sqrt_level();
    let x = (-2.0 * PI * zn.im).exp();
    let a = sf.base.growth_exp();
    let m = truncation_for(sf.growth_c, a, x, eps);
    if m > sf.len() {
        return Err(Error::InsufficientCoefficients { needed: m, available: sf.len() });
    }
    if m <= sf.c {
        return Ok(SeriesValue {
            value: Complex64::new(0.0, 0.0),
            abs_err: geometric_tail_bound(sf.growth_c, a, x, m),
            terms: m,
        });
    }
    let (sum, mag) = sum_series(|n| sf.coeff(n), zn, sf.c + 1, m);
    let value = sum * q_power(zn, sf.c + 1);
    let abs_err = geometric_tail_bound(sf.growth_c, a, x, m) + mag * q_power(zn, sf.c + 1).norm() * f64::EPSILON * (8.0 + 64.0 * PI * zn.norm());
    Ok(SeriesValue { value, abs_err, terms: m })
}

/// One registry entry: `{name, k, N, coeff_file, fricke, coeff_class}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormSpec {
    pub name: String,
    pub k: u32,
    #[serde(rename = "N")]
    pub level_n: u32,
    #[serde(default)]
    pub coeff_file: Option<PathBuf>,
    pub fricke: FrickeSpec,
    pub coeff_class: CoeffClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrickeSpec {
    Eigenvalue { eigenvalue: i8 },
    Partner { coeff_file: PathBuf },
}

/// Reads real coefficients `b(1..)` from CSV (`n,a`) or JSON (`[[n, a], ...]`).
pub fn read_coeff_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let pairs: Vec<(usize, f64)> = if path.extension().is_some_and(|e| e == "json") {
        let v: Value = serde_json::from_str(&text)?;
        let arr = v.as_array().ok_or_else(|| Error::Parse("expected a JSON array".into()))?;
        arr.iter()
            .map(|p| {
                let p = p.as_array().filter(|p| p.len() == 2).ok_or_else(|| Error::Parse("expected [n, a]".into()))?;
                let n = p[0].as_u64().ok_or_else(|| Error::Parse("bad index".into()))? as usize;
                let a = match &p[1] {
                    Value::Number(x) => x.as_f64().unwrap_or(f64::NAN),
                    Value::String(s) => s.parse().map_err(|_| Error::Parse(format!("bad coefficient {s}")))?,
                    other => return Err(Error::Parse(format!("bad coefficient {other}"))),
                };
                Ok((n, a))
            })
            .collect::<Result<_>>()?
    } else {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut out = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::Parse(format!("expected n,a, got {rec:?}")));
            }
            match (rec[0].parse::<usize>(), rec[1].parse::<f64>()) {
                (Ok(n), Ok(a)) => out.push((n, a)),
                _ if out.is_empty() => continue,
                _ => return Err(Error::Parse(format!("bad row {rec:?}"))),
            }
        }
        out
    };
    let mut b = vec![0.0; pairs.iter().map(|p| p.0).max().unwrap_or(0) + 1];
    for (n, a) in pairs {
        if n == 0 {
            continue;
        }
        b[n] = a;
    }
    if b.len() < 2 {
        return Err(Error::Parse(format!("{} holds no coefficients", path.display())));
    }
    Ok(b)
}

fn to_complex(b: Vec<f64>, class: CoeffClass) -> Vec<Complex64> {
    b.into_iter()
        .map(|x| match class {
            CoeffClass::Real => Complex64::new(x, 0.0),
            CoeffClass::PurelyImaginary => Complex64::new(0.0, x),
        })
        .collect()
}

impl FormSpec {
    /// Loads the form; relative file paths resolve against `base_dir`.
    pub fn load(&self, base_dir: &Path) -> Result<HalfIntegralForm> {
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
        let file = self
            .coeff_file
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("form {} has no coeff_file", self.name)))?;
        let coeffs = to_complex(read_coeff_file(&resolve(file))?, self.coeff_class);
        let fricke = match &self.fricke {
            FrickeSpec::Eigenvalue { eigenvalue } => Fricke::Eigenvalue(*eigenvalue),
            FrickeSpec::Partner { coeff_file } => {
                let mut p = to_complex(read_coeff_file(&resolve(coeff_file))?, self.coeff_class);
                p.resize(coeffs.len(), Complex64::new(0.0, 0.0));
                Fricke::Partner(Arc::new(p))
            }
        };
        let mut coeffs = coeffs;
        if let Fricke::Partner(p) = &fricke {
            coeffs.resize(p.len(), Complex64::new(0.0, 0.0));
        }
        HalfIntegralForm::new(self.name.clone(), self.k, self.level_n, coeffs, fricke, self.coeff_class)
    }
}

/// Resolves a form by name: the built-in `yoshida_g`, or an entry of a
/// registry file (a JSON array of [`FormSpec`]).
pub fn resolve_form(name: &str, registry: Option<&Path>, terms: usize) -> Result<HalfIntegralForm> {
    if let Some(path) = registry {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let specs: Vec<FormSpec> = serde_json::from_str(&text)?;
        if let Some(spec) = specs.iter().find(|s| s.name == name) {
            if spec.coeff_file.is_some() {
                let dir = path.parent().unwrap_or(Path::new("."));
                return spec.load(dir);
            }
        }
    }
    if name == "yoshida_g" {
        return Ok(yoshida_g(terms));
    }
    Err(Error::InvalidInput(format!("unknown form {name}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> HalfIntegralForm {
        yoshida_g(4000)
    }

    #[test]
    fn growth_fit_covers_coefficients() {
        let f = g();
        for n in 1..=f.len() {
            assert!(f.coeff(n).norm() <= f.growth_c() * (n as f64).powf(f.growth_exp()));
        }
        assert!(f.clone().with_growth(0.5, 2.25).is_err());
    }

    #[test]
    fn tail_bound_dominates_brute_force() {
        for &(c, a, x, m) in &[(2.0f64, 2.25f64, 0.9f64, 50usize), (1.0, 0.0, 0.5, 3), (3.0, 4.0, 0.99, 2000)] {
            let brute: f64 = ((m + 1)..(m + 200_000)).map(|n| c * (n as f64).powf(a) * x.powi(n as i32)).sum();
            assert!(geometric_tail_bound(c, a, x, m) >= brute, "({c},{a},{x},{m})");
        }
    }

    #[test]
    fn evaluate_far_up_is_leading_term() {
        let v = evaluate_form(&g(), Complex64::new(0.0, 10.0), 1e-12 * (-20.0 * PI).exp()).unwrap();
        assert!(v.value.norm() <= 2.0 * (-20.0 * PI).exp());
        assert!((v.value.re / (-20.0 * PI).exp() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn evaluate_matches_long_sum() {
        let f = g();
        let z = Complex64::new(0.0, 1.0);
        let v = evaluate_form(&f, z, 1e-15).unwrap();
        let oracle: f64 = (1..=500).map(|n| f.coeff(n).re * (-2.0 * PI * n as f64).exp()).sum();
        assert!((v.value.re - oracle).abs() < 1e-12 * oracle.abs().max(1e-300) + 1e-15);
    }

    #[test]
    fn error_bound_consistency() {
        let f = g();
        for &z in &[Complex64::new(0.1, 0.05), Complex64::new(-0.3, 0.2), Complex64::new(0.25, 1.5)] {
            for &eps in &[1e-4, 1e-8] {
                let a = evaluate_form(&f, z, eps).unwrap();
                let b = evaluate_form(&f, z, eps / 100.0).unwrap();
                assert!((a.value - b.value).norm() <= eps);
            }
        }
        assert!(matches!(evaluate_form(&f, Complex64::new(0.0, -1.0), 1e-6), Err(Error::NonPositiveImaginaryPart(_))));
    }

    #[test]
    fn fricke_transform_agrees_with_direct_sum() {
        let f = g();
        // |z| < 1 goes through the involution; compare with the plain series
        for &z in &[Complex64::new(0.3, 0.8), Complex64::new(-0.5, 0.6), Complex64::new(0.0, 0.7)] {
            let via = f.eval_normalized(Side::Base, z, 1e-14).unwrap();
            let direct = evaluate_form(&f, z / 2.0, 1e-14).unwrap();
            assert!((via.value - direct.value).norm() <= 1e-10 * direct.value.norm(), "z = {z}");
        }
    }

    #[test]
    fn uniform_bound_examples() {
        let f = g();
        let z = Complex64::new(0.0, 1.0);
        let single = uniform_bound_check(&f, &[z]).unwrap();
        let direct = evaluate_form(&f, z / 2.0, 1e-15).unwrap().value.norm();
        assert!((single - direct).abs() <= 1e-12 * direct);
        let doubled = uniform_bound_check(&f.scaled(2.0), &[z]).unwrap();
        assert!((doubled - 2.0 * single).abs() <= 1e-12 * single);
    }

    #[test]
    fn coefficient_stats_examples() {
        let f = g();
        let s1 = coefficient_stats(&f, 1).unwrap();
        assert_eq!(s1.hecke_ratio, 1.0);
        let s = coefficient_stats(&f, 1000).unwrap();
        let half = coefficient_stats(&f, 500).unwrap();
        assert!(s.meansq_ratio / half.meansq_ratio < 4.0 && half.meansq_ratio / s.meansq_ratio < 4.0);
        let tripled = coefficient_stats(&f.scaled(3.0), 1000).unwrap();
        assert!((tripled.meansq_ratio / s.meansq_ratio - 9.0).abs() < 1e-12);
    }

    #[test]
    fn wilton_delta_rule() {
        let f = g();
        let m = 50;
        let edge = Complex64::new(0.0, 1.0 / (PI * m as f64));
        let w = wilton_defect(&f, edge, m).unwrap();
        assert_eq!(w.delta, 0);
        assert!(w.bound_ratio.is_finite());
        let up = wilton_defect(&f, Complex64::new(0.0, 3.0), m).unwrap();
        assert_eq!(up.delta, 1);
        assert!(up.bound_ratio.is_finite());
    }

    #[test]
    fn wilton_defect_matches_definition_when_representable() {
        let f = g();
        let z = Complex64::new(0.2, 0.3);
        let m = 10;
        let w = wilton_defect(&f, z, m).unwrap();
        let partial: Complex64 = (1..=m).map(|n| f.coeff(n) * q_power(z / 2.0, n)).sum();
        let full = evaluate_form(&f, z / 2.0, 1e-16).unwrap().value;
        assert!((w.defect - (partial - full)).norm() < 1e-12 * partial.norm());
    }

    #[test]
    fn smoothed_far_up() {
        let f = g();
        let sf = SmoothedForm::new(&f).unwrap();
        assert_eq!(sf.c(), 1);
        let z = Complex64::new(0.0, 100.0);
        let v = smoothed_form_eval(&sf, z, 1e-300).unwrap();
        let bound = 2.0 * f.coeff(2).norm() / 2f64.ln() * (-2.0 * PI * 2.0 * 100.0 / 2.0).exp();
        assert!(v.value.norm() <= bound);
    }

    #[test]
    fn registry_round_trip() {
        let dir = std::env::temp_dir().join(format!("halfint-reg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let f = yoshida_g(200);
        let mut csv = String::from("n,a\n");
        for n in 1..=200 {
            csv.push_str(&format!("{n},{}\n", f.coeff(n).re));
        }
        std::fs::write(dir.join("g.csv"), csv).unwrap();
        let reg = r#"[{"name":"mine","k":4,"N":1,"coeff_file":"g.csv","fricke":{"eigenvalue":1},"coeff_class":"Real"}]"#;
        std::fs::write(dir.join("forms.json"), reg).unwrap();
        let loaded = resolve_form("mine", Some(&dir.join("forms.json")), 0).unwrap();
        assert_eq!(loaded.len(), 200);
        assert_eq!(loaded.coeff(7), f.coeff(7));
        assert!(resolve_form("nope", Some(&dir.join("forms.json")), 10).is_err());
    }
}
