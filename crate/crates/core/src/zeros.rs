//! Zero detection: sign-change scans of the real signatures, winding-number
//! counts on rectangles, Newton localisation of zeros off the critical line,
//! and the growth table `N₀(T)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::HalfIntegralForm;
use crate::lfunc::{lambda_completed, signature_value, Signature};
use crate::special::log_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepPolicy {
    pub base_step: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Rect {
    pub fn new(re_lo: f64, re_hi: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(re_lo < re_hi && t_lo < t_hi) {
            return Err(Error::InvalidInput(format!("degenerate rectangle [{re_lo}, {re_hi}] x [{t_lo}, {t_hi}]")));
        }
        Ok(Self { re_lo, re_hi, t_lo, t_hi })
    }

    fn grow(&self, d: f64) -> Self {
        Self { re_lo: self.re_lo - d, re_hi: self.re_hi + d, t_lo: self.t_lo - d, t_hi: self.t_hi + d }
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.t_lo + self.t_hi))
    }

    fn contains(&self, z: Complex64) -> bool {
        z.re > self.re_lo && z.re < self.re_hi && z.im > self.t_lo && z.im < self.t_hi
    }

    /// Halves along the longer side (in units where `t` counts double).
    fn split(&self) -> [Rect; 2] {
        if self.t_hi - self.t_lo >= 2.0 * (self.re_hi - self.re_lo) {
            let m = 0.5 * (self.t_lo + self.t_hi);
            [Rect { t_hi: m, ..*self }, Rect { t_lo: m, ..*self }]
        } else {
            let m = 0.5 * (self.re_lo + self.re_hi);
            [Rect { re_hi: m, ..*self }, Rect { re_lo: m, ..*self }]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RectCount {
    pub rect: Rect,
    pub count: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_plus_over_t: f64,
    pub n_plus_over_sqrt_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroScanReport {
    pub t_lo: f64,
    pub t_hi: f64,
    pub step_policy: StepPolicy,
    pub ordinates: Vec<f64>,
    pub brackets: Vec<Bracket>,
    pub counts: Vec<CountRow>,
    pub rectangle_counts: Vec<RectCount>,
}

/// How many times a scan step may be halved where the function dips.
const MAX_REFINE: u32 = 6;
/// A step is refined when both ends are below this fraction of the local scale.
const DIP_FRACTION: f64 = 0.1;

/// Sign changes of `f` on `[t_lo, t_hi]`, each refined by bisection to width `tol`.
///
/// The base grid is cut into chunks scanned in parallel. Inside a step with
/// no sign change the step is halved while both ends are small compared with
/// the neighbouring values, which catches close pairs of zeros. Zeros of even
/// order do not change sign and are not reported.
pub fn scan_sign_changes<F>(f: F, t_lo: f64, t_hi: f64, base_step: f64, tol: f64) -> Result<ZeroScanReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(t_lo < t_hi) || !(base_step > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("need t_lo < t_hi and positive step/tol, got [{t_lo}, {t_hi}], {base_step}, {tol}")));
    }
    let n = ((t_hi - t_lo) / base_step).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| if i == n { t_hi } else { t_lo + i as f64 * base_step }).collect();
    let values: Vec<f64> = grid.par_iter().map(|&t| f(t)).collect::<Result<_>>()?;
    let found: Vec<Vec<Bracket>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 3).min(n);
            let scale = values[lo..=hi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut out = Vec::new();
            refine(&f, grid[i], grid[i + 1], values[i], values[i + 1], scale, tol, 0, &mut out)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let brackets: Vec<Bracket> = found.into_iter().flatten().collect();
    let ordinates = brackets.iter().map(|b| 0.5 * (b.lo + b.hi)).collect();
    Ok(ZeroScanReport {
        t_lo,
        t_hi,
        step_policy: StepPolicy { base_step, tol },
        ordinates,
        brackets,
        counts: Vec::new(),
        rectangle_counts: Vec::new(),
    })
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, fa: f64, fb: f64, scale: f64, tol: f64, depth: u32, out: &mut Vec<Bracket>) -> Result<()> {
    if fa == 0.0 && fb == 0.0 {
        return Ok(());
    }
    if fa * fb < 0.0 {
        out.push(bisect(f, a, b, fa, tol)?);
        return Ok(());
    }
    if fb == 0.0 {
        // a grid point landed on the zero; count it if the sign flips across it
        let right = f(b + 0.25 * tol)?;
        if fa * right < 0.0 {
            out.push(Bracket { lo: b - 0.25 * tol, hi: b + 0.25 * tol });
        }
        return Ok(());
    }
    if depth < MAX_REFINE && fa.abs().max(fb.abs()) < DIP_FRACTION * scale {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        refine(f, a, m, fa, fm, scale, tol, depth + 1, out)?;
        if fm != 0.0 || fb != 0.0 {
            refine(f, m, b, fm, fb, scale, tol, depth + 1, out)?;
        }
    }
    Ok(())
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> Result<Bracket> {
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(Bracket { lo: m - 0.25 * tol, hi: m + 0.25 * tol });
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(Bracket { lo: a, hi: b })
}

/// `|(2π/√4N)^{-s} Γ(s)|`, the size `Λ` would have if `L` were 1.
pub fn gamma_scale(form: &HalfIntegralForm, s: Complex64) -> Result<f64> {
    let lg = log_gamma(s)?;
    Ok((lg.value.re - s.re * (2.0 * PI / form.sqrt_level()).ln()).exp())
}

/// The signature divided by the gamma-factor size, which keeps scans well scaled.
pub fn normalized_signature(form: &HalfIntegralForm, t: f64, which: Signature) -> Result<f64> {
    let v = signature_value(form, t, which)?;
    Ok(v.value / gamma_scale(form, Complex64::new(form.critical_re(), t))?)
}

/// Winding number of `f` around `rect`. `f` returns a value and its error bound.
///
/// Each edge is sampled adaptively until consecutive arguments differ by
/// less than `π/4` and the midpoint agrees with the chord. A sample whose
/// modulus is not well above its error bound, or an edge that cannot be
/// resolved, is reported as a suspected boundary zero.
pub fn winding_number<F>(f: &F, rect: Rect) -> Result<i64>
where
    F: Fn(Complex64) -> Result<(Complex64, f64)> + Sync,
{
    let corners = [
        Complex64::new(rect.re_lo, rect.t_lo),
        Complex64::new(rect.re_hi, rect.t_lo),
        Complex64::new(rect.re_hi, rect.t_hi),
        Complex64::new(rect.re_lo, rect.t_hi),
    ];
    let total: f64 = (0..4)
        .into_par_iter()
        .map(|i| edge_increment(f, corners[i], corners[(i + 1) % 4]))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum();
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.05 {
        return Err(Error::NonConvergence(format!("winding number {turns} is not near an integer")));
    }
    Ok(rounded as i64)
}

fn guarded<F>(f: &F, z: Complex64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<(Complex64, f64)>,
{
    let (v, err) = f(z)?;
    if !(v.norm() > 10.0 * err) {
        return Err(Error::BoundaryZeroSuspected);
    }
    Ok(v)
}

fn edge_increment<F>(f: &F, a: Complex64, b: Complex64) -> Result<f64>
where
    F: Fn(Complex64) -> Result<(Complex64, f64)>,
{
    let len = (b - a).norm();
    let min_step = len * 1e-9;
    // uniform start so that no rotation can alias into a small chord
    let pieces = (len / MAX_EDGE_STEP).ceil().max(1.0) as usize;
    let knots: Vec<f64> = (0..=pieces).map(|i| i as f64 / pieces as f64).collect();
    let values: Vec<Complex64> = knots.iter().map(|&u| guarded(f, a + (b - a) * u)).collect::<Result<_>>()?;
    // explicit stack of (start, end, f(start), f(end)) in parameter order
    let mut stack: Vec<(f64, f64, Complex64, Complex64)> =
        (0..pieces).rev().map(|i| (knots[i], knots[i + 1], values[i], values[i + 1])).collect();
    let mut total = 0.0;
    while let Some((u0, u1, f0, f1)) = stack.pop() {
        let whole = (f1 / f0).arg();
        let um = 0.5 * (u0 + u1);
        let fm = guarded(f, a + (b - a) * um)?;
        let d1 = (fm / f0).arg();
        let d2 = (f1 / fm).arg();
        if whole.abs() < PI / 4.0 && d1.abs() < PI / 4.0 && d2.abs() < PI / 4.0 && (d1 + d2 - whole).abs() < 1e-3 {
            total += d1 + d2;
            continue;
        }
        if (u1 - u0) * len < min_step {
            return Err(Error::BoundaryZeroSuspected);
        }
        // push the right half first so the left is processed next
        stack.push((um, u1, fm, f1));
        stack.push((u0, um, f0, fm));
    }
    Ok(total)
}

/// Longest first sampling step along a contour edge. The phase of `Λ` turns
/// by about `log t` per unit height, so this keeps each step well under `π/4`.
pub const MAX_EDGE_STEP: f64 = 0.05;

/// Nudges tried when the boundary guard fails, as multiples of the rectangle size.
const NUDGES: [f64; 3] = [1e-5, 1e-4, 1e-3];

fn count_with_nudges<F>(f: &F, rect: Rect) -> Result<(i64, Rect)>
where
    F: Fn(Complex64) -> Result<(Complex64, f64)> + Sync,
{
    match winding_number(f, rect) {
        Err(Error::BoundaryZeroSuspected) => {}
        other => return other.map(|c| (c, rect)),
    }
    let size = (rect.re_hi - rect.re_lo).max(rect.t_hi - rect.t_lo);
    for d in NUDGES {
        let r = rect.grow(d * size);
        match winding_number(f, r) {
            Err(Error::BoundaryZeroSuspected) => continue,
            other => return other.map(|c| (c, r)),
        }
    }
    Err(Error::BoundaryZeroSuspected)
}

fn lambda_fn(form: &HalfIntegralForm) -> impl Fn(Complex64) -> Result<(Complex64, f64)> + Sync + '_ {
    move |s| lambda_completed(form, s).map(|v| (v.value, v.abs_err.max(f64::MIN_POSITIVE)))
}

/// Number of zeros of `Λ(·, f)` in the rectangle, by the argument principle.
pub fn count_zeros_rectangle(form: &HalfIntegralForm, re_lo: f64, re_hi: f64, t_lo: f64, t_hi: f64) -> Result<i64> {
    let rect = Rect::new(re_lo, re_hi, t_lo, t_hi)?;
    count_with_nudges(&lambda_fn(form), rect).map(|(c, _)| c)
}

/// Winding count of an arbitrary function (used for analytic test functions).
pub fn count_zeros_of<F>(f: &F, rect: Rect) -> Result<i64>
where
    F: Fn(Complex64) -> Result<(Complex64, f64)> + Sync,
{
    count_with_nudges(f, rect).map(|(c, _)| c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OfflineZero {
    pub rho: Complex64,
    /// `|Λ(ρ)|` divided by the gamma-factor size at `ρ`.
    pub residual: f64,
    pub scale: f64,
    /// `k + 1/2 − conj(ρ)`, the reflected partner when the Fricke eigenvalue is ±1.
    pub partner: Complex64,
    pub partner_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OfflineReport {
    pub zeros: Vec<OfflineZero>,
    pub unresolved: Vec<Rect>,
}

/// Cells are subdivided at most this many times before being reported unresolved.
const MAX_DEPTH: u32 = 14;
/// Zeros closer than this to the critical line are left to the on-line scan.
pub const LINE_GAP: f64 = 2e-3;
/// Required size of `|Λ(ρ)|` relative to the gamma-factor size.
pub const ZERO_RESIDUAL: f64 = 1e-8;

/// Newton iteration on `Λ` with a central-difference derivative, step `1e-6 (1 + |s|)`.
pub fn newton_zero(form: &HalfIntegralForm, start: Complex64, max_iter: usize) -> Result<Complex64> {
    let mut s = start;
    for _ in 0..max_iter {
        let v = lambda_completed(form, s)?.value;
        let h = 1e-6 * (1.0 + s.norm());
        let dp = lambda_completed(form, s + h)?.value;
        let dm = lambda_completed(form, s - h)?.value;
        let d = (dp - dm) / (2.0 * h);
        if d.norm() == 0.0 {
            return Err(Error::NonConvergence(format!("flat derivative at {s}")));
        }
        let step = v / d;
        s -= step;
        if step.norm() < 1e-13 * (1.0 + s.norm()) {
            return Ok(s);
        }
    }
    let scale = gamma_scale(form, s)?;
    if lambda_completed(form, s)?.value.norm() <= ZERO_RESIDUAL * scale {
        Ok(s)
    } else {
        Err(Error::NonConvergence(format!("Newton from {start} ended at {s}")))
    }
}

/// Zeros of `Λ` in `[c−w, c+w] × [t_lo, t_hi]` away from the critical line `Re s = c`.
///
/// Both sides `[c−w, c−gap]` and `[c+gap, c+w]` are subdivided until each
/// cell holds at most one zero; single-zero cells are refined by Newton from
/// the cell centre, and a result is kept only if it stays in its cell.
pub fn find_offline_zeros(form: &HalfIntegralForm, t_lo: f64, t_hi: f64, w: f64) -> Result<OfflineReport> {
    if !(w > LINE_GAP) {
        return Err(Error::InvalidInput(format!("strip half-width must exceed {LINE_GAP}, got {w}")));
    }
    let c = form.critical_re();
    let sides = [Rect::new(c - w, c - LINE_GAP, t_lo, t_hi)?, Rect::new(c + LINE_GAP, c + w, t_lo, t_hi)?];
    let f = lambda_fn(form);
    let mut report = OfflineReport { zeros: Vec::new(), unresolved: Vec::new() };
    for side in sides {
        search_cell(form, &f, side, 0, &mut report)?;
    }
    report.zeros.sort_by(|a, b| a.rho.im.total_cmp(&b.rho.im).then(a.rho.re.total_cmp(&b.rho.re)));
    Ok(report)
}

fn search_cell<F>(form: &HalfIntegralForm, f: &F, rect: Rect, depth: u32, report: &mut OfflineReport) -> Result<()>
where
    F: Fn(Complex64) -> Result<(Complex64, f64)> + Sync,
{
    let (count, rect) = match count_with_nudges(f, rect) {
        Ok(v) => v,
        Err(Error::BoundaryZeroSuspected) | Err(Error::NonConvergence(_)) => {
            report.unresolved.push(rect);
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    if count <= 0 {
        return Ok(());
    }
    if count == 1 {
        if let Ok(rho) = newton_zero(form, rect.center(), 40) {
            if rect.contains(rho) {
                let scale = gamma_scale(form, rho)?;
                let residual = lambda_completed(form, rho)?.value.norm() / scale;
                if residual <= ZERO_RESIDUAL {
                    let partner = Complex64::new(form.weight(), 0.0) - rho.conj();
                    let partner_residual = lambda_completed(form, partner)?.value.norm() / gamma_scale(form, partner)?;
                    report.zeros.push(OfflineZero { rho, residual, scale, partner, partner_residual });
                    return Ok(());
                }
            }
        }
    }
    if depth >= MAX_DEPTH {
        report.unresolved.push(rect);
        return Ok(());
    }
    for half in rect.split() {
        search_cell(form, f, half, depth + 1, report)?;
    }
    Ok(())
}

/// `N₀^±(T)` at each checkpoint from one scan of each signature over `[0, max T]`.
pub fn n0_growth(form: &HalfIntegralForm, checkpoints: &[f64], base_step: f64, tol: f64) -> Result<(Vec<CountRow>, ZeroScanReport, ZeroScanReport)> {
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| !(w[0] < w[1])) || !(checkpoints[0] > 0.0) {
        return Err(Error::InvalidInput("checkpoints must be positive and increasing".into()));
    }
    let top = *checkpoints.last().expect("non-empty");
    let plus = scan_sign_changes(|t| normalized_signature(form, t, Signature::Plus), 0.0, top, base_step, tol)?;
    let minus = scan_sign_changes(|t| normalized_signature(form, t, Signature::Minus), 0.0, top, base_step, tol)?;
    let rows = checkpoints
        .iter()
        .map(|&t| {
            let n_plus = plus.ordinates.iter().filter(|&&x| x <= t).count();
            let n_minus = minus.ordinates.iter().filter(|&&x| x <= t).count();
            CountRow { t, n_plus, n_minus, n_plus_over_t: n_plus as f64 / t, n_plus_over_sqrt_t: n_plus as f64 / t.sqrt() }
        })
        .collect();
    Ok((rows, plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_zeros() {
        let r = scan_sign_changes(|t| Ok(t.cos()), 0.0, 10.0, 0.5, 1e-10).unwrap();
        assert_eq!(r.ordinates.len(), 3);
        for (i, z) in r.ordinates.iter().enumerate() {
            assert!((z - (PI / 2.0 + i as f64 * PI)).abs() < 1e-10);
            assert!((z - 1e-10).cos() * (z + 1e-10).cos() < 0.0);
        }
    }

    #[test]
    fn even_order_zero_not_counted() {
        let r = scan_sign_changes(|t| Ok(t * t), -1.0, 1.0, 0.1, 1e-8).unwrap();
        assert!(r.ordinates.is_empty());
    }

    #[test]
    fn zero_on_grid_point() {
        let r = scan_sign_changes(|t| Ok(t - 1.0), 0.0, 2.0, 0.5, 1e-9).unwrap();
        assert_eq!(r.ordinates.len(), 1);
        assert!((r.ordinates[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn close_pair_found_by_refinement() {
        // zeros at 1.10 and 1.12 fall inside one base step
        let r = scan_sign_changes(|t| Ok((t - 1.1) * (t - 1.12) * (t - 5.0)), 0.0, 3.0, 0.5, 1e-9).unwrap();
        assert_eq!(r.ordinates.len(), 2, "{:?}", r.ordinates);
    }

    #[test]
    fn winding_of_linear_function() {
        let s0 = Complex64::new(0.3, 0.4);
        let f = move |s: Complex64| Ok((s - s0, 1e-15));
        let inside = Rect::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let outside = Rect::new(2.0, 3.0, 0.0, 1.0).unwrap();
        assert_eq!(count_zeros_of(&f, inside).unwrap(), 1);
        assert_eq!(count_zeros_of(&f, outside).unwrap(), 0);
        let g = move |s: Complex64| Ok(((s - s0) * (s - s0) * (s + 5.0), 1e-15));
        assert_eq!(count_zeros_of(&g, inside).unwrap(), 2);
    }

    #[test]
    fn boundary_zero_is_nudged() {
        let s0 = Complex64::new(0.5, 0.0);
        let f = move |s: Complex64| Ok((s - s0, 1e-12));
        assert_eq!(count_zeros_of(&f, Rect::new(0.0, 1.0, 0.0, 1.0).unwrap()).unwrap(), 1);
    }
}
