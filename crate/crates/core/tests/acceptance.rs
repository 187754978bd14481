//! End-to-end acceptance run. Prints one line per criterion and exits
//! nonzero when any of them fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use halfint::forms::{yoshida_g, HalfIntegralForm};
use halfint::lfunc::{l_direct, l_f1_direct, l_f1_ray, l_value, lambda_completed, twisted_direct, twisted_lambda, z_twisted, RayTail, Signature, TwistSpec};
use halfint::qseries::{g_form_coeffs, g_form_coeffs_fast};
use halfint::quad::{integrate, QuadOptions};
use halfint::special::{log_gamma, upper_incomplete_gamma};
use halfint::verify::{check_cosh_sinh_identities, check_mean_square_psi, check_parseval_i, check_wilton_bound, dlvp_constant, sinh_sin_coeff};
use halfint::zeros::{count_zeros_rectangle, find_offline_zeros, n0_growth, normalized_signature, scan_sign_changes};
use halfint::Error;

type Outcome = (bool, String);

// ---------- oracles ----------

fn naive_mul(a: &[BigInt], b: &[BigInt], m: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); m + 1];
    for (i, x) in a.iter().enumerate().take(m + 1) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(m + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// `a_g(1..=m)` by schoolbook products: `θ^{-3}` from the recursion for a
/// reciprocal, `q Π(1-q^{2n})^{12}` by repeated multiplication.
fn g_oracle(m: usize) -> Vec<BigInt> {
    let mut theta = vec![BigInt::zero(); m + 1];
    for n in -(m as i64)..=(m as i64) {
        let sq = (n * n) as usize;
        if sq <= m {
            theta[sq] += 1;
        }
    }
    let cube = naive_mul(&naive_mul(&theta, &theta, m), &theta, m);
    let mut inv = vec![BigInt::zero(); m + 1];
    inv[0] = BigInt::one();
    for n in 1..=m {
        let mut s = BigInt::zero();
        for k in 1..=n {
            s += &cube[k] * &inv[n - k];
        }
        inv[n] = -s;
    }
    let mut euler = vec![BigInt::zero(); m + 1];
    euler[0] = BigInt::one();
    for n in 1..=m / 2 {
        let factor: Vec<BigInt> = (0..=m).map(|i| if i == 0 { BigInt::one() } else if i == 2 * n { -BigInt::one() } else { BigInt::zero() }).collect();
        euler = naive_mul(&euler, &factor, m);
    }
    let mut eta12 = vec![BigInt::zero(); m + 1];
    eta12[0] = BigInt::one();
    for _ in 0..12 {
        eta12 = naive_mul(&eta12, &euler, m);
    }
    // shift by q^1
    let mut shifted = vec![BigInt::zero(); m + 1];
    shifted[1..=m].clone_from_slice(&eta12[..m]);
    naive_mul(&inv, &shifted, m)
}

/// Where the ray `t = x + r e^{iφ}` can stop: the integrand `t^{s-1} e^{-t}`
/// has fallen 90 e-folds below its running peak.
fn ray_end(log_f: &dyn Fn(f64) -> Complex64) -> f64 {
    let mut peak = log_f(0.0).re;
    let mut r_end = 0.0;
    while log_f(r_end).re > peak - 90.0 || r_end < 1.0 {
        r_end += 0.25;
        peak = peak.max(log_f(r_end).re);
    }
    r_end
}

/// `∫ t^{s-1} e^{-t} dt` along `t = x + r e^{iφ}`; with `value == false`
/// only the absolute mass along the ray, by a coarse trapezoid.
fn gamma_ray(s: Complex64, x: f64, phi: f64, value: bool) -> Complex64 {
    let dir = Complex64::from_polar(1.0, phi);
    let log_f = |r: f64| (s - 1.0) * (x + r * dir).ln() - (x + r * dir);
    let r_end = ray_end(&log_f);
    if !value {
        let h = 0.05;
        return Complex64::new(h * (0..=(r_end / h) as usize).map(|i| log_f(i as f64 * h).re.exp()).sum::<f64>(), 0.0);
    }
    let pieces = (r_end * (1.0 + s.im.abs() * phi.cos())).ceil().max(4.0) as usize;
    let opts = QuadOptions::new(0.0, 1e-13).pieces(pieces).max_intervals(400_000);
    integrate(|r| Ok(log_f(r).exp() * dir), 0.0, r_end, opts).expect("oracle quadrature").value
}

/// `Γ(s,x) = ∫_x^∞ t^{s-1} e^{-t} dt` by quadrature on the straight ray out of
/// `x` whose absolute mass is smallest, so cancellation stays mild for large `|Im s|`.
fn incomplete_gamma_oracle(s: Complex64, x: f64) -> Complex64 {
    let sign = if s.im < 0.0 { -1.0 } else { 1.0 };
    let best = (0..20)
        .map(|j| sign * 1.4 * j as f64 / 19.0)
        .map(|phi| (phi, gamma_ray(s, x, phi, false).re))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0;
    gamma_ray(s, x, best, true)
}

// ---------- criteria ----------

fn c1() -> Outcome {
    let t0 = Instant::now();
    let engine = g_form_coeffs(1000).expect("engine");
    let dt = t0.elapsed().as_secs_f64();
    let oracle = g_oracle(1000);
    let fast = g_form_coeffs_fast(1000);
    let mismatches = (1..=1000).filter(|&n| engine.coeff(n).unwrap() != oracle[n]).count();
    let fast_mismatches = (1..=1000).filter(|&n| BigInt::from(fast[n]) != oracle[n]).count();
    (
        mismatches == 0 && fast_mismatches == 0 && dt < 5.0,
        format!("a_g(1..1000) mismatches: big-integer engine {mismatches}, sparse engine {fast_mismatches}; engine {dt:.2}s"),
    )
}

fn c2(g: &HalfIntegralForm) -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_err: f64 = 0.0;
    for _ in 0..100 {
        let s = Complex64::new(rng.gen_range(-1.0..=5.5), rng.gen_range(-40.0..=40.0));
        let a = lambda_completed(g, s).unwrap();
        let b = lambda_completed(g, Complex64::new(4.5, 0.0) - s).unwrap();
        let gap = (a.value - b.value).norm();
        let err = a.abs_err.max(b.abs_err);
        worst_err = worst_err.max(err);
        worst_ratio = worst_ratio.max(if gap == 0.0 { 0.0 } else { gap / (2.0 * err) });
    }
    let dt = t0.elapsed().as_secs_f64();
    (worst_ratio <= 1.0 && worst_err <= 1e-8 && dt < 60.0, format!("max |ΔΛ|/(2 abs_err)={worst_ratio:.3e}, max abs_err={worst_err:.2e}, {dt:.2}s"))
}

fn c3(g: &HalfIntegralForm) -> Outcome {
    let s = Complex64::new(6.0, 0.0);
    let cont = l_value(g, s).unwrap().value;
    let direct = l_direct(g, s).unwrap().value;
    let gap_l = (cont - direct).norm() / direct.norm();
    let tw = TwistSpec::new(1, 4, 4).unwrap();
    let eta = twisted_lambda(g, &tw, s).unwrap().value;
    let gamma = log_gamma(s).unwrap().value;
    let factor = (gamma - s * (2.0 * PI / 4.0).ln()).exp();
    let eta_direct = twisted_direct(g, &tw, s).unwrap().value * factor;
    let gap_t = (eta - eta_direct).norm() / eta_direct.norm();
    (gap_l <= 1e-9 && gap_t <= 1e-9, format!("L(6,g) rel gap={gap_l:.2e}, η_1/4(6,g) rel gap={gap_t:.2e}"))
}

fn c4() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut at = (Complex64::new(0.0, 0.0), 0.0);
    let mut count = 0;
    for &sigma in &[0.3, 1.7, 4.5, 7.2] {
        for &tau in &[0.0, 3.0, -10.0, 25.0, 40.0] {
            let s = Complex64::new(sigma, tau);
            let b = s.norm() + 2.0;
            for &x in &[0.1, 0.5, 1.0, 3.0, b - 0.5, b - 0.01, b, b + 0.01, b + 1.0, 2.0 * b + 10.0] {
                let got = upper_incomplete_gamma(s, x).unwrap().value;
                let want = incomplete_gamma_oracle(s, x);
                let rel = (got - want).norm() / want.norm();
                count += 1;
                if rel > worst {
                    worst = rel;
                    at = (s, x);
                }
            }
        }
    }
    (worst <= 1e-10, format!("{count} points, worst rel err {worst:.2e} at s={}, x={:.3}", at.0, at.1))
}

fn c5(g: &HalfIntegralForm) -> Outcome {
    let t0 = Instant::now();
    let r = check_cosh_sinh_identities(g, &[0.3, PI / 4.0, 1.0]).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    (r.passed && dt < 120.0, format!("max relative residual {:.2e} over cosh and sinh, {dt:.1}s", r.residual_or_sup))
}

fn c6(g_long: &HalfIntegralForm) -> Outcome {
    let gap = |s: Complex64| {
        let ray = l_f1_ray(g_long, s, RayTail::Quadrature, 1e-12).unwrap().value;
        let direct = l_f1_direct(g_long, s).unwrap().value;
        (ray - direct).norm() / direct.norm()
    };
    let a = gap(Complex64::new(3.0, 0.0));
    let b = gap(Complex64::new(2.25, 5.0));
    (a <= 1e-8 && b <= 1e-6, format!("L(s,f1) dual-route gap {a:.2e} at s=3, {b:.2e} at s=2.25+5i"))
}

fn c7() -> Outcome {
    let mut worst: f64 = 0.0;
    for j in 1..=3 {
        let b = sinh_sin_coeff(j, 500).unwrap();
        worst = worst.max((b.nested_sum - b.closed_form).abs() / b.closed_form);
    }
    let b1 = sinh_sin_coeff(1, 1).unwrap().closed_form;
    let zeta4 = PI.powi(4) / 90.0;
    let ulps = ((b1 - zeta4).abs() / (f64::EPSILON * zeta4)).round();
    (worst <= 1e-6 && ulps <= 1.0, format!("max nested/closed gap {worst:.2e} (R=500), b_2 vs π⁴/90 differ by {ulps} ulp"))
}

fn sign_changes(g: &HalfIntegralForm, t_lo: f64, t_hi: f64) -> usize {
    scan_sign_changes(|t| normalized_signature(g, t, Signature::Plus), t_lo, t_hi, 0.05, 1e-10).unwrap().ordinates.len()
}

fn c8(g: &HalfIntegralForm) -> Outcome {
    let whole = count_zeros_rectangle(g, 0.75, 3.75, 0.0, 30.0).unwrap();
    let parts: i64 = [(0.0, 10.0), (10.0, 20.0), (20.0, 30.0)].iter().map(|&(a, b)| count_zeros_rectangle(g, 0.75, 3.75, a, b).unwrap()).sum();
    let on_line = sign_changes(g, 0.0, 30.0);
    (whole >= on_line as i64 && parts == whole, format!("rectangle count {whole}, sum over 3 slabs {parts}, r_f sign changes {on_line}"))
}

fn c9(g: &HalfIntegralForm) -> Outcome {
    let t0 = Instant::now();
    let mut excess = Vec::new();
    for w in 0..6 {
        let (a, b) = (10.0 * w as f64, 10.0 * (w + 1) as f64);
        let rect = count_zeros_rectangle(g, 0.75, 3.75, a, b).unwrap();
        let line = sign_changes(g, a, b) as i64;
        if rect > line {
            excess.push(format!("[{a},{b}]:{rect}>{line}"));
        }
    }
    let report = find_offline_zeros(g, 0.0, 60.0, 1.5).unwrap();
    let off: Vec<_> = report.zeros.iter().filter(|z| (z.rho.re - 2.25).abs() > 1e-3 && z.residual <= 1e-8).collect();
    let dt = t0.elapsed().as_secs_f64();
    let first = off.first().map(|z| format!("{:.5}{:+.5}i (|Λ|/scale {:.1e})", z.rho.re, z.rho.im, z.residual)).unwrap_or_default();
    (
        !excess.is_empty() && !off.is_empty() && dt < 600.0,
        format!("windows with excess {}; {} off-line zeros, first {first}; {dt:.1}s", excess.join(" "), off.len()),
    )
}

fn c10(g: &HalfIntegralForm) -> Outcome {
    let fixture: serde_json::Value = serde_json::from_str(include_str!("fixtures/n0_floor.json")).unwrap();
    let floor = fixture["n_plus_floor"].as_u64().unwrap() as usize;
    let (rows, _, _) = n0_growth(g, &[25.0, 50.0, 75.0, 100.0], 0.05, 1e-10).unwrap();
    let increasing = rows.windows(2).all(|w| w[0].n_plus < w[1].n_plus);
    let last = rows.last().unwrap();
    let dlvp = dlvp_constant(fixture["slash_c"].as_u64().unwrap() as u32, fixture["slash_r"].as_u64().unwrap() as u32, 1);
    let table: Vec<String> = rows.iter().map(|r| format!("T={} N+={} N-={} N+/T={:.3} N+/√T={:.3}", r.t, r.n_plus, r.n_minus, r.n_plus_over_t, r.n_plus_over_sqrt_t)).collect();
    (
        increasing && last.n_plus >= floor && last.n_plus >= 20 && last.n_plus_over_sqrt_t > dlvp,
        format!("{}; floor {floor}; dlvp constant {dlvp:.4}", table.join("; ")),
    )
}

fn c11(g: &HalfIntegralForm) -> Outcome {
    let tw = TwistSpec::new(1, 4, 4).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..=300 {
        let z = z_twisted(g, &tw, 0.1 * i as f64).unwrap();
        let ratio = if z.value.im == 0.0 { 0.0 } else { z.value.im.abs() / (2.0 * z.abs_err) };
        worst = worst.max(ratio);
    }
    let bad = TwistSpec::new(1, 2, 4).unwrap();
    let rejected = matches!(twisted_lambda(g, &bad, Complex64::new(2.25, 1.0)), Err(Error::InvalidCusp { .. }));
    (worst <= 1.0 && tw.cusp_ok && !bad.cusp_ok && rejected, format!("max |Im Z|/(2 abs_err)={worst:.3e}; (1,4) accepted, (1,2) rejected={rejected}"))
}

fn c12(g: &HalfIntegralForm) -> Outcome {
    let r = check_wilton_bound(g, 0.01, 5.0, &[10, 50, 200]).unwrap();
    let d = &r.detail[0];
    (r.passed, format!("fitted constant {:.4}, refined grid {:.4}, change {:.1}%", d.measured, d.reference, 100.0 * d.residual))
}

fn c13(g: &HalfIntegralForm) -> Outcome {
    let r = check_parseval_i(g, 1.0, 0.5, None).unwrap();
    let zero = check_parseval_i(g, 0.0, 0.5, None).unwrap();
    let lhs0 = zero.detail[0].measured;
    (r.passed && lhs0 == 0.0, format!("gap {:.2e} (∫|I|²={:.6}), LHS at H=0 is {lhs0}", r.residual_or_sup, r.detail[0].measured))
}

fn c14(g: &HalfIntegralForm) -> Outcome {
    let r = check_mean_square_psi(g, &[10.0, 20.0, 40.0], 5.0).unwrap();
    let ratios: Vec<String> = r.detail.iter().map(|s| format!("{}:{:.3}", s.at, s.measured)).collect();
    (r.passed, format!("∫|Ψ|²/T {}; max/min {:.3}", ratios.join(" "), r.residual_or_sup))
}

fn main() -> ExitCode {
    let g = yoshida_g(30_000);
    let g_long = yoshida_g(80_000);
    let criteria: Vec<(usize, Box<dyn Fn() -> Outcome>)> = vec![
        (1, Box::new(c1)),
        (2, Box::new(|| c2(&g))),
        (3, Box::new(|| c3(&g))),
        (4, Box::new(c4)),
        (5, Box::new(|| c5(&g))),
        (6, Box::new(|| c6(&g_long))),
        (7, Box::new(c7)),
        (8, Box::new(|| c8(&g))),
        (9, Box::new(|| c9(&g))),
        (10, Box::new(|| c10(&g))),
        (11, Box::new(|| c11(&g))),
        (12, Box::new(|| c12(&g))),
        (13, Box::new(|| c13(&g))),
        (14, Box::new(|| c14(&g))),
    ];
    let mut failures = 0;
    for (n, run) in &criteria {
        let (ok, msg) = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)) {
            Ok(r) => r,
            Err(_) => (false, "panicked".to_string()),
        };
        if !ok {
            failures += 1;
        }
        println!("criterion {n}: {} {msg}", if ok { "PASS" } else { "FAIL" });
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
