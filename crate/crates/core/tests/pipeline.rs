use num_complex::Complex64;

use halfint::forms::yoshida_g;
use halfint::lfunc::{l_value, twist_root_number, twisted_lambda, write_eval_csv, write_eval_json, EvalRow, Signature, TwistSpec};
use halfint::qseries::{g_form_coeffs, g_form_coeffs_fast, QExpansion};
use halfint::verify::{run_check, verify_all, CHECK_NAMES};
use halfint::zeros::{count_zeros_rectangle, normalized_signature, scan_sign_changes};
use halfint::Error;

#[test]
fn coefficient_files_round_trip() {
    let q = g_form_coeffs(200).unwrap();
    let mut buf = Vec::new();
    q.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("n,a\n"));
    assert_eq!(QExpansion::read_csv(&buf[..]).unwrap(), q);
    assert_eq!(QExpansion::from_json(&q.to_json()).unwrap(), q);
}

#[test]
fn engines_agree_on_long_prefix() {
    let big = g_form_coeffs(3000).unwrap();
    let fast = g_form_coeffs_fast(3000);
    for (n, a) in fast.iter().enumerate().skip(1) {
        assert_eq!(big.coeff(n).unwrap(), (*a).into(), "n = {n}");
    }
}

#[test]
fn eval_formats_carry_same_numbers() {
    let g = yoshida_g(4000);
    let rows: Vec<EvalRow> = (0..5)
        .map(|i| {
            let t = i as f64;
            let v = l_value(&g, Complex64::new(2.25, t)).unwrap();
            EvalRow { t, re: v.value.re, im: v.value.im, abs_err: v.abs_err }
        })
        .collect();
    let mut csv_buf = Vec::new();
    write_eval_csv(&rows, &mut csv_buf).unwrap();
    let mut json_buf = Vec::new();
    write_eval_json(&rows, &mut json_buf).unwrap();
    let json: Vec<serde_json::Value> = serde_json::from_slice(&json_buf).unwrap();
    let text = String::from_utf8(csv_buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,re,im,abs_err"));
    for (line, obj) in lines.zip(&json) {
        let fields: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let from_json: Vec<f64> = ["t", "re", "im", "abs_err"].iter().map(|k| obj[*k].as_f64().unwrap()).collect();
        assert_eq!(fields, from_json);
    }
}

#[test]
fn rectangle_counts_add_over_partition() {
    let g = yoshida_g(6000);
    let whole = count_zeros_rectangle(&g, 0.75, 3.75, 5.0, 15.0).unwrap();
    let lower = count_zeros_rectangle(&g, 0.75, 3.75, 5.0, 10.0).unwrap();
    let upper = count_zeros_rectangle(&g, 0.75, 3.75, 10.0, 15.0).unwrap();
    assert_eq!(whole, lower + upper);
    let scan = scan_sign_changes(|t| normalized_signature(&g, t, Signature::Plus), 5.0, 15.0, 0.05, 1e-10).unwrap();
    assert!(whole >= scan.ordinates.len() as i64);
}

#[test]
fn scanned_ordinates_bracket_a_sign_change() {
    let g = yoshida_g(6000);
    let f = |t: f64| normalized_signature(&g, t, Signature::Plus);
    let tol = 1e-10;
    let scan = scan_sign_changes(f, 0.0, 20.0, 0.05, tol).unwrap();
    assert!(!scan.ordinates.is_empty());
    for &t in &scan.ordinates {
        assert!(f(t - tol).unwrap() * f(t + tol).unwrap() <= 0.0, "no sign change at {t}");
    }
}

#[test]
fn twists_reject_bad_inputs() {
    let g = yoshida_g(2000);
    let half = TwistSpec::new(1, 2, 4).unwrap();
    assert!(!half.cusp_ok);
    assert!(matches!(twisted_lambda(&g, &half, Complex64::new(3.0, 0.0)), Err(Error::InvalidCusp { .. })));
    assert!(matches!(TwistSpec::new(2, 4, 4), Err(Error::InvalidCusp { .. })));
    let even = TwistSpec::new(2, 5, 4).unwrap();
    assert!(matches!(twist_root_number(&g, &even), Err(Error::OddityViolation(2))));
    assert!(Error::OddityViolation(2).is_domain());
    assert!(!Error::InvalidInput(String::new()).is_domain());
}

#[test]
fn every_check_name_dispatches() {
    assert!(matches!(run_check("no_such_check", &yoshida_g(10)), Err(Error::InvalidInput(_))));
    // a short form makes every check fail or error, but each must still report
    let report = verify_all(&yoshida_g(500));
    let names: Vec<&str> = report.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, CHECK_NAMES);
}
