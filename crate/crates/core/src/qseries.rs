//! Exact truncated q-expansions.
//!
//! A [`QExpansion`] stores the coefficients of `Σ c(n) q^{n/ℓ}` for
//! `start <= n <= truncation`, where `q = e^{2πiz}` and `ℓ` is the width.
//! Terms past the truncation are unknown, not zero, and every operation
//! shrinks the truncation accordingly.

use std::io::{Read, Write};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QExpansion {
    width: u64,
    start: usize,
    coeffs: Vec<BigInt>,
}

impl QExpansion {
    /// Builds an expansion from coefficients at indices `start..start+coeffs.len()`.
    pub fn new(width: u64, start: usize, coeffs: Vec<BigInt>) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidInput("width must be at least 1".into()));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("an expansion needs at least one term".into()));
        }
        Ok(Self { width, start, coeffs })
    }

    pub fn from_i64(width: u64, start: usize, coeffs: &[i64]) -> Result<Self> {
        Self::new(width, start, coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// The constant series 1 known up to `truncation`.
    pub fn one(truncation: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); truncation + 1];
        coeffs[0] = BigInt::one();
        Self { width: 1, start: 0, coeffs }
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn truncation(&self) -> usize {
        self.start + self.coeffs.len() - 1
    }

    /// Stored coefficients, first one at index `start`.
    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Coefficient at index `n`; zero below `start`, `None` past the truncation.
    pub fn coeff(&self, n: usize) -> Option<BigInt> {
        if n > self.truncation() {
            None
        } else if n < self.start {
            Some(BigInt::zero())
        } else {
            Some(self.coeffs[n - self.start].clone())
        }
    }

    pub fn coeffs_i64(&self) -> Option<Vec<i64>> {
        self.coeffs.iter().map(|c| c.to_i64()).collect()
    }

    /// Drops everything past index `m`.
    pub fn truncate(&self, m: usize) -> Result<Self> {
        if m < self.start {
            return Err(Error::InvalidInput(format!(
                "cannot truncate below the first stored index {}",
                self.start
            )));
        }
        let keep = (m.min(self.truncation()) - self.start) + 1;
        Ok(Self { width: self.width, start: self.start, coeffs: self.coeffs[..keep].to_vec() })
    }

    /// Re-expresses the series in width `width * factor` (indices scale by `factor`).
    pub fn rescale(&self, factor: u64) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidInput("rescale factor must be positive".into()));
        }
        let f = factor as usize;
        let start = self.start * f;
        let trunc = (self.truncation() + 1) * f - 1;
        let mut coeffs = vec![BigInt::zero(); trunc - start + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i * f] = c.clone();
        }
        Ok(Self { width: self.width * factor, start, coeffs })
    }

    /// Brings two expansions to a common width (the lcm of both).
    pub fn reconcile(a: &Self, b: &Self) -> Result<(Self, Self)> {
        if a.width == b.width {
            return Ok((a.clone(), b.clone()));
        }
        let l = a.width.lcm(&b.width);
        Ok((a.rescale(l / a.width)?, b.rescale(l / b.width)?))
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self {
            width: self.width,
            start: self.start,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (a, b) = Self::reconcile(self, other)?;
        let start = a.start.min(b.start);
        let trunc = a.truncation().min(b.truncation());
        if trunc < start {
            return Err(Error::InvalidInput("sum has no known terms".into()));
        }
        let coeffs = (start..=trunc)
            .map(|n| a.coeff(n).unwrap_or_default() + b.coeff(n).unwrap_or_default())
            .collect();
        Ok(Self { width: a.width, start, coeffs })
    }

    /// Truncated Cauchy product. Zero coefficients are skipped, so sparse
    /// factors such as theta cost far less than `O(M^2)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let (a, b) = Self::reconcile(self, other)?;
        let start = a.start + b.start;
        let trunc = (a.truncation() + b.start).min(b.truncation() + a.start);
        let len = trunc - start + 1;
        let mut out = vec![BigInt::zero(); len];
        let (sparse, dense) = if nonzeros(&a.coeffs) <= nonzeros(&b.coeffs) { (&a, &b) } else { (&b, &a) };
        for (i, c) in sparse.coeffs.iter().enumerate() {
            if c.is_zero() || i >= len {
                continue;
            }
            for (j, d) in dense.coeffs.iter().take(len - i).enumerate() {
                if !d.is_zero() {
                    out[i + j] += c * d;
                }
            }
        }
        Ok(Self { width: a.width, start, coeffs: out })
    }

    /// Multiplicative inverse; the series must start at index 0 with a ±1 term.
    pub fn invert(&self) -> Result<Self> {
        if self.start != 0 {
            return Err(Error::NonUnitLeadingTerm);
        }
        let a0 = &self.coeffs[0];
        if !(a0.is_one() || (-a0).is_one()) {
            return Err(Error::NonUnitLeadingTerm);
        }
        let support: Vec<(usize, &BigInt)> =
            self.coeffs.iter().enumerate().skip(1).filter(|(_, c)| !c.is_zero()).collect();
        let len = self.coeffs.len();
        let mut inv: Vec<BigInt> = Vec::with_capacity(len);
        inv.push(a0.clone());
        for n in 1..len {
            let mut acc = BigInt::zero();
            for &(i, c) in &support {
                if i > n {
                    break;
                }
                acc += c * &inv[n - i];
            }
            // a0 is ±1, so dividing by it is multiplying by it
            inv.push(-(acc * a0));
        }
        Ok(Self { width: self.width, start: 0, coeffs: inv })
    }

    /// Integer power by repeated squaring; negative exponents invert first.
    pub fn pow(&self, e: i64) -> Result<Self> {
        if e == 0 {
            return Ok(Self {
                width: self.width,
                start: 0,
                coeffs: Self::one(self.truncation() - self.start).coeffs,
            });
        }
        let base = if e < 0 { self.invert()? } else { self.clone() };
        let mut k = e.unsigned_abs();
        let mut acc: Option<Self> = None;
        let mut sq = base;
        loop {
            if k & 1 == 1 {
                acc = Some(match acc {
                    None => sq.clone(),
                    Some(a) => a.mul(&sq)?,
                });
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            sq = sq.mul(&sq)?;
        }
        Ok(acc.expect("exponent is non-zero"))
    }

    /// Writes `n,a` rows (with header) for every stored index.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "a"])?;
        for (i, c) in self.coeffs.iter().enumerate() {
            w.write_record([(self.start + i).to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON array of `[n, a]` pairs; coefficients outside i64 become strings.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let a = match c.to_i64() {
                        Some(v) => Value::from(v),
                        None => Value::from(c.to_string()),
                    };
                    Value::Array(vec![Value::from((self.start + i) as u64), a])
                })
                .collect(),
        )
    }

    /// Reads `n,a` rows. Indices must be consecutive; a header line is optional.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
        let mut pairs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::Parse(format!("expected n,a but got {:?}", rec)));
            }
            let n = match rec[0].parse::<usize>() {
                Ok(n) => n,
                Err(_) if pairs.is_empty() => continue,
                Err(e) => return Err(Error::Parse(e.to_string())),
            };
            let a: BigInt = rec[1].parse().map_err(|e| Error::Parse(format!("{e}")))?;
            pairs.push((n, a));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let arr = v.as_array().ok_or_else(|| Error::Parse("expected a JSON array".into()))?;
        let mut pairs = Vec::with_capacity(arr.len());
        for item in arr {
            let pair = item.as_array().filter(|p| p.len() == 2).ok_or_else(|| Error::Parse("expected [n, a] pairs".into()))?;
            let n = pair[0].as_u64().ok_or_else(|| Error::Parse("index must be a non-negative integer".into()))? as usize;
            let a: BigInt = match &pair[1] {
                Value::Number(x) => x.to_string().parse().map_err(|_| Error::Parse(format!("not an integer: {x}")))?,
                Value::String(s) => s.parse().map_err(|_| Error::Parse(format!("not an integer: {s}")))?,
                other => return Err(Error::Parse(format!("not an integer: {other}"))),
            };
            pairs.push((n, a));
        }
        Self::from_pairs(pairs)
    }

    fn from_pairs(pairs: Vec<(usize, BigInt)>) -> Result<Self> {
        let first = pairs.first().ok_or_else(|| Error::Parse("no coefficients".into()))?.0;
        for (i, (n, _)) in pairs.iter().enumerate() {
            if *n != first + i {
                return Err(Error::Parse(format!("indices must be consecutive, found {n} at position {i}")));
            }
        }
        Self::new(1, first, pairs.into_iter().map(|(_, a)| a).collect())
    }
}

fn nonzeros(c: &[BigInt]) -> usize {
    c.iter().filter(|x| !x.is_zero()).count()
}

/// `θ(z) = Σ_{n∈Z} q^{n²}` up to index `m`.
pub fn theta_expansion(m: usize) -> QExpansion {
    let mut coeffs = vec![BigInt::zero(); m + 1];
    coeffs[0] = BigInt::one();
    let mut k = 1usize;
    while k * k <= m {
        coeffs[k * k] = BigInt::from(2);
        k += 1;
    }
    QExpansion { width: 1, start: 0, coeffs }
}

/// `η(dz)^e` in `q = e^{2πiz}` up to index `m`.
pub fn eta_product_expansion(dilation: u64, exponent: i64, m: usize) -> Result<QExpansion> {
    if dilation == 0 {
        return Err(Error::InvalidInput("dilation must be positive".into()));
    }
    let de = dilation as i64 * exponent;
    if de % 24 != 0 {
        return Err(Error::NonIntegralPrefactor { dilation, exponent });
    }
    let shift = de / 24;
    if shift < 0 {
        return Err(Error::InvalidInput(format!(
            "η({dilation}z)^{exponent} starts at q^{shift}; negative starts are not representable"
        )));
    }
    let shift = shift as usize;
    if m < shift {
        return Err(Error::InvalidInput(format!("truncation {m} is below the leading index {shift}")));
    }
    let len = m - shift;
    // Π (1 - q^{dn}) by one in-place convolution per factor
    let mut prod = vec![BigInt::zero(); len + 1];
    prod[0] = BigInt::one();
    let d = dilation as usize;
    let mut step = d;
    while step <= len {
        for i in (step..=len).rev() {
            let t = prod[i - step].clone();
            prod[i] -= t;
        }
        step += d;
    }
    let euler = QExpansion { width: 1, start: 0, coeffs: prod }.pow(exponent)?;
    Ok(QExpansion { width: 1, start: shift, coeffs: euler.coeffs })
}

/// Coefficients of `g(z) = θ(z)^{-3} η(2z)^{12}` at indices `1..=m`.
pub fn g_form_coeffs(m: usize) -> Result<QExpansion> {
    if m == 0 {
        return Err(Error::InvalidInput("need m >= 1".into()));
    }
    let theta = theta_expansion(m - 1);
    let inv_cube = theta.pow(3)?.invert()?;
    let eta = eta_product_expansion(2, 12, m)?;
    inv_cube.mul(&eta)
}

/// The same coefficients as [`g_form_coeffs`] in machine integers, built from
/// the identity `θ^{-3} η(2z)^{12} = θ(z+1/2)^3 η(4z)^6`. Every factor on the
/// right is sparse with bounded coefficients, which makes very long
/// expansions cheap. Index `n` of the returned vector is `a_g(n)` (index 0 is 0).
pub fn g_form_coeffs_fast(m: usize) -> Vec<i64> {
    let len = m + 1;
    // θ(z+1/2) = Σ (-1)^n q^{n²}
    let mut theta_alt: Vec<(usize, i64)> = vec![(0, 1)];
    let mut k = 1usize;
    while k * k < len {
        theta_alt.push((k * k, if k % 2 == 1 { -2 } else { 2 }));
        k += 1;
    }
    // Π (1 - q^{4n})^3 = Σ (-1)^j (2j+1) q^{2j(j+1)} (Jacobi)
    let mut jacobi: Vec<(usize, i64)> = Vec::new();
    let mut j = 0usize;
    while 2 * j * (j + 1) < len {
        let sign = if j % 2 == 1 { -1 } else { 1 };
        jacobi.push((2 * j * (j + 1), sign * (2 * j as i64 + 1)));
        j += 1;
    }
    // the leading q of η(4z)^6 shifts everything by one
    let mut acc = vec![0i64; len];
    acc[1.min(m)] = if m >= 1 { 1 } else { 0 };
    for factor in [&theta_alt, &theta_alt, &theta_alt, &jacobi, &jacobi] {
        let mut next = vec![0i64; len];
        for (i, &a) in acc.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for &(e, c) in factor.iter() {
                if i + e >= len {
                    break;
                }
                next[i + e] += a * c;
            }
        }
        acc = next;
    }
    acc
}

/// Largest absolute coefficient, handy for diagnostics.
pub fn max_abs(q: &QExpansion) -> BigInt {
    q.coeffs.iter().map(|c| c.abs()).max().unwrap_or_default()
}
