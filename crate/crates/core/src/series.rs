//! Truncated Laurent series in one variable with exact rational coefficients.
//!
//! A [`LaurentSeries`] stores the coefficients of `z^lo ... z^hi` and nothing
//! beyond: every operation computes the highest order it can still guarantee
//! and the result carries that window. Reading a coefficient above the window
//! is an error, never a silent zero.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{bernoulli, binomial, factorial, format_rational, from_bigint, int, rat, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaurentSeries {
    /// Order of `coeffs[0]`.
    lo: i64,
    coeffs: Vec<Rational>,
}

/// Truncation order used for a computation that reads up to genus `g_max`.
pub fn default_order(g_max: u32) -> i64 {
    2 * i64::from(g_max) + 4
}

impl LaurentSeries {
    /// Coefficients of `z^lo, z^{lo+1}, ...`; the window ends at the last entry.
    pub fn new(lo: i64, coeffs: Vec<Rational>) -> Self {
        let mut s = Self { lo, coeffs };
        s.normalize();
        s
    }

    /// A series known to be zero through order `hi`.
    pub fn zero(hi: i64) -> Self {
        Self {
            lo: hi + 1,
            coeffs: Vec::new(),
        }
    }

    /// `1 + O(z^{hi+1})`.
    pub fn one(hi: i64) -> Self {
        Self::monomial(0, Rational::one(), hi)
    }

    /// `c z^k`, known exactly through order `hi`.
    pub fn monomial(k: i64, c: Rational, hi: i64) -> Self {
        if hi < k {
            return Self::zero(hi);
        }
        let mut coeffs = vec![Rational::zero(); (hi - k + 1) as usize];
        coeffs[0] = c;
        Self::new(k, coeffs)
    }

    fn normalize(&mut self) {
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.lo += lead as i64;
        }
    }

    /// Lowest order with a nonzero coefficient, if any is known.
    pub fn valuation(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then_some(self.lo)
    }

    /// Highest order whose coefficient is known.
    pub fn max_order(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn pole_order(&self) -> u64 {
        self.valuation().map_or(0, |v| (-v).max(0) as u64)
    }

    pub fn coeff(&self, order: i64) -> Result<Rational> {
        if order > self.max_order() {
            return Err(Error::Series(format!(
                "coefficient of z^{order} requested but the series is only known through z^{}",
                self.max_order()
            )));
        }
        if order < self.lo {
            return Ok(Rational::zero());
        }
        Ok(self.coeffs[(order - self.lo) as usize].clone())
    }

    /// Coefficient of `z^{-1}`.
    pub fn residue(&self) -> Result<Rational> {
        self.coeff(-1)
    }

    pub fn truncate(&self, hi: i64) -> Self {
        if hi >= self.max_order() {
            return self.clone();
        }
        if hi < self.lo {
            return Self::zero(hi);
        }
        Self::new(self.lo, self.coeffs[..=(hi - self.lo) as usize].to_vec())
    }

    pub fn add(&self, other: &Self) -> Self {
        let hi = self.max_order().min(other.max_order());
        let lo = self.lo.min(other.lo);
        if hi < lo {
            return Self::zero(hi);
        }
        let coeffs = (lo..=hi)
            .map(|k| self.coeff(k).expect("in window") + other.coeff(k).expect("in window"))
            .collect();
        Self::new(lo, coeffs)
    }

    pub fn neg(&self) -> Self {
        Self {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.lo, self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Multiplies by `z^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            lo: self.lo + k,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (Some(va), Some(vb)) = (self.valuation(), other.valuation()) else {
            // one factor is an unknown-or-zero tail; the product is known to be zero below this
            let hi = match (self.valuation(), other.valuation()) {
                (Some(va), None) => va + other.max_order(),
                (None, Some(vb)) => vb + self.max_order(),
                _ => self.max_order() + other.max_order(),
            };
            return Self::zero(hi);
        };
        let hi = (va + other.max_order()).min(vb + self.max_order());
        let len = (hi - va - vb + 1).max(0) as usize;
        let mut coeffs = vec![Rational::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(len - i) {
                if !b.is_zero() {
                    coeffs[i + j] += a * b;
                }
            }
        }
        Self::new(va + vb, coeffs)
    }

    /// Multiplicative inverse. The lowest known coefficient must be nonzero.
    pub fn inverse(&self) -> Result<Self> {
        let Some(v) = self.valuation() else {
            return Err(Error::Series(
                "division by a series with no nonzero known coefficient".into(),
            ));
        };
        let n = self.coeffs.len();
        let lead_inv = Rational::one() / &self.coeffs[0];
        let mut out = vec![Rational::zero(); n];
        out[0] = lead_inv.clone();
        for k in 1..n {
            let mut acc = Rational::zero();
            for j in 1..=k {
                acc += &self.coeffs[j] * &out[k - j];
            }
            out[k] = -acc * &lead_inv;
        }
        Ok(Self::new(-v, out))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inverse()?))
    }

    pub fn powi(&self, k: i64) -> Result<Self> {
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one(base.max_order() - base.valuation().unwrap_or(0));
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        Ok(acc)
    }

    /// `f(c z)`: the coefficient of `z^k` picks up `c^k`.
    pub fn scale_argument(&self, c: &Rational) -> Result<Self> {
        if c.is_zero() {
            return Err(Error::Series("argument scale factor must be nonzero".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, x)| x * pow_rational(c, self.lo + i as i64))
            .collect();
        Ok(Self::new(self.lo, coeffs))
    }

    /// `exp(f)` for `f` with no pole and zero constant term.
    pub fn exp(&self) -> Result<Self> {
        let hi = self.max_order();
        if let Some(v) = self.valuation() {
            if v < 1 {
                return Err(Error::Series(
                    "exp needs a series with zero constant term and no pole".into(),
                ));
            }
        }
        if hi < 0 {
            return Ok(Self::zero(hi));
        }
        let a = |k: i64| self.coeff(k).expect("in window");
        let n = hi as usize;
        let mut e = vec![Rational::zero(); n + 1];
        e[0] = Rational::one();
        for m in 1..=n {
            let mut acc = Rational::zero();
            for k in 1..=m {
                let ak = a(k as i64);
                if !ak.is_zero() {
                    acc += int(k as i64) * ak * &e[m - k];
                }
            }
            e[m] = acc / int(m as i64);
        }
        Ok(Self::new(0, e))
    }

    /// One `order: p/q` line per coefficient in the window.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            let _ = writeln!(out, "{}: {}", self.lo + i as i64, format_rational(c));
        }
        out
    }
}

fn pow_rational(c: &Rational, k: i64) -> Rational {
    let r = num_traits::pow(c.clone(), k.unsigned_abs() as usize);
    if k < 0 {
        r.recip()
    } else {
        r
    }
}

fn inv_factorial(n: i64) -> Rational {
    from_bigint(factorial(n).expect("nonnegative")).recip()
}

/// `sinh(z)` through `z^hi`.
pub fn sinh(hi: i64) -> LaurentSeries {
    let coeffs = (0..=hi.max(-1))
        .map(|k| if k % 2 == 1 { inv_factorial(k) } else { Rational::zero() })
        .collect();
    LaurentSeries::new(0, coeffs)
}

/// `cosh(z)` through `z^hi`.
pub fn cosh(hi: i64) -> LaurentSeries {
    let coeffs = (0..=hi.max(-1))
        .map(|k| if k % 2 == 0 { inv_factorial(k) } else { Rational::zero() })
        .collect();
    LaurentSeries::new(0, coeffs)
}

/// `S(z) = sinh(z/2)/(z/2)` through `z^hi`.
pub fn s_function(hi: i64) -> LaurentSeries {
    let half = rat(1, 2);
    sinh(hi + 1)
        .scale_argument(&half)
        .expect("nonzero scale")
        .shift(-1)
        .scale(&int(2))
}

/// `coth(z)` through `z^hi`, obtained as `cosh/sinh` by series division.
pub fn coth(hi: i64) -> LaurentSeries {
    let c = cosh(hi + 1);
    let s = sinh(hi + 2);
    c.try_div(&s).expect("sinh has a nonzero linear term").truncate(hi)
}

/// `[1/x] coth(x)^{2k+1}`.
pub fn coth_power_residue(k: u32) -> Rational {
    let p = 2 * i64::from(k) + 1;
    // coth = x^{-1}(1 + ...); the residue of the p-th power needs p-1 orders of the bracket
    coth(p - 2)
        .powi(p)
        .and_then(|s| s.residue())
        .expect("window chosen to cover the residue")
}

/// `2^{2k}/(2k)! * sum_{n_1+...+n_{2k+1}=k} (2k; 2n_1,...,2n_{2k+1}) B_{2n_1}...B_{2n_{2k+1}}`.
///
/// The multinomial sum equals `(2k)!` times the `t^k` coefficient of
/// `(sum_n B_{2n}/(2n)! t^n)^{2k+1}`, which is how it is accumulated.
pub fn bernoulli_convolution(k: u32) -> Rational {
    let k = k as usize;
    let base: Vec<Rational> = (0..=k)
        .map(|n| bernoulli(2 * n) * inv_factorial(2 * n as i64))
        .collect();
    let mut acc = vec![Rational::zero(); k + 1];
    acc[0] = Rational::one();
    for _ in 0..(2 * k + 1) {
        let mut next = vec![Rational::zero(); k + 1];
        for (i, a) in acc.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in base.iter().enumerate().take(k + 1 - i) {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    // 2^{2k}/(2k)! * (2k)! * [t^k]
    pow_rational(&int(4), k as i64) * &acc[k]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JgRoute {
    NestedSum,
    BinomialSeries,
    CothSum,
}

impl JgRoute {
    pub const ALL: [JgRoute; 3] = [JgRoute::NestedSum, JgRoute::BinomialSeries, JgRoute::CothSum];

    pub fn name(self) -> &'static str {
        match self {
            JgRoute::NestedSum => "nested_sum",
            JgRoute::BinomialSeries => "binomial_series",
            JgRoute::CothSum => "coth_sum",
        }
    }
}

impl std::str::FromStr for JgRoute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s || r.name().replace('_', "-") == s)
            .ok_or_else(|| Error::Usage(format!("unknown J_g route {s:?}")))
    }
}

/// The bracketed quantity `J_g` in `I_g = |B_{2g}| J_g`, by the requested route.
pub fn jg(g: u32, route: JgRoute) -> Result<Rational> {
    if g == 0 {
        return Err(Error::Domain("J_g needs g >= 1".into()));
    }
    Ok(match route {
        JgRoute::NestedSum => jg_nested_sum(g),
        JgRoute::BinomialSeries => jg_binomial_series(g)?,
        JgRoute::CothSum => jg_coth_sum(g)?,
    })
}

/// Weights `w(i) = -1/((2i+1)! 4^i)` summed over compositions of `n` into `m`
/// parts: `table[n][m]`.
fn composition_table(n_max: usize) -> Vec<Vec<Rational>> {
    let w: Vec<Rational> = (0..=n_max)
        .map(|i| -inv_factorial(2 * i as i64 + 1) / pow_rational(&int(4), i as i64))
        .collect();
    let mut table = vec![vec![Rational::zero(); n_max + 1]; n_max + 1];
    table[0][0] = Rational::one();
    for n in 1..=n_max {
        for m in 1..=n {
            let mut acc = Rational::zero();
            for i in 1..=(n - m + 1) {
                let prev = &table[n - i][m - 1];
                if !prev.is_zero() {
                    acc += &w[i] * prev;
                }
            }
            table[n][m] = acc;
        }
    }
    table
}

fn jg_nested_sum(g: u32) -> Rational {
    let gi = i64::from(g);
    let two_g = int(2 * gi);
    let table = composition_table(g as usize);
    let mut total = Rational::zero();
    for d in 0..=(gi - 2) {
        let prefactor =
            pow_rational(&two_g, 2 * d) / (from_bigint(factorial(2 * d + 1).unwrap()) * pow_rational(&int(4), d));
        let n = (gi - 1 - d) as usize;
        let mut inner = Rational::zero();
        for m in 1..=n {
            let binom = from_bigint(binomial(2 * gi - 1 + m as i64, m as i64).unwrap());
            inner += binom * &table[n][m];
        }
        total += prefactor * inner;
    }
    let standalone = pow_rational(&two_g, 2 * gi - 2)
        / (from_bigint(factorial(2 * gi - 1).unwrap()) * pow_rational(&int(4), gi - 1));
    int(gi) * (total + standalone)
}

fn jg_binomial_series(g: u32) -> Result<Rational> {
    let gi = i64::from(g);
    let hi = 2 * gi - 2;
    let s = s_function(hi);
    let num = s.scale_argument(&int(2 * gi))?;
    let den = s.powi(2 * gi)?;
    Ok(int(gi) * num.try_div(&den)?.coeff(hi)?)
}

fn jg_coth_sum(g: u32) -> Result<Rational> {
    let gi = i64::from(g);
    let n = g as usize;
    // (x/2) coth(x/2) = sum_n B_{2n} x^{2n}/(2n)!, kept in t = x^2
    let b: Vec<Rational> = (0..n).map(|k| bernoulli(2 * k) * inv_factorial(2 * k as i64)).collect();
    let b2 = poly_mul_trunc(&b, &b, n);
    // [1/x] coth(x/2)^p = 2^p [t^k] b^p for p = 2k+1
    let mut power = b;
    let mut residue = Rational::zero();
    for k in 0..gi {
        let p = 2 * k + 1;
        let r = pow_rational(&int(2), p) * &power[k as usize];
        residue += from_bigint(binomial(2 * gi, p).unwrap()) * r;
        power = poly_mul_trunc(&power, &b2, n);
    }
    Ok(residue / pow_rational(&int(4), gi))
}

fn poly_mul_trunc(a: &[Rational], b: &[Rational], len: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

/// `sinh(g z) / sinh(z/2)^{2g}` through `z^hi`.
pub fn sinh_ratio(g: u32, hi: i64) -> Result<LaurentSeries> {
    let gi = i64::from(g);
    // denominator has valuation 2g; the quotient needs hi + 2g orders of each factor
    let num = sinh(hi + 2 * gi).scale_argument(&int(gi))?;
    let den = sinh(hi + 2 * gi + 1).scale_argument(&rat(1, 2))?.powi(2 * gi)?;
    Ok(num.try_div(&den)?.truncate(hi))
}

/// `sum_{k<g} C(2g, 2k+1) coth(z/2)^{2k+1}` through `z^hi`.
pub fn coth_binomial_sum(g: u32, hi: i64) -> Result<LaurentSeries> {
    let gi = i64::from(g);
    let mut acc = LaurentSeries::zero(hi);
    let mut first = true;
    for k in 0..gi {
        let p = 2 * k + 1;
        let c = coth(hi + p - 1).scale_argument(&rat(1, 2))?;
        let term = c.powi(p)?.scale(&from_bigint(binomial(2 * gi, p).unwrap()));
        acc = if first { term.truncate(hi) } else { acc.add(&term) };
        first = false;
    }
    Ok(acc)
}

pub fn abs_bernoulli(n: usize) -> Rational {
    bernoulli(n).abs()
}
