//! Exact scalars and the combinatorial primitives everything else is built on.
//!
//! Rationals are `num-rational` big rationals; the complex extension is
//! `num-complex` over them, which is enough to house the unit `i` that the
//! generating series carry around.

use std::sync::Mutex;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;
pub type ComplexRational = Complex<BigRational>;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn from_bigint(n: BigInt) -> Rational {
    BigRational::from_integer(n)
}

pub fn real(r: Rational) -> ComplexRational {
    Complex::new(r, Rational::zero())
}

pub fn imag_unit() -> ComplexRational {
    Complex::new(Rational::zero(), Rational::one())
}

/// `i^k` for any integer `k`.
pub fn i_pow(k: i64) -> ComplexRational {
    match k.rem_euclid(4) {
        0 => real(int(1)),
        1 => imag_unit(),
        2 => real(int(-1)),
        _ => -imag_unit(),
    }
}

/// Canonical `p/q` rendering with `q > 0`; integers keep the `/1`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if !den.is_positive() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

/// Renders `re`, `im*i`, or `re+im*i` (sign folded into the joint).
pub fn format_complex(c: &ComplexRational) -> String {
    if c.im.is_zero() {
        return format_rational(&c.re);
    }
    if c.re.is_zero() {
        return format!("{}*i", format_rational(&c.im));
    }
    if c.im.is_negative() {
        format!("{}-{}*i", format_rational(&c.re), format_rational(&-c.im.clone()))
    } else {
        format!("{}+{}*i", format_rational(&c.re), format_rational(&c.im))
    }
}

pub fn parse_complex(s: &str) -> Result<ComplexRational> {
    let s = s.trim();
    let Some(body) = s.strip_suffix("*i") else {
        return Ok(real(parse_rational(s)?));
    };
    // the joint is the last sign that is not the leading one
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(_, ch)| ch == '+' || ch == '-')
        .map(|(idx, _)| idx)
        .last();
    match split {
        None => Ok(Complex::new(Rational::zero(), parse_rational(body)?)),
        Some(idx) => {
            let re = parse_rational(&body[..idx])?;
            let im_str = &body[idx..];
            let im = parse_rational(im_str.strip_prefix('+').unwrap_or(im_str))?;
            Ok(Complex::new(re, im))
        }
    }
}

static BERNOULLI: Mutex<Vec<Rational>> = Mutex::new(Vec::new());

/// `B_n` with `B_1 = -1/2`; odd `n > 1` gives zero.
///
/// Values come from the recurrence `sum_{j=0}^{n} C(n+1, j) B_j = 0` and are
/// cached append-only behind a lock.
pub fn bernoulli(n: usize) -> Rational {
    let mut cache = BERNOULLI.lock().unwrap_or_else(|e| e.into_inner());
    if cache.is_empty() {
        cache.push(Rational::one());
    }
    while cache.len() <= n {
        let m = cache.len();
        let mut acc = Rational::zero();
        let mut binom = BigInt::one();
        for (j, b) in cache.iter().enumerate() {
            // binom = C(m+1, j)
            if !b.is_zero() {
                acc += b * from_bigint(binom.clone());
            }
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        cache.push(-acc / int(m as i64 + 1));
    }
    cache[n].clone()
}

pub fn factorial(n: i64) -> Result<BigInt> {
    if n < 0 {
        return Err(Error::Domain(format!("factorial of negative integer {n}")));
    }
    Ok((1..=n).fold(BigInt::one(), |acc, k| acc * k))
}

/// `n!!`, with `(-1)!! = 0!! = 1`.
pub fn double_factorial(n: i64) -> Result<BigInt> {
    if n < -1 {
        return Err(Error::Domain(format!("double factorial of {n}")));
    }
    let mut acc = BigInt::one();
    let mut k = n;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    Ok(acc)
}

/// `m (m-1) ... (m-s+1)` for any integer `m`.
pub fn falling_factorial(m: i64, s: u32) -> BigInt {
    (0..i64::from(s)).fold(BigInt::one(), |acc, j| acc * (m - j))
}

/// Same as [`falling_factorial`] but over an exact rational argument.
pub fn falling_factorial_at(m: &ComplexRational, s: u32) -> ComplexRational {
    let mut acc = real(int(1));
    for j in 0..s {
        acc *= m - real(int(i64::from(j)));
    }
    acc
}

/// `C(n, k)` for any integer `n` and `k >= 0` (generalized via the falling factorial).
pub fn binomial(n: i64, k: i64) -> Result<BigInt> {
    if k < 0 {
        return Err(Error::Domain(format!("binomial with negative lower index {k}")));
    }
    let num = falling_factorial(n, k as u32);
    let (q, r) = num.div_rem(&factorial(k)?);
    debug_assert!(r.is_zero());
    Ok(q)
}

/// `n! / (k_1! ... k_r!)`; requires `sum k_i = n`.
pub fn multinomial(n: i64, parts: &[i64]) -> Result<BigInt> {
    if parts.iter().any(|&k| k < 0) || parts.iter().sum::<i64>() != n {
        return Err(Error::Domain(format!(
            "multinomial({n}; {parts:?}) needs nonnegative parts summing to n"
        )));
    }
    let mut acc = factorial(n)?;
    for &k in parts {
        acc /= factorial(k)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinatoricsKind {
    Binomial,
    Multinomial,
    Factorial,
    DoubleFactorial,
    FallingFactorial,
}

impl std::str::FromStr for CombinatoricsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "binomial" => Self::Binomial,
            "multinomial" => Self::Multinomial,
            "factorial" => Self::Factorial,
            "double_factorial" | "double-factorial" => Self::DoubleFactorial,
            "falling_factorial" | "falling-factorial" => Self::FallingFactorial,
            other => return Err(Error::Usage(format!("unknown combinatorics kind {other:?}"))),
        })
    }
}

/// Uniform entry point used by the CLI. Multinomial takes `n` followed by the parts.
pub fn combinatorics(kind: CombinatoricsKind, args: &[i64]) -> Result<Rational> {
    let arity = |want: usize| {
        if args.len() == want {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{kind:?} expects {want} arguments, got {}",
                args.len()
            )))
        }
    };
    let value = match kind {
        CombinatoricsKind::Binomial => {
            arity(2)?;
            binomial(args[0], args[1])?
        }
        CombinatoricsKind::Multinomial => {
            let (&n, parts) = args
                .split_first()
                .ok_or_else(|| Error::Domain("multinomial needs n".into()))?;
            multinomial(n, parts)?
        }
        CombinatoricsKind::Factorial => {
            arity(1)?;
            factorial(args[0])?
        }
        CombinatoricsKind::DoubleFactorial => {
            arity(1)?;
            double_factorial(args[0])?
        }
        CombinatoricsKind::FallingFactorial => {
            arity(2)?;
            if args[1] < 0 {
                return Err(Error::Domain("falling factorial order must be >= 0".into()));
            }
            falling_factorial(args[0], args[1] as u32)
        }
    };
    Ok(from_bigint(value))
}
