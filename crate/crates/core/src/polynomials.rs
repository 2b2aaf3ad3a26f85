//! Sparse polynomials in the weight variables, in the monomial basis
//! ([`MultiPoly`]) or the falling-factorial basis ([`FactorialPoly`]).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{falling_factorial_at, format_complex, from_bigint, int, parse_complex, real, ComplexRational};
use crate::linalg::{solve_unique, SolveError};

/// One nonnegative exponent per variable.
pub type ExponentVector = Vec<u32>;

/// Polynomial in `arity` variables over the complex rationals. No zero
/// coefficient is ever stored, so the zero polynomial has an empty term map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiPoly {
    arity: usize,
    terms: BTreeMap<ExponentVector, ComplexRational>,
}

/// Same storage as [`MultiPoly`], but an exponent `e` on variable `m` reads
/// as the falling factorial `m(m-1)...(m-e+1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorialPoly {
    arity: usize,
    terms: BTreeMap<ExponentVector, ComplexRational>,
}

fn insert_term(terms: &mut BTreeMap<ExponentVector, ComplexRational>, exps: ExponentVector, c: ComplexRational) {
    if c.is_zero() {
        return;
    }
    match terms.entry(exps) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

macro_rules! shared_poly_api {
    ($ty:ident) => {
        impl $ty {
            pub fn zero(arity: usize) -> Self {
                Self {
                    arity,
                    terms: BTreeMap::new(),
                }
            }

            pub fn constant(arity: usize, c: ComplexRational) -> Self {
                Self::from_terms(arity, [(vec![0; arity], c)])
            }

            pub fn from_terms(
                arity: usize,
                terms: impl IntoIterator<Item = (ExponentVector, ComplexRational)>,
            ) -> Self {
                let mut map = BTreeMap::new();
                for (e, c) in terms {
                    assert_eq!(e.len(), arity, "exponent vector of wrong arity");
                    insert_term(&mut map, e, c);
                }
                Self { arity, terms: map }
            }

            pub fn arity(&self) -> usize {
                self.arity
            }

            pub fn is_zero(&self) -> bool {
                self.terms.is_empty()
            }

            pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, &ComplexRational)> {
                self.terms.iter()
            }

            pub fn len(&self) -> usize {
                self.terms.len()
            }

            pub fn is_empty(&self) -> bool {
                self.terms.is_empty()
            }

            /// The stored coefficient of `exps` (zero when absent).
            pub fn coeff(&self, exps: &[u32]) -> Result<ComplexRational> {
                if exps.len() != self.arity {
                    return Err(Error::Arity {
                        expected: self.arity,
                        got: exps.len(),
                    });
                }
                Ok(self
                    .terms
                    .get(exps)
                    .cloned()
                    .unwrap_or_else(ComplexRational::zero))
            }

            /// Total degree; `None` stands for the degree of the zero polynomial.
            pub fn total_degree(&self) -> Option<u32> {
                self.terms.keys().map(|e| e.iter().sum()).max()
            }

            pub fn degree_in(&self, var: usize) -> Option<u32> {
                self.terms.keys().map(|e| e[var]).max()
            }

            pub fn scale(&self, c: &ComplexRational) -> Self {
                Self::from_terms(self.arity, self.terms.iter().map(|(e, v)| (e.clone(), v * c)))
            }

            /// One `e1,...,en: coeff` line per term, in lexicographic exponent order.
            pub fn to_canonical_text(&self) -> String {
                self.terms
                    .iter()
                    .map(|(e, c)| format!("{}: {}", exponent_key(e), format_complex(c)))
                    .collect::<Vec<_>>()
                    .join("\n")
            }

            /// Map form used by the table schema: `"e1,...,en" -> "p/q"`.
            pub fn to_key_map(&self) -> BTreeMap<String, String> {
                self.terms
                    .iter()
                    .map(|(e, c)| (exponent_key(e), format_complex(c)))
                    .collect()
            }

            pub fn from_key_map<'a>(
                arity: usize,
                map: impl IntoIterator<Item = (&'a String, &'a String)>,
            ) -> Result<Self> {
                let mut terms = Vec::new();
                for (k, v) in map {
                    let e = parse_exponent_key(k)?;
                    if e.len() != arity {
                        return Err(Error::Arity {
                            expected: arity,
                            got: e.len(),
                        });
                    }
                    terms.push((e, parse_complex(v)?));
                }
                Ok(Self::from_terms(arity, terms))
            }
        }
    };
}

shared_poly_api!(MultiPoly);
shared_poly_api!(FactorialPoly);

pub fn exponent_key(e: &[u32]) -> String {
    e.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

pub fn parse_exponent_key(k: &str) -> Result<ExponentVector> {
    if k.trim().is_empty() {
        return Ok(Vec::new());
    }
    k.split(',')
        .map(|p| {
            p.trim()
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("bad exponent key {k:?}")))
        })
        .collect()
}

impl MultiPoly {
    /// The polynomial `v_var`.
    pub fn variable(arity: usize, var: usize) -> Self {
        let mut e = vec![0; arity];
        e[var] = 1;
        Self::from_terms(arity, [(e, real(int(1)))])
    }

    /// `c0 + sum_j c_j v_j`.
    pub fn affine(constant: i64, coeffs: &[i64]) -> Self {
        let arity = coeffs.len();
        let mut p = Self::constant(arity, real(int(constant)));
        for (j, &c) in coeffs.iter().enumerate() {
            p = &p + &Self::variable(arity, j).scale(&real(int(c)));
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.arity, real(int(1)));
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, point: &[ComplexRational]) -> Result<ComplexRational> {
        if point.len() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                got: point.len(),
            });
        }
        let mut acc = ComplexRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &k) in point.iter().zip(e) {
                for _ in 0..k {
                    t *= x;
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn eval_int(&self, point: &[i64]) -> Result<ComplexRational> {
        let p: Vec<_> = point.iter().map(|&v| real(int(v))).collect();
        self.eval(&p)
    }

    /// Substitutes every variable `v_j` by `images[j]` (all of a common arity).
    pub fn compose(&self, images: &[MultiPoly], new_arity: usize) -> Result<Self> {
        if images.len() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                got: images.len(),
            });
        }
        if let Some(bad) = images.iter().find(|p| p.arity != new_arity) {
            return Err(Error::Arity {
                expected: new_arity,
                got: bad.arity,
            });
        }
        let mut out = Self::zero(new_arity);
        let mut powers: Vec<Vec<MultiPoly>> = images
            .iter()
            .map(|p| vec![Self::constant(new_arity, real(int(1))), p.clone()])
            .collect();
        for (e, c) in &self.terms {
            let mut t = Self::constant(new_arity, c.clone());
            for (j, &k) in e.iter().enumerate() {
                while powers[j].len() <= k as usize {
                    let next = powers[j].last().unwrap() * &images[j];
                    powers[j].push(next);
                }
                t = &t * &powers[j][k as usize];
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Embeds into a larger variable set: old variable `j` becomes `positions[j]`.
    pub fn embed(&self, new_arity: usize, positions: &[usize]) -> Self {
        assert_eq!(positions.len(), self.arity);
        Self::from_terms(
            new_arity,
            self.terms.iter().map(|(e, c)| {
                let mut ne = vec![0; new_arity];
                for (j, &k) in e.iter().enumerate() {
                    ne[positions[j]] += k;
                }
                (ne, c.clone())
            }),
        )
    }

    /// Homogeneous part of total degree `k`.
    pub fn homogeneous_part(&self, k: u32) -> Self {
        Self::from_terms(
            self.arity,
            self.terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() == k)
                .map(|(e, c)| (e.clone(), c.clone())),
        )
    }

    pub fn to_factorial_basis(&self) -> FactorialPoly {
        let mut out = BTreeMap::new();
        for (e, c) in &self.terms {
            let rows: Vec<Vec<BigInt>> = e.iter().map(|&k| stirling_second_row(k)).collect();
            expand_tensor(&rows, c, &mut out);
        }
        FactorialPoly {
            arity: self.arity,
            terms: out,
        }
    }
}

impl FactorialPoly {
    pub fn to_monomial_basis(&self) -> MultiPoly {
        let mut out = BTreeMap::new();
        for (e, c) in &self.terms {
            let rows: Vec<Vec<BigInt>> = e.iter().map(|&k| stirling_first_row(k)).collect();
            expand_tensor(&rows, c, &mut out);
        }
        MultiPoly {
            arity: self.arity,
            terms: out,
        }
    }

    pub fn eval(&self, point: &[ComplexRational]) -> Result<ComplexRational> {
        if point.len() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                got: point.len(),
            });
        }
        let mut acc = ComplexRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &k) in point.iter().zip(e) {
                t *= falling_factorial_at(x, k);
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn eval_int(&self, point: &[i64]) -> Result<ComplexRational> {
        let p: Vec<_> = point.iter().map(|&v| real(int(v))).collect();
        self.eval(&p)
    }
}

/// Expands `c * prod_j (sum_k rows[j][k] x_j^k)` into `out`.
fn expand_tensor(rows: &[Vec<BigInt>], c: &ComplexRational, out: &mut BTreeMap<ExponentVector, ComplexRational>) {
    let mut partial: Vec<(ExponentVector, ComplexRational)> = vec![(Vec::new(), c.clone())];
    for row in rows {
        let mut next = Vec::new();
        for (e, v) in &partial {
            for (k, s) in row.iter().enumerate() {
                if s.is_zero() {
                    continue;
                }
                let mut ne = e.clone();
                ne.push(k as u32);
                next.push((ne, v * real(from_bigint(s.clone()))));
            }
        }
        partial = next;
    }
    for (e, v) in partial {
        insert_term(out, e, v);
    }
}

static STIRLING_FIRST: Mutex<Vec<Vec<BigInt>>> = Mutex::new(Vec::new());
static STIRLING_SECOND: Mutex<Vec<Vec<BigInt>>> = Mutex::new(Vec::new());

/// Signed Stirling numbers of the first kind `s(n, k)`, k = 0..=n:
/// `x^{n falling} = sum_k s(n,k) x^k`.
pub fn stirling_first_row(n: u32) -> Vec<BigInt> {
    let mut table = STIRLING_FIRST.lock().unwrap_or_else(|e| e.into_inner());
    if table.is_empty() {
        table.push(vec![BigInt::one()]);
    }
    while table.len() <= n as usize {
        let m = table.len();
        let prev = &table[m - 1];
        let row: Vec<BigInt> = (0..=m)
            .map(|k| {
                let shifted = if k >= 1 { prev[k - 1].clone() } else { BigInt::zero() };
                let same = prev.get(k).cloned().unwrap_or_default();
                shifted - BigInt::from(m - 1) * same
            })
            .collect();
        table.push(row);
    }
    table[n as usize].clone()
}

/// Stirling numbers of the second kind `S(n, k)`, k = 0..=n:
/// `x^n = sum_k S(n,k) x^{k falling}`.
pub fn stirling_second_row(n: u32) -> Vec<BigInt> {
    let mut table = STIRLING_SECOND.lock().unwrap_or_else(|e| e.into_inner());
    if table.is_empty() {
        table.push(vec![BigInt::one()]);
    }
    while table.len() <= n as usize {
        let m = table.len();
        let prev = &table[m - 1];
        let row: Vec<BigInt> = (0..=m)
            .map(|k| {
                let shifted = if k >= 1 { prev[k - 1].clone() } else { BigInt::zero() };
                let same = prev.get(k).cloned().unwrap_or_default();
                shifted + BigInt::from(k) * same
            })
            .collect();
        table.push(row);
    }
    table[n as usize].clone()
}

/// Fits the unique polynomial of per-variable degree at most `degree_cap`
/// through `points`. Errors if the data admit no such polynomial, or
/// if they do not determine it.
pub fn interpolate(points: &[(Vec<i64>, ComplexRational)], degree_cap: u32) -> Result<MultiPoly> {
    let Some((first, _)) = points.first() else {
        return Err(Error::Interpolation("no data points".into()));
    };
    let arity = first.len();
    if let Some((p, _)) = points.iter().find(|(p, _)| p.len() != arity) {
        return Err(Error::Arity {
            expected: arity,
            got: p.len(),
        });
    }
    // columns are falling-factorial basis elements; the matrix is integral and sparse on grids
    let mut basis: Vec<ExponentVector> = vec![Vec::new()];
    for _ in 0..arity {
        basis = basis
            .into_iter()
            .flat_map(|e| {
                (0..=degree_cap).map(move |k| {
                    let mut ne = e.clone();
                    ne.push(k);
                    ne
                })
            })
            .collect();
    }
    let rows: Vec<Vec<ComplexRational>> = points
        .iter()
        .map(|(p, _)| {
            basis
                .iter()
                .map(|e| {
                    let v = p.iter().zip(e).fold(BigInt::one(), |acc, (&x, &k)| {
                        acc * crate::exactnum::falling_factorial(x, k)
                    });
                    real(from_bigint(v))
                })
                .collect()
        })
        .collect();
    let rhs: Vec<_> = points.iter().map(|(_, v)| v.clone()).collect();
    let sol = solve_unique(rows, rhs, basis.len()).map_err(|e| match e {
        SolveError::Inconsistent { row } => Error::Interpolation(format!(
            "no polynomial of per-variable degree <= {degree_cap} fits; first conflicting point {:?}",
            points[row].0
        )),
        SolveError::Underdetermined { rank, unknowns } => Error::Interpolation(format!(
            "grid too small for degree cap {degree_cap}: rank {rank} < {unknowns} unknowns"
        )),
    })?;
    Ok(FactorialPoly::from_terms(arity, basis.into_iter().zip(sol)).to_monomial_basis())
}

impl Add for &MultiPoly {
    type Output = MultiPoly;

    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.arity, rhs.arity, "arity mismatch in addition");
        let mut terms = self.terms.clone();
        for (e, c) in &rhs.terms {
            insert_term(&mut terms, e.clone(), c.clone());
        }
        MultiPoly {
            arity: self.arity,
            terms,
        }
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;

    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self + &(-rhs)
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;

    fn neg(self) -> MultiPoly {
        MultiPoly {
            arity: self.arity,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;

    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.arity, rhs.arity, "arity mismatch in multiplication");
        let mut terms = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                insert_term(&mut terms, e, ca * cb);
            }
        }
        MultiPoly {
            arity: self.arity,
            terms,
        }
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_human(f, &self.terms, "^")
    }
}

impl fmt::Display for FactorialPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_human(f, &self.terms, "^_")
    }
}

fn write_human(
    f: &mut fmt::Formatter<'_>,
    terms: &BTreeMap<ExponentVector, ComplexRational>,
    pow: &str,
) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    for (idx, (e, c)) in terms.iter().enumerate() {
        if idx > 0 {
            write!(f, " + ")?;
        }
        write!(f, "({})", format_complex(c))?;
        for (j, &k) in e.iter().enumerate() {
            if k > 0 {
                write!(f, "*v{}{pow}{k}", j + 1)?;
            }
        }
    }
    Ok(())
}
