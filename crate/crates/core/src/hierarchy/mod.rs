//! Differential polynomials in the jet variables `u_0, u_1, ...` with
//! coefficients in `C[ε, ℏ, μ]` and integer powers of `1/x`, local
//! functionals, and the Hamiltonian densities built from integral tables.
//!
//! Grading: `deg u_s = s`, `deg ε = -1`, `deg ℏ = -2`, `deg (1/x) = 1`, `deg μ = 0`.

mod build;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{format_complex, int, real, ComplexRational};

pub use build::{
    build_g1_dr, build_g1_strata, build_gd, build_hd, cg_constants, q_image_of_u_monomial, shift_substitution,
    verify_g_relation, verify_main_identity, verify_prop13, GKind, HamiltonianKind, IdentityReport, Mismatch, QTerm,
    ShiftConstants,
};

/// `ε^eps ℏ^hbar μ^mu x^{-xinv} ∏ u_{jets[i]}`, jets sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    pub jets: Vec<u32>,
    pub eps: u32,
    pub hbar: u32,
    pub mu: u32,
    pub xinv: i32,
}

/// Where a Hamiltonian monomial comes from in the table-driven sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub genus: u32,
    pub n: usize,
    pub s: Vec<u32>,
    pub lambda: (u32, u32),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "g={} n={} s={:?} lambda=({},{})",
            self.genus, self.n, self.s, self.lambda.0, self.lambda.1
        )
    }
}

impl Monomial {
    pub fn new(mut jets: Vec<u32>) -> Self {
        jets.sort_unstable();
        Self {
            jets,
            ..Self::default()
        }
    }

    pub fn eps(mut self, k: u32) -> Self {
        self.eps = k;
        self
    }

    pub fn hbar(mut self, k: u32) -> Self {
        self.hbar = k;
        self
    }

    pub fn mu(mut self, k: u32) -> Self {
        self.mu = k;
        self
    }

    pub fn xinv(mut self, k: i32) -> Self {
        self.xinv = k;
        self
    }

    pub fn grade(&self) -> i64 {
        self.jets.iter().map(|&s| i64::from(s)).sum::<i64>() - i64::from(self.eps) - 2 * i64::from(self.hbar)
            + i64::from(self.xinv)
    }

    /// `eps/2 + hbar`; the genus of the cell a Hamiltonian monomial comes from.
    pub fn genus_weight(&self) -> u32 {
        self.eps / 2 + self.hbar
    }

    pub fn provenance(&self) -> Provenance {
        let l1 = self.eps / 2;
        Provenance {
            genus: l1 + self.hbar,
            n: self.jets.len(),
            s: self.jets.clone(),
            lambda: (l1, self.mu),
        }
    }

    fn ring_part(&self) -> Self {
        Self {
            jets: Vec::new(),
            ..self.clone()
        }
    }

    fn times(&self, other: &Self) -> Self {
        let mut jets = self.jets.clone();
        jets.extend_from_slice(&other.jets);
        jets.sort_unstable();
        Self {
            jets,
            eps: self.eps + other.eps,
            hbar: self.hbar + other.hbar,
            mu: self.mu + other.mu,
            xinv: self.xinv + other.xinv,
        }
    }

    fn multiplicity(&self, s: u32) -> usize {
        self.jets.iter().filter(|&&j| j == s).count()
    }

    fn without_one(&self, s: u32) -> Self {
        let mut out = self.clone();
        let pos = out.jets.iter().position(|&j| j == s).expect("jet present");
        out.jets.remove(pos);
        out
    }

    fn with_jet(&self, s: u32) -> Self {
        let mut out = self.clone();
        let pos = out.jets.partition_point(|&j| j <= s);
        out.jets.insert(pos, s);
        out
    }

    /// Basis monomial of the local-functional normal form.
    fn is_normal(&self) -> bool {
        match self.jets.last() {
            None => false,
            Some(&0) => true,
            Some(&k) => self.multiplicity(k) >= 2,
        }
    }
}

fn power(f: &mut fmt::Formatter<'_>, first: &mut bool, name: &str, k: i64) -> fmt::Result {
    if k == 0 {
        return Ok(());
    }
    if !*first {
        write!(f, "*")?;
    }
    *first = false;
    if k == 1 {
        write!(f, "{name}")
    } else {
        write!(f, "{name}^{k}")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        power(f, &mut first, "eps", self.eps.into())?;
        power(f, &mut first, "hbar", self.hbar.into())?;
        power(f, &mut first, "mu", self.mu.into())?;
        power(f, &mut first, "x", -i64::from(self.xinv))?;
        let mut i = 0;
        while i < self.jets.len() {
            let s = self.jets[i];
            let p = self.multiplicity(s);
            power(f, &mut first, &format!("u_{s}"), p as i64)?;
            i += p;
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Finite sum of [`Monomial`]s; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffPoly {
    terms: BTreeMap<Monomial, ComplexRational>,
}

/// The same type; "singular" only means `1/x` may occur.
pub type SingularDiffPoly = DiffPoly;

impl DiffPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: ComplexRational) -> Self {
        Self::from_terms([(Monomial::default(), c)])
    }

    pub fn monomial(m: Monomial, c: ComplexRational) -> Self {
        Self::from_terms([(m, c)])
    }

    /// The jet variable `u_s`.
    pub fn u(s: u32) -> Self {
        Self::monomial(Monomial::new(vec![s]), real(int(1)))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, ComplexRational)>) -> Self {
        let mut out = Self::zero();
        for (m, c) in terms {
            out.add_term(m, c);
        }
        out
    }

    pub fn add_term(&mut self, m: Monomial, c: ComplexRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &ComplexRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> ComplexRational {
        self.terms.get(m).cloned().unwrap_or_else(ComplexRational::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: &ComplexRational) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, x)| (m.clone(), x * c)))
    }

    pub fn max_jet(&self) -> Option<u32> {
        self.terms.keys().filter_map(|m| m.jets.last().copied()).max()
    }

    /// No `1/x` anywhere.
    pub fn is_regular(&self) -> bool {
        self.terms.keys().all(|m| m.xinv == 0)
    }

    pub fn filter(&self, keep: impl Fn(&Monomial) -> bool) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Homogeneous piece of grade `k`; `degree_part(0)` is the `[0]` extraction.
    pub fn degree_part(&self, k: i64) -> Self {
        self.filter(|m| m.grade() == k)
    }

    pub fn truncate_genus(&self, g_max: u32) -> Self {
        self.filter(|m| m.genus_weight() <= g_max)
    }

    /// Classical limit `ℏ = 0`.
    pub fn classical_limit(&self) -> Self {
        self.filter(|m| m.hbar == 0)
    }

    /// `Coef_{ε^a ℏ^b}`.
    pub fn coef_eps_hbar(&self, a: u32, b: u32) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| m.eps == a && m.hbar == b)
                .map(|(m, c)| {
                    (
                        Monomial {
                            eps: 0,
                            hbar: 0,
                            ..m.clone()
                        },
                        c.clone(),
                    )
                }),
        )
    }

    /// Total `x`-derivative: `∂_x = sum u_{i+1} ∂/∂u_i + d/dx`.
    pub fn d_x(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut prev = None;
            for &s in &m.jets {
                if prev == Some(s) {
                    continue;
                }
                prev = Some(s);
                let p = m.multiplicity(s) as i64;
                out.add_term(m.without_one(s).with_jet(s + 1), c * real(int(p)));
            }
            if m.xinv != 0 {
                out.add_term(
                    Monomial {
                        xinv: m.xinv + 1,
                        ..m.clone()
                    },
                    c * real(int(-i64::from(m.xinv))),
                );
            }
        }
        out
    }

    pub fn d_x_pow(&self, k: u32) -> Self {
        (0..k).fold(self.clone(), |p, _| p.d_x())
    }

    /// `∂/∂u_s`.
    pub fn partial_u(&self, s: u32) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let p = m.multiplicity(s);
            if p > 0 {
                out.add_term(m.without_one(s), c * real(int(p as i64)));
            }
        }
        out
    }

    /// `sum_s (-∂_x)^s ∂f/∂u_s`.
    pub fn euler_lagrange(&self) -> Self {
        let mut out = Self::zero();
        for s in 0..=self.max_jet().unwrap_or(0) {
            let term = self.partial_u(s).d_x_pow(s);
            out = if s % 2 == 0 { &out + &term } else { &out - &term };
        }
        out
    }

    /// Rendering used by the CLI; one term per line.
    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "0\n".to_string();
        }
        self.terms
            .iter()
            .map(|(m, c)| format!("({}) * {m}\n", format_complex(c)))
            .collect()
    }
}

impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| format!("({})*{m}", format_complex(c)))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &DiffPoly {
    type Output = DiffPoly;

    fn add(self, rhs: &DiffPoly) -> DiffPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Neg for &DiffPoly {
    type Output = DiffPoly;

    fn neg(self) -> DiffPoly {
        self.scale(&-<ComplexRational as One>::one())
    }
}

impl Sub for &DiffPoly {
    type Output = DiffPoly;

    fn sub(self, rhs: &DiffPoly) -> DiffPoly {
        self + &-rhs
    }
}

impl Mul for &DiffPoly {
    type Output = DiffPoly;

    fn mul(self, rhs: &DiffPoly) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (a, x) in &self.terms {
            for (b, y) in &rhs.terms {
                out.add_term(a.times(b), x * y);
            }
        }
        out
    }
}

/// Class of a regular differential polynomial modulo `Im ∂_x` and constants,
/// stored in normal form: each monomial is a power of `u_0` or has its top
/// jet variable at least squared.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LocalFunctional {
    density: DiffPoly,
}

impl LocalFunctional {
    pub fn new(density: &DiffPoly) -> Result<Self> {
        if !density.is_regular() {
            return Err(Error::Domain("local functionals need a density without 1/x".into()));
        }
        Ok(Self {
            density: normal_form(density),
        })
    }

    pub fn density(&self) -> &DiffPoly {
        &self.density
    }

    pub fn is_zero(&self) -> bool {
        self.density.is_zero()
    }

    pub fn var_derivative(&self) -> DiffPoly {
        self.density.euler_lagrange()
    }

    pub fn coef_eps_hbar(&self, a: u32, b: u32) -> Self {
        Self {
            density: self.density.coef_eps_hbar(a, b),
        }
    }
}

impl fmt::Display for LocalFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "∫ {}", self.density)
    }
}

/// `δF/δu`.
pub fn var_derivative(f: &LocalFunctional) -> DiffPoly {
    f.var_derivative()
}

/// Integration by parts on `B u_{k-1}^p u_k` with `B` free of `u_{k-1}, u_k`:
/// `B u_{k-1}^p u_k ≡ -∂_x(B) u_{k-1}^{p+1} / (p+1)`.
fn normal_form(p: &DiffPoly) -> DiffPoly {
    let mut out = DiffPoly::zero();
    let mut stack: Vec<(Monomial, ComplexRational)> = p.terms().map(|(m, c)| (m.clone(), c.clone())).collect();
    while let Some((m, c)) = stack.pop() {
        if m.jets.is_empty() {
            continue;
        }
        if m.is_normal() {
            out.add_term(m, c);
            continue;
        }
        let k = *m.jets.last().expect("nonempty");
        let p = m.multiplicity(k - 1);
        let rest: Vec<u32> = m.jets.iter().copied().filter(|&j| j < k - 1).collect();
        let b = DiffPoly::monomial(
            Monomial {
                jets: rest,
                ..m.ring_part()
            },
            c,
        );
        let tail = DiffPoly::monomial(Monomial::new(vec![k - 1; p + 1]), real(int(-1) / int(p as i64 + 1)));
        let reduced = &b.d_x() * &tail;
        stack.extend(reduced.terms().map(|(m, c)| (m.clone(), c.clone())));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{imag_unit, rat};
    use proptest::prelude::*;

    fn u(s: u32) -> DiffPoly {
        DiffPoly::u(s)
    }

    fn c(r: crate::exactnum::Rational) -> ComplexRational {
        real(r)
    }

    #[test]
    fn d_x_examples() {
        assert_eq!(u(0).d_x(), u(1));
        let half_sq = (&u(0) * &u(0)).scale(&c(rat(1, 2)));
        assert_eq!(half_sq.d_x(), &u(0) * &u(1));
        let x2 = DiffPoly::monomial(Monomial::default().xinv(2), c(int(1)));
        assert_eq!(x2.d_x(), DiffPoly::monomial(Monomial::default().xinv(3), c(int(-2))));
        assert!(DiffPoly::constant(c(int(5))).d_x().is_zero());
    }

    #[test]
    fn grading_examples() {
        assert_eq!(Monomial::new(vec![2]).eps(2).grade(), 0);
        assert_eq!(Monomial::new(vec![2, 2]).hbar(1).grade(), 2);
        assert_eq!(Monomial::new(vec![0]).eps(2).xinv(2).grade(), 0);
        assert_eq!(Monomial::new(vec![1]).mu(4).grade(), 1);
        let p = DiffPoly::from_terms([
            (Monomial::new(vec![2]).eps(2), c(int(1))),
            (Monomial::new(vec![2, 2]).hbar(1), c(int(3))),
        ]);
        assert_eq!(p.degree_part(2).len(), 1);
        assert_eq!(p.degree_part(0).len(), 1);
        assert!(p.degree_part(1).is_zero());
    }

    #[test]
    fn var_derivative_examples() {
        let cube = LocalFunctional::new(&(&(&u(0) * &u(0)) * &u(0)).scale(&c(rat(1, 6)))).unwrap();
        assert_eq!(cube.var_derivative(), (&u(0) * &u(0)).scale(&c(rat(1, 2))));
        let f = LocalFunctional::new(&(&u(0) * &u(2))).unwrap();
        assert_eq!(f.var_derivative(), u(2).scale(&c(int(2))));
        let exact = (&(&u(0) * &u(3)) * &u(1)).d_x();
        assert!(LocalFunctional::new(&exact).unwrap().is_zero());
        assert!(exact.euler_lagrange().is_zero());
    }

    #[test]
    fn normal_form_examples() {
        // u_0 u_2 ≡ -u_1^2
        let f = LocalFunctional::new(&(&u(0) * &u(2))).unwrap();
        assert_eq!(f.density(), &(&u(1) * &u(1)).scale(&c(int(-1))));
        // u_0 u_4 ≡ u_2^2
        let g = LocalFunctional::new(&(&u(0) * &u(4))).unwrap();
        assert_eq!(g.density(), &(&u(2) * &u(2)));
        assert!(LocalFunctional::new(&u(3)).unwrap().is_zero());
        assert!(LocalFunctional::new(&DiffPoly::constant(c(int(1)))).unwrap().is_zero());
        let singular = DiffPoly::monomial(Monomial::new(vec![0]).xinv(1), c(int(1)));
        assert!(LocalFunctional::new(&singular).is_err());
        let m = Monomial::new(vec![0, 2]).eps(2).hbar(1).mu(3);
        let with_ring = LocalFunctional::new(&DiffPoly::monomial(m, imag_unit())).unwrap();
        let (only, coef) = with_ring.density().terms().next().unwrap();
        assert_eq!((only.jets.clone(), only.eps, only.hbar, only.mu), (vec![1, 1], 2, 1, 3));
        assert_eq!(coef, &-imag_unit());
    }

    #[test]
    fn display_forms() {
        let p = DiffPoly::from_terms([
            (Monomial::new(vec![0, 0]), c(rat(1, 2))),
            (Monomial::new(vec![2]).eps(2), c(rat(1, 12))),
            (
                Monomial::new(vec![2]).hbar(1).mu(1),
                ComplexRational::new(int(0), rat(-1, 12)),
            ),
        ]);
        assert_eq!(p.to_string(), "(1/2)*u_0^2 + (-1/12*i)*hbar*mu*u_2 + (1/12)*eps^2*u_2");
        assert_eq!(Monomial::default().xinv(3).to_string(), "x^-3");
        assert_eq!(Monomial::default().to_string(), "1");
    }

    pub(crate) fn arb_diffpoly() -> impl Strategy<Value = DiffPoly> {
        let mono = (prop::collection::vec(0u32..4, 0..4), 0u32..3, 0u32..2, 0u32..2);
        prop::collection::vec((mono, -5i64..6, -3i64..4), 0..6).prop_map(|terms| {
            DiffPoly::from_terms(terms.into_iter().map(|((jets, e, h, m), re, im)| {
                (
                    Monomial::new(jets).eps(e).hbar(h).mu(m),
                    ComplexRational::new(int(re), int(im)),
                )
            }))
        })
    }

    proptest! {
        #[test]
        fn exact_densities_vanish(p in arb_diffpoly()) {
            let exact = p.d_x();
            prop_assert!(exact.euler_lagrange().is_zero());
            prop_assert!(LocalFunctional::new(&exact).unwrap().is_zero());
        }

        #[test]
        fn normal_form_is_idempotent_and_stable(p in arb_diffpoly(), q in arb_diffpoly()) {
            let f = LocalFunctional::new(&p).unwrap();
            prop_assert_eq!(&LocalFunctional::new(f.density()).unwrap(), &f);
            prop_assert!(f.density().terms().all(|(m, _)| m.is_normal()));
            prop_assert_eq!(f.var_derivative(), p.euler_lagrange());
            let shifted = &p + &q.d_x();
            prop_assert_eq!(LocalFunctional::new(&shifted).unwrap(), f);
        }

        #[test]
        fn d_x_is_a_derivation(p in arb_diffpoly(), q in arb_diffpoly()) {
            prop_assert_eq!((&p * &q).d_x(), &(&p.d_x() * &q) + &(&p * &q.d_x()));
            for (m, _) in p.d_x().terms() {
                prop_assert!(p.terms().any(|(n, _)| n.grade() + 1 == m.grade()));
            }
        }
    }
}
