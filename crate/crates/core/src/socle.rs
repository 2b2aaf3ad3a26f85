//! Intersection numbers against `λ_g λ_{g-1}` on two-pointed curves.
//!
//! The engine is Faber's closed formula with κ insertions. [`ig_socle`] strings
//! it together with the expansion of `exp(-κ_1)` to evaluate
//! `2^{1-g} ∫ λ_g λ_{g-1} (2g)^2 ψ_1 exp(-κ_1 + (2g)^2 ψ_1)`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{bernoulli, double_factorial, factorial, from_bigint, int, Rational};

/// A multiset of positive integers, stored sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct KappaPartition(Vec<u32>);

impl KappaPartition {
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::Domain("κ indices must be positive".into()));
        }
        parts.sort_unstable();
        Ok(Self(parts))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Parses `i1,i2,...`; the empty string is the empty partition.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let parts = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad κ index {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parts)
    }
}

impl fmt::Display for KappaPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// `∫ λ_g λ_{g-1} ψ_0^0 ψ_1^{d+1} κ_{i_1,...,i_m}` over two-pointed genus-g curves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocleSpec {
    pub genus: u32,
    pub d: u32,
    pub kappa: KappaPartition,
}

impl SocleSpec {
    pub fn new(genus: u32, d: u32, kappa: KappaPartition) -> Result<Self> {
        if genus == 0 {
            return Err(Error::Domain("socle integrals need g >= 1".into()));
        }
        Ok(Self { genus, d, kappa })
    }

    /// `(2g-1) + (d+1) + |κ| = 3g-1`.
    pub fn is_dimensional(&self) -> bool {
        self.d + 1 + self.kappa.weight() == self.genus
    }
}

fn fact(n: i64) -> Rational {
    from_bigint(factorial(n).expect("nonnegative argument"))
}

fn dfact(n: i64) -> Rational {
    from_bigint(double_factorial(n).expect("argument >= -1"))
}

/// `c_g = |B_{2g}| / (2^{2g-1} (2g-1)!! 2g)`.
pub fn cg(g: u32) -> Result<Rational> {
    if g == 0 {
        return Err(Error::Domain("c_g needs g >= 1".into()));
    }
    let g = i64::from(g);
    let b = bernoulli(2 * g as usize).abs();
    Ok(b / (num_traits::pow(int(2), (2 * g - 1) as usize) * dfact(2 * g - 1) * int(2 * g)))
}

/// Faber's formula with κ insertions; zero off the dimension.
pub fn faber_two_point_kappa(spec: &SocleSpec) -> Rational {
    if !spec.is_dimensional() {
        return Rational::zero();
    }
    let g = i64::from(spec.genus);
    let d = i64::from(spec.d);
    let m = spec.kappa.len() as i64;
    let mut den = fact(2 * g - 1) * dfact(2 * d + 1);
    for &i in spec.kappa.parts() {
        den *= dfact(2 * i64::from(i) + 1);
    }
    fact(2 * g - 1 + m) * dfact(2 * g - 1) / den * cg(spec.genus).expect("g >= 1")
}

/// Partitions of `n` as sorted multisets, in lexicographic order.
pub fn partitions(n: u32) -> Vec<KappaPartition> {
    fn rec(remaining: u32, min: u32, cur: &mut Vec<u32>, out: &mut Vec<KappaPartition>) {
        if remaining == 0 {
            out.push(KappaPartition(cur.clone()));
            return;
        }
        for p in min..=remaining {
            cur.push(p);
            rec(remaining - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 1, &mut Vec::new(), &mut out);
    out
}

/// The `t^n` coefficient of `exp(-κ_1 t)` written in the classes `κ_{i_1,...,i_m}`.
///
/// Each multiset collects `(-1)^m / (∏ mult! ∏ i_j!)`.
pub fn kappa1_power_expansion(n: u32) -> Vec<(KappaPartition, Rational)> {
    partitions(n)
        .into_iter()
        .map(|p| {
            let mut mult: BTreeMap<u32, i64> = BTreeMap::new();
            for &i in p.parts() {
                *mult.entry(i).or_default() += 1;
            }
            let mut den = Rational::one();
            for (&i, &k) in &mult {
                den *= fact(k) * num_traits::pow(fact(i64::from(i)), k as usize);
            }
            let sign = if p.len() % 2 == 0 { int(1) } else { int(-1) };
            (p, sign / den)
        })
        .collect()
}

/// `2^{1-g} ∫ λ_g λ_{g-1} (2g)^2 ψ_1 exp(-κ_1 + (2g)^2 ψ_1)`, expanded by degree.
pub fn ig_socle(g: u32) -> Result<Rational> {
    if g == 0 {
        return Err(Error::Domain("I_g needs g >= 1".into()));
    }
    let two_g = int(2 * i64::from(g));
    let mut total = Rational::zero();
    for d in 0..g {
        // ψ_1^{d+1} carries (2g)^{2d+2}/d!; the κ part fills the remaining degree
        let psi = num_traits::pow(two_g.clone(), 2 * d as usize + 2) / fact(i64::from(d));
        for (kappa, coef) in kappa1_power_expansion(g - 1 - d) {
            let spec = SocleSpec::new(g, d, kappa)?;
            total += &psi * coef * faber_two_point_kappa(&spec);
        }
    }
    Ok(total / num_traits::pow(int(2), g as usize - 1))
}

/// `∫ ψ_1^{a_1} ... ψ_k^{a_k}` over genus-0 curves with `k` points.
pub fn genus0_psi_integral(exponents: &[u32]) -> Result<Rational> {
    let k = exponents.len() as i64;
    if k < 3 {
        return Err(Error::Domain(format!(
            "genus-0 integrals need at least 3 points, got {k}"
        )));
    }
    let total: i64 = exponents.iter().map(|&a| i64::from(a)).sum();
    if total != k - 3 {
        return Ok(Rational::zero());
    }
    let den = exponents
        .iter()
        .fold(Rational::one(), |acc, &a| acc * fact(i64::from(a)));
    Ok(fact(k - 3) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;
    use crate::series::LaurentSeries;
    use proptest::prelude::*;

    fn kp(parts: &[u32]) -> KappaPartition {
        KappaPartition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn cg_examples() {
        assert_eq!(cg(1).unwrap(), rat(1, 24));
        assert_eq!(cg(2).unwrap(), rat(1, 2880));
        assert_eq!(cg(3).unwrap(), rat(1, 32 * 15) * rat(1, 42) / int(6));
        assert!(cg(0).is_err());
    }

    #[test]
    fn faber_examples() {
        let f = |g, d, k: &[u32]| faber_two_point_kappa(&SocleSpec::new(g, d, kp(k)).unwrap());
        assert_eq!(f(1, 0, &[]), rat(1, 24));
        assert_eq!(f(2, 0, &[1]), rat(1, 720));
        assert_eq!(f(2, 1, &[]), rat(1, 2880));
        assert_eq!(f(2, 0, &[]), int(0));
        for g in 1..=8 {
            assert_eq!(f(g, g - 1, &[]), cg(g).unwrap());
        }
    }

    #[test]
    fn kappa_expansion_examples() {
        assert_eq!(kappa1_power_expansion(0), vec![(KappaPartition::empty(), int(1))]);
        assert_eq!(kappa1_power_expansion(1), vec![(kp(&[1]), int(-1))]);
        assert_eq!(
            kappa1_power_expansion(2),
            vec![(kp(&[1, 1]), rat(1, 2)), (kp(&[2]), rat(-1, 2))]
        );
    }

    /// Sum over ordered compositions, each weighted `(-1)^m/m! / ∏ i_j!`.
    fn expansion_by_compositions(n: u32) -> BTreeMap<KappaPartition, Rational> {
        fn rec(rem: u32, cur: &mut Vec<u32>, out: &mut BTreeMap<KappaPartition, Rational>) {
            if rem == 0 {
                let m = cur.len() as i64;
                let mut c = if m % 2 == 0 { int(1) } else { int(-1) } / fact(m);
                for &i in cur.iter() {
                    c /= fact(i64::from(i));
                }
                *out.entry(KappaPartition::new(cur.clone()).unwrap())
                    .or_insert_with(Rational::zero) += c;
                return;
            }
            for first in 1..=rem {
                cur.push(first);
                rec(rem - first, cur, out);
                cur.pop();
            }
        }
        let mut out = BTreeMap::new();
        rec(n, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn kappa_expansion_against_compositions() {
        for n in 0..=7 {
            let direct: BTreeMap<_, _> = kappa1_power_expansion(n).into_iter().collect();
            assert_eq!(direct, expansion_by_compositions(n), "n={n}");
        }
    }

    #[test]
    fn kappa_expansion_generating_function() {
        // κ_{i_1..i_m} -> ∏ i_j! collapses the expansion to exp(-t/(1-t))
        let hi = 8;
        let geometric = LaurentSeries::new(1, vec![int(-1); hi as usize]);
        let e = geometric.exp().unwrap();
        for n in 0..=hi as u32 {
            let s: Rational = kappa1_power_expansion(n)
                .iter()
                .map(|(p, c)| p.parts().iter().fold(c.clone(), |a, &i| a * fact(i64::from(i))))
                .sum();
            assert_eq!(s, e.coeff(i64::from(n)).unwrap(), "n={n}");
        }
    }

    #[test]
    fn ig_examples() {
        assert_eq!(ig_socle(1).unwrap(), rat(1, 6));
        assert_eq!(ig_socle(2).unwrap(), rat(1, 30));
        assert_eq!(ig_socle(4).unwrap(), rat(1, 30));
        for g in 1..=6 {
            assert_eq!(ig_socle(g).unwrap(), bernoulli(2 * g as usize).abs());
        }
    }

    #[test]
    fn genus0_examples() {
        assert_eq!(genus0_psi_integral(&[0, 0, 0]).unwrap(), int(1));
        assert_eq!(genus0_psi_integral(&[1, 0, 0, 0]).unwrap(), int(1));
        assert_eq!(genus0_psi_integral(&[1, 1, 0, 0, 0]).unwrap(), int(2));
        assert_eq!(genus0_psi_integral(&[1, 0, 0]).unwrap(), int(0));
        assert!(genus0_psi_integral(&[0, 0]).is_err());
    }

    #[test]
    fn partition_parsing() {
        assert_eq!(KappaPartition::parse("2,1").unwrap(), kp(&[1, 2]));
        assert_eq!(KappaPartition::parse("").unwrap(), KappaPartition::empty());
        assert!(KappaPartition::parse("0").is_err());
        assert!(KappaPartition::parse("x").is_err());
        assert_eq!(kp(&[3, 1]).to_string(), "{1,3}");
    }

    proptest! {
        #[test]
        fn genus0_symmetric(mut exps in prop::collection::vec(0u32..4, 3..8), seed in any::<u64>()) {
            let before = genus0_psi_integral(&exps).unwrap();
            let len = exps.len();
            exps.rotate_left((seed as usize) % len);
            exps.swap(0, (seed as usize / 7) % len);
            prop_assert_eq!(before, genus0_psi_integral(&exps).unwrap());
        }
    }
}
