//! Star-graph transfer between twisted DR and strata integrals, and the
//! splitting relation for two-point twisted DR integrals.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::{lookup, poly_difference, CycleKind, IntegralRecord, IntegralTable, MissingKeys, RecordKey, WeightPattern};
use crate::error::{Error, Result};
use crate::exactnum::{factorial, from_bigint, int, rat, real, ComplexRational, Rational};
use crate::polynomials::MultiPoly;
use crate::socle::partitions;

/// Central genus and satellite genera of a star graph, with `1/∏ mult!`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarGraphTerm {
    pub central_genus: u32,
    pub satellites: Vec<u32>,
    pub symmetry: Rational,
}

impl StarGraphTerm {
    pub fn is_trivial(&self) -> bool {
        self.satellites.is_empty()
    }
}

/// All `(g_0; {g_1, ..., g_s})` with `g_0 + sum g_i = g` and `g_i > 0`.
///
/// Ordered by decreasing central genus, then by number of satellites.
pub fn star_graph_terms(g: u32) -> Vec<StarGraphTerm> {
    let mut out = Vec::new();
    for g0 in (0..=g).rev() {
        let mut parts = partitions(g - g0);
        parts.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.parts().cmp(a.parts())));
        for p in parts {
            let mut mult: BTreeMap<u32, i64> = BTreeMap::new();
            for &gi in p.parts() {
                *mult.entry(gi).or_default() += 1;
            }
            let den = mult
                .values()
                .fold(Rational::one(), |acc, &k| acc * from_bigint(factorial(k).unwrap()));
            out.push(StarGraphTerm {
                central_genus: g0,
                satellites: p.parts().to_vec(),
                symmetry: den.recip(),
            });
        }
    }
    out
}

/// Polynomial in `μ` and `ε`, keyed by `(μ-exponent, ε-exponent)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MuEpsPoly(pub BTreeMap<(u32, u32), Rational>);

impl MuEpsPoly {
    pub fn one() -> Self {
        Self(BTreeMap::from([((0, 0), Rational::one())]))
    }

    pub fn coeff(&self, mu: u32, eps: u32) -> Rational {
        self.0.get(&(mu, eps)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
        for (&(a, b), x) in &self.0 {
            for (&(c, d), y) in &other.0 {
                *out.entry((a + c, b + d)).or_insert_with(Rational::zero) += x * y;
            }
        }
        out.retain(|_, v| !v.is_zero());
        Self(out)
    }

    /// Value at `μ = ε = t`.
    pub fn diagonal(&self, t: &Rational) -> Rational {
        self.0
            .iter()
            .map(|(&(a, b), c)| c * num_traits::pow(t.clone(), (a + b) as usize))
            .sum()
    }
}

fn h_key(g: u32) -> RecordKey {
    RecordKey::new(
        CycleKind::Stratum,
        g,
        &WeightPattern::constants(&[2 * i64::from(g) - 2]),
        0,
        (g, g - 1),
    )
}

/// `h_g = ∫_{H_g(2g-2)} λ_g λ_{g-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocleConstants(BTreeMap<u32, Rational>);

impl Default for SocleConstants {
    fn default() -> Self {
        Self(BTreeMap::from([(1, rat(1, 24))]))
    }
}

impl SocleConstants {
    /// Only the bundled `h_1 = 1/24`.
    pub fn bundled() -> Self {
        Self::default()
    }

    /// Bundled values plus every one-point holomorphic stratum record of the table.
    pub fn from_table(table: &IntegralTable) -> Result<Self> {
        let mut out = Self::bundled();
        for rec in table.records() {
            if rec.key() == h_key(rec.genus) && rec.genus >= 1 {
                let c = rec.value.coeff(&[])?;
                if !c.im.is_zero() {
                    return Err(Error::InvalidTable(vec![format!("{}: h_g must be real", rec.key())]));
                }
                out.insert(rec.genus, c.re)?;
            }
        }
        Ok(out)
    }

    pub fn insert(&mut self, g: u32, h: Rational) -> Result<()> {
        match self.0.get(&g) {
            Some(old) if *old != h => Err(Error::InvalidTable(vec![format!("conflicting values for h_{g}")])),
            _ => {
                self.0.insert(g, h);
                Ok(())
            }
        }
    }

    pub fn get(&self, g: u32) -> Option<&Rational> {
        self.0.get(&g)
    }

    /// Like [`get`](Self::get), failing with the record that would supply the value.
    pub fn require(&self, g: u32) -> Result<&Rational> {
        self.0
            .get(&g)
            .ok_or_else(|| Error::TableRequired(vec![h_key(g).to_string()]))
    }
}

/// `(2g_i - 1) h_{g_i} (ε^{g_i} μ^{g_i-1} + μ^{g_i} ε^{g_i-1})`.
pub fn satellite_weight(gi: u32, constants: &SocleConstants) -> Result<MuEpsPoly> {
    if gi == 0 {
        return Err(Error::Domain("satellite genus must be positive".into()));
    }
    let c = int(2 * i64::from(gi) - 1) * constants.require(gi)?;
    Ok(MuEpsPoly(BTreeMap::from([
        ((gi - 1, gi), c.clone()),
        ((gi, gi - 1), c),
    ])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    TwistedToStratum,
    StratumToTwisted,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "twisted_to_stratum" | "twisted-to-stratum" => Ok(Self::TwistedToStratum),
            "stratum_to_twisted" | "stratum-to-twisted" => Ok(Self::StratumToTwisted),
            _ => Err(Error::Usage(format!("unknown direction {s:?}"))),
        }
    }
}

type CentralLookup<'a> = dyn FnMut(u32, &WeightPattern, (u32, u32)) -> MultiPoly + 'a;

/// `sum over star graphs (skipping the trivial one if asked) of
/// sym · [μ^{l1} ε^{l2}] (central(μ,ε) ∏ weights)`.
fn star_sum(
    genus: u32,
    pattern: &WeightPattern,
    (l1, l2): (u32, u32),
    constants: &SocleConstants,
    skip_trivial: bool,
    central: &mut CentralLookup,
) -> Result<MultiPoly> {
    let mut total = MultiPoly::zero(pattern.arity());
    for term in star_graph_terms(genus) {
        if skip_trivial && term.is_trivial() {
            continue;
        }
        let mut w = MuEpsPoly::one();
        for &gi in &term.satellites {
            w = w.mul(&satellite_weight(gi, constants)?);
        }
        let shifted: Vec<i64> = term.satellites.iter().map(|&gi| -2 * i64::from(gi)).collect();
        let cpat = pattern.with_appended(&shifted);
        for (&(a, b), c) in &w.0 {
            if a > l1 || b > l2 {
                continue;
            }
            let value = central(term.central_genus, &cpat, (l1 - a, l2 - b));
            if !value.is_zero() {
                total = &total + &value.scale(&real(c * &term.symmetry));
            }
        }
    }
    Ok(total)
}

fn require_chamber(pattern: &WeightPattern) -> Result<()> {
    if pattern.has_negative_constant() {
        Ok(())
    } else {
        Err(Error::OutsideChamber(format!(
            "pattern {pattern} has no negative constant weight"
        )))
    }
}

/// Stratum value from the table, or else derived from twisted DR records.
fn stratum_value(
    genus: u32,
    pattern: &WeightPattern,
    psi: u32,
    lambda: (u32, u32),
    table: &IntegralTable,
    constants: &SocleConstants,
    missing: &mut MissingKeys,
) -> Result<MultiPoly> {
    let key = RecordKey::new(CycleKind::Stratum, genus, pattern, psi, lambda);
    if let Ok(v) = lookup(table, &key) {
        return Ok(v);
    }
    if !pattern.has_negative_constant() {
        missing.push(key);
        return Ok(MultiPoly::zero(pattern.arity()));
    }
    stratum_from_twisted(genus, pattern, psi, lambda, table, constants, missing)
}

fn stratum_from_twisted(
    genus: u32,
    pattern: &WeightPattern,
    psi: u32,
    lambda: (u32, u32),
    table: &IntegralTable,
    constants: &SocleConstants,
    missing: &mut MissingKeys,
) -> Result<MultiPoly> {
    let twisted = missing.resolve(table, &RecordKey::new(CycleKind::Dr1, genus, pattern, psi, lambda));
    let mut inner = MissingKeys::default();
    let mut failure = None;
    let correction = star_sum(
        genus,
        pattern,
        lambda,
        constants,
        true,
        &mut |g0, p, l| match stratum_value(g0, p, psi, l, table, constants, &mut inner) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                MultiPoly::zero(p.arity())
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    missing.extend(inner);
    Ok(&twisted - &correction)
}

/// Converts one integrand between the twisted DR cycle and the stratum via
/// the star-graph formula, returning a record of the target kind.
pub fn conja_transfer(
    genus: u32,
    pattern: &WeightPattern,
    psi: u32,
    lambda: (u32, u32),
    direction: Direction,
    table: &IntegralTable,
    constants: &SocleConstants,
) -> Result<IntegralRecord> {
    require_chamber(pattern)?;
    let mut missing = MissingKeys::default();
    let (kind, value) = match direction {
        Direction::StratumToTwisted => {
            let v = star_sum(genus, pattern, lambda, constants, false, &mut |g0, p, l| {
                missing.resolve(table, &RecordKey::new(CycleKind::Stratum, g0, p, psi, l))
            })?;
            (CycleKind::Dr1, v)
        }
        Direction::TwistedToStratum => (
            CycleKind::Stratum,
            stratum_from_twisted(genus, pattern, psi, lambda, table, constants, &mut missing)?,
        ),
    };
    let record = IntegralRecord::new(kind, genus, pattern.clone(), psi, lambda, value)?;
    missing.into_result(record)
}

/// Applies [`conja_transfer`] to every source-kind record in the chamber and
/// merges the results into a copy of the table.
pub fn conja_table(table: &IntegralTable, direction: Direction, constants: &SocleConstants) -> Result<IntegralTable> {
    let source = match direction {
        Direction::StratumToTwisted => CycleKind::Stratum,
        Direction::TwistedToStratum => CycleKind::Dr1,
    };
    let mut derived = IntegralTable::new(String::new());
    for rec in table
        .records()
        .filter(|r| r.kind == source && r.pattern.has_negative_constant())
    {
        derived.insert(conja_transfer(
            rec.genus,
            &rec.pattern,
            rec.psi_exponent,
            rec.lambda,
            direction,
            table,
            constants,
        )?)?;
    }
    table.merged(&derived)
}

/// `I_g = -2g · Coef_a`, for a two-point twisted DR polynomial in `a`.
pub fn ig_from_twisted_linear(g: u32, poly: &MultiPoly) -> Result<Rational> {
    if poly.arity() != 1 {
        return Err(Error::Arity {
            expected: 1,
            got: poly.arity(),
        });
    }
    let c = poly.coeff(&[1])?;
    if !c.im.is_zero() {
        return Err(Error::Domain("linear coefficient is not real".into()));
    }
    Ok(int(-2 * i64::from(g)) * c.re)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CssReport {
    pub genus: u32,
    /// `a · ∫_{DR¹(a-1, 2g-a, -1)} ψ_0 λ_g λ_{g-1}`.
    pub lhs: MultiPoly,
    /// `2g ∫_{DR¹(-1, 2g-1)} λ_g λ_{g-1} - (2g-a) ∫_{DR¹(a-1, 2g-1-a)} λ_g λ_{g-1}`.
    pub rhs: MultiPoly,
    /// `(exponent of a, lhs coefficient, rhs coefficient)` wherever they differ.
    pub discrepancies: Vec<(Vec<u32>, ComplexRational, ComplexRational)>,
}

impl CssReport {
    pub fn passed(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// Keys of the three twisted DR families in the splitting relation.
pub fn css_keys(g: u32) -> [RecordKey; 3] {
    let tg = 2 * i64::from(g);
    let lam = (g, g - 1);
    let a = WeightPattern::new(1, vec![vec![-1, 1], vec![tg, -1], vec![-1, 0]], tg - 2).expect("sum 2g-2");
    let b = WeightPattern::constants(&[-1, tg - 1]);
    let c = WeightPattern::new(1, vec![vec![-1, 1], vec![tg - 1, -1]], tg - 2).expect("sum 2g-2");
    [
        RecordKey::new(CycleKind::Dr1, g, &a, 1, lam),
        RecordKey::new(CycleKind::Dr1, g, &b, 0, lam),
        RecordKey::new(CycleKind::Dr1, g, &c, 0, lam),
    ]
}

/// Checks the splitting relation as an identity of polynomials in `a`.
pub fn css_split_check(g: u32, table: &IntegralTable) -> Result<CssReport> {
    if g == 0 {
        return Err(Error::Domain("the splitting relation needs g >= 1".into()));
    }
    let [ka, kb, kc] = css_keys(g);
    let mut missing = MissingKeys::default();
    let pa = missing.resolve(table, &ka);
    let pb = missing.resolve(table, &kb);
    let pc = missing.resolve(table, &kc);
    missing.into_result(())?;
    let a = MultiPoly::variable(1, 0);
    let tg = 2 * i64::from(g);
    let lhs = &a * &pa;
    let rhs = &pb.embed(1, &[]).scale(&real(int(tg))) - &(&MultiPoly::affine(tg, &[-1]) * &pc);
    let discrepancies = poly_difference(&lhs, &rhs);
    Ok(CssReport {
        genus: g,
        lhs,
        rhs,
        discrepancies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{g1_closed_forms, g1_twisted_splitting};
    use proptest::prelude::*;

    #[test]
    fn star_graph_examples() {
        let t0 = star_graph_terms(0);
        assert_eq!(t0.len(), 1);
        assert!(t0[0].is_trivial());
        let t1: Vec<_> = star_graph_terms(1)
            .into_iter()
            .map(|t| (t.central_genus, t.satellites))
            .collect();
        assert_eq!(t1, vec![(1, vec![]), (0, vec![1])]);
        let t2 = star_graph_terms(2);
        let shape: Vec<_> = t2.iter().map(|t| (t.central_genus, t.satellites.clone())).collect();
        assert_eq!(shape, vec![(2, vec![]), (1, vec![1]), (0, vec![2]), (0, vec![1, 1])]);
        assert_eq!(t2[3].symmetry, rat(1, 2));
        assert_eq!(t2[2].symmetry, int(1));
    }

    #[test]
    fn satellite_examples() {
        let c = SocleConstants::bundled();
        let w = satellite_weight(1, &c).unwrap();
        assert_eq!(w.coeff(0, 1), rat(1, 24));
        assert_eq!(w.coeff(1, 0), rat(1, 24));
        assert_eq!(w.diagonal(&int(1)), rat(1, 12));
        assert!(matches!(satellite_weight(2, &c), Err(Error::TableRequired(_))));
        let mut c2 = c.clone();
        c2.insert(2, rat(7, 5)).unwrap();
        let w2 = satellite_weight(2, &c2).unwrap();
        assert_eq!(w2.coeff(1, 2), rat(21, 5));
        assert_eq!(w2.coeff(2, 1), rat(21, 5));
        assert_eq!(w2.0.len(), 2);
    }

    #[test]
    fn genus_zero_is_identity() {
        let p = WeightPattern::stratum_h(0, 2);
        let t = IntegralTable::default();
        let c = SocleConstants::bundled();
        let dr1 = conja_transfer(0, &p, 1, (0, 0), Direction::StratumToTwisted, &t, &c).unwrap();
        assert_eq!(dr1.value, MultiPoly::constant(2, real(int(1))));
    }

    #[test]
    fn genus_one_transfer_matches_fixture() {
        let fixture = g1_closed_forms();
        let c = SocleConstants::bundled();
        let p = WeightPattern::stratum_h(1, 1);
        let dr1 = conja_transfer(1, &p, 1, (1, 0), Direction::StratumToTwisted, &fixture, &c).unwrap();
        let expected = fixture.get(&RecordKey::new(CycleKind::Dr1, 1, &p, 1, (1, 0))).unwrap();
        assert_eq!(dr1.value, expected.value);
        let st = conja_transfer(1, &p, 1, (1, 0), Direction::TwistedToStratum, &fixture, &c).unwrap();
        assert_eq!(st.value.eval_int(&[0]).unwrap(), real(int(0)));
        assert_eq!(st.value.eval_int(&[1]).unwrap(), real(int(0)));
        assert_eq!(st.value.eval_int(&[2]).unwrap(), real(rat(1, 6)));
    }

    #[test]
    fn missing_records_are_listed() {
        let p = WeightPattern::stratum_h(2, 1);
        let mut c = SocleConstants::bundled();
        c.insert(2, rat(1, 1152)).unwrap();
        let err = conja_transfer(
            2,
            &p,
            1,
            (2, 1),
            Direction::StratumToTwisted,
            &IntegralTable::default(),
            &c,
        )
        .unwrap_err();
        match err {
            Error::TableRequired(keys) => {
                assert_eq!(keys.len(), 1, "{keys:?}");
                assert!(keys[0].starts_with("STRATUM g=2"));
            }
            other => panic!("unexpected {other}"),
        }
        let outside = WeightPattern::new(1, vec![vec![-1, 1], vec![1, -1]], 0).unwrap();
        assert!(matches!(
            conja_transfer(
                1,
                &outside,
                0,
                (1, 0),
                Direction::StratumToTwisted,
                &IntegralTable::default(),
                &c
            ),
            Err(Error::OutsideChamber(_))
        ));
    }

    #[test]
    fn css_on_genus_one() {
        let table = g1_twisted_splitting();
        let report = css_split_check(1, &table).unwrap();
        assert!(report.passed(), "{report:?}");
        let [_, _, kc] = css_keys(1);
        let c = &table.get(&kc).unwrap().value;
        assert_eq!(ig_from_twisted_linear(1, c).unwrap(), rat(1, 6));
    }

    #[test]
    fn css_detects_perturbation() {
        let table = g1_twisted_splitting();
        let [ka, _, _] = css_keys(1);
        let mut rec = table.get(&ka).unwrap().clone();
        rec.value = &rec.value + &MultiPoly::from_terms(1, [(vec![2], real(rat(1, 1000)))]);
        let mut bumped = table.clone();
        bumped.upsert(rec);
        let report = css_split_check(1, &bumped).unwrap();
        assert!(!report.passed());
        assert_eq!(report.discrepancies.len(), 1);
        assert_eq!(report.discrepancies[0].0, vec![3]);
        assert!(matches!(css_split_check(2, &table), Err(Error::TableRequired(k)) if k.len() == 3));
    }

    #[test]
    fn twisted_linear_examples() {
        let p = MultiPoly::from_terms(1, [(vec![1], real(rat(-1, 12))), (vec![2], real(rat(5, 7)))]);
        assert_eq!(ig_from_twisted_linear(1, &p).unwrap(), rat(1, 6));
        let even = MultiPoly::from_terms(1, [(vec![0], real(int(3))), (vec![4], real(int(1)))]);
        assert_eq!(ig_from_twisted_linear(3, &even).unwrap(), int(0));
    }

    fn poly_from(coeffs: &[i64]) -> MultiPoly {
        MultiPoly::from_terms(
            1,
            coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| (vec![i as u32], real(rat(c, 7)))),
        )
    }

    /// Strata values for a genus-2 family and the genus-1 family its star graphs reach.
    fn synthetic_strata(c2: &[i64], c20: &[i64], c1: &[i64]) -> IntegralTable {
        let mut t = IntegralTable::new("synthetic");
        let p2 = WeightPattern::stratum_h(2, 1);
        let p1 = p2.with_appended(&[-2]);
        let p1 = WeightPattern::new(1, p1.entries().to_vec(), 0).unwrap();
        t.insert(IntegralRecord::new(CycleKind::Stratum, 2, p2.clone(), 2, (1, 1), poly_from(c2)).unwrap())
            .unwrap();
        t.insert(IntegralRecord::new(CycleKind::Stratum, 2, p2, 2, (2, 0), poly_from(c20)).unwrap())
            .unwrap();
        t.insert(IntegralRecord::new(CycleKind::Stratum, 1, p1, 2, (1, 0), poly_from(c1)).unwrap())
            .unwrap();
        t
    }

    proptest! {
        #[test]
        fn transfer_round_trip(
            c2 in prop::collection::vec(-20i64..20, 5),
            c20 in prop::collection::vec(-20i64..20, 5),
            c1 in prop::collection::vec(-20i64..20, 3),
            h2 in 1i64..50,
        ) {
            let strata = synthetic_strata(&c2, &c20, &c1);
            let mut c = SocleConstants::bundled();
            c.insert(2, rat(h2, 1000)).unwrap();
            let with_twisted = conja_table(&strata, Direction::StratumToTwisted, &c).unwrap();
            let mut twisted_only = IntegralTable::new("twisted");
            for r in with_twisted.records().filter(|r| r.kind == CycleKind::Dr1) {
                twisted_only.insert(r.clone()).unwrap();
            }
            prop_assert_eq!(twisted_only.len(), 3);
            let back = conja_table(&twisted_only, Direction::TwistedToStratum, &c).unwrap();
            for r in strata.records() {
                prop_assert_eq!(&back.get(&r.key()).unwrap().value, &r.value);
            }
        }
    }
}
