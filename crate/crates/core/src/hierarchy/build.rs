use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use num_traits::Zero;

use super::{DiffPoly, LocalFunctional, Monomial, Provenance};
use crate::cycles::{
    closed_form_table, dr_two_point_poly, CycleKind, IntegralTable, MissingKeys, RecordKey, SocleConstants,
    WeightPattern,
};
use crate::error::{Error, Result};
use crate::exactnum::{factorial, falling_factorial, from_bigint, i_pow, imag_unit, int, real, ComplexRational};
use crate::linalg::{solve_unique, SolveError};
use crate::polynomials::{FactorialPoly, MultiPoly};

/// Which integrals a Hamiltonian density is assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianKind {
    /// Strata of meromorphic differentials, `H_d`.
    Md,
    /// Untwisted DR cycles, `H_d^DR`.
    Dr,
    /// Twisted DR cycles, `H_d^{DR¹}`.
    Dr1,
}

impl HamiltonianKind {
    fn cycle(self) -> CycleKind {
        match self {
            Self::Md => CycleKind::Stratum,
            Self::Dr => CycleKind::Dr,
            Self::Dr1 => CycleKind::Dr1,
        }
    }

    fn pattern(self, genus: u32, n: usize) -> WeightPattern {
        match self {
            Self::Dr => WeightPattern::dr_h(n),
            Self::Md | Self::Dr1 => WeightPattern::stratum_h(genus, n),
        }
    }
}

impl std::str::FromStr for HamiltonianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "stratum" => Ok(Self::Md),
            "dr" => Ok(Self::Dr),
            "dr1" => Ok(Self::Dr1),
            _ => Err(Error::Usage(format!(
                "unknown Hamiltonian kind {s:?} (expected md, dr or dr1)"
            ))),
        }
    }
}

/// `G_d` from strata or from DR cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GKind {
    Stratum,
    Dr,
}

impl GKind {
    fn hamiltonian(self) -> HamiltonianKind {
        match self {
            Self::Stratum => HamiltonianKind::Md,
            Self::Dr => HamiltonianKind::Dr,
        }
    }
}

impl std::str::FromStr for GKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "stratum" => Ok(Self::Stratum),
            "dr" => Ok(Self::Dr),
            _ => Err(Error::Usage(format!("unknown G kind {s:?} (expected stratum or dr)"))),
        }
    }
}

fn inv_factorial(n: usize) -> ComplexRational {
    real(from_bigint(factorial(n as i64).expect("nonnegative")).recip())
}

/// `(iℏ)^g (-ε²/iℏ)^{l1} μ^{l2}` as a coefficient and a ring monomial.
fn lambda_prefactor(g: u32, l1: u32, l2: u32) -> (ComplexRational, Monomial) {
    let sign = if l1 % 2 == 0 { int(1) } else { int(-1) };
    (
        real(sign) * i_pow(i64::from(g - l1)),
        Monomial::default().eps(2 * l1).hbar(g - l1).mu(l2),
    )
}

fn lambda_pairs(g: u32) -> impl Iterator<Item = (u32, u32)> {
    (0..=g).flat_map(move |l1| (0..=g).map(move |l2| (l1, l2)))
}

/// Assembles `H_d`, `H_d^DR` or `H_d^{DR¹}` over `g <= g_max`, `1 <= n <= n_max`.
///
/// Every record that the sums need and that is neither structurally known
/// nor in `table` is reported in one [`Error::TableRequired`].
pub fn build_hd(kind: HamiltonianKind, d: i64, g_max: u32, n_max: usize, table: &IntegralTable) -> Result<DiffPoly> {
    if d < -1 {
        return Err(Error::Domain(format!("Hamiltonian index d = {d} must be >= -1")));
    }
    let psi = (d + 1) as u32;
    let mut missing = MissingKeys::default();
    let mut out = DiffPoly::zero();
    for g in 0..=g_max {
        for n in 1..=n_max {
            let pattern = kind.pattern(g, n);
            let cell = inv_factorial(n);
            for (l1, l2) in lambda_pairs(g) {
                let value = missing.resolve(table, &RecordKey::new(kind.cycle(), g, &pattern, psi, (l1, l2)));
                if value.is_zero() {
                    continue;
                }
                let (pc, ring) = lambda_prefactor(g, l1, l2);
                let base = &pc * &cell;
                match kind {
                    HamiltonianKind::Dr => {
                        for (s, c) in value.terms() {
                            let total: u32 = s.iter().sum();
                            let m = Monomial {
                                jets: sorted(s),
                                ..ring.clone()
                            };
                            out.add_term(m, &base * i_pow(-i64::from(total)) * c);
                        }
                    }
                    HamiltonianKind::Md | HamiltonianKind::Dr1 => {
                        let sign = real(if g % 2 == 0 { int(1) } else { int(-1) });
                        for (s, c) in value.to_factorial_basis().terms() {
                            let total: u32 = s.iter().sum();
                            let xinv = 2 * g as i32 - total as i32;
                            let m = Monomial {
                                jets: sorted(s),
                                xinv,
                                ..ring.clone()
                            };
                            out.add_term(m, &base * &sign * c);
                        }
                    }
                }
            }
        }
    }
    missing.into_result(out)
}

fn sorted(s: &[u32]) -> Vec<u32> {
    let mut v = s.to_vec();
    v.sort_unstable();
    v
}

/// Multisets of `n` jet orders with total `weight`, in local-functional normal form.
fn normal_jet_multisets(n: usize, weight: u32) -> Vec<Vec<u32>> {
    fn go(n: usize, weight: u32, cap: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            if weight == 0 {
                let mut v = prefix.clone();
                v.reverse();
                out.push(v);
            }
            return;
        }
        for s in (0..=cap.min(weight)).rev() {
            prefix.push(s);
            go(n - 1, weight - s, s, prefix, out);
            prefix.pop();
        }
    }
    let mut all = Vec::new();
    go(n, weight, weight, &mut Vec::new(), &mut all);
    all.into_iter()
        .filter(|j| Monomial::new(j.clone()).is_normal())
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Image of `∫ u_{J}` as a polynomial in the first `n-1` weights, the last
/// one eliminated by the linear constraint.
fn functional_image(kind: GKind, genus: u32, jets: &[u32]) -> Result<MultiPoly> {
    let n = jets.len();
    let mut sym = MultiPoly::zero(n);
    for p in permutations(n) {
        let mut e = vec![0u32; n];
        for (j, &pos) in p.iter().enumerate() {
            e[pos] = jets[j];
        }
        let term = match kind {
            GKind::Stratum => FactorialPoly::from_terms(n, [(e, real(int(1)))]).to_monomial_basis(),
            GKind::Dr => {
                let total: u32 = e.iter().sum();
                MultiPoly::from_terms(n, [(e, i_pow(i64::from(total)))])
            }
        };
        sym = &sym + &term;
    }
    let mut images: Vec<MultiPoly> = (0..n - 1).map(|v| MultiPoly::variable(n - 1, v)).collect();
    let last = match kind {
        GKind::Stratum => MultiPoly::affine(2 * i64::from(genus) - 1, &vec![-1; n - 1]),
        GKind::Dr => MultiPoly::affine(0, &vec![-1; n - 1]),
    };
    images.push(last);
    let restricted = sym.compose(&images, n - 1)?;
    Ok(match kind {
        GKind::Stratum => restricted.scale(&i_pow(2 * i64::from(genus))),
        GKind::Dr => restricted,
    })
}

/// Degree-zero part of the local functional `Ḡ_d`, from `ψ_0^d` records.
///
/// On the constraint hyperplane the `G_d` record with `n` weights is the
/// Hamiltonian-style record with `n - 1` free weights, so the same table
/// entries feed `H_{d-1}` and `G_d`.
pub fn build_gd(d: i64, g_max: u32, n_max: usize, table: &IntegralTable, kind: GKind) -> Result<LocalFunctional> {
    if d < 0 {
        return Err(Error::Domain(format!("G_d needs d >= 0, got {d}")));
    }
    let psi = d as u32;
    let hk = kind.hamiltonian();
    let mut missing = MissingKeys::default();
    let mut out = DiffPoly::zero();
    for g in 0..=g_max {
        for n in 2..=n_max {
            let pattern = hk.pattern(g, n - 1);
            let mut cell: Option<(Vec<Vec<u32>>, Vec<MultiPoly>)> = None;
            for (l1, l2) in lambda_pairs(g) {
                let key = RecordKey::new(hk.cycle(), g, &pattern, psi, (l1, l2));
                let mut value = missing.resolve(table, &key);
                if kind == GKind::Dr {
                    value = value.homogeneous_part(2 * g);
                }
                if value.is_zero() {
                    continue;
                }
                if cell.is_none() {
                    let unknowns = normal_jet_multisets(n, 2 * g);
                    let images = unknowns
                        .iter()
                        .map(|j| functional_image(kind, g, j))
                        .collect::<Result<Vec<_>>>()?;
                    cell = Some((unknowns, images));
                }
                let (unknowns, images) = cell.as_ref().expect("filled");
                let coeffs = match_functional(images, &value)
                    .map_err(|e| Error::Domain(format!("no local functional reproduces {key}: {e:?}")))?;
                let (pc, ring) = lambda_prefactor(g, l1, l2);
                for (jets, c) in unknowns.iter().zip(coeffs) {
                    out.add_term(
                        Monomial {
                            jets: jets.clone(),
                            ..ring.clone()
                        },
                        &pc * c,
                    );
                }
            }
        }
    }
    missing.into_result(())?;
    LocalFunctional::new(&out)
}

fn match_functional(images: &[MultiPoly], target: &MultiPoly) -> std::result::Result<Vec<ComplexRational>, SolveError> {
    let mut rows: BTreeMap<Vec<u32>, Vec<ComplexRational>> = BTreeMap::new();
    let width = images.len();
    let mut rhs: BTreeMap<Vec<u32>, ComplexRational> = BTreeMap::new();
    for (col, img) in images.iter().enumerate() {
        for (e, c) in img.terms() {
            rows.entry(e.clone())
                .or_insert_with(|| vec![ComplexRational::zero(); width])[col] = c.clone();
        }
    }
    for (e, c) in target.terms() {
        rows.entry(e.clone())
            .or_insert_with(|| vec![ComplexRational::zero(); width]);
        rhs.insert(e.clone(), c.clone());
    }
    let b = rows
        .keys()
        .map(|e| rhs.get(e).cloned().unwrap_or_else(ComplexRational::zero))
        .collect();
    solve_unique(rows.into_values().collect(), b, width)
}

/// `∫ (u³/6 + sum_g |B_2g|/(2 (2g)!) (ε^{2g} μ^{g-1} - iℏ ε^{2g-2} μ^g) u_{2g} u_0)`.
pub fn build_g1_dr(g_max: u32) -> LocalFunctional {
    let mut p = DiffPoly::monomial(Monomial::new(vec![0, 0, 0]), inv_factorial(3));
    for g in 1..=g_max {
        let c = dr_two_point_poly(g).coeff(&[2 * g]).expect("arity 1") * real(int(1) / int(2));
        let jets = Monomial::new(vec![0, 2 * g]);
        p.add_term(
            Monomial {
                mu: g - 1,
                eps: 2 * g,
                ..jets.clone()
            },
            c.clone(),
        );
        p.add_term(
            Monomial {
                mu: g,
                eps: 2 * g - 2,
                hbar: 1,
                ..jets
            },
            -imag_unit() * c,
        );
    }
    LocalFunctional::new(&p).expect("regular")
}

/// `Ḡ_1` assembled from the closed-form stratum integrals.
pub fn build_g1_strata(g_max: u32) -> LocalFunctional {
    build_gd(1, g_max, 3, &closed_form_table(g_max), GKind::Stratum).expect("closed forms cover G_1")
}

/// `c_g(ε, ℏ, μ)` for the shift `u -> u + sum_g c_g / x^{2g}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ShiftConstants(pub BTreeMap<u32, DiffPoly>);

impl ShiftConstants {
    pub fn get(&self, g: u32) -> Option<&DiffPoly> {
        self.0.get(&g)
    }

    /// `∂_x^s sum_g c_g x^{-2g}`.
    fn shift_of_jet(&self, s: u32) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (&g, c) in &self.0 {
            let two_g = 2 * i64::from(g);
            let ff = real(from_bigint(falling_factorial(-two_g, s)));
            let x = DiffPoly::monomial(Monomial::default().xinv((two_g + i64::from(s)) as i32), ff);
            out = &out + &(c * &x);
        }
        out
    }
}

/// `c_g = (2g-1)(ε^{2g} μ^{g-1} - iℏ ε^{2g-2} μ^g) h_g` for `1 <= g <= g_max`.
pub fn cg_constants(g_max: u32, constants: &SocleConstants) -> Result<ShiftConstants> {
    let mut out = BTreeMap::new();
    for g in 1..=g_max {
        let h = constants.get(g).ok_or(Error::MissingConstant(g))?;
        let c = real(int(2 * i64::from(g) - 1) * h);
        let p = DiffPoly::from_terms([
            (Monomial::default().eps(2 * g).mu(g - 1), c.clone()),
            (Monomial::default().eps(2 * g - 2).hbar(1).mu(g), -imag_unit() * c),
        ]);
        out.insert(g, p);
    }
    Ok(ShiftConstants(out))
}

/// Substitutes `u_s -> u_s + ∂_x^s sum_g c_g x^{-2g}` in every monomial.
pub fn shift_substitution(p: &DiffPoly, c: &ShiftConstants) -> DiffPoly {
    let mut cache: BTreeMap<u32, DiffPoly> = BTreeMap::new();
    let mut out = DiffPoly::zero();
    for (m, coeff) in p.terms() {
        let mut acc = DiffPoly::monomial(
            Monomial {
                jets: Vec::new(),
                ..m.clone()
            },
            coeff.clone(),
        );
        for &s in &m.jets {
            let shift = cache.entry(s).or_insert_with(|| c.shift_of_jet(s));
            acc = &acc * &(&DiffPoly::u(s) + shift);
        }
        out = &out + &acc;
    }
    out
}

/// One term of `sum_m m^{s̲} q_m i^m x^{m-s}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QTerm {
    pub m: i64,
    pub coeff: ComplexRational,
    pub x_power: i64,
}

/// The `q`-variable image of `u_s` over a finite window of `m`.
pub fn q_image_of_u_monomial(s: u32, window: RangeInclusive<i64>) -> Vec<QTerm> {
    window
        .filter_map(|m| {
            let ff = falling_factorial(m, s);
            (!ff.is_zero()).then(|| QTerm {
                m,
                coeff: real(from_bigint(ff)) * i_pow(m),
                x_power: m - i64::from(s),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub monomial: Monomial,
    pub lhs: ComplexRational,
    pub rhs: ComplexRational,
}

impl Mismatch {
    pub fn provenance(&self) -> Provenance {
        self.monomial.provenance()
    }
}

/// Coefficientwise comparison of two densities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityReport {
    pub name: String,
    /// Distinct monomials compared.
    pub compared: usize,
    pub mismatches: Vec<Mismatch>,
    /// Left-hand monomials that should be absent (negative powers of `x`, nonzero grade).
    pub forbidden: Vec<Monomial>,
}

impl IdentityReport {
    fn compare(name: &str, lhs: &DiffPoly, rhs: &DiffPoly) -> Self {
        let mut monos: Vec<&Monomial> = lhs.terms().map(|(m, _)| m).chain(rhs.terms().map(|(m, _)| m)).collect();
        monos.sort();
        monos.dedup();
        let mismatches = monos
            .iter()
            .filter_map(|m| {
                let (a, b) = (lhs.coeff(m), rhs.coeff(m));
                (a != b).then(|| Mismatch {
                    monomial: (*m).clone(),
                    lhs: a,
                    rhs: b,
                })
            })
            .collect();
        Self {
            name: name.to_string(),
            compared: monos.len(),
            mismatches,
            forbidden: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.forbidden.is_empty()
    }

    /// Human-readable diff, one line per problem.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{}: {} ({} monomials compared, {} mismatches)\n",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.compared,
            self.mismatches.len()
        );
        for m in &self.mismatches {
            out.push_str(&format!(
                "  {} [{}]: lhs {} rhs {}\n",
                m.monomial,
                m.provenance(),
                crate::exactnum::format_complex(&m.lhs),
                crate::exactnum::format_complex(&m.rhs)
            ));
        }
        for m in &self.forbidden {
            out.push_str(&format!(
                "  forbidden monomial {m} [{}] (grade {})\n",
                m.provenance(),
                m.grade()
            ));
        }
        out
    }
}

/// `H_d = (H_d^DR)^{[0]}`, plus homogeneity and regularity of `H_d`.
pub fn verify_main_identity(d: i64, g_max: u32, n_max: usize, table: &IntegralTable) -> Result<IdentityReport> {
    let mut missing = MissingKeys::default();
    let mut side = |kind| match build_hd(kind, d, g_max, n_max, table) {
        Err(Error::TableRequired(_)) => {
            collect_missing(kind, d, g_max, n_max, table, &mut missing);
            Ok(DiffPoly::zero())
        }
        other => other,
    };
    let lhs = side(HamiltonianKind::Md)?;
    let rhs = side(HamiltonianKind::Dr)?.degree_part(0);
    missing.into_result(())?;
    let mut report = IdentityReport::compare(&format!("main identity d={d} g<={g_max} n<={n_max}"), &lhs, &rhs);
    report.forbidden = lhs
        .terms()
        .map(|(m, _)| m)
        .filter(|m| m.xinv != 0 || m.grade() != 0)
        .cloned()
        .collect();
    Ok(report)
}

fn collect_missing(
    kind: HamiltonianKind,
    d: i64,
    g_max: u32,
    n_max: usize,
    table: &IntegralTable,
    sink: &mut MissingKeys,
) {
    for g in 0..=g_max {
        for n in 1..=n_max {
            for l in lambda_pairs(g) {
                sink.resolve(
                    table,
                    &RecordKey::new(kind.cycle(), g, &kind.pattern(g, n), (d + 1) as u32, l),
                );
            }
        }
    }
}

/// `H_d^{DR¹} = H_d |_{u -> u + sum c_g x^{-2g}}`, compared where both
/// sides are complete: genus `G <= g_max`, `N >= 1` jets, `N + G <= n_max`.
pub fn verify_prop13(
    d: i64,
    g_max: u32,
    n_max: usize,
    table: &IntegralTable,
    constants: &SocleConstants,
) -> Result<IdentityReport> {
    let shift = cg_constants(g_max, constants)?;
    let in_box = |m: &Monomial| {
        let g = m.genus_weight();
        g <= g_max && !m.jets.is_empty() && m.jets.len() + g as usize <= n_max
    };
    let twisted = build_hd(HamiltonianKind::Dr1, d, g_max, n_max, table)?.filter(in_box);
    let shifted = shift_substitution(&build_hd(HamiltonianKind::Md, d, g_max, n_max, table)?, &shift).filter(in_box);
    Ok(IdentityReport::compare(
        &format!("shift relation d={d} g<={g_max} n<={n_max}"),
        &twisted,
        &shifted,
    ))
}

/// `δḠ_d/δu = H_{d-1}` (degree-zero part of `H_{d-1}^DR` for the DR kind).
pub fn verify_g_relation(
    d: i64,
    g_max: u32,
    n_max: usize,
    table: &IntegralTable,
    kind: GKind,
) -> Result<IdentityReport> {
    let g = build_gd(d, g_max, n_max + 1, table, kind)?;
    let h = build_hd(kind.hamiltonian(), d - 1, g_max, n_max, table)?;
    let h = if kind == GKind::Dr { h.degree_part(0) } else { h };
    let name = format!("variational relation {kind:?} d={d} g<={g_max} n<={n_max}");
    Ok(IdentityReport::compare(&name, &g.var_derivative(), &h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{g1_closed_forms, IntegralRecord};
    use crate::exactnum::{bernoulli, rat};
    use crate::hierarchy::tests::arb_diffpoly;
    use num_traits::Signed;
    use proptest::prelude::*;

    fn q(r: crate::exactnum::Rational) -> ComplexRational {
        real(r)
    }

    fn expected_h0_g1() -> DiffPoly {
        DiffPoly::from_terms([
            (Monomial::new(vec![0, 0]), q(rat(1, 2))),
            (Monomial::new(vec![2]).eps(2), q(rat(1, 12))),
            (Monomial::new(vec![2]).hbar(1).mu(1), -imag_unit() * q(rat(1, 12))),
        ])
    }

    #[test]
    fn genus_zero_hamiltonians() {
        let empty = IntegralTable::default();
        for kind in [HamiltonianKind::Md, HamiltonianKind::Dr, HamiltonianKind::Dr1] {
            let h = build_hd(kind, 0, 0, 4, &empty).unwrap();
            assert_eq!(
                h,
                DiffPoly::monomial(Monomial::new(vec![0, 0]), q(rat(1, 2))),
                "{kind:?}"
            );
            let h3 = build_hd(kind, 3, 0, 6, &empty).unwrap();
            assert_eq!(h3, DiffPoly::monomial(Monomial::new(vec![0; 5]), q(rat(1, 120))));
        }
        let hm1 = build_hd(HamiltonianKind::Md, -1, 0, 3, &empty).unwrap();
        assert_eq!(hm1, DiffPoly::u(0));
        assert!(build_hd(HamiltonianKind::Md, -2, 0, 3, &empty).is_err());
        for d in 0..=3 {
            assert!(verify_main_identity(d, 0, 6, &empty).unwrap().passed());
        }
    }

    #[test]
    fn genus_one_h0() {
        let t = closed_form_table(1);
        assert_eq!(build_hd(HamiltonianKind::Md, 0, 1, 2, &t).unwrap(), expected_h0_g1());
        assert_eq!(build_hd(HamiltonianKind::Dr, 0, 1, 2, &t).unwrap(), expected_h0_g1());
        let report = verify_main_identity(0, 1, 1, &t).unwrap();
        assert!(report.passed(), "{}", report.to_text());
    }

    #[test]
    fn closed_form_slice_top_coefficients() {
        let t = closed_form_table(3);
        let report = verify_main_identity(0, 3, 1, &t).unwrap();
        assert!(report.passed(), "{}", report.to_text());
        let h = build_hd(HamiltonianKind::Md, 0, 3, 1, &t).unwrap();
        for g in 1..=3u32 {
            let m = Monomial::new(vec![2 * g]).eps(2 * g).mu(g - 1);
            let top = bernoulli(2 * g as usize).abs() / from_bigint(factorial(2 * i64::from(g)).unwrap());
            assert_eq!(h.coeff(&m), q(top));
        }
    }

    #[test]
    fn missing_records_reported() {
        let err = build_hd(HamiltonianKind::Md, 1, 2, 1, &closed_form_table(2)).unwrap_err();
        let Error::TableRequired(keys) = err else {
            panic!("expected table-required")
        };
        assert!(!keys.is_empty());
        assert!(keys.iter().all(|k| k.starts_with("STRATUM g=")), "{keys:?}");
        assert!(keys.iter().any(|k| k.contains("g=2") && k.contains("lambda=(2,0)")));
        let err = verify_main_identity(1, 2, 1, &closed_form_table(2)).unwrap_err();
        let Error::TableRequired(both) = err else { panic!() };
        assert!(both.iter().any(|k| k.starts_with("DR g=2")));
        assert!(both.len() > keys.len());
    }

    #[test]
    fn mismatch_is_located() {
        let mut t = closed_form_table(1);
        let key = RecordKey::new(CycleKind::Dr, 1, &WeightPattern::dr_h(1), 1, (1, 0));
        let mut rec: IntegralRecord = t.get(&key).unwrap().clone();
        rec.value = &rec.value + &MultiPoly::from_terms(1, [(vec![2], q(rat(1, 1000)))]);
        t.upsert(rec);
        let report = verify_main_identity(0, 1, 1, &t).unwrap();
        assert!(!report.passed());
        assert_eq!(report.mismatches.len(), 2);
        let p = report.mismatches[0].provenance();
        assert_eq!((p.genus, p.n, p.s.clone()), (1, 1, vec![2]));
        assert!(report.to_text().contains("FAIL"));
    }

    #[test]
    fn g1_builders_agree() {
        assert_eq!(build_g1_dr(0), build_g1_strata(0));
        let g1 = build_g1_dr(1);
        let m = Monomial::new(vec![1, 1]).eps(2);
        // u_2 u_0 ≡ -u_1^2
        assert_eq!(g1.density().coeff(&m), q(rat(-1, 24)));
        assert_eq!(
            g1.density().coeff(&Monomial::new(vec![1, 1]).hbar(1).mu(1)),
            imag_unit() * q(rat(1, 24))
        );
        for g in 1..=3 {
            assert_eq!(build_g1_strata(g), build_g1_dr(g));
            assert_eq!(
                build_gd(1, g, 3, &closed_form_table(g), GKind::Dr).unwrap(),
                build_g1_dr(g)
            );
        }
    }

    #[test]
    fn genus_zero_gd() {
        let empty = IntegralTable::default();
        for d in 0..=4i64 {
            let n = d as usize + 2;
            for kind in [GKind::Stratum, GKind::Dr] {
                let g = build_gd(d, 0, n + 1, &empty, kind).unwrap();
                let expected = DiffPoly::monomial(Monomial::new(vec![0; n]), inv_factorial(n));
                assert_eq!(g.density(), &expected);
            }
        }
        assert!(build_gd(-1, 0, 3, &empty, GKind::Stratum).is_err());
    }

    #[test]
    fn variational_relation_g1() {
        let t = closed_form_table(1);
        let g1 = build_g1_strata(1);
        assert_eq!(g1.var_derivative(), expected_h0_g1());
        for kind in [GKind::Stratum, GKind::Dr] {
            let r = verify_g_relation(1, 1, 2, &t, kind).unwrap();
            assert!(r.passed(), "{}", r.to_text());
        }
        let r0 = verify_g_relation(0, 0, 3, &IntegralTable::default(), GKind::Stratum).unwrap();
        assert!(r0.passed(), "{}", r0.to_text());
    }

    #[test]
    fn shift_constants() {
        let c = cg_constants(1, &SocleConstants::bundled()).unwrap();
        let c1 = c.get(1).unwrap();
        assert_eq!(c1.coeff(&Monomial::default().eps(2)), q(rat(1, 24)));
        assert_eq!(
            c1.coeff(&Monomial::default().hbar(1).mu(1)),
            -imag_unit() * q(rat(1, 24))
        );
        assert_eq!(c1.classical_limit().filter(|m| m.mu == 0).len(), 1);
        assert!(matches!(
            cg_constants(2, &SocleConstants::bundled()),
            Err(Error::MissingConstant(2))
        ));
        let mut k = SocleConstants::bundled();
        k.insert(2, rat(1, 1152)).unwrap();
        let c2 = cg_constants(2, &k).unwrap();
        assert_eq!(
            c2.get(2).unwrap().coeff(&Monomial::default().eps(4).mu(1)),
            q(rat(3, 1152))
        );
        assert_eq!(
            c2.get(2).unwrap().coeff(&Monomial::default().eps(2).hbar(1).mu(2)),
            -imag_unit() * q(rat(3, 1152))
        );
    }

    #[test]
    fn shift_examples() {
        let mut k = SocleConstants::bundled();
        k.insert(2, rat(1, 1152)).unwrap();
        let c = cg_constants(2, &k).unwrap();
        let x = |k: i32| DiffPoly::monomial(Monomial::default().xinv(k), q(int(1)));
        let sum0 = &(c.get(1).unwrap() * &x(2)) + &(c.get(2).unwrap() * &x(4));
        assert_eq!(shift_substitution(&DiffPoly::u(0), &c), &DiffPoly::u(0) + &sum0);
        let sum1 = &(c.get(1).unwrap() * &x(3)).scale(&q(int(-2))) + &(c.get(2).unwrap() * &x(5)).scale(&q(int(-4)));
        assert_eq!(shift_substitution(&DiffPoly::u(1), &c), &DiffPoly::u(1) + &sum1);
    }

    /// `p(u + δ) = sum_j (δ·∂_u)^j p / j!` with `δ_s = ∂_x^s sum c_g x^{-2g}`.
    #[test]
    fn shift_is_exponential_of_derivation() {
        let c = cg_constants(1, &SocleConstants::bundled()).unwrap();
        let p = DiffPoly::from_terms([
            (Monomial::new(vec![0, 0, 2]), q(rat(1, 3))),
            (Monomial::new(vec![1, 1]).eps(2), q(int(2))),
        ]);
        let delta = |f: &DiffPoly| {
            let mut out = DiffPoly::zero();
            for s in 0..=f.max_jet().unwrap_or(0) {
                out = &out + &(&f.partial_u(s) * &c.shift_of_jet(s));
            }
            out
        };
        let mut term = p.clone();
        let mut total = p.clone();
        for j in 1..=3 {
            term = delta(&term).scale(&q(int(1) / int(j)));
            total = &total + &term;
        }
        assert!(delta(&term).is_zero());
        assert_eq!(shift_substitution(&p, &c), total);
    }

    #[test]
    fn shift_relation_genus_one() {
        let t = g1_closed_forms();
        let r = verify_prop13(0, 1, 2, &t, &SocleConstants::bundled()).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        assert!(r.compared >= 3);
        let mut bad = t.clone();
        let key = RecordKey::new(CycleKind::Dr1, 1, &WeightPattern::stratum_h(1, 1), 1, (1, 0));
        let mut rec = bad.get(&key).unwrap().clone();
        rec.value = &rec.value + &MultiPoly::constant(1, q(rat(1, 7)));
        bad.upsert(rec);
        assert!(!verify_prop13(0, 1, 2, &bad, &SocleConstants::bundled())
            .unwrap()
            .passed());
    }

    #[test]
    fn q_images() {
        assert_eq!(
            q_image_of_u_monomial(0, 1..=1),
            vec![QTerm {
                m: 1,
                coeff: imag_unit(),
                x_power: 1
            }]
        );
        assert!(q_image_of_u_monomial(2, 0..=1).is_empty());
        assert_eq!(
            q_image_of_u_monomial(1, 2..=2),
            vec![QTerm {
                m: 2,
                coeff: q(int(-2)),
                x_power: 1
            }]
        );
    }

    #[test]
    fn normal_multisets() {
        assert_eq!(normal_jet_multisets(2, 2), vec![vec![1, 1]]);
        assert_eq!(normal_jet_multisets(3, 0), vec![vec![0, 0, 0]]);
        assert_eq!(normal_jet_multisets(3, 4), vec![vec![0, 2, 2]]);
        assert!(normal_jet_multisets(1, 4).is_empty());
    }

    proptest! {
        #[test]
        fn zero_shift_is_identity(p in arb_diffpoly()) {
            let zero = ShiftConstants(BTreeMap::from([(1, DiffPoly::zero()), (2, DiffPoly::zero())]));
            prop_assert_eq!(shift_substitution(&p, &zero), p.clone());
            prop_assert_eq!(shift_substitution(&p, &ShiftConstants::default()), p);
        }

        #[test]
        fn q_image_derivative(s in 0u32..6, lo in -8i64..0, hi in 0i64..8) {
            // d/dx of the image of u_s is the image of u_{s+1}
            let derived: Vec<QTerm> = q_image_of_u_monomial(s, lo..=hi)
                .into_iter()
                .filter_map(|t| {
                    let c = t.coeff * q(int(t.x_power));
                    (!c.is_zero()).then(|| QTerm { m: t.m, coeff: c, x_power: t.x_power - 1 })
                })
                .collect();
            prop_assert_eq!(derived, q_image_of_u_monomial(s + 1, lo..=hi));
        }

        #[test]
        fn hamiltonians_are_homogeneous(d in -1i64..3, g_max in 0u32..4) {
            let t = closed_form_table(g_max);
            let h = build_hd(HamiltonianKind::Md, d, g_max, 1, &t);
            if let Ok(h) = h {
                prop_assert!(h.terms().all(|(m, _)| m.grade() == 0 && m.xinv == 0));
            }
            if let Ok(hdr) = build_hd(HamiltonianKind::Dr, d, g_max, 1, &t) {
                for k in 1..=4 {
                    prop_assert!(hdr.degree_part(k).is_zero());
                }
                prop_assert!(hdr.classical_limit().terms().all(|(m, _)| m.grade() == 0));
            }
        }
    }
}
