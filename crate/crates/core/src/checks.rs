//! Named verification suites shared by the command line and the test harness.

use std::fmt;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cycles::{
    closed_form_table, conja_transfer, css_keys, css_split_check, g1_closed_forms, g1_twisted_splitting,
    stratum_nice_identity_poly, CycleKind, Direction, IntegralTable, SocleConstants,
};
use crate::error::{Error, Result};
use crate::exactnum::{bernoulli, factorial, format_rational, from_bigint, int, rat, real, ComplexRational};
use crate::hierarchy::{
    build_g1_dr, build_g1_strata, build_gd, build_hd, shift_substitution, verify_g_relation, verify_main_identity,
    verify_prop13, DiffPoly, GKind, HamiltonianKind, IdentityReport, LocalFunctional, Monomial, ShiftConstants,
};
use crate::polynomials::{FactorialPoly, MultiPoly};
use crate::series::{bernoulli_convolution, coth_power_residue, jg, JgRoute};
use crate::socle::{cg, faber_two_point_kappa, ig_socle, KappaPartition, SocleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
    /// Exact failing instances.
    pub witnesses: Vec<String>,
}

impl Check {
    fn from_witnesses(name: impl Into<String>, detail: impl Into<String>, witnesses: Vec<String>) -> Self {
        let status = if witnesses.is_empty() {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            name: name.into(),
            status,
            detail: detail.into(),
            witnesses,
        }
    }

    fn skip(name: impl Into<String>, why: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Skip,
            detail: why.into(),
            witnesses: Vec::new(),
        }
    }

    fn from_report(name: impl Into<String>, r: &IdentityReport) -> Self {
        let text = r.to_text();
        let mut lines = text.lines();
        let head = lines.next().unwrap_or_default().to_string();
        Self::from_witnesses(name, head, lines.map(|l| l.trim().to_string()).collect())
    }
}

#[derive(Debug, Clone)]
pub struct SuiteParams {
    pub g_max: u32,
    pub n_max: usize,
    /// Largest Hamiltonian index; suites run `0..=d_max`.
    pub d_max: i64,
    pub tables: Option<IntegralTable>,
    pub seed: u64,
    pub cases: usize,
    pub routes: Vec<JgRoute>,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            g_max: 3,
            n_max: 2,
            d_max: 1,
            tables: None,
            seed: 0,
            cases: 64,
            routes: JgRoute::ALL.to_vec(),
        }
    }
}

pub const SUITES: [&str; 13] = [
    "ig",
    "jg",
    "coth",
    "faber",
    "nice",
    "g1",
    "genus0",
    "main",
    "gd-relation",
    "conja",
    "css",
    "prop13",
    "algebra",
];

/// Runs one suite (or `all`). Missing table records are errors, not failures.
pub fn run_suite(name: &str, p: &SuiteParams) -> Result<Vec<Check>> {
    match name {
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(run_suite(s, p)?);
            }
            Ok(out)
        }
        "ig" => Ok(vec![ig_check(p.g_max)?]),
        "jg" => jg_checks(p.g_max, &p.routes),
        "coth" => Ok(vec![coth_check(p.g_max)]),
        "faber" => Ok(vec![faber_check(p.g_max)?]),
        "nice" => Ok(vec![nice_check(p.g_max)?]),
        "g1" => Ok(vec![g1_check(p.g_max)]),
        "genus0" => Ok(vec![genus0_check(p.d_max)?]),
        "main" => main_checks(p),
        "gd-relation" => gd_checks(p),
        "conja" => conja_checks(p),
        "css" => css_checks(p),
        "prop13" => prop13_checks(p),
        "algebra" => Ok(algebra_checks(p.seed, p.cases)),
        other => Err(Error::Usage(format!(
            "unknown suite {other:?}; expected one of all, {}",
            SUITES.join(", ")
        ))),
    }
}

fn require_g(g_max: u32) -> Result<()> {
    if g_max == 0 {
        Err(Error::Usage("--gmax must be at least 1".into()))
    } else {
        Ok(())
    }
}

pub fn ig_check(g_max: u32) -> Result<Check> {
    require_g(g_max)?;
    let mut values = Vec::new();
    let mut bad = Vec::new();
    for g in 1..=g_max {
        let v = ig_socle(g)?;
        if v != bernoulli(2 * g as usize).abs() {
            bad.push(format!("g={g}: I_g = {}", format_rational(&v)));
        }
        values.push(format_rational(&v));
    }
    Ok(Check::from_witnesses(format!("ig g<={g_max}"), values.join(", "), bad))
}

pub fn jg_checks(g_max: u32, routes: &[JgRoute]) -> Result<Vec<Check>> {
    require_g(g_max)?;
    routes
        .iter()
        .map(|&r| {
            let mut bad = Vec::new();
            for g in 1..=g_max {
                let v = jg(g, r)?;
                if v != int(1) {
                    bad.push(format!("g={g}: J_g = {}", format_rational(&v)));
                }
            }
            Ok(Check::from_witnesses(
                format!("jg {} g<={g_max}", r.name()),
                "J_g = 1",
                bad,
            ))
        })
        .collect()
}

pub fn coth_check(k_max: u32) -> Check {
    let mut bad = Vec::new();
    for k in 0..=k_max {
        let (a, b) = (coth_power_residue(k), bernoulli_convolution(k));
        if a != int(1) || b != int(1) {
            bad.push(format!(
                "k={k}: residue {} convolution {}",
                format_rational(&a),
                format_rational(&b)
            ));
        }
    }
    Check::from_witnesses(format!("coth k<={k_max}"), "residue = convolution = 1", bad)
}

pub fn faber_check(g_max: u32) -> Result<Check> {
    require_g(g_max)?;
    let mut bad = Vec::new();
    for g in 1..=g_max {
        let v = faber_two_point_kappa(&SocleSpec::new(g, g - 1, KappaPartition::empty())?);
        if v != cg(g)? {
            bad.push(format!(
                "g={g}: {} vs c_g {}",
                format_rational(&v),
                format_rational(&cg(g)?)
            ));
        }
    }
    for (g, want) in [(1, rat(1, 24)), (2, rat(1, 2880))] {
        if cg(g)? != want {
            bad.push(format!("c_{g} = {}", format_rational(&cg(g)?)));
        }
    }
    Ok(Check::from_witnesses(
        format!("faber g<={g_max}"),
        "psi^g term equals c_g",
        bad,
    ))
}

pub fn nice_check(g_max: u32) -> Result<Check> {
    require_g(g_max)?;
    let mut bad = Vec::new();
    for g in 1..=g_max {
        let p = stratum_nice_identity_poly(g);
        let top = p.eval_int(&[2 * i64::from(g)])?;
        if top != real(ig_socle(g)?) {
            bad.push(format!("g={g} m={}: {}", 2 * g, crate::exactnum::format_complex(&top)));
        }
        for m in 0..2 * i64::from(g) {
            let v = p.eval_int(&[m])?;
            if !v.is_zero() {
                bad.push(format!("g={g} m={m}: {}", crate::exactnum::format_complex(&v)));
            }
        }
    }
    Ok(Check::from_witnesses(
        format!("nice g<={g_max}"),
        "value I_g at m=2g, zeros below",
        bad,
    ))
}

pub fn g1_check(g_max: u32) -> Check {
    let strata = build_g1_strata(g_max);
    let dr = build_g1_dr(g_max);
    let mut bad = Vec::new();
    for g in 1..=g_max {
        // u_{2g} u_0 ≡ (-1)^g u_g^2
        let sign = if g % 2 == 0 { int(1) } else { int(-1) };
        let want =
            real(sign * bernoulli(2 * g as usize).abs() / (int(2) * from_bigint(factorial(2 * i64::from(g)).unwrap())));
        let m = Monomial::new(vec![g, g]).eps(2 * g).mu(g - 1);
        if strata.density().coeff(&m) != want {
            bad.push(format!(
                "g={g}: {m} has {}",
                crate::exactnum::format_complex(&strata.density().coeff(&m))
            ));
        }
    }
    if strata != dr {
        bad.push(format!("strata {strata} vs DR {dr}"));
    }
    Check::from_witnesses(format!("g1 g<={g_max}"), "G_1 from strata equals G_1 from DR", bad)
}

pub fn genus0_check(d_max: i64) -> Result<Check> {
    let empty = IntegralTable::default();
    let mut bad = Vec::new();
    for d in 0..=d_max {
        let n = d as usize + 2;
        let want = DiffPoly::monomial(
            Monomial::new(vec![0; n]),
            real(from_bigint(factorial(n as i64)?).recip()),
        );
        for kind in [GKind::Stratum, GKind::Dr] {
            let g = build_gd(d, 0, n + 1, &empty, kind)?.coef_eps_hbar(0, 0);
            if g.density() != &want {
                bad.push(format!("d={d} {kind:?}: {g}"));
            }
        }
    }
    Ok(Check::from_witnesses(
        format!("genus0 d<={d_max}"),
        "Coef_{eps^0 hbar^0} G_d = u^(d+2)/(d+2)!",
        bad,
    ))
}

fn merged_with(base: IntegralTable, p: &SuiteParams) -> Result<IntegralTable> {
    match &p.tables {
        Some(t) => base.merged(t),
        None => Ok(base),
    }
}

pub fn main_checks(p: &SuiteParams) -> Result<Vec<Check>> {
    let slice = p.g_max.clamp(1, 3);
    let r = verify_main_identity(0, slice, 1, &closed_form_table(slice))?;
    let mut out = vec![Check::from_report(format!("main closed-form slice g<={slice}"), &r)];
    match &p.tables {
        None => out.push(Check::skip("main tables", "no tables given")),
        Some(_) => {
            let t = merged_with(closed_form_table(p.g_max), p)?;
            for d in 0..=p.d_max {
                let r = verify_main_identity(d, p.g_max, p.n_max, &t)?;
                out.push(Check::from_report(
                    format!("main d={d} g<={} n<={}", p.g_max, p.n_max),
                    &r,
                ));
            }
        }
    }
    Ok(out)
}

pub fn gd_checks(p: &SuiteParams) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let t = closed_form_table(1);
    for kind in [GKind::Stratum, GKind::Dr] {
        let r = verify_g_relation(1, 1, 2, &t, kind)?;
        out.push(Check::from_report(
            format!("gd-relation {kind:?} fixtures d=1 g<=1"),
            &r,
        ));
    }
    match &p.tables {
        None => out.push(Check::skip("gd-relation tables", "no tables given")),
        Some(_) => {
            let t = merged_with(closed_form_table(p.g_max), p)?;
            for d in 1..=p.d_max.max(1) {
                for kind in [GKind::Stratum, GKind::Dr] {
                    let r = verify_g_relation(d, p.g_max, p.n_max, &t, kind)?;
                    out.push(Check::from_report(
                        format!("gd-relation {kind:?} d={d} g<={}", p.g_max),
                        &r,
                    ));
                }
            }
        }
    }
    Ok(out)
}

pub fn conja_checks(p: &SuiteParams) -> Result<Vec<Check>> {
    let fixture = g1_closed_forms();
    let mut out = vec![conja_consistency(
        "conja g1 fixture",
        &fixture,
        &SocleConstants::bundled(),
    )?];
    match &p.tables {
        None => out.push(Check::skip("conja tables", "no tables given")),
        Some(t) => out.push(conja_consistency("conja tables", t, &SocleConstants::from_table(t)?)?),
    }
    Ok(out)
}

/// Every chamber stratum record whose star-graph image is a table DR¹ record must agree with it.
fn conja_consistency(name: &str, t: &IntegralTable, c: &SocleConstants) -> Result<Check> {
    let mut bad = Vec::new();
    let mut compared = 0;
    for rec in t
        .records()
        .filter(|r| r.kind == CycleKind::Stratum && r.pattern.has_negative_constant())
    {
        let key = crate::cycles::RecordKey::new(CycleKind::Dr1, rec.genus, &rec.pattern, rec.psi_exponent, rec.lambda);
        let Some(twisted) = t.get(&key) else { continue };
        let derived = conja_transfer(
            rec.genus,
            &rec.pattern,
            rec.psi_exponent,
            rec.lambda,
            Direction::StratumToTwisted,
            t,
            c,
        )?;
        compared += 1;
        if derived.value != twisted.value {
            bad.push(format!(
                "{key}: table {} vs star graphs {}",
                twisted.value, derived.value
            ));
        }
    }
    Ok(Check::from_witnesses(
        name,
        format!("{compared} DR1 records compared"),
        bad,
    ))
}

pub fn css_checks(p: &SuiteParams) -> Result<Vec<Check>> {
    let mut out = vec![css_one("css g=1 fixture", 1, &g1_twisted_splitting())?];
    match &p.tables {
        None => out.push(Check::skip("css tables", "no tables given")),
        Some(t) => {
            for g in 1..=p.g_max {
                if css_keys(g).iter().all(|k| t.get(k).is_some()) {
                    out.push(css_one(&format!("css g={g} tables"), g, t)?);
                } else {
                    out.push(Check::skip(format!("css g={g} tables"), "records not in tables"));
                }
            }
        }
    }
    Ok(out)
}

fn css_one(name: &str, g: u32, t: &IntegralTable) -> Result<Check> {
    let r = css_split_check(g, t)?;
    let bad = r
        .discrepancies
        .iter()
        .map(|(e, a, b)| {
            format!(
                "g={g} [a^{}]: lhs {} rhs {}",
                e[0],
                crate::exactnum::format_complex(a),
                crate::exactnum::format_complex(b)
            )
        })
        .collect();
    Ok(Check::from_witnesses(
        name,
        format!("a*A = 2g*B - (2g-a)*C at g={g}"),
        bad,
    ))
}

pub fn prop13_checks(p: &SuiteParams) -> Result<Vec<Check>> {
    let r = verify_prop13(0, 1, 2, &g1_closed_forms(), &SocleConstants::bundled())?;
    let mut out = vec![Check::from_report("prop13 g1 fixture d=0", &r)];
    match &p.tables {
        None => out.push(Check::skip("prop13 tables", "no tables given")),
        Some(t) => {
            let c = SocleConstants::from_table(t)?;
            for d in 0..=p.d_max {
                let r = verify_prop13(d, p.g_max, p.n_max, t, &c)?;
                out.push(Check::from_report(
                    format!("prop13 d={d} g<={} n<={}", p.g_max, p.n_max),
                    &r,
                ));
            }
        }
    }
    Ok(out)
}

fn random_coeff(rng: &mut ChaCha8Rng) -> ComplexRational {
    ComplexRational::new(
        rat(rng.gen_range(-9..10), rng.gen_range(1..5)),
        int(rng.gen_range(-2..3)),
    )
}

fn random_diffpoly(rng: &mut ChaCha8Rng) -> DiffPoly {
    let terms = rng.gen_range(0..6);
    DiffPoly::from_terms((0..terms).map(|_| {
        let jets = (0..rng.gen_range(0..4)).map(|_| rng.gen_range(0..4)).collect();
        let m = Monomial::new(jets)
            .eps(rng.gen_range(0..3))
            .hbar(rng.gen_range(0..2))
            .mu(rng.gen_range(0..2));
        (m, random_coeff(rng))
    }))
}

fn random_multipoly(rng: &mut ChaCha8Rng, arity: usize) -> MultiPoly {
    let terms = rng.gen_range(0..6);
    MultiPoly::from_terms(
        arity,
        (0..terms).map(|_| ((0..arity).map(|_| rng.gen_range(0..5)).collect(), random_coeff(rng))),
    )
}

/// Randomized algebra properties; the seed fixes every case.
pub fn algebra_checks(seed: u64, cases: usize) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tag = |s: &str| format!("algebra {s} (seed {seed}, {cases} cases)");
    let mut basis = Vec::new();
    let mut exact = Vec::new();
    let mut shift = Vec::new();
    for case in 0..cases {
        let arity = rng.gen_range(1..4);
        let p = random_multipoly(&mut rng, arity);
        if p.to_factorial_basis().to_monomial_basis() != p {
            basis.push(format!("case {case}: {p}"));
        }
        let f = FactorialPoly::from_terms(arity, p.terms().map(|(e, c)| (e.clone(), c.clone())));
        if f.to_monomial_basis().to_factorial_basis() != f {
            basis.push(format!("case {case}: factorial {f}"));
        }
        let q = random_diffpoly(&mut rng);
        let dq = q.d_x();
        if !dq.euler_lagrange().is_zero() || !LocalFunctional::new(&dq).map(|l| l.is_zero()).unwrap_or(false) {
            exact.push(format!("case {case}: d_x({q})"));
        }
        let zero = ShiftConstants(std::collections::BTreeMap::from([(1, DiffPoly::zero())]));
        if shift_substitution(&q, &zero) != q {
            shift.push(format!("case {case}: {q}"));
        }
    }
    let mut grade = Vec::new();
    let mut highest = Vec::new();
    for case in 0..cases.min(12) {
        let g_max = rng.gen_range(0..4);
        // closed forms only cover psi_0^1, so d = 1 stays in genus zero
        let d = if g_max == 0 {
            rng.gen_range(-1..3)
        } else {
            rng.gen_range(-1..1)
        };
        let t = closed_form_table(g_max);
        match build_hd(HamiltonianKind::Md, d, g_max, 1, &t) {
            Ok(h) => grade.extend(
                h.terms()
                    .filter(|(m, _)| m.grade() != 0 || m.xinv != 0)
                    .map(|(m, _)| format!("case {case} d={d} g<={g_max}: {m} [{}]", m.provenance())),
            ),
            Err(e) => grade.push(format!("case {case} d={d} g<={g_max}: {e}")),
        }
        match build_hd(HamiltonianKind::Dr, d, g_max, 1, &t) {
            Ok(h) => highest.extend(
                h.terms()
                    .filter(|(m, _)| m.grade() > 0 || (m.hbar == 0 && m.grade() != 0))
                    .map(|(m, _)| format!("case {case} d={d} g<={g_max}: {m} [{}]", m.provenance())),
            ),
            Err(e) => highest.push(format!("case {case} d={d} g<={g_max}: {e}")),
        }
    }
    vec![
        Check::from_witnesses(tag("basis round trip"), "monomial and falling-factorial bases", basis),
        Check::from_witnesses(
            tag("exact densities"),
            "var_derivative and normal form kill Im d_x",
            exact,
        ),
        Check::from_witnesses(tag("grade zero"), "H_d homogeneous of degree 0 without 1/x", grade),
        Check::from_witnesses(
            tag("DR top degree"),
            "H_d^DR has no positive degree; classical part degree 0",
            highest,
        ),
        Check::from_witnesses(tag("zero shift"), "shift with c = 0 is the identity", shift),
    ]
}
