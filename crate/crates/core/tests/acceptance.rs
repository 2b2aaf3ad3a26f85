//! One line per acceptance criterion; exit status 1 if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::{One, Signed};

use moduli_socle::checks::{algebra_checks, Status};
use moduli_socle::cycles::{closed_form_table, stratum_nice_identity_poly, IntegralTable};
use moduli_socle::exactnum::{
    bernoulli, factorial, format_complex, format_rational, from_bigint, imag_unit, rat, real,
};
use moduli_socle::exactnum::{ComplexRational, Rational};
use moduli_socle::hierarchy::{
    build_g1_dr, build_g1_strata, build_gd, build_hd, verify_main_identity, DiffPoly, GKind, HamiltonianKind,
    LocalFunctional, Monomial,
};
use moduli_socle::series::{bernoulli_convolution, coth_power_residue, jg, JgRoute};
use moduli_socle::socle::{cg, faber_two_point_kappa, ig_socle, KappaPartition, SocleSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

const BUDGET: Duration = Duration::from_secs(10);

fn abs_b(two_g: u32) -> Rational {
    bernoulli(two_g as usize).abs()
}

fn fact(n: u32) -> Rational {
    from_bigint(factorial(i64::from(n)).unwrap())
}

fn within_budget(start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t < BUDGET {
        Ok(t)
    } else {
        Err(format!("took {t:.2?}, budget {BUDGET:?}"))
    }
}

fn ig_values() -> Outcome {
    let start = Instant::now();
    let want = [
        rat(1, 6),
        rat(1, 30),
        rat(1, 42),
        rat(1, 30),
        rat(5, 66),
        rat(691, 2730),
    ];
    for (g, w) in (1..=6u32).zip(want) {
        let got = ig_socle(g).map_err(|e| e.to_string())?;
        if got != w || got != abs_b(2 * g) {
            return Err(format!(
                "g={g}: {} expected {}",
                format_rational(&got),
                format_rational(&w)
            ));
        }
    }
    let t = within_budget(start)?;
    Ok(format!("g=1..6 in {t:.2?}"))
}

fn jg_routes() -> Outcome {
    let start = Instant::now();
    for route in JgRoute::ALL {
        for g in 1..=30 {
            let v = jg(g, route).map_err(|e| e.to_string())?;
            if !v.is_one() {
                return Err(format!("{} g={g}: {}", route.name(), format_rational(&v)));
            }
        }
    }
    let t = within_budget(start)?;
    Ok(format!("3 routes, g=1..30 in {t:.2?}"))
}

fn coth_lemma() -> Outcome {
    for k in 0..=15 {
        let (a, b) = (coth_power_residue(k), bernoulli_convolution(k));
        if !a.is_one() || !b.is_one() {
            return Err(format!(
                "k={k}: residue {} convolution {}",
                format_rational(&a),
                format_rational(&b)
            ));
        }
    }
    Ok("k=0..15".into())
}

fn faber_cg() -> Outcome {
    for g in 1..=8u32 {
        let spec = SocleSpec::new(g, g - 1, KappaPartition::empty()).map_err(|e| e.to_string())?;
        let f = faber_two_point_kappa(&spec);
        let c = cg(g).map_err(|e| e.to_string())?;
        if f != c {
            return Err(format!(
                "g={g}: faber {} c_g {}",
                format_rational(&f),
                format_rational(&c)
            ));
        }
    }
    let (c1, c2) = (cg(1).unwrap(), cg(2).unwrap());
    if c1 != rat(1, 24) || c2 != rat(1, 2880) {
        return Err(format!("c_1 {} c_2 {}", format_rational(&c1), format_rational(&c2)));
    }
    Ok("g=1..8, c_1 = 1/24, c_2 = 1/2880".into())
}

fn nice_chain() -> Outcome {
    for g in 1..=4u32 {
        let p = stratum_nice_identity_poly(g);
        let top = p.eval_int(&[2 * i64::from(g)]).map_err(|e| e.to_string())?;
        let ig = real(ig_socle(g).map_err(|e| e.to_string())?);
        if top != ig {
            return Err(format!(
                "g={g} m={}: {} vs I_g {}",
                2 * g,
                format_complex(&top),
                format_complex(&ig)
            ));
        }
        for m in 0..2 * i64::from(g) {
            let v = p.eval_int(&[m]).map_err(|e| e.to_string())?;
            if v != ComplexRational::default() {
                return Err(format!("g={g} m={m}: {}", format_complex(&v)));
            }
        }
    }
    Ok("g=1..4, zeros at m<2g".into())
}

fn g1_match() -> Outcome {
    let strata = build_g1_strata(6);
    let dr = build_g1_dr(6);
    if strata != dr {
        return Err(format!("strata {strata} vs DR {dr}"));
    }
    // Independent density u^3/6 + sum_g |B_2g|/(2(2g)!) (ε^{2g}μ^{g-1} - iℏε^{2g-2}μ^g) u_0 u_{2g}.
    let mut p = DiffPoly::monomial(Monomial::new(vec![0, 0, 0]), real(rat(1, 6)));
    for g in 1..=6u32 {
        let c = real(abs_b(2 * g) / (Rational::from_integer(2.into()) * fact(2 * g)));
        p.add_term(Monomial::new(vec![0, 2 * g]).eps(2 * g).mu(g - 1), c.clone());
        p.add_term(
            Monomial::new(vec![0, 2 * g]).eps(2 * g - 2).hbar(1).mu(g),
            -imag_unit() * c,
        );
    }
    let want = LocalFunctional::new(&p).map_err(|e| e.to_string())?;
    if strata != want {
        return Err(format!("got {strata}, expected {want}"));
    }
    Ok("g_max=6, coefficients |B_2g|/(2(2g)!)".into())
}

fn main_identity_slice() -> Outcome {
    let t = closed_form_table(3);
    let r = verify_main_identity(0, 3, 1, &t).map_err(|e| e.to_string())?;
    if !r.passed() {
        return Err(r.to_text());
    }
    let h = build_hd(HamiltonianKind::Md, 0, 3, 1, &t).map_err(|e| e.to_string())?;
    let h_dr = build_hd(HamiltonianKind::Dr, 0, 3, 1, &t)
        .map_err(|e| e.to_string())?
        .degree_part(0);
    for g in 1..=3u32 {
        let m = Monomial::new(vec![2 * g]).eps(2 * g).mu(g - 1);
        let top = real(abs_b(2 * g) / fact(2 * g));
        if h.coeff(&m) != top || h_dr.coeff(&m) != top {
            return Err(format!(
                "g={g} {m}: stratum {} DR {} expected {}",
                format_complex(&h.coeff(&m)),
                format_complex(&h_dr.coeff(&m)),
                format_complex(&top)
            ));
        }
    }
    Ok(format!("d=0 g<=3 n=1, {} monomials compared", r.compared))
}

fn genus_zero() -> Outcome {
    let empty = IntegralTable::default();
    for d in 0..=5i64 {
        let n = d as u32 + 2;
        let want = DiffPoly::monomial(Monomial::new(vec![0; n as usize]), real(fact(n).recip()));
        for kind in [GKind::Stratum, GKind::Dr] {
            let g = build_gd(d, 0, n as usize + 1, &empty, kind).map_err(|e| e.to_string())?;
            let c = g.coef_eps_hbar(0, 0);
            if c.density() != &want {
                return Err(format!("d={d} {kind:?}: {c}"));
            }
        }
    }
    Ok("d=0..5, both constructions".into())
}

fn algebra(seed: u64) -> Outcome {
    let checks = algebra_checks(seed, 256);
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| c.status != Status::Pass)
        .map(|c| format!("{}: {}", c.name, c.witnesses.join("; ")))
        .collect();
    if failed.is_empty() {
        Ok(format!("seed {seed}, {} suites x 256 cases", checks.len()))
    } else {
        Err(format!("seed {seed}: {}", failed.join(" | ")))
    }
}

fn main() -> ExitCode {
    let seed = std::env::var("ACCEPTANCE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let criteria: Vec<Criterion> = vec![
        ("ig_socle(g) = |B_2g| for g=1..6 under 10 s", Box::new(ig_values)),
        ("J_g = 1 by all routes for g=1..30 under 10 s", Box::new(jg_routes)),
        (
            "coth residue = Bernoulli convolution = 1 for k=0..15",
            Box::new(coth_lemma),
        ),
        ("Faber psi^{g-1} engine reproduces c_g for g=1..8", Box::new(faber_cg)),
        (
            "nice-identity polynomial equals I_g at m=2g and vanishes below",
            Box::new(nice_chain),
        ),
        ("G_1 from strata equals G_1 from DR at g_max=6", Box::new(g1_match)),
        (
            "main identity on the closed-form slice, top coefficients |B_2g|/(2g)!",
            Box::new(main_identity_slice),
        ),
        (
            "genus-zero Coef_{eps^0 hbar^0} G_d = u^(d+2)/(d+2)! for d=0..5",
            Box::new(genus_zero),
        ),
        ("algebra properties, randomized", Box::new(move || algebra(seed))),
    ];
    let mut failures = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS {name} ({detail})"),
            Err(why) => {
                failures += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} criteria, {failures} failed", criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
