use num_traits::Signed;

use super::{CycleKind, IntegralRecord, IntegralTable, WeightPattern};
use crate::exactnum::{bernoulli, factorial, from_bigint, real, Rational};
use crate::polynomials::{FactorialPoly, MultiPoly};

const G1_CLOSED_FORMS: &str = include_str!("../../fixtures/g1_closed_forms.json");
const G1_TWISTED_SPLITTING: &str = include_str!("../../fixtures/g1_twisted_splitting.json");

fn bernoulli_ratio(g: u32) -> Rational {
    bernoulli(2 * g as usize).abs() / from_bigint(factorial(2 * i64::from(g)).expect("nonnegative"))
}

/// `∫_{DR_g(0,-a,a)} ψ_0 λ_g λ_{g-1} = a^{2g} |B_{2g}| / (2g)!`.
pub fn dr_two_point_poly(g: u32) -> MultiPoly {
    MultiPoly::from_terms(1, [(vec![2 * g], real(bernoulli_ratio(g)))])
}

/// `∫_{H_g(-1, m, 2g-1-m)} ψ_0 λ_g λ_{g-1} = m^{(2g)} |B_{2g}| / (2g)!`, falling factorial.
pub fn stratum_nice_identity_poly(g: u32) -> FactorialPoly {
    FactorialPoly::from_terms(1, [(vec![2 * g], real(bernoulli_ratio(g)))])
}

/// The two-point DR and stratum integrals against `ψ_0 λ_g λ_{g-1}` for `1 <= g <= g_max`.
pub fn closed_form_table(g_max: u32) -> IntegralTable {
    let mut table = IntegralTable::new(format!("closed forms, g <= {g_max}"));
    for g in 1..=g_max {
        let dr = IntegralRecord::new(
            CycleKind::Dr,
            g,
            WeightPattern::dr_h(1),
            1,
            (g, g - 1),
            dr_two_point_poly(g),
        );
        let st = IntegralRecord::new(
            CycleKind::Stratum,
            g,
            WeightPattern::stratum_h(g, 1),
            1,
            (g, g - 1),
            stratum_nice_identity_poly(g).to_monomial_basis(),
        );
        table.insert(dr.expect("valid closed form")).expect("fresh key");
        table.insert(st.expect("valid closed form")).expect("fresh key");
    }
    table
}

/// Bundled genus-1 values: the two closed forms and the matching twisted DR integral.
pub fn g1_closed_forms() -> IntegralTable {
    IntegralTable::from_json(G1_CLOSED_FORMS).expect("bundled fixture is valid")
}

/// Bundled genus-1 twisted DR integrals entering the splitting relation.
pub fn g1_twisted_splitting() -> IntegralTable {
    IntegralTable::from_json(G1_TWISTED_SPLITTING).expect("bundled fixture is valid")
}
