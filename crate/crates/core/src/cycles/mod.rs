//! Integrals of ψ and λ classes over DR cycles, twisted DR cycles and strata
//! of differentials, stored as polynomials in the variable weights.
//!
//! Values come from three places, tried in order by [`lookup`]:
//! structural vanishing (dimension, `λ_g^2 = 0`, the residue condition),
//! genus zero (every cycle is the fundamental class of `M̄_{0,k}`), and
//! finally an [`IntegralTable`].

mod closed;
mod conja;
mod table;

use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exactnum::{int, real, ComplexRational};
use crate::polynomials::MultiPoly;

pub use closed::{
    closed_form_table, dr_two_point_poly, g1_closed_forms, g1_twisted_splitting, stratum_nice_identity_poly,
};
pub use conja::{
    conja_table, conja_transfer, css_keys, css_split_check, ig_from_twisted_linear, satellite_weight, star_graph_terms,
    CssReport, Direction, MuEpsPoly, SocleConstants, StarGraphTerm,
};
pub use table::{
    load_table, parse_table, validate, IntegralTable, RawRecord, TableFile, ValidationReport, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CycleKind {
    Dr,
    Dr1,
    Stratum,
}

impl CycleKind {
    pub const ALL: [CycleKind; 3] = [CycleKind::Dr, CycleKind::Dr1, CycleKind::Stratum];

    pub fn name(self) -> &'static str {
        match self {
            CycleKind::Dr => "DR",
            CycleKind::Dr1 => "DR1",
            CycleKind::Stratum => "STRATUM",
        }
    }

    /// Constant that the weights of a pattern must add up to.
    pub fn weight_sum(self, genus: u32) -> i64 {
        match self {
            CycleKind::Dr => 0,
            CycleKind::Dr1 | CycleKind::Stratum => 2 * i64::from(genus) - 2,
        }
    }
}

impl fmt::Display for CycleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CycleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown cycle kind {s:?}")))
    }
}

/// Marked-point weights, each an affine form `c_0 + c_1 v_1 + ... + c_n v_n`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeightPattern {
    arity: usize,
    entries: Vec<Vec<i64>>,
}

impl WeightPattern {
    /// Checks that every entry has `arity + 1` coefficients and that the
    /// entries add up to the constant `sum`.
    pub fn new(arity: usize, entries: Vec<Vec<i64>>, sum: i64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("a weight pattern needs at least one marked point".into()));
        }
        if let Some(bad) = entries.iter().position(|e| e.len() != arity + 1) {
            return Err(Error::Domain(format!(
                "pattern entry {bad} has {} coefficients, expected {}",
                entries[bad].len(),
                arity + 1
            )));
        }
        let mut total = vec![0i64; arity + 1];
        for e in &entries {
            for (t, c) in total.iter_mut().zip(e) {
                *t += c;
            }
        }
        let mut want = vec![0i64; arity + 1];
        want[0] = sum;
        if total != want {
            return Err(Error::Domain(format!(
                "pattern entries sum to {total:?}, expected {want:?}"
            )));
        }
        Ok(Self { arity, entries })
    }

    /// Entries without a sum check, for internal constructions that preserve it.
    fn raw(arity: usize, entries: Vec<Vec<i64>>) -> Self {
        Self { arity, entries }
    }

    /// `(-1, v_1, ..., v_n, 2g-1 - sum v)`.
    pub fn stratum_h(genus: u32, n: usize) -> Self {
        let mut entries = vec![unit(n, None, -1)];
        entries.extend((0..n).map(|j| unit(n, Some(j), 0)));
        let mut last = vec![-1i64; n + 1];
        last[0] = 2 * i64::from(genus) - 1;
        entries.push(last);
        Self::raw(n, entries)
    }

    /// `(0, v_1, ..., v_n, -sum v)`.
    pub fn dr_h(n: usize) -> Self {
        let mut entries = vec![unit(n, None, 0)];
        entries.extend((0..n).map(|j| unit(n, Some(j), 0)));
        let mut last = vec![-1i64; n + 1];
        last[0] = 0;
        entries.push(last);
        Self::raw(n, entries)
    }

    /// A pattern with no variables.
    pub fn constants(weights: &[i64]) -> Self {
        Self::raw(0, weights.iter().map(|&w| vec![w]).collect())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn entries(&self) -> &[Vec<i64>] {
        &self.entries
    }

    /// Number of marked points.
    pub fn points(&self) -> usize {
        self.entries.len()
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(|e| e[1..].iter().all(|&c| c == 0))
    }

    /// Point 0 stays first; the remaining entries are sorted.
    pub fn canonical(&self) -> Self {
        let mut entries = self.entries.clone();
        entries[1..].sort();
        Self::raw(self.arity, entries)
    }

    pub fn eval(&self, point: &[i64]) -> Result<Vec<i64>> {
        if point.len() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                got: point.len(),
            });
        }
        Ok(self
            .entries
            .iter()
            .map(|e| e[0] + e[1..].iter().zip(point).map(|(c, v)| c * v).sum::<i64>())
            .collect())
    }

    /// Appends constant entries (the satellite weights of a star graph).
    pub fn with_appended(&self, weights: &[i64]) -> Self {
        let mut entries = self.entries.clone();
        for &w in weights {
            let mut e = vec![0i64; self.arity + 1];
            e[0] = w;
            entries.push(e);
        }
        Self::raw(self.arity, entries)
    }

    /// Some entry is a strictly negative constant, so every evaluation is meromorphic.
    pub fn has_negative_constant(&self) -> bool {
        self.entries.iter().any(|e| e[0] < 0 && e[1..].iter().all(|&c| c == 0))
    }
}

fn unit(n: usize, var: Option<usize>, c0: i64) -> Vec<i64> {
    let mut e = vec![0i64; n + 1];
    e[0] = c0;
    if let Some(j) = var {
        e[j + 1] = 1;
    }
    e
}

impl fmt::Display for WeightPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .entries
            .iter()
            .map(|e| format!("[{}]", e.iter().map(i64::to_string).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

/// Orders a λ-pair as `(max, min)`; the integrand is symmetric.
pub fn canonical_lambda((l1, l2): (u32, u32)) -> (u32, u32) {
    (l1.max(l2), l1.min(l2))
}

/// Identifies one integral `∫_{kind_g(pattern)} ψ_0^psi λ_{l1} λ_{l2}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordKey {
    pub kind: CycleKind,
    pub genus: u32,
    pub pattern: WeightPattern,
    pub psi: u32,
    pub lambda: (u32, u32),
}

impl RecordKey {
    pub fn new(kind: CycleKind, genus: u32, pattern: &WeightPattern, psi: u32, lambda: (u32, u32)) -> Self {
        Self {
            kind,
            genus,
            pattern: pattern.canonical(),
            psi,
            lambda: canonical_lambda(lambda),
        }
    }
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} g={} pattern={} psi={} lambda=({},{})",
            self.kind, self.genus, self.pattern, self.psi, self.lambda.0, self.lambda.1
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralRecord {
    pub kind: CycleKind,
    pub genus: u32,
    pub pattern: WeightPattern,
    pub psi_exponent: u32,
    pub lambda: (u32, u32),
    pub value: MultiPoly,
}

impl IntegralRecord {
    pub fn new(
        kind: CycleKind,
        genus: u32,
        pattern: WeightPattern,
        psi_exponent: u32,
        lambda: (u32, u32),
        value: MultiPoly,
    ) -> Result<Self> {
        WeightPattern::new(pattern.arity, pattern.entries.clone(), kind.weight_sum(genus))?;
        if value.arity() != pattern.arity() {
            return Err(Error::Arity {
                expected: pattern.arity(),
                got: value.arity(),
            });
        }
        if lambda.0 > genus || lambda.1 > genus {
            return Err(Error::Domain(format!("λ-pair {lambda:?} exceeds genus {genus}")));
        }
        Ok(Self {
            kind,
            genus,
            pattern,
            psi_exponent,
            lambda: canonical_lambda(lambda),
            value,
        })
    }

    pub fn key(&self) -> RecordKey {
        RecordKey::new(self.kind, self.genus, &self.pattern, self.psi_exponent, self.lambda)
    }

    /// Value at an integer point. Strata values are only trusted where some
    /// weight is negative.
    pub fn evaluate(&self, point: &[i64]) -> Result<ComplexRational> {
        if self.kind == CycleKind::Stratum {
            let weights = self.pattern.eval(point)?;
            if !weights.iter().any(|&w| w < 0) {
                let msg = format!("{} at {point:?} has weights {weights:?} with no pole", self.key());
                log::warn!("outside the meromorphic chamber: {msg}");
                return Err(Error::OutsideChamber(msg));
            }
        }
        self.value.eval_int(point)
    }
}

/// Dimension of the cycle, or `None` for unstable `(g, k)`.
pub fn cycle_dimension(kind: CycleKind, genus: u32, pattern: &WeightPattern) -> Option<i64> {
    let g = i64::from(genus);
    let k = pattern.points() as i64;
    if 2 * g - 2 + k <= 0 {
        return None;
    }
    let holomorphic = kind == CycleKind::Stratum && pattern.is_constant() && pattern.entries.iter().all(|e| e[0] >= 0);
    Some(if holomorphic { 2 * g - 2 + k } else { 2 * g - 3 + k })
}

/// The value when it is forced without consulting a table.
pub fn structural_value(key: &RecordKey) -> Option<MultiPoly> {
    let arity = key.pattern.arity();
    let zero = Some(MultiPoly::zero(arity));
    let (l1, l2) = key.lambda;
    if l1 > key.genus {
        return zero;
    }
    let dim = cycle_dimension(key.kind, key.genus, &key.pattern)?;
    if i64::from(key.psi + l1 + l2) != dim {
        return zero;
    }
    if key.genus >= 1 && l2 == key.genus {
        return zero;
    }
    if key.genus == 0 {
        // λ_0 = 1 and ψ_0^{k-3} integrates to 1 on M̄_{0,k}
        return Some(MultiPoly::constant(arity, real(int(1))));
    }
    if key.kind == CycleKind::Stratum && key.pattern.is_constant() {
        let negative: Vec<i64> = key.pattern.entries.iter().map(|e| e[0]).filter(|&w| w < 0).collect();
        if negative == [-1] {
            // a single simple pole has nonzero residue
            return zero;
        }
    }
    None
}

/// Resolves an integral from the structural rules or the table; the error is the missing key.
pub fn lookup(table: &IntegralTable, key: &RecordKey) -> std::result::Result<MultiPoly, RecordKey> {
    if let Some(v) = structural_value(key) {
        return Ok(v);
    }
    table.get(key).map(|r| r.value.clone()).ok_or_else(|| key.clone())
}

/// Collects the keys of failed lookups for a single [`Error::TableRequired`].
#[derive(Debug, Default)]
pub struct MissingKeys(Vec<RecordKey>);

impl MissingKeys {
    pub fn resolve(&mut self, table: &IntegralTable, key: &RecordKey) -> MultiPoly {
        match lookup(table, key) {
            Ok(v) => v,
            Err(k) => {
                let arity = k.pattern.arity();
                if !self.0.contains(&k) {
                    self.0.push(k);
                }
                MultiPoly::zero(arity)
            }
        }
    }

    pub fn push(&mut self, key: RecordKey) {
        if !self.0.contains(&key) {
            self.0.push(key);
        }
    }

    pub fn extend(&mut self, other: MissingKeys) {
        for k in other.0 {
            self.push(k);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_result<T>(mut self, value: T) -> Result<T> {
        if self.0.is_empty() {
            return Ok(value);
        }
        self.0.sort();
        Err(Error::TableRequired(self.0.iter().map(RecordKey::to_string).collect()))
    }
}

/// Exponents where two polynomials differ, with both coefficients.
pub fn poly_difference(a: &MultiPoly, b: &MultiPoly) -> Vec<(Vec<u32>, ComplexRational, ComplexRational)> {
    let mut keys: Vec<&Vec<u32>> = a.terms().map(|(e, _)| e).chain(b.terms().map(|(e, _)| e)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|e| {
            let x = a.coeff(e).unwrap_or_else(|_| ComplexRational::zero());
            let y = b.coeff(e).unwrap_or_else(|_| ComplexRational::zero());
            (x != y).then(|| (e.clone(), x, y))
        })
        .collect()
}
