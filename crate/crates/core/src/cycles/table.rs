use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CycleKind, IntegralRecord, RecordKey, WeightPattern};
use crate::error::{Error, Result};
use crate::polynomials::MultiPoly;

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk form of a table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    pub schema_version: u32,
    pub provenance: String,
    pub records: Vec<RawRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRecord {
    pub cycle: String,
    pub genus: u32,
    pub n: usize,
    pub pattern: Vec<Vec<i64>>,
    pub psi_exponent: u32,
    pub lambda: [u32; 2],
    pub value: BTreeMap<String, String>,
}

impl RawRecord {
    fn convert(&self) -> Result<IntegralRecord> {
        let kind: CycleKind = self.cycle.parse()?;
        let pattern = WeightPattern::new(self.n, self.pattern.clone(), kind.weight_sum(self.genus))?;
        let value = MultiPoly::from_key_map(self.n, &self.value)?;
        IntegralRecord::new(
            kind,
            self.genus,
            pattern,
            self.psi_exponent,
            (self.lambda[0], self.lambda[1]),
            value,
        )
    }

    fn from_record(r: &IntegralRecord) -> Self {
        Self {
            cycle: r.kind.name().to_string(),
            genus: r.genus,
            n: r.pattern.arity(),
            pattern: r.pattern.entries().to_vec(),
            psi_exponent: r.psi_exponent,
            lambda: [r.lambda.0, r.lambda.1],
            value: r.value.to_key_map(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub records: usize,
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Degree bound that a record's polynomial must respect.
fn degree_issue(r: &IntegralRecord) -> Option<String> {
    let cap = 2 * r.genus;
    match r.kind {
        CycleKind::Dr | CycleKind::Dr1 => {
            let deg = r.value.total_degree()?;
            (deg > cap).then(|| format!("total degree {deg} exceeds 2g = {cap}"))
        }
        CycleKind::Stratum => (0..r.value.arity()).find_map(|v| {
            let deg = r.value.degree_in(v)?;
            (deg > cap).then(|| format!("degree {deg} in variable {} exceeds 2g = {cap}", v + 1))
        }),
    }
}

/// Checks every record and reports all problems with their record index.
pub fn validate(file: &TableFile) -> ValidationReport {
    let mut report = ValidationReport {
        records: file.records.len(),
        issues: Vec::new(),
    };
    if file.schema_version != SCHEMA_VERSION {
        report.issues.push(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            file.schema_version
        ));
        return report;
    }
    let mut seen: BTreeMap<RecordKey, usize> = BTreeMap::new();
    for (i, raw) in file.records.iter().enumerate() {
        let rec = match raw.convert() {
            Ok(r) => r,
            Err(e) => {
                report.issues.push(format!("record {i}: {e}"));
                continue;
            }
        };
        if let Some(msg) = degree_issue(&rec) {
            report.issues.push(format!("record {i} ({}): {msg}", rec.key()));
        }
        match seen.entry(rec.key()) {
            Entry::Occupied(o) => {
                report
                    .issues
                    .push(format!("record {i} ({}): duplicates record {}", o.key(), o.get()));
            }
            Entry::Vacant(v) => {
                v.insert(i);
            }
        }
    }
    report
}

pub fn parse_table(text: &str) -> Result<TableFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("table file: {e}")))
}

pub fn load_table(path: impl AsRef<Path>) -> Result<IntegralTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    IntegralTable::from_file(&parse_table(&text)?)
}

/// Records keyed by their canonical [`RecordKey`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntegralTable {
    pub provenance: String,
    records: BTreeMap<RecordKey, IntegralRecord>,
}

impl IntegralTable {
    pub fn new(provenance: impl Into<String>) -> Self {
        Self {
            provenance: provenance.into(),
            records: BTreeMap::new(),
        }
    }

    pub fn from_file(file: &TableFile) -> Result<Self> {
        let report = validate(file);
        if !report.is_valid() {
            return Err(Error::InvalidTable(report.issues));
        }
        let mut table = Self::new(file.provenance.clone());
        for raw in &file.records {
            table.insert(raw.convert()?)?;
        }
        Ok(table)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&parse_table(text)?)
    }

    pub fn insert(&mut self, record: IntegralRecord) -> Result<()> {
        if let Some(msg) = degree_issue(&record) {
            return Err(Error::InvalidTable(vec![format!("{}: {msg}", record.key())]));
        }
        match self.records.entry(record.key()) {
            Entry::Occupied(o) => Err(Error::InvalidTable(vec![format!("duplicate record {}", o.key())])),
            Entry::Vacant(v) => {
                v.insert(record);
                Ok(())
            }
        }
    }

    /// Inserts or overwrites.
    pub fn upsert(&mut self, record: IntegralRecord) {
        self.records.insert(record.key(), record);
    }

    pub fn get(&self, key: &RecordKey) -> Option<&IntegralRecord> {
        self.records.get(key)
    }

    pub fn records(&self) -> impl Iterator<Item = &IntegralRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Union of two tables; records present in both must agree.
    pub fn merged(&self, other: &IntegralTable) -> Result<Self> {
        let mut out = self.clone();
        if !other.provenance.is_empty() && other.provenance != self.provenance {
            out.provenance = if self.provenance.is_empty() {
                other.provenance.clone()
            } else {
                format!("{} + {}", self.provenance, other.provenance)
            };
        }
        for (key, rec) in &other.records {
            match out.records.get(key) {
                Some(existing) if existing.value != rec.value => {
                    return Err(Error::InvalidTable(vec![format!("conflicting values for {key}")]));
                }
                Some(_) => {}
                None => {
                    out.records.insert(key.clone(), rec.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn to_file(&self) -> TableFile {
        TableFile {
            schema_version: SCHEMA_VERSION,
            provenance: self.provenance.clone(),
            records: self.records.values().map(RawRecord::from_record).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("table serializes")
    }
}
