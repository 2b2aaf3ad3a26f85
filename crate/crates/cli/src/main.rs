use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use moduli_socle::checks::{run_suite, Check, Status, SuiteParams};
use moduli_socle::cycles::{
    closed_form_table, conja_table, g1_closed_forms, load_table, parse_table, validate, Direction, IntegralTable,
    SocleConstants,
};
use moduli_socle::exactnum::{bernoulli, combinatorics, format_complex, format_rational, CombinatoricsKind};
use moduli_socle::hierarchy::{
    build_gd, build_hd, verify_g_relation, verify_main_identity, verify_prop13, DiffPoly, GKind, HamiltonianKind,
    IdentityReport,
};
use moduli_socle::series::{cosh, coth, jg, s_function, sinh, JgRoute};
use moduli_socle::socle::{cg, faber_two_point_kappa, ig_socle, kappa1_power_expansion, KappaPartition, SocleSpec};
use moduli_socle::Error;

#[derive(Parser)]
#[command(
    name = "moduli-socle",
    version,
    about = "Exact Hodge integrals, hierarchy Hamiltonians and their identities"
)]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Seed for randomized checks; echoed in every report.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Exact combinatorial constants.
    Compute(ComputeArgs),
    /// Socle integrals over two-pointed curves.
    #[command(subcommand)]
    Socle(SocleCmd),
    /// Truncated Laurent series and the J_g routes.
    #[command(subcommand)]
    Series(SeriesCmd),
    /// Hamiltonian densities and their identities.
    #[command(subcommand)]
    Hier(HierCmd),
    /// Integral table files.
    #[command(subcommand)]
    Table(TableCmd),
}

#[derive(Args, Clone)]
struct Bounds {
    #[arg(long, default_value_t = 3)]
    gmax: u32,
    #[arg(long, default_value_t = 2)]
    nmax: usize,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    d: i64,
    /// Table files, merged; defaults to MODULI_SOCLE_TABLES (colon separated).
    #[arg(long, env = "MODULI_SOCLE_TABLES", value_delimiter = ':')]
    tables: Vec<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// ig, jg, coth, faber, nice, g1, genus0, main, gd-relation, conja, css, prop13, algebra or all.
    suite: String,
    #[command(flatten)]
    bounds: Bounds,
    /// Comma-separated J_g routes, or `all`.
    #[arg(long, default_value = "all")]
    routes: String,
    /// Random cases per randomized property.
    #[arg(long, default_value_t = 64)]
    cases: usize,
}

#[derive(Args)]
struct ComputeArgs {
    /// bernoulli, factorial, double-factorial, binomial, multinomial, falling-factorial.
    what: String,
    #[arg(long)]
    n: Option<i64>,
    /// Further integer arguments, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    args: Vec<i64>,
}

#[derive(Subcommand)]
enum SocleCmd {
    /// I_g from the Faber expansion.
    Ig {
        #[arg(long)]
        g: u32,
    },
    /// c_g.
    Cg {
        #[arg(long)]
        g: u32,
    },
    /// Two-point Faber integral with κ insertions.
    Faber {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        d: u32,
        /// Comma-separated κ indices; empty for none.
        #[arg(long, default_value = "")]
        kappa: String,
    },
    /// Coefficients of exp(-κ_1 t) at t^n.
    Kappa {
        #[arg(long)]
        n: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SeriesFn {
    Sinh,
    Cosh,
    Coth,
    S,
}

#[derive(Subcommand)]
enum SeriesCmd {
    /// One `order: p/q` line per coefficient.
    Dump {
        #[arg(long = "fn", value_enum)]
        function: SeriesFn,
        #[arg(long, default_value_t = 8, allow_negative_numbers = true)]
        order: i64,
    },
    /// J_g by one route.
    Jg {
        #[arg(long)]
        g: u32,
        #[arg(long, default_value = "nested_sum")]
        route: String,
    },
}

#[derive(Subcommand)]
enum HierCmd {
    /// Assemble H_d (md), H_d^DR (dr) or H_d^DR1 (dr1).
    Build {
        #[arg(long, default_value = "md")]
        kind: String,
        #[command(flatten)]
        bounds: Bounds,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble the local functional G_d.
    G {
        #[arg(long, default_value = "stratum")]
        kind: String,
        #[command(flatten)]
        bounds: Bounds,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// main, prop13 or gd-relation.
    Verify {
        which: String,
        #[command(flatten)]
        bounds: Bounds,
        /// For gd-relation: stratum or dr.
        #[arg(long, default_value = "stratum")]
        kind: String,
    },
}

#[derive(Subcommand)]
enum TableCmd {
    /// Check a table file and list every problem.
    Validate { file: PathBuf },
    /// Record counts per cycle kind and genus.
    Summary { file: PathBuf },
    /// Write the bundled closed-form records.
    ClosedForms {
        #[arg(long, default_value_t = 3)]
        gmax: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extend a table through the star-graph transfer.
    Conja {
        #[arg(long, default_value = "stratum-to-twisted")]
        direction: String,
        #[arg(long, env = "MODULI_SOCLE_TABLES", value_delimiter = ':', required = true)]
        tables: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Everything a command prints, before formatting.
enum Outcome {
    Value { text: String, json: Value },
    Checks(Vec<Check>),
}

fn load_tables(paths: &[PathBuf]) -> Result<Option<IntegralTable>, Error> {
    let mut merged: Option<IntegralTable> = None;
    for p in paths {
        let t = load_table(p)?;
        merged = Some(match merged {
            None => t,
            Some(m) => m.merged(&t)?,
        });
    }
    Ok(merged)
}

/// Closed-form records up to `--gmax`, the genus-one fixtures, then any user tables.
fn base_table(b: &Bounds) -> Result<IntegralTable, Error> {
    let mut t = closed_form_table(b.gmax).merged(&g1_closed_forms())?;
    if let Some(user) = load_tables(&b.tables)? {
        t = t.merged(&user)?;
    }
    Ok(t)
}

fn parse_routes(s: &str) -> Result<Vec<JgRoute>, Error> {
    if s == "all" {
        return Ok(JgRoute::ALL.to_vec());
    }
    s.split(',').map(|r| r.trim().parse()).collect()
}

fn write_or_print(out: &Option<PathBuf>, text: String) -> Result<String, Error> {
    match out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            Ok(format!("wrote {}\n", path.display()))
        }
        None => Ok(text),
    }
}

fn poly_json(p: &DiffPoly) -> Value {
    Value::Array(
        p.terms()
            .map(|(m, c)| {
                json!({
                    "jets": m.jets, "eps": m.eps, "hbar": m.hbar, "mu": m.mu, "xinv": m.xinv,
                    "coeff": format_complex(c),
                })
            })
            .collect(),
    )
}

fn report_check(name: &str, r: &IdentityReport) -> Check {
    let text = r.to_text();
    let mut lines = text.lines();
    let head = lines.next().unwrap_or_default().to_string();
    let witnesses: Vec<String> = lines.map(|l| l.trim().to_string()).collect();
    let status = if r.passed() { Status::Pass } else { Status::Fail };
    Check {
        name: name.to_string(),
        status,
        detail: head,
        witnesses,
    }
}

fn rational_value(r: &moduli_socle::exactnum::Rational) -> Outcome {
    let s = format_rational(r);
    Outcome::Value {
        text: format!("{s}\n"),
        json: json!(s),
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    match &cli.command {
        Command::Verify(v) => {
            let params = SuiteParams {
                g_max: v.bounds.gmax,
                n_max: v.bounds.nmax,
                d_max: v.bounds.d,
                tables: load_tables(&v.bounds.tables)?,
                seed: cli.seed,
                cases: v.cases,
                routes: parse_routes(&v.routes)?,
            };
            Ok(Outcome::Checks(run_suite(&v.suite, &params)?))
        }
        Command::Compute(c) => {
            if c.what == "bernoulli" {
                let n = c.n.ok_or_else(|| Error::Usage("bernoulli needs --n".into()))?;
                let n = usize::try_from(n).map_err(|_| Error::Usage("--n must be nonnegative".into()))?;
                return Ok(rational_value(&bernoulli(n)));
            }
            let kind: CombinatoricsKind = c.what.parse()?;
            let args: Vec<i64> = c.n.into_iter().chain(c.args.iter().copied()).collect();
            Ok(rational_value(&combinatorics(kind, &args)?))
        }
        Command::Socle(s) => match s {
            SocleCmd::Ig { g } => Ok(rational_value(&ig_socle(*g)?)),
            SocleCmd::Cg { g } => Ok(rational_value(&cg(*g)?)),
            SocleCmd::Faber { g, d, kappa } => {
                let spec = SocleSpec::new(*g, *d, KappaPartition::parse(kappa)?)?;
                Ok(rational_value(&faber_two_point_kappa(&spec)))
            }
            SocleCmd::Kappa { n } => {
                let terms = kappa1_power_expansion(*n);
                let text = terms
                    .iter()
                    .map(|(p, c)| format!("kappa{p}: {}\n", format_rational(c)))
                    .collect();
                let json = terms
                    .iter()
                    .map(|(p, c)| json!({"kappa": p.parts(), "coeff": format_rational(c)}))
                    .collect();
                Ok(Outcome::Value {
                    text,
                    json: Value::Array(json),
                })
            }
        },
        Command::Series(s) => match s {
            SeriesCmd::Dump { function, order } => {
                let series = match function {
                    SeriesFn::Sinh => sinh(*order),
                    SeriesFn::Cosh => cosh(*order),
                    SeriesFn::Coth => coth(*order),
                    SeriesFn::S => s_function(*order),
                };
                let text = series.dump();
                let json = text.lines().map(|l| json!(l)).collect();
                Ok(Outcome::Value {
                    text,
                    json: Value::Array(json),
                })
            }
            SeriesCmd::Jg { g, route } => Ok(rational_value(&jg(*g, route.parse()?)?)),
        },
        Command::Hier(h) => match h {
            HierCmd::Build { kind, bounds, out } => {
                let kind: HamiltonianKind = kind.parse()?;
                let table = base_table(bounds)?;
                let p = build_hd(kind, bounds.d, bounds.gmax, bounds.nmax, &table)?;
                let json = poly_json(&p);
                Ok(Outcome::Value {
                    text: write_or_print(out, p.to_text())?,
                    json,
                })
            }
            HierCmd::G { kind, bounds, out } => {
                let kind: GKind = kind.parse()?;
                let table = base_table(bounds)?;
                let g = build_gd(bounds.d, bounds.gmax, bounds.nmax, &table, kind)?;
                let json = poly_json(g.density());
                Ok(Outcome::Value {
                    text: write_or_print(out, g.density().to_text())?,
                    json,
                })
            }
            HierCmd::Verify { which, bounds, kind } => {
                let table = base_table(bounds)?;
                let (b, t) = (bounds, &table);
                let report = match which.as_str() {
                    "main" => verify_main_identity(b.d, b.gmax, b.nmax, t)?,
                    "prop13" => verify_prop13(b.d, b.gmax, b.nmax, t, &SocleConstants::from_table(t)?)?,
                    "gd-relation" => verify_g_relation(b.d, b.gmax, b.nmax, t, kind.parse()?)?,
                    other => {
                        return Err(Error::Usage(format!(
                            "unknown identity {other:?} (main, prop13, gd-relation)"
                        )))
                    }
                };
                Ok(Outcome::Checks(vec![report_check(which, &report)]))
            }
        },
        Command::Table(t) => match t {
            TableCmd::Validate { file } => {
                let text = std::fs::read_to_string(file).map_err(|source| Error::Io {
                    path: file.display().to_string(),
                    source,
                })?;
                let report = validate(&parse_table(&text)?);
                let status = if report.is_valid() { Status::Pass } else { Status::Fail };
                Ok(Outcome::Checks(vec![Check {
                    name: format!("validate {}", file.display()),
                    status,
                    detail: format!("{} records", report.records),
                    witnesses: report.issues,
                }]))
            }
            TableCmd::Summary { file } => {
                let table = load_table(file)?;
                let mut counts: std::collections::BTreeMap<(String, u32), usize> = Default::default();
                for r in table.records() {
                    *counts.entry((r.kind.name().to_string(), r.genus)).or_default() += 1;
                }
                let mut text = format!("provenance: {}\nrecords: {}\n", table.provenance, table.len());
                for ((k, g), n) in &counts {
                    text.push_str(&format!("{k} g={g}: {n}\n"));
                }
                let json = json!({
                    "provenance": table.provenance,
                    "records": table.len(),
                    "counts": counts.iter().map(|((k, g), n)| json!({"cycle": k, "genus": g, "records": n})).collect::<Vec<_>>(),
                });
                Ok(Outcome::Value { text, json })
            }
            TableCmd::ClosedForms { gmax, out } => {
                let t = closed_form_table(*gmax);
                let text = t.to_json() + "\n";
                let json: Value = serde_json::from_str(&text).expect("valid json");
                Ok(Outcome::Value {
                    text: write_or_print(out, text)?,
                    json,
                })
            }
            TableCmd::Conja { direction, tables, out } => {
                let direction: Direction = direction.parse()?;
                let table = load_tables(tables)?.unwrap_or_default();
                let extended = conja_table(&table, direction, &SocleConstants::from_table(&table)?)?;
                let text = extended.to_json() + "\n";
                let json: Value = serde_json::from_str(&text).expect("valid json");
                Ok(Outcome::Value {
                    text: write_or_print(out, text)?,
                    json,
                })
            }
        },
    }
}

fn render_checks(checks: &[Check]) -> String {
    let mut out = String::new();
    for c in checks {
        out.push_str(&format!("{} {}: {}\n", c.status, c.name, c.detail));
        for w in &c.witnesses {
            out.push_str(&format!("    {w}\n"));
        }
    }
    let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
    let skipped = checks.iter().filter(|c| c.status == Status::Skip).count();
    out.push_str(&format!(
        "{} checks, {failed} failed, {skipped} skipped\n",
        checks.len()
    ));
    out
}

// A closed pipe on stdout is not an error worth reporting.
fn emit(s: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(s.as_bytes()).and_then(|()| out.flush());
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let command: Vec<String> = std::env::args().skip(1).collect();
    let command = command.join(" ");
    match run(&cli) {
        Ok(outcome) => {
            let (passed, text, body) = match &outcome {
                Outcome::Value { text, json } => (true, text.clone(), json!({ "result": json })),
                Outcome::Checks(checks) => {
                    let passed = checks.iter().all(|c| c.status != Status::Fail);
                    let body = json!({
                        "passed": passed,
                        "checks": serde_json::to_value(checks).expect("checks serialize"),
                    });
                    (passed, render_checks(checks), body)
                }
            };
            match cli.format {
                Format::Text => {
                    if matches!(outcome, Outcome::Checks(_)) {
                        emit(&format!("seed: {}\n{text}", cli.seed));
                    } else {
                        emit(&text);
                    }
                }
                Format::Json => {
                    let mut report = json!({ "command": command, "seed": cli.seed });
                    if let (Value::Object(r), Value::Object(b)) = (&mut report, body) {
                        r.extend(b);
                    }
                    emit(&(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"));
                }
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            if cli.format == Format::Json {
                let report = json!({ "command": command, "seed": cli.seed, "error": e.to_string() });
                emit(&(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"));
            }
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
