//! Command-line front end.
//!
//! Every command builds a [`Report`]: a JSON payload (always carrying
//! `"schema_version": 1`, big integers as decimal strings, floats rounded to
//! [`FLOAT_DIGITS`] significant digits) plus a table used for `csv` and
//! `table` output. Exit codes: 0 success, 1 failed verification or a
//! numerical failure, 2 usage, domain or configuration errors.

use std::ffi::OsString;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::{json, Value};

use crate::bounds::{bound_table, verify_sandwich};
use crate::bt::{default_grid, verify_bt_rep, verify_statement, BtStatement};
use crate::cache::TableCache;
use crate::error::{Error, Result};
use crate::exact::{is_valid_q, q_from_k, BtCounts, CountTable, NaryCounts};
use crate::fit::{approx_h, approx_log10_h, default_window, fit_from_truncation, ln_big};
use crate::model::{BranchingSchedule, Parity};
use crate::oracle::{count_by_top_with, enumerate_with, OracleOptions};
use crate::rep::{bt_rep, chart_table, listing_lines, lower_coeffs, upper_coeffs, RepChart, SignedRep};
use crate::report::VerificationReport;

pub const SCHEMA_VERSION: u32 = 1;
/// Significant digits kept for floating-point values in JSON output.
pub const FLOAT_DIGITS: usize = 12;
/// `fit --at` compares with exact counts only up to this many leaves.
pub const EXACT_COMPARE_LIMIT: usize = 500;

#[derive(Debug, Parser)]
#[command(name = "huffenum", version, about = "Exact enumeration and asymptotics of Huffman codes")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    /// Shorthand for `--format json`.
    #[arg(long, global = true)]
    json: bool,
    /// Directory for cached count tables (overrides HUFFENUM_CACHE_DIR).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Recompute count tables instead of reading or writing the cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate level profiles by brute force.
    Oracle(OracleArgs),
    /// Exact class counts from the expansion recurrence.
    Exact(ExactArgs),
    /// Signed lag representations and bound coefficients.
    Rep(RepArgs),
    /// Lower and upper bound sequences for h_n(q).
    Bounds(BoundsArgs),
    /// Characteristic roots and fitted constants for h_n(q).
    Fit(FitArgs),
    /// 2,3-tree checks.
    Bt {
        #[command(subcommand)]
        command: BtCommand,
    },
    /// Inspect or empty the count-table cache.
    Cache {
        #[command(subcommand)]
        command: CacheCommand,
    },
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    /// Constant branching factor.
    #[arg(long, conflicts_with = "schedule")]
    n: Option<u32>,
    /// Periodic branching factors by level, e.g. `2,3`.
    #[arg(long)]
    schedule: Option<String>,
}

impl ScheduleArgs {
    fn resolve(&self) -> Result<BranchingSchedule> {
        match (self.n, &self.schedule) {
            (Some(n), None) => BranchingSchedule::n_ary(n),
            (None, Some(s)) => s.parse(),
            _ => Err(Error::Config("give exactly one of --n or --schedule".into())),
        }
    }
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long)]
    q: u64,
    /// List every profile, not just the counts.
    #[arg(long)]
    list: bool,
    /// Count the bare root as the tree with one leaf.
    #[arg(long)]
    include_degenerate: bool,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, required_unless_present = "k", conflicts_with = "k")]
    q: Option<usize>,
    /// Index by inner vertex count instead: q = n + k(n-1).
    #[arg(long)]
    k: Option<usize>,
    /// Split by top-level leaf count.
    #[arg(long)]
    by_top: bool,
    /// Split by top-level parity (even/odd totals).
    #[arg(long)]
    by_parity: bool,
}

#[derive(Debug, Args)]
struct RepArgs {
    #[arg(long, conflicts_with = "bt")]
    n: Option<u32>,
    /// 2,3-tree expansion of the given top parity.
    #[arg(long)]
    bt: Option<Parity>,
    /// Number of rows.
    #[arg(long, default_value_t = 8)]
    rows: usize,
    /// Print lower and upper bound coefficients for truncation depth I.
    #[arg(long, requires = "n", value_name = "I")]
    coeffs: Option<usize>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    i: usize,
    #[arg(long, default_value_t = 60)]
    qmax: usize,
    /// Check the sandwich and gap identities; exit 1 on failure.
    #[arg(long)]
    verify: bool,
    /// Include every checked point in JSON output.
    #[arg(long)]
    points: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    i: usize,
    /// Fitting window `lo:hi`.
    #[arg(long, value_parser = parse_window)]
    window: Option<(usize, usize)>,
    /// Number of roots and constants.
    #[arg(long, default_value_t = 2)]
    terms: usize,
    /// Evaluate the approximation at these q (comma separated).
    #[arg(long, value_delimiter = ',')]
    at: Vec<usize>,
}

#[derive(Debug, Subcommand)]
enum BtCommand {
    /// Sweep the recursions and inequalities.
    Verify(BtVerifyArgs),
    /// Check the substituted q_o / q_e expansion against exact counts.
    Expansion(BtExpansionArgs),
}

#[derive(Debug, Args)]
struct BtVerifyArgs {
    /// Statement by name or number; all four when omitted.
    #[arg(long = "theorem", value_name = "NAME")]
    theorems: Vec<String>,
    /// Largest q (default per statement).
    #[arg(long)]
    qmax: Option<usize>,
    /// Largest s for the recursions (default per statement).
    #[arg(long)]
    smax: Option<usize>,
    /// Include every checked point in JSON output.
    #[arg(long)]
    points: bool,
}

#[derive(Debug, Args)]
struct BtExpansionArgs {
    #[arg(long)]
    parity: Parity,
    #[arg(long)]
    i: usize,
    #[arg(long, default_value_t = 30)]
    qmax: usize,
    #[arg(long)]
    points: bool,
}

#[derive(Debug, Subcommand)]
enum CacheCommand {
    /// Show the cache directory and its files.
    Info,
    /// Delete every cached table.
    Clear,
}

fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: usize = a.trim().parse().map_err(|e| format!("bad window start: {e}"))?;
    let hi: usize = b.trim().parse().map_err(|e| format!("bad window end: {e}"))?;
    if lo > hi {
        return Err(format!("window start {lo} exceeds end {hi}"));
    }
    Ok((lo, hi))
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Tabular rendering of a result.
#[derive(Debug, Clone, Default)]
struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        let io = |e: csv::Error| Error::Config(format!("csv output: {e}"));
        w.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv output: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    fn to_text(&self) -> String {
        let cols = self.rows.iter().map(Vec::len).chain([self.headers.len()]).max().unwrap_or(0);
        let mut width = vec![0; cols];
        for r in std::iter::once(&self.headers).chain(&self.rows) {
            for (k, cell) in r.iter().enumerate() {
                width[k] = width[k].max(cell.chars().count());
            }
        }
        let line = |r: &[String]| {
            let cells: Vec<String> = (0..cols)
                .map(|k| {
                    let c = r.get(k).map(String::as_str).unwrap_or("");
                    format!("{c:>w$}", w = width[k])
                })
                .collect();
            cells.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

struct Report {
    json: Value,
    table: Table,
    /// Verification verdict, when the command checks something.
    passed: Option<bool>,
    /// Extra lines for stderr.
    notes: Vec<String>,
}

impl Report {
    fn new(command: &str, mut body: Value, table: Table) -> Self {
        if let Value::Object(map) = &mut body {
            map.insert("schema_version".into(), json!(SCHEMA_VERSION));
            map.insert("command".into(), json!(command));
        }
        Self { json: body, table, passed: None, notes: Vec::new() }
    }
}

/// Rounds to [`FLOAT_DIGITS`] significant digits.
fn float(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{:.*e}", FLOAT_DIGITS - 1, x).parse().unwrap_or(x);
    json!(rounded)
}

fn fstr(x: f64) -> String {
    format!("{:.*e}", FLOAT_DIGITS - 1, x).parse::<f64>().map_or_else(|_| x.to_string(), |v| v.to_string())
}

struct Context {
    cache: Option<TableCache>,
}

impl Context {
    fn table(&self, schedule: &BranchingSchedule, max_q: usize) -> Result<CountTable> {
        match &self.cache {
            Some(c) => c.load_or_build(schedule, max_q),
            None => Ok(CountTable::build(schedule, max_q)),
        }
    }

    fn nary(&self, n: u32, max_q: usize) -> Result<NaryCounts> {
        NaryCounts::from_table(self.table(&BranchingSchedule::n_ary(n)?, max_q)?)
    }

    fn bt(&self, max_q: usize) -> Result<BtCounts> {
        BtCounts::from_table(self.table(&BranchingSchedule::binary_ternary(), max_q)?)
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: 2, stdout: String::new(), stderr: text }
            } else {
                Outcome { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    let format = if cli.json { Format::Json } else { cli.format };
    let ctx = Context {
        cache: if cli.no_cache { None } else { TableCache::resolve(cli.cache_dir.as_deref()) },
    };
    let report = match dispatch(&cli, &ctx) {
        Ok(r) => r,
        Err(e) => {
            let code = match e {
                Error::Domain(_)
                | Error::Config(_)
                | Error::Schedule(_)
                | Error::InvalidProfile(_)
                | Error::InvalidSequence(_) => 2,
                _ => 1,
            };
            return Outcome { code, stdout: String::new(), stderr: format!("error: {e}\n") };
        }
    };
    let stdout = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.json).expect("JSON values serialize");
            s.push('\n');
            s
        }
        Format::Csv => match report.table.to_csv() {
            Ok(s) => s,
            Err(e) => return Outcome { code: 1, stdout: String::new(), stderr: format!("error: {e}\n") },
        },
        Format::Table => report.table.to_text(),
    };
    let mut stderr: String = report.notes.iter().map(|n| format!("{n}\n")).collect();
    let code = match report.passed {
        Some(false) => {
            stderr.push_str("verification failed\n");
            1
        }
        _ => 0,
    };
    Outcome { code, stdout, stderr }
}

fn dispatch(cli: &Cli, ctx: &Context) -> Result<Report> {
    match &cli.command {
        Command::Oracle(a) => oracle_cmd(a),
        Command::Exact(a) => exact_cmd(a, ctx),
        Command::Rep(a) => rep_cmd(a),
        Command::Bounds(a) => bounds_cmd(a, ctx),
        Command::Fit(a) => fit_cmd(a, ctx),
        Command::Bt { command: BtCommand::Verify(a) } => bt_verify_cmd(a, ctx),
        Command::Bt { command: BtCommand::Expansion(a) } => bt_expansion_cmd(a, ctx),
        Command::Cache { command } => cache_cmd(command, ctx),
    }
}

fn oracle_cmd(a: &OracleArgs) -> Result<Report> {
    let schedule = a.schedule.resolve()?;
    let opts = OracleOptions { include_degenerate: a.include_degenerate, threads: a.threads };
    let mut body = json!({ "schedule": schedule.factors(), "q": a.q });
    let mut table;
    if a.list {
        let res = enumerate_with(&schedule, a.q, opts)?;
        body["total"] = json!(res.total().to_string());
        body["by_top"] = top_counts_json(&res.counts_by_top);
        body["profiles"] = res
            .profiles
            .iter()
            .map(|p| json!({ "internal": p.internal(), "leaves": p.leaves(), "top_leaves": p.top_leaves() }))
            .collect();
        table = Table::new(&["internal", "leaves", "top_leaves"]);
        for p in &res.profiles {
            table.push(vec![join(p.internal()), join(&p.leaves()), p.top_leaves().to_string()]);
        }
    } else {
        let counts = count_by_top_with(&schedule, a.q, opts)?;
        let total: BigUint = counts.values().sum();
        body["total"] = json!(total.to_string());
        body["by_top"] = top_counts_json(&counts);
        table = Table::new(&["p", "parity", "count"]);
        for (k, v) in &counts {
            table.push(vec![k.p.to_string(), k.parity.to_string(), v.to_string()]);
        }
    }
    Ok(Report::new("oracle", body, table))
}

fn top_counts_json(map: &std::collections::BTreeMap<crate::oracle::TopKey, BigUint>) -> Value {
    map.iter()
        .map(|(k, v)| json!({ "p": k.p, "parity": k.parity, "count": v.to_string() }))
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn exact_cmd(a: &ExactArgs, ctx: &Context) -> Result<Report> {
    let schedule = a.schedule.resolve()?;
    let q = match (a.q, a.k) {
        (Some(q), _) => q,
        (None, Some(k)) => match schedule.constant_factor() {
            Some(n) => q_from_k(n, k),
            None => return Err(Error::Config("--k needs a constant branching factor".into())),
        },
        (None, None) => return Err(Error::Config("give --q or --k".into())),
    };
    let table = ctx.table(&schedule, q.max(2))?;
    let mut body = json!({ "schedule": schedule.factors(), "q": q });
    let mut out = Table::new(&["quantity", "value"]);
    out.push(vec!["q".into(), q.to_string()]);
    let total = table.total(q);
    if let Some(n) = schedule.constant_factor() {
        body["h"] = json!(total.to_string());
        out.push(vec!["h".into(), total.to_string()]);
        if is_valid_q(n, q) {
            let k = (q - n as usize) / (n as usize - 1);
            body["k"] = json!(k);
            out.push(vec!["k".into(), k.to_string()]);
        }
    } else {
        body["total"] = json!(total.to_string());
        out.push(vec!["total".into(), total.to_string()]);
    }
    if a.by_parity {
        if schedule.period() != 2 {
            return Err(Error::Config("--by-parity needs a schedule of period 2".into()));
        }
        let (e, o) = (table.phase_total(q, 0), table.phase_total(q, 1));
        body["e"] = json!(e.to_string());
        body["o"] = json!(o.to_string());
        out.push(vec!["e".into(), e.to_string()]);
        out.push(vec!["o".into(), o.to_string()]);
    }
    if a.by_top {
        let mut rows = Vec::new();
        for phase in 0..schedule.period() {
            for (p, v) in table.entries(q, phase) {
                let mut row = json!({ "p": p, "count": v.to_string() });
                if schedule.period() > 1 {
                    row["phase"] = json!(phase);
                }
                if schedule.period() == 2 {
                    row["parity"] = json!(Parity::of(phase));
                }
                out.push(vec![format!("t(p={p}, phase={phase})"), v.to_string()]);
                rows.push(row);
            }
        }
        body["by_top"] = Value::Array(rows);
    }
    Ok(Report::new("exact", body, out))
}

fn rep_json(r: &SignedRep) -> Value {
    json!({ "subject": r.subject, "terms": r.terms, "span": r.span, "text": r.render() })
}

fn rep_cmd(a: &RepArgs) -> Result<Report> {
    if a.rows == 0 {
        return Err(Error::Domain("--rows must be at least 1".into()));
    }
    if let Some(i) = a.coeffs {
        let n = a.n.expect("clap enforces --n");
        let (lo, up) = (lower_coeffs(n, i)?, upper_coeffs(n, i)?);
        let mut t = Table::new(&["lag", "lower", "upper"]);
        for lag in 1..=up.coeffs.len() {
            t.push(vec![lag.to_string(), lo.get(lag).to_string(), up.get(lag).to_string()]);
        }
        let body = json!({
            "n": n,
            "i": i,
            "lower": lo.nonzero().map(|(l, c)| json!([l, c])).collect::<Vec<_>>(),
            "upper": up.nonzero().map(|(l, c)| json!([l, c])).collect::<Vec<_>>(),
            "span": up.span,
        });
        return Ok(Report::new("rep", body, t));
    }
    match (a.n, a.bt) {
        (Some(n), None) => {
            let rows = RepChart::new(n)?.rows(a.rows);
            let (lags, body_rows) = chart_table(&rows);
            let mut headers = vec!["row".to_string()];
            headers.extend(lags.iter().map(|l| l.to_string()));
            let mut t = Table { headers, rows: Vec::new() };
            for (subject, cells) in body_rows {
                let mut r = vec![subject];
                r.extend(cells.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
                t.push(r);
            }
            let body = json!({ "n": n, "rows": rows.iter().map(rep_json).collect::<Vec<_>>() });
            Ok(Report::new("rep", body, t))
        }
        (None, Some(parity)) => {
            let rep = bt_rep(parity, a.rows)?;
            let lines = listing_lines(&rep);
            let mut t = Table::new(&["s", "row"]);
            for (s, line) in lines.iter().enumerate() {
                t.push(vec![(s + 1).to_string(), line.clone()]);
            }
            let body = json!({
                "parity": parity,
                "rows": rep.rows.iter().map(rep_json).collect::<Vec<_>>(),
                "listing": lines,
                "aggregate": rep_json(&rep.aggregate),
            });
            Ok(Report::new("rep", body, t))
        }
        _ => Err(Error::Config("give exactly one of --n or --bt".into())),
    }
}

fn report_json(r: &VerificationReport, with_points: bool) -> Value {
    let mut v = json!({
        "id": r.id,
        "statement": r.statement,
        "grid": r.grid,
        "passed": r.passed(),
        "points_checked": r.points.len(),
        "failures": r.failures().count(),
        "first_counterexample": r.first_counterexample,
        "diagnosis": r.diagnosis,
    });
    if with_points {
        v["points"] = serde_json::to_value(&r.points).expect("points serialize");
    }
    v
}

fn bounds_cmd(a: &BoundsArgs, ctx: &Context) -> Result<Report> {
    let counts = ctx.nary(a.n, a.qmax.max(2))?;
    let rows = bound_table(&counts, a.i, a.qmax)?;
    let mut t = Table::new(&["q", "lower", "h", "upper", "predicted"]);
    let mut json_rows = Vec::new();
    for r in &rows {
        t.push(vec![r.q.to_string(), r.lower.to_string(), r.h.to_string(), r.upper.to_string(), r.predicted.to_string()]);
        json_rows.push(json!({
            "q": r.q,
            "lower": r.lower.to_string(),
            "h": r.h.to_string(),
            "upper": r.upper.to_string(),
            "predicted": r.predicted,
        }));
    }
    let first_q = crate::bounds::default_first_q(a.n, a.i)?;
    let mut body = json!({ "n": a.n, "i": a.i, "qmax": a.qmax, "first_q": first_q, "rows": json_rows });
    let mut passed = None;
    let mut notes = Vec::new();
    if a.verify {
        let s = verify_sandwich(&counts, a.i, a.qmax)?;
        body["verification"] = json!({
            "passed": s.passed(),
            "reports": s.reports().iter().map(|r| report_json(r, a.points)).collect::<Vec<_>>(),
        });
        notes.extend(s.reports().iter().map(|r| r.summary()));
        passed = Some(s.passed());
    }
    let mut rep = Report::new("bounds", body, t);
    rep.passed = passed;
    rep.notes = notes;
    Ok(rep)
}

fn fit_cmd(a: &FitArgs, ctx: &Context) -> Result<Report> {
    let window: RangeInclusive<usize> = match a.window {
        Some((lo, hi)) => lo..=hi,
        None => default_window(a.n),
    };
    let top = a
        .at
        .iter()
        .copied()
        .filter(|&q| q <= EXACT_COMPARE_LIMIT)
        .chain([*window.end()])
        .max()
        .unwrap_or(0);
    let counts = ctx.nary(a.n, top.max(2))?;
    let fit = fit_from_truncation(&counts, a.i, a.terms, window.clone())?;

    let mut t = Table::new(&["quantity", "value"]);
    for (k, (r, c)) in fit.roots.iter().zip(&fit.constants).enumerate() {
        t.push(vec![format!("r{}", k + 1), fstr(*r)]);
        t.push(vec![format!("c{}", k + 1), fstr(*c)]);
    }
    t.push(vec!["residual".into(), fstr(fit.residual)]);

    let mut approximations = Vec::new();
    for &q in &a.at {
        let mut row = json!({ "q": q });
        row["log10_approx"] = float(approx_log10_h(&fit, q)?);
        t.push(vec![format!("log10 approx at q={q}"), fstr(approx_log10_h(&fit, q)?)]);
        if let Ok(ap) = approx_h(&fit, q) {
            row["approx"] = float(ap.value);
            row["error_estimate"] = float(ap.error_estimate);
        }
        let exact = if q <= EXACT_COMPARE_LIMIT { counts.h(q) } else { BigUint::default() };
        if exact.bits() > 0 {
            row["h"] = json!(exact.to_string());
            let log_exact = ln_big(&exact) / std::f64::consts::LN_10;
            let rel = (10f64.powf(approx_log10_h(&fit, q)? - log_exact) - 1.0).abs();
            row["relative_error"] = float(rel);
            t.push(vec![format!("relative error at q={q}"), fstr(rel)]);
        }
        approximations.push(row);
    }
    let body = json!({
        "n": fit.n,
        "i": fit.i,
        "roots": fit.roots.iter().map(|&r| float(r)).collect::<Vec<_>>(),
        "constants": fit.constants.iter().map(|&c| float(c)).collect::<Vec<_>>(),
        "residual": float(fit.residual),
        "window": [fit.window.0, fit.window.1],
        "points": fit.points,
        "float_digits": FLOAT_DIGITS,
        "verdict": {
            "roots_within_residual_bound": true,
            "fit_residual_below_1e-3": fit.residual <= 1e-3,
        },
        "approximations": approximations,
    });
    let mut rep = Report::new("fit", body, t);
    rep.passed = Some(fit.residual <= 1e-3);
    Ok(rep)
}

fn bt_verify_cmd(a: &BtVerifyArgs, ctx: &Context) -> Result<Report> {
    let statements: Vec<BtStatement> = if a.theorems.is_empty() {
        BtStatement::ALL.to_vec()
    } else {
        a.theorems.iter().map(|s| s.parse()).collect::<Result<_>>()?
    };
    let plan: Vec<(BtStatement, usize, usize)> = statements
        .iter()
        .map(|&st| {
            let (s, q) = default_grid(st);
            (st, a.smax.unwrap_or(s), a.qmax.unwrap_or(q))
        })
        .collect();
    let horizon = plan.iter().map(|&(_, _, q)| q + 2).max().unwrap_or(2);
    let counts = ctx.bt(horizon)?;
    let mut reports = Vec::new();
    for (st, s, q) in plan {
        reports.push(verify_statement(&counts, st, s, q)?);
    }
    let passed = reports.iter().all(VerificationReport::passed);
    let mut t = Table::new(&["statement", "grid", "points", "failures", "result"]);
    for r in &reports {
        t.push(vec![
            r.id.clone(),
            r.grid.clone(),
            r.points.len().to_string(),
            r.failures().count().to_string(),
            if r.passed() { "pass" } else { "FAIL" }.into(),
        ]);
    }
    let body = json!({
        "passed": passed,
        "reports": reports.iter().map(|r| report_json(r, a.points)).collect::<Vec<_>>(),
    });
    let mut rep = Report::new("bt-verify", body, t);
    rep.notes = reports.iter().map(VerificationReport::summary).collect();
    rep.passed = Some(passed);
    Ok(rep)
}

fn bt_expansion_cmd(a: &BtExpansionArgs, ctx: &Context) -> Result<Report> {
    let counts = ctx.bt(a.qmax.max(2))?;
    let r = verify_bt_rep(&counts, a.parity, a.i, 2..=a.qmax)?;
    let mut t = Table::new(&["check", "i", "q", "lhs", "relation", "rhs", "pass"]);
    for p in &r.points {
        t.push(vec![
            p.check.clone(),
            a.i.to_string(),
            p.param("q").unwrap_or_default().to_string(),
            p.lhs.to_string(),
            p.relation.to_string(),
            p.rhs.to_string(),
            p.pass.to_string(),
        ]);
    }
    let body = json!({ "passed": r.passed(), "report": report_json(&r, a.points) });
    let mut rep = Report::new("bt-expansion", body, t);
    rep.notes = vec![r.summary()];
    rep.passed = Some(r.passed());
    Ok(rep)
}

fn cache_cmd(cmd: &CacheCommand, ctx: &Context) -> Result<Report> {
    let cache = ctx
        .cache
        .as_ref()
        .ok_or_else(|| Error::Config("no cache directory (use --cache-dir or HUFFENUM_CACHE_DIR)".into()))?;
    match cmd {
        CacheCommand::Info => {
            let files = cache.list()?;
            let mut t = Table::new(&["file", "bytes"]);
            let mut list = Vec::new();
            for (path, bytes) in &files {
                let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                t.push(vec![name.clone(), bytes.to_string()]);
                list.push(json!({ "file": name, "bytes": bytes }));
            }
            let body = json!({ "dir": cache.dir().display().to_string(), "files": list });
            Ok(Report::new("cache-info", body, t))
        }
        CacheCommand::Clear => {
            let removed = cache.clear()?;
            let mut t = Table::new(&["removed"]);
            t.push(vec![removed.to_string()]);
            Ok(Report::new("cache-clear", json!({ "removed": removed }), t))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_ok(args: &[&str]) -> Value {
        let mut full = vec!["huffenum", "--no-cache"];
        full.extend_from_slice(args);
        let out = run(full);
        assert_eq!(out.code, 0, "{}", out.stderr);
        serde_json::from_str(&out.stdout).unwrap()
    }

    #[test]
    fn exact_h() {
        let v = run_ok(&["exact", "--n", "2", "--q", "5"]);
        assert_eq!(v["h"], "3");
        assert_eq!(v["schema_version"], 1);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["huffenum", "exact", "--bogus"]).code, 2);
        assert_eq!(run(["huffenum", "--no-cache", "rep", "--n", "3", "--coeffs", "3"]).code, 2);
        assert_eq!(run(["huffenum", "--no-cache", "bt", "verify", "--theorem", "9.9"]).code, 2);
    }

    #[test]
    fn window_parser() {
        assert_eq!(parse_window("60:120"), Ok((60, 120)));
        assert!(parse_window("120:60").is_err());
        assert!(parse_window("60").is_err());
    }

    #[test]
    fn csv_leaves_absent_cells_empty() {
        let out = run(["huffenum", "--no-cache", "--format", "csv", "rep", "--n", "2", "--rows", "3"]);
        assert_eq!(out.code, 0);
        let lines: Vec<&str> = out.stdout.lines().collect();
        assert_eq!(lines[0], "row,1,2,3,4");
        assert_eq!(lines[1], "\"t_2(2, q)\",1,,,");
        assert_eq!(lines[3], "\"t_2(6, q)\",,,1,-1");
    }

    #[test]
    fn floats_are_rounded() {
        assert_eq!(float(1.794_147_187_541_685_5), json!(1.79414718754));
        assert_eq!(float(f64::NAN), Value::Null);
    }
}
