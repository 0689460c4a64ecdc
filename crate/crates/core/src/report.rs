//! Table, CSV and plot-data output for convergence records, plus the
//! reference tables shipped as fixtures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ConvergenceRecord, MeritNorm, SweepEntry};
use crate::model::ProblemKind;

const TABLE1_FIXTURE: &str = include_str!("../fixtures/table1.csv");
const TABLE2_FIXTURE: &str = include_str!("../fixtures/table2.csv");

/// Header of every long-format table CSV.
pub const CELL_CSV_HEADER: &str = "table,delta,k,column,error,rate";

/// One `(δ, k, column)` cell of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub table: String,
    pub delta: usize,
    pub k: usize,
    pub column: String,
    pub error: f64,
    pub rate: Option<f64>,
}

impl TableCell {
    pub fn key(&self) -> (String, usize, usize, String) {
        (self.table.clone(), self.delta, self.k, self.column.clone())
    }
}

/// Rendered table in three formats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedTable {
    pub text: String,
    pub markdown: String,
    pub csv: String,
}

/// `1e-2` style label for a regularization parameter.
pub fn alpha_label(alpha: f64) -> String {
    format!("alpha={alpha:e}")
}

/// Column a record belongs to in the tables.
pub fn column_label(record: &ConvergenceRecord) -> String {
    match record.kind {
        ProblemKind::Elliptic => "elliptic".to_string(),
        _ => alpha_label(record.alpha),
    }
}

/// Five significant digits, e.g. `9.2738e-1`.
pub fn sci5(v: f64) -> String {
    format!("{v:.4e}")
}

pub fn record_cells(table: &str, records: &[ConvergenceRecord]) -> Vec<TableCell> {
    records
        .iter()
        .flat_map(|rec| {
            rec.entries.iter().map(move |e| TableCell {
                table: table.to_string(),
                delta: rec.delta,
                k: e.k,
                column: column_label(rec),
                error: e.merit_max,
                rate: e.rate,
            })
        })
        .collect()
}

/// Long-format CSV with 17 significant digits.
pub fn cells_to_csv(cells: &[TableCell]) -> String {
    let mut out = String::from(CELL_CSV_HEADER);
    out.push('\n');
    for c in cells {
        let rate = c.rate.map_or(String::new(), |r| format!("{r:.16e}"));
        let _ = writeln!(out, "{},{},{},{},{:.16e},{}", c.table, c.delta, c.k, c.column, c.error, rate);
    }
    out
}

pub fn parse_cells(text: &str) -> Result<Vec<TableCell>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if headers != CELL_CSV_HEADER {
        return Err(Error::Parse(format!("expected header `{CELL_CSV_HEADER}`, found `{headers}`")));
    }
    reader.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn table1_fixture() -> Vec<TableCell> {
    parse_cells(TABLE1_FIXTURE).expect("bundled fixture parses")
}

pub fn table2_fixture() -> Vec<TableCell> {
    parse_cells(TABLE2_FIXTURE).expect("bundled fixture parses")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMismatch {
    pub delta: usize,
    pub k: usize,
    pub column: String,
    pub field: &'static str,
    pub expected: f64,
    pub found: f64,
    pub relative: f64,
}

/// Result of checking computed cells against a reference table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FixtureComparison {
    /// Number of compared values (errors plus rates).
    pub compared: usize,
    /// Reference cells with no computed counterpart: `(δ, k, column)`.
    pub missing: Vec<(usize, usize, String)>,
    pub mismatches: Vec<CellMismatch>,
}

impl FixtureComparison {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn worst_relative(&self) -> f64 {
        self.mismatches.iter().map(|m| m.relative).fold(0.0, f64::max)
    }
}

fn relative(expected: f64, found: f64) -> f64 {
    if expected == found {
        0.0
    } else {
        (found - expected).abs() / expected.abs()
    }
}

/// Compares every reference cell that has a computed counterpart; cells the
/// run did not produce are listed as missing rather than failing.
pub fn compare_with_fixture(computed: &[TableCell], fixture: &[TableCell], rel_tol: f64) -> FixtureComparison {
    let by_key: BTreeMap<_, _> = computed.iter().map(|c| ((c.delta, c.k, c.column.clone()), c)).collect();
    let mut cmp = FixtureComparison::default();
    for reference in fixture {
        let Some(found) = by_key.get(&(reference.delta, reference.k, reference.column.clone())) else {
            cmp.missing.push((reference.delta, reference.k, reference.column.clone()));
            continue;
        };
        let mut check = |field, expected: f64, got: f64| {
            cmp.compared += 1;
            let rel = relative(expected, got);
            if !(rel <= rel_tol) {
                cmp.mismatches.push(CellMismatch {
                    delta: reference.delta,
                    k: reference.k,
                    column: reference.column.clone(),
                    field,
                    expected,
                    found: got,
                    relative: rel,
                });
            }
        };
        check("error", reference.error, found.error);
        if let (Some(e), Some(f)) = (reference.rate, found.rate) {
            check("rate", e, f);
        }
    }
    cmp
}

/// Grid of optional `(error, rate)` pairs with row and column labels.
struct Layout {
    title: String,
    row_labels: Vec<String>,
    row_header: Vec<String>,
    columns: Vec<String>,
    cells: Vec<Vec<Option<(f64, Option<f64>)>>>,
}

impl Layout {
    fn headers(&self) -> Vec<String> {
        let mut h = self.row_header.clone();
        for c in &self.columns {
            h.push(format!("{c} |E|"));
            h.push(format!("{c} rho"));
        }
        h
    }

    fn body(&self) -> Vec<Vec<String>> {
        self.row_labels
            .iter()
            .zip(&self.cells)
            .map(|(label, row)| {
                let mut line: Vec<String> = label.split(',').map(str::to_string).collect();
                for cell in row {
                    match cell {
                        Some((e, r)) => {
                            line.push(sci5(*e));
                            line.push(r.map_or_else(|| "-".to_string(), sci5));
                        }
                        None => {
                            line.push(String::new());
                            line.push(String::new());
                        }
                    }
                }
                line
            })
            .collect()
    }

    fn text(&self) -> String {
        let headers = self.headers();
        let body = self.body();
        let widths: Vec<usize> = (0..headers.len())
            .map(|c| body.iter().map(|r| r[c].len()).chain([headers[c].len()]).max().unwrap_or(0))
            .collect();
        let fmt_row = |row: &[String]| {
            let cols: Vec<String> = row.iter().zip(&widths).map(|(v, w)| format!("{v:>w$}")).collect();
            cols.join("  ").trim_end().to_string()
        };
        let mut out = format!("{}\n{}\n", self.title, fmt_row(&headers));
        for row in &body {
            out.push_str(&fmt_row(row));
            out.push('\n');
        }
        out
    }

    fn markdown(&self) -> String {
        let headers = self.headers();
        let mut out = format!("**{}**\n\n| {} |\n", self.title, headers.join(" | "));
        out.push_str(&format!("|{}\n", "---|".repeat(headers.len())));
        for row in self.body() {
            out.push_str(&format!("| {} |\n", row.join(" | ")));
        }
        out
    }
}

fn canonical_table1_columns() -> Vec<String> {
    let mut cols = vec!["elliptic".to_string()];
    cols.extend([1e-2, 1e-4, 1e-6].map(alpha_label));
    cols
}

/// Errors and rates grouped by δ, one column pair per problem (the elliptic
/// equation, then the control problem for each α, largest first).
pub fn emit_table1(records: &[ConvergenceRecord]) -> EmittedTable {
    let mut recs: Vec<&ConvergenceRecord> =
        records.iter().filter(|r| r.kind != ProblemKind::AlphaElliptic).collect();
    recs.sort_by_key(|r| r.sort_key());
    let mut columns: Vec<String> = Vec::new();
    for r in &recs {
        let label = column_label(r);
        if !columns.contains(&label) {
            columns.push(label);
        }
    }
    if columns.is_empty() {
        columns = canonical_table1_columns();
    }
    let rows: BTreeSet<(usize, usize)> =
        recs.iter().flat_map(|r| r.entries.iter().map(move |e| (r.delta, e.k))).collect();
    let lookup = cell_lookup(&recs);
    let layout = Layout {
        title: "Errors and rates versus alpha, delta and sweep k".to_string(),
        row_header: vec!["delta".into(), "k".into()],
        row_labels: rows.iter().map(|(d, k)| format!("{d},{k}")).collect(),
        cells: rows
            .iter()
            .map(|&(d, k)| columns.iter().map(|c| lookup.get(&(d, k, c.clone())).copied()).collect())
            .collect(),
        columns,
    };
    let cells = record_cells("table1", &recs.into_iter().cloned().collect::<Vec<_>>());
    EmittedTable { text: layout.text(), markdown: layout.markdown(), csv: cells_to_csv(&cells) }
}

/// Errors and rates of the α-dependent equation, one column pair per δ and
/// one row per sweep.
pub fn emit_table2(records: &[ConvergenceRecord]) -> EmittedTable {
    let mut recs: Vec<&ConvergenceRecord> =
        records.iter().filter(|r| r.kind == ProblemKind::AlphaElliptic).collect();
    recs.sort_by_key(|r| r.sort_key());
    let alphas: BTreeSet<u64> = recs.iter().map(|r| r.alpha.to_bits()).collect();
    let single_alpha = alphas.len() <= 1;
    let label = |r: &ConvergenceRecord| {
        if single_alpha {
            format!("delta={}", r.delta)
        } else {
            format!("{} delta={}", alpha_label(r.alpha), r.delta)
        }
    };
    let mut columns: Vec<String> = Vec::new();
    for r in &recs {
        let l = label(r);
        if !columns.contains(&l) {
            columns.push(l);
        }
    }
    if columns.is_empty() {
        columns = (1..=4).map(|d| format!("delta={d}")).collect();
    }
    let ks: BTreeSet<usize> = recs.iter().flat_map(|r| r.entries.iter().map(|e| e.k)).collect();
    let mut lookup: BTreeMap<(usize, String), (f64, Option<f64>)> = BTreeMap::new();
    for r in &recs {
        for e in &r.entries {
            lookup.insert((e.k, label(r)), (e.merit_max, e.rate));
        }
    }
    let title = match recs.first() {
        Some(r) if single_alpha => {
            format!("Errors and rates of the alpha-dependent equation, {}", alpha_label(r.alpha))
        }
        _ => "Errors and rates of the alpha-dependent equation".to_string(),
    };
    let layout = Layout {
        title,
        row_header: vec!["k".into()],
        row_labels: ks.iter().map(|k| k.to_string()).collect(),
        cells: ks
            .iter()
            .map(|&k| columns.iter().map(|c| lookup.get(&(k, c.clone())).copied()).collect())
            .collect(),
        columns,
    };
    let cells = record_cells("table2", &recs.into_iter().cloned().collect::<Vec<_>>());
    EmittedTable { text: layout.text(), markdown: layout.markdown(), csv: cells_to_csv(&cells) }
}

fn cell_lookup(recs: &[&ConvergenceRecord]) -> BTreeMap<(usize, usize, String), (f64, Option<f64>)> {
    let mut map = BTreeMap::new();
    for r in recs {
        for e in &r.entries {
            map.insert((r.delta, e.k, column_label(r)), (e.merit_max, e.rate));
        }
    }
    map
}

/// Whitespace-separated columns: `k` then `log10 |E|` per record.
/// Missing sweeps are written as `nan`.
pub fn emit_plot_data(records: &[ConvergenceRecord]) -> String {
    let labels: Vec<String> = records.iter().map(|r| format!("{}_delta{}", column_label(r), r.delta)).collect();
    let max_k = records.iter().flat_map(|r| r.entries.iter().map(|e| e.k)).max().unwrap_or(0);
    let mut out = String::from("# k then log10 of the max-norm error per series\n");
    let _ = writeln!(out, "k {}", labels.join(" "));
    for k in 1..=max_k {
        let _ = write!(out, "{k}");
        for r in records {
            match r.entry(k) {
                Some(e) => {
                    let _ = write!(out, " {:.8e}", e.merit_max.log10());
                }
                None => out.push_str(" nan"),
            }
        }
        out.push('\n');
    }
    out
}

/// Two columns `gamma rho_c`.
pub fn emit_scan_data(scan: &[(f64, f64)]) -> String {
    let mut out = String::from("# closed-form 1D sweep rate versus gamma\ngamma rho_c\n");
    for (g, rho) in scan {
        let _ = writeln!(out, "{g:.16e} {rho:.16e}");
    }
    out
}

/// Flat row used to store records; one row per sweep entry, or a single row
/// with empty entry fields for a record without sweeps.
#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    kind: String,
    alpha: f64,
    delta: usize,
    n: usize,
    dim: usize,
    shift_c: f64,
    overlap: usize,
    convention: String,
    init: String,
    tol: f64,
    max_sweeps: usize,
    norm: String,
    converged: bool,
    k: Option<usize>,
    merit_max: Option<f64>,
    rate: Option<f64>,
    l2_merit: Option<f64>,
}

impl RecordRow {
    fn new(r: &ConvergenceRecord, e: Option<&SweepEntry>) -> Self {
        Self {
            kind: r.kind.to_string(),
            alpha: r.alpha,
            delta: r.delta,
            n: r.n,
            dim: r.dim,
            shift_c: r.shift_c,
            overlap: r.overlap,
            convention: r.convention.clone(),
            init: r.init.clone(),
            tol: r.tol,
            max_sweeps: r.max_sweeps,
            norm: r.norm.to_string(),
            converged: r.converged,
            k: e.map(|e| e.k),
            merit_max: e.map(|e| e.merit_max),
            rate: e.and_then(|e| e.rate),
            l2_merit: e.map(|e| e.l2_merit),
        }
    }

    fn same_record(&self, r: &ConvergenceRecord) -> bool {
        self.kind == r.kind.to_string()
            && self.alpha.to_bits() == r.alpha.to_bits()
            && self.delta == r.delta
            && self.n == r.n
            && self.dim == r.dim
            && self.shift_c.to_bits() == r.shift_c.to_bits()
            && self.convention == r.convention
            && self.init == r.init
            && self.norm == r.norm.to_string()
    }
}

/// Full-metadata record dump; floats use shortest round-trip formatting so
/// [`read_records_csv`] restores identical values.
pub fn write_records_csv(records: &[ConvergenceRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        if r.entries.is_empty() {
            w.serialize(RecordRow::new(r, None))?;
        }
        for e in &r.entries {
            w.serialize(RecordRow::new(r, Some(e)))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_records_csv(text: &str) -> Result<Vec<ConvergenceRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out: Vec<ConvergenceRecord> = Vec::new();
    for row in reader.deserialize::<RecordRow>() {
        let row = row?;
        let continues = out.last().is_some_and(|r| row.same_record(r) && row.k.is_some());
        if !continues {
            out.push(ConvergenceRecord {
                kind: row.kind.parse()?,
                alpha: row.alpha,
                delta: row.delta,
                n: row.n,
                dim: row.dim,
                shift_c: row.shift_c,
                overlap: row.overlap,
                convention: row.convention.clone(),
                init: row.init.clone(),
                tol: row.tol,
                max_sweeps: row.max_sweeps,
                norm: row.norm.parse::<MeritNorm>()?,
                entries: Vec::new(),
                converged: row.converged,
            });
        }
        if let (Some(k), Some(merit_max), Some(l2_merit)) = (row.k, row.merit_max, row.l2_merit) {
            let rec = out.last_mut().expect("pushed above");
            rec.entries.push(SweepEntry { k, merit_max, rate: row.rate, l2_merit });
        }
    }
    Ok(out)
}

/// Settings shared by every record of a suite run. Holds no timestamps or
/// thread counts so that output files depend only on the inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteMetadata {
    pub command: String,
    pub n: usize,
    pub dim: usize,
    pub convention: String,
    pub init: String,
    pub tol: f64,
    pub max_sweeps: usize,
    pub alphas: Vec<f64>,
    pub deltas: Vec<usize>,
}

impl SuiteMetadata {
    /// `key=value` lines in the config file format.
    pub fn to_config_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        format!(
            "# {} on a {}D grid\nN={}\nconvention={}\ninit={}\ntol={:e}\nmax_sweeps={}\nalpha={}\ndelta={}\n",
            self.command,
            self.dim,
            self.n,
            self.convention,
            self.init,
            self.tol,
            self.max_sweeps,
            join(self.alphas.iter().map(|a| format!("{a:e}")).collect()),
            join(self.deltas.iter().map(ToString::to_string).collect()),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub name: String,
    pub r: f64,
    pub s: f64,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSuiteResult {
    pub metadata: SuiteMetadata,
    pub records: Vec<ConvergenceRecord>,
    pub scans: Vec<ScanTable>,
}
