//! Tabular output: every result the tool produces is rendered through
//! [`Table`], which writes RFC 4180 CSV or an aligned markdown table.
//!
//! Money cells print as raw whole pounds in CSV and as `£1,234,567` in
//! markdown. Counts are kept as reals until rendering.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::SaGrid;
use crate::experiment::{CellResult, GridResult, MethodComparison, SeedRecord};
use crate::scenario::ExitCounts;
use crate::sim::RunStats;
use crate::{Error, Money, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Md,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Md => "md",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Md),
            other => Err(Error::Config {
                path: "--format".into(),
                message: format!("unknown format `{other}`, expected csv or md"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    /// A real number and the decimals to print.
    Real(f64, usize),
    Money(Money),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Real(x, d) => format!("{x:.d$}"),
            Cell::Money(m) => m.whole_pounds().to_string(),
        }
    }

    fn markdown(&self) -> String {
        match self {
            Cell::Money(m) => m.display_pounds(),
            other => other.csv(),
        }
    }

    fn is_numeric(&self) -> bool {
        !matches!(self, Cell::Text(_))
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<Money> for Cell {
    fn from(m: Money) -> Self {
        Cell::Money(m)
    }
}

/// Which result a table holds; fixes the file stem and the expected shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    SearchedFraction,
    Found,
    FoundRatio,
    Missed,
    SearchCost,
    MissedRatio,
    ScenarioCost,
    TreeCounts,
    SimulatedFound,
    ErrorVsTree,
    Comparison,
    RelativeComparison,
    Replications,
    Seeds,
    OptionCosts,
}

impl TableKind {
    pub fn file_stem(self) -> &'static str {
        match self {
            TableKind::SearchedFraction => "searched_fraction",
            TableKind::Found => "found",
            TableKind::FoundRatio => "found_ratio",
            TableKind::Missed => "missed",
            TableKind::SearchCost => "search_cost",
            TableKind::MissedRatio => "missed_ratio",
            TableKind::ScenarioCost => "scenario_cost",
            TableKind::TreeCounts => "tree_counts",
            TableKind::SimulatedFound => "simulated_found",
            TableKind::ErrorVsTree => "error_vs_tree",
            TableKind::Comparison => "comparison",
            TableKind::RelativeComparison => "relative_comparison",
            TableKind::Replications => "replications",
            TableKind::Seeds => "seeds",
            TableKind::OptionCosts => "option_costs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: TableKind,
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(kind: TableKind, title: impl Into<String>, header: Vec<String>) -> Self {
        Table {
            kind,
            title: title.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    /// Every row must be as wide as the header.
    pub fn check_shape(&self) -> Result<()> {
        if self.header.is_empty() {
            return Err(Error::Shape(format!(
                "{} table has no columns",
                self.kind.file_stem()
            )));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                return Err(Error::Shape(format!(
                    "{} row {i} has {} cells, header has {}",
                    self.kind.file_stem(),
                    row.len(),
                    self.header.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        self.check_shape()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_markdown(&self) -> Result<String> {
        self.check_shape()?;
        let rendered: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::markdown).collect())
            .collect();
        let mut widths: Vec<usize> = self
            .header
            .iter()
            .map(|h| h.chars().count().max(3))
            .collect();
        for row in &rendered {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let numeric: Vec<bool> = (0..self.header.len())
            .map(|c| !self.rows.is_empty() && self.rows.iter().all(|r| r[c].is_numeric()))
            .collect();
        let pad = |s: &str, w: usize, right: bool| {
            let fill = " ".repeat(w - s.chars().count());
            if right {
                format!("{fill}{s}")
            } else {
                format!("{s}{fill}")
            }
        };
        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, "### {}\n", self.title);
        }
        let header: Vec<String> = self
            .header
            .iter()
            .zip(&widths)
            .zip(&numeric)
            .map(|((h, &w), &n)| pad(h, w, n))
            .collect();
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let rule: Vec<String> = widths
            .iter()
            .zip(&numeric)
            .map(|(&w, &n)| {
                let dashes = "-".repeat(w - 1);
                if n {
                    format!("{dashes}:")
                } else {
                    format!("{dashes}-")
                }
            })
            .collect();
        let _ = writeln!(out, "| {} |", rule.join(" | "));
        for row in &rendered {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .zip(&numeric)
                .map(|((c, &w), &n)| pad(c, w, n))
                .collect();
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
        Ok(out)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Md => self.to_markdown(),
        }
    }
}

/// Writes `table` into `dir` as `<stem>[_suffix].<ext>` and returns the path.
pub fn emit_table(
    table: &Table,
    format: Format,
    dir: &Path,
    suffix: Option<&str>,
) -> Result<PathBuf> {
    let body = table.render(format)?;
    fs::create_dir_all(dir)?;
    let stem = match suffix {
        Some(s) => format!("{}_{s}", table.kind.file_stem()),
        None => table.kind.file_stem().to_string(),
    };
    let path = dir.join(format!("{stem}.{}", format.extension()));
    fs::write(&path, body)?;
    Ok(path)
}

fn percent(x: f64) -> String {
    let pct = x * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}%", pct.round() as i64)
    } else {
        format!("{pct}%")
    }
}

fn grid_header(first: &str, sg_levels: &[f64]) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain(sg_levels.iter().map(|&sg| format!("SG {}", percent(sg))))
        .collect()
}

fn sa_table(
    kind: TableKind,
    title: String,
    sa: &SaGrid,
    cell: impl Fn(&crate::analytic::SaCell) -> Cell,
) -> Table {
    let mut t = Table::new(kind, title, grid_header("TG", &sa.sg_levels));
    for (tg, row) in sa.tg_levels.iter().zip(&sa.cells) {
        let mut r = vec![Cell::Text(percent(*tg))];
        r.extend(row.iter().map(&cell));
        t.push(r);
    }
    t
}

/// The seven scenario-analysis grids for one clandestine-growth level.
pub fn sa_tables(sa: &SaGrid) -> Vec<Table> {
    let cg = percent(sa.cg);
    vec![
        sa_table(
            TableKind::SearchedFraction,
            "Proportion of vehicles searched".into(),
            sa,
            |c| Cell::Real(c.searched, 4),
        ),
        sa_table(
            TableKind::Found,
            format!("Positive lorries found, CG {cg}"),
            sa,
            |c| Cell::Real(c.found, 1),
        ),
        sa_table(
            TableKind::FoundRatio,
            format!("Found relative to base, CG {cg}"),
            sa,
            |c| Cell::Real(c.found_ratio, 4),
        ),
        sa_table(
            TableKind::Missed,
            format!("Positive lorries missed, CG {cg}"),
            sa,
            |c| Cell::Real(c.missed, 1),
        ),
        sa_table(
            TableKind::SearchCost,
            "Cost of extra searches".into(),
            sa,
            |c| Cell::Money(c.search_cost),
        ),
        sa_table(
            TableKind::MissedRatio,
            format!("Missed relative to base, CG {cg}"),
            sa,
            |c| Cell::Real(c.missed_ratio, 4),
        ),
        sa_table(
            TableKind::ScenarioCost,
            format!("Scenario cost including search cost, CG {cg}"),
            sa,
            |c| Cell::Money(c.cost),
        ),
    ]
}

/// Expected end counts of the decision tree for one `(tg, cg)` block, one
/// row per search option.
pub fn tree_counts_table(rows: &[(f64, f64, f64, ExitCounts)]) -> Table {
    let header = [
        "TG", "CG", "SG", "France", "UK shed", "UK berth", "UK total", "Missed",
    ]
    .map(String::from)
    .to_vec();
    let mut t = Table::new(
        TableKind::TreeCounts,
        "Decision tree expected end counts",
        header,
    );
    for &(tg, cg, sg, c) in rows {
        t.push(vec![
            Cell::Text(percent(tg)),
            Cell::Text(percent(cg)),
            Cell::Text(percent(sg)),
            Cell::Real(c.france, 1),
            Cell::Real(c.shed, 1),
            Cell::Real(c.berth, 1),
            Cell::Real(c.uk_total(), 1),
            Cell::Real(c.missed, 1),
        ]);
    }
    t
}

/// Mean UK detections at cg = 0 with standard errors.
pub fn simulated_found_table(result: &GridResult) -> Result<Table> {
    let mut header = vec!["TG".to_string()];
    for &sg in &result.sg_levels {
        header.push(format!("SG {}", percent(sg)));
        header.push(format!("SE SG {}", percent(sg)));
    }
    let mut t = Table::new(
        TableKind::SimulatedFound,
        format!("{} mean UK detections, CG 0%", result.method.label()),
        header,
    );
    if result.found_cg0.len() != result.tg_levels.len() && !result.found_cg0.is_empty() {
        return Err(Error::Shape(
            "found grid does not match traffic levels".into(),
        ));
    }
    for ((tg, found), se) in result
        .tg_levels
        .iter()
        .zip(&result.found_cg0)
        .zip(&result.found_cg0_se)
    {
        let mut row = vec![Cell::Text(percent(*tg))];
        for (f, s) in found.iter().zip(se) {
            row.push(Cell::Real(*f, 2));
            row.push(Cell::Real(*s, 2));
        }
        t.push(row);
    }
    t.check_shape()?;
    Ok(t)
}

/// Decision tree count minus the method's count, cg = 0.
pub fn error_table(result: &GridResult) -> Result<Table> {
    let mut t = Table::new(
        TableKind::ErrorVsTree,
        format!(
            "Decision tree minus {} UK detections, CG 0%",
            result.method.label()
        ),
        grid_header("TG", &result.sg_levels),
    );
    for (tg, row) in result.tg_levels.iter().zip(&result.error_vs_dt) {
        let mut r = vec![Cell::Text(percent(*tg))];
        r.extend(row.iter().map(|&e| Cell::Real(e, 2)));
        t.push(r);
    }
    t.check_shape()?;
    Ok(t)
}

/// Expected cost per option for each method, with the cheapest option.
pub fn comparison_table(cmp: &MethodComparison) -> Result<Table> {
    let mut header = grid_header("Method", &cmp.sg_levels);
    header.push("Cheapest".into());
    let mut t = Table::new(TableKind::Comparison, "Expected cost by method", header);
    for row in &cmp.rows {
        let mut r = vec![Cell::Text(row.method.label().into())];
        r.extend(row.costs.iter().map(|&c| Cell::Money(c)));
        let cheapest = cmp
            .sg_levels
            .get(row.cheapest)
            .ok_or_else(|| Error::Shape("cheapest index out of range".into()))?;
        r.push(Cell::Text(format!("SG {}", percent(*cheapest))));
        t.push(r);
    }
    t.check_shape()?;
    Ok(t)
}

/// Each method's costs minus its own minimum.
pub fn relative_table(cmp: &MethodComparison) -> Result<Table> {
    let mut t = Table::new(
        TableKind::RelativeComparison,
        "Cost above each method's cheapest option",
        grid_header("Method", &cmp.sg_levels),
    );
    for (row, rel) in cmp.rows.iter().zip(crate::experiment::relative_costs(cmp)) {
        let mut r = vec![Cell::Text(row.method.label().into())];
        r.extend(rel.into_iter().map(Cell::Money));
        t.push(r);
    }
    t.check_shape()?;
    Ok(t)
}

pub fn option_costs_table(result: &GridResult) -> Result<Table> {
    let header = ["SG", "Expected cost", "Above cheapest"]
        .map(String::from)
        .to_vec();
    let mut t = Table::new(
        TableKind::OptionCosts,
        format!("{} expected cost per search option", result.method.label()),
        header,
    );
    for ((sg, cost), rel) in result
        .sg_levels
        .iter()
        .zip(&result.option_costs)
        .zip(&result.ranking.relative)
    {
        t.push(vec![
            Cell::Text(percent(*sg)),
            Cell::Money(*cost),
            Cell::Money(*rel),
        ]);
    }
    t.check_shape()?;
    Ok(t)
}

const REPLICATION_HEADER: [&str; 15] = [
    "tg",
    "cg",
    "sg",
    "rep",
    "seed",
    "arrivals",
    "france_found",
    "shed_found",
    "berth_found",
    "missed",
    "negative_through",
    "in_system",
    "mean_time_in_system",
    "shed_utilization",
    "shed_bypassed",
];

fn replication_row(scenario: (f64, f64, f64), rep: usize, seed: u64, r: &RunStats) -> Vec<Cell> {
    let shed = r.stations.get(crate::sim::station::UK_SHED);
    vec![
        Cell::Real(scenario.0, 2),
        Cell::Real(scenario.1, 2),
        Cell::Real(scenario.2, 2),
        Cell::Int(rep as i64),
        Cell::Text(seed.to_string()),
        Cell::Int(r.arrivals as i64),
        Cell::Int(r.france_found as i64),
        Cell::Int(r.shed_found as i64),
        Cell::Int(r.berth_found as i64),
        Cell::Int(r.missed as i64),
        Cell::Int(r.negative_through as i64),
        Cell::Int(r.in_system as i64),
        Cell::Real(r.mean_time_in_system, 6),
        Cell::Real(shed.map_or(0.0, |s| s.utilization), 6),
        Cell::Int(shed.map_or(0, |s| s.bypassed) as i64),
    ]
}

/// One row per replication, in canonical (cell, rep) order.
pub fn replications_table(cells: &[CellResult]) -> Table {
    let mut t = Table::new(
        TableKind::Replications,
        "",
        REPLICATION_HEADER.map(String::from).to_vec(),
    );
    for c in cells {
        let s = (c.scenario.tg, c.scenario.cg, c.scenario.sg);
        for (rep, (seed, run)) in c.seeds.iter().zip(&c.runs).enumerate() {
            t.push(replication_row(s, rep, *seed, run));
        }
    }
    t
}

pub fn seeds_table(seeds: &[SeedRecord]) -> Table {
    let header = ["tg_index", "cg_index", "sg_index", "rep", "seed"]
        .map(String::from)
        .to_vec();
    let mut t = Table::new(TableKind::Seeds, "", header);
    for s in seeds {
        t.push(vec![
            Cell::Int(s.tg_index as i64),
            Cell::Int(s.cg_index as i64),
            Cell::Int(s.sg_index as i64),
            Cell::Int(s.rep as i64),
            Cell::Text(s.seed.to_string()),
        ]);
    }
    t
}

/// Everything needed to reproduce a run's outputs exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub root_seed: u64,
    pub replications: usize,
    /// Seeds of every replication, keyed by method (`MC`, `DES0`, ...).
    pub seeds: std::collections::BTreeMap<String, Vec<SeedRecord>>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: impl Into<String>, config: &crate::config::ToolConfig) -> Self {
        Manifest {
            tool: "screencost".into(),
            version: crate::VERSION.into(),
            command: command.into(),
            config_hash: config.hash(),
            root_seed: config.root_seed,
            replications: config.replications.reps,
            seeds: Default::default(),
            files: Vec::new(),
        }
    }

    pub fn add_seeds(&mut self, result: &GridResult) {
        if result.cells.is_empty() {
            return;
        }
        self.seeds
            .insert(result.method.seed_key().to_string(), result.seeds());
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}
