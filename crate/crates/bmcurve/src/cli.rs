//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use bmcurve_core::curve::all_curves;
use bmcurve_core::learner::{Learner, LearnerConfig};
use bmcurve_core::oracle::{naive_global_cost, naive_local_cost, DEFAULT_CELL_BUDGET};
use bmcurve_core::simulator::{compare_curves, CurveOrder, QueryMode};
use bmcurve_core::workload::{gen_dataset, gen_queries, DataKind, QueryShape};
use bmcurve_core::{BmcSpec, CostModel, Grid, Workload};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bench::{cost_sweep, SweepConfig};
use crate::error::{CliError, Result};
use crate::formats::{self, CurveFile, ReportSummary, TableSnapshot};
use crate::ingest::load_points;

/// Bit-merging curve toolkit.
#[derive(Debug, Parser, Serialize)]
#[command(name = "bmcurve", version, about)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output format of the printed results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Subcommand.
    #[command(subcommand)]
    pub command: Command,
}

/// Printed output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Comma-separated rows after a `# config` line.
    Csv,
    /// One JSON object with `config` and `rows`.
    Json,
}

/// Subcommands.
#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Generate datasets and workloads, or ingest raw point files.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Estimate curve costs for a workload.
    Estimate(EstimateArgs),
    /// Learn a curve for a workload.
    Learn(LearnArgs),
    /// Count block accesses of curves over a dataset.
    Simulate(SimulateArgs),
    /// Build or inspect pattern-table snapshots.
    #[command(subcommand)]
    Tables(TablesCommand),
}

/// Data kinds on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Uniform.
    Uni,
    /// Gaussian clusters.
    Skew,
}

/// `gen` subcommands.
#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GenCommand {
    /// Synthetic points as CSV.
    Data {
        /// Distribution.
        #[arg(long, value_enum)]
        kind: Kind,
        /// Number of points.
        #[arg(long)]
        n: usize,
        /// Dimensions.
        #[arg(long, default_value_t = 2)]
        dims: usize,
        /// Bits per dimension.
        #[arg(long)]
        bits: u32,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Queries centered on dataset points, as JSON.
    Queries {
        /// Dataset CSV the centers are drawn from.
        #[arg(long)]
        data: PathBuf,
        /// Dimensions.
        #[arg(long, default_value_t = 2)]
        dims: usize,
        /// Bits per dimension.
        #[arg(long)]
        bits: u32,
        /// Number of queries.
        #[arg(long)]
        n: usize,
        /// Edge length per dimension, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "aspect")]
        edge: Vec<u64>,
        /// Side ratio `x:y` for two-dimensional queries of fixed area.
        #[arg(long, requires = "area")]
        aspect: Option<String>,
        /// Cells per query in aspect mode.
        #[arg(long)]
        area: Option<u64>,
        /// Output JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Quantize a raw numeric CSV onto the grid.
    Ingest {
        /// Raw CSV; the first `dims` fields of each row are used.
        #[arg(long)]
        input: PathBuf,
        /// Dimensions.
        #[arg(long, default_value_t = 2)]
        dims: usize,
        /// Bits per dimension.
        #[arg(long)]
        bits: u32,
        /// Per-dimension `min:max`, comma separated; defaults to the data extent.
        #[arg(long, value_delimiter = ',')]
        bounds: Vec<String>,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Curve selection shared by several subcommands.
#[derive(Debug, Args, Serialize)]
pub struct CurveArgs {
    /// Curve in text form; repeatable.
    #[arg(long = "curve")]
    pub curves: Vec<String>,
    /// File with curves (text lines or JSON).
    #[arg(long)]
    pub curves_file: Option<PathBuf>,
    /// Include the Z-order curve.
    #[arg(long)]
    pub zc: bool,
    /// Include the lexicographic curve.
    #[arg(long)]
    pub lc: bool,
    /// Include every curve of the grid.
    #[arg(long)]
    pub all_curves: bool,
}

/// Where the workload comes from.
#[derive(Debug, Args, Serialize)]
pub struct WorkloadArgs {
    /// Workload JSON.
    #[arg(long)]
    pub workload: Option<PathBuf>,
    /// Dimensions; inferred from the workload when omitted.
    #[arg(long)]
    pub dims: Option<usize>,
    /// Bits per dimension.
    #[arg(long)]
    pub bits: Option<u32>,
}

/// `estimate` flags.
#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    /// Workload.
    pub workload: WorkloadArgs,
    /// Pattern-table snapshot used instead of a workload for closed forms.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    /// Curves.
    pub curves: CurveArgs,
    /// Report the global cost.
    #[arg(long)]
    pub global: bool,
    /// Report the local cost.
    #[arg(long)]
    pub local: bool,
    /// Also compute both costs by brute force and check agreement.
    #[arg(long)]
    pub naive: bool,
    /// Time estimators over workload prefixes of size 1, 2, 4, ...
    #[arg(long)]
    pub benchmark: bool,
    /// Repetitions per timing median.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
}

/// `learn` flags.
#[derive(Debug, Args, Serialize)]
pub struct LearnArgs {
    #[command(flatten)]
    #[serde(flatten)]
    /// Workload.
    pub workload: WorkloadArgs,
    /// Pattern-table snapshot used instead of a workload.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    /// Learner settings (TOML, or JSON by extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Starting curve; Z-order by default.
    #[arg(long)]
    pub start: Option<String>,
    /// Override the episode count.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Override the steps per episode.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Write the learned curve here (text form, or JSON by extension).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the per-step trace CSV here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// Query execution mode on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One scan per query section.
    Section,
    /// One scan over the whole curve range.
    Full,
}

/// `simulate` flags.
#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Dataset CSV of grid points.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    /// Workload.
    pub workload: WorkloadArgs,
    #[command(flatten)]
    #[serde(flatten)]
    /// Curves.
    pub curves: CurveArgs,
    /// Include the Hilbert curve (d = 2 or 3).
    #[arg(long)]
    pub hilbert: bool,
    /// Points per block.
    #[arg(long, default_value_t = bmcurve_core::simulator::DEFAULT_BLOCK_SIZE)]
    pub block_size: usize,
    /// Query execution mode.
    #[arg(long, value_enum, default_value_t = Mode::Section)]
    pub mode: Mode,
    /// Per-query report CSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Aggregate JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// `tables` subcommands.
#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TablesCommand {
    /// Summarize a workload into a snapshot.
    Build {
        #[command(flatten)]
        #[serde(flatten)]
        /// Workload.
        workload: WorkloadArgs,
        /// Output snapshot JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Describe a snapshot.
    Info {
        /// Snapshot JSON.
        #[arg(long)]
        tables: PathBuf,
    },
}

/// Column names plus rows, printed as CSV or JSON.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn emit(out: &mut dyn Write, format: Format, config: &Value, table: &Table) -> Result<()> {
    let stdout = |e| CliError::io("<stdout>", e);
    match format {
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| {
                    Value::Object(
                        table
                            .columns
                            .iter()
                            .map(|c| c.to_string())
                            .zip(r.iter().cloned())
                            .collect(),
                    )
                })
                .collect();
            let doc = json!({ "config": config, "rows": rows });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json value")).map_err(stdout)
        }
        Format::Csv => {
            writeln!(out, "# config {config}").map_err(stdout)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.columns).expect("in-memory write");
            for r in &table.rows {
                w.write_record(r.iter().map(|v| match v {
                    Value::String(s) => s.clone(),
                    Value::Null => String::new(),
                    other => other.to_string(),
                }))
                .expect("in-memory write");
            }
            let bytes = w.into_inner().expect("in-memory flush");
            out.write_all(&bytes).map_err(stdout)
        }
    }
}

/// Runs a parsed command line, printing results to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let config = serde_json::to_value(cli).expect("flags serialize");
    let table = match &cli.command {
        Command::Gen(g) => gen(g, cli.seed)?,
        Command::Estimate(a) => estimate(a)?,
        Command::Learn(a) => {
            let (table, resolved) = learn(a, cli.seed)?;
            let mut config = config;
            config["learner"] = serde_json::to_value(formats::LearnerSettings::from(resolved)).expect("settings");
            return emit(out, cli.format, &config, &table);
        }
        Command::Simulate(a) => simulate(a)?,
        Command::Tables(t) => tables(t)?,
    };
    emit(out, cli.format, &config, &table)
}

fn kind(k: Kind) -> DataKind {
    match k {
        Kind::Uni => DataKind::Uniform,
        Kind::Skew => DataKind::Skewed,
    }
}

fn parse_ratio(text: &str) -> Result<(u64, u64)> {
    let bad = || CliError::Invalid(format!("aspect must look like 16:1, got {text:?}"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_bounds(items: &[String]) -> Result<Option<Vec<(f64, f64)>>> {
    if items.is_empty() {
        return Ok(None);
    }
    items
        .iter()
        .map(|s| {
            let bad = || CliError::Invalid(format!("bounds must look like min:max, got {s:?}"));
            let (a, b) = s.split_once(':').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn gen(cmd: &GenCommand, seed: u64) -> Result<Table> {
    let mut t = Table::new(&["output", "rows", "dropped"]);
    match cmd {
        GenCommand::Data {
            kind: k,
            n,
            dims,
            bits,
            out,
        } => {
            let data = gen_dataset(kind(*k), *n, Grid::new(*dims, *bits)?, seed)?;
            formats::write_dataset_file(out, &data)?;
            t.push(vec![json!(out), json!(data.len()), json!(0)]);
        }
        GenCommand::Queries {
            data,
            dims,
            bits,
            n,
            edge,
            aspect,
            area,
            out,
        } => {
            let grid = Grid::new(*dims, *bits)?;
            let shape = match (aspect, area) {
                (Some(r), Some(a)) => QueryShape::Aspect {
                    area: *a,
                    ratio: parse_ratio(r)?,
                },
                _ if !edge.is_empty() => QueryShape::Edges(edge.clone()),
                _ => return Err(CliError::Invalid("give --edge or --aspect with --area".into())),
            };
            let source = formats::read_dataset(data, grid)?;
            let w = gen_queries(&source, *n, &shape, seed)?;
            formats::write_workload(out, &w)?;
            t.push(vec![json!(out), json!(w.len()), json!(0)]);
        }
        GenCommand::Ingest {
            input,
            dims,
            bits,
            bounds,
            out,
        } => {
            let got = load_points(input, Grid::new(*dims, *bits)?, parse_bounds(bounds)?)?;
            formats::write_dataset_file(out, &got.dataset)?;
            t.push(vec![json!(out), json!(got.dataset.len()), json!(got.dropped)]);
        }
    }
    Ok(t)
}

fn resolve_grid(w: &WorkloadArgs) -> Result<Grid> {
    let bits = w
        .bits
        .ok_or_else(|| CliError::Invalid("--bits is required with --workload".into()))?;
    let dims = match (w.dims, &w.workload) {
        (Some(d), _) => d,
        (None, Some(path)) => formats::workload_dims(path)?
            .ok_or_else(|| CliError::Invalid("empty workload; pass --dims".into()))?,
        (None, None) => return Err(CliError::Invalid("--dims or --workload is required".into())),
    };
    Ok(Grid::new(dims, bits)?)
}

fn load_workload(w: &WorkloadArgs) -> Result<Option<Workload>> {
    match &w.workload {
        Some(path) => Ok(Some(formats::read_workload(path, resolve_grid(w)?)?)),
        None => Ok(None),
    }
}

/// Workload and model from either a workload file or a snapshot.
fn load_model(w: &WorkloadArgs, tables: Option<&Path>) -> Result<(Option<Workload>, CostModel)> {
    let workload = load_workload(w)?;
    let model = match (tables, &workload) {
        (Some(path), _) => {
            let model = formats::read_tables(path)?.into_model()?;
            if let Some(wl) = &workload {
                model.grid().ensure_same(&wl.grid())?;
            }
            model
        }
        (None, Some(wl)) => CostModel::build(wl)?,
        (None, None) => return Err(CliError::Invalid("give --workload or --tables".into())),
    };
    Ok((workload, model))
}

fn select_curves(c: &CurveArgs, grid: Grid) -> Result<Vec<(String, BmcSpec)>> {
    let mut out: Vec<(String, BmcSpec)> = Vec::new();
    if c.zc {
        out.push(("zc".into(), BmcSpec::z_order(grid)));
    }
    if c.lc {
        out.push(("lc".into(), BmcSpec::lexicographic(grid, 0)));
    }
    for text in &c.curves {
        let curve = BmcSpec::parse(text, grid.dims(), grid.bits())?;
        out.push((curve.render(), curve));
    }
    if let Some(path) = &c.curves_file {
        for curve in formats::read_curves(path, grid)? {
            out.push((curve.render(), curve));
        }
    }
    if c.all_curves {
        let count = bmcurve_core::curve::curve_count(grid).unwrap_or(u128::MAX);
        if count > bmcurve_core::oracle::DEFAULT_CURVE_BUDGET {
            return Err(CliError::Invalid(format!("--all-curves would enumerate {count} curves")));
        }
        out.extend(all_curves(grid).map(|c| (c.render(), c)));
    }
    Ok(out)
}

fn estimate(a: &EstimateArgs) -> Result<Table> {
    let (workload, model) = load_model(&a.workload, a.tables.as_deref())?;
    let grid = model.grid();
    let mut curves = select_curves(&a.curves, grid)?;
    if curves.is_empty() {
        curves.push(("zc".into(), BmcSpec::z_order(grid)));
    }
    if a.benchmark {
        let wl = workload.ok_or_else(|| CliError::Invalid("--benchmark needs --workload".into()))?;
        return benchmark(&wl, &curves, a.reps);
    }
    let (show_global, show_local) = match (a.global, a.local) {
        (false, false) => (true, true),
        flags => flags,
    };
    let mut columns = vec!["curve"];
    if show_global {
        columns.push("global");
    }
    if show_local {
        columns.push("local");
    }
    columns.push("cost");
    if a.naive {
        columns.extend(["naive_global", "naive_local"]);
    }
    let mut t = Table::new(&columns);
    for (name, curve) in &curves {
        let cost = model.cost(curve)?;
        let mut row = vec![json!(name)];
        if show_global {
            row.push(json!(cost.global.to_string()));
        }
        if show_local {
            row.push(json!(cost.local.to_string()));
        }
        row.push(json!(cost.product()));
        if a.naive {
            let wl = workload
                .as_ref()
                .ok_or_else(|| CliError::Invalid("--naive needs --workload".into()))?;
            let ng = naive_global_cost(curve, wl);
            let nl = naive_local_cost(curve, wl, DEFAULT_CELL_BUDGET)?;
            if (ng, nl) != (cost.global, cost.local) {
                return Err(CliError::Core(bmcurve_core::Error::Invariant(
                    "closed-form and naive costs disagree",
                )));
            }
            row.extend([json!(ng.to_string()), json!(nl.to_string())]);
        }
        t.push(row);
    }
    Ok(t)
}

fn benchmark(w: &Workload, curves: &[(String, BmcSpec)], reps: usize) -> Result<Table> {
    let mut sizes = Vec::new();
    let mut n = 1;
    while n <= w.len() {
        sizes.push(n);
        n *= 2;
    }
    let prefixes: Vec<Workload> = sizes
        .iter()
        .map(|&n| Workload::new(w.grid(), w.queries()[..n].to_vec()))
        .collect::<bmcurve_core::Result<_>>()?;
    let specs: Vec<BmcSpec> = curves.iter().map(|c| c.1.clone()).collect();
    let rows = cost_sweep(
        &prefixes,
        &specs,
        SweepConfig {
            reps,
            ..SweepConfig::default()
        },
    )?;
    let mut t = Table::new(&[
        "n",
        "init_global_us",
        "init_local_us",
        "global_us",
        "local_us",
        "naive_global_us",
        "naive_local_us",
        "local_speedup",
    ]);
    let us = |d: std::time::Duration| json!(d.as_secs_f64() * 1e6);
    for r in rows {
        t.push(vec![
            json!(r.n),
            us(r.init_global),
            us(r.init_local),
            us(r.global),
            us(r.local),
            us(r.naive_global),
            us(r.naive_local),
            json!(r.local_speedup()),
        ]);
    }
    Ok(t)
}

fn learn(a: &LearnArgs, seed: u64) -> Result<(Table, LearnerConfig)> {
    let (_, model) = load_model(&a.workload, a.tables.as_deref())?;
    let grid = model.grid();
    let mut config = match &a.config {
        Some(path) => formats::read_learner_config(path)?,
        None => LearnerConfig::default(),
    };
    config.seed = seed;
    if let Some(e) = a.episodes {
        config.episodes = e;
    }
    if let Some(s) = a.steps {
        config.steps = s;
    }
    config.validate()?;
    let start = match &a.start {
        Some(text) => BmcSpec::parse(text, grid.dims(), grid.bits())?,
        None => BmcSpec::z_order(grid),
    };
    let outcome = Learner::new(grid, config.clone())?.run(&start, &model)?;
    if let Some(path) = &a.out {
        let text = if path.extension().is_some_and(|e| e == "json") {
            serde_json::to_string(&CurveFile::from(&outcome.best)).expect("curve serializes")
        } else {
            format!("{}\n", outcome.best.render())
        };
        formats::write_text(path, &text)?;
    }
    if let Some(path) = &a.trace {
        formats::write_trace_file(path, &outcome.trace)?;
    }
    let mut t = Table::new(&["curve", "role", "global", "local", "cost", "ratio"]);
    for (role, curve, cost) in [
        ("initial", &start, outcome.initial_cost),
        ("learned", &outcome.best, outcome.best_cost),
    ] {
        t.push(vec![
            json!(curve.render()),
            json!(role),
            json!(cost.global.to_string()),
            json!(cost.local.to_string()),
            json!(cost.product()),
            json!(cost.product() / outcome.initial_cost.product()),
        ]);
    }
    Ok((t, config))
}

fn simulate(a: &SimulateArgs) -> Result<Table> {
    let workload = load_workload(&a.workload)?
        .ok_or_else(|| CliError::Invalid("simulate needs --workload".into()))?;
    let grid = workload.grid();
    let data = formats::read_dataset(&a.data, grid)?;
    let mut orders: Vec<(String, CurveOrder)> = select_curves(&a.curves, grid)?
        .into_iter()
        .map(|(n, c)| (n, CurveOrder::Bmc(c)))
        .collect();
    if a.hilbert {
        orders.push(("hc".into(), CurveOrder::Hilbert(grid)));
    }
    if orders.is_empty() {
        return Err(CliError::Invalid("no curves selected".into()));
    }
    let mode = match a.mode {
        Mode::Section => QueryMode::PerSection,
        Mode::Full => QueryMode::FullRange,
    };
    let reports = compare_curves(&data, &workload, &orders, a.block_size, mode, DEFAULT_CELL_BUDGET)?;
    if let Some(path) = &a.report {
        formats::write_report_file(path, &reports)?;
    }
    let summaries: Vec<ReportSummary> = reports.iter().map(ReportSummary::from).collect();
    if let Some(path) = &a.summary {
        formats::write_text(path, &serde_json::to_string_pretty(&summaries).expect("summary serializes"))?;
    }
    let mut t = Table::new(&["curve", "mode", "queries", "mean_blocks", "median_blocks", "mean_precision"]);
    for s in summaries {
        t.push(vec![
            json!(s.curve),
            json!(s.mode),
            json!(s.queries),
            json!(s.mean_blocks),
            json!(s.median_blocks),
            json!(s.mean_precision),
        ]);
    }
    Ok(t)
}

fn tables(cmd: &TablesCommand) -> Result<Table> {
    let snap = match cmd {
        TablesCommand::Build { workload, out } => {
            let w = load_workload(workload)?.ok_or_else(|| CliError::Invalid("give --workload".into()))?;
            let snap = TableSnapshot::from_model(&CostModel::build(&w)?);
            formats::write_tables(out, &snap)?;
            snap
        }
        TablesCommand::Info { tables } => {
            let snap = formats::read_tables(tables)?;
            // Validate by rebuilding.
            snap.clone().into_model()?;
            snap
        }
    };
    let mut t = Table::new(&["version", "d", "l", "queries", "cells", "entries"]);
    t.push(vec![
        json!(snap.version),
        json!(snap.d),
        json!(snap.l),
        json!(snap.queries),
        json!(snap.cells.to_string()),
        json!(snap.entries.len()),
    ]);
    Ok(t)
}
