//! Text file formats: curves, workloads, datasets, pattern-table snapshots,
//! learner configs, traces and simulation reports.

use std::fs;
use std::io::Write;
use std::path::Path;

use bmcurve_core::cost_local::DropVector;
use bmcurve_core::learner::{LearnerConfig, TraceEntry};
use bmcurve_core::simulator::{QueryMode, SimReport};
use bmcurve_core::{
    BmcSpec, CostModel, Dataset, GlobalCostAccumulator, Grid, GridPoint, PatternTableSet, RangeQuery,
    Workload,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::parse(path, format!("{other:?}")),
        }
    } else {
        CliError::parse(path, e)
    }
}

/// JSON form of a curve: slots listed most significant first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveFile {
    /// Dimensions.
    pub d: usize,
    /// Bits per dimension.
    pub l: u32,
    /// Dimension index of every slot, most significant first.
    pub slots: Vec<u8>,
}

impl From<&BmcSpec> for CurveFile {
    fn from(c: &BmcSpec) -> Self {
        CurveFile {
            d: c.grid().dims(),
            l: c.grid().bits(),
            slots: c.slots_msb(),
        }
    }
}

impl TryFrom<CurveFile> for BmcSpec {
    type Error = bmcurve_core::Error;

    fn try_from(f: CurveFile) -> bmcurve_core::Result<Self> {
        BmcSpec::from_slots_msb(Grid::new(f.d, f.l)?, f.slots)
    }
}

/// Reads curves from a file holding either JSON (one [`CurveFile`] or an
/// array of them) or one text curve per line. Blank lines and lines starting
/// with `#` are skipped.
pub fn read_curves(path: &Path, grid: Grid) -> Result<Vec<BmcSpec>> {
    let text = read_text(path)?;
    parse_curves(&text, grid).map_err(|e| match e {
        CliError::Parse { message, .. } => CliError::parse(path, message),
        other => other,
    })
}

/// See [`read_curves`].
pub fn parse_curves(text: &str, grid: Grid) -> Result<Vec<BmcSpec>> {
    let trimmed = text.trim_start();
    let curves = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        let files: Vec<CurveFile> = if trimmed.starts_with('{') {
            vec![serde_json::from_str(text).map_err(|e| CliError::parse("<curves>", e))?]
        } else {
            serde_json::from_str(text).map_err(|e| CliError::parse("<curves>", e))?
        };
        files
            .into_iter()
            .map(BmcSpec::try_from)
            .collect::<bmcurve_core::Result<Vec<_>>>()?
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| BmcSpec::parse(l, grid.dims(), grid.bits()))
            .collect::<bmcurve_core::Result<Vec<_>>>()?
    };
    for c in &curves {
        grid.ensure_same(&c.grid())?;
    }
    Ok(curves)
}

/// JSON form of one query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    /// Lower corner.
    pub lo: Vec<u64>,
    /// Upper corner.
    pub hi: Vec<u64>,
}

/// Serializes a workload as `[{"lo": [...], "hi": [...]}, ...]`.
pub fn workload_to_json(w: &Workload) -> String {
    let records: Vec<QueryRecord> = w
        .queries()
        .iter()
        .map(|q| QueryRecord {
            lo: q.lo().coords().to_vec(),
            hi: q.hi().coords().to_vec(),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("plain data serializes")
}

/// Parses a workload JSON array for `grid`.
pub fn workload_from_json(text: &str, grid: Grid) -> Result<Workload> {
    let records: Vec<QueryRecord> =
        serde_json::from_str(text).map_err(|e| CliError::parse("<workload>", e))?;
    let queries = records
        .into_iter()
        .map(|r| RangeQuery::new(&grid, r.lo, r.hi))
        .collect::<bmcurve_core::Result<Vec<_>>>()?;
    Ok(Workload::new(grid, queries)?)
}

/// Dimension count of a workload file, from its first query.
pub fn workload_dims(path: &Path) -> Result<Option<usize>> {
    let records: Vec<QueryRecord> =
        serde_json::from_str(&read_text(path)?).map_err(|e| CliError::parse(path, e))?;
    Ok(records.first().map(|r| r.lo.len()))
}

/// Reads a workload JSON file.
pub fn read_workload(path: &Path, grid: Grid) -> Result<Workload> {
    workload_from_json(&read_text(path)?, grid).map_err(|e| relocate(e, path))
}

/// Writes a workload JSON file.
pub fn write_workload(path: &Path, w: &Workload) -> Result<()> {
    write_text(path, &workload_to_json(w))
}

fn relocate(e: CliError, path: &Path) -> CliError {
    match e {
        CliError::Parse { message, .. } => CliError::parse(path, message),
        other => other,
    }
}

/// Writes grid points as headerless CSV, one point per row.
pub fn write_dataset<W: Write>(out: W, data: &Dataset) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for p in data.points() {
        w.serialize(p.coords())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a dataset CSV file.
pub fn write_dataset_file(path: &Path, data: &Dataset) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_dataset(std::io::BufWriter::new(file), data).map_err(|e| csv_error(path, e))
}

/// Reads integer grid points from CSV. A first row that is not numeric is
/// taken as a header.
pub fn read_dataset(path: &Path, grid: Grid) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let parsed: std::result::Result<Vec<u64>, _> = record.iter().map(str::parse).collect();
        match parsed {
            Ok(coords) => points.push(grid.point(coords).map_err(|e| {
                CliError::parse(path, format!("row {}: {e}", row + 1))
            })?),
            Err(_) if row == 0 => continue,
            Err(e) => return Err(CliError::parse(path, format!("row {}: {e}", row + 1))),
        }
    }
    Ok(Dataset::new(grid, points)?)
}

/// Versioned JSON snapshot of the workload summaries behind the cost model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSnapshot {
    /// Always [`TableSnapshot::FORMAT`].
    pub format: String,
    /// Snapshot layout version.
    pub version: u32,
    /// Dimensions.
    pub d: usize,
    /// Bits per dimension.
    pub l: u32,
    /// Queries summarized.
    pub queries: u64,
    /// Total cells over all queries.
    pub cells: u128,
    /// Bit-difference matrix, `d` rows of `l` entries, lowest bit first.
    pub global: Vec<i64>,
    /// Non-zero pattern-table entries.
    pub entries: Vec<TableEntry>,
}

/// One pattern-table cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    /// Rising dimension.
    pub dim: usize,
    /// Rise exponent, from 1.
    pub rise: u32,
    /// Drop exponent of every other dimension, in dimension order.
    pub drops: Vec<u8>,
    /// Accumulated product count.
    pub count: u128,
}

impl TableSnapshot {
    /// Format tag.
    pub const FORMAT: &'static str = "bmcurve-tables";
    /// Current version.
    pub const VERSION: u32 = 1;

    /// Snapshot of a cost model.
    pub fn from_model(model: &CostModel) -> Self {
        let g = model.grid();
        let local = model.local();
        let entries = (0..g.dims())
            .flat_map(|dim| {
                local.entries(dim).map(move |(rise, drops, count)| TableEntry {
                    dim,
                    rise,
                    drops: drops.0,
                    count,
                })
            })
            .collect();
        TableSnapshot {
            format: Self::FORMAT.into(),
            version: Self::VERSION,
            d: g.dims(),
            l: g.bits(),
            queries: local.query_count(),
            cells: local.total_cells(),
            global: model.global().matrix().to_vec(),
            entries,
        }
    }

    /// Rebuilds the cost model.
    pub fn into_model(self) -> Result<CostModel> {
        if self.format != Self::FORMAT || self.version != Self::VERSION {
            return Err(CliError::Invalid(format!(
                "unsupported table snapshot {} v{}",
                self.format, self.version
            )));
        }
        let grid = Grid::new(self.d, self.l)?;
        let global = GlobalCostAccumulator::from_parts(grid, self.global, self.queries)?;
        let local = PatternTableSet::from_entries(
            grid,
            self.entries
                .into_iter()
                .map(|e| (e.dim, e.rise, DropVector(e.drops), e.count)),
            self.cells,
            self.queries,
        )?;
        Ok(CostModel::from_parts(global, local)?)
    }

    /// Grid of the snapshot.
    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.d, self.l)?)
    }
}

/// Reads a table snapshot file.
pub fn read_tables(path: &Path) -> Result<TableSnapshot> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::parse(path, e))
}

/// Writes a table snapshot file.
pub fn write_tables(path: &Path, snap: &TableSnapshot) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(snap).expect("plain data serializes"))
}

/// Learner settings as stored in TOML or JSON; missing fields take the
/// defaults of [`LearnerConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSettings {
    /// Episodes.
    pub episodes: usize,
    /// Steps per episode.
    pub steps: usize,
    /// Replay capacity.
    pub memory_capacity: usize,
    /// Batch size.
    pub batch_size: usize,
    /// Adam step size.
    pub learning_rate: f64,
    /// Discount factor.
    pub discount: f64,
    /// Initial exploration probability.
    pub epsilon_start: f64,
    /// Final exploration probability.
    pub epsilon_end: f64,
    /// Fraction of steps spent annealing.
    pub epsilon_anneal: f64,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    /// Seed.
    pub seed: u64,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        LearnerConfig::default().into()
    }
}

impl From<LearnerConfig> for LearnerSettings {
    fn from(c: LearnerConfig) -> Self {
        LearnerSettings {
            episodes: c.episodes,
            steps: c.steps,
            memory_capacity: c.memory_capacity,
            batch_size: c.batch_size,
            learning_rate: c.learning_rate,
            discount: c.discount,
            epsilon_start: c.epsilon_start,
            epsilon_end: c.epsilon_end,
            epsilon_anneal: c.epsilon_anneal,
            hidden: c.hidden,
            seed: c.seed,
        }
    }
}

impl From<LearnerSettings> for LearnerConfig {
    fn from(s: LearnerSettings) -> Self {
        LearnerConfig {
            episodes: s.episodes,
            steps: s.steps,
            memory_capacity: s.memory_capacity,
            batch_size: s.batch_size,
            learning_rate: s.learning_rate,
            discount: s.discount,
            epsilon_start: s.epsilon_start,
            epsilon_end: s.epsilon_end,
            epsilon_anneal: s.epsilon_anneal,
            hidden: s.hidden,
            seed: s.seed,
        }
    }
}

/// Reads learner settings; `.json` files are JSON, anything else TOML.
pub fn read_learner_config(path: &Path) -> Result<LearnerConfig> {
    let text = read_text(path)?;
    let settings: LearnerSettings = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::parse(path, e))?
    };
    let config: LearnerConfig = settings.into();
    config.validate()?;
    Ok(config)
}

#[derive(Serialize)]
struct TraceRow {
    step: usize,
    episode: usize,
    cost: f64,
    ratio: f64,
    epsilon: f64,
    loss: Option<f64>,
}

/// Writes a learner trace as CSV: `step,episode,cost,ratio,epsilon,loss`.
pub fn write_trace<W: Write>(out: W, trace: &[TraceEntry]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in trace {
        w.serialize(TraceRow {
            step: e.step,
            episode: e.episode,
            cost: e.cost,
            ratio: e.ratio,
            epsilon: e.epsilon,
            loss: e.loss,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a learner trace CSV file.
pub fn write_trace_file(path: &Path, trace: &[TraceEntry]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_trace(std::io::BufWriter::new(file), trace).map_err(|e| csv_error(path, e))
}

#[derive(Serialize)]
struct ReportRow<'a> {
    curve: &'a str,
    query_id: usize,
    blocks: usize,
    result_size: usize,
    precision: f64,
}

/// Writes per-query simulation rows:
/// `curve,query_id,blocks,result_size,precision`.
pub fn write_report<W: Write>(out: W, reports: &[SimReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        for (query_id, s) in r.per_query.iter().enumerate() {
            w.serialize(ReportRow {
                curve: &r.curve,
                query_id,
                blocks: s.blocks,
                result_size: s.result_size,
                precision: s.precision,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a per-query report CSV file.
pub fn write_report_file(path: &Path, reports: &[SimReport]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_report(std::io::BufWriter::new(file), reports).map_err(|e| csv_error(path, e))
}

/// Aggregate statistics of one curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    /// Curve label.
    pub curve: String,
    /// `full-range` or `per-section`.
    pub mode: String,
    /// Queries run.
    pub queries: usize,
    /// Average block accesses.
    pub mean_blocks: f64,
    /// Median block accesses.
    pub median_blocks: f64,
    /// Average precision.
    pub mean_precision: f64,
}

impl From<&SimReport> for ReportSummary {
    fn from(r: &SimReport) -> Self {
        ReportSummary {
            curve: r.curve.clone(),
            mode: mode_name(r.mode).into(),
            queries: r.per_query.len(),
            mean_blocks: r.mean_blocks(),
            median_blocks: r.median_blocks(),
            mean_precision: r.mean_precision(),
        }
    }
}

/// Label of a query mode.
pub fn mode_name(mode: QueryMode) -> &'static str {
    match mode {
        QueryMode::FullRange => "full-range",
        QueryMode::PerSection => "per-section",
    }
}

/// Converts integer coordinates back into a dataset; used by tests and tools.
pub fn dataset_from_rows(grid: Grid, rows: Vec<Vec<u64>>) -> Result<Dataset> {
    let points = rows
        .into_iter()
        .map(|r| grid.point(r))
        .collect::<bmcurve_core::Result<Vec<GridPoint>>>()?;
    Ok(Dataset::new(grid, points)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bmcurve_core::workload::{gen_dataset, gen_queries, DataKind, QueryShape};

    #[test]
    fn curve_json_is_msb_first() {
        let c = BmcSpec::parse("XXYXYY", 2, 3).unwrap();
        let json = serde_json::to_string(&CurveFile::from(&c)).unwrap();
        assert_eq!(json, r#"{"d":2,"l":3,"slots":[0,0,1,0,1,1]}"#);
        let back: CurveFile = serde_json::from_str(&json).unwrap();
        assert_eq!(BmcSpec::try_from(back).unwrap(), c);
    }

    #[test]
    fn curve_lists_in_both_forms() {
        let g = Grid::new(2, 2).unwrap();
        let text = "# two curves\nXYXY\n\nYYXX\n";
        let from_text = parse_curves(text, g).unwrap();
        assert_eq!(from_text.len(), 2);
        let json = serde_json::to_string(&from_text.iter().map(CurveFile::from).collect::<Vec<_>>()).unwrap();
        assert_eq!(parse_curves(&json, g).unwrap(), from_text);
        assert!(parse_curves("XYXYXY", g).is_err());
    }

    #[test]
    fn workload_round_trip() {
        let g = Grid::new(2, 3).unwrap();
        let w = Workload::new(g, vec![RangeQuery::new(&g, vec![0, 2], vec![4, 3]).unwrap()]).unwrap();
        let json = workload_to_json(&w);
        assert_eq!(workload_from_json(&json, g).unwrap(), w);
        let compact: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(compact, serde_json::json!([{"lo": [0, 2], "hi": [4, 3]}]));
        assert!(workload_from_json(r#"[{"lo":[5,0],"hi":[4,3]}]"#, g).is_err());
    }

    #[test]
    fn snapshot_round_trip_preserves_costs() {
        let g = Grid::new(3, 4).unwrap();
        let data = gen_dataset(DataKind::Skewed, 300, g, 1).unwrap();
        let w = gen_queries(&data, 40, &QueryShape::Edges(vec![3, 5, 2]), 2).unwrap();
        let model = CostModel::build(&w).unwrap();
        let snap = TableSnapshot::from_model(&model);
        let text = serde_json::to_string(&snap).unwrap();
        let back: TableSnapshot = serde_json::from_str(&text).unwrap();
        assert_eq!(back, snap);
        let rebuilt = back.into_model().unwrap();
        for c in bmcurve_core::curve::all_curves(g).step_by(1001) {
            assert_eq!(rebuilt.cost(&c).unwrap(), model.cost(&c).unwrap());
        }
    }

    #[test]
    fn snapshot_rejects_other_versions() {
        let g = Grid::new(2, 2).unwrap();
        let mut snap = TableSnapshot::from_model(&CostModel::build(&Workload::new(g, vec![]).unwrap()).unwrap());
        snap.version = 99;
        assert!(snap.into_model().is_err());
    }

    #[test]
    fn learner_settings_fill_defaults() {
        let s: LearnerSettings = toml::from_str("episodes = 5\nhidden = [16]\n").unwrap();
        let c: LearnerConfig = s.into();
        assert_eq!(c.episodes, 5);
        assert_eq!(c.hidden, vec![16]);
        assert_eq!(c.steps, LearnerConfig::default().steps);
        assert!(toml::from_str::<LearnerSettings>("episodez = 5").is_err());
    }

    #[test]
    fn dataset_csv_round_trip() {
        let g = Grid::new(2, 4).unwrap();
        let data = dataset_from_rows(g, vec![vec![1, 2], vec![15, 0]]).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1,2\n15,0\n");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, format!("x,y\n{}", String::from_utf8(buf).unwrap())).unwrap();
        assert_eq!(read_dataset(&path, g).unwrap(), data);
        std::fs::write(&path, "1,2\n16,0\n").unwrap();
        assert!(matches!(read_dataset(&path, g), Err(CliError::Parse { .. })));
        assert!(matches!(read_dataset(&dir.path().join("missing.csv"), g), Err(CliError::Io { .. })));
    }

    #[test]
    fn report_csv_columns() {
        use bmcurve_core::simulator::QueryStat;
        let r = SimReport {
            curve: "zc".into(),
            mode: QueryMode::PerSection,
            per_query: vec![QueryStat {
                blocks: 3,
                result_size: 10,
                precision: 0.5,
            }],
        };
        let mut buf = Vec::new();
        write_report(&mut buf, std::slice::from_ref(&r)).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "curve,query_id,blocks,result_size,precision\nzc,0,3,10,0.5\n"
        );
        let s = ReportSummary::from(&r);
        assert_eq!(s.mode, "per-section");
        assert_eq!(s.mean_blocks, 3.0);
    }
}
