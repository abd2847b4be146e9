//! End-to-end build: ingest, optional sanitize, category joins, store
//! assembly, layouts and export, plus reloading a finished build.
//!
//! A build directory holds `csv/` and `sql/` exports of every output table,
//! `tables.csv` (the column catalog used to reload them with their types) and
//! `build_report.json`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Instant;

use log::info;
use serde::Serialize;
use thiserror::Error;

use crate::export::{export_tables, ExportError, ExportFormat, SqlDialect};
use crate::ingest::{
    infer_column_type, infer_schema_from_file, load_table_with, parse_csv_stream, CsvDialect, IngestError, LoadOptions,
    LoadOutcome, Overrides, Reject,
};
use crate::layout::{
    column_layout_table, layout_size_report, row_layout_table, to_column_layout, to_row_layout, LayoutError,
    LayoutSizes, NutrientSet,
};
use crate::menustat::{parse_menustat_with, restaurant_items_to_foods, MenustatError, DEFAULT_ID_BASE};
use crate::model::{
    assemble_store, build_category_table, AssemblyDiagnostics, Category, CategorySpec, CategoryTable, FoodId,
    FoodStore, IndexedTable, JoinDiagnostics, JoinInputs, ModelError, NutrientDictionary, StoreParts, ENERGY_KCAL,
};
use crate::sanitize::{load_sanitized, SanitizeReport};
use crate::scrape::{crawl, scraped_foods_table, scraped_to_foods, CrawlOptions, FileFetcher, ScrapeError};
use crate::table::{Cell, ColumnSpec, RawTable, SemanticType, TableSchema};

pub const CATALOG_FILE: &str = "tables.csv";
pub const REPORT_FILE: &str = "build_report.json";

const USDA_SHARED: [&str; 4] = ["food", "food_nutrient", "food_portion", "nutrient"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Join,
    Assemble,
    Menustat,
    Scrape,
    Layout,
    Export,
    Load,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Join => "join",
            Stage::Assemble => "assemble",
            Stage::Menustat => "menustat",
            Stage::Scrape => "scrape",
            Stage::Layout => "layout",
            Stage::Export => "export",
            Stage::Load => "load",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {value}")]
    BadValue { line: usize, key: String, value: String },
    #[error("no source configured (need usda, menustat or scrape)")]
    NoSources,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum BuildErrorKind {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Menustat(#[from] MenustatError),
    #[error(transparent)]
    Scrape(#[from] ScrapeError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Error)]
#[error("{stage}: {kind}")]
pub struct BuildError {
    pub stage: Stage,
    #[source]
    pub kind: BuildErrorKind,
}

impl BuildError {
    fn at(stage: Stage) -> impl FnOnce(BuildErrorKind) -> BuildError {
        move |kind| BuildError { stage, kind }
    }

    pub fn is_io(&self) -> bool {
        match &self.kind {
            BuildErrorKind::Io { .. } => true,
            BuildErrorKind::Ingest(e) => e.is_io(),
            BuildErrorKind::Menustat(MenustatError::Ingest(e)) => e.is_io(),
            BuildErrorKind::Export(e) => matches!(e, ExportError::File { .. } | ExportError::Io(_)),
            BuildErrorKind::Scrape(e) => matches!(e, ScrapeError::Fetch { .. }),
            _ => false,
        }
    }

    pub fn is_usage(&self) -> bool {
        matches!(self.kind, BuildErrorKind::Config(_))
    }
}

trait StageResult<T> {
    fn stage(self, stage: Stage) -> Result<T, BuildError>;
}

impl<T, E: Into<BuildErrorKind>> StageResult<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T, BuildError> {
        self.map_err(|e| BuildError::at(stage)(e.into()))
    }
}

fn io_err(stage: Stage, path: &Path) -> impl FnOnce(io::Error) -> BuildError + '_ {
    move |source| BuildError {
        stage,
        kind: BuildErrorKind::Io {
            path: path.to_path_buf(),
            source,
        },
    }
}

/// Source locations and per-source settings, read from a flat `key = value` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceConfig {
    /// Directory holding the USDA file set.
    pub usda: Option<PathBuf>,
    pub menustat: Option<PathBuf>,
    pub menustat_year: Option<u16>,
    /// Directory holding `index.html` and the scraped pages.
    pub scrape: Option<PathBuf>,
    /// First id for restaurant foods; Menustat items come first, then scraped foods.
    pub id_base: i64,
    /// Run USDA files through the sanitizer too.
    pub sanitize: bool,
    /// Route malformed USDA records to reject tables instead of failing.
    pub lenient: bool,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            usda: None,
            menustat: None,
            menustat_year: None,
            scrape: None,
            id_base: DEFAULT_ID_BASE,
            sanitize: false,
            lenient: false,
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

impl SourceConfig {
    /// Parses config text; relative paths resolve against `base`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            let bad = || ConfigError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            };
            let path = || base.join(value);
            match key {
                "usda" => cfg.usda = Some(path()),
                "menustat" => cfg.menustat = Some(path()),
                "scrape" => cfg.scrape = Some(path()),
                "menustat_year" => cfg.menustat_year = Some(value.parse().map_err(|_| bad())?),
                "id_base" => cfg.id_base = value.parse().ok().filter(|&b: &i64| b > 0).ok_or_else(bad)?,
                "sanitize" => cfg.sanitize = parse_bool(value).ok_or_else(bad)?,
                "lenient" => cfg.lenient = parse_bool(value).ok_or_else(bad)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        if cfg.usda.is_none() && cfg.menustat.is_none() && cfg.scrape.is_none() {
            return Err(ConfigError::NoSources);
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, BuildError> {
        let text = fs::read_to_string(path).map_err(io_err(Stage::Config, path))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(""))).stage(Stage::Config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LayoutChoice {
    Row,
    Column,
    #[default]
    Both,
}

impl LayoutChoice {
    pub fn rows(self) -> bool {
        matches!(self, LayoutChoice::Row | LayoutChoice::Both)
    }

    pub fn columns(self) -> bool {
        matches!(self, LayoutChoice::Column | LayoutChoice::Both)
    }
}

impl std::str::FromStr for LayoutChoice {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "row" => Ok(LayoutChoice::Row),
            "column" => Ok(LayoutChoice::Column),
            "both" => Ok(LayoutChoice::Both),
            other => Err(ConfigError::Invalid(format!("unknown layout `{other}`"))),
        }
    }
}

/// Slots of the column layout.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum NutrientSelection {
    #[default]
    Default,
    Named(NutrientSet),
    /// Every nutrient that has at least one fact, in dictionary order.
    AllPresent,
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub layout: LayoutChoice,
    pub nutrients: NutrientSelection,
    pub dialect: SqlDialect,
    pub crawl: CrawlOptions,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            layout: LayoutChoice::Both,
            nutrients: NutrientSelection::Default,
            dialect: SqlDialect::mysql(),
            crawl: CrawlOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LayoutReport {
    pub row_records: Option<usize>,
    pub column_records: Option<usize>,
    pub dropped_facts: Option<usize>,
    pub sizes: Option<LayoutSizes>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    /// Rows per written table, by table name.
    pub tables: BTreeMap<String, usize>,
    /// Rows in each ingested USDA file.
    pub ingested: BTreeMap<String, usize>,
    pub rejects: BTreeMap<String, usize>,
    pub joins: BTreeMap<String, JoinDiagnostics>,
    pub assembly: Option<AssemblyDiagnostics>,
    pub sanitize: Option<SanitizeReport>,
    pub menustat_items: Option<usize>,
    pub scraped_foods: Option<usize>,
    pub pages_fetched: Option<usize>,
    pub store_foods: usize,
    pub store_facts: usize,
    pub store_portions: usize,
    pub layout: LayoutReport,
    pub wall_time_ms: u128,
}

/// The USDA inputs after ingest, keyed by file stem.
#[derive(Debug, Default)]
pub struct UsdaTables {
    pub tables: BTreeMap<String, RawTable>,
    pub rejects: BTreeMap<String, Vec<Reject>>,
}

fn usda_overrides() -> Overrides {
    [
        ("description", SemanticType::Text),
        ("amount", SemanticType::Decimal),
        ("gram_weight", SemanticType::Decimal),
        ("serving_size", SemanticType::Decimal),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Name rules only, for a file with a header and no data rows.
fn header_only_schema(path: &Path, overrides: &Overrides) -> Result<TableSchema, IngestError> {
    let file = fs::File::open(path).map_err(|source| IngestError::File {
        path: path.to_path_buf(),
        source,
    })?;
    let header = match parse_csv_stream(io::BufReader::new(file), CsvDialect::usda()).next() {
        Some(rec) => rec?.texts(),
        None => return Err(IngestError::EmptySample),
    };
    let columns = header
        .into_iter()
        .map(|name| {
            let ty = overrides
                .get(&name)
                .copied()
                .unwrap_or_else(|| infer_column_type(&name, std::iter::empty()));
            ColumnSpec::new(name, ty)
        })
        .collect();
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(TableSchema::new(&stem, columns, true)?)
}

fn load_one(path: &Path, name: &str, cfg: &SourceConfig) -> Result<LoadOutcome, IngestError> {
    if cfg.sanitize {
        return load_sanitized(path, name, cfg.lenient).map(|(o, _)| o);
    }
    let overrides = usda_overrides();
    let schema = match infer_schema_from_file(path, CsvDialect::usda(), usize::MAX, &overrides) {
        Err(IngestError::EmptySample) => header_only_schema(path, &overrides)?,
        other => other?,
    };
    let opts = LoadOptions {
        lenient: cfg.lenient,
        ..LoadOptions::default()
    };
    load_table_with(path, &schema.with_table_name(name), &opts)
}

/// Loads the USDA file set from `dir` in parallel. The experimental category
/// file is optional; every other file must exist.
pub fn load_usda(dir: &Path, cfg: &SourceConfig) -> Result<UsdaTables, BuildError> {
    let mut names: Vec<(&str, bool)> = USDA_SHARED.iter().map(|n| (*n, true)).collect();
    names.extend(Category::USDA.iter().map(|c| (c.table_name(), *c != Category::Experimental)));
    let present: Vec<(&str, PathBuf)> = names
        .iter()
        .map(|&(n, required)| (n, dir.join(format!("{n}.csv")), required))
        .filter(|(_, p, required)| *required || p.exists())
        .map(|(n, p, _)| (n, p))
        .collect();
    let loaded: Vec<Result<LoadOutcome, IngestError>> = thread::scope(|s| {
        let handles: Vec<_> = present
            .iter()
            .map(|(n, p)| s.spawn(move || load_one(p, n, cfg)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("loader panicked")).collect()
    });
    let mut out = UsdaTables::default();
    for ((name, _), res) in present.iter().zip(loaded) {
        let outcome = res.stage(Stage::Ingest)?;
        info!("loaded {name}: {} rows", outcome.table.loaded_row_count());
        if !outcome.rejects.is_empty() {
            out.rejects.insert(name.to_string(), outcome.rejects);
        }
        out.tables.insert(name.to_string(), outcome.table);
    }
    Ok(out)
}

/// `primary` plus every canonical entry whose id, name and key are all unused.
fn with_canonical_fallback(primary: NutrientDictionary) -> Result<NutrientDictionary, ModelError> {
    let mut defs: Vec<_> = primary.iter().cloned().collect();
    for d in NutrientDictionary::canonical().iter() {
        let taken = primary.get(d.nutrient_id).is_some() || primary.find(&d.name).is_some() || primary.find(&d.key).is_some();
        if !taken {
            defs.push(d.clone());
        }
    }
    NutrientDictionary::new(defs)
}

/// Everything a build produces before it is written out.
#[derive(Debug)]
pub struct BuildOutput {
    pub store: FoodStore,
    pub category_tables: Vec<CategoryTable>,
    /// Every table to export, in write order.
    pub tables: Vec<RawTable>,
    pub report: BuildReport,
}

fn usda_stage(
    dir: &Path,
    cfg: &SourceConfig,
    report: &mut BuildReport,
) -> Result<(NutrientDictionary, Vec<CategoryTable>, StoreParts, Vec<RawTable>), BuildError> {
    let mut usda = load_usda(dir, cfg)?;
    for (name, t) in &usda.tables {
        report.ingested.insert(name.clone(), t.loaded_row_count());
    }
    let mut extra = Vec::new();
    for (name, rejects) in &usda.rejects {
        report.rejects.insert(name.clone(), rejects.len());
        let (schema, rows, _) = Reject::to_table(rejects).into_parts();
        extra.push(RawTable::new(schema.with_table_name(format!("{name}_rejects")), rows, "").expect("fixed width"));
    }
    let mut take = |n: &str| usda.tables.remove(n).expect("required table loaded");
    let dictionary = NutrientDictionary::from_table(&take("nutrient")).stage(Stage::Join)?;
    let food = IndexedTable::new(take("food")).with_indexes(&["fdc_id"]).stage(Stage::Join)?;
    let nutrients = IndexedTable::new(take("food_nutrient"))
        .with_indexes(&["fdc_id", "nutrient_id"])
        .stage(Stage::Join)?;
    let portions = IndexedTable::new(take("food_portion")).with_indexes(&["fdc_id"]).stage(Stage::Join)?;

    let inputs = JoinInputs {
        food: &food,
        nutrients: &nutrients,
        portions: &portions,
        dictionary: &dictionary,
    };
    let category_files = &usda.tables;
    let joined: Vec<Result<CategoryTable, ModelError>> = thread::scope(|s| {
        let handles: Vec<_> = Category::USDA
            .iter()
            .map(|&c| {
                s.spawn(move || {
                    build_category_table(&CategorySpec::usda(c), &inputs, category_files.get(c.table_name()), ENERGY_KCAL)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("join worker panicked")).collect()
    });
    let category_tables = joined.into_iter().collect::<Result<Vec<_>, _>>().stage(Stage::Join)?;
    for ct in &category_tables {
        report.joins.insert(ct.category.table_name().to_string(), ct.diagnostics);
    }
    let (parts, diag) = assemble_store(&category_tables, &nutrients, &dictionary).stage(Stage::Assemble)?;
    report.assembly = Some(diag);
    Ok((dictionary, category_tables, parts, extra))
}

fn merge(into: &mut StoreParts, from: StoreParts) {
    into.foods.extend(from.foods);
    into.facts.extend(from.facts);
    into.portions.extend(from.portions);
}

fn column_set(store: &FoodStore, selection: &NutrientSelection) -> Result<NutrientSet, LayoutError> {
    match selection {
        NutrientSelection::Default => Ok(NutrientSet::default()),
        NutrientSelection::Named(set) => Ok(set.clone()),
        NutrientSelection::AllPresent => {
            let used: HashSet<_> = store.facts().iter().map(|f| f.nutrient_id).collect();
            NutrientSet::new(
                store
                    .dictionary()
                    .iter()
                    .filter(|d| used.contains(&d.nutrient_id))
                    .map(|d| d.name.clone()),
            )
        }
    }
}

/// Runs every configured stage and returns the tables to write, without touching disk
/// beyond reading sources.
pub fn run_build(cfg: &SourceConfig, opts: &BuildOptions) -> Result<BuildOutput, BuildError> {
    let started = Instant::now();
    let mut report = BuildReport::default();
    let mut tables = Vec::new();
    let mut parts = StoreParts::default();
    let mut category_tables = Vec::new();
    let mut dictionary = NutrientDictionary::canonical();

    if let Some(dir) = &cfg.usda {
        let (dict, cats, usda_parts, rejects) = usda_stage(dir, cfg, &mut report)?;
        dictionary = with_canonical_fallback(dict).stage(Stage::Join)?;
        category_tables = cats;
        parts = usda_parts;
        tables.extend(rejects);
    }
    let mut reserved: HashSet<FoodId> = parts.foods.iter().map(|f| f.fdc_id).collect();
    let mut next_id = cfg.id_base;

    if let Some(path) = &cfg.menustat {
        let outcome = parse_menustat_with(path, cfg.menustat_year).stage(Stage::Menustat)?;
        report.sanitize = Some(outcome.report);
        report.menustat_items = Some(outcome.items.len());
        let m = restaurant_items_to_foods(&outcome.items, next_id, &reserved).stage(Stage::Menustat)?;
        next_id += outcome.items.len() as i64;
        reserved.extend(m.foods.iter().map(|f| f.fdc_id));
        merge(&mut parts, m);
    }
    if let Some(dir) = &cfg.scrape {
        let result = crawl(&FileFetcher::new(dir), "index.html", &opts.crawl).stage(Stage::Scrape)?;
        report.scraped_foods = Some(result.foods.len());
        report.pages_fetched = Some(result.pages_fetched);
        let s = scraped_to_foods(&result.foods, next_id, &reserved, &dictionary).stage(Stage::Scrape)?;
        merge(&mut parts, s);
        tables.push(scraped_foods_table(&result.foods));
    }

    let store = FoodStore::new(dictionary, parts).stage(Stage::Assemble)?;
    report.store_foods = store.len();
    report.store_facts = store.facts().len();
    report.store_portions = store.portions().len();

    let rows = opts.layout.rows().then(|| to_row_layout(&store));
    let wide = if opts.layout.columns() {
        let set = column_set(&store, &opts.nutrients).stage(Stage::Layout)?;
        Some(to_column_layout(&store, &set).stage(Stage::Layout)?)
    } else {
        None
    };
    report.layout = LayoutReport {
        row_records: rows.as_ref().map(Vec::len),
        column_records: wide.as_ref().map(|w| w.records.len()),
        dropped_facts: wide.as_ref().map(|w| w.dropped_facts),
        sizes: rows.as_ref().zip(wide.as_ref()).map(|(r, w)| layout_size_report(r, w)),
    };

    let mut out_tables: Vec<RawTable> = store.to_tables().into_iter().collect();
    out_tables.extend(category_tables.iter().map(|c| c.table.clone()));
    out_tables.extend(rows.as_deref().map(row_layout_table));
    out_tables.extend(wide.as_ref().map(column_layout_table));
    out_tables.extend(tables);
    for t in &out_tables {
        report.tables.insert(t.name().to_string(), t.rows().len());
    }
    report.wall_time_ms = started.elapsed().as_millis();
    Ok(BuildOutput {
        store,
        category_tables,
        tables: out_tables,
        report,
    })
}

pub fn catalog_schema() -> TableSchema {
    TableSchema::of(
        "tables",
        &[
            ("table_name", SemanticType::Text),
            ("position", SemanticType::Integer),
            ("column_name", SemanticType::Text),
            ("semantic_type", SemanticType::Text),
        ],
    )
    .expect("static schema")
}

fn catalog_table(tables: &[&RawTable]) -> RawTable {
    let rows = tables
        .iter()
        .flat_map(|t| {
            t.schema().columns().iter().enumerate().map(|(i, c)| {
                vec![
                    Cell::Text(t.name().to_string()),
                    Cell::Int(i as i64),
                    Cell::Text(c.name.clone()),
                    Cell::Text(c.semantic_type.as_str().to_string()),
                ]
            })
        })
        .collect();
    RawTable::new(catalog_schema(), rows, "").expect("fixed width")
}

/// Writes `tables` as CSV and SQL plus the catalog.
pub fn write_tables(tables: &[&RawTable], dialect: &SqlDialect, out: &Path) -> Result<Vec<PathBuf>, BuildError> {
    fs::create_dir_all(out).map_err(io_err(Stage::Export, out))?;
    let mut written = export_tables(tables, ExportFormat::Csv, dialect, &out.join("csv")).stage(Stage::Export)?;
    written.extend(export_tables(tables, ExportFormat::Sql, dialect, &out.join("sql")).stage(Stage::Export)?);
    let catalog = out.join(CATALOG_FILE);
    fs::write(&catalog, crate::export::csv_bytes(&catalog_table(tables))).map_err(io_err(Stage::Export, &catalog))?;
    written.push(catalog);
    Ok(written)
}

/// Runs the build and writes it under `out`; returns the report, also saved as `build_report.json`.
pub fn build(cfg: &SourceConfig, opts: &BuildOptions, out: &Path) -> Result<BuildReport, BuildError> {
    let started = Instant::now();
    let output = run_build(cfg, opts)?;
    let refs: Vec<&RawTable> = output.tables.iter().collect();
    write_tables(&refs, &opts.dialect, out)?;
    let mut report = output.report;
    report.wall_time_ms = started.elapsed().as_millis();
    let path = out.join(REPORT_FILE);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&path, json + "\n").map_err(io_err(Stage::Export, &path))?;
    Ok(report)
}

/// Table schemas recorded by a finished build, in write order.
pub fn read_catalog(build_dir: &Path) -> Result<Vec<TableSchema>, BuildError> {
    let path = build_dir.join(CATALOG_FILE);
    let table = crate::ingest::load_table(&path, &catalog_schema(), true).stage(Stage::Load)?;
    let mut order: Vec<String> = Vec::new();
    let mut columns: BTreeMap<String, Vec<ColumnSpec>> = BTreeMap::new();
    for row in table.rows() {
        let name = row[0].as_str().unwrap_or_default().to_string();
        let ty = row[3]
            .as_str()
            .unwrap_or_default()
            .parse::<SemanticType>()
            .map_err(|e| BuildError::at(Stage::Load)(IngestError::Schema(e).into()))?;
        if !columns.contains_key(&name) {
            order.push(name.clone());
        }
        columns
            .entry(name)
            .or_default()
            .push(ColumnSpec::new(row[2].as_str().unwrap_or_default(), ty));
    }
    order
        .into_iter()
        .map(|n| {
            let cols = columns.remove(&n).unwrap_or_default();
            TableSchema::new(&n, cols, true).map_err(|e| BuildError::at(Stage::Load)(IngestError::Schema(e).into()))
        })
        .collect()
}

/// Reloads one exported table with its catalog schema.
pub fn load_built_table(build_dir: &Path, schema: &TableSchema) -> Result<RawTable, BuildError> {
    let path = build_dir.join("csv").join(format!("{}.csv", schema.table_name()));
    crate::ingest::load_table(&path, schema, true).stage(Stage::Load)
}

pub fn load_built_tables(build_dir: &Path) -> Result<Vec<RawTable>, BuildError> {
    read_catalog(build_dir)?
        .iter()
        .map(|s| load_built_table(build_dir, s))
        .collect()
}

/// Reopens the food store of a finished build.
pub fn load_store(build_dir: &Path) -> Result<FoodStore, BuildError> {
    let schemas = read_catalog(build_dir)?;
    let get = |name: &str| {
        let schema = schemas.iter().find(|s| s.table_name() == name).ok_or_else(|| {
            BuildError::at(Stage::Load)(
                ModelError::NoSuchColumn {
                    table: CATALOG_FILE.to_string(),
                    column: name.to_string(),
                }
                .into(),
            )
        })?;
        load_built_table(build_dir, schema)
    };
    let foods = get("foods")?;
    let facts = get("nutrient_values")?;
    let portions = get("portions")?;
    let nutrient = get("nutrient")?;
    FoodStore::from_tables(&foods, &facts, &portions, &nutrient).stage(Stage::Load)
}

/// Re-exports every table of a finished build in one format.
pub fn export_build(
    build_dir: &Path,
    format: ExportFormat,
    dialect: &SqlDialect,
    out: &Path,
) -> Result<Vec<PathBuf>, BuildError> {
    let tables = load_built_tables(build_dir)?;
    let refs: Vec<&RawTable> = tables.iter().collect();
    export_tables(&refs, format, dialect, out).stage(Stage::Export)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let cfg = SourceConfig::parse(
            "# sources\nusda = data/usda\nmenustat = m.csv\nmenustat_year=2022\nid_base = 500\nsanitize = yes\n",
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(cfg.usda.as_deref(), Some(Path::new("/base/data/usda")));
        assert_eq!(cfg.menustat_year, Some(2022));
        assert_eq!(cfg.id_base, 500);
        assert!(cfg.sanitize && !cfg.lenient);
    }

    #[test]
    fn config_errors() {
        let p = Path::new(".");
        assert!(matches!(SourceConfig::parse("usda\n", p), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(SourceConfig::parse("colour = red\n", p), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(SourceConfig::parse("usda=a\nusda=b\n", p), Err(ConfigError::DuplicateKey { line: 2, .. })));
        assert!(matches!(SourceConfig::parse("usda=a\nid_base=-3\n", p), Err(ConfigError::BadValue { .. })));
        assert!(matches!(SourceConfig::parse("# nothing\n", p), Err(ConfigError::NoSources)));
    }

    #[test]
    fn missing_usda_file_is_stage_annotated_io() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SourceConfig {
            usda: Some(dir.path().to_path_buf()),
            ..SourceConfig::default()
        };
        let err = run_build(&cfg, &BuildOptions::default()).unwrap_err();
        assert_eq!(err.stage, Stage::Ingest);
        assert!(err.is_io());
        assert!(err.to_string().starts_with("ingest: "));
    }
}
