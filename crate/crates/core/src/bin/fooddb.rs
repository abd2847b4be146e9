use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rust_decimal::Decimal;

use fooddb::export::{emit_csv, ExportFormat, SqlDialect};
use fooddb::fixture::{gen_fixture, FixtureError, FixtureOptions};
use fooddb::images::{apply_plan, manifest_table, plan_images, read_image_list, ImageError, DEFAULT_MAX_DIM};
use fooddb::layout::NutrientSet;
use fooddb::model::{Category, FoodId};
use fooddb::pipeline::{
    build, export_build, load_store, BuildError, BuildOptions, LayoutChoice, NutrientSelection, SourceConfig,
};
use fooddb::query::{nutrient_profile, search, DescriptionIndex, NutrientConstraint, QueryError, QueryRequest};
use fooddb::scrape::{CrawlOptions, Timing};
use fooddb::table::{format_decimal, parse_decimal};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "fooddb", version, about = "Build a unified food and nutrient database from USDA, restaurant and scraped sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded miniature source tree and its manifest.
    GenFixture(GenFixtureArgs),
    /// Ingest, join, lay out and export every configured source.
    Build(BuildArgs),
    /// Search food descriptions in a finished build.
    Search(SearchArgs),
    /// List every nutrient fact of one food.
    Profile(ProfileArgs),
    /// Re-export the tables of a finished build.
    Export(ExportArgs),
    /// Image naming and resizing.
    #[command(subcommand)]
    Images(ImagesCommand),
}

#[derive(Args)]
struct GenFixtureArgs {
    /// Generator seed; equal seeds give identical trees.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Foods in the USDA file set.
    #[arg(long, default_value_t = 1000)]
    foods: usize,
    /// Nutrients reported for every food; energy is always first.
    #[arg(long, default_value_t = 8)]
    nutrients: usize,
    /// Restaurants in the scrape pages.
    #[arg(long, default_value_t = 5)]
    restaurants: usize,
    /// Rows of the dirty restaurant CSV (0 skips it).
    #[arg(long, default_value_t = 0)]
    menustat_rows: usize,
    /// Synthetic PNGs plus an image list (0 skips them).
    #[arg(long, default_value_t = 0)]
    images: usize,
    /// Output directory.
    #[arg(long, default_value = "fixture")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Row,
    Column,
    Both,
}

#[derive(Args)]
struct BuildArgs {
    /// Flat `key = value` source file (keys: usda, menustat, menustat_year, scrape, id_base, sanitize, lenient).
    #[arg(long)]
    config: Option<PathBuf>,
    /// USDA directory; overrides the config.
    #[arg(long)]
    usda: Option<PathBuf>,
    /// Restaurant CSV; overrides the config.
    #[arg(long)]
    menustat: Option<PathBuf>,
    /// Release year stored on each restaurant item.
    #[arg(long)]
    year: Option<u16>,
    /// Scrape fixture directory; overrides the config.
    #[arg(long)]
    scrape: Option<PathBuf>,
    /// Nutrient layouts to write.
    #[arg(long, value_enum, default_value = "both")]
    layout: LayoutArg,
    /// Column-layout slots, comma separated, or `all` for every nutrient with data.
    #[arg(long, default_value = "fiber,energy")]
    nutrients: String,
    /// SQL dialect of the dumps: mysql, postgres or sqlite.
    #[arg(long, default_value = "mysql")]
    dialect: String,
    /// Sanitize USDA inputs as well as restaurant CSVs.
    #[arg(long)]
    sanitize: bool,
    /// Send malformed USDA records to reject tables.
    #[arg(long)]
    lenient: bool,
    /// Scrape worker count.
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Minimum delay between fetches of one worker, in milliseconds.
    #[arg(long, default_value_t = 500)]
    delay_ms: u64,
    /// Sleep for real between fetches instead of on a virtual clock.
    #[arg(long)]
    real_time: bool,
    /// Print the sanitize report as one JSON object.
    #[arg(long)]
    sanitize_report: bool,
    /// Build directory to write.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    /// Case-insensitive substring of the description.
    query: String,
    /// Build directory to read.
    #[arg(long, default_value = "out")]
    build: PathBuf,
    /// branded, foundation, sr_legacy, experimental or restaurant.
    #[arg(long)]
    category: Option<Category>,
    /// Substring of the brand owner or restaurant.
    #[arg(long)]
    source: Option<String>,
    /// Lower bound, as NAME=VALUE; repeatable.
    #[arg(long, value_name = "NAME=VALUE")]
    min: Vec<String>,
    /// Upper bound, as NAME=VALUE; repeatable.
    #[arg(long, value_name = "NAME=VALUE")]
    max: Vec<String>,
    /// Maximum number of results.
    #[arg(long, default_value_t = 20)]
    limit: usize,
    /// Scan every food instead of using the trigram index.
    #[arg(long)]
    no_index: bool,
}

#[derive(Args)]
struct ProfileArgs {
    /// Id of the food.
    fdc_id: i64,
    /// Build directory to read.
    #[arg(long, default_value = "out")]
    build: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Sql,
}

#[derive(Args)]
struct ExportArgs {
    /// Build directory to read.
    #[arg(long, default_value = "out")]
    build: PathBuf,
    /// Output format.
    #[arg(long, value_enum)]
    format: FormatArg,
    /// mysql, postgres or sqlite.
    #[arg(long, default_value = "mysql")]
    dialect: String,
    /// Rows per multi-row INSERT.
    #[arg(long, default_value_t = 500)]
    rows_per_insert: usize,
    /// Directory for the exported files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum ImagesCommand {
    /// Plan file names and target sizes for an image list.
    Plan(ImagesPlanArgs),
}

#[derive(Args)]
struct ImagesPlanArgs {
    /// CSV with brand, food and source columns.
    list: PathBuf,
    /// Longest side of a resized image, in pixels.
    #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
    max_dim: u32,
    /// Manifest destination; stdout when absent.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Also write the resized images into this directory.
    #[arg(long)]
    apply: Option<PathBuf>,
    /// Resize worker count.
    #[arg(long, default_value_t = 4)]
    workers: usize,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<BuildError> for Failure {
    fn from(e: BuildError) -> Self {
        let code = if e.is_usage() {
            EXIT_USAGE
        } else if e.is_io() {
            EXIT_IO
        } else {
            EXIT_DATA
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<QueryError> for Failure {
    fn from(e: QueryError) -> Self {
        let code = match e {
            QueryError::InvalidRequest(_) => EXIT_USAGE,
            QueryError::Model(_) => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<FixtureError> for Failure {
    fn from(e: FixtureError) -> Self {
        let code = match e {
            FixtureError::InvalidCount(_) => EXIT_USAGE,
            _ => EXIT_IO,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ImageError> for Failure {
    fn from(e: ImageError) -> Self {
        let code = match &e {
            ImageError::File { .. } => EXIT_IO,
            ImageError::Ingest(i) if i.is_io() => EXIT_IO,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

fn gen_fixture_cmd(a: GenFixtureArgs) -> Result<(), Failure> {
    let opts = FixtureOptions {
        restaurants: a.restaurants,
        menustat_rows: a.menustat_rows,
        images: a.images,
        ..FixtureOptions::new(a.seed, a.foods, a.nutrients)
    };
    let m = gen_fixture(&opts, &a.out)?;
    println!(
        "wrote {}: {} foods, {} facts, {} restaurants",
        a.out.display(),
        m.expected.food_count,
        m.expected.fact_count,
        m.restaurants.len()
    );
    Ok(())
}

fn build_cmd(a: BuildArgs) -> Result<(), Failure> {
    let mut cfg = match &a.config {
        Some(path) => SourceConfig::from_file(path)?,
        None => SourceConfig::default(),
    };
    cfg.usda = a.usda.or(cfg.usda);
    cfg.menustat = a.menustat.or(cfg.menustat);
    cfg.menustat_year = a.year.or(cfg.menustat_year);
    cfg.scrape = a.scrape.or(cfg.scrape);
    cfg.sanitize |= a.sanitize;
    cfg.lenient |= a.lenient;
    if cfg.usda.is_none() && cfg.menustat.is_none() && cfg.scrape.is_none() {
        return Err(Failure::usage("no sources: pass --config or at least one of --usda, --menustat, --scrape"));
    }
    let nutrients = match a.nutrients.trim() {
        "all" => NutrientSelection::AllPresent,
        list => NutrientSelection::Named(
            NutrientSet::new(list.split(',').map(str::trim).filter(|s| !s.is_empty()))
                .map_err(|e| Failure::usage(e.to_string()))?,
        ),
    };
    let opts = BuildOptions {
        layout: match a.layout {
            LayoutArg::Row => LayoutChoice::Row,
            LayoutArg::Column => LayoutChoice::Column,
            LayoutArg::Both => LayoutChoice::Both,
        },
        nutrients,
        dialect: SqlDialect::by_name(&a.dialect).map_err(|e| Failure::usage(e.to_string()))?,
        crawl: CrawlOptions {
            workers: a.workers,
            min_delay: Duration::from_millis(a.delay_ms),
            timing: if a.real_time { Timing::Real } else { Timing::Virtual },
        },
    };
    let report = build(&cfg, &opts, &a.out)?;
    if a.sanitize_report {
        let json = serde_json::to_string(&report.sanitize.unwrap_or_default()).expect("report serializes");
        println!("{json}");
    }
    println!(
        "built {}: {} foods, {} facts, {} portions in {} ms",
        a.out.display(),
        report.store_foods,
        report.store_facts,
        report.store_portions,
        report.wall_time_ms
    );
    if let Some(n) = report.layout.row_records {
        println!("row layout: {n} records");
    }
    if let Some(n) = report.layout.column_records {
        println!("column layout: {n} records");
    }
    Ok(())
}

fn bound(spec: &str) -> Result<(String, Decimal), Failure> {
    let (name, value) = spec
        .split_once('=')
        .ok_or_else(|| Failure::usage(format!("expected NAME=VALUE, got `{spec}`")))?;
    let value = parse_decimal(value.trim()).ok_or_else(|| Failure::usage(format!("`{value}` is not a number")))?;
    Ok((name.trim().to_string(), value))
}

fn constraints(min: &[String], max: &[String]) -> Result<Vec<NutrientConstraint>, Failure> {
    let mut out: Vec<NutrientConstraint> = Vec::new();
    let mut slot = |name: String| -> usize {
        match out.iter().position(|c| c.nutrient.eq_ignore_ascii_case(&name)) {
            Some(i) => i,
            None => {
                out.push(NutrientConstraint {
                    nutrient: name,
                    min: None,
                    max: None,
                });
                out.len() - 1
            }
        }
    };
    let mut mins = Vec::new();
    for spec in min {
        let (name, v) = bound(spec)?;
        mins.push((slot(name), v));
    }
    let mut maxs = Vec::new();
    for spec in max {
        let (name, v) = bound(spec)?;
        maxs.push((slot(name), v));
    }
    for (i, v) in mins {
        out[i].min = Some(v);
    }
    for (i, v) in maxs {
        out[i].max = Some(v);
    }
    Ok(out)
}

fn search_cmd(a: SearchArgs) -> Result<(), Failure> {
    let store = load_store(&a.build)?;
    let req = QueryRequest {
        text_query: a.query,
        category: a.category,
        source: a.source,
        constraints: constraints(&a.min, &a.max)?,
        limit: a.limit,
    };
    let index = (!a.no_index).then(|| DescriptionIndex::build(&store));
    let hits = search(&req, &store, index.as_ref())?;
    let mut out = io::stdout().lock();
    for h in &hits {
        let matched: Vec<String> = h
            .matched
            .iter()
            .map(|m| format!("{}={} {}", m.name, format_decimal(m.amount), m.unit))
            .collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            h.food.fdc_id,
            h.food.category,
            h.food.description,
            h.food.source_name().unwrap_or(""),
            matched.join("; ")
        )?;
    }
    Ok(())
}

fn profile_cmd(a: ProfileArgs) -> Result<(), Failure> {
    let store = load_store(&a.build)?;
    let entries = nutrient_profile(FoodId(a.fdc_id), &store)?;
    let mut out = io::stdout().lock();
    for e in entries {
        writeln!(out, "{}\t{}\t{}", e.name, format_decimal(e.amount), e.unit)?;
    }
    Ok(())
}

fn export_cmd(a: ExportArgs) -> Result<(), Failure> {
    let dialect = SqlDialect::by_name(&a.dialect)
        .map_err(|e| Failure::usage(e.to_string()))?
        .with_rows_per_insert(a.rows_per_insert.max(1));
    let format = match a.format {
        FormatArg::Csv => ExportFormat::Csv,
        FormatArg::Sql => ExportFormat::Sql,
    };
    let written = export_build(&a.build, format, &dialect, &a.out)?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn images_cmd(cmd: ImagesCommand) -> Result<(), Failure> {
    let ImagesCommand::Plan(a) = cmd;
    if a.max_dim == 0 {
        return Err(Failure::usage("--max-dim must be at least 1"));
    }
    let sources = read_image_list(&a.list)?;
    let plan = plan_images(&sources, a.max_dim)?;
    let table = manifest_table(&plan);
    match &a.manifest {
        Some(path) => emit_csv(&table, io::BufWriter::new(std::fs::File::create(path)?))?,
        None => emit_csv(&table, io::stdout().lock())?,
    }
    if let Some(dir) = &a.apply {
        apply_plan(&sources, &plan, dir, a.workers)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::GenFixture(a) => gen_fixture_cmd(a),
        Command::Build(a) => build_cmd(a),
        Command::Search(a) => search_cmd(a),
        Command::Profile(a) => profile_cmd(a),
        Command::Export(a) => export_cmd(a),
        Command::Images(c) => images_cmd(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fooddb: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
