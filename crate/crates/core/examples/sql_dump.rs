//! SQL dump of the branded category table.
//!
//! cargo run --example sql_dump [-- mysql|postgres|sqlite]

use std::path::PathBuf;

use fooddb::export::{emit_sql_dump, SqlDialect};
use fooddb::model::Category;
use fooddb::pipeline::{run_build, BuildOptions, SourceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dialect = SqlDialect::by_name(&std::env::args().nth(1).unwrap_or_else(|| "mysql".into()))?;
    let cfg = SourceConfig {
        usda: Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/usda_sample")),
        ..SourceConfig::default()
    };
    let out = run_build(&cfg, &BuildOptions::default())?;
    let branded = out
        .category_tables
        .iter()
        .find(|c| c.category == Category::Branded)
        .expect("branded table is always built");
    print!("{}", emit_sql_dump(&branded.table, &dialect)?);
    Ok(())
}
