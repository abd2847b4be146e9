//! Infers a schema for a USDA file and loads it.
//!
//! cargo run --example ingest_usda [-- path/to/food_nutrient.csv]

use std::path::PathBuf;

use fooddb::ingest::{infer_schema_from_file, load_table, CsvDialect, Overrides};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/usda_sample/food_nutrient.csv"));

    let schema = infer_schema_from_file(&path, CsvDialect::usda(), 1000, &Overrides::new())?;
    for col in schema.columns() {
        println!("{:<20} {}", col.name, col.semantic_type);
    }

    let table = load_table(&path, &schema, true)?;
    println!("{} rows from {}", table.rows().len(), table.source_path());
    for row in table.rows().iter().take(3) {
        let cells: Vec<String> = row.iter().map(|c| c.render().unwrap_or_else(|| "NULL".into())).collect();
        println!("  {}", cells.join(" | "));
    }
    Ok(())
}
