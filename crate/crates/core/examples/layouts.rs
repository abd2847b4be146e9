//! Row (one record per fact) and column (one record per food) layouts of the same store.
//!
//! cargo run --example layouts [-- energy fiber protein]

use std::path::PathBuf;

use fooddb::export::emit_csv;
use fooddb::layout::{column_layout_table, layout_size_report, row_layout_table, to_column_layout, to_row_layout, unpivot, NutrientSet};
use fooddb::pipeline::{run_build, BuildOptions, SourceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SourceConfig {
        usda: Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/usda_sample")),
        ..SourceConfig::default()
    };
    let store = run_build(&cfg, &BuildOptions::default())?.store;

    let names: Vec<String> = std::env::args().skip(1).collect();
    let set = if names.is_empty() { NutrientSet::default() } else { NutrientSet::new(names)? };

    let rows = to_row_layout(&store);
    let wide = to_column_layout(&store, &set)?;
    println!("-- row layout ({} records)", rows.len());
    emit_csv(&row_layout_table(&rows), std::io::stdout().lock())?;
    println!("-- column layout ({} records, {} facts without a slot)", wide.records.len(), wide.dropped_facts);
    emit_csv(&column_layout_table(&wide), std::io::stdout().lock())?;

    println!("-- unpivot gives back {} row records", unpivot(&wide).len());
    let sizes = layout_size_report(&rows, &wide);
    println!("row {} bytes, column {} bytes", sizes.row_bytes, sizes.column_bytes);
    Ok(())
}
