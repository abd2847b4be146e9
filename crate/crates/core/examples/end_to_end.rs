//! Generates a fixture tree, builds it, and prints the build report.
//!
//! cargo run --example end_to_end [-- foods nutrients]

use fooddb::fixture::{gen_fixture, FixtureOptions};
use fooddb::pipeline::{build, BuildOptions, SourceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let foods = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1000);
    let nutrients = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8);

    let root = std::env::temp_dir().join(format!("fooddb-end-to-end-{}", std::process::id()));
    let opts = FixtureOptions {
        menustat_rows: 200,
        ..FixtureOptions::new(1, foods, nutrients)
    };
    let manifest = gen_fixture(&opts, &root.join("fixture"))?;

    let mut cfg = SourceConfig::from_file(&root.join("fixture/sources.conf"))?;
    cfg.menustat = manifest.menustat.as_ref().map(|m| root.join("fixture").join(&m.path));
    cfg.scrape = Some(root.join("fixture/scrape"));
    let report = build(&cfg, &BuildOptions::default(), &root.join("out"))?;

    println!("{}", serde_json::to_string_pretty(&report)?);
    println!(
        "expected {} row and {} column records for the USDA part",
        manifest.expected.row_layout_records, manifest.expected.column_layout_records
    );
    println!("output in {}", root.join("out").display());
    Ok(())
}
