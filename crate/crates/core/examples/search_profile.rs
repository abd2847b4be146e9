//! Substring search with a nutrient bound, then the profile of the first hit.
//!
//! cargo run --example search_profile [-- query max_kcal]

use std::path::PathBuf;

use fooddb::pipeline::{run_build, BuildOptions, SourceConfig};
use fooddb::query::{nutrient_profile, search, DescriptionIndex, NutrientConstraint, QueryRequest};
use rust_decimal::Decimal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let query = args.next().unwrap_or_else(|| "o".into());
    let max_kcal: Option<Decimal> = args.next().map(|s| s.parse()).transpose()?;

    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let cfg = SourceConfig {
        usda: Some(fixtures.join("usda_sample")),
        menustat: Some(fixtures.join("menustat_sample/menustat.csv")),
        ..SourceConfig::default()
    };
    let store = run_build(&cfg, &BuildOptions::default())?.store;
    let index = DescriptionIndex::build(&store);

    let mut req = QueryRequest::new(query);
    if let Some(max) = max_kcal {
        req.constraints.push(NutrientConstraint {
            nutrient: "energy".into(),
            min: None,
            max: Some(max),
        });
    }
    let hits = search(&req, &store, Some(&index))?;
    for h in &hits {
        println!("{} [{}] {}", h.food.fdc_id, h.food.category, h.food.description);
    }
    if let Some(first) = hits.first() {
        println!("-- {}", first.food.description);
        for e in nutrient_profile(first.food.fdc_id, &store)? {
            println!("{:<36} {} {}", e.name, e.amount, e.unit);
        }
    }
    Ok(())
}
