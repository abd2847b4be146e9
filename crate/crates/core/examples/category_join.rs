//! Joins the branded category file with foods, energy facts and portions.
//!
//! cargo run --example category_join [-- path/to/usda_dir]

use std::path::PathBuf;

use fooddb::export::emit_csv;
use fooddb::model::{build_category_table, Category, CategorySpec, IndexedTable, JoinInputs, NutrientDictionary, ENERGY_KCAL};
use fooddb::pipeline::{load_usda, SourceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/usda_sample"));
    let tables = load_usda(&dir, &SourceConfig::default())?.tables;

    let indexed = |name: &str| IndexedTable::new(tables[name].clone()).with_indexes(&["fdc_id"]);
    let (food, facts, portions) = (indexed("food")?, indexed("food_nutrient")?, indexed("food_portion")?);
    let dictionary = NutrientDictionary::from_table(&tables["nutrient"])?;
    let inputs = JoinInputs {
        food: &food,
        nutrients: &facts,
        portions: &portions,
        dictionary: &dictionary,
    };

    let spec = CategorySpec::usda(Category::Branded);
    let joined = build_category_table(&spec, &inputs, tables.get("branded_food"), ENERGY_KCAL)?;
    emit_csv(&joined.table, std::io::stdout().lock())?;
    eprintln!("{:?}", joined.diagnostics);
    Ok(())
}
