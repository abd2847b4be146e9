//! Per-category inner join of the USDA tables:
//!
//! ```sql
//! SELECT fs.fdc_id, fs.description, fn.amount AS kcals,
//!        fp.amount AS servings, fp.gram_weight
//! FROM food_sr_legacy_food fs
//! INNER JOIN food_nutrient fn ON fn.fdc_id = fs.fdc_id
//! INNER JOIN food_portion fp ON fs.fdc_id = fp.fdc_id
//! WHERE fn.nutrient_id = 1008
//! ```
//!
//! `food_sr_legacy_food` is the category file joined to `food.csv` on `fdc_id`.

use serde::Serialize;

use super::{
    build_index, Category, ColumnIndex, FoodId, IndexKey, IndexedTable, ModelError,
    NutrientDictionary, NutrientId, ENERGY_KCAL,
};
use crate::table::{Cell, ColumnSpec, RawTable, SemanticType, TableSchema};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategorySpec {
    pub category: Category,
    /// Columns copied from the category file into the joined table.
    pub carry_columns: Vec<String>,
}

impl CategorySpec {
    pub fn usda(category: Category) -> Self {
        let carry: &[&str] = match category {
            Category::Branded => &["brand_owner", "serving_size", "serving_size_unit"],
            _ => &[],
        };
        Self {
            category,
            carry_columns: carry.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// The shared right-hand tables of every category join.
#[derive(Debug, Clone, Copy)]
pub struct JoinInputs<'a> {
    pub food: &'a IndexedTable,
    pub nutrients: &'a IndexedTable,
    pub portions: &'a IndexedTable,
    pub dictionary: &'a NutrientDictionary,
}

/// Counts of category rows and why the ones that produced nothing were dropped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct JoinDiagnostics {
    pub category_rows: usize,
    pub matched_foods: usize,
    pub missing_food: usize,
    pub missing_nutrient: usize,
    pub missing_portion: usize,
    pub output_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTable {
    pub category: Category,
    pub table: RawTable,
    /// Category-file ids that survived the join, one per category row, in order.
    pub members: Vec<FoodId>,
    pub diagnostics: JoinDiagnostics,
}

/// Output column carrying the joined nutrient amount.
pub fn amount_column_name(nutrient: NutrientId, dictionary: &NutrientDictionary) -> String {
    if nutrient == ENERGY_KCAL {
        return "kcals".to_string();
    }
    match dictionary.get(nutrient) {
        Some(def) => format!("{}_amount", def.key),
        None => format!("nutrient_{}_amount", nutrient.0),
    }
}

fn column(table: &RawTable, name: &str) -> Result<usize, ModelError> {
    table.column_index(name).ok_or_else(|| ModelError::NoSuchColumn {
        table: table.name().to_string(),
        column: name.to_string(),
    })
}

fn decimal_cell(cell: &Cell) -> Cell {
    Cell::opt_dec(cell.as_decimal())
}

/// Joins one category file against food, food_nutrient and food_portion.
///
/// Requires `fdc_id` indexes on the nutrient and portion tables. A missing
/// category file (no experimental foods shipped) yields an empty table.
pub fn build_category_table(
    spec: &CategorySpec,
    inputs: &JoinInputs<'_>,
    category_file: Option<&RawTable>,
    nutrient_id: NutrientId,
) -> Result<CategoryTable, ModelError> {
    if inputs.dictionary.get(nutrient_id).is_none() {
        return Err(ModelError::UnknownNutrientId(nutrient_id));
    }
    let nut_idx = inputs.nutrients.require_index("fdc_id")?;
    let por_idx = inputs.portions.require_index("fdc_id")?;

    let food = inputs.food.table();
    let nutrients = inputs.nutrients.table();
    let portions = inputs.portions.table();
    let food_desc = column(food, "description")?;
    let nut_id_col = column(nutrients, "nutrient_id")?;
    let nut_amount = column(nutrients, "amount")?;
    let por_amount = column(portions, "amount")?;
    let por_grams = column(portions, "gram_weight")?;

    let mut columns = vec![
        ColumnSpec::new("fdc_id", SemanticType::Id64),
        ColumnSpec::new("description", SemanticType::Text),
    ];
    let mut carry = Vec::with_capacity(spec.carry_columns.len());
    for name in &spec.carry_columns {
        let ty = match category_file {
            Some(t) => {
                let pos = column(t, name)?;
                carry.push(pos);
                t.schema().columns()[pos].semantic_type
            }
            None => SemanticType::Text,
        };
        columns.push(ColumnSpec::new(name.clone(), ty));
    }
    columns.push(ColumnSpec::new(
        amount_column_name(nutrient_id, inputs.dictionary),
        SemanticType::Decimal,
    ));
    columns.push(ColumnSpec::new("servings", SemanticType::Decimal));
    columns.push(ColumnSpec::new("gram_weight", SemanticType::Decimal));
    let schema = TableSchema::new(spec.category.table_name(), columns, true)
        .expect("join columns are distinct");

    let mut diag = JoinDiagnostics::default();
    let mut members = Vec::new();
    let mut rows = Vec::new();

    if let Some(cat) = category_file {
        let cat_fdc = column(cat, "fdc_id")?;
        let local_food_idx;
        let food_idx: &ColumnIndex = match inputs.food.index("fdc_id") {
            Some(i) => i,
            None => {
                local_food_idx = build_index(food, "fdc_id")?;
                &local_food_idx
            }
        };
        let target = IndexKey::Int(nutrient_id.0);

        for crow in cat.rows() {
            diag.category_rows += 1;
            let Some(fdc) = crow[cat_fdc].as_i64() else {
                diag.missing_food += 1;
                continue;
            };
            let key = IndexKey::Int(fdc);
            let food_rows = food_idx.lookup(&key);
            if food_rows.is_empty() {
                diag.missing_food += 1;
                continue;
            }
            let nut_rows: Vec<usize> = nut_idx
                .lookup(&key)
                .iter()
                .copied()
                .filter(|&r| IndexKey::from_cell(&nutrients.rows()[r][nut_id_col]).as_ref() == Some(&target))
                .collect();
            if nut_rows.is_empty() {
                diag.missing_nutrient += 1;
                continue;
            }
            let por_rows = por_idx.lookup(&key);
            if por_rows.is_empty() {
                diag.missing_portion += 1;
                continue;
            }
            diag.matched_foods += 1;
            members.push(FoodId(fdc));
            for &f in food_rows {
                for &n in &nut_rows {
                    for &p in por_rows {
                        let mut row = Vec::with_capacity(schema.len());
                        row.push(Cell::Id(fdc));
                        row.push(food.rows()[f][food_desc].clone());
                        row.extend(carry.iter().map(|&c| crow[c].clone()));
                        row.push(decimal_cell(&nutrients.rows()[n][nut_amount]));
                        row.push(decimal_cell(&portions.rows()[p][por_amount]));
                        row.push(decimal_cell(&portions.rows()[p][por_grams]));
                        rows.push(row);
                    }
                }
            }
        }
    }
    diag.output_rows = rows.len();
    let table = RawTable::new(schema, rows, "").expect("rows built to schema width");
    Ok(CategoryTable {
        category: spec.category,
        table,
        members,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rust_decimal::Decimal;

    fn t(name: &str, cols: &[(&str, SemanticType)], rows: Vec<Vec<Cell>>) -> RawTable {
        RawTable::new(TableSchema::of(name, cols).unwrap(), rows, "").unwrap()
    }

    fn dec(s: &str) -> Cell {
        Cell::Dec(s.parse::<Decimal>().unwrap())
    }

    struct Fixture {
        food: IndexedTable,
        nutrients: IndexedTable,
        portions: IndexedTable,
        category: RawTable,
        dict: NutrientDictionary,
    }

    fn fixture() -> Fixture {
        use SemanticType::*;
        let food = t(
            "food",
            &[("fdc_id", Id64), ("description", Text)],
            vec![
                vec![Cell::Id(1), Cell::Text("WESSON Vegetable Oil 1 GAL".into())],
                vec![Cell::Id(2), Cell::Text("SWANSON BROTH BEEF".into())],
                vec![Cell::Id(3), Cell::Text("NO PORTION".into())],
            ],
        );
        let nutrients = t(
            "food_nutrient",
            &[("id", Integer), ("fdc_id", Id64), ("nutrient_id", Id64), ("amount", Decimal)],
            vec![
                vec![Cell::Int(10), Cell::Id(1), Cell::Id(1008), dec("130.05")],
                vec![Cell::Int(11), Cell::Id(1), Cell::Id(1004), dec("14")],
                vec![Cell::Int(12), Cell::Id(2), Cell::Id(1008), dec("9.6")],
                vec![Cell::Int(13), Cell::Id(3), Cell::Id(1008), dec("1")],
            ],
        );
        let portions = t(
            "food_portion",
            &[("id", Integer), ("fdc_id", Id64), ("amount", Decimal), ("gram_weight", Decimal)],
            vec![
                vec![Cell::Int(20), Cell::Id(1), dec("1"), dec("14")],
                vec![Cell::Int(21), Cell::Id(2), dec("1"), dec("240")],
                vec![Cell::Int(22), Cell::Id(2), dec("2"), dec("480")],
            ],
        );
        let category = t(
            "sr_legacy_food",
            &[("fdc_id", Id64)],
            vec![vec![Cell::Id(1)], vec![Cell::Id(2)], vec![Cell::Id(3)], vec![Cell::Id(4)]],
        );
        Fixture {
            food: IndexedTable::new(food).with_indexes(&["fdc_id"]).unwrap(),
            nutrients: IndexedTable::new(nutrients).with_indexes(&["fdc_id", "nutrient_id"]).unwrap(),
            portions: IndexedTable::new(portions).with_indexes(&["fdc_id"]).unwrap(),
            category,
            dict: NutrientDictionary::canonical(),
        }
    }

    fn inputs(f: &Fixture) -> JoinInputs<'_> {
        JoinInputs {
            food: &f.food,
            nutrients: &f.nutrients,
            portions: &f.portions,
            dictionary: &f.dict,
        }
    }

    #[test]
    fn joins_energy_with_portions() {
        let f = fixture();
        let out = build_category_table(
            &CategorySpec::usda(Category::SrLegacy),
            &inputs(&f),
            Some(&f.category),
            ENERGY_KCAL,
        )
        .unwrap();
        let names: Vec<_> = out.table.schema().column_names().collect();
        assert_eq!(names, ["fdc_id", "description", "kcals", "servings", "gram_weight"]);
        assert_eq!(out.table.rows()[0][2], dec("130.05"));
        // Two portions for food 2 give two rows.
        assert_eq!(out.table.loaded_row_count(), 3);
        assert_eq!(out.members, vec![FoodId(1), FoodId(2)]);
        assert_eq!(out.diagnostics.missing_portion, 1);
        assert_eq!(out.diagnostics.missing_food, 1);
    }

    #[test]
    fn other_nutrients_name_their_column() {
        let f = fixture();
        let out = build_category_table(
            &CategorySpec::usda(Category::SrLegacy),
            &inputs(&f),
            Some(&f.category),
            NutrientId(1004),
        )
        .unwrap();
        assert_eq!(out.table.schema().columns()[2].name, "fat_amount");
        assert_eq!(out.table.loaded_row_count(), 1);
        assert_eq!(out.diagnostics.missing_nutrient, 2);
    }

    #[test]
    fn empty_nutrient_table_gives_empty_result() {
        let f = fixture();
        let empty = IndexedTable::new(RawTable::empty(f.nutrients.table().schema().clone()))
            .with_indexes(&["fdc_id"])
            .unwrap();
        let inp = JoinInputs {
            nutrients: &empty,
            ..inputs(&f)
        };
        let out = build_category_table(
            &CategorySpec::usda(Category::SrLegacy),
            &inp,
            Some(&f.category),
            ENERGY_KCAL,
        )
        .unwrap();
        assert_eq!(out.table.loaded_row_count(), 0);
    }

    #[test]
    fn absent_category_file_is_empty() {
        let f = fixture();
        let out =
            build_category_table(&CategorySpec::usda(Category::Experimental), &inputs(&f), None, ENERGY_KCAL)
                .unwrap();
        assert_eq!(out.table.name(), "experimental_food");
        assert_eq!(out.table.loaded_row_count(), 0);
    }

    #[test]
    fn errors() {
        let f = fixture();
        let unindexed = IndexedTable::new(f.portions.table().clone());
        let inp = JoinInputs {
            portions: &unindexed,
            ..inputs(&f)
        };
        let spec = CategorySpec::usda(Category::SrLegacy);
        assert!(matches!(
            build_category_table(&spec, &inp, Some(&f.category), ENERGY_KCAL),
            Err(ModelError::MissingIndex { .. })
        ));
        assert!(matches!(
            build_category_table(&spec, &inputs(&f), Some(&f.category), NutrientId(424242)),
            Err(ModelError::UnknownNutrientId(_))
        ));
    }
}
