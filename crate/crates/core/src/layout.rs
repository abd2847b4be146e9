//! Row-based (one record per food and nutrient) and column-based (one record
//! per food, a fixed amount/unit slot pair per nutrient) table designs.

use std::collections::{HashMap, HashSet};

use rust_decimal::Decimal;
use serde::Serialize;
use thiserror::Error;

use crate::export::csv_bytes;
use crate::model::{FoodId, FoodItem, FoodStore, ModelError, NutrientDef, NutrientDictionary, UnitCode};
use crate::table::{Cell, ColumnSpec, RawTable, SemanticType, TableSchema};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("nutrient set is empty")]
    EmptyNutrientSet,
    #[error("nutrient `{0}` appears twice in the nutrient set")]
    DuplicateSlot(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowLayoutRecord {
    pub fdc_id: FoodId,
    pub description: String,
    pub brand_owner: Option<String>,
    pub servings: Option<Decimal>,
    pub serving_size: Option<Decimal>,
    pub unit: Option<UnitCode>,
    pub nutrient_name: String,
    pub nutrient_unit: UnitCode,
    pub nutrient_amount: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnLayoutRecord {
    pub fdc_id: FoodId,
    pub description: String,
    pub brand_owner: Option<String>,
    pub servings: Option<Decimal>,
    pub serving_size: Option<Decimal>,
    pub unit: Option<UnitCode>,
    /// One slot per nutrient of the table's set, in set order.
    pub slots: Vec<Option<(Decimal, UnitCode)>>,
}

/// Ordered nutrient names (dictionary names or keys) naming the wide slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NutrientSet {
    names: Vec<String>,
}

impl NutrientSet {
    pub fn new<I, S>(names: I) -> Result<Self, LayoutError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(LayoutError::EmptyNutrientSet);
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.to_lowercase()) {
                return Err(LayoutError::DuplicateSlot(n.clone()));
            }
        }
        Ok(Self { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// A copy with `name` appended.
    pub fn extended(&self, name: impl Into<String>) -> Result<Self, LayoutError> {
        Self::new(self.names.iter().cloned().chain([name.into()]))
    }

    /// Dictionary entries for each name, in set order.
    pub fn resolve(&self, dictionary: &NutrientDictionary) -> Result<Vec<NutrientDef>, LayoutError> {
        let defs: Vec<NutrientDef> = self
            .names
            .iter()
            .map(|n| {
                dictionary
                    .find(n)
                    .cloned()
                    .ok_or_else(|| ModelError::UnknownNutrient(n.clone()))
            })
            .collect::<Result<_, _>>()?;
        let mut ids = HashSet::new();
        for (d, n) in defs.iter().zip(&self.names) {
            if !ids.insert(d.nutrient_id) {
                return Err(LayoutError::DuplicateSlot(n.clone()));
            }
        }
        Ok(defs)
    }
}

impl Default for NutrientSet {
    fn default() -> Self {
        Self {
            names: vec!["fiber".to_string(), "energy".to_string()],
        }
    }
}

/// The column layout plus its slot definitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WideTable {
    pub slots: Vec<NutrientDef>,
    pub records: Vec<ColumnLayoutRecord>,
    /// Facts whose nutrient has no slot.
    pub dropped_facts: usize,
}

struct FoodMeta {
    fdc_id: FoodId,
    description: String,
    brand_owner: Option<String>,
    servings: Option<Decimal>,
    serving_size: Option<Decimal>,
    unit: Option<UnitCode>,
}

fn meta(store: &FoodStore, food: &FoodItem) -> FoodMeta {
    let portion = store.primary_portion(food.fdc_id);
    FoodMeta {
        fdc_id: food.fdc_id,
        description: food.description.clone(),
        brand_owner: food.source_name().map(str::to_string),
        servings: portion.and_then(|p| p.servings),
        serving_size: portion.and_then(|p| p.serving_size),
        unit: portion.and_then(|p| p.serving_size_unit.clone()),
    }
}

/// One record per fact, ordered by store food order then nutrient name.
/// Serving fields come from the food's first portion.
pub fn to_row_layout(store: &FoodStore) -> Vec<RowLayoutRecord> {
    let dict = store.dictionary();
    let mut out = Vec::with_capacity(store.facts().len());
    for food in store.foods() {
        let m = meta(store, food);
        for fact in store.facts_for(food.fdc_id) {
            let name = dict
                .get(fact.nutrient_id)
                .map(NutrientDef::display_name)
                .expect("store facts reference dictionary nutrients");
            out.push(RowLayoutRecord {
                fdc_id: m.fdc_id,
                description: m.description.clone(),
                brand_owner: m.brand_owner.clone(),
                servings: m.servings,
                serving_size: m.serving_size,
                unit: m.unit.clone(),
                nutrient_name: name,
                nutrient_unit: fact.unit.clone(),
                nutrient_amount: fact.amount,
            });
        }
    }
    out
}

/// One record per food with a slot for every nutrient in `set`.
pub fn to_column_layout(store: &FoodStore, set: &NutrientSet) -> Result<WideTable, LayoutError> {
    let slots = set.resolve(store.dictionary())?;
    let slot_of: HashMap<_, usize> = slots.iter().enumerate().map(|(i, d)| (d.nutrient_id, i)).collect();
    let mut dropped = 0;
    let records = store
        .foods()
        .iter()
        .map(|food| {
            let m = meta(store, food);
            let mut values = vec![None; slots.len()];
            for fact in store.facts_for(food.fdc_id) {
                match slot_of.get(&fact.nutrient_id) {
                    Some(&i) => values[i] = Some((fact.amount, fact.unit.clone())),
                    None => dropped += 1,
                }
            }
            ColumnLayoutRecord {
                fdc_id: m.fdc_id,
                description: m.description,
                brand_owner: m.brand_owner,
                servings: m.servings,
                serving_size: m.serving_size,
                unit: m.unit,
                slots: values,
            }
        })
        .collect();
    Ok(WideTable {
        slots,
        records,
        dropped_facts: dropped,
    })
}

/// Back to row records, one per non-null slot, in row-layout order.
pub fn unpivot(wide: &WideTable) -> Vec<RowLayoutRecord> {
    let names: Vec<String> = wide.slots.iter().map(NutrientDef::display_name).collect();
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]).then(wide.slots[a].nutrient_id.cmp(&wide.slots[b].nutrient_id)));
    let mut out = Vec::new();
    for rec in &wide.records {
        for &i in &order {
            if let Some((amount, unit)) = &rec.slots[i] {
                out.push(RowLayoutRecord {
                    fdc_id: rec.fdc_id,
                    description: rec.description.clone(),
                    brand_owner: rec.brand_owner.clone(),
                    servings: rec.servings,
                    serving_size: rec.serving_size,
                    unit: rec.unit.clone(),
                    nutrient_name: names[i].clone(),
                    nutrient_unit: unit.clone(),
                    nutrient_amount: *amount,
                });
            }
        }
    }
    out
}

const META_COLUMNS: [(&str, SemanticType); 6] = [
    ("fdc_id", SemanticType::Id64),
    ("description", SemanticType::Text),
    ("brand_owner", SemanticType::Text),
    ("servings", SemanticType::Decimal),
    ("serving_size", SemanticType::Decimal),
    ("unit", SemanticType::UnitCode),
];

fn meta_cells(
    id: FoodId,
    description: &str,
    brand: Option<&str>,
    servings: Option<Decimal>,
    size: Option<Decimal>,
    unit: Option<&UnitCode>,
) -> Vec<Cell> {
    vec![
        Cell::Id(id.0),
        Cell::Text(description.to_string()),
        Cell::opt_text(brand),
        Cell::opt_dec(servings),
        Cell::opt_dec(size),
        Cell::opt_unit(unit.map(UnitCode::as_str)),
    ]
}

pub fn row_layout_schema() -> TableSchema {
    let mut cols: Vec<(&str, SemanticType)> = META_COLUMNS.to_vec();
    cols.extend([
        ("nutrient_name", SemanticType::Text),
        ("nutrient_unit", SemanticType::UnitCode),
        ("nutrient_amount", SemanticType::Decimal),
    ]);
    TableSchema::of("row_layout", &cols).expect("static schema")
}

pub fn row_layout_table(records: &[RowLayoutRecord]) -> RawTable {
    let rows = records
        .iter()
        .map(|r| {
            let mut row = meta_cells(
                r.fdc_id,
                &r.description,
                r.brand_owner.as_deref(),
                r.servings,
                r.serving_size,
                r.unit.as_ref(),
            );
            row.push(Cell::Text(r.nutrient_name.clone()));
            row.push(Cell::Unit(r.nutrient_unit.as_str().to_string()));
            row.push(Cell::Dec(r.nutrient_amount));
            row
        })
        .collect();
    RawTable::new(row_layout_schema(), rows, "").expect("fixed width")
}

/// `<key>_amount` / `<key>_unit` per slot after the food columns.
pub fn column_layout_schema(slots: &[NutrientDef]) -> TableSchema {
    let mut cols: Vec<ColumnSpec> = META_COLUMNS.iter().map(|&(n, t)| ColumnSpec::new(n, t)).collect();
    for d in slots {
        cols.push(ColumnSpec::new(format!("{}_amount", d.key), SemanticType::Decimal));
        cols.push(ColumnSpec::new(format!("{}_unit", d.key), SemanticType::UnitCode));
    }
    TableSchema::new("column_layout", cols, true).expect("slot keys are distinct")
}

pub fn column_layout_table(wide: &WideTable) -> RawTable {
    let rows = wide
        .records
        .iter()
        .map(|r| {
            let mut row = meta_cells(
                r.fdc_id,
                &r.description,
                r.brand_owner.as_deref(),
                r.servings,
                r.serving_size,
                r.unit.as_ref(),
            );
            for slot in &r.slots {
                match slot {
                    Some((amount, unit)) => {
                        row.push(Cell::Dec(*amount));
                        row.push(Cell::Unit(unit.as_str().to_string()));
                    }
                    None => row.extend([Cell::Null, Cell::Null]),
                }
            }
            row
        })
        .collect();
    RawTable::new(column_layout_schema(&wide.slots), rows, "").expect("fixed width")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayoutSizes {
    pub row_bytes: usize,
    pub column_bytes: usize,
    pub row_header_bytes: usize,
    pub column_header_bytes: usize,
}

impl LayoutSizes {
    pub fn row_data_bytes(&self) -> usize {
        self.row_bytes - self.row_header_bytes
    }

    pub fn column_data_bytes(&self) -> usize {
        self.column_bytes - self.column_header_bytes
    }
}

/// Exact CSV byte counts of both layouts as written by the exporter.
pub fn layout_size_report(rows: &[RowLayoutRecord], wide: &WideTable) -> LayoutSizes {
    let header = |t: &RawTable| csv_bytes(&RawTable::empty(t.schema().clone())).len();
    let r = row_layout_table(rows);
    let c = column_layout_table(wide);
    LayoutSizes {
        row_bytes: csv_bytes(&r).len(),
        column_bytes: csv_bytes(&c).len(),
        row_header_bytes: header(&r),
        column_header_bytes: header(&c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Category, NutrientId, NutrientValue, Portion, StoreParts};

    fn dec(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    fn fact(id: i64, n: i64, amount: &str, unit: &str) -> NutrientValue {
        NutrientValue {
            food_id: FoodId(id),
            nutrient_id: NutrientId(n),
            amount: dec(amount),
            unit: UnitCode::new(unit),
        }
    }

    fn store() -> FoodStore {
        let wesson = FoodItem::new(
            FoodId(1),
            "WESSON Vegetable Oil 1 GAL",
            Category::Branded,
            Some("Richardson Oilseed Limited".into()),
            None,
        )
        .unwrap();
        let swanson = FoodItem::new(FoodId(2), "SWANSON BROTH BEEF", Category::Branded, Some("Campbell Soup Company".into()), None).unwrap();
        let bare = FoodItem::new(FoodId(3), "NOTHING", Category::SrLegacy, None, None).unwrap();
        let portion = |id, size| Portion::new(FoodId(id), Some(Decimal::ONE), Some(dec(size)), Some(UnitCode::new("ml")), None).unwrap();
        FoodStore::new(
            NutrientDictionary::canonical(),
            StoreParts {
                foods: vec![wesson, swanson, bare],
                facts: vec![
                    fact(1, 1008, "130.05", "KCAL"),
                    fact(1, 1004, "14", "G"),
                    fact(1, 1079, "0", "G"),
                    fact(2, 1008, "9.6", "KCAL"),
                    fact(2, 1003, "1.99", "G"),
                    fact(2, 1093, "830.4", "MG"),
                    fact(2, 1005, "1.01", "G"),
                    fact(2, 2000, "1.01", "G"),
                ],
                portions: vec![portion(1, "15"), portion(2, "240")],
            },
        )
        .unwrap()
    }

    #[test]
    fn row_layout_one_record_per_fact() {
        let rows = to_row_layout(&store());
        assert_eq!(rows.len(), 8);
        let swanson: Vec<_> = rows.iter().filter(|r| r.fdc_id == FoodId(2)).collect();
        assert_eq!(swanson.len(), 5);
        assert_eq!(swanson[0].nutrient_name, "carbohydrate, by difference");
        assert_eq!(swanson[1].nutrient_name, "energy");
        assert_eq!(swanson[1].nutrient_amount, dec("9.6"));
        assert_eq!(swanson[1].serving_size, Some(dec("240")));
    }

    #[test]
    fn column_layout_matches_wide_sample() {
        let wide = to_column_layout(&store(), &NutrientSet::default()).unwrap();
        assert_eq!(wide.records.len(), 3);
        let w = &wide.records[0];
        assert_eq!(w.slots[0], Some((dec("0"), UnitCode::new("G"))));
        assert_eq!(w.slots[1], Some((dec("130.05"), UnitCode::new("KCAL"))));
        assert_eq!(wide.records[2].slots, vec![None, None]);
        assert_eq!(wide.dropped_facts, 1 + 4);
        let text = String::from_utf8(csv_bytes(&column_layout_table(&wide))).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("fdc_id,description,brand_owner,servings,serving_size,unit,fiber_amount,fiber_unit,energy_amount,energy_unit")
        );
        assert_eq!(lines.next(), Some("1,WESSON Vegetable Oil 1 GAL,Richardson Oilseed Limited,1,15,ml,0,G,130.05,KCAL"));
    }

    #[test]
    fn widening_adds_a_null_slot_everywhere() {
        let s = store();
        let set = NutrientSet::default().extended("calcium").unwrap();
        let wide = to_column_layout(&s, &set).unwrap();
        assert!(wide.records.iter().all(|r| r.slots.len() == 3 && r.slots[2].is_none()));
    }

    #[test]
    fn unpivot_is_the_restricted_row_layout() {
        let s = store();
        let wide = to_column_layout(&s, &NutrientSet::default()).unwrap();
        let names = ["energy", "fiber, total dietary"];
        let expected: Vec<_> = to_row_layout(&s)
            .into_iter()
            .filter(|r| names.contains(&r.nutrient_name.as_str()))
            .collect();
        assert_eq!(unpivot(&wide), expected);
    }

    #[test]
    fn nutrient_set_errors() {
        assert_eq!(NutrientSet::new(Vec::<String>::new()), Err(LayoutError::EmptyNutrientSet));
        assert!(matches!(NutrientSet::new(["energy", "Energy"]), Err(LayoutError::DuplicateSlot(_))));
        let alias = NutrientSet::new(["Total lipid (fat)", "fat"]).unwrap();
        assert!(matches!(alias.resolve(&NutrientDictionary::canonical()), Err(LayoutError::DuplicateSlot(_))));
        let unknown = NutrientSet::new(["vitamin z"]).unwrap();
        assert!(matches!(unknown.resolve(&NutrientDictionary::canonical()), Err(LayoutError::Model(_))));
    }

    #[test]
    fn sizes_of_empty_layouts_are_headers() {
        let empty = FoodStore::new(NutrientDictionary::canonical(), StoreParts::default()).unwrap();
        let wide = to_column_layout(&empty, &NutrientSet::default()).unwrap();
        let sizes = layout_size_report(&to_row_layout(&empty), &wide);
        assert_eq!(sizes.row_bytes, sizes.row_header_bytes);
        assert_eq!(sizes.column_bytes, sizes.column_header_bytes);
        assert!(sizes.row_bytes > 0);
    }
}
