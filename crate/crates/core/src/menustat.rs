//! Restaurant menu CSVs: sanitized, loaded all-text, refined, then mapped to
//! [`RestaurantItem`]s and on into the food model.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use log::warn;
use rust_decimal::Decimal;
use thiserror::Error;

use crate::ingest::IngestError;
use crate::model::{
    reserve_id_range, Category, FoodId, FoodItem, ModelError, NutrientValue, Portion, StoreParts, UnitCode,
    ENERGY_KCAL,
};
use crate::sanitize::{load_sanitized, SanitizeReport};
use crate::table::{parse_decimal, Cell, RawTable};

/// First id handed to restaurant foods unless configured otherwise.
pub const DEFAULT_ID_BASE: i64 = 10_000_000_000;

const NAME_COLUMNS: &[&str] = &["item_name", "description"];
const KCAL_COLUMNS: &[&str] = &["kcal", "kcals", "energy", "calories"];
const KNOWN_COLUMNS: &[&str] = &[
    "restaurant_id",
    "restaurant",
    "food_category",
    "item_description",
    "serving_size",
    "serving_size_unit",
    "servings_per_serving_size",
    "serving_size_text",
    "grams_per_serving_size",
    "energy_unit",
];

#[derive(Debug, Error)]
pub enum MenustatError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("menu file has no `{0}` column")]
    MissingColumn(&'static str),
    #[error("data row {row}: {reason}")]
    InvalidItem { row: usize, reason: &'static str },
    #[error("restaurant id range {first}..={last} overlaps existing food {clash}")]
    IdRangeCollision { first: i64, last: i64, clash: FoodId },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestaurantItem {
    pub restaurant_id: i64,
    pub restaurant: String,
    pub food_category: String,
    pub item_name: String,
    pub item_description: String,
    pub serving_size: Option<Decimal>,
    pub serving_size_unit: Option<UnitCode>,
    pub servings_per_serving_size: Option<Decimal>,
    pub serving_size_text: Option<String>,
    pub grams_per_serving_size: Option<Decimal>,
    pub kcal: Option<Decimal>,
    /// Release year the row came from, when tagged.
    pub year: Option<u16>,
    /// Columns outside the known record shape, rendered as text.
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MenustatOutcome {
    pub items: Vec<RestaurantItem>,
    pub report: SanitizeReport,
}

fn text(cell: &Cell) -> Option<String> {
    cell.render().map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

fn number(cell: &Cell) -> Option<Decimal> {
    cell.as_decimal()
        .or_else(|| cell.as_str().and_then(|s| parse_decimal(s.trim())))
}

/// One item per data row of an already loaded menu table.
pub fn items_from_table(table: &RawTable, year: Option<u16>) -> Result<Vec<RestaurantItem>, MenustatError> {
    let col = |name: &str| table.column_index(name);
    let first_of = |names: &[&str]| names.iter().filter_map(|n| col(n)).collect::<Vec<_>>();
    let restaurant = col("restaurant").ok_or(MenustatError::MissingColumn("restaurant"))?;
    let restaurant_id = col("restaurant_id").ok_or(MenustatError::MissingColumn("restaurant_id"))?;
    let names = first_of(NAME_COLUMNS);
    if names.is_empty() {
        return Err(MenustatError::MissingColumn("item_name"));
    }
    let kcals = first_of(KCAL_COLUMNS);
    let known: HashSet<&str> = KNOWN_COLUMNS
        .iter()
        .chain(NAME_COLUMNS)
        .chain(KCAL_COLUMNS)
        .copied()
        .collect();
    let extras: Vec<(usize, &str)> = table
        .schema()
        .column_names()
        .enumerate()
        .filter(|(_, n)| !known.contains(n))
        .collect();

    table
        .rows()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let row_no = i + 1;
            let invalid = |reason| MenustatError::InvalidItem { row: row_no, reason };
            let get = |name: &str| col(name).and_then(|c| text(&row[c]));
            let num = |name: &str| col(name).and_then(|c| number(&row[c]));
            let restaurant = text(&row[restaurant]).ok_or_else(|| invalid("empty restaurant"))?;
            let item_name = names
                .iter()
                .find_map(|&c| text(&row[c]))
                .ok_or_else(|| invalid("empty item name"))?;
            let restaurant_id = row[restaurant_id]
                .as_i64()
                .or_else(|| row[restaurant_id].as_str().and_then(|s| s.trim().parse().ok()))
                .ok_or_else(|| invalid("restaurant_id is not an integer"))?;
            let kcal = kcals.iter().find_map(|&c| number(&row[c]));
            if kcal.is_some_and(|k| k < Decimal::ZERO) {
                return Err(invalid("negative kcal"));
            }
            Ok(RestaurantItem {
                restaurant_id,
                restaurant,
                food_category: get("food_category").unwrap_or_default(),
                item_description: get("item_description").unwrap_or_default(),
                item_name,
                serving_size: num("serving_size"),
                serving_size_unit: get("serving_size_unit").map(UnitCode::new),
                servings_per_serving_size: num("servings_per_serving_size"),
                serving_size_text: get("serving_size_text"),
                grams_per_serving_size: num("grams_per_serving_size"),
                kcal,
                year,
                extra: extras
                    .iter()
                    .filter_map(|&(c, n)| text(&row[c]).map(|v| (n.to_string(), v)))
                    .collect(),
            })
        })
        .collect()
}

/// Sanitizes and loads a menu CSV in strict mode, one item per data row.
pub fn parse_menustat_with(path: impl AsRef<Path>, year: Option<u16>) -> Result<MenustatOutcome, MenustatError> {
    let (outcome, report) = load_sanitized(path, "menustat", false)?;
    let items = items_from_table(&outcome.table, year)?;
    Ok(MenustatOutcome { items, report })
}

pub fn parse_menustat(path: impl AsRef<Path>) -> Result<Vec<RestaurantItem>, MenustatError> {
    Ok(parse_menustat_with(path, None)?.items)
}

/// Maps items to restaurant foods with sequential ids from `id_base`.
///
/// `kcal` becomes an energy fact; serving fields become a portion when they
/// satisfy the portion invariants. Fails if any assigned id is in `reserved`.
pub fn restaurant_items_to_foods(
    items: &[RestaurantItem],
    id_base: i64,
    reserved: &HashSet<FoodId>,
) -> Result<StoreParts, MenustatError> {
    let ids = reserve_id_range(id_base, items.len(), reserved).map_err(|e| match e {
        ModelError::IdRangeCollision { first, last, clash } => MenustatError::IdRangeCollision { first, last, clash },
        other => MenustatError::Model(other),
    })?;
    let mut parts = StoreParts::default();
    for (id, item) in ids.map(FoodId).zip(items) {
        parts.foods.push(FoodItem::new(
            id,
            item.item_name.clone(),
            Category::Restaurant,
            None,
            Some(item.restaurant.clone()),
        )?);
        if let Some(kcal) = item.kcal {
            parts.facts.push(NutrientValue {
                food_id: id,
                nutrient_id: ENERGY_KCAL,
                amount: kcal,
                unit: UnitCode::new("KCAL"),
            });
        }
        if item.serving_size.is_some() || item.grams_per_serving_size.is_some() {
            let portion = Portion {
                food_id: id,
                servings: item.servings_per_serving_size,
                serving_size: item.serving_size,
                serving_size_unit: item.serving_size_unit.clone(),
                gram_weight: item.grams_per_serving_size,
            };
            match portion.validate() {
                Ok(()) => parts.portions.push(portion),
                Err(e) => warn!("skipping portion: {e}"),
            }
        }
    }
    Ok(parts)
}
