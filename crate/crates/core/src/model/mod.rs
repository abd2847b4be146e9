//! Unified food model: items, nutrient facts, portions, the nutrient dictionary,
//! column indexes and the per-category join.

mod dictionary;
mod index;
mod join;
mod store;

use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use thiserror::Error;

pub use self::dictionary::{lookup_nutrient_id, NutrientDef, NutrientDictionary, ENERGY_KCAL};
pub use self::index::{build_index, ColumnIndex, IndexKey, IndexedTable};
pub use self::join::{
    build_category_table, CategorySpec, CategoryTable, JoinDiagnostics, JoinInputs,
};
pub use self::store::{
    assemble_food_items, assemble_store, AssemblyDiagnostics, FoodStore, StoreParts,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FoodId(pub i64);

impl fmt::Display for FoodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NutrientId(pub i64);

impl fmt::Display for NutrientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Measurement unit as written in the source (`G`, `MG`, `KCAL`, `ml`, `oz`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitCode(String);

impl UnitCode {
    pub fn new(code: impl Into<String>) -> Self {
        Self(code.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn same_unit(&self, other: &UnitCode) -> bool {
        self.0.eq_ignore_ascii_case(&other.0)
    }
}

impl fmt::Display for UnitCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Branded,
    Foundation,
    SrLegacy,
    Experimental,
    Restaurant,
}

impl Category {
    pub const USDA: [Category; 4] = [
        Category::Branded,
        Category::Foundation,
        Category::SrLegacy,
        Category::Experimental,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Branded => "branded",
            Category::Foundation => "foundation",
            Category::SrLegacy => "sr_legacy",
            Category::Experimental => "experimental",
            Category::Restaurant => "restaurant",
        }
    }

    /// Name of the USDA category file and of the joined output table.
    pub fn table_name(self) -> &'static str {
        match self {
            Category::Branded => "branded_food",
            Category::Foundation => "foundation_food",
            Category::SrLegacy => "sr_legacy_food",
            Category::Experimental => "experimental_food",
            Category::Restaurant => "restaurant_food",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "branded" => Ok(Category::Branded),
            "foundation" => Ok(Category::Foundation),
            "sr_legacy" => Ok(Category::SrLegacy),
            "experimental" => Ok(Category::Experimental),
            "restaurant" => Ok(Category::Restaurant),
            other => Err(ModelError::UnknownCategory(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown nutrient `{0}`")]
    UnknownNutrient(String),
    #[error("nutrient id {0} is not in the dictionary")]
    UnknownNutrientId(NutrientId),
    #[error("duplicate nutrient id {0} in dictionary")]
    DuplicateNutrient(NutrientId),
    #[error("table `{table}` has no column `{column}`")]
    NoSuchColumn { table: String, column: String },
    #[error("table `{table}` has no index on `{column}`")]
    MissingIndex { table: String, column: String },
    #[error("food {0} appears more than once in category {1}")]
    DuplicateFoodId(FoodId, Category),
    #[error("invalid food {0}: {1}")]
    InvalidFood(FoodId, &'static str),
    #[error("fact for food {food} nutrient {nutrient}: {reason}")]
    InvalidFact {
        food: FoodId,
        nutrient: NutrientId,
        reason: String,
    },
    #[error("food {0} has two facts for nutrient {1}")]
    DuplicateFact(FoodId, NutrientId),
    #[error("invalid portion for food {0}: {1}")]
    InvalidPortion(FoodId, &'static str),
    #[error("unknown food {0}")]
    UnknownFood(FoodId),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("id range {first}..={last} overlaps existing food {clash}")]
    IdRangeCollision { first: i64, last: i64, clash: FoodId },
}

/// Claims `count` sequential ids from `base`, failing if the range overflows,
/// starts below 1, or contains any id in `reserved`.
pub fn reserve_id_range(
    base: i64,
    count: usize,
    reserved: &std::collections::HashSet<FoodId>,
) -> Result<std::ops::Range<i64>, ModelError> {
    let end = i64::try_from(count)
        .ok()
        .and_then(|n| base.checked_add(n))
        .filter(|_| base > 0)
        .ok_or(ModelError::IdRangeCollision {
            first: base,
            last: i64::MAX,
            clash: FoodId(base),
        })?;
    if let Some(&clash) = reserved.iter().filter(|id| (base..end).contains(&id.0)).min() {
        return Err(ModelError::IdRangeCollision {
            first: base,
            last: end - 1,
            clash,
        });
    }
    Ok(base..end)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoodItem {
    pub fdc_id: FoodId,
    pub description: String,
    pub category: Category,
    pub brand_owner: Option<String>,
    pub restaurant: Option<String>,
}

impl FoodItem {
    pub fn new(
        fdc_id: FoodId,
        description: impl Into<String>,
        category: Category,
        brand_owner: Option<String>,
        restaurant: Option<String>,
    ) -> Result<Self, ModelError> {
        let item = Self {
            fdc_id,
            description: description.into(),
            category,
            brand_owner,
            restaurant,
        };
        item.validate()?;
        Ok(item)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.fdc_id.0 <= 0 {
            return Err(ModelError::InvalidFood(self.fdc_id, "id must be positive"));
        }
        if self.category == Category::Restaurant && self.restaurant.is_none() {
            return Err(ModelError::InvalidFood(self.fdc_id, "restaurant food without restaurant"));
        }
        if self.category == Category::Branded && self.brand_owner.is_none() {
            return Err(ModelError::InvalidFood(self.fdc_id, "branded food without brand owner"));
        }
        Ok(())
    }

    /// Brand owner or restaurant, whichever attributes the food.
    pub fn source_name(&self) -> Option<&str> {
        self.brand_owner.as_deref().or(self.restaurant.as_deref())
    }
}

/// One `(food, nutrient, amount, unit)` fact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NutrientValue {
    pub food_id: FoodId,
    pub nutrient_id: NutrientId,
    pub amount: Decimal,
    pub unit: UnitCode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Portion {
    pub food_id: FoodId,
    pub servings: Option<Decimal>,
    pub serving_size: Option<Decimal>,
    pub serving_size_unit: Option<UnitCode>,
    pub gram_weight: Option<Decimal>,
}

impl Portion {
    pub fn new(
        food_id: FoodId,
        servings: Option<Decimal>,
        serving_size: Option<Decimal>,
        serving_size_unit: Option<UnitCode>,
        gram_weight: Option<Decimal>,
    ) -> Result<Self, ModelError> {
        let p = Self {
            food_id,
            servings,
            serving_size,
            serving_size_unit,
            gram_weight,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let id = self.food_id;
        if self.serving_size.is_none() && self.gram_weight.is_none() {
            return Err(ModelError::InvalidPortion(id, "needs a serving size or gram weight"));
        }
        if self.servings.is_some_and(|s| s <= Decimal::ZERO) {
            return Err(ModelError::InvalidPortion(id, "servings must be positive"));
        }
        if self.serving_size.is_some_and(|s| s <= Decimal::ZERO) {
            return Err(ModelError::InvalidPortion(id, "serving size must be positive"));
        }
        if self.gram_weight.is_some_and(|g| g < Decimal::ZERO) {
            return Err(ModelError::InvalidPortion(id, "gram weight must not be negative"));
        }
        Ok(())
    }
}
