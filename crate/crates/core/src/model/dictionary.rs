use std::collections::HashMap;

use super::{ModelError, NutrientId, UnitCode};
use crate::table::{Cell, RawTable, SemanticType, TableSchema};

/// Energy in kilocalories.
pub const ENERGY_KCAL: NutrientId = NutrientId(1008);

// (id, name, unit, key). Keys name the wide-layout slots and the scraped fields.
const CANONICAL: &[(i64, &str, &str, &str)] = &[
    (1003, "Protein", "G", "protein"),
    (1004, "Total lipid (fat)", "G", "fat"),
    (1005, "Carbohydrate, by difference", "G", "carbohydrate"),
    (1008, "Energy", "KCAL", "energy"),
    (1079, "Fiber, total dietary", "G", "fiber"),
    (1087, "Calcium, Ca", "MG", "calcium"),
    (1089, "Iron, Fe", "MG", "iron"),
    (1092, "Potassium, K", "MG", "potassium"),
    (1093, "Sodium, Na", "MG", "sodium"),
    (1114, "Vitamin D (D2 + D3)", "UG", "vitamin_d"),
    (1162, "Vitamin C, total ascorbic acid", "MG", "vitamin_c"),
    (1253, "Cholesterol", "MG", "cholesterol"),
    (1257, "Fatty acids, total trans", "G", "trans_fat"),
    (1258, "Fatty acids, total saturated", "G", "saturated_fat"),
    (1292, "Fatty acids, total monounsaturated", "G", "monounsaturated_fat"),
    (1293, "Fatty acids, total polyunsaturated", "G", "polyunsaturated_fat"),
    (2000, "Sugars, total including NLEA", "G", "sugar"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NutrientDef {
    pub nutrient_id: NutrientId,
    pub name: String,
    pub unit: UnitCode,
    /// Short identifier: wide-layout column prefix and scraped-field name.
    pub key: String,
}

impl NutrientDef {
    /// Lower-cased name as shown in derived tables (`energy`, `total lipid (fat)`).
    pub fn display_name(&self) -> String {
        self.name.to_lowercase()
    }
}

/// Lower-case ASCII alphanumerics joined by single underscores.
pub fn slug_key(name: &str) -> String {
    let mut out = String::new();
    for word in name
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
    {
        if !out.is_empty() {
            out.push('_');
        }
        out.push_str(&word.to_ascii_lowercase());
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NutrientDictionary {
    defs: Vec<NutrientDef>,
    by_id: HashMap<NutrientId, usize>,
    by_name: HashMap<String, usize>,
}

impl NutrientDictionary {
    pub fn new(defs: Vec<NutrientDef>) -> Result<Self, ModelError> {
        let mut dict = Self::default();
        for def in defs {
            dict.insert(def)?;
        }
        Ok(dict)
    }

    fn insert(&mut self, def: NutrientDef) -> Result<(), ModelError> {
        if self.by_id.contains_key(&def.nutrient_id) {
            return Err(ModelError::DuplicateNutrient(def.nutrient_id));
        }
        let idx = self.defs.len();
        self.by_id.insert(def.nutrient_id, idx);
        // Names take precedence over keys on a clash.
        self.by_name.insert(def.name.to_lowercase(), idx);
        self.by_name.entry(def.key.to_lowercase()).or_insert(idx);
        self.defs.push(def);
        Ok(())
    }

    /// Built-in dictionary of the commonly reported USDA nutrients.
    pub fn canonical() -> Self {
        Self::new(
            CANONICAL
                .iter()
                .map(|&(id, name, unit, key)| NutrientDef {
                    nutrient_id: NutrientId(id),
                    name: name.to_string(),
                    unit: UnitCode::new(unit),
                    key: key.to_string(),
                })
                .collect(),
        )
        .expect("canonical ids are unique")
    }

    pub fn canonical_key(id: NutrientId) -> Option<&'static str> {
        CANONICAL.iter().find(|c| c.0 == id.0).map(|c| c.3)
    }

    /// Reads a `nutrient.csv`-shaped table: `id`, `name`, `unit_name`.
    pub fn from_table(table: &RawTable) -> Result<Self, ModelError> {
        let col = |name: &str| {
            table.column_index(name).ok_or_else(|| ModelError::NoSuchColumn {
                table: table.name().to_string(),
                column: name.to_string(),
            })
        };
        let id_col = table
            .column_index("id")
            .or_else(|| table.column_index("nutrient_id"))
            .ok_or_else(|| ModelError::NoSuchColumn {
                table: table.name().to_string(),
                column: "id".to_string(),
            })?;
        let name_col = col("name")?;
        let unit_col = col("unit_name")?;
        // Id order keeps the dictionary independent of the file's row order.
        let mut rows: Vec<(NutrientId, &Vec<Cell>)> = table
            .rows()
            .iter()
            .filter_map(|row| row[id_col].as_i64().map(|id| (NutrientId(id), row)))
            .collect();
        rows.sort_by_key(|(id, _)| *id);
        let mut dict = Self::default();
        for (id, row) in rows {
            let name = row[name_col].as_str().unwrap_or_default().to_string();
            let unit = UnitCode::new(row[unit_col].as_str().unwrap_or_default());
            let mut key = Self::canonical_key(id)
                .map(str::to_string)
                .unwrap_or_else(|| slug_key(&name));
            if dict.by_name.contains_key(&key) {
                key = format!("{key}_{}", id.0);
            }
            dict.insert(NutrientDef {
                nutrient_id: id,
                name,
                unit,
                key,
            })?;
        }
        Ok(dict)
    }

    pub fn schema() -> TableSchema {
        TableSchema::of(
            "nutrient",
            &[
                ("id", SemanticType::Id64),
                ("name", SemanticType::Text),
                ("unit_name", SemanticType::UnitCode),
            ],
        )
        .expect("static schema")
    }

    pub fn to_table(&self) -> RawTable {
        let mut defs: Vec<&NutrientDef> = self.defs.iter().collect();
        defs.sort_by_key(|d| d.nutrient_id);
        let rows = defs
            .into_iter()
            .map(|d| {
                vec![
                    Cell::Id(d.nutrient_id.0),
                    Cell::Text(d.name.clone()),
                    Cell::Unit(d.unit.as_str().to_string()),
                ]
            })
            .collect();
        RawTable::new(Self::schema(), rows, "").expect("fixed width")
    }

    pub fn get(&self, id: NutrientId) -> Option<&NutrientDef> {
        self.by_id.get(&id).map(|&i| &self.defs[i])
    }

    /// Case-insensitive lookup by full name or short key.
    pub fn find(&self, name: &str) -> Option<&NutrientDef> {
        self.by_name.get(&name.to_lowercase()).map(|&i| &self.defs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &NutrientDef> {
        self.defs.iter()
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }
}

pub fn lookup_nutrient_id(name: &str, dictionary: &NutrientDictionary) -> Result<NutrientId, ModelError> {
    dictionary
        .find(name)
        .map(|d| d.nutrient_id)
        .ok_or_else(|| ModelError::UnknownNutrient(name.to_string()))
}
