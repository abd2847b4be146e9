use std::collections::{HashMap, HashSet};
use std::ops::Range;

use rust_decimal::Decimal;
use serde::Serialize;

use super::{
    CategoryTable, FoodId, FoodItem, IndexKey, IndexedTable, ModelError, NutrientDictionary,
    NutrientId, NutrientValue, Portion, UnitCode,
};
use crate::table::{Cell, RawTable, SemanticType, TableSchema};

/// Unvalidated inputs to a [`FoodStore`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StoreParts {
    pub foods: Vec<FoodItem>,
    pub facts: Vec<NutrientValue>,
    pub portions: Vec<Portion>,
}

/// What assembly dropped on the way from joined tables to store parts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AssemblyDiagnostics {
    pub foods: usize,
    pub facts: usize,
    pub portions: usize,
    pub facts_unknown_nutrient: usize,
    pub facts_null_amount: usize,
    pub facts_negative_amount: usize,
    pub duplicate_facts: usize,
    pub invalid_portions: usize,
}

/// The validated food model. Foods are ordered by `(category, fdc_id)`;
/// facts and portions are grouped per food in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoodStore {
    dictionary: NutrientDictionary,
    foods: Vec<FoodItem>,
    facts: Vec<NutrientValue>,
    portions: Vec<Portion>,
    position: HashMap<FoodId, usize>,
    fact_ranges: Vec<Range<usize>>,
    portion_ranges: Vec<Range<usize>>,
}

fn group_ranges<T>(items: &[T], n: usize, pos: impl Fn(&T) -> usize) -> Vec<Range<usize>> {
    let mut ranges = vec![0..0; n];
    let mut start = 0;
    while start < items.len() {
        let p = pos(&items[start]);
        let mut end = start + 1;
        while end < items.len() && pos(&items[end]) == p {
            end += 1;
        }
        ranges[p] = start..end;
        start = end;
    }
    ranges
}

impl FoodStore {
    pub fn new(dictionary: NutrientDictionary, parts: StoreParts) -> Result<Self, ModelError> {
        let StoreParts {
            mut foods,
            mut facts,
            mut portions,
        } = parts;
        foods.sort_by_key(|f| (f.category, f.fdc_id));
        let mut position = HashMap::with_capacity(foods.len());
        for (i, food) in foods.iter().enumerate() {
            food.validate()?;
            if position.insert(food.fdc_id, i).is_some() {
                return Err(ModelError::DuplicateFoodId(food.fdc_id, food.category));
            }
        }

        let mut seen = HashSet::with_capacity(facts.len());
        for fact in &mut facts {
            if !position.contains_key(&fact.food_id) {
                return Err(ModelError::UnknownFood(fact.food_id));
            }
            let def = dictionary
                .get(fact.nutrient_id)
                .ok_or(ModelError::UnknownNutrientId(fact.nutrient_id))?;
            let invalid = |reason: String| ModelError::InvalidFact {
                food: fact.food_id,
                nutrient: fact.nutrient_id,
                reason,
            };
            if !fact.unit.same_unit(&def.unit) {
                return Err(invalid(format!("unit {} but nutrient is measured in {}", fact.unit, def.unit)));
            }
            if fact.amount < Decimal::ZERO {
                return Err(invalid("negative amount".to_string()));
            }
            if !seen.insert((fact.food_id, fact.nutrient_id)) {
                return Err(ModelError::DuplicateFact(fact.food_id, fact.nutrient_id));
            }
            fact.unit = def.unit.clone();
        }
        facts.sort_by_cached_key(|f| {
            let name = dictionary.get(f.nutrient_id).map(|d| d.display_name()).unwrap_or_default();
            (position[&f.food_id], name, f.nutrient_id)
        });

        for p in &portions {
            if !position.contains_key(&p.food_id) {
                return Err(ModelError::UnknownFood(p.food_id));
            }
            p.validate()?;
        }
        portions.sort_by_key(|p| position[&p.food_id]);

        let fact_ranges = group_ranges(&facts, foods.len(), |f| position[&f.food_id]);
        let portion_ranges = group_ranges(&portions, foods.len(), |p| position[&p.food_id]);
        Ok(Self {
            dictionary,
            foods,
            facts,
            portions,
            position,
            fact_ranges,
            portion_ranges,
        })
    }

    pub fn dictionary(&self) -> &NutrientDictionary {
        &self.dictionary
    }

    pub fn foods(&self) -> &[FoodItem] {
        &self.foods
    }

    pub fn facts(&self) -> &[NutrientValue] {
        &self.facts
    }

    pub fn portions(&self) -> &[Portion] {
        &self.portions
    }

    pub fn len(&self) -> usize {
        self.foods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.foods.is_empty()
    }

    pub fn food(&self, id: FoodId) -> Option<&FoodItem> {
        self.position.get(&id).map(|&i| &self.foods[i])
    }

    /// Facts for one food, ordered by nutrient display name.
    pub fn facts_for(&self, id: FoodId) -> &[NutrientValue] {
        self.position
            .get(&id)
            .map_or(&[], |&i| &self.facts[self.fact_ranges[i].clone()])
    }

    pub fn portions_for(&self, id: FoodId) -> &[Portion] {
        self.position
            .get(&id)
            .map_or(&[], |&i| &self.portions[self.portion_ranges[i].clone()])
    }

    pub fn primary_portion(&self, id: FoodId) -> Option<&Portion> {
        self.portions_for(id).first()
    }

    pub fn fact(&self, id: FoodId, nutrient: NutrientId) -> Option<&NutrientValue> {
        self.facts_for(id).iter().find(|f| f.nutrient_id == nutrient)
    }

    pub fn into_parts(self) -> (NutrientDictionary, StoreParts) {
        (
            self.dictionary,
            StoreParts {
                foods: self.foods,
                facts: self.facts,
                portions: self.portions,
            },
        )
    }

    pub fn foods_schema() -> TableSchema {
        TableSchema::of(
            "foods",
            &[
                ("fdc_id", SemanticType::Id64),
                ("description", SemanticType::Text),
                ("category", SemanticType::Text),
                ("brand_owner", SemanticType::Text),
                ("restaurant", SemanticType::Text),
            ],
        )
        .expect("static schema")
    }

    pub fn facts_schema() -> TableSchema {
        TableSchema::of(
            "nutrient_values",
            &[
                ("fdc_id", SemanticType::Id64),
                ("nutrient_id", SemanticType::Id64),
                ("amount", SemanticType::Decimal),
                ("unit_name", SemanticType::UnitCode),
            ],
        )
        .expect("static schema")
    }

    pub fn portions_schema() -> TableSchema {
        TableSchema::of(
            "portions",
            &[
                ("fdc_id", SemanticType::Id64),
                ("servings", SemanticType::Decimal),
                ("serving_size", SemanticType::Decimal),
                ("serving_size_unit", SemanticType::UnitCode),
                ("gram_weight", SemanticType::Decimal),
            ],
        )
        .expect("static schema")
    }

    /// Persisted form: foods, nutrient_values, portions and nutrient tables.
    pub fn to_tables(&self) -> [RawTable; 4] {
        let foods = self
            .foods
            .iter()
            .map(|f| {
                vec![
                    Cell::Id(f.fdc_id.0),
                    Cell::Text(f.description.clone()),
                    Cell::Text(f.category.as_str().to_string()),
                    Cell::opt_text(f.brand_owner.as_deref()),
                    Cell::opt_text(f.restaurant.as_deref()),
                ]
            })
            .collect();
        let facts = self
            .facts
            .iter()
            .map(|v| {
                vec![
                    Cell::Id(v.food_id.0),
                    Cell::Id(v.nutrient_id.0),
                    Cell::Dec(v.amount),
                    Cell::Unit(v.unit.as_str().to_string()),
                ]
            })
            .collect();
        let portions = self
            .portions
            .iter()
            .map(|p| {
                vec![
                    Cell::Id(p.food_id.0),
                    Cell::opt_dec(p.servings),
                    Cell::opt_dec(p.serving_size),
                    Cell::opt_unit(p.serving_size_unit.as_ref().map(UnitCode::as_str)),
                    Cell::opt_dec(p.gram_weight),
                ]
            })
            .collect();
        [
            RawTable::new(Self::foods_schema(), foods, "").expect("fixed width"),
            RawTable::new(Self::facts_schema(), facts, "").expect("fixed width"),
            RawTable::new(Self::portions_schema(), portions, "").expect("fixed width"),
            self.dictionary.to_table(),
        ]
    }

    /// Inverse of [`FoodStore::to_tables`]. Columns are found by name.
    pub fn from_tables(
        foods: &RawTable,
        facts: &RawTable,
        portions: &RawTable,
        nutrient: &RawTable,
    ) -> Result<Self, ModelError> {
        let dictionary = NutrientDictionary::from_table(nutrient)?;
        let col = |t: &RawTable, name: &str| {
            t.column_index(name).ok_or_else(|| ModelError::NoSuchColumn {
                table: t.name().to_string(),
                column: name.to_string(),
            })
        };
        let text = |c: &Cell| c.as_str().map(str::to_string);

        let (fid, fdesc, fcat, fbrand, frest) = (
            col(foods, "fdc_id")?,
            col(foods, "description")?,
            col(foods, "category")?,
            col(foods, "brand_owner")?,
            col(foods, "restaurant")?,
        );
        let mut parts = StoreParts::default();
        for row in foods.rows() {
            let id = FoodId(row[fid].as_i64().unwrap_or(0));
            let category = row[fcat].as_str().unwrap_or_default().parse()?;
            parts.foods.push(FoodItem {
                fdc_id: id,
                description: row[fdesc].as_str().unwrap_or_default().to_string(),
                category,
                brand_owner: text(&row[fbrand]),
                restaurant: text(&row[frest]),
            });
        }

        let (vid, vnut, vamt, vunit) = (
            col(facts, "fdc_id")?,
            col(facts, "nutrient_id")?,
            col(facts, "amount")?,
            col(facts, "unit_name")?,
        );
        for row in facts.rows() {
            let food = FoodId(row[vid].as_i64().unwrap_or(0));
            let nutrient = NutrientId(row[vnut].as_i64().unwrap_or(0));
            let amount = row[vamt].as_decimal().ok_or_else(|| ModelError::InvalidFact {
                food,
                nutrient,
                reason: "missing amount".to_string(),
            })?;
            parts.facts.push(NutrientValue {
                food_id: food,
                nutrient_id: nutrient,
                amount,
                unit: UnitCode::new(row[vunit].as_str().unwrap_or_default()),
            });
        }

        let (pid, pserv, psize, punit, pgram) = (
            col(portions, "fdc_id")?,
            col(portions, "servings")?,
            col(portions, "serving_size")?,
            col(portions, "serving_size_unit")?,
            col(portions, "gram_weight")?,
        );
        for row in portions.rows() {
            parts.portions.push(Portion {
                food_id: FoodId(row[pid].as_i64().unwrap_or(0)),
                servings: row[pserv].as_decimal(),
                serving_size: row[psize].as_decimal(),
                serving_size_unit: row[punit].as_str().map(UnitCode::new),
                gram_weight: row[pgram].as_decimal(),
            });
        }
        Self::new(dictionary, parts)
    }
}

/// One food per surviving category member, description from its first joined row.
pub fn assemble_food_items(tables: &[CategoryTable]) -> Result<Vec<FoodItem>, ModelError> {
    let mut foods = Vec::new();
    for ct in tables {
        let t = &ct.table;
        let fdc = t.column_index("fdc_id");
        let desc = t.column_index("description");
        let brand = t.column_index("brand_owner");
        let mut first_row: HashMap<i64, usize> = HashMap::new();
        if let Some(fdc) = fdc {
            for (i, row) in t.rows().iter().enumerate() {
                if let Some(id) = row[fdc].as_i64() {
                    first_row.entry(id).or_insert(i);
                }
            }
        }
        let mut seen = HashSet::new();
        for &id in &ct.members {
            if !seen.insert(id) {
                return Err(ModelError::DuplicateFoodId(id, ct.category));
            }
            let row = first_row.get(&id.0).map(|&i| &t.rows()[i]);
            let get = |c: Option<usize>| row.zip(c).and_then(|(r, c)| r[c].as_str().map(str::to_string));
            let food = FoodItem {
                fdc_id: id,
                description: get(desc).unwrap_or_default(),
                category: ct.category,
                brand_owner: get(brand),
                restaurant: None,
            };
            food.validate()?;
            foods.push(food);
        }
    }
    foods.sort_by_key(|f| (f.category, f.fdc_id));
    Ok(foods)
}

/// Collects foods, every dictionary-known nutrient fact and each joined portion.
///
/// `nutrients` is the raw food_nutrient table and needs an `fdc_id` index.
/// Facts with unknown nutrients, null or negative amounts, repeated
/// `(food, nutrient)` pairs and invalid portions are skipped and counted.
pub fn assemble_store(
    tables: &[CategoryTable],
    nutrients: &IndexedTable,
    dictionary: &NutrientDictionary,
) -> Result<(StoreParts, AssemblyDiagnostics), ModelError> {
    let foods = assemble_food_items(tables)?;
    let mut diag = AssemblyDiagnostics {
        foods: foods.len(),
        ..Default::default()
    };
    let nut_idx = nutrients.require_index("fdc_id")?;
    let nt = nutrients.table();
    let col = |name: &str| {
        nt.column_index(name).ok_or_else(|| ModelError::NoSuchColumn {
            table: nt.name().to_string(),
            column: name.to_string(),
        })
    };
    let (nid, namt) = (col("nutrient_id")?, col("amount")?);

    let mut facts = Vec::new();
    for food in &foods {
        let mut seen = HashSet::new();
        for &r in nut_idx.lookup(&IndexKey::Int(food.fdc_id.0)) {
            let row = &nt.rows()[r];
            let Some(def) = row[nid].as_i64().and_then(|n| dictionary.get(NutrientId(n))) else {
                diag.facts_unknown_nutrient += 1;
                continue;
            };
            let Some(amount) = row[namt].as_decimal() else {
                diag.facts_null_amount += 1;
                continue;
            };
            if amount < Decimal::ZERO {
                diag.facts_negative_amount += 1;
                continue;
            }
            if !seen.insert(def.nutrient_id) {
                diag.duplicate_facts += 1;
                continue;
            }
            facts.push(NutrientValue {
                food_id: food.fdc_id,
                nutrient_id: def.nutrient_id,
                amount,
                unit: def.unit.clone(),
            });
        }
    }

    let mut portions = Vec::new();
    for ct in tables {
        let t = &ct.table;
        let c = |name: &str| t.column_index(name);
        let (fdc, serv, size, unit, gram) =
            (c("fdc_id"), c("servings"), c("serving_size"), c("serving_size_unit"), c("gram_weight"));
        let Some(fdc) = fdc else { continue };
        for row in t.rows() {
            let Some(id) = row[fdc].as_i64() else { continue };
            let dec = |c: Option<usize>| c.and_then(|c| row[c].as_decimal());
            let p = Portion {
                food_id: FoodId(id),
                servings: dec(serv),
                serving_size: dec(size),
                serving_size_unit: unit.and_then(|c| row[c].as_str()).map(UnitCode::new),
                gram_weight: dec(gram),
            };
            // Several nutrient rows for one food repeat the same portion.
            if portions.last() == Some(&p) {
                continue;
            }
            match p.validate() {
                Ok(()) => portions.push(p),
                Err(_) => diag.invalid_portions += 1,
            }
        }
    }
    diag.facts = facts.len();
    diag.portions = portions.len();
    Ok((
        StoreParts {
            foods,
            facts,
            portions,
        },
        diag,
    ))
}
