//! Description search with category, source and nutrient-range filters, and
//! per-food nutrient profiles.

use std::collections::{BTreeSet, HashMap};

use rust_decimal::Decimal;
use thiserror::Error;

use crate::model::{lookup_nutrient_id, Category, FoodId, FoodItem, FoodStore, ModelError, NutrientId, UnitCode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("invalid query: {0}")]
    InvalidRequest(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NutrientConstraint {
    pub nutrient: String,
    pub min: Option<Decimal>,
    pub max: Option<Decimal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRequest {
    pub text_query: String,
    pub category: Option<Category>,
    /// Case-insensitive substring of the brand owner or restaurant.
    pub source: Option<String>,
    pub constraints: Vec<NutrientConstraint>,
    pub limit: usize,
}

impl QueryRequest {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text_query: text.into(),
            category: None,
            source: None,
            constraints: Vec::new(),
            limit: 20,
        }
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        if self.text_query.trim().is_empty() {
            return Err(QueryError::InvalidRequest("text query is empty"));
        }
        if self.limit == 0 {
            return Err(QueryError::InvalidRequest("limit must be at least 1"));
        }
        if self.constraints.iter().any(|c| matches!((c.min, c.max), (Some(a), Some(b)) if a > b)) {
            return Err(QueryError::InvalidRequest("constraint min exceeds max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchedNutrient {
    pub name: String,
    pub amount: Decimal,
    pub unit: UnitCode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchHit {
    pub food: FoodItem,
    /// Offset of the match in the lower-cased description.
    pub position: usize,
    /// One entry per constraint, in constraint order.
    pub matched: Vec<MatchedNutrient>,
}

/// Trigram postings over lower-cased descriptions, narrowing substring
/// candidates before the exact check.
#[derive(Debug, Clone, Default)]
pub struct DescriptionIndex {
    postings: HashMap<[char; 3], Vec<usize>>,
}

fn trigrams(s: &str) -> BTreeSet<[char; 3]> {
    let chars: Vec<char> = s.chars().collect();
    chars.windows(3).map(|w| [w[0], w[1], w[2]]).collect()
}

impl DescriptionIndex {
    pub fn build(store: &FoodStore) -> Self {
        let mut postings: HashMap<[char; 3], Vec<usize>> = HashMap::new();
        for (i, f) in store.foods().iter().enumerate() {
            for g in trigrams(&f.description.to_lowercase()) {
                postings.entry(g).or_default().push(i);
            }
        }
        Self { postings }
    }

    /// Positions that may contain `needle`; `None` when it is too short to narrow.
    fn candidates(&self, needle: &str) -> Option<Vec<usize>> {
        let grams = trigrams(needle);
        if grams.is_empty() {
            return None;
        }
        let mut lists: Vec<&[usize]> = grams
            .iter()
            .map(|g| self.postings.get(g).map_or(&[][..], Vec::as_slice))
            .collect();
        lists.sort_by_key(|l| l.len());
        let mut out: Vec<usize> = lists[0].to_vec();
        for l in &lists[1..] {
            out.retain(|i| l.binary_search(i).is_ok());
        }
        Some(out)
    }
}

fn passes(
    food: &FoodItem,
    req: &QueryRequest,
    source: Option<&str>,
    constraints: &[(NutrientId, &NutrientConstraint, String)],
    store: &FoodStore,
) -> Option<Vec<MatchedNutrient>> {
    if req.category.is_some_and(|c| c != food.category) {
        return None;
    }
    if let Some(src) = source {
        let owner = food.source_name()?.to_lowercase();
        if !owner.contains(src) {
            return None;
        }
    }
    constraints
        .iter()
        .map(|(id, c, name)| {
            let fact = store.fact(food.fdc_id, *id)?;
            let ok = c.min.is_none_or(|m| fact.amount >= m) && c.max.is_none_or(|m| fact.amount <= m);
            ok.then(|| MatchedNutrient {
                name: name.clone(),
                amount: fact.amount,
                unit: fact.unit.clone(),
            })
        })
        .collect()
}

/// Foods whose description contains the query, ordered by match position,
/// description and id. A food lacking a constrained nutrient is excluded.
pub fn search(req: &QueryRequest, store: &FoodStore, index: Option<&DescriptionIndex>) -> Result<Vec<SearchHit>, QueryError> {
    req.validate()?;
    let dict = store.dictionary();
    let constraints = req
        .constraints
        .iter()
        .map(|c| {
            let id = lookup_nutrient_id(&c.nutrient, dict)?;
            let name = dict.get(id).map(|d| d.display_name()).unwrap_or_default();
            Ok((id, c, name))
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let needle = req.text_query.trim().to_lowercase();
    let source = req.source.as_ref().map(|s| s.to_lowercase());

    let foods = store.foods();
    let positions: Vec<usize> = match index.and_then(|ix| ix.candidates(&needle)) {
        Some(c) => c,
        None => (0..foods.len()).collect(),
    };
    let mut hits: Vec<(usize, String, FoodId, usize, Vec<MatchedNutrient>)> = Vec::new();
    for i in positions {
        let food = &foods[i];
        let Some(pos) = food.description.to_lowercase().find(&needle) else { continue };
        let Some(matched) = passes(food, req, source.as_deref(), &constraints, store) else { continue };
        hits.push((pos, food.description.clone(), food.fdc_id, i, matched));
    }
    hits.sort_by(|a, b| (a.0, &a.1, a.2).cmp(&(b.0, &b.1, b.2)));
    hits.truncate(req.limit);
    Ok(hits
        .into_iter()
        .map(|(position, _, _, i, matched)| SearchHit {
            food: foods[i].clone(),
            position,
            matched,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileEntry {
    pub name: String,
    pub nutrient_id: NutrientId,
    pub amount: Decimal,
    pub unit: UnitCode,
}

/// Every fact for the food, sorted by nutrient display name.
pub fn nutrient_profile(id: FoodId, store: &FoodStore) -> Result<Vec<ProfileEntry>, QueryError> {
    if store.food(id).is_none() {
        return Err(ModelError::UnknownFood(id).into());
    }
    let dict = store.dictionary();
    let mut out: Vec<ProfileEntry> = store
        .facts_for(id)
        .iter()
        .map(|f| ProfileEntry {
            name: dict.get(f.nutrient_id).map(|d| d.display_name()).unwrap_or_default(),
            nutrient_id: f.nutrient_id,
            amount: f.amount,
            unit: f.unit.clone(),
        })
        .collect();
    out.sort_by(|a, b| (&a.name, a.nutrient_id).cmp(&(&b.name, b.nutrient_id)));
    Ok(out)
}
