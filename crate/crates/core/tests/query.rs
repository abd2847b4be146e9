mod common;

use fooddb::model::{FoodId, ModelError};
use fooddb::pipeline::{run_build, BuildOptions, SourceConfig};
use fooddb::query::{nutrient_profile, search, DescriptionIndex, NutrientConstraint, QueryError, QueryRequest};
use proptest::prelude::*;
use rust_decimal::Decimal;

fn usda_sample() -> fooddb::model::FoodStore {
    let cfg = SourceConfig {
        usda: Some(common::fixtures_dir().join("usda_sample")),
        ..SourceConfig::default()
    };
    run_build(&cfg, &BuildOptions::default()).unwrap().store
}

fn names(hits: &[fooddb::query::SearchHit]) -> Vec<&str> {
    hits.iter().map(|h| h.food.description.as_str()).collect()
}

#[test]
fn broth_finds_swanson_only() {
    let store = usda_sample();
    let hits = search(&QueryRequest::new("broth"), &store, None).unwrap();
    assert_eq!(names(&hits), ["SWANSON BROTH BEEF"]);
    assert!(search(&QueryRequest::new("zzzz"), &store, None).unwrap().is_empty());
}

#[test]
fn energy_ceiling_keeps_swanson_and_drops_wesson() {
    let store = usda_sample();
    let mut req = QueryRequest::new(" ");
    req.text_query = "o".into();
    req.constraints.push(NutrientConstraint {
        nutrient: "energy".into(),
        min: None,
        max: Some(Decimal::from(100)),
    });
    let hits = search(&req, &store, None).unwrap();
    assert_eq!(names(&hits), ["SWANSON BROTH BEEF"]);
    assert_eq!(hits[0].matched[0].amount, "9.6".parse::<Decimal>().unwrap());
    assert_eq!(hits[0].matched[0].unit.as_str(), "KCAL");

    req.constraints[0].nutrient = "Vitamin Z".into();
    assert!(matches!(search(&req, &store, None), Err(QueryError::Model(ModelError::UnknownNutrient(_)))));
}

#[test]
fn wesson_profile() {
    let store = usda_sample();
    let p = nutrient_profile(FoodId(3_000_000_001), &store).unwrap();
    let rows: Vec<(String, String, String)> = p
        .iter()
        .map(|e| (e.name.clone(), e.amount.to_string(), e.unit.as_str().to_string()))
        .collect();
    assert!(rows.contains(&("energy".into(), "130.05".into(), "KCAL".into())));
    assert!(rows.contains(&("total lipid (fat)".into(), "14".into(), "G".into())));
    let sorted = {
        let mut v: Vec<_> = p.iter().map(|e| e.name.clone()).collect();
        v.sort();
        v
    };
    assert_eq!(p.iter().map(|e| e.name.clone()).collect::<Vec<_>>(), sorted);
    assert!(matches!(nutrient_profile(FoodId(42), &store), Err(QueryError::Model(ModelError::UnknownFood(_)))));
}

proptest! {
    #[test]
    fn index_agrees_with_full_scan(seed in any::<u64>(), q in "(b|be|beef|oil|ro|\"k| |, c|crêpe|w/ s)", limit in 1usize..50, max in prop::option::of(0i64..200_000)) {
        let store = common::random_store(seed, None);
        let mut req = QueryRequest::new(q.clone());
        req.limit = limit;
        if let Some(m) = max {
            req.constraints.push(NutrientConstraint { nutrient: "protein".into(), min: None, max: Some(Decimal::new(m, 2)) });
        }
        if q.trim().is_empty() {
            prop_assert!(search(&req, &store, None).is_err());
            return Ok(());
        }
        let ix = DescriptionIndex::build(&store);
        let plain = search(&req, &store, None).unwrap();
        let indexed = search(&req, &store, Some(&ix)).unwrap();
        prop_assert_eq!(&plain, &indexed);
        prop_assert!(plain.len() <= limit);

        // brute force over every food with the same predicates
        let needle = q.trim().to_lowercase();
        let mut want: Vec<_> = store.foods().iter().filter_map(|f| {
            let pos = f.description.to_lowercase().find(&needle)?;
            if let Some(m) = max {
                let fact = store.fact(f.fdc_id, fooddb::model::NutrientId(1003))?;
                if fact.amount > Decimal::new(m, 2) { return None; }
            }
            Some((pos, f.description.clone(), f.fdc_id))
        }).collect();
        want.sort();
        want.truncate(limit);
        let got: Vec<_> = plain.iter().map(|h| (h.position, h.food.description.clone(), h.food.fdc_id)).collect();
        prop_assert_eq!(got, want);
    }
}
