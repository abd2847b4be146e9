mod common;

use std::collections::{BTreeMap, HashSet};

use fooddb::fixture::FixtureOptions;
use fooddb::model::{
    build_category_table, build_index, lookup_nutrient_id, Category, CategorySpec, IndexKey, IndexedTable, JoinInputs,
    ModelError, NutrientDictionary, NutrientId, ENERGY_KCAL,
};
use fooddb::pipeline::{load_usda, run_build, BuildOptions, SourceConfig};
use fooddb::table::{Cell, RawTable, SemanticType, TableSchema};
use proptest::prelude::*;
use rust_decimal::Decimal;

fn usda(dir: &std::path::Path) -> BTreeMap<String, RawTable> {
    load_usda(dir, &SourceConfig::default()).unwrap().tables
}

struct Joiner {
    food: IndexedTable,
    nutrients: IndexedTable,
    portions: IndexedTable,
    dict: NutrientDictionary,
}

impl Joiner {
    fn new(food: RawTable, nutrients: RawTable, portions: RawTable, dict: NutrientDictionary) -> Self {
        Self {
            food: IndexedTable::new(food).with_indexes(&["fdc_id"]).unwrap(),
            nutrients: IndexedTable::new(nutrients).with_indexes(&["fdc_id"]).unwrap(),
            portions: IndexedTable::new(portions).with_indexes(&["fdc_id"]).unwrap(),
            dict,
        }
    }

    fn from_usda(tables: &BTreeMap<String, RawTable>) -> Self {
        Self::new(
            tables["food"].clone(),
            tables["food_nutrient"].clone(),
            tables["food_portion"].clone(),
            NutrientDictionary::from_table(&tables["nutrient"]).unwrap(),
        )
    }

    fn inputs(&self) -> JoinInputs<'_> {
        JoinInputs {
            food: &self.food,
            nutrients: &self.nutrients,
            portions: &self.portions,
            dictionary: &self.dict,
        }
    }

    fn oracle(&self, category: Category, cat: &RawTable) -> Vec<Vec<Cell>> {
        let spec = CategorySpec::usda(category);
        let carry: Vec<&str> = spec.carry_columns.iter().map(String::as_str).collect();
        common::nested_loop_join(
            cat,
            &carry,
            self.food.table(),
            self.nutrients.table(),
            self.portions.table(),
            ENERGY_KCAL.0,
        )
    }
}

#[test]
fn energy_is_1008() {
    let dict = NutrientDictionary::canonical();
    for name in ["Energy", "energy", "ENERGY"] {
        assert_eq!(lookup_nutrient_id(name, &dict).unwrap(), NutrientId(1008));
    }
    assert!(matches!(
        lookup_nutrient_id("vitamin z", &dict),
        Err(ModelError::UnknownNutrient(_))
    ));
}

#[test]
fn fixture_dictionary_names_resolve_to_manifest_ids() {
    let g = common::generate(&FixtureOptions::new(3, 20, 17 + 4));
    let dict = NutrientDictionary::from_table(&usda(&g.usda())["nutrient"]).unwrap();
    assert_eq!(g.manifest.nutrients.len(), 21);
    for n in &g.manifest.nutrients {
        assert_eq!(lookup_nutrient_id(&n.name, &dict).unwrap(), NutrientId(n.id), "{}", n.name);
    }
    assert!(g.manifest.nutrients.iter().any(|n| n.id == 1008 && n.name == "Energy" && n.unit == "KCAL"));
}

#[test]
fn index_lookup_equals_scan_for_every_key() {
    let g = common::generate(&FixtureOptions::new(9, 250, 4));
    let tables = usda(&g.usda());
    for (name, column) in [("food_nutrient", "fdc_id"), ("food_nutrient", "nutrient_id"), ("food_portion", "fdc_id"), ("food", "fdc_id")] {
        let t = &tables[name];
        assert!(t.loaded_row_count() <= 1000);
        let pos = t.column_index(column).unwrap();
        let index = build_index(t, column).unwrap();
        let keys: HashSet<i64> = t.rows().iter().filter_map(|r| r[pos].as_i64()).collect();
        assert_eq!(index.distinct_keys(), keys.len());
        for k in keys {
            let scan: Vec<usize> = (0..t.rows().len()).filter(|&i| t.rows()[i][pos].as_i64() == Some(k)).collect();
            assert_eq!(index.lookup(&IndexKey::Int(k)), scan.as_slice(), "{name}.{column} = {k}");
        }
        assert!(index.lookup(&IndexKey::Int(-1)).is_empty());
    }
    let facts = &tables["food_nutrient"];
    let by_food = build_index(facts, "fdc_id").unwrap();
    for f in &g.manifest.foods {
        assert_eq!(by_food.lookup(&IndexKey::Int(f.fdc_id)).len(), f.nutrients.len());
    }
}

#[test]
fn join_matches_nested_loop_on_small_fixtures() {
    for (seed, foods) in [(1, 4), (2, 17), (3, 50), (4, 100)] {
        let g = common::generate(&FixtureOptions::new(seed, foods, 5));
        let tables = usda(&g.usda());
        let j = Joiner::from_usda(&tables);
        for c in Category::USDA {
            let cat = &tables[c.table_name()];
            let got = build_category_table(&CategorySpec::usda(c), &j.inputs(), Some(cat), ENERGY_KCAL).unwrap();
            let want = j.oracle(c, cat);
            assert_eq!(common::row_multiset(got.table.rows()), common::row_multiset(&want), "seed {seed} {c}");
            // one energy row and one portion per food: one output row per member
            let members = g.manifest.foods.iter().filter(|f| f.category == c.as_str()).count();
            assert_eq!(got.table.rows().len(), members);
        }
    }
}

#[test]
fn wesson_joins_with_its_energy_value() {
    let tables = usda(&common::fixtures_dir().join("usda_sample"));
    let j = Joiner::from_usda(&tables);
    let ct = build_category_table(&CategorySpec::usda(Category::Branded), &j.inputs(), Some(&tables["branded_food"]), ENERGY_KCAL)
        .unwrap();
    let t = &ct.table;
    let (id, desc, kcals) = (t.column_index("fdc_id").unwrap(), t.column_index("description").unwrap(), t.column_index("kcals").unwrap());
    let row = t.rows().iter().find(|r| r[id] == Cell::Id(3_000_000_001)).unwrap();
    assert_eq!(row[desc], Cell::Text("WESSON Vegetable Oil 1 GAL".into()));
    assert_eq!(row[kcals], Cell::Dec("130.05".parse().unwrap()));
    assert_eq!(row[t.column_index("serving_size").unwrap()], Cell::Dec(Decimal::from(15)));
    assert_eq!(row[t.column_index("serving_size_unit").unwrap()], Cell::Unit("ml".into()));
}

#[test]
fn absent_experimental_file_gives_empty_table() {
    let tables = usda(&common::fixtures_dir().join("usda_sample"));
    let j = Joiner::from_usda(&tables);
    let ct = build_category_table(&CategorySpec::usda(Category::Experimental), &j.inputs(), None, ENERGY_KCAL).unwrap();
    assert!(ct.table.rows().is_empty());
    assert_eq!(ct.diagnostics.category_rows, 0);
}

#[test]
fn thousand_food_fixture_assembles_thousand_items() {
    let g = common::generate(&FixtureOptions::new(1, 1000, 3));
    let cfg = SourceConfig {
        usda: Some(g.usda()),
        ..SourceConfig::default()
    };
    let out = run_build(&cfg, &BuildOptions::default()).unwrap();
    assert_eq!(out.store.len(), g.manifest.expected.food_count);
    assert_eq!(out.store.len(), 1000);
    assert_eq!(out.store.facts().len(), g.manifest.expected.fact_count);
    let ids: HashSet<i64> = out.store.foods().iter().map(|f| f.fdc_id.0).collect();
    let planted: HashSet<i64> = g.manifest.foods.iter().map(|f| f.fdc_id).collect();
    assert_eq!(ids, planted);
}

fn dec(m: i64) -> Cell {
    Cell::Dec(Decimal::new(m, 2))
}

/// Small random USDA-shaped tables with duplicate, missing and dangling keys.
fn random_inputs() -> impl Strategy<Value = (RawTable, RawTable, RawTable, RawTable)> {
    let id = 1i64..12;
    let food = prop::collection::vec((id.clone(), "[A-Z]{1,6}"), 0..14);
    let category = prop::collection::vec((id.clone(), prop::option::of("[A-Z][a-z]{0,5}"), prop::option::of(1i64..500)), 0..14);
    let nutrients = prop::collection::vec((id.clone(), prop::sample::select(vec![1008i64, 1003, 1004]), 0i64..100_000), 0..40);
    let portions = prop::collection::vec((id, prop::option::of(1i64..400), prop::option::of(0i64..90_000)), 0..20);
    (food, category, nutrients, portions).prop_map(|(f, c, n, p)| {
        use SemanticType::*;
        let table = |name: &str, cols: &[(&str, SemanticType)], rows: Vec<Vec<Cell>>| {
            RawTable::new(TableSchema::of(name, cols).unwrap(), rows, "").unwrap()
        };
        let food = table(
            "food",
            &[("fdc_id", Id64), ("description", Text)],
            f.into_iter().map(|(i, d)| vec![Cell::Id(i), Cell::Text(d)]).collect(),
        );
        let cat = table(
            "branded_food",
            &[("fdc_id", Id64), ("brand_owner", Text), ("serving_size", Decimal), ("serving_size_unit", UnitCode)],
            c.into_iter()
                .map(|(i, b, s)| {
                    vec![
                        Cell::Id(i),
                        b.map_or(Cell::Null, Cell::Text),
                        s.map_or(Cell::Null, |v| Cell::Dec(v.into())),
                        Cell::Unit("g".into()),
                    ]
                })
                .collect(),
        );
        let nutrients = table(
            "food_nutrient",
            &[("id", Integer), ("fdc_id", Id64), ("nutrient_id", Id64), ("amount", Decimal)],
            n.into_iter()
                .enumerate()
                .map(|(k, (i, nid, a))| vec![Cell::Int(k as i64), Cell::Id(i), Cell::Id(nid), dec(a)])
                .collect(),
        );
        let portions = table(
            "food_portion",
            &[("id", Integer), ("fdc_id", Id64), ("amount", Decimal), ("gram_weight", Decimal)],
            p.into_iter()
                .enumerate()
                .map(|(k, (i, a, g))| {
                    vec![Cell::Int(k as i64), Cell::Id(i), a.map_or(Cell::Null, |v| Cell::Dec(v.into())), g.map_or(Cell::Null, dec)]
                })
                .collect(),
        );
        (food, cat, nutrients, portions)
    })
}

proptest! {
    #[test]
    fn join_equals_nested_loop((food, cat, nutrients, portions) in random_inputs()) {
        let j = Joiner::new(food, nutrients, portions, NutrientDictionary::canonical());
        let got = build_category_table(&CategorySpec::usda(Category::Branded), &j.inputs(), Some(&cat), ENERGY_KCAL).unwrap();
        let want = j.oracle(Category::Branded, &cat);
        prop_assert_eq!(common::row_multiset(got.table.rows()), common::row_multiset(&want));

        // containment: every output id appears in all three inputs
        let ids = |t: &RawTable| -> HashSet<i64> {
            let p = t.column_index("fdc_id").unwrap();
            t.rows().iter().filter_map(|r| r[p].as_i64()).collect()
        };
        let (f, n, p) = (ids(j.food.table()), ids(j.nutrients.table()), ids(j.portions.table()));
        for row in got.table.rows() {
            let id = row[0].as_i64().unwrap();
            prop_assert!(f.contains(&id) && n.contains(&id) && p.contains(&id));
        }
        let d = got.diagnostics;
        prop_assert_eq!(d.category_rows, cat.rows().len());
        prop_assert_eq!(d.matched_foods + d.missing_food + d.missing_nutrient + d.missing_portion, d.category_rows);
        prop_assert_eq!(d.output_rows, got.table.rows().len());
    }
}
