mod common;

use std::fs;

use fooddb::export::{emit_sql_dump, export_tables, ExportFormat, SqlDialect};
use fooddb::model::Category;
use fooddb::pipeline::{run_build, BuildOptions, SourceConfig};
use fooddb::table::{Cell, RawTable, SemanticType, TableSchema};
use proptest::prelude::*;

fn branded_sample() -> RawTable {
    let cfg = SourceConfig {
        usda: Some(common::fixtures_dir().join("usda_sample")),
        ..SourceConfig::default()
    };
    let out = run_build(&cfg, &BuildOptions::default()).unwrap();
    out.category_tables
        .into_iter()
        .find(|c| c.category == Category::Branded)
        .unwrap()
        .table
}

#[test]
fn branded_category_table_matches_golden_dump() {
    let golden = fs::read_to_string(common::fixtures_dir().join("golden/branded_food.mysql.sql")).unwrap();
    assert_eq!(emit_sql_dump(&branded_sample(), &SqlDialect::mysql()).unwrap(), golden);
}

#[test]
fn fdc_id_uses_the_64_bit_type() {
    let t = branded_sample();
    for (d, ty) in [(SqlDialect::mysql(), "`fdc_id` BIGINT"), (SqlDialect::postgres(), "\"fdc_id\" BIGINT"), (SqlDialect::sqlite(), "\"fdc_id\" INTEGER")] {
        let sql = emit_sql_dump(&t, &d).unwrap();
        assert!(sql.lines().any(|l| l.trim() == format!("{ty},")), "{}", d.name);
        assert!(sql.contains("3000000001"));
    }
}

#[test]
fn empty_table_has_create_only() {
    let schema = TableSchema::of("empty", &[("fdc_id", SemanticType::Id64), ("note", SemanticType::Text)]).unwrap();
    let sql = emit_sql_dump(&RawTable::empty(schema), &SqlDialect::postgres()).unwrap();
    assert_eq!(sql, "CREATE TABLE \"empty\" (\n  \"fdc_id\" BIGINT,\n  \"note\" TEXT\n);\n");
}

#[test]
fn literals_escape_quotes_and_backslashes_per_dialect() {
    let cell = Cell::Text("Wendy's \\ Co".into());
    assert_eq!(SqlDialect::mysql().literal(&cell), "'Wendy''s \\\\ Co'");
    assert_eq!(SqlDialect::postgres().literal(&cell), "'Wendy''s \\ Co'");
    assert_eq!(SqlDialect::mysql().literal(&Cell::Null), "NULL");
    assert!(SqlDialect::by_name("oracle").is_err());
}

#[test]
fn export_is_deterministic() {
    let t = branded_sample();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        export_tables(&[&t], ExportFormat::Csv, &SqlDialect::mysql(), dir.path()).unwrap();
        export_tables(&[&t], ExportFormat::Sql, &SqlDialect::mysql(), dir.path()).unwrap();
    }
    assert_eq!(common::dir_hash(a.path()), common::dir_hash(b.path()));
    assert!(a.path().join("branded_food.csv").exists());
    assert!(a.path().join("branded_food.sql").exists());
}

/// INSERT statement sizes read back from the dump text.
fn insert_sizes(sql: &str) -> Vec<usize> {
    let mut sizes = Vec::new();
    for line in sql.lines() {
        if line.starts_with("INSERT INTO ") {
            sizes.push(0);
        } else if line.starts_with('(') {
            *sizes.last_mut().expect("row after INSERT") += 1;
        }
    }
    sizes
}

proptest! {
    #[test]
    fn insert_rows_add_up(n in 0usize..1300, per in 1usize..600) {
        let schema = TableSchema::of("t", &[("fdc_id", SemanticType::Id64), ("name", SemanticType::Text)]).unwrap();
        let rows = (0..n).map(|i| vec![Cell::Id(3_000_000_000 + i as i64), Cell::Text(format!("item {i}"))]).collect();
        let t = RawTable::new(schema, rows, "").unwrap();
        let sql = emit_sql_dump(&t, &SqlDialect::mysql().with_rows_per_insert(per)).unwrap();
        let sizes = insert_sizes(&sql);
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        prop_assert_eq!(sizes.len(), n.div_ceil(per));
        prop_assert!(sizes.iter().all(|&s| s >= 1 && s <= per));
        prop_assert_eq!(sql.clone(), emit_sql_dump(&t, &SqlDialect::mysql().with_rows_per_insert(per)).unwrap());
    }
}
