mod common;

use std::fs;
use std::path::Path;

use fooddb::fixture::FixtureOptions;
use fooddb::pipeline::{
    build, load_built_tables, load_store, read_catalog, run_build, BuildErrorKind, BuildOptions, ConfigError,
    LayoutChoice, SourceConfig, Stage,
};

fn usda_only(dir: &Path) -> SourceConfig {
    SourceConfig {
        usda: Some(dir.to_path_buf()),
        ..SourceConfig::default()
    }
}

#[test]
fn fixture_report_matches_manifest() {
    let g = common::generate(&FixtureOptions::new(7, 60, 5));
    let out = tempfile::tempdir().unwrap();
    let report = build(&usda_only(&g.usda()), &BuildOptions::default(), out.path()).unwrap();
    let e = &g.manifest.expected;
    assert_eq!(report.store_foods, e.food_count);
    assert_eq!(report.store_facts, e.fact_count);
    assert_eq!(report.store_portions, e.portion_count);
    assert_eq!(report.layout.row_records, Some(e.row_layout_records));
    assert_eq!(report.layout.column_records, Some(e.column_layout_records));
    assert_eq!(report.ingested["food"], e.food_count);
    assert_eq!(report.ingested["food_nutrient"], e.fact_count);
    assert_eq!(report.tables["row_layout"], e.row_layout_records);
    assert_eq!(report.tables["foods"], e.food_count);
    let joined: usize = report.joins.values().map(|d| d.output_rows).sum();
    assert_eq!(joined, e.food_count);
    assert!(out.path().join("build_report.json").exists());
}

#[test]
fn layout_choice_limits_output() {
    let g = common::generate(&FixtureOptions::new(2, 10, 3));
    for (choice, row, col) in [(LayoutChoice::Row, true, false), (LayoutChoice::Column, false, true)] {
        let out = tempfile::tempdir().unwrap();
        let opts = BuildOptions {
            layout: choice,
            ..BuildOptions::default()
        };
        let report = build(&usda_only(&g.usda()), &opts, out.path()).unwrap();
        assert_eq!(report.layout.row_records.is_some(), row);
        assert_eq!(report.layout.column_records.is_some(), col);
        assert_eq!(out.path().join("csv/row_layout.csv").exists(), row);
        assert_eq!(out.path().join("csv/column_layout.csv").exists(), col);
    }
}

#[test]
fn missing_food_nutrient_is_a_stage_annotated_io_error() {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(common::fixtures_dir().join("usda_sample")).unwrap() {
        let p = entry.unwrap().path();
        if p.file_name().unwrap() != "food_nutrient.csv" {
            fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    let err = run_build(&usda_only(dir.path()), &BuildOptions::default()).unwrap_err();
    assert_eq!(err.stage, Stage::Ingest);
    assert!(err.is_io());
    let msg = err.to_string();
    assert!(msg.starts_with("ingest: "), "{msg}");
    assert!(msg.contains("food_nutrient.csv"), "{msg}");
}

#[test]
fn built_store_loads_back_unchanged() {
    let mut opts = FixtureOptions::new(11, 40, 4);
    opts.menustat_rows = 30;
    let g = common::generate(&opts);
    let cfg = SourceConfig {
        usda: Some(g.usda()),
        menustat: Some(g.path().join(&g.manifest.menustat.as_ref().unwrap().path)),
        scrape: Some(g.path().join("scrape")),
        ..SourceConfig::default()
    };
    let out = tempfile::tempdir().unwrap();
    let built = run_build(&cfg, &BuildOptions::default()).unwrap();
    build(&cfg, &BuildOptions::default(), out.path()).unwrap();
    assert_eq!(load_store(out.path()).unwrap(), built.store);

    let catalog = read_catalog(out.path()).unwrap();
    let tables = load_built_tables(out.path()).unwrap();
    assert_eq!(catalog.len(), tables.len());
    for (schema, table) in catalog.iter().zip(&tables) {
        assert_eq!(schema, table.schema());
    }
}

#[test]
fn config_file_resolves_relative_paths() {
    let g = common::generate(&FixtureOptions::new(3, 5, 2));
    let cfg = SourceConfig::from_file(&g.path().join("sources.conf")).unwrap();
    assert_eq!(cfg.usda, Some(g.usda()));
    assert!(run_build(&cfg, &BuildOptions::default()).is_ok());
}

#[test]
fn config_errors() {
    let base = Path::new("/data");
    let err = |text: &str| SourceConfig::parse(text, base).unwrap_err();
    assert!(matches!(err("usda"), ConfigError::Syntax { line: 1 }));
    assert!(matches!(err("usda = a\nusda = b"), ConfigError::DuplicateKey { line: 2, .. }));
    assert!(matches!(err("usda = a\ncolour = red"), ConfigError::UnknownKey { .. }));
    assert!(matches!(err("usda = a\nid_base = -4"), ConfigError::BadValue { .. }));
    assert!(matches!(err("# nothing\n\n"), ConfigError::NoSources));
    let ok = SourceConfig::parse("# c\nmenustat = m.csv\nmenustat_year = 2022\nsanitize = yes\n", base).unwrap();
    assert_eq!(ok.menustat.as_deref(), Some(Path::new("/data/m.csv")));
    assert_eq!(ok.menustat_year, Some(2022));
    assert!(ok.sanitize && !ok.lenient);

    let e = SourceConfig::from_file(Path::new("/nonexistent/sources.conf")).unwrap_err();
    assert_eq!(e.stage, Stage::Config);
    assert!(matches!(e.kind, BuildErrorKind::Io { .. }));
}
