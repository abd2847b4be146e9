//! Cleans a restaurant CSV with stray bytes and CRLF endings, then loads it.
//!
//! cargo run --example sanitize_menustat [-- path/to/menustat.csv]

use std::path::PathBuf;

use fooddb::menustat::parse_menustat_with;
use fooddb::sanitize::sanitize_bytes;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (clean, report) = sanitize_bytes(b"Dunkin\x92 Donuts,\x93Hot Coffee\x94,340\r\n");
    println!("{clean:?}");
    println!("{}", serde_json::to_string(&report)?);

    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/menustat_sample/menustat.csv"));
    let out = parse_menustat_with(&path, Some(2022))?;
    println!("{} items, report {}", out.items.len(), serde_json::to_string(&out.report)?);
    for item in out.items.iter().take(5) {
        let kcal = item.kcal.map(|k| k.to_string()).unwrap_or_else(|| "-".into());
        println!("  {} / {} / {} kcal", item.restaurant, item.item_name, kcal);
    }
    Ok(())
}
