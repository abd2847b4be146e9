//! Crawls the saved restaurant pages: index, then menus, then food pages.
//!
//! cargo run --example scrape_menus [-- workers delay_ms]

use std::path::PathBuf;
use std::time::Duration;

use fooddb::scrape::{crawl, CrawlOptions, FileFetcher, Timing};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let workers = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let delay_ms = args.next().map(|s| s.parse()).transpose()?.unwrap_or(250);

    let fetcher = FileFetcher::new(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/scrape"));
    let opts = CrawlOptions {
        workers,
        min_delay: Duration::from_millis(delay_ms),
        timing: Timing::Virtual,
    };
    let result = crawl(&fetcher, "index.html", &opts)?;
    for food in &result.foods {
        println!("{} / {}", food.restaurant, food.food_name);
        for (field, (amount, unit)) in &food.nutrients {
            println!("    {field:<14} {amount} {unit}");
        }
    }
    println!("{} pages, {:?} on the virtual clock", result.pages_fetched, result.elapsed);
    Ok(())
}
