use std::collections::HashSet;
use std::fs;
use std::path::{Component, Path, PathBuf};
use std::time::Duration;

use log::warn;

use super::{
    execute_plan, execute_plan_threaded, parse_food_page, parse_menu_page, parse_restaurant_index,
    schedule_fetches, FetchTask, ScrapeError, ScrapedFood,
};
use crate::model::{
    reserve_id_range, Category, FoodId, FoodItem, ModelError, NutrientDictionary, NutrientValue, StoreParts,
};

/// Source of page bodies keyed by site-relative url.
pub trait Fetcher: Sync {
    fn fetch(&self, url: &str) -> Result<String, ScrapeError>;
}

/// Serves pages from a fixture directory.
#[derive(Debug, Clone)]
pub struct FileFetcher {
    root: PathBuf,
}

impl FileFetcher {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl Fetcher for FileFetcher {
    fn fetch(&self, url: &str) -> Result<String, ScrapeError> {
        let rel = Path::new(url);
        if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
            return Err(ScrapeError::Fetch {
                url: url.to_string(),
                reason: "url escapes the fixture root".to_string(),
            });
        }
        fs::read_to_string(self.root.join(rel)).map_err(|e| ScrapeError::Fetch {
            url: url.to_string(),
            reason: e.to_string(),
        })
    }
}

/// Resolves `link` against the page at `base` (`a/menu.html` + `x.html` = `a/x.html`).
pub fn resolve_link(base: &str, link: &str) -> String {
    let mut parts: Vec<&str> = if let Some(rooted) = link.strip_prefix('/') {
        return normalize(rooted.split('/').collect());
    } else {
        base.split('/').collect()
    };
    parts.pop();
    parts.extend(link.split('/'));
    normalize(parts)
}

fn normalize(parts: Vec<&str>) -> String {
    let mut out: Vec<&str> = Vec::new();
    for p in parts {
        match p {
            "" | "." => {}
            ".." => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out.join("/")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    /// Delays are honoured on virtual clocks; the run is single-threaded.
    Virtual,
    /// Delays are slept for real, one thread per worker.
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrawlOptions {
    pub workers: usize,
    pub min_delay: Duration,
    pub timing: Timing,
}

impl Default for CrawlOptions {
    fn default() -> Self {
        Self {
            workers: 4,
            min_delay: Duration::from_millis(500),
            timing: Timing::Virtual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrawlResult {
    /// In index order, then menu order.
    pub foods: Vec<ScrapedFood>,
    pub pages_fetched: usize,
    /// Latest dispatch offset over both fetch rounds.
    pub elapsed: Duration,
}

fn fetch_all(
    fetcher: &dyn Fetcher,
    urls: &[String],
    opts: &CrawlOptions,
) -> (Vec<Result<String, ScrapeError>>, Duration) {
    let plan = schedule_fetches(urls, opts.workers, opts.min_delay);
    let call = |t: &FetchTask| fetcher.fetch(&t.url);
    let dispatches = match opts.timing {
        Timing::Virtual => execute_plan(&plan, opts.min_delay, |_| Duration::ZERO, call),
        Timing::Real => execute_plan_threaded(&plan, opts.min_delay, &call),
    };
    let elapsed = dispatches.iter().map(|d| d.at).max().unwrap_or_default();
    let mut results: Vec<Option<Result<String, ScrapeError>>> = vec![None; urls.len()];
    for d in dispatches {
        results[d.index] = Some(d.result);
    }
    (results.into_iter().map(|r| r.expect("every task dispatched")).collect(), elapsed)
}

fn page_err(url: &str, e: ScrapeError) -> ScrapeError {
    match e {
        e @ ScrapeError::Fetch { .. } => e,
        other => ScrapeError::Page {
            url: url.to_string(),
            source: Box::new(other),
        },
    }
}

/// Index page, then every menu, then every food page; any failure aborts.
pub fn crawl(fetcher: &dyn Fetcher, index_url: &str, opts: &CrawlOptions) -> Result<CrawlResult, ScrapeError> {
    let index = fetcher.fetch(index_url)?;
    let restaurants = parse_restaurant_index(&index).map_err(|e| page_err(index_url, e))?;
    let menu_urls: Vec<String> = restaurants.iter().map(|r| resolve_link(index_url, &r.link)).collect();
    let (menus, t1) = fetch_all(fetcher, &menu_urls, opts);

    let mut food_urls = Vec::new();
    for (url, body) in menu_urls.iter().zip(menus) {
        let links = parse_menu_page(&body?).map_err(|e| page_err(url, e))?;
        food_urls.extend(links.iter().map(|l| resolve_link(url, &l.link)));
    }
    let (pages, t2) = fetch_all(fetcher, &food_urls, opts);
    let mut foods = Vec::with_capacity(pages.len());
    for (url, body) in food_urls.iter().zip(pages) {
        foods.push(parse_food_page(&body?).map_err(|e| page_err(url, e))?);
    }
    Ok(CrawlResult {
        foods,
        pages_fetched: 1 + menu_urls.len() + food_urls.len(),
        elapsed: t1 + t2,
    })
}

/// Restaurant foods with one fact per scraped field whose unit matches the
/// dictionary; mismatched units are logged and skipped.
pub fn scraped_to_foods(
    foods: &[ScrapedFood],
    id_base: i64,
    reserved: &HashSet<FoodId>,
    dictionary: &NutrientDictionary,
) -> Result<StoreParts, ModelError> {
    let ids = reserve_id_range(id_base, foods.len(), reserved)?;
    let mut parts = StoreParts::default();
    for (id, food) in ids.map(FoodId).zip(foods) {
        parts.foods.push(FoodItem::new(
            id,
            food.food_name.clone(),
            Category::Restaurant,
            None,
            Some(food.restaurant.clone()),
        )?);
        for (field, (amount, unit)) in &food.nutrients {
            let def = dictionary
                .find(field.as_str())
                .ok_or_else(|| ModelError::UnknownNutrient(field.to_string()))?;
            if !def.unit.same_unit(unit) {
                warn!("{}: {field} in {unit}, expected {}", food.food_name, def.unit);
                continue;
            }
            parts.facts.push(NutrientValue {
                food_id: id,
                nutrient_id: def.nutrient_id,
                amount: *amount,
                unit: def.unit.clone(),
            });
        }
    }
    Ok(parts)
}
