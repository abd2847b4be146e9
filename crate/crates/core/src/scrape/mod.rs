//! Offline menu-site scraper over a documented HTML fixture dialect
//! (see `docs/scrape-fixtures.md`): restaurant index, per-restaurant menu,
//! and per-food nutrition pages.

mod crawl;
mod schedule;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use rust_decimal::Decimal;
use scraper::{ElementRef, Html, Selector};
use thiserror::Error;

use crate::model::UnitCode;
use crate::table::{parse_decimal, Cell, ColumnSpec, RawTable, SemanticType, TableSchema};

pub use self::crawl::{crawl, resolve_link, scraped_to_foods, CrawlOptions, CrawlResult, FileFetcher, Fetcher, Timing};
pub use self::schedule::{
    execute_plan, execute_plan_threaded, schedule_fetches, Clock, Dispatch, FetchTask, SystemClock, VirtualClock,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScrapeError {
    #[error("page structure not found: {0}")]
    StructureNotFound(&'static str),
    #[error("malformed amount for `{field}`: `{value}`")]
    MalformedAmount { field: String, value: String },
    #[error("`{0}` has an amount but no unit")]
    MissingUnit(String),
    #[error("cannot fetch `{url}`: {reason}")]
    Fetch { url: String, reason: String },
    #[error("`{url}`: {source}")]
    Page {
        url: String,
        #[source]
        source: Box<ScrapeError>,
    },
}

/// The nutrient fields a food page may carry, in page order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScrapeField {
    Fat,
    Cholesterol,
    Sodium,
    Carbohydrate,
    Protein,
    SaturatedFat,
    TransFat,
    Fiber,
    Sugar,
    Energy,
}

impl ScrapeField {
    pub const ALL: [ScrapeField; 10] = [
        ScrapeField::Fat,
        ScrapeField::Cholesterol,
        ScrapeField::Sodium,
        ScrapeField::Carbohydrate,
        ScrapeField::Protein,
        ScrapeField::SaturatedFat,
        ScrapeField::TransFat,
        ScrapeField::Fiber,
        ScrapeField::Sugar,
        ScrapeField::Energy,
    ];

    /// Also the nutrient dictionary key.
    pub fn as_str(self) -> &'static str {
        match self {
            ScrapeField::Fat => "fat",
            ScrapeField::Cholesterol => "cholesterol",
            ScrapeField::Sodium => "sodium",
            ScrapeField::Carbohydrate => "carbohydrate",
            ScrapeField::Protein => "protein",
            ScrapeField::SaturatedFat => "saturated_fat",
            ScrapeField::TransFat => "trans_fat",
            ScrapeField::Fiber => "fiber",
            ScrapeField::Sugar => "sugar",
            ScrapeField::Energy => "energy",
        }
    }

    /// Maps a page label such as `Total Fat` or `Calories` to its field.
    pub fn from_label(label: &str) -> Option<Self> {
        let norm: String = label
            .trim()
            .to_lowercase()
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { ' ' })
            .collect::<String>()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join("_");
        Some(match norm.as_str() {
            "fat" | "total_fat" => ScrapeField::Fat,
            "cholesterol" => ScrapeField::Cholesterol,
            "sodium" => ScrapeField::Sodium,
            "carbohydrate" | "carbohydrates" | "total_carbohydrate" | "total_carbohydrates" | "carbs" => {
                ScrapeField::Carbohydrate
            }
            "protein" => ScrapeField::Protein,
            "saturated_fat" => ScrapeField::SaturatedFat,
            "trans_fat" => ScrapeField::TransFat,
            "fiber" | "dietary_fiber" => ScrapeField::Fiber,
            "sugar" | "sugars" | "total_sugars" => ScrapeField::Sugar,
            "energy" | "calories" | "kcal" => ScrapeField::Energy,
            _ => return None,
        })
    }
}

impl fmt::Display for ScrapeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScrapeField {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_label(s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScrapedFood {
    pub restaurant: String,
    pub food_name: String,
    pub nutrients: BTreeMap<ScrapeField, (Decimal, UnitCode)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    pub name: String,
    pub link: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MenuLink {
    pub category: String,
    pub name: String,
    pub link: String,
}

fn sel(s: &str) -> Selector {
    Selector::parse(s).expect("static selector")
}

fn text_of(el: ElementRef<'_>) -> String {
    el.text().collect::<Vec<_>>().join(" ").split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Restaurant names and menu links in document order.
///
/// Logs a warning when the listing is not alphabetical.
pub fn parse_restaurant_index(html: &str) -> Result<Vec<IndexEntry>, ScrapeError> {
    let doc = Html::parse_document(html);
    let list = doc
        .select(&sel("ul#restaurant-list"))
        .next()
        .ok_or(ScrapeError::StructureNotFound("ul#restaurant-list"))?;
    let entries: Vec<IndexEntry> = list
        .select(&sel("li a.restaurant"))
        .filter_map(|a| {
            let link = a.value().attr("href")?.trim().to_string();
            Some(IndexEntry { name: text_of(a), link })
        })
        .collect();
    if !is_alphabetical(entries.iter().map(|e| e.name.as_str())) {
        warn!("restaurant index is not in alphabetical order");
    }
    Ok(entries)
}

/// Case-insensitive non-decreasing order check.
pub fn is_alphabetical<'a>(names: impl IntoIterator<Item = &'a str>) -> bool {
    let lower: Vec<String> = names.into_iter().map(str::to_lowercase).collect();
    lower.windows(2).all(|w| w[0] <= w[1])
}

/// `(category, food link)` pairs in document order.
pub fn parse_menu_page(html: &str) -> Result<Vec<MenuLink>, ScrapeError> {
    let doc = Html::parse_document(html);
    let menu = doc
        .select(&sel("div#menu"))
        .next()
        .ok_or(ScrapeError::StructureNotFound("div#menu"))?;
    let heading = sel("h2");
    let food = sel("a.food");
    let mut out = Vec::new();
    for section in menu.select(&sel("section.category")) {
        let category = section
            .value()
            .attr("data-category")
            .map(str::to_string)
            .or_else(|| section.select(&heading).next().map(text_of))
            .unwrap_or_default();
        for a in section.select(&food) {
            if let Some(href) = a.value().attr("href") {
                out.push(MenuLink {
                    category: category.clone(),
                    name: text_of(a),
                    link: href.trim().to_string(),
                });
            }
        }
    }
    Ok(out)
}

fn amount_missing(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("n/a") || t == "-" || t == "--"
}

/// Every listed nutrient; `N/A`, dashes and empty cells leave the field out.
pub fn parse_food_page(html: &str) -> Result<ScrapedFood, ScrapeError> {
    let doc = Html::parse_document(html);
    let root = doc
        .select(&sel("div#food"))
        .next()
        .ok_or(ScrapeError::StructureNotFound("div#food"))?;
    let food_name = root
        .select(&sel("h1.food-name"))
        .next()
        .map(text_of)
        .filter(|s| !s.is_empty())
        .ok_or(ScrapeError::StructureNotFound("h1.food-name"))?;
    let restaurant = root
        .select(&sel(".restaurant-name"))
        .next()
        .map(text_of)
        .filter(|s| !s.is_empty())
        .ok_or(ScrapeError::StructureNotFound(".restaurant-name"))?;
    let table = root
        .select(&sel("table.nutrition"))
        .next()
        .ok_or(ScrapeError::StructureNotFound("table.nutrition"))?;
    let (th, amount_sel, unit_sel) = (sel("th"), sel("td.amount"), sel("td.unit"));
    let mut nutrients = BTreeMap::new();
    for row in table.select(&sel("tr")) {
        let Some(label) = row.select(&th).next().map(text_of) else { continue };
        let Some(field) = ScrapeField::from_label(&label) else {
            debug!("ignoring nutrition row `{label}`");
            continue;
        };
        let amount = row.select(&amount_sel).next().map(text_of).unwrap_or_default();
        if amount_missing(&amount) {
            continue;
        }
        let value = parse_decimal(amount.trim())
            .filter(|d| *d >= Decimal::ZERO)
            .ok_or_else(|| ScrapeError::MalformedAmount {
                field: field.to_string(),
                value: amount.clone(),
            })?;
        let unit = row
            .select(&unit_sel)
            .next()
            .map(text_of)
            .filter(|u| !u.is_empty())
            .ok_or_else(|| ScrapeError::MissingUnit(field.to_string()))?;
        nutrients.insert(field, (value, UnitCode::new(unit)));
    }
    Ok(ScrapedFood {
        restaurant,
        food_name,
        nutrients,
    })
}

pub fn scraped_schema() -> TableSchema {
    let mut cols = vec![
        ColumnSpec::new("restaurant", SemanticType::Text),
        ColumnSpec::new("food_name", SemanticType::Text),
    ];
    for f in ScrapeField::ALL {
        cols.push(ColumnSpec::new(format!("{f}_amount"), SemanticType::Decimal));
        cols.push(ColumnSpec::new(format!("{f}_unit"), SemanticType::UnitCode));
    }
    TableSchema::new("scraped_foods", cols, true).expect("distinct field names")
}

/// One row per food with an amount/unit pair per field; absent fields are null.
pub fn scraped_foods_table(foods: &[ScrapedFood]) -> RawTable {
    let rows = foods
        .iter()
        .map(|f| {
            let mut row = vec![Cell::Text(f.restaurant.clone()), Cell::Text(f.food_name.clone())];
            for field in ScrapeField::ALL {
                match f.nutrients.get(&field) {
                    Some((a, u)) => row.extend([Cell::Dec(*a), Cell::Unit(u.as_str().to_string())]),
                    None => row.extend([Cell::Null, Cell::Null]),
                }
            }
            row
        })
        .collect();
    RawTable::new(scraped_schema(), rows, "").expect("fixed width")
}
