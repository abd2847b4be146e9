//! Seeded generator for miniature source trees: USDA-shaped CSVs, scrape
//! HTML pages, a dirty restaurant CSV, synthetic PNGs and a JSON manifest
//! holding the ground truth for every planted record.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Rgb};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Category, NutrientDictionary, NutrientId, ENERGY_KCAL};
use crate::scrape::ScrapeField;
use crate::table::format_decimal;

/// First generated fdc_id; above `i32::MAX` on purpose.
pub const FIRST_FDC_ID: i64 = 3_000_000_000;
pub const FIRST_SYNTHETIC_NUTRIENT: i64 = 9001;

// Canonical nutrients in the order they are handed out; energy always first.
const NUTRIENT_ORDER: &[i64] = &[
    1008, 1003, 1004, 1005, 1079, 2000, 1093, 1253, 1258, 1257, 1087, 1089, 1092, 1114, 1162, 1292, 1293,
];

const ADJECTIVES: &[&str] = &[
    "Roasted", "Crispy", "Low Sodium", "Organic", "Spicy", "Sweet", "Smoked", "Frozen", "Creamy", "Whole Grain",
];
const NOUNS: &[&str] = &[
    "Broth", "Almonds", "Cheddar Cheese", "Granola", "Tomato Soup", "Oat Bar", "Salsa", "Yogurt", "Rice", "Beef Jerky",
    "Peanut Butter", "Crackers",
];
const BRANDS: &[&str] = &[
    "CAMPBELL SOUP COMPANY",
    "Richardson Oilseed Products (US) Limited",
    "ACME FOODS, INC.",
    "General \"Good\" Mills",
    "Harvest Co.",
];
const RESTAURANTS: &[&str] = &[
    "Arby's", "Burger Barn", "Cafe Coco", "Dunkin' Donuts", "El Pollo", "Fry Shack", "Golden Wok", "Hot Dog Hut",
    "Island Grill", "Java Joint", "Kebab King", "Lucky Noodle", "Mama's Pizza", "Nacho Nook", "Olive Garden Bistro",
    "Papa John's", "Quick Bite", "Ranch House", "Sushi Star", "Taco Bell", "Udon Place", "Veggie Vault", "Wendy's",
    "Xpress Deli", "Yum Yard", "Zesty Zone",
];
const MENU_CATEGORIES: &[&str] = &["Sandwiches", "Sides", "Beverages", "Desserts", "Salads", "Breakfast"];
const MENU_ITEMS: &[&str] = &[
    "Classic Burger", "Curly Fries", "Iced Tea", "Chocolate Shake", "Garden Salad", "Egg Muffin", "Chicken Wrap",
    "Onion Rings", "Lemonade", "Apple Pie", "Caesar Salad", "Pancakes", "Fish Taco", "Hot Coffee, Caramel Mocha",
];

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("{0} must be at least 1")]
    InvalidCount(&'static str),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Image { path: PathBuf, source: image::ImageError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureOptions {
    pub seed: u64,
    pub foods: usize,
    pub nutrients: usize,
    pub restaurants: usize,
    /// Rows of the dirty restaurant CSV; zero skips it.
    pub menustat_rows: usize,
    pub images: usize,
}

impl FixtureOptions {
    pub fn new(seed: u64, foods: usize, nutrients: usize) -> Self {
        Self {
            seed,
            foods,
            nutrients,
            restaurants: 5,
            menustat_rows: 0,
            images: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestNutrient {
    pub id: i64,
    pub name: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFood {
    pub fdc_id: i64,
    pub description: String,
    pub category: String,
    pub brand_owner: Option<String>,
    pub serving_size: Option<String>,
    pub serving_size_unit: Option<String>,
    pub servings: String,
    pub gram_weight: String,
    /// `(nutrient_id, amount)` in file order.
    pub nutrients: Vec<(i64, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestScrapeItem {
    pub category: String,
    pub name: String,
    pub link: String,
    /// Field key to `(amount, unit)` for every field the page states.
    pub nutrients: BTreeMap<String, (String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRestaurant {
    pub name: String,
    pub link: String,
    pub items: Vec<ManifestScrapeItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestMenustat {
    pub path: String,
    pub rows: usize,
    pub kcal: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestImage {
    pub brand: String,
    pub food: String,
    pub source: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestExpected {
    pub food_count: usize,
    pub fact_count: usize,
    pub portion_count: usize,
    pub row_layout_records: usize,
    pub column_layout_records: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub seed: u64,
    pub nutrients: Vec<ManifestNutrient>,
    pub foods: Vec<ManifestFood>,
    pub expected: ManifestExpected,
    pub restaurants: Vec<ManifestRestaurant>,
    pub menustat: Option<ManifestMenustat>,
    pub images: Vec<ManifestImage>,
}

impl FixtureManifest {
    pub fn read(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(io::Error::other)
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), FixtureError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| FixtureError::File {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, bytes).map_err(|source| FixtureError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// USDA dump style: every present field enclosed in double quotes.
fn quoted_csv(header: &[&str], rows: &[Vec<Option<String>>]) -> String {
    let mut out = String::new();
    let line = |out: &mut String, fields: &mut dyn Iterator<Item = Option<&str>>| {
        let parts: Vec<String> = fields
            .map(|f| f.map_or(String::new(), |s| format!("\"{}\"", s.replace('"', "\"\""))))
            .collect();
        out.push_str(&parts.join(","));
        out.push('\n');
    };
    line(&mut out, &mut header.iter().map(|h| Some(*h)));
    for r in rows {
        line(&mut out, &mut r.iter().map(|f| f.as_deref()));
    }
    out
}

fn amount(rng: &mut ChaCha8Rng, max_hundredths: i64) -> String {
    format_decimal(Decimal::new(rng.gen_range(0..=max_hundredths), 2))
}

fn nutrient_defs(n: usize) -> Vec<ManifestNutrient> {
    let dict = NutrientDictionary::canonical();
    (0..n)
        .map(|i| match NUTRIENT_ORDER.get(i) {
            Some(&id) => {
                let d = dict.get(NutrientId(id)).expect("canonical id");
                ManifestNutrient {
                    id,
                    name: d.name.clone(),
                    unit: d.unit.to_string(),
                }
            }
            None => {
                let id = FIRST_SYNTHETIC_NUTRIENT + (i - NUTRIENT_ORDER.len()) as i64;
                ManifestNutrient {
                    id,
                    name: format!("Synthetic nutrient {id}"),
                    unit: "MG".to_string(),
                }
            }
        })
        .collect()
}

fn gen_usda(rng: &mut ChaCha8Rng, opts: &FixtureOptions, dir: &Path) -> Result<(Vec<ManifestNutrient>, Vec<ManifestFood>), FixtureError> {
    let nutrients = nutrient_defs(opts.nutrients);
    let mut ids = Vec::with_capacity(opts.foods);
    let mut next = FIRST_FDC_ID;
    for _ in 0..opts.foods {
        ids.push(next);
        next += rng.gen_range(1..=3);
    }

    let mut foods = Vec::with_capacity(opts.foods);
    for (i, &fdc_id) in ids.iter().enumerate() {
        let category = if i < Category::USDA.len() {
            Category::USDA[i]
        } else {
            Category::USDA[rng.gen_range(0..Category::USDA.len())]
        };
        let description = format!(
            "{} {}{}",
            ADJECTIVES.choose(rng).expect("nonempty"),
            NOUNS.choose(rng).expect("nonempty"),
            if rng.gen_bool(0.2) { ", UNSALTED" } else { "" }
        );
        let branded = category == Category::Branded;
        let facts = nutrients
            .iter()
            .map(|n| {
                let max = if n.id == ENERGY_KCAL.0 { 90_000 } else { 50_000 };
                (n.id, amount(rng, max))
            })
            .collect();
        foods.push(ManifestFood {
            fdc_id,
            description,
            category: category.as_str().to_string(),
            brand_owner: branded.then(|| BRANDS.choose(rng).expect("nonempty").to_string()),
            serving_size: branded.then(|| format_decimal(Decimal::from(rng.gen_range(5..=500)))),
            serving_size_unit: branded.then(|| ["g", "ml"].choose(rng).expect("nonempty").to_string()),
            servings: rng.gen_range(1..=4).to_string(),
            gram_weight: format_decimal(Decimal::new(rng.gen_range(100..=50_000), 2)),
            nutrients: facts,
        });
    }

    let s = |v: &str| Some(v.to_string());
    let nutrient_rows: Vec<_> = nutrients
        .iter()
        .enumerate()
        .map(|(rank, n)| vec![s(&n.id.to_string()), s(&n.name), s(&n.unit), s(&n.id.to_string()), s(&rank.to_string())])
        .collect();
    write(
        &dir.join("nutrient.csv"),
        quoted_csv(&["id", "name", "unit_name", "nutrient_nbr", "rank"], &nutrient_rows),
    )?;

    let food_rows: Vec<_> = foods
        .iter()
        .map(|f| {
            let data_type = f.category.parse::<Category>().expect("generated").table_name();
            vec![
                s(&f.fdc_id.to_string()),
                s(data_type),
                s(&f.description),
                s(&(1 + f.fdc_id % 25).to_string()),
                s("2022-04-28"),
            ]
        })
        .collect();
    write(
        &dir.join("food.csv"),
        quoted_csv(&["fdc_id", "data_type", "description", "food_category_id", "publication_date"], &food_rows),
    )?;

    let mut fact_rows = Vec::new();
    let mut fact_id = 1;
    for f in &foods {
        for (nid, amt) in &f.nutrients {
            fact_rows.push(vec![s(&fact_id.to_string()), s(&f.fdc_id.to_string()), s(&nid.to_string()), s(amt)]);
            fact_id += 1;
        }
    }
    write(
        &dir.join("food_nutrient.csv"),
        quoted_csv(&["id", "fdc_id", "nutrient_id", "amount"], &fact_rows),
    )?;

    let portion_rows: Vec<_> = foods
        .iter()
        .enumerate()
        .map(|(i, f)| {
            vec![
                s(&(i + 1).to_string()),
                s(&f.fdc_id.to_string()),
                s("1"),
                s(&f.servings),
                s("1 serving"),
                s(&f.gram_weight),
            ]
        })
        .collect();
    write(
        &dir.join("food_portion.csv"),
        quoted_csv(&["id", "fdc_id", "seq_num", "amount", "portion_description", "gram_weight"], &portion_rows),
    )?;

    for category in Category::USDA {
        let members = foods.iter().filter(|f| f.category == category.as_str());
        let (header, rows): (&[&str], Vec<_>) = match category {
            Category::Branded => (
                &["fdc_id", "brand_owner", "gtin_upc", "serving_size", "serving_size_unit"],
                members
                    .map(|f| {
                        vec![
                            s(&f.fdc_id.to_string()),
                            f.brand_owner.clone(),
                            s(&format!("{:012}", f.fdc_id % 1_000_000_000_000)),
                            f.serving_size.clone(),
                            f.serving_size_unit.clone(),
                        ]
                    })
                    .collect(),
            ),
            _ => (
                &["fdc_id", "NDB_number"],
                members
                    .map(|f| vec![s(&f.fdc_id.to_string()), s(&(f.fdc_id - FIRST_FDC_ID + 10_000).to_string())])
                    .collect(),
            ),
        };
        write(&dir.join(format!("{}.csv", category.table_name())), quoted_csv(header, &rows))?;
    }
    Ok((nutrients, foods))
}

const FIELD_UNITS: [(ScrapeField, &str, &str); 10] = [
    (ScrapeField::Fat, "Total Fat", "g"),
    (ScrapeField::Cholesterol, "Cholesterol", "mg"),
    (ScrapeField::Sodium, "Sodium", "mg"),
    (ScrapeField::Carbohydrate, "Carbohydrates", "g"),
    (ScrapeField::Protein, "Protein", "g"),
    (ScrapeField::SaturatedFat, "Saturated Fat", "g"),
    (ScrapeField::TransFat, "Trans Fat", "g"),
    (ScrapeField::Fiber, "Dietary Fiber", "g"),
    (ScrapeField::Sugar, "Sugars", "g"),
    (ScrapeField::Energy, "Calories", "kcal"),
];

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn slug(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_lowercase()
}

fn gen_scrape(rng: &mut ChaCha8Rng, count: usize, dir: &Path) -> Result<Vec<ManifestRestaurant>, FixtureError> {
    let mut names: Vec<String> = (0..count)
        .map(|i| match RESTAURANTS.get(i) {
            Some(n) => n.to_string(),
            None => format!("{} {}", RESTAURANTS[i % RESTAURANTS.len()], i / RESTAURANTS.len() + 1),
        })
        .collect();
    names.sort_by_key(|n| n.to_lowercase());

    let mut restaurants = Vec::with_capacity(count);
    let mut index = String::from("<!DOCTYPE html>\n<html><head><title>Restaurants A-Z</title></head><body>\n<ul id=\"restaurant-list\">\n");
    for (r, name) in names.iter().enumerate() {
        let folder = format!("{}{r}", slug(name));
        let link = format!("{folder}/menu.html");
        index.push_str(&format!("  <li><a class=\"restaurant\" href=\"{link}\">{}</a></li>\n", html_escape(name)));

        let mut cats: Vec<&str> = MENU_CATEGORIES.to_vec();
        cats.shuffle(rng);
        let mut items = Vec::new();
        let mut menu = format!(
            "<!DOCTYPE html>\n<html><body><h1>{}</h1>\n<div id=\"menu\">\n",
            html_escape(name)
        );
        for cat in &cats[..2] {
            menu.push_str(&format!("  <section class=\"category\" data-category=\"{}\">\n    <h2>{}</h2>\n", html_escape(cat), html_escape(cat)));
            let mut dishes: Vec<&str> = MENU_ITEMS.to_vec();
            dishes.shuffle(rng);
            for dish in &dishes[..3] {
                let n = items.len();
                let page = format!("{}{n}.html", slug(dish));
                menu.push_str(&format!("    <a class=\"food\" href=\"{page}\">{}</a>\n", html_escape(dish)));
                let all_fields = r == 0 && n == 0;
                let mut nutrients = BTreeMap::new();
                let mut rows = String::new();
                for (field, label, unit) in FIELD_UNITS {
                    let roll: f64 = rng.gen();
                    if all_fields || roll < 0.65 {
                        let a = amount(rng, 120_000);
                        rows.push_str(&format!(
                            "      <tr><th>{label}</th><td class=\"amount\">{a}</td><td class=\"unit\">{unit}</td></tr>\n"
                        ));
                        nutrients.insert(field.as_str().to_string(), (a, unit.to_string()));
                    } else if roll < 0.8 {
                        rows.push_str(&format!(
                            "      <tr><th>{label}</th><td class=\"amount\">N/A</td><td class=\"unit\">{unit}</td></tr>\n"
                        ));
                    }
                }
                let body = format!(
                    "<!DOCTYPE html>\n<html><body>\n<div id=\"food\">\n  <h1 class=\"food-name\">{}</h1>\n  <p class=\"restaurant-name\">{}</p>\n  <table class=\"nutrition\">\n    <tr><th>Nutrient</th><th>Amount</th><th>Unit</th></tr>\n{rows}  </table>\n</div>\n</body></html>\n",
                    html_escape(dish),
                    html_escape(name)
                );
                write(&dir.join(&folder).join(&page), body)?;
                items.push(ManifestScrapeItem {
                    category: cat.to_string(),
                    name: dish.to_string(),
                    link: format!("{folder}/{page}"),
                    nutrients,
                });
            }
            menu.push_str("  </section>\n");
        }
        menu.push_str("</div>\n</body></html>\n");
        write(&dir.join(&folder).join("menu.html"), menu)?;
        restaurants.push(ManifestRestaurant {
            name: name.clone(),
            link,
            items,
        });
    }
    index.push_str("</ul>\n</body></html>\n");
    write(&dir.join("index.html"), index)?;
    Ok(restaurants)
}

/// CRLF lines, Windows-1252 and Latin-1 bytes, some valid UTF-8, blank energy cells.
fn gen_menustat(rng: &mut ChaCha8Rng, rows: usize, path: &Path) -> Result<ManifestMenustat, FixtureError> {
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(
        b"restaurant_id,restaurant,food_category,item_name,item_description,serving_size,serving_size_unit,servings_per_serving_size,serving_size_text,grams_per_serving_size,kcal\r\n",
    );
    let mut kcals = Vec::with_capacity(rows);
    for i in 0..rows {
        let restaurant: &[u8] = match i % 5 {
            0 => b"Dunkin\x92 Donuts",
            1 => b"Taco Bell",
            2 => b"Caf\xe9 Rio",
            3 => "Crêpe Maison".as_bytes(),
            _ => b"Wendy's",
        };
        let item = MENU_ITEMS.choose(rng).expect("nonempty");
        let (size, unit) = if rng.gen_bool(0.5) {
            (rng.gen_range(5..=600).to_string(), "g")
        } else {
            (rng.gen_range(4..=32).to_string(), "oz")
        };
        let kcal = (i % 7 != 3).then(|| rng.gen_range(0..=1500).to_string());
        let mut line: Vec<u8> = Vec::new();
        line.extend_from_slice(format!("{},", i + 1).as_bytes());
        line.extend_from_slice(restaurant);
        line.extend_from_slice(b",Entrees,");
        line.extend_from_slice(format!("\"{item}\",").as_bytes());
        line.extend_from_slice(b"\"Served hot \x93fresh\x94\",");
        line.extend_from_slice(format!("{size},{unit},1,1 Serving,,").as_bytes());
        if let Some(k) = &kcal {
            line.extend_from_slice(k.as_bytes());
        }
        line.extend_from_slice(b"\r\n");
        out.extend_from_slice(&line);
        kcals.push(kcal);
    }
    write(path, out)?;
    Ok(ManifestMenustat {
        path: "menustat/menustat.csv".to_string(),
        rows,
        kcal: kcals,
    })
}

fn gen_images(rng: &mut ChaCha8Rng, count: usize, dir: &Path) -> Result<Vec<ManifestImage>, FixtureError> {
    let mut images = Vec::with_capacity(count);
    let mut list = String::from("brand,food,source\n");
    for i in 0..count {
        let brand = RESTAURANTS[i % RESTAURANTS.len()];
        let food = MENU_ITEMS[(i * 7) % MENU_ITEMS.len()];
        let (w, h) = (rng.gen_range(64..=1400u32), rng.gen_range(64..=1400u32));
        let source = format!("src/{i:04}.png");
        let color: Rgb<u8> = Rgb(rng.gen());
        let img: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::from_pixel(w, h, color);
        let path = dir.join(&source);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| FixtureError::File {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        img.save(&path).map_err(|source| FixtureError::Image { path: path.clone(), source })?;
        let q = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
        list.push_str(&format!("{},{},{}\n", q(brand), q(food), q(&source)));
        images.push(ManifestImage {
            brand: brand.to_string(),
            food: food.to_string(),
            source,
            width: w,
            height: h,
        });
    }
    write(&dir.join("images.csv"), list)?;
    Ok(images)
}

/// Writes the fixture tree under `out_dir` and returns its manifest.
///
/// Layout: `usda/` (the USDA file set plus `experimental_food.csv`),
/// `scrape/` (index, menus, food pages), optionally `menustat/menustat.csv`
/// and `images/`, a `sources.conf` naming the USDA source, and `manifest.json`.
pub fn gen_fixture(opts: &FixtureOptions, out_dir: &Path) -> Result<FixtureManifest, FixtureError> {
    if opts.foods == 0 {
        return Err(FixtureError::InvalidCount("foods"));
    }
    if opts.nutrients == 0 {
        return Err(FixtureError::InvalidCount("nutrients"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (nutrients, foods) = gen_usda(&mut rng, opts, &out_dir.join("usda"))?;
    let restaurants = gen_scrape(&mut rng, opts.restaurants, &out_dir.join("scrape"))?;
    let menustat = match opts.menustat_rows {
        0 => None,
        n => Some(gen_menustat(&mut rng, n, &out_dir.join("menustat/menustat.csv"))?),
    };
    let images = gen_images(&mut rng, opts.images, &out_dir.join("images"))?;
    write(&out_dir.join("sources.conf"), "# generated fixture sources\nusda = usda\n")?;

    let facts = foods.len() * nutrients.len();
    let manifest = FixtureManifest {
        seed: opts.seed,
        expected: ManifestExpected {
            food_count: foods.len(),
            fact_count: facts,
            portion_count: foods.len(),
            row_layout_records: facts,
            column_layout_records: foods.len(),
        },
        nutrients,
        foods,
        restaurants,
        menustat,
        images,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&out_dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}
