//! Independent oracles shared by the integration tests. None of these call
//! into the code path they check.

#![allow(dead_code)]

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use fooddb::fixture::{gen_fixture, FixtureManifest, FixtureOptions};
use fooddb::table::{Cell, RawTable};
use sha2::{Digest, Sha256};
use tempfile::TempDir;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub struct Generated {
    pub dir: TempDir,
    pub manifest: FixtureManifest,
}

impl Generated {
    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn usda(&self) -> PathBuf {
        self.dir.path().join("usda")
    }
}

pub fn generate(opts: &FixtureOptions) -> Generated {
    let dir = tempfile::tempdir().expect("tempdir");
    let manifest = gen_fixture(opts, dir.path()).expect("fixture generation");
    Generated { dir, manifest }
}

/// Newline count of a file minus its header line.
pub fn count_data_lines(path: &Path) -> usize {
    let bytes = fs::read(path).expect("read file");
    let mut lines = bytes.iter().filter(|&&b| b == b'\n').count();
    if bytes.last().is_some_and(|&b| b != b'\n') {
        lines += 1;
    }
    lines.saturating_sub(1)
}

/// What `cat -v` prints for a byte, from the published table:
/// controls as `^@`..`^_`, DEL as `^?`, high bytes as `M-` plus the low rendering.
pub fn cat_v(b: u8) -> String {
    const LOW: [&str; 32] = [
        "^@", "^A", "^B", "^C", "^D", "^E", "^F", "^G", "^H", "^I", "^J", "^K", "^L", "^M", "^N", "^O", "^P", "^Q",
        "^R", "^S", "^T", "^U", "^V", "^W", "^X", "^Y", "^Z", "^[", "^\\", "^]", "^^", "^_",
    ];
    let low = |c: u8| -> String {
        match c {
            0..=31 => LOW[c as usize].to_string(),
            127 => "^?".to_string(),
            _ => (c as char).to_string(),
        }
    };
    if b >= 128 {
        format!("M-{}", low(b - 128))
    } else {
        low(b)
    }
}

/// Expected `(rendered, replaced)` for one byte standing alone between ASCII letters.
/// Tab and newline pass through; other controls and every lone high byte are escaped.
pub fn classify_lone_byte(b: u8) -> (String, u64) {
    match b {
        b'\t' | b'\n' => ((b as char).to_string(), 0),
        0..=31 | 127 => (cat_v(b), 1),
        32..=126 => ((b as char).to_string(), 0),
        _ => (cat_v(b), 1),
    }
}

/// `round(side * max / longest)` in exact rational arithmetic, half rounding up, at least 1.
pub fn rational_resize(w: u32, h: u32, max_dim: u32) -> (u32, u32) {
    let longest = w.max(h);
    if longest <= max_dim {
        return (w, h);
    }
    let round = |side: u32| -> u32 {
        let num = u128::from(side) * u128::from(max_dim);
        let den = u128::from(longest);
        let q = num / den;
        let r = num % den;
        let v = if 2 * r >= den { q + 1 } else { q };
        (v as u32).max(1)
    };
    if w >= h {
        (max_dim, round(h))
    } else {
        (round(w), max_dim)
    }
}

/// sha256 over every file under `root` (relative path and contents), sorted by path.
pub fn dir_hash(root: &Path) -> String {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) {
        for entry in fs::read_dir(dir).expect("read dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(&path, out);
            } else {
                out.push(path);
            }
        }
    }
    let mut files = Vec::new();
    walk(root, &mut files);
    files.sort();
    let mut hasher = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(root).expect("under root");
        hasher.update(rel.to_string_lossy().as_bytes());
        hasher.update([0]);
        let bytes = fs::read(&f).expect("read file");
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn row_multiset(rows: &[Vec<Cell>]) -> HashMap<Vec<Cell>, usize> {
    let mut m = HashMap::new();
    for r in rows {
        *m.entry(r.clone()).or_insert(0) += 1;
    }
    m
}

fn col(t: &RawTable, name: &str) -> usize {
    t.column_index(name).unwrap_or_else(|| panic!("{} has no {name}", t.name()))
}

fn key(c: &Cell) -> Option<i64> {
    match c {
        Cell::Id(v) | Cell::Int(v) => Some(*v),
        _ => None,
    }
}

fn as_dec(c: &Cell) -> Cell {
    match c {
        Cell::Dec(d) => Cell::Dec(*d),
        Cell::Int(i) | Cell::Id(i) => Cell::Dec((*i).into()),
        Cell::Null => Cell::Null,
        other => panic!("non-numeric amount {other:?}"),
    }
}

/// Brute-force inner join: every category row against every food, nutrient and
/// portion row, keeping `nutrient_id == target` and equal `fdc_id`s.
pub fn nested_loop_join(
    category: &RawTable,
    carry: &[&str],
    food: &RawTable,
    nutrients: &RawTable,
    portions: &RawTable,
    target: i64,
) -> Vec<Vec<Cell>> {
    let c_id = col(category, "fdc_id");
    let carry: Vec<usize> = carry.iter().map(|n| col(category, n)).collect();
    let (f_id, f_desc) = (col(food, "fdc_id"), col(food, "description"));
    let (n_fdc, n_nid, n_amt) = (col(nutrients, "fdc_id"), col(nutrients, "nutrient_id"), col(nutrients, "amount"));
    let (p_fdc, p_amt, p_g) = (col(portions, "fdc_id"), col(portions, "amount"), col(portions, "gram_weight"));
    let mut out = Vec::new();
    for c in category.rows() {
        let Some(id) = key(&c[c_id]) else { continue };
        for f in food.rows() {
            if key(&f[f_id]) != Some(id) {
                continue;
            }
            for n in nutrients.rows() {
                if key(&n[n_fdc]) != Some(id) || key(&n[n_nid]) != Some(target) {
                    continue;
                }
                for p in portions.rows() {
                    if key(&p[p_fdc]) != Some(id) {
                        continue;
                    }
                    let mut row = vec![Cell::Id(id), f[f_desc].clone()];
                    row.extend(carry.iter().map(|&i| c[i].clone()));
                    row.push(as_dec(&n[n_amt]));
                    row.push(as_dec(&p[p_amt]));
                    row.push(as_dec(&p[p_g]));
                    out.push(row);
                }
            }
        }
    }
    out
}

/// A random store over the canonical dictionary. With `full`, every food
/// carries exactly those nutrients, a brand owner and a portion; otherwise
/// nutrients, attribution and portions are sparse and random.
pub fn random_store(seed: u64, full: Option<&[fooddb::model::NutrientId]>) -> fooddb::model::FoodStore {
    use fooddb::model::{Category, FoodId, FoodItem, FoodStore, NutrientDictionary, NutrientValue, Portion, StoreParts, UnitCode};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rust_decimal::Decimal;

    const WORDS: [&str; 8] = ["BROTH", "Beef", "oil, canola", "\"Kettle\" soup", "Crêpe", "mild", "1 GAL", "w/ Steak"];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dict = NutrientDictionary::canonical();
    let defs: Vec<_> = dict.iter().cloned().collect();
    let n = if full.is_some() { rng.gen_range(1..40) } else { rng.gen_range(0..40) };
    let mut parts = StoreParts::default();
    let mut id = rng.gen_range(1..3_000_000_000i64);
    for _ in 0..n {
        id += rng.gen_range(1..1000);
        let fid = FoodId(id);
        let words = rng.gen_range(1..4);
        let description = (0..words).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ");
        let (category, brand, restaurant) = match (full.is_some(), rng.gen_range(0..5)) {
            (true, _) | (false, 0) => (Category::Branded, Some(format!("Brand {}", rng.gen_range(0..9))), None),
            (false, 1) => (Category::Restaurant, None, Some("Taco Bell".to_string())),
            (false, 2) => (Category::Foundation, None, None),
            (false, 3) => (Category::SrLegacy, None, None),
            _ => (Category::Experimental, None, None),
        };
        parts.foods.push(FoodItem::new(fid, description, category, brand, restaurant).unwrap());
        let chosen: Vec<_> = match full {
            Some(ids) => ids.iter().map(|i| dict.get(*i).unwrap().clone()).collect(),
            None => defs.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect(),
        };
        for d in chosen {
            parts.facts.push(NutrientValue {
                food_id: fid,
                nutrient_id: d.nutrient_id,
                amount: Decimal::new(rng.gen_range(0..10_000_000), rng.gen_range(0..4)),
                unit: UnitCode::new(d.unit.as_str()),
            });
        }
        if full.is_some() || rng.gen_bool(0.7) {
            parts.portions.push(
                Portion::new(
                    fid,
                    Some(Decimal::from(rng.gen_range(1..5))),
                    Some(Decimal::from(rng.gen_range(5..500))),
                    Some(UnitCode::new(*["g", "ml", "oz"].choose(&mut rng).unwrap())),
                    rng.gen_bool(0.5).then(|| Decimal::new(rng.gen_range(100..50_000), 2)),
                )
                .unwrap(),
            );
        }
    }
    FoodStore::new(dict, parts).unwrap()
}
