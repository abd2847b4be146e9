//! Food image file naming and downscale planning.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use image::imageops::FilterType;
use thiserror::Error;

use crate::ingest::{load_reader, IngestError, LoadOptions};
use crate::table::{Cell, RawTable, SemanticType, TableSchema};

pub const DEFAULT_MAX_DIM: u32 = 512;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("`{brand}` / `{food}` has no alphanumeric characters")]
    EmptyKey { brand: String, food: String },
    #[error("image dimensions must be positive, got {0}x{1}")]
    ZeroDimension(u32, u32),
    #[error("{}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("image list has no `{0}` column")]
    MissingColumn(&'static str),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: io::Error },
}

/// `<brand><food>.png` keeping only alphanumeric characters, case preserved.
pub fn image_key(brand: &str, food: &str) -> Result<String, ImageError> {
    let stem: String = brand.chars().chain(food.chars()).filter(|c| c.is_alphanumeric()).collect();
    if stem.is_empty() {
        return Err(ImageError::EmptyKey {
            brand: brand.to_string(),
            food: food.to_string(),
        });
    }
    Ok(format!("{stem}.png"))
}

/// Largest side scaled down to `max_dim`, the other side rounded half-up and
/// at least one pixel. Images already within bounds are unchanged.
pub fn resize_plan(source_w: u32, source_h: u32, max_dim: u32) -> (u32, u32) {
    let longest = source_w.max(source_h);
    if longest <= max_dim || max_dim == 0 {
        return (source_w, source_h);
    }
    let scale = |side: u32| -> u32 {
        let num = 2 * u64::from(side) * u64::from(max_dim) + u64::from(longest);
        let v = num / (2 * u64::from(longest));
        u32::try_from(v).unwrap_or(u32::MAX).max(1)
    };
    if source_w >= source_h {
        (max_dim, scale(source_h))
    } else {
        (scale(source_w), max_dim)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePlanEntry {
    pub brand_or_restaurant: String,
    pub food_name: String,
    pub filename: String,
    pub source_w: u32,
    pub source_h: u32,
    pub target_w: u32,
    pub target_h: u32,
}

impl ImagePlanEntry {
    pub fn new(brand: &str, food: &str, source: (u32, u32), max_dim: u32) -> Result<Self, ImageError> {
        let (w, h) = source;
        if w == 0 || h == 0 {
            return Err(ImageError::ZeroDimension(w, h));
        }
        let (target_w, target_h) = resize_plan(w, h, max_dim);
        Ok(Self {
            brand_or_restaurant: brand.to_string(),
            food_name: food.to_string(),
            filename: image_key(brand, food)?,
            source_w: w,
            source_h: h,
            target_w,
            target_h,
        })
    }
}

/// Keeps the first holder of each name and suffixes later ones `-2`, `-3`, ...
///
/// Names are compared case-insensitively so the result is also safe on
/// case-folding filesystems.
pub fn resolve_collisions(mut entries: Vec<ImagePlanEntry>) -> Vec<ImagePlanEntry> {
    let mut taken: HashMap<String, u32> = HashMap::new();
    for e in &mut entries {
        let stem = e.filename.strip_suffix(".png").unwrap_or(&e.filename).to_string();
        let key = stem.to_lowercase();
        let n = taken.entry(key).or_insert(0);
        *n += 1;
        if *n > 1 {
            e.filename = format!("{stem}-{n}.png");
        }
    }
    entries
}

pub fn manifest_schema() -> TableSchema {
    TableSchema::of(
        "image_manifest",
        &[
            ("brand", SemanticType::Text),
            ("food", SemanticType::Text),
            ("filename", SemanticType::Text),
            ("source_w", SemanticType::Integer),
            ("source_h", SemanticType::Integer),
            ("target_w", SemanticType::Integer),
            ("target_h", SemanticType::Integer),
        ],
    )
    .expect("static schema")
}

pub fn manifest_table(entries: &[ImagePlanEntry]) -> RawTable {
    let rows = entries
        .iter()
        .map(|e| {
            vec![
                Cell::Text(e.brand_or_restaurant.clone()),
                Cell::Text(e.food_name.clone()),
                Cell::Text(e.filename.clone()),
                Cell::Int(e.source_w.into()),
                Cell::Int(e.source_h.into()),
                Cell::Int(e.target_w.into()),
                Cell::Int(e.target_h.into()),
            ]
        })
        .collect();
    RawTable::new(manifest_schema(), rows, "").expect("fixed width")
}

/// One row of an image list: who the food belongs to and where its picture is.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSource {
    pub brand: String,
    pub food: String,
    pub path: PathBuf,
}

/// Reads a `brand,food,source` CSV; relative sources resolve against its directory.
pub fn read_image_list(path: &Path) -> Result<Vec<ImageSource>, ImageError> {
    let schema = TableSchema::of(
        "images",
        &[
            ("brand", SemanticType::Text),
            ("food", SemanticType::Text),
            ("source", SemanticType::Text),
        ],
    )
    .expect("static schema");
    let file = fs::File::open(path).map_err(|source| ImageError::File {
        path: path.to_path_buf(),
        source,
    })?;
    let table = load_reader(io::BufReader::new(file), &schema, &LoadOptions::default(), &path.display().to_string())?
        .table;
    let base = path.parent().unwrap_or(Path::new(""));
    let text = |c: &Cell| c.as_str().unwrap_or_default().to_string();
    Ok(table
        .rows()
        .iter()
        .map(|r| ImageSource {
            brand: text(&r[0]),
            food: text(&r[1]),
            path: base.join(text(&r[2])),
        })
        .collect())
}

/// Reads each source's dimensions and plans names and sizes.
pub fn plan_images(sources: &[ImageSource], max_dim: u32) -> Result<Vec<ImagePlanEntry>, ImageError> {
    let entries = sources
        .iter()
        .map(|s| {
            let dims = image::image_dimensions(&s.path).map_err(|source| ImageError::Decode {
                path: s.path.clone(),
                source,
            })?;
            ImagePlanEntry::new(&s.brand, &s.food, dims, max_dim)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(resolve_collisions(entries))
}

/// Writes every planned image into `out_dir` under its final name, using up
/// to `workers` threads. `sources` and `plan` are parallel slices.
pub fn apply_plan(
    sources: &[ImageSource],
    plan: &[ImagePlanEntry],
    out_dir: &Path,
    workers: usize,
) -> Result<(), ImageError> {
    fs::create_dir_all(out_dir).map_err(|source| ImageError::File {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let next = AtomicUsize::new(0);
    let resize_one = |i: usize| -> Result<(), ImageError> {
        let (src, entry) = (&sources[i], &plan[i]);
        let decode = |source| ImageError::Decode {
            path: src.path.clone(),
            source,
        };
        let img = image::open(&src.path).map_err(decode)?;
        let img = if (entry.target_w, entry.target_h) == (entry.source_w, entry.source_h) {
            img
        } else {
            img.resize_exact(entry.target_w, entry.target_h, FilterType::Triangle)
        };
        let dest = out_dir.join(&entry.filename);
        img.save(&dest).map_err(|source| ImageError::Decode { path: dest, source })
    };
    let n = sources.len().min(plan.len());
    thread::scope(|s| {
        let handles: Vec<_> = (0..workers.clamp(1, n.max(1)))
            .map(|_| {
                s.spawn(|| {
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= n {
                            return Ok(());
                        }
                        resize_one(i)?;
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .try_for_each(|h| h.join().expect("resize worker panicked"))
    })
}
