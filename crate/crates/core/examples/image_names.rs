//! File names and resize targets for food images.
//!
//! cargo run --example image_names

use fooddb::images::{image_key, resize_plan, resolve_collisions, ImagePlanEntry, DEFAULT_MAX_DIM};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{}", image_key("Taco Bell", "Border Sauce, Mild")?);
    println!("{}", image_key("Dunkin' Donuts", "Hot Coffee")?);

    // "A B" + "C" and "A" + "BC" share a key; the second gets a suffix.
    let plan = resolve_collisions(vec![
        ImagePlanEntry::new("A B", "C", (1600, 1200), DEFAULT_MAX_DIM)?,
        ImagePlanEntry::new("A", "BC", (300, 900), DEFAULT_MAX_DIM)?,
    ]);
    for e in &plan {
        println!("{} {}x{} -> {}x{}", e.filename, e.source_w, e.source_h, e.target_w, e.target_h);
    }
    println!("{:?}", resize_plan(1237, 841, 512));
    Ok(())
}
