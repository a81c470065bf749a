//! Writes a small hand-made catalog, loads it back and generates a dataset
//! restricted to two categories from it.

use std::fs;

use flowbench::catalog::Catalog;
use flowbench::generator::{generate_dataset, GenerationConfig};
use flowbench::metrics::render_dataset_table;
use flowbench::program::{ComplexityLevel, StructureCategory};
use flowbench::render::{render, Dialect};

const CATALOG: &str = "\
# loops and branches over small constants
version: tiny-1
xp.03.ge | x_puse | x >= 3 | boundary
xp.03.lt | x_puse | x < 3 | boundary
yp.00.gt | y_puse | y > 0 | boundary,iteration
xd.01 | x_def | x = 1 |
xc.add2 | x_cuse | x = x + 2 | computation
xc.dbl | x_cuse | x = x * 2 | computation
yc.dec | y_cuse | y = y - 1 | computation
lb.2 | loop_bound | 2 | iteration
";

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("tiny.catalog");
    fs::write(&path, CATALOG)?;
    let catalog = Catalog::load(&path)?;
    println!(
        "loaded catalog {} with {} entries",
        catalog.version,
        catalog.entries.len()
    );

    let cfg = GenerationConfig {
        catalog,
        categories: vec![StructureCategory::Branch, StructureCategory::Loop],
        max_level: ComplexityLevel::High,
        ..GenerationConfig::default()
    };
    let dataset = generate_dataset(&cfg)?;
    print!("{}", render_dataset_table(&dataset.stats));
    for p in dataset.programs.iter().take(3) {
        println!("\n# {}\n{}", p.id, render(p, Dialect::PythonStyle));
    }
    Ok(())
}
