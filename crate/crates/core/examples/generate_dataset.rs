//! Generates the default benchmark dataset and prints its statistics.
//!
//! ```text
//! cargo run --example generate_dataset -- [OUT.jsonl] [LIMIT] [SEED]
//! ```

use std::env;
use std::path::PathBuf;

use flowbench::generator::{generate_dataset, write_dataset, GenerationConfig};
use flowbench::metrics::render_dataset_table;

fn main() -> anyhow::Result<()> {
    let mut args = env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "dataset.jsonl".into()));
    let mut cfg = GenerationConfig::default();
    if let Some(limit) = args.next() {
        cfg.limit = limit.parse()?;
    }
    if let Some(seed) = args.next() {
        cfg.seed = seed.parse()?;
    }

    let dataset = generate_dataset(&cfg)?;
    write_dataset(&out, &dataset.programs)?;
    println!(
        "{} programs written to {}",
        dataset.programs.len(),
        out.display()
    );
    println!("fingerprint {}", dataset.fingerprint);
    print!("{}", render_dataset_table(&dataset.stats));
    Ok(())
}
