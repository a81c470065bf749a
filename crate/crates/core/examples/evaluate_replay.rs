//! Runs every pipeline stage offline: generate, render, answer the prompts
//! from a scripted replay store, evaluate in both modes and print the report.
//!
//! ```text
//! cargo run --example evaluate_replay -- [RUN_DIR]
//! ```

use std::env;
use std::path::PathBuf;

use flowbench::gateway::ReplayProvider;
use flowbench::pipeline::{self, PipelineConfig, RunDir};

/// A stand-in model that always proposes the same two cases.
const SCRIPTED: &str = "```python\nassert compute(0, 0) == 0\nassert compute(10, 10) == 33\n```\nInput: x = 3, y = 4\n";

fn main() -> anyhow::Result<()> {
    let root = env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| env::temp_dir().join("flowbench-replay-example"));
    let mut cfg = PipelineConfig::default();
    cfg.generation.limit_per_category = Some(5);
    cfg.model.name = "scripted".into();
    let run = RunDir::new(&root);

    let dataset = pipeline::generate(&cfg, &run)?;
    let prompts = pipeline::render_prompts(&cfg, &run)?;
    let mut replay = ReplayProvider::new();
    for p in &prompts {
        replay.insert(&p.prompt, SCRIPTED);
    }
    let session = pipeline::run(&cfg, &run, &replay)?;
    println!(
        "{} programs, {} prompts, {} responses in {}",
        dataset.programs.len(),
        prompts.len(),
        session.records.len(),
        root.display()
    );

    for mode in ["complete-only", "all-cases"] {
        cfg.evaluation.mode = mode.into();
        let s = pipeline::evaluate(&cfg, &run)?;
        println!("\n## mode: {mode} ({} cases)\n", s.cases);
        print!("{}", s.rendered.markdown);
    }
    Ok(())
}
