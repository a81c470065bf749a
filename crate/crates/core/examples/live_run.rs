//! Sends a few generated programs to a live chat-completions endpoint and
//! scores the replies. Needs `FLOWBENCH_API_KEY` (or `OPENAI_API_KEY`);
//! `FLOWBENCH_BASE_URL` points it at any compatible server.
//!
//! ```text
//! FLOWBENCH_API_KEY=... cargo run --example live_run -- [MODEL] [PROGRAMS_PER_CATEGORY]
//! ```

use std::env;

use flowbench::gateway::{HttpProvider, API_KEY_ENV};
use flowbench::pipeline::{self, PipelineConfig, RunDir};

fn main() -> anyhow::Result<()> {
    let mut args = env::args().skip(1);
    let mut cfg = PipelineConfig::default();
    if let Some(model) = args.next() {
        cfg.model.name = model;
    }
    cfg.generation.limit_per_category =
        Some(args.next().map(|n| n.parse()).transpose()?.unwrap_or(1));

    let provider = match HttpProvider::from_env(&cfg.model) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("skipping live run: {e}");
            eprintln!("export {API_KEY_ENV}=... to try it");
            return Ok(());
        }
    };
    let dir = tempfile::tempdir()?;
    let run = RunDir::new(dir.path());
    pipeline::generate(&cfg, &run)?;
    pipeline::render_prompts(&cfg, &run)?;
    let session = pipeline::run(&cfg, &run, &provider)?;
    for (id, e) in &session.failures {
        eprintln!("{id}: {e}");
    }
    let s = pipeline::evaluate(&cfg, &run)?;
    print!("{}", s.rendered.markdown);
    Ok(())
}
