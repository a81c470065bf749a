//! Command-line front end for the flowbench pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 pipeline error, 3 provider error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flowbench::gateway::{HttpProvider, ReplayProvider};
use flowbench::generator::{dataset_stats, read_dataset};
use flowbench::metrics::render_dataset_table;
use flowbench::pipeline::{self, PipelineConfig, PipelineError, RunDir, DATASET};
use flowbench::render::render;

#[derive(Parser)]
#[command(
    name = "flowbench",
    version,
    about = "Control-flow benchmark for LLM-generated unit tests"
)]
struct Cli {
    /// TOML config with [generation], [model], [prompt] and [evaluation] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArg {
    /// Run directory holding the pipeline artifacts.
    #[arg(long = "run", default_value = "run")]
    dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the dataset and its statistics.
    Generate {
        #[command(flatten)]
        run: RunArg,
        /// Comma-separated categories, e.g. `sequence,branch`.
        #[arg(long, value_delimiter = ',')]
        categories: Option<Vec<String>>,
        #[arg(long)]
        limit_per_category: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Highest catalog entry level to use (L, L-M, M, M-H, H).
        #[arg(long)]
        max_level: Option<String>,
    },
    /// Render one prompt per program, or print a single program.
    Render {
        #[command(flatten)]
        run: RunArg,
        #[arg(long)]
        dialect: Option<String>,
        /// Print this program's source instead of writing prompts.
        #[arg(long)]
        program: Option<String>,
    },
    /// Request completions for every prompt without a response.
    Run {
        #[command(flatten)]
        run: RunArg,
        /// Serve responses from a recorded store instead of the network.
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        concurrency: Option<usize>,
        #[arg(long)]
        temperature: Option<f64>,
    },
    /// Extract test cases, judge them and write the report.
    Evaluate {
        #[command(flatten)]
        run: RunArg,
        /// `complete-only` or `all-cases`.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Combine evaluated runs into one report.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Print dataset statistics.
    Stats {
        /// Dataset file; defaults to the run directory's dataset.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        run: RunArg,
    },
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, PipelineError> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Generate {
            run,
            categories,
            limit_per_category,
            seed,
            catalog,
            max_level,
        } => {
            let g = &mut cfg.generation;
            g.categories = categories.or(g.categories.take());
            g.limit_per_category = limit_per_category.or(g.limit_per_category);
            g.seed = seed.or(g.seed);
            g.catalog = catalog.or(g.catalog.take());
            g.max_level = max_level.or(g.max_level.take());
            let d = pipeline::generate(&cfg, &RunDir::new(&run.dir))?;
            eprintln!(
                "wrote {} programs to {}",
                d.programs.len(),
                run.dir.join(DATASET).display()
            );
            print!("{}", render_dataset_table(&d.stats));
        }
        Command::Render {
            run,
            dialect,
            program,
        } => {
            if let Some(d) = dialect {
                cfg.prompt.dialect = d;
            }
            let dir = RunDir::new(&run.dir);
            match program {
                Some(id) => {
                    let programs = read_dataset(&dir.path(DATASET))?;
                    let p = programs.iter().find(|p| p.id == id).ok_or_else(|| {
                        PipelineError::Config(format!("no program `{id}` in the dataset"))
                    })?;
                    print!("{}", render(p, cfg.dialect()?));
                }
                None => {
                    let prompts = pipeline::render_prompts(&cfg, &dir)?;
                    eprintln!("wrote {} prompts", prompts.len());
                }
            }
        }
        Command::Run {
            run,
            replay,
            model,
            concurrency,
            temperature,
        } => {
            if let Some(m) = model {
                cfg.model.name = m;
            }
            if let Some(k) = concurrency {
                cfg.model.concurrency = k;
            }
            if let Some(t) = temperature {
                cfg.model.temperature = t;
            }
            let dir = RunDir::new(&run.dir);
            let summary = match replay {
                Some(store) => pipeline::run(&cfg, &dir, &ReplayProvider::load(&store)?)?,
                None => pipeline::run(&cfg, &dir, &HttpProvider::from_env(&cfg.model)?)?,
            };
            eprintln!(
                "{} responses ({} new requests, {} already recorded, {} failed)",
                summary.records.len(),
                summary.requests,
                summary.skipped,
                summary.failures.len()
            );
            if let Some((_, first)) = summary.failures.first() {
                for (id, e) in &summary.failures {
                    eprintln!("  {id}: {e}");
                }
                return Err(PipelineError::RunFailures {
                    count: summary.failures.len(),
                    first: first.to_string(),
                });
            }
        }
        Command::Evaluate { run, mode } => {
            if let Some(m) = mode {
                cfg.evaluation.mode = m;
            }
            let s = pipeline::evaluate(&cfg, &RunDir::new(&run.dir))?;
            if !s.missing_responses.is_empty() {
                eprintln!(
                    "{} program(s) have no response and count as untestable",
                    s.missing_responses.len()
                );
            }
            print!("{}", s.rendered.markdown);
        }
        Command::Report { runs, out } => {
            let dirs: Vec<RunDir> = runs.into_iter().map(RunDir::new).collect();
            let r = pipeline::combine_reports(&dirs, &out)?;
            print!("{}", r.markdown);
        }
        Command::Stats { dataset, run } => {
            let path = dataset.unwrap_or_else(|| run.dir.join(DATASET));
            let programs = read_dataset(&path)?;
            print!("{}", render_dataset_table(&dataset_stats(&programs)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
