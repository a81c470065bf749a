//! End-to-end runs over a directory of line-oriented artifacts.
//!
//! ```text
//! run/
//!   manifest.json     stage log with file digests
//!   dataset.jsonl     generate
//!   stats.json        generate
//!   prompts.jsonl     render
//!   responses.jsonl   run
//!   testcases.jsonl   evaluate
//!   results.jsonl     evaluate (one verdict per case)
//!   programs.jsonl    evaluate (one record per program)
//!   report.json       evaluate
//!   report.md, metrics.csv, untestable.csv, incomplete.csv, dataset.csv
//! ```
//!
//! Each stage reads only upstream files, so deleting a downstream file and
//! rerunning its stage reproduces it.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{default_catalog, Catalog, CatalogError};
use crate::extract::{extract, ExtractedCase};
use crate::gateway::{
    prompt_hash, read_records, record_session, CompletionProvider, CompletionRecord, GatewayError,
    ModelConfig, PromptJob, SessionSummary,
};
use crate::generator::{
    dataset_stats, generate_dataset, read_dataset, write_dataset, DatasetStats, GenerationConfig,
    GenerationError,
};
use crate::metrics::{evaluate_run, render_report, MetricsError, Mode, ModelReport, Report};
use crate::oracle::DEFAULT_FUEL;
use crate::program::{ComplexityLevel, ProgramSpec, StructureCategory};
use crate::render::{Dialect, PromptBundle, PromptError, PromptTemplate, DEFAULT_INSTRUCTION};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const MANIFEST: &str = "manifest.json";
pub const DATASET: &str = "dataset.jsonl";
pub const STATS: &str = "stats.json";
pub const PROMPTS: &str = "prompts.jsonl";
pub const RESPONSES: &str = "responses.jsonl";
pub const TESTCASES: &str = "testcases.jsonl";
pub const RESULTS: &str = "results.jsonl";
pub const PROGRAMS: &str = "programs.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("catalog {}: {source}", path.display())]
    Catalog { path: PathBuf, source: CatalogError },
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{} is missing; run `{stage}` first", path.display())]
    MissingInput { path: PathBuf, stage: Stage },
    #[error("inconsistent run directory: {0}")]
    Inconsistent(String),
    #[error("{count} request(s) failed; first: {first}")]
    RunFailures { count: usize, first: String },
}

impl PipelineError {
    /// Process exit code: 1 usage, 2 pipeline, 3 provider.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Gateway(
                GatewayError::Persistence { .. }
                | GatewayError::Corrupt { .. }
                | GatewayError::InvalidConfig(_),
            ) => 2,
            PipelineError::Gateway(_) | PipelineError::RunFailures { .. } => 3,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Generate,
    Render,
    Run,
    Evaluate,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Render => "render",
            Stage::Run => "run",
            Stage::Evaluate => "evaluate",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSection {
    /// Catalog file; the built-in catalog when absent.
    pub catalog: Option<PathBuf>,
    pub categories: Option<Vec<String>>,
    pub max_level: Option<String>,
    pub limit_per_category: Option<usize>,
    pub limit_overrides: BTreeMap<String, usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSection {
    pub dialect: String,
    pub instruction: String,
    /// Template file holding `{program}` and the prompt marker once each.
    pub template: Option<PathBuf>,
}

impl Default for PromptSection {
    fn default() -> Self {
        PromptSection {
            dialect: Dialect::PythonStyle.slug().to_string(),
            instruction: DEFAULT_INSTRUCTION.to_string(),
            template: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub mode: String,
    pub fuel: u64,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            mode: Mode::CompleteOnly.slug().to_string(),
            fuel: DEFAULT_FUEL,
        }
    }
}

/// The TOML config document.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub generation: GenerationSection,
    pub model: ModelConfig,
    pub prompt: PromptSection,
    pub evaluation: EvaluationSection,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<PipelineConfig, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Relative paths inside the file resolve against its directory.
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = PipelineConfig::parse(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.generation.catalog, &mut cfg.prompt.template]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn generation_config(&self) -> Result<GenerationConfig, PipelineError> {
        let g = &self.generation;
        let mut cfg = GenerationConfig::default();
        if let Some(path) = &g.catalog {
            cfg.catalog = Catalog::load(path).map_err(|source| PipelineError::Catalog {
                path: path.clone(),
                source,
            })?;
        } else {
            cfg.catalog = default_catalog();
        }
        if let Some(cats) = &g.categories {
            cfg.categories = cats
                .iter()
                .map(|c| parse_category(c))
                .collect::<Result<_, _>>()?;
        }
        if let Some(level) = &g.max_level {
            cfg.max_level = ComplexityLevel::parse(level).ok_or_else(|| {
                PipelineError::Config(format!("unknown complexity level `{level}`"))
            })?;
        }
        if let Some(limit) = g.limit_per_category {
            cfg.limit = limit;
        }
        for (c, n) in &g.limit_overrides {
            cfg.limit_overrides.insert(parse_category(c)?, *n);
        }
        if let Some(seed) = g.seed {
            cfg.seed = seed;
        }
        cfg.validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn dialect(&self) -> Result<Dialect, PipelineError> {
        Dialect::parse(&self.prompt.dialect).ok_or_else(|| {
            PipelineError::Config(format!("unknown dialect `{}`", self.prompt.dialect))
        })
    }

    pub fn prompt_template(&self) -> Result<PromptTemplate, PipelineError> {
        match &self.prompt.template {
            None => Ok(PromptTemplate::default()),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(io_err(path))?;
                PromptTemplate::new(text)
                    .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
            }
        }
    }

    pub fn mode(&self) -> Result<Mode, PipelineError> {
        Mode::parse(&self.evaluation.mode).ok_or_else(|| {
            PipelineError::Config(format!(
                "unknown evaluation mode `{}`",
                self.evaluation.mode
            ))
        })
    }

    pub fn fingerprint(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

pub fn parse_category(s: &str) -> Result<StructureCategory, PipelineError> {
    StructureCategory::parse(s)
        .ok_or_else(|| PipelineError::Config(format!("unknown category `{s}`")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub completed_at: String,
    /// File name to SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    pub config_fingerprint: String,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn stage(&self, s: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == s)
    }

    pub fn digest(&self, file: &str) -> Option<&str> {
        self.stages
            .iter()
            .rev()
            .find_map(|r| r.outputs.get(file))
            .map(String::as_str)
    }
}

pub fn file_digest(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Handle on a run directory.
#[derive(Clone, Debug)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> RunDir {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    pub fn manifest(&self) -> Result<RunManifest, PipelineError> {
        let path = self.path(MANIFEST);
        if !path.exists() {
            return Ok(RunManifest::default());
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Format {
            path,
            line: e.line(),
            message: e.to_string(),
        })
    }

    fn require(&self, file: &str, stage: Stage) -> Result<PathBuf, PipelineError> {
        let path = self.path(file);
        if path.exists() {
            Ok(path)
        } else {
            Err(PipelineError::MissingInput { path, stage })
        }
    }

    /// Fails when `file` no longer matches the digest recorded for it.
    fn check(&self, m: &RunManifest, file: &str, stage: Stage) -> Result<PathBuf, PipelineError> {
        let path = self.require(file, stage)?;
        if let Some(want) = m.digest(file) {
            if file_digest(&path)? != want {
                return Err(PipelineError::Inconsistent(format!(
                    "{file} changed since `{stage}` recorded it"
                )));
            }
        }
        Ok(path)
    }

    fn complete_stage(
        &self,
        stage: Stage,
        files: &[&str],
        cfg: &PipelineConfig,
    ) -> Result<(), PipelineError> {
        let mut m = self.manifest()?;
        if m.run_id.is_empty() {
            m.run_id = self
                .root
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
        }
        m.tool_version = TOOL_VERSION.to_string();
        m.config_fingerprint = cfg.fingerprint();
        let mut outputs = BTreeMap::new();
        for f in files {
            outputs.insert(f.to_string(), file_digest(&self.path(f))?);
        }
        // A rerun of an upstream stage invalidates everything after it.
        m.stages.retain(|r| r.stage < stage);
        m.stages.push(StageRecord {
            stage,
            completed_at: chrono::Utc::now().to_rfc3339(),
            outputs,
        });
        let path = self.path(MANIFEST);
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(io_err(&path))
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for i in items {
        out.push_str(&serde_json::to_string(i).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| PipelineError::Format {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Writes the dataset and its statistics.
pub fn generate(
    cfg: &PipelineConfig,
    dir: &RunDir,
) -> Result<crate::generator::Dataset, PipelineError> {
    let gen = cfg.generation_config()?;
    let dataset = generate_dataset(&gen)?;
    fs::create_dir_all(dir.root()).map_err(io_err(dir.root()))?;
    write_dataset(&dir.path(DATASET), &dataset.programs)?;
    let stats = serde_json::to_string_pretty(&dataset.stats).expect("stats serialize") + "\n";
    write_text(&dir.path(STATS), &stats)?;
    dir.complete_stage(Stage::Generate, &[DATASET, STATS], cfg)?;
    Ok(dataset)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub program_id: String,
    pub dialect: Dialect,
    pub prompt_hash: String,
    pub prompt: String,
}

pub fn build_prompts(
    programs: &[ProgramSpec],
    dialect: Dialect,
    template: &PromptTemplate,
    instruction: &str,
) -> Result<Vec<PromptRecord>, PipelineError> {
    programs
        .iter()
        .map(|p| {
            let b = PromptBundle::new(p, dialect, template, instruction)?;
            Ok(PromptRecord {
                program_id: b.program_id,
                dialect,
                prompt_hash: prompt_hash(&b.prompt),
                prompt: b.prompt,
            })
        })
        .collect()
}

fn load_dataset(dir: &RunDir, m: &RunManifest) -> Result<Vec<ProgramSpec>, PipelineError> {
    Ok(read_dataset(&dir.check(m, DATASET, Stage::Generate)?)?)
}

/// Renders one prompt per program.
pub fn render_prompts(
    cfg: &PipelineConfig,
    dir: &RunDir,
) -> Result<Vec<PromptRecord>, PipelineError> {
    let m = dir.manifest()?;
    let programs = load_dataset(dir, &m)?;
    let prompts = build_prompts(
        &programs,
        cfg.dialect()?,
        &cfg.prompt_template()?,
        &cfg.prompt.instruction,
    )?;
    write_text(&dir.path(PROMPTS), &to_jsonl(&prompts))?;
    dir.complete_stage(Stage::Render, &[PROMPTS], cfg)?;
    Ok(prompts)
}

/// Requests a completion for every prompt that has no response yet.
pub fn run(
    cfg: &PipelineConfig,
    dir: &RunDir,
    provider: &dyn CompletionProvider,
) -> Result<SessionSummary, PipelineError> {
    let m = dir.manifest()?;
    let prompts: Vec<PromptRecord> = read_jsonl(&dir.check(&m, PROMPTS, Stage::Render)?)?;
    let jobs: Vec<PromptJob> = prompts
        .into_iter()
        .map(|p| PromptJob {
            program_id: p.program_id,
            prompt: p.prompt,
        })
        .collect();
    let summary = record_session(&jobs, provider, &cfg.model, &dir.path(RESPONSES))?;
    dir.complete_stage(Stage::Run, &[RESPONSES], cfg)?;
    Ok(summary)
}

#[derive(Clone, Debug)]
pub struct EvaluateSummary {
    pub report: ModelReport,
    pub rendered: Report,
    pub cases: usize,
    /// Programs without a recorded response.
    pub missing_responses: Vec<String>,
}

/// Checks that every response answers the current prompt of a dataset program.
fn check_responses(
    prompts: &[PromptRecord],
    responses: &[CompletionRecord],
) -> Result<(), PipelineError> {
    let by_id: HashMap<&str, &str> = prompts
        .iter()
        .map(|p| (p.program_id.as_str(), p.prompt_hash.as_str()))
        .collect();
    for r in responses {
        match by_id.get(r.program_id.as_str()) {
            None => {
                return Err(PipelineError::Inconsistent(format!(
                    "response for unknown program `{}`",
                    r.program_id
                )))
            }
            Some(h) if *h != r.prompt_hash => {
                return Err(PipelineError::Inconsistent(format!(
                    "response for `{}` answers a different prompt",
                    r.program_id
                )))
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Extracts, judges and reports in one pass.
pub fn evaluate(cfg: &PipelineConfig, dir: &RunDir) -> Result<EvaluateSummary, PipelineError> {
    let mode = cfg.mode()?;
    let m = dir.manifest()?;
    let programs = load_dataset(dir, &m)?;
    let prompts: Vec<PromptRecord> = read_jsonl(&dir.check(&m, PROMPTS, Stage::Render)?)?;
    let responses = read_records(&dir.check(&m, RESPONSES, Stage::Run)?)?;
    if prompts.len() != programs.len()
        || prompts
            .iter()
            .zip(&programs)
            .any(|(a, b)| a.program_id != b.id)
    {
        return Err(PipelineError::Inconsistent(format!(
            "{PROMPTS} does not match {DATASET}"
        )));
    }
    check_responses(&prompts, &responses)?;
    let stats: DatasetStats = match fs::read_to_string(dir.path(STATS)) {
        Ok(text) => serde_json::from_str(&text).map_err(|e| PipelineError::Format {
            path: dir.path(STATS),
            line: e.line(),
            message: e.to_string(),
        })?,
        Err(_) => dataset_stats(&programs)?,
    };

    let by_id: HashMap<&str, &ProgramSpec> = programs.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut responses = responses;
    responses.sort_by(|a, b| a.program_id.cmp(&b.program_id));
    let cases: Vec<ExtractedCase> = responses
        .iter()
        .flat_map(|r| extract(&r.response, by_id[r.program_id.as_str()]))
        .collect();
    let answered: std::collections::HashSet<&str> =
        responses.iter().map(|r| r.program_id.as_str()).collect();
    let missing_responses: Vec<String> = programs
        .iter()
        .filter(|p| !answered.contains(p.id.as_str()))
        .map(|p| p.id.clone())
        .collect();

    let model = responses
        .first()
        .map_or_else(|| cfg.model.name.clone(), |r| r.model.clone());
    let eval = evaluate_run(&model, &programs, &cases, mode, cfg.evaluation.fuel)?;
    let rendered = render_report(std::slice::from_ref(&eval.report), Some(&stats))?;

    write_text(&dir.path(TESTCASES), &to_jsonl(&cases))?;
    write_text(&dir.path(RESULTS), &to_jsonl(&eval.verdicts))?;
    write_text(&dir.path(PROGRAMS), &to_jsonl(&eval.records))?;
    let report_json = serde_json::to_string_pretty(&eval.report).expect("report serializes") + "\n";
    write_text(&dir.path(REPORT_JSON), &report_json)?;
    let written = write_report_files(dir.root(), &rendered)?;
    let mut files = vec![TESTCASES, RESULTS, PROGRAMS, REPORT_JSON];
    files.extend(written);
    dir.complete_stage(Stage::Evaluate, &files, cfg)?;
    Ok(EvaluateSummary {
        report: eval.report,
        rendered,
        cases: cases.len(),
        missing_responses,
    })
}

/// Writes `report.md` and the CSV tables; returns the file names.
pub fn write_report_files(out: &Path, r: &Report) -> Result<Vec<&'static str>, PipelineError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut files = vec![
        (REPORT_MD, &r.markdown),
        ("metrics.csv", &r.metrics_csv),
        ("untestable.csv", &r.untestable_csv),
        ("incomplete.csv", &r.incomplete_csv),
    ];
    if let Some(d) = &r.dataset_csv {
        files.push(("dataset.csv", d));
    }
    for (name, text) in &files {
        write_text(&out.join(name), text)?;
    }
    Ok(files.into_iter().map(|(n, _)| n).collect())
}

/// Combines evaluated runs into one report; models keep the order given.
/// Dataset statistics are included when every run used the same dataset.
pub fn combine_reports(runs: &[RunDir], out: &Path) -> Result<Report, PipelineError> {
    let mut reports = Vec::new();
    let mut datasets = Vec::new();
    for run in runs {
        let m = run.manifest()?;
        let path = run.check(&m, REPORT_JSON, Stage::Evaluate)?;
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let report: ModelReport =
            serde_json::from_str(&text).map_err(|e| PipelineError::Format {
                path: path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?;
        reports.push(report);
        datasets.push(file_digest(&run.path(DATASET)).ok());
    }
    let same = datasets
        .first()
        .is_some_and(|d| d.is_some() && datasets.iter().all(|x| x == d));
    let stats: Option<DatasetStats> = if same {
        let path = runs[0].path(STATS);
        fs::read_to_string(&path)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
    } else {
        None
    };
    let rendered = render_report(&reports, stats.as_ref())?;
    write_report_files(out, &rendered)?;
    Ok(rendered)
}
