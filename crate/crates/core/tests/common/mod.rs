//! Shared fixtures: a six-program replay scenario with scripted responses and
//! an independent brute-force scorer for it.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use flowbench::catalog::default_catalog;
use flowbench::gateway::{prompt_hash, write_records, CompletionRecord, ReplayProvider};
use flowbench::generator::{instantiate, template, Binding};
use flowbench::pipeline::{build_prompts, PipelineConfig};
use flowbench::program::{ProgramSpec, StructureCategory};
use flowbench::render::{Dialect, PromptTemplate, DEFAULT_INSTRUCTION};

pub fn binding(pairs: &[(&str, &str)]) -> Binding {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn program(category: StructureCategory, pairs: &[(&str, &str)]) -> ProgramSpec {
    instantiate(&template(category), &binding(pairs), &default_catalog())
        .expect("fixture binding is valid")
}

/// `if x > 5: x = x + y + 10` then `if y == 10: x = x + y - 7`, returning x.
pub fn sample_program() -> ProgramSpec {
    program(
        StructureCategory::SequentialBranch,
        &[
            ("cond1", "xp.05.gt"),
            ("then1", "xc.xy.add10"),
            ("cond2", "yp.10.eq"),
            ("then2", "xc.xy.sub7"),
        ],
    )
}

pub fn sample_native(mut x: i64, y: i64) -> i64 {
    if x > 5 {
        x = x + y + 10;
    }
    if y == 10 {
        x = x + y - 7;
    }
    x
}

/// What a reader of a scripted response would write down for one case.
#[derive(Clone, Copy, Debug)]
pub enum Intended {
    Call {
        x: i64,
        y: i64,
        expected: Option<i64>,
    },
    /// Wrong number of arguments.
    BadArity { expected: Option<i64> },
}

pub struct FixtureProgram {
    pub program: ProgramSpec,
    pub native: fn(i64, i64) -> i64,
    pub response: &'static str,
    pub intended: Vec<Intended>,
}

fn call(x: i64, y: i64, expected: i64) -> Intended {
    Intended::Call {
        x,
        y,
        expected: Some(expected),
    }
}

fn partial(x: i64, y: i64) -> Intended {
    Intended::Call {
        x,
        y,
        expected: None,
    }
}

/// Sorted by program id, the order dataset files require.
pub fn replay_fixture() -> Vec<FixtureProgram> {
    use StructureCategory as C;
    let mut f = vec![
        FixtureProgram {
            program: program(C::Branch, &[("cond", "xp.05.gt"), ("then", "xc.add10")]),
            native: |x, _| if x > 5 { x + 10 } else { x },
            response: "```python\nassert compute(6, 0) == 16\nassert compute(5, 0) == 5\nassert compute(0, 3) == 1\n```\n",
            intended: vec![call(6, 0, 16), call(5, 0, 5), call(0, 3, 1)],
        },
        FixtureProgram {
            program: program(C::Loop, &[("bound", "lb.3"), ("body_x", "xc.add10"), ("body_y", "yc.add7")]),
            native: |x, _| x + 30,
            response: "Input 1: (x, y) = (0, 0)\nExpected output: 30\n\nInput 2: (x, y) = (1, 2)\nExpected output: 33\n\nInput 3: (x, y) = (5, 5)\n",
            intended: vec![call(0, 0, 30), call(1, 2, 33), partial(5, 5)],
        },
        FixtureProgram {
            program: program(
                C::Sequence,
                &[("y_first", "yd.07"), ("y_second", "yc.add7"), ("x_first", "xd.15"), ("x_second", "xc.add10")],
            ),
            native: |_, _| 25,
            response: "The function always returns 25 regardless of the values passed in.\n",
            intended: vec![],
        },
        FixtureProgram {
            program: sample_program(),
            native: sample_native,
            response: "Input 1: (x, y) = (6, 10)\nInput 2: (x, y) = (5, 10)\nInput 3: (x, y) = (6, 5)\nInput 4: (x, y) = (5, 5)\n",
            intended: vec![partial(6, 10), partial(5, 10), partial(6, 5), partial(5, 5)],
        },
        FixtureProgram {
            program: program(
                C::NestedLoop,
                &[("outer_bound", "lb.3"), ("inner_bound", "lb.3"), ("body_x", "xc.add10"), ("body_y", "yc.sub7")],
            ),
            native: |x, _| x + 90,
            response: "Calling compute(1, 1) returns 91, and compute(0, 0) returns 90. Also compute(2, 2) == 95.\n",
            intended: vec![call(1, 1, 91), call(0, 0, 90), call(2, 2, 95)],
        },
        FixtureProgram {
            program: program(
                C::SequentialLoop,
                &[
                    ("bound1", "lb.3"),
                    ("body1_x", "xc.xy.add10"),
                    ("body1_y", "yc.add7"),
                    ("bound2", "lb.3"),
                    ("body2", "xc.add10"),
                ],
            ),
            native: |mut x, mut y| {
                for _ in 0..3 {
                    x = x + y + 10;
                    y += 7;
                }
                for _ in 0..3 {
                    x += 10;
                }
                x
            },
            response: "assert compute(0, 0) == 81\nassert compute(1, 1) == 85\nassert compute(1) == 5\n",
            intended: vec![call(0, 0, 81), call(1, 1, 85), Intended::BadArity { expected: Some(5) }],
        },
    ];
    f.sort_by(|a, b| a.program.id.cmp(&b.program.id));
    f
}

pub fn fixture_programs(f: &[FixtureProgram]) -> Vec<ProgramSpec> {
    f.iter().map(|p| p.program.clone()).collect()
}

/// Replay store answering each fixture prompt with its scripted response.
pub fn fixture_records(f: &[FixtureProgram], cfg: &PipelineConfig) -> Vec<CompletionRecord> {
    let prompts = build_prompts(
        &fixture_programs(f),
        Dialect::PythonStyle,
        &PromptTemplate::default(),
        DEFAULT_INSTRUCTION,
    )
    .unwrap();
    f.iter()
        .zip(prompts)
        .map(|(p, prompt)| CompletionRecord {
            program_id: p.program.id.clone(),
            prompt_hash: prompt_hash(&prompt.prompt),
            model: cfg.model.name.clone(),
            response: p.response.to_string(),
            latency_ms: 0,
            attempts: 1,
            timestamp: String::new(),
            truncated: false,
        })
        .collect()
}

pub fn write_fixture_store(f: &[FixtureProgram], cfg: &PipelineConfig, path: &Path) {
    write_records(path, &fixture_records(f, cfg)).unwrap();
}

pub fn fixture_replay(f: &[FixtureProgram], cfg: &PipelineConfig) -> ReplayProvider {
    ReplayProvider::from_records(&fixture_records(f, cfg))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenCategory {
    pub tp: usize,
    pub w: usize,
    pub untestable_rate: f64,
    pub avg_error_rate: Option<f64>,
    pub tn: usize,
    pub avg_testcases: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenMode {
    pub tt: usize,
    pub ct: usize,
    pub it: usize,
    pub incomplete_rate: f64,
    pub categories: BTreeMap<String, GoldenCategory>,
}

/// Scores the intended cases by direct counting, per mode slug.
pub fn brute_force(f: &[FixtureProgram]) -> BTreeMap<String, GoldenMode> {
    let mut out = BTreeMap::new();
    for (slug, all_cases) in [("complete-only", false), ("all-cases", true)] {
        let mut cats: BTreeMap<String, Vec<(usize, usize, usize)>> = BTreeMap::new();
        for p in f {
            let mut total = 0;
            let mut complete = 0;
            let mut correct = 0;
            for case in &p.intended {
                total += 1;
                match *case {
                    Intended::Call {
                        x,
                        y,
                        expected: Some(e),
                    } => {
                        complete += 1;
                        if (p.native)(x, y) == e {
                            correct += 1;
                        }
                    }
                    Intended::BadArity { expected: Some(_) } => complete += 1,
                    _ => {}
                }
            }
            cats.entry(p.program.category.display_name().to_string())
                .or_default()
                .push((total, complete, correct));
        }
        let mut categories = BTreeMap::new();
        let (mut tt, mut ct) = (0, 0);
        for (name, progs) in cats {
            let tp = progs.len();
            let mut w = 0;
            let mut tn = 0;
            let mut rates = Vec::new();
            for (total, complete, correct) in progs {
                tn += total;
                tt += total;
                ct += complete;
                if complete == 0 {
                    w += 1;
                    continue;
                }
                let denominator = if all_cases { total } else { complete };
                rates.push(1.0 - correct as f64 / denominator as f64);
            }
            let avg_error_rate = if rates.is_empty() {
                None
            } else {
                Some(rates.iter().sum::<f64>() / rates.len() as f64)
            };
            categories.insert(
                name,
                GoldenCategory {
                    tp,
                    w,
                    untestable_rate: w as f64 / tp as f64,
                    avg_error_rate,
                    tn,
                    avg_testcases: tn as f64 / tp as f64,
                },
            );
        }
        out.insert(
            slug.to_string(),
            GoldenMode {
                tt,
                ct,
                it: tt - ct,
                incomplete_rate: (tt - ct) as f64 / tt as f64,
                categories,
            },
        );
    }
    out
}

pub fn fixtures_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}
