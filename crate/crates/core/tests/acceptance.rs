//! Acceptance criteria, one line of output per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flowbench::extract::{extract, parse_response};
use flowbench::generator::{generate_dataset, write_dataset, GenerationConfig};
use flowbench::metrics::{incomplete_rate, percent, ModelReport};
use flowbench::oracle::{
    boundary_report_for_inputs, execute, inputs, statement_coverage, ExecError, DEFAULT_FUEL,
};
use flowbench::pipeline::{self, PipelineConfig, RunDir};
use flowbench::program::{
    validate_program, BinOp, Expr, ProgramSpec, Stmt, StructureCategory, Var,
};
use flowbench::BigInt;

use common::*;

type Outcome = Result<String, String>;

/// Writes straight to stderr so the line shows even when output is captured.
fn report(line: String) {
    let _ = writeln!(std::io::stderr(), "{line}");
}
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn incomplete_rates() -> Outcome {
    let counts = [
        ("GPT-3-Turbo", 2941, 1978, 32.74),
        ("GPT-4o", 3030, 2845, 6.1),
        ("GPT-4o-mini", 3032, 2803, 7.5),
    ];
    let started = Instant::now();
    let rates: Vec<f64> = counts
        .iter()
        .map(|(_, tt, ct, _)| incomplete_rate(*tt, *ct).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let elapsed = started.elapsed();
    let mut shown = Vec::new();
    for ((model, tt, ct, target), rate) in counts.iter().zip(&rates) {
        let pp = rate * 100.0;
        ensure(
            (pp - target).abs() <= 0.1,
            format!("{model}: {pp:.4}% not within 0.1pp of {target}%"),
        )?;
        ensure(
            ModelReport::from_totals(model, *tt, *ct).it == tt - ct,
            format!("{model}: incomplete count"),
        )?;
        shown.push(format!("{model} {}", percent(*rate)));
    }
    ensure(
        elapsed < Duration::from_millis(1),
        format!("took {elapsed:?}"),
    )?;
    Ok(shown.join(", "))
}

fn sample_outputs() -> Outcome {
    let p = sample_program();
    let mut shown = Vec::new();
    for ((x, y), want) in [((6, 10), 29), ((4, 5), 4), ((5, 10), 8), ((6, 5), 21)] {
        let started = Instant::now();
        let r = execute(&p, &inputs(&[(Var::X, x), (Var::Y, y)]), DEFAULT_FUEL)
            .map_err(|e| e.to_string())?;
        let elapsed = started.elapsed();
        ensure(
            sample_native(x, y) == want,
            format!("hand trace of ({x},{y}) disagrees with {want}"),
        )?;
        ensure(
            r.output == BigInt::from(want),
            format!("({x},{y}) gave {}, want {want}", r.output),
        )?;
        ensure(
            elapsed < Duration::from_millis(1),
            format!("({x},{y}) took {elapsed:?}"),
        )?;
        shown.push(format!("({x},{y})->{want}"));
    }
    Ok(shown.join(" "))
}

fn sample_coverage() -> Outcome {
    let p = sample_program();
    let sets = |pairs: &[(i64, i64)]| -> Vec<_> {
        pairs
            .iter()
            .map(|&(x, y)| inputs(&[(Var::X, x), (Var::Y, y)]))
            .collect()
    };
    let mut shown = Vec::new();
    for (name, pairs, want) in [
        ("{(6,10)}", vec![(6, 10)], 1.0),
        ("{(4,5)}", vec![(4, 5)], 0.6),
        ("{(6,10),(4,5)}", vec![(6, 10), (4, 5)], 1.0),
    ] {
        let c = statement_coverage(&p, &sets(&pairs), DEFAULT_FUEL).map_err(|e| e.to_string())?;
        ensure(
            close(c, want),
            format!("suite {name}: coverage {c}, want {want}"),
        )?;
        shown.push(format!("{name}={}", percent(c)));
    }
    Ok(shown.join(" "))
}

fn deterministic_generation() -> Outcome {
    let started = Instant::now();
    let cfg = GenerationConfig::default();
    let a = generate_dataset(&cfg).map_err(|e| e.to_string())?;
    let b = generate_dataset(&cfg).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (pa, pb) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    write_dataset(&pa, &a.programs).map_err(|e| e.to_string())?;
    write_dataset(&pb, &b.programs).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure(
        fs::read(&pa).map_err(|e| e.to_string())? == fs::read(&pb).map_err(|e| e.to_string())?,
        "datasets differ",
    )?;
    for p in &a.programs {
        let v = validate_program(p);
        ensure(v.is_valid(), format!("{} is invalid: {v:?}", p.id))?;
    }
    for c in StructureCategory::ALL {
        ensure(
            a.programs.iter().any(|p| p.category == c),
            format!("no {} programs", c.display_name()),
        )?;
    }
    ensure(
        elapsed < Duration::from_secs(10),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "{} programs in 7 categories, identical bytes",
        a.programs.len()
    ))
}

fn termination() -> Outcome {
    let dataset = generate_dataset(&GenerationConfig::default()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut runs = 0;
    for p in &dataset.programs {
        for _ in 0..1000 {
            let input: BTreeMap<Var, BigInt> = p
                .params
                .iter()
                .map(|v| (*v, BigInt::from(rng.gen_range(-100i64..=100))))
                .collect();
            match execute(p, &input, DEFAULT_FUEL) {
                Err(e @ (ExecError::FuelExhausted(_) | ExecError::NoFuel)) => {
                    return Err(format!("{} on {input:?}: {e}", p.id));
                }
                _ => runs += 1,
            }
        }
    }
    Ok(format!(
        "{runs} runs over {} programs, no fuel exhaustion",
        dataset.programs.len()
    ))
}

fn counted_loop() -> Outcome {
    let p = ProgramSpec::new(
        "counted",
        StructureCategory::Loop,
        vec![Var::X],
        vec![
            Stmt::counted(
                3,
                vec![Stmt::assign(
                    Var::X,
                    Expr::bin(BinOp::Add, Expr::var(Var::X), Expr::lit(10)),
                )],
            ),
            Stmt::Return(Var::X),
        ],
        BTreeMap::new(),
    );
    let r = execute(&p, &inputs(&[(Var::X, 0)]), DEFAULT_FUEL).map_err(|e| e.to_string())?;
    ensure(r.output == BigInt::from(30), format!("gave {}", r.output))?;
    Ok("3 x (x = x + 10) from 0 gives 30".into())
}

fn as_golden(report: &ModelReport) -> GoldenMode {
    GoldenMode {
        tt: report.tt,
        ct: report.ct,
        it: report.it,
        incomplete_rate: report.incomplete_rate.unwrap_or(f64::NAN),
        categories: report
            .categories
            .iter()
            .map(|c| {
                let g = GoldenCategory {
                    tp: c.tp,
                    w: c.w,
                    untestable_rate: c.untestable_rate,
                    avg_error_rate: c.avg_error_rate,
                    tn: c.tn,
                    avg_testcases: c.avg_testcases,
                };
                (c.category.display_name().to_string(), g)
            })
            .collect(),
    }
}

fn replay_fixture_metrics() -> Outcome {
    let started = Instant::now();
    let fixture = replay_fixture();
    let brute = brute_force(&fixture);
    let golden_path = fixtures_dir().join("replay_golden.json");
    let golden: BTreeMap<String, GoldenMode> =
        serde_json::from_str(&fs::read_to_string(&golden_path).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    for (mode, g) in &golden {
        compare_golden(&brute[mode], g)
            .map_err(|e| format!("brute force drifted from golden: {e}"))?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = RunDir::new(dir.path());
    let mut cfg = PipelineConfig::default();
    write_dataset(&run.path(pipeline::DATASET), &fixture_programs(&fixture))
        .map_err(|e| e.to_string())?;
    pipeline::render_prompts(&cfg, &run).map_err(|e| e.to_string())?;
    let summary =
        pipeline::run(&cfg, &run, &fixture_replay(&fixture, &cfg)).map_err(|e| e.to_string())?;
    ensure(
        summary.failures.is_empty(),
        format!("replay failures: {:?}", summary.failures),
    )?;
    ensure(summary.records.len() == 6, "six responses")?;

    let mut reports = Vec::new();
    for mode in ["complete-only", "all-cases"] {
        cfg.evaluation.mode = mode.into();
        let s = pipeline::evaluate(&cfg, &run).map_err(|e| e.to_string())?;
        compare_golden(&as_golden(&s.report), &golden[mode]).map_err(|e| format!("{mode}: {e}"))?;
        reports.push(s.report);
    }
    for (a, b) in reports[0].categories.iter().zip(&reports[1].categories) {
        ensure(
            a.w == b.w,
            format!(
                "{}: untestable count depends on mode",
                a.category.display_name()
            ),
        )?;
        if let (Some(x), Some(y)) = (a.avg_error_rate, b.avg_error_rate) {
            ensure(
                y + 1e-12 >= x,
                format!(
                    "{}: all-cases {y} < complete-only {x}",
                    a.category.display_name()
                ),
            )?;
        }
    }
    let elapsed = started.elapsed();
    ensure(
        elapsed < Duration::from_secs(5),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "TT={} CT={} IT={} matches golden in both modes",
        reports[0].tt, reports[0].ct, reports[0].it
    ))
}

fn compare_golden(a: &GoldenMode, b: &GoldenMode) -> Result<(), String> {
    ensure((a.tt, a.ct, a.it) == (b.tt, b.ct, b.it), "totals")?;
    ensure(
        close(a.incomplete_rate, b.incomplete_rate),
        "incomplete rate",
    )?;
    ensure(a.categories.len() == b.categories.len(), "category count")?;
    for (name, x) in &a.categories {
        let y = b
            .categories
            .get(name)
            .ok_or_else(|| format!("missing {name}"))?;
        let same_avg = match (x.avg_error_rate, y.avg_error_rate) {
            (Some(p), Some(q)) => close(p, q),
            (None, None) => true,
            _ => false,
        };
        ensure(
            x.tp == y.tp
                && x.w == y.w
                && x.tn == y.tn
                && close(x.untestable_rate, y.untestable_rate)
                && close(x.avg_testcases, y.avg_testcases)
                && same_avg,
            format!("{name}: {x:?} vs {y:?}"),
        )?;
    }
    Ok(())
}

fn labeled_input_responses() -> Outcome {
    let p = sample_program();
    let columns = [
        (
            "GPT-3-Turbo",
            vec![(6, 10), (7, 10), (4, 10), (6, 8), (3, 11)],
        ),
        ("GPT-4o", vec![(6, 10), (5, 10), (6, 5), (5, 5)]),
        ("GPT-4o-mini", vec![(6, 5), (5, 10), (7, 10), (4, 5)]),
    ];
    let mut shown = Vec::new();
    for (model, tuples) in columns {
        let text: String = tuples
            .iter()
            .enumerate()
            .map(|(i, (x, y))| format!("Input {}: (x, y) = ({x}, {y})\n", i + 1))
            .collect();
        let raw = parse_response(&text);
        ensure(
            raw.len() == tuples.len(),
            format!("{model}: {} raw cases", raw.len()),
        )?;
        let cases = extract(&text, &p);
        ensure(
            cases.len() == tuples.len(),
            format!("{model}: {} cases", cases.len()),
        )?;
        for (c, (x, y)) in cases.iter().zip(&tuples) {
            ensure(
                c.malformed.is_none()
                    && !c.complete
                    && c.expected.is_none()
                    && c.inputs.get(&Var::X) == Some(&BigInt::from(*x))
                    && c.inputs.get(&Var::Y) == Some(&BigInt::from(*y)),
                format!("{model}: case {c:?}"),
            )?;
        }
        shown.push(format!("{model} {}", cases.len()));
    }
    Ok(format!("{} tuples, all incomplete", shown.join("/")))
}

fn boundary_detection() -> Outcome {
    let p = program(
        StructureCategory::Branch,
        &[("cond", "xp.05.gt"), ("then", "xc.add10")],
    );
    let report = |xs: &[i64]| {
        let sets: Vec<_> = xs
            .iter()
            .map(|&x| inputs(&[(Var::X, x), (Var::Y, 0)]))
            .collect();
        boundary_report_for_inputs(&p, &sets, DEFAULT_FUEL).map_err(|e| e.to_string())
    };
    let near = report(&[5, 6])?;
    let e = near.entry("x > 5").ok_or("no entry for x > 5")?;
    ensure(e.hit && e.both_outcomes(), format!("{{5,6}}: {e:?}"))?;
    let far = report(&[7, 8])?;
    let e = far.entry("x > 5").ok_or("no entry for x > 5")?;
    ensure(!e.hit && !e.both_outcomes(), format!("{{7,8}}: {e:?}"))?;
    Ok("{5,6} hits x > 5 with both outcomes; {7,8} does neither".into())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("incomplete rates from case totals", incomplete_rates),
        ("sample program outputs", sample_outputs),
        ("sample program statement coverage", sample_coverage),
        ("deterministic valid generation", deterministic_generation),
        ("generated programs terminate", termination),
        ("counted loop semantics", counted_loop),
        (
            "replay fixture metrics match brute force",
            replay_fixture_metrics,
        ),
        (
            "labeled inputs without outputs are incomplete",
            labeled_input_responses,
        ),
        ("boundary detection", boundary_detection),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => report(format!("criterion {}: PASS {name} ({detail})", i + 1)),
            Err(why) => {
                report(format!("criterion {}: FAIL {name} ({why})", i + 1));
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
