//! Runs the reference interpreter on a branch program and reports outputs,
//! statement coverage and boundary detection for a few input suites.

use flowbench::catalog::default_catalog;
use flowbench::generator::{instantiate, template, Binding};
use flowbench::oracle::{
    boundary_report_for_inputs, execute, inputs, statement_coverage, DEFAULT_FUEL,
};
use flowbench::program::{StructureCategory, Var};
use flowbench::render::{render, Dialect};

fn main() -> anyhow::Result<()> {
    let binding: Binding = [
        ("cond1", "xp.05.gt"),
        ("then1", "xc.xy.add10"),
        ("cond2", "yp.10.eq"),
        ("then2", "xc.xy.sub7"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    let p = instantiate(
        &template(StructureCategory::SequentialBranch),
        &binding,
        &default_catalog(),
    )?;
    print!("{}", render(&p, Dialect::PythonStyle));

    for (x, y) in [(6, 10), (4, 5), (5, 10), (6, 5)] {
        let r = execute(&p, &inputs(&[(Var::X, x), (Var::Y, y)]), DEFAULT_FUEL)?;
        println!(
            "compute({x}, {y}) = {}  trace {:?}  steps {}",
            r.output, r.trace, r.steps
        );
    }

    let suites: [&[(i64, i64)]; 3] = [&[(6, 10)], &[(4, 5)], &[(5, 6), (5, 10), (6, 9)]];
    for suite in suites {
        let sets: Vec<_> = suite
            .iter()
            .map(|&(x, y)| inputs(&[(Var::X, x), (Var::Y, y)]))
            .collect();
        let coverage = statement_coverage(&p, &sets, DEFAULT_FUEL)?;
        println!(
            "\nsuite {suite:?}: statement coverage {:.0}%",
            coverage * 100.0
        );
        for e in boundary_report_for_inputs(&p, &sets, DEFAULT_FUEL)?.entries {
            println!(
                "  {:<8} hit={} true={} false={} detected={}",
                e.comparison,
                e.hit,
                e.seen_true,
                e.seen_false,
                e.detected()
            );
        }
    }
    Ok(())
}
