//! Renders the report tables from case totals and from per-program verdicts.

use flowbench::metrics::{
    model_report, render_incomplete_table, render_report, EvaluationRecord, Mode, ModelReport,
};
use flowbench::oracle::VerdictKind::{self, *};
use flowbench::program::StructureCategory;

fn main() -> anyhow::Result<()> {
    let totals = [
        ModelReport::from_totals("GPT-3-Turbo", 2941, 1978),
        ModelReport::from_totals("GPT-4o", 3030, 2845),
        ModelReport::from_totals("GPT-4o-mini", 3032, 2803),
    ];
    print!("{}", render_incomplete_table(&totals));

    let programs: [(StructureCategory, &[VerdictKind]); 5] = [
        (StructureCategory::Branch, &[Correct, Correct, Incorrect]),
        (StructureCategory::Branch, &[Incomplete, Incomplete]),
        (StructureCategory::Loop, &[Correct, Incorrect, Incomplete]),
        (StructureCategory::Loop, &[Malformed, Correct]),
        (StructureCategory::Sequence, &[]),
    ];
    let mut reports = Vec::new();
    for mode in [Mode::CompleteOnly, Mode::AllCases] {
        let records: Vec<EvaluationRecord> = programs
            .iter()
            .enumerate()
            .map(|(i, (c, v))| EvaluationRecord::new(&format!("p{i}"), *c, v.to_vec(), mode))
            .collect();
        reports.push(model_report(
            &format!("demo ({})", mode.slug()),
            &records,
            mode,
        )?);
    }
    let report = render_report(&reports, None)?;
    print!("\n{}", report.markdown);
    print!("\n{}", report.metrics_csv);
    Ok(())
}
