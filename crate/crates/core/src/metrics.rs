//! Scoring: per-program error rates, untestable programs, incomplete-case
//! rates, and the report tables built from them.
//!
//! A case is *complete* when it carries an expected output. Malformed cases
//! that still carry one count as complete and incorrect. A program with no
//! complete case is *untestable*; it counts toward the untestable rate and
//! never toward the average error rate.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::extract::ExtractedCase;
use crate::generator::DatasetStats;
use crate::oracle::{judge, Verdict, VerdictKind};
use crate::program::{ProgramSpec, StructureCategory};

/// Denominator used for a program's error rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Only complete cases are judged.
    #[default]
    CompleteOnly,
    /// Every generated case counts; incomplete ones count as errors.
    AllCases,
}

impl Mode {
    pub fn slug(self) -> &'static str {
        match self {
            Mode::CompleteOnly => "complete_only",
            Mode::AllCases => "all_cases",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "complete_only" | "complete" => Some(Mode::CompleteOnly),
            "all_cases" | "all" => Some(Mode::AllCases),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("test case {index} references unknown program `{program_id}`")]
    Orphan { program_id: String, index: usize },
    #[error("category {0} has no programs")]
    EmptyCategory(StructureCategory),
    #[error("no test cases at all; the incomplete rate is undefined")]
    NoTestCases,
    #[error("nothing to report")]
    NoReports,
    #[error("report for {0} has no categories")]
    NoCategories(String),
}

/// `(N_t - N_s) / N_t`, or `None` when `n_t` is zero.
pub fn error_rate(n_t: usize, n_s: usize) -> Option<f64> {
    (n_t > 0).then(|| (n_t - n_s.min(n_t)) as f64 / n_t as f64)
}

/// Mean of the defined rates, or `None` when there are none.
pub fn avg_error_rate(rates: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = rates.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

pub fn untestable_rate(untestable: usize, programs: usize) -> Result<f64, MetricsError> {
    if programs == 0 {
        return Err(MetricsError::NoReports);
    }
    Ok(untestable as f64 / programs as f64)
}

/// `(TT - CT) / TT`.
pub fn incomplete_rate(total: usize, complete: usize) -> Result<f64, MetricsError> {
    if total == 0 {
        return Err(MetricsError::NoTestCases);
    }
    Ok((total - complete.min(total)) as f64 / total as f64)
}

pub fn avg_testcases(total: usize, programs: usize) -> Result<f64, MetricsError> {
    if programs == 0 {
        return Err(MetricsError::NoReports);
    }
    Ok(total as f64 / programs as f64)
}

/// Verdict for one extracted case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseVerdict {
    pub program_id: String,
    pub index: usize,
    pub verdict: Verdict,
}

/// Judges every case against its program. Malformed cases without an
/// expected value are incomplete; with one they are malformed.
pub fn judge_cases(
    programs: &[ProgramSpec],
    cases: &[ExtractedCase],
    fuel: u64,
) -> Result<Vec<CaseVerdict>, MetricsError> {
    let by_id: HashMap<&str, &ProgramSpec> = programs.iter().map(|p| (p.id.as_str(), p)).collect();
    cases
        .iter()
        .map(|c| {
            let p = by_id
                .get(c.program_id.as_str())
                .ok_or_else(|| MetricsError::Orphan {
                    program_id: c.program_id.clone(),
                    index: c.index,
                })?;
            let verdict = match (&c.malformed, c.test_case()) {
                (Some(reason), _) if c.complete => {
                    Verdict::with_detail(VerdictKind::Malformed, reason.clone())
                }
                (Some(reason), _) => Verdict::with_detail(VerdictKind::Incomplete, reason.clone()),
                (None, Some(tc)) => judge(p, &tc, fuel),
                (None, None) => unreachable!("well-formed cases always convert"),
            };
            Ok(CaseVerdict {
                program_id: c.program_id.clone(),
                index: c.index,
                verdict,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub program_id: String,
    pub category: StructureCategory,
    /// Every case generated for the program.
    pub n_t: usize,
    pub n_complete: usize,
    pub n_s: usize,
    pub verdicts: Vec<VerdictKind>,
    /// Undefined for untestable programs.
    pub error_rate: Option<f64>,
    pub untestable: bool,
}

impl EvaluationRecord {
    pub fn new(
        program_id: &str,
        category: StructureCategory,
        verdicts: Vec<VerdictKind>,
        mode: Mode,
    ) -> Self {
        let n_t = verdicts.len();
        let n_complete = verdicts
            .iter()
            .filter(|v| **v != VerdictKind::Incomplete)
            .count();
        let n_s = verdicts
            .iter()
            .filter(|v| **v == VerdictKind::Correct)
            .count();
        let untestable = n_complete == 0;
        let denominator = match mode {
            Mode::CompleteOnly => n_complete,
            Mode::AllCases => n_t,
        };
        EvaluationRecord {
            program_id: program_id.to_string(),
            category,
            n_t,
            n_complete,
            n_s,
            verdicts,
            error_rate: if untestable {
                None
            } else {
                error_rate(denominator, n_s)
            },
            untestable,
        }
    }
}

/// One record per program (programs without cases are untestable), sorted
/// by (category, program id).
pub fn evaluation_records(
    programs: &[ProgramSpec],
    verdicts: &[CaseVerdict],
    mode: Mode,
) -> Result<Vec<EvaluationRecord>, MetricsError> {
    let mut per: BTreeMap<&str, Vec<(usize, VerdictKind)>> = programs
        .iter()
        .map(|p| (p.id.as_str(), Vec::new()))
        .collect();
    for v in verdicts {
        per.get_mut(v.program_id.as_str())
            .ok_or_else(|| MetricsError::Orphan {
                program_id: v.program_id.clone(),
                index: v.index,
            })?
            .push((v.index, v.verdict.kind));
    }
    let mut out: Vec<EvaluationRecord> = programs
        .iter()
        .map(|p| {
            let mut vs = per.remove(p.id.as_str()).unwrap_or_default();
            vs.sort_by_key(|(i, _)| *i);
            EvaluationRecord::new(
                &p.id,
                p.category,
                vs.into_iter().map(|(_, k)| k).collect(),
                mode,
            )
        })
        .collect();
    out.sort_by(|a, b| {
        (a.category.display_name(), &a.program_id).cmp(&(b.category.display_name(), &b.program_id))
    });
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub category: StructureCategory,
    /// Programs in the category.
    pub tp: usize,
    /// Untestable programs.
    pub w: usize,
    pub untestable_rate: f64,
    /// Mean error rate over the testable programs.
    pub avg_error_rate: Option<f64>,
    /// Cases generated for the category.
    pub tn: usize,
    pub avg_testcases: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub mode: Mode,
    /// All cases.
    pub tt: usize,
    /// Complete cases.
    pub ct: usize,
    /// Incomplete cases.
    pub it: usize,
    pub incomplete_rate: Option<f64>,
    /// Alphabetical by category name.
    pub categories: Vec<CategoryReport>,
}

impl ModelReport {
    pub fn category(&self, c: StructureCategory) -> Option<&CategoryReport> {
        self.categories.iter().find(|r| r.category == c)
    }

    /// A report holding only case totals, for incomplete-rate tables.
    pub fn from_totals(model: &str, tt: usize, ct: usize) -> ModelReport {
        ModelReport {
            model: model.to_string(),
            mode: Mode::CompleteOnly,
            tt,
            ct,
            it: tt - ct.min(tt),
            incomplete_rate: incomplete_rate(tt, ct).ok(),
            categories: Vec::new(),
        }
    }
}

pub fn category_report(
    c: StructureCategory,
    records: &[&EvaluationRecord],
) -> Result<CategoryReport, MetricsError> {
    let tp = records.len();
    if tp == 0 {
        return Err(MetricsError::EmptyCategory(c));
    }
    let w = records.iter().filter(|r| r.untestable).count();
    let tn = records.iter().map(|r| r.n_t).sum();
    let rates: Vec<Option<f64>> = records.iter().map(|r| r.error_rate).collect();
    Ok(CategoryReport {
        category: c,
        tp,
        w,
        untestable_rate: untestable_rate(w, tp)?,
        avg_error_rate: avg_error_rate(&rates),
        tn,
        avg_testcases: avg_testcases(tn, tp)?,
    })
}

pub fn model_report(
    model: &str,
    records: &[EvaluationRecord],
    mode: Mode,
) -> Result<ModelReport, MetricsError> {
    let mut by_cat: BTreeMap<&str, (StructureCategory, Vec<&EvaluationRecord>)> = BTreeMap::new();
    for r in records {
        by_cat
            .entry(r.category.display_name())
            .or_insert_with(|| (r.category, Vec::new()))
            .1
            .push(r);
    }
    let categories = by_cat
        .into_values()
        .map(|(c, rs)| category_report(c, &rs))
        .collect::<Result<Vec<_>, _>>()?;
    let tt: usize = records.iter().map(|r| r.n_t).sum();
    let ct: usize = records.iter().map(|r| r.n_complete).sum();
    Ok(ModelReport {
        model: model.to_string(),
        mode,
        tt,
        ct,
        it: tt - ct,
        incomplete_rate: incomplete_rate(tt, ct).ok(),
        categories,
    })
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub verdicts: Vec<CaseVerdict>,
    pub records: Vec<EvaluationRecord>,
    pub report: ModelReport,
}

/// Judges all cases and aggregates them into a model report.
pub fn evaluate_run(
    model: &str,
    programs: &[ProgramSpec],
    cases: &[ExtractedCase],
    mode: Mode,
    fuel: u64,
) -> Result<Evaluation, MetricsError> {
    let verdicts = judge_cases(programs, cases, fuel)?;
    let records = evaluation_records(programs, &verdicts, mode)?;
    let report = model_report(model, &records, mode)?;
    Ok(Evaluation {
        verdicts,
        records,
        report,
    })
}

/// Percentage with two decimals, e.g. `32.74%`.
pub fn percent(v: f64) -> String {
    format!("{:.2}%", v * 100.0)
}

fn opt_percent(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), percent)
}

fn opt_value(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Rendered report: a markdown document plus machine-readable tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub markdown: String,
    /// Long format: category, model, metric, value.
    pub metrics_csv: String,
    pub untestable_csv: String,
    pub incomplete_csv: String,
    pub dataset_csv: Option<String>,
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

fn markdown_table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(
        out,
        "|{}|",
        header.iter().map(|_| "---").collect::<Vec<_>>().join("|")
    );
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
}

/// Categories present in any report, alphabetical.
fn categories_of(reports: &[ModelReport]) -> Vec<StructureCategory> {
    let mut cats: Vec<StructureCategory> = reports
        .iter()
        .flat_map(|r| r.categories.iter().map(|c| c.category))
        .collect();
    cats.sort_by_key(|c| c.display_name());
    cats.dedup();
    cats
}

/// The incomplete-rate table (one row per model) as markdown.
pub fn render_incomplete_table(reports: &[ModelReport]) -> String {
    let mut out = String::new();
    let header: Vec<String> = [
        "Model",
        "Total test cases",
        "Complete",
        "Incomplete",
        "Incomplete rate",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                r.tt.to_string(),
                r.ct.to_string(),
                r.it.to_string(),
                opt_percent(r.incomplete_rate),
            ]
        })
        .collect();
    markdown_table(&mut out, &header, &rows);
    out
}

/// The dataset statistics table as markdown.
pub fn render_dataset_table(stats: &DatasetStats) -> String {
    let mut out = String::new();
    let header: Vec<String> = [
        "Category",
        "Programs",
        "Coverage",
        "Average SLOC (Python)",
        "Average SLOC (Java)",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rows: Vec<Vec<String>> = stats
        .categories
        .iter()
        .map(|c| {
            vec![
                c.category.display_name().to_string(),
                c.programs.to_string(),
                percent(c.coverage),
                format!("{:.2}", c.avg_sloc_python),
                format!("{:.2}", c.avg_sloc_java),
            ]
        })
        .collect();
    rows.push(vec![
        "Total".into(),
        stats.total.to_string(),
        percent(1.0),
        String::new(),
        String::new(),
    ]);
    markdown_table(&mut out, &header, &rows);
    out
}

fn dataset_csv(stats: &DatasetStats) -> String {
    let rows: Vec<Vec<String>> = stats
        .categories
        .iter()
        .map(|c| {
            vec![
                c.category.display_name().to_string(),
                c.programs.to_string(),
                c.coverage.to_string(),
                c.avg_sloc_python.to_string(),
                c.avg_sloc_java.to_string(),
            ]
        })
        .collect();
    csv_text(
        &[
            "category",
            "programs",
            "coverage",
            "avg_sloc_python",
            "avg_sloc_java",
        ],
        &rows,
    )
}

/// Renders the metric, untestable, incomplete and (when `stats` is given)
/// dataset tables. Models appear in the order given.
pub fn render_report(
    reports: &[ModelReport],
    stats: Option<&DatasetStats>,
) -> Result<Report, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::NoReports);
    }
    if let Some(r) = reports.iter().find(|r| r.categories.is_empty()) {
        return Err(MetricsError::NoCategories(r.model.clone()));
    }
    let cats = categories_of(reports);
    let mut md = String::from("# Test generation report\n\n");
    let modes: Vec<&str> = reports.iter().map(|r| r.mode.slug()).collect();
    let _ = writeln!(md, "Error-rate denominator: {}\n", modes.join(", "));

    md.push_str("## Average test cases and error rate\n\n");
    let header: Vec<String> = [
        "Category",
        "Model",
        "Programs",
        "Avg test cases",
        "Avg error rate",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rows = Vec::new();
    let mut long = Vec::new();
    for c in &cats {
        for r in reports {
            let Some(cr) = r.category(*c) else { continue };
            rows.push(vec![
                c.display_name().to_string(),
                r.model.clone(),
                cr.tp.to_string(),
                format!("{:.2}", cr.avg_testcases),
                opt_percent(cr.avg_error_rate),
            ]);
            for (metric, value) in [
                ("avg_test_cases", cr.avg_testcases.to_string()),
                ("avg_error_rate", opt_value(cr.avg_error_rate)),
                ("untestable_rate", cr.untestable_rate.to_string()),
            ] {
                long.push(vec![
                    c.display_name().to_string(),
                    r.model.clone(),
                    metric.to_string(),
                    value,
                ]);
            }
        }
    }
    markdown_table(&mut md, &header, &rows);

    md.push_str("\n## Untestable programs\n\n");
    let mut header = vec!["Category".to_string()];
    header.extend(reports.iter().map(|r| r.model.clone()));
    let mut rows = Vec::new();
    let mut untestable = Vec::new();
    for c in &cats {
        let mut row = vec![c.display_name().to_string()];
        for r in reports {
            match r.category(*c) {
                Some(cr) => {
                    row.push(percent(cr.untestable_rate));
                    untestable.push(vec![
                        c.display_name().to_string(),
                        r.model.clone(),
                        cr.tp.to_string(),
                        cr.w.to_string(),
                        cr.untestable_rate.to_string(),
                    ]);
                }
                None => row.push("n/a".into()),
            }
        }
        rows.push(row);
    }
    markdown_table(&mut md, &header, &rows);

    md.push_str("\n## Incomplete test cases\n\n");
    md.push_str(&render_incomplete_table(reports));
    let incomplete: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                r.tt.to_string(),
                r.ct.to_string(),
                r.it.to_string(),
                opt_value(r.incomplete_rate),
            ]
        })
        .collect();

    if let Some(s) = stats {
        md.push_str("\n## Dataset\n\n");
        md.push_str(&render_dataset_table(s));
    }

    Ok(Report {
        markdown: md,
        metrics_csv: csv_text(&["category", "model", "metric", "value"], &long),
        untestable_csv: csv_text(
            &["category", "model", "programs", "untestable", "rate"],
            &untestable,
        ),
        incomplete_csv: csv_text(
            &["model", "total", "complete", "incomplete", "rate"],
            &incomplete,
        ),
        dataset_csv: stats.map(dataset_csv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use VerdictKind::*;

    #[test]
    fn rate_arithmetic() {
        assert_eq!(error_rate(5, 3), Some(0.4));
        assert_eq!(error_rate(4, 4), Some(0.0));
        assert_eq!(error_rate(3, 0), Some(1.0));
        assert_eq!(error_rate(0, 0), None);
        let avg = avg_error_rate(&[Some(0.2), Some(0.4), None, Some(0.6)]).unwrap();
        assert!((avg - 0.4).abs() < 1e-12);
        assert_eq!(avg_error_rate(&[Some(0.0)]), Some(0.0));
        assert_eq!(avg_error_rate(&[None]), None);
        assert_eq!(untestable_rate(2, 10), Ok(0.2));
        assert_eq!(untestable_rate(0, 10), Ok(0.0));
        assert_eq!(avg_testcases(12, 4), Ok(3.0));
        assert_eq!(avg_testcases(0, 4), Ok(0.0));
        assert!(avg_testcases(1, 0).is_err());
        assert_eq!(incomplete_rate(0, 0), Err(MetricsError::NoTestCases));
    }

    #[test]
    fn incomplete_rates_match_reference_counts() {
        assert_eq!(percent(incomplete_rate(2941, 1978).unwrap()), "32.74%");
        assert_eq!(percent(incomplete_rate(3030, 2845).unwrap()), "6.11%");
        assert_eq!(percent(incomplete_rate(3032, 2803).unwrap()), "7.55%");
    }

    #[test]
    fn record_modes() {
        let vs = vec![Correct, Incorrect, Incomplete];
        let c = EvaluationRecord::new(
            "p",
            StructureCategory::Branch,
            vs.clone(),
            Mode::CompleteOnly,
        );
        assert_eq!((c.n_t, c.n_complete, c.n_s), (3, 2, 1));
        assert_eq!(c.error_rate, Some(0.5));
        let a = EvaluationRecord::new("p", StructureCategory::Branch, vs, Mode::AllCases);
        assert!((a.error_rate.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let u = EvaluationRecord::new(
            "p",
            StructureCategory::Branch,
            vec![Incomplete],
            Mode::AllCases,
        );
        assert!(u.untestable && u.error_rate.is_none());
        let m = EvaluationRecord::new(
            "p",
            StructureCategory::Branch,
            vec![Malformed],
            Mode::CompleteOnly,
        );
        assert!(!m.untestable);
        assert_eq!(m.error_rate, Some(1.0));
    }

    fn rec(id: &str, c: StructureCategory, vs: Vec<VerdictKind>) -> EvaluationRecord {
        EvaluationRecord::new(id, c, vs, Mode::CompleteOnly)
    }

    #[test]
    fn aggregation() {
        let records = vec![
            rec("a", StructureCategory::Loop, vec![Correct, Correct]),
            rec("b", StructureCategory::Loop, vec![Incomplete]),
            rec(
                "c",
                StructureCategory::Branch,
                vec![Correct, Incorrect, Incomplete],
            ),
        ];
        let r = model_report("m", &records, Mode::CompleteOnly).unwrap();
        assert_eq!((r.tt, r.ct, r.it), (6, 4, 2));
        assert_eq!(
            r.categories.iter().map(|c| c.category).collect::<Vec<_>>(),
            vec![StructureCategory::Branch, StructureCategory::Loop]
        );
        let lp = r.category(StructureCategory::Loop).unwrap();
        assert_eq!((lp.tp, lp.w, lp.tn), (2, 1, 3));
        assert_eq!(lp.avg_error_rate, Some(0.0));
        assert_eq!(lp.untestable_rate, 0.5);
        assert_eq!(lp.avg_testcases, 1.5);
        assert_eq!(r.categories.iter().map(|c| c.tn).sum::<usize>(), r.tt);
    }

    #[test]
    fn report_shape() {
        let records: Vec<EvaluationRecord> = StructureCategory::ALL
            .iter()
            .map(|c| rec(c.slug(), *c, vec![Correct, Incorrect]))
            .collect();
        let r = model_report("m", &records, Mode::CompleteOnly).unwrap();
        let out = render_report(&[r], None).unwrap();
        assert_eq!(out.metrics_csv.lines().count(), 22);
        assert_eq!(out.untestable_csv.lines().count(), 8);
        assert_eq!(out.incomplete_csv.lines().count(), 2);
        assert!(out.dataset_csv.is_none());
        assert!(out.markdown.contains("| Branch | m | 1 | 2.00 | 50.00% |"));
        assert_eq!(render_report(&[], None), Err(MetricsError::NoReports));
        assert_eq!(
            render_report(&[ModelReport::from_totals("m", 1, 1)], None),
            Err(MetricsError::NoCategories("m".into()))
        );
    }
}
