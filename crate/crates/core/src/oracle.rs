//! Reference interpreter.
//!
//! Executes [`ProgramSpec`] trees with arbitrary-precision integers and
//! Python semantics (floored `%`, short-circuit `and`/`or`). Every run is
//! bounded by a fuel budget counted in executed nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::extract::TestCase;
use crate::program::{BinOp, Expr, Logic, LoopBound, Predicate, ProgramSpec, Stmt, Var};
use crate::render::{render_predicate, Dialect};

pub const DEFAULT_FUEL: u64 = 10_000;

/// Preorder index of an executable node (assignment, return, branch or loop header).
pub type NodeId = usize;

pub type Inputs = BTreeMap<Var, BigInt>;

pub fn inputs(pairs: &[(Var, i64)]) -> Inputs {
    pairs.iter().map(|(v, n)| (*v, BigInt::from(*n))).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionResult {
    pub output: BigInt,
    pub trace: Vec<NodeId>,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("fuel exhausted after {0} steps")]
    FuelExhausted(u64),
    #[error("fuel must be positive")]
    NoFuel,
    #[error("missing input for parameter {0}")]
    MissingInput(Var),
    #[error("read of unassigned variable {0}")]
    Unassigned(Var),
    #[error("integer modulo by zero")]
    ModuloByZero,
    #[error("program finished without returning")]
    NoReturn,
}

/// One evaluated comparison leaf.
#[derive(Clone, Debug)]
pub struct CompareEvent {
    pub node: NodeId,
    pub atom: usize,
    pub lhs: BigInt,
    pub rhs: BigInt,
    pub outcome: bool,
}

struct Machine<'a, F> {
    env: BTreeMap<Var, BigInt>,
    fuel: u64,
    steps: u64,
    trace: Vec<NodeId>,
    observer: &'a mut F,
}

enum Flow {
    Next,
    Return(BigInt),
}

impl<F: FnMut(CompareEvent)> Machine<'_, F> {
    fn tick(&mut self, node: NodeId) -> Result<(), ExecError> {
        if self.steps >= self.fuel {
            return Err(ExecError::FuelExhausted(self.steps));
        }
        self.steps += 1;
        self.trace.push(node);
        Ok(())
    }

    fn eval(&self, e: &Expr) -> Result<BigInt, ExecError> {
        Ok(match e {
            Expr::Var(v) => self.env.get(v).cloned().ok_or(ExecError::Unassigned(*v))?,
            Expr::Lit(n) => BigInt::from(*n),
            Expr::Bin { op, lhs, rhs } => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Rem => {
                        if b.is_zero() {
                            return Err(ExecError::ModuloByZero);
                        }
                        a.mod_floor(&b)
                    }
                }
            }
        })
    }

    fn test(&mut self, p: &Predicate, node: NodeId, atom: &mut usize) -> Result<bool, ExecError> {
        match p {
            Predicate::Compare { lhs, op, rhs } => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                let outcome = op.holds(&a, &b);
                (self.observer)(CompareEvent {
                    node,
                    atom: *atom,
                    lhs: a,
                    rhs: b,
                    outcome,
                });
                *atom += 1;
                Ok(outcome)
            }
            Predicate::Flag(v) => {
                *atom += 1;
                Ok(!self.env.get(v).ok_or(ExecError::Unassigned(*v))?.is_zero())
            }
            Predicate::Logic { op, lhs, rhs } => {
                let l = self.test(lhs, node, atom)?;
                let short = match op {
                    Logic::And => !l,
                    Logic::Or => l,
                };
                if short {
                    // Skipped leaves keep their indices stable.
                    *atom += rhs.atom_count();
                    Ok(l)
                } else {
                    self.test(rhs, node, atom)
                }
            }
        }
    }

    fn cond(&mut self, p: &Predicate, node: NodeId) -> Result<bool, ExecError> {
        let mut atom = 0;
        self.test(p, node, &mut atom)
    }

    fn block(&mut self, block: &[Stmt], base: NodeId) -> Result<Flow, ExecError> {
        let mut id = base;
        for stmt in block {
            match stmt {
                Stmt::Assign { target, value } => {
                    self.tick(id)?;
                    let v = self.eval(value)?;
                    self.env.insert(*target, v);
                }
                Stmt::Return(v) => {
                    self.tick(id)?;
                    let out = self.env.get(v).cloned().ok_or(ExecError::Unassigned(*v))?;
                    return Ok(Flow::Return(out));
                }
                Stmt::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    self.tick(id)?;
                    let then_base = id + 1;
                    let flow = if self.cond(cond, id)? {
                        self.block(then_body, then_base)?
                    } else if let Some(e) = else_body {
                        self.block(e, then_base + crate::program::block_nodes(then_body))?
                    } else {
                        Flow::Next
                    };
                    if let Flow::Return(v) = flow {
                        return Ok(Flow::Return(v));
                    }
                }
                Stmt::Loop { bound, body } => match bound {
                    LoopBound::Counted(n) => {
                        for _ in 0..*n {
                            self.tick(id)?;
                            if let Flow::Return(v) = self.block(body, id + 1)? {
                                return Ok(Flow::Return(v));
                            }
                        }
                    }
                    LoopBound::While(c) => loop {
                        self.tick(id)?;
                        if !self.cond(c, id)? {
                            break;
                        }
                        if let Flow::Return(v) = self.block(body, id + 1)? {
                            return Ok(Flow::Return(v));
                        }
                    },
                },
            }
            id += stmt.node_count();
        }
        Ok(Flow::Next)
    }
}

/// Runs `p` on `inputs`, reporting every comparison leaf to `observer`.
pub fn execute_observed(
    p: &ProgramSpec,
    inputs: &Inputs,
    fuel: u64,
    observer: &mut impl FnMut(CompareEvent),
) -> Result<ExecutionResult, ExecError> {
    if fuel == 0 {
        return Err(ExecError::NoFuel);
    }
    let mut env = BTreeMap::new();
    for v in &p.params {
        let value = inputs.get(v).ok_or(ExecError::MissingInput(*v))?;
        env.insert(*v, value.clone());
    }
    let mut m = Machine {
        env,
        fuel,
        steps: 0,
        trace: Vec::new(),
        observer,
    };
    match m.block(&p.body, 0)? {
        Flow::Return(output) => Ok(ExecutionResult {
            output,
            trace: m.trace,
            steps: m.steps,
        }),
        Flow::Next => Err(ExecError::NoReturn),
    }
}

pub fn execute(p: &ProgramSpec, inputs: &Inputs, fuel: u64) -> Result<ExecutionResult, ExecError> {
    execute_observed(p, inputs, fuel, &mut |_| {})
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Correct,
    Incorrect,
    Incomplete,
    Malformed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Verdict {
    pub fn new(kind: VerdictKind) -> Verdict {
        Verdict { kind, detail: None }
    }

    pub fn with_detail(kind: VerdictKind, detail: impl Into<String>) -> Verdict {
        Verdict {
            kind,
            detail: Some(detail.into()),
        }
    }

    /// Has both inputs and an expected output.
    pub fn is_complete(&self) -> bool {
        self.kind != VerdictKind::Incomplete
    }
}

pub fn judge(p: &ProgramSpec, tc: &TestCase, fuel: u64) -> Verdict {
    let Some(expected) = &tc.expected else {
        return Verdict::new(VerdictKind::Incomplete);
    };
    let params: BTreeSet<Var> = p.params.iter().copied().collect();
    let given: BTreeSet<Var> = tc.inputs.keys().copied().collect();
    if params != given {
        return Verdict::with_detail(
            VerdictKind::Malformed,
            format!(
                "inputs bind {:?} but the program takes {:?}",
                given.iter().map(|v| v.name()).collect::<Vec<_>>(),
                p.params.iter().map(|v| v.name()).collect::<Vec<_>>()
            ),
        );
    }
    match execute(p, &tc.inputs, fuel) {
        Ok(r) if &r.output == expected => Verdict::new(VerdictKind::Correct),
        Ok(r) => Verdict::with_detail(
            VerdictKind::Incorrect,
            format!("expected {expected}, actual {}", r.output),
        ),
        Err(ExecError::FuelExhausted(_)) => {
            Verdict::with_detail(VerdictKind::Incorrect, "fuel exhausted")
        }
        Err(e) => Verdict::with_detail(VerdictKind::Incorrect, e.to_string()),
    }
}

/// Nodes executed by at least one of the input sets.
pub fn covered_nodes(
    p: &ProgramSpec,
    input_sets: &[Inputs],
    fuel: u64,
) -> Result<BTreeSet<NodeId>, ExecError> {
    let mut covered = BTreeSet::new();
    for inputs in input_sets {
        covered.extend(execute(p, inputs, fuel)?.trace);
    }
    Ok(covered)
}

pub fn statement_coverage(
    p: &ProgramSpec,
    input_sets: &[Inputs],
    fuel: u64,
) -> Result<f64, ExecError> {
    let total = p.node_count();
    if total == 0 {
        return Ok(0.0);
    }
    Ok(covered_nodes(p, input_sets, fuel)?.len() as f64 / total as f64)
}

/// Boundary detection for one comparison of an expression against a constant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEntry {
    pub node: NodeId,
    pub atom: usize,
    /// The comparison as Python-style text.
    pub comparison: String,
    pub boundary: i64,
    /// Some run made the compared expression equal the constant.
    pub hit: bool,
    pub seen_true: bool,
    pub seen_false: bool,
}

impl BoundaryEntry {
    pub fn both_outcomes(&self) -> bool {
        self.seen_true && self.seen_false
    }

    pub fn detected(&self) -> bool {
        self.hit && self.both_outcomes()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub entries: Vec<BoundaryEntry>,
}

impl BoundaryReport {
    pub fn entry(&self, comparison: &str) -> Option<&BoundaryEntry> {
        self.entries.iter().find(|e| e.comparison == comparison)
    }
}

/// Side of a comparison holding the constant, if exactly one side is a literal.
fn constant_side(p: &Predicate) -> Option<(i64, bool)> {
    match p {
        Predicate::Compare {
            lhs: Expr::Lit(_),
            rhs: Expr::Lit(_),
            ..
        } => None,
        Predicate::Compare {
            rhs: Expr::Lit(c), ..
        } => Some((*c, true)),
        Predicate::Compare {
            lhs: Expr::Lit(c), ..
        } => Some((*c, false)),
        _ => None,
    }
}

fn boundary_skeleton(p: &ProgramSpec) -> Vec<(BoundaryEntry, bool)> {
    let mut out = Vec::new();
    let mut id = 0;
    crate::program::walk(&p.body, &mut |s| {
        let cond = match s {
            Stmt::If { cond, .. } => Some(cond),
            Stmt::Loop {
                bound: LoopBound::While(c),
                ..
            } => Some(c),
            _ => None,
        };
        if let Some(cond) = cond {
            for (atom, leaf) in cond.atoms().into_iter().enumerate() {
                if let Some((boundary, const_on_right)) = constant_side(leaf) {
                    out.push((
                        BoundaryEntry {
                            node: id,
                            atom,
                            comparison: render_predicate(leaf, Dialect::PythonStyle),
                            boundary,
                            hit: false,
                            seen_true: false,
                            seen_false: false,
                        },
                        const_on_right,
                    ));
                }
            }
        }
        id += 1;
    });
    out
}

/// Boundary detection over the inputs of `cases` (expected outputs are ignored).
pub fn boundary_report(
    p: &ProgramSpec,
    cases: &[TestCase],
    fuel: u64,
) -> Result<BoundaryReport, ExecError> {
    let input_sets: Vec<Inputs> = cases.iter().map(|c| c.inputs.clone()).collect();
    boundary_report_for_inputs(p, &input_sets, fuel)
}

pub fn boundary_report_for_inputs(
    p: &ProgramSpec,
    input_sets: &[Inputs],
    fuel: u64,
) -> Result<BoundaryReport, ExecError> {
    let mut entries = boundary_skeleton(p);
    for inputs in input_sets {
        execute_observed(p, inputs, fuel, &mut |ev: CompareEvent| {
            if let Some((entry, const_on_right)) = entries
                .iter_mut()
                .find(|(e, _)| e.node == ev.node && e.atom == ev.atom)
            {
                let compared = if *const_on_right { &ev.lhs } else { &ev.rhs };
                if compared.to_i64() == Some(entry.boundary) {
                    entry.hit = true;
                }
                if ev.outcome {
                    entry.seen_true = true;
                } else {
                    entry.seen_false = true;
                }
            }
        })?;
    }
    Ok(BoundaryReport {
        entries: entries.into_iter().map(|(e, _)| e).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TerminationReport {
    Pass { runs: usize },
    Fail { inputs: Inputs, error: ExecError },
}

impl TerminationReport {
    pub fn passed(&self) -> bool {
        matches!(self, TerminationReport::Pass { .. })
    }
}

const TERMINATION_SEED: u64 = 0x7e57_ca5e;

/// Deterministic input vectors over `domain`: the corner vectors first, then
/// seeded pseudo-random draws, `samples` in total.
pub fn sample_inputs(params: &[Var], domain: &RangeInclusive<i64>, samples: usize) -> Vec<Inputs> {
    let mut out = Vec::with_capacity(samples);
    let (lo, hi) = (*domain.start(), *domain.end());
    let mut corners = vec![lo, hi];
    if domain.contains(&0) {
        corners.push(0);
    }
    corners.dedup();
    for &a in &corners {
        for &b in &corners {
            if out.len() >= samples {
                return out;
            }
            let vals = [a, b];
            out.push(
                params
                    .iter()
                    .zip(vals.iter().cycle())
                    .map(|(v, n)| (*v, BigInt::from(*n)))
                    .collect(),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(TERMINATION_SEED);
    while out.len() < samples {
        out.push(
            params
                .iter()
                .map(|v| (*v, BigInt::from(rng.gen_range(lo..=hi))))
                .collect(),
        );
    }
    out
}

pub fn check_termination(
    p: &ProgramSpec,
    domain: RangeInclusive<i64>,
    samples: usize,
    fuel: u64,
) -> TerminationReport {
    let sets = sample_inputs(&p.params, &domain, samples);
    let runs = sets.len();
    for inputs in sets {
        if let Err(error) = execute(p, &inputs, fuel) {
            if matches!(error, ExecError::FuelExhausted(_) | ExecError::NoFuel) {
                return TerminationReport::Fail { inputs, error };
            }
        }
    }
    TerminationReport::Pass { runs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::fixtures::*;
    use crate::program::{RelOp, StructureCategory};

    fn out(p: &ProgramSpec, x: i64, y: i64) -> BigInt {
        execute(p, &inputs(&[(Var::X, x), (Var::Y, y)]), DEFAULT_FUEL)
            .unwrap()
            .output
    }

    fn case(x: i64, y: i64, expected: Option<i64>) -> TestCase {
        TestCase {
            program_id: "sample".into(),
            index: 0,
            inputs: inputs(&[(Var::X, x), (Var::Y, y)]),
            expected: expected.map(BigInt::from),
            complete: expected.is_some(),
        }
    }

    /// Direct transcription of the sample_program program as native Rust.
    fn sample_native(mut x: i64, y: i64) -> i64 {
        if x > 5 {
            x = x + y + 10;
        }
        if y == 10 {
            x = x + y - 7;
        }
        x
    }

    #[test]
    fn sample_outputs() {
        let p = sample_program();
        assert_eq!(out(&p, 6, 10), BigInt::from(29));
        assert_eq!(out(&p, 4, 5), BigInt::from(4));
        assert_eq!(out(&p, 5, 10), BigInt::from(8));
        assert_eq!(out(&p, 6, 5), BigInt::from(21));
    }

    #[test]
    fn sample_agrees_with_native_transcription() {
        let p = sample_program();
        for x in -20..=20 {
            for y in -20..=20 {
                assert_eq!(
                    out(&p, x, y),
                    BigInt::from(sample_native(x, y)),
                    "({x}, {y})"
                );
            }
        }
    }

    #[test]
    fn counted_loop_adds_thirty() {
        let p = program(
            StructureCategory::Loop,
            vec![Var::X],
            vec![
                Stmt::counted(3, vec![Stmt::assign(Var::X, add(x(), n(10)))]),
                Stmt::Return(Var::X),
            ],
        );
        let r = execute(&p, &inputs(&[(Var::X, 0)]), DEFAULT_FUEL).unwrap();
        assert_eq!(r.output, BigInt::from(30));
        // three headers, three bodies, one return
        assert_eq!(r.steps, 7);
        assert_eq!(r.trace, vec![0, 1, 0, 1, 0, 1, 2]);
    }

    #[test]
    fn modulo_is_floored_and_big_values_do_not_wrap() {
        let p = program(
            StructureCategory::Sequence,
            vec![Var::X],
            vec![
                Stmt::assign(Var::X, Expr::bin(BinOp::Rem, x(), n(7))),
                Stmt::Return(Var::X),
            ],
        );
        assert_eq!(
            execute(&p, &inputs(&[(Var::X, -3)]), 10).unwrap().output,
            BigInt::from(4)
        );
        let q = program(
            StructureCategory::Sequence,
            vec![Var::X],
            vec![
                Stmt::assign(Var::X, Expr::bin(BinOp::Mul, x(), x())),
                Stmt::Return(Var::X),
            ],
        );
        let big = execute(&q, &inputs(&[(Var::X, i64::MAX)]), 10)
            .unwrap()
            .output;
        assert_eq!(big, BigInt::from(i64::MAX) * BigInt::from(i64::MAX));
    }

    #[test]
    fn fuel_and_inputs_are_checked() {
        let p = sample_program();
        assert_eq!(
            execute(&p, &inputs(&[(Var::X, 1)]), 10),
            Err(ExecError::MissingInput(Var::Y))
        );
        assert_eq!(
            execute(&p, &inputs(&[(Var::X, 1), (Var::Y, 1)]), 0),
            Err(ExecError::NoFuel)
        );
        assert!(matches!(
            execute(&p, &inputs(&[(Var::X, 1), (Var::Y, 1)]), 2),
            Err(ExecError::FuelExhausted(2))
        ));
    }

    #[test]
    fn judge_verdicts() {
        let p = sample_program();
        assert_eq!(
            judge(&p, &case(6, 10, Some(29)), DEFAULT_FUEL).kind,
            VerdictKind::Correct
        );
        assert_eq!(
            judge(&p, &case(6, 10, None), DEFAULT_FUEL).kind,
            VerdictKind::Incomplete
        );
        let wrong = judge(&p, &case(6, 10, Some(26)), DEFAULT_FUEL);
        assert_eq!(wrong.kind, VerdictKind::Incorrect);
        assert_eq!(wrong.detail.as_deref(), Some("expected 26, actual 29"));
        let mut partial = case(6, 10, Some(29));
        partial.inputs.remove(&Var::Y);
        assert_eq!(
            judge(&p, &partial, DEFAULT_FUEL).kind,
            VerdictKind::Malformed
        );
    }

    #[test]
    fn judge_reports_fuel_exhaustion_as_incorrect() {
        let p = program(
            StructureCategory::Loop,
            vec![Var::X, Var::Y],
            vec![
                Stmt::while_loop(
                    Predicate::cmp(x(), RelOp::Lt, y()),
                    vec![Stmt::assign(Var::Y, add(y(), n(1)))],
                ),
                Stmt::Return(Var::X),
            ],
        );
        let v = judge(&p, &case(0, 5, Some(0)), 100);
        assert_eq!(
            v,
            Verdict::with_detail(VerdictKind::Incorrect, "fuel exhausted")
        );
    }

    #[test]
    fn coverage_on_sample() {
        let p = sample_program();
        let a = inputs(&[(Var::X, 6), (Var::Y, 10)]);
        let b = inputs(&[(Var::X, 4), (Var::Y, 5)]);
        assert_eq!(p.node_count(), 5);
        assert_eq!(
            statement_coverage(&p, std::slice::from_ref(&a), DEFAULT_FUEL).unwrap(),
            1.0
        );
        assert_eq!(
            statement_coverage(&p, std::slice::from_ref(&b), DEFAULT_FUEL).unwrap(),
            0.6
        );
        assert_eq!(statement_coverage(&p, &[a, b], DEFAULT_FUEL).unwrap(), 1.0);
        assert_eq!(statement_coverage(&p, &[], DEFAULT_FUEL).unwrap(), 0.0);
    }

    #[test]
    fn else_branch_node_ids() {
        let p = program(
            StructureCategory::SequentialBranchWithElse,
            vec![Var::X],
            vec![
                Stmt::if_else(
                    Predicate::cmp(x(), RelOp::Gt, n(5)),
                    vec![Stmt::assign(Var::X, n(1))],
                    vec![Stmt::assign(Var::X, n(2))],
                ),
                Stmt::Return(Var::X),
            ],
        );
        let r = execute(&p, &inputs(&[(Var::X, 0)]), 10).unwrap();
        assert_eq!(r.trace, vec![0, 2, 3]);
        assert_eq!(r.output, BigInt::from(2));
    }

    fn gt5() -> ProgramSpec {
        program(
            StructureCategory::Branch,
            vec![Var::X],
            vec![
                Stmt::if_then(
                    Predicate::cmp(x(), RelOp::Gt, n(5)),
                    vec![Stmt::assign(Var::X, add(x(), n(10)))],
                ),
                Stmt::Return(Var::X),
            ],
        )
    }

    #[test]
    fn boundary_hit_and_both_outcomes() {
        let p = gt5();
        let r =
            boundary_report_for_inputs(&p, &[inputs(&[(Var::X, 5)]), inputs(&[(Var::X, 6)])], 100)
                .unwrap();
        let e = r.entry("x > 5").unwrap();
        assert!(e.hit && e.both_outcomes());
        let r =
            boundary_report_for_inputs(&p, &[inputs(&[(Var::X, 7)]), inputs(&[(Var::X, 8)])], 100)
                .unwrap();
        let e = r.entry("x > 5").unwrap();
        assert!(!e.hit && !e.both_outcomes());
    }

    #[test]
    fn boundary_on_recorded_inputs() {
        let p = sample_program();
        let cases: Vec<TestCase> = [(6, 10), (5, 10), (6, 5), (5, 5)]
            .into_iter()
            .map(|(x, y)| case(x, y, None))
            .collect();
        let r = boundary_report(&p, &cases, DEFAULT_FUEL).unwrap();
        assert_eq!(r.entries.len(), 2);
        assert!(r.entry("x > 5").unwrap().detected());
        let y = r.entry("y == 10").unwrap();
        assert!(y.hit && y.both_outcomes());
    }

    #[test]
    fn short_circuit_skips_right_leaf() {
        let p = program(
            StructureCategory::Branch,
            vec![Var::X, Var::Y],
            vec![
                Stmt::if_then(
                    Predicate::and(
                        Predicate::cmp(x(), RelOp::Gt, n(5)),
                        Predicate::cmp(y(), RelOp::Gt, n(10)),
                    ),
                    vec![Stmt::assign(Var::X, n(0))],
                ),
                Stmt::Return(Var::X),
            ],
        );
        let r =
            boundary_report_for_inputs(&p, &[inputs(&[(Var::X, 0), (Var::Y, 10)])], 100).unwrap();
        let y = r.entry("y > 10").unwrap();
        assert_eq!(
            (y.atom, y.hit, y.seen_true, y.seen_false),
            (1, false, false, false)
        );
    }

    #[test]
    fn termination_checks() {
        let counted = program(
            StructureCategory::Loop,
            vec![Var::X],
            vec![
                Stmt::counted(3, vec![Stmt::assign(Var::X, add(x(), n(10)))]),
                Stmt::Return(Var::X),
            ],
        );
        assert!(check_termination(&counted, -100..=100, 200, DEFAULT_FUEL).passed());

        let converging = program(
            StructureCategory::Loop,
            vec![Var::X, Var::Y],
            vec![
                Stmt::while_loop(
                    Predicate::cmp(x(), RelOp::Lt, y()),
                    vec![Stmt::assign(Var::X, add(x(), n(7)))],
                ),
                Stmt::Return(Var::X),
            ],
        );
        assert!(check_termination(&converging, -100..=100, 1000, DEFAULT_FUEL).passed());

        let diverging = program(
            StructureCategory::Loop,
            vec![Var::X, Var::Y],
            vec![
                Stmt::while_loop(
                    Predicate::cmp(x(), RelOp::Lt, y()),
                    vec![Stmt::assign(Var::Y, add(y(), n(1)))],
                ),
                Stmt::Return(Var::X),
            ],
        );
        match check_termination(&diverging, -100..=100, 1000, DEFAULT_FUEL) {
            TerminationReport::Fail { inputs, error } => {
                assert!(inputs[&Var::X] < inputs[&Var::Y]);
                assert!(matches!(error, ExecError::FuelExhausted(_)));
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn samples_are_deterministic_and_in_domain() {
        let a = sample_inputs(&[Var::X, Var::Y], &(-3..=3), 50);
        assert_eq!(a, sample_inputs(&[Var::X, Var::Y], &(-3..=3), 50));
        assert_eq!(a.len(), 50);
        assert!(a
            .iter()
            .flat_map(|m| m.values())
            .all(|v| (-3..=3).contains(&v.to_i64().unwrap())));
    }
}
