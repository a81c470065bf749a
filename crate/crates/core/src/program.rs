//! Abstract program model.
//!
//! Every benchmark program is a single function over the integer variables
//! `x` and `y`. Programs are stored as statement trees and only become text
//! when a [`crate::render::Dialect`] is applied, so the oracle, the renderer
//! and the complexity classifier all agree on one representation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Maximum expression tree depth accepted by [`validate_program`].
pub const MAX_EXPR_DEPTH: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    X,
    Y,
}

impl Var {
    pub const ALL: [Var; 2] = [Var::X, Var::Y];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    /// Floored remainder (sign follows the divisor).
    Rem,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Rem => "%",
        }
    }

    /// Binding strength; `*` and `%` bind tighter than `+` and `-`.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Rem => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Var(Var),
    Lit(i64),
    Bin {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

impl Expr {
    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn lit(n: i64) -> Expr {
        Expr::Lit(n)
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Lit(_) => 1,
            Expr::Bin { lhs, rhs, .. } => 1 + lhs.depth().max(rhs.depth()),
        }
    }

    pub fn is_computation(&self) -> bool {
        matches!(self, Expr::Bin { .. })
    }

    pub fn reads(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Lit(_) => {}
            Expr::Bin { lhs, rhs, .. } => {
                lhs.reads(out);
                rhs.reads(out);
            }
        }
    }

    pub fn ops(&self, out: &mut Vec<BinOp>) {
        if let Expr::Bin { op, lhs, rhs } = self {
            out.push(*op);
            lhs.ops(out);
            rhs.ops(out);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelOp {
    Eq,
    Ne,
    Gt,
    Lt,
    Ge,
    Le,
}

impl RelOp {
    pub const ALL: [RelOp; 6] = [
        RelOp::Gt,
        RelOp::Lt,
        RelOp::Ge,
        RelOp::Le,
        RelOp::Eq,
        RelOp::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
            RelOp::Gt => ">",
            RelOp::Lt => "<",
            RelOp::Ge => ">=",
            RelOp::Le => "<=",
        }
    }

    /// Short mnemonic used in catalog entry ids.
    pub fn mnemonic(self) -> &'static str {
        match self {
            RelOp::Eq => "eq",
            RelOp::Ne => "ne",
            RelOp::Gt => "gt",
            RelOp::Lt => "lt",
            RelOp::Ge => "ge",
            RelOp::Le => "le",
        }
    }

    pub fn holds<T: Ord>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            RelOp::Eq => lhs == rhs,
            RelOp::Ne => lhs != rhs,
            RelOp::Gt => lhs > rhs,
            RelOp::Lt => lhs < rhs,
            RelOp::Ge => lhs >= rhs,
            RelOp::Le => lhs <= rhs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Logic {
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Compare {
        lhs: Expr,
        op: RelOp,
        rhs: Expr,
    },
    Logic {
        op: Logic,
        lhs: Box<Predicate>,
        rhs: Box<Predicate>,
    },
    /// Bare variable used as a truth value (non-zero is true).
    Flag(Var),
}

impl Predicate {
    pub fn cmp(lhs: Expr, op: RelOp, rhs: Expr) -> Predicate {
        Predicate::Compare { lhs, op, rhs }
    }

    pub fn and(lhs: Predicate, rhs: Predicate) -> Predicate {
        Predicate::Logic {
            op: Logic::And,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn or(lhs: Predicate, rhs: Predicate) -> Predicate {
        Predicate::Logic {
            op: Logic::Or,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    /// Number of comparison / flag leaves.
    pub fn atom_count(&self) -> usize {
        match self {
            Predicate::Compare { .. } | Predicate::Flag(_) => 1,
            Predicate::Logic { lhs, rhs, .. } => lhs.atom_count() + rhs.atom_count(),
        }
    }

    pub fn has_computation(&self) -> bool {
        match self {
            Predicate::Compare { lhs, rhs, .. } => lhs.is_computation() || rhs.is_computation(),
            Predicate::Logic { lhs, rhs, .. } => lhs.has_computation() || rhs.has_computation(),
            Predicate::Flag(_) => false,
        }
    }

    pub fn reads(&self, out: &mut BTreeSet<Var>) {
        match self {
            Predicate::Compare { lhs, rhs, .. } => {
                lhs.reads(out);
                rhs.reads(out);
            }
            Predicate::Logic { lhs, rhs, .. } => {
                lhs.reads(out);
                rhs.reads(out);
            }
            Predicate::Flag(v) => {
                out.insert(*v);
            }
        }
    }

    /// Leaves in left-to-right order.
    pub fn atoms(&self) -> Vec<&Predicate> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Predicate>) {
        match self {
            Predicate::Logic { lhs, rhs, .. } => {
                lhs.collect_atoms(out);
                rhs.collect_atoms(out);
            }
            atom => out.push(atom),
        }
    }

    fn exprs(&self) -> Vec<&Expr> {
        match self {
            Predicate::Compare { lhs, rhs, .. } => vec![lhs, rhs],
            Predicate::Logic { lhs, rhs, .. } => {
                let mut v = lhs.exprs();
                v.extend(rhs.exprs());
                v
            }
            Predicate::Flag(_) => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopBound {
    /// Fixed iteration count.
    Counted(u32),
    /// Iterate while the predicate holds.
    While(Predicate),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stmt {
    Assign {
        target: Var,
        value: Expr,
    },
    If {
        cond: Predicate,
        then_body: Vec<Stmt>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        else_body: Option<Vec<Stmt>>,
    },
    Loop {
        bound: LoopBound,
        body: Vec<Stmt>,
    },
    Return(Var),
}

impl Stmt {
    pub fn assign(target: Var, value: Expr) -> Stmt {
        Stmt::Assign { target, value }
    }

    pub fn if_then(cond: Predicate, then_body: Vec<Stmt>) -> Stmt {
        Stmt::If {
            cond,
            then_body,
            else_body: None,
        }
    }

    pub fn if_else(cond: Predicate, then_body: Vec<Stmt>, else_body: Vec<Stmt>) -> Stmt {
        Stmt::If {
            cond,
            then_body,
            else_body: Some(else_body),
        }
    }

    pub fn counted(times: u32, body: Vec<Stmt>) -> Stmt {
        Stmt::Loop {
            bound: LoopBound::Counted(times),
            body,
        }
    }

    pub fn while_loop(cond: Predicate, body: Vec<Stmt>) -> Stmt {
        Stmt::Loop {
            bound: LoopBound::While(cond),
            body,
        }
    }

    /// Executable nodes in this subtree: the statement itself plus its nested blocks.
    pub fn node_count(&self) -> usize {
        match self {
            Stmt::Assign { .. } | Stmt::Return(_) => 1,
            Stmt::If {
                then_body,
                else_body,
                ..
            } => 1 + block_nodes(then_body) + else_body.as_deref().map(block_nodes).unwrap_or(0),
            Stmt::Loop { body, .. } => 1 + block_nodes(body),
        }
    }

    fn is_structure(&self) -> bool {
        matches!(self, Stmt::If { .. } | Stmt::Loop { .. })
    }

    fn child_blocks(&self) -> Vec<&[Stmt]> {
        match self {
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                let mut v: Vec<&[Stmt]> = vec![then_body];
                if let Some(e) = else_body {
                    v.push(e);
                }
                v
            }
            Stmt::Loop { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }
}

pub fn block_nodes(block: &[Stmt]) -> usize {
    block.iter().map(Stmt::node_count).sum()
}

/// Visits every statement in preorder; the visit index is the statement's node id.
pub fn walk<'a>(block: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for stmt in block {
        f(stmt);
        for child in stmt.child_blocks() {
            walk(child, f);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureCategory {
    Branch,
    Loop,
    NestedLoop,
    Sequence,
    SequentialBranch,
    SequentialBranchWithElse,
    SequentialLoop,
}

impl StructureCategory {
    /// All categories, ordered alphabetically by display name.
    pub const ALL: [StructureCategory; 7] = [
        StructureCategory::Branch,
        StructureCategory::Loop,
        StructureCategory::NestedLoop,
        StructureCategory::Sequence,
        StructureCategory::SequentialBranch,
        StructureCategory::SequentialBranchWithElse,
        StructureCategory::SequentialLoop,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            StructureCategory::Branch => "Branch",
            StructureCategory::Loop => "Loop",
            StructureCategory::NestedLoop => "Nested Loop",
            StructureCategory::Sequence => "Sequence",
            StructureCategory::SequentialBranch => "Sequential Branch",
            StructureCategory::SequentialBranchWithElse => "Sequential Branch with Else",
            StructureCategory::SequentialLoop => "Sequential Loop",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            StructureCategory::Branch => "branch",
            StructureCategory::Loop => "loop",
            StructureCategory::NestedLoop => "nested_loop",
            StructureCategory::Sequence => "sequence",
            StructureCategory::SequentialBranch => "sequential_branch",
            StructureCategory::SequentialBranchWithElse => "sequential_branch_with_else",
            StructureCategory::SequentialLoop => "sequential_loop",
        }
    }

    /// Accepts slugs, display names and CamelCase names, case-insensitively.
    pub fn parse(s: &str) -> Option<StructureCategory> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        StructureCategory::ALL.into_iter().find(|c| {
            let slug: String = c.slug().chars().filter(|c| *c != '_').collect();
            slug == norm
        })
    }
}

impl fmt::Display for StructureCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// What a template hole (or the prompt marker) stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceholderKind {
    XDef,
    YDef,
    XCUse,
    YCUse,
    XPUse,
    YPUse,
    CompoundPredicate,
    /// Constant iteration count for a counted loop.
    LoopBound,
    PromptMarker,
}

impl PlaceholderKind {
    pub const ALL: [PlaceholderKind; 9] = [
        PlaceholderKind::XDef,
        PlaceholderKind::YDef,
        PlaceholderKind::XCUse,
        PlaceholderKind::YCUse,
        PlaceholderKind::XPUse,
        PlaceholderKind::YPUse,
        PlaceholderKind::CompoundPredicate,
        PlaceholderKind::LoopBound,
        PlaceholderKind::PromptMarker,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            PlaceholderKind::XDef => "x_def",
            PlaceholderKind::YDef => "y_def",
            PlaceholderKind::XCUse => "x_cuse",
            PlaceholderKind::YCUse => "y_cuse",
            PlaceholderKind::XPUse => "x_puse",
            PlaceholderKind::YPUse => "y_puse",
            PlaceholderKind::CompoundPredicate => "compound",
            PlaceholderKind::LoopBound => "loop_bound",
            PlaceholderKind::PromptMarker => "prompt_marker",
        }
    }

    pub fn from_slug(s: &str) -> Option<PlaceholderKind> {
        PlaceholderKind::ALL.into_iter().find(|k| k.slug() == s)
    }

    pub fn is_predicate(self) -> bool {
        matches!(
            self,
            PlaceholderKind::XPUse | PlaceholderKind::YPUse | PlaceholderKind::CompoundPredicate
        )
    }

    pub fn is_assignment(self) -> bool {
        matches!(
            self,
            PlaceholderKind::XDef
                | PlaceholderKind::YDef
                | PlaceholderKind::XCUse
                | PlaceholderKind::YCUse
        )
    }
}

impl fmt::Display for PlaceholderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityLevel {
    Low,
    LowMid,
    Mid,
    MidHigh,
    High,
}

impl ComplexityLevel {
    pub fn label(self) -> &'static str {
        match self {
            ComplexityLevel::Low => "L",
            ComplexityLevel::LowMid => "L-M",
            ComplexityLevel::Mid => "M",
            ComplexityLevel::MidHigh => "M-H",
            ComplexityLevel::High => "H",
        }
    }

    pub fn parse(s: &str) -> Option<ComplexityLevel> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "l" | "low" => Some(ComplexityLevel::Low),
            "lm" | "lowmid" => Some(ComplexityLevel::LowMid),
            "m" | "mid" | "middle" => Some(ComplexityLevel::Mid),
            "mh" | "midhigh" => Some(ComplexityLevel::MidHigh),
            "h" | "high" => Some(ComplexityLevel::High),
            _ => None,
        }
    }
}

impl fmt::Display for ComplexityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A generated (or hand-built) benchmark program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramSpec {
    pub id: String,
    pub category: StructureCategory,
    pub params: Vec<Var>,
    pub body: Vec<Stmt>,
    /// Template slot name to catalog entry id.
    #[serde(default)]
    pub binding: BTreeMap<String, String>,
    pub complexity: ComplexityLevel,
}

impl ProgramSpec {
    /// Builds a program and derives its complexity level from the body.
    pub fn new(
        id: impl Into<String>,
        category: StructureCategory,
        params: Vec<Var>,
        body: Vec<Stmt>,
        binding: BTreeMap<String, String>,
    ) -> ProgramSpec {
        let complexity = classify_body(&body);
        ProgramSpec {
            id: id.into(),
            category,
            params,
            body,
            binding,
            complexity,
        }
    }

    pub fn node_count(&self) -> usize {
        block_nodes(&self.body)
    }

    pub fn returned_var(&self) -> Option<Var> {
        match self.body.last() {
            Some(Stmt::Return(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn predicates(&self) -> Vec<&Predicate> {
        let mut out = Vec::new();
        walk(&self.body, &mut |s| match s {
            Stmt::If { cond, .. } => out.push(cond),
            Stmt::Loop {
                bound: LoopBound::While(p),
                ..
            } => out.push(p),
            _ => {}
        });
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnboundVariable(Var),
    MissingReturn,
    MultipleReturns,
    ReturnNotLast,
    DuplicateParam(Var),
    EmptyBlock,
    ExprTooDeep(usize),
    ZeroIterationLoop,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnboundVariable(v) => write!(f, "unbound variable {v}"),
            Violation::MissingReturn => f.write_str("missing return"),
            Violation::MultipleReturns => f.write_str("more than one return"),
            Violation::ReturnNotLast => f.write_str("return is not the final statement"),
            Violation::DuplicateParam(v) => write!(f, "duplicate parameter {v}"),
            Violation::EmptyBlock => f.write_str("empty block"),
            Violation::ExprTooDeep(d) => {
                write!(f, "expression depth {d} exceeds {MAX_EXPR_DEPTH}")
            }
            Violation::ZeroIterationLoop => f.write_str("counted loop with zero iterations"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

pub fn validate_program(p: &ProgramSpec) -> ValidationReport {
    let mut violations = Vec::new();

    let mut defined = BTreeSet::new();
    for v in &p.params {
        if !defined.insert(*v) {
            violations.push(Violation::DuplicateParam(*v));
        }
    }

    let returns = count_returns(&p.body);
    match returns {
        0 => violations.push(Violation::MissingReturn),
        1 => {}
        _ => violations.push(Violation::MultipleReturns),
    }
    if returns >= 1 && !matches!(p.body.last(), Some(Stmt::Return(_))) {
        violations.push(Violation::ReturnNotLast);
    }

    let mut unbound = BTreeSet::new();
    check_block(&p.body, &mut defined, &mut unbound, &mut violations);
    violations.extend(unbound.into_iter().map(Violation::UnboundVariable));

    ValidationReport { violations }
}

fn count_returns(block: &[Stmt]) -> usize {
    let mut n = 0;
    walk(block, &mut |s| {
        if matches!(s, Stmt::Return(_)) {
            n += 1;
        }
    });
    n
}

fn note_reads(reads: BTreeSet<Var>, defined: &BTreeSet<Var>, unbound: &mut BTreeSet<Var>) {
    unbound.extend(reads.into_iter().filter(|v| !defined.contains(v)));
}

fn check_expr(e: &Expr, violations: &mut Vec<Violation>) {
    let d = e.depth();
    if d > MAX_EXPR_DEPTH {
        violations.push(Violation::ExprTooDeep(d));
    }
}

fn check_block(
    block: &[Stmt],
    defined: &mut BTreeSet<Var>,
    unbound: &mut BTreeSet<Var>,
    violations: &mut Vec<Violation>,
) {
    for stmt in block {
        match stmt {
            Stmt::Assign { target, value } => {
                check_expr(value, violations);
                let mut r = BTreeSet::new();
                value.reads(&mut r);
                note_reads(r, defined, unbound);
                defined.insert(*target);
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                for e in cond.exprs() {
                    check_expr(e, violations);
                }
                let mut r = BTreeSet::new();
                cond.reads(&mut r);
                note_reads(r, defined, unbound);
                if then_body.is_empty() || else_body.as_ref().is_some_and(Vec::is_empty) {
                    violations.push(Violation::EmptyBlock);
                }
                let mut then_defs = defined.clone();
                check_block(then_body, &mut then_defs, unbound, violations);
                let mut else_defs = defined.clone();
                if let Some(e) = else_body {
                    check_block(e, &mut else_defs, unbound, violations);
                }
                *defined = then_defs.intersection(&else_defs).copied().collect();
            }
            Stmt::Loop { bound, body } => {
                if body.is_empty() {
                    violations.push(Violation::EmptyBlock);
                }
                let runs_at_least_once = match bound {
                    LoopBound::Counted(0) => {
                        violations.push(Violation::ZeroIterationLoop);
                        false
                    }
                    LoopBound::Counted(_) => true,
                    LoopBound::While(cond) => {
                        for e in cond.exprs() {
                            check_expr(e, violations);
                        }
                        let mut r = BTreeSet::new();
                        cond.reads(&mut r);
                        note_reads(r, defined, unbound);
                        false
                    }
                };
                let mut body_defs = defined.clone();
                check_block(body, &mut body_defs, unbound, violations);
                if runs_at_least_once {
                    *defined = body_defs;
                }
            }
            Stmt::Return(v) => {
                if !defined.contains(v) {
                    unbound.insert(*v);
                }
            }
        }
    }
}

/// Decision points (branches and loops) plus one.
pub fn cyclomatic(p: &ProgramSpec) -> usize {
    let mut decisions = 0;
    walk(&p.body, &mut |s| {
        if s.is_structure() {
            decisions += 1;
        }
    });
    decisions + 1
}

#[derive(Debug, thiserror::Error)]
#[error("cannot classify invalid program {id}: {report}")]
pub struct ClassificationError {
    pub id: String,
    pub report: ValidationReport,
}

/// How multiple control structures are arranged relative to each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formation {
    Single,
    Sequential,
    Nested,
    Mixed,
}

/// Complexity of a predicate by shape: number of leaves and whether any
/// comparison operand is itself a computation.
pub fn predicate_level(p: &Predicate) -> ComplexityLevel {
    match (p.atom_count(), p.has_computation()) {
        (1, false) => ComplexityLevel::Low,
        (1, true) | (2, false) => ComplexityLevel::Mid,
        (2, true) | (_, false) => ComplexityLevel::MidHigh,
        (_, true) => ComplexityLevel::High,
    }
}

/// Complexity of a single assignment: only `+ - * %` occur in this model, all
/// of which are the simple-arithmetic row.
pub fn assignment_level(_value: &Expr) -> ComplexityLevel {
    ComplexityLevel::Low
}

pub fn formation(block: &[Stmt]) -> Formation {
    let mut nested = false;
    let mut sequential = false;
    scan_formation(block, &mut nested, &mut sequential);
    match (nested, sequential) {
        (false, false) => Formation::Single,
        (false, true) => Formation::Sequential,
        (true, false) => Formation::Nested,
        (true, true) => Formation::Mixed,
    }
}

fn scan_formation(block: &[Stmt], nested: &mut bool, sequential: &mut bool) {
    if block.iter().filter(|s| s.is_structure()).count() >= 2 {
        *sequential = true;
    }
    for s in block.iter().filter(|s| s.is_structure()) {
        for child in s.child_blocks() {
            if child.iter().any(Stmt::is_structure) {
                *nested = true;
            }
            scan_formation(child, nested, sequential);
        }
    }
}

fn classify_body(body: &[Stmt]) -> ComplexityLevel {
    let mut level = ComplexityLevel::Low;
    let mut assignments = 0usize;
    let mut structures = 0usize;
    walk(body, &mut |s| match s {
        Stmt::Assign { value, .. } => {
            assignments += 1;
            level = level.max(assignment_level(value));
        }
        Stmt::If { cond, .. } => {
            structures += 1;
            level = level.max(predicate_level(cond));
        }
        Stmt::Loop { bound, .. } => {
            structures += 1;
            if let LoopBound::While(cond) = bound {
                level = level.max(predicate_level(cond));
            }
        }
        Stmt::Return(_) => {}
    });

    if assignments > 3 {
        level = level.max(ComplexityLevel::MidHigh);
    }
    // A straight-line body is one basic structure.
    level = level.max(match structures.max(1) {
        1 => ComplexityLevel::Low,
        2 => ComplexityLevel::LowMid,
        _ => ComplexityLevel::MidHigh,
    });
    level.max(match formation(body) {
        Formation::Single => ComplexityLevel::Low,
        Formation::Sequential => ComplexityLevel::LowMid,
        Formation::Nested => ComplexityLevel::MidHigh,
        Formation::Mixed => ComplexityLevel::High,
    })
}

/// Maximum level triggered by any guiding-principle row.
pub fn classify_complexity(p: &ProgramSpec) -> Result<ComplexityLevel, ClassificationError> {
    let report = validate_program(p);
    if !report.is_valid() {
        return Err(ClassificationError {
            id: p.id.clone(),
            report,
        });
    }
    Ok(classify_body(&p.body))
}
