//! Dataset generation: control-flow templates with named holes, filled from
//! a statement catalog.
//!
//! Each template slot accepts one or more [`PlaceholderKind`]s. A binding maps
//! every slot name to a catalog entry id. Bindings are enumerated in
//! lexicographic order (first slot most significant, candidates by entry id);
//! when a category has more valid bindings than its limit, a seeded sample is
//! taken and returned in the same order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{default_catalog, Catalog, CatalogEntry, CatalogError, Fragment};
use crate::oracle::{check_termination, TerminationReport, DEFAULT_FUEL};
use crate::program::{
    validate_program, walk, BinOp, ComplexityLevel, Expr, LoopBound, PlaceholderKind, Predicate,
    ProgramSpec, RelOp, Stmt, StructureCategory, Var,
};
use crate::render::{render, sloc, Dialect, PromptTemplate};

/// Largest cross product that is materialized before sampling.
const MATERIALIZE_LIMIT: u128 = 200_000;
/// Inputs tried per program by the generation-time termination check.
pub const TERMINATION_SAMPLES: usize = 256;

use PlaceholderKind as K;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub name: String,
    pub kinds: Vec<PlaceholderKind>,
}

impl Slot {
    fn new(name: &str, kinds: &[PlaceholderKind]) -> Slot {
        Slot {
            name: name.to_string(),
            kinds: kinds.to_vec(),
        }
    }

    fn kinds_text(&self) -> String {
        self.kinds
            .iter()
            .map(|k| k.slug())
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// A statement skeleton; every hole names a slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Skeleton {
    Assign(String),
    If {
        cond: String,
        then_body: Vec<Skeleton>,
        else_body: Option<Vec<Skeleton>>,
    },
    Loop {
        bound: String,
        body: Vec<Skeleton>,
    },
    Return(Var),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub category: StructureCategory,
    pub params: Vec<Var>,
    pub slots: Vec<Slot>,
    pub skeleton: Vec<Skeleton>,
    pub prompt: PromptTemplate,
}

impl Template {
    pub fn slot(&self, name: &str) -> Option<&Slot> {
        self.slots.iter().find(|s| s.name == name)
    }
}

fn assign(slot: &str) -> Skeleton {
    Skeleton::Assign(slot.to_string())
}

fn if_then(cond: &str, then_body: Vec<Skeleton>) -> Skeleton {
    Skeleton::If {
        cond: cond.to_string(),
        then_body,
        else_body: None,
    }
}

fn if_else(cond: &str, then_body: Vec<Skeleton>, else_body: Vec<Skeleton>) -> Skeleton {
    Skeleton::If {
        cond: cond.to_string(),
        then_body,
        else_body: Some(else_body),
    }
}

fn repeat(bound: &str, body: Vec<Skeleton>) -> Skeleton {
    Skeleton::Loop {
        bound: bound.to_string(),
        body,
    }
}

pub fn template(category: StructureCategory) -> Template {
    use StructureCategory as C;
    const BOUND: &[PlaceholderKind] = &[K::LoopBound, K::YPUse];
    const X_STMT: &[PlaceholderKind] = &[K::XDef, K::XCUse];
    let (slots, skeleton) = match category {
        C::Sequence => (
            vec![
                Slot::new("y_first", &[K::YDef, K::YCUse]),
                Slot::new("y_second", &[K::YCUse]),
                Slot::new("x_first", X_STMT),
                Slot::new("x_second", &[K::XCUse]),
            ],
            vec![
                assign("y_first"),
                assign("y_second"),
                assign("x_first"),
                assign("x_second"),
            ],
        ),
        C::Branch => (
            vec![Slot::new("cond", &[K::XPUse]), Slot::new("then", X_STMT)],
            vec![if_then("cond", vec![assign("then")])],
        ),
        C::Loop => (
            vec![
                Slot::new("bound", BOUND),
                Slot::new("body_x", &[K::XCUse]),
                Slot::new("body_y", &[K::YCUse]),
            ],
            vec![repeat("bound", vec![assign("body_x"), assign("body_y")])],
        ),
        C::NestedLoop => (
            vec![
                Slot::new("outer_bound", BOUND),
                Slot::new("inner_bound", &[K::LoopBound]),
                Slot::new("body_x", &[K::XCUse]),
                Slot::new("body_y", &[K::YCUse]),
            ],
            vec![repeat(
                "outer_bound",
                vec![repeat(
                    "inner_bound",
                    vec![assign("body_x"), assign("body_y")],
                )],
            )],
        ),
        C::SequentialBranch => (
            vec![
                Slot::new("cond1", &[K::XPUse]),
                Slot::new("then1", X_STMT),
                Slot::new("cond2", &[K::YPUse, K::CompoundPredicate]),
                Slot::new("then2", X_STMT),
            ],
            vec![
                if_then("cond1", vec![assign("then1")]),
                if_then("cond2", vec![assign("then2")]),
            ],
        ),
        C::SequentialBranchWithElse => (
            vec![
                Slot::new("cond1", &[K::XPUse]),
                Slot::new("then1", X_STMT),
                Slot::new("else1", X_STMT),
                Slot::new("cond2", &[K::YPUse, K::CompoundPredicate]),
                Slot::new("then2", X_STMT),
                Slot::new("else2", X_STMT),
            ],
            vec![
                if_else("cond1", vec![assign("then1")], vec![assign("else1")]),
                if_else("cond2", vec![assign("then2")], vec![assign("else2")]),
            ],
        ),
        C::SequentialLoop => (
            vec![
                Slot::new("bound1", BOUND),
                Slot::new("body1_x", &[K::XCUse]),
                Slot::new("body1_y", &[K::YCUse]),
                Slot::new("bound2", BOUND),
                Slot::new("body2", &[K::XCUse, K::YCUse]),
            ],
            vec![
                repeat("bound1", vec![assign("body1_x"), assign("body1_y")]),
                repeat("bound2", vec![assign("body2")]),
            ],
        ),
    };
    let mut skeleton = skeleton;
    skeleton.push(Skeleton::Return(Var::X));
    Template {
        category,
        params: vec![Var::X, Var::Y],
        slots,
        skeleton,
        prompt: PromptTemplate::default(),
    }
}

/// The seven templates, in category order.
pub fn builtin_templates() -> Vec<Template> {
    StructureCategory::ALL
        .iter()
        .map(|c| template(*c))
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("unbound placeholder `{slot}` ({kinds})")]
    UnboundPlaceholder { slot: String, kinds: String },
    #[error("binding names unknown slot `{0}`")]
    UnknownSlot(String),
    #[error("slot `{slot}`: no catalog entry `{id}`")]
    UnknownEntry { slot: String, id: String },
    #[error("slot `{slot}` accepts {expected}, but entry `{id}` is {found}")]
    WrongKind {
        slot: String,
        id: String,
        expected: String,
        found: PlaceholderKind,
    },
    #[error("{category}: catalog has no {kind} entries for slot `{slot}`")]
    Uncoverable {
        category: StructureCategory,
        slot: String,
        kind: PlaceholderKind,
    },
    #[error("program {id} ({binding}) is invalid: {report}")]
    Invalid {
        id: String,
        binding: String,
        report: String,
    },
    #[error("program {id} ({binding}) does not halt within {DEFAULT_FUEL} steps on {inputs}")]
    NonTerminating {
        id: String,
        binding: String,
        inputs: String,
    },
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error("dataset is empty")]
    EmptyDataset,
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
}

pub type Binding = BTreeMap<String, String>;

fn binding_text(b: &Binding) -> String {
    b.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// `<category slug>-<first 12 hex digits of sha256(category, sorted slot=entry pairs)>`.
pub fn program_id(category: StructureCategory, binding: &Binding) -> String {
    let mut h = Sha256::new();
    h.update(category.display_name().as_bytes());
    for (slot, entry) in binding {
        h.update(b"\n");
        h.update(slot.as_bytes());
        h.update(b"=");
        h.update(entry.as_bytes());
    }
    format!("{}-{}", category.slug(), &hex::encode(h.finalize())[..12])
}

struct Filler<'a> {
    entries: HashMap<&'a str, &'a CatalogEntry>,
}

impl<'a> Filler<'a> {
    fn new(c: &'a Catalog) -> Filler<'a> {
        Filler {
            entries: c.entries.iter().map(|e| (e.id.as_str(), e)).collect(),
        }
    }

    fn entry(
        &self,
        t: &Template,
        b: &Binding,
        slot: &str,
    ) -> Result<&'a CatalogEntry, GenerationError> {
        let spec = t
            .slot(slot)
            .ok_or_else(|| GenerationError::UnknownSlot(slot.to_string()))?;
        let id = b
            .get(slot)
            .ok_or_else(|| GenerationError::UnboundPlaceholder {
                slot: slot.to_string(),
                kinds: spec.kinds_text(),
            })?;
        let e = self
            .entries
            .get(id.as_str())
            .ok_or_else(|| GenerationError::UnknownEntry {
                slot: slot.to_string(),
                id: id.clone(),
            })?;
        if !spec.kinds.contains(&e.placeholder) {
            return Err(GenerationError::WrongKind {
                slot: slot.to_string(),
                id: id.clone(),
                expected: spec.kinds_text(),
                found: e.placeholder,
            });
        }
        Ok(e)
    }

    fn block(
        &self,
        t: &Template,
        b: &Binding,
        skel: &[Skeleton],
    ) -> Result<Vec<Stmt>, GenerationError> {
        skel.iter().map(|s| self.stmt(t, b, s)).collect()
    }

    fn stmt(&self, t: &Template, b: &Binding, s: &Skeleton) -> Result<Stmt, GenerationError> {
        Ok(match s {
            Skeleton::Return(v) => Stmt::Return(*v),
            Skeleton::Assign(slot) => match &self.entry(t, b, slot)?.payload {
                Fragment::Assign { target, value } => Stmt::assign(*target, value.clone()),
                _ => unreachable!("catalog validation ties assignment kinds to assignments"),
            },
            Skeleton::If {
                cond,
                then_body,
                else_body,
            } => {
                let cond = self.predicate(t, b, cond)?;
                let then_body = self.block(t, b, then_body)?;
                match else_body {
                    Some(e) => Stmt::if_else(cond, then_body, self.block(t, b, e)?),
                    None => Stmt::if_then(cond, then_body),
                }
            }
            Skeleton::Loop { bound, body } => {
                let body = self.block(t, b, body)?;
                match &self.entry(t, b, bound)?.payload {
                    Fragment::Count(n) => Stmt::counted(*n, body),
                    Fragment::Predicate(p) => Stmt::while_loop(p.clone(), body),
                    Fragment::Assign { .. } => unreachable!("loop bounds never accept assignments"),
                }
            }
        })
    }

    fn predicate(
        &self,
        t: &Template,
        b: &Binding,
        slot: &str,
    ) -> Result<Predicate, GenerationError> {
        match &self.entry(t, b, slot)?.payload {
            Fragment::Predicate(p) => Ok(p.clone()),
            _ => unreachable!("condition slots only accept predicate kinds"),
        }
    }
}

fn instantiate_with(f: &Filler, t: &Template, b: &Binding) -> Result<ProgramSpec, GenerationError> {
    if let Some(extra) = b.keys().find(|k| t.slot(k).is_none()) {
        return Err(GenerationError::UnknownSlot(extra.clone()));
    }
    for slot in &t.slots {
        f.entry(t, b, &slot.name)?;
    }
    let body = f.block(t, b, &t.skeleton)?;
    let p = ProgramSpec::new(
        program_id(t.category, b),
        t.category,
        t.params.clone(),
        body,
        b.clone(),
    );
    let report = validate_program(&p);
    if !report.is_valid() {
        return Err(GenerationError::Invalid {
            id: p.id,
            binding: binding_text(b),
            report: report.to_string(),
        });
    }
    Ok(p)
}

/// Substitutes the bound catalog entries into the template's holes.
pub fn instantiate(
    t: &Template,
    b: &Binding,
    catalog: &Catalog,
) -> Result<ProgramSpec, GenerationError> {
    instantiate_with(&Filler::new(catalog), t, b)
}

/// Constant step `k` when `value` is `v + k`, `k + v` or `v - k`.
fn step(v: Var, value: &Expr) -> Option<i64> {
    match value {
        Expr::Bin {
            op: BinOp::Add,
            lhs,
            rhs,
        } => match (lhs.as_ref(), rhs.as_ref()) {
            (Expr::Var(a), Expr::Lit(k)) | (Expr::Lit(k), Expr::Var(a)) if *a == v => Some(*k),
            _ => None,
        },
        Expr::Bin {
            op: BinOp::Sub,
            lhs,
            rhs,
        } => match (lhs.as_ref(), rhs.as_ref()) {
            (Expr::Var(a), Expr::Lit(k)) if *a == v => k.checked_neg(),
            _ => None,
        },
        _ => None,
    }
}

/// Collects the per-iteration steps applied to `v`; `None` when some write
/// to `v` is not a constant step or happens conditionally.
fn steps(v: Var, body: &[Stmt], out: &mut Vec<i64>) -> Option<()> {
    for s in body {
        match s {
            Stmt::Assign { target, value } if *target == v => out.push(step(v, value)?),
            Stmt::Assign { .. } | Stmt::Return(_) => {}
            Stmt::Loop {
                bound: LoopBound::Counted(_),
                body,
            } => steps(v, body, out)?,
            Stmt::If { .. } | Stmt::Loop { .. } => {
                let mut writes = false;
                walk(std::slice::from_ref(s), &mut |inner| {
                    if matches!(inner, Stmt::Assign { target, .. } if *target == v) {
                        writes = true;
                    }
                });
                if writes {
                    return None;
                }
            }
        }
    }
    Some(())
}

/// Static progress rule for a `while` loop: the condition compares one
/// variable with a constant, and every iteration moves that variable toward
/// the exit by constant steps of one sign.
pub fn loop_progresses(cond: &Predicate, body: &[Stmt]) -> bool {
    let (v, op) = match cond {
        Predicate::Compare {
            lhs: Expr::Var(v),
            op,
            rhs: Expr::Lit(_),
        } => (*v, *op),
        Predicate::Compare {
            lhs: Expr::Lit(_),
            op,
            rhs: Expr::Var(v),
        } => (
            *v,
            match op {
                RelOp::Gt => RelOp::Lt,
                RelOp::Lt => RelOp::Gt,
                RelOp::Ge => RelOp::Le,
                RelOp::Le => RelOp::Ge,
                other => *other,
            },
        ),
        _ => return false,
    };
    let mut found = Vec::new();
    if steps(v, body, &mut found).is_none() || found.is_empty() {
        return false;
    }
    let up = found.iter().all(|k| *k > 0);
    let down = found.iter().all(|k| *k < 0);
    match op {
        RelOp::Gt | RelOp::Ge => down,
        RelOp::Lt | RelOp::Le => up,
        RelOp::Eq => up || down,
        RelOp::Ne => false,
    }
}

/// Every `while` loop in `p` satisfies [`loop_progresses`].
pub fn satisfies_progress_rule(p: &ProgramSpec) -> bool {
    let mut ok = true;
    walk(&p.body, &mut |s| {
        if let Stmt::Loop {
            bound: LoopBound::While(c),
            body,
        } = s
        {
            ok &= loop_progresses(c, body);
        }
    });
    ok
}

pub fn has_dynamic_loop(p: &ProgramSpec) -> bool {
    let mut found = false;
    walk(&p.body, &mut |s| {
        found |= matches!(
            s,
            Stmt::Loop {
                bound: LoopBound::While(_),
                ..
            }
        );
    });
    found
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationConfig {
    pub catalog: Catalog,
    pub categories: Vec<StructureCategory>,
    /// Catalog entries above this level are not used.
    pub max_level: ComplexityLevel,
    /// Cap on programs per category.
    pub limit: usize,
    pub limit_overrides: BTreeMap<StructureCategory, usize>,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            catalog: default_catalog(),
            categories: StructureCategory::ALL.to_vec(),
            max_level: ComplexityLevel::Mid,
            limit: 100,
            limit_overrides: BTreeMap::new(),
            seed: 42,
        }
    }
}

impl GenerationConfig {
    pub fn limit_for(&self, c: StructureCategory) -> usize {
        self.limit_overrides.get(&c).copied().unwrap_or(self.limit)
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.categories.is_empty() {
            return Err(GenerationError::Config("no categories enabled".into()));
        }
        for c in &self.categories {
            if self.limit_for(*c) == 0 {
                return Err(GenerationError::Config(format!(
                    "limit for {c} must be at least 1"
                )));
            }
        }
        self.catalog.validate()?;
        Ok(())
    }

    /// Digest of everything that influences the generated dataset.
    pub fn fingerprint(&self) -> String {
        let mut cats = self.categories.clone();
        cats.sort();
        cats.dedup();
        let mut text = self.catalog.to_text();
        let _ = write!(text, "\nmax_level={}\nseed={}\n", self.max_level, self.seed);
        for c in cats {
            let _ = writeln!(text, "{}={}", c.slug(), self.limit_for(c));
        }
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

fn category_rng(seed: u64, c: StructureCategory) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(c.slug().as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Candidate entry ids for each slot, in slot order.
fn slot_candidates<'a>(
    t: &Template,
    c: &'a Catalog,
    max_level: ComplexityLevel,
) -> Result<Vec<Vec<&'a str>>, GenerationError> {
    t.slots
        .iter()
        .map(|slot| {
            let mut ids = Vec::new();
            for kind in &slot.kinds {
                if !c.covers(*kind) {
                    return Err(GenerationError::Uncoverable {
                        category: t.category,
                        slot: slot.name.clone(),
                        kind: *kind,
                    });
                }
                ids.extend(
                    c.candidates_for(*kind, max_level)?
                        .into_iter()
                        .map(|e| e.id.as_str()),
                );
            }
            ids.sort_unstable();
            Ok(ids)
        })
        .collect()
}

fn decode(index: u128, radices: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    let mut rest = index;
    for (i, r) in radices.iter().enumerate().rev() {
        digits[i] = (rest % *r as u128) as usize;
        rest /= *r as u128;
    }
    digits
}

fn binding_for(t: &Template, cands: &[Vec<&str>], digits: &[usize]) -> Binding {
    t.slots
        .iter()
        .zip(cands)
        .zip(digits)
        .map(|((slot, ids), d)| (slot.name.clone(), ids[*d].to_string()))
        .collect()
}

/// Valid bindings for `t`, at most `limit`, in lexicographic order.
pub fn enumerate_bindings(
    t: &Template,
    c: &Catalog,
    max_level: ComplexityLevel,
    limit: usize,
    seed: u64,
) -> Result<Vec<Binding>, GenerationError> {
    let filler = Filler::new(c);
    let cands = slot_candidates(t, c, max_level)?;
    let radices: Vec<usize> = cands.iter().map(Vec::len).collect();
    if radices.contains(&0) || limit == 0 {
        return Ok(Vec::new());
    }
    let total: u128 = radices.iter().map(|r| *r as u128).product();
    let keep = |digits: &[usize]| -> Option<Binding> {
        let b = binding_for(t, &cands, digits);
        let p = instantiate_with(&filler, t, &b).ok()?;
        satisfies_progress_rule(&p).then_some(b)
    };
    let mut rng = category_rng(seed, t.category);
    if total <= MATERIALIZE_LIMIT {
        let all: Vec<Binding> = (0..total)
            .filter_map(|i| keep(&decode(i, &radices)))
            .collect();
        if all.len() <= limit {
            return Ok(all);
        }
        let mut picked = sample(&mut rng, all.len(), limit).into_vec();
        picked.sort_unstable();
        return Ok(picked.into_iter().map(|i| all[i].clone()).collect());
    }
    let mut seen = HashSet::new();
    let mut chosen = Vec::new();
    let budget = limit.saturating_mul(1000).max(10_000);
    for _ in 0..budget {
        if chosen.len() == limit {
            break;
        }
        let i = rng.gen_range(0..total);
        if !seen.insert(i) {
            continue;
        }
        if let Some(b) = keep(&decode(i, &radices)) {
            chosen.push((i, b));
        }
    }
    chosen.sort_by_key(|(i, _)| *i);
    Ok(chosen.into_iter().map(|(_, b)| b).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: StructureCategory,
    pub programs: usize,
    /// Fraction of all programs in the dataset.
    pub coverage: f64,
    pub avg_sloc_python: f64,
    pub avg_sloc_java: f64,
}

impl CategoryStats {
    pub fn avg_sloc(&self, d: Dialect) -> f64 {
        match d {
            Dialect::PythonStyle => self.avg_sloc_python,
            Dialect::JavaStyle => self.avg_sloc_java,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    /// Categories with at least one program, alphabetical.
    pub categories: Vec<CategoryStats>,
}

impl DatasetStats {
    pub fn category(&self, c: StructureCategory) -> Option<&CategoryStats> {
        self.categories.iter().find(|s| s.category == c)
    }
}

pub fn dataset_stats(programs: &[ProgramSpec]) -> Result<DatasetStats, GenerationError> {
    if programs.is_empty() {
        return Err(GenerationError::EmptyDataset);
    }
    let mut by_cat: BTreeMap<&str, (StructureCategory, usize, usize, usize)> = BTreeMap::new();
    for p in programs {
        let e = by_cat
            .entry(p.category.display_name())
            .or_insert((p.category, 0, 0, 0));
        e.1 += 1;
        e.2 += sloc(&render(p, Dialect::PythonStyle));
        e.3 += sloc(&render(p, Dialect::JavaStyle));
    }
    let total = programs.len();
    Ok(DatasetStats {
        total,
        categories: by_cat
            .into_values()
            .map(|(category, n, py, java)| CategoryStats {
                category,
                programs: n,
                coverage: n as f64 / total as f64,
                avg_sloc_python: py as f64 / n as f64,
                avg_sloc_java: java as f64 / n as f64,
            })
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// Sorted by id.
    pub programs: Vec<ProgramSpec>,
    pub fingerprint: String,
    pub stats: DatasetStats,
}

impl Dataset {
    pub fn get(&self, id: &str) -> Option<&ProgramSpec> {
        self.programs
            .binary_search_by(|p| p.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.programs[i])
    }

    /// One JSON record per line, in id order.
    pub fn to_jsonl(&self) -> String {
        programs_to_jsonl(&self.programs)
    }
}

pub fn generate_dataset(cfg: &GenerationConfig) -> Result<Dataset, GenerationError> {
    cfg.validate()?;
    let mut cats = cfg.categories.clone();
    cats.sort();
    cats.dedup();
    let filler = Filler::new(&cfg.catalog);
    let mut programs = Vec::new();
    for c in cats {
        let t = template(c);
        for b in enumerate_bindings(&t, &cfg.catalog, cfg.max_level, cfg.limit_for(c), cfg.seed)? {
            let p = instantiate_with(&filler, &t, &b)?;
            if has_dynamic_loop(&p) {
                if let TerminationReport::Fail { inputs, .. } =
                    check_termination(&p, -100..=100, TERMINATION_SAMPLES, DEFAULT_FUEL)
                {
                    return Err(GenerationError::NonTerminating {
                        id: p.id,
                        binding: binding_text(&b),
                        inputs: format!("{inputs:?}"),
                    });
                }
            }
            programs.push(p);
        }
    }
    programs.sort_by(|a, b| a.id.cmp(&b.id));
    programs.dedup_by(|a, b| a.id == b.id);
    let stats = dataset_stats(&programs)?;
    Ok(Dataset {
        programs,
        fingerprint: cfg.fingerprint(),
        stats,
    })
}

/// Dataset line: the program plus its rendered Python text and SLOC.
#[derive(Serialize, Deserialize)]
struct ProgramRecord {
    #[serde(flatten)]
    program: ProgramSpec,
    source: String,
    sloc: BTreeMap<String, usize>,
}

pub fn programs_to_jsonl(programs: &[ProgramSpec]) -> String {
    let mut out = String::new();
    for p in programs {
        let source = render(p, Dialect::PythonStyle);
        let sloc = Dialect::ALL
            .iter()
            .map(|d| (d.slug().to_string(), crate::render::sloc(&render(p, *d))))
            .collect();
        let rec = ProgramRecord {
            program: p.clone(),
            source,
            sloc,
        };
        out.push_str(&serde_json::to_string(&rec).expect("programs serialize"));
        out.push('\n');
    }
    out
}

pub fn write_dataset(path: &Path, programs: &[ProgramSpec]) -> Result<(), GenerationError> {
    fs::write(path, programs_to_jsonl(programs)).map_err(|source| GenerationError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a dataset file, re-validating every program.
pub fn read_dataset(path: &Path) -> Result<Vec<ProgramSpec>, GenerationError> {
    let text = fs::read_to_string(path).map_err(|source| GenerationError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out: Vec<ProgramSpec> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let format = |message: String| GenerationError::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let rec: ProgramRecord = serde_json::from_str(line).map_err(|e| format(e.to_string()))?;
        let p = rec.program;
        let report = validate_program(&p);
        if !report.is_valid() {
            return Err(format(format!("program {}: {report}", p.id)));
        }
        if out.last().is_some_and(|prev| prev.id >= p.id) {
            return Err(format(format!(
                "program {} is out of order or duplicated",
                p.id
            )));
        }
        out.push(p);
    }
    Ok(out)
}
