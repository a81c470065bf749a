//! Candidate statements that fill template placeholders.
//!
//! A catalog file is line oriented and meant to be edited by hand:
//!
//! ```text
//! # comment
//! version: default-1
//! xp.05.gt | x_puse   | x > 5      | boundary
//! xc.add10 | x_cuse   | x = x + 10 | computation
//! lb.3     | loop_bound | range(3) | iteration
//! ```
//!
//! Fields are `id | placeholder | fragment | tags`. Fragments use the
//! Python-style syntax understood by [`crate::syntax`]; tags are a
//! comma-separated subset of `boundary`, `computation`, `iteration`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::program::{
    assignment_level, predicate_level, BinOp, ComplexityLevel, Expr, PlaceholderKind, Predicate,
    RelOp, Var,
};
use crate::render::{render_assignment, render_predicate, Dialect};
use crate::syntax::{self, SyntaxError};

pub const DEFAULT_VERSION: &str = "default-1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    Boundary,
    Computation,
    Iteration,
}

impl Goal {
    pub fn slug(self) -> &'static str {
        match self {
            Goal::Boundary => "boundary",
            Goal::Computation => "computation",
            Goal::Iteration => "iteration",
        }
    }

    pub fn from_slug(s: &str) -> Option<Goal> {
        match s {
            "boundary" => Some(Goal::Boundary),
            "computation" => Some(Goal::Computation),
            "iteration" => Some(Goal::Iteration),
            _ => None,
        }
    }
}

/// The statement or predicate fragment a catalog entry contributes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fragment {
    Assign {
        target: Var,
        value: Expr,
    },
    Predicate(Predicate),
    /// Iteration count of a counted loop.
    Count(u32),
}

impl Fragment {
    /// Python-style source text, as stored in catalog files.
    pub fn source(&self) -> String {
        match self {
            Fragment::Assign { target, value } => {
                render_assignment(*target, value, Dialect::PythonStyle)
            }
            Fragment::Predicate(p) => render_predicate(p, Dialect::PythonStyle),
            Fragment::Count(n) => format!("range({n})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: String,
    pub placeholder: PlaceholderKind,
    pub payload: Fragment,
    pub tags: BTreeSet<Goal>,
}

impl CatalogEntry {
    pub fn new(
        id: impl Into<String>,
        placeholder: PlaceholderKind,
        payload: Fragment,
        tags: impl IntoIterator<Item = Goal>,
    ) -> CatalogEntry {
        CatalogEntry {
            id: id.into(),
            placeholder,
            payload,
            tags: tags.into_iter().collect(),
        }
    }

    /// Derived from the payload shape, never stored.
    pub fn level(&self) -> ComplexityLevel {
        match &self.payload {
            Fragment::Assign { value, .. } => assignment_level(value),
            Fragment::Predicate(p) => predicate_level(p),
            Fragment::Count(_) => ComplexityLevel::Low,
        }
    }

    /// Checks that the payload has the shape the placeholder kind requires.
    pub fn check_kind(&self) -> Result<(), String> {
        let mut reads = BTreeSet::new();
        let ok = match (&self.placeholder, &self.payload) {
            (PlaceholderKind::PromptMarker, _) => {
                return Err("the prompt marker cannot be a catalog entry".into())
            }
            (k, Fragment::Assign { target, value }) if k.is_assignment() => {
                value.reads(&mut reads);
                let (want_target, is_use) = match k {
                    PlaceholderKind::XDef => (Var::X, false),
                    PlaceholderKind::YDef => (Var::Y, false),
                    PlaceholderKind::XCUse => (Var::X, true),
                    _ => (Var::Y, true),
                };
                if *target != want_target {
                    return Err(format!("{k} must assign {want_target}, not {target}"));
                }
                if is_use && !reads.contains(target) {
                    return Err(format!("{k} must read {target} in its right-hand side"));
                }
                if !is_use && !reads.is_empty() {
                    return Err(format!("{k} must assign a constant"));
                }
                true
            }
            (k, Fragment::Predicate(p)) if k.is_predicate() => {
                p.reads(&mut reads);
                match k {
                    PlaceholderKind::XPUse if p.atom_count() != 1 || !reads.contains(&Var::X) => {
                        return Err("x_puse must be a single comparison reading x".into())
                    }
                    PlaceholderKind::YPUse
                        if p.atom_count() != 1 || reads != BTreeSet::from([Var::Y]) =>
                    {
                        return Err("y_puse must be a single comparison reading only y".into())
                    }
                    PlaceholderKind::CompoundPredicate if p.atom_count() < 2 => {
                        return Err("compound must combine at least two comparisons".into())
                    }
                    _ => true,
                }
            }
            (PlaceholderKind::LoopBound, Fragment::Count(n)) => *n > 0,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(format!(
                "payload `{}` does not fit placeholder {}",
                self.payload.source(),
                self.placeholder
            ))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub version: String,
    pub entries: Vec<CatalogEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("line {line}, column {column}{}: {message}", entry.as_ref().map(|e| format!(" (entry `{e}`)")).unwrap_or_default())]
    Parse {
        line: usize,
        column: usize,
        entry: Option<String>,
        message: String,
    },
    #[error("duplicate entry id `{id}`")]
    DuplicateId { id: String },
    #[error("entry `{id}`: {reason}")]
    KindMismatch { id: String, reason: String },
    #[error("placeholder {0} has no catalog entries")]
    UnknownPlaceholder(PlaceholderKind),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Catalog {
    pub fn new(
        version: impl Into<String>,
        entries: Vec<CatalogEntry>,
    ) -> Result<Catalog, CatalogError> {
        let c = Catalog {
            version: version.into(),
            entries,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn empty() -> Catalog {
        Catalog {
            version: "empty".into(),
            entries: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(CatalogError::DuplicateId { id: e.id.clone() });
            }
            e.check_kind()
                .map_err(|reason| CatalogError::KindMismatch {
                    id: e.id.clone(),
                    reason,
                })?;
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn covers(&self, kind: PlaceholderKind) -> bool {
        self.entries.iter().any(|e| e.placeholder == kind)
    }

    /// Entries of `kind` whose level does not exceed `max_level`, ordered by id.
    pub fn candidates_for(
        &self,
        kind: PlaceholderKind,
        max_level: ComplexityLevel,
    ) -> Result<Vec<&CatalogEntry>, CatalogError> {
        if kind == PlaceholderKind::PromptMarker {
            return Err(CatalogError::UnknownPlaceholder(kind));
        }
        let mut out: Vec<&CatalogEntry> = self
            .entries
            .iter()
            .filter(|e| e.placeholder == kind && e.level() <= max_level)
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }

    /// Canonical text form; [`Catalog::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# flowbench statement catalog\n");
        out.push_str(&format!("version: {}\n", self.version));
        for e in &self.entries {
            let tags: Vec<&str> = e.tags.iter().map(|t| t.slug()).collect();
            out.push_str(&format!(
                "{} | {} | {} | {}\n",
                e.id,
                e.placeholder.slug(),
                e.payload.source(),
                tags.join(",")
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Catalog, CatalogError> {
        let mut version = None;
        let mut entries = Vec::new();
        let mut first_line: HashMap<String, usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(v) = trimmed.strip_prefix("version:") {
                version = Some(v.trim().to_string());
                continue;
            }
            let entry = parse_entry(raw, line)?;
            if let Some(prev) = first_line.insert(entry.id.clone(), line) {
                return Err(CatalogError::Parse {
                    line,
                    column: 1,
                    entry: Some(entry.id.clone()),
                    message: format!("duplicate entry id (first defined on line {prev})"),
                });
            }
            entry.check_kind().map_err(|message| CatalogError::Parse {
                line,
                column: 1,
                entry: Some(entry.id.clone()),
                message,
            })?;
            entries.push(entry);
        }
        let version = version.ok_or(CatalogError::Parse {
            line: 1,
            column: 1,
            entry: None,
            message: "missing `version:` line".into(),
        })?;
        Catalog::new(version, entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Catalog::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CatalogError> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn parse_entry(raw: &str, line: usize) -> Result<CatalogEntry, CatalogError> {
    let mut fields = Vec::new();
    let mut start = 0;
    for (i, c) in raw.char_indices() {
        if c == '|' {
            fields.push((start, &raw[start..i]));
            start = i + 1;
        }
    }
    fields.push((start, &raw[start..]));
    let id_guess = fields.first().map(|(_, f)| f.trim().to_string());
    if fields.len() != 4 {
        return Err(CatalogError::Parse {
            line,
            column: 1,
            entry: id_guess,
            message: format!("expected 4 `|`-separated fields, found {}", fields.len()),
        });
    }
    let field = |idx: usize| {
        let (offset, text) = fields[idx];
        let lead = text.len() - text.trim_start().len();
        (offset + lead, text.trim())
    };
    let (_, id) = field(0);
    let perr = |column: usize, message: String| CatalogError::Parse {
        line,
        column: column + 1,
        entry: Some(id.to_string()),
        message,
    };
    if id.is_empty() || id.contains(char::is_whitespace) {
        return Err(perr(0, "entry id must be a non-empty word".into()));
    }
    let (kcol, kind_text) = field(1);
    let placeholder = PlaceholderKind::from_slug(kind_text)
        .ok_or_else(|| perr(kcol, format!("unknown placeholder `{kind_text}`")))?;
    let (fcol, frag) = field(2);
    let from_syntax = |e: SyntaxError| CatalogError::Parse {
        line,
        column: e.column,
        entry: Some(id.to_string()),
        message: e.message,
    };
    let payload = match placeholder {
        k if k.is_assignment() => {
            let (target, value) =
                syntax::parse_assignment_at(frag, line, fcol).map_err(from_syntax)?;
            Fragment::Assign { target, value }
        }
        k if k.is_predicate() => {
            Fragment::Predicate(syntax::parse_predicate_at(frag, line, fcol).map_err(from_syntax)?)
        }
        PlaceholderKind::LoopBound => {
            Fragment::Count(syntax::parse_counted_bound_at(frag, line, fcol).map_err(from_syntax)?)
        }
        _ => {
            return Err(perr(
                kcol,
                format!("placeholder {placeholder} cannot be a catalog entry"),
            ))
        }
    };
    let (tcol, tag_text) = field(3);
    let mut tags = BTreeSet::new();
    for t in tag_text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        tags.insert(Goal::from_slug(t).ok_or_else(|| perr(tcol, format!("unknown tag `{t}`")))?);
    }
    Ok(CatalogEntry {
        id: id.to_string(),
        placeholder,
        payload,
        tags,
    })
}

impl fmt::Display for Catalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn cmp_const(v: Var, op: RelOp, c: i64) -> Predicate {
    Predicate::cmp(Expr::var(v), op, Expr::lit(c))
}

fn step(v: Var, op: BinOp, k: i64) -> Fragment {
    Fragment::Assign {
        target: v,
        value: Expr::bin(op, Expr::var(v), Expr::lit(k)),
    }
}

/// The reference catalog: comparison sets against 5 and 15 for `x` and 10
/// for `y` over all six relational operators, their `and`/`or` pairings,
/// constant defs, the additive/multiplicative c-uses, and the constant-3 loop.
pub fn default_catalog() -> Catalog {
    use Goal::*;
    use PlaceholderKind as K;
    let mut entries = Vec::new();

    for c in [5, 15] {
        for op in RelOp::ALL {
            entries.push(CatalogEntry::new(
                format!("xp.{c:02}.{}", op.mnemonic()),
                K::XPUse,
                Fragment::Predicate(cmp_const(Var::X, op, c)),
                [Boundary],
            ));
        }
    }
    // Predicates with computation; gated at Mid by their shape.
    entries.push(CatalogEntry::new(
        "xp.mod2.eq",
        K::XPUse,
        Fragment::Predicate(Predicate::cmp(
            Expr::bin(BinOp::Rem, Expr::var(Var::X), Expr::lit(2)),
            RelOp::Eq,
            Expr::lit(0),
        )),
        [Boundary, Computation],
    ));
    entries.push(CatalogEntry::new(
        "xp.sum5.gt",
        K::XPUse,
        Fragment::Predicate(Predicate::cmp(
            Expr::bin(BinOp::Add, Expr::var(Var::X), Expr::var(Var::Y)),
            RelOp::Gt,
            Expr::lit(5),
        )),
        [Boundary, Computation],
    ));

    for op in RelOp::ALL {
        entries.push(CatalogEntry::new(
            format!("yp.10.{}", op.mnemonic()),
            K::YPUse,
            Fragment::Predicate(cmp_const(Var::Y, op, 10)),
            [Boundary, Iteration],
        ));
    }

    for op in RelOp::ALL {
        let x = cmp_const(Var::X, op, 5);
        let y = cmp_const(Var::Y, op, 10);
        entries.push(CatalogEntry::new(
            format!("cp.and.{}", op.mnemonic()),
            K::CompoundPredicate,
            Fragment::Predicate(Predicate::and(x.clone(), y.clone())),
            [Boundary],
        ));
        entries.push(CatalogEntry::new(
            format!("cp.or.{}", op.mnemonic()),
            K::CompoundPredicate,
            Fragment::Predicate(Predicate::or(x, y)),
            [Boundary],
        ));
    }

    for c in [15, 5] {
        entries.push(CatalogEntry::new(
            format!("xd.{c:02}"),
            K::XDef,
            Fragment::Assign {
                target: Var::X,
                value: Expr::lit(c),
            },
            [],
        ));
    }
    for c in [7, 10] {
        entries.push(CatalogEntry::new(
            format!("yd.{c:02}"),
            K::YDef,
            Fragment::Assign {
                target: Var::Y,
                value: Expr::lit(c),
            },
            [],
        ));
    }

    entries.push(CatalogEntry::new(
        "xc.add10",
        K::XCUse,
        step(Var::X, BinOp::Add, 10),
        [Computation],
    ));
    entries.push(CatalogEntry::new(
        "xc.mul7",
        K::XCUse,
        step(Var::X, BinOp::Mul, 7),
        [Computation],
    ));
    entries.push(CatalogEntry::new(
        "xc.sub7",
        K::XCUse,
        step(Var::X, BinOp::Sub, 7),
        [Computation],
    ));
    let xy = Expr::bin(BinOp::Add, Expr::var(Var::X), Expr::var(Var::Y));
    entries.push(CatalogEntry::new(
        "xc.xy.add10",
        K::XCUse,
        Fragment::Assign {
            target: Var::X,
            value: Expr::bin(BinOp::Add, xy.clone(), Expr::lit(10)),
        },
        [Computation],
    ));
    entries.push(CatalogEntry::new(
        "xc.xy.sub7",
        K::XCUse,
        Fragment::Assign {
            target: Var::X,
            value: Expr::bin(BinOp::Sub, xy, Expr::lit(7)),
        },
        [Computation],
    ));
    entries.push(CatalogEntry::new(
        "yc.add7",
        K::YCUse,
        step(Var::Y, BinOp::Add, 7),
        [Computation],
    ));
    entries.push(CatalogEntry::new(
        "yc.sub7",
        K::YCUse,
        step(Var::Y, BinOp::Sub, 7),
        [Computation],
    ));

    entries.push(CatalogEntry::new(
        "lb.3",
        K::LoopBound,
        Fragment::Count(3),
        [Iteration],
    ));

    entries.sort_by(|a, b| a.id.cmp(&b.id));
    Catalog::new(DEFAULT_VERSION, entries).expect("default catalog is valid")
}
