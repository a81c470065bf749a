//! Test-case extraction from free-text model responses.
//!
//! Three recognizers run in priority order over the whole response:
//!
//! 1. assertion statements (`assert compute(6, 10) == 29`, `assertEqual`,
//!    `assertEquals`), inside or outside code fences;
//! 2. labeled inputs (`Input 1: (x, y) = (6, 10)`) paired with an
//!    `Expected: 29` / `Output: 29` line that appears before the next label;
//! 3. call expressions in prose (`compute(6, 10) returns 29`).
//!
//! A match whose span overlaps an already accepted match is dropped. Results
//! are ordered by span start.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::sync::OnceLock;

use num_bigint::BigInt;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::program::{ProgramSpec, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Assertion,
    LabeledInput,
    CallExpression,
}

impl Strategy {
    pub fn slug(self) -> &'static str {
        match self {
            Strategy::Assertion => "assertion",
            Strategy::LabeledInput => "labeled_input",
            Strategy::CallExpression => "call_expression",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Byte range into the response text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInput {
    /// Variable name when the response spells it out (`x = 6`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub literal: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTestCase {
    pub inputs: Vec<RawInput>,
    pub expected: Option<String>,
    pub span: Span,
    pub strategy: Strategy,
}

/// A test case bound to a program's parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub program_id: String,
    pub index: usize,
    #[serde(with = "crate::intser::map")]
    pub inputs: BTreeMap<Var, BigInt>,
    #[serde(with = "crate::intser::option", default)]
    pub expected: Option<BigInt>,
    pub complete: bool,
}

/// A raw case that could not be bound to the program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Malformed {
    pub reason: String,
    pub has_expected: bool,
}

/// One persisted extraction result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedCase {
    pub program_id: String,
    pub index: usize,
    pub strategy: Strategy,
    pub span: Span,
    #[serde(with = "crate::intser::map", default)]
    pub inputs: BTreeMap<Var, BigInt>,
    #[serde(with = "crate::intser::option", default)]
    pub expected: Option<BigInt>,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub malformed: Option<String>,
}

impl ExtractedCase {
    pub fn test_case(&self) -> Option<TestCase> {
        if self.malformed.is_some() {
            return None;
        }
        Some(TestCase {
            program_id: self.program_id.clone(),
            index: self.index,
            inputs: self.inputs.clone(),
            expected: self.expected.clone(),
            complete: self.complete,
        })
    }
}

const LIT: &str = r"[+-]?[^\s,;)\]}`*]+";

fn assertion_patterns() -> &'static [Regex; 4] {
    static RE: OnceLock<[Regex; 4]> = OnceLock::new();
    RE.get_or_init(|| {
        let call = r"(?:\w+\.)?compute\s*\((?P<args>[^()\n]*)\)";
        [
            Regex::new(&format!(r"assert\s+{call}\s*==\s*(?P<exp>{LIT})")).unwrap(),
            Regex::new(&format!(r"assert\s+(?P<exp>{LIT})\s*==\s*{call}")).unwrap(),
            Regex::new(&format!(
                r"assertEquals?\s*\(\s*{call}\s*,\s*(?P<exp>{LIT})\s*\)"
            ))
            .unwrap(),
            Regex::new(&format!(
                r"assertEquals?\s*\(\s*(?P<exp>{LIT})\s*,\s*{call}\s*\)"
            ))
            .unwrap(),
        ]
    })
}

fn label_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\binputs?\b(?:\s*#?\s*\d+)?\s*\**\s*:\s*\**\s*(?P<rest>[^\n]*)").unwrap()
    })
}

fn tuple_assignment() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\(\s*(?P<names>[^()]*)\)\s*=\s*\((?P<vals>[^()]*)\)").unwrap())
}

fn bare_tuple() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\((?P<vals>[^()]*)\)").unwrap())
}

fn named_list() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:[A-Za-z_]\w*\s*=\s*[+-]?\w+\s*,?\s*(?:and\s+)?)+").unwrap())
}

fn expected_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"(?i)\b(?:expected(?:\s+(?:output|result|value))?|output|result)\b\s*\**\s*(?::|=|is)\s*\**\s*`?(?P<exp>{LIT})"
        ))
        .unwrap()
    })
}

fn call_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"(?:\w+\.)?compute\s*\((?P<args>[^()\n]*)\)`?\s*(?:==|->|=>|→|should\s+return|returns)\s*`?(?P<exp>{LIT})"
        ))
        .unwrap()
    })
}

fn clean_literal(s: &str) -> String {
    s.trim().trim_end_matches(['.', ':']).to_string()
}

fn split_args(args: &str) -> Vec<RawInput> {
    if args.trim().is_empty() {
        return Vec::new();
    }
    args.split(',')
        .map(|a| match a.split_once('=') {
            Some((name, value)) if !name.trim().is_empty() => RawInput {
                name: Some(name.trim().to_string()),
                literal: clean_literal(value),
            },
            _ => RawInput {
                name: None,
                literal: clean_literal(a),
            },
        })
        .collect()
}

fn assertions(text: &str, out: &mut Vec<RawTestCase>) {
    for re in assertion_patterns() {
        for c in re.captures_iter(text) {
            let whole = c.get(0).unwrap();
            out.push(RawTestCase {
                inputs: split_args(&c["args"]),
                expected: Some(clean_literal(&c["exp"])),
                span: Span {
                    start: whole.start(),
                    end: whole.end(),
                },
                strategy: Strategy::Assertion,
            });
        }
    }
}

fn labeled_inputs(rest: &str) -> Option<(Vec<RawInput>, usize)> {
    if let Some(c) = tuple_assignment().captures(rest) {
        let names: Vec<&str> = c["names"].split(',').map(str::trim).collect();
        let vals: Vec<&str> = c["vals"].split(',').collect();
        let inputs = if names.len() == vals.len() {
            names
                .iter()
                .zip(&vals)
                .map(|(n, v)| RawInput {
                    name: Some(n.to_string()),
                    literal: clean_literal(v),
                })
                .collect()
        } else {
            split_args(&c["vals"])
        };
        return Some((inputs, c.get(0).unwrap().end()));
    }
    if let Some(c) = bare_tuple().captures(rest) {
        return Some((split_args(&c["vals"]), c.get(0).unwrap().end()));
    }
    if let Some(m) = named_list().find(rest) {
        let inputs = m
            .as_str()
            .split(',')
            .flat_map(|part| part.split(" and "))
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let (n, v) = p.split_once('=').unwrap_or(("", p));
                RawInput {
                    name: Some(n.trim().to_string()).filter(|n| !n.is_empty()),
                    literal: clean_literal(v),
                }
            })
            .collect();
        return Some((inputs, m.end()));
    }
    None
}

fn labeled(text: &str, out: &mut Vec<RawTestCase>) {
    let labels: Vec<_> = label_pattern().captures_iter(text).collect();
    for (i, c) in labels.iter().enumerate() {
        let rest = c.name("rest").unwrap();
        let Some((inputs, consumed)) = labeled_inputs(rest.as_str()) else {
            continue;
        };
        if inputs.is_empty() {
            continue;
        }
        let start = c.get(0).unwrap().start();
        let mut end = rest.start() + consumed;
        let window_end = labels
            .get(i + 1)
            .map_or(text.len(), |n| n.get(0).unwrap().start());
        let window = &text[end..window_end];
        let expected = expected_pattern().captures(window).map(|e| {
            let m = e.name("exp").unwrap();
            end += m.end();
            clean_literal(m.as_str())
        });
        out.push(RawTestCase {
            inputs,
            expected,
            span: Span { start, end },
            strategy: Strategy::LabeledInput,
        });
    }
}

fn calls(text: &str, out: &mut Vec<RawTestCase>) {
    for c in call_pattern().captures_iter(text) {
        let whole = c.get(0).unwrap();
        let inputs = split_args(&c["args"]);
        if inputs.is_empty() {
            continue;
        }
        out.push(RawTestCase {
            inputs,
            expected: Some(clean_literal(&c["exp"])),
            span: Span {
                start: whole.start(),
                end: whole.end(),
            },
            strategy: Strategy::CallExpression,
        });
    }
}

/// Extracts raw test cases from a response, ordered by span start.
pub fn parse_response(text: &str) -> Vec<RawTestCase> {
    let mut accepted: Vec<RawTestCase> = Vec::new();
    let passes: [fn(&str, &mut Vec<RawTestCase>); 3] = [assertions, labeled, calls];
    for pass in passes {
        let mut found = Vec::new();
        pass(text, &mut found);
        found.sort_by_key(|r| (r.span.start, r.span.end));
        for r in found {
            if r.inputs.is_empty() || accepted.iter().any(|a| a.span.overlaps(&r.span)) {
                continue;
            }
            accepted.push(r);
        }
    }
    accepted.sort_by_key(|r| r.span.start);
    accepted
}

fn parse_int(literal: &str) -> Option<BigInt> {
    literal.parse().ok()
}

/// Binds a raw case to `p`'s parameters: by name when every input is named,
/// positionally otherwise.
pub fn bind(raw: &RawTestCase, p: &ProgramSpec, index: usize) -> Result<TestCase, Malformed> {
    let malformed = |reason: String| Malformed {
        reason,
        has_expected: raw.expected.is_some(),
    };
    if raw.inputs.len() != p.params.len() {
        return Err(malformed(format!(
            "expected {} inputs, found {}",
            p.params.len(),
            raw.inputs.len()
        )));
    }
    let named = raw.inputs.iter().all(|i| i.name.is_some());
    let mut inputs = BTreeMap::new();
    for (pos, input) in raw.inputs.iter().enumerate() {
        let var = if named {
            let name = input.name.as_deref().unwrap_or_default();
            match Var::from_name(name).filter(|v| p.params.contains(v)) {
                Some(v) => v,
                None => return Err(malformed(format!("unknown parameter `{name}`"))),
            }
        } else {
            p.params[pos]
        };
        let Some(value) = parse_int(&input.literal) else {
            return Err(malformed(format!("non-integer input `{}`", input.literal)));
        };
        if inputs.insert(var, value).is_some() {
            return Err(malformed(format!("parameter {var} given twice")));
        }
    }
    let expected = match &raw.expected {
        None => None,
        Some(lit) => match parse_int(lit) {
            Some(v) => Some(v),
            None => return Err(malformed(format!("non-integer expected value `{lit}`"))),
        },
    };
    Ok(TestCase {
        program_id: p.id.clone(),
        index,
        inputs,
        complete: expected.is_some(),
        expected,
    })
}

/// Parses and binds every case in `response`, numbering them from zero.
pub fn extract(response: &str, p: &ProgramSpec) -> Vec<ExtractedCase> {
    parse_response(response)
        .iter()
        .enumerate()
        .map(|(index, raw)| {
            let base = ExtractedCase {
                program_id: p.id.clone(),
                index,
                strategy: raw.strategy,
                span: raw.span,
                inputs: BTreeMap::new(),
                expected: None,
                complete: false,
                malformed: None,
            };
            match bind(raw, p, index) {
                Ok(tc) => ExtractedCase {
                    inputs: tc.inputs,
                    expected: tc.expected,
                    complete: tc.complete,
                    ..base
                },
                Err(m) => ExtractedCase {
                    complete: m.has_expected,
                    malformed: Some(m.reason),
                    ..base
                },
            }
        })
        .collect()
}
