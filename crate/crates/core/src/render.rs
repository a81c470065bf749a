//! Source rendering and prompt assembly.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::program::{BinOp, Expr, Logic, LoopBound, Predicate, ProgramSpec, Stmt, Var};

pub const FUNCTION_NAME: &str = "compute";
pub const JAVA_CLASS_NAME: &str = "Program";
pub const INDENT: &str = "    ";

/// Literal token replaced by the instruction when a prompt is built.
pub const PROMPT_MARKER: &str = "#REPLACE_FOR_PROMPT";
/// Token replaced by the program source when a prompt is built.
pub const PROGRAM_SLOT: &str = "{program}";
pub const DEFAULT_INSTRUCTION: &str =
    "Given the program, please create test cases that can pass 100% statement coverage";

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Dialect {
    #[default]
    PythonStyle,
    JavaStyle,
}

impl Dialect {
    pub const ALL: [Dialect; 2] = [Dialect::PythonStyle, Dialect::JavaStyle];

    pub fn slug(self) -> &'static str {
        match self {
            Dialect::PythonStyle => "python",
            Dialect::JavaStyle => "java",
        }
    }

    pub fn parse(s: &str) -> Option<Dialect> {
        match s.to_ascii_lowercase().as_str() {
            "python" | "py" | "python_style" | "pythonstyle" => Some(Dialect::PythonStyle),
            "java" | "java_style" | "javastyle" => Some(Dialect::JavaStyle),
            _ => None,
        }
    }
}

pub fn render_expr(e: &Expr, d: Dialect) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, d, 0, false);
    out
}

fn write_expr(out: &mut String, e: &Expr, d: Dialect, parent_prec: u8, right: bool) {
    match e {
        Expr::Var(v) => out.push_str(v.name()),
        Expr::Lit(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Bin {
            op: BinOp::Rem,
            lhs,
            rhs,
        } if d == Dialect::JavaStyle => {
            // Java's `%` truncates; floorMod keeps the floored semantics.
            out.push_str("Math.floorMod(");
            write_expr(out, lhs, d, 0, false);
            out.push_str(", ");
            write_expr(out, rhs, d, 0, false);
            out.push(')');
        }
        Expr::Bin { op, lhs, rhs } => {
            let prec = op.precedence();
            let parens = prec < parent_prec || (prec == parent_prec && right);
            if parens {
                out.push('(');
            }
            write_expr(out, lhs, d, prec, false);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs, d, prec, true);
            if parens {
                out.push(')');
            }
        }
    }
}

fn logic_prec(op: Logic) -> u8 {
    match op {
        Logic::Or => 1,
        Logic::And => 2,
    }
}

pub fn render_predicate(p: &Predicate, d: Dialect) -> String {
    let mut out = String::new();
    write_predicate(&mut out, p, d, 0, false);
    out
}

fn write_predicate(out: &mut String, p: &Predicate, d: Dialect, parent_prec: u8, right: bool) {
    match p {
        Predicate::Compare { lhs, op, rhs } => {
            write_expr(out, lhs, d, 0, false);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs, d, 0, false);
        }
        Predicate::Flag(v) => match d {
            Dialect::PythonStyle => out.push_str(v.name()),
            Dialect::JavaStyle => {
                let _ = write!(out, "{v} != 0");
            }
        },
        Predicate::Logic { op, lhs, rhs } => {
            let prec = logic_prec(*op);
            let parens = prec < parent_prec || (prec == parent_prec && right);
            if parens {
                out.push('(');
            }
            write_predicate(out, lhs, d, prec, false);
            out.push_str(match (op, d) {
                (Logic::And, Dialect::PythonStyle) => " and ",
                (Logic::Or, Dialect::PythonStyle) => " or ",
                (Logic::And, Dialect::JavaStyle) => " && ",
                (Logic::Or, Dialect::JavaStyle) => " || ",
            });
            write_predicate(out, rhs, d, prec, true);
            if parens {
                out.push(')');
            }
        }
    }
}

/// `x = x + 10` in either dialect (Java adds the trailing semicolon).
pub fn render_assignment(target: Var, value: &Expr, d: Dialect) -> String {
    let semi = if d == Dialect::JavaStyle { ";" } else { "" };
    format!("{target} = {}{semi}", render_expr(value, d))
}

/// Renders the full program. Java output is wrapped in a class.
pub fn render(p: &ProgramSpec, d: Dialect) -> String {
    match d {
        Dialect::PythonStyle => render_function(p, d),
        Dialect::JavaStyle => {
            let mut out = format!("public class {JAVA_CLASS_NAME} {{\n");
            for line in render_function(p, d).lines() {
                if line.is_empty() {
                    out.push('\n');
                } else {
                    let _ = writeln!(out, "{INDENT}{line}");
                }
            }
            out.push_str("}\n");
            out
        }
    }
}

/// Renders only the function (Java: the static method without its class).
pub fn render_function(p: &ProgramSpec, d: Dialect) -> String {
    let mut out = String::new();
    let params: Vec<String> = p
        .params
        .iter()
        .map(|v| match d {
            Dialect::PythonStyle => v.name().to_string(),
            Dialect::JavaStyle => format!("int {v}"),
        })
        .collect();
    match d {
        Dialect::PythonStyle => {
            let _ = writeln!(out, "def {FUNCTION_NAME}({}):", params.join(", "));
        }
        Dialect::JavaStyle => {
            let _ = writeln!(
                out,
                "public static int {FUNCTION_NAME}({}) {{",
                params.join(", ")
            );
            let mut locals = BTreeSet::new();
            crate::program::walk(&p.body, &mut |s| {
                if let Stmt::Assign { target, .. } = s {
                    if !p.params.contains(target) {
                        locals.insert(*target);
                    }
                }
            });
            for v in locals {
                let _ = writeln!(out, "{INDENT}int {v} = 0;");
            }
        }
    }
    write_block(&mut out, &p.body, d, 1, 0);
    if d == Dialect::JavaStyle {
        out.push_str("}\n");
    }
    out
}

const COUNTERS: [&str; 4] = ["i", "j", "k", "m"];

fn write_block(out: &mut String, block: &[Stmt], d: Dialect, depth: usize, loops: usize) {
    let pad = INDENT.repeat(depth);
    for stmt in block {
        match stmt {
            Stmt::Assign { target, value } => {
                let _ = writeln!(out, "{pad}{}", render_assignment(*target, value, d));
            }
            Stmt::Return(v) => match d {
                Dialect::PythonStyle => {
                    let _ = writeln!(out, "{pad}return {v}");
                }
                Dialect::JavaStyle => {
                    let _ = writeln!(out, "{pad}return {v};");
                }
            },
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                let c = render_predicate(cond, d);
                match d {
                    Dialect::PythonStyle => {
                        let _ = writeln!(out, "{pad}if {c}:");
                        write_block(out, then_body, d, depth + 1, loops);
                        if let Some(e) = else_body {
                            let _ = writeln!(out, "{pad}else:");
                            write_block(out, e, d, depth + 1, loops);
                        }
                    }
                    Dialect::JavaStyle => {
                        let _ = writeln!(out, "{pad}if ({c}) {{");
                        write_block(out, then_body, d, depth + 1, loops);
                        if let Some(e) = else_body {
                            let _ = writeln!(out, "{pad}}} else {{");
                            write_block(out, e, d, depth + 1, loops);
                        }
                        let _ = writeln!(out, "{pad}}}");
                    }
                }
            }
            Stmt::Loop { bound, body } => {
                let counter = COUNTERS[loops.min(COUNTERS.len() - 1)];
                match (bound, d) {
                    (LoopBound::Counted(n), Dialect::PythonStyle) => {
                        let _ = writeln!(out, "{pad}for {counter} in range({n}):");
                    }
                    (LoopBound::Counted(n), Dialect::JavaStyle) => {
                        let _ = writeln!(
                            out,
                            "{pad}for (int {counter} = 0; {counter} < {n}; {counter}++) {{"
                        );
                    }
                    (LoopBound::While(c), Dialect::PythonStyle) => {
                        let _ = writeln!(out, "{pad}while {}:", render_predicate(c, d));
                    }
                    (LoopBound::While(c), Dialect::JavaStyle) => {
                        let _ = writeln!(out, "{pad}while ({}) {{", render_predicate(c, d));
                    }
                }
                write_block(out, body, d, depth + 1, loops + 1);
                if d == Dialect::JavaStyle {
                    let _ = writeln!(out, "{pad}}}");
                }
            }
        }
    }
}

/// Non-blank, non-comment lines.
pub fn sloc(source: &str) -> usize {
    source
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("//"))
        .count()
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("prompt template must contain {PROMPT_MARKER} exactly once (found {0})")]
    Marker(usize),
    #[error("prompt template must contain {PROGRAM_SLOT} exactly once (found {0})")]
    ProgramSlot(usize),
    #[error("instruction must not be empty")]
    EmptyInstruction,
}

/// Wrapper text around the program; holds one program slot and one marker.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    text: String,
}

impl PromptTemplate {
    pub fn new(text: impl Into<String>) -> Result<PromptTemplate, PromptError> {
        let text = text.into();
        let markers = text.matches(PROMPT_MARKER).count();
        if markers != 1 {
            return Err(PromptError::Marker(markers));
        }
        let slots = text.matches(PROGRAM_SLOT).count();
        if slots != 1 {
            return Err(PromptError::ProgramSlot(slots));
        }
        Ok(PromptTemplate { text })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn fill(&self, source: &str, instruction: &str) -> Result<String, PromptError> {
        if instruction.trim().is_empty() {
            return Err(PromptError::EmptyInstruction);
        }
        let source = source.trim_end_matches('\n');
        // Split first so neither substitution can see the other's text.
        let (before, after) = self.text.split_once(PROMPT_MARKER).expect("checked in new");
        let fill = |s: &str| s.replacen(PROGRAM_SLOT, source, 1);
        Ok(format!("{}{instruction}{}", fill(before), fill(after)))
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            text: format!("{PROGRAM_SLOT}\n\n{PROMPT_MARKER}"),
        }
    }
}

pub fn build_prompt(source: &str, instruction: &str) -> Result<String, PromptError> {
    PromptTemplate::default().fill(source, instruction)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub program_id: String,
    pub dialect: Dialect,
    pub source: String,
    pub prompt: String,
    pub instruction: String,
}

impl PromptBundle {
    /// Java prompts show only the method; Python prompts show the whole function.
    pub fn new(
        p: &ProgramSpec,
        dialect: Dialect,
        template: &PromptTemplate,
        instruction: &str,
    ) -> Result<PromptBundle, PromptError> {
        let source = render_function(p, dialect);
        let prompt = template.fill(&source, instruction)?;
        Ok(PromptBundle {
            program_id: p.id.clone(),
            dialect,
            source,
            prompt,
            instruction: instruction.to_string(),
        })
    }
}
