//! Control-flow benchmark generation and scoring for LLM-written unit tests.
//!
//! The pipeline has three phases:
//!
//! 1. [`generator`] fills control-flow [`generator::Template`]s with statements
//!    from a [`catalog::Catalog`] to build a deterministic dataset of small
//!    integer programs.
//! 2. [`render`] turns each program into source text and a single-shot prompt,
//!    and [`gateway`] sends the prompt to a chat-completions endpoint (or
//!    replays a recorded session).
//! 3. [`extract`] pulls test cases out of the free-text responses, [`oracle`]
//!    judges them by interpreting the program, and [`metrics`] aggregates the
//!    verdicts into per-category reports.
//!
//! [`pipeline`] wires the phases together around on-disk, line-oriented
//! artifacts; the `flowbench` binary is a thin CLI over it.

pub mod catalog;
pub mod extract;
pub mod gateway;
pub mod generator;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod program;
pub mod render;
pub mod syntax;

mod intser;

pub use num_bigint::BigInt;
