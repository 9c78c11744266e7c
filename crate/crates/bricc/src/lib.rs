//! Checker for component behaviours written in a machine-readable CSP subset.
//!
//! The crate parses `.iop` specifications, compiles process expressions to
//! finite labelled transition systems, normalizes them into deterministic
//! failures automata, and decides refinement-style questions over them:
//! stable-failures refinement and equivalence, deadlock and divergence
//! freedom, I/O-process validation, behavioural convergence (via greatest
//! lower bound construction or a brute-force oracle), and contract-level
//! refinement and inheritance with buffered compositions.
//!
//! The main entry points are [`syntax::parse_spec`], [`lts::compile`],
//! [`lts::normalize`], the checks in [`analysis`], [`ioproc`],
//! [`convergence`] and [`contract`], and the batch driver in [`script`].

pub mod analysis;
pub mod contract;
pub mod convergence;
pub mod generate;
pub mod ioproc;
pub mod lts;
pub mod script;
pub mod syntax;
pub mod util;

pub use syntax::{parse_spec, Spec};
