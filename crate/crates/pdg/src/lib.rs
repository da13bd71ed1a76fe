//! Probabilistic dependency graphs: directed multigraphs whose edges carry
//! conditional probability tables and two confidence weights, able to encode
//! mutually inconsistent beliefs.
//!
//! The crate provides
//! - construction and composition of PDGs (hyperedge desugaring, union,
//!   restriction) with full validation,
//! - the incompatibility / information-deficiency scoring of joint
//!   distributions and its per-world decomposition,
//! - convex minimization of the score over the probability simplex, including
//!   the small-gamma limit distribution and the degree of inconsistency,
//! - exact translations to and from Bayesian networks, factor graphs, and
//!   weighted factor graphs, with the variational free energy for the latter,
//! - conditioning, soft-evidence updates, and conditional queries, and
//! - a versioned JSON file format plus the `pdg` command-line tool.

pub mod convert;
pub mod dist;
pub mod error;
pub mod infer;
pub mod io;
pub mod model;
pub mod scoring;
pub mod solve;

pub use dist::{entropy_bits, kl_bits, CondTable, JointTable};
pub use error::{PdgError, Result};
pub use model::{Cpd, Edge, Pdg, PdgBuilder, Severity, VarId, Variable, Violation, WorldSpace};
pub use scoring::{idef, in_sd, inc, score, score_decomposed, ScoreReport, SdReport};
pub use solve::{
    degree_of_inconsistency, grid_oracle, limit_distribution, minimize_score, SolveConfig,
    SolveResult,
};
