//! Partially specified probabilistic knowledge over finite event spaces.
//!
//! A [`ProbabilitySystem`] attaches marginal tables `P(Y)` and conditional
//! tables `P(Z|W)` to the components of a [`Structure`]. This crate
//! classifies structures (web, forest, conditional web, Bayesian-network
//! shape), checks whether a system is consistent, and extends it to a full
//! joint distribution either as the product of its tables or as the
//! maximum-entropy compatible distribution.
//!
//! ```
//! use pks_core::{counterexample, extension};
//!
//! let pc = counterexample::system();
//! let product = extension::product_extension(&pc).unwrap();
//! let maxent = extension::maxent_extension(&pc, &Default::default()).unwrap();
//! assert!(maxent.entropy > product.entropy + 0.05);
//! ```

pub mod counterexample;
pub mod error;
pub mod event_space;
pub mod extension;
pub mod format;
pub mod sampling;
mod simplex;
pub mod structure;
pub mod system;

pub use error::{Error, Result};
pub use event_space::{
    ConditionalTable, Descriptor, EventSpace, JointDistribution, MarginalTable,
};
pub use extension::{
    information, maxent_extension, most_informative_forest, product_extension, ExtensionResult,
    ForestSearchResult, InfoReport, Method, SolverConfig,
};
pub use structure::{Classification, Component, ComponentKind, Structure, TerminalSplit};
pub use system::{
    ComponentTable, ConsistencyReport, ConsistencyStatus, ConstraintSet, ConstraintTag,
    ProbabilitySystem, Table, Violation,
};
