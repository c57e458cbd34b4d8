//! Generalized quantum measurement (POVM) toolkit.
//!
//! The crate covers the dense operator kernel, POVM/PVM values with the
//! generalized Born rule, POVM synthesis from an object–apparatus coupling,
//! linear-inversion state reconstruction, nonideality matrices with their
//! entropy measure and the Martens complementarity bound, the
//! Summhammer–Rauch–Tuppinger interferometer model, the generalized Aspect
//! experiment and a joint-distribution feasibility check for four bivariate
//! marginals.
//!
//! Batch entry points take an [`Execution`] so sweeps can run on the rayon
//! pool (feature `parallel`, on by default) or sequentially.

pub mod aspect;
pub mod error;
pub mod exec;
pub mod fine;
pub mod measure;
pub mod nonideality;
pub mod operator;
pub mod random;
pub mod simplex;
pub mod srt;
pub mod table;

pub use error::{Error, Result};
pub use exec::Execution;
pub use measure::{InstrumentModel, PovmMeasure, PvmMeasure};
pub use nonideality::{Decomposition, MartensReport, NonidealityMatrix};
pub use operator::{Operator, State};
pub use table::ProbabilityTable;

/// Default tolerance for the positivity, projector and normalization predicates.
pub const DEFAULT_TOL: f64 = 1e-9;
