//! # povm-reduce
//!
//! Redundancy questions for finite-dimensional discrete POVMs.
//!
//! - [`reduction`]: minimal sufficient reduction by proportionality grouping,
//!   cross-checked against likelihood-ratio vectors over an informationally
//!   complete state ensemble.
//! - [`order`]: the post-processing preorder `A ⪯ B` decided by a Markov-matrix
//!   feasibility program, and fuzzy equivalence.
//! - [`divergence`]: f-divergences and total variation of outcome distributions.
//! - [`instrument`]: Kraus instruments, composition with a POVM and the two
//!   information-conservation conditions.
//!
//! ```
//! use povm_reduce::{fixtures, reduction, Tolerances};
//!
//! let tol = Tolerances::default();
//! let b = fixtures::intro_split(0.3);
//! let report = reduction::reduce(&b, &tol).unwrap();
//! assert_eq!(report.reduced.len(), 2);
//! ```

pub mod config;
pub mod divergence;
pub mod error;
pub mod fixtures;
pub mod generators;
pub mod instrument;
pub mod matching;
pub mod matops;
pub mod order;
pub mod povm;
pub mod reduction;
pub mod selftest;
pub mod simplex;
mod union_find;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use matops::{CMatrix, HermitianMatrix};
pub use order::MarkovMatrix;
pub use povm::{DensityMatrix, DiscretePovm, Effect, StateEnsemble};
