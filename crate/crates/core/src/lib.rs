//! Local distinguishability of orthogonal product states.
//!
//! The crate decides whether a set of pairwise orthogonal bipartite product
//! states can be perfectly identified by local operations and classical
//! communication (LOCC). For `3 ⊗ 3` systems the decision is complete; in
//! other dimensions only the characterized classes are recognized and
//! everything else is reported as unknown.
//!
//! Besides the classifier the crate builds rectangular representations of
//! product bases, generates explicit LOCC protocols as measurement trees, and
//! checks those protocols with an independent Born-rule simulator.

pub mod analysis;
pub mod catalog;
pub mod classify;
pub mod cli;
pub mod error;
pub mod numerics;
pub mod protocol;
pub mod rectrep;
pub mod serial;
pub mod states;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, ComplexVector, Subspace, Tolerance};
pub use states::{OrthogonalProductSet, Party, ProductState};
