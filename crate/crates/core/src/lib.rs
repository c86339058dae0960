//! Invariant causal prediction with simultaneous true discovery bounds.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`invariance`] computes an invariance p-value `p_S` for every subset `S`
//!    of the predictors, collected in a [`PValueTable`].
//! 2. [`aggregation`] turns the table into p-values `p*_S` for the hypotheses
//!    "no predictor in `S` is causal".
//! 3. [`sets`] derives the classic ICP discovery set and its reformulations.
//! 4. [`bounds`] answers "at least how many causal predictors are in `R`?" for
//!    any query set `R`, simultaneously at level `1 - alpha`.
//!
//! [`sim`] contains the SEM generator and the simulation studies. [`check`]
//! cross-validates the equivalent formulations on random tables.

pub mod aggregation;
pub mod bounds;
pub mod check;
pub mod error;
pub mod fixtures;
pub mod invariance;
pub mod io;
pub mod ols;
pub mod sets;
pub mod sim;
pub mod stats;
pub mod subset;

pub use aggregation::AggregatedPValues;
pub use bounds::{BoundResult, ClosedTestingOracle, DefiningSets, TdBounds};
pub use error::{IcpError, Result};
pub use invariance::{build_pvalue_table, invariance_pvalue, EnvDataset, TestConfig, TestKind};
pub use sets::DiscoveryReport;
pub use subset::{enumerate_subsets, subset_max_transform, PValueTable, SubsetMask};
