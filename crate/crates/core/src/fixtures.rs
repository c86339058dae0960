//! Small hand-written tables used in docs, tests and the CLI.

use crate::subset::PValueTable;

/// Three predictors; only `{1}` (0.30) and `{1,2}` (0.40) exceed 0.05.
pub fn three_predictor_table() -> PValueTable {
    // mask order: ∅, {1}, {2}, {1,2}, {3}, {1,3}, {2,3}, {1,2,3}
    PValueTable::new(3, vec![0.01, 0.30, 0.01, 0.40, 0.02, 0.01, 0.03, 0.02]).expect("valid fixture")
}

/// Three predictors where only `{1,2}` and `{1,3}` exceed 0.05.
pub fn two_accepted_sets_table() -> PValueTable {
    PValueTable::new(3, vec![0.01, 0.02, 0.01, 0.60, 0.03, 0.20, 0.01, 0.04]).expect("valid fixture")
}
