//! Verification of the second-moment identities and inequalities behind the
//! pinned distance and dot-product bounds, with structured reports.
//!
//! Integer and rational sides are compared exactly. Character sums are the
//! only floating-point quantities; they are compared with an absolute
//! tolerance of `1e-6` per summand.

mod moments;
mod report;
mod theorems;

use thiserror::Error;

pub use moments::{cs_chain, cs_chain_with_engine, second_moment_bound, second_moment_identity, CHARACTER_BUDGET, TOLERANCE_PER_SUMMAND};
pub use report::{DiagnosticsReport, Rational};
pub use theorems::{best_slice, check_ir_threshold, check_sumproduct, nonzero_pin, theorem_check_distpinned, theorem_check_dot};

use crate::field::FieldSpec;
use crate::space::{PointSet, SpaceError};
use crate::spectra::SpectrumError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("point set is empty")]
    EmptySet,
    #[error("theorem checks need odd characteristic")]
    EvenCharacteristic,
    #[error("the dot-product check needs a nonzero pin value")]
    ZeroPin,
    #[error("identity residual {residual} exceeds tolerance {tolerance}")]
    ToleranceExceeded { residual: f64, tolerance: f64 },
    #[error("{summands} character summands exceed the budget of {budget}")]
    BudgetExceeded { summands: u64, budget: u64 },
    #[error("exact arithmetic overflowed; instance too large")]
    Overflow,
}

pub(crate) fn check_nonempty(set: &PointSet) -> Result<(), AnalysisError> {
    if set.is_empty() {
        Err(AnalysisError::EmptySet)
    } else {
        Ok(())
    }
}

pub(crate) fn require_odd(field: &FieldSpec) -> Result<(), AnalysisError> {
    if field.p() == 2 {
        Err(AnalysisError::EvenCharacteristic)
    } else {
        Ok(())
    }
}

pub(crate) fn checked<T>(value: Option<T>) -> Result<T, AnalysisError> {
    value.ok_or(AnalysisError::Overflow)
}
