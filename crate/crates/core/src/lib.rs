//! Distance, pinned-distance, dot-product and sum-product sets over `F_q^d`,
//! with exact and character-sum checks of the second-moment inequalities
//! that bound them from below.
//!
//! ```
//! use fqdist::{distance_set, make_field, Engine, PointSet};
//!
//! let f = make_field(7, 1).unwrap();
//! let full = PointSet::full(&f, 2).unwrap();
//! assert_eq!(distance_set(&full, Engine::Conv).unwrap().len(), 7);
//! ```

pub mod analysis;
pub mod bitset;
pub mod field;
pub mod harness;
pub mod rng;
pub mod space;
pub mod spectra;

pub use analysis::{
    best_slice, check_ir_threshold, check_sumproduct, cs_chain, second_moment_bound, second_moment_identity, theorem_check_distpinned, theorem_check_dot,
    AnalysisError, DiagnosticsReport, Rational,
};
pub use field::{field_of_order, make_field, sqrt_minus_one, FieldElement, FieldError, FieldSpec};
pub use harness::{load_pointset, save_pointset, ExperimentConfig, HarnessError, ResultRow};
pub use space::{generate, pin_slice, Generator, PinSpec, Point, PointSet, SpaceError};
pub use spectra::{
    aa_plus_aa, aa_plus_za, distance_set, pinned_distance_set, pinned_dot_set, spectrum, Engine, Metric, Spectrum, SpectrumError,
};
