//! Fixtures shared by the benchmarks.

use fqdist::{field_of_order, generate, FieldSpec, Generator, PointSet};

/// A seeded random set of `n` points in `F_q^d`.
pub fn random_set(q: u64, d: usize, n: u64, seed: u64) -> (FieldSpec, PointSet) {
    let field = field_of_order(q).expect("prime power");
    let set = generate(&field, d, &Generator::Random { n }, seed).expect("n fits in F_q^d");
    (field, set)
}
