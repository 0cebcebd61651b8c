//! Points and point sets in `F_q^d`.
//!
//! A point `(x_1, …, x_d)` is indexed by `Σ x_i q^{i-1}`. Because field
//! elements are themselves base-`p` digit strings, this index is also the
//! base-`p` encoding of the point as an element of `(Z_p)^{kd}`, which the
//! convolution engine relies on.

use std::fmt;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::Bitset;
use crate::field::{sqrt_minus_one, FieldElement, FieldError, FieldSpec};
use crate::rng::rng_from_seed;

/// Largest supported `q^d`.
pub const MAX_SPACE_SIZE: u64 = 1 << 28;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("q^d = {q}^{d} exceeds the cap of {}", MAX_SPACE_SIZE)]
    SpaceTooLarge { q: u32, d: usize },
    #[error("point set is empty")]
    EmptySet,
    #[error("requested {requested} points but the space only has {capacity}")]
    SizeTooLarge { requested: u64, capacity: u64 },
    #[error("-1 is not a square in F_{0}")]
    NoSqrtMinusOne(u32),
    #[error("pin coordinate j={j} outside 1..={d}")]
    PinOutOfRange { j: usize, d: usize },
    #[error("coordinate {value} is not an element of F_{q}")]
    CoordinateOutOfRange { value: u32, q: u32 },
    #[error("point sets live in different spaces")]
    SpaceMismatch,
}

/// A pin `(j, z)`: coordinate `j` (1-based) set to `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PinSpec {
    pub j: usize,
    pub z: FieldElement,
}

impl PinSpec {
    pub fn new(j: usize, z: FieldElement) -> Self {
        Self { j, z }
    }

    fn check(&self, d: usize, field: &FieldSpec) -> Result<(), SpaceError> {
        if self.j == 0 || self.j > d {
            return Err(SpaceError::PinOutOfRange { j: self.j, d });
        }
        if !field.contains(self.z) {
            return Err(SpaceError::CoordinateOutOfRange { value: self.z.0, q: field.q() });
        }
        Ok(())
    }
}

impl std::str::FromStr for PinSpec {
    type Err = String;

    /// Parses `"j,z"`.
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("pin '{s}' is not of the form j,z");
        let (j, z) = s.split_once(',').ok_or_else(bad)?;
        Ok(PinSpec::new(j.trim().parse().map_err(|_| bad())?, FieldElement(z.trim().parse().map_err(|_| bad())?)))
    }
}

impl fmt::Display for PinSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.j, self.z)
    }
}

/// A single point of `F_q^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Point {
    pub coords: Vec<FieldElement>,
}

impl Point {
    pub fn new(coords: Vec<FieldElement>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// `||x|| = x_1^2 + … + x_d^2`.
pub fn norm(field: &FieldSpec, x: &[FieldElement]) -> FieldElement {
    x.iter().fold(FieldElement::ZERO, |acc, &c| field.add(acc, field.square(c)))
}

/// `||x - y||`.
pub fn distance(field: &FieldSpec, x: &[FieldElement], y: &[FieldElement]) -> FieldElement {
    x.iter()
        .zip(y)
        .fold(FieldElement::ZERO, |acc, (&a, &b)| field.add(acc, field.square(field.sub(a, b))))
}

/// `x · y`.
pub fn dot(field: &FieldSpec, x: &[FieldElement], y: &[FieldElement]) -> FieldElement {
    x.iter().zip(y).fold(FieldElement::ZERO, |acc, (&a, &b)| field.add(acc, field.mul(a, b)))
}

/// A subset of `F_q^d`, stored as an indicator bitset.
///
/// Sets are immutable once built; construct them through [`generate`], the
/// `from_*` constructors, or the file loader.
#[derive(Clone, PartialEq, Eq)]
pub struct PointSet {
    field: FieldSpec,
    d: usize,
    indicator: Bitset,
    size: usize,
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointSet")
            .field("q", &self.field.q())
            .field("d", &self.d)
            .field("size", &self.size)
            .field("points", &self.points().map(|p| p.iter().map(|c| c.0).collect::<Vec<_>>()).collect::<Vec<_>>())
            .finish()
    }
}

pub(crate) fn space_size(field: &FieldSpec, d: usize) -> Result<usize, SpaceError> {
    if d == 0 {
        return Err(SpaceError::BadDimension("d must be at least 1".into()));
    }
    match (field.q() as u64).checked_pow(d as u32) {
        Some(n) if n <= MAX_SPACE_SIZE => Ok(n as usize),
        _ => Err(SpaceError::SpaceTooLarge { q: field.q(), d }),
    }
}

impl PointSet {
    pub fn empty(field: &FieldSpec, d: usize) -> Result<Self, SpaceError> {
        let n = space_size(field, d)?;
        Ok(Self { field: field.clone(), d, indicator: Bitset::new(n), size: 0 })
    }

    pub fn from_indices(field: &FieldSpec, d: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self, SpaceError> {
        let mut set = Self::empty(field, d)?;
        let n = set.indicator.len();
        for i in indices {
            if i >= n {
                return Err(SpaceError::SizeTooLarge { requested: i as u64, capacity: n as u64 });
            }
            set.indicator.insert(i);
        }
        set.size = set.indicator.count_ones();
        Ok(set)
    }

    pub fn from_points<P: AsRef<[FieldElement]>>(field: &FieldSpec, d: usize, points: impl IntoIterator<Item = P>) -> Result<Self, SpaceError> {
        let mut set = Self::empty(field, d)?;
        for p in points {
            let idx = set.index_of(p.as_ref())?;
            set.indicator.insert(idx);
        }
        set.size = set.indicator.count_ones();
        Ok(set)
    }

    /// Convenience for tests and examples: points given as raw integers.
    pub fn from_values(field: &FieldSpec, d: usize, points: &[&[u32]]) -> Result<Self, SpaceError> {
        Self::from_points(field, d, points.iter().map(|p| p.iter().map(|&v| FieldElement(v)).collect::<Vec<_>>()))
    }

    /// The whole space `F_q^d`.
    pub fn full(field: &FieldSpec, d: usize) -> Result<Self, SpaceError> {
        let n = space_size(field, d)?;
        Self::from_indices(field, d, 0..n)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// `q^d`.
    pub fn capacity(&self) -> usize {
        self.indicator.len()
    }

    pub fn indicator(&self) -> &Bitset {
        &self.indicator
    }

    pub fn same_space(&self, other: &PointSet) -> bool {
        self.d == other.d && self.field == other.field
    }

    pub fn index_of(&self, coords: &[FieldElement]) -> Result<usize, SpaceError> {
        if coords.len() != self.d {
            return Err(SpaceError::BadDimension(format!("point has {} coordinates, expected {}", coords.len(), self.d)));
        }
        let q = self.field.q();
        let mut idx = 0usize;
        for c in coords.iter().rev() {
            if c.0 >= q {
                return Err(SpaceError::CoordinateOutOfRange { value: c.0, q });
            }
            idx = idx * q as usize + c.0 as usize;
        }
        Ok(idx)
    }

    pub fn coords_of(&self, mut idx: usize) -> Vec<FieldElement> {
        let q = self.field.q() as usize;
        (0..self.d)
            .map(|_| {
                let c = idx % q;
                idx /= q;
                FieldElement(c as u32)
            })
            .collect()
    }

    pub fn contains_index(&self, idx: usize) -> bool {
        idx < self.indicator.len() && self.indicator.get(idx)
    }

    pub fn contains(&self, coords: &[FieldElement]) -> bool {
        self.index_of(coords).map(|i| self.indicator.get(i)).unwrap_or(false)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.indicator.ones()
    }

    /// Points in ascending index order.
    pub fn points(&self) -> impl Iterator<Item = Vec<FieldElement>> + '_ {
        self.indices().map(|i| self.coords_of(i))
    }

    /// All coordinates, point-major, in ascending index order.
    pub fn flat_coords(&self) -> Vec<FieldElement> {
        let mut out = Vec::with_capacity(self.size * self.d);
        for p in self.points() {
            out.extend(p);
        }
        out
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.same_space(other) && self.indicator.is_subset(&other.indicator)
    }

    pub fn union(&self, other: &PointSet) -> Result<PointSet, SpaceError> {
        if !self.same_space(other) {
            return Err(SpaceError::SpaceMismatch);
        }
        let mut indicator = self.indicator.clone();
        indicator.union_with(&other.indicator);
        let size = indicator.count_ones();
        Ok(PointSet { field: self.field.clone(), d: self.d, indicator, size })
    }

    /// Image under `f`, applied point by point.
    pub fn map_points(&self, mut f: impl FnMut(&[FieldElement]) -> Vec<FieldElement>) -> PointSet {
        let mut indicator = Bitset::new(self.indicator.len());
        for p in self.points() {
            let image = f(&p);
            let idx = self.index_of(&image).expect("mapped point stays in the space");
            indicator.insert(idx);
        }
        let size = indicator.count_ones();
        PointSet { field: self.field.clone(), d: self.d, indicator, size }
    }

    /// `E + v`.
    pub fn translate(&self, v: &[FieldElement]) -> PointSet {
        let field = self.field.clone();
        self.map_points(|p| p.iter().zip(v).map(|(&a, &b)| field.add(a, b)).collect())
    }

    /// Coordinates permuted so that new coordinate `i` is old coordinate `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> PointSet {
        self.map_points(|p| perm.iter().map(|&i| p[i]).collect())
    }

    /// Factors `A_1, …, A_d` if this set is a product set.
    pub fn product_factors(&self) -> Option<Vec<Vec<FieldElement>>> {
        let factors: Vec<Vec<FieldElement>> = (1..=self.d).map(|j| valid_pins(self, j).unwrap_or_default()).collect();
        let product: usize = factors.iter().map(Vec::len).product();
        (product == self.size && self.size > 0).then_some(factors)
    }
}

/// `π_j(E)` re-embedded with coordinate `j` set to `z`.
///
/// This is the full projection, not `E ∩ {x_j = z}`: the result can contain
/// points outside `E`, and `|result| = |π_j(E)|` for every `z`.
pub fn pin_slice(set: &PointSet, pin: PinSpec) -> Result<PointSet, SpaceError> {
    if set.is_empty() {
        return Err(SpaceError::EmptySet);
    }
    pin.check(set.d, &set.field)?;
    let axis = pin.j - 1;
    Ok(set.map_points(|p| {
        let mut out = p.to_vec();
        out[axis] = pin.z;
        out
    }))
}

/// `|π_j(E)|`.
pub fn projection_size(set: &PointSet, j: usize) -> Result<usize, SpaceError> {
    if set.is_empty() {
        return Ok(0);
    }
    Ok(pin_slice(set, PinSpec::new(j, FieldElement::ZERO))?.len())
}

/// Values attained by coordinate `j` over `E`, ascending.
pub fn valid_pins(set: &PointSet, j: usize) -> Result<Vec<FieldElement>, SpaceError> {
    if j == 0 || j > set.d {
        return Err(SpaceError::PinOutOfRange { j, d: set.d });
    }
    let mut seen = vec![false; set.q() as usize];
    for p in set.points() {
        seen[p[j - 1].0 as usize] = true;
    }
    Ok(seen.iter().enumerate().filter(|(_, &s)| s).map(|(v, _)| FieldElement(v as u32)).collect())
}

/// Named point-set families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `n` points drawn uniformly without replacement.
    Random { n: u64 },
    /// `A_1 × … × A_d` from explicit factors.
    Product { factors: Vec<Vec<FieldElement>> },
    /// A product set whose `i`-th factor is a uniform random subset of size `sizes[i]`.
    RandomProduct { sizes: Vec<usize> },
    /// `{(t, i·t)}` with `i` the canonical square root of `-1`; `d = 2` only.
    IsotropicLine,
    /// `{x : ||x|| = t}`.
    Sphere { t: FieldElement },
    FullSpace,
    /// `{0, …, m-1}^d` in canonical encoding.
    IntervalGrid { m: u32 },
}

/// Builds a point set from a named family. Only the random families
/// consume `seed`.
pub fn generate(field: &FieldSpec, d: usize, generator: &Generator, seed: u64) -> Result<PointSet, SpaceError> {
    let capacity = space_size(field, d)?;
    let q = field.q();
    match generator {
        Generator::Random { n } => {
            if *n > capacity as u64 {
                return Err(SpaceError::SizeTooLarge { requested: *n, capacity: capacity as u64 });
            }
            let mut rng = rng_from_seed(seed);
            PointSet::from_indices(field, d, sample(&mut rng, capacity, *n as usize).into_iter())
        }
        Generator::Product { factors } => {
            if factors.len() != d {
                return Err(SpaceError::BadDimension(format!("{} factors for d = {d}", factors.len())));
            }
            for a in factors.iter().flatten() {
                if !field.contains(*a) {
                    return Err(SpaceError::CoordinateOutOfRange { value: a.0, q });
                }
            }
            product_set(field, factors)
        }
        Generator::RandomProduct { sizes } => {
            if sizes.len() != d {
                return Err(SpaceError::BadDimension(format!("{} factor sizes for d = {d}", sizes.len())));
            }
            let mut rng = rng_from_seed(seed);
            let mut factors = Vec::with_capacity(d);
            for &s in sizes {
                if s > q as usize {
                    return Err(SpaceError::SizeTooLarge { requested: s as u64, capacity: q as u64 });
                }
                let mut a: Vec<FieldElement> = sample(&mut rng, q as usize, s).into_iter().map(|v| FieldElement(v as u32)).collect();
                a.sort();
                factors.push(a);
            }
            product_set(field, &factors)
        }
        Generator::IsotropicLine => {
            if d != 2 {
                return Err(SpaceError::BadDimension("the isotropic line lives in d = 2".into()));
            }
            let i = sqrt_minus_one(field).ok_or(SpaceError::NoSqrtMinusOne(q))?;
            PointSet::from_points(field, 2, field.elements().map(|t| [t, field.mul(i, t)]))
        }
        Generator::Sphere { t } => {
            if !field.contains(*t) {
                return Err(SpaceError::CoordinateOutOfRange { value: t.0, q });
            }
            let full = PointSet::full(field, d)?;
            let idx: Vec<usize> = full.indices().filter(|&i| norm(field, &full.coords_of(i)) == *t).collect();
            PointSet::from_indices(field, d, idx)
        }
        Generator::FullSpace => PointSet::full(field, d),
        Generator::IntervalGrid { m } => {
            if *m > q {
                return Err(SpaceError::SizeTooLarge { requested: *m as u64, capacity: q as u64 });
            }
            let interval: Vec<FieldElement> = (0..*m).map(FieldElement).collect();
            product_set(field, &vec![interval; d])
        }
    }
}

fn product_set(field: &FieldSpec, factors: &[Vec<FieldElement>]) -> Result<PointSet, SpaceError> {
    let d = factors.len();
    let mut set = PointSet::empty(field, d)?;
    let mut point = vec![FieldElement::ZERO; d];
    fn rec(set: &mut PointSet, factors: &[Vec<FieldElement>], axis: usize, point: &mut Vec<FieldElement>) {
        if axis == factors.len() {
            let idx = set.index_of(point).expect("factor elements are in range");
            set.indicator.insert(idx);
            return;
        }
        for &a in &factors[axis] {
            point[axis] = a;
            rec(set, factors, axis + 1, point);
        }
    }
    rec(&mut set, factors, 0, &mut point);
    set.size = set.indicator.count_ones();
    Ok(set)
}
