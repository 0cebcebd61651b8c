//! Incidence spectra `ν(t)` for the distance form `||x − y||` and the dot
//! form `x · y`, and the value sets they support.
//!
//! Two distance engines are available. [`Engine::Direct`] enumerates pairs;
//! [`Engine::Conv`] computes pair-difference counts by an exact transform
//! over `(Z_p)^{kd}` and aggregates them by norm class. [`Engine::ConvFloat`]
//! is the same with complex FFTs and a rounding check. All three return
//! identical integer counts.

mod conv;

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conv::{pair_difference_counts, pair_difference_counts_float, CONV_CAP, FLOAT_RESIDUAL_LIMIT};

use crate::field::{FieldElement, FieldSpec};
use crate::space::{pin_slice, PinSpec, PointSet, SpaceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("point sets live in different spaces")]
    SpaceMismatch,
    #[error("q^d = {size} exceeds the convolution cap of {cap}")]
    MemoryCap { size: usize, cap: usize },
    #[error("float convolution residual {residual} too large to round safely")]
    Rounding { residual: f64 },
    #[error("expected a subset of F_q (d = 1), got d = {0}")]
    BadDimension(usize),
    #[error("engine {0} does not support the dot-product form")]
    UnsupportedEngine(Engine),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Direct,
    Conv,
    ConvFloat,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Direct => "direct",
            Engine::Conv => "conv",
            Engine::ConvFloat => "conv_float",
        })
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(Engine::Direct),
            "conv" => Ok(Engine::Conv),
            "conv_float" | "fft" => Ok(Engine::ConvFloat),
            other => Err(format!("unknown engine '{other}' (direct, conv, conv_float)")),
        }
    }
}

/// Which bilinear/quadratic form a spectrum counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Distance,
    Dot,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Distance => "distance",
            Metric::Dot => "dot",
        })
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "distance" => Ok(Metric::Distance),
            "dot" => Ok(Metric::Dot),
            other => Err(format!("unknown metric '{other}' (distance, dot)")),
        }
    }
}

/// `ν(t)` for every `t ∈ F_q`, indexed by canonical value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spectrum {
    field: FieldSpec,
    counts: Vec<u64>,
}

impl Spectrum {
    pub fn from_counts(field: &FieldSpec, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), field.q() as usize);
        Self { field: field.clone(), counts }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, t: FieldElement) -> u64 {
        self.counts[t.0 as usize]
    }

    /// `Σ_t ν(t)`.
    pub fn first_moment(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128).sum()
    }

    /// `Σ_t ν(t)^2`.
    pub fn second_moment(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128 * c as u128).sum()
    }

    pub fn support(&self, exclude_zero: bool) -> Vec<FieldElement> {
        support(self, exclude_zero)
    }

    /// Writes `t,count` rows after a `#` comment header.
    pub fn write_csv<W: Write>(&self, mut out: W, meta: &SpectrumMeta) -> std::io::Result<()> {
        writeln!(
            out,
            "# p={} k={} d={} f_size={} e_size={} metric={} engine={} seed={}",
            self.field.p(),
            self.field.k(),
            meta.d,
            meta.f_size,
            meta.e_size,
            meta.metric,
            meta.engine,
            meta.seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into())
        )?;
        writeln!(out, "t,count")?;
        for (t, c) in self.counts.iter().enumerate() {
            writeln!(out, "{t},{c}")?;
        }
        Ok(())
    }
}

/// Provenance written into the spectrum CSV header.
#[derive(Debug, Clone)]
pub struct SpectrumMeta {
    pub d: usize,
    pub f_size: usize,
    pub e_size: usize,
    pub metric: Metric,
    pub engine: Engine,
    pub seed: Option<u64>,
}

/// `{t : ν(t) > 0}`, optionally without `0`.
pub fn support(spectrum: &Spectrum, exclude_zero: bool) -> Vec<FieldElement> {
    spectrum
        .counts
        .iter()
        .enumerate()
        .filter(|&(t, &c)| c > 0 && !(exclude_zero && t == 0))
        .map(|(t, _)| FieldElement(t as u32))
        .collect()
}

/// Per-pair evaluation of a form with small lookup tables.
struct Kernel {
    field: FieldSpec,
    metric: Metric,
    q: usize,
    /// `term[x*q + y]`: `(x − y)^2` or `x·y`.
    term: Option<Vec<u32>>,
    /// Addition table for extension fields.
    add: Option<Vec<u32>>,
}

const TABLE_LIMIT: usize = 2048;

impl Kernel {
    fn new(field: &FieldSpec, metric: Metric) -> Self {
        let q = field.q() as usize;
        let small = q <= TABLE_LIMIT;
        let term = small.then(|| {
            let mut t = vec![0u32; q * q];
            for x in field.elements() {
                for y in field.elements() {
                    t[x.0 as usize * q + y.0 as usize] = Self::raw_term(field, metric, x, y).0;
                }
            }
            t
        });
        let add = (small && !field.is_prime_field()).then(|| {
            let mut t = vec![0u32; q * q];
            for x in field.elements() {
                for y in field.elements() {
                    t[x.0 as usize * q + y.0 as usize] = field.add(x, y).0;
                }
            }
            t
        });
        Self { field: field.clone(), metric, q, term, add }
    }

    fn raw_term(field: &FieldSpec, metric: Metric, x: FieldElement, y: FieldElement) -> FieldElement {
        match metric {
            Metric::Distance => field.square(field.sub(x, y)),
            Metric::Dot => field.mul(x, y),
        }
    }

    #[inline]
    fn eval(&self, x: &[FieldElement], y: &[FieldElement]) -> u32 {
        let mut acc = 0u32;
        for (&a, &b) in x.iter().zip(y) {
            let t = match &self.term {
                Some(tab) => tab[a.0 as usize * self.q + b.0 as usize],
                None => Self::raw_term(&self.field, self.metric, a, b).0,
            };
            acc = if self.field.is_prime_field() {
                let s = acc + t;
                if s >= self.field.p() {
                    s - self.field.p()
                } else {
                    s
                }
            } else if let Some(tab) = &self.add {
                tab[acc as usize * self.q + t as usize]
            } else {
                self.field.add(FieldElement(acc), FieldElement(t)).0
            };
        }
        acc
    }
}

const CHUNK: usize = 32;

fn direct_counts(f: &PointSet, e: &PointSet, metric: Metric) -> Vec<u64> {
    let kernel = Kernel::new(f.field(), metric);
    let d = f.dim();
    let q = kernel.q;
    let fc = f.flat_coords();
    let ec = e.flat_coords();
    // Integer accumulators make the merge order irrelevant.
    fc.par_chunks(CHUNK * d)
        .map(|chunk| {
            let mut local = vec![0u64; q];
            for x in chunk.chunks_exact(d) {
                for y in ec.chunks_exact(d) {
                    local[kernel.eval(x, y) as usize] += 1;
                }
            }
            local
        })
        .reduce(
            || vec![0u64; q],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

type NormKey = (u32, Vec<u32>, usize);

/// `||v||` for every `v ∈ F_q^d`, built once per `(field, d)`.
pub fn norm_table(field: &FieldSpec, d: usize) -> Result<Arc<Vec<u32>>, SpectrumError> {
    static CACHE: OnceLock<Mutex<HashMap<NormKey, Arc<Vec<u32>>>>> = OnceLock::new();
    let n = crate::space::space_size(field, d)?;
    let key = (field.p(), field.modulus().to_vec(), d);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("norm cache poisoned").get(&key) {
        return Ok(Arc::clone(t));
    }
    let q = field.q() as usize;
    let squares: Vec<u32> = field.elements().map(|a| field.square(a).0).collect();
    let mut table = vec![0u32; n];
    // Trailing zero coordinates contribute nothing, so idx / q indexes the
    // norm of the point with its first coordinate dropped.
    for idx in 1..n {
        table[idx] = field.add(FieldElement(squares[idx % q]), FieldElement(table[idx / q])).0;
    }
    let table = Arc::new(table);
    cache.lock().expect("norm cache poisoned").insert(key, Arc::clone(&table));
    Ok(table)
}

fn check_pair(f: &PointSet, e: &PointSet) -> Result<(), SpectrumError> {
    if f.same_space(e) {
        Ok(())
    } else {
        Err(SpectrumError::SpaceMismatch)
    }
}

/// `ν(t) = |{(x, y) ∈ F × E : ||x − y|| = t}|`.
pub fn distance_spectrum(f: &PointSet, e: &PointSet, engine: Engine) -> Result<Spectrum, SpectrumError> {
    check_pair(f, e)?;
    let counts = match engine {
        Engine::Direct => direct_counts(f, e, Metric::Distance),
        Engine::Conv | Engine::ConvFloat => {
            let diffs = if engine == Engine::Conv {
                pair_difference_counts(f, e)?
            } else {
                pair_difference_counts_float(f, e)?
            };
            let norms = norm_table(f.field(), f.dim())?;
            let mut counts = vec![0u64; f.q() as usize];
            for (v, &n) in diffs.iter().enumerate() {
                counts[norms[v] as usize] += n;
            }
            counts
        }
    };
    Ok(Spectrum { field: f.field().clone(), counts })
}

/// `ν(t) = |{(x, y) ∈ F × E : x · y = t}|`. Direct enumeration only.
pub fn dot_spectrum(f: &PointSet, e: &PointSet) -> Result<Spectrum, SpectrumError> {
    check_pair(f, e)?;
    Ok(Spectrum { field: f.field().clone(), counts: direct_counts(f, e, Metric::Dot) })
}

pub fn spectrum(f: &PointSet, e: &PointSet, metric: Metric, engine: Engine) -> Result<Spectrum, SpectrumError> {
    match (metric, engine) {
        (Metric::Distance, _) => distance_spectrum(f, e, engine),
        (Metric::Dot, Engine::Direct) => dot_spectrum(f, e),
        (Metric::Dot, other) => Err(SpectrumError::UnsupportedEngine(other)),
    }
}

/// `Δ(E)`, including `0` for nonempty `E`.
pub fn distance_set(e: &PointSet, engine: Engine) -> Result<Vec<FieldElement>, SpectrumError> {
    Ok(support(&distance_spectrum(e, e, engine)?, false))
}

/// `Δ^j_z(E) = {||x − y|| : x ∈ E, y ∈ E^j_z}`.
pub fn pinned_distance_set(e: &PointSet, pin: PinSpec) -> Result<Vec<FieldElement>, SpectrumError> {
    let slice = pin_slice(e, pin)?;
    Ok(support(&distance_spectrum(&slice, e, Engine::Direct)?, false))
}

/// `{x · y : x ∈ E^j_z, y ∈ E}`.
pub fn pinned_dot_set(e: &PointSet, pin: PinSpec) -> Result<Vec<FieldElement>, SpectrumError> {
    let slice = pin_slice(e, pin)?;
    Ok(support(&dot_spectrum(&slice, e)?, false))
}

fn scalar_set(a: &PointSet) -> Result<Vec<FieldElement>, SpectrumError> {
    if a.dim() != 1 {
        return Err(SpectrumError::BadDimension(a.dim()));
    }
    Ok(a.indices().map(|i| FieldElement(i as u32)).collect())
}

fn product_set(field: &FieldSpec, a: &[FieldElement]) -> Vec<bool> {
    let mut seen = vec![false; field.q() as usize];
    for &x in a {
        for &y in a {
            seen[field.mul(x, y).0 as usize] = true;
        }
    }
    seen
}

fn members(seen: &[bool]) -> Vec<FieldElement> {
    seen.iter().enumerate().filter(|(_, &s)| s).map(|(v, _)| FieldElement(v as u32)).collect()
}

/// `A·A + A·A`: the product set `A·A`, then its sumset.
pub fn aa_plus_aa(a: &PointSet) -> Result<Vec<FieldElement>, SpectrumError> {
    let elems = scalar_set(a)?;
    let field = a.field();
    let products = members(&product_set(field, &elems));
    let mut seen = vec![false; field.q() as usize];
    for &u in &products {
        for &v in &products {
            seen[field.add(u, v).0 as usize] = true;
        }
    }
    Ok(members(&seen))
}

/// `A·A + zA`.
pub fn aa_plus_za(a: &PointSet, z: FieldElement) -> Result<Vec<FieldElement>, SpectrumError> {
    let elems = scalar_set(a)?;
    let field = a.field();
    if !field.contains(z) {
        return Err(SpaceError::CoordinateOutOfRange { value: z.0, q: field.q() }.into());
    }
    let products = members(&product_set(field, &elems));
    let mut seen = vec![false; field.q() as usize];
    for &u in &products {
        for &c in &elems {
            seen[field.add(u, field.mul(z, c)).0 as usize] = true;
        }
    }
    Ok(members(&seen))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use crate::space::{distance, dot, generate, Generator};
    use proptest::prelude::*;

    fn fe(v: &[u32]) -> Vec<FieldElement> {
        v.iter().map(|&x| FieldElement(x)).collect()
    }

    /// Pair enumeration through plain field arithmetic, independent of
    /// the lookup-table kernel.
    fn oracle(f: &PointSet, e: &PointSet, metric: Metric) -> Vec<u64> {
        let field = f.field();
        let mut counts = vec![0u64; field.q() as usize];
        for x in f.points() {
            for y in e.points() {
                let t = match metric {
                    Metric::Distance => distance(field, &x, &y),
                    Metric::Dot => dot(field, &x, &y),
                };
                counts[t.0 as usize] += 1;
            }
        }
        counts
    }

    #[test]
    fn distance_examples() {
        let f5 = make_field(5, 1).unwrap();
        let origin = PointSet::from_values(&f5, 2, &[&[0, 0]]).unwrap();
        let s = distance_spectrum(&origin, &origin, Engine::Direct).unwrap();
        assert_eq!(s.counts(), &[1, 0, 0, 0, 0]);
        assert_eq!(support(&s, false), fe(&[0]));

        let square = generate(&f5, 2, &Generator::IntervalGrid { m: 2 }, 0).unwrap();
        for engine in [Engine::Direct, Engine::Conv, Engine::ConvFloat] {
            let s = distance_spectrum(&square, &square, engine).unwrap();
            assert_eq!(s.counts(), &[4, 8, 4, 0, 0], "{engine}");
        }
        assert_eq!(distance_set(&square, Engine::Direct).unwrap(), fe(&[0, 1, 2]));
    }

    #[test]
    fn full_space_distance_set_is_the_field() {
        for (p, k, d) in [(3u64, 1u32, 2usize), (5, 1, 2), (3, 2, 2), (7, 1, 3)] {
            let f = make_field(p, k).unwrap();
            let full = PointSet::full(&f, d).unwrap();
            assert_eq!(distance_set(&full, Engine::Conv).unwrap().len(), f.q() as usize);
        }
    }

    #[test]
    fn isotropic_line_has_only_zero() {
        let f5 = make_field(5, 1).unwrap();
        let z = generate(&f5, 2, &Generator::IsotropicLine, 0).unwrap();
        let s = distance_spectrum(&z, &z, Engine::Direct).unwrap();
        assert_eq!(support(&s, false), fe(&[0]));
        assert!(support(&s, true).is_empty());
    }

    #[test]
    fn dot_examples() {
        let f5 = make_field(5, 1).unwrap();
        let a = PointSet::from_values(&f5, 2, &[&[1, 0]]).unwrap();
        let b = PointSet::from_values(&f5, 2, &[&[0, 1]]).unwrap();
        assert_eq!(dot_spectrum(&a, &b).unwrap().counts(), &[1, 0, 0, 0, 0]);
        let c = PointSet::from_values(&f5, 2, &[&[1, 1]]).unwrap();
        assert_eq!(dot_spectrum(&c, &c).unwrap().counts(), &[0, 0, 1, 0, 0]);
        let f3 = make_field(3, 1).unwrap();
        let full = PointSet::full(&f3, 2).unwrap();
        assert_eq!(dot_spectrum(&full, &full).unwrap().counts(), &[33, 24, 24]);
        assert_eq!(oracle(&full, &full, Metric::Dot), vec![33, 24, 24]);
        assert!(matches!(spectrum(&full, &full, Metric::Dot, Engine::Conv), Err(SpectrumError::UnsupportedEngine(_))));
    }

    #[test]
    fn pinned_examples() {
        let f5 = make_field(5, 1).unwrap();
        let square = generate(&f5, 2, &Generator::IntervalGrid { m: 2 }, 0).unwrap();
        assert_eq!(pinned_distance_set(&square, PinSpec::new(2, FieldElement(0))).unwrap(), fe(&[0, 1, 2]));
        let f7 = make_field(7, 1).unwrap();
        let full = PointSet::full(&f7, 2).unwrap();
        assert_eq!(pinned_distance_set(&full, PinSpec::new(1, FieldElement(3))).unwrap().len(), 7);
        let empty = PointSet::empty(&f7, 2).unwrap();
        assert!(matches!(pinned_distance_set(&empty, PinSpec::new(1, FieldElement(0))), Err(SpectrumError::Space(SpaceError::EmptySet))));
    }

    #[test]
    fn sum_product_examples() {
        let f5 = make_field(5, 1).unwrap();
        let zero = PointSet::from_values(&f5, 1, &[&[0]]).unwrap();
        assert_eq!(aa_plus_aa(&zero).unwrap(), fe(&[0]));
        let full = PointSet::full(&f5, 1).unwrap();
        assert_eq!(aa_plus_aa(&full).unwrap().len(), 5);
        let units = PointSet::from_values(&f5, 1, &[&[1], &[2], &[3], &[4]]).unwrap();
        assert_eq!(aa_plus_aa(&units).unwrap(), fe(&[0, 1, 2, 3, 4]));

        // A·A = {1, 2, 4}; adding zA = {1, 2} gives {2, 3, 0, 3, 4, 1}
        let a = PointSet::from_values(&f5, 1, &[&[1], &[2]]).unwrap();
        assert_eq!(aa_plus_za(&a, FieldElement(1)).unwrap(), fe(&[0, 1, 2, 3, 4]));
        assert_eq!(aa_plus_za(&a, FieldElement(0)).unwrap(), fe(&[1, 2, 4]));
        assert_eq!(aa_plus_za(&full, FieldElement(1)).unwrap().len(), 5);
        let plane = PointSet::full(&f5, 2).unwrap();
        assert_eq!(aa_plus_aa(&plane), Err(SpectrumError::BadDimension(2)));
    }

    #[test]
    fn aa_plus_za_matches_triple_enumeration() {
        for (p, k) in [(7u64, 1u32), (3, 2), (13, 1)] {
            let f = make_field(p, k).unwrap();
            for seed in 0..10 {
                let a = generate(&f, 1, &Generator::Random { n: (f.q() / 3) as u64 }, seed).unwrap();
                let elems: Vec<FieldElement> = a.indices().map(|i| FieldElement(i as u32)).collect();
                for z in f.elements() {
                    let mut want = vec![false; f.q() as usize];
                    for &x in &elems {
                        for &y in &elems {
                            for &w in &elems {
                                want[f.add(f.mul(x, y), f.mul(z, w)).0 as usize] = true;
                            }
                        }
                    }
                    assert_eq!(aa_plus_za(&a, z).unwrap(), members(&want));
                }
            }
        }
    }

    #[test]
    fn engines_agree_with_oracle() {
        for (p, k, d) in [(5u64, 1u32, 2usize), (3, 2, 2), (7, 1, 2), (5, 1, 3), (2, 2, 2), (13, 1, 2)] {
            let f = make_field(p, k).unwrap();
            let cap = (f.q() as u64).pow(d as u32);
            for seed in 0..6 {
                let a = generate(&f, d, &Generator::Random { n: 1 + seed * cap / 8 }, seed).unwrap();
                let b = generate(&f, d, &Generator::Random { n: cap / 4 + 1 }, seed + 50).unwrap();
                let want = oracle(&a, &b, Metric::Distance);
                for engine in [Engine::Direct, Engine::Conv, Engine::ConvFloat] {
                    assert_eq!(distance_spectrum(&a, &b, engine).unwrap().counts(), want.as_slice());
                }
                assert_eq!(dot_spectrum(&a, &b).unwrap().counts(), oracle(&a, &b, Metric::Dot).as_slice());
            }
        }
    }

    #[test]
    fn large_field_falls_back_to_field_ops() {
        let f = make_field(2053, 1).unwrap();
        let a = generate(&f, 1, &Generator::Random { n: 40 }, 1).unwrap();
        let b = generate(&f, 1, &Generator::Random { n: 30 }, 2).unwrap();
        assert_eq!(distance_spectrum(&a, &b, Engine::Direct).unwrap().counts(), oracle(&a, &b, Metric::Distance).as_slice());
        assert_eq!(dot_spectrum(&a, &b).unwrap().counts(), oracle(&a, &b, Metric::Dot).as_slice());
    }

    #[test]
    fn full_space_band() {
        // ν(t) = q^d·|S_t| and sphere sizes deviate from q^{d-1} by at most q^{d/2}
        for (p, d) in [(5u64, 2usize), (7, 2), (5, 3), (13, 2)] {
            let f = make_field(p, 1).unwrap();
            let full = PointSet::full(&f, d).unwrap();
            let s = distance_spectrum(&full, &full, Engine::Conv).unwrap();
            let q = f.q() as i64;
            for &c in s.counts() {
                let dev = c as i64 - q.pow(2 * d as u32 - 1);
                assert_eq!(c as i64 % q.pow(d as u32), 0);
                assert!(dev * dev <= q.pow(3 * d as u32), "q={q} d={d} ν={c}");
            }
        }
    }

    #[test]
    fn csv_export() {
        let f3 = make_field(3, 1).unwrap();
        let full = PointSet::full(&f3, 2).unwrap();
        let s = dot_spectrum(&full, &full).unwrap();
        let mut buf = Vec::new();
        let meta = SpectrumMeta { d: 2, f_size: 9, e_size: 9, metric: Metric::Dot, engine: Engine::Direct, seed: None };
        s.write_csv(&mut buf, &meta).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# p=3 k=1 d=2 f_size=9 e_size=9 metric=dot engine=direct seed=-\nt,count\n0,33\n1,24\n2,24\n"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn mass_and_symmetries(seed in any::<u64>(), n in 1u64..60, shift in proptest::collection::vec(0u32..9, 3)) {
            let f = make_field(3, 2).unwrap();
            let e = generate(&f, 3, &Generator::Random { n }, seed).unwrap();
            let s = distance_spectrum(&e, &e, Engine::Direct).unwrap();
            prop_assert_eq!(s.first_moment(), (n * n) as u128);
            prop_assert!(s.get(FieldElement::ZERO) >= n);
            let moved = e.translate(&fe(&shift));
            prop_assert_eq!(distance_spectrum(&moved, &moved, Engine::Conv).unwrap(), s.clone());
            let permuted = e.permute(&[2, 0, 1]);
            prop_assert_eq!(distance_spectrum(&permuted, &permuted, Engine::Direct).unwrap(), s);
            let d = dot_spectrum(&e, &moved).unwrap();
            prop_assert_eq!(d.first_moment(), (n * n) as u128);
        }

        #[test]
        fn difference_counts_have_full_mass(seed in any::<u64>(), a in 1u64..49, b in 1u64..49) {
            let f = make_field(7, 1).unwrap();
            let x = generate(&f, 2, &Generator::Random { n: a }, seed).unwrap();
            let y = generate(&f, 2, &Generator::Random { n: b }, seed ^ 1).unwrap();
            let n = pair_difference_counts(&x, &y).unwrap();
            prop_assert_eq!(n.iter().sum::<u64>(), a * b);
        }

        #[test]
        fn enlarging_never_shrinks_delta(seed in any::<u64>(), n in 1u64..30, extra in 1u64..30) {
            let f = make_field(13, 1).unwrap();
            let small = generate(&f, 2, &Generator::Random { n }, seed).unwrap();
            let more = generate(&f, 2, &Generator::Random { n: extra }, seed.wrapping_add(1)).unwrap();
            let big = small.union(&more).unwrap();
            prop_assert!(distance_set(&big, Engine::Direct).unwrap().len() >= distance_set(&small, Engine::Direct).unwrap().len());
        }
    }
}
