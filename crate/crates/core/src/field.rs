//! Exact arithmetic in `F_q`, `q = p^k`.
//!
//! Elements are encoded as integers in `[0, q)`: the residue `Σ c_i x^i`
//! (coefficients in `[0, p)`, low degree first) maps to `Σ c_i p^i`. This
//! base-`p` digit encoding is the wire format used by every file and CLI
//! surface in the crate.
//!
//! The reduction modulus is the *canonically smallest* monic irreducible of
//! degree `k`: monic degree-`k` polynomials are ordered by the integer
//! `Σ_{i<k} c_i p^i` and the first irreducible one wins. These encodings are
//! therefore not interoperable with Conway-polynomial based systems.
//!
//! Multiplication goes through discrete log / antilog tables built once per
//! field, so a [`FieldSpec`] is cheap to clone (tables are shared) and safe
//! to send across threads.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest supported field order.
pub const MAX_FIELD_ORDER: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("characteristic {0} is not prime")]
    NonPrime(u64),
    #[error("extension degree {0} out of range")]
    DegreeOutOfRange(u32),
    #[error("field order {p}^{k} exceeds the cap of {}", MAX_FIELD_ORDER)]
    FieldTooLarge { p: u64, k: u32 },
    #[error("modulus {0:?} is not a monic irreducible polynomial of the stated degree")]
    BadModulus(Vec<u32>),
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("value {value} is not an element of F_{q}")]
    OutOfRange { value: u64, q: u32 },
}

/// Canonical integer encoding of an element of some `F_q`.
///
/// The value carries no reference to its field; range checks happen at the
/// [`FieldSpec::element`] boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement(pub u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

struct Tables {
    /// `exp[i] = g^i` for `i` in `[0, 2(q-1))`.
    exp: Vec<u32>,
    /// `log[a]` for `a != 0`; `log[0]` is unused.
    log: Vec<u32>,
    /// Absolute trace, a value in `[0, p)`.
    trace: Vec<u32>,
    /// `e^{2πi t/p}` for `t` in `[0, p)`.
    roots: Vec<Complex64>,
    /// `p^i` for `i` in `[0, k]`.
    pow_p: Vec<u32>,
}

/// Arithmetic context for `F_{p^k}`.
///
/// Two specs compare equal iff `(p, k, modulus)` agree.
#[derive(Clone)]
pub struct FieldSpec {
    p: u32,
    k: u32,
    q: u32,
    modulus: Vec<u32>,
    tables: Arc<Tables>,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.p)
            .field("k", &self.k)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{} (p={}, k={}, modulus {})", self.q, self.p, self.k, poly_to_string(&self.modulus))
    }
}

#[derive(Serialize, Deserialize)]
struct FieldWire {
    p: u32,
    k: u32,
    modulus: Vec<u32>,
}

impl Serialize for FieldSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        FieldWire { p: self.p, k: self.k, modulus: self.modulus.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = FieldWire::deserialize(deserializer)?;
        if wire.modulus.len() != wire.k as usize + 1 {
            return Err(serde::de::Error::custom("modulus length does not match degree"));
        }
        FieldSpec::with_modulus(wire.p, &wire.modulus).map_err(serde::de::Error::custom)
    }
}

/// Builds `F_{p^k}` with the canonical modulus.
pub fn make_field(p: u64, k: u32) -> Result<FieldSpec, FieldError> {
    FieldSpec::new(p, k)
}

/// `F_q` for a prime power `q`; `NonPrime(q)` otherwise.
pub fn field_of_order(q: u64) -> Result<FieldSpec, FieldError> {
    if q < 2 {
        return Err(FieldError::NonPrime(q));
    }
    let p = (2..).take_while(|p| p * p <= q).find(|p| q % p == 0).unwrap_or(q);
    let (mut r, mut k) = (q, 0u32);
    while r % p == 0 {
        r /= p;
        k += 1;
    }
    if r != 1 {
        return Err(FieldError::NonPrime(q));
    }
    FieldSpec::new(p, k)
}

impl FieldSpec {
    pub fn new(p: u64, k: u32) -> Result<Self, FieldError> {
        let p32 = check_order(p, k)?;
        let modulus = canonical_modulus(p32, k);
        Ok(Self::build(p32, k, modulus))
    }

    /// Builds `F_{p^k}` with an explicit monic modulus (coefficients low
    /// degree first, length `k + 1`).
    pub fn with_modulus(p: u32, modulus: &[u32]) -> Result<Self, FieldError> {
        if modulus.len() < 2 {
            return Err(FieldError::DegreeOutOfRange(0));
        }
        let k = (modulus.len() - 1) as u32;
        check_order(p as u64, k)?;
        if modulus[k as usize] != 1 || modulus.iter().any(|&c| c >= p) || !is_irreducible(p, modulus) {
            return Err(FieldError::BadModulus(modulus.to_vec()));
        }
        Ok(Self::build(p, k, modulus.to_vec()))
    }

    fn build(p: u32, k: u32, modulus: Vec<u32>) -> Self {
        let q = p.pow(k);
        let pow_p: Vec<u32> = (0..=k).map(|i| p.pow(i)).collect();
        let order = (q - 1) as u64;

        let mul_slow = |a: u32, b: u32| encode(&poly_mulmod(&decode(a, p, k), &decode(b, p, k), &modulus, p), p);
        let pow_slow = |mut base: u32, mut e: u64| {
            let mut acc = 1u32;
            while e > 0 {
                if e & 1 == 1 {
                    acc = mul_slow(acc, base);
                }
                base = mul_slow(base, base);
                e >>= 1;
            }
            acc
        };

        let factors = prime_factors(order);
        let generator = (1..q)
            .find(|&g| factors.iter().all(|&r| pow_slow(g, order / r) != 1))
            .expect("multiplicative group of a finite field is cyclic");

        let mut exp = vec![0u32; 2 * order as usize];
        let mut log = vec![0u32; q as usize];
        let mut cur = 1u32;
        for i in 0..order as usize {
            exp[i] = cur;
            exp[i + order as usize] = cur;
            log[cur as usize] = i as u32;
            cur = mul_slow(cur, generator);
        }
        debug_assert_eq!(cur, 1);

        let roots = (0..p).map(|t| Complex64::from_polar(1.0, TAU * t as f64 / p as f64)).collect();

        let mut spec = FieldSpec {
            p,
            k,
            q,
            modulus,
            tables: Arc::new(Tables { exp, log, trace: Vec::new(), roots, pow_p }),
        };
        // trace(a) = Σ_{i<k} a^{p^i}
        let trace: Vec<u32> = (0..q)
            .map(|a| {
                let mut acc = FieldElement::ZERO;
                let mut frob = FieldElement(a);
                for _ in 0..k {
                    acc = spec.add(acc, frob);
                    frob = spec.pow(frob, p as u64);
                }
                debug_assert!(acc.0 < p, "trace must land in the prime subfield");
                acc.0
            })
            .collect();
        Arc::get_mut(&mut spec.tables).expect("tables are uniquely owned during construction").trace = trace;
        spec
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.k
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Modulus coefficients, low degree first, length `k + 1`.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn is_prime_field(&self) -> bool {
        self.k == 1
    }

    /// Checked conversion from a canonical integer.
    pub fn element(&self, value: u64) -> Result<FieldElement, FieldError> {
        if value < self.q as u64 {
            Ok(FieldElement(value as u32))
        } else {
            Err(FieldError::OutOfRange { value, q: self.q })
        }
    }

    /// The image of an integer under `Z -> F_p ⊂ F_q`.
    pub fn from_int(&self, n: i64) -> FieldElement {
        FieldElement(n.rem_euclid(self.p as i64) as u32)
    }

    pub fn contains(&self, a: FieldElement) -> bool {
        a.0 < self.q
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(FieldElement)
    }

    /// Bind an element to this field for checked arithmetic.
    pub fn bind(&self, a: FieldElement) -> Result<Element<'_>, FieldError> {
        if self.contains(a) {
            Ok(Element { field: self, value: a })
        } else {
            Err(FieldError::OutOfRange { value: a.0 as u64, q: self.q })
        }
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.k == 1 {
            let s = a.0 + b.0;
            return FieldElement(if s >= self.p { s - self.p } else { s });
        }
        let (p, mut x, mut y) = (self.p, a.0, b.0);
        let mut out = 0;
        for &w in &self.tables.pow_p[..self.k as usize] {
            let s = x % p + y % p;
            out += if s >= p { s - p } else { s } * w;
            x /= p;
            y /= p;
        }
        FieldElement(out)
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if self.k == 1 {
            return FieldElement(if a.0 == 0 { 0 } else { self.p - a.0 });
        }
        let (p, mut x) = (self.p, a.0);
        let mut out = 0;
        for &w in &self.tables.pow_p[..self.k as usize] {
            let c = x % p;
            out += if c == 0 { 0 } else { p - c } * w;
            x /= p;
        }
        FieldElement(out)
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.k == 1 {
            return FieldElement(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.p - b.0 });
        }
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        let t = &self.tables;
        FieldElement(t.exp[(t.log[a.0 as usize] + t.log[b.0 as usize]) as usize])
    }

    #[inline]
    pub fn square(&self, a: FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::DivisionByZero);
        }
        let order = self.q - 1;
        let l = self.tables.log[a.0 as usize];
        Ok(FieldElement(self.tables.exp[((order - l) % order) as usize]))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `a^e`, with `0^0 = 1`.
    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if a.0 == 0 {
            return FieldElement::ZERO;
        }
        let order = (self.q - 1) as u64;
        let l = self.tables.log[a.0 as usize] as u64;
        FieldElement(self.tables.exp[((l * (e % order)) % order) as usize])
    }

    /// Absolute trace `Σ_{i<k} a^{p^i}`, reported as an integer in `[0, p)`.
    #[inline]
    pub fn trace(&self, a: FieldElement) -> u32 {
        self.tables.trace[a.0 as usize]
    }

    /// The canonical additive character `χ(s) = e^{2πi·tr(s)/p}`.
    #[inline]
    pub fn add_char(&self, s: FieldElement) -> Complex64 {
        self.tables.roots[self.tables.trace[s.0 as usize] as usize]
    }

    /// `e^{2πi t/p}`; `t` must be below `p`.
    #[inline]
    pub fn root_of_unity(&self, t: u32) -> Complex64 {
        self.tables.roots[t as usize]
    }

    /// Base-`p` digits of `a`, i.e. its polynomial coefficients, low first.
    pub fn digits(&self, a: FieldElement) -> Vec<u32> {
        decode(a.0, self.p, self.k)
    }

    /// The class of `x` in `F_p[x]/(modulus)`; equals `p` for `k > 1`.
    pub fn primitive_x(&self) -> Option<FieldElement> {
        (self.k > 1).then_some(FieldElement(self.p))
    }
}

/// The smallest canonical value whose square is `-1`, if any.
pub fn sqrt_minus_one(field: &FieldSpec) -> Option<FieldElement> {
    let minus_one = field.neg(FieldElement::ONE);
    field.elements().find(|&a| field.square(a) == minus_one)
}

/// An element bound to its field; mixing fields is reported as
/// [`FieldError::FieldMismatch`].
#[derive(Debug, Clone, Copy)]
pub struct Element<'f> {
    field: &'f FieldSpec,
    value: FieldElement,
}

impl<'f> Element<'f> {
    pub fn value(&self) -> FieldElement {
        self.value
    }

    pub fn field(&self) -> &'f FieldSpec {
        self.field
    }

    fn same_field(&self, other: &Element<'_>) -> Result<(), FieldError> {
        if std::ptr::eq(self.field, other.field) || self.field == other.field {
            Ok(())
        } else {
            Err(FieldError::FieldMismatch)
        }
    }

    fn wrap(&self, value: FieldElement) -> Element<'f> {
        Element { field: self.field, value }
    }

    pub fn try_add(&self, other: &Element<'_>) -> Result<Element<'f>, FieldError> {
        self.same_field(other)?;
        Ok(self.wrap(self.field.add(self.value, other.value)))
    }

    pub fn try_sub(&self, other: &Element<'_>) -> Result<Element<'f>, FieldError> {
        self.same_field(other)?;
        Ok(self.wrap(self.field.sub(self.value, other.value)))
    }

    pub fn try_mul(&self, other: &Element<'_>) -> Result<Element<'f>, FieldError> {
        self.same_field(other)?;
        Ok(self.wrap(self.field.mul(self.value, other.value)))
    }

    pub fn try_div(&self, other: &Element<'_>) -> Result<Element<'f>, FieldError> {
        self.same_field(other)?;
        Ok(self.wrap(self.field.div(self.value, other.value)?))
    }

    pub fn neg(&self) -> Element<'f> {
        self.wrap(self.field.neg(self.value))
    }

    pub fn inv(&self) -> Result<Element<'f>, FieldError> {
        Ok(self.wrap(self.field.inv(self.value)?))
    }

    pub fn pow(&self, e: u64) -> Element<'f> {
        self.wrap(self.field.pow(self.value, e))
    }
}

impl PartialEq for Element<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.value == other.value
    }
}

fn check_order(p: u64, k: u32) -> Result<u32, FieldError> {
    if !is_prime(p) {
        return Err(FieldError::NonPrime(p));
    }
    if k == 0 || k > 20 {
        return Err(FieldError::DegreeOutOfRange(k));
    }
    match p.checked_pow(k) {
        Some(q) if q <= MAX_FIELD_ORDER => Ok(p as u32),
        _ => Err(FieldError::FieldTooLarge { p, k }),
    }
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn decode(mut v: u32, p: u32, k: u32) -> Vec<u32> {
    (0..k)
        .map(|_| {
            let c = v % p;
            v /= p;
            c
        })
        .collect()
}

fn encode(coeffs: &[u32], p: u32) -> u32 {
    coeffs.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Product of two residues (length `k`) reduced by the monic `modulus`.
fn poly_mulmod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let k = modulus.len() - 1;
    let p64 = p as u64;
    let mut prod = vec![0u64; 2 * k];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p64;
        }
    }
    for deg in (k..prod.len()).rev() {
        let lead = prod[deg];
        if lead == 0 {
            continue;
        }
        for (i, &m) in modulus.iter().enumerate().take(k) {
            let idx = deg - k + i;
            prod[idx] = (prod[idx] + (p64 - lead) * m as u64) % p64;
        }
        prod[deg] = 0;
    }
    prod.truncate(k);
    prod.into_iter().map(|c| c as u32).collect()
}

/// Remainder of `f` modulo the monic `g`.
fn poly_rem(f: &[u32], g: &[u32], p: u32) -> Vec<u32> {
    let p64 = p as u64;
    let mut r: Vec<u64> = f.iter().map(|&c| c as u64).collect();
    let dg = g.len() - 1;
    if r.len() <= dg {
        return f.to_vec();
    }
    for deg in (dg..r.len()).rev() {
        let lead = r[deg];
        if lead == 0 {
            continue;
        }
        for (i, &c) in g.iter().enumerate() {
            let idx = deg - dg + i;
            r[idx] = (r[idx] + (p64 - lead) * c as u64) % p64;
        }
    }
    r.truncate(dg);
    r.into_iter().map(|c| c as u32).collect()
}

/// Exhaustive factor check: `f` (monic, degree `k`) is irreducible iff no
/// monic polynomial of degree `1..=k/2` divides it.
pub(crate) fn is_irreducible(p: u32, f: &[u32]) -> bool {
    let k = f.len() - 1;
    if k == 0 {
        return false;
    }
    for m in 1..=k / 2 {
        let count = (p as u64).pow(m as u32);
        for low in 0..count {
            let mut g = decode(low as u32, p, m as u32);
            g.push(1);
            if poly_rem(f, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn canonical_modulus(p: u32, k: u32) -> Vec<u32> {
    let count = (p as u64).pow(k);
    (0..count)
        .map(|low| {
            let mut f = decode(low as u32, p, k);
            f.push(1);
            f
        })
        .find(|f| is_irreducible(p, f))
        .expect("an irreducible polynomial exists in every degree")
}

/// Renders a coefficient list (low degree first) as `x^2 + 1`.
pub fn poly_to_string(coeffs: &[u32]) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &c)| c != 0)
        .map(|(i, &c)| match (i, c) {
            (0, c) => c.to_string(),
            (1, 1) => "x".to_string(),
            (1, c) => format!("{c}x"),
            (i, 1) => format!("x^{i}"),
            (i, c) => format!("{c}x^{i}"),
        })
        .collect();
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}
