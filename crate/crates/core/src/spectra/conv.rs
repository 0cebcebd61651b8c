//! Pair-difference counts `N(v) = |{(x, y) ∈ F × E : x − y = v}|` via
//! transforms over the additive group `(Z_p)^{kd}`.
//!
//! The exact path is a number-theoretic transform modulo a 62-bit prime
//! `P ≡ 1 (mod p)`, applied one digit axis at a time with a naive length-`p`
//! DFT. Counts never exceed `|F||E| ≤ 2^56 < P`, so the result is exact.
//! The float path does the same with complex FFTs and rounds.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::SpectrumError;
use crate::space::PointSet;

/// Largest `q^d` the convolution engines accept.
pub const CONV_CAP: usize = 1 << 22;

/// Rounding residual at which the float path gives up.
pub const FLOAT_RESIDUAL_LIMIT: f64 = 0.4;

fn check_inputs(f: &PointSet, e: &PointSet) -> Result<usize, SpectrumError> {
    if !f.same_space(e) {
        return Err(SpectrumError::SpaceMismatch);
    }
    let n = f.capacity();
    if n > CONV_CAP {
        return Err(SpectrumError::MemoryCap { size: n, cap: CONV_CAP });
    }
    Ok(n)
}

/// Index of `-x` in the base-`p` encoding.
fn negate_index(mut idx: usize, p: usize, digits: usize) -> usize {
    let mut out = 0;
    let mut w = 1;
    for _ in 0..digits {
        let c = idx % p;
        idx /= p;
        out += ((p - c) % p) * w;
        w *= p;
    }
    out
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for 64-bit inputs.
fn is_prime_u64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// An NTT-friendly prime `P = m·p + 1 < 2^62` and a primitive `p`-th root
/// of unity modulo `P`.
pub(crate) fn ntt_prime(p: u64) -> (u64, u64) {
    let limit = (1u64 << 62) - 1;
    let mut m = (limit - 1) / p;
    let modulus = loop {
        let cand = m * p + 1;
        if is_prime_u64(cand) {
            break cand;
        }
        m -= 1;
    };
    let root = (2..)
        .map(|g| pow_mod(g, (modulus - 1) / p, modulus))
        .find(|&w| w != 1)
        .expect("a nontrivial p-th root exists when p | P - 1");
    (modulus, root)
}

/// In-place length-`p` DFT along every base-`p` digit axis.
fn transform_axes<T: Copy + Default>(data: &mut [T], p: usize, digits: usize, mut line: impl FnMut(&mut [T])) {
    let n = data.len();
    let mut buf = vec![T::default(); p];
    let mut stride = 1;
    for _ in 0..digits {
        let block = stride * p;
        for hi in (0..n).step_by(block) {
            for lo in 0..stride {
                let base = hi + lo;
                for (t, slot) in buf.iter_mut().enumerate() {
                    *slot = data[base + t * stride];
                }
                line(&mut buf);
                for (t, &v) in buf.iter().enumerate() {
                    data[base + t * stride] = v;
                }
            }
        }
        stride = block;
    }
}

fn ntt(data: &mut [u64], p: usize, digits: usize, root: u64, modulus: u64) {
    let powers: Vec<u64> = (0..p as u64).map(|i| pow_mod(root, i, modulus)).collect();
    let mut out = vec![0u64; p];
    transform_axes(data, p, digits, |line| {
        for (xi, slot) in out.iter_mut().enumerate() {
            // Each reduced product is below 2^62, so p of them fit in u128.
            let mut acc: u128 = 0;
            for (t, &v) in line.iter().enumerate() {
                if v != 0 {
                    acc += (v as u128 * powers[(xi * t) % p] as u128) % modulus as u128;
                }
            }
            *slot = (acc % modulus as u128) as u64;
        }
        line.copy_from_slice(&out);
    });
}

/// Exact `N(v)` for every `v ∈ F_q^d`, indexed like points.
pub fn pair_difference_counts(f: &PointSet, e: &PointSet) -> Result<Vec<u64>, SpectrumError> {
    let n = check_inputs(f, e)?;
    let p = f.field().p() as usize;
    let digits = f.field().k() as usize * f.dim();
    let (modulus, root) = ntt_prime(p as u64);

    // N = F * Ẽ with Ẽ(y) = E(−y), a cyclic convolution over (Z_p)^{kd}.
    let mut a = vec![0u64; n];
    for i in f.indices() {
        a[i] = 1;
    }
    let mut b = vec![0u64; n];
    for i in e.indices() {
        b[negate_index(i, p, digits)] = 1;
    }
    ntt(&mut a, p, digits, root, modulus);
    ntt(&mut b, p, digits, root, modulus);
    for (x, y) in a.iter_mut().zip(&b) {
        *x = mul_mod(*x, *y, modulus);
    }
    let inv_root = pow_mod(root, modulus - 2, modulus);
    ntt(&mut a, p, digits, inv_root, modulus);
    let inv_n = pow_mod(n as u64 % modulus, modulus - 2, modulus);
    for x in a.iter_mut() {
        *x = mul_mod(*x, inv_n, modulus);
    }
    Ok(a)
}

/// Floating-point variant of [`pair_difference_counts`]; errors if any
/// output is not within [`FLOAT_RESIDUAL_LIMIT`] of an integer.
pub fn pair_difference_counts_float(f: &PointSet, e: &PointSet) -> Result<Vec<u64>, SpectrumError> {
    let n = check_inputs(f, e)?;
    let p = f.field().p() as usize;
    let digits = f.field().k() as usize * f.dim();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(p);
    let inverse = planner.plan_fft_inverse(p);

    let mut a = vec![Complex64::default(); n];
    for i in f.indices() {
        a[i] = Complex64::new(1.0, 0.0);
    }
    let mut b = vec![Complex64::default(); n];
    for i in e.indices() {
        b[negate_index(i, p, digits)] = Complex64::new(1.0, 0.0);
    }
    transform_axes(&mut a, p, digits, |line| forward.process(line));
    transform_axes(&mut b, p, digits, |line| forward.process(line));
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    transform_axes(&mut a, p, digits, |line| inverse.process(line));

    let scale = n as f64;
    a.iter()
        .map(|c| {
            let v = c.re / scale;
            let r = v.round();
            let residual = (v - r).abs().max(c.im.abs() / scale);
            if residual >= FLOAT_RESIDUAL_LIMIT || r < 0.0 {
                Err(SpectrumError::Rounding { residual })
            } else {
                Ok(r as u64)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use crate::space::{generate, Generator};

    fn brute(f: &PointSet, e: &PointSet) -> Vec<u64> {
        let field = f.field();
        let mut out = vec![0u64; f.capacity()];
        for x in f.points() {
            for y in e.points() {
                let v: Vec<_> = x.iter().zip(&y).map(|(&a, &b)| field.sub(a, b)).collect();
                out[f.index_of(&v).unwrap()] += 1;
            }
        }
        out
    }

    #[test]
    fn ntt_primes_are_valid() {
        for p in [2u64, 3, 5, 7, 13, 29, 101, 1021] {
            let (m, w) = ntt_prime(p);
            assert!(m < 1 << 62);
            assert_eq!((m - 1) % p, 0);
            assert!(is_prime_u64(m));
            assert_eq!(pow_mod(w, p, m), 1);
            assert_ne!(w, 1);
        }
        assert!(!is_prime_u64(561));
        assert!(is_prime_u64((1 << 61) - 1));
    }

    #[test]
    fn singleton_counts() {
        let f = make_field(5, 1).unwrap();
        let s = PointSet::from_values(&f, 2, &[&[2, 3]]).unwrap();
        let n = pair_difference_counts(&s, &s).unwrap();
        assert_eq!(n[0], 1);
        assert_eq!(n.iter().sum::<u64>(), 1);
    }

    #[test]
    fn matches_brute_force() {
        for (p, k, d) in [(5u64, 1u32, 2usize), (3, 2, 2), (2, 2, 2), (7, 1, 3), (2, 3, 1), (17, 1, 2), (29, 1, 2), (101, 1, 1), (1021, 1, 1)] {
            let field = make_field(p, k).unwrap();
            for seed in 0..5 {
                let cap = (field.q() as u64).pow(d as u32);
                let f = generate(&field, d, &Generator::Random { n: cap / 3 }, seed).unwrap();
                let e = generate(&field, d, &Generator::Random { n: cap / 2 }, seed + 100).unwrap();
                let want = brute(&f, &e);
                assert_eq!(pair_difference_counts(&f, &e).unwrap(), want);
                assert_eq!(pair_difference_counts_float(&f, &e).unwrap(), want);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let f = make_field(2, 1).unwrap();
        let big = PointSet::empty(&f, 23).unwrap();
        assert!(matches!(pair_difference_counts(&big, &big), Err(SpectrumError::MemoryCap { .. })));
    }
}
