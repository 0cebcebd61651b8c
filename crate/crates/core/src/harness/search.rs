//! Hill-climbing over product sets `A_1 × … × A_d` for small distance sets.
//!
//! For a product set, `Δ(E) = D(A_1) + … + D(A_d)` with
//! `D(A) = {(a − b)² : a, b ∈ A}`, so each step costs `O(d·q²)` instead of a
//! full spectrum.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::field::{sqrt_minus_one, FieldElement, FieldSpec};
use crate::rng::rng_from_seed;
use crate::space::{generate, Generator, PointSet};

/// Steps between restarts from a fresh random product set.
pub const RESTART_INTERVAL: u64 = 500;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchMove {
    pub step: u64,
    pub restart: u32,
    pub factor: usize,
    pub removed: FieldElement,
    pub added: FieldElement,
    pub delta_size: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub factors: Vec<Vec<FieldElement>>,
    pub delta_size: usize,
    pub initial_factors: Vec<Vec<FieldElement>>,
    pub initial_delta_size: usize,
    /// Every proposed move, accepted or not, plus one entry per restart
    /// (with `factor = usize::MAX`).
    pub trail: Vec<SearchMove>,
}

impl SearchOutcome {
    pub fn set(&self, field: &FieldSpec) -> Result<PointSet, HarnessError> {
        Ok(generate(field, self.factors.len(), &Generator::Product { factors: self.factors.clone() }, 0)?)
    }
}

/// The most balanced `d` factor sizes in `1..=q` with product `target`
/// (smallest spread, then lexicographically largest first factor).
pub fn factor_sizes(q: u32, d: usize, target: u64) -> Result<Vec<usize>, HarnessError> {
    fn go(q: u64, d: usize, target: u64, max: u64, prefix: &mut Vec<u64>, best: &mut Option<Vec<u64>>) {
        if d == 0 {
            if target == 1 {
                let spread = prefix[0] - prefix[prefix.len() - 1];
                if best.as_ref().is_none_or(|b| spread < b[0] - b[b.len() - 1]) {
                    *best = Some(prefix.clone());
                }
            }
            return;
        }
        for m in (1..=max.min(target)).rev() {
            if target % m == 0 && m.checked_pow(d as u32).is_some_and(|v| v >= target) {
                prefix.push(m);
                go(q, d - 1, target / m, m, prefix, best);
                prefix.pop();
            }
        }
    }
    let bad = HarnessError::BadFactorization { target, d, q };
    if d == 0 || target == 0 {
        return Err(bad);
    }
    let mut best = None;
    go(q as u64, d, target, q as u64, &mut Vec::new(), &mut best);
    best.map(|b| b.into_iter().map(|m| m as usize).collect()).ok_or(bad)
}

fn square_differences(field: &FieldSpec, a: &[FieldElement]) -> Vec<bool> {
    let mut seen = vec![false; field.q() as usize];
    for &x in a {
        for &y in a {
            seen[field.square(field.sub(x, y)).0 as usize] = true;
        }
    }
    seen
}

/// `Δ(A_1 × … × A_d)` as the sumset of the per-factor squared differences.
pub fn product_delta(field: &FieldSpec, factors: &[Vec<FieldElement>]) -> Vec<FieldElement> {
    let q = field.q() as usize;
    let mut acc = vec![false; q];
    acc[0] = true;
    for a in factors {
        let d = square_differences(field, a);
        let mut next = vec![false; q];
        for s in (0..q).filter(|&s| acc[s]) {
            for t in (0..q).filter(|&t| d[t]) {
                next[field.add(FieldElement(s as u32), FieldElement(t as u32)).0 as usize] = true;
            }
        }
        acc = next;
    }
    acc.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| FieldElement(v as u32)).collect()
}

fn random_factors(field: &FieldSpec, sizes: &[usize], rng: &mut impl Rng) -> Vec<Vec<FieldElement>> {
    sizes
        .iter()
        .map(|&m| {
            let mut a: Vec<FieldElement> = sample(rng, field.q() as usize, m).into_iter().map(|v| FieldElement(v as u32)).collect();
            a.sort();
            a
        })
        .collect()
}

/// Minimises `|Δ(E)|` over product sets of size `target_size`.
///
/// Each step swaps one element of one factor for an element outside it and
/// keeps the swap when `|Δ|` does not grow. Every [`RESTART_INTERVAL`]
/// steps the walk restarts from a fresh random product; the best set seen
/// over all restarts is returned. The result is a local optimum, not a
/// certified minimum.
pub fn search_extremal(field: &FieldSpec, d: usize, target_size: u64, steps: u64, seed: u64) -> Result<SearchOutcome, HarnessError> {
    let sizes = factor_sizes(field.q(), d, target_size)?;
    let mut rng = rng_from_seed(seed);
    let initial = random_factors(field, &sizes, &mut rng);
    let initial_delta = product_delta(field, &initial).len();

    let mut current = initial.clone();
    let mut current_delta = initial_delta;
    let mut best = (initial.clone(), initial_delta);
    let mut trail = Vec::new();
    let mut restart = 0u32;
    let swappable: Vec<usize> = (0..d).filter(|&i| sizes[i] < field.q() as usize).collect();

    for step in 0..steps {
        if step > 0 && step % RESTART_INTERVAL == 0 {
            restart += 1;
            current = random_factors(field, &sizes, &mut rng);
            current_delta = product_delta(field, &current).len();
            trail.push(SearchMove { step, restart, factor: usize::MAX, removed: FieldElement::ZERO, added: FieldElement::ZERO, delta_size: current_delta, accepted: true });
            if current_delta < best.1 {
                best = (current.clone(), current_delta);
            }
        }
        if swappable.is_empty() {
            break;
        }
        let i = swappable[rng.random_range(0..swappable.len())];
        let pos = rng.random_range(0..current[i].len());
        let outside: Vec<FieldElement> = field.elements().filter(|x| current[i].binary_search(x).is_err()).collect();
        let added = outside[rng.random_range(0..outside.len())];
        let removed = current[i][pos];

        let mut candidate = current[i].clone();
        candidate.remove(pos);
        let at = candidate.binary_search(&added).unwrap_err();
        candidate.insert(at, added);
        let old = std::mem::replace(&mut current[i], candidate);
        let delta = product_delta(field, &current).len();
        let accepted = delta <= current_delta;
        trail.push(SearchMove { step, restart, factor: i, removed, added, delta_size: delta, accepted });
        if accepted {
            current_delta = delta;
            if delta < best.1 {
                best = (current.clone(), delta);
            }
        } else {
            current[i] = old;
        }
    }

    Ok(SearchOutcome { factors: best.0, delta_size: best.1, initial_factors: initial, initial_delta_size: initial_delta, trail })
}

/// `{0, …, m−1} × i·{0, …, m−1}` in `F_q^2`, the grid rotated into an
/// isotropic direction. Needs `q ≡ 1 mod 4`.
pub fn i_scaled_grid(field: &FieldSpec, m: u32) -> Option<Vec<Vec<FieldElement>>> {
    let i = sqrt_minus_one(field)?;
    let a: Vec<FieldElement> = (0..m.min(field.q())).map(FieldElement).collect();
    let mut b: Vec<FieldElement> = a.iter().map(|&x| field.mul(i, x)).collect();
    b.sort();
    Some(vec![a, b])
}
