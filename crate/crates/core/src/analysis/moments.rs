//! Second-moment machinery: the Cauchy–Schwarz chain, the character
//! expansion of the triple count, and the `A`/`B` decomposition bounds.

use rand::Rng;
use rayon::prelude::*;

use super::{check_nonempty, checked, require_odd, AnalysisError, DiagnosticsReport, Rational};
use crate::field::{FieldElement, FieldSpec};
use crate::rng::rng_from_seed;
use crate::space::{dot, norm, pin_slice, PinSpec, PointSet};
use crate::spectra::{spectrum, Engine, Metric, Spectrum};

/// Character-sum summands allowed per identity check.
pub const CHARACTER_BUDGET: u64 = 1 << 31;

/// Absolute tolerance per character summand.
pub const TOLERANCE_PER_SUMMAND: f64 = 1e-6;

/// `(Σν)² ≤ |supp ν|·Σν²` for the spectrum of `F × E`.
pub fn cs_chain(f: &PointSet, e: &PointSet, metric: Metric) -> Result<DiagnosticsReport, AnalysisError> {
    cs_chain_with_engine(f, e, metric, Engine::Direct)
}

/// [`cs_chain`] with the spectrum computed by `engine`.
pub fn cs_chain_with_engine(f: &PointSet, e: &PointSet, metric: Metric, engine: Engine) -> Result<DiagnosticsReport, AnalysisError> {
    check_nonempty(f)?;
    check_nonempty(e)?;
    let s = spectrum(f, e, metric, engine)?;
    let mut report = DiagnosticsReport::new("cs_chain", f.field().p(), f.field().k(), f.dim());
    report.metric = Some(metric);
    report.size_e = e.len() as u64;
    report.size_ez = f.len() as u64;
    fill_chain(&mut report, &s)?;
    Ok(report)
}

pub(crate) fn fill_chain(report: &mut DiagnosticsReport, s: &Spectrum) -> Result<(), AnalysisError> {
    let first = s.first_moment();
    let second = s.second_moment();
    let supp = s.support(false).len() as u64;
    report.first_moment = Some(first);
    report.second_moment = Some(second);
    report.support_size = Some(supp);
    report.support_size_nonzero = Some(s.support(true).len() as u64);
    let squared = checked(first.checked_mul(first))?;
    report.flag("mass", first == report.size_e as u128 * report.size_ez as u128);
    report.flag("cs_chain", squared <= checked((supp as u128).checked_mul(second))?);
    let lower = squared.div_ceil(second);
    report.cs_lower_bound = Some(lower);
    report.flag("cs_lower_bound", lower <= supp as u128);
    Ok(())
}

/// The form with its `x`-independent part isolated: `||y|| − 2x·y` for
/// distances, `x·y` for dot products.
fn phase(field: &FieldSpec, metric: Metric, x: &[FieldElement], y: &[FieldElement], norm_y: FieldElement) -> FieldElement {
    match metric {
        Metric::Distance => {
            let two = field.from_int(2);
            field.sub(norm_y, field.mul(two, dot(field, x, y)))
        }
        Metric::Dot => dot(field, x, y),
    }
}

fn form(field: &FieldSpec, metric: Metric, x: &[FieldElement], y: &[FieldElement]) -> FieldElement {
    match metric {
        Metric::Distance => crate::space::distance(field, x, y),
        Metric::Dot => dot(field, x, y),
    }
}

/// `|E_z|·Σ_{x∈E_z} Σ_t ν_x(t)²` by exact triple counting.
fn triple_count(field: &FieldSpec, metric: Metric, slice: &PointSet, e: &PointSet) -> u128 {
    let ys: Vec<Vec<FieldElement>> = e.points().collect();
    let xs: Vec<Vec<FieldElement>> = slice.points().collect();
    let q = field.q() as usize;
    let per_x: Vec<u128> = xs
        .par_iter()
        .map(|x| {
            let mut hist = vec![0u64; q];
            for y in &ys {
                hist[form(field, metric, x, y).0 as usize] += 1;
            }
            hist.iter().map(|&h| h as u128 * h as u128).sum()
        })
        .collect();
    slice.len() as u128 * per_x.iter().sum::<u128>()
}

/// `q^{-1}|E_z| Σ_{s≠0} Σ_{x∈E_z} |Σ_{y∈E} χ(s·phase(x, y))|²` by direct
/// character summation. Summation order is fixed, so the value is
/// bit-stable regardless of thread count.
fn character_remainder(field: &FieldSpec, metric: Metric, slice: &PointSet, e: &PointSet) -> f64 {
    let ys: Vec<Vec<FieldElement>> = e.points().collect();
    let norms: Vec<FieldElement> = ys.iter().map(|y| norm(field, y)).collect();
    let xs: Vec<Vec<FieldElement>> = slice.points().collect();
    let per_x: Vec<f64> = xs
        .par_iter()
        .map(|x| {
            let phases: Vec<FieldElement> = ys.iter().zip(&norms).map(|(y, &n)| phase(field, metric, x, y, n)).collect();
            let mut acc = 0.0;
            for s in field.elements().skip(1) {
                let sum: num_complex::Complex64 = phases.iter().map(|&u| field.add_char(field.mul(s, u))).sum();
                acc += sum.norm_sqr();
            }
            acc
        })
        .collect();
    per_x.iter().sum::<f64>() * slice.len() as f64 / field.q() as f64
}

/// Verifies `W = q^{-1}|E_z|²|E|² + R` where `W` is counted exactly and
/// `R` (or `II` for the dot form) is summed from characters.
pub fn second_moment_identity(e: &PointSet, pin: PinSpec, metric: Metric) -> Result<DiagnosticsReport, AnalysisError> {
    check_nonempty(e)?;
    let field = e.field();
    let slice = pin_slice(e, pin)?;
    let summands = (field.q() as u64 - 1) * slice.len() as u64 * e.len() as u64;
    if summands > CHARACTER_BUDGET {
        return Err(AnalysisError::BudgetExceeded { summands, budget: CHARACTER_BUDGET });
    }

    let mut report = DiagnosticsReport::new("second_moment_identity", field.p(), field.k(), e.dim());
    report.metric = Some(metric);
    report.pin = Some(pin);
    report.size_e = e.len() as u64;
    report.size_ez = slice.len() as u64;

    let w = triple_count(field, metric, &slice, e);
    let mass = slice.len() as u128 * e.len() as u128;
    let main = Rational::from_u128(checked(mass.checked_mul(mass))?, field.q() as u128);
    let r = character_remainder(field, metric, &slice, e);
    let tolerance = TOLERANCE_PER_SUMMAND * summands.max(1) as f64;
    let residual = (w as f64 - main.to_f64() - r).abs();

    report.w_term = Some(w);
    report.main_term = Some(main);
    report.r_term = Some(r);
    report.identity_residual = Some(residual);
    report.tolerance = Some(tolerance);
    if residual >= tolerance {
        return Err(AnalysisError::ToleranceExceeded { residual, tolerance });
    }
    report.flag("identity", true);
    report.flag("remainder_nonnegative", r >= -1e-9);
    report.flag("phase_identity", phase_identity_holds(field, metric, &slice, e, pin));
    Ok(report)
}

/// Spot-checks `phase(x,y) − phase(x,y') = form(x,y) − form(x,y')` on
/// random triples drawn from `E_z × E × E`.
fn phase_identity_holds(field: &FieldSpec, metric: Metric, slice: &PointSet, e: &PointSet, pin: PinSpec) -> bool {
    let xs: Vec<Vec<FieldElement>> = slice.points().collect();
    let ys: Vec<Vec<FieldElement>> = e.points().collect();
    let mut rng = rng_from_seed(0x7269_7069 ^ (pin.j as u64) ^ ((pin.z.0 as u64) << 8));
    (0..256).all(|_| {
        let x = &xs[rng.random_range(0..xs.len())];
        let y = &ys[rng.random_range(0..ys.len())];
        let y2 = &ys[rng.random_range(0..ys.len())];
        let lhs = field.sub(phase(field, metric, x, y, norm(field, y)), phase(field, metric, x, y2, norm(field, y2)));
        let rhs = field.sub(form(field, metric, x, y), form(field, metric, x, y2));
        lhs == rhs
    })
}

/// Pair counts behind the `A`/`B` terms: `(#{π_j(y) = π_j(y'), constraint},
/// #{π_j(y) = π_j(y')})` over `E × E`.
fn constrained_pair_counts(e: &PointSet, pin: PinSpec, metric: Metric) -> (u128, u128) {
    let field = e.field();
    let axis = pin.j - 1;
    let z = pin.z;
    let two_z = field.mul(field.from_int(2), z);
    let mut groups: std::collections::BTreeMap<Vec<FieldElement>, Vec<FieldElement>> = Default::default();
    for y in e.points() {
        let mut key = y.clone();
        let yj = key[axis];
        key[axis] = FieldElement::ZERO;
        groups.entry(key).or_default().push(yj);
    }
    let mut constrained = 0u128;
    let mut same_fibre = 0u128;
    for values in groups.values() {
        same_fibre += (values.len() * values.len()) as u128;
        for &a in values {
            for &b in values {
                let hit = match metric {
                    // 2z(y_j − y'_j) = y_j² − y'_j²
                    Metric::Distance => field.mul(two_z, field.sub(a, b)) == field.sub(field.square(a), field.square(b)),
                    // z(y_j − y'_j) = 0
                    Metric::Dot => field.mul(z, field.sub(a, b)).is_zero(),
                };
                constrained += hit as u128;
            }
        }
    }
    (constrained, same_fibre)
}

fn q_power(q: u32, exp: i64) -> Rational {
    if exp >= 0 {
        Rational::new((q as i128).pow(exp as u32), 1)
    } else {
        Rational::new(1, (q as i128).pow((-exp) as u32))
    }
}

/// `Σν² ≤ q^{-1}|E|²|E_z|² + κ q^{d−1}|E||E_z|` with `κ = 3` (distance) or
/// `κ = 2` (dot), plus the `A`/`B` decomposition bounds and, when within
/// budget, `R ≤ A − B`.
pub fn second_moment_bound(e: &PointSet, pin: PinSpec, metric: Metric) -> Result<DiagnosticsReport, AnalysisError> {
    check_nonempty(e)?;
    let field = e.field();
    require_odd(field)?;
    if metric == Metric::Dot && pin.z.is_zero() {
        return Err(AnalysisError::ZeroPin);
    }
    let slice = pin_slice(e, pin)?;
    let d = e.dim();
    let q = field.q() as u128;
    let qd = checked(q.checked_pow(d as u32))?;

    let mut report = DiagnosticsReport::new("second_moment_bound", field.p(), field.k(), d);
    report.metric = Some(metric);
    report.pin = Some(pin);
    report.size_e = e.len() as u64;
    report.size_ez = slice.len() as u64;
    report.observe("z_valid", crate::space::valid_pins(e, pin.j)?.contains(&pin.z));

    let s = spectrum(&slice, e, metric, Engine::Direct)?;
    fill_chain(&mut report, &s)?;
    let second = s.second_moment();
    let mass = slice.len() as u128 * e.len() as u128;
    let mass_sq = checked(mass.checked_mul(mass))?;
    let kappa: u128 = match metric {
        Metric::Distance => 3,
        Metric::Dot => 2,
    };
    report.kappa_paper = Some(kappa as u32);
    report.main_term = Some(Rational::from_u128(mass_sq, q));

    // q·Σν² ≤ |E|²|E_z|² + κ q^d |E||E_z|
    let lhs = checked(q.checked_mul(second))?;
    let slack = checked(qd.checked_mul(mass))?;
    report.flag("second_moment_bound", lhs <= mass_sq + kappa * slack);
    if metric == Metric::Distance {
        report.flag("second_moment_bound_kappa2", lhs <= mass_sq + 2 * slack);
    } else {
        report.observe("second_moment_bound_kappa1", lhs <= mass_sq + slack);
    }
    let excess = lhs.saturating_sub(mass_sq) as f64 / q as f64;
    report.kappa_emp = Some(excess * q as f64 / (qd as f64 * mass as f64));

    let (constrained, same_fibre) = constrained_pair_counts(e, pin, metric);
    let ez = Rational::new(slice.len() as i128, 1);
    let a_term = Rational(q_power(field.q(), d as i64 - 1).0 * ez.0 * constrained as i128);
    let b_term = Rational(q_power(field.q(), d as i64 - 2).0 * ez.0 * same_fibre as i128);
    report.a_term = Some(a_term);
    report.b_term = Some(b_term);
    let size_e = e.len() as u128;
    report.flag("b_bound", same_fibre <= q * size_e);
    let a_factor = match metric {
        Metric::Distance => 2,
        Metric::Dot => 1,
    };
    report.flag("a_bound", constrained <= a_factor * size_e);

    let summands = (field.q() as u64 - 1) * slice.len() as u64 * e.len() as u64;
    if summands <= CHARACTER_BUDGET {
        let r = character_remainder(field, metric, &slice, e);
        let tolerance = TOLERANCE_PER_SUMMAND * summands.max(1) as f64;
        report.r_term = Some(r);
        report.tolerance = Some(tolerance);
        report.flag("remainder_le_a_minus_b", r <= Rational(a_term.0 - b_term.0).to_f64() + tolerance);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use crate::space::{generate, Generator};

    fn random_instance(p: u64, k: u32, d: usize, n: u64, seed: u64) -> (PointSet, PinSpec) {
        let f = make_field(p, k).unwrap();
        let e = generate(&f, d, &Generator::Random { n }, seed).unwrap();
        let mut rng = rng_from_seed(seed ^ 0xabc);
        let pin = PinSpec::new(rng.random_range(1..=d), FieldElement(rng.random_range(1..f.q())));
        (e, pin)
    }

    #[test]
    fn cs_chain_equality_cases() {
        // ν constant over all of F_q: the full plane against itself
        let f = make_field(5, 1).unwrap();
        let s = Spectrum::from_counts(&f, vec![3; 5]);
        let mut r = DiagnosticsReport::new("cs_chain", 5, 1, 2);
        r.size_e = 5;
        r.size_ez = 3;
        fill_chain(&mut r, &s).unwrap();
        assert_eq!(r.cs_lower_bound, Some(5));
        assert!(r.passed());

        let line = generate(&f, 2, &Generator::IsotropicLine, 0).unwrap();
        let r = cs_chain(&line, &line, Metric::Distance).unwrap();
        assert_eq!(r.support_size, Some(1));
        assert_eq!(r.first_moment.unwrap().pow(2), r.second_moment.unwrap());
        assert!(r.passed());
    }

    #[test]
    fn cs_chain_random() {
        for seed in 0..50u64 {
            let (p, k) = [(5, 1), (7, 1), (3, 2), (13, 1)][seed as usize % 4];
            let d = 2 + (seed as usize / 4) % 2;
            let f = make_field(p, k).unwrap();
            let cap = (f.q() as u64).pow(d as u32);
            let e = generate(&f, d, &Generator::Random { n: 1 + seed * 7 % cap }, seed).unwrap();
            for metric in [Metric::Distance, Metric::Dot] {
                let r = cs_chain(&e, &e, metric).unwrap();
                assert!(r.passed(), "{:?}", r.failed_flags());
            }
        }
    }

    #[test]
    fn identity_singleton() {
        let f = make_field(7, 1).unwrap();
        let e = PointSet::from_values(&f, 2, &[&[3, 4]]).unwrap();
        for metric in [Metric::Distance, Metric::Dot] {
            let r = second_moment_identity(&e, PinSpec::new(1, FieldElement(2)), metric).unwrap();
            assert_eq!(r.w_term, Some(1));
            let r_expected = 1.0 - 1.0 / 7.0;
            assert!((r.r_term.unwrap() - r_expected).abs() < 1e-9);
            assert!(r.passed());
        }
    }

    #[test]
    fn identity_random_f5() {
        for seed in 0..20 {
            let (e, pin) = random_instance(5, 1, 2, 12, seed);
            for metric in [Metric::Distance, Metric::Dot] {
                let r = second_moment_identity(&e, pin, metric).unwrap();
                assert!(r.identity_residual.unwrap() < 1e-6);
                assert!(r.passed(), "{:?}", r.failed_flags());
            }
        }
    }

    #[test]
    fn dot_remainder_vanishes_on_full_space() {
        for (p, k, d) in [(5u64, 1u32, 2usize), (3, 2, 2), (3, 1, 3)] {
            let f = make_field(p, k).unwrap();
            let full = PointSet::full(&f, d).unwrap();
            let r = second_moment_identity(&full, PinSpec::new(d, FieldElement(1)), Metric::Dot).unwrap();
            assert!(r.r_term.unwrap().abs() < 1e-6, "{:?}", r.r_term);
        }
    }

    #[test]
    fn identity_budget() {
        let f = make_field(1021, 1).unwrap();
        let e = generate(&f, 2, &Generator::Random { n: 3000 }, 1).unwrap();
        let err = second_moment_identity(&e, PinSpec::new(1, FieldElement(1)), Metric::Distance).unwrap_err();
        assert!(matches!(err, AnalysisError::BudgetExceeded { .. }));
    }

    #[test]
    fn bound_rejects_degenerate_inputs() {
        let f2 = make_field(2, 2).unwrap();
        let e = PointSet::full(&f2, 2).unwrap();
        assert_eq!(second_moment_bound(&e, PinSpec::new(1, FieldElement(1)), Metric::Distance).unwrap_err(), AnalysisError::EvenCharacteristic);
        let f5 = make_field(5, 1).unwrap();
        let e = PointSet::full(&f5, 2).unwrap();
        assert_eq!(second_moment_bound(&e, PinSpec::new(1, FieldElement(0)), Metric::Dot).unwrap_err(), AnalysisError::ZeroPin);
        let empty = PointSet::empty(&f5, 2).unwrap();
        assert_eq!(second_moment_bound(&empty, PinSpec::new(1, FieldElement(1)), Metric::Distance).unwrap_err(), AnalysisError::EmptySet);
    }

    #[test]
    fn bound_full_space() {
        for (p, k, d) in [(5u64, 1u32, 2usize), (3, 2, 2), (7, 1, 3)] {
            let f = make_field(p, k).unwrap();
            let full = PointSet::full(&f, d).unwrap();
            for metric in [Metric::Distance, Metric::Dot] {
                let r = second_moment_bound(&full, PinSpec::new(1, FieldElement(1)), metric).unwrap();
                assert!(r.passed(), "{:?}", r.failed_flags());
                assert!(r.kappa_emp.unwrap() < r.kappa_paper.unwrap() as f64);
            }
        }
    }

    #[test]
    fn bound_random_instances() {
        for seed in 0..100u64 {
            let (p, k) = [(5, 1), (7, 1), (3, 2), (13, 1)][seed as usize % 4];
            let d = 2 + (seed as usize / 4) % 2;
            let cap = (p as u64).pow(k * d as u32);
            let (e, pin) = random_instance(p, k, d, 1 + (seed * 37) % cap, seed);
            for metric in [Metric::Distance, Metric::Dot] {
                let r = second_moment_bound(&e, pin, metric).unwrap();
                assert!(r.passed(), "seed {seed} {metric}: {:?}", r.failed_flags());
                for (name, stored, recomputed) in r.recheck() {
                    assert_eq!(stored, Some(recomputed), "{name}");
                }
            }
        }
    }
}
