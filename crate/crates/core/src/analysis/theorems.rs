//! Premise/conclusion checks for the pinned distance and dot-product
//! theorems, the product-set slice selection, the sum-product statement
//! and the `4q^{(d+1)/2}` full-coverage threshold.

use super::moments::second_moment_bound;
use super::{check_nonempty, checked, AnalysisError, DiagnosticsReport, Rational};
use crate::field::FieldElement;
use crate::space::{pin_slice, projection_size, valid_pins, PinSpec, PointSet};
use crate::spectra::{aa_plus_aa, distance_set, Engine, Metric, CONV_CAP};

fn pinned_theorem(e: &PointSet, pin: PinSpec, metric: Metric, check: &str) -> Result<DiagnosticsReport, AnalysisError> {
    let mut report = second_moment_bound(e, pin, metric)?;
    report.check = check.to_string();
    let kappa = report.kappa_paper.expect("bound fills kappa") as i128;
    let q = report.q as i128;
    let qd = checked((q as u128).checked_pow(report.d as u32))? as i128;
    let mass = report.size_e as i128 * report.size_ez as i128;

    // C = |E||E_z|/q^d, taken as large as the premise allows.
    let c = Rational::new(mass, qd);
    let derived = Rational(c.0 * q / (c.0 + kappa));
    let stated = Rational(c.0 * q * kappa / (c.0 * kappa + 1));
    report.c = Some(c);
    report.guarantee_derived = Some(derived);
    report.guarantee_paper_stated = Some(stated);

    let supp = report.support_size.expect("bound fills support");
    let supp_nz = report.support_size_nonzero.expect("bound fills support");
    report.flag("derived_guarantee", Rational::new(supp as i128, 1) >= derived);
    report.observe("derived_guarantee_nonzero", Rational::new(supp_nz as i128, 1) >= derived);
    report.observe("paper_stated_guarantee", Rational::new(supp as i128, 1) >= stated);
    report.observe("paper_stated_guarantee_nonzero", Rational::new(supp_nz as i128, 1) >= stated);
    Ok(report)
}

/// `|Δ^j_z(E)| ≥ qC/(C+3)` with `C = |E||E_z|/q^d`; the stated
/// `q·3C/(3C+1)` is recorded as an observation.
pub fn theorem_check_distpinned(e: &PointSet, pin: PinSpec) -> Result<DiagnosticsReport, AnalysisError> {
    pinned_theorem(e, pin, Metric::Distance, "distpinned")
}

/// `|{x·y : x ∈ E_z, y ∈ E}| ≥ qC/(C+2)`; the stated `q·2C/(2C+1)` is
/// recorded as an observation. Requires `z ≠ 0`.
pub fn theorem_check_dot(e: &PointSet, pin: PinSpec) -> Result<DiagnosticsReport, AnalysisError> {
    pinned_theorem(e, pin, Metric::Dot, "dot")
}

/// Picks the pin maximising `|E|·|E^j_z|` (ties: smallest `j`, then
/// smallest valid `z`), runs the pinned distance check on it, and for
/// product sets verifies `|E_z|^d ≥ |E|^{d−1}` and `Δ^j_z(E) ⊆ Δ(E)`.
pub fn best_slice(e: &PointSet) -> Result<(PinSpec, DiagnosticsReport), AnalysisError> {
    check_nonempty(e)?;
    let mut best: Option<(usize, usize)> = None;
    for j in 1..=e.dim() {
        let size = projection_size(e, j)?;
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((j, size));
        }
    }
    let (j, slice_size) = best.expect("d >= 1");
    let z = valid_pins(e, j)?[0];
    let pin = PinSpec::new(j, z);

    let mut report = theorem_check_distpinned(e, pin)?;
    report.check = "corollary".to_string();
    let is_product = e.product_factors().is_some();
    report.observe("product_set", is_product);
    if is_product {
        let d = e.dim() as u32;
        let lhs = checked((slice_size as u128).checked_pow(d))?;
        let rhs = checked((e.len() as u128).checked_pow(d - 1))?;
        report.flag("pigeonhole", lhs >= rhs);

        let engine = if e.capacity() <= CONV_CAP { Engine::Conv } else { Engine::Direct };
        let full = distance_set(e, engine)?;
        let pinned = crate::spectra::pinned_distance_set(e, pin)?;
        report.flag("pinned_subset_of_delta", pinned.iter().all(|t| full.binary_search(t).is_ok()));
        report.flag("slice_inside_set", pin_slice(e, pin)?.is_subset(e));
    }
    Ok((pin, report))
}

/// Sum-product checks on `A ⊆ F_q`: `F_q^* ⊆ A·A + A·A` when
/// `|A| > q^{3/4}`, and `|A·A + A·A| ≥ q·C^{3/2}/(1 + C^{3/2})` with
/// `C^{3/2} = |A|³/q²` (stored in `c`).
pub fn check_sumproduct(a: &PointSet) -> Result<DiagnosticsReport, AnalysisError> {
    let field = a.field();
    let mut report = DiagnosticsReport::new("sumproduct", field.p(), field.k(), a.dim());
    let sums = aa_plus_aa(a)?;
    let n = a.len() as i128;
    let q = field.q() as i128;
    report.size_e = a.len() as u64;
    report.support_size = Some(sums.len() as u64);
    report.support_size_nonzero = Some(sums.iter().filter(|t| !t.is_zero()).count() as u64);

    let premise = n.pow(4) > q.pow(3);
    report.observe("premise_three_quarters", premise);
    if premise {
        let covered = field.elements().skip(1).all(|t| sums.binary_search(&t).is_ok());
        report.flag("units_covered", covered);
    }

    let c_pow = Rational::new(n.pow(3), q * q);
    report.c = Some(c_pow);
    if n > 0 {
        let bound = Rational(c_pow.0 * q / (c_pow.0 + 1));
        report.guarantee_derived = Some(bound);
        report.flag("size_bound", Rational::new(sums.len() as i128, 1) >= bound);
    }
    Ok(report)
}

/// If `|E| ≥ 4q^{(d+1)/2}` then `Δ(E) = F_q`.
pub fn check_ir_threshold(e: &PointSet) -> Result<DiagnosticsReport, AnalysisError> {
    let field = e.field();
    let mut report = DiagnosticsReport::new("ir_threshold", field.p(), field.k(), e.dim());
    report.size_e = e.len() as u64;
    report.size_ez = e.len() as u64;
    let q = field.q() as u128;
    // |E| ≥ 4 q^{(d+1)/2}  ⇔  |E|² ≥ 16 q^{d+1}
    let premise = (e.len() as u128).pow(2) >= 16 * checked(q.checked_pow(e.dim() as u32 + 1))?;
    report.observe("premise", premise);
    let delta = if e.is_empty() {
        Vec::new()
    } else {
        let engine = if e.capacity() <= CONV_CAP { Engine::Conv } else { Engine::Direct };
        distance_set(e, engine)?
    };
    report.support_size = Some(delta.len() as u64);
    report.support_size_nonzero = Some(delta.iter().filter(|t| !t.is_zero()).count() as u64);
    if premise {
        report.flag("delta_is_field", delta.len() == field.q() as usize);
    }
    Ok(report)
}

/// Smallest nonzero valid pin on coordinate `j`, if any.
pub fn nonzero_pin(e: &PointSet, j: usize) -> Result<Option<PinSpec>, AnalysisError> {
    Ok(valid_pins(e, j)?.into_iter().find(|z| *z != FieldElement::ZERO).map(|z| PinSpec::new(j, z)))
}
