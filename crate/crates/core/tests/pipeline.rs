//! End-to-end use of the public API: generate, persist, count, check.

use std::collections::BTreeSet;

use fqdist::space::{distance, dot, valid_pins};
use fqdist::{
    best_slice, check_sumproduct, distance_set, field_of_order, generate, load_pointset, pin_slice, pinned_distance_set,
    pinned_dot_set, save_pointset, theorem_check_distpinned, theorem_check_dot, Engine, FieldElement, Generator, PinSpec,
    PointSet,
};

fn pairwise(e: &PointSet, f: &PointSet, op: impl Fn(&[FieldElement], &[FieldElement]) -> FieldElement) -> Vec<FieldElement> {
    let mut out = BTreeSet::new();
    for x in e.points() {
        for y in f.points() {
            out.insert(op(&x, &y));
        }
    }
    out.into_iter().collect()
}

#[test]
fn distance_sets_agree_with_pair_enumeration() {
    for (q, d, n, seed) in [(5u64, 2usize, 6u64, 1u64), (9, 2, 12, 2), (7, 3, 20, 3), (13, 2, 30, 4)] {
        let field = field_of_order(q).unwrap();
        let e = generate(&field, d, &Generator::Random { n }, seed).unwrap();
        let want = pairwise(&e, &e, |x, y| distance(&field, x, y));
        for engine in [Engine::Direct, Engine::Conv, Engine::ConvFloat] {
            assert_eq!(distance_set(&e, engine).unwrap(), want, "q={q} d={d} {engine}");
        }
    }
}

#[test]
fn pinned_sets_are_slices_of_the_full_set() {
    let field = field_of_order(11).unwrap();
    let e = generate(&field, 2, &Generator::Random { n: 40 }, 8).unwrap();
    let full: BTreeSet<_> = distance_set(&e, Engine::Direct).unwrap().into_iter().collect();
    for z in valid_pins(&e, 1).unwrap() {
        let pin = PinSpec::new(1, z);
        let slice = pin_slice(&e, pin).unwrap();
        let pinned = pinned_distance_set(&e, pin).unwrap();
        assert_eq!(pinned, pairwise(&slice, &e, |x, y| distance(&field, x, y)));
        assert!(pinned.iter().all(|t| full.contains(t)));
        assert_eq!(pinned_dot_set(&e, pin).unwrap(), pairwise(&slice, &e, |x, y| dot(&field, x, y)));
    }
}

#[test]
fn checks_survive_a_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let field = field_of_order(25).unwrap();
    let e = generate(&field, 2, &Generator::RandomProduct { sizes: vec![12, 15] }, 6).unwrap();
    let path = dir.path().join("e.fqset");
    save_pointset(&path, &e).unwrap();
    let loaded = load_pointset(&path).unwrap();
    assert_eq!(loaded, e);

    let (pin, report) = best_slice(&loaded).unwrap();
    assert_eq!(report, best_slice(&e).unwrap().1);
    assert!(report.passed());
    let dist = theorem_check_distpinned(&loaded, pin).unwrap();
    assert!(dist.passed());
    assert!(dist.support_size.unwrap() as usize >= 1);
    if pin.z != FieldElement::ZERO {
        assert!(theorem_check_dot(&loaded, pin).unwrap().passed());
    }
}

#[test]
fn sumproduct_holds_on_random_subsets() {
    for (q, n, seed) in [(13u64, 5u64, 1u64), (17, 8, 2), (29, 10, 3), (31, 20, 4)] {
        let field = field_of_order(q).unwrap();
        let a = generate(&field, 1, &Generator::Random { n }, seed).unwrap();
        let report = check_sumproduct(&a).unwrap();
        assert!(report.passed(), "q={q} n={n}: {report:?}");
    }
}
