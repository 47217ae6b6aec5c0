use pfrmt::ensemble::EnsembleParams;
use pfrmt::oracles::quad_partition;
use pfrmt::partition::*;
use pfrmt::polynomials::{Measure, OrthogonalSystem};
use pfrmt::{Error, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

fn laguerre(n: usize, nu: usize, k1: usize, k2: usize) -> (EnsembleParams, OrthogonalSystem) {
    let p = EnsembleParams::gaussian(n, nu, 1.0);
    let sys = OrthogonalSystem::laguerre(&p, required_degree(n, k1, k2)).unwrap();
    (p, sys)
}

fn fermion() -> impl Strategy<Value = C64> {
    (0.1..3.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
}

fn boson() -> impl Strategy<Value = C64> {
    (0.1..3.0f64, 0.3..1.5f64, any::<bool>()).prop_map(|(a, b, s)| c(a, if s { b } else { -b }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn determinant_and_pfaffian_agree(
        n in 1usize..5,
        nu in 0usize..3,
        bos in prop::collection::vec(boson(), 0..3),
        fer in prop::collection::vec(fermion(), 0..4),
    ) {
        prop_assume!(!bos.is_empty() || !fer.is_empty());
        let f = FlavorSet::new(bos, fer);
        prop_assume!(f.validate_chiral().is_ok());
        let (p, sys) = laguerre(n, nu, f.k1(), f.k2());
        let pf = partition_pf(&sys, &p, &f).unwrap().value;
        for split in DetSplit::all_valid(n, f.k1(), f.k2()) {
            let d = partition_det(&sys, &p, &f, split).unwrap().value;
            prop_assert!(rel(d, pf) < 1e-7, "split {:?}: {} vs {}", split, d, pf);
        }
    }

    #[test]
    fn symmetric_under_flavour_permutation(
        fer in prop::collection::vec(fermion(), 2..5),
        bos in prop::collection::vec(boson(), 0..3),
    ) {
        let f = FlavorSet::new(bos.clone(), fer.clone());
        prop_assume!(f.validate_chiral().is_ok());
        let (p, sys) = laguerre(3, 1, f.k1(), f.k2());
        let a = partition_pf(&sys, &p, &f).unwrap().value;
        let mut fr = fer.clone();
        fr.reverse();
        let mut br = bos.clone();
        br.reverse();
        let b = partition_pf(&sys, &p, &FlavorSet::new(br, fr)).unwrap().value;
        prop_assert!(rel(b, a) < 1e-9);
    }
}

#[test]
fn all_splits_agree_for_larger_patterns() {
    let f = FlavorSet::new(vec![c(0.4, 0.5), c(1.2, -0.3), c(0.9, 1.1)], vec![c(0.6, 0.1), c(1.4, -0.2), c(2.0, 0.5)]);
    let (p, sys) = laguerre(3, 2, 3, 3);
    let pf = partition_pf(&sys, &p, &f).unwrap().value;
    let splits = DetSplit::all_valid(3, 3, 3);
    assert!(splits.len() > 3);
    for s in splits {
        assert!(rel(partition_det(&sys, &p, &f, s).unwrap().value, pf) < 1e-8, "{s:?}");
    }
}

#[test]
fn quartic_potential_matches_quadrature() {
    let p = EnsembleParams { n: 2, nu: 1, alpha: 1.0, potential: vec![0.5, 0.3] };
    let f = FlavorSet::new(vec![c(0.7, 0.6)], vec![c(0.5, 0.2), c(1.1, -0.4)]);
    let sys = OrthogonalSystem::build(Measure::Chiral(p.clone()), required_degree(2, 1, 2)).unwrap();
    let pf = partition_pf(&sys, &p, &f).unwrap().value;
    let det = partition_det(&sys, &p, &f, DetSplit { l11: 0, l21: 0 }).unwrap().value;
    let q = quad_partition(&p, &f).unwrap().value;
    assert!(rel(pf, q) < 1e-7 && rel(det, q) < 1e-7, "{pf} {det} {q}");
}

#[test]
fn odd_flavour_count_matches_quadrature() {
    for (k1, k2) in [(0, 1), (1, 0), (0, 3), (2, 1)] {
        let bos = [c(0.6, 0.8), c(1.3, -0.5)];
        let fer = [c(0.5, 0.3), c(1.0, -0.2), c(1.6, 0.4)];
        let f = FlavorSet::new(bos[..k1].to_vec(), fer[..k2].to_vec());
        let (p, sys) = laguerre(2, 1, k1, k2);
        let q = quad_partition(&p, &f).unwrap().value;
        assert!(rel(partition_pf(&sys, &p, &f).unwrap().value, q) < 1e-8, "({k1},{k2})");
    }
}

#[test]
fn result_carries_convention() {
    let (p, sys) = laguerre(2, 0, 0, 2);
    let r = partition_pf(&sys, &p, &FlavorSet::new(vec![], vec![c(1.0, 0.0), c(2.0, 0.0)])).unwrap();
    assert_eq!(r.normalization, "ratio_to_Z00");
    assert!(r.stderr.is_none());
    assert!(r.value.im.abs() < 1e-14);
}

#[test]
fn invalid_inputs() {
    let (p, sys) = laguerre(2, 0, 2, 2);
    let real_boson = FlavorSet::new(vec![c(1.0, 0.0)], vec![]);
    assert!(matches!(partition_pf(&sys, &p, &real_boson), Err(Error::Domain(_))));
    let coincide = FlavorSet::new(vec![], vec![c(1.0, 0.0), c(-1.0, 0.0)]);
    assert!(matches!(partition_pf(&sys, &p, &coincide), Err(Error::NearSingular(_))));
    let small = OrthogonalSystem::laguerre(&p, 1).unwrap();
    let f = FlavorSet::new(vec![], vec![c(1.0, 0.0), c(2.0, 0.0)]);
    assert!(partition_pf(&small, &p, &f).is_err());
    assert!(matches!(
        partition_det(&sys, &p, &f, DetSplit { l11: 0, l21: 2 }),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn generic_hermite_small_cases() {
    // N = 1: E[z - k] = -k, E[1/(z - k)] = Cauchy transform of the Gaussian
    let sys = OrthogonalSystem::hermite(6);
    let r = partition_generic_pf(&sys, 1, &FlavorSet::new(vec![], vec![c(0.3, 0.2)])).unwrap();
    assert!((r.value - c(-0.3, -0.2)).norm() < 1e-13);
    // N = 2, two fermions: E[(z1-a)(z1-b)(z2-a)(z2-b)] from p_2 and p_1 kernel
    let (a, b) = (c(0.4, 0.1), c(-0.7, 0.3));
    let r = partition_generic_pf(&sys, 2, &FlavorSet::new(vec![], vec![a, b])).unwrap();
    // det[[p2(a), p3(a)],[p2(b), p3(b)]]/(b - a), p2 = z^2 - 1/2, p3 = z^3 - 3z/2
    let p2 = |z: C64| z * z - 0.5;
    let p3 = |z: C64| z * z * z - z * 1.5;
    let want = (p2(a) * p3(b) - p3(a) * p2(b)) / (b - a);
    assert!(rel(r.value, want) < 1e-12, "{} vs {}", r.value, want);
}

#[test]
fn kpoint_forms_agree() {
    for n in 2..=5 {
        let p = EnsembleParams::gaussian(n, 1, 1.3);
        let sys = OrthogonalSystem::laguerre(&p, n).unwrap();
        let x = [0.4, 0.9, 1.7];
        let d = kpoint_det(&sys, &p, &x[..n.min(3)]).unwrap();
        let f = kpoint_pf(&sys, &p, &x[..n.min(3)]).unwrap();
        assert!((d - f).abs() < 1e-10 * d.abs());
    }
}
