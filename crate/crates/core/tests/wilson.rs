use pfrmt::microscopic::{kernel_i, Kernel};
use pfrmt::wilson::*;
use pfrmt::{Error, C64};

fn params(nu: u32, a_hat: f64, masses: &[f64]) -> WilsonParams {
    WilsonParams { nu, a_hat, masses: masses.to_vec() }
}

#[test]
fn quadrature_refinement_is_stable() {
    let p = params(1, 0.1, &[]);
    let a = z2_wilson_tol(&p, 0.8, 2.1, 1e-9).unwrap();
    let b = z2_wilson_tol(&p, 0.8, 2.1, 1e-12).unwrap();
    assert!((a - b).abs() < 1e-8 * b.abs());
}

#[test]
fn two_flavour_block_is_symmetric() {
    let p = params(0, 0.2, &[]);
    assert_eq!(z2_wilson(&p, 1.0, 2.0).unwrap(), z2_wilson(&p, 2.0, 1.0).unwrap());
}

#[test]
fn coincident_mass_limit_is_finite() {
    let p = params(0, 0.2, &[]);
    let m = 1.2;
    let v: Vec<f64> = [4e-2, 2e-2, 1e-2].iter().map(|h| z2_wilson(&p, m, m + h).unwrap()).collect();
    let (l1, l2) = (2.0 * v[1] - v[0], 2.0 * v[2] - v[1]);
    assert!(l2.is_finite());
    assert!((l1 - l2).abs() < 1e-4 * l2.abs(), "{v:?}");
}

#[test]
fn four_flavours_invariant_under_recomputed_permutation() {
    let m = [0.6, 1.3, 2.0, 2.9];
    let a = z_nf_wilson(&params(1, 0.1, &m)).unwrap();
    let b = z_nf_wilson(&params(1, 0.1, &[m[2], m[0], m[3], m[1]])).unwrap();
    assert!((a.value - b.value).abs() < 1e-10 * a.value.abs());
    assert!(permutation_residual(&params(1, 0.1, &m), &a).unwrap() < 1e-10);
}

#[test]
fn continuum_limit_of_block() {
    // a_hat -> 0 leaves the kernel at imaginary arguments
    let k = kernel_i(Kernel::I1, 0, C64::new(0.0, 0.9), C64::new(0.0, 1.7)).unwrap().re;
    let d: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&a| (z2_wilson(&params(0, a, &[]), 0.9, 1.7).unwrap() / k - 1.0).abs())
        .collect();
    assert!(d[1] < d[0] && d[2] < d[1] && d[2] < 1e-2, "{d:?}");
}

#[test]
fn rejects_bad_input() {
    assert!(matches!(z_nf_wilson(&params(0, 0.1, &[1.0])), Err(Error::Unsupported(_))));
    assert!(matches!(z_nf_wilson(&params(0, 0.1, &[1.0, 1.0])), Err(Error::Degenerate(_))));
    assert!(matches!(z_nf_wilson(&params(0, -0.1, &[1.0, 2.0])), Err(Error::Validation(_))));
}
