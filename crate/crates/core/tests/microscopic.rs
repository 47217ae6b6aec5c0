use pfrmt::microscopic::*;
use pfrmt::partition::{DetSplit, FlavorSet};
use pfrmt::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn bessel_recurrence_on_grid() {
    for i in 0..=500 {
        let x = 0.1 + i as f64 * (50.0 - 0.1) / 500.0;
        for nu in 1..=8 {
            let r = bessel_j(nu - 1, x) + bessel_j(nu + 1, x) - 2.0 * nu as f64 / x * bessel_j(nu, x);
            assert!(r.abs() < 1e-10, "nu={nu} x={x}: {r:e}");
        }
    }
    let r = bessel_j(2, 2.5) + bessel_j(4, 2.5) - 6.0 / 2.5 * bessel_j(3, 2.5);
    assert!(r.abs() < 1e-10);
}

#[test]
fn k_positive_and_decreasing() {
    for nu in 0..=8 {
        let mut prev = f64::INFINITY;
        for i in 1..=200 {
            let k = bessel_k(nu, 0.05 * i as f64).unwrap();
            assert!(k > 0.0 && k < prev);
            prev = k;
        }
    }
}

#[test]
fn k_recurrence() {
    for x in [0.3, 1.0, 4.0, 20.0] {
        for nu in 1..8 {
            let lhs = bessel_k(nu + 1, x).unwrap() - bessel_k(nu - 1, x).unwrap();
            let rhs = 2.0 * nu as f64 / x * bessel_k(nu, x).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * rhs.abs());
        }
    }
}

#[test]
fn kernel_diagonal_limit_by_richardson() {
    for nu in 0..3 {
        for a in [c(1.0, 0.0), c(2.3, 0.4)] {
            let d = kernel_diag(Kernel::I1, nu, a).unwrap();
            let h = 1e-4;
            let f1 = kernel_offdiag(Kernel::I1, nu, a, a + h).unwrap();
            let f2 = kernel_offdiag(Kernel::I1, nu, a, a + 2.0 * h).unwrap();
            let rich = f1 * 2.0 - f2;
            assert!((rich - d).norm() < 1e-7, "I1 nu={nu} a={a}");
        }
        let a = c(0.7, 1.1);
        let d = kernel_diag(Kernel::I3, nu, a).unwrap();
        let h = c(1e-4, 0.0);
        let rich = kernel_offdiag(Kernel::I3, nu, a, a + h).unwrap() * 2.0
            - kernel_offdiag(Kernel::I3, nu, a, a + h * 2.0).unwrap();
        assert!((rich - d).norm() < 1e-7 * d.norm().max(1.0), "I3 nu={nu}");
    }
}

#[test]
fn i2_pole_is_reported() {
    assert!(kernel_i(Kernel::I2, 0, c(1.0, 0.5), c(1.0, 0.5)).is_err());
}

#[test]
fn determinant_and_pfaffian_limits_agree_for_all_splits() {
    let kf = [c(0.9, 0.1), c(2.2, -0.3), c(3.1, 0.6)];
    let kb = [c(0.5, 0.9), c(-1.7, 0.4)];
    for nu in 0..=3 {
        for (k1, k2) in [(1, 1), (0, 2), (1, 2), (2, 2), (0, 3), (2, 3)] {
            let f = FlavorSet::new(kb[..k1].to_vec(), kf[..k2].to_vec());
            let pf = micro_partition_pf(nu, &f).unwrap();
            let mut n = 0;
            for l11 in 0..=k1 {
                for l21 in 0..=k2 {
                    if let Ok(d) = micro_partition_det(nu, &f, DetSplit { l11, l21 }) {
                        assert!((d - pf).norm() < 1e-9 * pf.norm(), "nu={nu} ({k1},{k2}) {l11},{l21}");
                        n += 1;
                    }
                }
            }
            assert!(n > 0);
        }
    }
}

#[test]
fn one_one_is_single_kernel_entry() {
    let (kb, kf) = (c(0.4, 0.8), c(1.3, 0.0));
    let f = FlavorSet::new(vec![kb], vec![kf]);
    let v = micro_partition_pf(1, &f).unwrap();
    let want = (kf + kb) * kernel_i(Kernel::I2, 1, kb, kf).unwrap() * (kb - kf);
    assert!((v - want).norm() < 1e-13 * want.norm());
}

#[test]
fn bosons_must_be_in_upper_half_plane() {
    let f = FlavorSet::new(vec![c(1.0, -0.5)], vec![c(1.0, 0.0)]);
    assert!(micro_partition_pf(0, &f).is_err());
}

#[test]
fn finite_size_two_flavour_ratio_converges() {
    let pair = (c(1.5, 0.0), c(2.8, 0.0));
    let reference = (c(0.7, 0.0), c(1.9, 0.0));
    for nu in 0..=1 {
        let d: Vec<f64> = [50, 100, 200]
            .iter()
            .map(|&n| z02_finite_vs_micro(n, nu, 1.0, pair, reference).unwrap())
            .collect();
        assert!(d[2] < 0.02 && d[1] < d[0] && d[2] < d[1], "nu={nu}: {d:?}");
    }
}

#[test]
fn convergence_study_examples() {
    let rows = convergence_study(1.0, 0, &[2.0], &[25, 100]).unwrap();
    assert!(rows[1].deviation_p < rows[0].deviation_p);
    let r = convergence_study(1.0, 0, &[1.0], &[200]).unwrap();
    assert!(r[0].deviation_p < 1e-2 && r[0].deviation_phat < 1e-2);
    assert_eq!(bessel_j_normalized(3, 0.0), 1.0);
    assert!((bessel_j_normalized(3, 1e-6) - 1.0).abs() < 1e-12);
}
