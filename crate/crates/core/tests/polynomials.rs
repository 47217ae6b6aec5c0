use pfrmt::ensemble::EnsembleParams;
use pfrmt::polynomials::*;
use pfrmt::quadrature::QuadConfig;
use pfrmt::C64;

fn gram(sys: &OrthogonalSystem, jmax: usize) -> Vec<Vec<f64>> {
    let cfg = QuadConfig::with_rel_tol(1e-13);
    let v = sys
        .measure
        .integrate(
            |y| {
                let p: Vec<f64> = (0..=jmax).map(|j| sys.eval_real(j, y).unwrap()).collect();
                p.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect::<Vec<f64>>()
            },
            &cfg,
        )
        .unwrap();
    v.chunks(jmax + 1).map(|r| r.to_vec()).collect()
}

#[test]
fn stieltjes_reproduces_laguerre() {
    for nu in 0..3 {
        for alpha in [1.0, 2.5] {
            let p = EnsembleParams::gaussian(5, nu, alpha);
            let built = build_orthogonal_system(&p, 8).unwrap();
            let closed = OrthogonalSystem::laguerre(&p, 8).unwrap();
            for j in 0..=8 {
                assert!((built.h[j] / closed.h[j] - 1.0).abs() < 1e-10, "h_{j}");
                let a = built.poly(j).unwrap();
                let b = laguerre_closed_form(&p, j).unwrap();
                for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
                    assert!((x - y).abs() < 1e-8 * y.abs().max(1.0), "nu={nu} alpha={alpha} j={j}");
                }
            }
        }
    }
}

#[test]
fn orthogonality_by_quadrature() {
    for potential in [vec![1.0], vec![0.2, 0.7], vec![0.0, 0.0, 1.0]] {
        let p = EnsembleParams { n: 6, nu: 1, alpha: 1.0, potential };
        let sys = build_orthogonal_system(&p, 6).unwrap();
        let g = gram(&sys, 6);
        for i in 0..=6 {
            for j in 0..=6 {
                let want = if i == j { sys.h[i] } else { 0.0 };
                assert!((g[i][j] - want).abs() < 1e-9 * (sys.h[i] * sys.h[j]).sqrt(), "{i},{j}");
            }
        }
    }
}

#[test]
fn hermite_system() {
    let sys = OrthogonalSystem::hermite(6);
    let g = gram(&sys, 6);
    let mut fact = 1.0;
    for j in 0..=6 {
        if j > 0 {
            fact *= j as f64;
        }
        let h = std::f64::consts::PI.sqrt() * fact / 2f64.powi(j as i32);
        assert!((sys.h[j] / h - 1.0).abs() < 1e-13);
        assert!((g[j][j] / h - 1.0).abs() < 1e-10);
    }
    let built = OrthogonalSystem::build(Measure::hermite(), 6).unwrap();
    for j in 0..=6 {
        assert!((built.h[j] / sys.h[j] - 1.0).abs() < 1e-10);
    }
}

#[test]
fn cauchy_recurrence_matches_direct_quadrature() {
    let p = EnsembleParams::gaussian(4, 1, 1.0);
    let sys = OrthogonalSystem::laguerre(&p, 6).unwrap();
    for u in [C64::new(-0.5, 0.0), C64::new(1.0, 0.7), C64::new(3.0, -2.0), C64::new(-4.0, 0.1)] {
        for j in 0..=6 {
            let a = sys.cauchy(j, u).unwrap();
            let b = sys.cauchy_direct(j, u, 1e-12).unwrap();
            assert!((a - b).norm() < 1e-9 * b.norm().max(1e-3 * sys.h[j]), "j={j} u={u}: {a} vs {b}");
        }
    }
    let h = OrthogonalSystem::hermite(5);
    for j in 0..=5 {
        let u = C64::new(0.3, 0.4);
        let a = h.cauchy(j, u).unwrap();
        let b = h.cauchy_direct(j, u, 1e-12).unwrap();
        assert!((a - b).norm() < 1e-9 * b.norm());
    }
}

#[test]
fn cauchy_rejects_support() {
    let p = EnsembleParams::gaussian(2, 0, 1.0);
    let sys = OrthogonalSystem::laguerre(&p, 3).unwrap();
    assert!(sys.cauchy(1, C64::new(2.0, 0.0)).is_err());
    assert!(sys.cauchy(1, C64::new(-2.0, 0.0)).is_ok());
}

#[test]
fn skew_orthogonality_general_potential() {
    let p = EnsembleParams { n: 4, nu: 2, alpha: 0.8, potential: vec![1.0, 0.4] };
    let sys = build_orthogonal_system(&p, 4).unwrap();
    let q = skew_polynomials(&sys, 3).unwrap();
    for a in 0..q.len() {
        for b in 0..q.len() {
            let v = skew_product(&p, &q[a], &q[b]).unwrap();
            let want = match (a / 2 == b / 2, a % 2) {
                (true, 1) if a != b => sys.h[a / 2],
                (true, 0) if a != b => -sys.h[a / 2],
                _ => 0.0,
            };
            assert!((v - want).abs() < 1e-10 * (sys.h[a / 2] * sys.h[b / 2]).sqrt(), "{a},{b}");
        }
    }
}

#[test]
fn nu_recursion() {
    let grid: Vec<f64> = (0..30).map(|i| 0.3 * i as f64).collect();
    for nu in 0..3 {
        let a = OrthogonalSystem::laguerre(&EnsembleParams::gaussian(3, nu, 1.7), 7).unwrap();
        let b = OrthogonalSystem::laguerre(&EnsembleParams::gaussian(3, nu + 1, 1.7), 7).unwrap();
        for j in 0..=5 {
            assert!(nu_recursion_check(&a, &b, j, &grid).unwrap() < 1e-10);
        }
    }
}

#[test]
fn export_round_trips_through_json() {
    let p = EnsembleParams::gaussian(3, 1, 2.0);
    let sys = OrthogonalSystem::laguerre(&p, 3).unwrap();
    let e = sys.export().unwrap();
    let s = serde_json::to_string(&e).unwrap();
    let back: SystemExport = serde_json::from_str(&s).unwrap();
    assert_eq!(back, e);
}
