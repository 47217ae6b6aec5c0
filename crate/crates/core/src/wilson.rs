//! Wilson-Dirac random matrix model with fermionic flavours: the
//! two-flavour building block as a Gaussian-smeared Bessel kernel, and
//! the N_f-flavour Pfaffian assembled from it.

use crate::linalg::{pfaffian, vandermonde, CMatrix, SEP_TOL};
use crate::microscopic::{kernel_i, micro_partition_pf, Kernel};
use crate::partition::FlavorSet;
use crate::quadrature::{integrate, QuadConfig};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Truncation parameter of the Gaussian window.
pub const WINDOW_EPS: f64 = 1e-16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilsonParams {
    pub nu: u32,
    pub a_hat: f64,
    pub masses: Vec<f64>,
}

impl WilsonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_hat.is_finite() && self.a_hat > 0.0) {
            return Err(Error::Validation(format!("a_hat must be positive, got {}", self.a_hat)));
        }
        if self.masses.iter().any(|m| !m.is_finite()) {
            return Err(Error::Validation("masses must be finite".into()));
        }
        Ok(())
    }
}

/// Relative tolerance of each nested quadrature in `z2_wilson`.
pub const Z2_REL_TOL: f64 = 1e-11;

/// Half-width of the integration window in each t_j.
pub fn window(a_hat: f64) -> f64 {
    8.0 * a_hat * (2.0 * (1.0 / WINDOW_EPS).ln()).sqrt()
}

/// Two-flavour block. The Gaussian centres im_j are moved onto the real
/// axis (s_j = t_j + i m_j); the integrand is entire so the shift is exact.
pub fn z2_wilson(p: &WilsonParams, m1: f64, m2: f64) -> Result<f64> {
    z2_wilson_tol(p, m1, m2, Z2_REL_TOL)
}

pub fn z2_wilson_tol(p: &WilsonParams, m1: f64, m2: f64, rel_tol: f64) -> Result<f64> {
    p.validate()?;
    if !(m1.is_finite() && m2.is_finite()) {
        return Err(Error::Validation("masses must be finite".into()));
    }
    if (m1 - m2).abs() <= SEP_TOL * m1.abs().max(m2.abs()).max(1.0) {
        return Err(Error::Degenerate(format!("coincident masses {m1} and {m2}")));
    }
    // symmetric in (m1, m2): evaluate in a canonical order
    let (m1, m2) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
    let a2 = 4.0 * p.a_hat * p.a_hat;
    let w = window(p.a_hat);
    let cfg = QuadConfig { rel_tol, abs_tol: 0.0, max_intervals: 2000, initial_panels: 16, max_depth: 40 };
    let mut err = None;
    let outer = integrate(
        |t1| {
            let s1 = C64::new(t1, m1);
            let inner = integrate(
                |t2| {
                    let s2 = C64::new(t2, m2);
                    match kernel_i(Kernel::I1, p.nu, s1, s2) {
                        Ok(k) => (s1 - s2) * k * (-(t2 * t2) / a2).exp(),
                        Err(e) => {
                            err.get_or_insert(e);
                            C64::new(0.0, 0.0)
                        }
                    }
                },
                -w,
                w,
                &cfg,
            );
            match inner {
                Ok(r) => r.value * (-(t1 * t1) / a2).exp(),
                Err(e) => {
                    err.get_or_insert(e);
                    C64::new(0.0, 0.0)
                }
            }
        },
        -w,
        w,
        &cfg,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let v = outer?.value * C64::new(0.0, -1.0) / (std::f64::consts::PI * a2 * (m1 - m2));
    if v.im.abs() > 1e-8 * v.norm().max(1e-300) {
        return Err(Error::Integration(format!("two-flavour block not real: {v}")));
    }
    Ok(v.re)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WilsonResult {
    pub value: f64,
    /// (m_j - m_i) z2(m_j, m_i)
    pub entries: Vec<Vec<f64>>,
}

/// Z_{N_f}(a_hat) = Pf[(m_j - m_i) z2(m_j, m_i)] / Delta(m), N_f even.
pub fn z_nf_wilson(p: &WilsonParams) -> Result<WilsonResult> {
    p.validate()?;
    let nf = p.masses.len();
    if nf == 0 || nf % 2 == 1 {
        return Err(Error::Unsupported(format!("N_f = {nf}: only even, positive flavour counts")));
    }
    let m = &p.masses;
    let pairs: Vec<(usize, usize)> = (0..nf).flat_map(|i| (i + 1..nf).map(move |j| (i, j))).collect();
    let vals = pairs
        .par_iter()
        .map(|&(i, j)| z2_wilson(p, m[j], m[i]).map(|z| (m[j] - m[i]) * z))
        .collect::<Result<Vec<f64>>>()?;
    let mut e = vec![vec![0.0; nf]; nf];
    for (&(i, j), v) in pairs.iter().zip(vals) {
        e[i][j] = v;
        e[j][i] = -v;
    }
    let value = pf_over_vandermonde(m, &e)?;
    Ok(WilsonResult { value, entries: e })
}

fn pf_over_vandermonde(m: &[f64], e: &[Vec<f64>]) -> Result<f64> {
    let nf = m.len();
    let k = CMatrix::from_fn(nf, nf, |i, j| C64::new(e[i][j], 0.0));
    // Delta(m) = prod_{i<j} (m_j - m_i)
    let ms: Vec<C64> = m.iter().rev().map(|x| C64::new(*x, 0.0)).collect();
    Ok((pfaffian(&k)? / vandermonde(&ms)).re)
}

/// Largest relative change of the N_f result under re-ordering the masses
/// (reversal and one cyclic shift), reusing the computed blocks.
pub fn permutation_residual(p: &WilsonParams, res: &WilsonResult) -> Result<f64> {
    let nf = p.masses.len();
    let perms: Vec<Vec<usize>> = vec![(0..nf).rev().collect(), (0..nf).map(|i| (i + 1) % nf).collect()];
    let mut worst = 0.0_f64;
    for perm in perms {
        let m: Vec<f64> = perm.iter().map(|&i| p.masses[i]).collect();
        let e: Vec<Vec<f64>> = perm.iter().map(|&i| perm.iter().map(|&j| res.entries[i][j]).collect()).collect();
        let v = pf_over_vandermonde(&m, &e)?;
        worst = worst.max((v - res.value).abs() / res.value.abs().max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// Ratio to the continuum microscopic Z_{0/N_f} at kappa = i m.
pub fn continuum_ratio(p: &WilsonParams, res: &WilsonResult) -> Result<f64> {
    let kappas: Vec<C64> = p.masses.iter().map(|m| C64::new(0.0, *m)).collect();
    let z = micro_partition_pf(p.nu, &FlavorSet::new(vec![], kappas))?;
    if z.norm() == 0.0 {
        return Err(Error::Degenerate("continuum partition function vanishes".into()));
    }
    Ok(res.value / z.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_value() {
        assert!((window(1.0) - 8.0 * (2.0 * 16.0 * 10f64.ln()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nf2_is_block() {
        let p = WilsonParams { nu: 0, a_hat: 0.2, masses: vec![0.5, 1.5] };
        let r = z_nf_wilson(&p).unwrap();
        let z = z2_wilson(&p, 1.5, 0.5).unwrap();
        assert!((r.value - z).abs() < 1e-13 * z.abs());
    }

    #[test]
    fn errors() {
        let p = WilsonParams { nu: 0, a_hat: 0.1, masses: vec![1.0, 2.0, 3.0] };
        assert!(matches!(z_nf_wilson(&p), Err(Error::Unsupported(_))));
        assert!(matches!(z2_wilson(&p, 1.0, 1.0), Err(Error::Degenerate(_))));
        let q = WilsonParams { a_hat: 0.0, ..p };
        assert!(matches!(z2_wilson(&q, 1.0, 2.0), Err(Error::Validation(_))));
    }

    #[test]
    fn small_spacing_approaches_kernel() {
        // a_hat -> 0: z2 -> I1(i m1, i m2)
        let p = WilsonParams { nu: 1, a_hat: 0.05, masses: vec![] };
        let z = z2_wilson(&p, 0.7, 2.0).unwrap();
        let k = kernel_i(Kernel::I1, 1, C64::new(0.0, 0.7), C64::new(0.0, 2.0)).unwrap();
        assert!((z - k.re).abs() < 0.02 * k.norm(), "{z} vs {k}");
    }
}
