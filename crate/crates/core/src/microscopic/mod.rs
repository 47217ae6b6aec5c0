//! Microscopic (hard-edge) limit: Bessel kernels, limiting partition
//! functions in determinant and Pfaffian form, and finite-n convergence
//! studies for the Laguerre family.
//!
//! Bosonic flavours use G_mu(kappa) = i^{-mu} K_mu(-i kappa) with kappa in
//! the upper half plane; G obeys the J recurrences, so every formula below
//! reads the same for both kinds of flavour.

pub mod bessel;

use crate::linalg::{berezinian_unrestricted, determinant, pfaffian, CMatrix, SEP_TOL};
use crate::partition::{DetSplit, FlavorSet, ASSEMBLY_TOL};
use crate::polynomials::OrthogonalSystem;
use crate::ensemble::EnsembleParams;
use crate::{Error, Result, C64};
pub use bessel::{bessel_g, bessel_j, bessel_jc, bessel_k, bessel_kc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const CIRCLE_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    /// fermion-fermion: J with J
    I1,
    /// boson a with fermion b: G with J
    I2,
    /// boson-boson: G with G
    I3,
}

fn fa(which: Kernel, mu: i32, a: C64) -> Result<C64> {
    match which {
        Kernel::I1 => Ok(bessel_jc(mu, a)),
        Kernel::I2 | Kernel::I3 => bessel_g(mu, a),
    }
}

fn fb(which: Kernel, mu: i32, b: C64) -> Result<C64> {
    match which {
        Kernel::I1 | Kernel::I2 => Ok(bessel_jc(mu, b)),
        Kernel::I3 => bessel_g(mu, b),
    }
}

/// [a F_{nu-1}(a) H_nu(b) - b F_nu(a) H_{nu-1}(b)] / (a^2 - b^2)
pub fn kernel_offdiag(which: Kernel, nu: u32, a: C64, b: C64) -> Result<C64> {
    let n = nu as i32;
    let den = a * a - b * b;
    if den.norm() == 0.0 {
        return Err(Error::NearSingular("kernel evaluated on a^2 = b^2".into()));
    }
    Ok((a * fa(which, n - 1, a)? * fb(which, n, b)? - b * fa(which, n, a)? * fb(which, n - 1, b)?) / den)
}

/// a = b value [F_{nu+1} F_{nu-1} - F_nu^2]/2 (I1 and I3 only).
pub fn kernel_diag(which: Kernel, nu: u32, a: C64) -> Result<C64> {
    let n = nu as i32;
    match which {
        Kernel::I2 => Err(Error::NearSingular("I2 has a pole at a = b".into())),
        _ => {
            let f = |m| fa(which, m, a);
            Ok((f(n + 1)? * f(n - 1)? - f(n)? * f(n)?) * 0.5)
        }
    }
}

/// Radius of the circle used to evaluate the removable singularity near a = b.
fn circle_radius(which: Kernel, a: C64) -> f64 {
    let r = (0.25 * a.norm()).clamp(0.05, 0.5);
    match which {
        Kernel::I3 => r.min(0.5 * a.im),
        _ => r,
    }
}

fn kernel_circle(which: Kernel, nu: u32, a: C64, b: C64, r: f64) -> Result<C64> {
    // phi(b) = (1/2 pi i) \oint phi(z)/(z - b) dz on |z - a| = r, trapezoid rule
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..CIRCLE_POINTS {
        let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / CIRCLE_POINTS as f64;
        let dz = C64::from_polar(r, t);
        let z = a + dz;
        acc += kernel_offdiag(which, nu, a, z)? * dz / (z - b);
    }
    Ok(acc / CIRCLE_POINTS as f64)
}

/// Kernel I^{(1,2,3)}(a, b). Exact coincidence uses the diagonal formula;
/// near coincidence (removable singularity) is resolved by a Cauchy
/// integral so the result is smooth across a = b.
pub fn kernel_i(which: Kernel, nu: u32, a: C64, b: C64) -> Result<C64> {
    if which == Kernel::I2 {
        return kernel_offdiag(which, nu, a, b);
    }
    if which == Kernel::I1 {
        // I1(a, -b) = (-1)^nu I1(a, b): fold b onto the side nearer a
        if (a + b).norm() < (a - b).norm() {
            let s = if nu % 2 == 0 { 1.0 } else { -1.0 };
            return Ok(kernel_i(which, nu, a, -b)? * s);
        }
    }
    if a == b {
        return kernel_diag(which, nu, a);
    }
    let r = circle_radius(which, a);
    if (a - b).norm() < 0.5 * r {
        kernel_circle(which, nu, a, b, r)
    } else {
        kernel_offdiag(which, nu, a, b)
    }
}

fn parity(e: usize) -> f64 {
    if e % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn validate_micro(flavors: &FlavorSet) -> Result<()> {
    if flavors.bosonic.iter().chain(&flavors.fermionic).any(|k| !(k.re.is_finite() && k.im.is_finite())) {
        return Err(Error::Validation("non-finite flavour".into()));
    }
    for k in &flavors.bosonic {
        if !(k.im > 0.0) {
            return Err(Error::Domain(format!(
                "bosonic kappa {k} must have positive imaginary part in the microscopic limit"
            )));
        }
    }
    let sq: Vec<C64> = flavors.bosonic.iter().chain(&flavors.fermionic).map(|k| k * k).collect();
    let scale = sq.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for a in 0..sq.len() {
        for b in a + 1..sq.len() {
            if (sq[a] - sq[b]).norm() <= SEP_TOL * scale {
                return Err(Error::NearSingular(format!("flavours {a} and {b} coincide")));
            }
        }
    }
    Ok(())
}

fn phase(nu: u32, k1: usize, k2: usize) -> C64 {
    C64::new(0.0, -1.0).powi(nu as i32 * (k2 as i32 - k1 as i32))
}

/// Limiting ratio by the determinant formula for a given split.
pub fn micro_partition_det(nu: u32, flavors: &FlavorSet, split: DetSplit) -> Result<C64> {
    validate_micro(flavors)?;
    let (b1, f2) = (&flavors.bosonic, &flavors.fermionic);
    let (k1, k2) = (b1.len(), f2.len());
    let (l11, l21) = (split.l11, split.l21);
    if l11 > k1 || l21 > k2 {
        return Err(Error::Validation(format!("split {split:?} exceeds flavour counts")));
    }
    let (l12, l22) = (k1 - l11, k2 - l21);
    let r = (l22 as i64 - l12 as i64) - (l21 as i64 - l11 as i64);
    if r < 0 {
        return Err(Error::Unsupported(format!("split {split:?} gives d2 < d1")));
    }
    let r = r as usize;
    let n = nu as i32;
    let mut rows: Vec<Vec<C64>> = vec![];
    for a in 0..l21 {
        let mut row = (l21..k2).map(|b| kernel_i(Kernel::I1, nu, f2[a], f2[b])).collect::<Result<Vec<_>>>()?;
        for b in 0..l11 {
            row.push(kernel_i(Kernel::I2, nu, b1[b], f2[a])?);
        }
        rows.push(row);
    }
    for a in l11..k1 {
        let mut row = (l21..k2).map(|b| kernel_i(Kernel::I2, nu, b1[a], f2[b])).collect::<Result<Vec<_>>>()?;
        for b in 0..l11 {
            row.push(kernel_i(Kernel::I3, nu, b1[a], b1[b])?);
        }
        rows.push(row);
    }
    for a in 0..r {
        let mut row: Vec<C64> = (l21..k2).map(|b| f2[b].powi(a as i32) * bessel_jc(n + a as i32, f2[b])).collect();
        for b in 0..l11 {
            row.push(b1[b].powi(a as i32) * bessel_g(n + a as i32, b1[b])?);
        }
        rows.push(row);
    }
    let det = determinant(&CMatrix::from_rows(&rows)?)?;
    let sq = |z: &[C64]| z.iter().map(|x| x * x).collect::<Vec<_>>();
    let (s1, s2) = (sq(b1), sq(f2));
    let bz = berezinian_unrestricted(&s1[..l11], &s2[..l21])? * berezinian_unrestricted(&s1[l11..], &s2[l21..])?;
    let c3 = if r >= 3 { r * (r - 1) * (r - 2) / 6 } else { 0 };
    let e = k1 + k1 * k2 + k1 * l11 + k2 * l21 + c3 + k1 * k1.saturating_sub(1) / 2;
    Ok(phase(nu, k1, k2) * det * parity(e) / bz)
}

/// Limiting ratio by the Pfaffian formula (bordered by J_nu / G_nu for odd
/// k1 + k2).
pub fn micro_partition_pf(nu: u32, flavors: &FlavorSet) -> Result<C64> {
    validate_micro(flavors)?;
    let (b1, f2) = (&flavors.bosonic, &flavors.fermionic);
    let (k1, k2) = (b1.len(), f2.len());
    let nk = k1 + k2;
    let odd = nk % 2 == 1;
    let o = usize::from(odd);
    let mut k = CMatrix::zeros(nk + o, nk + o);
    for a in 0..k2 {
        for b in 0..k2 {
            if a != b {
                k[(a + o, b + o)] = (f2[a] - f2[b]) * kernel_i(Kernel::I1, nu, f2[a], f2[b])?;
            }
        }
        for b in 0..k1 {
            let e = (f2[a] + b1[b]) * kernel_i(Kernel::I2, nu, b1[b], f2[a])?;
            k[(a + o, k2 + b + o)] = e;
            k[(k2 + b + o, a + o)] = -e;
        }
    }
    for a in 0..k1 {
        for b in 0..k1 {
            if a != b {
                k[(k2 + a + o, k2 + b + o)] = (b1[b] - b1[a]) * kernel_i(Kernel::I3, nu, b1[a], b1[b])?;
            }
        }
    }
    if odd {
        for a in 0..k2 {
            let v = bessel_jc(nu as i32, f2[a]);
            k[(0, a + 1)] = v;
            k[(a + 1, 0)] = -v;
        }
        for b in 0..k1 {
            let v = bessel_g(nu as i32, b1[b])?;
            k[(0, k2 + b + 1)] = v;
            k[(k2 + b + 1, 0)] = -v;
        }
    }
    let defect = k.antisymmetry_defect();
    if defect > ASSEMBLY_TOL {
        return Err(Error::Assembly(format!("microscopic kernel antisymmetry defect {defect:.2e}")));
    }
    let pf = pfaffian(&k)?;
    Ok(phase(nu, k1, k2) * pf / berezinian_unrestricted(b1, f2)?)
}

/// (cn)^2 for the Laguerre family: 4 alpha n.
pub fn laguerre_scale_sq(alpha: f64, n: usize) -> f64 {
    4.0 * alpha * n as f64
}

/// p_n(y)/p_n(0) and p_{n+1}(y)/p_{n+1}(0) for the Laguerre weight, by a
/// recurrence normalised at y = 0 (no overflow for large n).
pub fn laguerre_phi(n: usize, nu: u32, alpha: f64, y: C64) -> (C64, C64) {
    let nuf = nu as f64;
    // rho_j = p_{j+1}(0)/p_j(0) = -(j + nu + 1)/alpha
    let rho = |j: usize| -(j as f64 + nuf + 1.0) / alpha;
    let (mut pm, mut pc) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    for j in 0..=n {
        let a = (2.0 * j as f64 + nuf + 1.0) / alpha;
        let b = j as f64 * (j as f64 + nuf) / (alpha * alpha);
        let prev = if j == 0 { C64::new(0.0, 0.0) } else { pm * (b / rho(j - 1)) };
        let next = ((y - a) * pc - prev) / rho(j);
        pm = pc;
        pc = next;
    }
    (pm, pc)
}

/// Gamma(nu+1) (2/x)^nu J_nu(x), equal to 1 at x = 0.
pub fn bessel_j_normalized(nu: u32, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let g: f64 = (1..=nu).map(|i| i as f64).product();
    g * (2.0 / x).powi(nu as i32) * bessel_j(nu as i32, x)
}

/// chi_n = p̂_n(u) p_n(0)/h_n for the Laguerre weight at u < 0, through the
/// minimal-solution continued fraction r_j = p̂_j/p̂_{j-1}.
pub fn laguerre_chi(n: usize, nu: u32, alpha: f64, u: f64) -> Result<f64> {
    if !(u < 0.0) {
        return Err(Error::Domain("chi evaluated on the support".into()));
    }
    let nuf = nu as f64;
    let a = |j: usize| (2.0 * j as f64 + nuf + 1.0) / alpha;
    let b = |j: usize| j as f64 * (j as f64 + nuf) / (alpha * alpha);
    let ratios = |top: usize| -> Vec<f64> {
        let mut r = vec![0.0; top + 2];
        for j in (1..=top).rev() {
            r[j] = b(j) / (u - a(j) - r[j + 1]);
        }
        r
    };
    let mut top = 2 * n + 64;
    let mut r = ratios(top);
    loop {
        top *= 2;
        let r2 = ratios(top);
        let diff = (1..=n.max(1)).map(|j| ((r2[j] - r[j]) / r2[j]).abs()).fold(0.0, f64::max);
        r = r2;
        if diff < 1e-15 || top > 1 << 24 {
            break;
        }
    }
    let params = EnsembleParams::gaussian(1, nu as usize, alpha);
    let sys = OrthogonalSystem::laguerre(&params, 0)?;
    let p0 = sys.cauchy(0, C64::new(u, 0.0))?.re;
    let mut chi = p0 / sys.h[0];
    for j in 1..=n {
        let rho = -((j - 1) as f64 + nuf + 1.0) / alpha;
        chi *= r[j] * rho / b(j);
    }
    Ok(chi)
}

/// alpha (2/Gamma(nu+1)) (x/2)^nu K_nu(x)
pub fn bessel_k_normalized(nu: u32, alpha: f64, x: f64) -> Result<f64> {
    let g: f64 = (1..=nu).map(|i| i as f64).product();
    Ok(alpha * 2.0 / g * (x / 2.0).powi(nu as i32) * bessel_k(nu as i32, x)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub x: f64,
    pub deviation_p: f64,
    pub deviation_phat: f64,
}

/// Deviation of the scaled Laguerre polynomials and Cauchy transforms from
/// their Bessel limits. deviation_p is absolute on the unit-normalised
/// scale (both sides equal 1 at x = 0); deviation_phat is relative.
pub fn convergence_study(alpha: f64, nu: u32, x_grid: &[f64], n_list: &[usize]) -> Result<Vec<ConvergenceRow>> {
    if !(alpha > 0.0) {
        return Err(Error::Validation("alpha must be positive".into()));
    }
    if x_grid.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Validation("grid points must be positive".into()));
    }
    if n_list.contains(&0) {
        return Err(Error::Validation("n must be positive".into()));
    }
    let tasks: Vec<(usize, f64)> = n_list.iter().flat_map(|n| x_grid.iter().map(move |x| (*n, *x))).collect();
    tasks
        .par_iter()
        .map(|&(n, x)| {
            let s2 = laguerre_scale_sq(alpha, n);
            let (phi, _) = laguerre_phi(n, nu, alpha, C64::new(x * x / s2, 0.0));
            let dp = (phi.re - bessel_j_normalized(nu, x)).abs();
            let chi = laguerre_chi(n, nu, alpha, -x * x / s2)?;
            let target = bessel_k_normalized(nu, alpha, x)?;
            Ok(ConvergenceRow { n, x, deviation_p: dp, deviation_phat: ((chi - target) / target).abs() })
        })
        .collect()
}

/// Finite-n fermionic two-flavour ratio at scaled arguments kappa/(cn),
/// up to kappa-independent constants (divide by a reference pair).
pub fn finite_z02_scaled(n: usize, nu: u32, alpha: f64, ka: C64, kb: C64) -> C64 {
    let s2 = laguerre_scale_sq(alpha, n);
    let (va, vb) = (ka * ka / s2, kb * kb / s2);
    let (pa, pa1) = laguerre_phi(n, nu, alpha, va);
    let (pb, pb1) = laguerre_phi(n, nu, alpha, vb);
    let f02 = (pa * pb1 - pa1 * pb) / (vb - va);
    (ka * kb).powi(nu as i32) * f02
}

/// |finite/finite_ref - micro/micro_ref| / |micro/micro_ref| for the
/// (0,2) ratio at size n.
pub fn z02_finite_vs_micro(n: usize, nu: u32, alpha: f64, pair: (C64, C64), reference: (C64, C64)) -> Result<f64> {
    let f = finite_z02_scaled(n, nu, alpha, pair.0, pair.1) / finite_z02_scaled(n, nu, alpha, reference.0, reference.1);
    let mic = |p: (C64, C64)| micro_partition_pf(nu, &FlavorSet::new(vec![], vec![p.0, p.1]));
    let m = mic(pair)? / mic(reference)?;
    Ok((f - m).norm() / m.norm())
}
