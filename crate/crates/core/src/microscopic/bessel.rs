//! Integer-order Bessel functions J_n (entire, complex argument) and K_n
//! (complex argument with Re z > 0).
//!
//! J: power series when |Re z| is small, Hankel asymptotics for large |z|,
//! Miller's backward recurrence in between. K: series for |z| <= 2, Steed's
//! continued fraction otherwise, forward recurrence in the order.

use crate::{Error, Result, C64};
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn j_series(n: u32, z: C64) -> C64 {
    let h = z * 0.5;
    let q = -h * h;
    let mut term = h.powu(n) / (1..=n).map(|i| i as f64).product::<f64>();
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        term = term * q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() && k as f64 > h.norm() {
            break;
        }
        if k > 500 {
            break;
        }
    }
    sum
}

/// Hankel expansion, valid for Re z > 0 and large |z|.
fn j_hankel(n: u32, z: C64) -> C64 {
    let mu = 4.0 * (n as f64) * (n as f64);
    let (mut p, mut q) = (c(1.0, 0.0), c(0.0, 0.0));
    let mut a = c(1.0, 0.0); // a_k / z^k
    let z8 = z * 8.0;
    for k in 1..200 {
        let kk = k as f64;
        a = a * ((mu - (2.0 * kk - 1.0).powi(2)) / kk) / z8;
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if a.norm() < 1e-17 {
            break;
        }
    }
    let w = z - (n as f64 * 0.5 + 0.25) * PI;
    (c(2.0 / PI, 0.0) / z).sqrt() * (p * w.cos() - q * w.sin())
}

fn hankel_ok(nmax: u32, z: C64) -> bool {
    z.norm() >= 30.0 + (nmax * nmax) as f64
}

fn j_miller(nmax: usize, z: C64) -> Vec<C64> {
    let m0 = nmax.max(z.norm().ceil() as usize);
    let top = m0 + 20 + (60.0 * m0 as f64).sqrt() as usize;
    let mut v = vec![c(0.0, 0.0); top + 2];
    v[top] = c(1e-30, 0.0);
    let two_over_z = c(2.0, 0.0) / z;
    for k in (1..=top).rev() {
        v[k - 1] = two_over_z * k as f64 * v[k] - v[k + 1];
        if v[k - 1].norm() > 1e250 {
            for x in v[k - 1..].iter_mut() {
                *x *= 1e-250;
            }
        }
    }
    // exp(-+ i z) = J_0 + 2 sum (-+i)^k J_k, choosing the growing exponential
    let (rot, target) = if z.im >= 0.0 {
        (c(0.0, -1.0), (c(0.0, -1.0) * z).exp())
    } else {
        (c(0.0, 1.0), (c(0.0, 1.0) * z).exp())
    };
    let mut s = v[0];
    let mut pw = c(1.0, 0.0);
    for x in v.iter().take(top + 1).skip(1) {
        pw *= rot;
        s += pw * x * 2.0;
    }
    let f = target / s;
    v.truncate(nmax + 1);
    v.iter().map(|x| x * f).collect()
}

/// J_0(z)..J_nmax(z)
pub fn bessel_j_seq(nmax: usize, z: C64) -> Vec<C64> {
    if z.norm() == 0.0 {
        let mut out = vec![c(0.0, 0.0); nmax + 1];
        out[0] = c(1.0, 0.0);
        return out;
    }
    if z.re.abs() <= 2.0 {
        return (0..=nmax as u32).map(|n| j_series(n, z)).collect();
    }
    if hankel_ok(nmax as u32, z) {
        // J_n(-z) = (-1)^n J_n(z)
        let (w, flip) = if z.re < 0.0 { (-z, true) } else { (z, false) };
        return (0..=nmax as u32)
            .map(|n| {
                let v = j_hankel(n, w);
                if flip && n % 2 == 1 { -v } else { v }
            })
            .collect();
    }
    j_miller(nmax, z)
}

/// J_n(z) for integer n (J_{-n} = (-1)^n J_n).
pub fn bessel_jc(n: i32, z: C64) -> C64 {
    let m = n.unsigned_abs() as usize;
    let v = bessel_j_seq(m, z)[m];
    if n < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}

pub fn bessel_j(n: i32, x: f64) -> f64 {
    bessel_jc(n, c(x, 0.0)).re
}

fn i_series(n: u32, z: C64) -> C64 {
    let h = z * 0.5;
    let q = h * h;
    let mut term = h.powu(n) / (1..=n).map(|i| i as f64).product::<f64>();
    let mut sum = term;
    for k in 1..200u32 {
        term = term * q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

fn k01_series(z: C64) -> (C64, C64) {
    let q = z * z * 0.25;
    let l = (z * 0.5).ln();
    let i0 = i_series(0, z);
    let i1 = i_series(1, z);
    // K0 = -(ln(z/2) + gamma) I0 + sum H_k q^k/(k!)^2
    let (mut s0, mut t0, mut hk) = (c(0.0, 0.0), c(1.0, 0.0), 0.0);
    // K1 = 1/z + ln(z/2) I1 - (z/4) sum [psi(k+1) + psi(k+2)] q^k/(k!(k+1)!)
    let mut s1 = c(0.0, 0.0);
    let mut t1 = c(1.0, 0.0);
    for k in 0..200u32 {
        let kf = k as f64;
        if k > 0 {
            hk += 1.0 / kf;
            t0 = t0 * q / (kf * kf);
            t1 = t1 * q / (kf * (kf + 1.0));
            s0 += t0 * hk;
        }
        let psi = 2.0 * (-EULER_GAMMA + hk) + 1.0 / (kf + 1.0);
        s1 += t1 * psi;
        if k > 2 && t0.norm() < 1e-18 * s0.norm() && (t1 * psi).norm() < 1e-18 * s1.norm() {
            break;
        }
    }
    let k0 = -(l + EULER_GAMMA) * i0 + s0;
    let k1 = z.inv() + l * i1 - z * 0.25 * s1;
    (k0, k1)
}

fn k01_steed(z: C64) -> (C64, C64) {
    let mut b = (c(1.0, 0.0) + z) * 2.0;
    let mut d = b.inv();
    let mut h = d;
    let mut delh = d;
    let (mut q1, mut q2) = (c(0.0, 0.0), c(1.0, 0.0));
    let a1 = 0.25;
    let mut q = c(a1, 0.0);
    let mut cc = c(a1, 0.0);
    let mut a = -a1;
    let mut s = c(1.0, 0.0) + q * delh;
    for i in 2..100_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        cc = cc * (-a / fi);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += cc * qnew;
        b += 2.0;
        d = (b + d * a).inv();
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < 1e-17 * s.norm() {
            break;
        }
    }
    h = h * a1;
    let k0 = (c(PI / 2.0, 0.0) / z).sqrt() * (-z).exp() / s;
    let k1 = k0 * (c(0.5, 0.0) + z - h) / z;
    (k0, k1)
}

/// K_n(z) for integer n and Re z > 0 (K_{-n} = K_n).
pub fn bessel_kc(n: i32, z: C64) -> Result<C64> {
    if !(z.re > 0.0) || !z.im.is_finite() || !z.re.is_finite() {
        return Err(Error::Domain(format!("K evaluated at {z} (needs Re z > 0)")));
    }
    let m = n.unsigned_abs();
    let (k0, k1) = if z.norm() <= 2.0 { k01_series(z) } else { k01_steed(z) };
    if m == 0 {
        return Ok(k0);
    }
    let (mut km, mut kc) = (k0, k1);
    for j in 1..m {
        let kn = km + kc * (2.0 * j as f64) / z;
        km = kc;
        kc = kn;
    }
    Ok(kc)
}

pub fn bessel_k(n: i32, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::Domain(format!("K_{n} diverges at x = {x}")));
    }
    bessel_kc(n, c(x, 0.0)).map(|v| v.re)
}

/// G_n(kappa) = i^{-n} K_n(-i kappa) for Im kappa > 0. G satisfies the
/// same recurrences as J_n, and G_n(i x) = K_n(x).
pub fn bessel_g(n: i32, kappa: C64) -> Result<C64> {
    if !(kappa.im > 0.0) {
        return Err(Error::Domain(format!("bosonic kappa {kappa} must lie in the upper half plane")));
    }
    let k = bessel_kc(n, c(0.0, -1.0) * kappa)?;
    Ok(c(0.0, -1.0).powi(n) * k)
}
