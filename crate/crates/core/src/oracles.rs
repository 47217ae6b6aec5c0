//! Brute-force references: Monte Carlo over Gaussian random matrices and
//! nested quadrature over the joint eigenvalue density.

use crate::ensemble::{log_weight, EnsembleParams};
use crate::linalg::{determinant, vandermonde, CMatrix};
use crate::partition::{FlavorSet, Method, PartitionResult, NORMALIZATION};
use crate::polynomials::Measure;
use crate::quadrature::{integrate_half_line, integrate_real_line, QuadConfig};
use crate::{Error, Result, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest n handled by the tensor quadrature oracles.
pub const QUAD_MAX_N: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub chunk: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { samples: 1_000_000, seed: 1, chunk: 10_000 }
    }
}

/// Generator for chunk `index`: same seed, independent stream.
pub fn chunk_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// n x (n + nu) complex Gaussian matrix with E|W_ab|^2 = 1/alpha.
pub fn sample_matrix(params: &EnsembleParams, rng: &mut ChaCha8Rng) -> Result<CMatrix> {
    params.validate()?;
    let al = params
        .gaussian_scale()
        .ok_or_else(|| Error::Unsupported("direct sampling needs a Gaussian potential".into()))?;
    let sd = (0.5 / al).sqrt();
    let (n, m) = (params.n, params.n + params.nu);
    Ok(CMatrix::from_fn(n, m, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(sd * re, sd * im)
    }))
}

/// D = [[0, W], [-W^dag, 0]], of size 2n + nu.
pub fn dirac_matrix(w: &CMatrix) -> CMatrix {
    let (n, m) = (w.rows(), w.cols());
    CMatrix::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
        (true, false) => w[(i, j - n)],
        (false, true) => -w[(j, i - n)].conj(),
        _ => C64::new(0.0, 0.0),
    })
}

fn shifted_det(d: &CMatrix, kappa: C64) -> Result<C64> {
    let mut s = d.clone();
    for i in 0..s.rows() {
        s[(i, i)] -= C64::new(0.0, 1.0) * kappa;
    }
    determinant(&s)
}

/// prod_f det(D - i kappa_f) / prod_b det(D - i kappa_b) averaged over
/// Gaussian W, with a jackknife error over chunks.
pub fn mc_partition(params: &EnsembleParams, flavors: &FlavorSet, cfg: &McConfig) -> Result<PartitionResult> {
    params.validate()?;
    if params.gaussian_scale().is_none() {
        return Err(Error::Unsupported("Monte Carlo needs a Gaussian potential".into()));
    }
    if cfg.samples == 0 || cfg.chunk == 0 {
        return Err(Error::Validation("samples and chunk must be positive".into()));
    }
    flavors.validate_chiral()?;
    let nchunks = cfg.samples.div_ceil(cfg.chunk);
    // per chunk: (sum, sum |x|^2, count)
    let parts: Vec<Result<(C64, f64, usize)>> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(cfg.seed, c as u64);
            let count = cfg.chunk.min(cfg.samples - c * cfg.chunk);
            let (mut s, mut s2) = (C64::new(0.0, 0.0), 0.0);
            for _ in 0..count {
                let d = dirac_matrix(&sample_matrix(params, &mut rng)?);
                let mut x = C64::new(1.0, 0.0);
                for k in &flavors.fermionic {
                    x *= shifted_det(&d, *k)?;
                }
                for k in &flavors.bosonic {
                    x /= shifted_det(&d, *k)?;
                }
                s += x;
                s2 += x.norm_sqr();
            }
            Ok((s, s2, count))
        })
        .collect();
    let parts: Vec<(C64, f64, usize)> = parts.into_iter().collect::<Result<_>>()?;
    let total: C64 = parts.iter().map(|p| p.0).sum();
    let total2: f64 = parts.iter().map(|p| p.1).sum();
    let nsamp = cfg.samples as f64;
    let mean = total / nsamp;
    let stderr = if parts.len() >= 2 {
        let loo: Vec<C64> =
            parts.iter().map(|(s, _, c)| (total - s) / (nsamp - *c as f64)).collect();
        let avg: C64 = loo.iter().sum::<C64>() / loo.len() as f64;
        let cn = loo.len() as f64;
        ((cn - 1.0) / cn * loo.iter().map(|t| (t - avg).norm_sqr()).sum::<f64>()).sqrt()
    } else {
        let var = (total2 / nsamp - mean.norm_sqr()).max(0.0);
        (var / (nsamp - 1.0).max(1.0)).sqrt()
    };
    let mut warnings = vec![];
    if stderr > mean.norm() {
        warnings.push("standard error exceeds |mean|".to_string());
    }
    if flavors.k1() > 0 {
        warnings.push("bosonic flavours make the estimator heavy-tailed".to_string());
    }
    if cfg.samples < 10_000 {
        warnings.push("fewer than 1e4 samples: error estimate unreliable".to_string());
    }
    Ok(PartitionResult {
        value: mean,
        method: Method::Mc,
        normalization: NORMALIZATION.into(),
        stderr: Some(stderr),
        warnings,
    })
}

/// Default relative tolerance of each nested quadrature.
pub const QUAD_REL_TOL: f64 = 1e-11;

fn quad_cfg(rel_tol: f64) -> QuadConfig {
    QuadConfig { rel_tol, initial_panels: 4, max_intervals: 2000, ..QuadConfig::default() }
}

/// Nested half-line quadrature over `dim` variables of a vector integrand.
fn nested_half_line(
    dim: usize,
    scale: f64,
    cfg: &QuadConfig,
    point: &mut Vec<f64>,
    f: &dyn Fn(&[f64]) -> Vec<C64>,
) -> Result<(Vec<C64>, f64)> {
    if dim == 0 {
        return Ok((f(point), 0.0));
    }
    let mut worst = 0.0_f64;
    let mut err = None;
    let r = integrate_half_line(
        |x| {
            point.push(x);
            let v = match nested_half_line(dim - 1, scale, cfg, point, f) {
                Ok((v, e)) => {
                    worst = worst.max(e);
                    v
                }
                Err(e) => {
                    err.get_or_insert(e);
                    vec![C64::new(0.0, 0.0); 2]
                }
            };
            point.pop();
            v
        },
        scale,
        cfg,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let r = r?;
    let mag = r.value.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok((r.value, worst.max(r.error / mag.max(f64::MIN_POSITIVE))))
}

fn nested_real_line(
    dim: usize,
    scale: f64,
    cfg: &QuadConfig,
    point: &mut Vec<f64>,
    f: &dyn Fn(&[f64]) -> Vec<C64>,
) -> Result<(Vec<C64>, f64)> {
    if dim == 0 {
        return Ok((f(point), 0.0));
    }
    let mut worst = 0.0_f64;
    let mut err = None;
    let r = integrate_real_line(
        |x| {
            point.push(x);
            let v = match nested_real_line(dim - 1, scale, cfg, point, f) {
                Ok((v, e)) => {
                    worst = worst.max(e);
                    v
                }
                Err(e) => {
                    err.get_or_insert(e);
                    vec![C64::new(0.0, 0.0); 2]
                }
            };
            point.pop();
            v
        },
        scale,
        cfg,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let r = r?;
    let mag = r.value.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok((r.value, worst.max(r.error / mag.max(f64::MIN_POSITIVE))))
}

/// Z_{k1/k2}/Z_{0/0} by nested adaptive quadrature over the n eigenvalues.
pub fn quad_partition(params: &EnsembleParams, flavors: &FlavorSet) -> Result<PartitionResult> {
    quad_partition_tol(params, flavors, QUAD_REL_TOL)
}

pub fn quad_partition_tol(params: &EnsembleParams, flavors: &FlavorSet, rel_tol: f64) -> Result<PartitionResult> {
    params.validate()?;
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Validation(format!("quadrature tolerance {rel_tol} outside (0, 1)")));
    }
    if params.n > QUAD_MAX_N {
        return Err(Error::Unsupported(format!("quadrature oracle limited to n <= {QUAD_MAX_N}")));
    }
    flavors.validate_chiral()?;
    let v: Vec<C64> = flavors.fermionic.iter().map(|k| k * k).collect();
    let u: Vec<C64> = flavors.bosonic.iter().map(|k| k * k).collect();
    let integrand = |l: &[f64]| -> Vec<C64> {
        let mut lw = 0.0;
        for x in l {
            if *x <= 0.0 || !x.is_finite() {
                return vec![C64::new(0.0, 0.0); 2];
            }
            lw += log_weight(params, *x);
        }
        let sq: Vec<C64> = l.iter().map(|x| C64::new(x * x, 0.0)).collect();
        let jac = vandermonde(&sq).norm_sqr() * lw.exp();
        if jac == 0.0 || !jac.is_finite() {
            return vec![C64::new(0.0, 0.0); 2];
        }
        let mut r = C64::new(1.0, 0.0);
        for y in &sq {
            for vv in &v {
                r *= y - vv;
            }
            for uu in &u {
                r /= y - uu;
            }
        }
        vec![r * jac, C64::new(jac, 0.0)]
    };
    let (vals, relerr) =
        nested_half_line(params.n, params.length_scale(), &quad_cfg(rel_tol), &mut Vec::new(), &integrand)?;
    let i = C64::new(0.0, 1.0);
    let pre: C64 = flavors.fermionic.iter().map(|k| (-i * k).powi(params.nu as i32)).product::<C64>()
        / flavors.bosonic.iter().map(|k| (-i * k).powi(params.nu as i32)).product::<C64>();
    let mut res = PartitionResult::exact(pre * vals[0] / vals[1], Method::Quad);
    if relerr > 1e-9 {
        res.warnings.push(format!("estimated relative error {relerr:.1e}"));
    }
    Ok(res)
}

/// E[prod (z - kappa2)/prod (z - kappa1)] over N eigenvalues with weight
/// exp(-W(z)) Delta^2(z) on the real line.
pub fn quad_generic_partition(measure: &Measure, big_n: usize, flavors: &FlavorSet) -> Result<PartitionResult> {
    measure.validate()?;
    let potential = match measure {
        Measure::RealLine { potential } => potential.clone(),
        _ => return Err(Error::Unsupported("real-line measure expected".into())),
    };
    if big_n == 0 || big_n > QUAD_MAX_N {
        return Err(Error::Unsupported(format!("quadrature oracle limited to 1 <= N <= {QUAD_MAX_N}")));
    }
    flavors.validate_generic()?;
    let wpot = |z: f64| potential.iter().rev().fold(0.0, |acc, c| acc * z + c) * z;
    let integrand = |z: &[f64]| -> Vec<C64> {
        let lw: f64 = z.iter().map(|x| -wpot(*x)).sum();
        let zc: Vec<C64> = z.iter().map(|x| C64::new(*x, 0.0)).collect();
        let jac = vandermonde(&zc).norm_sqr() * lw.exp();
        if jac == 0.0 || !jac.is_finite() {
            return vec![C64::new(0.0, 0.0); 2];
        }
        let mut r = C64::new(1.0, 0.0);
        for y in &zc {
            for k in &flavors.fermionic {
                r *= y - k;
            }
            for k in &flavors.bosonic {
                r /= y - k;
            }
        }
        vec![r * jac, C64::new(jac, 0.0)]
    };
    let (vals, relerr) = nested_real_line(big_n, 1.0, &quad_cfg(QUAD_REL_TOL), &mut Vec::new(), &integrand)?;
    let mut res = PartitionResult::exact(vals[0] / vals[1], Method::Quad);
    if relerr > 1e-9 {
        res.warnings.push(format!("estimated relative error {relerr:.1e}"));
    }
    Ok(res)
}

fn joint_log_density(params: &EnsembleParams, l: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in l {
        if *x <= 0.0 || !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        s += log_weight(params, *x);
    }
    for a in 0..l.len() {
        for b in a + 1..l.len() {
            s += 2.0 * (l[a] * l[a] - l[b] * l[b]).abs().ln();
        }
    }
    s
}

/// R_k(x) = n!/(n-k)! int P(x, rest) / int P, with P the joint density.
pub fn quad_kpoint(params: &EnsembleParams, x: &[f64]) -> Result<f64> {
    params.validate()?;
    let (n, k) = (params.n, x.len());
    if n > QUAD_MAX_N {
        return Err(Error::Unsupported(format!("quadrature oracle limited to n <= {QUAD_MAX_N}")));
    }
    if k == 0 || k > n {
        return Err(Error::Validation(format!("k = {k} must lie in 1..=n")));
    }
    if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Domain("k-point arguments must be non-negative".into()));
    }
    let s = params.length_scale();
    let dens = |l: &[f64]| -> Vec<C64> {
        let v = joint_log_density(params, l).exp();
        vec![C64::new(v, 0.0), C64::new(0.0, 0.0)]
    };
    let (z, _) = nested_half_line(n, s, &quad_cfg(QUAD_REL_TOL), &mut Vec::new(), &dens)?;
    let part = |rest: &[f64]| -> Vec<C64> {
        let mut all = x.to_vec();
        all.extend_from_slice(rest);
        let v = joint_log_density(params, &all).exp();
        vec![C64::new(v, 0.0), C64::new(0.0, 0.0)]
    };
    let (num, _) = nested_half_line(n - k, s, &quad_cfg(QUAD_REL_TOL), &mut Vec::new(), &part)?;
    let falling: f64 = ((n - k + 1)..=n).map(|i| i as f64).product();
    Ok(falling * num[0].re / z[0].re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_structure() {
        let p = EnsembleParams::gaussian(2, 1, 1.0);
        let mut rng = chunk_rng(7, 0);
        let w = sample_matrix(&p, &mut rng).unwrap();
        assert_eq!((w.rows(), w.cols()), (2, 3));
        let d = dirac_matrix(&w);
        for i in 0..5 {
            for j in 0..5 {
                assert!((d[(i, j)] + d[(j, i)].conj()).norm() < 1e-15);
            }
        }
        // nu = 1 generic zero mode
        assert!(determinant(&d).unwrap().norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_configs() {
        let p = EnsembleParams::gaussian(1, 0, 1.0);
        let f = FlavorSet::new(vec![], vec![C64::new(0.0, 2.0)]);
        let cfg = McConfig { samples: 0, seed: 1, chunk: 10 };
        assert!(matches!(mc_partition(&p, &f, &cfg), Err(Error::Validation(_))));
        let mut q = p.clone();
        q.potential = vec![1.0, 0.1];
        assert!(matches!(
            mc_partition(&q, &f, &McConfig::default()),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            quad_partition(&EnsembleParams::gaussian(4, 0, 1.0), &f),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn empty_flavours_are_one() {
        let p = EnsembleParams::gaussian(2, 0, 1.0);
        let cfg = McConfig { samples: 100, seed: 3, chunk: 10 };
        let r = mc_partition(&p, &FlavorSet::default(), &cfg).unwrap();
        assert_eq!(r.value, C64::new(1.0, 0.0));
        let q = quad_partition(&p, &FlavorSet::default()).unwrap();
        assert!((q.value - 1.0).norm() < 1e-14);
    }

    #[test]
    fn one_by_one_closed_form() {
        // n = 1, nu = 0: E[|W|^2 - kappa^2] = 1 - kappa^2
        let p = EnsembleParams::gaussian(1, 0, 1.0);
        let f = FlavorSet::new(vec![], vec![C64::new(0.0, 2.0)]);
        let q = quad_partition(&p, &f).unwrap();
        assert!((q.value - 5.0).norm() < 1e-10);
    }
}
