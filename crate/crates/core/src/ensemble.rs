//! Ensemble parameters, the radial weight, moment matrices and the joint
//! density of the chiral eigenvalues.

use crate::linalg::vandermonde;
use crate::quadrature::{integrate_half_line, QuadConfig};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

fn default_potential() -> Vec<f64> {
    vec![1.0]
}

/// Chiral ensemble: W is n x (n + nu), weight exp(-alpha tr V(W W^dag)).
///
/// `potential` lists the coefficients c_1, c_2, ... of V(y) = sum_m c_m y^m;
/// a constant term is irrelevant for ratios and is not represented.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub n: usize,
    pub nu: usize,
    pub alpha: f64,
    #[serde(default = "default_potential")]
    pub potential: Vec<f64>,
}

impl EnsembleParams {
    pub fn gaussian(n: usize, nu: usize, alpha: f64) -> Self {
        Self { n, nu, alpha, potential: default_potential() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation("n must be at least 1".into()));
        }
        // nu > n is not a physical matrix size but the measure, the
        // polynomials and both factorisations stay valid, so it is allowed.
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Validation(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.potential.iter().any(|c| !c.is_finite()) {
            return Err(Error::Validation("non-finite potential coefficient".into()));
        }
        match self.potential.iter().rev().find(|c| **c != 0.0) {
            Some(c) if *c > 0.0 => Ok(()),
            _ => Err(Error::Validation(
                "potential must have a positive leading coefficient".into(),
            )),
        }
    }

    /// V(y)
    pub fn potential_at(&self, y: f64) -> f64 {
        self.potential.iter().rev().fold(0.0, |acc, c| acc * y + c) * y
    }

    /// Effective alpha when V is linear, V(y) = c_1 y.
    pub fn gaussian_scale(&self) -> Option<f64> {
        let deg = self.potential.iter().rposition(|c| *c != 0.0)?;
        (deg == 0).then(|| self.alpha * self.potential[0])
    }

    /// lambda at which alpha V(lambda^2) = 1; sets quadrature scales.
    pub fn length_scale(&self) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while self.alpha * self.potential_at(hi * hi) < 1.0 && hi < 1e150 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.alpha * self.potential_at(mid * mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// w(lambda) = lambda^{2 nu + 1} exp(-alpha V(lambda^2))
pub fn weight_eval(params: &EnsembleParams, lambda: f64) -> Result<f64> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::Domain(format!("weight evaluated at lambda = {lambda}")));
    }
    Ok(log_weight(params, lambda).exp())
}

pub(crate) fn log_weight(params: &EnsembleParams, lambda: f64) -> f64 {
    // the exponent 2 nu + 1 is at least one, so w(0) = 0
    if lambda == 0.0 {
        return f64::NEG_INFINITY;
    }
    (2 * params.nu + 1) as f64 * lambda.ln() - params.alpha * params.potential_at(lambda * lambda)
}

fn moment_integral(params: &EnsembleParams, d: usize) -> Result<Vec<f64>> {
    // m_k = int lambda^{2k + 2 nu} exp(-alpha V(lambda^2)) lambda d lambda, k < d
    let s = params.length_scale();
    let cfg = QuadConfig { rel_tol: 1e-13, ..QuadConfig::default() };
    let r = integrate_half_line(
        |l: f64| {
            if l == 0.0 || !l.is_finite() {
                return vec![0.0; d];
            }
            let lw = log_weight(params, l);
            (0..d).map(|k| (lw + 2.0 * k as f64 * l.ln()).exp()).collect::<Vec<f64>>()
        },
        s,
        &cfg,
    )?;
    Ok(r.value)
}

/// M_ab = int lambda^{2(a+b-2)} w(lambda) d lambda, a, b = 1..d
pub fn moment_matrix(params: &EnsembleParams, d: usize) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    let m = moment_integral(params, 2 * d.max(1) - 1)?;
    Ok((0..d).map(|a| (0..d).map(|b| m[a + b]).collect()).collect())
}

/// Skew moments 1/2 int [x^{a-1}(-x)^{b-1} - x^{b-1}(-x)^{a-1}] x^{2 nu} e^{-alpha V(x^2)} dx
/// over x > 0 (the measure of the skew product); d must be even.
pub fn skew_moment_matrix(params: &EnsembleParams, d: usize) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    if d % 2 == 1 {
        return Err(Error::Validation(format!("skew moment dimension {d} must be even")));
    }
    if d == 0 {
        return Ok(vec![]);
    }
    // plain moments mu_k = int_0^inf x^{k + 2 nu} e^{-alpha V(x^2)} dx, k < 2d - 1
    let s = params.length_scale();
    let cfg = QuadConfig { rel_tol: 1e-13, ..QuadConfig::default() };
    let kmax = 2 * d - 1;
    let mu = integrate_half_line(
        |x: f64| {
            if x == 0.0 || !x.is_finite() {
                return vec![0.0; kmax];
            }
            let base = 2.0 * params.nu as f64 * x.ln() - params.alpha * params.potential_at(x * x);
            (0..kmax).map(|k| (base + k as f64 * x.ln()).exp()).collect::<Vec<f64>>()
        },
        s,
        &cfg,
    )?
    .value;
    let sgn = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok((0..d)
        .map(|a| (0..d).map(|b| 0.5 * (sgn(b) - sgn(a)) * mu[a + b]).collect())
        .collect())
}

/// Unnormalised joint density Delta_n(Lambda^2)^2 prod w(lambda_j).
pub fn joint_density(params: &EnsembleParams, lambdas: &[f64]) -> Result<f64> {
    params.validate()?;
    if lambdas.len() != params.n {
        return Err(Error::Dimension(format!(
            "{} eigenvalues for n = {}",
            lambdas.len(),
            params.n
        )));
    }
    let mut w = 1.0;
    for &l in lambdas {
        w *= weight_eval(params, l)?;
    }
    let sq: Vec<C64> = lambdas.iter().map(|l| C64::new(l * l, 0.0)).collect();
    Ok(vandermonde(&sq).norm_sqr() * w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma_int(k: usize) -> f64 {
        (1..k).map(|i| i as f64).product()
    }

    #[test]
    fn validation() {
        assert!(EnsembleParams::gaussian(2, 1, 1.0).validate().is_ok());
        assert!(EnsembleParams::gaussian(0, 0, 1.0).validate().is_err());
        assert!(EnsembleParams::gaussian(2, 3, 1.0).validate().is_ok());
        assert!(EnsembleParams::gaussian(2, 0, -1.0).validate().is_err());
        let mut p = EnsembleParams::gaussian(2, 0, 1.0);
        p.potential = vec![1.0, -0.1];
        assert!(p.validate().is_err());
    }

    #[test]
    fn weight_values() {
        let p = EnsembleParams::gaussian(2, 1, 1.5);
        let l: f64 = 0.7;
        let want = l.powi(3) * (-1.5 * l * l).exp();
        assert!((weight_eval(&p, l).unwrap() - want).abs() < 1e-15);
        assert!(weight_eval(&p, -0.1).is_err());
        assert_eq!(weight_eval(&p, 0.0).unwrap(), 0.0);
        assert_eq!(weight_eval(&EnsembleParams::gaussian(1, 0, 1.0), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_moments() {
        // int lambda^{2k+2nu+1} e^{-alpha lambda^2} = Gamma(k+nu+1)/(2 alpha^{k+nu+1})
        let p = EnsembleParams::gaussian(3, 2, 1.3);
        let m = moment_matrix(&p, 3).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let k = a + b;
                let want = gamma_int(k + 3) / (2.0 * 1.3f64.powi(k as i32 + 3));
                assert!((m[a][b] - want).abs() < 1e-12 * want, "{a} {b}");
            }
        }
    }

    #[test]
    fn skew_moments_antisymmetric_and_checkerboard() {
        let p = EnsembleParams::gaussian(2, 1, 1.0);
        let m = skew_moment_matrix(&p, 4).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert!((m[a][b] + m[b][a]).abs() < 1e-15);
                if (a + b) % 2 == 0 {
                    assert_eq!(m[a][b], 0.0);
                }
            }
        }
        // a=1,b=2: 1/2 (-1 - 1) int x^{1+2} e^{-x^2} = -1/2
        assert!((m[0][1] + 0.5).abs() < 1e-12);
        assert!(skew_moment_matrix(&p, 3).is_err());
    }

    #[test]
    fn length_scale_gaussian() {
        let p = EnsembleParams::gaussian(1, 0, 4.0);
        assert!((p.length_scale() - 0.5).abs() < 1e-12);
    }
}
