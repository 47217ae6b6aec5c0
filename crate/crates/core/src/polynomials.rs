//! Monic orthogonal polynomials, their Cauchy transforms, the recursion in
//! the topological charge, and skew-orthogonal polynomials.

use crate::ensemble::{log_weight, EnsembleParams};
use crate::quadrature::{integrate_half_line, integrate_real_line, QuadConfig, QuadValue};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Largest degree accepted by the Stieltjes construction.
pub const MAX_DEGREE: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MonicPolynomial {
    /// ascending powers; the last entry is 1
    pub coeffs: Vec<f64>,
}

impl MonicPolynomial {
    pub fn one() -> Self {
        Self { coeffs: vec![1.0] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// q(x) = p(x^2)
    fn compose_square(&self) -> Self {
        let mut c = vec![0.0; 2 * self.coeffs.len() - 1];
        for (i, v) in self.coeffs.iter().enumerate() {
            c[2 * i] = *v;
        }
        Self { coeffs: c }
    }

    fn times_x(&self) -> Self {
        let mut c = vec![0.0];
        c.extend_from_slice(&self.coeffs);
        Self { coeffs: c }
    }
}

/// The measure the polynomials are orthogonal against, in the variable y.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measure {
    /// (1/2) y^nu exp(-alpha V(y)) dy on y > 0, i.e. w(lambda) d lambda with y = lambda^2.
    Chiral(EnsembleParams),
    /// exp(-W(y)) dy on the real line, W(y) = sum_{m>=1} c_m y^m of even degree.
    RealLine { potential: Vec<f64> },
}

impl Measure {
    pub fn hermite() -> Self {
        Measure::RealLine { potential: vec![0.0, 1.0] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Measure::Chiral(p) => p.validate(),
            Measure::RealLine { potential } => {
                let deg = potential
                    .iter()
                    .rposition(|c| *c != 0.0)
                    .ok_or_else(|| Error::Validation("empty potential".into()))?;
                if potential.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Validation("non-finite potential coefficient".into()));
                }
                // coefficients start at y^1, so index deg is power deg + 1
                if deg % 2 == 0 || potential[deg] <= 0.0 {
                    return Err(Error::Validation(
                        "real-line potential needs even degree and positive leading coefficient"
                            .into(),
                    ));
                }
                Ok(())
            }
        }
    }

    fn real_potential(potential: &[f64], y: f64) -> f64 {
        potential.iter().rev().fold(0.0, |acc, c| acc * y + c) * y
    }

    fn real_scale(potential: &[f64]) -> f64 {
        let big = |s: f64| {
            Self::real_potential(potential, s).max(Self::real_potential(potential, -s)) >= 1.0
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while !big(hi) && hi < 1e150 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if big(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// True when y lies within a relative distance eps of the support.
    pub fn near_support(&self, u: C64, eps: f64) -> bool {
        let tol = eps * (1.0 + u.norm());
        match self {
            Measure::Chiral(_) => u.im.abs() < tol && u.re > -tol,
            Measure::RealLine { .. } => u.im.abs() < tol,
        }
    }

    /// int f(y) dmu(y)
    pub fn integrate<T: QuadValue>(&self, mut f: impl FnMut(f64) -> T, cfg: &QuadConfig) -> Result<T> {
        match self {
            Measure::Chiral(p) => {
                let s = p.length_scale();
                integrate_half_line(
                    |l| {
                        let v = f(l * l);
                        let mut out = v.zero_like();
                        if l > 0.0 && l.is_finite() {
                            let w = log_weight(p, l).exp();
                            if w > 0.0 {
                                out.add_scaled(w, &v);
                            }
                        }
                        out
                    },
                    s,
                    cfg,
                )
                .map(|r| r.value)
            }
            Measure::RealLine { potential } => {
                let s = Self::real_scale(potential);
                integrate_real_line(
                    |z| {
                        let v = f(z);
                        let mut out = v.zero_like();
                        if z.is_finite() {
                            let w = (-Self::real_potential(potential, z)).exp();
                            if w > 0.0 {
                                out.add_scaled(w, &v);
                            }
                        }
                        out
                    },
                    s,
                    cfg,
                )
                .map(|r| r.value)
            }
        }
    }
}

/// Monic orthogonal polynomials p_0..p_J via their recurrence
/// p_{j+1} = (y - a_j) p_j - b_j p_{j-1}, with norms h_j = int p_j^2 dmu.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalSystem {
    pub measure: Measure,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemExport {
    pub nu: usize,
    pub alpha: f64,
    pub potential: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
}

fn gamma_int(k: usize) -> f64 {
    // Gamma(k) for integer k >= 1
    (1..k).map(|i| i as f64).product()
}

impl OrthogonalSystem {
    pub fn degree(&self) -> usize {
        self.h.len() - 1
    }

    fn check_degree(&self, j: usize) -> Result<()> {
        if j > self.degree() {
            return Err(Error::Range(format!(
                "degree {j} requested from a system built to {}",
                self.degree()
            )));
        }
        Ok(())
    }

    /// Stieltjes procedure: recurrence coefficients from quadrature inner products.
    pub fn build(measure: Measure, big_j: usize) -> Result<Self> {
        measure.validate()?;
        if big_j > MAX_DEGREE {
            return Err(Error::Validation(format!("degree {big_j} exceeds {MAX_DEGREE}")));
        }
        let cfg = QuadConfig { rel_tol: 1e-14, ..QuadConfig::default() };
        let mut sys = Self { measure, a: vec![], b: vec![], h: vec![] };
        for j in 0..=big_j {
            let sj = sys.clone();
            let r = sys.measure.integrate(
                |y| {
                    let p = sj.eval_real_unchecked(j, y);
                    vec![p * p, y * p * p]
                },
                &cfg,
            )?;
            let (hj, yj) = (r[0], r[1]);
            if !(hj.is_finite() && hj > 0.0) {
                return Err(Error::Conditioning(format!("norm h_{j} = {hj} lost positivity")));
            }
            sys.b.push(if j == 0 { 0.0 } else { hj / sys.h[j - 1] });
            sys.h.push(hj);
            if j < big_j {
                sys.a.push(yj / hj);
            }
        }
        sys.b.truncate(big_j);
        Ok(sys)
    }

    /// Closed-form recurrence for V(y) = c y (Laguerre).
    pub fn laguerre(params: &EnsembleParams, big_j: usize) -> Result<Self> {
        params.validate()?;
        let al = params
            .gaussian_scale()
            .ok_or_else(|| Error::Unsupported("Laguerre closed form needs a linear potential".into()))?;
        let nu = params.nu as f64;
        let a = (0..big_j).map(|k| (2.0 * k as f64 + nu + 1.0) / al).collect();
        let b = (0..big_j).map(|k| k as f64 * (k as f64 + nu) / (al * al)).collect();
        let h = (0..=big_j)
            .map(|j| {
                0.5 * gamma_int(j + 1) * gamma_int(j + params.nu + 1)
                    / al.powi((2 * j + params.nu + 1) as i32)
            })
            .collect();
        Ok(Self { measure: Measure::Chiral(params.clone()), a, b, h })
    }

    /// Closed-form recurrence for the weight exp(-y^2) on the real line.
    pub fn hermite(big_j: usize) -> Self {
        let a = vec![0.0; big_j];
        let b = (0..big_j).map(|k| k as f64 / 2.0).collect();
        let h = (0..=big_j)
            .map(|j| std::f64::consts::PI.sqrt() * gamma_int(j + 1) / 2f64.powi(j as i32))
            .collect();
        Self { measure: Measure::hermite(), a, b, h }
    }

    fn eval_real_unchecked(&self, j: usize, y: f64) -> f64 {
        let (mut pm, mut pc) = (0.0, 1.0);
        for k in 0..j {
            let pn = (y - self.a[k]) * pc - self.b[k] * pm;
            pm = pc;
            pc = pn;
        }
        pc
    }

    /// p_0(y)..p_jmax(y)
    pub fn eval_all(&self, jmax: usize, y: C64) -> Result<Vec<C64>> {
        self.check_degree(jmax)?;
        let mut out = Vec::with_capacity(jmax + 1);
        let (mut pm, mut pc) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        out.push(pc);
        for k in 0..jmax {
            let pn = (y - self.a[k]) * pc - pm * self.b[k];
            pm = pc;
            pc = pn;
            out.push(pc);
        }
        Ok(out)
    }

    pub fn eval(&self, j: usize, y: C64) -> Result<C64> {
        Ok(self.eval_all(j, y)?[j])
    }

    pub fn eval_real(&self, j: usize, y: f64) -> Result<f64> {
        self.check_degree(j)?;
        Ok(self.eval_real_unchecked(j, y))
    }

    pub fn poly(&self, j: usize) -> Result<MonicPolynomial> {
        self.check_degree(j)?;
        let mut pm: Vec<f64> = vec![];
        let mut pc = vec![1.0];
        for k in 0..j {
            let mut pn = vec![0.0; pc.len() + 1];
            for (i, c) in pc.iter().enumerate() {
                pn[i + 1] += c;
                pn[i] -= self.a[k] * c;
            }
            for (i, c) in pm.iter().enumerate() {
                pn[i] -= self.b[k] * c;
            }
            pm = pc;
            pc = pn;
        }
        *pc.last_mut().unwrap() = 1.0;
        Ok(MonicPolynomial { coeffs: pc })
    }

    pub fn export(&self) -> Result<SystemExport> {
        let (nu, alpha, potential) = match &self.measure {
            Measure::Chiral(p) => (p.nu, p.alpha, p.potential.clone()),
            Measure::RealLine { potential } => (0, 1.0, potential.clone()),
        };
        let coeffs = (0..=self.degree()).map(|j| self.poly(j).map(|p| p.coeffs)).collect::<Result<_>>()?;
        Ok(SystemExport { nu, alpha, potential, coeffs, norms: self.h.clone() })
    }

    /// Cauchy transforms p̂_0(u)..p̂_jmax(u), p̂_j(u) = int p_j(y)/(y - u) dmu(y).
    ///
    /// Evaluated as int p_j p_k/(y - u) dmu / p_k(u) with k in {j-1, j}: the
    /// polynomial part of p_k(y) - p_k(u) integrates to zero against p_j,
    /// and the product form avoids cancellation for large |u|.
    pub fn cauchy_all(&self, jmax: usize, u: C64) -> Result<Vec<C64>> {
        self.check_degree(jmax)?;
        if !(u.re.is_finite() && u.im.is_finite()) {
            return Err(Error::Validation("non-finite Cauchy argument".into()));
        }
        if self.measure.near_support(u, 1e-9) {
            return Err(Error::NearSingular(format!("Cauchy argument {u} on the support")));
        }
        let pu = self.eval_all(jmax, u)?;
        let partner: Vec<usize> = (0..=jmax)
            .map(|j| {
                if j > 0 && pu[j - 1].norm() / self.h[j - 1].sqrt() > pu[j].norm() / self.h[j].sqrt() {
                    j - 1
                } else {
                    j
                }
            })
            .collect();
        let cfg = QuadConfig { rel_tol: 1e-13, ..QuadConfig::default() };
        let vals = self.measure.integrate(
            |y| {
                let mut p = vec![0.0; jmax + 1];
                let (mut pm, mut pc) = (0.0, 1.0);
                p[0] = 1.0;
                for k in 0..jmax {
                    let pn = (y - self.a[k]) * pc - self.b[k] * pm;
                    pm = pc;
                    pc = pn;
                    p[k + 1] = pc;
                }
                let r = (C64::new(y, 0.0) - u).inv();
                (0..=jmax).map(|j| r * (p[j] * p[partner[j]])).collect::<Vec<C64>>()
            },
            &cfg,
        )?;
        Ok((0..=jmax).map(|j| vals[j] / pu[partner[j]]).collect())
    }

    pub fn cauchy(&self, j: usize, u: C64) -> Result<C64> {
        Ok(self.cauchy_all(j, u)?[j])
    }

    /// Plain quadrature of int p_j/(y - u) dmu, kept as an independent path.
    pub fn cauchy_direct(&self, j: usize, u: C64, rel_tol: f64) -> Result<C64> {
        self.check_degree(j)?;
        if self.measure.near_support(u, 1e-9) {
            return Err(Error::NearSingular(format!("Cauchy argument {u} on the support")));
        }
        let cfg = QuadConfig { rel_tol, max_intervals: 20000, ..QuadConfig::default() };
        self.measure
            .integrate(|y| (C64::new(y, 0.0) - u).inv() * self.eval_real_unchecked(j, y), &cfg)
    }
}

/// Stieltjes-built system for a chiral ensemble.
pub fn build_orthogonal_system(params: &EnsembleParams, big_j: usize) -> Result<OrthogonalSystem> {
    OrthogonalSystem::build(Measure::Chiral(params.clone()), big_j)
}

/// p_j(y) = (-1)^j j! alpha^{-j} L_j^{(nu)}(alpha y), from the explicit coefficients.
pub fn laguerre_closed_form(params: &EnsembleParams, j: usize) -> Result<MonicPolynomial> {
    params.validate()?;
    let al = params
        .gaussian_scale()
        .ok_or_else(|| Error::Unsupported("Laguerre closed form needs a linear potential".into()))?;
    let nu = params.nu;
    let binom = |n: usize, k: usize| -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    let mut c: Vec<f64> = (0..=j)
        .map(|i| {
            let sign = if (j + i) % 2 == 0 { 1.0 } else { -1.0 };
            // j! / i! alpha^{i-j} C(j+nu, j-i)
            let ratio: f64 = (i + 1..=j).map(|t| t as f64).product();
            sign * ratio * binom(j + nu, j - i) * al.powi(i as i32 - j as i32)
        })
        .collect();
    c[j] = 1.0;
    Ok(MonicPolynomial { coeffs: c })
}

pub fn cauchy_transform(sys: &OrthogonalSystem, j: usize, x: C64) -> Result<C64> {
    sys.cauchy(j, x * x)
}

/// Largest deviation between p_j^{(nu+1)}(y)/p_j^{(nu+1)}(0) and the
/// combination of p_j^{(nu)}, p_{j+1}^{(nu)} on the grid, relative to the
/// largest |lhs| on the grid.
pub fn nu_recursion_check(
    sys_nu: &OrthogonalSystem,
    sys_nup1: &OrthogonalSystem,
    j: usize,
    y_grid: &[f64],
) -> Result<f64> {
    let (p_nu, p_nu1) = match (&sys_nu.measure, &sys_nup1.measure) {
        (Measure::Chiral(a), Measure::Chiral(b)) => (a, b),
        _ => return Err(Error::Unsupported("nu recursion needs chiral systems".into())),
    };
    if p_nu1.nu != p_nu.nu + 1 || p_nu.alpha != p_nu1.alpha || p_nu.potential != p_nu1.potential {
        return Err(Error::Validation("systems must differ only by nu -> nu + 1".into()));
    }
    let pj = sys_nu.poly(j)?;
    let pj1 = sys_nu.poly(j + 1)?;
    let qj = sys_nup1.poly(j)?;
    let d1 = |p: &MonicPolynomial| p.coeffs.get(1).copied().unwrap_or(0.0);
    let denom = pj.coeffs[0] * d1(&pj1) - pj1.coeffs[0] * d1(&pj);
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Degenerate("vanishing recursion denominator".into()));
    }
    if qj.coeffs[0] == 0.0 {
        return Err(Error::Degenerate("p_j^(nu+1)(0) = 0".into()));
    }
    let mut lhs = Vec::with_capacity(y_grid.len());
    let mut rhs = Vec::with_capacity(y_grid.len());
    for &y in y_grid {
        lhs.push(qj.eval_real(y) / qj.coeffs[0]);
        rhs.push(if y.abs() < 1e-12 {
            1.0
        } else {
            (pj.coeffs[0] * pj1.eval_real(y) - pj1.coeffs[0] * pj.eval_real(y)) / (y * denom)
        });
    }
    let scale = lhs.iter().map(|v: &f64| v.abs()).fold(0.0, f64::max).max(1e-300);
    Ok(lhs.iter().zip(&rhs).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max) / scale)
}

/// q_0..q_{2J+1}: q_{2l}(x) = p_l(x^2), q_{2l+1}(x) = x p_l(x^2).
pub fn skew_polynomials(sys: &OrthogonalSystem, big_j: usize) -> Result<Vec<MonicPolynomial>> {
    let mut out = Vec::with_capacity(2 * big_j + 2);
    for l in 0..=big_j {
        let q = sys.poly(l)?.compose_square();
        out.push(q.clone());
        out.push(q.times_x());
    }
    Ok(out)
}

/// 1/2 int_0^inf [f1(x) f2(-x) - f1(-x) f2(x)] x^{2 nu} exp(-alpha V(x^2)) dx
pub fn skew_product(params: &EnsembleParams, f1: &MonicPolynomial, f2: &MonicPolynomial) -> Result<f64> {
    params.validate()?;
    let cfg = QuadConfig { rel_tol: 1e-13, ..QuadConfig::default() };
    let s = params.length_scale();
    let nu = params.nu as f64;
    integrate_half_line(
        |x: f64| {
            if x <= 0.0 || !x.is_finite() {
                return 0.0;
            }
            let lw = 2.0 * nu * x.ln() - params.alpha * params.potential_at(x * x);
            let w = lw.exp();
            if w == 0.0 {
                return 0.0;
            }
            0.5 * (f1.eval_real(x) * f2.eval_real(-x) - f1.eval_real(-x) * f2.eval_real(x)) * w
        },
        s,
        &cfg,
    )
    .map(|r| r.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_examples() {
        let p = EnsembleParams::gaussian(3, 0, 1.0);
        assert_eq!(laguerre_closed_form(&p, 0).unwrap().coeffs, vec![1.0]);
        assert_eq!(laguerre_closed_form(&p, 1).unwrap().coeffs, vec![-1.0, 1.0]);
        // L_2^(0)(y) = 1 - 2y + y^2/2 -> p_2 = y^2 - 4y + 2
        let c = laguerre_closed_form(&p, 2).unwrap().coeffs;
        assert!((c[0] - 2.0).abs() < 1e-14 && (c[1] + 4.0).abs() < 1e-14);
        let mut q = p.clone();
        q.potential = vec![1.0, 0.1];
        assert!(matches!(laguerre_closed_form(&q, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn recurrence_matches_closed_form() {
        let p = EnsembleParams::gaussian(4, 2, 1.7);
        let sys = OrthogonalSystem::laguerre(&p, 8).unwrap();
        for j in 0..=8 {
            let a = sys.poly(j).unwrap();
            let b = laguerre_closed_form(&p, j).unwrap();
            for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "j={j}");
            }
        }
    }

    #[test]
    fn stieltjes_first_steps() {
        let p = EnsembleParams::gaussian(2, 1, 2.0);
        let sys = build_orthogonal_system(&p, 3).unwrap();
        // p_1 = y - (nu+1)/alpha, h_0 = Gamma(nu+1)/(2 alpha^{nu+1})
        assert!((sys.a[0] - 1.0).abs() < 1e-12);
        assert!((sys.h[0] - 1.0 / 8.0).abs() < 1e-14);
        assert!(matches!(sys.eval(4, C64::new(0.0, 0.0)), Err(Error::Range(_))));
    }

    #[test]
    fn cauchy_conjugation_and_asymptotics() {
        let p = EnsembleParams::gaussian(2, 0, 1.0);
        let sys = OrthogonalSystem::laguerre(&p, 3).unwrap();
        let u = C64::new(0.7, 1.3);
        for j in 0..=3 {
            let a = sys.cauchy(j, u).unwrap();
            let b = sys.cauchy(j, u.conj()).unwrap();
            assert!((a - b.conj()).norm() < 1e-13 * a.norm());
        }
        // x = 100 i: p̂_0(x^2) ~ -M_11/x^2 = 1/(2 * 1e4)
        let x = C64::new(0.0, 100.0);
        let v = cauchy_transform(&sys, 0, x).unwrap();
        assert!((v * (x * x) + 0.5).norm() < 1e-3);
        assert!(matches!(sys.cauchy(0, C64::new(1.0, 0.0)), Err(Error::NearSingular(_))));
    }

    #[test]
    fn skew_polynomial_parity() {
        let p = EnsembleParams::gaussian(2, 0, 1.0);
        let sys = OrthogonalSystem::laguerre(&p, 3).unwrap();
        let q = skew_polynomials(&sys, 3).unwrap();
        assert_eq!(q[0].coeffs, vec![1.0]);
        assert_eq!(q[1].coeffs, vec![0.0, 1.0]);
        assert_eq!(q[2].coeffs, vec![-1.0, 0.0, 1.0]);
        for (j, qj) in q.iter().enumerate() {
            assert_eq!(qj.degree(), j);
            for x in [0.3, 1.7] {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                assert!((qj.eval_real(-x) - s * qj.eval_real(x)).abs() < 1e-12);
            }
        }
    }
}
