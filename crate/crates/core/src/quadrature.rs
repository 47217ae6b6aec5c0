//! Globally adaptive Gauss–Kronrod (10/21) quadrature for scalar, complex
//! and vector-valued integrands, with maps for half-line and real-line
//! domains.

use crate::{Error, Result, C64};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208289211386,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Values that can be integrated: accumulate with real weights, measure size.
pub trait QuadValue: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, w: f64, x: &Self);
    fn magnitude(&self) -> f64;
    fn distance(&self, other: &Self) -> f64;
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, w: f64, x: &Self) {
        *self += w * x;
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl QuadValue for C64 {
    fn zero_like(&self) -> Self {
        C64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, w: f64, x: &Self) {
        *self += x * w;
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

impl<T: QuadValue> QuadValue for Vec<T> {
    fn zero_like(&self) -> Self {
        self.iter().map(|x| x.zero_like()).collect()
    }
    fn add_scaled(&mut self, w: f64, x: &Self) {
        for (a, b) in self.iter_mut().zip(x) {
            a.add_scaled(w, b);
        }
    }
    fn magnitude(&self) -> f64 {
        self.iter().map(|x| x.magnitude()).fold(0.0, f64::max)
    }
    fn distance(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| a.distance(b)).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
    pub initial_panels: usize,
    /// Maximum number of bisections of any one panel.
    pub max_depth: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 0.0, max_intervals: 4000, initial_panels: 8, max_depth: 64 }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }
}

#[derive(Clone, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    abs: f64,
    depth: u32,
}

/// Returns (Kronrod value, error estimate, integral of |f|). The error is
/// scaled as in QUADPACK so that smooth integrands are not over-refined.
fn gk21<T: QuadValue>(f: &mut impl FnMut(f64) -> T, a: f64, b: f64) -> (T, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc.zero_like();
    let mut g = fc.zero_like();
    k.add_scaled(WGK[10], &fc);
    let mut resabs = WGK[10] * fc.magnitude();
    let mut vals = Vec::with_capacity(20);
    for i in 0..10 {
        let x = h * XGK[i];
        let f1 = f(c - x);
        let f2 = f(c + x);
        k.add_scaled(WGK[i], &f1);
        k.add_scaled(WGK[i], &f2);
        resabs += WGK[i] * (f1.magnitude() + f2.magnitude());
        if i % 2 == 1 {
            g.add_scaled(WG[i / 2], &f1);
            g.add_scaled(WG[i / 2], &f2);
        }
        vals.push((i, f1, f2));
    }
    let mut mean = k.zero_like();
    mean.add_scaled(0.5, &k);
    let mut resasc = WGK[10] * fc.distance(&mean);
    for (i, f1, f2) in &vals {
        resasc += WGK[*i] * (f1.distance(&mean) + f2.distance(&mean));
    }
    let h = h.abs();
    let mut kv = k.zero_like();
    kv.add_scaled(h, &k);
    let mut gv = g.zero_like();
    gv.add_scaled(h, &g);
    let (resabs, resasc) = (resabs * h, resasc * h);
    let mut err = kv.distance(&gv);
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (kv, err, resabs)
}

/// Adaptive integration over a finite interval [a, b].
pub fn integrate<T: QuadValue>(
    mut f: impl FnMut(f64) -> T,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Validation("integration limits must be finite".into()));
    }
    let np = cfg.initial_panels.max(1);
    let mut panels: Vec<Panel<T>> = Vec::with_capacity(np * 4);
    for i in 0..np {
        let lo = a + (b - a) * i as f64 / np as f64;
        let hi = a + (b - a) * (i + 1) as f64 / np as f64;
        let (value, error, abs) = gk21(&mut f, lo, hi);
        panels.push(Panel { a: lo, b: hi, value, error, abs, depth: 0 });
    }
    let mut evals = 21 * np;
    loop {
        let mut total = panels[0].value.zero_like();
        let mut err = 0.0;
        let mut abs = 0.0;
        for p in &panels {
            total.add_scaled(1.0, &p.value);
            err += p.error;
            abs += p.abs;
        }
        if !err.is_finite() || !total.magnitude().is_finite() {
            return Err(Error::Integration("non-finite integrand".into()));
        }
        let target = cfg.abs_tol.max(cfg.rel_tol * total.magnitude());
        // the second test catches integrands that have underflowed to zero
        if err <= target || err < 1e-290 {
            return Ok(QuadResult { value: total, error: err, evaluations: evals });
        }
        // bisect the worst panel
        let worst = (0..panels.len())
            .max_by(|&i, &j| panels[i].error.total_cmp(&panels[j].error))
            .unwrap();
        let p = &panels[worst];
        if panels.len() >= cfg.max_intervals || p.depth >= cfg.max_depth {
            // Accept if the remaining error is at round-off level.
            if err <= 1e3 * f64::EPSILON * abs + cfg.abs_tol {
                return Ok(QuadResult { value: total, error: err, evaluations: evals });
            }
            return Err(Error::Integration(format!(
                "no convergence: error {err:.3e} vs target {target:.3e} after {evals} evaluations"
            )));
        }
        let (lo, hi, depth) = (p.a, p.b, p.depth);
        let mid = 0.5 * (lo + hi);
        let (v1, e1, a1) = gk21(&mut f, lo, mid);
        let (v2, e2, a2) = gk21(&mut f, mid, hi);
        evals += 42;
        panels[worst] = Panel { a: lo, b: mid, value: v1, error: e1, abs: a1, depth: depth + 1 };
        panels.push(Panel { a: mid, b: hi, value: v2, error: e2, abs: a2, depth: depth + 1 });
    }
}

/// Integral over [0, inf) using x = s t/(1-t); `scale` s sets where the
/// bulk of the integrand sits.
pub fn integrate_half_line<T: QuadValue>(
    mut f: impl FnMut(f64) -> T,
    scale: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<T>> {
    integrate(
        |t| {
            let x = scale * t / (1.0 - t);
            let j = scale / ((1.0 - t) * (1.0 - t));
            let v = f(x);
            let mut w = v.zero_like();
            w.add_scaled(j, &v);
            w
        },
        0.0,
        1.0,
        cfg,
    )
}

/// Integral over the real line using x = s t/(1-t^2).
pub fn integrate_real_line<T: QuadValue>(
    mut f: impl FnMut(f64) -> T,
    scale: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<T>> {
    integrate(
        |t| {
            let d = 1.0 - t * t;
            let x = scale * t / d;
            let j = scale * (1.0 + t * t) / (d * d);
            let v = f(x);
            let mut w = v.zero_like();
            w.add_scaled(j, &v);
            w
        },
        -1.0,
        1.0,
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x: f64| x.powi(5) - 2.0 * x, 0.0, 2.0, &QuadConfig::default()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_real_line() {
        let r = integrate_real_line(|x: f64| (-x * x).exp(), 1.0, &QuadConfig::default()).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gamma_half_line() {
        // int x^4 e^-x = 24
        let r = integrate_half_line(|x: f64| x.powi(4) * (-x).exp(), 1.0, &QuadConfig::default()).unwrap();
        assert!((r.value - 24.0).abs() < 1e-11);
    }

    #[test]
    fn complex_and_vector() {
        let r = integrate(|x: f64| C64::new(0.0, x).exp(), 0.0, std::f64::consts::PI, &QuadConfig::default())
            .unwrap();
        assert!((r.value - C64::new(0.0, 2.0)).norm() < 1e-13);
        let v = integrate(|x: f64| vec![x, x * x], 0.0, 1.0, &QuadConfig::default()).unwrap();
        assert!((v.value[0] - 0.5).abs() < 1e-15 && (v.value[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &QuadConfig::with_rel_tol(1e-9)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }
}
