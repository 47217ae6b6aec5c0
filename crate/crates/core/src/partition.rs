//! Ratios Z_{k1/k2}/Z_{0/0} of characteristic-polynomial averages, by the
//! determinant formula, the Pfaffian formula and the generic real-line
//! Pfaffian, plus k-point correlation functions in both forms.
//!
//! Internally everything is phrased through F = E[prod (y - v)/prod (y - u)]
//! with y = lambda^2, v = kappa_fermion^2, u = kappa_boson^2; the chiral ratio
//! is prod_f (-i kappa_f)^nu / prod_b (-i kappa_b)^nu * F.

use crate::ensemble::{log_weight, EnsembleParams};
use crate::linalg::{berezinian_unrestricted, determinant, pfaffian, CMatrix, SEP_TOL};
use crate::polynomials::{Measure, OrthogonalSystem};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Antisymmetry defect above which an assembled Pfaffian matrix is rejected.
pub const ASSEMBLY_TOL: f64 = 1e-9;
/// Tolerance of the internal Pf^2 = 2^{2k} det^2 x det^2 Z check.
pub const KPOINT_PF_TOL: f64 = 1e-8;

pub const NORMALIZATION: &str = "ratio_to_Z00";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlavorSet {
    #[serde(with = "crate::cplx::vec", default)]
    pub bosonic: Vec<C64>,
    #[serde(with = "crate::cplx::vec", default)]
    pub fermionic: Vec<C64>,
}

impl FlavorSet {
    pub fn new(bosonic: Vec<C64>, fermionic: Vec<C64>) -> Self {
        Self { bosonic, fermionic }
    }

    pub fn k1(&self) -> usize {
        self.bosonic.len()
    }

    pub fn k2(&self) -> usize {
        self.fermionic.len()
    }

    fn all(&self) -> impl Iterator<Item = &C64> {
        self.bosonic.iter().chain(&self.fermionic)
    }

    /// Pairwise separation of f(kappa) over all flavours.
    fn check_separation(&self, f: impl Fn(C64) -> C64) -> Result<()> {
        let z: Vec<C64> = self.all().map(|k| f(*k)).collect();
        let scale = z.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let eps = SEP_TOL * scale.max(f64::MIN_POSITIVE);
        for a in 0..z.len() {
            for b in a + 1..z.len() {
                if (z[a] - z[b]).norm() <= eps {
                    return Err(Error::NearSingular(format!(
                        "flavours {a} and {b} coincide (separation below {eps:.2e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Rules for the chiral ensemble: finite values, bosonic kappa off the
    /// real axis, kappa^2 pairwise distinct.
    pub fn validate_chiral(&self) -> Result<()> {
        if self.all().any(|k| !(k.re.is_finite() && k.im.is_finite())) {
            return Err(Error::Validation("non-finite flavour".into()));
        }
        for k in &self.bosonic {
            if k.im.abs() <= 1e-12 * k.norm().max(1.0) {
                return Err(Error::Domain(format!("bosonic kappa {k} needs a nonzero imaginary part")));
            }
        }
        self.check_separation(|k| k * k)
    }

    /// Rules for real-line measures: kappa off the negative real axis,
    /// bosonic kappa off the real axis, kappa pairwise distinct.
    pub fn validate_generic(&self) -> Result<()> {
        if self.all().any(|k| !(k.re.is_finite() && k.im.is_finite())) {
            return Err(Error::Validation("non-finite flavour".into()));
        }
        for k in &self.bosonic {
            if k.im.abs() <= 1e-12 * k.norm().max(1.0) {
                return Err(Error::Domain(format!("bosonic kappa {k} needs a nonzero imaginary part")));
            }
        }
        for k in self.all() {
            if k.im == 0.0 && k.re < 0.0 {
                return Err(Error::Branch(format!("kappa {k} on the square-root branch cut")));
            }
        }
        self.check_separation(|k| k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetSplit {
    pub l11: usize,
    pub l21: usize,
}

impl DetSplit {
    /// (d1, d2) for ensemble size n.
    pub fn dims(&self, n: usize, k1: usize, k2: usize) -> Result<(usize, usize)> {
        if self.l11 > k1 || self.l21 > k2 {
            return Err(Error::Validation(format!("split {self:?} exceeds flavour counts ({k1},{k2})")));
        }
        let d1 = n as i64 + self.l21 as i64 - self.l11 as i64;
        let d2 = n as i64 + (k2 - self.l21) as i64 - (k1 - self.l11) as i64;
        if d1 < 0 || d2 < 0 || d1 > d2 {
            return Err(Error::Unsupported(format!("split {self:?} gives d1 = {d1}, d2 = {d2}")));
        }
        Ok((d1 as usize, d2 as usize))
    }

    pub fn all_valid(n: usize, k1: usize, k2: usize) -> Vec<DetSplit> {
        let mut out = vec![];
        for l11 in 0..=k1 {
            for l21 in 0..=k2 {
                let s = DetSplit { l11, l21 };
                if s.dims(n, k1, k2).is_ok() {
                    out.push(s);
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Det,
    Pfaffian,
    GenericPfaffian,
    Mc,
    Quad,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    #[serde(with = "crate::cplx")]
    pub value: C64,
    pub method: Method,
    pub normalization: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PartitionResult {
    pub fn exact(value: C64, method: Method) -> Self {
        Self { value, method, normalization: NORMALIZATION.into(), stderr: None, warnings: vec![] }
    }
}

fn parity(e: usize) -> f64 {
    if e % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// prod_{j<a} h_j / prod_{j<n} h_j
fn h_ratio(h: &[f64], a: usize, n: usize) -> f64 {
    if a >= n {
        h[n..a].iter().product()
    } else {
        1.0 / h[a..n].iter().product::<f64>()
    }
}

/// Polynomial values at fermionic arguments and Cauchy transforms at
/// bosonic ones, tabulated up to a common degree.
struct Blocks<'a> {
    h: &'a [f64],
    pv: Vec<Vec<C64>>,
    ph: Vec<Vec<C64>>,
}

impl<'a> Blocks<'a> {
    fn new(sys: &'a OrthogonalSystem, u: &[C64], v: &[C64], jmax: usize) -> Result<Self> {
        if jmax > sys.degree() {
            return Err(Error::Range(format!(
                "degree {jmax} needed, system built to {}",
                sys.degree()
            )));
        }
        let pv = v.iter().map(|x| sys.eval_all(jmax, *x)).collect::<Result<_>>()?;
        let ph = u.iter().map(|x| sys.cauchy_all(jmax, *x)).collect::<Result<_>>()?;
        Ok(Self { h: &sys.h, pv, ph })
    }

    fn s(&self, m: usize, a: usize, b: usize) -> C64 {
        (0..m).map(|j| self.pv[a][j] * self.pv[b][j] / self.h[j]).sum()
    }

    fn f01(&self, m: usize, a: usize) -> C64 {
        self.pv[a][m] * parity(m)
    }

    fn f10(&self, m: usize, b: usize) -> C64 {
        if m == 0 {
            return C64::new(1.0, 0.0);
        }
        self.ph[b][m - 1] * (parity(m + 1) / self.h[m - 1])
    }

    /// f11^{(m)}(u_b, v_a)
    fn f11(&self, m: usize, b: usize, a: usize) -> C64 {
        if m == 0 {
            return C64::new(1.0, 0.0);
        }
        (self.pv[a][m - 1] * self.ph[b][m] - self.ph[b][m - 1] * self.pv[a][m]) / self.h[m - 1]
    }

    fn ph_over_h(&self, j: i64, b: usize) -> C64 {
        if j < 0 {
            C64::new(-1.0, 0.0)
        } else {
            self.ph[b][j as usize] / self.h[j as usize]
        }
    }

    /// f20^{(m)}(u_1, u_2), m >= 1
    fn f20(&self, m: usize, b1: usize, b2: usize, u1: C64, u2: C64) -> C64 {
        let k = m as i64 - 2;
        (self.ph_over_h(k, b1) * self.ph[b2][m - 1] - self.ph[b1][m - 1] * self.ph_over_h(k, b2))
            / ((u1 - u2) * self.h[m - 1])
    }
}

fn chiral_prefactor(nu: usize, flavors: &FlavorSet) -> C64 {
    let i = C64::new(0.0, 1.0);
    let num: C64 = flavors.fermionic.iter().map(|k| (-i * k).powi(nu as i32)).product();
    let den: C64 = flavors.bosonic.iter().map(|k| (-i * k).powi(nu as i32)).product();
    num / den
}

fn check_system(sys: &OrthogonalSystem, params: &EnsembleParams) -> Result<()> {
    params.validate()?;
    match &sys.measure {
        Measure::Chiral(p)
            if p.nu == params.nu && p.alpha == params.alpha && p.potential == params.potential =>
        {
            Ok(())
        }
        _ => Err(Error::Validation("orthogonal system does not match the ensemble".into())),
    }
}

/// Degree an orthogonal system needs for any flavour pattern up to k flavours.
pub fn required_degree(n: usize, k1: usize, k2: usize) -> usize {
    n + k1.max(k2) + 1
}

/// One- and two-flavour ratios at size m (chiral conventions). Entries
/// involving a bosonic argument on the support are `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZBlocks {
    #[serde(with = "crate::cplx")]
    pub z01: C64,
    #[serde(with = "crate::cplx")]
    pub z02: C64,
    #[serde(with = "opt_cplx")]
    pub z10: Option<C64>,
    #[serde(with = "opt_cplx")]
    pub z20: Option<C64>,
    #[serde(with = "opt_cplx")]
    pub z11: Option<C64>,
}

mod opt_cplx {
    use crate::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct ReIm {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Option<C64>, s: S) -> Result<S::Ok, S::Error> {
        z.map(|z| ReIm { re: z.re, im: z.im }).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<C64>, D::Error> {
        Ok(Option::<ReIm>::deserialize(d)?.map(|r| C64::new(r.re, r.im)))
    }
}

/// z01(b), z02(a, b), z10(a), z20(a, b) and z11(a boson, b fermion) at
/// matrix size m.
pub fn z_building_blocks(sys: &OrthogonalSystem, m: usize, a: C64, b: C64) -> Result<ZBlocks> {
    let nu = match &sys.measure {
        Measure::Chiral(p) => p.nu,
        _ => return Err(Error::Unsupported("building blocks need a chiral system".into())),
    };
    if m + 1 > sys.degree() {
        return Err(Error::Range(format!("size {m} needs degree {}", m + 1)));
    }
    let (ua, ub) = (a * a, b * b);
    if (ua - ub).norm() <= SEP_TOL * ua.norm().max(ub.norm()) {
        return Err(Error::NearSingular("coincident arguments".into()));
    }
    let i = C64::new(0.0, 1.0);
    let ma = (-i * a).powi(nu as i32);
    let mb = (-i * b).powi(nu as i32);
    let fer = Blocks::new(sys, &[], &[ua, ub], m + 1)?;
    let z01 = mb * fer.f01(m, 1);
    let z02 = ma * mb * fer.s(m + 1, 0, 1) * sys.h[m];
    let off = |u: C64| !sys.measure.near_support(u, 1e-9);
    let (mut z10, mut z11, mut z20) = (None, None, None);
    if off(ua) {
        let blk = Blocks::new(sys, &[ua], &[ub], m + 1)?;
        z10 = Some(blk.f10(m, 0) / ma);
        z11 = Some(mb / ma * blk.f11(m, 0, 0));
        if off(ub) {
            let bb = Blocks::new(sys, &[ua, ub], &[], m + 1)?;
            let f = if m == 0 { C64::new(1.0, 0.0) } else { bb.f20(m, 0, 1, ua, ub) };
            z20 = Some(f / (ma * mb));
        }
    }
    Ok(ZBlocks { z01, z02, z10, z20, z11 })
}

/// F by the determinant formula for a given split.
fn det_f(sys: &OrthogonalSystem, n: usize, u: &[C64], v: &[C64], split: DetSplit) -> Result<C64> {
    let (k1, k2) = (u.len(), v.len());
    let (d1, d2) = split.dims(n, k1, k2)?;
    let (l11, l21) = (split.l11, split.l21);
    let jmax = d1.max(d2.saturating_sub(1));
    let blk = Blocks::new(sys, u, v, jmax)?;
    let h = &sys.h;
    let dim = (k2 - l21) + l11;
    let mut rows: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for a in 0..l21 {
        let mut r: Vec<C64> = (l21..k2).map(|b| -blk.s(d1, a, b)).collect();
        r.extend((0..l11).map(|b| blk.f11(d1, b, a) / (u[b] - v[a])));
        rows.push(r);
    }
    for a in l11..k1 {
        let mut r: Vec<C64> = (l21..k2).map(|b| blk.f11(d1, a, b) / (u[a] - v[b])).collect();
        r.extend((0..l11).map(|b| blk.f20(d1 + 1, a, b, u[a], u[b]) * h[d1]));
        rows.push(r);
    }
    for j in d1..d2 {
        let mut r: Vec<C64> = (l21..k2).map(|b| blk.pv[b][j] * parity(j)).collect();
        r.extend((0..l11).map(|b| -blk.ph[b][j] * parity(j)));
        rows.push(r);
    }
    let det = determinant(&CMatrix::from_rows(&rows)?)?;
    let e = l11 + l21 + k1 * (k1.saturating_sub(1)) / 2 + l11 * k2 + l21 * k1;
    let b1 = berezinian_unrestricted(&u[..l11], &v[..l21])?;
    let b2 = berezinian_unrestricted(&u[l11..], &v[l21..])?;
    Ok(det * (parity(e) * h_ratio(h, d1, n)) / (b1 * b2))
}

/// F by the Pfaffian formula with linear variables s (y = s^2 in the
/// chiral case, y = s^2 = kappa for the real-line variant).
fn pf_f(sys: &OrthogonalSystem, n: usize, s1: &[C64], s2: &[C64], u: &[C64], v: &[C64]) -> Result<C64> {
    let (k1, k2) = (u.len(), v.len());
    let d = 2 * n as i64 + k2 as i64 - k1 as i64;
    if d < 0 {
        return Err(Error::Unsupported(format!("d = 2n + k2 - k1 = {d} is negative")));
    }
    let d = d as usize;
    let even = (k1 + k2) % 2 == 0;
    let m = if even { d / 2 } else { (d + 1) / 2 };
    let blk = Blocks::new(sys, u, v, m)?;
    let h = &sys.h;
    let nk = k1 + k2;
    let mut k = CMatrix::zeros(nk + usize::from(!even), nk + usize::from(!even));
    for a in 0..k2 {
        for b in 0..k2 {
            if a != b {
                k[(a, b)] = (s2[b] - s2[a]) * blk.s(m, a, b);
            }
        }
        for b in 0..k1 {
            let e = blk.f11(m, b, a) / (s2[a] - s1[b]);
            k[(a, k2 + b)] = e;
            k[(k2 + b, a)] = -e;
        }
    }
    for a in 0..k1 {
        for b in 0..k1 {
            if a != b {
                k[(k2 + a, k2 + b)] = blk.f20(m + 1, a, b, u[a], u[b]) * (s1[b] - s1[a]) * h[m];
            }
        }
    }
    let base = k2 * (k2 + 1) / 2 + k1 * k1.saturating_sub(1) / 2;
    let sign = if even {
        parity(base)
    } else {
        for a in 0..k2 {
            let c = blk.f01(m - 1, a) / h[m - 1];
            k[(a, nk)] = c;
            k[(nk, a)] = -c;
        }
        for b in 0..k1 {
            let c = blk.f10(m, b);
            k[(k2 + b, nk)] = c;
            k[(nk, k2 + b)] = -c;
        }
        parity(n + m - 1 + k2 + (k2 + 1) * (k2 + 2) / 2 + k1 * k1.saturating_sub(1) / 2)
    };
    let defect = k.antisymmetry_defect();
    if defect > ASSEMBLY_TOL {
        return Err(Error::Assembly(format!("kernel matrix antisymmetry defect {defect:.2e}")));
    }
    let pf = pfaffian(&k)?;
    let bz = berezinian_unrestricted(s1, s2)?;
    Ok(pf * (sign * h_ratio(h, m, n)) / bz)
}

fn squares(z: &[C64]) -> Vec<C64> {
    z.iter().map(|x| x * x).collect()
}

pub fn partition_det(
    sys: &OrthogonalSystem,
    params: &EnsembleParams,
    flavors: &FlavorSet,
    split: DetSplit,
) -> Result<PartitionResult> {
    check_system(sys, params)?;
    flavors.validate_chiral()?;
    let u = squares(&flavors.bosonic);
    let v = squares(&flavors.fermionic);
    let f = det_f(sys, params.n, &u, &v, split)?;
    Ok(PartitionResult::exact(chiral_prefactor(params.nu, flavors) * f, Method::Det))
}

pub fn partition_pf(
    sys: &OrthogonalSystem,
    params: &EnsembleParams,
    flavors: &FlavorSet,
) -> Result<PartitionResult> {
    check_system(sys, params)?;
    flavors.validate_chiral()?;
    let u = squares(&flavors.bosonic);
    let v = squares(&flavors.fermionic);
    let f = pf_f(sys, params.n, &flavors.bosonic, &flavors.fermionic, &u, &v)?;
    Ok(PartitionResult::exact(chiral_prefactor(params.nu, flavors) * f, Method::Pfaffian))
}

/// E[prod_j (z - kappa_j2) / prod_j (z - kappa_j1)] over N eigenvalues of
/// a unitary-invariant ensemble on the real line, via the Pfaffian with
/// square-root variables.
pub fn partition_generic_pf(sys: &OrthogonalSystem, big_n: usize, flavors: &FlavorSet) -> Result<PartitionResult> {
    if !matches!(sys.measure, Measure::RealLine { .. }) {
        return Err(Error::Unsupported("generic Pfaffian needs a real-line measure".into()));
    }
    if big_n == 0 {
        return Err(Error::Validation("N must be at least 1".into()));
    }
    flavors.validate_generic()?;
    let s1: Vec<C64> = flavors.bosonic.iter().map(|k| k.sqrt()).collect();
    let s2: Vec<C64> = flavors.fermionic.iter().map(|k| k.sqrt()).collect();
    let f = pf_f(sys, big_n, &s1, &s2, &flavors.bosonic, &flavors.fermionic)?;
    Ok(PartitionResult::exact(f, Method::GenericPfaffian))
}

fn check_kpoint_args(sys: &OrthogonalSystem, params: &EnsembleParams, x: &[f64]) -> Result<()> {
    check_system(sys, params)?;
    if x.is_empty() || x.len() > params.n {
        return Err(Error::Validation(format!("k = {} must lie in 1..=n = {}", x.len(), params.n)));
    }
    if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain("k-point arguments must be positive".into()));
    }
    let scale = x.iter().fold(0.0_f64, |a, b| a.max(*b));
    for a in 0..x.len() {
        for b in a + 1..x.len() {
            if (x[a] - x[b]).abs() <= SEP_TOL * scale {
                return Err(Error::NearSingular(format!("arguments {a} and {b} coincide")));
            }
        }
    }
    if params.n > sys.degree() + 1 {
        return Err(Error::Range(format!("k-point function needs degree {}", params.n - 1)));
    }
    Ok(())
}

/// K_n(y1, y2) = sum_{j<n} p_j(y1) p_j(y2)/h_j on the real grid.
fn kernel_matrix(sys: &OrthogonalSystem, n: usize, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let p: Vec<Vec<f64>> = x
        .iter()
        .map(|xa| (0..n).map(|j| sys.eval_real(j, xa * xa)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok((0..x.len())
        .map(|a| (0..x.len()).map(|b| (0..n).map(|j| p[a][j] * p[b][j] / sys.h[j]).sum()).collect())
        .collect())
}

/// R_k(x) = det[sqrt(w(x_a) w(x_b)) K_n(x_a^2, x_b^2)], normalised so that
/// int R_1 = n.
pub fn kpoint_det(sys: &OrthogonalSystem, params: &EnsembleParams, x: &[f64]) -> Result<f64> {
    check_kpoint_args(sys, params, x)?;
    let kn = kernel_matrix(sys, params.n, x)?;
    let sw: Vec<f64> = x.iter().map(|l| (0.5 * log_weight(params, *l)).exp()).collect();
    let m = CMatrix::from_fn(x.len(), x.len(), |a, b| C64::new(sw[a] * sw[b] * kn[a][b], 0.0));
    Ok(determinant(&m)?.re)
}

/// R_k from the 2k x 2k Pfaffian of [[A, B], [-B, -A]] with
/// A_ab = (x_a - x_b) Z(x_a, x_b), B_ab = (x_a + x_b) Z(x_a, x_b) and
/// Z the two-flavour fermionic ratio at size n - 1.
pub fn kpoint_pf(sys: &OrthogonalSystem, params: &EnsembleParams, x: &[f64]) -> Result<f64> {
    check_kpoint_args(sys, params, x)?;
    let (n, nu, k) = (params.n, params.nu, x.len());
    let kn = kernel_matrix(sys, n, x)?;
    let hn = sys.h[n - 1];
    let sgn_nu = parity(nu);
    let z = |a: usize, b: usize| sgn_nu * (x[a] * x[b]).powi(nu as i32) * hn * kn[a][b];
    let m = CMatrix::from_fn(2 * k, 2 * k, |i, j| {
        let (a, b) = (i % k, j % k);
        let v = match (i < k, j < k) {
            (true, true) => (x[a] - x[b]) * z(a, b),
            (true, false) => (x[a] + x[b]) * z(a, b),
            (false, true) => -(x[a] + x[b]) * z(a, b),
            (false, false) => -(x[a] - x[b]) * z(a, b),
        };
        C64::new(v, 0.0)
    });
    let pf = pfaffian(&m)?.re;
    // Pf^2 = 2^{2k} det^2 x det^2 Z
    let zm = CMatrix::from_fn(k, k, |a, b| C64::new(z(a, b), 0.0));
    let detz = determinant(&zm)?.re;
    let detx: f64 = x.iter().product();
    let rhs = (2f64.powi(k as i32) * detx * detz).powi(2);
    let resid = (pf * pf - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
    if resid > KPOINT_PF_TOL {
        return Err(Error::Consistency(format!("Pf^2 identity violated by {resid:.2e}")));
    }
    let e = k * (k - 1) / 2 + nu * k;
    let damp: f64 = x.iter().map(|l| (-params.alpha * params.potential_at(l * l)).exp()).product();
    Ok(parity(e) * damp * pf / (2f64.powi(k as i32) * hn.powi(k as i32)))
}

/// Residual of Pf^2 = 2^{2k} det^2 x det^2 Z for the k-point Pfaffian.
pub fn kpoint_pf_identity_residual(sys: &OrthogonalSystem, params: &EnsembleParams, x: &[f64]) -> Result<f64> {
    check_kpoint_args(sys, params, x)?;
    let (n, nu, k) = (params.n, params.nu, x.len());
    let kn = kernel_matrix(sys, n, x)?;
    let hn = sys.h[n - 1];
    let z = |a: usize, b: usize| parity(nu) * (x[a] * x[b]).powi(nu as i32) * hn * kn[a][b];
    let m = CMatrix::from_fn(2 * k, 2 * k, |i, j| {
        let (a, b) = (i % k, j % k);
        let s = if i < k { 1.0 } else { -1.0 };
        let v = if (i < k) == (j < k) { x[a] - x[b] } else { x[a] + x[b] };
        C64::new(s * v * z(a, b), 0.0)
    });
    let pf = pfaffian(&m)?.re;
    let zm = CMatrix::from_fn(k, k, |a, b| C64::new(z(a, b), 0.0));
    let detz = determinant(&zm)?.re;
    let detx: f64 = x.iter().product();
    let rhs = (2f64.powi(k as i32) * detx * detz).powi(2);
    Ok((pf * pf - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn split_dims() {
        assert_eq!(DetSplit { l11: 0, l21: 0 }.dims(2, 0, 2).unwrap(), (2, 4));
        assert_eq!(DetSplit { l11: 0, l21: 1 }.dims(2, 0, 2).unwrap(), (3, 3));
        assert!(DetSplit { l11: 0, l21: 2 }.dims(2, 0, 2).is_err());
        assert_eq!(DetSplit::all_valid(1, 2, 0).len(), 1);
    }

    #[test]
    fn building_block_example() {
        let p = EnsembleParams::gaussian(1, 0, 1.0);
        let sys = OrthogonalSystem::laguerre(&p, 3).unwrap();
        let z = z_building_blocks(&sys, 1, c(0.3, 1.0), c(2.0, 0.0)).unwrap();
        assert!((z.z01 - c(-3.0, 0.0)).norm() < 1e-13);
        let z2 = z_building_blocks(&sys, 1, c(2.0, 0.0), c(0.7, 0.2)).unwrap();
        let z3 = z_building_blocks(&sys, 1, c(0.7, 0.2), c(2.0, 0.0)).unwrap();
        assert!((z2.z02 - z3.z02).norm() < 1e-13);
    }

    #[test]
    fn empty_flavours_give_one() {
        let p = EnsembleParams::gaussian(2, 1, 1.0);
        let sys = OrthogonalSystem::laguerre(&p, 4).unwrap();
        let f = FlavorSet::default();
        let d = partition_det(&sys, &p, &f, DetSplit { l11: 0, l21: 0 }).unwrap();
        let q = partition_pf(&sys, &p, &f).unwrap();
        assert!((d.value - 1.0).norm() < 1e-14 && (q.value - 1.0).norm() < 1e-14);
    }

    #[test]
    fn one_fermion_is_p_n() {
        // Z_{0/1}/Z_{0/0} = (-1)^n (-i kappa)^nu p_n(kappa^2)
        let p = EnsembleParams::gaussian(2, 1, 1.0);
        let sys = OrthogonalSystem::laguerre(&p, 5).unwrap();
        let kap = c(0.8, 0.3);
        let want = c(0.0, -1.0) * kap * sys.eval(2, kap * kap).unwrap();
        let f = FlavorSet::new(vec![], vec![kap]);
        for s in DetSplit::all_valid(2, 0, 1) {
            let d = partition_det(&sys, &p, &f, s).unwrap().value;
            assert!((d - want).norm() < 1e-12 * want.norm());
        }
        let q = partition_pf(&sys, &p, &f).unwrap().value;
        assert!((q - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn rejects_bad_flavours() {
        let p = EnsembleParams::gaussian(2, 0, 1.0);
        let sys = OrthogonalSystem::laguerre(&p, 5).unwrap();
        let real_boson = FlavorSet::new(vec![c(1.0, 0.0)], vec![]);
        assert!(matches!(partition_pf(&sys, &p, &real_boson), Err(Error::Domain(_))));
        let clash = FlavorSet::new(vec![], vec![c(1.0, 0.5), c(-1.0, -0.5)]);
        assert!(matches!(partition_pf(&sys, &p, &clash), Err(Error::NearSingular(_))));
        let too_many = FlavorSet::new(vec![c(0., 1.), c(0., 2.), c(0., 3.), c(0., 4.), c(0., 5.)], vec![]);
        assert!(matches!(partition_pf(&sys, &p, &too_many), Err(Error::Unsupported(_))));
    }

    #[test]
    fn kpoint_one_point_positive() {
        let p = EnsembleParams::gaussian(3, 1, 1.0);
        let sys = OrthogonalSystem::laguerre(&p, 4).unwrap();
        for x in [0.2, 0.9, 1.7, 3.1] {
            let r = kpoint_det(&sys, &p, &[x]).unwrap();
            assert!(r > 0.0);
            let q = kpoint_pf(&sys, &p, &[x]).unwrap();
            assert!((q - r).abs() < 1e-12 * r);
        }
    }
}
