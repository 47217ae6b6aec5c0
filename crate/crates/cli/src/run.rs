//! Requests, their execution, and the serialized output document.

use pfrmt::ensemble::EnsembleParams;
use pfrmt::microscopic::{convergence_study, micro_partition_det, micro_partition_pf, ConvergenceRow};
use pfrmt::oracles::{mc_partition, quad_kpoint, quad_partition_tol, McConfig, QUAD_MAX_N};
use pfrmt::partition::{
    kpoint_det, kpoint_pf, kpoint_pf_identity_residual, partition_det, partition_pf, required_degree,
    DetSplit, FlavorSet, PartitionResult,
};
use pfrmt::polynomials::{nu_recursion_check, Measure, OrthogonalSystem};
use pfrmt::wilson::{continuum_ratio, permutation_residual, z_nf_wilson, WilsonParams, Z2_REL_TOL};
use pfrmt::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const SCHEMA: &str = "pfaffian-rmt/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMethod {
    Det,
    Pfaffian,
    Mc,
    Quad,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KpointMethod {
    Det,
    Pfaffian,
    Quad,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Grid {
    /// "a:b:count", endpoints included.
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid '{s}' must look like start:end:count"));
        }
        let f = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad grid bound '{t}': {e}"));
        let count = parts[2].trim().parse::<usize>().map_err(|e| format!("bad grid count: {e}"))?;
        Ok(Grid { start: f(parts[0])?, end: f(parts[1])?, count })
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        if self.count == 0 || !self.start.is_finite() || !self.end.is_finite() {
            return Err(Error::Validation("grid needs finite bounds and count >= 1".into()));
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let h = (self.end - self.start) / (self.count - 1) as f64;
        Ok((0..self.count).map(|i| self.start + h * i as f64).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunRequest {
    Partition {
        ensemble: EnsembleParams,
        flavors: FlavorSet,
        method: PartitionMethod,
        split: Option<DetSplit>,
        mc: McConfig,
        tol_quad: f64,
    },
    Kpoint {
        ensemble: EnsembleParams,
        x: Vec<f64>,
        method: KpointMethod,
    },
    Micro {
        nu: u32,
        flavors: FlavorSet,
        grid: Option<Grid>,
    },
    Wilson {
        params: WilsonParams,
    },
    Verify {
        ensemble: EnsembleParams,
        flavors: FlavorSet,
        tol_dual: f64,
        tol_quad: f64,
        tol_identity: f64,
    },
    Converge {
        alpha: f64,
        nu: u32,
        x_grid: Grid,
        n_list: Vec<usize>,
    },
}

/// Computed result plus an optional flat table for CSV output.
pub struct Outcome {
    pub result: Value,
    pub table: Option<(Vec<String>, Vec<Vec<String>>)>,
    /// false when a verification check failed
    pub ok: bool,
}

fn system_for(ensemble: &EnsembleParams, degree: usize) -> Result<OrthogonalSystem> {
    match ensemble.gaussian_scale() {
        Some(_) => OrthogonalSystem::laguerre(ensemble, degree),
        None => OrthogonalSystem::build(Measure::Chiral(ensemble.clone()), degree),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

impl RunRequest {
    pub fn method_label(&self) -> String {
        match self {
            RunRequest::Partition { method, .. } => format!("{method:?}").to_lowercase(),
            RunRequest::Kpoint { method, .. } => format!("{method:?}").to_lowercase(),
            RunRequest::Micro { .. } => "bessel_kernels".into(),
            RunRequest::Wilson { .. } => "nested_gauss_kronrod".into(),
            RunRequest::Verify { .. } => "cross_method_suite".into(),
            RunRequest::Converge { .. } => "normalised_recurrence".into(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            RunRequest::Partition { method: PartitionMethod::Mc | PartitionMethod::All, mc, .. } => Some(mc.seed),
            _ => None,
        }
    }

    pub fn tolerances(&self) -> Value {
        match self {
            RunRequest::Partition { tol_quad, .. } => json!({ "quad_rel": tol_quad }),
            RunRequest::Verify { tol_dual, tol_quad, tol_identity, .. } => {
                json!({ "dual": tol_dual, "quad": tol_quad, "identity": tol_identity })
            }
            RunRequest::Wilson { .. } => json!({ "quad_rel": Z2_REL_TOL }),
            _ => json!({}),
        }
    }

    pub fn run(&self) -> Result<Outcome> {
        match self {
            RunRequest::Partition { ensemble, flavors, method, split, mc, tol_quad } => {
                run_partition(ensemble, flavors, *method, *split, mc, *tol_quad)
            }
            RunRequest::Kpoint { ensemble, x, method } => run_kpoint(ensemble, x, *method),
            RunRequest::Micro { nu, flavors, grid } => run_micro(*nu, flavors, grid.as_ref()),
            RunRequest::Wilson { params } => {
                let r = z_nf_wilson(params)?;
                let perm = permutation_residual(params, &r)?;
                let cont = continuum_ratio(params, &r)?;
                Ok(Outcome {
                    result: json!({
                        "value": r.value,
                        "entries": r.entries,
                        "checks": { "permutation_residual": perm, "continuum_ratio": cont },
                    }),
                    table: None,
                    ok: true,
                })
            }
            RunRequest::Verify { ensemble, flavors, tol_dual, tol_quad, tol_identity } => {
                run_verify(ensemble, flavors, *tol_dual, *tol_quad, *tol_identity)
            }
            RunRequest::Converge { alpha, nu, x_grid, n_list } => {
                let rows: Vec<ConvergenceRow> = convergence_study(*alpha, *nu, &x_grid.points()?, n_list)?;
                let table = rows
                    .iter()
                    .map(|r| vec![r.n.to_string(), num(r.x), num(r.deviation_p), num(r.deviation_phat)])
                    .collect();
                Ok(Outcome {
                    result: json!({ "rows": rows }),
                    table: Some((cols(&["n", "x", "deviation_p", "deviation_phat"]), table)),
                    ok: true,
                })
            }
        }
    }
}

fn cols(c: &[&str]) -> Vec<String> {
    c.iter().map(|s| s.to_string()).collect()
}

fn run_partition(
    ensemble: &EnsembleParams,
    flavors: &FlavorSet,
    method: PartitionMethod,
    split: Option<DetSplit>,
    mc: &McConfig,
    tol_quad: f64,
) -> Result<Outcome> {
    ensemble.validate()?;
    let want = |m: PartitionMethod| method == m || method == PartitionMethod::All;
    let mut results: Vec<PartitionResult> = vec![];
    let (k1, k2) = (flavors.k1(), flavors.k2());
    let exact_needed = want(PartitionMethod::Det) || want(PartitionMethod::Pfaffian);
    if exact_needed {
        let sys = system_for(ensemble, required_degree(ensemble.n, k1, k2))?;
        if want(PartitionMethod::Det) {
            let s = match split {
                Some(s) => s,
                None => *DetSplit::all_valid(ensemble.n, k1, k2)
                    .first()
                    .ok_or_else(|| Error::Unsupported("no admissible determinant split".into()))?,
            };
            results.push(partition_det(&sys, ensemble, flavors, s)?);
        }
        if want(PartitionMethod::Pfaffian) {
            results.push(partition_pf(&sys, ensemble, flavors)?);
        }
    }
    if want(PartitionMethod::Quad) && (method == PartitionMethod::Quad || ensemble.n <= QUAD_MAX_N) {
        results.push(quad_partition_tol(ensemble, flavors, tol_quad)?);
    }
    if want(PartitionMethod::Mc) && (method == PartitionMethod::Mc || ensemble.gaussian_scale().is_some()) {
        results.push(mc_partition(ensemble, flavors, mc)?);
    }
    let table = results
        .iter()
        .map(|r| {
            vec![
                to_value(&r.method).as_str().unwrap_or_default().to_string(),
                num(r.value.re),
                num(r.value.im),
                r.stderr.map(num).unwrap_or_default(),
            ]
        })
        .collect();
    Ok(Outcome {
        result: json!({ "results": results }),
        table: Some((cols(&["method", "value_re", "value_im", "stderr"]), table)),
        ok: true,
    })
}

fn run_kpoint(ensemble: &EnsembleParams, x: &[f64], method: KpointMethod) -> Result<Outcome> {
    ensemble.validate()?;
    let sys = system_for(ensemble, ensemble.n)?;
    let want = |m: KpointMethod| method == m || method == KpointMethod::All;
    let mut values = serde_json::Map::new();
    if want(KpointMethod::Det) {
        values.insert("det".into(), json!(kpoint_det(&sys, ensemble, x)?));
    }
    if want(KpointMethod::Pfaffian) {
        values.insert("pfaffian".into(), json!(kpoint_pf(&sys, ensemble, x)?));
    }
    if want(KpointMethod::Quad) && (method == KpointMethod::Quad || ensemble.n <= QUAD_MAX_N) {
        values.insert("quad".into(), json!(quad_kpoint(ensemble, x)?));
    }
    let residual = kpoint_pf_identity_residual(&sys, ensemble, x)?;
    let table = values.iter().map(|(k, v)| vec![k.clone(), num(v.as_f64().unwrap_or(f64::NAN))]).collect();
    Ok(Outcome {
        result: json!({ "values": values, "identity_residual": residual }),
        table: Some((cols(&["method", "value"]), table)),
        ok: true,
    })
}

fn micro_splits(k1: usize, k2: usize) -> Vec<DetSplit> {
    let mut out = vec![];
    for l11 in 0..=k1 {
        for l21 in 0..=k2 {
            if (k2 - l21) + l11 >= (k1 - l11) + l21 {
                out.push(DetSplit { l11, l21 });
            }
        }
    }
    out
}

fn micro_point(nu: u32, flavors: &FlavorSet) -> Result<(C64, C64, f64)> {
    let pf = micro_partition_pf(nu, flavors)?;
    let splits = micro_splits(flavors.k1(), flavors.k2());
    let mut worst = 0.0_f64;
    let mut first = None;
    for s in splits {
        let d = micro_partition_det(nu, flavors, s)?;
        worst = worst.max(rel(d, pf));
        first.get_or_insert(d);
    }
    Ok((pf, first.unwrap_or(pf), worst))
}

fn run_micro(nu: u32, flavors: &FlavorSet, grid: Option<&Grid>) -> Result<Outcome> {
    if flavors.k1() + flavors.k2() == 0 {
        return Err(Error::Validation("at least one flavour is required".into()));
    }
    let header = cols(&["x", "value_re", "value_im", "det_re", "det_im", "rel_diff"]);
    match grid {
        None => {
            let (pf, det, worst) = micro_point(nu, flavors)?;
            let row = vec![String::new(), num(pf.re), num(pf.im), num(det.re), num(det.im), num(worst)];
            Ok(Outcome {
                result: json!({ "pfaffian": to_value(&Cplx(pf)), "determinant": to_value(&Cplx(det)), "max_split_rel_diff": worst }),
                table: Some((header, vec![row])),
                ok: true,
            })
        }
        Some(g) => {
            // scan the real part of the first fermionic flavour (or boson if none)
            let mut rows = vec![];
            let mut out = vec![];
            for x in g.points()? {
                let mut f = flavors.clone();
                if let Some(k) = f.fermionic.first_mut() {
                    k.re = x;
                } else if let Some(k) = f.bosonic.first_mut() {
                    k.re = x;
                }
                let (pf, det, worst) = micro_point(nu, &f)?;
                rows.push(vec![num(x), num(pf.re), num(pf.im), num(det.re), num(det.im), num(worst)]);
                out.push(json!({ "x": x, "value": to_value(&Cplx(pf)), "determinant": to_value(&Cplx(det)), "rel_diff": worst }));
            }
            Ok(Outcome { result: json!({ "rows": out }), table: Some((header, rows)), ok: true })
        }
    }
}

#[derive(Serialize)]
struct Cplx(#[serde(with = "pfrmt::cplx")] C64);

#[derive(Serialize)]
struct Check {
    name: &'static str,
    residual: Option<f64>,
    tolerance: f64,
    pass: bool,
    note: String,
}

fn run_verify(
    ensemble: &EnsembleParams,
    flavors: &FlavorSet,
    tol_dual: f64,
    tol_quad: f64,
    tol_identity: f64,
) -> Result<Outcome> {
    ensemble.validate()?;
    flavors.validate_chiral()?;
    let n = ensemble.n;
    let (k1, k2) = (flavors.k1(), flavors.k2());
    let sys = system_for(ensemble, required_degree(n, k1, k2))?;
    let mut checks = vec![];

    let pf = partition_pf(&sys, ensemble, flavors)?.value;
    let splits = DetSplit::all_valid(n, k1, k2);
    let mut worst = 0.0_f64;
    for s in &splits {
        worst = worst.max(rel(partition_det(&sys, ensemble, flavors, *s)?.value, pf));
    }
    checks.push(Check {
        name: "det_vs_pfaffian",
        residual: Some(worst),
        tolerance: tol_dual,
        pass: worst < tol_dual,
        note: format!("{} splits", splits.len()),
    });

    if n <= QUAD_MAX_N {
        let q = quad_partition_tol(ensemble, flavors, pfrmt::oracles::QUAD_REL_TOL)?.value;
        let r = rel(pf, q);
        checks.push(Check { name: "pfaffian_vs_quadrature", residual: Some(r), tolerance: tol_quad, pass: r < tol_quad, note: String::new() });
    } else {
        checks.push(Check {
            name: "pfaffian_vs_quadrature",
            residual: None,
            tolerance: tol_quad,
            pass: true,
            note: format!("skipped: quadrature oracle limited to n <= {QUAD_MAX_N}"),
        });
    }

    let x: Vec<f64> = [0.45, 1.1, 1.85][..n.min(3)].iter().map(|v| v * ensemble.length_scale()).collect();
    let d = kpoint_det(&sys, ensemble, &x)?;
    let p = kpoint_pf(&sys, ensemble, &x)?;
    let r = (d - p).abs() / d.abs().max(f64::MIN_POSITIVE);
    checks.push(Check { name: "kpoint_det_vs_pfaffian", residual: Some(r), tolerance: tol_dual, pass: r < tol_dual, note: format!("k = {}", x.len()) });
    let r = kpoint_pf_identity_residual(&sys, ensemble, &x)?;
    checks.push(Check { name: "kpoint_pfaffian_square", residual: Some(r), tolerance: tol_identity, pass: r < tol_identity, note: String::new() });

    if ensemble.gaussian_scale().is_some() {
        let mut up = ensemble.clone();
        up.nu += 1;
        let a = system_for(ensemble, n + 1)?;
        let b = system_for(&up, n + 1)?;
        let grid: Vec<f64> = (0..=20).map(|i| 0.25 * i as f64).collect();
        let mut worst = 0.0_f64;
        for j in 0..n {
            worst = worst.max(nu_recursion_check(&a, &b, j, &grid)?);
        }
        checks.push(Check { name: "nu_recursion", residual: Some(worst), tolerance: tol_dual, pass: worst < tol_dual, note: String::new() });
    }

    let ok = checks.iter().all(|c| c.pass);
    Ok(Outcome { result: json!({ "checks": checks, "pass": ok }), table: None, ok })
}
