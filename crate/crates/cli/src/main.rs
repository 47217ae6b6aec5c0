mod run;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pfrmt::ensemble::EnsembleParams;
use pfrmt::oracles::{McConfig, QUAD_REL_TOL};
use pfrmt::partition::{DetSplit, FlavorSet};
use pfrmt::wilson::WilsonParams;
use pfrmt::{Error, C64};
use run::{Grid, KpointMethod, Outcome, PartitionMethod, RunRequest, SCHEMA};
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(name = "pfrmt", version, about = "Ratios of characteristic polynomials in chiral random matrix ensembles")]
#[command(subcommand_required = false, arg_required_else_help = true, args_conflicts_with_subcommands = true)]
struct Cli {
    /// worker threads (default: all cores)
    #[arg(long, global = true, env = "PFRMT_THREADS")]
    threads: Option<usize>,
    /// write output here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// re-run the request stored in a previous JSON output
    #[arg(long)]
    request: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Partition function with k1 bosonic and k2 fermionic flavours
    Partition(PartitionArgs),
    /// k-point correlation function
    Kpoint(KpointArgs),
    /// Microscopic (large-n) limit
    Micro(MicroArgs),
    /// Wilson-Dirac partition function with fermionic flavours
    Wilson(WilsonArgs),
    /// Cross-check all methods and report residuals
    Verify(VerifyArgs),
    /// Deviation of scaled polynomials from their Bessel limits
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    nu: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// coefficients c_1, c_2, ... of V(y) = c_1 y + c_2 y^2 + ...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    potential: Option<Vec<f64>>,
}

impl EnsembleArgs {
    fn params(&self) -> EnsembleParams {
        let mut p = EnsembleParams::gaussian(self.n, self.nu, self.alpha);
        if let Some(v) = &self.potential {
            p.potential = v.clone();
        }
        p
    }
}

#[derive(Args)]
struct FlavorArgs {
    /// flavour counts k1,k2 (bosonic, fermionic); default 0,2
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    flavors: Option<Vec<usize>>,
    /// bosonic masses, e.g. "0.4+0.8i,1.2-0.5i"
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    bosonic: Option<Vec<String>>,
    /// fermionic masses
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    fermionic: Option<Vec<String>>,
}

fn default_boson(k: usize) -> C64 {
    C64::new(0.4 + 0.3 * k as f64, 0.8)
}

fn default_fermion(k: usize) -> C64 {
    C64::new(0.7 + 0.45 * k as f64, 0.0)
}

fn parse_list(v: &[String]) -> Result<Vec<C64>, Error> {
    v.iter()
        .map(|s| pfrmt::cplx::parse(s).ok_or_else(|| Error::Validation(format!("cannot parse complex number '{s}'"))))
        .collect()
}

impl FlavorArgs {
    fn set(&self) -> Result<FlavorSet, Error> {
        let counts = match self.flavors.as_deref() {
            None if self.bosonic.is_none() && self.fermionic.is_none() => Some((0, 2)),
            None => None,
            Some([k1, k2]) => Some((*k1, *k2)),
            Some(v) => return Err(Error::Validation(format!("--flavors takes two counts k1,k2, got {v:?}"))),
        };
        let fill = |given: &Option<Vec<String>>, count: Option<usize>, dflt: fn(usize) -> C64, what: &str| {
            match (given, count) {
                (Some(v), Some(k)) if v.len() != k => {
                    Err(Error::Validation(format!("{} {what} masses given but --flavors asks for {k}", v.len())))
                }
                (Some(v), _) => parse_list(v),
                (None, Some(k)) => Ok((0..k).map(dflt).collect()),
                (None, None) => Ok(vec![]),
            }
        };
        let bos = fill(&self.bosonic, counts.map(|c| c.0), default_boson, "bosonic")?;
        let fer = fill(&self.fermionic, counts.map(|c| c.1), default_fermion, "fermionic")?;
        Ok(FlavorSet::new(bos, fer))
    }
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[command(flatten)]
    flavors: FlavorArgs,
    #[arg(long, value_enum, default_value = "pfaffian")]
    method: PartitionMethod,
    /// determinant split l11,l21 (default: first admissible)
    #[arg(long, value_delimiter = ',')]
    split: Option<Vec<usize>>,
    #[arg(long, default_value_t = McConfig::default().samples)]
    samples: usize,
    #[arg(long, default_value_t = McConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = McConfig::default().chunk)]
    chunk: usize,
    #[arg(long, default_value_t = QUAD_REL_TOL)]
    tol_quad: f64,
}

#[derive(Args)]
struct KpointArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// eigenvalue arguments x_1,...,x_k
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    x: Vec<f64>,
    #[arg(long, value_enum, default_value = "all")]
    method: KpointMethod,
}

#[derive(Args)]
struct MicroArgs {
    #[arg(long, default_value_t = 0)]
    nu: u32,
    #[command(flatten)]
    flavors: FlavorArgs,
    /// scan the first fermionic mass over start:end:count (CSV output)
    #[arg(long, value_parser = Grid::parse)]
    grid: Option<Grid>,
}

#[derive(Args)]
struct WilsonArgs {
    #[arg(long, default_value_t = 0)]
    nu: u32,
    #[arg(long)]
    a_hat: f64,
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    masses: Vec<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[command(flatten)]
    flavors: FlavorArgs,
    #[arg(long, default_value_t = 1e-8)]
    tol_dual: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol_quad: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol_identity: f64,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    nu: u32,
    #[arg(long, value_parser = Grid::parse, default_value = "0.5:10:20")]
    x_grid: Grid,
    #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
    n_list: Vec<usize>,
}

fn build_request(cmd: Command) -> Result<RunRequest, Error> {
    Ok(match cmd {
        Command::Partition(a) => {
            let split = match a.split.as_deref() {
                None => None,
                Some([l11, l21]) => Some(DetSplit { l11: *l11, l21: *l21 }),
                Some(v) => return Err(Error::Validation(format!("--split takes l11,l21, got {v:?}"))),
            };
            RunRequest::Partition {
                ensemble: a.ensemble.params(),
                flavors: a.flavors.set()?,
                method: a.method,
                split,
                mc: McConfig { samples: a.samples, seed: a.seed, chunk: a.chunk },
                tol_quad: a.tol_quad,
            }
        }
        Command::Kpoint(a) => RunRequest::Kpoint { ensemble: a.ensemble.params(), x: a.x, method: a.method },
        Command::Micro(a) => RunRequest::Micro { nu: a.nu, flavors: a.flavors.set()?, grid: a.grid },
        Command::Wilson(a) => RunRequest::Wilson { params: WilsonParams { nu: a.nu, a_hat: a.a_hat, masses: a.masses } },
        Command::Verify(a) => RunRequest::Verify {
            ensemble: a.ensemble.params(),
            flavors: a.flavors.set()?,
            tol_dual: a.tol_dual,
            tol_quad: a.tol_quad,
            tol_identity: a.tol_identity,
        },
        Command::Converge(a) => RunRequest::Converge { alpha: a.alpha, nu: a.nu, x_grid: a.x_grid, n_list: a.n_list },
    })
}

/// Accepts either a bare request or a full output document.
fn load_request(path: &PathBuf) -> Result<RunRequest, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    let req = v.get("request").cloned().unwrap_or(v);
    serde_json::from_value(req).map_err(|e| Error::Validation(format!("invalid request: {e}")))
}

fn command_name(req: &RunRequest) -> String {
    serde_json::to_value(req).ok().and_then(|v| v["command"].as_str().map(String::from)).unwrap_or_default()
}

fn document(req: &RunRequest, out: &Outcome, threads: usize) -> Value {
    json!({
        "schema": SCHEMA,
        "command": command_name(req),
        "request": req,
        "result": out.result,
        "provenance": {
            "library": "pfrmt",
            "version": pfrmt::VERSION,
            "method": req.method_label(),
            "seed": req.seed(),
            "tolerances": req.tolerances(),
            "threads": threads,
        },
    })
}

fn render(req: &RunRequest, out: &Outcome, format: Format, threads: usize) -> Result<String, Error> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&document(req, out, threads)).expect("json") + "\n"),
        Format::Csv => {
            let (header, rows) = out
                .table
                .as_ref()
                .ok_or_else(|| Error::Validation(format!("csv output is not available for '{}'", command_name(req))))?;
            let mut w = csv::Writer::from_writer(vec![]);
            let io = |e: csv::Error| Error::Validation(format!("csv: {e}"));
            w.write_record(header).map_err(io)?;
            for r in rows {
                w.write_record(r).map_err(io)?;
            }
            Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Validation(e.to_string()))?).expect("utf8"))
        }
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let e = json!({ "schema": SCHEMA, "error": { "kind": kind, "message": message } });
    eprintln!("{}", serde_json::to_string_pretty(&e).expect("json"));
    ExitCode::from(code)
}

fn fail_with(e: &Error) -> ExitCode {
    let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_VALIDATION };
    let kind = format!("{e:?}");
    let kind = kind.split('(').next().unwrap_or("Error").to_lowercase();
    fail(&kind, &e.to_string(), code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            return fail("usage", msg.trim(), EXIT_VALIDATION);
        }
    };

    if let Some(t) = cli.threads {
        if t == 0 {
            return fail("validation", "--threads must be at least 1", EXIT_VALIDATION);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            return fail("internal", &e.to_string(), EXIT_NUMERICAL);
        }
    }
    let threads = rayon::current_num_threads();

    let req = match (cli.request.as_ref(), cli.command) {
        (Some(path), _) => load_request(path),
        (None, Some(cmd)) => build_request(cmd),
        (None, None) => Err(Error::Validation("no command given".into())),
    };
    let req = match req {
        Ok(r) => r,
        Err(e) => return fail_with(&e),
    };

    // tables for scans, JSON otherwise
    let default_format = match &req {
        RunRequest::Converge { .. } | RunRequest::Micro { grid: Some(_), .. } => Format::Csv,
        _ => Format::Json,
    };
    let format = cli.format.unwrap_or(default_format);

    let out = match req.run() {
        Ok(o) => o,
        Err(e) => return fail_with(&e),
    };
    let text = match render(&req, &out, format, threads) {
        Ok(t) => t,
        Err(e) => return fail_with(&e),
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        return fail("io", &msg, EXIT_VALIDATION);
    }
    if out.ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("verification failed");
        ExitCode::from(EXIT_NUMERICAL)
    }
}
