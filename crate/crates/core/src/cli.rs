//! Command-line front end.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::checks::{run_all, selected, CheckRecord, Context, Status, Suite};
use crate::cloaking::{
    approx_cloaking_certificate, build_h_and_sumrule, check_lossless_monotonicity, check_lossy_bound, sweep,
    uniform_grid, with_point, CloakProblem, Series, SweepResult, LOSSLESS_IMAG_TOL, NORM_CAVEAT,
};
use crate::config::{BenchmarkSpec, RunConfig};
use crate::report::{dump_matrices, overall, write_sweep_csv, Provenance, Report, Timing};
use crate::{Result, C64};

const AFTER_HELP: &str = concat!(
    "Outputs go to --out (default: output.dir from the config, else the current directory).\n",
    "report.json: one record per executed check with status pass | fail | skipped-premise.\n",
    "sweep.csv columns: omega, then per potential <label>: re_F[<label>], im_F[<label>], re_H[<label>], \
im_H[<label>] (H = omega^2 F), envelope[<label>] (approximate-cloaking envelope, empty without omega0).\n",
    "Exit codes: 0 no check failed, 1 a check failed or numerical failure, 2 config error."
);

#[derive(Debug, Parser)]
#[command(name = "cloakbound", version, about = "DtN maps, effective operators and passive-cloaking bounds")]
#[command(after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep, identity suite and every cloaking check.
    Run(CommonArgs),
    /// Operator-identity checks only.
    VerifyIdentities(CommonArgs),
    /// Sum-rule ledger for an analytic benchmark or a PDE sweep.
    Sumrule(CommonArgs),
    /// Frequency sweep only, written to sweep.csv.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads for frequency evaluation.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Run(a) | Command::VerifyIdentities(a) | Command::Sumrule(a) | Command::Sweep(a) => a,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Run(_) => "run",
            Command::VerifyIdentities(_) => "verify-identities",
            Command::Sumrule(_) => "sumrule",
            Command::Sweep(_) => "sweep",
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = execute(&cli.command);
    match &result {
        Ok(report) => {
            for r in &report.checks {
                println!("{:<24} {:<16} {}", r.name, r.status.as_str(), r.summary);
                if let Some(v) = &r.violation {
                    println!("{:<24} violation: {v}", "");
                }
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    exit_code(&result)
}

/// Runs one command end to end and writes its files.
pub fn execute(command: &Command) -> Result<Report> {
    let start = Instant::now();
    let args = command.args();
    let config = RunConfig::from_path(&args.config)?;
    let seed = args.seed.unwrap_or(config.seed);
    let jobs = args.jobs.unwrap_or_else(default_jobs).max(1);
    let out = args
        .out
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let mesh = config.mesh()?;
    let mut timing = Timing::default();
    let mut records: Vec<CheckRecord> = vec![];
    let mut problem: Option<CloakProblem> = None;
    let mut swept: Option<SweepResult> = None;

    let needs_problem = match command {
        Command::Run(_) | Command::Sweep(_) => true,
        Command::Sumrule(_) => config.benchmark.is_none(),
        Command::VerifyIdentities(_) => false,
    };
    if needs_problem {
        let p = config.build_problem(seed)?;
        let s = sweep(&p, &frequency_grid(&config), jobs)?;
        timing.checks.insert("sweep".into(), start.elapsed().as_secs_f64());
        problem = Some(p);
        swept = Some(s);
    }
    let ctx = Context { config: &config, seed, jobs, mesh: &mesh, problem: problem.as_ref(), sweep: swept.as_ref() };

    let mut push = |results: Vec<(CheckRecord, f64)>, timing: &mut Timing| {
        for (r, t) in results {
            timing.checks.insert(r.name.clone(), t);
            records.push(r);
        }
    };
    match command {
        Command::Run(_) => {
            push(run_all(&selected(&config, Suite::Identities), &ctx), &mut timing);
            push(run_all(&selected(&config, Suite::Cloaking), &ctx), &mut timing);
        }
        Command::VerifyIdentities(_) => push(run_all(&selected(&config, Suite::Identities), &ctx), &mut timing),
        Command::Sumrule(_) => match &config.benchmark {
            Some(b) => records.extend(benchmark_records(&config, b)?),
            None => {
                let only: Vec<_> = selected(&config, Suite::Cloaking).into_iter().filter(|c| c.name() == "sumrule").collect();
                push(run_all(&only, &ctx), &mut timing);
            }
        },
        Command::Sweep(_) => {}
    }

    if let (Some(p), Some(s)) = (&problem, &swept) {
        let envelope = envelope_parameters(&config, p);
        write_sweep_csv(s, envelope, &ensure_dir(&out)?.join("sweep.csv"))?;
        if config.output.dump_matrices {
            let w = config.frequency.omega0.unwrap_or(s.omegas[0]);
            dump_matrices(p, w, &out)?;
        }
    }

    let report = Report {
        command: command.name().into(),
        status: overall(&records),
        provenance: provenance(&config, seed, problem.as_ref()),
        norm_caveat: NORM_CAVEAT,
        checks: records,
        config: config.clone(),
    };
    timing.total_seconds = start.elapsed().as_secs_f64();
    report.write(&timing, &ensure_dir(&out)?)?;
    Ok(report)
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}

/// Uniform grid over the interval, with `omega0` inserted when it lies inside.
pub fn frequency_grid(config: &RunConfig) -> Vec<f64> {
    let (a, b) = config.interval();
    let grid = uniform_grid(a, b, config.frequency.points);
    match config.frequency.omega0 {
        Some(w0) if w0 >= a && w0 <= b => with_point(&grid, w0),
        _ => grid,
    }
}

fn envelope_parameters(config: &RunConfig, problem: &CloakProblem) -> Option<(f64, f64)> {
    let w0 = config.frequency.omega0?;
    if problem.model.dispersive_obstacle() {
        return None;
    }
    let eta = match problem.eta {
        Some(e) => e,
        None => approx_cloaking_certificate(problem, w0).ok()?.eta_star,
    };
    Some((w0, eta))
}

fn provenance(config: &RunConfig, seed: u64, problem: Option<&CloakProblem>) -> Provenance {
    let mut tolerances = std::collections::BTreeMap::new();
    tolerances.insert("inequality", crate::cloaking::INEQ_TOL);
    tolerances.insert("herglotz", crate::cloaking::HERGLOTZ_TOL);
    tolerances.insert("lossless_imag", LOSSLESS_IMAG_TOL);
    tolerances.insert("tensor", crate::cloaking::TENSOR_TOL);
    tolerances.insert("central_identity", crate::checks::CENTRAL_IDENTITY_TOL);
    tolerances.insert("hodge", crate::checks::HODGE_TOL);
    tolerances.insert("dual_route", crate::checks::DUAL_ROUTE_TOL);
    tolerances.insert("algebra", crate::checks::ALGEBRA_TOL);
    tolerances.insert("psd", crate::composites::PSD_TOL);
    let (n_tri, n_b) = (4 * config.mesh.nx * config.mesh.ny, 2 * (config.mesh.nx + config.mesh.ny));
    Provenance {
        mesh: [config.mesh.nx, config.mesh.ny],
        triangles: n_tri,
        boundary_nodes: n_b,
        seed,
        route: problem.map(|p| p.route_name().to_string()).unwrap_or_else(|| config.route.clone()),
        tolerances,
        potentials: problem.map(|p| p.probes.iter().map(|q| q.label.clone()).collect()).unwrap_or_default(),
        dropped_potentials: problem.map(|p| p.dropped.clone()).unwrap_or_default(),
    }
}

/// Closed-form `F` for a benchmark on the configured grid, `G_vac = 1`.
pub fn benchmark_series(config: &RunConfig, spec: &BenchmarkSpec) -> Series {
    let omegas = frequency_grid(config);
    let (label, f_inf, values): (&str, f64, Vec<C64>) = match *spec {
        BenchmarkSpec::AffineH { f_inf, x0, h0 } => (
            "affine-h",
            f_inf,
            omegas.iter().map(|w| C64::new((f_inf * (w * w - x0) + h0) / (w * w), 0.0)).collect(),
        ),
        BenchmarkSpec::Drude { f_inf, omega0, f0 } => {
            let s = Series::drude(&omegas, f_inf, omega0, f0, 1.0);
            ("drude", f_inf, s.values)
        }
        BenchmarkSpec::Lorentz { f_inf, strength, resonance, gamma } => (
            "lorentz",
            f_inf,
            omegas
                .iter()
                .map(|&w| f_inf + strength / C64::new(resonance * resonance - w * w, -gamma * w))
                .collect(),
        ),
    };
    Series { label: label.into(), omegas, values, f_inf, g_vac: 1.0 }
}

fn benchmark_records(config: &RunConfig, spec: &BenchmarkSpec) -> Result<Vec<CheckRecord>> {
    let series = benchmark_series(config, spec);
    let sum = build_h_and_sumrule(&series, config.tolerances.delta)?;
    let lossy = check_lossy_bound(&series, None, None)?;
    let mut out = vec![
        CheckRecord {
            name: "sumrule".into(),
            status: sum.status,
            summary: format!(
                "length / (4 delta / F_inf) = {:.9}, integral {:.9} vs 1 / F_inf = {:.9}",
                sum.ratio, sum.integral, sum.integral_bound
            ),
            violation: (sum.status == Status::Fail).then(|| format!("benchmark {}", series.label)),
            details: json!(sum),
        },
        CheckRecord {
            name: "lossy-bound".into(),
            status: lossy.status,
            summary: format!("(1/4)(w+^2 - w-^2) F_inf = {:.9} vs max |w^2 F| = {:.9}", lossy.lhs, lossy.max_w2f),
            violation: (lossy.status == Status::Fail).then(|| format!("benchmark {}", series.label)),
            details: json!(lossy),
        },
    ];
    if series.max_imag() <= LOSSLESS_IMAG_TOL {
        let m = check_lossless_monotonicity(&series);
        out.push(CheckRecord {
            name: "lossless-monotonicity".into(),
            status: m.status,
            summary: format!("pairwise margins in [{:.3e}, {:.3e}]", m.pairwise_min, m.pairwise_max_abs),
            violation: (m.status == Status::Fail).then(|| format!("pair {:?}", m.worst_pair)),
            details: json!(m),
        });
    }
    Ok(out)
}

pub fn exit_code(result: &Result<Report>) -> i32 {
    match result {
        Ok(r) if r.failed() => 1,
        Ok(_) => 0,
        Err(e) if e.is_config() => 2,
        Err(_) => 1,
    }
}
