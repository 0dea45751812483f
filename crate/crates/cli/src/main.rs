//! `superres` command-line tool.

mod overlay;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use superres::bounds::envelope_rows;
use superres::certify::{run_certification, CertifyConfig, Verdict};
use superres::experiments::{run_phase, AmplitudeLaw, SpikeCount, TrialSpec};
use superres::io::{fmt17, read_json, to_json, LowPassFile, MultiLowPassFile, FORMAT_VERSION};
use superres::kernel::KernelSpec;
use superres::model::{LowPassData, MultiLowPassData, MultiSpikeTrain, ProblemConfig, C64};
use superres::oracle::{grid_oracle_demix, grid_oracle_gtv, grid_oracle_tv, OracleOptions, OracleSolution};
use superres::recovery::{
    check_demix_certificate, check_gtv_certificate, demix, match_supports, recover_gtv, recover_tv,
    CertificateCheck, CertificateTolerances, LocatorOptions, RecoveryOptions,
};
use superres::sdp::{DualSolution, ProblemKind, SolverOptions};

const USAGE_EXIT: u8 = 64;
const SUBCOMMANDS: [&str; 6] = ["certify", "recover", "demix", "joint", "phase", "kernel-dump"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] superres::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => USAGE_EXIT,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "superres",
    version,
    about = "Super-resolution from low-pass data: certification, recovery and phase sweeps",
    args_override_self = true,
    after_help = "Any subcommand accepts --config FILE with key=value lines; command-line flags take precedence."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the computer-assisted certificate bounds (exit 0 PASS, 2 FAIL, 3 INCONCLUSIVE).
    Certify(CertifyArgs),
    /// Recover a spike train from low-pass data by TV minimization.
    Recover(RecoverArgs),
    /// Separate line spectra from sparse corruptions.
    Demix(DemixArgs),
    /// Joint recovery of several signals sharing one support (group TV).
    Joint(RecoverArgs),
    /// Randomized phase-transition sweep; writes a CSV table.
    Phase(PhaseArgs),
    /// Dump the kernel, its sandwich bounds and its tail bound as CSV.
    KernelDump(KernelDumpArgs),
}

/// Comma-separated floats. A single value so a repeated flag replaces it.
#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
struct FloatList(Vec<f64>);

impl std::str::FromStr for FloatList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()
            .map(FloatList)
    }
}

#[derive(Args, Serialize)]
struct CertifyArgs {
    /// Kernel width fractions, comma separated.
    #[arg(long, default_value = "0.247,0.339,0.414")]
    gamma: FloatList,
    /// Minimum separation in units of 1/f_c.
    #[arg(long, default_value_t = 1.26)]
    tau_min: f64,
    /// Grid step in scaled units.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Smallest cut-off frequency covered by the bounds.
    #[arg(long, default_value_t = 1e3)]
    f_min: f64,
    /// End of the near regime (scaled).
    #[arg(long, default_value_t = 0.288316)]
    near_radius: f64,
    /// End of the region where the curvature bound must be negative.
    #[arg(long, default_value_t = 0.110497)]
    concavity_radius: f64,
    /// Keep every n-th grid value in the reported curve.
    #[arg(long, default_value_t = 1000)]
    curve_stride: usize,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Serialize, Clone, Copy)]
struct SolverArgs {
    #[arg(long, default_value_t = SolverOptions::default().rho)]
    rho: f64,
    #[arg(long, default_value_t = SolverOptions::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = SolverOptions::default().tol_abs)]
    tol_abs: f64,
    #[arg(long, default_value_t = SolverOptions::default().tol_rel)]
    tol_rel: f64,
    #[arg(long, default_value_t = SolverOptions::default().over_relaxation)]
    over_relaxation: f64,
    /// Keep rho fixed.
    #[arg(long)]
    fixed_rho: bool,
}

#[derive(Args, Serialize, Clone, Copy)]
struct LocatorArgs {
    /// Locator grid size (default max(16 n, 1024)).
    #[arg(long)]
    grid: Option<usize>,
    /// Locator threshold on |P| (or on sum |P_k|^2 for joint recovery).
    #[arg(long, default_value_t = LocatorOptions::default().threshold)]
    threshold: f64,
    /// Merge radius in units of lambda_c.
    #[arg(long, default_value_t = LocatorOptions::default().merge_radius)]
    merge_radius: f64,
    /// Skip the Gauss-Newton position polish.
    #[arg(long)]
    no_polish: bool,
}

impl SolverArgs {
    fn options(&self, trace: bool) -> SolverOptions {
        SolverOptions {
            rho: self.rho,
            max_iters: self.max_iters,
            tol_abs: self.tol_abs,
            tol_rel: self.tol_rel,
            over_relaxation: self.over_relaxation,
            adaptive_rho: !self.fixed_rho,
            trace,
        }
    }
}

fn recovery_options(solver: &SolverArgs, locator: &LocatorArgs, trace: bool) -> RecoveryOptions {
    let loc = LocatorOptions {
        grid_size: locator.grid,
        threshold: locator.threshold,
        merge_radius: locator.merge_radius,
        polish: !locator.no_polish,
        ..LocatorOptions::default()
    };
    RecoveryOptions::new(solver.options(trace), loc)
}

#[derive(Args, Serialize)]
struct RecoverArgs {
    /// Input data file (JSON).
    input: PathBuf,
    /// Expected cut-off frequency; must match the input file.
    #[arg(long)]
    fc: Option<usize>,
    /// Output file (JSON); stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Write the per-iteration solver trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Cross-check against the grid-discretized oracle.
    #[arg(long)]
    oracle: bool,
    /// Oracle grid size (default 16 n).
    #[arg(long)]
    oracle_grid: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    locator: LocatorArgs,
}

#[derive(Args, Serialize)]
struct DemixArgs {
    #[command(flatten)]
    common: RecoverArgs,
    /// Weight of the corruption term.
    #[arg(long)]
    eta: f64,
    /// Spike indices need |c_l| >= (1 - spike_delta) eta.
    #[arg(long, default_value_t = 1e-3)]
    spike_delta: f64,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Tv,
    Demix,
    Gtv,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum LawArg {
    UnitPhase,
    RealSign,
}

#[derive(Args, Serialize)]
struct PhaseArgs {
    #[arg(long, value_enum, default_value = "tv")]
    kind: KindArg,
    #[arg(long, default_value_t = 30)]
    fc: usize,
    /// Explicit separations in lambda_c units (overrides the range flags).
    #[arg(long)]
    deltas: Option<FloatList>,
    #[arg(long, default_value_t = 0.5)]
    delta_min: f64,
    #[arg(long, default_value_t = 1.5)]
    delta_max: f64,
    #[arg(long, default_value_t = 0.05)]
    delta_step: f64,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed number of spikes per trial.
    #[arg(long)]
    spikes: Option<usize>,
    /// Otherwise floor(fc * fill / delta) spikes.
    #[arg(long, default_value_t = 0.5)]
    fill: f64,
    /// Sparse corruptions per trial (demix).
    #[arg(long, default_value_t = 0)]
    corruptions: usize,
    /// Signals per trial (gtv).
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Corruption weight (demix); default 1/sqrt(2 fc + 1).
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_enum, default_value = "unit-phase")]
    amplitudes: LawArg,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output CSV; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write the full table with per-trial outcomes as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    locator: LocatorArgs,
}

#[derive(Args, Serialize)]
struct KernelDumpArgs {
    #[arg(long, default_value = "0.247,0.339,0.414")]
    gamma: FloatList,
    #[arg(long, default_value_t = 1e3)]
    f_min: f64,
    /// Largest scaled position.
    #[arg(long, default_value_t = 20.0)]
    tau_max: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Write through a temporary file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, contents: &str) -> CliResult<()> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn guard_input(input: &Path, outputs: &[Option<&PathBuf>]) -> CliResult<()> {
    let canon = |p: &Path| std::fs::canonicalize(p).ok();
    let src = canon(input);
    for o in outputs.iter().flatten() {
        if src.is_some() && canon(o) == src {
            return Err(CliError::Usage(format!(
                "refusing to overwrite the input file {}",
                input.display()
            )));
        }
    }
    Ok(())
}

fn trace_csv(sol: &DualSolution) -> String {
    let mut s = String::from("iter,primal_res,dual_res,objective\n");
    for r in &sol.trace {
        let _ = writeln!(s, "{},{},{},{}", r.iter, fmt17(r.primal_res), fmt17(r.dual_res), fmt17(r.objective));
    }
    s
}

fn check_fc(cfg: ProblemConfig, fc: Option<usize>) -> CliResult<()> {
    match fc {
        Some(f) if f != cfg.f_cut() => Err(CliError::Usage(format!(
            "--fc {f} does not match the input file (f_cut = {})",
            cfg.f_cut()
        ))),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct OracleReport {
    objective: f64,
    iterations: usize,
    converged: bool,
    grid_size: usize,
    support: Vec<f64>,
    spike_support: Vec<usize>,
    support_agrees: bool,
    objective_relative_difference: f64,
}

fn oracle_report(o: OracleSolution, support: &[f64], spikes: &[usize], objective: f64, cfg: ProblemConfig) -> OracleReport {
    let same_t = o.support.len() == support.len()
        && match_supports(&o.support, support, 1e-3 * cfg.lambda_c()).is_some();
    OracleReport {
        objective_relative_difference: (o.objective - objective).abs() / o.objective.abs().max(f64::MIN_POSITIVE),
        support_agrees: same_t && o.spike_support == spikes,
        objective: o.objective,
        iterations: o.iterations,
        converged: o.converged,
        grid_size: o.grid_size,
        support: o.support,
        spike_support: o.spike_support,
    }
}

fn oracle_options(grid: Option<usize>) -> OracleOptions {
    OracleOptions {
        grid_size: grid,
        ..OracleOptions::default()
    }
}

#[derive(Serialize)]
struct Output<'a, C: Serialize, E: Serialize> {
    command: &'static str,
    config: &'a C,
    #[serde(flatten)]
    estimate: E,
    objective: f64,
    data_residual: f64,
    solver: &'a superres::sdp::Residuals,
    certificate: Option<CertificateCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
}

fn finish<C: Serialize, E: Serialize>(
    args: &RecoverArgs,
    out: &Output<'_, C, E>,
    dual: &DualSolution,
) -> CliResult<u8> {
    if let Some(t) = &args.trace {
        write_atomic(t, &trace_csv(dual))?;
    }
    emit(args.out.as_deref(), &(to_json(out)? + "\n"))?;
    Ok(0)
}

fn cmd_recover(args: &RecoverArgs) -> CliResult<u8> {
    guard_input(&args.input, &[args.out.as_ref(), args.trace.as_ref()])?;
    let y: LowPassData = read_json::<LowPassFile>(&args.input)?.try_into()?;
    let cfg = y.config();
    check_fc(cfg, args.fc)?;
    let opts = recovery_options(&args.solver, &args.locator, args.trace.is_some());
    let r = recover_tv(&y, &opts)?;
    let multi = MultiSpikeTrain::from_single(&r.estimate);
    let certificate = check_gtv_certificate(&multi, &r.dual.c, cfg, &CertificateTolerances::default()).ok();
    let oracle = if args.oracle {
        let o = grid_oracle_tv(&y, &oracle_options(args.oracle_grid))?;
        Some(oracle_report(o, r.estimate.support(), &[], r.dual.objective, cfg))
    } else {
        None
    };
    #[derive(Serialize)]
    struct Est<'a> {
        estimate: &'a superres::model::SpikeTrain,
        support: &'a superres::recovery::SupportEstimate,
    }
    let out = Output {
        command: "recover",
        config: args,
        estimate: Est {
            estimate: &r.estimate,
            support: &r.support,
        },
        objective: r.dual.objective,
        data_residual: r.residual,
        solver: &r.dual.residuals,
        certificate,
        oracle,
    };
    finish(args, &out, &r.dual)
}

fn cmd_demix(args: &DemixArgs) -> CliResult<u8> {
    let common = &args.common;
    guard_input(&common.input, &[common.out.as_ref(), common.trace.as_ref()])?;
    let y: LowPassData = read_json::<LowPassFile>(&common.input)?.try_into()?;
    let cfg = y.config();
    check_fc(cfg, common.fc)?;
    let mut opts = recovery_options(&common.solver, &common.locator, common.trace.is_some());
    opts.spike_delta = args.spike_delta;
    let r = demix(&y, args.eta, &opts)?;
    let certificate = check_demix_certificate(
        &r.spectra,
        &r.spikes,
        &r.dual.column(0),
        args.eta,
        cfg,
        &CertificateTolerances::default(),
    )
    .ok();
    let oracle = if common.oracle {
        let o = grid_oracle_demix(&y, args.eta, &oracle_options(common.oracle_grid))?;
        Some(oracle_report(o, r.spectra.support(), &r.spike_support, r.dual.objective, cfg))
    } else {
        None
    };
    #[derive(Serialize)]
    struct Est<'a> {
        spectra: &'a superres::model::SpikeTrain,
        spikes_re: Vec<f64>,
        spikes_im: Vec<f64>,
        spike_support: &'a [usize],
        support: &'a superres::recovery::SupportEstimate,
    }
    let out = Output {
        command: "demix",
        config: args,
        estimate: Est {
            spectra: &r.spectra,
            spikes_re: r.spikes.iter().map(|c: &C64| c.re).collect(),
            spikes_im: r.spikes.iter().map(|c: &C64| c.im).collect(),
            spike_support: &r.spike_support,
            support: &r.support,
        },
        objective: r.dual.objective,
        data_residual: r.residual,
        solver: &r.dual.residuals,
        certificate,
        oracle,
    };
    finish(common, &out, &r.dual)
}

fn cmd_joint(args: &RecoverArgs) -> CliResult<u8> {
    guard_input(&args.input, &[args.out.as_ref(), args.trace.as_ref()])?;
    let y: MultiLowPassData = read_json::<MultiLowPassFile>(&args.input)?.try_into()?;
    let cfg = y.config();
    check_fc(cfg, args.fc)?;
    let opts = recovery_options(&args.solver, &args.locator, args.trace.is_some());
    let r = recover_gtv(&y, &opts)?;
    let certificate = check_gtv_certificate(&r.estimate, &r.dual.c, cfg, &CertificateTolerances::default()).ok();
    let oracle = if args.oracle {
        let o = grid_oracle_gtv(&y, &oracle_options(args.oracle_grid))?;
        Some(oracle_report(o, r.estimate.support(), &[], r.dual.objective, cfg))
    } else {
        None
    };
    #[derive(Serialize)]
    struct Est<'a> {
        estimate: &'a MultiSpikeTrain,
        support: &'a superres::recovery::SupportEstimate,
    }
    let out = Output {
        command: "joint",
        config: args,
        estimate: Est {
            estimate: &r.estimate,
            support: &r.support,
        },
        objective: r.dual.objective,
        data_residual: r.residual,
        solver: &r.dual.residuals,
        certificate,
        oracle,
    };
    finish(args, &out, &r.dual)
}

fn cmd_certify(args: &CertifyArgs) -> CliResult<u8> {
    let cfg = CertifyConfig {
        gamma: args.gamma.0.clone(),
        f_min: args.f_min,
        tau_min: args.tau_min,
        eps: args.eps,
        near_radius: args.near_radius,
        concavity_radius: args.concavity_radius,
        curve_stride: args.curve_stride.max(1),
        ..CertifyConfig::default()
    };
    let report = run_certification(cfg)?;
    if let Some(c) = &report.constants {
        println!(
            "constants: 2H(0) = [{}, {}, {}], schur = {}, alpha_U = {}, beta_U = {}",
            fmt17(c.two_h[0]),
            fmt17(c.two_h[1]),
            fmt17(c.two_h[2]),
            fmt17(c.schur_bound),
            fmt17(c.alpha_upper),
            fmt17(c.beta_upper)
        );
    }
    if let Some(n) = &report.near {
        println!(
            "near: {:?}, max F_inf - 1 = {}, curvature negative up to {}",
            n.verdict,
            fmt17(n.max_f_inf_minus_one),
            fmt17(n.f2_negative_end)
        );
    }
    if let Some(m) = &report.mid {
        println!("mid: {:?}, max = {}", m.verdict, fmt17(m.max));
    }
    if let Some(f) = &report.far {
        println!("far: {:?}, max = {}", f.verdict, fmt17(f.max));
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    println!("verdict: {:?}", report.verdict);
    if let Some(p) = &args.report {
        write_atomic(p, &(serde_json::to_string_pretty(&report).map_err(superres::Error::from)? + "\n"))?;
    }
    Ok(match report.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => 2,
        Verdict::Inconclusive => 3,
    })
}

fn delta_grid(args: &PhaseArgs) -> CliResult<Vec<f64>> {
    if let Some(d) = &args.deltas {
        return Ok(d.0.clone());
    }
    if !(args.delta_step > 0.0) || !(args.delta_max >= args.delta_min) {
        return Err(CliError::Usage("need delta-step > 0 and delta-max >= delta-min".into()));
    }
    let count = ((args.delta_max - args.delta_min) / args.delta_step + 1e-9).floor() as usize;
    // Round to the step's decimal grid so labels print cleanly.
    Ok((0..=count)
        .map(|i| ((args.delta_min + i as f64 * args.delta_step) * 1e9).round() / 1e9)
        .collect())
}

fn cmd_phase(args: &PhaseArgs) -> CliResult<u8> {
    let kind = match args.kind {
        KindArg::Tv => ProblemKind::Tv,
        KindArg::Demix => ProblemKind::Demix,
        KindArg::Gtv => ProblemKind::Gtv,
    };
    let mut spec = TrialSpec::new(kind, args.fc, delta_grid(args)?);
    spec.spikes = match args.spikes {
        Some(k) => SpikeCount::Fixed(k),
        None => SpikeCount::Fill(args.fill),
    };
    spec.corruptions = args.corruptions;
    spec.signals = args.m;
    spec.eta = args.eta.unwrap_or(1.0 / ((2 * args.fc + 1) as f64).sqrt());
    spec.trials = args.trials;
    spec.seed = args.seed;
    spec.amplitudes = match args.amplitudes {
        LawArg::UnitPhase => AmplitudeLaw::UnitPhase,
        LawArg::RealSign => AmplitudeLaw::RealSign,
    };
    spec.options = recovery_options(&args.solver, &args.locator, false);
    let table = match args.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {j} workers: {e}")))?
            .install(|| run_phase(&spec))?,
        None => run_phase(&spec)?,
    };
    let config = serde_json::to_string(args).map_err(superres::Error::from)?;
    emit(args.out.as_deref(), &format!("# config={config}\n{}", table.to_csv()))?;
    if let Some(p) = &args.json {
        write_atomic(p, &(to_json(&table)? + "\n"))?;
    }
    Ok(0)
}

fn cmd_kernel_dump(args: &KernelDumpArgs) -> CliResult<u8> {
    let spec = KernelSpec::new(args.gamma.0.clone(), args.f_min, args.f_min)?;
    let rows = envelope_rows(&spec, args.tau_max, args.step)?;
    let gamma: Vec<String> = args.gamma.0.iter().map(|g| g.to_string()).collect();
    let mut s = format!(
        "# format_version={FORMAT_VERSION} gamma={} f_min={} scaled by f_c^-order\norder,tau,lower,upper,value,tail\n",
        gamma.join(";"),
        args.f_min
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.order,
            fmt17(r.tau),
            fmt17(r.lower),
            fmt17(r.upper),
            fmt17(r.value),
            fmt17(r.tail)
        );
    }
    emit(args.out.as_deref(), &s)?;
    Ok(0)
}

fn run(cli: Cli) -> CliResult<u8> {
    match &cli.command {
        Command::Certify(a) => cmd_certify(a),
        Command::Recover(a) => cmd_recover(a),
        Command::Demix(a) => cmd_demix(a),
        Command::Joint(a) => cmd_joint(a),
        Command::Phase(a) => cmd_phase(a),
        Command::KernelDump(a) => cmd_kernel_dump(a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let argv = match overlay::expand(argv, &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => USAGE_EXIT,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
