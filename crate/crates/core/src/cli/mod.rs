//! Command-line harness: entropy and mutual-information runs, rank and depth
//! sweeps, and the invariant suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage / input / I/O
//! error, 3 numeric abort during training.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pqc::MAX_QUBITS;
use crate::qmatrix::io::matrix_from_str;
use crate::states::{random_density_with, von_neumann_entropy, DensityMatrix, SpectralState, SpectrumKind};
use crate::trainer::{
    budget, estimate_qmi, history_csv, train_entropy, OptimizerKind, QmiOutcome, TrainConfig, TrainOutcome,
};
use crate::verify::{run_suite, VerifyOptions};
use config::{resolve, Resolved};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub const SEED_ENV: &str = "QMINE_SEED";

pub const SUMMARY_HEADER: &str = "sweep_value,final_error,iterations_to_1pct,n_params,copies_estimate";

#[derive(Parser, Debug)]
#[command(name = "qmine", version, about = "Variational entropy and mutual-information estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the von Neumann entropy of one state.
    EstimateEntropy(EntropyArgs),
    /// Estimate S(A⊗B) − S(AB) for one or more random bipartite states.
    EstimateQmi(QmiArgs),
    /// Repeat the entropy run over several variational ranks.
    RankSweep(RankSweepArgs),
    /// Repeat the entropy run over several circuit depths.
    DepthSweep(DepthSweepArgs),
    /// Run the randomised invariant suite.
    Verify(VerifyArgs),
}

/// Flags shared by every training command. Values are kept as text and
/// parsed after merging with the config file.
#[derive(Args, Debug)]
struct Common {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// `key = value` file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Layers of the circuit.
    #[arg(long)]
    depth: Option<String>,
    /// Accuracy target in nats, used for the automatic `c`.
    #[arg(long)]
    epsilon: Option<String>,
    /// Trace scale of T: `auto` or a number.
    #[arg(long)]
    c: Option<String>,
    /// Cap applied to an automatic `c`, or `none`.
    #[arg(long)]
    c_max: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    /// adaptive-moment or plain-gradient.
    #[arg(long)]
    optimizer: Option<String>,
    /// Seeds both the random state and the initial angles (default: $QMINE_SEED or 0).
    #[arg(long)]
    seed: Option<String>,
    /// Measurement shots per expectation; 0 for exact expectations.
    #[arg(long)]
    shots: Option<String>,
    /// Write every k-th iteration to the history.
    #[arg(long)]
    report_every: Option<String>,
    /// Spectrum of generated states: dirichlet or uniform.
    #[arg(long)]
    spectrum: Option<String>,
    /// Load the state from a file instead of generating one.
    #[arg(long)]
    state: Option<String>,
    /// Units of result.txt / qmi.txt: e (nats) or 2 (bits).
    #[arg(long)]
    log_base: Option<String>,
    /// Stop after this many iterations without improvement, or `none`.
    #[arg(long)]
    plateau: Option<String>,
    /// Concurrent runs: a number or `auto`.
    #[arg(long)]
    jobs: Option<String>,
}

impl Common {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("depth", self.depth.clone()),
            ("epsilon", self.epsilon.clone()),
            ("c", self.c.clone()),
            ("c-max", self.c_max.clone()),
            ("lr", self.lr.clone()),
            ("iters", self.iters.clone()),
            ("optimizer", self.optimizer.clone()),
            ("seed", self.seed.clone()),
            ("shots", self.shots.clone()),
            ("report-every", self.report_every.clone()),
            ("spectrum", self.spectrum.clone()),
            ("state", self.state.clone()),
            ("log-base", self.log_base.clone()),
            ("plateau", self.plateau.clone()),
            ("jobs", self.jobs.clone()),
        ]
    }
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    qubits: Option<String>,
    /// Rank of the generated state.
    #[arg(long)]
    rank: Option<String>,
    /// Rank of T: `auto` (the state's rank) or a number.
    #[arg(long)]
    rank_t: Option<String>,
}

#[derive(Args, Debug)]
struct QmiArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    qubits_a: Option<String>,
    #[arg(long)]
    qubits_b: Option<String>,
    /// Comma-separated ranks of the joint state, one table row each.
    #[arg(long)]
    rank_ab: Option<String>,
}

#[derive(Args, Debug)]
struct RankSweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    qubits: Option<String>,
    #[arg(long)]
    rank: Option<String>,
    /// Comma-separated ranks of T.
    #[arg(long)]
    rank_t_list: Option<String>,
}

#[derive(Args, Debug)]
struct DepthSweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    qubits: Option<String>,
    #[arg(long)]
    rank: Option<String>,
    #[arg(long)]
    rank_t: Option<String>,
    /// Comma-separated circuit depths.
    #[arg(long)]
    depth_list: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Base seed (default: $QMINE_SEED or 0).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    max_qubits: usize,
    /// Corrupt one tolerance so the suite must fail.
    #[arg(long)]
    force_failure: bool,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::EstimateEntropy(a) => cmd_estimate_entropy(&a),
        Command::EstimateQmi(a) => cmd_estimate_qmi(&a),
        Command::RankSweep(a) => cmd_rank_sweep(&a),
        Command::DepthSweep(a) => cmd_depth_sweep(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NumericAbort(_) => EXIT_NUMERIC,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn default_seed() -> Result<String> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(|s| s.to_string())
            .map_err(|_| Error::Parse(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok("0".into()),
    }
}

fn common_defaults(depth: Option<&str>, iters: &str) -> Result<Vec<(&'static str, String)>> {
    let mut v = Vec::new();
    if let Some(depth) = depth {
        v.push(("depth", depth.to_string()));
    }
    v.extend([
        ("epsilon", "0.01".to_string()),
        ("c", "auto".into()),
        ("c-max", "80".into()),
        ("lr", "0.05".into()),
        ("iters", iters.into()),
        ("optimizer", OptimizerKind::default().name().into()),
        ("seed", default_seed()?),
        ("shots", "0".into()),
        ("report-every", "1".into()),
        ("spectrum", "dirichlet".into()),
        ("state", "none".into()),
        ("log-base", "e".into()),
        ("plateau", "none".into()),
        ("jobs", "auto".into()),
    ]);
    Ok(v)
}

fn entropy_defaults() -> Result<Vec<(&'static str, String)>> {
    let mut v = vec![
        ("qubits", "4".to_string()),
        ("rank", "1".into()),
        ("rank-t", "auto".into()),
    ];
    v.extend(common_defaults(Some("10"), "2000")?);
    Ok(v)
}

fn qmi_defaults() -> Result<Vec<(&'static str, String)>> {
    let mut v = vec![
        ("qubits-a", "2".to_string()),
        ("qubits-b", "2".into()),
        ("rank-ab", "1,2,4,8,16".into()),
    ];
    v.extend(common_defaults(Some("20"), "4000")?);
    Ok(v)
}

fn rank_sweep_defaults() -> Result<Vec<(&'static str, String)>> {
    let mut v = vec![
        ("qubits", "5".to_string()),
        ("rank", "8".into()),
        ("rank-t-list", "4,8,16".into()),
    ];
    v.extend(common_defaults(Some("30"), "2000")?);
    Ok(v)
}

fn depth_sweep_defaults() -> Result<Vec<(&'static str, String)>> {
    let mut v = vec![
        ("qubits", "5".to_string()),
        ("rank", "8".into()),
        ("rank-t", "auto".into()),
        ("depth-list", "10,20,30".into()),
    ];
    v.extend(common_defaults(None, "2000")?);
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LogBase {
    E,
    Two,
}

impl LogBase {
    fn convert(self, nats: f64) -> f64 {
        match self {
            LogBase::E => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
        }
    }

    fn unit(self) -> &'static str {
        match self {
            LogBase::E => "nats",
            LogBase::Two => "bits",
        }
    }
}

/// Settings common to all training commands, parsed from a [`Resolved`].
#[derive(Clone, Debug)]
struct Shared {
    depth: Option<usize>,
    epsilon: f64,
    c: Option<f64>,
    c_max: Option<f64>,
    lr: f64,
    iters: usize,
    optimizer: OptimizerKind,
    seed: u64,
    shots: u64,
    report_every: usize,
    spectrum: SpectrumKind,
    state: Option<PathBuf>,
    log_base: LogBase,
    plateau: Option<usize>,
    jobs: Option<usize>,
}

impl Shared {
    fn from_resolved(r: &Resolved) -> Result<Self> {
        let depth = if r.has("depth") { Some(r.parse("depth")?) } else { None };
        let optimizer = OptimizerKind::parse(r.get("optimizer")?)
            .ok_or_else(|| Error::Parse(format!("unknown optimizer {:?}", r.get("optimizer").unwrap_or(""))))?;
        let spectrum = match r.get("spectrum")? {
            "dirichlet" => SpectrumKind::Dirichlet,
            "uniform" => SpectrumKind::Uniform,
            other => return Err(Error::Parse(format!("unknown spectrum {other:?}"))),
        };
        let log_base = match r.get("log-base")? {
            "e" => LogBase::E,
            "2" => LogBase::Two,
            other => return Err(Error::Parse(format!("log-base must be e or 2, got {other:?}"))),
        };
        let state = match r.get("state")? {
            "none" => None,
            p => Some(PathBuf::from(p)),
        };
        let shared = Self {
            depth,
            epsilon: r.parse("epsilon")?,
            c: r.parse_or("c", "auto")?,
            c_max: r.parse_or("c-max", "none")?,
            lr: r.parse("lr")?,
            iters: r.parse("iters")?,
            optimizer,
            seed: r.parse("seed")?,
            shots: r.parse("shots")?,
            report_every: r.parse("report-every")?,
            spectrum,
            state,
            log_base,
            plateau: r.parse_or("plateau", "none")?,
            jobs: r.parse_or("jobs", "auto")?,
        };
        if shared.jobs == Some(0) {
            return Err(Error::Parameter("jobs must be at least 1".into()));
        }
        if shared.depth == Some(0) {
            return Err(Error::Parameter("depth must be at least 1".into()));
        }
        shared.train_config(1).validate()?;
        Ok(shared)
    }

    fn train_config(&self, rank_t: usize) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            iterations: self.iters,
            optimizer: self.optimizer,
            seed: self.seed,
            shots: self.shots,
            report_every: self.report_every,
            epsilon: self.epsilon,
            rank_t,
            c_override: self.c,
            c_max: self.c_max,
            plateau_patience: self.plateau,
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.unwrap_or(0))
            .build()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))
    }
}

/// A state to train on, with its exact entropy.
struct Problem {
    rho: DensityMatrix,
    spectral: Option<SpectralState>,
    qubits: usize,
    rank: usize,
    exact: f64,
}

fn qubits_of(dim: usize) -> Result<usize> {
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::Size(format!("state dimension {dim} is not a power of two ≥ 2")));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(Error::Size(format!("{n} qubits exceeds the limit of {MAX_QUBITS}")));
    }
    Ok(n)
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Parameter(format!("qubits must lie in 1..={MAX_QUBITS}, got {n}")));
    }
    Ok(())
}

/// Reads either a spectral state (`d r seed` header) or a bare density matrix.
fn load_state(path: &Path) -> Result<(DensityMatrix, Option<SpectralState>)> {
    let text = std::fs::read_to_string(path)?;
    let header_fields = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .map_or(0, |l| l.split_whitespace().count());
    if header_fields == 3 {
        let s = SpectralState::from_text(&text)?;
        Ok((s.assemble()?, Some(s)))
    } else {
        Ok((DensityMatrix::from_matrix(matrix_from_str(&text)?)?, None))
    }
}

fn generated_or_loaded(
    shared: &Shared,
    generate: impl FnOnce() -> Result<SpectralState>,
) -> Result<Problem> {
    let (rho, spectral) = match &shared.state {
        Some(path) => load_state(path)?,
        None => {
            let s = generate()?;
            (s.assemble()?, Some(s))
        }
    };
    let qubits = qubits_of(rho.dim())?;
    let exact = match &spectral {
        Some(s) => s.entropy(),
        None => von_neumann_entropy(&rho),
    };
    Ok(Problem {
        rank: rho.numerical_rank(),
        rho,
        spectral,
        qubits,
        exact,
    })
}

fn entropy_problem(r: &Resolved, shared: &Shared) -> Result<Problem> {
    generated_or_loaded(shared, || {
        let n: usize = r.parse("qubits")?;
        check_qubits(n)?;
        random_density_with(1 << n, r.parse("rank")?, shared.seed, shared.spectrum)
    })
}

fn train_point(problem: &Problem, shared: &Shared, depth: usize, rank_t: usize) -> Result<TrainOutcome> {
    let cfg = shared.train_config(rank_t);
    let qdvr = cfg.qdvr(problem.rank, problem.qubits)?;
    train_entropy(&problem.rho, depth, &cfg, &qdvr, Some(problem.exact))
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map_or_else(|| "none".into(), |k| k.to_string())
}

fn result_text(outcome: &TrainOutcome, log_base: LogBase) -> Result<String> {
    let exact = outcome.exact_entropy.unwrap_or(f64::NAN);
    let abs = (outcome.estimate - exact).abs();
    let rel = if exact != 0.0 {
        (abs / exact.abs()).to_string()
    } else {
        "none".to_string()
    };
    let b = budget(&outcome.qdvr, outcome.n_params, outcome.iterations_run)?;
    let mut s = String::new();
    let _ = writeln!(s, "unit = {}", log_base.unit());
    let _ = writeln!(s, "estimate = {}", log_base.convert(outcome.estimate));
    let _ = writeln!(s, "exact = {}", log_base.convert(exact));
    let _ = writeln!(s, "abs_error = {}", log_base.convert(abs));
    let _ = writeln!(s, "relative_error = {rel}");
    let _ = writeln!(s, "iterations = {}", outcome.iterations_run);
    let _ = writeln!(s, "iterations_to_1pct = {}", fmt_opt_usize(outcome.iterations_to_1pct));
    let _ = writeln!(s, "c = {}", outcome.qdvr.c);
    let _ = writeln!(s, "epsilon = {}", outcome.qdvr.epsilon);
    let _ = writeln!(s, "rank_t = {}", outcome.qdvr.rank_t);
    let _ = writeln!(s, "n_params = {}", outcome.n_params);
    let _ = writeln!(s, "copies_estimate = {}", b.copies_estimate);
    Ok(s)
}

fn write_entropy_dir(dir: &Path, outcome: &TrainOutcome, shared: &Shared) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("history.csv"), history_csv(&outcome.history))?;
    std::fs::write(dir.join("result.txt"), result_text(outcome, shared.log_base)?)?;
    std::fs::write(dir.join("ansatz.txt"), outcome.ansatz.to_text())?;
    Ok(())
}

fn prepare_out(out: &Path, resolved: &Resolved) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.resolved"), resolved.to_text())?;
    Ok(())
}

fn save_problem_state(out: &Path, problem: &Problem) -> Result<()> {
    if let Some(s) = &problem.spectral {
        s.save(&out.join("state.txt"))?;
    }
    Ok(())
}

fn cmd_estimate_entropy(a: &EntropyArgs) -> Result<i32> {
    let mut flags = vec![
        ("qubits", a.qubits.clone()),
        ("rank", a.rank.clone()),
        ("rank-t", a.rank_t.clone()),
    ];
    flags.extend(a.common.flags());
    let r = resolve("estimate-entropy", entropy_defaults()?, a.common.config.as_deref(), &flags)?;
    let shared = Shared::from_resolved(&r)?;
    let problem = entropy_problem(&r, &shared)?;
    let rank_t = r.parse_or("rank-t", "auto")?.unwrap_or(problem.rank);
    prepare_out(&a.common.out, &r)?;
    save_problem_state(&a.common.out, &problem)?;
    let outcome = train_point(&problem, &shared, shared.depth.unwrap_or(1), rank_t)?;
    write_entropy_dir(&a.common.out, &outcome, &shared)?;
    println!(
        "estimate {:.7} exact {:.7} {} (abs error {:.3e})",
        shared.log_base.convert(outcome.estimate),
        shared.log_base.convert(problem.exact),
        shared.log_base.unit(),
        shared.log_base.convert((outcome.estimate - problem.exact).abs()),
    );
    Ok(EXIT_OK)
}

fn qmi_table(rows: &[(usize, QmiOutcome)], log_base: LogBase) -> String {
    let mut s = format!("# unit: {}\n", log_base.unit());
    let _ = writeln!(s, "{:<6}{:<14}{:<14}Error-rate", "Rank", "QMI", "Estimation");
    for (rank, q) in rows {
        let rate = q.error_rate();
        let rate = if rate.is_finite() {
            format!("{:.3}%", 100.0 * rate)
        } else {
            "n/a".to_string()
        };
        let _ = writeln!(
            s,
            "{:<6}{:<14.7}{:<14.7}{rate}",
            rank,
            log_base.convert(q.exact),
            log_base.convert(q.estimate),
        );
    }
    s
}

fn cmd_estimate_qmi(a: &QmiArgs) -> Result<i32> {
    let mut flags = vec![
        ("qubits-a", a.qubits_a.clone()),
        ("qubits-b", a.qubits_b.clone()),
        ("rank-ab", a.rank_ab.clone()),
    ];
    flags.extend(a.common.flags());
    let r = resolve("estimate-qmi", qmi_defaults()?, a.common.config.as_deref(), &flags)?;
    let shared = Shared::from_resolved(&r)?;
    let (na, nb): (usize, usize) = (r.parse("qubits-a")?, r.parse("qubits-b")?);
    if na == 0 || nb == 0 {
        return Err(Error::Parameter("each subsystem needs at least one qubit".into()));
    }
    check_qubits(na + nb)?;
    let (da, db) = (1usize << na, 1usize << nb);

    let states: Vec<(usize, DensityMatrix)> = match &shared.state {
        Some(path) => {
            let (rho, _) = load_state(path)?;
            vec![(rho.numerical_rank(), rho)]
        }
        None => {
            let ranks: Vec<usize> = r.parse_list("rank-ab")?;
            check_distinct(&ranks, "rank-ab")?;
            ranks
                .iter()
                .map(|&k| Ok((k, random_density_with(da * db, k, shared.seed, shared.spectrum)?.assemble()?)))
                .collect::<Result<_>>()?
        }
    };
    if states[0].1.dim() != da * db {
        return Err(Error::Size(format!("state dimension {} is not {da} x {db}", states[0].1.dim())));
    }
    prepare_out(&a.common.out, &r)?;
    let depth = shared.depth.unwrap_or(1);
    let base = shared.train_config(1);
    let rows: Vec<(usize, QmiOutcome)> = shared.pool()?.install(|| {
        states
            .par_iter()
            .map(|(rank, rho)| Ok((*rank, estimate_qmi(rho, da, db, depth, &base)?)))
            .collect::<Result<_>>()
    })?;
    for (rank, q) in &rows {
        let dir = a.common.out.join(format!("rank-{rank}"));
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("product_history.csv"), history_csv(&q.product.history))?;
        std::fs::write(dir.join("joint_history.csv"), history_csv(&q.joint.history))?;
    }
    let table = qmi_table(&rows, shared.log_base);
    std::fs::write(a.common.out.join("qmi.txt"), &table)?;
    print!("{table}");
    Ok(EXIT_OK)
}

fn check_distinct(values: &[usize], key: &str) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if values[..i].contains(v) {
            return Err(Error::Parse(format!("`{key}` repeats {v}")));
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum SweepKind {
    RankT,
    Depth,
}

impl SweepKind {
    fn list_key(self) -> &'static str {
        match self {
            SweepKind::RankT => "rank-t-list",
            SweepKind::Depth => "depth-list",
        }
    }

    fn point_key(self) -> &'static str {
        match self {
            SweepKind::RankT => "rank-t",
            SweepKind::Depth => "depth",
        }
    }

    fn dir_name(self, value: usize) -> String {
        match self {
            SweepKind::RankT => format!("rank_t-{value}"),
            SweepKind::Depth => format!("depth-{value}"),
        }
    }
}

/// The estimate-entropy configuration equivalent to one sweep point.
fn point_config(sweep: &Resolved, kind: SweepKind, value: usize) -> Result<Resolved> {
    let flags: Vec<(&'static str, Option<String>)> = sweep
        .entries()
        .iter()
        .filter(|(k, _)| *k != kind.list_key())
        .map(|(k, v)| (*k, Some(v.clone())))
        .chain([(kind.point_key(), Some(value.to_string()))])
        .collect();
    resolve("estimate-entropy", entropy_defaults()?, None, &flags)
}

fn run_sweep(out: &Path, r: &Resolved, kind: SweepKind) -> Result<i32> {
    let shared = Shared::from_resolved(r)?;
    let points: Vec<usize> = r.parse_list(kind.list_key())?;
    check_distinct(&points, kind.list_key())?;
    let problem = entropy_problem(r, &shared)?;
    let fixed_rank_t = match kind {
        SweepKind::RankT => None,
        SweepKind::Depth => Some(r.parse_or("rank-t", "auto")?.unwrap_or(problem.rank)),
    };
    prepare_out(out, r)?;
    save_problem_state(out, &problem)?;

    let outcomes: Vec<TrainOutcome> = shared.pool()?.install(|| {
        points
            .par_iter()
            .map(|&v| match kind {
                SweepKind::RankT => train_point(&problem, &shared, shared.depth.unwrap_or(1), v),
                SweepKind::Depth => {
                    if v == 0 {
                        return Err(Error::Parameter("depth must be at least 1".into()));
                    }
                    train_point(&problem, &shared, v, fixed_rank_t.unwrap_or(problem.rank))
                }
            })
            .collect::<Result<_>>()
    })?;

    let mut summary = format!("{SUMMARY_HEADER}\n");
    for (&v, outcome) in points.iter().zip(&outcomes) {
        let dir = out.join(kind.dir_name(v));
        write_entropy_dir(&dir, outcome, &shared)?;
        std::fs::write(dir.join("config.resolved"), point_config(r, kind, v)?.to_text())?;
        let b = budget(&outcome.qdvr, outcome.n_params, outcome.iterations_run)?;
        let err = outcome.abs_error().unwrap_or(f64::NAN);
        let _ = writeln!(
            summary,
            "{v},{err:.17e},{},{},{}",
            outcome.iterations_to_1pct.map_or_else(String::new, |k| k.to_string()),
            outcome.n_params,
            b.copies_estimate
        );
        println!(
            "{}={v}: estimate {:.7} exact {:.7} error {err:.3e} nats, n_params {}",
            kind.point_key(),
            outcome.estimate,
            problem.exact,
            outcome.n_params
        );
    }
    std::fs::write(out.join("summary.csv"), summary)?;
    Ok(EXIT_OK)
}

fn cmd_rank_sweep(a: &RankSweepArgs) -> Result<i32> {
    let mut flags = vec![
        ("qubits", a.qubits.clone()),
        ("rank", a.rank.clone()),
        ("rank-t-list", a.rank_t_list.clone()),
    ];
    flags.extend(a.common.flags());
    let r = resolve("rank-sweep", rank_sweep_defaults()?, a.common.config.as_deref(), &flags)?;
    run_sweep(&a.common.out, &r, SweepKind::RankT)
}

fn cmd_depth_sweep(a: &DepthSweepArgs) -> Result<i32> {
    let mut flags = vec![
        ("qubits", a.qubits.clone()),
        ("rank", a.rank.clone()),
        ("rank-t", a.rank_t.clone()),
        ("depth-list", a.depth_list.clone()),
    ];
    flags.extend(a.common.flags());
    let r = resolve("depth-sweep", depth_sweep_defaults()?, a.common.config.as_deref(), &flags)?;
    run_sweep(&a.common.out, &r, SweepKind::Depth)
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let seed = match a.seed {
        Some(s) => s,
        None => default_seed()?.parse().unwrap_or(0),
    };
    let options = VerifyOptions {
        trials: a.trials,
        seed,
        max_qubits: a.max_qubits.clamp(1, MAX_QUBITS),
        force_failure: a.force_failure,
    };
    let reports = run_suite(&options);
    for r in &reports {
        println!("{}", r.line());
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed == 0 {
        println!("all {} properties passed (seed {seed}, {} trials)", reports.len(), a.trials);
        Ok(EXIT_OK)
    } else {
        println!("{failed} of {} properties failed; replay with --trials 1 --seed <failing_seed>", reports.len());
        Ok(EXIT_VERIFY_FAILED)
    }
}
