//! Command-line dispatch for the `maccoop` binary.
//!
//! Every invocation prints exactly one machine-readable report on stdout:
//! canonical JSON by default, CSV where a command offers `--out csv` for
//! plot data. The report embeds the tool version, the seed, and the
//! resolved configuration, so a stored report identifies the run that
//! produced it. Identical argument vectors and seeds produce
//! byte-identical output, regardless of worker count.
//!
//! Exit codes: 0 on success, 1 on validation or I/O failure, 2 when a
//! run finishes without the requested certificate (an uncertified plan
//! or a failed guarantee), 64 on unknown flags or malformed usage.
//!
//! `MACCOOP_THREADS` caps the worker pool; unset means one worker per
//! core. Results never depend on the cap, only wall time does.

use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::blockperm::{find_permutations, verify_permutations, PermOutcome, SearchConfig, SearchMethod};
use crate::capacity::{
    conferencing_calpha, dueck_gap_report, mac_avg_calpha, region_from_support, OptimizeOutcome,
    OptimizerConfig, SupportCurve,
};
use crate::channel::ProductInput;
use crate::code::{blockwise_error, BlockwiseOptions};
use crate::files::{load_channel, load_code, load_matrix, save_code};
use crate::report::{canonical_json, envelope};
use crate::transform::{
    apply_prop3, apply_theorem1, plan_prop3, plan_theorem1, verify_transform, TransformQuery,
};
use crate::{Error, Result};

const EXIT_OK: i32 = 0;
const EXIT_UNCERTIFIED: i32 = 2;
const EXIT_USAGE: i32 = 64;

#[derive(Debug, clap::Parser)]
#[command(
    name = "maccoop",
    version,
    about = "Exact desk-scale analysis of cooperation in two-user multiple access channels",
    propagate_version = true
)]
struct Cli {
    /// Comparison tolerance recorded with every report (must be > 0).
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Print progress notes on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inspect a channel file or builtin.
    #[command(subcommand)]
    Channel(ChannelCommand),
    /// Evaluate a cooperation code against a channel.
    #[command(subcommand)]
    Code(CodeCommand),
    /// Search row and column permutations of 0/1 matrices.
    #[command(subcommand)]
    Perm(PermCommand),
    /// Rewrite a code with a stronger error guarantee.
    #[command(subcommand)]
    Transform(TransformCommand),
    /// Capacity-side quantities.
    #[command(subcommand)]
    Capacity(CapacityCommand),
}

#[derive(Debug, Subcommand)]
enum ChannelCommand {
    /// Report alphabet sizes, labels, and determinism.
    Info {
        /// Channel file, or a builtin name (`contraction`, `adder`).
        #[arg(long)]
        channel: String,
    },
}

#[derive(Debug, Subcommand)]
enum CodeCommand {
    /// Average, maximal, and blockwise error of a code.
    Eval {
        /// Channel file, or a builtin name (`contraction`, `adder`).
        #[arg(long)]
        channel: String,
        /// Code file.
        #[arg(long)]
        code: PathBuf,
        /// Blockwise rate of user 1 (bits per channel use).
        #[arg(long)]
        r1: f64,
        /// Blockwise rate of user 2.
        #[arg(long)]
        r2: f64,
        /// Certify the blockwise value by full enumeration.
        #[arg(long)]
        exact: bool,
        /// Seed for the heuristic permutation search.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restart budget for the heuristic (or pair cap in exact mode).
        #[arg(long)]
        budget: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum PermCommand {
    /// Find permutations leaving every k-th diagonal quarter block all-zero.
    Search {
        /// Matrix file: JSON `{"rows": [[0,1],...]}` or plain 0/1 text rows.
        #[arg(long)]
        matrix: PathBuf,
        /// Number of diagonal blocks per axis.
        #[arg(long)]
        k: usize,
        /// Seed for the randomized restarts.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restart budget.
        #[arg(long)]
        budget: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum TransformCommand {
    /// Expurgate and permute a code so the maximal error tracks the average.
    Thm1 {
        /// Channel file or builtin name.
        #[arg(long)]
        channel: String,
        /// Input code file.
        #[arg(long)]
        code: PathBuf,
        /// Target blockwise rate of user 1.
        #[arg(long)]
        r1: f64,
        /// Target blockwise rate of user 2.
        #[arg(long)]
        r2: f64,
        /// Per-user rate slack (bits per channel use).
        #[arg(long)]
        delta: f64,
        /// Where to write the transformed code.
        #[arg(long)]
        out: PathBuf,
    },
    /// Add one conference round to cut the maximal error to (4/3) epsilon.
    Prop3 {
        /// Channel file or builtin name.
        #[arg(long)]
        channel: String,
        /// Input code file.
        #[arg(long)]
        code: PathBuf,
        /// Forward conference capacity (bits per channel use).
        #[arg(long)]
        c12: f64,
        /// Backward conference capacity.
        #[arg(long)]
        c21: f64,
        /// Where to write the transformed code.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum CapacityCommand {
    /// Lower-bound the weighted capacity C^alpha by optimizing inputs.
    Calpha {
        /// Channel file or builtin name.
        #[arg(long)]
        channel: String,
        /// Weight in [0, 1].
        #[arg(long)]
        alpha: f64,
        /// Conference capacities `C12 C21`; omitted means no cooperation.
        #[arg(long, num_args = 2, value_names = ["C12", "C21"])]
        conf: Option<Vec<f64>>,
        /// Time-sharing alphabet size for conferencing runs.
        #[arg(long)]
        ucard: Option<usize>,
        #[command(flatten)]
        opt: OptimizerArgs,
    },
    /// Closed-form bounds on the contraction channel's C^alpha_avg gap.
    Dueck {
        /// Weights: a value, a comma list, or `start:end:step`.
        #[arg(long)]
        alphas: String,
        /// Report format.
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        out: OutputFormat,
    },
    /// Sample C^alpha over a weight grid and rebuild the rate region.
    Region {
        /// Channel file or builtin name.
        #[arg(long)]
        channel: String,
        /// Weights: a value, a comma list, or `start:end:step`.
        /// The grid must include 0 and 1.
        #[arg(long)]
        alphas: String,
        /// Conference capacities `C12 C21`; omitted means no cooperation.
        #[arg(long, num_args = 2, value_names = ["C12", "C21"])]
        conf: Option<Vec<f64>>,
        /// Time-sharing alphabet size for conferencing runs.
        #[arg(long)]
        ucard: Option<usize>,
        /// Report format.
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        out: OutputFormat,
        #[command(flatten)]
        opt: OptimizerArgs,
    },
}

#[derive(Debug, Clone, Args)]
struct OptimizerArgs {
    /// Seed for the optimizer's random restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Coordinate-ascent sweeps per start.
    #[arg(long)]
    sweeps: Option<usize>,
    /// Grid points per mass-transfer line search.
    #[arg(long)]
    grid: Option<usize>,
}

impl OptimizerArgs {
    fn build(&self, ucard: Option<usize>) -> OptimizerConfig<f64> {
        let mut config = OptimizerConfig { seed: self.seed, ..OptimizerConfig::default() };
        if let Some(r) = self.restarts {
            config.restarts = r;
        }
        if let Some(s) = self.sweeps {
            config.sweeps = s;
        }
        if let Some(g) = self.grid {
            config.grid_points = g;
        }
        if let Some(u) = ucard {
            config.u_cardinality = u;
        }
        config
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    fn label(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        }
    }
}

/// The resolved per-run settings echoed inside every report.
#[derive(Debug, Serialize)]
struct RunConfig {
    tolerance: f64,
    verbosity: u8,
    format: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimizer: Option<Value>,
    params: Value,
}

/// One finished command: everything `run` needs to emit and exit.
struct Emitted {
    seed: Option<u64>,
    config: RunConfig,
    result: Value,
    exit: i32,
    /// Preformatted non-JSON output (CSV); `None` means JSON envelope.
    text: Option<String>,
}

/// Parses argv, runs one command, prints one report, returns the exit code.
pub fn run() -> i32 {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(err) => {
            // Help and version requests land here too; only real usage
            // errors take the 64 exit.
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = err.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return EXIT_USAGE;
        }
    };

    let name = command_name(&cli.command);
    if let Err(err) = configure_threads() {
        return emit_error(name, &cli, err);
    }
    if cli.tol <= 0.0 || !cli.tol.is_finite() {
        return emit_error(
            name,
            &cli,
            Error::validation(format!("--tol must be positive and finite, got {}", cli.tol)),
        );
    }

    match dispatch(&cli) {
        Ok(emitted) => {
            match &emitted.text {
                Some(text) => print!("{text}"),
                None => {
                    let body = envelope(
                        name,
                        emitted.seed,
                        serde_json::to_value(&emitted.config).expect("config serializes"),
                        emitted.result,
                    );
                    print!("{}", canonical_json(&body));
                }
            }
            emitted.exit
        }
        Err(err) => emit_error(name, &cli, err),
    }
}

fn emit_error(name: &str, cli: &Cli, err: Error) -> i32 {
    let config = json!({ "tolerance": cli.tol, "verbosity": cli.verbose });
    let result = json!({ "error": err.to_string() });
    print!("{}", canonical_json(&envelope(name, None, config, result)));
    eprintln!("maccoop: {err}");
    err.exit_code()
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Channel(ChannelCommand::Info { .. }) => "channel info",
        Command::Code(CodeCommand::Eval { .. }) => "code eval",
        Command::Perm(PermCommand::Search { .. }) => "perm search",
        Command::Transform(TransformCommand::Thm1 { .. }) => "transform thm1",
        Command::Transform(TransformCommand::Prop3 { .. }) => "transform prop3",
        Command::Capacity(CapacityCommand::Calpha { .. }) => "capacity calpha",
        Command::Capacity(CapacityCommand::Dueck { .. }) => "capacity dueck",
        Command::Capacity(CapacityCommand::Region { .. }) => "capacity region",
    }
}

/// Applies the `MACCOOP_THREADS` cap before any parallel work starts.
fn configure_threads() -> Result<()> {
    let raw = match std::env::var("MACCOOP_THREADS") {
        Ok(raw) => raw,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(err) => return Err(Error::validation(format!("MACCOOP_THREADS: {err}"))),
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::validation(format!("MACCOOP_THREADS must be a positive integer, got {raw:?}"))
        })?;
    // A second initialization attempt in the same process is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<Emitted> {
    match &cli.command {
        Command::Channel(ChannelCommand::Info { channel }) => channel_info(cli, channel),
        Command::Code(CodeCommand::Eval { channel, code, r1, r2, exact, seed, budget }) => {
            code_eval(cli, channel, code, *r1, *r2, *exact, *seed, *budget)
        }
        Command::Perm(PermCommand::Search { matrix, k, seed, budget }) => {
            perm_search(cli, matrix, *k, *seed, *budget)
        }
        Command::Transform(TransformCommand::Thm1 { channel, code, r1, r2, delta, out }) => {
            transform_run(
                cli,
                channel,
                code,
                out,
                TransformQuery::Theorem1 { r1: *r1, r2: *r2, delta: *delta },
            )
        }
        Command::Transform(TransformCommand::Prop3 { channel, code, c12, c21, out }) => {
            transform_run(cli, channel, code, out, TransformQuery::Prop3 { c12: *c12, c21: *c21 })
        }
        Command::Capacity(CapacityCommand::Calpha { channel, alpha, conf, ucard, opt }) => {
            capacity_calpha(cli, channel, *alpha, conf.as_deref(), *ucard, opt)
        }
        Command::Capacity(CapacityCommand::Dueck { alphas, out }) => {
            capacity_dueck(cli, alphas, *out)
        }
        Command::Capacity(CapacityCommand::Region { channel, alphas, conf, ucard, out, opt }) => {
            capacity_region(cli, channel, alphas, conf.as_deref(), *ucard, *out, opt)
        }
    }
}

fn note(cli: &Cli, message: &str) {
    if cli.verbose > 0 {
        eprintln!("maccoop: {message}");
    }
}

fn base_config(cli: &Cli, seed: Option<u64>, params: Value) -> RunConfig {
    RunConfig {
        tolerance: cli.tol,
        verbosity: cli.verbose,
        format: "json",
        seed,
        optimizer: None,
        params,
    }
}

fn channel_info(cli: &Cli, channel: &str) -> Result<Emitted> {
    let mac = load_channel(Path::new(channel))?;
    note(cli, &format!("loaded channel {channel}"));
    let result = json!({
        "x1_size": mac.n1(),
        "x2_size": mac.n2(),
        "y_size": mac.ny(),
        "deterministic": mac.is_deterministic(),
        "x1": mac.x1_labels(),
        "x2": mac.x2_labels(),
        "y": mac.y_labels(),
    });
    Ok(Emitted {
        seed: None,
        config: base_config(cli, None, json!({ "channel": channel })),
        result,
        exit: EXIT_OK,
        text: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn code_eval(
    cli: &Cli,
    channel: &str,
    code_path: &Path,
    r1: f64,
    r2: f64,
    exact: bool,
    seed: u64,
    budget: Option<usize>,
) -> Result<Emitted> {
    let mac = load_channel(Path::new(channel))?;
    let code = load_code(code_path)?;
    note(cli, &format!("evaluating {} against {channel}", code_path.display()));
    let em = code.error_matrix(&mac)?;

    let mut options = BlockwiseOptions { exact, seed, ..BlockwiseOptions::default() };
    if let Some(b) = budget {
        options.budget = b;
    }
    let blockwise = blockwise_error(&em, code.n(), r1, r2, &options)?;

    let params = json!({
        "channel": channel,
        "code": code_path.display().to_string(),
        "r1": r1,
        "r2": r2,
        "exact": exact,
        "budget": options.budget,
    });
    let result = json!({
        "n": code.n(),
        "m": code.m(),
        "avg": em.avg(),
        "max": em.max(),
        "blockwise": {
            "value": blockwise.value,
            "bound_kind": blockwise.certificate.label(),
            "k": blockwise.k,
            "l": blockwise.l,
            "worst_block": blockwise.worst_block,
            "witness": { "pi1": blockwise.pi1, "pi2": blockwise.pi2 },
        },
    });
    Ok(Emitted {
        seed: Some(seed),
        config: base_config(cli, Some(seed), params),
        result,
        exit: EXIT_OK,
        text: None,
    })
}

fn perm_search(
    cli: &Cli,
    matrix_path: &Path,
    k: usize,
    seed: u64,
    budget: Option<usize>,
) -> Result<Emitted> {
    let matrix = load_matrix(matrix_path)?;
    note(cli, &format!("searching {}x{} matrix at k={k}", matrix.rows(), matrix.cols()));

    let mut config = SearchConfig { seed, ..SearchConfig::default() };
    if let Some(b) = budget {
        config.budget = b;
    }
    let params = json!({
        "matrix": matrix_path.display().to_string(),
        "k": k,
        "budget": config.budget,
    });

    let (result, exit) = match find_permutations(&matrix, k, &config)? {
        PermOutcome::Found(found) => {
            // Re-check the witness through the independent verifier so
            // the report never asserts an unchecked pair.
            let holes = verify_permutations(&matrix, k, &found.pi1, &found.pi2)?;
            let method = match found.method {
                SearchMethod::Exhaustive => "exhaustive",
                SearchMethod::Randomized => "randomized",
            };
            (
                json!({
                    "status": "found",
                    "verified": holes.is_none(),
                    "method": method,
                    "restarts_used": found.restarts_used,
                    "existence_bound": found.bound,
                    "pi1": found.pi1,
                    "pi2": found.pi2,
                }),
                EXIT_OK,
            )
        }
        PermOutcome::NotFound(fail) => (
            json!({
                "status": if fail.exhaustive { "nonexistent" } else { "uncertified" },
                "exhaustive": fail.exhaustive,
                "existence_bound": fail.bound,
                "violations": fail.violations,
                "best_pi1": fail.best_pi1,
                "best_pi2": fail.best_pi2,
            }),
            EXIT_UNCERTIFIED,
        ),
    };
    Ok(Emitted {
        seed: Some(seed),
        config: base_config(cli, Some(seed), params),
        result,
        exit,
        text: None,
    })
}

fn transform_run(
    cli: &Cli,
    channel: &str,
    code_path: &Path,
    out: &Path,
    query: TransformQuery<f64>,
) -> Result<Emitted> {
    let mac = load_channel(Path::new(channel))?;
    let code = load_code(code_path)?;

    let (transformed, params) = match query {
        TransformQuery::Theorem1 { r1, r2, delta } => {
            let plan = plan_theorem1(&code, &mac, r1, r2, delta)?;
            note(cli, "theorem 1 plan certified; applying");
            let params = json!({
                "channel": channel,
                "code": code_path.display().to_string(),
                "out": out.display().to_string(),
                "r1": r1,
                "r2": r2,
                "delta": delta,
            });
            (apply_theorem1(&plan, &code)?, params)
        }
        TransformQuery::Prop3 { c12, c21 } => {
            let plan = plan_prop3(&code, &mac, c12, c21)?;
            note(cli, "proposition 3 plan built; applying");
            let params = json!({
                "channel": channel,
                "code": code_path.display().to_string(),
                "out": out.display().to_string(),
                "c12": c12,
                "c21": c21,
            });
            (apply_prop3(&plan, &code)?, params)
        }
    };

    save_code(out, &transformed)?;
    let report = verify_transform(&code, &transformed, &mac, query)?;
    let exit = if report.guarantee_met { EXIT_OK } else { EXIT_UNCERTIFIED };
    let result = json!({
        "output": out.display().to_string(),
        "report": serde_json::to_value(&report).expect("report serializes"),
    });
    Ok(Emitted {
        seed: None,
        config: base_config(cli, None, params),
        result,
        exit,
        text: None,
    })
}

/// The hand-checked input achieving the contraction channel's closed-form
/// average-cooperation lower bound at alpha = 1/2.
fn contraction_witness() -> ProductInput<f64> {
    let third = 1.0 / 3.0;
    let sixth = 1.0 / 6.0;
    ProductInput::independent(vec![third, third, sixth, sixth], vec![2.0 * third, third])
        .expect("witness is a valid product input")
}

fn is_builtin_contraction(channel: &str) -> bool {
    channel == "contraction" && !Path::new(channel).exists()
}

fn optimizer_echo(config: &OptimizerConfig<f64>) -> Value {
    json!({
        "grid_points": config.grid_points,
        "sweeps": config.sweeps,
        "restarts": config.restarts,
        "seed": config.seed,
        "u_cardinality": config.u_cardinality,
        "seed_points": config.seed_points.len(),
    })
}

fn input_json(input: &ProductInput<f64>) -> Value {
    let u = input.u_cardinality();
    json!({
        "pu": input.pu(),
        "px1": (0..u).map(|i| input.px1(i).to_vec()).collect::<Vec<_>>(),
        "px2": (0..u).map(|i| input.px2(i).to_vec()).collect::<Vec<_>>(),
    })
}

fn outcome_json(outcome: &OptimizeOutcome<f64>) -> Value {
    json!({
        "value": outcome.value,
        "certificate": outcome.certificate.label(),
        "converged": outcome.converged,
        "evaluations": outcome.evaluations,
        "best_restart": outcome.best_restart,
        "input": input_json(&outcome.input),
    })
}

/// Solves one weight: plain optimization without links, the conferencing
/// objective with them. Builtin contraction runs without links get the
/// known witness as an extra start, recorded as `witness_seeded`.
fn solve_alpha(
    mac: &crate::DiscreteMac,
    alpha: f64,
    conf: Option<(f64, f64)>,
    config: &OptimizerConfig<f64>,
) -> Result<OptimizeOutcome<f64>> {
    match conf {
        None => mac_avg_calpha(mac, alpha, config),
        Some((c12, c21)) => conferencing_calpha(mac, c12, c21, alpha, config),
    }
}

fn conf_pair(conf: Option<&[f64]>) -> Result<Option<(f64, f64)>> {
    match conf {
        None => Ok(None),
        Some([c12, c21]) => Ok(Some((*c12, *c21))),
        Some(other) => Err(Error::validation(format!(
            "--conf takes exactly two values, got {}",
            other.len()
        ))),
    }
}

fn capacity_calpha(
    cli: &Cli,
    channel: &str,
    alpha: f64,
    conf: Option<&[f64]>,
    ucard: Option<usize>,
    opt: &OptimizerArgs,
) -> Result<Emitted> {
    let conf = conf_pair(conf)?;
    if ucard.is_some() && conf.is_none() {
        return Err(Error::validation("--ucard only applies to conferencing runs (--conf)"));
    }
    let mac = load_channel(Path::new(channel))?;
    let mut config = opt.build(ucard);
    let witness_seeded = conf.is_none() && is_builtin_contraction(channel);
    if witness_seeded {
        config.seed_points.push(contraction_witness());
    }
    note(cli, &format!("optimizing C^alpha at alpha={alpha}"));
    let outcome = solve_alpha(&mac, alpha, conf, &config)?;

    let params = json!({
        "channel": channel,
        "alpha": alpha,
        "conf": conf.map(|(a, b)| vec![a, b]),
        "witness_seeded": witness_seeded,
    });
    let mut run = base_config(cli, Some(config.seed), params);
    run.optimizer = Some(optimizer_echo(&config));
    let mut result = outcome_json(&outcome);
    result["alpha"] = json!(alpha);
    Ok(Emitted {
        seed: Some(config.seed),
        config: run,
        result,
        exit: EXIT_OK,
        text: None,
    })
}

fn capacity_dueck(cli: &Cli, alphas: &str, out: OutputFormat) -> Result<Emitted> {
    let grid = parse_alphas(alphas)?;
    let rows = dueck_gap_report(&grid)?;
    note(cli, &format!("evaluated {} closed-form rows", rows.len()));
    let params = json!({ "alphas": alphas });
    let mut config = base_config(cli, None, params);
    config.format = out.label();

    if out == OutputFormat::Csv {
        let mut text = String::from("alpha,lower,upper,gap\n");
        for row in &rows {
            text.push_str(&csv_row(&[row.alpha, row.lower, row.upper, row.gap]));
        }
        return Ok(Emitted { seed: None, config, result: Value::Null, exit: EXIT_OK, text: Some(text) });
    }

    let result = json!({ "rows": serde_json::to_value(&rows).expect("rows serialize") });
    Ok(Emitted { seed: None, config, result, exit: EXIT_OK, text: None })
}

#[allow(clippy::too_many_arguments)]
fn capacity_region(
    cli: &Cli,
    channel: &str,
    alphas: &str,
    conf: Option<&[f64]>,
    ucard: Option<usize>,
    out: OutputFormat,
    opt: &OptimizerArgs,
) -> Result<Emitted> {
    let conf = conf_pair(conf)?;
    if ucard.is_some() && conf.is_none() {
        return Err(Error::validation("--ucard only applies to conferencing runs (--conf)"));
    }
    let grid = parse_alphas(alphas)?;
    let mac = load_channel(Path::new(channel))?;
    let mut config = opt.build(ucard);
    let witness_seeded = conf.is_none() && is_builtin_contraction(channel);
    if witness_seeded {
        config.seed_points.push(contraction_witness());
    }

    let mut samples = Vec::with_capacity(grid.len());
    for &alpha in &grid {
        note(cli, &format!("optimizing C^alpha at alpha={alpha}"));
        let outcome = solve_alpha(&mac, alpha, conf, &config)?;
        samples.push((alpha, outcome.value));
    }
    let curve = SupportCurve::new(samples.clone())?;
    let region = region_from_support(&curve)?;

    let params = json!({
        "channel": channel,
        "alphas": alphas,
        "conf": conf.map(|(a, b)| vec![a, b]),
        "witness_seeded": witness_seeded,
    });
    let mut run = base_config(cli, Some(config.seed), params);
    run.optimizer = Some(optimizer_echo(&config));
    run.format = out.label();

    if out == OutputFormat::Csv {
        let mut text = String::from("alpha,c_alpha\n");
        for &(alpha, value) in &samples {
            text.push_str(&csv_row(&[alpha, value]));
        }
        text.push_str("\nx,y\n");
        for v in region.vertices() {
            text.push_str(&csv_row(&[v[0], v[1]]));
        }
        return Ok(Emitted {
            seed: Some(config.seed),
            config: run,
            result: Value::Null,
            exit: EXIT_OK,
            text: Some(text),
        });
    }

    let result = json!({
        "support": samples
            .iter()
            .map(|&(alpha, value)| json!({ "alpha": alpha, "value": value }))
            .collect::<Vec<_>>(),
        "vertices": region.vertices(),
    });
    Ok(Emitted {
        seed: Some(config.seed),
        config: run,
        result,
        exit: EXIT_OK,
        text: None,
    })
}

/// Formats one CSV line at the same 12 significant digits as the JSON.
fn csv_row(values: &[f64]) -> String {
    let mut line = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(&format!("{v:.11e}"));
    }
    line.push('\n');
    line
}

/// Parses a weight grid: `0.5`, `0,0.25,1`, or `start:end:step`.
///
/// Range grids walk `start + i*step`, clamp into the interval, and snap
/// the final point onto `end` when the step divides the span.
fn parse_alphas(spec: &str) -> Result<Vec<f64>> {
    let parse_one = |token: &str| -> Result<f64> {
        let token = token.trim();
        token
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::validation(format!("cannot parse weight {token:?}")))
    };

    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::validation(format!(
                "weight ranges use start:end:step, got {spec:?}"
            )));
        }
        let start = parse_one(parts[0])?;
        let end = parse_one(parts[1])?;
        let step = parse_one(parts[2])?;
        // parse_one already rejected non-finite values.
        if step <= 0.0 {
            return Err(Error::validation("range step must be positive"));
        }
        if end < start {
            return Err(Error::validation("range end must not precede start"));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        let mut grid = Vec::with_capacity(count + 1);
        for i in 0..=count {
            let mut x = (start + i as f64 * step).min(end);
            if (x - end).abs() <= 1e-9 {
                x = end;
            }
            grid.push(x);
        }
        Ok(grid)
    } else {
        let grid: Result<Vec<f64>> = spec.split(',').map(parse_one).collect();
        let grid = grid?;
        if grid.is_empty() {
            return Err(Error::validation("weight list is empty"));
        }
        Ok(grid)
    }
}
