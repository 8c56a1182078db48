//! The `pilab` command line: solve instances, run verification campaigns,
//! sweep iteration-count experiments, and generate instance files.
//!
//! Exit codes follow the subcommand contracts:
//!
//! * `solve`: 0 on convergence, 1 on malformed input, 2 when the iteration
//!   cap was reached, 3 on an internal arithmetic failure;
//! * `verify`: 0 when every check passed, 1 on any violation, 2 on cap
//!   overruns or usage errors;
//! * `experiment`: 0 on success, 1 on I/O failure;
//! * `gen`: 0 on success, 1 on bad parameters.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bounds::format_bound;
use crate::engine::{default_max_iter, run_policy_iteration, Strategy, Trace};
use crate::experiment::{rows_to_csv, run_experiment, ExperimentConfig, StartRule, StrategyKind};
use crate::instance::{builtin_instance, parse_mdp, random_mdp, serialize_mdp, GenSpec};
use crate::mdp::{Mdp, Policy};
use crate::oracle::DEFAULT_ENUM_CAP;
use crate::rng::{derive_seed, RunRng};
use crate::scalar::{Rational, Scalar};
use crate::verify::{parse_check_list, run_verify_campaign, VerifyConfig};
use crate::Error;

const SALT_START: u64 = 2;

#[derive(Parser)]
#[command(
    name = "pilab",
    version,
    about = "Policy-iteration workbench for finite discounted MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run policy iteration on one instance and print the result.
    Solve(SolveArgs),
    /// Check structural properties over seeded instances and traces.
    Verify(VerifyArgs),
    /// Sweep iteration counts over instance families into a CSV file.
    Experiment(ExperimentArgs),
    /// Generate a random instance file.
    Gen(GenArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file to read; `-` reads standard input.
    #[arg(long, group = "source", required = true)]
    input: Option<PathBuf>,
    /// Built-in instance name (M2, M2c).
    #[arg(long, group = "source")]
    builtin: Option<String>,
    /// Inline generator spec, e.g. `n=4,k=2,seed=7,gamma=9/10,density=0.5`.
    #[arg(long, group = "source")]
    gen: Option<String>,
    /// Selection strategy: greedy, random, or sequential.
    #[arg(long, default_value = "greedy")]
    strategy: String,
    /// Rule for the sequential strategy: lowest, highest, or random.
    #[arg(long, default_value = "lowest")]
    seq_rule: String,
    /// Seed for randomized selection and random start policies.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Arithmetic mode: exact or float.
    #[arg(long, default_value = "exact")]
    arith: String,
    /// Start policy: zero, random, a comma list like `1,0`, or a file of
    /// action indices.
    #[arg(long, default_value = "zero")]
    start_policy: String,
    /// Iteration cap (default: twice the policy count, at most 10^7).
    #[arg(long)]
    max_iter: Option<u64>,
    /// Write the full iteration trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Number of seeded instances to generate and check.
    #[arg(long, default_value_t = 20)]
    instances: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma list of checks, or `all`. Available: theorem1, theorem2,
    /// lemma3, lemma4, lemma5 (two-action only), lemma6, lemma9, lemma12,
    /// corollary10.
    #[arg(long, default_value = "all")]
    lemmas: String,
    /// Enumeration cap on the policy count k^n.
    #[arg(long, default_value_t = DEFAULT_ENUM_CAP)]
    cap: u64,
    /// Discount factor as a rational.
    #[arg(long, default_value = "9/10")]
    gamma: String,
    /// Fraction of nonzero transitions per row.
    #[arg(long, default_value_t = 1.0)]
    density: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// State-count range, e.g. `2..8` (inclusive) or a single number.
    #[arg(long)]
    n_range: String,
    #[arg(long)]
    k: usize,
    /// Instances per state count.
    #[arg(long, default_value_t = 20)]
    instances: u64,
    #[arg(long, default_value = "greedy")]
    strategy: String,
    #[arg(long, default_value = "lowest")]
    seq_rule: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `on` builds the full policy order per run and records ruled-out
    /// counts; `off` skips it.
    #[arg(long, default_value = "off")]
    oracle: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "9/10")]
    gamma: String,
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    /// Start policy rule: zero or random.
    #[arg(long, default_value = "zero")]
    start_policy: String,
    #[arg(long)]
    max_iter: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_ENUM_CAP)]
    cap: u64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "9/10")]
    gamma: String,
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    #[arg(long, default_value_t = -10)]
    reward_lo: i64,
    #[arg(long, default_value_t = 10)]
    reward_hi: i64,
    #[arg(long, default_value_t = 1)]
    reward_den: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point used by `main`; returns the process exit code.
pub fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not errors.
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Gen(args) => cmd_gen(args),
    }
}

fn parse_gamma(text: &str) -> Result<Rational, Error> {
    Rational::parse(text).map_err(|e| Error::InvalidArgument(format!("bad gamma: {e}")))
}

/// Inline generator spec: comma-separated `key=value` pairs with keys
/// n, k, seed (required) and gamma, density, rlo, rhi, rden (optional).
fn parse_gen_spec(text: &str) -> Result<GenSpec, Error> {
    let mut n = None;
    let mut k = None;
    let mut seed = None;
    let mut gamma = None;
    let mut density = None;
    let mut rlo = None;
    let mut rhi = None;
    let mut rden = None;
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (key, value) = item.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("generator spec item `{item}` is not key=value"))
        })?;
        let bad = |what: &str| Error::InvalidArgument(format!("bad {what} `{value}`"));
        match key {
            "n" => n = Some(value.parse().map_err(|_| bad("n"))?),
            "k" => k = Some(value.parse().map_err(|_| bad("k"))?),
            "seed" => seed = Some(value.parse().map_err(|_| bad("seed"))?),
            "gamma" => gamma = Some(parse_gamma(value)?),
            "density" => density = Some(value.parse().map_err(|_| bad("density"))?),
            "rlo" => rlo = Some(value.parse().map_err(|_| bad("rlo"))?),
            "rhi" => rhi = Some(value.parse().map_err(|_| bad("rhi"))?),
            "rden" => rden = Some(value.parse().map_err(|_| bad("rden"))?),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown generator key `{other}`"
                )))
            }
        }
    }
    let (n, k, seed) = match (n, k, seed) {
        (Some(n), Some(k), Some(seed)) => (n, k, seed),
        _ => {
            return Err(Error::InvalidArgument(
                "generator spec needs n=, k=, and seed=".to_string(),
            ))
        }
    };
    let mut spec = GenSpec::new(n, k, seed);
    if let Some(g) = gamma {
        spec.gamma = g;
    }
    if let Some(d) = density {
        spec.density = d;
    }
    if let Some(v) = rlo {
        spec.reward_lo = v;
    }
    if let Some(v) = rhi {
        spec.reward_hi = v;
    }
    if let Some(v) = rden {
        spec.reward_den = v;
    }
    Ok(spec)
}

fn load_instance(args: &SolveArgs) -> Result<Mdp<Rational>, Error> {
    if let Some(path) = &args.input {
        let text = if path.as_os_str() == "-" {
            let mut buffer = String::new();
            std::io::Read::read_to_string(&mut std::io::stdin(), &mut buffer)?;
            buffer
        } else {
            fs::read_to_string(path)?
        };
        return parse_mdp(&text);
    }
    if let Some(name) = &args.builtin {
        return builtin_instance(name);
    }
    if let Some(spec) = &args.gen {
        return random_mdp(&parse_gen_spec(spec)?);
    }
    Err(Error::InvalidArgument(
        "one of --input, --builtin, --gen is required".to_string(),
    ))
}

fn parse_start_policy(text: &str, n: usize, k: usize, seed: u64) -> Result<Policy, Error> {
    match text {
        "zero" => Ok(Policy::zero(n)),
        "random" => {
            let mut rng = RunRng::from_seed(derive_seed(seed, SALT_START));
            Ok(Policy::new(
                (0..n).map(|_| rng.below(k as u64) as usize).collect(),
            ))
        }
        other => {
            let list = if let Some(path) = other.strip_prefix("file:") {
                fs::read_to_string(path)?
            } else if Path::new(other).is_file() {
                fs::read_to_string(other)?
            } else {
                other.to_string()
            };
            let actions: Vec<usize> = list
                .split([',', ' ', '\n', '\t'])
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<usize>().map_err(|_| {
                        Error::InvalidArgument(format!("bad start-policy entry `{t}`"))
                    })
                })
                .collect::<Result<_, _>>()?;
            if actions.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "start policy lists {} actions for {} states",
                    actions.len(),
                    n
                )));
            }
            Ok(Policy::new(actions))
        }
    }
}

fn parse_strategy(strategy: &str, seq_rule: &str, seed: u64) -> Result<Strategy, Error> {
    Ok(match StrategyKind::parse(strategy, seq_rule)? {
        StrategyKind::Greedy => Strategy::Greedy,
        StrategyKind::Random => Strategy::Random { seed },
        StrategyKind::SequentialLowest => Strategy::Sequential {
            rule: crate::engine::SequentialRule::LowestState,
        },
        StrategyKind::SequentialHighest => Strategy::Sequential {
            rule: crate::engine::SequentialRule::HighestState,
        },
        StrategyKind::SequentialRandom => Strategy::Sequential {
            rule: crate::engine::SequentialRule::RandomSingleton { seed },
        },
    })
}

fn print_solution<S: Scalar>(trace: &Trace<S>) {
    println!("policy {}", trace.final_policy.compact_text());
    let values = trace
        .final_value
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    println!("value {values}");
    println!("iterations {}", trace.iterations());
    println!("resamples {}", trace.total_resamples());
    println!("terminated {}", trace.terminated);
}

fn solve_on<S: Scalar>(mdp: &Mdp<S>, args: &SolveArgs) -> Result<bool, Error> {
    let n = mdp.num_states();
    let k = mdp.num_actions();
    let start = parse_start_policy(&args.start_policy, n, k, args.seed)?;
    let strategy = parse_strategy(&args.strategy, &args.seq_rule, args.seed)?;
    let max_iter = args.max_iter.unwrap_or_else(|| default_max_iter(n, k));
    let trace = run_policy_iteration(mdp, &start, strategy, max_iter)?;
    print_solution(&trace);
    if let Some(path) = &args.trace {
        fs::write(path, trace.to_text())?;
    }
    Ok(trace.terminated)
}

fn solve_exit_code(err: &Error) -> i32 {
    match err {
        Error::SingularSystem => 3,
        _ => 1,
    }
}

fn cmd_solve(args: SolveArgs) -> i32 {
    let mdp = match load_instance(&args) {
        Ok(mdp) => mdp,
        Err(err) => {
            eprintln!("error: {err}");
            return 1;
        }
    };
    let outcome = match args.arith.as_str() {
        "exact" => solve_on(&mdp, &args),
        "float" => solve_on(&mdp.to_float(), &args),
        other => {
            eprintln!("error: unknown arithmetic mode `{other}`");
            return 1;
        }
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("warning: iteration cap reached before convergence");
            2
        }
        Err(err) => {
            eprintln!("error: {err}");
            solve_exit_code(&err)
        }
    }
}

fn cmd_verify(args: VerifyArgs) -> i32 {
    let checks = match parse_check_list(&args.lemmas, args.k) {
        Ok(checks) => checks,
        Err(err) => {
            eprintln!("error: {err}");
            return 2;
        }
    };
    let gamma = match parse_gamma(&args.gamma) {
        Ok(g) => g,
        Err(err) => {
            eprintln!("error: {err}");
            return 2;
        }
    };
    let cfg = VerifyConfig {
        n: args.n,
        k: args.k,
        instances: args.instances,
        base_seed: args.seed,
        checks,
        cap: args.cap,
        gamma,
        density: args.density,
    };
    println!(
        "# pilab verify n={} k={} instances={} seed={} gamma={} density={} cap={}",
        cfg.n, cfg.k, cfg.instances, cfg.base_seed, cfg.gamma, cfg.density, cfg.cap
    );
    match run_verify_campaign(&cfg) {
        Ok(outcome) => {
            print!("{}", outcome.to_text());
            if outcome.passed() {
                0
            } else {
                1
            }
        }
        Err(err @ Error::CapExceeded(_)) => {
            eprintln!("error: {err}");
            2
        }
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn parse_n_range(text: &str) -> Result<(usize, usize), Error> {
    let bad = || Error::InvalidArgument(format!("bad state-count range `{text}`"));
    if let Some((lo, hi)) = text.split_once("..") {
        let lo = lo.trim().parse().map_err(|_| bad())?;
        let hi = hi.trim().parse().map_err(|_| bad())?;
        Ok((lo, hi))
    } else {
        let n = text.trim().parse().map_err(|_| bad())?;
        Ok((n, n))
    }
}

fn cmd_experiment(args: ExperimentArgs) -> i32 {
    let inner = || -> Result<Vec<String>, Error> {
        let (n_lo, n_hi) = parse_n_range(&args.n_range)?;
        let oracle = match args.oracle.as_str() {
            "on" => true,
            "off" => false,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "bad --oracle value `{other}` (expected on or off)"
                )))
            }
        };
        let start = match args.start_policy.as_str() {
            "zero" => StartRule::Zero,
            "random" => StartRule::Random,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "bad --start-policy value `{other}` (expected zero or random)"
                )))
            }
        };
        let cfg = ExperimentConfig {
            n_lo,
            n_hi,
            k: args.k,
            instances: args.instances,
            strategy: StrategyKind::parse(&args.strategy, &args.seq_rule)?,
            base_seed: args.seed,
            oracle,
            gamma: parse_gamma(&args.gamma)?,
            density: args.density,
            start,
            max_iter: args.max_iter,
            order_cap: args.cap,
        };
        let (rows, warnings) = run_experiment(&cfg)?;
        fs::write(&args.out, rows_to_csv(&rows))?;
        println!(
            "wrote {} rows to {} (bound warnings: {})",
            rows.len(),
            args.out.display(),
            warnings.len()
        );
        Ok(warnings)
    };
    match inner() {
        Ok(warnings) => {
            for warning in warnings {
                eprintln!("warning: {warning}");
            }
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn cmd_gen(args: GenArgs) -> i32 {
    let inner = || -> Result<(), Error> {
        let gamma = parse_gamma(&args.gamma)?;
        let spec = GenSpec {
            gamma,
            density: args.density,
            reward_lo: args.reward_lo,
            reward_hi: args.reward_hi,
            reward_den: args.reward_den,
            ..GenSpec::new(args.n, args.k, args.seed)
        };
        let mdp = random_mdp(&spec)?;
        let text = serialize_mdp(&mdp);
        match &args.out {
            Some(path) => fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    };
    match inner() {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

/// Bound values for reporting, formatted to six significant digits.
pub fn bound_text(n: usize, k: usize, strategy: &str) -> Result<String, Error> {
    Ok(format_bound(crate::bounds::eval_bounds(n, k, strategy)?))
}
