//! Iteration-count experiments over seeded instance families, emitted as a
//! fixed-schema CSV so bound conformance can be checked offline.
//!
//! Rows come out in deterministic seed-major order: outer loop over the
//! state-count range, inner loop over instance indices, one row per run.
//! Instance seeds are `base_seed + row_counter`, so every row can be
//! regenerated directly from its seed column.

use std::fmt::Write as _;

use crate::bounds::{eval_bounds, format_bound};
use crate::engine::{default_max_iter, run_policy_iteration, SequentialRule, Strategy};
use crate::instance::{random_mdp, GenSpec};
use crate::mdp::Policy;
use crate::oracle::{build_policy_order, ruled_out_per_iteration};
use crate::rng::{derive_seed, RunRng};
use crate::scalar::Rational;
use crate::Error;

/// Salts for per-run seed derivation from the instance seed.
const SALT_STRATEGY: u64 = 1;
const SALT_START: u64 = 2;

/// CSV schema version; bump when the column set changes.
pub const CSV_VERSION: &str = "v1";

pub const CSV_HEADER: &str = "seed,n,k,gamma,strategy,start_policy,iterations,\
resamples_total,max_t_size,sum_ruled_out,bound_value,terminated";

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StrategyKind {
    Greedy,
    Random,
    SequentialLowest,
    SequentialHighest,
    SequentialRandom,
}

impl StrategyKind {
    pub fn parse(strategy: &str, seq_rule: &str) -> Result<Self, Error> {
        match strategy {
            "greedy" => Ok(StrategyKind::Greedy),
            "random" => Ok(StrategyKind::Random),
            "sequential" => match seq_rule {
                "lowest" => Ok(StrategyKind::SequentialLowest),
                "highest" => Ok(StrategyKind::SequentialHighest),
                "random" => Ok(StrategyKind::SequentialRandom),
                other => Err(Error::InvalidArgument(format!(
                    "unknown sequential rule `{other}` (expected lowest, highest, or random)"
                ))),
            },
            other => Err(Error::UnsupportedStrategy(other.to_string())),
        }
    }

    fn to_strategy(self, seed: u64) -> Strategy {
        match self {
            StrategyKind::Greedy => Strategy::Greedy,
            StrategyKind::Random => Strategy::Random { seed },
            StrategyKind::SequentialLowest => Strategy::Sequential {
                rule: SequentialRule::LowestState,
            },
            StrategyKind::SequentialHighest => Strategy::Sequential {
                rule: SequentialRule::HighestState,
            },
            StrategyKind::SequentialRandom => Strategy::Sequential {
                rule: SequentialRule::RandomSingleton { seed },
            },
        }
    }

    /// Name used in the bound-formula lookup.
    fn bound_key(self) -> &'static str {
        match self {
            StrategyKind::Greedy => "greedy",
            StrategyKind::Random => "random",
            _ => "trivial",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StartRule {
    Zero,
    Random,
}

impl StartRule {
    fn label(self) -> &'static str {
        match self {
            StartRule::Zero => "zero",
            StartRule::Random => "random",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub n_lo: usize,
    pub n_hi: usize,
    pub k: usize,
    pub instances: u64,
    pub strategy: StrategyKind,
    pub base_seed: u64,
    /// Build the full policy order per run and record ruled-out counts.
    pub oracle: bool,
    pub gamma: Rational,
    pub density: f64,
    pub start: StartRule,
    pub max_iter: Option<u64>,
    pub order_cap: u64,
}

#[derive(Clone, Debug)]
pub struct ExperimentRow {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub gamma_text: String,
    pub strategy: String,
    pub start_policy: &'static str,
    pub iterations: u64,
    pub resamples_total: u64,
    pub max_t_size: u64,
    pub sum_ruled_out: Option<u64>,
    pub bound_value: f64,
    pub terminated: bool,
}

/// Runs the whole sweep. Returns the rows and any bound-exceedance
/// warnings; randomized-selection bounds are probabilistic, so exceedances
/// are reported rather than failed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<ExperimentRow>, Vec<String>), Error> {
    if cfg.n_lo < 1 || cfg.n_lo > cfg.n_hi {
        return Err(Error::InvalidArgument(format!(
            "bad state-count range {}..{}",
            cfg.n_lo, cfg.n_hi
        )));
    }
    if cfg.k < 2 {
        return Err(Error::InvalidArgument(
            "experiments need at least two actions".to_string(),
        ));
    }
    if cfg.instances == 0 {
        return Err(Error::InvalidArgument(
            "experiments need at least one instance".to_string(),
        ));
    }

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut counter: u64 = 0;
    for n in cfg.n_lo..=cfg.n_hi {
        for _ in 0..cfg.instances {
            let seed = cfg.base_seed.wrapping_add(counter);
            counter += 1;
            let spec = GenSpec {
                gamma: cfg.gamma.clone(),
                density: cfg.density,
                ..GenSpec::new(n, cfg.k, seed)
            };
            let mdp = random_mdp(&spec)?;
            let start = match cfg.start {
                StartRule::Zero => Policy::zero(n),
                StartRule::Random => {
                    let mut rng = RunRng::from_seed(derive_seed(seed, SALT_START));
                    Policy::new((0..n).map(|_| rng.below(cfg.k as u64) as usize).collect())
                }
            };
            let strategy = cfg.strategy.to_strategy(derive_seed(seed, SALT_STRATEGY));
            let max_iter = cfg.max_iter.unwrap_or_else(|| default_max_iter(n, cfg.k));
            let trace = run_policy_iteration(&mdp, &start, strategy, max_iter)?;

            let sum_ruled_out = if cfg.oracle {
                let order = build_policy_order(&mdp, cfg.order_cap)?;
                Some(ruled_out_per_iteration(&trace, &order)?.iter().sum())
            } else {
                None
            };

            let bound_value = eval_bounds(n, cfg.k, cfg.strategy.bound_key())?;
            if trace.terminated && (trace.iterations() as f64) > bound_value {
                warnings.push(format!(
                    "seed={seed} n={n} k={} strategy={} took {} iterations, above the bound {}",
                    cfg.k,
                    trace.strategy_label,
                    trace.iterations(),
                    format_bound(bound_value)
                ));
            }

            rows.push(ExperimentRow {
                seed,
                n,
                k: cfg.k,
                gamma_text: cfg.gamma.to_string(),
                strategy: trace.strategy_label.clone(),
                start_policy: cfg.start.label(),
                iterations: trace.iterations() as u64,
                resamples_total: trace.total_resamples(),
                max_t_size: trace.max_t_size() as u64,
                sum_ruled_out,
                bound_value,
                terminated: trace.terminated,
            });
        }
    }
    Ok((rows, warnings))
}

/// Renders rows in the fixed column order, preceded by the version line.
pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::new();
    writeln!(out, "# pilab experiment csv {CSV_VERSION}").unwrap();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            row.seed,
            row.n,
            row.k,
            row.gamma_text,
            row.strategy,
            row.start_policy,
            row.iterations,
            row.resamples_total,
            row.max_t_size,
            row.sum_ruled_out.map(|v| v.to_string()).unwrap_or_default(),
            format_bound(row.bound_value),
            row.terminated
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            n_lo: 2,
            n_hi: 4,
            k: 2,
            instances: 5,
            strategy: StrategyKind::Greedy,
            base_seed: 500,
            oracle: true,
            gamma: Rational::new(9, 10),
            density: 1.0,
            start: StartRule::Zero,
            max_iter: None,
            order_cap: crate::oracle::DEFAULT_ENUM_CAP,
        }
    }

    #[test]
    fn greedy_rows_respect_the_proven_bounds() {
        let (rows, warnings) = run_experiment(&config()).unwrap();
        assert_eq!(rows.len(), 15);
        assert!(warnings.is_empty(), "{warnings:?}");
        for row in &rows {
            assert!(row.terminated);
            assert!((row.iterations as f64) <= row.bound_value);
            // The trivial policy-count ceiling holds for every run.
            assert!((row.iterations as f64) <= 2f64.powi(row.n as i32));
            // Every step rules out at least the current policy.
            assert!(row.sum_ruled_out.unwrap() >= row.iterations);
        }
    }

    #[test]
    fn csv_bytes_are_deterministic() {
        let a = rows_to_csv(&run_experiment(&config()).unwrap().0);
        let b = rows_to_csv(&run_experiment(&config()).unwrap().0);
        assert_eq!(a, b);
        assert!(a.starts_with("# pilab experiment csv v1\nseed,n,k,gamma,"));
    }

    #[test]
    fn random_strategy_records_resamples() {
        let mut cfg = config();
        cfg.strategy = StrategyKind::Random;
        cfg.oracle = false;
        let (rows, _) = run_experiment(&cfg).unwrap();
        for row in &rows {
            assert!(row.terminated);
            assert!(row.sum_ruled_out.is_none());
            assert_eq!(row.strategy, "random");
        }
        // Some run somewhere resamples; not asserted per-row, just that the
        // column is wired through.
        let csv = rows_to_csv(&rows);
        assert!(csv.lines().count() == rows.len() + 2);
    }

    #[test]
    fn sequential_strategies_terminate_at_the_trivial_bound() {
        for kind in [
            StrategyKind::SequentialLowest,
            StrategyKind::SequentialHighest,
            StrategyKind::SequentialRandom,
        ] {
            let mut cfg = config();
            cfg.strategy = kind;
            cfg.oracle = false;
            let (rows, warnings) = run_experiment(&cfg).unwrap();
            assert!(warnings.is_empty());
            for row in &rows {
                assert!(row.terminated);
                assert!((row.iterations as f64) <= row.bound_value);
            }
        }
    }

    #[test]
    fn start_rule_and_range_validation() {
        let mut cfg = config();
        cfg.n_lo = 5;
        cfg.n_hi = 3;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = config();
        cfg.k = 1;
        assert!(run_experiment(&cfg).is_err());
    }
}
