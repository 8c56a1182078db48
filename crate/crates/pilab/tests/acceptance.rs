//! Acceptance suite.
//!
//! Each test implements one acceptance criterion at its stated tolerance and
//! prints a single `ACCEPTANCE <id> ...: PASS` line (visible with
//! `cargo test --test acceptance -- --nocapture`). The criteria:
//!
//! 1. every strategy converges to the brute-force optimum on a 200-instance
//!    family (exact equality);
//! 2. strict ascent between consecutive trace policies, zero exceptions;
//! 3. the full structural-check campaign reports zero violations on 100+
//!    instances per action count;
//! 4. greedy iteration counts stay within the closed-form ceilings,
//!    zero tolerance;
//! 5. the exact lattice mean of not-above counts meets `2^(|L|-1)` on 50+
//!    instances with reachable reduced sets of size 2..4;
//! 6. the desk instances behave exactly as documented;
//! 7. fixed seeds give byte-identical trace and CSV artifacts;
//! 8. float mode agrees with exact mode within 1e-9 and visits the same
//!    policies.

use std::collections::BTreeSet;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use pilab::bounds::{greedy_multi, greedy_two_action};
use pilab::engine::{default_max_iter, run_policy_iteration, SequentialRule, Strategy, Trace};
use pilab::instance::{builtin_instance, random_mdp, GenSpec};
use pilab::mdp::{Mdp, Policy, ValueFunction};
use pilab::oracle::{build_policy_order, verify_corollary10, PolicyOrder, DEFAULT_ENUM_CAP};
use pilab::order::{compare_values, Comparison};
use pilab::rng::derive_seed;
use pilab::scalar::{Rational, Scalar};
use pilab::verify::{parse_check_list, run_verify_campaign, VerifyConfig};

const BASE_SEED: u64 = 0x00AC_CE97;

struct Case {
    seed: u64,
    n: usize,
    k: usize,
    mdp: Mdp<Rational>,
    order: PolicyOrder<Rational>,
    optimal: ValueFunction<Rational>,
    /// One trace per strategy in [`strategies_for`] order, zero start.
    runs: Vec<(Strategy, Trace<Rational>)>,
}

fn strategies_for(seed: u64) -> Vec<Strategy> {
    vec![
        Strategy::Greedy,
        Strategy::Random {
            seed: derive_seed(seed, 101),
        },
        Strategy::Random {
            seed: derive_seed(seed, 102),
        },
        Strategy::Random {
            seed: derive_seed(seed, 103),
        },
        Strategy::Sequential {
            rule: SequentialRule::LowestState,
        },
        Strategy::Sequential {
            rule: SequentialRule::HighestState,
        },
        Strategy::Sequential {
            rule: SequentialRule::RandomSingleton {
                seed: derive_seed(seed, 104),
            },
        },
    ]
}

/// 200 exact instances: 120 two-action (n up to 7) and 80 three-action
/// (n up to 5), mixing discounts and transition densities.
fn family() -> &'static Vec<Case> {
    static FAMILY: OnceLock<Vec<Case>> = OnceLock::new();
    FAMILY.get_or_init(|| {
        let mut shapes = Vec::new();
        for n in 2..=7 {
            shapes.push((n, 2usize));
        }
        for n in 2..=5 {
            shapes.push((n, 3usize));
        }
        let mut cases = Vec::new();
        let mut counter = 0u64;
        for (n, k) in shapes {
            for i in 0..20u64 {
                let seed = BASE_SEED.wrapping_add(counter);
                counter += 1;
                let gamma = if i % 2 == 0 {
                    Rational::new(9, 10)
                } else {
                    Rational::new(1, 2)
                };
                let density = match i % 3 {
                    0 => 1.0,
                    1 => 0.6,
                    _ => 0.4,
                };
                let spec = GenSpec {
                    gamma,
                    density,
                    ..GenSpec::new(n, k, seed)
                };
                let mdp = random_mdp(&spec).expect("valid generated instance");
                let order = build_policy_order(&mdp, DEFAULT_ENUM_CAP).expect("within cap");
                let optimal = order.optimal_value();
                let max_iter = default_max_iter(n, k);
                let runs = strategies_for(seed)
                    .into_iter()
                    .map(|strategy| {
                        let trace =
                            run_policy_iteration(&mdp, &Policy::zero(n), strategy, max_iter)
                                .expect("run succeeds");
                        (strategy, trace)
                    })
                    .collect();
                cases.push(Case {
                    seed,
                    n,
                    k,
                    mdp,
                    order,
                    optimal,
                    runs,
                });
            }
        }
        assert_eq!(cases.len(), 200);
        cases
    })
}

/// Campaign configurations for the structural sweep: two-action instances
/// with n up to 6 and three-action instances with n up to 4, two transition
/// densities each, 100+ instances per action count.
fn sweep_configs() -> Vec<VerifyConfig> {
    let mut configs = Vec::new();
    for n in 2..=6 {
        for (j, density) in [1.0, 0.6].into_iter().enumerate() {
            configs.push(VerifyConfig {
                n,
                k: 2,
                instances: 10,
                base_seed: derive_seed(BASE_SEED, (n * 10 + j) as u64),
                checks: parse_check_list("all", 2).unwrap(),
                cap: DEFAULT_ENUM_CAP,
                gamma: Rational::new(9, 10),
                density,
            });
        }
    }
    for n in 2..=4 {
        for (j, density) in [1.0, 0.6].into_iter().enumerate() {
            configs.push(VerifyConfig {
                n,
                k: 3,
                instances: 17,
                base_seed: derive_seed(BASE_SEED, (n * 100 + j) as u64),
                checks: parse_check_list("all", 3).unwrap(),
                cap: DEFAULT_ENUM_CAP,
                gamma: Rational::new(9, 10),
                density,
            });
        }
    }
    configs
}

fn trace_values(trace: &Trace<Rational>) -> Vec<ValueFunction<Rational>> {
    let mut values: Vec<_> = trace.records.iter().map(|r| r.value.clone()).collect();
    values.push(trace.final_value.clone());
    values
}

fn visited_actions<S: Scalar>(trace: &Trace<S>) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = trace
        .records
        .iter()
        .map(|r| r.policy.actions().to_vec())
        .collect();
    out.push(trace.final_policy.actions().to_vec());
    out
}

#[test]
fn criterion_1_optimality() {
    let started = Instant::now();
    let mut runs = 0u64;
    for case in family() {
        for (strategy, trace) in &case.runs {
            runs += 1;
            assert!(
                trace.terminated,
                "seed={} {:?} hit the iteration cap",
                case.seed, strategy
            );
            assert_eq!(
                trace.final_value, case.optimal,
                "seed={} {:?} converged away from the oracle optimum",
                case.seed, strategy
            );
        }
    }
    assert_eq!(runs, 1400);
    println!(
        "ACCEPTANCE 1 optimality: PASS (200 instances, {runs} runs, {:.1?})",
        started.elapsed()
    );
}

#[test]
fn criterion_2_strict_ascent() {
    let mut pairs = 0u64;
    for case in family() {
        for (strategy, trace) in &case.runs {
            let values = trace_values(trace);
            for window in values.windows(2) {
                pairs += 1;
                assert_eq!(
                    compare_values(&window[1], &window[0]),
                    Comparison::Better,
                    "seed={} {:?} non-improving step",
                    case.seed,
                    strategy
                );
            }
        }
    }
    println!("ACCEPTANCE 2 strict-ascent: PASS ({pairs} consecutive pairs)");
}

#[test]
fn criterion_3_structural_sweep() {
    let started = Instant::now();
    let mut by_k = [0u64; 2];
    for cfg in sweep_configs() {
        let outcome = run_verify_campaign(&cfg).expect("campaign runs");
        assert!(
            outcome.passed(),
            "violations at n={} k={} seed={}:\n{}",
            cfg.n,
            cfg.k,
            cfg.base_seed,
            outcome.to_text()
        );
        by_k[cfg.k - 2] += outcome.instances_run;
    }
    assert!(by_k[0] >= 100, "two-action sweep too small: {}", by_k[0]);
    assert!(by_k[1] >= 100, "three-action sweep too small: {}", by_k[1]);
    println!(
        "ACCEPTANCE 3 structural-sweep: PASS ({} + {} instances, {:.1?})",
        by_k[0],
        by_k[1],
        started.elapsed()
    );
}

#[test]
fn criterion_4_greedy_bound_conformance() {
    let mut checked = 0u64;
    let mut check = |n: usize, k: usize, seed: u64, trace: &Trace<Rational>| {
        assert!(trace.terminated);
        let iterations = trace.iterations() as f64;
        if k == 2 && n >= 3 {
            assert!(
                iterations <= greedy_two_action(n),
                "seed={seed}: {iterations} iterations over the two-action ceiling"
            );
        }
        assert!(
            iterations <= greedy_multi(n, k),
            "seed={seed}: {iterations} iterations over the general ceiling"
        );
        checked += 1;
    };

    // Greedy runs from the optimality family.
    for case in family() {
        let (_, trace) = &case.runs[0];
        check(case.n, case.k, case.seed, trace);
    }
    // Greedy runs over the structural-sweep instances.
    for cfg in sweep_configs() {
        for idx in 0..cfg.instances {
            let seed = cfg.base_seed.wrapping_add(idx);
            let spec = GenSpec {
                gamma: cfg.gamma.clone(),
                density: cfg.density,
                ..GenSpec::new(cfg.n, cfg.k, seed)
            };
            let mdp = random_mdp(&spec).unwrap();
            let trace = run_policy_iteration(
                &mdp,
                &Policy::zero(cfg.n),
                Strategy::Greedy,
                default_max_iter(cfg.n, cfg.k),
            )
            .unwrap();
            check(cfg.n, cfg.k, seed, &trace);
        }
    }
    println!("ACCEPTANCE 4 greedy-bounds: PASS ({checked} terminated greedy runs)");
}

#[test]
fn criterion_5_lattice_mean() {
    let started = Instant::now();
    let mut qualifying_instances = 0u64;
    let mut policies_checked = 0u64;
    for case in family() {
        let mut seen = BTreeSet::new();
        // Reachable policies with reduced-set size 2..4, from the greedy run
        // and the three random runs.
        for (_, trace) in &case.runs[..4] {
            for record in &trace.records {
                if (2..=4).contains(&record.l_set.len())
                    && seen.insert(record.policy.actions().to_vec())
                {
                    let report = verify_corollary10(&case.mdp, &record.policy, &case.order)
                        .expect("within caps");
                    assert!(
                        report.passed(),
                        "seed={} policy={}: {:?}",
                        case.seed,
                        record.policy.compact_text(),
                        report.violations
                    );
                    policies_checked += 1;
                }
            }
        }
        if !seen.is_empty() {
            qualifying_instances += 1;
        }
    }
    assert!(
        qualifying_instances >= 50,
        "only {qualifying_instances} instances reached a reduced set of size 2..4"
    );
    println!(
        "ACCEPTANCE 5 lattice-mean: PASS ({qualifying_instances} instances, {policies_checked} policies, {:.1?})",
        started.elapsed()
    );
}

#[test]
fn criterion_6_desk_instances() {
    // Three-policy greedy chain on M2.
    let m2 = builtin_instance("M2").unwrap();
    let trace = run_policy_iteration(&m2, &Policy::new(vec![0, 1]), Strategy::Greedy, 100).unwrap();
    assert!(trace.terminated);
    assert_eq!(
        visited_actions(&trace),
        vec![vec![0, 1], vec![0, 0], vec![1, 0]]
    );
    assert_eq!(
        trace.final_value,
        ValueFunction::new(vec![Rational::from_int(1), Rational::from_int(2)])
    );

    // One greedy step to the optimum on M2c.
    let m2c = builtin_instance("M2c").unwrap();
    let trace =
        run_policy_iteration(&m2c, &Policy::new(vec![1, 0]), Strategy::Greedy, 100).unwrap();
    assert_eq!(trace.iterations(), 1);
    assert_eq!(
        trace.final_value,
        ValueFunction::new(vec![Rational::from_int(2), Rational::from_int(2)])
    );

    // The documented incomparable pair on M2c.
    let order = build_policy_order(&m2c, DEFAULT_ENUM_CAP).unwrap();
    let a = order.index_of(&Policy::new(vec![0, 0])).unwrap();
    let b = order.index_of(&Policy::new(vec![1, 1])).unwrap();
    assert_eq!(order.relation(a, b), Comparison::Incomparable);

    println!("ACCEPTANCE 6 desk-instances: PASS");
}

#[test]
fn criterion_7_byte_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_pilab");

    let solve_run = |tag: &str| -> (Vec<u8>, Vec<u8>) {
        let path = dir.path().join(format!("solve-{tag}.trace"));
        let out = Command::new(bin)
            .args([
                "solve",
                "--gen",
                "n=6,k=2,seed=900,density=0.7",
                "--strategy",
                "random",
                "--seed",
                "17",
                "--trace",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        (out.stdout, std::fs::read(path).unwrap())
    };
    let (stdout_a, trace_a) = solve_run("a");
    let (stdout_b, trace_b) = solve_run("b");
    assert_eq!(stdout_a, stdout_b, "solve stdout drifted between runs");
    assert_eq!(trace_a, trace_b, "trace bytes drifted between runs");

    let experiment_run = |tag: &str| -> Vec<u8> {
        let path = dir.path().join(format!("exp-{tag}.csv"));
        let out = Command::new(bin)
            .args([
                "experiment",
                "--n-range",
                "2..5",
                "--k",
                "2",
                "--instances",
                "5",
                "--strategy",
                "random",
                "--seed",
                "23",
                "--oracle",
                "on",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        std::fs::read(path).unwrap()
    };
    assert_eq!(
        experiment_run("a"),
        experiment_run("b"),
        "experiment CSV drifted between runs"
    );
    println!("ACCEPTANCE 7 determinism: PASS (solve + experiment byte-identical)");
}

#[test]
fn criterion_8_float_exact_agreement() {
    let started = Instant::now();
    let mut runs = 0u64;
    for case in family() {
        let float_mdp = case.mdp.to_float();
        let max_iter = default_max_iter(case.n, case.k);
        for (strategy, exact_trace) in &case.runs {
            let float_trace =
                run_policy_iteration(&float_mdp, &Policy::zero(case.n), *strategy, max_iter)
                    .expect("float run succeeds");
            assert_eq!(
                visited_actions(exact_trace),
                visited_actions(&float_trace),
                "seed={} {:?}: float mode visited different policies",
                case.seed,
                strategy
            );
            for s in 0..case.n {
                let exact = exact_trace.final_value.get(s).to_f64();
                let float = *float_trace.final_value.get(s);
                assert!(
                    (exact - float).abs() <= 1e-9,
                    "seed={} {:?}: value at state {s} differs by {}",
                    case.seed,
                    strategy,
                    (exact - float).abs()
                );
            }
            runs += 1;
        }
    }
    assert_eq!(runs, 1400);
    println!(
        "ACCEPTANCE 8 float-exact-agreement: PASS ({runs} run pairs, {:.1?})",
        started.elapsed()
    );
}
