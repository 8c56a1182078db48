//! The general policy-iteration loop with pluggable improvement selection.
//!
//! One iteration evaluates the current policy, collects its improvement
//! pairs, reduces them to one pair per state, asks the strategy for a
//! nonempty well-defined subset, and applies it. The loop stops when no
//! improvement exists (the policy is optimal) or when the iteration cap is
//! reached.

use crate::mdp::{Mdp, Policy, ValueFunction};
use crate::modification::{modification_set_from, modify, reduce_to_well_defined, ModificationSet};
use crate::rng::{RunRng, RNG_ALGORITHM};
use crate::scalar::Scalar;
use crate::solve::{evaluate_policy, q_values};
use crate::Error;

/// Tie-break rule for strategies that accept a single improvement per step.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SequentialRule {
    LowestState,
    HighestState,
    RandomSingleton { seed: u64 },
}

/// Improvement-selection strategy. Randomized variants carry their seed; no
/// strategy reads ambient entropy.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Strategy {
    /// Accept every available improvement.
    Greedy,
    /// Accept each improvement independently with probability 1/2,
    /// redrawing (and counting the redraw) if the result is empty.
    Random { seed: u64 },
    /// Accept exactly one improvement per step.
    Sequential { rule: SequentialRule },
}

impl Strategy {
    pub fn label(&self) -> String {
        match self {
            Strategy::Greedy => "greedy".to_string(),
            Strategy::Random { .. } => "random".to_string(),
            Strategy::Sequential { rule } => match rule {
                SequentialRule::LowestState => "sequential-lowest".to_string(),
                SequentialRule::HighestState => "sequential-highest".to_string(),
                SequentialRule::RandomSingleton { .. } => "sequential-random".to_string(),
            },
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Strategy::Greedy => None,
            Strategy::Random { seed } => Some(*seed),
            Strategy::Sequential { rule } => match rule {
                SequentialRule::RandomSingleton { seed } => Some(*seed),
                _ => None,
            },
        }
    }
}

/// Everything observed at one iteration, before the policy was modified.
#[derive(Clone, Debug)]
pub struct IterationRecord<S: Scalar> {
    pub index: usize,
    pub policy: Policy,
    pub value: ValueFunction<S>,
    /// All improving pairs of `policy`.
    pub t_set: ModificationSet,
    /// `t_set` reduced to one pair per state.
    pub l_set: ModificationSet,
    /// The nonempty subset of `l_set` the strategy accepted.
    pub selected: ModificationSet,
    /// Empty random draws discarded before `selected` was produced.
    pub resamples: u64,
}

/// A complete run: per-iteration records plus the final policy and value.
#[derive(Clone, Debug)]
pub struct Trace<S: Scalar> {
    pub records: Vec<IterationRecord<S>>,
    pub final_policy: Policy,
    pub final_value: ValueFunction<S>,
    /// True when the loop stopped because no improvement exists; false when
    /// the iteration cap was hit.
    pub terminated: bool,
    pub strategy_label: String,
    pub rng_seed: Option<u64>,
    pub num_states: usize,
    pub num_actions: usize,
}

impl<S: Scalar> Trace<S> {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn total_resamples(&self) -> u64 {
        self.records.iter().map(|r| r.resamples).sum()
    }

    pub fn max_t_size(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.t_set.len())
            .max()
            .unwrap_or(0)
    }

    /// Line-oriented text log. One line per iteration:
    /// `index policy |T| |L| selected resamples`, with `#` header and footer
    /// lines carrying the mode, strategy, generator, and final state.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# pilab trace v1\n");
        out.push_str(&format!("# mode {}\n", S::MODE_NAME));
        out.push_str(&format!("# strategy {}\n", self.strategy_label));
        match self.rng_seed {
            Some(seed) => out.push_str(&format!("# rng {RNG_ALGORITHM} seed {seed}\n")),
            None => out.push_str("# rng none\n"),
        }
        out.push_str(&format!(
            "# shape n {} k {}\n",
            self.num_states, self.num_actions
        ));
        for record in &self.records {
            out.push_str(&format!(
                "{} {} {} {} {} {}\n",
                record.index,
                record.policy.compact_text(),
                record.t_set.len(),
                record.l_set.len(),
                record.selected.compact_text(),
                record.resamples
            ));
        }
        out.push_str(&format!(
            "# final {} terminated {}\n",
            self.final_policy.compact_text(),
            self.terminated
        ));
        out.push_str(&format!(
            "# iterations {} resamples {}\n",
            self.iterations(),
            self.total_resamples()
        ));
        let values = self
            .final_value
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!("# value {values}\n"));
        out
    }
}

/// Greedy selection: the whole reduced set.
pub fn select_greedy(l: &ModificationSet) -> Result<ModificationSet, Error> {
    if l.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(l.clone())
}

/// Random selection: each pair independently with probability 1/2, redrawn
/// while empty. Returns the subset and the number of discarded empty draws;
/// conditioned on nonemptiness the subset is uniform.
pub fn select_random(
    l: &ModificationSet,
    rng: &mut RunRng,
) -> Result<(ModificationSet, u64), Error> {
    if l.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut resamples = 0u64;
    loop {
        let pairs: Vec<(usize, usize)> = l.pairs().iter().copied().filter(|_| rng.coin()).collect();
        if pairs.is_empty() {
            resamples += 1;
            continue;
        }
        return Ok((ModificationSet::new(pairs), resamples));
    }
}

/// Sequential selection: a single pair chosen by the rule.
pub fn select_sequential(
    l: &ModificationSet,
    rule: SequentialRule,
    rng: Option<&mut RunRng>,
) -> Result<ModificationSet, Error> {
    if l.is_empty() {
        return Err(Error::EmptySelection);
    }
    let pair = match rule {
        SequentialRule::LowestState => l.pairs()[0],
        SequentialRule::HighestState => *l.pairs().last().expect("nonempty"),
        SequentialRule::RandomSingleton { .. } => {
            let rng = rng.expect("random singleton rule needs a generator");
            l.pairs()[rng.below(l.len() as u64) as usize]
        }
    };
    Ok(ModificationSet::new(vec![pair]))
}

/// Default iteration cap: twice the policy count, capped at 10^7. The loop
/// provably terminates, but float tolerances could in principle cycle; the
/// cap turns that into a diagnosable report.
pub fn default_max_iter(n: usize, k: usize) -> u64 {
    const HARD_CAP: u128 = 10_000_000;
    let policies = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    policies.saturating_mul(2).min(HARD_CAP) as u64
}

/// Runs policy iteration from `start` under `strategy`, recording every
/// iteration. `max_iter` must be at least 1.
pub fn run_policy_iteration<S: Scalar>(
    mdp: &Mdp<S>,
    start: &Policy,
    strategy: Strategy,
    max_iter: u64,
) -> Result<Trace<S>, Error> {
    mdp.ensure_valid()?;
    mdp.check_policy(start)?;
    if max_iter == 0 {
        return Err(Error::InvalidArgument(
            "iteration cap must be at least 1".to_string(),
        ));
    }

    let mut rng = strategy.seed().map(RunRng::from_seed);
    let mut policy = start.clone();
    let mut records = Vec::new();
    let terminated;
    let final_value;

    loop {
        let value = evaluate_policy(mdp, &policy)?;
        let q = q_values(mdp, &value);
        let t_set = modification_set_from(&policy, &value, &q);
        if t_set.is_empty() {
            terminated = true;
            final_value = value;
            break;
        }
        if records.len() as u64 >= max_iter {
            terminated = false;
            final_value = value;
            break;
        }
        let l_set = reduce_to_well_defined(&t_set, &q);
        let (selected, resamples) = match strategy {
            Strategy::Greedy => (select_greedy(&l_set)?, 0),
            Strategy::Random { .. } => select_random(&l_set, rng.as_mut().expect("seeded above"))?,
            Strategy::Sequential { rule } => (select_sequential(&l_set, rule, rng.as_mut())?, 0),
        };
        let next = modify(&policy, &selected)?;
        records.push(IterationRecord {
            index: records.len(),
            policy,
            value,
            t_set,
            l_set,
            selected,
            resamples,
        });
        policy = next;
    }

    Ok(Trace {
        records,
        final_policy: policy,
        final_value,
        terminated,
        strategy_label: strategy.label(),
        rng_seed: strategy.seed(),
        num_states: mdp.num_states(),
        num_actions: mdp.num_actions(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::builtin_instance;
    use crate::order::{compare_values, Comparison};
    use crate::scalar::Rational;

    #[test]
    fn greedy_returns_input_set() {
        let l = ModificationSet::new(vec![(1, 0)]);
        assert_eq!(select_greedy(&l).unwrap(), l);
        let l2 = ModificationSet::new(vec![(0, 0), (1, 1)]);
        assert_eq!(select_greedy(&l2).unwrap(), l2);
        assert!(matches!(
            select_greedy(&ModificationSet::empty()),
            Err(Error::EmptySelection)
        ));
    }

    #[test]
    fn random_singleton_input_always_selected() {
        let l = ModificationSet::new(vec![(3, 1)]);
        let mut rng = RunRng::from_seed(9);
        for _ in 0..32 {
            let (subset, _) = select_random(&l, &mut rng).unwrap();
            assert_eq!(subset, l);
        }
    }

    #[test]
    fn random_selection_is_uniform_over_nonempty_subsets() {
        let l = ModificationSet::new(vec![(0, 1), (2, 1)]);
        let mut rng = RunRng::from_seed(1234);
        let mut counts = [0u32; 3];
        let draws = 40_000;
        for _ in 0..draws {
            let (subset, _) = select_random(&l, &mut rng).unwrap();
            let idx = match subset.pairs() {
                [(0, 1)] => 0,
                [(2, 1)] => 1,
                [(0, 1), (2, 1)] => 2,
                other => panic!("unexpected subset {other:?}"),
            };
            counts[idx] += 1;
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "frequency {freq}");
        }
    }

    #[test]
    fn random_selection_is_deterministic_in_the_seed() {
        let l = ModificationSet::new(vec![(0, 1), (1, 1), (4, 0)]);
        let run = |seed: u64| {
            let mut rng = RunRng::from_seed(seed);
            (0..20)
                .map(|_| select_random(&l, &mut rng).unwrap().0)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
    }

    #[test]
    fn sequential_rules_pick_the_documented_pair() {
        let l = ModificationSet::new(vec![(0, 0), (3, 1)]);
        let low = select_sequential(&l, SequentialRule::LowestState, None).unwrap();
        assert_eq!(low.pairs(), &[(0, 0)]);
        let high = select_sequential(&l, SequentialRule::HighestState, None).unwrap();
        assert_eq!(high.pairs(), &[(3, 1)]);

        let singleton = ModificationSet::new(vec![(2, 1)]);
        let mut rng = RunRng::from_seed(0);
        for rule in [
            SequentialRule::LowestState,
            SequentialRule::HighestState,
            SequentialRule::RandomSingleton { seed: 0 },
        ] {
            let got = select_sequential(&singleton, rule, Some(&mut rng)).unwrap();
            assert_eq!(got.pairs(), &[(2, 1)]);
        }
    }

    #[test]
    fn optimal_start_terminates_with_no_records() {
        let m2 = builtin_instance("M2").unwrap();
        let trace =
            run_policy_iteration(&m2, &Policy::new(vec![1, 0]), Strategy::Greedy, 100).unwrap();
        assert_eq!(trace.iterations(), 0);
        assert!(trace.terminated);
        assert_eq!(trace.final_policy.actions(), &[1, 0]);
    }

    #[test]
    fn m2_greedy_walks_the_three_policy_chain() {
        let m2 = builtin_instance("M2").unwrap();
        let trace =
            run_policy_iteration(&m2, &Policy::new(vec![0, 1]), Strategy::Greedy, 100).unwrap();
        assert!(trace.terminated);
        assert_eq!(trace.iterations(), 2);
        assert_eq!(trace.records[0].policy.actions(), &[0, 1]);
        assert_eq!(trace.records[1].policy.actions(), &[0, 0]);
        assert_eq!(trace.final_policy.actions(), &[1, 0]);
        assert_eq!(
            trace.final_value.as_slice(),
            &[Rational::from_int(1), Rational::from_int(2)]
        );
    }

    #[test]
    fn m2c_greedy_applies_both_improvements_at_once() {
        let m2c = builtin_instance("M2c").unwrap();
        let trace =
            run_policy_iteration(&m2c, &Policy::new(vec![1, 0]), Strategy::Greedy, 100).unwrap();
        assert!(trace.terminated);
        assert_eq!(trace.iterations(), 1);
        assert_eq!(trace.final_policy.actions(), &[0, 1]);
        assert_eq!(
            trace.final_value.as_slice(),
            &[Rational::from_int(2), Rational::from_int(2)]
        );
    }

    #[test]
    fn consecutive_policies_strictly_improve() {
        let m2 = builtin_instance("M2").unwrap();
        let trace =
            run_policy_iteration(&m2, &Policy::new(vec![0, 1]), Strategy::Greedy, 100).unwrap();
        let mut values: Vec<_> = trace.records.iter().map(|r| r.value.clone()).collect();
        values.push(trace.final_value.clone());
        for pair in values.windows(2) {
            assert_eq!(compare_values(&pair[1], &pair[0]), Comparison::Better);
        }
    }

    #[test]
    fn iteration_cap_reports_unterminated() {
        let m2 = builtin_instance("M2").unwrap();
        let trace =
            run_policy_iteration(&m2, &Policy::new(vec![0, 1]), Strategy::Greedy, 1).unwrap();
        assert!(!trace.terminated);
        assert_eq!(trace.iterations(), 1);
    }

    #[test]
    fn traces_are_bit_identical_for_fixed_seeds() {
        let m2c = builtin_instance("M2c").unwrap();
        let run = || {
            run_policy_iteration(
                &m2c,
                &Policy::new(vec![1, 0]),
                Strategy::Random { seed: 99 },
                100,
            )
            .unwrap()
            .to_text()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn default_cap_is_twice_policy_count_until_the_hard_cap() {
        assert_eq!(default_max_iter(3, 2), 16);
        assert_eq!(default_max_iter(4, 3), 162);
        assert_eq!(default_max_iter(40, 2), 10_000_000);
    }

    #[test]
    fn trace_text_layout() {
        let m2 = builtin_instance("M2").unwrap();
        let trace =
            run_policy_iteration(&m2, &Policy::new(vec![0, 1]), Strategy::Greedy, 100).unwrap();
        let text = trace.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# pilab trace v1");
        assert_eq!(lines[1], "# mode exact");
        assert_eq!(lines[2], "# strategy greedy");
        assert_eq!(lines[3], "# rng none");
        assert_eq!(lines[4], "# shape n 2 k 2");
        assert_eq!(lines[5], "0 01 1 1 1:0 0");
        assert_eq!(lines[6], "1 00 1 1 0:1 0");
        assert_eq!(lines[7], "# final 10 terminated true");
        assert_eq!(lines[8], "# iterations 2 resamples 0");
        assert_eq!(lines[9], "# value 1 2");
    }
}
