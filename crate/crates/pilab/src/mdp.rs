//! Finite discounted MDP data model: the instance tuple, policies, and the
//! per-policy value and Q tables.
//!
//! States and actions are dense indices `0..n` and `0..k`. Transition and
//! reward tables are stored flat; `Mdp::new` checks shapes only, so that
//! deliberately broken instances can still be constructed and then reported
//! by [`Mdp::validate`].

use std::cmp::Ordering;
use std::fmt;

use crate::scalar::{Scalar, FLOAT_ROW_SUM_TOL};
use crate::Error;

/// A finite MDP with `n` states, `k` actions, transition table `P`,
/// expected-reward table `R`, and discount `gamma` in `[0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mdp<S: Scalar> {
    n: usize,
    k: usize,
    /// `P(s' | s, a)` at index `(s * k + a) * n + s'`.
    transition: Vec<S>,
    /// `R(s, a)` at index `s * k + a`.
    reward: Vec<S>,
    gamma: S,
}

/// One violated instance invariant, with the indices that pin it down.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoStates,
    NoActions,
    TransitionRange {
        state: usize,
        action: usize,
        next: usize,
        value: String,
    },
    RowSum {
        state: usize,
        action: usize,
        sum: String,
    },
    GammaRange {
        gamma: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "state count must be at least 1"),
            Violation::NoActions => write!(f, "action count must be at least 1"),
            Violation::TransitionRange {
                state,
                action,
                next,
                value,
            } => write!(f, "P({next}|{state},{action}) = {value} is outside [0, 1]"),
            Violation::RowSum { state, action, sum } => {
                write!(
                    f,
                    "transition row (s={state}, a={action}) sums to {sum}, not 1"
                )
            }
            Violation::GammaRange { gamma } => {
                write!(f, "gamma = {gamma} is outside [0, 1)")
            }
        }
    }
}

impl<S: Scalar> Mdp<S> {
    /// Builds an MDP from flat tables. Only the table shapes are enforced
    /// here; run [`Mdp::validate`] for the numeric invariants.
    pub fn new(
        n: usize,
        k: usize,
        transition: Vec<S>,
        reward: Vec<S>,
        gamma: S,
    ) -> Result<Self, Error> {
        if transition.len() != n * k * n {
            return Err(Error::InvalidArgument(format!(
                "transition table has {} entries, expected n*k*n = {}",
                transition.len(),
                n * k * n
            )));
        }
        if reward.len() != n * k {
            return Err(Error::InvalidArgument(format!(
                "reward table has {} entries, expected n*k = {}",
                reward.len(),
                n * k
            )));
        }
        Ok(Mdp {
            n,
            k,
            transition,
            reward,
            gamma,
        })
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn num_actions(&self) -> usize {
        self.k
    }

    pub fn gamma(&self) -> &S {
        &self.gamma
    }

    pub fn transition(&self, state: usize, action: usize, next: usize) -> &S {
        &self.transition[(state * self.k + action) * self.n + next]
    }

    pub fn reward(&self, state: usize, action: usize) -> &S {
        &self.reward[state * self.k + action]
    }

    pub fn set_transition(&mut self, state: usize, action: usize, next: usize, value: S) {
        self.transition[(state * self.k + action) * self.n + next] = value;
    }

    pub fn set_reward(&mut self, state: usize, action: usize, value: S) {
        self.reward[state * self.k + action] = value;
    }

    pub fn set_gamma(&mut self, gamma: S) {
        self.gamma = gamma;
    }

    /// Checks every instance invariant and returns all violations found:
    /// probability ranges, exact (or near-exact, in float mode) row sums,
    /// the discount range, and nonempty state/action sets.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        if self.n == 0 {
            violations.push(Violation::NoStates);
        }
        if self.k == 0 {
            violations.push(Violation::NoActions);
        }
        let zero = S::zero();
        let one = S::one();
        for s in 0..self.n {
            for a in 0..self.k {
                let mut sum = S::zero();
                for next in 0..self.n {
                    let p = self.transition(s, a, next);
                    if p.scalar_cmp(&zero) == Ordering::Less
                        || p.scalar_cmp(&one) == Ordering::Greater
                    {
                        violations.push(Violation::TransitionRange {
                            state: s,
                            action: a,
                            next,
                            value: p.to_string(),
                        });
                    }
                    sum = sum + p.clone();
                }
                let row_ok = if S::EXACT {
                    sum == one
                } else {
                    sum.approx_eq(&one, FLOAT_ROW_SUM_TOL)
                };
                if !row_ok {
                    violations.push(Violation::RowSum {
                        state: s,
                        action: a,
                        sum: sum.to_string(),
                    });
                }
            }
        }
        if self.gamma.scalar_cmp(&zero) == Ordering::Less
            || self.gamma.scalar_cmp(&one) != Ordering::Less
        {
            violations.push(Violation::GammaRange {
                gamma: self.gamma.to_string(),
            });
        }
        violations
    }

    /// Errors with a joined violation list unless the instance is valid.
    pub fn ensure_valid(&self) -> Result<(), Error> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            let text = violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::InvalidInstance(text))
        }
    }

    /// Checks that a policy is total over this instance's states and uses
    /// only valid action indices.
    pub fn check_policy(&self, policy: &Policy) -> Result<(), Error> {
        if policy.num_states() != self.n {
            return Err(Error::InvalidArgument(format!(
                "policy covers {} states, instance has {}",
                policy.num_states(),
                self.n
            )));
        }
        for s in 0..self.n {
            if policy.action(s) >= self.k {
                return Err(Error::InvalidArgument(format!(
                    "policy action {} at state {s} exceeds action count {}",
                    policy.action(s),
                    self.k
                )));
            }
        }
        Ok(())
    }
}

/// A deterministic stationary policy: one action per state.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Policy {
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(actions: Vec<usize>) -> Self {
        Policy { actions }
    }

    /// The all-zeros policy (action 0 everywhere).
    pub fn zero(n: usize) -> Self {
        Policy {
            actions: vec![0; n],
        }
    }

    pub fn num_states(&self) -> usize {
        self.actions.len()
    }

    pub fn action(&self, state: usize) -> usize {
        self.actions[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn set_action(&mut self, state: usize, action: usize) {
        self.actions[state] = action;
    }

    /// Compact text form: concatenated digits while every action index fits
    /// in one digit (state 0 first), comma-separated indices otherwise.
    pub fn compact_text(&self) -> String {
        if self.actions.iter().all(|&a| a < 10) {
            self.actions.iter().map(|a| a.to_string()).collect()
        } else {
            self.actions
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
    }

    /// Rank of this policy in the lexicographic enumeration of all `k^n`
    /// policies (state 0 is the most significant position).
    pub fn lex_rank(&self, k: usize) -> usize {
        let mut rank: usize = 0;
        for &a in &self.actions {
            rank = rank * k + a;
        }
        rank
    }
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Policy({})", self.compact_text())
    }
}

/// Per-state expected discounted return of a fixed policy.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunction<S: Scalar> {
    values: Vec<S>,
}

impl<S: Scalar> ValueFunction<S> {
    pub fn new(values: Vec<S>) -> Self {
        ValueFunction { values }
    }

    pub fn num_states(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, state: usize) -> &S {
        &self.values[state]
    }

    pub fn iter(&self) -> impl Iterator<Item = &S> {
        self.values.iter()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.values
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.to_f64()).collect()
    }
}

/// Per-(state, action) expected return table for a fixed policy.
#[derive(Clone, Debug, PartialEq)]
pub struct QFunction<S: Scalar> {
    k: usize,
    values: Vec<S>,
}

impl<S: Scalar> QFunction<S> {
    pub fn new(k: usize, values: Vec<S>) -> Self {
        QFunction { k, values }
    }

    pub fn num_states(&self) -> usize {
        self.values.len() / self.k
    }

    pub fn num_actions(&self) -> usize {
        self.k
    }

    pub fn get(&self, state: usize, action: usize) -> &S {
        &self.values[state * self.k + action]
    }
}
