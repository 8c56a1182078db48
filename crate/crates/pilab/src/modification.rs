//! Improvement machinery: the modification set of a policy (all single-state
//! action switches that strictly improve the return), its reduction to one
//! pair per state, and policy modification itself.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::mdp::{Mdp, Policy, QFunction, ValueFunction};
use crate::scalar::Scalar;
use crate::solve::{evaluate_policy, q_values};
use crate::Error;

/// A set of `(state, action)` improvement pairs, kept sorted for
/// deterministic iteration. The set is *well defined* when no state appears
/// in more than one pair.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModificationSet {
    pairs: Vec<(usize, usize)>,
    well_defined: bool,
}

impl ModificationSet {
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        let mut well_defined = true;
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                well_defined = false;
                break;
            }
        }
        ModificationSet {
            pairs,
            well_defined,
        }
    }

    pub fn empty() -> Self {
        ModificationSet {
            pairs: Vec::new(),
            well_defined: true,
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_well_defined(&self) -> bool {
        self.well_defined
    }

    /// The distinct states touched by this set, ascending.
    pub fn states(&self) -> BTreeSet<usize> {
        self.pairs.iter().map(|&(s, _)| s).collect()
    }

    pub fn contains(&self, pair: (usize, usize)) -> bool {
        self.pairs.binary_search(&pair).is_ok()
    }

    pub fn is_subset_of(&self, other: &ModificationSet) -> bool {
        self.pairs.iter().all(|&p| other.contains(p))
    }

    /// `"s:a"` pairs joined by commas; `-` for the empty set.
    pub fn compact_text(&self) -> String {
        if self.pairs.is_empty() {
            return "-".to_string();
        }
        self.pairs
            .iter()
            .map(|(s, a)| format!("{s}:{a}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// All pairs `(s, a)` whose one-step value `q(s, a)` strictly exceeds
/// `v(s)`. Strictness is exact in rational mode and must clear the float
/// tolerance in float mode.
pub fn modification_set_from<S: Scalar>(
    policy: &Policy,
    v: &ValueFunction<S>,
    q: &QFunction<S>,
) -> ModificationSet {
    let mut pairs = Vec::new();
    for s in 0..v.num_states() {
        for a in 0..q.num_actions() {
            if a == policy.action(s) {
                continue;
            }
            if q.get(s, a).scalar_cmp(v.get(s)) == Ordering::Greater {
                pairs.push((s, a));
            }
        }
    }
    ModificationSet::new(pairs)
}

/// Evaluates `policy` and returns its modification set.
pub fn modification_set<S: Scalar>(
    mdp: &Mdp<S>,
    policy: &Policy,
) -> Result<ModificationSet, Error> {
    let v = evaluate_policy(mdp, policy)?;
    let q = q_values(mdp, &v);
    Ok(modification_set_from(policy, &v, &q))
}

/// Reduces a modification set to one pair per state, keeping the pair with
/// the largest `q` value and breaking ties toward the lowest action index.
/// The result covers exactly the same states.
pub fn reduce_to_well_defined<S: Scalar>(t: &ModificationSet, q: &QFunction<S>) -> ModificationSet {
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for &(s, a) in t.pairs() {
        match kept.last_mut() {
            Some(&mut (ks, ref mut ka)) if ks == s => {
                // Pairs are sorted, so `a > *ka`; replace only on strictly
                // larger q, which also implements the lowest-index tie-break.
                if q.get(s, a).scalar_cmp(q.get(s, *ka)) == Ordering::Greater {
                    *ka = a;
                }
            }
            _ => kept.push((s, a)),
        }
    }
    ModificationSet::new(kept)
}

/// The policy that agrees with `policy` outside `u`'s states and plays
/// `u`'s action inside them. `u` must be well defined.
pub fn modify(policy: &Policy, u: &ModificationSet) -> Result<Policy, Error> {
    if !u.is_well_defined() {
        return Err(Error::NotWellDefined);
    }
    let mut out = policy.clone();
    for &(s, a) in u.pairs() {
        if s >= policy.num_states() {
            return Err(Error::InvalidArgument(format!(
                "modification state {s} exceeds policy size {}",
                policy.num_states()
            )));
        }
        out.set_action(s, a);
    }
    Ok(out)
}
