//! The partial order on policies induced by componentwise value dominance.

use std::cmp::Ordering;

use crate::mdp::{Mdp, Policy, ValueFunction};
use crate::scalar::Scalar;
use crate::solve::evaluate_policy;
use crate::Error;

/// Outcome of comparing two policies by their value functions.
///
/// `Better` means the first argument dominates componentwise with a strict
/// improvement somewhere; `Equivalent` means equal at every state;
/// `Incomparable` means each side is strictly ahead at some state.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
#[repr(u8)]
pub enum Comparison {
    Better,
    Worse,
    Equivalent,
    Incomparable,
}

impl Comparison {
    /// The comparison with the argument order swapped.
    pub fn flipped(self) -> Comparison {
        match self {
            Comparison::Better => Comparison::Worse,
            Comparison::Worse => Comparison::Better,
            other => other,
        }
    }

    /// Better-or-equivalent, i.e. the weak side of the order.
    pub fn is_at_least(self) -> bool {
        matches!(self, Comparison::Better | Comparison::Equivalent)
    }
}

/// Componentwise comparison of two value functions of equal length.
pub fn compare_values<S: Scalar>(a: &ValueFunction<S>, b: &ValueFunction<S>) -> Comparison {
    assert_eq!(
        a.num_states(),
        b.num_states(),
        "value functions from different instances"
    );
    let mut saw_greater = false;
    let mut saw_less = false;
    for s in 0..a.num_states() {
        match a.get(s).scalar_cmp(b.get(s)) {
            Ordering::Greater => saw_greater = true,
            Ordering::Less => saw_less = true,
            Ordering::Equal => {}
        }
    }
    match (saw_greater, saw_less) {
        (true, true) => Comparison::Incomparable,
        (true, false) => Comparison::Better,
        (false, true) => Comparison::Worse,
        (false, false) => Comparison::Equivalent,
    }
}

/// Evaluates both policies on `mdp` and compares the value functions.
pub fn compare<S: Scalar>(
    mdp: &Mdp<S>,
    first: &Policy,
    second: &Policy,
) -> Result<Comparison, Error> {
    let va = evaluate_policy(mdp, first)?;
    let vb = evaluate_policy(mdp, second)?;
    Ok(compare_values(&va, &vb))
}
