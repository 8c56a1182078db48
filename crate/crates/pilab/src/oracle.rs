//! Brute-force ground truth.
//!
//! At desk scale every one of the `k^n` policies can be evaluated, so the
//! full partial order over policy space is available as a lookup table.
//! The verifiers in this module certify, instance by instance, the
//! structural properties the iteration engine relies on: strict ascent,
//! single-state comparability, no revisits of state sets, the count of
//! policies ruled out per step, and the lattice mean that powers the
//! randomized-selection bound.
//!
//! Verifiers refuse float mode: a tolerance can both mask and fabricate a
//! strict inequality, and these checks are only meaningful when exact.

use std::collections::BTreeSet;

use crate::engine::Trace;
use crate::mdp::{Mdp, Policy, ValueFunction};
use crate::modification::{
    modification_set, modification_set_from, modify, reduce_to_well_defined, ModificationSet,
};
use crate::order::{compare_values, Comparison};
use crate::scalar::Scalar;
use crate::solve::{evaluate_policy, q_values};
use crate::Error;

/// Default ceiling on `k^n` for exhaustive enumeration. The relation table
/// is the binding constraint in practice: it holds `k^(2n)` entries.
pub const DEFAULT_ENUM_CAP: u64 = 1 << 20;

fn policy_count(n: usize, k: usize) -> u128 {
    (k as u128).saturating_pow(n as u32)
}

fn require_exact<S: Scalar>(what: &str) -> Result<(), Error> {
    if S::EXACT {
        Ok(())
    } else {
        Err(Error::ExactRequired(what.to_string()))
    }
}

/// All `k^n` policies in lexicographic order of their action vectors
/// (state 0 most significant).
pub fn enumerate_policies(n: usize, k: usize, cap: u64) -> Result<Vec<Policy>, Error> {
    let total = policy_count(n, k);
    if total > cap as u128 {
        return Err(Error::CapExceeded(format!(
            "k^n = {total} exceeds enumeration cap {cap}"
        )));
    }
    let total = total as usize;
    let mut out = Vec::with_capacity(total);
    for rank in 0..total {
        let mut actions = vec![0usize; n];
        let mut rest = rank;
        for s in (0..n).rev() {
            actions[s] = rest % k;
            rest /= k;
        }
        out.push(Policy::new(actions));
    }
    Ok(out)
}

/// The full policy space of one instance: every policy, its value function,
/// and the complete pairwise comparison table.
pub struct PolicyOrder<S: Scalar> {
    n: usize,
    k: usize,
    policies: Vec<Policy>,
    values: Vec<ValueFunction<S>>,
    /// `relation[i * len + j] = compare(policy_i, policy_j)`.
    relation: Vec<Comparison>,
}

/// Evaluates every policy and fills the comparison table.
pub fn build_policy_order<S: Scalar>(mdp: &Mdp<S>, cap: u64) -> Result<PolicyOrder<S>, Error> {
    mdp.ensure_valid()?;
    let n = mdp.num_states();
    let k = mdp.num_actions();
    let policies = enumerate_policies(n, k, cap)?;
    let values: Vec<ValueFunction<S>> = policies
        .iter()
        .map(|pi| evaluate_policy(mdp, pi))
        .collect::<Result<_, _>>()?;
    let len = policies.len();
    let mut relation = vec![Comparison::Equivalent; len * len];
    for i in 0..len {
        for j in i + 1..len {
            let cmp = compare_values(&values[i], &values[j]);
            relation[i * len + j] = cmp;
            relation[j * len + i] = cmp.flipped();
        }
    }
    Ok(PolicyOrder {
        n,
        k,
        policies,
        values,
        relation,
    })
}

impl<S: Scalar> PolicyOrder<S> {
    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn num_actions(&self) -> usize {
        self.k
    }

    pub fn policy(&self, index: usize) -> &Policy {
        &self.policies[index]
    }

    pub fn value(&self, index: usize) -> &ValueFunction<S> {
        &self.values[index]
    }

    pub fn relation(&self, i: usize, j: usize) -> Comparison {
        self.relation[i * self.policies.len() + j]
    }

    /// Index of a policy in the enumeration, i.e. its lexicographic rank.
    pub fn index_of(&self, policy: &Policy) -> Option<usize> {
        if policy.num_states() != self.n || policy.actions().iter().any(|&a| a >= self.k) {
            return None;
        }
        Some(policy.lex_rank(self.k))
    }

    /// Componentwise maximum over all value functions. Some policy attains
    /// the maximum at every state simultaneously; this is asserted.
    pub fn optimal_value(&self) -> ValueFunction<S> {
        let mut best: Vec<S> = self.values[0].as_slice().to_vec();
        for value in &self.values[1..] {
            for (slot, candidate) in best.iter_mut().zip(value.iter()) {
                if candidate.scalar_cmp(slot) == std::cmp::Ordering::Greater {
                    *slot = candidate.clone();
                }
            }
        }
        let best = ValueFunction::new(best);
        assert!(
            self.values
                .iter()
                .any(|v| compare_values(v, &best) == Comparison::Equivalent),
            "no single policy attains the componentwise maximum"
        );
        best
    }

    /// Number of policies `p` with `hi` better-or-equivalent to `p` and `p`
    /// strictly better than `lo`. Panics if either policy is not in the
    /// order.
    pub fn count_between(&self, lo: &Policy, hi: &Policy) -> u64 {
        let lo_idx = self.index_of(lo).expect("lo not in the order");
        let hi_idx = self.index_of(hi).expect("hi not in the order");
        let mut count = 0;
        for j in 0..self.len() {
            if self.relation(hi_idx, j).is_at_least()
                && self.relation(j, lo_idx) == Comparison::Better
            {
                count += 1;
            }
        }
        count
    }

    /// Structural self-check: reflexivity, antisymmetry, transitivity of the
    /// strict relation, and transitivity of equivalence. Returns offending
    /// triples as text. Cubic in the policy count; intended for small
    /// instances and tests.
    pub fn validate_structure(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let len = self.len();
        for i in 0..len {
            if self.relation(i, i) != Comparison::Equivalent {
                problems.push(format!("relation({i},{i}) is not Equivalent"));
            }
            for j in 0..len {
                if self.relation(i, j) != self.relation(j, i).flipped() {
                    problems.push(format!("relation({i},{j}) breaks antisymmetry"));
                }
            }
        }
        for i in 0..len {
            for j in 0..len {
                let ij = self.relation(i, j);
                if ij != Comparison::Better && ij != Comparison::Equivalent {
                    continue;
                }
                for t in 0..len {
                    let jt = self.relation(j, t);
                    let it = self.relation(i, t);
                    match (ij, jt) {
                        (Comparison::Better, Comparison::Better)
                        | (Comparison::Better, Comparison::Equivalent)
                        | (Comparison::Equivalent, Comparison::Better) => {
                            if it != Comparison::Better {
                                problems.push(format!("transitivity fails at ({i},{j},{t})"));
                            }
                        }
                        (Comparison::Equivalent, Comparison::Equivalent)
                            if it != Comparison::Equivalent =>
                        {
                            problems
                                .push(format!("equivalence transitivity fails at ({i},{j},{t})"));
                        }
                        _ => {}
                    }
                }
            }
        }
        problems
    }
}

/// All `2^|l|` policies `modify(pi, U)` for `U` ranging over subsets of
/// `l`, indexed by subset bitmask over `l`'s sorted pairs. Every result is
/// a distinct action map.
pub fn modification_lattice<S: Scalar>(
    mdp: &Mdp<S>,
    pi: &Policy,
    l: &ModificationSet,
) -> Result<Vec<Policy>, Error> {
    mdp.check_policy(pi)?;
    if !l.is_well_defined() {
        return Err(Error::NotWellDefined);
    }
    if l.len() > 20 {
        return Err(Error::CapExceeded(format!(
            "lattice over {} pairs is too large",
            l.len()
        )));
    }
    for &(s, a) in l.pairs() {
        if s >= pi.num_states() || a >= mdp.num_actions() {
            return Err(Error::InvalidArgument(format!(
                "pair ({s},{a}) does not fit the instance"
            )));
        }
        if pi.action(s) == a {
            return Err(Error::InvalidArgument(format!(
                "pair ({s},{a}) repeats the policy's own action"
            )));
        }
    }
    let mut out = Vec::with_capacity(1 << l.len());
    for mask in 0u32..(1u32 << l.len()) {
        let subset: Vec<(usize, usize)> = l
            .pairs()
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask >> bit & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        out.push(modify(pi, &ModificationSet::new(subset))?);
    }
    Ok(out)
}

/// Outcome of one verifier: how many cases were checked, any concrete
/// counterexamples, and free-form notes (skip reasons, computed statistics).
#[derive(Clone, Debug)]
pub struct LemmaReport {
    pub lemma_id: &'static str,
    pub instances_checked: u64,
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

impl LemmaReport {
    fn new(lemma_id: &'static str) -> Self {
        LemmaReport {
            lemma_id,
            instances_checked: 0,
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Machine-readable text block: a REPORT line followed by indented
    /// note/witness lines.
    pub fn to_text_block(&self) -> String {
        let mut out = format!(
            "REPORT {} checked={} violations={} status={}\n",
            self.lemma_id,
            self.instances_checked,
            self.violations.len(),
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for note in &self.notes {
            out.push_str(&format!("  note: {note}\n"));
        }
        for witness in &self.violations {
            out.push_str(&format!("  witness: {witness}\n"));
        }
        out
    }

    /// Merges another report for the same property into this one.
    pub fn absorb(&mut self, other: LemmaReport) {
        assert_eq!(self.lemma_id, other.lemma_id);
        self.instances_checked += other.instances_checked;
        self.violations.extend(other.violations);
        self.notes.extend(other.notes);
    }
}

/// Strict ascent: applying any nonempty subset of the reduced improvement
/// set yields a strictly better policy.
pub fn verify_theorem1<S: Scalar>(mdp: &Mdp<S>, pi: &Policy) -> Result<LemmaReport, Error> {
    require_exact::<S>("theorem1")?;
    let mut report = LemmaReport::new("theorem1");
    let base_value = evaluate_policy(mdp, pi)?;
    let q = q_values(mdp, &base_value);
    let t = modification_set_from(pi, &base_value, &q);
    if t.is_empty() {
        report
            .notes
            .push("empty improvement set, vacuous".to_string());
        return Ok(report);
    }
    let l = reduce_to_well_defined(&t, &q);
    if l.len() > 12 {
        return Err(Error::CapExceeded(format!(
            "reduced set of size {} exceeds the subset-enumeration cap",
            l.len()
        )));
    }
    let lattice = modification_lattice(mdp, pi, &l)?;
    for (mask, candidate) in lattice.iter().enumerate() {
        if mask == 0 {
            continue;
        }
        let value = evaluate_policy(mdp, candidate)?;
        report.instances_checked += 1;
        if compare_values(&value, &base_value) != Comparison::Better {
            report.violations.push(format!(
                "modify({}, mask {mask:#b}) = {} is not strictly better",
                pi.compact_text(),
                candidate.compact_text()
            ));
        }
    }
    Ok(report)
}

/// Every suboptimal policy has a nonempty improvement set.
pub fn verify_theorem2<S: Scalar>(
    mdp: &Mdp<S>,
    order: &PolicyOrder<S>,
) -> Result<LemmaReport, Error> {
    require_exact::<S>("theorem2")?;
    let mut report = LemmaReport::new("theorem2");
    let optimal = order.optimal_value();
    for idx in 0..order.len() {
        if compare_values(order.value(idx), &optimal) == Comparison::Equivalent {
            continue;
        }
        report.instances_checked += 1;
        let q = q_values(mdp, order.value(idx));
        let t = modification_set_from(order.policy(idx), order.value(idx), &q);
        if t.is_empty() {
            report.violations.push(format!(
                "suboptimal policy {} has an empty improvement set",
                order.policy(idx).compact_text()
            ));
        }
    }
    Ok(report)
}

/// Policies that differ in exactly one state are always comparable.
pub fn verify_lemma3<S: Scalar>(mdp: &Mdp<S>, cap: u64) -> Result<LemmaReport, Error> {
    require_exact::<S>("lemma3")?;
    let mut report = LemmaReport::new("lemma3");
    let n = mdp.num_states();
    let k = mdp.num_actions();
    let policies = enumerate_policies(n, k, cap)?;
    let values: Vec<ValueFunction<S>> = policies
        .iter()
        .map(|pi| evaluate_policy(mdp, pi))
        .collect::<Result<_, _>>()?;
    for (idx, pi) in policies.iter().enumerate() {
        for s in 0..n {
            for a in 0..k {
                if a == pi.action(s) {
                    continue;
                }
                let mut other = pi.clone();
                other.set_action(s, a);
                let other_idx = other.lex_rank(k);
                report.instances_checked += 1;
                if compare_values(&values[idx], &values[other_idx]) == Comparison::Incomparable {
                    report.violations.push(format!(
                        "{} and {} differ only at state {s} but are incomparable",
                        pi.compact_text(),
                        other.compact_text()
                    ));
                }
            }
        }
    }
    Ok(report)
}

/// A policy is at least as good as every policy that agrees with it on the
/// states of its improvement set.
pub fn verify_lemma4<S: Scalar>(mdp: &Mdp<S>, pi: &Policy, cap: u64) -> Result<LemmaReport, Error> {
    require_exact::<S>("lemma4")?;
    let mut report = LemmaReport::new("lemma4");
    let base_value = evaluate_policy(mdp, pi)?;
    let q = q_values(mdp, &base_value);
    let t = modification_set_from(pi, &base_value, &q);
    let pinned = t.states();
    let n = mdp.num_states();
    let k = mdp.num_actions();
    let free: Vec<usize> = (0..n).filter(|s| !pinned.contains(s)).collect();
    let completions = policy_count(free.len(), k);
    if completions > cap as u128 {
        return Err(Error::CapExceeded(format!(
            "k^|free| = {completions} exceeds cap {cap}"
        )));
    }

    let mut assignment = vec![0usize; free.len()];
    loop {
        let mut candidate = pi.clone();
        for (slot, &state) in assignment.iter().zip(free.iter()) {
            candidate.set_action(state, *slot);
        }
        let value = evaluate_policy(mdp, &candidate)?;
        report.instances_checked += 1;
        let cmp = compare_values(&base_value, &value);
        if !cmp.is_at_least() {
            report.violations.push(format!(
                "{} agrees with {} on its improvement states yet compares {:?}",
                candidate.compact_text(),
                pi.compact_text(),
                cmp
            ));
        }
        // Advance the mixed-radix counter over free states.
        let mut pos = free.len();
        loop {
            if pos == 0 {
                return Ok(report);
            }
            pos -= 1;
            assignment[pos] += 1;
            if assignment[pos] < k {
                break;
            }
            assignment[pos] = 0;
        }
    }
}

/// On a two-action instance, no improvement-state set recurs or is
/// contained in a later one along a run.
pub fn verify_lemma5<S: Scalar>(trace: &Trace<S>) -> Result<LemmaReport, Error> {
    require_exact::<S>("lemma5")?;
    if trace.num_actions > 2 {
        return Err(Error::InvalidArgument(
            "this check applies to two-action instances only; use lemma12".to_string(),
        ));
    }
    let mut report = LemmaReport::new("lemma5");
    let states: Vec<BTreeSet<usize>> = trace.records.iter().map(|r| r.t_set.states()).collect();
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            report.instances_checked += 1;
            if states[i].is_subset(&states[j]) {
                report.violations.push(format!(
                    "states(T) at iteration {i} ({:?}) is contained in iteration {j} ({:?})",
                    states[i], states[j]
                ));
            }
        }
    }
    Ok(report)
}

/// For any action count: no later iteration whose improvement-state set
/// contains an earlier one while the two policies agree on the earlier set.
pub fn verify_lemma12<S: Scalar>(trace: &Trace<S>) -> Result<LemmaReport, Error> {
    require_exact::<S>("lemma12")?;
    let mut report = LemmaReport::new("lemma12");
    let states: Vec<BTreeSet<usize>> = trace.records.iter().map(|r| r.t_set.states()).collect();
    for i in 0..trace.records.len() {
        for j in i + 1..trace.records.len() {
            report.instances_checked += 1;
            if !states[i].is_subset(&states[j]) {
                continue;
            }
            let agree = states[i]
                .iter()
                .all(|&s| trace.records[i].policy.action(s) == trace.records[j].policy.action(s));
            if agree {
                report.violations.push(format!(
                    "iterations {i} and {j} agree on contained improvement states {:?}",
                    states[i]
                ));
            }
        }
    }
    Ok(report)
}

/// Applying the whole (well-defined) improvement set rules out at least as
/// many policies as the set has pairs.
pub fn verify_lemma6<S: Scalar>(
    mdp: &Mdp<S>,
    pi: &Policy,
    order: &PolicyOrder<S>,
) -> Result<LemmaReport, Error> {
    require_exact::<S>("lemma6")?;
    let mut report = LemmaReport::new("lemma6");
    let t = modification_set(mdp, pi)?;
    if t.is_empty() {
        report
            .notes
            .push("empty improvement set, vacuous".to_string());
        return Ok(report);
    }
    if !t.is_well_defined() {
        report
            .notes
            .push("improvement set not well defined, skipped".to_string());
        return Ok(report);
    }
    let improved = modify(pi, &t)?;
    let between = order.count_between(pi, &improved);
    report.instances_checked = 1;
    if between < t.len() as u64 {
        report.violations.push(format!(
            "only {between} policies between {} and {}, expected at least {}",
            pi.compact_text(),
            improved.compact_text(),
            t.len()
        ));
    } else {
        report
            .notes
            .push(format!("between={between} set-size={}", t.len()));
    }
    Ok(report)
}

/// Uniformly chosen elements of a finite partial order have at most
/// `|set|/2` elements above them on average, and the above/below incidence
/// counts balance exactly.
pub fn verify_lemma9<S: Scalar>(order: &PolicyOrder<S>) -> Result<LemmaReport, Error> {
    require_exact::<S>("lemma9")?;
    let mut report = LemmaReport::new("lemma9");
    let len = order.len();
    let mut sum_above: u128 = 0;
    let mut sum_below: u128 = 0;
    for i in 0..len {
        for j in 0..len {
            match order.relation(j, i) {
                Comparison::Better => sum_above += 1,
                Comparison::Worse => sum_below += 1,
                _ => {}
            }
        }
    }
    report.instances_checked = len as u64;
    if sum_above != sum_below {
        report.violations.push(format!(
            "incidence sums differ: above {sum_above} vs below {sum_below}"
        ));
    }
    // mean = sum_above / len must be at most len / 2.
    if 2 * sum_above > (len as u128) * (len as u128) {
        report.violations.push(format!(
            "mean above-count {sum_above}/{len} exceeds {len}/2"
        ));
    }
    report
        .notes
        .push(format!("sum-above={sum_above} elements={len}"));
    Ok(report)
}

/// Exact lattice form of the ruled-out expectation: over the `2^|L|`
/// policies reachable by applying a subset of the reduced improvement set,
/// the mean number of lattice elements *not strictly above* a uniformly
/// chosen element is at least `2^(|L|-1)`.
pub fn verify_corollary10<S: Scalar>(
    mdp: &Mdp<S>,
    pi: &Policy,
    order: &PolicyOrder<S>,
) -> Result<LemmaReport, Error> {
    require_exact::<S>("corollary10")?;
    let mut report = LemmaReport::new("corollary10");
    let base_value = evaluate_policy(mdp, pi)?;
    let q = q_values(mdp, &base_value);
    let t = modification_set_from(pi, &base_value, &q);
    if t.is_empty() {
        report
            .notes
            .push("empty improvement set, nothing to check".to_string());
        return Ok(report);
    }
    let l = reduce_to_well_defined(&t, &q);
    if l.len() > 12 {
        return Err(Error::CapExceeded(format!(
            "reduced set of size {} exceeds the lattice cap",
            l.len()
        )));
    }
    let lattice = modification_lattice(mdp, pi, &l)?;
    let indices: Vec<usize> = lattice
        .iter()
        .map(|p| order.index_of(p).expect("lattice member in the order"))
        .collect();
    let size = lattice.len() as u128;
    let mut sum_not_above: u128 = 0;
    for &r in &indices {
        for &s in &indices {
            if order.relation(s, r) != Comparison::Better {
                sum_not_above += 1;
            }
        }
    }
    report.instances_checked = lattice.len() as u64;
    // mean >= 2^(|L|-1)  <=>  sum >= 2^(|L|-1) * 2^|L|.
    let bound = (1u128 << (l.len() - 1)) * size;
    if sum_not_above < bound {
        report.violations.push(format!(
            "lattice mean {sum_not_above}/{size} is below 2^{}",
            l.len() - 1
        ));
    }
    report.notes.push(format!(
        "mean-not-above {sum_not_above}/{size} bound 2^{}",
        l.len() - 1
    ));
    Ok(report)
}

/// For each iteration of a trace, the number of policies skipped by the
/// step: those at most the next policy and strictly better than the
/// current one (the next policy itself always qualifies).
pub fn ruled_out_per_iteration<S: Scalar>(
    trace: &Trace<S>,
    order: &PolicyOrder<S>,
) -> Result<Vec<u64>, Error> {
    if trace.num_states != order.num_states() || trace.num_actions != order.num_actions() {
        return Err(Error::InstanceMismatch(format!(
            "trace is over n={} k={}, order over n={} k={}",
            trace.num_states,
            trace.num_actions,
            order.num_states(),
            order.num_actions()
        )));
    }
    let mut counts = Vec::with_capacity(trace.records.len());
    for (i, record) in trace.records.iter().enumerate() {
        let idx = order
            .index_of(&record.policy)
            .ok_or_else(|| Error::InstanceMismatch("policy outside the order".to_string()))?;
        if compare_values(order.value(idx), &record.value) != Comparison::Equivalent {
            return Err(Error::InstanceMismatch(format!(
                "recorded value at iteration {i} disagrees with the order"
            )));
        }
        let successor = trace
            .records
            .get(i + 1)
            .map(|r| &r.policy)
            .unwrap_or(&trace.final_policy);
        counts.push(order.count_between(&record.policy, successor));
    }
    Ok(counts)
}
