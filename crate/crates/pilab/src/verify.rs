//! Verification campaigns: run the oracle's structural checks over batches
//! of seeded instances and the iteration traces produced on them.
//!
//! Instance seeds are `base_seed + index`, so any witness line, which always
//! carries the instance seed, can be replayed with `--instances 1 --seed
//! <printed seed>` or by regenerating the instance directly.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::engine::{run_policy_iteration, Strategy, Trace};
use crate::instance::{random_mdp, GenSpec};
use crate::mdp::{Mdp, Policy};
use crate::oracle::{
    build_policy_order, ruled_out_per_iteration, verify_corollary10, verify_lemma12, verify_lemma3,
    verify_lemma4, verify_lemma5, verify_lemma6, verify_lemma9, verify_theorem1, verify_theorem2,
    LemmaReport, PolicyOrder,
};
use crate::rng::derive_seed;
use crate::scalar::Rational;
use crate::Error;

/// Salt for the seed of the random-selection trace run on each instance.
const SALT_RANDOM_TRACE: u64 = 7;

/// Every property the campaign can check, in report order.
pub const ALL_CHECKS: &[&str] = &[
    "theorem1",
    "theorem2",
    "lemma3",
    "lemma4",
    "lemma5",
    "lemma6",
    "lemma9",
    "lemma12",
    "corollary10",
];

/// Parses `--lemmas` text: `all` or a comma-separated subset of
/// [`ALL_CHECKS`]. `lemma5` only applies to two-action instances and is
/// rejected (or, under `all`, dropped) otherwise.
pub fn parse_check_list(text: &str, k: usize) -> Result<BTreeSet<String>, Error> {
    let mut out = BTreeSet::new();
    if text.trim() == "all" {
        for check in ALL_CHECKS {
            if *check == "lemma5" && k != 2 {
                continue;
            }
            out.insert(check.to_string());
        }
        return Ok(out);
    }
    for token in text.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        if !ALL_CHECKS.contains(&token) {
            return Err(Error::InvalidArgument(format!(
                "unknown check `{token}`; available: all, {}",
                ALL_CHECKS.join(", ")
            )));
        }
        if token == "lemma5" && k != 2 {
            return Err(Error::InvalidArgument(
                "lemma5 applies to two-action instances only; use lemma12 for k > 2".to_string(),
            ));
        }
        out.insert(token.to_string());
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("empty check list".to_string()));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub n: usize,
    pub k: usize,
    pub instances: u64,
    pub base_seed: u64,
    pub checks: BTreeSet<String>,
    pub cap: u64,
    pub gamma: Rational,
    pub density: f64,
}

/// Aggregate of one check across a whole campaign.
#[derive(Clone, Debug)]
pub struct CheckSummary {
    pub check_id: String,
    /// Individual cases examined (subsets, pairs, completions, ...).
    pub cases_checked: u64,
    /// Sites where the check did not apply (empty or ill-formed sets).
    pub sites_skipped: u64,
    pub violations: Vec<String>,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub summaries: Vec<CheckSummary>,
    pub instances_run: u64,
}

impl VerifyOutcome {
    pub fn total_violations(&self) -> usize {
        self.summaries.iter().map(|s| s.violations.len()).sum()
    }

    pub fn passed(&self) -> bool {
        self.total_violations() == 0
    }

    /// Report stream: one REPORT line per check plus a SUMMARY line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for summary in &self.summaries {
            writeln!(
                out,
                "REPORT {} checked={} skipped={} violations={} status={}",
                summary.check_id,
                summary.cases_checked,
                summary.sites_skipped,
                summary.violations.len(),
                if summary.passed() { "PASS" } else { "FAIL" }
            )
            .unwrap();
            for witness in &summary.violations {
                writeln!(out, "  witness: {witness}").unwrap();
            }
        }
        writeln!(
            out,
            "SUMMARY instances={} violations={} status={}",
            self.instances_run,
            self.total_violations(),
            if self.passed() { "PASS" } else { "FAIL" }
        )
        .unwrap();
        out
    }
}

struct Aggregator {
    summaries: Vec<CheckSummary>,
}

impl Aggregator {
    fn new(checks: &BTreeSet<String>) -> Self {
        let summaries = ALL_CHECKS
            .iter()
            .filter(|c| checks.contains(**c))
            .map(|c| CheckSummary {
                check_id: c.to_string(),
                cases_checked: 0,
                sites_skipped: 0,
                violations: Vec::new(),
            })
            .collect();
        Aggregator { summaries }
    }

    fn absorb(&mut self, seed: u64, report: LemmaReport) {
        let summary = self
            .summaries
            .iter_mut()
            .find(|s| s.check_id == report.lemma_id)
            .expect("report for an unselected check");
        if report.instances_checked == 0 {
            summary.sites_skipped += 1;
        }
        summary.cases_checked += report.instances_checked;
        for violation in report.violations {
            summary.violations.push(format!("seed={seed} {violation}"));
        }
    }

    /// Cap overruns on per-policy checks are recorded as skips, not errors.
    fn absorb_result(
        &mut self,
        seed: u64,
        check: &'static str,
        result: Result<LemmaReport, Error>,
    ) -> Result<(), Error> {
        match result {
            Ok(report) => {
                self.absorb(seed, report);
                Ok(())
            }
            Err(Error::CapExceeded(_)) => {
                let summary = self
                    .summaries
                    .iter_mut()
                    .find(|s| s.check_id == check)
                    .expect("report for an unselected check");
                summary.sites_skipped += 1;
                Ok(())
            }
            Err(other) => Err(other),
        }
    }
}

/// The distinct policies visited by a trace, in first-visit order.
fn visited_policies(trace: &Trace<Rational>) -> Vec<Policy> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for record in &trace.records {
        if seen.insert(record.policy.actions().to_vec()) {
            out.push(record.policy.clone());
        }
    }
    if seen.insert(trace.final_policy.actions().to_vec()) {
        out.push(trace.final_policy.clone());
    }
    out
}

/// Runs the selected checks on one instance and the traces over it.
/// `seed` labels witnesses; `trace_seed` drives the random-selection trace.
pub fn verify_instance(
    mdp: &Mdp<Rational>,
    checks: &BTreeSet<String>,
    cap: u64,
    seed: u64,
    trace_seed: u64,
) -> Result<VerifyOutcome, Error> {
    let mut agg = Aggregator::new(checks);
    verify_instance_into(mdp, checks, cap, seed, trace_seed, &mut agg)?;
    Ok(VerifyOutcome {
        summaries: agg.summaries,
        instances_run: 1,
    })
}

fn verify_instance_into(
    mdp: &Mdp<Rational>,
    checks: &BTreeSet<String>,
    cap: u64,
    seed: u64,
    trace_seed: u64,
    agg: &mut Aggregator,
) -> Result<(), Error> {
    let n = mdp.num_states();
    let want = |name: &str| checks.contains(name);

    let order: Option<PolicyOrder<Rational>> =
        if want("theorem2") || want("lemma6") || want("lemma9") || want("corollary10") {
            Some(build_policy_order(mdp, cap)?)
        } else {
            None
        };

    if want("lemma3") {
        agg.absorb(seed, verify_lemma3(mdp, cap)?);
    }
    if let Some(order) = &order {
        if want("lemma9") {
            agg.absorb(seed, verify_lemma9(order)?);
        }
        if want("theorem2") {
            agg.absorb(seed, verify_theorem2(mdp, order)?);
        }
    }

    let max_iter = crate::engine::default_max_iter(n, mdp.num_actions());
    let traces = [
        run_policy_iteration(mdp, &Policy::zero(n), Strategy::Greedy, max_iter)?,
        run_policy_iteration(
            mdp,
            &Policy::zero(n),
            Strategy::Random { seed: trace_seed },
            max_iter,
        )?,
    ];

    for trace in &traces {
        if want("lemma5") && mdp.num_actions() <= 2 {
            agg.absorb(seed, verify_lemma5(trace)?);
        }
        if want("lemma12") {
            agg.absorb(seed, verify_lemma12(trace)?);
        }
        if let Some(order) = &order {
            // Consistency guard for the oracle itself: the recorded values
            // must match the order's, or the instance bookkeeping is wrong.
            ruled_out_per_iteration(trace, order)?;
        }
    }

    let mut policies = Vec::new();
    for trace in &traces {
        policies.extend(visited_policies(trace));
    }
    policies.sort_by(|a, b| a.actions().cmp(b.actions()));
    policies.dedup_by(|a, b| a.actions() == b.actions());

    for policy in &policies {
        if want("theorem1") {
            agg.absorb_result(seed, "theorem1", verify_theorem1(mdp, policy))?;
        }
        if want("lemma4") {
            agg.absorb_result(seed, "lemma4", verify_lemma4(mdp, policy, cap))?;
        }
        if let Some(order) = &order {
            if want("lemma6") {
                agg.absorb(seed, verify_lemma6(mdp, policy, order)?);
            }
            if want("corollary10") {
                agg.absorb_result(seed, "corollary10", verify_corollary10(mdp, policy, order))?;
            }
        }
    }

    Ok(())
}

/// Runs the full campaign: `instances` seeded instances, each with the
/// selected checks over the instance and its greedy and random traces.
pub fn run_verify_campaign(cfg: &VerifyConfig) -> Result<VerifyOutcome, Error> {
    if cfg.instances == 0 {
        return Err(Error::InvalidArgument(
            "campaign needs at least one instance".to_string(),
        ));
    }
    let mut agg = Aggregator::new(&cfg.checks);
    for idx in 0..cfg.instances {
        let seed = cfg.base_seed.wrapping_add(idx);
        let spec = GenSpec {
            gamma: cfg.gamma.clone(),
            density: cfg.density,
            ..GenSpec::new(cfg.n, cfg.k, seed)
        };
        let mdp = random_mdp(&spec)?;
        let trace_seed = derive_seed(seed, SALT_RANDOM_TRACE);
        verify_instance_into(&mdp, &cfg.checks, cfg.cap, seed, trace_seed, &mut agg)?;
    }
    Ok(VerifyOutcome {
        summaries: agg.summaries,
        instances_run: cfg.instances,
    })
}
