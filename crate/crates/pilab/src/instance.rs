//! Instance sources: seeded random generation, built-in desk instances, and
//! the line-oriented text format.
//!
//! Instances are exact by construction. Transition rows are produced as
//! integer weights over their own sum, so every row adds to 1 exactly, and
//! files carry all numbers as `num/den` integers. Float copies for the fast
//! arithmetic mode are derived from the exact instance via [`Mdp::to_float`]
//! and are never written back to files.
//!
//! File format (whitespace separated, `#` starts a comment):
//!
//! ```text
//! MDP 1
//! n k
//! gamma num/den
//! R s a num/den     (one line per state-action pair, all required)
//! P s a s' num/den  (sparse; omitted entries are zero)
//! ```

use crate::mdp::Mdp;
use crate::rng::RunRng;
use crate::scalar::{Rational, Scalar};
use crate::Error;

/// Weights for generated transition rows are drawn from `1..=MAX_WEIGHT`.
const MAX_WEIGHT: u64 = 16;

/// Parameters for the seeded random generator. Output is a pure function of
/// this struct.
#[derive(Clone, Debug, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub k: usize,
    pub gamma: Rational,
    /// Fraction of `(s, a, s')` transitions kept nonzero, in `(0, 1]`. Every
    /// row keeps at least one transition regardless.
    pub density: f64,
    /// Rewards are `num / reward_den` with `num` uniform in
    /// `reward_lo..=reward_hi`.
    pub reward_lo: i64,
    pub reward_hi: i64,
    pub reward_den: i64,
    pub seed: u64,
}

impl GenSpec {
    /// A spec with the default shape knobs: dense transitions, integer
    /// rewards in `-10..=10`, discount 9/10.
    pub fn new(n: usize, k: usize, seed: u64) -> Self {
        GenSpec {
            n,
            k,
            gamma: Rational::new(9, 10),
            density: 1.0,
            reward_lo: -10,
            reward_hi: 10,
            reward_den: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::InvalidArgument(
                "generator needs n >= 1 and k >= 1".to_string(),
            ));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "density {} is outside (0, 1]",
                self.density
            )));
        }
        if self.reward_lo > self.reward_hi {
            return Err(Error::InvalidArgument(format!(
                "empty reward range {}..={}",
                self.reward_lo, self.reward_hi
            )));
        }
        if self.reward_den <= 0 {
            return Err(Error::InvalidArgument(
                "reward denominator must be positive".to_string(),
            ));
        }
        let zero = Rational::zero();
        let one = Rational::from_int(1);
        if self.gamma < zero || self.gamma >= one {
            return Err(Error::InvalidArgument(format!(
                "gamma {} is outside [0, 1)",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Generates a valid exact instance, deterministically in `spec.seed`.
pub fn random_mdp(spec: &GenSpec) -> Result<Mdp<Rational>, Error> {
    spec.validate()?;
    let mut rng = RunRng::from_seed(spec.seed);
    let n = spec.n;
    let k = spec.k;

    let span = (spec.reward_hi - spec.reward_lo) as u64 + 1;
    let mut rewards = Vec::with_capacity(n * k);
    for _ in 0..n * k {
        let num = spec.reward_lo + rng.below(span) as i64;
        rewards.push(Rational::new(num, spec.reward_den));
    }

    let mut transition = vec![Rational::zero(); n * k * n];
    for s in 0..n {
        for a in 0..k {
            let mut support: Vec<usize> = (0..n).filter(|_| rng.chance(spec.density)).collect();
            if support.is_empty() {
                support.push(rng.below(n as u64) as usize);
            }
            let weights: Vec<u64> = support.iter().map(|_| 1 + rng.below(MAX_WEIGHT)).collect();
            let total: u64 = weights.iter().sum();
            for (next, w) in support.iter().zip(weights.iter()) {
                transition[(s * k + a) * n + next] = Rational::new(*w as i64, total as i64);
            }
        }
    }

    let mdp = Mdp::new(n, k, transition, rewards, spec.gamma.clone())?;
    debug_assert!(mdp.validate().is_empty());
    Ok(mdp)
}

/// The named desk instances used throughout the test suite.
///
/// * `M2`: two states, two actions, discount 1/2. Action 0 self-loops and
///   action 1 moves to the other state; the only reward is 1 for
///   self-looping at state 1.
/// * `M2c`: two disconnected states (every action self-loops), discount
///   1/2, with reward 1 for action 0 at state 0 and action 1 at state 1.
///   Its policy order contains an incomparable pair.
///
/// The name `seq-adversarial` is reserved for a worst-case family for
/// single-switch iteration and is not implemented yet.
pub fn builtin_instance(name: &str) -> Result<Mdp<Rational>, Error> {
    let one = || Rational::from_int(1);
    let zero = Rational::zero;
    match name {
        "M2" => {
            let transition = vec![
                // state 0, action 0: stay.
                one(),
                zero(),
                // state 0, action 1: move to 1.
                zero(),
                one(),
                // state 1, action 0: stay.
                zero(),
                one(),
                // state 1, action 1: move to 0.
                one(),
                zero(),
            ];
            let rewards = vec![zero(), zero(), one(), zero()];
            Mdp::new(2, 2, transition, rewards, Rational::new(1, 2))
        }
        "M2c" => {
            let transition = vec![one(), zero(), one(), zero(), zero(), one(), zero(), one()];
            let rewards = vec![one(), zero(), zero(), one()];
            Mdp::new(2, 2, transition, rewards, Rational::new(1, 2))
        }
        "seq-adversarial" => Err(Error::Reserved(name.to_string())),
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

impl Mdp<Rational> {
    /// Float copy of an exact instance for the fast arithmetic mode.
    pub fn to_float(&self) -> Mdp<f64> {
        let n = self.num_states();
        let k = self.num_actions();
        let mut transition = Vec::with_capacity(n * k * n);
        for s in 0..n {
            for a in 0..k {
                for next in 0..n {
                    transition.push(self.transition(s, a, next).to_f64());
                }
            }
        }
        let mut rewards = Vec::with_capacity(n * k);
        for s in 0..n {
            for a in 0..k {
                rewards.push(self.reward(s, a).to_f64());
            }
        }
        Mdp::new(n, k, transition, rewards, self.gamma().to_f64()).expect("shape preserved")
    }
}

/// Canonical text form: header, all rewards in `(s, a)` order, then nonzero
/// transitions in `(s, a, s')` order. `parse_mdp(serialize_mdp(m)) == m`.
pub fn serialize_mdp(mdp: &Mdp<Rational>) -> String {
    let n = mdp.num_states();
    let k = mdp.num_actions();
    let mut out = String::new();
    out.push_str("MDP 1\n");
    out.push_str(&format!("{n} {k}\n"));
    out.push_str(&format!("gamma {}\n", mdp.gamma()));
    for s in 0..n {
        for a in 0..k {
            out.push_str(&format!("R {s} {a} {}\n", mdp.reward(s, a)));
        }
    }
    for s in 0..n {
        for a in 0..k {
            for next in 0..n {
                let p = mdp.transition(s, a, next);
                if !p.is_exact_zero() {
                    out.push_str(&format!("P {s} {a} {next} {p}\n"));
                }
            }
        }
    }
    out
}

struct LineCursor<'a> {
    tokens: Vec<Vec<&'a str>>,
    line_numbers: Vec<usize>,
    pos: usize,
}

impl<'a> LineCursor<'a> {
    fn new(text: &'a str) -> Self {
        let mut tokens = Vec::new();
        let mut line_numbers = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("");
            let parts: Vec<&str> = content.split_whitespace().collect();
            if !parts.is_empty() {
                tokens.push(parts);
                line_numbers.push(idx + 1);
            }
        }
        LineCursor {
            tokens,
            line_numbers,
            pos: 0,
        }
    }

    fn next(&mut self) -> Option<(usize, &[&'a str])> {
        if self.pos >= self.tokens.len() {
            return None;
        }
        let line = self.line_numbers[self.pos];
        let parts = &self.tokens[self.pos];
        self.pos += 1;
        Some((line, parts))
    }
}

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_index(line: usize, token: &str, bound: usize, what: &str) -> Result<usize, Error> {
    let value: usize = token
        .parse()
        .map_err(|_| malformed(line, format!("bad {what} index `{token}`")))?;
    if value >= bound {
        return Err(malformed(
            line,
            format!("{what} index {value} out of range (limit {bound})"),
        ));
    }
    Ok(value)
}

fn parse_rational(line: usize, token: &str) -> Result<Rational, Error> {
    Rational::parse(token).map_err(|e| malformed(line, e))
}

/// Parses the text format. Rejects unknown directives, duplicate entries,
/// missing rewards, and rows that do not sum to exactly 1; every error
/// carries a line number where one applies.
pub fn parse_mdp(text: &str) -> Result<Mdp<Rational>, Error> {
    let mut cursor = LineCursor::new(text);

    let (line, magic) = cursor.next().ok_or_else(|| malformed(0, "empty input"))?;
    if magic != ["MDP", "1"] {
        return Err(malformed(line, "expected header `MDP 1`"));
    }

    let (line, shape) = cursor
        .next()
        .ok_or_else(|| malformed(line, "missing `n k` line"))?;
    if shape.len() != 2 {
        return Err(malformed(line, "expected `n k`"));
    }
    let n: usize = shape[0]
        .parse()
        .map_err(|_| malformed(line, format!("bad state count `{}`", shape[0])))?;
    let k: usize = shape[1]
        .parse()
        .map_err(|_| malformed(line, format!("bad action count `{}`", shape[1])))?;
    if n == 0 || k == 0 {
        return Err(malformed(line, "n and k must be at least 1"));
    }

    let (line, gamma_line) = cursor
        .next()
        .ok_or_else(|| malformed(line, "missing `gamma` line"))?;
    if gamma_line.len() != 2 || gamma_line[0] != "gamma" {
        return Err(malformed(line, "expected `gamma num/den`"));
    }
    let gamma = parse_rational(line, gamma_line[1])?;

    let mut rewards: Vec<Option<Rational>> = vec![None; n * k];
    let mut transition: Vec<Option<Rational>> = vec![None; n * k * n];

    while let Some((line, parts)) = cursor.next() {
        match parts[0] {
            "R" => {
                if parts.len() != 4 {
                    return Err(malformed(line, "expected `R s a num/den`"));
                }
                let s = parse_index(line, parts[1], n, "state")?;
                let a = parse_index(line, parts[2], k, "action")?;
                let value = parse_rational(line, parts[3])?;
                let slot = &mut rewards[s * k + a];
                if slot.is_some() {
                    return Err(malformed(line, format!("duplicate reward entry R {s} {a}")));
                }
                *slot = Some(value);
            }
            "P" => {
                if parts.len() != 5 {
                    return Err(malformed(line, "expected `P s a s' num/den`"));
                }
                let s = parse_index(line, parts[1], n, "state")?;
                let a = parse_index(line, parts[2], k, "action")?;
                let next = parse_index(line, parts[3], n, "next-state")?;
                let value = parse_rational(line, parts[4])?;
                let slot = &mut transition[(s * k + a) * n + next];
                if slot.is_some() {
                    return Err(malformed(
                        line,
                        format!("duplicate transition entry P {s} {a} {next}"),
                    ));
                }
                *slot = Some(value);
            }
            other => {
                return Err(malformed(line, format!("unknown directive `{other}`")));
            }
        }
    }

    let mut reward_table = Vec::with_capacity(n * k);
    for s in 0..n {
        for a in 0..k {
            match rewards[s * k + a].take() {
                Some(v) => reward_table.push(v),
                None => {
                    return Err(Error::Parse {
                        line: 0,
                        message: format!("missing reward entry R {s} {a}"),
                    })
                }
            }
        }
    }
    let transition_table: Vec<Rational> = transition
        .into_iter()
        .map(|slot| slot.unwrap_or_else(Rational::zero))
        .collect();

    let mdp = Mdp::new(n, k, transition_table, reward_table, gamma)?;
    mdp.ensure_valid()?;
    Ok(mdp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Policy;
    use crate::solve::evaluate_policy;

    #[test]
    fn builtin_values_match_hand_solutions() {
        let m2 = builtin_instance("M2").unwrap();
        let v = evaluate_policy(&m2, &Policy::new(vec![1, 0])).unwrap();
        assert_eq!(v.to_f64_vec(), vec![1.0, 2.0]);

        let m2c = builtin_instance("M2c").unwrap();
        let v = evaluate_policy(&m2c, &Policy::new(vec![0, 1])).unwrap();
        assert_eq!(v.to_f64_vec(), vec![2.0, 2.0]);
    }

    #[test]
    fn unknown_and_reserved_names() {
        assert!(matches!(
            builtin_instance("bogus"),
            Err(Error::UnknownBuiltin(_))
        ));
        assert!(matches!(
            builtin_instance("seq-adversarial"),
            Err(Error::Reserved(_))
        ));
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = GenSpec::new(4, 2, 7);
        assert_eq!(random_mdp(&spec).unwrap(), random_mdp(&spec).unwrap());
    }

    #[test]
    fn generator_rows_sum_to_one_exactly() {
        let spec = GenSpec::new(4, 2, 7);
        let mdp = random_mdp(&spec).unwrap();
        assert!(mdp.validate().is_empty());
        let one = Rational::from_int(1);
        for s in 0..4 {
            for a in 0..2 {
                let mut sum = Rational::zero();
                for next in 0..4 {
                    sum = sum + mdp.transition(s, a, next).clone();
                }
                assert_eq!(sum, one);
            }
        }
    }

    #[test]
    fn dense_generation_leaves_no_zero_transitions() {
        let spec = GenSpec::new(3, 2, 11);
        let mdp = random_mdp(&spec).unwrap();
        for s in 0..3 {
            for a in 0..2 {
                for next in 0..3 {
                    assert!(
                        !mdp.transition(s, a, next).is_exact_zero(),
                        "density 1 must fill every entry"
                    );
                }
            }
        }
    }

    #[test]
    fn sparse_generation_stays_valid() {
        for seed in 0..20 {
            let spec = GenSpec {
                density: 0.3,
                ..GenSpec::new(5, 3, seed)
            };
            let mdp = random_mdp(&spec).unwrap();
            assert!(mdp.validate().is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn serialize_parse_round_trip() {
        let m2 = builtin_instance("M2").unwrap();
        let text = serialize_mdp(&m2);
        let back = parse_mdp(&text).unwrap();
        assert_eq!(back, m2);

        let gen = random_mdp(&GenSpec::new(5, 3, 3)).unwrap();
        assert_eq!(parse_mdp(&serialize_mdp(&gen)).unwrap(), gen);
    }

    #[test]
    fn row_sum_error_names_the_pair() {
        let text = "MDP 1\n1 1\ngamma 1/2\nR 0 0 1\nP 0 0 0 3/4\n";
        let err = parse_mdp(text).unwrap_err();
        match err {
            Error::InvalidInstance(msg) => {
                assert!(msg.contains("s=0"), "{msg}");
                assert!(msg.contains("3/4"), "{msg}");
            }
            other => panic!("expected invalid-instance error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_entry_is_rejected_with_line_number() {
        let text = "MDP 1\n1 1\ngamma 1/2\nR 0 0 1\nP 0 0 0 1\nP 0 0 0 1\n";
        match parse_mdp(text).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 6);
                assert!(message.contains("duplicate"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_directive_is_rejected() {
        let text = "MDP 1\n1 1\ngamma 1/2\nR 0 0 1\nX 1 2 3\nP 0 0 0 1\n";
        match parse_mdp(text).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 5);
                assert!(message.contains("unknown directive"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text =
            "# demo\nMDP 1\n\n2 1  # two states\ngamma 0\nR 0 0 1\nR 1 0 2\nP 0 0 1 1\nP 1 0 0 1\n";
        let mdp = parse_mdp(text).unwrap();
        assert_eq!(mdp.num_states(), 2);
    }

    #[test]
    fn missing_reward_is_reported() {
        let text = "MDP 1\n1 2\ngamma 1/2\nR 0 0 1\nP 0 0 0 1\nP 0 1 0 1\n";
        match parse_mdp(text).unwrap_err() {
            Error::Parse { message, .. } => {
                assert!(message.contains("missing reward entry R 0 1"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn float_copy_matches_exact_values() {
        let m2 = builtin_instance("M2").unwrap();
        let f = m2.to_float();
        assert_eq!(f.gamma(), &0.5);
        assert_eq!(f.reward(1, 0), &1.0);
        assert_eq!(f.transition(0, 1, 1), &1.0);
    }
}
