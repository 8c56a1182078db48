//! Closed-form iteration-count bounds for the selection strategies.
//!
//! All formulas use base-2 logarithms and are evaluated as doubles; they are
//! compared against integer iteration counts, so six significant digits are
//! plenty.

use crate::Error;

/// Greedy selection on a two-action instance: `6 * 2^n / n` (valid as a
/// proven ceiling for `n >= 3`).
pub fn greedy_two_action(n: usize) -> f64 {
    6.0 * 2f64.powi(n as i32) / n as f64
}

/// Greedy selection with any number of actions: `13 * k^n / n`.
pub fn greedy_multi(n: usize, k: usize) -> f64 {
    13.0 * (k as f64).powi(n as i32) / n as f64
}

/// Randomized selection on a two-action instance: `2^(0.78 n)`. Holds with
/// overwhelming probability asymptotically, not surely at small `n`.
pub fn random_two_action(n: usize) -> f64 {
    2f64.powf(0.78 * n as f64)
}

/// Randomized selection with any number of actions:
/// `17 * ((k/2) * (1 + 2/log2(k)))^n`.
pub fn random_multi(n: usize, k: usize) -> f64 {
    let base = (k as f64 / 2.0) * (1.0 + 2.0 / (k as f64).log2());
    17.0 * base.powi(n as i32)
}

/// The trivial ceiling: the number of policies, `k^n`.
pub fn trivial(n: usize, k: usize) -> f64 {
    (k as f64).powi(n as i32)
}

/// Bound formula for a strategy name as used by the CLI. `greedy` and
/// `random` pick the two-action formula when `k == 2` and the multi-action
/// one otherwise; `greedy-multi` / `random-multi` force the general
/// formula; `sequential` and `trivial` give the policy count.
pub fn eval_bounds(n: usize, k: usize, strategy: &str) -> Result<f64, Error> {
    if n < 1 || k < 2 {
        return Err(Error::InvalidArgument(format!(
            "bounds need n >= 1 and k >= 2, got n={n} k={k}"
        )));
    }
    match strategy {
        "greedy" => Ok(if k == 2 {
            greedy_two_action(n)
        } else {
            greedy_multi(n, k)
        }),
        "greedy-multi" => Ok(greedy_multi(n, k)),
        "random" => Ok(if k == 2 {
            random_two_action(n)
        } else {
            random_multi(n, k)
        }),
        "random-multi" => Ok(random_multi(n, k)),
        "sequential" | "sequential-lowest" | "sequential-highest" | "sequential-random"
        | "trivial" => Ok(trivial(n, k)),
        other => Err(Error::UnsupportedStrategy(other.to_string())),
    }
}

/// `value` printed with six significant digits, scientific above 10^6.
pub fn format_bound(value: f64) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    if value.abs() >= 1e6 {
        return format!("{value:.5e}");
    }
    let digits_before = if value.abs() < 1.0 {
        1
    } else {
        value.abs().log10().floor() as usize + 1
    };
    let decimals = 6usize.saturating_sub(digits_before);
    format!("{value:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_bound_values() {
        // 6 * 8 / 3 = 16 exactly.
        assert_eq!(eval_bounds(3, 2, "greedy").unwrap(), 16.0);
        // 2^7.8, about 222.861.
        assert!((eval_bounds(10, 2, "random").unwrap() - 222.8609).abs() < 1e-3);
        // 13 * 64 / 3, about 277.333.
        assert!((eval_bounds(3, 4, "greedy-multi").unwrap() - 277.3333).abs() < 1e-3);
    }

    #[test]
    fn strategy_dispatch() {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs();
        assert!(
            close(eval_bounds(4, 3, "greedy").unwrap(), greedy_multi(4, 3)),
            "multi-action instances use the general greedy formula"
        );
        assert!(close(
            eval_bounds(4, 2, "random").unwrap(),
            random_two_action(4)
        ));
        assert!(close(
            eval_bounds(4, 3, "random").unwrap(),
            random_multi(4, 3)
        ));
        assert_eq!(eval_bounds(4, 3, "sequential").unwrap(), 81.0);
        assert!(eval_bounds(4, 3, "warp").is_err());
        assert!(eval_bounds(4, 1, "greedy").is_err());
    }

    #[test]
    fn bounds_are_finite_and_positive_at_desk_scale() {
        for n in 3..=12 {
            for k in 2..=6 {
                for strategy in [
                    "greedy",
                    "greedy-multi",
                    "random",
                    "random-multi",
                    "trivial",
                ] {
                    let b = eval_bounds(n, k, strategy).unwrap();
                    assert!(b.is_finite() && b > 0.0, "{strategy} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_bound(16.0), "16.0000");
        assert_eq!(format_bound(277.33333333), "277.333");
        assert_eq!(format_bound(222.86094420), "222.861");
        assert_eq!(format_bound(76759.7733), "76759.8");
        assert_eq!(format_bound(681574.4), "681574");
        assert_eq!(format_bound(13421772.8), "1.34218e7");
    }
}
