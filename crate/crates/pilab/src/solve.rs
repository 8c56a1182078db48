//! Policy evaluation: solves the linear fixed point
//! `V(s) = R(s, pi(s)) + gamma * sum_s' P(s'|s, pi(s)) * V(s')`
//! by Gaussian elimination with partial pivoting.
//!
//! The system matrix `I - gamma * P_pi` is strictly diagonally dominant for
//! `gamma < 1`, so a nonzero pivot always exists; a singular report can only
//! arise from pathological float rounding and is surfaced as an error rather
//! than returning garbage.

use std::cmp::Ordering;

use crate::mdp::{Mdp, Policy, QFunction, ValueFunction};
use crate::scalar::Scalar;
use crate::Error;

/// Computes the unique value function of `policy` on `mdp`.
pub fn evaluate_policy<S: Scalar>(
    mdp: &Mdp<S>,
    policy: &Policy,
) -> Result<ValueFunction<S>, Error> {
    mdp.check_policy(policy)?;
    let n = mdp.num_states();
    let gamma = mdp.gamma();

    // Row-major augmented system: A = I - gamma * P_pi, b = R_pi.
    let mut a = vec![S::zero(); n * n];
    let mut b = vec![S::zero(); n];
    for s in 0..n {
        let act = policy.action(s);
        for next in 0..n {
            let coef = -(gamma.clone() * mdp.transition(s, act, next).clone());
            a[s * n + next] = if s == next { S::one() + coef } else { coef };
        }
        b[s] = mdp.reward(s, act).clone();
    }

    let solution = solve_dense(&mut a, &mut b, n)?;
    Ok(ValueFunction::new(solution))
}

/// In-place Gaussian elimination with partial pivoting on an `n x n` system.
fn solve_dense<S: Scalar>(a: &mut [S], b: &mut [S], n: usize) -> Result<Vec<S>, Error> {
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = a[col * n + col].abs();
        for row in col + 1..n {
            let mag = a[row * n + col].abs();
            if mag.scalar_cmp(&pivot_mag) == Ordering::Greater {
                pivot_row = row;
                pivot_mag = mag;
            }
        }
        if a[pivot_row * n + col].is_exact_zero() {
            return Err(Error::SingularSystem);
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col].clone();
        for row in col + 1..n {
            if a[row * n + col].is_exact_zero() {
                continue;
            }
            let factor = a[row * n + col].clone() / pivot.clone();
            a[row * n + col] = S::zero();
            for j in col + 1..n {
                a[row * n + j] = a[row * n + j].clone() - factor.clone() * a[col * n + j].clone();
            }
            b[row] = b[row].clone() - factor * b[col].clone();
        }
    }

    let mut x = vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for j in row + 1..n {
            acc = acc - a[row * n + j].clone() * x[j].clone();
        }
        x[row] = acc / a[row * n + row].clone();
    }
    Ok(x)
}

/// The full `Q(s, a) = R(s, a) + gamma * sum_s' P(s'|s, a) * v(s')` table.
///
/// `v` must be the value function of the policy the table is attributed to.
pub fn q_values<S: Scalar>(mdp: &Mdp<S>, v: &ValueFunction<S>) -> QFunction<S> {
    let n = mdp.num_states();
    let k = mdp.num_actions();
    let gamma = mdp.gamma();
    let mut table = Vec::with_capacity(n * k);
    for s in 0..n {
        for a in 0..k {
            let mut future = S::zero();
            for next in 0..n {
                future = future + mdp.transition(s, a, next).clone() * v.get(next).clone();
            }
            table.push(mdp.reward(s, a).clone() + gamma.clone() * future);
        }
    }
    QFunction::new(k, table)
}

/// Max-norm residual of the policy fixed point; zero (exact mode) or tiny
/// (float mode) whenever `v` came from [`evaluate_policy`].
pub fn bellman_residual<S: Scalar>(mdp: &Mdp<S>, policy: &Policy, v: &ValueFunction<S>) -> S {
    let n = mdp.num_states();
    let gamma = mdp.gamma();
    let mut worst = S::zero();
    for s in 0..n {
        let act = policy.action(s);
        let mut future = S::zero();
        for next in 0..n {
            future = future + mdp.transition(s, act, next).clone() * v.get(next).clone();
        }
        let residual =
            (v.get(s).clone() - (mdp.reward(s, act).clone() + gamma.clone() * future)).abs();
        if residual.scalar_cmp(&worst) == Ordering::Greater {
            worst = residual;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::builtin_instance;
    use crate::scalar::Rational;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn self_loop_is_a_geometric_series() {
        // One state, one action, reward 1, gamma 1/2: V = 1 / (1 - 1/2) = 2.
        let mdp = Mdp::new(
            1,
            1,
            vec![Rational::from_int(1)],
            vec![Rational::from_int(1)],
            rat(1, 2),
        )
        .unwrap();
        let v = evaluate_policy(&mdp, &Policy::zero(1)).unwrap();
        assert_eq!(v.get(0), &Rational::from_int(2));
    }

    #[test]
    fn zero_discount_returns_immediate_reward() {
        let mut m2 = builtin_instance("M2").unwrap();
        m2.set_gamma(Rational::zero());
        for actions in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let pi = Policy::new(actions.to_vec());
            let v = evaluate_policy(&m2, &pi).unwrap();
            for s in 0..2 {
                assert_eq!(v.get(s), m2.reward(s, pi.action(s)));
            }
        }
    }

    #[test]
    fn m2_hand_solved_value() {
        // pi = (a1, a0): state 1 self-loops on reward 1 => V(1) = 2;
        // state 0 steps to 1 on reward 0 => V(0) = gamma * V(1) = 1.
        let m2 = builtin_instance("M2").unwrap();
        let v = evaluate_policy(&m2, &Policy::new(vec![1, 0])).unwrap();
        assert_eq!(
            v.as_slice(),
            &[Rational::from_int(1), Rational::from_int(2)]
        );
    }

    #[test]
    fn q_table_matches_hand_computation() {
        let m2 = builtin_instance("M2").unwrap();
        let pi = Policy::new(vec![0, 1]);
        let v = evaluate_policy(&m2, &pi).unwrap();
        assert_eq!(v.as_slice(), &[Rational::zero(), Rational::zero()]);
        let q = q_values(&m2, &v);
        // Only improving entry: Q(1, a0) = 1 + (1/2) * 0 = 1.
        assert_eq!(q.get(1, 0), &Rational::from_int(1));
        // Bellman consistency: Q(s, pi(s)) = V(s).
        for s in 0..2 {
            assert_eq!(q.get(s, pi.action(s)), v.get(s));
        }
    }

    #[test]
    fn q_equals_reward_when_discount_is_zero() {
        let mut m2 = builtin_instance("M2").unwrap();
        m2.set_gamma(Rational::zero());
        let pi = Policy::zero(2);
        let v = evaluate_policy(&m2, &pi).unwrap();
        let q = q_values(&m2, &v);
        for s in 0..2 {
            for a in 0..2 {
                assert_eq!(q.get(s, a), m2.reward(s, a));
            }
        }
    }

    #[test]
    fn residual_is_exactly_zero_in_rational_mode() {
        let m2c = builtin_instance("M2c").unwrap();
        for actions in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let pi = Policy::new(actions.to_vec());
            let v = evaluate_policy(&m2c, &pi).unwrap();
            assert!(bellman_residual(&m2c, &pi, &v).is_exact_zero());
        }
    }

    #[test]
    fn float_mode_residual_is_tiny() {
        let m2 = builtin_instance("M2").unwrap().to_float();
        let pi = Policy::new(vec![1, 0]);
        let v = evaluate_policy(&m2, &pi).unwrap();
        assert!(bellman_residual(&m2, &pi, &v) <= 1e-9);
        assert!((v.get(0) - 1.0).abs() < 1e-12);
        assert!((v.get(1) - 2.0).abs() < 1e-12);
    }
}
