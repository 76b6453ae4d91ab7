//! Optimal correlated equilibria by linear programming.

use alloc::vec;
use alloc::vec::Vec;

use super::{clean_distribution, correlated_gain, Criterion, EquilibriumResult, Witness};
use crate::error::{bail, Result};
use crate::game::{JointDistribution, NormalFormGame};
use crate::lp::{lp_solve, Direction, LinearProgram, LpOutcome, Relation};

/// Slack allowed on the spread when maximizing welfare among fairest
/// correlated equilibria.
const SPREAD_SLACK: f64 = 1e-9;

/// The correlated equilibrium polytope over the joint actions, with `extra`
/// additional free variables appended after the joint probabilities.
fn polytope(game: &NormalFormGame, extra: usize) -> LinearProgram {
    let n = game.num_players();
    let total = game.num_joint();
    let mut lp = LinearProgram::new(total + extra, Direction::Maximize);
    for v in total..total + extra {
        lp.set_free(v);
    }
    let mut sum = vec![1.0; total];
    sum.extend(core::iter::repeat(0.0).take(extra));
    lp.add_constraint(sum, Relation::Eq, 1.0);
    let mut joint = vec![0; n];
    for i in 0..n {
        let k = game.num_actions(i);
        for a in 0..k {
            for b in (0..k).filter(|&b| b != a) {
                let mut row = vec![0.0; total + extra];
                for (index, coeff) in row.iter_mut().enumerate().take(total) {
                    game.decode_into(index, &mut joint);
                    if joint[i] != a {
                        continue;
                    }
                    let here = game.utilities_at(index)[i];
                    joint[i] = b;
                    *coeff = here - game.utility(&joint, i);
                }
                lp.add_constraint(row, Relation::Ge, 0.0);
            }
        }
    }
    lp
}

fn welfare_objective(game: &NormalFormGame, len: usize) -> Vec<f64> {
    let mut obj: Vec<f64> = (0..game.num_joint()).map(|j| game.utilities_at(j).iter().sum()).collect();
    obj.resize(len, 0.0);
    obj
}

fn optimum(lp: &LinearProgram) -> Result<Vec<f64>> {
    match lp_solve(lp)? {
        LpOutcome::Optimal(s) => Ok(s.x),
        // the polytope always contains the Nash equilibria
        other => bail!(Solver, "correlated equilibrium LP returned {:?}", other),
    }
}

/// An optimal correlated equilibrium under `criterion`.
pub fn find_ce(game: &NormalFormGame, criterion: Criterion) -> Result<EquilibriumResult> {
    let total = game.num_joint();
    let n = game.num_players();
    let x = match criterion {
        Criterion::SocialWelfare => {
            let mut lp = polytope(game, 0);
            lp.set_objective(welfare_objective(game, total));
            optimum(&lp)?
        }
        Criterion::SocialFairness => {
            // variables: τ, vmax, vmin
            let mut lp = polytope(game, 2);
            for i in 0..n {
                let util: Vec<f64> = (0..total).map(|j| game.utilities_at(j)[i]).collect();
                let mut upper = util.clone();
                upper.extend([-1.0, 0.0]);
                lp.add_constraint(upper, Relation::Le, 0.0);
                let mut lower = util;
                lower.extend([0.0, -1.0]);
                lp.add_constraint(lower, Relation::Ge, 0.0);
            }
            let mut obj = vec![0.0; total + 2];
            obj[total] = 1.0;
            obj[total + 1] = -1.0;
            lp.set_objective(obj.clone());
            lp.direction = Direction::Minimize;
            let first = optimum(&lp)?;
            let best_spread = first[total] - first[total + 1];
            lp.add_constraint(obj, Relation::Le, best_spread + SPREAD_SLACK);
            lp.set_objective(welfare_objective(game, total + 2));
            lp.direction = Direction::Maximize;
            optimum(&lp)?
        }
    };
    let joint = JointDistribution::new_unchecked(game.all_action_names().iter().map(Vec::len).collect(), clean_distribution(&x[..total]));
    let values = game.expected_utilities_joint(&joint);
    let epsilon = correlated_gain(game, &joint);
    Ok(EquilibriumResult { values, witness: Witness::Joint(joint), epsilon })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chicken_welfare_and_fairness() {
        // chicken: dare/dare 0, dare/swerve (7,2), swerve/swerve (6,6);
        // the welfare-optimal CE puts 1/4 on each asymmetric outcome and
        // 1/2 on swerve/swerve, for welfare 10.5
        let g = NormalFormGame::from_sizes(&[2, 2], |j| match (j[0], j[1]) {
            (0, 0) => vec![0.0, 0.0],
            (0, 1) => vec![7.0, 2.0],
            (1, 0) => vec![2.0, 7.0],
            _ => vec![6.0, 6.0],
        })
        .unwrap();
        let sw = find_ce(&g, Criterion::SocialWelfare).unwrap();
        assert!((sw.values[0] + sw.values[1] - 10.5).abs() < 1e-9, "{:?}", sw.values);
        assert!(sw.epsilon <= 1e-9);
        let sf = find_ce(&g, Criterion::SocialFairness).unwrap();
        assert!((sf.values[0] - sf.values[1]).abs() < 1e-9);
        assert!((sf.values[0] - 5.25).abs() < 1e-9);
    }
}
