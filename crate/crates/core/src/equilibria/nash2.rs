//! Support enumeration for two-player games.

use alloc::vec;
use alloc::vec::Vec;

use super::{better, clean_distribution, nash_gain, subsets_by_size, Criterion, EquilibriumResult, Witness};
use crate::error::{bail, Result};
use crate::game::{MixedStrategy, NormalFormGame, StrategyProfile};
use crate::lp::{lp_solve, Direction, LinearProgram, LpOutcome, Relation};

const MAX_ROUNDS: usize = 20;
const DEDUP_TOL: f64 = 1e-7;

/// Payoff matrices seen from one side: `own[i][j]` is the utility of the
/// side whose strategy is being chosen, `other[i][j]` that of the opponent,
/// with `i` ranging over the own actions.
struct Side {
    own: Vec<Vec<f64>>,
    other: Vec<Vec<f64>>,
}

impl Side {
    fn len(&self) -> usize {
        self.own.len()
    }

    fn width(&self) -> usize {
        self.own[0].len()
    }

    /// Strategies on `support` that make the opponent indifferent on
    /// `opp_support` and no better off elsewhere. The last variable is the
    /// opponent's value.
    fn polytope(&self, support: &[usize], opp_support: &[usize]) -> LinearProgram {
        let (k, w) = (self.len(), self.width());
        let mut lp = LinearProgram::new(k + 1, Direction::Maximize);
        lp.set_free(k);
        for i in 0..k {
            if !support.contains(&i) {
                lp.set_bounds(i, 0.0, 0.0);
            }
        }
        let mut sum = vec![1.0; k + 1];
        sum[k] = 0.0;
        lp.add_constraint(sum, Relation::Eq, 1.0);
        for j in 0..w {
            let mut row: Vec<f64> = (0..k).map(|i| self.other[i][j]).collect();
            row.push(-1.0);
            let rel = if opp_support.contains(&j) { Relation::Eq } else { Relation::Le };
            lp.add_constraint(row, rel, 0.0);
        }
        lp
    }

    fn own_payoffs(&self, opp: &[f64]) -> Vec<f64> {
        self.own.iter().map(|r| r.iter().zip(opp).map(|(u, q)| u * q).sum()).collect()
    }

    fn other_payoffs(&self, opp: &[f64]) -> Vec<f64> {
        self.other.iter().map(|r| r.iter().zip(opp).map(|(u, q)| u * q).sum()).collect()
    }
}

fn solve_strategy(lp: &LinearProgram, k: usize) -> Result<Option<Vec<f64>>> {
    Ok(match lp_solve(lp)? {
        LpOutcome::Optimal(s) => Some(clean_distribution(&s.x[..k])),
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => bail!(Internal, "bounded equilibrium polytope reported unbounded"),
    })
}

/// Re-optimizes one side's strategy within its polytope while the other
/// side is held fixed. Against a fixed opponent the own value is constant
/// over the polytope, so only the opponent's value moves.
fn refine(side: &Side, lp: &LinearProgram, opp: &[f64], fixed_value: f64, criterion: Criterion) -> Result<Option<Vec<f64>>> {
    let k = side.len();
    // the opponent's payoff from each of our actions
    let opp_gain = side.other_payoffs(opp);
    let mut lp = lp.clone();
    match criterion {
        Criterion::SocialWelfare => {
            let mut obj = opp_gain;
            obj.push(0.0);
            lp.set_objective(obj);
            lp.direction = Direction::Maximize;
        }
        Criterion::SocialFairness => {
            // epigraph variable t >= |opp value - fixed value|
            let n = k + 2;
            let mut ext = LinearProgram::new(n, Direction::Minimize);
            for c in &lp.constraints {
                let mut row = c.coeffs.clone();
                row.push(0.0);
                ext.add_constraint(row, c.relation, c.rhs);
            }
            for v in 0..=k {
                ext.set_bounds(v, lp.lower[v], lp.upper[v]);
            }
            let mut upper: Vec<f64> = opp_gain.clone();
            upper.extend([0.0, -1.0]);
            ext.add_constraint(upper, Relation::Le, fixed_value);
            let mut lower: Vec<f64> = opp_gain.iter().map(|g| -g).collect();
            lower.extend([0.0, -1.0]);
            ext.add_constraint(lower, Relation::Le, -fixed_value);
            let mut obj = vec![0.0; n];
            obj[k + 1] = 1.0;
            ext.set_objective(obj);
            return solve_strategy(&ext, k);
        }
    }
    solve_strategy(&lp, k)
}

fn values_of(a: &Side, x: &[f64], y: &[f64]) -> [f64; 2] {
    let u1: f64 = a.own_payoffs(y).iter().zip(x).map(|(u, p)| u * p).sum();
    let u2: f64 = a.other_payoffs(y).iter().zip(x).map(|(u, p)| u * p).sum();
    [u1, u2]
}

/// An optimal Nash equilibrium of a two-player game.
pub fn find_ne_two_player(game: &NormalFormGame, criterion: Criterion) -> Result<EquilibriumResult> {
    if game.num_players() != 2 {
        bail!(Input, "expected a two-player game, got {} players", game.num_players());
    }
    let (l, m) = (game.num_actions(0), game.num_actions(1));
    let u = |i: usize, j: usize, p: usize| game.utility(&[i, j], p);
    let rows = Side {
        own: (0..l).map(|i| (0..m).map(|j| u(i, j, 0)).collect()).collect(),
        other: (0..l).map(|i| (0..m).map(|j| u(i, j, 1)).collect()).collect(),
    };
    let cols = Side {
        own: (0..m).map(|j| (0..l).map(|i| u(i, j, 1)).collect()).collect(),
        other: (0..m).map(|j| (0..l).map(|i| u(i, j, 0)).collect()).collect(),
    };
    let tol = 1e-6 * game.scale();

    let s1 = subsets_by_size(l);
    let s2 = subsets_by_size(m);
    let mut pairs: Vec<(&Vec<usize>, &Vec<usize>)> = Vec::new();
    for a in &s1 {
        for b in &s2 {
            pairs.push((a, b));
        }
    }
    pairs.sort_by_key(|(a, b)| a.len() + b.len());

    let mut found: Vec<(StrategyProfile, Vec<f64>)> = Vec::new();
    let mut best: Option<usize> = None;
    for (sa, sb) in pairs {
        let (x, y) = if sa.len() == 1 && sb.len() == 1 {
            let (i, j) = (sa[0], sb[0]);
            let row_ok = (0..l).all(|r| u(r, j, 0) <= u(i, j, 0));
            let col_ok = (0..m).all(|c| u(i, c, 1) <= u(i, j, 1));
            if !(row_ok && col_ok) {
                continue;
            }
            (MixedStrategy::pure(l, i).probs().to_vec(), MixedStrategy::pure(m, j).probs().to_vec())
        } else {
            let xp = rows.polytope(sa, sb);
            let Some(mut x) = solve_strategy(&xp, l)? else { continue };
            let yp = cols.polytope(sb, sa);
            let Some(mut y) = solve_strategy(&yp, m)? else { continue };
            let mut current = values_of(&rows, &x, &y);
            for _ in 0..MAX_ROUNDS {
                let mut improved = false;
                if let Some(nx) = refine(&rows, &xp, &y, current[0], criterion)? {
                    let v = values_of(&rows, &nx, &y);
                    if better(criterion, &v, &current) {
                        x = nx;
                        current = v;
                        improved = true;
                    }
                }
                if let Some(ny) = refine(&cols, &yp, &x, current[1], criterion)? {
                    let v = values_of(&rows, &x, &ny);
                    if better(criterion, &v, &current) {
                        y = ny;
                        current = v;
                        improved = true;
                    }
                }
                if !improved {
                    break;
                }
            }
            (x, y)
        };
        let profile = StrategyProfile::new(vec![MixedStrategy::new_unchecked(x), MixedStrategy::new_unchecked(y)]);
        if nash_gain(game, &profile) > tol {
            log::debug!("discarding inexact equilibrium on supports {:?} {:?}", sa, sb);
            continue;
        }
        if found.iter().any(|(p, _)| p.distance(&profile) <= DEDUP_TOL) {
            continue;
        }
        let values = game.expected_utilities(&profile);
        if best.map_or(true, |b| better(criterion, &values, &found[b].1)) {
            best = Some(found.len());
        }
        found.push((profile, values));
    }
    let Some(b) = best else {
        bail!(Solver, "support enumeration found no equilibrium");
    };
    let (profile, values) = found.swap_remove(b);
    let epsilon = nash_gain(game, &profile).max(0.0);
    Ok(EquilibriumResult { values, witness: Witness::Profile(profile), epsilon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn bimatrix(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> NormalFormGame {
        NormalFormGame::from_sizes(&[2, 2], |j| vec![a[j[0]][j[1]], b[j[0]][j[1]]]).unwrap()
    }

    #[test]
    fn battle_of_sexes() {
        // pure equilibria (3,2) and (2,3), mixed one (1.2, 1.2)
        let g = bimatrix(&[[3.0, 0.0], [0.0, 2.0]], &[[2.0, 0.0], [0.0, 3.0]]);
        let sw = find_ne_two_player(&g, Criterion::SocialWelfare).unwrap();
        assert_eq!(sw.values, vec![3.0, 2.0]);
        let sf = find_ne_two_player(&g, Criterion::SocialFairness).unwrap();
        assert!((sf.values[0] - 1.2).abs() < 1e-9 && (sf.values[1] - 1.2).abs() < 1e-9);
    }

    #[test]
    fn unequal_supports_in_degenerate_game() {
        // column 0 and 1 tie against row 0; row 0 is dominant
        let g = NormalFormGame::from_sizes(&[2, 3], |j| match (j[0], j[1]) {
            (0, 0) => vec![2.0, 1.0],
            (0, 1) => vec![2.0, 1.0],
            (0, 2) => vec![2.0, 0.0],
            (1, _) => vec![0.0, 0.0],
            _ => unreachable!(),
        })
        .unwrap();
        let r = find_ne_two_player(&g, Criterion::SocialWelfare).unwrap();
        assert_eq!(r.values, vec![2.0, 1.0]);
    }

    #[test]
    fn refinement_finds_best_point_of_a_face() {
        // row player indifferent everywhere; welfare favours column 1 with
        // row 1, which is an equilibrium of the same support pair family
        let names = vec![vec!["a".to_string(), "b".to_string()], vec!["c".to_string(), "d".to_string()]];
        let g = NormalFormGame::from_table(names, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0]).unwrap();
        let r = find_ne_two_player(&g, Criterion::SocialWelfare).unwrap();
        assert!((r.values[1] - 4.0).abs() < 1e-9, "{:?}", r.values);
    }

    #[test]
    fn rejects_wrong_player_count() {
        let g = NormalFormGame::from_sizes(&[2], |_| vec![0.0]).unwrap();
        assert!(find_ne_two_player(&g, Criterion::SocialWelfare).is_err());
    }
}
