//! Zero-sum operators: one coalition against the remaining players.

use alloc::vec;
use alloc::vec::Vec;

use super::arena::{matrix_solution, matrix_value, Arena, Shape, Side};
use super::qualitative::{almost_sure_reach, positive_reach, stay_actions};
use super::{indicator, iterate, CheckOptions, CheckResult, ResolvedObjective};
use crate::equilibria::OptDirection;
use crate::error::{bail, Result};
use crate::game::{build_coalition_game, CoalitionPartition, Csg};
use crate::strategy::{first_actions, Decision, MemoryKind, SynthesizedStrategy};

/// Values of a zero-sum objective on the coalition game, with the row side
/// optimizing in `dir` against the column side.
pub(crate) struct Solution {
    pub values: Vec<f64>,
    pub strategy: SynthesizedStrategy,
    pub iterations: usize,
    pub residual: f64,
}

/// Checks `<<C>>` with the coalition optimizing `objective` in `direction`
/// against all other players. `C` may be empty or contain every player.
pub fn check_zero_sum(
    game: &Csg,
    coalition: &[usize],
    direction: OptDirection,
    objective: &ResolvedObjective,
    options: &CheckOptions,
) -> Result<CheckResult> {
    options.validate()?;
    let n = game.num_players();
    if let Some(&p) = coalition.iter().find(|&&p| p >= n) {
        bail!(Input, "player {} does not exist", p + 1);
    }
    let everyone: Vec<usize> = (0..n).collect();
    let (coalitions, row, col) = if coalition.is_empty() {
        (vec![everyone], vec![], vec![0])
    } else if coalition.len() == n {
        (vec![coalition.to_vec()], vec![0], vec![])
    } else {
        let rest: Vec<usize> = (0..n).filter(|p| !coalition.contains(p)).collect();
        (vec![coalition.to_vec(), rest], vec![0], vec![1])
    };
    let cg = build_coalition_game(game, &CoalitionPartition::new(coalitions)?)?;
    let arena = Arena::new(&cg.game, row, col)?;
    let sol = solve(&arena, direction, objective, options, cg.partition.coalitions().to_vec())?;
    let mut r = CheckResult::empty();
    r.value = Some(sol.values[game.initial()]);
    r.state_values = sol.values.iter().map(|&v| vec![v]).collect();
    r.strategy = Some(sol.strategy);
    r.iterations = sol.iterations;
    r.residual = sol.residual;
    Ok(r)
}

/// `coalitions` lists the original players behind each player of the
/// arena's game and is recorded in the strategy.
pub(crate) fn solve(
    arena: &Arena,
    dir: OptDirection,
    objective: &ResolvedObjective,
    options: &CheckOptions,
    coalitions: Vec<Vec<usize>>,
) -> Result<Solution> {
    match objective.horizon() {
        Some(k) => Ok(backward_induction(arena, dir, objective, k, coalitions)?),
        None if objective.is_reward() => reward_reach(arena, dir, objective, options, coalitions),
        None => until(arena, dir, objective, options, coalitions),
    }
}

fn local_matrix<F>(shape: &Shape, mut cell: F) -> Vec<f64>
where
    F: FnMut(usize) -> f64,
{
    shape.cell.iter().map(|&t| cell(t)).collect()
}

fn expectation(game: &Csg, s: usize, t: usize, values: &[f64]) -> f64 {
    game.transitions(s)[t].successors.iter().map(|&(x, p)| p * values[x]).sum()
}

fn backward_induction(
    arena: &Arena,
    dir: OptDirection,
    obj: &ResolvedObjective,
    horizon: usize,
    coalitions: Vec<Vec<usize>>,
) -> Result<Solution> {
    let g = arena.game;
    let n = g.num_states();
    let mut strategy = SynthesizedStrategy::new(coalitions, MemoryKind::Steps);
    strategy.horizon = horizon;
    let mut v: Vec<f64> = (0..n).map(|s| obj.fixed_value(g, s, 0).unwrap_or(0.0)).collect();
    for r in 1..=horizon {
        let mut next = vec![0.0; n];
        for s in 0..n {
            if let Some(x) = obj.fixed_value(g, s, r as isize) {
                next[s] = x;
                strategy.insert(s, r, first_actions(g, s));
                continue;
            }
            let shape = &arena.shapes[s];
            let m = local_matrix(shape, |t| obj.immediate(g, s, t) + expectation(g, s, t, &v));
            let (val, x, y) = matrix_solution(&m, shape.rows, shape.cols, dir)?;
            next[s] = val;
            strategy.insert(s, r, Decision::Profile(arena.split_strategies(s, &x, &y)));
        }
        v = next;
    }
    Ok(Solution { values: v, strategy, iterations: horizon, residual: 0.0 })
}

fn check_monotone(old: &[f64], new: &[f64]) {
    let dropped = old.iter().zip(new).any(|(a, b)| *b < *a - 1e-9 * (1.0 + a.abs()));
    debug_assert!(!dropped, "value iteration from below must not decrease");
    if dropped {
        log::warn!("value iteration iterate decreased");
    }
}

fn until(
    arena: &Arena,
    dir: OptDirection,
    obj: &ResolvedObjective,
    options: &CheckOptions,
    coalitions: Vec<Vec<usize>>,
) -> Result<Solution> {
    let g = arena.game;
    let n = g.num_states();
    let target = obj.target().unwrap_or(&[]).to_vec();
    let allowed = obj.allowed(n);
    let reacher = match dir {
        OptDirection::Max => Side::Row,
        OptDirection::Min => Side::Col,
    };
    let good = positive_reach(arena, reacher, &allowed, &target);
    let init: Vec<f64> = target.iter().map(|&t| indicator(t)).collect();
    let (values, iterations, residual) = iterate(init, options, |old, new| {
        for s in 0..n {
            new[s] = if target[s] {
                1.0
            } else if !good[s] {
                0.0
            } else {
                let shape = &arena.shapes[s];
                let m = local_matrix(shape, |t| expectation(g, s, t, old));
                matrix_value(&m, shape.rows, shape.cols, dir)?
            };
        }
        check_monotone(old, new);
        Ok(())
    })?;
    let mut strategy = SynthesizedStrategy::new(coalitions, MemoryKind::None);
    for s in 0..n {
        let decision = if target[s] || !good[s] {
            first_actions(g, s)
        } else {
            let shape = &arena.shapes[s];
            let m = local_matrix(shape, |t| expectation(g, s, t, &values));
            let (_, x, y) = matrix_solution(&m, shape.rows, shape.cols, dir)?;
            Decision::Profile(arena.split_strategies(s, &x, &y))
        };
        strategy.insert(s, 0, decision);
    }
    Ok(Solution { values, strategy, iterations, residual })
}

/// The local matrix with the reaching side restricted to `keep`.
fn restricted<F>(shape: &Shape, reacher: Side, keep: &[usize], mut cell: F) -> (Vec<f64>, usize, usize)
where
    F: FnMut(usize) -> f64,
{
    match reacher {
        Side::Row => {
            let mut m = Vec::with_capacity(keep.len() * shape.cols);
            for &i in keep {
                for j in 0..shape.cols {
                    m.push(cell(shape.transition(Side::Row, i, j)));
                }
            }
            (m, keep.len(), shape.cols)
        }
        Side::Col => {
            let mut m = Vec::with_capacity(shape.rows * keep.len());
            for i in 0..shape.rows {
                for &j in keep {
                    m.push(cell(shape.transition(Side::Row, i, j)));
                }
            }
            (m, shape.rows, keep.len())
        }
    }
}

fn expand(dist: &[f64], keep: &[usize], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (&k, &p) in keep.iter().zip(dist) {
        out[k] = p;
    }
    out
}

/// Expected reward until reaching the target. States from which the side
/// that wants the target reached cannot force it almost surely get +∞; the
/// remaining states are solved with that side restricted to actions that
/// keep the play in the almost-sure region.
fn reward_reach(
    arena: &Arena,
    dir: OptDirection,
    obj: &ResolvedObjective,
    options: &CheckOptions,
    coalitions: Vec<Vec<usize>>,
) -> Result<Solution> {
    let g = arena.game;
    let n = g.num_states();
    let reward = obj.reward().unwrap_or(0);
    if !g.rewards()[reward].is_nonnegative() {
        bail!(Unsupported, "expected reachability rewards need a nonnegative reward structure");
    }
    let target = obj.target().unwrap_or(&[]).to_vec();
    let reacher = match dir {
        OptDirection::Min => Side::Row,
        OptDirection::Max => Side::Col,
    };
    let sure = almost_sure_reach(arena, reacher, &vec![true; n], &target);
    let keep: Vec<Vec<usize>> = (0..n)
        .map(|s| if sure[s] && !target[s] { stay_actions(arena, s, reacher, &sure) } else { Vec::new() })
        .collect();
    let init: Vec<f64> = (0..n).map(|s| if sure[s] || target[s] { 0.0 } else { f64::INFINITY }).collect();
    let (values, iterations, residual) = iterate(init, options, |old, new| {
        for s in 0..n {
            new[s] = if target[s] || !sure[s] {
                old[s]
            } else {
                let (m, rows, cols) = restricted(&arena.shapes[s], reacher, &keep[s], |t| {
                    obj.immediate(g, s, t) + expectation(g, s, t, old)
                });
                matrix_value(&m, rows, cols, dir)?
            };
        }
        check_monotone(old, new);
        Ok(())
    })?;
    let mut strategy = SynthesizedStrategy::new(coalitions, MemoryKind::None);
    for s in 0..n {
        let decision = if target[s] || !sure[s] {
            first_actions(g, s)
        } else {
            let shape = &arena.shapes[s];
            let (m, rows, cols) =
                restricted(shape, reacher, &keep[s], |t| obj.immediate(g, s, t) + expectation(g, s, t, &values));
            let (_, x, y) = matrix_solution(&m, rows, cols, dir)?;
            let (x, y) = match reacher {
                Side::Row => (expand(&x, &keep[s], shape.rows), y),
                Side::Col => (x, expand(&y, &keep[s], shape.cols)),
            };
            Decision::Profile(arena.split_strategies(s, &x, &y))
        };
        strategy.insert(s, 0, decision);
    }
    Ok(Solution { values, strategy, iterations, residual })
}
