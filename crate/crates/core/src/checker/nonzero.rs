//! Nonzero-sum operators: optimal equilibria over a partition of the
//! players into coalitions, each with its own objective.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::arena::Arena;
use super::qualitative::{almost_sure_reach, positive_reach};
use super::{is_correlated, iterate, zero_sum, CheckOptions, CheckResult, ResolvedObjective};
use crate::equilibria::{solve_query, EquilibriumQuery, EquilibriumResult, Witness};
use crate::error::{bail, Error, Result};
use crate::game::{build_coalition_game, local_nfg_with, CoalitionGame, CoalitionPartition, Csg, NormalFormGame};
use crate::strategy::{first_actions, Decision, MemoryKind, SynthesizedStrategy};

fn coalition_game(game: &Csg, partition: &CoalitionPartition, objectives: &[ResolvedObjective]) -> Result<CoalitionGame> {
    if partition.len() < 2 {
        bail!(Input, "an equilibrium operator needs at least two coalitions");
    }
    if partition.len() != objectives.len() {
        bail!(Input, "{} coalitions but {} objectives", partition.len(), objectives.len());
    }
    let missing = partition.uncovered(game.num_players());
    if !missing.is_empty() {
        bail!(Input, "players not in any coalition: {:?}", missing);
    }
    build_coalition_game(game, partition)
}

fn idle_decision(game: &Csg, state: usize, correlated: bool) -> Decision {
    if correlated {
        let mut p = vec![0.0; game.transitions(state).len()];
        p[0] = 1.0;
        Decision::Joint(p)
    } else {
        first_actions(game, state)
    }
}

fn decision_from(result: &EquilibriumResult, nfg: &NormalFormGame, correlated: bool) -> Decision {
    match (&result.witness, correlated) {
        (Witness::Profile(p), false) => Decision::Profile(p.strategies().iter().map(|s| s.probs().to_vec()).collect()),
        (w, _) => Decision::Joint(w.to_joint(nfg).probs().to_vec()),
    }
}

/// Solves the local game of one state, attaching the state to failures.
fn solve_local(nfg: &NormalFormGame, query: EquilibriumQuery, state: usize, stage: Option<usize>) -> Result<EquilibriumResult> {
    if let Some(u) = nfg.utility_table().iter().find(|u| !u.is_finite()) {
        bail!(Unsupported, "state {}: local game has non-finite utility {}", state, u);
    }
    if nfg.num_joint() == 1 {
        let profile = crate::game::StrategyProfile::new(
            (0..nfg.num_players()).map(|_| crate::game::MixedStrategy::pure(1, 0)).collect(),
        );
        return Ok(EquilibriumResult {
            values: nfg.utilities_at(0).to_vec(),
            witness: Witness::Profile(profile),
            epsilon: 0.0,
        });
    }
    solve_query(nfg, query).map_err(|e| {
        let place = match stage {
            Some(k) => format!("state {} with {} steps left", state, k),
            None => format!("state {}", state),
        };
        match e {
            Error::Solver(m) => Error::Solver(format!("{}: {}", place, m)),
            Error::Numeric(m) => Error::Numeric(format!("{}: {}", place, m)),
            Error::Unsupported(m) => Error::Unsupported(format!("{}: {}", place, m)),
            other => other,
        }
    })
}

fn finish(values: Vec<Vec<f64>>, initial: usize, strategy: SynthesizedStrategy, iterations: usize, residual: f64) -> CheckResult {
    let mut r = CheckResult::empty();
    r.coalition_values = values[initial].clone();
    r.value = Some(r.coalition_values.iter().sum());
    r.state_values = values;
    r.strategy = Some(strategy);
    r.iterations = iterations;
    r.residual = residual;
    r
}

/// Optimal equilibria for finite-horizon objectives by backward induction
/// over the longest horizon. An objective with a shorter bound `k` is
/// active during the first `k` of the steps.
pub fn check_equilibria_finite(
    game: &Csg,
    partition: &CoalitionPartition,
    objectives: &[ResolvedObjective],
    query: EquilibriumQuery,
    options: &CheckOptions,
) -> Result<CheckResult> {
    options.validate()?;
    let cg = coalition_game(game, partition, objectives)?;
    let g = &cg.game;
    let Some(horizons) = objectives.iter().map(ResolvedObjective::horizon).collect::<Option<Vec<usize>>>() else {
        bail!(Input, "objectives mix finite and infinite horizons");
    };
    let horizon = horizons.iter().copied().max().unwrap_or(0);
    let (n, m) = (g.num_states(), objectives.len());
    let correlated = is_correlated(&query);
    let own = |i: usize, r: usize| r as isize - (horizon - horizons[i]) as isize;
    let mut strategy = SynthesizedStrategy::new(cg.partition.coalitions().to_vec(), MemoryKind::Steps);
    strategy.horizon = horizon;
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|s| (0..m).map(|i| objectives[i].fixed_value(g, s, own(i, 0)).unwrap_or(0.0)).collect())
        .collect();
    for r in 1..=horizon {
        let mut next = Vec::with_capacity(n);
        for s in 0..n {
            let fixed: Vec<Option<f64>> = (0..m).map(|i| objectives[i].fixed_value(g, s, own(i, r))).collect();
            if fixed.iter().all(Option::is_some) {
                next.push(fixed.iter().map(|x| x.unwrap_or(0.0)).collect());
                strategy.insert(s, r, idle_decision(g, s, correlated));
                continue;
            }
            let nfg = local_nfg_with(
                g,
                s,
                m,
                |succ, out| {
                    for i in 0..m {
                        out[i] = if fixed[i].is_some() { 0.0 } else { v[succ][i] };
                    }
                },
                |t, out| {
                    for i in 0..m {
                        out[i] = fixed[i].unwrap_or_else(|| objectives[i].immediate(g, s, t));
                    }
                },
            )?;
            let res = solve_local(&nfg, query, s, Some(r))?;
            strategy.insert(s, r, decision_from(&res, &nfg, correlated));
            next.push(res.values);
        }
        v = next;
    }
    Ok(finish(v, game.initial(), strategy, horizon, 0.0))
}

/// Per-coalition value of a reached or hopeless objective.
fn settled_value(obj: &ResolvedObjective, reached: bool) -> f64 {
    match (obj.is_reward(), reached) {
        (false, true) => 1.0,
        (false, false) => 0.0,
        (true, true) => 0.0,
        (true, false) => f64::INFINITY,
    }
}

/// Optimal equilibria for two unbounded objectives of the same type.
///
/// The game is augmented with one flag per coalition recording that its
/// target has been reached. Once one coalition's objective is settled
/// (reached, or impossible even with everyone's help) it cooperates with
/// the other, whose value is then the optimum of the single-agent problem
/// over all players' actions. In states where both objectives are open the
/// value pair is the selected equilibrium of the local game, iterated to a
/// fixpoint from zero.
pub fn check_equilibria_infinite(
    game: &Csg,
    partition: &CoalitionPartition,
    objectives: &[ResolvedObjective],
    query: EquilibriumQuery,
    options: &CheckOptions,
) -> Result<CheckResult> {
    options.validate()?;
    let cg = coalition_game(game, partition, objectives)?;
    if objectives.len() != 2 {
        bail!(Unsupported, "infinite-horizon equilibria are supported for two coalitions only");
    }
    if objectives.iter().any(|o| o.horizon().is_some()) {
        bail!(Input, "objectives mix finite and infinite horizons");
    }
    if objectives[0].is_reward() != objectives[1].is_reward() {
        bail!(Unsupported, "infinite-horizon equilibria need objectives of the same type");
    }
    if let Some(r) = objectives.iter().filter_map(ResolvedObjective::reward).find(|&r| !game.rewards()[r].is_nonnegative()) {
        bail!(Unsupported, "reward structure \"{}\" has negative values", game.rewards()[r].name);
    }
    let g = &cg.game;
    let n = g.num_states();
    let correlated = is_correlated(&query);
    let coalitions = cg.partition.coalitions().to_vec();
    let coop = Arena::new(g, vec![0, 1], vec![])?;
    let targets: Vec<Vec<bool>> = objectives.iter().map(|o| o.target().unwrap_or(&[]).to_vec()).collect();
    // States where the objective can no longer be met, whatever anyone does.
    let dead: Vec<Vec<bool>> = objectives
        .iter()
        .zip(&targets)
        .map(|(o, t)| {
            let allowed = o.allowed(n);
            let ok = if o.is_reward() {
                almost_sure_reach(&coop, super::arena::Side::Row, &allowed, t)
            } else {
                positive_reach(&coop, super::arena::Side::Row, &allowed, t)
            };
            ok.into_iter().map(|b| !b).collect()
        })
        .collect();
    let mdp: Vec<zero_sum::Solution> = objectives
        .iter()
        .map(|o| zero_sum::solve(&coop, query.direction, o, options, coalitions.clone()))
        .collect::<Result<_>>()?;
    let decided = |i: usize, s: usize| targets[i][s] || dead[i][s];
    let open = |s: usize| !decided(0, s) && !decided(1, s);
    // value of coalition i on entering s with both flags clear, given the
    // current iterate for open states
    let value = |w: &[f64], i: usize, s: usize| -> f64 {
        if targets[i][s] {
            settled_value(&objectives[i], true)
        } else if dead[i][s] {
            settled_value(&objectives[i], false)
        } else if decided(1 - i, s) {
            mdp[i].values[s]
        } else {
            w[2 * s + i]
        }
    };
    let local = |w: &[f64], s: usize| -> Result<NormalFormGame> {
        local_nfg_with(
            g,
            s,
            2,
            |succ, out| {
                out[0] = value(w, 0, succ);
                out[1] = value(w, 1, succ);
            },
            |t, out| {
                out[0] = objectives[0].immediate(g, s, t);
                out[1] = objectives[1].immediate(g, s, t);
            },
        )
    };
    let (w, iterations, residual) = iterate(vec![0.0; 2 * n], options, |old, new| {
        for s in 0..n {
            if open(s) {
                let res = solve_local(&local(old, s)?, query, s, None)?;
                new[2 * s] = res.values[0];
                new[2 * s + 1] = res.values[1];
            }
        }
        Ok(())
    })?;

    let mut strategy = SynthesizedStrategy::new(coalitions, MemoryKind::Flags);
    strategy.flag_targets = targets.clone();
    let mdp_decision = |i: usize, s: usize| -> Result<Decision> {
        let d = mdp[i].strategy.decision(s, 0).cloned().unwrap_or_else(|| first_actions(g, s));
        Ok(if correlated { Decision::Joint(d.transition_distribution(g, s)?) } else { d })
    };
    for s in 0..n {
        let bits = usize::from(targets[0][s]) | (usize::from(targets[1][s]) << 1);
        for memory in 0..3usize {
            if memory & bits != bits {
                continue;
            }
            let decision = match memory {
                0 if open(s) => {
                    let nfg = local(&w, s)?;
                    decision_from(&solve_local(&nfg, query, s, None)?, &nfg, correlated)
                }
                0 if dead[0][s] && !decided(1, s) => mdp_decision(1, s)?,
                0 if dead[1][s] && !decided(0, s) => mdp_decision(0, s)?,
                1 if !decided(1, s) => mdp_decision(1, s)?,
                2 if !decided(0, s) => mdp_decision(0, s)?,
                _ => idle_decision(g, s, correlated),
            };
            strategy.insert(s, memory, decision);
        }
    }
    let values: Vec<Vec<f64>> = (0..n).map(|s| vec![value(&w, 0, s), value(&w, 1, s)]).collect();
    Ok(finish(values, game.initial(), strategy, iterations, residual))
}
