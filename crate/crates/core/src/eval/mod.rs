//! Evaluation and certification of synthesized strategies.
//!
//! Every function here works on the strategy's coalition game, obtained
//! with [`SynthesizedStrategy::coalition_game`].

mod chain;
mod deviation;
mod exact;
mod simulate;

use alloc::vec;
use alloc::vec::Vec;

pub use chain::{induce_chain, InducedChain};
pub use deviation::{best_response_check, BestResponseOptions, BestResponseReport, Verdict};
pub use exact::evaluate_exact;
pub use simulate::{run_rng, simulate, RunOutcome, Sampler, SimulationEstimate, DEFAULT_MAX_STEPS};

use crate::checker::{resolve_objective, CheckOptions, ResolvedObjective};
use crate::equilibria::OptDirection;
use crate::error::{bail, Error, Result};
use crate::game::Csg;
use crate::props::{resolve_coalition, StateFormula};
use crate::strategy::SynthesizedStrategy;

/// What one coalition of a profile optimizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Goal {
    pub objective: ResolvedObjective,
    pub direction: OptDirection,
}

fn opposite(d: OptDirection) -> OptDirection {
    match d {
        OptDirection::Max => OptDirection::Min,
        OptDirection::Min => OptDirection::Max,
    }
}

/// Goals of the coalitions of the strategy the checker synthesizes for
/// `formula`, in coalition order. In a zero-sum query the coalition
/// optimizes the objective and the other players optimize it the other
/// way.
pub fn goals_for(game: &Csg, formula: &StateFormula, options: &CheckOptions) -> Result<Vec<Goal>> {
    match formula {
        StateFormula::ZeroSum { coalition, bound, objective } => {
            let players = resolve_coalition(game, coalition).map_err(Error::Input)?;
            let objective = resolve_objective(game, objective, options)?;
            let dir = bound.direction();
            let own = Goal { objective: objective.clone(), direction: dir };
            let rest = Goal { objective, direction: opposite(dir) };
            Ok(if players.is_empty() {
                vec![rest]
            } else if players.len() == game.num_players() {
                vec![own]
            } else {
                vec![own, rest]
            })
        }
        StateFormula::NonZeroSum { direction, objectives, .. } => objectives
            .iter()
            .map(|o| Ok(Goal { objective: resolve_objective(game, o, options)?, direction: *direction }))
            .collect(),
        _ => bail!(Input, "only game operators synthesize strategies"),
    }
}

/// Exact value and optional simulation estimate of one goal.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalEvaluation {
    pub exact: f64,
    pub estimate: Option<SimulationEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub chain_states: usize,
    pub goals: Vec<GoalEvaluation>,
    pub best_response: BestResponseReport,
}

/// Exact values, sequential simulation (skipped for `runs == 0`) and a
/// best-response check of `strategy` on `game`, the original game.
pub fn evaluate_strategy(
    game: &Csg,
    strategy: &SynthesizedStrategy,
    goals: &[Goal],
    runs: usize,
    seed: u64,
    epsilon: f64,
) -> Result<EvaluationReport> {
    strategy.validate(game)?;
    let cg = strategy.coalition_game(game)?;
    let chain = induce_chain(&cg.game, strategy)?;
    let mut evaluations = Vec::with_capacity(goals.len());
    for goal in goals {
        let exact = evaluate_exact(&chain, &cg.game, &goal.objective)?[chain.initial];
        let estimate = if runs > 0 {
            Some(simulate(&chain, &cg.game, &goal.objective, runs, seed, DEFAULT_MAX_STEPS)?)
        } else {
            None
        };
        evaluations.push(GoalEvaluation { exact, estimate });
    }
    let best_response = best_response_check(&cg.game, strategy, goals, epsilon, &BestResponseOptions::default())?;
    Ok(EvaluationReport { chain_states: chain.len(), goals: evaluations, best_response })
}
