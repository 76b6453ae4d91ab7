//! Parallel simulation and strategy evaluation.
//!
//! Each run draws from its own generator stream, so the outcomes and the
//! estimate are the same for any thread count.

use rayon::prelude::*;

use csgcheck_core::checker::ResolvedObjective;
use csgcheck_core::eval::{
    best_response_check, evaluate_exact, induce_chain, run_rng, BestResponseOptions, EvaluationReport, Goal, GoalEvaluation,
    InducedChain, RunOutcome, Sampler, SimulationEstimate,
};
use csgcheck_core::strategy::SynthesizedStrategy;
use csgcheck_core::{Csg, Error};

/// A thread pool of `threads` workers, or rayon's default size for `None`.
pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Error> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Input("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Internal(format!("cannot start worker threads: {e}")))
}

/// Runs `runs` simulations on `pool` and returns the estimate with the
/// per-run outcomes in run order.
pub fn par_simulate(
    pool: &rayon::ThreadPool,
    chain: &InducedChain,
    game: &Csg,
    objective: &ResolvedObjective,
    runs: usize,
    seed: u64,
    max_steps: usize,
) -> Result<(SimulationEstimate, Vec<RunOutcome>), Error> {
    if runs == 0 {
        return Err(Error::Input("a simulation needs at least one run".into()));
    }
    let sampler = Sampler::new(chain, game, objective);
    let outcomes: Vec<RunOutcome> =
        pool.install(|| (0..runs).into_par_iter().map(|i| sampler.run(&mut run_rng(seed, i), max_steps)).collect());
    Ok((SimulationEstimate::from_outcomes(&outcomes, seed), outcomes))
}

/// Exact values, parallel simulation (skipped for `runs == 0`) and a
/// best-response check of `strategy` on the original `game`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_parallel(
    pool: &rayon::ThreadPool,
    game: &Csg,
    strategy: &SynthesizedStrategy,
    goals: &[Goal],
    runs: usize,
    seed: u64,
    max_steps: usize,
    epsilon: f64,
) -> Result<EvaluationReport, Error> {
    strategy.validate(game)?;
    let cg = strategy.coalition_game(game)?;
    let chain = induce_chain(&cg.game, strategy)?;
    let mut evaluations = Vec::with_capacity(goals.len());
    for goal in goals {
        let exact = evaluate_exact(&chain, &cg.game, &goal.objective)?[chain.initial];
        let estimate = if runs > 0 {
            Some(par_simulate(pool, &chain, &cg.game, &goal.objective, runs, seed, max_steps)?.0)
        } else {
            None
        };
        evaluations.push(GoalEvaluation { exact, estimate });
    }
    let best_response = best_response_check(&cg.game, strategy, goals, epsilon, &BestResponseOptions::default())?;
    Ok(EvaluationReport { chain_states: chain.len(), goals: evaluations, best_response })
}

#[cfg(test)]
mod tests {
    use super::*;
    use csgcheck_core::checker::{check, CheckOptions};
    use csgcheck_core::eval::{goals_for, simulate, DEFAULT_MAX_STEPS};
    use csgcheck_core::game::fixtures;
    use csgcheck_core::props::parse_property;

    #[test]
    fn thread_count_does_not_change_outcomes() {
        let g = fixtures::pennies();
        let f = parse_property(r#"<<p1>> Pmax=? [ F "win1" ]"#).unwrap();
        let o = CheckOptions::default();
        let st = check(&g, &f, &o).unwrap().strategy.unwrap();
        let goal = &goals_for(&g, &f, &o).unwrap()[0];
        let cg = st.coalition_game(&g).unwrap();
        let chain = induce_chain(&cg.game, &st).unwrap();
        let one = par_simulate(&pool(Some(1)).unwrap(), &chain, &cg.game, &goal.objective, 5000, 11, DEFAULT_MAX_STEPS).unwrap();
        let four = par_simulate(&pool(Some(4)).unwrap(), &chain, &cg.game, &goal.objective, 5000, 11, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(one, four);
        let seq = simulate(&chain, &cg.game, &goal.objective, 5000, 11, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(one.0, seq);
    }

    #[test]
    fn zero_runs_and_zero_threads_are_rejected() {
        assert!(matches!(pool(Some(0)), Err(Error::Input(_))));
        let g = fixtures::trivial();
        let mut st = SynthesizedStrategy::new(vec![vec![0]], csgcheck_core::strategy::MemoryKind::None);
        st.insert(0, 0, csgcheck_core::strategy::Decision::Profile(vec![vec![1.0]]));
        let cg = st.coalition_game(&g).unwrap();
        let chain = induce_chain(&cg.game, &st).unwrap();
        let obj = ResolvedObjective::Next { target: vec![true; g.num_states()] };
        assert!(matches!(par_simulate(&pool(Some(1)).unwrap(), &chain, &cg.game, &obj, 0, 1, 10), Err(Error::Input(_))));
    }
}
