//! Monte Carlo estimates of objective values on an induced chain.
//!
//! Run `i` of a simulation seeded with `seed` draws from ChaCha8 seeded by
//! `seed_from_u64(seed)` on stream `i`, so runs can execute in any order
//! or in parallel and still give identical outcomes.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::chain::{flag_mask, InducedChain};
use super::exact::{backward_closure, remaining, satisfied};
use crate::checker::ResolvedObjective;
use crate::error::{bail, Result};
use crate::game::Csg;
use crate::num::sqrt;

/// Step cap for objectives without a horizon.
pub const DEFAULT_MAX_STEPS: usize = 100_000;

/// Normal quantile for a two-sided 95% interval.
const Z95: f64 = 1.959963984540054;

/// The generator for run `run` of a simulation seeded with `seed`.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

fn uniform<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn pick<R: RngCore, T: Copy>(rng: &mut R, items: &[(T, f64)]) -> T {
    let mut u = uniform(rng);
    for &(x, p) in items {
        if u < p {
            return x;
        }
        u -= p;
    }
    // rounding left a sliver of mass past the end
    items.iter().rev().find(|x| x.1 > 0.0).map_or(items[0].0, |x| x.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub value: f64,
    /// The step cap ended the run before the outcome was decided.
    pub truncated: bool,
}

/// Samples paths of one objective on one chain.
pub struct Sampler<'a> {
    chain: &'a InducedChain,
    game: &'a Csg,
    objective: &'a ResolvedObjective,
    sat: Vec<bool>,
    hopeless: Vec<bool>,
}

impl<'a> Sampler<'a> {
    /// `game` is the strategy's coalition game.
    pub fn new(chain: &'a InducedChain, game: &'a Csg, objective: &'a ResolvedObjective) -> Self {
        let n = chain.len();
        let (sat, hopeless) = match objective.target() {
            Some(target) => {
                let mask = flag_mask(chain.memory_kind, &chain.flag_targets, target);
                let sat = satisfied(&chain.states, mask, target);
                let left = objective.allowed(target.len());
                let through: Vec<bool> = chain.states.iter().map(|&(s, _)| left[s]).collect();
                let can = backward_closure(&chain.predecessors(), &sat, &through);
                (sat, can.iter().map(|&b| !b).collect())
            }
            None => (alloc::vec![false; n], alloc::vec![false; n]),
        };
        Sampler { chain, game, objective, sat, hopeless }
    }

    /// Samples one path and returns the objective's value on it.
    pub fn run<R: RngCore>(&self, rng: &mut R, max_steps: usize) -> RunOutcome {
        let chain = self.chain;
        let reward = self.objective.is_reward();
        let mut x = chain.initial;
        let mut acc = 0.0;
        let mut left = match self.objective.horizon() {
            Some(k) => remaining(chain.memory_kind, chain.horizon, k, chain.states[x].1),
            None => isize::MAX,
        };
        for _ in 0..=max_steps {
            let s = chain.states[x].0;
            if self.sat[x] {
                return RunOutcome { value: if reward { acc } else { 1.0 }, truncated: false };
            }
            if self.hopeless[x] {
                return RunOutcome { value: if reward { f64::INFINITY } else { 0.0 }, truncated: false };
            }
            if left != isize::MAX {
                if let Some(v) = self.objective.fixed_value(self.game, s, left) {
                    return RunOutcome { value: acc + v, truncated: false };
                }
                left -= 1;
            }
            if chain.terminal[x] {
                continue;
            }
            let c = pick(rng, &chain.choices[x].iter().enumerate().map(|(i, &(_, q))| (i, q)).collect::<Vec<_>>());
            acc += self.objective.immediate(self.game, s, chain.choices[x][c].0);
            x = pick(rng, &chain.outcomes[x][c]);
        }
        RunOutcome { value: if reward { acc } else { 0.0 }, truncated: true }
    }
}

/// Sample mean with a 95% normal-approximation half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub runs: usize,
    pub truncated: usize,
    pub seed: u64,
}

impl SimulationEstimate {
    pub fn from_outcomes(outcomes: &[RunOutcome], seed: u64) -> Self {
        let runs = outcomes.len();
        let truncated = outcomes.iter().filter(|o| o.truncated).count();
        if runs == 0 {
            return SimulationEstimate { mean: f64::NAN, half_width: f64::INFINITY, runs, truncated, seed };
        }
        let mean = outcomes.iter().map(|o| o.value).sum::<f64>() / runs as f64;
        let half_width = if !mean.is_finite() || runs < 2 {
            f64::INFINITY
        } else {
            let var = outcomes.iter().map(|o| (o.value - mean) * (o.value - mean)).sum::<f64>() / (runs - 1) as f64;
            Z95 * sqrt(var / runs as f64)
        };
        SimulationEstimate { mean, half_width, runs, truncated, seed }
    }

    pub fn contains(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.half_width || value == self.mean
    }
}

/// Runs `runs` simulations sequentially.
pub fn simulate(
    chain: &InducedChain,
    game: &Csg,
    objective: &ResolvedObjective,
    runs: usize,
    seed: u64,
    max_steps: usize,
) -> Result<SimulationEstimate> {
    if runs == 0 {
        bail!(Input, "a simulation needs at least one run");
    }
    let sampler = Sampler::new(chain, game, objective);
    let outcomes: Vec<RunOutcome> = (0..runs).map(|i| sampler.run(&mut run_rng(seed, i), max_steps)).collect();
    Ok(SimulationEstimate::from_outcomes(&outcomes, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate_exact, induce_chain};
    use crate::game::fixtures;
    use crate::strategy::{Decision, MemoryKind, SynthesizedStrategy};
    use alloc::vec;

    fn pennies_with(p: f64) -> (Csg, InducedChain) {
        let g = fixtures::pennies();
        let mut st = SynthesizedStrategy::new(vec![vec![0], vec![1]], MemoryKind::None);
        for s in 0..g.num_states() {
            let rows: Vec<Vec<f64>> = (0..2)
                .map(|c| if g.available(s, c).len() == 2 { vec![p, 1.0 - p] } else { vec![1.0] })
                .collect();
            st.insert(s, 0, Decision::Profile(rows));
        }
        let c = induce_chain(&g, &st).unwrap();
        (g, c)
    }

    fn win1(g: &Csg) -> ResolvedObjective {
        let t = g.label_states(g.label_index("win1").unwrap()).to_vec();
        ResolvedObjective::Until { left: vec![true; g.num_states()], right: t, bound: None }
    }

    #[test]
    fn deterministic_chain_has_zero_variance() {
        let (g, c) = pennies_with(1.0);
        let e = simulate(&c, &g, &win1(&g), 50, 7, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!((e.mean, e.half_width), (1.0, 0.0));
    }

    #[test]
    fn uniform_pennies_estimate() {
        let (g, c) = pennies_with(0.5);
        let obj = win1(&g);
        let e = simulate(&c, &g, &obj, 100_000, 1, DEFAULT_MAX_STEPS).unwrap();
        assert!((e.mean - 0.5).abs() < 0.01, "{:?}", e);
        assert!(e.contains(evaluate_exact(&c, &g, &obj).unwrap()[c.initial]));
    }

    #[test]
    fn runs_are_reproducible_and_independent_of_order() {
        let (g, c) = pennies_with(0.5);
        let obj = win1(&g);
        let s = Sampler::new(&c, &g, &obj);
        let forward: Vec<RunOutcome> = (0..64).map(|i| s.run(&mut run_rng(3, i), 10)).collect();
        let backward: Vec<RunOutcome> = (0..64).rev().map(|i| s.run(&mut run_rng(3, i), 10)).collect();
        assert_eq!(forward, backward.into_iter().rev().collect::<Vec<_>>());
        assert!(simulate(&c, &g, &obj, 0, 3, 10).is_err());
    }

    #[test]
    fn half_width_shrinks_with_root_n() {
        let (g, c) = pennies_with(0.5);
        let obj = win1(&g);
        let hw: Vec<f64> = [1_000, 10_000, 100_000]
            .iter()
            .map(|&n| simulate(&c, &g, &obj, n, 11, DEFAULT_MAX_STEPS).unwrap().half_width)
            .collect();
        let slope = (libm::log10(hw[2]) - libm::log10(hw[0])) / 2.0;
        assert!((slope + 0.5).abs() <= 0.1, "slope {}", slope);
    }
}
