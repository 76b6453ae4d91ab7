//! Best-response checks: can a coalition gain by deviating from a profile?
//!
//! For coalition `i` the other coalitions keep playing the profile, which
//! turns the game into an MDP over (state, memory) pairs. In each product
//! state the profile's distribution over joint actions is split by the
//! action it recommends to `i`. The deviator sees its recommendation and
//! may replace it by any available action; the other coalitions' actions
//! follow their distribution conditioned on that recommendation. For a
//! profile of independent distributions the conditioning is vacuous and
//! this is the usual unilateral deviation.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::chain::{flag_mask, step, InducedChain};
use super::exact::{remaining, satisfied};
use super::{evaluate_exact, induce_chain, Goal};
use crate::equilibria::OptDirection;
use crate::error::{bail, Error, Result};
use crate::game::Csg;
use crate::strategy::SynthesizedStrategy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponseOptions {
    /// Value iteration stops once no value moves by more than this.
    pub residual: f64,
    pub max_iters: usize,
}

impl Default for BestResponseOptions {
    fn default() -> Self {
        BestResponseOptions { residual: 1e-8, max_iters: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Certified,
    Violated { coalition: usize, state: usize, memory: usize, gain: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseReport {
    /// Largest gain of each coalition over the product states the profile
    /// reaches. Never below zero up to solver accuracy.
    pub gains: Vec<f64>,
    /// Product state (state, memory) where each largest gain occurs.
    pub locations: Vec<(usize, usize)>,
    pub epsilon: f64,
    pub verdict: Verdict,
}

impl BestResponseReport {
    pub fn max_gain(&self) -> f64 {
        self.gains.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }
}

/// Alternatives of the deviator after one recommendation.
struct Group {
    prob: f64,
    /// Per deviator action, a distribution over game transitions.
    actions: Vec<Vec<(usize, f64)>>,
}

struct DeviationMdp {
    states: Vec<(usize, usize)>,
    index: BTreeMap<(usize, usize), usize>,
    /// Empty for product states where the strategy has ended.
    groups: Vec<Vec<Group>>,
    /// Product successors per game transition of the state.
    succ: Vec<Vec<Vec<(usize, f64)>>>,
}

impl DeviationMdp {
    fn build(game: &Csg, strategy: &SynthesizedStrategy, chain: &InducedChain, coalition: usize) -> Result<Self> {
        let mut mdp = DeviationMdp { states: Vec::new(), index: BTreeMap::new(), groups: Vec::new(), succ: Vec::new() };
        let mut queue = VecDeque::new();
        for &key in &chain.states {
            mdp.intern(key, &mut queue);
        }
        while let Some(x) = queue.pop_front() {
            let (s, m) = mdp.states[x];
            let transitions = game.transitions(s);
            let mut succ = vec![Vec::new(); transitions.len()];
            if strategy.is_terminal(m) {
                mdp.groups.push(Vec::new());
                mdp.succ.push(succ);
                continue;
            }
            let decision = strategy
                .decision(s, m)
                .ok_or_else(|| Error::IncompleteStrategy(format!("state {} with memory {}", s, m)))?;
            let dist = decision.transition_distribution(game, s)?;
            let mut by_rec: BTreeMap<usize, (f64, Vec<(usize, f64)>)> = BTreeMap::new();
            for (t, &p) in dist.iter().enumerate() {
                if p > 0.0 {
                    let e = by_rec.entry(transitions[t].joint[coalition]).or_insert((0.0, Vec::new()));
                    e.0 += p;
                    e.1.push((t, p));
                }
            }
            let own = game.available(s, coalition);
            let mut groups = Vec::with_capacity(by_rec.len());
            for (prob, others) in by_rec.into_values() {
                let mut actions = Vec::with_capacity(own.len());
                for &b in own {
                    let mut outcome = Vec::with_capacity(others.len());
                    for &(t, p) in &others {
                        let mut joint = transitions[t].joint.clone();
                        joint[coalition] = b;
                        let Some(t2) = game.transition_index(s, &joint) else {
                            bail!(Unsupported, "state {} has no transition for joint action {:?}", s, joint);
                        };
                        outcome.push((t2, p / prob));
                    }
                    actions.push(outcome);
                }
                groups.push(Group { prob, actions });
            }
            for g in &groups {
                for a in &g.actions {
                    for &(t, _) in a {
                        if succ[t].is_empty() {
                            succ[t] = step(game, strategy, s, m, t)
                                .filter(|&(_, p)| p > 0.0)
                                .map(|(key, p)| (mdp.intern(key, &mut queue), p))
                                .collect();
                        }
                    }
                }
            }
            mdp.groups.push(groups);
            mdp.succ.push(succ);
        }
        Ok(mdp)
    }

    fn intern(&mut self, key: (usize, usize), queue: &mut VecDeque<usize>) -> usize {
        if let Some(&x) = self.index.get(&key) {
            return x;
        }
        let x = self.states.len();
        self.states.push(key);
        self.index.insert(key, x);
        queue.push_back(x);
        x
    }

    fn len(&self) -> usize {
        self.states.len()
    }

    fn successors<'a>(&'a self, x: usize, action: &'a [(usize, f64)]) -> impl Iterator<Item = usize> + 'a {
        action.iter().flat_map(move |&(t, _)| self.succ[x][t].iter().map(|&(y, _)| y))
    }

    /// Expected immediate reward plus continuation of one deviator action.
    fn q<F: Fn(usize) -> f64>(&self, x: usize, action: &[(usize, f64)], immediate: &F, v: &[f64]) -> f64 {
        action
            .iter()
            .map(|&(t, q)| q * (immediate(t) + self.succ[x][t].iter().map(|&(y, p)| p * v[y]).sum::<f64>()))
            .sum()
    }

    /// One Bellman backup for a deviator optimizing in `dir`.
    fn backup<F: Fn(usize) -> f64>(&self, x: usize, dir: OptDirection, immediate: &F, v: &[f64]) -> f64 {
        if self.groups[x].is_empty() {
            return v[x];
        }
        self.groups[x]
            .iter()
            .map(|g| {
                let qs = g.actions.iter().map(|a| self.q(x, a, immediate, v));
                g.prob
                    * match dir {
                        OptDirection::Max => qs.fold(f64::NEG_INFINITY, f64::max),
                        OptDirection::Min => qs.fold(f64::INFINITY, f64::min),
                    }
            })
            .sum()
    }

    /// States from which the deviator reaches `sat` with probability one.
    fn almost_sure(&self, sat: &[bool]) -> Vec<bool> {
        let n = self.len();
        let mut y = vec![true; n];
        loop {
            let mut x = sat.to_vec();
            loop {
                let mut changed = false;
                for s in 0..n {
                    if x[s] || !y[s] || self.groups[s].is_empty() {
                        continue;
                    }
                    let safe = |a: &Vec<(usize, f64)>| self.successors(s, a).all(|t| y[t]);
                    let all_groups_safe = self.groups[s].iter().all(|g| g.actions.iter().any(safe));
                    let progress = self.groups[s]
                        .iter()
                        .any(|g| g.actions.iter().any(|a| safe(a) && self.successors(s, a).any(|t| x[t])));
                    if all_groups_safe && progress {
                        x[s] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            if x == y {
                return y;
            }
            y = x;
        }
    }

    /// States from which the deviator can miss `sat` with positive
    /// probability.
    fn can_avoid(&self, sat: &[bool]) -> Vec<bool> {
        let n = self.len();
        let mut z: Vec<bool> = sat.iter().map(|&b| !b).collect();
        loop {
            let next: Vec<bool> = (0..n)
                .map(|s| z[s] && self.groups[s].iter().all(|g| g.actions.iter().any(|a| self.successors(s, a).all(|t| z[t]))))
                .collect();
            if next == z {
                break;
            }
            z = next;
        }
        loop {
            let mut changed = false;
            for s in 0..n {
                if z[s] || sat[s] {
                    continue;
                }
                if self.groups[s].iter().any(|g| g.actions.iter().any(|a| self.successors(s, a).any(|t| z[t]))) {
                    z[s] = true;
                    changed = true;
                }
            }
            if !changed {
                return z;
            }
        }
    }
}

fn diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() }).fold(0.0, f64::max)
}

/// Value iteration for unbounded objectives. `fixed` pins values; all
/// other states start at `init` and are backed up.
fn iterate<F: Fn(usize, &[f64]) -> f64>(init: Vec<f64>, fixed: &[bool], options: &BestResponseOptions, backup: F) -> Result<Vec<f64>> {
    let mut v = init;
    let mut residual = f64::INFINITY;
    for _ in 0..options.max_iters {
        let next: Vec<f64> = (0..v.len()).map(|x| if fixed[x] { v[x] } else { backup(x, &v) }).collect();
        residual = diff(&v, &next);
        v = next;
        if residual < options.residual {
            return Ok(v);
        }
    }
    Err(Error::NonConvergence { iterations: options.max_iters, residual })
}

/// Optimal deviation values from every product state of the MDP, for the
/// product states of the chain.
fn deviation_values(
    game: &Csg,
    chain: &InducedChain,
    mdp: &DeviationMdp,
    goal: &Goal,
    options: &BestResponseOptions,
) -> Result<Vec<f64>> {
    let obj = &goal.objective;
    let dir = goal.direction;
    let n = mdp.len();
    let values = match obj.horizon() {
        Some(k) => {
            let want: Vec<isize> = mdp.states.iter().map(|&(_, m)| remaining(chain.memory_kind, chain.horizon, k, m)).collect();
            let mut out: Vec<f64> = (0..n)
                .map(|x| if want[x] < 0 { obj.fixed_value(game, mdp.states[x].0, want[x]).unwrap_or(0.0) } else { 0.0 })
                .collect();
            let mut prev = vec![0.0; n];
            for j in 0..=k {
                let cur: Vec<f64> = (0..n)
                    .map(|x| {
                        let s = mdp.states[x].0;
                        obj.fixed_value(game, s, j as isize)
                            .unwrap_or_else(|| mdp.backup(x, dir, &|t| obj.immediate(game, s, t), &prev))
                    })
                    .collect();
                for x in 0..n {
                    if want[x] == j as isize {
                        out[x] = cur[x];
                    }
                }
                prev = cur;
            }
            out
        }
        None => {
            let target = obj.target().unwrap_or(&[]);
            let mask = flag_mask(chain.memory_kind, &chain.flag_targets, target);
            let sat = satisfied(&mdp.states, mask, target);
            if obj.is_reward() {
                let infinite: Vec<bool> = match dir {
                    OptDirection::Min => mdp.almost_sure(&sat).into_iter().map(|b| !b).collect(),
                    OptDirection::Max => mdp.can_avoid(&sat),
                };
                let fixed: Vec<bool> = (0..n).map(|x| sat[x] || infinite[x]).collect();
                let init: Vec<f64> = (0..n).map(|x| if !sat[x] && infinite[x] { f64::INFINITY } else { 0.0 }).collect();
                iterate(init, &fixed, options, |x, v| {
                    let s = mdp.states[x].0;
                    mdp.backup(x, dir, &|t| obj.immediate(game, s, t), v)
                })?
            } else {
                let left = obj.allowed(target.len());
                let fixed: Vec<bool> = (0..n).map(|x| sat[x] || !left[mdp.states[x].0]).collect();
                let init: Vec<f64> = sat.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                iterate(init, &fixed, options, |x, v| mdp.backup(x, dir, &|_| 0.0, v))?
            }
        }
    };
    Ok(chain.states.iter().map(|key| values[mdp.index[key]]).collect())
}

/// Checks that no coalition gains more than `epsilon` by deviating, from
/// any product state the profile reaches. `goals` gives each coalition's
/// objective and direction; `game` is the strategy's coalition game.
pub fn best_response_check(
    game: &Csg,
    strategy: &SynthesizedStrategy,
    goals: &[Goal],
    epsilon: f64,
    options: &BestResponseOptions,
) -> Result<BestResponseReport> {
    if goals.len() != game.num_players() {
        bail!(Input, "{} goals for {} coalitions", goals.len(), game.num_players());
    }
    let chain = induce_chain(game, strategy)?;
    let mut gains = Vec::with_capacity(goals.len());
    let mut locations = Vec::with_capacity(goals.len());
    let mut verdict = Verdict::Certified;
    for (i, goal) in goals.iter().enumerate() {
        let own = evaluate_exact(&chain, game, &goal.objective)?;
        let mdp = DeviationMdp::build(game, strategy, &chain, i)?;
        let best = deviation_values(game, &chain, &mdp, goal, options)?;
        let mut worst = (f64::NEG_INFINITY, chain.states[chain.initial]);
        for x in 0..chain.len() {
            let gain = if best[x] == own[x] {
                0.0
            } else {
                match goal.direction {
                    OptDirection::Max => best[x] - own[x],
                    OptDirection::Min => own[x] - best[x],
                }
            };
            if gain > worst.0 || gain.is_nan() {
                worst = (if gain.is_nan() { f64::INFINITY } else { gain }, chain.states[x]);
            }
        }
        if worst.0 > epsilon && verdict == Verdict::Certified {
            verdict = Verdict::Violated { coalition: i, state: worst.1 .0, memory: worst.1 .1, gain: worst.0 };
        }
        gains.push(worst.0);
        locations.push(worst.1);
    }
    Ok(BestResponseReport { gains, locations, epsilon, verdict })
}
