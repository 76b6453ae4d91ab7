//! Exact objective values on an induced chain.

use alloc::vec;
use alloc::vec::Vec;

use super::chain::{flag_mask, InducedChain};
use crate::checker::ResolvedObjective;
use crate::error::{bail, Result};
use crate::game::Csg;
use crate::linalg;
use crate::strategy::MemoryKind;

/// States that reach a `seed` state through `through` states.
pub(crate) fn backward_closure(pred: &[Vec<usize>], seeds: &[bool], through: &[bool]) -> Vec<bool> {
    let mut set = seeds.to_vec();
    let mut stack: Vec<usize> = (0..set.len()).filter(|&x| set[x]).collect();
    while let Some(y) = stack.pop() {
        for &x in &pred[y] {
            if !set[x] && through[x] {
                set[x] = true;
                stack.push(x);
            }
        }
    }
    set
}

/// Product states where the objective's target counts as reached: the
/// game state is a target, or flag memory records an earlier visit.
pub(crate) fn satisfied(chain_states: &[(usize, usize)], mask: usize, target: &[bool]) -> Vec<bool> {
    chain_states.iter().map(|&(s, m)| target[s] || m & mask != 0).collect()
}

/// Remaining steps of a bounded objective with horizon `k` in a product
/// state with memory `m`.
pub(crate) fn remaining(memory_kind: MemoryKind, horizon: usize, k: usize, m: usize) -> isize {
    match memory_kind {
        MemoryKind::Steps => m as isize - (horizon as isize - k as isize),
        _ => k as isize,
    }
}

fn expected_immediate(chain: &InducedChain, game: &Csg, objective: &ResolvedObjective, x: usize) -> f64 {
    let s = chain.states[x].0;
    chain.choices[x].iter().map(|&(t, q)| q * objective.immediate(game, s, t)).sum()
}

/// Value of `objective` from every product state of the chain.
///
/// Unbounded operators are solved as linear systems. Expected rewards are
/// +∞ in product states that miss the target with positive probability.
/// `game` is the strategy's coalition game.
pub fn evaluate_exact(chain: &InducedChain, game: &Csg, objective: &ResolvedObjective) -> Result<Vec<f64>> {
    match objective.horizon() {
        Some(k) => bounded(chain, game, objective, k),
        None if objective.is_reward() => reward_reach(chain, game, objective),
        None => until(chain, objective),
    }
}

fn bounded(chain: &InducedChain, game: &Csg, objective: &ResolvedObjective, k: usize) -> Result<Vec<f64>> {
    if chain.memory_kind == MemoryKind::Steps && k > chain.horizon {
        bail!(Input, "objective horizon {} exceeds the strategy horizon {}", k, chain.horizon);
    }
    let n = chain.len();
    let want: Vec<isize> = chain.states.iter().map(|&(_, m)| remaining(chain.memory_kind, chain.horizon, k, m)).collect();
    let mut out: Vec<f64> = (0..n)
        .map(|x| if want[x] < 0 { objective.fixed_value(game, chain.states[x].0, want[x]).unwrap_or(0.0) } else { 0.0 })
        .collect();
    let mut prev = vec![0.0; n];
    for j in 0..=k {
        let mut cur = vec![0.0; n];
        for x in 0..n {
            let s = chain.states[x].0;
            cur[x] = match objective.fixed_value(game, s, j as isize) {
                Some(v) => v,
                None => {
                    let future: f64 = chain.rows[x].iter().map(|&(y, p)| p * prev[y]).sum();
                    expected_immediate(chain, game, objective, x) + future
                }
            };
            if want[x] == j as isize {
                out[x] = cur[x];
            }
        }
        prev = cur;
    }
    Ok(out)
}

/// Solves `v(x) = b(x) + Σ P(x,y) v(y)` over the `unknown` states, with
/// `fixed` supplying the values of all other states.
fn linear_solve(chain: &InducedChain, unknown: &[bool], fixed: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let vars: Vec<usize> = (0..chain.len()).filter(|&x| unknown[x]).collect();
    let mut col = vec![usize::MAX; chain.len()];
    for (i, &x) in vars.iter().enumerate() {
        col[x] = i;
    }
    let m = vars.len();
    let mut a = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for (i, &x) in vars.iter().enumerate() {
        a[i * m + i] += 1.0;
        rhs[i] = b[x];
        for &(y, p) in &chain.rows[x] {
            if unknown[y] {
                a[i * m + col[y]] -= p;
            } else {
                rhs[i] += p * fixed[y];
            }
        }
    }
    let sol = linalg::solve(a, rhs)?;
    let mut out = fixed.to_vec();
    for (i, &x) in vars.iter().enumerate() {
        out[x] = sol[i];
    }
    Ok(out)
}

fn until(chain: &InducedChain, objective: &ResolvedObjective) -> Result<Vec<f64>> {
    let n = chain.len();
    let target = objective.target().unwrap_or(&[]);
    let left = objective.allowed(target.len());
    let mask = flag_mask(chain.memory_kind, &chain.flag_targets, target);
    let sat = satisfied(&chain.states, mask, target);
    let through: Vec<bool> = chain.states.iter().map(|&(s, _)| left[s]).collect();
    let can = backward_closure(&chain.predecessors(), &sat, &through);
    let unknown: Vec<bool> = (0..n).map(|x| can[x] && !sat[x]).collect();
    let fixed: Vec<f64> = sat.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut v = linear_solve(chain, &unknown, &fixed, &vec![0.0; n])?;
    for x in v.iter_mut() {
        *x = x.clamp(0.0, 1.0);
    }
    Ok(v)
}

fn reward_reach(chain: &InducedChain, game: &Csg, objective: &ResolvedObjective) -> Result<Vec<f64>> {
    let n = chain.len();
    let target = objective.target().unwrap_or(&[]);
    let mask = flag_mask(chain.memory_kind, &chain.flag_targets, target);
    let sat = satisfied(&chain.states, mask, target);
    let pred = chain.predecessors();
    let everywhere = vec![true; n];
    let can = backward_closure(&pred, &sat, &everywhere);
    let stuck: Vec<bool> = can.iter().map(|&b| !b).collect();
    let not_sat: Vec<bool> = sat.iter().map(|&b| !b).collect();
    let infinite = backward_closure(&pred, &stuck, &not_sat);
    let unknown: Vec<bool> = (0..n).map(|x| !sat[x] && !infinite[x]).collect();
    let fixed: Vec<f64> = (0..n).map(|x| if infinite[x] && !sat[x] { f64::INFINITY } else { 0.0 }).collect();
    let b: Vec<f64> = (0..n).map(|x| if unknown[x] { expected_immediate(chain, game, objective, x) } else { 0.0 }).collect();
    linear_solve(chain, &unknown, &fixed, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::induce_chain;
    use crate::game::CsgBuilder;
    use crate::strategy::{Decision, SynthesizedStrategy};

    /// Stay with probability 1/2, else advance to the absorbing target.
    fn geometric() -> (Csg, InducedChain) {
        let mut b = CsgBuilder::new();
        b.add_player("a", &["go"]);
        b.add_states(2);
        b.transition(0, vec![1], vec![(0, 0.5), (1, 0.5)]);
        b.transition(1, vec![1], vec![(1, 1.0)]);
        b.label("goal", &[1]);
        let r = b.reward_structure("steps");
        b.state_reward(r, 0, 1.0);
        let g = b.build().unwrap();
        let mut st = SynthesizedStrategy::new(vec![vec![0]], MemoryKind::None);
        st.insert(0, 0, Decision::Profile(vec![vec![1.0]]));
        st.insert(1, 0, Decision::Profile(vec![vec![1.0]]));
        let c = induce_chain(&g, &st).unwrap();
        (g, c)
    }

    #[test]
    fn geometric_waiting_time() {
        let (g, c) = geometric();
        let target = vec![false, true];
        let v = evaluate_exact(&c, &g, &ResolvedObjective::Reach { reward: 0, target: target.clone() }).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-12 && v[1] == 0.0);
        let p = evaluate_exact(&c, &g, &ResolvedObjective::Until { left: vec![true; 2], right: target, bound: None }).unwrap();
        assert_eq!(p, vec![1.0, 1.0]);
    }

    #[test]
    fn bounded_base_case_and_recurrence() {
        let (g, c) = geometric();
        let right = vec![false, true];
        let at = |k| {
            evaluate_exact(&c, &g, &ResolvedObjective::Until { left: vec![true; 2], right: right.clone(), bound: Some(k) }).unwrap()
        };
        assert_eq!(at(0), vec![0.0, 1.0]);
        assert!((at(3)[0] - 0.875).abs() < 1e-12);
        let cum = evaluate_exact(&c, &g, &ResolvedObjective::Cumulative { reward: 0, steps: 2 }).unwrap();
        assert!((cum[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn missed_target_gives_infinite_reward() {
        let (g, c) = geometric();
        let v = evaluate_exact(&c, &g, &ResolvedObjective::Reach { reward: 0, target: vec![true, false] }).unwrap();
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], f64::INFINITY);
    }
}
