//! The Markov chain a complete strategy profile induces on a game.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::Csg;
use crate::strategy::{MemoryKind, SynthesizedStrategy};

/// Discrete-time Markov chain over reachable (state, memory) pairs.
///
/// The game is the coalition game of the strategy. A product state whose
/// memory ends the strategy is absorbing and makes no choice.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain {
    /// Game state and memory of each product state.
    pub states: Vec<(usize, usize)>,
    /// Distribution over the game transitions taken in each product state.
    pub choices: Vec<Vec<(usize, f64)>>,
    /// Product successors of each entry of `choices`.
    pub outcomes: Vec<Vec<Vec<(usize, f64)>>>,
    /// Successor distribution of each product state, merged and sorted.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub terminal: Vec<bool>,
    pub initial: usize,
    pub memory_kind: MemoryKind,
    pub horizon: usize,
    pub flag_targets: Vec<Vec<bool>>,
    index: BTreeMap<(usize, usize), usize>,
}

impl InducedChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of the product state `(state, memory)`, if reachable.
    pub fn product(&self, state: usize, memory: usize) -> Option<usize> {
        self.index.get(&(state, memory)).copied()
    }

    /// Predecessor lists over positive-probability edges.
    pub(crate) fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.len()];
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, p) in row {
                if p > 0.0 {
                    pred[y].push(x);
                }
            }
        }
        pred
    }
}

/// Bits of the flag memory that record reaching exactly `target`.
pub(crate) fn flag_mask(memory_kind: MemoryKind, flag_targets: &[Vec<bool>], target: &[bool]) -> usize {
    if memory_kind != MemoryKind::Flags {
        return 0;
    }
    flag_targets.iter().enumerate().filter(|(_, t)| t.as_slice() == target).fold(0, |m, (i, _)| m | (1 << i))
}

/// Product successors of taking transition `t` in `(state, memory)`.
pub(crate) fn step<'a>(
    game: &'a Csg,
    strategy: &'a SynthesizedStrategy,
    state: usize,
    memory: usize,
    t: usize,
) -> impl Iterator<Item = ((usize, usize), f64)> + 'a {
    game.transitions(state)[t].successors.iter().map(move |&(s, p)| ((s, strategy.next_memory(memory, s)), p))
}

/// Builds the chain reachable from the initial state of `game`, which must
/// be the strategy's coalition game.
pub fn induce_chain(game: &Csg, strategy: &SynthesizedStrategy) -> Result<InducedChain> {
    if strategy.coalitions.len() != game.num_players() {
        return Err(Error::Input(format!(
            "strategy has {} coalitions but the game has {} players",
            strategy.coalitions.len(),
            game.num_players()
        )));
    }
    let start = (game.initial(), strategy.start_memory(game.initial()));
    let mut chain = InducedChain {
        states: vec![start],
        choices: Vec::new(),
        outcomes: Vec::new(),
        rows: Vec::new(),
        terminal: Vec::new(),
        initial: 0,
        memory_kind: strategy.memory_kind,
        horizon: strategy.horizon,
        flag_targets: strategy.flag_targets.clone(),
        index: BTreeMap::new(),
    };
    chain.index.insert(start, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        let (s, m) = chain.states[x];
        if strategy.is_terminal(m) {
            chain.choices.push(Vec::new());
            chain.outcomes.push(Vec::new());
            chain.rows.push(vec![(x, 1.0)]);
            chain.terminal.push(true);
            continue;
        }
        let decision = strategy
            .decision(s, m)
            .ok_or_else(|| Error::IncompleteStrategy(format!("state {} with memory {}", s, m)))?;
        let dist = decision.transition_distribution(game, s)?;
        let choice: Vec<(usize, f64)> = dist.into_iter().enumerate().filter(|&(_, p)| p > 0.0).collect();
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        let mut outcomes = Vec::with_capacity(choice.len());
        for &(t, q) in &choice {
            let mut out = Vec::new();
            for (key, p) in step(game, strategy, s, m, t) {
                let y = match chain.index.get(&key) {
                    Some(&y) => y,
                    None => {
                        let y = chain.states.len();
                        chain.states.push(key);
                        chain.index.insert(key, y);
                        queue.push_back(y);
                        y
                    }
                };
                *row.entry(y).or_insert(0.0) += q * p;
                out.push((y, p));
            }
            outcomes.push(out);
        }
        chain.choices.push(choice);
        chain.outcomes.push(outcomes);
        chain.rows.push(row.into_iter().collect());
        chain.terminal.push(false);
    }
    Ok(chain)
}
