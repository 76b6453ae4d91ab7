//! Finite-memory strategy profiles produced by the checker.
//!
//! Decisions are expressed over the coalition game: coalition `c` chooses
//! among `coalition_game.available(state, c)`, and joint decisions are
//! distributions over the transitions of the coalition game in that state.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::game::{build_coalition_game, CoalitionGame, CoalitionPartition, Csg};
use crate::num::PROB_TOLERANCE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryKind {
    /// Memoryless.
    None,
    /// Remaining steps of a finite horizon. Memory 0 ends the strategy.
    Steps,
    /// Bit `i` records that coalition `i` has reached its target. Memory
    /// with every bit set ends the strategy.
    Flags,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    /// One distribution per coalition over its available actions.
    Profile(Vec<Vec<f64>>),
    /// A distribution over the joint actions (transitions) of the state.
    Joint(Vec<f64>),
}

impl Decision {
    pub fn is_joint(&self) -> bool {
        matches!(self, Decision::Joint(_))
    }

    /// The decision as a distribution over the transitions of `state` in
    /// the coalition game, in transition order.
    pub fn transition_distribution(&self, game: &Csg, state: usize) -> Result<Vec<f64>> {
        let transitions = game.transitions(state);
        match self {
            Decision::Joint(p) => {
                if p.len() != transitions.len() {
                    bail!(Input, "joint decision in state {} has {} entries, expected {}", state, p.len(), transitions.len());
                }
                Ok(p.clone())
            }
            Decision::Profile(rows) => {
                if rows.len() != game.num_players() {
                    bail!(Input, "decision in state {} has {} rows for {} coalitions", state, rows.len(), game.num_players());
                }
                for (c, row) in rows.iter().enumerate() {
                    if row.len() != game.available(state, c).len() {
                        bail!(Input, "decision row {} in state {} has the wrong length", c, state);
                    }
                }
                Ok(transitions
                    .iter()
                    .map(|t| {
                        t.joint
                            .iter()
                            .enumerate()
                            .map(|(c, a)| {
                                let pos = game.available(state, c).binary_search(a).unwrap_or(0);
                                rows[c][pos]
                            })
                            .product()
                    })
                    .collect())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |p: &[f64]| -> Result<()> {
            let sum: f64 = p.iter().sum();
            if p.iter().any(|&x| !(x >= -PROB_TOLERANCE) || !x.is_finite()) || (sum - 1.0).abs() > 1e-6 {
                bail!(Input, "decision is not a probability distribution (sum {})", sum);
            }
            Ok(())
        };
        match self {
            Decision::Profile(rows) => rows.iter().try_for_each(|r| check(r)),
            Decision::Joint(p) => check(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedStrategy {
    /// Player indices of each coalition, in coalition order.
    pub coalitions: Vec<Vec<usize>>,
    pub memory_kind: MemoryKind,
    /// Horizon for step memory; unused otherwise.
    pub horizon: usize,
    /// Target membership per coalition, used to update flag memory.
    pub flag_targets: Vec<Vec<bool>>,
    pub entries: BTreeMap<(usize, usize), Decision>,
}

impl SynthesizedStrategy {
    pub fn new(coalitions: Vec<Vec<usize>>, memory_kind: MemoryKind) -> Self {
        SynthesizedStrategy { coalitions, memory_kind, horizon: 0, flag_targets: Vec::new(), entries: BTreeMap::new() }
    }

    /// The coalition game the decisions refer to.
    pub fn coalition_game(&self, game: &Csg) -> Result<CoalitionGame> {
        let partition = CoalitionPartition::new(self.coalitions.clone())?;
        if !partition.uncovered(game.num_players()).is_empty() {
            bail!(Input, "strategy coalitions do not cover every player");
        }
        build_coalition_game(game, &partition)
    }

    fn flag_bits(&self, state: usize) -> usize {
        self.flag_targets.iter().enumerate().filter(|(_, t)| t.get(state).copied().unwrap_or(false)).fold(0, |m, (i, _)| m | (1 << i))
    }

    /// Memory when the play starts in `state`.
    pub fn start_memory(&self, state: usize) -> usize {
        match self.memory_kind {
            MemoryKind::None => 0,
            MemoryKind::Steps => self.horizon,
            MemoryKind::Flags => self.flag_bits(state),
        }
    }

    /// Memory after moving to `successor`.
    pub fn next_memory(&self, memory: usize, successor: usize) -> usize {
        match self.memory_kind {
            MemoryKind::None => 0,
            MemoryKind::Steps => memory.saturating_sub(1),
            MemoryKind::Flags => memory | self.flag_bits(successor),
        }
    }

    /// Whether the strategy has ended: no further decisions are made.
    pub fn is_terminal(&self, memory: usize) -> bool {
        match self.memory_kind {
            MemoryKind::None => false,
            MemoryKind::Steps => memory == 0,
            MemoryKind::Flags => memory + 1 == 1 << self.flag_targets.len(),
        }
    }

    pub fn decision(&self, state: usize, memory: usize) -> Option<&Decision> {
        self.entries.get(&(state, memory))
    }

    pub fn insert(&mut self, state: usize, memory: usize, decision: Decision) {
        self.entries.insert((state, memory), decision);
    }

    /// Checks that every stored decision is a distribution of the right
    /// shape for `game`'s coalition game.
    pub fn validate(&self, game: &Csg) -> Result<()> {
        let cg = self.coalition_game(game)?;
        for (&(s, m), d) in &self.entries {
            if s >= cg.game.num_states() {
                bail!(Input, "strategy refers to unknown state {}", s);
            }
            d.validate()?;
            d.transition_distribution(&cg.game, s)?;
            if self.memory_kind == MemoryKind::Steps && m > self.horizon {
                bail!(Input, "memory {} exceeds horizon {}", m, self.horizon);
            }
        }
        if self.memory_kind == MemoryKind::Flags && self.flag_targets.iter().any(|t| t.len() != game.num_states()) {
            bail!(Input, "flag targets do not cover the state space");
        }
        Ok(())
    }
}

/// A pure per-coalition decision playing the first available action.
pub(crate) fn first_actions(game: &Csg, state: usize) -> Decision {
    Decision::Profile(
        (0..game.num_players())
            .map(|c| {
                let mut row = vec![0.0; game.available(state, c).len()];
                row[0] = 1.0;
                row
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures;

    #[test]
    fn profile_decisions_expand_to_transitions() {
        let g = fixtures::pennies();
        let d = Decision::Profile(vec![vec![0.25, 0.75], vec![0.5, 0.5]]);
        let p = d.transition_distribution(&g, 0).unwrap();
        assert_eq!(p, vec![0.125, 0.125, 0.375, 0.375]);
        assert!(Decision::Joint(vec![1.0]).transition_distribution(&g, 0).is_err());
    }

    #[test]
    fn memory_updates() {
        let mut s = SynthesizedStrategy::new(vec![vec![0], vec![1]], MemoryKind::Flags);
        s.flag_targets = vec![vec![false, true, false], vec![false, false, true]];
        assert_eq!(s.start_memory(0), 0);
        assert_eq!(s.next_memory(0, 1), 1);
        assert_eq!(s.next_memory(1, 2), 3);
        assert!(s.is_terminal(3));
        let mut k = SynthesizedStrategy::new(vec![vec![0, 1]], MemoryKind::Steps);
        k.horizon = 2;
        assert_eq!(k.start_memory(0), 2);
        assert!(k.is_terminal(k.next_memory(1, 0)));
    }
}
