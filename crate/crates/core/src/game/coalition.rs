use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{Csg, CsgBuilder, IDLE, IDLE_NAME};
use crate::error::{bail, Result};

/// Disjoint, nonempty groups of players.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalitionPartition {
    coalitions: Vec<Vec<usize>>,
}

impl CoalitionPartition {
    pub fn new(coalitions: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (c, members) in coalitions.iter().enumerate() {
            if members.is_empty() {
                bail!(Input, "coalition {} is empty", c + 1);
            }
            for &p in members {
                if let Some(prev) = seen.insert(p, c) {
                    if prev == c {
                        bail!(Input, "player {} listed twice in coalition {}", p + 1, c + 1);
                    }
                    bail!(Input, "player {} belongs to coalitions {} and {}", p + 1, prev + 1, c + 1);
                }
            }
        }
        Ok(CoalitionPartition { coalitions })
    }

    /// Every player in its own coalition.
    pub fn singletons(num_players: usize) -> Self {
        CoalitionPartition { coalitions: (0..num_players).map(|p| vec![p]).collect() }
    }

    pub fn coalitions(&self) -> &[Vec<usize>] {
        &self.coalitions
    }

    pub fn len(&self) -> usize {
        self.coalitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coalitions.is_empty()
    }

    /// Players of `0..num_players` not in any coalition.
    pub fn uncovered(&self, num_players: usize) -> Vec<usize> {
        (0..num_players).filter(|p| !self.coalitions.iter().any(|c| c.contains(p))).collect()
    }

    /// This partition with the uncovered players appended as one final
    /// coalition, if there are any.
    pub fn completed(&self, num_players: usize) -> Result<Self> {
        if let Some(&p) = self.coalitions.iter().flatten().find(|&&p| p >= num_players) {
            bail!(Input, "player {} does not exist", p + 1);
        }
        let rest = self.uncovered(num_players);
        let mut coalitions = self.coalitions.clone();
        if !rest.is_empty() {
            coalitions.push(rest);
        }
        Ok(CoalitionPartition { coalitions })
    }
}

/// A coalition game together with the map back to the original actions.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionGame {
    pub game: Csg,
    pub partition: CoalitionPartition,
    /// For each coalition and each of its action ids, the original action
    /// of every member (in member order).
    pub action_tuples: Vec<Vec<Vec<usize>>>,
}

impl CoalitionGame {
    /// Original joint action of the full game for a coalition joint action.
    pub fn lift_joint(&self, joint: &[usize], num_players: usize) -> Vec<usize> {
        let mut out = vec![IDLE; num_players];
        for (c, &a) in joint.iter().enumerate() {
            for (&p, &orig) in self.partition.coalitions()[c].iter().zip(&self.action_tuples[c][a]) {
                out[p] = orig;
            }
        }
        out
    }

    /// Coalition joint action for an original joint action, if it exists.
    pub fn project_joint(&self, joint: &[usize]) -> Option<Vec<usize>> {
        self.partition
            .coalitions()
            .iter()
            .enumerate()
            .map(|(c, members)| {
                let tuple: Vec<usize> = members.iter().map(|&p| joint[p]).collect();
                self.action_tuples[c].iter().position(|t| *t == tuple)
            })
            .collect()
    }
}

/// Groups players into coalitions that act as single players.
///
/// Players missing from the partition form one extra, final coalition. A
/// coalition with one member keeps that player's action ids and names, so
/// the singleton partition reproduces the game exactly.
pub fn build_coalition_game(game: &Csg, partition: &CoalitionPartition) -> Result<CoalitionGame> {
    let partition = partition.completed(game.num_players())?;
    let mut action_tuples = Vec::with_capacity(partition.len());
    let mut lookup: Vec<BTreeMap<Vec<usize>, usize>> = Vec::with_capacity(partition.len());
    let mut builder = CsgBuilder::new();
    for members in partition.coalitions() {
        if members.len() == 1 {
            let p = members[0];
            let names: Vec<String> = game.action_names(p)[1..].to_vec();
            builder.add_player(&game.player_names()[p], &names);
            let tuples: Vec<Vec<usize>> = (0..game.action_names(p).len()).map(|a| vec![a]).collect();
            lookup.push(tuples.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect());
            action_tuples.push(tuples);
            continue;
        }
        let mut used = BTreeMap::new();
        for s in 0..game.num_states() {
            for t in game.transitions(s) {
                let tuple: Vec<usize> = members.iter().map(|&p| t.joint[p]).collect();
                used.insert(tuple, ());
            }
        }
        let idle = vec![IDLE; members.len()];
        let mut tuples = vec![idle.clone()];
        tuples.extend(used.into_keys().filter(|t| *t != idle));
        let names: Vec<String> = tuples[1..]
            .iter()
            .map(|t| {
                let parts: Vec<&str> = members
                    .iter()
                    .zip(t)
                    .map(|(&p, &a)| if a == IDLE { IDLE_NAME } else { game.action_name(p, a) })
                    .collect();
                format!("({})", parts.join(","))
            })
            .collect();
        let player_name: Vec<&str> = members.iter().map(|&p| game.player_names()[p].as_str()).collect();
        builder.add_player(&player_name.join(","), &names);
        lookup.push(tuples.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect());
        action_tuples.push(tuples);
    }
    builder.add_states(game.num_states());
    builder.initial(game.initial());
    if let Some(names) = game.state_names() {
        builder.state_names(names.to_vec());
    }
    let project = |joint: &[usize]| -> Vec<usize> {
        partition
            .coalitions()
            .iter()
            .zip(&lookup)
            .map(|(members, map)| {
                let tuple: Vec<usize> = members.iter().map(|&p| joint[p]).collect();
                map[&tuple]
            })
            .collect()
    };
    for s in 0..game.num_states() {
        for t in game.transitions(s) {
            builder.transition(s, project(&t.joint), t.successors.clone());
        }
    }
    for (l, name) in game.label_names().iter().enumerate() {
        let states: Vec<usize> = (0..game.num_states()).filter(|&s| game.has_label(s, l)).collect();
        builder.label(name, &states);
    }
    for rs in game.rewards() {
        let r = builder.reward_structure(&rs.name);
        for s in 0..game.num_states() {
            builder.state_reward(r, s, rs.state_rewards[s]);
            for (i, t) in game.transitions(s).iter().enumerate() {
                let v = rs.action_rewards[s][i];
                if v != 0.0 {
                    builder.action_reward(r, s, project(&t.joint), v);
                }
            }
        }
    }
    if let Some(sym) = game.symbols() {
        builder.symbols(sym.clone());
    }
    let coalition_game = builder.build()?;
    Ok(CoalitionGame { game: coalition_game, partition, action_tuples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures;

    #[test]
    fn identity_partition_is_identical() {
        let g = fixtures::intersection(-1000.0);
        let cg = build_coalition_game(&g, &CoalitionPartition::singletons(3)).unwrap();
        assert_eq!(cg.game, g);
    }

    #[test]
    fn overlapping_coalitions_rejected() {
        assert!(CoalitionPartition::new(vec![vec![0, 1], vec![1]]).is_err());
        assert!(CoalitionPartition::new(vec![vec![0], vec![]]).is_err());
    }

    #[test]
    fn uncovered_players_form_final_coalition() {
        let g = fixtures::intersection(-1000.0);
        let cg = build_coalition_game(&g, &CoalitionPartition::new(vec![vec![1]]).unwrap()).unwrap();
        assert_eq!(cg.partition.coalitions(), &[vec![1], vec![0, 2]]);
        assert_eq!(cg.game.num_players(), 2);
        // four member tuples plus the all-idle one
        assert_eq!(cg.game.action_names(1).len(), 5);
        assert_eq!(cg.game.action_name(1, 1), "(pro1,pro3)");
        assert_eq!(cg.game.transitions(0).len(), 8);
        assert!(crate::game::validate(&cg.game).is_empty());
        let lifted = cg.lift_joint(&[2, 3], 3);
        assert_eq!(lifted, vec![2, 2, 1]);
        assert_eq!(cg.project_joint(&lifted), Some(vec![2, 3]));
    }

    #[test]
    fn rewards_follow_the_projection() {
        let g = fixtures::intersection(-1000.0);
        let cg = build_coalition_game(&g, &CoalitionPartition::new(vec![vec![0, 1, 2]]).unwrap()).unwrap();
        let r = &cg.game.rewards()[0];
        let total: f64 = r.action_rewards[0].iter().sum();
        let orig: f64 = g.rewards()[0].action_rewards[0].iter().sum();
        assert_eq!(total, orig);
    }
}
