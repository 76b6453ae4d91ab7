//! JSON files for synthesized strategies.
//!
//! Probabilities are written with 17 significant digits, which reads back
//! to the identical `f64`; export, import and export again gives the same
//! bytes. Actions are named as in the coalition game, so a coalition of
//! several players uses tuple names such as `(pro1,pro3)`.

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use csgcheck_core::strategy::{Decision, MemoryKind, SynthesizedStrategy};
use csgcheck_core::game::{IDLE, IDLE_NAME};
use csgcheck_core::Csg;

use crate::FileError;

/// A probability that serializes with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prob(pub f64);

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom("probabilities must be finite"));
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Prob)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    /// `profile` when every decision is a product of per-coalition
    /// distributions, `joint` when decisions are joint distributions.
    pub kind: String,
    /// Player names of each coalition.
    pub coalitions: Vec<Vec<String>>,
    /// `none`, `steps` or `flags`.
    pub memory_kind: String,
    /// Starting step count for `steps` memory.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub horizon: usize,
    /// For `flags` memory, the target states whose visit sets each bit.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flag_targets: Vec<Vec<usize>>,
    pub entries: Vec<Entry>,
}

fn is_zero(x: &usize) -> bool {
    *x == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub state: usize,
    pub memory: usize,
    /// One distribution per coalition over its available actions in the
    /// state, in action order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<Prob>>>,
    /// Joint actions with positive probability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<Vec<JointEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointEntry {
    pub actions: Vec<String>,
    pub prob: Prob,
}

fn memory_name(kind: MemoryKind) -> &'static str {
    match kind {
        MemoryKind::None => "none",
        MemoryKind::Steps => "steps",
        MemoryKind::Flags => "flags",
    }
}

impl StrategyFile {
    /// `game` is the original game the strategy was synthesized for.
    pub fn from_strategy(game: &Csg, strategy: &SynthesizedStrategy) -> Result<Self, FileError> {
        let cg = strategy.coalition_game(game)?;
        let g = &cg.game;
        let joint_kind = strategy.entries.values().any(Decision::is_joint);
        let entries = strategy
            .entries
            .iter()
            .map(|(&(state, memory), d)| match d {
                Decision::Profile(rows) => Entry {
                    state,
                    memory,
                    rows: Some(rows.iter().map(|r| r.iter().map(|&p| Prob(p)).collect()).collect()),
                    joint: None,
                },
                Decision::Joint(p) => Entry {
                    state,
                    memory,
                    rows: None,
                    joint: Some(
                        g.transitions(state)
                            .iter()
                            .zip(p)
                            .filter(|(_, &q)| q > 0.0)
                            .map(|(t, &q)| JointEntry {
                                actions: t.joint.iter().enumerate().map(|(c, &a)| g.action_name(c, a).to_string()).collect(),
                                prob: Prob(q),
                            })
                            .collect(),
                    ),
                },
            })
            .collect();
        Ok(StrategyFile {
            kind: if joint_kind { "joint" } else { "profile" }.to_string(),
            coalitions: strategy
                .coalitions
                .iter()
                .map(|c| c.iter().map(|&p| game.player_names()[p].clone()).collect())
                .collect(),
            memory_kind: memory_name(strategy.memory_kind).to_string(),
            horizon: strategy.horizon,
            flag_targets: strategy
                .flag_targets
                .iter()
                .map(|t| t.iter().enumerate().filter(|(_, &b)| b).map(|(s, _)| s).collect())
                .collect(),
            entries,
        })
    }

    /// Rebuilds the strategy against `game`, failing when names, shapes or
    /// distributions do not fit it.
    pub fn to_strategy(&self, game: &Csg) -> Result<SynthesizedStrategy, FileError> {
        let memory_kind = match self.memory_kind.as_str() {
            "none" => MemoryKind::None,
            "steps" => MemoryKind::Steps,
            "flags" => MemoryKind::Flags,
            other => return Err(FileError::schema(format!("unknown memory kind {other:?}"))),
        };
        if self.kind != "profile" && self.kind != "joint" {
            return Err(FileError::schema(format!("unknown strategy kind {:?}", self.kind)));
        }
        let coalitions = self
            .coalitions
            .iter()
            .map(|c| {
                c.iter()
                    .map(|name| game.player_index(name).ok_or_else(|| FileError::schema(format!("the model has no player {name}"))))
                    .collect::<Result<Vec<usize>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut strategy = SynthesizedStrategy::new(coalitions, memory_kind);
        strategy.horizon = self.horizon;
        let n = game.num_states();
        for t in &self.flag_targets {
            let mut set = vec![false; n];
            for &s in t {
                *set.get_mut(s).ok_or_else(|| FileError::schema(format!("flag target state {s} does not exist")))? = true;
            }
            strategy.flag_targets.push(set);
        }
        let cg = strategy.coalition_game(game)?;
        let g = &cg.game;
        for e in &self.entries {
            if e.state >= n {
                return Err(FileError::schema(format!("entry for unknown state {}", e.state)));
            }
            let decision = match (&e.rows, &e.joint) {
                (Some(rows), None) => Decision::Profile(rows.iter().map(|r| r.iter().map(|p| p.0).collect()).collect()),
                (None, Some(joint)) => {
                    let mut probs = vec![0.0; g.transitions(e.state).len()];
                    for j in joint {
                        if j.actions.len() != g.num_players() {
                            return Err(FileError::schema(format!("joint action {:?} in state {} has the wrong length", j.actions, e.state)));
                        }
                        let ids = j
                            .actions
                            .iter()
                            .enumerate()
                            .map(|(c, a)| if a == IDLE_NAME { Some(IDLE) } else { g.action_index(c, a) }.ok_or_else(|| FileError::schema(format!("coalition {} has no action {a}", c + 1))))
                            .collect::<Result<Vec<usize>, _>>()?;
                        let t = g
                            .transition_index(e.state, &ids)
                            .ok_or_else(|| FileError::schema(format!("joint action {:?} is not available in state {}", j.actions, e.state)))?;
                        probs[t] += j.prob.0;
                    }
                    Decision::Joint(probs)
                }
                _ => return Err(FileError::schema(format!("entry for state {} needs exactly one of rows and joint", e.state))),
            };
            if strategy.entries.insert((e.state, e.memory), decision).is_some() {
                return Err(FileError::schema(format!("duplicate entry for state {} memory {}", e.state, e.memory)));
            }
        }
        strategy.validate(game)?;
        Ok(strategy)
    }
}

pub fn export_strategy(game: &Csg, strategy: &SynthesizedStrategy) -> Result<String, FileError> {
    let mut s = serde_json::to_string_pretty(&StrategyFile::from_strategy(game, strategy)?)?;
    s.push('\n');
    Ok(s)
}

pub fn import_strategy(text: &str, game: &Csg) -> Result<SynthesizedStrategy, FileError> {
    let file: StrategyFile = serde_json::from_str(text)?;
    file.to_strategy(game)
}
