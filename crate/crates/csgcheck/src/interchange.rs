//! JSON interchange format for explicit games.
//!
//! Joint actions are written as lists of action names, one per player,
//! with `_` for an idle player. Numbers use the shortest decimal that
//! reads back to the same `f64`, so exporting an imported file reproduces
//! it exactly.

use serde::{Deserialize, Serialize};

use csgcheck_core::expr::Value;
use csgcheck_core::game::{Symbols, IDLE_NAME};
use csgcheck_core::{Csg, CsgBuilder};

use crate::FileError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub players: Vec<PlayerEntry>,
    pub states: Vec<StateEntry>,
    pub initial: usize,
    /// Every label name in order, including labels that hold nowhere.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    /// State variables, when the game was built from a model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<ConstantEntry>,
    pub transitions: Vec<TransitionEntry>,
    pub rewards: Vec<RewardEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerEntry {
    pub name: String,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuation: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantEntry {
    pub name: String,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub state: usize,
    pub joint_action: Vec<String>,
    pub successors: Vec<Successor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Successor {
    pub state: usize,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardEntry {
    pub name: String,
    pub state_rewards: Vec<f64>,
    pub action_rewards: Vec<ActionReward>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionReward {
    pub state: usize,
    pub joint_action: Vec<String>,
    pub value: f64,
}

fn joint_names(game: &Csg, joint: &[usize]) -> Vec<String> {
    joint.iter().enumerate().map(|(p, &a)| game.action_name(p, a).to_string()).collect()
}

fn value_to_json(v: Value) -> serde_json::Value {
    match v {
        Value::Int(i) => i.into(),
        Value::Real(r) => r.into(),
        Value::Bool(b) => b.into(),
    }
}

fn value_from_json(name: &str, v: &serde_json::Value) -> Result<Value, FileError> {
    match v {
        serde_json::Value::Bool(b) => Ok(Value::Bool(*b)),
        serde_json::Value::Number(n) if n.is_i64() => Ok(Value::Int(n.as_i64().unwrap_or_default())),
        serde_json::Value::Number(n) => n.as_f64().map(Value::Real).ok_or_else(|| FileError::schema(format!("constant {name}: bad number"))),
        _ => Err(FileError::schema(format!("constant {name} must be a number or boolean"))),
    }
}

impl GameFile {
    pub fn from_game(game: &Csg) -> Self {
        let n = game.num_states();
        let symbols = game.symbols();
        let players = (0..game.num_players())
            .map(|p| PlayerEntry { name: game.player_names()[p].clone(), actions: game.action_names(p)[1..].to_vec() })
            .collect();
        let states = (0..n)
            .map(|s| StateEntry {
                id: s,
                name: game.state_name(s).map(str::to_string),
                labels: game.labels_of(s).into_iter().map(str::to_string).collect(),
                valuation: symbols.map(|sym| sym.valuations[s].clone()),
            })
            .collect();
        let mut transitions = Vec::with_capacity(game.num_transitions());
        for s in 0..n {
            for t in game.transitions(s) {
                transitions.push(TransitionEntry {
                    state: s,
                    joint_action: joint_names(game, &t.joint),
                    successors: t.successors.iter().map(|&(state, prob)| Successor { state, prob }).collect(),
                });
            }
        }
        let rewards = game
            .rewards()
            .iter()
            .map(|r| RewardEntry {
                name: r.name.clone(),
                state_rewards: r.state_rewards.clone(),
                action_rewards: (0..n)
                    .flat_map(|s| {
                        game.transitions(s).iter().enumerate().filter_map(move |(i, t)| {
                            let value = r.action_rewards[s][i];
                            (value != 0.0).then(|| ActionReward { state: s, joint_action: joint_names(game, &t.joint), value })
                        })
                    })
                    .collect(),
            })
            .collect();
        GameFile {
            players,
            states,
            initial: game.initial(),
            labels: game.label_names().to_vec(),
            variables: symbols.map(|s| s.variables.clone()),
            constants: symbols
                .map(|s| s.constants.iter().map(|(name, v)| ConstantEntry { name: name.clone(), value: value_to_json(*v) }).collect())
                .unwrap_or_default(),
            transitions,
            rewards,
        }
    }

    pub fn to_game(&self) -> Result<Csg, FileError> {
        let n = self.states.len();
        let mut b = CsgBuilder::new();
        for p in &self.players {
            b.add_player(&p.name, &p.actions);
        }
        b.add_states(n);
        b.initial(self.initial);
        for (i, st) in self.states.iter().enumerate() {
            if st.id != i {
                return Err(FileError::schema(format!("state {} listed at position {}", st.id, i)));
            }
        }
        let named = self.states.iter().filter(|s| s.name.is_some()).count();
        if named == n && n > 0 {
            b.state_names(self.states.iter().map(|s| s.name.clone().unwrap_or_default()).collect());
        } else if named > 0 {
            return Err(FileError::schema("either every state has a name or none has".into()));
        }
        let joint = |names: &[String]| -> Result<Vec<usize>, FileError> {
            if names.len() != self.players.len() {
                return Err(FileError::schema(format!("joint action {:?} has the wrong length", names)));
            }
            names
                .iter()
                .zip(&self.players)
                .map(|(a, p)| {
                    if a == IDLE_NAME {
                        return Ok(0);
                    }
                    p.actions
                        .iter()
                        .position(|x| x == a)
                        .map(|i| i + 1)
                        .ok_or_else(|| FileError::schema(format!("player {} has no action {}", p.name, a)))
                })
                .collect()
        };
        for t in &self.transitions {
            if t.state >= n || t.successors.iter().any(|x| x.state >= n) {
                return Err(FileError::schema(format!("transition from state {} refers to an unknown state", t.state)));
            }
            b.transition(t.state, joint(&t.joint_action)?, t.successors.iter().map(|x| (x.state, x.prob)).collect());
        }
        let mut label_names = self.labels.clone();
        for st in &self.states {
            for l in &st.labels {
                if !label_names.contains(l) {
                    label_names.push(l.clone());
                }
            }
        }
        for l in &label_names {
            let states: Vec<usize> = self.states.iter().filter(|s| s.labels.contains(l)).map(|s| s.id).collect();
            b.label(l, &states);
        }
        for r in &self.rewards {
            if r.state_rewards.len() != n {
                return Err(FileError::schema(format!("reward {} lists {} state rewards for {} states", r.name, r.state_rewards.len(), n)));
            }
            let id = b.reward_structure(&r.name);
            for (s, &v) in r.state_rewards.iter().enumerate() {
                b.state_reward(id, s, v);
            }
            for a in &r.action_rewards {
                if a.state >= n {
                    return Err(FileError::schema(format!("reward {} refers to unknown state {}", r.name, a.state)));
                }
                b.action_reward(id, a.state, joint(&a.joint_action)?, a.value);
            }
        }
        if let Some(variables) = &self.variables {
            let valuations = self
                .states
                .iter()
                .map(|s| match &s.valuation {
                    Some(v) if v.len() == variables.len() => Ok(v.clone()),
                    _ => Err(FileError::schema(format!("state {} lacks a valuation of every variable", s.id))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let constants = self.constants.iter().map(|c| Ok((c.name.clone(), value_from_json(&c.name, &c.value)?))).collect::<Result<Vec<_>, FileError>>()?;
            b.symbols(Symbols { variables: variables.clone(), valuations, constants });
        }
        Ok(b.build()?)
    }
}

pub fn export_game(game: &Csg) -> String {
    let mut s = serde_json::to_string_pretty(&GameFile::from_game(game)).expect("game files always serialize");
    s.push('\n');
    s
}

pub fn import_game(text: &str) -> Result<Csg, FileError> {
    let file: GameFile = serde_json::from_str(text)?;
    file.to_game()
}
