//! Explicit concurrent stochastic games.
//!
//! States, players and actions are dense integer ids. Every player owns the
//! idle action [`IDLE`] (id 0), which it plays in states where none of its
//! own actions is available.

mod coalition;
mod local;
mod nfg;
mod table;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::expr::Value;
use crate::num::MODEL_TOLERANCE;

pub use coalition::{build_coalition_game, CoalitionGame, CoalitionPartition};
pub use local::{local_nfg, local_nfg_with};
pub use nfg::{JointDistribution, MixedStrategy, NormalFormGame, StrategyProfile, Support};
pub use table::{parse_nfg_table, write_nfg_table};

/// Action id of the idle action `⊥`, shared by all players.
pub const IDLE: usize = 0;

/// Display name of the idle action.
pub const IDLE_NAME: &str = "_";

/// One joint action and its successor distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub joint: Vec<usize>,
    pub successors: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
struct StateData {
    available: Vec<Vec<usize>>,
    transitions: Vec<Transition>,
    // Present when the transitions cover the full product of `available`
    // in mixed-radix order, which makes joint lookups direct.
    strides: Option<Vec<usize>>,
}

/// State and action rewards of one named reward structure.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardStructure {
    pub name: String,
    pub state_rewards: Vec<f64>,
    /// Indexed by state, then by transition index within the state.
    pub action_rewards: Vec<Vec<f64>>,
}

impl RewardStructure {
    pub fn state_reward(&self, state: usize) -> f64 {
        self.state_rewards[state]
    }

    pub fn action_reward(&self, state: usize, transition: usize) -> f64 {
        self.action_rewards[state][transition]
    }

    pub fn has_action_rewards(&self) -> bool {
        self.action_rewards.iter().flatten().any(|&r| r != 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.state_rewards.iter().chain(self.action_rewards.iter().flatten()).all(|&r| r >= 0.0)
    }
}

/// Variable valuations of a game produced from a model, kept so that
/// properties can refer to variables and constants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Symbols {
    pub variables: Vec<String>,
    /// One valuation per state, in `variables` order.
    pub valuations: Vec<Vec<i64>>,
    pub constants: Vec<(String, Value)>,
}

/// A finite concurrent stochastic game.
#[derive(Debug, Clone, PartialEq)]
pub struct Csg {
    player_names: Vec<String>,
    action_names: Vec<Vec<String>>,
    initial: usize,
    states: Vec<StateData>,
    state_names: Option<Vec<String>>,
    label_names: Vec<String>,
    labels: Vec<Vec<bool>>,
    rewards: Vec<RewardStructure>,
    symbols: Option<Symbols>,
}

impl Csg {
    pub fn num_players(&self) -> usize {
        self.player_names.len()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn player_names(&self) -> &[String] {
        &self.player_names
    }

    pub fn player_index(&self, name: &str) -> Option<usize> {
        self.player_names.iter().position(|n| n == name)
    }

    /// Action names of a player, including the idle action at index 0.
    pub fn action_names(&self, player: usize) -> &[String] {
        &self.action_names[player]
    }

    pub fn action_name(&self, player: usize, action: usize) -> &str {
        &self.action_names[player][action]
    }

    pub fn action_index(&self, player: usize, name: &str) -> Option<usize> {
        self.action_names[player].iter().skip(1).position(|n| n == name).map(|i| i + 1)
    }

    pub fn state_name(&self, state: usize) -> Option<&str> {
        self.state_names.as_ref().map(|n| n[state].as_str())
    }

    pub fn state_names(&self) -> Option<&[String]> {
        self.state_names.as_deref()
    }

    /// Actions available to `player` in `state`; `[IDLE]` when it has none.
    pub fn available(&self, state: usize, player: usize) -> &[usize] {
        &self.states[state].available[player]
    }

    pub fn transitions(&self, state: usize) -> &[Transition] {
        &self.states[state].transitions
    }

    pub fn num_transitions(&self) -> usize {
        self.states.iter().map(|s| s.transitions.len()).sum()
    }

    /// Index of the transition for `joint` in `state`.
    pub fn transition_index(&self, state: usize, joint: &[usize]) -> Option<usize> {
        let data = &self.states[state];
        if let Some(strides) = &data.strides {
            let mut index = 0;
            for ((avail, &a), s) in data.available.iter().zip(joint).zip(strides) {
                let pos = avail.binary_search(&a).ok()?;
                index += pos * s;
            }
            return Some(index);
        }
        data.transitions.binary_search_by(|t| t.joint.as_slice().cmp(joint)).ok()
    }

    /// Whether every state defines a transition for each joint action in
    /// the product of its available sets, in mixed-radix order.
    pub fn is_complete(&self) -> bool {
        self.states.iter().all(|s| s.strides.is_some())
    }

    /// Δ(s): the non-idle actions of all players available in `state`.
    pub fn action_assignment(&self, state: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (p, avail) in self.states[state].available.iter().enumerate() {
            out.extend(avail.iter().filter(|&&a| a != IDLE).map(|&a| (p, a)));
        }
        out
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.label_names.iter().position(|n| n == name)
    }

    pub fn label_states(&self, label: usize) -> &[bool] {
        &self.labels[label]
    }

    pub fn has_label(&self, state: usize, label: usize) -> bool {
        self.labels[label][state]
    }

    pub fn labels_of(&self, state: usize) -> Vec<&str> {
        self.label_names
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| l[state])
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn rewards(&self) -> &[RewardStructure] {
        &self.rewards
    }

    pub fn reward_index(&self, name: &str) -> Option<usize> {
        self.rewards.iter().position(|r| r.name == name)
    }

    pub fn symbols(&self) -> Option<&Symbols> {
        self.symbols.as_ref()
    }

    /// Successor states of `state` under any joint action.
    pub fn successors(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.states[state].transitions.iter().flat_map(|t| t.successors.iter().map(|&(s, _)| s))
    }

    /// States reachable from the initial state, in breadth-first order.
    pub fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_states()];
        let mut order = vec![self.initial];
        seen[self.initial] = true;
        let mut head = 0;
        while head < order.len() {
            let s = order[head];
            head += 1;
            for t in self.successors(s).collect::<BTreeSet<_>>() {
                if !seen[t] {
                    seen[t] = true;
                    order.push(t);
                }
            }
        }
        order
    }

    /// A copy of the game that starts from a different state.
    pub fn with_initial(&self, initial: usize) -> Result<Csg> {
        if initial >= self.num_states() {
            bail!(Input, "unknown state {}", initial);
        }
        let mut g = self.clone();
        g.initial = initial;
        Ok(g)
    }
}

/// Δ(s) ∩ A_player, or `{⊥}` when that set is empty.
pub fn available_actions(game: &Csg, state: usize, player: usize) -> Result<&[usize]> {
    if state >= game.num_states() {
        bail!(Input, "unknown state {}", state);
    }
    if player >= game.num_players() {
        bail!(Input, "unknown player {}", player);
    }
    Ok(game.available(state, player))
}

/// Incremental construction of a [`Csg`].
#[derive(Debug, Clone, Default)]
pub struct CsgBuilder {
    player_names: Vec<String>,
    action_names: Vec<Vec<String>>,
    num_states: usize,
    state_names: Option<Vec<String>>,
    initial: usize,
    transitions: Vec<Vec<Transition>>,
    label_names: Vec<String>,
    labels: Vec<Vec<bool>>,
    rewards: Vec<(String, Vec<f64>, Vec<(usize, Vec<usize>, f64)>)>,
    symbols: Option<Symbols>,
}

impl CsgBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a player with its (non-idle) actions and returns its id.
    pub fn add_player<S: ToString>(&mut self, name: &str, actions: &[S]) -> usize {
        self.player_names.push(name.to_string());
        let mut names = vec![IDLE_NAME.to_string()];
        names.extend(actions.iter().map(|a| a.to_string()));
        self.action_names.push(names);
        self.player_names.len() - 1
    }

    /// Adds `n` anonymous states and returns the id of the first.
    pub fn add_states(&mut self, n: usize) -> usize {
        let first = self.num_states;
        self.num_states += n;
        self.transitions.resize(self.num_states, Vec::new());
        for l in &mut self.labels {
            l.resize(self.num_states, false);
        }
        first
    }

    pub fn state_names(&mut self, names: Vec<String>) -> &mut Self {
        self.state_names = Some(names);
        self
    }

    pub fn initial(&mut self, state: usize) -> &mut Self {
        self.initial = state;
        self
    }

    /// Adds a transition; `joint` holds one action id per player, with
    /// [`IDLE`] for players that are idle.
    pub fn transition(&mut self, state: usize, joint: Vec<usize>, successors: Vec<(usize, f64)>) -> &mut Self {
        if state >= self.transitions.len() {
            self.transitions.resize(state + 1, Vec::new());
        }
        self.transitions[state].push(Transition { joint, successors });
        self
    }

    pub fn label(&mut self, name: &str, states: &[usize]) -> &mut Self {
        let idx = match self.label_names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.label_names.push(name.to_string());
                self.labels.push(vec![false; self.num_states]);
                self.labels.len() - 1
            }
        };
        for &s in states {
            if s < self.labels[idx].len() {
                self.labels[idx][s] = true;
            }
        }
        self
    }

    /// Declares a reward structure and returns its index.
    pub fn reward_structure(&mut self, name: &str) -> usize {
        self.rewards.push((name.to_string(), vec![0.0; self.num_states], Vec::new()));
        self.rewards.len() - 1
    }

    pub fn state_reward(&mut self, reward: usize, state: usize, value: f64) -> &mut Self {
        let r = &mut self.rewards[reward].1;
        if state >= r.len() {
            r.resize(state + 1, 0.0);
        }
        r[state] = value;
        self
    }

    pub fn action_reward(&mut self, reward: usize, state: usize, joint: Vec<usize>, value: f64) -> &mut Self {
        self.rewards[reward].2.push((state, joint, value));
        self
    }

    pub fn symbols(&mut self, symbols: Symbols) -> &mut Self {
        self.symbols = Some(symbols);
        self
    }

    /// Assembles the game. Structural problems (unknown ids, rewards on
    /// undefined transitions, non-finite numbers) are errors; semantic
    /// invariants are reported separately by [`validate`].
    pub fn build(&self) -> Result<Csg> {
        let n = self.player_names.len();
        if n == 0 {
            bail!(Input, "a game needs at least one player");
        }
        if self.num_states == 0 {
            bail!(Input, "a game needs at least one state");
        }
        if self.initial >= self.num_states {
            bail!(Input, "initial state {} does not exist", self.initial);
        }
        let mut states = Vec::with_capacity(self.num_states);
        for (s, list) in self.transitions.iter().enumerate() {
            if s >= self.num_states {
                bail!(Input, "transition from unknown state {}", s);
            }
            let mut list = list.clone();
            for t in &list {
                if t.joint.len() != n {
                    bail!(Input, "state {}: joint action has {} components for {} players", s, t.joint.len(), n);
                }
                for (p, &a) in t.joint.iter().enumerate() {
                    if a >= self.action_names[p].len() {
                        bail!(Input, "state {}: unknown action id {} for player {}", s, a, self.player_names[p]);
                    }
                }
                for &(succ, prob) in &t.successors {
                    if succ >= self.num_states {
                        bail!(Input, "state {}: successor {} does not exist", s, succ);
                    }
                    if !prob.is_finite() {
                        bail!(Input, "state {}: non-finite probability", s);
                    }
                }
            }
            list.sort_by(|a, b| a.joint.cmp(&b.joint));
            if let Some(w) = list.windows(2).find(|w| w[0].joint == w[1].joint) {
                bail!(Input, "state {}: duplicate joint action {:?}", s, w[0].joint);
            }
            let mut available = vec![BTreeSet::new(); n];
            for t in &list {
                for (p, &a) in t.joint.iter().enumerate() {
                    available[p].insert(a);
                }
            }
            let available: Vec<Vec<usize>> = available
                .into_iter()
                .map(|set| if set.is_empty() { vec![IDLE] } else { set.into_iter().collect() })
                .collect();
            let strides = product_strides(&available, &list);
            states.push(StateData { available, transitions: list, strides });
        }
        let mut rewards = Vec::with_capacity(self.rewards.len());
        for (name, state_rewards, action_items) in &self.rewards {
            let mut state_rewards = state_rewards.clone();
            state_rewards.resize(self.num_states, 0.0);
            if state_rewards.iter().any(|r| !r.is_finite()) {
                bail!(Input, "reward structure \"{}\" has a non-finite state reward", name);
            }
            let mut action_rewards: Vec<Vec<f64>> = states.iter().map(|s| vec![0.0; s.transitions.len()]).collect();
            for (state, joint, value) in action_items {
                if *state >= self.num_states || !value.is_finite() {
                    bail!(Input, "reward structure \"{}\": invalid action reward in state {}", name, state);
                }
                let idx = states[*state]
                    .transitions
                    .binary_search_by(|t| t.joint.as_slice().cmp(joint))
                    .map_err(|_| {
                        crate::error::Error::Input(format!(
                            "reward structure \"{}\": action reward on undefined transition {:?} in state {}",
                            name, joint, state
                        ))
                    })?;
                action_rewards[*state][idx] = *value;
            }
            rewards.push(RewardStructure { name: name.clone(), state_rewards, action_rewards });
        }
        if let Some(names) = &self.state_names {
            if names.len() != self.num_states {
                bail!(Input, "{} state names for {} states", names.len(), self.num_states);
            }
        }
        if let Some(sym) = &self.symbols {
            if sym.valuations.len() != self.num_states {
                bail!(Input, "{} valuations for {} states", sym.valuations.len(), self.num_states);
            }
        }
        let mut labels = self.labels.clone();
        for l in &mut labels {
            l.resize(self.num_states, false);
        }
        Ok(Csg {
            player_names: self.player_names.clone(),
            action_names: self.action_names.clone(),
            initial: self.initial,
            states,
            state_names: self.state_names.clone(),
            label_names: self.label_names.clone(),
            labels,
            rewards,
            symbols: self.symbols.clone(),
        })
    }
}

fn product_strides(available: &[Vec<usize>], sorted: &[Transition]) -> Option<Vec<usize>> {
    let total: usize = available.iter().map(Vec::len).product();
    if total != sorted.len() {
        return None;
    }
    let n = available.len();
    let mut strides = vec![1; n];
    for p in (0..n.saturating_sub(1)).rev() {
        strides[p] = strides[p + 1] * available[p + 1].len();
    }
    // Sorted lexicographic order over a full product of sorted sets is the
    // mixed-radix order, so checking membership is enough.
    for (index, t) in sorted.iter().enumerate() {
        let mut rest = index;
        for p in 0..n {
            let pos = rest / strides[p];
            rest %= strides[p];
            if available[p][pos] != t.joint[p] {
                return None;
            }
        }
    }
    Some(strides)
}

/// One broken invariant found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub state: usize,
    pub joint: Option<Vec<usize>>,
    pub rule: ViolationRule,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationRule {
    DistributionSum,
    NegativeProbability,
    EmptyDistribution,
    MissingJointAction,
    IdleMisuse,
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "state {}", self.state)?;
        if let Some(j) = &self.joint {
            write!(f, ", joint action {:?}", j)?;
        }
        let rule = match self.rule {
            ViolationRule::DistributionSum => "distribution sum",
            ViolationRule::NegativeProbability => "negative probability",
            ViolationRule::EmptyDistribution => "empty distribution",
            ViolationRule::MissingJointAction => "missing joint action",
            ViolationRule::IdleMisuse => "idle action misuse",
        };
        write!(f, ": {}: {}", rule, self.detail)
    }
}

/// Checks the semantic invariants of a game and lists every violation.
pub fn validate(game: &Csg) -> Vec<Violation> {
    let mut out = Vec::new();
    for (s, data) in game.states.iter().enumerate() {
        for (p, avail) in data.available.iter().enumerate() {
            if avail.len() > 1 && avail.contains(&IDLE) {
                out.push(Violation {
                    state: s,
                    joint: None,
                    rule: ViolationRule::IdleMisuse,
                    detail: format!("player {} mixes idle with real actions", game.player_names[p]),
                });
            }
        }
        if data.transitions.is_empty() {
            out.push(Violation {
                state: s,
                joint: None,
                rule: ViolationRule::MissingJointAction,
                detail: "no transitions".into(),
            });
        } else if data.strides.is_none() {
            let total: usize = data.available.iter().map(Vec::len).product();
            out.push(Violation {
                state: s,
                joint: None,
                rule: ViolationRule::MissingJointAction,
                detail: format!("{} of {} joint actions defined", data.transitions.len(), total),
            });
        }
        for t in &data.transitions {
            if t.successors.is_empty() {
                out.push(Violation {
                    state: s,
                    joint: Some(t.joint.clone()),
                    rule: ViolationRule::EmptyDistribution,
                    detail: "no successors".into(),
                });
                continue;
            }
            if let Some(&(succ, p)) = t.successors.iter().find(|(_, p)| *p < 0.0) {
                out.push(Violation {
                    state: s,
                    joint: Some(t.joint.clone()),
                    rule: ViolationRule::NegativeProbability,
                    detail: format!("probability {} to state {}", p, succ),
                });
            }
            let sum: f64 = t.successors.iter().map(|(_, p)| p).sum();
            if (sum - 1.0).abs() > MODEL_TOLERANCE {
                out.push(Violation {
                    state: s,
                    joint: Some(t.joint.clone()),
                    rule: ViolationRule::DistributionSum,
                    detail: format!("probabilities sum to {}", sum),
                });
            }
        }
    }
    out
}

/// Fails with an input error listing the violations, if any.
pub fn ensure_valid(game: &Csg) -> Result<()> {
    let v = validate(game);
    if v.is_empty() {
        return Ok(());
    }
    let mut msg = String::new();
    for (i, violation) in v.iter().take(5).enumerate() {
        if i > 0 {
            msg.push_str("; ");
        }
        msg.push_str(&format!("{}", violation));
    }
    if v.len() > 5 {
        msg.push_str(&format!("; and {} more", v.len() - 5));
    }
    bail!(Input, "invalid game: {}", msg);
}

/// Small hand-built games: a one-state loop, matching pennies as a
/// one-round game, and the three-car intersection game.
pub mod fixtures {
    use super::*;
    use alloc::string::ToString;

    /// Utility rows of the intersection game in joint order (pro before
    /// yld, car 3 varying fastest). `u2ppp` is car 2's utility when all
    /// three proceed.
    pub fn intersection_table(u2ppp: f64) -> [[f64; 3]; 8] {
        [
            [-1000.0, u2ppp, -100.0],
            [-1000.0, -100.0, -5.0],
            [5.0, -5.0, 5.0],
            [5.0, -5.0, -5.0],
            [-5.0, -1000.0, -100.0],
            [-5.0, 5.0, -5.0],
            [-5.0, -5.0, 5.0],
            [-10.0, -10.0, -10.0],
        ]
    }

    /// The intersection game as a normal form game.
    pub fn intersection_nfg(u2ppp: f64) -> NormalFormGame {
        let names = (1..=3).map(|i| vec![format!("pro{}", i), format!("yld{}", i)]).collect();
        let table: Vec<f64> = intersection_table(u2ppp).iter().flatten().copied().collect();
        NormalFormGame::from_table(names, table).expect("the intersection table is complete")
    }

    /// Matching pennies with utilities +1 for the winner and -1 for the loser.
    pub fn pennies_nfg() -> NormalFormGame {
        let names = vec![vec!["h".to_string(), "t".to_string()], vec!["h".to_string(), "t".to_string()]];
        NormalFormGame::from_table(names, vec![1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0]).expect("the pennies table is complete")
    }

    /// One player, one action, one state looping to itself.
    pub fn trivial() -> Csg {
        let mut b = CsgBuilder::new();
        b.add_player("p", &["a"]);
        b.add_states(1);
        b.transition(0, vec![1], vec![(0, 1.0)]);
        b.build().unwrap()
    }

    /// Matching pennies: a decision state and the two outcome states.
    pub fn pennies() -> Csg {
        let mut b = CsgBuilder::new();
        b.add_player("p1", &["heads1", "tails1"]);
        b.add_player("p2", &["heads2", "tails2"]);
        b.add_states(3);
        for a in 1..=2 {
            for c in 1..=2 {
                let succ = if a == c { 1 } else { 2 };
                b.transition(0, vec![a, c], vec![(succ, 1.0)]);
            }
        }
        b.transition(1, vec![IDLE, IDLE], vec![(1, 1.0)]);
        b.transition(2, vec![IDLE, IDLE], vec![(2, 1.0)]);
        b.label("win1", &[1]).label("win2", &[2]);
        b.build().unwrap()
    }

    /// The intersection game lifted to a two-state game: one decision step
    /// whose action rewards are the car utilities.
    pub fn intersection(u2ppp: f64) -> Csg {
        let table = intersection_table(u2ppp);
        let mut b = CsgBuilder::new();
        b.add_player("c1", &["pro1", "yld1"]);
        b.add_player("c2", &["pro2", "yld2"]);
        b.add_player("c3", &["pro3", "yld3"]);
        b.add_states(2);
        let rs: Vec<usize> = (1..=3).map(|i| b.reward_structure(&format!("u{}", i))).collect();
        for (idx, u) in table.iter().enumerate() {
            let joint = vec![idx / 4 + 1, (idx / 2) % 2 + 1, idx % 2 + 1];
            b.transition(0, joint.clone(), vec![(1, 1.0)]);
            for (i, &r) in rs.iter().enumerate() {
                b.action_reward(r, 0, joint.clone(), u[i]);
            }
        }
        b.transition(1, vec![IDLE; 3], vec![(1, 1.0)]);
        b.label("decided", &[1]);
        b.build().unwrap()
    }
}
