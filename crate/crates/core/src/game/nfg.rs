//! Normal form games and the strategy objects played on them.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::num::PROB_TOLERANCE;

/// An n-player one-shot game with a utility vector for every joint action.
///
/// Joint actions are enumerated in mixed radix with the last player varying
/// fastest; `utilities` holds `n` entries per joint action.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    action_names: Vec<Vec<String>>,
    utilities: Vec<f64>,
    strides: Vec<usize>,
}

impl NormalFormGame {
    /// Builds a game by evaluating `utility` on every joint action.
    pub fn from_fn<F>(action_names: Vec<Vec<String>>, mut utility: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Vec<f64>,
    {
        let strides = strides_for(&action_names)?;
        let n = action_names.len();
        let total = joint_count(&action_names);
        let mut utilities = Vec::with_capacity(total * n);
        let mut joint = vec![0; n];
        for index in 0..total {
            decode(index, &strides, &mut joint);
            let u = utility(&joint);
            if u.len() != n {
                bail!(Input, "utility vector has length {} for {} players", u.len(), n);
            }
            utilities.extend_from_slice(&u);
        }
        let game = NormalFormGame { action_names, utilities, strides };
        game.check_finite()?;
        Ok(game)
    }

    /// Builds a game from a flat utility table in joint-index order.
    pub fn from_table(action_names: Vec<Vec<String>>, utilities: Vec<f64>) -> Result<Self> {
        let strides = strides_for(&action_names)?;
        let expected = joint_count(&action_names) * action_names.len();
        if utilities.len() != expected {
            bail!(Input, "utility table has {} entries, expected {}", utilities.len(), expected);
        }
        let game = NormalFormGame { action_names, utilities, strides };
        game.check_finite()?;
        Ok(game)
    }

    /// Builds an anonymous game with actions named `a0, a1, ...` per player.
    pub fn from_sizes<F>(sizes: &[usize], utility: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Vec<f64>,
    {
        let names = sizes
            .iter()
            .enumerate()
            .map(|(p, &k)| (0..k).map(|a| alloc::format!("p{}a{}", p + 1, a)).collect())
            .collect();
        Self::from_fn(names, utility)
    }

    fn check_finite(&self) -> Result<()> {
        if self.utilities.iter().any(|u| !u.is_finite()) {
            bail!(Input, "normal form game utilities must be finite");
        }
        Ok(())
    }

    pub fn num_players(&self) -> usize {
        self.action_names.len()
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.action_names[player].len()
    }

    pub fn action_names(&self, player: usize) -> &[String] {
        &self.action_names[player]
    }

    pub fn all_action_names(&self) -> &[Vec<String>] {
        &self.action_names
    }

    pub fn num_joint(&self) -> usize {
        self.utilities.len() / self.num_players()
    }

    pub fn joint_index(&self, joint: &[usize]) -> usize {
        joint.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn joint(&self, index: usize) -> Vec<usize> {
        let mut joint = vec![0; self.num_players()];
        decode(index, &self.strides, &mut joint);
        joint
    }

    pub fn decode_into(&self, index: usize, joint: &mut [usize]) {
        decode(index, &self.strides, joint);
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Utility vector at the joint action with flat index `index`.
    pub fn utilities_at(&self, index: usize) -> &[f64] {
        let n = self.num_players();
        &self.utilities[index * n..(index + 1) * n]
    }

    pub fn utility(&self, joint: &[usize], player: usize) -> f64 {
        self.utilities_at(self.joint_index(joint))[player]
    }

    pub fn utility_table(&self) -> &[f64] {
        &self.utilities
    }

    /// Expected utilities of all players under independent mixing.
    pub fn expected_utilities(&self, profile: &StrategyProfile) -> Vec<f64> {
        let n = self.num_players();
        let mut out = vec![0.0; n];
        let mut joint = vec![0; n];
        for index in 0..self.num_joint() {
            self.decode_into(index, &mut joint);
            let p = profile.probability(&joint);
            if p == 0.0 {
                continue;
            }
            for (o, u) in out.iter_mut().zip(self.utilities_at(index)) {
                *o += p * u;
            }
        }
        out
    }

    /// Expected utilities under a joint (correlated) distribution.
    pub fn expected_utilities_joint(&self, joint: &JointDistribution) -> Vec<f64> {
        let n = self.num_players();
        let mut out = vec![0.0; n];
        for (index, &p) in joint.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (o, u) in out.iter_mut().zip(self.utilities_at(index)) {
                *o += p * u;
            }
        }
        out
    }

    /// Expected utility of `player` when it plays `action` against `others`
    /// (strategies of every other player, in player order).
    pub fn deviation_utility(&self, player: usize, action: usize, others: &[&MixedStrategy]) -> f64 {
        let n = self.num_players();
        let mut joint = vec![0; n];
        let mut total = 0.0;
        for index in 0..self.num_joint() {
            self.decode_into(index, &mut joint);
            if joint[player] != action {
                continue;
            }
            let mut p = 1.0;
            for (j, &a) in joint.iter().enumerate() {
                if j == player {
                    continue;
                }
                let k = if j < player { j } else { j - 1 };
                p *= others[k].prob(a);
                if p == 0.0 {
                    break;
                }
            }
            if p != 0.0 {
                total += p * self.utilities_at(index)[player];
            }
        }
        total
    }

    /// The game with every utility negated (social-cost dual).
    pub fn negated(&self) -> NormalFormGame {
        NormalFormGame {
            action_names: self.action_names.clone(),
            utilities: self.utilities.iter().map(|u| -u).collect(),
            strides: self.strides.clone(),
        }
    }

    /// Adds `shift` to every utility of `player`.
    pub fn shifted(&self, player: usize, shift: f64) -> NormalFormGame {
        let n = self.num_players();
        let mut utilities = self.utilities.clone();
        for chunk in utilities.chunks_mut(n) {
            chunk[player] += shift;
        }
        NormalFormGame { action_names: self.action_names.clone(), utilities, strides: self.strides.clone() }
    }

    pub fn min_utility(&self) -> f64 {
        self.utilities.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_utility(&self) -> f64 {
        self.utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute utility, at least 1. Used to scale tolerances.
    pub fn scale(&self) -> f64 {
        self.utilities.iter().fold(1.0, |m, u| f64::max(m, u.abs()))
    }
}

fn strides_for(action_names: &[Vec<String>]) -> Result<Vec<usize>> {
    if action_names.is_empty() {
        bail!(Input, "a normal form game needs at least one player");
    }
    if let Some(p) = action_names.iter().position(|a| a.is_empty()) {
        bail!(Input, "player {} has no actions", p + 1);
    }
    let mut strides = vec![1; action_names.len()];
    for p in (0..action_names.len().saturating_sub(1)).rev() {
        strides[p] = strides[p + 1] * action_names[p + 1].len();
    }
    Ok(strides)
}

fn joint_count(action_names: &[Vec<String>]) -> usize {
    action_names.iter().map(Vec::len).product()
}

fn decode(mut index: usize, strides: &[usize], joint: &mut [usize]) {
    for (slot, &s) in joint.iter_mut().zip(strides) {
        *slot = index / s;
        index %= s;
    }
}

/// A probability distribution over one player's actions.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_distribution(&probs)?;
        Ok(MixedStrategy { probs })
    }

    /// Builds a strategy without validation; callers guarantee the invariant.
    pub(crate) fn new_unchecked(probs: Vec<f64>) -> Self {
        MixedStrategy { probs }
    }

    pub fn pure(num_actions: usize, action: usize) -> Self {
        let mut probs = vec![0.0; num_actions];
        probs[action] = 1.0;
        MixedStrategy { probs }
    }

    pub fn uniform(num_actions: usize) -> Self {
        MixedStrategy { probs: vec![1.0 / num_actions as f64; num_actions] }
    }

    pub fn prob(&self, action: usize) -> f64 {
        self.probs[action]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        self.probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(a, _)| a).collect()
    }
}

/// One mixed strategy per player.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    strategies: Vec<MixedStrategy>,
}

impl StrategyProfile {
    pub fn new(strategies: Vec<MixedStrategy>) -> Self {
        StrategyProfile { strategies }
    }

    pub fn num_players(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategy(&self, player: usize) -> &MixedStrategy {
        &self.strategies[player]
    }

    pub fn strategies(&self) -> &[MixedStrategy] {
        &self.strategies
    }

    /// The strategies of every player except `player` (the `x_{-i}` tuple).
    pub fn others(&self, player: usize) -> Vec<&MixedStrategy> {
        self.strategies
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != player)
            .map(|(_, s)| s)
            .collect()
    }

    /// This profile with `player`'s strategy replaced (`x_{-i}[x']`).
    pub fn with_strategy(&self, player: usize, strategy: MixedStrategy) -> StrategyProfile {
        let mut strategies = self.strategies.clone();
        strategies[player] = strategy;
        StrategyProfile { strategies }
    }

    pub fn probability(&self, joint: &[usize]) -> f64 {
        joint.iter().zip(&self.strategies).map(|(&a, s)| s.prob(a)).product()
    }

    /// Whether each player's strategy has validated shape for `game`.
    pub fn matches(&self, game: &NormalFormGame) -> bool {
        self.strategies.len() == game.num_players()
            && self.strategies.iter().enumerate().all(|(p, s)| s.len() == game.num_actions(p))
    }

    /// Largest coordinate difference to another profile of the same shape.
    pub fn distance(&self, other: &StrategyProfile) -> f64 {
        self.strategies
            .iter()
            .zip(&other.strategies)
            .flat_map(|(a, b)| a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// A distribution over joint actions, indexed like the utilities of the
/// game it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    sizes: Vec<usize>,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(sizes: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let total: usize = sizes.iter().product();
        if total != probs.len() {
            bail!(Input, "joint distribution has {} entries, expected {}", probs.len(), total);
        }
        check_distribution(&probs)?;
        Ok(JointDistribution { sizes, probs })
    }

    pub(crate) fn new_unchecked(sizes: Vec<usize>, probs: Vec<f64>) -> Self {
        JointDistribution { sizes, probs }
    }

    /// The product distribution of a strategy profile.
    pub fn from_profile(game: &NormalFormGame, profile: &StrategyProfile) -> Self {
        let sizes: Vec<usize> = (0..game.num_players()).map(|p| game.num_actions(p)).collect();
        let mut joint = vec![0; sizes.len()];
        let probs = (0..game.num_joint())
            .map(|index| {
                game.decode_into(index, &mut joint);
                profile.probability(&joint)
            })
            .collect();
        JointDistribution { sizes, probs }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal distribution of one player's recommendation.
    pub fn marginal(&self, game: &NormalFormGame, player: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.sizes[player]];
        let mut joint = vec![0; self.sizes.len()];
        for (index, &p) in self.probs.iter().enumerate() {
            game.decode_into(index, &mut joint);
            out[joint[player]] += p;
        }
        out
    }
}

/// The actions each player uses with positive probability.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Support {
    pub sets: Vec<Vec<usize>>,
}

impl Support {
    pub fn size(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }
}

pub(crate) fn check_distribution(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        bail!(Input, "empty distribution");
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        bail!(Input, "invalid probability {}", p);
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        bail!(Input, "probabilities sum to {}", sum);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pennies() -> NormalFormGame {
        NormalFormGame::from_sizes(&[2, 2], |j| {
            let u = if j[0] == j[1] { 1.0 } else { -1.0 };
            vec![u, -u]
        })
        .unwrap()
    }

    #[test]
    fn joint_indexing_is_last_player_fastest() {
        let g = NormalFormGame::from_sizes(&[2, 3], |j| vec![j[0] as f64, j[1] as f64]).unwrap();
        assert_eq!(g.num_joint(), 6);
        assert_eq!(g.joint(4), vec![1, 1]);
        assert_eq!(g.joint_index(&[1, 2]), 5);
        assert_eq!(g.utilities_at(5), &[1.0, 2.0]);
    }

    #[test]
    fn expected_utilities_of_uniform_pennies_are_zero() {
        let g = pennies();
        let p = StrategyProfile::new(vec![MixedStrategy::uniform(2), MixedStrategy::uniform(2)]);
        assert_eq!(g.expected_utilities(&p), vec![0.0, 0.0]);
        let j = JointDistribution::from_profile(&g, &p);
        assert_eq!(g.expected_utilities_joint(&j), vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(MixedStrategy::new(vec![0.5, 0.4]).is_err());
        assert!(MixedStrategy::new(vec![1.5, -0.5]).is_err());
        assert!(MixedStrategy::new(vec![0.5, 0.5 + 1e-10]).is_ok());
        assert!(JointDistribution::new(vec![2, 2], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn others_and_replacement() {
        let p = StrategyProfile::new(vec![
            MixedStrategy::pure(2, 0),
            MixedStrategy::uniform(2),
            MixedStrategy::pure(2, 1),
        ]);
        let others = p.others(1);
        assert_eq!(others.len(), 2);
        assert_eq!(others[1].probs(), &[0.0, 1.0]);
        let q = p.with_strategy(1, MixedStrategy::pure(2, 1));
        assert_eq!(q.probability(&[0, 1, 1]), 1.0);
    }
}
