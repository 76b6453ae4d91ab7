//! The model-checking engine.
//!
//! Zero-sum operators are solved on the two-coalition game: finite
//! horizons by backward induction over local matrix games, unbounded
//! operators by value iteration. Nonzero-sum operators compute optimal
//! equilibria of local normal form games at each state, by backward
//! induction for finite horizons and by value iteration over a game
//! augmented with per-coalition target flags otherwise.
//!
//! Value iteration stops on an absolute residual. This gives no a-posteriori
//! error bound on the result.

mod arena;
mod nonzero;
mod qualitative;
#[cfg(test)]
mod tests;
mod zero_sum;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::equilibria::{EquilibriumKind, EquilibriumQuery};
use crate::error::{bail, Error, Result};
use crate::game::{CoalitionPartition, Csg};
use crate::props::{
    resolve_coalition, typecheck, Bound, CmpOp, Objective, PathFormula, RewardFormula, StateFormula,
};
use crate::props::{evaluate_constant, evaluate_steps, resolve_state_expr};
use crate::strategy::SynthesizedStrategy;

pub use nonzero::{check_equilibria_finite, check_equilibria_infinite};
pub use qualitative::prob0_max;
pub use zero_sum::check_zero_sum;

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    /// Value iteration stops once the largest change is below this.
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { epsilon: DEFAULT_EPSILON, max_iters: DEFAULT_MAX_ITERS }
    }
}

impl CheckOptions {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            bail!(Input, "epsilon must be positive, got {}", self.epsilon);
        }
        if self.max_iters == 0 {
            bail!(Input, "max_iters must be positive");
        }
        Ok(())
    }
}

/// An objective whose state subformulae are evaluated to state sets and
/// whose bounds and reward names are resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedObjective {
    Next { target: Vec<bool> },
    Until { left: Vec<bool>, right: Vec<bool>, bound: Option<usize> },
    Instant { reward: usize, steps: usize },
    Cumulative { reward: usize, steps: usize },
    Reach { reward: usize, target: Vec<bool> },
}

impl ResolvedObjective {
    /// Step bound, or `None` for infinite-horizon objectives.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            ResolvedObjective::Next { .. } => Some(1),
            ResolvedObjective::Until { bound, .. } => *bound,
            ResolvedObjective::Instant { steps, .. } | ResolvedObjective::Cumulative { steps, .. } => Some(*steps),
            ResolvedObjective::Reach { .. } => None,
        }
    }

    pub fn is_reward(&self) -> bool {
        matches!(self, ResolvedObjective::Instant { .. } | ResolvedObjective::Cumulative { .. } | ResolvedObjective::Reach { .. })
    }

    pub fn reward(&self) -> Option<usize> {
        match self {
            ResolvedObjective::Instant { reward, .. }
            | ResolvedObjective::Cumulative { reward, .. }
            | ResolvedObjective::Reach { reward, .. } => Some(*reward),
            _ => None,
        }
    }

    /// Target set of an unbounded objective.
    pub fn target(&self) -> Option<&[bool]> {
        match self {
            ResolvedObjective::Until { right, bound: None, .. } => Some(right),
            ResolvedObjective::Reach { target, .. } => Some(target),
            _ => None,
        }
    }

    /// States the play may pass through before reaching the target.
    pub fn allowed(&self, n: usize) -> Vec<bool> {
        match self {
            ResolvedObjective::Until { left, .. } => left.clone(),
            _ => vec![true; n],
        }
    }

    /// The value in `state` with `remaining` own steps left when it does
    /// not depend on the actions chosen there.
    pub(crate) fn fixed_value(&self, game: &Csg, state: usize, remaining: isize) -> Option<f64> {
        if remaining < 0 {
            return Some(0.0);
        }
        match self {
            ResolvedObjective::Next { target } => (remaining == 0).then(|| indicator(target[state])),
            ResolvedObjective::Until { left, right, .. } => {
                if right[state] {
                    Some(1.0)
                } else if !left[state] || remaining == 0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            ResolvedObjective::Instant { reward, .. } => {
                (remaining == 0).then(|| game.rewards()[*reward].state_reward(state))
            }
            ResolvedObjective::Cumulative { .. } => (remaining == 0).then_some(0.0),
            ResolvedObjective::Reach { target, .. } => target[state].then_some(0.0),
        }
    }

    /// Reward collected by taking `transition` in `state`.
    pub(crate) fn immediate(&self, game: &Csg, state: usize, transition: usize) -> f64 {
        match self {
            ResolvedObjective::Cumulative { reward, .. } | ResolvedObjective::Reach { reward, .. } => {
                let r = &game.rewards()[*reward];
                r.state_reward(state) + r.action_reward(state, transition)
            }
            _ => 0.0,
        }
    }
}

pub(crate) fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Outcome of checking one property.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    /// The property as printed back by the property printer.
    pub property: String,
    /// Numeric value in the initial state: the optimal value for zero-sum
    /// operators, the sum of coalition values for equilibria. `None` for
    /// purely boolean formulae.
    pub value: Option<f64>,
    /// Per-coalition values in the initial state (equilibria only).
    pub coalition_values: Vec<f64>,
    /// Truth value for bounded operators and boolean formulae.
    pub satisfied: Option<bool>,
    /// Per-state values; one entry per state for zero-sum operators, one
    /// tuple per state for equilibria.
    pub state_values: Vec<Vec<f64>>,
    pub strategy: Option<SynthesizedStrategy>,
    pub iterations: usize,
    /// Largest change in the last value-iteration sweep (0 when exact).
    pub residual: f64,
}

impl CheckResult {
    pub(crate) fn empty() -> Self {
        CheckResult {
            property: String::new(),
            value: None,
            coalition_values: Vec::new(),
            satisfied: None,
            state_values: Vec::new(),
            strategy: None,
            iterations: 0,
            residual: 0.0,
        }
    }
}

/// Runs value iteration: `sweep(old, new)` computes the next iterate.
pub(crate) fn iterate<F>(mut values: Vec<f64>, options: &CheckOptions, mut sweep: F) -> Result<(Vec<f64>, usize, f64)>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let mut next = values.clone();
    let mut residual = f64::INFINITY;
    for it in 1..=options.max_iters {
        sweep(&values, &mut next)?;
        residual = crate::num::max_abs_diff(&values, &next);
        core::mem::swap(&mut values, &mut next);
        if residual < options.epsilon {
            return Ok((values, it, residual));
        }
    }
    Err(Error::NonConvergence { iterations: options.max_iters, residual })
}

/// Checks a property in the initial state of `game`.
pub fn check(game: &Csg, formula: &StateFormula, options: &CheckOptions) -> Result<CheckResult> {
    options.validate()?;
    let diagnostics = typecheck(formula, game);
    if !diagnostics.is_empty() {
        let list: Vec<String> = diagnostics.iter().map(|d| d.to_string()).collect();
        bail!(Input, "{}", list.join("; "));
    }
    let mut result = match formula {
        StateFormula::ZeroSum { coalition, bound, objective } => {
            let players = resolve_coalition(game, coalition).map_err(Error::Input)?;
            let obj = resolve_objective(game, objective, options)?;
            let mut r = check_zero_sum(game, &players, bound.direction(), &obj, options)?;
            if let Bound::Compare(op, x) = bound {
                let threshold = evaluate_constant(game, x)?.as_f64()?;
                r.satisfied = r.value.map(|v| holds(*op, v, threshold));
            }
            r
        }
        StateFormula::NonZeroSum { coalitions, kind, criterion, direction, bound, objectives } => {
            let partition = resolve_partition(game, coalitions)?;
            let objs = objectives.iter().map(|o| resolve_objective(game, o, options)).collect::<Result<Vec<_>>>()?;
            let query = EquilibriumQuery { kind: *kind, criterion: *criterion, direction: *direction };
            let mut r = if objs.iter().all(|o| o.horizon().is_some()) {
                check_equilibria_finite(game, &partition, &objs, query, options)?
            } else {
                check_equilibria_infinite(game, &partition, &objs, query, options)?
            };
            if let Some((op, x)) = bound {
                let threshold = evaluate_constant(game, x)?.as_f64()?;
                r.satisfied = r.value.map(|v| holds(*op, v, threshold));
            }
            r
        }
        _ => {
            let sat = evaluate_state_formula(game, formula, options)?;
            let mut r = CheckResult::empty();
            r.satisfied = Some(sat[game.initial()]);
            r.state_values = sat.iter().map(|&b| vec![indicator(b)]).collect();
            r
        }
    };
    result.property = formula.to_string();
    Ok(result)
}

fn resolve_partition(game: &Csg, coalitions: &[Vec<String>]) -> Result<CoalitionPartition> {
    let list = coalitions
        .iter()
        .map(|c| resolve_coalition(game, c).map_err(Error::Input))
        .collect::<Result<Vec<_>>>()?;
    let partition = CoalitionPartition::new(list)?;
    let missing = partition.uncovered(game.num_players());
    if !missing.is_empty() {
        bail!(Input, "players not in any coalition: {:?}", missing);
    }
    Ok(partition)
}

fn reward_index(game: &Csg, name: &Option<String>) -> Result<usize> {
    match name {
        Some(n) => game.reward_index(n).ok_or_else(|| Error::Input(format!("unknown reward structure \"{}\"", n))),
        None if !game.rewards().is_empty() => Ok(0),
        None => bail!(Input, "the game has no reward structure"),
    }
}

/// Evaluates the state subformulae and bounds of an objective.
pub fn resolve_objective(game: &Csg, objective: &Objective, options: &CheckOptions) -> Result<ResolvedObjective> {
    Ok(match objective {
        Objective::Prob(PathFormula::Next(a)) => {
            ResolvedObjective::Next { target: evaluate_state_formula(game, a, options)? }
        }
        Objective::Prob(PathFormula::Until { left, right, bound }) => ResolvedObjective::Until {
            left: evaluate_state_formula(game, left, options)?,
            right: evaluate_state_formula(game, right, options)?,
            bound: bound.as_ref().map(|k| evaluate_steps(game, k)).transpose()?,
        },
        Objective::Reward(name, r) => {
            let reward = reward_index(game, name)?;
            match r {
                RewardFormula::Instant(k) => ResolvedObjective::Instant { reward, steps: evaluate_steps(game, k)? },
                RewardFormula::Cumulative(k) => {
                    ResolvedObjective::Cumulative { reward, steps: evaluate_steps(game, k)? }
                }
                RewardFormula::Reach(t) => {
                    ResolvedObjective::Reach { reward, target: evaluate_state_formula(game, t, options)? }
                }
            }
        }
    })
}

/// The set of states satisfying a state formula. Game operators must be
/// bounded (`∼q`) to be used as state formulae; each is solved from every
/// state at once.
pub fn evaluate_state_formula(game: &Csg, formula: &StateFormula, options: &CheckOptions) -> Result<Vec<bool>> {
    let n = game.num_states();
    Ok(match formula {
        StateFormula::True => vec![true; n],
        StateFormula::False => vec![false; n],
        StateFormula::Label(l) => match game.label_index(l) {
            Some(i) => game.label_states(i).to_vec(),
            None => bail!(Input, "unknown label \"{}\"", l),
        },
        StateFormula::Expr(e) => {
            let resolved = resolve_state_expr(game, e)?;
            let Some(symbols) = game.symbols() else {
                bail!(Input, "the game has no state variables for '{}'", e);
            };
            symbols.valuations.iter().map(|v| resolved.eval_bool(v)).collect::<Result<Vec<_>>>()?
        }
        StateFormula::Not(a) => evaluate_state_formula(game, a, options)?.into_iter().map(|b| !b).collect(),
        StateFormula::And(a, b) => {
            let (x, y) = (evaluate_state_formula(game, a, options)?, evaluate_state_formula(game, b, options)?);
            x.iter().zip(&y).map(|(p, q)| *p && *q).collect()
        }
        StateFormula::Or(a, b) => {
            let (x, y) = (evaluate_state_formula(game, a, options)?, evaluate_state_formula(game, b, options)?);
            x.iter().zip(&y).map(|(p, q)| *p || *q).collect()
        }
        StateFormula::ZeroSum { bound: Bound::Query(_), .. } | StateFormula::NonZeroSum { bound: None, .. } => {
            bail!(Input, "a numeric query cannot be used as a state formula")
        }
        StateFormula::ZeroSum { coalition, bound: Bound::Compare(op, x), objective } => {
            let players = resolve_coalition(game, coalition).map_err(Error::Input)?;
            let obj = resolve_objective(game, objective, options)?;
            let r = check_zero_sum(game, &players, op.direction(), &obj, options)?;
            let threshold = evaluate_constant(game, x)?.as_f64()?;
            compare_states(&r.state_values, *op, threshold)
        }
        StateFormula::NonZeroSum { coalitions, kind, criterion, direction, bound: Some((op, x)), objectives } => {
            let partition = resolve_partition(game, coalitions)?;
            let objs = objectives.iter().map(|o| resolve_objective(game, o, options)).collect::<Result<Vec<_>>>()?;
            let query = EquilibriumQuery { kind: *kind, criterion: *criterion, direction: *direction };
            let r = if objs.iter().all(|o| o.horizon().is_some()) {
                check_equilibria_finite(game, &partition, &objs, query, options)?
            } else {
                check_equilibria_infinite(game, &partition, &objs, query, options)?
            };
            let threshold = evaluate_constant(game, x)?.as_f64()?;
            compare_states(&r.state_values, *op, threshold)
        }
    })
}

/// Relative distance below which a computed value counts as equal to a
/// threshold. Solver round-off would otherwise flip `>=` at the boundary.
const THRESHOLD_TOLERANCE: f64 = 1e-9;

fn holds(op: CmpOp, value: f64, threshold: f64) -> bool {
    let close = (value - threshold).abs() <= THRESHOLD_TOLERANCE * (1.0 + threshold.abs());
    op.holds(if close { threshold } else { value }, threshold)
}

fn compare_states(values: &[Vec<f64>], op: CmpOp, threshold: f64) -> Vec<bool> {
    values.iter().map(|v| holds(op, v.iter().sum(), threshold)).collect()
}

pub(crate) fn is_correlated(query: &EquilibriumQuery) -> bool {
    query.kind == EquilibriumKind::Correlated
}
