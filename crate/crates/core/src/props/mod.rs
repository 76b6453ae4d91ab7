//! The property language: zero-sum and nonzero-sum game operators over
//! path and reward formulae.

mod parser;
mod print;
mod typecheck;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::equilibria::{Criterion, EquilibriumKind, OptDirection};
use crate::expr::Expr;

pub use parser::{parse_properties, parse_property};
pub use typecheck::{operator_depth, resolve_coalition, typecheck, Diagnostic, MAX_OPERATOR_DEPTH};
pub(crate) use typecheck::{evaluate_constant, evaluate_steps, resolve_state_expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            CmpOp::Lt => value < bound,
            CmpOp::Le => value <= bound,
            CmpOp::Gt => value > bound,
            CmpOp::Ge => value >= bound,
        }
    }

    /// Lower bounds are checked against the maximal value.
    pub fn direction(self) -> OptDirection {
        match self {
            CmpOp::Gt | CmpOp::Ge => OptDirection::Max,
            CmpOp::Lt | CmpOp::Le => OptDirection::Min,
        }
    }
}

/// `min=?`, `max=?`, `=?` or `∼ bound`.
#[derive(Debug, Clone, PartialEq)]
pub enum Bound {
    Query(Option<OptDirection>),
    Compare(CmpOp, Expr),
}

impl Bound {
    /// Optimization direction of the coalition. `=?` maximizes.
    pub fn direction(&self) -> OptDirection {
        match self {
            Bound::Query(d) => d.unwrap_or(OptDirection::Max),
            Bound::Compare(op, _) => op.direction(),
        }
    }

    pub fn is_query(&self) -> bool {
        matches!(self, Bound::Query(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathFormula {
    Next(Box<StateFormula>),
    /// `left U right` with an optional step bound.
    Until { left: Box<StateFormula>, right: Box<StateFormula>, bound: Option<Expr> },
}

impl PathFormula {
    /// `F φ`, that is `true U φ`.
    pub fn eventually(target: StateFormula, bound: Option<Expr>) -> Self {
        PathFormula::Until { left: Box::new(StateFormula::True), right: Box::new(target), bound }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, PathFormula::Until { bound: None, .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewardFormula {
    /// `I=k`
    Instant(Expr),
    /// `C<=k`
    Cumulative(Expr),
    /// `F φ`
    Reach(Box<StateFormula>),
}

impl RewardFormula {
    pub fn is_bounded(&self) -> bool {
        !matches!(self, RewardFormula::Reach(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Prob(PathFormula),
    /// Reward structure name (`None` for the first one) and formula.
    Reward(Option<String>, RewardFormula),
}

impl Objective {
    pub fn is_bounded(&self) -> bool {
        match self {
            Objective::Prob(p) => p.is_bounded(),
            Objective::Reward(_, r) => r.is_bounded(),
        }
    }
}

/// Players of a coalition as written: names or 1-based indices.
pub type Coalition = Vec<String>;

#[derive(Debug, Clone, PartialEq)]
pub enum StateFormula {
    True,
    False,
    Label(String),
    /// A boolean expression over state variables and constants.
    Expr(Expr),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
    /// `<<C>> P∼q [ψ]` or `<<C>> R{r}∼x [ρ]`.
    ZeroSum { coalition: Coalition, bound: Bound, objective: Objective },
    /// `<<C1:…:Cm>>(⋆1,⋆2)opt∼x (θ1 + … + θm)`.
    NonZeroSum {
        coalitions: Vec<Coalition>,
        kind: EquilibriumKind,
        criterion: Criterion,
        direction: OptDirection,
        /// `None` for `opt=?`.
        bound: Option<(CmpOp, Expr)>,
        objectives: Vec<Objective>,
    },
}

impl StateFormula {
    pub fn is_game_operator(&self) -> bool {
        matches!(self, StateFormula::ZeroSum { .. } | StateFormula::NonZeroSum { .. })
    }

    /// Whether the formula is a numeric query (`=?` at the top level).
    pub fn is_query(&self) -> bool {
        match self {
            StateFormula::ZeroSum { bound, .. } => bound.is_query(),
            StateFormula::NonZeroSum { bound, .. } => bound.is_none(),
            _ => false,
        }
    }
}

/// A property file entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub formula: StateFormula,
    /// Line of the property file, 1-based.
    pub line: usize,
}
