//! The guarded-command modelling language: syntax tree, parser, printer
//! and elaboration into an explicit [`Csg`](crate::game::Csg).

mod elaborate;
mod parser;
mod print;

use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::Expr;

pub use elaborate::elaborate;
pub use parser::parse_model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstType {
    Int,
    Double,
    Bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstDecl {
    pub name: String,
    pub ty: ConstType,
    /// `None` when the value must be supplied as a binding.
    pub value: Option<Expr>,
}

/// `player name m1, m2, [a] endplayer`
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerDecl {
    pub name: String,
    pub modules: Vec<String>,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarType {
    Range(Expr, Expr),
    Bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub ty: VarType,
    /// Defaults to the lower bound, or `false`.
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub var: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    /// `None` for an update written without a probability (probability 1).
    pub prob: Option<Expr>,
    /// Empty for `true`.
    pub assignments: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub actions: Vec<String>,
    pub guard: Expr,
    pub updates: Vec<Update>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub name: String,
    pub variables: Vec<VarDecl>,
    pub commands: Vec<Command>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardItem {
    /// `Some` for action rewards.
    pub actions: Option<Vec<String>>,
    pub guard: Expr,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardBlock {
    pub name: String,
    pub items: Vec<RewardItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelDecl {
    pub name: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelAst {
    pub constants: Vec<ConstDecl>,
    pub players: Vec<PlayerDecl>,
    pub modules: Vec<Module>,
    pub rewards: Vec<RewardBlock>,
    pub labels: Vec<LabelDecl>,
}
