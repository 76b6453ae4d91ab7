//! Model checking, equilibrium computation and strategy synthesis for
//! concurrent stochastic games.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, parallel
//! simulation and the command line live in the `csgcheck` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod checker;
pub mod equilibria;
pub mod error;
pub mod eval;
pub mod expr;
pub mod game;
pub mod lexer;
pub mod linalg;
pub mod lp;
pub mod matrix;
pub mod model;
pub mod num;
pub mod props;
pub mod strategy;

pub use error::{Error, ParseError, Result};
pub use game::{Csg, CsgBuilder, MixedStrategy, NormalFormGame, StrategyProfile};
