//! A game seen as two sides: the players on the row side choose a tuple of
//! actions, the column side answers. Each state becomes a matrix whose
//! cells are the transitions of the state.

use alloc::vec;
use alloc::vec::Vec;

use crate::equilibria::OptDirection;
use crate::error::{bail, Result};
use crate::game::Csg;
use crate::matrix::{solve_matrix_game, solve_matrix_value, MatrixGame};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Row,
    Col,
}

#[derive(Debug, Clone)]
pub(crate) struct Shape {
    pub rows: usize,
    pub cols: usize,
    /// Transition index of each cell, row-major.
    pub cell: Vec<usize>,
}

impl Shape {
    pub fn len(&self, side: Side) -> usize {
        match side {
            Side::Row => self.rows,
            Side::Col => self.cols,
        }
    }

    /// Transition played when `side` picks `a` and the other side `b`.
    pub fn transition(&self, side: Side, a: usize, b: usize) -> usize {
        match side {
            Side::Row => self.cell[a * self.cols + b],
            Side::Col => self.cell[b * self.cols + a],
        }
    }
}

pub(crate) struct Arena<'a> {
    pub game: &'a Csg,
    pub row: Vec<usize>,
    pub col: Vec<usize>,
    pub shapes: Vec<Shape>,
}

impl<'a> Arena<'a> {
    pub fn new(game: &'a Csg, row: Vec<usize>, col: Vec<usize>) -> Result<Self> {
        let mut shapes = Vec::with_capacity(game.num_states());
        for s in 0..game.num_states() {
            let size = |players: &[usize]| players.iter().map(|&p| game.available(s, p).len()).product::<usize>();
            let (rows, cols) = (size(&row), size(&col));
            let mut cell = vec![usize::MAX; rows * cols];
            for (t, tr) in game.transitions(s).iter().enumerate() {
                let index = |players: &[usize]| {
                    players.iter().fold(0, |acc, &p| {
                        let avail = game.available(s, p);
                        acc * avail.len() + avail.binary_search(&tr.joint[p]).unwrap_or(0)
                    })
                };
                cell[index(&row) * cols + index(&col)] = t;
            }
            if cell.contains(&usize::MAX) {
                bail!(Unsupported, "state {} does not define every joint action", s);
            }
            shapes.push(Shape { rows, cols, cell });
        }
        Ok(Arena { game, row, col, shapes })
    }

    pub fn players(&self, side: Side) -> &[usize] {
        match side {
            Side::Row => &self.row,
            Side::Col => &self.col,
        }
    }

    /// Positions within each player's available list for a tuple index of
    /// `side`, in the side's player order.
    pub fn decode(&self, state: usize, side: Side, mut index: usize) -> Vec<(usize, usize)> {
        let players = self.players(side);
        let mut out = vec![(0, 0); players.len()];
        for (k, &p) in players.iter().enumerate().rev() {
            let n = self.game.available(state, p).len();
            out[k] = (p, index % n);
            index /= n;
        }
        out
    }

    /// Per-player distributions (indexed by game player) realizing the
    /// side strategies. A side of several players must play a pure tuple;
    /// its most likely tuple is used.
    pub fn split_strategies(&self, state: usize, row: &[f64], col: &[f64]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> =
            (0..self.game.num_players()).map(|p| vec![0.0; self.game.available(state, p).len()]).collect();
        for (side, dist) in [(Side::Row, row), (Side::Col, col)] {
            let players = self.players(side);
            match players.len() {
                0 => {}
                1 => out[players[0]].copy_from_slice(dist),
                _ => {
                    let best = (0..dist.len()).fold(0, |b, i| if dist[i] > dist[b] { i } else { b });
                    for (p, pos) in self.decode(state, side, best) {
                        out[p][pos] = 1.0;
                    }
                }
            }
        }
        for row in &mut out {
            if row.iter().all(|&x| x == 0.0) {
                row[0] = 1.0;
            }
        }
        out
    }
}

fn oriented(m: &[f64], dir: OptDirection) -> Vec<f64> {
    match dir {
        OptDirection::Max => m.to_vec(),
        OptDirection::Min => m.iter().map(|x| -x).collect(),
    }
}

/// Pure saddle point of a row-maximizing matrix, if one exists.
fn saddle(m: &[f64], rows: usize, cols: usize) -> Option<(f64, usize, usize)> {
    let mut lower = f64::NEG_INFINITY;
    let mut best_row = 0;
    for i in 0..rows {
        let worst = m[i * cols..(i + 1) * cols].iter().copied().fold(f64::INFINITY, f64::min);
        if worst > lower {
            lower = worst;
            best_row = i;
        }
    }
    let mut upper = f64::INFINITY;
    let mut best_col = 0;
    for j in 0..cols {
        let top = (0..rows).map(|i| m[i * cols + j]).fold(f64::NEG_INFINITY, f64::max);
        if top < upper {
            upper = top;
            best_col = j;
        }
    }
    (upper - lower <= 1e-12 * (1.0 + lower.abs())).then_some((lower, best_row, best_col))
}

fn finite(m: &[f64]) -> Result<()> {
    if m.iter().any(|x| !x.is_finite()) {
        bail!(Internal, "local matrix game has a non-finite entry");
    }
    Ok(())
}

/// Value of the matrix game where the row side optimizes in `dir`.
pub(crate) fn matrix_value(m: &[f64], rows: usize, cols: usize, dir: OptDirection) -> Result<f64> {
    finite(m)?;
    let g = oriented(m, dir);
    let v = match saddle(&g, rows, cols) {
        Some((v, _, _)) => v,
        None => solve_matrix_value(&MatrixGame::new(rows, cols, g)?)?.0,
    };
    Ok(match dir {
        OptDirection::Max => v,
        OptDirection::Min => -v,
    })
}

/// Value and optimal strategies of both sides.
pub(crate) fn matrix_solution(m: &[f64], rows: usize, cols: usize, dir: OptDirection) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    finite(m)?;
    let g = oriented(m, dir);
    let (v, x, y) = match saddle(&g, rows, cols) {
        Some((v, i, j)) => {
            let mut x = vec![0.0; rows];
            let mut y = vec![0.0; cols];
            x[i] = 1.0;
            y[j] = 1.0;
            (v, x, y)
        }
        None => {
            let sol = solve_matrix_game(&MatrixGame::new(rows, cols, g)?)?;
            (sol.value, sol.row_strategy.probs().to_vec(), sol.col_strategy.probs().to_vec())
        }
    };
    let v = match dir {
        OptDirection::Max => v,
        OptDirection::Min => -v,
    };
    Ok((v, x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures;

    #[test]
    fn pennies_matrix() {
        let g = fixtures::pennies();
        let a = Arena::new(&g, vec![0], vec![1]).unwrap();
        assert_eq!((a.shapes[0].rows, a.shapes[0].cols), (2, 2));
        assert_eq!(a.shapes[0].cell, vec![0, 1, 2, 3]);
        let swapped = Arena::new(&g, vec![1], vec![0]).unwrap();
        assert_eq!(swapped.shapes[0].cell, vec![0, 2, 1, 3]);
        let both = Arena::new(&g, vec![0, 1], vec![]).unwrap();
        assert_eq!((both.shapes[0].rows, both.shapes[0].cols), (4, 1));
        assert_eq!(both.decode(0, Side::Row, 2), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn matrix_values_by_direction() {
        let m = [1.0, 0.0, 0.0, 1.0];
        assert!((matrix_value(&m, 2, 2, OptDirection::Max).unwrap() - 0.5).abs() < 1e-12);
        assert!((matrix_value(&m, 2, 2, OptDirection::Min).unwrap() - 0.5).abs() < 1e-12);
        let m = [3.0, 1.0, 4.0, 2.0];
        assert_eq!(matrix_value(&m, 2, 2, OptDirection::Max).unwrap(), 2.0);
        assert_eq!(matrix_value(&m, 2, 2, OptDirection::Min).unwrap(), 3.0);
        let (v, x, y) = matrix_solution(&m, 2, 2, OptDirection::Min).unwrap();
        assert_eq!((v, x, y), (3.0, vec![1.0, 0.0], vec![1.0, 0.0]));
    }
}
