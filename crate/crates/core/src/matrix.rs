//! Two-player zero-sum matrix games.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::game::MixedStrategy;
use crate::lp::{lp_solve, Direction, LinearProgram, LpOutcome, Relation};

/// Payoffs to the row player; the column player receives their negation.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatrixGame {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            bail!(Input, "matrix game must be nonempty");
        }
        if data.len() != rows * cols {
            bail!(Input, "{} entries for a {}x{} matrix", data.len(), rows, cols);
        }
        if data.iter().any(|v| !v.is_finite()) {
            bail!(Input, "matrix game entries must be finite");
        }
        Ok(MatrixGame { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            bail!(Input, "ragged matrix");
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// The game seen from the column player: `-Zᵀ`.
    pub fn negated_transpose(&self) -> MatrixGame {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(-self.get(i, j));
            }
        }
        MatrixGame { rows: self.cols, cols: self.rows, data }
    }

    pub fn shifted(&self, c: f64) -> MatrixGame {
        MatrixGame { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v + c).collect() }
    }

    fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Worst-case expected payoff of a row strategy.
    pub fn security_level(&self, x: &[f64]) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| x[i] * self.get(i, j)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Best expected payoff the row player can get against a column strategy.
    pub fn best_row_payoff(&self, y: &[f64]) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| y[j] * self.get(i, j)).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution {
    pub value: f64,
    pub row_strategy: MixedStrategy,
    pub col_strategy: MixedStrategy,
    /// Objectives of the row and column linear programs on the shifted game.
    pub primal_objective: f64,
    pub dual_objective: f64,
}

fn row_lp(game: &MatrixGame, shift: f64) -> Result<(f64, Vec<f64>, f64)> {
    let (l, m) = (game.rows, game.cols);
    if m == 1 {
        // a single column: pick the best row
        let best = (0..l).fold(0, |b, i| if game.get(i, 0) > game.get(b, 0) { i } else { b });
        let mut x = vec![0.0; l];
        x[best] = 1.0;
        return Ok((game.get(best, 0), x, 1.0 / (game.get(best, 0) + shift)));
    }
    let mut lp = LinearProgram::new(l, Direction::Minimize);
    lp.set_objective(vec![1.0; l]);
    for j in 0..m {
        let coeffs = (0..l).map(|i| game.get(i, j) + shift).collect();
        lp.add_constraint(coeffs, Relation::Ge, 1.0);
    }
    let sol = match lp_solve(&lp)? {
        LpOutcome::Optimal(s) => s,
        other => bail!(Solver, "matrix game LP returned {:?}", other),
    };
    let total: f64 = sol.x.iter().sum();
    if total <= 0.0 {
        bail!(Numeric, "degenerate matrix game LP");
    }
    let x: Vec<f64> = sol.x.iter().map(|p| (p / total).max(0.0)).collect();
    Ok((1.0 / total - shift, normalize(x), total))
}

fn col_lp(game: &MatrixGame, shift: f64) -> Result<(Vec<f64>, f64)> {
    let (l, m) = (game.rows, game.cols);
    if l == 1 {
        let best = (0..m).fold(0, |b, j| if game.get(0, j) < game.get(0, b) { j } else { b });
        let mut y = vec![0.0; m];
        y[best] = 1.0;
        return Ok((y, 1.0 / (game.get(0, best) + shift)));
    }
    let mut lp = LinearProgram::new(m, Direction::Maximize);
    lp.set_objective(vec![1.0; m]);
    for i in 0..l {
        let coeffs = (0..m).map(|j| game.get(i, j) + shift).collect();
        lp.add_constraint(coeffs, Relation::Le, 1.0);
    }
    let sol = match lp_solve(&lp)? {
        LpOutcome::Optimal(s) => s,
        other => bail!(Solver, "matrix game dual LP returned {:?}", other),
    };
    let total: f64 = sol.x.iter().sum();
    if total <= 0.0 {
        bail!(Numeric, "degenerate matrix game dual LP");
    }
    Ok((normalize(sol.x.iter().map(|q| (q / total).max(0.0)).collect()), total))
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn shift_for(game: &MatrixGame) -> f64 {
    1.0 - game.min_entry()
}

/// Value and optimal strategies of a matrix game. The column strategy is
/// the normalized solution of the dual linear program.
pub fn solve_matrix_game(game: &MatrixGame) -> Result<GameSolution> {
    let shift = shift_for(game);
    let (value, x, primal) = row_lp(game, shift)?;
    let (y, dual) = col_lp(game, shift)?;
    let value = value.clamp(game.min_entry(), game.max_entry());
    Ok(GameSolution {
        value,
        row_strategy: MixedStrategy::new_unchecked(x),
        col_strategy: MixedStrategy::new_unchecked(y),
        primal_objective: primal,
        dual_objective: dual,
    })
}

/// Value and optimal row strategy only.
pub fn solve_matrix_value(game: &MatrixGame) -> Result<(f64, Vec<f64>)> {
    if game.min_entry() == game.max_entry() {
        let mut x = vec![0.0; game.rows];
        x[0] = 1.0;
        return Ok((game.min_entry(), x));
    }
    let shift = shift_for(game);
    let (value, x, _) = row_lp(game, shift)?;
    Ok((value.clamp(game.min_entry(), game.max_entry()), x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn game(rows: &[&[f64]]) -> MatrixGame {
        MatrixGame::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn matching_pennies() {
        let s = solve_matrix_game(&game(&[&[1.0, -1.0], &[-1.0, 1.0]])).unwrap();
        assert!(s.value.abs() <= 1e-9);
        assert!((s.row_strategy.prob(0) - 0.5).abs() <= 1e-8);
        assert!((s.col_strategy.prob(0) - 0.5).abs() <= 1e-8);
    }

    #[test]
    fn constant_matrix_reports_pure_first_row() {
        let s = solve_matrix_game(&game(&[&[2.0, 2.0], &[2.0, 2.0]])).unwrap();
        assert_eq!(s.value, 2.0);
        assert_eq!(s.row_strategy.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn two_by_two_against_closed_form_oracle() {
        // closed form (ad - bc)/(a + d - b - c) = 6/4; grid search gives
        // x = (0.5, 0.5) and y = (0.25, 0.75)
        let s = solve_matrix_game(&game(&[&[3.0, 1.0], &[0.0, 2.0]])).unwrap();
        assert!((s.value - 1.5).abs() < 1e-9);
        assert!((s.row_strategy.prob(0) - 0.5).abs() < 1e-9);
        assert!((s.col_strategy.prob(0) - 0.25).abs() < 1e-9);
    }

    #[test]
    fn single_row_and_column() {
        let s = solve_matrix_game(&game(&[&[4.0, -1.0, 2.0]])).unwrap();
        assert_eq!(s.value, -1.0);
        assert_eq!(s.col_strategy.probs(), &[0.0, 1.0, 0.0]);
        let s = solve_matrix_game(&game(&[&[4.0], &[-1.0]])).unwrap();
        assert_eq!(s.value, 4.0);
    }

    fn matrices() -> impl Strategy<Value = MatrixGame> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-10.0f64..10.0, r * c).prop_map(move |d| MatrixGame::new(r, c, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn security_and_duality(g in matrices()) {
            let s = solve_matrix_game(&g).unwrap();
            prop_assert!(g.security_level(s.row_strategy.probs()) >= s.value - 1e-8);
            prop_assert!(g.best_row_payoff(s.col_strategy.probs()) <= s.value + 1e-8);
            prop_assert!((s.primal_objective - s.dual_objective).abs() <= 1e-8);
        }

        #[test]
        fn antisymmetry(g in matrices()) {
            let a = solve_matrix_game(&g).unwrap().value;
            let b = solve_matrix_game(&g.negated_transpose()).unwrap().value;
            prop_assert!((a + b).abs() <= 1e-8);
        }

        #[test]
        fn shift_equivariance(g in matrices(), c in -5.0f64..5.0) {
            let s = solve_matrix_game(&g).unwrap();
            let shifted = g.shifted(c);
            let t = solve_matrix_game(&shifted).unwrap();
            prop_assert!((t.value - s.value - c).abs() <= 1e-8);
            prop_assert!(shifted.security_level(s.row_strategy.probs()) >= t.value - 1e-8);
        }
    }
}
