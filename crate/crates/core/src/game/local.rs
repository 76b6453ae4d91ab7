use alloc::vec;
use alloc::vec::Vec;

use super::{Csg, NormalFormGame};
use crate::error::{bail, Result};

/// The one-shot game played in `state` when every successor is worth its
/// continuation vector.
///
/// `u_i(α) = immediate(α)_i + Σ δ(s,α)(s')·continuation[s'][i]`, where
/// `immediate` holds one reward vector per transition of the state.
pub fn local_nfg(
    game: &Csg,
    state: usize,
    continuation: &[Vec<f64>],
    immediate: Option<&[Vec<f64>]>,
) -> Result<NormalFormGame> {
    let m = continuation.get(state).map(Vec::len).unwrap_or(0);
    if continuation.len() < game.num_states() {
        bail!(Internal, "continuation covers {} of {} states", continuation.len(), game.num_states());
    }
    if let Some(s) = continuation.iter().position(|c| c.len() != m) {
        bail!(Internal, "continuation of state {} has the wrong length", s);
    }
    local_nfg_with(game, state, m, |succ, out| out.copy_from_slice(&continuation[succ]), |t, out| {
        if let Some(imm) = immediate {
            out.copy_from_slice(&imm[t]);
        }
    })
}

/// Like [`local_nfg`] but pulls continuation and immediate values through
/// callbacks that fill a buffer of length `m`.
pub fn local_nfg_with<C, I>(game: &Csg, state: usize, m: usize, mut continuation: C, mut immediate: I) -> Result<NormalFormGame>
where
    C: FnMut(usize, &mut [f64]),
    I: FnMut(usize, &mut [f64]),
{
    if game.num_players() != m {
        bail!(Internal, "{} value components for {} players", m, game.num_players());
    }
    let names = (0..m)
        .map(|p| game.available(state, p).iter().map(|&a| game.action_name(p, a).into()).collect())
        .collect();
    let transitions = game.transitions(state);
    let expected: usize = (0..m).map(|p| game.available(state, p).len()).product();
    if transitions.len() != expected {
        bail!(Internal, "state {} does not define every joint action", state);
    }
    let mut table = Vec::with_capacity(expected * m);
    let mut buf = vec![0.0; m];
    for (t, tr) in transitions.iter().enumerate() {
        let mut u = vec![0.0; m];
        immediate(t, &mut u);
        for &(succ, p) in &tr.successors {
            continuation(succ, &mut buf);
            for (ui, b) in u.iter_mut().zip(&buf) {
                *ui += p * b;
            }
        }
        table.extend_from_slice(&u);
    }
    NormalFormGame::from_table(names, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{fixtures, CsgBuilder, IDLE};

    #[test]
    fn terminal_state_gives_zero_game() {
        let g = fixtures::pennies();
        let cont = vec![vec![0.0, 0.0]; 3];
        let nfg = local_nfg(&g, 1, &cont, None).unwrap();
        assert_eq!(nfg.num_joint(), 1);
        assert_eq!(nfg.utility_table(), &[0.0, 0.0]);
    }

    #[test]
    fn deterministic_successor_gives_constant_game() {
        let mut b = CsgBuilder::new();
        b.add_player("a", &["x", "y"]);
        b.add_player("b", &["z"]);
        b.add_states(2);
        b.transition(0, vec![1, 1], vec![(1, 1.0)]);
        b.transition(0, vec![2, 1], vec![(1, 1.0)]);
        b.transition(1, vec![IDLE, IDLE], vec![(1, 1.0)]);
        let g = b.build().unwrap();
        let nfg = local_nfg(&g, 0, &[vec![0.0, 0.0], vec![5.0, -5.0]], None).unwrap();
        assert_eq!(nfg.utility_table(), &[5.0, -5.0, 5.0, -5.0]);
    }

    #[test]
    fn coin_flip_takes_expectation() {
        let mut b = CsgBuilder::new();
        b.add_player("a", &["x"]);
        b.add_player("b", &["z"]);
        b.add_states(3);
        b.transition(0, vec![1, 1], vec![(1, 0.5), (2, 0.5)]);
        b.transition(1, vec![IDLE, IDLE], vec![(1, 1.0)]);
        b.transition(2, vec![IDLE, IDLE], vec![(2, 1.0)]);
        let g = b.build().unwrap();
        let cont = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let nfg = local_nfg(&g, 0, &cont, None).unwrap();
        assert_eq!(nfg.utility_table(), &[0.5, 0.5]);
    }

    #[test]
    fn missing_continuation_is_internal_error() {
        let g = fixtures::pennies();
        assert!(local_nfg(&g, 0, &[vec![0.0, 0.0]], None).is_err());
    }

    #[test]
    fn immediate_rewards_are_added() {
        let g = fixtures::pennies();
        let cont = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let imm = vec![vec![10.0, 0.0]; 4];
        let nfg = local_nfg(&g, 0, &cont, Some(&imm)).unwrap();
        assert_eq!(nfg.utilities_at(0), &[11.0, 0.0]);
        assert_eq!(nfg.utilities_at(1), &[10.0, 1.0]);
    }
}
