//! Graph-based precomputations that ignore probability magnitudes.

use alloc::vec;
use alloc::vec::Vec;

use super::arena::{Arena, Side};
use crate::error::Result;
use crate::game::Csg;

fn other(side: Side) -> Side {
    match side {
        Side::Row => Side::Col,
        Side::Col => Side::Row,
    }
}

fn hits(game: &Csg, s: usize, t: usize, set: &[bool]) -> bool {
    game.transitions(s)[t].successors.iter().any(|&(x, p)| p > 0.0 && set[x])
}

fn inside(game: &Csg, s: usize, t: usize, set: &[bool]) -> bool {
    game.transitions(s)[t].successors.iter().all(|&(x, p)| p <= 0.0 || set[x])
}

/// States from which `reacher` can reach `target` through `allowed` with
/// positive probability whatever the other side does. Playing every action
/// with positive probability is enough for this, so the test per state is
/// "for each opponent action some own action may step into the set".
pub(crate) fn positive_reach(arena: &Arena, reacher: Side, allowed: &[bool], target: &[bool]) -> Vec<bool> {
    let game = arena.game;
    let mut set = target.to_vec();
    loop {
        let mut changed = false;
        for s in 0..game.num_states() {
            if set[s] || !allowed[s] {
                continue;
            }
            let shape = &arena.shapes[s];
            let ok = (0..shape.len(other(reacher)))
                .all(|b| (0..shape.len(reacher)).any(|a| hits(game, s, shape.transition(reacher, a, b), &set)));
            if ok {
                set[s] = true;
                changed = true;
            }
        }
        if !changed {
            return set;
        }
    }
}

/// Actions of `reacher` in `s` that keep the play inside `set` against
/// every opponent action.
pub(crate) fn stay_actions(arena: &Arena, s: usize, reacher: Side, set: &[bool]) -> Vec<usize> {
    let shape = &arena.shapes[s];
    (0..shape.len(reacher))
        .filter(|&a| (0..shape.len(other(reacher))).all(|b| inside(arena.game, s, shape.transition(reacher, a, b), set)))
        .collect()
}

/// States from which `reacher` can reach `target` through `allowed` with
/// probability one, computed as the nested fixpoint
/// `νY. μX. target ∪ Apre(Y, X)`. `Apre` holds in a state when the
/// actions that surely stay in `Y` are nonempty and, against each
/// opponent action, one of them may step into `X`.
pub(crate) fn almost_sure_reach(arena: &Arena, reacher: Side, allowed: &[bool], target: &[bool]) -> Vec<bool> {
    let game = arena.game;
    let n = game.num_states();
    let mut y: Vec<bool> = (0..n).map(|s| allowed[s] || target[s]).collect();
    loop {
        let stay: Vec<Vec<usize>> = (0..n).map(|s| if y[s] { stay_actions(arena, s, reacher, &y) } else { Vec::new() }).collect();
        let mut x = target.to_vec();
        loop {
            let mut changed = false;
            for s in 0..n {
                if x[s] || !y[s] || stay[s].is_empty() {
                    continue;
                }
                let shape = &arena.shapes[s];
                let ok = (0..shape.len(other(reacher)))
                    .all(|b| stay[s].iter().any(|&a| hits(game, s, shape.transition(reacher, a, b), &x)));
                if ok {
                    x[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if x == y {
            return y;
        }
        y = x;
    }
}

/// States from which the players in `maximizer` cannot reach `target` with
/// positive probability against the remaining players.
pub fn prob0_max(game: &Csg, maximizer: &[usize], target: &[bool]) -> Result<Vec<bool>> {
    let rest: Vec<usize> = (0..game.num_players()).filter(|p| !maximizer.contains(p)).collect();
    let arena = Arena::new(game, maximizer.to_vec(), rest)?;
    let allowed = vec![true; game.num_states()];
    Ok(positive_reach(&arena, Side::Row, &allowed, target).into_iter().map(|b| !b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{fixtures, CsgBuilder};

    #[test]
    fn whole_space_target_gives_empty_set() {
        let g = fixtures::pennies();
        assert_eq!(prob0_max(&g, &[0], &[true; 3]).unwrap(), vec![false; 3]);
    }

    #[test]
    fn closed_sink_is_in_prob0() {
        let g = fixtures::pennies();
        // from state 2 nothing leads to state 1
        let p0 = prob0_max(&g, &[0], &[false, true, false]).unwrap();
        assert_eq!(p0, vec![false, false, true]);
    }

    /// Row wants to reach state 1; column can block with one action as long
    /// as row does not guess it.
    fn guessing() -> Csg {
        let mut b = CsgBuilder::new();
        b.add_player("r", &["a", "b"]);
        b.add_player("c", &["a", "b"]);
        b.add_states(3);
        b.transition(0, vec![1, 1], vec![(1, 1.0)]);
        b.transition(0, vec![1, 2], vec![(0, 1.0)]);
        b.transition(0, vec![2, 1], vec![(2, 1.0)]);
        b.transition(0, vec![2, 2], vec![(1, 1.0)]);
        b.transition(1, vec![0, 0], vec![(1, 1.0)]);
        b.transition(2, vec![0, 0], vec![(2, 1.0)]);
        b.build().unwrap()
    }

    #[test]
    fn almost_sure_needs_safe_actions() {
        let g = guessing();
        let a = Arena::new(&g, vec![0], vec![1]).unwrap();
        let all = [true; 3];
        let target = [false, true, false];
        assert_eq!(positive_reach(&a, Side::Row, &all, &target), vec![true, true, false]);
        // action b may drop into the sink, action a alone can be blocked forever
        assert_eq!(almost_sure_reach(&a, Side::Row, &all, &target), vec![false, true, false]);
        // the column side cannot force reaching state 1 either
        assert_eq!(almost_sure_reach(&a, Side::Col, &all, &target), vec![false, true, false]);
    }
}
