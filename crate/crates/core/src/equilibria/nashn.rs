//! Nash equilibria of games with three or more players.
//!
//! Pure profiles are checked directly. For every mixed support profile the
//! indifference equations are solved with a damped Gauss-Newton method
//! (Levenberg-Marquardt) from a few deterministic starting points, and each
//! solution is certified before it is kept.

use alloc::vec;
use alloc::vec::Vec;

use super::{better, clean_distribution, nash_gain, subsets_by_size, Criterion, EquilibriumResult, Witness};
use crate::error::{bail, Result};
use crate::game::{MixedStrategy, NormalFormGame, StrategyProfile};
use crate::linalg;

/// Largest joint action space handled by support enumeration.
pub const MAX_JOINT_ACTIONS: usize = 64;
const MAX_ITERATIONS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-10;
const STARTS: usize = 8;
const DEDUP_TOL: f64 = 1e-7;

struct System<'a> {
    game: &'a NormalFormGame,
    supports: &'a [Vec<usize>],
    /// First unknown of each player.
    offsets: Vec<usize>,
    unknowns: usize,
}

impl<'a> System<'a> {
    fn new(game: &'a NormalFormGame, supports: &'a [Vec<usize>]) -> Self {
        let mut offsets = Vec::with_capacity(supports.len());
        let mut unknowns = 0;
        for s in supports {
            offsets.push(unknowns);
            unknowns += s.len();
        }
        System { game, supports, offsets, unknowns }
    }

    fn strategies(&self, z: &[f64]) -> Vec<Vec<f64>> {
        self.supports
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut x = vec![0.0; self.game.num_actions(i)];
                for (t, &a) in s.iter().enumerate() {
                    x[a] = z[self.offsets[i] + t];
                }
                x
            })
            .collect()
    }

    /// Unknown index of action `a` of player `j`, if it is in the support.
    fn var(&self, j: usize, a: usize) -> Option<usize> {
        self.supports[j].iter().position(|&b| b == a).map(|t| self.offsets[j] + t)
    }

    /// Residual and row-major Jacobian at `z`.
    fn evaluate(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = self.game;
        let n = g.num_players();
        let m = self.unknowns;
        let x = self.strategies(z);
        // payoff of each support action and its gradient
        let mut pay: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; g.num_actions(i)]).collect();
        let mut grad: Vec<Vec<Vec<f64>>> = (0..n).map(|i| vec![vec![0.0; m]; g.num_actions(i)]).collect();
        let mut joint = vec![0; n];
        for index in 0..g.num_joint() {
            g.decode_into(index, &mut joint);
            if (0..n).any(|k| self.var(k, joint[k]).is_none()) {
                continue;
            }
            let u = g.utilities_at(index);
            for i in 0..n {
                let others: f64 = (0..n).filter(|&k| k != i).map(|k| x[k][joint[k]]).product();
                pay[i][joint[i]] += u[i] * others;
                for j in (0..n).filter(|&j| j != i) {
                    let rest: f64 = (0..n).filter(|&k| k != i && k != j).map(|k| x[k][joint[k]]).product();
                    if let Some(v) = self.var(j, joint[j]) {
                        grad[i][joint[i]][v] += u[i] * rest;
                    }
                }
            }
        }
        let mut f = Vec::with_capacity(m);
        let mut jac = Vec::with_capacity(m * m);
        for (i, s) in self.supports.iter().enumerate() {
            let off = self.offsets[i];
            f.push(z[off..off + s.len()].iter().sum::<f64>() - 1.0);
            jac.extend((0..m).map(|v| if v >= off && v < off + s.len() { 1.0 } else { 0.0 }));
            let a0 = s[0];
            // payoff differences are brought to the scale of the sum rows
            let scale = g.scale();
            for &a in &s[1..] {
                f.push((pay[i][a] - pay[i][a0]) / scale);
                jac.extend((0..m).map(|v| (grad[i][a][v] - grad[i][a0][v]) / scale));
            }
        }
        (f, jac)
    }

    /// Number of free logits: every support action except the first.
    fn logits(&self) -> usize {
        self.unknowns - self.supports.len()
    }

    /// Probabilities from logits, per player a softmax with the first
    /// support action pinned at logit 0.
    fn softmax(&self, theta: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.unknowns];
        let mut k = 0;
        for (i, s) in self.supports.iter().enumerate() {
            let off = self.offsets[i];
            let mut l = vec![0.0; s.len()];
            l[1..].copy_from_slice(&theta[k..k + s.len() - 1]);
            k += s.len() - 1;
            let top = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = l.iter().map(|v| libm::exp(v - top)).collect();
            let total: f64 = w.iter().sum();
            for t in 0..s.len() {
                z[off + t] = w[t] / total;
            }
        }
        z
    }

    /// Indifference residuals and their Jacobian in logit coordinates.
    fn evaluate_logits(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z = self.softmax(theta);
        let (f, jz) = self.evaluate(&z);
        let (m, q) = (self.unknowns, self.logits());
        // the first row of every player is the sum row, which softmax
        // satisfies by construction
        let mut sum_rows = Vec::new();
        let mut row = 0;
        for s in self.supports {
            sum_rows.push(row);
            row += s.len();
        }
        let mut out_f = Vec::with_capacity(q);
        let mut out_j = Vec::with_capacity(q * q);
        for r in (0..m).filter(|r| !sum_rows.contains(r)) {
            out_f.push(f[r]);
            let mut k = 0;
            for (i, s) in self.supports.iter().enumerate() {
                let off = self.offsets[i];
                for t in 1..s.len() {
                    // dz_u / dθ_t = z_u (δ_ut - z_t)
                    let d: f64 = (0..s.len())
                        .map(|u| {
                            let delta = if u == t { 1.0 } else { 0.0 };
                            jz[r * m + off + u] * z[off + u] * (delta - z[off + t])
                        })
                        .sum();
                    out_j.push(d);
                    k += 1;
                }
            }
            debug_assert_eq!(k, q);
        }
        (out_f, out_j)
    }

    fn start(&self, k: usize) -> Vec<f64> {
        // logits in {-3, 0, 3} following the base-3 digits of 7k
        let mut code = 7 * k;
        (0..self.logits())
            .map(|_| {
                let digit = code % 3;
                code /= 3;
                if k == 0 { 0.0 } else { 3.0 * (digit as f64 - 1.0) }
            })
            .collect()
    }

    /// Levenberg-Marquardt in logit coordinates. Returns probabilities.
    fn solve_from(&self, mut theta: Vec<f64>) -> Option<Vec<f64>> {
        let m = self.logits();
        let norm2 = |f: &[f64]| f.iter().map(|v| v * v).sum::<f64>();
        let (mut f, mut jac) = self.evaluate_logits(&theta);
        let mut lambda = 1e-3;
        for _ in 0..MAX_ITERATIONS {
            if f.iter().all(|v| v.abs() < RESIDUAL_TOL) {
                return Some(self.softmax(&theta));
            }
            // (JᵀJ + λ(diag + I)) δ = -JᵀF
            let mut a = vec![0.0; m * m];
            let mut b = vec![0.0; m];
            for r in 0..m {
                let row = &jac[r * m..(r + 1) * m];
                for p in 0..m {
                    b[p] -= row[p] * f[r];
                    for q in 0..m {
                        a[p * m + q] += row[p] * row[q];
                    }
                }
            }
            let current = norm2(&f);
            loop {
                let mut damped = a.clone();
                for p in 0..m {
                    damped[p * m + p] += lambda * (a[p * m + p] + 1.0);
                }
                let step = linalg::solve(damped, b.clone()).ok()?;
                let trial: Vec<f64> = theta.iter().zip(&step).map(|(x, d)| x + d).collect();
                let (tf, tj) = self.evaluate_logits(&trial);
                if norm2(&tf) < current {
                    theta = trial;
                    f = tf;
                    jac = tj;
                    lambda = (lambda / 3.0).max(1e-12);
                    break;
                }
                lambda *= 4.0;
                if lambda > 1e10 {
                    return None;
                }
            }
        }
        f.iter().all(|v| v.abs() < RESIDUAL_TOL).then(|| self.softmax(&theta))
    }

    /// Solutions found from all starting points.
    fn solve(&self) -> Vec<Vec<f64>> {
        (0..STARTS).filter_map(|k| self.solve_from(self.start(k))).collect()
    }
}

fn support_profiles(game: &NormalFormGame) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for i in 0..game.num_players() {
        let subsets = subsets_by_size(game.num_actions(i));
        out = out
            .into_iter()
            .flat_map(|prefix| {
                subsets.iter().map(move |s| {
                    let mut p = prefix.clone();
                    p.push(s.clone());
                    p
                })
            })
            .collect();
    }
    out.sort_by_key(|p| p.iter().map(Vec::len).sum::<usize>());
    out
}

/// Whether some support action is strictly dominated by another action of
/// the same player against every joint action of the other supports. No
/// equilibrium has such a support profile.
fn conditionally_dominated(game: &NormalFormGame, supports: &[Vec<usize>]) -> bool {
    let n = game.num_players();
    let mut joint = vec![0; n];
    (0..n).any(|i| {
        // joint actions of the others, enumerated over their supports
        let mut others: Vec<Vec<usize>> = vec![Vec::new()];
        for (k, s) in supports.iter().enumerate() {
            if k == i {
                continue;
            }
            others = others.into_iter().flat_map(|p| s.iter().map(move |&a| [p.as_slice(), &[a]].concat())).collect();
        }
        let payoff = |a: usize, rest: &[usize], joint: &mut Vec<usize>| {
            let mut r = rest.iter();
            for (k, slot) in joint.iter_mut().enumerate() {
                *slot = if k == i { a } else { *r.next().unwrap_or(&0) };
            }
            game.utility(joint, i)
        };
        supports[i].iter().any(|&a| {
            (0..game.num_actions(i))
                .filter(|&b| b != a)
                .any(|b| others.iter().all(|rest| payoff(b, rest, &mut joint) > payoff(a, rest, &mut joint)))
        })
    })
}

/// An optimal Nash equilibrium of a game with any number of players, by
/// enumerating support profiles.
pub fn find_ne_n_player(game: &NormalFormGame, criterion: Criterion) -> Result<EquilibriumResult> {
    if game.num_joint() > MAX_JOINT_ACTIONS {
        bail!(
            Unsupported,
            "Nash equilibria of {}-player games are limited to {} joint actions, got {}",
            game.num_players(),
            MAX_JOINT_ACTIONS,
            game.num_joint()
        );
    }
    let tol = 1e-6 * game.scale();
    let mut found: Vec<(StrategyProfile, Vec<f64>)> = Vec::new();
    let mut best: Option<usize> = None;
    for supports in support_profiles(game) {
        let candidates: Vec<Vec<Vec<f64>>> = if supports.iter().all(|s| s.len() == 1) {
            vec![supports.iter().enumerate().map(|(i, s)| MixedStrategy::pure(game.num_actions(i), s[0]).probs().to_vec()).collect()]
        } else if conditionally_dominated(game, &supports) {
            Vec::new()
        } else {
            let system = System::new(game, &supports);
            system.solve().iter().map(|z| system.strategies(z)).collect()
        };
        for strategies in candidates {
            let profile = StrategyProfile::new(
                strategies.iter().map(|x| MixedStrategy::new_unchecked(clean_distribution(x))).collect(),
            );
            if nash_gain(game, &profile) > tol || found.iter().any(|(p, _)| p.distance(&profile) <= DEDUP_TOL) {
                continue;
            }
            let values = game.expected_utilities(&profile);
            if best.map_or(true, |b| better(criterion, &values, &found[b].1)) {
                best = Some(found.len());
            }
            found.push((profile, values));
        }
    }
    let Some(b) = best else {
        bail!(Solver, "no Nash equilibrium found among the support profiles");
    };
    let (profile, values) = found.swap_remove(b);
    let epsilon = nash_gain(game, &profile).max(0.0);
    Ok(EquilibriumResult { values, witness: Witness::Profile(profile), epsilon })
}

#[cfg(test)]
mod tests {
    use super::super::tests_support::intersection;
    use super::*;

    #[test]
    fn mixed_intersection_equilibrium() {
        // car 1 yields, cars 2 and 3 mix; closed form of the indifference
        // equations gives 19/22 and 199/202 for yielding
        let g = intersection(-1000.0);
        let supports = vec![vec![1], vec![0, 1], vec![0, 1]];
        let system = System::new(&g, &supports);
        let solutions = system.solve();
        assert!(!solutions.is_empty());
        let x = system.strategies(&solutions[0]);
        assert!((x[1][1] - 19.0 / 22.0).abs() < 1e-8, "{:?}", x);
        assert!((x[2][1] - 199.0 / 202.0).abs() < 1e-8);
    }

    #[test]
    fn fully_mixed_support_has_no_interior_solution() {
        let g = intersection(-1000.0);
        let supports = vec![vec![0, 1], vec![0, 1], vec![0, 1]];
        assert!(System::new(&g, &supports).solve().is_empty());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let g = intersection(-1000.0);
        let supports = vec![vec![0, 1], vec![0, 1], vec![0, 1]];
        let system = System::new(&g, &supports);
        let z = vec![0.3, 0.7, 0.6, 0.4, 0.2, 0.8];
        let (f, jac) = system.evaluate(&z);
        let h = 1e-6;
        for v in 0..z.len() {
            let mut zp = z.clone();
            zp[v] += h;
            let (fp, _) = system.evaluate(&zp);
            for r in 0..f.len() {
                let fd = (fp[r] - f[r]) / h;
                assert!((fd - jac[r * z.len() + v]).abs() < 1e-3, "row {} var {}", r, v);
            }
        }
    }

    #[test]
    fn too_many_joint_actions_is_unsupported() {
        let g = NormalFormGame::from_sizes(&[5, 5, 3], |_| vec![0.0; 3]).unwrap();
        assert!(matches!(find_ne_n_player(&g, Criterion::SocialWelfare), Err(crate::Error::Unsupported(_))));
    }

    #[test]
    fn dominated_supports_are_skipped() {
        let g = intersection(-1000.0);
        // against (yld2, pro3) car 1 strictly prefers pro1
        assert!(conditionally_dominated(&g, &[vec![0, 1], vec![1], vec![0]]));
        assert!(!conditionally_dominated(&g, &[vec![1], vec![0, 1], vec![0, 1]]));
    }

    #[test]
    fn support_profiles_start_with_pure_ones() {
        let g = intersection(-1000.0);
        let p = support_profiles(&g);
        assert_eq!(p.len(), 27);
        assert!(p[..8].iter().all(|s| s.iter().all(|x| x.len() == 1)));
    }
}
