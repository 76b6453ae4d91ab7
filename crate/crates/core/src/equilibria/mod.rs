//! Optimal Nash and correlated equilibria of normal form games.

mod correlated;
mod nash2;
mod nashn;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::game::{JointDistribution, MixedStrategy, NormalFormGame, StrategyProfile};

pub use correlated::find_ce;
pub use nash2::find_ne_two_player;
pub use nashn::find_ne_n_player;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EquilibriumKind {
    Nash,
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    /// Maximal sum of utilities.
    SocialWelfare,
    /// Minimal spread `max_i u_i - min_i u_i`, then maximal sum.
    SocialFairness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptDirection {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquilibriumQuery {
    pub kind: EquilibriumKind,
    pub criterion: Criterion,
    pub direction: OptDirection,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Profile(StrategyProfile),
    Joint(JointDistribution),
}

impl Witness {
    /// The witness as a distribution over joint actions.
    pub fn to_joint(&self, game: &NormalFormGame) -> JointDistribution {
        match self {
            Witness::Profile(p) => JointDistribution::from_profile(game, p),
            Witness::Joint(j) => j.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    /// Expected utility of every player.
    pub values: Vec<f64>,
    pub witness: Witness,
    /// Largest gain any player can get by deviating from the witness.
    pub epsilon: f64,
}

pub fn welfare(values: &[f64]) -> f64 {
    values.iter().sum()
}

pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

const SELECT_TOL: f64 = 1e-9;

/// Whether `candidate` is strictly better than `incumbent` under `criterion`.
pub(crate) fn better(criterion: Criterion, candidate: &[f64], incumbent: &[f64]) -> bool {
    let scale = 1.0 + candidate.iter().chain(incumbent).fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = SELECT_TOL * scale;
    match criterion {
        Criterion::SocialWelfare => welfare(candidate) > welfare(incumbent) + tol,
        Criterion::SocialFairness => {
            let (a, b) = (spread(candidate), spread(incumbent));
            a < b - tol || ((a - b).abs() <= tol && welfare(candidate) > welfare(incumbent) + tol)
        }
    }
}

/// Best pure response of `player` against the strategies of the others
/// (given in player order, without `player`). Returns the value and the
/// first maximizing action.
pub fn best_response_value(game: &NormalFormGame, player: usize, others: &[&MixedStrategy]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for a in 0..game.num_actions(player) {
        let u = game.deviation_utility(player, a, others);
        if u > best.0 {
            best = (u, a);
        }
    }
    best
}

/// Largest gain any player gets from a unilateral deviation.
pub fn nash_gain(game: &NormalFormGame, profile: &StrategyProfile) -> f64 {
    let values = game.expected_utilities(profile);
    (0..game.num_players())
        .map(|i| best_response_value(game, i, &profile.others(i)).0 - values[i])
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn check_epsilon_ne(game: &NormalFormGame, profile: &StrategyProfile, eps: f64) -> bool {
    profile.matches(game) && nash_gain(game, profile) <= eps
}

/// Largest regret of any player for following a recommendation of `joint`.
pub fn correlated_gain(game: &NormalFormGame, joint: &JointDistribution) -> f64 {
    let n = game.num_players();
    let mut worst: f64 = 0.0;
    let mut tuple = vec![0; n];
    for i in 0..n {
        let k = game.num_actions(i);
        // gain[a][b]: expected gain of playing b when told a
        let mut gain = vec![0.0; k * k];
        for (index, &p) in joint.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            game.decode_into(index, &mut tuple);
            let a = tuple[i];
            let base = game.utilities_at(index)[i];
            for b in 0..k {
                tuple[i] = b;
                gain[a * k + b] += p * (game.utility(&tuple, i) - base);
            }
            tuple[i] = a;
        }
        worst = gain.iter().copied().fold(worst, f64::max);
    }
    worst
}

pub fn check_ce(game: &NormalFormGame, joint: &JointDistribution, eps: f64) -> bool {
    let sizes: Vec<usize> = (0..game.num_players()).map(|p| game.num_actions(p)).collect();
    joint.sizes() == sizes.as_slice() && correlated_gain(game, joint) <= eps
}

/// The social-cost dual `(N, A, -u)`.
pub fn negate_for_social_cost(game: &NormalFormGame) -> NormalFormGame {
    game.negated()
}

/// An optimal Nash equilibrium under `criterion`.
pub fn find_ne(game: &NormalFormGame, criterion: Criterion) -> Result<EquilibriumResult> {
    match game.num_players() {
        1 => Ok(single_player(game)),
        2 => find_ne_two_player(game, criterion),
        _ => find_ne_n_player(game, criterion),
    }
}

fn single_player(game: &NormalFormGame) -> EquilibriumResult {
    let (value, a) = best_response_value(game, 0, &[]);
    let profile = StrategyProfile::new(vec![MixedStrategy::pure(game.num_actions(0), a)]);
    EquilibriumResult { values: vec![value], witness: Witness::Profile(profile), epsilon: 0.0 }
}

/// Solves a query, realizing the min direction through the social-cost dual.
pub fn solve_query(game: &NormalFormGame, query: EquilibriumQuery) -> Result<EquilibriumResult> {
    let negated;
    let g = match query.direction {
        OptDirection::Max => game,
        OptDirection::Min => {
            negated = game.negated();
            &negated
        }
    };
    let mut result = match query.kind {
        EquilibriumKind::Nash => find_ne(g, query.criterion)?,
        EquilibriumKind::Correlated => find_ce(g, query.criterion)?,
    };
    if query.direction == OptDirection::Min {
        result.values.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(result)
}

/// Nonempty subsets of `0..k` ordered by size, then lexicographically.
pub(crate) fn subsets_by_size(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 1..=k {
        let mut comb: Vec<usize> = (0..size).collect();
        loop {
            out.push(comb.clone());
            let mut i = size;
            let mut advanced = false;
            while i > 0 {
                i -= 1;
                if comb[i] < k - size + i {
                    comb[i] += 1;
                    for j in i + 1..size {
                        comb[j] = comb[j - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }
    out
}

/// Clips tiny negative probabilities and renormalizes.
pub(crate) fn clean_distribution(p: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = p.iter().map(|&x| if x < 1e-13 { 0.0 } else { x }).collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;

    pub use crate::game::fixtures::{intersection_nfg as intersection, pennies_nfg as pennies};

    pub fn profile(probs: &[&[f64]]) -> StrategyProfile {
        StrategyProfile::new(probs.iter().map(|p| MixedStrategy::new(p.to_vec()).unwrap()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::tests_support::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn subsets_are_size_then_lex_ordered() {
        assert_eq!(subsets_by_size(3), vec![vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]]);
    }

    #[test]
    fn best_response_in_pennies_and_intersection() {
        let g = pennies();
        let heads = MixedStrategy::pure(2, 0);
        assert_eq!(best_response_value(&g, 0, &[&heads]), (1.0, 0));
        let g = intersection(-1000.0);
        let (y2, p3) = (MixedStrategy::pure(2, 1), MixedStrategy::pure(2, 0));
        assert_eq!(best_response_value(&g, 0, &[&y2, &p3]), (5.0, 0));
        let constant = NormalFormGame::from_sizes(&[2, 3], |_| vec![4.0, 4.0]).unwrap();
        assert_eq!(best_response_value(&constant, 1, &[&MixedStrategy::uniform(2)]).0, 4.0);
    }

    #[test]
    fn nash_checks() {
        let g = pennies();
        assert!(check_epsilon_ne(&g, &profile(&[&[0.5, 0.5], &[0.5, 0.5]]), 1e-9));
        let heads = profile(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(!check_epsilon_ne(&g, &heads, 0.5));
        assert!((nash_gain(&g, &heads) - 2.0).abs() < 1e-12);
        let sf = profile(&[&[0.0, 1.0], &[1.0 - 0.863636363636, 0.863636363636], &[1.0 - 0.985148514851, 0.985148514851]]);
        assert!(check_epsilon_ne(&intersection(-1000.0), &sf, 1e-4));
    }

    #[test]
    fn correlated_checks() {
        // pure coordination with a shared fair coin
        let coord = NormalFormGame::from_sizes(&[2, 2], |j| {
            let u = if j[0] == j[1] { 1.0 } else { 0.0 };
            vec![u, u]
        })
        .unwrap();
        let coin = JointDistribution::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(check_ce(&coord, &coin, 0.0));

        // prisoner's dilemma: cooperation (action 0) is strictly dominated
        let pd = NormalFormGame::from_sizes(&[2, 2], |j| match (j[0], j[1]) {
            (0, 0) => vec![3.0, 3.0],
            (0, 1) => vec![0.0, 5.0],
            (1, 0) => vec![5.0, 0.0],
            _ => vec![1.0, 1.0],
        })
        .unwrap();
        let some_coop = JointDistribution::new(vec![2, 2], vec![0.1, 0.0, 0.0, 0.9]).unwrap();
        assert!(!check_ce(&pd, &some_coop, 1e-9));

        let g = intersection(-1000.0);
        let mut probs = vec![0.0; 8];
        probs[2] = 0.5;
        probs[5] = 0.5;
        assert!(check_ce(&g, &JointDistribution::new(vec![2, 2, 2], probs).unwrap(), 1e-9));
    }

    #[test]
    fn social_cost_negation() {
        let g = NormalFormGame::from_sizes(&[1, 1], |_| vec![3.0, 3.0]).unwrap();
        assert_eq!(negate_for_social_cost(&g).utility_table(), &[-3.0, -3.0]);
        let h = intersection(-1000.0);
        assert_eq!(negate_for_social_cost(&negate_for_social_cost(&h)), h);
    }

    #[test]
    fn social_cost_query_is_welfare_query_on_negation() {
        let g = intersection(-1000.0);
        for kind in [EquilibriumKind::Nash, EquilibriumKind::Correlated] {
            let q = EquilibriumQuery { kind, criterion: Criterion::SocialWelfare, direction: OptDirection::Min };
            let sc = solve_query(&g, q).unwrap();
            let direct = match kind {
                EquilibriumKind::Nash => find_ne(&g.negated(), Criterion::SocialWelfare).unwrap(),
                EquilibriumKind::Correlated => find_ce(&g.negated(), Criterion::SocialWelfare).unwrap(),
            };
            for (a, b) in sc.values.iter().zip(&direct.values) {
                assert!((a + b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pennies_equilibria() {
        let g = pennies();
        let ne = find_ne(&g, Criterion::SocialWelfare).unwrap();
        assert!(ne.values.iter().all(|v| v.abs() < 1e-9));
        if let Witness::Profile(p) = &ne.witness {
            assert!((p.strategy(0).prob(0) - 0.5).abs() < 1e-9);
            assert!((p.strategy(1).prob(0) - 0.5).abs() < 1e-9);
        } else {
            panic!("expected a profile");
        }
    }

    #[test]
    fn intersection_welfare_equilibria() {
        let g = intersection(-1000.0);
        for r in [find_ne(&g, Criterion::SocialWelfare).unwrap(), find_ce(&g, Criterion::SocialWelfare).unwrap()] {
            for (v, e) in r.values.iter().zip([5.0, -5.0, 5.0]) {
                assert!((v - e).abs() <= 1e-6, "{:?}", r.values);
            }
        }
    }

    #[test]
    fn intersection_fair_equilibria() {
        let g = intersection(-1000.0);
        let ne = find_ne(&g, Criterion::SocialFairness).unwrap();
        for (v, e) in ne.values.iter().zip([-9.254050, -9.925742, -9.318182]) {
            assert!((v - e).abs() <= 1e-4, "{:?}", ne.values);
        }
        let ce = find_ce(&g, Criterion::SocialFairness).unwrap();
        assert!(spread(&ce.values) <= 1e-6);
        assert!(ce.values.iter().all(|v| v.abs() <= 1e-6));
    }

    #[test]
    fn modified_intersection_nash() {
        let g = intersection(-4.5);
        let sw = find_ne(&g, Criterion::SocialWelfare).unwrap();
        for (v, e) in sw.values.iter().zip([-5.0, 5.0, -5.0]) {
            assert!((v - e).abs() <= 1e-6, "{:?}", sw.values);
        }
        let sf = find_ne(&g, Criterion::SocialFairness).unwrap();
        for (v, e) in sf.values.iter().zip([-9.254050, -9.925742, -9.318182]) {
            assert!((v - e).abs() <= 1e-4, "{:?}", sf.values);
        }
    }

    #[test]
    fn modified_intersection_correlated_oracle_values() {
        // independent LP oracle: welfare 4.99493 and fair values -0.001146
        let g = intersection(-4.5);
        let sw = find_ce(&g, Criterion::SocialWelfare).unwrap();
        assert!((welfare(&sw.values) - 4.994927).abs() < 1e-5, "{:?}", sw.values);
        let sf = find_ce(&g, Criterion::SocialFairness).unwrap();
        assert!(sf.values.iter().all(|v| (v + 0.001146).abs() < 1e-5), "{:?}", sf.values);
    }

    #[test]
    fn dominant_strategies_are_found() {
        let pd = NormalFormGame::from_sizes(&[2, 2, 2], |j| {
            let defect = j.iter().filter(|&&a| a == 1).count() as f64;
            j.iter().map(|&a| 2.0 * defect + a as f64 * 1.5 - 6.0).collect()
        })
        .unwrap();
        let ne = find_ne(&pd, Criterion::SocialWelfare).unwrap();
        let ce = find_ce(&pd, Criterion::SocialWelfare).unwrap();
        let joint = ne.witness.to_joint(&pd);
        assert!((joint.probs()[7] - 1.0).abs() < 1e-9);
        assert!((ce.witness.to_joint(&pd).probs()[7] - 1.0).abs() < 1e-9);
    }

    fn random_game() -> impl Strategy<Value = NormalFormGame> {
        (2usize..=3, proptest::collection::vec(2usize..=3, 3)).prop_flat_map(|(n, sizes)| {
            let sizes: Vec<usize> = sizes[..n].to_vec();
            let total: usize = sizes.iter().product::<usize>() * n;
            proptest::collection::vec(-10.0f64..10.0, total).prop_map(move |table| {
                let names = sizes
                    .iter()
                    .map(|&k| (0..k).map(|a| alloc::format!("a{}", a)).collect())
                    .collect();
                NormalFormGame::from_table(names, table).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]
        #[test]
        fn results_certify_and_ce_dominates(g in random_game()) {
            let ne = find_ne(&g, Criterion::SocialWelfare).unwrap();
            let ce = find_ce(&g, Criterion::SocialWelfare).unwrap();
            match &ne.witness {
                Witness::Profile(p) => prop_assert!(check_epsilon_ne(&g, p, 1e-6)),
                Witness::Joint(_) => prop_assert!(false),
            }
            match &ce.witness {
                Witness::Joint(j) => prop_assert!(check_ce(&g, j, 1e-6)),
                Witness::Profile(_) => prop_assert!(false),
            }
            prop_assert!(welfare(&ce.values) >= welfare(&ne.values) - 1e-6);
        }

        #[test]
        fn fair_ce_spread_below_fair_ne_for_two_players(g in random_game()) {
            prop_assume!(g.num_players() == 2);
            let ne = find_ne(&g, Criterion::SocialFairness).unwrap();
            let ce = find_ce(&g, Criterion::SocialFairness).unwrap();
            prop_assert!(spread(&ce.values) <= spread(&ne.values) + 1e-6);
        }

        #[test]
        fn utility_shift_keeps_witness(g in random_game(), c in -5.0f64..5.0) {
            let ne = find_ne(&g, Criterion::SocialWelfare).unwrap();
            let shifted = g.shifted(0, c);
            if let Witness::Profile(p) = &ne.witness {
                prop_assert!(check_epsilon_ne(&shifted, p, 1e-6));
                let v = shifted.expected_utilities(p);
                prop_assert!((v[0] - ne.values[0] - c).abs() < 1e-9);
            }
        }
    }
}
