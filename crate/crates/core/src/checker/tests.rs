use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::equilibria::{Criterion, OptDirection};
use crate::expr::Value;
use crate::game::{fixtures, CsgBuilder, IDLE};
use crate::matrix::{solve_matrix_game, MatrixGame};
use crate::model::{elaborate, parse_model};
use crate::props::parse_property;

fn model(text: &str, bindings: &[(&str, Value)]) -> Csg {
    let b: Vec<(String, Value)> = bindings.iter().map(|(n, v)| (n.to_string(), *v)).collect();
    elaborate(&parse_model(text).unwrap(), &b).unwrap()
}

fn aloha2() -> Csg {
    model(include_str!("../../../../models/aloha2.csg"), &[])
}

fn pennies_model() -> Csg {
    model(include_str!("../../../../models/matching_pennies.csg"), &[])
}

fn intersection_model(u2ppp: f64) -> Csg {
    model(include_str!("../../../../models/intersection.csg"), &[("u2ppp", Value::Real(u2ppp))])
}

fn run(game: &Csg, text: &str) -> CheckResult {
    check(game, &parse_property(text).unwrap(), &CheckOptions::default()).unwrap_or_else(|e| panic!("{}: {}", text, e))
}

fn value(game: &Csg, text: &str) -> f64 {
    run(game, text).value.unwrap()
}

#[test]
fn next_step_value_is_matrix_game_value() {
    let oracle = solve_matrix_game(&MatrixGame::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()).unwrap().value;
    for g in [fixtures::pennies(), pennies_model()] {
        let v = value(&g, r#"<<p1>> Pmax=? [ X "win1" ]"#);
        assert!((v - oracle).abs() < 1e-9, "{}", v);
        assert!((v - 0.5).abs() < 1e-9);
    }
}

#[test]
fn target_in_initial_state() {
    let g = aloha2();
    assert_eq!(value(&g, r#"<<usr1>> Pmax=? [ F s1=0 ]"#), 1.0);
    assert_eq!(value(&g, r#"<<usr1>> R{"time"}min=? [ F true ]"#), 0.0);
}

#[test]
fn aloha_prob0_is_empty() {
    let g = aloha2();
    let sent1 = g.label_states(g.label_index("sent1").unwrap()).to_vec();
    assert_eq!(prob0_max(&g, &[0], &sent1).unwrap(), vec![false; g.num_states()]);
}

#[test]
fn aloha_zero_sum_values() {
    let g = aloha2();
    let p = value(&g, r#"<<usr1>> Pmax=? [ F "sent1" ]"#);
    assert!((p - 1.0).abs() < 1e-6, "{}", p);
    let t = value(&g, r#"<<usr1>> R{"time"}min=? [ F "sent1" ]"#);
    assert!(t.is_finite() && t >= 1.0, "{}", t);
    let d = value(&g, r#"<<usr1>> Pmax=? [ F<=D "sent1" ]"#);
    assert!((0.0..=1.0).contains(&d));
    let mut last = 0.0;
    for k in 0..8 {
        let v = value(&g, &alloc::format!(r#"<<usr1>> Pmax=? [ F<={} "sent1" ]"#, k));
        assert!(v >= last - 1e-12, "deadline values must not drop");
        last = v;
    }
}

#[test]
fn determinacy_on_fixtures() {
    let cases = [
        (pennies_model(), r#"<<p1>> Pmax=? [ F "win1" ]"#, r#"<<p2>> Pmin=? [ F "win1" ]"#),
        (aloha2(), r#"<<usr1>> Pmax=? [ F<=3 "sent1" ]"#, r#"<<usr2>> Pmin=? [ F<=3 "sent1" ]"#),
        (aloha2(), r#"<<usr2>> Pmax=? [ F "sent" ]"#, r#"<<usr1>> Pmin=? [ F "sent" ]"#),
        (aloha2(), r#"<<usr1>> R{"time"}min=? [ F "sent1" ]"#, r#"<<usr2>> R{"time"}max=? [ F "sent1" ]"#),
    ];
    for (g, a, b) in cases {
        let (x, y) = (value(&g, a), value(&g, b));
        assert!((x - y).abs() < 1e-5, "{} = {} but {} = {}", a, x, b, y);
    }
}

#[test]
fn intersection_optimal_equilibria() {
    let g = intersection_model(-1000.0);
    let sum = |text: &str| run(&g, text);
    let sw = sum(r#"<<c1:c2:c3>>(NE,SW)max=? (R{"u1"}[ C<=1 ] + R{"u2"}[ C<=1 ] + R{"u3"}[ C<=1 ])"#);
    assert!((sw.value.unwrap() - 5.0).abs() < 1e-6);
    for (v, e) in sw.coalition_values.iter().zip([5.0, -5.0, 5.0]) {
        assert!((v - e).abs() < 1e-6, "{:?}", sw.coalition_values);
    }
    let sf = sum(r#"<<c1:c2:c3>>(CE,SF)max=? (R{"u1"}[ C<=1 ] + R{"u2"}[ C<=1 ] + R{"u3"}[ C<=1 ])"#);
    assert!(sf.value.unwrap().abs() < 1e-6);
    assert!(sf.coalition_values.iter().all(|v| v.abs() < 1e-6), "{:?}", sf.coalition_values);
    assert!(matches!(sf.strategy.as_ref().unwrap().decision(0, 1), Some(crate::strategy::Decision::Joint(_))));
}

#[test]
fn horizon_zero_is_current_state() {
    let g = pennies_model();
    for s in 0..g.num_states() {
        let gs = g.with_initial(s).unwrap();
        let r = run(&gs, r#"<<p1:p2>>(NE,SW)max=? (P[ F<=0 "win1" ] + P[ F<=0 "win2" ])"#);
        let labels = gs.labels_of(s);
        assert_eq!(r.coalition_values, vec![indicator(labels.contains(&"win1")), indicator(labels.contains(&"win2"))]);
    }
}

#[test]
fn aloha_equilibria_are_finite_and_fair() {
    let g = aloha2();
    let sw = run(&g, r#"<<usr1:usr2>>(NE,SW)min=? (R{"time"}[ F "sent1" ] + R{"time"}[ F "sent2" ])"#);
    assert!(sw.coalition_values.iter().all(|v| v.is_finite() && *v > 0.0), "{:?}", sw.coalition_values);
    let sf = run(&g, r#"<<usr1:usr2>>(CE,SF)min=? (R{"time"}[ F "sent1" ] + R{"time"}[ F "sent2" ])"#);
    let (v1, v2) = (sf.coalition_values[0], sf.coalition_values[1]);
    assert!((v1 - v2).abs() <= 1e-4, "{} vs {}", v1, v2);
    // minimizing: the welfare-optimal sum is the smaller one
    let (a, b) = (sw.value.unwrap(), sf.value.unwrap());
    assert!(a <= b + 1e-6, "SW {} SF {}", a, b);
    assert!((b - a) / a.abs() <= 0.05, "SW {} SF {}", a, b);
    assert!(sw.residual < 1e-6);
}

/// Two players; player 2 can never reach its target.
fn unreachable_second_target() -> Csg {
    let mut b = CsgBuilder::new();
    b.add_player("a", &["go", "stay"]);
    b.add_player("b", &["x", "y"]);
    b.add_states(3);
    b.transition(0, vec![1, 1], vec![(1, 0.3), (0, 0.7)]);
    b.transition(0, vec![1, 2], vec![(1, 0.6), (0, 0.4)]);
    b.transition(0, vec![2, 1], vec![(0, 1.0)]);
    b.transition(0, vec![2, 2], vec![(1, 0.1), (0, 0.9)]);
    b.transition(1, vec![IDLE, IDLE], vec![(1, 1.0)]);
    b.transition(2, vec![IDLE, IDLE], vec![(2, 1.0)]);
    b.label("t1", &[1]).label("t2", &[2]);
    b.reward_structure("r");
    b.build().unwrap()
}

#[test]
fn settled_coalition_cooperates() {
    let g = unreachable_second_target();
    let r = run(&g, r#"<<a:b>>(NE,SW)max=? (P[ F "t1" ] + P[ F "t2" ])"#);
    assert_eq!(r.coalition_values[1], 0.0);
    let mdp = value(&g, r#"<<a,b>> Pmax=? [ F "t1" ]"#);
    assert!((r.coalition_values[0] - mdp).abs() < 1e-9);
    assert!((mdp - 1.0).abs() < 1e-5);
}

#[test]
fn state_formula_set_algebra() {
    let g = pennies_model();
    let opts = CheckOptions::default();
    let sat = |t: &str| evaluate_state_formula(&g, &parse_property(t).unwrap(), &opts).unwrap();
    assert_eq!(sat("true"), vec![true; g.num_states()]);
    let win1 = sat(r#""win1""#);
    let game_op = sat(r#"<<p1>> P>=0.5 [ X "win1" ]"#);
    let combined = sat(r#"<<p1>> P>=0.5 [ X "win1" ] & !"win1""#);
    let expected: Vec<bool> = game_op.iter().zip(&win1).map(|(a, b)| *a && !*b).collect();
    assert_eq!(combined, expected);
    assert!(combined[g.initial()]);
    assert!(evaluate_state_formula(&g, &parse_property(r#"<<p1>> Pmax=? [ X "win1" ]"#).unwrap(), &opts).is_err());
}

#[test]
fn bounded_until_approaches_unbounded() {
    let g = aloha2();
    for (bounded, unbounded) in [
        (r#"<<usr1>> Pmax=? [ F<=64 "sent" ]"#, r#"<<usr1>> Pmax=? [ F "sent" ]"#),
        (r#"<<usr2>> Pmin=? [ F<=64 "sent1" ]"#, r#"<<usr2>> Pmin=? [ F "sent1" ]"#),
    ] {
        let (a, b) = (value(&g, bounded), value(&g, unbounded));
        assert!((a - b).abs() < 1e-3, "{} vs {}", a, b);
    }
}

#[test]
fn bounded_properties_report_truth() {
    let g = pennies_model();
    let r = run(&g, r#"<<p1>> P>=0.5 [ X "win1" ]"#);
    assert_eq!(r.satisfied, Some(true));
    let r = run(&g, r#"<<p1>> P>0.5 [ X "win1" ]"#);
    assert_eq!(r.satisfied, Some(false));
    let r = run(&g, r#""win1" | !"win1""#);
    assert_eq!((r.satisfied, r.value), (Some(true), None));
}

#[test]
fn typecheck_failures_are_input_errors() {
    let g = aloha2();
    let e = check(&g, &parse_property(r#"<<usr1>> Pmax=? [ F "sent9" ]"#).unwrap(), &CheckOptions::default());
    assert!(matches!(e, Err(Error::Input(_))));
}

#[test]
fn nonconvergence_is_reported() {
    let g = aloha2();
    let opts = CheckOptions { epsilon: 1e-12, max_iters: 2 };
    let e = check(&g, &parse_property(r#"<<usr1>> Pmax=? [ F "sent" ]"#).unwrap(), &opts);
    assert!(matches!(e, Err(Error::NonConvergence { iterations: 2, .. })), "{:?}", e);
}

#[test]
fn equilibria_pass_local_checks() {
    // Re-derive each state's local game from the stored values and check
    // the stored witness against it.
    let g = intersection_model(-1000.0);
    for kind in ["NE", "CE"] {
        let text = alloc::format!(
            r#"<<c1:c2:c3>>({},SW)max=? (R{{"u1"}}[ C<=1 ] + R{{"u2"}}[ C<=1 ] + R{{"u3"}}[ C<=1 ])"#,
            kind
        );
        let r = run(&g, &text);
        let strat = r.strategy.unwrap();
        let d = strat.decision(0, 1).unwrap();
        let cg = strat.coalition_game(&g).unwrap();
        let nfg = crate::game::local_nfg_with(&cg.game, 0, 3, |_, out| out.fill(0.0), |t, out| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = g.rewards()[i].action_reward(0, t);
            }
        })
        .unwrap();
        match d {
            crate::strategy::Decision::Profile(rows) => {
                let p = crate::game::StrategyProfile::new(
                    rows.iter().map(|r| crate::game::MixedStrategy::new(r.clone()).unwrap()).collect(),
                );
                assert!(crate::equilibria::check_epsilon_ne(&nfg, &p, 1e-6));
            }
            crate::strategy::Decision::Joint(p) => {
                let j = crate::game::JointDistribution::new(vec![2, 2, 2], p.clone()).unwrap();
                assert!(crate::equilibria::check_ce(&nfg, &j, 1e-6));
            }
        }
    }
}

/// Independent value iteration for a game whose second player never has a
/// choice: max over joint actions of the expected successor value.
fn mdp_oracle(g: &Csg, target: &[bool]) -> Vec<f64> {
    let n = g.num_states();
    let mut v: Vec<f64> = target.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    for _ in 0..100_000 {
        let mut delta: f64 = 0.0;
        let mut next = v.clone();
        for s in 0..n {
            if target[s] {
                continue;
            }
            let best = g
                .transitions(s)
                .iter()
                .map(|t| t.successors.iter().map(|&(x, p)| p * v[x]).sum::<f64>())
                .fold(0.0, f64::max);
            delta = delta.max((best - v[s]).abs());
            next[s] = best;
        }
        v = next;
        if delta < 1e-12 {
            break;
        }
    }
    v
}

fn mdp_shaped(n: usize, actions: usize, succ: &[(usize, usize, u8)]) -> Csg {
    let mut b = CsgBuilder::new();
    let names: Vec<String> = (0..actions).map(|a| alloc::format!("a{}", a)).collect();
    b.add_player("p", &names);
    b.add_player("q", &["only"]);
    b.add_states(n);
    for s in 0..n {
        for a in 0..actions {
            let mut dist: Vec<(usize, f64)> = Vec::new();
            let picks: Vec<&(usize, usize, u8)> = succ.iter().filter(|x| (x.0 + x.1) % (n * actions) == s * actions + a).collect();
            let total: f64 = picks.iter().map(|x| f64::from(x.2) + 1.0).sum::<f64>() + 1.0;
            dist.push(((s + a) % n, 1.0 / total));
            for x in picks {
                dist.push((x.1 % n, (f64::from(x.2) + 1.0) / total));
            }
            b.transition(s, vec![a + 1, 1], dist);
        }
    }
    b.label("goal", &[n - 1]);
    b.build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn one_sided_games_match_mdp_oracle(
        n in 2usize..12,
        actions in 1usize..4,
        succ in proptest::collection::vec((0usize..100, 0usize..100, 0u8..5), 0..40),
    ) {
        let g = mdp_shaped(n, actions, &succ);
        let target = g.label_states(0).to_vec();
        let oracle = mdp_oracle(&g, &target);
        // plain value iteration stops on small updates, not small errors
        let opts = CheckOptions { epsilon: 1e-12, ..CheckOptions::default() };
        let r = check(&g, &parse_property(r#"<<p>> Pmax=? [ F "goal" ]"#).unwrap(), &opts).unwrap();
        for s in 0..n {
            prop_assert!((r.state_values[s][0] - oracle[s]).abs() < 1e-6 + 1e-5 * oracle[s],
                "state {}: {} vs {}", s, r.state_values[s][0], oracle[s]);
        }
    }
}

#[test]
fn equilibrium_criteria_order_on_pennies() {
    let g = pennies_model();
    let sw = run(&g, r#"<<p1:p2>>(NE,SW)max=? (P[ X "win1" ] + P[ X "win2" ])"#);
    assert!((sw.value.unwrap() - 1.0).abs() < 1e-9);
    let sf = run(&g, r#"<<p1:p2>>(CE,SF)max=? (P[ X "win1" ] + P[ X "win2" ])"#);
    assert!((sf.coalition_values[0] - 0.5).abs() < 1e-6 && (sf.coalition_values[1] - 0.5).abs() < 1e-6);
    let _ = (Criterion::SocialWelfare, OptDirection::Max);
}
