//! Static checks of a property against an elaborated game.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::{Bound, Coalition, Objective, PathFormula, RewardFormula, StateFormula};
use crate::error::Result;
use crate::expr::{Binding, Expr, Value};
use crate::game::Csg;

/// Deepest nesting of game operators that the checker evaluates.
pub const MAX_OPERATOR_DEPTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub message: String,
}

impl Diagnostic {
    fn new(message: String) -> Self {
        Diagnostic { message }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Maps coalition members (player names or 1-based player numbers) to player
/// indices, in the order written.
pub fn resolve_coalition(game: &Csg, coalition: &Coalition) -> core::result::Result<Vec<usize>, String> {
    let mut out = Vec::with_capacity(coalition.len());
    for m in coalition {
        let idx = match game.player_index(m) {
            Some(i) => i,
            None => match m.parse::<usize>() {
                Ok(k) if k >= 1 && k <= game.num_players() => k - 1,
                _ => return Err(format!("unknown player '{}'", m)),
            },
        };
        if out.contains(&idx) {
            return Err(format!("player '{}' listed twice in a coalition", m));
        }
        out.push(idx);
    }
    Ok(out)
}

/// Number of nested game operators along the deepest branch.
pub fn operator_depth(f: &StateFormula) -> usize {
    match f {
        StateFormula::True | StateFormula::False | StateFormula::Label(_) | StateFormula::Expr(_) => 0,
        StateFormula::Not(a) => operator_depth(a),
        StateFormula::And(a, b) | StateFormula::Or(a, b) => operator_depth(a).max(operator_depth(b)),
        StateFormula::ZeroSum { objective, .. } => 1 + objective_depth(objective),
        StateFormula::NonZeroSum { objectives, .. } => 1 + objectives.iter().map(objective_depth).max().unwrap_or(0),
    }
}

fn objective_depth(o: &Objective) -> usize {
    match o {
        Objective::Prob(PathFormula::Next(a)) => operator_depth(a),
        Objective::Prob(PathFormula::Until { left, right, .. }) => operator_depth(left).max(operator_depth(right)),
        Objective::Reward(_, RewardFormula::Reach(t)) => operator_depth(t),
        Objective::Reward(..) => 0,
    }
}

/// Resolves identifiers of a state expression to variable slots and
/// constants of the game.
pub(crate) fn resolve_state_expr(game: &Csg, e: &Expr) -> Result<Expr> {
    let symbols = game.symbols();
    let lookup = |name: &str| -> Option<Binding> {
        let s = symbols?;
        if let Some(i) = s.variables.iter().position(|v| v == name) {
            return Some(Binding::Var(i));
        }
        s.constants.iter().find(|(n, _)| n == name).map(|(_, v)| Binding::Const(*v))
    };
    e.resolve(&lookup)
}

/// Evaluates a closed numeric expression (bounds, step counts) using the
/// game's constants.
pub(crate) fn evaluate_constant(game: &Csg, e: &Expr) -> Result<Value> {
    let constants = game.symbols().map(|s| s.constants.as_slice()).unwrap_or(&[]);
    crate::expr::evaluate_closed(e, constants)
}

/// Evaluates a step bound, which must be a nonnegative integer.
pub(crate) fn evaluate_steps(game: &Csg, e: &Expr) -> Result<usize> {
    let k = evaluate_constant(game, e)?.as_int()?;
    usize::try_from(k).map_err(|_| crate::error::Error::Input(format!("step bound {} is negative", k)))
}

struct Checker<'a> {
    game: &'a Csg,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn report(&mut self, message: String) {
        self.out.push(Diagnostic::new(message));
    }

    fn state(&mut self, f: &StateFormula) {
        match f {
            StateFormula::True | StateFormula::False => {}
            StateFormula::Label(l) => {
                if self.game.label_index(l).is_none() {
                    self.report(format!("unknown label \"{}\"", l));
                }
            }
            StateFormula::Expr(e) => {
                if let Err(err) = resolve_state_expr(self.game, e) {
                    self.report(format!("in '{}': {}", e, err));
                }
            }
            StateFormula::Not(a) => self.state(a),
            StateFormula::And(a, b) | StateFormula::Or(a, b) => {
                self.state(a);
                self.state(b);
            }
            StateFormula::ZeroSum { coalition, bound, objective } => {
                if let Err(m) = resolve_coalition(self.game, coalition) {
                    self.report(m);
                }
                if let Bound::Compare(_, x) = bound {
                    self.threshold(x, matches!(objective, Objective::Prob(_)));
                }
                self.objective(objective);
            }
            StateFormula::NonZeroSum { coalitions, bound, objectives, .. } => {
                self.nonzero_sum(coalitions, objectives);
                if let Some((_, x)) = bound {
                    self.threshold(x, false);
                }
                for o in objectives {
                    self.objective(o);
                }
                let bounded = objectives.iter().filter(|o| o.is_bounded()).count();
                if bounded != 0 && bounded != objectives.len() {
                    self.report("objectives mix finite and infinite horizons".to_string());
                }
            }
        }
    }

    fn nonzero_sum(&mut self, coalitions: &[Coalition], objectives: &[Objective]) {
        if coalitions.len() < 2 {
            self.report("an equilibrium operator needs at least two coalitions".to_string());
        }
        if coalitions.len() != objectives.len() {
            self.report(format!("{} coalitions but {} objectives", coalitions.len(), objectives.len()));
        }
        let mut seen: Vec<Option<usize>> = alloc::vec![None; self.game.num_players()];
        let mut resolved = true;
        for (ci, c) in coalitions.iter().enumerate() {
            if c.is_empty() {
                self.report(format!("coalition {} is empty", ci + 1));
            }
            match resolve_coalition(self.game, c) {
                Ok(players) => {
                    for p in players {
                        if let Some(other) = seen[p] {
                            self.report(format!(
                                "coalitions {} and {} are not disjoint: both contain '{}'",
                                other + 1,
                                ci + 1,
                                self.game.player_names()[p]
                            ));
                        } else {
                            seen[p] = Some(ci);
                        }
                    }
                }
                Err(m) => {
                    resolved = false;
                    self.report(m);
                }
            }
        }
        if resolved {
            let missing: Vec<&str> = seen
                .iter()
                .enumerate()
                .filter(|(_, s)| s.is_none())
                .map(|(p, _)| self.game.player_names()[p].as_str())
                .collect();
            if !missing.is_empty() {
                self.report(format!("players not in any coalition: {}", missing.join(", ")));
            }
        }
    }

    fn threshold(&mut self, x: &Expr, probability: bool) {
        match evaluate_constant(self.game, x).and_then(|v| v.as_f64()) {
            Ok(q) if probability && !(0.0..=1.0).contains(&q) => {
                self.report(format!("probability bound {} is outside [0,1]", q))
            }
            Ok(q) if !q.is_finite() => self.report(format!("bound {} is not finite", q)),
            Ok(_) => {}
            Err(e) => self.report(format!("bound '{}': {}", x, e)),
        }
    }

    fn steps(&mut self, k: &Expr) {
        if let Err(e) = evaluate_steps(self.game, k) {
            self.report(format!("step bound '{}': {}", k, e));
        }
    }

    fn objective(&mut self, o: &Objective) {
        match o {
            Objective::Prob(PathFormula::Next(a)) => self.state(a),
            Objective::Prob(PathFormula::Until { left, right, bound }) => {
                self.state(left);
                self.state(right);
                if let Some(k) = bound {
                    self.steps(k);
                }
            }
            Objective::Reward(name, r) => {
                match name {
                    Some(n) if self.game.reward_index(n).is_none() => {
                        self.report(format!("unknown reward structure \"{}\"", n))
                    }
                    None if self.game.rewards().is_empty() => {
                        self.report("the game has no reward structure".to_string())
                    }
                    _ => {}
                }
                match r {
                    RewardFormula::Instant(k) | RewardFormula::Cumulative(k) => self.steps(k),
                    RewardFormula::Reach(t) => self.state(t),
                }
            }
        }
    }
}

/// Checks labels, reward names, coalitions, bounds and nesting depth.
/// Returns no diagnostics for a well-typed property.
pub fn typecheck(formula: &StateFormula, game: &Csg) -> Vec<Diagnostic> {
    let mut c = Checker { game, out: Vec::new() };
    c.state(formula);
    let depth = operator_depth(formula);
    if depth > MAX_OPERATOR_DEPTH {
        c.report(format!("unsupported nesting depth {} (at most {} game operators may be nested)", depth, MAX_OPERATOR_DEPTH));
    }
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{elaborate, parse_model};
    use crate::props::parse_property;

    fn aloha() -> Csg {
        elaborate(&parse_model(include_str!("../../../../models/aloha2.csg")).unwrap(), &[]).unwrap()
    }

    fn diagnostics(game: &Csg, text: &str) -> Vec<Diagnostic> {
        typecheck(&parse_property(text).unwrap(), game)
    }

    #[test]
    fn unknown_label() {
        let d = diagnostics(&aloha(), r#"<<usr1>> Pmax=? [ F "sent9" ]"#);
        assert_eq!(d.len(), 1, "{:?}", d);
        assert!(d[0].message.contains("sent9"));
    }

    #[test]
    fn overlapping_coalitions() {
        let g = crate::game::fixtures::pennies();
        let d = diagnostics(&g, r#"<<p1,p2:p2>>(NE,SW)max=? (P[ X "win1" ] + P[ X "win2" ])"#);
        assert!(d.iter().any(|m| m.message.contains("not disjoint")), "{:?}", d);
    }

    #[test]
    fn well_typed_deadline_formulae() {
        let g = aloha();
        for text in [
            r#"<<usr1>> Pmax=? [ F ("sent1" & s1=2) ]"#,
            r#"<<usr1>> Pmax=? [ F<=D "sent1" ]"#,
            r#"<<usr1:usr2>>(NE,SW)max=? (P[ F<=D "sent1" ] + P[ F<=D "sent2" ])"#,
            r#"<<usr1:usr2>>(CE,SF)min=? (R{"time"}[ F "sent1" ] + R{"time"}[ F "sent2" ])"#,
            r#"<<2>> P>=0.5 [ X true ]"#,
        ] {
            assert_eq!(diagnostics(&g, text), Vec::new(), "{}", text);
        }
    }

    #[test]
    fn side_conditions() {
        let g = aloha();
        let bad = [
            (r#"<<usr3>> Pmax=? [ F "sent1" ]"#, "unknown player"),
            (r#"<<usr1>> P>=1.5 [ F "sent1" ]"#, "outside [0,1]"),
            (r#"<<usr1>> R{"energy"}min=? [ F "sent1" ]"#, "unknown reward"),
            (r#"<<usr1>> Pmax=? [ F nope > 1 ]"#, "nope"),
            (r#"<<usr1>> Pmax=? [ F<=-1 "sent1" ]"#, "negative"),
            (r#"<<usr1:usr2>>(NE,SW)max=? (P[ F "sent1" ])"#, "objectives"),
            (r#"<<usr1>>(NE,SW)max=? (P[ F "sent1" ] + P[ F "sent2" ])"#, "two coalitions"),
            (r#"<<usr1:usr2>>(NE,SW)max=? (P[ F<=3 "sent1" ] + P[ F "sent2" ])"#, "mix"),
            (r#"<<usr1:usr2>>(NE,SW)max=? (P[ F "sent1" ] + P[ F "sent2" ] + P[ F "sent" ])"#, "objectives"),
        ];
        for (text, needle) in bad {
            let d = diagnostics(&g, text);
            assert!(d.iter().any(|m| m.message.contains(needle)), "{}: {:?}", text, d);
        }
    }

    #[test]
    fn nesting_depth() {
        let g = aloha();
        let two = r#"<<usr1>> Pmax=? [ F <<usr2>> P>=0.5 [ X "sent2" ] ]"#;
        assert_eq!(operator_depth(&parse_property(two).unwrap()), 2);
        assert!(diagnostics(&g, two).is_empty());
        let three = r#"<<usr1>> Pmax=? [ F <<usr2>> P>=0.5 [ X <<usr1>> P>0 [ X "sent1" ] ] ]"#;
        let d = diagnostics(&g, three);
        assert!(d.iter().any(|m| m.message.contains("unsupported nesting depth")), "{:?}", d);
    }

    #[test]
    fn coalition_numbers() {
        let g = aloha();
        assert_eq!(resolve_coalition(&g, &alloc::vec!["2".into(), "usr1".into()]), Ok(alloc::vec![1, 0]));
        assert!(resolve_coalition(&g, &alloc::vec!["0".into()]).is_err());
    }
}
