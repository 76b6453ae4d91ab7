//! Concrete syntax for properties, readable by the property parser.

use core::fmt;

use super::{Bound, Objective, PathFormula, RewardFormula, StateFormula};
use crate::equilibria::{Criterion, EquilibriumKind, OptDirection};
use crate::expr::Prec;

fn level(f: &StateFormula) -> u8 {
    match f {
        StateFormula::Or(..) => 1,
        StateFormula::And(..) => 2,
        StateFormula::Not(_) => 3,
        _ => 4,
    }
}

fn write_at(f: &StateFormula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    if level(f) < min {
        write!(out, "({})", f)
    } else {
        write!(out, "{}", f)
    }
}

fn direction_name(d: OptDirection) -> &'static str {
    match d {
        OptDirection::Max => "max",
        OptDirection::Min => "min",
    }
}

fn write_coalitions<'a, I>(list: I, out: &mut fmt::Formatter<'_>) -> fmt::Result
where
    I: IntoIterator<Item = &'a alloc::vec::Vec<alloc::string::String>>,
{
    write!(out, "<<")?;
    for (i, c) in list.into_iter().enumerate() {
        if i > 0 {
            write!(out, ":")?;
        }
        write!(out, "{}", c.join(","))?;
    }
    write!(out, ">>")
}

fn write_step_bound(bound: &Option<crate::expr::Expr>, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    match bound {
        Some(k) => write!(out, "<={} ", Prec(k, 6)),
        None => write!(out, " "),
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFormula::Next(a) => write!(f, "X {}", a),
            PathFormula::Until { left, right, bound } => {
                if **left == StateFormula::True {
                    write!(f, "F")?;
                } else {
                    write!(f, "{} U", left)?;
                }
                write_step_bound(bound, f)?;
                write!(f, "{}", right)
            }
        }
    }
}

impl fmt::Display for RewardFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardFormula::Instant(k) => write!(f, "I={}", Prec(k, 6)),
            RewardFormula::Cumulative(k) => write!(f, "C<={}", Prec(k, 6)),
            RewardFormula::Reach(t) => write!(f, "F {}", t),
        }
    }
}

fn write_reward_name(name: &Option<alloc::string::String>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match name {
        Some(n) => write!(f, "{{\"{}\"}}", n),
        None => Ok(()),
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Prob(p) => write!(f, "P[ {} ]", p),
            Objective::Reward(name, r) => {
                write!(f, "R")?;
                write_reward_name(name, f)?;
                write!(f, "[ {} ]", r)
            }
        }
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFormula::True => write!(f, "true"),
            StateFormula::False => write!(f, "false"),
            StateFormula::Label(l) => write!(f, "\"{}\"", l),
            StateFormula::Expr(e) => write!(f, "{}", Prec(e, 5)),
            StateFormula::Not(a) => {
                write!(f, "!")?;
                write_at(a, 3, f)
            }
            StateFormula::And(a, b) => {
                write_at(a, 2, f)?;
                write!(f, " & ")?;
                write_at(b, 3, f)
            }
            StateFormula::Or(a, b) => {
                write_at(a, 1, f)?;
                write!(f, " | ")?;
                write_at(b, 2, f)
            }
            StateFormula::ZeroSum { coalition, bound, objective } => {
                write_coalitions(core::iter::once(coalition), f)?;
                let (letter, name, inner) = match objective {
                    Objective::Prob(p) => ("P", &None, alloc::format!("{}", p)),
                    Objective::Reward(n, r) => ("R", n, alloc::format!("{}", r)),
                };
                write!(f, " {}", letter)?;
                write_reward_name(name, f)?;
                match bound {
                    Bound::Query(Some(d)) => write!(f, "{}=?", direction_name(*d))?,
                    Bound::Query(None) => write!(f, "=?")?,
                    Bound::Compare(op, x) => write!(f, "{}{}", op.symbol(), Prec(x, 6))?,
                }
                write!(f, " [ {} ]", inner)
            }
            StateFormula::NonZeroSum { coalitions, kind, criterion, direction, bound, objectives } => {
                write_coalitions(coalitions, f)?;
                let kind = match kind {
                    EquilibriumKind::Nash => "NE",
                    EquilibriumKind::Correlated => "CE",
                };
                let crit = match criterion {
                    Criterion::SocialWelfare => "SW",
                    Criterion::SocialFairness => "SF",
                };
                write!(f, "({},{}){}", kind, crit, direction_name(*direction))?;
                match bound {
                    Some((op, x)) => write!(f, "{}{}", op.symbol(), Prec(x, 6))?,
                    None => write!(f, "=?")?,
                }
                write!(f, " (")?;
                for (i, o) in objectives.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{}", o)?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_properties, parse_property};
    use alloc::string::ToString;

    fn round_trip(text: &str) {
        let a = parse_property(text).unwrap();
        let printed = a.to_string();
        let b = parse_property(&printed).unwrap_or_else(|e| panic!("{}: {}", printed, e));
        assert_eq!(a, b, "{}", printed);
    }

    #[test]
    fn printed_formulae_reparse() {
        for text in [
            "true",
            "!(\"a\" | \"b\") & x > 1",
            "(\"a\" & \"b\") | !\"c\"",
            "(x + 1) * 2 >= y",
            r#"<<usr1>> Pmax=? [ F ("sent1" & t<=D) ]"#,
            r#"<<1,2>> P<0.25 [ "a" U<=D+1 "b" ]"#,
            r#"<<p>> R=? [ I=3 ]"#,
            r#"<<p>> R{"r"}>=-1 [ C<=2 ]"#,
            r#"<<p:q>>(NE,SF)max>=0.5 (P[ X !"w" ] + P[ F<=2 "z" ])"#,
            r#"<<p>> Pmin=? [ F <<q>> P>=1 [ X "a" ] ]"#,
        ] {
            round_trip(text);
        }
    }

    #[test]
    fn bundled_property_files_round_trip() {
        for text in [
            include_str!("../../../../models/aloha2.props"),
            include_str!("../../../../models/aloha3.props"),
            include_str!("../../../../models/intersection.props"),
            include_str!("../../../../models/matching_pennies.props"),
        ] {
            let props = parse_properties(text).unwrap();
            assert!(!props.is_empty());
            for p in props {
                let printed = p.formula.to_string();
                assert_eq!(parse_property(&printed).unwrap(), p.formula, "{}", printed);
            }
        }
    }
}
