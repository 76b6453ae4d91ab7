//! Recursive-descent parser for properties.
//!
//! Boolean connectives bind as `!` > `&` > `|`. Atoms are labels in
//! double quotes, `true`/`false`, game operators and relational expressions
//! over state variables. A parenthesized group is first read as a state
//! formula and re-read as an arithmetic expression when an arithmetic or
//! relational operator follows the closing parenthesis.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Bound, CmpOp, Coalition, Objective, PathFormula, Property, RewardFormula, StateFormula};
use crate::equilibria::{Criterion, EquilibriumKind, OptDirection};
use crate::error::{ParseError, Result};
use crate::expr::{parse_relation, parse_sum, Expr};
use crate::lexer::{Tok, TokenStream};

type PResult<T> = core::result::Result<T, ParseError>;

/// Parses a single property.
pub fn parse_property(text: &str) -> Result<StateFormula> {
    let mut ts = TokenStream::new(text)?;
    let f = state_formula(&mut ts)?;
    ts.expect_eof()?;
    Ok(f)
}

/// Parses a property file: one property per line, `//` comments and blank
/// lines ignored. Error positions refer to lines of the whole file.
pub fn parse_properties(text: &str) -> Result<Vec<Property>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = match raw.find("//") {
            Some(k) if !inside_string(raw, k) => &raw[..k],
            _ => raw,
        };
        if body.trim().is_empty() {
            continue;
        }
        let formula = parse_line(body).map_err(|mut e| {
            e.line = line;
            e
        })?;
        out.push(Property { formula, line });
    }
    Ok(out)
}

fn parse_line(text: &str) -> PResult<StateFormula> {
    let mut ts = TokenStream::new(text)?;
    let f = state_formula(&mut ts)?;
    ts.expect_eof()?;
    Ok(f)
}

fn inside_string(line: &str, at: usize) -> bool {
    line[..at].matches('"').count() % 2 == 1
}

fn state_formula(ts: &mut TokenStream) -> PResult<StateFormula> {
    let mut a = conjunction(ts)?;
    while ts.eat_sym("|") {
        a = StateFormula::Or(Box::new(a), Box::new(conjunction(ts)?));
    }
    Ok(a)
}

fn conjunction(ts: &mut TokenStream) -> PResult<StateFormula> {
    let mut a = negation(ts)?;
    while ts.eat_sym("&") {
        a = StateFormula::And(Box::new(a), Box::new(negation(ts)?));
    }
    Ok(a)
}

fn negation(ts: &mut TokenStream) -> PResult<StateFormula> {
    if ts.eat_sym("!") {
        return Ok(StateFormula::Not(Box::new(negation(ts)?)));
    }
    atom(ts)
}

/// Symbols that continue an arithmetic or relational expression.
fn continues_expression(tok: &Tok) -> bool {
    matches!(tok, Tok::Sym("=" | "!=" | "<" | "<=" | ">" | ">=" | "+" | "-" | "*" | "/"))
}

fn atom(ts: &mut TokenStream) -> PResult<StateFormula> {
    match ts.peek().clone() {
        Tok::Sym("<<") => game_operator(ts),
        Tok::Str(name) => {
            ts.next();
            Ok(StateFormula::Label(name))
        }
        Tok::Ident(ref k) if (k == "true" || k == "false") && !continues_expression(ts.peek_at(1)) => {
            ts.next();
            Ok(if k == "true" { StateFormula::True } else { StateFormula::False })
        }
        Tok::Sym("(") => {
            let start = ts.pos();
            ts.next();
            let attempt = state_formula(ts).and_then(|f| ts.expect_sym(")").map(|_| f));
            match attempt {
                Ok(f) if !continues_expression(ts.peek()) => Ok(f),
                Ok(_) => {
                    ts.reset(start);
                    Ok(StateFormula::Expr(parse_relation(ts)?))
                }
                Err(first) => {
                    ts.reset(start);
                    parse_relation(ts).map(StateFormula::Expr).map_err(|_| first)
                }
            }
        }
        _ => Ok(StateFormula::Expr(parse_relation(ts)?)),
    }
}

fn coalitions(ts: &mut TokenStream) -> PResult<Vec<Coalition>> {
    ts.expect_sym("<<")?;
    let mut list = Vec::new();
    if ts.eat_sym(">>") {
        list.push(Vec::new());
        return Ok(list);
    }
    loop {
        let mut members = Vec::new();
        loop {
            let member = match ts.peek().clone() {
                Tok::Ident(s) => s,
                Tok::Int(i) if i > 0 => i.to_string(),
                _ => return Err(ts.error("malformed coalition list", &["player name", "player number"])),
            };
            ts.next();
            members.push(member);
            if !ts.eat_sym(",") {
                break;
            }
        }
        list.push(members);
        if ts.eat_sym(">>") {
            return Ok(list);
        }
        if !ts.eat_sym(":") {
            return Err(ts.error("malformed coalition list", &[",", ":", ">>"]));
        }
    }
}

fn cmp_op(ts: &mut TokenStream) -> Option<CmpOp> {
    let op = match ts.peek() {
        Tok::Sym("<") => CmpOp::Lt,
        Tok::Sym("<=") => CmpOp::Le,
        Tok::Sym(">") => CmpOp::Gt,
        Tok::Sym(">=") => CmpOp::Ge,
        _ => return None,
    };
    ts.next();
    Some(op)
}

fn direction_kw(ts: &mut TokenStream) -> Option<OptDirection> {
    if ts.eat_kw("min") {
        Some(OptDirection::Min)
    } else if ts.eat_kw("max") {
        Some(OptDirection::Max)
    } else {
        None
    }
}

fn query_mark(ts: &mut TokenStream) -> PResult<()> {
    ts.expect_sym("=")?;
    ts.expect_sym("?")
}

fn game_operator(ts: &mut TokenStream) -> PResult<StateFormula> {
    let start = ts.token().clone();
    let mut list = coalitions(ts)?;
    if ts.eat_sym("(") {
        let kind = match ts.expect_ident()?.as_str() {
            "NE" => EquilibriumKind::Nash,
            "CE" => EquilibriumKind::Correlated,
            _ => return Err(ts.error("unknown equilibrium type", &["NE", "CE"])),
        };
        ts.expect_sym(",")?;
        let criterion = match ts.expect_ident()?.as_str() {
            "SW" => Criterion::SocialWelfare,
            "SF" => Criterion::SocialFairness,
            _ => return Err(ts.error("unknown optimality criterion", &["SW", "SF"])),
        };
        ts.expect_sym(")")?;
        let Some(direction) = direction_kw(ts) else {
            return Err(ts.unexpected(&["min", "max"]));
        };
        let bound = match cmp_op(ts) {
            Some(op) => Some((op, parse_sum(ts)?)),
            None => {
                query_mark(ts)?;
                None
            }
        };
        ts.expect_sym("(")?;
        let mut objectives = Vec::new();
        loop {
            objectives.push(objective(ts)?);
            if !ts.eat_sym("+") {
                break;
            }
        }
        ts.expect_sym(")")?;
        return Ok(StateFormula::NonZeroSum { coalitions: list, kind, criterion, direction, bound, objectives });
    }
    if list.len() != 1 {
        return Err(ParseError {
            line: start.line,
            column: start.column,
            message: "several coalitions require an equilibrium operator".to_string(),
            expected: Vec::new(),
        });
    }
    let coalition = list.pop().unwrap_or_default();
    let op = ts.expect_ident()?;
    let (is_reward, mut direction) = match op.as_str() {
        "P" => (false, None),
        "Pmin" => (false, Some(OptDirection::Min)),
        "Pmax" => (false, Some(OptDirection::Max)),
        "R" => (true, None),
        "Rmin" => (true, Some(OptDirection::Min)),
        "Rmax" => (true, Some(OptDirection::Max)),
        _ => return Err(ts.error(alloc::format!("unknown operator '{}'", op), &["P", "R"])),
    };
    let reward = if is_reward { reward_name(ts)? } else { None };
    if direction.is_none() {
        direction = direction_kw(ts);
    }
    let bound = match direction {
        Some(d) => {
            query_mark(ts)?;
            Bound::Query(Some(d))
        }
        None => match cmp_op(ts) {
            Some(op) => Bound::Compare(op, parse_sum(ts)?),
            None => {
                query_mark(ts)?;
                Bound::Query(None)
            }
        },
    };
    ts.expect_sym("[")?;
    let objective = if is_reward {
        Objective::Reward(reward, reward_formula(ts)?)
    } else {
        Objective::Prob(path_formula(ts)?)
    };
    ts.expect_sym("]")?;
    Ok(StateFormula::ZeroSum { coalition, bound, objective })
}

fn reward_name(ts: &mut TokenStream) -> PResult<Option<String>> {
    if !ts.eat_sym("{") {
        return Ok(None);
    }
    let name = ts.expect_str()?;
    ts.expect_sym("}")?;
    Ok(Some(name))
}

fn objective(ts: &mut TokenStream) -> PResult<Objective> {
    if ts.eat_kw("P") {
        ts.expect_sym("[")?;
        let p = path_formula(ts)?;
        ts.expect_sym("]")?;
        Ok(Objective::Prob(p))
    } else if ts.eat_kw("R") {
        let name = reward_name(ts)?;
        ts.expect_sym("[")?;
        let r = reward_formula(ts)?;
        ts.expect_sym("]")?;
        Ok(Objective::Reward(name, r))
    } else {
        Err(ts.unexpected(&["P", "R"]))
    }
}

fn step_bound(ts: &mut TokenStream) -> PResult<Option<Expr>> {
    if ts.eat_sym("<=") {
        Ok(Some(parse_sum(ts)?))
    } else {
        Ok(None)
    }
}

fn path_formula(ts: &mut TokenStream) -> PResult<PathFormula> {
    if ts.eat_kw("X") {
        return Ok(PathFormula::Next(Box::new(state_formula(ts)?)));
    }
    if ts.eat_kw("F") {
        let bound = step_bound(ts)?;
        return Ok(PathFormula::eventually(state_formula(ts)?, bound));
    }
    let left = state_formula(ts)?;
    ts.expect_kw("U")?;
    let bound = step_bound(ts)?;
    let right = state_formula(ts)?;
    Ok(PathFormula::Until { left: Box::new(left), right: Box::new(right), bound })
}

fn reward_formula(ts: &mut TokenStream) -> PResult<RewardFormula> {
    if ts.eat_kw("I") {
        ts.expect_sym("=")?;
        Ok(RewardFormula::Instant(parse_sum(ts)?))
    } else if ts.eat_kw("C") {
        ts.expect_sym("<=")?;
        Ok(RewardFormula::Cumulative(parse_sum(ts)?))
    } else if ts.eat_kw("F") {
        Ok(RewardFormula::Reach(Box::new(state_formula(ts)?)))
    } else {
        Err(ts.unexpected(&["I", "C", "F"]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::BinOp;
    use alloc::vec;

    fn label(s: &str) -> Box<StateFormula> {
        Box::new(StateFormula::Label(s.into()))
    }

    #[test]
    fn deadline_query() {
        let f = parse_property(r#"<<usr1>> Pmax=? [ F ("sent1" & t<=D) ]"#).unwrap();
        let StateFormula::ZeroSum { coalition, bound, objective } = f else { panic!("{:?}", f) };
        assert_eq!(coalition, vec!["usr1".to_string()]);
        assert_eq!(bound, Bound::Query(Some(OptDirection::Max)));
        let Objective::Prob(PathFormula::Until { left, right, bound: None }) = objective else { panic!() };
        assert_eq!(*left, StateFormula::True);
        let guard = Expr::binary(BinOp::Le, Expr::Ident("t".into()), Expr::Ident("D".into()));
        assert_eq!(*right, StateFormula::And(label("sent1"), Box::new(StateFormula::Expr(guard))));
    }

    #[test]
    fn nonzero_sum_reward_query() {
        let f = parse_property(r#"<<usr1:usr2>>(CE,SF)min=? (R{"time"}[ F "sent1" ] + R{"time"}[ F "sent2" ])"#)
            .unwrap();
        let StateFormula::NonZeroSum { coalitions, kind, criterion, direction, bound, objectives } = f else {
            panic!()
        };
        assert_eq!(coalitions.len(), 2);
        assert_eq!(kind, EquilibriumKind::Correlated);
        assert_eq!(criterion, Criterion::SocialFairness);
        assert_eq!(direction, OptDirection::Min);
        assert!(bound.is_none());
        assert_eq!(objectives[1], Objective::Reward(Some("time".into()), RewardFormula::Reach(label("sent2"))));
    }

    #[test]
    fn trivial_formula() {
        assert_eq!(parse_property("true").unwrap(), StateFormula::True);
        assert_eq!(parse_property("!false").unwrap(), StateFormula::Not(Box::new(StateFormula::False)));
    }

    #[test]
    fn eventually_is_sugar_for_until() {
        assert_eq!(
            parse_property(r#"<<1>> Pmax=? [ F "a" ]"#).unwrap(),
            parse_property(r#"<<1>> Pmax=? [ true U "a" ]"#).unwrap()
        );
        assert_eq!(
            parse_property(r#"<<1>> P>=0.2 [ F<=5 "a" ]"#).unwrap(),
            parse_property(r#"<<1>> P>=0.2 [ true U<=5 "a" ]"#).unwrap()
        );
    }

    #[test]
    fn operator_spellings() {
        let a = parse_property(r#"<<p1>> P max=? [ X "w" ]"#).unwrap();
        let b = parse_property(r#"<<p1>> Pmax=? [ X "w" ]"#).unwrap();
        assert_eq!(a, b);
        let f = parse_property(r#"<<p1,p2>> R{"c"}<=4.5 [ C<=3 ]"#).unwrap();
        assert!(matches!(f, StateFormula::ZeroSum { bound: Bound::Compare(CmpOp::Le, _), .. }));
        let f = parse_property(r#"<<p1>> R=? [ I=2 ]"#).unwrap();
        assert!(matches!(f, StateFormula::ZeroSum { objective: Objective::Reward(None, _), .. }));
        let u = parse_property("⟨⟨p1⟩⟩ P≥0.5 [ F \"w\" ] ∧ ¬\"a\"").unwrap();
        assert!(matches!(u, StateFormula::And(..)));
    }

    #[test]
    fn parenthesized_expressions() {
        let f = parse_property("(x + 1) > 2 & (y = 0)").unwrap();
        let StateFormula::And(a, b) = f else { panic!() };
        assert!(matches!(*a, StateFormula::Expr(Expr::Binary(BinOp::Gt, ..))));
        assert!(matches!(*b, StateFormula::Expr(Expr::Binary(BinOp::Eq, ..))));
    }

    #[test]
    fn syntax_errors_are_positioned() {
        let e = parse_property(r#"<<usr1>> Pmax=? [ F "a" "#).unwrap_err();
        assert!(e.to_string().contains("1:"), "{}", e);
        assert!(parse_property("<<usr1,>> Pmax=? [ F \"a\" ]").is_err());
        assert!(parse_property("<<a:b>> Pmax=? [ F \"a\" ]").is_err());
        assert!(parse_property("<<a>>(NE,XX)max=? (P[ F \"a\" ])").is_err());
        assert!(parse_property("<<a>> Q=? [ F \"a\" ]").is_err());
    }

    #[test]
    fn file_lines_and_comments() {
        let text = "// header\n\n<<a>> Pmax=? [ X \"w\" ] // trailing\n  true\n";
        let props = parse_properties(text).unwrap();
        assert_eq!(props.len(), 2);
        assert_eq!((props[0].line, props[1].line), (3, 4));
        let crate::error::Error::Parse(e) = parse_properties("true\n\n<<a>> P\n").unwrap_err() else { panic!() };
        assert_eq!(e.line, 3);
    }
}
