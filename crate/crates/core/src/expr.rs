//! Integer, real and boolean expressions shared by models and properties.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{bail, Error, ParseError, Result};
use crate::lexer::{Tok, TokenStream};
use crate::num;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
}

impl Value {
    pub fn as_f64(self) -> Result<f64> {
        match self {
            Value::Int(i) => Ok(i as f64),
            Value::Real(r) => Ok(r),
            Value::Bool(_) => bail!(Elaboration, "expected a number, found a boolean"),
        }
    }

    pub fn as_bool(self) -> Result<bool> {
        match self {
            Value::Bool(b) => Ok(b),
            other => bail!(Elaboration, "expected a boolean, found {}", other),
        }
    }

    pub fn as_int(self) -> Result<i64> {
        match self {
            Value::Int(i) => Ok(i),
            Value::Bool(b) => Ok(b as i64),
            Value::Real(r) => bail!(Elaboration, "expected an integer, found {}", r),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{}", i),
            Value::Real(r) => write!(f, "{}", format_real(*r)),
            Value::Bool(b) => write!(f, "{}", b),
        }
    }
}

/// Shortest round-trip decimal that still reads back as a real.
pub fn format_real(r: f64) -> String {
    let s = format!("{}", r);
    if s.contains(['.', 'e', 'i', 'N']) {
        s
    } else {
        format!("{}.0", s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Implies => "=>",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
            BinOp::Add | BinOp::Sub => 6,
            BinOp::Mul | BinOp::Div => 7,
        }
    }

    fn from_relation(sym: &str) -> Option<BinOp> {
        Some(match sym {
            "=" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Floor,
    Ceil,
    Pow,
    Mod,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Floor => "floor",
            Func::Ceil => "ceil",
            Func::Pow => "pow",
            Func::Mod => "mod",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "min" => Func::Min,
            "max" => Func::Max,
            "floor" => Func::Floor,
            "ceil" => Func::Ceil,
            "pow" => Func::Pow,
            "mod" => Func::Mod,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Real(f64),
    Bool(bool),
    Ident(String),
    /// A resolved state variable: its slot in the valuation.
    Var(usize),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// What an identifier refers to during resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum Binding {
    Var(usize),
    /// A boolean state variable, stored as 0 or 1.
    BoolVar(usize),
    Const(Value),
}

impl Expr {
    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Identifiers mentioned anywhere in the expression.
    pub fn identifiers(&self, out: &mut Vec<String>) {
        match self {
            Expr::Ident(s) => {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
            Expr::Unary(_, a) => a.identifiers(out),
            Expr::Binary(_, a, b) => {
                a.identifiers(out);
                b.identifiers(out);
            }
            Expr::Ite(c, a, b) => {
                c.identifiers(out);
                a.identifiers(out);
                b.identifiers(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.identifiers(out)),
            _ => {}
        }
    }

    /// Replaces identifiers by variable slots or constant values and folds
    /// constant subexpressions.
    pub fn resolve<F>(&self, lookup: &F) -> Result<Expr>
    where
        F: Fn(&str) -> Option<Binding>,
    {
        let e = match self {
            Expr::Ident(name) => match lookup(name) {
                Some(Binding::Var(i)) => Expr::Var(i),
                Some(Binding::BoolVar(i)) => Expr::binary(BinOp::Eq, Expr::Var(i), Expr::Int(1)),
                Some(Binding::Const(v)) => literal(v),
                None => bail!(Elaboration, "unknown identifier '{}'", name),
            },
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.resolve(lookup)?)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.resolve(lookup)?, b.resolve(lookup)?),
            Expr::Ite(c, a, b) => Expr::Ite(
                Box::new(c.resolve(lookup)?),
                Box::new(a.resolve(lookup)?),
                Box::new(b.resolve(lookup)?),
            ),
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| a.resolve(lookup)).collect::<Result<_>>()?),
            other => other.clone(),
        };
        if e.is_closed() && !matches!(e, Expr::Int(_) | Expr::Real(_) | Expr::Bool(_)) {
            return Ok(literal(e.eval(&[])?));
        }
        Ok(e)
    }

    fn is_closed(&self) -> bool {
        match self {
            Expr::Int(_) | Expr::Real(_) | Expr::Bool(_) => true,
            Expr::Ident(_) | Expr::Var(_) => false,
            Expr::Unary(_, a) => a.is_closed(),
            Expr::Binary(_, a, b) => a.is_closed() && b.is_closed(),
            Expr::Ite(c, a, b) => c.is_closed() && a.is_closed() && b.is_closed(),
            Expr::Call(_, args) => args.iter().all(Expr::is_closed),
        }
    }

    /// Evaluates a resolved expression against a valuation.
    pub fn eval(&self, vars: &[i64]) -> Result<Value> {
        Ok(match self {
            Expr::Int(i) => Value::Int(*i),
            Expr::Real(r) => Value::Real(*r),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Var(i) => Value::Int(vars[*i]),
            Expr::Ident(name) => bail!(Elaboration, "unresolved identifier '{}'", name),
            Expr::Unary(UnOp::Neg, a) => match a.eval(vars)? {
                Value::Int(i) => Value::Int(i.checked_neg().ok_or_else(overflow)?),
                Value::Real(r) => Value::Real(-r),
                Value::Bool(_) => bail!(Elaboration, "cannot negate a boolean"),
            },
            Expr::Unary(UnOp::Not, a) => Value::Bool(!truth(a.eval(vars)?)?),
            Expr::Binary(BinOp::And, a, b) => Value::Bool(truth(a.eval(vars)?)? && truth(b.eval(vars)?)?),
            Expr::Binary(BinOp::Or, a, b) => Value::Bool(truth(a.eval(vars)?)? || truth(b.eval(vars)?)?),
            Expr::Binary(BinOp::Implies, a, b) => Value::Bool(!truth(a.eval(vars)?)? || truth(b.eval(vars)?)?),
            Expr::Binary(op, a, b) => binary(*op, a.eval(vars)?, b.eval(vars)?)?,
            Expr::Ite(c, a, b) => {
                if truth(c.eval(vars)?)? {
                    a.eval(vars)?
                } else {
                    b.eval(vars)?
                }
            }
            Expr::Call(f, args) => {
                let vals = args.iter().map(|a| a.eval(vars)).collect::<Result<Vec<_>>>()?;
                call(*f, &vals)?
            }
        })
    }

    pub fn eval_bool(&self, vars: &[i64]) -> Result<bool> {
        truth(self.eval(vars)?)
    }
}

fn literal(v: Value) -> Expr {
    match v {
        Value::Int(i) => Expr::Int(i),
        Value::Real(r) => Expr::Real(r),
        Value::Bool(b) => Expr::Bool(b),
    }
}

fn overflow() -> Error {
    Error::Numeric("integer overflow".into())
}

// Boolean variables are stored as 0/1 integers.
fn truth(v: Value) -> Result<bool> {
    match v {
        Value::Bool(b) => Ok(b),
        Value::Int(0) => Ok(false),
        Value::Int(1) => Ok(true),
        other => bail!(Elaboration, "expected a boolean, found {}", other),
    }
}

fn binary(op: BinOp, a: Value, b: Value) -> Result<Value> {
    use Value::*;
    Ok(match (op, a, b) {
        (BinOp::Eq, Bool(x), Bool(y)) => Bool(x == y),
        (BinOp::Ne, Bool(x), Bool(y)) => Bool(x != y),
        (_, Bool(_), _) | (_, _, Bool(_)) => bail!(Elaboration, "operator '{}' applied to a boolean", op.symbol()),
        (BinOp::Add, Int(x), Int(y)) => Int(x.checked_add(y).ok_or_else(overflow)?),
        (BinOp::Sub, Int(x), Int(y)) => Int(x.checked_sub(y).ok_or_else(overflow)?),
        (BinOp::Mul, Int(x), Int(y)) => Int(x.checked_mul(y).ok_or_else(overflow)?),
        (BinOp::Eq, Int(x), Int(y)) => Bool(x == y),
        (BinOp::Ne, Int(x), Int(y)) => Bool(x != y),
        (BinOp::Lt, Int(x), Int(y)) => Bool(x < y),
        (BinOp::Le, Int(x), Int(y)) => Bool(x <= y),
        (BinOp::Gt, Int(x), Int(y)) => Bool(x > y),
        (BinOp::Ge, Int(x), Int(y)) => Bool(x >= y),
        _ => {
            let (x, y) = (a.as_f64()?, b.as_f64()?);
            match op {
                BinOp::Add => Real(x + y),
                BinOp::Sub => Real(x - y),
                BinOp::Mul => Real(x * y),
                BinOp::Div => {
                    if y == 0.0 {
                        bail!(Numeric, "division by zero");
                    }
                    Real(x / y)
                }
                BinOp::Eq => Bool(x == y),
                BinOp::Ne => Bool(x != y),
                BinOp::Lt => Bool(x < y),
                BinOp::Le => Bool(x <= y),
                BinOp::Gt => Bool(x > y),
                BinOp::Ge => Bool(x >= y),
                BinOp::And | BinOp::Or | BinOp::Implies => unreachable!("handled by the caller"),
            }
        }
    })
}

fn to_int(r: f64) -> Result<i64> {
    if !(-9.2e18..9.2e18).contains(&r) {
        return Err(overflow());
    }
    Ok(r as i64)
}

fn call(f: Func, args: &[Value]) -> Result<Value> {
    let arity_ok = match f {
        Func::Min | Func::Max => !args.is_empty(),
        Func::Floor | Func::Ceil => args.len() == 1,
        Func::Pow | Func::Mod => args.len() == 2,
    };
    if !arity_ok {
        bail!(Elaboration, "wrong number of arguments to {}", f.name());
    }
    let all_int = args.iter().all(|a| matches!(a, Value::Int(_)));
    Ok(match f {
        Func::Min | Func::Max if all_int => {
            let it = args.iter().map(|a| if let Value::Int(i) = a { *i } else { 0 });
            Value::Int(if f == Func::Min { it.min().unwrap_or(0) } else { it.max().unwrap_or(0) })
        }
        Func::Min | Func::Max => {
            let vals = args.iter().map(|a| a.as_f64()).collect::<Result<Vec<_>>>()?;
            let init = vals[0];
            Value::Real(vals.into_iter().fold(init, if f == Func::Min { f64::min } else { f64::max }))
        }
        Func::Floor => Value::Int(to_int(num::floor(args[0].as_f64()?))?),
        Func::Ceil => Value::Int(to_int(num::ceil(args[0].as_f64()?))?),
        Func::Pow => match (args[0], args[1]) {
            (Value::Int(b), Value::Int(e)) if e >= 0 => {
                let e = u32::try_from(e).map_err(|_| overflow())?;
                Value::Int(b.checked_pow(e).ok_or_else(overflow)?)
            }
            (a, b) => Value::Real(num::pow(a.as_f64()?, b.as_f64()?)),
        },
        Func::Mod => {
            let (a, b) = (args[0].as_int()?, args[1].as_int()?);
            if b == 0 {
                bail!(Numeric, "modulo by zero");
            }
            Value::Int(a.checked_rem_euclid(b).ok_or_else(overflow)?)
        }
    })
}

// ---------------------------------------------------------------------------
// Parsing

/// Parses a full expression (lowest precedence: `c ? a : b`).
pub fn parse_expr(ts: &mut TokenStream) -> core::result::Result<Expr, ParseError> {
    let cond = parse_implies(ts)?;
    if ts.eat_sym("?") {
        let a = parse_expr(ts)?;
        ts.expect_sym(":")?;
        let b = parse_expr(ts)?;
        return Ok(Expr::Ite(Box::new(cond), Box::new(a), Box::new(b)));
    }
    Ok(cond)
}

fn parse_implies(ts: &mut TokenStream) -> core::result::Result<Expr, ParseError> {
    let a = parse_or(ts)?;
    if ts.eat_sym("=>") {
        let b = parse_implies(ts)?;
        return Ok(Expr::binary(BinOp::Implies, a, b));
    }
    Ok(a)
}

fn parse_or(ts: &mut TokenStream) -> core::result::Result<Expr, ParseError> {
    let mut a = parse_and(ts)?;
    while ts.eat_sym("|") {
        a = Expr::binary(BinOp::Or, a, parse_and(ts)?);
    }
    Ok(a)
}

fn parse_and(ts: &mut TokenStream) -> core::result::Result<Expr, ParseError> {
    let mut a = parse_not(ts)?;
    while ts.eat_sym("&") {
        a = Expr::binary(BinOp::And, a, parse_not(ts)?);
    }
    Ok(a)
}

fn parse_not(ts: &mut TokenStream) -> core::result::Result<Expr, ParseError> {
    if ts.eat_sym("!") {
        return Ok(Expr::Unary(UnOp::Not, Box::new(parse_not(ts)?)));
    }
    parse_relation(ts)
}

/// Parses an arithmetic expression optionally compared with another one.
pub fn parse_relation(ts: &mut TokenStream) -> core::result::Result<Expr, ParseError> {
    let a = parse_sum(ts)?;
    if let Tok::Sym(s) = ts.peek() {
        if let Some(op) = BinOp::from_relation(s) {
            ts.next();
            let b = parse_sum(ts)?;
            return Ok(Expr::binary(op, a, b));
        }
    }
    Ok(a)
}

pub fn parse_sum(ts: &mut TokenStream) -> core::result::Result<Expr, ParseError> {
    let mut a = parse_product(ts)?;
    loop {
        if ts.eat_sym("+") {
            a = Expr::binary(BinOp::Add, a, parse_product(ts)?);
        } else if ts.eat_sym("-") {
            a = Expr::binary(BinOp::Sub, a, parse_product(ts)?);
        } else {
            return Ok(a);
        }
    }
}

fn parse_product(ts: &mut TokenStream) -> core::result::Result<Expr, ParseError> {
    let mut a = parse_unary(ts)?;
    loop {
        if ts.eat_sym("*") {
            a = Expr::binary(BinOp::Mul, a, parse_unary(ts)?);
        } else if ts.eat_sym("/") {
            a = Expr::binary(BinOp::Div, a, parse_unary(ts)?);
        } else {
            return Ok(a);
        }
    }
}

fn parse_unary(ts: &mut TokenStream) -> core::result::Result<Expr, ParseError> {
    if ts.eat_sym("-") {
        return Ok(Expr::Unary(UnOp::Neg, Box::new(parse_unary(ts)?)));
    }
    parse_primary(ts)
}

fn parse_primary(ts: &mut TokenStream) -> core::result::Result<Expr, ParseError> {
    match ts.peek().clone() {
        Tok::Int(i) => {
            ts.next();
            Ok(Expr::Int(i))
        }
        Tok::Real(r) => {
            ts.next();
            Ok(Expr::Real(r))
        }
        Tok::Ident(name) => {
            ts.next();
            match name.as_str() {
                "true" => return Ok(Expr::Bool(true)),
                "false" => return Ok(Expr::Bool(false)),
                _ => {}
            }
            if let Some(f) = Func::from_name(&name) {
                if ts.is_sym("(") {
                    ts.next();
                    let mut args = Vec::new();
                    if !ts.is_sym(")") {
                        loop {
                            args.push(parse_expr(ts)?);
                            if !ts.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    ts.expect_sym(")")?;
                    return Ok(Expr::Call(f, args));
                }
            }
            Ok(Expr::Ident(name))
        }
        Tok::Sym("(") => {
            ts.next();
            let e = parse_expr(ts)?;
            ts.expect_sym(")")?;
            Ok(e)
        }
        _ => Err(ts.unexpected(&["number", "identifier", "("])),
    }
}

/// Parses a standalone expression.
pub fn parse_expression(text: &str) -> Result<Expr> {
    let mut ts = TokenStream::new(text)?;
    let e = parse_expr(&mut ts)?;
    ts.expect_eof()?;
    Ok(e)
}

// ---------------------------------------------------------------------------
// Printing

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Ite(..) => 0,
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Unary(UnOp::Not, _) => 4,
        Expr::Unary(UnOp::Neg, _) => 8,
        Expr::Int(i) if *i < 0 => 8,
        Expr::Real(r) if r.is_sign_negative() => 8,
        _ => 9,
    }
}

fn write_prec(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "(")?;
        write_expr(e, f)?;
        write!(f, ")")
    } else {
        write_expr(e, f)
    }
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Int(i) => write!(f, "{}", i),
        Expr::Real(r) => write!(f, "{}", format_real(*r)),
        Expr::Bool(b) => write!(f, "{}", b),
        Expr::Ident(s) => write!(f, "{}", s),
        Expr::Var(i) => write!(f, "#{}", i),
        Expr::Unary(UnOp::Neg, a) => {
            write!(f, "-")?;
            write_prec(a, 8, f)
        }
        Expr::Unary(UnOp::Not, a) => {
            write!(f, "!")?;
            write_prec(a, 4, f)
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            let (left, right) = match op {
                BinOp::Implies => (p + 1, p),
                _ if p == 5 => (6, 6),
                _ => (p, p + 1),
            };
            write_prec(a, left, f)?;
            write!(f, " {} ", op.symbol())?;
            write_prec(b, right, f)
        }
        Expr::Ite(c, a, b) => {
            write_prec(c, 1, f)?;
            write!(f, " ? ")?;
            write_prec(a, 0, f)?;
            write!(f, " : ")?;
            write_prec(b, 0, f)
        }
        Expr::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write_expr(a, f)?;
            }
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f)
    }
}

/// Prints an expression so that it can be embedded where only operands of
/// at least `min` precedence may appear.
pub struct Prec<'a>(pub &'a Expr, pub u8);

impl fmt::Display for Prec<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prec(self.0, self.1, f)
    }
}

pub fn evaluate_closed(e: &Expr, constants: &[(String, Value)]) -> Result<Value> {
    let lookup = |name: &str| constants.iter().find(|(n, _)| n == name).map(|(_, v)| Binding::Const(*v));
    e.resolve(&lookup)?.eval(&[])
}

pub fn describe(e: &Expr) -> String {
    e.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn eval(text: &str) -> Result<Value> {
        evaluate_closed(&parse_expression(text)?, &[("q".to_string(), Value::Real(0.9))])
    }

    #[test]
    fn precedence_follows_convention() {
        assert_eq!(eval("1 + 2 * 3").unwrap(), Value::Int(7));
        assert_eq!(eval("(1 + 2) * 3").unwrap(), Value::Int(9));
        assert_eq!(eval("1 - 2 - 3").unwrap(), Value::Int(-4));
        assert_eq!(eval("1 < 2 & 2 < 1 | true").unwrap(), Value::Bool(true));
        assert_eq!(eval("(1-q)/2").unwrap(), Value::Real((1.0 - 0.9) / 2.0));
        assert_eq!(eval("true ? 1 : 2").unwrap(), Value::Int(1));
        assert_eq!(eval("!false => false").unwrap(), Value::Bool(false));
    }

    #[test]
    fn functions() {
        assert_eq!(eval("min(3, 1, 2)").unwrap(), Value::Int(1));
        assert_eq!(eval("max(1, 2.5)").unwrap(), Value::Real(2.5));
        assert_eq!(eval("pow(2, 10)").unwrap(), Value::Int(1024));
        assert_eq!(eval("mod(-1, 3)").unwrap(), Value::Int(2));
        assert_eq!(eval("floor(2.7)").unwrap(), Value::Int(2));
    }

    #[test]
    fn overflow_is_detected() {
        assert!(matches!(eval("9223372036854775807 + 1"), Err(Error::Numeric(_))));
        assert!(matches!(eval("pow(10, 30)"), Err(Error::Numeric(_))));
    }

    #[test]
    fn type_errors() {
        assert!(eval("true + 1").is_err());
        // boolean variables are stored as 0 and 1, so only those integers act as truth values
        assert!(eval("2 & true").is_err());
        assert!(eval("nope").is_err());
    }

    #[test]
    fn resolves_variables() {
        let e = parse_expression("x + 1 >= 3").unwrap();
        let r = e
            .resolve(&|n: &str| if n == "x" { Some(Binding::Var(0)) } else { None })
            .unwrap();
        assert!(r.eval_bool(&[2]).unwrap());
        assert!(!r.eval_bool(&[1]).unwrap());
    }

    #[test]
    fn prints_minimal_parentheses() {
        let e = parse_expression("(a - (b - c)) * -(d + 1) / 2.0").unwrap();
        assert_eq!(e.to_string(), "(a - (b - c)) * -(d + 1) / 2.0");
        let e = parse_expression("a = 1 & !(b | c)").unwrap();
        assert_eq!(e.to_string(), "a = 1 & !(b | c)");
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0i64..100).prop_map(Expr::Int),
            (0.0f64..10.0).prop_map(Expr::Real),
            any::<bool>().prop_map(Expr::Bool),
            "[a-c]".prop_map(Expr::Ident),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), 0usize..13).prop_map(|(a, b, k)| {
                    let ops = [
                        BinOp::Add,
                        BinOp::Sub,
                        BinOp::Mul,
                        BinOp::Div,
                        BinOp::Eq,
                        BinOp::Ne,
                        BinOp::Lt,
                        BinOp::Le,
                        BinOp::Gt,
                        BinOp::Ge,
                        BinOp::And,
                        BinOp::Or,
                        BinOp::Implies,
                    ];
                    Expr::binary(ops[k], a, b)
                }),
                inner.clone().prop_map(|a| Expr::Unary(UnOp::Neg, Box::new(a))),
                inner.clone().prop_map(|a| Expr::Unary(UnOp::Not, Box::new(a))),
                (inner.clone(), inner.clone(), inner.clone())
                    .prop_map(|(c, a, b)| Expr::Ite(Box::new(c), Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Max, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let text = e.to_string();
            prop_assert_eq!(parse_expression(&text).unwrap(), e);
        }
    }
}
