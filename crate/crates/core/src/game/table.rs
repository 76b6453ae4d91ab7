//! Plain-text normal form game tables: one line per joint action,
//! `a1 a2 ... an : u1 u2 ... un`, with `//` comments.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use super::NormalFormGame;
use crate::error::{Error, ParseError, Result};

fn syntax(line: usize, column: usize, message: String) -> Error {
    Error::Parse(ParseError { line, column, message, expected: Vec::new() })
}

pub fn parse_nfg_table(text: &str) -> Result<NormalFormGame> {
    let mut names: Vec<Vec<String>> = Vec::new();
    let mut rows: Vec<(usize, Vec<usize>, Vec<f64>)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split("//").next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let Some(colon) = line.find(':') else {
            return Err(syntax(line_no, line.len() + 1, "expected ':' between actions and utilities".into()));
        };
        let actions: Vec<&str> = line[..colon].split_whitespace().collect();
        let utils: Vec<&str> = line[colon + 1..].split_whitespace().collect();
        if names.is_empty() {
            if actions.is_empty() {
                return Err(syntax(line_no, 1, "no actions before ':'".into()));
            }
            names = vec![Vec::new(); actions.len()];
        }
        let n = names.len();
        if actions.len() != n {
            return Err(syntax(line_no, 1, format!("{} actions, expected {}", actions.len(), n)));
        }
        if utils.len() != n {
            return Err(syntax(line_no, colon + 2, format!("{} utilities, expected {}", utils.len(), n)));
        }
        let mut joint = Vec::with_capacity(n);
        for (p, a) in actions.iter().enumerate() {
            let idx = match names[p].iter().position(|x| x == a) {
                Some(i) => i,
                None => {
                    names[p].push(a.to_string());
                    names[p].len() - 1
                }
            };
            joint.push(idx);
        }
        let mut values = Vec::with_capacity(n);
        for u in &utils {
            let v: f64 = u
                .parse()
                .map_err(|_| syntax(line_no, colon + 2, format!("'{}' is not a number", u)))?;
            if !v.is_finite() {
                return Err(syntax(line_no, colon + 2, format!("utility '{}' is not finite", u)));
            }
            values.push(v);
        }
        rows.push((line_no, joint, values));
    }
    if names.is_empty() {
        return Err(syntax(1, 1, "empty game table".into()));
    }
    let mut by_joint = BTreeMap::new();
    for (line_no, joint, values) in rows {
        if by_joint.insert(joint, values).is_some() {
            return Err(syntax(line_no, 1, "joint action listed twice".into()));
        }
    }
    let total: usize = names.iter().map(Vec::len).product();
    if by_joint.len() != total {
        return Err(Error::Input(format!(
            "game table lists {} of the {} joint actions",
            by_joint.len(),
            total
        )));
    }
    let mut table = Vec::with_capacity(total * names.len());
    for values in by_joint.values() {
        table.extend_from_slice(values);
    }
    NormalFormGame::from_table(names, table)
}

pub fn write_nfg_table(game: &NormalFormGame) -> String {
    let mut out = String::new();
    for index in 0..game.num_joint() {
        let joint = game.joint(index);
        let actions: Vec<&str> = joint.iter().enumerate().map(|(p, &a)| game.action_names(p)[a].as_str()).collect();
        let _ = write!(out, "{} :", actions.join(" "));
        for u in game.utilities_at(index) {
            let _ = write!(out, " {}", u);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pennies_table() {
        let g = parse_nfg_table("// coins\nH h : 1 -1\nH t : -1 1\nT h : -1 1\nT t : 1 -1\n").unwrap();
        assert_eq!(g.num_players(), 2);
        assert_eq!(g.action_names(1), &["h", "t"]);
        assert_eq!(g.utility(&[1, 0], 0), -1.0);
    }

    #[test]
    fn order_of_lines_does_not_matter() {
        let a = parse_nfg_table("x y : 1 2\nx z : 3 4\nw y : 5 6\nw z : 7 8").unwrap();
        let b = parse_nfg_table("w z : 7 8\nx y : 1 2\nw y : 5 6\nx z : 3 4").unwrap();
        assert_eq!(a.utility(&[0, 1], 1), 4.0);
        assert_eq!(b.utility(&[1, 1], 0), 1.0);
    }

    #[test]
    fn round_trips() {
        let text = "a c : 1.5 -2\na d : 0 0.1\nb c : 3 4\nb d : -7 1e-3\n";
        let g = parse_nfg_table(text).unwrap();
        assert_eq!(parse_nfg_table(&write_nfg_table(&g)).unwrap(), g);
    }

    #[test]
    fn reports_missing_and_malformed_rows() {
        assert!(matches!(parse_nfg_table("a c : 1 2\nb d : 3 4"), Err(Error::Input(_))));
        match parse_nfg_table("a c : 1 2\nb d 3 4") {
            Err(Error::Parse(e)) => assert_eq!(e.line, 2),
            other => panic!("{:?}", other),
        }
        assert!(parse_nfg_table("a c : 1 x").is_err());
    }
}
