use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::*;
use crate::error::{ParseError, Result};
use crate::expr::parse_expr;
use crate::lexer::{Tok, TokenStream};

const KEYWORDS: &[&str] = &[
    "csg", "const", "int", "double", "bool", "player", "endplayer", "module", "endmodule", "rewards", "endrewards",
    "label", "init", "true", "false",
];

type PResult<T> = core::result::Result<T, ParseError>;

/// Parses a model file.
pub fn parse_model(text: &str) -> Result<ModelAst> {
    let mut ts = TokenStream::new(text)?;
    Ok(Parser { ts: &mut ts, names: Vec::new() }.model()?)
}

struct Parser<'a> {
    ts: &'a mut TokenStream,
    /// Declared (namespace, name) pairs, for duplicate detection.
    names: Vec<(&'static str, String)>,
}

impl Parser<'_> {
    fn declare(&mut self, space: &'static str, name: String) -> PResult<String> {
        if self.names.iter().any(|(s, n)| *s == space && *n == name) {
            return Err(self.ts.error(format!("duplicate identifier '{}'", name), &[]));
        }
        self.names.push((space, name.clone()));
        Ok(name)
    }

    fn ident(&mut self) -> PResult<String> {
        if let Tok::Ident(s) = self.ts.peek() {
            if KEYWORDS.contains(&s.as_str()) {
                return Err(self.ts.error(format!("keyword '{}' used as a name", s), &["identifier"]));
            }
        }
        self.ts.expect_ident()
    }

    fn model(&mut self) -> PResult<ModelAst> {
        let mut ast = ModelAst::default();
        self.ts.expect_kw("csg")?;
        loop {
            if self.ts.at_eof() {
                return Ok(ast);
            } else if self.ts.eat_kw("const") {
                ast.constants.push(self.constant()?);
            } else if self.ts.eat_kw("player") {
                ast.players.push(self.player()?);
            } else if self.ts.eat_kw("module") {
                ast.modules.push(self.module()?);
            } else if self.ts.eat_kw("rewards") {
                ast.rewards.push(self.rewards()?);
            } else if self.ts.eat_kw("label") {
                ast.labels.push(self.label()?);
            } else {
                return Err(self.ts.unexpected(&["const", "player", "module", "rewards", "label", "end of input"]));
            }
        }
    }

    fn constant(&mut self) -> PResult<ConstDecl> {
        let ty = if self.ts.eat_kw("int") {
            ConstType::Int
        } else if self.ts.eat_kw("double") {
            ConstType::Double
        } else if self.ts.eat_kw("bool") {
            ConstType::Bool
        } else {
            ConstType::Int
        };
        let name = self.ident()?;
        let name = self.declare("value", name)?;
        let value = if self.ts.eat_sym("=") { Some(parse_expr(self.ts)?) } else { None };
        self.ts.expect_sym(";")?;
        Ok(ConstDecl { name, ty, value })
    }

    fn action_list(&mut self) -> PResult<Vec<String>> {
        self.ts.expect_sym("[")?;
        let mut actions = Vec::new();
        loop {
            actions.push(self.ident()?);
            if !self.ts.eat_sym(",") {
                break;
            }
        }
        self.ts.expect_sym("]")?;
        Ok(actions)
    }

    fn player(&mut self) -> PResult<PlayerDecl> {
        let name = self.ident()?;
        let name = self.declare("player", name)?;
        let mut p = PlayerDecl { name, modules: Vec::new(), actions: Vec::new() };
        loop {
            if self.ts.eat_kw("endplayer") {
                return Ok(p);
            }
            if self.ts.is_sym("[") {
                p.actions.extend(self.action_list()?);
            } else {
                p.modules.push(self.ident()?);
            }
            self.ts.eat_sym(",");
        }
    }

    fn module(&mut self) -> PResult<Module> {
        let name = self.ident()?;
        let name = self.declare("module", name)?;
        let mut m = Module { name, variables: Vec::new(), commands: Vec::new() };
        loop {
            if self.ts.eat_kw("endmodule") {
                return Ok(m);
            }
            if self.ts.is_sym("[") {
                m.commands.push(self.command()?);
            } else if matches!(self.ts.peek(), Tok::Ident(_)) {
                m.variables.push(self.variable()?);
            } else {
                return Err(self.ts.unexpected(&["variable", "[", "endmodule"]));
            }
        }
    }

    fn variable(&mut self) -> PResult<VarDecl> {
        let name = self.ident()?;
        let name = self.declare("value", name)?;
        self.ts.expect_sym(":")?;
        let ty = if self.ts.eat_kw("bool") {
            VarType::Bool
        } else {
            self.ts.expect_sym("[")?;
            let lo = parse_expr(self.ts)?;
            self.ts.expect_sym("..")?;
            let hi = parse_expr(self.ts)?;
            self.ts.expect_sym("]")?;
            VarType::Range(lo, hi)
        };
        let init = if self.ts.eat_kw("init") { Some(parse_expr(self.ts)?) } else { None };
        self.ts.expect_sym(";")?;
        Ok(VarDecl { name, ty, init })
    }

    fn command(&mut self) -> PResult<Command> {
        let actions = self.action_list()?;
        let guard = parse_expr(self.ts)?;
        self.ts.expect_sym("->")?;
        let mut updates = Vec::new();
        loop {
            updates.push(self.update()?);
            if !self.ts.eat_sym("+") {
                break;
            }
        }
        self.ts.expect_sym(";")?;
        Ok(Command { actions, guard, updates })
    }

    fn at_assignments(&self) -> bool {
        let primed = matches!(self.ts.peek_at(1), Tok::Ident(_)) && matches!(self.ts.peek_at(2), Tok::Sym("'"));
        (self.ts.is_sym("(") && primed)
            || (self.ts.is_kw("true") && matches!(self.ts.peek_at(1), Tok::Sym(";") | Tok::Sym("+")))
    }

    fn update(&mut self) -> PResult<Update> {
        let prob = if self.at_assignments() {
            None
        } else {
            let p = parse_expr(self.ts)?;
            self.ts.expect_sym(":")?;
            Some(p)
        };
        let mut assignments = Vec::new();
        if !self.ts.eat_kw("true") {
            loop {
                self.ts.expect_sym("(")?;
                let var = self.ident()?;
                self.ts.expect_sym("'")?;
                self.ts.expect_sym("=")?;
                let value = parse_expr(self.ts)?;
                self.ts.expect_sym(")")?;
                assignments.push(Assignment { var, value });
                if !self.ts.eat_sym("&") {
                    break;
                }
            }
        }
        Ok(Update { prob, assignments })
    }

    fn rewards(&mut self) -> PResult<RewardBlock> {
        let name = self.ts.expect_str()?;
        let name = self.declare("rewards", name)?;
        let mut items = Vec::new();
        loop {
            if self.ts.eat_kw("endrewards") {
                return Ok(RewardBlock { name, items });
            }
            let actions = if self.ts.is_sym("[") { Some(self.action_list()?) } else { None };
            let guard = parse_expr(self.ts)?;
            self.ts.expect_sym(":")?;
            let value = parse_expr(self.ts)?;
            self.ts.expect_sym(";")?;
            items.push(RewardItem { actions, guard, value });
        }
    }

    fn label(&mut self) -> PResult<LabelDecl> {
        let name = self.ts.expect_str()?;
        let name = self.declare("label", name)?;
        self.ts.expect_sym("=")?;
        let expr = parse_expr(self.ts)?;
        self.ts.expect_sym(";")?;
        Ok(LabelDecl { name, expr })
    }
}
