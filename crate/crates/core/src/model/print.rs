use core::fmt;

use super::*;
use crate::expr::Prec;

fn actions(f: &mut fmt::Formatter<'_>, list: &[String]) -> fmt::Result {
    write!(f, "[")?;
    for (i, a) in list.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{}", a)?;
    }
    write!(f, "]")
}

impl fmt::Display for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.prob {
            write!(f, "{} : ", Prec(p, 1))?;
        }
        if self.assignments.is_empty() {
            return write!(f, "true");
        }
        for (i, a) in self.assignments.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            write!(f, "({}'={})", a.var, a.value)?;
        }
        Ok(())
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        actions(f, &self.actions)?;
        write!(f, " {} -> ", self.guard)?;
        for (i, u) in self.updates.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", u)?;
        }
        write!(f, ";")
    }
}

impl fmt::Display for ModelAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "csg")?;
        if !self.constants.is_empty() {
            writeln!(f)?;
        }
        for c in &self.constants {
            let ty = match c.ty {
                ConstType::Int => "int",
                ConstType::Double => "double",
                ConstType::Bool => "bool",
            };
            match &c.value {
                Some(v) => writeln!(f, "const {} {} = {};", ty, c.name, v)?,
                None => writeln!(f, "const {} {};", ty, c.name)?,
            }
        }
        if !self.players.is_empty() {
            writeln!(f)?;
        }
        for p in &self.players {
            write!(f, "player {}", p.name)?;
            let mut first = true;
            for m in &p.modules {
                write!(f, "{} {}", if first { "" } else { "," }, m)?;
                first = false;
            }
            for a in &p.actions {
                write!(f, "{} [{}]", if first { "" } else { "," }, a)?;
                first = false;
            }
            writeln!(f, " endplayer")?;
        }
        for m in &self.modules {
            writeln!(f, "\nmodule {}", m.name)?;
            for v in &m.variables {
                match &v.ty {
                    VarType::Bool => write!(f, "  {} : bool", v.name)?,
                    VarType::Range(lo, hi) => write!(f, "  {} : [{}..{}]", v.name, lo, hi)?,
                }
                if let Some(init) = &v.init {
                    write!(f, " init {}", init)?;
                }
                writeln!(f, ";")?;
            }
            for c in &m.commands {
                writeln!(f, "  {}", c)?;
            }
            writeln!(f, "endmodule")?;
        }
        for r in &self.rewards {
            writeln!(f, "\nrewards \"{}\"", r.name)?;
            for item in &r.items {
                write!(f, "  ")?;
                if let Some(list) = &item.actions {
                    actions(f, list)?;
                    write!(f, " ")?;
                }
                writeln!(f, "{} : {};", Prec(&item.guard, 1), item.value)?;
            }
            writeln!(f, "endrewards")?;
        }
        if !self.labels.is_empty() {
            writeln!(f)?;
        }
        for l in &self.labels {
            writeln!(f, "label \"{}\" = {};", l.name, l.expr)?;
        }
        Ok(())
    }
}
