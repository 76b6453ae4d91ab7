//! Reachable-state exploration of a parsed model.
//!
//! Semantics, per state:
//! - an action is available to its owner when one of the owner's modules
//!   has an enabled command whose action list contains it; a player without
//!   available actions idles;
//! - for every joint action, each module fires its most specific enabled
//!   command whose action list is contained in the chosen actions (a module
//!   with no such command keeps its variables);
//! - the updates of the firing commands are combined independently, reading
//!   the current state; two firing commands writing one variable is an error.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::error::{bail, Error, Result};
use crate::expr::{evaluate_closed, Binding, Value};
use crate::game::{Csg, CsgBuilder, Symbols, IDLE};
use crate::num::MODEL_TOLERANCE;


struct Var {
    name: String,
    low: i64,
    high: i64,
    boolean: bool,
}

struct RUpdate {
    prob: Option<Expr>,
    assignments: Vec<(usize, Expr)>,
}

struct RCommand {
    module: usize,
    /// Global action ids.
    actions: Vec<usize>,
    guard: Expr,
    updates: Vec<RUpdate>,
    text: String,
}

struct RReward {
    actions: Option<Vec<usize>>,
    guard: Expr,
    value: Expr,
}

fn coerce(name: &str, ty: ConstType, v: Value) -> Result<Value> {
    Ok(match (ty, v) {
        (ConstType::Int, Value::Int(_)) | (ConstType::Double, Value::Real(_)) | (ConstType::Bool, Value::Bool(_)) => v,
        (ConstType::Double, Value::Int(i)) => Value::Real(i as f64),
        _ => bail!(Elaboration, "constant '{}' has the wrong type for value {}", name, v),
    })
}

fn constants(ast: &ModelAst, bindings: &[(String, Value)]) -> Result<Vec<(String, Value)>> {
    for (name, _) in bindings {
        if !ast.constants.iter().any(|c| &c.name == name) {
            bail!(Elaboration, "binding for unknown constant '{}'", name);
        }
    }
    let mut out: Vec<(String, Value)> = Vec::new();
    for c in &ast.constants {
        let v = if let Some((_, v)) = bindings.iter().find(|(n, _)| n == &c.name) {
            *v
        } else if let Some(e) = &c.value {
            evaluate_closed(e, &out).map_err(|e| Error::Elaboration(format!("constant '{}': {}", c.name, e)))?
        } else {
            bail!(Elaboration, "constant '{}' is undefined and needs a binding", c.name);
        };
        out.push((c.name.clone(), coerce(&c.name, c.ty, v)?));
    }
    Ok(out)
}

fn int_of(v: Value, what: &str) -> Result<i64> {
    match v {
        Value::Int(i) => Ok(i),
        other => bail!(Elaboration, "{} must be an integer, got {}", what, other),
    }
}

/// Owner of every action and the global action order.
fn action_owners(ast: &ModelAst, module_owner: &[usize]) -> Result<(Vec<String>, Vec<usize>)> {
    let mut order: Vec<String> = Vec::new();
    let note = |a: &String, order: &mut Vec<String>| {
        if !order.contains(a) {
            order.push(a.clone());
        }
    };
    for p in &ast.players {
        p.actions.iter().for_each(|a| note(a, &mut order));
    }
    for m in &ast.modules {
        for c in &m.commands {
            c.actions.iter().for_each(|a| note(a, &mut order));
        }
    }
    let mut owner: Vec<Option<usize>> = vec![None; order.len()];
    let id = |a: &str, order: &[String]| order.iter().position(|x| x == a).expect("noted");
    let claim = |a: &str, p: usize, owner: &mut Vec<Option<usize>>| -> Result<()> {
        let i = id(a, &order);
        match owner[i] {
            Some(q) if q != p => bail!(
                Elaboration,
                "action '{}' is claimed by players '{}' and '{}'",
                a,
                ast.players[q].name,
                ast.players[p].name
            ),
            _ => owner[i] = Some(p),
        }
        Ok(())
    };
    for (p, decl) in ast.players.iter().enumerate() {
        for a in &decl.actions {
            claim(a, p, &mut owner)?;
        }
    }
    for (m, module) in ast.modules.iter().enumerate() {
        for c in module.commands.iter().filter(|c| c.actions.len() == 1) {
            claim(&c.actions[0], module_owner[m], &mut owner)?;
        }
    }
    // remaining actions belong to the unique player whose modules use them
    for (i, a) in order.iter().enumerate() {
        if owner[i].is_some() {
            continue;
        }
        let mut candidates: Vec<usize> = Vec::new();
        for (m, module) in ast.modules.iter().enumerate() {
            if module.commands.iter().any(|c| c.actions.contains(a)) && !candidates.contains(&module_owner[m]) {
                candidates.push(module_owner[m]);
            }
        }
        match candidates.as_slice() {
            [p] => owner[i] = Some(*p),
            _ => bail!(
                Elaboration,
                "cannot tell which player owns action '{}'; list it in a player block as [{}]",
                a,
                a
            ),
        }
    }
    Ok((order, owner.into_iter().map(|o| o.expect("assigned")).collect()))
}

fn valuation_name(vars: &[Var], v: &[i64]) -> String {
    let mut s = String::new();
    for (i, (var, x)) in vars.iter().zip(v).enumerate() {
        if i > 0 {
            s.push(',');
        }
        if var.boolean {
            s.push_str(&format!("{}={}", var.name, *x == 1));
        } else {
            s.push_str(&format!("{}={}", var.name, x));
        }
    }
    s
}

/// Builds the explicit game reachable from the initial valuation.
/// `bindings` give or override constant values.
pub fn elaborate(ast: &ModelAst, bindings: &[(String, Value)]) -> Result<Csg> {
    let consts = constants(ast, bindings)?;
    let value_of = |e: &Expr, what: &str| -> Result<Value> {
        evaluate_closed(e, &consts).map_err(|err| Error::Elaboration(format!("{}: {}", what, err)))
    };

    // variables
    let mut vars: Vec<Var> = Vec::new();
    let mut init: Vec<i64> = Vec::new();
    for m in &ast.modules {
        for v in &m.variables {
            let (low, high, boolean) = match &v.ty {
                VarType::Bool => (0, 1, true),
                VarType::Range(lo, hi) => (
                    int_of(value_of(lo, &v.name)?, "a range bound")?,
                    int_of(value_of(hi, &v.name)?, "a range bound")?,
                    false,
                ),
            };
            if low > high {
                bail!(Elaboration, "variable '{}' has the empty range [{}..{}]", v.name, low, high);
            }
            let start = match (&v.init, boolean) {
                (None, _) => low,
                (Some(e), true) => i64::from(value_of(e, &v.name)?.as_bool()?),
                (Some(e), false) => int_of(value_of(e, &v.name)?, "an initial value")?,
            };
            if start < low || start > high {
                bail!(Elaboration, "initial value {} of '{}' is outside [{}..{}]", start, v.name, low, high);
            }
            vars.push(Var { name: v.name.clone(), low, high, boolean });
            init.push(start);
        }
    }
    let lookup = |name: &str| -> Option<Binding> {
        if let Some(i) = vars.iter().position(|v| v.name == name) {
            return Some(if vars[i].boolean { Binding::BoolVar(i) } else { Binding::Var(i) });
        }
        consts.iter().find(|(n, _)| n == name).map(|(_, v)| Binding::Const(*v))
    };
    let var_index = |name: &str| -> Result<usize> {
        vars.iter().position(|v| v.name == name).ok_or_else(|| Error::Elaboration(format!("assignment to unknown variable '{}'", name)))
    };

    // players and module ownership
    if ast.players.is_empty() {
        bail!(Elaboration, "the model declares no players");
    }
    let mut module_owner = vec![usize::MAX; ast.modules.len()];
    for (p, decl) in ast.players.iter().enumerate() {
        for name in &decl.modules {
            let Some(m) = ast.modules.iter().position(|m| &m.name == name) else {
                bail!(Elaboration, "player '{}' lists unknown module '{}'", decl.name, name);
            };
            if module_owner[m] != usize::MAX {
                bail!(Elaboration, "module '{}' belongs to more than one player", name);
            }
            module_owner[m] = p;
        }
    }
    if let Some(m) = module_owner.iter().position(|&o| o == usize::MAX) {
        bail!(Elaboration, "module '{}' belongs to no player", ast.modules[m].name);
    }
    let (actions, owner) = action_owners(ast, &module_owner)?;
    let n = ast.players.len();
    // per-player action names and the local id (idle is 0) of every action
    let mut player_actions: Vec<Vec<String>> = vec![Vec::new(); n];
    let mut local_id = vec![0; actions.len()];
    for (a, name) in actions.iter().enumerate() {
        player_actions[owner[a]].push(name.clone());
        local_id[a] = player_actions[owner[a]].len();
    }
    let action_id = |name: &str| -> Result<usize> {
        actions.iter().position(|a| a == name).ok_or_else(|| Error::Elaboration(format!("unknown action '{}'", name)))
    };

    // resolved commands
    let mut commands: Vec<RCommand> = Vec::new();
    for (m, module) in ast.modules.iter().enumerate() {
        for c in &module.commands {
            let text = format!("{} (module {})", c, module.name);
            let ctx = |e: Error| Error::Elaboration(format!("{}: {}", text, e));
            let mut updates = Vec::new();
            for u in &c.updates {
                let prob = u.prob.as_ref().map(|p| p.resolve(&lookup)).transpose().map_err(ctx)?;
                let mut assignments = Vec::new();
                for a in &u.assignments {
                    let v = var_index(&a.var)?;
                    if assignments.iter().any(|(w, _)| *w == v) {
                        bail!(Elaboration, "{}: variable '{}' assigned twice", text, a.var);
                    }
                    assignments.push((v, a.value.resolve(&lookup).map_err(ctx)?));
                }
                updates.push(RUpdate { prob, assignments });
            }
            commands.push(RCommand {
                module: m,
                actions: c.actions.iter().map(|a| action_id(a)).collect::<Result<_>>()?,
                guard: c.guard.resolve(&lookup).map_err(ctx)?,
                updates,
                text,
            });
        }
    }
    let mut rewards: Vec<(String, Vec<RReward>)> = Vec::new();
    for r in &ast.rewards {
        let mut items = Vec::new();
        for item in &r.items {
            let ctx = |e: Error| Error::Elaboration(format!("rewards \"{}\": {}", r.name, e));
            items.push(RReward {
                actions: item.actions.as_ref().map(|l| l.iter().map(|a| action_id(a)).collect::<Result<Vec<_>>>()).transpose()?,
                guard: item.guard.resolve(&lookup).map_err(ctx)?,
                value: item.value.resolve(&lookup).map_err(ctx)?,
            });
        }
        rewards.push((r.name.clone(), items));
    }
    let labels: Vec<(String, Expr)> = ast
        .labels
        .iter()
        .map(|l| Ok((l.name.clone(), l.expr.resolve(&lookup).map_err(|e| Error::Elaboration(format!("label \"{}\": {}", l.name, e)))?)))
        .collect::<Result<_>>()?;

    // exploration
    let mut index: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut states: Vec<Vec<i64>> = vec![init.clone()];
    index.insert(init, 0);
    let mut queue: VecDeque<usize> = VecDeque::from([0]);
    // (state, joint, successors, chosen global actions)
    let mut transitions: Vec<(usize, Vec<usize>, Vec<(usize, f64)>, Vec<usize>)> = Vec::new();
    while let Some(s) = queue.pop_front() {
        let v = states[s].clone();
        let here = || valuation_name(&vars, &v);
        let mut enabled = vec![false; commands.len()];
        for (i, c) in commands.iter().enumerate() {
            enabled[i] = c.guard.eval_bool(&v).map_err(|e| Error::Elaboration(format!("guard of {} in state {}: {}", c.text, here(), e)))?;
        }
        // available global actions per player
        let mut avail: Vec<Vec<Option<usize>>> = vec![Vec::new(); n];
        for (a, &p) in owner.iter().enumerate() {
            let usable = commands
                .iter()
                .enumerate()
                .any(|(i, c)| enabled[i] && module_owner[c.module] == p && c.actions.contains(&a));
            if usable {
                avail[p].push(Some(a));
            }
        }
        for list in &mut avail {
            if list.is_empty() {
                list.push(None);
            }
        }
        let mut choice = vec![0usize; n];
        'joints: loop {
            let chosen: Vec<usize> = (0..n).filter_map(|p| avail[p][choice[p]]).collect();
            // the most specific applicable command of every module
            let mut firing: Vec<usize> = Vec::new();
            for m in 0..ast.modules.len() {
                let applicable: Vec<usize> = (0..commands.len())
                    .filter(|&i| {
                        let c = &commands[i];
                        c.module == m && enabled[i] && c.actions.iter().all(|a| chosen.contains(a))
                    })
                    .collect();
                let Some(size) = applicable.iter().map(|&i| commands[i].actions.len()).max() else {
                    continue;
                };
                let mut top = applicable.into_iter().filter(|&i| commands[i].actions.len() == size);
                let best = top.next();
                if let Some(other) = top.next() {
                    bail!(
                        Elaboration,
                        "in state {} both {} and {} apply to the same joint action",
                        here(),
                        commands[best.expect("nonempty")].text,
                        commands[other].text
                    );
                }
                firing.extend(best);
            }
            // product of the update distributions
            let mut outcomes: Vec<(Vec<(usize, i64, usize)>, f64)> = vec![(Vec::new(), 1.0)];
            for &ci in &firing {
                let c = &commands[ci];
                let mut dist: Vec<(Vec<(usize, i64)>, f64)> = Vec::new();
                for u in &c.updates {
                    let p = match &u.prob {
                        None => 1.0,
                        Some(e) => e
                            .eval(&v)
                            .and_then(Value::as_f64)
                            .map_err(|e| Error::Elaboration(format!("probability in {} at state {}: {}", c.text, here(), e)))?,
                    };
                    if !(-MODEL_TOLERANCE..=1.0 + MODEL_TOLERANCE).contains(&p) {
                        bail!(Elaboration, "probability {} outside [0,1] in {} at state {}", p, c.text, here());
                    }
                    let mut assigned = Vec::new();
                    for (var, e) in &u.assignments {
                        let value = e.eval(&v).map_err(|e| Error::Elaboration(format!("{} at state {}: {}", c.text, here(), e)))?;
                        let x = match (vars[*var].boolean, value) {
                            (true, Value::Bool(b)) => i64::from(b),
                            (false, Value::Int(i)) => i,
                            (_, other) => bail!(Elaboration, "{} at state {}: cannot assign {} to '{}'", c.text, here(), other, vars[*var].name),
                        };
                        if x < vars[*var].low || x > vars[*var].high {
                            bail!(
                                Elaboration,
                                "{} at state {}: value {} of '{}' is outside [{}..{}]",
                                c.text,
                                here(),
                                x,
                                vars[*var].name,
                                vars[*var].low,
                                vars[*var].high
                            );
                        }
                        assigned.push((*var, x));
                    }
                    dist.push((assigned, p.max(0.0)));
                }
                let total: f64 = dist.iter().map(|d| d.1).sum();
                if (total - 1.0).abs() > MODEL_TOLERANCE {
                    bail!(Elaboration, "probabilities of {} sum to {} at state {}", c.text, total, here());
                }
                let mut next = Vec::new();
                for (writes, p) in &outcomes {
                    for (assigned, q) in &dist {
                        if *q == 0.0 {
                            continue;
                        }
                        let mut w = writes.clone();
                        for &(var, x) in assigned {
                            if let Some(&(_, _, other)) = w.iter().find(|(v2, _, _)| *v2 == var) {
                                bail!(
                                    Elaboration,
                                    "in state {} {} and {} both write '{}'",
                                    here(),
                                    commands[other].text,
                                    c.text,
                                    vars[var].name
                                );
                            }
                            w.push((var, x, ci));
                        }
                        next.push((w, p * q / total));
                    }
                }
                outcomes = next;
            }
            let mut succ: Vec<(usize, f64)> = Vec::new();
            for (writes, p) in outcomes {
                let mut t = v.clone();
                for (var, x, _) in writes {
                    t[var] = x;
                }
                let id = match index.get(&t) {
                    Some(&id) => id,
                    None => {
                        let id = states.len();
                        index.insert(t.clone(), id);
                        states.push(t);
                        queue.push_back(id);
                        id
                    }
                };
                match succ.iter_mut().find(|(x, _)| *x == id) {
                    Some(e) => e.1 += p,
                    None => succ.push((id, p)),
                }
            }
            let joint: Vec<usize> = (0..n).map(|p| avail[p][choice[p]].map_or(IDLE, |a| local_id[a])).collect();
            transitions.push((s, joint, succ, chosen));

            // next joint action, last player fastest
            let mut p = n;
            loop {
                if p == 0 {
                    break 'joints;
                }
                p -= 1;
                choice[p] += 1;
                if choice[p] < avail[p].len() {
                    break;
                }
                choice[p] = 0;
            }
        }
    }

    let mut b = CsgBuilder::new();
    for (p, decl) in ast.players.iter().enumerate() {
        b.add_player(&decl.name, &player_actions[p]);
    }
    b.add_states(states.len());
    b.state_names(states.iter().map(|v| valuation_name(&vars, v)).collect());
    b.initial(0);
    for (name, expr) in &labels {
        let mut members = Vec::new();
        for (s, v) in states.iter().enumerate() {
            if expr.eval_bool(v).map_err(|e| Error::Elaboration(format!("label \"{}\": {}", name, e)))? {
                members.push(s);
            }
        }
        b.label(name, &members);
    }
    for (name, items) in &rewards {
        let r = b.reward_structure(name);
        let value = |item: &RReward, v: &[i64]| -> Result<f64> {
            let ctx = |e: Error| Error::Elaboration(format!("rewards \"{}\": {}", name, e));
            if item.guard.eval_bool(v).map_err(ctx)? {
                item.value.eval(v).and_then(Value::as_f64).map_err(ctx)
            } else {
                Ok(0.0)
            }
        };
        for (s, v) in states.iter().enumerate() {
            let mut total = 0.0;
            for item in items.iter().filter(|i| i.actions.is_none()) {
                total += value(item, v)?;
            }
            if total != 0.0 {
                b.state_reward(r, s, total);
            }
        }
        for (s, joint, _, chosen) in &transitions {
            let mut total = 0.0;
            for item in items {
                if let Some(list) = &item.actions {
                    if list.iter().all(|a| chosen.contains(a)) {
                        total += value(item, &states[*s])?;
                    }
                }
            }
            if total != 0.0 {
                b.action_reward(r, *s, joint.clone(), total);
            }
        }
    }
    for (s, joint, succ, _) in transitions {
        b.transition(s, joint, succ);
    }
    b.symbols(Symbols {
        variables: vars.iter().map(|v| v.name.to_string()).collect(),
        valuations: states,
        constants: consts,
    });
    let game = b.build()?;
    crate::game::ensure_valid(&game)?;
    Ok(game)
}
