//! Operational semantics: compile process expressions to finite labelled
//! transition systems, detect divergence, normalize to deterministic
//! failures automata, and project onto channel subsets.

pub mod export;
pub mod normalize;
pub mod term;

use std::collections::HashMap;
use std::collections::VecDeque;
use std::sync::Arc;

use crate::syntax::types::{ChanId, Dir, EventId, EventTable};
use crate::syntax::{
    self, ast, eval_expr, flatten_value, set_values, Env, EventPattern, PatPart, ProcessExpr,
    Spec, Value,
};
use crate::util::BitSet;
pub use normalize::{failures_model, normalize, restriction_model, NormLts, NormState};
pub use term::{Label, ProcArena, TermId};

/// Default bound on the number of reachable states per compilation.
pub const DEFAULT_MAX_STATES: usize = 100_000;

/// A finite labelled transition system over the declared alphabet plus the
/// internal action and the termination event. Every state is reachable from
/// the root and termination transitions lead to transition-free states.
#[derive(Clone)]
pub struct Lts {
    pub table: Arc<EventTable>,
    pub root: u32,
    pub trans: Vec<Arc<[(Label, u32)]>>,
}

impl Lts {
    pub fn state_count(&self) -> usize {
        self.trans.len()
    }

    pub fn successors(&self, s: u32) -> &[(Label, u32)] {
        &self.trans[s as usize]
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum CompileError {
    #[error("E_STATE_BUDGET: reachable state count exceeds {budget}; sample trace: {}", render_trace(.sample_trace))]
    StateBudget {
        budget: usize,
        sample_trace: Vec<String>,
    },
    #[error("process `{0}` recurses without guarding events")]
    UnguardedRecursion(String),
    #[error("E_TYPE: {0}")]
    NoMatch(String),
    #[error("E_TYPE: {0}")]
    Eval(String),
    #[error("E_UNBOUND: {0}")]
    Unbound(String),
}

fn render_trace(t: &[String]) -> String {
    if t.is_empty() {
        "<>".to_string()
    } else {
        format!("<{}>", t.join(", "))
    }
}

/// Compile a process expression within `spec` to an LTS, exploring at most
/// `max_states` states.
pub fn compile(spec: &Spec, expr: &ProcessExpr, max_states: usize) -> Result<Lts, CompileError> {
    let mut c = Compiler::new(spec);
    let root = c.lower_closed(expr)?;
    lts_from_term(&mut c.arena, root, max_states)
}

/// Compile a named parameterless process.
pub fn compile_named(spec: &Spec, name: &str, max_states: usize) -> Result<Lts, CompileError> {
    compile(spec, &ProcessExpr::named(name), max_states)
}

/// Lowers surface syntax into arena terms, instantiating process
/// definitions per distinct argument vector.
pub struct Compiler<'s> {
    pub spec: &'s Spec,
    pub arena: ProcArena,
    instances: HashMap<(String, Vec<Value>), term::DefId>,
    pending: Vec<(term::DefId, String, Vec<Value>)>,
}

impl<'s> Compiler<'s> {
    pub fn new(spec: &'s Spec) -> Self {
        Compiler {
            spec,
            arena: ProcArena::new(spec.table.clone()),
            instances: HashMap::new(),
            pending: Vec::new(),
        }
    }

    /// Lower a closed expression (no free value variables).
    pub fn lower_closed(&mut self, expr: &ProcessExpr) -> Result<TermId, CompileError> {
        let root = self.lower(expr, &Vec::new())?;
        self.drain_pending()?;
        Ok(root)
    }

    fn drain_pending(&mut self) -> Result<(), CompileError> {
        while let Some((def, name, args)) = self.pending.pop() {
            let pdef = self
                .spec
                .process(&name)
                .ok_or_else(|| CompileError::Unbound(format!("unknown process `{name}`")))?;
            let env: Env = pdef.params.iter().cloned().zip(args).collect();
            let body = pdef.body.clone();
            let t = self.lower(&body, &env)?;
            self.arena.set_def_body(def, t);
        }
        Ok(())
    }

    fn lower(&mut self, e: &ProcessExpr, env: &Env) -> Result<TermId, CompileError> {
        match e {
            ProcessExpr::Stop => Ok(self.arena.stop()),
            ProcessExpr::Skip => Ok(self.arena.skip()),
            ProcessExpr::Prefix(pat, k) => {
                let matches = self.expand_pattern(pat, env)?;
                let mut alts = Vec::with_capacity(matches.len());
                for (ev, env2) in matches {
                    let kt = self.lower(k, &env2)?;
                    alts.push(self.arena.prefix(ev as u32, kt));
                }
                Ok(self.arena.ext(alts))
            }
            ProcessExpr::ExtChoice(l, r) => {
                let lt = self.lower(l, env)?;
                let rt = self.lower(r, env)?;
                Ok(self.arena.ext(vec![lt, rt]))
            }
            ProcessExpr::IntChoice(l, r) => {
                let lt = self.lower(l, env)?;
                let rt = self.lower(r, env)?;
                Ok(self.arena.int(vec![lt, rt]))
            }
            ProcessExpr::Guard(g, body) => match self.eval_bool(g, env)? {
                true => self.lower(body, env),
                false => Ok(self.arena.stop()),
            },
            ProcessExpr::IfThenElse(c, t, f) => {
                if self.eval_bool(c, env)? {
                    self.lower(t, env)
                } else {
                    self.lower(f, env)
                }
            }
            ProcessExpr::Seq(l, r) => {
                let lt = self.lower(l, env)?;
                let rt = self.lower(r, env)?;
                Ok(self.arena.seq(lt, rt))
            }
            ProcessExpr::Hide(body, set) => {
                let bits = self.channel_set(set)?;
                let sid = self.arena.event_set(bits);
                let bt = self.lower(body, env)?;
                Ok(self.arena.hide(sid, bt))
            }
            ProcessExpr::Rename(body, pairs) => {
                let mut evpairs = Vec::new();
                for (from, to) in pairs {
                    self.expand_rename_pair(from, to, env, &mut evpairs)?;
                }
                let mid = self.arena.rename_map(&evpairs);
                let bt = self.lower(body, env)?;
                Ok(self.arena.rename(mid, bt))
            }
            ProcessExpr::ParSync(l, set, r) => {
                let bits = self.channel_set(set)?;
                let sid = self.arena.event_set(bits);
                let lt = self.lower(l, env)?;
                let rt = self.lower(r, env)?;
                Ok(self.arena.par(sid, lt, rt))
            }
            ProcessExpr::Interleave(l, r) => {
                let empty = BitSet::empty(self.spec.table.len());
                let sid = self.arena.event_set(empty);
                let lt = self.lower(l, env)?;
                let rt = self.lower(r, env)?;
                Ok(self.arena.par(sid, lt, rt))
            }
            ProcessExpr::ReplExtChoice(x, set, body) | ProcessExpr::ReplIntChoice(x, set, body) => {
                let values = set_values(self.spec, set, env)
                    .map_err(|e| CompileError::Eval(e.to_string()))?;
                if values.is_empty() {
                    return Err(CompileError::Eval(
                        "E_EMPTY_REPL: replicated choice over an empty set".into(),
                    ));
                }
                let mut alts = Vec::with_capacity(values.len());
                for v in values {
                    let mut env2 = env.clone();
                    env2.push((x.clone(), v));
                    alts.push(self.lower(body, &env2)?);
                }
                Ok(match e {
                    ProcessExpr::ReplExtChoice(..) => self.arena.ext(alts),
                    _ => self.arena.int(alts),
                })
            }
            ProcessExpr::Ref(name, args) => {
                let vals: Result<Vec<Value>, _> = args
                    .iter()
                    .map(|a| {
                        eval_expr(self.spec, a, env).map_err(|e| CompileError::Eval(e.to_string()))
                    })
                    .collect();
                let vals = vals?;
                let key = (name.clone(), vals.clone());
                if let Some(&d) = self.instances.get(&key) {
                    return Ok(self.arena.call(d));
                }
                let d = self.arena.new_def(name);
                self.instances.insert(key, d);
                self.pending.push((d, name.clone(), vals));
                Ok(self.arena.call(d))
            }
        }
    }

    fn eval_bool(&self, e: &ast::Expr, env: &Env) -> Result<bool, CompileError> {
        match eval_expr(self.spec, e, env) {
            Ok(Value::Bool(b)) => Ok(b),
            Ok(v) => Err(CompileError::Eval(format!(
                "condition evaluated to `{v}`, expected a boolean"
            ))),
            Err(e) => Err(CompileError::Eval(e.to_string())),
        }
    }

    fn channel_set(&self, set: &ast::ChannelSet) -> Result<BitSet, CompileError> {
        let mut bits = BitSet::empty(self.spec.table.len());
        for ch in &set.channels {
            let ci = self
                .spec
                .table
                .channel_id(ch)
                .ok_or_else(|| CompileError::Unbound(format!("unknown channel `{ch}`")))?;
            for e in self.spec.table.events_of_channel(ci) {
                bits.insert(e);
            }
        }
        Ok(bits)
    }

    /// Concrete events matched by a pattern, with the bindings each match
    /// introduces.
    pub fn expand_pattern(
        &self,
        pat: &EventPattern,
        env: &Env,
    ) -> Result<Vec<(EventId, Env)>, CompileError> {
        expand_pattern(self.spec, pat, env)
    }

    fn expand_rename_pair(
        &mut self,
        from: &EventPattern,
        to: &EventPattern,
        env: &Env,
        out: &mut Vec<(u32, u32)>,
    ) -> Result<(), CompileError> {
        // Channel-level shorthand: `c <- d` maps every event of `c` to the
        // value-equal event of `d`.
        if from.parts.is_empty() && to.parts.is_empty() {
            let spec = self.spec;
            let fci = chan_id(spec, &from.channel)?;
            let tci = chan_id(spec, &to.channel)?;
            let fd = &spec.table.channels[fci];
            let td = &spec.table.channels[tci];
            if fd.io_discipline != td.io_discipline {
                return Err(CompileError::Eval(format!(
                    "cannot rename `{}` to `{}`: I/O disciplines differ",
                    from.channel, to.channel
                )));
            }
            for fe in spec.table.events_of_channel(fci) {
                let info = &spec.table.events[fe];
                let te = spec
                    .table
                    .lookup(tci, info.dir, &info.value)
                    .ok_or_else(|| {
                        CompileError::Eval(format!(
                            "cannot rename `{}` to `{}`: `{}` has no counterpart",
                            from.channel,
                            to.channel,
                            spec.table.event_name(fe)
                        ))
                    })?;
                out.push((fe as u32, te as u32));
            }
            return Ok(());
        }
        let fs = self.expand_pattern(from, env)?;
        let ts = self.expand_pattern(to, env)?;
        if fs.len() != 1 || ts.len() != 1 {
            return Err(CompileError::Eval(
                "renaming patterns must each denote a single event".into(),
            ));
        }
        out.push((fs[0].0 as u32, ts[0].0 as u32));
        Ok(())
    }
}

fn chan_id(spec: &Spec, name: &str) -> Result<ChanId, CompileError> {
    spec.table
        .channel_id(name)
        .ok_or_else(|| CompileError::Unbound(format!("unknown channel `{name}`")))
}

/// Pattern expansion against the channel payload (free function so test
/// oracles can reuse it).
pub fn expand_pattern(
    spec: &Spec,
    pat: &EventPattern,
    env: &Env,
) -> Result<Vec<(EventId, Env)>, CompileError> {
    let ci = chan_id(spec, &pat.channel)?;
    let decl = &spec.table.channels[ci];
    let mut parts = pat.parts.as_slice();
    let dir = if decl.io_discipline {
        match parts.first() {
            Some(PatPart::Expr(ast::Expr::Ident(d))) if d == "in" => {
                parts = &parts[1..];
                Dir::In
            }
            Some(PatPart::Expr(ast::Expr::Ident(d))) if d == "out" => {
                parts = &parts[1..];
                Dir::Out
            }
            _ => {
                return Err(CompileError::NoMatch(format!(
                    "channel `{}` requires an `in`/`out` direction component",
                    pat.channel
                )))
            }
        }
    } else {
        Dir::Plain
    };
    let values: Vec<Value> = match decl.payload {
        Some(ty) => spec.type_values(ty).to_vec(),
        None => vec![Value::Unit],
    };
    let mut out = Vec::new();
    for v in &values {
        let flat = match v {
            Value::Unit => Vec::new(),
            other => flatten_value(other),
        };
        if flat.len() != parts.len() {
            continue;
        }
        let mut env2 = env.clone();
        let mut ok = true;
        for (part, comp) in parts.iter().zip(flat.iter()) {
            match part {
                PatPart::Bind(x) => env2.push((x.clone(), comp.clone())),
                PatPart::Expr(e) => match eval_expr(spec, e, &env2) {
                    Ok(val) => {
                        if val != *comp {
                            ok = false;
                            break;
                        }
                    }
                    Err(syntax::EvalError::Unbound(x)) => {
                        return Err(CompileError::Unbound(format!("unbound variable `{x}`")))
                    }
                    Err(e) => return Err(CompileError::Eval(e.to_string())),
                },
            }
        }
        if ok {
            let ev = spec.table.lookup(ci, dir, v).expect("event in table");
            out.push((ev, env2));
        }
    }
    if out.is_empty() {
        return Err(CompileError::NoMatch(format!(
            "no event of channel `{}` matches the pattern",
            pat.channel
        )));
    }
    Ok(out)
}

/// Explore the reachable terms breadth-first and freeze them into an LTS.
pub fn lts_from_term(
    arena: &mut ProcArena,
    root: TermId,
    max_states: usize,
) -> Result<Lts, CompileError> {
    let mut ids: HashMap<TermId, u32> = HashMap::new();
    let mut order: Vec<TermId> = Vec::new();
    let mut parents: Vec<(u32, Label)> = Vec::new();
    let mut queue = VecDeque::new();
    ids.insert(root, 0);
    order.push(root);
    parents.push((0, Label::Tau));
    queue.push_back(root);
    let mut trans: Vec<Vec<(Label, u32)>> = Vec::new();
    while let Some(t) = queue.pop_front() {
        let sid = ids[&t];
        let tt = arena
            .transitions(t)
            .map_err(|term::TermError::UnguardedRecursion(n)| CompileError::UnguardedRecursion(n))?;
        let mut row = Vec::with_capacity(tt.len());
        for &(label, succ) in tt.iter() {
            let next_id = match ids.get(&succ) {
                Some(&i) => i,
                None => {
                    let i = order.len() as u32;
                    if order.len() >= max_states {
                        let sample = trace_to(&parents, sid, &arena.table)
                            .into_iter()
                            .chain(label_name(label, &arena.table))
                            .collect();
                        return Err(CompileError::StateBudget {
                            budget: max_states,
                            sample_trace: sample,
                        });
                    }
                    ids.insert(succ, i);
                    order.push(succ);
                    parents.push((sid, label));
                    queue.push_back(succ);
                    i
                }
            };
            row.push((label, next_id));
        }
        row.sort_unstable();
        row.dedup();
        debug_assert_eq!(sid as usize, trans.len());
        trans.push(row);
    }
    Ok(Lts {
        table: arena.table.clone(),
        root: 0,
        trans: trans.into_iter().map(|r| r.into()).collect(),
    })
}

fn label_name(label: Label, table: &EventTable) -> Option<String> {
    match label {
        Label::Event(e) => Some(table.event_name(e as usize).to_string()),
        _ => None,
    }
}

fn trace_to(parents: &[(u32, Label)], mut s: u32, table: &EventTable) -> Vec<String> {
    let mut out = Vec::new();
    while s != 0 {
        let (p, label) = parents[s as usize];
        if let Some(n) = label_name(label, table) {
            out.push(n);
        }
        s = p;
    }
    out.reverse();
    out
}

/// Quotient an LTS by strong bisimilarity (partition refinement).
///
/// Strong bisimulation preserves every behavioural observation made here,
/// including stable failures; collapsing equivalent states keeps later
/// subset constructions over nondeterministic automata from telling
/// equivalent residues apart.
pub fn reduce_bisim(lts: &Lts) -> Lts {
    let n = lts.state_count();
    let mut class: Vec<u32> = vec![0; n];
    let mut class_count = 1usize;
    loop {
        let mut ids: HashMap<Vec<(Label, u32)>, u32> = HashMap::new();
        let mut next: Vec<u32> = vec![0; n];
        for s in 0..n {
            let mut sig: Vec<(Label, u32)> = lts.trans[s]
                .iter()
                .map(|&(l, t)| (l, class[t as usize]))
                .collect();
            sig.sort_unstable();
            sig.dedup();
            // Include the current class so refinement never merges.
            sig.push((Label::Tau, u32::MAX - class[s]));
            let fresh = ids.len() as u32;
            next[s] = *ids.entry(sig).or_insert(fresh);
        }
        let stable = ids.len() == class_count;
        class_count = ids.len();
        class = next;
        if stable {
            break;
        }
    }
    // Renumber breadth-first from the root for determinism.
    let mut order: HashMap<u32, u32> = HashMap::new();
    let mut repr: Vec<u32> = Vec::new();
    let mut queue: VecDeque<u32> = VecDeque::new();
    order.insert(class[lts.root as usize], 0);
    repr.push(lts.root);
    queue.push_back(lts.root);
    while let Some(s) = queue.pop_front() {
        for &(_, t) in lts.successors(s) {
            let c = class[t as usize];
            if let std::collections::hash_map::Entry::Vacant(v) = order.entry(c) {
                v.insert(repr.len() as u32);
                repr.push(t);
                queue.push_back(t);
            }
        }
    }
    let trans: Vec<Arc<[(Label, u32)]>> = repr
        .iter()
        .map(|&r| {
            let mut row: Vec<(Label, u32)> = lts.trans[r as usize]
                .iter()
                .map(|&(l, t)| (l, order[&class[t as usize]]))
                .collect();
            row.sort_unstable();
            row.dedup();
            row.into()
        })
        .collect();
    Lts {
        table: lts.table.clone(),
        root: 0,
        trans,
    }
}

// ---------------------------------------------------------------------------
// Divergence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DivergenceVerdict {
    Pass,
    /// A reachable internal-action cycle exists; the trace leads to a state
    /// on such a cycle.
    Fail { trace: Vec<EventId> },
}

/// PASS iff no reachable cycle of internal actions exists.
pub fn check_divergence_free(lts: &Lts) -> DivergenceVerdict {
    match states_on_tau_cycles(lts) {
        None => DivergenceVerdict::Pass,
        Some(marks) => DivergenceVerdict::Fail {
            trace: shortest_trace_to(lts, &marks),
        },
    }
}

/// Set of states that lie on a cycle of tau edges, or `None` if none do.
pub(crate) fn states_on_tau_cycles(lts: &Lts) -> Option<Vec<bool>> {
    // Iterative DFS over tau edges with three colours.
    let n = lts.state_count();
    let mut colour = vec![0u8; n]; // 0 = white, 1 = on stack, 2 = done
    let mut on_cycle = vec![false; n];
    let mut any = false;
    let mut stack: Vec<(u32, usize)> = Vec::new();
    let mut path: Vec<u32> = Vec::new();
    for start in 0..n as u32 {
        if colour[start as usize] != 0 {
            continue;
        }
        stack.push((start, 0));
        path.push(start);
        colour[start as usize] = 1;
        while let Some(&mut (s, ref mut idx)) = stack.last_mut() {
            let next = lts.successors(s)
                .iter()
                .filter_map(|&(l, t)| (l == Label::Tau).then_some(t))
                .nth(*idx);
            match next {
                Some(t) => {
                    *idx += 1;
                    match colour[t as usize] {
                        0 => {
                            colour[t as usize] = 1;
                            stack.push((t, 0));
                            path.push(t);
                        }
                        1 => {
                            // Back edge: everything from t on the path is cyclic.
                            any = true;
                            let from = path.iter().position(|&x| x == t).unwrap();
                            for &x in &path[from..] {
                                on_cycle[x as usize] = true;
                            }
                        }
                        _ => {}
                    }
                }
                None => {
                    colour[s as usize] = 2;
                    stack.pop();
                    path.pop();
                }
            }
        }
    }
    any.then_some(on_cycle)
}

/// Shortest trace (visible events only) to any marked state; tau edges are
/// free, so the trace minimizes visible length.
fn shortest_trace_to(lts: &Lts, marks: &[bool]) -> Vec<EventId> {
    let n = lts.state_count();
    let mut dist = vec![usize::MAX; n];
    let mut parent: Vec<Option<(u32, Option<EventId>)>> = vec![None; n];
    let mut dq: VecDeque<u32> = VecDeque::new();
    dist[lts.root as usize] = 0;
    dq.push_back(lts.root);
    let mut best: Option<u32> = None;
    while let Some(s) = dq.pop_front() {
        if marks[s as usize] {
            best = Some(s);
            break;
        }
        for &(label, t) in lts.successors(s) {
            let (cost, ev) = match label {
                Label::Tau => (0usize, None),
                Label::Tick => continue,
                Label::Event(e) => (1, Some(e as EventId)),
            };
            let nd = dist[s as usize].saturating_add(cost);
            if nd < dist[t as usize] {
                dist[t as usize] = nd;
                parent[t as usize] = Some((s, ev));
                if cost == 0 {
                    dq.push_front(t);
                } else {
                    dq.push_back(t);
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut cur = best.expect("marked state reachable");
    while let Some((p, ev)) = parent[cur as usize] {
        if let Some(e) = ev {
            out.push(e);
        }
        cur = p;
    }
    out.reverse();
    out
}

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

/// Replace every visible event outside `channels` by the internal action.
/// Divergence introduced here surfaces when the result is normalized.
pub fn project(lts: &Lts, channels: &[ChanId]) -> Lts {
    let keep: Vec<bool> = (0..lts.table.declared_len())
        .map(|e| channels.contains(&lts.table.channel_of(e)))
        .collect();
    let trans = lts
        .trans
        .iter()
        .map(|row| {
            let mut out: Vec<(Label, u32)> = row
                .iter()
                .map(|&(label, t)| match label {
                    Label::Event(e) if !keep.get(e as usize).copied().unwrap_or(false) => {
                        (Label::Tau, t)
                    }
                    other => (other, t),
                })
                .collect();
            out.sort_unstable();
            out.dedup();
            out.into()
        })
        .collect();
    Lts {
        table: lts.table.clone(),
        root: lts.root,
        trans,
    }
}

/// Projection by channel name.
pub fn project_names(lts: &Lts, channels: &[&str]) -> Lts {
    let ids: Vec<ChanId> = channels
        .iter()
        .filter_map(|n| lts.table.channel_id(n))
        .collect();
    project(lts, &ids)
}
