//! Closed process terms and their operational transition rules.
//!
//! Compilation lowers the surface syntax (with patterns, guards and value
//! parameters) into this term algebra over concrete events; automaton
//! constructions elsewhere in the crate build terms directly. Terms are
//! hash-consed in an arena and transitions are memoized per term, so the
//! reachable term graph doubles as the state space of the compiled LTS.

use std::collections::HashMap;
use std::sync::Arc;

use crate::syntax::types::EventTable;
use crate::util::BitSet;

pub type TermId = u32;
pub type SetId = u32;
pub type MapId = u32;
pub type DefId = u32;

/// Transition label: a visible event, the internal action, or termination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Event(u32),
    Tau,
    Tick,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum TermNode {
    Stop,
    /// Terminated; the target of every `Tick`.
    Omega,
    Skip,
    Prefix(u32, TermId),
    Ext(Box<[TermId]>),
    Int(Box<[TermId]>),
    Seq(TermId, TermId),
    Par(SetId, TermId, TermId),
    Hide(SetId, TermId),
    Rename(MapId, TermId),
    Def(DefId),
    /// State of a registered LTS, so finished automata can take part in
    /// further compositions.
    Import(u32, u32),
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum TermError {
    #[error("process `{0}` recurses without guarding events")]
    UnguardedRecursion(String),
}

pub struct ProcArena {
    pub table: Arc<EventTable>,
    nodes: Vec<TermNode>,
    index: HashMap<TermNode, TermId>,
    sets: Vec<Arc<BitSet>>,
    set_index: HashMap<BitSet, SetId>,
    maps: Vec<Arc<Vec<Vec<u32>>>>,
    defs: Vec<Option<TermId>>,
    def_names: Vec<String>,
    imports: Vec<Arc<super::Lts>>,
    trans: Vec<Option<Arc<[(Label, TermId)]>>>,
    in_progress: Vec<bool>,
}

impl ProcArena {
    pub fn new(table: Arc<EventTable>) -> Self {
        ProcArena {
            table,
            nodes: Vec::new(),
            index: HashMap::new(),
            sets: Vec::new(),
            set_index: HashMap::new(),
            maps: Vec::new(),
            defs: Vec::new(),
            def_names: Vec::new(),
            imports: Vec::new(),
            trans: Vec::new(),
            in_progress: Vec::new(),
        }
    }

    fn intern(&mut self, node: TermNode) -> TermId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len() as TermId;
        self.nodes.push(node.clone());
        self.index.insert(node, id);
        self.trans.push(None);
        self.in_progress.push(false);
        id
    }

    pub fn stop(&mut self) -> TermId {
        self.intern(TermNode::Stop)
    }

    pub fn skip(&mut self) -> TermId {
        self.intern(TermNode::Skip)
    }

    fn omega(&mut self) -> TermId {
        self.intern(TermNode::Omega)
    }

    pub fn prefix(&mut self, event: u32, next: TermId) -> TermId {
        self.intern(TermNode::Prefix(event, next))
    }

    /// External choice; nested choices are flattened and duplicates merged.
    pub fn ext(&mut self, mut children: Vec<TermId>) -> TermId {
        let mut flat = Vec::with_capacity(children.len());
        while let Some(c) = children.pop() {
            match &self.nodes[c as usize] {
                TermNode::Ext(inner) => children.extend(inner.iter().copied()),
                TermNode::Stop => {}
                _ => flat.push(c),
            }
        }
        flat.sort_unstable();
        flat.dedup();
        match flat.len() {
            0 => self.stop(),
            1 => flat[0],
            _ => self.intern(TermNode::Ext(flat.into_boxed_slice())),
        }
    }

    /// Internal choice over a non-empty set of alternatives.
    pub fn int(&mut self, mut children: Vec<TermId>) -> TermId {
        let mut flat = Vec::with_capacity(children.len());
        while let Some(c) = children.pop() {
            match &self.nodes[c as usize] {
                TermNode::Int(inner) => children.extend(inner.iter().copied()),
                _ => flat.push(c),
            }
        }
        flat.sort_unstable();
        flat.dedup();
        assert!(!flat.is_empty(), "internal choice over an empty set");
        if flat.len() == 1 {
            flat[0]
        } else {
            self.intern(TermNode::Int(flat.into_boxed_slice()))
        }
    }

    pub fn seq(&mut self, first: TermId, then: TermId) -> TermId {
        self.intern(TermNode::Seq(first, then))
    }

    pub fn par(&mut self, sync: SetId, left: TermId, right: TermId) -> TermId {
        self.intern(TermNode::Par(sync, left, right))
    }

    pub fn hide(&mut self, set: SetId, body: TermId) -> TermId {
        // Collapse nested hiding so recursion through `\` cannot pile up
        // wrapper terms: (P \ X) \ Y = P \ (X ∪ Y).
        if let TermNode::Hide(inner, b) = self.nodes[body as usize] {
            let merged = self.sets[set as usize].union(&self.sets[inner as usize]);
            let sid = self.event_set(merged);
            return self.intern(TermNode::Hide(sid, b));
        }
        self.intern(TermNode::Hide(set, body))
    }

    pub fn rename(&mut self, map: MapId, body: TermId) -> TermId {
        self.intern(TermNode::Rename(map, body))
    }

    pub fn call(&mut self, def: DefId) -> TermId {
        self.intern(TermNode::Def(def))
    }

    pub fn set_bits(&self, id: SetId) -> &BitSet {
        &self.sets[id as usize]
    }

    /// Events of an interned set, ascending.
    pub fn set_events(&self, id: SetId) -> Vec<u32> {
        self.sets[id as usize].iter().map(|e| e as u32).collect()
    }

    pub fn event_set(&mut self, set: BitSet) -> SetId {
        if let Some(&id) = self.set_index.get(&set) {
            return id;
        }
        let id = self.sets.len() as SetId;
        self.set_index.insert(set.clone(), id);
        self.sets.push(Arc::new(set));
        id
    }

    /// Relabelling map: `targets[e]` lists the events `e` becomes; events
    /// outside the map keep themselves.
    pub fn rename_map(&mut self, pairs: &[(u32, u32)]) -> MapId {
        let mut targets: Vec<Vec<u32>> = (0..self.table.len() as u32).map(|e| vec![e]).collect();
        for &(from, _) in pairs {
            targets[from as usize].clear();
        }
        for &(from, to) in pairs {
            if !targets[from as usize].contains(&to) {
                targets[from as usize].push(to);
            }
        }
        let id = self.maps.len() as MapId;
        self.maps.push(Arc::new(targets));
        id
    }

    /// Register a definition slot; the body may be set afterwards so that
    /// recursive definitions can refer to their own id.
    pub fn new_def(&mut self, name: &str) -> DefId {
        let id = self.defs.len() as DefId;
        self.defs.push(None);
        self.def_names.push(name.to_string());
        id
    }

    pub fn set_def_body(&mut self, def: DefId, body: TermId) {
        self.defs[def as usize] = Some(body);
    }

    pub fn def_body(&self, def: DefId) -> Option<TermId> {
        self.defs[def as usize]
    }

    /// Register a finished automaton for use as a component in further
    /// term-level compositions. The automaton must share this arena's
    /// event table (or a prefix of it).
    pub fn register_lts(&mut self, lts: Arc<super::Lts>) -> u32 {
        assert!(
            lts.table.same_alphabet(&self.table),
            "imported automaton declares a different alphabet"
        );
        let id = self.imports.len() as u32;
        self.imports.push(lts);
        id
    }

    pub fn import_root(&mut self, import: u32) -> TermId {
        let root = self.imports[import as usize].root;
        self.intern(TermNode::Import(import, root))
    }

    pub fn term_count(&self) -> usize {
        self.nodes.len()
    }

    /// Outgoing transitions of a term, sorted by label (events ascending,
    /// then tau, then tick).
    pub fn transitions(&mut self, t: TermId) -> Result<Arc<[(Label, TermId)]>, TermError> {
        if let Some(cached) = &self.trans[t as usize] {
            return Ok(cached.clone());
        }
        if self.in_progress[t as usize] {
            let name = match &self.nodes[t as usize] {
                TermNode::Def(d) => self.def_names[*d as usize].clone(),
                _ => "<anonymous>".to_string(),
            };
            return Err(TermError::UnguardedRecursion(name));
        }
        self.in_progress[t as usize] = true;
        let result = self.compute_transitions(t);
        self.in_progress[t as usize] = false;
        let mut out = result?;
        out.sort_unstable();
        out.dedup();
        let arc: Arc<[(Label, TermId)]> = out.into();
        self.trans[t as usize] = Some(arc.clone());
        Ok(arc)
    }

    fn compute_transitions(&mut self, t: TermId) -> Result<Vec<(Label, TermId)>, TermError> {
        let node = self.nodes[t as usize].clone();
        let mut out = Vec::new();
        match node {
            TermNode::Stop | TermNode::Omega => {}
            TermNode::Skip => {
                let omega = self.omega();
                out.push((Label::Tick, omega));
            }
            TermNode::Prefix(e, k) => out.push((Label::Event(e), k)),
            TermNode::Ext(children) => {
                for (i, &c) in children.iter().enumerate() {
                    let ct = self.transitions(c)?;
                    for &(label, succ) in ct.iter() {
                        match label {
                            Label::Tau => {
                                let mut kids = children.to_vec();
                                kids[i] = succ;
                                let next = self.ext(kids);
                                out.push((Label::Tau, next));
                            }
                            _ => out.push((label, succ)),
                        }
                    }
                }
            }
            TermNode::Int(children) => {
                for &c in children.iter() {
                    out.push((Label::Tau, c));
                }
            }
            TermNode::Seq(l, r) => {
                let lt = self.transitions(l)?;
                for &(label, succ) in lt.iter() {
                    match label {
                        Label::Tick => out.push((Label::Tau, r)),
                        _ => {
                            let next = self.seq(succ, r);
                            out.push((label, next));
                        }
                    }
                }
            }
            TermNode::Par(sync, l, r) => {
                let lt = self.transitions(l)?;
                let rt = self.transitions(r)?;
                let set = self.sets[sync as usize].clone();
                let mut l_tick = false;
                for &(label, succ) in lt.iter() {
                    match label {
                        Label::Tick => l_tick = true,
                        Label::Tau => {
                            let next = self.par(sync, succ, r);
                            out.push((Label::Tau, next));
                        }
                        Label::Event(e) if !set.contains(e as usize) => {
                            let next = self.par(sync, succ, r);
                            out.push((Label::Event(e), next));
                        }
                        Label::Event(_) => {}
                    }
                }
                let mut r_tick = false;
                for &(label, succ) in rt.iter() {
                    match label {
                        Label::Tick => r_tick = true,
                        Label::Tau => {
                            let next = self.par(sync, l, succ);
                            out.push((Label::Tau, next));
                        }
                        Label::Event(e) if !set.contains(e as usize) => {
                            let next = self.par(sync, l, succ);
                            out.push((Label::Event(e), next));
                        }
                        Label::Event(_) => {}
                    }
                }
                for &(ll, ls) in lt.iter() {
                    if let Label::Event(e) = ll {
                        if set.contains(e as usize) {
                            for &(rl, rs) in rt.iter() {
                                if rl == Label::Event(e) {
                                    let next = self.par(sync, ls, rs);
                                    out.push((Label::Event(e), next));
                                }
                            }
                        }
                    }
                }
                if l_tick && r_tick {
                    let omega = self.omega();
                    out.push((Label::Tick, omega));
                }
            }
            TermNode::Hide(set_id, body) => {
                let bt = self.transitions(body)?;
                let set = self.sets[set_id as usize].clone();
                for &(label, succ) in bt.iter() {
                    match label {
                        Label::Tick => {
                            let omega = self.omega();
                            out.push((Label::Tick, omega));
                        }
                        Label::Tau => {
                            let next = self.hide(set_id, succ);
                            out.push((Label::Tau, next));
                        }
                        Label::Event(e) => {
                            let next = self.hide(set_id, succ);
                            let lbl = if set.contains(e as usize) {
                                Label::Tau
                            } else {
                                Label::Event(e)
                            };
                            out.push((lbl, next));
                        }
                    }
                }
            }
            TermNode::Rename(map_id, body) => {
                let bt = self.transitions(body)?;
                let map = self.maps[map_id as usize].clone();
                for &(label, succ) in bt.iter() {
                    let next = self.rename(map_id, succ);
                    match label {
                        Label::Event(e) => {
                            for &e2 in &map[e as usize] {
                                out.push((Label::Event(e2), next));
                            }
                        }
                        Label::Tick => {
                            let omega = self.omega();
                            out.push((Label::Tick, omega));
                        }
                        Label::Tau => out.push((Label::Tau, next)),
                    }
                }
            }
            TermNode::Def(d) => {
                let body = self.defs[d as usize]
                    .unwrap_or_else(|| panic!("definition `{}` has no body", self.def_names[d as usize]));
                let bt = self.transitions(body)?;
                out.extend(bt.iter().copied());
            }
            TermNode::Import(i, s) => {
                let lts = self.imports[i as usize].clone();
                for &(label, t) in lts.successors(s) {
                    match label {
                        Label::Tick => {
                            let omega = self.omega();
                            out.push((Label::Tick, omega));
                        }
                        other => {
                            let next = self.intern(TermNode::Import(i, t));
                            out.push((other, next));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::types::{ChannelDecl, Value};

    fn tiny_table(n: usize) -> Arc<EventTable> {
        let channels: Vec<ChannelDecl> = (0..n)
            .map(|i| ChannelDecl {
                name: format!("e{i}"),
                type_name: None,
                payload: None,
                io_discipline: false,
            })
            .collect();
        let values: Vec<Vec<Value>> = (0..n).map(|_| vec![Value::Unit]).collect();
        EventTable::build(channels, &values)
    }

    #[test]
    fn prefix_chain_transitions() {
        let mut a = ProcArena::new(tiny_table(2));
        let stop = a.stop();
        let p1 = a.prefix(1, stop);
        let p0 = a.prefix(0, p1);
        let t = a.transitions(p0).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].0, Label::Event(0));
    }

    #[test]
    fn internal_choice_is_two_taus() {
        let mut a = ProcArena::new(tiny_table(2));
        let stop = a.stop();
        let l = a.prefix(0, stop);
        let r = a.prefix(1, stop);
        let c = a.int(vec![l, r]);
        let t = a.transitions(c).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|(l, _)| *l == Label::Tau));
    }

    #[test]
    fn parallel_termination_needs_both_sides() {
        let mut a = ProcArena::new(tiny_table(1));
        let skip = a.skip();
        let stop = a.stop();
        let p = a.prefix(0, skip);
        let empty = a.event_set(BitSet::empty(1));
        let par = a.par(empty, skip, p);
        let t = a.transitions(par).unwrap();
        // Only the event is possible: the left side waits for the right.
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].0, Label::Event(0));
        let after = t[0].1;
        let t2 = a.transitions(after).unwrap();
        assert_eq!(t2.len(), 1);
        assert_eq!(t2[0].0, Label::Tick);
        let par_stop = a.par(empty, skip, stop);
        assert!(a.transitions(par_stop).unwrap().is_empty());
    }

    #[test]
    fn unguarded_recursion_detected() {
        let mut a = ProcArena::new(tiny_table(1));
        let d = a.new_def("P");
        let call = a.call(d);
        a.set_def_body(d, call);
        assert!(matches!(
            a.transitions(call),
            Err(TermError::UnguardedRecursion(_))
        ));
    }

    #[test]
    fn sequence_converts_termination() {
        let mut a = ProcArena::new(tiny_table(2));
        let stop = a.stop();
        let r = a.prefix(1, stop);
        let skip = a.skip();
        let s = a.seq(skip, r);
        let t = a.transitions(s).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].0, Label::Tau);
        let t2 = a.transitions(t[0].1).unwrap();
        assert_eq!(t2[0].0, Label::Event(1));
    }
}
