//! Subset construction from an LTS to a deterministic failures automaton
//! annotated with minimal acceptance sets.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use super::{Label, Lts};
use crate::syntax::types::EventId;
use crate::util::{minimal_antichain, BitSet};

/// One state of a normalized automaton: deterministic successors over
/// visible events, the antichain of minimal acceptance sets (equivalently
/// maximal refusals, as complements within the declared alphabet plus the
/// termination marker), and whether the state can terminate.
#[derive(Debug, Clone)]
pub struct NormState {
    pub succ: Box<[(u32, u32)]>,
    pub min_acceptances: Vec<BitSet>,
    pub can_tick: bool,
}

/// Deterministic, tau-free automaton carrying maximal-refusal information;
/// the engine behind all stable-failures queries.
#[derive(Clone)]
pub struct NormLts {
    pub table: Arc<crate::syntax::types::EventTable>,
    pub root: u32,
    pub states: Vec<NormState>,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("E_DIVERGENT: internal-action cycle reachable after {}", crate::lts::export::trace_names(&self.trace, &self.table))]
pub struct DivergentError {
    pub trace: Vec<EventId>,
    pub table: Arc<crate::syntax::types::EventTable>,
}

impl NormLts {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn succ_event(&self, s: u32, e: EventId) -> Option<u32> {
        let st = &self.states[s as usize];
        st.succ
            .binary_search_by_key(&(e as u32), |&(ev, _)| ev)
            .ok()
            .map(|i| st.succ[i].1)
    }

    /// State reached by a visible trace, if the trace is possible.
    pub fn state_after(&self, trace: &[EventId]) -> Option<u32> {
        let mut s = self.root;
        for &e in trace {
            s = self.succ_event(s, e)?;
        }
        Some(s)
    }

    pub fn enabled(&self, s: u32) -> impl Iterator<Item = EventId> + '_ {
        self.states[s as usize].succ.iter().map(|&(e, _)| e as EventId)
    }

    pub fn enabled_set(&self, s: u32) -> BitSet {
        BitSet::from_iter(self.table.refusal_len(), self.enabled(s))
    }

    /// Maximal refusal sets of state `s` (complements of the minimal
    /// acceptance sets over the declared alphabet plus termination).
    pub fn max_refusals(&self, s: u32) -> Vec<BitSet> {
        self.states[s as usize]
            .min_acceptances
            .iter()
            .map(|a| a.complement())
            .collect()
    }

    /// Re-encode as an LTS with the same stable failures: each state fans
    /// out internally to one stable node per minimal acceptance set, plus an
    /// unstable node preserving any traces no acceptance covers.
    pub fn to_lts(&self) -> Lts {
        let tick_bit = self.table.tick_bit();
        // Node layout per state: base node, then one node per acceptance,
        // then optionally a trace node. A single terminated node sits last.
        let mut starts = Vec::with_capacity(self.states.len());
        let mut count = 0u32;
        let mut layouts = Vec::with_capacity(self.states.len());
        for st in &self.states {
            let mut acc_union = BitSet::empty(self.table.refusal_len());
            for a in &st.min_acceptances {
                acc_union.union_with(a);
            }
            let needs_trace = st
                .succ
                .iter()
                .any(|&(e, _)| !acc_union.contains(e as usize))
                || (st.can_tick && !acc_union.contains(tick_bit));
            starts.push(count);
            let n_acc = st.min_acceptances.len() as u32;
            count += 1 + n_acc + needs_trace as u32;
            layouts.push((n_acc, needs_trace));
        }
        let omega = count;
        count += 1;
        let mut trans: Vec<Vec<(Label, u32)>> = vec![Vec::new(); count as usize];
        for (si, st) in self.states.iter().enumerate() {
            let base = starts[si];
            let (n_acc, needs_trace) = layouts[si];
            for k in 0..n_acc {
                trans[base as usize].push((Label::Tau, base + 1 + k));
            }
            if needs_trace {
                let tnode = base + 1 + n_acc;
                trans[base as usize].push((Label::Tau, tnode));
                // Keep the trace node unstable without adding acceptances.
                let anchor = if n_acc > 0 { base + 1 } else { tnode };
                trans[tnode as usize].push((Label::Tau, anchor));
                for &(e, t) in st.succ.iter() {
                    trans[tnode as usize].push((Label::Event(e), starts[t as usize]));
                }
                if st.can_tick {
                    trans[tnode as usize].push((Label::Tick, omega));
                }
            }
            for (k, acc) in st.min_acceptances.iter().enumerate() {
                let node = (base + 1 + k as u32) as usize;
                for e in acc.iter() {
                    if e == tick_bit {
                        trans[node].push((Label::Tick, omega));
                    } else if let Some(t) = self.succ_event(si as u32, e) {
                        trans[node].push((Label::Event(e as u32), starts[t as usize]));
                    }
                }
            }
        }
        for row in &mut trans {
            row.sort_unstable();
            row.dedup();
        }
        Lts {
            table: self.table.clone(),
            root: starts[self.root as usize],
            trans: trans.into_iter().map(|r| r.into()).collect(),
        }
    }
}

/// Normalize a divergence-free LTS; reports the divergence as an error if a
/// reachable tau cycle exists.
pub fn normalize(lts: &Lts) -> Result<NormLts, DivergentError> {
    if let super::DivergenceVerdict::Fail { trace } = super::check_divergence_free(lts) {
        return Err(DivergentError {
            trace,
            table: lts.table.clone(),
        });
    }
    Ok(failures_model(lts))
}

/// The stable-failures view of an arbitrary LTS. Tau cycles are tolerated:
/// states on them are simply unstable and contribute no acceptance sets,
/// which matches the stable-failures semantics of divergent processes.
pub fn failures_model(lts: &Lts) -> NormLts {
    Builder::new(lts, None).run()
}

/// Observation restriction onto the events of `channels`: traces lose all
/// other events and refusals are intersected with the kept events.
///
/// Unlike hiding, restriction does not destabilize states that can still
/// move on dropped channels, so a component looping forever on another
/// channel keeps its refusal information. This is the projection used for
/// per-channel contract semantics, channel congruence and decoupling.
pub fn restriction_model(lts: &Lts, channels: &[crate::syntax::types::ChanId]) -> NormLts {
    let mut dropped = BitSet::empty(lts.table.len());
    for e in 0..lts.table.declared_len() {
        if !channels.contains(&lts.table.channel_of(e)) {
            dropped.insert(e);
        }
    }
    Builder::new(lts, Some(dropped)).run()
}

struct Builder<'a> {
    lts: &'a Lts,
    /// Events treated as unobservable; unlike tau they do not make a state
    /// unstable, their transitions are merely followed silently.
    dropped: Option<BitSet>,
    mark: Vec<u32>,
    epoch: u32,
}

impl<'a> Builder<'a> {
    fn new(lts: &'a Lts, dropped: Option<BitSet>) -> Self {
        Builder {
            lts,
            dropped,
            mark: vec![u32::MAX; lts.state_count()],
            epoch: 0,
        }
    }

    fn is_dropped(&self, e: u32) -> bool {
        self.dropped
            .as_ref()
            .is_some_and(|d| d.contains(e as usize))
    }

    /// Closure of a seed set under tau and dropped-event edges, sorted.
    fn closure(&mut self, seed: &[u32]) -> Box<[u32]> {
        self.epoch += 1;
        let epoch = self.epoch;
        let mut out: Vec<u32> = Vec::with_capacity(seed.len());
        let mut stack: Vec<u32> = Vec::with_capacity(seed.len());
        for &s in seed {
            if self.mark[s as usize] != epoch {
                self.mark[s as usize] = epoch;
                stack.push(s);
                out.push(s);
            }
        }
        while let Some(s) = stack.pop() {
            for &(l, t) in self.lts.successors(s) {
                let follow = match l {
                    Label::Tau => true,
                    Label::Event(e) => self.is_dropped(e),
                    Label::Tick => false,
                };
                if follow && self.mark[t as usize] != epoch {
                    self.mark[t as usize] = epoch;
                    stack.push(t);
                    out.push(t);
                }
            }
        }
        out.sort_unstable();
        out.into_boxed_slice()
    }

    fn run(mut self) -> NormLts {
        let refusal_len = self.lts.table.refusal_len();
        let tick_bit = self.lts.table.tick_bit();
        let mut index: HashMap<Box<[u32]>, u32> = HashMap::new();
        let mut subsets: Vec<Box<[u32]>> = Vec::new();
        let mut states: Vec<NormState> = Vec::new();
        let mut queue: VecDeque<u32> = VecDeque::new();

        let root_set = self.closure(&[self.lts.root]);
        index.insert(root_set.clone(), 0);
        subsets.push(root_set);
        queue.push_back(0);

        while let Some(sid) = queue.pop_front() {
            let members = subsets[sid as usize].clone();
            let mut accs: Vec<BitSet> = Vec::new();
            let mut can_tick = false;
            let mut edges: Vec<(u32, u32)> = Vec::new();
            for &q in members.iter() {
                let row = self.lts.successors(q);
                let mut has_tau = false;
                let mut has_tick = false;
                for &(l, t) in row {
                    match l {
                        Label::Tau => has_tau = true,
                        Label::Tick => has_tick = true,
                        Label::Event(e) if !self.is_dropped(e) => edges.push((e, t)),
                        Label::Event(_) => {}
                    }
                }
                if has_tick {
                    can_tick = true;
                    accs.push(BitSet::from_iter(refusal_len, [tick_bit]));
                }
                if !has_tau {
                    let mut acc = BitSet::empty(refusal_len);
                    for &(l, _) in row {
                        if let Label::Event(e) = l {
                            if !self.is_dropped(e) {
                                acc.insert(e as usize);
                            }
                        }
                    }
                    if has_tick {
                        acc.insert(tick_bit);
                    }
                    accs.push(acc);
                }
            }
            edges.sort_unstable();
            edges.dedup();
            let mut succ: Vec<(u32, u32)> = Vec::new();
            let mut i = 0;
            while i < edges.len() {
                let e = edges[i].0;
                let mut targets: Vec<u32> = Vec::new();
                while i < edges.len() && edges[i].0 == e {
                    targets.push(edges[i].1);
                    i += 1;
                }
                let closed = self.closure(&targets);
                let next = match index.get(&closed) {
                    Some(&id) => id,
                    None => {
                        let id = subsets.len() as u32;
                        index.insert(closed.clone(), id);
                        subsets.push(closed);
                        queue.push_back(id);
                        id
                    }
                };
                succ.push((e, next));
            }
            debug_assert_eq!(sid as usize, states.len());
            states.push(NormState {
                succ: succ.into(),
                min_acceptances: minimal_antichain(accs),
                can_tick,
            });
        }
        minimize(NormLts {
            table: self.lts.table.clone(),
            root: 0,
            states,
        })
    }
}

/// Merge states with identical refusal annotations and equivalent futures
/// (partition refinement), then renumber breadth-first. Subset
/// construction alone can produce behaviourally identical twins, which
/// would defeat the root-looping analyses downstream.
pub fn minimize(n: NormLts) -> NormLts {
    let count = n.states.len();
    // Initial partition by acceptance signature.
    let mut class: Vec<u32> = vec![0; count];
    {
        let mut sig_ids: HashMap<(Vec<BitSet>, bool), u32> = HashMap::new();
        for (i, st) in n.states.iter().enumerate() {
            let key = (st.min_acceptances.clone(), st.can_tick);
            let next = sig_ids.len() as u32;
            class[i] = *sig_ids.entry(key).or_insert(next);
        }
    }
    loop {
        let mut next_ids: HashMap<(u32, Vec<(u32, u32)>), u32> = HashMap::new();
        let mut next: Vec<u32> = vec![0; count];
        for (i, st) in n.states.iter().enumerate() {
            let succ_sig: Vec<(u32, u32)> =
                st.succ.iter().map(|&(e, t)| (e, class[t as usize])).collect();
            let key = (class[i], succ_sig);
            let fresh = next_ids.len() as u32;
            next[i] = *next_ids.entry(key).or_insert(fresh);
        }
        let stable = next_ids.len() == class.iter().collect::<std::collections::HashSet<_>>().len();
        class = next;
        if stable {
            break;
        }
    }
    // Renumber classes breadth-first from the root, in event order.
    let mut order: HashMap<u32, u32> = HashMap::new();
    let mut repr: Vec<u32> = Vec::new();
    let mut queue = VecDeque::new();
    order.insert(class[n.root as usize], 0);
    repr.push(n.root);
    queue.push_back(n.root);
    while let Some(s) = queue.pop_front() {
        for &(_, t) in n.states[s as usize].succ.iter() {
            let c = class[t as usize];
            if let std::collections::hash_map::Entry::Vacant(v) = order.entry(c) {
                v.insert(repr.len() as u32);
                repr.push(t);
                queue.push_back(t);
            }
        }
    }
    let states: Vec<NormState> = repr
        .iter()
        .map(|&r| {
            let st = &n.states[r as usize];
            NormState {
                succ: st
                    .succ
                    .iter()
                    .map(|&(e, t)| (e, order[&class[t as usize]]))
                    .collect(),
                min_acceptances: st.min_acceptances.clone(),
                can_tick: st.can_tick,
            }
        })
        .collect();
    NormLts {
        table: n.table,
        root: 0,
        states,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::{check_divergence_free, compile_named, DivergenceVerdict};
    use crate::syntax::parse_spec;

    const BASE: &str = r#"
nametype VV = {1..4}
datatype CV = v.VV
subtype I_CV = in.CV | out.CV
channel c : I_CV

T = c.in.v.1 -> (c.out.v.1 -> T |~| c.out.v.2 -> T)
    []
    c.in.v.2 -> (c.out.v.3 -> T |~| c.out.v.4 -> T)
LOOP = c.in.v.1 -> LOOP
DIV = LOOP \ {| c |}
ESTOP = c.in.v.1 -> STOP
ESKIP = c.in.v.1 -> SKIP
"#;

    fn norm(name: &str) -> NormLts {
        let spec = parse_spec(BASE).unwrap();
        let lts = compile_named(&spec, name, 10_000).unwrap();
        normalize(&lts).unwrap()
    }

    #[test]
    fn stop_refuses_everything() {
        let spec = parse_spec(BASE).unwrap();
        let lts = crate::lts::compile(&spec, &crate::syntax::ProcessExpr::Stop, 100).unwrap();
        let n = normalize(&lts).unwrap();
        assert_eq!(n.state_count(), 1);
        assert_eq!(n.states[0].min_acceptances.len(), 1);
        assert!(n.states[0].min_acceptances[0].is_empty());
        assert!(!n.states[0].can_tick);
    }

    #[test]
    fn root_offers_both_inputs() {
        let n = norm("T");
        let root = &n.states[n.root as usize];
        assert_eq!(root.min_acceptances.len(), 1);
        let acc: Vec<usize> = root.min_acceptances[0].iter().collect();
        assert_eq!(acc, vec![0, 1]); // c.in.v.1, c.in.v.2
        // Maximal refusal is everything except the two inputs.
        let refusals = n.max_refusals(n.root);
        assert_eq!(refusals[0].count(), 8 + 1 - 2);
    }

    #[test]
    fn internal_output_choice_has_two_acceptances() {
        let n = norm("T");
        let s = n.state_after(&[0]).unwrap(); // after c.in.v.1
        let st = &n.states[s as usize];
        assert_eq!(st.min_acceptances.len(), 2);
        let accs: Vec<Vec<usize>> = st
            .min_acceptances
            .iter()
            .map(|a| a.iter().collect())
            .collect();
        assert!(accs.contains(&vec![4])); // c.out.v.1
        assert!(accs.contains(&vec![5])); // c.out.v.2
    }

    #[test]
    fn termination_acceptance_is_tick_only() {
        let n = norm("ESKIP");
        let s = n.state_after(&[0]).unwrap();
        let st = &n.states[s as usize];
        assert!(st.can_tick);
        assert_eq!(st.min_acceptances.len(), 1);
        let acc: Vec<usize> = st.min_acceptances[0].iter().collect();
        assert_eq!(acc, vec![n.table.tick_bit()]);
    }

    #[test]
    fn divergence_rejected_by_strict_normalize() {
        let spec = parse_spec(BASE).unwrap();
        let lts = compile_named(&spec, "DIV", 10_000).unwrap();
        assert!(matches!(
            check_divergence_free(&lts),
            DivergenceVerdict::Fail { ref trace } if trace.is_empty()
        ));
        assert!(normalize(&lts).is_err());
        // The tolerant view still exists and has no stable failures at all.
        let n = failures_model(&lts);
        assert!(n.states[n.root as usize].min_acceptances.is_empty());
    }

    #[test]
    fn reencoding_preserves_normal_form() {
        for p in ["T", "LOOP", "ESTOP", "ESKIP"] {
            let n = norm(p);
            let n2 = failures_model(&n.to_lts());
            assert_eq!(n.state_count(), n2.state_count(), "{p}");
            // Same acceptance structure state by state under the canonical
            // (BFS) state order.
            for (a, b) in n.states.iter().zip(n2.states.iter()) {
                assert_eq!(a.min_acceptances, b.min_acceptances, "{p}");
                assert_eq!(a.can_tick, b.can_tick, "{p}");
                assert_eq!(a.succ, b.succ, "{p}");
            }
        }
    }
}
