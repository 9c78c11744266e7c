//! Shared test oracles, independent of the engine's operational route:
//! a denotational stable-failures semantics computed by structural
//! recursion over finite (non-recursive) expressions, brute-force failure
//! enumeration over normalized automata, and a small expression catalogue.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use bricc::lts::NormLts;
use bricc::syntax::types::{EventId, EventTable};
use bricc::syntax::{ProcessExpr, Spec};
use bricc::util::BitSet;

pub type Trace = Vec<EventId>;

/// Finite stable-failures denotation: all traces, the traces after which
/// termination is possible, and the maximal refusals per trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Denotation {
    pub traces: BTreeSet<Trace>,
    pub tick_traces: BTreeSet<Trace>,
    pub failures: BTreeMap<Trace, Vec<BitSet>>,
}

impl Denotation {
    fn empty() -> Denotation {
        Denotation {
            traces: BTreeSet::new(),
            tick_traces: BTreeSet::new(),
            failures: BTreeMap::new(),
        }
    }

    fn add_refusals(&mut self, t: Trace, rs: Vec<BitSet>) {
        let entry = self.failures.entry(t).or_default();
        entry.extend(rs);
        let taken = std::mem::take(entry);
        *entry = maximal_antichain(taken);
    }

    fn normalize(mut self) -> Denotation {
        let keys: Vec<Trace> = self.failures.keys().cloned().collect();
        for k in keys {
            let v = std::mem::take(self.failures.get_mut(&k).unwrap());
            self.failures.insert(k, maximal_antichain(v));
        }
        self
    }
}

/// Keep only the maximal elements (refusals are downward closed).
pub fn maximal_antichain(mut sets: Vec<BitSet>) -> Vec<BitSet> {
    sets.sort();
    sets.dedup();
    let keep: Vec<bool> = sets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            !sets
                .iter()
                .enumerate()
                .any(|(j, t)| j != i && s.is_subset(t) && s != t)
        })
        .collect();
    sets.into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect()
}

/// Finite expressions for the denotational oracle.
#[derive(Debug, Clone)]
pub enum DExpr {
    Stop,
    Skip,
    Prefix(EventId, Box<DExpr>),
    Ext(Box<DExpr>, Box<DExpr>),
    Int(Box<DExpr>, Box<DExpr>),
    Seq(Box<DExpr>, Box<DExpr>),
    Hide(Box<DExpr>, Vec<EventId>),
    Rename(Box<DExpr>, Vec<(EventId, EventId)>),
    Par(Box<DExpr>, Vec<EventId>, Box<DExpr>),
}

pub fn stop() -> DExpr {
    DExpr::Stop
}
pub fn skip() -> DExpr {
    DExpr::Skip
}
pub fn pre(e: EventId, k: DExpr) -> DExpr {
    DExpr::Prefix(e, Box::new(k))
}
pub fn ext(l: DExpr, r: DExpr) -> DExpr {
    DExpr::Ext(Box::new(l), Box::new(r))
}
pub fn int(l: DExpr, r: DExpr) -> DExpr {
    DExpr::Int(Box::new(l), Box::new(r))
}
pub fn seq(l: DExpr, r: DExpr) -> DExpr {
    DExpr::Seq(Box::new(l), Box::new(r))
}
pub fn hide(b: DExpr, evs: &[EventId]) -> DExpr {
    DExpr::Hide(Box::new(b), evs.to_vec())
}
pub fn par(l: DExpr, sync: &[EventId], r: DExpr) -> DExpr {
    DExpr::Par(Box::new(l), sync.to_vec(), Box::new(r))
}
pub fn ileave(l: DExpr, r: DExpr) -> DExpr {
    par(l, &[], r)
}

/// Denotational stable failures by structural recursion on the clauses:
/// each operator's trace set, termination set and maximal refusals are
/// computed from its operands' denotations.
pub fn denot(e: &DExpr, table: &EventTable) -> Denotation {
    let rl = table.refusal_len();
    let tick = table.tick_bit();
    let full = BitSet::full(rl); // every event and termination
    let sigma = {
        let mut s = full.clone();
        s.remove(tick);
        s
    };
    match e {
        DExpr::Stop => {
            let mut d = Denotation::empty();
            d.traces.insert(vec![]);
            d.failures.insert(vec![], vec![full]);
            d
        }
        DExpr::Skip => {
            let mut d = Denotation::empty();
            d.traces.insert(vec![]);
            d.tick_traces.insert(vec![]);
            d.failures.insert(vec![], vec![sigma]);
            d
        }
        DExpr::Prefix(ev, k) => {
            let kd = denot(k, table);
            let mut d = Denotation::empty();
            d.traces.insert(vec![]);
            let mut r = full.clone();
            r.remove(*ev);
            d.failures.insert(vec![], vec![r]);
            for t in &kd.traces {
                let mut t2 = vec![*ev];
                t2.extend(t);
                d.traces.insert(t2);
            }
            for t in &kd.tick_traces {
                let mut t2 = vec![*ev];
                t2.extend(t);
                d.tick_traces.insert(t2);
            }
            for (t, rs) in &kd.failures {
                let mut t2 = vec![*ev];
                t2.extend(t);
                d.failures.insert(t2, rs.clone());
            }
            d
        }
        DExpr::Int(l, r) => {
            let (ld, rd) = (denot(l, table), denot(r, table));
            let mut d = Denotation::empty();
            d.traces = ld.traces.union(&rd.traces).cloned().collect();
            d.tick_traces = ld.tick_traces.union(&rd.tick_traces).cloned().collect();
            for (t, rs) in ld.failures.iter().chain(rd.failures.iter()) {
                d.add_refusals(t.clone(), rs.clone());
            }
            d.normalize()
        }
        DExpr::Ext(l, r) => {
            let (ld, rd) = (denot(l, table), denot(r, table));
            let mut d = Denotation::empty();
            d.traces = ld.traces.union(&rd.traces).cloned().collect();
            d.tick_traces = ld.tick_traces.union(&rd.tick_traces).cloned().collect();
            // Root refusals: refused by both operands.
            let mut root = Vec::new();
            for x in ld.failures.get(&vec![]).into_iter().flatten() {
                for y in rd.failures.get(&vec![]).into_iter().flatten() {
                    root.push(x.intersection(y));
                }
            }
            // On immediate termination of either side, everything but
            // termination can be refused.
            if ld.tick_traces.contains(&vec![]) || rd.tick_traces.contains(&vec![]) {
                root.push(sigma.clone());
            }
            d.failures.insert(vec![], maximal_antichain(root));
            for (t, rs) in ld.failures.iter().chain(rd.failures.iter()) {
                if !t.is_empty() {
                    d.add_refusals(t.clone(), rs.clone());
                }
            }
            d.normalize()
        }
        DExpr::Seq(l, r) => {
            let (ld, rd) = (denot(l, table), denot(r, table));
            let mut d = Denotation::empty();
            for t in &ld.traces {
                d.traces.insert(t.clone());
            }
            // First-part refusals: those that also refuse termination (the
            // composite refuses termination there too, since the first part
            // has not finished).
            for (t, rs) in &ld.failures {
                let kept: Vec<BitSet> = rs.iter().filter(|x| x.contains(tick)).cloned().collect();
                if !kept.is_empty() {
                    d.add_refusals(t.clone(), kept);
                }
            }
            for s in &ld.tick_traces {
                for t in &rd.traces {
                    let mut u = s.clone();
                    u.extend(t);
                    d.traces.insert(u);
                }
                for t in &rd.tick_traces {
                    let mut u = s.clone();
                    u.extend(t);
                    d.tick_traces.insert(u);
                }
                for (t, rs) in &rd.failures {
                    let mut u = s.clone();
                    u.extend(t);
                    d.add_refusals(u, rs.clone());
                }
            }
            d.normalize()
        }
        DExpr::Hide(b, evs) => {
            let bd = denot(b, table);
            let hidden = BitSet::from_iter(rl, evs.iter().copied());
            let strip = |t: &Trace| -> Trace {
                t.iter().copied().filter(|e| !hidden.contains(*e)).collect()
            };
            let mut d = Denotation::empty();
            for t in &bd.traces {
                d.traces.insert(strip(t));
            }
            for t in &bd.tick_traces {
                d.tick_traces.insert(strip(t));
            }
            for (t, rs) in &bd.failures {
                let kept: Vec<BitSet> = rs
                    .iter()
                    .filter(|x| hidden.is_subset(x))
                    .cloned()
                    .collect();
                if !kept.is_empty() {
                    d.add_refusals(strip(t), kept);
                }
            }
            d.normalize()
        }
        DExpr::Rename(b, pairs) => {
            let bd = denot(b, table);
            let map = |e: EventId| -> EventId {
                pairs
                    .iter()
                    .find(|(from, _)| *from == e)
                    .map(|&(_, to)| to)
                    .unwrap_or(e)
            };
            let mut d = Denotation::empty();
            for t in &bd.traces {
                d.traces.insert(t.iter().map(|&e| map(e)).collect());
            }
            for t in &bd.tick_traces {
                d.tick_traces.insert(t.iter().map(|&e| map(e)).collect());
            }
            for (t, rs) in &bd.failures {
                let t2: Trace = t.iter().map(|&e| map(e)).collect();
                // Refusal images: complement of the image of the acceptance.
                let imgs: Vec<BitSet> = rs
                    .iter()
                    .map(|x| {
                        let acc = x.complement();
                        let mut img = BitSet::empty(rl);
                        for a in acc.iter() {
                            if a == tick {
                                img.insert(tick);
                            } else {
                                img.insert(map(a));
                            }
                        }
                        img.complement()
                    })
                    .collect();
                d.add_refusals(t2, imgs);
            }
            d.normalize()
        }
        DExpr::Par(l, sync, r) => {
            let (ld, rd) = (denot(l, table), denot(r, table));
            let sync_set = BitSet::from_iter(rl, sync.iter().copied());
            let mut sync_tick = sync_set.clone();
            sync_tick.insert(tick);
            let mut d = Denotation::empty();
            let mut memo: HashMap<(Trace, Trace), BTreeSet<Trace>> = HashMap::new();
            for s in &ld.traces {
                for t in &rd.traces {
                    for u in merges(s, t, &sync_set, &mut memo) {
                        d.traces.insert(u);
                    }
                }
            }
            for s in &ld.tick_traces {
                for t in &rd.tick_traces {
                    for u in merges(s, t, &sync_set, &mut memo) {
                        d.tick_traces.insert(u);
                    }
                }
            }
            for (s, ys) in &ld.failures {
                for (t, zs) in &rd.failures {
                    let us = merges(s, t, &sync_set, &mut memo);
                    if us.is_empty() {
                        continue;
                    }
                    let mut combined = Vec::new();
                    for y in ys {
                        for z in zs {
                            // Outside the synchronised set both sides must
                            // agree, so the common part is refused; inside
                            // it either side's refusal blocks the event.
                            let mut w = y.intersection(z);
                            w.difference_with(&sync_tick);
                            w.union_with(&y.intersection(&sync_tick));
                            w.union_with(&z.intersection(&sync_tick));
                            combined.push(w);
                        }
                    }
                    let combined = maximal_antichain(combined);
                    for u in us {
                        d.add_refusals(u, combined.clone());
                    }
                }
            }
            d.normalize()
        }
    }
}

/// All interleavings of `s` and `t` that agree on the synchronised events.
fn merges(
    s: &Trace,
    t: &Trace,
    sync: &BitSet,
    memo: &mut HashMap<(Trace, Trace), BTreeSet<Trace>>,
) -> BTreeSet<Trace> {
    if let Some(r) = memo.get(&(s.clone(), t.clone())) {
        return r.clone();
    }
    let mut out = BTreeSet::new();
    match (s.split_first(), t.split_first()) {
        (None, None) => {
            out.insert(vec![]);
        }
        (Some((&a, s1)), None) => {
            if !sync.contains(a) {
                for mut u in merges(&s1.to_vec(), t, sync, memo) {
                    u.insert(0, a);
                    out.insert(u);
                }
            }
        }
        (None, Some((&b, t1))) => {
            if !sync.contains(b) {
                for mut u in merges(s, &t1.to_vec(), sync, memo) {
                    u.insert(0, b);
                    out.insert(u);
                }
            }
        }
        (Some((&a, s1)), Some((&b, t1))) => {
            match (sync.contains(a), sync.contains(b)) {
                (true, true) => {
                    if a == b {
                        for mut u in merges(&s1.to_vec(), &t1.to_vec(), sync, memo) {
                            u.insert(0, a);
                            out.insert(u);
                        }
                    }
                }
                (true, false) => {
                    for mut u in merges(s, &t1.to_vec(), sync, memo) {
                        u.insert(0, b);
                        out.insert(u);
                    }
                }
                (false, true) => {
                    for mut u in merges(&s1.to_vec(), t, sync, memo) {
                        u.insert(0, a);
                        out.insert(u);
                    }
                }
                (false, false) => {
                    for mut u in merges(&s1.to_vec(), t, sync, memo) {
                        u.insert(0, a);
                        out.insert(u);
                    }
                    for mut u in merges(s, &t1.to_vec(), sync, memo) {
                        u.insert(0, b);
                        out.insert(u);
                    }
                }
            }
        }
    }
    memo.insert((s.clone(), t.clone()), out.clone());
    out
}

// ---------------------------------------------------------------------------
// Operational side: decode a normalized automaton into the same shape.
// ---------------------------------------------------------------------------

/// Exhaustively decode the failures of a normalized automaton, following
/// traces up to `bound` (acyclic automata terminate on their own).
pub fn decode_norm(n: &NormLts, bound: usize) -> Denotation {
    let mut d = Denotation::empty();
    let mut stack = vec![(n.root, Vec::<EventId>::new())];
    while let Some((s, trace)) = stack.pop() {
        let st = &n.states[s as usize];
        d.traces.insert(trace.clone());
        if st.can_tick {
            d.tick_traces.insert(trace.clone());
        }
        if !st.min_acceptances.is_empty() {
            d.failures
                .insert(trace.clone(), n.max_refusals(s));
        }
        if trace.len() < bound {
            for &(e, t) in st.succ.iter() {
                let mut t2 = trace.clone();
                t2.push(e as EventId);
                stack.push((t, t2));
            }
        }
    }
    let mut out = d.normalize();
    for rs in out.failures.values_mut() {
        rs.sort();
    }
    out
}

/// Brute-force failures-inclusion: every trace, termination and refusal of
/// `q` occurs in `p`. Independent of the product-based checker.
pub fn brute_force_refines(p: &Denotation, q: &Denotation) -> bool {
    q.traces.is_subset(&p.traces)
        && q.tick_traces.is_subset(&p.tick_traces)
        && q.failures.iter().all(|(t, rs)| {
            rs.iter().all(|x| {
                p.failures
                    .get(t)
                    .is_some_and(|ps| ps.iter().any(|y| x.is_subset(y)))
            })
        })
}

// ---------------------------------------------------------------------------
// Catalogue
// ---------------------------------------------------------------------------

/// Base table shared by the catalogue: two I/O channels over values 1..2,
/// eight events total.
pub fn catalogue_spec() -> Spec {
    bricc::syntax::parse_spec(
        "nametype GV = {1..2}\n\
         datatype GD = v.GV\n\
         subtype IGD = in.GD | out.GD\n\
         channel a : IGD\n\
         channel b : IGD\n",
    )
    .expect("catalogue base parses")
}

/// Finite expressions exercising every operator clause, alone and nested.
pub fn catalogue(table: &EventTable) -> Vec<DExpr> {
    // Events: a.in.v.1=0 a.in.v.2=1 a.out.v.1=2 a.out.v.2=3
    //         b.in.v.1=4 b.in.v.2=5 b.out.v.1=6 b.out.v.2=7
    let _ = table;
    let (a1, a2, ao1, ao2, b1, b2, bo1, bo2) = (0, 1, 2, 3, 4, 5, 6, 7);
    let mut out: Vec<DExpr> = Vec::new();
    // Atoms and prefixes.
    out.push(stop());
    out.push(skip());
    out.push(pre(a1, stop()));
    out.push(pre(a1, skip()));
    out.push(pre(a1, pre(ao1, stop())));
    out.push(pre(a1, pre(ao1, pre(b1, skip()))));
    // Choices.
    out.push(ext(pre(a1, stop()), pre(a2, skip())));
    out.push(int(pre(a1, stop()), pre(a2, skip())));
    out.push(ext(pre(a1, stop()), skip()));
    out.push(int(pre(a1, stop()), skip()));
    out.push(int(stop(), skip()));
    out.push(ext(stop(), pre(b1, stop())));
    out.push(ext(int(pre(a1, stop()), pre(a2, stop())), pre(b1, stop())));
    out.push(int(ext(pre(a1, stop()), pre(b1, stop())), pre(a2, skip())));
    out.push(ext(pre(a1, pre(ao1, stop())), pre(a1, pre(ao2, stop()))));
    out.push(int(pre(ao1, stop()), pre(ao2, stop())));
    // Sequencing.
    out.push(seq(skip(), pre(a1, stop())));
    out.push(seq(pre(a1, skip()), pre(b1, stop())));
    out.push(seq(pre(a1, stop()), pre(b1, stop())));
    out.push(seq(int(pre(a1, skip()), skip()), pre(b1, skip())));
    out.push(seq(ext(pre(a1, skip()), pre(a2, stop())), pre(b1, skip())));
    out.push(seq(seq(pre(a1, skip()), pre(b1, skip())), pre(a2, skip())));
    // Hiding.
    out.push(hide(pre(a1, pre(ao1, stop())), &[a1]));
    out.push(hide(ext(pre(a1, stop()), pre(b1, stop())), &[a1]));
    out.push(hide(int(pre(a1, stop()), pre(b1, skip())), &[a1, b1]));
    out.push(hide(pre(a1, pre(ao1, pre(b1, stop()))), &[ao1]));
    out.push(hide(ext(pre(a1, pre(b1, stop())), pre(a2, stop())), &[b1]));
    out.push(hide(seq(pre(a1, skip()), pre(b1, stop())), &[a1]));
    // Renaming (functional, injective on the affected events).
    out.push(DExpr::Rename(
        Box::new(pre(a1, pre(ao1, stop()))),
        vec![(a1, b1), (ao1, bo1)],
    ));
    out.push(DExpr::Rename(
        Box::new(ext(pre(a1, stop()), pre(a2, skip()))),
        vec![(a1, b2)],
    ));
    out.push(DExpr::Rename(
        Box::new(int(pre(ao1, stop()), pre(ao2, stop()))),
        vec![(ao1, bo1), (ao2, bo2)],
    ));
    // Parallel composition.
    out.push(par(pre(a1, stop()), &[a1], pre(a1, skip())));
    out.push(par(pre(a1, pre(b1, stop())), &[b1], pre(b1, stop())));
    out.push(par(pre(a1, stop()), &[a1, a2], pre(a2, stop())));
    out.push(par(
        ext(pre(a1, stop()), pre(a2, stop())),
        &[a1, a2],
        pre(a2, pre(a1, stop())),
    ));
    out.push(par(
        int(pre(a1, stop()), pre(a2, stop())),
        &[a1, a2],
        ext(pre(a1, stop()), pre(a2, stop())),
    ));
    out.push(ileave(pre(a1, stop()), pre(b1, stop())));
    out.push(ileave(pre(a1, skip()), pre(b1, skip())));
    out.push(ileave(skip(), pre(b1, stop())));
    out.push(ileave(int(pre(a1, stop()), pre(a2, stop())), pre(b1, skip())));
    out.push(par(
        seq(pre(a1, skip()), pre(b1, skip())),
        &[b1],
        pre(b1, skip()),
    ));
    // Termination subtleties.
    out.push(ext(skip(), pre(a1, skip())));
    out.push(seq(ext(skip(), pre(a1, skip())), pre(b1, stop())));
    out.push(par(skip(), &[], skip()));
    // Termination under synchronization is kept symmetric: the textbook
    // refusal clause for parallel composition over-approximates when one
    // side can commit to termination that the composition blocks.
    out.push(par(ext(pre(a1, skip()), skip()), &[a1], ext(pre(a1, skip()), skip())));
    out.push(hide(seq(pre(a1, skip()), skip()), &[a1]));
    // Deeper nestings (five to six operators).
    out.push(hide(
        par(
            ext(pre(a1, pre(ao1, stop())), pre(a2, stop())),
            &[a1, a2],
            int(pre(a1, skip()), pre(a2, skip())),
        ),
        &[a2],
    ));
    out.push(seq(
        hide(pre(a1, pre(ao1, skip())), &[ao1]),
        int(pre(b1, stop()), pre(b2, stop())),
    ));
    out.push(ext(
        hide(pre(a1, pre(b1, stop())), &[a1]),
        pre(a2, int(pre(bo1, stop()), pre(bo2, skip()))),
    ));
    out.push(par(
        ileave(pre(a1, stop()), pre(b1, stop())),
        &[a1, b1],
        ext(pre(a1, pre(b1, stop())), pre(b1, stop())),
    ));
    out.push(int(
        seq(pre(a1, skip()), seq(pre(b1, skip()), pre(a2, stop()))),
        hide(ext(pre(a1, stop()), pre(b2, pre(bo2, stop()))), &[b2]),
    ));
    out.push(DExpr::Rename(
        Box::new(hide(ext(pre(a1, pre(ao1, stop())), pre(a2, stop())), &[a2])),
        vec![(a1, a2)],
    ));
    out.push(par(
        DExpr::Rename(Box::new(pre(a1, pre(b1, skip()))), vec![(a1, a2)]),
        &[b1],
        pre(b1, skip()),
    ));
    out.push(ext(
        ileave(pre(a1, stop()), skip()),
        int(pre(b1, stop()), stop()),
    ));
    out.push(seq(
        par(pre(a1, skip()), &[], pre(b1, skip())),
        int(pre(a2, stop()), skip()),
    ));
    out.push(hide(
        seq(ext(pre(a1, skip()), pre(b1, skip())), pre(ao1, stop())),
        &[a1, b1],
    ));
    out
}

/// Lower a finite oracle expression into the term engine (the same
/// operational core the compiler targets), with exact event-level hiding
/// and synchronization sets.
pub fn dexpr_to_term(arena: &mut bricc::lts::ProcArena, e: &DExpr) -> bricc::lts::TermId {
    let rl = arena.table.len();
    match e {
        DExpr::Stop => arena.stop(),
        DExpr::Skip => arena.skip(),
        DExpr::Prefix(ev, k) => {
            let kt = dexpr_to_term(arena, k);
            arena.prefix(*ev as u32, kt)
        }
        DExpr::Ext(l, r) => {
            let lt = dexpr_to_term(arena, l);
            let rt = dexpr_to_term(arena, r);
            arena.ext(vec![lt, rt])
        }
        DExpr::Int(l, r) => {
            let lt = dexpr_to_term(arena, l);
            let rt = dexpr_to_term(arena, r);
            arena.int(vec![lt, rt])
        }
        DExpr::Seq(l, r) => {
            let lt = dexpr_to_term(arena, l);
            let rt = dexpr_to_term(arena, r);
            arena.seq(lt, rt)
        }
        DExpr::Hide(b, evs) => {
            let bt = dexpr_to_term(arena, b);
            let set = arena.event_set(BitSet::from_iter(rl, evs.iter().copied()));
            arena.hide(set, bt)
        }
        DExpr::Rename(b, pairs) => {
            let bt = dexpr_to_term(arena, b);
            let map: Vec<(u32, u32)> = pairs.iter().map(|&(f, t)| (f as u32, t as u32)).collect();
            let mid = arena.rename_map(&map);
            arena.rename(mid, bt)
        }
        DExpr::Par(l, sync, r) => {
            let lt = dexpr_to_term(arena, l);
            let rt = dexpr_to_term(arena, r);
            let set = arena.event_set(BitSet::from_iter(rl, sync.iter().copied()));
            arena.par(set, lt, rt)
        }
    }
}

/// Compile an oracle expression and return its normalized automaton.
pub fn dexpr_norm(spec: &Spec, e: &DExpr) -> NormLts {
    let mut arena = bricc::lts::ProcArena::new(spec.table.clone());
    let root = dexpr_to_term(&mut arena, e);
    let lts = bricc::lts::lts_from_term(&mut arena, root, 1 << 20).expect("catalogue compiles");
    bricc::lts::failures_model(&lts)
}
