//! Stable-failures refinement, failures equivalence, deadlock freedom and
//! maximal-refusal queries over normalized automata.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::time::Instant;

use crate::lts::NormLts;
use crate::syntax::types::{EventId, EventTable};
use crate::util::BitSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Status {
    Pass,
    Fail,
}

/// Outcome of a check, with a witness when it fails.
///
/// A refinement failure always carries a failure of the candidate that the
/// specification does not cover: either a trace the specification cannot
/// perform (possibly ending in termination) or an uncovered refusal.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub status: Status,
    pub counterexample: Option<CounterExample>,
    pub stats: Stats,
    /// Optional human-oriented note (failing direction, side conditions...).
    pub detail: Option<String>,
}

#[derive(Debug, Clone)]
pub enum CounterExample {
    /// `trace` is performable by the candidate but not the specification;
    /// when `tick` is set the offending step is successful termination.
    Trace { trace: Vec<EventId>, tick: bool },
    /// After `trace`, the candidate refuses `refusal` but the specification
    /// has no maximal refusal covering it.
    Refusal { trace: Vec<EventId>, refusal: BitSet },
}

impl CounterExample {
    pub fn trace(&self) -> &[EventId] {
        match self {
            CounterExample::Trace { trace, .. } | CounterExample::Refusal { trace, .. } => trace,
        }
    }

    pub fn render(&self, table: &EventTable) -> String {
        match self {
            CounterExample::Trace { trace, tick } => {
                let mut s = crate::lts::export::trace_names(trace, table);
                if *tick {
                    s.push_str(" followed by termination");
                }
                format!("uncovered trace {s}")
            }
            CounterExample::Refusal { trace, refusal } => {
                let names: Vec<String> = refusal
                    .iter()
                    .map(|e| {
                        if e == table.tick_bit() {
                            "tick".into()
                        } else {
                            table.event_name(e).to_string()
                        }
                    })
                    .collect();
                format!(
                    "after {} the refusal {{{}}} is not covered",
                    crate::lts::export::trace_names(trace, table),
                    names.join(", ")
                )
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    pub states_explored: usize,
    pub micros: u128,
}

impl Verdict {
    pub fn pass(stats: Stats) -> Verdict {
        Verdict {
            status: Status::Pass,
            counterexample: None,
            stats,
            detail: None,
        }
    }

    pub fn fail(cx: CounterExample, stats: Stats) -> Verdict {
        Verdict {
            status: Status::Fail,
            counterexample: Some(cx),
            stats,
            detail: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn with_detail(mut self, d: String) -> Verdict {
        self.detail = Some(d);
        self
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum AnalysisError {
    #[error("E_ALPHABET_MISMATCH: operands declare different alphabets")]
    AlphabetMismatch,
    #[error("E_NO_SUCH_TRACE: the trace is not a trace of the process")]
    NoSuchTrace,
}

/// Every stable failure of `impl_q` must be a stable failure of `spec_p`.
///
/// Explores the product of the two normalized automata breadth-first; at
/// each reachable pair every maximal refusal of the candidate must be
/// contained in some maximal refusal of the specification (equivalently,
/// some minimal acceptance of the specification must be contained in the
/// candidate's acceptance). The witness is shortest, with ties broken by
/// canonical event order.
pub fn check_failures_refinement(
    spec_p: &NormLts,
    impl_q: &NormLts,
) -> Result<Verdict, AnalysisError> {
    if !spec_p.table.same_alphabet(&impl_q.table) {
        return Err(AnalysisError::AlphabetMismatch);
    }
    let start = Instant::now();
    let mut index: HashMap<(u32, u32), u32> = HashMap::new();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut parent: Vec<(u32, EventId)> = Vec::new();
    let mut queue: VecDeque<u32> = VecDeque::new();
    index.insert((spec_p.root, impl_q.root), 0);
    pairs.push((spec_p.root, impl_q.root));
    parent.push((0, 0));
    queue.push_back(0);

    fn trace_of(mut idx: u32, parent: &[(u32, EventId)]) -> Vec<EventId> {
        let mut out = Vec::new();
        while idx != 0 {
            let (p, e) = parent[idx as usize];
            out.push(e);
            idx = p;
        }
        out.reverse();
        out
    }

    while let Some(idx) = queue.pop_front() {
        let (ps, qs) = pairs[idx as usize];
        let pstate = &spec_p.states[ps as usize];
        let qstate = &impl_q.states[qs as usize];
        // Refusal coverage.
        for qacc in &qstate.min_acceptances {
            let covered = pstate.min_acceptances.iter().any(|pacc| pacc.is_subset(qacc));
            if !covered {
                let stats = Stats {
                    states_explored: pairs.len(),
                    micros: start.elapsed().as_micros(),
                };
                return Ok(Verdict::fail(
                    CounterExample::Refusal {
                        trace: trace_of(idx, &parent),
                        refusal: qacc.complement(),
                    },
                    stats,
                ));
            }
        }
        // Termination coverage.
        if qstate.can_tick && !pstate.can_tick {
            let stats = Stats {
                states_explored: pairs.len(),
                micros: start.elapsed().as_micros(),
            };
            return Ok(Verdict::fail(
                CounterExample::Trace {
                    trace: trace_of(idx, &parent),
                    tick: true,
                },
                stats,
            ));
        }
        // Trace coverage and product successors.
        for &(e, qn) in qstate.succ.iter() {
            match spec_p.succ_event(ps, e as EventId) {
                None => {
                    let mut trace = trace_of(idx, &parent);
                    trace.push(e as EventId);
                    let stats = Stats {
                        states_explored: pairs.len(),
                        micros: start.elapsed().as_micros(),
                    };
                    return Ok(Verdict::fail(
                        CounterExample::Trace { trace, tick: false },
                        stats,
                    ));
                }
                Some(pn) => {
                    if let std::collections::hash_map::Entry::Vacant(v) = index.entry((pn, qn)) {
                        let id = pairs.len() as u32;
                        v.insert(id);
                        pairs.push((pn, qn));
                        parent.push((idx, e as EventId));
                        queue.push_back(id);
                    }
                }
            }
        }
    }
    Ok(Verdict::pass(Stats {
        states_explored: pairs.len(),
        micros: start.elapsed().as_micros(),
    }))
}

/// Failures refinement with the specification normalized on the fly.
///
/// Full normalization of lower-bound automata can explode: every deviation
/// point keeps a session residue alive, so the subset space is exponential
/// even when the candidate only ever drives a sliver of it. Exploring the
/// product lazily builds only the subsets reachable along the candidate's
/// traces.
pub fn check_failures_refinement_lazy(
    spec_lts: &crate::lts::Lts,
    impl_q: &NormLts,
) -> Result<Verdict, AnalysisError> {
    if !spec_lts.table.same_alphabet(&impl_q.table) {
        return Err(AnalysisError::AlphabetMismatch);
    }
    let start = Instant::now();
    let mut spec = LazyNorm::new(spec_lts);
    let sroot = spec.root();

    let mut index: HashMap<(u32, u32), u32> = HashMap::new();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut parent: Vec<(u32, EventId)> = Vec::new();
    let mut queue: VecDeque<u32> = VecDeque::new();
    index.insert((sroot, impl_q.root), 0);
    pairs.push((sroot, impl_q.root));
    parent.push((0, 0));
    queue.push_back(0);

    fn trace_of(mut idx: u32, parent: &[(u32, EventId)]) -> Vec<EventId> {
        let mut out = Vec::new();
        while idx != 0 {
            let (p, e) = parent[idx as usize];
            out.push(e);
            idx = p;
        }
        out.reverse();
        out
    }

    let debug = std::env::var_os("BRICC_DEBUG").is_some();
    while let Some(idx) = queue.pop_front() {
        let (ss, qs) = pairs[idx as usize];
        let qstate = &impl_q.states[qs as usize];
        if debug && idx % 10_000 == 0 {
            eprintln!(
                "lazy-refine: pair {idx}, {} subsets, current subset size {}",
                spec.subsets.len(),
                spec.subsets[ss as usize].len()
            );
        }
        let (spec_accs, spec_tick) = spec.annotations(ss);
        for qacc in &qstate.min_acceptances {
            if !spec_accs.iter().any(|pacc| pacc.is_subset(qacc)) {
                return Ok(Verdict::fail(
                    CounterExample::Refusal {
                        trace: trace_of(idx, &parent),
                        refusal: qacc.complement(),
                    },
                    Stats {
                        states_explored: pairs.len(),
                        micros: start.elapsed().as_micros(),
                    },
                ));
            }
        }
        if qstate.can_tick && !spec_tick {
            return Ok(Verdict::fail(
                CounterExample::Trace {
                    trace: trace_of(idx, &parent),
                    tick: true,
                },
                Stats {
                    states_explored: pairs.len(),
                    micros: start.elapsed().as_micros(),
                },
            ));
        }
        for &(e, qn) in qstate.succ.iter() {
            match spec.step(ss, e as EventId) {
                None => {
                    let mut trace = trace_of(idx, &parent);
                    trace.push(e as EventId);
                    return Ok(Verdict::fail(
                        CounterExample::Trace { trace, tick: false },
                        Stats {
                            states_explored: pairs.len(),
                            micros: start.elapsed().as_micros(),
                        },
                    ));
                }
                Some(sn) => {
                    if let std::collections::hash_map::Entry::Vacant(v) = index.entry((sn, qn)) {
                        let id = pairs.len() as u32;
                        v.insert(id);
                        pairs.push((sn, qn));
                        parent.push((idx, e as EventId));
                        queue.push_back(id);
                    }
                }
            }
        }
    }
    Ok(Verdict::pass(Stats {
        states_explored: pairs.len(),
        micros: start.elapsed().as_micros(),
    }))
}

/// On-demand subset construction over an LTS: tau closures, per-subset
/// minimal acceptances and deterministic steps, computed as visited.
struct LazyNorm<'a> {
    lts: &'a crate::lts::Lts,
    mark: Vec<u32>,
    epoch: u32,
    index: HashMap<Box<[u32]>, u32>,
    subsets: Vec<Box<[u32]>>,
    annotations: Vec<Option<(std::sync::Arc<Vec<BitSet>>, bool)>>,
}

impl<'a> LazyNorm<'a> {
    fn new(lts: &'a crate::lts::Lts) -> Self {
        LazyNorm {
            lts,
            mark: vec![u32::MAX; lts.state_count()],
            epoch: 0,
            index: HashMap::new(),
            subsets: Vec::new(),
            annotations: Vec::new(),
        }
    }

    fn closure(&mut self, seed: &[u32]) -> Box<[u32]> {
        use crate::lts::Label;
        self.epoch += 1;
        let epoch = self.epoch;
        let mut out: Vec<u32> = Vec::new();
        let mut stack: Vec<u32> = Vec::new();
        for &s in seed {
            if self.mark[s as usize] != epoch {
                self.mark[s as usize] = epoch;
                stack.push(s);
                out.push(s);
            }
        }
        while let Some(s) = stack.pop() {
            for &(l, t) in self.lts.successors(s) {
                if l == Label::Tau && self.mark[t as usize] != epoch {
                    self.mark[t as usize] = epoch;
                    stack.push(t);
                    out.push(t);
                }
            }
        }
        out.sort_unstable();
        out.into_boxed_slice()
    }

    fn intern(&mut self, set: Box<[u32]>) -> u32 {
        if let Some(&id) = self.index.get(&set) {
            return id;
        }
        let id = self.subsets.len() as u32;
        self.index.insert(set.clone(), id);
        self.subsets.push(set);
        self.annotations.push(None);
        id
    }

    fn root(&mut self) -> u32 {
        let c = self.closure(&[self.lts.root]);
        self.intern(c)
    }

    fn step(&mut self, sid: u32, e: EventId) -> Option<u32> {
        use crate::lts::Label;
        let members = self.subsets[sid as usize].clone();
        let mut targets: Vec<u32> = Vec::new();
        for &q in members.iter() {
            for &(l, t) in self.lts.successors(q) {
                if l == Label::Event(e as u32) {
                    targets.push(t);
                }
            }
        }
        if targets.is_empty() {
            return None;
        }
        let c = self.closure(&targets);
        Some(self.intern(c))
    }

    fn annotations(&mut self, sid: u32) -> (std::sync::Arc<Vec<BitSet>>, bool) {
        use crate::lts::Label;
        if let Some((a, t)) = &self.annotations[sid as usize] {
            return (a.clone(), *t);
        }
        let refusal_len = self.lts.table.refusal_len();
        let tick_bit = self.lts.table.tick_bit();
        let mut accs = Vec::new();
        let mut can_tick = false;
        for &q in self.subsets[sid as usize].iter() {
            let row = self.lts.successors(q);
            let mut has_tau = false;
            let mut has_tick = false;
            for &(l, _) in row {
                match l {
                    Label::Tau => has_tau = true,
                    Label::Tick => has_tick = true,
                    _ => {}
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
                        acc.insert(e as usize);
                    }
                }
                if has_tick {
                    acc.insert(tick_bit);
                }
                accs.push(acc);
            }
        }
        let arc = std::sync::Arc::new(crate::util::minimal_antichain(accs));
        self.annotations[sid as usize] = Some((arc.clone(), can_tick));
        (arc, can_tick)
    }
}

/// PASS iff refinement holds in both directions; a failure reports the
/// first failing direction.
pub fn check_failures_equivalence(a: &NormLts, b: &NormLts) -> Result<Verdict, AnalysisError> {
    let lr = check_failures_refinement(a, b)?;
    if !lr.passed() {
        return Ok(lr.with_detail("right-to-left refinement fails".into()));
    }
    let rl = check_failures_refinement(b, a)?;
    if !rl.passed() {
        return Ok(rl.with_detail("left-to-right refinement fails".into()));
    }
    let stats = Stats {
        states_explored: lr.stats.states_explored + rl.stats.states_explored,
        micros: lr.stats.micros + rl.stats.micros,
    };
    Ok(Verdict::pass(stats))
}

/// PASS iff no reachable state can refuse every event and termination,
/// i.e. no stable state has an empty acceptance set.
pub fn check_deadlock_free(p: &NormLts) -> Verdict {
    let start = Instant::now();
    let mut parent: Vec<(u32, EventId)> = vec![(0, 0); p.state_count()];
    let mut seen = vec![false; p.state_count()];
    let mut queue: VecDeque<u32> = VecDeque::new();
    seen[p.root as usize] = true;
    queue.push_back(p.root);
    let mut explored = 0usize;
    while let Some(s) = queue.pop_front() {
        explored += 1;
        if p.states[s as usize]
            .min_acceptances
            .iter()
            .any(|a| a.is_empty())
        {
            let mut trace = Vec::new();
            let mut cur = s;
            while cur != p.root {
                let (pp, e) = parent[cur as usize];
                trace.push(e);
                cur = pp;
            }
            trace.reverse();
            return Verdict::fail(
                CounterExample::Refusal {
                    trace,
                    refusal: BitSet::full(p.table.refusal_len()),
                },
                Stats {
                    states_explored: explored,
                    micros: start.elapsed().as_micros(),
                },
            );
        }
        for &(e, t) in p.states[s as usize].succ.iter() {
            if !seen[t as usize] {
                seen[t as usize] = true;
                parent[t as usize] = (s, e as EventId);
                queue.push_back(t);
            }
        }
    }
    Verdict::pass(Stats {
        states_explored: explored,
        micros: start.elapsed().as_micros(),
    })
}

/// The maximal refusal sets of `p` after trace `t`.
pub fn maximal_refusals_after(p: &NormLts, t: &[EventId]) -> Result<Vec<BitSet>, AnalysisError> {
    let s = p.state_after(t).ok_or(AnalysisError::NoSuchTrace)?;
    Ok(p.max_refusals(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::{compile_named, failures_model, normalize};
    use crate::syntax::parse_spec;

    const BASE: &str = r#"
nametype VV = {1..4}
datatype CV = v.VV
subtype I_CV = in.CV | out.CV
channel c : I_CV

T = c.in.v.1 -> (c.out.v.1 -> T |~| c.out.v.2 -> T)
    []
    c.in.v.2 -> (c.out.v.3 -> T |~| c.out.v.4 -> T)
TSUB = c.in.v.1 -> c.out.v.1 -> TSUB
       []
       c.in.v.2 -> (c.out.v.3 -> TSUB |~| c.out.v.4 -> TSUB)
ESTOP = c.in.v.1 -> STOP
ESKIP = c.in.v.1 -> SKIP
EXT = c.in.v.1 -> EXT [] c.in.v.2 -> EXT [] c.in.v.3 -> EXT
"#;

    fn norm(name: &str) -> NormLts {
        let spec = parse_spec(BASE).unwrap();
        normalize(&compile_named(&spec, name, 10_000).unwrap()).unwrap()
    }

    #[test]
    fn refinement_is_reflexive() {
        for p in ["T", "TSUB", "ESTOP", "ESKIP"] {
            let n = norm(p);
            assert!(check_failures_refinement(&n, &n).unwrap().passed(), "{p}");
        }
    }

    #[test]
    fn pruning_internal_choice_refines() {
        let t = norm("T");
        let tsub = norm("TSUB");
        assert!(check_failures_refinement(&t, &tsub).unwrap().passed());
        // The converse fails: after <c.in.v.1> the abstraction may refuse
        // c.out.v.1, which the pruned process never does... so the witness
        // is a refusal of T not covered by TSUB.
        let v = check_failures_refinement(&tsub, &t).unwrap();
        assert_eq!(v.status, Status::Fail);
        let cx = v.counterexample.unwrap();
        assert!(matches!(cx, CounterExample::Refusal { ref trace, .. } if trace == &[0]));
    }

    #[test]
    fn new_trace_detected_with_shortest_witness() {
        let t = norm("T");
        let ext = norm("EXT");
        let v = check_failures_refinement(&t, &ext).unwrap();
        let cx = v.counterexample.unwrap();
        match cx {
            CounterExample::Trace { trace, tick } => {
                assert!(!tick);
                assert_eq!(trace, vec![2]); // c.in.v.3
            }
            other => panic!("expected trace witness, got {other:?}"),
        }
    }

    #[test]
    fn termination_distinguishes_stop_and_skip() {
        let estop = norm("ESTOP");
        let eskip = norm("ESKIP");
        let v = check_failures_equivalence(&estop, &eskip).unwrap();
        assert_eq!(v.status, Status::Fail);
        // STOP [F= SKIP fails on the termination trace.
        let v2 = check_failures_refinement(&estop, &eskip).unwrap();
        assert!(matches!(
            v2.counterexample.unwrap(),
            CounterExample::Trace { tick: true, .. }
        ));
        // SKIP [F= STOP fails because STOP also refuses tick.
        let v3 = check_failures_refinement(&eskip, &estop).unwrap();
        assert!(matches!(
            v3.counterexample.unwrap(),
            CounterExample::Refusal { .. }
        ));
    }

    #[test]
    fn deadlock_verdicts() {
        assert!(check_deadlock_free(&norm("T")).passed());
        let v = check_deadlock_free(&norm("ESTOP"));
        assert_eq!(v.status, Status::Fail);
        assert_eq!(v.counterexample.unwrap().trace(), &[0]);
        // Termination is not a deadlock.
        assert!(check_deadlock_free(&norm("ESKIP")).passed());
        // STOP itself deadlocks immediately.
        let spec = parse_spec(BASE).unwrap();
        let stop = normalize(
            &crate::lts::compile(&spec, &crate::syntax::ProcessExpr::Stop, 10).unwrap(),
        )
        .unwrap();
        let v = check_deadlock_free(&stop);
        assert_eq!(v.status, Status::Fail);
        assert!(v.counterexample.unwrap().trace().is_empty());
    }

    #[test]
    fn interleaving_commutes_up_to_failures() {
        let src = r#"
channel a
channel b
P = a -> P
Q = b -> Q
L = P ||| Q
R = Q ||| P
"#;
        let spec = parse_spec(src).unwrap();
        let l = normalize(&compile_named(&spec, "L", 1000).unwrap()).unwrap();
        let r = normalize(&compile_named(&spec, "R", 1000).unwrap()).unwrap();
        assert!(check_failures_equivalence(&l, &r).unwrap().passed());
    }

    #[test]
    fn distinct_alphabets_are_rejected() {
        let a = parse_spec("channel a\nP = a -> P\n").unwrap();
        let b = parse_spec("channel b\nQ = b -> Q\n").unwrap();
        let na = normalize(&compile_named(&a, "P", 100).unwrap()).unwrap();
        let nb = normalize(&compile_named(&b, "Q", 100).unwrap()).unwrap();
        assert!(matches!(
            check_failures_refinement(&na, &nb),
            Err(AnalysisError::AlphabetMismatch)
        ));
    }

    #[test]
    fn refusals_after_trace() {
        let t = norm("T");
        let refs = maximal_refusals_after(&t, &[0]).unwrap();
        assert_eq!(refs.len(), 2);
        // Each maximal refusal omits exactly one of the two outputs.
        for r in &refs {
            assert_eq!(r.count(), 8 + 1 - 1);
        }
        assert!(matches!(
            maximal_refusals_after(&t, &[4]),
            Err(AnalysisError::NoSuchTrace)
        ));
        // Divergent projections still answer refusal queries in the
        // stable-failures view.
        let spec = parse_spec(BASE).unwrap();
        let lts = compile_named(&spec, "T", 10_000).unwrap();
        let proj = crate::lts::project_names(&lts, &[]);
        let n = failures_model(&proj);
        assert!(n.states[n.root as usize].min_acceptances.is_empty());
    }
}
