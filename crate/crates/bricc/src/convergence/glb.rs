//! Greatest-lower-bound automata for convergence checking.
//!
//! From the serialized form of an I/O process these builders construct the
//! process that, under failures refinement, bounds every process convergent
//! (or extended-convergent) to it within a given depth gap: deciding
//! convergence then reduces to one refinement check against the built
//! automaton.
//!
//! Deviation sessions are spliced in at every point of the serialized tree:
//! before expected inputs, a gated pool offers up to `gap` new-in-context
//! inputs internally while keeping the expected inputs externally
//! available; before outputs, an ungated pool offers up to `gap` inputs.
//! The extended variant acknowledges the first new input through a marker
//! handshake and then admits a bounded run of arbitrary new-in-context
//! events. Marker events are reserved names, hidden from the result.

use std::collections::HashMap;

use crate::ioproc::{SerialEv, SerialProcess};
use crate::lts::term::{DefId, SetId, TermId};
use crate::lts::{lts_from_term, CompileError, Lts, ProcArena};
use crate::util::BitSet;

/// Names of the reserved marker events used by the builders.
pub const MARKER_NAMES: [&str; 3] = ["end", "in_ack", "in_rdt"];

#[derive(Debug, Clone, thiserror::Error)]
pub enum GlbError {
    #[error("E_NOT_SUBSET: expected events are not a subset of the offered pool")]
    NotSubset,
    #[error(transparent)]
    Engine(#[from] CompileError),
    #[error("malformed serialized process: {0}")]
    MalformedSerial(String),
}

/// Configuration for the builders and convergence checks.
#[derive(Debug, Clone)]
pub struct GlbConfig {
    /// Number of deviation steps per session; `None` selects the depth
    /// difference of the compared processes.
    pub gap: Option<u32>,
    /// State budget for the constructed automaton.
    pub max_states: usize,
    /// Force the brute-force method in convergence checks.
    pub force_oracle: bool,
    /// Input events offered in deviation sessions; `None` means every
    /// declared input. Narrowing to the inputs either process can actually
    /// perform keeps the construction small without changing verdicts.
    pub inputs: Option<BitSet>,
    /// Event pool for post-input runs of the extended construction;
    /// `None` means every declared input and output.
    pub all_events: Option<BitSet>,
}

impl Default for GlbConfig {
    fn default() -> Self {
        GlbConfig {
            gap: None,
            max_states: 5_000_000,
            force_oracle: false,
            inputs: None,
            all_events: None,
        }
    }
}

/// Pool processes offering a set of events repeatedly, up to `n` rounds.
/// `exec` resolves each round internally; `exec_d` offers rounds externally;
/// `exec_q` runs the two in parallel so that gated events (those outside
/// `expected`) happen only when the internal side agrees.
pub struct SessionPools<'a> {
    pub arena: &'a mut ProcArena,
    /// in_ack marker, acknowledged after each event when present.
    pub ack: Option<u32>,
    memo: HashMap<(u8, SetId, u32), TermId>,
}

impl<'a> SessionPools<'a> {
    pub fn new(arena: &'a mut ProcArena, ack: Option<u32>) -> Self {
        SessionPools {
            arena,
            ack,
            memo: HashMap::new(),
        }
    }

    /// Internal-choice pool: each round internally picks an event from
    /// `evs` (or skips a round); terminates after at most `n` rounds.
    pub fn exec(&mut self, evs: SetId, n: u32) -> TermId {
        if let Some(&t) = self.memo.get(&(0, evs, n)) {
            return t;
        }
        let t = if n == 0 {
            self.arena.skip()
        } else {
            let deeper = self.exec(evs, n - 1);
            let events: Vec<u32> = self.arena.set_events(evs);
            let mut alts = vec![deeper];
            for x in events {
                let cont = match self.ack {
                    Some(ack) => {
                        let acked = self.arena.prefix(ack, deeper);
                        self.arena.prefix(x, acked)
                    }
                    None => self.arena.prefix(x, deeper),
                };
                alts.push(cont);
                alts.push(deeper);
            }
            if alts.len() == 1 {
                // Empty pool: only the skipped rounds remain.
                deeper
            } else {
                self.arena.int(alts)
            }
        };
        self.memo.insert((0, evs, n), t);
        t
    }

    /// External-choice pool: offers `evs` in external choice each round.
    pub fn exec_d(&mut self, evs: SetId, n: u32) -> TermId {
        if let Some(&t) = self.memo.get(&(1, evs, n)) {
            return t;
        }
        let t = if n == 0 {
            self.arena.skip()
        } else {
            let deeper = self.exec_d(evs, n - 1);
            let events: Vec<u32> = self.arena.set_events(evs);
            let mut alts = vec![deeper];
            for x in events {
                alts.push(self.arena.prefix(x, deeper));
            }
            self.arena.ext(alts)
        };
        self.memo.insert((1, evs, n), t);
        t
    }

    /// Gated pool: `expected ⊆ pool`; the complement is offered internally
    /// (synchronised between the two sides) while expected events remain
    /// externally available throughout.
    pub fn exec_q(&mut self, pool: SetId, expected: &BitSet, n: u32) -> Result<TermId, GlbError> {
        let pool_set = self.arena.set_bits(pool).clone();
        if !expected.is_subset(&pool_set) {
            return Err(GlbError::NotSubset);
        }
        let gated = pool_set.difference(expected);
        let gated_id = self.arena.event_set(gated);
        let internal = self.exec(gated_id, n);
        let external = self.exec_d(pool, n);
        Ok(self.arena.par(gated_id, internal, external))
    }
}

struct Builder<'a> {
    sp: &'a SerialProcess,
    arena: ProcArena,
    end_ev: u32,
    ack_ev: u32,
    rdt_ev: u32,
    gap: u32,
    extended: bool,
    inputs_id: SetId,
    all_id: SetId,
    slice_defs: HashMap<(usize, usize), DefId>,
    worklist: Vec<(DefId, usize, usize)>,
    pool_memo: HashMap<(u8, SetId, u32), TermId>,
}

impl<'a> Builder<'a> {
    fn new(
        sp: &'a SerialProcess,
        gap: u32,
        extended: bool,
        pools: (Option<BitSet>, Option<BitSet>),
    ) -> Builder<'a> {
        let (table, markers) = sp.table.with_markers(&MARKER_NAMES);
        let mut arena = ProcArena::new(table.clone());
        let widen = |b: &BitSet| {
            let mut w = BitSet::empty(table.len());
            for e in b.iter() {
                if e < table.declared_len() {
                    w.insert(e);
                }
            }
            w
        };
        let inputs = match &pools.0 {
            Some(p) => widen(&p.intersection(&sp.inputs)),
            None => widen(&sp.inputs),
        };
        let all_default = sp.inputs.union(&sp.outputs);
        let all = match &pools.1 {
            Some(p) => widen(&p.intersection(&all_default)).union(&inputs),
            None => widen(&all_default),
        };
        let inputs_id = arena.event_set(inputs);
        let all_id = arena.event_set(all);
        Builder {
            sp,
            arena,
            end_ev: markers[0] as u32,
            ack_ev: markers[1] as u32,
            rdt_ev: markers[2] as u32,
            gap,
            extended,
            inputs_id,
            all_id,
            slice_defs: HashMap::new(),
            worklist: Vec::new(),
            pool_memo: HashMap::new(),
        }
    }

    fn slice_def(&mut self, lo: usize, hi: usize) -> DefId {
        if let Some(&d) = self.slice_defs.get(&(lo, hi)) {
            return d;
        }
        let d = self.arena.new_def(&format!("node_{lo}_{hi}"));
        self.slice_defs.insert((lo, hi), d);
        self.worklist.push((d, lo, hi));
        d
    }

    fn offer_id(&self, ev: SerialEv) -> Result<u32, GlbError> {
        match ev {
            SerialEv::Event(e) => Ok(e as u32),
            SerialEv::End => Ok(self.end_ev),
            SerialEv::Start => Err(GlbError::MalformedSerial(
                "start marker among offers".into(),
            )),
        }
    }

    fn build(mut self, max_states: usize) -> Result<Lts, GlbError> {
        let n = self.sp.entries.len();
        if n == 0 {
            return Err(GlbError::MalformedSerial("empty serialization".into()));
        }
        let root_def = self.slice_def(0, n);
        while let Some((d, lo, hi)) = self.worklist.pop() {
            let body = self.node_body(lo, hi)?;
            self.arena.set_def_body(d, body);
        }
        let root_call = self.arena.call(root_def);
        let mut hide = BitSet::empty(self.arena.table.len());
        hide.insert(self.end_ev as usize);
        if self.extended {
            hide.insert(self.ack_ev as usize);
            hide.insert(self.rdt_ev as usize);
        }
        let hide_id = self.arena.event_set(hide);
        let root = self.arena.hide(hide_id, root_call);
        let lts = lts_from_term(&mut self.arena, root, max_states)?;
        // Markers are hidden, so the automaton only carries declared labels
        // and can be read against the source table. Quotienting by strong
        // bisimilarity collapses equivalent session residues, which keeps
        // the later normalization of this highly nondeterministic automaton
        // tractable.
        Ok(crate::lts::reduce_bisim(&Lts {
            table: self.sp.table.clone(),
            root: lts.root,
            trans: lts.trans,
        }))
    }

    fn node_body(&mut self, lo: usize, hi: usize) -> Result<TermId, GlbError> {
        let entries = &self.sp.entries;
        if lo >= hi {
            return Err(GlbError::MalformedSerial("empty branch slice".into()));
        }
        let head = entries[lo].clone();
        if head.ev == SerialEv::End {
            let root = self.slice_def(0, entries.len());
            return Ok(self.arena.call(root));
        }
        let level = head.level;
        let offers = head.offers.clone();
        let mut offer_ids = Vec::with_capacity(offers.len());
        for &o in &offers {
            offer_ids.push(self.offer_id(o)?);
        }
        let inputs = self.arena.set_bits(self.inputs_id).clone();
        let expected = BitSet::from_iter(self.arena.table.len(), offer_ids.iter().map(|&e| e as usize));
        let all_inputs = offer_ids.iter().all(|&e| inputs.contains(e as usize));

        // Continuations: one per offered event, through its branch slice.
        let mut conts = Vec::with_capacity(offers.len());
        for (&o, &oid) in offers.iter().zip(offer_ids.iter()) {
            let (blo, bhi) =
                crate::ioproc::serial::branch_range(o, entries, lo + 1..hi, level + 1, false);
            if blo >= bhi {
                return Err(GlbError::MalformedSerial(format!(
                    "no branch for offer at level {}",
                    level + 1
                )));
            }
            let d = self.slice_def(blo, bhi);
            let k = self.arena.call(d);
            conts.push(self.arena.prefix(oid, k));
        }

        let self_def = self.slice_def(lo, hi);
        let self_call = self.arena.call(self_def);
        let body = if all_inputs {
            let session = self.input_session(&expected)?;
            let seq = self.arena.seq(session, self_call);
            let ext = self.arena.ext(conts);
            self.arena.int(vec![seq, ext])
        } else {
            let session = self.output_session(&expected);
            let int = self.arena.int(conts);
            self.arena.seq(session, int)
        };
        Ok(body)
    }

    fn pools(&mut self) -> SessionPools<'_> {
        let ack = self.extended.then_some(self.ack_ev);
        SessionPools {
            arena: &mut self.arena,
            ack,
            memo: std::mem::take(&mut self.pool_memo),
        }
    }

    fn stash_pools(&mut self, pools_memo: HashMap<(u8, SetId, u32), TermId>) {
        self.pool_memo = pools_memo;
    }

    /// Session offered in internal choice with the expected inputs.
    fn input_session(&mut self, expected: &BitSet) -> Result<TermId, GlbError> {
        // The gated pool must contain the expected inputs even when the
        // deviation pool was narrowed.
        let pool_bits = self.arena.set_bits(self.inputs_id).union(expected);
        let pool_id = self.arena.event_set(pool_bits);
        if !self.extended {
            let gap = self.gap;
            let mut pools = self.pools();
            let r = pools.exec_q(pool_id, expected, gap);
            let memo = std::mem::take(&mut pools.memo);
            self.stash_pools(memo);
            return r;
        }
        let mut pools = self.pools();
        let q = pools.exec_q(pool_id, expected, 1);
        let memo = std::mem::take(&mut pools.memo);
        self.stash_pools(memo);
        let q = q?;
        Ok(self.wrap_aft(q, expected))
    }

    /// Session run before an internal choice among outputs.
    fn output_session(&mut self, expected: &BitSet) -> TermId {
        if !self.extended {
            let inputs_id = self.inputs_id;
            let gap = self.gap;
            let mut pools = self.pools();
            let t = pools.exec(inputs_id, gap);
            let memo = std::mem::take(&mut pools.memo);
            self.stash_pools(memo);
            return t;
        }
        let inputs_id = self.inputs_id;
        let mut pools = self.pools();
        let e = pools.exec(inputs_id, 1);
        let memo = std::mem::take(&mut pools.memo);
        self.stash_pools(memo);
        self.wrap_aft(e, expected)
    }

    /// Wrap a one-round session with the acknowledgement watchers: after a
    /// new input is acknowledged, a bounded run of arbitrary new-in-context
    /// events is allowed before termination.
    fn wrap_aft(&mut self, one_round: TermId, expected: &BitSet) -> TermId {
        let n = self.gap.saturating_sub(1);
        let all = self.arena.set_bits(self.all_id).clone();
        let after_events = all.difference(expected);
        let after_id = self.arena.event_set(after_events);
        let mut pools = self.pools();
        let after_pool = pools.exec(after_id, n);
        let memo = std::mem::take(&mut pools.memo);
        self.stash_pools(memo);

        // in_ack -> in_rdt -> SKIP [] SKIP
        let skip = self.arena.skip();
        let rdt = self.arena.prefix(self.rdt_ev, skip);
        let ackrdt = self.arena.prefix(self.ack_ev, rdt);
        let aft_in = self.arena.ext(vec![ackrdt, skip]);

        // in_rdt -> EXEC(all \ expected, n) [] SKIP
        let triggered = self.arena.prefix(self.rdt_ev, after_pool);
        let exec_after_in = self.arena.ext(vec![triggered, skip]);

        let ack_set = BitSet::from_iter(self.arena.table.len(), [self.ack_ev as usize]);
        let ack_id = self.arena.event_set(ack_set);
        let rdt_set = BitSet::from_iter(self.arena.table.len(), [self.rdt_ev as usize]);
        let rdt_id = self.arena.event_set(rdt_set);
        let inner = self.arena.par(ack_id, one_round, aft_in);
        self.arena.par(rdt_id, inner, exec_after_in)
    }
}

/// Build the convergence lower bound from a serialized process.
pub fn build_glb_cvg(sp: &SerialProcess, gap: u32, max_states: usize) -> Result<Lts, GlbError> {
    Builder::new(sp, gap, false, (None, None)).build(max_states)
}

/// Build the extended-convergence lower bound from a serialized process.
pub fn build_glb_ecvg(sp: &SerialProcess, gap: u32, max_states: usize) -> Result<Lts, GlbError> {
    Builder::new(sp, gap, true, (None, None)).build(max_states)
}

/// As [`build_glb_cvg`]/[`build_glb_ecvg`] with the configuration's
/// deviation pools.
pub fn build_glb_with(
    sp: &SerialProcess,
    gap: u32,
    extended: bool,
    cfg: &GlbConfig,
) -> Result<Lts, GlbError> {
    Builder::new(sp, gap, extended, (cfg.inputs.clone(), cfg.all_events.clone()))
        .build(cfg.max_states)
}
