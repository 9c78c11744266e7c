//! Component contracts: behaviour plus channels, interfaces and their
//! mapping; contract semantics, buffered compositions with side-condition
//! checks, channel congruences, contract refinement and the two
//! inheritance relations.

pub mod buffer;
pub mod compose;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::analysis::{
    check_failures_refinement, AnalysisError, CounterExample, Stats, Status, Verdict,
};
use crate::convergence::{check_cvg, check_ecvg, ConvergenceError, ConvergenceVerdict, GlbConfig, Relation};
use crate::ioproc::check_io_process;
use crate::lts::{compile, normalize, restriction_model, CompileError, NormLts};
use crate::syntax::types::{ChanId, EventId};
use crate::syntax::{alphabet, ContractDecl, ProcessExpr, Spec};
use crate::util::BitSet;
pub use buffer::{buffer_spec, event_to_pattern, make_buffer, BufferError, BufferSpec};
pub use compose::{
    check_decoupled, check_fop, check_strong_compat, compose_communication, compose_feedback,
    compose_interleave, compose_reflexive,
};

/// A named interface: an event-type set attached to a channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interface {
    pub name: String,
    pub events: BitSet,
}

/// A component contract: an observational behaviour, a set of channels,
/// and a total map from channels to interfaces.
#[derive(Debug, Clone)]
pub struct Contract {
    pub name: String,
    pub behaviour: ProcessExpr,
    /// Total channel-to-interface map, sorted by channel.
    pub r_map: BTreeMap<ChanId, Interface>,
    /// Channels hooked away by compositions; their events may still occur
    /// in the behaviour but are no longer interaction points.
    pub internal_channels: Vec<ChanId>,
    /// Side-condition notes attached by compositions (conditions assumed
    /// rather than verified).
    pub notes: Vec<String>,
}

impl Contract {
    pub fn channels(&self) -> impl Iterator<Item = ChanId> + '_ {
        self.r_map.keys().copied()
    }

    pub fn channel_set(&self) -> Vec<ChanId> {
        self.r_map.keys().copied().collect()
    }

    /// Build a contract from its declaration, checking the structural
    /// invariants (behaviour arity, total map, interface validity, used
    /// channels covered).
    pub fn from_decl(spec: &Spec, decl: &ContractDecl) -> Result<Contract, ContractError> {
        let ContractDecl::Literal {
            name,
            behaviour,
            entries,
        } = decl
        else {
            return Err(ContractError::NotLiteral(decl.name().to_string()));
        };
        let def = spec
            .process(behaviour)
            .ok_or_else(|| ContractError::Invalid(format!("unknown behaviour `{behaviour}`")))?;
        if !def.params.is_empty() {
            return Err(ContractError::Invalid(format!(
                "behaviour `{behaviour}` takes parameters"
            )));
        }
        let mut r_map = BTreeMap::new();
        for (ch, iface) in entries {
            let ci = spec
                .table
                .channel_id(ch)
                .ok_or_else(|| ContractError::Invalid(format!("unknown channel `{ch}`")))?;
            let events = spec
                .interface_events(ch, iface)
                .map_err(|d| ContractError::Invalid(d.message))?;
            r_map.insert(
                ci,
                Interface {
                    name: iface.clone(),
                    events,
                },
            );
        }
        let body = ProcessExpr::named(behaviour);
        let used = alphabet(spec, &body);
        for e in used.iter() {
            if e >= spec.table.declared_len() {
                continue;
            }
            let ch = spec.table.channel_of(e);
            if !r_map.contains_key(&ch) {
                return Err(ContractError::Invalid(format!(
                    "behaviour `{behaviour}` uses channel `{}` outside the contract",
                    spec.table.channels[ch].name
                )));
            }
        }
        Ok(Contract {
            name: name.clone(),
            behaviour: body,
            r_map,
            internal_channels: Vec::new(),
            notes: Vec::new(),
        })
    }
}

/// The denotation of a contract: the normalized behaviour and, per
/// channel, the normalized projection of the behaviour onto it.
pub struct ContractDenotation {
    pub overall: NormLts,
    pub per_channel: BTreeMap<ChanId, Arc<NormLts>>,
    /// Syntactic alphabet of the behaviour.
    pub alphabet: BitSet,
    pub io_valid: bool,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ContractError {
    #[error("contract `{0}` is produced by composition, not declared")]
    NotLiteral(String),
    #[error("invalid contract: {0}")]
    Invalid(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Divergent(#[from] crate::lts::normalize::DivergentError),
    #[error("E_CHANNEL_CLASH: contracts share channel `{0}`")]
    ChannelClash(String),
    #[error("E_SIDE_CONDITION: {condition} fails{}", render_witness(.witness))]
    SideCondition {
        condition: String,
        witness: Option<String>,
    },
    #[error("E_NOT_DECOUPLED: {0}")]
    NotDecoupled(String),
    #[error("E_DEADLOCK: the reflexive composition can deadlock after {0}")]
    Deadlock(String),
    #[error(transparent)]
    Buffer(#[from] BufferError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("behaviour of `{0}` is not an I/O process: {1} fails")]
    NotIoProcess(String, String),
}

fn render_witness(w: &Option<String>) -> String {
    match w {
        Some(s) => format!(": {s}"),
        None => String::new(),
    }
}

/// Compute the contract's denotation. The overall behaviour must be
/// divergence-free; per-channel projections are taken in the
/// stable-failures view, where projection-induced internal cycles simply
/// contribute no stable state.
pub fn contract_semantics(
    spec: &Spec,
    ctr: &Contract,
    max_states: usize,
) -> Result<ContractDenotation, ContractError> {
    let lts = compile(spec, &ctr.behaviour, max_states)?;
    let overall = normalize(&lts)?;
    let io_valid = check_io_process(&lts, &overall).passed();
    let mut per_channel = BTreeMap::new();
    for c in ctr.channels() {
        per_channel.insert(c, Arc::new(restriction_model(&lts, &[c])));
    }
    Ok(ContractDenotation {
        overall,
        per_channel,
        alphabet: alphabet(spec, &ctr.behaviour),
        io_valid,
    })
}

/// Validate the behavioural invariant of a contract: its behaviour must be
/// an I/O process.
pub fn validate_contract(
    spec: &Spec,
    ctr: &Contract,
    max_states: usize,
) -> Result<ContractDenotation, ContractError> {
    let lts = compile(spec, &ctr.behaviour, max_states)?;
    let overall = normalize(&lts)?;
    let report = check_io_process(&lts, &overall);
    if let Some(cond) = report.first_failure() {
        return Err(ContractError::NotIoProcess(
            ctr.name.clone(),
            cond.name.to_string(),
        ));
    }
    contract_semantics(spec, ctr, max_states)
}

// ---------------------------------------------------------------------------
// Channel congruences
// ---------------------------------------------------------------------------

/// Default channel congruence: the extension's projection onto `c` refines
/// the original's projection onto `c`.
pub fn check_default_congruence(
    t_prime: &ContractDenotation,
    t: &ContractDenotation,
    c: ChanId,
) -> Result<Verdict, ContractError> {
    let p = t
        .per_channel
        .get(&c)
        .ok_or_else(|| ContractError::Invalid("channel not in original contract".into()))?;
    let q = t_prime
        .per_channel
        .get(&c)
        .ok_or_else(|| ContractError::Invalid("channel not in extension contract".into()))?;
    Ok(check_failures_refinement(p, q)?)
}

/// Input channel congruence, judged over maximal failures at shared
/// traces: where the original refuses every input, the extension must
/// refuse all inputs of `c`; and where the original refuses all inputs of
/// `c`, the extension may accept on `c` only events outside the original's
/// alphabet.
pub fn check_input_congruence(
    t_prime: &ContractDenotation,
    t: &ContractDenotation,
    c: ChanId,
    table: &crate::syntax::types::EventTable,
) -> Verdict {
    let start = std::time::Instant::now();
    let inputs = BitSet::from_iter(table.refusal_len(), table.input_events());
    let mut cin = BitSet::empty(table.refusal_len());
    for e in table.events_of_channel(c) {
        if table.dir_of(e) == crate::syntax::types::Dir::In {
            cin.insert(e);
        }
    }
    let new_events = t_prime.alphabet.difference(&t.alphabet);
    let cin_old = cin.difference(&new_events);

    // Product over shared traces.
    let a = &t_prime.overall;
    let b = &t.overall;
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![(a.root, b.root, Vec::<EventId>::new())];
    seen.insert((a.root, b.root));
    let mut explored = 0usize;
    while let Some((sa, sb, trace)) = stack.pop() {
        explored += 1;
        for x in a.max_refusals(sa) {
            for y in b.max_refusals(sb) {
                let clause1 = !inputs.is_subset(&y) || cin.is_proper_subset(&x);
                let clause2 = !cin.is_subset(&y) || cin_old.is_proper_subset(&x);
                if !(clause1 || clause2) {
                    return Verdict::fail(
                        CounterExample::Refusal { trace, refusal: x },
                        Stats {
                            states_explored: explored,
                            micros: start.elapsed().as_micros(),
                        },
                    );
                }
            }
        }
        for &(e, na) in a.states[sa as usize].succ.iter() {
            if let Some(nb) = b.succ_event(sb, e as EventId) {
                if seen.insert((na, nb)) {
                    let mut t2 = trace.clone();
                    t2.push(e as EventId);
                    stack.push((na, nb, t2));
                }
            }
        }
    }
    Verdict::pass(Stats {
        states_explored: explored,
        micros: start.elapsed().as_micros(),
    })
}

// ---------------------------------------------------------------------------
// Contract refinement and inheritance
// ---------------------------------------------------------------------------

/// Contract refinement: same channels, pointwise-included interfaces, and
/// failures refinement of the behaviours.
pub fn check_bric_refinement(
    t: &Contract,
    t_prime: &Contract,
    t_den: &ContractDenotation,
    tp_den: &ContractDenotation,
) -> Result<Verdict, ContractError> {
    let ct: Vec<ChanId> = t.channel_set();
    let cp: Vec<ChanId> = t_prime.channel_set();
    if ct != cp {
        let stats = Stats::default();
        return Ok(Verdict {
            status: Status::Fail,
            counterexample: None,
            stats,
            detail: Some("channel sets differ".into()),
        });
    }
    for (c, iface) in &t.r_map {
        let ip = &t_prime.r_map[c];
        if !iface.events.is_subset(&ip.events) {
            return Ok(Verdict {
                status: Status::Fail,
                counterexample: None,
                stats: Stats::default(),
                detail: Some(format!(
                    "interface of a shared channel shrinks ({} -> {})",
                    iface.name, ip.name
                )),
            });
        }
    }
    let v = check_failures_refinement(&t_den.overall, &tp_den.overall)?;
    Ok(if v.passed() {
        v
    } else {
        v.with_detail("behaviour refinement fails".into())
    })
}

/// Which congruence discharged a channel in an inheritance check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Congruence {
    Default,
    Input,
}

#[derive(Debug)]
pub struct InheritanceReport {
    pub verdict: Verdict,
    pub convergence: Option<ConvergenceVerdict>,
    /// Per original channel, the congruence that discharged it.
    pub channel_congruence: Vec<(ChanId, Congruence)>,
}

/// `t_prime` inherits from `t` when its interface map extends `t`'s, its
/// behaviour (extended-)converges to `t`'s, and every original channel is
/// default- or input-congruent.
pub fn check_inheritance(
    spec: &Spec,
    t: &Contract,
    t_prime: &Contract,
    t_den: &ContractDenotation,
    tp_den: &ContractDenotation,
    relation: Relation,
    cfg: &GlbConfig,
) -> Result<InheritanceReport, ContractError> {
    // (a) structural inclusion of the channel-to-interface map.
    for (c, iface) in &t.r_map {
        match t_prime.r_map.get(c) {
            None => {
                return Ok(InheritanceReport {
                    verdict: Verdict {
                        status: Status::Fail,
                        counterexample: None,
                        stats: Stats::default(),
                        detail: Some(format!(
                            "channel `{}` of the original is missing",
                            spec.table.channels[*c].name
                        )),
                    },
                    convergence: None,
                    channel_congruence: Vec::new(),
                })
            }
            Some(ip) => {
                if !iface.events.is_subset(&ip.events) {
                    return Ok(InheritanceReport {
                        verdict: Verdict {
                            status: Status::Fail,
                            counterexample: None,
                            stats: Stats::default(),
                            detail: Some(format!(
                                "interface of `{}` is not preserved",
                                spec.table.channels[*c].name
                            )),
                        },
                        convergence: None,
                        channel_congruence: Vec::new(),
                    });
                }
            }
        }
    }
    // (b) behavioural convergence.
    let conv = match relation {
        Relation::Cvg => check_cvg(&t_den.overall, &tp_den.overall, cfg),
        Relation::Ecvg => check_ecvg(&t_den.overall, &tp_den.overall, cfg),
    }
    .map_err(|e| match e {
        ConvergenceError::Analysis(a) => ContractError::Analysis(a),
        other => ContractError::Invalid(other.to_string()),
    })?;
    if !conv.verdict.passed() {
        let verdict = conv
            .verdict
            .clone()
            .with_detail("behaviour convergence fails".into());
        return Ok(InheritanceReport {
            verdict,
            convergence: Some(conv),
            channel_congruence: Vec::new(),
        });
    }
    // (c) per-channel congruence proviso.
    let mut discharge = Vec::new();
    for c in t.channel_set() {
        let d = check_default_congruence(tp_den, t_den, c)?;
        if d.passed() {
            discharge.push((c, Congruence::Default));
            continue;
        }
        let i = check_input_congruence(tp_den, t_den, c, &spec.table);
        if i.passed() {
            discharge.push((c, Congruence::Input));
            continue;
        }
        let verdict = d.with_detail(format!(
            "channel `{}` is neither default- nor input-congruent",
            spec.table.channels[c].name
        ));
        return Ok(InheritanceReport {
            verdict,
            convergence: Some(conv),
            channel_congruence: discharge,
        });
    }
    let stats = conv.verdict.stats.clone();
    Ok(InheritanceReport {
        verdict: Verdict::pass(stats),
        convergence: Some(conv),
        channel_congruence: discharge,
    })
}
