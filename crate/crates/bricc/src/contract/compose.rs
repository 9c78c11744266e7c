//! The four composition rules over contracts and their side conditions.
//!
//! Compositions are asynchronous: hooked channels communicate through a
//! bounded FIFO buffer pair, and disappear from the resulting contract's
//! interaction points (the behaviour keeps using them internally).

use std::collections::BTreeMap;

use super::{make_buffer, Contract, ContractError};
use crate::analysis::{check_failures_equivalence, Verdict};
use crate::contract::buffer::buffer_spec;
use crate::lts::term::TermId;
use crate::lts::{
    compile, failures_model, lts_from_term, restriction_model, Lts, NormLts, ProcArena,
};
use crate::syntax::types::{ChanId, Dir};
use crate::syntax::{ChannelSet, ProcessExpr, Spec};
use crate::util::BitSet;

fn chan_name(spec: &Spec, c: ChanId) -> String {
    spec.table.channels[c].name.clone()
}

fn chan_set(spec: &Spec, cs: &[ChanId]) -> ChannelSet {
    ChannelSet {
        channels: cs.iter().map(|&c| chan_name(spec, c)).collect(),
    }
}

fn disjoint(p: &Contract, q: &Contract) -> Result<(), ContractError> {
    for c in p.channels() {
        if q.r_map.contains_key(&c) {
            return Err(ContractError::ChannelClash(format!("channel id {c}")));
        }
    }
    Ok(())
}

/// Aggregate two independent contracts; they keep communicating with the
/// environment only.
pub fn compose_interleave(
    spec: &Spec,
    p: &Contract,
    q: &Contract,
    name: &str,
) -> Result<Contract, ContractError> {
    let _ = spec;
    disjoint(p, q)?;
    let mut r_map = BTreeMap::new();
    r_map.extend(p.r_map.clone());
    r_map.extend(q.r_map.clone());
    let mut internal = p.internal_channels.clone();
    internal.extend(&q.internal_channels);
    let mut notes = p.notes.clone();
    notes.extend(q.notes.iter().cloned());
    Ok(Contract {
        name: name.to_string(),
        behaviour: ProcessExpr::Interleave(
            Box::new(p.behaviour.clone()),
            Box::new(q.behaviour.clone()),
        ),
        r_map,
        internal_channels: internal,
        notes,
    })
}

/// Hook `ic` of `p` to `oc` of `q` through a buffer; the side conditions
/// (strong compatibility of the hooked projections and the finite output
/// property of both behaviours) must pass, and I/O confluence is recorded
/// as assumed rather than checked.
pub fn compose_communication(
    spec: &mut Spec,
    p: &Contract,
    ic: ChanId,
    q: &Contract,
    oc: ChanId,
    capacity: u32,
    max_states: usize,
    name: &str,
) -> Result<Contract, ContractError> {
    disjoint(p, q)?;
    if !p.r_map.contains_key(&ic) {
        return Err(ContractError::Invalid(format!(
            "channel `{}` is not a channel of `{}`",
            chan_name(spec, ic),
            p.name
        )));
    }
    if !q.r_map.contains_key(&oc) {
        return Err(ContractError::Invalid(format!(
            "channel `{}` is not a channel of `{}`",
            chan_name(spec, oc),
            q.name
        )));
    }
    let p_lts = compile(spec, &p.behaviour, max_states)?;
    let q_lts = compile(spec, &q.behaviour, max_states)?;
    side_conditions(spec, &p_lts, ic, &q_lts, oc, max_states)?;

    let bsp = buffer_spec(&spec.table, ic, oc, capacity)?;
    let buff = make_buffer(spec, &bsp);
    let inner = ProcessExpr::ParSync(
        Box::new(buff),
        chan_set(spec, &[oc]),
        Box::new(q.behaviour.clone()),
    );
    let behaviour = ProcessExpr::ParSync(
        Box::new(p.behaviour.clone()),
        chan_set(spec, &[ic]),
        Box::new(inner),
    );
    let mut r_map = BTreeMap::new();
    r_map.extend(p.r_map.clone());
    r_map.extend(q.r_map.clone());
    r_map.remove(&ic);
    r_map.remove(&oc);
    let mut internal = p.internal_channels.clone();
    internal.extend(&q.internal_channels);
    internal.push(ic);
    internal.push(oc);
    let mut notes = p.notes.clone();
    notes.extend(q.notes.iter().cloned());
    notes.push(format!(
        "UNCHECKED-CONFLUENCE: I/O confluence of `{}`/`{}` assumed",
        chan_name(spec, ic),
        chan_name(spec, oc)
    ));
    Ok(Contract {
        name: name.to_string(),
        behaviour,
        r_map,
        internal_channels: internal,
        notes,
    })
}

fn side_conditions(
    spec: &Spec,
    p_lts: &Lts,
    ic: ChanId,
    q_lts: &Lts,
    oc: ChanId,
    _max_states: usize,
) -> Result<(), ContractError> {
    let p_proj = restriction_model(p_lts, &[ic]);
    let q_proj = restriction_model(q_lts, &[oc]);
    let compat = check_strong_compat(spec, &p_proj, ic, &q_proj, oc);
    if !compat.passed() {
        return Err(ContractError::SideCondition {
            condition: "strong compatibility".into(),
            witness: compat
                .counterexample
                .map(|cx| cx.render(&spec.table)),
        });
    }
    for (lts, which) in [(p_lts, "left"), (q_lts, "right")] {
        let fop = check_fop(&failures_model(lts));
        if !fop.passed() {
            return Err(ContractError::SideCondition {
                condition: format!("finite output property ({which} operand)"),
                witness: fop.counterexample.map(|cx| cx.render(&spec.table)),
            });
        }
    }
    Ok(())
}

/// Hook two channels of the same contract; requires the channels to be
/// decoupled in the behaviour.
pub fn compose_feedback(
    spec: &mut Spec,
    p: &Contract,
    ic: ChanId,
    oc: ChanId,
    capacity: u32,
    max_states: usize,
    name: &str,
) -> Result<Contract, ContractError> {
    let lts = compile(spec, &p.behaviour, max_states)?;
    let dec = check_decoupled(spec, &lts, ic, oc)?;
    if !dec.passed() {
        return Err(ContractError::NotDecoupled(format!(
            "`{}` and `{}` interfere in `{}`",
            chan_name(spec, ic),
            chan_name(spec, oc),
            p.name
        )));
    }
    let p_proj = restriction_model(&lts, &[ic]);
    let q_proj = restriction_model(&lts, &[oc]);
    let compat = check_strong_compat(spec, &p_proj, ic, &q_proj, oc);
    if !compat.passed() {
        return Err(ContractError::SideCondition {
            condition: "strong compatibility".into(),
            witness: compat.counterexample.map(|cx| cx.render(&spec.table)),
        });
    }
    let fop = check_fop(&failures_model(&lts));
    if !fop.passed() {
        return Err(ContractError::SideCondition {
            condition: "finite output property".into(),
            witness: fop.counterexample.map(|cx| cx.render(&spec.table)),
        });
    }
    unary_composition(spec, p, ic, oc, capacity, name)
}

/// Hook two channels of the same contract without requiring decoupling;
/// instead the whole resulting behaviour is checked for deadlock freedom.
pub fn compose_reflexive(
    spec: &mut Spec,
    p: &Contract,
    ic: ChanId,
    oc: ChanId,
    capacity: u32,
    max_states: usize,
    name: &str,
) -> Result<Contract, ContractError> {
    let ctr = unary_composition(spec, p, ic, oc, capacity, name)?;
    let lts = compile(spec, &ctr.behaviour, max_states)?;
    let verdict = crate::analysis::check_deadlock_free(&failures_model(&lts));
    if !verdict.passed() {
        let trace = verdict
            .counterexample
            .map(|cx| crate::lts::export::trace_names(cx.trace(), &spec.table))
            .unwrap_or_default();
        return Err(ContractError::Deadlock(trace));
    }
    Ok(ctr)
}

fn unary_composition(
    spec: &mut Spec,
    p: &Contract,
    ic: ChanId,
    oc: ChanId,
    capacity: u32,
    name: &str,
) -> Result<Contract, ContractError> {
    for c in [ic, oc] {
        if !p.r_map.contains_key(&c) {
            return Err(ContractError::Invalid(format!(
                "channel `{}` is not a channel of `{}`",
                chan_name(spec, c),
                p.name
            )));
        }
    }
    if ic == oc {
        return Err(ContractError::Invalid(
            "cannot hook a channel to itself".into(),
        ));
    }
    let bsp = buffer_spec(&spec.table, ic, oc, capacity)?;
    let buff = make_buffer(spec, &bsp);
    let behaviour = ProcessExpr::ParSync(
        Box::new(p.behaviour.clone()),
        chan_set(spec, &[ic, oc]),
        Box::new(buff),
    );
    let mut r_map = p.r_map.clone();
    r_map.remove(&ic);
    r_map.remove(&oc);
    let mut internal = p.internal_channels.clone();
    internal.push(ic);
    internal.push(oc);
    Ok(Contract {
        name: name.to_string(),
        behaviour,
        r_map,
        internal_channels: internal,
        notes: p.notes.clone(),
    })
}

// ---------------------------------------------------------------------------
// Side conditions
// ---------------------------------------------------------------------------

/// Channels `c` and `z` are decoupled in `b` iff the projection onto both
/// together is failures-equivalent to the interleaving of the per-channel
/// projections.
pub fn check_decoupled(
    spec: &Spec,
    b: &Lts,
    c: ChanId,
    z: ChanId,
) -> Result<Verdict, ContractError> {
    let joint = restriction_model(b, &[c, z]);
    let pc = restriction_model(b, &[c]).to_lts();
    let pz = restriction_model(b, &[z]).to_lts();
    let mut arena = ProcArena::new(spec.table.clone());
    let ic = arena.register_lts(std::sync::Arc::new(pc));
    let iz = arena.register_lts(std::sync::Arc::new(pz));
    let rc = arena.import_root(ic);
    let rz = arena.import_root(iz);
    let empty = arena.event_set(BitSet::empty(spec.table.len()));
    let par: TermId = arena.par(empty, rc, rz);
    let interleaved = lts_from_term(&mut arena, par, 1 << 22)?;
    let inorm = failures_model(&interleaved);
    Ok(check_failures_equivalence(&joint, &inorm)?)
}

/// Strong compatibility of two hooked projections: exploring them in
/// lockstep (each side's outputs relabelled to the other side's inputs),
/// at every reachable joint state each side's offered outputs must be
/// consumable by the other side.
pub fn check_strong_compat(
    spec: &Spec,
    p_proj: &NormLts,
    ic: ChanId,
    q_proj: &NormLts,
    oc: ChanId,
) -> Verdict {
    let start = std::time::Instant::now();
    let table = &spec.table;
    let map_to = |from: ChanId, to: ChanId, e: usize| -> Option<usize> {
        let info = &table.events[e];
        debug_assert_eq!(info.channel, from);
        table.lookup(to, Dir::In, &info.value)
    };
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![(p_proj.root, q_proj.root, Vec::new())];
    seen.insert((p_proj.root, q_proj.root));
    let mut explored = 0;
    while let Some((sp, sq, trace)) = stack.pop() {
        explored += 1;
        let p_en: Vec<usize> = p_proj.enabled(sp).collect();
        let q_en: Vec<usize> = q_proj.enabled(sq).collect();
        // Outputs of p on ic must be inputs of q on oc, and vice versa.
        for &e in &p_en {
            if table.dir_of(e) == Dir::Out {
                let ok = map_to(ic, oc, e).is_some_and(|t| q_en.contains(&t));
                if !ok {
                    let mut t2 = trace.clone();
                    t2.push(e);
                    return Verdict::fail(
                        crate::analysis::CounterExample::Trace {
                            trace: t2,
                            tick: false,
                        },
                        crate::analysis::Stats {
                            states_explored: explored,
                            micros: start.elapsed().as_micros(),
                        },
                    );
                }
            }
        }
        for &e in &q_en {
            if table.dir_of(e) == Dir::Out {
                let ok = map_to(oc, ic, e).is_some_and(|t| p_en.contains(&t));
                if !ok {
                    let mut t2 = trace.clone();
                    t2.push(e);
                    return Verdict::fail(
                        crate::analysis::CounterExample::Trace {
                            trace: t2,
                            tick: false,
                        },
                        crate::analysis::Stats {
                            states_explored: explored,
                            micros: start.elapsed().as_micros(),
                        },
                    );
                }
            }
        }
        // Joint moves: an output with the matching input on the other side.
        for &e in &p_en {
            let (np, nq) = match table.dir_of(e) {
                Dir::Out => {
                    let t = map_to(ic, oc, e).expect("checked above");
                    (
                        p_proj.succ_event(sp, e).unwrap(),
                        q_proj.succ_event(sq, t).unwrap(),
                    )
                }
                Dir::In => {
                    // Matched by an output of q relabelled to this input.
                    let Some(src) = table
                        .events_of_channel(oc)
                        .find(|&qe| {
                            table.dir_of(qe) == Dir::Out && map_to(oc, ic, qe) == Some(e)
                        })
                    else {
                        continue;
                    };
                    if !q_en.contains(&src) {
                        continue;
                    }
                    (
                        p_proj.succ_event(sp, e).unwrap(),
                        q_proj.succ_event(sq, src).unwrap(),
                    )
                }
                Dir::Plain => continue,
            };
            if seen.insert((np, nq)) {
                let mut t2 = trace.clone();
                t2.push(e);
                stack.push((np, nq, t2));
            }
        }
    }
    Verdict::pass(crate::analysis::Stats {
        states_explored: explored,
        micros: start.elapsed().as_micros(),
    })
}

/// Finite output property: no reachable cycle consists solely of output
/// events.
pub fn check_fop(p: &NormLts) -> Verdict {
    let start = std::time::Instant::now();
    // DFS over output-labelled edges only.
    let n = p.state_count();
    let mut colour = vec![0u8; n];
    let outputs: Vec<bool> = (0..p.table.declared_len())
        .map(|e| p.table.dir_of(e) == Dir::Out)
        .collect();
    for s0 in 0..n as u32 {
        if colour[s0 as usize] != 0 {
            continue;
        }
        let mut stack: Vec<(u32, usize)> = vec![(s0, 0)];
        colour[s0 as usize] = 1;
        while let Some(&mut (s, ref mut idx)) = stack.last_mut() {
            let succ = &p.states[s as usize].succ;
            let mut advanced = false;
            while *idx < succ.len() {
                let (e, t) = succ[*idx];
                *idx += 1;
                if !outputs[e as usize] {
                    continue;
                }
                match colour[t as usize] {
                    0 => {
                        colour[t as usize] = 1;
                        stack.push((t, 0));
                        advanced = true;
                        break;
                    }
                    1 => {
                        // Output-only cycle found; report the shortest trace
                        // to the re-entered state.
                        let trace = shortest_trace(p, t);
                        return Verdict::fail(
                            crate::analysis::CounterExample::Trace { trace, tick: false },
                            crate::analysis::Stats {
                                states_explored: n,
                                micros: start.elapsed().as_micros(),
                            },
                        );
                    }
                    _ => {}
                }
            }
            if !advanced && *stack.last().map(|&(x, _)| x).as_ref().unwrap() == s {
                if let Some(&(top, idx2)) = stack.last() {
                    if top == s && idx2 >= succ.len() {
                        colour[s as usize] = 2;
                        stack.pop();
                    }
                }
            }
        }
    }
    Verdict::pass(crate::analysis::Stats {
        states_explored: n,
        micros: start.elapsed().as_micros(),
    })
}

fn shortest_trace(p: &NormLts, target: u32) -> Vec<usize> {
    let mut parent: Vec<Option<(u32, usize)>> = vec![None; p.state_count()];
    let mut seen = vec![false; p.state_count()];
    let mut q = std::collections::VecDeque::new();
    seen[p.root as usize] = true;
    q.push_back(p.root);
    while let Some(s) = q.pop_front() {
        if s == target {
            break;
        }
        for &(e, t) in p.states[s as usize].succ.iter() {
            if !seen[t as usize] {
                seen[t as usize] = true;
                parent[t as usize] = Some((s, e as usize));
                q.push_back(t);
            }
        }
    }
    let mut out = Vec::new();
    let mut cur = target;
    while let Some((pp, e)) = parent[cur as usize] {
        out.push(e);
        cur = pp;
    }
    out.reverse();
    out
}
