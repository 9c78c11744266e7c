//! I/O-process specifics: validation of the five defining conditions,
//! input/output observation functions, depth, serialization and the branch
//! traversal over serialized form.

pub mod serial;

use std::collections::VecDeque;

use crate::analysis::AnalysisError;
use crate::lts::{Lts, NormLts};
use crate::syntax::types::{Dir, EventId};
use crate::util::BitSet;
pub use serial::{branch, depth, serialize, SerialEntry, SerialError, SerialEv, SerialProcess};

/// Verdict for one of the five I/O-process conditions.
#[derive(Debug, Clone)]
pub struct ConditionResult {
    pub name: &'static str,
    pub ok: bool,
    /// On failure: a trace to the offending state and the event set involved.
    pub witness: Option<(Vec<EventId>, Vec<EventId>)>,
}

/// Per-condition verdicts for the five I/O-process conditions.
#[derive(Debug, Clone)]
pub struct IoReport {
    pub conditions: Vec<ConditionResult>,
}

impl IoReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.ok)
    }

    pub fn first_failure(&self) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| !c.ok)
    }
}

/// Input events communicable after trace `t`.
pub fn obs_in(p: &NormLts, t: &[EventId]) -> Result<Vec<EventId>, AnalysisError> {
    obs_dir(p, t, Dir::In)
}

/// Output events communicable after trace `t`.
pub fn obs_out(p: &NormLts, t: &[EventId]) -> Result<Vec<EventId>, AnalysisError> {
    obs_dir(p, t, Dir::Out)
}

fn obs_dir(p: &NormLts, t: &[EventId], dir: Dir) -> Result<Vec<EventId>, AnalysisError> {
    let s = p.state_after(t).ok_or(AnalysisError::NoSuchTrace)?;
    Ok(p.enabled(s).filter(|&e| p.table.dir_of(e) == dir).collect())
}

fn input_set(p: &NormLts) -> BitSet {
    BitSet::from_iter(p.table.refusal_len(), p.table.input_events())
}

/// Shortest trace to every normal state (breadth-first parents).
fn traces_to_states(p: &NormLts) -> Vec<Vec<EventId>> {
    let mut parent: Vec<Option<(u32, EventId)>> = vec![None; p.state_count()];
    let mut seen = vec![false; p.state_count()];
    let mut queue = VecDeque::new();
    seen[p.root as usize] = true;
    queue.push_back(p.root);
    while let Some(s) = queue.pop_front() {
        for &(e, t) in p.states[s as usize].succ.iter() {
            if !seen[t as usize] {
                seen[t as usize] = true;
                parent[t as usize] = Some((s, e as EventId));
                queue.push_back(t);
            }
        }
    }
    (0..p.state_count())
        .map(|mut s| {
            let mut out = Vec::new();
            while let Some((pp, e)) = parent[s] {
                out.push(e);
                s = pp as usize;
            }
            out.reverse();
            out
        })
        .collect()
}

/// Check the five I/O-process conditions of `lts`.
///
/// 1. every channel used has I/O discipline;
/// 2. the trace set is infinite (a visible cycle is reachable);
/// 3. the process is divergence-free;
/// 4. input determinism: no stable state refuses an offered input while
///    offering another (every acceptance that intersects the inputs
///    contains all communicable inputs of the state);
/// 5. strong output decisiveness: per channel with outputs on offer, every
///    acceptance offers at least one of them, and each offered output is
///    accepted exactly alone among that channel's outputs in some
///    acceptance.
pub fn check_io_process(lts: &Lts, norm: &NormLts) -> IoReport {
    let table = &norm.table;
    let mut conditions = Vec::with_capacity(5);

    // Condition 1: I/O channels.
    let mut c1 = ConditionResult {
        name: "io-channels",
        ok: true,
        witness: None,
    };
    'c1: for (s, row) in lts.trans.iter().enumerate() {
        for &(label, _) in row.iter() {
            if let crate::lts::Label::Event(e) = label {
                if table.dir_of(e as usize) == Dir::Plain {
                    c1.ok = false;
                    // The trace is left empty: the offending event names the
                    // channel regardless of where it occurs.
                    c1.witness = Some((Vec::new(), vec![e as usize]));
                    let _ = s;
                    break 'c1;
                }
            }
        }
    }
    conditions.push(c1);

    // Condition 2: infinite traces — some cycle is reachable in the
    // normalized automaton (all of whose labels are visible).
    let has_cycle = {
        let n = norm.state_count();
        let mut colour = vec![0u8; n];
        let mut found = false;
        let mut stack: Vec<(u32, usize)> = Vec::new();
        colour[norm.root as usize] = 1;
        stack.push((norm.root, 0));
        while let Some(&mut (s, ref mut idx)) = stack.last_mut() {
            let succ = &norm.states[s as usize].succ;
            if *idx < succ.len() {
                let t = succ[*idx].1;
                *idx += 1;
                match colour[t as usize] {
                    0 => {
                        colour[t as usize] = 1;
                        stack.push((t, 0));
                    }
                    1 => {
                        found = true;
                        break;
                    }
                    _ => {}
                }
            } else {
                colour[s as usize] = 2;
                stack.pop();
            }
        }
        found
    };
    conditions.push(ConditionResult {
        name: "infinite-traces",
        ok: has_cycle,
        witness: None,
    });

    // Condition 3: divergence freedom.
    let mut c3 = ConditionResult {
        name: "divergence-free",
        ok: true,
        witness: None,
    };
    if let crate::lts::DivergenceVerdict::Fail { trace } = crate::lts::check_divergence_free(lts) {
        c3.ok = false;
        c3.witness = Some((trace, Vec::new()));
    }
    conditions.push(c3);

    // Conditions 4 and 5 quantify over the stable refusals of every
    // reachable normal state.
    let traces = traces_to_states(norm);
    let inputs = input_set(norm);

    let mut c4 = ConditionResult {
        name: "input-determinism",
        ok: true,
        witness: None,
    };
    'c4: for (s, st) in norm.states.iter().enumerate() {
        let mut obs_in = norm.enabled_set(s as u32);
        obs_in.intersect_with(&inputs);
        if obs_in.is_empty() {
            continue;
        }
        for acc in &st.min_acceptances {
            if acc.intersects(&inputs) && !obs_in.is_subset(acc) {
                c4.ok = false;
                let refused: Vec<EventId> = obs_in.difference(acc).iter().collect();
                c4.witness = Some((traces[s].clone(), refused));
                break 'c4;
            }
        }
    }
    conditions.push(c4);

    let mut c5 = ConditionResult {
        name: "strong-output-decisiveness",
        ok: true,
        witness: None,
    };
    'c5: for (s, st) in norm.states.iter().enumerate() {
        let enabled: Vec<EventId> = norm.enabled(s as u32).collect();
        let mut chans: Vec<usize> = enabled
            .iter()
            .filter(|&&e| table.dir_of(e) == Dir::Out)
            .map(|&e| table.channel_of(e))
            .collect();
        chans.sort_unstable();
        chans.dedup();
        for ch in chans {
            let outs = BitSet::from_iter(
                table.refusal_len(),
                enabled
                    .iter()
                    .copied()
                    .filter(|&e| table.dir_of(e) == Dir::Out && table.channel_of(e) == ch),
            );
            // (a) no stable state refuses all offered outputs of the channel
            for acc in &st.min_acceptances {
                if !acc.intersects(&outs) {
                    c5.ok = false;
                    c5.witness = Some((traces[s].clone(), outs.iter().collect()));
                    break 'c5;
                }
            }
            // (b) each offered output is, in some acceptance, the only
            // output of its channel on offer
            for o in outs.iter() {
                let lone = st.min_acceptances.iter().any(|acc| {
                    acc.contains(o) && acc.intersection(&outs).count() == 1
                });
                if !lone {
                    c5.ok = false;
                    c5.witness = Some((traces[s].clone(), vec![o]));
                    break 'c5;
                }
            }
        }
    }
    conditions.push(c5);

    IoReport { conditions }
}
