//! Brute-force convergence oracle, independent of the lower-bound route.
//!
//! Trace-level convergence is decided by direct recursion on the defining
//! clauses; process-level convergence by exhaustive exploration of the
//! product of the candidate automaton with the set of convergently
//! matching states of the original, checking the refusal conditions over
//! maximal failures on both sides.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::analysis::{CounterExample, Stats, Verdict};
use crate::lts::NormLts;
use crate::syntax::types::{Dir, EventId};
use crate::util::BitSet;

#[derive(Debug, Clone, thiserror::Error)]
pub enum OracleError {
    #[error("E_BOUND_TOO_SMALL: the product is not closed within {0} steps")]
    BoundTooSmall(usize),
    #[error("E_NO_SUCH_TRACE: {0}")]
    NoSuchTrace(String),
}

fn is_input(t: &NormLts, e: EventId) -> bool {
    t.table.dir_of(e) == Dir::In
}

/// Decide whether `ta` (a trace of the extension) converges to `tb` (a
/// trace of `t`): they are equal, or `ta` deletes down to `tb` by removing
/// new-in-context inputs, each judged at the prefix of `tb` it follows.
pub fn oracle_cvg_traces(t: &NormLts, ta: &[EventId], tb: &[EventId]) -> Result<bool, OracleError> {
    let states = states_along(t, tb)?;
    let mut seen: HashSet<Vec<EventId>> = HashSet::new();
    Ok(cvg_rec(t, ta.to_vec(), tb, &states, &mut seen))
}

fn states_along(t: &NormLts, tb: &[EventId]) -> Result<Vec<u32>, OracleError> {
    let mut states = Vec::with_capacity(tb.len() + 1);
    let mut s = t.root;
    states.push(s);
    for &e in tb {
        s = t.succ_event(s, e).ok_or_else(|| {
            OracleError::NoSuchTrace("the second trace is not a trace of the process".into())
        })?;
        states.push(s);
    }
    Ok(states)
}

fn cvg_rec(
    t: &NormLts,
    ta: Vec<EventId>,
    tb: &[EventId],
    states: &[u32],
    seen: &mut HashSet<Vec<EventId>>,
) -> bool {
    if ta == tb {
        return true;
    }
    if ta.len() <= tb.len() || seen.contains(&ta) {
        return false;
    }
    let cpl = ta
        .iter()
        .zip(tb.iter())
        .take_while(|(a, b)| a == b)
        .count();
    for i in 0..=cpl {
        let ne = ta[i];
        if !is_input(t, ne) {
            continue;
        }
        let at = states[i];
        let offered = t.succ_event(at, ne).is_some();
        if offered {
            continue; // not new in context here
        }
        let mut stripped = ta.clone();
        stripped.remove(i);
        if cvg_rec(t, stripped, tb, states, seen) {
            return true;
        }
    }
    seen.insert(ta);
    false
}

/// Extended-convergence at trace level: each deletion removes one new
/// input together with a following run of events none of which the
/// original could communicate at that point.
pub fn oracle_ecvg_traces(
    t: &NormLts,
    ta: &[EventId],
    tb: &[EventId],
) -> Result<bool, OracleError> {
    let states = states_along(t, tb)?;
    let mut seen: HashSet<Vec<EventId>> = HashSet::new();
    Ok(ecvg_rec(t, ta.to_vec(), tb, &states, &mut seen))
}

fn ecvg_rec(
    t: &NormLts,
    ta: Vec<EventId>,
    tb: &[EventId],
    states: &[u32],
    seen: &mut HashSet<Vec<EventId>>,
) -> bool {
    if ta == tb {
        return true;
    }
    if ta.len() <= tb.len() || seen.contains(&ta) {
        return false;
    }
    let cpl = ta
        .iter()
        .zip(tb.iter())
        .take_while(|(a, b)| a == b)
        .count();
    for i in 0..=cpl {
        let ne = ta[i];
        if !is_input(t, ne) {
            continue;
        }
        let at = states[i];
        if t.succ_event(at, ne).is_some() {
            continue;
        }
        // Delete ne plus a (possibly empty) run of events the original
        // cannot communicate at this point.
        let mut j = i + 1;
        loop {
            let mut stripped = Vec::with_capacity(ta.len() - (j - i));
            stripped.extend_from_slice(&ta[..i]);
            stripped.extend_from_slice(&ta[j..]);
            if ecvg_rec(t, stripped, tb, states, seen) {
                return true;
            }
            if j < ta.len() && t.succ_event(at, ta[j]).is_none() {
                j += 1;
            } else {
                break;
            }
        }
    }
    seen.insert(ta);
    false
}

/// Matching mode of an original-process state inside the product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Mode {
    Normal,
    Block,
}

/// Exhaustive convergence check of `t2` against `t`.
///
/// Explores pairs of a candidate state with the set of original states
/// reachable through convergent matching; at each pair every maximal
/// refusal of the candidate must be matched by some maximal refusal of a
/// matched original state with more-or-equal inputs and less-or-equal
/// outputs (for the extended relation, alternatively refusing everything
/// the original accepts).
pub fn oracle_check(
    t: &NormLts,
    t2: &NormLts,
    extended: bool,
    bound: usize,
) -> Result<Verdict, OracleError> {
    let start = std::time::Instant::now();
    let inputs = BitSet::from_iter(t.table.refusal_len(), t.table.input_events());
    let outputs = BitSet::from_iter(t.table.refusal_len(), t.table.output_events());
    let sigma = {
        let mut s = BitSet::full(t.table.refusal_len());
        s.remove(t.table.tick_bit());
        s
    };

    type RSet = Vec<(u32, Mode)>;
    let mut index: HashMap<(u32, RSet), u32> = HashMap::new();
    let mut nodes: Vec<(u32, RSet)> = Vec::new();
    let mut parent: Vec<(u32, EventId)> = Vec::new();
    let mut depth: Vec<usize> = Vec::new();
    let mut queue: VecDeque<u32> = VecDeque::new();

    let root = (t2.root, vec![(t.root, Mode::Normal)]);
    index.insert(root.clone(), 0);
    nodes.push(root);
    parent.push((0, 0));
    depth.push(0);
    queue.push_back(0);

    let trace_of = |mut idx: u32, parent: &Vec<(u32, EventId)>| {
        let mut out = Vec::new();
        while idx != 0 {
            let (p, e) = parent[idx as usize];
            out.push(e);
            idx = p;
        }
        out.reverse();
        out
    };

    let max_refusals =
        |n: &NormLts, s: u32| -> Vec<BitSet> { n.max_refusals(s) };

    while let Some(idx) = queue.pop_front() {
        let (s2, matched) = nodes[idx as usize].clone();
        if matched.is_empty() {
            let trace = trace_of(idx, &parent);
            return Ok(Verdict::fail(
                CounterExample::Trace { trace, tick: false },
                Stats {
                    states_explored: nodes.len(),
                    micros: start.elapsed().as_micros(),
                },
            ));
        }
        // Refusal conditions over maximal failures.
        for x in max_refusals(t2, s2) {
            let x_in = x.intersection(&inputs);
            let x_out = x.intersection(&outputs);
            let ok = matched.iter().any(|&(s, _)| {
                max_refusals(t, s).iter().any(|y| {
                    let base = x_in.is_subset(&y.intersection(&inputs))
                        && y.intersection(&outputs).is_subset(&x_out);
                    if base {
                        return true;
                    }
                    extended && sigma.difference(y).is_subset(&x)
                })
            });
            if !ok {
                let trace = trace_of(idx, &parent);
                return Ok(Verdict::fail(
                    CounterExample::Refusal { trace, refusal: x },
                    Stats {
                        states_explored: nodes.len(),
                        micros: start.elapsed().as_micros(),
                    },
                ));
            }
        }
        // Successors.
        for &(e, s2n) in t2.states[s2 as usize].succ.iter() {
            let e = e as EventId;
            let mut next: RSet = Vec::new();
            for &(s, mode) in &matched {
                // Matching move.
                if let Some(sn) = t.succ_event(s, e) {
                    next.push((sn, Mode::Normal));
                }
                let enabled = t.succ_event(s, e).is_some();
                // New-in-context input starts (or restarts) a deletion.
                if is_input(t, e) && !enabled {
                    next.push((s, if extended { Mode::Block } else { Mode::Normal }));
                }
                // Inside a block, any event the original cannot do extends it.
                if extended && mode == Mode::Block && !enabled {
                    next.push((s, Mode::Block));
                }
            }
            next.sort_unstable();
            next.dedup();
            let key = (s2n, next);
            if let Some(_existing) = index.get(&key) {
                continue;
            }
            let d = depth[idx as usize] + 1;
            if d > bound {
                return Err(OracleError::BoundTooSmall(bound));
            }
            let id = nodes.len() as u32;
            index.insert(key.clone(), id);
            nodes.push(key);
            parent.push((idx, e));
            depth.push(d);
            queue.push_back(id);
        }
    }
    Ok(Verdict::pass(Stats {
        states_explored: nodes.len(),
        micros: start.elapsed().as_micros(),
    }))
}

/// Recommended exploration bound for [`oracle_check`].
pub fn default_bound(t: &NormLts, t2: &NormLts) -> usize {
    2 * t.state_count() * t2.state_count() + 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Status;
    use crate::lts::{compile_named, normalize};
    use crate::syntax::parse_spec;

    const BASE: &str = r#"
nametype VV = {1..4}
datatype CV = v.VV
subtype I_CV = in.CV | out.CV
channel c : I_CV

T = c.in.v.1 -> (c.out.v.1 -> T |~| c.out.v.2 -> T)
    []
    c.in.v.2 -> (c.out.v.3 -> T |~| c.out.v.4 -> T)

T' = c.in.v.1 -> (c.in.v.2 -> c.out.v.1 -> T'
                 []
                 c.in.v.3 -> c.out.v.2 -> T')
    []
    c.in.v.2 ->  c.out.v.4 -> T'
    []
    c.in.v.3 -> (c.in.v.1 ->  c.in.v.3 -> c.out.v.1 -> T'
                 [] c.in.v.2 -> c.out.v.3  -> T')
"#;

    fn norm(name: &str) -> NormLts {
        let spec = parse_spec(BASE).unwrap();
        normalize(&compile_named(&spec, name, 10_000).unwrap()).unwrap()
    }

    // Event ids: c.in.v.k = k-1, c.out.v.k = 4 + k-1.
    const IN1: usize = 0;
    const IN2: usize = 1;
    const IN3: usize = 2;
    const OUT1: usize = 4;

    #[test]
    fn deleting_new_inputs_converges() {
        let t = norm("T");
        // <in3, in1, in3> converges to <in1>: in3 is new in context at the
        // root and after <in1>.
        assert!(oracle_cvg_traces(&t, &[IN3, IN1, IN3], &[IN1]).unwrap());
        // Equal traces converge.
        assert!(oracle_cvg_traces(&t, &[IN1, OUT1], &[IN1, OUT1]).unwrap());
        // Outputs cannot be deleted.
        assert!(!oracle_cvg_traces(&t, &[OUT1], &[]).unwrap());
        // Expected inputs cannot be deleted.
        assert!(!oracle_cvg_traces(&t, &[IN2], &[]).unwrap());
    }

    #[test]
    fn trace_convergence_implies_extended() {
        let t = norm("T");
        for (ta, tb) in [
            (vec![IN3, IN1, IN3], vec![IN1]),
            (vec![IN1, OUT1], vec![IN1, OUT1]),
            (vec![IN3], vec![]),
        ] {
            if oracle_cvg_traces(&t, &ta, &tb).unwrap() {
                assert!(oracle_ecvg_traces(&t, &ta, &tb).unwrap());
            }
        }
        // A run after the new input is only allowed by the extended form.
        assert!(!oracle_cvg_traces(&t, &[IN3, OUT1, IN1], &[IN1]).unwrap());
        assert!(oracle_ecvg_traces(&t, &[IN3, OUT1, IN1], &[IN1]).unwrap());
    }

    #[test]
    fn process_level_oracle_accepts_known_extension() {
        let t = norm("T");
        let t2 = norm("T'");
        let bound = default_bound(&t, &t2);
        let v = oracle_check(&t, &t2, false, bound).unwrap();
        assert_eq!(v.status, Status::Pass, "{:?}", v.counterexample);
        let v = oracle_check(&t, &t2, true, bound).unwrap();
        assert_eq!(v.status, Status::Pass);
        // Reflexivity.
        let v = oracle_check(&t, &t, false, default_bound(&t, &t)).unwrap();
        assert_eq!(v.status, Status::Pass);
    }

    #[test]
    fn stopping_after_new_input_is_rejected() {
        let src = format!("{BASE}\nTSTOP = c.in.v.3 -> STOP [] c.in.v.1 -> (c.out.v.1 -> TSTOP |~| c.out.v.2 -> TSTOP) [] c.in.v.2 -> (c.out.v.3 -> TSTOP |~| c.out.v.4 -> TSTOP)");
        let spec = parse_spec(&src).unwrap();
        let t = normalize(&compile_named(&spec, "T", 10_000).unwrap()).unwrap();
        let t2 = normalize(&compile_named(&spec, "TSTOP", 10_000).unwrap()).unwrap();
        let v = oracle_check(&t, &t2, false, default_bound(&t, &t2)).unwrap();
        assert_eq!(v.status, Status::Fail);
        let cx = v.counterexample.unwrap();
        assert_eq!(cx.trace(), &[IN3]);
    }
}
