//! Convergence and extended convergence between I/O processes, decided
//! either through the greatest-lower-bound construction and one failures
//! refinement, or by the brute-force oracle.

pub mod glb;
pub mod oracle;

use crate::analysis::{check_failures_refinement_lazy, AnalysisError, Status, Verdict};
use crate::ioproc::{serialize, SerialError};
use crate::lts::NormLts;
use crate::syntax::types::{Dir, EventId};
pub use glb::{build_glb_cvg, build_glb_ecvg, GlbConfig, GlbError, SessionPools, MARKER_NAMES};
pub use oracle::{oracle_check, oracle_cvg_traces, oracle_ecvg_traces, OracleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Relation {
    Cvg,
    Ecvg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Method {
    GlbRefinement,
    BruteForce,
}

#[derive(Debug, Clone)]
pub struct ConvergenceVerdict {
    pub relation: Relation,
    pub method: Method,
    pub verdict: Verdict,
    /// Deviation bound used by the lower-bound route.
    pub gap_used: Option<u32>,
    /// Set when a failing witness deviates more than the gap allows between
    /// convergence points, so the failure may be an artefact of the bound.
    pub gap_limited: bool,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ConvergenceError {
    #[error(transparent)]
    Glb(#[from] GlbError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Does `t_prime` converge to `t`?
pub fn check_cvg(
    t: &NormLts,
    t_prime: &NormLts,
    cfg: &GlbConfig,
) -> Result<ConvergenceVerdict, ConvergenceError> {
    check_relation(t, t_prime, cfg, Relation::Cvg)
}

/// Does `t_prime` extended-converge to `t`?
pub fn check_ecvg(
    t: &NormLts,
    t_prime: &NormLts,
    cfg: &GlbConfig,
) -> Result<ConvergenceVerdict, ConvergenceError> {
    check_relation(t, t_prime, cfg, Relation::Ecvg)
}

fn check_relation(
    t: &NormLts,
    t_prime: &NormLts,
    cfg: &GlbConfig,
    relation: Relation,
) -> Result<ConvergenceVerdict, ConvergenceError> {
    let extended = relation == Relation::Ecvg;
    if cfg.force_oracle {
        return brute_force(t, t_prime, relation);
    }
    let sp = match serialize(t) {
        Ok(sp) => sp,
        // Non-root-looping originals fall back to the oracle.
        Err(SerialError::CycleAvoidsRoot(_)) | Err(SerialError::NoReturn) => {
            return brute_force(t, t_prime, relation)
        }
    };
    let gap = match cfg.gap {
        Some(g) => g,
        None => match crate::ioproc::depth(t_prime) {
            Ok(d2) => d2.saturating_sub(sp.source_depth),
            // Without a defined depth for the extension, bound deviations
            // by its state count.
            Err(_) => t_prime.state_count() as u32,
        },
    };
    let mut cfg2 = cfg.clone();
    if cfg2.inputs.is_none() {
        // Restrict deviation pools to events either process can perform;
        // events neither side uses cannot influence the verdict.
        let used = used_events(t).union(&used_events(t_prime));
        cfg2.all_events = Some(used.clone());
        cfg2.inputs = Some(used);
    }
    let glb = glb::build_glb_with(&sp, gap, extended, &cfg2)?;
    let verdict = check_failures_refinement_lazy(&glb, t_prime)?;
    let gap_limited = match (&verdict.status, &verdict.counterexample) {
        (Status::Fail, Some(cx)) => witness_is_gap_limited(t, cx.trace(), gap, extended),
        _ => false,
    };
    Ok(ConvergenceVerdict {
        relation,
        method: Method::GlbRefinement,
        verdict,
        gap_used: Some(gap),
        gap_limited,
    })
}

fn brute_force(
    t: &NormLts,
    t_prime: &NormLts,
    relation: Relation,
) -> Result<ConvergenceVerdict, ConvergenceError> {
    let bound = oracle::default_bound(t, t_prime);
    let verdict = oracle_check(t, t_prime, relation == Relation::Ecvg, bound)?;
    Ok(ConvergenceVerdict {
        relation,
        method: Method::BruteForce,
        verdict,
        gap_used: None,
        gap_limited: false,
    })
}

/// Events occurring on any transition of the automaton.
pub fn used_events(n: &NormLts) -> crate::util::BitSet {
    let mut set = crate::util::BitSet::empty(n.table.refusal_len());
    for st in &n.states {
        for &(e, _) in st.succ.iter() {
            set.insert(e as usize);
        }
    }
    set
}

/// A failing witness is flagged as possibly gap-limited when its trace can
/// be deleted down to a trace of the original with unbounded deviation
/// runs, but not when runs between convergence points are capped at `gap`.
fn witness_is_gap_limited(t: &NormLts, trace: &[EventId], gap: u32, extended: bool) -> bool {
    matchable(t, trace, u32::MAX, extended) && !matchable(t, trace, gap, extended)
}

/// Frontier matching of a candidate trace against the original automaton
/// with a cap on the length of each deviation run.
fn matchable(t: &NormLts, trace: &[EventId], cap: u32, extended: bool) -> bool {
    // Frontier elements: (original state, remaining run budget if inside a
    // deviation run).
    let mut frontier: Vec<(u32, Option<u32>)> = vec![(t.root, None)];
    for &e in trace {
        let mut next: Vec<(u32, Option<u32>)> = Vec::new();
        for &(s, run) in &frontier {
            let enabled = t.succ_event(s, e).is_some();
            if let Some(sn) = t.succ_event(s, e) {
                next.push((sn, None));
            }
            let is_in = t.table.dir_of(e) == Dir::In;
            // A new-in-context input starts a fresh run.
            if is_in && !enabled && cap >= 1 {
                next.push((s, Some(cap - 1)));
            }
            // Within a run: plain convergence only deletes further inputs,
            // the extended form deletes any non-communicable event.
            if let Some(rem) = run {
                let deletable = !enabled && (extended || is_in);
                if deletable && rem >= 1 {
                    next.push((s, Some(rem - 1)));
                }
            }
        }
        next.sort_unstable();
        next.dedup();
        frontier = next;
        if frontier.is_empty() {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
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

T'' = c.in.v.1 -> ( c.in.v.2 -> c.out.v.1 -> T''
                 [] c.in.v.3 -> c.out.v.2 -> T'')
     []
     c.in.v.2 ->  c.out.v.4 -> T''
     []
     c.in.v.3 -> c.in.v.4 -> (c.out.v.1 ->
                               (c.in.v.1 -> c.out.v.1 -> T''
                               [] c.in.v.2 -> c.out.v.4 -> T'')
                             |~|
                             c.out.v.2 ->
                               (c.in.v.1 -> c.out.v.2 -> T''
                               [] c.in.v.2 -> c.out.v.3 -> T''))
"#;

    fn norm(name: &str) -> NormLts {
        let spec = parse_spec(BASE).unwrap();
        normalize(&compile_named(&spec, name, 100_000).unwrap()).unwrap()
    }

    #[test]
    fn known_convergent_pair_passes_both_routes() {
        let t = norm("T");
        let tp = norm("T'");
        let cfg = GlbConfig::default();
        let v = check_cvg(&t, &tp, &cfg).unwrap();
        assert_eq!(v.method, Method::GlbRefinement);
        assert_eq!(v.gap_used, Some(2));
        assert!(v.verdict.passed(), "{:?}", v.verdict.counterexample);

        let forced = GlbConfig {
            force_oracle: true,
            ..GlbConfig::default()
        };
        let v = check_cvg(&t, &tp, &forced).unwrap();
        assert_eq!(v.method, Method::BruteForce);
        assert!(v.verdict.passed());
    }

    #[test]
    fn extended_pair_passes_ecvg_but_not_cvg() {
        let t = norm("T");
        let te = norm("T''");
        let cfg = GlbConfig::default();
        let e = check_ecvg(&t, &te, &cfg).unwrap();
        assert!(e.verdict.passed(), "{:?}", e.verdict.counterexample);
        // The run after the new input contains an output, so plain
        // convergence fails on both routes.
        let c = check_cvg(&t, &te, &cfg).unwrap();
        assert!(!c.verdict.passed());
        let forced = GlbConfig {
            force_oracle: true,
            ..GlbConfig::default()
        };
        let c2 = check_cvg(&t, &te, &forced).unwrap();
        assert!(!c2.verdict.passed());
    }

    #[test]
    fn reflexive_convergence() {
        let t = norm("T");
        let cfg = GlbConfig::default();
        assert!(check_cvg(&t, &t, &cfg).unwrap().verdict.passed());
        assert!(check_ecvg(&t, &t, &cfg).unwrap().verdict.passed());
    }
}
