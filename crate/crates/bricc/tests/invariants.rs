//! Property suites over generated processes: printer/parser round trips,
//! refinement preorder laws, projection and serialization invariants, and
//! the depth function against a graph-search oracle.

mod common;

use proptest::prelude::*;

use bricc::analysis::{check_failures_equivalence, check_failures_refinement};
use bricc::generate::{gen_spec, tree_to_process, Generator};
use bricc::ioproc::{depth, serialize};
use bricc::lts::{compile_named, normalize, project, NormLts};
use bricc::syntax::{parse_spec, pretty};

fn generated_norm(seed: u64) -> (bricc::syntax::Spec, String, NormLts) {
    let mut g = Generator::new(seed);
    let mut spec = gen_spec(2, 2);
    let tree = g.gen_tree(&spec, &[0, 1], 3, 3, false);
    let name = tree_to_process(&mut spec, &tree, "G");
    let n = normalize(&compile_named(&spec, &name, 100_000).unwrap()).unwrap();
    (spec, name, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Printing a specification and parsing it back yields the same
    /// declarations, and parsing is deterministic.
    #[test]
    fn printer_parser_roundtrip(seed in 0u64..10_000) {
        let mut g = Generator::new(seed);
        let mut spec = gen_spec(2, 2);
        let tree = g.gen_tree(&spec, &[0, 1], 2, 3, false);
        let _ = tree_to_process(&mut spec, &tree, "G");
        let printed = pretty::print_spec(&spec);
        let spec2 = parse_spec(&printed).expect("printed form parses");
        prop_assert_eq!(&spec.processes, &spec2.processes);
        prop_assert!(spec.table.same_alphabet(&spec2.table));
        let spec3 = parse_spec(&printed).expect("parses again");
        prop_assert_eq!(pretty::print_spec(&spec2), pretty::print_spec(&spec3));
    }

    /// Refinement is reflexive, and mutual refinement coincides with
    /// equivalence of the decoded failures.
    #[test]
    fn refinement_is_reflexive(seed in 0u64..10_000) {
        let (_, _, n) = generated_norm(seed);
        prop_assert!(check_failures_refinement(&n, &n).unwrap().passed());
        prop_assert!(check_failures_equivalence(&n, &n).unwrap().passed());
    }

    /// Transitivity on sampled triples: an output-pruned refinement of an
    /// output-pruned refinement refines the original.
    #[test]
    fn refinement_is_transitive_on_pruning_chains(seed in 0u64..10_000) {
        let mut g = Generator::new(seed);
        let mut spec = gen_spec(2, 2);
        let t0 = g.gen_tree(&spec, &[0, 1], 2, 3, false);
        let Some(t1) = g.prune_output(&t0) else { return Ok(()) };
        let Some(t2) = g.prune_output(&t1) else { return Ok(()) };
        let n0 = {
            let name = tree_to_process(&mut spec, &t0, "A");
            normalize(&compile_named(&spec, &name, 100_000).unwrap()).unwrap()
        };
        let n1 = {
            let name = tree_to_process(&mut spec, &t1, "B");
            normalize(&compile_named(&spec, &name, 100_000).unwrap()).unwrap()
        };
        let n2 = {
            let name = tree_to_process(&mut spec, &t2, "C");
            normalize(&compile_named(&spec, &name, 100_000).unwrap()).unwrap()
        };
        prop_assert!(check_failures_refinement(&n0, &n1).unwrap().passed());
        prop_assert!(check_failures_refinement(&n1, &n2).unwrap().passed());
        prop_assert!(check_failures_refinement(&n0, &n2).unwrap().passed());
    }

    /// Refinement verdicts agree with brute-force failure-set inclusion.
    #[test]
    fn refinement_agrees_with_bruteforce_inclusion(seed in 0u64..10_000) {
        let mut g = Generator::new(seed);
        let mut spec = gen_spec(2, 2);
        let t0 = g.gen_tree(&spec, &[0, 1], 2, 2, false);
        let mutant = match seed % 3 {
            0 => g.prune_output(&t0),
            1 => g.drop_input(&t0, false),
            _ => g.insert_new_output(&spec, &t0),
        };
        let Some(t1) = mutant else { return Ok(()) };
        let a = tree_to_process(&mut spec, &t0, "A");
        let b = tree_to_process(&mut spec, &t1, "B");
        let na = normalize(&compile_named(&spec, &a, 100_000).unwrap()).unwrap();
        let nb = normalize(&compile_named(&spec, &b, 100_000).unwrap()).unwrap();
        let bound = 2 * na.state_count().max(nb.state_count()) + 2;
        let da = common::decode_norm(&na, bound);
        let db = common::decode_norm(&nb, bound);
        let fast = check_failures_refinement(&na, &nb).unwrap().passed();
        let slow = common::brute_force_refines(&da, &db);
        prop_assert_eq!(fast, slow);
    }

    /// Projecting onto every channel leaves the failures unchanged.
    #[test]
    fn full_projection_is_identity(seed in 0u64..10_000) {
        let (spec, name, n) = generated_norm(seed);
        let lts = compile_named(&spec, &name, 100_000).unwrap();
        let all: Vec<usize> = (0..spec.table.channels.len()).collect();
        let p = normalize(&project(&lts, &all)).unwrap();
        prop_assert!(check_failures_equivalence(&n, &p).unwrap().passed());
        let r = bricc::lts::restriction_model(&lts, &all);
        prop_assert!(check_failures_equivalence(&n, &r).unwrap().passed());
    }

    /// Serialization replays to a failures-equivalent automaton, and the
    /// table form round-trips exactly.
    #[test]
    fn serialize_decode_preserves_failures(seed in 0u64..10_000) {
        let (_, _, n) = generated_norm(seed);
        let sp = serialize(&n).expect("generated trees are root-looping");
        let replayed = normalize(&sp.decode().unwrap()).unwrap();
        prop_assert!(check_failures_equivalence(&n, &replayed).unwrap().passed());
        let text = sp.to_table();
        let sp2 = bricc::ioproc::SerialProcess::from_table(&text, n.table.clone()).unwrap();
        prop_assert_eq!(&sp.entries, &sp2.entries);
    }

    /// The depth equals the longest first-return trace found by plain
    /// graph search.
    #[test]
    fn depth_matches_graph_search(seed in 0u64..10_000) {
        let (_, _, n) = generated_norm(seed);
        let d = depth(&n).expect("root-looping");

        // Exhaustive first-return search (finite because the automaton is
        // root-looping: removing the root's incoming edges leaves a DAG).
        fn longest(n: &NormLts, s: u32, len: u32, best: &mut u32) {
            for e in n.enabled(s).collect::<Vec<_>>() {
                let t = n.succ_event(s, e).unwrap();
                if t == n.root {
                    *best = (*best).max(len + 1);
                } else {
                    longest(n, t, len + 1, best);
                }
            }
        }
        let mut best = 0;
        longest(&n, n.root, 0, &mut best);
        prop_assert_eq!(d, best);
    }

    /// Observation functions partition the enabled events of every state.
    #[test]
    fn observations_partition_enabled(seed in 0u64..10_000) {
        let (spec, _, n) = generated_norm(seed);
        let mut stack = vec![(n.root, Vec::new())];
        let mut seen = vec![false; n.state_count()];
        seen[n.root as usize] = true;
        while let Some((s, trace)) = stack.pop() {
            let ins = bricc::ioproc::obs_in(&n, &trace).unwrap();
            let outs = bricc::ioproc::obs_out(&n, &trace).unwrap();
            let mut union: Vec<usize> = ins.iter().chain(outs.iter()).copied().collect();
            union.sort_unstable();
            let enabled: Vec<usize> = n.enabled(s).collect();
            prop_assert_eq!(union, enabled);
            prop_assert!(ins.iter().all(|e| !outs.contains(e)));
            let _ = &spec;
            for e in n.enabled(s).collect::<Vec<_>>() {
                let t = n.succ_event(s, e).unwrap();
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    let mut t2 = trace.clone();
                    t2.push(e);
                    stack.push((t, t2));
                }
            }
        }
    }
}

/// The analogue of the trace-level inclusion between the two convergence
/// relations, on generated processes and enumerated trace pairs.
#[test]
fn trace_cvg_implies_ecvg_on_generated_processes() {
    let mut g = Generator::new(424242);
    for _ in 0..10 {
        let mut spec = gen_spec(2, 2);
        let tree = g.gen_tree(&spec, &[0, 1], 2, 2, false);
        let name = tree_to_process(&mut spec, &tree, "G");
        let n = normalize(&compile_named(&spec, &name, 100_000).unwrap()).unwrap();
        let mut traces = vec![vec![]];
        let mut stack = vec![(n.root, Vec::new())];
        while let Some((s, t)) = stack.pop() {
            if t.len() >= 4 {
                continue;
            }
            for e in n.enabled(s).collect::<Vec<_>>() {
                let mut t2 = t.clone();
                t2.push(e);
                traces.push(t2.clone());
                stack.push((n.succ_event(s, e).unwrap(), t2));
            }
        }
        // Widen candidate traces with arbitrary events to exercise
        // deletions as well as equality.
        let mut candidates = traces.clone();
        for t in &traces {
            for e in 0..spec.table.declared_len() {
                let mut t2 = vec![e];
                t2.extend(t);
                candidates.push(t2);
            }
        }
        for ta in &candidates {
            for tb in &traces {
                if bricc::convergence::oracle_cvg_traces(&n, ta, tb).unwrap() {
                    assert!(
                        bricc::convergence::oracle_ecvg_traces(&n, ta, tb).unwrap(),
                        "cvg without ecvg for {ta:?} vs {tb:?}"
                    );
                }
            }
        }
    }
}

/// A buffer pair relays without loss or reordering: on every trace, each
/// direction's emitted sequence is a prefix of the mapped consumed one.
#[test]
fn buffer_traces_are_fifo() {
    use bricc::contract::{buffer_spec, make_buffer};
    let mut spec = parse_spec(
        "nametype V = {1..2}\ndatatype D = v.V\nsubtype IOD = in.D | out.D\nchannel a : IOD\nchannel b : IOD\n",
    )
    .unwrap();
    for cap in [1u32, 2] {
        let bsp = buffer_spec(&spec.table, 0, 1, cap).unwrap();
        let l_map = bsp.l_map.clone();
        let r_map = bsp.r_map.clone();
        let buff = make_buffer(&mut spec, &bsp);
        let lts = bricc::lts::compile(&spec, &buff, 100_000).unwrap();
        let n = normalize(&lts).unwrap();
        // Enumerate traces up to a bound and check the relay discipline.
        let mut stack = vec![(n.root, Vec::new())];
        while let Some((s, trace)) = stack.pop() {
            for (map, _tag) in [(&l_map, "l"), (&r_map, "r")] {
                let consumed: Vec<usize> = trace
                    .iter()
                    .copied()
                    .filter(|e| map.iter().any(|&(src, _)| src == *e))
                    .map(|e| map.iter().find(|&&(src, _)| src == e).unwrap().1)
                    .collect();
                let emitted: Vec<usize> = trace
                    .iter()
                    .copied()
                    .filter(|e| map.iter().any(|&(_, dst)| dst == *e))
                    .collect();
                assert!(
                    emitted.len() <= consumed.len()
                        && emitted[..] == consumed[..emitted.len()],
                    "cap {cap}: emitted {emitted:?} is not a prefix of {consumed:?}"
                );
                assert!(consumed.len() - emitted.len() <= cap as usize);
            }
            // A non-empty direction never refuses its pending emission.
            for acc in &n.states[s as usize].min_acceptances {
                for (map, _) in [(&l_map, "l"), (&r_map, "r")] {
                    let consumed: Vec<usize> = trace
                        .iter()
                        .copied()
                        .filter(|e| map.iter().any(|&(src, _)| src == *e))
                        .map(|e| map.iter().find(|&&(src, _)| src == e).unwrap().1)
                        .collect();
                    let emitted = trace
                        .iter()
                        .filter(|e| map.iter().any(|&(_, dst)| dst == **e))
                        .count();
                    if emitted < consumed.len() {
                        assert!(acc.contains(consumed[emitted]));
                    }
                }
            }
            if trace.len() < 2 * cap as usize + 2 {
                for e in n.enabled(s).collect::<Vec<_>>() {
                    let mut t2 = trace.clone();
                    t2.push(e);
                    stack.push((n.succ_event(s, e).unwrap(), t2));
                }
            }
        }
    }
}

/// The deadlock verdict agrees with brute-force enumeration: a process
/// deadlocks exactly when some reachable trace admits the full refusal.
#[test]
fn deadlock_agrees_with_bruteforce() {
    let spec = common::catalogue_spec();
    for e in common::catalogue(&spec.table) {
        let n = common::dexpr_norm(&spec, &e);
        let d = common::decode_norm(&n, 64);
        let full = bricc::util::BitSet::full(spec.table.refusal_len());
        let brute = d.failures.values().any(|rs| rs.iter().any(|r| *r == full));
        let fast = !bricc::analysis::check_deadlock_free(&n).passed();
        assert_eq!(fast, brute, "{e:?}");
    }
}

/// Mutual refinement implies equal decoded failure sets (antisymmetry up
/// to failures) on catalogue pairs.
#[test]
fn mutual_refinement_is_failures_equality() {
    let spec = common::catalogue_spec();
    let exprs: Vec<_> = common::catalogue(&spec.table).into_iter().take(24).collect();
    let norms: Vec<_> = exprs.iter().map(|e| common::dexpr_norm(&spec, e)).collect();
    let decoded: Vec<_> = norms.iter().map(|n| common::decode_norm(n, 64)).collect();
    for i in 0..norms.len() {
        for j in 0..norms.len() {
            let ij = check_failures_refinement(&norms[i], &norms[j]).unwrap().passed();
            let ji = check_failures_refinement(&norms[j], &norms[i]).unwrap().passed();
            if ij && ji {
                assert_eq!(decoded[i], decoded[j], "exprs {i} and {j}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Parsing is total: arbitrary input produces a specification or
    /// diagnostics, never a panic, and identical input parses identically.
    #[test]
    fn parsing_never_panics(input in "[ -~\\n]{0,200}") {
        let a = parse_spec(&input);
        let b = parse_spec(&input);
        match (a, b) {
            (Ok(sa), Ok(sb)) => prop_assert_eq!(
                pretty::print_spec(&sa),
                pretty::print_spec(&sb)
            ),
            (Err(da), Err(db)) => prop_assert_eq!(da.len(), db.len()),
            _ => prop_assert!(false, "parse is nondeterministic"),
        }
    }

    /// Near-miss mutations of a valid specification also parse totally.
    #[test]
    fn mutated_corpus_never_panics(seed in 0u64..2000) {
        let base = "nametype V = {1..2}\ndatatype D = v.V\nsubtype IOD = in.D | out.D\nchannel c : IOD\nP = c.in.v.1 -> (c.out.v.1 -> P |~| c.out.v.2 -> P)\nassert P [F= P\n";
        let mut bytes = base.as_bytes().to_vec();
        let mut g = Generator::new(seed);
        use rand::Rng;
        for _ in 0..(seed % 5 + 1) {
            let i = g.rng.random_range(0..bytes.len());
            match seed % 3 {
                0 => { bytes.remove(i); }
                1 => bytes.insert(i, b"(){}[]|.->?!"[g.rng.random_range(0..12)]),
                _ => bytes[i] = b' ',
            }
        }
        if let Ok(text) = String::from_utf8(bytes) {
            let _ = parse_spec(&text);
        }
    }
}
