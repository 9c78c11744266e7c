//! Seeded random generators for property suites: root-looping I/O
//! processes, convergent and divergent mutants, contracts over generated
//! channel sets, mirror partners for buffered composition, and random
//! normal-form composition systems.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::contract::{Contract, Interface};
use crate::lts::NormLts;
use crate::syntax::types::{ChanId, Dir, EventId};
use crate::syntax::{parse_spec, ProcessExpr, Spec};
use crate::util::BitSet;

/// A generated process in explicit shape: a tree of branches from the
/// root, each eventually returning to the root. Every state offers events
/// of a single channel and direction, so the result is an I/O process by
/// construction (external choice over inputs, internal choice over
/// outputs).
#[derive(Debug, Clone)]
pub struct TreeProcess {
    pub states: Vec<TreeState>,
}

#[derive(Debug, Clone)]
pub struct TreeState {
    pub dir: Dir,
    /// Offered events and their target states (0 is the root).
    pub offers: Vec<(EventId, usize)>,
}

impl TreeProcess {
    pub fn root_inputs(&self) -> Vec<EventId> {
        self.states[0].offers.iter().map(|&(e, _)| e).collect()
    }
}

/// A fresh specification with `channels` I/O channels (`k0`, `k1`, ...)
/// carrying ping/pong values `1..=payload`.
pub fn gen_spec(channels: usize, payload: usize) -> Spec {
    let mut src = String::new();
    src.push_str(&format!("nametype GV = {{1..{payload}}}\n"));
    src.push_str("datatype GD = ping.GV | pong.GV\n");
    src.push_str("subtype I_GD = in.GD | out.GD\n");
    for i in 0..channels {
        src.push_str(&format!("channel k{i} : I_GD\n"));
    }
    parse_spec(&src).expect("generated base parses")
}

pub struct Generator {
    pub rng: ChaCha8Rng,
}

impl Generator {
    pub fn new(seed: u64) -> Generator {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn channel_events(&self, spec: &Spec, c: ChanId, dir: Dir) -> Vec<EventId> {
        spec.table
            .events_of_channel(c)
            .filter(|&e| spec.table.dir_of(e) == dir)
            .collect()
    }

    /// Random root-looping tree over the given channels.
    ///
    /// `branches` top-level alternatives, each a path of up to `depth`
    /// states; when `need_input` is set every cycle contains at least one
    /// input state (the finite output property holds by construction).
    pub fn gen_tree(
        &mut self,
        spec: &Spec,
        channels: &[ChanId],
        branches: usize,
        depth: usize,
        need_input: bool,
    ) -> TreeProcess {
        let mut tree = TreeProcess {
            states: vec![TreeState {
                dir: Dir::In,
                offers: Vec::new(),
            }],
        };
        // The root offers one distinct input per branch.
        let root_chan = channels[self.rng.random_range(0..channels.len())];
        let mut root_events = self.channel_events(spec, root_chan, Dir::In);
        root_events.shuffle(&mut self.rng);
        let branches = branches.min(root_events.len());
        for &ev in root_events.iter().take(branches.max(1)) {
            let len = self.rng.random_range(0..depth);
            let mut had_input = false;
            // Build the path backwards from the root return.
            let mut target = 0usize;
            for step in 0..len {
                let is_last_chance = need_input && !had_input && step == len - 1;
                let dir = if is_last_chance || self.rng.random_bool(0.5) {
                    Dir::In
                } else {
                    Dir::Out
                };
                had_input |= dir == Dir::In;
                let chan = channels[self.rng.random_range(0..channels.len())];
                let mut evs = self.channel_events(spec, chan, dir);
                evs.shuffle(&mut self.rng);
                let k = self.rng.random_range(1..=2.min(evs.len()));
                let offers: Vec<(EventId, usize)> =
                    evs.into_iter().take(k).map(|e| (e, target)).collect();
                tree.states.push(TreeState { dir, offers });
                target = tree.states.len() - 1;
            }
            let _ = had_input;
            tree.states[0].offers.push((ev, target));
        }
        tree.states[0].offers.sort_unstable();
        tree
    }

    /// Remove one alternative from an internal output choice; the result
    /// refines the original.
    pub fn prune_output(&mut self, tree: &TreeProcess) -> Option<TreeProcess> {
        let candidates: Vec<usize> = tree
            .states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.dir == Dir::Out && s.offers.len() >= 2)
            .map(|(i, _)| i)
            .collect();
        let &s = candidates.choose(&mut self.rng)?;
        let mut out = tree.clone();
        let k = self.rng.random_range(0..out.states[s].offers.len());
        out.states[s].offers.remove(k);
        Some(out)
    }

    /// Splice a convergent deviation into the tree: a chain of `len`
    /// new-in-context inputs at a random anchor, returning to the anchor.
    /// At input anchors the interior keeps the anchor's inputs available
    /// (leading to the anchor's successors); at output anchors the interior
    /// offers only the next chain input.
    pub fn insert_cvg_detour(
        &mut self,
        spec: &Spec,
        tree: &TreeProcess,
        len: usize,
        input_anchors_only: bool,
    ) -> Option<TreeProcess> {
        let all: Vec<ChanId> = (0..spec.table.channels.len()).collect();
        self.insert_detour(spec, tree, len, input_anchors_only, false, &all)
    }

    /// As [`Generator::insert_cvg_detour`] with deviation events drawn from
    /// the given channels only (so a detour cannot collide with protocol
    /// channels of a surrounding composition).
    pub fn insert_cvg_detour_on(
        &mut self,
        spec: &Spec,
        tree: &TreeProcess,
        len: usize,
        input_anchors_only: bool,
        chans: &[ChanId],
    ) -> Option<TreeProcess> {
        self.insert_detour(spec, tree, len, input_anchors_only, false, chans)
    }

    /// Extended-convergence deviation: one new-in-context input followed by
    /// arbitrary new-in-context events (inputs or outputs); the interior
    /// offers only the chain.
    pub fn insert_ecvg_detour(
        &mut self,
        spec: &Spec,
        tree: &TreeProcess,
        len: usize,
        input_anchors_only: bool,
    ) -> Option<TreeProcess> {
        let all: Vec<ChanId> = (0..spec.table.channels.len()).collect();
        self.insert_detour(spec, tree, len, input_anchors_only, true, &all)
    }

    fn insert_detour(
        &mut self,
        spec: &Spec,
        tree: &TreeProcess,
        len: usize,
        input_anchors_only: bool,
        extended: bool,
        chans: &[ChanId],
    ) -> Option<TreeProcess> {
        let anchors: Vec<usize> = tree
            .states
            .iter()
            .enumerate()
            .filter(|(_, s)| !input_anchors_only || s.dir == Dir::In)
            .map(|(i, _)| i)
            .collect();
        let &anchor = anchors.choose(&mut self.rng)?;
        let enabled: Vec<EventId> = tree.states[anchor].offers.iter().map(|&(e, _)| e).collect();
        let all_inputs: Vec<EventId> = spec
            .table
            .input_events()
            .filter(|&e| chans.contains(&spec.table.channel_of(e)))
            .collect();
        let all_outputs: Vec<EventId> = spec
            .table
            .output_events()
            .filter(|&e| chans.contains(&spec.table.channel_of(e)))
            .collect();
        let fresh_inputs: Vec<EventId> = all_inputs
            .iter()
            .copied()
            .filter(|e| !enabled.contains(e))
            .collect();
        let fresh_any: Vec<EventId> = all_inputs
            .iter()
            .chain(all_outputs.iter())
            .copied()
            .filter(|e| !enabled.contains(e))
            .collect();
        if fresh_inputs.is_empty() {
            return None;
        }
        // Chain events: the first is always an input; plain convergence
        // continues with inputs, the extended form with anything fresh.
        let mut chain = vec![*fresh_inputs.choose(&mut self.rng)?];
        for _ in 1..len {
            let pool = if extended { &fresh_any } else { &fresh_inputs };
            chain.push(*pool.choose(&mut self.rng)?);
        }
        let mut out = tree.clone();
        // Interior states d_1 .. d_{len-1}; the last chain event returns to
        // the anchor.
        let mut prev_target = anchor;
        for i in (1..chain.len()).rev() {
            let e = chain[i];
            let dir = spec.table.dir_of(e);
            let mut offers = vec![(e, prev_target)];
            if !extended && tree.states[anchor].dir == Dir::In {
                // Keep the anchor's expected inputs available, converging
                // immediately through the anchor's own successors.
                for &(ae, at) in &tree.states[anchor].offers {
                    offers.push((ae, at));
                }
            }
            offers.sort_unstable();
            offers.dedup();
            out.states.push(TreeState {
                dir: if extended { dir } else { Dir::In },
                offers,
            });
            prev_target = out.states.len() - 1;
        }
        out.states[anchor].offers.push((chain[0], prev_target));
        out.states[anchor].offers.sort_unstable();
        Some(out)
    }

    /// Offer a brand-new output at some state: the result neither converges
    /// nor extended-converges (new-in-context outputs are never excused).
    pub fn insert_new_output(&mut self, spec: &Spec, tree: &TreeProcess) -> Option<TreeProcess> {
        let anchor = self.rng.random_range(0..tree.states.len());
        let enabled: Vec<EventId> = tree.states[anchor].offers.iter().map(|&(e, _)| e).collect();
        let fresh: Vec<EventId> = spec
            .table
            .output_events()
            .filter(|e| !enabled.contains(e))
            .collect();
        let &ev = fresh.choose(&mut self.rng)?;
        let mut out = tree.clone();
        // A new-in-context output leading straight back to the anchor.
        let ret = anchor;
        out.states[anchor].offers.push((ev, ret));
        out.states[anchor].offers.sort_unstable();
        Some(out)
    }

    /// Withdraw one of several offered inputs; the mutant refuses an input
    /// the original always accepts, so convergence fails.
    pub fn drop_input(&mut self, tree: &TreeProcess, root_only: bool) -> Option<TreeProcess> {
        let candidates: Vec<usize> = tree
            .states
            .iter()
            .enumerate()
            .filter(|(i, s)| s.dir == Dir::In && s.offers.len() >= 2 && (!root_only || *i == 0))
            .map(|(i, _)| i)
            .collect();
        let &s = candidates.choose(&mut self.rng)?;
        let mut out = tree.clone();
        let k = self.rng.random_range(0..out.states[s].offers.len());
        out.states[s].offers.remove(k);
        Some(out)
    }
}

impl Generator {
    /// A deterministic single-channel protocol loop for hooked channels:
    /// a cycle of input and output steps on `chan`, each offering one or
    /// two distinct values, always returning to its start. Deterministic
    /// protocols keep buffered compositions confluent, which the
    /// composition rules assume without checking.
    pub fn gen_hook_protocol(&mut self, spec: &Spec, chan: ChanId) -> TreeProcess {
        let len = self.rng.random_range(2..=4);
        let mut tree = TreeProcess { states: Vec::new() };
        for step in 0..len {
            let dir = if step % 2 == 0 {
                if self.rng.random_bool(0.5) {
                    Dir::In
                } else {
                    Dir::Out
                }
            } else if tree.states[step - 1].dir == Dir::In {
                Dir::Out
            } else {
                Dir::In
            };
            let mut evs = self.channel_events(spec, chan, dir);
            evs.shuffle(&mut self.rng);
            let k = self.rng.random_range(1..=2.min(evs.len()));
            let target = if step + 1 < len { step + 1 } else { 0 };
            tree.states.push(TreeState {
                dir,
                offers: evs.into_iter().take(k).map(|e| (e, target)).collect(),
            });
        }
        for st in &mut tree.states {
            st.offers.sort_unstable();
        }
        tree
    }
}

/// Register the tree as process definitions and return the root name.
pub fn tree_to_process(spec: &mut Spec, tree: &TreeProcess, hint: &str) -> String {
    let table = spec.table.clone();
    let names: Vec<String> = (0..tree.states.len())
        .map(|_| spec.add_synthetic_process(hint, Vec::new(), ProcessExpr::Stop))
        .collect();
    for (i, st) in tree.states.iter().enumerate() {
        // Inputs stay externally available around an internal choice of
        // outputs, so mixed states keep input determinism and output
        // decisiveness.
        let mut ins: Vec<ProcessExpr> = Vec::new();
        let mut outs: Vec<ProcessExpr> = Vec::new();
        for &(e, target) in &st.offers {
            let p = ProcessExpr::prefix(
                crate::contract::event_to_pattern(&table, e),
                ProcessExpr::named(&names[target]),
            );
            match table.dir_of(e) {
                Dir::Out => outs.push(p),
                _ => ins.push(p),
            }
        }
        let out_part = outs.drain(..).reduce(ProcessExpr::int);
        let in_part = ins.drain(..).reduce(ProcessExpr::ext);
        let body = match (in_part, out_part) {
            (Some(a), Some(o)) => ProcessExpr::ext(a, o),
            (Some(a), None) => a,
            (None, Some(o)) => o,
            (None, None) => ProcessExpr::Stop,
        };
        let name = &names[i];
        spec.processes
            .iter_mut()
            .find(|d| &d.name == name)
            .expect("registered")
            .body = body;
    }
    names[0].clone()
}

/// Wrap a generated behaviour into a contract covering `channels`.
pub fn tree_contract(spec: &mut Spec, tree: &TreeProcess, channels: &[ChanId], hint: &str) -> Contract {
    let name = tree_to_process(spec, tree, hint);
    let mut r_map = std::collections::BTreeMap::new();
    for &c in channels {
        let decl = &spec.table.channels[c];
        let iface = decl.type_name.clone().unwrap_or_default();
        let events = BitSet::from_iter(
            spec.table.refusal_len(),
            spec.table.events_of_channel(c),
        );
        r_map.insert(
            c,
            Interface {
                name: iface,
                events,
            },
        );
    }
    Contract {
        name: format!("Ctr_{name}"),
        behaviour: ProcessExpr::named(&name),
        r_map,
        internal_channels: Vec::new(),
        notes: Vec::new(),
    }
}

/// Build the communication partner of `base` on channel `from`: mirror its
/// restriction onto `from` over the fresh channel `to`, flipping
/// directions (their outputs become our inputs and vice versa). Mixed
/// states offer the inputs externally around an internal choice of
/// outputs.
pub fn mirror_partner(
    spec: &mut Spec,
    restriction: &NormLts,
    from: ChanId,
    to: ChanId,
    hint: &str,
) -> Contract {
    let table = spec.table.clone();
    let map_ev = |e: EventId| -> EventId {
        let info = &table.events[e];
        let dir = match info.dir {
            Dir::In => Dir::Out,
            Dir::Out => Dir::In,
            Dir::Plain => Dir::Plain,
        };
        table
            .lookup(to, dir, &info.value)
            .expect("mirror channel shares the payload")
    };
    let names: Vec<String> = (0..restriction.state_count())
        .map(|_| spec.add_synthetic_process(hint, Vec::new(), ProcessExpr::Stop))
        .collect();
    for (i, st) in restriction.states.iter().enumerate() {
        let mut ins: Vec<ProcessExpr> = Vec::new();
        let mut outs: Vec<ProcessExpr> = Vec::new();
        for &(e, target) in st.succ.iter() {
            let src = e as EventId;
            debug_assert_eq!(table.channel_of(src), from);
            let mapped = map_ev(src);
            let p = ProcessExpr::prefix(
                crate::contract::event_to_pattern(&table, mapped),
                ProcessExpr::named(&names[target as usize]),
            );
            match table.dir_of(mapped) {
                Dir::In => ins.push(p),
                _ => outs.push(p),
            }
        }
        let out_part = outs.drain(..).reduce(ProcessExpr::int);
        let in_part = ins.drain(..).reduce(ProcessExpr::ext);
        let body = match (in_part, out_part) {
            (Some(i), Some(o)) => ProcessExpr::ext(i, o),
            (Some(i), None) => i,
            (None, Some(o)) => o,
            (None, None) => ProcessExpr::Stop,
        };
        let name = &names[i];
        spec.processes
            .iter_mut()
            .find(|d| &d.name == name)
            .expect("registered")
            .body = body;
    }
    let events = BitSet::from_iter(spec.table.refusal_len(), spec.table.events_of_channel(to));
    let iface = spec.table.channels[to].type_name.clone().unwrap_or_default();
    let mut r_map = std::collections::BTreeMap::new();
    r_map.insert(
        to,
        Interface {
            name: iface,
            events,
        },
    );
    Contract {
        name: format!("Ctr_{hint}"),
        behaviour: ProcessExpr::named(&names[0]),
        r_map,
        internal_channels: Vec::new(),
        notes: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ioproc::check_io_process;
    use crate::lts::{compile, normalize};

    #[test]
    fn generated_trees_are_io_processes() {
        let mut g = Generator::new(7);
        for round in 0..30 {
            let mut spec = gen_spec(2, 2);
            let chans: Vec<ChanId> = vec![0, 1];
            let tree = g.gen_tree(&spec, &chans, 3, 4, true);
            let name = tree_to_process(&mut spec, &tree, "GT");
            let lts = compile(&spec, &ProcessExpr::named(&name), 10_000).unwrap();
            let norm = normalize(&lts).unwrap();
            let rep = check_io_process(&lts, &norm);
            assert!(rep.passed(), "round {round}: {:?}", rep.first_failure());
            assert!(crate::ioproc::serialize(&norm).is_ok(), "round {round}");
        }
    }

    #[test]
    fn detour_mutants_remain_io_processes() {
        let mut g = Generator::new(11);
        let mut made = 0;
        for _ in 0..40 {
            let mut spec = gen_spec(2, 2);
            let tree = g.gen_tree(&spec, &[0, 1], 2, 3, true);
            let Some(mutant) = g.insert_cvg_detour(&spec, &tree, 2, false) else {
                continue;
            };
            let name = tree_to_process(&mut spec, &mutant, "MUT");
            let lts = compile(&spec, &ProcessExpr::named(&name), 10_000).unwrap();
            let norm = normalize(&lts).unwrap();
            let rep = check_io_process(&lts, &norm);
            assert!(rep.passed(), "{:?}", rep.first_failure());
            made += 1;
        }
        assert!(made > 10);
    }
}
