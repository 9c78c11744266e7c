//! Depth, serialized form and the branch traversal.
//!
//! Serialization linearizes a normalized automaton whose every cycle passes
//! through the root ("root-looping") into a sequence of
//! `(event, next-offers, level)` tuples, depth-first in canonical event
//! order. Start and end markers delimit the tree: the start entry carries
//! the root's offers at level 0, and each branch that returns to the root
//! closes with an end entry.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::lts::{lts_from_term, CompileError, Lts, NormLts, ProcArena};
use crate::syntax::types::{Dir, EventId, EventTable};
use crate::util::BitSet;

/// Entry label: a visible event or one of the two structural markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SerialEv {
    Start,
    End,
    Event(EventId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SerialEntry {
    pub ev: SerialEv,
    /// Events enabled after `ev`, in canonical order (or the end marker
    /// when `ev` leads back to the root).
    pub offers: Vec<SerialEv>,
    pub level: u32,
}

#[derive(Debug, Clone)]
pub struct SerialProcess {
    pub entries: Vec<SerialEntry>,
    /// All declared input events.
    pub inputs: BitSet,
    /// All declared output events.
    pub outputs: BitSet,
    pub source_depth: u32,
    pub table: Arc<EventTable>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum SerialError {
    #[error("E_SERIAL_SHAPE: a reachable cycle avoids the initial state (through `{0}`)")]
    CycleAvoidsRoot(String),
    #[error("E_SERIAL_SHAPE: no behaviour returns to the initial state")]
    NoReturn,
}

/// Length of the longest trace that first returns to the initial state.
///
/// Defined only for root-looping automata: dropping the root's incoming
/// edges must leave an acyclic graph.
pub fn depth(p: &NormLts) -> Result<u32, SerialError> {
    let order = topo_order_without_root_edges(p)?;
    // Longest path from the root through the acyclic remainder; the depth
    // is one more than the longest distance to a predecessor of the root.
    let mut dist: Vec<Option<u32>> = vec![None; p.state_count()];
    dist[p.root as usize] = Some(0);
    let mut best: Option<u32> = None;
    for &s in &order {
        let Some(d) = dist[s as usize] else { continue };
        for &(_, t) in p.states[s as usize].succ.iter() {
            if t == p.root {
                best = Some(best.unwrap_or(0).max(d + 1));
            } else if dist[t as usize].is_none_or(|old| old < d + 1) {
                dist[t as usize] = Some(d + 1);
            }
        }
    }
    best.ok_or(SerialError::NoReturn)
}

/// Topological order of the automaton with the root's incoming edges
/// removed; errors when a cycle avoids the root.
fn topo_order_without_root_edges(p: &NormLts) -> Result<Vec<u32>, SerialError> {
    let n = p.state_count();
    let mut colour = vec![0u8; n];
    let mut order: Vec<u32> = Vec::with_capacity(n);
    let mut stack: Vec<(u32, usize)> = vec![(p.root, 0)];
    colour[p.root as usize] = 1;
    while let Some(&mut (s, ref mut idx)) = stack.last_mut() {
        let succ = &p.states[s as usize].succ;
        if *idx < succ.len() {
            let t = succ[*idx].1;
            *idx += 1;
            if t == p.root {
                continue;
            }
            match colour[t as usize] {
                0 => {
                    colour[t as usize] = 1;
                    stack.push((t, 0));
                }
                1 => {
                    let name = p
                        .enabled(t)
                        .next()
                        .map(|e| p.table.event_name(e).to_string())
                        .unwrap_or_else(|| format!("state {t}"));
                    return Err(SerialError::CycleAvoidsRoot(name));
                }
                _ => {}
            }
        } else {
            colour[s as usize] = 2;
            order.push(s);
            stack.pop();
        }
    }
    order.reverse();
    Ok(order)
}

/// Serialize a root-looping automaton, depth-first in canonical event
/// order. States with several stable configurations (internal output
/// choices) list all their offered events; replay reintroduces the choice
/// from the direction discipline.
pub fn serialize(p: &NormLts) -> Result<SerialProcess, SerialError> {
    let source_depth = depth(p)?;
    let mut entries = Vec::new();
    let root_offers: Vec<SerialEv> = p.enabled(p.root).map(SerialEv::Event).collect();
    entries.push(SerialEntry {
        ev: SerialEv::Start,
        offers: root_offers,
        level: 0,
    });
    let succ: Vec<(u32, u32)> = p.states[p.root as usize].succ.to_vec();
    for (e, t) in succ {
        emit(p, e as EventId, t, 1, &mut entries);
    }
    Ok(SerialProcess {
        entries,
        inputs: BitSet::from_iter(p.table.refusal_len(), p.table.input_events()),
        outputs: BitSet::from_iter(p.table.refusal_len(), p.table.output_events()),
        source_depth,
        table: p.table.clone(),
    })
}

fn emit(p: &NormLts, ev: EventId, target: u32, level: u32, out: &mut Vec<SerialEntry>) {
    if target == p.root {
        out.push(SerialEntry {
            ev: SerialEv::Event(ev),
            offers: vec![SerialEv::End],
            level,
        });
        out.push(SerialEntry {
            ev: SerialEv::End,
            offers: Vec::new(),
            level: level + 1,
        });
        return;
    }
    out.push(SerialEntry {
        ev: SerialEv::Event(ev),
        offers: p.enabled(target).map(SerialEv::Event).collect(),
        level,
    });
    let succ: Vec<(u32, u32)> = p.states[target as usize].succ.to_vec();
    for (e, t) in succ {
        emit(p, e as EventId, t, level + 1, out);
    }
}

/// Local view of a serialized process: the contiguous run of entries
/// rooted at the first entry matching `(key, level)`, ending where a
/// different event appears at the same level.
pub fn branch(key: SerialEv, s: &[SerialEntry], level: u32, b: bool) -> Vec<SerialEntry> {
    let (lo, hi) = branch_range(key, s, 0..s.len(), level, b);
    s[lo..hi].to_vec()
}

/// Index form of [`branch`] over a subrange of `entries`.
pub fn branch_range(
    key: SerialEv,
    entries: &[SerialEntry],
    range: std::ops::Range<usize>,
    level: u32,
    b: bool,
) -> (usize, usize) {
    let mut found = b;
    let mut lo = range.start;
    for i in range.clone() {
        let e = &entries[i];
        if e.ev == key && e.level == level {
            if !found {
                lo = i;
                found = true;
            }
            continue;
        }
        if found && e.ev != key && e.level == level {
            return (lo, i);
        }
        if !found {
            lo = i + 1;
        }
    }
    if found {
        (lo, range.end)
    } else {
        (range.end, range.end)
    }
}

impl SerialProcess {
    /// Decode by replay: offers consisting of inputs reappear as external
    /// choices, other offers as internal choices, and the end marker loops
    /// back to the initial state.
    pub fn decode(&self) -> Result<Lts, CompileError> {
        let mut arena = ProcArena::new(self.table.clone());
        let root_def = arena.new_def("replay");
        let whole = 1..self.entries.len();
        let root_offers = self.entries[0].offers.clone();
        let body = self.decode_node(&mut arena, root_def, &root_offers, whole, 1)?;
        arena.set_def_body(root_def, body);
        let root = arena.call(root_def);
        lts_from_term(&mut arena, root, 1 << 22)
    }

    fn decode_node(
        &self,
        arena: &mut ProcArena,
        root_def: crate::lts::term::DefId,
        offers: &[SerialEv],
        range: std::ops::Range<usize>,
        level: u32,
    ) -> Result<crate::lts::TermId, CompileError> {
        if offers == [SerialEv::End] {
            return Ok(arena.call(root_def));
        }
        let mut alts = Vec::with_capacity(offers.len());
        let mut all_inputs = true;
        for &off in offers {
            let SerialEv::Event(e) = off else {
                return Err(CompileError::Eval(
                    "malformed serialized process: marker among event offers".into(),
                ));
            };
            all_inputs &= self.inputs.contains(e);
            let (lo, hi) = branch_range(off, &self.entries, range.clone(), level, false);
            if lo >= hi {
                return Err(CompileError::Eval(format!(
                    "malformed serialized process: no branch for `{}` at level {level}",
                    self.table.event_name(e)
                )));
            }
            let head_offers = self.entries[lo].offers.clone();
            let k = self.decode_node(arena, root_def, &head_offers, lo + 1..hi, level + 1)?;
            alts.push(arena.prefix(e as u32, k));
        }
        Ok(if all_inputs {
            arena.ext(alts)
        } else {
            arena.int(alts)
        })
    }

    /// Canonical text table, one `(ev, <offers>, level)` tuple per line.
    /// Two runs over the same automaton produce identical bytes.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let ev = self.render_ev(e.ev);
            let offers: Vec<String> = e.offers.iter().map(|&o| self.render_ev(o)).collect();
            let _ = writeln!(out, "({ev}, <{}>, {})", offers.join(", "), e.level);
        }
        out
    }

    fn render_ev(&self, ev: SerialEv) -> String {
        match ev {
            SerialEv::Start => "start".into(),
            SerialEv::End => "end".into(),
            SerialEv::Event(e) => self.table.event_name(e).to_string(),
        }
    }

    /// Parse a table produced by [`SerialProcess::to_table`].
    pub fn from_table(text: &str, table: Arc<EventTable>) -> Result<SerialProcess, String> {
        let by_name: HashMap<&str, EventId> = (0..table.declared_len())
            .map(|e| (table.event_name(e), e))
            .collect();
        let parse_ev = |s: &str| -> Result<SerialEv, String> {
            match s {
                "start" => Ok(SerialEv::Start),
                "end" => Ok(SerialEv::End),
                name => by_name
                    .get(name)
                    .map(|&e| SerialEv::Event(e))
                    .ok_or_else(|| format!("unknown event `{name}`")),
            }
        };
        let mut entries = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let inner = line
                .strip_prefix('(')
                .and_then(|l| l.strip_suffix(')'))
                .ok_or_else(|| format!("line {}: expected a tuple", ln + 1))?;
            let open = inner.find('<').ok_or_else(|| format!("line {}: missing offers", ln + 1))?;
            let close = inner.rfind('>').ok_or_else(|| format!("line {}: missing offers", ln + 1))?;
            let ev = parse_ev(inner[..open].trim().trim_end_matches(','))?;
            let offers_src = &inner[open + 1..close];
            let mut offers = Vec::new();
            for part in offers_src.split(',') {
                let part = part.trim();
                if !part.is_empty() {
                    offers.push(parse_ev(part)?);
                }
            }
            let level: u32 = inner[close + 1..]
                .trim()
                .trim_start_matches(',')
                .trim()
                .parse()
                .map_err(|_| format!("line {}: bad level", ln + 1))?;
            entries.push(SerialEntry { ev, offers, level });
        }
        let source_depth = entries
            .iter()
            .map(|e| e.level.saturating_sub(1))
            .max()
            .unwrap_or(0);
        Ok(SerialProcess {
            entries,
            inputs: BitSet::from_iter(table.refusal_len(), table.input_events()),
            outputs: BitSet::from_iter(table.refusal_len(), table.output_events()),
            source_depth,
            table,
        })
    }

    /// Events offered by the head entry of a slice, as concrete event ids.
    pub fn offer_events(&self, offers: &[SerialEv]) -> Vec<EventId> {
        offers
            .iter()
            .filter_map(|o| match o {
                SerialEv::Event(e) => Some(*e),
                _ => None,
            })
            .collect()
    }
}

/// Direction of an event as a character tag for rendering.
pub fn dir_tag(table: &EventTable, e: EventId) -> &'static str {
    match table.dir_of(e) {
        Dir::In => "in",
        Dir::Out => "out",
        Dir::Plain => "plain",
    }
}
