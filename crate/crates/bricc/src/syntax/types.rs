//! Value types, finite value enumeration and the canonical event table.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

/// Index into [`Spec::types`](super::Spec).
pub type TypeId = usize;
/// Index into [`Spec::channels`](super::Spec).
pub type ChanId = usize;
/// Index into [`EventTable::events`].
pub type EventId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub kind: TypeKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeKind {
    /// `nametype N = {lo..hi}`
    IntRange(i64, i64),
    /// `datatype E = a | b | c` (labels only)
    Enum(Vec<String>),
    /// `datatype U = tag1.T1 | tag2.T2.T3 | tag3` — tagged variants whose
    /// payload is the product of the component types.
    Union(Vec<Variant>),
    /// Builtin `Bool`.
    Bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub tag: String,
    pub components: Vec<TypeId>,
}

/// A concrete value drawn from some finite type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
    /// Enum label or zero-component union variant.
    Tag(String),
    /// Union variant with payload components.
    Tagged(String, Vec<Value>),
    /// Payload of a channel declared without a type.
    Unit,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Tag(t) => write!(f, "{t}"),
            Value::Tagged(t, vs) => {
                write!(f, "{t}")?;
                for v in vs {
                    write!(f, ".{v}")?;
                }
                Ok(())
            }
            Value::Unit => Ok(()),
        }
    }
}

/// Direction tag carried by events on a channel with I/O discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Dir {
    In,
    Out,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelDecl {
    pub name: String,
    /// Declared type name, if any (kept for printing).
    pub type_name: Option<String>,
    /// Payload type the events range over. For an I/O channel this is the
    /// component type of the `in`/`out` variants, not the declared type.
    pub payload: Option<TypeId>,
    pub io_discipline: bool,
}

#[derive(Debug, Clone)]
pub struct EventInfo {
    pub channel: ChanId,
    pub dir: Dir,
    pub value: Value,
    pub name: String,
}

/// All events of a specification in canonical order: channels in declaration
/// order, `in` events before `out` events, payload values in enumeration
/// order. Marker events used internally by automaton constructions live past
/// `declared_len` and never appear in user-facing output.
pub struct EventTable {
    pub events: Vec<EventInfo>,
    pub channels: Vec<ChannelDecl>,
    declared_len: usize,
    by_key: HashMap<(ChanId, Dir, Value), EventId>,
    /// First event id of each channel (events of one channel are contiguous).
    chan_start: Vec<usize>,
}

impl EventTable {
    pub fn build(channels: Vec<ChannelDecl>, payload_values: &[Vec<Value>]) -> Arc<EventTable> {
        let mut events = Vec::new();
        let mut by_key = HashMap::new();
        let mut chan_start = Vec::new();
        for (ci, ch) in channels.iter().enumerate() {
            chan_start.push(events.len());
            let values = &payload_values[ci];
            let mut push = |dir: Dir, v: &Value| {
                let name = match (dir, v) {
                    (Dir::Plain, Value::Unit) => ch.name.clone(),
                    (Dir::Plain, v) => format!("{}.{v}", ch.name),
                    (Dir::In, v) => format!("{}.in.{v}", ch.name),
                    (Dir::Out, v) => format!("{}.out.{v}", ch.name),
                };
                by_key.insert((ci, dir, v.clone()), events.len());
                events.push(EventInfo {
                    channel: ci,
                    dir,
                    value: v.clone(),
                    name,
                });
            };
            if ch.io_discipline {
                for v in values {
                    push(Dir::In, v);
                }
                for v in values {
                    push(Dir::Out, v);
                }
            } else {
                for v in values {
                    push(Dir::Plain, v);
                }
            }
        }
        let declared_len = events.len();
        Arc::new(EventTable {
            events,
            channels,
            declared_len,
            by_key,
            chan_start,
        })
    }

    /// Number of declared (user-visible) events.
    pub fn declared_len(&self) -> usize {
        self.declared_len
    }

    /// Total number of events including reserved markers.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Universe size of refusal/acceptance sets: declared events plus the
    /// termination marker at index `declared_len()`.
    pub fn refusal_len(&self) -> usize {
        self.declared_len + 1
    }

    /// Index of the termination marker inside refusal sets.
    pub fn tick_bit(&self) -> usize {
        self.declared_len
    }

    pub fn lookup(&self, channel: ChanId, dir: Dir, value: &Value) -> Option<EventId> {
        self.by_key.get(&(channel, dir, value.clone())).copied()
    }

    pub fn event_name(&self, ev: EventId) -> &str {
        &self.events[ev].name
    }

    pub fn channel_of(&self, ev: EventId) -> ChanId {
        self.events[ev].channel
    }

    pub fn dir_of(&self, ev: EventId) -> Dir {
        self.events[ev].dir
    }

    pub fn channel_id(&self, name: &str) -> Option<ChanId> {
        self.channels.iter().position(|c| c.name == name)
    }

    pub fn events_of_channel(&self, ci: ChanId) -> std::ops::Range<usize> {
        let start = self.chan_start[ci];
        let end = if ci + 1 < self.chan_start.len() {
            self.chan_start[ci + 1]
        } else {
            self.declared_len
        };
        start..end
    }

    /// All declared input events (on channels with I/O discipline).
    pub fn input_events(&self) -> impl Iterator<Item = EventId> + '_ {
        (0..self.declared_len).filter(|&e| self.events[e].dir == Dir::In)
    }

    pub fn output_events(&self) -> impl Iterator<Item = EventId> + '_ {
        (0..self.declared_len).filter(|&e| self.events[e].dir == Dir::Out)
    }

    /// Clone the table and append reserved marker events (no channel, no
    /// value). Declared indices are preserved, so automata that only use
    /// declared labels remain valid against the base table.
    pub fn with_markers(self: &Arc<Self>, names: &[&str]) -> (Arc<EventTable>, Vec<EventId>) {
        let mut events = self.events.clone();
        let mut ids = Vec::new();
        for n in names {
            ids.push(events.len());
            events.push(EventInfo {
                channel: usize::MAX,
                dir: Dir::Plain,
                value: Value::Unit,
                name: (*n).to_string(),
            });
        }
        (
            Arc::new(EventTable {
                events,
                channels: self.channels.clone(),
                declared_len: self.declared_len,
                by_key: self.by_key.clone(),
                chan_start: self.chan_start.clone(),
            }),
            ids,
        )
    }

    /// True when both tables declare the same events in the same order.
    pub fn same_alphabet(&self, other: &EventTable) -> bool {
        self.declared_len == other.declared_len
            && self
                .events
                .iter()
                .take(self.declared_len)
                .zip(other.events.iter())
                .all(|(a, b)| a.name == b.name)
    }
}

impl fmt::Debug for EventTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "EventTable({} events, {} channels)",
            self.declared_len,
            self.channels.len()
        )
    }
}
