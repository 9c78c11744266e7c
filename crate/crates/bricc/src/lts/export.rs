//! Plain-text graph exports of automata for external rendering.

use super::{Label, Lts, NormLts};
use crate::syntax::types::{EventId, EventTable};
use std::fmt::Write;

pub fn trace_names(trace: &[EventId], table: &EventTable) -> String {
    let names: Vec<&str> = trace.iter().map(|&e| table.event_name(e)).collect();
    format!("<{}>", names.join(", "))
}

/// Node/edge listing of an LTS. Lines are sorted and stable across runs.
pub fn lts_graph(lts: &Lts, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "lts {name}");
    let _ = writeln!(out, "states {}", lts.state_count());
    let _ = writeln!(out, "root {}", lts.root);
    for (s, row) in lts.trans.iter().enumerate() {
        for &(label, t) in row.iter() {
            let l = match label {
                Label::Tau => "tau".to_string(),
                Label::Tick => "tick".to_string(),
                Label::Event(e) => lts.table.event_name(e as usize).to_string(),
            };
            let _ = writeln!(out, "edge {s} {l} {t}");
        }
    }
    out
}

/// Node/edge listing of a normalized automaton with refusal annotations.
pub fn norm_graph(n: &NormLts, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "normlts {name}");
    let _ = writeln!(out, "states {}", n.state_count());
    let _ = writeln!(out, "root {}", n.root);
    for (s, st) in n.states.iter().enumerate() {
        let mut accs = Vec::new();
        for a in &st.min_acceptances {
            let names: Vec<String> = a
                .iter()
                .map(|e| {
                    if e == n.table.tick_bit() {
                        "tick".to_string()
                    } else {
                        n.table.event_name(e).to_string()
                    }
                })
                .collect();
            accs.push(format!("{{{}}}", names.join(", ")));
        }
        let tick = if st.can_tick { " tick" } else { "" };
        let _ = writeln!(out, "state {s} acceptances {}{tick}", accs.join(" "));
        for &(e, t) in st.succ.iter() {
            let _ = writeln!(out, "edge {s} {} {t}", n.table.event_name(e as usize));
        }
    }
    out
}
