//! Bounded FIFO buffers mediating hooked channels.
//!
//! A buffer pair relays each side's outputs to the other side's inputs
//! without loss or reordering: one capacity-n FIFO cell per direction,
//! composed in interleaving. A cell accepts source events while it has
//! room and always offers the image of its oldest element.

use crate::syntax::types::{ChanId, Dir, EventId, EventTable, Value};
use crate::syntax::{ast, EventPattern, PatPart, ProcessExpr, Spec};

#[derive(Debug, Clone)]
pub struct BufferSpec {
    pub capacity: u32,
    /// Output events of the first channel mapped to input events of the
    /// second (`a.out.x -> b.in.x`).
    pub l_map: Vec<(EventId, EventId)>,
    /// The reverse direction (`b.out.x -> a.in.x`).
    pub r_map: Vec<(EventId, EventId)>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum BufferError {
    #[error("E_TYPE: `{0}` has no direction-flipped counterpart on the hooked channel")]
    NoCounterpart(String),
    #[error("buffer capacity must be at least 1")]
    ZeroCapacity,
}

/// Build the direction-flipping relay maps between two channels.
pub fn buffer_spec(
    table: &EventTable,
    a: ChanId,
    b: ChanId,
    capacity: u32,
) -> Result<BufferSpec, BufferError> {
    if capacity == 0 {
        return Err(BufferError::ZeroCapacity);
    }
    let flip = |from: ChanId, to: ChanId| -> Result<Vec<(EventId, EventId)>, BufferError> {
        let mut out = Vec::new();
        for e in table.events_of_channel(from) {
            if table.dir_of(e) != Dir::Out {
                continue;
            }
            let v = table.events[e].value.clone();
            let target = table
                .lookup(to, Dir::In, &v)
                .ok_or_else(|| BufferError::NoCounterpart(table.event_name(e).to_string()))?;
            out.push((e, target));
        }
        Ok(out)
    };
    Ok(BufferSpec {
        capacity,
        l_map: flip(a, b)?,
        r_map: flip(b, a)?,
    })
}

/// Turn an event back into the ground pattern that denotes exactly it.
pub fn event_to_pattern(table: &EventTable, e: EventId) -> EventPattern {
    let info = &table.events[e];
    let mut parts = Vec::new();
    match info.dir {
        Dir::In => parts.push(PatPart::Expr(ast::Expr::Ident("in".into()))),
        Dir::Out => parts.push(PatPart::Expr(ast::Expr::Ident("out".into()))),
        Dir::Plain => {}
    }
    fn value_parts(v: &Value, parts: &mut Vec<PatPart>) {
        match v {
            Value::Unit => {}
            Value::Int(n) => parts.push(PatPart::Expr(ast::Expr::Int(*n))),
            Value::Bool(b) => parts.push(PatPart::Expr(ast::Expr::Bool(*b))),
            Value::Tag(t) => parts.push(PatPart::Expr(ast::Expr::Ident(t.clone()))),
            Value::Tagged(t, comps) => {
                parts.push(PatPart::Expr(ast::Expr::Ident(t.clone())));
                for c in comps {
                    value_parts(c, parts);
                }
            }
        }
    }
    value_parts(&info.value, &mut parts);
    EventPattern {
        channel: table.channels[info.channel].name.clone(),
        parts,
    }
}

/// Register the buffer cells as process definitions in `spec` and return
/// the interleaving of the two directions.
pub fn make_buffer(spec: &mut Spec, bsp: &BufferSpec) -> ProcessExpr {
    let left = make_cell(spec, &bsp.l_map, bsp.capacity, "BUFL");
    let right = make_cell(spec, &bsp.r_map, bsp.capacity, "BUFR");
    ProcessExpr::Interleave(Box::new(left), Box::new(right))
}

/// One FIFO cell over a relay map; generates a definition per reachable
/// queue content.
fn make_cell(spec: &mut Spec, map: &[(EventId, EventId)], capacity: u32, hint: &str) -> ProcessExpr {
    if map.is_empty() {
        return ProcessExpr::Stop;
    }
    // Queue contents are indices into `map`; enumerate all words of length
    // at most `capacity` in a deterministic order.
    let mut states: Vec<Vec<usize>> = vec![Vec::new()];
    let mut i = 0;
    while i < states.len() {
        if states[i].len() < capacity as usize {
            for x in 0..map.len() {
                let mut next = states[i].clone();
                next.push(x);
                states.push(next);
            }
        }
        i += 1;
    }
    let names: std::collections::HashMap<Vec<usize>, String> = states
        .iter()
        .map(|s| {
            // Bodies are filled in below once every state has a name.
            let name = spec.add_synthetic_process(hint, Vec::new(), ProcessExpr::Stop);
            (s.clone(), name)
        })
        .collect();
    let table = spec.table.clone();
    for s in &states {
        let mut alts: Vec<ProcessExpr> = Vec::new();
        if s.len() < capacity as usize {
            for (x, &(src, _)) in map.iter().enumerate() {
                let mut next = s.clone();
                next.push(x);
                alts.push(ProcessExpr::prefix(
                    event_to_pattern(&table, src),
                    ProcessExpr::named(&names[&next]),
                ));
            }
        }
        if let Some(&head) = s.first() {
            let (_, dst) = map[head];
            let rest = s[1..].to_vec();
            alts.push(ProcessExpr::prefix(
                event_to_pattern(&table, dst),
                ProcessExpr::named(&names[&rest]),
            ));
        }
        let body = alts
            .into_iter()
            .reduce(ProcessExpr::ext)
            .unwrap_or(ProcessExpr::Stop);
        let name = &names[s];
        let def = spec
            .processes
            .iter_mut()
            .find(|d| &d.name == name)
            .expect("cell definition registered");
        def.body = body;
    }
    ProcessExpr::named(&names[&Vec::new()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::{compile, normalize};
    use crate::syntax::parse_spec;

    const BASE: &str = r#"
nametype N = {1..2}
datatype D = v.N
subtype IOD = in.D | out.D
channel a : IOD
channel b : IOD
P = a.in.v.1 -> P
"#;

    #[test]
    fn capacity_one_relays_in_order() {
        let mut spec = parse_spec(BASE).unwrap();
        let a = spec.table.channel_id("a").unwrap();
        let b = spec.table.channel_id("b").unwrap();
        let bsp = buffer_spec(&spec.table, a, b, 1).unwrap();
        let buff = make_buffer(&mut spec, &bsp);
        let lts = compile(&spec, &buff, 10_000).unwrap();
        let n = normalize(&lts).unwrap();
        // a.out.v.1 must be consumable at the root and produce b.in.v.1.
        let a_out_1 = spec
            .table
            .lookup(a, Dir::Out, &Value::Tagged("v".into(), vec![Value::Int(1)]))
            .unwrap();
        let b_in_1 = spec
            .table
            .lookup(b, Dir::In, &Value::Tagged("v".into(), vec![Value::Int(1)]))
            .unwrap();
        let s1 = n.state_after(&[a_out_1]).unwrap();
        assert!(n.enabled(s1).any(|e| e == b_in_1));
        // While holding one element the same direction refuses new input
        // until it emits; the emission is never refused.
        for acc in &n.states[s1 as usize].min_acceptances {
            assert!(acc.contains(b_in_1));
        }
        // FIFO at capacity 2: two pushes then pops in order.
        let bsp2 = buffer_spec(&spec.table, a, b, 2).unwrap();
        let buff2 = make_buffer(&mut spec, &bsp2);
        let lts2 = compile(&spec, &buff2, 100_000).unwrap();
        let n2 = normalize(&lts2).unwrap();
        let a_out_2 = spec
            .table
            .lookup(a, Dir::Out, &Value::Tagged("v".into(), vec![Value::Int(2)]))
            .unwrap();
        let b_in_2 = spec
            .table
            .lookup(b, Dir::In, &Value::Tagged("v".into(), vec![Value::Int(2)]))
            .unwrap();
        let s = n2.state_after(&[a_out_1, a_out_2]).unwrap();
        // Oldest element first.
        assert!(n2.enabled(s).any(|e| e == b_in_1));
        assert!(!n2.enabled(s).any(|e| e == b_in_2));
        assert!(n2.state_after(&[a_out_1, a_out_2, b_in_1, b_in_2]).is_some());
    }
}
