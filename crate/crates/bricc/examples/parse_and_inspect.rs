//! Parse a specification, list its declared channels and events, and show
//! the syntactic alphabet of one process.
//!
//!     cargo run --example parse_and_inspect

use std::path::Path;

use bricc::script::load_spec;
use bricc::syntax::{alphabet, pretty, ProcessExpr};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/t_family.iop");
    let spec = load_spec(&path).expect("corpus parses");

    println!("channels:");
    for ch in &spec.table.channels {
        let kind = if ch.io_discipline { "i/o" } else { "plain" };
        println!("  {} ({kind})", ch.name);
    }
    println!("events in canonical order:");
    for e in 0..spec.table.declared_len() {
        println!("  {:>2}: {}", e, spec.table.event_name(e));
    }

    let t = ProcessExpr::named("T");
    let a = alphabet(&spec, &t);
    println!("alphabet of T covers {} events", a.count());

    // The printer round-trips: the printed form parses to the same
    // declarations.
    let printed = pretty::print_spec(&spec);
    let reparsed = bricc::syntax::parse_spec(&printed).expect("printed form parses");
    assert_eq!(spec.processes, reparsed.processes);
    println!("\nprinted form ({} bytes) parses back identically", printed.len());
}
