//! Depth, the serialized tuple table and the branch traversal.
//!
//!     cargo run --example serialization

use std::path::Path;

use bricc::ioproc::{branch, depth, serialize, SerialEv};
use bricc::lts::{compile_named, normalize};
use bricc::script::load_spec;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/t_family.iop");
    let spec = load_spec(&path).expect("corpus parses");

    for name in ["T", "T'", "T''"] {
        let norm = normalize(&compile_named(&spec, name, 100_000).unwrap()).unwrap();
        println!("depth({name}) = {}", depth(&norm).unwrap());
    }

    let t = normalize(&compile_named(&spec, "T", 100_000).unwrap()).unwrap();
    let sp = serialize(&t).unwrap();
    println!("\nserialized T ({} entries):", sp.entries.len());
    print!("{}", sp.to_table());

    // A branch is the contiguous local view rooted at an event/level pair.
    let view = branch(SerialEv::Event(0), &sp.entries[1..], 1, false);
    println!("\nbranch of {} at level 1:", spec.table.event_name(0));
    for e in &view {
        let ev = match e.ev {
            SerialEv::Event(x) => spec.table.event_name(x).to_string(),
            SerialEv::End => "end".into(),
            SerialEv::Start => "start".into(),
        };
        println!("  ({ev}, level {})", e.level);
    }

    // Replaying the table reconstructs an automaton with the same failures.
    let replayed = normalize(&sp.decode().unwrap()).unwrap();
    let v = bricc::analysis::check_failures_equivalence(&t, &replayed).unwrap();
    println!("\nreplay is failures-equivalent: {:?}", v.status);
}
