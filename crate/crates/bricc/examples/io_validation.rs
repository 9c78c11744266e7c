//! The five I/O-process conditions, on a conforming process and on
//! textbook violations.
//!
//!     cargo run --example io_validation

use bricc::ioproc::{check_io_process, obs_in, obs_out};
use bricc::lts::{compile_named, failures_model};
use bricc::syntax::parse_spec;

const SRC: &str = r#"
nametype V = {1..2}
datatype D = v.V
subtype IOD = in.D | out.D
channel c : IOD

GOOD   = c.in.v.1 -> (c.out.v.1 -> GOOD |~| c.out.v.2 -> GOOD)
        [] c.in.v.2 -> c.out.v.2 -> GOOD
OUTEXT = c.out.v.1 -> OUTEXT [] c.out.v.2 -> OUTEXT
ININT  = c.in.v.1 -> ININT |~| c.in.v.2 -> ININT
"#;

fn main() {
    let spec = parse_spec(SRC).expect("parses");
    for name in ["GOOD", "OUTEXT", "ININT"] {
        let lts = compile_named(&spec, name, 10_000).unwrap();
        let norm = failures_model(&lts);
        let report = check_io_process(&lts, &norm);
        println!("{name}:");
        for c in &report.conditions {
            let mark = if c.ok { "ok  " } else { "FAIL" };
            println!("  [{mark}] {}", c.name);
        }
    }

    // The observation functions split the offers of a state by direction.
    let norm = failures_model(&compile_named(&spec, "GOOD", 10_000).unwrap());
    let ins: Vec<_> = obs_in(&norm, &[])
        .unwrap()
        .into_iter()
        .map(|e| spec.table.event_name(e).to_string())
        .collect();
    let outs: Vec<_> = obs_out(&norm, &[0])
        .unwrap()
        .into_iter()
        .map(|e| spec.table.event_name(e).to_string())
        .collect();
    println!("\nGOOD offers inputs {ins:?} initially and outputs {outs:?} after the first input");
}
