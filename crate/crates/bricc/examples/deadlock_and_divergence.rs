//! Deadlock and divergence checks with shortest witnesses.
//!
//!     cargo run --example deadlock_and_divergence

use bricc::analysis::check_deadlock_free;
use bricc::lts::{check_divergence_free, compile_named, failures_model, DivergenceVerdict};
use bricc::syntax::parse_spec;

const SRC: &str = r#"
nametype V = {1..2}
datatype D = v.V
subtype IOD = in.D | out.D
channel c : IOD

FINE  = c.in.v.1 -> c.out.v.1 -> FINE
STUCK = c.in.v.1 -> c.in.v.2 -> STOP
LOOP  = c.in.v.1 -> LOOP
SPIN  = LOOP \ {| c |}
"#;

fn main() {
    let spec = parse_spec(SRC).expect("parses");
    for name in ["FINE", "STUCK"] {
        let lts = compile_named(&spec, name, 10_000).unwrap();
        let v = check_deadlock_free(&failures_model(&lts));
        print!("deadlock free {name}: {:?}", v.status);
        match v.counterexample {
            Some(cx) => println!("  ({})", cx.render(&spec.table)),
            None => println!(),
        }
    }
    for name in ["FINE", "SPIN"] {
        let lts = compile_named(&spec, name, 10_000).unwrap();
        match check_divergence_free(&lts) {
            DivergenceVerdict::Pass => println!("divergence free {name}: Pass"),
            DivergenceVerdict::Fail { trace } => println!(
                "divergence free {name}: Fail after {}",
                bricc::lts::export::trace_names(&trace, &spec.table)
            ),
        }
    }
}
