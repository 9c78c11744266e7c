//! Failures refinement with counterexample extraction.
//!
//!     cargo run --example refinement

use bricc::analysis::{check_failures_equivalence, check_failures_refinement};
use bricc::lts::{compile_named, normalize};
use bricc::syntax::parse_spec;

const SRC: &str = r#"
nametype V = {1..2}
datatype D = v.V
subtype IOD = in.D | out.D
channel c : IOD

SPEC = c.in.v.1 -> (c.out.v.1 -> SPEC |~| c.out.v.2 -> SPEC)
GOOD = c.in.v.1 -> c.out.v.1 -> GOOD
BAD  = c.in.v.1 -> c.out.v.1 -> BAD [] c.in.v.2 -> BAD
"#;

fn main() {
    let spec = parse_spec(SRC).expect("parses");
    let norm = |name: &str| {
        normalize(&compile_named(&spec, name, 10_000).expect("compiles")).expect("no divergence")
    };
    let s = norm("SPEC");
    let good = norm("GOOD");
    let bad = norm("BAD");

    let v = check_failures_refinement(&s, &good).unwrap();
    println!("SPEC [F= GOOD: {:?}", v.status);

    let v = check_failures_refinement(&s, &bad).unwrap();
    println!("SPEC [F= BAD:  {:?}", v.status);
    if let Some(cx) = v.counterexample {
        println!("  {}", cx.render(&spec.table));
    }

    // Equivalence runs both directions and reports the failing one.
    let v = check_failures_equivalence(&s, &good).unwrap();
    println!("SPEC =F GOOD:  {:?} ({})", v.status, v.detail.unwrap_or_default());
}
