//! Convergence checking both ways: through the greatest-lower-bound
//! construction plus one refinement, and through the brute-force oracle.
//!
//!     cargo run --example glb_convergence

use std::path::Path;

use bricc::analysis::check_failures_refinement_lazy;
use bricc::convergence::{build_glb_cvg, check_cvg, check_ecvg, GlbConfig};
use bricc::ioproc::serialize;
use bricc::lts::{compile_named, normalize};
use bricc::script::load_spec;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/t_family.iop");
    let spec = load_spec(&path).expect("corpus parses");
    let norm = |n: &str| normalize(&compile_named(&spec, n, 100_000).unwrap()).unwrap();
    let t = norm("T");
    let tp = norm("T'");
    let te = norm("T''");

    // The bound construction, driven by hand.
    let sp = serialize(&t).unwrap();
    let glb = build_glb_cvg(&sp, 2, 1_000_000).unwrap();
    println!("bound automaton for T at gap 2: {} states", glb.state_count());
    let v = check_failures_refinement_lazy(&glb, &tp).unwrap();
    println!("bound [F= T' : {:?}", v.status);

    // The packaged checks pick the gap from the depth difference and fall
    // back to the oracle for non-serializable originals.
    let cfg = GlbConfig::default();
    for (label, result) in [
        ("cvg(T, T')", check_cvg(&t, &tp, &cfg)),
        ("ecvg(T, T'')", check_ecvg(&t, &te, &cfg)),
        ("cvg(T, T'')", check_cvg(&t, &te, &cfg)),
    ] {
        let r = result.unwrap();
        print!(
            "{label}: {:?} via {:?} (gap {:?})",
            r.verdict.status, r.method, r.gap_used
        );
        match &r.verdict.counterexample {
            Some(cx) => println!("  witness: {}", cx.render(&spec.table)),
            None => println!(),
        }
    }

    // Force the brute-force method; verdicts agree.
    let forced = GlbConfig {
        force_oracle: true,
        ..GlbConfig::default()
    };
    let r = check_cvg(&t, &tp, &forced).unwrap();
    println!("cvg(T, T') via {:?}: {:?}", r.method, r.verdict.status);
}
