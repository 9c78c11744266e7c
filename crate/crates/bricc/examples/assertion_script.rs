//! Evaluate an assertion script through the library (what `bricc check`
//! does), then render one counterexample step by step.
//!
//!     cargo run --release --example assertion_script

use std::path::Path;

use bricc::script::{explain, Evaluator, RunFlags};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/healthcare_assertions.iop");
    let spec = bricc::script::load_spec(&path).expect("corpus parses");
    let mut ev = Evaluator::new(spec, RunFlags::default());
    let report = ev.run();
    print!("{}", report.render_text());

    // Structured form is canonical: identical runs yield identical bytes.
    let json = report.to_json();
    println!("structured report: {} bytes", json.len());

    // Event-by-event rendering of the first failing assertion.
    if let Some(rec) = report.records.iter().find(|r| r.witness.is_some()) {
        match explain(rec, &ev.spec) {
            Ok(text) => print!("\n{text}"),
            Err(e) => println!("{e}"),
        }
    }
    std::process::exit(report.exit_code());
}
