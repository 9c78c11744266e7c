//! Contract refinement and inheritance by (extended) convergence on the
//! healthcare corpus, including the failing echo extension.
//!
//!     cargo run --release --example inheritance

use std::path::Path;

use bricc::contract::{check_bric_refinement, check_inheritance, validate_contract, Contract};
use bricc::convergence::{GlbConfig, Relation};
use bricc::script::load_spec;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/healthcare.iop");
    let spec = load_spec(&path).expect("corpus parses");
    let ctr = |n: &str| {
        Contract::from_decl(&spec, &spec.contract_decl(n).unwrap().clone()).expect("valid")
    };
    let bot = ctr("Ctr_HC_BOT");
    let acc = ctr("Ctr_HC_BOT_ACC");
    let tk = ctr("Ctr_HC_BOT_TK");
    let echo = ctr("Ctr_HC_BOT_TK_ECHO");
    let den = |c: &Contract| validate_contract(&spec, c, 1_000_000).expect("i/o process");
    let (bot_d, acc_d, tk_d, echo_d) = (den(&bot), den(&acc), den(&tk), den(&echo));

    // Dose refinement: same channels, refined behaviour.
    let v = check_bric_refinement(&bot, &acc, &bot_d, &acc_d).unwrap();
    println!("contract refinement (base -> accurate dosing): {:?}", v.status);

    // The talk extension is not a refinement (it adds a channel) but it
    // inherits by extended convergence; the talk sessions need a budget of
    // six deviation steps.
    let cfg = GlbConfig {
        gap: Some(6),
        ..GlbConfig::default()
    };
    let rep = check_inheritance(&spec, &acc, &tk, &acc_d, &tk_d, Relation::Ecvg, &cfg).unwrap();
    println!("inheritance by extended convergence (accurate -> talk): {:?}", rep.verdict.status);
    for (c, cong) in &rep.channel_congruence {
        println!("  {}: {:?} congruence", spec.table.channels[*c].name, cong);
    }

    // The echoing variant signals timeouts as outputs, which no
    // convergent extension may introduce.
    let cfg2 = GlbConfig {
        gap: Some(2),
        ..GlbConfig::default()
    };
    let rep = check_inheritance(&spec, &tk, &echo, &tk_d, &echo_d, Relation::Cvg, &cfg2).unwrap();
    println!("inheritance by convergence (talk -> echoing): {:?}", rep.verdict.status);
    if let Some(cx) = &rep.verdict.counterexample {
        println!("  witness: {}", cx.render(&spec.table));
    }
}
