//! Contracts, buffered communication composition and its side conditions,
//! on the healthcare corpus.
//!
//!     cargo run --release --example contracts_and_composition

use std::path::Path;

use bricc::analysis::check_deadlock_free;
use bricc::contract::{
    check_decoupled, check_fop, compose_communication, contract_semantics, Contract,
};
use bricc::lts::{compile, failures_model};
use bricc::script::load_spec;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/healthcare.iop");
    let mut spec = load_spec(&path).expect("corpus parses");

    let robot = Contract::from_decl(&spec, &spec.contract_decl("Ctr_HC_BOT").unwrap().clone())
        .expect("valid contract");
    let storage =
        Contract::from_decl(&spec, &spec.contract_decl("Ctr_DRUG_STR").unwrap().clone())
            .expect("valid contract");

    let den = contract_semantics(&spec, &robot, 1_000_000).unwrap();
    println!("robot contract: {} channels, i/o valid: {}", den.per_channel.len(), den.io_valid);
    for (c, n) in &den.per_channel {
        println!(
            "  projection onto {}: {} states",
            spec.table.channels[*c].name,
            n.state_count()
        );
    }

    // The finite output property holds for the full behaviours.
    let robot_lts = compile(&spec, &robot.behaviour, 1_000_000).unwrap();
    println!(
        "finite output property (robot): {:?}",
        check_fop(&failures_model(&robot_lts)).status
    );

    // Hook the needle to the dispenser through a capacity-one buffer pair.
    let needle = spec.table.channel_id("intravenousNeedle").unwrap();
    let dispenser = spec.table.channel_id("drugDispenser").unwrap();
    let sys = compose_communication(
        &mut spec, &robot, needle, &storage, dispenser, 1, 1_000_000, "SYS",
    )
    .expect("side conditions hold");
    println!(
        "\ncomposed system keeps channels: {:?}",
        sys.channels()
            .map(|c| spec.table.channels[c].name.clone())
            .collect::<Vec<_>>()
    );
    for note in &sys.notes {
        println!("  note: {note}");
    }
    let sys_lts = compile(&spec, &sys.behaviour, 2_000_000).unwrap();
    let v = check_deadlock_free(&failures_model(&sys_lts));
    println!(
        "composed system deadlock free: {:?} ({} states explored)",
        v.status, v.stats.states_explored
    );

    // The robot strictly sequences its sensors before the phone calls, so
    // those two channels interfere and could not be hooked by feedback.
    let body = spec.table.channel_id("bodySen").unwrap();
    let phone = spec.table.channel_id("phone").unwrap();
    let dec = check_decoupled(&spec, &robot_lts, body, phone).unwrap();
    println!("bodySen and phone decoupled in the robot: {:?}", dec.status);
}
