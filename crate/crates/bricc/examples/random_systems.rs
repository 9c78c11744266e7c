//! Seeded random sampling: build buffered compositions from generated
//! deadlock-free components and check the composition guarantee.
//!
//!     cargo run --release --example random_systems -- 42 25

use bricc::analysis::check_deadlock_free;
use bricc::contract::{compose_communication, validate_contract};
use bricc::generate::{gen_spec, mirror_partner, tree_contract, Generator};
use bricc::lts::{compile, failures_model, restriction_model};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let count: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(25);
    let mut g = Generator::new(seed);

    let mut built = 0;
    let mut deadlocked = 0;
    while built < count {
        let mut spec = gen_spec(3, 2);
        let tree = g.gen_tree(&spec, &[0, 1], 2, 3, true);
        let base = tree_contract(&mut spec, &tree, &[0, 1], "P");
        if validate_contract(&spec, &base, 200_000).is_err() {
            continue;
        }
        let lts = compile(&spec, &base.behaviour, 200_000).unwrap();
        let hook = restriction_model(&lts, &[0]);
        let partner = mirror_partner(&mut spec, &hook, 0, 2, "Q");
        let sys = match compose_communication(&mut spec, &base, 0, &partner, 2, 1, 400_000, "SYS")
        {
            Ok(c) => c,
            Err(e) => {
                println!("side condition rejected a candidate: {e}");
                continue;
            }
        };
        built += 1;
        let clts = compile(&spec, &sys.behaviour, 1_000_000).unwrap();
        let v = check_deadlock_free(&failures_model(&clts));
        println!(
            "system {built:>3}: {} states, deadlock free: {:?}",
            clts.state_count(),
            v.status
        );
        if !v.passed() {
            deadlocked += 1;
        }
    }
    println!("\n{built} systems, {deadlocked} deadlocked (seed {seed})");
}
