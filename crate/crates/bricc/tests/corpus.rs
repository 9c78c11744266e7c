//! Integration checks over the bundled corpus files: parsing shape,
//! projections, observation functions and refusal queries on the larger
//! models.

use std::path::{Path, PathBuf};

use bricc::analysis::maximal_refusals_after;
use bricc::contract::{contract_semantics, Contract};
use bricc::ioproc::obs_in;
use bricc::lts::{compile_named, normalize, restriction_model};
use bricc::script::load_spec;
use bricc::syntax::{alphabet, ProcessExpr, Spec};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

#[test]
fn healthcare_corpus_declares_the_expected_shape() {
    let spec = load_spec(&corpus("healthcare.iop")).expect("parses");
    for ch in [
        "bodySen",
        "imageRec",
        "voiceRec",
        "talk",
        "phone",
        "intravenousNeedle",
    ] {
        assert!(spec.table.channel_id(ch).is_some(), "channel {ch}");
    }
    for p in [
        "HC_BOT",
        "HC_BOT_ACC",
        "HC_BOT_TK",
        "MOD_CALL_P1",
        "MOD_CALL_P2",
        "MOD_TALK",
        "HC_BOT_TK_ECHO",
        "DRUG_STR",
        "HUB_COM",
    ] {
        assert!(spec.process(p).is_some(), "process {p}");
    }
    // The priority-two call module's alphabet enumerates the whole phone
    // channel, and nothing else.
    let a = alphabet(&spec, &ProcessExpr::named("MOD_CALL_P2"));
    let phone = spec.table.channel_id("phone").unwrap();
    let phone_events: Vec<usize> = spec.table.events_of_channel(phone).collect();
    assert_eq!(a.count(), phone_events.len());
    for e in phone_events {
        assert!(a.contains(e));
    }
}

#[test]
fn talk_projection_shows_the_question_protocol() {
    let spec = load_spec(&corpus("healthcare.iop")).expect("parses");
    let lts = compile_named(&spec, "HC_BOT_TK", 1_000_000).unwrap();
    let talk = spec.table.channel_id("talk").unwrap();
    let proj = restriction_model(&lts, &[talk]);
    let name = |s: &str| {
        (0..spec.table.declared_len())
            .find(|&e| spec.table.event_name(e) == s)
            .unwrap()
    };
    let t = [name("talk.in.ask.lst"), name("talk.out.ask.chest")];
    assert!(proj.state_after(&t).is_some());
}

#[test]
fn refusals_after_a_critical_breath_reading() {
    // With a critical breath level the robot commits to echoing the level:
    // the single maximal refusal omits exactly that output.
    let spec = load_spec(&corpus("healthcare.iop")).expect("parses");
    let n = normalize(&compile_named(&spec, "HC_BOT", 1_000_000).unwrap()).unwrap();
    let name = |s: &str| {
        (0..spec.table.declared_len())
            .find(|&e| spec.table.event_name(e) == s)
            .unwrap()
    };
    let refs = maximal_refusals_after(&n, &[name("bodySen.in.breath.2")]).unwrap();
    assert_eq!(refs.len(), 1);
    assert!(!refs[0].contains(name("bodySen.out.breath.2")));
    assert_eq!(refs[0].count(), spec.table.refusal_len() - 1);
}

#[test]
fn extension_offers_more_inputs_after_the_first() {
    let spec = load_spec(&corpus("t_family.iop")).expect("parses");
    let n = normalize(&compile_named(&spec, "T'", 100_000).unwrap()).unwrap();
    let ins: Vec<String> = obs_in(&n, &[0])
        .unwrap()
        .into_iter()
        .map(|e| spec.table.event_name(e).to_string())
        .collect();
    assert_eq!(ins, vec!["c.in.v.2", "c.in.v.3"]);
}

#[test]
fn talk_contract_has_six_projection_entries() {
    let spec = load_spec(&corpus("healthcare.iop")).expect("parses");
    let ctr = Contract::from_decl(&spec, &spec.contract_decl("Ctr_HC_BOT_TK").unwrap().clone())
        .unwrap();
    let den = contract_semantics(&spec, &ctr, 1_000_000).unwrap();
    assert_eq!(den.per_channel.len(), 6);
    let talk = spec.table.channel_id("talk").unwrap();
    assert!(den.per_channel.contains_key(&talk));
}

#[test]
fn tv_remote_verdicts() {
    let spec = load_spec(&corpus("tv_remote.iop")).expect("parses");
    let mut ev = bricc::script::Evaluator::new(
        load_spec(&corpus("tv_remote.iop")).unwrap(),
        bricc::script::RunFlags::default(),
    );
    let report = ev.run();
    let status = |prefix: &str| {
        report
            .records
            .iter()
            .find(|r| r.text.starts_with(prefix))
            .map(|r| r.status)
            .unwrap()
    };
    assert_eq!(status("ecvg("), "PASS");
    assert_eq!(status("cvg("), "FAIL");
    assert_eq!(status("deadlock"), "PASS");
    let _: &Spec = &spec;
}
