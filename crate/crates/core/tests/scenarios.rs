use std::collections::BTreeMap;

use secure_session::scenario::{
    erase_addresses, run_attack, run_purchase, step_order, AttackConfig, AttackVerdict, PurchaseConfig, PurchaseReport,
    TransportKind,
};
use secure_session::transcript::Transcript;

fn purchase(secure: bool, transport: TransportKind, script: &str, seed: u64) -> PurchaseReport {
    let cfg = PurchaseConfig { secure, transport, seed, script: script.parse().unwrap(), ..Default::default() };
    run_purchase(&cfg).unwrap()
}

#[test]
fn secure_checkout_follows_the_step_order() {
    let r = purchase(true, TransportKind::Sim, "add 2 items; CHECKOUT", 1);
    assert!(r.completed(), "{:?}\n{}", r.failure(), r.transcript.render());
    step_order(true).check(&r.transcript.steps()).unwrap();
    assert!(r.receipt().is_some());
    let events = r.transcript.events();
    assert!(events.iter().any(|e| e.role == "C" && e.action == "send LM (1 frames)"));
    let receipt = events.iter().position(|e| e.role == "C" && e.action.starts_with("recv Receipt")).unwrap();
    assert!(events[receipt + 1..].iter().all(|e| e.action == "close"), "{}", r.transcript.render());
}

#[test]
fn original_checkout_follows_the_step_order() {
    let r = purchase(false, TransportKind::Sim, "add 2 items; CHECKOUT", 1);
    assert!(r.completed(), "{:?}\n{}", r.failure(), r.transcript.render());
    step_order(false).check(&r.transcript.steps()).unwrap();
    assert!(step_order(true).check(&r.transcript.steps()).is_err());
}

#[test]
fn cancelled_purchase_never_delegates() {
    let r = purchase(true, TransportKind::Sim, "add 1 items; EXIT", 3);
    assert!(r.failure().is_none());
    assert!(r.transcript.steps().is_empty());
    assert!(r.transcript.events().iter().all(|e| !e.action.contains("DS") && !e.action.contains("DELEGATION")));
}

#[test]
fn same_seed_gives_identical_transcripts() {
    let a = purchase(true, TransportKind::Sim, "add 2 items; CHECKOUT", 11);
    let b = purchase(true, TransportKind::Sim, "add 2 items; CHECKOUT", 11);
    assert_eq!(a.transcript.render(), b.transcript.render());
}

/// Each role's own events, with addresses erased. Interleaving between roles
/// is up to the transport; each role's sequence is not.
fn per_role(t: &Transcript) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for e in t.events() {
        let step = e.step.map(|s| format!(" [{s}]")).unwrap_or_default();
        out.entry(e.role).or_default().push(format!("{} {}{}", e.channel, erase_addresses(&e.action), step));
    }
    out
}

#[test]
fn tcp_and_simulated_runs_tell_the_same_story() {
    let sim = purchase(true, TransportKind::Sim, "add 0 items; CHECKOUT", 1);
    let tcp = purchase(true, TransportKind::Tcp, "add 0 items; CHECKOUT", 1);
    assert!(tcp.completed(), "{:?}\n{}", tcp.failure(), tcp.transcript.render());
    assert_eq!(per_role(&tcp.transcript), per_role(&sim.transcript));
    step_order(true).check(&tcp.transcript.steps()).unwrap();
}

#[test]
fn attacks_on_each_protocol() {
    for seed in 0..5 {
        let original = run_attack(&AttackConfig { secure: false, seed, ..Default::default() }).unwrap();
        assert_eq!(original.verdict, AttackVerdict::Infiltrated, "{}", original.run.transcript.render());

        let secure = run_attack(&AttackConfig { secure: true, seed, ..Default::default() }).unwrap();
        assert_eq!(secure.verdict, AttackVerdict::Blocked { reason: "credential rejected".into() });

        let leaked = run_attack(&AttackConfig { secure: true, seed, leak_cred: true, ..Default::default() }).unwrap();
        assert_eq!(leaked.verdict, AttackVerdict::Infiltrated);
    }
}
