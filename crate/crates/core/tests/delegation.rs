use std::time::Duration;

use secure_session::delegation::{
    delegate, receive_delegation, Credential, DelegationSignal, DelegationStatus, ReceiverOptions, Reconnector,
    SenderOptions,
};
use secure_session::scenario::kmsg::{delegated_type, passive_type, sender_type};
use secure_session::scenario::{run_k, KConfig, OutcomeClass};
use secure_session::session::{accept_session, request_session, ClientAuth, ServerAuth, SessionError, TypedValue};
use secure_session::transport::{Address, Frame, FrameMeta, SimNetwork, Tag, TapDecision};
use secure_session::types::parse_type;

#[test]
fn honest_runs_preserve_the_item_sequence() {
    for secure in [false, true] {
        for k in 0..=2 {
            let r = run_k(&KConfig::new(k, secure, 40 + k as u64)).unwrap();
            assert_eq!(r.class, OutcomeClass::Completed, "secure={secure} k={k}\n{}", r.transcript.render());
            assert_eq!(r.observed(), r.sent);
            assert_eq!(r.at_receiver.len(), k);
        }
    }
}

#[test]
fn k_above_two_is_refused() {
    assert!(run_k(&KConfig::new(3, true, 1)).is_err());
}

/// Credentials on, SRP off, and a tap that rewrites the credential in every
/// delegation signal it sees.
#[test]
fn credential_rewritten_in_flight_is_refused() {
    let net = SimNetwork::new(5);
    net.attach_attacker(Box::new(|_: &FrameMeta, f: &Frame| {
        if f.tag != Tag::Ds {
            return TapDecision::forward();
        }
        let mut ds = DelegationSignal::decode(&f.payload).expect("well-formed DS");
        ds.credential = Some(Credential::from_bytes([0x5a; 32]));
        TapDecision::replace(Frame::new(Tag::Ds, ds.encode()), false)
    }));
    let timeout = Some(Duration::from_secs(5));
    let (a_net, b_net, c_net) = (net.node("A"), net.node("B"), net.node("C"));
    let (b_addr, c_addr) = (Address::sim("B", 1), Address::sim("C", 1));
    let b_acc = b_net.listen(&b_addr).unwrap();
    let c_acc = c_net.listen(&c_addr).unwrap();

    let receiver = net.spawn("C", move || {
        let carrier_type = parse_type(&format!("sbegin.?({})", delegated_type(1))).unwrap();
        let mut carrier = accept_session(&c_acc, &carrier_type, &ServerAuth::None, timeout).unwrap();
        let opts = ReceiverOptions { secure: true, timeout, auth: ServerAuth::None, channel: "A-C".into() };
        let out = receive_delegation(&c_net, &mut carrier, &opts).unwrap();
        (out.status, out.migrated.is_some())
    });
    let sender = net.spawn("B", move || {
        let mut s = accept_session(&b_acc, &sender_type(), &ServerAuth::None, timeout).unwrap();
        s.set_timeout(timeout);
        s.recv_value().unwrap();
        let carrier_type = parse_type(&format!("cbegin.!<{}>", delegated_type(1))).unwrap();
        let mut carrier = request_session(&b_net, &c_addr, &carrier_type, &ClientAuth::None).unwrap();
        let opts = SenderOptions { secure: true, timeout, ..Default::default() };
        delegate(s, &mut carrier, &opts).map(|o| o.status)
    });
    let passive = net.spawn("A", move || {
        let mut s = request_session(&a_net, &b_addr, &passive_type(), &ClientAuth::None).unwrap();
        s.set_timeout(timeout);
        s.set_reconnector(Reconnector::new(&a_net, ClientAuth::None, true));
        s.send_value(&TypedValue::text("Item", "d1")).unwrap();
        s.send_value(&TypedValue::text("Item", "d2")).unwrap();
        s.recv_value()
    });
    net.start();

    let passive = passive.join().unwrap();
    assert!(matches!(passive, Err(SessionError::DelegationRefused(_))), "{passive:?}");
    assert_eq!(receiver.join().unwrap(), (DelegationStatus::CredentialRejected, false));
    sender.join().unwrap().ok();
}
