use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use secure_session::scenario::purchase::purchase_protocol;
use secure_session::types::gen::{random_body, random_protocol};
use secure_session::types::{
    dual, is_dual, lost_message_count, parse_file, parse_protocol, parse_type, render_protocol, SessionType,
};

fn protocol_from(seed: u64) -> SessionType {
    random_protocol(&mut ChaCha8Rng::seed_from_u64(seed), 7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dual_is_an_involution(seed in any::<u64>()) {
        let t = protocol_from(seed);
        prop_assert_eq!(dual(&dual(&t)), t.clone());
        prop_assert!(is_dual(&t, &dual(&t)));
    }

    #[test]
    fn rendering_parses_back(seed in any::<u64>()) {
        let t = protocol_from(seed);
        prop_assert_eq!(parse_protocol(&render_protocol(&t)).unwrap(), t.clone());
        prop_assert_eq!(parse_type(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn a_type_is_its_own_remote_view_with_nothing_lost(seed in any::<u64>()) {
        let body = random_body(&mut ChaCha8Rng::seed_from_u64(seed), 6);
        prop_assert_eq!(lost_message_count(&body, &dual(&body)).unwrap(), 0);
    }
}

#[test]
fn purchase_protocols_pair_up() {
    assert!(is_dual(&purchase_protocol("customerToVendor"), &purchase_protocol("vendorToCustomer")));
    assert!(is_dual(&purchase_protocol("vendorToHandler"), &purchase_protocol("handlerToVendor")));
    assert!(!is_dual(&purchase_protocol("customerToVendor"), &purchase_protocol("handlerToVendor")));
}

#[test]
fn delegated_types_are_carried_unchanged() {
    let t = parse_type("cbegin.!<?(CreditCard).!<Receipt>>").unwrap();
    assert_eq!(dual(&t).to_string(), "sbegin.?(?(CreditCard).!<Receipt>)");
}

#[test]
fn unsent_inputs_count_as_lost() {
    let local = parse_type("?(Done)").unwrap();
    let remote = parse_type("?(Item).?(Item).!<Done>").unwrap();
    assert_eq!(lost_message_count(&local, &remote).unwrap(), 2);
    let remote = parse_type("?[?(Item)]*.!<Done>").unwrap();
    assert_eq!(lost_message_count(&local, &remote).unwrap(), 1);
    assert!(lost_message_count(&local, &parse_type("!<Item>").unwrap()).is_err());
}

#[test]
fn duplicate_labels_are_rejected_with_a_position() {
    let e = parse_file("protocol p {\n  cbegin.!{A: , A: }\n}").unwrap_err();
    assert!(e.to_string().contains("duplicate"), "{e}");
    assert!(e.to_string().contains('2'), "{e}");
}
