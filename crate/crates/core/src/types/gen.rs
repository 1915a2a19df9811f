//! Random session type generation for property tests and fuzzing.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Branches, MessageType, SessionType, Side};

const BASE_NAMES: [&str; 6] = ["int", "String", "ProductId", "ProductList", "CreditCard", "Receipt"];
const LABELS: [&str; 5] = ["CHECKOUT", "EXIT", "MORE", "DONE", "RETRY"];

/// A random remaining-session type (no `Begin`) of depth at most `depth`.
pub fn random_body<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> SessionType {
    if depth == 0 {
        return SessionType::End;
    }
    let d = depth - 1;
    match rng.gen_range(0..10) {
        0 => SessionType::End,
        1 | 2 => SessionType::send(random_message(rng, d), random_body(rng, d)),
        3 | 4 => SessionType::recv(random_message(rng, d), random_body(rng, d)),
        5 => SessionType::Select(random_branches(rng, d)),
        6 => SessionType::Offer(random_branches(rng, d)),
        7 => SessionType::out_iter(random_body(rng, d), random_body(rng, d)),
        8 => SessionType::in_iter(random_body(rng, d), random_body(rng, d)),
        _ => SessionType::send(MessageType::base(*BASE_NAMES.choose(rng).unwrap()), random_body(rng, d)),
    }
}

/// A random root protocol: `Begin` over a random body.
pub fn random_protocol<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> SessionType {
    let side = if rng.gen_bool(0.5) { Side::Client } else { Side::Server };
    SessionType::begin(side, random_body(rng, depth.saturating_sub(1)))
}

fn random_message<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> MessageType {
    if depth > 0 && rng.gen_bool(0.2) {
        MessageType::session(random_body(rng, depth))
    } else {
        MessageType::base(*BASE_NAMES.choose(rng).unwrap())
    }
}

fn random_branches<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Branches {
    let n = rng.gen_range(1..=3);
    let mut labels = LABELS.to_vec();
    labels.shuffle(rng);
    let branches = labels.into_iter().take(n).map(|l| (l.to_string(), random_body(rng, depth))).collect();
    Branches::new(branches).expect("labels are distinct")
}
