mod common;

use common::{delivered_fuzz, fuzz_run, traffic_run};
use secure_session::session::SessionError;

#[test]
fn random_dual_sessions_complete_without_mismatches() {
    for seed in 0..150 {
        let run = traffic_run(seed);
        let client = run.client.unwrap_or_else(|(e, _)| panic!("seed {seed} `{}`: client {e}", run.protocol));
        let server = run.server.unwrap_or_else(|(e, _)| panic!("seed {seed} `{}`: server {e}", run.protocol));
        assert_eq!(client.mismatches() + server.mismatches(), 0);
    }
}

#[test]
fn ill_typed_frames_are_caught_before_delivery() {
    let mut caught = 0;
    for seed in 0..150 {
        let run = fuzz_run(seed);
        if run.fuzzed.is_none() {
            assert!(run.monitored.is_ok(), "seed {seed}: honest run failed");
            continue;
        }
        match run.monitored {
            Err((SessionError::TypeMismatch { .. }, obs)) => {
                assert!(!delivered_fuzz(&obs), "seed {seed}: fuzzed value delivered");
                caught += 1;
            }
            Err((e, _)) => panic!("seed {seed} `{}`: expected a type mismatch, got {e}", run.protocol),
            Ok(_) => panic!("seed {seed} `{}`: {:?} went unnoticed", run.protocol, run.fuzzed),
        }
    }
    assert!(caught > 50, "only {caught} runs reached a fuzzed frame");
}
