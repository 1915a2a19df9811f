use std::path::PathBuf;
use std::process::{Command, Output};

use secure_session::scenario::demo_registry;
use secure_session::scenario::purchase::PURCHASE_PROTOCOLS;
use secure_session::srp::SrpGroup;

fn demo_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("demo").join(name)
}

fn secsess(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secsess")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn shipped_demo_files_match_the_builtins() {
    assert_eq!(std::fs::read_to_string(demo_file("purchase.sj")).unwrap(), PURCHASE_PROTOCOLS);
    let registry = demo_registry(&SrpGroup::rfc5054_1024()).to_string();
    assert_eq!(std::fs::read_to_string(demo_file("registry.txt")).unwrap(), registry);
}

#[test]
fn check_reports_dual_pairs() {
    let file = demo_file("purchase.sj");
    let file = file.to_str().unwrap();
    for (a, b) in [("customerToVendor", "vendorToCustomer"), ("vendorToHandler", "handlerToVendor")] {
        let o = secsess(&["check", file, a, b]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).ends_with(&format!("{a} / {b}: dual\n")), "{}", stdout(&o));
    }
    let o = secsess(&["check", file, "customerToVendor", "handlerToVendor"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("not dual"));
}

#[test]
fn check_rejects_duplicate_labels() {
    let path = std::env::temp_dir().join(format!("dup-{}.sj", std::process::id()));
    std::fs::write(&path, "protocol p {\n  cbegin.!{A: , A: }\n}\n").unwrap();
    let o = secsess(&["check", path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate"));
}

#[test]
fn secure_demo_runs_every_step_and_delivers_the_receipt() {
    let o = secsess(&["demo", "--secure", "--script", "add 2 items; CHECKOUT", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let j = json(&o);
    assert_eq!(j["command"], "demo");
    assert_eq!(j["completed"], true);
    assert_eq!(j["receipt"], "Receipt(paid, order 1)");
    let events = j["transcript"].as_array().unwrap();
    for e in events {
        for key in ["index", "role", "action", "channel"] {
            assert!(e.get(key).is_some(), "missing {key} in {e}");
        }
    }
    let steps: Vec<&str> = events.iter().filter_map(|e| e["step"].as_str()).collect();
    for s in ["1", "2", "3", "4", "5", "6", "7", "7'", "8", "9", "9'", "9a", "9a'", "10"] {
        assert!(steps.contains(&s), "step {s} missing from {steps:?}");
    }
}

#[test]
fn cancelled_demo_has_no_delegation_frames() {
    let o = secsess(&["demo", "--secure", "--script", "EXIT"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(!out.contains("DS") && !out.contains("START_DELEGATION") && !out.contains("[step"), "{out}");
}

#[test]
fn demo_over_tcp_completes() {
    let o = secsess(&["demo", "--secure", "--transport", "tcp", "--script", "add 0 items; CHECKOUT", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["completed"], true);
}

#[test]
fn attack_verdicts() {
    let o = secsess(&["attack", "original"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("seed 1: INFILTRATED\n"));
    let o = secsess(&["attack", "secure"]);
    assert!(stdout(&o).ends_with("seed 1: BLOCKED (credential rejected)\n"), "{}", stdout(&o));
    let o = secsess(&["attack", "secure", "--leak-cred"]);
    assert!(stdout(&o).ends_with("seed 1: INFILTRATED\n"));
    let o = secsess(&["attack", "original", "--json", "--runs", "3"]);
    let j = json(&o);
    assert_eq!(j["runs"].as_array().unwrap().len(), 3);
    assert_eq!(j["runs"][2]["verdict"]["verdict"], "INFILTRATED");
}

#[test]
fn modelcheck_verdicts_and_exit_codes() {
    let o = secsess(&["modelcheck", "secure", "--attacker", "--all"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("VIOLATED"));

    let o = secsess(&["modelcheck", "original", "--attacker", "AttackerExclusion"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("AttackerExclusion: VIOLATED (run ends infiltrated)"), "{out}");
    assert!(out.contains("E intercept") && out.contains("<- violation"), "{out}");

    let o = secsess(&["modelcheck", "secure", "Liveness", "--k", "2", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let j = json(&o);
    assert_eq!(j["command"], "modelcheck");
    assert_eq!(j["reports"][0]["verdicts"][0]["holds"], true);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["bogus"][..],
        &["attack", "original", "--transport", "tcp"],
        &["modelcheck", "secure", "--k", "3"],
        &["modelcheck", "secure", "NoSuchProperty"],
        &["demo", "--script", "buy everything"],
    ] {
        assert_eq!(secsess(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bound_overflow_is_reported() {
    let o = secsess(&["modelcheck", "secure", "--attacker", "--all", "--bound", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("state bound of 10 exceeded"));
}
