//! Replaying model witnesses as concrete simulated runs.

use serde::Serialize;

use super::{AttackerAction, Verdict, Witness};
use crate::scenario::{run_k, AttackScript, CredChoice, DsHandling, KConfig, OutcomeClass};

/// The attack script that makes the simulated attacker do what the
/// attacker does in `w`, or `None` if it does nothing.
pub fn script_for(w: &Witness) -> Option<AttackScript> {
    let did = |a: AttackerAction| w.steps.iter().any(|s| s.attacker == Some(a));
    let ds = if did(AttackerAction::Intercept) {
        DsHandling::Drop
    } else if did(AttackerAction::Copy) {
        DsHandling::Copy
    } else {
        DsHandling::Ignore
    };
    let script = AttackScript {
        ds,
        ack_sender: did(AttackerAction::Ack),
        connect: did(AttackerAction::Connect),
        cred: CredChoice::Own,
    };
    (ds != DsHandling::Ignore || script.connect).then_some(script)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Replay {
    pub script: Option<AttackScript>,
    pub model_class: OutcomeClass,
    pub sim_class: OutcomeClass,
}

impl Replay {
    pub fn agrees(&self) -> bool {
        self.model_class == self.sim_class
    }
}

/// Run the witness of `v` on the simulated network.
pub fn replay(v: &Verdict, seed: u64) -> Result<Replay, String> {
    let w = v.witness.as_ref().ok_or_else(|| format!("{} holds, nothing to replay", v.property))?;
    let script = script_for(w);
    let mut cfg = KConfig::new(v.config.k as usize, v.config.secure, seed);
    cfg.attack = script;
    let report = run_k(&cfg)?;
    Ok(Replay { script, model_class: w.class, sim_class: report.class })
}
