//! Exhaustive exploration of the delegation protocols with an optional
//! Dolev-Yao style attacker, and checks of their security properties.

mod model;
mod replay;

use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

pub use model::{Atom, AttackerAction, ModelConfig, Move, MoveKind, Party, ProtocolModel, State, Val};
pub use replay::{replay, script_for, Replay};

use crate::scenario::OutcomeClass;

pub const DEFAULT_BOUND: usize = 1_000_000;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("state bound of {bound} exceeded")]
    BoundExceeded { bound: usize },
    #[error("{0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Property {
    Freshness,
    TernaryAuth,
    Consistency,
    Liveness,
    Linearity,
    AttackerExclusion,
}

impl Property {
    pub const ALL: [Property; 6] = [
        Property::Freshness,
        Property::TernaryAuth,
        Property::Consistency,
        Property::Liveness,
        Property::Linearity,
        Property::AttackerExclusion,
    ];

    fn violated(self, m: &ProtocolModel, s: &State, terminal: bool) -> bool {
        match self {
            Property::Freshness => m.stale_ds(s),
            Property::TernaryAuth => m.receiver_established_with(s).is_some() && !m.check_passed(s),
            Property::Consistency => !m.consistent_prefix(s) || (terminal && m.receiver_done(s) && !m.consumed_all(s)),
            Property::Liveness => terminal && !m.all_completed(s) && !m.interfered(s),
            Property::Linearity => !m.linear(s),
            Property::AttackerExclusion => m.receiver_established_with(s) == Some(Party::E) || m.attacker_authorized(s),
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let want = s.replace(['-', '_'], "").to_ascii_lowercase();
        Property::ALL
            .into_iter()
            .find(|p| p.to_string().to_ascii_lowercase() == want)
            .ok_or_else(|| format!("unknown property {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessStep {
    pub role: Party,
    pub action: String,
    pub channel: &'static str,
    pub payload: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<&'static str>,
    #[serde(skip)]
    pub attacker: Option<AttackerAction>,
}

impl From<&Move> for WitnessStep {
    fn from(m: &Move) -> Self {
        WitnessStep {
            role: m.role,
            action: m.action.clone(),
            channel: m.channel,
            payload: m.payload.clone(),
            steps: m.steps.clone(),
            attacker: m.attacker,
        }
    }
}

impl fmt::Display for WitnessStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.role, self.action, self.channel)?;
        if !self.payload.is_empty() {
            write!(f, " {}", self.payload)?;
        }
        if !self.steps.is_empty() {
            write!(f, " [{}]", self.steps.join(","))?;
        }
        Ok(())
    }
}

/// A run reaching a violation, extended to a final state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub steps: Vec<WitnessStep>,
    /// Number of leading steps after which the property is violated.
    pub violation_at: usize,
    pub class: OutcomeClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub property: Property,
    pub config: ModelConfig,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(w) = &self.witness else {
            return write!(f, "{}: holds", self.property);
        };
        writeln!(f, "{}: VIOLATED (run ends {})", self.property, w.class)?;
        for (i, s) in w.steps.iter().enumerate() {
            let mark = if i + 1 == w.violation_at { "  <- violation" } else { "" };
            writeln!(f, "  {:>2}. {s}{mark}", i + 1)?;
        }
        Ok(())
    }
}

/// The explored state graph of one model.
pub struct Exploration {
    pub model: ProtocolModel,
    states: Vec<State>,
    parent: Vec<Option<(usize, Move)>>,
    terminal: Vec<bool>,
    pub transitions: usize,
}

pub fn explore(model: ProtocolModel, bound: usize) -> Result<Exploration, CheckError> {
    let init = model.initial();
    let mut index = HashMap::new();
    index.insert(init.clone(), 0);
    let mut states = vec![init];
    let mut parent = vec![None];
    let mut terminal = Vec::new();
    let mut transitions = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let moves = model.moves(&states[i]);
        if terminal.len() <= i {
            terminal.resize(i + 1, false);
        }
        terminal[i] = moves.is_empty();
        for (m, next) in moves {
            transitions += 1;
            if index.contains_key(&next) {
                continue;
            }
            if states.len() >= bound {
                return Err(CheckError::BoundExceeded { bound });
            }
            index.insert(next.clone(), states.len());
            queue.push_back(states.len());
            states.push(next);
            parent.push(Some((i, m)));
        }
    }
    terminal.resize(states.len(), false);
    Ok(Exploration { model, states, parent, terminal, transitions })
}

impl Exploration {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminal.iter().filter(|t| **t).count()
    }

    /// Final states in which not every honest party finished.
    pub fn stuck(&self) -> impl Iterator<Item = &State> {
        self.states.iter().zip(&self.terminal).filter(|(s, t)| **t && !self.model.all_completed(s)).map(|(s, _)| s)
    }

    fn path_to(&self, mut i: usize) -> Vec<Move> {
        let mut path = Vec::new();
        while let Some((p, m)) = &self.parent[i] {
            path.push(m.clone());
            i = *p;
        }
        path.reverse();
        path
    }

    /// Run on from `s` with honest parties first and no further attacker
    /// choices, until nothing can move.
    fn continue_run(&self, s: &State) -> (Vec<Move>, State) {
        let mut s = s.clone();
        let mut path = Vec::new();
        while let Some((m, next)) = self.model.moves(&s).into_iter().find(|(m, _)| m.kind != MoveKind::AttackerChoice) {
            path.push(m);
            s = next;
        }
        (path, s)
    }

    /// Check one property. States are visited in breadth-first order, so a
    /// witness has the fewest steps to the violation.
    pub fn check(&self, property: Property) -> Verdict {
        let found = (0..self.states.len()).find(|&i| property.violated(&self.model, &self.states[i], self.terminal[i]));
        let witness = found.map(|i| {
            let prefix = self.path_to(i);
            let (rest, end) = self.continue_run(&self.states[i]);
            let violation_at = prefix.len();
            Witness {
                steps: prefix.iter().chain(&rest).map(WitnessStep::from).collect(),
                violation_at,
                class: self.model.class(&end),
            }
        });
        Verdict { property, config: self.model.config, holds: witness.is_none(), witness }
    }

    /// Check that every transition respects the step order and that every
    /// completed run performs every step.
    pub fn conformance(&self) -> Result<(), String> {
        let m = &self.model;
        for (i, s) in self.states.iter().enumerate() {
            let complete = self.terminal[i] && m.all_completed(s);
            if m.order_error(s) || (complete && !m.all_steps_done(s)) {
                let path: Vec<String> = self.path_to(i).iter().map(|mv| WitnessStep::from(mv).to_string()).collect();
                return Err(format!("step order broken along: {}", path.join("; ")));
            }
        }
        Ok(())
    }

    /// Distinct sequences of step labels over all completed runs.
    pub fn step_sequences(&self) -> Vec<Vec<&'static str>> {
        let mut out: Vec<Vec<&'static str>> = Vec::new();
        for (i, s) in self.states.iter().enumerate() {
            if self.terminal[i] && self.model.all_completed(s) {
                let seq: Vec<&'static str> = self.path_to(i).iter().flat_map(|m| m.steps.iter().copied()).collect();
                if !out.contains(&seq) {
                    out.push(seq);
                }
            }
        }
        out.sort();
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub config: ModelConfig,
    pub states: usize,
    pub transitions: usize,
    pub terminal: usize,
    pub verdicts: Vec<Verdict>,
    /// Only checked without an attacker.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "conformance_json")]
    pub conformance: Option<Result<(), String>>,
}

fn conformance_json<S: serde::Serializer>(r: &Option<Result<(), String>>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(Ok(())) => s.serialize_str("conforms"),
        Some(Err(e)) => s.serialize_str(e),
        None => s.serialize_none(),
    }
}

impl CheckReport {
    pub fn render(&self) -> String {
        let c = self.config;
        let mut out = format!(
            "model: {} protocol, attacker {}, k={}\nstates: {}, transitions: {}, final states: {}\n",
            if c.secure { "secure" } else { "original" },
            if c.attacker { "on" } else { "off" },
            c.k,
            self.states,
            self.transitions,
            self.terminal
        );
        if let Some(r) = &self.conformance {
            match r {
                Ok(()) => out.push_str("step order: conforms\n"),
                Err(e) => {
                    let _ = writeln!(out, "step order: {e}");
                }
            }
        }
        for v in &self.verdicts {
            let _ = write!(out, "{v}");
            if v.holds {
                out.push('\n');
            }
        }
        out
    }
}

/// Explore one configuration and check the given properties.
pub fn check_model(config: ModelConfig, properties: &[Property], bound: usize) -> Result<CheckReport, CheckError> {
    let model = ProtocolModel::new(config).map_err(CheckError::InvalidModel)?;
    let ex = explore(model, bound)?;
    Ok(CheckReport {
        config,
        states: ex.state_count(),
        transitions: ex.transitions,
        terminal: ex.terminal_count(),
        verdicts: properties.iter().map(|p| ex.check(*p)).collect(),
        conformance: (!config.attacker).then(|| ex.conformance()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(secure: bool, attacker: bool, k: u8) -> ModelConfig {
        ModelConfig { secure, attacker, k }
    }

    fn holds(c: ModelConfig, p: Property) -> bool {
        check_model(c, &[p], DEFAULT_BOUND).unwrap().verdicts[0].holds
    }

    #[test]
    fn property_names_parse() {
        assert_eq!("ternary-auth".parse::<Property>(), Ok(Property::TernaryAuth));
        assert_eq!("AttackerExclusion".parse::<Property>(), Ok(Property::AttackerExclusion));
        assert!("safety".parse::<Property>().is_err());
    }

    #[test]
    fn honest_secure_runs_conform_and_finish() {
        for k in 0..=2 {
            let ex = explore(ProtocolModel::new(cfg(true, false, k)).unwrap(), DEFAULT_BOUND).unwrap();
            assert_eq!(ex.conformance(), Ok(()));
            assert_eq!(ex.stuck().count(), 0);
            for seq in ex.step_sequences() {
                assert!(ex.model.order().check(&seq).is_ok(), "{seq:?}");
            }
        }
    }

    #[test]
    fn secure_protocol_resists_the_attacker() {
        for k in 0..=2 {
            for p in Property::ALL {
                assert!(holds(cfg(true, true, k), p), "{p} k={k}");
            }
        }
    }

    #[test]
    fn original_protocol_is_hijacked() {
        let r = check_model(cfg(false, true, 1), &[Property::AttackerExclusion, Property::Consistency], DEFAULT_BOUND)
            .unwrap();
        for v in &r.verdicts {
            let w = v.witness.as_ref().expect("violation");
            assert_eq!(w.class, OutcomeClass::Infiltrated);
            assert!(w.steps.iter().any(|s| s.role == Party::E && s.payload == "DS"));
        }
    }

    #[test]
    fn original_protocol_lacks_credentials() {
        assert!(!holds(cfg(false, false, 0), Property::Freshness));
        assert!(!holds(cfg(false, false, 0), Property::TernaryAuth));
        assert!(holds(cfg(false, false, 2), Property::Liveness));
        assert!(holds(cfg(false, false, 2), Property::Consistency));
    }

    #[test]
    fn tiny_bound_is_reported() {
        let r = check_model(cfg(true, true, 2), &Property::ALL, 10);
        assert_eq!(r.unwrap_err(), CheckError::BoundExceeded { bound: 10 });
    }

    #[test]
    fn exploration_is_deterministic() {
        let a = check_model(cfg(false, true, 2), &Property::ALL, DEFAULT_BOUND).unwrap();
        let b = check_model(cfg(false, true, 2), &Property::ALL, DEFAULT_BOUND).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
