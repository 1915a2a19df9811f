//! Shared, ordered log of protocol-level events across all roles of a run.

use std::fmt;
use std::sync::{Arc, Mutex};

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptEvent {
    pub index: usize,
    pub role: String,
    pub action: String,
    pub channel: String,
    /// Numbered delegation step this event realizes, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<String>,
}

impl fmt::Display for TranscriptEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>3}  {:<2} {:<4} {}", self.index, self.role, self.channel, self.action)?;
        if let Some(s) = &self.step {
            write!(f, "  [step {s}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Transcript(Arc<Mutex<Vec<TranscriptEvent>>>);

impl Transcript {
    pub fn new() -> Transcript {
        Transcript::default()
    }

    pub fn record(&self, role: &str, action: impl Into<String>, channel: &str, step: Option<&str>) {
        let mut v = self.0.lock().unwrap_or_else(|e| e.into_inner());
        let index = v.len() + 1;
        v.push(TranscriptEvent {
            index,
            role: role.to_string(),
            action: action.into(),
            channel: channel.to_string(),
            step: step.map(str::to_string),
        });
    }

    pub fn events(&self) -> Vec<TranscriptEvent> {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// The delegation step labels in order of occurrence.
    pub fn steps(&self) -> Vec<String> {
        self.events().into_iter().filter_map(|e| e.step).collect()
    }

    pub fn render(&self) -> String {
        self.events().iter().map(|e| format!("{e}\n")).collect()
    }
}

/// Where a role writes its events: the shared log plus its own name and the
/// logical name of the channel being used.
#[derive(Debug, Clone)]
pub struct Tracer {
    pub log: Transcript,
    pub role: String,
    pub channel: String,
}

impl Tracer {
    pub fn new(log: &Transcript, role: &str, channel: &str) -> Tracer {
        Tracer { log: log.clone(), role: role.to_string(), channel: channel.to_string() }
    }

    pub fn on(&self, channel: &str) -> Tracer {
        Tracer { log: self.log.clone(), role: self.role.clone(), channel: channel.to_string() }
    }

    pub fn event(&self, action: impl Into<String>) {
        self.log.record(&self.role, action, &self.channel, None);
    }

    pub fn step(&self, step: &str, action: impl Into<String>) {
        self.log.record(&self.role, action, &self.channel, Some(step));
    }
}
