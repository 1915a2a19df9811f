//! A scripted network attacker for simulated runs. It taps the connection
//! between the passive party and the session-sender, can hold or drop the
//! delegation signal, acknowledge it in the passive party's place, and race
//! the passive party to the session-receiver's new port.

use std::fmt;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::Serialize;

use crate::delegation::{lm_frame, make_credential, Credential, DelegationSignal, SUCCESS};
use crate::session::{data_frame, frame_value, ClientAuth, TypedValue};
use crate::transcript::{Tracer, Transcript};
use crate::transport::{
    AttackerHandle, Capture, Frame, FrameChannel, FrameMeta, SimNetwork, Tag, TapDecision, TransportError,
};

/// What the tap does with the delegation signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DsHandling {
    /// Let it through untouched and unseen.
    Ignore,
    /// Read it and hold it back until the attacker has made its own attempt,
    /// then deliver it.
    Copy,
    /// Read it and never deliver it.
    Drop,
}

/// Which credential the attacker presents when one is required.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CredChoice {
    /// The one read from the delegation signal if it was readable, otherwise
    /// a fresh guess.
    Own,
    /// The real one, obtained out of band.
    Leaked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AttackScript {
    pub ds: DsHandling,
    /// Send DSACK to the session-sender as if from the passive party.
    pub ack_sender: bool,
    /// Connect to the session-receiver's delegation port.
    pub connect: bool,
    pub cred: CredChoice,
}

impl AttackScript {
    /// Intercept the signal, acknowledge it, and take the passive party's
    /// place at the session-receiver.
    pub const HIJACK: AttackScript =
        AttackScript { ds: DsHandling::Drop, ack_sender: true, connect: true, cred: CredChoice::Own };
}

impl Default for AttackScript {
    fn default() -> Self {
        AttackScript::HIJACK
    }
}

/// What the attacker knows about the run it attacks.
#[derive(Debug, Clone)]
pub(crate) struct Target {
    pub receiver_node: String,
    pub service_port: u16,
    /// Whether the credential protocol is in force.
    pub secure: bool,
    pub auth: ClientAuth,
    /// Values sent as lost messages once connected.
    pub forged: Vec<TypedValue>,
    /// Values to wait for afterwards.
    pub expect: usize,
    pub leak: Option<Arc<Mutex<Option<Credential>>>>,
    pub timeout: Option<Duration>,
    pub channel: String,
    pub new_channel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum AttackerResult {
    /// Nothing was attempted beyond tapping.
    Idle,
    /// Completed the session in the passive party's place.
    Infiltrated {
        received: Vec<String>,
    },
    CredentialRejected,
    Failed {
        reason: String,
    },
}

impl fmt::Display for AttackerResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackerResult::Idle => f.write_str("idle"),
            AttackerResult::Infiltrated { received } => write!(f, "infiltrated, received {}", received.join(", ")),
            AttackerResult::CredentialRejected => f.write_str("credential rejected"),
            AttackerResult::Failed { reason } => write!(f, "failed: {reason}"),
        }
    }
}

/// Attach the tap and register the attacker actor. Must be called before the
/// network is started.
pub(crate) fn install(
    sim: &SimNetwork,
    script: AttackScript,
    target: Target,
    log: &Transcript,
) -> JoinHandle<AttackerResult> {
    let ds = script.ds;
    let tap = move |_: &FrameMeta, f: &Frame| match (f.tag, ds) {
        (Tag::Ds, DsHandling::Copy | DsHandling::Drop) => TapDecision::suppress(true),
        _ => TapDecision::forward(),
    };
    let handle = sim.attach_attacker(Box::new(tap));
    let tracer = Tracer::new(log, "E", &target.channel);
    sim.spawn("E", move || run(handle, script, target, tracer))
}

fn run(handle: AttackerHandle, script: AttackScript, target: Target, tracer: Tracer) -> AttackerResult {
    if script.ds == DsHandling::Ignore && !script.connect {
        return AttackerResult::Idle;
    }
    let captured = if script.ds == DsHandling::Ignore {
        None
    } else {
        match handle.next_capture(target.timeout) {
            Ok(c) => Some(c),
            Err(e) => return AttackerResult::Failed { reason: format!("no delegation signal observed: {e}") },
        }
    };
    let learned = captured.as_ref().and_then(|c| DelegationSignal::decode(&c.frame.payload));
    if captured.is_some() {
        match &learned {
            Some(ds) => tracer.event(format!("intercept DS <{}, {}>", ds.remaining, ds.receiver)),
            None => tracer.event("intercept DS (unreadable)"),
        }
    }
    if script.ack_sender {
        if let Some(c) = &captured {
            tracer.event("inject DSACK");
            let _ = handle.inject(c.meta.conn, c.meta.from_side, Frame::empty(Tag::DsAck));
        }
    }
    let result = if script.connect {
        impersonate(&handle, &script, &target, learned.as_ref(), &tracer)
    } else {
        AttackerResult::Idle
    };
    if script.ds == DsHandling::Copy {
        if let Some(Capture { meta, frame }) = captured {
            tracer.event("release DS");
            let _ = handle.inject(meta.conn, 1 - meta.from_side, frame);
        }
    }
    result
}

fn impersonate(
    handle: &AttackerHandle,
    script: &AttackScript,
    target: &Target,
    learned: Option<&DelegationSignal>,
    tracer: &Tracer,
) -> AttackerResult {
    let failed = |reason: String| AttackerResult::Failed { reason };
    let addr = match learned {
        Some(ds) => ds.receiver.clone(),
        None => {
            let ports: Vec<u16> =
                handle.scan_ports(&target.receiver_node).into_iter().filter(|p| *p != target.service_port).collect();
            tracer.event(format!("scan {}: open ports {ports:?}", target.receiver_node));
            match ports.first() {
                Some(p) => crate::transport::Address::sim(target.receiver_node.clone(), *p),
                None => return failed("no open delegation port".into()),
            }
        }
    };
    let tracer = tracer.on(&target.new_channel);
    tracer.event(format!("connect to {addr}"));
    let node = handle.network().node("E");
    let conn = match node.connect(&addr) {
        Ok(c) => c,
        Err(e) => return failed(format!("connect: {e}")),
    };
    let mut chan = match target.auth.secure(conn) {
        Ok(c) => c,
        Err(e) => return failed(format!("authentication: {e}")),
    };
    chan.set_recv_timeout(target.timeout);

    if target.secure {
        let cred = match script.cred {
            CredChoice::Leaked => target.leak.as_ref().and_then(|l| *l.lock().unwrap_or_else(|e| e.into_inner())),
            CredChoice::Own => None,
        };
        let cred = cred.or_else(|| learned.and_then(|ds| ds.credential)).unwrap_or_else(make_credential);
        tracer.event("send CRED");
        if let Err(e) = chan.send_frame(&Frame::new(Tag::Cred, cred.as_bytes().to_vec())) {
            return failed(format!("sending CRED: {e}"));
        }
        match chan.recv_frame() {
            Ok(f) if f.tag == Tag::Branch && f.payload.get(1..) == Some(SUCCESS.as_bytes()) => {
                tracer.event("credential accepted");
            }
            Ok(_) | Err(TransportError::ChannelClosed) => {
                tracer.event("credential rejected");
                return AttackerResult::CredentialRejected;
            }
            Err(e) => return failed(format!("waiting for credential check: {e}")),
        }
    }

    tracer.event(format!("send LM ({} forged frames)", target.forged.len()));
    for (i, v) in target.forged.iter().enumerate() {
        let f = data_frame(0, v).expect("short type names");
        if let Err(e) = chan.send_frame(&lm_frame(i as u32, &f)) {
            return failed(format!("sending LM: {e}"));
        }
    }
    if let Err(e) = chan.send_frame(&Frame::empty(Tag::Lm)) {
        return failed(format!("sending LM: {e}"));
    }
    let mut received = Vec::new();
    while received.len() < target.expect {
        match chan.recv_frame() {
            Ok(f) => match frame_value(&f) {
                Some(v) => {
                    tracer.event(format!("recv {v}"));
                    received.push(v.to_string());
                }
                None => return failed(format!("unexpected {} frame", f.tag)),
            },
            Err(e) => return failed(format!("waiting for data: {e}")),
        }
    }
    chan.close();
    AttackerResult::Infiltrated { received }
}
