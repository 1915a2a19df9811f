//! A minimal delegation with a chosen number of lost messages. A sends two
//! items to B and waits for `Done`; B consumes `2 - k` of them and delegates
//! the rest of its session to C, so exactly `k` items must be resent.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::Serialize;

use super::attacker::{self, AttackScript, AttackerResult, CredChoice, Target};
use super::{demo_password, join, Env, OutcomeClass, Security, TransportKind, DEFAULT_TIMEOUT, SERVICE_PORT};
use crate::delegation::{
    delegate, receive_delegation, Credential, DelegationStatus, ReceiverOptions, Reconnector, SenderOptions,
};
use crate::session::{accept_session, request_session, ClientAuth, ServerAuth, SessionError, TypedValue};
use crate::transcript::{Tracer, Transcript};
use crate::transport::{Acceptor, Address, Network, TransportError};
use crate::types::{parse_type, SessionType};

pub const ITEMS: [&str; 2] = ["d1", "d2"];

pub fn passive_type() -> SessionType {
    parse_type("cbegin.!<Item>.!<Item>.?(Done)").expect("valid type")
}

pub fn sender_type() -> SessionType {
    parse_type("sbegin.?(Item).?(Item).!<Done>").expect("valid type")
}

/// What B still has to do after consuming `2 - k` items.
pub fn delegated_type(k: usize) -> SessionType {
    let mut t = String::new();
    for _ in 0..k {
        t.push_str("?(Item).");
    }
    t.push_str("!<Done>");
    parse_type(&t).expect("valid type")
}

#[derive(Debug, Clone)]
pub struct KConfig {
    pub k: usize,
    pub secure: bool,
    pub seed: u64,
    pub transport: TransportKind,
    pub attack: Option<AttackScript>,
    pub timeout: Duration,
    pub security: Security,
}

impl KConfig {
    pub fn new(k: usize, secure: bool, seed: u64) -> KConfig {
        KConfig {
            k,
            secure,
            seed,
            transport: TransportKind::Sim,
            attack: None,
            timeout: DEFAULT_TIMEOUT,
            security: Security::demo(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReceiverSummary {
    pub status: String,
    pub peer: Option<String>,
    /// Whether the receiver finished the migrated session.
    pub finished: bool,
}

#[derive(Debug, Clone)]
pub struct KReport {
    pub k: usize,
    pub transcript: Transcript,
    /// Item values as A sent them.
    pub sent: Vec<String>,
    /// Item values consumed by B before delegating.
    pub at_sender: Vec<String>,
    /// Item values consumed by C after the delegation.
    pub at_receiver: Vec<String>,
    pub passive: Result<String, String>,
    pub sender: Result<DelegationStatus, String>,
    pub receiver: Result<ReceiverSummary, String>,
    pub attacker: Option<AttackerResult>,
    pub class: OutcomeClass,
}

impl KReport {
    /// Values consumed across the delegation, in order.
    pub fn observed(&self) -> Vec<String> {
        self.at_sender.iter().chain(&self.at_receiver).cloned().collect()
    }
}

struct Ctx {
    k: usize,
    secure: bool,
    sec: Security,
    timeout: Option<Duration>,
    log: Transcript,
    at_sender: Mutex<Vec<String>>,
    at_receiver: Mutex<Vec<String>>,
}

fn client_auth(ctx: &Ctx, user: &str) -> ClientAuth {
    if ctx.secure {
        ClientAuth::srp(&ctx.sec.group, user, demo_password(user).unwrap_or_default())
    } else {
        ClientAuth::None
    }
}

fn server_auth(ctx: &Ctx) -> ServerAuth {
    if ctx.secure {
        ServerAuth::srp(&ctx.sec.group, ctx.sec.registry.clone())
    } else {
        ServerAuth::None
    }
}

fn noted<T>(tracer: &Tracer, r: Result<T, SessionError>) -> Result<T, String> {
    r.map_err(|e| {
        tracer.event(format!("failed: {e}"));
        e.to_string()
    })
}

fn passive(ctx: &Ctx, net: Network, b: Address) -> Result<String, String> {
    let tracer = Tracer::new(&ctx.log, "A", "A-B");
    noted(
        &tracer,
        (|| {
            let auth = client_auth(ctx, "customer");
            let mut s = request_session(&net, &b, &passive_type(), &auth)?;
            s.set_timeout(ctx.timeout);
            s.set_tracer(tracer.clone());
            let mut r = Reconnector::new(&net, auth, ctx.secure);
            r.timeout = ctx.timeout;
            r.channel = "A-C".into();
            s.set_reconnector(r);
            for v in ITEMS {
                s.send_value(&TypedValue::text("Item", v))?;
            }
            let done = s.recv_value()?;
            s.close()?;
            Ok(done.to_string())
        })(),
    )
}

fn sender(
    ctx: &Ctx,
    net: Network,
    acceptor: Acceptor,
    c: Address,
    leak: Option<Arc<Mutex<Option<Credential>>>>,
) -> Result<DelegationStatus, String> {
    let tracer = Tracer::new(&ctx.log, "B", "A-B");
    noted(
        &tracer,
        (|| {
            let mut s = accept_session(&acceptor, &sender_type(), &server_auth(ctx), ctx.timeout)?;
            drop(acceptor);
            s.set_timeout(ctx.timeout);
            s.set_tracer(tracer.clone());
            for _ in 0..2 - ctx.k {
                let v = s.recv_value()?;
                ctx.at_sender.lock().unwrap().push(v.as_text().unwrap_or_default().to_string());
            }
            let carrier_type = parse_type(&format!("cbegin.!<{}>", delegated_type(ctx.k))).expect("valid type");
            let mut carrier = request_session(&net, &c, &carrier_type, &client_auth(ctx, "vendor"))?;
            carrier.set_timeout(ctx.timeout);
            carrier.set_tracer(tracer.on("B-C"));
            let opts = SenderOptions { secure: ctx.secure, timeout: ctx.timeout, credential_log: None, leak };
            let out = delegate(s, &mut carrier, &opts)?;
            if out.status == DelegationStatus::Completed {
                carrier.close()?;
            }
            Ok(out.status)
        })(),
    )
}

fn receiver(ctx: &Ctx, net: Network, acceptor: Acceptor) -> Result<ReceiverSummary, String> {
    let tracer = Tracer::new(&ctx.log, "C", "B-C");
    noted(
        &tracer,
        (|| {
            let carrier_type = parse_type(&format!("sbegin.?({})", delegated_type(ctx.k))).expect("valid type");
            let mut carrier = accept_session(&acceptor, &carrier_type, &server_auth(ctx), ctx.timeout)?;
            drop(acceptor);
            carrier.set_timeout(ctx.timeout);
            carrier.set_tracer(tracer.clone());
            let opts = ReceiverOptions {
                secure: ctx.secure,
                timeout: ctx.timeout,
                auth: server_auth(ctx),
                channel: "A-C".into(),
            };
            let out = receive_delegation(&net, &mut carrier, &opts)?;
            let mut summary = ReceiverSummary { status: out.status.to_string(), peer: None, finished: false };
            let Some(mut m) = out.migrated else {
                return Ok(summary);
            };
            carrier.close()?;
            summary.peer = Some(m.peer_addr().node());
            for _ in 0..ctx.k {
                let v = m.recv_value()?;
                ctx.at_receiver.lock().unwrap().push(v.as_text().unwrap_or_default().to_string());
            }
            match m.send_value(&TypedValue::text("Done", "ok")) {
                Ok(()) => {}
                Err(SessionError::Transport(TransportError::ChannelClosed)) | Err(SessionError::PeerClosed) => {
                    return Ok(summary)
                }
                Err(e) => return Err(e),
            }
            summary.finished = true;
            let _ = m.close();
            Ok(summary)
        })(),
    )
}

fn classify(
    passive: &Result<String, String>,
    sender: &Result<DelegationStatus, String>,
    receiver: &Result<ReceiverSummary, String>,
) -> OutcomeClass {
    match receiver {
        Ok(r) if r.finished && r.peer.as_deref() == Some("E") => OutcomeClass::Infiltrated,
        Ok(r) if r.status == DelegationStatus::CredentialRejected.to_string() => OutcomeClass::Rejected,
        Ok(r) if r.finished && passive.is_ok() && sender.as_ref().is_ok_and(|s| *s == DelegationStatus::Completed) => {
            OutcomeClass::Completed
        }
        _ => OutcomeClass::Stalled,
    }
}

pub fn run_k(cfg: &KConfig) -> Result<KReport, String> {
    if cfg.k > 2 {
        return Err(format!("k must be 0, 1 or 2, got {}", cfg.k));
    }
    let env = Env::new(cfg.transport, cfg.seed);
    let log = Transcript::new();
    let ctx = Arc::new(Ctx {
        k: cfg.k,
        secure: cfg.secure,
        sec: cfg.security.clone(),
        timeout: Some(cfg.timeout),
        log: log.clone(),
        at_sender: Mutex::new(Vec::new()),
        at_receiver: Mutex::new(Vec::new()),
    });
    let (a_net, b_net, c_net) = (env.node("A"), env.node("B"), env.node("C"));
    let (b_acc, b_addr) = env.serve(&b_net).map_err(|e| format!("B: {e}"))?;
    let (c_acc, c_addr) = env.serve(&c_net).map_err(|e| format!("C: {e}"))?;
    let leak = cfg.attack.filter(|a| a.cred == CredChoice::Leaked).map(|_| Arc::new(Mutex::new(None)));

    let attacker = match (cfg.attack, env.sim()) {
        (Some(script), Some(sim)) => {
            let target = Target {
                receiver_node: "C".into(),
                service_port: SERVICE_PORT,
                secure: cfg.secure,
                auth: client_auth(&ctx, "mallory"),
                forged: (0..cfg.k).map(|i| TypedValue::text("Item", &format!("forged-{}", i + 1))).collect(),
                expect: 1,
                leak: leak.clone(),
                timeout: Some(cfg.timeout),
                channel: "A-B".into(),
                new_channel: "E-C".into(),
            };
            Some(attacker::install(sim, script, target, &log))
        }
        (Some(_), None) => return Err("attacks require the simulated network".into()),
        (None, _) => None,
    };

    let c = ctx.clone();
    let ch = env.spawn("C", move || receiver(&c, c_net, c_acc));
    let c = ctx.clone();
    let bh = env.spawn("B", move || sender(&c, b_net, b_acc, c_addr, leak));
    let c = ctx.clone();
    let ah = env.spawn("A", move || passive(&c, a_net, b_addr));
    env.start();

    let passive = join(ah);
    let sender = join(bh);
    let receiver = join(ch);
    let attacker = attacker.map(|h| h.join().unwrap_or(AttackerResult::Failed { reason: "attacker panicked".into() }));
    let class = classify(&passive, &sender, &receiver);
    let at_sender = ctx.at_sender.lock().unwrap().clone();
    let at_receiver = ctx.at_receiver.lock().unwrap().clone();
    Ok(KReport {
        k: cfg.k,
        transcript: log,
        sent: ITEMS.iter().map(|s| s.to_string()).collect(),
        at_sender,
        at_receiver,
        passive,
        sender,
        receiver,
        attacker,
        class,
    })
}
