//! The online purchase: a customer C shops at vendor V, and on checkout V
//! delegates the payment part of the session to the payment handler H.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::Serialize;

use super::attacker::{self, AttackScript, AttackerResult, CredChoice, Target};
use super::{demo_password, join, Env, Security, TransportKind, DEFAULT_TIMEOUT, SERVICE_PORT};
use crate::delegation::{delegate, receive_delegation, DelegationStatus, ReceiverOptions, Reconnector, SenderOptions};
use crate::session::{accept_session, request_session, ClientAuth, ServerAuth, SessionError, TypedValue};
use crate::transcript::{Tracer, Transcript};
use crate::transport::{Acceptor, Address, Network, TransportError};
use crate::types::{parse_file, SessionType};

/// The four protocols of the purchase, as a protocol file.
pub const PURCHASE_PROTOCOLS: &str = "\
// Customer and vendor: browse, fill a basket, then pay or leave.
protocol customerToVendor {
  cbegin.
  ?(ProductList).
  ![
    !<ProductId>.
    ?(int)
  ]*.
  !{
    CHECKOUT: !<CreditCard>.?(Receipt),
    EXIT:
  }
}

protocol vendorToCustomer {
  sbegin.
  !<ProductList>.
  ?[
    ?(ProductId).
    !<int>
  ]*.
  ?{
    CHECKOUT: ?(CreditCard).!<Receipt>,
    EXIT:
  }
}

// Vendor and payment handler: the vendor hands over its side of the payment.
protocol vendorToHandler {
  cbegin.!<?(CreditCard).!<Receipt>>
}

protocol handlerToVendor {
  sbegin.?(?(CreditCard).!<Receipt>)
}
";

/// Look up one of the purchase protocols by name.
pub fn purchase_protocol(name: &str) -> SessionType {
    parse_file(PURCHASE_PROTOCOLS)
        .expect("built-in protocols parse")
        .into_iter()
        .find(|p| p.name == name)
        .unwrap_or_else(|| panic!("no built-in protocol `{name}`"))
        .ty
}

/// The customer's decisions: how many items to add, then whether to pay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Script {
    pub items: u32,
    pub checkout: bool,
}

impl Default for Script {
    fn default() -> Self {
        Script { items: 2, checkout: true }
    }
}

impl FromStr for Script {
    type Err = String;

    /// Accepts `EXIT`, `CHECKOUT`, or `add N items; CHECKOUT|EXIT`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(';').map(str::trim).collect();
        let (add, choice) = match parts[..] {
            [choice] => (None, choice),
            [add, choice] => (Some(add), choice),
            _ => return Err(format!("bad script `{s}`")),
        };
        let items = match add {
            None => 0,
            Some(a) => {
                let words: Vec<&str> = a.split_whitespace().collect();
                match words[..] {
                    ["add", n, "item" | "items"] => n.parse().map_err(|_| format!("bad item count `{n}`"))?,
                    _ => return Err(format!("expected `add N items`, got `{a}`")),
                }
            }
        };
        let checkout = match choice {
            "CHECKOUT" => true,
            "EXIT" => false,
            _ => return Err(format!("expected CHECKOUT or EXIT, got `{choice}`")),
        };
        Ok(Script { items, checkout })
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "add {} items; {}", self.items, if self.checkout { "CHECKOUT" } else { "EXIT" })
    }
}

#[derive(Debug, Clone)]
pub struct PurchaseConfig {
    pub transport: TransportKind,
    /// SRP on every connection plus the credential-checked delegation.
    pub secure: bool,
    pub seed: u64,
    pub script: Script,
    pub timeout: Duration,
    pub security: Security,
}

impl Default for PurchaseConfig {
    fn default() -> Self {
        PurchaseConfig {
            transport: TransportKind::Sim,
            secure: false,
            seed: 0,
            script: Script::default(),
            timeout: DEFAULT_TIMEOUT,
            security: Security::demo(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HandlerSummary {
    pub status: String,
    /// Node of the party that took the migrated session.
    pub peer: Option<String>,
    pub card: Option<String>,
}

impl HandlerSummary {
    fn idle() -> HandlerSummary {
        HandlerSummary { status: "idle".into(), peer: None, card: None }
    }
}

#[derive(Debug, Clone)]
pub struct PurchaseReport {
    pub transcript: Transcript,
    pub customer: Result<Option<String>, String>,
    pub vendor: Result<Option<DelegationStatus>, String>,
    pub handler: Result<HandlerSummary, String>,
}

impl PurchaseReport {
    /// The receipt the customer obtained, if any.
    pub fn receipt(&self) -> Option<&str> {
        self.customer.as_ref().ok().and_then(|r| r.as_deref())
    }

    /// First role failure, if any.
    pub fn failure(&self) -> Option<String> {
        let mut errs = Vec::new();
        if let Err(e) = &self.customer {
            errs.push(format!("C: {e}"));
        }
        match &self.vendor {
            Err(e) => errs.push(format!("V: {e}")),
            Ok(Some(s)) if *s != DelegationStatus::Completed => errs.push(format!("V: delegation {s}")),
            _ => {}
        }
        if let Err(e) = &self.handler {
            errs.push(format!("H: {e}"));
        }
        (!errs.is_empty()).then(|| errs.join("; "))
    }

    pub fn completed(&self) -> bool {
        self.failure().is_none()
    }
}

fn client_auth(secure: bool, sec: &Security, user: &str) -> ClientAuth {
    if secure {
        ClientAuth::srp(&sec.group, user, demo_password(user).unwrap_or_default())
    } else {
        ClientAuth::None
    }
}

fn server_auth(secure: bool, sec: &Security) -> ServerAuth {
    if secure {
        ServerAuth::srp(&sec.group, sec.registry.clone())
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

struct Roles {
    secure: bool,
    sec: Security,
    timeout: Option<Duration>,
    log: Transcript,
}

impl Roles {
    fn customer(&self, net: Network, vendor: Address, script: Script) -> Result<Option<String>, String> {
        let tracer = Tracer::new(&self.log, "C", "C-V");
        let auth = client_auth(self.secure, &self.sec, "customer");
        let t = purchase_protocol("customerToVendor");
        noted(
            &tracer,
            (|| {
                let mut s = request_session(&net, &vendor, &t, &auth)?;
                s.set_timeout(self.timeout);
                s.set_tracer(tracer.clone());
                tracer.event("session customerToVendor established");
                let mut r = Reconnector::new(&net, auth.clone(), self.secure);
                r.timeout = self.timeout;
                s.set_reconnector(r);
                s.recv_value()?;
                for i in 0..script.items {
                    s.iter_continue(true)?;
                    s.send_value(&TypedValue::text("ProductId", &format!("item-{}", i + 1)))?;
                    s.recv_value()?;
                }
                s.iter_continue(false)?;
                if !script.checkout {
                    s.select("EXIT")?;
                    s.close()?;
                    return Ok(None);
                }
                s.select("CHECKOUT")?;
                s.send_value(&TypedValue::text("CreditCard", "4111-1111-1111-1111"))?;
                let receipt = s.recv_value()?;
                s.close()?;
                Ok(Some(receipt.to_string()))
            })(),
        )
    }

    fn vendor(
        &self,
        net: Network,
        acceptor: Acceptor,
        handler: Address,
        leak: Option<Arc<Mutex<Option<crate::delegation::Credential>>>>,
    ) -> Result<Option<DelegationStatus>, String> {
        let tracer = Tracer::new(&self.log, "V", "C-V");
        noted(
            &tracer,
            (|| {
                let t = purchase_protocol("vendorToCustomer");
                let mut s = accept_session(&acceptor, &t, &server_auth(self.secure, &self.sec), self.timeout)?;
                drop(acceptor);
                s.set_timeout(self.timeout);
                s.set_tracer(tracer.clone());
                tracer.event("session vendorToCustomer established");
                s.send_value(&TypedValue::text("ProductList", "tea,coffee,cocoa"))?;
                let mut total = 0u32;
                while s.iter_follow()? {
                    s.recv_value()?;
                    total += 3;
                    s.send_value(&TypedValue::text("int", &total.to_string()))?;
                }
                if s.offer()? == "EXIT" {
                    s.close()?;
                    return Ok(None);
                }
                let vt = purchase_protocol("vendorToHandler");
                let mut carrier = request_session(&net, &handler, &vt, &client_auth(self.secure, &self.sec, "vendor"))?;
                carrier.set_timeout(self.timeout);
                carrier.set_tracer(tracer.on("V-H"));
                tracer.on("V-H").event("session vendorToHandler established");
                let opts = SenderOptions { secure: self.secure, timeout: self.timeout, credential_log: None, leak };
                let out = delegate(s, &mut carrier, &opts)?;
                if out.status == DelegationStatus::Completed {
                    carrier.close()?;
                }
                Ok(Some(out.status))
            })(),
        )
    }

    fn handler(&self, net: Network, acceptor: Acceptor) -> Result<HandlerSummary, String> {
        let tracer = Tracer::new(&self.log, "H", "V-H");
        let t = purchase_protocol("handlerToVendor");
        let mut carrier = match accept_session(&acceptor, &t, &server_auth(self.secure, &self.sec), self.timeout) {
            Err(SessionError::Transport(TransportError::Timeout)) => return Ok(HandlerSummary::idle()),
            r => noted(&tracer, r)?,
        };
        drop(acceptor);
        noted(
            &tracer,
            (|| {
                carrier.set_timeout(self.timeout);
                carrier.set_tracer(tracer.clone());
                tracer.event("session handlerToVendor established");
                let opts = ReceiverOptions {
                    secure: self.secure,
                    timeout: self.timeout,
                    auth: server_auth(self.secure, &self.sec),
                    channel: "C-H".into(),
                };
                let out = receive_delegation(&net, &mut carrier, &opts)?;
                let mut summary = HandlerSummary { status: out.status.to_string(), peer: None, card: None };
                let Some(mut m) = out.migrated else {
                    return Ok(summary);
                };
                carrier.close()?;
                summary.peer = Some(m.peer_addr().node());
                let card = m.recv_value()?;
                summary.card = Some(card.to_string());
                m.send_value(&TypedValue::text("Receipt", "paid, order 1"))?;
                m.close()?;
                Ok(summary)
            })(),
        )
    }
}

fn run(
    transport: TransportKind,
    secure: bool,
    seed: u64,
    script: Script,
    timeout: Duration,
    sec: Security,
    attack: Option<(AttackScript, bool)>,
) -> Result<(PurchaseReport, Option<AttackerResult>), String> {
    let env = Env::new(transport, seed);
    let log = Transcript::new();
    let roles = Arc::new(Roles { secure, sec, timeout: Some(timeout), log: log.clone() });
    let (c_net, v_net, h_net) = (env.node("C"), env.node("V"), env.node("H"));
    let (v_acc, v_addr) = env.serve(&v_net).map_err(|e| format!("V: {e}"))?;
    let (h_acc, h_addr) = env.serve(&h_net).map_err(|e| format!("H: {e}"))?;
    let leak = attack.filter(|(_, leak)| *leak).map(|_| Arc::new(Mutex::new(None)));

    let attacker = match (attack, env.sim()) {
        (Some((script, _)), Some(sim)) => {
            let target = Target {
                receiver_node: "H".into(),
                service_port: SERVICE_PORT,
                secure,
                auth: client_auth(secure, &roles.sec, "mallory"),
                forged: vec![TypedValue::text("CreditCard", "mallory's card")],
                expect: 1,
                leak: leak.clone(),
                timeout: Some(timeout),
                channel: "C-V".into(),
                new_channel: "E-H".into(),
            };
            Some(attacker::install(sim, script, target, &log))
        }
        (Some(_), None) => return Err("attacks require the simulated network".into()),
        (None, _) => None,
    };

    let r = roles.clone();
    let hh = env.spawn("H", move || r.handler(h_net, h_acc));
    let r = roles.clone();
    let vh = env.spawn("V", move || r.vendor(v_net, v_acc, h_addr, leak));
    let r = roles.clone();
    let ch = env.spawn("C", move || r.customer(c_net, v_addr, script));
    env.start();

    let customer = join(ch);
    let vendor = join(vh);
    // Over TCP nothing wakes an unused handler before its accept timeout.
    let handler =
        if vendor == Ok(None) && transport == TransportKind::Tcp { Ok(HandlerSummary::idle()) } else { join(hh) };
    let attacker = attacker.map(|h| h.join().unwrap_or(AttackerResult::Failed { reason: "attacker panicked".into() }));
    Ok((PurchaseReport { transcript: log, customer, vendor, handler }, attacker))
}

/// Run the purchase with the three honest roles.
pub fn run_purchase(cfg: &PurchaseConfig) -> Result<PurchaseReport, String> {
    run(cfg.transport, cfg.secure, cfg.seed, cfg.script, cfg.timeout, cfg.security.clone(), None).map(|(r, _)| r)
}

#[derive(Debug, Clone)]
pub struct AttackConfig {
    pub secure: bool,
    pub seed: u64,
    /// Hand the attacker the delegation credential out of band.
    pub leak_cred: bool,
    pub script: AttackScript,
    pub items: u32,
    pub timeout: Duration,
    pub security: Security,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            secure: false,
            seed: 0,
            leak_cred: false,
            script: AttackScript::HIJACK,
            items: 1,
            timeout: DEFAULT_TIMEOUT,
            security: Security::demo(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "UPPERCASE")]
pub enum AttackVerdict {
    /// The attacker completed the migrated session in the customer's place.
    Infiltrated,
    Blocked {
        reason: String,
    },
}

impl fmt::Display for AttackVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackVerdict::Infiltrated => f.write_str("INFILTRATED"),
            AttackVerdict::Blocked { reason } => write!(f, "BLOCKED ({reason})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttackReport {
    pub verdict: AttackVerdict,
    pub attacker: AttackerResult,
    pub run: PurchaseReport,
}

/// Run the purchase to checkout with an attacker on the customer-vendor link.
pub fn run_attack(cfg: &AttackConfig) -> Result<AttackReport, String> {
    let mut script = cfg.script;
    if cfg.leak_cred {
        script.cred = CredChoice::Leaked;
    }
    let purchase = Script { items: cfg.items, checkout: true };
    let (run, attacker) = run(
        TransportKind::Sim,
        cfg.secure,
        cfg.seed,
        purchase,
        cfg.timeout,
        cfg.security.clone(),
        Some((script, cfg.leak_cred)),
    )?;
    let attacker = attacker.expect("attacker installed");
    let infiltrated = matches!(&run.handler, Ok(HandlerSummary { peer: Some(p), card: Some(_), .. }) if p == "E")
        && matches!(attacker, AttackerResult::Infiltrated { .. });
    let verdict = if infiltrated {
        AttackVerdict::Infiltrated
    } else {
        let reason = match (&run.handler, &attacker) {
            (Ok(h), _) if h.status == DelegationStatus::CredentialRejected.to_string() => h.status.clone(),
            (_, AttackerResult::CredentialRejected) => "credential rejected".to_string(),
            (_, a) => a.to_string(),
        };
        AttackVerdict::Blocked { reason }
    };
    Ok(AttackReport { verdict, attacker, run })
}
