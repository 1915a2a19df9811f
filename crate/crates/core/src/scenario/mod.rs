//! Ready-made multi-party runs: the purchase demo, its attack variants, and
//! the small A/B/C delegation used to check message consistency.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use serde::Serialize;

use crate::srp::{register_with_salt, HashAlg, Registry, SrpGroup};
use crate::transport::{Acceptor, Address, Network, SimNetwork, TcpNet, TransportError};

pub mod attacker;
pub mod kmsg;
pub mod order;
pub mod purchase;

pub use attacker::{AttackScript, CredChoice, DsHandling};
pub use kmsg::{run_k, KConfig, KReport};
pub use order::{step_order, StepOrder};
pub use purchase::{
    run_attack, run_purchase, AttackConfig, AttackReport, AttackVerdict, PurchaseConfig, PurchaseReport, Script,
};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

/// Well-known port every service listens on in the simulated network.
pub const SERVICE_PORT: u16 = 1;

/// Demo accounts: username and password.
pub const DEMO_USERS: [(&str, &str); 3] =
    [("customer", "customer-secret"), ("vendor", "vendor-secret"), ("mallory", "mallory-secret")];

pub fn demo_password(user: &str) -> Option<&'static str> {
    DEMO_USERS.iter().find(|(u, _)| *u == user).map(|(_, p)| *p)
}

/// Registry of the demo accounts with salts derived from the usernames, so it
/// is identical on every run.
pub fn demo_registry(group: &SrpGroup) -> Registry {
    let mut reg = Registry::new();
    for (user, pass) in DEMO_USERS {
        let salt = HashAlg::Sha256.digest(&[b"demo salt", user.as_bytes()]);
        reg.insert(register_with_salt(group, user, pass, &salt[..16]).expect("demo accounts are non-empty"));
    }
    reg
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    Sim,
    Tcp,
}

impl FromStr for TransportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sim" => Ok(TransportKind::Sim),
            "tcp" => Ok(TransportKind::Tcp),
            _ => Err(format!("unknown transport `{s}` (expected sim or tcp)")),
        }
    }
}

impl fmt::Display for TransportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransportKind::Sim => "sim",
            TransportKind::Tcp => "tcp",
        })
    }
}

/// How a delegation run ended, as seen from outside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeClass {
    /// All three honest parties finished.
    Completed,
    /// The session-receiver finished the migrated session with the attacker.
    Infiltrated,
    /// The session-receiver turned away a credential.
    Rejected,
    /// Anything else: some party gave up or never finished.
    Stalled,
}

impl fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeClass::Completed => "completed",
            OutcomeClass::Infiltrated => "infiltrated",
            OutcomeClass::Rejected => "rejected",
            OutcomeClass::Stalled => "stalled",
        })
    }
}

/// Security settings shared by every role of a run.
#[derive(Debug, Clone)]
pub struct Security {
    pub group: SrpGroup,
    pub registry: Arc<Registry>,
}

impl Security {
    pub fn demo() -> Security {
        let group = SrpGroup::rfc5054_1024();
        Security { registry: Arc::new(demo_registry(&group)), group }
    }
}

/// Where a run's roles live: one simulated network, or the local host.
pub(crate) enum Env {
    Sim(SimNetwork),
    Tcp(TcpNet),
}

impl Env {
    pub(crate) fn new(kind: TransportKind, seed: u64) -> Env {
        match kind {
            TransportKind::Sim => Env::Sim(SimNetwork::new(seed)),
            TransportKind::Tcp => Env::Tcp(TcpNet::default()),
        }
    }

    pub(crate) fn node(&self, name: &str) -> Network {
        match self {
            Env::Sim(s) => s.node(name),
            Env::Tcp(t) => Network::Tcp(t.clone()),
        }
    }

    /// Open a node's service acceptor: the well-known port in simulation, an
    /// OS-chosen one over TCP.
    pub(crate) fn serve(&self, node: &Network) -> Result<(Acceptor, Address), TransportError> {
        let port = if node.is_sim() { SERVICE_PORT } else { 0 };
        let acc = node.listen(&node.address(port))?;
        let addr = acc.local_addr().clone();
        Ok((acc, addr))
    }

    pub(crate) fn spawn<T, F>(&self, name: &str, f: F) -> JoinHandle<T>
    where
        T: Send + 'static,
        F: FnOnce() -> T + Send + 'static,
    {
        match self {
            Env::Sim(s) => s.spawn(name, f),
            Env::Tcp(_) => std::thread::Builder::new().name(name.into()).spawn(f).expect("spawn role thread"),
        }
    }

    pub(crate) fn start(&self) {
        if let Env::Sim(s) = self {
            s.start();
        }
    }

    pub(crate) fn sim(&self) -> Option<&SimNetwork> {
        match self {
            Env::Sim(s) => Some(s),
            Env::Tcp(_) => None,
        }
    }
}

pub(crate) fn join<T>(h: JoinHandle<Result<T, String>>) -> Result<T, String> {
    h.join().unwrap_or_else(|_| Err("role panicked".into()))
}

/// Replace addresses and port numbers in a transcript action with
/// placeholders, so runs over different transports compare equal.
pub fn erase_addresses(action: &str) -> String {
    let mut out = Vec::new();
    let mut after_port = false;
    for tok in action.split(' ') {
        let core = tok.trim_end_matches([';', ',', '>']);
        let suffix = &tok[core.len()..];
        let is_addr = core.starts_with("sim://") || core.parse::<std::net::SocketAddr>().is_ok();
        let t = if is_addr {
            format!("<addr>{suffix}")
        } else if after_port && !core.is_empty() && core.chars().all(|c| c.is_ascii_digit()) {
            format!("<port>{suffix}")
        } else {
            tok.to_string()
        };
        after_port = core.eq_ignore_ascii_case("port");
        out.push(t);
    }
    out.join(" ")
}
