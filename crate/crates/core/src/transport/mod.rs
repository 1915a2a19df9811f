//! The abstract transport: reliable, order-preserving, message-oriented duplex
//! channels carrying [`Frame`]s.
//!
//! Two realizations are provided. [`sim`] is an in-memory network with a
//! seeded scheduler and attacker taps; [`tcp`] runs over real sockets.

mod frame;
pub mod sim;
pub mod tcp;

use std::fmt;
use std::io;
use std::net::{IpAddr, SocketAddr};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

pub use frame::{read_frame, write_frame, Frame, Tag, MAX_PAYLOAD};
pub use sim::{AttackerHandle, Capture, FrameMeta, SimEvent, SimNetwork, SimStats, TapAction, TapDecision, TapPolicy};
pub use tcp::TcpNet;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("address {0} already in use")]
    AddressInUse(Address),
    #[error("connection to {0} refused")]
    ConnectionRefused(Address),
    #[error("operation timed out")]
    Timeout,
    #[error("channel closed")]
    ChannelClosed,
    #[error("frame payload of {0} bytes exceeds the 24-bit length field")]
    FrameTooLarge(usize),
    #[error("malformed frame: {0}")]
    BadFrame(String),
    #[error("frame failed integrity verification")]
    IntegrityFailure,
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("invalid address `{0}`")]
    BadAddress(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A transport address: `sim://<node>:<port>` or `host:port`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Address {
    Sim { node: String, port: u16 },
    Tcp(SocketAddr),
}

impl Address {
    pub fn sim(node: impl Into<String>, port: u16) -> Address {
        Address::Sim { node: node.into(), port }
    }

    pub fn port(&self) -> u16 {
        match self {
            Address::Sim { port, .. } => *port,
            Address::Tcp(a) => a.port(),
        }
    }

    /// The address without its port, as carried in a delegation signal.
    pub fn host(&self) -> String {
        match self {
            Address::Sim { node, .. } => format!("sim://{node}"),
            Address::Tcp(a) => a.ip().to_string(),
        }
    }

    /// The node or IP, without scheme.
    pub fn node(&self) -> String {
        match self {
            Address::Sim { node, .. } => node.clone(),
            Address::Tcp(a) => a.ip().to_string(),
        }
    }

    pub fn from_host_port(host: &str, port: u16) -> Result<Address, TransportError> {
        if let Some(node) = host.strip_prefix("sim://") {
            if node.is_empty() || node.contains(':') {
                return Err(TransportError::BadAddress(host.to_string()));
            }
            return Ok(Address::sim(node, port));
        }
        let ip = IpAddr::from_str(host).map_err(|_| TransportError::BadAddress(host.to_string()))?;
        Ok(Address::Tcp(SocketAddr::new(ip, port)))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Address::Sim { node, port } => write!(f, "sim://{node}:{port}"),
            Address::Tcp(a) => write!(f, "{a}"),
        }
    }
}

impl FromStr for Address {
    type Err = TransportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("sim://") {
            let (node, port) = rest.rsplit_once(':').ok_or_else(|| TransportError::BadAddress(s.into()))?;
            let port = port.parse().map_err(|_| TransportError::BadAddress(s.into()))?;
            return Address::from_host_port(&format!("sim://{node}"), port);
        }
        SocketAddr::from_str(s).map(Address::Tcp).map_err(|_| TransportError::BadAddress(s.into()))
    }
}

/// Anything that moves frames: a plain [`Endpoint`] or a secured channel.
pub trait FrameChannel: Send {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError>;
    fn recv_frame(&mut self) -> Result<Frame, TransportError>;
    fn close(&mut self);
    fn is_open(&self) -> bool;
    fn local_addr(&self) -> &Address;
    fn peer_addr(&self) -> &Address;
    fn set_recv_timeout(&mut self, timeout: Option<Duration>);
    fn is_secure(&self) -> bool {
        false
    }
}

impl<C: FrameChannel + ?Sized> FrameChannel for Box<C> {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        (**self).send_frame(frame)
    }
    fn recv_frame(&mut self) -> Result<Frame, TransportError> {
        (**self).recv_frame()
    }
    fn close(&mut self) {
        (**self).close()
    }
    fn is_open(&self) -> bool {
        (**self).is_open()
    }
    fn local_addr(&self) -> &Address {
        (**self).local_addr()
    }
    fn peer_addr(&self) -> &Address {
        (**self).peer_addr()
    }
    fn set_recv_timeout(&mut self, timeout: Option<Duration>) {
        (**self).set_recv_timeout(timeout)
    }
    fn is_secure(&self) -> bool {
        (**self).is_secure()
    }
}

#[derive(Clone)]
enum Link {
    Sim(sim::SimLink),
    Tcp(Arc<std::net::TcpStream>),
}

impl Link {
    fn send(&self, f: &Frame) -> Result<(), TransportError> {
        match self {
            Link::Sim(l) => l.send(f),
            Link::Tcp(s) => write_frame(&**s, f),
        }
    }

    fn recv(&self, timeout: Option<Duration>) -> Result<Frame, TransportError> {
        match self {
            Link::Sim(l) => l.recv(timeout),
            Link::Tcp(s) => {
                s.set_read_timeout(timeout)?;
                read_frame(&**s).map_err(|e| match e {
                    TransportError::Io(io)
                        if matches!(io.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) =>
                    {
                        TransportError::Timeout
                    }
                    TransportError::Io(io)
                        if matches!(io.kind(), io::ErrorKind::ConnectionReset | io::ErrorKind::ConnectionAborted) =>
                    {
                        TransportError::ChannelClosed
                    }
                    other => other,
                })
            }
        }
    }

    fn close(&self) {
        match self {
            Link::Sim(l) => l.close(),
            Link::Tcp(s) => {
                let _ = s.shutdown(std::net::Shutdown::Both);
            }
        }
    }
}

/// Closes the underlying link once, when asked or when the last half drops.
struct CloseGuard {
    link: Link,
    closed: AtomicBool,
}

impl CloseGuard {
    fn close(&self) {
        if !self.closed.swap(true, Ordering::SeqCst) {
            self.link.close();
        }
    }

    fn is_closed(&self) -> bool {
        self.closed.load(Ordering::SeqCst)
    }
}

impl Drop for CloseGuard {
    fn drop(&mut self) {
        self.close();
    }
}

/// One end of a connected channel.
pub struct Endpoint {
    tx: SendHalf,
    rx: RecvHalf,
}

pub struct SendHalf {
    guard: Arc<CloseGuard>,
    local: Address,
    peer: Address,
}

pub struct RecvHalf {
    guard: Arc<CloseGuard>,
    timeout: Option<Duration>,
}

impl Endpoint {
    fn new(link: Link, local: Address, peer: Address) -> Endpoint {
        let guard = Arc::new(CloseGuard { link, closed: AtomicBool::new(false) });
        Endpoint { tx: SendHalf { guard: guard.clone(), local, peer }, rx: RecvHalf { guard, timeout: None } }
    }

    pub fn send_frame(&self, f: &Frame) -> Result<(), TransportError> {
        self.tx.send_frame(f)
    }

    pub fn recv_frame(&self) -> Result<Frame, TransportError> {
        self.rx.recv_frame()
    }

    pub fn close(&self) {
        self.tx.guard.close();
    }

    pub fn is_open(&self) -> bool {
        !self.tx.guard.is_closed()
    }

    pub fn local_addr(&self) -> &Address {
        &self.tx.local
    }

    pub fn peer_addr(&self) -> &Address {
        &self.tx.peer
    }

    pub fn set_recv_timeout(&mut self, timeout: Option<Duration>) {
        self.rx.timeout = timeout;
    }

    /// Split into halves that may be used from different threads. The
    /// connection closes when either half calls `close` or both are dropped.
    pub fn split(self) -> (SendHalf, RecvHalf) {
        (self.tx, self.rx)
    }
}

impl SendHalf {
    pub fn send_frame(&self, f: &Frame) -> Result<(), TransportError> {
        f.check_size()?;
        if self.guard.is_closed() {
            return Err(TransportError::ChannelClosed);
        }
        self.guard.link.send(f)
    }

    pub fn close(&self) {
        self.guard.close();
    }
}

impl RecvHalf {
    pub fn recv_frame(&self) -> Result<Frame, TransportError> {
        if self.guard.is_closed() {
            return Err(TransportError::ChannelClosed);
        }
        self.guard.link.recv(self.timeout)
    }

    pub fn set_timeout(&mut self, timeout: Option<Duration>) {
        self.timeout = timeout;
    }

    pub fn close(&self) {
        self.guard.close();
    }
}

impl FrameChannel for Endpoint {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        Endpoint::send_frame(self, frame)
    }
    fn recv_frame(&mut self) -> Result<Frame, TransportError> {
        Endpoint::recv_frame(self)
    }
    fn close(&mut self) {
        Endpoint::close(self)
    }
    fn is_open(&self) -> bool {
        Endpoint::is_open(self)
    }
    fn local_addr(&self) -> &Address {
        Endpoint::local_addr(self)
    }
    fn peer_addr(&self) -> &Address {
        Endpoint::peer_addr(self)
    }
    fn set_recv_timeout(&mut self, timeout: Option<Duration>) {
        Endpoint::set_recv_timeout(self, timeout)
    }
}

impl fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Endpoint")
            .field("local", &self.tx.local)
            .field("peer", &self.tx.peer)
            .field("open", &self.is_open())
            .finish()
    }
}

enum AcceptorKind {
    Sim(sim::SimAcceptor),
    Tcp(std::net::TcpListener),
}

/// A bound listening address.
pub struct Acceptor {
    kind: AcceptorKind,
    addr: Address,
    open: bool,
}

impl Acceptor {
    pub fn local_addr(&self) -> &Address {
        &self.addr
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    /// Wait for the next inbound connection. `None` waits indefinitely (on the
    /// simulated network under its scheduler, until nothing else can run).
    pub fn accept(&self, timeout: Option<Duration>) -> Result<Endpoint, TransportError> {
        if !self.open {
            return Err(TransportError::ChannelClosed);
        }
        match &self.kind {
            AcceptorKind::Sim(a) => a.accept(timeout),
            AcceptorKind::Tcp(l) => tcp::accept(l, &self.addr, timeout),
        }
    }

    pub fn close(&mut self) {
        if self.open {
            self.open = false;
            if let AcceptorKind::Sim(a) = &self.kind {
                a.close();
            }
        }
    }

    pub fn is_open(&self) -> bool {
        self.open
    }
}

impl Drop for Acceptor {
    fn drop(&mut self) {
        self.close();
    }
}

/// A node's handle on a network: where it listens from and connects from.
#[derive(Clone, Debug)]
pub enum Network {
    Sim(sim::SimNode),
    Tcp(TcpNet),
}

impl Network {
    pub fn listen(&self, addr: &Address) -> Result<Acceptor, TransportError> {
        match (self, addr) {
            (Network::Sim(n), Address::Sim { node, port }) => n.listen(node, *port),
            (Network::Tcp(t), Address::Tcp(a)) => t.listen(*a),
            _ => Err(TransportError::BadAddress(addr.to_string())),
        }
    }

    /// Listen on a fresh port of this node's own host.
    pub fn listen_free(&self) -> Result<Acceptor, TransportError> {
        self.listen(&self.address(0))
    }

    pub fn connect(&self, addr: &Address) -> Result<Endpoint, TransportError> {
        match (self, addr) {
            (Network::Sim(n), Address::Sim { .. }) => n.connect(addr),
            (Network::Tcp(t), Address::Tcp(a)) => t.connect(*a),
            _ => Err(TransportError::BadAddress(addr.to_string())),
        }
    }

    /// This node's address at `port`.
    pub fn address(&self, port: u16) -> Address {
        match self {
            Network::Sim(n) => Address::sim(n.name(), port),
            Network::Tcp(t) => Address::Tcp(SocketAddr::new(t.host(), port)),
        }
    }

    pub fn attach_attacker(&self, policy: Box<dyn TapPolicy>) -> Result<AttackerHandle, TransportError> {
        match self {
            Network::Sim(n) => Ok(n.network().attach_attacker(policy)),
            Network::Tcp(_) => Err(TransportError::Unsupported("attacker taps require the simulated network")),
        }
    }

    pub fn is_sim(&self) -> bool {
        matches!(self, Network::Sim(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_parsing() {
        let a: Address = "sim://H:42".parse().unwrap();
        assert_eq!(a, Address::sim("H", 42));
        assert_eq!(a.host(), "sim://H");
        assert_eq!(Address::from_host_port(&a.host(), 42).unwrap(), a);
        let t: Address = "127.0.0.1:8080".parse().unwrap();
        assert_eq!(t.host(), "127.0.0.1");
        assert_eq!(t.to_string(), "127.0.0.1:8080");
        assert!("sim://:1".parse::<Address>().is_err());
        assert!("nonsense".parse::<Address>().is_err());
    }
}
