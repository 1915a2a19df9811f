use std::io;
use std::net::{IpAddr, Ipv4Addr, SocketAddr, TcpListener, TcpStream};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::{Acceptor, AcceptorKind, Address, Endpoint, Link, TransportError};

const POLL_INTERVAL: Duration = Duration::from_millis(5);

/// Real sockets on one host.
#[derive(Debug, Clone)]
pub struct TcpNet {
    host: IpAddr,
    connect_timeout: Duration,
}

impl Default for TcpNet {
    fn default() -> Self {
        TcpNet::new(IpAddr::V4(Ipv4Addr::LOCALHOST))
    }
}

impl TcpNet {
    pub fn new(host: IpAddr) -> TcpNet {
        TcpNet { host, connect_timeout: Duration::from_secs(5) }
    }

    pub fn with_connect_timeout(mut self, t: Duration) -> TcpNet {
        self.connect_timeout = t;
        self
    }

    pub fn host(&self) -> IpAddr {
        self.host
    }

    pub(super) fn listen(&self, addr: SocketAddr) -> Result<Acceptor, TransportError> {
        let l = TcpListener::bind(addr).map_err(|e| match e.kind() {
            io::ErrorKind::AddrInUse => TransportError::AddressInUse(Address::Tcp(addr)),
            _ => e.into(),
        })?;
        let bound = l.local_addr()?;
        Ok(Acceptor { kind: AcceptorKind::Tcp(l), addr: Address::Tcp(bound), open: true })
    }

    pub(super) fn connect(&self, addr: SocketAddr) -> Result<Endpoint, TransportError> {
        let s = TcpStream::connect_timeout(&addr, self.connect_timeout).map_err(|e| match e.kind() {
            io::ErrorKind::ConnectionRefused => TransportError::ConnectionRefused(Address::Tcp(addr)),
            io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock => TransportError::Timeout,
            _ => e.into(),
        })?;
        endpoint(s)
    }
}

fn endpoint(s: TcpStream) -> Result<Endpoint, TransportError> {
    s.set_nodelay(true)?;
    let local = Address::Tcp(s.local_addr()?);
    let peer = Address::Tcp(s.peer_addr()?);
    Ok(Endpoint::new(Link::Tcp(Arc::new(s)), local, peer))
}

pub(super) fn accept(l: &TcpListener, _addr: &Address, timeout: Option<Duration>) -> Result<Endpoint, TransportError> {
    let Some(t) = timeout else {
        l.set_nonblocking(false)?;
        let (s, _) = l.accept()?;
        return endpoint(s);
    };
    l.set_nonblocking(true)?;
    let deadline = Instant::now() + t;
    loop {
        match l.accept() {
            Ok((s, _)) => {
                s.set_nonblocking(false)?;
                return endpoint(s);
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(TransportError::Timeout);
                }
                std::thread::sleep(POLL_INTERVAL);
            }
            Err(e) => return Err(e.into()),
        }
    }
}
