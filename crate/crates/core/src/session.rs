//! Typed session endpoints with a runtime monitor.
//!
//! Every operation is checked against the local remaining type before any
//! frame is sent, and every received frame is checked before its value is
//! handed to the caller. A violation aborts the session.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::delegation::Reconnector;
use crate::srp::{client_handshake, server_handshake, Registry, SrpError, SrpGroup};
use crate::transcript::Tracer;
use crate::transport::{Acceptor, Address, Endpoint, Frame, FrameChannel, Network, Tag, TransportError};
use crate::types::{advance, is_dual, parse_type, CommEvent, MessageType, Polarity, SessionType, Side};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("peer type `{peer}` is not dual to local type `{local}`")]
    NonDualPeer { local: String, peer: String },
    #[error("type mismatch: expected {expected}, got {got}")]
    TypeMismatch { expected: String, got: String },
    #[error("label `{0}` is not offered here")]
    UnknownLabel(String),
    #[error("session closed before reaching end")]
    PrematureClose,
    #[error("peer closed the session")]
    PeerClosed,
    #[error("session is {0}")]
    NotActive(SessionState),
    #[error("peer has delegated this session; the delegation signal must be handled first")]
    DelegationPending,
    #[error("delegation refused: {0}")]
    DelegationRefused(String),
    #[error("inconsistent session types: {0}")]
    InconsistentTypes(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Auth(#[from] SrpError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Initiator,
    Acceptor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Active,
    Delegating,
    Closed,
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionState::Active => "active",
            SessionState::Delegating => "delegating",
            SessionState::Closed => "closed",
        })
    }
}

/// A message value tagged with its base type name. The runtime never looks
/// inside `bytes`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypedValue {
    pub type_name: String,
    pub bytes: Vec<u8>,
}

impl TypedValue {
    pub fn new(type_name: impl Into<String>, bytes: impl Into<Vec<u8>>) -> TypedValue {
        TypedValue { type_name: type_name.into(), bytes: bytes.into() }
    }

    pub fn text(type_name: impl Into<String>, text: &str) -> TypedValue {
        TypedValue::new(type_name, text.as_bytes())
    }

    pub fn as_text(&self) -> Option<&str> {
        std::str::from_utf8(&self.bytes).ok()
    }

    pub fn encode(&self) -> Result<Vec<u8>, SessionError> {
        let n = self.type_name.len();
        if n > u8::MAX as usize {
            return Err(SessionError::Precondition(format!("type name `{}` longer than 255 bytes", self.type_name)));
        }
        let mut out = Vec::with_capacity(1 + n + self.bytes.len());
        out.push(n as u8);
        out.extend_from_slice(self.type_name.as_bytes());
        out.extend_from_slice(&self.bytes);
        Ok(out)
    }

    pub fn decode(b: &[u8]) -> Option<TypedValue> {
        let (&n, rest) = b.split_first()?;
        let n = n as usize;
        if rest.len() < n {
            return None;
        }
        let name = std::str::from_utf8(&rest[..n]).ok()?;
        Some(TypedValue::new(name, &rest[n..]))
    }
}

impl fmt::Display for TypedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_text() {
            Some(t) => write!(f, "{}({t})", self.type_name),
            None => write!(f, "{}(0x{})", self.type_name, hex::encode(&self.bytes)),
        }
    }
}

/// How an initiator secures its connection.
#[derive(Clone)]
pub enum ClientAuth {
    None,
    Srp { group: SrpGroup, username: String, password: String },
}

impl ClientAuth {
    pub fn srp(group: &SrpGroup, username: &str, password: &str) -> ClientAuth {
        ClientAuth::Srp { group: group.clone(), username: username.into(), password: password.into() }
    }

    pub fn secure(&self, e: Endpoint) -> Result<Box<dyn FrameChannel>, SrpError> {
        Ok(match self {
            ClientAuth::None => Box::new(e),
            ClientAuth::Srp { group, username, password } => Box::new(client_handshake(e, group, username, password)?),
        })
    }

    pub fn is_secure(&self) -> bool {
        matches!(self, ClientAuth::Srp { .. })
    }
}

impl fmt::Debug for ClientAuth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClientAuth::None => f.write_str("None"),
            ClientAuth::Srp { group, username, .. } => write!(f, "Srp({}, {username})", group.name),
        }
    }
}

/// How an acceptor authenticates incoming connections.
#[derive(Debug, Clone)]
pub enum ServerAuth {
    None,
    Srp { group: SrpGroup, registry: Arc<Registry> },
}

impl ServerAuth {
    pub fn srp(group: &SrpGroup, registry: Arc<Registry>) -> ServerAuth {
        ServerAuth::Srp { group: group.clone(), registry }
    }

    pub fn secure(&self, e: Endpoint) -> Result<Box<dyn FrameChannel>, SrpError> {
        Ok(match self {
            ServerAuth::None => Box::new(e),
            ServerAuth::Srp { group, registry } => Box::new(server_handshake(e, group, registry)?),
        })
    }

    pub fn is_secure(&self) -> bool {
        matches!(self, ServerAuth::Srp { .. })
    }
}

pub(crate) fn progress_frame(tag: Tag, progress: u32, body: &[u8]) -> Frame {
    let mut p = progress.to_be_bytes().to_vec();
    p.extend_from_slice(body);
    Frame::new(tag, p)
}

pub(crate) fn split_progress(f: &Frame) -> Option<(u32, &[u8])> {
    if f.payload.len() < 4 {
        return None;
    }
    let (p, rest) = f.payload.split_at(4);
    Some((u32::from_be_bytes(p.try_into().unwrap()), rest))
}

/// A DATA frame carrying `v`, as a session peer that has consumed
/// `progress` frames would send it.
pub fn data_frame(progress: u32, v: &TypedValue) -> Result<Frame, SessionError> {
    Ok(progress_frame(Tag::Data, progress, &v.encode()?))
}

/// The value carried by a DATA frame.
pub fn frame_value(f: &Frame) -> Option<TypedValue> {
    (f.tag == Tag::Data).then(|| split_progress(f).and_then(|(_, b)| TypedValue::decode(b))).flatten()
}

fn label_body(label: &str) -> Vec<u8> {
    let mut b = vec![label.len() as u8];
    b.extend_from_slice(label.as_bytes());
    b
}

fn decode_label(b: &[u8]) -> Option<String> {
    let (&n, rest) = b.split_first()?;
    if rest.len() != n as usize {
        return None;
    }
    String::from_utf8(rest.to_vec()).ok()
}

/// Connect to `addr` and open a session of type `t`, which must be rooted at
/// `cbegin`.
pub fn request_session(
    net: &Network,
    addr: &Address,
    t: &SessionType,
    auth: &ClientAuth,
) -> Result<Session, SessionError> {
    if t.side() != Some(Side::Client) {
        return Err(SessionError::Precondition(format!("`{t}` is not a client session type")));
    }
    let e = net.connect(addr)?;
    let chan = auth.secure(e)?;
    Session::initiate(chan, t, Role::Initiator)
}

/// Accept the next connection on `acceptor` as a session of type `t`, which
/// must be rooted at `sbegin`.
pub fn accept_session(
    acceptor: &Acceptor,
    t: &SessionType,
    auth: &ServerAuth,
    timeout: Option<Duration>,
) -> Result<Session, SessionError> {
    if t.side() != Some(Side::Server) {
        return Err(SessionError::Precondition(format!("`{t}` is not a server session type")));
    }
    let e = acceptor.accept(timeout)?;
    let chan = auth.secure(e)?;
    Session::initiate(chan, t, Role::Acceptor)
}

pub struct Session {
    pub(crate) chan: Box<dyn FrameChannel>,
    pub(crate) remaining: SessionType,
    role: Role,
    pub(crate) state: SessionState,
    /// Session frames sent but not yet known to be consumed, with their
    /// sequence numbers on the current connection.
    pub(crate) sent_unacked: VecDeque<(u32, Frame)>,
    pub(crate) next_seq: u32,
    /// Session frames consumed from the peer on the current connection.
    pub(crate) consumed: u32,
    /// Frames to consume before reading the channel (resent lost messages).
    pub(crate) inbound: VecDeque<Frame>,
    pub(crate) pending_ds: Option<Frame>,
    pub(crate) reconnector: Option<Reconnector>,
    pub(crate) tracer: Option<Tracer>,
    pub(crate) timeout: Option<Duration>,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("remaining", &self.remaining.to_string())
            .field("role", &self.role)
            .field("state", &self.state)
            .field("peer", self.chan.peer_addr())
            .field("unacked", &self.sent_unacked.len())
            .finish()
    }
}

impl Session {
    pub(crate) fn with_channel(chan: Box<dyn FrameChannel>, remaining: SessionType, role: Role) -> Session {
        Session {
            chan,
            remaining,
            role,
            state: SessionState::Active,
            sent_unacked: VecDeque::new(),
            next_seq: 0,
            consumed: 0,
            inbound: VecDeque::new(),
            pending_ds: None,
            reconnector: None,
            tracer: None,
            timeout: None,
        }
    }

    /// Exchange full types over an established channel and check duality.
    pub fn initiate(mut chan: Box<dyn FrameChannel>, t: &SessionType, role: Role) -> Result<Session, SessionError> {
        chan.send_frame(&Frame::new(Tag::Data, t.to_string()))?;
        let reply = chan.recv_frame()?;
        let peer_text = String::from_utf8_lossy(&reply.payload).into_owned();
        let peer = (reply.tag == Tag::Data).then(|| parse_type(&peer_text).ok()).flatten();
        match peer {
            Some(p) if is_dual(t, &p) => Ok(Session::with_channel(chan, t.body().clone(), role)),
            _ => {
                chan.close();
                Err(SessionError::NonDualPeer { local: t.to_string(), peer: peer_text })
            }
        }
    }

    pub fn remaining(&self) -> &SessionType {
        &self.remaining
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn peer_addr(&self) -> &Address {
        self.chan.peer_addr()
    }

    pub fn local_addr(&self) -> &Address {
        self.chan.local_addr()
    }

    pub fn is_secure(&self) -> bool {
        self.chan.is_secure()
    }

    /// Number of sent frames the peer has not yet acknowledged consuming.
    pub fn unacked(&self) -> usize {
        self.sent_unacked.len()
    }

    pub fn set_timeout(&mut self, timeout: Option<Duration>) {
        self.timeout = timeout;
        self.chan.set_recv_timeout(timeout);
    }

    pub fn set_tracer(&mut self, tracer: Tracer) {
        self.tracer = Some(tracer);
    }

    pub fn tracer(&self) -> Option<&Tracer> {
        self.tracer.as_ref()
    }

    /// Let this session follow the peer's delegation transparently: a
    /// delegation signal met while receiving triggers reconnection.
    pub fn set_reconnector(&mut self, r: Reconnector) {
        self.reconnector = Some(r);
    }

    pub(crate) fn trace(&self, action: impl Into<String>) {
        if let Some(t) = &self.tracer {
            t.event(action);
        }
    }

    pub(crate) fn abort(&mut self, expected: String, got: String) -> SessionError {
        self.chan.close();
        self.state = SessionState::Closed;
        self.trace(format!("abort: expected {expected}, got {got}"));
        SessionError::TypeMismatch { expected, got }
    }

    fn mismatch(&mut self, got: String) -> SessionError {
        let expected = self.remaining.head_description();
        self.abort(expected, got)
    }

    fn step(&mut self, e: &CommEvent) -> Result<(), SessionError> {
        match advance(&self.remaining, e) {
            Ok(next) => {
                self.remaining = next;
                Ok(())
            }
            Err(_) => Err(self.mismatch(e.to_string())),
        }
    }

    pub(crate) fn ensure_active(&self) -> Result<(), SessionError> {
        if self.state != SessionState::Active {
            return Err(SessionError::NotActive(self.state));
        }
        if self.pending_ds.is_some() {
            return Err(SessionError::DelegationPending);
        }
        Ok(())
    }

    fn transport_failure(&mut self, e: TransportError) -> SessionError {
        if !matches!(e, TransportError::Timeout) {
            self.chan.close();
            self.state = SessionState::Closed;
        }
        match e {
            TransportError::ChannelClosed => SessionError::PeerClosed,
            e => e.into(),
        }
    }

    fn send_session_frame(&mut self, tag: Tag, body: &[u8]) -> Result<(), SessionError> {
        let f = progress_frame(tag, self.consumed, body);
        if let Err(e) = self.chan.send_frame(&f) {
            return Err(self.transport_failure(e));
        }
        self.sent_unacked.push_back((self.next_seq, f));
        self.next_seq += 1;
        Ok(())
    }

    fn acknowledge(&mut self, progress: u32) {
        while self.sent_unacked.front().is_some_and(|(seq, _)| *seq < progress) {
            self.sent_unacked.pop_front();
        }
    }

    /// Next session frame from the peer, handling control frames on the way.
    fn next_frame(&mut self) -> Result<Frame, SessionError> {
        loop {
            if let Some(f) = self.inbound.pop_front() {
                return Ok(f);
            }
            let f = match self.chan.recv_frame() {
                Ok(f) => f,
                Err(e) => return Err(self.transport_failure(e)),
            };
            match f.tag {
                Tag::Data | Tag::Branch | Tag::Iter => return Ok(f),
                Tag::Close => {
                    self.chan.close();
                    self.state = SessionState::Closed;
                    self.trace("peer closed");
                    return Err(SessionError::PeerClosed);
                }
                Tag::Ds => match self.reconnector.take() {
                    Some(r) => {
                        let res = crate::delegation::follow_delegation(self, &r, f);
                        self.reconnector = Some(r);
                        res?;
                    }
                    None => {
                        self.pending_ds = Some(f);
                        return Err(SessionError::DelegationPending);
                    }
                },
                other => return Err(self.mismatch(format!("{other} frame"))),
            }
        }
    }

    /// Receive a session frame with the given tag, returning its body after
    /// the progress counter.
    fn recv_tagged(&mut self, tag: Tag) -> Result<Vec<u8>, SessionError> {
        let f = self.next_frame()?;
        let Some((progress, body)) = split_progress(&f).filter(|_| f.tag == tag) else {
            return Err(self.mismatch(format!("{} frame", f.tag)));
        };
        let body = body.to_vec();
        self.acknowledge(progress);
        Ok(body)
    }

    pub fn send_value(&mut self, v: &TypedValue) -> Result<(), SessionError> {
        self.ensure_active()?;
        let event = CommEvent::Sent(MessageType::base(v.type_name.clone()));
        let next = match advance(&self.remaining, &event) {
            Ok(n) => n,
            Err(_) => return Err(self.mismatch(event.to_string())),
        };
        self.send_session_frame(Tag::Data, &v.encode()?)?;
        self.remaining = next;
        self.trace(format!("send {v}"));
        Ok(())
    }

    pub fn recv_value(&mut self) -> Result<TypedValue, SessionError> {
        self.ensure_active()?;
        if !matches!(&self.remaining, SessionType::Recv(MessageType::Base(_), _)) {
            return Err(self.mismatch("a value receive".into()));
        }
        let body = self.recv_tagged(Tag::Data)?;
        let Some(v) = TypedValue::decode(&body) else {
            return Err(self.mismatch("malformed DATA frame".into()));
        };
        self.step(&CommEvent::Received(MessageType::base(v.type_name.clone())))?;
        self.consumed += 1;
        self.trace(format!("recv {v}"));
        Ok(v)
    }

    pub fn select(&mut self, label: &str) -> Result<(), SessionError> {
        self.ensure_active()?;
        match &self.remaining {
            SessionType::Select(bs) if bs.get(label).is_none() => return Err(SessionError::UnknownLabel(label.into())),
            SessionType::Select(_) if label.len() <= u8::MAX as usize => {}
            _ => return Err(self.mismatch(format!("select {label}"))),
        }
        self.send_session_frame(Tag::Branch, &label_body(label))?;
        self.step(&CommEvent::Selected(label.into()))?;
        self.trace(format!("select {label}"));
        Ok(())
    }

    pub fn offer(&mut self) -> Result<String, SessionError> {
        self.ensure_active()?;
        if !matches!(self.remaining, SessionType::Offer(_)) {
            return Err(self.mismatch("an offer".into()));
        }
        let body = self.recv_tagged(Tag::Branch)?;
        let Some(label) = decode_label(&body) else {
            return Err(self.mismatch("malformed BRANCH frame".into()));
        };
        self.step(&CommEvent::Offered(label.clone()))?;
        self.consumed += 1;
        self.trace(format!("offer {label}"));
        Ok(label)
    }

    /// As the iteration controller: run the body again (`true`) or leave.
    pub fn iter_continue(&mut self, again: bool) -> Result<(), SessionError> {
        self.ensure_active()?;
        if !matches!(self.remaining, SessionType::OutIter(..)) {
            return Err(self.mismatch(format!("iteration decision {again}")));
        }
        self.send_session_frame(Tag::Iter, &[again as u8])?;
        let e = if again { CommEvent::IterEntered(Polarity::Out) } else { CommEvent::IterExited(Polarity::Out) };
        self.step(&e)?;
        self.trace(if again { "iterate" } else { "end iteration" });
        Ok(())
    }

    /// As the iteration follower: learn whether the body runs again.
    pub fn iter_follow(&mut self) -> Result<bool, SessionError> {
        self.ensure_active()?;
        if !matches!(self.remaining, SessionType::InIter(..)) {
            return Err(self.mismatch("an iteration decision".into()));
        }
        let body = self.recv_tagged(Tag::Iter)?;
        let again = match body[..] {
            [1] => true,
            [0] => false,
            _ => return Err(self.mismatch("malformed ITER frame".into())),
        };
        let e = if again { CommEvent::IterEntered(Polarity::In) } else { CommEvent::IterExited(Polarity::In) };
        self.step(&e)?;
        self.consumed += 1;
        self.trace(if again { "follow iterate" } else { "follow end iteration" });
        Ok(again)
    }

    /// Close the session. Closing at `end` is clean; closing earlier still
    /// closes but reports [`SessionError::PrematureClose`]. Closing twice is
    /// a no-op.
    pub fn close(&mut self) -> Result<(), SessionError> {
        if self.state == SessionState::Closed {
            return Ok(());
        }
        let clean = self.state == SessionState::Active && self.remaining.is_end();
        if clean {
            let _ = self.chan.send_frame(&Frame::empty(Tag::Close));
        }
        self.chan.close();
        self.state = SessionState::Closed;
        self.trace("close");
        if clean {
            Ok(())
        } else {
            Err(SessionError::PrematureClose)
        }
    }

    pub(crate) fn force_close(&mut self) {
        self.chan.close();
        self.state = SessionState::Closed;
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.chan.close();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::SimNetwork;

    fn ty(s: &str) -> SessionType {
        parse_type(s).unwrap()
    }

    fn connect(client: &str, server: &str) -> (Result<Session, SessionError>, Result<Session, SessionError>) {
        let net = SimNetwork::new(0);
        let acc = net.node("V").listen(&Address::sim("V", 1)).unwrap();
        let (c, s) = (ty(client), ty(server));
        let cn = net.node("C");
        let h = std::thread::spawn(move || request_session(&cn, &Address::sim("V", 1), &c, &ClientAuth::None));
        let srv = accept_session(&acc, &s, &ServerAuth::None, None);
        (h.join().unwrap(), srv)
    }

    #[test]
    fn non_dual_peers_are_rejected_on_both_sides() {
        let (c, s) = connect("cbegin.!<int>", "sbegin.?(String)");
        assert!(matches!(c, Err(SessionError::NonDualPeer { .. })));
        assert!(matches!(s, Err(SessionError::NonDualPeer { .. })));
    }

    #[test]
    fn wrong_root_is_a_precondition_error() {
        let net = SimNetwork::new(0);
        let r = request_session(&net.node("C"), &Address::sim("V", 1), &ty("sbegin"), &ClientAuth::None);
        assert!(matches!(r, Err(SessionError::Precondition(_))));
    }

    #[test]
    fn values_branches_and_iteration() {
        let (c, s) = connect(
            "cbegin.![!<ProductId>.?(int)]*.!{CHECKOUT: !<CreditCard>, EXIT: }",
            "sbegin.?[?(ProductId).!<int>]*.?{CHECKOUT: ?(CreditCard), EXIT: }",
        );
        let (mut c, mut s) = (c.unwrap(), s.unwrap());
        let h = std::thread::spawn(move || {
            let mut got = Vec::new();
            while s.iter_follow().unwrap() {
                got.push(s.recv_value().unwrap());
                s.send_value(&TypedValue::text("int", "7")).unwrap();
            }
            assert_eq!(s.offer().unwrap(), "CHECKOUT");
            got.push(s.recv_value().unwrap());
            s.close().unwrap();
            got
        });
        for i in 0..2 {
            c.iter_continue(true).unwrap();
            c.send_value(&TypedValue::text("ProductId", &i.to_string())).unwrap();
            assert_eq!(c.recv_value().unwrap(), TypedValue::text("int", "7"));
        }
        c.iter_continue(false).unwrap();
        assert!(matches!(c.select("REFUND"), Err(SessionError::UnknownLabel(_))));
        c.select("CHECKOUT").unwrap();
        assert_eq!(c.remaining(), &ty("!<CreditCard>"));
        c.send_value(&TypedValue::text("CreditCard", "4111")).unwrap();
        c.close().unwrap();
        c.close().unwrap();
        let got = h.join().unwrap();
        assert_eq!(got.len(), 3);
        assert_eq!(got[2], TypedValue::text("CreditCard", "4111"));
    }

    #[test]
    fn monitor_violations_abort() {
        let (c, s) = connect("cbegin.!<ProductId>.?(int)", "sbegin.?(ProductId).!<int>");
        let (mut c, _s) = (c.unwrap(), s.unwrap());
        let err = c.send_value(&TypedValue::text("CreditCard", "x")).unwrap_err();
        assert!(matches!(err, SessionError::TypeMismatch { .. }));
        assert_eq!(c.state(), SessionState::Closed);

        let (c, _s) = connect("cbegin.!<ProductId>", "sbegin.?(ProductId)");
        let mut c = c.unwrap();
        assert!(matches!(c.recv_value(), Err(SessionError::TypeMismatch { .. })));
        assert!(matches!(c.send_value(&TypedValue::text("ProductId", "1")), Err(SessionError::NotActive(_))));
    }

    #[test]
    fn premature_close_is_reported() {
        let (c, s) = connect("cbegin.!<ProductId>", "sbegin.?(ProductId)");
        let (mut c, mut s) = (c.unwrap(), s.unwrap());
        assert!(matches!(c.close(), Err(SessionError::PrematureClose)));
        assert!(matches!(s.recv_value(), Err(SessionError::PeerClosed)));
    }

    #[test]
    fn received_progress_prunes_unacked() {
        let (c, s) = connect("cbegin.!<int>.!<int>.?(int)", "sbegin.?(int).?(int).!<int>");
        let (mut c, mut s) = (c.unwrap(), s.unwrap());
        c.send_value(&TypedValue::text("int", "1")).unwrap();
        c.send_value(&TypedValue::text("int", "2")).unwrap();
        assert_eq!(c.unacked(), 2);
        s.recv_value().unwrap();
        s.recv_value().unwrap();
        s.send_value(&TypedValue::text("int", "3")).unwrap();
        c.recv_value().unwrap();
        assert_eq!(c.unacked(), 0);
        assert_eq!(s.unacked(), 1);
    }

    #[test]
    fn typed_value_round_trip() {
        let v = TypedValue::new("Receipt", vec![0, 159, 255]);
        assert_eq!(TypedValue::decode(&v.encode().unwrap()), Some(v));
        assert!(TypedValue::decode(&[5, b'a']).is_none());
    }
}
