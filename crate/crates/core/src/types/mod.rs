//! Session types: the protocol language, duality and the monitor's stepping
//! relation.
//!
//! A [`SessionType`] is a finite tree. The root of a declared protocol is a
//! [`SessionType::Begin`] node naming the side (client or server) that the
//! protocol describes; everything below it is a remaining-session type.

pub mod gen;
mod parse;
mod render;

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_file, parse_protocol, parse_type, ParseError, Protocol};
pub use render::{render_named, render_protocol};

/// Which end of a session a root protocol describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Client,
    Server,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Client => Side::Server,
            Side::Server => Side::Client,
        }
    }
}

/// Direction of an action, from the point of view of the endpoint performing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Out,
    In,
}

impl Polarity {
    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Out => Polarity::In,
            Polarity::In => Polarity::Out,
        }
    }
}

/// Payload type of a send or receive action.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MessageType {
    /// An opaque named type, compared by name.
    Base(String),
    /// A delegated session: the payload is the remaining type of another session.
    Session(Box<SessionType>),
}

impl MessageType {
    pub fn base(name: impl Into<String>) -> Self {
        MessageType::Base(name.into())
    }

    pub fn session(t: SessionType) -> Self {
        MessageType::Session(Box::new(t))
    }
}

/// Labelled branches of a choice, kept in source order.
///
/// Labels are unique and the set is never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Branches(Vec<(String, SessionType)>);

impl Branches {
    pub fn new(branches: Vec<(String, SessionType)>) -> Result<Self, TypeError> {
        if branches.is_empty() {
            return Err(TypeError::EmptyBranches);
        }
        let mut seen = HashSet::new();
        for (label, _) in &branches {
            if !seen.insert(label.as_str()) {
                return Err(TypeError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Branches(branches))
    }

    pub fn get(&self, label: &str) -> Option<&SessionType> {
        self.0.iter().find(|(l, _)| l == label).map(|(_, t)| t)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(l, _)| l.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SessionType)> {
        self.0.iter().map(|(l, t)| (l.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn map(&self, f: impl Fn(&SessionType) -> SessionType) -> Branches {
        Branches(self.0.iter().map(|(l, t)| (l.clone(), f(t))).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SessionType {
    Begin(Side, Box<SessionType>),
    Send(MessageType, Box<SessionType>),
    Recv(MessageType, Box<SessionType>),
    Select(Branches),
    Offer(Branches),
    OutIter(Box<SessionType>, Box<SessionType>),
    InIter(Box<SessionType>, Box<SessionType>),
    End,
}

/// A communication event observed by a monitor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommEvent {
    Sent(MessageType),
    Received(MessageType),
    Selected(String),
    Offered(String),
    IterEntered(Polarity),
    IterExited(Polarity),
    Closed,
}

impl CommEvent {
    /// The event the peer observes for this one.
    pub fn mirror(&self) -> CommEvent {
        match self {
            CommEvent::Sent(m) => CommEvent::Received(m.clone()),
            CommEvent::Received(m) => CommEvent::Sent(m.clone()),
            CommEvent::Selected(l) => CommEvent::Offered(l.clone()),
            CommEvent::Offered(l) => CommEvent::Selected(l.clone()),
            CommEvent::IterEntered(p) => CommEvent::IterEntered(p.flip()),
            CommEvent::IterExited(p) => CommEvent::IterExited(p.flip()),
            CommEvent::Closed => CommEvent::Closed,
        }
    }
}

impl fmt::Display for CommEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommEvent::Sent(m) => write!(f, "sent {m}"),
            CommEvent::Received(m) => write!(f, "received {m}"),
            CommEvent::Selected(l) => write!(f, "selected {l}"),
            CommEvent::Offered(l) => write!(f, "offered {l}"),
            CommEvent::IterEntered(p) => write!(f, "iteration entered ({p:?})"),
            CommEvent::IterExited(p) => write!(f, "iteration exited ({p:?})"),
            CommEvent::Closed => f.write_str("closed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("type mismatch: expected {expected}, got {got}")]
    TypeMismatch { expected: String, got: String },
    #[error("inconsistent session types: {0}")]
    InconsistentTypes(String),
    #[error("duplicate branch label `{0}`")]
    DuplicateLabel(String),
    #[error("branch set is empty")]
    EmptyBranches,
}

impl SessionType {
    pub fn send(m: MessageType, cont: SessionType) -> Self {
        SessionType::Send(m, Box::new(cont))
    }

    pub fn recv(m: MessageType, cont: SessionType) -> Self {
        SessionType::Recv(m, Box::new(cont))
    }

    pub fn out_iter(body: SessionType, cont: SessionType) -> Self {
        SessionType::OutIter(Box::new(body), Box::new(cont))
    }

    pub fn in_iter(body: SessionType, cont: SessionType) -> Self {
        SessionType::InIter(Box::new(body), Box::new(cont))
    }

    pub fn begin(side: Side, body: SessionType) -> Self {
        SessionType::Begin(side, Box::new(body))
    }

    pub fn is_end(&self) -> bool {
        matches!(self, SessionType::End)
    }

    /// The body below a `Begin` root, or the type itself.
    pub fn body(&self) -> &SessionType {
        match self {
            SessionType::Begin(_, b) => b,
            t => t,
        }
    }

    pub fn side(&self) -> Option<Side> {
        match self {
            SessionType::Begin(s, _) => Some(*s),
            _ => None,
        }
    }

    /// Number of constructor nodes, message payload types included.
    pub fn size(&self) -> usize {
        fn msg_size(m: &MessageType) -> usize {
            match m {
                MessageType::Base(_) => 1,
                MessageType::Session(t) => 1 + t.size(),
            }
        }
        match self {
            SessionType::Begin(_, b) => 1 + b.size(),
            SessionType::Send(m, k) | SessionType::Recv(m, k) => 1 + msg_size(m) + k.size(),
            SessionType::Select(bs) | SessionType::Offer(bs) => 1 + bs.iter().map(|(_, t)| t.size()).sum::<usize>(),
            SessionType::OutIter(b, k) | SessionType::InIter(b, k) => 1 + b.size() + k.size(),
            SessionType::End => 1,
        }
    }

    /// True when no `Begin` node appears anywhere, payloads included.
    pub fn is_begin_free(&self) -> bool {
        match self {
            SessionType::Begin(..) => false,
            SessionType::Send(m, k) | SessionType::Recv(m, k) => {
                let payload_ok = match m {
                    MessageType::Base(_) => true,
                    MessageType::Session(t) => t.is_begin_free(),
                };
                payload_ok && k.is_begin_free()
            }
            SessionType::Select(bs) | SessionType::Offer(bs) => bs.iter().all(|(_, t)| t.is_begin_free()),
            SessionType::OutIter(b, k) | SessionType::InIter(b, k) => b.is_begin_free() && k.is_begin_free(),
            SessionType::End => true,
        }
    }

    /// Sequential composition: every `End` leaf is replaced by `next`.
    pub fn then(&self, next: &SessionType) -> SessionType {
        match self {
            SessionType::End => next.clone(),
            SessionType::Begin(s, b) => SessionType::Begin(*s, Box::new(b.then(next))),
            SessionType::Send(m, k) => SessionType::Send(m.clone(), Box::new(k.then(next))),
            SessionType::Recv(m, k) => SessionType::Recv(m.clone(), Box::new(k.then(next))),
            SessionType::Select(bs) => SessionType::Select(bs.map(|t| t.then(next))),
            SessionType::Offer(bs) => SessionType::Offer(bs.map(|t| t.then(next))),
            SessionType::OutIter(b, k) => SessionType::OutIter(b.clone(), Box::new(k.then(next))),
            SessionType::InIter(b, k) => SessionType::InIter(b.clone(), Box::new(k.then(next))),
        }
    }

    /// A short rendering of the head constructor, for diagnostics.
    pub fn head_description(&self) -> String {
        match self {
            SessionType::Begin(Side::Client, _) => "cbegin".into(),
            SessionType::Begin(Side::Server, _) => "sbegin".into(),
            SessionType::Send(m, _) => format!("!<{m}>"),
            SessionType::Recv(m, _) => format!("?({m})"),
            SessionType::Select(bs) => format!("!{{{}}}", bs.labels().collect::<Vec<_>>().join(", ")),
            SessionType::Offer(bs) => format!("?{{{}}}", bs.labels().collect::<Vec<_>>().join(", ")),
            SessionType::OutIter(..) => "![...]*".into(),
            SessionType::InIter(..) => "?[...]*".into(),
            SessionType::End => "end".into(),
        }
    }
}

/// The reciprocal type: inputs become outputs and vice versa.
///
/// Delegated payload types are carried unchanged; only the action that
/// carries them flips.
pub fn dual(t: &SessionType) -> SessionType {
    match t {
        SessionType::Begin(s, b) => SessionType::Begin(s.flip(), Box::new(dual(b))),
        SessionType::Send(m, k) => SessionType::Recv(m.clone(), Box::new(dual(k))),
        SessionType::Recv(m, k) => SessionType::Send(m.clone(), Box::new(dual(k))),
        SessionType::Select(bs) => SessionType::Offer(bs.map(dual)),
        SessionType::Offer(bs) => SessionType::Select(bs.map(dual)),
        SessionType::OutIter(b, k) => SessionType::InIter(Box::new(dual(b)), Box::new(dual(k))),
        SessionType::InIter(b, k) => SessionType::OutIter(Box::new(dual(b)), Box::new(dual(k))),
        SessionType::End => SessionType::End,
    }
}

pub fn is_dual(a: &SessionType, b: &SessionType) -> bool {
    *b == dual(a)
}

/// Consume one communication event from the head of `t`.
pub fn advance(t: &SessionType, e: &CommEvent) -> Result<SessionType, TypeError> {
    let mismatch = || TypeError::TypeMismatch { expected: t.head_description(), got: e.to_string() };
    match (t, e) {
        (SessionType::Send(m, k), CommEvent::Sent(got)) if m == got => Ok((**k).clone()),
        (SessionType::Recv(m, k), CommEvent::Received(got)) if m == got => Ok((**k).clone()),
        (SessionType::Select(bs), CommEvent::Selected(l)) => bs.get(l).cloned().ok_or_else(mismatch),
        (SessionType::Offer(bs), CommEvent::Offered(l)) => bs.get(l).cloned().ok_or_else(mismatch),
        (SessionType::OutIter(body, _), CommEvent::IterEntered(Polarity::Out))
        | (SessionType::InIter(body, _), CommEvent::IterEntered(Polarity::In)) => Ok(body.then(t)),
        (SessionType::OutIter(_, k), CommEvent::IterExited(Polarity::Out))
        | (SessionType::InIter(_, k), CommEvent::IterExited(Polarity::In)) => Ok((**k).clone()),
        (SessionType::End, CommEvent::Closed) => Ok(SessionType::End),
        _ => Err(mismatch()),
    }
}

/// Number of input actions the remote view still has to perform before it
/// reaches the dual of the local view.
///
/// `remote_remaining` is the remote peer's view of the session, lagging behind
/// the local one only on inputs (frames the local side sent that the remote
/// side has not consumed yet). The count is the number of frames the local
/// side must resend after reconnection.
pub fn lost_message_count(local_remaining: &SessionType, remote_remaining: &SessionType) -> Result<usize, TypeError> {
    let target = dual(local_remaining);
    let mut seen: HashSet<SessionType> = HashSet::new();
    let mut queue = VecDeque::from([(remote_remaining.clone(), 0usize)]);
    while let Some((cur, n)) = queue.pop_front() {
        if cur == target {
            return Ok(n);
        }
        if !seen.insert(cur.clone()) {
            continue;
        }
        let next: Vec<SessionType> = match &cur {
            SessionType::Recv(_, k) => vec![(**k).clone()],
            SessionType::Offer(bs) => bs.iter().map(|(_, t)| t.clone()).collect(),
            SessionType::InIter(body, k) => vec![body.then(&cur), (**k).clone()],
            _ => Vec::new(),
        };
        queue.extend(next.into_iter().map(|t| (t, n + 1)));
    }
    Err(TypeError::InconsistentTypes(format!(
        "remote view `{remote_remaining}` cannot reach `{target}` by inputs alone"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(name: &str) -> MessageType {
        MessageType::base(name)
    }

    fn customer_to_vendor() -> SessionType {
        parse_type("cbegin.?(ProductList).![!<ProductId>.?(int)]*.!{CHECKOUT: !<CreditCard>.?(Receipt), EXIT: }")
            .unwrap()
    }

    #[test]
    fn advance_consumes_head() {
        let s = SessionType::send(b("int"), SessionType::End);
        let t = SessionType::recv(b("ProductList"), s.clone());
        assert_eq!(advance(&t, &CommEvent::Received(b("ProductList"))).unwrap(), s);
    }

    #[test]
    fn advance_select_exit() {
        let t = SessionType::Select(
            Branches::new(vec![
                ("CHECKOUT".into(), SessionType::send(b("CreditCard"), SessionType::End)),
                ("EXIT".into(), SessionType::End),
            ])
            .unwrap(),
        );
        assert_eq!(advance(&t, &CommEvent::Selected("EXIT".into())).unwrap(), SessionType::End);
        assert!(matches!(advance(&t, &CommEvent::Selected("REFUND".into())), Err(TypeError::TypeMismatch { .. })));
    }

    #[test]
    fn advance_direction_violation() {
        let t = SessionType::send(b("int"), SessionType::End);
        assert!(matches!(advance(&t, &CommEvent::Received(b("int"))), Err(TypeError::TypeMismatch { .. })));
    }

    #[test]
    fn iteration_unfolds_then_exits() {
        let t = customer_to_vendor();
        let t = advance(t.body(), &CommEvent::Received(b("ProductList"))).unwrap();
        let inside = advance(&t, &CommEvent::IterEntered(Polarity::Out)).unwrap();
        let inside = advance(&inside, &CommEvent::Sent(b("ProductId"))).unwrap();
        let back = advance(&inside, &CommEvent::Received(b("int"))).unwrap();
        assert_eq!(back, t);
        let after = advance(&back, &CommEvent::IterExited(Polarity::Out)).unwrap();
        assert!(matches!(after, SessionType::Select(_)));
        // Wrong polarity is a violation.
        assert!(advance(&t, &CommEvent::IterEntered(Polarity::In)).is_err());
    }

    #[test]
    fn dual_of_end_is_end() {
        assert_eq!(dual(&SessionType::End), SessionType::End);
    }

    #[test]
    fn self_is_not_dual() {
        let t = customer_to_vendor();
        assert!(!is_dual(&t, &t));
        let a = SessionType::begin(Side::Client, SessionType::End);
        let b = SessionType::begin(Side::Server, SessionType::End);
        assert!(is_dual(&a, &b));
    }

    #[test]
    fn dual_keeps_delegated_payload() {
        let payload = SessionType::recv(b("CreditCard"), SessionType::send(b("Receipt"), SessionType::End));
        let t = SessionType::send(MessageType::session(payload.clone()), SessionType::End);
        assert_eq!(dual(&t), SessionType::recv(MessageType::session(payload), SessionType::End));
    }

    #[test]
    fn lost_count_synchronized() {
        let local = SessionType::recv(b("int"), SessionType::End);
        assert_eq!(lost_message_count(&local, &dual(&local)).unwrap(), 0);
    }

    #[test]
    fn lost_count_unreachable() {
        let local = SessionType::send(b("int"), SessionType::End);
        assert!(matches!(lost_message_count(&local, &SessionType::End), Err(TypeError::InconsistentTypes(_))));
    }

    #[test]
    fn lost_count_over_branch_and_iteration() {
        // Remote is still waiting for the iteration decision and the branch.
        let full =
            parse_type("?(ProductList).![!<ProductId>.?(int)]*.!{CHECKOUT: !<CreditCard>.?(Receipt), EXIT: }").unwrap();
        let remote = dual(&advance(&full, &CommEvent::Received(b("ProductList"))).unwrap());
        let mut local = advance(&full, &CommEvent::Received(b("ProductList"))).unwrap();
        local = advance(&local, &CommEvent::IterExited(Polarity::Out)).unwrap();
        local = advance(&local, &CommEvent::Selected("CHECKOUT".into())).unwrap();
        local = advance(&local, &CommEvent::Sent(b("CreditCard"))).unwrap();
        // ITER, BRANCH and DATA frames are outstanding.
        assert_eq!(lost_message_count(&local, &remote).unwrap(), 3);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let r = Branches::new(vec![("A".into(), SessionType::End), ("A".into(), SessionType::End)]);
        assert_eq!(r, Err(TypeError::DuplicateLabel("A".into())));
        assert_eq!(Branches::new(vec![]), Err(TypeError::EmptyBranches));
    }
}
