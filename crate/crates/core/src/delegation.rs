//! Session delegation by reconnection: the original Resending protocol and
//! the Secure Resending protocol with a session-sender-issued credential.
//!
//! Three roles take part. The session-sender hands its side of a session to
//! the session-receiver over a carrier session; the passive party, whose
//! session moves, is told where to reconnect by a delegation signal (DS) and
//! resends the messages the session-sender never consumed.

use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::RngCore;
use subtle::ConstantTimeEq;

use crate::session::{
    progress_frame, split_progress, ClientAuth, Role, ServerAuth, Session, SessionError, SessionState,
};
use crate::transport::{Address, Frame, FrameChannel, Network, Tag, TransportError};
use crate::types::{advance, lost_message_count, parse_type, CommEvent, MessageType, Polarity, SessionType};

pub const CREDENTIAL_LEN: usize = 32;

pub const SUCCESS: &str = "Success";
pub const FAIL: &str = "Fail";

/// A delegation credential: 32 random bytes, compared in constant time.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Credential([u8; CREDENTIAL_LEN]);

impl Credential {
    pub fn from_bytes(b: [u8; CREDENTIAL_LEN]) -> Credential {
        Credential(b)
    }

    pub fn from_slice(b: &[u8]) -> Option<Credential> {
        b.try_into().ok().map(Credential)
    }

    pub fn as_bytes(&self) -> &[u8; CREDENTIAL_LEN] {
        &self.0
    }
}

impl fmt::Debug for Credential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Credential({}..)", hex::encode(&self.0[..4]))
    }
}

pub fn make_credential() -> Credential {
    let mut b = [0u8; CREDENTIAL_LEN];
    rand::rngs::OsRng.fill_bytes(&mut b);
    Credential(b)
}

pub fn check_credential(expected: &Credential, presented: &Credential) -> bool {
    expected.0.ct_eq(&presented.0).into()
}

/// Tells the passive party where its session went.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelegationSignal {
    /// The session-sender's remaining view at the time of delegation.
    pub remaining: SessionType,
    pub receiver: Address,
    pub credential: Option<Credential>,
}

impl DelegationSignal {
    pub fn encode(&self) -> Vec<u8> {
        let ty = self.remaining.to_string();
        let host = self.receiver.host();
        let mut out = Vec::new();
        out.extend_from_slice(&(ty.len() as u16).to_be_bytes());
        out.extend_from_slice(ty.as_bytes());
        out.push(host.len() as u8);
        out.extend_from_slice(host.as_bytes());
        out.extend_from_slice(&self.receiver.port().to_be_bytes());
        if let Some(c) = &self.credential {
            out.extend_from_slice(c.as_bytes());
        }
        out
    }

    pub fn decode(b: &[u8]) -> Option<DelegationSignal> {
        let take = |b: &mut &[u8], n: usize| -> Option<Vec<u8>> {
            if b.len() < n {
                return None;
            }
            let (h, t) = b.split_at(n);
            *b = t;
            Some(h.to_vec())
        };
        let mut b = b;
        let n = u16::from_be_bytes(take(&mut b, 2)?.try_into().ok()?) as usize;
        let ty = String::from_utf8(take(&mut b, n)?).ok()?;
        let remaining = if ty == "end" { SessionType::End } else { parse_type(&ty).ok()? };
        if !remaining.is_begin_free() {
            return None;
        }
        let n = take(&mut b, 1)?[0] as usize;
        let host = String::from_utf8(take(&mut b, n)?).ok()?;
        let port = u16::from_be_bytes(take(&mut b, 2)?.try_into().ok()?);
        let receiver = Address::from_host_port(&host, port).ok()?;
        let credential = match b.len() {
            0 => None,
            CREDENTIAL_LEN => Credential::from_slice(b),
            _ => return None,
        };
        Some(DelegationSignal { remaining, receiver, credential })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DelegationStatus {
    Completed,
    CredentialRejected,
    Aborted(String),
}

impl fmt::Display for DelegationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelegationStatus::Completed => f.write_str("completed"),
            DelegationStatus::CredentialRejected => f.write_str("credential rejected"),
            DelegationStatus::Aborted(r) => write!(f, "aborted: {r}"),
        }
    }
}

#[derive(Debug)]
pub struct DelegationOutcome {
    pub status: DelegationStatus,
    /// The session taken over by the session-receiver.
    pub migrated: Option<Session>,
}

impl DelegationOutcome {
    fn status(status: DelegationStatus) -> DelegationOutcome {
        DelegationOutcome { status, migrated: None }
    }

    fn aborted(reason: impl fmt::Display) -> DelegationOutcome {
        DelegationOutcome::status(DelegationStatus::Aborted(reason.to_string()))
    }
}

/// Step labels of the two protocol variants, as numbered in their usual
/// presentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepLabels {
    pub make_cred: Option<&'static str>,
    pub start: &'static str,
    pub open_port: &'static str,
    pub port: &'static str,
    pub ds: &'static str,
    pub dsack: &'static str,
    pub passive_close: &'static str,
    pub sender_close: &'static str,
    pub connect: &'static str,
    pub cred: Option<&'static str>,
    pub check: Option<&'static str>,
    pub pass_passive: Option<&'static str>,
    pub pass_receiver: Option<&'static str>,
    pub fail_passive: Option<&'static str>,
    pub fail_receiver: Option<&'static str>,
    pub lm: &'static str,
}

pub const ORIGINAL_STEPS: StepLabels = StepLabels {
    make_cred: None,
    start: "1",
    open_port: "2",
    port: "3",
    ds: "4",
    dsack: "5",
    passive_close: "6",
    sender_close: "6'",
    connect: "7",
    cred: None,
    check: None,
    pass_passive: None,
    pass_receiver: None,
    fail_passive: None,
    fail_receiver: None,
    lm: "8",
};

pub const SECURE_STEPS: StepLabels = StepLabels {
    make_cred: Some("1"),
    start: "2",
    open_port: "3",
    port: "4",
    ds: "5",
    dsack: "6",
    passive_close: "7",
    sender_close: "7'",
    connect: "8",
    cred: Some("9"),
    check: Some("9'"),
    pass_passive: Some("9a"),
    pass_receiver: Some("9a'"),
    fail_passive: Some("9b"),
    fail_receiver: Some("9b'"),
    lm: "10",
};

pub fn step_labels(secure: bool) -> &'static StepLabels {
    if secure {
        &SECURE_STEPS
    } else {
        &ORIGINAL_STEPS
    }
}

/// Shared record of every credential issued, for freshness checks.
pub type CredentialLog = Arc<Mutex<Vec<Credential>>>;

#[derive(Debug, Clone, Default)]
pub struct SenderOptions {
    pub secure: bool,
    pub timeout: Option<Duration>,
    pub credential_log: Option<CredentialLog>,
    /// Out-of-band copy of the credential, for demonstrating what possession
    /// of it allows.
    pub leak: Option<Arc<Mutex<Option<Credential>>>>,
}

#[derive(Debug, Clone)]
pub struct ReceiverOptions {
    pub secure: bool,
    pub timeout: Option<Duration>,
    /// Authentication of the passive party's new connection.
    pub auth: ServerAuth,
    /// Logical name for the new channel in transcripts.
    pub channel: String,
}

/// The passive party's means of following a delegation.
#[derive(Debug, Clone)]
pub struct Reconnector {
    pub net: Network,
    pub auth: ClientAuth,
    pub require_credential: bool,
    pub timeout: Option<Duration>,
    /// Logical name for the new channel in transcripts.
    pub channel: String,
}

impl Reconnector {
    pub fn new(net: &Network, auth: ClientAuth, secure: bool) -> Reconnector {
        Reconnector { net: net.clone(), auth, require_credential: secure, timeout: None, channel: "C-H".into() }
    }
}

fn trace_step(s: &Session, channel: Option<&str>, step: Option<&str>, action: impl Into<String>) {
    if let Some(t) = s.tracer() {
        let t = channel.map_or_else(|| t.clone(), |c| t.on(c));
        match step {
            Some(step) => t.step(step, action),
            None => t.event(action),
        }
    }
}

fn delegated_type(t: &SessionType, out: bool) -> Option<&SessionType> {
    match (t, out) {
        (SessionType::Send(MessageType::Session(d), _), true)
        | (SessionType::Recv(MessageType::Session(d), _), false) => Some(d),
        _ => None,
    }
}

fn with_timeout<T>(s: &mut Session, t: Option<Duration>, f: impl FnOnce(&mut Session) -> T) -> T {
    s.chan.set_recv_timeout(t);
    let r = f(s);
    let restore = s.timeout;
    s.chan.set_recv_timeout(restore);
    r
}

/// Session-sender side: hand `target` over to the party at the other end of
/// `carrier`, whose next action must be the matching higher-order send.
pub fn delegate(
    mut target: Session,
    carrier: &mut Session,
    opts: &SenderOptions,
) -> Result<DelegationOutcome, SessionError> {
    carrier.ensure_active()?;
    let Some(t) = delegated_type(&carrier.remaining, true).cloned() else {
        let expected = carrier.remaining.head_description();
        return Err(carrier.abort(expected, "a delegation send".into()));
    };
    if target.state != SessionState::Active || target.remaining != t {
        let got = format!("delegation of a session at `{}`", target.remaining);
        return Err(carrier.abort(format!("!<{t}>"), got));
    }
    let steps = step_labels(opts.secure);
    target.state = SessionState::Delegating;

    let cred = opts.secure.then(make_credential);
    if let Some(c) = &cred {
        trace_step(carrier, Some("-"), steps.make_cred, "credential creation");
        if let Some(log) = &opts.credential_log {
            log.lock().unwrap_or_else(|e| e.into_inner()).push(*c);
        }
        if let Some(leak) = &opts.leak {
            *leak.lock().unwrap_or_else(|e| e.into_inner()) = Some(*c);
        }
    }

    let start = Frame::new(Tag::StartDelegation, cred.map(|c| c.as_bytes().to_vec()).unwrap_or_default());
    trace_step(
        carrier,
        None,
        Some(steps.start),
        if opts.secure { "send START_DELEGATION::CRED" } else { "send START_DELEGATION" },
    );
    if let Err(e) = carrier.chan.send_frame(&start) {
        target.force_close();
        return Ok(DelegationOutcome::aborted(e));
    }

    let port = with_timeout(carrier, opts.timeout, |c| c.chan.recv_frame());
    let port = match port {
        Ok(f) if f.tag == Tag::Port && f.payload.len() == 2 => u16::from_be_bytes([f.payload[0], f.payload[1]]),
        Ok(f) => {
            target.force_close();
            return Ok(DelegationOutcome::aborted(format!("expected PORT, got {}", f.tag)));
        }
        Err(e) => {
            target.force_close();
            return Ok(DelegationOutcome::aborted(format!("waiting for PORT: {e}")));
        }
    };
    trace_step(carrier, None, None, format!("recv PORT {port}"));
    let receiver = match Address::from_host_port(&carrier.peer_addr().host(), port) {
        Ok(a) => a,
        Err(e) => {
            target.force_close();
            return Ok(DelegationOutcome::aborted(e));
        }
    };

    let ds = DelegationSignal { remaining: t.clone(), receiver: receiver.clone(), credential: cred };
    trace_step(
        &target,
        None,
        Some(steps.ds),
        format!("send DS <{t}, {receiver}{}>", if cred.is_some() { ", CRED" } else { "" }),
    );
    if let Err(e) = target.chan.send_frame(&Frame::new(Tag::Ds, ds.encode())) {
        target.force_close();
        return Ok(DelegationOutcome::aborted(format!("sending DS: {e}")));
    }

    let acked = with_timeout(&mut target, opts.timeout, |s| loop {
        match s.chan.recv_frame() {
            Ok(f) if f.tag == Tag::DsAck => break Ok(()),
            Ok(f) if matches!(f.tag, Tag::Data | Tag::Branch | Tag::Iter) => {
                trace_step(s, None, None, format!("discard unconsumed {}", f.tag));
            }
            Ok(f) => break Err(format!("expected DSACK, got {}", f.tag)),
            Err(TransportError::Timeout) => break Err("DSACK timeout".to_string()),
            Err(e) => break Err(format!("waiting for DSACK: {e}")),
        }
    });
    if let Err(reason) = acked {
        target.force_close();
        return Ok(DelegationOutcome::aborted(reason));
    }
    trace_step(&target, None, None, "recv DSACK");
    trace_step(&target, None, Some(steps.sender_close), "close s");
    target.force_close();
    carrier.remaining =
        advance(&carrier.remaining, &CommEvent::Sent(MessageType::session(t))).expect("head checked above");
    Ok(DelegationOutcome::status(DelegationStatus::Completed))
}

/// Session-receiver side: take over the session announced on `carrier`.
pub fn receive_delegation(
    net: &Network,
    carrier: &mut Session,
    opts: &ReceiverOptions,
) -> Result<DelegationOutcome, SessionError> {
    carrier.ensure_active()?;
    let Some(t) = delegated_type(&carrier.remaining, false).cloned() else {
        let expected = carrier.remaining.head_description();
        return Err(carrier.abort(expected, "a delegation receive".into()));
    };
    let steps = step_labels(opts.secure);

    let start = match with_timeout(carrier, opts.timeout, |c| c.chan.recv_frame()) {
        Ok(f) if f.tag == Tag::StartDelegation => f,
        Ok(f) => return Err(carrier.abort(format!("?({t})"), format!("{} frame", f.tag))),
        Err(e) => return Ok(DelegationOutcome::aborted(format!("waiting for START_DELEGATION: {e}"))),
    };
    let expected_cred = match (opts.secure, start.payload.len()) {
        (true, CREDENTIAL_LEN) => Credential::from_slice(&start.payload),
        (false, 0) => None,
        _ => return Ok(DelegationOutcome::aborted("START_DELEGATION does not match the protocol variant")),
    };
    trace_step(carrier, None, None, "recv START_DELEGATION");

    let mut acceptor = match net.listen_free() {
        Ok(a) => a,
        Err(e) => return Ok(DelegationOutcome::aborted(e)),
    };
    let port = acceptor.port();
    trace_step(carrier, Some("-"), Some(steps.open_port), format!("open server socket on free port {port}; accept"));
    trace_step(carrier, None, Some(steps.port), format!("send PORT {port}"));
    if let Err(e) = carrier.chan.send_frame(&Frame::new(Tag::Port, port.to_be_bytes().to_vec())) {
        return Ok(DelegationOutcome::aborted(e));
    }

    let conn = match acceptor.accept(opts.timeout) {
        Ok(e) => e,
        Err(e) => return Ok(DelegationOutcome::aborted(format!("accept: {e}"))),
    };
    let peer = conn.peer_addr().clone();
    trace_step(carrier, Some(&opts.channel), None, format!("accepted connection from {peer}"));
    let mut chan = match opts.auth.secure(conn) {
        Ok(c) => c,
        Err(e) => {
            acceptor.close();
            return Ok(DelegationOutcome::aborted(format!("authenticating {peer}: {e}")));
        }
    };
    chan.set_recv_timeout(opts.timeout);

    if let Some(expected) = expected_cred {
        let presented = match chan.recv_frame() {
            Ok(f) if f.tag == Tag::Cred => Credential::from_slice(&f.payload),
            Ok(_) => None,
            Err(e) => {
                chan.close();
                acceptor.close();
                return Ok(DelegationOutcome::aborted(format!("waiting for CRED: {e}")));
            }
        };
        let ok = presented.is_some_and(|p| check_credential(&expected, &p));
        trace_step(
            carrier,
            Some("-"),
            steps.check,
            format!("CRED checking: {}", if ok { "match" } else { "mismatch" }),
        );
        if !ok {
            trace_step(carrier, Some(&opts.channel), steps.fail_receiver, "authentication error, close port");
            let _ = chan.send_frame(&label_frame(FAIL));
            chan.close();
            acceptor.close();
            return Ok(DelegationOutcome::status(DelegationStatus::CredentialRejected));
        }
        trace_step(carrier, Some(&opts.channel), steps.pass_receiver, "connection established");
        if let Err(e) = chan.send_frame(&label_frame(SUCCESS)) {
            acceptor.close();
            return Ok(DelegationOutcome::aborted(e));
        }
    }
    acceptor.close();

    let mut shadow = t.clone();
    let mut replay = Vec::new();
    loop {
        let f = match chan.recv_frame() {
            Ok(f) => f,
            Err(e) => return Ok(DelegationOutcome::aborted(format!("receiving lost messages: {e}"))),
        };
        if f.tag != Tag::Lm {
            chan.close();
            return Err(SessionError::InconsistentTypes(format!("expected LM, got {}", f.tag)));
        }
        if f.payload.is_empty() {
            break;
        }
        let inner = decode_lm(&f.payload).and_then(|(_, inner)| {
            let event = frame_event(&inner)?;
            advance(&shadow, &event).ok().map(|next| (inner, next))
        });
        let Some((inner, next)) = inner else {
            chan.close();
            return Err(SessionError::InconsistentTypes(format!("lost message does not fit `{shadow}`")));
        };
        shadow = next;
        replay.push(progress_frame(inner.tag, 0, split_progress(&inner).expect("checked").1));
    }
    trace_step(carrier, Some(&opts.channel), None, format!("recv LM ({} frames)", replay.len()));

    carrier.remaining =
        advance(&carrier.remaining, &CommEvent::Received(MessageType::session(t.clone()))).expect("head checked above");
    let mut migrated = Session::with_channel(chan, t, Role::Acceptor);
    migrated.inbound = replay.into();
    migrated.timeout = opts.timeout;
    if let Some(tr) = carrier.tracer() {
        migrated.set_tracer(tr.on(&opts.channel));
    }
    Ok(DelegationOutcome { status: DelegationStatus::Completed, migrated: Some(migrated) })
}

fn label_frame(label: &str) -> Frame {
    let mut p = vec![label.len() as u8];
    p.extend_from_slice(label.as_bytes());
    Frame::new(Tag::Branch, p)
}

pub fn lm_frame(seq: u32, inner: &Frame) -> Frame {
    let mut p = seq.to_be_bytes().to_vec();
    p.push(inner.tag as u8);
    p.extend_from_slice(&inner.payload);
    Frame::new(Tag::Lm, p)
}

fn decode_lm(p: &[u8]) -> Option<(u32, Frame)> {
    if p.len() < 5 {
        return None;
    }
    let seq = u32::from_be_bytes(p[..4].try_into().unwrap());
    let tag = Tag::from_byte(p[4])?;
    Some((seq, Frame::new(tag, &p[5..])))
}

/// The communication event a session frame represents, from the receiving
/// side's point of view.
fn frame_event(f: &Frame) -> Option<CommEvent> {
    let (_, body) = split_progress(f)?;
    match f.tag {
        Tag::Data => {
            let (&n, rest) = body.split_first()?;
            let name = std::str::from_utf8(rest.get(..n as usize)?).ok()?;
            Some(CommEvent::Received(MessageType::base(name)))
        }
        Tag::Branch => {
            let (&n, rest) = body.split_first()?;
            (rest.len() == n as usize).then_some(())?;
            Some(CommEvent::Offered(String::from_utf8(rest.to_vec()).ok()?))
        }
        Tag::Iter => match body {
            [1] => Some(CommEvent::IterEntered(Polarity::In)),
            [0] => Some(CommEvent::IterExited(Polarity::In)),
            _ => None,
        },
        _ => None,
    }
}

/// Passive party: act on the delegation signal held by `s`.
pub fn handle_delegation_signal(s: &mut Session, r: &Reconnector) -> Result<(), SessionError> {
    let Some(ds) = s.pending_ds.take() else {
        return Err(SessionError::Precondition("no delegation signal pending".into()));
    };
    follow_delegation(s, r, ds)
}

pub(crate) fn follow_delegation(s: &mut Session, r: &Reconnector, ds_frame: Frame) -> Result<(), SessionError> {
    let Some(ds) = DelegationSignal::decode(&ds_frame.payload) else {
        return Err(s.abort(s.remaining.head_description(), "malformed DS frame".into()));
    };
    let steps = step_labels(ds.credential.is_some());
    trace_step(s, None, None, format!("recv DS <{}, {}>", ds.remaining, ds.receiver));
    if r.require_credential && ds.credential.is_none() {
        s.force_close();
        return Err(SessionError::DelegationRefused("delegation signal carries no credential".into()));
    }
    let n = match lost_message_count(&s.remaining, &ds.remaining) {
        Ok(n) if n <= s.sent_unacked.len() => n,
        Ok(n) => {
            s.force_close();
            return Err(SessionError::InconsistentTypes(format!(
                "{n} lost messages but only {} unacknowledged",
                s.sent_unacked.len()
            )));
        }
        Err(e) => {
            s.force_close();
            return Err(SessionError::InconsistentTypes(e.to_string()));
        }
    };

    trace_step(s, None, Some(steps.dsack), "send DSACK");
    let _ = s.chan.send_frame(&Frame::empty(Tag::DsAck));
    trace_step(s, None, Some(steps.passive_close), "close s");
    s.chan.close();

    trace_step(s, Some(&r.channel), Some(steps.connect), format!("connect to {}", ds.receiver));
    let conn = r.net.connect(&ds.receiver).map_err(|e| fail(s, e.into()))?;
    let mut chan = r.auth.secure(conn).map_err(|e| fail(s, e.into()))?;
    chan.set_recv_timeout(r.timeout);

    if let Some(c) = &ds.credential {
        trace_step(s, Some(&r.channel), steps.cred, "send CRED");
        chan.send_frame(&Frame::new(Tag::Cred, c.as_bytes().to_vec())).map_err(|e| fail(s, e.into()))?;
        let reply = match chan.recv_frame() {
            Ok(f) if f.tag == Tag::Branch => f.payload,
            Ok(f) => return Err(fail(s, SessionError::DelegationRefused(format!("unexpected {} frame", f.tag)))),
            Err(TransportError::ChannelClosed) => Vec::new(),
            Err(e) => return Err(fail(s, e.into())),
        };
        if reply.get(1..).is_some_and(|l| l == SUCCESS.as_bytes()) {
            trace_step(s, Some(&r.channel), steps.pass_passive, "connection successful");
        } else {
            trace_step(s, Some(&r.channel), steps.fail_passive, "credential rejected, close s");
            chan.close();
            return Err(fail(s, SessionError::DelegationRefused("credential rejected".into())));
        }
    }

    let skip = s.sent_unacked.len() - n;
    let lost: Vec<(u32, Frame)> = s.sent_unacked.iter().skip(skip).cloned().collect();
    trace_step(s, Some(&r.channel), Some(steps.lm), format!("send LM ({} frames)", lost.len()));
    for (seq, f) in &lost {
        chan.send_frame(&lm_frame(*seq, f)).map_err(|e| fail(s, e.into()))?;
    }
    chan.send_frame(&Frame::empty(Tag::Lm)).map_err(|e| fail(s, e.into()))?;

    s.chan = chan;
    s.chan.set_recv_timeout(s.timeout);
    s.sent_unacked = lost.into_iter().enumerate().map(|(i, (_, f))| (i as u32, f)).collect();
    s.next_seq = n as u32;
    s.consumed = 0;
    s.state = SessionState::Active;
    if let Some(t) = s.tracer.take() {
        s.tracer = Some(t.on(&r.channel));
    }
    Ok(())
}

fn fail(s: &mut Session, e: SessionError) -> SessionError {
    s.force_close();
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::parse_type;

    #[test]
    fn credentials_are_fresh_and_compare_exactly() {
        let a = make_credential();
        let b = make_credential();
        assert_ne!(a, b);
        assert!(check_credential(&a, &a));
        let mut flipped = *a.as_bytes();
        flipped[31] ^= 1;
        assert!(!check_credential(&a, &Credential::from_bytes(flipped)));
        assert!(Credential::from_slice(&[0u8; 31]).is_none());
    }

    #[test]
    fn signal_round_trips() {
        for cred in [None, Some(make_credential())] {
            let ds = DelegationSignal {
                remaining: parse_type("?(CreditCard).!<Receipt>").unwrap(),
                receiver: Address::sim("H", 40000),
                credential: cred,
            };
            assert_eq!(DelegationSignal::decode(&ds.encode()), Some(ds));
        }
        let ds = DelegationSignal {
            remaining: SessionType::End,
            receiver: "127.0.0.1:9".parse().unwrap(),
            credential: None,
        };
        assert_eq!(DelegationSignal::decode(&ds.encode()), Some(ds));
        assert!(DelegationSignal::decode(&[0, 3, b'x']).is_none());
    }

    #[test]
    fn lm_frames_carry_sequence_and_inner_frame() {
        let inner = progress_frame(Tag::Branch, 3, &[5, b'H', b'E', b'L', b'L', b'O']);
        let (seq, back) = decode_lm(&lm_frame(7, &inner).payload).unwrap();
        assert_eq!((seq, &back), (7, &inner));
        assert_eq!(frame_event(&back), Some(CommEvent::Offered("HELLO".into())));
    }
}
