//! Randomized traffic over a pair of monitored sessions, and a raw peer that
//! slips an ill-typed frame into an otherwise honest exchange.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secure_session::session::{
    accept_session, request_session, ClientAuth, ServerAuth, Session, SessionError, TypedValue,
};
use secure_session::transport::{Address, Endpoint, Frame, SimNetwork, Tag};
use secure_session::types::gen::random_body;
use secure_session::types::{advance, dual, CommEvent, MessageType, Polarity, SessionType, Side};

pub fn has_session_messages(t: &SessionType) -> bool {
    match t {
        SessionType::Begin(_, k) => has_session_messages(k),
        SessionType::Send(m, k) | SessionType::Recv(m, k) => {
            matches!(m, MessageType::Session(_)) || has_session_messages(k)
        }
        SessionType::Select(bs) | SessionType::Offer(bs) => bs.iter().any(|(_, t)| has_session_messages(t)),
        SessionType::OutIter(b, k) | SessionType::InIter(b, k) => has_session_messages(b) || has_session_messages(k),
        SessionType::End => false,
    }
}

/// A random client protocol carrying base values only.
pub fn random_value_protocol(rng: &mut ChaCha8Rng) -> SessionType {
    loop {
        let body = random_body(rng, 6);
        if !has_session_messages(&body) {
            return SessionType::begin(Side::Client, body);
        }
    }
}

/// What one side observed: values received, each with the type the monitor
/// expected at that point.
#[derive(Debug, Default)]
pub struct Observed {
    pub received: Vec<(String, TypedValue)>,
    pub actions: usize,
}

impl Observed {
    pub fn mismatches(&self) -> usize {
        self.received.iter().filter(|(want, v)| *want != v.type_name).count()
    }
}

/// Follow the local type to the end, choosing branches and iteration
/// decisions at random within a budget.
pub fn drive(s: &mut Session, rng: &mut ChaCha8Rng, mut budget: u32) -> Result<Observed, (SessionError, Observed)> {
    let mut obs = Observed::default();
    loop {
        obs.actions += 1;
        let r = match s.remaining().clone() {
            SessionType::End => {
                return s.close().map(|_| obs).map_err(|e| (e, Observed::default()));
            }
            SessionType::Send(MessageType::Base(n), _) => {
                s.send_value(&TypedValue::text(n.clone(), &format!("v{}", obs.actions)))
            }
            SessionType::Recv(MessageType::Base(n), _) => s.recv_value().map(|v| obs.received.push((n, v))),
            SessionType::Select(bs) => {
                let labels: Vec<&str> = bs.labels().collect();
                let l = labels.choose(rng).unwrap().to_string();
                s.select(&l)
            }
            SessionType::Offer(_) => s.offer().map(drop),
            SessionType::OutIter(..) => {
                let again = budget > 0 && rng.gen_bool(0.6);
                budget = budget.saturating_sub(1);
                s.iter_continue(again)
            }
            SessionType::InIter(..) => s.iter_follow().map(drop),
            other => panic!("driver cannot handle `{other}`"),
        };
        if let Err(e) = r {
            return Err((e, obs));
        }
    }
}

pub struct TrafficRun {
    pub protocol: SessionType,
    pub client: Result<Observed, (SessionError, Observed)>,
    pub server: Result<Observed, (SessionError, Observed)>,
}

/// Run a random protocol between two monitored sessions on the simulated
/// network.
pub fn traffic_run(seed: u64) -> TrafficRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let protocol = random_value_protocol(&mut rng);
    let net = SimNetwork::new(seed);
    let addr = Address::sim("S", 1);
    let acc = net.node("S").listen(&addr).unwrap();
    let server_type = dual(&protocol);
    let server = net.spawn("S", move || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut s =
            accept_session(&acc, &server_type, &ServerAuth::None, None).map_err(|e| (e, Observed::default()))?;
        drive(&mut s, &mut rng, 3)
    });
    let client_type = protocol.clone();
    let node = net.node("C");
    let client = net.spawn("C", move || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc11e);
        let mut s =
            request_session(&node, &addr, &client_type, &ClientAuth::None).map_err(|e| (e, Observed::default()))?;
        drive(&mut s, &mut rng, 3)
    });
    net.start();
    TrafficRun { protocol, client: client.join().unwrap(), server: server.join().unwrap() }
}

const FUZZ_MARK: &str = "fuzzed";

fn progress_frame(tag: Tag, progress: u32, body: &[u8]) -> Frame {
    let mut p = progress.to_be_bytes().to_vec();
    p.extend_from_slice(body);
    Frame::new(tag, p)
}

fn value_body(name: &str, text: &str) -> Vec<u8> {
    let mut b = vec![name.len() as u8];
    b.extend_from_slice(name.as_bytes());
    b.extend_from_slice(text.as_bytes());
    b
}

fn label_body(l: &str) -> Vec<u8> {
    let mut b = vec![l.len() as u8];
    b.extend_from_slice(l.as_bytes());
    b
}

/// A frame that does not fit a receiver expecting `head`.
pub fn ill_typed_frame(head: &SessionType, progress: u32, rng: &mut ChaCha8Rng) -> Frame {
    let other_tags = [Tag::StartDelegation, Tag::Port, Tag::DsAck, Tag::Cred, Tag::Lm];
    let junk: Vec<u8> = (0..rng.gen_range(0..12)).map(|_| rng.gen()).collect();
    let pick = rng.gen_range(0..4);
    if pick == 0 {
        return Frame::new(*other_tags.choose(rng).unwrap(), junk);
    }
    match head {
        SessionType::Recv(MessageType::Base(n), _) => match pick {
            1 => progress_frame(Tag::Data, progress, &value_body(&format!("{n}X"), FUZZ_MARK)),
            2 => progress_frame(Tag::Branch, progress, &label_body("CHECKOUT")),
            _ => progress_frame(Tag::Data, progress, &[200]),
        },
        SessionType::Offer(bs) => match pick {
            1 => {
                let l = format!("{}Z", bs.labels().next().unwrap());
                progress_frame(Tag::Branch, progress, &label_body(&l))
            }
            2 => progress_frame(Tag::Data, progress, &value_body("int", FUZZ_MARK)),
            _ => progress_frame(Tag::Branch, progress, &[9, b'x']),
        },
        SessionType::InIter(..) => match pick {
            1 => progress_frame(Tag::Iter, progress, &[rng.gen_range(2..=255)]),
            2 => progress_frame(Tag::Data, progress, &value_body("int", FUZZ_MARK)),
            _ => progress_frame(Tag::Branch, progress, &label_body("MORE")),
        },
        other => panic!("`{other}` is not an input"),
    }
}

pub struct FuzzRun {
    pub protocol: SessionType,
    /// The ill-typed frame, if the raw peer got to send one.
    pub fuzzed: Option<Frame>,
    pub monitored: Result<Observed, (SessionError, Observed)>,
}

/// Run a random protocol between a monitored session and a raw peer that
/// follows the dual type honestly for a while and then, at one of its own
/// output points, sends an ill-typed frame instead.
pub fn fuzz_run(seed: u64) -> FuzzRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let protocol = random_value_protocol(&mut rng);
    let raw_type = dual(&protocol);

    let net = SimNetwork::new(seed);
    let addr = Address::sim("S", 1);
    let acc = net.node("S").listen(&addr).unwrap();
    let node = net.node("C");
    let client_type = protocol.clone();
    let monitored = net.spawn("C", move || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc11e);
        let mut s =
            request_session(&node, &addr, &client_type, &ClientAuth::None).map_err(|e| (e, Observed::default()))?;
        drive(&mut s, &mut rng, 3)
    });
    let raw = net.spawn("S", move || {
        let e = acc.accept(None).unwrap();
        raw_peer(&e, &raw_type, &mut rng)
    });
    net.start();
    let monitored = monitored.join().unwrap();
    let fuzzed = raw.join().unwrap();
    FuzzRun { protocol, fuzzed, monitored }
}

fn raw_peer(e: &Endpoint, raw_type: &SessionType, rng: &mut ChaCha8Rng) -> Option<Frame> {
    e.send_frame(&Frame::new(Tag::Data, raw_type.to_string())).ok()?;
    e.recv_frame().ok()?;
    let mut t = raw_type.body().clone();
    let mut consumed = 0u32;
    let mut budget = 3u32;
    let fuzz_at = rng.gen_range(0..4u32);
    let mut outputs = 0u32;
    let fuzzed = loop {
        let (frame, event) = match &t {
            SessionType::End => break None,
            SessionType::Send(..) | SessionType::Select(_) | SessionType::OutIter(..) if outputs == fuzz_at => {
                let f = ill_typed_frame(&dual(&t), consumed, rng);
                let _ = e.send_frame(&f);
                break Some(f);
            }
            SessionType::Send(MessageType::Base(n), _) => (
                Some(progress_frame(Tag::Data, consumed, &value_body(n, "ok"))),
                CommEvent::Sent(MessageType::base(n.clone())),
            ),
            SessionType::Select(bs) => {
                let l = bs.labels().collect::<Vec<_>>().choose(rng).unwrap().to_string();
                (Some(progress_frame(Tag::Branch, consumed, &label_body(&l))), CommEvent::Selected(l))
            }
            SessionType::OutIter(..) => {
                let again = budget > 0 && rng.gen_bool(0.6);
                budget = budget.saturating_sub(1);
                let e =
                    if again { CommEvent::IterEntered(Polarity::Out) } else { CommEvent::IterExited(Polarity::Out) };
                (Some(progress_frame(Tag::Iter, consumed, &[again as u8])), e)
            }
            _ => {
                let f = e.recv_frame().ok()?;
                consumed += 1;
                let body = f.payload.get(4..)?;
                let ev = match f.tag {
                    Tag::Data => CommEvent::Received(MessageType::base(
                        String::from_utf8(body.get(1..1 + *body.first()? as usize)?.to_vec()).ok()?,
                    )),
                    Tag::Branch => CommEvent::Offered(String::from_utf8(body.get(1..)?.to_vec()).ok()?),
                    Tag::Iter if body == [1] => CommEvent::IterEntered(Polarity::In),
                    Tag::Iter => CommEvent::IterExited(Polarity::In),
                    _ => return None,
                };
                (None, ev)
            }
        };
        if let Some(f) = frame {
            outputs += 1;
            e.send_frame(&f).ok()?;
        }
        t = advance(&t, &event).ok()?;
    };
    // Wait for the monitored side to react before going away.
    while e.recv_frame().is_ok() {}
    fuzzed
}

pub fn delivered_fuzz(obs: &Observed) -> bool {
    obs.received.iter().any(|(_, v)| v.as_text() == Some(FUZZ_MARK))
}
