//! The delegation protocols as finite state machines over symbolic messages.

use std::fmt;

use crate::delegation::step_labels;
use crate::scenario::{OutcomeClass, StepOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Party {
    A,
    B,
    C,
    E,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Credential atoms: equality is all that can be observed about them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Atom {
    /// The session-sender's fresh credential.
    CredB,
    /// The attacker's own guess.
    CredE,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Val {
    Honest(u8),
    Forged(u8),
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Honest(i) => write!(f, "d{i}"),
            Val::Forged(i) => write!(f, "forged-{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Msg {
    Item(Val),
    StartDel(Option<Atom>),
    Port,
    Ds(Option<Atom>),
    DsAck,
    Cred(Atom),
    Success,
    Fail,
    Lm(Val),
    LmEnd,
    Done,
}

impl fmt::Display for Msg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Msg::Item(v) => write!(f, "Item({v})"),
            Msg::Lm(v) => write!(f, "LM({v})"),
            Msg::Ds(c) => write!(f, "DS({})", cred_text(*c)),
            Msg::DsAck => f.write_str("DSACK"),
            m => fmt::Debug::fmt(m, f),
        }
    }
}

fn cred_text(c: Option<Atom>) -> String {
    c.map_or_else(String::new, |a| format!("{a:?}"))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
struct Queue(Vec<Msg>);

impl Queue {
    fn head(&self) -> Option<Msg> {
        self.0.first().copied()
    }

    fn pop(&mut self) {
        self.0.remove(0);
    }

    fn push(&mut self, m: Msg) {
        self.0.push(m);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Conn {
    client: Party,
    up: Queue,
    down: Queue,
    accepted: bool,
    closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum APc {
    Sending(u8),
    AwaitDs,
    Ack(Option<Atom>),
    Close(Option<Atom>),
    Connect(Option<Atom>),
    SendCred(usize, Atom),
    AwaitReply(usize),
    SendLm(usize),
    AwaitDone(usize),
    Done,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum BPc {
    Consume(u8),
    MakeCred,
    Start,
    AwaitPort,
    SendDs,
    AwaitAck,
    Close,
    Done,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum CPc {
    AwaitStart,
    OpenPort,
    SendPort,
    Accept,
    Check(usize),
    Lm(usize),
    Serve(usize),
    Done(Party),
    Rejected,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EStage {
    Idle,
    Connected(usize),
    CredSent(usize),
    Authorized(usize),
    LmSent,
    Rejected,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Port {
    Unopened,
    Open,
    Closed,
}

/// One global state of the model.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    a: APc,
    b: BPc,
    c: CPc,
    e: EStage,
    /// The attacker has seen a delegation signal go by.
    e_saw_ds: bool,
    e_dropped: bool,
    e_acked: bool,
    e_got_success: bool,
    /// What the attacker read from the signal, if it could read it.
    e_learned: Option<Option<Atom>>,
    ab: Queue,
    ba: Queue,
    bc: Queue,
    cb: Queue,
    ab_closed_by_a: bool,
    ab_closed_by_b: bool,
    port: Port,
    conns: Vec<Conn>,
    b_cred: Option<Atom>,
    start_cred: Option<Atom>,
    c_expected: Option<Atom>,
    check_passed: bool,
    lm_received: u8,
    b_consumed: Vec<Val>,
    c_consumed: Vec<Val>,
    accepts: u8,
    /// Parties that have written to the A-B session channel.
    ab_writers: u8,
    stale_ds: bool,
    interfered: bool,
    steps: u32,
    order_error: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Honest,
    /// An optional attacker action.
    AttackerChoice,
    /// An attacker action that follows from earlier choices.
    AttackerScripted,
}

/// Attacker actions, as far as replay needs to know them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackerAction {
    Intercept,
    Copy,
    Ack,
    Connect,
    Cred,
    Lm,
    Receive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub role: Party,
    pub action: String,
    pub channel: &'static str,
    pub payload: String,
    pub steps: Vec<&'static str>,
    pub kind: MoveKind,
    pub attacker: Option<AttackerAction>,
}

impl Move {
    fn honest(role: Party, action: &str, channel: &'static str, payload: impl Into<String>) -> Move {
        Move {
            role,
            action: action.to_string(),
            channel,
            payload: payload.into(),
            steps: Vec::new(),
            kind: MoveKind::Honest,
            attacker: None,
        }
    }

    fn attacker(
        action: AttackerAction,
        text: &str,
        channel: &'static str,
        payload: impl Into<String>,
        choice: bool,
    ) -> Move {
        Move {
            role: Party::E,
            action: text.to_string(),
            channel,
            payload: payload.into(),
            steps: Vec::new(),
            kind: if choice { MoveKind::AttackerChoice } else { MoveKind::AttackerScripted },
            attacker: Some(action),
        }
    }

    fn step(mut self, s: Option<&'static str>) -> Move {
        self.steps.extend(s);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct ModelConfig {
    pub secure: bool,
    pub attacker: bool,
    /// Items sent by A that B has not consumed when it delegates.
    pub k: u8,
}

/// A built model: the role programs for one configuration.
#[derive(Debug, Clone)]
pub struct ProtocolModel {
    pub config: ModelConfig,
    order: StepOrder,
}

impl ProtocolModel {
    pub fn new(config: ModelConfig) -> Result<ProtocolModel, String> {
        if config.k > 2 {
            return Err(format!("k must be at most 2, got {}", config.k));
        }
        Ok(ProtocolModel { config, order: crate::scenario::step_order(config.secure) })
    }

    pub fn order(&self) -> &StepOrder {
        &self.order
    }

    pub fn initial(&self) -> State {
        let k = self.config.k;
        State {
            a: APc::Sending(0),
            b: if k == 2 { self.after_consuming() } else { BPc::Consume(0) },
            c: CPc::AwaitStart,
            e: EStage::Idle,
            e_saw_ds: false,
            e_dropped: false,
            e_acked: false,
            e_got_success: false,
            e_learned: None,
            ab: Queue::default(),
            ba: Queue::default(),
            bc: Queue::default(),
            cb: Queue::default(),
            ab_closed_by_a: false,
            ab_closed_by_b: false,
            port: Port::Unopened,
            conns: Vec::new(),
            b_cred: None,
            start_cred: None,
            c_expected: None,
            check_passed: false,
            lm_received: 0,
            b_consumed: Vec::new(),
            c_consumed: Vec::new(),
            accepts: 0,
            ab_writers: 0,
            stale_ds: false,
            interfered: false,
            steps: 0,
            order_error: false,
        }
    }

    fn after_consuming(&self) -> BPc {
        if self.config.secure {
            BPc::MakeCred
        } else {
            BPc::Start
        }
    }

    fn step_bit(&self, s: &str) -> Option<u32> {
        self.order.steps.iter().position(|x| *x == s).map(|i| 1 << i)
    }

    /// Record the steps of `m` in `s`, flagging any that break the order.
    fn track_steps(&self, s: &mut State, m: &Move) {
        for step in &m.steps {
            let Some(bit) = self.step_bit(step) else {
                s.order_error = true;
                continue;
            };
            if s.steps & bit != 0 {
                s.order_error = true;
            }
            for (p, q) in &self.order.edges {
                if q == step && self.step_bit(p).is_some_and(|pb| s.steps & pb == 0) {
                    s.order_error = true;
                }
            }
            s.steps |= bit;
        }
    }

    pub fn all_steps_done(&self, s: &State) -> bool {
        s.steps.count_ones() as usize == self.order.steps.len()
    }

    pub fn order_error(&self, s: &State) -> bool {
        s.order_error
    }

    /// Every enabled move with its successor state.
    pub fn moves(&self, s: &State) -> Vec<(Move, State)> {
        let mut out = Vec::new();
        self.moves_a(s, &mut out);
        self.moves_b(s, &mut out);
        self.moves_c(s, &mut out);
        if self.config.attacker {
            self.moves_e(s, &mut out);
        }
        for (m, n) in &mut out {
            self.track_steps(n, m);
        }
        out
    }

    fn lost_values(&self) -> impl Iterator<Item = Val> {
        let k = self.config.k;
        (3 - k..=2).map(Val::Honest)
    }

    fn moves_a(&self, s: &State, out: &mut Vec<(Move, State)>) {
        let l = step_labels(self.config.secure);
        let mut n = s.clone();
        let m = match s.a {
            APc::Sending(i) => {
                let v = Val::Honest(i + 1);
                if !s.ab_closed_by_b {
                    n.ab.push(Msg::Item(v));
                }
                n.ab_writers |= 1 << Party::A as u8;
                n.a = if i == 0 { APc::Sending(1) } else { APc::AwaitDs };
                Move::honest(Party::A, "send", "A-B", format!("Item({v})"))
            }
            APc::AwaitDs => match s.ba.head() {
                Some(Msg::Ds(c)) => {
                    n.ba.pop();
                    n.a = APc::Ack(c);
                    Move::honest(Party::A, "recv", "A-B", format!("DS({})", cred_text(c)))
                }
                None if s.ab_closed_by_b => {
                    n.a = APc::Failed;
                    Move::honest(Party::A, "peer closed", "A-B", "")
                }
                _ => return,
            },
            APc::Ack(c) => {
                if !s.ab_closed_by_b {
                    n.ab.push(Msg::DsAck);
                }
                n.a = APc::Close(c);
                Move::honest(Party::A, "send", "A-B", "DSACK").step(Some(l.dsack))
            }
            APc::Close(c) => {
                n.ab_closed_by_a = true;
                n.a = APc::Connect(c);
                Move::honest(Party::A, "close", "A-B", "").step(Some(l.passive_close))
            }
            APc::Connect(c) => {
                if s.port == Port::Open {
                    n.conns.push(Conn {
                        client: Party::A,
                        up: Queue::default(),
                        down: Queue::default(),
                        accepted: false,
                        closed: false,
                    });
                    let i = n.conns.len() - 1;
                    n.a = match c {
                        Some(c) if self.config.secure => APc::SendCred(i, c),
                        _ if self.config.secure => APc::Failed,
                        _ => APc::SendLm(i),
                    };
                    Move::honest(Party::A, "connect", "A-C", "").step(Some(l.connect))
                } else {
                    n.a = APc::Failed;
                    Move::honest(Party::A, "connect", "A-C", "refused").step(Some(l.connect))
                }
            }
            APc::SendCred(i, c) => {
                if s.conns[i].closed {
                    n.a = APc::Failed;
                    Move::honest(Party::A, "send", "A-C", "closed")
                } else {
                    n.conns[i].up.push(Msg::Cred(c));
                    n.a = APc::AwaitReply(i);
                    Move::honest(Party::A, "send", "A-C", format!("CRED({c:?})")).step(l.cred)
                }
            }
            APc::AwaitReply(i) => match s.conns[i].down.head() {
                Some(Msg::Success) => {
                    n.conns[i].down.pop();
                    n.a = APc::SendLm(i);
                    Move::honest(Party::A, "recv", "A-C", "Success").step(l.pass_passive)
                }
                Some(_) => {
                    n.conns[i].down.pop();
                    n.a = APc::Failed;
                    Move::honest(Party::A, "recv", "A-C", "Fail").step(l.fail_passive)
                }
                None if s.conns[i].closed => {
                    n.a = APc::Failed;
                    Move::honest(Party::A, "peer closed", "A-C", "").step(l.fail_passive)
                }
                None => return,
            },
            APc::SendLm(i) => {
                if s.conns[i].closed {
                    n.a = APc::Failed;
                    Move::honest(Party::A, "send", "A-C", "closed")
                } else {
                    let vals: Vec<Val> = self.lost_values().collect();
                    for v in &vals {
                        n.conns[i].up.push(Msg::Lm(*v));
                    }
                    n.conns[i].up.push(Msg::LmEnd);
                    n.a = APc::AwaitDone(i);
                    let text = vals.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
                    Move::honest(Party::A, "send", "A-C", format!("LM[{text}]")).step(Some(l.lm))
                }
            }
            APc::AwaitDone(i) => match s.conns[i].down.head() {
                Some(Msg::Done) => {
                    n.conns[i].down.pop();
                    n.a = APc::Done;
                    Move::honest(Party::A, "recv", "A-C", "Done")
                }
                None if s.conns[i].closed => {
                    n.a = APc::Failed;
                    Move::honest(Party::A, "peer closed", "A-C", "")
                }
                _ => return,
            },
            APc::Done | APc::Failed => return,
        };
        out.push((m, n));
    }

    fn moves_b(&self, s: &State, out: &mut Vec<(Move, State)>) {
        let l = step_labels(self.config.secure);
        let mut n = s.clone();
        let m = match s.b {
            BPc::Consume(i) => match s.ab.head() {
                Some(Msg::Item(v)) => {
                    n.ab.pop();
                    n.b_consumed.push(v);
                    n.b = if i + 1 == 2 - self.config.k { self.after_consuming() } else { BPc::Consume(i + 1) };
                    Move::honest(Party::B, "recv", "A-B", format!("Item({v})"))
                }
                Some(_) => {
                    n.ab.pop();
                    n.b = BPc::Failed;
                    Move::honest(Party::B, "type mismatch", "A-B", "")
                }
                None => return,
            },
            BPc::MakeCred => {
                n.b_cred = Some(Atom::CredB);
                n.b = BPc::Start;
                Move::honest(Party::B, "make credential", "-", "CredB").step(l.make_cred)
            }
            BPc::Start => {
                n.bc.push(Msg::StartDel(s.b_cred));
                n.start_cred = s.b_cred;
                n.b = BPc::AwaitPort;
                Move::honest(Party::B, "send", "B-C", format!("START_DELEGATION({})", cred_text(s.b_cred)))
                    .step(Some(l.start))
            }
            BPc::AwaitPort => match s.cb.head() {
                Some(Msg::Port) => {
                    n.cb.pop();
                    n.b = BPc::SendDs;
                    Move::honest(Party::B, "recv", "B-C", "PORT")
                }
                _ => return,
            },
            BPc::SendDs => {
                if !s.ab_closed_by_a {
                    n.ba.push(Msg::Ds(s.b_cred));
                }
                n.stale_ds |= s.b_cred.is_none() || s.b_cred != s.start_cred;
                n.ab_writers |= 1 << Party::B as u8;
                n.b = BPc::AwaitAck;
                Move::honest(Party::B, "send", "A-B", format!("DS({})", cred_text(s.b_cred))).step(Some(l.ds))
            }
            BPc::AwaitAck => match s.ab.head() {
                Some(Msg::DsAck) => {
                    n.ab.pop();
                    n.b = BPc::Close;
                    Move::honest(Party::B, "recv", "A-B", "DSACK")
                }
                Some(m) => {
                    n.ab.pop();
                    Move::honest(Party::B, "discard", "A-B", m.to_string())
                }
                None if s.ab_closed_by_a => {
                    n.b = BPc::Failed;
                    Move::honest(Party::B, "peer closed", "A-B", "")
                }
                None => return,
            },
            BPc::Close => {
                n.ab_closed_by_b = true;
                n.b = BPc::Done;
                Move::honest(Party::B, "close", "A-B", "").step(Some(l.sender_close))
            }
            BPc::Done | BPc::Failed => return,
        };
        out.push((m, n));
    }

    fn close_port(s: &mut State) {
        s.port = Port::Closed;
        for c in s.conns.iter_mut().filter(|c| !c.accepted) {
            c.closed = true;
        }
    }

    fn moves_c(&self, s: &State, out: &mut Vec<(Move, State)>) {
        let l = step_labels(self.config.secure);
        let k = self.config.k;
        let chan = |i: usize| if s.conns[i].client == Party::E { "E-C" } else { "A-C" };
        let mut n = s.clone();
        let m = match s.c {
            CPc::AwaitStart => match s.bc.head() {
                Some(Msg::StartDel(c)) => {
                    n.bc.pop();
                    n.c_expected = c;
                    n.c = CPc::OpenPort;
                    Move::honest(Party::C, "recv", "B-C", format!("START_DELEGATION({})", cred_text(c)))
                }
                _ => return,
            },
            CPc::OpenPort => {
                n.port = Port::Open;
                n.c = CPc::SendPort;
                Move::honest(Party::C, "open port", "-", "").step(Some(l.open_port))
            }
            CPc::SendPort => {
                n.cb.push(Msg::Port);
                n.c = CPc::Accept;
                Move::honest(Party::C, "send", "B-C", "PORT").step(Some(l.port))
            }
            CPc::Accept => {
                let Some(i) = s.conns.iter().position(|c| !c.accepted && !c.closed) else {
                    return;
                };
                n.conns[i].accepted = true;
                n.accepts += 1;
                if self.config.secure {
                    n.c = CPc::Check(i);
                } else {
                    Self::close_port(&mut n);
                    n.c = CPc::Lm(i);
                }
                Move::honest(Party::C, "accept", chan(i), format!("from {}", s.conns[i].client))
            }
            CPc::Check(i) => match s.conns[i].up.head() {
                Some(m) => {
                    n.conns[i].up.pop();
                    let ok = matches!(m, Msg::Cred(x) if Some(x) == s.c_expected);
                    Self::close_port(&mut n);
                    if ok {
                        n.conns[i].down.push(Msg::Success);
                        n.check_passed = true;
                        n.c = CPc::Lm(i);
                        Move::honest(Party::C, "check credential", chan(i), "match").step(l.check).step(l.pass_receiver)
                    } else {
                        n.conns[i].down.push(Msg::Fail);
                        n.conns[i].closed = true;
                        n.c = CPc::Rejected;
                        Move::honest(Party::C, "check credential", chan(i), "mismatch")
                            .step(l.check)
                            .step(l.fail_receiver)
                    }
                }
                None if s.conns[i].closed => {
                    n.c = CPc::Failed;
                    Move::honest(Party::C, "peer closed", chan(i), "")
                }
                None => return,
            },
            CPc::Lm(i) => match s.conns[i].up.head() {
                Some(Msg::Lm(v)) if s.lm_received < k => {
                    n.conns[i].up.pop();
                    n.lm_received += 1;
                    n.c_consumed.push(v);
                    Move::honest(Party::C, "recv", chan(i), format!("LM({v})"))
                }
                Some(Msg::LmEnd) => {
                    n.conns[i].up.pop();
                    n.c = CPc::Serve(i);
                    Move::honest(Party::C, "recv", chan(i), "LM end")
                }
                Some(_) => {
                    n.conns[i].up.pop();
                    n.conns[i].closed = true;
                    n.c = CPc::Failed;
                    Move::honest(Party::C, "inconsistent lost messages", chan(i), "")
                }
                None if s.conns[i].closed => {
                    n.c = CPc::Failed;
                    Move::honest(Party::C, "peer closed", chan(i), "")
                }
                None => return,
            },
            CPc::Serve(i) => {
                if s.c_consumed.len() < k as usize {
                    return;
                }
                n.conns[i].down.push(Msg::Done);
                n.c = CPc::Done(s.conns[i].client);
                Move::honest(Party::C, "send", chan(i), "Done")
            }
            CPc::Done(_) | CPc::Rejected | CPc::Failed => return,
        };
        out.push((m, n));
    }

    fn moves_e(&self, s: &State, out: &mut Vec<(Move, State)>) {
        let secure = self.config.secure;
        if let (false, Some(Msg::Ds(c))) = (s.e_saw_ds, s.ba.head()) {
            let learned = (!secure).then_some(c);
            let mut n = s.clone();
            n.ba.pop();
            n.e_saw_ds = true;
            n.e_dropped = true;
            n.e_learned = learned;
            n.interfered = true;
            out.push((Move::attacker(AttackerAction::Intercept, "intercept", "A-B", "DS", true), n));

            let mut n = s.clone();
            n.e_saw_ds = true;
            n.e_learned = learned;
            out.push((Move::attacker(AttackerAction::Copy, "copy", "A-B", "DS", true), n));
        }
        if !secure && s.e_saw_ds && !s.e_acked {
            let mut n = s.clone();
            if !s.ab_closed_by_b {
                n.ab.push(Msg::DsAck);
            }
            n.ab_writers |= 1 << Party::E as u8;
            n.e_acked = true;
            n.interfered = true;
            out.push((Move::attacker(AttackerAction::Ack, "inject", "A-B", "DSACK", true), n));
        }
        match s.e {
            EStage::Idle if s.e_saw_ds && s.port == Port::Open => {
                let mut n = s.clone();
                n.conns.push(Conn {
                    client: Party::E,
                    up: Queue::default(),
                    down: Queue::default(),
                    accepted: false,
                    closed: false,
                });
                n.e = EStage::Connected(n.conns.len() - 1);
                n.interfered = true;
                out.push((Move::attacker(AttackerAction::Connect, "connect", "E-C", "", true), n));
            }
            EStage::Connected(i) if secure => {
                let mut n = s.clone();
                if s.conns[i].closed {
                    n.e = EStage::Failed;
                } else {
                    let cred = s.e_learned.flatten().unwrap_or(Atom::CredE);
                    n.conns[i].up.push(Msg::Cred(cred));
                    n.e = EStage::CredSent(i);
                }
                out.push((Move::attacker(AttackerAction::Cred, "send", "E-C", "CRED(best known)", false), n));
            }
            EStage::CredSent(i) => {
                let mut n = s.clone();
                match s.conns[i].down.head() {
                    Some(Msg::Success) => {
                        n.conns[i].down.pop();
                        n.e = EStage::Authorized(i);
                        n.e_got_success = true;
                    }
                    Some(_) => {
                        n.conns[i].down.pop();
                        n.e = EStage::Rejected;
                    }
                    None if s.conns[i].closed => n.e = EStage::Rejected,
                    None => return,
                }
                let what = if matches!(n.e, EStage::Authorized(_)) { "Success" } else { "Fail" };
                out.push((Move::attacker(AttackerAction::Receive, "recv", "E-C", what, false), n));
            }
            EStage::Connected(i) | EStage::Authorized(i) => {
                let mut n = s.clone();
                if s.conns[i].closed {
                    n.e = EStage::Failed;
                } else {
                    for j in 1..=self.config.k {
                        n.conns[i].up.push(Msg::Lm(Val::Forged(j)));
                    }
                    n.conns[i].up.push(Msg::LmEnd);
                    n.e = EStage::LmSent;
                }
                out.push((
                    Move::attacker(AttackerAction::Lm, "send", "E-C", format!("LM[{} forged]", self.config.k), false),
                    n,
                ));
            }
            _ => {}
        }
    }

    // Observations used by the property checks.

    pub fn all_completed(&self, s: &State) -> bool {
        s.a == APc::Done && s.b == BPc::Done && s.c == CPc::Done(Party::A)
    }

    pub fn receiver_established_with(&self, s: &State) -> Option<Party> {
        match s.c {
            CPc::Lm(i) | CPc::Serve(i) => Some(s.conns[i].client),
            CPc::Done(p) => Some(p),
            _ => None,
        }
    }

    pub fn check_passed(&self, s: &State) -> bool {
        s.check_passed
    }

    pub fn attacker_authorized(&self, s: &State) -> bool {
        s.e_got_success
    }

    pub fn stale_ds(&self, s: &State) -> bool {
        s.stale_ds
    }

    /// Values consumed across the delegation are a prefix of what A sent.
    pub fn consistent_prefix(&self, s: &State) -> bool {
        let expected = [Val::Honest(1), Val::Honest(2)];
        let seen: Vec<Val> = s.b_consumed.iter().chain(&s.c_consumed).copied().collect();
        seen.len() <= 2 && seen[..] == expected[..seen.len()]
    }

    pub fn consumed_all(&self, s: &State) -> bool {
        s.b_consumed.len() + s.c_consumed.len() == 2
    }

    pub fn receiver_done(&self, s: &State) -> bool {
        matches!(s.c, CPc::Done(_))
    }

    pub fn linear(&self, s: &State) -> bool {
        s.accepts <= 1 && s.ab_writers & !(1 << Party::A as u8 | 1 << Party::B as u8) == 0
    }

    pub fn interfered(&self, s: &State) -> bool {
        s.interfered
    }

    pub fn class(&self, s: &State) -> OutcomeClass {
        match s.c {
            CPc::Done(Party::E) => OutcomeClass::Infiltrated,
            CPc::Rejected => OutcomeClass::Rejected,
            _ if self.all_completed(s) => OutcomeClass::Completed,
            _ => OutcomeClass::Stalled,
        }
    }

    /// Short description of who is where, for stuck-state reports.
    pub fn describe(&self, s: &State) -> String {
        format!("A={:?} B={:?} C={:?} E={:?}", s.a, s.b, s.c, s.e)
    }
}
