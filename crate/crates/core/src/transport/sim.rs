//! In-memory network with a seeded cooperative scheduler.
//!
//! Threads started through [`SimNetwork::spawn`] are *actors*: only one actor
//! runs at a time, and every network operation is a scheduling point where
//! the next actor is drawn from the seeded RNG. A run is therefore a pure
//! function of the seed and the actor programs. When no actor can make
//! progress, the lowest-indexed actor blocked with a timeout is woken with
//! [`TransportError::Timeout`]; timeouts are logical, not wall-clock.
//!
//! Threads that are not actors may use the network too ("free mode"), in
//! which case blocking calls wait on real time.

use std::cell::Cell;
use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Acceptor, AcceptorKind, Address, Endpoint, Frame, Link, Network, Tag, TransportError};

const FIRST_FREE_PORT: u16 = 40000;
const FIRST_EPHEMERAL_PORT: u16 = 50000;

static NEXT_NET_ID: AtomicU64 = AtomicU64::new(1);

thread_local! {
    static CURRENT: Cell<Option<(u64, usize)>> = const { Cell::new(None) };
}

/// What a tap sees for each frame in flight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameMeta {
    pub conn: usize,
    pub from: Address,
    pub to: Address,
    /// 0 for the connecting side, 1 for the accepting side.
    pub from_side: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TapAction {
    Forward,
    Suppress,
    Replace(Frame),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TapDecision {
    pub action: TapAction,
    /// Hand a copy of the original frame to the attacker.
    pub copy: bool,
}

impl TapDecision {
    pub fn forward() -> TapDecision {
        TapDecision { action: TapAction::Forward, copy: false }
    }

    pub fn copy() -> TapDecision {
        TapDecision { action: TapAction::Forward, copy: true }
    }

    pub fn suppress(copy: bool) -> TapDecision {
        TapDecision { action: TapAction::Suppress, copy }
    }

    pub fn replace(frame: Frame, copy: bool) -> TapDecision {
        TapDecision { action: TapAction::Replace(frame), copy }
    }
}

/// Attacker policy applied to every frame sent on the network.
///
/// Called with the network lock held: it must not perform network operations.
pub trait TapPolicy: Send {
    fn inspect(&mut self, meta: &FrameMeta, frame: &Frame) -> TapDecision;
}

impl<F> TapPolicy for F
where
    F: FnMut(&FrameMeta, &Frame) -> TapDecision + Send,
{
    fn inspect(&mut self, meta: &FrameMeta, frame: &Frame) -> TapDecision {
        self(meta, frame)
    }
}

/// A frame copied to the attacker by its tap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capture {
    pub meta: FrameMeta,
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimEvent {
    Listen { addr: Address },
    Unlisten { addr: Address },
    Connect { conn: usize, from: Address, to: Address },
    Accept { conn: usize },
    Send { conn: usize, from_side: usize, frame: Frame, action: TapAction, copied: bool },
    Inject { conn: usize, to_side: usize, frame: Frame },
    Recv { conn: usize, side: usize, tag: Tag },
    Close { conn: usize, side: usize },
    Timeout { actor: String },
}

impl fmt::Display for SimEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimEvent::Listen { addr } => write!(f, "listen {addr}"),
            SimEvent::Unlisten { addr } => write!(f, "unlisten {addr}"),
            SimEvent::Connect { conn, from, to } => write!(f, "connect #{conn} {from} -> {to}"),
            SimEvent::Accept { conn } => write!(f, "accept #{conn}"),
            SimEvent::Send { conn, from_side, frame, action, copied } => {
                write!(f, "send #{conn}/{from_side} {} {}", frame.tag, hex::encode(&frame.payload))?;
                match action {
                    TapAction::Forward => {}
                    TapAction::Suppress => f.write_str(" [suppressed]")?,
                    TapAction::Replace(r) => write!(f, " [replaced {} {}]", r.tag, hex::encode(&r.payload))?,
                }
                if *copied {
                    f.write_str(" [copied]")?;
                }
                Ok(())
            }
            SimEvent::Inject { conn, to_side, frame } => {
                write!(f, "inject #{conn}->{to_side} {} {}", frame.tag, hex::encode(&frame.payload))
            }
            SimEvent::Recv { conn, side, tag } => write!(f, "recv #{conn}/{side} {tag}"),
            SimEvent::Close { conn, side } => write!(f, "close #{conn}/{side}"),
            SimEvent::Timeout { actor } => write!(f, "timeout {actor}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimStats {
    pub connections: usize,
    pub frames_sent: usize,
    pub frames_delivered: usize,
    pub scheduling_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Wait {
    Recv { conn: usize, side: usize },
    Accept { key: usize },
    Capture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Runnable,
    Blocked { wait: Wait, timeout: bool },
    Done,
}

struct Actor {
    name: String,
    status: Status,
    timed_out: bool,
}

struct Conn {
    addrs: [Address; 2],
    queues: [VecDeque<Frame>; 2],
    closed: [bool; 2],
}

struct Listener {
    addr: Address,
    backlog: VecDeque<usize>,
    open: bool,
}

struct State {
    rng: ChaCha8Rng,
    bound: BTreeMap<(String, u16), usize>,
    listeners: Vec<Listener>,
    next_free: BTreeMap<String, u16>,
    next_ephemeral: BTreeMap<String, u16>,
    conns: Vec<Conn>,
    trace: Vec<SimEvent>,
    tap: Option<Box<dyn TapPolicy>>,
    captures: VecDeque<Capture>,
    actors: Vec<Actor>,
    current: Option<usize>,
    started: bool,
    stats: SimStats,
}

impl State {
    fn satisfied(&self, wait: Wait) -> bool {
        match wait {
            Wait::Recv { conn, side } => {
                let c = &self.conns[conn];
                c.closed[side] || c.closed[1 - side] || !c.queues[side].is_empty()
            }
            Wait::Accept { key } => {
                let l = &self.listeners[key];
                !l.open || !l.backlog.is_empty()
            }
            Wait::Capture => !self.captures.is_empty(),
        }
    }

    fn pass_baton(&mut self) {
        for i in 0..self.actors.len() {
            if let Status::Blocked { wait, .. } = self.actors[i].status {
                if self.satisfied(wait) {
                    self.actors[i].status = Status::Runnable;
                }
            }
        }
        let runnable: Vec<usize> =
            (0..self.actors.len()).filter(|&i| self.actors[i].status == Status::Runnable).collect();
        self.stats.scheduling_points += 1;
        if !runnable.is_empty() {
            let pick = if runnable.len() == 1 { 0 } else { self.rng.gen_range(0..runnable.len()) };
            self.current = Some(runnable[pick]);
            return;
        }
        let blocked = |want_timeout: bool| {
            self.actors
                .iter()
                .position(|a| matches!(a.status, Status::Blocked { timeout, .. } if timeout || !want_timeout))
        };
        match blocked(true).or_else(|| blocked(false)) {
            Some(i) => {
                let actor = &mut self.actors[i];
                actor.status = Status::Runnable;
                actor.timed_out = true;
                let name = actor.name.clone();
                self.trace.push(SimEvent::Timeout { actor: name });
                self.current = Some(i);
            }
            None => self.current = None,
        }
    }

    fn allocate(
        map: &mut BTreeMap<String, u16>,
        node: &str,
        first: u16,
        bound: &BTreeMap<(String, u16), usize>,
    ) -> u16 {
        let next = map.entry(node.to_string()).or_insert(first);
        while bound.contains_key(&(node.to_string(), *next)) {
            *next = next.wrapping_add(1).max(first);
        }
        let port = *next;
        *next = next.wrapping_add(1).max(first);
        port
    }
}

struct Shared {
    id: u64,
    state: Mutex<State>,
    cv: Condvar,
}

/// The simulated network. Cheap to clone; clones share all state.
#[derive(Clone)]
pub struct SimNetwork {
    shared: Arc<Shared>,
}

impl fmt::Debug for SimNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimNetwork").field("id", &self.shared.id).finish()
    }
}

struct ActorGuard {
    net: SimNetwork,
    me: usize,
}

impl Drop for ActorGuard {
    fn drop(&mut self) {
        CURRENT.with(|c| c.set(None));
        let mut st = self.net.lock();
        st.actors[self.me].status = Status::Done;
        if st.current == Some(self.me) {
            st.pass_baton();
        }
        drop(st);
        self.net.shared.cv.notify_all();
    }
}

impl SimNetwork {
    pub fn new(seed: u64) -> SimNetwork {
        let state = State {
            rng: ChaCha8Rng::seed_from_u64(seed),
            bound: BTreeMap::new(),
            listeners: Vec::new(),
            next_free: BTreeMap::new(),
            next_ephemeral: BTreeMap::new(),
            conns: Vec::new(),
            trace: Vec::new(),
            tap: None,
            captures: VecDeque::new(),
            actors: Vec::new(),
            current: None,
            started: false,
            stats: SimStats::default(),
        };
        SimNetwork {
            shared: Arc::new(Shared {
                id: NEXT_NET_ID.fetch_add(1, Ordering::Relaxed),
                state: Mutex::new(state),
                cv: Condvar::new(),
            }),
        }
    }

    /// A handle for the node `name`.
    pub fn node(&self, name: &str) -> Network {
        Network::Sim(SimNode { net: self.clone(), name: name.to_string() })
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.shared.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Register an actor. It will not run until [`start`](Self::start).
    pub fn spawn<T, F>(&self, name: &str, f: F) -> JoinHandle<T>
    where
        T: Send + 'static,
        F: FnOnce() -> T + Send + 'static,
    {
        let me = {
            let mut st = self.lock();
            st.actors.push(Actor { name: name.to_string(), status: Status::Runnable, timed_out: false });
            let me = st.actors.len() - 1;
            if st.started && st.current.is_none() {
                st.pass_baton();
                self.shared.cv.notify_all();
            }
            me
        };
        let net = self.clone();
        std::thread::Builder::new()
            .name(name.to_string())
            .spawn(move || {
                CURRENT.with(|c| c.set(Some((net.shared.id, me))));
                let guard = ActorGuard { net, me };
                drop(guard.net.wait_turn(guard.net.lock(), me));
                f()
            })
            .expect("spawn actor thread")
    }

    /// Begin scheduling the registered actors.
    pub fn start(&self) {
        let mut st = self.lock();
        if !st.started {
            st.started = true;
            st.pass_baton();
        }
        drop(st);
        self.shared.cv.notify_all();
    }

    pub fn attach_attacker(&self, policy: Box<dyn TapPolicy>) -> AttackerHandle {
        self.lock().tap = Some(policy);
        AttackerHandle { net: self.clone() }
    }

    pub fn trace(&self) -> Vec<SimEvent> {
        self.lock().trace.clone()
    }

    pub fn trace_text(&self) -> String {
        self.lock().trace.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn stats(&self) -> SimStats {
        self.lock().stats
    }

    fn actor_id(&self) -> Option<usize> {
        CURRENT.with(|c| c.get()).and_then(|(net, me)| (net == self.shared.id).then_some(me))
    }

    fn wait_turn<'a>(&'a self, mut st: MutexGuard<'a, State>, me: usize) -> MutexGuard<'a, State> {
        while st.current != Some(me) {
            st = self.shared.cv.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        st
    }

    /// Scheduling point: lets another actor run first, then returns the lock.
    fn step(&self) -> MutexGuard<'_, State> {
        let mut st = self.lock();
        if let Some(me) = self.actor_id() {
            st.actors[me].status = Status::Runnable;
            st.pass_baton();
            if st.current != Some(me) {
                self.shared.cv.notify_all();
                st = self.wait_turn(st, me);
            }
        }
        st
    }

    /// Block until `wait` is satisfied. Returns `Err(Timeout)` if woken by a
    /// logical (or, in free mode, real) timeout.
    fn block<'a>(
        &'a self,
        mut st: MutexGuard<'a, State>,
        wait: Wait,
        timeout: Option<Duration>,
    ) -> Result<MutexGuard<'a, State>, (MutexGuard<'a, State>, TransportError)> {
        match self.actor_id() {
            Some(me) => {
                st.actors[me].status = Status::Blocked { wait, timeout: timeout.is_some() };
                st.pass_baton();
                self.shared.cv.notify_all();
                st = self.wait_turn(st, me);
                if std::mem::take(&mut st.actors[me].timed_out) {
                    return Err((st, TransportError::Timeout));
                }
                Ok(st)
            }
            None => {
                let deadline = timeout.map(|t| Instant::now() + t);
                while !st.satisfied(wait) {
                    match deadline {
                        None => st = self.shared.cv.wait(st).unwrap_or_else(|e| e.into_inner()),
                        Some(d) => {
                            let now = Instant::now();
                            if now >= d {
                                return Err((st, TransportError::Timeout));
                            }
                            st = self.shared.cv.wait_timeout(st, d - now).unwrap_or_else(|e| e.into_inner()).0;
                        }
                    }
                }
                Ok(st)
            }
        }
    }

    fn listen(&self, node: &str, port: u16) -> Result<Acceptor, TransportError> {
        let mut st = self.step();
        let port = if port == 0 {
            let State { next_free, bound, .. } = &mut *st;
            State::allocate(next_free, node, FIRST_FREE_PORT, bound)
        } else {
            port
        };
        let addr = Address::sim(node, port);
        if st.bound.contains_key(&(node.to_string(), port)) {
            return Err(TransportError::AddressInUse(addr));
        }
        let key = st.listeners.len();
        st.listeners.push(Listener { addr: addr.clone(), backlog: VecDeque::new(), open: true });
        st.bound.insert((node.to_string(), port), key);
        st.trace.push(SimEvent::Listen { addr: addr.clone() });
        Ok(Acceptor { kind: AcceptorKind::Sim(SimAcceptor { net: self.clone(), key }), addr, open: true })
    }

    fn connect(&self, from_node: &str, to: &Address) -> Result<Endpoint, TransportError> {
        let (node, port) = match to {
            Address::Sim { node, port } => (node.clone(), *port),
            Address::Tcp(_) => return Err(TransportError::BadAddress(to.to_string())),
        };
        let mut st = self.step();
        let key = match st.bound.get(&(node, port)) {
            Some(&k) if st.listeners[k].open => k,
            _ => return Err(TransportError::ConnectionRefused(to.clone())),
        };
        let local_port = {
            let State { next_ephemeral, bound, .. } = &mut *st;
            State::allocate(next_ephemeral, from_node, FIRST_EPHEMERAL_PORT, bound)
        };
        let local = Address::sim(from_node, local_port);
        let conn = st.conns.len();
        st.conns.push(Conn {
            addrs: [local.clone(), to.clone()],
            queues: [VecDeque::new(), VecDeque::new()],
            closed: [false, false],
        });
        st.listeners[key].backlog.push_back(conn);
        st.stats.connections += 1;
        st.trace.push(SimEvent::Connect { conn, from: local.clone(), to: to.clone() });
        drop(st);
        self.shared.cv.notify_all();
        Ok(Endpoint::new(Link::Sim(SimLink { net: self.clone(), conn, side: 0 }), local, to.clone()))
    }

    fn listening_ports(&self, node: &str) -> Vec<u16> {
        let st = self.step();
        st.bound.iter().filter(|((n, _), &k)| n == node && st.listeners[k].open).map(|((_, p), _)| *p).collect()
    }
}

/// A node's view of the simulated network.
#[derive(Clone, Debug)]
pub struct SimNode {
    net: SimNetwork,
    name: String,
}

impl SimNode {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn network(&self) -> &SimNetwork {
        &self.net
    }

    pub(super) fn listen(&self, node: &str, port: u16) -> Result<Acceptor, TransportError> {
        if node != self.name {
            return Err(TransportError::BadAddress(Address::sim(node, port).to_string()));
        }
        self.net.listen(node, port)
    }

    pub(super) fn connect(&self, addr: &Address) -> Result<Endpoint, TransportError> {
        self.net.connect(&self.name, addr)
    }
}

pub(super) struct SimAcceptor {
    net: SimNetwork,
    key: usize,
}

impl SimAcceptor {
    pub(super) fn accept(&self, timeout: Option<Duration>) -> Result<Endpoint, TransportError> {
        let mut st = self.net.step();
        loop {
            let l = &mut st.listeners[self.key];
            if !l.open {
                return Err(TransportError::ChannelClosed);
            }
            if let Some(conn) = l.backlog.pop_front() {
                st.trace.push(SimEvent::Accept { conn });
                let [peer, local] = st.conns[conn].addrs.clone();
                let link = Link::Sim(SimLink { net: self.net.clone(), conn, side: 1 });
                return Ok(Endpoint::new(link, local, peer));
            }
            st = self.net.block(st, Wait::Accept { key: self.key }, timeout).map_err(|(_, e)| e)?;
        }
    }

    pub(super) fn close(&self) {
        let mut st = self.net.lock();
        let l = &mut st.listeners[self.key];
        if !l.open {
            return;
        }
        l.open = false;
        let pending: Vec<usize> = l.backlog.drain(..).collect();
        let addr = l.addr.clone();
        if let Address::Sim { node, port } = &addr {
            st.bound.remove(&(node.clone(), *port));
        }
        for conn in pending {
            st.conns[conn].closed[1] = true;
            st.trace.push(SimEvent::Close { conn, side: 1 });
        }
        st.trace.push(SimEvent::Unlisten { addr });
        drop(st);
        self.net.shared.cv.notify_all();
    }
}

#[derive(Clone)]
pub(super) struct SimLink {
    net: SimNetwork,
    conn: usize,
    side: usize,
}

impl SimLink {
    pub(super) fn send(&self, frame: &Frame) -> Result<(), TransportError> {
        let mut st = self.net.step();
        let State { conns, tap, captures, trace, stats, .. } = &mut *st;
        let c = &mut conns[self.conn];
        if c.closed[self.side] || c.closed[1 - self.side] {
            return Err(TransportError::ChannelClosed);
        }
        let decision = match tap {
            Some(policy) => {
                let meta = FrameMeta {
                    conn: self.conn,
                    from: c.addrs[self.side].clone(),
                    to: c.addrs[1 - self.side].clone(),
                    from_side: self.side,
                };
                let d = policy.inspect(&meta, frame);
                if d.copy {
                    captures.push_back(Capture { meta, frame: frame.clone() });
                }
                d
            }
            None => TapDecision::forward(),
        };
        let queue = &mut c.queues[1 - self.side];
        match &decision.action {
            TapAction::Forward => queue.push_back(frame.clone()),
            TapAction::Suppress => {}
            TapAction::Replace(r) => queue.push_back(r.clone()),
        }
        stats.frames_sent += 1;
        trace.push(SimEvent::Send {
            conn: self.conn,
            from_side: self.side,
            frame: frame.clone(),
            action: decision.action,
            copied: decision.copy,
        });
        drop(st);
        self.net.shared.cv.notify_all();
        Ok(())
    }

    pub(super) fn recv(&self, timeout: Option<Duration>) -> Result<Frame, TransportError> {
        let mut st = self.net.step();
        let wait = Wait::Recv { conn: self.conn, side: self.side };
        loop {
            let c = &mut st.conns[self.conn];
            if c.closed[self.side] {
                return Err(TransportError::ChannelClosed);
            }
            if let Some(f) = c.queues[self.side].pop_front() {
                st.stats.frames_delivered += 1;
                st.trace.push(SimEvent::Recv { conn: self.conn, side: self.side, tag: f.tag });
                return Ok(f);
            }
            if c.closed[1 - self.side] {
                return Err(TransportError::ChannelClosed);
            }
            st = self.net.block(st, wait, timeout).map_err(|(_, e)| e)?;
        }
    }

    pub(super) fn close(&self) {
        let mut st = self.net.lock();
        let c = &mut st.conns[self.conn];
        if c.closed[self.side] {
            return;
        }
        c.closed[self.side] = true;
        c.queues[self.side].clear();
        st.trace.push(SimEvent::Close { conn: self.conn, side: self.side });
        drop(st);
        self.net.shared.cv.notify_all();
    }
}

/// The attacker's side of an attached tap.
#[derive(Clone)]
pub struct AttackerHandle {
    net: SimNetwork,
}

impl AttackerHandle {
    /// Wait for the next frame copied by the tap.
    pub fn next_capture(&self, timeout: Option<Duration>) -> Result<Capture, TransportError> {
        let mut st = self.net.step();
        loop {
            if let Some(c) = st.captures.pop_front() {
                return Ok(c);
            }
            st = self.net.block(st, Wait::Capture, timeout).map_err(|(_, e)| e)?;
        }
    }

    pub fn try_capture(&self) -> Option<Capture> {
        self.net.lock().captures.pop_front()
    }

    /// Deliver `frame` to side `to_side` of connection `conn` as if the other
    /// side had sent it.
    pub fn inject(&self, conn: usize, to_side: usize, frame: Frame) -> Result<(), TransportError> {
        frame.check_size()?;
        let mut st = self.net.step();
        let c = st.conns.get_mut(conn).ok_or(TransportError::ChannelClosed)?;
        if c.closed[to_side] {
            return Err(TransportError::ChannelClosed);
        }
        c.queues[to_side].push_back(frame.clone());
        st.trace.push(SimEvent::Inject { conn, to_side, frame });
        drop(st);
        self.net.shared.cv.notify_all();
        Ok(())
    }

    /// Ports currently accepting connections on `node`.
    pub fn scan_ports(&self, node: &str) -> Vec<u16> {
        self.net.listening_ports(node)
    }

    /// Replace the tap policy.
    pub fn set_policy(&self, policy: Box<dyn TapPolicy>) {
        self.net.lock().tap = Some(policy);
    }

    pub fn network(&self) -> &SimNetwork {
        &self.net
    }
}
