use std::fmt;
use std::time::Duration;

use hmac::{Hmac, Mac};
use num_bigint::BigUint;
use num_traits::Zero;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;

use super::{Registry, SrpError, SrpGroup};
use crate::transport::{Address, Endpoint, Frame, FrameChannel, Tag, TransportError, MAX_PAYLOAD};

type HmacSha256 = Hmac<Sha256>;

const MAC_LEN: usize = 32;

const HELLO: u8 = 1;
const SALT_B: u8 = 2;
const A_MSG: u8 = 3;
const M1: u8 = 4;
const M2: u8 = 5;

fn handshake_frame(sub: u8, fields: &[&[u8]]) -> Frame {
    let mut p = vec![sub];
    for f in fields {
        p.extend_from_slice(&(f.len() as u16).to_be_bytes());
        p.extend_from_slice(f);
    }
    Frame::new(Tag::Data, p)
}

fn parse_handshake(f: &Frame, sub: u8, n: usize) -> Result<Vec<Vec<u8>>, SrpError> {
    if f.tag != Tag::Data || f.payload.first() != Some(&sub) {
        return Err(SrpError::Protocol(format!("expected handshake message {sub}, got {}", f.tag)));
    }
    let mut rest = &f.payload[1..];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        if rest.len() < 2 {
            return Err(SrpError::Protocol("truncated field".into()));
        }
        let len = u16::from_be_bytes([rest[0], rest[1]]) as usize;
        rest = &rest[2..];
        if rest.len() < len {
            return Err(SrpError::Protocol("truncated field".into()));
        }
        out.push(rest[..len].to_vec());
        rest = &rest[len..];
    }
    if !rest.is_empty() {
        return Err(SrpError::Protocol("trailing bytes".into()));
    }
    Ok(out)
}

fn fail(e: &Endpoint, err: SrpError) -> SrpError {
    e.close();
    err
}

pub fn client_handshake(
    e: Endpoint,
    group: &SrpGroup,
    username: &str,
    password: &str,
) -> Result<SecureChannel, SrpError> {
    client_handshake_with(e, group, username, password, &mut rand::rngs::OsRng)
}

pub fn client_handshake_with<R: RngCore + CryptoRng + ?Sized>(
    e: Endpoint,
    group: &SrpGroup,
    username: &str,
    password: &str,
    rng: &mut R,
) -> Result<SecureChannel, SrpError> {
    if username.is_empty() || password.is_empty() {
        return Err(fail(&e, SrpError::EmptyCredentials));
    }
    e.send_frame(&handshake_frame(HELLO, &[username.as_bytes()]))?;
    let reply = e.recv_frame()?;
    let fields = parse_handshake(&reply, SALT_B, 2).map_err(|err| fail(&e, err))?;
    let salt = &fields[0];
    let b_pub = BigUint::from_bytes_be(&fields[1]);
    if group.is_zero_mod_n(&b_pub) {
        return Err(fail(&e, SrpError::IllegalParameter("B mod N is zero")));
    }
    let a = group.random_exponent(rng);
    let a_pub = group.client_public(&a);
    let u = group.u(&a_pub, &b_pub);
    if u.is_zero() {
        return Err(fail(&e, SrpError::IllegalParameter("u is zero")));
    }
    let x = group.x(salt, username, password);
    let key = group.session_key(&group.client_premaster(&b_pub, &a, &x, &u));
    let m1 = group.client_evidence(&a_pub, &b_pub, &key);
    e.send_frame(&handshake_frame(A_MSG, &[&a_pub.to_bytes_be()]))?;
    e.send_frame(&handshake_frame(M1, &[&m1]))?;
    let reply = match e.recv_frame() {
        Ok(f) => f,
        Err(TransportError::ChannelClosed) => return Err(fail(&e, SrpError::AuthFailed)),
        Err(err) => return Err(fail(&e, err.into())),
    };
    let m2 = parse_handshake(&reply, M2, 1).map_err(|err| fail(&e, err))?;
    let expected = group.server_evidence(&a_pub, &m1, &key);
    if !bool::from(expected.ct_eq(&m2[0])) {
        return Err(fail(&e, SrpError::AuthFailed));
    }
    Ok(SecureChannel::new(e, key, true, username.to_string()))
}

pub fn server_handshake(e: Endpoint, group: &SrpGroup, registry: &Registry) -> Result<SecureChannel, SrpError> {
    server_handshake_with(e, group, registry, &mut rand::rngs::OsRng)
}

pub fn server_handshake_with<R: RngCore + CryptoRng + ?Sized>(
    e: Endpoint,
    group: &SrpGroup,
    registry: &Registry,
    rng: &mut R,
) -> Result<SecureChannel, SrpError> {
    let hello = e.recv_frame()?;
    let fields = parse_handshake(&hello, HELLO, 1).map_err(|err| fail(&e, err))?;
    let username = String::from_utf8(fields[0].clone())
        .map_err(|_| fail(&e, SrpError::Protocol("username is not UTF-8".into())))?;
    let known = registry.get(&username).is_some_and(|r| r.group == group.name);
    let (salt, v) = registry.lookup(group, &username);
    let b = group.random_exponent(rng);
    let b_pub = group.server_public(&b, &v);
    e.send_frame(&handshake_frame(SALT_B, &[&salt, &b_pub.to_bytes_be()]))?;
    let fields = parse_handshake(&e.recv_frame()?, A_MSG, 1).map_err(|err| fail(&e, err))?;
    let a_pub = BigUint::from_bytes_be(&fields[0]);
    if group.is_zero_mod_n(&a_pub) {
        return Err(fail(&e, SrpError::IllegalParameter("A mod N is zero")));
    }
    let u = group.u(&a_pub, &b_pub);
    if u.is_zero() {
        return Err(fail(&e, SrpError::IllegalParameter("u is zero")));
    }
    let key = group.session_key(&group.server_premaster(&a_pub, &v, &u, &b));
    let expected = group.client_evidence(&a_pub, &b_pub, &key);
    let m1 = parse_handshake(&e.recv_frame()?, M1, 1).map_err(|err| fail(&e, err))?;
    if !bool::from(expected.ct_eq(&m1[0])) || !known {
        return Err(fail(&e, SrpError::AuthFailed));
    }
    e.send_frame(&handshake_frame(M2, &[&group.server_evidence(&a_pub, &m1[0], &key)]))?;
    Ok(SecureChannel::new(e, key, false, username))
}

struct Direction {
    enc: [u8; 32],
    mac: [u8; 32],
    counter: u64,
}

impl Direction {
    fn derive(key: &[u8], label: &str) -> Direction {
        let sub = |purpose: &str| -> [u8; 32] {
            let mut m = HmacSha256::new_from_slice(key).expect("any key length");
            m.update(label.as_bytes());
            m.update(purpose.as_bytes());
            m.finalize().into_bytes().into()
        };
        Direction { enc: sub("enc"), mac: sub("mac"), counter: 0 }
    }

    fn keystream_xor(&self, data: &mut [u8]) {
        for (block, chunk) in data.chunks_mut(32).enumerate() {
            let ks = Sha256::new()
                .chain_update(self.enc)
                .chain_update(self.counter.to_be_bytes())
                .chain_update((block as u32).to_be_bytes())
                .finalize();
            chunk.iter_mut().zip(ks).for_each(|(b, k)| *b ^= k);
        }
    }

    fn mac(&self, tag: Tag, ciphertext: &[u8]) -> HmacSha256 {
        let mut m = HmacSha256::new_from_slice(&self.mac).expect("any key length");
        m.update(&self.counter.to_be_bytes());
        m.update(&[tag as u8]);
        m.update(ciphertext);
        m
    }
}

/// An SRP-authenticated channel. Payloads are encrypted with a keystream
/// derived from the session key and authenticated with HMAC-SHA256 over
/// (counter, tag, ciphertext). Counters are implicit and start at zero per
/// direction, so replayed or reordered frames fail verification.
pub struct SecureChannel {
    inner: Endpoint,
    key: Vec<u8>,
    tx: Direction,
    rx: Direction,
    identity: String,
}

impl fmt::Debug for SecureChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SecureChannel").field("inner", &self.inner).field("identity", &self.identity).finish()
    }
}

impl SecureChannel {
    fn new(inner: Endpoint, key: Vec<u8>, client: bool, identity: String) -> SecureChannel {
        let c2s = Direction::derive(&key, "c2s");
        let s2c = Direction::derive(&key, "s2c");
        let (tx, rx) = if client { (c2s, s2c) } else { (s2c, c2s) };
        SecureChannel { inner, key, tx, rx, identity }
    }

    pub fn session_key(&self) -> &[u8] {
        &self.key
    }

    /// The username authenticated by the handshake.
    pub fn identity(&self) -> &str {
        &self.identity
    }

    pub fn secure_send(&mut self, f: &Frame) -> Result<(), TransportError> {
        if f.payload.len() > MAX_PAYLOAD - MAC_LEN {
            return Err(TransportError::FrameTooLarge(f.payload.len()));
        }
        let mut body = f.payload.clone();
        self.tx.keystream_xor(&mut body);
        let mac = self.tx.mac(f.tag, &body).finalize().into_bytes();
        body.extend_from_slice(&mac);
        self.inner.send_frame(&Frame::new(f.tag, body))?;
        self.tx.counter += 1;
        Ok(())
    }

    pub fn secure_recv(&mut self) -> Result<Frame, TransportError> {
        let f = self.inner.recv_frame()?;
        if f.payload.len() < MAC_LEN {
            self.inner.close();
            return Err(TransportError::IntegrityFailure);
        }
        let (body, mac) = f.payload.split_at(f.payload.len() - MAC_LEN);
        if self.rx.mac(f.tag, body).verify_slice(mac).is_err() {
            self.inner.close();
            return Err(TransportError::IntegrityFailure);
        }
        let mut plain = body.to_vec();
        self.rx.keystream_xor(&mut plain);
        self.rx.counter += 1;
        Ok(Frame::new(f.tag, plain))
    }
}

impl FrameChannel for SecureChannel {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        self.secure_send(frame)
    }
    fn recv_frame(&mut self) -> Result<Frame, TransportError> {
        self.secure_recv()
    }
    fn close(&mut self) {
        self.inner.close()
    }
    fn is_open(&self) -> bool {
        self.inner.is_open()
    }
    fn local_addr(&self) -> &Address {
        self.inner.local_addr()
    }
    fn peer_addr(&self) -> &Address {
        self.inner.peer_addr()
    }
    fn set_recv_timeout(&mut self, timeout: Option<Duration>) {
        self.inner.set_recv_timeout(timeout)
    }
    fn is_secure(&self) -> bool {
        true
    }
}
