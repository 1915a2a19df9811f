use num_bigint::BigUint;
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secure_session::srp::{
    client_handshake, client_handshake_with, register_with_salt, server_handshake, server_handshake_with, HashAlg,
    Registry, SrpError, SrpGroup,
};
use secure_session::transport::{
    Address, AttackerHandle, Endpoint, Frame, FrameMeta, SimNetwork, Tag, TapDecision, TransportError,
};

const SALT: &str = "BEB25379D1A8581EB5A727673A2441EE";
const A_PRIV: &str = "60975527035CF2AD1989806F0407210BC81EDC04E2762A56AFD529DDDA2D4393";
const B_PRIV: &str = "E487CB59D31AC550471E81F00F6928E01DDA08E974A004F49E61F5D105284D20";

fn big(h: &str) -> BigUint {
    BigUint::parse_bytes(h.as_bytes(), 16).unwrap()
}

fn unhex(h: &str) -> Vec<u8> {
    hex::decode(h).unwrap()
}

#[test]
fn rfc5054_test_vector() {
    let g = SrpGroup::rfc5054_1024().with_hash(HashAlg::Sha1);
    let salt = unhex(SALT);
    let (a, b) = (big(A_PRIV), big(B_PRIV));

    assert_eq!(g.k(), big("7556aa045aef2cdd07abaf0f665c3e818913186f"));
    let x = g.x(&salt, "alice", "password123");
    assert_eq!(x, big("94b7555aabe9127cc58ccf4993db6cf84d16c124"));
    let v = g.verifier(&x);
    assert_eq!(v, big("7e273de8696ffc4f4e337d05b4b375beb0dde1569e8fa00a9886d8129bada1f1822223ca1a605b530e379ba4729fdc59f105b4787e5186f5c671085a1447b52a48cf1970b4fb6f8400bbf4cebfbb168152e08ab5ea53d15c1aff87b2b9da6e04e058ad51cc72bfc9033b564e26480d78e955a5e29e7ab245db2be315e2099afb"));
    let a_pub = g.client_public(&a);
    assert_eq!(a_pub, big("61d5e490f6f1b79547b0704c436f523dd0e560f0c64115bb72557ec44352e8903211c04692272d8b2d1a5358a2cf1b6e0bfcf99f921530ec8e39356179eae45e42ba92aeaced825171e1e8b9af6d9c03e1327f44be087ef06530e69f66615261eef54073ca11cf5858f0edfdfe15efeab349ef5d76988a3672fac47b0769447b"));
    let b_pub = g.server_public(&b, &v);
    assert_eq!(b_pub, big("bd0c61512c692c0cb6d041fa01bb152d4916a1e77af46ae105393011baf38964dc46a0670dd125b95a981652236f99d9b681cbf87837ec996c6da04453728610d0c6ddb58b318885d7d82c7f8deb75ce7bd4fbaa37089e6f9c6059f388838e7a00030b331eb76840910440b1b27aaeaeeb4012b7d7665238a8e3fb004b117b58"));
    let u = g.u(&a_pub, &b_pub);
    assert_eq!(u, big("ce38b9593487da98554ed47d70a7ae5f462ef019"));

    let premaster = big("b0dc82babcf30674ae450c0287745e7990a3381f63b387aaf271a10d233861e359b48220f7c4693c9ae12b0a6f67809f0876e2d013800d6c41bb59b6d5979b5c00a172b4a2a5903a0bdcaf8a709585eb2afafa8f3499b200210dcc1f10eb33943cd67fc88a2f39a4be5bec4ec0a3212dc346d7e474b29ede8a469ffeca686e5a");
    assert_eq!(g.client_premaster(&b_pub, &a, &x, &u), premaster);
    assert_eq!(g.server_premaster(&a_pub, &v, &u, &b), premaster);

    let key = g.session_key(&premaster);
    assert_eq!(hex::encode(&key), "017eefa1cefc5c2e626e21598987f31e0f1b11bb");
    let m1 = g.client_evidence(&a_pub, &b_pub, &key);
    assert_eq!(hex::encode(&m1), "7c1605558a4e7a5ae79a7f254cb6d04f72608044");
    assert_eq!(hex::encode(g.server_evidence(&a_pub, &m1, &key)), "bdad4993ffa5d60fd0da4929c5edb8d9e887e69c");
}

/// Hands out fixed bytes, so a handshake uses a chosen ephemeral exponent.
struct FixedRng(Vec<u8>);

impl RngCore for FixedRng {
    fn next_u32(&mut self) -> u32 {
        unimplemented!()
    }
    fn next_u64(&mut self) -> u64 {
        unimplemented!()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        assert!(self.0.len() >= dest.len(), "fixed bytes exhausted");
        let rest = self.0.split_off(dest.len());
        dest.copy_from_slice(&self.0);
        self.0 = rest;
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

impl CryptoRng for FixedRng {}

fn pair() -> (Endpoint, Endpoint) {
    let net = SimNetwork::new(0);
    let acc = net.node("S").listen(&Address::sim("S", 1)).unwrap();
    let c = net.node("C").connect(&Address::sim("S", 1)).unwrap();
    (c, acc.accept(None).unwrap())
}

fn registry_with(g: &SrpGroup, user: &str, pw: &str, salt: &[u8]) -> Registry {
    let mut r = Registry::new();
    r.insert(register_with_salt(g, user, pw, salt).unwrap());
    r
}

#[test]
fn fixed_ephemerals_give_the_expected_sha256_key() {
    let g = SrpGroup::rfc5054_1024();
    let reg = registry_with(&g, "alice", "password123", &unhex(SALT));
    let (c, s) = pair();
    let g2 = g.clone();
    let server = std::thread::spawn(move || server_handshake_with(s, &g2, &reg, &mut FixedRng(unhex(B_PRIV))));
    let client = client_handshake_with(c, &g, "alice", "password123", &mut FixedRng(unhex(A_PRIV))).unwrap();
    let server = server.join().unwrap().unwrap();
    let want = "febac740e997507c1c7df7690bac49a97f84ecda99ceb047c575b58e160c477b";
    assert_eq!(hex::encode(client.session_key()), want);
    assert_eq!(hex::encode(server.session_key()), want);
}

fn handshake(reg: Registry, user: &str, pw: &str) -> (Result<Vec<u8>, SrpError>, Result<Vec<u8>, SrpError>) {
    let g = SrpGroup::rfc5054_1024();
    let (c, s) = pair();
    let g2 = g.clone();
    let server = std::thread::spawn(move || {
        server_handshake(s, &g2, &reg).map(|mut ch| {
            let f = ch.secure_recv().unwrap();
            ch.secure_send(&f).unwrap();
            ch.session_key().to_vec()
        })
    });
    let client = client_handshake(c, &g, user, pw).map(|mut ch| {
        let f = Frame::new(Tag::Data, b"echo me".to_vec());
        ch.secure_send(&f).unwrap();
        assert_eq!(ch.secure_recv().unwrap(), f);
        ch.session_key().to_vec()
    });
    (client, server.join().unwrap())
}

fn credentials(rng: &mut ChaCha8Rng) -> (String, String, Vec<u8>) {
    let user = format!("user{}", rng.next_u32());
    let pw = format!("pw-{:x}", rng.next_u64());
    let mut salt = vec![0u8; 16];
    rng.fill_bytes(&mut salt);
    (user, pw, salt)
}

#[test]
fn randomized_handshakes_agree_on_the_key() {
    let g = SrpGroup::rfc5054_1024();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..40 {
        let (user, pw, salt) = credentials(&mut rng);
        let (c, s) = handshake(registry_with(&g, &user, &pw, &salt), &user, &pw);
        assert_eq!(c.unwrap(), s.unwrap());
    }
}

#[test]
fn wrong_passwords_fail_on_both_sides() {
    let g = SrpGroup::rfc5054_1024();
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..40 {
        let (user, pw, salt) = credentials(&mut rng);
        let (c, s) = handshake(registry_with(&g, &user, &pw, &salt), &user, &format!("{pw}!"));
        assert!(matches!(c, Err(SrpError::AuthFailed)), "{c:?}");
        assert!(matches!(s, Err(SrpError::AuthFailed)), "{s:?}");
    }
}

fn msg(sub: u8, fields: &[&[u8]]) -> Frame {
    let mut p = vec![sub];
    for f in fields {
        p.extend_from_slice(&(f.len() as u16).to_be_bytes());
        p.extend_from_slice(f);
    }
    Frame::new(Tag::Data, p)
}

fn fields(f: &Frame) -> Vec<Vec<u8>> {
    let mut rest = &f.payload[1..];
    let mut out = Vec::new();
    while !rest.is_empty() {
        let len = u16::from_be_bytes([rest[0], rest[1]]) as usize;
        out.push(rest[2..2 + len].to_vec());
        rest = &rest[2 + len..];
    }
    out
}

/// Play the client side by hand against a server handshake, sending `a_pub`
/// and the evidence `m1(salt, B)`.
fn raw_client(reg: Registry, a_pub: BigUint, m1: impl FnOnce(&[u8], &BigUint) -> Vec<u8>) -> Result<(), SrpError> {
    let g = SrpGroup::rfc5054_1024();
    let (c, s) = pair();
    let server = std::thread::spawn(move || server_handshake(s, &g, &reg).map(drop));
    c.send_frame(&msg(1, &[b"alice"])).unwrap();
    let reply = fields(&c.recv_frame().unwrap());
    let ev = m1(&reply[0], &BigUint::from_bytes_be(&reply[1]));
    c.send_frame(&msg(3, &[&a_pub.to_bytes_be()])).unwrap();
    let _ = c.send_frame(&msg(4, &[&ev]));
    server.join().unwrap()
}

#[test]
fn replayed_handshake_is_rejected() {
    let g = SrpGroup::rfc5054_1024();
    let reg = registry_with(&g, "alice", "password123", &unhex(SALT));
    let a = big(A_PRIV);
    let a_pub = g.client_public(&a);

    let recorded = std::sync::Mutex::new(Vec::new());
    let honest = raw_client(reg.clone(), a_pub.clone(), |salt, b_pub| {
        let x = g.x(salt, "alice", "password123");
        let u = g.u(&a_pub, b_pub);
        let key = g.session_key(&g.client_premaster(b_pub, &a, &x, &u));
        let m1 = g.client_evidence(&a_pub, b_pub, &key);
        *recorded.lock().unwrap() = m1.clone();
        m1
    });
    assert!(honest.is_ok(), "{honest:?}");

    let m1 = recorded.into_inner().unwrap();
    let replay = raw_client(reg, a_pub, move |_, _| m1);
    assert!(matches!(replay, Err(SrpError::AuthFailed)), "{replay:?}");
}

#[test]
fn degenerate_client_values_are_rejected() {
    let g = SrpGroup::rfc5054_1024();
    let reg = registry_with(&g, "alice", "password123", &unhex(SALT));
    for a_pub in [BigUint::from(0u32), g.n.clone(), &g.n * 2u32] {
        let r = raw_client(reg.clone(), a_pub, |_, _| vec![0; 32]);
        assert!(matches!(r, Err(SrpError::IllegalParameter(_))), "{r:?}");
    }
}

#[test]
fn degenerate_server_values_are_rejected() {
    let g = SrpGroup::rfc5054_1024();
    for b_pub in [BigUint::from(0u32), g.n.clone(), &g.n * 3u32] {
        let (c, s) = pair();
        let server = std::thread::spawn(move || {
            s.recv_frame().unwrap();
            s.send_frame(&msg(2, &[&[7u8; 16], &b_pub.to_bytes_be()])).unwrap();
        });
        let r = client_handshake(c, &g, "alice", "password123").map(drop);
        assert!(matches!(r, Err(SrpError::IllegalParameter(_))), "{r:?}");
        server.join().unwrap();
    }
}

/// An established channel pair whose fourth client frame, the first one
/// after the handshake, goes through `rewrite`.
fn tapped_channels(
    rewrite: fn(&Frame) -> TapDecision,
) -> (secure_session::srp::SecureChannel, secure_session::srp::SecureChannel, AttackerHandle) {
    let g = SrpGroup::rfc5054_1024();
    let net = SimNetwork::new(0);
    let mut seen = 0;
    let handle = net.attach_attacker(Box::new(move |m: &FrameMeta, f: &Frame| {
        if m.from_side != 0 {
            return TapDecision::forward();
        }
        seen += 1;
        if seen == 4 {
            rewrite(f)
        } else {
            TapDecision::forward()
        }
    }));
    let acc = net.node("S").listen(&Address::sim("S", 1)).unwrap();
    let c = net.node("C").connect(&Address::sim("S", 1)).unwrap();
    let s = acc.accept(None).unwrap();
    let reg = registry_with(&g, "alice", "password123", &unhex(SALT));
    let g2 = g.clone();
    let server = std::thread::spawn(move || server_handshake(s, &g2, &reg).unwrap());
    let client = client_handshake(c, &g, "alice", "password123").unwrap();
    (client, server.join().unwrap(), handle)
}

#[test]
fn flipped_ciphertext_bit_fails_integrity() {
    let (mut c, mut s, _) = tapped_channels(|f| {
        let mut p = f.payload.clone();
        p[0] ^= 1;
        TapDecision::replace(Frame::new(f.tag, p), false)
    });
    c.secure_send(&Frame::new(Tag::Data, b"hi".to_vec())).unwrap();
    assert!(matches!(s.secure_recv(), Err(TransportError::IntegrityFailure)));
}

#[test]
fn replayed_ciphertext_fails_integrity() {
    let (mut c, mut s, tap) = tapped_channels(|_| TapDecision::copy());
    let hi = Frame::new(Tag::Data, b"hi".to_vec());
    c.secure_send(&hi).unwrap();
    assert_eq!(s.secure_recv().unwrap(), hi);
    let captured = tap.try_capture().expect("tap copied the frame");
    tap.inject(captured.meta.conn, 1, captured.frame).unwrap();
    assert!(matches!(s.secure_recv(), Err(TransportError::IntegrityFailure)));
}
