//! SRP-6a password authentication (RFC 5054 groups and formulas) and the
//! keyed channel it establishes.

mod channel;
mod registry;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{CryptoRng, RngCore};
use sha1::Sha1;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::transport::TransportError;

pub use channel::{client_handshake, client_handshake_with, server_handshake, server_handshake_with, SecureChannel};
pub use registry::Registry;

const N_1024: &str = "EEAF0AB9ADB38DD69C33F80AFA8FC5E86072618775FF3C0B9EA2314C9C256576D674DF7496EA81D3383B4813D692C6E0E0D5D8E250B98BE48E495C1D6089DAD15DC7D7B46154D6B6CE8EF4AD69B15D4982559B297BCF1885C529F566660E57EC68EDBC3C05726CC02FD4CBF4976EAA9AFD5138FE8376435B9FC61D2FC0EB06E3";
const N_2048: &str = "AC6BDB41324A9A9BF166DE5E1389582FAF72B6651987EE07FC3192943DB56050A37329CBB4A099ED8193E0757767A13DD52312AB4B03310DCD7F48A9DA04FD50E8083969EDB767B0CF6095179A163AB3661A05FBD5FAAAE82918A9962F0B93B855F97993EC975EEAA80D740ADBF4FF747359D041D5C33EA71D281E446B14773BCA97B43A23FB801676BD207A436C6481F1D2B9078717461A5B9D32E688F87748544523B524B0D57D5EA77A2775D2ECFA032CFBDBF52FB3786160279004E57AE6AF874E7303CE53299CCC041C7BC308D82A5698F3A8D0C38271AE35F8E9DBFBB694B5C803D89F7AE435DE236D525F54759B65E372FCD68EF20FA7111F9E4AFF73";

/// Length of freshly generated salts, in bytes.
pub const SALT_LEN: usize = 16;
const EPHEMERAL_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum SrpError {
    #[error("username and password must be non-empty")]
    EmptyCredentials,
    #[error("authentication failed")]
    AuthFailed,
    #[error("illegal SRP parameter: {0}")]
    IllegalParameter(&'static str),
    #[error("unknown SRP group `{0}`")]
    UnknownGroup(String),
    #[error("malformed handshake message: {0}")]
    Protocol(String),
    #[error("registry: {0}")]
    Registry(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HashAlg {
    Sha1,
    Sha256,
}

impl HashAlg {
    pub fn digest(self, parts: &[&[u8]]) -> Vec<u8> {
        match self {
            HashAlg::Sha1 => {
                let mut h = Sha1::new();
                parts.iter().for_each(|p| h.update(p));
                h.finalize().to_vec()
            }
            HashAlg::Sha256 => {
                let mut h = Sha256::new();
                parts.iter().for_each(|p| h.update(p));
                h.finalize().to_vec()
            }
        }
    }
}

/// Group parameters: a safe prime `n` and generator `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrpGroup {
    pub name: String,
    pub n: BigUint,
    pub g: BigUint,
    pub hash: HashAlg,
}

impl SrpGroup {
    pub const DEFAULT: &'static str = "rfc5054-1024";

    /// `rfc5054-1024` or `rfc5054-2048`, hashed with SHA-256.
    pub fn by_name(name: &str) -> Result<SrpGroup, SrpError> {
        let hex = match name {
            "rfc5054-1024" => N_1024,
            "rfc5054-2048" => N_2048,
            _ => return Err(SrpError::UnknownGroup(name.to_string())),
        };
        Ok(SrpGroup {
            name: name.to_string(),
            n: BigUint::parse_bytes(hex.as_bytes(), 16).expect("group constant"),
            g: BigUint::from(2u32),
            hash: HashAlg::Sha256,
        })
    }

    pub fn rfc5054_1024() -> SrpGroup {
        SrpGroup::by_name("rfc5054-1024").unwrap()
    }

    pub fn with_hash(mut self, hash: HashAlg) -> SrpGroup {
        self.hash = hash;
        self
    }

    pub fn n_len(&self) -> usize {
        self.n.bits().div_ceil(8) as usize
    }

    /// Big-endian bytes left-padded to the length of `n`.
    pub fn pad(&self, x: &BigUint) -> Vec<u8> {
        let b = x.to_bytes_be();
        let mut out = vec![0u8; self.n_len().saturating_sub(b.len())];
        out.extend_from_slice(&b);
        out
    }

    fn h_int(&self, parts: &[&[u8]]) -> BigUint {
        BigUint::from_bytes_be(&self.hash.digest(parts))
    }

    /// k = H(N | PAD(g))
    pub fn k(&self) -> BigUint {
        self.h_int(&[&self.n.to_bytes_be(), &self.pad(&self.g)])
    }

    /// x = H(s | H(I | ":" | P))
    pub fn x(&self, salt: &[u8], username: &str, password: &str) -> BigUint {
        let inner = self.hash.digest(&[username.as_bytes(), b":", password.as_bytes()]);
        self.h_int(&[salt, &inner])
    }

    pub fn verifier(&self, x: &BigUint) -> BigUint {
        self.g.modpow(x, &self.n)
    }

    /// u = H(PAD(A) | PAD(B))
    pub fn u(&self, a_pub: &BigUint, b_pub: &BigUint) -> BigUint {
        self.h_int(&[&self.pad(a_pub), &self.pad(b_pub)])
    }

    pub fn client_public(&self, a: &BigUint) -> BigUint {
        self.g.modpow(a, &self.n)
    }

    /// B = (k*v + g^b) % N
    pub fn server_public(&self, b: &BigUint, v: &BigUint) -> BigUint {
        (self.k() * v + self.g.modpow(b, &self.n)) % &self.n
    }

    /// S = (B - k*g^x) ^ (a + u*x) % N
    pub fn client_premaster(&self, b_pub: &BigUint, a: &BigUint, x: &BigUint, u: &BigUint) -> BigUint {
        let kgx = (self.k() * self.g.modpow(x, &self.n)) % &self.n;
        let base = ((b_pub % &self.n) + &self.n - kgx) % &self.n;
        base.modpow(&(a + u * x), &self.n)
    }

    /// S = (A * v^u) ^ b % N
    pub fn server_premaster(&self, a_pub: &BigUint, v: &BigUint, u: &BigUint, b: &BigUint) -> BigUint {
        ((a_pub * v.modpow(u, &self.n)) % &self.n).modpow(b, &self.n)
    }

    /// K = H(S)
    pub fn session_key(&self, s: &BigUint) -> Vec<u8> {
        self.hash.digest(&[&s.to_bytes_be()])
    }

    /// M1 = H(PAD(A) | PAD(B) | K)
    pub fn client_evidence(&self, a_pub: &BigUint, b_pub: &BigUint, key: &[u8]) -> Vec<u8> {
        self.hash.digest(&[&self.pad(a_pub), &self.pad(b_pub), key])
    }

    /// M2 = H(PAD(A) | M1 | K)
    pub fn server_evidence(&self, a_pub: &BigUint, m1: &[u8], key: &[u8]) -> Vec<u8> {
        self.hash.digest(&[&self.pad(a_pub), m1, key])
    }

    fn is_zero_mod_n(&self, x: &BigUint) -> bool {
        (x % &self.n).is_zero()
    }

    fn random_exponent<R: RngCore + CryptoRng + ?Sized>(&self, rng: &mut R) -> BigUint {
        loop {
            let mut bytes = [0u8; EPHEMERAL_LEN];
            rng.fill_bytes(&mut bytes);
            let e = BigUint::from_bytes_be(&bytes);
            if !e.is_zero() {
                return e;
            }
        }
    }
}

/// What a server stores per user: never the password itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifierRecord {
    pub username: String,
    pub salt: Vec<u8>,
    pub verifier: BigUint,
    pub group: String,
}

pub fn register(group: &SrpGroup, username: &str, password: &str) -> Result<VerifierRecord, SrpError> {
    let mut salt = vec![0u8; SALT_LEN];
    rand::rngs::OsRng.fill_bytes(&mut salt);
    register_with_salt(group, username, password, &salt)
}

pub fn register_with_salt(
    group: &SrpGroup,
    username: &str,
    password: &str,
    salt: &[u8],
) -> Result<VerifierRecord, SrpError> {
    if username.is_empty() || password.is_empty() {
        return Err(SrpError::EmptyCredentials);
    }
    let x = group.x(salt, username, password);
    Ok(VerifierRecord {
        username: username.to_string(),
        salt: salt.to_vec(),
        verifier: group.verifier(&x),
        group: group.name.clone(),
    })
}
