use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::RngCore;

use super::{SrpError, SrpGroup, VerifierRecord, SALT_LEN};

/// Username to verifier map, persisted one record per line as
/// `username:salt_hex:verifier_hex:group_name`. Blank lines and lines starting
/// with `#` are ignored.
#[derive(Clone)]
pub struct Registry {
    records: BTreeMap<String, VerifierRecord>,
    // Seeds the stand-in salt and verifier handed out for unknown users.
    secret: [u8; 32],
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry").field("users", &self.records.keys().collect::<Vec<_>>()).finish()
    }
}

impl Default for Registry {
    fn default() -> Self {
        let mut secret = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut secret);
        Registry { records: BTreeMap::new(), secret }
    }
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    pub fn insert(&mut self, rec: VerifierRecord) {
        self.records.insert(rec.username.clone(), rec);
    }

    pub fn get(&self, username: &str) -> Option<&VerifierRecord> {
        self.records.get(username)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn usernames(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    /// Salt and verifier for `username` in `group`. Unknown users (or users
    /// registered under another group) get a deterministic stand-in so the
    /// handshake proceeds identically and fails only at evidence checking.
    pub fn lookup(&self, group: &SrpGroup, username: &str) -> (Vec<u8>, BigUint) {
        match self.records.get(username) {
            Some(r) if r.group == group.name => (r.salt.clone(), r.verifier.clone()),
            _ => {
                let h = group.hash;
                let mut salt = h.digest(&[&self.secret, b"salt", username.as_bytes()]);
                salt.truncate(SALT_LEN);
                let x = BigUint::from_bytes_be(&h.digest(&[&self.secret, b"x", username.as_bytes()]));
                (salt, group.verifier(&x))
            }
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Registry, SrpError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SrpError::Registry(format!("{}: {e}", path.as_ref().display())))?;
        text.parse()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SrpError> {
        std::fs::write(path.as_ref(), self.to_string())
            .map_err(|e| SrpError::Registry(format!("{}: {e}", path.as_ref().display())))
    }
}

impl FromStr for Registry {
    type Err = SrpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut reg = Registry::new();
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| SrpError::Registry(format!("line {}: {what}", i + 1));
            let fields: Vec<&str> = line.split(':').collect();
            let [user, salt, verifier, group] = fields[..] else {
                return Err(bad("expected username:salt_hex:verifier_hex:group_name"));
            };
            if user.is_empty() {
                return Err(bad("empty username"));
            }
            let salt = hex::decode(salt).map_err(|_| bad("salt is not hex"))?;
            let verifier = BigUint::parse_bytes(verifier.as_bytes(), 16).ok_or_else(|| bad("verifier is not hex"))?;
            SrpGroup::by_name(group)?;
            reg.insert(VerifierRecord { username: user.to_string(), salt, verifier, group: group.to_string() });
        }
        Ok(reg)
    }
}

impl fmt::Display for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.records.values() {
            writeln!(f, "{}:{}:{}:{}", r.username, hex::encode(&r.salt), r.verifier.to_str_radix(16), r.group)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::register;
    use super::*;

    #[test]
    fn persists_and_reloads() {
        let g = SrpGroup::rfc5054_1024();
        let mut reg = Registry::new();
        reg.insert(register(&g, "carol", "pw1").unwrap());
        reg.insert(register(&g, "dave", "pw2").unwrap());
        let text = format!("# demo\n\n{reg}");
        let back: Registry = text.parse().unwrap();
        assert_eq!(back.get("carol"), reg.get("carol"));
        assert_eq!(back.len(), 2);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!("a:b:c".parse::<Registry>().is_err());
        assert!("a:zz:01:rfc5054-1024".parse::<Registry>().is_err());
        assert!("a:00:01:nope".parse::<Registry>().is_err());
    }

    #[test]
    fn unknown_users_get_stable_stand_ins() {
        let g = SrpGroup::rfc5054_1024();
        let reg = Registry::new();
        let (s1, v1) = reg.lookup(&g, "ghost");
        let (s2, v2) = reg.lookup(&g, "ghost");
        assert_eq!((s1.len(), &s1, &v1), (SALT_LEN, &s2, &v2));
        assert_ne!(reg.lookup(&g, "other").0, s1);
    }
}
