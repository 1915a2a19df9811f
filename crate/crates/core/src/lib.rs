//! Session-typed channels over a pluggable transport, with SRP-authenticated
//! secure channels, credential-checked session delegation and a bounded model
//! checker for the delegation protocols.

pub mod checker;
pub mod delegation;
pub mod scenario;
pub mod session;
pub mod srp;
pub mod transcript;
pub mod transport;
pub mod types;
