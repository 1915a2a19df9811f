use std::fmt::{self, Write};

use super::{MessageType, SessionType, Side};

/// Render a type as a `protocol p { ... }` declaration.
pub fn render_protocol(t: &SessionType) -> String {
    render_named("p", t)
}

pub fn render_named(name: &str, t: &SessionType) -> String {
    format!("protocol {name} {{ {t} }}")
}

fn write_seq(f: &mut fmt::Formatter<'_>, t: &SessionType) -> fmt::Result {
    match t {
        SessionType::End => Ok(()),
        SessionType::Begin(side, body) => {
            f.write_str(match side {
                Side::Client => "cbegin",
                Side::Server => "sbegin",
            })?;
            write_cont(f, body)
        }
        SessionType::Send(m, k) => {
            write!(f, "!<{m}>")?;
            write_cont(f, k)
        }
        SessionType::Recv(m, k) => {
            write!(f, "?({m})")?;
            write_cont(f, k)
        }
        SessionType::OutIter(b, k) | SessionType::InIter(b, k) => {
            f.write_char(if matches!(t, SessionType::OutIter(..)) { '!' } else { '?' })?;
            f.write_char('[')?;
            write_seq(f, b)?;
            f.write_str("]*")?;
            write_cont(f, k)
        }
        SessionType::Select(bs) | SessionType::Offer(bs) => {
            f.write_str(if matches!(t, SessionType::Select(_)) { "!{" } else { "?{" })?;
            for (i, (label, body)) in bs.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{label}: ")?;
                write_seq(f, body)?;
            }
            f.write_char('}')
        }
    }
}

fn write_cont(f: &mut fmt::Formatter<'_>, k: &SessionType) -> fmt::Result {
    if k.is_end() {
        Ok(())
    } else {
        f.write_char('.')?;
        write_seq(f, k)
    }
}

impl fmt::Display for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_end() {
            f.write_str("end")
        } else {
            write_seq(f, self)
        }
    }
}

impl fmt::Display for MessageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MessageType::Base(name) => f.write_str(name),
            MessageType::Session(t) => write!(f, "{t}"),
        }
    }
}
