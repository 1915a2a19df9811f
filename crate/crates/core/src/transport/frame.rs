use std::fmt;
use std::io::{self, Read, Write};

use super::TransportError;

/// Largest payload a frame can carry: the length field is 24 bits.
pub const MAX_PAYLOAD: usize = (1 << 24) - 1;

const HEADER_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Tag {
    Data = 0x01,
    Branch = 0x02,
    Iter = 0x03,
    Close = 0x04,
    StartDelegation = 0x05,
    Port = 0x06,
    Ds = 0x07,
    DsAck = 0x08,
    Cred = 0x09,
    Lm = 0x0a,
}

impl Tag {
    pub const ALL: [Tag; 10] = [
        Tag::Data,
        Tag::Branch,
        Tag::Iter,
        Tag::Close,
        Tag::StartDelegation,
        Tag::Port,
        Tag::Ds,
        Tag::DsAck,
        Tag::Cred,
        Tag::Lm,
    ];

    pub fn from_byte(b: u8) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| *t as u8 == b)
    }

    pub fn name(self) -> &'static str {
        match self {
            Tag::Data => "DATA",
            Tag::Branch => "BRANCH",
            Tag::Iter => "ITER",
            Tag::Close => "CLOSE",
            Tag::StartDelegation => "START_DELEGATION",
            Tag::Port => "PORT",
            Tag::Ds => "DS",
            Tag::DsAck => "DSACK",
            Tag::Cred => "CRED",
            Tag::Lm => "LM",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The unit carried by every transport.
///
/// On the wire: one tag byte, a 3-byte big-endian payload length, then the
/// payload.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub tag: Tag,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(tag: Tag, payload: impl Into<Vec<u8>>) -> Frame {
        Frame { tag, payload: payload.into() }
    }

    pub fn empty(tag: Tag) -> Frame {
        Frame { tag, payload: Vec::new() }
    }

    pub fn check_size(&self) -> Result<(), TransportError> {
        if self.payload.len() > MAX_PAYLOAD {
            Err(TransportError::FrameTooLarge(self.payload.len()))
        } else {
            Ok(())
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, TransportError> {
        self.check_size()?;
        let len = self.payload.len() as u32;
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.push(self.tag as u8);
        out.extend_from_slice(&len.to_be_bytes()[1..]);
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Decode one frame from the front of `bytes`, returning it and the number
    /// of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Frame, usize), TransportError> {
        if bytes.len() < HEADER_LEN {
            return Err(TransportError::BadFrame("truncated header".into()));
        }
        let (tag, len) = parse_header(bytes[..HEADER_LEN].try_into().unwrap())?;
        let end = HEADER_LEN + len;
        if bytes.len() < end {
            return Err(TransportError::BadFrame("truncated payload".into()));
        }
        Ok((Frame::new(tag, &bytes[HEADER_LEN..end]), end))
    }
}

fn parse_header(h: [u8; HEADER_LEN]) -> Result<(Tag, usize), TransportError> {
    let tag = Tag::from_byte(h[0]).ok_or_else(|| TransportError::BadFrame(format!("unknown tag 0x{:02x}", h[0])))?;
    let len = u32::from_be_bytes([0, h[1], h[2], h[3]]) as usize;
    Ok((tag, len))
}

pub fn write_frame<W: Write>(mut w: W, f: &Frame) -> Result<(), TransportError> {
    let bytes = f.encode()?;
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Read one frame. A clean end of stream before the header maps to
/// [`TransportError::ChannelClosed`].
pub fn read_frame<R: Read>(mut r: R) -> Result<Frame, TransportError> {
    let mut header = [0u8; HEADER_LEN];
    if let Err(e) = r.read_exact(&mut header) {
        return Err(match e.kind() {
            io::ErrorKind::UnexpectedEof => TransportError::ChannelClosed,
            _ => e.into(),
        });
    }
    let (tag, len) = parse_header(header)?;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => TransportError::BadFrame("truncated payload".into()),
        _ => TransportError::from(e),
    })?;
    Ok(Frame { tag, payload })
}
