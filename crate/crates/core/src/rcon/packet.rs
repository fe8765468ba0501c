use std::io::Read;

use crate::error::RconError;

pub const SERVERDATA_AUTH: i32 = 3;
pub const SERVERDATA_AUTH_RESPONSE: i32 = 2;
pub const SERVERDATA_EXECCOMMAND: i32 = 2;
pub const SERVERDATA_RESPONSE_VALUE: i32 = 0;

pub const MAX_BODY: usize = 4086;
/// id + type + two terminators.
const MIN_SIZE: i32 = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub id: i32,
    pub ptype: i32,
    pub body: Vec<u8>,
}

impl Packet {
    pub fn new(id: i32, ptype: i32, body: impl Into<Vec<u8>>) -> Result<Packet, RconError> {
        let body = body.into();
        if body.contains(&0) {
            return Err(RconError::NulInBody);
        }
        if body.len() > MAX_BODY {
            return Err(RconError::BodyTooLarge(body.len()));
        }
        Ok(Packet { id, ptype, body })
    }

    pub fn body_str(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }

    /// Wire bytes: little-endian size, id, type, then body and two NULs.
    pub fn encode(&self) -> Vec<u8> {
        let size = MIN_SIZE + self.body.len() as i32;
        let mut out = Vec::with_capacity(4 + size as usize);
        out.extend_from_slice(&size.to_le_bytes());
        out.extend_from_slice(&self.id.to_le_bytes());
        out.extend_from_slice(&self.ptype.to_le_bytes());
        out.extend_from_slice(&self.body);
        out.extend_from_slice(&[0, 0]);
        out
    }

    /// Decodes exactly one packet occupying all of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Packet, RconError> {
        let (packet, used) = decode_prefix(bytes)?;
        if used != bytes.len() {
            return Err(RconError::SizeMismatch {
                size: (bytes.len() - 4) as i32,
            });
        }
        Ok(packet)
    }

    pub fn read_from<R: Read>(reader: &mut R) -> Result<Packet, RconError> {
        let mut head = [0u8; 4];
        reader.read_exact(&mut head).map_err(io_error)?;
        let size = checked_size(i32::from_le_bytes(head))?;
        let mut rest = vec![0u8; size];
        reader.read_exact(&mut rest).map_err(io_error)?;
        parse_payload(&rest)
    }
}

fn io_error(e: std::io::Error) -> RconError {
    match e.kind() {
        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut => RconError::Timeout,
        _ => RconError::Io(e),
    }
}

fn checked_size(size: i32) -> Result<usize, RconError> {
    if !(MIN_SIZE..=MIN_SIZE + MAX_BODY as i32).contains(&size) {
        return Err(RconError::SizeMismatch { size });
    }
    Ok(size as usize)
}

/// Decodes the packet at the start of `bytes`, returning it with the number
/// of bytes consumed.
pub fn decode_prefix(bytes: &[u8]) -> Result<(Packet, usize), RconError> {
    if bytes.len() < 4 {
        return Err(RconError::ShortBuffer {
            need: 4,
            have: bytes.len(),
        });
    }
    let size = checked_size(i32::from_le_bytes(bytes[..4].try_into().expect("4 bytes")))?;
    let total = 4 + size;
    if bytes.len() < total {
        return Err(RconError::ShortBuffer {
            need: total,
            have: bytes.len(),
        });
    }
    Ok((parse_payload(&bytes[4..total])?, total))
}

/// `payload` is everything after the size field.
fn parse_payload(payload: &[u8]) -> Result<Packet, RconError> {
    let n = payload.len();
    if payload[n - 2..] != [0, 0] {
        return Err(RconError::MissingTerminators);
    }
    let id = i32::from_le_bytes(payload[0..4].try_into().expect("4 bytes"));
    let ptype = i32::from_le_bytes(payload[4..8].try_into().expect("4 bytes"));
    Packet::new(id, ptype, &payload[8..n - 2])
}
