use std::io::Write;
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::time::Duration;

use crate::error::RconError;

use super::packet::{
    Packet, SERVERDATA_AUTH, SERVERDATA_AUTH_RESPONSE, SERVERDATA_EXECCOMMAND,
    SERVERDATA_RESPONSE_VALUE,
};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

/// One authenticated connection. Requests are strictly serialized.
#[derive(Debug)]
pub struct Session {
    stream: TcpStream,
    next_id: i32,
}

impl Session {
    pub fn connect(
        addr: impl ToSocketAddrs,
        password: &str,
        timeout: Duration,
    ) -> Result<Session, RconError> {
        let mut last = None;
        for a in addr.to_socket_addrs()? {
            match Self::connect_one(a, password, timeout) {
                Ok(s) => return Ok(s),
                Err(e @ (RconError::Credentials | RconError::Timeout)) => return Err(e),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| RconError::Unexpected("address resolved to nothing".into())))
    }

    fn connect_one(addr: SocketAddr, password: &str, timeout: Duration) -> Result<Session, RconError> {
        let stream = TcpStream::connect_timeout(&addr, timeout).map_err(|e| match e.kind() {
            std::io::ErrorKind::TimedOut => RconError::Timeout,
            _ => RconError::Io(e),
        })?;
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        stream.set_nodelay(true)?;
        let mut session = Session { stream, next_id: 1 };
        session.authenticate(password)?;
        Ok(session)
    }

    fn take_id(&mut self) -> i32 {
        let id = self.next_id;
        // Wrap before reaching -1, which the protocol reserves for failures.
        self.next_id = if self.next_id >= i32::MAX - 1 { 1 } else { self.next_id + 1 };
        id
    }

    fn send(&mut self, packet: &Packet) -> Result<(), RconError> {
        self.stream.write_all(&packet.encode()).map_err(|e| match e.kind() {
            std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut => RconError::Timeout,
            _ => RconError::Io(e),
        })
    }

    fn authenticate(&mut self, password: &str) -> Result<(), RconError> {
        let id = self.take_id();
        self.send(&Packet::new(id, SERVERDATA_AUTH, password)?)?;
        loop {
            let reply = Packet::read_from(&mut self.stream)?;
            match (reply.ptype, reply.id) {
                // Some servers send an empty value packet ahead of the verdict.
                (SERVERDATA_RESPONSE_VALUE, _) => continue,
                (SERVERDATA_AUTH_RESPONSE, -1) => return Err(RconError::Credentials),
                (SERVERDATA_AUTH_RESPONSE, rid) if rid == id => return Ok(()),
                (t, rid) => {
                    return Err(RconError::Unexpected(format!(
                        "auth reply type {t} id {rid}, expected id {id}"
                    )))
                }
            }
        }
    }

    /// Runs one console command and returns its full response.
    ///
    /// Long responses arrive split across packets; an empty value packet sent
    /// right after the command marks the end, since the server answers in
    /// order.
    pub fn exec(&mut self, command: &str) -> Result<String, RconError> {
        let id = self.take_id();
        let marker = self.take_id();
        self.send(&Packet::new(id, SERVERDATA_EXECCOMMAND, command)?)?;
        self.send(&Packet::new(marker, SERVERDATA_RESPONSE_VALUE, "")?)?;
        let mut body = Vec::new();
        loop {
            let p = Packet::read_from(&mut self.stream)?;
            if p.ptype != SERVERDATA_RESPONSE_VALUE {
                return Err(RconError::Unexpected(format!("packet type {} during exec", p.ptype)));
            }
            if p.id == id {
                body.extend_from_slice(&p.body);
            } else if p.id == marker {
                break;
            }
            // Anything else is a stale reply to an earlier marker.
        }
        String::from_utf8(body).map_err(|e| RconError::Parse(e.to_string()))
    }
}
