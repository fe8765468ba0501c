//! Scripted in-process console server for tests and dry runs.
//!
//! The `Simulate` responder rebuilds the layout from the entity commands it
//! receives and answers the query with counts from the native simulator, so
//! the remote backend can be checked against the native one end to end.

use std::io::Write;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::error::RconError;
use crate::grid::{Cell, Matrix, ProblemMatrix, SolutionMatrix, WALL_THICKNESS};
use crate::sim::{simulate, SimConfig};

use super::commands::{match_template, parse_entity_command, templates};
use super::packet::{Packet, MAX_BODY, SERVERDATA_AUTH_RESPONSE, SERVERDATA_RESPONSE_VALUE};

#[derive(Debug, Clone)]
pub enum Behavior {
    /// Accepts this password and rejects any other with id -1.
    Password(String),
    /// Reads the auth packet and never answers.
    Silent,
}

#[derive(Debug, Clone)]
pub enum Responder {
    /// Every query gets this text.
    Fixed(String),
    /// Counts from the native simulator for the layout built so far.
    Simulate,
}

pub struct FakeServer {
    addr: SocketAddr,
    _accept_loop: JoinHandle<()>,
}

impl FakeServer {
    /// Serves connections one at a time until the process exits.
    pub fn spawn(behavior: Behavior, responder: Responder) -> std::io::Result<FakeServer> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let _ = serve(stream, &behavior, &responder);
            }
        });
        Ok(FakeServer {
            addr,
            _accept_loop: handle,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }
}

struct World {
    size: usize,
    codes: Vec<i8>,
    config: SimConfig,
}

impl World {
    fn new(size: usize) -> World {
        let side = size + 2 * WALL_THICKNESS as usize;
        World {
            size,
            codes: vec![0; side * side],
            config: SimConfig::default(),
        }
    }

    fn counts(&self) -> Option<(u32, u32)> {
        let side = self.size + 2 * WALL_THICKNESS as usize;
        let problem_codes: Vec<i8> = self.codes.iter().map(|&c| c.min(0)).collect();
        let problem = ProblemMatrix::from_matrix(&Matrix::new(side, side, problem_codes)).ok()?;
        let mut solution = SolutionMatrix::empty(self.size);
        let w = WALL_THICKNESS as usize;
        for y in 0..self.size {
            for x in 0..self.size {
                let code = self.codes[(y + w) * side + x + w];
                if code > 0 {
                    solution.set_index(y * self.size + x, Cell::from_code(code)?);
                }
            }
        }
        let r = simulate(&problem, &solution, &self.config).ok()?;
        Some((r.items_in, r.items_out))
    }
}

fn serve(mut stream: TcpStream, behavior: &Behavior, responder: &Responder) -> Result<(), RconError> {
    let auth = Packet::read_from(&mut stream)?;
    match behavior {
        Behavior::Silent => {
            // Hold the connection open without replying until the client goes away.
            stream.set_read_timeout(Some(Duration::from_secs(30)))?;
            let _ = Packet::read_from(&mut stream);
            return Ok(());
        }
        Behavior::Password(pw) => {
            let ok = auth.body == pw.as_bytes();
            let id = if ok { auth.id } else { -1 };
            stream.write_all(&Packet::new(id, SERVERDATA_AUTH_RESPONSE, "")?.encode())?;
            if !ok {
                return Ok(());
            }
        }
    }

    let t = templates();
    let mut world = World::new(1);
    loop {
        let Ok(p) = Packet::read_from(&mut stream) else { return Ok(()) };
        if p.ptype == SERVERDATA_RESPONSE_VALUE {
            stream.write_all(&Packet::new(p.id, SERVERDATA_RESPONSE_VALUE, "")?.encode())?;
            continue;
        }
        let cmd = p.body_str();
        let numbers = |template: &str| -> Option<Vec<u32>> {
            match_template(template, &cmd)?.iter().map(|(_, v)| v.parse().ok()).collect()
        };
        let reply = if let Some(size) = numbers(&t.clear) {
            world = World::new(size[0] as usize);
            String::new()
        } else if let Some(nums) = numbers(&t.run) {
            if let Ok(c) = SimConfig::new(nums[0], nums[1]) {
                world.config = c;
            }
            String::new()
        } else if cmd == t.query {
            match responder {
                Responder::Fixed(s) => s.clone(),
                Responder::Simulate => match world.counts() {
                    Some((i, o)) => format!("i={i};o={o}"),
                    None => "error: bad layout".to_string(),
                },
            }
        } else if let Some((pos, cell)) = parse_entity_command(&cmd) {
            let side = (world.size + 2 * WALL_THICKNESS as usize) as i32;
            let (x, y) = (pos.x + WALL_THICKNESS, pos.y + WALL_THICKNESS);
            if (0..side).contains(&x) && (0..side).contains(&y) {
                world.codes[(y * side + x) as usize] = cell.code();
            }
            String::new()
        } else {
            format!("unknown command: {cmd}")
        };
        // Split long replies the way real servers do.
        let bytes = reply.into_bytes();
        let chunks: Vec<&[u8]> = if bytes.is_empty() {
            vec![&[]]
        } else {
            bytes.chunks(MAX_BODY).collect()
        };
        for chunk in chunks {
            stream.write_all(&Packet::new(p.id, SERVERDATA_RESPONSE_VALUE, chunk)?.encode())?;
        }
    }
}
