//! Policies that run outside this process, spoken to in newline-delimited
//! JSON over a child's stdio, a TCP socket, or an in-process function.
//!
//! Both sides open with `{"type":"hello","proto":1}`. Each decision is one
//! `{"type":"obs", ...observation fields..., "legal_action_ids": [...]}`
//! answered by `{"type":"move","action_id":k}`.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::engine::Observation;
use crate::moves::Move;

use super::{Agent, AgentError};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    Hello {
        proto: u32,
    },
    Obs {
        #[serde(flatten)]
        observation: Box<Observation>,
        legal_action_ids: Vec<u8>,
    },
    Move {
        action_id: u8,
    },
}

impl WireMessage {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("wire messages serialize")
    }

    pub fn parse(line: &str) -> Result<WireMessage, AgentError> {
        serde_json::from_str(line.trim()).map_err(|e| AgentError::Protocol(format!("bad message: {e}")))
    }
}

/// A bidirectional line channel.
pub trait Transport: Send {
    fn send(&mut self, line: &str) -> Result<(), AgentError>;
    fn recv(&mut self) -> Result<String, AgentError>;
}

pub struct ChildProcessTransport {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    timeout: Duration,
}

impl ChildProcessTransport {
    pub fn spawn(command: &[String], timeout: Duration) -> Result<ChildProcessTransport, AgentError> {
        let (program, args) = command.split_first().ok_or_else(|| AgentError::Spawn("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| AgentError::Spawn(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ChildProcessTransport { child, stdin, lines, timeout })
    }
}

impl Transport for ChildProcessTransport {
    fn send(&mut self, line: &str) -> Result<(), AgentError> {
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|_| AgentError::Disconnected)
    }

    fn recv(&mut self) -> Result<String, AgentError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(line) => Ok(line),
            Err(RecvTimeoutError::Timeout) => Err(AgentError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(AgentError::Disconnected),
        }
    }
}

impl Drop for ChildProcessTransport {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct TcpTransport {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    timeout: Duration,
}

impl TcpTransport {
    pub fn connect(addr: &str, timeout: Duration) -> Result<TcpTransport, AgentError> {
        let stream = TcpStream::connect(addr).map_err(|e| AgentError::Spawn(format!("{addr}: {e}")))?;
        TcpTransport::from_stream(stream, timeout)
    }

    pub fn from_stream(stream: TcpStream, timeout: Duration) -> Result<TcpTransport, AgentError> {
        let io = |e: std::io::Error| AgentError::Spawn(e.to_string());
        stream.set_read_timeout(Some(timeout)).map_err(io)?;
        stream.set_nodelay(true).map_err(io)?;
        let writer = stream.try_clone().map_err(io)?;
        Ok(TcpTransport { reader: BufReader::new(stream), writer, timeout })
    }
}

impl Transport for TcpTransport {
    fn send(&mut self, line: &str) -> Result<(), AgentError> {
        writeln!(self.writer, "{line}").map_err(|_| AgentError::Disconnected)
    }

    fn recv(&mut self) -> Result<String, AgentError> {
        let mut line = String::new();
        match self.reader.read_line(&mut line) {
            Ok(0) => Err(AgentError::Disconnected),
            Ok(_) => Ok(line),
            Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                Err(AgentError::Timeout(self.timeout))
            }
            Err(_) => Err(AgentError::Disconnected),
        }
    }
}

type Responder = Box<dyn FnMut(&str) -> Option<String> + Send>;

/// In-process transport: each sent line is answered by a function. A `None`
/// answer behaves like a closed connection.
pub struct FnTransport {
    respond: Responder,
    pending: Option<Option<String>>,
}

impl FnTransport {
    pub fn new(respond: impl FnMut(&str) -> Option<String> + Send + 'static) -> FnTransport {
        FnTransport { respond: Box::new(respond), pending: None }
    }
}

impl Transport for FnTransport {
    fn send(&mut self, line: &str) -> Result<(), AgentError> {
        self.pending = Some((self.respond)(line));
        Ok(())
    }

    fn recv(&mut self) -> Result<String, AgentError> {
        match self.pending.take() {
            Some(Some(line)) => Ok(line),
            _ => Err(AgentError::Disconnected),
        }
    }
}

/// Canned remote behaviors for tests.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TestDouble {
    /// Always answers with the first legal action id.
    EchoFirstLegal,
    /// Answers with an action id that is not legal.
    Illegal,
    /// Answers this many moves, then drops the connection.
    DisconnectAfter(usize),
}

impl TestDouble {
    pub fn transport(self) -> FnTransport {
        let mut answered = 0usize;
        FnTransport::new(move |line| {
            let reply = match WireMessage::parse(line).ok()? {
                WireMessage::Hello { .. } => WireMessage::Hello { proto: PROTOCOL_VERSION },
                WireMessage::Obs { legal_action_ids, .. } => {
                    if let TestDouble::DisconnectAfter(n) = self {
                        if answered >= n {
                            return None;
                        }
                    }
                    answered += 1;
                    let action_id = match self {
                        TestDouble::Illegal => (0..20).find(|id| !legal_action_ids.contains(id)).unwrap_or(20),
                        _ => legal_action_ids[0],
                    };
                    WireMessage::Move { action_id }
                }
                WireMessage::Move { .. } => return None,
            };
            Some(reply.to_line())
        })
    }

    pub fn policy(self) -> ExternalPolicy {
        ExternalPolicy::new(Box::new(self.transport())).expect("test double handshake")
    }
}

/// Agent backed by a remote policy.
pub struct ExternalPolicy {
    transport: Box<dyn Transport>,
}

impl ExternalPolicy {
    /// Performs the handshake.
    pub fn new(mut transport: Box<dyn Transport>) -> Result<ExternalPolicy, AgentError> {
        transport.send(&WireMessage::Hello { proto: PROTOCOL_VERSION }.to_line())?;
        match WireMessage::parse(&transport.recv()?)? {
            WireMessage::Hello { proto } if proto == PROTOCOL_VERSION => Ok(ExternalPolicy { transport }),
            WireMessage::Hello { proto } => Err(AgentError::Protocol(format!("unsupported protocol {proto}"))),
            other => Err(AgentError::Protocol(format!("expected hello, got {other:?}"))),
        }
    }
}

impl Agent for ExternalPolicy {
    fn act(&mut self, obs: &Observation) -> Result<Move, AgentError> {
        let legal: Vec<u8> = obs.legal_moves().iter().map(|m| m.action_id()).collect();
        let msg = WireMessage::Obs { observation: Box::new(obs.clone()), legal_action_ids: legal.clone() };
        self.transport.send(&msg.to_line())?;
        match WireMessage::parse(&self.transport.recv()?)? {
            WireMessage::Move { action_id } if legal.contains(&action_id) => {
                Ok(Move::from_action_id(action_id).expect("legal ids are valid"))
            }
            WireMessage::Move { action_id } => Err(AgentError::IllegalMove { action_id }),
            other => Err(AgentError::Protocol(format!("expected move, got {other:?}"))),
        }
    }
}

/// Serves a policy over a line stream: answers hello, then every
/// observation with `choose`'s action id. Returns when the input ends.
pub fn serve_policy<R: BufRead, W: Write>(
    input: R,
    mut output: W,
    mut choose: impl FnMut(&Observation, &[u8]) -> u8,
) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match WireMessage::parse(&line) {
            Ok(WireMessage::Hello { .. }) => WireMessage::Hello { proto: PROTOCOL_VERSION },
            Ok(WireMessage::Obs { observation, legal_action_ids }) => {
                WireMessage::Move { action_id: choose(&observation, &legal_action_ids) }
            }
            Ok(WireMessage::Move { .. }) | Err(_) => {
                return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("unexpected line {line:?}")))
            }
        };
        writeln!(output, "{}", reply.to_line())?;
        output.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::GameState;
    use std::net::TcpListener;

    #[test]
    fn obs_message_roundtrips() {
        let obs = GameState::new(4).observation(1);
        let msg = WireMessage::Obs { observation: Box::new(obs), legal_action_ids: vec![5, 6] };
        let line = msg.to_line();
        assert!(line.starts_with("{\"type\":\"obs\""));
        assert_eq!(WireMessage::parse(&line).unwrap(), msg);
    }

    #[test]
    fn echo_double_picks_first_legal() {
        let state = GameState::new(4);
        let mut policy = TestDouble::EchoFirstLegal.policy();
        let mv = policy.act(&state.observation(0)).unwrap();
        assert_eq!(mv, state.legal_moves()[0]);
    }

    #[test]
    fn illegal_double_is_reported() {
        let state = GameState::new(4);
        let mut policy = TestDouble::Illegal.policy();
        assert!(matches!(policy.act(&state.observation(0)), Err(AgentError::IllegalMove { .. })));
    }

    #[test]
    fn disconnect_is_reported() {
        let state = GameState::new(4);
        let mut policy = TestDouble::DisconnectAfter(1).policy();
        policy.act(&state.observation(0)).unwrap();
        assert_eq!(policy.act(&state.observation(0)), Err(AgentError::Disconnected));
    }

    #[test]
    fn wrong_protocol_version_is_rejected() {
        let t = FnTransport::new(|_| Some(r#"{"type":"hello","proto":9}"#.to_string()));
        assert!(matches!(ExternalPolicy::new(Box::new(t)), Err(AgentError::Protocol(_))));
    }

    #[test]
    fn tcp_transport_talks_to_a_served_policy() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let server = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let reader = BufReader::new(stream.try_clone().unwrap());
            serve_policy(reader, stream, |_, legal| legal[legal.len() - 1]).unwrap();
        });
        let state = GameState::new(9);
        {
            let transport = TcpTransport::connect(&addr, Duration::from_secs(5)).unwrap();
            let mut policy = ExternalPolicy::new(Box::new(transport)).unwrap();
            let mv = policy.act(&state.observation(0)).unwrap();
            assert_eq!(mv, *state.legal_moves().last().unwrap());
        }
        server.join().unwrap();
    }

    #[test]
    fn tcp_timeout_is_reported() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let hold = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            thread::sleep(Duration::from_millis(400));
            drop(stream);
        });
        let mut t = TcpTransport::connect(&addr, Duration::from_millis(100)).unwrap();
        t.send("{\"type\":\"hello\",\"proto\":1}").unwrap();
        assert!(matches!(t.recv(), Err(AgentError::Timeout(_))));
        hold.join().unwrap();
    }
}
