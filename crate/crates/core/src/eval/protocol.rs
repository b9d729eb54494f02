//! Newline-delimited JSON wire protocol between the engine and an agent.
//!
//! One connection may serve many episodes in sequence. Per episode the
//! engine sends `handshake`, then alternates `observation` messages with the
//! agent's `act` replies, and closes with `end`. The agent answers the
//! handshake with `ready`.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::time::Duration;

pub const PROTOCOL_VERSION: u32 = 1;

/// Action sent by [`serve`] when the policy fails; no subtask uses it.
pub const IDLE_ACTION: &str = "place_4";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Demonstration,
    Description,
    Instruction,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::Demonstration,
        ScenarioKind::Description,
        ScenarioKind::Instruction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Demonstration => "demonstration",
            ScenarioKind::Description => "description",
            ScenarioKind::Instruction => "instruction",
        }
    }

    pub fn parse(s: &str) -> Option<ScenarioKind> {
        ScenarioKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// One demonstrated step: image before, action, reward, image after and
/// the inventory after. Carries no task or instruction text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoStep {
    pub prev: Vec<Vec<[u8; 3]>>,
    pub action: String,
    pub reward: i32,
    pub next: Vec<Vec<[u8; 3]>>,
    pub inventory: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Payload {
    Demonstration { demonstration: Vec<DemoStep> },
    Description { description: String },
    Instruction {},
}

impl Payload {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            Payload::Demonstration { .. } => ScenarioKind::Demonstration,
            Payload::Description { .. } => ScenarioKind::Description,
            Payload::Instruction {} => ScenarioKind::Instruction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepMessage {
    pub step: u16,
    pub grid: Vec<Vec<[u8; 3]>>,
    pub inventory: String,
    /// Reward of the previous step; zero before the first action.
    pub reward: i32,
    /// Current oracle instruction, instruction scenario only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EngineMessage {
    Handshake {
        protocol: u32,
        #[serde(flatten)]
        payload: Payload,
    },
    Observation(StepMessage),
    End {
        outcome: Option<String>,
        steps: u16,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActReply {
    pub action: String,
    /// Predicted task description, if the agent produces one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Predicted current instruction, if the agent produces one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgentMessage {
    Ready { protocol: u32 },
    Act(ActReply),
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum AgentError {
    #[error("agent timed out")]
    Timeout,
    #[error("agent closed the connection")]
    Closed,
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("agent failure: {0}")]
    Failed(String),
}

/// Engine-side view of an agent.
pub trait Agent: Send {
    fn handshake(&mut self, payload: &Payload) -> Result<(), AgentError>;
    fn act(&mut self, msg: &StepMessage) -> Result<ActReply, AgentError>;
    fn end(&mut self, outcome: Option<String>, steps: u16) -> Result<(), AgentError>;
}

/// Agent-side logic driven by [`serve`].
pub trait Policy {
    fn begin(&mut self, payload: &Payload) -> Result<(), String>;
    fn act(&mut self, msg: &StepMessage) -> Result<ActReply, String>;
    fn finish(&mut self) {}
}

/// Agent loop over a line transport: reads engine messages until EOF.
pub fn serve<R: BufRead, W: Write, P: Policy>(input: R, mut output: W, policy: &mut P) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let msg: EngineMessage = match serde_json::from_str(&line) {
            Ok(m) => m,
            Err(e) => return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, e)),
        };
        let reply = match msg {
            EngineMessage::Handshake { payload, .. } => {
                policy
                    .begin(&payload)
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
                Some(AgentMessage::Ready {
                    protocol: PROTOCOL_VERSION,
                })
            }
            EngineMessage::Observation(step) => {
                let act = policy.act(&step).unwrap_or_else(|_| ActReply {
                    action: IDLE_ACTION.to_string(),
                    ..ActReply::default()
                });
                Some(AgentMessage::Act(act))
            }
            EngineMessage::End { .. } => {
                policy.finish();
                None
            }
        };
        if let Some(r) = reply {
            writeln!(
                output,
                "{}",
                serde_json::to_string(&r).expect("agent message serialises")
            )?;
            output.flush()?;
        }
    }
    Ok(())
}

/// An agent behind a child process's standard streams.
pub struct SubprocessAgent {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl SubprocessAgent {
    /// `command` is split on whitespace; the first word is the program.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, AgentError> {
        let mut words = command.split_whitespace();
        let program = words
            .next()
            .ok_or_else(|| AgentError::Failed("empty agent command".into()))?;
        let mut child = Command::new(program)
            .args(words)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| AgentError::Failed(e.to_string()))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SubprocessAgent {
            child,
            stdin,
            lines: rx,
            timeout,
        })
    }

    fn send(&mut self, msg: &EngineMessage) -> Result<(), AgentError> {
        let line = serde_json::to_string(msg).expect("engine message serialises");
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|_| AgentError::Closed)
    }

    fn receive(&mut self) -> Result<AgentMessage, AgentError> {
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(l)) => l,
            Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => return Err(AgentError::Closed),
            Err(RecvTimeoutError::Timeout) => return Err(AgentError::Timeout),
        };
        serde_json::from_str(&line).map_err(|e| AgentError::Protocol(format!("{e}: {line}")))
    }
}

impl Agent for SubprocessAgent {
    fn handshake(&mut self, payload: &Payload) -> Result<(), AgentError> {
        self.send(&EngineMessage::Handshake {
            protocol: PROTOCOL_VERSION,
            payload: payload.clone(),
        })?;
        match self.receive()? {
            AgentMessage::Ready { protocol } if protocol == PROTOCOL_VERSION => Ok(()),
            AgentMessage::Ready { protocol } => Err(AgentError::Protocol(format!("protocol {protocol}"))),
            other => Err(AgentError::Protocol(format!("expected ready, got {other:?}"))),
        }
    }

    fn act(&mut self, msg: &StepMessage) -> Result<ActReply, AgentError> {
        self.send(&EngineMessage::Observation(msg.clone()))?;
        match self.receive()? {
            AgentMessage::Act(a) => Ok(a),
            other => Err(AgentError::Protocol(format!("expected act, got {other:?}"))),
        }
    }

    fn end(&mut self, outcome: Option<String>, steps: u16) -> Result<(), AgentError> {
        self.send(&EngineMessage::End { outcome, steps })
    }
}

impl Drop for SubprocessAgent {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// In-process agent that still round-trips every message through JSON, so
/// it exercises exactly the bytes a subprocess would see.
pub struct LoopbackAgent<P: Policy + Send> {
    pub policy: P,
}

fn roundtrip<T: Serialize + for<'de> Deserialize<'de>>(value: &T) -> T {
    serde_json::from_str(&serde_json::to_string(value).expect("serialises")).expect("deserialises")
}

impl<P: Policy + Send> Agent for LoopbackAgent<P> {
    fn handshake(&mut self, payload: &Payload) -> Result<(), AgentError> {
        let msg = roundtrip(&EngineMessage::Handshake {
            protocol: PROTOCOL_VERSION,
            payload: payload.clone(),
        });
        let EngineMessage::Handshake { payload, .. } = msg else {
            unreachable!()
        };
        self.policy.begin(&payload).map_err(AgentError::Failed)
    }

    fn act(&mut self, msg: &StepMessage) -> Result<ActReply, AgentError> {
        let msg = roundtrip(msg);
        let reply = self.policy.act(&msg).map_err(AgentError::Failed)?;
        Ok(roundtrip(&reply))
    }

    fn end(&mut self, _outcome: Option<String>, _steps: u16) -> Result<(), AgentError> {
        self.policy.finish();
        Ok(())
    }
}
