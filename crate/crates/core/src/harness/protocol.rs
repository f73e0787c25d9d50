//! Newline-delimited JSON protocol: one object per line, over stdio or TCP.
//!
//! Client commands:
//!
//! ```text
//! {"cmd":"reset","task":"object_goal","seed":7}            optional "shift":"colors:2"
//! {"cmd":"step","action":2}                                0 up, 1 down, 2 left, 3 right
//! {"cmd":"close"}
//! ```
//!
//! Server frames:
//!
//! ```text
//! {"type":"obs","h":64,"w":64,"rgb_b64":"...","gt":[[c,s,z,x,y],...]}
//! {"type":"result","reward":0,"done":false,"success":false,"timeout":false}
//! {"type":"error","msg":"..."}
//! ```
//!
//! `reset` answers with an obs frame. `step` answers with a result frame,
//! followed by an obs frame unless the episode is done; the final result frame
//! also carries `trace_hash` (16 hex digits). Any violation produces an error
//! frame and ends the session.

use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpListener;

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::episode::TraceHasher;
use crate::env::{gt_state, make_env, Action, EnvError, EnvState, Transition};
use crate::params::{apply_shift, ShiftSpec, TaskKind, TaskParams};
use crate::render::{rasterize_scene, OBS_RESOLUTION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase")]
pub enum ClientCommand {
    Reset {
        task: String,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<String>,
    },
    Step {
        action: i64,
    },
    Close,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerFrame {
    Obs {
        h: usize,
        w: usize,
        rgb_b64: String,
        gt: Vec<[f64; 5]>,
    },
    Result {
        reward: u8,
        done: bool,
        success: bool,
        timeout: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trace_hash: Option<String>,
    },
    Error {
        msg: String,
    },
}

impl ServerFrame {
    pub fn obs(state: &EnvState) -> Result<Self, EnvError> {
        let img = rasterize_scene(&state.scene, OBS_RESOLUTION)?;
        Ok(ServerFrame::Obs {
            h: img.height,
            w: img.width,
            rgb_b64: base64::engine::general_purpose::STANDARD.encode(&img.data),
            gt: gt_state(state)?.rows,
        })
    }

    pub fn result(t: &Transition, trace_hash: Option<u64>) -> Self {
        ServerFrame::Result {
            reward: u8::from(t.reward > 0.0),
            done: t.done,
            success: t.success,
            timeout: t.timeout,
            trace_hash: trace_hash.map(|h| format!("{h:016x}")),
        }
    }

    pub fn error(msg: impl Into<String>) -> Self {
        ServerFrame::Error { msg: msg.into() }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("frames serialize")
    }
}

/// Decodes an obs frame's `rgb_b64` payload into row-major RGB bytes.
pub fn decode_rgb(rgb_b64: &str) -> Result<Vec<u8>, base64::DecodeError> {
    base64::engine::general_purpose::STANDARD.decode(rgb_b64)
}

/// Protocol state for one connection.
#[derive(Default)]
pub struct Session {
    episode: Option<(EnvState, TraceHasher)>,
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    /// Handles one input line. Returns the frames to send and whether the
    /// session is over.
    pub fn handle_line(&mut self, line: &str) -> (Vec<ServerFrame>, bool) {
        match serde_json::from_str::<ClientCommand>(line) {
            Ok(ClientCommand::Close) => (vec![], true),
            Ok(cmd) => match self.handle(cmd) {
                Ok(frames) => (frames, false),
                Err(msg) => (vec![ServerFrame::error(msg)], true),
            },
            Err(e) => (vec![ServerFrame::error(format!("malformed frame: {e}"))], true),
        }
    }

    fn handle(&mut self, cmd: ClientCommand) -> Result<Vec<ServerFrame>, String> {
        match cmd {
            ClientCommand::Reset { task, seed, shift } => {
                let kind: TaskKind = task.parse().map_err(|e| format!("{e}"))?;
                let mut params = TaskParams::defaults(kind);
                if let Some(shift) = shift {
                    let shift: ShiftSpec = shift.parse().map_err(|e| format!("{e}"))?;
                    params = apply_shift(&params, shift).map_err(|e| e.to_string())?;
                }
                let state = make_env(&params, seed).map_err(|e| e.to_string())?;
                let hasher = TraceHasher::new(params.digest(), seed, &state);
                let obs = ServerFrame::obs(&state).map_err(|e| e.to_string())?;
                self.episode = Some((state, hasher));
                Ok(vec![obs])
            }
            ClientCommand::Step { action } => {
                let (state, hasher) = self.episode.as_mut().ok_or("step before reset")?;
                let action = Action::from_code(action).ok_or("action out of range")?;
                let t = state.step_state(action).map_err(|e| e.to_string())?;
                hasher.record(action, t.reward, state);
                if t.done {
                    Ok(vec![ServerFrame::result(&t, Some(hasher.finish()))])
                } else {
                    let obs = ServerFrame::obs(state).map_err(|e| e.to_string())?;
                    Ok(vec![ServerFrame::result(&t, None), obs])
                }
            }
            ClientCommand::Close => unreachable!("handled by handle_line"),
        }
    }
}

/// Runs one session until `close`, end of input, or a violation.
pub fn run_session<R: BufRead, W: Write>(reader: R, mut writer: W) -> io::Result<()> {
    let mut session = Session::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (frames, closed) = session.handle_line(&line);
        for frame in frames {
            writeln!(writer, "{}", frame.to_line())?;
        }
        writer.flush()?;
        if closed {
            break;
        }
    }
    Ok(())
}

pub fn serve_stdio() -> io::Result<()> {
    run_session(io::stdin().lock(), io::stdout().lock())
}

/// Accepts connections forever, one session per connection.
pub fn serve_tcp(listener: TcpListener) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        std::thread::spawn(move || {
            let reader = match stream.try_clone() {
                Ok(s) => BufReader::new(s),
                Err(_) => return,
            };
            let _ = run_session(reader, stream);
        });
    }
    Ok(())
}
