//! Policies the harness can run: the oracle planners, a seeded random
//! policy, and an external process speaking the wire protocol.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use super::protocol::{ClientCommand, ServerFrame};
use super::HarnessError;
use crate::env::{gt_state, Action, EnvState, Transition};
use crate::oracle::{identify_target, plan_push_within, plan_reach_within, random_action};
use crate::params::TaskKind;
use crate::rng::{streams, StreamRng};

/// What an agent sees before each action.
pub struct Observation<'a> {
    pub seed: u64,
    pub state: &'a EnvState,
}

pub trait Agent {
    fn name(&self) -> &str;

    /// Called once per episode before the first observation.
    fn reset(&mut self, obs: &Observation<'_>) -> Result<(), HarnessError>;

    /// The next action, or `None` to abstain (the episode ends as a failure).
    fn act(&mut self, obs: &Observation<'_>) -> Result<Option<Action>, HarnessError>;

    fn feedback(&mut self, _t: &Transition) -> Result<(), HarnessError> {
        Ok(())
    }

    /// Planner verdict for the current episode, when the agent has one.
    fn solvable(&self) -> Option<bool> {
        None
    }
}

/// Plans once from the ground-truth state, then replays the plan.
#[derive(Default)]
pub struct OracleAgent {
    plan: std::vec::IntoIter<Action>,
    solvable: Option<bool>,
}

impl Agent for OracleAgent {
    fn name(&self) -> &str {
        "oracle"
    }

    fn reset(&mut self, obs: &Observation<'_>) -> Result<(), HarnessError> {
        let state = obs.state;
        let plan = if state.kind == TaskKind::ObjectInteraction {
            plan_push_within(&state.scene, state.max_steps)?
        } else {
            let target = identify_target(&gt_state(state)?, state.kind)?;
            plan_reach_within(&state.scene, target, state.max_steps)?
        };
        self.solvable = Some(plan.solvable);
        self.plan = plan.actions.into_iter();
        Ok(())
    }

    fn act(&mut self, _obs: &Observation<'_>) -> Result<Option<Action>, HarnessError> {
        Ok(self.plan.next())
    }

    fn solvable(&self) -> Option<bool> {
        self.solvable
    }
}

/// Uniform random actions from stream `POLICY + agent_seed`, keyed by the
/// episode seed.
pub struct RandomAgent {
    agent_seed: u64,
    rng: StreamRng,
}

impl RandomAgent {
    pub fn new(agent_seed: u64) -> Self {
        Self { agent_seed, rng: StreamRng::new(0, streams::POLICY + agent_seed) }
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> &str {
        "random"
    }

    fn reset(&mut self, obs: &Observation<'_>) -> Result<(), HarnessError> {
        self.rng = StreamRng::new(obs.seed, streams::POLICY + self.agent_seed);
        Ok(())
    }

    fn act(&mut self, _obs: &Observation<'_>) -> Result<Option<Action>, HarnessError> {
        Ok(Some(random_action(&mut self.rng)))
    }
}

/// A child process driven over stdin/stdout with the wire protocol, roles
/// reversed: the harness writes obs and result frames, and after each obs
/// frame the process answers with one `{"cmd":"step","action":k}` line.
pub struct ExternalAgent {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ExternalAgent {
    pub fn spawn(command: &[String]) -> Result<Self, HarnessError> {
        let (program, args) = command.split_first().ok_or_else(|| HarnessError::Protocol {
            msg: "empty agent command".into(),
            frame: String::new(),
        })?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self { child, stdin, stdout })
    }

    fn send(&mut self, frame: &ServerFrame) -> Result<(), HarnessError> {
        writeln!(self.stdin, "{}", frame.to_line())?;
        self.stdin.flush()?;
        Ok(())
    }
}

impl Agent for ExternalAgent {
    fn name(&self) -> &str {
        "external"
    }

    fn reset(&mut self, _obs: &Observation<'_>) -> Result<(), HarnessError> {
        Ok(())
    }

    fn act(&mut self, obs: &Observation<'_>) -> Result<Option<Action>, HarnessError> {
        self.send(&ServerFrame::obs(obs.state)?)?;
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            return Err(HarnessError::Protocol {
                msg: "agent closed its output".into(),
                frame: String::new(),
            });
        }
        let violation = |msg: &str| HarnessError::Protocol {
            msg: msg.into(),
            frame: line.trim_end().to_string(),
        };
        match serde_json::from_str::<ClientCommand>(&line) {
            Ok(ClientCommand::Step { action }) => {
                Action::from_code(action).map(Some).ok_or_else(|| violation("action out of range"))
            }
            Ok(_) => Err(violation("expected a step command")),
            Err(_) => Err(violation("malformed frame")),
        }
    }

    fn feedback(&mut self, t: &Transition) -> Result<(), HarnessError> {
        self.send(&ServerFrame::result(t, None))
    }
}

impl Drop for ExternalAgent {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Agent selection, instantiable once per worker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentSpec {
    Oracle,
    Random { agent_seed: u64 },
    External { command: Vec<String> },
}

impl AgentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AgentSpec::Oracle => "oracle",
            AgentSpec::Random { .. } => "random",
            AgentSpec::External { .. } => "external",
        }
    }

    pub fn instantiate(&self) -> Result<Box<dyn Agent + Send>, HarnessError> {
        Ok(match self {
            AgentSpec::Oracle => Box::<OracleAgent>::default(),
            AgentSpec::Random { agent_seed } => Box::new(RandomAgent::new(*agent_seed)),
            AgentSpec::External { command } => Box::new(ExternalAgent::spawn(command)?),
        })
    }
}
