use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::agent::{Agent, AgentSpec, Observation};
use super::summary::EvalSummary;
use super::HarnessError;
use crate::env::{make_env, Action, EnvState};
use crate::params::TaskParams;

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub params_digest: u64,
    pub actions: Vec<Action>,
    pub total_reward: f64,
    pub success: bool,
    pub timeout: bool,
    pub steps: u32,
    pub trace_hash: u64,
    /// Planner verdict (oracle runs only).
    pub solvable: Option<bool>,
    pub abstained: bool,
}

/// Running SHA-256 over a canonical byte encoding of the episode:
/// params digest and seed, the initial state, then `(action, reward, state)`
/// per step. The hash is the first 8 digest bytes read little-endian.
#[derive(Clone)]
pub struct TraceHasher(Sha256);

impl TraceHasher {
    pub fn new(params_digest: u64, seed: u64, initial: &EnvState) -> Self {
        let mut h = Sha256::new();
        h.update(params_digest.to_le_bytes());
        h.update(seed.to_le_bytes());
        let mut t = Self(h);
        t.state(initial);
        t
    }

    fn state(&mut self, s: &EnvState) {
        let h = &mut self.0;
        h.update(s.step_count.to_le_bytes());
        h.update([u8::from(s.terminal), u8::from(s.success), u8::from(s.timeout)]);
        for e in s.scene.agent.iter().chain(&s.scene.objects) {
            h.update([e.color.code(), e.shape.code()]);
            h.update(e.size.0.to_le_bytes());
            h.update(e.pos.x.to_le_bytes());
            h.update(e.pos.y.to_le_bytes());
        }
    }

    pub fn record(&mut self, action: Action, reward: f64, after: &EnvState) {
        self.0.update([action.code()]);
        self.0.update(reward.to_le_bytes());
        self.state(after);
    }

    pub fn finish(&self) -> u64 {
        let digest = self.0.clone().finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

/// Runs one episode of `params` with `seed` to termination, timeout at
/// `params.max_steps`, or abstention.
pub fn run_episode(
    params: &TaskParams,
    seed: u64,
    agent: &mut dyn Agent,
) -> Result<EpisodeRecord, HarnessError> {
    let digest = params.digest();
    let mut state = make_env(params, seed)?;
    let mut hasher = TraceHasher::new(digest, seed, &state);
    agent.reset(&Observation { seed, state: &state })?;
    let mut actions = Vec::new();
    let mut total_reward = 0.0;
    let mut abstained = false;
    while !state.terminal {
        let Some(action) = agent.act(&Observation { seed, state: &state })? else {
            abstained = true;
            break;
        };
        let t = state.step_state(action)?;
        hasher.record(action, t.reward, &state);
        agent.feedback(&t)?;
        actions.push(action);
        total_reward += t.reward;
    }
    Ok(EpisodeRecord {
        seed,
        params_digest: digest,
        actions,
        total_reward,
        success: state.success,
        timeout: state.timeout,
        steps: state.step_count,
        trace_hash: hasher.finish(),
        solvable: agent.solvable(),
        abstained,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub records: Vec<EpisodeRecord>,
    pub summary: EvalSummary,
}

/// Runs seeds `base_seed .. base_seed + n` and aggregates. In-process agents
/// run in parallel; records are always in seed order. The first failing
/// episode aborts the run with the records completed before it.
pub fn evaluate(
    params: &TaskParams,
    agent: &AgentSpec,
    n_episodes: usize,
    base_seed: u64,
) -> Result<Evaluation, HarnessError> {
    if n_episodes == 0 {
        return Err(HarnessError::NoEpisodes);
    }
    params.validate()?;
    let seeds = (0..n_episodes as u64).map(|i| base_seed + i);
    let results: Vec<Result<EpisodeRecord, HarnessError>> = match agent {
        AgentSpec::External { .. } => {
            let mut a = agent.instantiate()?;
            let mut out = Vec::with_capacity(n_episodes);
            for seed in seeds {
                let r = run_episode(params, seed, a.as_mut());
                let failed = r.is_err();
                out.push(r);
                if failed {
                    break;
                }
            }
            out
        }
        _ => seeds
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|seed| run_episode(params, seed, agent.instantiate()?.as_mut()))
            .collect(),
    };
    let mut records = Vec::with_capacity(n_episodes);
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                return Err(HarnessError::Aborted {
                    seed: base_seed + i as u64,
                    completed: records,
                    source: Box::new(e),
                })
            }
        }
    }
    let summary = EvalSummary::from_records(params, agent.name(), &records);
    Ok(Evaluation { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::agent::{OracleAgent, RandomAgent};
    use crate::params::TaskKind;

    #[test]
    fn oracle_solves_goal_seed() {
        let p = TaskParams::defaults(TaskKind::ObjectGoal);
        let r = run_episode(&p, 0, &mut OracleAgent::default()).unwrap();
        assert_eq!(r.solvable, Some(true));
        assert!(r.success);
        assert_eq!(r.total_reward, 1.0);
        assert_eq!(r.steps as usize, r.actions.len());
    }

    #[test]
    fn random_agent_respects_step_budget() {
        for kind in TaskKind::EPISODIC {
            let p = TaskParams::defaults(kind);
            for seed in 0..20 {
                let r = run_episode(&p, seed, &mut RandomAgent::new(0)).unwrap();
                assert!(r.steps <= p.max_steps);
                assert_eq!(r.success, r.total_reward == 1.0);
                assert!(!r.abstained);
            }
        }
    }

    #[test]
    fn trace_hash_is_reproducible_and_sensitive() {
        let p = TaskParams::defaults(TaskKind::ObjectComparison);
        let a = run_episode(&p, 4, &mut RandomAgent::new(1)).unwrap();
        let b = run_episode(&p, 4, &mut RandomAgent::new(1)).unwrap();
        let c = run_episode(&p, 4, &mut RandomAgent::new(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.actions, c.actions);
        assert_ne!(a.trace_hash, c.trace_hash);
    }

    #[test]
    fn evaluate_is_seed_ordered_and_repeatable() {
        let p = TaskParams::defaults(TaskKind::ObjectGoal);
        let agent = AgentSpec::Random { agent_seed: 0 };
        let a = evaluate(&p, &agent, 40, 100).unwrap();
        let b = evaluate(&p, &agent, 40, 100).unwrap();
        assert_eq!(a, b);
        let seeds: Vec<u64> = a.records.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, (100..140).collect::<Vec<_>>());
        assert!(matches!(evaluate(&p, &agent, 0, 0), Err(HarnessError::NoEpisodes)));
    }

    #[test]
    fn pretraining_aborts_with_partial_report() {
        let p = TaskParams::defaults(TaskKind::Pretraining);
        match evaluate(&p, &AgentSpec::Oracle, 3, 0) {
            Err(HarnessError::Aborted { seed: 0, completed, .. }) => assert!(completed.is_empty()),
            other => panic!("{other:?}"),
        }
    }
}
