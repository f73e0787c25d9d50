use super::episode::EpisodeRecord;
use crate::params::{TaskKind, TaskParams};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n` at 95% confidence.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    pub task: TaskKind,
    /// Shift tag of the evaluated params, `in` when unshifted.
    pub shift: String,
    pub params_digest: u64,
    pub agent: String,
    pub n_episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_steps: f64,
    pub unsolvable_fraction: Option<f64>,
}

impl EvalSummary {
    pub fn from_records(params: &TaskParams, agent: &str, records: &[EpisodeRecord]) -> Self {
        let n = records.len();
        let successes = records.iter().filter(|r| r.success).count();
        let (ci_lo, ci_hi) = wilson_interval(successes, n);
        let verdicts: Vec<bool> = records.iter().filter_map(|r| r.solvable).collect();
        let unsolvable_fraction = (!verdicts.is_empty()).then(|| {
            verdicts.iter().filter(|&&s| !s).count() as f64 / verdicts.len() as f64
        });
        let ratio = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
        Self {
            task: params.kind,
            shift: params.shift.map_or_else(|| "in".to_string(), |s| s.to_string()),
            params_digest: params.digest(),
            agent: agent.to_string(),
            n_episodes: n,
            successes,
            success_rate: ratio(successes as f64),
            ci_lo,
            ci_hi,
            mean_steps: ratio(records.iter().map(|r| r.steps as f64).sum()),
            unsolvable_fraction,
        }
    }

    /// One line in the results CSV format.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.3}",
            self.task,
            self.shift,
            self.agent,
            self.n_episodes,
            self.successes,
            self.success_rate,
            self.ci_lo,
            self.ci_hi,
            self.mean_steps
        )
    }
}
