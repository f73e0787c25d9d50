use std::fmt::Write as _;

use super::agent::AgentSpec;
use super::episode::evaluate;
use super::summary::EvalSummary;
use super::HarnessError;
use crate::params::{apply_shift, ShiftSpec, TaskKind, TaskParams};

pub const CSV_HEADER: &str = "task,shift,agent,n,successes,success_rate,ci_lo,ci_hi,mean_steps";

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    /// `None` for the plain in-distribution row.
    pub shift: Option<ShiftSpec>,
    /// Column label, e.g. `3(in)`.
    pub label: String,
    pub summary: EvalSummary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub task: TaskKind,
    pub agent: String,
    pub n_episodes: usize,
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<(ShiftSpec, String)>,
}

/// Evaluates `agent` under each shift, with the in-distribution setting
/// always present as the first row. Incompatible shifts are skipped.
pub fn ood_sweep(
    base: &TaskParams,
    shifts: &[ShiftSpec],
    agent: &AgentSpec,
    n_episodes: usize,
    base_seed: u64,
) -> Result<SweepReport, HarnessError> {
    let kind = base.kind;
    let mut planned: Vec<Option<ShiftSpec>> = Vec::new();
    if !shifts.iter().any(|s| s.is_identity_for(kind)) {
        planned.push(shifts.first().and_then(|s| s.family_identity(kind)));
    }
    planned.extend(shifts.iter().copied().map(Some));
    let mixed = shifts.iter().any(|s| s.family_name() != shifts[0].family_name());

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for shift in planned {
        let params = match shift {
            Some(s) => match apply_shift(base, s) {
                Ok(p) => p,
                Err(e) => {
                    skipped.push((s, e.to_string()));
                    continue;
                }
            },
            None => base.clone(),
        };
        let mut summary = evaluate(&params, agent, n_episodes, base_seed)?.summary;
        let (label, tag) = match shift {
            Some(s) => {
                let short = s.label(kind);
                let in_mark = if s.is_identity_for(kind) { "(in)" } else { "" };
                let label = if mixed { format!("{}:{short}", s.family_name()) } else { short };
                (label, format!("{s}{in_mark}"))
            }
            None => ("in".to_string(), "in".to_string()),
        };
        summary.shift = tag;
        rows.push(SweepRow { shift, label, summary });
    }
    Ok(SweepReport { task: kind, agent: agent.name().to_string(), n_episodes, rows, skipped })
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.summary.csv_row());
            out.push('\n');
        }
        out
    }

    /// Shifts as columns, one row of success rates and one of intervals.
    pub fn to_table(&self) -> String {
        let cells = |f: &dyn Fn(&SweepRow) -> String| -> Vec<String> {
            self.rows.iter().map(f).collect()
        };
        let lines = [
            ("shift".to_string(), cells(&|r| r.label.clone())),
            (self.agent.clone(), cells(&|r| format!("{:.3}", r.summary.success_rate))),
            ("95% CI".to_string(), cells(&|r| format!("[{:.3}, {:.3}]", r.summary.ci_lo, r.summary.ci_hi))),
        ];
        let first = lines.iter().map(|(h, _)| h.len()).max().unwrap_or(0);
        let widths: Vec<usize> = (0..self.rows.len())
            .map(|i| lines.iter().map(|(_, c)| c[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = format!("{} (n = {} per column)\n", self.task, self.n_episodes);
        for (head, row) in &lines {
            let _ = write!(out, "{head:<first$}");
            for (cell, w) in row.iter().zip(&widths) {
                let _ = write!(out, "  {cell:>w$}");
            }
            out.push('\n');
        }
        for (shift, reason) in &self.skipped {
            let _ = writeln!(out, "skipped {shift}: {reason}");
        }
        out
    }
}
