//! Segmentation and reconstruction metrics for scoring external models
//! against engine ground truth.

use std::collections::HashMap;

use thiserror::Error;

use crate::render::{LabelGrid, RgbImage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("dimension mismatch: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("truth grid has no foreground pixels")]
    EmptyForeground,
}

fn pairs(n: u64) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Adjusted Rand Index between `pred` and `truth`, restricted to pixels
/// where `truth` is nonzero. `pred` labels are arbitrary; label 0 in `pred`
/// is an ordinary cluster. Returns 1.0 when the adjustment is degenerate
/// (both partitions trivially identical, e.g. a single foreground pixel).
pub fn fg_ari(pred: &LabelGrid, truth: &LabelGrid) -> Result<f64, MetricError> {
    let (pd, td) = ((pred.height, pred.width), (truth.height, truth.width));
    if pd != td || pred.data.len() != truth.data.len() {
        return Err(MetricError::DimensionMismatch { a: pd, b: td });
    }
    let mut joint: HashMap<(u32, u32), u64> = HashMap::new();
    let mut rows: HashMap<u32, u64> = HashMap::new();
    let mut cols: HashMap<u32, u64> = HashMap::new();
    let mut n = 0u64;
    for (&p, &t) in pred.data.iter().zip(&truth.data) {
        if t == 0 {
            continue;
        }
        n += 1;
        *joint.entry((p, t)).or_default() += 1;
        *rows.entry(p).or_default() += 1;
        *cols.entry(t).or_default() += 1;
    }
    if n == 0 {
        return Err(MetricError::EmptyForeground);
    }
    let index: f64 = joint.values().map(|&c| pairs(c)).sum();
    let a: f64 = rows.values().map(|&c| pairs(c)).sum();
    let b: f64 = cols.values().map(|&c| pairs(c)).sum();
    let expected = a * b / pairs(n).max(1.0);
    let max = (a + b) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Mean squared difference over every pixel and channel, on the 0..255 scale.
pub fn mse(a: &RgbImage, b: &RgbImage) -> Result<f64, MetricError> {
    if (a.height, a.width) != (b.height, b.width) || a.data.len() != b.data.len() {
        return Err(MetricError::DimensionMismatch { a: (a.height, a.width), b: (b.height, b.width) });
    }
    if a.data.is_empty() {
        return Ok(0.0);
    }
    let sum: u64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum();
    Ok(sum as f64 / a.data.len() as f64)
}
