//! Entropy, cross-entropy, majorization and T-transforms.
//!
//! Natural logarithms throughout. Majorization compares vectors through
//! their descending rearrangements; [`t_transform`] takes sorted ranks and
//! records the stable permutation it used so the result stays in the
//! caller's original coordinate order.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace::{Section, TokenTrace};

const SUM_TOL: f64 = 1e-10;
const PARTIAL_SUM_TOL: f64 = 1e-12;

/// A probability vector: non-negative, summing to 1 within `1e-10`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidProbability("empty vector".into()));
        }
        if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidProbability(format!("entry {v}")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidProbability(format!("sums to {s}")));
        }
        Ok(Self(p))
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(vec![1.0 / m as f64; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices ordered by descending value, ties by index.
    pub fn descending_ranks(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.0.len()).collect();
        idx.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]).then(a.cmp(&b)));
        idx
    }

    pub fn sorted_descending(&self) -> Vec<f64> {
        self.descending_ranks()
            .into_iter()
            .map(|i| self.0[i])
            .collect()
    }
}

/// `H(p) = -sum p_i ln p_i`, with `0 ln 0 = 0`.
pub fn entropy(p: &ProbVector) -> f64 {
    0.0 - p
        .0
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

/// `CE(p, q) = -sum p_i ln q_i`.
///
/// Returns [`Error::InfiniteCrossEntropy`] when `q` puts zero mass where
/// `p` does not.
pub fn cross_entropy(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let mut acc = 0.0;
    for (i, (&pi, &qi)) in p.0.iter().zip(&q.0).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::InfiniteCrossEntropy { index: i });
        }
        acc -= pi * qi.ln();
    }
    Ok(acc)
}

/// `q ≻ p`: every partial sum of sorted-descending `q` dominates `p`'s and
/// the totals agree.
pub fn majorizes(q: &ProbVector, p: &ProbVector) -> bool {
    if q.len() != p.len() {
        return false;
    }
    let (qs, ps) = (q.sorted_descending(), p.sorted_descending());
    let (mut sq, mut sp) = (0.0, 0.0);
    for (a, b) in qs.iter().zip(&ps) {
        sq += a;
        sp += b;
        if sq < sp - PARTIAL_SUM_TOL {
            return false;
        }
    }
    (sq - sp).abs() <= PARTIAL_SUM_TOL
}

/// Result of a T-transform.
#[derive(Debug, Clone, PartialEq)]
pub struct TTransform {
    pub result: ProbVector,
    /// `ranks[r]` is the original index holding the `r`-th largest entry of
    /// the input.
    pub ranks: Vec<usize>,
}

/// Moves `eps` of mass from the `j`-th largest entry to the `i`-th largest
/// (0-based ranks, `i < j`), with `0 <= eps <= p_[j]`.
pub fn t_transform(p: &ProbVector, i: usize, j: usize, eps: f64) -> Result<TTransform> {
    let m = p.len();
    if i >= j || j >= m {
        return Err(Error::param(format!(
            "ranks must satisfy i < j < {m}, got i = {i}, j = {j}"
        )));
    }
    let ranks = p.descending_ranks();
    let (hi, lo) = (ranks[i], ranks[j]);
    if !(eps.is_finite() && eps >= 0.0 && eps <= p.0[lo]) {
        return Err(Error::param(format!(
            "eps = {eps} outside [0, p_[j] = {}]",
            p.0[lo]
        )));
    }
    let mut out = p.0.clone();
    out[hi] += eps;
    out[lo] -= eps;
    Ok(TTransform {
        result: ProbVector(out),
        ranks,
    })
}

/// One step of a T-transform chain, in sorted-rank terms.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferStep {
    pub from_rank: usize,
    pub to_rank: usize,
    pub eps: f64,
    pub after: ProbVector,
}

/// Builds a finite chain of T-transforms carrying `p` to `q` when `q ≻ p`.
///
/// Works on the sorted vectors `x = p↓`, `y = q↓`: take the last rank `i`
/// with `x_i < y_i` and the first rank `j > i` with `x_j > y_j` (ranks
/// strictly between already agree), then move `min(y_i - x_i, x_j - y_j)`
/// from `j` to `i`. The transfer keeps `x` sorted and majorized by `y`, and
/// pins rank `i` or rank `j` to its target for good, so at most `m - 1`
/// steps are needed. Returns `None` if `q` does not majorize `p`.
pub fn transfer_chain(p: &ProbVector, q: &ProbVector) -> Option<Vec<TransferStep>> {
    if !majorizes(q, p) {
        return None;
    }
    let target = q.sorted_descending();
    let mut cur = p.sorted_descending();
    let m = cur.len();
    let tol = 1e-14;
    let mut steps = Vec::new();
    for _ in 0..m {
        let Some(i) = (0..m).rev().find(|&k| cur[k] < target[k] - tol) else {
            break;
        };
        let j = (i + 1..m).find(|&k| cur[k] > target[k] + tol)?;
        let eps = (target[i] - cur[i]).min(cur[j] - target[j]);
        cur[i] += eps;
        cur[j] -= eps;
        steps.push(TransferStep {
            from_rank: j,
            to_rank: i,
            eps,
            after: ProbVector(cur.clone()),
        });
    }
    Some(steps)
}

/// Entropy of one trace position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionEntropy {
    pub position: usize,
    pub token: String,
    pub section: Section,
    /// Entropy over the listed top-k plus one residual bucket; a lower bound
    /// on the entropy of the full distribution.
    pub entropy_lower_bound: f64,
    pub residual_mass: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceReport {
    pub threshold: f64,
    pub positions: Vec<PositionEntropy>,
    pub flagged: Vec<usize>,
    pub mean_entropy: f64,
    pub max_entropy: f64,
}

/// Default entropy (nats) above which a position is flagged low-confidence.
pub const DEFAULT_ENTROPY_THRESHOLD: f64 = 2.0;

/// Per-position entropy of a trace.
///
/// Each step's distribution is its top-k list (or the chosen token alone if
/// no list was recorded) plus the leftover mass as one extra bucket.
pub fn confidence_report(trace: &TokenTrace, threshold: f64) -> ConfidenceReport {
    let mut positions = Vec::with_capacity(trace.steps().len());
    for (i, step) in trace.steps().iter().enumerate() {
        let mut probs: Vec<f64> = if step.top_k.is_empty() {
            vec![step.p]
        } else {
            step.top_k.iter().map(|(_, p)| *p).collect()
        };
        let listed: f64 = probs.iter().sum();
        let residual = (1.0 - listed).max(0.0);
        if residual > 1e-12 {
            probs.push(residual);
        }
        let h = 0.0
            - probs
                .iter()
                .filter(|&&v| v > 0.0)
                .map(|&v| v * v.ln())
                .sum::<f64>();
        positions.push(PositionEntropy {
            position: i,
            token: step.token.clone(),
            section: step.section,
            entropy_lower_bound: h,
            residual_mass: residual,
            flagged: h > threshold,
        });
    }
    let flagged = positions
        .iter()
        .filter(|p| p.flagged)
        .map(|p| p.position)
        .collect();
    let n = positions.len().max(1) as f64;
    let mean_entropy = positions.iter().map(|p| p.entropy_lower_bound).sum::<f64>() / n;
    let max_entropy = positions
        .iter()
        .map(|p| p.entropy_lower_bound)
        .fold(0.0, f64::max);
    ConfidenceReport {
        threshold,
        positions,
        flagged,
        mean_entropy,
        max_entropy,
    }
}
