//! Finite-alphabet discrete memoryless channels, KL divergence and the
//! synchronization threshold.

use rand::Rng;

use crate::error::{Error, Result};

/// Absolute tolerance on the sum of a probability vector.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A probability mass function over a finite output alphabet.
///
/// Entries are validated against [`PROB_SUM_TOL`] and then renormalized so
/// the stored values sum to exactly 1.0 in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    entries: Vec<f64>,
}

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("empty distribution".into()));
        }
        for (i, &p) in entries.iter().enumerate() {
            if !(p >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "entry {i} is {p}, must be nonnegative"
                )));
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, outside 1 +/- {PROB_SUM_TOL}"
            )));
        }
        let mut entries: Vec<f64> = entries.iter().map(|p| p / sum).collect();
        // Nudge the largest entry so the stored sum is exactly 1.0.
        let largest = entries
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        let rest: f64 = entries
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != largest)
            .map(|(_, p)| p)
            .sum();
        entries[largest] = 1.0 - rest;
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

/// Kullback-Leibler divergence D(p || q) in nats.
///
/// Terms with p(y) = 0 contribute nothing; if p(y) > 0 while q(y) = 0 the
/// divergence is infinite.
pub fn kl_divergence(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "KL divergence over alphabets of size {} and {}",
            p.len(),
            q.len()
        )));
    }
    let mut d = 0.0;
    for (&pi, &qi) in p.entries().iter().zip(q.entries()) {
        if pi > 0.0 {
            if qi == 0.0 {
                return Ok(f64::INFINITY);
            }
            d += pi * (pi / qi).ln();
        }
    }
    // Rounding can leave a tiny negative residue when p == q.
    Ok(d.max(0.0))
}

/// A discrete memoryless channel: one output distribution per input letter,
/// with a designated idle input transmitted outside the sync span.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<ProbVector>,
    idle_symbol: usize,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<ProbVector>, idle_symbol: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidDistribution("channel with no inputs".into()));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Dimension("rows of unequal output alphabet".into()));
        }
        if idle_symbol >= rows.len() {
            return Err(Error::Dimension(format!(
                "idle symbol {idle_symbol} out of range for {} inputs",
                rows.len()
            )));
        }
        Ok(Self { rows, idle_symbol })
    }

    /// Binary-input binary-output channel with false-alarm probability
    /// `eps_f` and miss probability `eps_m`. Input 0 is idle, input 1 the
    /// mark symbol; output 1 is the "mark seen" letter.
    pub fn binary(eps_f: f64, eps_m: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps_f) || !(0.0..=1.0).contains(&eps_m) {
            return Err(Error::InvalidDistribution(
                "transition probabilities must lie in [0, 1]".into(),
            ));
        }
        Self::new(
            vec![
                ProbVector::new(vec![1.0 - eps_f, eps_f])?,
                ProbVector::new(vec![eps_m, 1.0 - eps_m])?,
            ],
            0,
        )
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn idle_symbol(&self) -> usize {
        self.idle_symbol
    }

    pub fn row(&self, x: usize) -> &ProbVector {
        &self.rows[x]
    }
}

/// Synchronization threshold of a channel together with the maximizing
/// input letter.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub alpha: f64,
    pub best_symbol: usize,
    pub per_symbol_divergence: Vec<f64>,
}

/// Computes alpha(Q) = max_x D(Q(.|x) || Q(.|x(0))) and the argmax input.
/// Ties break toward the lowest input index.
pub fn sync_threshold(q: &TransitionMatrix) -> ThresholdReport {
    let idle = q.row(q.idle_symbol());
    let per_symbol_divergence: Vec<f64> = (0..q.input_size())
        .map(|x| kl_divergence(q.row(x), idle).expect("rows share one alphabet"))
        .collect();
    let (best_symbol, &alpha) = per_symbol_divergence
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .unwrap();
    ThresholdReport {
        alpha,
        best_symbol,
        per_symbol_divergence,
    }
}

/// Samples one output letter y with probability Q(y|x).
///
/// Consumes exactly one uniform variate from `rng` per call and inverts the
/// CDF of the row.
pub fn sample_output<R: Rng + ?Sized>(q: &TransitionMatrix, x: usize, rng: &mut R) -> usize {
    let row = q.row(x);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (y, &p) in row.entries().iter().enumerate() {
        acc += p;
        if u < acc {
            return y;
        }
    }
    row.len() - 1
}
