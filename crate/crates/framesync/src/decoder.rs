//! The sequential joint-typicality decoder.
//!
//! The decoder watches a sliding length-N window of channel outputs, forms
//! the empirical output distribution restricted to the positions where the
//! sync word carries the mark symbol, and declares the first window whose
//! empirical distribution lies within an L-infinity ball of radius `mu`
//! around the reference distribution. Two engines share the contract: a
//! naive one that recomputes every window from scratch, and a streaming one
//! that updates per-letter counts from the position-set churn as the window
//! slides.

use crate::channel::ProbVector;
use crate::error::{Error, Result};
use crate::syncword::{all_ones, SyncWord};

/// Decoder configuration: word, reference output distribution at mark
/// positions, tolerance and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalityDecoder {
    word: SyncWord,
    reference: ProbVector,
    mu: f64,
    horizon: u64,
}

impl TypicalityDecoder {
    pub fn new(word: SyncWord, reference: ProbVector, mu: f64, horizon: u64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::Range(format!("mu must lie in (0, 1], got {mu}")));
        }
        if word.n_ones() == 0 {
            return Err(Error::Range(
                "sync word must contain at least one mark symbol".into(),
            ));
        }
        if horizon == 0 {
            return Err(Error::Range("horizon A must be at least 1".into()));
        }
        Ok(Self {
            word,
            reference,
            mu,
            horizon,
        })
    }

    pub fn word(&self) -> &SyncWord {
        &self.word
    }

    pub fn reference(&self) -> &ProbVector {
        &self.reference
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn stream_len(&self) -> u64 {
        self.horizon + self.word.len() as u64 - 1
    }
}

/// The finite-length specialization: all-marks word, reference (0, 1) over
/// a binary output alphabet, and mu = 1/N. Its acceptance rule collapses to
/// "all N window outputs are the mark letter".
pub fn finite_n_decoder(n: usize, horizon: u64) -> Result<TypicalityDecoder> {
    TypicalityDecoder::new(
        all_ones(n)?,
        ProbVector::new(vec![0.0, 1.0])?,
        1.0 / n as f64,
        horizon,
    )
}

/// Per-letter occurrence counts at mark positions of one window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowType {
    pub counts: Vec<u64>,
    pub n1: u64,
}

/// Counts output letters at the word's mark positions.
pub fn empirical_at(window: &[usize], word: &SyncWord, alphabet: usize) -> Result<WindowType> {
    if window.len() != word.len() {
        return Err(Error::Dimension(format!(
            "window of length {} against word of length {}",
            window.len(),
            word.len()
        )));
    }
    let mut counts = vec![0u64; alphabet];
    for (&y, &mark) in window.iter().zip(word.bits()) {
        if mark {
            counts[y] += 1;
        }
    }
    let n1 = counts.iter().sum();
    Ok(WindowType { counts, n1 })
}

/// Strict L-infinity typicality test against the reference distribution.
pub fn is_typical(t: &WindowType, reference: &ProbVector, mu: f64) -> bool {
    debug_assert_eq!(t.counts.len(), reference.len());
    typical_counts(&t.counts, t.n1, reference, mu)
}

fn typical_counts(counts: &[u64], n1: u64, reference: &ProbVector, mu: f64) -> bool {
    let n1 = n1 as f64;
    counts
        .iter()
        .zip(reference.entries())
        .all(|(&c, &q)| (c as f64 / n1 - q).abs() < mu)
}

fn check_exhausted(read: u64, expected: u64, got: Option<usize>) -> Result<usize> {
    got.ok_or(Error::StreamExhausted { read, expected })
}

/// Streaming engine: returns the smallest t in 1..=A whose window is
/// typical, reading no symbol beyond index t+N-1.
///
/// Per step the mark-position set of the window changes only at the
/// precomputed churn offsets, so the cost per symbol is O(churn); for the
/// all-marks word that is O(1).
pub fn run_sequential<I>(stream: &mut I, dec: &TypicalityDecoder) -> Result<Option<u64>>
where
    I: Iterator<Item = usize>,
{
    let bits = dec.word().bits();
    let n = bits.len();
    let alphabet = dec.reference().len();
    let expected = dec.stream_len();

    // Offsets (relative to the window start t) whose mark status changes
    // when the window advances to t+1. Offset j is a mark of window t iff
    // bits[j]; of window t+1 iff j >= 1 and bits[j-1].
    let removals: Vec<usize> = (0..n)
        .filter(|&j| bits[j] && (j == 0 || !bits[j - 1]))
        .collect();
    let additions: Vec<usize> = (1..=n)
        .filter(|&j| bits[j - 1] && (j == n || !bits[j]))
        .collect();

    // Ring buffer over positions t .. t+N (one beyond the window).
    let mut ring = vec![0usize; n + 1];
    let mut read = 0u64;
    for slot in ring.iter_mut().take(n) {
        *slot = check_exhausted(read, expected, stream.next())?;
        read += 1;
    }
    let mut counts = vec![0u64; alphabet];
    for (j, &mark) in bits.iter().enumerate() {
        if mark {
            counts[ring[j]] += 1;
        }
    }
    let n1 = dec.word().n_ones() as u64;
    let mu = dec.mu();

    let mut t = 1u64;
    loop {
        if typical_counts(&counts, n1, dec.reference(), mu) {
            return Ok(Some(t));
        }
        if t == dec.horizon() {
            return Ok(None);
        }
        // Advance: read the symbol at offset n from the current start.
        let incoming = check_exhausted(read, expected, stream.next())?;
        read += 1;
        ring[(read as usize - 1) % (n + 1)] = incoming;
        let base = t - 1; // ring index of offset j is (base + j) mod (n+1)
        for &j in &removals {
            counts[ring[(base as usize + j) % (n + 1)]] -= 1;
        }
        for &j in &additions {
            counts[ring[(base as usize + j) % (n + 1)]] += 1;
        }
        t += 1;
    }
}

/// Reference engine with the same contract, recomputing every window from
/// scratch.
pub fn run_sequential_naive<I>(stream: &mut I, dec: &TypicalityDecoder) -> Result<Option<u64>>
where
    I: Iterator<Item = usize>,
{
    let n = dec.word().len();
    let alphabet = dec.reference().len();
    let expected = dec.stream_len();
    let mut buf: Vec<usize> = Vec::with_capacity(n);
    let mut read = 0u64;
    for _ in 0..n {
        buf.push(check_exhausted(read, expected, stream.next())?);
        read += 1;
    }
    for t in 1..=dec.horizon() {
        let start = (t - 1) as usize;
        let wt = empirical_at(&buf[start..start + n], dec.word(), alphabet)?;
        if is_typical(&wt, dec.reference(), dec.mu()) {
            return Ok(Some(t));
        }
        if t < dec.horizon() {
            buf.push(check_exhausted(read, expected, stream.next())?);
            read += 1;
        }
    }
    Ok(None)
}
