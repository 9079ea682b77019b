//! Maximal-length shift-register sequences and the two-symbol sync-word
//! construction.
//!
//! The LFSR is the Fibonacci form: the state shifts toward the output end,
//! the evicted high-order bit is the output, and the feedback bit is the
//! parity of the tapped state bits. Primitivity of the shipped polynomials
//! is not trusted: `generate_msequence` verifies the full period at run
//! time.

use crate::error::{Error, Result};

/// A degree-M binary feedback polynomial plus a nonzero initial state.
///
/// `taps` lists the exponents of the polynomial terms with coefficient 1,
/// excluding the constant term; the degree itself must be present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfsrSpec {
    pub degree: u32,
    pub taps: Vec<u32>,
    pub seed: u32,
}

impl LfsrSpec {
    pub fn new(degree: u32, taps: Vec<u32>, seed: u32) -> Result<Self> {
        if !(2..=31).contains(&degree) {
            return Err(Error::Range(format!(
                "LFSR degree must lie in 2..=31, got {degree}"
            )));
        }
        if seed == 0 || seed >= 1u32 << degree {
            return Err(Error::ZeroSeed(degree));
        }
        if !taps.contains(&degree) || taps.iter().any(|&t| t == 0 || t > degree) {
            return Err(Error::Range(format!(
                "taps {taps:?} must be exponents in 1..={degree} including {degree}"
            )));
        }
        Ok(Self { degree, taps, seed })
    }

    fn tap_mask(&self) -> u32 {
        self.taps.iter().fold(0, |m, &t| m | (1 << (t - 1)))
    }
}

/// One primitive polynomial per degree M = 2..=16.
pub fn default_lfsr_table() -> Vec<LfsrSpec> {
    let polys: [(u32, &[u32]); 15] = [
        (2, &[2, 1]),
        (3, &[3, 1]),
        (4, &[4, 1]),
        (5, &[5, 2]),
        (6, &[6, 1]),
        (7, &[7, 3]),
        (8, &[8, 4, 3, 2]),
        (9, &[9, 4]),
        (10, &[10, 3]),
        (11, &[11, 2]),
        (12, &[12, 6, 4, 1]),
        (13, &[13, 4, 3, 1]),
        (14, &[14, 10, 6, 1]),
        (15, &[15, 1]),
        (16, &[16, 12, 3, 1]),
    ];
    polys
        .iter()
        .map(|&(m, taps)| LfsrSpec::new(m, taps.to_vec(), 1).expect("table entry valid"))
        .collect()
}

/// Looks up the spec for `degree` in a table.
pub fn lfsr_for_degree(table: &[LfsrSpec], degree: u32) -> Result<&LfsrSpec> {
    table
        .iter()
        .find(|s| s.degree == degree)
        .ok_or(Error::MissingDegree(degree))
}

/// One full period of the m-sequence, `true` for bit 1.
///
/// Fails with a primitivity error when the polynomial's period falls short
/// of 2^M - 1.
pub fn generate_msequence(spec: &LfsrSpec) -> Result<Vec<bool>> {
    let m = spec.degree;
    let mask = spec.tap_mask();
    let full = (1u64 << m) - 1;
    let reg_mask = full as u32;
    let mut state = spec.seed;
    let mut out = Vec::with_capacity(full as usize);
    for _ in 0..full {
        out.push(state >> (m - 1) & 1 == 1);
        let fb = (state & mask).count_ones() & 1;
        state = ((state << 1) | fb) & reg_mask;
        if state == spec.seed {
            break;
        }
    }
    if out.len() as u64 != full {
        return Err(Error::NotPrimitive {
            degree: m,
            period: out.len() as u64,
            expected: full,
        });
    }
    Ok(out)
}

/// A length-N pattern over the idle/mark symbols; `true` transmits the mark
/// symbol x(1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncWord {
    symbols: Vec<bool>,
    k_param: Option<u32>,
}

impl SyncWord {
    pub fn from_bits(symbols: Vec<bool>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Range("sync word must be nonempty".into()));
        }
        Ok(Self {
            symbols,
            k_param: None,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.symbols
    }

    pub fn n_ones(&self) -> usize {
        self.symbols.iter().filter(|&&b| b).count()
    }

    pub fn k_param(&self) -> Option<u32> {
        self.k_param
    }

    pub fn is_all_ones(&self) -> bool {
        self.symbols.iter().all(|&b| b)
    }

    /// Serialized form: a single line of '0'/'1' characters.
    pub fn to_line(&self) -> String {
        self.symbols.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let line = line.trim_end_matches(['\n', '\r']);
        let mut symbols = Vec::with_capacity(line.len());
        for c in line.chars() {
            match c {
                '0' => symbols.push(false),
                '1' => symbols.push(true),
                other => {
                    return Err(Error::InvalidDistribution(format!(
                        "sync word file contains '{other}', expected only '0'/'1'"
                    )))
                }
            }
        }
        Self::from_bits(symbols)
    }
}

/// The degree M forced by the sizing rule 2^(M-1) - 1 < N/K <= 2^M - 1.
pub fn construction_degree(n: usize, k: u32) -> Result<u32> {
    if k < 2 {
        return Err(Error::Range(format!("K must be at least 2, got {k}")));
    }
    if n < k as usize {
        return Err(Error::ConstructionUndefined { n, k });
    }
    let k = k as u128;
    let n = n as u128;
    let mut m = 1u32;
    // Intervals (K(2^(M-1)-1), K(2^M-1)] partition the integers above 0.
    while n > k * ((1u128 << m) - 1) {
        m += 1;
    }
    if m < 2 {
        return Err(Error::MissingDegree(m));
    }
    Ok(m)
}

/// The two-symbol sync word: an m-sequence prefix (with m-sequence zeros
/// mapped to the mark symbol) followed by all marks.
pub fn build_sync_word(n: usize, k: u32, table: &[LfsrSpec]) -> Result<SyncWord> {
    let m = construction_degree(n, k)?;
    let spec = lfsr_for_degree(table, m)?;
    let mseq = generate_msequence(spec)?;
    let prefix = mseq.len().min(n);
    let mut symbols: Vec<bool> = mseq[..prefix].iter().map(|&b| !b).collect();
    symbols.resize(n, true);
    Ok(SyncWord {
        symbols,
        k_param: Some(k),
    })
}

/// The word of N mark symbols, used by the finite-length decoder.
pub fn all_ones(n: usize) -> Result<SyncWord> {
    SyncWord::from_bits(vec![true; n])
}

/// Hamming distance between `seq` and each of its nonzero cyclic rotations.
pub fn cyclic_shift_distance(seq: &[bool]) -> Vec<usize> {
    let n = seq.len();
    (1..n)
        .map(|s| (0..n).filter(|&i| seq[i] != seq[(i + s) % n]).count())
        .collect()
}

/// Distances between a word and its delayed copy on their overlap, per
/// shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapDistances {
    pub shift: usize,
    /// Hamming distance over the length-(N - shift) overlap.
    pub total: usize,
    /// Distance counted only at overlap positions where the unshifted word
    /// carries the mark symbol.
    pub restricted: usize,
}

/// Pairs the word with its copy delayed by s slots: position i of the word
/// meets position i - s of the copy, over the length-(N - s) overlap. The
/// restricted count mirrors a decoder window trailing the true position by
/// s: it looks where its own word is a mark and the overlapping transmitted
/// symbol is idle.
pub fn overlap_distance_profile(word: &SyncWord) -> Vec<OverlapDistances> {
    let bits = word.bits();
    let n = bits.len();
    (1..n)
        .map(|s| {
            let mut total = 0;
            let mut restricted = 0;
            for i in s..n {
                if bits[i] != bits[i - s] {
                    total += 1;
                    if bits[i] {
                        restricted += 1;
                    }
                }
            }
            OverlapDistances {
                shift: s,
                total,
                restricted,
            }
        })
        .collect()
}
