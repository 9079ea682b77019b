//! Trial generation, error-event classification, batch estimation, exact
//! oracles, analytic bounds and the regime sweeps.
//!
//! Per-trial randomness derives from (master_seed, trial_index) through a
//! dedicated ChaCha stream per trial, so aggregation order and worker count
//! cannot change any estimate. Within a trial the draw order is fixed: the
//! transmission slot v first, then the N sync-span outputs, then noise
//! outputs in position order as the decoder consumes them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::awgn::{binary_alpha, quantize_awgn, AwgnParams, QuantizeMode};
use crate::channel::{sample_output, sync_threshold, ProbVector, TransitionMatrix};
use crate::decoder::{empirical_at, is_typical, run_sequential, TypicalityDecoder};
use crate::error::{Error, Result};
use crate::syncword::{build_sync_word, default_lfsr_table, SyncWord};

/// Largest admissible uncertainty window.
pub const MAX_HORIZON: u64 = 1 << 62;

/// One synchronization experiment: channel, decoder (which carries the word
/// and horizon A) and the seed all trials derive from.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    channel: TransitionMatrix,
    decoder: TypicalityDecoder,
    master_seed: u64,
    mark_symbol: usize,
}

impl TrialConfig {
    pub fn new(
        channel: TransitionMatrix,
        decoder: TypicalityDecoder,
        master_seed: u64,
    ) -> Result<Self> {
        if decoder.reference().len() != channel.output_size() {
            return Err(Error::Dimension(format!(
                "decoder reference over {} letters, channel emits {}",
                decoder.reference().len(),
                channel.output_size()
            )));
        }
        if decoder.horizon() > MAX_HORIZON {
            return Err(Error::Range(format!(
                "horizon {} exceeds the 2^62 cap",
                decoder.horizon()
            )));
        }
        let mark_symbol = sync_threshold(&channel).best_symbol;
        Ok(Self {
            channel,
            decoder,
            master_seed,
            mark_symbol,
        })
    }

    pub fn channel(&self) -> &TransitionMatrix {
        &self.channel
    }

    pub fn decoder(&self) -> &TypicalityDecoder {
        &self.decoder
    }

    pub fn word(&self) -> &SyncWord {
        self.decoder.word()
    }

    pub fn horizon(&self) -> u64 {
        self.decoder.horizon()
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Input letter transmitted at mark positions of the word.
    pub fn mark_symbol(&self) -> usize {
        self.mark_symbol
    }

    fn trial_rng(&self, trial_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(trial_index);
        rng
    }
}

/// Outcome class of one trial: a three-way partition of {v-hat != v}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Correct,
    /// Declaration on pure noise (before v - N + 1) or after v.
    E1,
    /// Declaration on a window partially overlapping the sync span,
    /// v - N + 1 .. v - 1.
    E2,
    /// No declaration within the horizon.
    E3,
}

/// One simulated transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub v: u64,
    pub v_hat: Option<u64>,
    pub outcome: Outcome,
    pub decision_time: Option<u64>,
    /// Whether the window aligned with the true position was itself
    /// typical; logged separately because a trial where it is not can still
    /// end as E1 through a later declaration.
    pub sync_window_typical: bool,
}

fn classify(v: u64, v_hat: Option<u64>, n: u64) -> Outcome {
    match v_hat {
        None => Outcome::E3,
        Some(t) if t == v => Outcome::Correct,
        Some(t) if t < v && v - t < n => Outcome::E2,
        Some(_) => Outcome::E1,
    }
}

fn outcome_record(cfg: &TrialConfig, v: u64, v_hat: Option<u64>, sync_typical: bool) -> TrialOutcome {
    let n = cfg.word().len() as u64;
    TrialOutcome {
        v,
        v_hat,
        outcome: classify(v, v_hat, n),
        decision_time: v_hat.map(|t| t + n - 1),
        sync_window_typical: sync_typical,
    }
}

fn sync_window_typical(cfg: &TrialConfig, sync_block: &[usize]) -> bool {
    let wt = empirical_at(sync_block, cfg.word(), cfg.channel.output_size())
        .expect("sync block has word length");
    is_typical(&wt, cfg.decoder.reference(), cfg.decoder.mu())
}

/// Runs one symbol-exact trial.
pub fn run_trial(cfg: &TrialConfig, trial_index: u64) -> TrialOutcome {
    let mut rng = cfg.trial_rng(trial_index);
    let a = cfg.horizon();
    let n = cfg.word().len() as u64;
    let v = rng.random_range(1..=a);

    let sync_block: Vec<usize> = cfg
        .word()
        .bits()
        .iter()
        .map(|&mark| {
            let x = if mark {
                cfg.mark_symbol
            } else {
                cfg.channel.idle_symbol()
            };
            sample_output(&cfg.channel, x, &mut rng)
        })
        .collect();

    let idle = cfg.channel.idle_symbol();
    let mut pos = 0u64;
    let channel = &cfg.channel;
    let sync = &sync_block;
    let v_hat = {
        let mut stream = std::iter::from_fn(|| {
            pos += 1;
            if pos > a + n - 1 {
                return None;
            }
            Some(if pos >= v && pos < v + n {
                sync[(pos - v) as usize]
            } else {
                sample_output(channel, idle, &mut rng)
            })
        });
        run_sequential(&mut stream, &cfg.decoder).expect("stream covers the horizon")
    };
    outcome_record(cfg, v, v_hat, sync_window_typical(cfg, &sync_block))
}

/// Draws the gap (number of idle outputs) before the next mark output in a
/// noise segment.
fn geometric_gap<R: Rng + ?Sized>(eps_f: f64, rng: &mut R) -> u64 {
    if eps_f >= 1.0 {
        return 0;
    }
    let u: f64 = rng.random();
    if u == 0.0 {
        return u64::MAX;
    }
    let g = u.ln() / (1.0 - eps_f).ln();
    if g >= MAX_HORIZON as f64 {
        u64::MAX
    } else {
        g as u64
    }
}

/// First start t (1-based, t <= horizon) of a run of `n` consecutive mark
/// outputs in a pure-noise stream of length horizon + n - 1, found by
/// skipping between mark outputs with geometric gaps.
///
/// `collect_from`, when set, gathers the mark positions at or after it so a
/// caller can reconstruct the tail of the segment.
#[allow(clippy::too_many_arguments)]
fn noise_first_run_scan<R: Rng + ?Sized>(
    eps_f: f64,
    n: u64,
    seg_start: u64,
    seg_end: u64,
    init_run: u64,
    horizon_last_start: u64,
    collect_from: Option<u64>,
    collected: &mut Vec<u64>,
    rng: &mut R,
) -> Option<u64> {
    if eps_f <= 0.0 || seg_end < seg_start {
        return None;
    }
    let mut run = init_run;
    let mut last_mark = seg_start.wrapping_sub(1);
    let mut pos = seg_start.wrapping_sub(1);
    loop {
        let gap = geometric_gap(eps_f, rng);
        if gap == u64::MAX || seg_end - pos <= gap {
            return None;
        }
        pos += 1 + gap;
        run = if pos == last_mark + 1 && (run > 0 || pos > seg_start) {
            run + 1
        } else {
            1
        };
        last_mark = pos;
        if let Some(from) = collect_from {
            if pos >= from {
                collected.push(pos);
            }
        }
        if run >= n {
            let start = pos - n + 1;
            if start <= horizon_last_start {
                return Some(start);
            }
            // A longer run cannot start earlier; nothing left to find.
            return None;
        }
    }
}

/// First false-alarm position in pure noise: the smallest t <= horizon such
/// that positions t .. t+n-1 of a noise-only binary stream are all marks.
/// Exposed for validation of the accelerated path against the run-length
/// Markov chain.
pub fn noise_first_run<R: Rng + ?Sized>(
    eps_f: f64,
    n: u64,
    horizon: u64,
    rng: &mut R,
) -> Option<u64> {
    let mut sink = Vec::new();
    noise_first_run_scan(
        eps_f,
        n,
        1,
        horizon + n - 1,
        0,
        horizon,
        None,
        &mut sink,
        rng,
    )
}

/// Accelerated trial for the finite-length setup: all-marks word, binary
/// channel, reference (0, 1) and mu <= 1/N, where a declaration is exactly
/// a run of N consecutive mark outputs. Noise segments are skipped with
/// geometric gaps; the sync span and its boundary windows are simulated
/// symbol-exact.
pub fn run_trial_accelerated(cfg: &TrialConfig, trial_index: u64) -> Result<TrialOutcome> {
    let n = cfg.word().len() as u64;
    if !cfg.word().is_all_ones() {
        return Err(Error::Unsupported(
            "accelerated trials require the all-marks word".into(),
        ));
    }
    if cfg.channel.output_size() != 2 || cfg.channel.input_size() != 2 {
        return Err(Error::Unsupported(
            "accelerated trials require a binary channel".into(),
        ));
    }
    let reference = cfg.decoder.reference();
    if reference[1] != 1.0 || cfg.decoder.mu() > 1.0 / n as f64 {
        return Err(Error::Unsupported(
            "accelerated trials require reference (0, 1) and mu <= 1/N".into(),
        ));
    }
    let eps_f = cfg.channel.row(cfg.channel.idle_symbol())[1];

    let mut rng = cfg.trial_rng(trial_index);
    let a = cfg.horizon();
    let v = rng.random_range(1..=a);
    let sync_block: Vec<usize> = (0..n)
        .map(|_| sample_output(&cfg.channel, cfg.mark_symbol, &mut rng))
        .collect();
    let sync_typical = sync_block.iter().all(|&y| y == 1);
    let finish = |v_hat: Option<u64>| outcome_record(cfg, v, v_hat, sync_typical);

    // Phase 1: noise prefix, positions 1 .. v-1. Runs wholly inside it give
    // declarations at t <= v - N. Mark positions in the last N-1 slots are
    // retained for the boundary windows.
    let tail_from = v.saturating_sub(n - 1).max(1);
    let mut tail_marks: Vec<u64> = Vec::new();
    if v > 1 {
        if let Some(t) = noise_first_run_scan(
            eps_f,
            n,
            1,
            v - 1,
            0,
            a,
            Some(tail_from),
            &mut tail_marks,
            &mut rng,
        ) {
            return Ok(finish(Some(t)));
        }
    }

    // Phase 2: boundary and sync windows, t in max(1, v-N+1) .. min(v+N-1, A),
    // checked symbol-exact over positions lo .. hi.
    let lo = tail_from;
    let stream_end = a + n - 1;
    let hi = (v + 2 * n - 2).min(stream_end);
    let len = (hi - lo + 1) as usize;
    let mut window: Vec<bool> = vec![false; len];
    for &p in &tail_marks {
        window[(p - lo) as usize] = true;
    }
    for (i, &y) in sync_block.iter().enumerate() {
        let p = v + i as u64;
        window[(p - lo) as usize] = y == 1;
    }
    for p in v + n..=hi {
        window[(p - lo) as usize] = sample_output(&cfg.channel, cfg.channel.idle_symbol(), &mut rng) == 1;
    }
    let t_end = (v + n - 1).min(a);
    for t in lo..=t_end {
        if t + n - 1 > hi {
            break;
        }
        let s = (t - lo) as usize;
        if window[s..s + n as usize].iter().all(|&b| b) {
            return Ok(finish(Some(t)));
        }
    }

    // Phase 3: post-sync noise, positions hi+1 .. A+N-1, with the trailing
    // run of mark outputs among the already-drawn noise positions >= v+N
    // carried in.
    if hi < stream_end {
        let mut carry = 0u64;
        let mut p = hi;
        while p >= v + n && window[(p - lo) as usize] {
            carry += 1;
            if p == v + n {
                break;
            }
            p -= 1;
        }
        let mut sink = Vec::new();
        if let Some(t) = noise_first_run_scan(
            eps_f,
            n,
            hi + 1,
            stream_end,
            carry,
            a,
            None,
            &mut sink,
            &mut rng,
        ) {
            return Ok(finish(Some(t)));
        }
    }
    Ok(finish(None))
}

/// Aggregated error estimates with a 95% Wilson interval on the total
/// error probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchEstimate {
    pub trials: u64,
    pub p_e1: f64,
    pub p_e2: f64,
    pub p_e3: f64,
    pub p_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Raw outcome counts; addition is associative and order-independent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub correct: u64,
    pub e1: u64,
    pub e2: u64,
    pub e3: u64,
}

impl OutcomeCounts {
    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Correct => self.correct += 1,
            Outcome::E1 => self.e1 += 1,
            Outcome::E2 => self.e2 += 1,
            Outcome::E3 => self.e3 += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.correct + self.e1 + self.e2 + self.e3
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.correct += other.correct;
        self.e1 += other.e1;
        self.e2 += other.e2;
        self.e3 += other.e3;
        self
    }

    pub fn estimate(&self) -> BatchEstimate {
        let n = self.total();
        let errors = self.e1 + self.e2 + self.e3;
        let (ci_low, ci_high) = wilson_interval(errors, n);
        BatchEstimate {
            trials: n,
            p_e1: self.e1 as f64 / n as f64,
            p_e2: self.e2 as f64 / n as f64,
            p_e3: self.e3 as f64 / n as f64,
            p_error: errors as f64 / n as f64,
            ci_low,
            ci_high,
        }
    }
}

/// 95% Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    let z = 1.959963984540054_f64;
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    (((center - half).max(0.0)), ((center + half).min(1.0)))
}

/// Trial engine selection for batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Exact,
    Accelerated,
}

/// Runs `n_trials` independent trials on a pool of `workers` threads.
///
/// The result is a pure function of (cfg, n_trials, engine): trials are
/// indexed, each derives its own random stream, and only counts are merged.
pub fn run_batch(
    cfg: &TrialConfig,
    n_trials: u64,
    workers: usize,
    engine: Engine,
) -> Result<BatchEstimate> {
    if n_trials == 0 {
        return Err(Error::Range("n_trials must be at least 1".into()));
    }
    if engine == Engine::Accelerated {
        // Surface precondition violations before spawning workers.
        run_trial_accelerated(cfg, 0)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Unsupported(format!("worker pool: {e}")))?;
    let counts = pool.install(|| {
        use rayon::prelude::*;
        (0..n_trials)
            .into_par_iter()
            .fold(OutcomeCounts::default, |mut acc, i| {
                let outcome = match engine {
                    Engine::Exact => run_trial(cfg, i),
                    Engine::Accelerated => {
                        run_trial_accelerated(cfg, i).expect("preconditions checked above")
                    }
                };
                acc.record(outcome.outcome);
                acc
            })
            .reduce(OutcomeCounts::default, OutcomeCounts::merge)
    });
    Ok(counts.estimate())
}

/// Entry t: probability that a noise-only binary stream of length t + N - 1
/// contains a run of N consecutive mark outputs starting at some t' <= t.
/// Exact run-length Markov chain over states 0..N with absorption at N.
pub fn exact_false_alarm_cdf(eps_f: f64, n: usize, len: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&eps_f) {
        return Err(Error::Range(format!("eps_f must lie in [0, 1], got {eps_f}")));
    }
    if n == 0 {
        return Err(Error::Range("run length N must be at least 1".into()));
    }
    let mut state = vec![0.0f64; n]; // run length 0 .. n-1
    state[0] = 1.0;
    let mut absorbed = 0.0f64;
    let mut cdf = Vec::with_capacity(len);
    for step in 1..=(len + n - 1) {
        let mut next = vec![0.0f64; n];
        let mut to_zero = 0.0;
        for (run, &mass) in state.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            if run + 1 == n {
                absorbed += mass * eps_f;
            } else {
                next[run + 1] += mass * eps_f;
            }
            to_zero += mass * (1.0 - eps_f);
        }
        next[0] += to_zero;
        state = next;
        if step >= n {
            cdf.push(absorbed);
        }
    }
    Ok(cdf)
}

/// Exact outcome probabilities by enumerating every binary output string.
pub fn exact_event_probs(cfg: &TrialConfig) -> Result<[f64; 4]> {
    let a = cfg.horizon();
    let n = cfg.word().len() as u64;
    let len = a + n - 1;
    if cfg.channel.output_size() != 2 {
        return Err(Error::Unsupported(
            "exact enumeration requires a binary output alphabet".into(),
        ));
    }
    if len > 22 {
        return Err(Error::SizeLimit(format!(
            "A + N - 1 = {len} exceeds the enumeration cap of 22"
        )));
    }
    let len = len as usize;
    let idle_row = cfg.channel.row(cfg.channel.idle_symbol());
    let mut probs = [0.0f64; 4];
    let mut stream = vec![0usize; len];
    for code in 0u32..(1u32 << len) {
        for (i, slot) in stream.iter_mut().enumerate() {
            *slot = (code >> i & 1) as usize;
        }
        let v_hat = crate::decoder::run_sequential_naive(&mut stream.iter().copied(), &cfg.decoder)?;
        // Idle-law prefix and suffix products bracket the sync span, so a
        // zero idle probability never needs dividing out.
        let mut prefix = vec![1.0f64; len + 1];
        for (i, &y) in stream.iter().enumerate() {
            prefix[i + 1] = prefix[i] * idle_row[y];
        }
        let mut suffix = vec![1.0f64; len + 1];
        for (i, &y) in stream.iter().enumerate().rev() {
            suffix[i] = suffix[i + 1] * idle_row[y];
        }
        for v in 1..=a {
            let span = (v - 1) as usize;
            let mut p = prefix[span] * suffix[span + cfg.word().len()];
            for (j, &mark) in cfg.word().bits().iter().enumerate() {
                let y = stream[span + j];
                let x = if mark {
                    cfg.mark_symbol
                } else {
                    cfg.channel.idle_symbol()
                };
                p *= cfg.channel.row(x)[y];
            }
            let outcome = classify(v, v_hat, n);
            let idx = match outcome {
                Outcome::Correct => 0,
                Outcome::E1 => 1,
                Outcome::E2 => 2,
                Outcome::E3 => 3,
            };
            probs[idx] += p / a as f64;
        }
    }
    Ok(probs)
}

/// The finite-length closed-form bounds on the three error events, clamped
/// to [0, 1]: A eps_f^N, (N-1) eps_f and N eps_m.
pub fn analytic_bounds(cfg: &TrialConfig) -> Result<[f64; 3]> {
    if !cfg.word().is_all_ones() || cfg.channel.output_size() != 2 || cfg.channel.input_size() != 2
    {
        return Err(Error::Unsupported(
            "bounds apply to the all-marks word on a binary channel".into(),
        ));
    }
    let eps_f = cfg.channel.row(cfg.channel.idle_symbol())[1];
    let eps_m = cfg.channel.row(cfg.mark_symbol)[0];
    let n = cfg.word().len() as f64;
    let a = cfg.horizon() as f64;
    Ok([
        (a * eps_f.powf(n)).clamp(0.0, 1.0),
        ((n - 1.0) * eps_f).clamp(0.0, 1.0),
        (n * eps_m).clamp(0.0, 1.0),
    ])
}

/// A = round(e^{r N alpha}), the uncertainty window at asynchronism margin
/// r. Fails beyond the 2^62 cap.
pub fn required_horizon(n: usize, alpha: f64, r: f64) -> Result<u64> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::Range(format!(
            "alpha must be finite and nonnegative, got {alpha}"
        )));
    }
    if !(r > 0.0 && r <= 2.0) {
        return Err(Error::Range(format!("margin r must lie in (0, 2], got {r}")));
    }
    let a = (r * n as f64 * alpha).exp().round();
    if !(a < MAX_HORIZON as f64) {
        return Err(Error::Range(format!(
            "A = e^{{r N alpha}} = {a:.3e} exceeds the 2^62 cap (N = {n}, alpha = {alpha}, r = {r})"
        )));
    }
    Ok((a as u64).max(1))
}

/// Channel description for a sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepChannel {
    /// Fixed binary DMC.
    Explicit { eps_f: f64, eps_m: f64 },
    /// Quantized AWGN; `power` is the fixed power where the regime does not
    /// sweep it.
    Awgn {
        power: Option<f64>,
        sigma2: f64,
        a: f64,
    },
}

/// Word choice for a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepWord {
    AllOnes,
    Construction { k: u32 },
}

/// Reference distribution mode for the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMode {
    /// The actual channel row at the mark symbol.
    ChannelRow,
    /// The limiting distribution (0, 1): mark output certain.
    Limit,
}

/// The three experimental regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Channel fixed, sync length N swept, A = round(e^{r N alpha}).
    FixedPower,
    /// Energy E = N P fixed, N swept with P = E / N.
    JointScaling,
    /// N fixed, power P swept, A = round(e^{r N P / 2 sigma^2}).
    FixedLength,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::FixedPower => "fixed_power",
            Regime::JointScaling => "joint_scaling",
            Regime::FixedLength => "fixed_length",
        }
    }
}

/// Full sweep description.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub regime: Regime,
    pub channel: SweepChannel,
    pub word: SweepWord,
    pub reference: ReferenceMode,
    /// Explicit tolerance; `None` selects 1/N for the all-marks word and
    /// 0.1 otherwise.
    pub mu: Option<f64>,
    pub r: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub workers: usize,
    /// Swept N values (fixed_power, joint_scaling) or the single N
    /// (fixed_length).
    pub n_values: Vec<usize>,
    /// Swept powers (fixed_length only).
    pub p_values: Vec<f64>,
    /// Sync packet energy E = N P (joint_scaling only).
    pub energy: Option<f64>,
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub regime: Regime,
    pub horizon: u64,
    pub n: usize,
    pub power: Option<f64>,
    pub sigma2: Option<f64>,
    pub a: Option<f64>,
    pub k_param: Option<u32>,
    pub mu: f64,
    pub r: f64,
    pub alpha: f64,
    pub estimate: BatchEstimate,
    pub master_seed: u64,
}

fn point_channel(spec: &SweepSpec, power: Option<f64>) -> Result<(TransitionMatrix, f64)> {
    match spec.channel {
        SweepChannel::Explicit { eps_f, eps_m } => {
            let ch = crate::awgn::BinaryDmc::new(eps_f, eps_m)?;
            Ok((ch.to_transition_matrix()?, binary_alpha(&ch)))
        }
        SweepChannel::Awgn { sigma2, a, .. } => {
            let p = power.ok_or_else(|| Error::Range("AWGN sweep point without a power".into()))?;
            let params = AwgnParams::new(p, sigma2, a)?;
            let ch = quantize_awgn(&params, QuantizeMode::Exact)?;
            Ok((ch.to_transition_matrix()?, binary_alpha(&ch)))
        }
    }
}

fn point_word(spec: &SweepSpec, n: usize) -> Result<SyncWord> {
    match spec.word {
        SweepWord::AllOnes => crate::syncword::all_ones(n),
        SweepWord::Construction { k } => build_sync_word(n, k, &default_lfsr_table()),
    }
}

fn point_mu(spec: &SweepSpec, word: &SyncWord) -> f64 {
    spec.mu
        .unwrap_or(if word.is_all_ones() { 1.0 / word.len() as f64 } else { 0.1 })
}

fn point_reference(spec: &SweepSpec, channel: &TransitionMatrix) -> Result<ProbVector> {
    match spec.reference {
        ReferenceMode::ChannelRow => {
            Ok(channel.row(sync_threshold(channel).best_symbol).clone())
        }
        ReferenceMode::Limit => {
            if channel.output_size() != 2 {
                return Err(Error::Unsupported(
                    "limit reference defined for binary channels only".into(),
                ));
            }
            ProbVector::new(vec![0.0, 1.0])
        }
    }
}

/// Plans and runs one grid point; exposed so orchestration can flush
/// completed points before a later one fails.
pub fn run_sweep_point(spec: &SweepSpec, index: usize) -> Result<SweepPoint> {
    let (n, power) = grid_point(spec, index)?;
    let (channel, alpha) = point_channel(spec, power)?;
    let word = point_word(spec, n)?;
    let mu = point_mu(spec, &word);
    let reference = point_reference(spec, &channel)?;

    let (sigma2, a_frac) = match spec.channel {
        SweepChannel::Awgn { sigma2, a, .. } => (Some(sigma2), Some(a)),
        SweepChannel::Explicit { .. } => (None, None),
    };
    // fixed_length paces A by the energy asymptote P / 2 sigma^2; the other
    // regimes use the channel's actual threshold.
    let pacing_alpha = match spec.regime {
        Regime::FixedLength => crate::awgn::awgn_alpha_limit(
            power.expect("fixed_length sweeps power"),
            sigma2.expect("fixed_length is an AWGN regime"),
        )?,
        _ => alpha,
    };
    let horizon = required_horizon(n, pacing_alpha, spec.r)?;
    let decoder = TypicalityDecoder::new(word.clone(), reference, mu, horizon)?;
    let cfg = TrialConfig::new(channel, decoder, spec.master_seed)?;

    // Prefer geometric skipping whenever the configuration admits it.
    let engine = if run_trial_accelerated(&cfg, 0).is_ok() {
        Engine::Accelerated
    } else {
        Engine::Exact
    };
    let estimate = run_batch(&cfg, spec.trials, spec.workers, engine)?;
    Ok(SweepPoint {
        regime: spec.regime,
        horizon,
        n,
        power,
        sigma2,
        a: a_frac,
        k_param: word.k_param(),
        mu,
        r: spec.r,
        alpha: pacing_alpha,
        estimate,
        master_seed: spec.master_seed,
    })
}

/// Number of grid points in a sweep.
pub fn grid_len(spec: &SweepSpec) -> Result<usize> {
    let len = match spec.regime {
        Regime::FixedPower | Regime::JointScaling => spec.n_values.len(),
        Regime::FixedLength => spec.p_values.len(),
    };
    if len == 0 {
        return Err(Error::Range("empty sweep grid".into()));
    }
    Ok(len)
}

fn grid_point(spec: &SweepSpec, index: usize) -> Result<(usize, Option<f64>)> {
    match spec.regime {
        Regime::FixedPower => {
            let n = spec.n_values[index];
            let power = match spec.channel {
                SweepChannel::Awgn { power, .. } => Some(power.ok_or_else(|| {
                    Error::Range("fixed_power over AWGN requires a fixed power".into())
                })?),
                SweepChannel::Explicit { .. } => None,
            };
            Ok((n, power))
        }
        Regime::JointScaling => {
            let n = spec.n_values[index];
            let e = spec
                .energy
                .ok_or_else(|| Error::Range("joint_scaling requires the energy E".into()))?;
            Ok((n, Some(e / n as f64)))
        }
        Regime::FixedLength => {
            let n = *spec
                .n_values
                .first()
                .ok_or_else(|| Error::Range("fixed_length requires N".into()))?;
            Ok((n, Some(spec.p_values[index])))
        }
    }
}

/// Runs the whole grid.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepPoint>> {
    (0..grid_len(spec)?)
        .map(|i| run_sweep_point(spec, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::finite_n_decoder;

    fn binary_cfg(a: u64, n: usize, eps_f: f64, eps_m: f64, seed: u64) -> TrialConfig {
        let channel = TransitionMatrix::binary(eps_f, eps_m).unwrap();
        let decoder = finite_n_decoder(n, a).unwrap();
        TrialConfig::new(channel, decoder, seed).unwrap()
    }

    #[test]
    fn noiseless_trial_is_correct() {
        let cfg = binary_cfg(30, 4, 0.0, 0.0, 1);
        for i in 0..50 {
            let t = run_trial(&cfg, i);
            assert_eq!(t.outcome, Outcome::Correct);
            assert_eq!(t.v_hat, Some(t.v));
            assert_eq!(t.decision_time, Some(t.v + 3));
            assert!(t.sync_window_typical);
        }
    }

    #[test]
    fn invisible_sync_is_e3() {
        // eps_f = 0, eps_m = 1: the mark output never appears.
        let cfg = binary_cfg(20, 3, 0.0, 1.0, 2);
        for i in 0..50 {
            let t = run_trial(&cfg, i);
            assert_eq!(t.outcome, Outcome::E3);
            assert_eq!(t.v_hat, None);
        }
    }

    #[test]
    fn classification_partition() {
        let n = 4;
        assert_eq!(classify(10, Some(10), n), Outcome::Correct);
        assert_eq!(classify(10, Some(9), n), Outcome::E2);
        assert_eq!(classify(10, Some(7), n), Outcome::E2);
        assert_eq!(classify(10, Some(6), n), Outcome::E1);
        assert_eq!(classify(10, Some(11), n), Outcome::E1);
        assert_eq!(classify(10, None, n), Outcome::E3);
    }

    #[test]
    fn batch_deterministic_across_workers() {
        let cfg = binary_cfg(50, 3, 0.2, 0.1, 99);
        let e1 = run_batch(&cfg, 4000, 1, Engine::Exact).unwrap();
        let e4 = run_batch(&cfg, 4000, 4, Engine::Exact).unwrap();
        let e16 = run_batch(&cfg, 4000, 16, Engine::Exact).unwrap();
        assert_eq!(e1, e4);
        assert_eq!(e1, e16);
        let a1 = run_batch(&cfg, 4000, 1, Engine::Accelerated).unwrap();
        let a16 = run_batch(&cfg, 4000, 16, Engine::Accelerated).unwrap();
        assert_eq!(a1, a16);
    }

    #[test]
    fn batch_probabilities_partition() {
        let cfg = binary_cfg(40, 3, 0.3, 0.2, 5);
        let e = run_batch(&cfg, 20_000, 4, Engine::Exact).unwrap();
        assert!((e.p_e1 + e.p_e2 + e.p_e3 - e.p_error).abs() < 1e-12);
        assert!(e.ci_low <= e.p_error && e.p_error <= e.ci_high);
    }

    #[test]
    fn noiseless_batch_wilson_at_zero() {
        let cfg = binary_cfg(30, 4, 0.0, 0.0, 1);
        let n_trials = 10_000u64;
        let e = run_batch(&cfg, n_trials, 2, Engine::Exact).unwrap();
        assert_eq!(e.p_error, 0.0);
        assert!(e.ci_high < 3.9 / n_trials as f64);
        assert_eq!(e.ci_low, 0.0);
    }

    #[test]
    fn wilson_width_at_moderate_p() {
        // p about 0.1 at 10^4 trials: width comfortably below 0.02.
        let (lo, hi) = wilson_interval(1000, 10_000);
        assert!(hi - lo <= 0.02, "width {}", hi - lo);
        assert!(lo < 0.1 && 0.1 < hi);
    }

    #[test]
    fn accelerated_rejects_unsupported() {
        let channel = TransitionMatrix::binary(0.1, 0.1).unwrap();
        let word = SyncWord::from_bits(vec![true, false, true]).unwrap();
        let reference = ProbVector::new(vec![0.0, 1.0]).unwrap();
        let decoder = TypicalityDecoder::new(word, reference, 0.3, 10).unwrap();
        let cfg = TrialConfig::new(channel, decoder, 0).unwrap();
        assert!(matches!(
            run_trial_accelerated(&cfg, 0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn accelerated_matches_exact_on_degenerate_channels() {
        // eps_f = 0: no false alarm is possible in either engine.
        let cfg = binary_cfg(40, 3, 0.0, 0.3, 11);
        for i in 0..200 {
            assert_eq!(run_trial_accelerated(&cfg, i).unwrap(), run_trial(&cfg, i));
        }
        // eps_f = 1: everything outside the sync span is a mark output.
        let cfg = binary_cfg(40, 3, 1.0, 0.3, 12);
        for i in 0..200 {
            assert_eq!(run_trial_accelerated(&cfg, i).unwrap(), run_trial(&cfg, i));
        }
    }

    #[test]
    fn exact_cdf_examples() {
        let cdf = exact_false_alarm_cdf(1.0, 2, 3).unwrap();
        assert_eq!(cdf[0], 1.0);
        let cdf = exact_false_alarm_cdf(0.0, 3, 5).unwrap();
        assert!(cdf.iter().all(|&p| p == 0.0));
        // Brute force over the 8 length-3 strings: 011, 110, 111 contain a
        // run of two marks.
        let cdf = exact_false_alarm_cdf(0.5, 2, 2).unwrap();
        assert!((cdf[1] - 0.375).abs() < 1e-15, "got {}", cdf[1]);
        assert!((cdf[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exact_cdf_matches_enumeration() {
        // Independent oracle: enumerate all binary strings.
        let eps = 0.3;
        let n = 3usize;
        let len = 6usize;
        let exact = exact_false_alarm_cdf(eps, n, len).unwrap();
        for t in 1..=len {
            let bits = t + n - 1;
            let mut total = 0.0;
            for code in 0u32..(1 << bits) {
                let s: Vec<bool> = (0..bits).map(|i| code >> i & 1 == 1).collect();
                let has_run = s.windows(n).any(|w| w.iter().all(|&b| b));
                if has_run {
                    let ones = s.iter().filter(|&&b| b).count();
                    total += eps.powi(ones as i32) * (1.0 - eps).powi((bits - ones) as i32);
                }
            }
            assert!((exact[t - 1] - total).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn exact_event_probs_degenerate() {
        let cfg = binary_cfg(6, 3, 0.0, 0.0, 1);
        let p = exact_event_probs(&cfg).unwrap();
        let expect = [1.0, 0.0, 0.0, 0.0];
        for (got, want) in p.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{p:?}");
        }
        let cfg = binary_cfg(6, 3, 0.0, 1.0, 1);
        let p = exact_event_probs(&cfg).unwrap();
        let expect = [0.0, 0.0, 0.0, 1.0];
        for (got, want) in p.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn exact_event_probs_sum_to_one() {
        let cfg = binary_cfg(4, 2, 0.2, 0.1, 1);
        let p = exact_event_probs(&cfg).unwrap();
        let s: f64 = p.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_event_probs_rejects_large() {
        let cfg = binary_cfg(100, 4, 0.2, 0.1, 1);
        assert!(matches!(exact_event_probs(&cfg), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn bounds_arithmetic() {
        let cfg = binary_cfg(100, 4, 0.1, 0.2, 1);
        let b = analytic_bounds(&cfg).unwrap();
        assert!((b[0] - 0.01).abs() < 1e-15);
        assert!((b[1] - 0.3).abs() < 1e-15);
        assert!((b[2] - 0.8).abs() < 1e-15);
        let cfg = binary_cfg(100, 1, 0.1, 0.2, 1);
        assert_eq!(analytic_bounds(&cfg).unwrap()[1], 0.0);
        let cfg = binary_cfg(100, 4, 0.1, 0.0, 1);
        assert_eq!(analytic_bounds(&cfg).unwrap()[2], 0.0);
    }

    #[test]
    fn required_horizon_arithmetic() {
        assert_eq!(required_horizon(10, 0.5, 1.0).unwrap(), 148);
        assert_eq!(required_horizon(10, 0.5, 1e-9).unwrap(), 1);
        assert!(matches!(
            required_horizon(64, 1.7578, 0.5),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn trial_outcome_invariants_random() {
        let cfg = binary_cfg(25, 3, 0.25, 0.15, 7);
        let n = 3u64;
        for i in 0..5000 {
            let t = run_trial(&cfg, i);
            match t.outcome {
                Outcome::Correct => assert_eq!(t.v_hat, Some(t.v)),
                Outcome::E2 => {
                    let h = t.v_hat.unwrap();
                    assert!(h < t.v && t.v - h < n);
                }
                Outcome::E1 => {
                    let h = t.v_hat.unwrap();
                    assert!(h > t.v || t.v - h >= n);
                }
                Outcome::E3 => assert_eq!(t.v_hat, None),
            }
        }
    }

    #[test]
    fn empty_grid_is_error() {
        let spec = SweepSpec {
            regime: Regime::FixedPower,
            channel: SweepChannel::Explicit {
                eps_f: 0.1,
                eps_m: 0.1,
            },
            word: SweepWord::AllOnes,
            reference: ReferenceMode::Limit,
            mu: None,
            r: 0.5,
            trials: 10,
            master_seed: 0,
            workers: 1,
            n_values: vec![],
            p_values: vec![],
            energy: None,
        };
        assert!(sweep(&spec).is_err());
    }
}
