//! Binary-input binary-output quantization of the AWGN channel.
//!
//! The receiver thresholds `x + n` at `tau = a * sqrt(P)`: crossing the
//! threshold on an idle slot is a false alarm (probability `eps_f`), failing
//! to cross it on a mark slot is a miss (probability `eps_m`). Transition
//! probabilities are kept in the log domain so that the threshold formula
//! stays accurate at powers where `eps_f` underflows an f64.

use crate::channel::TransitionMatrix;
use crate::error::{Error, Result};

/// Operating point of the quantized AWGN channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnParams {
    power: f64,
    noise_var: f64,
    threshold_frac: f64,
}

impl AwgnParams {
    pub fn new(power: f64, noise_var: f64, threshold_frac: f64) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::Range(format!("power must be positive, got {power}")));
        }
        if !(noise_var > 0.0) || !noise_var.is_finite() {
            return Err(Error::Range(format!(
                "noise variance must be positive, got {noise_var}"
            )));
        }
        if !(threshold_frac > 0.0 && threshold_frac < 1.0) {
            return Err(Error::Range(format!(
                "threshold fraction a must lie in (0, 1), got {threshold_frac}"
            )));
        }
        Ok(Self {
            power,
            noise_var,
            threshold_frac,
        })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn threshold_frac(&self) -> f64 {
        self.threshold_frac
    }
}

/// How to map AWGN parameters to transition probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantizeMode {
    /// Exact Gaussian tails.
    Exact,
    /// The exponential approximations e^{-a^2 P / 2 sigma^2} and
    /// e^{-(1-a)^2 P / 2 sigma^2}.
    Exponential,
}

/// The quantized binary channel, carrying `ln eps` alongside `eps` so the
/// threshold stays computable when `eps` underflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryDmc {
    ln_eps_f: f64,
    ln_eps_m: f64,
    /// ln(1 - eps_f), kept separately to avoid cancellation for tiny eps.
    ln_omf: f64,
    /// ln(1 - eps_m).
    ln_omm: f64,
}

impl BinaryDmc {
    /// Builds from transition probabilities directly; both must be strictly
    /// inside (0, 1).
    pub fn new(eps_f: f64, eps_m: f64) -> Result<Self> {
        if !(eps_f > 0.0 && eps_f < 1.0) || !(eps_m > 0.0 && eps_m < 1.0) {
            return Err(Error::DegenerateChannel(format!(
                "eps_f = {eps_f}, eps_m = {eps_m}: both must lie strictly in (0, 1)"
            )));
        }
        Ok(Self {
            ln_eps_f: eps_f.ln(),
            ln_eps_m: eps_m.ln(),
            ln_omf: (-eps_f).ln_1p(),
            ln_omm: (-eps_m).ln_1p(),
        })
    }

    fn from_log(ln_eps_f: f64, ln_eps_m: f64) -> Result<Self> {
        if !(ln_eps_f < 0.0) || !(ln_eps_m < 0.0) || !ln_eps_f.is_finite() || !ln_eps_m.is_finite()
        {
            return Err(Error::DegenerateChannel(format!(
                "ln eps_f = {ln_eps_f}, ln eps_m = {ln_eps_m}: both must be finite and negative"
            )));
        }
        Ok(Self {
            ln_eps_f,
            ln_eps_m,
            ln_omf: (-ln_eps_f.exp()).ln_1p(),
            ln_omm: (-ln_eps_m.exp()).ln_1p(),
        })
    }

    pub fn eps_f(&self) -> f64 {
        self.ln_eps_f.exp()
    }

    pub fn eps_m(&self) -> f64 {
        self.ln_eps_m.exp()
    }

    /// The equivalent two-input two-output transition matrix. Fails when a
    /// transition probability underflows to 0 or rounds to 1 in f64, since
    /// the matrix form silently turns such a channel noiseless.
    pub fn to_transition_matrix(&self) -> Result<TransitionMatrix> {
        let (eps_f, eps_m) = (self.eps_f(), self.eps_m());
        if eps_f == 0.0 || eps_f == 1.0 || eps_m == 0.0 || eps_m == 1.0 {
            return Err(Error::DegenerateChannel(format!(
                "eps_f = {eps_f}, eps_m = {eps_m} not representable strictly inside (0, 1)"
            )));
        }
        TransitionMatrix::binary(eps_f, eps_m)
    }
}

/// Upper tail P(Z > x) of the standard normal.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// ln P(Z > x), stable far beyond the underflow point of the tail itself.
///
/// Below `x = 8` this is the log of the directly evaluated tail; beyond, a
/// continued-fraction expansion of the Mills ratio keeps full relative
/// accuracy.
pub fn log_gaussian_tail(x: f64) -> f64 {
    if x < 8.0 {
        return gaussian_tail(x).ln();
    }
    // Q(x) = phi(x) / (x + 1/(x + 2/(x + 3/(x + ...))))
    let mut b = 0.0;
    for k in (1..=64u32).rev() {
        b = k as f64 / (x + b);
    }
    -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln() - (x + b).ln()
}

/// Maps an AWGN operating point to its binary channel.
pub fn quantize_awgn(params: &AwgnParams, mode: QuantizeMode) -> Result<BinaryDmc> {
    let sigma = params.noise_var().sqrt();
    let root_p = params.power().sqrt();
    let a = params.threshold_frac();
    let (ln_eps_f, ln_eps_m) = match mode {
        QuantizeMode::Exact => (
            log_gaussian_tail(a * root_p / sigma),
            log_gaussian_tail((1.0 - a) * root_p / sigma),
        ),
        QuantizeMode::Exponential => (
            -a * a * params.power() / (2.0 * params.noise_var()),
            -(1.0 - a) * (1.0 - a) * params.power() / (2.0 * params.noise_var()),
        ),
    };
    BinaryDmc::from_log(ln_eps_f, ln_eps_m)
}

/// Synchronization threshold of the binary channel, in nats.
pub fn binary_alpha(ch: &BinaryDmc) -> f64 {
    let eps_m = ch.eps_m();
    (1.0 - eps_m) * (ch.ln_omm - ch.ln_eps_f) + eps_m * (ch.ln_eps_m - ch.ln_omf)
}

/// The AWGN reference asymptote P / (2 sigma^2).
pub fn awgn_alpha_limit(power: f64, noise_var: f64) -> Result<f64> {
    if !(power > 0.0) || !(noise_var > 0.0) {
        return Err(Error::Range(format!(
            "P and sigma^2 must be positive, got P = {power}, sigma^2 = {noise_var}"
        )));
    }
    Ok(power / (2.0 * noise_var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sync_threshold;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tail_at_zero() {
        assert_eq!(gaussian_tail(0.0), 0.5);
    }

    #[test]
    fn tail_at_one() {
        assert!((gaussian_tail(1.0) - 0.158655).abs() < 1e-6);
    }

    #[test]
    fn tail_left_limit() {
        assert!(gaussian_tail(-10.0) >= 1.0 - 1e-20);
    }

    #[test]
    fn log_tail_matches_direct_evaluation() {
        // Direct erfc is reliable up to ~ x = 35; the continued fraction must
        // agree through the crossover and beyond.
        for i in 0..400 {
            let x = 2.0 + i as f64 * 0.08; // 2 .. 34
            let direct = gaussian_tail(x).ln();
            let logged = log_gaussian_tail(x);
            assert!(
                ((logged - direct) / direct).abs() < 1e-12,
                "x = {x}: {logged} vs {direct}"
            );
        }
    }

    #[test]
    fn quantize_symmetric_point() {
        let p = AwgnParams::new(4.0, 1.0, 0.5).unwrap();
        let ch = quantize_awgn(&p, QuantizeMode::Exact).unwrap();
        assert!((ch.eps_f() - 0.158655).abs() < 1e-6);
        assert!((ch.eps_m() - 0.158655).abs() < 1e-6);
        let ap = quantize_awgn(&p, QuantizeMode::Exponential).unwrap();
        assert!((ap.eps_f() - 0.606531).abs() < 1e-6);
        assert!((ap.eps_m() - 0.606531).abs() < 1e-6);
    }

    #[test]
    fn quantize_zero_power_limit() {
        let p = AwgnParams::new(1e-12, 1.0, 0.5).unwrap();
        let ch = quantize_awgn(&p, QuantizeMode::Exact).unwrap();
        assert!((ch.eps_f() - 0.5).abs() < 1e-6);
        assert!((ch.eps_m() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn binary_alpha_examples() {
        let a = binary_alpha(&BinaryDmc::new(0.5, 0.5).unwrap());
        assert!(a.abs() < 1e-15);
        let a = binary_alpha(&BinaryDmc::new(0.1, 0.1).unwrap());
        assert!((a - 1.757780).abs() < 1e-5, "got {a}");
        let a = binary_alpha(&BinaryDmc::new(0.01, 0.2).unwrap());
        let expect = 0.8 * (0.8f64 / 0.01).ln() + 0.2 * (0.2f64 / 0.99).ln();
        assert!((a - expect).abs() < 1e-12);
        assert!((a - 3.186).abs() < 1e-3);
    }

    #[test]
    fn alpha_limit_arithmetic() {
        assert_eq!(awgn_alpha_limit(2.0, 1.0).unwrap(), 1.0);
        assert_eq!(awgn_alpha_limit(1.0, 0.5).unwrap(), 1.0);
        assert_eq!(awgn_alpha_limit(1e4, 1.0).unwrap(), 5000.0);
        assert!(awgn_alpha_limit(0.0, 1.0).is_err());
    }

    #[test]
    fn alpha_consistent_with_transition_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10_000 {
            let eps_f = rng.random::<f64>() * (0.5 - 1e-6) + 1e-6;
            let eps_m = rng.random::<f64>() * (0.5 - 1e-6) + 1e-6;
            let ch = BinaryDmc::new(eps_f, eps_m).unwrap();
            let direct = binary_alpha(&ch);
            let via_matrix = sync_threshold(&ch.to_transition_matrix().unwrap()).alpha;
            assert!(
                (direct - via_matrix).abs() < 1e-12,
                "eps_f {eps_f} eps_m {eps_m}: {direct} vs {via_matrix}"
            );
        }
    }

    #[test]
    fn alpha_tends_to_awgn_threshold() {
        // a = 0.9, sigma^2 = 1: alpha / (a^2 P / 2) -> 1 from above.
        let ratio = |p: f64| {
            let params = AwgnParams::new(p, 1.0, 0.9).unwrap();
            let ch = quantize_awgn(&params, QuantizeMode::Exact).unwrap();
            binary_alpha(&ch) / (0.81 * p / 2.0)
        };
        let r3 = ratio(1e3);
        let r4 = ratio(1e4);
        assert!((1.0..1.01).contains(&r4), "ratio at 1e4: {r4}");
        assert!((r4 - 1.0).abs() < (r3 - 1.0).abs(), "{r4} vs {r3}");
    }

    #[test]
    fn exact_tail_below_chernoff() {
        for i in 0..200 {
            let p = 1.0 + i as f64 * 0.5;
            let params = AwgnParams::new(p, 1.0, 0.5).unwrap();
            if 0.5 * p.sqrt() < 1.0 {
                continue;
            }
            let exact = quantize_awgn(&params, QuantizeMode::Exact).unwrap();
            let approx = quantize_awgn(&params, QuantizeMode::Exponential).unwrap();
            assert!(exact.eps_f() <= approx.eps_f());
        }
    }

    #[test]
    fn degenerate_eps_is_error() {
        assert!(BinaryDmc::new(0.0, 0.1).is_err());
        assert!(BinaryDmc::new(0.1, 1.0).is_err());
        // Exact quantization at extreme power still yields a finite log
        // threshold, but the matrix form is degenerate.
        let params = AwgnParams::new(1e4, 1.0, 0.9).unwrap();
        let ch = quantize_awgn(&params, QuantizeMode::Exact).unwrap();
        assert!(ch.to_transition_matrix().is_err());
        assert!(binary_alpha(&ch).is_finite());
    }
}
