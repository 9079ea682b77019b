//! Experiment orchestration: CSV emission for sweeps and the human-readable
//! threshold, word and oracle reports.

use std::io::Write;

use crate::awgn::{
    awgn_alpha_limit, binary_alpha, quantize_awgn, AwgnParams, QuantizeMode,
};
use crate::channel::{sync_threshold, TransitionMatrix};
use crate::decoder::finite_n_decoder;
use crate::error::{Error, Result};
use crate::montecarlo::{
    exact_event_probs, grid_len, run_sweep_point, SweepChannel, SweepPoint, SweepSpec,
    TrialConfig,
};
use crate::syncword::{
    build_sync_word, default_lfsr_table, overlap_distance_profile, SyncWord,
};

/// Column order of the sweep CSV. Stable; downstream plotting depends on it.
pub const CSV_HEADER: &str = "regime,A,N,P,sigma2,a,K,mu,r,alpha,trials,p_e1,p_e2,p_e3,p_error,ci_low,ci_high,master_seed";

/// Nine significant digits, the CSV float format.
pub fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_sig9).unwrap_or_else(|| "NA".into())
}

fn opt_u32(x: Option<u32>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "NA".into())
}

/// One CSV record, without the trailing newline.
pub fn csv_line(pt: &SweepPoint) -> String {
    let e = &pt.estimate;
    [
        pt.regime.as_str().to_string(),
        pt.horizon.to_string(),
        pt.n.to_string(),
        opt_f64(pt.power),
        opt_f64(pt.sigma2),
        opt_f64(pt.a),
        opt_u32(pt.k_param),
        fmt_sig9(pt.mu),
        fmt_sig9(pt.r),
        fmt_sig9(pt.alpha),
        e.trials.to_string(),
        fmt_sig9(e.p_e1),
        fmt_sig9(e.p_e2),
        fmt_sig9(e.p_e3),
        fmt_sig9(e.p_error),
        fmt_sig9(e.ci_low),
        fmt_sig9(e.ci_high),
        pt.master_seed.to_string(),
    ]
    .join(",")
}

/// Runs a sweep, streaming one CSV line per completed grid point so partial
/// results survive a failing later point. A failure names the point.
pub fn write_sweep_csv<W: Write>(spec: &SweepSpec, out: &mut W) -> Result<Vec<SweepPoint>> {
    let len = grid_len(spec)?;
    writeln!(out, "{CSV_HEADER}")?;
    out.flush()?;
    let mut points = Vec::with_capacity(len);
    for index in 0..len {
        let point = run_sweep_point(spec, index).map_err(|e| {
            Error::Range(format!("grid point {} of {len}: {e}", index + 1))
        })?;
        writeln!(out, "{}", csv_line(&point))?;
        out.flush()?;
        points.push(point);
    }
    Ok(points)
}

/// Threshold report for an explicit DMC or an AWGN operating point (which
/// then requires the power).
pub fn threshold_report(channel: &SweepChannel) -> Result<String> {
    let mut s = String::new();
    match *channel {
        SweepChannel::Explicit { eps_f, eps_m } => {
            let q = TransitionMatrix::binary(eps_f, eps_m)?;
            let rep = sync_threshold(&q);
            s += &format!("channel: binary DMC, eps_f = {eps_f}, eps_m = {eps_m}\n");
            s += &format!("alpha: {} nats\n", fmt_sig9(rep.alpha));
            s += &format!("best symbol x(1): {}\n", rep.best_symbol);
            for (x, d) in rep.per_symbol_divergence.iter().enumerate() {
                s += &format!("divergence x({x}): {}\n", fmt_sig9(*d));
            }
        }
        SweepChannel::Awgn { power, sigma2, a } => {
            let p = power.ok_or_else(|| {
                Error::Range("AWGN threshold report requires the power P".into())
            })?;
            let params = AwgnParams::new(p, sigma2, a)?;
            let exact = quantize_awgn(&params, QuantizeMode::Exact)?;
            let approx = quantize_awgn(&params, QuantizeMode::Exponential)?;
            s += &format!("channel: quantized AWGN, P = {p}, sigma2 = {sigma2}, a = {a}\n");
            s += &format!(
                "exact        eps_f: {}  eps_m: {}  alpha: {} nats\n",
                fmt_sig9(exact.eps_f()),
                fmt_sig9(exact.eps_m()),
                fmt_sig9(binary_alpha(&exact))
            );
            s += &format!(
                "exponential  eps_f: {}  eps_m: {}  alpha: {} nats\n",
                fmt_sig9(approx.eps_f()),
                fmt_sig9(approx.eps_m()),
                fmt_sig9(binary_alpha(&approx))
            );
            s += &format!(
                "asymptote P/(2 sigma^2): {} nats\n",
                fmt_sig9(awgn_alpha_limit(p, sigma2)?)
            );
        }
    }
    Ok(s)
}

/// Word report: construction parameters, mark count and the worst overlap
/// distances, plus the word itself.
pub fn word_report(n: usize, k: Option<u32>) -> Result<(String, SyncWord)> {
    let word = match k {
        Some(k) => build_sync_word(n, k, &default_lfsr_table())?,
        None => crate::syncword::all_ones(n)?,
    };
    let mut s = String::new();
    s += &format!("N: {}\n", word.len());
    match k {
        Some(k) => {
            let m = crate::syncword::construction_degree(n, k)?;
            s += &format!("K: {k}\nM: {m}\n");
        }
        None => s += "word: all marks\n",
    }
    s += &format!("N1 (mark count): {}\n", word.n_ones());
    if word.len() >= 2 {
        let profile = overlap_distance_profile(&word);
        let min_total = profile.iter().map(|d| d.total).min().unwrap();
        let min_restricted = profile.iter().map(|d| d.restricted).min().unwrap();
        s += &format!("min overlap distance over shifts: {min_total}\n");
        s += &format!("min mark-restricted overlap distance: {min_restricted}\n");
    }
    s += &format!("word: {}\n", word.to_line());
    Ok((s, word))
}

/// Exact outcome probabilities for a tiny binary instance.
pub fn oracle_report(
    eps_f: f64,
    eps_m: f64,
    n: usize,
    horizon: u64,
    mu: Option<f64>,
) -> Result<String> {
    let channel = TransitionMatrix::binary(eps_f, eps_m)?;
    let mut decoder = finite_n_decoder(n, horizon)?;
    if let Some(mu) = mu {
        decoder = crate::decoder::TypicalityDecoder::new(
            decoder.word().clone(),
            decoder.reference().clone(),
            mu,
            horizon,
        )?;
    }
    let cfg = TrialConfig::new(channel, decoder, 0)?;
    let probs = exact_event_probs(&cfg)?;
    let mut s = String::new();
    s += &format!(
        "instance: A = {horizon}, N = {n}, eps_f = {eps_f}, eps_m = {eps_m}, mu = {}\n",
        mu.unwrap_or(1.0 / n as f64)
    );
    for (label, p) in ["P(correct)", "P(E1)", "P(E2)", "P(E3)"].iter().zip(probs) {
        s += &format!("{label}: {}\n", fmt_sig9(p));
    }
    s += &format!("sum: {}\n", fmt_sig9(probs.iter().sum::<f64>()));
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{ReferenceMode, Regime, SweepWord};

    fn small_spec() -> SweepSpec {
        SweepSpec {
            regime: Regime::FixedPower,
            channel: SweepChannel::Explicit {
                eps_f: 0.2,
                eps_m: 0.1,
            },
            word: SweepWord::AllOnes,
            reference: ReferenceMode::Limit,
            mu: None,
            r: 0.5,
            trials: 500,
            master_seed: 11,
            workers: 2,
            n_values: vec![2, 3],
            p_values: vec![],
            energy: None,
        }
    }

    #[test]
    fn csv_has_header_and_one_line_per_point() {
        let mut buf = Vec::new();
        let points = write_sweep_csv(&small_spec(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(points.len(), 2);
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
        assert!(lines[1].starts_with("fixed_power,"));
    }

    #[test]
    fn csv_rerun_is_byte_identical() {
        let spec = small_spec();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_sweep_csv(&spec, &mut a).unwrap();
        write_sweep_csv(&spec, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failing_point_flushes_completed_lines() {
        let mut spec = small_spec();
        // Second point overflows the horizon cap.
        spec.n_values = vec![2, 4000];
        spec.r = 2.0;
        let mut buf = Vec::new();
        let err = write_sweep_csv(&spec, &mut buf).unwrap_err();
        assert!(matches!(err, Error::Range(_)));
        assert!(err.to_string().contains("grid point 2"), "{err}");
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn sig9_format() {
        assert_eq!(fmt_sig9(0.5), "5.00000000e-1");
        assert_eq!(fmt_sig9(1.0 / 3.0), "3.33333333e-1");
    }

    #[test]
    fn threshold_report_explicit() {
        let rep = threshold_report(&SweepChannel::Explicit {
            eps_f: 0.1,
            eps_m: 0.1,
        })
        .unwrap();
        assert!(rep.contains("1.75777966e0"), "{rep}");
        assert!(rep.contains("best symbol x(1): 1"));
    }

    #[test]
    fn threshold_report_awgn_has_both_modes() {
        let rep = threshold_report(&SweepChannel::Awgn {
            power: Some(4.0),
            sigma2: 1.0,
            a: 0.5,
        })
        .unwrap();
        assert!(rep.contains("exact"));
        assert!(rep.contains("exponential"));
        assert!(rep.contains("asymptote"));
        assert!(rep.contains("2.00000000e0"), "{rep}");
    }

    #[test]
    fn word_report_construction() {
        let (rep, word) = word_report(14, Some(2)).unwrap();
        assert!(rep.contains("M: 3"), "{rep}");
        assert!(rep.contains("N1 (mark count): 10"), "{rep}");
        assert_eq!(word.len(), 14);
    }

    #[test]
    fn oracle_report_sums_to_one() {
        let rep = oracle_report(0.2, 0.1, 2, 4, None).unwrap();
        assert!(rep.contains("sum: 1.00000000e0"), "{rep}");
    }
}
