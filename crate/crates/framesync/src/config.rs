//! Run configuration: a flat "key = value" format with '#' comments and no
//! sections. Unknown keys are rejected, duplicates name both lines, and all
//! randomness enters through `master_seed`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::montecarlo::{Regime, ReferenceMode, SweepChannel, SweepSpec, SweepWord};

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub regime: Regime,
    pub channel: SweepChannel,
    pub word: SweepWord,
    pub reference: ReferenceMode,
    pub mu: Option<f64>,
    pub r: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub n_values: Vec<usize>,
    pub p_values: Vec<f64>,
    pub energy: Option<f64>,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            regime: self.regime,
            channel: self.channel,
            word: self.word,
            reference: self.reference,
            mu: self.mu,
            r: self.r,
            trials: self.trials,
            master_seed: self.master_seed,
            workers: self.workers,
            n_values: self.n_values.clone(),
            p_values: self.p_values.clone(),
            energy: self.energy,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "regime",
    "eps_f",
    "eps_m",
    "sigma2",
    "a",
    "word",
    "K",
    "N",
    "P",
    "energy",
    "mu",
    "reference",
    "r",
    "trials",
    "master_seed",
    "workers",
    "out",
];

struct RawEntry {
    line: usize,
    value: String,
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn missing(key: &str) -> Error {
    Error::ConfigInvalid(format!("missing required key `{key}`"))
}

struct Raw(HashMap<String, RawEntry>);

impl Raw {
    fn take(&mut self, key: &str) -> Option<RawEntry> {
        self.0.remove(key)
    }

    fn parse_with<T>(
        &mut self,
        key: &str,
        f: impl Fn(&str) -> Option<T>,
        what: &str,
    ) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => f(&e.value)
                .map(Some)
                .ok_or_else(|| bad(e.line, format!("`{key} = {}` is not {what}", e.value))),
        }
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.parse_with(key, |v| v.parse::<f64>().ok().filter(|x| x.is_finite()), "a number")
    }

    fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.parse_with(key, |v| v.parse().ok(), "a nonnegative integer")
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Result<Option<Vec<T>>> {
        self.parse_with(
            key,
            |v| {
                v.split(',')
                    .map(|s| s.trim().parse().ok())
                    .collect::<Option<Vec<T>>>()
                    .filter(|l| !l.is_empty())
            },
            what,
        )
    }
}

fn tokenize(text: &str) -> Result<Raw> {
    let mut map: HashMap<String, RawEntry> = HashMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| bad(line, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(bad(line, format!("unknown key `{key}`")));
        }
        if let Some(prev) = map.get(key) {
            return Err(bad(
                line,
                format!("duplicate key `{key}`, first set at line {}", prev.line),
            ));
        }
        map.insert(
            key.to_string(),
            RawEntry {
                line,
                value: value.to_string(),
            },
        );
    }
    Ok(Raw(map))
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut raw = tokenize(text)?;

    let regime = {
        let e = raw.take("regime").ok_or_else(|| missing("regime"))?;
        match e.value.as_str() {
            "fixed_power" => Regime::FixedPower,
            "joint_scaling" => Regime::JointScaling,
            "fixed_length" => Regime::FixedLength,
            other => {
                return Err(bad(
                    e.line,
                    format!("unknown regime `{other}` (fixed_power, joint_scaling, fixed_length)"),
                ))
            }
        }
    };

    let eps_f = raw.f64("eps_f")?;
    let eps_m = raw.f64("eps_m")?;
    let sigma2 = raw.f64("sigma2")?;
    let a_entry = raw.take("a");
    let a = match &a_entry {
        None => None,
        Some(e) => {
            let x: f64 = e
                .value
                .parse()
                .map_err(|_| bad(e.line, format!("`a = {}` is not a number", e.value)))?;
            if !(x > 0.0 && x < 1.0) {
                return Err(bad(e.line, format!("`a = {x}` must lie in (0, 1)")));
            }
            Some(x)
        }
    };

    let n_values = raw
        .list::<usize>("N", "a comma-separated list of positive integers")?
        .ok_or_else(|| missing("N"))?;
    let p_values = raw
        .list::<f64>("P", "a comma-separated list of numbers")?
        .unwrap_or_default();
    let energy = raw.f64("energy")?;

    let explicit = eps_f.is_some() || eps_m.is_some();
    let awgn = sigma2.is_some() || a.is_some();
    let channel = match (explicit, awgn) {
        (true, false) => {
            let eps_f = eps_f.ok_or_else(|| missing("eps_f"))?;
            let eps_m = eps_m.ok_or_else(|| missing("eps_m"))?;
            for (k, v) in [("eps_f", eps_f), ("eps_m", eps_m)] {
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::ConfigInvalid(format!("`{k} = {v}` must lie in (0, 1)")));
                }
            }
            SweepChannel::Explicit { eps_f, eps_m }
        }
        (false, true) => {
            let sigma2 = sigma2.ok_or_else(|| missing("sigma2"))?;
            let a = a.ok_or_else(|| missing("a"))?;
            if !(sigma2 > 0.0) {
                return Err(Error::ConfigInvalid(format!(
                    "`sigma2 = {sigma2}` must be positive"
                )));
            }
            // fixed_power over AWGN carries its single power in P.
            let power = match regime {
                Regime::FixedPower => Some(
                    *p_values
                        .first()
                        .filter(|_| p_values.len() == 1)
                        .ok_or_else(|| {
                            Error::ConfigInvalid(
                                "fixed_power over AWGN requires a single-value P".into(),
                            )
                        })?,
                ),
                _ => None,
            };
            SweepChannel::Awgn { power, sigma2, a }
        }
        (true, true) => {
            return Err(Error::ConfigInvalid(
                "give either eps_f/eps_m or sigma2/a, not both".into(),
            ))
        }
        (false, false) => {
            return Err(Error::ConfigInvalid(
                "no channel: set eps_f/eps_m or sigma2/a".into(),
            ))
        }
    };

    let k = raw.u64("K")?;
    let word = {
        let e = raw.take("word").ok_or_else(|| missing("word"))?;
        match e.value.as_str() {
            "all_ones" => {
                if k.is_some() {
                    return Err(bad(e.line, "K applies only to word = construction"));
                }
                SweepWord::AllOnes
            }
            "construction" => SweepWord::Construction {
                k: k.ok_or_else(|| missing("K"))? as u32,
            },
            other => {
                return Err(bad(
                    e.line,
                    format!("unknown word `{other}` (all_ones, construction)"),
                ))
            }
        }
    };

    let reference = match raw.take("reference") {
        None => ReferenceMode::ChannelRow,
        Some(e) => match e.value.as_str() {
            "channel_row" => ReferenceMode::ChannelRow,
            "limit" => ReferenceMode::Limit,
            other => {
                return Err(bad(
                    e.line,
                    format!("unknown reference `{other}` (channel_row, limit)"),
                ))
            }
        },
    };

    let mu = raw.f64("mu")?;
    if let Some(mu) = mu {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::ConfigInvalid(format!("`mu = {mu}` must lie in (0, 1]")));
        }
    }
    let r = raw.f64("r")?.ok_or_else(|| missing("r"))?;
    if !(r > 0.0) {
        return Err(Error::ConfigInvalid(format!("`r = {r}` must be positive")));
    }
    let trials = raw.u64("trials")?.ok_or_else(|| missing("trials"))?;
    if trials == 0 {
        return Err(Error::ConfigInvalid("`trials` must be at least 1".into()));
    }
    let master_seed = raw.u64("master_seed")?.ok_or_else(|| missing("master_seed"))?;
    let workers = raw.u64("workers")?.unwrap_or(1).max(1) as usize;
    let out = raw.take("out").map(|e| e.value);

    match regime {
        Regime::FixedLength => {
            if n_values.len() != 1 {
                return Err(Error::ConfigInvalid(
                    "fixed_length sweeps P: N must be a single value".into(),
                ));
            }
            if p_values.is_empty() {
                return Err(Error::ConfigInvalid("fixed_length requires a P grid".into()));
            }
            if !matches!(channel, SweepChannel::Awgn { .. }) {
                return Err(Error::ConfigInvalid(
                    "fixed_length is an AWGN regime: set sigma2 and a".into(),
                ));
            }
        }
        Regime::JointScaling => {
            if energy.is_none() {
                return Err(missing("energy"));
            }
            if !matches!(channel, SweepChannel::Awgn { .. }) {
                return Err(Error::ConfigInvalid(
                    "joint_scaling is an AWGN regime: set sigma2 and a".into(),
                ));
            }
            if !p_values.is_empty() {
                return Err(Error::ConfigInvalid(
                    "joint_scaling derives P from energy / N; drop the P key".into(),
                ));
            }
        }
        Regime::FixedPower => {
            if energy.is_some() {
                return Err(Error::ConfigInvalid(
                    "energy applies only to joint_scaling".into(),
                ));
            }
            if matches!(channel, SweepChannel::Explicit { .. }) && !p_values.is_empty() {
                return Err(Error::ConfigInvalid(
                    "P has no meaning for an explicit channel".into(),
                ));
            }
        }
    }
    if n_values.contains(&0) {
        return Err(Error::ConfigInvalid("N entries must be positive".into()));
    }

    Ok(RunConfig {
        regime,
        channel,
        word,
        reference,
        mu,
        r,
        trials,
        master_seed,
        workers,
        n_values,
        p_values,
        energy,
        out,
    })
}

/// Canonical text form; `parse_config(render(cfg))` reproduces `cfg`.
pub fn render(cfg: &RunConfig) -> String {
    let mut lines = Vec::new();
    lines.push(format!("regime = {}", cfg.regime.as_str()));
    match cfg.channel {
        SweepChannel::Explicit { eps_f, eps_m } => {
            lines.push(format!("eps_f = {eps_f}"));
            lines.push(format!("eps_m = {eps_m}"));
        }
        SweepChannel::Awgn { sigma2, a, .. } => {
            lines.push(format!("sigma2 = {sigma2}"));
            lines.push(format!("a = {a}"));
        }
    }
    match cfg.word {
        SweepWord::AllOnes => lines.push("word = all_ones".into()),
        SweepWord::Construction { k } => {
            lines.push("word = construction".into());
            lines.push(format!("K = {k}"));
        }
    }
    lines.push(format!(
        "N = {}",
        cfg.n_values
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    ));
    if !cfg.p_values.is_empty() {
        lines.push(format!(
            "P = {}",
            cfg.p_values
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    if let Some(e) = cfg.energy {
        lines.push(format!("energy = {e}"));
    }
    match cfg.reference {
        ReferenceMode::ChannelRow => lines.push("reference = channel_row".into()),
        ReferenceMode::Limit => lines.push("reference = limit".into()),
    }
    if let Some(mu) = cfg.mu {
        lines.push(format!("mu = {mu}"));
    }
    lines.push(format!("r = {}", cfg.r));
    lines.push(format!("trials = {}", cfg.trials));
    lines.push(format!("master_seed = {}", cfg.master_seed));
    lines.push(format!("workers = {}", cfg.workers));
    if let Some(out) = &cfg.out {
        lines.push(format!("out = {out}"));
    }
    lines.join("\n") + "\n"
}
