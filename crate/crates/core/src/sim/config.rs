//! `key = value` text form of the simulation configs.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::str::FromStr;

use super::{HeterogeneityMode, NullKind, NullModelConfig, ScenarioConfig};
use crate::error::{Error, Result};

/// Parse `key = value` lines; `#` starts a comment. Keys outside `allowed`
/// and repeated keys are errors.
pub fn parse_kv(text: &str, allowed: &[&str]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Invalid(format!(
                "line {}: expected key = value, got {line:?}",
                lineno + 1
            ))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !allowed.contains(&k) {
            return Err(Error::Invalid(format!(
                "line {}: unknown key {k:?} (expected one of {})",
                lineno + 1,
                allowed.join(", ")
            )));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Invalid(format!(
                "line {}: duplicate key {k:?}",
                lineno + 1
            )));
        }
    }
    Ok(out)
}

fn get<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Invalid(format!("invalid value {v:?} for {key}")))
        })
        .transpose()
}

fn require<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    get(map, key)?.ok_or_else(|| Error::Invalid(format!("missing key {key:?}")))
}

fn list<T: FromStr>(v: &str, key: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("invalid entry {s:?} in {key}")))
        })
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl FromStr for NullKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "low_freq" => NullKind::LowFreq,
            "varying_freq" => NullKind::VaryingFreq,
            "high_freq" => NullKind::HighFreq,
            "custom" => NullKind::Custom,
            "mixture_gaussian" => NullKind::MixtureGaussian,
            other => return Err(Error::Invalid(format!("unknown null kind {other:?}"))),
        })
    }
}

impl std::fmt::Display for NullKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NullKind::LowFreq => "low_freq",
            NullKind::VaryingFreq => "varying_freq",
            NullKind::HighFreq => "high_freq",
            NullKind::Custom => "custom",
            NullKind::MixtureGaussian => "mixture_gaussian",
        })
    }
}

impl FromStr for HeterogeneityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "directional" => Ok(HeterogeneityMode::Directional),
            "balanced" => Ok(HeterogeneityMode::Balanced),
            other => Err(Error::Invalid(format!(
                "unknown heterogeneity mode {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for HeterogeneityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HeterogeneityMode::Directional => "directional",
            HeterogeneityMode::Balanced => "balanced",
        })
    }
}

impl NullModelConfig {
    pub const KEYS: [&'static str; 5] = ["kind", "n", "p", "theta", "seed"];

    pub fn from_kv(text: &str) -> Result<Self> {
        let map = parse_kv(text, &Self::KEYS)?;
        let theta = map.get("theta").map(|v| list(v, "theta")).transpose()?;
        let kind: NullKind = require(&map, "kind")?;
        let p = match (get(&map, "p")?, &theta) {
            (Some(p), _) => p,
            (None, Some(t)) => t.len(),
            (None, None) => return Err(Error::Invalid("missing key \"p\"".into())),
        };
        let cfg = NullModelConfig {
            kind,
            n: require(&map, "n")?,
            p,
            theta,
            seed: get(&map, "seed")?.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "kind = {}\nn = {}\np = {}\nseed = {}\n",
            self.kind, self.n, self.p, self.seed
        );
        if let Some(t) = &self.theta {
            writeln!(s, "theta = {}", join(t)).unwrap();
        }
        s
    }
}

impl ScenarioConfig {
    pub const KEYS: [&'static str; 8] = [
        "sizes",
        "epsilon",
        "p",
        "discern_frac",
        "mode",
        "flip_frac",
        "windows",
        "seed",
    ];

    pub fn from_kv(text: &str) -> Result<Self> {
        let map = parse_kv(text, &Self::KEYS)?;
        let sizes = list(
            map.get("sizes")
                .ok_or_else(|| Error::Invalid("missing key \"sizes\"".into()))?,
            "sizes",
        )?;
        let windows = map
            .get("windows")
            .map(|v| {
                v.split(',')
                    .map(|w| {
                        let (lo, hi) = w.split_once(':').ok_or_else(|| {
                            Error::Invalid(format!("window {w:?} should be lo:hi"))
                        })?;
                        let parse = |x: &str| {
                            x.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::Invalid(format!("invalid window bound {x:?}")))
                        };
                        Ok((parse(lo)?, parse(hi)?))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let cfg = ScenarioConfig {
            sizes,
            epsilon: require(&map, "epsilon")?,
            p: require(&map, "p")?,
            discern_frac: get(&map, "discern_frac")?.unwrap_or(1.0),
            mode: get(&map, "mode")?.unwrap_or(HeterogeneityMode::Directional),
            flip_frac: get(&map, "flip_frac")?.unwrap_or(0.0),
            windows,
            seed: get(&map, "seed")?.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "sizes = {}\nepsilon = {}\np = {}\ndiscern_frac = {}\nmode = {}\nflip_frac = {}\nseed = {}\n",
            join(&self.sizes),
            self.epsilon,
            self.p,
            self.discern_frac,
            self.mode,
            self.flip_frac,
            self.seed
        );
        if let Some(w) = &self.windows {
            let w: Vec<String> = w.iter().map(|(lo, hi)| format!("{lo}:{hi}")).collect();
            writeln!(s, "windows = {}", w.join(",")).unwrap();
        }
        s
    }
}
