//! `key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored; lists are comma separated.
//! Omitted tolerances take the documented defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::fracop::OperatorOptions;
use crate::potential::DEFAULT_DELTA;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{key}: {message}")]
    Validation { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        Self::Validation { key: key.to_string(), message: message.into() }
    }

    fn missing(key: &str, experiment: Experiment) -> Self {
        Self::invalid(key, format!("required by experiment {experiment}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    EvolveCh,
    EvolveChModified,
    EvolveAc,
    EvolvePm,
    EigenSweep,
    LimitSigma,
    LimitS,
    Stationary,
    OperatorLimit,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Self::EvolveCh,
        Self::EvolveChModified,
        Self::EvolveAc,
        Self::EvolvePm,
        Self::EigenSweep,
        Self::LimitSigma,
        Self::LimitS,
        Self::Stationary,
        Self::OperatorLimit,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::EvolveCh => "evolve-ch",
            Self::EvolveChModified => "evolve-ch-modified",
            Self::EvolveAc => "evolve-ac",
            Self::EvolvePm => "evolve-pm",
            Self::EigenSweep => "eigen-sweep",
            Self::LimitSigma => "limit-sigma",
            Self::LimitS => "limit-s",
            Self::Stationary => "stationary",
            Self::OperatorLimit => "operator-limit",
        }
    }

    fn required(&self) -> &'static [&'static str] {
        match self {
            Self::EvolveCh | Self::EvolveChModified => &["s", "sigma", "p", "tau", "T"],
            Self::EvolveAc => &["sigma", "p", "tau", "T"],
            Self::EvolvePm => &["s", "p", "tau", "T"],
            Self::EigenSweep | Self::OperatorLimit => &["sequence"],
            Self::LimitSigma => &["s", "p", "tau", "T", "sequence"],
            Self::LimitS => &["sigma", "p", "tau", "T", "sequence"],
            Self::Stationary => &["p"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|e| e.as_str() == s).ok_or_else(|| format!("unknown experiment '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub newton_tol: f64,
    pub lin_tol: f64,
    pub eig_tol: f64,
    pub stat_tol: f64,
    pub quad_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let op = OperatorOptions::default();
        Self { newton_tol: 1e-10, lin_tol: op.lin_tol, eig_tol: op.eig_tol, stat_tol: 1e-9, quad_tol: op.quad_tol }
    }
}

impl Tolerances {
    pub fn operator_options(&self) -> OperatorOptions {
        OperatorOptions { quad_tol: self.quad_tol, lin_tol: self.lin_tol, eig_tol: self.eig_tol }
    }
}

/// A validated run description. Optional fields are `None` when the
/// experiment does not use them and the file omits them.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub a: f64,
    pub b: f64,
    pub m: usize,
    pub s: Option<f64>,
    pub sigma: Option<f64>,
    pub p: Option<f64>,
    pub lambda: f64,
    pub delta: f64,
    pub tau: Option<f64>,
    pub t_final: Option<f64>,
    pub tolerances: Tolerances,
    pub experiment: Experiment,
    pub sequence: Option<Vec<f64>>,
    pub output_dir: PathBuf,
    /// Amplitude of the bump initial datum.
    pub amplitude: f64,
    /// Grid sizes for `eigen-sweep`; defaults to `[M]`.
    pub refinements: Option<Vec<usize>>,
    /// Concave weight for `evolve-ch-modified`; computed as `λ1^h(σ)` when
    /// omitted.
    pub lambda1: Option<f64>,
}

const KEYS: [&str; 21] = [
    "a",
    "b",
    "M",
    "s",
    "sigma",
    "p",
    "lambda",
    "delta",
    "tau",
    "T",
    "newton_tol",
    "lin_tol",
    "eig_tol",
    "stat_tol",
    "quad_tol",
    "experiment",
    "sequence",
    "output_dir",
    "amplitude",
    "refinements",
    "lambda1",
];

/// Keys the manifest adds on top of a config; accepted on input so a
/// manifest can be fed back as a config.
const MANIFEST_ONLY: [&str; 4] = ["tool", "input_sha256", "seed", "threads"];

struct Raw {
    values: BTreeMap<String, String>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::Parse { line, message: format!("expected key = value, got '{content}'") })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(ConfigError::Parse { line, message: "empty key".into() });
            }
            if !KEYS.contains(&key) && !MANIFEST_ONLY.contains(&key) {
                return Err(ConfigError::Parse { line, message: format!("unknown key '{key}'") });
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError::Parse { line, message: format!("duplicate key '{key}'") });
            }
        }
        Ok(Self { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| ConfigError::invalid(key, format!("cannot parse '{v}'"))))
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        self.values
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        let item = item.trim();
                        item.parse::<T>().map_err(|_| ConfigError::invalid(key, format!("cannot parse list item '{item}'")))
                    })
                    .collect()
            })
            .transpose()
    }
}

fn require<T>(value: Option<T>, key: &str, experiment: Experiment) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError::missing(key, experiment))
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("{key} must be positive")))
    }
}

fn unit_open(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("{key} must lie in (0,1)")))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw = Raw::parse(text)?;
    let experiment = match raw.values.get("experiment") {
        Some(v) => v.parse().map_err(|e: String| ConfigError::invalid("experiment", e))?,
        None => Experiment::EvolveCh,
    };
    let d = Tolerances::default();
    let config = RunConfig {
        a: require(raw.get("a")?, "a", experiment)?,
        b: require(raw.get("b")?, "b", experiment)?,
        m: require(raw.get("M")?, "M", experiment)?,
        s: raw.get("s")?,
        sigma: raw.get("sigma")?,
        p: raw.get("p")?,
        lambda: raw.get("lambda")?.unwrap_or(1.0),
        delta: raw.get("delta")?.unwrap_or(DEFAULT_DELTA),
        tau: raw.get("tau")?,
        t_final: raw.get("T")?,
        tolerances: Tolerances {
            newton_tol: raw.get("newton_tol")?.unwrap_or(d.newton_tol),
            lin_tol: raw.get("lin_tol")?.unwrap_or(d.lin_tol),
            eig_tol: raw.get("eig_tol")?.unwrap_or(d.eig_tol),
            stat_tol: raw.get("stat_tol")?.unwrap_or(d.stat_tol),
            quad_tol: raw.get("quad_tol")?.unwrap_or(d.quad_tol),
        },
        experiment,
        sequence: raw.list("sequence")?,
        output_dir: raw.get::<String>("output_dir")?.map(PathBuf::from).unwrap_or_else(|| PathBuf::from("output")),
        amplitude: raw.get("amplitude")?.unwrap_or(1.0),
        refinements: raw.list("refinements")?,
        lambda1: raw.get("lambda1")?,
    };
    config.validate(&raw)?;
    Ok(config)
}

impl RunConfig {
    fn validate(&self, raw: &Raw) -> Result<(), ConfigError> {
        for key in self.experiment.required() {
            if !raw.values.contains_key(*key) {
                return Err(ConfigError::missing(key, self.experiment));
            }
        }
        if self.experiment == Experiment::Stationary && self.sigma.is_none() && self.sequence.is_none() {
            return Err(ConfigError::invalid("sigma", "stationary needs sigma or a sequence of sigmas"));
        }
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return Err(ConfigError::invalid("b", "b must exceed a"));
        }
        if self.m == 0 {
            return Err(ConfigError::invalid("M", "M must be at least 1"));
        }
        if let Some(s) = self.s {
            unit_open("s", s)?;
        }
        if let Some(sigma) = self.sigma {
            unit_open("sigma", sigma)?;
        }
        if let Some(p) = self.p {
            if !(p > 1.0 && p.is_finite()) || p == 2.0 {
                return Err(ConfigError::invalid("p", "p must exceed 1 and differ from 2"));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(ConfigError::invalid("lambda", "lambda must be nonnegative"));
        }
        positive("delta", self.delta)?;
        positive("amplitude", self.amplitude)?;
        if let Some(tau) = self.tau {
            positive("tau", tau)?;
        }
        if let Some(t) = self.t_final {
            positive("T", t)?;
            if let Some(tau) = self.tau {
                if tau > t {
                    return Err(ConfigError::invalid("tau", "tau must not exceed T"));
                }
            }
        }
        let t = &self.tolerances;
        for (key, v) in [
            ("newton_tol", t.newton_tol),
            ("lin_tol", t.lin_tol),
            ("eig_tol", t.eig_tol),
            ("stat_tol", t.stat_tol),
            ("quad_tol", t.quad_tol),
        ] {
            positive(key, v)?;
        }
        if let Some(seq) = &self.sequence {
            if seq.is_empty() {
                return Err(ConfigError::invalid("sequence", "sequence must not be empty"));
            }
            for &v in seq {
                unit_open("sequence", v)?;
            }
            let decreasing = seq.windows(2).all(|w| w[1] < w[0]);
            if !decreasing && self.experiment != Experiment::EigenSweep {
                return Err(ConfigError::invalid("sequence", "sequence must be strictly decreasing"));
            }
        }
        if let Some(refs) = &self.refinements {
            if refs.is_empty() || refs.contains(&0) {
                return Err(ConfigError::invalid("refinements", "refinements must be positive grid sizes"));
            }
        }
        if let Some(l1) = self.lambda1 {
            positive("lambda1", l1)?;
        }
        Ok(())
    }

    /// The effective parameters as `key = value` lines, in a fixed order.
    /// The output parses back to the same configuration.
    pub fn to_lines(&self) -> Vec<String> {
        fn list<T: ToString>(v: &[T]) -> String {
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
        }
        let mut out = vec![
            format!("experiment = {}", self.experiment),
            format!("a = {}", self.a),
            format!("b = {}", self.b),
            format!("M = {}", self.m),
        ];
        let opt = |key: &str, v: Option<f64>| v.map(|v| format!("{key} = {v}"));
        out.extend(opt("s", self.s));
        out.extend(opt("sigma", self.sigma));
        out.extend(opt("p", self.p));
        out.push(format!("lambda = {}", self.lambda));
        out.push(format!("delta = {}", self.delta));
        out.extend(opt("tau", self.tau));
        out.extend(opt("T", self.t_final));
        let t = &self.tolerances;
        out.push(format!("newton_tol = {}", t.newton_tol));
        out.push(format!("lin_tol = {}", t.lin_tol));
        out.push(format!("eig_tol = {}", t.eig_tol));
        out.push(format!("stat_tol = {}", t.stat_tol));
        out.push(format!("quad_tol = {}", t.quad_tol));
        if let Some(seq) = &self.sequence {
            out.push(format!("sequence = {}", list(seq)));
        }
        out.push(format!("output_dir = {}", self.output_dir.display()));
        out.push(format!("amplitude = {}", self.amplitude));
        if let Some(r) = &self.refinements {
            out.push(format!("refinements = {}", list(r)));
        }
        out.extend(opt("lambda1", self.lambda1));
        out
    }
}
