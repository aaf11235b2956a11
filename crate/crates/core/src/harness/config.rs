//! Experiment configuration and its plain-text `key = value` format.
//!
//! ```text
//! # Table 1 of the Poisson study
//! process = poisson
//! theta = 1
//! S = 15
//! S = 20
//! h = 1
//! predictor = UP
//! predictor = BP
//! prior = gamma a=1 b=1
//! replicates = 100000
//! seed = 42
//! baseline = UP
//! ```
//!
//! Repeating a key builds a list. Blank lines and `#` comments are ignored.
//!
//! | key          | processes           | meaning                                                   |
//! |--------------|---------------------|-----------------------------------------------------------|
//! | `process`    | all                 | `poisson`, `ou-m`, `ou-theta` or `ou-rho`                 |
//! | `theta`      | all                 | true intensity / mean-reversion rate (list)               |
//! | `m`          | ou-*                | true mean level (list, default 0)                         |
//! | `S`          | poisson, ou-theta   | observation length (list)                                 |
//! | `h`          | poisson             | prediction horizon (list)                                 |
//! | `H`          | ou-*                | prediction horizon in time units (list)                   |
//! | `n`          | ou-m, ou-rho        | number of sampling steps (list)                           |
//! | `delta`      | ou-*                | sampling step (list); for ou-theta the observation grid   |
//! | `predictor`  | all                 | predictor labels (list)                                   |
//! | `prior`      | all                 | `gamma a=.. b=..`, `normal mean=.. var=..` (list)         |
//! | `baseline`   | all                 | prior-free predictor used for percentage variations       |
//! | `replicates` | all                 | number of Monte Carlo replicates                          |
//! | `seed`       | all                 | master seed                                               |
//! | `base_step`  | ou-m, ou-rho        | simulation step; every delta must be a multiple (default: smallest delta) |
//! | `refinement` | ou-theta            | quadrature points per observation step (default 10)       |
//! | `rho_noise`  | ou-rho              | `step` (default) or `exact` noise variance in the rho posterior |
//! | `clamp_rho`  | ou-rho              | `true` clamps rho estimates to [0, 1] (default `false`)   |
//! | `sweep_axis` | all                 | prior parameter swept by the `sweep` command              |
//! | `sweep_grid` | all                 | values of the swept parameter (list)                      |

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ou_continuous::GaussianPrior;
use crate::ou_sampled::RhoNoise;
use crate::poisson_predict::GammaPrior;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    Poisson,
    OuMeanUnknown,
    OuRateUnknown,
    OuRhoSampled,
}

impl ProcessKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProcessKind::Poisson => "poisson",
            ProcessKind::OuMeanUnknown => "ou-m",
            ProcessKind::OuRateUnknown => "ou-theta",
            ProcessKind::OuRhoSampled => "ou-rho",
        }
    }

    pub fn allowed_methods(&self) -> &'static [Method] {
        use Method::*;
        match self {
            ProcessKind::Poisson => &[Up, Bp, Map],
            ProcessKind::OuMeanUnknown => &[Mle, Mean, Cmle, Bayes, Cmap1, Cmap2],
            ProcessKind::OuRateUnknown => &[Mle, Bayes, Map],
            ProcessKind::OuRhoSampled => &[Cmle, Bayes],
        }
    }

    fn allowed_keys(&self) -> Vec<&'static str> {
        let extra: &[&'static str] = match self {
            ProcessKind::Poisson => &["S", "h"],
            ProcessKind::OuMeanUnknown => &["m", "H", "n", "delta", "base_step"],
            ProcessKind::OuRateUnknown => &["m", "S", "H", "delta", "refinement"],
            ProcessKind::OuRhoSampled => &["m", "H", "n", "delta", "base_step", "rho_noise", "clamp_rho"],
        };
        let mut keys = vec![
            "process", "theta", "predictor", "prior", "baseline", "replicates", "seed", "sweep_axis", "sweep_grid",
        ];
        keys.extend_from_slice(extra);
        keys
    }
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProcessKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(ProcessKind::Poisson),
            "ou-m" | "ou-m-unknown" => Ok(ProcessKind::OuMeanUnknown),
            "ou-theta" | "ou-theta-unknown" => Ok(ProcessKind::OuRateUnknown),
            "ou-rho" | "ou-rho-sampled" => Ok(ProcessKind::OuRhoSampled),
            other => Err(format!("unknown process `{other}`")),
        }
    }
}

/// Predictor families across all processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Up,
    Bp,
    Map,
    Mle,
    Mean,
    Cmle,
    Bayes,
    Cmap1,
    Cmap2,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Up => "UP",
            Method::Bp => "BP",
            Method::Map => "MAP",
            Method::Mle => "MLE",
            Method::Mean => "MEAN",
            Method::Cmle => "CMLE",
            Method::Bayes => "BAYES",
            Method::Cmap1 => "CMAP1",
            Method::Cmap2 => "CMAP2",
        }
    }

    pub fn needs_prior(&self) -> bool {
        matches!(self, Method::Bp | Method::Map | Method::Bayes | Method::Cmap1 | Method::Cmap2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "UP" => Method::Up,
            "BP" => Method::Bp,
            "MAP" => Method::Map,
            "MLE" => Method::Mle,
            "MEAN" => Method::Mean,
            "CMLE" => Method::Cmle,
            "BAYES" | "BAY" => Method::Bayes,
            "CMAP1" => Method::Cmap1,
            "CMAP2" => Method::Cmap2,
            other => return Err(format!("unknown predictor `{other}`")),
        })
    }
}

/// A prior as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSpec {
    Gamma { a: f64, b: f64 },
    Normal { mean: f64, variance: f64 },
}

impl PriorSpec {
    pub fn family(&self) -> &'static str {
        match self {
            PriorSpec::Gamma { .. } => "gamma",
            PriorSpec::Normal { .. } => "normal",
        }
    }

    /// `a=1;b=1` style rendering used in reports.
    pub fn params(&self) -> String {
        match self {
            PriorSpec::Gamma { a, b } => format!("a={a};b={b}"),
            PriorSpec::Normal { mean, variance } => format!("mean={mean};var={variance}"),
        }
    }

    pub fn gamma(&self) -> Result<GammaPrior> {
        match *self {
            PriorSpec::Gamma { a, b } => GammaPrior::new(a, b),
            _ => Err(Error::InvalidParameter(format!("expected a gamma prior, got {}", self.family()))),
        }
    }

    pub fn normal(&self) -> Result<GaussianPrior> {
        match *self {
            PriorSpec::Normal { mean, variance } => GaussianPrior::new(mean, variance),
            _ => Err(Error::InvalidParameter(format!("expected a normal prior, got {}", self.family()))),
        }
    }

    /// Copy with one named parameter replaced.
    pub fn with_param(&self, axis: &str, value: f64) -> std::result::Result<PriorSpec, String> {
        match (*self, canonical_axis(axis)) {
            (PriorSpec::Gamma { b, .. }, Some("a")) => Ok(PriorSpec::Gamma { a: value, b }),
            (PriorSpec::Gamma { a, .. }, Some("b")) => Ok(PriorSpec::Gamma { a, b: value }),
            (PriorSpec::Normal { variance, .. }, Some("mean")) => Ok(PriorSpec::Normal { mean: value, variance }),
            (PriorSpec::Normal { mean, .. }, Some("var")) => Ok(PriorSpec::Normal { mean, variance: value }),
            _ => Err(format!("`{axis}` is not a parameter of the {} prior", self.family())),
        }
    }
}

fn canonical_axis(axis: &str) -> Option<&'static str> {
    match axis {
        "a" => Some("a"),
        "b" => Some("b"),
        "mean" | "m0" | "rho0" | "theta0" => Some("mean"),
        "var" | "variance" | "u2" | "v2" => Some("var"),
        _ => None,
    }
}

impl FromStr for PriorSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut parts = s.split_whitespace();
        let family = parts.next().ok_or("empty prior")?.to_ascii_lowercase();
        let mut fields: Vec<(String, f64)> = Vec::new();
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("prior parameter `{part}` is not key=value"))?;
            let v: f64 = v.parse().map_err(|_| format!("prior parameter `{part}` is not a number"))?;
            fields.push((k.to_string(), v));
        }
        let take = |names: &[&str]| -> std::result::Result<f64, String> {
            fields
                .iter()
                .find(|(k, _)| names.contains(&k.as_str()))
                .map(|(_, v)| *v)
                .ok_or_else(|| format!("prior `{s}` is missing `{}`", names[0]))
        };
        let spec = match family.as_str() {
            "gamma" => PriorSpec::Gamma {
                a: take(&["a"])?,
                b: take(&["b"])?,
            },
            "normal" | "gaussian" => PriorSpec::Normal {
                mean: take(&["mean", "m0", "rho0", "theta0"])?,
                variance: take(&["var", "variance", "u2", "v2"])?,
            },
            other => return Err(format!("unknown prior family `{other}`")),
        };
        for (k, _) in &fields {
            if canonical_axis(k).is_none() {
                return Err(format!("unknown prior parameter `{k}`"));
            }
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub process: ProcessKind,
    pub theta: Vec<f64>,
    pub m: Vec<f64>,
    pub s: Vec<f64>,
    pub h: Vec<f64>,
    pub n: Vec<usize>,
    pub delta: Vec<f64>,
    pub predictors: Vec<Method>,
    pub priors: Vec<PriorSpec>,
    pub baseline: Method,
    pub replicates: u64,
    pub master_seed: u64,
    pub base_step: Option<f64>,
    pub refinement: usize,
    pub rho_noise: RhoNoise,
    pub clamp_rho: bool,
    pub sweep_axis: Option<String>,
    pub sweep_grid: Vec<f64>,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_REFINEMENT: usize = 10;

/// Ordered `key = value` entries, before interpretation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigEntries {
    entries: Vec<(String, String)>,
}

impl ConfigEntries {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut problems = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => entries.push((k.trim().to_string(), v.trim().to_string())),
                _ => problems.push(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)),
            }
        }
        if problems.is_empty() {
            Ok(Self { entries })
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Replaces every value of each overridden key; repeating a key in
    /// `overrides` builds a list.
    pub fn apply_overrides<'a, I>(&mut self, overrides: I)
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let overrides: Vec<(&str, &str)> = overrides.into_iter().collect();
        let mut cleared: Vec<&str> = Vec::new();
        for (key, value) in overrides {
            if !cleared.contains(&key) {
                self.entries.retain(|(k, _)| k != key);
                cleared.push(key);
            }
            self.entries.push((key.to_string(), value.to_string()));
        }
    }

    pub fn values<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }
}

struct Reader<'a> {
    entries: &'a ConfigEntries,
    problems: Vec<String>,
}

impl<'a> Reader<'a> {
    fn list<T: FromStr>(&mut self, key: &str) -> Vec<T> {
        let mut out = Vec::new();
        for v in self.entries.values(key) {
            match v.parse::<T>() {
                Ok(x) => out.push(x),
                Err(_) => self.problems.push(format!("`{key}`: cannot parse `{v}`")),
            }
        }
        out
    }

    fn single<T: FromStr>(&mut self, key: &str) -> Option<T> {
        let values: Vec<&str> = self.entries.values(key).collect();
        match values.as_slice() {
            [] => None,
            [v] => match v.parse::<T>() {
                Ok(x) => Some(x),
                Err(_) => {
                    self.problems.push(format!("`{key}`: cannot parse `{v}`"));
                    None
                }
            },
            _ => {
                self.problems.push(format!("`{key}` may appear only once"));
                None
            }
        }
    }

    fn parsed_list<T>(&mut self, key: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Vec<T> {
        let mut out = Vec::new();
        for v in self.entries.values(key) {
            match parse(v) {
                Ok(x) => out.push(x),
                Err(e) => self.problems.push(format!("`{key}`: {e}")),
            }
        }
        out
    }
}

fn is_multiple(value: f64, step: f64) -> bool {
    let ratio = value / step;
    (ratio - ratio.round()).abs() <= 1e-9 * ratio.abs().max(1.0) && ratio.round() >= 1.0
}

pub(crate) fn steps_of(value: f64, step: f64) -> usize {
    (value / step).round() as usize
}

fn sorted_unique(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    xs
}

impl ExperimentConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        Self::from_entries(&ConfigEntries::parse(text)?)
    }

    pub fn from_entries(entries: &ConfigEntries) -> Result<Self> {
        let mut r = Reader {
            entries,
            problems: Vec::new(),
        };
        let process = match r.single::<String>("process") {
            Some(p) => match p.parse::<ProcessKind>() {
                Ok(p) => p,
                Err(e) => return Err(Error::Config(vec![e])),
            },
            None => {
                let mut problems = r.problems;
                problems.push("missing `process`".into());
                return Err(Error::Config(problems));
            }
        };
        let allowed = process.allowed_keys();
        let mut seen_unknown: Vec<&str> = Vec::new();
        for key in entries.keys() {
            if !allowed.contains(&key) && !seen_unknown.contains(&key) {
                seen_unknown.push(key);
                r.problems.push(format!("unknown key `{key}` for process {process}"));
            }
        }

        let theta = sorted_unique(r.list::<f64>("theta"));
        let m = sorted_unique(r.list::<f64>("m"));
        let s = sorted_unique(r.list::<f64>("S"));
        let h = match process {
            ProcessKind::Poisson => sorted_unique(r.list::<f64>("h")),
            _ => sorted_unique(r.list::<f64>("H")),
        };
        let mut n = r.list::<usize>("n");
        n.sort_unstable();
        n.dedup();
        let delta = sorted_unique(r.list::<f64>("delta"));
        let predictors = {
            let mut ps = r.parsed_list("predictor", |v| v.parse::<Method>());
            let mut unique = Vec::new();
            for p in ps.drain(..) {
                if !unique.contains(&p) {
                    unique.push(p);
                }
            }
            unique
        };
        let priors = r.parsed_list("prior", |v| v.parse::<PriorSpec>());
        let baseline = r.single::<String>("baseline");
        let replicates = r.single::<u64>("replicates");
        let master_seed = r.single::<u64>("seed").unwrap_or(DEFAULT_SEED);
        let base_step = r.single::<f64>("base_step");
        let refinement = r.single::<usize>("refinement").unwrap_or(DEFAULT_REFINEMENT);
        let rho_noise = match r.single::<String>("rho_noise").as_deref() {
            None | Some("step") => RhoNoise::Step,
            Some("exact") => RhoNoise::Exact,
            Some(other) => {
                r.problems.push(format!("`rho_noise` must be `step` or `exact`, got `{other}`"));
                RhoNoise::Step
            }
        };
        let clamp_rho = r.single::<bool>("clamp_rho").unwrap_or(false);
        let sweep_axis = r.single::<String>("sweep_axis");
        let sweep_grid = r.list::<f64>("sweep_grid");
        let mut problems = r.problems;

        let baseline = match baseline.map(|b| b.parse::<Method>()) {
            Some(Ok(b)) => Some(b),
            Some(Err(e)) => {
                problems.push(format!("`baseline`: {e}"));
                None
            }
            None => {
                problems.push("missing `baseline`".into());
                None
            }
        };
        let replicates = match replicates {
            Some(0) => {
                problems.push("`replicates` must be at least 1".into());
                0
            }
            Some(r) => r,
            None => {
                problems.push("missing `replicates`".into());
                0
            }
        };

        let config = ExperimentConfig {
            process,
            m: if m.is_empty() && process != ProcessKind::Poisson {
                vec![0.0]
            } else {
                m
            },
            theta,
            s,
            h,
            n,
            delta,
            predictors,
            priors,
            baseline: baseline.unwrap_or(Method::Up),
            replicates,
            master_seed,
            base_step,
            refinement,
            rho_noise,
            clamp_rho,
            sweep_axis,
            sweep_grid,
        };
        problems.extend(config.violations());
        if baseline.is_none() || !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Ok(config)
    }

    /// Every constraint the configuration breaks.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let positive = |name: &str, xs: &[f64], v: &mut Vec<String>| {
            if xs.is_empty() {
                v.push(format!("at least one `{name}` is required"));
            }
            for &x in xs {
                if !(x.is_finite() && x > 0.0) {
                    v.push(format!("`{name}` must be positive, got {x}"));
                }
            }
        };
        positive("theta", &self.theta, &mut v);
        if self.replicates == 0 {
            v.push("`replicates` must be at least 1".into());
        }
        match self.process {
            ProcessKind::Poisson => {
                positive("S", &self.s, &mut v);
                positive("h", &self.h, &mut v);
            }
            ProcessKind::OuMeanUnknown | ProcessKind::OuRhoSampled => {
                positive("delta", &self.delta, &mut v);
                positive("H", &self.h, &mut v);
                if self.n.is_empty() {
                    v.push("at least one `n` is required".into());
                }
                if self.n.contains(&0) {
                    v.push("`n` must be at least 1".into());
                }
                let base = self.base_step();
                if let Some(base) = base {
                    if !(base.is_finite() && base > 0.0) {
                        v.push(format!("`base_step` must be positive, got {base}"));
                    } else {
                        for &d in &self.delta {
                            if !is_multiple(d, base) {
                                v.push(format!("delta {d} is not a multiple of base_step {base}"));
                            }
                        }
                    }
                }
                for &d in &self.delta {
                    for &hh in &self.h {
                        if d > 0.0 && !is_multiple(hh, d) {
                            v.push(format!("H {hh} is not a whole number of steps of delta {d}"));
                        }
                    }
                }
            }
            ProcessKind::OuRateUnknown => {
                positive("S", &self.s, &mut v);
                positive("H", &self.h, &mut v);
                positive("delta", &self.delta, &mut v);
                if self.refinement == 0 {
                    v.push("`refinement` must be at least 1".into());
                }
                for &d in &self.delta {
                    if d <= 0.0 || self.refinement == 0 {
                        continue;
                    }
                    let fine = d / self.refinement as f64;
                    for &s in &self.s {
                        if !is_multiple(s, d) {
                            v.push(format!("S {s} is not a whole number of steps of delta {d}"));
                        }
                    }
                    for &hh in &self.h {
                        if !is_multiple(hh, fine) {
                            v.push(format!("H {hh} is not a whole number of simulation steps {fine}"));
                        }
                    }
                }
            }
        }
        for &m in &self.m {
            if !m.is_finite() {
                v.push(format!("`m` must be finite, got {m}"));
            }
        }

        if self.predictors.is_empty() {
            v.push("at least one `predictor` is required".into());
        }
        let allowed = self.process.allowed_methods();
        for p in &self.predictors {
            if !allowed.contains(p) {
                v.push(format!("predictor {p} is not available for process {}", self.process));
            }
        }
        if !self.predictors.contains(&self.baseline) {
            v.push(format!("baseline {} is not in the predictor list", self.baseline));
        }
        if self.baseline.needs_prior() {
            v.push(format!("baseline {} must not depend on a prior", self.baseline));
        }
        let wants_prior: Vec<Method> = self.predictors.iter().copied().filter(Method::needs_prior).collect();
        if !wants_prior.is_empty() && self.priors.is_empty() {
            v.push(format!(
                "predictors {} need at least one `prior`",
                wants_prior.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", ")
            ));
        }
        for prior in &self.priors {
            match (self.process, prior) {
                (ProcessKind::Poisson, PriorSpec::Gamma { a, b }) => {
                    if !(*a > 0.0 && *b > 0.0) {
                        v.push(format!("gamma prior needs a > 0 and b > 0, got a={a}, b={b}"));
                    } else if self.predictors.contains(&Method::Map) && *a < 1.0 {
                        v.push(format!("MAP predictor needs gamma shape a >= 1, got a={a}"));
                    }
                }
                (ProcessKind::Poisson, other) => {
                    v.push(format!("process poisson takes gamma priors, got {}", other.family()))
                }
                (_, PriorSpec::Normal { mean, variance }) => {
                    if !(mean.is_finite() && *variance > 0.0 && variance.is_finite()) {
                        v.push(format!("normal prior needs a finite mean and positive variance, got mean={mean}, var={variance}"));
                    }
                }
                (process, other) => v.push(format!("process {process} takes normal priors, got {}", other.family())),
            }
        }
        if !self.sweep_grid.is_empty() && self.sweep_axis.is_none() {
            v.push("`sweep_grid` given without `sweep_axis`".into());
        }
        v
    }

    /// Simulation step of the sampled OU processes.
    pub fn base_step(&self) -> Option<f64> {
        match self.process {
            ProcessKind::OuMeanUnknown | ProcessKind::OuRhoSampled => self
                .base_step
                .or_else(|| self.delta.iter().copied().fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))))),
            _ => None,
        }
    }

    /// Renders the configuration back into the text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("process", self.process.to_string());
        for x in &self.theta {
            push("theta", x.to_string());
        }
        if self.process != ProcessKind::Poisson {
            for x in &self.m {
                push("m", x.to_string());
            }
        }
        for x in &self.s {
            push("S", x.to_string());
        }
        let hkey = if self.process == ProcessKind::Poisson { "h" } else { "H" };
        for x in &self.h {
            push(hkey, x.to_string());
        }
        for x in &self.n {
            push("n", x.to_string());
        }
        for x in &self.delta {
            push("delta", x.to_string());
        }
        for p in &self.predictors {
            push("predictor", p.to_string());
        }
        for p in &self.priors {
            push("prior", format!("{} {}", p.family(), p.params().replace(';', " ")));
        }
        push("baseline", self.baseline.to_string());
        push("replicates", self.replicates.to_string());
        push("seed", self.master_seed.to_string());
        if let Some(b) = self.base_step {
            push("base_step", b.to_string());
        }
        if self.process == ProcessKind::OuRateUnknown {
            push("refinement", self.refinement.to_string());
        }
        if self.process == ProcessKind::OuRhoSampled {
            push("rho_noise", if self.rho_noise == RhoNoise::Exact { "exact" } else { "step" }.into());
            push("clamp_rho", self.clamp_rho.to_string());
        }
        if let Some(axis) = &self.sweep_axis {
            push("sweep_axis", axis.clone());
        }
        for g in &self.sweep_grid {
            push("sweep_grid", g.to_string());
        }
        out
    }
}
