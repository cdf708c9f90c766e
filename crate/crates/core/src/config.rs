//! Plain-text run configuration: one `key = value` per line, `#` starts a comment.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::canonical::{Canonicalizer, Method};
use crate::code::CodeLayout;
use crate::dataset::LabelField;
use crate::decoders::mlp::default_hidden_dim;
use crate::decoders::{DecoderKind, TrainConfig};
use crate::error::{check_prob, Error, Result};
use crate::eval::Target;
use crate::noise::{step_prob_for_cycle, NoiseConfig, NoiseModel, CYCLE_STEPS};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub d: usize,
    /// Sweep distances; empty means `[d]`.
    pub distances: Vec<usize>,
    pub model: NoiseModel,
    pub p_step: f64,
    /// Sweep points on the per-step axis. Takes precedence over `q_values`.
    pub p_steps: Vec<f64>,
    /// Sweep points on the per-cycle axis.
    pub q_values: Vec<f64>,
    pub steps: u32,
    pub syndrome_noise: bool,
    pub seed: u64,
    pub n: usize,
    pub canonical: Method,
    pub labels: Vec<LabelField>,
    /// `None` picks a width from the distance.
    pub hidden: Option<usize>,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub instances: usize,
    pub trials: u64,
    pub decoders: Vec<DecoderKind>,
    /// `None` picks the component the noise model corrupts.
    pub target: Option<Target>,
    pub bench_n: usize,
    pub bench_methods: Vec<Method>,
    pub bench_q: f64,
    /// 0 means one worker per core.
    pub workers: usize,
    pub data: Option<String>,
    pub model_file: Option<String>,
    pub out: Option<String>,
    pub summary: Option<String>,
    pub svg: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RunConfig {
            d: 3,
            distances: Vec::new(),
            model: NoiseModel::Bitflip,
            p_step: 0.001,
            p_steps: Vec::new(),
            q_values: Vec::new(),
            steps: CYCLE_STEPS,
            syndrome_noise: false,
            seed: 1,
            n: 10_000,
            canonical: Method::Rank,
            labels: vec![LabelField::Canonical],
            hidden: None,
            epochs: t.epochs,
            batch: t.batch_size,
            lr: t.learning_rate,
            instances: t.instances,
            trials: 100_000,
            decoders: vec![DecoderKind::Ffnn, DecoderKind::Mwpm],
            target: None,
            bench_n: 10_000,
            bench_methods: vec![Method::None, Method::Search, Method::Rank],
            bench_q: 0.05,
            workers: 0,
            data: None,
            model_file: None,
            out: None,
            summary: None,
            svg: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "d",
    "distances",
    "model",
    "p_step",
    "p_steps",
    "q_values",
    "steps",
    "syndrome_noise",
    "seed",
    "n",
    "canonical",
    "labels",
    "hidden",
    "epochs",
    "batch",
    "lr",
    "instances",
    "trials",
    "decoders",
    "target",
    "bench_n",
    "bench_methods",
    "bench_q",
    "workers",
    "data",
    "model_file",
    "out",
    "summary",
    "svg",
];

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Invalid(format!("bad value {v:?} for key {key}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Invalid(format!("bad value {v:?} for key {key} (expected true or false)"))),
    }
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn opt<T: Display>(v: &Option<T>, none: &str) -> String {
    v.as_ref().map_or(none.to_string(), |x| x.to_string())
}

fn opt_path(v: &str) -> Option<String> {
    (!v.is_empty() && v != "-").then(|| v.to_string())
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Malformed {
                line: i + 1,
                msg: "expected key = value".into(),
            })?;
            cfg.set(k.trim(), v.trim()).map_err(|e| Error::Malformed {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_str(&text)
            .map_err(|e| Error::Invalid(format!("config {}: {e}", path.display())))
    }

    /// Sets one key from its textual value; unknown keys are rejected.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "d" => self.d = parse(key, v)?,
            "distances" => self.distances = parse_list(key, v)?,
            "model" => self.model = v.parse()?,
            "p_step" => self.p_step = parse(key, v)?,
            "p_steps" => self.p_steps = parse_list(key, v)?,
            "q_values" => self.q_values = parse_list(key, v)?,
            "steps" => self.steps = parse(key, v)?,
            "syndrome_noise" => self.syndrome_noise = parse_bool(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "n" => self.n = parse(key, v)?,
            "canonical" => self.canonical = v.parse()?,
            "labels" => {
                self.labels = if v == "both" {
                    vec![LabelField::Raw, LabelField::Canonical]
                } else {
                    v.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?
                }
            }
            "hidden" => self.hidden = if v == "auto" { None } else { Some(parse(key, v)?) },
            "epochs" => self.epochs = parse(key, v)?,
            "batch" => self.batch = parse(key, v)?,
            "lr" => self.lr = parse(key, v)?,
            "instances" => self.instances = parse(key, v)?,
            "trials" => self.trials = parse(key, v)?,
            "decoders" => {
                self.decoders = v.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?
            }
            "target" => self.target = if v == "auto" { None } else { Some(v.parse()?) },
            "bench_n" => self.bench_n = parse(key, v)?,
            "bench_methods" => {
                self.bench_methods = v.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?
            }
            "bench_q" => self.bench_q = parse(key, v)?,
            "workers" => self.workers = parse(key, v)?,
            "data" => self.data = opt_path(v),
            "model_file" => self.model_file = opt_path(v),
            "out" => self.out = opt_path(v),
            "summary" => self.summary = opt_path(v),
            "svg" => self.svg = opt_path(v),
            other => return Err(Error::Invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn resolved_lines(&self) -> Vec<String> {
        KEYS.iter().map(|k| format!("{k} = {}", self.value_of(k))).collect()
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "d" => self.d.to_string(),
            "distances" => join(&self.distances()),
            "model" => self.model.to_string(),
            "p_step" => self.p_step.to_string(),
            "p_steps" => join(&self.p_steps),
            "q_values" => join(&self.q_values),
            "steps" => self.steps.to_string(),
            "syndrome_noise" => self.syndrome_noise.to_string(),
            "seed" => self.seed.to_string(),
            "n" => self.n.to_string(),
            "canonical" => self.canonical.to_string(),
            "labels" => join(&self.labels),
            "hidden" => opt(&self.hidden, "auto"),
            "epochs" => self.epochs.to_string(),
            "batch" => self.batch.to_string(),
            "lr" => self.lr.to_string(),
            "instances" => self.instances.to_string(),
            "trials" => self.trials.to_string(),
            "decoders" => join(&self.decoders),
            "target" => opt(&self.target, "auto"),
            "bench_n" => self.bench_n.to_string(),
            "bench_methods" => join(&self.bench_methods),
            "bench_q" => self.bench_q.to_string(),
            "workers" => self.workers.to_string(),
            "data" => opt(&self.data, "-"),
            "model_file" => opt(&self.model_file, "-"),
            "out" => opt(&self.out, "-"),
            "summary" => opt(&self.summary, "-"),
            "svg" => opt(&self.svg, "-"),
            _ => unreachable!("key list and accessors agree"),
        }
    }

    pub fn distances(&self) -> Vec<usize> {
        if self.distances.is_empty() {
            vec![self.d]
        } else {
            self.distances.clone()
        }
    }

    /// Per-step probabilities of the sweep.
    pub fn sweep_p_steps(&self) -> Result<Vec<f64>> {
        if !self.p_steps.is_empty() {
            Ok(self.p_steps.clone())
        } else if !self.q_values.is_empty() {
            self.q_values.iter().map(|&q| step_prob_for_cycle(q, self.steps)).collect()
        } else {
            Ok(vec![self.p_step])
        }
    }

    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig {
            model: self.model,
            p_step: self.p_step,
            steps: self.steps,
            syndrome_noise: self.syndrome_noise,
            seed: self.seed,
        }
    }

    pub fn train_config(&self, d: usize) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch,
            epochs: self.epochs,
            learning_rate: self.lr,
            instances: self.instances,
            seed: self.seed,
            hidden_dim: self.hidden.unwrap_or_else(|| default_hidden_dim(d)),
        }
    }

    pub fn target(&self) -> Target {
        self.target.unwrap_or_else(|| Target::for_noise(self.model))
    }

    /// Checks every value against the preconditions of the modules that use it.
    pub fn validate(&self) -> Result<()> {
        CodeLayout::new(self.d)?;
        for &d in &self.distances {
            CodeLayout::new(d)?;
        }
        self.noise().validate()?;
        for &p in self.p_steps.iter().chain(&self.q_values) {
            check_prob(p)?;
        }
        check_prob(self.bench_q)?;
        let positive = [
            ("n", self.n as u64),
            ("epochs", self.epochs as u64),
            ("batch", self.batch as u64),
            ("instances", self.instances as u64),
            ("trials", self.trials),
        ];
        for (k, v) in positive {
            if v == 0 {
                return Err(Error::Invalid(format!("{k} must be at least 1")));
            }
        }
        if self.hidden == Some(0) {
            return Err(Error::Invalid("hidden must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Invalid(format!("lr must be positive (got {})", self.lr)));
        }
        if self.labels.is_empty() || self.decoders.is_empty() {
            return Err(Error::Invalid("labels and decoders must not be empty".into()));
        }
        for d in self.distances() {
            Canonicalizer::new(&CodeLayout::new(d)?, self.canonical)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_values() {
        let c = RunConfig::parse_str(
            "# sweep\nd = 5\nmodel = depolarizing  # trailing\nq_values = 0.01, 0.02\nlabels = both\nsyndrome_noise = yes\n\n",
        )
        .unwrap();
        assert_eq!(c.d, 5);
        assert_eq!(c.model, NoiseModel::Depolarizing);
        assert_eq!(c.q_values, vec![0.01, 0.02]);
        assert_eq!(c.labels, vec![LabelField::Raw, LabelField::Canonical]);
        assert!(c.syndrome_noise);
        assert_eq!(c.target(), Target::Any);
        assert_eq!(c.train_config(5).hidden_dim, 256);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        let e = RunConfig::parse_str("d = 3\nrounds = 2\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(e.to_string().contains("rounds"), "{e}");
        assert!(RunConfig::parse_str("d 3").is_err());
        assert!(RunConfig::parse_str("d = three").is_err());
    }

    #[test]
    fn validation() {
        let ok = RunConfig::default();
        ok.validate().unwrap();
        let bad = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.d = 4));
        assert!(bad(|c| c.distances = vec![3, 6]));
        assert!(bad(|c| c.p_step = 1.5));
        assert!(bad(|c| c.q_values = vec![-0.1]));
        assert!(bad(|c| c.epochs = 0));
        assert!(bad(|c| c.lr = 0.0));
        assert!(bad(|c| c.trials = 0));
        assert!(bad(|c| {
            c.canonical = Method::Search;
            c.d = 7
        }));
    }

    #[test]
    fn resolved_lines_round_trip() {
        let mut c = RunConfig::default();
        c.set("p_steps", "0.001,0.002").unwrap();
        c.set("hidden", "64").unwrap();
        c.set("out", "curve.csv").unwrap();
        let text = c.resolved_lines().join("\n");
        let mut back = RunConfig::parse_str(&text).unwrap();
        // an empty distance list resolves to [d]
        back.distances.clear();
        assert_eq!(back, c);
        assert_eq!(c.resolved_lines().len(), KEYS.len());
    }

    #[test]
    fn sweep_axis() {
        let mut c = RunConfig::default();
        assert_eq!(c.sweep_p_steps().unwrap(), vec![0.001]);
        c.q_values = vec![0.010945];
        let p = c.sweep_p_steps().unwrap()[0];
        assert!((p - 0.001).abs() < 1e-7);
        c.p_steps = vec![0.002];
        assert_eq!(c.sweep_p_steps().unwrap(), vec![0.002]);
    }
}
