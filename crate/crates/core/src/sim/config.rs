use std::fmt;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::code::QcMdpcCode;
use crate::decoder::{DecoderSpec, Variant, MLD_ITER_MAX, OOP_AFFINE_ITER_MAX};
use crate::error::{Error, Result};
use crate::error_model::DEFAULT_MAX_ATTEMPTS;

pub const DEFAULT_MIN_FAILURES: u64 = 30;
pub const DEFAULT_MAX_TRIALS: u64 = 10_000_000;
pub const DEFAULT_COUNTER_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DfrSweep,
    AlmostNcSweep,
    CounterDist,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::DfrSweep => "dfr_sweep",
            ExperimentKind::AlmostNcSweep => "almost_nc_sweep",
            ExperimentKind::CounterDist => "counter_dist",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CodeSource {
    File { file: PathBuf },
    Random { r: usize, v: usize, key_seed: u64 },
}

impl CodeSource {
    /// Loads or generates the code. Relative file paths resolve against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<QcMdpcCode> {
        match self {
            CodeSource::File { file } => {
                let path = match base {
                    Some(b) if file.is_relative() => b.join(file),
                    _ => file.clone(),
                };
                QcMdpcCode::load(path)
            }
            CodeSource::Random { r, v, key_seed } => {
                QcMdpcCode::random(*r, *v, &mut ChaCha8Rng::seed_from_u64(*key_seed))
            }
        }
    }
}

/// One code or a list of codes; sweeps run every point on each code in turn.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codes(pub Vec<CodeSource>);

impl From<CodeSource> for Codes {
    fn from(source: CodeSource) -> Self {
        Codes(vec![source])
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CodesRepr {
    One(CodeSource),
    Many(Vec<CodeSource>),
}

impl Serialize for Codes {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0.as_slice() {
            [one] => one.serialize(ser),
            many => many.serialize(ser),
        }
    }
}

impl<'de> Deserialize<'de> for Codes {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        Ok(match CodesRepr::deserialize(de)? {
            CodesRepr::One(c) => Codes(vec![c]),
            CodesRepr::Many(v) => Codes(v),
        })
    }
}

/// Iteration budget in a config: a number, or `"<k>t"` for `k` times the
/// error weight of the sweep point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterMax {
    Fixed(usize),
    PerError(usize),
}

impl IterMax {
    pub fn resolve(self, t: usize) -> usize {
        match self {
            IterMax::Fixed(n) => n,
            IterMax::PerError(k) => (k * t).max(1),
        }
    }
}

impl fmt::Display for IterMax {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IterMax::Fixed(n) => write!(f, "{n}"),
            IterMax::PerError(k) => write!(f, "{k}t"),
        }
    }
}

impl Serialize for IterMax {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            IterMax::Fixed(n) => s.serialize_u64(*n as u64),
            IterMax::PerError(_) => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for IterMax {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(usize),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(IterMax::Fixed(n)),
            Raw::S(s) => {
                let k = s
                    .strip_suffix('t')
                    .ok_or_else(|| serde::de::Error::custom(format!("bad iter_max {s:?}")))?;
                let k = if k.is_empty() {
                    1
                } else {
                    k.parse().map_err(serde::de::Error::custom)?
                };
                Ok(IterMax::PerError(k))
            }
        }
    }
}

/// A decoder entry in a config file. `iter_max` defaults per variant:
/// `2t` for bf-max, 50 for mld, one per threshold for oop-fixed and 5 for
/// oop-affine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    #[serde(flatten)]
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iter_max: Option<IterMax>,
    #[serde(default)]
    pub nc_aware: bool,
    #[serde(default)]
    pub check_before_first_iter: bool,
}

impl DecoderConfig {
    pub fn new(variant: Variant, nc_aware: bool) -> Self {
        Self {
            variant,
            iter_max: None,
            nc_aware,
            check_before_first_iter: false,
        }
    }

    pub fn effective_iter_max(&self) -> IterMax {
        self.iter_max.unwrap_or(match &self.variant {
            Variant::BfMax => IterMax::PerError(2),
            Variant::Mld => IterMax::Fixed(MLD_ITER_MAX),
            Variant::OopFixed { thresholds } => IterMax::Fixed(thresholds.len()),
            Variant::OopAffine(_) => IterMax::Fixed(OOP_AFFINE_ITER_MAX),
        })
    }

    pub fn resolve(&self, t: usize) -> DecoderSpec {
        DecoderSpec {
            variant: self.variant.clone(),
            iter_max: self.effective_iter_max().resolve(t),
            nc_aware: self.nc_aware,
            check_before_first_iter: self.check_before_first_iter,
        }
    }

    /// Identity used to derive trial seeds. It leaves out the
    /// near-codeword flags, so standard and modified runs of the same
    /// decoder see the same per-trial random streams.
    pub fn seed_key(&self) -> String {
        let variant = serde_json::to_string(&self.variant).expect("variant serializes");
        format!("{variant}|{}", self.effective_iter_max())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingRule {
    /// Stop a sweep point once this many failures have been seen.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_failures: Option<u64>,
    /// Hard cap on trials per sweep point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_trials: Option<u64>,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_failures: Some(DEFAULT_MIN_FAILURES),
            max_trials: Some(DEFAULT_MAX_TRIALS),
        }
    }
}

impl StoppingRule {
    pub fn trials(max_trials: u64) -> Self {
        Self {
            min_failures: None,
            max_trials: Some(max_trials),
        }
    }

    pub fn failures_or_trials(min_failures: u64, max_trials: u64) -> Self {
        Self {
            min_failures: Some(min_failures),
            max_trials: Some(max_trials),
        }
    }

    pub fn max_trials(&self) -> u64 {
        self.max_trials.unwrap_or(u64::MAX)
    }

    pub fn min_failures(&self) -> u64 {
        self.min_failures.unwrap_or(u64::MAX)
    }
}

fn default_workers() -> usize {
    1
}

fn default_samples() -> usize {
    DEFAULT_COUNTER_SAMPLES
}

fn default_max_attempts() -> usize {
    DEFAULT_MAX_ATTEMPTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub code: Codes,
    #[serde(default)]
    pub decoders: Vec<DecoderConfig>,
    /// Error weights for `dfr_sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_values: Option<Vec<usize>>,
    /// Fixed error weight for `almost_nc_sweep` and `counter_dist`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    /// Overlaps for `almost_nc_sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_values: Option<Vec<usize>>,
    /// Overlap for `counter_dist`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<usize>,
    /// Number of almost near-codewords for `counter_dist`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub stopping: StoppingRule,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Count a success whose estimate differs from the planted error as a
    /// failure.
    #[serde(default)]
    pub strict_error_match: bool,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
    /// Report progress every this many trials (0 disables).
    #[serde(default)]
    pub progress_interval: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The config with every default written out, as echoed in sidecars.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        for d in &mut c.decoders {
            d.iter_max = Some(d.effective_iter_max());
        }
        c
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let stop = &self.stopping;
        if stop.min_failures.unwrap_or(0) == 0 && stop.max_trials.unwrap_or(0) == 0 {
            return bad("stopping rule needs min_failures >= 1 or max_trials >= 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be at least 1".into());
        }
        if self.code.0.is_empty() {
            return bad("code list is empty".into());
        }
        match self.experiment {
            ExperimentKind::DfrSweep => {
                if self.t_values.as_ref().is_none_or(|t| t.is_empty()) {
                    return bad("dfr_sweep needs a non-empty t_values list".into());
                }
            }
            ExperimentKind::AlmostNcSweep => {
                if self.t.is_none() {
                    return bad("almost_nc_sweep needs t".into());
                }
                if self.u_values.as_ref().is_none_or(|u| u.is_empty()) {
                    return bad("almost_nc_sweep needs a non-empty u_values list".into());
                }
            }
            ExperimentKind::CounterDist => {
                if self.t.is_none() || self.u.is_none() {
                    return bad("counter_dist needs t and u".into());
                }
                if self.code.0.len() != 1 {
                    return bad("counter_dist takes a single code".into());
                }
                if self.samples == 0 {
                    return bad("counter_dist needs samples >= 1".into());
                }
            }
        }
        if self.experiment != ExperimentKind::CounterDist && self.decoders.is_empty() {
            return bad(format!(
                "{} needs at least one decoder",
                self.experiment.name()
            ));
        }
        for (k, d) in self.decoders.iter().enumerate() {
            if let Variant::OopFixed { thresholds } = &d.variant {
                if d.effective_iter_max() != IterMax::Fixed(thresholds.len()) {
                    return bad(format!(
                        "decoder {k}: oop-fixed iter_max must equal the number of thresholds"
                    ));
                }
            }
        }
        Ok(())
    }
}
