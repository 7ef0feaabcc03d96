//! Monte Carlo experiments: DFR sweeps over the error weight, failure
//! probability sweeps over the overlap with near-codewords, and counter
//! histograms for bad and suspicious bits.
//!
//! Every trial draws its randomness from a ChaCha stream seeded by hashing
//! `(master_seed, experiment, sweep value, decoder, trial index)`. Trials
//! run in fixed-size batches on a worker pool, and the results are folded
//! back in trial order, so the stopping rule and every output byte are the
//! same for any worker count. The decoder part of the key leaves out the
//! near-codeword flag, which makes a standard and a modified decoder decode
//! the same error with the same tie-breaks at every trial index.

pub mod config;
pub mod stats;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::code::QcMdpcCode;
use crate::decoder::{decode, DecoderSpec};
use crate::error::{Error, Result};
use crate::error_model::{
    classify_bits, intersection_profile, sample_almost_nc, sample_uniform_error,
};
use crate::nc_table::NcSyndromeTable;

pub use config::{
    CodeSource, Codes, DecoderConfig, ExperimentConfig, ExperimentKind, IterMax, StoppingRule,
};
pub use stats::clopper_pearson;

const BATCH: u64 = 256;

pub const RESULTS_HEADER: &str =
    "experiment,decoder,nc_aware,r,v,t,u,trials,failures,dfr,ci_low,ci_high,nc_hits,mean_iters,seed";
pub const HISTOGRAM_HEADER: &str = "value,bad_frac,susp_frac";

/// 32-byte seed for one trial.
pub fn trial_seed(master_seed: u64, stream: &str, sweep_value: u64, trial: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"qcbf-trial-v1");
    h.update(master_seed.to_le_bytes());
    h.update((stream.len() as u64).to_le_bytes());
    h.update(stream.as_bytes());
    h.update(sweep_value.to_le_bytes());
    h.update(trial.to_le_bytes());
    h.finalize().into()
}

pub fn trial_rng(master_seed: u64, stream: &str, sweep_value: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(trial_seed(master_seed, stream, sweep_value, trial))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorSource {
    Uniform {
        t: usize,
    },
    AlmostNc {
        t: usize,
        u: usize,
        max_attempts: usize,
    },
}

impl ErrorSource {
    fn sweep_value(&self) -> usize {
        match *self {
            ErrorSource::Uniform { t } => t,
            ErrorSource::AlmostNc { u, .. } => u,
        }
    }
}

/// One sweep point: a decoder run repeatedly on errors from one source.
#[derive(Clone, Debug)]
pub struct PointRun<'a> {
    pub code: &'a QcMdpcCode,
    pub table: Option<&'a NcSyndromeTable>,
    pub spec: DecoderSpec,
    /// Decoder part of the trial seed; see [`DecoderConfig::seed_key`].
    pub stream: String,
    pub master_seed: u64,
    pub source: ErrorSource,
    pub stopping: StoppingRule,
    pub strict_error_match: bool,
    /// Index of the first trial; later trials follow consecutively.
    pub first_trial: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PointTally {
    pub trials: u64,
    pub failures: u64,
    pub nc_hits: u64,
    pub total_iterations: u64,
}

/// Result of one trial as counted by the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    pub failed: bool,
    pub nc_hit: bool,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct Progress<'a> {
    pub r: usize,
    pub v: usize,
    pub decoder: &'a str,
    pub nc_aware: bool,
    pub sweep_value: usize,
    pub trials: u64,
    pub failures: u64,
}

impl PointRun<'_> {
    /// Runs trial `index` alone; [`PointRun::run`] folds these in order.
    pub fn trial(&self, index: u64) -> Result<TrialOutcome> {
        let code = self.code;
        let mut rng = trial_rng(
            self.master_seed,
            &self.stream,
            self.source.sweep_value() as u64,
            index,
        );
        let e = match self.source {
            ErrorSource::Uniform { t } => sample_uniform_error(code.r(), t, &mut rng)?,
            ErrorSource::AlmostNc { t, u, max_attempts } => {
                sample_almost_nc(code, t, u, &mut rng, max_attempts)?
            }
        };
        let s0 = code.syndrome(&e)?;
        let out = decode(code, &s0, &self.spec, &mut rng, self.table)?;
        let mut failed = !out.is_success();
        if out.is_success() {
            if code.syndrome(&out.estimate)? != s0 {
                return Err(Error::InconsistentSuccess { trial: index });
            }
            if self.strict_error_match && out.estimate != e {
                failed = true;
            }
        }
        Ok(TrialOutcome {
            failed,
            nc_hit: out.nc_table_hit,
            iterations: out.iterations_used,
        })
    }

    /// Runs trials until the stopping rule triggers. The stop lands exactly
    /// on the trial that reaches `min_failures`, whatever the pool size.
    pub fn run(
        &self,
        pool: &rayon::ThreadPool,
        progress_interval: u64,
        progress: &mut dyn FnMut(&Progress),
    ) -> Result<PointTally> {
        let (max_trials, min_failures) = (self.stopping.max_trials(), self.stopping.min_failures());
        let mut tally = PointTally::default();
        let mut next_report = progress_interval;
        let report = |tally: &PointTally, progress: &mut dyn FnMut(&Progress)| {
            progress(&Progress {
                r: self.code.r(),
                v: self.code.v(),
                decoder: self.spec.variant.name(),
                nc_aware: self.spec.nc_aware,
                sweep_value: self.source.sweep_value(),
                trials: tally.trials,
                failures: tally.failures,
            })
        };
        'outer: while tally.trials < max_trials && tally.failures < min_failures {
            let start = self.first_trial + tally.trials;
            let len = BATCH.min(max_trials - tally.trials);
            let results: Vec<Result<TrialOutcome>> = pool.install(|| {
                (start..start + len)
                    .into_par_iter()
                    .map(|i| self.trial(i))
                    .collect()
            });
            for res in results {
                let res = res?;
                tally.trials += 1;
                tally.failures += u64::from(res.failed);
                tally.nc_hits += u64::from(res.nc_hit);
                tally.total_iterations += res.iterations as u64;
                if tally.failures >= min_failures {
                    break 'outer;
                }
            }
            if progress_interval > 0 && tally.trials >= next_report {
                report(&tally, progress);
                next_report = (tally.trials / progress_interval + 1) * progress_interval;
            }
        }
        if progress_interval > 0 {
            report(&tally, progress);
        }
        Ok(tally)
    }
}

/// One CSV row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPointResult {
    pub experiment: ExperimentKind,
    pub decoder: String,
    pub nc_aware: bool,
    pub r: usize,
    pub v: usize,
    pub t: usize,
    pub u: Option<usize>,
    pub trials: u64,
    pub failures: u64,
    pub dfr_estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub nc_table_hits: u64,
    pub mean_iterations: f64,
    pub seed: u64,
}

impl SweepPointResult {
    fn csv_row(&self) -> String {
        let u = self.u.map(|u| u.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment.name(),
            self.decoder,
            self.nc_aware,
            self.r,
            self.v,
            self.t,
            u,
            self.trials,
            self.failures,
            self.dfr_estimate,
            self.ci_low,
            self.ci_high,
            self.nc_table_hits,
            self.mean_iterations,
            self.seed
        )
    }
}

pub fn results_csv(rows: &[SweepPointResult]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    out
}

/// Normalized counter histograms for bad and suspicious bits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterHistogram {
    pub v: usize,
    pub t: usize,
    pub u: usize,
    pub samples: usize,
    pub bad_bits: u64,
    pub suspicious_bits: u64,
    /// `bad_frac[c]`: share of bad bits whose counter equals `c`.
    pub bad_frac: Vec<f64>,
    pub susp_frac: Vec<f64>,
    pub bad_mean: f64,
    pub susp_mean: f64,
}

impl CounterHistogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(HISTOGRAM_HEADER);
        out.push('\n');
        for c in 0..=self.v {
            let _ = writeln!(out, "{},{},{}", c, self.bad_frac[c], self.susp_frac[c]);
        }
        out
    }
}

/// A loaded experiment: config, codes, near-codeword tables (when some
/// decoder needs them) and worker pool.
pub struct Experiment {
    config: ExperimentConfig,
    codes: Vec<LoadedCode>,
    output: Option<PathBuf>,
    pool: rayon::ThreadPool,
}

struct LoadedCode {
    code: QcMdpcCode,
    table: Option<NcSyndromeTable>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        Self::with_base_dir(config, None)
    }

    /// Like [`Experiment::new`], resolving relative code file and output
    /// paths against `base`.
    pub fn with_base_dir(config: ExperimentConfig, base: Option<&Path>) -> Result<Self> {
        config.validate()?;
        let ts: Vec<usize> = match config.experiment {
            ExperimentKind::DfrSweep => config.t_values.clone().unwrap_or_default(),
            _ => config.t.into_iter().collect(),
        };
        let mut codes = Vec::with_capacity(config.code.0.len());
        for source in &config.code.0 {
            let code = source.load(base)?;
            for d in &config.decoders {
                for &t in &ts {
                    d.resolve(t).validate(code.v())?;
                }
            }
            let table = if config.decoders.iter().any(|d| d.nc_aware) {
                Some(NcSyndromeTable::build(&code)?)
            } else {
                None
            };
            codes.push(LoadedCode { code, table });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        let output = config.output.as_ref().map(|p| match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.clone(),
        });
        Ok(Self {
            config,
            codes,
            output,
            pool,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn codes(&self) -> impl Iterator<Item = &QcMdpcCode> {
        self.codes.iter().map(|c| &c.code)
    }

    /// Rows are ordered by code, then sweep value, then decoder.
    pub fn run_sweep(&self, progress: &mut dyn FnMut(&Progress)) -> Result<Vec<SweepPointResult>> {
        let cfg = &self.config;
        let points: Vec<(ErrorSource, usize, Option<usize>)> = match cfg.experiment {
            ExperimentKind::DfrSweep => cfg
                .t_values
                .iter()
                .flatten()
                .map(|&t| (ErrorSource::Uniform { t }, t, None))
                .collect(),
            ExperimentKind::AlmostNcSweep => {
                let t = cfg.t.expect("validated");
                cfg.u_values
                    .iter()
                    .flatten()
                    .map(|&u| {
                        (
                            ErrorSource::AlmostNc {
                                t,
                                u,
                                max_attempts: cfg.max_attempts,
                            },
                            t,
                            Some(u),
                        )
                    })
                    .collect()
            }
            ExperimentKind::CounterDist => {
                return Err(Error::Config("counter_dist is not a sweep".into()));
            }
        };
        let mut rows = Vec::new();
        for loaded in &self.codes {
            let code = &loaded.code;
            for &(source, t, u) in &points {
                for d in &cfg.decoders {
                    let run = PointRun {
                        code,
                        table: loaded.table.as_ref(),
                        spec: d.resolve(t),
                        stream: format!(
                            "{}|r={},v={}|{}",
                            cfg.experiment.name(),
                            code.r(),
                            code.v(),
                            d.seed_key()
                        ),
                        master_seed: cfg.master_seed,
                        source,
                        stopping: cfg.stopping,
                        strict_error_match: cfg.strict_error_match,
                        first_trial: 0,
                    };
                    let tally = run.run(&self.pool, cfg.progress_interval, progress)?;
                    rows.push(self.row(code, d, t, u, &tally));
                }
            }
        }
        Ok(rows)
    }

    fn row(
        &self,
        code: &QcMdpcCode,
        d: &DecoderConfig,
        t: usize,
        u: Option<usize>,
        tally: &PointTally,
    ) -> SweepPointResult {
        let trials = tally.trials.max(1);
        let (ci_low, ci_high) = clopper_pearson(tally.failures, trials, 0.95);
        SweepPointResult {
            experiment: self.config.experiment,
            decoder: d.variant.name().to_string(),
            nc_aware: d.nc_aware,
            r: code.r(),
            v: code.v(),
            t,
            u,
            trials: tally.trials,
            failures: tally.failures,
            dfr_estimate: tally.failures as f64 / trials as f64,
            ci_low,
            ci_high,
            nc_table_hits: tally.nc_hits,
            mean_iterations: tally.total_iterations as f64 / trials as f64,
            seed: self.config.master_seed,
        }
    }

    pub fn run_counter_dist(&self) -> Result<CounterHistogram> {
        let cfg = &self.config;
        if cfg.experiment != ExperimentKind::CounterDist {
            return Err(Error::Config(format!(
                "{} is not counter_dist",
                cfg.experiment.name()
            )));
        }
        let (t, u) = (cfg.t.expect("validated"), cfg.u.expect("validated"));
        let code = &self.codes[0].code;
        let v = code.v();
        let stream = format!("counter_dist|t={t}");
        let per_sample: Vec<Result<(Vec<u32>, Vec<u32>)>> = self.pool.install(|| {
            (0..cfg.samples as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = trial_rng(cfg.master_seed, &stream, u as u64, i);
                    let e = sample_almost_nc(code, t, u, &mut rng, cfg.max_attempts)?;
                    let counters = code.counters(&code.syndrome(&e)?)?;
                    let cls = classify_bits(code, &e, &intersection_profile(code, &e)?)?;
                    let pick =
                        |bits: &[u32]| bits.iter().map(|&b| counters.get(b as usize)).collect();
                    Ok((pick(&cls.bad_bits), pick(&cls.suspicious_bits)))
                })
                .collect()
        });
        let mut bad = vec![0u64; v + 1];
        let mut susp = vec![0u64; v + 1];
        for res in per_sample {
            let (b, s) = res?;
            b.iter().for_each(|&c| bad[c as usize] += 1);
            s.iter().for_each(|&c| susp[c as usize] += 1);
        }
        let summarize = |h: &[u64]| {
            let n: u64 = h.iter().sum();
            if n == 0 {
                return (n, vec![0.0; h.len()], f64::NAN);
            }
            let frac = h.iter().map(|&x| x as f64 / n as f64).collect();
            let mean = h
                .iter()
                .enumerate()
                .map(|(c, &x)| (c as u64 * x) as f64)
                .sum::<f64>()
                / n as f64;
            (n, frac, mean)
        };
        let (bad_bits, bad_frac, bad_mean) = summarize(&bad);
        let (suspicious_bits, susp_frac, susp_mean) = summarize(&susp);
        Ok(CounterHistogram {
            v,
            t,
            u,
            samples: cfg.samples,
            bad_bits,
            suspicious_bits,
            bad_frac,
            susp_frac,
            bad_mean,
            susp_mean,
        })
    }

    /// Provenance record written next to every output file.
    pub fn sidecar_json(&self) -> String {
        let doc = serde_json::json!({
            "config": self.config.resolved(),
            "codes": self.codes().map(QcMdpcCode::to_file).collect::<Vec<_>>(),
            "version": env!("CARGO_PKG_VERSION"),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json value serializes");
        s.push('\n');
        s
    }

    /// Writes `contents` to the configured output path (if any) plus a
    /// `<output>.json` sidecar. Returns the path written.
    pub fn write_output(&self, contents: &str) -> Result<Option<PathBuf>> {
        let Some(path) = &self.output else {
            return Ok(None);
        };
        std::fs::write(path, contents)?;
        std::fs::write(sidecar_path(path), self.sidecar_json())?;
        Ok(Some(path.clone()))
    }
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn run_dfr_sweep(config: &ExperimentConfig) -> Result<Vec<SweepPointResult>> {
    expect_kind(config, ExperimentKind::DfrSweep)?;
    Experiment::new(config.clone())?.run_sweep(&mut |_| {})
}

pub fn run_almost_nc_sweep(config: &ExperimentConfig) -> Result<Vec<SweepPointResult>> {
    expect_kind(config, ExperimentKind::AlmostNcSweep)?;
    Experiment::new(config.clone())?.run_sweep(&mut |_| {})
}

pub fn run_counter_dist(config: &ExperimentConfig) -> Result<CounterHistogram> {
    Experiment::new(config.clone())?.run_counter_dist()
}

fn expect_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if config.experiment != kind {
        return Err(Error::Config(format!(
            "expected a {} config, got {}",
            kind.name(),
            config.experiment.name()
        )));
    }
    Ok(())
}
