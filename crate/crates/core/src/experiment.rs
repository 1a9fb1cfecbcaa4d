//! Recovery sweeps over the number of measurements.
//!
//! Each trial draws one unit-norm `k`-sparse truth. For every `m` in the
//! grid the trial draws one row matrix, shared by all methods. Linear
//! methods see `sign⟨a, x⟩` and affine methods see `sign(⟨a, x⟩ + b)` on the
//! same rows, and both label sets pass through the same channel flips.
//! Seeds are derived from `(master_seed, trial, m)` only, so adding trials
//! or methods never changes existing records.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measurement::{apply_channel, format_float, measure, sample_rows, MeasurementSet, NoiseChannel, SamplingDistribution};
use crate::metrics::recovery_report;
use crate::rng::Seed;
use crate::solvers::{Method, RecoveryConfig};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    #[serde(default = "SamplingDistribution::gaussian")]
    pub distribution: SamplingDistribution,
    #[serde(default)]
    pub flip_probability: f64,
    pub methods: Vec<Method>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Bound on `|v|` in the affine programs, and the offset scale when the
    /// distribution does not set one.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub master_seed: Seed,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_lambda() -> f64 {
    RecoveryConfig::default().lambda
}

fn default_tau() -> f64 {
    RecoveryConfig::default().tau
}

fn default_workers() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::desk()
    }
}

impl ExperimentConfig {
    /// `n = 200`, `k = 5`, ten trials over `m ∈ {100, …, 2000}`.
    pub fn desk() -> Self {
        ExperimentConfig {
            n: 200,
            k: 5,
            m_grid: vec![100, 250, 500, 1000, 1500, 2000],
            trials: 10,
            distribution: SamplingDistribution::gaussian(),
            flip_probability: 0.0,
            methods: Method::ALL.to_vec(),
            lambda: default_lambda(),
            tau: default_tau(),
            master_seed: Seed(0),
            workers: 1,
        }
    }

    /// `n = 1000`, `k = 20`, thirty trials.
    pub fn full_scale() -> Self {
        ExperimentConfig {
            n: 1000,
            k: 20,
            m_grid: vec![250, 500, 1000, 2000, 3000, 4000, 5000],
            trials: 30,
            ..ExperimentConfig::desk()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(ExperimentConfig::desk()),
            "full-scale" => Ok(ExperimentConfig::full_scale()),
            _ => Err(invalid(format!("unknown preset `{name}` (expected desk or full-scale)"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(invalid(format!("need 1 ≤ k ≤ n, got n = {}, k = {}", self.n, self.k)));
        }
        if self.m_grid.is_empty() || self.m_grid.contains(&0) {
            return Err(invalid("the m grid must be nonempty and positive"));
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("the m grid must be strictly increasing"));
        }
        if self.trials == 0 {
            return Err(invalid("at least one trial is required"));
        }
        if self.methods.is_empty() {
            return Err(invalid("at least one method is required"));
        }
        if self.workers == 0 {
            return Err(invalid("at least one worker is required"));
        }
        NoiseChannel::new(self.flip_probability)?;
        self.distribution.validate(Some(self.n))?;
        self.recovery_config().validate()
    }

    pub fn recovery_config(&self) -> RecoveryConfig {
        RecoveryConfig::default()
            .with_lambda(self.lambda)
            .with_tau(self.tau)
            .with_truncation(self.k)
    }

    fn offset_distribution(&self) -> SamplingDistribution {
        let mut d = self.distribution.clone();
        if d.offset_scale == 0.0 {
            d.offset_scale = self.tau;
        }
        d
    }
}

/// Uniform support of size `k`, i.i.d. standard normal values, unit norm.
pub fn generate_truth(n: usize, k: usize, seed: Seed) -> Result<SparseVector> {
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 ≤ k ≤ n, got n = {n}, k = {k}")));
    }
    let mut rng = seed.rng();
    let mut support = sample(&mut rng, n, k).into_vec();
    support.sort_unstable();
    let mut values = vec![0.0; n];
    for &i in &support {
        // a zero draw has probability zero but would shrink the support
        values[i] = loop {
            let v: f64 = StandardNormal.sample(&mut rng);
            if v != 0.0 {
                break v;
            }
        };
    }
    SparseVector::new(values).normalize().and_then(|v| SparseVector::with_budget(v.into_values(), k))
}

/// Outcome of a solve: the solver status, or `error` when it returned an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    Error,
}

impl RecordStatus {
    pub fn name(self) -> &'static str {
        match self {
            RecordStatus::Optimal => "optimal",
            RecordStatus::Infeasible => "infeasible",
            RecordStatus::IterationLimit => "iteration_limit",
            RecordStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    pub m: usize,
    pub trial_index: usize,
    pub mse: f64,
    pub support_hits: usize,
    pub gen_error: Option<f64>,
    pub status: RecordStatus,
    pub iterations: usize,
    /// Seconds; kept out of `records.csv` so that file is reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

fn trial_seed(master: Seed, trial: usize) -> Seed {
    master.child(trial as u64)
}

/// Linear estimates are only defined up to scale and are normalized;
/// affine estimates carry their own scale unless only the direction was
/// determined. Unsolved runs score the zero vector.
fn score(method: Method, x: &SparseVector, ms: &MeasurementSet, cfg: &ExperimentConfig, trial: usize) -> TrialRecord {
    let start = Instant::now();
    let solved = method.recover(ms, &cfg.recovery_config());
    let wall_time = start.elapsed().as_secs_f64();
    let (status, iterations, estimate) = match solved {
        Ok(sol) if sol.is_feasible() => {
            let scale_free = !method.is_affine() || sol.direction_only;
            let est = if scale_free && !sol.estimate.is_zero() {
                sol.estimate.normalize().unwrap_or(sol.estimate)
            } else {
                sol.estimate
            };
            (RecordStatus::Optimal, sol.iterations_used, est)
        }
        Ok(sol) => {
            let status = match sol.status {
                crate::solvers::SolveStatus::Infeasible => RecordStatus::Infeasible,
                _ => RecordStatus::IterationLimit,
            };
            (status, sol.iterations_used, SparseVector::zeros(cfg.n))
        }
        Err(_) => (RecordStatus::Error, 0, SparseVector::zeros(cfg.n)),
    };
    let report = recovery_report(&estimate, x, cfg.k).expect("dimensions agree");
    TrialRecord {
        method,
        m: ms.count(),
        trial_index: trial,
        mse: report.mse,
        support_hits: report.support_hits,
        gen_error: report.gen_error,
        status,
        iterations,
        wall_time,
    }
}

fn run_cell(cfg: &ExperimentConfig, trial: usize, m: usize) -> Result<Vec<TrialRecord>> {
    let seed = trial_seed(cfg.master_seed, trial);
    let x = generate_truth(cfg.n, cfg.k, seed.child(0))?;
    let cell = seed.child(1).child(m as u64);
    let sampled = sample_rows(&cfg.offset_distribution(), m, cfg.n, cell.child(0))?;
    let channel = NoiseChannel::new(cfg.flip_probability)?;
    let flip_seed = cell.child(1);
    let linear = apply_channel(&measure(&x, &sampled.rows, None)?, channel, flip_seed);
    let affine = apply_channel(&measure(&x, &sampled.rows, sampled.offsets.as_deref())?, channel, flip_seed);
    let mut linear_set = None;
    let mut affine_set = None;
    let mut out = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let ms = if method.is_affine() {
            affine_set.get_or_insert_with(|| {
                MeasurementSet::new(sampled.rows.clone(), sampled.offsets.clone(), affine.clone())
            })
        } else {
            linear_set.get_or_insert_with(|| MeasurementSet::new(sampled.rows.clone(), None, linear.clone()))
        };
        let ms = ms.as_ref().map_err(|e| invalid(e.to_string()))?;
        out.push(score(method, &x, ms, cfg, trial));
    }
    Ok(out)
}

/// Runs every `(method, m, trial)` cell and returns records sorted by
/// method, then `m`, then trial.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> =
        (0..cfg.trials).flat_map(|t| cfg.m_grid.iter().map(move |&m| (t, m))).collect();
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::new());
    let first_error = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..cfg.workers.min(cells.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(trial, m)) = cells.get(i) else { break };
                match run_cell(cfg, trial, m) {
                    Ok(r) => results.lock().unwrap().extend(r),
                    Err(e) => {
                        first_error.lock().unwrap().get_or_insert(e);
                    }
                }
            });
        }
    });
    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    let mut records = results.into_inner().unwrap();
    records.sort_by_key(|r| (r.method, r.m, r.trial_index));
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
}

/// Quantile by linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(invalid("cannot summarize an empty series"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(Summary {
        min: v[0],
        q25: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q75: quantile(&v, 0.75),
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub m: usize,
    pub count: usize,
    pub unsolved: usize,
    pub mse: Summary,
    pub support_hits: Summary,
}

/// Per-`(method, m)` summaries of MSE and support hits, sorted by method then `m`.
pub fn aggregate(records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(invalid("no records to aggregate"));
    }
    let mut groups: BTreeMap<(Method, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.method, r.m)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, m), rs)| {
            let mse: Vec<f64> = rs.iter().map(|r| r.mse).collect();
            let hits: Vec<f64> = rs.iter().map(|r| r.support_hits as f64).collect();
            Ok(SummaryRow {
                method,
                m,
                count: rs.len(),
                unsolved: rs.iter().filter(|r| r.status != RecordStatus::Optimal).count(),
                mse: summarize(&mse)?,
                support_hits: summarize(&hits)?,
            })
        })
        .collect()
}

pub const RECORD_COLUMNS: [&str; 8] =
    ["method", "m", "trial_index", "mse", "support_hits", "gen_error", "status", "iterations"];

pub fn write_records_csv<W: Write>(records: &[TrialRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.write_record([
            r.method.name().to_string(),
            r.m.to_string(),
            r.trial_index.to_string(),
            format_float(r.mse),
            r.support_hits.to_string(),
            r.gen_error.map(format_float).unwrap_or_default(),
            r.status.name().to_string(),
            r.iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const STATS: [&str; 6] = ["min", "q25", "median", "q75", "max", "mean"];

pub fn summary_columns() -> Vec<String> {
    let mut cols = vec!["method".to_string(), "m".into(), "count".into(), "unsolved".into()];
    for prefix in ["mse", "support_hits"] {
        cols.extend(STATS.iter().map(|s| format!("{prefix}_{s}")));
    }
    cols
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(summary_columns())?;
    for r in rows {
        let mut rec = vec![r.method.name().to_string(), r.m.to_string(), r.count.to_string(), r.unsolved.to_string()];
        for s in [&r.mse, &r.support_hits] {
            rec.extend([s.min, s.q25, s.median, s.q75, s.max, s.mean].map(format_float));
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timings_csv<W: Write>(records: &[TrialRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["method", "m", "trial_index", "wall_time"])?;
    for r in records {
        w.write_record([r.method.name().to_string(), r.m.to_string(), r.trial_index.to_string(), format_float(r.wall_time)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMeta {
    pub config: ExperimentConfig,
    pub version: String,
    pub master_seed: Seed,
    pub records: usize,
    pub note: String,
}

/// Writes `records.csv`, `summary.csv`, `meta.json` and `timings.csv`.
pub fn write_outputs(cfg: &ExperimentConfig, records: &[TrialRecord], dir: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let summary = aggregate(records)?;
    write_records_csv(records, fs::File::create(dir.join("records.csv"))?)?;
    write_summary_csv(&summary, fs::File::create(dir.join("summary.csv"))?)?;
    write_timings_csv(records, fs::File::create(dir.join("timings.csv"))?)?;
    let meta = ExperimentMeta {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: cfg.master_seed,
        records: records.len(),
        note: "m may exceed n: one-bit measurements carry one bit each".into(),
    };
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(summary)
}
