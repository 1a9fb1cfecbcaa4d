//! Measurement ensembles, sign labels and the label-flip channel.

use std::io::{Read, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{Rng, Seed};
use crate::sparse::{dot, sign_unchecked, BipolarLabel, SparseVector};

/// The law a measurement row `a` is drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    /// Entries i.i.d. `N(0, 1)`.
    GaussianIid,
    /// Entries i.i.d. uniform on `{-1, +1}`.
    RademacherAtomic,
    /// Uniform on the unit sphere (a normalized Gaussian).
    RadiallyInvariantGaussian,
    /// Rows drawn from a finite set of support points.
    CustomAtomic { points: Vec<Vec<f64>>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingDistribution {
    #[serde(flatten)]
    pub kind: DistributionKind,
    /// Standard deviation of the offsets `b_i`; zero means no offsets.
    #[serde(default)]
    pub offset_scale: f64,
}

impl SamplingDistribution {
    pub fn gaussian() -> Self {
        SamplingDistribution { kind: DistributionKind::GaussianIid, offset_scale: 0.0 }
    }

    pub fn rademacher() -> Self {
        SamplingDistribution { kind: DistributionKind::RademacherAtomic, offset_scale: 0.0 }
    }

    pub fn sphere() -> Self {
        SamplingDistribution { kind: DistributionKind::RadiallyInvariantGaussian, offset_scale: 0.0 }
    }

    pub fn custom(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let d = SamplingDistribution {
            kind: DistributionKind::CustomAtomic { points, weights },
            offset_scale: 0.0,
        };
        d.validate(None)?;
        Ok(d)
    }

    pub fn with_offsets(mut self, tau: f64) -> Self {
        self.offset_scale = tau;
        self
    }

    /// Checks the distribution parameters, and the point width when `n` is given.
    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        if !(self.offset_scale >= 0.0 && self.offset_scale.is_finite()) {
            return Err(invalid(format!("offset scale must be nonnegative, got {}", self.offset_scale)));
        }
        if let DistributionKind::CustomAtomic { points, weights } = &self.kind {
            if points.is_empty() {
                return Err(invalid("custom atomic distribution has no support points"));
            }
            if weights.len() != points.len() {
                return Err(invalid(format!(
                    "{} weights for {} support points",
                    weights.len(),
                    points.len()
                )));
            }
            if weights.iter().any(|w| !(*w >= 0.0)) {
                return Err(invalid("custom atomic weights must be nonnegative"));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("custom atomic weights sum to {total}, not 1")));
            }
            let width = points[0].len();
            if points.iter().any(|p| p.len() != width || p.iter().any(|v| !v.is_finite())) {
                return Err(invalid("custom atomic points must be finite and of equal width"));
            }
            if let Some(n) = n {
                if width != n {
                    return Err(invalid(format!("support points have width {width}, expected {n}")));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn sampler(&self, n: usize) -> Result<RowSampler<'_>> {
        if n == 0 {
            return Err(invalid("dimension must be positive"));
        }
        self.validate(Some(n))?;
        let weights = match &self.kind {
            DistributionKind::CustomAtomic { weights, .. } => Some(
                WeightedIndex::new(weights)
                    .map_err(|e| invalid(format!("custom atomic weights: {e}")))?,
            ),
            _ => None,
        };
        Ok(RowSampler { dist: self, n, weights })
    }
}

/// Draws single rows from a validated distribution.
pub(crate) struct RowSampler<'a> {
    dist: &'a SamplingDistribution,
    n: usize,
    weights: Option<WeightedIndex<f64>>,
}

impl RowSampler<'_> {
    pub(crate) fn fill(&self, rng: &mut Rng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n);
        match &self.dist.kind {
            DistributionKind::GaussianIid => {
                for v in out.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            }
            DistributionKind::RademacherAtomic => {
                for v in out.iter_mut() {
                    *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
            }
            DistributionKind::RadiallyInvariantGaussian => loop {
                for v in out.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let norm = dot(out, out).sqrt();
                if norm > 0.0 {
                    out.iter_mut().for_each(|v| *v /= norm);
                    break;
                }
            },
            DistributionKind::CustomAtomic { points, .. } => {
                let idx = self.weights.as_ref().expect("weights prepared").sample(rng);
                out.copy_from_slice(&points[idx]);
            }
        }
    }
}

/// Rows (and optional offsets) drawn by [`sample_rows`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledRows {
    pub rows: Vec<Vec<f64>>,
    pub offsets: Option<Vec<f64>>,
}

/// Draws `m` rows of width `n`. Offsets come from an independent substream,
/// so the rows do not depend on `offset_scale`.
pub fn sample_rows(dist: &SamplingDistribution, m: usize, n: usize, seed: Seed) -> Result<SampledRows> {
    if m == 0 {
        return Err(invalid("measurement count must be positive"));
    }
    let sampler = dist.sampler(n)?;
    let mut rng = seed.child(0).rng();
    let rows = (0..m)
        .map(|_| {
            let mut row = vec![0.0; n];
            sampler.fill(&mut rng, &mut row);
            row
        })
        .collect();
    let offsets = if dist.offset_scale > 0.0 {
        let normal = Normal::new(0.0, dist.offset_scale).map_err(|e| invalid(e.to_string()))?;
        let mut rng = seed.child(1).rng();
        Some((0..m).map(|_| normal.sample(&mut rng)).collect())
    } else {
        None
    };
    Ok(SampledRows { rows, offsets })
}

/// Sign labels `sign(⟨a_i, x⟩ [+ b_i])`.
pub fn measure(x: &SparseVector, rows: &[Vec<f64>], offsets: Option<&[f64]>) -> Result<Vec<BipolarLabel>> {
    if let Some(b) = offsets {
        if b.len() != rows.len() {
            return Err(invalid(format!("{} offsets for {} rows", b.len(), rows.len())));
        }
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != x.ambient_dim() {
                return Err(invalid(format!(
                    "row {i} has width {}, vector has dimension {}",
                    row.len(),
                    x.ambient_dim()
                )));
            }
            let t = x.dot(row) + offsets.map_or(0.0, |b| b[i]);
            if !t.is_finite() {
                return Err(invalid(format!("non-finite measurement at row {i}")));
            }
            Ok(sign_unchecked(t))
        })
        .collect()
}

/// Binary symmetric channel on bipolar labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NoiseChannel {
    flip_probability: f64,
}

impl NoiseChannel {
    pub fn new(flip_probability: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&flip_probability) {
            return Err(invalid(format!(
                "flip probability must lie in [0, 0.5), got {flip_probability}"
            )));
        }
        Ok(NoiseChannel { flip_probability })
    }

    pub fn noiseless() -> Self {
        NoiseChannel { flip_probability: 0.0 }
    }

    pub fn flip_probability(&self) -> f64 {
        self.flip_probability
    }

    /// One flip decision; consumes exactly one uniform draw.
    #[inline]
    pub(crate) fn flips(&self, rng: &mut Rng) -> bool {
        rng.random::<f64>() < self.flip_probability
    }
}

impl TryFrom<f64> for NoiseChannel {
    type Error = crate::Error;

    fn try_from(v: f64) -> Result<Self> {
        NoiseChannel::new(v)
    }
}

impl From<NoiseChannel> for f64 {
    fn from(c: NoiseChannel) -> f64 {
        c.flip_probability
    }
}

/// Negates each label independently with the channel's flip probability.
pub fn apply_channel(labels: &[BipolarLabel], channel: NoiseChannel, seed: Seed) -> Vec<BipolarLabel> {
    let mut rng = seed.rng();
    labels
        .iter()
        .map(|&y| if channel.flips(&mut rng) { -y } else { y })
        .collect()
}

/// Labelled measurements `(a_i, [b_i,] y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    rows: Vec<Vec<f64>>,
    offsets: Option<Vec<f64>>,
    labels: Vec<BipolarLabel>,
}

impl MeasurementSet {
    pub fn new(rows: Vec<Vec<f64>>, offsets: Option<Vec<f64>>, labels: Vec<BipolarLabel>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(invalid(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        if let Some(b) = &offsets {
            if b.len() != rows.len() {
                return Err(invalid(format!("{} offsets for {} rows", b.len(), rows.len())));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(invalid("offsets must be finite"));
            }
        }
        if let Some(first) = rows.first() {
            let n = first.len();
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(invalid(format!("row {i} has width {}, expected {n}", row.len())));
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(invalid(format!("row {i} is not finite")));
                }
            }
        }
        Ok(MeasurementSet { rows, offsets, labels })
    }

    /// Samples rows for truth `x` and labels them, optionally through a channel.
    pub fn generate(
        x: &SparseVector,
        dist: &SamplingDistribution,
        m: usize,
        seed: Seed,
        channel: NoiseChannel,
    ) -> Result<Self> {
        let SampledRows { rows, offsets } = sample_rows(dist, m, x.ambient_dim(), seed)?;
        let clean = measure(x, &rows, offsets.as_deref())?;
        let labels = apply_channel(&clean, channel, seed.child(2));
        MeasurementSet::new(rows, offsets, labels)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn offsets(&self) -> Option<&[f64]> {
        self.offsets.as_deref()
    }

    pub fn labels(&self) -> &[BipolarLabel] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Row width `n` (zero for an empty set).
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn without_offsets(&self) -> MeasurementSet {
        MeasurementSet { offsets: None, ..self.clone() }
    }

    pub fn with_labels(&self, labels: Vec<BipolarLabel>) -> Result<MeasurementSet> {
        MeasurementSet::new(self.rows.clone(), self.offsets.clone(), labels)
    }

    /// Writes `a_1..a_n[,b],y` with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let n = self.dim();
        let mut header: Vec<String> = (1..=n).map(|j| format!("a_{j}")).collect();
        if self.offsets.is_some() {
            header.push("b".into());
        }
        header.push("y".into());
        w.write_record(&header)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
            if let Some(b) = &self.offsets {
                rec.push(format_float(b[i]));
            }
            rec.push(self.labels[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let cols: Vec<&str> = header.iter().map(str::trim).collect();
        if cols.last() != Some(&"y") {
            return Err(invalid("measurement CSV must end with a `y` column"));
        }
        let has_offsets = cols.len() >= 2 && cols[cols.len() - 2] == "b";
        let n = cols.len() - 1 - usize::from(has_offsets);
        for (j, name) in cols[..n].iter().enumerate() {
            if *name != format!("a_{}", j + 1) {
                return Err(invalid(format!("unexpected column `{name}`, expected `a_{}`", j + 1)));
            }
        }
        let mut rows = Vec::new();
        let mut offsets = Vec::new();
        let mut labels = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| invalid(format!("record {}: `{s}`: {e}", line + 1)))
            };
            let row = (0..n).map(|j| parse(&rec[j])).collect::<Result<Vec<_>>>()?;
            rows.push(row);
            if has_offsets {
                offsets.push(parse(&rec[n])?);
            }
            let y = parse(&rec[cols.len() - 1])?;
            labels.push(BipolarLabel::from_value(y as i64).and_then(|l| {
                if y == f64::from(l.value()) {
                    Ok(l)
                } else {
                    Err(invalid(format!("label {y} is not ±1")))
                }
            })?);
        }
        MeasurementSet::new(rows, has_offsets.then_some(offsets), labels)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        MeasurementSet::read_csv(std::fs::File::open(path)?)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// JSON description of a measurement run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    pub distribution: SamplingDistribution,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub flip_probability: f64,
}

impl MeasurementConfig {
    pub fn generate(&self, x: &SparseVector) -> Result<MeasurementSet> {
        if x.ambient_dim() != self.n {
            return Err(invalid(format!(
                "truth has dimension {}, config says n = {}",
                x.ambient_dim(),
                self.n
            )));
        }
        MeasurementSet::generate(
            x,
            &self.distribution,
            self.m,
            Seed(self.seed),
            NoiseChannel::new(self.flip_probability)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[i64]) -> Vec<BipolarLabel> {
        v.iter().map(|&y| BipolarLabel::from_value(y).unwrap()).collect()
    }

    #[test]
    fn rademacher_rows_are_bipolar() {
        let s = sample_rows(&SamplingDistribution::rademacher(), 4, 2, Seed(11)).unwrap();
        assert_eq!(s.rows.len(), 4);
        assert!(s.rows.iter().flatten().all(|v| *v == 1.0 || *v == -1.0));
        assert!(s.offsets.is_none());
    }

    #[test]
    fn gaussian_column_means_are_near_zero() {
        let s = sample_rows(&SamplingDistribution::gaussian(), 1000, 10, Seed(3)).unwrap();
        for j in 0..10 {
            let mean: f64 = s.rows.iter().map(|r| r[j]).sum::<f64>() / 1000.0;
            assert!(mean.abs() < 0.1, "column {j} mean {mean}");
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let d = SamplingDistribution::gaussian().with_offsets(1.0);
        let a = sample_rows(&d, 20, 5, Seed(9)).unwrap();
        assert_eq!(a, sample_rows(&d, 20, 5, Seed(9)).unwrap());
        assert_ne!(a, sample_rows(&d, 20, 5, Seed(10)).unwrap());
        // rows are independent of the offset scale
        let plain = sample_rows(&SamplingDistribution::gaussian(), 20, 5, Seed(9)).unwrap();
        assert_eq!(a.rows, plain.rows);
        assert_eq!(a.offsets.unwrap().len(), 20);
    }

    #[test]
    fn sphere_rows_are_unit() {
        let s = sample_rows(&SamplingDistribution::sphere(), 50, 4, Seed(1)).unwrap();
        for r in &s.rows {
            assert!((dot(r, r) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn custom_atomic_validation() {
        assert!(SamplingDistribution::custom(vec![], vec![]).is_err());
        assert!(SamplingDistribution::custom(vec![vec![1.0]], vec![0.5]).is_err());
        assert!(SamplingDistribution::custom(vec![vec![1.0], vec![2.0]], vec![0.5, -0.5]).is_err());
        let d = SamplingDistribution::custom(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.25, 0.75]).unwrap();
        let s = sample_rows(&d, 100, 2, Seed(5)).unwrap();
        assert!(s.rows.iter().all(|r| r == &[1.0, 0.0] || r == &[0.0, 1.0]));
        assert!(sample_rows(&d, 1, 3, Seed(5)).is_err());
    }

    #[test]
    fn measure_examples() {
        let x = SparseVector::new(vec![1.0, 0.0]);
        let rows = vec![vec![2.0, 5.0], vec![-1.0, 3.0]];
        assert_eq!(measure(&x, &rows, None).unwrap(), labels(&[1, -1]));
        assert_eq!(measure(&x, &[vec![0.0, 9.0]], None).unwrap(), labels(&[1]));
        let x = SparseVector::new(vec![1.0, 1.0]);
        assert_eq!(measure(&x, &[vec![1.0, 0.0]], Some(&[-2.0])).unwrap(), labels(&[-1]));
        assert!(measure(&x, &[vec![1.0]], None).is_err());
    }

    #[test]
    fn channel_examples() {
        let clean = vec![BipolarLabel::Positive; 100_000];
        assert_eq!(apply_channel(&clean, NoiseChannel::noiseless(), Seed(1)), clean);
        let ch = NoiseChannel::new(0.2).unwrap();
        let noisy = apply_channel(&clean, ch, Seed(1));
        let frac = noisy.iter().filter(|y| !y.is_positive()).count() as f64 / 1e5;
        assert!((frac - 0.2).abs() < 0.01, "{frac}");
        assert_eq!(noisy, apply_channel(&clean, ch, Seed(1)));
        assert!(NoiseChannel::new(0.5).is_err());
        assert!(NoiseChannel::new(-0.1).is_err());
    }

    #[test]
    fn flips_do_not_depend_on_label_values() {
        let ch = NoiseChannel::new(0.3).unwrap();
        let pos = vec![BipolarLabel::Positive; 1000];
        let neg = vec![BipolarLabel::Negative; 1000];
        let a = apply_channel(&pos, ch, Seed(4));
        let b = apply_channel(&neg, ch, Seed(4));
        assert!(a.iter().zip(&b).all(|(p, q)| *p == -*q));
    }

    #[test]
    fn composed_channels_flip_at_combined_rate() {
        let (a1, a2) = (0.1, 0.25);
        let clean = vec![BipolarLabel::Positive; 200_000];
        let once = apply_channel(&clean, NoiseChannel::new(a1).unwrap(), Seed(1));
        let twice = apply_channel(&once, NoiseChannel::new(a2).unwrap(), Seed(2));
        let rate = twice.iter().filter(|y| !y.is_positive()).count() as f64 / 2e5;
        let expected = a1 * (1.0 - a2) + a2 * (1.0 - a1);
        let sigma = (expected * (1.0 - expected) / 2e5).sqrt();
        assert!((rate - expected).abs() < 4.0 * sigma, "{rate} vs {expected}");
    }

    #[test]
    fn linear_labels_are_scale_invariant() {
        let x = SparseVector::new(vec![0.3, -1.2, 0.0, 2.0]);
        let s = sample_rows(&SamplingDistribution::gaussian(), 200, 4, Seed(8)).unwrap();
        let base = measure(&x, &s.rows, None).unwrap();
        for c in [1e-3, 0.5, 7.0, 1e4] {
            assert_eq!(measure(&x.scaled(c), &s.rows, None).unwrap(), base);
        }
    }

    #[test]
    fn atomic_measure_cannot_tell_apart_two_directions() {
        let x1 = SparseVector::new(vec![1.0, 0.0]);
        let x2 = SparseVector::new(vec![1.0, 0.5]);
        let s = sample_rows(&SamplingDistribution::rademacher(), 500, 2, Seed(2)).unwrap();
        assert_eq!(measure(&x1, &s.rows, None).unwrap(), measure(&x2, &s.rows, None).unwrap());
    }

    #[test]
    fn csv_round_trip() {
        let x = SparseVector::new(vec![0.5, -1.0, 0.0]);
        let d = SamplingDistribution::gaussian().with_offsets(1.0);
        let ms = MeasurementSet::generate(&x, &d, 7, Seed(1), NoiseChannel::noiseless()).unwrap();
        let mut buf = Vec::new();
        ms.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("a_1,a_2,a_3,b,y\n"));
        assert_eq!(MeasurementSet::read_csv(buf.as_slice()).unwrap(), ms);

        let lin = ms.without_offsets();
        let mut buf = Vec::new();
        lin.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("a_1,a_2,a_3,y\n"));
        assert_eq!(MeasurementSet::read_csv(buf.as_slice()).unwrap(), lin);
    }

    #[test]
    fn csv_rejects_bad_labels() {
        let text = "a_1,y\n1.0,0\n";
        assert!(MeasurementSet::read_csv(text.as_bytes()).is_err());
        let text = "x,y\n1.0,1\n";
        assert!(MeasurementSet::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn config_json() {
        let cfg: MeasurementConfig = serde_json::from_str(
            r#"{"distribution": {"kind": "gaussian_iid", "offset_scale": 1.0}, "m": 5, "n": 3, "seed": 4}"#,
        )
        .unwrap();
        assert_eq!(cfg.distribution.offset_scale, 1.0);
        let ms = cfg.generate(&SparseVector::new(vec![1.0, 0.0, 0.0])).unwrap();
        assert_eq!(ms.count(), 5);
        assert!(ms.offsets().is_some());
        let atomic: SamplingDistribution = serde_json::from_str(
            r#"{"kind": "custom_atomic", "points": [[1, 1], [-1, -1]], "weights": [0.5, 0.5]}"#,
        )
        .unwrap();
        assert!(atomic.validate(Some(2)).is_ok());
    }

    #[test]
    fn set_invariants() {
        assert!(MeasurementSet::new(vec![vec![1.0]], None, vec![]).is_err());
        assert!(MeasurementSet::new(vec![vec![1.0]], Some(vec![]), labels(&[1])).is_err());
        assert!(MeasurementSet::new(vec![vec![f64::NAN]], None, labels(&[1])).is_err());
        assert!(MeasurementSet::new(vec![vec![1.0], vec![1.0, 2.0]], None, labels(&[1, 1])).is_err());
    }
}
