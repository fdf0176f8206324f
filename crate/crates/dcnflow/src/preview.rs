//! Histogram/CDF previews of a distribution spec, as served to the shaping UI.

use serde::{Deserialize, Serialize};

use dcnflow_core::pmf::{build_pmf, pmf_stats, sample_pmf, DistSpec, PmfStats, MIN_GRID_SAMPLES};
use dcnflow_core::seed::{derive_seed, stream};
use dcnflow_core::{Error, Result};

pub const MIN_SAMPLE_COUNT: usize = 1000;
pub const MIN_BINS: usize = 10;
/// Keeps a single request from tying up a worker for long.
pub const MAX_SAMPLE_COUNT: usize = 5_000_000;
pub const MAX_BINS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreviewRequest {
    pub dist_spec: DistSpec,
    pub sample_count: usize,
    pub bins: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cdf {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreviewResponse {
    pub histogram: Histogram,
    pub cdf: Cdf,
    pub stats: PmfStats,
}

impl PreviewRequest {
    pub fn validate(&self) -> Result<()> {
        if !(MIN_SAMPLE_COUNT..=MAX_SAMPLE_COUNT).contains(&self.sample_count) {
            return Err(Error::InvalidArgument(format!(
                "sample_count must be in [{MIN_SAMPLE_COUNT}, {MAX_SAMPLE_COUNT}], got {}",
                self.sample_count
            )));
        }
        if !(MIN_BINS..=MAX_BINS).contains(&self.bins) {
            return Err(Error::InvalidArgument(format!(
                "bins must be in [{MIN_BINS}, {MAX_BINS}], got {}",
                self.bins
            )));
        }
        self.dist_spec.validate()
    }
}

/// Builds the PMF, draws `sample_count` values and bins them over their
/// range. The CDF and stats are exact properties of the PMF.
pub fn preview(req: &PreviewRequest) -> Result<PreviewResponse> {
    req.validate()?;
    let grid_samples = req.sample_count.max(MIN_GRID_SAMPLES);
    let pmf = build_pmf(&req.dist_spec, grid_samples, derive_seed(req.seed, &[stream::SIZE_PMF]))?;
    let samples = sample_pmf(&pmf, req.sample_count, derive_seed(req.seed, &[stream::SIZE_SAMPLES]))?;

    let cdf = Cdf {
        values: pmf.support().to_vec(),
        probs: pmf.cdf(),
    };
    Ok(PreviewResponse {
        histogram: histogram(&samples, req.bins),
        cdf,
        stats: pmf_stats(&pmf),
    })
}

/// Equal-width bins over `[min, max]`; the last bin is closed. A constant
/// sample is centred in a unit-wide range.
pub fn histogram(samples: &[f64], bins: usize) -> Histogram {
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if samples.is_empty() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0u64; bins];
    for &v in samples {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Histogram { edges, counts }
}
