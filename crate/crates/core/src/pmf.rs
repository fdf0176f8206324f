//! Discrete probability mass functions for flow sizes and inter-arrival times.
//!
//! Every distribution is described by a [`DistSpec`] (the parameter record a
//! third party needs to rebuild it) and materialised as a [`DiscretePmf`] on
//! a regular value grid by Monte-Carlo histogramming.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Pareto, SkewNormal, Weibull};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Number of variates drawn when histogramming a named family.
pub const DEFAULT_GRID_SAMPLES: usize = 300_000;
/// Smallest accepted `grid_samples` for [`build_named_pmf`].
pub const MIN_GRID_SAMPLES: usize = 10_000;
/// Probability mass per group when estimating the number of modes.
const MODE_GROUP_MASS: f64 = 1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Lognormal,
    Weibull,
    Pareto,
    Uniform,
    Exponential,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Lognormal,
        Family::Weibull,
        Family::Pareto,
        Family::Uniform,
        Family::Exponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Lognormal => "lognormal",
            Family::Weibull => "weibull",
            Family::Pareto => "pareto",
            Family::Uniform => "uniform",
            Family::Exponential => "exponential",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownFamily(s.into()))
    }
}

/// Parameter record (D') fully describing a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    Named(NamedSpec),
    Multimodal(MultimodalSpec),
    Explicit(ExplicitSpec),
}

/// A canonical continuous family, e.g. `lognormal {mu, sigma}`.
///
/// Parameter names: lognormal `mu`, `sigma`; weibull `alpha` (shape),
/// `lambda` (scale); pareto `alpha` (shape, scale is `min_val`);
/// exponential `rate`; uniform `low`, `high` (default to the bounds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSpec {
    pub family: Family,
    pub params: BTreeMap<String, f64>,
    pub min_val: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_val: Option<f64>,
    pub round_to: f64,
}

/// A mixture of skew-normal modes over a uniform background floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultimodalSpec {
    pub locations: Vec<f64>,
    pub skews: Vec<f64>,
    pub scales: Vec<f64>,
    pub num_skew_samples: Vec<u64>,
    #[serde(default)]
    pub bg_factor: f64,
    pub min_val: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_val: Option<f64>,
    pub round_to: f64,
}

/// A hand-authored value→probability table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSpec {
    #[serde(with = "value_map")]
    pub explicit_pmf: Vec<(f64, f64)>,
    pub min_val: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_val: Option<f64>,
    pub round_to: f64,
}

/// JSON object keyed by the value's decimal representation.
mod value_map {
    use super::*;
    use serde::de::Error as _;
    use serde::ser::SerializeMap;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(pairs: &[(f64, f64)], s: S) -> core::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(pairs.len()))?;
        for (v, p) in pairs {
            map.serialize_entry(&format!("{v}"), p)?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> core::result::Result<Vec<(f64, f64)>, D::Error> {
        let raw = BTreeMap::<String, f64>::deserialize(d)?;
        let mut pairs = raw
            .into_iter()
            .map(|(k, p)| {
                k.trim()
                    .parse::<f64>()
                    .map(|v| (v, p))
                    .map_err(|_| D::Error::custom(format!("non-numeric value key `{k}`")))
            })
            .collect::<core::result::Result<Vec<_>, _>>()?;
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(pairs)
    }
}

impl DistSpec {
    pub fn grid(&self) -> Grid {
        let (min_val, max_val, round_to) = match self {
            DistSpec::Named(s) => (s.min_val, s.max_val, s.round_to),
            DistSpec::Multimodal(s) => (s.min_val, s.max_val, s.round_to),
            DistSpec::Explicit(s) => (s.min_val, s.max_val, s.round_to),
        };
        Grid {
            min_val,
            max_val,
            round_to,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid().validate()?;
        match self {
            DistSpec::Named(s) => NamedDist::from_spec(s).map(|_| ()),
            DistSpec::Multimodal(s) => s.validate(),
            DistSpec::Explicit(s) => {
                if s.explicit_pmf.is_empty() {
                    return Err(Error::InvalidSpec("explicit_pmf is empty".into()));
                }
                if s.explicit_pmf.iter().any(|&(v, p)| !v.is_finite() || !p.is_finite() || p < 0.0) {
                    return Err(Error::InvalidSpec(
                        "explicit_pmf entries must be finite with non-negative probability".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Clip-and-round rule shared by every distribution kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min_val: f64,
    pub max_val: Option<f64>,
    pub round_to: f64,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if !(self.round_to > 0.0 && self.round_to.is_finite()) {
            return Err(Error::InvalidSpec(format!("round_to must be positive, got {}", self.round_to)));
        }
        if !self.min_val.is_finite() {
            return Err(Error::InvalidSpec("min_val must be finite".into()));
        }
        if let Some(max) = self.max_val {
            if !max.is_finite() || max <= self.min_val {
                return Err(Error::InvalidSpec(format!(
                    "max_val ({max}) must be greater than min_val ({})",
                    self.min_val
                )));
            }
        }
        let (lo, hi) = (self.lowest_index(), self.highest_index());
        if hi.is_some_and(|hi| hi < lo) {
            return Err(Error::EmptySupport {
                min: self.min_val,
                max: self.max_val.unwrap_or(f64::INFINITY),
            });
        }
        Ok(())
    }

    /// Index of the smallest grid point ≥ `min_val`.
    pub fn lowest_index(&self) -> i64 {
        libm::ceil(self.min_val / self.round_to) as i64
    }

    /// Index of the largest grid point ≤ `max_val`.
    pub fn highest_index(&self) -> Option<i64> {
        self.max_val.map(|m| libm::floor(m / self.round_to) as i64)
    }

    /// Grid index of `v`: clip to the bounds, round to the nearest multiple
    /// (ties upward), then clamp back onto the in-bounds grid.
    pub fn snap_index(&self, v: f64) -> i64 {
        let mut x = v.max(self.min_val);
        if let Some(max) = self.max_val {
            x = x.min(max);
        }
        let k = libm::floor(x / self.round_to + 0.5) as i64;
        let k = k.max(self.lowest_index());
        match self.highest_index() {
            Some(hi) => k.min(hi),
            None => k,
        }
    }

    pub fn value_at(&self, index: i64) -> f64 {
        index as f64 * self.round_to
    }

    pub fn snap(&self, v: f64) -> f64 {
        self.value_at(self.snap_index(v))
    }
}

/// Finite distribution over sorted, distinct values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf", into = "RawPmf")]
pub struct DiscretePmf {
    support: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPmf {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<RawPmf> for DiscretePmf {
    type Error = Error;
    fn try_from(raw: RawPmf) -> Result<Self> {
        DiscretePmf::new(raw.support, raw.probs)
    }
}

impl From<DiscretePmf> for RawPmf {
    fn from(p: DiscretePmf) -> Self {
        RawPmf {
            support: p.support,
            probs: p.probs,
        }
    }
}

impl DiscretePmf {
    /// Validating constructor; probabilities must already sum to one.
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptyPmf);
        }
        if support.len() != probs.len() {
            return Err(Error::InvalidSpec(format!(
                "support has {} values but probs has {}",
                support.len(),
                probs.len()
            )));
        }
        if support.iter().any(|v| !v.is_finite()) || support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec("support must be finite and strictly increasing".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidSpec("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!("probabilities sum to {total}, not 1")));
        }
        Ok(DiscretePmf { support, probs })
    }

    /// Builds a PMF from unnormalised `(value, weight)` pairs, merging
    /// duplicate values.
    pub fn from_weights<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = pairs.into_iter().collect();
        if pairs.iter().any(|(v, w)| !v.is_finite() || !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidSpec("weights must be finite and non-negative".into()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (v, w) in pairs {
            if support.last() == Some(&v) {
                *weights.last_mut().expect("aligned") += w;
            } else {
                support.push(v);
                weights.push(w);
            }
        }
        let total: f64 = weights.iter().sum();
        if support.is_empty() || total <= 0.0 {
            return Err(Error::EmptyPmf);
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Ok(DiscretePmf { support, probs })
    }

    /// Empirical distribution of a sample.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut support = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for v in sorted {
            if !v.is_finite() {
                return Err(Error::InvalidSpec("non-finite sample".into()));
            }
            if support.last() == Some(&v) {
                *counts.last_mut().expect("aligned") += 1;
            } else {
                support.push(v);
                counts.push(1);
            }
        }
        if support.is_empty() {
            return Err(Error::EmptyPmf);
        }
        let probs = counts.into_iter().map(|c| c as f64 / n).collect();
        Ok(DiscretePmf { support, probs })
    }

    /// Single-point distribution.
    pub fn point(value: f64) -> Self {
        DiscretePmf {
            support: alloc::vec![value],
            probs: alloc::vec![1.0],
        }
    }

    /// Rebuilds a PMF from grid-indexed counts.
    fn from_index_counts(grid: &Grid, counts: &BTreeMap<i64, f64>) -> Result<Self> {
        let total: f64 = counts.values().sum();
        if counts.is_empty() || total <= 0.0 {
            return Err(Error::EmptyPmf);
        }
        let support = counts.keys().map(|&k| grid.value_at(k)).collect();
        let probs = counts.values().map(|&c| c / total).collect();
        Ok(DiscretePmf { support, probs })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    /// Probability of exactly `value` (0 when off-support).
    pub fn prob_of(&self, value: f64) -> f64 {
        self.support
            .binary_search_by(|v| v.total_cmp(&value))
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(v, p)| v * p).sum()
    }

    /// Cumulative probabilities aligned with the support; the last entry is
    /// pinned to exactly 1.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = self
            .probs
            .iter()
            .map(|p| {
                acc += p;
                acc.min(1.0)
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        cdf
    }

    pub fn sampler(&self) -> InverseCdf<'_> {
        InverseCdf {
            pmf: self,
            cdf: self.cdf(),
        }
    }

    pub fn stats(&self) -> PmfStats {
        pmf_stats(self)
    }
}

/// Inverse-CDF sampler over a [`DiscretePmf`].
#[derive(Debug, Clone)]
pub struct InverseCdf<'a> {
    pmf: &'a DiscretePmf,
    cdf: Vec<f64>,
}

impl InverseCdf<'_> {
    /// Draws a support index; zero-probability entries are never returned.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.pmf.support[self.sample_index(rng)]
    }
}

/// Summary statistics of a discrete distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmfStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Excess kurtosis (0 for a normal distribution).
    pub kurtosis: f64,
    pub mode_count: usize,
}

/// Exact moments of `pmf` plus an estimate of its number of modes.
pub fn pmf_stats(pmf: &DiscretePmf) -> PmfStats {
    let positive = || pmf.iter().filter(|&(_, p)| p > 0.0);
    let min = positive().map(|(v, _)| v).fold(f64::INFINITY, f64::min);
    let max = positive().map(|(v, _)| v).fold(f64::NEG_INFINITY, f64::max);
    let mean = pmf.mean();
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for (v, p) in pmf.iter() {
        let d = v - mean;
        let d2 = d * d;
        m2 += p * d2;
        m3 += p * d2 * d;
        m4 += p * d2 * d2;
    }
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / libm::pow(m2, 1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    PmfStats {
        min,
        max,
        mean,
        variance: m2,
        skewness,
        kurtosis,
        mode_count: mode_count(pmf),
    }
}

/// Counts modes as strict local maxima of a 3-group moving average of the
/// density, where groups are consecutive support runs holding
/// [`MODE_GROUP_MASS`] of probability each.
fn mode_count(pmf: &DiscretePmf) -> usize {
    let points: Vec<(f64, f64)> = pmf.iter().filter(|&(_, p)| p > 0.0).collect();
    if points.len() <= 1 {
        return points.len();
    }
    let step = points
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .fold(f64::INFINITY, f64::min);

    let mut density = Vec::new();
    let (mut mass, mut first) = (0.0, points[0].0);
    for (i, &(v, p)) in points.iter().enumerate() {
        if mass == 0.0 {
            first = v;
        }
        mass += p;
        if mass >= MODE_GROUP_MASS - 1e-12 || i + 1 == points.len() {
            density.push(mass / (v - first + step));
            mass = 0.0;
        }
    }

    let at = |i: isize| -> f64 {
        if i < 0 || i as usize >= density.len() {
            0.0
        } else {
            density[i as usize]
        }
    };
    let smooth: Vec<f64> = (0..density.len() as isize)
        .map(|i| (at(i - 1) + at(i) + at(i + 1)) / 3.0)
        .collect();

    // strict maxima; a flat top counts once
    let mut count = 0;
    let mut i = 0;
    while i < smooth.len() {
        let mut j = i;
        while j + 1 < smooth.len() && smooth[j + 1] == smooth[i] {
            j += 1;
        }
        let left = if i == 0 { f64::NEG_INFINITY } else { smooth[i - 1] };
        let right = if j + 1 == smooth.len() { f64::NEG_INFINITY } else { smooth[j + 1] };
        if smooth[i] > left && smooth[i] > right {
            count += 1;
        }
        i = j + 1;
    }
    count
}

/// A named family with validated parameters.
#[derive(Debug, Clone, Copy)]
enum NamedDist {
    Lognormal(LogNormal<f64>),
    Weibull(Weibull<f64>),
    Pareto(Pareto<f64>),
    Exponential(Exp<f64>),
    Uniform { low: f64, high: f64 },
}

impl NamedDist {
    fn from_spec(spec: &NamedSpec) -> Result<Self> {
        let param = |names: &[&str]| -> Result<f64> {
            names
                .iter()
                .find_map(|n| spec.params.get(*n).copied())
                .ok_or_else(|| {
                    Error::InvalidSpec(format!("{} requires parameter `{}`", spec.family, names[0]))
                })
        };
        let positive = |name: &str, v: f64| -> Result<f64> {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidSpec(format!("{} parameter `{name}` must be positive, got {v}", spec.family)))
            }
        };
        let family = spec.family;
        fn bad<E: core::fmt::Debug>(family: Family) -> impl Fn(E) -> Error {
            move |e| Error::InvalidSpec(format!("{family}: {e:?}"))
        }
        Ok(match spec.family {
            Family::Lognormal => {
                let mu = param(&["mu", "μ"])?;
                if !mu.is_finite() {
                    return Err(Error::InvalidSpec("lognormal `mu` must be finite".into()));
                }
                let sigma = positive("sigma", param(&["sigma", "σ"])?)?;
                NamedDist::Lognormal(LogNormal::new(mu, sigma).map_err(bad(family))?)
            }
            Family::Weibull => {
                let alpha = positive("alpha", param(&["alpha", "_alpha", "shape"])?)?;
                let lambda = positive("lambda", param(&["lambda", "_lambda", "scale"])?)?;
                NamedDist::Weibull(Weibull::new(lambda, alpha).map_err(bad(family))?)
            }
            Family::Pareto => {
                let alpha = positive("alpha", param(&["alpha", "_alpha", "shape"])?)?;
                let scale = positive("min_val", spec.min_val)?;
                NamedDist::Pareto(Pareto::new(scale, alpha).map_err(bad(family))?)
            }
            Family::Exponential => {
                let rate = positive("rate", param(&["rate", "lambda", "_lambda"])?)?;
                NamedDist::Exponential(Exp::new(rate).map_err(bad(family))?)
            }
            Family::Uniform => {
                let low = spec.params.get("low").copied().unwrap_or(spec.min_val);
                let high = spec
                    .params
                    .get("high")
                    .copied()
                    .or(spec.max_val)
                    .ok_or_else(|| Error::InvalidSpec("uniform requires `high` or max_val".into()))?;
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return Err(Error::InvalidSpec(format!("uniform needs low ≤ high, got [{low}, {high}]")));
                }
                NamedDist::Uniform { low, high }
            }
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NamedDist::Lognormal(d) => d.sample(rng),
            NamedDist::Weibull(d) => d.sample(rng),
            NamedDist::Pareto(d) => d.sample(rng),
            NamedDist::Exponential(d) => d.sample(rng),
            NamedDist::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }
}

/// Histograms `grid_samples` draws of a named family onto its grid.
pub fn build_named_pmf(spec: &NamedSpec, grid_samples: usize, seed: u64) -> Result<DiscretePmf> {
    if grid_samples < MIN_GRID_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "grid_samples must be at least {MIN_GRID_SAMPLES}, got {grid_samples}"
        )));
    }
    let grid = Grid {
        min_val: spec.min_val,
        max_val: spec.max_val,
        round_to: spec.round_to,
    };
    grid.validate()?;
    let dist = NamedDist::from_spec(spec)?;
    let mut rng = rng_from_seed(seed);
    let mut indices: Vec<i64> = (0..grid_samples)
        .map(|_| grid.snap_index(dist.sample(&mut rng)))
        .collect();
    indices.sort_unstable();
    let mut counts = BTreeMap::new();
    for k in indices {
        *counts.entry(k).or_insert(0.0) += 1.0;
    }
    DiscretePmf::from_index_counts(&grid, &counts)
}

impl MultimodalSpec {
    fn validate(&self) -> Result<()> {
        let n = self.locations.len();
        if n == 0 {
            return Err(Error::InvalidSpec("multimodal spec needs at least one mode".into()));
        }
        if self.skews.len() != n || self.scales.len() != n || self.num_skew_samples.len() != n {
            return Err(Error::InvalidSpec(format!(
                "mode sequences differ in length: locations {}, skews {}, scales {}, num_skew_samples {}",
                n,
                self.skews.len(),
                self.scales.len(),
                self.num_skew_samples.len()
            )));
        }
        if self.locations.iter().chain(&self.skews).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("mode locations and skews must be finite".into()));
        }
        if let Some(s) = self.scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidSpec(format!("mode scales must be positive, got {s}")));
        }
        if !(self.bg_factor >= 0.0 && self.bg_factor.is_finite()) {
            return Err(Error::InvalidSpec(format!("bg_factor must be ≥ 0, got {}", self.bg_factor)));
        }
        if self.bg_factor > 0.0 && self.max_val.is_none() {
            return Err(Error::InvalidSpec("a background floor needs max_val".into()));
        }
        Ok(())
    }
}

/// Pools skew-normal draws from every mode, snaps them to the grid and
/// mixes in `bg_factor / (1 + bg_factor)` of uniform background mass.
pub fn build_multimodal_pmf(spec: &MultimodalSpec, seed: u64) -> Result<DiscretePmf> {
    let grid = Grid {
        min_val: spec.min_val,
        max_val: spec.max_val,
        round_to: spec.round_to,
    };
    grid.validate()?;
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut indices = Vec::new();
    for i in 0..spec.locations.len() {
        let mode = SkewNormal::new(spec.locations[i], spec.scales[i], spec.skews[i])
            .map_err(|e| Error::InvalidSpec(format!("mode {i}: {e:?}")))?;
        indices.extend((0..spec.num_skew_samples[i]).map(|_| grid.snap_index(mode.sample(&mut rng))));
    }
    indices.sort_unstable();

    let mode_total = indices.len() as f64;
    let mut counts: BTreeMap<i64, f64> = BTreeMap::new();
    if mode_total > 0.0 {
        let weight = 1.0 / ((1.0 + spec.bg_factor) * mode_total);
        for k in indices {
            *counts.entry(k).or_insert(0.0) += weight;
        }
    }
    if spec.bg_factor > 0.0 {
        let lo = grid.lowest_index();
        let hi = grid.highest_index().expect("validated: background needs max_val");
        let bg_mass = if mode_total > 0.0 {
            spec.bg_factor / (1.0 + spec.bg_factor)
        } else {
            1.0
        };
        let per_point = bg_mass / (hi - lo + 1) as f64;
        for k in lo..=hi {
            *counts.entry(k).or_insert(0.0) += per_point;
        }
    }
    DiscretePmf::from_index_counts(&grid, &counts)
}

/// Snaps a hand-authored table onto its grid, merging collisions.
pub fn build_explicit_pmf(spec: &ExplicitSpec) -> Result<DiscretePmf> {
    let grid = Grid {
        min_val: spec.min_val,
        max_val: spec.max_val,
        round_to: spec.round_to,
    };
    DistSpec::Explicit(spec.clone()).validate()?;
    let mut counts = BTreeMap::new();
    for &(v, p) in &spec.explicit_pmf {
        *counts.entry(grid.snap_index(v)).or_insert(0.0) += p;
    }
    DiscretePmf::from_index_counts(&grid, &counts)
}

/// Materialises any [`DistSpec`]; `grid_samples` only affects named families.
pub fn build_pmf(spec: &DistSpec, grid_samples: usize, seed: u64) -> Result<DiscretePmf> {
    match spec {
        DistSpec::Named(s) => build_named_pmf(s, grid_samples, seed),
        DistSpec::Multimodal(s) => build_multimodal_pmf(s, seed),
        DistSpec::Explicit(s) => build_explicit_pmf(s),
    }
}

/// `n` i.i.d. inverse-CDF draws from `pmf`.
pub fn sample_pmf(pmf: &DiscretePmf, n: usize, seed: u64) -> Result<Vec<f64>> {
    if pmf.is_empty() {
        return Err(Error::EmptyPmf);
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let sampler = pmf.sampler();
    let mut rng = rng_from_seed(seed);
    Ok((0..n).map(|_| sampler.sample(&mut rng)).collect())
}
