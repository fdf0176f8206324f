//! Source-destination load-fraction matrices with hot-node and rack skew,
//! plus the endpoint skew-factor feasibility calculation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::EndpointId;
use crate::seed::rng_from_seed;

const IPF_MAX_ROUNDS: usize = 10_000;
const IPF_TOLERANCE: f64 = 1e-13;

/// Directed load fractions over ordered endpoint pairs (no self-loops).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNodeDist", into = "RawNodeDist")]
pub struct NodeDist {
    endpoints: Vec<EndpointId>,
    /// Row-major `n × n`, zero diagonal.
    matrix: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawNodeDist {
    endpoints: Vec<EndpointId>,
    matrix: Vec<Vec<f64>>,
}

impl TryFrom<RawNodeDist> for NodeDist {
    type Error = Error;
    fn try_from(raw: RawNodeDist) -> Result<Self> {
        NodeDist::from_rows(raw.endpoints, &raw.matrix)
    }
}

impl From<NodeDist> for RawNodeDist {
    fn from(nd: NodeDist) -> Self {
        let matrix = nd.rows().map(<[f64]>::to_vec).collect();
        RawNodeDist {
            endpoints: nd.endpoints,
            matrix,
        }
    }
}

impl NodeDist {
    /// Validates a dense matrix: non-negative, zero diagonal, unit mass.
    pub fn from_rows(endpoints: Vec<EndpointId>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = endpoints.len();
        check_endpoints(&endpoints)?;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidNodeDist(format!("matrix must be {n}×{n}")));
        }
        let matrix: Vec<f64> = rows.iter().flatten().copied().collect();
        if matrix.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidNodeDist("fractions must be finite and non-negative".into()));
        }
        if (0..n).any(|i| matrix[i * n + i] != 0.0) {
            return Err(Error::InvalidNodeDist("self-loop fractions must be zero".into()));
        }
        let total: f64 = matrix.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidNodeDist(format!("fractions sum to {total}, not 1")));
        }
        Ok(NodeDist { endpoints, matrix })
    }

    pub fn uniform(endpoints: &[EndpointId]) -> Result<Self> {
        check_endpoints(endpoints)?;
        let n = endpoints.len();
        let w = 1.0 / (n * (n - 1)) as f64;
        let matrix = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { w }).collect();
        Ok(NodeDist {
            endpoints: endpoints.to_vec(),
            matrix,
        })
    }

    pub fn endpoints(&self) -> &[EndpointId] {
        &self.endpoints
    }

    pub fn len(&self) -> usize {
        self.endpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.endpoints.is_empty()
    }

    /// Fraction for the pair at positions `(i, j)` of [`Self::endpoints`].
    pub fn frac(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.len() + j]
    }

    pub fn position(&self, ep: EndpointId) -> Option<usize> {
        self.endpoints.iter().position(|&e| e == ep)
    }

    /// Fraction for `(src, dst)`, zero for unknown endpoints.
    pub fn pair_frac(&self, src: EndpointId, dst: EndpointId) -> f64 {
        match (self.position(src), self.position(dst)) {
            (Some(i), Some(j)) => self.frac(i, j),
            _ => 0.0,
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.matrix.chunks(self.len())
    }

    /// Every ordered off-diagonal pair, row-major.
    pub fn pairs(&self) -> impl Iterator<Item = ((EndpointId, EndpointId), f64)> + '_ {
        let n = self.len();
        (0..n * n)
            .filter(move |k| k / n != k % n)
            .map(move |k| ((self.endpoints[k / n], self.endpoints[k % n]), self.matrix[k]))
    }
}

fn check_endpoints(endpoints: &[EndpointId]) -> Result<()> {
    if endpoints.len() < 2 {
        return Err(Error::InvalidNodeDist("need at least 2 endpoints".into()));
    }
    let mut sorted = endpoints.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidNodeDist("duplicate endpoint ids".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeBase {
    #[default]
    Uniform,
    /// Dense row-major weights, normalised on use.
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RackConfig {
    pub racks: BTreeMap<String, Vec<EndpointId>>,
    pub prob_inter_rack: f64,
}

/// High-level parameters implicitly defining a [`NodeDist`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDistSpec {
    #[serde(default)]
    pub base: NodeBase,
    #[serde(default)]
    pub num_skewed_nodes: usize,
    /// Share of total load carried by each skewed node (row + column).
    #[serde(default)]
    pub skewed_node_probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rack_config: Option<RackConfig>,
}

impl NodeDistSpec {
    pub fn uniform() -> Self {
        NodeDistSpec::default()
    }

    /// `floor(frac_nodes·n)` hot nodes sharing `frac_load` equally.
    pub fn hot_nodes(n_endpoints: usize, frac_nodes: f64, frac_load: f64) -> Self {
        let k = libm::floor(frac_nodes * n_endpoints as f64) as usize;
        NodeDistSpec {
            num_skewed_nodes: k,
            skewed_node_probs: vec![frac_load / k.max(1) as f64; k],
            ..NodeDistSpec::default()
        }
    }

    pub fn with_racks(mut self, racks: BTreeMap<String, Vec<EndpointId>>, prob_inter_rack: f64) -> Self {
        self.rack_config = Some(RackConfig { racks, prob_inter_rack });
        self
    }
}

/// Builds the pair matrix: base weights, then hot-node shares, then rack
/// split, finally alternating proportional rescaling until both the hot-node
/// and inter-rack totals hold.
pub fn build_node_dist(spec: &NodeDistSpec, endpoints: &[EndpointId], seed: u64) -> Result<NodeDist> {
    check_endpoints(endpoints)?;
    let n = endpoints.len();
    let mut m = base_weights(&spec.base, n)?;

    let skewed = choose_skewed(spec, n, seed)?;
    let hot_total: f64 = spec.skewed_node_probs.iter().sum();
    let mut touches_hot = vec![false; n * n];
    if !skewed.is_empty() {
        let mut is_hot = vec![false; n];
        for &(k, _) in &skewed {
            is_hot[k] = true;
        }
        let mut out = vec![0.0; n * n];
        for &(k, share) in &skewed {
            let cells = || (0..n).filter(move |&j| j != k).flat_map(move |j| [k * n + j, j * n + k]);
            let base: f64 = cells().map(|c| m[c]).sum();
            if base <= 0.0 && share > 0.0 {
                return Err(Error::InvalidNodeDist(format!("skewed endpoint {} has no base weight", endpoints[k])));
            }
            for c in cells() {
                touches_hot[c] = true;
                if base > 0.0 {
                    out[c] += share * m[c] / base;
                }
            }
        }
        let rest = 1.0 - hot_total;
        let cold = |c: usize| c / n != c % n && !is_hot[c / n] && !is_hot[c % n];
        let cold_base: f64 = (0..n * n).filter(|&c| cold(c)).map(|c| m[c]).sum();
        if cold_base <= 0.0 && rest > 1e-12 {
            return Err(Error::InvalidNodeDist(format!(
                "{rest} of the load is left for non-skewed pairs but none exist"
            )));
        }
        for c in (0..n * n).filter(|&c| cold(c)) {
            out[c] = if cold_base > 0.0 { rest * m[c] / cold_base } else { 0.0 };
        }
        m = out;
    }

    if let Some(rc) = &spec.rack_config {
        let rack_of = rack_positions(rc, endpoints)?;
        if !(0.0..=1.0).contains(&rc.prob_inter_rack) {
            return Err(Error::InvalidNodeDist(format!(
                "prob_inter_rack must lie in [0, 1], got {}",
                rc.prob_inter_rack
            )));
        }
        let inter: Vec<bool> = (0..n * n).map(|c| rack_of[c / n] != rack_of[c % n]).collect();
        let mut converged = false;
        for _ in 0..IPF_MAX_ROUNDS {
            rescale_class(&mut m, &inter, rc.prob_inter_rack)?;
            if skewed.is_empty() {
                converged = true;
                break;
            }
            rescale_class(&mut m, &touches_hot, hot_total)?;
            if (class_mass(&m, &inter) - rc.prob_inter_rack).abs() < IPF_TOLERANCE {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::InvalidNodeDist(
                "rack split and hot-node shares cannot both be satisfied".into(),
            ));
        }
    }

    let total: f64 = m.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidNodeDist("matrix has no mass".into()));
    }
    m.iter_mut().for_each(|v| *v /= total);
    Ok(NodeDist {
        endpoints: endpoints.to_vec(),
        matrix: m,
    })
}

fn base_weights(base: &NodeBase, n: usize) -> Result<Vec<f64>> {
    let mut m = match base {
        NodeBase::Uniform => vec![1.0; n * n],
        NodeBase::Explicit(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidNodeDist(format!("explicit base must be {n}×{n}")));
            }
            let m: Vec<f64> = rows.iter().flatten().copied().collect();
            if m.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidNodeDist("explicit weights must be finite and non-negative".into()));
            }
            m
        }
    };
    for i in 0..n {
        m[i * n + i] = 0.0;
    }
    let total: f64 = m.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidNodeDist("base matrix has no off-diagonal mass".into()));
    }
    m.iter_mut().for_each(|v| *v /= total);
    Ok(m)
}

/// Positions (into `endpoints`) of the skewed nodes with their shares.
fn choose_skewed(spec: &NodeDistSpec, n: usize, seed: u64) -> Result<Vec<(usize, f64)>> {
    let k = spec.num_skewed_nodes;
    if spec.skewed_node_probs.len() != k {
        return Err(Error::InvalidNodeDist(format!(
            "{} skewed nodes but {} shares",
            k,
            spec.skewed_node_probs.len()
        )));
    }
    if k > n {
        return Err(Error::InvalidNodeDist(format!("{k} skewed nodes out of {n} endpoints")));
    }
    if spec.skewed_node_probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidNodeDist("skewed node shares must be non-negative".into()));
    }
    let total: f64 = spec.skewed_node_probs.iter().sum();
    if total > 1.0 + 1e-9 {
        return Err(Error::InvalidNodeDist(format!("skewed node shares sum to {total} > 1")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    Ok(order.into_iter().zip(spec.skewed_node_probs.iter().copied()).collect())
}

fn rack_positions(rc: &RackConfig, endpoints: &[EndpointId]) -> Result<Vec<usize>> {
    let mut rack_of = vec![usize::MAX; endpoints.len()];
    for (r, members) in rc.racks.values().enumerate() {
        for ep in members {
            let pos = endpoints
                .iter()
                .position(|e| e == ep)
                .ok_or_else(|| Error::InvalidNodeDist(format!("rack member {ep} is not an endpoint")))?;
            if rack_of[pos] != usize::MAX {
                return Err(Error::InvalidNodeDist(format!("endpoint {ep} is in more than one rack")));
            }
            rack_of[pos] = r;
        }
    }
    if let Some(pos) = rack_of.iter().position(|&r| r == usize::MAX) {
        return Err(Error::InvalidNodeDist(format!("endpoint {} belongs to no rack", endpoints[pos])));
    }
    Ok(rack_of)
}

fn class_mass(m: &[f64], mask: &[bool]) -> f64 {
    m.iter().zip(mask).filter(|(_, &b)| b).map(|(v, _)| v).sum()
}

/// Scales the masked cells to total `target` and the rest to `1 − target`.
fn rescale_class(m: &mut [f64], mask: &[bool], target: f64) -> Result<()> {
    let total: f64 = m.iter().sum();
    let inside = class_mass(m, mask);
    let outside = total - inside;
    if inside <= 0.0 && target > 0.0 || outside <= 0.0 && target < 1.0 {
        return Err(Error::InvalidNodeDist(format!(
            "cannot place {target} of the load on a class holding no pairs"
        )));
    }
    let fin = if inside > 0.0 { target / inside } else { 0.0 };
    let fout = if outside > 0.0 { (1.0 - target) / outside } else { 0.0 };
    for (v, &b) in m.iter_mut().zip(mask) {
        *v *= if b { fin } else { fout };
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointLoad {
    pub endpoint: EndpointId,
    pub src_frac: f64,
    pub dst_frac: f64,
}

/// Row and column sums of the pair matrix.
pub fn endpoint_loads(nd: &NodeDist) -> Vec<EndpointLoad> {
    let n = nd.len();
    (0..n)
        .map(|i| EndpointLoad {
            endpoint: nd.endpoints[i],
            src_frac: (0..n).map(|j| nd.frac(i, j)).sum(),
            dst_frac: (0..n).map(|j| nd.frac(j, i)).sum(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewReport {
    /// Per-endpoint load (fraction of capacity) of a skewed endpoint.
    pub load_per_skewed: f64,
    pub load_per_other: f64,
    /// Larger over smaller per-endpoint load, ≥ 1.
    pub skew_factor: f64,
    /// No endpoint needed clipping at 1.0.
    pub feasible: bool,
}

/// Per-endpoint loads when a fraction `x` of endpoints requests a fraction
/// `y` of an overall load `rho`, with load above 1.0 on one class pushed
/// evenly onto the other until neither exceeds capacity.
pub fn skew_factor(x: f64, y: f64, rho: f64) -> Result<SkewReport> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidArgument(format!("fraction of skewed nodes must lie in (0, 1), got {x}")));
    }
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::InvalidArgument(format!("fraction of load must lie in [0, 1], got {y}")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("load must lie in (0, 1], got {rho}")));
    }
    let mut skewed = rho * y / x;
    let mut other = rho * (1.0 - y) / (1.0 - x);
    let mut feasible = true;
    for _ in 0..8 {
        if skewed > 1.0 + 1e-12 {
            other += (skewed - 1.0) * x / (1.0 - x);
            skewed = 1.0;
        } else if other > 1.0 + 1e-12 {
            skewed += (other - 1.0) * (1.0 - x) / x;
            other = 1.0;
        } else {
            break;
        }
        feasible = false;
    }
    let factor = if feasible {
        // ρ cancels; computing without it keeps the unclipped value exact
        let c = (y / x) / ((1.0 - y) / (1.0 - x));
        if c >= 1.0 { c } else { 1.0 / c }
    } else {
        let (hi, lo) = if skewed >= other { (skewed, other) } else { (other, skewed) };
        if lo > 0.0 { hi / lo } else { f64::INFINITY }
    };
    Ok(SkewReport {
        load_per_skewed: skewed,
        load_per_other: other,
        skew_factor: factor,
        feasible,
    })
}

/// Skew factors over a grid, indexed `factors[rho][y][x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewTable {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub rhos: Vec<f64>,
    pub factors: Vec<Vec<Vec<f64>>>,
}

pub fn skew_table(xs: &[f64], ys: &[f64], rhos: &[f64]) -> Result<SkewTable> {
    let factors = rhos
        .iter()
        .map(|&rho| {
            ys.iter()
                .map(|&y| xs.iter().map(|&x| skew_factor(x, y, rho).map(|r| r.skew_factor)).collect())
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(SkewTable {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        rhos: rhos.to_vec(),
        factors,
    })
}
