//! Entropy and Jensen-Shannon divergence/distance (base-2 logarithms).

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::DiscretePmf;

/// Shannon entropy in bits; zero-probability terms contribute nothing.
pub fn entropy(pmf: &DiscretePmf) -> f64 {
    entropy_of(pmf.probs())
}

fn entropy_of(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * libm::log2(p))
        .sum();
    h.max(0.0)
}

/// Re-expresses both distributions over the union of their supports.
pub fn align_supports(p: &DiscretePmf, q: &DiscretePmf) -> (DiscretePmf, DiscretePmf) {
    let union = union_support(&[p, q]);
    (reindex(p, &union), reindex(q, &union))
}

fn union_support(pmfs: &[&DiscretePmf]) -> Vec<f64> {
    let mut union: Vec<f64> = pmfs.iter().flat_map(|p| p.support().iter().copied()).collect();
    union.sort_by(f64::total_cmp);
    union.dedup();
    union
}

fn reindexed_probs(pmf: &DiscretePmf, union: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; union.len()];
    let mut j = 0;
    for (v, p) in pmf.iter() {
        while union[j] < v {
            j += 1;
        }
        out[j] = p;
    }
    out
}

fn reindex(pmf: &DiscretePmf, union: &[f64]) -> DiscretePmf {
    DiscretePmf::new(union.to_vec(), reindexed_probs(pmf, union)).expect("reindexing keeps a valid pmf")
}

/// Weighted collection of distributions for the n-ary divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEnsemble {
    pub pmfs: Vec<DiscretePmf>,
    pub weights: Vec<f64>,
}

impl WeightedEnsemble {
    /// Two distributions with equal weights.
    pub fn pair(p: DiscretePmf, q: DiscretePmf) -> Self {
        WeightedEnsemble {
            pmfs: alloc::vec![p, q],
            weights: alloc::vec![0.5, 0.5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pmfs.len() < 2 {
            return Err(Error::InvalidWeights(format!("need at least 2 distributions, got {}", self.pmfs.len())));
        }
        if self.weights.len() != self.pmfs.len() {
            return Err(Error::InvalidWeights(format!(
                "{} weights for {} distributions",
                self.weights.len(),
                self.pmfs.len()
            )));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidWeights("weights must be finite and non-negative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// Jensen-Shannon divergence of a weighted ensemble, in bits.
///
/// Evaluated as Σ πᵢ·KL(Pᵢ ‖ M) with M = Σ πᵢ Pᵢ, which equals
/// H(M) − Σ πᵢ H(Pᵢ) and is non-negative term by term.
pub fn jsd(ensemble: &WeightedEnsemble) -> Result<f64> {
    ensemble.validate()?;
    let refs: Vec<&DiscretePmf> = ensemble.pmfs.iter().collect();
    let union = union_support(&refs);
    let aligned: Vec<Vec<f64>> = refs.iter().map(|p| reindexed_probs(p, &union)).collect();
    let rows: Vec<&[f64]> = aligned.iter().map(Vec::as_slice).collect();
    Ok(jsd_aligned(&rows, &ensemble.weights))
}

fn jsd_aligned(probs: &[&[f64]], weights: &[f64]) -> f64 {
    let width = probs[0].len();
    let mut total = 0.0;
    for j in 0..width {
        let m: f64 = probs.iter().zip(weights).map(|(p, w)| w * p[j]).sum();
        if m <= 0.0 {
            continue;
        }
        for (p, w) in probs.iter().zip(weights) {
            let pj = p[j];
            if pj > 0.0 && *w > 0.0 {
                total += w * pj * libm::log2(pj / m);
            }
        }
    }
    let bound = libm::log2(probs.len() as f64);
    total.clamp(0.0, bound)
}

/// Jensen-Shannon distance √JSD between two distributions, in [0, 1].
pub fn js_distance(p: &DiscretePmf, q: &DiscretePmf) -> f64 {
    let union = union_support(&[p, q]);
    let a = reindexed_probs(p, &union);
    let b = reindexed_probs(q, &union);
    js_distance_aligned(&a, &b)
}

/// Distance between two probability vectors already laid out over the
/// same support. Either vector may be unnormalised counts; both are scaled
/// to unit mass first.
pub fn js_distance_aligned(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    if sp <= 0.0 || sq <= 0.0 {
        return if sp == sq { 0.0 } else { 1.0 };
    }
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let (a, b) = (a / sp, b / sq);
        let m = 0.5 * (a + b);
        let term = |x: f64| if x > 0.0 { 0.5 * x * libm::log2(x / m) } else { 0.0 };
        // one addition per position keeps d(p, q) == d(q, p) bit for bit
        total += term(a) + term(b);
    }
    libm::sqrt(total.clamp(0.0, 1.0))
}
