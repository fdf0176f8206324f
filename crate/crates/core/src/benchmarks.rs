//! Named traffic presets and the repeat × preset × load benchmark protocol.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{generate_trace, GenConfig};
use crate::network::Topology;
use crate::nodedist::NodeDistSpec;
use crate::pmf::{DistSpec, Family, MultimodalSpec, NamedSpec};
use crate::seed::{derive_seed, hash_str, stream};
use crate::simulator::{run, Metrics, Scheduler, SimConfig};

pub const DCN_PRESETS: [&str; 4] = ["university", "private_enterprise", "commercial_cloud", "social_media_cloud"];

pub const SKEWED_NODE_FRACTIONS: [(&str, Option<f64>); 5] = [
    ("skewed_nodes_sensitivity_uniform", None),
    ("skewed_nodes_sensitivity_0.05", Some(0.05)),
    ("skewed_nodes_sensitivity_0.1", Some(0.1)),
    ("skewed_nodes_sensitivity_0.2", Some(0.2)),
    ("skewed_nodes_sensitivity_0.4", Some(0.4)),
];

/// Fraction of traffic kept intra-rack.
pub const RACK_INTRA_FRACTIONS: [(&str, Option<f64>); 5] = [
    ("rack_sensitivity_uniform", None),
    ("rack_sensitivity_0.2", Some(0.2)),
    ("rack_sensitivity_0.4", Some(0.4)),
    ("rack_sensitivity_0.6", Some(0.6)),
    ("rack_sensitivity_0.8", Some(0.8)),
];

const HOT_NODE_FRACTION: f64 = 0.2;
const HOT_NODE_LOAD: f64 = 0.55;

/// A complete parameter set for one traffic class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPreset {
    pub name: String,
    pub size_spec: DistSpec,
    pub time_spec: DistSpec,
    pub node_spec: NodeDistSpec,
}

/// Every preset name, in registry order.
pub fn preset_names() -> Vec<&'static str> {
    DCN_PRESETS
        .iter()
        .copied()
        .chain(SKEWED_NODE_FRACTIONS.iter().map(|(n, _)| *n))
        .chain(RACK_INTRA_FRACTIONS.iter().map(|(n, _)| *n))
        .collect()
}

fn named(family: Family, params: &[(&str, f64)], max_val: Option<f64>) -> DistSpec {
    DistSpec::Named(NamedSpec {
        family,
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        min_val: 1.0,
        max_val,
        round_to: 25.0,
    })
}

fn lognormal_sizes() -> DistSpec {
    named(Family::Lognormal, &[("mu", 7.0), ("sigma", 2.5)], Some(2e7))
}

fn commercial_cloud_times() -> DistSpec {
    DistSpec::Multimodal(MultimodalSpec {
        locations: vec![10.0, 20.0, 100.0, 1.0],
        skews: vec![0.0, 0.0, 0.0, 100.0],
        scales: vec![1.0, 3.0, 4.0, 50.0],
        num_skew_samples: vec![10_000, 7_000, 5_000, 20_000],
        bg_factor: 0.01,
        min_val: 1.0,
        max_val: Some(1e5),
        round_to: 25.0,
    })
}

/// Resolves a preset for `topology`'s endpoint and rack layout.
pub fn preset(name: &str, topology: &Topology) -> Result<BenchmarkPreset> {
    let n = topology.num_endpoints();
    let hot = || NodeDistSpec::hot_nodes(n, HOT_NODE_FRACTION, HOT_NODE_LOAD);
    let (size_spec, time_spec, node_spec) = match name {
        "university" => (
            lognormal_sizes(),
            named(Family::Weibull, &[("alpha", 0.9), ("lambda", 6000.0)], None),
            hot().with_racks(topology.rack_map(), 0.7),
        ),
        "private_enterprise" => (
            lognormal_sizes(),
            DistSpec::Multimodal(MultimodalSpec {
                locations: vec![40.0, 1.0],
                skews: vec![-1.0, 4.0],
                scales: vec![60.0, 1000.0],
                num_skew_samples: vec![10_000, 10_000],
                bg_factor: 0.05,
                min_val: 1.0,
                max_val: Some(1e5),
                round_to: 25.0,
            }),
            hot().with_racks(topology.rack_map(), 0.5),
        ),
        "commercial_cloud" => (
            lognormal_sizes(),
            commercial_cloud_times(),
            hot().with_racks(topology.rack_map(), 0.2),
        ),
        "social_media_cloud" => (
            named(Family::Weibull, &[("alpha", 0.5), ("lambda", 21_000.0)], Some(2e6)),
            named(Family::Lognormal, &[("mu", 6.0), ("sigma", 2.3)], None),
            hot().with_racks(topology.rack_map(), 0.129),
        ),
        _ => {
            let node_spec = if let Some((_, frac)) = SKEWED_NODE_FRACTIONS.iter().find(|(p, _)| *p == name) {
                frac.map_or_else(NodeDistSpec::uniform, |x| NodeDistSpec::hot_nodes(n, x, HOT_NODE_LOAD))
            } else if let Some((_, intra)) = RACK_INTRA_FRACTIONS.iter().find(|(p, _)| *p == name) {
                match intra {
                    Some(x) => NodeDistSpec::uniform().with_racks(topology.rack_map(), 1.0 - x),
                    None => NodeDistSpec::uniform(),
                }
            } else {
                return Err(Error::UnknownPreset(name.into()));
            };
            (lognormal_sizes(), commercial_cloud_times(), node_spec)
        }
    };
    Ok(BenchmarkPreset {
        name: name.into(),
        size_spec,
        time_spec,
        node_spec,
    })
}

/// Relative band within which schedulers share a win.
pub const TIE_BAND: f64 = 0.005;

/// z-value for a two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub presets: Vec<String>,
    #[serde(default = "default_loads")]
    pub loads: Vec<f64>,
    #[serde(default = "default_repeats")]
    pub repeats: u32,
    #[serde(default = "default_schedulers")]
    pub schedulers: Vec<Scheduler>,
    /// `seed` and `target_load` are overridden per cell.
    pub gen: GenConfig,
    /// `seed` and `scheduler` are overridden per run.
    pub sim: SimConfig,
    #[serde(default)]
    pub seed: u64,
}

/// 0.1, 0.2, …, 0.9.
pub fn default_loads() -> Vec<f64> {
    (1..=9).map(|i| f64::from(i) / 10.0).collect()
}
fn default_repeats() -> u32 {
    5
}
fn default_schedulers() -> Vec<Scheduler> {
    Scheduler::ALL.to_vec()
}

impl ProtocolConfig {
    pub fn new(presets: &[&str], gen: GenConfig) -> Self {
        ProtocolConfig {
            presets: presets.iter().map(|p| String::from(*p)).collect(),
            loads: default_loads(),
            repeats: default_repeats(),
            schedulers: default_schedulers(),
            gen,
            sim: SimConfig::new(Scheduler::Srpt),
            seed: 0,
        }
    }

    pub fn validate(&self, topology: &Topology) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidArgument("repeats must be at least 1".into()));
        }
        if self.presets.is_empty() || self.loads.is_empty() || self.schedulers.is_empty() {
            return Err(Error::InvalidArgument("presets, loads and schedulers must be non-empty".into()));
        }
        if let Some(l) = self.loads.iter().find(|l| !(**l > 0.0 && **l <= 1.0)) {
            return Err(Error::InvalidArgument(format!("loads must lie in (0, 1], got {l}")));
        }
        for p in &self.presets {
            preset(p, topology)?;
        }
        self.sim.validate()
    }

    /// Every `(repeat, preset, load)` cell in protocol order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for repeat in 0..self.repeats {
            for p in &self.presets {
                for &load in &self.loads {
                    out.push(Cell {
                        preset: p.clone(),
                        load,
                        repeat,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub preset: String,
    pub load: f64,
    pub repeat: u32,
}

impl Cell {
    /// Independent of the scheduler set, so every scheduler sees the same trace.
    pub fn seed(&self, base: u64) -> u64 {
        derive_seed(base, &[u64::from(self.repeat), hash_str(&self.preset), self.load.to_bits()])
    }
}

/// One scheduler's outcome on one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub preset: String,
    pub load: f64,
    pub repeat: u32,
    pub scheduler: Scheduler,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

/// Generates the cell's trace and simulates it under every scheduler. A
/// failure is recorded against each scheduler rather than returned.
pub fn run_cell(cfg: &ProtocolConfig, topology: &Topology, cell: &Cell) -> Vec<RunRecord> {
    let seed = cell.seed(cfg.seed);
    let record = |scheduler, outcome: Result<Metrics>| {
        let (metrics, error) = match outcome {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(format!("{e}"))),
        };
        RunRecord {
            preset: cell.preset.clone(),
            load: cell.load,
            repeat: cell.repeat,
            scheduler,
            metrics,
            error,
        }
    };
    let trace = preset(&cell.preset, topology).and_then(|p| {
        let gen = GenConfig {
            seed,
            target_load: cell.load,
            ..cfg.gen.clone()
        };
        generate_trace(&p.size_spec, &p.time_spec, &p.node_spec, topology, &gen)
    });
    let trace = match trace {
        Ok(t) => t,
        Err(e) => return cfg.schedulers.iter().map(|&s| record(s, Err(e.clone()))).collect(),
    };
    cfg.schedulers
        .iter()
        .map(|&scheduler| {
            let sim = SimConfig {
                scheduler,
                seed: derive_seed(seed, &[stream::SIM]),
                ..cfg.sim.clone()
            };
            record(scheduler, run(&trace.flows, topology, &sim))
        })
        .collect()
}

/// Runs every cell in order and summarises.
pub fn run_protocol(cfg: &ProtocolConfig, topology: &Topology) -> Result<ProtocolResults> {
    cfg.validate(topology)?;
    let records = cfg.cells().iter().flat_map(|c| run_cell(cfg, topology, c)).collect();
    Ok(ProtocolResults::from_records(records))
}

/// A comparable metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kpi {
    MeanFct,
    P99Fct,
    MaxFct,
    ThroughputAbs,
    ThroughputRel,
    FracFlowsAccepted,
    FracInfoAccepted,
}

impl Kpi {
    pub const ALL: [Kpi; 7] = [
        Kpi::MeanFct,
        Kpi::P99Fct,
        Kpi::MaxFct,
        Kpi::ThroughputAbs,
        Kpi::ThroughputRel,
        Kpi::FracFlowsAccepted,
        Kpi::FracInfoAccepted,
    ];

    /// The KPIs compared in winner tables.
    pub const COMPARED: [Kpi; 6] = [
        Kpi::MeanFct,
        Kpi::P99Fct,
        Kpi::MaxFct,
        Kpi::ThroughputAbs,
        Kpi::ThroughputRel,
        Kpi::FracFlowsAccepted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kpi::MeanFct => "mean_fct",
            Kpi::P99Fct => "p99_fct",
            Kpi::MaxFct => "max_fct",
            Kpi::ThroughputAbs => "throughput_abs",
            Kpi::ThroughputRel => "throughput_rel",
            Kpi::FracFlowsAccepted => "frac_flows_accepted",
            Kpi::FracInfoAccepted => "frac_info_accepted",
        }
    }

    pub fn lower_is_better(self) -> bool {
        matches!(self, Kpi::MeanFct | Kpi::P99Fct | Kpi::MaxFct)
    }

    pub fn of(self, m: &Metrics) -> f64 {
        match self {
            Kpi::MeanFct => m.mean_fct,
            Kpi::P99Fct => m.p99_fct,
            Kpi::MaxFct => m.max_fct,
            Kpi::ThroughputAbs => m.throughput_abs,
            Kpi::ThroughputRel => m.throughput_rel,
            Kpi::FracFlowsAccepted => m.frac_flows_accepted,
            Kpi::FracInfoAccepted => m.frac_info_accepted,
        }
    }
}

/// Mean and 95% half-width of one KPI over repeats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
}

/// `1.96 · s / √n` with the sample standard deviation; zero for one value.
pub fn estimate(values: &[f64]) -> Estimate {
    let n = values.len();
    if n == 0 {
        return Estimate { mean: f64::NAN, ci95: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Estimate { mean, ci95: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    Estimate {
        mean,
        ci95: Z95 * libm::sqrt(var) / libm::sqrt(n as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub preset: String,
    pub load: f64,
    pub scheduler: Scheduler,
    /// Repeats that produced metrics.
    pub repeats: usize,
    pub failures: usize,
    pub kpis: BTreeMap<Kpi, Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResults {
    pub records: Vec<RunRecord>,
    pub summary: Vec<CellSummary>,
    pub winners: Vec<WinnerRow>,
}

impl ProtocolResults {
    /// Sorts records into a canonical order, so assembly order never matters.
    pub fn from_records(mut records: Vec<RunRecord>) -> Self {
        records.sort_by(|a, b| {
            a.preset
                .cmp(&b.preset)
                .then(a.load.total_cmp(&b.load))
                .then(a.scheduler.cmp(&b.scheduler))
                .then(a.repeat.cmp(&b.repeat))
        });
        let summary = summarise(&records);
        let winners = winner_table(&summary);
        ProtocolResults {
            records,
            summary,
            winners,
        }
    }
}

/// Per (preset, load, scheduler) estimates over repeats; expects records
/// sorted as in [`ProtocolResults::from_records`].
pub fn summarise(records: &[RunRecord]) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    for group in records.chunk_by(|a, b| a.preset == b.preset && a.load == b.load && a.scheduler == b.scheduler) {
        let ok: Vec<&Metrics> = group.iter().filter_map(|r| r.metrics.as_ref()).collect();
        let kpis = if ok.is_empty() {
            BTreeMap::new()
        } else {
            Kpi::ALL
                .iter()
                .map(|&k| (k, estimate(&ok.iter().map(|m| k.of(m)).collect::<Vec<_>>())))
                .collect()
        };
        out.push(CellSummary {
            preset: group[0].preset.clone(),
            load: group[0].load,
            scheduler: group[0].scheduler,
            repeats: ok.len(),
            failures: group.len() - ok.len(),
            kpis,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinnerRow {
    pub preset: String,
    pub load: f64,
    pub kpi: Kpi,
    /// Empty when every scheduler tied.
    pub winners: Vec<Scheduler>,
    /// `(winner − worst) / worst`.
    pub delta: Option<f64>,
    /// e.g. `SRPT, -73%`, or `-` when all tie.
    pub label: String,
}

/// Best scheduler(s) per (preset, load, KPI) and their margin over the worst.
pub fn winner_table(summary: &[CellSummary]) -> Vec<WinnerRow> {
    let mut out = Vec::new();
    for cell in summary.chunk_by(|a, b| a.preset == b.preset && a.load == b.load) {
        for kpi in Kpi::COMPARED {
            let means: Vec<(Scheduler, f64)> = cell
                .iter()
                .filter_map(|c| c.kpis.get(&kpi).map(|e| (c.scheduler, e.mean)))
                .collect();
            if means.len() < 2 {
                continue;
            }
            let lo = means.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
            let hi = means.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
            let (best, worst) = if kpi.lower_is_better() { (lo, hi) } else { (hi, lo) };
            let band = TIE_BAND * best.abs();
            let mut winners: Vec<Scheduler> = means
                .iter()
                .filter(|(_, v)| (v - best).abs() <= band)
                .map(|(s, _)| *s)
                .collect();
            winners.sort_by_key(|s| s.abbrev());
            let row = |winners, delta, label| WinnerRow {
                preset: cell[0].preset.clone(),
                load: cell[0].load,
                kpi,
                winners,
                delta,
                label,
            };
            if winners.len() == means.len() {
                out.push(row(Vec::new(), None, String::from("-")));
                continue;
            }
            let names: Vec<&str> = winners.iter().map(|s| s.abbrev()).collect();
            let delta = if worst != 0.0 { Some((best - worst) / worst) } else { None };
            let label = match delta {
                Some(d) => format!("{}, {}%", names.join(" + "), two_significant(100.0 * d)),
                None => names.join(" + "),
            };
            out.push(row(winners, delta, label));
        }
    }
    out
}

/// Two significant figures: `-73`, `5.2`, `-0.41`.
pub fn two_significant(x: f64) -> String {
    if x == 0.0 {
        return String::from("0");
    }
    let magnitude = libm::floor(libm::log10(x.abs())) as i32;
    let scale = libm::pow(10.0, f64::from(1 - magnitude));
    let r = libm::round(x * scale) / scale;
    let decimals = (1 - magnitude).max(0) as usize;
    format!("{r:.decimals$}")
}
