//! Slotted flow-level simulation with four scheduling policies.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::Flow;
use crate::network::{LinkId, Path, Topology};
use crate::seed::{derive_seed, rng_from_seed, stream};

/// Water-filling rounds used by [`Scheduler::FairShare`].
pub const FAIR_SHARE_ROUNDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduler {
    Srpt,
    FairShare,
    FirstFit,
    Random,
}

impl Scheduler {
    pub const ALL: [Scheduler; 4] = [Scheduler::Srpt, Scheduler::FairShare, Scheduler::FirstFit, Scheduler::Random];

    /// Short label used in tables, e.g. `FS`.
    pub fn abbrev(self) -> &'static str {
        match self {
            Scheduler::Srpt => "SRPT",
            Scheduler::FairShare => "FS",
            Scheduler::FirstFit => "FF",
            Scheduler::Random => "Rand",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheduler::Srpt => "srpt",
            Scheduler::FairShare => "fair_share",
            Scheduler::FirstFit => "first_fit",
            Scheduler::Random => "random",
        }
    }

    /// Whether `candidate` displaces `contender` in a contention.
    fn wins(self, candidate_remaining: u64, contender_remaining: u64) -> bool {
        match self {
            Scheduler::Srpt => candidate_remaining < contender_remaining,
            _ => false,
        }
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Scheduler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "srpt" => Ok(Scheduler::Srpt),
            "fs" | "fair_share" | "fairshare" => Ok(Scheduler::FairShare),
            "ff" | "first_fit" | "firstfit" => Ok(Scheduler::FirstFit),
            "rand" | "random" => Ok(Scheduler::Random),
            _ => Err(Error::InvalidArgument(format!(
                "unknown scheduler `{s}` (expected one of srpt, fair_share, first_fit, random)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// μs.
    #[serde(default = "default_slot")]
    pub slot_size: f64,
    #[serde(default = "default_warmup")]
    pub warmup_frac: f64,
    pub scheduler: Scheduler,
    #[serde(default)]
    pub seed: u64,
    /// Keep running past the last arrival until every flow completes.
    #[serde(default)]
    pub drain: bool,
}

fn default_slot() -> f64 {
    1000.0
}
fn default_warmup() -> f64 {
    0.1
}

impl SimConfig {
    pub fn new(scheduler: Scheduler) -> Self {
        SimConfig {
            slot_size: default_slot(),
            warmup_frac: default_warmup(),
            scheduler,
            seed: 0,
            drain: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slot_size > 0.0 && self.slot_size.is_finite()) {
            return Err(Error::InvalidArgument(format!("slot_size must be positive, got {}", self.slot_size)));
        }
        if !(0.0..1.0).contains(&self.warmup_frac) {
            return Err(Error::InvalidArgument(format!(
                "warmup_frac must lie in [0, 1), got {}",
                self.warmup_frac
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub flow: Flow,
    pub remaining: u64,
    pub path: Path,
    /// End of the slot in which the last byte was sent.
    pub completion: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub mean_fct: f64,
    pub p99_fct: f64,
    pub max_fct: f64,
    /// Bytes/μs delivered over the measured window.
    pub throughput_abs: f64,
    pub throughput_rel: f64,
    pub frac_flows_accepted: f64,
    pub frac_info_accepted: f64,
}

/// A flow bidding for capacity in the contention-resolution pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub key: usize,
    pub remaining: u64,
    pub alloc: u64,
    pub links: Vec<LinkId>,
}

/// Flows established so far in a slot, with per-link usage.
#[derive(Debug, Clone)]
pub struct ChosenSet {
    budget: Vec<u64>,
    used: Vec<u64>,
    members: Vec<Candidate>,
}

impl ChosenSet {
    pub fn new(budget: Vec<u64>) -> Self {
        let used = vec![0; budget.len()];
        ChosenSet {
            budget,
            used,
            members: Vec::new(),
        }
    }

    pub fn members(&self) -> &[Candidate] {
        &self.members
    }

    pub fn used(&self) -> &[u64] {
        &self.used
    }

    fn insert(&mut self, c: Candidate) {
        for l in &c.links {
            self.used[l.index()] += c.alloc;
        }
        self.members.push(c);
    }

    fn remove(&mut self, i: usize) -> Candidate {
        let c = self.members.remove(i);
        for l in &c.links {
            self.used[l.index()] -= c.alloc;
        }
        c
    }

    fn overfull_link(&self, c: &Candidate) -> Option<LinkId> {
        c.links
            .iter()
            .copied()
            .find(|l| self.used[l.index()] + c.alloc > self.budget[l.index()])
    }
}

/// Tries to establish `candidate`, evicting contenders the scheduler lets it
/// beat. On rejection every evicted flow is restored and nothing changes.
pub fn resolve_contentions(candidate: Candidate, chosen: &mut ChosenSet, scheduler: Scheduler) -> (bool, Vec<Candidate>) {
    let mut evicted = Vec::new();
    while let Some(link) = chosen.overfull_link(&candidate) {
        // the weakest flow on the contended link
        let contender = chosen
            .members
            .iter()
            .enumerate()
            .filter(|(_, m)| m.links.contains(&link))
            .max_by_key(|(i, m)| (m.remaining, *i))
            .map(|(i, _)| i);
        match contender {
            Some(i) if scheduler.wins(candidate.remaining, chosen.members[i].remaining) => {
                evicted.push(chosen.remove(i));
            }
            _ => {
                for e in evicted {
                    chosen.insert(e);
                }
                return (false, Vec::new());
            }
        }
    }
    chosen.insert(candidate);
    (true, evicted)
}

/// Bytes each active flow may send in one slot; `budget` is the per-link
/// byte capacity of the slot. Allocations are returned aligned with `active`.
pub fn schedule_slot(active: &[&FlowState], budget: &[u64], scheduler: Scheduler, seed: u64) -> Vec<u64> {
    match scheduler {
        Scheduler::FairShare => fair_share(active, budget),
        _ => prioritised(active, budget, scheduler, seed),
    }
}

fn priority_order(active: &[&FlowState], scheduler: Scheduler, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..active.len()).collect();
    match scheduler {
        Scheduler::Srpt => order.sort_by(|&a, &b| {
            let (x, y) = (active[a], active[b]);
            (x.remaining, x.flow.arrival, x.flow.id)
                .partial_cmp(&(y.remaining, y.flow.arrival, y.flow.id))
                .expect("finite arrivals")
        }),
        Scheduler::FirstFit => order.sort_by(|&a, &b| {
            let (x, y) = (active[a], active[b]);
            (x.flow.arrival, x.flow.id)
                .partial_cmp(&(y.flow.arrival, y.flow.id))
                .expect("finite arrivals")
        }),
        Scheduler::Random => {
            order.sort_by_key(|&a| active[a].flow.id);
            order.shuffle(&mut rng_from_seed(seed));
        }
        Scheduler::FairShare => {}
    }
    order
}

fn prioritised(active: &[&FlowState], budget: &[u64], scheduler: Scheduler, seed: u64) -> Vec<u64> {
    let order = priority_order(active, scheduler, seed);

    // Per-link provisional grants in priority order, then the path minimum.
    let mut residual = budget.to_vec();
    let mut alloc = vec![0u64; active.len()];
    for &i in &order {
        let f = active[i];
        let mut grant = f.remaining;
        for l in f.path.links() {
            let r = &mut residual[l.index()];
            let g = f.remaining.min(*r);
            *r -= g;
            grant = grant.min(g);
        }
        alloc[i] = grant;
    }

    let mut chosen = ChosenSet::new(budget.to_vec());
    for &i in &order {
        if alloc[i] == 0 {
            continue;
        }
        let f = active[i];
        let cand = Candidate {
            key: i,
            remaining: f.remaining,
            alloc: alloc[i],
            links: f.path.0.clone(),
        };
        let (established, evicted) = resolve_contentions(cand, &mut chosen, scheduler);
        if !established {
            alloc[i] = 0;
        }
        for e in evicted {
            alloc[e.key] = 0;
        }
    }

    // Hand out whatever the path minimum left stranded.
    let mut used = chosen.used;
    for &i in &order {
        let f = active[i];
        let free = f
            .path
            .links()
            .iter()
            .map(|l| budget[l.index()] - used[l.index()])
            .min()
            .unwrap_or(0);
        let extra = (f.remaining - alloc[i]).min(free);
        if extra > 0 {
            alloc[i] += extra;
            for l in f.path.links() {
                used[l.index()] += extra;
            }
        }
    }
    alloc
}

fn fair_share(active: &[&FlowState], budget: &[u64]) -> Vec<u64> {
    let mut residual = budget.to_vec();
    let mut alloc = vec![0u64; active.len()];
    let mut live: Vec<usize> = (0..active.len()).collect();
    let mut users = vec![0u64; budget.len()];
    for _ in 0..FAIR_SHARE_ROUNDS {
        if live.is_empty() {
            break;
        }
        users.iter_mut().for_each(|u| *u = 0);
        for &i in &live {
            for l in active[i].path.links() {
                users[l.index()] += 1;
            }
        }
        let grants: Vec<u64> = live
            .iter()
            .map(|&i| {
                let f = active[i];
                let share = f
                    .path
                    .links()
                    .iter()
                    .map(|l| residual[l.index()] / users[l.index()])
                    .min()
                    .unwrap_or(0);
                share.min(f.remaining - alloc[i])
            })
            .collect();
        for (&i, &g) in live.iter().zip(&grants) {
            alloc[i] += g;
            for l in active[i].path.links() {
                residual[l.index()] -= g;
            }
        }
        live.retain(|&i| {
            let f = active[i];
            alloc[i] < f.remaining && f.path.links().iter().all(|l| residual[l.index()] > 0)
        });
    }
    alloc
}

/// What happened in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotReport {
    pub index: u64,
    /// μs.
    pub start: f64,
    /// Bytes carried by each link, indexed by link id.
    pub link_bytes: Vec<u64>,
    /// `(flow id, bytes)` for every flow that was active in the slot.
    pub allocations: Vec<(u64, u64)>,
}

/// A steppable simulation over one flow set.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    budget: Vec<u64>,
    flows: Vec<FlowState>,
    join_slot: Vec<u64>,
    next: usize,
    active: Vec<usize>,
    slot: u64,
    horizon_slots: u64,
    last_arrival: f64,
}

impl Simulation {
    pub fn new(flows: &[Flow], topology: &Topology, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        if flows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let s = config.slot_size;
        let budget: Vec<u64> = topology
            .links()
            .iter()
            .map(|l| libm::floor(l.capacity * s) as u64)
            .collect();
        if budget.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "slot of {s} μs carries less than one byte on some link"
            )));
        }
        let mut sorted = flows.to_vec();
        if let Some(f) = sorted.iter().find(|f| !(f.arrival >= 0.0 && f.arrival.is_finite())) {
            return Err(Error::InvalidArgument(format!("flow {} has arrival {}", f.id, f.arrival)));
        }
        sorted.sort_by(|a, b| a.arrival.total_cmp(&b.arrival).then(a.id.cmp(&b.id)));
        let states = sorted
            .into_iter()
            .map(|flow| {
                if !topology.contains(flow.src) {
                    return Err(Error::UnknownEndpoint(flow.src.0));
                }
                if !topology.contains(flow.dst) {
                    return Err(Error::UnknownEndpoint(flow.dst.0));
                }
                Ok(FlowState {
                    remaining: flow.size,
                    path: topology.path(flow.src, flow.dst)?,
                    completion: if flow.size == 0 { Some(flow.arrival) } else { None },
                    flow,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let join_slot = states.iter().map(|f| libm::ceil(f.flow.arrival / s) as u64).collect();
        let last_arrival = states.last().map_or(0.0, |f| f.flow.arrival);
        let horizon_slots = (libm::ceil(last_arrival / s) as u64).max(1);
        Ok(Simulation {
            config: config.clone(),
            budget,
            flows: states,
            join_slot,
            next: 0,
            active: Vec::new(),
            slot: 0,
            horizon_slots,
            last_arrival,
        })
    }

    /// Per-link byte capacity of one slot, indexed by link id.
    pub fn link_budget(&self) -> &[u64] {
        &self.budget
    }

    pub fn flows(&self) -> &[FlowState] {
        &self.flows
    }

    pub fn is_finished(&self) -> bool {
        if self.config.drain {
            self.next == self.flows.len() && self.active.is_empty()
        } else {
            self.slot >= self.horizon_slots
        }
    }

    /// Runs one slot; `None` once the simulation is over.
    pub fn step(&mut self) -> Option<SlotReport> {
        if self.is_finished() {
            return None;
        }
        let k = self.slot;
        while self.next < self.flows.len() && self.join_slot[self.next] <= k {
            if self.flows[self.next].remaining > 0 {
                self.active.push(self.next);
            }
            self.next += 1;
        }
        let seed = derive_seed(self.config.seed, &[stream::SLOT, k]);
        let alloc = {
            let refs: Vec<&FlowState> = self.active.iter().map(|&i| &self.flows[i]).collect();
            schedule_slot(&refs, &self.budget, self.config.scheduler, seed)
        };
        let end = (k + 1) as f64 * self.config.slot_size;
        let mut link_bytes = vec![0u64; self.budget.len()];
        let mut allocations = Vec::with_capacity(self.active.len());
        for (&i, &a) in self.active.iter().zip(&alloc) {
            let f = &mut self.flows[i];
            f.remaining -= a;
            for l in f.path.links() {
                link_bytes[l.index()] += a;
            }
            if f.remaining == 0 {
                f.completion = Some(end);
            }
            allocations.push((f.flow.id, a));
        }
        self.active.retain(|&i| self.flows[i].remaining > 0);
        self.slot += 1;
        Some(SlotReport {
            index: k,
            start: k as f64 * self.config.slot_size,
            link_bytes,
            allocations,
        })
    }

    pub fn run_to_end(&mut self) {
        while self.step().is_some() {}
    }

    /// KPIs over flows arriving after the warm-up window.
    pub fn metrics(&self) -> Metrics {
        let warmup = self.config.warmup_frac * self.last_arrival;
        let end = self.slot as f64 * self.config.slot_size;
        let measured: Vec<&FlowState> = self.flows.iter().filter(|f| f.flow.arrival >= warmup).collect();
        if measured.is_empty() {
            return Metrics {
                frac_flows_accepted: 1.0,
                frac_info_accepted: 1.0,
                throughput_rel: 1.0,
                ..Metrics::default()
            };
        }
        let fcts: Vec<f64> = measured
            .iter()
            .filter_map(|f| f.completion.map(|c| c - f.flow.arrival))
            .collect();
        let arrived: u64 = measured.iter().map(|f| f.flow.size).sum();
        let delivered: u64 = measured.iter().map(|f| f.flow.size - f.remaining).sum();
        let completed_bytes: u64 = measured
            .iter()
            .filter(|f| f.completion.is_some())
            .map(|f| f.flow.size)
            .sum();
        let window = end - warmup;
        let ratio = |a: u64, b: u64| if b == 0 { 1.0 } else { a as f64 / b as f64 };
        Metrics {
            mean_fct: if fcts.is_empty() { 0.0 } else { kahan_sum(&fcts) / fcts.len() as f64 },
            p99_fct: compute_percentile(&fcts, 99.0).unwrap_or(0.0),
            max_fct: fcts.iter().copied().fold(0.0, f64::max),
            throughput_abs: if window > 0.0 { delivered as f64 / window } else { 0.0 },
            throughput_rel: ratio(delivered, arrived),
            frac_flows_accepted: fcts.len() as f64 / measured.len() as f64,
            frac_info_accepted: ratio(completed_bytes, arrived),
        }
    }
}

/// Simulates `flows` to the end and returns the KPIs.
pub fn run(flows: &[Flow], topology: &Topology, config: &SimConfig) -> Result<Metrics> {
    let mut sim = Simulation::new(flows, topology, config)?;
    sim.run_to_end();
    Ok(sim.metrics())
}

/// Nearest-rank percentile: the `⌈p/100·n⌉`-th smallest value.
pub fn compute_percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::InvalidArgument(format!("percentile must lie in (0, 100], got {p}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = (libm::ceil(p / 100.0 * n as f64) as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

/// Compensated summation.
pub fn kahan_sum(values: &[f64]) -> f64 {
    let (mut sum, mut c) = (0.0, 0.0);
    for &v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}
