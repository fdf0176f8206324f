//! Spine-leaf (folded clos) topology with fixed hash routing.
//!
//! Units: capacities are bytes/μs per direction. An endpoint link carries
//! `n_c` channels of `C_c` each, split evenly between the source port and
//! the destination port, so each direction of a server link has
//! `n_c·C_c/2`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EndpointId(pub u32);

impl EndpointId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EndpointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub u32);

impl LinkId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    /// Endpoint → ToR (the endpoint's source port).
    ServerUp { endpoint: EndpointId },
    /// ToR → endpoint (the endpoint's destination port).
    ServerDown { endpoint: EndpointId },
    TorUp { rack: u32, core: u32 },
    TorDown { rack: u32, core: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub kind: LinkKind,
    /// Bytes/μs in this direction.
    pub capacity: f64,
}

/// Ordered links from a source endpoint to a destination endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path(pub Vec<LinkId>);

impl Path {
    pub fn links(&self) -> &[LinkId] {
        &self.0
    }
}

/// Serialised form of a topology: counts and capacities only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpineLeafSpec {
    pub servers_per_rack: usize,
    pub racks: usize,
    pub cores: usize,
    /// `C_c`: capacity of one endpoint-link channel, bytes/μs.
    pub server_link: f64,
    /// ToR↔core capacity per direction, bytes/μs.
    pub core_link: f64,
    /// `n_c`: channels per endpoint link.
    pub num_channels: u32,
    /// Overrides the default `n_n·n_c·C_c/2` load denominator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_capacity: Option<f64>,
}

impl SpineLeafSpec {
    /// 64 servers in 4 racks of 16, 2 cores, 10 Gbps server links and
    /// 80 Gbps core links.
    pub fn reference() -> Self {
        SpineLeafSpec {
            servers_per_rack: 16,
            racks: 4,
            cores: 2,
            server_link: 1250.0,
            core_link: 10_000.0,
            num_channels: 1,
            rate_capacity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpineLeafSpec", into = "SpineLeafSpec")]
pub struct Topology {
    spec: SpineLeafSpec,
    endpoints: Vec<EndpointId>,
    racks: Vec<Vec<EndpointId>>,
    links: Vec<Link>,
}

impl TryFrom<SpineLeafSpec> for Topology {
    type Error = Error;
    fn try_from(spec: SpineLeafSpec) -> Result<Self> {
        Topology::from_spec(spec)
    }
}

impl From<Topology> for SpineLeafSpec {
    fn from(t: Topology) -> Self {
        t.spec
    }
}

/// Builds a spine-leaf topology; `server_link` is the per-channel capacity `C_c`.
pub fn build_spine_leaf(
    servers_per_rack: usize,
    racks: usize,
    cores: usize,
    server_link: f64,
    core_link: f64,
    num_channels: u32,
) -> Result<Topology> {
    Topology::from_spec(SpineLeafSpec {
        servers_per_rack,
        racks,
        cores,
        server_link,
        core_link,
        num_channels,
        rate_capacity: None,
    })
}

impl Topology {
    pub fn from_spec(spec: SpineLeafSpec) -> Result<Self> {
        if spec.servers_per_rack == 0 || spec.racks == 0 || spec.cores == 0 || spec.num_channels == 0 {
            return Err(Error::InvalidArgument("topology counts must all be at least 1".into()));
        }
        for (name, c) in [("server_link", spec.server_link), ("core_link", spec.core_link)] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {c}")));
            }
        }
        if let Some(rc) = spec.rate_capacity {
            if !(rc > 0.0 && rc.is_finite()) {
                return Err(Error::InvalidArgument(format!("rate_capacity must be positive, got {rc}")));
            }
        }
        let n = spec.servers_per_rack * spec.racks;
        if n < 2 {
            return Err(Error::InvalidArgument("a topology needs at least 2 endpoints".into()));
        }
        let endpoints: Vec<EndpointId> = (0..n as u32).map(EndpointId).collect();
        let racks = endpoints
            .chunks(spec.servers_per_rack)
            .map(<[EndpointId]>::to_vec)
            .collect();

        let port = f64::from(spec.num_channels) * spec.server_link / 2.0;
        let mut links = Vec::with_capacity(2 * n + 2 * spec.racks * spec.cores);
        for &ep in &endpoints {
            links.push(Link {
                id: LinkId(links.len() as u32),
                kind: LinkKind::ServerUp { endpoint: ep },
                capacity: port,
            });
            links.push(Link {
                id: LinkId(links.len() as u32),
                kind: LinkKind::ServerDown { endpoint: ep },
                capacity: port,
            });
        }
        for rack in 0..spec.racks as u32 {
            for core in 0..spec.cores as u32 {
                links.push(Link {
                    id: LinkId(links.len() as u32),
                    kind: LinkKind::TorUp { rack, core },
                    capacity: spec.core_link,
                });
                links.push(Link {
                    id: LinkId(links.len() as u32),
                    kind: LinkKind::TorDown { rack, core },
                    capacity: spec.core_link,
                });
            }
        }
        Ok(Topology {
            spec,
            endpoints,
            racks,
            links,
        })
    }

    pub fn reference() -> Self {
        Topology::from_spec(SpineLeafSpec::reference()).expect("reference topology is valid")
    }

    pub fn spec(&self) -> &SpineLeafSpec {
        &self.spec
    }

    pub fn endpoints(&self) -> &[EndpointId] {
        &self.endpoints
    }

    pub fn num_endpoints(&self) -> usize {
        self.endpoints.len()
    }

    pub fn contains(&self, ep: EndpointId) -> bool {
        ep.index() < self.endpoints.len()
    }

    pub fn racks(&self) -> &[Vec<EndpointId>] {
        &self.racks
    }

    /// Racks keyed `rack_0`, `rack_1`, … as used in node-distribution specs.
    pub fn rack_map(&self) -> BTreeMap<String, Vec<EndpointId>> {
        self.racks
            .iter()
            .enumerate()
            .map(|(i, eps)| (format!("rack_{i}"), eps.clone()))
            .collect()
    }

    pub fn rack_of(&self, ep: EndpointId) -> Result<usize> {
        if !self.contains(ep) {
            return Err(Error::UnknownEndpoint(ep.0));
        }
        Ok(ep.index() / self.spec.servers_per_rack)
    }

    pub fn core_count(&self) -> usize {
        self.spec.cores
    }

    pub fn num_channels(&self) -> u32 {
        self.spec.num_channels
    }

    /// `C_c`, bytes/μs per channel.
    pub fn channel_capacity(&self) -> f64 {
        self.spec.server_link
    }

    /// Per-direction capacity of one endpoint port, `n_c·C_c/2`.
    pub fn port_capacity(&self) -> f64 {
        f64::from(self.spec.num_channels) * self.spec.server_link / 2.0
    }

    /// Load denominator `C_t`; defaults to `n_n·n_c·C_c/2`.
    pub fn rate_capacity(&self) -> f64 {
        self.spec
            .rate_capacity
            .unwrap_or(self.num_endpoints() as f64 * self.port_capacity())
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    pub fn source_port(&self, ep: EndpointId) -> LinkId {
        LinkId(2 * ep.0)
    }

    pub fn destination_port(&self, ep: EndpointId) -> LinkId {
        LinkId(2 * ep.0 + 1)
    }

    fn tor_link(&self, rack: usize, core: usize, up: bool) -> LinkId {
        let base = 2 * self.num_endpoints() + 2 * (rack * self.spec.cores + core);
        LinkId((base + usize::from(!up)) as u32)
    }

    /// Fixed route: two hops inside a rack, four hops via one core between
    /// racks, with the core picked by a hash of the pair.
    pub fn path(&self, src: EndpointId, dst: EndpointId) -> Result<Path> {
        let rs = self.rack_of(src)?;
        let rd = self.rack_of(dst)?;
        if src == dst {
            return Err(Error::InvalidArgument(format!("path from endpoint {src} to itself")));
        }
        let up = self.source_port(src);
        let down = self.destination_port(dst);
        if rs == rd {
            return Ok(Path(alloc::vec![up, down]));
        }
        let core = (derive_seed(0, &[u64::from(src.0), u64::from(dst.0)]) % self.spec.cores as u64) as usize;
        Ok(Path(alloc::vec![
            up,
            self.tor_link(rs, core, true),
            self.tor_link(rd, core, false),
            down
        ]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_instance_matches_published_dimensions() {
        let t = Topology::reference();
        assert_eq!(t.num_endpoints(), 64);
        assert_eq!(t.links().len(), 2 * (64 + 8));
        assert_eq!(t.rate_capacity(), 40_000.0);
        // 16 servers × 1250 B/μs into 2 × 10000 B/μs of uplink
        let s = t.spec();
        assert_eq!(s.servers_per_rack as f64 * s.server_link / (s.cores as f64 * s.core_link), 1.0);
        let port_sum: f64 = t
            .links()
            .iter()
            .filter(|l| matches!(l.kind, LinkKind::ServerUp { .. }))
            .map(|l| l.capacity)
            .sum();
        assert_eq!(port_sum, t.rate_capacity());
    }

    #[test]
    fn minimal_topology() {
        let t = build_spine_leaf(1, 2, 1, 100.0, 100.0, 1).unwrap();
        assert_eq!(t.num_endpoints(), 2);
        assert_eq!(t.path(EndpointId(0), EndpointId(1)).unwrap().links().len(), 4);
        assert!(build_spine_leaf(1, 1, 1, 100.0, 100.0, 1).is_err());
        assert!(build_spine_leaf(0, 2, 1, 100.0, 100.0, 1).is_err());
    }

    #[test]
    fn paths_are_two_or_four_hops() {
        let t = Topology::reference();
        let p = t.path(EndpointId(0), EndpointId(5)).unwrap();
        assert_eq!(p.links().len(), 2);
        assert!(p.links().iter().all(|l| matches!(
            t.link(*l).kind,
            LinkKind::ServerUp { .. } | LinkKind::ServerDown { .. }
        )));
        let p = t.path(EndpointId(0), EndpointId(40)).unwrap();
        assert_eq!(p.links().len(), 4);
        let cores: Vec<u32> = p
            .links()
            .iter()
            .filter_map(|l| match t.link(*l).kind {
                LinkKind::TorUp { core, .. } | LinkKind::TorDown { core, .. } => Some(core),
                _ => None,
            })
            .collect();
        assert_eq!(cores.len(), 2);
        assert_eq!(cores[0], cores[1]);
        assert_eq!(p, t.path(EndpointId(0), EndpointId(40)).unwrap());
        assert_eq!(p.links()[0], t.source_port(EndpointId(0)));
        assert_eq!(p.links()[3], t.destination_port(EndpointId(40)));
    }

    #[test]
    fn path_errors() {
        let t = Topology::reference();
        assert!(matches!(t.path(EndpointId(0), EndpointId(64)), Err(Error::UnknownEndpoint(64))));
        assert!(t.path(EndpointId(3), EndpointId(3)).is_err());
    }

    #[test]
    fn both_cores_are_used() {
        let t = Topology::reference();
        let mut seen = [false; 2];
        for d in 16..64 {
            let p = t.path(EndpointId(0), EndpointId(d)).unwrap();
            if let LinkKind::TorUp { core, .. } = t.link(p.links()[1]).kind {
                seen[core as usize] = true;
            }
        }
        assert!(seen[0] && seen[1]);
    }
}
