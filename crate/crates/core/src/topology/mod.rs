//! Substrate and virtual network models, plus the resource ledger.
//!
//! A [`SubstrateNetwork`] is a multi-domain, undirected, weighted graph. Nodes
//! carry CPU capacity and a unit price; links carry bandwidth, a unit price and
//! a delay. Residual resources only change through [`SubstrateNetwork::allocate`]
//! and [`SubstrateNetwork::release`], which are all-or-nothing.
//!
//! Generated capacities and demands are multiples of [`QUANTUM`], which keeps
//! every ledger sum exact in `f64`: any interleaving of allocations and
//! releases returns residuals bit-identical to the capacities.

mod generate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingResult;

pub use generate::{generate_substrate, generate_vnr, GeneratorConfig, IntSpan, Span, VnrConfig};

/// Resolution of generated capacities and demands (2^-10).
pub const QUANTUM: f64 = 1.0 / 1024.0;

pub(crate) fn quantize(value: f64) -> f64 {
    (value / QUANTUM).round() * QUANTUM
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
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

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstrateNode {
    pub id: NodeId,
    pub domain: usize,
    pub is_boundary: bool,
    pub cpu_capacity: f64,
    pub cpu_residual: f64,
    pub cpu_unit_price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkKind {
    IntraDomain,
    InterDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstrateLink {
    pub id: LinkId,
    /// Endpoints, stored with the smaller id first.
    pub endpoints: (NodeId, NodeId),
    pub kind: LinkKind,
    pub bw_capacity: f64,
    pub bw_residual: f64,
    pub bw_unit_price: f64,
    pub delay: f64,
}

impl SubstrateLink {
    pub fn other(&self, node: NodeId) -> NodeId {
        if self.endpoints.0 == node {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }

    pub fn touches(&self, node: NodeId) -> bool {
        self.endpoints.0 == node || self.endpoints.1 == node
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualNode {
    pub id: usize,
    pub cpu_demand: f64,
    pub candidate_domains: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualLink {
    pub endpoints: (usize, usize),
    pub bw_demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualNetworkRequest {
    pub id: u64,
    pub nodes: Vec<VirtualNode>,
    pub links: Vec<VirtualLink>,
    pub arrival_time: f64,
    pub lifetime: f64,
}

/// One virtual node together with the virtual links incident to it, the unit
/// the global controller hands to local controllers.
#[derive(Debug, Clone, PartialEq)]
pub struct VnrSubgraph {
    pub node: usize,
    pub candidate_domains: Vec<usize>,
    pub cpu_demand: f64,
    /// Indices into [`VirtualNetworkRequest::links`].
    pub incident_links: Vec<usize>,
}

impl VirtualNetworkRequest {
    pub fn validate(&self) -> Result<(), TopologyError> {
        let invalid = |msg: String| Err(TopologyError::InvalidRequest { id: self.id, reason: msg });
        if self.nodes.is_empty() {
            return invalid("request has no virtual nodes".into());
        }
        if !(self.lifetime > 0.0) {
            return invalid(format!("lifetime {} is not positive", self.lifetime));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return invalid(format!("virtual node at index {i} has id {}", n.id));
            }
            if !(n.cpu_demand > 0.0) {
                return invalid(format!("virtual node {i} has non-positive demand"));
            }
            if n.candidate_domains.is_empty() {
                return invalid(format!("virtual node {i} has no candidate domain"));
            }
        }
        for (i, l) in self.links.iter().enumerate() {
            let (a, b) = l.endpoints;
            if a == b || a >= self.nodes.len() || b >= self.nodes.len() {
                return invalid(format!("virtual link {i} has bad endpoints ({a}, {b})"));
            }
            if !(l.bw_demand > 0.0) {
                return invalid(format!("virtual link {i} has non-positive demand"));
            }
        }
        if !self.is_connected() {
            return invalid("demand graph is disconnected".into());
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        let pairs: Vec<(usize, usize)> = self.links.iter().map(|l| l.endpoints).collect();
        connected(self.nodes.len(), &pairs)
    }

    /// Splits the request into per-node subgraphs.
    pub fn subgraphs(&self) -> Vec<VnrSubgraph> {
        self.nodes
            .iter()
            .map(|n| VnrSubgraph {
                node: n.id,
                candidate_domains: n.candidate_domains.clone(),
                cpu_demand: n.cpu_demand,
                incident_links: self
                    .links
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| l.endpoints.0 == n.id || l.endpoints.1 == n.id)
                    .map(|(i, _)| i)
                    .collect(),
            })
            .collect()
    }

    pub fn departure_time(&self) -> f64 {
        self.arrival_time + self.lifetime
    }
}

pub(crate) fn connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    if n <= 1 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in pairs {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "id")]
pub enum Resource {
    Node(NodeId),
    Link(LinkId),
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resource::Node(n) => write!(f, "node {n}"),
            Resource::Link(l) => write!(f, "link {l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid request {id}: {reason}")]
    InvalidRequest { id: u64, reason: String },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("domain {domain} stayed disconnected after {attempts} generation attempts")]
    Disconnected { domain: usize, attempts: usize },
    #[error("virtual network request stayed disconnected after {attempts} generation attempts")]
    DisconnectedRequest { attempts: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LedgerError {
    #[error("insufficient resources on {resource}: demand {demand} exceeds residual {residual}")]
    InsufficientResources { resource: Resource, demand: f64, residual: f64 },
    #[error("request {0} is not currently allocated")]
    DoubleRelease(u64),
    #[error("request {0} is already allocated")]
    AlreadyAllocated(u64),
    #[error("unknown {0}")]
    Unknown(Resource),
    #[error("request {0} was rejected and cannot be allocated")]
    NotAccepted(u64),
}

/// Resources held by one allocated request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reservation {
    pub vnr_id: u64,
    pub nodes: Vec<(NodeId, f64)>,
    pub links: Vec<(LinkId, f64)>,
}

#[derive(Serialize, Deserialize)]
struct NetworkRecord {
    domains: usize,
    nodes: Vec<SubstrateNode>,
    links: Vec<SubstrateLink>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    reservations: Vec<Reservation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkRecord", into = "NetworkRecord")]
pub struct SubstrateNetwork {
    domains: usize,
    nodes: Vec<SubstrateNode>,
    links: Vec<SubstrateLink>,
    reservations: BTreeMap<u64, Reservation>,
    adjacency: Vec<Vec<(NodeId, LinkId)>>,
    pair_index: HashMap<(NodeId, NodeId), LinkId>,
    domain_nodes: Vec<Vec<NodeId>>,
    domain_links: Vec<Vec<LinkId>>,
}

impl TryFrom<NetworkRecord> for SubstrateNetwork {
    type Error = TopologyError;

    fn try_from(rec: NetworkRecord) -> Result<Self, Self::Error> {
        let mut net = SubstrateNetwork::new(rec.domains, rec.nodes, rec.links)?;
        for r in rec.reservations {
            net.reservations.insert(r.vnr_id, r);
        }
        Ok(net)
    }
}

impl From<SubstrateNetwork> for NetworkRecord {
    fn from(net: SubstrateNetwork) -> Self {
        NetworkRecord {
            domains: net.domains,
            nodes: net.nodes,
            links: net.links,
            reservations: net.reservations.into_values().collect(),
        }
    }
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl SubstrateNetwork {
    /// Builds a network and checks every structural invariant. Node and link
    /// ids must equal their position in the input vectors.
    pub fn new(
        domains: usize,
        nodes: Vec<SubstrateNode>,
        mut links: Vec<SubstrateLink>,
    ) -> Result<Self, TopologyError> {
        let bad = |m: String| Err(TopologyError::InvalidNetwork(m));
        if domains == 0 {
            return bad("at least one domain is required".into());
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.id.index() != i {
                return bad(format!("node at index {i} has id {}", n.id));
            }
            if n.domain >= domains {
                return bad(format!("node {} is in unknown domain {}", n.id, n.domain));
            }
            if !(0.0..=n.cpu_capacity).contains(&n.cpu_residual) {
                return bad(format!("node {} residual outside [0, capacity]", n.id));
            }
            if !(n.cpu_unit_price > 0.0) {
                return bad(format!("node {} price must be positive", n.id));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut pair_index = HashMap::with_capacity(links.len());
        let mut domain_links = vec![Vec::new(); domains];
        for (i, l) in links.iter_mut().enumerate() {
            if l.id.index() != i {
                return bad(format!("link at index {i} has id {}", l.id));
            }
            let (a, b) = ordered(l.endpoints.0, l.endpoints.1);
            l.endpoints = (a, b);
            if a == b {
                return bad(format!("link {} is a self-loop", l.id));
            }
            let (Some(na), Some(nb)) = (nodes.get(a.index()), nodes.get(b.index())) else {
                return bad(format!("link {} has an unknown endpoint", l.id));
            };
            match l.kind {
                LinkKind::IntraDomain if na.domain != nb.domain => {
                    return bad(format!("intra-domain link {} spans two domains", l.id));
                }
                LinkKind::InterDomain if na.domain == nb.domain || !na.is_boundary || !nb.is_boundary => {
                    return bad(format!(
                        "inter-domain link {} must join boundary nodes of different domains",
                        l.id
                    ));
                }
                _ => {}
            }
            if !(0.0..=l.bw_capacity).contains(&l.bw_residual) {
                return bad(format!("link {} residual outside [0, capacity]", l.id));
            }
            if !(l.bw_unit_price > 0.0) || l.delay < 0.0 {
                return bad(format!("link {} needs a positive price and non-negative delay", l.id));
            }
            if pair_index.insert((a, b), l.id).is_some() {
                return bad(format!("duplicate link between {a} and {b}"));
            }
            adjacency[a.index()].push((b, l.id));
            adjacency[b.index()].push((a, l.id));
            if l.kind == LinkKind::IntraDomain {
                domain_links[na.domain].push(l.id);
            }
        }
        for adj in &mut adjacency {
            adj.sort();
        }
        let mut domain_nodes = vec![Vec::new(); domains];
        for n in &nodes {
            domain_nodes[n.domain].push(n.id);
        }
        Ok(SubstrateNetwork {
            domains,
            nodes,
            links,
            reservations: BTreeMap::new(),
            adjacency,
            pair_index,
            domain_nodes,
            domain_links,
        })
    }

    pub fn domains(&self) -> usize {
        self.domains
    }

    pub fn nodes(&self) -> &[SubstrateNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[SubstrateLink] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &SubstrateNode {
        &self.nodes[id.index()]
    }

    pub fn link(&self, id: LinkId) -> &SubstrateLink {
        &self.links[id.index()]
    }

    pub fn get_node(&self, id: NodeId) -> Option<&SubstrateNode> {
        self.nodes.get(id.index())
    }

    pub fn get_link(&self, id: LinkId) -> Option<&SubstrateLink> {
        self.links.get(id.index())
    }

    /// Undirected lookup: `link_between(u, v) == link_between(v, u)`.
    pub fn link_between(&self, u: NodeId, v: NodeId) -> Option<LinkId> {
        self.pair_index.get(&ordered(u, v)).copied()
    }

    /// Neighbours of `node` with the connecting link, sorted by neighbour id.
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, LinkId)] {
        &self.adjacency[node.index()]
    }

    pub fn domain_nodes(&self, domain: usize) -> &[NodeId] {
        &self.domain_nodes[domain]
    }

    /// Intra-domain links of `domain`.
    pub fn domain_links(&self, domain: usize) -> &[LinkId] {
        &self.domain_links[domain]
    }

    pub fn boundary_nodes(&self, domain: usize) -> impl Iterator<Item = NodeId> + '_ {
        self.domain_nodes[domain].iter().copied().filter(|&n| self.node(n).is_boundary)
    }

    pub fn inter_domain_links(&self) -> impl Iterator<Item = &SubstrateLink> + '_ {
        self.links.iter().filter(|l| l.kind == LinkKind::InterDomain)
    }

    /// Domain owning an intra-domain link; `None` for inter-domain links.
    pub fn link_domain(&self, id: LinkId) -> Option<usize> {
        let l = self.link(id);
        match l.kind {
            LinkKind::IntraDomain => Some(self.node(l.endpoints.0).domain),
            LinkKind::InterDomain => None,
        }
    }

    /// Mean capacity of the intra-domain links of `domain` (0 when it has none).
    pub fn domain_mean_capacity(&self, domain: usize) -> f64 {
        let links = self.domain_links(domain);
        if links.is_empty() {
            return 0.0;
        }
        links.iter().map(|&l| self.link(l).bw_capacity).sum::<f64>() / links.len() as f64
    }

    pub fn reservations(&self) -> impl Iterator<Item = &Reservation> + '_ {
        self.reservations.values()
    }

    pub fn is_allocated(&self, vnr_id: u64) -> bool {
        self.reservations.contains_key(&vnr_id)
    }

    /// True when every residual equals its capacity exactly.
    pub fn is_pristine(&self) -> bool {
        self.nodes.iter().all(|n| n.cpu_residual == n.cpu_capacity)
            && self.links.iter().all(|l| l.bw_residual == l.bw_capacity)
    }

    /// Fingerprint of every residual value, bit for bit.
    pub fn ledger_digest(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for n in &self.nodes {
            n.cpu_residual.to_bits().hash(&mut h);
        }
        for l in &self.links {
            l.bw_residual.to_bits().hash(&mut h);
        }
        self.reservations.len().hash(&mut h);
        h.finish()
    }

    /// Reserves everything an accepted embedding uses. Nothing changes unless
    /// every node and link has enough residual capacity for its summed demand.
    pub fn allocate(&mut self, result: &EmbeddingResult) -> Result<(), LedgerError> {
        if !result.accepted {
            return Err(LedgerError::NotAccepted(result.vnr_id));
        }
        if self.reservations.contains_key(&result.vnr_id) {
            return Err(LedgerError::AlreadyAllocated(result.vnr_id));
        }
        let (node_use, link_use) = result.resource_usage();
        for (&n, &demand) in &node_use {
            let node = self.get_node(n).ok_or(LedgerError::Unknown(Resource::Node(n)))?;
            if node.cpu_residual < demand {
                return Err(LedgerError::InsufficientResources {
                    resource: Resource::Node(n),
                    demand,
                    residual: node.cpu_residual,
                });
            }
        }
        for (&l, &demand) in &link_use {
            let link = self.get_link(l).ok_or(LedgerError::Unknown(Resource::Link(l)))?;
            if link.bw_residual < demand {
                return Err(LedgerError::InsufficientResources {
                    resource: Resource::Link(l),
                    demand,
                    residual: link.bw_residual,
                });
            }
        }
        for (&n, &demand) in &node_use {
            self.nodes[n.index()].cpu_residual -= demand;
        }
        for (&l, &demand) in &link_use {
            self.links[l.index()].bw_residual -= demand;
        }
        self.reservations.insert(
            result.vnr_id,
            Reservation {
                vnr_id: result.vnr_id,
                nodes: node_use.into_iter().collect(),
                links: link_use.into_iter().collect(),
            },
        );
        Ok(())
    }

    /// Returns the resources of a previously allocated embedding.
    pub fn release(&mut self, result: &EmbeddingResult) -> Result<(), LedgerError> {
        self.release_id(result.vnr_id).map(|_| ())
    }

    pub fn release_id(&mut self, vnr_id: u64) -> Result<Reservation, LedgerError> {
        let r = self.reservations.remove(&vnr_id).ok_or(LedgerError::DoubleRelease(vnr_id))?;
        for &(n, demand) in &r.nodes {
            let node = &mut self.nodes[n.index()];
            node.cpu_residual = (node.cpu_residual + demand).min(node.cpu_capacity);
        }
        for &(l, demand) in &r.links {
            let link = &mut self.links[l.index()];
            link.bw_residual = (link.bw_residual + demand).min(link.bw_capacity);
        }
        Ok(r)
    }

    /// Sets a residual directly. Intended for building scenarios, not for the
    /// simulation loop, which goes through allocate/release.
    pub fn set_link_residual(&mut self, id: LinkId, residual: f64) {
        let l = &mut self.links[id.index()];
        l.bw_residual = residual.clamp(0.0, l.bw_capacity);
    }

    pub fn set_node_residual(&mut self, id: NodeId, residual: f64) {
        let n = &mut self.nodes[id.index()];
        n.cpu_residual = residual.clamp(0.0, n.cpu_capacity);
    }

    /// Number of nodes and mean intra-domain link capacity, for summaries.
    pub fn summary(&self) -> NetworkSummary {
        let intra: Vec<f64> = self
            .links
            .iter()
            .filter(|l| l.kind == LinkKind::IntraDomain)
            .map(|l| l.bw_capacity)
            .collect();
        NetworkSummary {
            domains: self.domains,
            nodes: self.nodes.len(),
            boundary_nodes: self.nodes.iter().filter(|n| n.is_boundary).count(),
            links: self.links.len(),
            inter_domain_links: self.links.len() - intra.len(),
            mean_bandwidth: if intra.is_empty() { 0.0 } else { intra.iter().sum::<f64>() / intra.len() as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkSummary {
    pub domains: usize,
    pub nodes: usize,
    pub boundary_nodes: usize,
    pub links: usize,
    pub inter_domain_links: usize,
    pub mean_bandwidth: f64,
}

impl fmt::Display for NetworkSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "domains={} nodes={} boundary={} links={} inter={} mean_bw={:.3}",
            self.domains, self.nodes, self.boundary_nodes, self.links, self.inter_domain_links, self.mean_bandwidth
        )
    }
}


#[cfg(test)]
mod tests {
    use super::testutil::network;
    use super::*;
    use crate::embedding::EmbeddingResult;
    use crate::routing::SubstratePath;

    fn line() -> SubstrateNetwork {
        // 0 - 1 - 2, one domain
        network(
            1,
            &[(0, true, 100.0, 1.0), (0, false, 100.0, 1.0), (0, true, 100.0, 1.0)],
            &[(0, 1, 50.0, 1.0, 1.0), (1, 2, 30.0, 1.0, 1.0)],
        )
    }

    fn result_on(net: &SubstrateNetwork, id: u64, hosts: &[u32], cpu: &[f64], bw: f64) -> EmbeddingResult {
        let path = SubstratePath::from_nodes(net, &[NodeId(0), NodeId(1), NodeId(2)]).unwrap();
        EmbeddingResult::accepted_for_test(
            id,
            hosts.iter().map(|&h| NodeId(h)).collect(),
            cpu.to_vec(),
            vec![path],
            vec![bw],
        )
    }

    #[test]
    fn allocate_and_release_arithmetic() {
        let mut net = line();
        let r = result_on(&net, 1, &[0, 2], &[10.0, 5.0], 30.0);
        net.allocate(&r).unwrap();
        assert_eq!(net.node(NodeId(0)).cpu_residual, 90.0);
        assert_eq!(net.node(NodeId(2)).cpu_residual, 95.0);
        assert_eq!(net.link(LinkId(0)).bw_residual, 20.0);
        assert_eq!(net.link(LinkId(1)).bw_residual, 0.0);
        net.release(&r).unwrap();
        assert!(net.is_pristine());
    }

    #[test]
    fn insufficient_bandwidth_mutates_nothing() {
        let mut net = line();
        let before = net.ledger_digest();
        let r = result_on(&net, 1, &[0, 2], &[10.0, 5.0], 31.0);
        let err = net.allocate(&r).unwrap_err();
        assert_eq!(
            err,
            LedgerError::InsufficientResources { resource: Resource::Link(LinkId(1)), demand: 31.0, residual: 30.0 }
        );
        assert_eq!(net.ledger_digest(), before);
    }

    #[test]
    fn release_unknown_is_double_release() {
        let mut net = line();
        assert_eq!(net.release_id(9).unwrap_err(), LedgerError::DoubleRelease(9));
        let r = result_on(&net, 1, &[0, 2], &[1.0, 1.0], 1.0);
        net.allocate(&r).unwrap();
        assert_eq!(net.allocate(&r).unwrap_err(), LedgerError::AlreadyAllocated(1));
        net.release(&r).unwrap();
        assert_eq!(net.release(&r).unwrap_err(), LedgerError::DoubleRelease(1));
    }

    #[test]
    fn undirected_lookup() {
        let net = line();
        for l in net.links() {
            let (a, b) = l.endpoints;
            assert_eq!(net.link_between(a, b), Some(l.id));
            assert_eq!(net.link_between(b, a), Some(l.id));
        }
        assert_eq!(net.link_between(NodeId(0), NodeId(2)), None);
    }

    #[test]
    fn rejects_bad_structure() {
        let nodes = vec![
            SubstrateNode { id: NodeId(0), domain: 0, is_boundary: false, cpu_capacity: 1.0, cpu_residual: 1.0, cpu_unit_price: 1.0 },
            SubstrateNode { id: NodeId(1), domain: 1, is_boundary: false, cpu_capacity: 1.0, cpu_residual: 1.0, cpu_unit_price: 1.0 },
        ];
        let link = SubstrateLink {
            id: LinkId(0),
            endpoints: (NodeId(0), NodeId(1)),
            kind: LinkKind::InterDomain,
            bw_capacity: 1.0,
            bw_residual: 1.0,
            bw_unit_price: 1.0,
            delay: 1.0,
        };
        assert!(SubstrateNetwork::new(2, nodes.clone(), vec![link.clone()]).is_err());
        let mut dup = link.clone();
        dup.id = LinkId(1);
        let mut boundary = nodes;
        boundary[0].is_boundary = true;
        boundary[1].is_boundary = true;
        assert!(SubstrateNetwork::new(2, boundary.clone(), vec![link.clone()]).is_ok());
        assert!(SubstrateNetwork::new(2, boundary, vec![link, dup]).is_err());
    }

    #[test]
    fn json_round_trip_rebuilds_indices() {
        let net = line();
        let json = serde_json::to_string(&net).unwrap();
        let back: SubstrateNetwork = serde_json::from_str(&json).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.neighbors(NodeId(1)).len(), 2);
    }

    #[test]
    fn generated_network_survives_json_bit_for_bit() {
        for seed in 0..5 {
            let net = generate_substrate(&GeneratorConfig::default(), seed).unwrap();
            let json = serde_json::to_string(&net).unwrap();
            let back: SubstrateNetwork = serde_json::from_str(&json).unwrap();
            assert_eq!(back, net, "seed {seed}");
            assert_eq!(serde_json::to_string(&back).unwrap(), json);
        }
    }
}
