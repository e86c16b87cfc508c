//! The local controllers' view of their domains and the aggregated network
//! handed to the global controller.
//!
//! Each domain uploads only three things: its candidate nodes with residual
//! CPU and price, the inter-domain links it terminates, and per-boundary
//! aggregated links standing in for the collapsed interior. Interior node ids
//! never appear in a view except inside candidate records.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::routing::{max_bandwidth_path, NetworkView, Qualification, ThresholdBasis};
use crate::topology::{LinkId, NodeId, SubstrateNetwork};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AbstractionOptions {
    /// Divide by `count + 1` instead of `count` when averaging.
    pub plus_one: bool,
    pub basis: ThresholdBasis,
}

/// Mean link bandwidth of a domain, the admission threshold for its links.
pub fn domain_average_bandwidth(bandwidths: &[f64], plus_one: bool) -> f64 {
    if bandwidths.is_empty() {
        return 0.0;
    }
    let denom = bandwidths.len() + usize::from(plus_one);
    bandwidths.iter().sum::<f64>() / denom as f64
}

/// Thresholds for every domain under the current ledger state.
pub fn domain_thresholds(network: &SubstrateNetwork, opts: AbstractionOptions) -> Qualification {
    let thresholds = (0..network.domains())
        .map(|d| {
            let bws: Vec<f64> = network
                .domain_links(d)
                .iter()
                .map(|&l| {
                    let rec = network.link(l);
                    match opts.basis {
                        ThresholdBasis::Residual => rec.bw_residual,
                        ThresholdBasis::Capacity => rec.bw_capacity,
                    }
                })
                .collect();
            domain_average_bandwidth(&bws, opts.plus_one)
        })
        .collect();
    Qualification { basis: opts.basis, thresholds }
}

/// Best qualified route from a candidate to one boundary node of its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLink {
    pub boundary: NodeId,
    /// Bottleneck residual bandwidth of the route.
    pub bandwidth: f64,
    /// Summed unit price of the route.
    pub unit_price: f64,
    pub hops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateNode {
    pub substrate_node: NodeId,
    pub domain: usize,
    pub is_boundary: bool,
    pub cpu_residual: f64,
    pub cpu_unit_price: f64,
    /// Qualified hops to the nearest boundary node.
    pub hops: usize,
    pub links_to_boundary: Vec<BoundaryLink>,
}

/// Boundary nodes, plus every node reachable from them hop by hop over links
/// with nonzero residual whose bandwidth meets the domain threshold.
pub fn select_candidate_nodes(
    network: &SubstrateNetwork,
    domain: usize,
    qualification: &Qualification,
) -> Vec<CandidateNode> {
    let view = NetworkView::new(network).with_qualification(qualification).scoped(Some(domain));
    let boundaries: Vec<NodeId> = network.boundary_nodes(domain).collect();

    let mut hops: BTreeMap<NodeId, usize> = boundaries.iter().map(|&b| (b, 0)).collect();
    let mut queue: VecDeque<NodeId> = boundaries.iter().copied().collect();
    while let Some(u) = queue.pop_front() {
        let h = hops[&u];
        for &(v, l) in network.neighbors(u) {
            if !hops.contains_key(&v) && view.admits(l, 0.0, true) {
                hops.insert(v, h + 1);
                queue.push_back(v);
            }
        }
    }

    hops.into_iter()
        .map(|(id, h)| {
            let node = network.node(id);
            let links_to_boundary = boundaries
                .iter()
                .filter(|&&b| b != id)
                .filter_map(|&b| {
                    let path = max_bandwidth_path(&view, id, b, 0.0, true).ok()?;
                    Some(BoundaryLink {
                        boundary: b,
                        bandwidth: path.bottleneck_bw.unwrap_or(f64::INFINITY),
                        unit_price: path.total_unit_price,
                        hops: path.hops(),
                    })
                })
                .collect();
            CandidateNode {
                substrate_node: id,
                domain,
                is_boundary: node.is_boundary,
                cpu_residual: node.cpu_residual,
                cpu_unit_price: node.cpu_unit_price,
                hops: h,
                links_to_boundary,
            }
        })
        .collect()
}

/// The single synthetic node replacing a domain's non-boundary interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateNode {
    pub domain: usize,
    pub members: usize,
}

/// Boundary node to aggregate node, merging every interior link of that
/// boundary node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedLink {
    pub boundary: NodeId,
    pub bandwidth: f64,
    /// Bandwidth-weighted mean of the member link prices.
    pub unit_price: f64,
    pub members: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedDomainView {
    pub domain: usize,
    pub boundary_nodes: Vec<NodeId>,
    pub aggregate_node: AggregateNode,
    pub aggregated_links: Vec<AggregatedLink>,
    pub candidate_nodes: Vec<CandidateNode>,
    pub threshold: f64,
}

/// Collapses the domain interior into one node. Member bandwidth follows the
/// threshold basis (residual by default); links with no residual are not
/// members.
pub fn aggregate_domain(
    network: &SubstrateNetwork,
    domain: usize,
    candidates: Vec<CandidateNode>,
    qualification: &Qualification,
) -> AggregatedDomainView {
    let boundary_nodes: Vec<NodeId> = network.boundary_nodes(domain).collect();
    let members = network.domain_nodes(domain).len() - boundary_nodes.len();
    let aggregated_links = boundary_nodes
        .iter()
        .filter_map(|&b| {
            let mut bw = 0.0;
            let mut weighted = 0.0;
            let mut count = 0;
            for &(v, l) in network.neighbors(b) {
                let rec = network.link(l);
                let inner = network.node(v);
                if inner.domain != domain || inner.is_boundary || rec.bw_residual <= 0.0 {
                    continue;
                }
                let w = match qualification.basis {
                    ThresholdBasis::Residual => rec.bw_residual,
                    ThresholdBasis::Capacity => rec.bw_capacity,
                };
                bw += w;
                weighted += w * rec.bw_unit_price;
                count += 1;
            }
            (count > 0).then(|| AggregatedLink { boundary: b, bandwidth: bw, unit_price: weighted / bw, members: count })
        })
        .collect();
    AggregatedDomainView {
        domain,
        boundary_nodes,
        aggregate_node: AggregateNode { domain, members },
        aggregated_links,
        candidate_nodes: candidates,
        threshold: qualification.thresholds.get(domain).copied().unwrap_or(0.0),
    }
}

/// What the global controller knows about an inter-domain link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterDomainLink {
    pub link: LinkId,
    pub endpoints: (NodeId, NodeId),
    pub bandwidth: f64,
    pub unit_price: f64,
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("global view is disconnected: domain {0} is unreachable")]
    DisconnectedGlobalView(usize),
    #[error("expected {expected} domain views, got {got}")]
    MissingView { expected: usize, got: usize },
}

/// The pseudo-topology the global controller pre-maps on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalCandidateNetwork {
    pub views: Vec<AggregatedDomainView>,
    pub inter_domain_links: Vec<InterDomainLink>,
    #[serde(skip)]
    index: GcnIndex,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct GcnIndex {
    /// Candidate records keyed by node: (boundary, bandwidth, price).
    records: BTreeMap<NodeId, Vec<(NodeId, f64, f64)>>,
    candidates: BTreeMap<NodeId, (usize, bool)>,
    /// Boundary nodes in a stable order, and their position.
    boundaries: Vec<NodeId>,
    boundary_pos: BTreeMap<NodeId, usize>,
    /// Ways out of each node to a boundary: (boundary position, bandwidth,
    /// price). A boundary node exits through itself for free.
    exits: HashMap<NodeId, Vec<(usize, f64, f64)>>,
}

pub fn build_global_candidate_network(
    views: Vec<AggregatedDomainView>,
    inter_domain_links: Vec<InterDomainLink>,
) -> Result<GlobalCandidateNetwork, AbstractionError> {
    let domains = views.len();
    for (i, v) in views.iter().enumerate() {
        if v.domain != i {
            return Err(AbstractionError::MissingView { expected: domains, got: i });
        }
    }
    let mut index = GcnIndex::default();
    let mut domain_of = BTreeMap::new();
    for v in &views {
        for &b in &v.boundary_nodes {
            domain_of.insert(b, v.domain);
            index.boundary_pos.insert(b, index.boundaries.len());
            index.boundaries.push(b);
        }
        for c in &v.candidate_nodes {
            index.candidates.insert(c.substrate_node, (c.domain, c.is_boundary));
            index.records.insert(
                c.substrate_node,
                c.links_to_boundary.iter().map(|r| (r.boundary, r.bandwidth, r.unit_price)).collect(),
            );
        }
    }

    for (&c, recs) in &index.records {
        let out = recs.iter().filter_map(|&(b, bw, price)| index.boundary_pos.get(&b).map(|&i| (i, bw, price))).collect();
        index.exits.insert(c, out);
    }
    for (&b, &i) in &index.boundary_pos {
        index.exits.insert(b, vec![(i, f64::INFINITY, 0.0)]);
    }

    // Domain-level reachability over inter-domain links with bandwidth left.
    if domains > 0 {
        let mut seen = BTreeSet::from([0usize]);
        let mut stack = vec![0usize];
        while let Some(d) = stack.pop() {
            for l in inter_domain_links.iter().filter(|l| l.bandwidth > 0.0) {
                let (Some(&a), Some(&b)) = (domain_of.get(&l.endpoints.0), domain_of.get(&l.endpoints.1)) else {
                    continue;
                };
                for (from, to) in [(a, b), (b, a)] {
                    if from == d && seen.insert(to) {
                        stack.push(to);
                    }
                }
            }
        }
        if let Some(missing) = (0..domains).find(|d| !seen.contains(d)) {
            return Err(AbstractionError::DisconnectedGlobalView(missing));
        }
    }

    Ok(GlobalCandidateNetwork { views, inter_domain_links, index })
}

/// Assembles views for every domain from the current ledger state.
pub fn global_view(
    network: &SubstrateNetwork,
    opts: AbstractionOptions,
) -> Result<(GlobalCandidateNetwork, Qualification), AbstractionError> {
    let q = domain_thresholds(network, opts);
    let views = (0..network.domains())
        .map(|d| aggregate_domain(network, d, select_candidate_nodes(network, d, &q), &q))
        .collect();
    let inter = network
        .inter_domain_links()
        .map(|l| InterDomainLink {
            link: l.id,
            endpoints: l.endpoints,
            bandwidth: l.bw_residual,
            unit_price: l.bw_unit_price,
            delay: l.delay,
        })
        .collect();
    Ok((build_global_candidate_network(views, inter)?, q))
}

impl GlobalCandidateNetwork {
    pub fn candidates(&self) -> impl Iterator<Item = &CandidateNode> + '_ {
        self.views.iter().flat_map(|v| v.candidate_nodes.iter())
    }

    pub fn candidate(&self, node: NodeId) -> Option<&CandidateNode> {
        let (domain, _) = self.index.candidates.get(&node)?;
        self.views[*domain].candidate_nodes.iter().find(|c| c.substrate_node == node)
    }

    pub fn is_candidate(&self, node: NodeId) -> bool {
        self.index.candidates.contains_key(&node)
    }

    /// Every node id the global controller can see.
    pub fn exposed_nodes(&self) -> BTreeSet<NodeId> {
        let mut out: BTreeSet<NodeId> = self.index.candidates.keys().copied().collect();
        out.extend(self.index.boundaries.iter().copied());
        for l in &self.inter_domain_links {
            out.insert(l.endpoints.0);
            out.insert(l.endpoints.1);
        }
        out
    }

    /// Adjacency of the pricing graph: candidate records in both directions,
    /// plus inter-domain links. Only edges with at least `demand` bandwidth.
    pub fn edges(&self, demand: f64) -> BTreeMap<NodeId, Vec<(NodeId, f64)>> {
        let mut adj: BTreeMap<NodeId, Vec<(NodeId, f64)>> = BTreeMap::new();
        for (&c, recs) in &self.index.records {
            for &(b, bw, price) in recs {
                if bw >= demand {
                    adj.entry(c).or_default().push((b, price));
                    adj.entry(b).or_default().push((c, price));
                }
            }
        }
        for l in &self.inter_domain_links {
            if l.bandwidth > 0.0 && l.bandwidth >= demand {
                adj.entry(l.endpoints.0).or_default().push((l.endpoints.1, l.unit_price));
                adj.entry(l.endpoints.1).or_default().push((l.endpoints.0, l.unit_price));
            }
        }
        adj
    }

    /// Cheapest unit price between every pair of boundary nodes over the
    /// pricing graph, for a given demand.
    pub fn boundary_prices(&self, demand: f64) -> BoundaryPrices {
        // Non-boundary candidates only touch boundary nodes, so any walk
        // through one collapses to a boundary-to-boundary edge priced at the
        // sum of its two records. What remains is small enough for
        // Floyd-Warshall.
        let n = self.index.boundaries.len();
        let mut table = vec![f64::INFINITY; n * n];
        for i in 0..n {
            table[i * n + i] = 0.0;
        }
        let mut relax = |i: usize, j: usize, w: f64| {
            if w < table[i * n + j] {
                table[i * n + j] = w;
                table[j * n + i] = w;
            }
        };
        for exits in self.index.exits.values() {
            let usable: Vec<(usize, f64)> =
                exits.iter().filter(|e| e.1 >= demand).map(|&(i, _, p)| (i, p)).collect();
            for (a, &(i, pi)) in usable.iter().enumerate() {
                for &(j, pj) in &usable[a + 1..] {
                    relax(i, j, pi + pj);
                }
            }
        }
        for (&c, recs) in &self.index.records {
            if let Some(&i) = self.index.boundary_pos.get(&c) {
                for &(b, bw, price) in recs {
                    if let (true, Some(&j)) = (bw >= demand, self.index.boundary_pos.get(&b)) {
                        relax(i, j, price);
                    }
                }
            }
        }
        for l in &self.inter_domain_links {
            if l.bandwidth > 0.0 && l.bandwidth >= demand {
                if let (Some(&i), Some(&j)) =
                    (self.index.boundary_pos.get(&l.endpoints.0), self.index.boundary_pos.get(&l.endpoints.1))
                {
                    relax(i, j, l.unit_price);
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                let ik = table[i * n + k];
                if !ik.is_finite() {
                    continue;
                }
                for j in 0..n {
                    let w = ik + table[k * n + j];
                    if w < table[i * n + j] {
                        table[i * n + j] = w;
                    }
                }
            }
        }
        BoundaryPrices { n, table }
    }

    /// Cheapest unit price from `u` to `v` over qualified records and
    /// inter-domain links. Every route out of a non-boundary candidate starts
    /// with one of its boundary records, so this decomposes through the
    /// boundary table.
    pub fn cheapest_price(&self, u: NodeId, v: NodeId, demand: f64, table: &BoundaryPrices) -> f64 {
        if u == v {
            return 0.0;
        }
        let (Some(eu), Some(ev)) = (self.index.exits.get(&u), self.index.exits.get(&v)) else {
            return f64::INFINITY;
        };
        let mut best = f64::INFINITY;
        for &(i, _, pu) in eu.iter().filter(|e| e.1 >= demand) {
            for &(j, _, pv) in ev.iter().filter(|e| e.1 >= demand) {
                best = best.min(pu + table.get(i, j) + pv);
            }
        }
        best
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryPrices {
    n: usize,
    table: Vec<f64>,
}

impl BoundaryPrices {
    fn get(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.n + j]
    }
}

#[cfg(test)]
pub(crate) fn dijkstra(adj: &BTreeMap<NodeId, Vec<(NodeId, f64)>>, src: NodeId) -> BTreeMap<NodeId, f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Key(f64);
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Key {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&o.0)
        }
    }

    let mut dist = BTreeMap::from([(src, 0.0)]);
    let mut heap = BinaryHeap::from([Reverse((Key(0.0), src))]);
    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if dist.get(&u).is_some_and(|&best| d > best) {
            continue;
        }
        for &(v, w) in adj.get(&u).into_iter().flatten() {
            let nd = d + w;
            if dist.get(&v).is_none_or(|&cur| nd < cur) {
                dist.insert(v, nd);
                heap.push(Reverse((Key(nd), v)));
            }
        }
    }
    dist
}
