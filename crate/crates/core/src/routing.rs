//! Path computation over a [`NetworkView`]: the substrate plus the bandwidth
//! already earmarked by the request being embedded, an optional per-domain
//! bandwidth threshold, and an optional domain scope.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{LinkId, LinkKind, NodeId, SubstrateLink, SubstrateNetwork};

/// Which bandwidth figure the per-domain threshold is computed from and
/// compared against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdBasis {
    #[default]
    Residual,
    Capacity,
}

/// Per-domain bandwidth thresholds in force for one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qualification {
    pub basis: ThresholdBasis,
    pub thresholds: Vec<f64>,
}

/// Bandwidth tentatively consumed by the request currently being embedded.
#[derive(Debug, Clone, Default)]
pub struct Overlay {
    links: HashMap<LinkId, f64>,
}

impl Overlay {
    pub fn reserve(&mut self, path: &SubstratePath, demand: f64) {
        for &l in &path.links {
            *self.links.entry(l).or_insert(0.0) += demand;
        }
    }

    pub fn used(&self, link: LinkId) -> f64 {
        self.links.get(&link).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NetworkView<'a> {
    pub network: &'a SubstrateNetwork,
    overlay: Option<&'a Overlay>,
    qualification: Option<&'a Qualification>,
    scope: Option<usize>,
}

impl<'a> NetworkView<'a> {
    pub fn new(network: &'a SubstrateNetwork) -> Self {
        NetworkView { network, overlay: None, qualification: None, scope: None }
    }

    pub fn with_overlay(mut self, overlay: &'a Overlay) -> Self {
        self.overlay = Some(overlay);
        self
    }

    pub fn with_qualification(mut self, q: &'a Qualification) -> Self {
        self.qualification = Some(q);
        self
    }

    /// Restricts routing to the intra-domain links of one domain.
    pub fn scoped(mut self, domain: Option<usize>) -> Self {
        self.scope = domain;
        self
    }

    pub fn residual(&self, link: LinkId) -> f64 {
        let base = self.network.link(link).bw_residual;
        match self.overlay {
            Some(o) => base - o.used(link),
            None => base,
        }
    }

    /// Threshold applying to `link`, if any.
    pub fn threshold(&self, link: LinkId) -> Option<f64> {
        let q = self.qualification?;
        let d = self.network.link_domain(link)?;
        q.thresholds.get(d).copied()
    }

    /// Nonzero residual bandwidth, and for intra-domain links a threshold
    /// pass. Inter-domain links are never thresholded.
    pub fn is_qualified(&self, link: LinkId) -> bool {
        let residual = self.residual(link);
        if residual <= 0.0 {
            return false;
        }
        match (self.qualification, self.threshold(link)) {
            (Some(q), Some(t)) => {
                let bw = match q.basis {
                    ThresholdBasis::Residual => residual,
                    ThresholdBasis::Capacity => self.network.link(link).bw_capacity,
                };
                bw >= t
            }
            _ => true,
        }
    }

    pub fn admits(&self, link: LinkId, demand: f64, qualified_only: bool) -> bool {
        if let Some(d) = self.scope {
            if self.network.link_domain(link) != Some(d) {
                return false;
            }
        }
        let residual = self.residual(link);
        residual > 0.0 && residual >= demand && (!qualified_only || self.is_qualified(link))
    }
}

/// A simple substrate path. An empty path (one node, no links) maps a
/// virtual link whose endpoints share a host.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstratePath {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
    pub total_delay: f64,
    /// Smallest residual along the path when it was chosen; `None` when empty.
    pub bottleneck_bw: Option<f64>,
    /// Sum of member link unit prices.
    pub total_unit_price: f64,
}

impl SubstratePath {
    pub fn empty(at: NodeId) -> Self {
        SubstratePath { nodes: vec![at], links: Vec::new(), total_delay: 0.0, bottleneck_bw: None, total_unit_price: 0.0 }
    }

    /// Builds a path from a node sequence; `None` when consecutive nodes are
    /// not adjacent.
    pub fn from_nodes(network: &SubstrateNetwork, nodes: &[NodeId]) -> Option<Self> {
        Self::from_nodes_in(&NetworkView::new(network), nodes)
    }

    pub fn from_nodes_in(view: &NetworkView<'_>, nodes: &[NodeId]) -> Option<Self> {
        let first = *nodes.first()?;
        let mut path = SubstratePath::empty(first);
        for w in nodes.windows(2) {
            let l = view.network.link_between(w[0], w[1])?;
            path.push(view, l, w[1]);
        }
        Some(path)
    }

    fn push(&mut self, view: &NetworkView<'_>, link: LinkId, next: NodeId) {
        let rec = view.network.link(link);
        let r = view.residual(link);
        self.bottleneck_bw = Some(self.bottleneck_bw.map_or(r, |b| b.min(r)));
        self.total_delay += rec.delay;
        self.total_unit_price += rec.bw_unit_price;
        self.links.push(link);
        self.nodes.push(next);
    }

    pub fn src(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn dst(&self) -> NodeId {
        *self.nodes.last().expect("paths hold at least one node")
    }

    pub fn hops(&self) -> usize {
        self.links.len()
    }

    pub fn is_simple(&self) -> bool {
        let mut seen: Vec<NodeId> = self.nodes.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// Consecutive links share endpoints, nodes are distinct, and every link
    /// exists in `network`.
    pub fn is_valid_in(&self, network: &SubstrateNetwork) -> bool {
        if self.nodes.len() != self.links.len() + 1 || !self.is_simple() {
            return false;
        }
        self.links.iter().zip(self.nodes.windows(2)).all(|(&l, w)| {
            network.get_link(l).is_some_and(|rec| rec.touches(w[0]) && rec.touches(w[1]))
        })
    }

    /// Same route irrespective of direction.
    pub fn same_route(&self, other: &SubstratePath) -> bool {
        let mut rev = other.links.clone();
        rev.reverse();
        self.links == other.links || self.links == rev
    }

    pub fn reversed(&self) -> SubstratePath {
        let mut p = self.clone();
        p.nodes.reverse();
        p.links.reverse();
        p
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("no feasible path from {src} to {dst} for demand {demand}")]
    NoFeasiblePath { src: NodeId, dst: NodeId, demand: f64 },
}

fn no_path(src: NodeId, dst: NodeId, demand: f64) -> RoutingError {
    RoutingError::NoFeasiblePath { src, dst, demand }
}

fn bfs_dist(view: &NetworkView<'_>, from: NodeId, demand: f64, qualified_only: bool) -> Vec<usize> {
    let n = view.network.nodes().len();
    let mut dist = vec![usize::MAX; n];
    dist[from.index()] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u.index()];
        for &(v, l) in view.network.neighbors(u) {
            if dist[v.index()] == usize::MAX && view.admits(l, demand, qualified_only) {
                dist[v.index()] = du + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Among minimum-hop admissible paths, the one with the largest bottleneck
/// residual; ties go to the lower summed unit price, then to the
/// lexicographically smallest node sequence.
pub fn max_bandwidth_path(
    view: &NetworkView<'_>,
    src: NodeId,
    dst: NodeId,
    bw_demand: f64,
    qualified_only: bool,
) -> Result<SubstratePath, RoutingError> {
    if src == dst {
        return Ok(SubstratePath::empty(src));
    }
    let net = view.network;
    let from_src = bfs_dist(view, src, bw_demand, qualified_only);
    let hops = from_src[dst.index()];
    if hops == usize::MAX {
        return Err(no_path(src, dst, bw_demand));
    }
    let to_dst = bfs_dist(view, dst, bw_demand, qualified_only);

    // Nodes on some minimum-hop path, grouped by distance from src.
    let mut layers: Vec<Vec<NodeId>> = vec![Vec::new(); hops + 1];
    for node in net.nodes() {
        let (a, b) = (from_src[node.id.index()], to_dst[node.id.index()]);
        if a != usize::MAX && b != usize::MAX && a + b == hops {
            layers[a].push(node.id);
        }
    }
    let (from_src, to_dst) = (&from_src, &to_dst);
    let successors = |u: NodeId| {
        let du = from_src[u.index()];
        net.neighbors(u).iter().copied().filter(move |&(v, l)| {
            from_src[v.index()] == du + 1 && to_dst[v.index()] == hops - du - 1 && view.admits(l, bw_demand, qualified_only)
        })
    };

    let n = net.nodes().len();
    // Best achievable bottleneck from each node to dst.
    let mut bottleneck = vec![f64::NEG_INFINITY; n];
    bottleneck[dst.index()] = f64::INFINITY;
    for layer in layers.iter().rev().skip(1) {
        for &u in layer {
            bottleneck[u.index()] = successors(u)
                .map(|(v, l)| view.residual(l).min(bottleneck[v.index()]))
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let best = bottleneck[src.index()];

    // Cheapest completion using only links at or above the best bottleneck.
    let mut price = vec![f64::INFINITY; n];
    price[dst.index()] = 0.0;
    for layer in layers.iter().rev().skip(1) {
        for &u in layer {
            price[u.index()] = successors(u)
                .filter(|&(_, l)| view.residual(l) >= best)
                .map(|(v, l)| net.link(l).bw_unit_price + price[v.index()])
                .fold(f64::INFINITY, f64::min);
        }
    }

    let mut path = SubstratePath::empty(src);
    let mut u = src;
    while u != dst {
        let target = price[u.index()];
        let (v, l) = successors(u)
            .find(|&(v, l)| view.residual(l) >= best && net.link(l).bw_unit_price + price[v.index()] == target)
            .expect("a completion exists for every node on an optimal layer");
        path.push(view, l, v);
        u = v;
    }
    Ok(path)
}

/// Shortest-path tree from one source; paths are read off parent pointers.
#[derive(Debug, Clone)]
pub struct PathTree {
    src: NodeId,
    parent: Vec<Option<(NodeId, LinkId)>>,
    reached: Vec<bool>,
}

impl PathTree {
    pub fn src(&self) -> NodeId {
        self.src
    }

    pub fn reaches(&self, dst: NodeId) -> bool {
        self.reached[dst.index()]
    }

    pub fn path_to(&self, view: &NetworkView<'_>, dst: NodeId) -> Option<SubstratePath> {
        if !self.reaches(dst) {
            return None;
        }
        let mut seq = vec![(dst, None)];
        let mut cur = dst;
        while let Some((p, l)) = self.parent[cur.index()] {
            seq.push((p, Some(l)));
            cur = p;
        }
        seq.reverse();
        let mut path = SubstratePath::empty(self.src);
        // seq[i].1 is the link from seq[i].0 back to its parent; walk forward.
        for i in 1..seq.len() {
            let link = seq[i - 1].1.expect("only the source lacks a parent");
            path.push(view, link, seq[i].0);
        }
        Some(path)
    }
}

/// Breadth-first tree: each node keeps the first parent that discovers it,
/// with neighbours visited in ascending id order.
pub fn bfs_tree(view: &NetworkView<'_>, src: NodeId, demand: f64, qualified_only: bool) -> PathTree {
    let n = view.network.nodes().len();
    let mut parent = vec![None; n];
    let mut reached = vec![false; n];
    reached[src.index()] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &(v, l) in view.network.neighbors(u) {
            if !reached[v.index()] && view.admits(l, demand, qualified_only) {
                reached[v.index()] = true;
                parent[v.index()] = Some((u, l));
                queue.push_back(v);
            }
        }
    }
    PathTree { src, parent, reached }
}

#[derive(PartialEq)]
struct HeapEntry {
    cost: f64,
    hops: usize,
    node: NodeId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (cost, hops, node)
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.hops.cmp(&self.hops))
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra on a non-negative per-link weight; ties go to fewer hops, then to
/// the first relaxation.
pub fn dijkstra_tree(
    view: &NetworkView<'_>,
    src: NodeId,
    demand: f64,
    weight: &dyn Fn(&SubstrateLink) -> f64,
) -> PathTree {
    let n = view.network.nodes().len();
    let mut best = vec![(f64::INFINITY, usize::MAX); n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    best[src.index()] = (0.0, 0);
    let mut heap = BinaryHeap::from([HeapEntry { cost: 0.0, hops: 0, node: src }]);
    while let Some(HeapEntry { cost, hops, node }) = heap.pop() {
        if done[node.index()] {
            continue;
        }
        done[node.index()] = true;
        for &(v, l) in view.network.neighbors(node) {
            if done[v.index()] || !view.admits(l, demand, false) {
                continue;
            }
            let cand = (cost + weight(view.network.link(l)), hops + 1);
            let cur = best[v.index()];
            if cand.0 < cur.0 || (cand.0 == cur.0 && cand.1 < cur.1) {
                best[v.index()] = cand;
                parent[v.index()] = Some((node, l));
                heap.push(HeapEntry { cost: cand.0, hops: cand.1, node: v });
            }
        }
    }
    PathTree { src, parent, reached: done }
}

/// First path found by breadth-first search (minimum hops).
pub fn first_found_path(
    view: &NetworkView<'_>,
    src: NodeId,
    dst: NodeId,
    demand: f64,
) -> Result<SubstratePath, RoutingError> {
    bfs_tree(view, src, demand, false).path_to(view, dst).ok_or_else(|| no_path(src, dst, demand))
}

/// Path minimising the summed unit price.
pub fn cheapest_path(
    view: &NetworkView<'_>,
    src: NodeId,
    dst: NodeId,
    demand: f64,
) -> Result<SubstratePath, RoutingError> {
    dijkstra_tree(view, src, demand, &|l| l.bw_unit_price)
        .path_to(view, dst)
        .ok_or_else(|| no_path(src, dst, demand))
}

/// Memoised routing for fitness evaluation. Trees are built once per source
/// without a demand filter; when the tree path cannot carry a demand, a
/// filtered tree is built for that `(source, demand)` pair instead.
pub struct RouteCache<'a> {
    view: NetworkView<'a>,
    build: Box<dyn Fn(&NetworkView<'a>, NodeId, f64) -> PathTree + 'a>,
    trees: RefCell<HashMap<(NodeId, u64), Rc<PathTree>>>,
}

impl<'a> RouteCache<'a> {
    pub fn new(view: NetworkView<'a>, build: impl Fn(&NetworkView<'a>, NodeId, f64) -> PathTree + 'a) -> Self {
        RouteCache { view, build: Box::new(build), trees: RefCell::new(HashMap::new()) }
    }

    fn tree(&self, src: NodeId, demand: f64) -> Rc<PathTree> {
        let key = (src, demand.to_bits());
        if let Some(t) = self.trees.borrow().get(&key) {
            return Rc::clone(t);
        }
        let t = Rc::new((self.build)(&self.view, src, demand));
        self.trees.borrow_mut().insert(key, Rc::clone(&t));
        t
    }

    pub fn route(&self, src: NodeId, dst: NodeId, demand: f64) -> Option<SubstratePath> {
        let path = self.tree(src, 0.0).path_to(&self.view, dst);
        match path {
            Some(p) if p.links.iter().all(|&l| self.view.residual(l) >= demand) => Some(p),
            Some(_) => self.tree(src, demand).path_to(&self.view, dst),
            None => None,
        }
    }
}

/// Whether a path uses only links of the given kind.
pub fn uses_only(network: &SubstrateNetwork, path: &SubstratePath, kind: LinkKind) -> bool {
    path.links.iter().all(|&l| network.link(l).kind == kind)
}
