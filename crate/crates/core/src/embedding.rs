//! The bandwidth-aware embedding pipeline and the result type every algorithm
//! produces.
//!
//! `embed_vnr` runs: thresholds and candidate selection per domain, the
//! aggregated global view, swarm pre-mapping over that view, then routing of
//! intra-domain virtual links inside their domain and of inter-domain virtual
//! links across domains, all on qualified links only. The whole embedding is
//! planned against an immutable ledger snapshot and then committed in one
//! `allocate` call, so a rejection never touches the ledger.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::MpWeights;
use crate::abstraction::{global_view, AbstractionOptions, BoundaryPrices, CandidateNode, GlobalCandidateNetwork};
use crate::metrics::embedding_cost;
use crate::pso::{run_premapping, Fitness, PsoError, PsoParams, SearchSpace};
use crate::rng::mix;
use crate::routing::{NetworkView, Overlay, Qualification, RoutingError, ThresholdBasis};
use crate::topology::{LinkId, LinkKind, NodeId, SubstrateNetwork, VirtualNetworkRequest, VirtualNode};

pub use crate::routing::{max_bandwidth_path, SubstratePath};

/// Every embedding algorithm the crate implements. Baselines are simplified
/// stand-ins and carry a `-like` label in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    BaVne,
    VnePso,
    McVnm,
    LidVne,
    MpVne,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Self::BaVne, Self::VnePso, Self::McVnm, Self::LidVne, Self::MpVne];

    pub fn name(self) -> &'static str {
        match self {
            Self::BaVne => "ba-vne",
            Self::VnePso => "vne-pso",
            Self::McVnm => "mc-vnm",
            Self::LidVne => "lid-vne",
            Self::MpVne => "mp-vne",
        }
    }

    /// Name used in reports and tables.
    pub fn label(self) -> &'static str {
        match self {
            Self::BaVne => "BA-VNE",
            Self::VnePso => "VNE-PSO-like",
            Self::McVnm => "MC-VNM-like",
            Self::LidVne => "LID-VNE-like",
            Self::MpVne => "MP-VNE-like",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?}; expected one of ba-vne, vne-pso, mc-vnm, lid-vne, mp-vne"))
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    #[error("virtual node {vnode} on {node}: cpu demand {demand} exceeds residual {residual}")]
    Cpu { vnode: usize, node: NodeId, demand: f64, residual: f64 },
    #[error("{link}: bandwidth demand {demand} exceeds residual {residual}")]
    Bandwidth { link: LinkId, demand: f64, residual: f64 },
    #[error("{node} hosts virtual nodes {vnodes:?}")]
    NotInjective { node: NodeId, vnodes: Vec<usize> },
    #[error("virtual node {vnode} placed on {node} in domain {domain}, outside its candidate domains")]
    WrongDomain { vnode: usize, node: NodeId, domain: usize },
    #[error("virtual link {vlink} is not mapped to a valid path between its endpoints")]
    BrokenPath { vlink: usize },
    #[error("unknown substrate node {node}")]
    UnknownNode { node: NodeId },
    #[error("{what}: expected {expected} entries, got {got}")]
    Shape { what: String, expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RejectCause {
    #[error("invalid request: {reason}")]
    InvalidRequest { reason: String },
    #[error("global view unavailable: {reason}")]
    GlobalView { reason: String },
    #[error("virtual node {vnode} has no feasible candidate")]
    NoFeasibleCandidate { vnode: usize },
    #[error("no one-to-one node assignment exists among the candidates")]
    NoInjectiveAssignment,
    #[error("pre-mapping found no feasible assignment")]
    PremappingFailed,
    #[error("virtual link {vlink}: no feasible path from {src} to {dst} for demand {demand}")]
    NoFeasiblePath { vlink: usize, src: NodeId, dst: NodeId, demand: f64 },
    #[error("constraint violations: {0:?}")]
    Constraints(Vec<Violation>),
    #[error("ledger refused the allocation: {reason}")]
    Ledger { reason: String },
}

impl RejectCause {
    pub(crate) fn from_pso(e: PsoError) -> Self {
        match e {
            PsoError::NoFeasibleCandidate(vnode) => Self::NoFeasibleCandidate { vnode },
            PsoError::NoInjectiveAssignment => Self::NoInjectiveAssignment,
            PsoError::PremappingFailed => Self::PremappingFailed,
            PsoError::InvalidParams(reason) => Self::InvalidRequest { reason },
        }
    }

    pub(crate) fn from_routing(vlink: usize, e: RoutingError) -> Self {
        let RoutingError::NoFeasiblePath { src, dst, demand } = e;
        Self::NoFeasiblePath { vlink, src, dst, demand }
    }
}

/// One intra-domain link picked for a virtual link, with the figures in
/// force when it was picked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSelection {
    pub link: LinkId,
    pub domain: usize,
    pub residual_at_selection: f64,
    /// Domain threshold the link had to meet, for algorithms that use one.
    pub threshold: Option<f64>,
    /// What the threshold was compared with: the residual, or the capacity
    /// under the capacity basis.
    pub compared_bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub vnr_id: u64,
    pub algorithm: Algorithm,
    pub accepted: bool,
    pub cause: Option<RejectCause>,
    /// Host of each virtual node, by virtual node index.
    pub node_assignment: Vec<NodeId>,
    /// Path of each virtual link, by virtual link index.
    pub link_paths: Vec<SubstratePath>,
    pub node_demands: Vec<f64>,
    pub link_demands: Vec<f64>,
    pub cost: f64,
    pub total_delay: f64,
    pub link_selections: Vec<LinkSelection>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fitness_trace: Option<Vec<f64>>,
}

impl EmbeddingResult {
    pub fn rejected(vnr_id: u64, algorithm: Algorithm, cause: RejectCause) -> Self {
        Self {
            vnr_id,
            algorithm,
            accepted: false,
            cause: Some(cause),
            node_assignment: Vec::new(),
            link_paths: Vec::new(),
            node_demands: Vec::new(),
            link_demands: Vec::new(),
            cost: 0.0,
            total_delay: 0.0,
            link_selections: Vec::new(),
            fitness_trace: None,
        }
    }

    /// Accepted result built directly from its parts, bypassing every check.
    /// Meant for exercising the ledger.
    pub fn accepted_for_test(
        vnr_id: u64,
        hosts: Vec<NodeId>,
        node_demands: Vec<f64>,
        link_paths: Vec<SubstratePath>,
        link_demands: Vec<f64>,
    ) -> Self {
        let total_delay = link_paths.iter().map(|p| p.total_delay).sum();
        Self {
            vnr_id,
            algorithm: Algorithm::BaVne,
            accepted: true,
            cause: None,
            node_assignment: hosts,
            link_paths,
            node_demands,
            link_demands,
            cost: 0.0,
            total_delay,
            link_selections: Vec::new(),
            fitness_trace: None,
        }
    }

    /// Summed CPU per substrate node and bandwidth per substrate link.
    pub fn resource_usage(&self) -> (BTreeMap<NodeId, f64>, BTreeMap<LinkId, f64>) {
        let mut nodes = BTreeMap::new();
        for (&n, &d) in self.node_assignment.iter().zip(&self.node_demands) {
            *nodes.entry(n).or_insert(0.0) += d;
        }
        let mut links = BTreeMap::new();
        for (p, &d) in self.link_paths.iter().zip(&self.link_demands) {
            for &l in &p.links {
                *links.entry(l).or_insert(0.0) += d;
            }
        }
        (nodes, links)
    }

    /// Distinct substrate links carrying at least one virtual link.
    pub fn used_links(&self) -> Vec<LinkId> {
        let mut v: Vec<LinkId> = self.link_paths.iter().flat_map(|p| p.links.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Estimated node cost of placing `vnode` on `candidate`: demand times unit
/// price.
pub fn premap_cost(vnode: &VirtualNode, candidate: &CandidateNode) -> f64 {
    vnode.cpu_demand * candidate.cpu_unit_price
}

/// Checks node capacity, path capacity, one-to-one placement, candidate
/// domains and path validity. Returns every violation found.
pub fn check_constraints(
    network: &SubstrateNetwork,
    vnr: &VirtualNetworkRequest,
    nodes: &[NodeId],
    paths: &[SubstratePath],
) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if nodes.len() != vnr.nodes.len() {
        out.push(Violation::Shape { what: "node assignment".into(), expected: vnr.nodes.len(), got: nodes.len() });
    }
    if paths.len() != vnr.links.len() {
        out.push(Violation::Shape { what: "link assignment".into(), expected: vnr.links.len(), got: paths.len() });
    }

    let mut hosted: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (vn, &host) in vnr.nodes.iter().zip(nodes) {
        let Some(sn) = network.get_node(host) else {
            out.push(Violation::UnknownNode { node: host });
            continue;
        };
        hosted.entry(host).or_default().push(vn.id);
        if sn.cpu_residual < vn.cpu_demand {
            out.push(Violation::Cpu { vnode: vn.id, node: host, demand: vn.cpu_demand, residual: sn.cpu_residual });
        }
        if !vn.candidate_domains.contains(&sn.domain) {
            out.push(Violation::WrongDomain { vnode: vn.id, node: host, domain: sn.domain });
        }
    }
    for (node, vnodes) in hosted {
        if vnodes.len() > 1 {
            out.push(Violation::NotInjective { node, vnodes });
        }
    }

    let mut link_use: BTreeMap<LinkId, f64> = BTreeMap::new();
    for (k, (vl, path)) in vnr.links.iter().zip(paths).enumerate() {
        let (a, b) = vl.endpoints;
        let ends = (nodes.get(a).copied(), nodes.get(b).copied());
        let joins = match ends {
            (Some(x), Some(y)) => {
                (path.src() == x && path.dst() == y) || (path.src() == y && path.dst() == x)
            }
            _ => false,
        };
        if !joins || !path.is_valid_in(network) {
            out.push(Violation::BrokenPath { vlink: k });
            continue;
        }
        for &l in &path.links {
            *link_use.entry(l).or_insert(0.0) += vl.bw_demand;
        }
    }
    for (l, demand) in link_use {
        let residual = network.link(l).bw_residual;
        if residual < demand {
            out.push(Violation::Bandwidth { link: l, demand, residual });
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Candidate lists per virtual node: CPU-feasible candidates in its
/// candidate domains, cheapest estimated node cost first.
pub fn candidate_space(gcn: &GlobalCandidateNetwork, vnr: &VirtualNetworkRequest) -> Result<SearchSpace, PsoError> {
    let lists = vnr
        .nodes
        .iter()
        .map(|vn| {
            let mut c: Vec<&CandidateNode> = gcn
                .candidates()
                .filter(|c| vn.candidate_domains.contains(&c.domain) && c.cpu_residual >= vn.cpu_demand)
                .collect();
            c.sort_by(|a, b| {
                premap_cost(vn, a).total_cmp(&premap_cost(vn, b)).then(a.substrate_node.cmp(&b.substrate_node))
            });
            c.into_iter().map(|c| c.substrate_node).collect()
        })
        .collect();
    SearchSpace::new(lists)
}

/// Estimated embedding cost over the global view: node costs plus, for each
/// virtual link, demand times the cheapest unit price over qualified
/// candidate records and inter-domain links.
pub struct CandidateFitness<'a> {
    gcn: &'a GlobalCandidateNetwork,
    vnr: &'a VirtualNetworkRequest,
    prices: HashMap<NodeId, f64>,
    tables: Vec<BoundaryPrices>,
    table_of: Vec<usize>,
}

impl<'a> CandidateFitness<'a> {
    pub fn new(gcn: &'a GlobalCandidateNetwork, vnr: &'a VirtualNetworkRequest) -> Self {
        let prices = gcn.candidates().map(|c| (c.substrate_node, c.cpu_unit_price)).collect();
        let mut demands: Vec<u64> = Vec::new();
        let mut tables = Vec::new();
        let mut table_of = Vec::with_capacity(vnr.links.len());
        for l in &vnr.links {
            let key = l.bw_demand.to_bits();
            let idx = match demands.iter().position(|&d| d == key) {
                Some(i) => i,
                None => {
                    demands.push(key);
                    tables.push(gcn.boundary_prices(l.bw_demand));
                    tables.len() - 1
                }
            };
            table_of.push(idx);
        }
        Self { gcn, vnr, prices, tables, table_of }
    }
}

impl Fitness for CandidateFitness<'_> {
    fn fitness(&self, position: &[NodeId]) -> f64 {
        let mut total = 0.0;
        for (vn, n) in self.vnr.nodes.iter().zip(position) {
            match self.prices.get(n) {
                Some(p) => total += vn.cpu_demand * p,
                None => return f64::INFINITY,
            }
        }
        for (k, l) in self.vnr.links.iter().enumerate() {
            let (a, b) = l.endpoints;
            let price = self.gcn.cheapest_price(position[a], position[b], l.bw_demand, &self.tables[self.table_of[k]]);
            if !price.is_finite() {
                return f64::INFINITY;
            }
            total += l.bw_demand * price;
        }
        total
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedOptions {
    pub pso: PsoParams,
    pub abstraction: AbstractionOptions,
    pub trace_fitness: bool,
    pub mp_weights: MpWeights,
}

/// Routes every virtual link in order, tracking bandwidth already earmarked
/// by earlier links of the same request. `route` gets the overlay, the link
/// index, both hosts and the demand.
pub(crate) fn route_links(
    network: &SubstrateNetwork,
    vnr: &VirtualNetworkRequest,
    nodes: &[NodeId],
    order: &[usize],
    qualification: Option<&Qualification>,
    mut route: impl FnMut(&Overlay, usize, NodeId, NodeId, f64) -> Result<SubstratePath, RoutingError>,
) -> Result<(Vec<SubstratePath>, Vec<LinkSelection>), RejectCause> {
    let mut overlay = Overlay::default();
    let mut paths: Vec<Option<SubstratePath>> = vec![None; vnr.links.len()];
    let mut selections = Vec::new();
    for &k in order {
        let vl = &vnr.links[k];
        let (src, dst) = (nodes[vl.endpoints.0], nodes[vl.endpoints.1]);
        let path = route(&overlay, k, src, dst, vl.bw_demand).map_err(|e| RejectCause::from_routing(k, e))?;
        let view = NetworkView::new(network).with_overlay(&overlay);
        for &l in &path.links {
            if let Some(domain) = network.link_domain(l) {
                let residual = view.residual(l);
                let compared_bandwidth = match qualification.map(|q| q.basis) {
                    Some(ThresholdBasis::Capacity) => network.link(l).bw_capacity,
                    _ => residual,
                };
                selections.push(LinkSelection {
                    link: l,
                    domain,
                    residual_at_selection: residual,
                    threshold: qualification.and_then(|q| q.thresholds.get(domain).copied()),
                    compared_bandwidth,
                });
            }
        }
        overlay.reserve(&path, vl.bw_demand);
        paths[k] = Some(path);
    }
    Ok((paths.into_iter().map(|p| p.expect("every link routed")).collect(), selections))
}

/// Final checks and bookkeeping shared by every algorithm.
pub(crate) fn assemble(
    network: &SubstrateNetwork,
    vnr: &VirtualNetworkRequest,
    algorithm: Algorithm,
    nodes: Vec<NodeId>,
    paths: Vec<SubstratePath>,
    link_selections: Vec<LinkSelection>,
) -> EmbeddingResult {
    if let Err(v) = check_constraints(network, vnr, &nodes, &paths) {
        return EmbeddingResult::rejected(vnr.id, algorithm, RejectCause::Constraints(v));
    }
    let mut result = EmbeddingResult {
        vnr_id: vnr.id,
        algorithm,
        accepted: true,
        cause: None,
        node_assignment: nodes,
        total_delay: paths.iter().map(|p| p.total_delay).sum(),
        link_paths: paths,
        node_demands: vnr.nodes.iter().map(|n| n.cpu_demand).collect(),
        link_demands: vnr.links.iter().map(|l| l.bw_demand).collect(),
        cost: 0.0,
        link_selections,
        fitness_trace: None,
    };
    result.cost = embedding_cost(&result, network);
    result
}

/// Rejects requests that name domains the substrate does not have.
pub(crate) fn precheck(network: &SubstrateNetwork, vnr: &VirtualNetworkRequest) -> Result<(), RejectCause> {
    vnr.validate().map_err(|e| RejectCause::InvalidRequest { reason: e.to_string() })?;
    if let Some(d) = vnr.nodes.iter().flat_map(|n| &n.candidate_domains).find(|&&d| d >= network.domains()) {
        return Err(RejectCause::InvalidRequest { reason: format!("candidate domain {d} does not exist") });
    }
    Ok(())
}

/// Plans a bandwidth-aware embedding against the current ledger without
/// changing it.
pub fn plan_ba_vne(network: &SubstrateNetwork, vnr: &VirtualNetworkRequest, opts: &EmbedOptions) -> EmbeddingResult {
    let alg = Algorithm::BaVne;
    if let Err(c) = precheck(network, vnr) {
        return EmbeddingResult::rejected(vnr.id, alg, c);
    }
    let (gcn, q) = match global_view(network, opts.abstraction) {
        Ok(x) => x,
        Err(e) => return EmbeddingResult::rejected(vnr.id, alg, RejectCause::GlobalView { reason: e.to_string() }),
    };
    let space = match candidate_space(&gcn, vnr) {
        Ok(s) => s,
        Err(e) => return EmbeddingResult::rejected(vnr.id, alg, RejectCause::from_pso(e)),
    };
    let fitness = CandidateFitness::new(&gcn, vnr);
    let params = PsoParams { seed: mix(opts.pso.seed, vnr.id), ..opts.pso };
    let outcome = match run_premapping(&space, &fitness, &params) {
        Ok(o) => o,
        Err(e) => return EmbeddingResult::rejected(vnr.id, alg, RejectCause::from_pso(e)),
    };
    let nodes = outcome.position;

    // Nodes in decreasing demand, so the largest requirement fails first.
    let mut by_demand: Vec<usize> = (0..vnr.nodes.len()).collect();
    by_demand.sort_by(|&a, &b| vnr.nodes[b].cpu_demand.total_cmp(&vnr.nodes[a].cpu_demand).then(a.cmp(&b)));
    for k in by_demand {
        let host = network.node(nodes[k]);
        if host.cpu_residual < vnr.nodes[k].cpu_demand {
            return EmbeddingResult::rejected(
                vnr.id,
                alg,
                RejectCause::Constraints(vec![Violation::Cpu {
                    vnode: k,
                    node: host.id,
                    demand: vnr.nodes[k].cpu_demand,
                    residual: host.cpu_residual,
                }]),
            );
        }
    }

    // Intra-domain virtual links first, then those crossing domains.
    let domain = |k: usize| network.node(nodes[k]).domain;
    let (mut order, inter): (Vec<usize>, Vec<usize>) =
        (0..vnr.links.len()).partition(|&k| domain(vnr.links[k].endpoints.0) == domain(vnr.links[k].endpoints.1));
    order.extend(inter);
    let routed = route_links(
        network,
        vnr,
        &nodes,
        &order,
        Some(&q),
        |overlay, k, src, dst, demand| {
            let (a, b) = (domain(vnr.links[k].endpoints.0), domain(vnr.links[k].endpoints.1));
            let view = NetworkView::new(network).with_overlay(overlay).with_qualification(&q);
            // Candidates can hang off different boundary nodes with no
            // qualified path between them inside the domain; such links may
            // leave the domain, still over qualified links only.
            if a == b {
                if let Ok(p) = max_bandwidth_path(&view.scoped(Some(a)), src, dst, demand, true) {
                    return Ok(p);
                }
            }
            max_bandwidth_path(&view, src, dst, demand, true)
        },
    );
    let (paths, selections) = match routed {
        Ok(x) => x,
        Err(c) => return EmbeddingResult::rejected(vnr.id, alg, c),
    };
    let mut result = assemble(network, vnr, alg, nodes, paths, selections);
    if opts.trace_fitness {
        result.fitness_trace = Some(outcome.trace);
    }
    result
}

/// Allocates an accepted plan. A ledger refusal turns it into a rejection.
pub fn commit(network: &mut SubstrateNetwork, result: EmbeddingResult) -> EmbeddingResult {
    if !result.accepted {
        return result;
    }
    match network.allocate(&result) {
        Ok(()) => result,
        Err(e) => EmbeddingResult {
            fitness_trace: result.fitness_trace.clone(),
            ..EmbeddingResult::rejected(result.vnr_id, result.algorithm, RejectCause::Ledger { reason: e.to_string() })
        },
    }
}

/// Plans and commits a bandwidth-aware embedding.
pub fn embed_vnr(network: &mut SubstrateNetwork, vnr: &VirtualNetworkRequest, opts: &EmbedOptions) -> EmbeddingResult {
    let plan = plan_ba_vne(network, vnr, opts);
    commit(network, plan)
}

/// Whether every selected intra-domain link met its threshold.
pub fn threshold_audit(result: &EmbeddingResult) -> bool {
    result.link_selections.iter().all(|s| s.threshold.is_none_or(|t| s.compared_bandwidth >= t))
}

/// Whether a path only uses links of one kind.
pub fn is_intra_domain(network: &SubstrateNetwork, path: &SubstratePath) -> bool {
    crate::routing::uses_only(network, path, LinkKind::IntraDomain)
}
