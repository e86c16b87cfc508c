//! Comparison heuristics. These are simplified stand-ins written from short
//! descriptions of the published algorithms, not faithful reimplementations,
//! and reports label them `-like`:
//!
//! - VNE-PSO-like: swarm search over nodes within one hop of a boundary node,
//!   minimum-hop routing with first-found ties, no bandwidth threshold.
//! - MC-VNM-like: greedy, links first. Each virtual link, largest demand
//!   first, takes the cheapest path between the cheapest pair of hosts for
//!   its endpoints.
//! - LID-VNE-like: uniformly random feasible host per virtual node,
//!   first-found routing.
//! - MP-VNE-like: swarm search over every feasible host with a weighted sum
//!   of cost, inverse bottleneck bandwidth and delay.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{
    assemble, commit, plan_ba_vne, precheck, route_links, Algorithm, EmbedOptions, EmbeddingResult, RejectCause,
};
use crate::pso::{run_premapping, Fitness, PsoParams, SearchSpace};
use crate::rng::{mix, stream, STREAM_LID};
use crate::routing::{bfs_tree, dijkstra_tree, first_found_path, NetworkView, RouteCache, RoutingError, SubstratePath};
use crate::topology::{NodeId, SubstrateLink, SubstrateNetwork, VirtualNetworkRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    VnePso,
    McVnm,
    LidVne,
    MpVne,
}

impl From<BaselineKind> for Algorithm {
    fn from(k: BaselineKind) -> Self {
        match k {
            BaselineKind::VnePso => Algorithm::VnePso,
            BaselineKind::McVnm => Algorithm::McVnm,
            BaselineKind::LidVne => Algorithm::LidVne,
            BaselineKind::MpVne => Algorithm::MpVne,
        }
    }
}

/// Weights of the MP-VNE-like objective: cost, inverse bottleneck bandwidth,
/// delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpWeights {
    pub cost: f64,
    pub inverse_bandwidth: f64,
    pub delay: f64,
}

impl Default for MpWeights {
    fn default() -> Self {
        Self { cost: 1.0 / 3.0, inverse_bandwidth: 1.0 / 3.0, delay: 1.0 / 3.0 }
    }
}

/// Plans with the chosen algorithm without touching the ledger.
pub fn plan(network: &SubstrateNetwork, vnr: &VirtualNetworkRequest, algorithm: Algorithm, opts: &EmbedOptions) -> EmbeddingResult {
    match algorithm {
        Algorithm::BaVne => plan_ba_vne(network, vnr, opts),
        Algorithm::VnePso => plan_vne_pso(network, vnr, opts),
        Algorithm::McVnm => plan_mc_vnm(network, vnr),
        Algorithm::LidVne => plan_lid_vne(network, vnr, opts.pso.seed),
        Algorithm::MpVne => plan_mp_vne(network, vnr, opts, opts.mp_weights),
    }
}

/// Plans and commits with the chosen algorithm.
pub fn embed(network: &mut SubstrateNetwork, vnr: &VirtualNetworkRequest, algorithm: Algorithm, opts: &EmbedOptions) -> EmbeddingResult {
    let p = plan(network, vnr, algorithm, opts);
    commit(network, p)
}

pub fn embed_vne_pso(network: &mut SubstrateNetwork, vnr: &VirtualNetworkRequest, opts: &EmbedOptions) -> EmbeddingResult {
    embed(network, vnr, Algorithm::VnePso, opts)
}

pub fn embed_mc_vnm(network: &mut SubstrateNetwork, vnr: &VirtualNetworkRequest) -> EmbeddingResult {
    let p = plan_mc_vnm(network, vnr);
    commit(network, p)
}

pub fn embed_lid_vne(network: &mut SubstrateNetwork, vnr: &VirtualNetworkRequest, seed: u64) -> EmbeddingResult {
    let p = plan_lid_vne(network, vnr, seed);
    commit(network, p)
}

pub fn embed_mp_vne(
    network: &mut SubstrateNetwork,
    vnr: &VirtualNetworkRequest,
    opts: &EmbedOptions,
    weights: MpWeights,
) -> EmbeddingResult {
    let p = plan_mp_vne(network, vnr, opts, weights);
    commit(network, p)
}

/// Hop distance from every node to the nearest boundary node of its own
/// domain, over intra-domain links with bandwidth left.
pub fn boundary_hops(network: &SubstrateNetwork) -> Vec<Option<usize>> {
    let mut hops = vec![None; network.nodes().len()];
    let mut queue = VecDeque::new();
    for n in network.nodes().iter().filter(|n| n.is_boundary) {
        hops[n.id.index()] = Some(0);
        queue.push_back(n.id);
    }
    while let Some(u) = queue.pop_front() {
        let h = hops[u.index()].expect("queued nodes have a distance");
        for &(v, l) in network.neighbors(u) {
            let link = network.link(l);
            if hops[v.index()].is_none() && network.link_domain(l).is_some() && link.bw_residual > 0.0 {
                hops[v.index()] = Some(h + 1);
                queue.push_back(v);
            }
        }
    }
    hops
}

/// CPU-feasible hosts in each virtual node's candidate domains.
fn feasible_hosts(network: &SubstrateNetwork, vnr: &VirtualNetworkRequest) -> Vec<Vec<NodeId>> {
    vnr.nodes
        .iter()
        .map(|vn| {
            vn.candidate_domains
                .iter()
                .flat_map(|&d| network.domain_nodes(d).iter().copied())
                .filter(|&n| network.node(n).cpu_residual >= vn.cpu_demand)
                .collect::<Vec<_>>()
        })
        .map(|mut v| {
            v.sort_unstable();
            v
        })
        .collect()
}

fn node_cost(network: &SubstrateNetwork, vnr: &VirtualNetworkRequest, position: &[NodeId]) -> f64 {
    vnr.nodes.iter().zip(position).map(|(vn, &n)| vn.cpu_demand * network.node(n).cpu_unit_price).sum()
}

/// Node cost plus link cost along whatever paths `cache` produces.
struct RoutedCost<'a> {
    network: &'a SubstrateNetwork,
    vnr: &'a VirtualNetworkRequest,
    cache: RouteCache<'a>,
    score: Box<dyn Fn(f64, &SubstratePath) -> f64 + 'a>,
    node_weight: f64,
}

impl Fitness for RoutedCost<'_> {
    fn fitness(&self, position: &[NodeId]) -> f64 {
        let mut total = self.node_weight * node_cost(self.network, self.vnr, position);
        for l in &self.vnr.links {
            let (a, b) = (position[l.endpoints.0], position[l.endpoints.1]);
            match self.cache.route(a, b, l.bw_demand) {
                Some(p) => total += (self.score)(l.bw_demand, &p),
                None => return f64::INFINITY,
            }
        }
        total
    }
}

fn pso_then_route(
    network: &SubstrateNetwork,
    vnr: &VirtualNetworkRequest,
    alg: Algorithm,
    opts: &EmbedOptions,
    space: Vec<Vec<NodeId>>,
    fitness: &dyn Fitness,
    route: impl Fn(&NetworkView<'_>, NodeId, NodeId, f64) -> Result<SubstratePath, RoutingError>,
) -> EmbeddingResult {
    let space = match SearchSpace::new(space) {
        Ok(s) => s,
        Err(e) => return EmbeddingResult::rejected(vnr.id, alg, RejectCause::from_pso(e)),
    };
    let params = PsoParams { seed: mix(opts.pso.seed, vnr.id), ..opts.pso };
    let outcome = match run_premapping(&space, fitness, &params) {
        Ok(o) => o,
        Err(e) => return EmbeddingResult::rejected(vnr.id, alg, RejectCause::from_pso(e)),
    };
    let nodes = outcome.position;
    let order: Vec<usize> = (0..vnr.links.len()).collect();
    let routed = route_links(network, vnr, &nodes, &order, None, |overlay, _, src, dst, demand| {
        route(&NetworkView::new(network).with_overlay(overlay), src, dst, demand)
    });
    match routed {
        Ok((paths, sel)) => {
            let mut r = assemble(network, vnr, alg, nodes, paths, sel);
            if opts.trace_fitness {
                r.fitness_trace = Some(outcome.trace);
            }
            r
        }
        Err(c) => EmbeddingResult::rejected(vnr.id, alg, c),
    }
}

/// Candidate hosts ranked by hop distance to the nearest boundary node,
/// keeping those at most one hop away. A virtual node with no such host
/// falls back to every feasible host, still ranked by hops.
pub fn hop_ranked_candidates(network: &SubstrateNetwork, vnr: &VirtualNetworkRequest) -> Vec<Vec<NodeId>> {
    let hops = boundary_hops(network);
    feasible_hosts(network, vnr)
        .into_iter()
        .map(|hosts| {
            let mut ranked: Vec<(usize, NodeId)> =
                hosts.into_iter().map(|n| (hops[n.index()].unwrap_or(usize::MAX), n)).collect();
            ranked.sort_unstable();
            let near: Vec<NodeId> = ranked.iter().filter(|(h, _)| *h <= 1).map(|&(_, n)| n).collect();
            if near.is_empty() {
                ranked.into_iter().map(|(_, n)| n).collect()
            } else {
                near
            }
        })
        .collect()
}

fn plan_vne_pso(network: &SubstrateNetwork, vnr: &VirtualNetworkRequest, opts: &EmbedOptions) -> EmbeddingResult {
    let alg = Algorithm::VnePso;
    if let Err(c) = precheck(network, vnr) {
        return EmbeddingResult::rejected(vnr.id, alg, c);
    }
    let space = hop_ranked_candidates(network, vnr);
    let fitness = RoutedCost {
        network,
        vnr,
        cache: RouteCache::new(NetworkView::new(network), |v, s, d| bfs_tree(v, s, d, false)),
        score: Box::new(|demand, p| demand * p.total_unit_price),
        node_weight: 1.0,
    };
    pso_then_route(network, vnr, alg, opts, space, &fitness, first_found_path)
}

fn plan_mp_vne(network: &SubstrateNetwork, vnr: &VirtualNetworkRequest, opts: &EmbedOptions, w: MpWeights) -> EmbeddingResult {
    let alg = Algorithm::MpVne;
    if let Err(c) = precheck(network, vnr) {
        return EmbeddingResult::rejected(vnr.id, alg, c);
    }
    let space = feasible_hosts(network, vnr);
    // Routing weight per link for a unit of demand; the demand-scaled price
    // term is approximated by the mean demand of the request.
    let mean_demand = if vnr.links.is_empty() {
        0.0
    } else {
        vnr.links.iter().map(|l| l.bw_demand).sum::<f64>() / vnr.links.len() as f64
    };
    let weight = move |l: &SubstrateLink| w.cost * mean_demand * l.bw_unit_price + w.delay * l.delay;
    let fitness = RoutedCost {
        network,
        vnr,
        cache: RouteCache::new(NetworkView::new(network), move |v, s, d| dijkstra_tree(v, s, d, &weight)),
        score: Box::new(move |demand, p| {
            let inv_bw = p.bottleneck_bw.map_or(0.0, |b| 1.0 / b);
            w.cost * demand * p.total_unit_price + w.inverse_bandwidth * inv_bw + w.delay * p.total_delay
        }),
        node_weight: w.cost,
    };
    pso_then_route(network, vnr, alg, opts, space, &fitness, move |view, s, d, demand| {
        dijkstra_tree(view, s, demand, &weight)
            .path_to(view, d)
            .ok_or(RoutingError::NoFeasiblePath { src: s, dst: d, demand })
    })
}

fn plan_lid_vne(network: &SubstrateNetwork, vnr: &VirtualNetworkRequest, seed: u64) -> EmbeddingResult {
    let alg = Algorithm::LidVne;
    if let Err(c) = precheck(network, vnr) {
        return EmbeddingResult::rejected(vnr.id, alg, c);
    }
    let mut rng = stream(mix(seed, vnr.id), STREAM_LID);
    let mut nodes: Vec<NodeId> = Vec::with_capacity(vnr.nodes.len());
    for (k, hosts) in feasible_hosts(network, vnr).into_iter().enumerate() {
        let free: Vec<NodeId> = hosts.into_iter().filter(|n| !nodes.contains(n)).collect();
        if free.is_empty() {
            return EmbeddingResult::rejected(vnr.id, alg, RejectCause::NoFeasibleCandidate { vnode: k });
        }
        nodes.push(free[rng.random_range(0..free.len())]);
    }
    let order: Vec<usize> = (0..vnr.links.len()).collect();
    let routed = route_links(network, vnr, &nodes, &order, None, |overlay, _, src, dst, demand| {
        first_found_path(&NetworkView::new(network).with_overlay(overlay), src, dst, demand)
    });
    match routed {
        Ok((paths, sel)) => assemble(network, vnr, alg, nodes, paths, sel),
        Err(c) => EmbeddingResult::rejected(vnr.id, alg, c),
    }
}

fn plan_mc_vnm(network: &SubstrateNetwork, vnr: &VirtualNetworkRequest) -> EmbeddingResult {
    let alg = Algorithm::McVnm;
    if let Err(c) = precheck(network, vnr) {
        return EmbeddingResult::rejected(vnr.id, alg, c);
    }
    let hosts = feasible_hosts(network, vnr);
    let price = |n: NodeId| network.node(n).cpu_unit_price;
    let mut assigned: BTreeMap<usize, NodeId> = BTreeMap::new();
    let mut paths: Vec<Option<SubstratePath>> = vec![None; vnr.links.len()];
    let mut overlay = crate::routing::Overlay::default();

    let mut order: Vec<usize> = (0..vnr.links.len()).collect();
    order.sort_by(|&a, &b| vnr.links[b].bw_demand.total_cmp(&vnr.links[a].bw_demand).then(a.cmp(&b)));
    for k in order {
        let vl = &vnr.links[k];
        let (a, b) = vl.endpoints;
        let options = |v: usize| -> Vec<NodeId> {
            match assigned.get(&v) {
                Some(&n) => vec![n],
                None => hosts[v].iter().copied().filter(|n| !assigned.values().any(|x| x == n)).collect(),
            }
        };
        let (from, to) = (options(a), options(b));
        let view = NetworkView::new(network).with_overlay(&overlay);
        let mut best: Option<(f64, NodeId, NodeId, SubstratePath)> = None;
        for &u in &from {
            let tree = dijkstra_tree(&view, u, vl.bw_demand, &|l: &SubstrateLink| l.bw_unit_price);
            for &v in to.iter().filter(|&&v| v != u) {
                let Some(p) = tree.path_to(&view, v) else { continue };
                let mut c = vl.bw_demand * p.total_unit_price;
                if !assigned.contains_key(&a) {
                    c += vnr.nodes[a].cpu_demand * price(u);
                }
                if !assigned.contains_key(&b) {
                    c += vnr.nodes[b].cpu_demand * price(v);
                }
                if best.as_ref().is_none_or(|(bc, bu, bv, _)| c < *bc || (c == *bc && (u, v) < (*bu, *bv))) {
                    best = Some((c, u, v, p));
                }
            }
        }
        let Some((_, u, v, p)) = best else {
            let (src, dst) = (from.first().copied().unwrap_or(NodeId(0)), to.first().copied().unwrap_or(NodeId(0)));
            return EmbeddingResult::rejected(
                vnr.id,
                alg,
                RejectCause::NoFeasiblePath { vlink: k, src, dst, demand: vl.bw_demand },
            );
        };
        assigned.insert(a, u);
        assigned.insert(b, v);
        overlay.reserve(&p, vl.bw_demand);
        paths[k] = Some(p);
    }

    // Virtual nodes without links take the cheapest free host.
    for (k, vn) in vnr.nodes.iter().enumerate() {
        if assigned.contains_key(&k) {
            continue;
        }
        let pick = hosts[k]
            .iter()
            .copied()
            .filter(|n| !assigned.values().any(|x| x == n))
            .min_by(|&x, &y| (vn.cpu_demand * price(x)).total_cmp(&(vn.cpu_demand * price(y))).then(x.cmp(&y)));
        match pick {
            Some(n) => {
                assigned.insert(k, n);
            }
            None => return EmbeddingResult::rejected(vnr.id, alg, RejectCause::NoFeasibleCandidate { vnode: k }),
        }
    }

    let nodes: Vec<NodeId> = (0..vnr.nodes.len()).map(|k| assigned[&k]).collect();
    // Replay in routing order to record selections against the same overlay.
    let chosen: Vec<SubstratePath> = paths.into_iter().map(|p| p.expect("every link routed")).collect();
    let mut order: Vec<usize> = (0..vnr.links.len()).collect();
    order.sort_by(|&a, &b| vnr.links[b].bw_demand.total_cmp(&vnr.links[a].bw_demand).then(a.cmp(&b)));
    let routed = route_links(network, vnr, &nodes, &order, None, |_, k, _, _, _| Ok(chosen[k].clone()));
    match routed {
        Ok((paths, sel)) => assemble(network, vnr, alg, nodes, paths, sel),
        Err(c) => EmbeddingResult::rejected(vnr.id, alg, c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::check_constraints;
    use crate::topology::testutil::network;
    use crate::topology::{generate_substrate, generate_vnr, GeneratorConfig, VirtualLink, VirtualNode, VnrConfig};

    fn request(nodes: &[(f64, &[usize])], links: &[(usize, usize, f64)]) -> VirtualNetworkRequest {
        VirtualNetworkRequest {
            id: 1,
            nodes: nodes
                .iter()
                .enumerate()
                .map(|(id, &(cpu, d))| VirtualNode { id, cpu_demand: cpu, candidate_domains: d.to_vec() })
                .collect(),
            links: links.iter().map(|&(a, b, bw)| VirtualLink { endpoints: (a, b), bw_demand: bw }).collect(),
            arrival_time: 0.0,
            lifetime: 1.0,
        }
    }

    #[test]
    fn adjacent_nodes_outrank_two_hop_nodes() {
        // boundary 0, then 1 (one hop), then 2 (two hops)
        let net = network(
            1,
            &[(0, true, 10.0, 1.0), (0, false, 10.0, 1.0), (0, false, 10.0, 1.0)],
            &[(0, 1, 10.0, 1.0, 1.0), (1, 2, 10.0, 1.0, 1.0)],
        );
        let vnr = request(&[(1.0, &[0])], &[]);
        let c = hop_ranked_candidates(&net, &vnr);
        assert_eq!(c[0], vec![NodeId(0), NodeId(1)]);
    }

    #[test]
    fn single_candidate_gives_the_same_placement_everywhere() {
        let net = network(1, &[(0, true, 10.0, 3.0)], &[]);
        let vnr = request(&[(2.0, &[0])], &[]);
        let opts = EmbedOptions::default();
        let results: Vec<EmbeddingResult> = Algorithm::ALL.iter().map(|&a| plan(&net, &vnr, a, &opts)).collect();
        for r in &results {
            assert!(r.accepted, "{:?} {:?}", r.algorithm, r.cause);
            assert_eq!(r.node_assignment, vec![NodeId(0)]);
            assert_eq!(r.cost, 6.0);
        }
    }

    #[test]
    fn mc_vnm_takes_the_cheaper_path() {
        // square 0-1-3 (prices 1+2=3) vs 0-2-3 (prices 2+3=5)
        let net = network(
            1,
            &[(0, true, 10.0, 1.0), (0, false, 1.0, 1.0), (0, false, 1.0, 1.0), (0, true, 10.0, 1.0)],
            &[(0, 1, 10.0, 1.0, 1.0), (1, 3, 10.0, 2.0, 1.0), (0, 2, 10.0, 2.0, 1.0), (2, 3, 10.0, 3.0, 1.0)],
        );
        let vnr = request(&[(5.0, &[0]), (5.0, &[0])], &[(0, 1, 1.0)]);
        let r = plan_mc_vnm(&net, &vnr);
        assert!(r.accepted, "{:?}", r.cause);
        let mut hosts = r.node_assignment.clone();
        hosts.sort();
        assert_eq!(hosts, vec![NodeId(0), NodeId(3)]);
        assert_eq!(r.link_paths[0].total_unit_price, 3.0);
    }

    #[test]
    fn mc_vnm_pins_consistently_on_a_three_node_chain() {
        // virtual chain a-b-c, demands favour routing the heavy link first
        let net = network(
            1,
            &[(0, true, 10.0, 1.0), (0, false, 10.0, 5.0), (0, false, 10.0, 1.0), (0, true, 10.0, 2.0)],
            &[(0, 1, 50.0, 1.0, 1.0), (1, 2, 50.0, 1.0, 1.0), (2, 3, 50.0, 1.0, 1.0), (0, 2, 50.0, 1.0, 1.0)],
        );
        let vnr = request(&[(1.0, &[0]), (1.0, &[0]), (1.0, &[0])], &[(0, 1, 2.0), (1, 2, 9.0)]);
        let r = plan_mc_vnm(&net, &vnr);
        assert!(r.accepted, "{:?}", r.cause);
        // the heavy link b-c takes the two cheapest adjacent hosts, 0 and 2
        let (b, c) = (r.node_assignment[1], r.node_assignment[2]);
        assert_eq!(
            {
                let mut v = vec![b, c];
                v.sort();
                v
            },
            vec![NodeId(0), NodeId(2)]
        );
        // a is pinned next to b on the remaining hosts
        assert!(check_constraints(&net, &vnr, &r.node_assignment, &r.link_paths).is_ok());
    }

    #[test]
    fn lid_vne_is_seeded_and_rejects_empty_domains() {
        let net = generate_substrate(&GeneratorConfig::default(), 1).unwrap();
        let vnr = generate_vnr(&VnrConfig::default(), 4, 1, 0, 0.0).unwrap();
        assert_eq!(plan_lid_vne(&net, &vnr, 5), plan_lid_vne(&net, &vnr, 5));
        let mut starved = net.clone();
        for n in 0..starved.nodes().len() as u32 {
            starved.set_node_residual(NodeId(n), 0.0);
        }
        let r = plan_lid_vne(&starved, &vnr, 5);
        assert!(matches!(r.cause, Some(RejectCause::NoFeasibleCandidate { .. })));
    }

    #[test]
    fn pure_cost_weights_make_mp_vne_a_cost_minimiser() {
        let net = network(
            1,
            &[(0, true, 10.0, 4.0), (0, true, 10.0, 1.0), (0, false, 10.0, 2.0)],
            &[(0, 1, 10.0, 1.0, 9.0), (1, 2, 10.0, 1.0, 9.0), (0, 2, 10.0, 1.0, 9.0)],
        );
        let vnr = request(&[(3.0, &[0]), (3.0, &[0])], &[(0, 1, 1.0)]);
        let opts = EmbedOptions::default();
        let r = plan_mp_vne(&net, &vnr, &opts, MpWeights { cost: 1.0, inverse_bandwidth: 0.0, delay: 0.0 });
        assert!(r.accepted);
        let mut hosts = r.node_assignment.clone();
        hosts.sort();
        assert_eq!(hosts, vec![NodeId(1), NodeId(2)]);
        assert_eq!(r.cost, 3.0 + 6.0 + 1.0);
    }

    #[test]
    fn baselines_produce_valid_embeddings() {
        let mut net = generate_substrate(&GeneratorConfig::default(), 8).unwrap();
        let opts = EmbedOptions::default();
        for id in 0..10 {
            let vnr = generate_vnr(&VnrConfig::default(), 4, 8, id, 0.0).unwrap();
            for alg in Algorithm::ALL {
                let r = plan(&net, &vnr, alg, &opts);
                assert!(r.accepted, "{alg}: {:?}", r.cause);
                assert!(check_constraints(&net, &vnr, &r.node_assignment, &r.link_paths).is_ok());
            }
            let r = embed(&mut net, &vnr, Algorithm::LidVne, &opts);
            assert!(r.accepted);
        }
    }
}
