//! Random substrate and request generation following the Table-II style
//! parameter set (4 domains of 30 nodes, 2 boundary nodes each, 50% link
//! probability).

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{
    connected, quantize, LinkId, LinkKind, NodeId, SubstrateLink, SubstrateNetwork, SubstrateNode,
    TopologyError, VirtualLink, QUANTUM, VirtualNetworkRequest, VirtualNode,
};
use crate::rng::{mix, stream, STREAM_SUBSTRATE, STREAM_VNR};

/// Closed continuous interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub min: f64,
    pub max: f64,
}

impl Span {
    pub const fn new(min: f64, max: f64) -> Self {
        Span { min, max }
    }

    pub fn mean(&self) -> f64 {
        (self.min + self.max) / 2.0
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }

    /// Sample snapped to the ledger quantum, never below `min`.
    fn sample_quantized(&self, rng: &mut ChaCha8Rng) -> f64 {
        let lo = (self.min / QUANTUM).ceil() * QUANTUM;
        let hi = (self.max / QUANTUM).floor() * QUANTUM;
        if lo > hi {
            // narrower than one quantum
            return self.min;
        }
        quantize(self.sample(rng)).clamp(lo, hi)
    }

    fn check(&self, what: &str, positive: bool) -> Result<(), TopologyError> {
        let ok = self.min.is_finite() && self.max.is_finite() && self.min <= self.max;
        let ok = ok && if positive { self.min > 0.0 } else { self.min >= 0.0 };
        if ok {
            Ok(())
        } else {
            Err(TopologyError::InvalidConfig(format!("{what}: bad range [{}, {}]", self.min, self.max)))
        }
    }
}

/// Closed integer interval, used for price tiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntSpan {
    pub min: u32,
    pub max: u32,
}

impl IntSpan {
    pub const fn new(min: u32, max: u32) -> Self {
        IntSpan { min, max }
    }

    pub fn mean(&self) -> f64 {
        (self.min as f64 + self.max as f64) / 2.0
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.random_range(self.min..=self.max) as f64
    }

    fn check(&self, what: &str) -> Result<(), TopologyError> {
        if self.min >= 1 && self.min <= self.max {
            Ok(())
        } else {
            Err(TopologyError::InvalidConfig(format!("{what}: bad range [{}, {}]", self.min, self.max)))
        }
    }
}

fn check_probability(what: &str, p: f64) -> Result<(), TopologyError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(TopologyError::InvalidConfig(format!("{what}: {p} is not a probability")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub domains: usize,
    pub nodes_per_domain: usize,
    pub boundary_per_domain: usize,
    pub node_cpu: Span,
    pub node_price: IntSpan,
    pub intra_bw: Span,
    pub intra_price: IntSpan,
    pub intra_delay: Span,
    pub inter_bw: Span,
    pub inter_price: IntSpan,
    pub inter_delay: Span,
    pub intra_link_probability: f64,
    /// Probability of each extra boundary pair link beyond the mandatory one
    /// per domain pair.
    pub inter_link_probability: f64,
    pub max_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            domains: 4,
            nodes_per_domain: 30,
            boundary_per_domain: 2,
            node_cpu: Span::new(100.0, 300.0),
            node_price: IntSpan::new(1, 10),
            intra_bw: Span::new(1000.0, 3000.0),
            intra_price: IntSpan::new(1, 10),
            intra_delay: Span::new(1.0, 10.0),
            inter_bw: Span::new(1000.0, 3000.0),
            inter_price: IntSpan::new(5, 15),
            inter_delay: Span::new(10.0, 30.0),
            intra_link_probability: 0.5,
            inter_link_probability: 0.5,
            max_attempts: 1000,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.domains == 0 || self.nodes_per_domain == 0 || self.boundary_per_domain == 0 {
            return Err(TopologyError::InvalidConfig(
                "domains, nodes_per_domain and boundary_per_domain must be positive".into(),
            ));
        }
        if self.max_attempts == 0 {
            return Err(TopologyError::InvalidConfig("max_attempts must be positive".into()));
        }
        self.node_cpu.check("node_cpu", true)?;
        self.intra_bw.check("intra_bw", true)?;
        self.inter_bw.check("inter_bw", true)?;
        self.intra_delay.check("intra_delay", false)?;
        self.inter_delay.check("inter_delay", false)?;
        self.node_price.check("node_price")?;
        self.intra_price.check("intra_price")?;
        self.inter_price.check("inter_price")?;
        check_probability("intra_link_probability", self.intra_link_probability)?;
        check_probability("inter_link_probability", self.inter_link_probability)
    }
}

/// Draws a random substrate. Each domain's intra-domain graph is resampled
/// until connected; every pair of domains gets at least one inter-domain link.
pub fn generate_substrate(config: &GeneratorConfig, seed: u64) -> Result<SubstrateNetwork, TopologyError> {
    config.validate()?;
    let mut rng = stream(seed, STREAM_SUBSTRATE);
    let per = config.nodes_per_domain;
    let boundary_count = config.boundary_per_domain.min(per);

    let mut nodes = Vec::with_capacity(config.domains * per);
    let mut boundaries: Vec<Vec<NodeId>> = Vec::with_capacity(config.domains);
    for d in 0..config.domains {
        let base = d * per;
        let mut chosen: Vec<usize> = sample(&mut rng, per, boundary_count).into_vec();
        chosen.sort_unstable();
        boundaries.push(chosen.iter().map(|&i| NodeId((base + i) as u32)).collect());
        for i in 0..per {
            let cpu = config.node_cpu.sample_quantized(&mut rng);
            nodes.push(SubstrateNode {
                id: NodeId((base + i) as u32),
                domain: d,
                is_boundary: chosen.binary_search(&i).is_ok(),
                cpu_capacity: cpu,
                cpu_residual: cpu,
                cpu_unit_price: config.node_price.sample(&mut rng),
            });
        }
    }

    let mut links = Vec::new();
    for d in 0..config.domains {
        let pairs = connected_pairs(per, config.intra_link_probability, config.max_attempts, &mut rng)
            .ok_or(TopologyError::Disconnected { domain: d, attempts: config.max_attempts })?;
        let base = d * per;
        for (a, b) in pairs {
            let bw = config.intra_bw.sample_quantized(&mut rng);
            links.push(SubstrateLink {
                id: LinkId(links.len() as u32),
                endpoints: (NodeId((base + a) as u32), NodeId((base + b) as u32)),
                kind: LinkKind::IntraDomain,
                bw_capacity: bw,
                bw_residual: bw,
                bw_unit_price: config.intra_price.sample(&mut rng),
                delay: config.intra_delay.sample(&mut rng),
            });
        }
    }

    for da in 0..config.domains {
        for db in da + 1..config.domains {
            let candidates: Vec<(NodeId, NodeId)> = boundaries[da]
                .iter()
                .flat_map(|&x| boundaries[db].iter().map(move |&y| (x, y)))
                .collect();
            let mandatory = rng.random_range(0..candidates.len());
            for (i, &(x, y)) in candidates.iter().enumerate() {
                if i != mandatory && !rng.random_bool(config.inter_link_probability) {
                    continue;
                }
                let bw = config.inter_bw.sample_quantized(&mut rng);
                links.push(SubstrateLink {
                    id: LinkId(links.len() as u32),
                    endpoints: (x, y),
                    kind: LinkKind::InterDomain,
                    bw_capacity: bw,
                    bw_residual: bw,
                    bw_unit_price: config.inter_price.sample(&mut rng),
                    delay: config.inter_delay.sample(&mut rng),
                });
            }
        }
    }

    SubstrateNetwork::new(config.domains, nodes, links)
}

/// Random connected edge set over `n` vertices, or `None` once `attempts`
/// draws have all come out disconnected.
fn connected_pairs(n: usize, p: f64, attempts: usize, rng: &mut ChaCha8Rng) -> Option<Vec<(usize, usize)>> {
    for _ in 0..attempts {
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(p) {
                    pairs.push((a, b));
                }
            }
        }
        if connected(n, &pairs) {
            return Some(pairs);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VnrConfig {
    pub nodes: usize,
    pub candidate_domains: usize,
    pub cpu_demand: Span,
    pub bw_demand: Span,
    pub link_probability: f64,
    /// Mean of the exponential lifetime distribution.
    pub mean_lifetime: f64,
    pub max_attempts: usize,
}

impl Default for VnrConfig {
    fn default() -> Self {
        VnrConfig {
            nodes: 4,
            candidate_domains: 2,
            cpu_demand: Span::new(1.0, 10.0),
            bw_demand: Span::new(1.0, 10.0),
            link_probability: 0.5,
            mean_lifetime: 500.0,
            max_attempts: 1000,
        }
    }
}

impl VnrConfig {
    pub fn validate(&self, substrate_domains: usize) -> Result<(), TopologyError> {
        if self.nodes == 0 {
            return Err(TopologyError::InvalidConfig("a request needs at least one node".into()));
        }
        if self.candidate_domains == 0 || self.candidate_domains > substrate_domains {
            return Err(TopologyError::InvalidConfig(format!(
                "candidate_domains {} must be in 1..={substrate_domains}",
                self.candidate_domains
            )));
        }
        if !(self.mean_lifetime > 0.0) || !self.mean_lifetime.is_finite() {
            return Err(TopologyError::InvalidConfig("mean_lifetime must be positive".into()));
        }
        if self.max_attempts == 0 {
            return Err(TopologyError::InvalidConfig("max_attempts must be positive".into()));
        }
        self.cpu_demand.check("cpu_demand", true)?;
        self.bw_demand.check("bw_demand", true)?;
        check_probability("link_probability", self.link_probability)
    }
}

/// Draws one virtual network request. The lifetime is exponential with the
/// configured mean.
pub fn generate_vnr(
    config: &VnrConfig,
    substrate_domains: usize,
    seed: u64,
    id: u64,
    arrival_time: f64,
) -> Result<VirtualNetworkRequest, TopologyError> {
    config.validate(substrate_domains)?;
    let mut rng = stream(mix(seed, id), STREAM_VNR);
    let nodes: Vec<VirtualNode> = (0..config.nodes)
        .map(|i| {
            let cpu = config.cpu_demand.sample_quantized(&mut rng);
            let mut domains = sample(&mut rng, substrate_domains, config.candidate_domains).into_vec();
            domains.sort_unstable();
            VirtualNode { id: i, cpu_demand: cpu, candidate_domains: domains }
        })
        .collect();
    let pairs = connected_pairs(config.nodes, config.link_probability, config.max_attempts, &mut rng)
        .ok_or(TopologyError::DisconnectedRequest { attempts: config.max_attempts })?;
    let links = pairs
        .into_iter()
        .map(|(a, b)| VirtualLink { endpoints: (a, b), bw_demand: config.bw_demand.sample_quantized(&mut rng) })
        .collect();
    let exp = Exp::new(1.0 / config.mean_lifetime).expect("validated mean");
    let lifetime = exp.sample(&mut rng).max(f64::MIN_POSITIVE);
    Ok(VirtualNetworkRequest { id, nodes, links, arrival_time, lifetime })
}
