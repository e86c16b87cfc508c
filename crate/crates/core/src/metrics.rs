//! Evaluation indices: embedding cost, acceptance rate, link utilization,
//! selected bandwidth per domain and embedding delay.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::embedding::EmbeddingResult;
use crate::topology::{LinkId, SubstrateNetwork};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no samples for {0}")]
    NoSamples(String),
}

/// A ratio whose denominator may be zero. Serializes as a number, or as the
/// string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Defined(f64),
    Undefined,
}

impl Ratio {
    pub fn new(num: f64, den: f64) -> Self {
        if den == 0.0 {
            Ratio::Undefined
        } else {
            Ratio::Defined(num / den)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Defined(v) => Some(v),
            Ratio::Undefined => None,
        }
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ratio::Defined(v) => write!(f, "{v:.4}"),
            Ratio::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Ratio::Defined(v) => s.serialize_f64(*v),
            Ratio::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Ratio::Defined(v)),
            Raw::Str(s) if s == "undefined" => Ok(Ratio::Undefined),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"undefined\", got {s:?}"))),
        }
    }
}

/// Node demand times node price, plus link demand times the summed unit
/// price of every link on its path, using the network's current prices.
pub fn embedding_cost(result: &EmbeddingResult, network: &SubstrateNetwork) -> f64 {
    let nodes: f64 = result
        .node_assignment
        .iter()
        .zip(&result.node_demands)
        .map(|(&n, &d)| d * network.node(n).cpu_unit_price)
        .sum();
    let links: f64 = result
        .link_paths
        .iter()
        .zip(&result.link_demands)
        .map(|(p, &d)| d * p.links.iter().map(|&l| network.link(l).bw_unit_price).sum::<f64>())
        .sum();
    nodes + links
}

/// Running totals fed by the simulation loop.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsAccumulator {
    pub accepted_count: u64,
    pub total_count: u64,
    /// Links carrying at least one live embedding, with how many.
    active_links: BTreeMap<LinkId, u32>,
    pub total_substrate_links: usize,
    pub cost_samples: Vec<f64>,
    pub delay_samples: Vec<f64>,
    /// Per domain: sum and count of residual bandwidth of selected links.
    selected_bandwidth: BTreeMap<usize, (f64, u64)>,
}

impl MetricsAccumulator {
    pub fn new(total_substrate_links: usize) -> Self {
        Self { total_substrate_links, ..Default::default() }
    }

    /// Counts an arrival; accepted embeddings also start occupying links.
    pub fn record_arrival(&mut self, result: &EmbeddingResult) {
        self.total_count += 1;
        if !result.accepted {
            return;
        }
        self.accepted_count += 1;
        for l in result.used_links() {
            *self.active_links.entry(l).or_insert(0) += 1;
        }
        self.cost_samples.push(result.cost);
        self.delay_samples.push(result.total_delay);
        for s in &result.link_selections {
            let e = self.selected_bandwidth.entry(s.domain).or_insert((0.0, 0));
            e.0 += s.residual_at_selection;
            e.1 += 1;
        }
    }

    pub fn record_departure(&mut self, result: &EmbeddingResult) {
        for l in result.used_links() {
            if let Some(c) = self.active_links.get_mut(&l) {
                *c -= 1;
                if *c == 0 {
                    self.active_links.remove(&l);
                }
            }
        }
    }

    pub fn active_link_count(&self) -> usize {
        self.active_links.len()
    }

    pub fn selected_bandwidth_domains(&self) -> impl Iterator<Item = usize> + '_ {
        self.selected_bandwidth.keys().copied()
    }

    pub fn selected_bandwidth_count(&self, domain: usize) -> u64 {
        self.selected_bandwidth.get(&domain).map_or(0, |e| e.1)
    }
}

pub fn acceptance_rate(acc: &MetricsAccumulator) -> Ratio {
    Ratio::new(acc.accepted_count as f64, acc.total_count as f64)
}

/// Fraction of substrate links currently carrying a live embedding.
pub fn link_utilization(acc: &MetricsAccumulator) -> Ratio {
    Ratio::new(acc.active_links.len() as f64, acc.total_substrate_links as f64)
}

/// Mean residual bandwidth, at selection time, of the intra-domain links
/// chosen in `domain`.
pub fn average_selected_bandwidth(acc: &MetricsAccumulator, domain: usize) -> Result<f64, MetricsError> {
    match acc.selected_bandwidth.get(&domain) {
        Some(&(sum, n)) if n > 0 => Ok(sum / n as f64),
        _ => Err(MetricsError::NoSamples(format!("selected bandwidth in domain {domain}"))),
    }
}

/// Mean, over accepted requests, of the summed path delay of their links.
pub fn average_embedding_delay(acc: &MetricsAccumulator) -> Result<f64, MetricsError> {
    mean(&acc.delay_samples).ok_or_else(|| MetricsError::NoSamples("embedding delay".into()))
}

pub fn average_cost(acc: &MetricsAccumulator) -> Result<f64, MetricsError> {
    mean(&acc.cost_samples).ok_or_else(|| MetricsError::NoSamples("embedding cost".into()))
}

pub(crate) fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
