//! Discrete-event simulation: Poisson arrivals, exponential lifetimes, one
//! embedding attempt per arrival, release on departure.
//!
//! Events are ordered by time, then departures before arrivals, then request
//! id. Once the horizon is reached no new requests arrive, but every live
//! embedding still departs, so the run ends with the ledger back at its
//! capacities.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::AbstractionOptions;
use crate::baselines::{self, MpWeights};
use crate::embedding::{threshold_audit, Algorithm, EmbedOptions, EmbeddingResult};
use crate::metrics::{self, MetricsAccumulator, Ratio};
use crate::pso::PsoParams;
use crate::rng::{mix, stream, STREAM_ARRIVALS};
use crate::topology::{generate_substrate, generate_vnr, GeneratorConfig, TopologyError, VirtualNetworkRequest, VnrConfig};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

/// Grid for `sweep`: every combination of request size, algorithm and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub vnr_nodes: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { vnr_nodes: vec![2, 4, 6, 8, 10, 12], algorithms: Algorithm::ALL.to_vec(), seeds: (0..10).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub substrate: GeneratorConfig,
    pub vnr: VnrConfig,
    /// Requests per time unit.
    pub arrival_rate: f64,
    pub horizon: f64,
    /// Width of the windows used for the acceptance time series.
    pub window: f64,
    pub algorithm: Algorithm,
    pub pso: PsoParams,
    pub abstraction: AbstractionOptions,
    pub mp_weights: MpWeights,
    pub seed: u64,
    pub trace_fitness: bool,
    pub sweep: Option<SweepConfig>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            substrate: GeneratorConfig::default(),
            vnr: VnrConfig::default(),
            arrival_rate: 0.04,
            horizon: 10_000.0,
            window: 1_000.0,
            algorithm: Algorithm::BaVne,
            pso: PsoParams::default(),
            abstraction: AbstractionOptions::default(),
            mp_weights: MpWeights::default(),
            seed: 0,
            trace_fitness: false,
            sweep: None,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: &str| Err(SimulationError::InvalidConfig(m.to_string()));
        if !(self.arrival_rate > 0.0 && self.arrival_rate.is_finite()) {
            return bad("arrival_rate must be positive");
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be a non-negative number");
        }
        if !(self.window > 0.0) {
            return bad("window must be positive");
        }
        self.substrate.validate()?;
        self.vnr.validate(self.substrate.domains)?;
        self.pso.validate().map_err(|e| SimulationError::InvalidConfig(e.to_string()))?;
        if let Some(s) = &self.sweep {
            if s.vnr_nodes.is_empty() || s.algorithms.is_empty() || s.seeds.is_empty() {
                return bad("sweep grid must not be empty");
            }
        }
        Ok(())
    }

    fn embed_options(&self) -> EmbedOptions {
        EmbedOptions {
            pso: PsoParams { seed: mix(self.seed, self.pso.seed), ..self.pso },
            abstraction: self.abstraction,
            trace_fitness: self.trace_fitness,
            mp_weights: self.mp_weights,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Arrival { time: f64, vnr: VirtualNetworkRequest },
    Departure { time: f64, vnr_id: u64 },
}

impl Event {
    pub fn time(&self) -> f64 {
        match self {
            Event::Arrival { time, .. } | Event::Departure { time, .. } => *time,
        }
    }

    /// Total order: time, departures first, then id.
    pub fn order_key(&self) -> (OrderedTime, u8, u64) {
        match self {
            Event::Departure { time, vnr_id } => (OrderedTime(*time), 0, *vnr_id),
            Event::Arrival { time, vnr } => (OrderedTime(*time), 1, vnr.id),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedTime(pub f64);

impl Eq for OrderedTime {}

impl PartialOrd for OrderedTime {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedTime {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Arrival events up to the horizon, each with a fresh request.
pub fn schedule_arrivals(config: &SimulationConfig, seed: u64) -> Result<Vec<Event>, SimulationError> {
    let mut out = Vec::new();
    if config.horizon <= 0.0 {
        return Ok(out);
    }
    let gap = Exp::new(config.arrival_rate).map_err(|e| SimulationError::InvalidConfig(e.to_string()))?;
    let mut rng = stream(seed, STREAM_ARRIVALS);
    let mut t = 0.0;
    loop {
        t += gap.sample(&mut rng);
        if t > config.horizon {
            return Ok(out);
        }
        let id = out.len() as u64;
        let vnr = generate_vnr(&config.vnr, config.substrate.domains, seed, id, t)?;
        out.push(Event::Arrival { time: t, vnr });
        // keep the stream advancing identically whatever the request looked like
        let _: u32 = rng.random();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: String,
    pub vnr_id: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub accepted: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cause: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delay: Option<f64>,
    /// Substrate links in use by live embeddings after this event.
    pub active_links: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPoint {
    pub start: f64,
    pub end: f64,
    pub arrivals: u64,
    pub accepted: u64,
    pub acceptance_rate: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBandwidth {
    pub domain: usize,
    /// Mean capacity of the domain's intra-domain links.
    pub domain_mean_bandwidth: f64,
    /// Mean residual bandwidth of links selected in the domain.
    pub average_selected_bandwidth: Option<f64>,
    pub selections: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAudit {
    pub selections_checked: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationAudit {
    /// Every residual equals its capacity after the last departure.
    pub residuals_restored: bool,
    pub live_reservations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessTrace {
    pub vnr_id: u64,
    pub best_fitness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub algorithm: Algorithm,
    pub algorithm_label: String,
    pub seed: u64,
    pub horizon: f64,
    pub arrival_rate: f64,
    pub vnr_nodes: usize,
    pub arrivals: u64,
    pub accepted: u64,
    pub acceptance_rate: Ratio,
    pub windowed_acceptance: Vec<WindowPoint>,
    /// Mean over arrivals of the fraction of links carrying live embeddings.
    pub link_utilization: Ratio,
    pub peak_link_utilization: f64,
    pub average_cost: Option<f64>,
    pub total_cost: f64,
    pub average_delay: Option<f64>,
    pub domain_bandwidth: Vec<DomainBandwidth>,
    pub threshold_audit: ThresholdAudit,
    pub conservation: ConservationAudit,
    pub events: Vec<EventRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fitness_traces: Option<Vec<FitnessTrace>>,
}

impl SimulationReport {
    /// Headline metrics as `metric,value` CSV.
    pub fn metrics_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| x.to_string());
        let ratio = |r: Ratio| r.value().map_or_else(|| "undefined".to_string(), |x| x.to_string());
        let mut rows = vec![
            ("algorithm".to_string(), self.algorithm.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("arrivals".into(), self.arrivals.to_string()),
            ("accepted".into(), self.accepted.to_string()),
            ("acceptance_rate".into(), ratio(self.acceptance_rate)),
            ("link_utilization".into(), ratio(self.link_utilization)),
            ("average_cost".into(), opt(self.average_cost)),
            ("average_delay".into(), opt(self.average_delay)),
        ];
        for d in &self.domain_bandwidth {
            rows.push((format!("domain_{}_mean_bandwidth", d.domain), d.domain_mean_bandwidth.to_string()));
            rows.push((format!("domain_{}_selected_bandwidth", d.domain), opt(d.average_selected_bandwidth)));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "value"]).expect("in-memory write");
        for (k, v) in rows {
            w.write_record([k, v]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    /// Mean selected bandwidth over all domains with samples.
    pub fn mean_selected_bandwidth(&self) -> Option<f64> {
        let (sum, n) = self
            .domain_bandwidth
            .iter()
            .filter_map(|d| d.average_selected_bandwidth.map(|b| (b * d.selections as f64, d.selections)))
            .fold((0.0, 0), |(s, c), (b, n)| (s + b, c + n));
        (n > 0).then(|| sum / n as f64)
    }
}

/// Runs one simulation to completion.
pub fn run(config: &SimulationConfig) -> Result<SimulationReport, SimulationError> {
    config.validate()?;
    let mut network = generate_substrate(&config.substrate, config.seed)?;
    let arrivals = schedule_arrivals(config, config.seed)?;
    let opts = config.embed_options();
    let domains = network.domains();
    let domain_means: Vec<f64> = (0..domains).map(|d| network.domain_mean_capacity(d)).collect();

    let mut acc = MetricsAccumulator::new(network.links().len());
    let mut live: BTreeMap<u64, EmbeddingResult> = BTreeMap::new();
    let mut departures: BTreeSet<(OrderedTime, u64)> = BTreeSet::new();
    let mut events = Vec::new();
    let mut traces = Vec::new();
    let mut audit = ThresholdAudit { selections_checked: 0, violations: 0 };
    let mut utilization_sum = 0.0;
    let mut peak: f64 = 0.0;
    let mut arrival_log: Vec<(f64, bool)> = Vec::new();
    let total_links = network.links().len().max(1) as f64;

    let depart_until = |t: Option<f64>,
                            network: &mut crate::topology::SubstrateNetwork,
                            acc: &mut MetricsAccumulator,
                            live: &mut BTreeMap<u64, EmbeddingResult>,
                            departures: &mut BTreeSet<(OrderedTime, u64)>,
                            events: &mut Vec<EventRecord>| {
        while let Some(&(time, id)) = departures.first() {
            if t.is_some_and(|t| time.0 > t) {
                break;
            }
            departures.pop_first();
            let r = live.remove(&id).expect("departure of a live embedding");
            network.release(&r).expect("live embeddings are allocated");
            acc.record_departure(&r);
            events.push(EventRecord {
                time: time.0,
                kind: "departure".into(),
                vnr_id: id,
                accepted: None,
                cause: None,
                cost: None,
                delay: None,
                active_links: acc.active_link_count(),
            });
        }
    };

    for ev in arrivals {
        let Event::Arrival { time, vnr } = ev else { continue };
        // departures at the same instant go first
        depart_until(Some(time), &mut network, &mut acc, &mut live, &mut departures, &mut events);
        let before = network.ledger_digest();
        let result = baselines::embed(&mut network, &vnr, config.algorithm, &opts);
        if !result.accepted {
            assert_eq!(before, network.ledger_digest(), "rejection changed the ledger");
        }
        acc.record_arrival(&result);
        for s in &result.link_selections {
            audit.selections_checked += 1;
            if s.threshold.is_some_and(|t| s.compared_bandwidth < t) {
                audit.violations += 1;
            }
        }
        debug_assert!(threshold_audit(&result) || config.algorithm != Algorithm::BaVne);
        if let Some(tr) = &result.fitness_trace {
            traces.push(FitnessTrace { vnr_id: vnr.id, best_fitness: tr.clone() });
        }
        let util = acc.active_link_count() as f64 / total_links;
        utilization_sum += util;
        peak = peak.max(util);
        arrival_log.push((time, result.accepted));
        events.push(EventRecord {
            time,
            kind: "arrival".into(),
            vnr_id: vnr.id,
            accepted: Some(result.accepted),
            cause: result.cause.as_ref().map(|c| c.to_string()),
            cost: result.accepted.then_some(result.cost),
            delay: result.accepted.then_some(result.total_delay),
            active_links: acc.active_link_count(),
        });
        if result.accepted {
            departures.insert((OrderedTime(vnr.departure_time()), vnr.id));
            live.insert(vnr.id, result);
        }
    }
    depart_until(None, &mut network, &mut acc, &mut live, &mut departures, &mut events);

    let mut windows = Vec::new();
    if config.horizon > 0.0 {
        let count = (config.horizon / config.window).ceil() as usize;
        for w in 0..count {
            let start = w as f64 * config.window;
            let end = (start + config.window).min(config.horizon);
            let inside = arrival_log.iter().filter(|(t, _)| *t > start && *t <= end || (w == 0 && *t == 0.0));
            let (n, ok) = inside.fold((0u64, 0u64), |(n, ok), (_, a)| (n + 1, ok + u64::from(*a)));
            windows.push(WindowPoint {
                start,
                end,
                arrivals: n,
                accepted: ok,
                acceptance_rate: Ratio::new(ok as f64, n as f64),
            });
        }
    }

    let domain_bandwidth = (0..domains)
        .map(|d| DomainBandwidth {
            domain: d,
            domain_mean_bandwidth: domain_means[d],
            average_selected_bandwidth: metrics::average_selected_bandwidth(&acc, d).ok(),
            selections: acc.selected_bandwidth_count(d),
        })
        .collect();

    Ok(SimulationReport {
        algorithm: config.algorithm,
        algorithm_label: config.algorithm.label().to_string(),
        seed: config.seed,
        horizon: config.horizon,
        arrival_rate: config.arrival_rate,
        vnr_nodes: config.vnr.nodes,
        arrivals: acc.total_count,
        accepted: acc.accepted_count,
        acceptance_rate: metrics::acceptance_rate(&acc),
        windowed_acceptance: windows,
        link_utilization: if acc.total_count == 0 {
            Ratio::Defined(0.0)
        } else {
            Ratio::Defined(utilization_sum / acc.total_count as f64)
        },
        peak_link_utilization: peak,
        average_cost: metrics::average_cost(&acc).ok(),
        total_cost: acc.cost_samples.iter().sum(),
        average_delay: metrics::average_embedding_delay(&acc).ok(),
        domain_bandwidth,
        threshold_audit: audit,
        conservation: ConservationAudit {
            residuals_restored: network.is_pristine(),
            live_reservations: network.reservations().count(),
        },
        events,
        fitness_traces: config.trace_fitness.then_some(traces),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub vnr_nodes: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub report: SimulationReport,
}

/// One run per (request size, algorithm, seed). Runs at the same size and
/// seed share the substrate and the arrival sequence.
pub fn sweep(config: &SimulationConfig) -> Result<Vec<SweepEntry>, SimulationError> {
    config.validate()?;
    let grid = config.sweep.clone().unwrap_or_default();
    let mut points = Vec::new();
    for &n in &grid.vnr_nodes {
        for &alg in &grid.algorithms {
            for &seed in &grid.seeds {
                points.push((n, alg, seed));
            }
        }
    }
    points
        .into_par_iter()
        .map(|(n, alg, seed)| {
            let cfg = SimulationConfig {
                vnr: VnrConfig { nodes: n, ..config.vnr.clone() },
                algorithm: alg,
                seed,
                sweep: None,
                ..config.clone()
            };
            run(&cfg).map(|report| SweepEntry { vnr_nodes: n, algorithm: alg, seed, report })
        })
        .collect()
}

pub const EXPERIMENT_FILES: [&str; 6] = [
    "exp1_avg_bandwidth.csv",
    "exp2_bandwidth_vs_mpvne.csv",
    "exp3_cost.csv",
    "exp4_acceptance.csv",
    "exp5_delay.csv",
    "exp6_utilization.csv",
];

pub const CSV_HEADER: [&str; 4] = ["grid_value", "algorithm", "seed", "value"];

/// The six per-experiment tables as `(file name, contents)`. Bandwidth
/// tables are keyed by domain and use the runs at `reference_nodes` (or the
/// smallest size in the sweep if absent); the others are keyed by request
/// size.
pub fn experiment_tables(entries: &[SweepEntry], reference_nodes: usize) -> Vec<(String, String)> {
    let sizes: BTreeSet<usize> = entries.iter().map(|e| e.vnr_nodes).collect();
    let reference = if sizes.contains(&reference_nodes) {
        reference_nodes
    } else {
        sizes.first().copied().unwrap_or(reference_nodes)
    };
    let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| x.to_string());

    let mut sorted: Vec<&SweepEntry> = entries.iter().collect();
    sorted.sort_by_key(|e| (e.vnr_nodes, e.algorithm, e.seed));

    let table = |rows: Vec<[String; 4]>| -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in rows {
            w.write_record(&r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    };

    let mut exp1 = Vec::new();
    let mut exp2 = Vec::new();
    for e in sorted.iter().filter(|e| e.vnr_nodes == reference) {
        for d in &e.report.domain_bandwidth {
            let row = |name: &str, v: Option<f64>| [d.domain.to_string(), name.to_string(), e.seed.to_string(), fmt(v)];
            if e.algorithm == Algorithm::BaVne {
                exp1.push(row("domain-mean", Some(d.domain_mean_bandwidth)));
                exp1.push(row("ba-vne", d.average_selected_bandwidth));
            }
            if matches!(e.algorithm, Algorithm::BaVne | Algorithm::MpVne) {
                exp2.push(row(e.algorithm.name(), d.average_selected_bandwidth));
            }
        }
    }
    exp1.sort_by(|a, b| (a[0].parse::<usize>().ok(), &a[1], a[2].parse::<u64>().ok()).cmp(&(b[0].parse().ok(), &b[1], b[2].parse().ok())));
    exp2.sort_by(|a, b| (a[0].parse::<usize>().ok(), &a[1], a[2].parse::<u64>().ok()).cmp(&(b[0].parse().ok(), &b[1], b[2].parse().ok())));

    let per_size = |f: &dyn Fn(&SimulationReport) -> Option<f64>| -> Vec<[String; 4]> {
        sorted
            .iter()
            .map(|e| [e.vnr_nodes.to_string(), e.algorithm.name().to_string(), e.seed.to_string(), fmt(f(&e.report))])
            .collect()
    };

    vec![
        (EXPERIMENT_FILES[0].to_string(), table(exp1)),
        (EXPERIMENT_FILES[1].to_string(), table(exp2)),
        (EXPERIMENT_FILES[2].to_string(), table(per_size(&|r| r.average_cost))),
        (EXPERIMENT_FILES[3].to_string(), table(per_size(&|r| r.acceptance_rate.value()))),
        (EXPERIMENT_FILES[4].to_string(), table(per_size(&|r| r.average_delay))),
        (EXPERIMENT_FILES[5].to_string(), table(per_size(&|r| r.link_utilization.value()))),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(alg: Algorithm, seed: u64, horizon: f64) -> SimulationConfig {
        SimulationConfig { algorithm: alg, seed, horizon, ..Default::default() }
    }

    #[test]
    fn arrival_counts_follow_the_rate() {
        let cfg = quick(Algorithm::BaVne, 0, 500.0);
        let counts: Vec<f64> = (0..200).map(|s| schedule_arrivals(&cfg, s).unwrap().len() as f64).collect();
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        // Poisson(20): standard error of the mean is sqrt(20 / 200)
        let se = (20.0f64 / 200.0).sqrt();
        assert!((mean - 20.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn zero_horizon_schedules_nothing() {
        assert!(schedule_arrivals(&quick(Algorithm::BaVne, 0, 0.0), 1).unwrap().is_empty());
    }

    #[test]
    fn schedules_repeat_for_a_seed() {
        let cfg = quick(Algorithm::BaVne, 0, 2000.0);
        assert_eq!(schedule_arrivals(&cfg, 4).unwrap(), schedule_arrivals(&cfg, 4).unwrap());
        assert_ne!(schedule_arrivals(&cfg, 4).unwrap(), schedule_arrivals(&cfg, 5).unwrap());
    }

    #[test]
    fn event_order_breaks_ties_with_departures_first() {
        let vnr = generate_vnr(&VnrConfig::default(), 4, 0, 3, 5.0).unwrap();
        let a = Event::Arrival { time: 5.0, vnr };
        let d = Event::Departure { time: 5.0, vnr_id: 9 };
        let d2 = Event::Departure { time: 5.0, vnr_id: 1 };
        let mut v = [a.clone(), d.clone(), d2.clone()];
        v.sort_by_key(Event::order_key);
        assert_eq!(v.iter().map(Event::order_key).collect::<Vec<_>>(), vec![d2.order_key(), d.order_key(), a.order_key()]);
    }

    #[test]
    fn empty_workload_reports_undefined_acceptance() {
        let r = run(&quick(Algorithm::BaVne, 0, 0.0)).unwrap();
        assert_eq!(r.arrivals, 0);
        assert_eq!(r.acceptance_rate, Ratio::Undefined);
        assert_eq!(r.link_utilization, Ratio::Defined(0.0));
        assert!(r.conservation.residuals_restored);
    }

    #[test]
    fn one_small_request_is_accepted() {
        // a horizon short enough for exactly one arrival with this seed
        let cfg = quick(Algorithm::BaVne, 0, 1000.0);
        let first = schedule_arrivals(&cfg, 0).unwrap()[0].time();
        let r = run(&SimulationConfig { horizon: first, ..cfg }).unwrap();
        assert_eq!(r.arrivals, 1);
        assert_eq!(r.acceptance_rate, Ratio::Defined(1.0));
    }

    #[test]
    fn short_runs_restore_the_ledger_for_every_algorithm() {
        for alg in Algorithm::ALL {
            let r = run(&quick(alg, 3, 1500.0)).unwrap();
            assert!(r.arrivals > 0);
            assert!(r.conservation.residuals_restored, "{alg}");
            assert_eq!(r.conservation.live_reservations, 0);
            let u = r.link_utilization.value().unwrap();
            assert!((0.0..=1.0).contains(&u));
        }
    }

    #[test]
    fn reports_are_byte_identical_for_a_seed() {
        let cfg = SimulationConfig { trace_fitness: true, ..quick(Algorithm::BaVne, 2, 1500.0) };
        let a = serde_json::to_string(&run(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ba_vne_run_passes_the_threshold_audit() {
        let r = run(&quick(Algorithm::BaVne, 1, 3000.0)).unwrap();
        assert!(r.threshold_audit.selections_checked > 0);
        assert_eq!(r.threshold_audit.violations, 0);
    }

    #[test]
    fn audit_compares_capacity_under_the_capacity_basis() {
        for plus_one in [false, true] {
            let cfg = SimulationConfig {
                abstraction: AbstractionOptions { plus_one, basis: crate::routing::ThresholdBasis::Capacity },
                ..quick(Algorithm::BaVne, 2, 3000.0)
            };
            let r = run(&cfg).unwrap();
            assert!(r.threshold_audit.selections_checked > 0);
            assert_eq!(r.threshold_audit.violations, 0);
        }
    }

    #[test]
    fn sweep_counts_and_pairs_seeds() {
        let cfg = SimulationConfig {
            horizon: 300.0,
            sweep: Some(SweepConfig { vnr_nodes: vec![2, 3], algorithms: vec![Algorithm::BaVne, Algorithm::LidVne], seeds: vec![0, 1] }),
            ..Default::default()
        };
        let entries = sweep(&cfg).unwrap();
        assert_eq!(entries.len(), 8);
        let tables = experiment_tables(&entries, 4);
        assert_eq!(tables.len(), 6);
        for (name, body) in &tables {
            assert!(body.starts_with("grid_value,algorithm,seed,value\n"), "{name}");
        }
        let exp4 = &tables[3].1;
        for n in [2, 3] {
            let seeds = |alg: &str| -> Vec<String> {
                exp4.lines()
                    .skip(1)
                    .filter(|l| l.starts_with(&format!("{n},{alg},")))
                    .map(|l| l.split(',').nth(2).unwrap().to_string())
                    .collect()
            };
            assert_eq!(seeds("ba-vne"), seeds("lid-vne"));
        }
    }
}
