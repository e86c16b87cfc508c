//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits non-zero if any failed.
//!
//! Run with `cargo test -p bavne-core --test acceptance`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::time::Instant;

use bavne_core::abstraction::{aggregate_domain, domain_thresholds, global_view, select_candidate_nodes};
use bavne_core::baselines::embed;
use bavne_core::embedding::{candidate_space, check_constraints, CandidateFitness, EmbedOptions};
use bavne_core::pso::{run_premapping, Fitness};
use bavne_core::routing::NetworkView;
use bavne_core::simulation::{sweep, SweepConfig};
use bavne_core::topology::{LinkKind, SubstrateLink, SubstrateNode};
use bavne_core::{
    generate_substrate, generate_vnr, max_bandwidth_path, run, AbstractionOptions, Algorithm, GeneratorConfig,
    GlobalCandidateNetwork, LinkId, NodeId, PsoParams, SimulationConfig, SimulationReport, SubstrateNetwork,
    VnrConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Default-configuration runs, shared between criteria that compare the
/// same paired seeds. Every report's conservation audit is also kept for the
/// conservation criterion.
#[derive(Default)]
struct Runs {
    reports: RefCell<HashMap<(Algorithm, u64), SimulationReport>>,
    conservation: RefCell<Vec<(String, bool)>>,
}

impl Runs {
    fn get(&self, alg: Algorithm, seed: u64) -> SimulationReport {
        if let Some(r) = self.reports.borrow().get(&(alg, seed)) {
            return r.clone();
        }
        let r = run(&SimulationConfig { algorithm: alg, seed, ..Default::default() }).expect("default run");
        self.note(&r);
        self.reports.borrow_mut().insert((alg, seed), r.clone());
        r
    }

    fn note(&self, r: &SimulationReport) {
        self.conservation
            .borrow_mut()
            .push((format!("{} seed {}", r.algorithm, r.seed), r.conservation.residuals_restored && r.conservation.live_reservations == 0));
    }
}

type Criterion = (&'static str, Box<dyn Fn(&Runs) -> Outcome>);

fn main() {
    let runs = Runs::default();
    let criteria: Vec<Criterion> = vec![
        ("1 threshold compliance of selected intra-domain links", Box::new(threshold_compliance)),
        ("2 domain mean bandwidth and selected bandwidth above it", Box::new(domain_bandwidth)),
        ("3 selected bandwidth versus MP-VNE-like", Box::new(bandwidth_vs_mp)),
        ("4 PSO against the enumerated optimum", Box::new(pso_oracle)),
        ("5 cost and acceptance trends over request size", Box::new(size_trends)),
        ("6 delay versus MC-VNM-like, utilization versus VNE-PSO-like", Box::new(delay_and_utilization)),
        ("7 conservation and determinism", Box::new(conservation_and_determinism)),
        ("8 invariant suites", Box::new(invariants)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let t = Instant::now();
        let o = check(&runs);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("[{verdict}] criterion {name}: {} ({:.1}s)", o.detail, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn threshold_compliance(runs: &Runs) -> Outcome {
    let (mut checked, mut violations) = (0, 0);
    for seed in 0..20 {
        let r = runs.get(Algorithm::BaVne, seed);
        checked += r.threshold_audit.selections_checked;
        violations += r.threshold_audit.violations;
    }
    outcome(checked > 0 && violations == 0, format!("{violations} violations in {checked} selections over 20 seeds"))
}

fn domain_bandwidth(runs: &Runs) -> Outcome {
    let domains = GeneratorConfig::default().domains;
    let mut sums = vec![0.0; domains];
    let mut below = Vec::new();
    for seed in 0..30 {
        let r = runs.get(Algorithm::BaVne, seed);
        for d in &r.domain_bandwidth {
            sums[d.domain] += d.domain_mean_bandwidth;
            match d.average_selected_bandwidth {
                Some(s) if s > d.domain_mean_bandwidth => {}
                other => below.push(format!("seed {seed} domain {}: {other:?} vs {:.1}", d.domain, d.domain_mean_bandwidth)),
            }
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / 30.0).collect();
    let in_band = means.iter().all(|m| (1900.0..=2100.0).contains(m));
    let shown: Vec<String> = means.iter().map(|m| format!("{m:.1}")).collect();
    outcome(
        in_band && below.is_empty(),
        format!("domain means [{}]; runs not above the mean: {} {:?}", shown.join(", "), below.len(), below.iter().take(3).collect::<Vec<_>>()),
    )
}

fn bandwidth_vs_mp(runs: &Runs) -> Outcome {
    let mut wins = 0;
    for seed in 0..20 {
        let ba = runs.get(Algorithm::BaVne, seed).mean_selected_bandwidth();
        let mp = runs.get(Algorithm::MpVne, seed).mean_selected_bandwidth();
        wins += usize::from(matches!((ba, mp), (Some(a), Some(b)) if a >= b));
    }
    outcome(wins >= 18, format!("BA-VNE >= MP-VNE-like in {wins}/20 paired seeds"))
}

/// Cheapest unit price between two nodes of the pricing graph, by plain
/// Dijkstra.
fn shortest_price(adj: &BTreeMap<NodeId, Vec<(NodeId, f64)>>, src: NodeId, dst: NodeId) -> f64 {
    let mut dist: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(src, 0.0);
    heap.push(Reverse((0u64, src)));
    // prices are non-negative, so their bit patterns order like the values
    while let Some(Reverse((bits, u))) = heap.pop() {
        let d = f64::from_bits(bits);
        if u == dst {
            return d;
        }
        if d > dist[&u] {
            continue;
        }
        for &(v, w) in adj.get(&u).into_iter().flatten() {
            let nd = d + w;
            if dist.get(&v).is_none_or(|&old| nd < old) {
                dist.insert(v, nd);
                heap.push(Reverse((nd.to_bits(), v)));
            }
        }
    }
    f64::INFINITY
}

/// Fitness recomputed from the global view alone: node demand at candidate
/// price plus link demand at the cheapest route over qualified edges.
fn oracle_fitness(gcn: &GlobalCandidateNetwork, vnr: &bavne_core::VirtualNetworkRequest, pos: &[NodeId]) -> f64 {
    let mut total = 0.0;
    for (vn, &n) in vnr.nodes.iter().zip(pos) {
        total += vn.cpu_demand * gcn.candidate(n).expect("position uses candidates").cpu_unit_price;
    }
    for l in &vnr.links {
        let (u, v) = (pos[l.endpoints.0], pos[l.endpoints.1]);
        if u != v {
            total += l.bw_demand * shortest_price(&gcn.edges(l.bw_demand), u, v);
        }
    }
    total
}

fn injective_assignments(candidates: &[Vec<NodeId>]) -> Vec<Vec<NodeId>> {
    let mut out: Vec<Vec<NodeId>> = vec![Vec::new()];
    for options in candidates {
        let mut next = Vec::new();
        for prefix in &out {
            for &n in options.iter().filter(|n| !prefix.contains(n)) {
                let mut p = prefix.clone();
                p.push(n);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn pso_oracle(_: &Runs) -> Outcome {
    let cfg = GeneratorConfig { domains: 2, nodes_per_domain: 5, boundary_per_domain: 2, ..Default::default() };
    let (mut optimal, mut close, mut trials) = (0, 0, 0);
    for seed in 0..100u64 {
        trials += 1;
        let net = generate_substrate(&cfg, seed).expect("toy substrate");
        let vcfg = VnrConfig { nodes: 2 + (seed % 2) as usize, candidate_domains: 2, ..Default::default() };
        let vnr = generate_vnr(&vcfg, 2, seed, 0, 0.0).expect("toy request");
        let (gcn, _) = global_view(&net, AbstractionOptions::default()).expect("toy view");
        let Ok(space) = candidate_space(&gcn, &vnr) else { continue };
        let best = injective_assignments(&space.candidates)
            .iter()
            .map(|p| oracle_fitness(&gcn, &vnr, p))
            .fold(f64::INFINITY, f64::min);
        let params = PsoParams { swarm_size: 100, max_iterations: 200, seed, ..Default::default() };
        let fitness = CandidateFitness::new(&gcn, &vnr);
        let Ok(found) = run_premapping(&space, &fitness, &params) else { continue };
        let got = oracle_fitness(&gcn, &vnr, &found.position);
        assert_eq!(got, fitness.fitness(&found.position), "seed {seed}: fitness disagrees with the oracle");
        if !best.is_finite() || !got.is_finite() {
            continue;
        }
        optimal += usize::from(got == best);
        close += usize::from(got <= best * 1.1);
    }
    outcome(
        optimal * 100 >= 80 * trials && close * 100 >= 95 * trials,
        format!("optimal in {optimal}/{trials}, within 110% in {close}/{trials}"),
    )
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn plateau(r: &SimulationReport) -> f64 {
    let w = &r.windowed_acceptance;
    let tail: Vec<f64> = w[w.len() / 2..].iter().filter_map(|p| p.acceptance_rate.value()).collect();
    tail.iter().sum::<f64>() / tail.len().max(1) as f64
}

fn size_trends(runs: &Runs) -> Outcome {
    let sizes = vec![2, 4, 6, 8, 10, 12];
    let seeds: Vec<u64> = (0..10).collect();
    let algorithms = vec![Algorithm::BaVne, Algorithm::LidVne, Algorithm::VnePso];
    let config = SimulationConfig {
        sweep: Some(SweepConfig { vnr_nodes: sizes.clone(), algorithms, seeds: seeds.clone() }),
        ..Default::default()
    };
    let entries = sweep(&config).expect("trend sweep");
    for e in &entries {
        runs.note(&e.report);
    }
    let at = |n: usize, alg: Algorithm, seed: u64| {
        &entries.iter().find(|e| e.vnr_nodes == n && e.algorithm == alg && e.seed == seed).expect("grid point").report
    };

    let mut problems = Vec::new();
    let costs: Vec<(f64, f64)> = sizes
        .iter()
        .map(|&n| mean_and_se(&seeds.iter().filter_map(|&s| at(n, Algorithm::BaVne, s).average_cost).collect::<Vec<_>>()))
        .collect();
    for (i, pair) in costs.windows(2).enumerate() {
        let ((a, sa), (b, sb)) = (pair[0], pair[1]);
        if b < a - (sa * sa + sb * sb).sqrt() {
            problems.push(format!("cost drops from {} to {} nodes", sizes[i], sizes[i + 1]));
        }
    }

    let acceptance = |r: &SimulationReport| r.acceptance_rate.value().unwrap_or(0.0);
    let dominant = seeds
        .iter()
        .filter(|&&s| {
            sizes.iter().all(|&n| {
                let ba = acceptance(at(n, Algorithm::BaVne, s));
                ba >= acceptance(at(n, Algorithm::LidVne, s)) && ba >= acceptance(at(n, Algorithm::VnePso, s))
            })
        })
        .count();
    if dominant * 10 < 9 * seeds.len() {
        problems.push(format!("acceptance dominance in only {dominant}/{} seeds", seeds.len()));
    }

    let last = *sizes.last().unwrap();
    let plateau_of = |alg| seeds.iter().map(|&s| plateau(at(last, alg, s))).sum::<f64>() / seeds.len() as f64;
    let (ba_plateau, lid_plateau) = (plateau_of(Algorithm::BaVne), plateau_of(Algorithm::LidVne));
    if ba_plateau < lid_plateau {
        problems.push(format!("plateau {ba_plateau:.3} below LID-VNE-like {lid_plateau:.3}"));
    }
    let shown: Vec<String> = costs.iter().map(|(m, se)| format!("{m:.0}±{se:.0}")).collect();
    outcome(
        problems.is_empty(),
        format!(
            "cost by size [{}], dominance {dominant}/10, plateau {ba_plateau:.3} vs {lid_plateau:.3}{}",
            shown.join(", "),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn delay_and_utilization(runs: &Runs) -> Outcome {
    let (mut delay_wins, mut util_wins) = (0, 0);
    for seed in 0..20 {
        let ba = runs.get(Algorithm::BaVne, seed);
        let mc = runs.get(Algorithm::McVnm, seed);
        let pso = runs.get(Algorithm::VnePso, seed);
        delay_wins += usize::from(matches!((ba.average_delay, mc.average_delay), (Some(a), Some(b)) if a < b));
        util_wins += usize::from(matches!(
            (ba.link_utilization.value(), pso.link_utilization.value()),
            (Some(a), Some(b)) if a <= b
        ));
    }
    outcome(
        delay_wins >= 16 && util_wins >= 16,
        format!("delay below MC-VNM-like in {delay_wins}/20, utilization at most VNE-PSO-like in {util_wins}/20"),
    )
}

fn conservation_and_determinism(runs: &Runs) -> Outcome {
    let mut problems = Vec::new();
    let short = |alg, seed| SimulationConfig { algorithm: alg, seed, horizon: 3000.0, ..Default::default() };
    let mut serial = Vec::new();
    for alg in Algorithm::ALL {
        let reports: Vec<String> = (0..3)
            .map(|_| {
                let r = run(&short(alg, 7)).expect("short run");
                runs.note(&r);
                serde_json::to_string(&r).expect("report serializes")
            })
            .collect();
        if reports.iter().any(|r| r != &reports[0]) {
            problems.push(format!("{alg} differs across repetitions"));
        }
        serial.push(reports[0].clone());
    }
    let grid = SimulationConfig {
        horizon: 3000.0,
        sweep: Some(SweepConfig { vnr_nodes: vec![4], algorithms: Algorithm::ALL.to_vec(), seeds: vec![7] }),
        ..Default::default()
    };
    for round in 0..3 {
        let entries = sweep(&grid).expect("determinism sweep");
        for (e, expected) in entries.iter().zip(&serial) {
            runs.note(&e.report);
            if &serde_json::to_string(&e.report).expect("report serializes") != expected {
                problems.push(format!("{} differs under the sweep (round {round})", e.algorithm));
            }
        }
    }
    let all = runs.conservation.borrow();
    let leaks: Vec<&String> = all.iter().filter(|(_, ok)| !ok).map(|(name, _)| name).collect();
    if !leaks.is_empty() {
        problems.push(format!("residuals not restored: {leaks:?}"));
    }
    outcome(
        problems.is_empty(),
        format!("{} runs restored every residual; {}", all.len() - leaks.len(), if problems.is_empty() { "reports byte-identical".into() } else { problems.join("; ") }),
    )
}

fn invariants(_: &Runs) -> Outcome {
    let mut problems = Vec::new();

    // Global best never gets worse.
    let mut traces = 0;
    for alg in [Algorithm::BaVne, Algorithm::VnePso] {
        for seed in 0..3 {
            let cfg = SimulationConfig { algorithm: alg, seed, horizon: 3000.0, trace_fitness: true, ..Default::default() };
            let r = run(&cfg).expect("traced run");
            for t in r.fitness_traces.unwrap_or_default() {
                traces += 1;
                if t.best_fitness.windows(2).any(|w| w[1] > w[0]) {
                    problems.push(format!("{alg} request {} trace rises", t.vnr_id));
                }
            }
        }
    }

    // Every accepted plan satisfies the constraints against the network it
    // was planned on; every rejection leaves the ledger untouched. A small
    // substrate with no departures forces rejections.
    let tight = GeneratorConfig {
        domains: 3,
        nodes_per_domain: 8,
        node_cpu: bavne_core::topology::Span::new(20.0, 60.0),
        intra_bw: bavne_core::topology::Span::new(20.0, 60.0),
        inter_bw: bavne_core::topology::Span::new(20.0, 60.0),
        ..Default::default()
    };
    let vcfg = VnrConfig { nodes: 4, bw_demand: bavne_core::topology::Span::new(5.0, 20.0), ..Default::default() };
    let (mut accepted, mut rejected) = (0, 0);
    for seed in 0..4 {
        for alg in Algorithm::ALL {
            let mut net = generate_substrate(&tight, seed).expect("tight substrate");
            for id in 0..40 {
                let vnr = generate_vnr(&vcfg, tight.domains, seed, id, 0.0).expect("request");
                let before = net.clone();
                let digest = net.ledger_digest();
                let r = embed(&mut net, &vnr, alg, &EmbedOptions::default());
                if r.accepted {
                    accepted += 1;
                    if let Err(v) = check_constraints(&before, &vnr, &r.node_assignment, &r.link_paths) {
                        problems.push(format!("{alg} seed {seed} request {id}: {v:?}"));
                    }
                } else {
                    rejected += 1;
                    if net.ledger_digest() != digest || net != before {
                        problems.push(format!("{alg} seed {seed} request {id}: rejection changed the ledger"));
                    }
                }
            }
        }
    }
    if rejected == 0 {
        problems.push("the tight scenario produced no rejections".into());
    }

    // One boundary node with member links of 4 and 6 aggregates to 10.
    let node = |i: u32, boundary| SubstrateNode {
        id: NodeId(i),
        domain: 0,
        is_boundary: boundary,
        cpu_capacity: 10.0,
        cpu_residual: 10.0,
        cpu_unit_price: 1.0,
    };
    let link = |i: u32, a: u32, b: u32, bw: f64, price: f64| SubstrateLink {
        id: LinkId(i),
        endpoints: (NodeId(a), NodeId(b)),
        kind: LinkKind::IntraDomain,
        bw_capacity: bw,
        bw_residual: bw,
        bw_unit_price: price,
        delay: 1.0,
    };
    let fig = SubstrateNetwork::new(
        1,
        vec![node(0, true), node(1, false), node(2, false)],
        vec![link(0, 0, 1, 4.0, 2.0), link(1, 0, 2, 6.0, 5.0)],
    )
    .expect("aggregation case");
    let q = domain_thresholds(&fig, AbstractionOptions::default());
    let view = aggregate_domain(&fig, 0, select_candidate_nodes(&fig, 0, &q), &q);
    let agg: Vec<f64> = view.aggregated_links.iter().map(|a| a.bandwidth).collect();
    if agg != [10.0] {
        problems.push(format!("aggregation gave {agg:?}"));
    }

    // Routing against exhaustive enumeration.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    for trial in 0..500 {
        let (net, src, dst, demand) = random_graph(&mut rng);
        let got = max_bandwidth_path(&NetworkView::new(&net), src, dst, demand, false).ok().map(|p| p.nodes);
        let want = exhaustive_route(&net, src, dst, demand);
        if got != want {
            mismatches += 1;
            if mismatches <= 3 {
                problems.push(format!("routing trial {trial}: got {got:?}, want {want:?}"));
            }
        }
    }

    outcome(
        problems.is_empty(),
        format!(
            "{traces} traces monotone, {accepted} accepted plans valid, {rejected} rejections atomic, aggregation {agg:?}, routing mismatches {mismatches}/500{}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn random_graph(rng: &mut ChaCha8Rng) -> (SubstrateNetwork, NodeId, NodeId, f64) {
    let n = rng.random_range(2..=8u32);
    let nodes = (0..n)
        .map(|i| SubstrateNode {
            id: NodeId(i),
            domain: 0,
            is_boundary: false,
            cpu_capacity: 1.0,
            cpu_residual: 1.0,
            cpu_unit_price: 1.0,
        })
        .collect();
    let mut links = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.5) {
                // few distinct values, so ties are common
                let bw = rng.random_range(1..=4) as f64 * 5.0;
                links.push(SubstrateLink {
                    id: LinkId(links.len() as u32),
                    endpoints: (NodeId(a), NodeId(b)),
                    kind: LinkKind::IntraDomain,
                    bw_capacity: bw,
                    bw_residual: bw,
                    bw_unit_price: rng.random_range(1..=3) as f64,
                    delay: 1.0,
                });
            }
        }
    }
    let net = SubstrateNetwork::new(1, nodes, links).expect("random graph");
    let src = NodeId(rng.random_range(0..n));
    let dst = NodeId(rng.random_range(0..n));
    let demand = rng.random_range(0..=3) as f64 * 5.0;
    (net, src, dst, demand)
}

/// Every simple path with enough residual, ranked by hops, then widest
/// bottleneck, then cheapest total price, then node sequence.
fn exhaustive_route(net: &SubstrateNetwork, src: NodeId, dst: NodeId, demand: f64) -> Option<Vec<NodeId>> {
    fn walk(net: &SubstrateNetwork, dst: NodeId, demand: f64, path: &mut Vec<NodeId>, bw: f64, price: f64, out: &mut Vec<(usize, f64, f64, Vec<NodeId>)>) {
        let u = *path.last().unwrap();
        if u == dst {
            out.push((path.len(), bw, price, path.clone()));
            return;
        }
        for l in net.links() {
            if !l.touches(u) || l.bw_residual < demand {
                continue;
            }
            let v = l.other(u);
            if path.contains(&v) {
                continue;
            }
            path.push(v);
            walk(net, dst, demand, path, bw.min(l.bw_residual), price + l.bw_unit_price, out);
            path.pop();
        }
    }
    let mut all = Vec::new();
    walk(net, dst, demand, &mut vec![src], f64::INFINITY, 0.0, &mut all);
    all.into_iter()
        .min_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)).then(a.2.total_cmp(&b.2)).then(a.3.cmp(&b.3)))
        .map(|best| best.3)
}
