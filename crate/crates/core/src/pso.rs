//! Discrete particle swarm search over node assignments.
//!
//! A position assigns each virtual node one substrate node from that node's
//! candidate list. Velocity is kept per virtual node as two adoption
//! probabilities: how strongly the particle is pulled toward its personal
//! best and toward the global best at that node. The cognitive and social
//! terms add `c * r` wherever the best differs from the current position, and
//! the result is clamped to `[0, 1]`. After adoption a mutation step
//! resamples entries at random, and collisions are repaired so positions stay
//! injective.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{mix, stream, STREAM_PSO};
use crate::topology::NodeId;

/// Resamples allowed per node when repairing a collision.
pub const REPAIR_ATTEMPTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    pub swarm_size: usize,
    pub max_iterations: usize,
    pub c1: f64,
    pub c2: f64,
    pub mutation_rate: f64,
    pub seed: u64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self { swarm_size: 20, max_iterations: 50, c1: 1.5, c2: 1.5, mutation_rate: 0.05, seed: 0 }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<(), PsoError> {
        let bad = |reason: &str| Err(PsoError::InvalidParams(reason.to_string()));
        if self.swarm_size == 0 {
            return bad("swarm_size must be at least 1");
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return bad("c1 and c2 must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutation_rate must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum PsoError {
    #[error("virtual node {0} has no feasible candidate")]
    NoFeasibleCandidate(usize),
    #[error("no one-to-one assignment could be sampled from the candidate lists")]
    NoInjectiveAssignment,
    #[error("every explored assignment was infeasible")]
    PremappingFailed,
    #[error("invalid swarm parameters: {0}")]
    InvalidParams(String),
}

/// Candidate substrate nodes per virtual node, in preference order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SearchSpace {
    pub candidates: Vec<Vec<NodeId>>,
}

impl SearchSpace {
    pub fn new(candidates: Vec<Vec<NodeId>>) -> Result<Self, PsoError> {
        if let Some(k) = candidates.iter().position(Vec::is_empty) {
            return Err(PsoError::NoFeasibleCandidate(k));
        }
        Ok(Self { candidates })
    }

    pub fn dims(&self) -> usize {
        self.candidates.len()
    }

    pub fn contains(&self, position: &[NodeId]) -> bool {
        position.len() == self.dims() && position.iter().zip(&self.candidates).all(|(n, c)| c.contains(n))
    }

    /// Every injective assignment, in lexicographic candidate order. Only for
    /// small spaces.
    pub fn enumerate(&self) -> Vec<Vec<NodeId>> {
        fn rec(space: &SearchSpace, k: usize, cur: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
            if k == space.dims() {
                out.push(cur.clone());
                return;
            }
            for &n in &space.candidates[k] {
                if !cur.contains(&n) {
                    cur.push(n);
                    rec(space, k + 1, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(self, 0, &mut Vec::new(), &mut out);
        out
    }
}

pub fn is_injective(position: &[NodeId]) -> bool {
    let set: BTreeSet<_> = position.iter().collect();
    set.len() == position.len()
}

/// Cost of a complete assignment; infeasible assignments map to infinity.
pub trait Fitness {
    fn fitness(&self, position: &[NodeId]) -> f64;
}

impl<F: Fn(&[NodeId]) -> f64> Fitness for F {
    fn fitness(&self, position: &[NodeId]) -> f64 {
        self(position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub toward_personal: f64,
    pub toward_global: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<NodeId>,
    pub velocity: Vec<Velocity>,
    pub fitness: f64,
    pub personal_best: Vec<NodeId>,
    pub personal_best_fitness: f64,
}

#[derive(Debug, Clone)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub global_best: Vec<NodeId>,
    pub global_best_fitness: f64,
    pub iteration: usize,
    rngs: Vec<ChaCha8Rng>,
}

fn particle_rng(seed: u64, index: usize) -> ChaCha8Rng {
    stream(mix(seed, index as u64), STREAM_PSO)
}

fn sample_injective(space: &SearchSpace, rng: &mut impl Rng) -> Option<Vec<NodeId>> {
    'attempt: for _ in 0..REPAIR_ATTEMPTS {
        let mut pos: Vec<NodeId> = Vec::with_capacity(space.dims());
        for cands in &space.candidates {
            let mut pick = cands[rng.random_range(0..cands.len())];
            let mut tries = 0;
            while pos.contains(&pick) {
                tries += 1;
                if tries > REPAIR_ATTEMPTS {
                    // fall back to any unused candidate before giving up
                    let free: Vec<NodeId> = cands.iter().copied().filter(|c| !pos.contains(c)).collect();
                    if free.is_empty() {
                        continue 'attempt;
                    }
                    pick = free[rng.random_range(0..free.len())];
                    break;
                }
                pick = cands[rng.random_range(0..cands.len())];
            }
            pos.push(pick);
        }
        return Some(pos);
    }
    None
}

pub fn init_swarm(space: &SearchSpace, fitness: &dyn Fitness, params: &PsoParams) -> Result<Swarm, PsoError> {
    params.validate()?;
    if let Some(k) = space.candidates.iter().position(Vec::is_empty) {
        return Err(PsoError::NoFeasibleCandidate(k));
    }
    let mut particles = Vec::with_capacity(params.swarm_size);
    let mut rngs = Vec::with_capacity(params.swarm_size);
    for i in 0..params.swarm_size {
        let mut rng = particle_rng(params.seed, i);
        let position = sample_injective(space, &mut rng).ok_or(PsoError::NoInjectiveAssignment)?;
        let velocity = (0..space.dims())
            .map(|_| Velocity { toward_personal: rng.random(), toward_global: rng.random() })
            .collect();
        let f = fitness.fitness(&position);
        particles.push(Particle {
            personal_best: position.clone(),
            personal_best_fitness: f,
            position,
            velocity,
            fitness: f,
        });
        rngs.push(rng);
    }
    let best = particles
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.fitness.total_cmp(&b.1.fitness).then(a.0.cmp(&b.0)))
        .map(|(_, p)| p)
        .expect("swarm_size >= 1");
    Ok(Swarm {
        global_best: best.position.clone(),
        global_best_fitness: best.fitness,
        particles,
        iteration: 0,
        rngs,
    })
}

/// Velocity update with the random coefficients supplied by the caller.
pub fn update_velocity_with(particle: &Particle, global_best: &[NodeId], params: &PsoParams, r1: f64, r2: f64) -> Vec<Velocity> {
    particle
        .velocity
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let pb = f64::from(u8::from(particle.personal_best[k] != particle.position[k]));
            let gb = f64::from(u8::from(global_best[k] != particle.position[k]));
            Velocity {
                toward_personal: (v.toward_personal + params.c1 * r1 * pb).clamp(0.0, 1.0),
                toward_global: (v.toward_global + params.c2 * r2 * gb).clamp(0.0, 1.0),
            }
        })
        .collect()
}

pub fn update_velocity(particle: &Particle, global_best: &[NodeId], params: &PsoParams, rng: &mut impl Rng) -> Vec<Velocity> {
    let r1: f64 = rng.random();
    let r2: f64 = rng.random();
    update_velocity_with(particle, global_best, params, r1, r2)
}

pub fn update_position(
    particle: &Particle,
    global_best: &[NodeId],
    space: &SearchSpace,
    params: &PsoParams,
    rng: &mut impl Rng,
) -> Vec<NodeId> {
    let previous = &particle.position;
    let mut next = previous.clone();
    for (k, v) in particle.velocity.iter().enumerate() {
        if rng.random_bool(v.toward_personal) {
            next[k] = particle.personal_best[k];
        }
        if rng.random_bool(v.toward_global) {
            next[k] = global_best[k];
        }
        if params.mutation_rate > 0.0 && rng.random_bool(params.mutation_rate) {
            let cands = &space.candidates[k];
            next[k] = cands[rng.random_range(0..cands.len())];
        }
    }
    if is_injective(&next) {
        return next;
    }

    // Unchanged entries were distinct before, so keep them and resample the
    // changed entries that collide.
    let mut used: BTreeSet<NodeId> = (0..next.len()).filter(|&k| next[k] == previous[k]).map(|k| next[k]).collect();
    for k in 0..next.len() {
        if next[k] == previous[k] {
            continue;
        }
        let mut tries = 0;
        while used.contains(&next[k]) {
            if tries == REPAIR_ATTEMPTS {
                return previous.clone();
            }
            let cands = &space.candidates[k];
            next[k] = cands[rng.random_range(0..cands.len())];
            tries += 1;
        }
        used.insert(next[k]);
    }
    next
}

/// Fitness is a pure function of the position, and a converged swarm keeps
/// revisiting the same few positions.
struct Memo<'a> {
    inner: &'a dyn Fitness,
    seen: RefCell<HashMap<Vec<NodeId>, f64>>,
}

impl Fitness for Memo<'_> {
    fn fitness(&self, position: &[NodeId]) -> f64 {
        if let Some(&f) = self.seen.borrow().get(position) {
            return f;
        }
        let f = self.inner.fitness(position);
        self.seen.borrow_mut().insert(position.to_vec(), f);
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremapOutcome {
    pub position: Vec<NodeId>,
    pub fitness: f64,
    /// Global-best fitness after initialization and after every iteration.
    pub trace: Vec<f64>,
}

/// Runs the swarm for `max_iterations` and returns the global best.
pub fn run_premapping(space: &SearchSpace, fitness: &dyn Fitness, params: &PsoParams) -> Result<PremapOutcome, PsoError> {
    let fitness = &Memo { inner: fitness, seen: RefCell::new(HashMap::new()) };
    let mut swarm = init_swarm(space, fitness, params)?;
    let mut trace = Vec::with_capacity(params.max_iterations + 1);
    trace.push(swarm.global_best_fitness);
    for _ in 0..params.max_iterations {
        step(&mut swarm, space, fitness, params);
        trace.push(swarm.global_best_fitness);
    }
    if !swarm.global_best_fitness.is_finite() {
        return Err(PsoError::PremappingFailed);
    }
    Ok(PremapOutcome { position: swarm.global_best, fitness: swarm.global_best_fitness, trace })
}

/// One iteration over every particle: move, update velocity, then refresh
/// the personal and global bests.
pub fn step(swarm: &mut Swarm, space: &SearchSpace, fitness: &dyn Fitness, params: &PsoParams) {
    for i in 0..swarm.particles.len() {
        let rng = &mut swarm.rngs[i];
        let p = &swarm.particles[i];
        let position = update_position(p, &swarm.global_best, space, params, rng);
        let mut moved = Particle { position, ..p.clone() };
        moved.velocity = update_velocity(&moved, &swarm.global_best, params, rng);
        moved.fitness = fitness.fitness(&moved.position);
        if moved.fitness < moved.personal_best_fitness {
            moved.personal_best = moved.position.clone();
            moved.personal_best_fitness = moved.fitness;
        }
        if moved.personal_best_fitness < swarm.global_best_fitness {
            swarm.global_best = moved.personal_best.clone();
            swarm.global_best_fitness = moved.personal_best_fitness;
        }
        swarm.particles[i] = moved;
    }
    swarm.iteration += 1;
}
