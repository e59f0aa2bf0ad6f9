//! Global-best particle swarm minimization over a bounded box.
//!
//! Particles that would leave the box are reflected back into it with their
//! velocity reversed in that dimension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Maximum speed per dimension as a fraction of that dimension's range.
    pub velocity_clamp: f64,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            particles: 30,
            iterations: 100,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            velocity_clamp: 0.2,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SwarmError {
    #[error("invalid swarm configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("dimension {0} has empty or non-finite bounds")]
    InvalidBounds(usize),
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<(), SwarmError> {
        if self.particles < 2 {
            return Err(SwarmError::InvalidConfig("particles must be at least 2"));
        }
        if self.iterations < 1 {
            return Err(SwarmError::InvalidConfig("iterations must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.inertia) {
            return Err(SwarmError::InvalidConfig("inertia must lie in [0, 1)"));
        }
        if !(self.cognitive > 0.0 && self.social > 0.0) {
            return Err(SwarmError::InvalidConfig("acceleration constants must be positive"));
        }
        if !(self.velocity_clamp > 0.0) {
            return Err(SwarmError::InvalidConfig("velocity clamp must be positive"));
        }
        Ok(())
    }

    /// A copy with the seed replaced.
    pub fn with_seed(&self, seed: u64) -> SwarmConfig {
        SwarmConfig {
            seed,
            ..self.clone()
        }
    }
}

/// Result of a swarm run.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmOutcome {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Global best fitness after initialization and after every iteration.
    pub trace: Vec<f64>,
}

/// A configured swarm over `bounds`, optionally with some particles placed
/// at chosen starting positions.
pub struct Swarm<'a> {
    bounds: &'a [(f64, f64)],
    cfg: &'a SwarmConfig,
    initial: Vec<Vec<f64>>,
}

impl<'a> Swarm<'a> {
    pub fn new(bounds: &'a [(f64, f64)], cfg: &'a SwarmConfig) -> Result<Self, SwarmError> {
        cfg.validate()?;
        for (d, (lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(SwarmError::InvalidBounds(d));
            }
        }
        Ok(Swarm {
            bounds,
            cfg,
            initial: Vec::new(),
        })
    }

    /// Starting positions for the first particles (clamped into bounds).
    /// Extra positions beyond the particle count are ignored.
    pub fn with_initial_positions(mut self, positions: Vec<Vec<f64>>) -> Self {
        self.initial = positions;
        self
    }

    fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.bounds) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Minimizes `fitness`. Deterministic for a given seed.
    pub fn minimize(&self, fitness: impl Fn(&[f64]) -> f64) -> SwarmOutcome {
        let cfg = self.cfg;
        let dim = self.bounds.len();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let vmax: Vec<f64> = self
            .bounds
            .iter()
            .map(|(lo, hi)| cfg.velocity_clamp * (hi - lo))
            .collect();

        let mut positions: Vec<Vec<f64>> = Vec::with_capacity(cfg.particles);
        let mut velocities: Vec<Vec<f64>> = Vec::with_capacity(cfg.particles);
        for p in 0..cfg.particles {
            // draw uniformly for every particle so seeding does not depend on
            // how many starting positions were supplied
            let mut x: Vec<f64> = self
                .bounds
                .iter()
                .map(|(lo, hi)| rng.random_range(*lo..=*hi))
                .collect();
            if let Some(start) = self.initial.get(p) {
                x.copy_from_slice(&start[..dim]);
                self.clamp(&mut x);
            }
            let v = vmax.iter().map(|m| rng.random_range(-*m..=*m)).collect();
            positions.push(x);
            velocities.push(v);
        }

        let mut personal_best = positions.clone();
        let mut personal_fit: Vec<f64> = positions.iter().map(|x| fitness(x)).collect();
        let mut best = 0;
        for p in 1..cfg.particles {
            if personal_fit[p] < personal_fit[best] {
                best = p;
            }
        }
        let mut global_best = personal_best[best].clone();
        let mut global_fit = personal_fit[best];
        let mut trace = Vec::with_capacity(cfg.iterations + 1);
        trace.push(global_fit);

        for _ in 0..cfg.iterations {
            for p in 0..cfg.particles {
                let (x, v) = (&mut positions[p], &mut velocities[p]);
                let dims = x
                    .iter_mut()
                    .zip(v.iter_mut())
                    .zip(personal_best[p].iter().zip(&global_best))
                    .zip(vmax.iter().zip(self.bounds));
                for (((xd, vd), (pb, gb)), (vm, &(lo, hi))) in dims {
                    let r1: f64 = rng.random();
                    let r2: f64 = rng.random();
                    let nv = cfg.inertia * *vd + cfg.cognitive * r1 * (pb - *xd) + cfg.social * r2 * (gb - *xd);
                    *vd = nv.clamp(-vm, *vm);
                    let moved = *xd + *vd;
                    // reflect off the walls; clamping alone parks particles
                    // exactly on a bound, where the whole swarm can stall
                    if moved < lo {
                        *xd = (2.0 * lo - moved).min(hi);
                        *vd = -*vd;
                    } else if moved > hi {
                        *xd = (2.0 * hi - moved).max(lo);
                        *vd = -*vd;
                    } else {
                        *xd = moved;
                    }
                }
                let f = fitness(x);
                if f < personal_fit[p] {
                    personal_fit[p] = f;
                    personal_best[p].copy_from_slice(x);
                    if f < global_fit {
                        global_fit = f;
                        global_best.copy_from_slice(x);
                    }
                }
            }
            trace.push(global_fit);
        }

        SwarmOutcome {
            best_position: global_best,
            best_fitness: global_fit,
            trace,
        }
    }
}

/// Minimizes `fitness` over `bounds` with uniformly initialized particles.
pub fn swarm_optimize(
    fitness: impl Fn(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    cfg: &SwarmConfig,
) -> Result<SwarmOutcome, SwarmError> {
    Ok(Swarm::new(bounds, cfg)?.minimize(fitness))
}
