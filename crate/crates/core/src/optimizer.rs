//! Bounded global-best particle swarm optimization.
//!
//! Each iteration moves every particle sequentially from one seeded stream,
//! evaluates the new positions (in parallel when the `parallel` feature is on),
//! then folds personal and global bests in particle order. The fold order is
//! fixed, so results depend only on the seed, never on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Execution;

pub const DEFAULT_SEED: u64 = 20_180_607;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub max_iterations: usize,
    /// Stop once the global best is at or below this value.
    pub target_tolerance: f64,
    pub seed: u64,
    /// `(lo, hi)` per dimension.
    pub bounds: Vec<(f64, f64)>,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 30,
            inertia: 0.7298,
            cognitive: 1.49618,
            social: 1.49618,
            max_iterations: 300,
            target_tolerance: 1e-8,
            seed: DEFAULT_SEED,
            bounds: Vec::new(),
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::domain(format!(
                "swarm_size must be >= 2, got {}",
                self.swarm_size
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::domain("max_iterations must be >= 1"));
        }
        if self.bounds.is_empty() {
            return Err(Error::domain("bounds must name at least one dimension"));
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::domain(format!("bounds[{i}] = ({lo}, {hi}) needs lo < hi")));
            }
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_position: Vec<f64>,
    pub best_value: f64,
    /// Global best after initialisation (index 0) and after each iteration.
    pub history: Vec<f64>,
    pub iterations_run: usize,
}

impl OptimizationResult {
    /// History as `iteration,best_value` CSV.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iteration,best_value\n");
        for (i, v) in self.history.iter().enumerate() {
            s.push_str(&format!("{i},{v}\n"));
        }
        s
    }
}

/// Velocity and position update with explicit random coefficients.
pub fn update_with_coefficients(
    p: &Particle,
    gbest: &[f64],
    cfg: &PsoConfig,
    r1: &[f64],
    r2: &[f64],
) -> Result<Particle> {
    let d = cfg.dim();
    if p.position.len() != d
        || p.velocity.len() != d
        || p.best_position.len() != d
        || gbest.len() != d
        || r1.len() != d
        || r2.len() != d
    {
        return Err(Error::domain(format!(
            "dimension mismatch: bounds {d}, position {}, velocity {}, pbest {}, gbest {}",
            p.position.len(),
            p.velocity.len(),
            p.best_position.len(),
            gbest.len()
        )));
    }
    let mut next = p.clone();
    for k in 0..d {
        let x = p.position[k];
        let v = cfg.inertia * p.velocity[k]
            + cfg.cognitive * r1[k] * (p.best_position[k] - x)
            + cfg.social * r2[k] * (gbest[k] - x);
        let (lo, hi) = cfg.bounds[k];
        let moved = x + v;
        if moved < lo {
            next.position[k] = lo;
            next.velocity[k] = 0.0;
        } else if moved > hi {
            next.position[k] = hi;
            next.velocity[k] = 0.0;
        } else {
            next.position[k] = moved;
            next.velocity[k] = v;
        }
    }
    Ok(next)
}

/// One PSO move drawing `r1`, `r2` uniformly from `rng`.
pub fn update_particle<R: Rng + ?Sized>(p: &Particle, gbest: &[f64], cfg: &PsoConfig, rng: &mut R) -> Result<Particle> {
    let d = cfg.dim();
    let r1: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let r2: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    update_with_coefficients(p, gbest, cfg, &r1, &r2)
}

fn evaluate_all<F>(objective: &F, positions: &[Vec<f64>], exec: Execution) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            positions.par_iter().map(|x| objective(x)).collect()
        }
        _ => positions.iter().map(|x| objective(x)).collect(),
    }
}

fn check_finite(positions: &[Vec<f64>], values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFiniteObjective {
            position: positions[i].clone(),
            value: values[i],
        }),
        None => Ok(()),
    }
}

/// Minimise `objective` over the box in `cfg.bounds`.
pub fn optimize<F>(objective: F, cfg: &PsoConfig) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    optimize_with(objective, cfg, Execution::default())
}

pub fn optimize_with<F>(objective: F, cfg: &PsoConfig, exec: Execution) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // positions uniform in the box; initial velocity half the way to another
    // uniform point in the box
    let mut swarm: Vec<Particle> = (0..cfg.swarm_size)
        .map(|_| {
            let (position, velocity) = cfg
                .bounds
                .iter()
                .map(|&(lo, hi)| {
                    let x = rng.random_range(lo..=hi);
                    let y = rng.random_range(lo..=hi);
                    (x, 0.5 * (y - x))
                })
                .unzip::<_, _, Vec<f64>, Vec<f64>>();
            Particle {
                best_position: position.clone(),
                position,
                velocity,
                best_value: f64::INFINITY,
            }
        })
        .collect();

    let positions: Vec<Vec<f64>> = swarm.iter().map(|p| p.position.clone()).collect();
    let values = evaluate_all(&objective, &positions, exec);
    check_finite(&positions, &values)?;

    let mut best_position = positions[0].clone();
    let mut best_value = f64::INFINITY;
    for (p, &v) in swarm.iter_mut().zip(&values) {
        p.best_value = v;
        if v < best_value {
            best_value = v;
            best_position = p.position.clone();
        }
    }
    let mut history = vec![best_value];
    let mut iterations_run = 0;

    while iterations_run < cfg.max_iterations && best_value > cfg.target_tolerance {
        for p in swarm.iter_mut() {
            *p = update_particle(p, &best_position, cfg, &mut rng)?;
        }
        let positions: Vec<Vec<f64>> = swarm.iter().map(|p| p.position.clone()).collect();
        let values = evaluate_all(&objective, &positions, exec);
        check_finite(&positions, &values)?;

        for (p, &v) in swarm.iter_mut().zip(&values) {
            if v < p.best_value {
                p.best_value = v;
                p.best_position = p.position.clone();
            }
            if v < best_value {
                best_value = v;
                best_position = p.position.clone();
            }
        }
        history.push(best_value);
        iterations_run += 1;
    }

    Ok(OptimizationResult {
        best_position,
        best_value,
        history,
        iterations_run,
    })
}
