//! Bat Algorithm for bounded continuous minimisation.
//!
//! Every run owns a single ChaCha8 generator seeded from [`BatConfig::seed`].
//! Draws are consumed in a fixed order so that a seed pins the whole run:
//!
//! 1. initialisation, bat by bat: `d` position draws, then `A0`, then `r0`;
//! 2. each iteration, bat by bat: the frequency draw, the pulse draw, `d` walk
//!    draws (only when the pulse draw exceeds the bat's pulse rate), and the
//!    loudness draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GrnError, Result};

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        GrnError::check_len("bounds", lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(GrnError::InvalidConfig("bounds have zero dimensions".into()));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(GrnError::InvalidConfig(format!(
                    "bounds dimension {j}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, lo), hi)| lo <= v && v <= hi)
    }

    /// Maps unit draws `u` onto the box: `lower + u * (upper - lower)`.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.lower).zip(&self.upper).map(|((u, lo), hi)| lo + u * (hi - lo)).collect()
    }
}

/// Hyperparameters of one optimisation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatConfig {
    pub population: usize,
    pub bounds: Bounds,
    pub q_min: f64,
    pub q_max: f64,
    /// Loudness reduction factor applied on each acceptance.
    pub alpha: f64,
    /// Pulse-rate growth constant.
    pub gamma: f64,
    pub max_iterations: usize,
    /// Random-walk step size multiplying the mean loudness.
    pub walk_step: f64,
    /// Stop as soon as the best fitness is at or below this value.
    pub target_fitness: f64,
    pub seed: u64,
}

impl BatConfig {
    /// Settings used for the artificial-network experiments: 200 bats,
    /// 2000 iterations, `alpha = gamma = 0.1`, `Q in [0, 1]`, walk step 0.001.
    pub fn standard(bounds: Bounds, seed: u64) -> Self {
        Self {
            population: 200,
            bounds,
            q_min: 0.0,
            q_max: 1.0,
            alpha: 0.1,
            gamma: 0.1,
            max_iterations: 2000,
            walk_step: 0.001,
            target_fitness: 0.0,
            seed,
        }
    }

    pub fn dimensions(&self) -> usize {
        self.bounds.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(GrnError::InvalidConfig(m));
        if self.population == 0 {
            return fail("population must be positive".into());
        }
        if !(self.q_min <= self.q_max) {
            return fail(format!("q_min {} exceeds q_max {}", self.q_min, self.q_max));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha {} outside (0, 1]", self.alpha));
        }
        if !(self.gamma > 0.0) {
            return fail(format!("gamma {} must be positive", self.gamma));
        }
        if !(self.walk_step > 0.0) {
            return fail(format!("walk_step {} must be positive", self.walk_step));
        }
        if self.target_fitness.is_nan() {
            return fail("target_fitness is NaN".into());
        }
        Ok(())
    }
}

/// State of one bat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bat {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub frequency: f64,
    pub loudness: f64,
    pub initial_loudness: f64,
    pub pulse_rate: f64,
    pub initial_pulse_rate: f64,
    /// Number of proposals this bat has accepted.
    pub acceptances: u32,
    pub fitness: f64,
}

/// Outcome of [`optimize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub iterations_used: usize,
    /// Best fitness after initialisation (entry 0) and after every iteration.
    pub fitness_history: Vec<f64>,
}

fn sanitize(f: f64) -> f64 {
    if f.is_finite() {
        f
    } else {
        f64::INFINITY
    }
}

/// Frequency-tuned move of one bat.
///
/// Sets the bat's frequency to `q_min + (q_max - q_min) * beta_draw`, updates
/// its velocity by `(position - best_position) * frequency` and returns the
/// clamped proposal `position + velocity`. The bat's position is left untouched.
pub fn update_bat(bat: &mut Bat, best_position: &[f64], config: &BatConfig, beta_draw: f64) -> Vec<f64> {
    bat.frequency = config.q_min + (config.q_max - config.q_min) * beta_draw;
    let q = bat.frequency;
    for ((v, x), b) in bat.velocity.iter_mut().zip(&bat.position).zip(best_position) {
        *v += (x - b) * q;
    }
    let mut proposal: Vec<f64> = bat.position.iter().zip(&bat.velocity).map(|(x, v)| x + v).collect();
    config.bounds.clamp(&mut proposal);
    proposal
}

/// Random walk around the best position: `best + eps * walk_step * mean_loudness`.
///
/// `eps` holds one direction draw in `[-1, 1]` per component.
pub fn local_search(
    best_position: &[f64],
    average_loudness: f64,
    config: &BatConfig,
    eps: &[f64],
) -> Vec<f64> {
    let scale = config.walk_step * average_loudness;
    let mut x: Vec<f64> = best_position.iter().zip(eps).map(|(b, e)| b + e * scale).collect();
    config.bounds.clamp(&mut x);
    x
}

/// Loudness decay and pulse-rate growth applied when a bat accepts a move at iteration `iteration`.
pub fn update_loudness_pulse(bat: &mut Bat, config: &BatConfig, iteration: usize) {
    bat.loudness *= config.alpha;
    bat.pulse_rate = bat.initial_pulse_rate * (1.0 - (-config.gamma * iteration as f64).exp());
    bat.acceptances += 1;
}

/// A bat population mid-run. [`optimize`] drives this to completion; it is
/// exposed so that callers can observe the state between iterations.
#[derive(Debug, Clone)]
pub struct Swarm {
    config: BatConfig,
    rng: ChaCha8Rng,
    bats: Vec<Bat>,
    best_index: usize,
    iteration: usize,
    history: Vec<f64>,
}

impl Swarm {
    /// Draws the initial population and evaluates it.
    pub fn new<F>(config: BatConfig, objective: &F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + ?Sized,
    {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.dimensions();
        let mut bats = Vec::with_capacity(config.population);
        let mut unit = vec![0.0; d];
        for _ in 0..config.population {
            for u in unit.iter_mut() {
                *u = rng.random::<f64>();
            }
            let position = config.bounds.from_unit(&unit);
            let loudness: f64 = rng.random();
            let pulse: f64 = rng.random();
            let fitness = sanitize(objective(&position));
            bats.push(Bat {
                position,
                velocity: vec![0.0; d],
                frequency: 0.0,
                loudness,
                initial_loudness: loudness,
                pulse_rate: pulse,
                initial_pulse_rate: pulse,
                acceptances: 0,
                fitness,
            });
        }
        let best_index = argmin(&bats);
        let history = vec![bats[best_index].fitness];
        Ok(Self { config, rng, bats, best_index, iteration: 0, history })
    }

    pub fn bats(&self) -> &[Bat] {
        &self.bats
    }

    pub fn best(&self) -> &Bat {
        &self.bats[self.best_index]
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn config(&self) -> &BatConfig {
        &self.config
    }

    pub fn is_done(&self) -> bool {
        self.iteration >= self.config.max_iterations || self.best().fitness <= self.config.target_fitness
    }

    /// Runs one full iteration over all bats. Returns the number of accepted moves.
    pub fn iterate<F>(&mut self, objective: &F) -> usize
    where
        F: Fn(&[f64]) -> f64 + ?Sized,
    {
        self.iteration += 1;
        let nt = self.iteration;
        let d = self.config.dimensions();
        let best_position = self.best().position.clone();
        let best_fitness = self.best().fitness;
        let mean_loudness = self.bats.iter().map(|b| b.loudness).sum::<f64>() / self.bats.len() as f64;
        let mut eps = vec![0.0; d];
        let mut accepted = 0;

        for bat in self.bats.iter_mut() {
            let beta: f64 = self.rng.random();
            let previous_velocity = bat.velocity.clone();
            let mut proposal = update_bat(bat, &best_position, &self.config, beta);
            let pulse_draw: f64 = self.rng.random();
            if pulse_draw > bat.pulse_rate {
                for e in eps.iter_mut() {
                    *e = self.rng.random_range(-1.0..=1.0);
                }
                proposal = local_search(&best_position, mean_loudness, &self.config, &eps);
            }
            let fitness = sanitize(objective(&proposal));
            let loudness_draw: f64 = self.rng.random();
            if loudness_draw < bat.loudness && fitness < best_fitness {
                bat.position = proposal;
                bat.fitness = fitness;
                update_loudness_pulse(bat, &self.config, nt);
                accepted += 1;
            } else {
                bat.velocity = previous_velocity;
            }
        }

        self.best_index = argmin(&self.bats);
        self.history.push(self.best().fitness);
        accepted
    }

    pub fn into_result(self) -> OptimizeResult {
        let best = &self.bats[self.best_index];
        OptimizeResult {
            best_position: best.position.clone(),
            best_fitness: best.fitness,
            iterations_used: self.iteration,
            fitness_history: self.history,
        }
    }
}

fn argmin(bats: &[Bat]) -> usize {
    // First index wins ties so ranking is stable.
    let mut best = 0;
    for (i, b) in bats.iter().enumerate().skip(1) {
        if b.fitness < bats[best].fitness {
            best = i;
        }
    }
    best
}

/// Minimises `objective` over `config.bounds`.
pub fn optimize<F>(objective: &F, config: &BatConfig) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut swarm = Swarm::new(config.clone(), objective)?;
    while !swarm.is_done() {
        swarm.iterate(objective);
    }
    Ok(swarm.into_result())
}
