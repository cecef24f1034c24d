//! Experiment runner: uniform choice of the ordered setting pair, delegation
//! to a model, optional flip noise on the second outcome.
//!
//! Throw `i` draws everything from `throw_stream(seed, i)`, so the record
//! stream depends only on the plan and not on the worker count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::Tally;
use crate::domain::{Setting, SettingTriple, ThrowRecord};
use crate::error::{Error, Result};
use crate::quantum::{self, QubitState};
use crate::realist::{self, Disturbance, RealityDist};
use crate::rng::{bernoulli, throw_stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Quantum { state: QubitState },
    Realist { dist: RealityDist },
    Invasive { dist: RealityDist, disturbance: Disturbance },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Quantum { .. } => "quantum",
            Model::Realist { .. } => "realist",
            Model::Invasive { .. } => "invasive",
        }
    }

    fn sample<R: Rng + ?Sized>(
        &self,
        throw_id: u64,
        triple: &SettingTriple,
        pair: (Setting, Setting),
        rng: &mut R,
    ) -> ThrowRecord {
        match self {
            Model::Quantum { state } => quantum::sample_throw(
                throw_id,
                state,
                (pair.0, triple.direction(pair.0)),
                (pair.1, triple.direction(pair.1)),
                rng,
            ),
            Model::Realist { dist } => realist::sample_throw(throw_id, dist, pair, rng),
            Model::Invasive { dist, disturbance } => {
                realist::invasive_sample_throw(throw_id, dist, disturbance, pair, rng)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub model: Model,
    pub triple: SettingTriple,
    pub n_throws: u64,
    pub seed: u64,
    /// Probability of flipping each second outcome, in `[0, 1/2]`.
    #[serde(default)]
    pub second_flip: f64,
}

impl ExperimentPlan {
    pub fn new(model: Model, triple: SettingTriple, n_throws: u64, seed: u64) -> Self {
        ExperimentPlan {
            model,
            triple,
            n_throws,
            seed,
            second_flip: 0.0,
        }
    }

    pub fn with_second_flip(mut self, eta: f64) -> Self {
        self.second_flip = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_throws == 0 {
            return Err(Error::InvalidPlan("n_throws must be at least 1".into()));
        }
        if !(0.0..=0.5).contains(&self.second_flip) {
            return Err(Error::InvalidPlan(format!(
                "flip probability {} outside [0, 1/2]",
                self.second_flip
            )));
        }
        if let Model::Invasive { disturbance, .. } = &self.model {
            disturbance.validate()?;
        }
        Ok(())
    }

    /// Generates throw `throw_id`.
    pub fn throw(&self, throw_id: u64) -> ThrowRecord {
        let mut rng = throw_stream(self.seed, throw_id);
        let pair = choose_setting_pair(&mut rng);
        let mut record = self.model.sample(throw_id, &self.triple, pair, &mut rng);
        if self.second_flip > 0.0 && bernoulli(&mut rng, self.second_flip) {
            record.second_outcome = -record.second_outcome;
        }
        record
    }
}

/// Uniform over the nine ordered pairs, repeats included.
pub fn choose_setting_pair<R: Rng + ?Sized>(rng: &mut R) -> (Setting, Setting) {
    let k = rng.random_range(0..9usize);
    (Setting::ALL[k / 3], Setting::ALL[k % 3])
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Err(Error::InvalidPlan("worker count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidPlan(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs the plan on the global rayon pool.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<ThrowRecord>> {
    plan.validate()?;
    Ok((0..plan.n_throws).into_par_iter().map(|i| plan.throw(i)).collect())
}

/// Runs the plan on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(plan: &ExperimentPlan, workers: usize) -> Result<Vec<ThrowRecord>> {
    plan.validate()?;
    with_workers(workers, || {
        (0..plan.n_throws).into_par_iter().map(|i| plan.throw(i)).collect()
    })
}

/// Runs the plan and tallies without materializing the records.
pub fn run_tally(plan: &ExperimentPlan) -> Result<Tally> {
    plan.validate()?;
    Ok((0..plan.n_throws)
        .into_par_iter()
        .fold(Tally::default, |mut t, i| {
            t.record(&plan.throw(i));
            t
        })
        .reduce(Tally::default, |a, b| a + b))
}
