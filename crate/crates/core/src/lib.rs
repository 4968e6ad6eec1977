//! Ankle torque from a lumped winding-filament muscle model.
//!
//! Two antagonist virtual muscles (anterior and posterior) are driven by the
//! ankle angle through their attachment geometry and by periodic activation
//! curves over the gait cycle. Their tensions compose into net ankle torque,
//! which is fitted to reference inverse-dynamics torque by particle swarm
//! optimization of one activation node per muscle.

// `!(x > 0.0)` style checks are how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod error;
pub mod gait_data;
pub mod geometry;
pub mod optimizer;
pub mod pipeline;
pub mod synthetic;
pub mod wfm;

use serde::{Deserialize, Serialize};

pub use activation::ActivationCurve;
pub use error::{Error, Result};
pub use gait_data::{GaitTrial, Sex, SubjectSplit};
pub use geometry::{AttachmentGeometry, Side};
pub use optimizer::{OptimizationResult, PsoConfig};
pub use pipeline::{EvaluationReport, FitProblem, ModelSetup, SimulationConfig};
pub use wfm::WfmParams;

/// A value held once per virtual muscle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MusclePair<T> {
    pub anterior: T,
    pub posterior: T,
}

impl<T> MusclePair<T> {
    pub fn new(anterior: T, posterior: T) -> Self {
        Self { anterior, posterior }
    }

    pub fn get(&self, side: Side) -> &T {
        match side {
            Side::Anterior => &self.anterior,
            Side::Posterior => &self.posterior,
        }
    }

    pub fn try_map<U, E>(&self, mut f: impl FnMut(Side, &T) -> Result<U, E>) -> Result<MusclePair<U>, E> {
        Ok(MusclePair {
            anterior: f(Side::Anterior, &self.anterior)?,
            posterior: f(Side::Posterior, &self.posterior)?,
        })
    }
}

/// How batches of independent work (particles, trials) are evaluated.
///
/// `Parallel` uses rayon when the `parallel` feature is enabled and falls
/// back to sequential evaluation otherwise. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Map `f` over `items`, in parallel when requested and available.
pub(crate) fn map_items<T, U, F>(items: &[T], exec: Execution, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}
