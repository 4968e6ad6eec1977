//! Synthetic reference trials generated by the model itself.
//!
//! Real subject recordings are not bundled; these trials give the fitting
//! pipeline a ground truth to recover.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::activation::ActivationCurve;
use crate::error::{Error, Result};
use crate::gait_data::{uniform_phases, GaitSample, GaitTrial, Sex, SubjectSplit};
use crate::pipeline::{simulate_trial, ModelSetup, SimulationConfig};
use crate::MusclePair;

/// Ankle angle over the cycle as a short Fourier series in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaProfile {
    pub mean_deg: f64,
    pub cos_deg: Vec<f64>,
    pub sin_deg: Vec<f64>,
    /// Multiplies the whole curve.
    pub scale: f64,
    /// Advances the curve by this fraction of a cycle.
    pub phase_shift: f64,
}

impl Default for ThetaProfile {
    /// Normative level-walking ankle angle: mild loading-response
    /// plantarflexion, stance dorsiflexion to about 12 deg, push-off
    /// plantarflexion to about -15 deg near 62% of the cycle.
    fn default() -> Self {
        Self {
            mean_deg: 0.0,
            cos_deg: vec![-1.06, 1.94, -2.62],
            sin_deg: vec![6.51, -7.10, 0.50],
            scale: 1.0,
            phase_shift: 0.0,
        }
    }
}

impl ThetaProfile {
    /// Angle in radians at `phase`.
    pub fn theta(&self, phase: f64) -> f64 {
        let x = std::f64::consts::TAU * (phase + self.phase_shift);
        let mut deg = self.mean_deg;
        for (k, c) in self.cos_deg.iter().enumerate() {
            deg += c * ((k + 1) as f64 * x).cos();
        }
        for (k, s) in self.sin_deg.iter().enumerate() {
            deg += s * ((k + 1) as f64 * x).sin();
        }
        (self.scale * deg).to_radians()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSubject {
    pub subject_id: String,
    pub sex: Sex,
    pub body_mass: f64,
    pub cycle_duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walking_speed: Option<f64>,
    #[serde(default)]
    pub profile: ThetaProfile,
}

/// Subjects for a synthetic train/test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCohort {
    pub train: Vec<SyntheticSubject>,
    pub test: Vec<SyntheticSubject>,
}

impl Default for SyntheticCohort {
    /// Four training subjects (F, F, M, M) and four test subjects
    /// (F, F, M, F) with varied mass, cadence and ankle excursion.
    fn default() -> Self {
        let subject = |id: &str, sex, mass, duration, scale, shift| SyntheticSubject {
            subject_id: id.to_owned(),
            sex,
            body_mass: mass,
            cycle_duration: duration,
            walking_speed: Some(1.25),
            profile: ThetaProfile {
                scale,
                phase_shift: shift,
                ..ThetaProfile::default()
            },
        };
        Self {
            train: vec![
                subject("train1", Sex::F, 58.0, 1.06, 0.95, 0.00),
                subject("train2", Sex::F, 64.0, 1.10, 1.05, 0.01),
                subject("train3", Sex::M, 82.0, 1.14, 1.10, -0.01),
                subject("train4", Sex::M, 75.0, 1.12, 0.90, 0.005),
            ],
            test: vec![
                subject("test1", Sex::F, 55.0, 1.04, 1.00, -0.005),
                subject("test2", Sex::F, 61.0, 1.08, 0.92, 0.015),
                subject("test3", Sex::M, 88.0, 1.18, 1.08, 0.00),
                subject("test4", Sex::F, 67.0, 1.09, 0.97, -0.015),
            ],
        }
    }
}

/// One synthetic trial: model torque at `curves` plus i.i.d. Gaussian noise.
///
/// Samples lie on the simulation output grid, so the reference is exactly
/// the simulated trace when `noise_sd` is zero.
pub fn generate_synthetic_trial(
    subject: &SyntheticSubject,
    curves: &MusclePair<ActivationCurve>,
    setup: &ModelSetup,
    sim: &SimulationConfig,
    theta_profile: impl Fn(f64) -> f64,
    noise_sd: f64,
    seed: u64,
) -> Result<GaitTrial> {
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::domain(format!("noise_sd must be >= 0, got {noise_sd}")));
    }
    let samples = uniform_phases(sim.output_grid)
        .into_iter()
        .map(|phase| GaitSample {
            phase,
            theta: theta_profile(phase),
            tau_ref: 0.0,
        })
        .collect();
    let trial = GaitTrial::new(
        subject.subject_id.clone(),
        subject.sex,
        subject.body_mass,
        subject.cycle_duration,
        samples,
    )?
    .with_walking_speed(subject.walking_speed);

    let mut tau = simulate_trial(&trial, curves, setup, sim)?;
    if noise_sd > 0.0 {
        let normal = Normal::new(0.0, noise_sd).map_err(|e| Error::domain(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in &mut tau {
            *t += normal.sample(&mut rng);
        }
    }
    trial.with_tau_ref(&tau)
}

/// Generate every subject of `cohort`; subject `i` (train first) uses
/// `seed + i`.
pub fn generate_split(
    cohort: &SyntheticCohort,
    curves: &MusclePair<ActivationCurve>,
    setup: &ModelSetup,
    sim: &SimulationConfig,
    noise_sd: f64,
    seed: u64,
) -> Result<SubjectSplit> {
    let mut index = 0u64;
    let mut make = |subjects: &[SyntheticSubject]| -> Result<Vec<GaitTrial>> {
        subjects
            .iter()
            .map(|s| {
                let trial_seed = seed.wrapping_add(index);
                index += 1;
                generate_synthetic_trial(s, curves, setup, sim, |p| s.profile.theta(p), noise_sd, trial_seed)
            })
            .collect()
    };
    let train = make(&cohort.train)?;
    let test = make(&cohort.test)?;
    SubjectSplit::new(train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_has_gait_like_excursion() {
        let p = ThetaProfile::default();
        let vals: Vec<f64> = (0..=100).map(|i| p.theta(i as f64 / 100.0).to_degrees()).collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!((8.0..16.0).contains(&max), "{max}");
        assert!((-18.0..-10.0).contains(&min), "{min}");
        assert!((p.theta(0.0) - p.theta(1.0)).abs() < 1e-12);
    }

    #[test]
    fn negative_noise_rejected() {
        let cohort = SyntheticCohort::default();
        let curves = MusclePair::<ActivationCurve>::templates(0.05, 0.1).unwrap();
        let err = generate_synthetic_trial(
            &cohort.train[0],
            &curves,
            &ModelSetup::default(),
            &SimulationConfig::default(),
            |_| 0.0,
            -1.0,
            1,
        );
        assert!(err.is_err());
    }
}
