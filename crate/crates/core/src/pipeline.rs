//! Gait-cycle simulation of the two-muscle ankle, fitting, and reporting.

use std::fmt;
use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::activation::ActivationCurve;
use crate::error::{Error, Result};
use crate::gait_data::{resample_trial, rmse, uniform_phases, GaitTrial, Sex, SubjectSplit};
use crate::geometry::{moment_arm, muscle_length, AttachmentGeometry, Side};
use crate::optimizer::{optimize_with, OptimizationResult, PsoConfig};
use crate::wfm::{
    chain_extension, equilibrium_ce_length, f_max_from_mass, max_relaxation_rate, solve_internal_balance,
    step_muscle_resolving, step_with_drive, step_with_sensitivity, Drive, MuscleState, WfmParams,
};
use crate::{map_items, Execution, MusclePair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Fixed RK4 steps per gait cycle.
    pub steps_per_cycle: usize,
    /// Full cycles integrated before the scored one.
    pub warmup_cycles: usize,
    /// Points on the uniform output phase grid.
    pub output_grid: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            steps_per_cycle: 2000,
            warmup_cycles: 2,
            output_grid: crate::gait_data::DEFAULT_GRID,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_cycle < 100 {
            return Err(Error::domain(format!(
                "steps_per_cycle must be >= 100, got {}",
                self.steps_per_cycle
            )));
        }
        if self.output_grid < 2 {
            return Err(Error::domain(format!(
                "output_grid must be >= 2, got {}",
                self.output_grid
            )));
        }
        Ok(())
    }
}

/// Explicit tendon, titin, and CE rest lengths, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestLengths {
    pub l_t_slack: f64,
    pub l_ts_rest: f64,
    pub l_ce_opt: f64,
}

/// Rule producing one muscle's [`WfmParams`] for a given subject.
///
/// Stiffness, damping and curve width are shared by every subject. Unless
/// set explicitly, the peak force is five body weights and the rest lengths
/// split the muscle-tendon length at the trial's mean ankle angle, so the
/// chain is exactly unloaded there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuscleConfig {
    pub k_ss: f64,
    pub k_ts_passive: f64,
    pub k_ts_active: f64,
    pub c_ce: f64,
    pub fl_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
    /// Multiplies the peak force, explicit or derived from body mass.
    #[serde(default = "unit_scale")]
    pub f_max_scale: f64,
    /// Share of the calibration length given to the tendon.
    pub tendon_fraction: f64,
    /// Share of the calibration length given to titin.
    pub titin_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rest_lengths: Option<RestLengths>,
}

fn unit_scale() -> f64 {
    1.0
}

impl MuscleConfig {
    fn with_tendon_stiffness(k_ss: f64) -> Self {
        Self {
            k_ss,
            k_ts_passive: 0.05 * k_ss,
            k_ts_active: 0.45 * k_ss,
            c_ce: 1.0e3,
            fl_width: 0.45,
            f_max: None,
            f_max_scale: 1.0,
            tendon_fraction: 0.55,
            titin_fraction: 0.05,
            rest_lengths: None,
        }
    }

    pub fn anterior_default() -> Self {
        Self::with_tendon_stiffness(1.0e5)
    }

    pub fn posterior_default() -> Self {
        Self::with_tendon_stiffness(2.0e5)
    }

    pub fn validate(&self) -> Result<()> {
        let (tf, sf) = (self.tendon_fraction, self.titin_fraction);
        if !(tf > 0.0 && sf > 0.0 && tf + sf < 1.0) {
            return Err(Error::domain(format!(
                "tendon_fraction ({tf}) and titin_fraction ({sf}) must be positive and sum below 1"
            )));
        }
        if !(self.f_max_scale > 0.0 && self.f_max_scale.is_finite()) {
            return Err(Error::domain(format!(
                "f_max_scale must be > 0, got {}",
                self.f_max_scale
            )));
        }
        self.params_with(1.0, 1.0, 0.2, 0.02, 0.1).validate()
    }

    /// Copy with peak force and all spring stiffnesses scaled.
    pub fn scaled(&self, force_scale: f64, stiffness_scale: f64) -> Self {
        Self {
            k_ss: self.k_ss * stiffness_scale,
            k_ts_passive: self.k_ts_passive * stiffness_scale,
            k_ts_active: self.k_ts_active * stiffness_scale,
            f_max_scale: self.f_max_scale * force_scale,
            ..*self
        }
    }

    fn params_with(&self, f_max: f64, scale: f64, l_t_slack: f64, l_ts_rest: f64, l_ce_opt: f64) -> WfmParams {
        WfmParams {
            k_ss: self.k_ss * scale,
            k_ts_passive: self.k_ts_passive * scale,
            k_ts_active: self.k_ts_active * scale,
            c_ce: self.c_ce,
            f_max: self.f_max.unwrap_or(f_max) * self.f_max_scale,
            l_t_slack,
            l_ts_rest,
            l_ce_opt,
            fl_width: self.fl_width,
        }
    }

    /// Parameters for a subject of `body_mass` whose mean angle is `mean_theta`.
    pub fn params_for(&self, geom: &AttachmentGeometry, mean_theta: f64, body_mass: f64) -> Result<WfmParams> {
        let f_max = match self.f_max {
            Some(f) => f,
            None => f_max_from_mass(body_mass)?,
        };
        let p = match self.rest_lengths {
            Some(r) => self.params_with(f_max, 1.0, r.l_t_slack, r.l_ts_rest, r.l_ce_opt),
            None => {
                let l = muscle_length(mean_theta, geom)?;
                let l_t = self.tendon_fraction * l;
                let l_ts = self.titin_fraction * l;
                self.params_with(f_max, 1.0, l_t, l_ts, l - l_t - l_ts)
            }
        };
        p.validate()?;
        Ok(p)
    }
}

/// Shared muscle rules and attachment geometry of the two-muscle model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSetup {
    pub muscles: MusclePair<MuscleConfig>,
    pub geometry: MusclePair<AttachmentGeometry>,
}

impl Default for ModelSetup {
    fn default() -> Self {
        Self {
            muscles: MusclePair::new(MuscleConfig::anterior_default(), MuscleConfig::posterior_default()),
            geometry: MusclePair::new(
                AttachmentGeometry::anterior_default(),
                AttachmentGeometry::posterior_default(),
            ),
        }
    }
}

impl ModelSetup {
    pub fn validate(&self) -> Result<()> {
        self.muscles.anterior.validate()?;
        self.muscles.posterior.validate()?;
        self.geometry.anterior.validate()?;
        self.geometry.posterior.validate()?;
        if self.geometry.anterior.side != Side::Anterior || self.geometry.posterior.side != Side::Posterior {
            return Err(Error::domain(
                "geometry sides must be anterior and posterior respectively",
            ));
        }
        Ok(())
    }

    /// Per-subject parameters: only the peak force depends on the subject
    /// (besides rest-length calibration at the trial's mean angle).
    pub fn params_for_trial(&self, trial: &GaitTrial) -> Result<MusclePair<WfmParams>> {
        let mean = trial.mean_theta();
        self.muscles
            .try_map(|side, m| m.params_for(self.geometry.get(side), mean, trial.body_mass))
    }
}

/// Largest `dt * rate` accepted; classical RK4 is stable to about 2.78.
const RK4_STABILITY_LIMIT: f64 = 2.5;
/// Cycle-start correction, relative to `l_ce_opt`, below which warm-up stops.
const PERIODIC_TOL: f64 = 1e-6;
/// Warm-up cycles allowed beyond the configured count.
const MAX_EXTRA_WARMUP: usize = 10;

/// Newton update of a cycle-start CE length toward the periodic orbit,
/// from one cycle `start -> end` with slope `d end / d start`.
///
/// The cycle map of a scalar flow is increasing; when it is contracting the
/// fixed point lies beyond `end`, and the step toward it is amplified by at
/// most `MAX_NEWTON_GAIN`. Otherwise the plain iterate is kept.
fn newton_periodic(start: f64, end: f64, slope: f64) -> f64 {
    const MAX_NEWTON_GAIN: f64 = 100.0;
    if !(0.0..1.0).contains(&slope) {
        return end;
    }
    let gain = (1.0 / (1.0 - slope)).min(MAX_NEWTON_GAIN);
    let l = start + gain * (end - start);
    if l.is_finite() && l > 0.0 {
        l
    } else {
        end
    }
}

fn tag_phase(err: Error, phase: f64) -> Error {
    match err {
        Error::Integration { time, reason } => Error::Integration {
            time,
            reason: format!("{reason} (gait phase {phase:.4})"),
        },
        other => other,
    }
}

/// A trial with its geometry precomputed on the integration grid.
///
/// Lengths are stored at every half step of one cycle, so the RK4 stages
/// never touch the geometry. Everything here is independent of activation.
#[derive(Debug, Clone)]
pub struct PreparedTrial {
    trial: GaitTrial,
    geoms: MusclePair<AttachmentGeometry>,
    sim: SimulationConfig,
    /// `l_mtu` at phases `j / (2 n)`, `j = 0..=2n`.
    half_grid_lengths: MusclePair<Vec<f64>>,
    output_phases: Vec<f64>,
    output_arms: MusclePair<Vec<f64>>,
}

impl PreparedTrial {
    pub fn new(trial: &GaitTrial, geoms: &MusclePair<AttachmentGeometry>, sim: &SimulationConfig) -> Result<Self> {
        sim.validate()?;
        trial.validate()?;
        let n2 = 2 * sim.steps_per_cycle;
        let half_grid_lengths = geoms.try_map(|_, g| {
            (0..=n2)
                .map(|j| {
                    let phase = j as f64 / n2 as f64;
                    muscle_length(trial.theta_at(phase), g).map_err(|e| tag_phase(e, phase))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let output_phases = uniform_phases(sim.output_grid);
        let output_arms = geoms.try_map(|_, g| {
            output_phases
                .iter()
                .map(|&p| moment_arm(trial.theta_at(p), g))
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(Self {
            trial: trial.clone(),
            geoms: *geoms,
            sim: *sim,
            half_grid_lengths,
            output_phases,
            output_arms,
        })
    }

    pub fn trial(&self) -> &GaitTrial {
        &self.trial
    }

    pub fn output_phases(&self) -> &[f64] {
        &self.output_phases
    }

    /// Chain tension of one muscle on the output grid, after warm-up.
    fn muscle_forces(&self, side: Side, curve: &ActivationCurve, p: &WfmParams) -> Result<Vec<f64>> {
        let n = self.sim.steps_per_cycle;
        let n2 = 2 * n;
        let cycle = self.trial.cycle_duration;
        let dt = cycle / n as f64;
        let lengths = self.half_grid_lengths.get(side);
        let stiffness = dt * max_relaxation_rate(p);
        if stiffness > RK4_STABILITY_LIMIT {
            return Err(Error::Integration {
                time: 0.0,
                reason: format!(
                    "{side:?} muscle too stiff for {n} steps per cycle: dt times relaxation rate is {stiffness:.3}, \
                     above {RK4_STABILITY_LIMIT}; raise steps_per_cycle or c_ce"
                ),
            });
        }
        let act: Vec<f64> = (0..=n2).map(|j| curve.evaluate(j as f64 / n2 as f64)).collect();
        let drive = |j: usize| Drive {
            l_mtu: lengths[j],
            activation: act[j],
        };
        let geom = self.geoms.get(side);
        // exact inputs at local time t within the cycle, for sub-steps
        let l_of = |t: f64| {
            let phase = (t / cycle).clamp(0.0, 1.0);
            muscle_length(self.trial.theta_at(phase), geom).unwrap_or(f64::NAN)
        };
        let a_of = |t: f64| curve.evaluate((t / cycle).clamp(0.0, 1.0));

        // state time is local to the cycle
        let step = |l_ce: f64, i: usize| -> Result<f64> {
            let s = MuscleState { l_ce, t: i as f64 * dt };
            let next = step_with_drive(s, p, [drive(2 * i), drive(2 * i + 1), drive(2 * i + 2)], dt)
                .map_err(|e| tag_phase(e, i as f64 / n as f64))?;
            let taut_before = chain_extension(lengths[2 * i], l_ce, p) > 0.0;
            let taut_after = chain_extension(lengths[2 * i + 2], next.l_ce, p) > 0.0;
            if taut_before == taut_after {
                return Ok(next.l_ce);
            }
            step_muscle_resolving(s, p, l_of, a_of, dt)
                .map(|s| s.l_ce)
                .map_err(|e| tag_phase(e, i as f64 / n as f64))
        };

        // one cycle that also tracks d(end)/d(start); event splitting leaves
        // the slope continuous since the velocity is
        let warm_cycle = |l_start: f64| -> Result<(f64, f64)> {
            let (mut l, mut slope) = (l_start, 1.0);
            for i in 0..n {
                let (next, ds) = step_with_sensitivity(l, p, [drive(2 * i), drive(2 * i + 1), drive(2 * i + 2)], dt);
                let same_state = (chain_extension(lengths[2 * i], l, p) > 0.0)
                    == (chain_extension(lengths[2 * i + 2], next, p) > 0.0);
                l = if next.is_finite() && next > 0.0 && same_state {
                    next
                } else {
                    step(l, i)?
                };
                slope *= ds;
            }
            Ok((l, slope))
        };

        let mut l_ce = equilibrium_ce_length(lengths[0], act[0], p).map_err(|e| tag_phase(e, 0.0))?;
        if self.sim.warmup_cycles > 0 && curve.nodes().iter().all(|&(_, a)| a == 0.0) {
            // a passive CE only ever lengthens, and settles where the chain
            // no longer goes taut at the longest MTU length
            let longest = lengths.iter().copied().fold(f64::MIN, f64::max);
            l_ce = l_ce.max(longest - p.l_t_slack - p.l_ts_rest);
        } else {
            // the configured count is a minimum; weakly driven muscles keep
            // iterating until the correction is negligible
            let tol = PERIODIC_TOL * p.l_ce_opt;
            for cycle in 0..self.sim.warmup_cycles + MAX_EXTRA_WARMUP {
                let (end, slope) = warm_cycle(l_ce)?;
                let next = newton_periodic(l_ce, end, slope);
                let change = (next - l_ce).abs();
                l_ce = next;
                if cycle + 1 >= self.sim.warmup_cycles && change <= tol {
                    break;
                }
            }
        }

        // output point k sits at step k n / (G - 1), possibly between steps
        let g1 = self.sim.output_grid - 1;
        let mut forces = Vec::with_capacity(self.sim.output_grid);
        let mut k = 0;
        for i in 0..=n {
            while k <= g1 && (k * n) / g1 == i {
                let rem = (k * n) % g1;
                let (l_mtu, l_out, a) = if rem == 0 {
                    (lengths[2 * i], l_ce, act[2 * i])
                } else {
                    let local = MuscleState { l_ce, t: i as f64 * dt };
                    let h = dt * rem as f64 / g1 as f64;
                    let sub = step_muscle_resolving(local, p, l_of, a_of, h)
                        .map_err(|e| tag_phase(e, self.output_phases[k]))?;
                    (l_of(sub.t), sub.l_ce, a_of(sub.t))
                };
                forces.push(solve_internal_balance(l_mtu, l_out, a, p)?.force);
                k += 1;
            }
            if i < n {
                l_ce = step(l_ce, i)?;
            }
        }
        Ok(forces)
    }

    /// Net ankle torque on the output grid.
    pub fn simulate(&self, curves: &MusclePair<ActivationCurve>, params: &MusclePair<WfmParams>) -> Result<Vec<f64>> {
        let fa = self.muscle_forces(Side::Anterior, &curves.anterior, &params.anterior)?;
        let fp = self.muscle_forces(Side::Posterior, &curves.posterior, &params.posterior)?;
        Ok(fa
            .iter()
            .zip(&fp)
            .zip(self.output_arms.anterior.iter().zip(&self.output_arms.posterior))
            .map(|((fa, fp), (ra, rp))| ra * fa - rp * fp)
            .collect())
    }
}

/// Net ankle torque over one steady-state gait cycle on the output grid.
pub fn simulate_gait(
    trial: &GaitTrial,
    curves: &MusclePair<ActivationCurve>,
    params: &MusclePair<WfmParams>,
    geoms: &MusclePair<AttachmentGeometry>,
    sim: &SimulationConfig,
) -> Result<Vec<f64>> {
    PreparedTrial::new(trial, geoms, sim)?
        .simulate(curves, params)
        .map_err(|e| e.in_trial(&trial.subject_id))
}

/// [`simulate_gait`] with parameters derived from `setup` for this subject.
pub fn simulate_trial(
    trial: &GaitTrial,
    curves: &MusclePair<ActivationCurve>,
    setup: &ModelSetup,
    sim: &SimulationConfig,
) -> Result<Vec<f64>> {
    let params = setup
        .params_for_trial(trial)
        .map_err(|e| e.in_trial(&trial.subject_id))?;
    simulate_gait(trial, curves, &params, &setup.geometry, sim)
}

/// [`simulate_trial`] for each of `trials`, in order.
pub fn simulate_trials(
    trials: &[GaitTrial],
    curves: &MusclePair<ActivationCurve>,
    setup: &ModelSetup,
    sim: &SimulationConfig,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    map_items(trials, exec, |t| simulate_trial(t, curves, setup, sim))
        .into_iter()
        .collect()
}

/// Reference torque of `trial` on a uniform grid of `n` points.
pub fn reference_on_grid(trial: &GaitTrial, n: usize) -> Result<Vec<f64>> {
    Ok(resample_trial(trial, n)?.tau_ref())
}

/// `phase,tau_model,tau_ref` CSV of one trace.
pub fn trace_csv(phases: &[f64], model: &[f64], reference: &[f64]) -> String {
    let mut s = String::from("phase,tau_model,tau_ref\n");
    for ((p, m), r) in phases.iter().zip(model).zip(reference) {
        let _ = writeln!(s, "{p},{m},{r}");
    }
    s
}

/// Which quantities the fit varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// One activation amplitude per muscle.
    #[default]
    Activation,
    /// Activation amplitudes plus a shared peak-force scale and a shared
    /// stiffness scale.
    Extended,
}

impl SearchMode {
    pub fn dims(self) -> usize {
        match self {
            SearchMode::Activation => 2,
            SearchMode::Extended => 4,
        }
    }

    /// Activation curves and model setup at a point of this search space.
    pub fn realize(
        self,
        x: &[f64],
        templates: &MusclePair<ActivationCurve>,
        setup: &ModelSetup,
    ) -> Result<(MusclePair<ActivationCurve>, ModelSetup)> {
        if x.len() != self.dims() {
            return Err(Error::domain(format!(
                "expected {} fit variables, got {}",
                self.dims(),
                x.len()
            )));
        }
        let curves = templates.with_amplitudes(x[0], x[1])?;
        let setup = match self {
            SearchMode::Activation => *setup,
            SearchMode::Extended => ModelSetup {
                muscles: MusclePair::new(
                    setup.muscles.anterior.scaled(x[2], x[3]),
                    setup.muscles.posterior.scaled(x[2], x[3]),
                ),
                ..*setup
            },
        };
        Ok((curves, setup))
    }

    pub fn default_bounds(self) -> Vec<(f64, f64)> {
        match self {
            SearchMode::Activation => vec![(0.0, 1.0); 2],
            SearchMode::Extended => vec![(0.0, 1.0), (0.0, 1.0), (0.2, 5.0), (0.2, 5.0)],
        }
    }
}

struct FitCase {
    prepared: PreparedTrial,
    params: MusclePair<WfmParams>,
    reference: Vec<f64>,
}

/// Mean-RMSE objective over a set of training trials.
pub struct FitProblem {
    cases: Vec<FitCase>,
    templates: MusclePair<ActivationCurve>,
    mode: SearchMode,
}

impl FitProblem {
    pub fn new(
        trials: &[GaitTrial],
        templates: &MusclePair<ActivationCurve>,
        setup: &ModelSetup,
        sim: &SimulationConfig,
        mode: SearchMode,
    ) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::domain("fit needs at least one training trial"));
        }
        setup.validate()?;
        let cases = trials
            .iter()
            .map(|t| {
                Ok(FitCase {
                    prepared: PreparedTrial::new(t, &setup.geometry, sim)?,
                    params: setup.params_for_trial(t)?,
                    reference: reference_on_grid(t, sim.output_grid)?,
                })
                .map_err(|e: Error| e.in_trial(&t.subject_id))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cases,
            templates: templates.clone(),
            mode,
        })
    }

    pub fn mode(&self) -> SearchMode {
        self.mode
    }

    /// Curves and per-trial parameters for a point of the search space.
    fn decode(&self, x: &[f64]) -> Result<(MusclePair<ActivationCurve>, f64, f64)> {
        if x.len() != self.mode.dims() {
            return Err(Error::domain(format!(
                "expected {} fit variables, got {}",
                self.mode.dims(),
                x.len()
            )));
        }
        let curves = self.templates.with_amplitudes(x[0], x[1])?;
        let (force_scale, stiffness_scale) = match self.mode {
            SearchMode::Activation => (1.0, 1.0),
            SearchMode::Extended => (x[2], x[3]),
        };
        Ok((curves, force_scale, stiffness_scale))
    }

    fn scaled(p: &WfmParams, force_scale: f64, stiffness_scale: f64) -> WfmParams {
        WfmParams {
            f_max: p.f_max * force_scale,
            k_ss: p.k_ss * stiffness_scale,
            k_ts_passive: p.k_ts_passive * stiffness_scale,
            k_ts_active: p.k_ts_active * stiffness_scale,
            ..*p
        }
    }

    /// Per-trial RMSE at `x`, in trial order.
    pub fn trial_errors(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (curves, fs, ks) = self.decode(x)?;
        self.cases
            .iter()
            .map(|c| {
                let params = MusclePair::new(
                    Self::scaled(&c.params.anterior, fs, ks),
                    Self::scaled(&c.params.posterior, fs, ks),
                );
                c.prepared
                    .simulate(&curves, &params)
                    .and_then(|tau| rmse(&tau, &c.reference))
                    .map_err(|e| e.in_trial(&c.prepared.trial().subject_id))
            })
            .collect()
    }

    /// Mean over trials of the torque RMSE at `x`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let errs = self.trial_errors(x)?;
        Ok(errs.iter().sum::<f64>() / errs.len() as f64)
    }

    /// Run the swarm. Empty `cfg.bounds` take the mode's defaults.
    pub fn fit(&self, cfg: &PsoConfig, exec: Execution) -> Result<OptimizationResult> {
        let mut cfg = cfg.clone();
        if cfg.bounds.is_empty() {
            cfg.bounds = self.mode.default_bounds();
        }
        if cfg.bounds.len() != self.mode.dims() {
            return Err(Error::domain(format!(
                "{:?} search needs {} bounds, config has {}",
                self.mode,
                self.mode.dims(),
                cfg.bounds.len()
            )));
        }
        let failure: OnceLock<Error> = OnceLock::new();
        let result = optimize_with(
            |x: &[f64]| match self.objective(x) {
                Ok(v) => v,
                Err(e) => {
                    let _ = failure.set(e);
                    f64::NAN
                }
            },
            &cfg,
            exec,
        );
        match (result, failure.into_inner()) {
            (Err(_), Some(e)) => Err(e),
            (r, _) => r,
        }
    }
}

/// Mean torque RMSE over `trials` at activation amplitudes
/// `[anterior, posterior]`.
pub fn fit_objective(
    amplitudes: &[f64],
    trials: &[GaitTrial],
    templates: &MusclePair<ActivationCurve>,
    setup: &ModelSetup,
    sim: &SimulationConfig,
) -> Result<f64> {
    FitProblem::new(trials, templates, setup, sim, SearchMode::Activation)?.objective(amplitudes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitTag {
    Train,
    Test,
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitTag::Train => "Train",
            SplitTag::Test => "Test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub subject_id: String,
    pub split: SplitTag,
    pub sex: Sex,
    pub rmse: f64,
}

/// Per-subject RMSE with train and test means.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
    pub train_mean: f64,
    pub test_mean: f64,
    pub torque_unit: String,
}

fn mean_of(rows: &[ReportRow], split: SplitTag) -> Option<f64> {
    let vals: Vec<f64> = rows.iter().filter(|r| r.split == split).map(|r| r.rmse).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

impl EvaluationReport {
    pub fn from_rows(rows: Vec<ReportRow>, torque_unit: impl Into<String>) -> Result<Self> {
        let train_mean = mean_of(&rows, SplitTag::Train).ok_or_else(|| Error::domain("report has no train rows"))?;
        let test_mean = mean_of(&rows, SplitTag::Test).ok_or_else(|| Error::domain("report has no test rows"))?;
        Ok(Self {
            rows,
            train_mean,
            test_mean,
            torque_unit: torque_unit.into(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("subject_id,split,sex,rmse\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.subject_id, r.split, r.sex, r.rmse);
        }
        let _ = writeln!(s, "mean,Train,,{}", self.train_mean);
        let _ = writeln!(s, "mean,Test,,{}", self.test_mean);
        s
    }

    /// Plain-text table: one column per subject, split and RMSE rows below.
    pub fn render_text(&self) -> String {
        let label_w = 14;
        let cells: Vec<(String, String, String)> = self
            .rows
            .iter()
            .map(|r| {
                (
                    r.split.to_string(),
                    format!("{}-{}", r.subject_id, r.sex),
                    format!("{:.2}", r.rmse),
                )
            })
            .collect();
        let col_w = cells
            .iter()
            .map(|(a, b, c)| a.len().max(b.len()).max(c.len()))
            .max()
            .unwrap_or(0)
            + 2;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "RMSE between model torque and reference torque ({})",
            self.torque_unit
        );
        let _ = writeln!(s);
        for (label, pick) in [("Type of data", 0usize), ("Subject", 1), ("RMSE", 2)] {
            let _ = write!(s, "{label:<label_w$}");
            for c in &cells {
                let v = match pick {
                    0 => &c.0,
                    1 => &c.1,
                    _ => &c.2,
                };
                let _ = write!(s, "{v:>col_w$}");
            }
            let _ = writeln!(s);
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "Mean RMSE  train: {:.2}  test: {:.2}",
            self.train_mean, self.test_mean
        );
        let _ = writeln!(s, "F: female subject, M: male subject");
        s
    }
}

/// Score every subject of `split` with fixed curves.
pub fn evaluate_split(
    split: &SubjectSplit,
    curves: &MusclePair<ActivationCurve>,
    setup: &ModelSetup,
    sim: &SimulationConfig,
    exec: Execution,
) -> Result<EvaluationReport> {
    split.validate()?;
    let tagged: Vec<(SplitTag, &GaitTrial)> = split
        .train
        .iter()
        .map(|t| (SplitTag::Train, t))
        .chain(split.test.iter().map(|t| (SplitTag::Test, t)))
        .collect();
    let scored = map_items(&tagged, exec, |(tag, t)| {
        let tau = simulate_trial(t, curves, setup, sim)?;
        let reference = reference_on_grid(t, sim.output_grid).map_err(|e| e.in_trial(&t.subject_id))?;
        Ok(ReportRow {
            subject_id: t.subject_id.clone(),
            split: *tag,
            sex: t.sex,
            rmse: rmse(&tau, &reference)?,
        })
    });
    let rows = scored.into_iter().collect::<Result<Vec<_>>>()?;
    let unit = split.train[0].torque_unit.clone();
    EvaluationReport::from_rows(rows, unit)
}
