//! Lumped winding-filament muscle.
//!
//! One virtual muscle is a tension-only tendon spring (`k_ss`) in series with
//! a titin spring whose stiffness rises with activation, which in turn is in
//! series with a contractile element (CE) in parallel with a viscous damper.
//! The springs are massless, so for a given CE length the force balance is
//! static and the CE length is the only integrated state:
//!
//! ```text
//!   l_mtu = l_t + l_ts + l_ce
//!   F     = k_ss (l_t - l_t_slack) = k_ts(a) (l_ts - l_ts_rest)
//!   F     = a f_max fl(l_ce) + c_ce dl_ce/dt
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravity, m/s^2.
pub const GRAVITY: f64 = 9.80665;

/// Multiple of body weight used for the peak isometric force.
pub const F_MAX_BODY_WEIGHTS: f64 = 5.0;

/// Mechanical constants of one virtual muscle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WfmParams {
    /// Tendon (series elastic) stiffness, N/m.
    pub k_ss: f64,
    /// Titin stiffness at zero activation, N/m.
    pub k_ts_passive: f64,
    /// Titin stiffness gained at full activation, N/m.
    pub k_ts_active: f64,
    /// CE damping, N*s/m.
    pub c_ce: f64,
    /// Peak isometric CE force, N.
    pub f_max: f64,
    /// Tendon slack length, m.
    pub l_t_slack: f64,
    /// Titin rest length, m.
    pub l_ts_rest: f64,
    /// CE optimal length, m.
    pub l_ce_opt: f64,
    /// Width of the Gaussian force-length curve, as a fraction of `l_ce_opt`.
    pub fl_width: f64,
}

impl WfmParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("k_ss", self.k_ss),
            ("k_ts_passive", self.k_ts_passive),
            ("k_ts_active", self.k_ts_active),
            ("c_ce", self.c_ce),
            ("f_max", self.f_max),
            ("l_t_slack", self.l_t_slack),
            ("l_ts_rest", self.l_ts_rest),
            ("l_ce_opt", self.l_ce_opt),
            ("fl_width", self.fl_width),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in &fields[..3] {
            if *v < 0.0 {
                return Err(Error::domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in &fields[3..] {
            if *v <= 0.0 {
                return Err(Error::domain(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.k_ts_passive + self.k_ts_active <= 0.0 {
            return Err(Error::DegenerateParameters(
                "k_ts_passive + k_ts_active must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Sum of the three rest lengths: the MTU length at which the chain is
    /// exactly unloaded with the CE at its optimum.
    pub fn rest_length(&self) -> f64 {
        self.l_t_slack + self.l_ts_rest + self.l_ce_opt
    }
}

/// Integrated state of one muscle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuscleState {
    pub l_ce: f64,
    pub t: f64,
}

/// Derived lengths and tension of the tendon-titin chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuscleOutputs {
    pub l_ts: f64,
    pub l_t: f64,
    pub force: f64,
    /// Whether the chain carries tension.
    pub taut: bool,
}

/// Inputs imposed on a muscle at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub l_mtu: f64,
    pub activation: f64,
}

fn check_activation(a: f64) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::domain(format!("activation must lie in [0, 1], got {a}")))
    }
}

fn check_length(name: &str, l: f64) -> Result<()> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive, got {l}")))
    }
}

/// Titin stiffness at activation `a`: `k_ts_passive + a * k_ts_active`.
pub fn titin_stiffness(a: f64, p: &WfmParams) -> Result<f64> {
    check_activation(a)?;
    Ok(titin_stiffness_raw(a, p))
}

#[inline]
fn titin_stiffness_raw(a: f64, p: &WfmParams) -> f64 {
    p.k_ts_passive + a * p.k_ts_active
}

/// Gaussian force-length factor, 1 at `l_ce_opt`.
pub fn force_length_scale(l_ce: f64, p: &WfmParams) -> Result<f64> {
    check_length("l_ce", l_ce)?;
    Ok(force_length_raw(l_ce, p))
}

#[inline]
fn force_length_raw(l_ce: f64, p: &WfmParams) -> f64 {
    let x = (l_ce - p.l_ce_opt) / (p.fl_width * p.l_ce_opt);
    (-x * x).exp()
}

/// Static force balance of the tendon and titin springs for a given CE length.
pub fn solve_internal_balance(l_mtu: f64, l_ce: f64, a: f64, p: &WfmParams) -> Result<MuscleOutputs> {
    check_length("l_mtu", l_mtu)?;
    check_length("l_ce", l_ce)?;
    check_activation(a)?;
    let k_ts = titin_stiffness_raw(a, p);
    if p.k_ss + k_ts <= 0.0 {
        return Err(Error::DegenerateParameters(format!(
            "k_ss + k_ts(a) = {} at a = {a}",
            p.k_ss + k_ts
        )));
    }
    Ok(balance_raw(l_mtu, l_ce, k_ts, p))
}

#[inline]
fn balance_raw(l_mtu: f64, l_ce: f64, k_ts: f64, p: &WfmParams) -> MuscleOutputs {
    let span = l_mtu - l_ce - p.l_t_slack;
    let l_ts = (p.k_ss * span + k_ts * p.l_ts_rest) / (p.k_ss + k_ts);
    let force = k_ts * (l_ts - p.l_ts_rest);
    if force >= 0.0 {
        MuscleOutputs {
            l_ts,
            l_t: l_mtu - l_ce - l_ts,
            force,
            taut: force > 0.0,
        }
    } else {
        MuscleOutputs {
            l_ts: p.l_ts_rest,
            l_t: l_mtu - l_ce - p.l_ts_rest,
            force: 0.0,
            taut: false,
        }
    }
}

/// Chain tension only; the hot-path form of [`solve_internal_balance`].
#[inline]
fn chain_force_raw(l_mtu: f64, l_ce: f64, k_ts: f64, p: &WfmParams) -> f64 {
    // Series combination of the two springs acting on the total extension.
    let extension = l_mtu - l_ce - p.l_t_slack - p.l_ts_rest;
    if extension <= 0.0 || k_ts == 0.0 {
        0.0
    } else {
        p.k_ss * k_ts / (p.k_ss + k_ts) * extension
    }
}

#[inline]
fn velocity_raw(l_mtu: f64, l_ce: f64, a: f64, p: &WfmParams) -> f64 {
    let k_ts = titin_stiffness_raw(a, p);
    let chain = chain_force_raw(l_mtu, l_ce, k_ts, p);
    let active = if a > 0.0 {
        a * p.f_max * force_length_raw(l_ce, p)
    } else {
        0.0
    };
    (chain - active) / p.c_ce
}

/// CE lengthening rate, m/s (positive = lengthening).
pub fn ce_velocity(l_mtu: f64, l_ce: f64, a: f64, p: &WfmParams) -> Result<f64> {
    if p.c_ce <= 0.0 {
        return Err(Error::DegenerateParameters(format!("c_ce must be > 0, got {}", p.c_ce)));
    }
    let out = solve_internal_balance(l_mtu, l_ce, a, p)?;
    let active = a * p.f_max * force_length_raw(l_ce, p);
    Ok((out.force - active) / p.c_ce)
}

/// One classical RK4 step with inputs sampled at `t`, `t + dt/2`, `t + dt`.
///
/// The pipeline precomputes drives on a half-step grid and calls this
/// directly; [`step_muscle`] wraps it for closure inputs.
pub fn step_with_drive(s: MuscleState, p: &WfmParams, drive: [Drive; 3], dt: f64) -> Result<MuscleState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("dt must be positive, got {dt}")));
    }
    if !(p.c_ce > 0.0) {
        return Err(Error::DegenerateParameters(format!("c_ce must be > 0, got {}", p.c_ce)));
    }
    for d in &drive {
        if !(0.0..=1.0).contains(&d.activation) || !(d.l_mtu > 0.0) {
            return Err(Error::Integration {
                time: s.t,
                reason: format!("invalid drive: l_mtu = {}, activation = {}", d.l_mtu, d.activation),
            });
        }
    }
    let [d0, dm, d1] = drive;
    let h = 0.5 * dt;
    let k1 = velocity_raw(d0.l_mtu, s.l_ce, d0.activation, p);
    let k2 = velocity_raw(dm.l_mtu, s.l_ce + h * k1, dm.activation, p);
    let k3 = velocity_raw(dm.l_mtu, s.l_ce + h * k2, dm.activation, p);
    let k4 = velocity_raw(d1.l_mtu, s.l_ce + dt * k3, d1.activation, p);
    let l_ce = s.l_ce + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    let t = s.t + dt;
    if !l_ce.is_finite() {
        return Err(Error::Integration {
            time: s.t,
            reason: format!("non-finite CE length {l_ce}"),
        });
    }
    if l_ce <= 0.0 {
        return Err(Error::Integration {
            time: s.t,
            reason: format!("CE length collapsed to {l_ce}"),
        });
    }
    Ok(MuscleState { l_ce, t })
}

/// Velocity and its derivative with respect to the CE length.
#[inline]
fn velocity_and_slope_raw(l_mtu: f64, l_ce: f64, a: f64, p: &WfmParams) -> (f64, f64) {
    let k_ts = titin_stiffness_raw(a, p);
    let extension = l_mtu - l_ce - p.l_t_slack - p.l_ts_rest;
    let (chain, d_chain) = if extension <= 0.0 || k_ts == 0.0 {
        (0.0, 0.0)
    } else {
        let k_eff = p.k_ss * k_ts / (p.k_ss + k_ts);
        (k_eff * extension, -k_eff)
    };
    let (active, d_active) = if a > 0.0 {
        let width = p.fl_width * p.l_ce_opt;
        let x = (l_ce - p.l_ce_opt) / width;
        let f = a * p.f_max * (-x * x).exp();
        (f, -2.0 * x / width * f)
    } else {
        (0.0, 0.0)
    };
    ((chain - active) / p.c_ce, (d_chain - d_active) / p.c_ce)
}

/// RK4 step on raw inputs that also returns `d l_ce(t + dt) / d l_ce(t)`.
///
/// Inputs are not validated; callers must already have checked them with
/// [`step_with_drive`] or equivalent.
pub(crate) fn step_with_sensitivity(l_ce: f64, p: &WfmParams, drive: [Drive; 3], dt: f64) -> (f64, f64) {
    let [d0, dm, d1] = drive;
    let h = 0.5 * dt;
    let (k1, j1) = velocity_and_slope_raw(d0.l_mtu, l_ce, d0.activation, p);
    let m1 = j1;
    let (k2, j2) = velocity_and_slope_raw(dm.l_mtu, l_ce + h * k1, dm.activation, p);
    let m2 = j2 * (1.0 + h * m1);
    let (k3, j3) = velocity_and_slope_raw(dm.l_mtu, l_ce + h * k2, dm.activation, p);
    let m3 = j3 * (1.0 + h * m2);
    let (k4, j4) = velocity_and_slope_raw(d1.l_mtu, l_ce + dt * k3, d1.activation, p);
    let m4 = j4 * (1.0 + dt * m3);
    (
        l_ce + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4),
        1.0 + dt / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4),
    )
}

/// Advance the CE length by one RK4 step of size `dt`.
pub fn step_muscle<L, A>(s: MuscleState, p: &WfmParams, l_mtu_of_t: L, a_of_t: A, dt: f64) -> Result<MuscleState>
where
    L: Fn(f64) -> f64,
    A: Fn(f64) -> f64,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("dt must be positive, got {dt}")));
    }
    let at = |t: f64| Drive {
        l_mtu: l_mtu_of_t(t),
        activation: a_of_t(t),
    };
    step_with_drive(s, p, [at(s.t), at(s.t + 0.5 * dt), at(s.t + dt)], dt)
}

/// Extension of the tendon-titin chain beyond its unloaded length; the chain
/// carries tension exactly when this is positive.
pub fn chain_extension(l_mtu: f64, l_ce: f64, p: &WfmParams) -> f64 {
    l_mtu - l_ce - p.l_t_slack - p.l_ts_rest
}

/// RK4 step that splits at the instant the chain goes taut or slack.
///
/// Chain tension has a slope discontinuity at zero extension, and a step
/// straddling it is only second-order accurate. When the chain state differs
/// between the ends of the step, the crossing time is located by
/// Illinois-modified false position and the step is taken in two parts.
pub fn step_muscle_resolving<L, A>(
    s: MuscleState,
    p: &WfmParams,
    l_mtu_of_t: L,
    a_of_t: A,
    dt: f64,
) -> Result<MuscleState>
where
    L: Fn(f64) -> f64,
    A: Fn(f64) -> f64,
{
    let full = step_muscle(s, p, &l_mtu_of_t, &a_of_t, dt)?;
    let ext_after = |tau: f64| -> Result<f64> {
        if tau <= 0.0 {
            return Ok(chain_extension(l_mtu_of_t(s.t), s.l_ce, p));
        }
        let m = step_muscle(s, p, &l_mtu_of_t, &a_of_t, tau)?;
        Ok(chain_extension(l_mtu_of_t(s.t + tau), m.l_ce, p))
    };
    let f0 = ext_after(0.0)?;
    let f1 = chain_extension(l_mtu_of_t(s.t + dt), full.l_ce, p);
    if (f0 > 0.0) == (f1 > 0.0) {
        return Ok(full);
    }

    let (mut a, mut fa, mut b, mut fb) = (0.0, f0, dt, f1);
    let mut last_side = 0i8;
    let mut tau = 0.5 * dt;
    for _ in 0..60 {
        tau = (a * fb - b * fa) / (fb - fa);
        if !(tau > a && tau < b) {
            tau = 0.5 * (a + b);
        }
        let ft = ext_after(tau)?;
        if ft.abs() <= 1e-15 * s.l_ce || b - a <= 1e-12 * dt {
            break;
        }
        if (ft > 0.0) == (fb > 0.0) {
            b = tau;
            fb = ft;
            if last_side == 1 {
                fa *= 0.5;
            }
            last_side = 1;
        } else {
            a = tau;
            fa = ft;
            if last_side == -1 {
                fb *= 0.5;
            }
            last_side = -1;
        }
    }
    if !(tau > 0.0 && tau < dt) {
        return Ok(full);
    }
    let mid = step_muscle(s, p, &l_mtu_of_t, &a_of_t, tau)?;
    let end = step_muscle(mid, p, &l_mtu_of_t, &a_of_t, dt - tau)?;
    Ok(MuscleState {
        l_ce: end.l_ce,
        t: s.t + dt,
    })
}

/// Upper bound on `|d v / d l_ce|`, the CE relaxation rate, over all
/// lengths and activations, 1/s.
pub fn max_relaxation_rate(p: &WfmParams) -> f64 {
    let k_ts = p.k_ts_passive + p.k_ts_active;
    let k_eff = p.k_ss * k_ts / (p.k_ss + k_ts);
    // steepest slope of the Gaussian is sqrt(2/e) / width
    let fl_slope = (2.0 / std::f64::consts::E).sqrt() / (p.fl_width * p.l_ce_opt);
    (k_eff + p.f_max * fl_slope) / p.c_ce
}

/// CE length at which the CE neither lengthens nor shortens.
///
/// Bisects on `(0, l_mtu]` for the point where the net CE force changes from
/// positive (lengthening) to non-positive. At zero activation the zero set is
/// the whole slack interval and this returns its lower end, the length the
/// passive dynamics relax towards.
pub fn equilibrium_ce_length(l_mtu: f64, a: f64, p: &WfmParams) -> Result<f64> {
    check_length("l_mtu", l_mtu)?;
    check_activation(a)?;
    p.validate()?;
    let net = |l: f64| velocity_raw(l_mtu, l, a, p);

    let mut lo = l_mtu * 1e-9;
    let mut hi = l_mtu;
    if net(lo) <= 0.0 {
        return Err(Error::NoEquilibrium(format!(
            "CE shortens at every length for l_mtu = {l_mtu}, a = {a}"
        )));
    }
    if net(hi) > 0.0 {
        return Err(Error::NoEquilibrium(format!(
            "CE lengthens at every length for l_mtu = {l_mtu}, a = {a}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if net(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Peak isometric force from body mass: five body weights, in newtons.
pub fn f_max_from_mass(body_mass: f64) -> Result<f64> {
    if !(body_mass > 0.0 && body_mass.is_finite()) {
        return Err(Error::domain(format!("body mass must be positive, got {body_mass}")));
    }
    Ok(F_MAX_BODY_WEIGHTS * body_mass * GRAVITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> WfmParams {
        WfmParams {
            k_ss: 2.0e5,
            k_ts_passive: 1.0e4,
            k_ts_active: 9.0e4,
            c_ce: 1.0e3,
            f_max: 3432.3275,
            l_t_slack: 0.2,
            l_ts_rest: 0.02,
            l_ce_opt: 0.14,
            fl_width: 0.45,
        }
    }

    #[test]
    fn titin_stiffness_is_linear_in_activation() {
        let mut p = params();
        p.k_ts_passive = 1000.0;
        p.k_ts_active = 9000.0;
        assert_eq!(titin_stiffness(0.0, &p).unwrap(), 1000.0);
        assert_eq!(titin_stiffness(1.0, &p).unwrap(), 10000.0);
        assert_eq!(titin_stiffness(0.5, &p).unwrap(), 5500.0);
        assert!(titin_stiffness(1.5, &p).is_err());
        assert!(titin_stiffness(-0.1, &p).is_err());
    }

    #[test]
    fn force_length_peaks_at_optimum() {
        let p = params();
        assert_eq!(force_length_scale(p.l_ce_opt, &p).unwrap(), 1.0);
        let up = force_length_scale(p.l_ce_opt * (1.0 + p.fl_width), &p).unwrap();
        let down = force_length_scale(p.l_ce_opt * (1.0 - p.fl_width), &p).unwrap();
        assert!((up - 0.367879).abs() < 1e-6);
        assert!((down - 0.367879).abs() < 1e-6);
        assert!(force_length_scale(0.0, &p).is_err());
    }

    #[test]
    fn balance_at_rest_carries_no_force() {
        let p = params();
        let l_ce = 0.1;
        let l_mtu = l_ce + p.l_t_slack + p.l_ts_rest;
        let out = solve_internal_balance(l_mtu, l_ce, 0.3, &p).unwrap();
        assert!((out.l_ts - p.l_ts_rest).abs() < 1e-15);
        assert!(out.force.abs() < 1e-9);
    }

    #[test]
    fn balance_equal_springs_split_extension() {
        let p = WfmParams {
            k_ss: 100.0,
            k_ts_passive: 100.0,
            k_ts_active: 0.0,
            l_ts_rest: 0.0,
            ..params()
        };
        let l_ce = 0.1;
        let l_mtu = l_ce + p.l_t_slack + 0.02;
        let out = solve_internal_balance(l_mtu, l_ce, 0.0, &p).unwrap();
        assert!((out.l_ts - 0.01).abs() < 1e-12);
        assert!((out.force - 1.0).abs() < 1e-9);
        assert!(out.taut);
    }

    #[test]
    fn slack_chain_carries_no_tension() {
        let p = params();
        let l_ce = 0.1;
        let l_mtu = l_ce + p.l_t_slack + 0.5 * p.l_ts_rest;
        let out = solve_internal_balance(l_mtu, l_ce, 0.5, &p).unwrap();
        assert_eq!(out.force, 0.0);
        assert!(!out.taut);
        assert_eq!(out.l_ts, p.l_ts_rest);
    }

    #[test]
    fn degenerate_springs_rejected() {
        let p = WfmParams {
            k_ss: 0.0,
            k_ts_passive: 0.0,
            k_ts_active: 1.0,
            ..params()
        };
        assert!(matches!(
            solve_internal_balance(0.4, 0.1, 0.0, &p),
            Err(Error::DegenerateParameters(_))
        ));
    }

    #[test]
    fn velocity_quotient_and_signs() {
        let p = WfmParams {
            c_ce: 100.0,
            k_ss: 100.0,
            k_ts_passive: 100.0,
            k_ts_active: 0.0,
            l_ts_rest: 0.0,
            ..params()
        };
        // chain force of 1 N, no activation
        let l_mtu = 0.1 + p.l_t_slack + 0.02;
        let v = ce_velocity(l_mtu, 0.1, 0.0, &p).unwrap();
        assert!((v - 0.01).abs() < 1e-12);

        let p = params();
        let slack = 0.1 + p.l_t_slack;
        assert!(ce_velocity(slack, 0.1, 0.2, &p).unwrap() < 0.0);

        let bad = WfmParams { c_ce: 0.0, ..p };
        assert!(matches!(
            ce_velocity(0.4, 0.1, 0.2, &bad),
            Err(Error::DegenerateParameters(_))
        ));
    }

    #[test]
    fn velocity_zero_when_chain_matches_active_force() {
        let p = params();
        let a = 0.2;
        let l_ce = 0.13;
        let target = a * p.f_max * force_length_scale(l_ce, &p).unwrap();
        let k_eff = p.k_ss * titin_stiffness(a, &p).unwrap() / (p.k_ss + titin_stiffness(a, &p).unwrap());
        let l_mtu = l_ce + p.l_t_slack + p.l_ts_rest + target / k_eff;
        assert!(ce_velocity(l_mtu, l_ce, a, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn step_rejects_bad_dt() {
        let p = params();
        let s = MuscleState { l_ce: 0.14, t: 0.0 };
        assert!(step_muscle(s, &p, |_| 0.36, |_| 0.0, 0.0).is_err());
        assert!(step_muscle(s, &p, |_| 0.36, |_| 0.0, -1e-3).is_err());
    }

    #[test]
    fn step_reports_failure_time() {
        let p = params();
        let s = MuscleState { l_ce: 0.14, t: 0.25 };
        let err = step_muscle(s, &p, |_| 0.36, |_| f64::NAN, 1e-3).unwrap_err();
        assert!(matches!(err, Error::Integration { time, .. } if time == 0.25));
    }

    #[test]
    fn equilibrium_is_a_fixed_point_of_the_step() {
        let p = params();
        for &a in &[0.0, 0.1, 0.6] {
            let l_mtu = p.rest_length() + 0.01;
            let l_ce = equilibrium_ce_length(l_mtu, a, &p).unwrap();
            assert!(ce_velocity(l_mtu, l_ce, a, &p).unwrap().abs() <= 1e-9 * p.f_max / p.c_ce);
            let s = MuscleState { l_ce, t: 0.0 };
            let next = step_muscle(s, &p, |_| l_mtu, |_| a, 5e-4).unwrap();
            assert!(((next.l_ce - l_ce) / l_ce).abs() <= 1e-12, "a = {a}");
            assert_eq!(next.t, 5e-4);
        }
    }

    #[test]
    fn passive_equilibrium_at_rest_length() {
        let p = params();
        let l = equilibrium_ce_length(p.rest_length(), 0.0, &p).unwrap();
        assert!((l - p.l_ce_opt).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_missing_when_chain_cannot_hold_activation() {
        let p = params();
        // chain slack even for a vanishing CE; any activation shortens the CE.
        let l_mtu = 0.5 * (p.l_t_slack + p.l_ts_rest);
        assert!(matches!(
            equilibrium_ce_length(l_mtu, 0.5, &p),
            Err(Error::NoEquilibrium(_))
        ));
    }

    #[test]
    fn f_max_is_five_body_weights() {
        assert!((f_max_from_mass(70.0).unwrap() - 3432.33).abs() < 0.01);
        assert!((f_max_from_mass(1.0).unwrap() - 49.03).abs() < 0.01);
        assert!(f_max_from_mass(0.0).is_err());
        assert!(f_max_from_mass(-3.0).is_err());
    }

    #[test]
    fn validate_catches_bad_fields() {
        assert!(params().validate().is_ok());
        assert!(WfmParams { c_ce: 0.0, ..params() }.validate().is_err());
        assert!(WfmParams { k_ss: -1.0, ..params() }.validate().is_err());
        assert!(WfmParams {
            fl_width: 0.0,
            ..params()
        }
        .validate()
        .is_err());
        assert!(WfmParams {
            k_ts_passive: 0.0,
            k_ts_active: 0.0,
            ..params()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn sensitivity_matches_finite_difference() {
        let p = params();
        let d = |l_mtu, activation| Drive { l_mtu, activation };
        let drive = [d(0.362, 0.3), d(0.3625, 0.35), d(0.363, 0.4)];
        let (l, dt, h) = (0.139, 1e-3, 1e-7);
        let (next, slope) = step_with_sensitivity(l, &p, drive, dt);
        let plain = step_with_drive(MuscleState { l_ce: l, t: 0.0 }, &p, drive, dt).unwrap();
        assert_eq!(next, plain.l_ce);
        let fd =
            (step_with_sensitivity(l + h, &p, drive, dt).0 - step_with_sensitivity(l - h, &p, drive, dt).0) / (2.0 * h);
        assert!((slope - fd).abs() < 1e-7, "{slope} vs {fd}");
    }

    #[test]
    fn resolving_step_splits_at_the_taut_instant() {
        // passive CE, MTU stretching at constant rate: the chain goes taut
        // mid-step at a known time, after which extension decays exactly
        let p = params();
        let k_eff = p.k_ss * p.k_ts_passive / (p.k_ss + p.k_ts_passive);
        let rate = k_eff / p.c_ce;
        let (v, t_c) = (0.01, 0.3e-3);
        let l_ce = 0.14;
        let l0 = l_ce + p.l_t_slack + p.l_ts_rest - v * t_c;
        let l_of = |t: f64| l0 + v * t;
        let dt = 1e-3;
        let s = MuscleState { l_ce, t: 0.0 };
        let out = step_muscle_resolving(s, &p, l_of, |_| 0.0, dt).unwrap();
        // extension e' = v - rate e, e(t_c) = 0
        let tau = dt - t_c;
        let e = v / rate * (1.0 - (-rate * tau).exp());
        let exact = l_of(dt) - p.l_t_slack - p.l_ts_rest - e;
        let naive = step_muscle(s, &p, l_of, |_| 0.0, dt).unwrap();
        assert_eq!(out.t, dt);
        assert!((out.l_ce - exact).abs() < 1e-12, "{} vs {exact}", out.l_ce);
        assert!((out.l_ce - exact).abs() < (naive.l_ce - exact).abs());
    }

    #[test]
    fn resolving_step_without_transition_is_plain_rk4() {
        let p = params();
        let s = MuscleState { l_ce: 0.13, t: 0.1 };
        let l_of = |t: f64| 0.37 + 0.01 * t;
        let a = step_muscle_resolving(s, &p, l_of, |_| 0.4, 1e-3).unwrap();
        let b = step_muscle(s, &p, l_of, |_| 0.4, 1e-3).unwrap();
        assert_eq!(a, b);
    }
}
