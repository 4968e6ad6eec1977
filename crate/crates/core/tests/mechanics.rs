//! Muscle mechanics against independent oracles over random parameter draws.

use ankle_wfm::wfm::{
    ce_velocity, equilibrium_ce_length, f_max_from_mass, solve_internal_balance, step_muscle, MuscleState,
};
use ankle_wfm::WfmParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DRAWS: usize = 100;

fn random_params(rng: &mut ChaCha8Rng) -> WfmParams {
    let k_ss = rng.random_range(5.0e4..3.0e5);
    WfmParams {
        k_ss,
        k_ts_passive: k_ss * rng.random_range(0.01..0.2),
        k_ts_active: k_ss * rng.random_range(0.1..1.0),
        c_ce: rng.random_range(200.0..3000.0),
        f_max: rng.random_range(1500.0..5000.0),
        l_t_slack: rng.random_range(0.15..0.25),
        l_ts_rest: rng.random_range(0.01..0.03),
        l_ce_opt: rng.random_range(0.08..0.16),
        fl_width: rng.random_range(0.3..0.6),
    }
}

/// Chain tension written as two springs in series, independent of the
/// library's force-balance path.
fn series_force(l_mtu: f64, l_ce: f64, a: f64, p: &WfmParams) -> f64 {
    let k_ts = p.k_ts_passive + a * p.k_ts_active;
    let compliance = 1.0 / p.k_ss + 1.0 / k_ts;
    ((l_mtu - l_ce - p.l_t_slack - p.l_ts_rest) / compliance).max(0.0)
}

fn net_force(l_mtu: f64, l_ce: f64, a: f64, p: &WfmParams) -> f64 {
    let x = (l_ce - p.l_ce_opt) / (p.fl_width * p.l_ce_opt);
    series_force(l_mtu, l_ce, a, p) - a * p.f_max * (-x * x).exp()
}

/// Bisection to 1e-12 m for the lengthening-to-shortening crossing.
fn bisect_root(l_mtu: f64, a: f64, p: &WfmParams) -> f64 {
    let (mut lo, mut hi) = (1e-9, l_mtu);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if net_force(l_mtu, mid, a, p) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn force_balance_residual_is_negligible() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..DRAWS {
        let p = random_params(&mut rng);
        let a = rng.random_range(0.0..=1.0);
        let l_ce = p.l_ce_opt * rng.random_range(0.7..1.3);
        let l_mtu = l_ce + p.l_t_slack + p.l_ts_rest + rng.random_range(-0.01..0.03);
        let out = solve_internal_balance(l_mtu, l_ce, a, &p).unwrap();
        let k_ts = p.k_ts_passive + a * p.k_ts_active;
        let tol = 1e-9 * p.f_max;
        assert!((out.l_t + out.l_ts + l_ce - l_mtu).abs() < 1e-12);
        assert!(out.force >= 0.0);
        if out.taut {
            assert!((p.k_ss * (out.l_t - p.l_t_slack) - out.force).abs() <= tol);
            assert!((k_ts * (out.l_ts - p.l_ts_rest) - out.force).abs() <= tol);
        }
        assert!((out.force - series_force(l_mtu, l_ce, a, &p)).abs() <= tol);
    }
}

#[test]
fn long_time_step_limit_matches_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..DRAWS {
        let p = random_params(&mut rng);
        let a = rng.random_range(0.05..=1.0);
        let l_mtu = p.rest_length() + rng.random_range(-0.01..0.02);
        let target = bisect_root(l_mtu, a, &p);
        // local relaxation rate from the oracle's own slope
        let h = 1e-7;
        let rate = (net_force(l_mtu, target - h, a, &p) - net_force(l_mtu, target + h, a, &p)) / (2.0 * h * p.c_ce);
        assert!(rate > 0.0);
        // relax from a perturbed start for 50 time constants
        let mut s = MuscleState {
            l_ce: target * rng.random_range(0.98..1.02),
            t: 0.0,
        };
        let dt = 0.1 / rate;
        for _ in 0..500 {
            s = step_muscle(s, &p, |_| l_mtu, |_| a, dt).unwrap();
        }
        assert!((s.l_ce - target).abs() <= 1e-6, "{} vs {target}", s.l_ce);
    }
}

#[test]
fn equilibrium_matches_bisection_and_is_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..DRAWS {
        let p = random_params(&mut rng);
        let a = rng.random_range(0.05..=1.0);
        let l_mtu = p.rest_length() + rng.random_range(-0.01..0.02);
        let l = equilibrium_ce_length(l_mtu, a, &p).unwrap();
        assert!((l - bisect_root(l_mtu, a, &p)).abs() <= 1e-8);
        let v = ce_velocity(l_mtu, l, a, &p).unwrap();
        assert!(v.abs() * p.c_ce <= 1e-6 * p.f_max, "residual velocity {v}");
    }
}

#[test]
fn passive_equilibrium_is_the_slack_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..DRAWS {
        let p = random_params(&mut rng);
        let stretch = rng.random_range(-0.02..0.02);
        let l_mtu = p.rest_length() + stretch;
        let l = equilibrium_ce_length(l_mtu, 0.0, &p).unwrap();
        // zero force with the chain just unloaded
        assert!((l - (l_mtu - p.l_t_slack - p.l_ts_rest)).abs() <= 1e-8);
    }
    let p = random_params(&mut rng);
    let l = equilibrium_ce_length(p.rest_length(), 0.0, &p).unwrap();
    assert!((l - p.l_ce_opt).abs() <= 1e-12);
}

/// Error of one RK4 run against a fine reference, for Richardson ratios.
fn run(p: &WfmParams, l0: f64, steps: usize, t_end: f64, l_of: &dyn Fn(f64) -> f64, a_of: &dyn Fn(f64) -> f64) -> f64 {
    let dt = t_end / steps as f64;
    let mut s = MuscleState { l_ce: l0, t: 0.0 };
    for _ in 0..steps {
        s = step_muscle(s, p, l_of, a_of, dt).unwrap();
    }
    s.l_ce
}

#[test]
fn rk4_is_fourth_order_on_smooth_schedules() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let p = random_params(&mut rng);
        // stretched throughout so the chain stays taut and the flow smooth
        let base = p.rest_length() + 0.02;
        let (amp_l, w_l, amp_a, w_a, a0) = (
            rng.random_range(0.002..0.006),
            rng.random_range(3.0..8.0),
            rng.random_range(0.1..0.3),
            rng.random_range(3.0..8.0),
            rng.random_range(0.35..0.6),
        );
        let l_of = move |t: f64| base + amp_l * (w_l * t).sin();
        let a_of = move |t: f64| a0 + amp_a * (w_a * t).cos();
        let l0 = p.l_ce_opt;
        let t_end = 0.5;
        let tau = p.c_ce / (p.k_ss + p.f_max);
        let steps = ((t_end / (0.5 * tau)).ceil() as usize).max(20);
        let reference = run(&p, l0, steps * 64, t_end, &l_of, &a_of);
        let e1 = (run(&p, l0, steps, t_end, &l_of, &a_of) - reference).abs();
        let e2 = (run(&p, l0, steps * 2, t_end, &l_of, &a_of) - reference).abs();
        let ratio = e1 / e2;
        assert!((8.0..=32.0).contains(&ratio), "ratio {ratio} (errors {e1:e}, {e2:e})");
    }
}

#[test]
fn peak_force_from_mass() {
    assert!((f_max_from_mass(70.0).unwrap() - 3432.33).abs() < 0.01);
    assert!((f_max_from_mass(1.0).unwrap() - 49.03).abs() < 0.01);
    assert!(f_max_from_mass(0.0).is_err());
}
