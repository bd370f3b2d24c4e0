mod common;

use common::ode;
use proptest::prelude::*;
use qbattery_core::dynamics::{default_time_grid, propagate, uniform_grid};
use qbattery_core::spectrum::PointAnalysis;
use qbattery_core::{DensityMatrix, SystemParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ode_distance_max(p: &SystemParams, rho0: &DensityMatrix, times: &[f64]) -> f64 {
    let traj = propagate(rho0, p, times).unwrap();
    let reference = ode::integrate(rho0.elements(), p, times, 1e-12, 1e-15);
    traj.states
        .iter()
        .zip(&reference)
        .map(|(s, r)| ode::hs_distance(s.elements(), r))
        .fold(0.0, f64::max)
}

#[test]
fn matches_ode_at_defaults() {
    let p = SystemParams::ca40();
    let times = default_time_grid(0.2, 200).unwrap();
    let d = ode_distance_max(&p, &DensityMatrix::basis(0), &times);
    assert!(d < 1e-8, "max HS deviation {d:e}");
}

#[test]
fn matches_ode_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..4 {
        let p = common::random_params(&mut rng);
        let a = PointAnalysis::new(&p).unwrap();
        let horizon = (20.0 / a.gaps.delta).min(2.0);
        let times = uniform_grid(horizon, 50);
        let d = ode_distance_max(&p, &DensityMatrix::basis(0), &times);
        assert!(d < 1e-8, "{p:?}: {d:e}");
    }
}

/// Crests of `‖ρ(t) − ρ_ss‖·e^{Δ_slow t}`: the slow pair's oscillation rides
/// on the decay and shows up once the exponential is divided out.
fn rescaled_crests(n_th: f64) -> (usize, bool) {
    let p = common::ca40_at(n_th, 20.0);
    let a = PointAnalysis::new(&p).unwrap();
    let ds = a.gaps.delta_slow;
    let times = uniform_grid(15.0 / ds, 3000);
    let d = propagate(&DensityMatrix::basis(0), &p, &times)
        .unwrap()
        .hs_distances;
    let late = d.len() / 2;
    let z: Vec<f64> = d
        .iter()
        .zip(&times)
        .map(|(d, t)| d * (ds * t).exp())
        .collect();
    let crests = (late..z.len() - 1)
        .filter(|&k| z[k] > z[k - 1] * (1.0 + 1e-9) && z[k] >= z[k + 1])
        .count();
    let monotone = d[late..].windows(2).all(|w| w[1] <= w[0]);
    (crests, monotone)
}

#[test]
fn slow_pair_oscillates_below_the_ep_only() {
    for n in [1.0, 2.0] {
        assert!(rescaled_crests(n).0 >= 2, "N_th = {n}");
    }
    for n in [8.0, 16.0] {
        let (crests, monotone) = rescaled_crests(n);
        assert!(monotone && crests == 0, "N_th = {n}: {crests} crests");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_and_hermiticity_are_preserved(p in common::params_strategy()) {
        let a = PointAnalysis::new(&p).unwrap();
        let times = default_time_grid((10.0 / a.gaps.delta).min(50.0), 60).unwrap();
        let traj = propagate(&DensityMatrix::basis(0), &p, &times).unwrap();
        for s in &traj.states {
            prop_assert!((s.trace().re - 1.0).abs() < 1e-10);
            prop_assert!(s.trace().im.abs() < 1e-10);
            prop_assert!(s.hermiticity_error() < 1e-12);
            prop_assert!(s.eigenvalues().iter().all(|&x| x > -1e-10));
        }
    }

    #[test]
    fn semigroup(p in common::params_strategy(), t1 in 0.001..0.5f64, t2 in 0.001..0.5f64) {
        let rho0 = DensityMatrix::basis(0);
        let once = propagate(&rho0, &p, &[t1 + t2]).unwrap();
        let first = propagate(&rho0, &p, &[t1]).unwrap();
        let twice = propagate(&first.states[0], &p, &[t2]).unwrap();
        prop_assert!(once.states[0].hs_distance(&twice.states[0]) < 1e-9);
    }

    #[test]
    fn relaxes_by_thirty_gap_times(p in common::params_strategy()) {
        let a = PointAnalysis::new(&p).unwrap();
        let t = 30.0 / a.gaps.delta;
        let traj = propagate(&DensityMatrix::basis(0), &p, &[t]).unwrap();
        prop_assert!(traj.hs_distances[0] < 1e-10, "{:e} at t = {t}", traj.hs_distances[0]);
    }
}
