//! Shared test support: an independent ODE oracle and random parameter draws.
#![allow(dead_code)]

pub mod ode;

use qbattery_core::SystemParams;
use rand::Rng;

/// Valid random parameters with γ10 > 0.
pub fn random_params<R: Rng>(rng: &mut R) -> SystemParams {
    let p = SystemParams {
        gamma20: rng.gen_range(10.0..300.0),
        gamma21: rng.gen_range(1.0..50.0),
        gamma10: rng.gen_range(1e-7..1e-3),
        n_th: rng.gen_range(0.0..20.0),
        ..SystemParams::ca40()
    };
    p.with_omega_mhz(rng.gen_range(0.0..40.0))
        .with_delta_mhz(rng.gen_range(-20.0..20.0))
}

/// Same ranges as a proptest strategy.
pub fn params_strategy() -> impl proptest::strategy::Strategy<Value = SystemParams> {
    use proptest::prelude::*;
    (
        10.0..300.0f64,
        1.0..50.0f64,
        1e-7..1e-3f64,
        0.0..20.0f64,
        0.0..40.0f64,
        -20.0..20.0f64,
    )
        .prop_map(|(g20, g21, g10, n, w, d)| {
            SystemParams {
                gamma20: g20,
                gamma21: g21,
                gamma10: g10,
                n_th: n,
                ..SystemParams::ca40()
            }
            .with_omega_mhz(w)
            .with_delta_mhz(d)
        })
}

/// Default-rate parameters at a given `N_th` and `Ω/2π` (MHz), resonant.
pub fn ca40_at(n_th: f64, omega_mhz: f64) -> SystemParams {
    SystemParams::ca40()
        .with_n_th(n_th)
        .with_omega_mhz(omega_mhz)
}

/// Greedy nearest matching of two multisets of complex numbers; returns the
/// largest pair distance.
pub fn multiset_distance(a: &[qbattery_core::C64], b: &[qbattery_core::C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|u, v| u.1.total_cmp(&v.1))
            .expect("sizes match");
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}
