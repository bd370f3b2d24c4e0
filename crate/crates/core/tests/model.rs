mod common;

use proptest::prelude::*;
use qbattery_core::model::{energy, lindblad_rhs, von_neumann_entropy};
use qbattery_core::{DensityMatrix, C64};

fn state(amps: [f64; 6], w: f64) -> DensityMatrix {
    let a = [
        C64::new(amps[0], amps[1]),
        C64::new(amps[2], amps[3]),
        C64::new(amps[4], amps[5]),
    ];
    let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let a = a.map(|z| z / norm.max(1e-3));
    let pure = DensityMatrix::pure(a).unwrap_or_else(|_| DensityMatrix::basis(0));
    pure.mix(&DensityMatrix::maximally_mixed(), w)
}

proptest! {
    #[test]
    fn generator_is_traceless_and_hermitian(
        p in common::params_strategy(),
        amps in proptest::array::uniform6(0.1..1.0f64),
        w in 0.0..1.0f64,
    ) {
        let rho = state(amps, w);
        let d = lindblad_rhs(&rho, &p).unwrap();
        let scale = p.gamma20 * (p.n_th + 1.0) + p.omega_rabi + p.delta.abs() + p.gamma21;
        prop_assert!(d.trace().norm() < 1e-13 * scale);
        prop_assert!(d.max_abs_diff(&d.adjoint()) < 1e-13 * scale);
    }

    #[test]
    fn energy_is_linear(p in common::params_strategy(), a in 0.0..1.0f64, w in 0.0..1.0f64) {
        let r1 = state([0.3, 0.1, 0.5, 0.0, 0.7, 0.2], w);
        let r2 = DensityMatrix::basis(2);
        let mixed = energy(&r1.mix(&r2, a), &p);
        let split = a * energy(&r1, &p) + (1.0 - a) * energy(&r2, &p);
        prop_assert!((mixed - split).abs() < 1e-13);
    }

    #[test]
    fn entropy_is_bounded(amps in proptest::array::uniform6(0.1..1.0f64), w in 0.0..1.0f64) {
        let s = von_neumann_entropy(&state(amps, w));
        prop_assert!(s > -1e-12 && s < 3f64.ln() + 1e-12);
    }
}
