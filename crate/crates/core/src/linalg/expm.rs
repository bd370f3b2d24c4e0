//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants (degrees 3, 5, 7, 9, 13; backward-error bounds of Higham 2005).

#[allow(unused_imports)] // float methods without std
use num_traits::Float;

use super::{CMatrix, Lu};
use crate::error::Result;

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// `exp(A)` for a square complex matrix.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let id = CMatrix::identity(n);
    let norm = a.norm_one();
    for &(m, theta) in THETA.iter() {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, &id, coeffs);
            return solve_pade(&u, &v);
        }
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a.scale_real(0.5f64.powi(s));
    let (u, v) = pade_13(&scaled, &id);
    let mut r = solve_pade(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_low(a: &CMatrix, id: &CMatrix, b: &[f64]) -> (CMatrix, CMatrix) {
    let a2 = a * a;
    let mut even = id.scale_real(b[0]);
    let mut odd = id.scale_real(b[1]);
    let mut power = id.clone();
    let mut k = 1;
    while 2 * k + 1 < b.len() {
        power = &power * &a2;
        even = &even + &power.scale_real(b[2 * k]);
        odd = &odd + &power.scale_real(b[2 * k + 1]);
        k += 1;
    }
    (a * &odd, even)
}

fn pade_13(a: &CMatrix, id: &CMatrix) -> (CMatrix, CMatrix) {
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let lin = |m6: f64, m4: f64, m2: f64, m0: f64| {
        let t = &(&a6.scale_real(m6) + &a4.scale_real(m4)) + &a2.scale_real(m2);
        &t + &id.scale_real(m0)
    };
    let u_inner = &a6 * &(&(&a6.scale_real(b[13]) + &a4.scale_real(b[11])) + &a2.scale_real(b[9]));
    let u = a * &(&u_inner + &lin(b[7], b[5], b[3], b[1]));
    let v_inner = &a6 * &(&(&a6.scale_real(b[12]) + &a4.scale_real(b[10])) + &a2.scale_real(b[8]));
    let v = &v_inner + &lin(b[6], b[4], b[2], b[0]);
    (u, v)
}

fn solve_pade(u: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    let p = v + u;
    let q = v - u;
    Ok(Lu::factor(&q)?.solve_matrix(&p))
}
