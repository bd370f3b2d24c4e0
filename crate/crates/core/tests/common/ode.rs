//! Direct integration of the master equation with an adaptive Dormand–Prince
//! 5(4) pair. Written against the operator form of the equation with plain
//! 3×3 arrays, sharing no code with the library's superoperator path.

use qbattery_core::{SystemParams, C64};

pub type Mat = [[C64; 3]; 3];

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut c = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn dagger(a: &Mat) -> Mat {
    let mut c = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[j][i].conj();
        }
    }
    c
}

fn ket_bra(i: usize, j: usize, amp: f64) -> Mat {
    let mut m = [[ZERO; 3]; 3];
    m[i][j] = C64::new(amp, 0.0);
    m
}

/// dρ/dt = −i[H, ρ] + Σ (JρJ† − ½{J†J, ρ}).
pub fn rhs(rho: &Mat, p: &SystemParams) -> Mat {
    let mut h = [[ZERO; 3]; 3];
    h[1][2] = C64::new(p.omega_rabi, 0.0);
    h[2][1] = C64::new(p.omega_rabi, 0.0);
    h[2][2] = C64::new(p.delta, 0.0);
    let jumps = [
        ket_bra(0, 2, (p.gamma20 * (p.n_th + 1.0)).sqrt()),
        ket_bra(2, 0, (p.gamma20 * p.n_th).sqrt()),
        ket_bra(1, 2, p.gamma21.sqrt()),
        ket_bra(0, 1, p.gamma10.sqrt()),
    ];
    let hr = mul(&h, rho);
    let rh = mul(rho, &h);
    let mut out = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = -I * (hr[i][j] - rh[i][j]);
        }
    }
    for j in &jumps {
        let jd = dagger(j);
        let sandwich = mul(&mul(j, rho), &jd);
        let jdj = mul(&jd, j);
        let left = mul(&jdj, rho);
        let right = mul(rho, &jdj);
        for a in 0..3 {
            for b in 0..3 {
                out[a][b] += sandwich[a][b] - 0.5 * (left[a][b] + right[a][b]);
            }
        }
    }
    out
}

fn axpy(y: &Mat, terms: &[(f64, &Mat)], h: f64) -> Mat {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += k[i][j] * (h * c);
            }
        }
    }
    out
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates from `t = 0` and returns the state at every requested time
/// (non-decreasing). Error per step is kept below `atol + rtol·|y|` in max norm.
pub fn integrate(rho0: &Mat, p: &SystemParams, times: &[f64], rtol: f64, atol: f64) -> Vec<Mat> {
    let f = |y: &Mat| rhs(y, p);
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut y = *rho0;
    let mut k1 = f(&y);
    let mut h: f64 = 1e-6;
    for &target in times {
        while t < target {
            let step = h.min(target - t);
            let k2 = f(&axpy(&y, &[(A21, &k1)], step));
            let k3 = f(&axpy(&y, &[(A31, &k1), (A32, &k2)], step));
            let k4 = f(&axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], step));
            let k5 = f(&axpy(
                &y,
                &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
                step,
            ));
            let k6 = f(&axpy(
                &y,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                step,
            ));
            let y5 = axpy(
                &y,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                step,
            );
            let k7 = f(&y5);
            let err = axpy(
                &[[ZERO; 3]; 3],
                &[
                    (E1, &k1),
                    (E3, &k3),
                    (E4, &k4),
                    (E5, &k5),
                    (E6, &k6),
                    (E7, &k7),
                ],
                step,
            );
            let mut ratio: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let scale = atol + rtol * y[i][j].norm().max(y5[i][j].norm());
                    ratio = ratio.max(err[i][j].norm() / scale);
                }
            }
            if ratio <= 1.0 {
                t += step;
                y = y5;
                k1 = k7;
            }
            let factor = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            let clipped = step < h;
            if ratio > 1.0 || !clipped {
                h = step * factor;
            }
            h = h.max(1e-14);
        }
        out.push(y);
    }
    out
}

pub fn hs_distance(a: &Mat, b: &Mat) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += (a[i][j] - b[i][j]).norm_sqr();
        }
    }
    s.sqrt()
}
