//! Non-Hermitian eigensolver: diagonal balancing, Householder reduction to
//! Hessenberg form, shifted complex QR iteration to Schur form, and
//! eigenvectors by back-substitution on the triangular factor.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods without std
use num_traits::Float;

use super::{CMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Complex Schur form `A = Q·T·Q†` with `T` upper triangular and `Q` unitary.
#[derive(Clone, Debug)]
pub struct Schur {
    pub t: CMatrix,
    pub q: CMatrix,
}

/// Eigenvalues with unit-norm right eigenvectors stored as matrix columns,
/// in the order the Schur form produced them.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<C64>,
    pub vectors: CMatrix,
}

const MAX_SWEEPS_PER_DIM: usize = 60;

/// Computes the complex Schur decomposition of a square matrix.
pub fn schur(a: &CMatrix) -> Result<Schur> {
    if !a.is_square() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let (mut h, mut q) = hessenberg(a);
    qr_iterate(&mut h, &mut q)?;
    Ok(Schur { t: h, q })
}

/// Eigenvalues and right eigenvectors of a general complex matrix.
pub fn eigen(a: &CMatrix) -> Result<EigenPairs> {
    let n = a.nrows();
    let (balanced, d) = balance(a);
    let Schur { t, q } = schur(&balanced)?;
    let y = triangular_eigenvectors(&t);
    let mut vectors = &q * &y;
    for j in 0..n {
        let mut norm = 0.0;
        for i in 0..n {
            vectors[(i, j)] = vectors[(i, j)].scale(d[i]);
            norm += vectors[(i, j)].norm_sqr();
        }
        let norm = norm.sqrt();
        if norm > 0.0 {
            for i in 0..n {
                vectors[(i, j)] = vectors[(i, j)].unscale(norm);
            }
        }
    }
    let values = (0..n).map(|i| t[(i, i)]).collect();
    Ok(EigenPairs { values, vectors })
}

/// Eigenvalues only, in Schur order.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    let (balanced, _) = balance(a);
    let Schur { t, .. } = schur(&balanced)?;
    Ok((0..a.nrows()).map(|i| t[(i, i)]).collect())
}

/// Radix-2 diagonal similarity scaling `D⁻¹·A·D` that equalizes row and column
/// norms. Returns the scaled matrix and the diagonal of `D`.
fn balance(a: &CMatrix) -> (CMatrix, Vec<f64>) {
    let n = a.nrows();
    let mut b = a.clone();
    let mut d = vec![1.0; n];
    let mut changed = true;
    let mut sweeps = 0;
    while changed && sweeps < 100 {
        changed = false;
        sweeps += 1;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += b[(j, i)].norm();
                    row += b[(i, j)].norm();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let (mut c, mut r) = (col, row);
            while c < r / 2.0 {
                c *= 2.0;
                r /= 2.0;
                f *= 2.0;
            }
            while c >= r * 2.0 {
                c /= 2.0;
                r *= 2.0;
                f /= 2.0;
            }
            if (c + r) < 0.95 * total {
                changed = true;
                d[i] *= f;
                for j in 0..n {
                    b[(i, j)] = b[(i, j)].unscale(f);
                    b[(j, i)] = b[(j, i)].scale(f);
                }
            }
        }
    }
    (b, d)
}

/// Householder reduction to upper Hessenberg form. Returns `(H, Q)` with
/// `A = Q·H·Q†`.
fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    if n < 3 {
        return (h, q);
    }
    for k in 0..n - 2 {
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let tail = v[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if tail == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 {
            ONE
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z = z.unscale(vnorm);
        }
        // H ← (I − 2vv†) H
        for j in 0..n {
            let dot: C64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            let dot = dot * 2.0;
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= v[i] * dot;
            }
        }
        // H ← H (I − 2vv†), Q ← Q (I − 2vv†)
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let dot: C64 = (0..v.len()).map(|j| m[(i, k + 1 + j)] * v[j]).sum();
                let dot = dot * 2.0;
                for j in 0..v.len() {
                    m[(i, k + 1 + j)] -= dot * v[j].conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Givens rotation `[c s; −s̄ c]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, ONE);
    }
    let norm = na.hypot(nb);
    let c = na / norm;
    let s = (a / na) * b.conj() / norm;
    (c, s)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

fn qr_iterate(h: &mut CMatrix, q: &mut CMatrix) -> Result<()> {
    let n = h.nrows();
    if n <= 1 {
        return Ok(());
    }
    let norm = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let max_total = MAX_SWEEPS_PER_DIM * n;
    let mut total = 0;
    let mut since_deflation = 0;
    let mut hi = n - 1;
    let mut rot: Vec<(f64, C64)> = Vec::with_capacity(n);
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].norm() <= f64::EPSILON * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > max_total {
            return Err(Error::EigNoConvergence { iterations: total });
        }
        let mu = if since_deflation % 11 == 0 {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 1.5
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        rot.clear();
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rot.push((c, s));
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = ZERO;
        }
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let k = l + idx;
            for i in 0..=(k + 1).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + s.conj() * y;
                h[(i, k + 1)] = -s * x + y * c;
            }
            for i in 0..n {
                let x = q[(i, k)];
                let y = q[(i, k + 1)];
                q[(i, k)] = x * c + s.conj() * y;
                q[(i, k + 1)] = -s * x + y * c;
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = ZERO;
        }
    }
    Ok(())
}

/// Right eigenvectors of an upper triangular matrix, as columns.
fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let small = f64::EPSILON * t.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = ONE;
        for j in (0..k).rev() {
            let mut sum = ZERO;
            for m in j + 1..=k {
                sum += t[(j, m)] * y[(m, k)];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                denom = C64::new(small, 0.0);
            }
            y[(j, k)] = -sum / denom;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vec_norm;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn residual(a: &CMatrix, pairs: &EigenPairs) -> f64 {
        let n = a.nrows();
        (0..n)
            .map(|k| {
                let v = pairs.vectors.column(k);
                let av = a.mul_vec(&v);
                let diff: Vec<C64> = av
                    .iter()
                    .zip(&v)
                    .map(|(x, y)| x - pairs.values[k] * y)
                    .collect();
                vec_norm(&diff)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn schur_is_unitary_similarity() {
        let a = CMatrix::from_fn(5, 5, |i, j| {
            c(
                (i * 3 + j) as f64 % 7.0 - 2.0,
                (i as f64) - (j as f64) * 0.5,
            )
        });
        let s = schur(&a).unwrap();
        let back = &(&s.q * &s.t) * &s.q.adjoint();
        assert!(back.max_abs_diff(&a) < 1e-12);
        assert!((&s.q.adjoint() * &s.q).max_abs_diff(&CMatrix::identity(5)) < 1e-13);
        for j in 0..5 {
            for i in j + 1..5 {
                assert_eq!(s.t[(i, j)], ZERO);
            }
        }
    }

    #[test]
    fn diagonal_matrix() {
        let d = [c(-1., 0.), c(3., 2.), c(0., -4.)];
        let pairs = eigen(&CMatrix::from_diagonal(&d)).unwrap();
        for (k, v) in d.iter().enumerate() {
            assert_eq!(pairs.values[k], *v);
        }
        assert!(residual(&CMatrix::from_diagonal(&d), &pairs) < 1e-15);
    }

    #[test]
    fn real_rotation_has_imaginary_pair() {
        let a = CMatrix::from_row_slice(2, 2, &[ZERO, c(-1., 0.), ONE, ZERO]).unwrap();
        let pairs = eigen(&a).unwrap();
        let mut ims: Vec<f64> = pairs.values.iter().map(|z| z.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] + 1.0).abs() < 1e-14 && (ims[1] - 1.0).abs() < 1e-14);
        assert!(residual(&a, &pairs) < 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let a = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(6., 0.),
                c(-11., 0.),
                c(6., 0.),
                ONE,
                ZERO,
                ZERO,
                ZERO,
                ONE,
                ZERO,
            ],
        )
        .unwrap();
        let pairs = eigen(&a).unwrap();
        let mut re: Vec<f64> = pairs.values.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, r) in re.iter().enumerate() {
            assert!((r - (k + 1) as f64).abs() < 1e-12);
        }
        assert!(residual(&a, &pairs) < 1e-12);
    }

    #[test]
    fn badly_scaled_matrix_residual() {
        let a = CMatrix::from_fn(6, 6, |i, j| {
            let s = 10f64.powi(i as i32 - j as i32);
            c(
                s * ((i + 2 * j) as f64).sin(),
                s * ((3 * i + j) as f64).cos(),
            )
        });
        let pairs = eigen(&a).unwrap();
        assert!(residual(&a, &pairs) < 1e-9 * a.frobenius_norm());
    }
}
