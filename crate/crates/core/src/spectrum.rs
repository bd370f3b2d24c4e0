//! Biorthogonal eigendecomposition of the Liouvillian, relaxation gaps, the
//! steady state and the spectral expansion of a trajectory.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, inner, CMatrix, Lu, C64, ONE, ZERO};
use crate::liouvillian::{self, extract_blocks, SuperOp, DIM};
use crate::model::DensityMatrix;

/// Eigenvalues below this modulus count as the stationary mode.
pub const ZERO_MODE_TOL: f64 = 1e-9;
/// Eigenvector-matrix condition number above which the spectrum is treated as
/// defective.
pub const DEFECTIVE_CONDITION: f64 = 1e8;

/// Eigenvalues sorted by descending real part (ties by ascending imaginary
/// part) with right eigenvectors and biorthonormal left eigenvectors,
/// `⟨L_α|R_β⟩ = δ_αβ`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    /// Unit-norm right eigenvectors.
    pub right: Vec<Vec<C64>>,
    /// Left eigenvectors `L_α`, so that `L_α† · 𝓛 = λ_α L_α†`. Zero when the
    /// spectrum is defective.
    pub left: Vec<Vec<C64>>,
    /// Frobenius condition number of the right-eigenvector matrix.
    pub condition: f64,
    pub defective: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Index of the eigenvalue of smallest modulus.
    pub fn zero_mode(&self) -> usize {
        smallest_modulus(&self.eigenvalues)
    }

    /// `Σ_α λ_α |R_α⟩⟨L_α|`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.len();
        let mut m = CMatrix::zeros(n, n);
        for (k, lambda) in self.eigenvalues.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += lambda * self.right[k][i] * self.left[k][j].conj();
                }
            }
        }
        m
    }

    /// Largest `|⟨L_α|R_β⟩ − δ_αβ|`.
    pub fn biorthogonality_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for a in 0..self.len() {
            for b in 0..self.len() {
                let target = if a == b { ONE } else { ZERO };
                err = err.max((inner(&self.left[a], &self.right[b]) - target).norm());
            }
        }
        err
    }
}

fn smallest_modulus(values: &[C64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Sorts by descending real part, treating real parts within a relative
/// `1e-10` as tied and ordering ties by ascending imaginary part.
pub fn sort_eigenvalues(values: &mut [C64]) {
    let order = sorted_order(values);
    let sorted: Vec<C64> = order.iter().map(|&i| values[i]).collect();
    values.copy_from_slice(&sorted);
}

fn sorted_order(values: &[C64]) -> Vec<usize> {
    let scale = values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-10 * scale;
    let before = |a: C64, b: C64| {
        if (a.re - b.re).abs() <= tol {
            a.im < b.im
        } else {
            a.re > b.re
        }
    };
    // insertion sort: the tolerance makes the order non-transitive, which
    // library sorts may reject
    let mut order: Vec<usize> = (0..values.len()).collect();
    for i in 1..order.len() {
        let mut j = i;
        while j > 0 && before(values[order[j]], values[order[j - 1]]) {
            order.swap(j, j - 1);
            j -= 1;
        }
    }
    order
}

/// Sorted eigenvalues without eigenvectors.
pub fn sorted_eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let mut ev = linalg::eigenvalues(m)?;
    sort_eigenvalues(&mut ev);
    Ok(ev)
}

/// Eigendecomposition with biorthogonal normalization. Near-defective input
/// is flagged through [`Spectrum::defective`] rather than rejected.
pub fn eigendecompose(m: &CMatrix) -> Result<Spectrum> {
    let n = m.nrows();
    let pairs = linalg::eigen(m)?;
    let order = sorted_order(&pairs.values);
    let eigenvalues: Vec<C64> = order.iter().map(|&i| pairs.values[i]).collect();
    let right: Vec<Vec<C64>> = order.iter().map(|&i| pairs.vectors.column(i)).collect();
    let mut v = CMatrix::zeros(n, n);
    for (k, r) in right.iter().enumerate() {
        v.set_column(k, r);
    }
    let (left, condition) = match Lu::factor(&v) {
        Ok(lu) => {
            let w = lu.inverse();
            let cond = v.frobenius_norm() * w.frobenius_norm();
            let left = (0..n)
                .map(|a| w.row(a).iter().map(|z| z.conj()).collect())
                .collect();
            (left, cond)
        }
        Err(_) => (vec![vec![ZERO; n]; n], f64::INFINITY),
    };
    let defective = !(condition <= DEFECTIVE_CONDITION);
    let left = if defective {
        vec![vec![ZERO; n]; n]
    } else {
        left
    };
    Ok(Spectrum {
        eigenvalues,
        right,
        left,
        condition,
        defective,
    })
}

/// Relaxation gaps in μs⁻¹.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReport {
    /// Full Liouvillian gap `Δ`.
    pub delta: f64,
    /// Gap of the slow block.
    pub delta_slow: f64,
    /// Gap of the two ground-state coherence blocks.
    pub delta_l2: f64,
}

impl GapReport {
    /// Relaxation time scale `1/Δ`.
    pub fn tau_delta(&self) -> f64 {
        1.0 / self.delta
    }
}

/// `−max Re λ` over all eigenvalues except the one of smallest modulus.
fn gap_excluding_zero_mode(values: &[C64]) -> f64 {
    let zero = smallest_modulus(values);
    -values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != zero)
        .map(|(_, z)| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// All eigenvalues of the full generator and of each block, sorted.
#[derive(Clone, Debug)]
pub struct BlockSpectra {
    pub full: Vec<C64>,
    pub l5: Vec<C64>,
    pub l2_left: Vec<C64>,
    pub l2_right: Vec<C64>,
}

impl BlockSpectra {
    pub fn compute(sop: &SuperOp) -> Result<Self> {
        let blocks = extract_blocks(sop)?;
        Ok(BlockSpectra {
            full: sorted_eigenvalues(sop.matrix())?,
            l5: sorted_eigenvalues(&blocks.l5)?,
            l2_left: sorted_eigenvalues(&blocks.l2_left)?,
            l2_right: sorted_eigenvalues(&blocks.l2_right)?,
        })
    }

    /// Number of eigenvalues of the full generator within [`ZERO_MODE_TOL`] of 0.
    pub fn zero_mode_count(&self) -> usize {
        self.full
            .iter()
            .filter(|z| z.norm() < ZERO_MODE_TOL)
            .count()
    }

    pub fn gaps(&self) -> Result<GapReport> {
        let count = self.zero_mode_count();
        if count != 1 {
            return Err(Error::DegenerateSteadyState { count });
        }
        let l2: Vec<C64> = self.l2_left.iter().chain(&self.l2_right).copied().collect();
        Ok(GapReport {
            delta: gap_excluding_zero_mode(&self.full),
            delta_slow: gap_excluding_zero_mode(&self.l5),
            delta_l2: -l2.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Slowest nonzero eigenvalue of the slow block.
    pub fn dominant_slow(&self) -> C64 {
        let zero = smallest_modulus(&self.l5);
        self.l5
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != zero)
            .map(|(_, z)| *z)
            .fold(C64::new(f64::NEG_INFINITY, 0.0), |a, b| {
                if b.re > a.re {
                    b
                } else {
                    a
                }
            })
    }
}

/// Gaps of the full generator and of its blocks. Fails when the stationary
/// mode is not unique.
pub fn gaps(sop: &SuperOp) -> Result<GapReport> {
    BlockSpectra::compute(sop)?.gaps()
}

/// Everything about one parameter point that does not depend on the initial
/// state: the generator, its block spectra and gaps, and the steady state.
#[derive(Clone, Debug)]
pub struct PointAnalysis {
    pub sop: SuperOp,
    pub spectra: BlockSpectra,
    pub gaps: GapReport,
    pub steady: DensityMatrix,
}

impl PointAnalysis {
    pub fn new(p: &crate::model::SystemParams) -> Result<Self> {
        let sop = liouvillian::build_liouvillian(p)?;
        let spectra = BlockSpectra::compute(&sop)?;
        let gaps = spectra.gaps()?;
        let steady = steady_state(&sop)?;
        Ok(PointAnalysis {
            sop,
            spectra,
            gaps,
            steady,
        })
    }

    /// Largest `|Im λ|` over the full spectrum.
    pub fn max_frequency(&self) -> f64 {
        self.spectra
            .full
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }
}

/// Stationary state from `𝓛ρ = 0` with the first population row replaced by
/// the trace condition.
pub fn steady_state(sop: &SuperOp) -> Result<DensityMatrix> {
    let l = sop.matrix();
    let mut a = l.clone();
    let row = liouvillian::index(0, 0);
    let tr = liouvillian::trace_functional();
    for (j, t) in tr.iter().enumerate() {
        a[(row, j)] = *t;
    }
    let mut b = [ZERO; DIM];
    b[row] = ONE;
    let degenerate = || {
        let count = sorted_eigenvalues(l)
            .map(|ev| ev.iter().filter(|z| z.norm() < ZERO_MODE_TOL).count())
            .unwrap_or(0);
        Error::DegenerateSteadyState { count }
    };
    let lu = Lu::factor(&a).map_err(|_| degenerate())?;
    let v = lu.solve(&b);
    let m = liouvillian::devectorize_operator(&v)?;
    let trace = m.trace();
    let m = m.scale(ONE / trace);
    let rho = DensityMatrix::new_unchecked(core::array::from_fn(|i| {
        core::array::from_fn(|j| m[(i, j)])
    }))
    .hermitized();
    let residual = linalg::vec_norm(&sop.apply(&liouvillian::vectorize(&rho)));
    if !(residual <= 1e-10 * l.max_abs().max(1.0)) {
        return Err(degenerate());
    }
    rho.check()?;
    Ok(rho)
}

/// Spectral expansion `|ρ(t)⟩ = Σ_α c_α e^{λ_α t} |R_α⟩` of an initial state.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub eigenvalues: Vec<C64>,
    /// `c_α = ⟨L_α|ρ₀⟩`, in spectrum order.
    pub coefficients: Vec<C64>,
    pub right: Vec<Vec<C64>>,
    /// Index of the stationary mode; its term is `|ρ_ss⟩`.
    pub zero_mode: usize,
}

impl Expansion {
    /// The vectorized state at time `t`.
    pub fn evaluate(&self, t: f64) -> Vec<C64> {
        let n = self.right.first().map_or(0, |r| r.len());
        let mut v = vec![ZERO; n];
        for (a, r) in self.right.iter().enumerate() {
            let w = if a == self.zero_mode {
                self.coefficients[a]
            } else {
                self.coefficients[a] * (self.eigenvalues[a] * t).exp()
            };
            for (x, y) in v.iter_mut().zip(r) {
                *x += w * y;
            }
        }
        v
    }

    /// `|ρ_ss⟩ = c_0 |R_0⟩`.
    pub fn stationary(&self) -> Vec<C64> {
        self.right[self.zero_mode]
            .iter()
            .map(|r| self.coefficients[self.zero_mode] * r)
            .collect()
    }
}

/// `c_α = ⟨L_α|ρ₀⟩`. Refuses defective spectra.
pub fn expansion_coefficients(rho0: &DensityMatrix, spectrum: &Spectrum) -> Result<Expansion> {
    if spectrum.defective {
        return Err(Error::DefectiveSpectrum {
            condition: spectrum.condition,
        });
    }
    let v = liouvillian::vectorize(rho0);
    if spectrum.len() != v.len() {
        return Err(Error::Dimension {
            expected: v.len(),
            found: spectrum.len(),
        });
    }
    Ok(Expansion {
        eigenvalues: spectrum.eigenvalues.clone(),
        coefficients: spectrum.left.iter().map(|l| inner(l, &v)).collect(),
        right: spectrum.right.clone(),
        zero_mode: spectrum.zero_mode(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, vec_norm};
    use crate::liouvillian::{build_liouvillian, vectorize};
    use crate::model::{l1_coherence, SystemParams};

    fn defaults() -> SuperOp {
        build_liouvillian(&SystemParams::ca40()).unwrap()
    }

    #[test]
    fn diagonal_matrix_spectrum() {
        let d = [C64::new(-3.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 2.0)];
        let s = eigendecompose(&CMatrix::from_diagonal(&d)).unwrap();
        assert_eq!(s.eigenvalues, [d[1], d[2], d[0]]);
        assert!(!s.defective);
        for (k, idx) in [1usize, 2, 0].iter().enumerate() {
            assert!((s.right[k][*idx].norm() - 1.0).abs() < 1e-15);
        }
        assert!(s.biorthogonality_error() < 1e-15);
    }

    #[test]
    fn sorting_breaks_ties_by_imaginary_part() {
        let mut v = [
            C64::new(-1.0, 2.0),
            C64::new(0.0, 0.0),
            C64::new(-1.0, -2.0),
        ];
        sort_eigenvalues(&mut v);
        assert_eq!(
            v,
            [
                C64::new(0.0, 0.0),
                C64::new(-1.0, -2.0),
                C64::new(-1.0, 2.0)
            ]
        );
    }

    #[test]
    fn jordan_block_is_flagged() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = ONE;
        let s = eigendecompose(&m).unwrap();
        assert!(s.defective);
        let rho = DensityMatrix::basis(0);
        assert!(matches!(
            expansion_coefficients(&rho, &s),
            Err(Error::Dimension { .. }) | Err(Error::DefectiveSpectrum { .. })
        ));
    }

    #[test]
    fn default_spectrum_has_one_zero_mode_and_reconstructs() {
        let sop = defaults();
        let s = eigendecompose(sop.matrix()).unwrap();
        let zeros = s
            .eigenvalues
            .iter()
            .filter(|z| z.norm() < ZERO_MODE_TOL)
            .count();
        assert_eq!(zeros, 1);
        assert!(s
            .eigenvalues
            .iter()
            .enumerate()
            .all(|(i, z)| i == s.zero_mode() || z.re < 0.0));
        assert!(s.biorthogonality_error() < 1e-9);
        assert!(s.reconstruct().max_abs_diff(sop.matrix()) < 1e-8);
    }

    #[test]
    fn l2_gap_is_fast() {
        let p = SystemParams::ca40();
        let g = gaps(&defaults()).unwrap();
        let scale = p.gamma20 * (2.0 * p.n_th + 1.0) / 2.0;
        assert!(
            g.delta_l2 > 0.5 * scale && g.delta_l2 < 2.0 * scale,
            "{g:?}"
        );
        assert!(g.delta_l2 > g.delta_slow);
        assert!((g.delta - g.delta_slow.min(g.delta_l2)).abs() < 1e-9 * g.delta);
    }

    #[test]
    fn dark_configuration_relaxes_to_ground() {
        let p = SystemParams {
            n_th: 0.0,
            omega_rabi: 0.0,
            ..SystemParams::ca40()
        };
        let sop = build_liouvillian(&p).unwrap();
        let rho = steady_state(&sop).unwrap();
        assert!(rho.hs_distance(&DensityMatrix::basis(0)) < 1e-12);
        let g = gaps(&sop).unwrap();
        assert!(g.delta.is_finite() && g.delta > 0.0);
        // the ground/first-excited coherence decays at half the population rate
        assert!((g.delta - 0.5 * p.gamma10).abs() < 1e-15);
    }

    #[test]
    fn non_primitive_dynamics_is_rejected() {
        let p = SystemParams {
            n_th: 0.0,
            omega_rabi: 0.0,
            gamma10: 0.0,
            ..SystemParams::ca40()
        };
        let sop = build_liouvillian(&p).unwrap();
        assert!(matches!(
            gaps(&sop),
            Err(Error::DegenerateSteadyState { count: 4 })
        ));
        assert!(matches!(
            steady_state(&sop),
            Err(Error::DegenerateSteadyState { .. })
        ));
    }

    #[test]
    fn steady_state_is_stationary() {
        let sop = defaults();
        let rho = steady_state(&sop).unwrap();
        assert!(vec_norm(&sop.apply(&vectorize(&rho))) < 1e-10);
        assert!((rho.trace() - ONE).norm() < 1e-14);
        assert!(l1_coherence(&rho) > 0.0);
    }

    #[test]
    fn steady_state_agrees_with_long_time_propagation() {
        let sop = defaults();
        let g = gaps(&sop).unwrap();
        let rho = steady_state(&sop).unwrap();
        let u = expm(&sop.matrix().scale_real(50.0 / g.delta)).unwrap();
        let late = u.mul_vec(&vectorize(&DensityMatrix::basis(0)));
        let diff: Vec<C64> = late
            .iter()
            .zip(vectorize(&rho))
            .map(|(a, b)| a - b)
            .collect();
        assert!(vec_norm(&diff) < 1e-8);
    }

    #[test]
    fn stationary_state_has_no_decaying_components() {
        let sop = defaults();
        let s = eigendecompose(sop.matrix()).unwrap();
        let rho = steady_state(&sop).unwrap();
        let e = expansion_coefficients(&rho, &s).unwrap();
        for (a, c) in e.coefficients.iter().enumerate() {
            if a != e.zero_mode {
                assert!(c.norm() < 1e-10, "mode {a}: {c}");
            }
        }
    }

    #[test]
    fn expansion_reproduces_initial_state_and_propagation() {
        let sop = defaults();
        let s = eigendecompose(sop.matrix()).unwrap();
        let rho0 = DensityMatrix::basis(0);
        let e = expansion_coefficients(&rho0, &s).unwrap();
        let v0 = vectorize(&rho0);
        let at0 = e.evaluate(0.0);
        assert!(at0.iter().zip(&v0).all(|(a, b)| (a - b).norm() < 1e-10));
        let t = 0.05;
        let exact = expm(&sop.matrix().scale_real(t)).unwrap().mul_vec(&v0);
        let diff: Vec<C64> = e
            .evaluate(t)
            .iter()
            .zip(&exact)
            .map(|(a, b)| a - b)
            .collect();
        assert!(vec_norm(&diff) < 1e-8);
        let ss = steady_state(&sop).unwrap();
        let diff: Vec<C64> = e
            .stationary()
            .iter()
            .zip(vectorize(&ss))
            .map(|(a, b)| a - b)
            .collect();
        assert!(vec_norm(&diff) < 1e-10);
    }
}
