//! The vectorized Liouvillian and its exact `5 ⊕ 2 ⊕ 2` block structure.
//!
//! Operators are vectorized row by row, `vec(ρ)[3i + j] = ρ_ij`. In this
//! convention `vec(A·X·B) = (A ⊗ Bᵀ)·vec(X)`, so the generator reads
//!
//! ```text
//! 𝓛 = −i(H ⊗ 𝟙 − 𝟙 ⊗ Hᵀ) + Σ_μ [J_μ ⊗ J_μ* − ½(J_μ†J_μ ⊗ 𝟙 + 𝟙 ⊗ (J_μ†J_μ)ᵀ)]
//! ```
//!
//! term by term. The block ordering `(ρ22, ρ12, ρ21, ρ11, ρ00 | ρ20, ρ10 | ρ02,
//! ρ01)` is applied as an explicit permutation.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, I, ZERO};
use crate::model::{DensityMatrix, SystemParams};

/// Dimension of Liouville space.
pub const DIM: usize = 9;

/// Row-major index of `ρ_ij`.
pub const fn index(i: usize, j: usize) -> usize {
    3 * i + j
}

/// Block ordering: entry `k` is the row-major index of the `k`-th component of
/// `(ρ22, ρ12, ρ21, ρ11, ρ00, ρ20, ρ10, ρ02, ρ01)`.
pub const BLOCK_ORDER: [usize; DIM] = [
    index(2, 2),
    index(1, 2),
    index(2, 1),
    index(1, 1),
    index(0, 0),
    index(2, 0),
    index(1, 0),
    index(0, 2),
    index(0, 1),
];

/// Component labels in [`BLOCK_ORDER`].
pub const BLOCK_LABELS: [&str; DIM] = [
    "rho22", "rho12", "rho21", "rho11", "rho00", "rho20", "rho10", "rho02", "rho01",
];

/// Ranges of the three blocks in the permuted ordering.
pub const SLOW_BLOCK: core::ops::Range<usize> = 0..5;
pub const LEFT_BLOCK: core::ops::Range<usize> = 5..7;
pub const RIGHT_BLOCK: core::ops::Range<usize> = 7..9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vectorization {
    /// `vec(ρ)[3i + j] = ρ_ij`.
    RowMajor,
}

/// `vec(ρ)`.
pub fn vectorize(rho: &DensityMatrix) -> [C64; DIM] {
    let e = rho.elements();
    core::array::from_fn(|k| e[k / 3][k % 3])
}

/// `vec(A)` for an arbitrary 3×3 operator.
pub fn vectorize_operator(a: &CMatrix) -> Result<[C64; DIM]> {
    if a.nrows() != 3 || a.ncols() != 3 {
        return Err(Error::Dimension {
            expected: DIM,
            found: a.nrows() * a.ncols(),
        });
    }
    Ok(core::array::from_fn(|k| a[(k / 3, k % 3)]))
}

/// Inverse of [`vectorize_operator`].
pub fn devectorize_operator(v: &[C64]) -> Result<CMatrix> {
    if v.len() != DIM {
        return Err(Error::Dimension {
            expected: DIM,
            found: v.len(),
        });
    }
    CMatrix::from_row_slice(3, 3, v)
}

/// Inverse of [`vectorize`], validating the result as a state.
pub fn devectorize(v: &[C64]) -> Result<DensityMatrix> {
    DensityMatrix::from_matrix(&devectorize_operator(v)?)
}

/// `vec(𝟙)`: as a left vector it maps `vec(ρ)` to `Tr ρ`.
pub fn trace_functional() -> [C64; DIM] {
    vectorize_operator(&CMatrix::identity(3)).expect("3x3")
}

/// The Liouvillian together with its vectorization convention.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp {
    matrix: CMatrix,
    params: SystemParams,
}

impl SuperOp {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn convention(&self) -> Vectorization {
        Vectorization::RowMajor
    }

    /// The fixed permutation to block order, see [`BLOCK_ORDER`].
    pub fn perm_to_blocks(&self) -> [usize; DIM] {
        BLOCK_ORDER
    }

    /// `𝓛·v`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.matrix.mul_vec(v)
    }

    /// The matrix with rows and columns permuted into block order.
    pub fn in_block_order(&self) -> CMatrix {
        self.matrix.select(&BLOCK_ORDER)
    }
}

/// Builds `𝓛` for validated parameters.
pub fn build_liouvillian(p: &SystemParams) -> Result<SuperOp> {
    let p = p.validate()?;
    Ok(SuperOp {
        matrix: liouvillian_matrix(&p),
        params: p,
    })
}

fn liouvillian_matrix(p: &SystemParams) -> CMatrix {
    let id = CMatrix::identity(3);
    let h = p.hamiltonian();
    let coherent = &h.kron(&id) - &id.kron(&h.transpose());
    let mut l = coherent.scale(-I);
    for ch in p.jump_channels() {
        // √rate factors are pulled out of the products so each term is `rate × (unit structure)`
        let j = ch.unit_operator();
        let jdj = &j.adjoint() * &j;
        let anti = &jdj.kron(&id) + &id.kron(&jdj.transpose());
        let term = &j.kron(&j.conj()) - &anti.scale_real(0.5);
        l = &l + &term.scale_real(ch.rate);
    }
    l
}

/// The three diagonal blocks in block order.
#[derive(Clone, Debug, PartialEq)]
pub struct Blocks {
    /// Acts on `(ρ22, ρ12, ρ21, ρ11, ρ00)`.
    pub l5: CMatrix,
    /// Acts on `(ρ20, ρ10)`.
    pub l2_left: CMatrix,
    /// Acts on `(ρ02, ρ01)`.
    pub l2_right: CMatrix,
}

/// Reads the blocks out after permutation, failing on any nonzero entry that
/// couples two different blocks.
pub fn extract_blocks(sop: &SuperOp) -> Result<Blocks> {
    let m = sop.in_block_order();
    let block_of = |k: usize| {
        if SLOW_BLOCK.contains(&k) {
            0
        } else if LEFT_BLOCK.contains(&k) {
            1
        } else {
            2
        }
    };
    for i in 0..DIM {
        for j in 0..DIM {
            if block_of(i) != block_of(j) && m[(i, j)] != ZERO {
                return Err(Error::CrossBlockEntry { row: i, col: j });
            }
        }
    }
    let sub = |r: core::ops::Range<usize>| {
        let start = r.start;
        let n = r.len();
        CMatrix::from_fn(n, n, |i, j| m[(start + i, start + j)])
    };
    Ok(Blocks {
        l5: sub(SLOW_BLOCK),
        l2_left: sub(LEFT_BLOCK),
        l2_right: sub(RIGHT_BLOCK),
    })
}
