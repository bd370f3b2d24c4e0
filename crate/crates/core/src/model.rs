//! Physical parameters, battery states, the master-equation right-hand side
//! and scalar observables.

use core::f64::consts::PI;

#[allow(unused_imports)] // float methods without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{eigen, CMatrix, C64, I, ONE, ZERO};

/// Hermiticity and trace tolerance for a valid state.
pub const STATE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as non-negative.
pub const POSITIVITY_TOL: f64 = -1e-10;

/// Converts a frequency in MHz (cycles per microsecond) to rad/μs.
pub fn angular_from_mhz(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz
}

/// Converts rad/μs to MHz (the `X/2π` value).
pub fn mhz_from_angular(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Rates and frequencies of the three-level battery.
///
/// Rates are in μs⁻¹, `omega_rabi` and `delta` in rad/μs, level energies in eV
/// with the ground level at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    /// Decay `|2⟩ → |0⟩`.
    pub gamma20: f64,
    /// Decay `|2⟩ → |1⟩`.
    pub gamma21: f64,
    /// Decay `|1⟩ → |0⟩`.
    pub gamma10: f64,
    /// Mean thermal occupation of the reservoir on `|0⟩ ↔ |2⟩`.
    pub n_th: f64,
    pub omega_rabi: f64,
    pub delta: f64,
    pub e1: f64,
    pub e2: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::ca40()
    }
}

impl SystemParams {
    pub const GAMMA20: f64 = 140.0;
    pub const GAMMA21: f64 = 9.0;
    pub const GAMMA10: f64 = 1.3e-6;
    pub const E1: f64 = 1.70;
    pub const E2: f64 = 3.15;

    /// Calcium-ion rates and energies with `N_th = 4.8`, `Ω/2π = 20 MHz`,
    /// `δ = 0`.
    pub fn ca40() -> Self {
        SystemParams {
            gamma20: Self::GAMMA20,
            gamma21: Self::GAMMA21,
            gamma10: Self::GAMMA10,
            n_th: 4.8,
            omega_rabi: angular_from_mhz(20.0),
            delta: 0.0,
            e1: Self::E1,
            e2: Self::E2,
        }
    }

    pub fn with_n_th(mut self, n_th: f64) -> Self {
        self.n_th = n_th;
        self
    }

    /// Sets `Ω` from `Ω/2π` in MHz.
    pub fn with_omega_mhz(mut self, f_mhz: f64) -> Self {
        self.omega_rabi = angular_from_mhz(f_mhz);
        self
    }

    /// Sets `δ` from `δ/2π` in MHz.
    pub fn with_delta_mhz(mut self, f_mhz: f64) -> Self {
        self.delta = angular_from_mhz(f_mhz);
        self
    }

    pub fn with_gamma10(mut self, gamma10: f64) -> Self {
        self.gamma10 = gamma10;
        self
    }

    pub fn omega_mhz(&self) -> f64 {
        mhz_from_angular(self.omega_rabi)
    }

    pub fn delta_mhz(&self) -> f64 {
        mhz_from_angular(self.delta)
    }

    /// Coherence damping scale `Γ = ½[γ21 + γ20(N_th+1)]`.
    pub fn gamma_bar(&self) -> f64 {
        0.5 * (self.gamma21 + self.gamma20 * (self.n_th + 1.0))
    }

    /// Returns the parameters unchanged if every constraint holds, otherwise
    /// the first violated one.
    pub fn validate(self) -> Result<Self> {
        let checks: [(bool, &'static str, &'static str); 8] = [
            (
                self.gamma20 > 0.0 && self.gamma20.is_finite(),
                "gamma20",
                "> 0",
            ),
            (
                self.gamma21 > 0.0 && self.gamma21.is_finite(),
                "gamma21",
                "> 0",
            ),
            (
                self.gamma10 >= 0.0 && self.gamma10.is_finite(),
                "gamma10",
                "≥ 0",
            ),
            (self.n_th >= 0.0 && self.n_th.is_finite(), "n_th", "≥ 0"),
            (
                self.omega_rabi >= 0.0 && self.omega_rabi.is_finite(),
                "omega_rabi",
                "≥ 0",
            ),
            (self.delta.is_finite(), "delta", "finite"),
            (self.e1 > 0.0 && self.e1.is_finite(), "e1", "> 0"),
            (self.e2 > self.e1 && self.e2.is_finite(), "e2", "> e1"),
        ];
        for (ok, field, requirement) in checks {
            if !ok {
                return Err(Error::InvalidParams { field, requirement });
            }
        }
        Ok(self)
    }

    /// Interaction-picture Hamiltonian `Ω(|1⟩⟨2| + |2⟩⟨1|) + δ|2⟩⟨2|`.
    pub fn hamiltonian(&self) -> CMatrix {
        let mut h = CMatrix::zeros(3, 3);
        h[(1, 2)] = C64::new(self.omega_rabi, 0.0);
        h[(2, 1)] = C64::new(self.omega_rabi, 0.0);
        h[(2, 2)] = C64::new(self.delta, 0.0);
        h
    }

    /// The four dissipative channels, each `√rate · |to⟩⟨from|`.
    pub fn jump_channels(&self) -> [JumpChannel; 4] {
        [
            JumpChannel::new(self.gamma20 * (self.n_th + 1.0), 0, 2),
            JumpChannel::new(self.gamma20 * self.n_th, 2, 0),
            JumpChannel::new(self.gamma21, 1, 2),
            JumpChannel::new(self.gamma10, 0, 1),
        ]
    }
}

/// Jump operator `√rate · |to⟩⟨from|`, stored as the rate and the unit
/// transition operator so rates enter products without square-root rounding.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpChannel {
    pub rate: f64,
    pub to: usize,
    pub from: usize,
}

impl JumpChannel {
    pub fn new(rate: f64, to: usize, from: usize) -> Self {
        JumpChannel { rate, to, from }
    }

    /// `|to⟩⟨from|`.
    pub fn unit_operator(&self) -> CMatrix {
        let mut m = CMatrix::zeros(3, 3);
        m[(self.to, self.from)] = ONE;
        m
    }

    /// `√rate · |to⟩⟨from|`.
    pub fn operator(&self) -> CMatrix {
        self.unit_operator().scale_real(self.rate.sqrt())
    }
}

/// Battery state `ρ`, element `(i, j)` is `⟨i|ρ|j⟩` in the basis `|0⟩, |1⟩, |2⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    elements: [[C64; 3]; 3],
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(elements: [[C64; 3]; 3]) -> Result<Self> {
        let rho = DensityMatrix { elements };
        rho.check()?;
        Ok(rho)
    }

    /// Wraps elements without validation.
    pub fn new_unchecked(elements: [[C64; 3]; 3]) -> Self {
        DensityMatrix { elements }
    }

    /// `|k⟩⟨k|`.
    pub fn basis(k: usize) -> Self {
        assert!(k < 3, "level index out of range");
        let mut elements = [[ZERO; 3]; 3];
        elements[k][k] = ONE;
        DensityMatrix { elements }
    }

    pub fn maximally_mixed() -> Self {
        let third = C64::new(1.0 / 3.0, 0.0);
        let mut elements = [[ZERO; 3]; 3];
        for (k, row) in elements.iter_mut().enumerate() {
            row[k] = third;
        }
        DensityMatrix { elements }
    }

    /// Pure state `|ψ⟩⟨ψ|` of the normalized amplitudes.
    pub fn pure(amplitudes: [C64; 3]) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector"));
        }
        let a = amplitudes.map(|z| z.unscale(norm));
        let mut elements = [[ZERO; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                elements[i][j] = a[i] * a[j].conj();
            }
        }
        Ok(DensityMatrix { elements })
    }

    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        if m.nrows() != 3 || m.ncols() != 3 {
            return Err(Error::Dimension {
                expected: 9,
                found: m.nrows() * m.ncols(),
            });
        }
        DensityMatrix::new(core::array::from_fn(|i| {
            core::array::from_fn(|j| m[(i, j)])
        }))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.elements[i][j]
    }

    pub fn elements(&self) -> &[[C64; 3]; 3] {
        &self.elements
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_fn(3, 3, |i, j| self.elements[i][j])
    }

    pub fn trace(&self) -> C64 {
        self.elements[0][0] + self.elements[1][1] + self.elements[2][2]
    }

    /// Largest `|ρ_ij − conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                err = err.max((self.elements[i][j] - self.elements[j][i].conj()).norm());
            }
        }
        err
    }

    /// `(ρ + ρ†)/2`.
    pub fn hermitized(&self) -> Self {
        DensityMatrix {
            elements: core::array::from_fn(|i| {
                core::array::from_fn(|j| (self.elements[i][j] + self.elements[j][i].conj()) * 0.5)
            }),
        }
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let pairs = eigen(&self.hermitized().to_matrix()).expect("3x3 Hermitian eigensolve");
        let mut ev = [pairs.values[0].re, pairs.values[1].re, pairs.values[2].re];
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn check(&self) -> Result<()> {
        if self
            .elements
            .iter()
            .flatten()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidState("non-finite element"));
        }
        if self.hermiticity_error() > STATE_TOL {
            return Err(Error::InvalidState("not Hermitian"));
        }
        if (self.trace() - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidState("trace differs from 1"));
        }
        if self.eigenvalues()[0] < POSITIVITY_TOL {
            return Err(Error::InvalidState("negative eigenvalue"));
        }
        Ok(())
    }

    /// Hilbert–Schmidt distance `‖self − other‖`.
    pub fn hs_distance(&self, other: &DensityMatrix) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += (self.elements[i][j] - other.elements[i][j]).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Convex combination `a·self + (1 − a)·other`.
    pub fn mix(&self, other: &DensityMatrix, a: f64) -> Self {
        DensityMatrix {
            elements: core::array::from_fn(|i| {
                core::array::from_fn(|j| self.elements[i][j] * a + other.elements[i][j] * (1.0 - a))
            }),
        }
    }
}

/// Time derivative `dρ/dt = −i[H, ρ] + Σ_μ D[J_μ]ρ`, evaluated with 3×3
/// operator products.
pub fn lindblad_rhs(rho: &DensityMatrix, p: &SystemParams) -> Result<CMatrix> {
    rho.check()?;
    Ok(lindblad_rhs_unchecked(&rho.to_matrix(), p))
}

/// [`lindblad_rhs`] on an arbitrary 3×3 operator.
pub fn lindblad_rhs_unchecked(rho: &CMatrix, p: &SystemParams) -> CMatrix {
    let h = p.hamiltonian();
    let commutator = &(&h * rho) - &(rho * &h);
    let mut out = commutator.scale(-I);
    for ch in p.jump_channels() {
        if ch.rate == 0.0 {
            continue;
        }
        let j = ch.unit_operator();
        let jd = j.adjoint();
        let jdj = &jd * &j;
        let sandwich = &(&j * rho) * &jd;
        let anti = &(&jdj * rho) + &(rho * &jdj);
        let d = &sandwich - &anti.scale_real(0.5);
        out = &out + &d.scale_real(ch.rate);
    }
    out
}

/// Stored energy `Tr(ρ H_B) = e1·ρ11 + e2·ρ22`.
pub fn energy(rho: &DensityMatrix, p: &SystemParams) -> f64 {
    p.e1 * rho.get(1, 1).re + p.e2 * rho.get(2, 2).re
}

/// ℓ₁ coherence `Σ_{i≠j} |ρ_ij|`.
pub fn l1_coherence(rho: &DensityMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                s += rho.get(i, j).norm();
            }
        }
    }
    s
}

/// Von Neumann entropy in nats, with eigenvalues clamped to `[0, 1]`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues()
        .iter()
        .map(|&l| l.clamp(0.0, 1.0))
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum()
}

/// Hilbert–Schmidt (Frobenius) norm `√Tr(A A†)`.
pub fn hs_norm(a: &CMatrix) -> f64 {
    a.frobenius_norm()
}

/// Scalar summaries of a state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observables {
    /// eV
    pub energy: f64,
    pub l1_coherence: f64,
    /// nats
    pub entropy: f64,
    pub hs_norm: f64,
}

impl Observables {
    pub fn of(rho: &DensityMatrix, p: &SystemParams) -> Self {
        Observables {
            energy: energy(rho, p),
            l1_coherence: l1_coherence(rho),
            entropy: von_neumann_entropy(rho),
            hs_norm: hs_norm(&rho.to_matrix()),
        }
    }
}
