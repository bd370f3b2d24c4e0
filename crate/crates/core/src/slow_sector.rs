//! Closed-form treatment of the slow block at zero detuning: the reduced
//! 3×3 generator, its depressed cubic, Cardano roots, exceptional-point
//! search and the large-`N_th` adiabatic limit.
//!
//! The analytic path drops `γ10` (it is six orders of magnitude below the
//! other rates). With detuning the slow quantities are taken from a numeric
//! eigensolve of the slow block instead, see [`slow_eigenvalues`].

use alloc::vec::Vec;

#[allow(unused_imports)] // float methods without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{det3, singular_values, CMatrix, C64, ZERO};
use crate::liouvillian::{build_liouvillian, extract_blocks};
use crate::model::SystemParams;
use crate::spectrum::{sort_eigenvalues, sorted_eigenvalues, ZERO_MODE_TOL};

fn require_resonant(p: &SystemParams) -> Result<()> {
    if p.delta != 0.0 {
        return Err(Error::NonzeroDetuning);
    }
    Ok(())
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// The slow block on `(ρ22, ρ12, ρ21, ρ11, ρ00)` with `γ10 = 0`.
pub fn build_l5_analytic(p: &SystemParams) -> Result<CMatrix> {
    require_resonant(p)?;
    let p = p.validate()?;
    let g = p.gamma_bar();
    let iw = C64::new(0.0, p.omega_rabi);
    let up = p.n_th * p.gamma20;
    let down = (p.n_th + 1.0) * p.gamma20;
    #[rustfmt::skip]
    let m = [
        re(-2.0 * g), -iw, iw, ZERO, re(up),
        -iw, re(-g), ZERO, iw, ZERO,
        iw, ZERO, re(-g), -iw, ZERO,
        re(p.gamma21), iw, -iw, ZERO, ZERO,
        re(down), ZERO, ZERO, ZERO, re(-up),
    ];
    CMatrix::from_row_slice(5, 5, &m)
}

/// Decay rate of the symmetric coherence `σ = ρ12 + ρ21`, which equals `Γ`.
pub fn sigma_rate(p: &SystemParams) -> Result<f64> {
    require_resonant(p)?;
    Ok(p.gamma_bar())
}

/// Generator of `(Δρ22, A, Δρ11)` with `A = ρ12 − ρ21` and populations
/// measured from their stationary values.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedGenerator {
    pub m: CMatrix,
    pub gamma_bar: f64,
}

pub fn build_m(p: &SystemParams) -> Result<ReducedGenerator> {
    require_resonant(p)?;
    let p = p.validate()?;
    let g = p.gamma_bar();
    let ng = p.n_th * p.gamma20;
    let iw = C64::new(0.0, p.omega_rabi);
    #[rustfmt::skip]
    let m = [
        re(-(2.0 * g + ng)), -iw, re(-ng),
        -iw * 2.0, re(-g), iw * 2.0,
        re(p.gamma21), iw, ZERO,
    ];
    Ok(ReducedGenerator {
        m: CMatrix::from_row_slice(3, 3, &m)?,
        gamma_bar: g,
    })
}

/// Where the cubic coefficients came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientSource {
    /// The closed-form expressions, confirmed against `det(λI − M)`.
    ClosedForm,
    /// The closed forms disagreed with `det(λI − M)`; coefficients were
    /// recomputed from the characteristic polynomial.
    CharacteristicPolynomial,
}

/// `det(λI − M) = x³ + p x + q` with `λ = x − a/3`, `p = 3P`, `q = −2R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicCoefficients {
    pub a: f64,
    pub p_coef: f64,
    pub r_coef: f64,
    /// `Λ = R² + P³`.
    pub discriminant: f64,
    pub source: CoefficientSource,
    /// Largest relative mismatch of the closed forms at the probe points.
    pub consistency_error: f64,
}

impl CubicCoefficients {
    fn new(a: f64, p_coef: f64, r_coef: f64, source: CoefficientSource, err: f64) -> Self {
        CubicCoefficients {
            a,
            p_coef,
            r_coef,
            discriminant: r_coef * r_coef + p_coef * p_coef * p_coef,
            source,
            consistency_error: err,
        }
    }

    pub fn p(&self) -> f64 {
        3.0 * self.p_coef
    }

    pub fn q(&self) -> f64 {
        -2.0 * self.r_coef
    }

    /// Magnitude against which `Λ` is compared; its two terms cancel at an EP.
    pub fn discriminant_scale(&self) -> f64 {
        self.r_coef * self.r_coef + self.p_coef.abs().powi(3)
    }

    /// The monic cubic evaluated at `λ`.
    pub fn evaluate(&self, lambda: C64) -> C64 {
        let x = lambda + self.a / 3.0;
        x * x * x + x * self.p() + self.q()
    }
}

/// Relative tolerance of the closed-form versus determinant comparison.
pub const CONSISTENCY_TOL: f64 = 1e-8;

fn closed_form(p: &SystemParams) -> (f64, f64, f64) {
    let (g20, g21, n, w) = (p.gamma20, p.gamma21, p.n_th, p.omega_rabi);
    let w2 = w * w;
    let s = g20 + g21;
    let a = 0.5 * (5.0 * n * g20 + 3.0 * g20 + 3.0 * g21);
    let pc = 4.0 * w2 / 3.0 - s * s / 12.0 - n * g20 * g20 / 3.0 - 13.0 / 36.0 * n * n * g20 * g20;
    let rc = (3.0 * g21 - 4.0 * n * g20) * w2 / 3.0
        - n * g20 * s * s / 24.0
        - n * n * g20.powi(3) * (36.0 + 35.0 * n) / 216.0;
    (a, pc, rc)
}

/// Coefficients of the characteristic polynomial of `M` computed directly.
fn from_characteristic_polynomial(m: &CMatrix) -> (f64, f64, f64) {
    let a = -m.trace().re;
    let minor = |i: usize, j: usize| m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
    let b = (minor(0, 1) + minor(0, 2) + minor(1, 2)).re;
    let c = -det3(m).re;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    (a, p / 3.0, -q / 2.0)
}

/// The closed-form coefficients after checking them against `det(λI − M)` at
/// five fixed probe points.
pub fn cubic_coefficients(p: &SystemParams) -> Result<CubicCoefficients> {
    let reduced = build_m(p)?;
    let m = &reduced.m;
    let (a, pc, rc) = closed_form(p);
    let candidate = CubicCoefficients::new(a, pc, rc, CoefficientSource::ClosedForm, 0.0);
    let scale = m.max_abs().max(1.0);
    let probes = [
        (0.3, 0.7),
        (-1.1, 0.2),
        (0.05, -0.9),
        (-0.4, -0.4),
        (1.7, 0.0),
    ];
    let mut err: f64 = 0.0;
    for (x, y) in probes {
        let lambda = C64::new(x, y) * scale;
        let shifted = &CMatrix::identity(3).scale(lambda) - m;
        let det = det3(&shifted);
        let size = (lambda.norm() + 3.0 * scale).powi(3);
        err = err.max((candidate.evaluate(lambda) - det).norm() / size);
    }
    if err <= CONSISTENCY_TOL {
        return Ok(CubicCoefficients {
            consistency_error: err,
            ..candidate
        });
    }
    let (a, pc, rc) = from_characteristic_polynomial(m);
    Ok(CubicCoefficients::new(
        a,
        pc,
        rc,
        CoefficientSource::CharacteristicPolynomial,
        err,
    ))
}

fn principal_cbrt(z: C64) -> C64 {
    if z.im == 0.0 {
        return re(z.re.cbrt());
    }
    C64::from_polar(z.norm().cbrt(), z.arg() / 3.0)
}

/// The three roots `λ_k = x_k − a/3`, sorted by descending real part.
///
/// The cube root `u` is taken of whichever of `R ± √Λ` has the larger
/// modulus and the second term is fixed by `u·v = −P`, which keeps the pair
/// on consistent branches in the three-real-root case.
pub fn cardano_roots(c: &CubicCoefficients) -> [C64; 3] {
    let sqrt_l = re(c.discriminant).sqrt();
    let plus = re(c.r_coef) + sqrt_l;
    let minus = re(c.r_coef) - sqrt_l;
    let w = if plus.norm() >= minus.norm() {
        plus
    } else {
        minus
    };
    let u = principal_cbrt(w);
    let v = if u == ZERO { ZERO } else { -re(c.p_coef) / u };
    let omega = C64::new(-0.5, 0.75f64.sqrt());
    let omega_bar = omega.conj();
    let shift = re(c.a / 3.0);
    let mut roots = [
        u + v - shift,
        omega * u + omega_bar * v - shift,
        omega_bar * u + omega * v - shift,
    ];
    sort_eigenvalues(&mut roots);
    roots
}

/// Nonzero slow eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct SlowEigenvalues {
    /// Sorted by descending real part.
    pub values: Vec<C64>,
    /// `true` when they come from the cubic (zero detuning, `γ10` dropped).
    pub analytic: bool,
}

impl SlowEigenvalues {
    /// The slowest mode.
    pub fn dominant(&self) -> C64 {
        self.values[0]
    }

    /// `−max Re λ`.
    pub fn gap(&self) -> f64 {
        -self.values[0].re
    }
}

/// The cubic roots together with `−Γ` at zero detuning; otherwise the
/// nonzero eigenvalues of the numeric slow block.
pub fn slow_eigenvalues(p: &SystemParams) -> Result<SlowEigenvalues> {
    if p.delta == 0.0 {
        let c = cubic_coefficients(p)?;
        let mut values: Vec<C64> = cardano_roots(&c).to_vec();
        values.push(re(-p.gamma_bar()));
        sort_eigenvalues(&mut values);
        return Ok(SlowEigenvalues {
            values,
            analytic: true,
        });
    }
    let blocks = extract_blocks(&build_liouvillian(p)?)?;
    let mut values = sorted_eigenvalues(&blocks.l5)?;
    let zero = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .expect("five eigenvalues");
    if values[zero].norm() < ZERO_MODE_TOL {
        values.remove(zero);
    }
    Ok(SlowEigenvalues {
        values,
        analytic: false,
    })
}

/// A located exceptional point along `N_th` at fixed `Ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EPResult {
    pub n_th_ep: f64,
    pub omega_rabi: f64,
    /// The coalesced (real) eigenvalue of `M`.
    pub lambda_ep: f64,
    /// Number of singular values of `M − λ_EP` below `1e-6·‖M‖`.
    pub kernel_dim: usize,
    /// `|Λ| / (R² + |P|³)` at the returned point.
    pub discriminant_residual: f64,
    /// Smallest and second-smallest singular values of `M − λ_EP`.
    pub sigma_min: f64,
    pub sigma_second: f64,
    /// Fitted exponent of the pair splitting; `None` if the fit failed.
    pub sqrt_fit_exponent: Option<f64>,
    /// Linear drift of the pair mean, `λ_± ≈ λ_EP + c1·d ± c2·√d`.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

/// Target accuracy of the bisection on `Λ`.
pub const DISCRIMINANT_TOL: f64 = 1e-12;
const SCAN_INTERVALS: usize = 64;

fn discriminant_at(p: &SystemParams, n_th: f64) -> Result<CubicCoefficients> {
    cubic_coefficients(&p.with_n_th(n_th))
}

/// Finds the first sign change of `Λ(N_th)` on `[lo, hi]` at the `Ω` of `p`,
/// bisects it and checks the rank condition.
pub fn locate_ep(p: &SystemParams, lo: f64, hi: f64) -> Result<EPResult> {
    require_resonant(p)?;
    if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidArgument(
            "N_th interval must satisfy 0 <= lo < hi",
        ));
    }
    let lam = |n: f64| discriminant_at(p, n).map(|c| c.discriminant);
    let mut a = lo;
    let mut fa = lam(a)?;
    let mut bracket = None;
    for k in 1..=SCAN_INTERVALS {
        let b = lo + (hi - lo) * k as f64 / SCAN_INTERVALS as f64;
        let fb = lam(b)?;
        if fa == 0.0 {
            bracket = Some((a, a, fa, fa));
            break;
        }
        if fa.signum() != fb.signum() {
            bracket = Some((a, b, fa, fb));
            break;
        }
        a = b;
        fa = fb;
    }
    let (mut a, mut b, mut fa, _) = bracket.ok_or(Error::NoSignChange { lo, hi })?;
    let mut mid = a;
    for _ in 0..200 {
        mid = 0.5 * (a + b);
        let c = discriminant_at(p, mid)?;
        if c.discriminant.abs() <= DISCRIMINANT_TOL * c.discriminant_scale() || mid == a || mid == b
        {
            break;
        }
        if c.discriminant.signum() == fa.signum() {
            a = mid;
            fa = c.discriminant;
        } else {
            b = mid;
        }
    }
    let at = p.with_n_th(mid);
    let c = cubic_coefficients(&at)?;
    let lambda_ep = -c.r_coef.cbrt() - c.a / 3.0;
    let m = build_m(&at)?.m;
    let shifted = &m - &CMatrix::identity(3).scale(re(lambda_ep));
    let sv = singular_values(&shifted);
    let tol = 1e-6 * m.frobenius_norm();
    let kernel_dim = sv.iter().filter(|s| **s <= tol).count();
    if kernel_dim != 1 {
        return Err(Error::NotAnExceptionalPoint { kernel_dim });
    }
    let mut ep = EPResult {
        n_th_ep: mid,
        omega_rabi: p.omega_rabi,
        lambda_ep,
        kernel_dim,
        discriminant_residual: c.discriminant.abs() / c.discriminant_scale(),
        sigma_min: sv[0],
        sigma_second: sv[1],
        sqrt_fit_exponent: None,
        c1: None,
        c2: None,
    };
    if let Ok(fit) = sqrt_scaling_fit(&ep, p) {
        ep.sqrt_fit_exponent = Some(fit.exponent);
        ep.c1 = Some(fit.c1);
        ep.c2 = Some(fit.c2);
    }
    Ok(ep)
}

/// Splittings smaller than this cannot be resolved.
pub const MIN_SPLITTING: f64 = 1e-10;

/// Result of fitting the pair splitting near an EP.
#[derive(Clone, Debug, PartialEq)]
pub struct SqrtFit {
    pub exponent: f64,
    pub c1: f64,
    pub c2: f64,
    /// Offsets `N_th − N_th^EP`.
    pub offsets: Vec<f64>,
    /// `|λ₊ − λ₋|` at each offset.
    pub splittings: Vec<f64>,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn power_law_exponent(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two matching samples"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(linear_fit(&lx, &ly).0)
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

const FIT_POINTS: usize = 9;

/// Fits `|λ₊ − λ₋| ∝ (N_th − N_th^EP)^ν` on the overdamped side over
/// offsets `N_th^EP·[1e-3, 1e-1]`, log-spaced.
pub fn sqrt_scaling_fit(ep: &EPResult, p: &SystemParams) -> Result<SqrtFit> {
    require_resonant(p)?;
    let mut offsets = Vec::with_capacity(FIT_POINTS);
    let mut splittings = Vec::with_capacity(FIT_POINTS);
    let mut drifts = Vec::with_capacity(FIT_POINTS);
    for k in 0..FIT_POINTS {
        let d = ep.n_th_ep * 10f64.powf(-3.0 + 2.0 * k as f64 / (FIT_POINTS - 1) as f64);
        let c = cubic_coefficients(&p.with_n_th(ep.n_th_ep + d))?;
        let mut roots = cardano_roots(&c);
        roots.sort_by(|x, y| {
            (x - ep.lambda_ep)
                .norm()
                .total_cmp(&(y - ep.lambda_ep).norm())
        });
        let split = (roots[0] - roots[1]).norm();
        if !(split > MIN_SPLITTING) {
            return Err(Error::InsufficientSplitting);
        }
        offsets.push(d);
        splittings.push(split);
        drifts.push(0.5 * (roots[0] + roots[1]).re - ep.lambda_ep);
    }
    let exponent = power_law_exponent(&offsets, &splittings)?;
    // c2 from the smallest offsets where the square root dominates
    let c2 = splittings[0] / (2.0 * offsets[0].sqrt());
    let through_origin = offsets.iter().zip(&drifts).map(|(d, m)| d * m).sum::<f64>()
        / offsets.iter().map(|d| d * d).sum::<f64>();
    Ok(SqrtFit {
        exponent,
        c1: through_origin,
        c2,
        offsets,
        splittings,
    })
}

/// Exact adiabatic single-mode rate for the storage population.
pub fn kappa_eff(p: &SystemParams) -> f64 {
    let g = p.gamma_bar();
    let ng = p.n_th * p.gamma20;
    let w2 = p.omega_rabi * p.omega_rabi;
    let num = g * ng * p.gamma21 + 4.0 * w2 * (g + ng) - 2.0 * w2 * p.gamma21;
    num / adiabatic_denominator(p)
}

/// Large-`N_th` expansion of [`kappa_eff`] to order `1/N_th`.
pub fn kappa_eff_asymptotic(p: &SystemParams) -> f64 {
    let w2 = p.omega_rabi * p.omega_rabi;
    0.5 * p.gamma21 + (24.0 * w2 - p.gamma21 * (p.gamma20 + p.gamma21)) / (4.0 * p.n_th * p.gamma20)
}

fn adiabatic_denominator(p: &SystemParams) -> f64 {
    let g = p.gamma_bar();
    2.0 * g * g + g * p.n_th * p.gamma20 + 2.0 * p.omega_rabi * p.omega_rabi
}

/// Quasi-static `(Δρ22, A)` slaved to a given `Δρ11`.
pub fn adiabatic_coherences(p: &SystemParams, delta_rho11: C64) -> Result<(C64, C64)> {
    let d = adiabatic_denominator(p);
    if !(d.abs() > 0.0) {
        return Err(Error::Singular);
    }
    let g = p.gamma_bar();
    let ng = p.n_th * p.gamma20;
    let w = p.omega_rabi;
    let rho22 = delta_rho11 * ((2.0 * w * w - g * ng) / d);
    let a = delta_rho11 * C64::new(0.0, 4.0 * w * (g + ng) / d);
    Ok((rho22, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues, I};
    use crate::model::SystemParams;

    fn at(n: f64) -> SystemParams {
        SystemParams::ca40().with_gamma10(0.0).with_n_th(n)
    }

    #[test]
    fn detuning_is_refused() {
        let p = at(3.0).with_delta_mhz(1.0);
        assert_eq!(build_l5_analytic(&p).unwrap_err(), Error::NonzeroDetuning);
        assert_eq!(build_m(&p).unwrap_err(), Error::NonzeroDetuning);
        assert_eq!(sigma_rate(&p).unwrap_err(), Error::NonzeroDetuning);
    }

    #[test]
    fn sigma_rate_arithmetic() {
        assert_eq!(sigma_rate(&at(0.0)).unwrap(), 74.5);
        let slope = sigma_rate(&at(3.0)).unwrap() - sigma_rate(&at(2.0)).unwrap();
        assert!((slope - 70.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_block_matches_liouvillian() {
        for n in [0.0, 1.3, 4.8, 17.0] {
            let p = at(n);
            let blocks = extract_blocks(&build_liouvillian(&p).unwrap()).unwrap();
            assert_eq!(build_l5_analytic(&p).unwrap(), blocks.l5);
        }
    }

    #[test]
    fn undriven_block_has_double_coherence_decay() {
        let p = SystemParams {
            omega_rabi: 0.0,
            ..at(2.0)
        };
        let l5 = build_l5_analytic(&p).unwrap();
        let g = p.gamma_bar();
        assert_eq!(l5[(1, 1)], re(-g));
        assert_eq!(l5[(2, 2)], re(-g));
        for j in [0, 3, 4] {
            assert_eq!(l5[(1, j)], ZERO);
            assert_eq!(l5[(2, j)], ZERO);
        }
    }

    #[test]
    fn sigma_is_an_exact_eigenvector() {
        let p = at(4.8);
        let l5 = build_l5_analytic(&p).unwrap();
        let v = [ZERO, re(1.0), re(1.0), ZERO, ZERO];
        let lv = l5.mul_vec(&v);
        let g = sigma_rate(&p).unwrap();
        for (a, b) in lv.iter().zip(&v) {
            assert!((a + b * g).norm() < 1e-10);
        }
    }

    #[test]
    fn trace_of_m_is_minus_a() {
        let p = at(6.0);
        let m = build_m(&p).unwrap();
        let c = cubic_coefficients(&p).unwrap();
        assert!((m.m.trace().re + c.a).abs() < 1e-10);
    }

    #[test]
    fn a_at_zero_occupation() {
        assert_eq!(cubic_coefficients(&at(0.0)).unwrap().a, 223.5);
    }

    #[test]
    fn closed_forms_pass_the_determinant_check() {
        for n in [0.0, 0.5, 4.8, 20.0, 300.0] {
            for w in [0.0, 5.0, 40.0] {
                let c = cubic_coefficients(&at(n).with_omega_mhz(w)).unwrap();
                assert_eq!(c.source, CoefficientSource::ClosedForm, "N={n} Ω={w}");
            }
        }
    }

    #[test]
    fn characteristic_polynomial_path_agrees() {
        let p = at(3.3);
        let m = build_m(&p).unwrap().m;
        let (a, pc, rc) = from_characteristic_polynomial(&m);
        let c = cubic_coefficients(&p).unwrap();
        assert!((a - c.a).abs() < 1e-10 * c.a);
        assert!((pc - c.p_coef).abs() < 1e-9 * c.p_coef.abs());
        assert!((rc - c.r_coef).abs() < 1e-9 * c.r_coef.abs());
    }

    #[test]
    fn reduced_spectrum_completes_the_block() {
        let p = at(2.5);
        let mut expected = sorted_eigenvalues(&build_l5_analytic(&p).unwrap()).unwrap();
        let mut got: Vec<C64> = eigenvalues(&build_m(&p).unwrap().m).unwrap();
        got.push(ZERO);
        got.push(re(-p.gamma_bar()));
        sort_eigenvalues(&mut got);
        sort_eigenvalues(&mut expected);
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn triple_root() {
        let c = CubicCoefficients::new(9.0, 0.0, 0.0, CoefficientSource::ClosedForm, 0.0);
        for r in cardano_roots(&c) {
            assert_eq!(r, re(-3.0));
        }
    }

    #[test]
    fn cardano_matches_eigenvalues_of_m() {
        for n in [0.3, 2.0, 4.8, 8.0, 16.0] {
            let p = at(n);
            let m = build_m(&p).unwrap().m;
            let mut ev = eigenvalues(&m).unwrap();
            sort_eigenvalues(&mut ev);
            let roots = cardano_roots(&cubic_coefficients(&p).unwrap());
            for (a, b) in roots.iter().zip(&ev) {
                assert!(
                    (a - b).norm() < 1e-9 * m.frobenius_norm(),
                    "N={n}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn discriminant_changes_sign_across_the_ep() {
        assert!(cubic_coefficients(&at(2.0)).unwrap().discriminant > 0.0);
        assert!(cubic_coefficients(&at(8.0)).unwrap().discriminant < 0.0);
        let roots = cardano_roots(&cubic_coefficients(&at(8.0)).unwrap());
        assert!(roots.iter().all(|r| r.im.abs() < 1e-10));
    }

    #[test]
    fn ep_at_default_drive() {
        let ep = locate_ep(&at(0.0), 0.1, 20.0).unwrap();
        assert!((ep.n_th_ep - 4.8).abs() < 0.5, "{ep:?}");
        assert_eq!(ep.kernel_dim, 1);
        assert!(ep.discriminant_residual < 1e-9);
        let nu = ep.sqrt_fit_exponent.unwrap();
        assert!((nu - 0.5).abs() < 0.1, "{nu}");
        assert!(ep.c1.unwrap() < 0.0);
    }

    #[test]
    fn no_sign_change_is_reported() {
        assert_eq!(
            locate_ep(&at(0.0), 6.0, 20.0).unwrap_err(),
            Error::NoSignChange { lo: 6.0, hi: 20.0 }
        );
    }

    #[test]
    fn synthetic_jordan_perturbation_scales_as_square_root() {
        let offsets: Vec<f64> = (0..9).map(|k| 10f64.powf(-3.0 + 0.25 * k as f64)).collect();
        let splits: Vec<f64> = offsets
            .iter()
            .map(|d| {
                let m = CMatrix::from_row_slice(2, 2, &[ZERO, re(1.0), re(*d), ZERO]).unwrap();
                let ev = eigenvalues(&m).unwrap();
                (ev[0] - ev[1]).norm()
            })
            .collect();
        let nu = power_law_exponent(&offsets, &splits).unwrap();
        assert!((nu - 0.5).abs() < 1e-3, "{nu}");
    }

    #[test]
    fn underdamped_pair_shares_real_part() {
        let roots = cardano_roots(&cubic_coefficients(&at(2.0)).unwrap());
        let pair: Vec<&C64> = roots.iter().filter(|r| r.im.abs() > 1e-6).collect();
        assert_eq!(pair.len(), 2);
        assert!((pair[0].re - pair[1].re).abs() < 1e-10);
    }

    #[test]
    fn kappa_forms_agree_at_large_occupation() {
        let p = at(500.0);
        let exact = kappa_eff(&p);
        let asym = kappa_eff_asymptotic(&p);
        assert!((exact - asym).abs() / exact < 1e-3);
        let far = kappa_eff(&at(1e9));
        assert!((far - 4.5).abs() < 1e-5);
    }

    #[test]
    fn adiabatic_limits() {
        let (r22, a) = adiabatic_coherences(
            &SystemParams {
                omega_rabi: 0.0,
                ..at(3.0)
            },
            re(1.0),
        )
        .unwrap();
        assert_eq!(a, ZERO);
        assert!(r22.re < 0.0);
        let p = at(1000.0);
        let (r22, a) = adiabatic_coherences(&p, re(1.0)).unwrap();
        assert!((r22.re + 0.5).abs() < 1e-3);
        let leading = 6.0 * p.omega_rabi / (p.n_th * p.gamma20);
        assert!((a.im - leading).abs() / leading < 0.05);
    }

    #[test]
    fn adiabatic_substitution_gives_kappa() {
        let p = at(7.0).with_omega_mhz(13.0);
        let (r22, a) = adiabatic_coherences(&p, re(1.0)).unwrap();
        let rate = r22 * p.gamma21 + I * p.omega_rabi * a;
        assert!((rate.re + kappa_eff(&p)).abs() < 1e-10 * kappa_eff(&p));
        assert!(rate.im.abs() < 1e-12);
    }

    #[test]
    fn numeric_fallback_with_detuning() {
        let p = at(4.0).with_delta_mhz(3.0);
        let s = slow_eigenvalues(&p).unwrap();
        assert!(!s.analytic);
        assert_eq!(s.values.len(), 4);
        assert!(s.gap() > 0.0);
        let s0 = slow_eigenvalues(&at(4.0)).unwrap();
        assert!(s0.analytic);
        assert_eq!(s0.values.len(), 4);
    }
}
