//! Time evolution toward the steady state and the charging figures of merit
//! derived from it.

use alloc::vec::Vec;

#[allow(unused_imports)] // float methods without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{expm, vec_norm, CMatrix, C64};
use crate::liouvillian::{build_liouvillian, devectorize_operator, vectorize, DIM};
use crate::model::{energy, DensityMatrix, SystemParams, POSITIVITY_TOL};
use crate::slow_sector::linear_fit;
use crate::spectrum::{gaps, steady_state, PointAnalysis};

/// Allowed trace drift of a propagated state.
pub const TRACE_TOL: f64 = 1e-10;
/// Relative margin by which `E(t)` must exceed `E_s` to count as overshoot.
pub const OVERSHOOT_TOL: f64 = 1e-6;
/// Relative width at which threshold-crossing bisection stops.
pub const BISECTION_TOL: f64 = 1e-6;
/// Distances below this are numerical noise.
pub const DISTANCE_FLOOR: f64 = 1e-14;
/// Default horizon in units of `1/Δ`.
pub const DEFAULT_HORIZON: f64 = 100.0;
/// Default number of output times.
pub const DEFAULT_POINTS: usize = 2000;

/// States along a time grid with their energies and distances to `ρ_ss`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// eV
    pub energies: Vec<f64>,
    pub hs_distances: Vec<f64>,
    pub params: SystemParams,
    pub steady: DensityMatrix,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `2000`-style output grid on `[0, t_max]`: half of the points linear over
/// the first decade `[0, t_max/10]`, the rest log-spaced up to `t_max`.
pub fn default_time_grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument("t_max must be positive and finite"));
    }
    if points < 4 {
        return Err(Error::InvalidArgument("need at least 4 output points"));
    }
    let n_lin = points / 2;
    let n_log = points - n_lin;
    let t1 = t_max / 10.0;
    let mut t: Vec<f64> = (0..n_lin).map(|k| t1 * k as f64 / n_lin as f64).collect();
    for k in 0..n_log {
        let frac = (k + 1) as f64 / n_log as f64;
        t.push(t1 * 10f64.powf(frac));
    }
    *t.last_mut().expect("non-empty") = t_max;
    Ok(t)
}

/// `DEFAULT_HORIZON/Δ` for the given parameters.
pub fn default_t_max(p: &SystemParams) -> Result<f64> {
    Ok(DEFAULT_HORIZON / gaps(&build_liouvillian(p)?)?.delta)
}

fn to_state(v: &[C64], time: f64) -> Result<DensityMatrix> {
    let m = devectorize_operator(v)?;
    let rho = DensityMatrix::new_unchecked(core::array::from_fn(|i| {
        core::array::from_fn(|j| m[(i, j)])
    }))
    .hermitized();
    if rho
        .elements()
        .iter()
        .flatten()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::InvalidState("non-finite element"));
    }
    if (rho.trace().re - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidState("trace drifted from 1"));
    }
    let min_eigenvalue = rho.eigenvalues()[0];
    if min_eigenvalue < POSITIVITY_TOL {
        return Err(Error::PositivityViolated {
            time,
            min_eigenvalue,
        });
    }
    Ok(rho)
}

/// Propagator cache keyed on the step length; grids with a linear segment
/// reuse one exponential for all of its steps.
struct Stepper<'a> {
    l: &'a CMatrix,
    dt: f64,
    u: CMatrix,
}

impl<'a> Stepper<'a> {
    fn new(l: &'a CMatrix) -> Self {
        Stepper {
            l,
            dt: 0.0,
            u: CMatrix::identity(DIM),
        }
    }

    fn step(&mut self, v: &[C64], dt: f64) -> Result<Vec<C64>> {
        if dt == 0.0 {
            return Ok(v.to_vec());
        }
        if dt != self.dt {
            self.u = expm(&self.l.scale_real(dt))?;
            self.dt = dt;
        }
        Ok(self.u.mul_vec(v))
    }
}

/// `ρ(t_i) = exp(𝓛 t_i) ρ₀`, stepping between consecutive grid points.
pub fn propagate(rho0: &DensityMatrix, p: &SystemParams, t_grid: &[f64]) -> Result<Trajectory> {
    match propagate_partial(rho0, p, t_grid)? {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`propagate`], but a failure part-way returns the states computed so
/// far together with the error. Setup errors are still returned directly.
pub fn propagate_partial(
    rho0: &DensityMatrix,
    p: &SystemParams,
    t_grid: &[f64],
) -> Result<(Trajectory, Option<Error>)> {
    rho0.check()?;
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid"));
    }
    if t_grid[0] < 0.0 || !t_grid.iter().all(|t| t.is_finite()) {
        return Err(Error::InvalidArgument(
            "times must be finite and non-negative",
        ));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "time grid must be strictly increasing",
        ));
    }
    let sop = build_liouvillian(p)?;
    let steady = steady_state(&sop)?;
    let mut stepper = Stepper::new(sop.matrix());
    let mut v: Vec<C64> = vectorize(rho0).to_vec();
    let mut t_prev = 0.0;
    let n = t_grid.len();
    let mut traj = Trajectory {
        times: Vec::with_capacity(n),
        states: Vec::with_capacity(n),
        energies: Vec::with_capacity(n),
        hs_distances: Vec::with_capacity(n),
        params: *sop.params(),
        steady,
    };
    for &t in t_grid {
        let rho = match stepper
            .step(&v, t - t_prev)
            .and_then(|next| to_state(&next, t))
        {
            Ok(rho) => rho,
            Err(e) => return Ok((traj, Some(e))),
        };
        v = vectorize(&rho).to_vec();
        traj.times.push(t);
        traj.energies.push(energy(&rho, &traj.params));
        traj.hs_distances.push(rho.hs_distance(&traj.steady));
        traj.states.push(rho);
        t_prev = t;
    }
    Ok((traj, None))
}

fn distance(v: &[C64], vss: &[C64]) -> f64 {
    v.iter()
        .zip(vss)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn energy_of(v: &[C64], p: &SystemParams) -> f64 {
    p.e1 * v[crate::liouvillian::index(1, 1)].re + p.e2 * v[crate::liouvillian::index(2, 2)].re
}

/// Bisects `‖exp(𝓛 s) v_a − ρ_ss‖ = ε` for `s ∈ (0, h]`, given that the
/// distance at `s = 0` is at least `ε` and at `s = h` below it.
fn bisect_crossing(
    l: &CMatrix,
    v_a: &[C64],
    vss: &[C64],
    t_a: f64,
    h: f64,
    eps: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, h);
    while hi - lo > BISECTION_TOL * (t_a + hi) {
        let mid = 0.5 * (lo + hi);
        let v = expm(&l.scale_real(mid))?.mul_vec(v_a);
        if distance(&v, vss) < eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(t_a + hi)
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument("epsilon must be positive"));
    }
    Ok(())
}

/// First grid time with `‖ρ(t) − ρ_ss‖ < ε`, refined by bisection inside the
/// bracketing interval. Non-monotone distances are handled by taking the
/// first crossing.
pub fn relaxation_time_from_trajectory(traj: &Trajectory, eps: f64) -> Result<f64> {
    check_epsilon(eps)?;
    let k = traj
        .hs_distances
        .iter()
        .position(|d| *d < eps)
        .ok_or(Error::NotConverged {
            t_max: *traj.times.last().unwrap_or(&0.0),
        })?;
    if k == 0 {
        return Ok(traj.times[0]);
    }
    let sop = build_liouvillian(&traj.params)?;
    let vss = vectorize(&traj.steady);
    let h = traj.times[k] - traj.times[k - 1];
    bisect_crossing(
        sop.matrix(),
        &vectorize(&traj.states[k - 1]),
        &vss,
        traj.times[k - 1],
        h,
        eps,
    )
}

/// Outcome of scanning a charging run at fine uniform resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxationScan {
    /// `None` if the threshold was not reached by `t_max`.
    pub tau: Option<f64>,
    /// Largest energy seen on the scan grid, eV.
    pub max_energy: f64,
    pub t_max: f64,
    pub step: f64,
}

/// Cap on the number of scan steps for very slow relaxation.
const MAX_SCAN_STEPS: f64 = 200_000.0;
const MIN_SCAN_STEPS: f64 = 4000.0;
/// Scan steps per shortest oscillation period present in the spectrum.
const STEPS_PER_PERIOD: f64 = 16.0;

/// Steps `exp(𝓛h)` on a uniform grid with `h` resolving the fastest
/// oscillation, recording the first threshold crossing and the peak energy.
/// Stops at the crossing unless `to_end` is set.
fn scan(
    a: &PointAnalysis,
    rho0: &DensityMatrix,
    eps: f64,
    t_max: f64,
    to_end: bool,
) -> Result<RelaxationScan> {
    let l = a.sop.matrix();
    let p = a.sop.params();
    let max_im = a.max_frequency();
    let mut h = t_max / MIN_SCAN_STEPS;
    if max_im > 0.0 {
        h = h.min(2.0 * core::f64::consts::PI / (STEPS_PER_PERIOD * max_im));
    }
    h = h.max(t_max / MAX_SCAN_STEPS);
    let u = expm(&l.scale_real(h))?;
    let vss = vectorize(&a.steady);
    let mut v = vectorize(rho0).to_vec();
    let mut max_energy = energy_of(&v, p);
    let mut tau = None;
    if distance(&v, &vss) < eps {
        tau = Some(0.0);
    }
    let steps = (t_max / h).ceil() as usize;
    let mut last = 0;
    for k in 1..=steps {
        if tau.is_some() && !to_end {
            break;
        }
        let next = u.mul_vec(&v);
        max_energy = max_energy.max(energy_of(&next, p));
        if tau.is_none() && distance(&next, &vss) < eps {
            let t_a = (k - 1) as f64 * h;
            tau = Some(bisect_crossing(l, &v, &vss, t_a, h, eps)?);
        }
        v = next;
        last = k;
    }
    Ok(RelaxationScan {
        tau,
        max_energy,
        t_max: last as f64 * h,
        step: h,
    })
}

/// `τ_s(ε)` for a run started in `rho0`. `t_max` defaults to `100/Δ`.
pub fn relaxation_time(
    rho0: &DensityMatrix,
    p: &SystemParams,
    eps: f64,
    t_max: Option<f64>,
) -> Result<f64> {
    check_epsilon(eps)?;
    rho0.check()?;
    let a = PointAnalysis::new(p)?;
    if rho0.hs_distance(&a.steady) < eps {
        return Ok(0.0);
    }
    let t_max = t_max.unwrap_or(DEFAULT_HORIZON / a.gaps.delta);
    let s = scan(&a, rho0, eps, t_max, false)?;
    s.tau.ok_or(Error::NotConverged { t_max: s.t_max })
}

/// Steady-state energy, charging time and power of a run from `rho0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargingMetrics {
    /// eV
    pub e_s: f64,
    /// μs
    pub tau_s: f64,
    /// eV/μs; zero when `tau_s` is zero.
    pub p_s: f64,
    /// `ln(1/ε)/Δ`, μs
    pub tau_gap_ref: f64,
    /// `E_s·Δ/ln(1/ε)`, eV/μs
    pub p_gap_ref: f64,
    pub epsilon: f64,
    /// Always `false` when overshoot tracking is switched off.
    pub overshoot: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargingOptions {
    /// Scan horizon; `100/Δ` when unset.
    pub t_max: Option<f64>,
    /// Keep scanning past `τ_s` up to `t_max` to find the energy maximum.
    pub track_overshoot: bool,
}

impl Default for ChargingOptions {
    fn default() -> Self {
        ChargingOptions {
            t_max: None,
            track_overshoot: true,
        }
    }
}

/// Charging metrics; `t_max` defaults to `100/Δ`.
pub fn charging_metrics(
    rho0: &DensityMatrix,
    p: &SystemParams,
    eps: f64,
    t_max: Option<f64>,
) -> Result<ChargingMetrics> {
    let opts = ChargingOptions {
        t_max,
        ..ChargingOptions::default()
    };
    charging_metrics_for(&PointAnalysis::new(p)?, rho0, eps, &opts)
}

/// Charging metrics reusing a prepared [`PointAnalysis`].
pub fn charging_metrics_for(
    a: &PointAnalysis,
    rho0: &DensityMatrix,
    eps: f64,
    opts: &ChargingOptions,
) -> Result<ChargingMetrics> {
    check_epsilon(eps)?;
    rho0.check()?;
    let p = a.sop.params();
    let e_s = energy(&a.steady, p);
    let delta = a.gaps.delta;
    let log_eps = (1.0 / eps).ln();
    let threshold = e_s * (1.0 + OVERSHOOT_TOL);
    let mut m = ChargingMetrics {
        e_s,
        tau_s: 0.0,
        p_s: 0.0,
        tau_gap_ref: log_eps / delta,
        p_gap_ref: e_s * delta / log_eps,
        epsilon: eps,
        overshoot: opts.track_overshoot && energy(rho0, p) > threshold,
    };
    if rho0.hs_distance(&a.steady) < eps {
        return Ok(m);
    }
    let t_max = opts.t_max.unwrap_or(DEFAULT_HORIZON / delta);
    let s = scan(a, rho0, eps, t_max, opts.track_overshoot)?;
    m.tau_s = s.tau.ok_or(Error::NotConverged { t_max: s.t_max })?;
    if m.tau_s > 0.0 {
        m.p_s = e_s / m.tau_s;
    }
    m.overshoot = opts.track_overshoot && s.max_energy > threshold;
    Ok(m)
}

/// Local maxima of `ys`, refined by a parabola through `ln y` at each peak.
/// Crests of `logs` after removing the linear trend `slope·t + intercept`,
/// refined by a parabola through each crest and its neighbours. Returned
/// values are back on the original (un-detrended) log scale.
fn envelope_peaks(ts: &[f64], logs: &[f64], slope: f64, intercept: f64) -> (Vec<f64>, Vec<f64>) {
    let trend = |t: f64| slope * t + intercept;
    let z: Vec<f64> = ts.iter().zip(logs).map(|(t, l)| l - trend(*t)).collect();
    let mut pt = Vec::new();
    let mut pl = Vec::new();
    for i in 1..z.len().saturating_sub(1) {
        if z[i] > z[i - 1] && z[i] >= z[i + 1] {
            let (a, b, c) = (z[i - 1], z[i], z[i + 1]);
            let curv = a - 2.0 * b + c;
            let h = 0.5 * (ts[i + 1] - ts[i - 1]);
            let (t, zp) = if curv < 0.0 {
                let s = 0.5 * (a - c) / curv;
                (ts[i] + s * h, b - 0.25 * (a - c) * s)
            } else {
                (ts[i], b)
            };
            pt.push(t);
            pl.push(zp + trend(t));
        }
    }
    (pt, pl)
}

/// Decay rate `−d ln d/dt` by least squares. When the detrended log-distance
/// has at least two crests (oscillating approach) the fit runs through the
/// crests only, i.e. along the peak envelope.
pub fn fit_decay_rate(times: &[f64], distances: &[f64]) -> Result<f64> {
    if times.len() != distances.len() || times.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples"));
    }
    if distances.iter().any(|d| !(*d >= DISTANCE_FLOOR)) {
        return Err(Error::NumericalFloor);
    }
    let logs: Vec<f64> = distances.iter().map(|y| y.ln()).collect();
    let (slope, intercept) = linear_fit(times, &logs);
    let (pt, pl) = envelope_peaks(times, &logs, slope, intercept);
    if pt.len() >= 2 {
        Ok(-linear_fit(&pt, &pl).0)
    } else {
        Ok(-slope)
    }
}

/// Fitted late-time decay rate over `[t_end/2, t_end]`.
pub fn decay_envelope_fit(traj: &Trajectory, p: &SystemParams) -> Result<f64> {
    let t_end = *traj
        .times
        .last()
        .ok_or(Error::InvalidArgument("empty trajectory"))?;
    let delta_slow = gaps(&build_liouvillian(p)?)?.delta_slow;
    let required = 3.0 / delta_slow;
    let span = 0.5 * t_end;
    if span < required {
        return Err(Error::WindowTooShort { span, required });
    }
    let start = traj.times.partition_point(|t| *t < 0.5 * t_end);
    fit_decay_rate(&traj.times[start..], &traj.hs_distances[start..])
}

/// Uniform grid of `points` times on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, points: usize) -> Vec<f64> {
    let n = points.max(2) - 1;
    (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
}

/// HS distance of a vectorized state to a reference state.
pub fn vec_distance(v: &[C64], rho: &DensityMatrix) -> f64 {
    let w = vectorize(rho);
    let diff: Vec<C64> = v.iter().zip(w.iter()).map(|(a, b)| a - b).collect();
    vec_norm(&diff)
}
