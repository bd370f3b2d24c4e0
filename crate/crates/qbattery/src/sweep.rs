//! Two-dimensional parameter sweeps evaluated on a thread pool and gathered
//! in grid order.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use qbattery_core::dynamics::{charging_metrics_for, ChargingOptions};
use qbattery_core::model::{l1_coherence, von_neumann_entropy};
use qbattery_core::slow_sector::locate_ep;
use qbattery_core::spectrum::PointAnalysis;
use qbattery_core::{DensityMatrix, Error, SystemParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::emit::{Cell, Table};

/// Column layout of sweep CSV output.
pub const CSV_HEADER: &str = "nth,omega_over_2pi_mhz,delta_over_2pi_mhz,epsilon,delta,delta_slow,delta_l2,e_s_ev,tau_s_us,p_s_ev_per_us,c_l1,s_von,overshoot,status";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    NTh,
    #[serde(rename = "omega_over_2pi")]
    OmegaOver2Pi,
    #[serde(rename = "delta_over_2pi")]
    DeltaOver2Pi,
    Epsilon,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::NTh => "n_th",
            Param::OmegaOver2Pi => "omega_over_2pi",
            Param::DeltaOver2Pi => "delta_over_2pi",
            Param::Epsilon => "epsilon",
        }
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "n_th" | "nth" => Ok(Param::NTh),
            "omega_over_2pi" | "omega" => Ok(Param::OmegaOver2Pi),
            "delta_over_2pi" | "delta" => Ok(Param::DeltaOver2Pi),
            "epsilon" => Ok(Param::Epsilon),
            _ => Err(format!(
                "unknown sweep parameter `{s}` (expected n_th, omega_over_2pi, delta_over_2pi or epsilon)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl AxisSpec {
    pub fn linear(param: Param, min: f64, max: f64, count: usize) -> Self {
        AxisSpec {
            param,
            min,
            max,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(param: Param, min: f64, max: f64, count: usize) -> Self {
        AxisSpec {
            param,
            min,
            max,
            count,
            spacing: Spacing::Log,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let name = self.param.name();
        if self.count == 0 {
            return Err(format!("axis {name}: count must be at least 1"));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(format!("axis {name}: bounds must be finite"));
        }
        if self.count == 1 && self.min != self.max {
            return Err(format!("axis {name}: a single point needs min = max"));
        }
        if self.count > 1 && !(self.min < self.max) {
            return Err(format!("axis {name}: need min < max"));
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return Err(format!("axis {name}: log spacing needs min > 0"));
        }
        Ok(())
    }

    /// Grid values, ascending, with the end points exact.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let n = self.count - 1;
        let mut v: Vec<f64> = (0..=n)
            .map(|k| {
                let f = k as f64 / n as f64;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * f,
                    Spacing::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * f).exp(),
                }
            })
            .collect();
        v[0] = self.min;
        v[n] = self.max;
        v
    }
}

/// `name:min:max:count[:linear|log]`.
impl FromStr for AxisSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(format!("`{s}`: expected name:min:max:count[:linear|log]"));
        }
        let num = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| format!("`{x}` is not a number"))
        };
        let spacing = match parts.get(4) {
            None | Some(&"linear") => Spacing::Linear,
            Some(&"log") => Spacing::Log,
            Some(other) => return Err(format!("unknown spacing `{other}`")),
        };
        let axis = AxisSpec {
            param: parts[0].parse()?,
            min: num(parts[1])?,
            max: num(parts[2])?,
            count: parts[3]
                .parse()
                .map_err(|_| format!("`{}` is not a count", parts[3]))?,
            spacing,
        };
        axis.validate()?;
        Ok(axis)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Delta,
    DeltaSlow,
    DeltaL2,
    ES,
    TauS,
    PS,
    CL1,
    SVon,
    Overshoot,
    LambdaSlowReal,
    LambdaSlowImag,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::Delta,
        Metric::DeltaSlow,
        Metric::DeltaL2,
        Metric::ES,
        Metric::TauS,
        Metric::PS,
        Metric::CL1,
        Metric::SVon,
        Metric::Overshoot,
        Metric::LambdaSlowReal,
        Metric::LambdaSlowImag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Delta => "delta",
            Metric::DeltaSlow => "delta_slow",
            Metric::DeltaL2 => "delta_l2",
            Metric::ES => "e_s",
            Metric::TauS => "tau_s",
            Metric::PS => "p_s",
            Metric::CL1 => "c_l1",
            Metric::SVon => "s_von",
            Metric::Overshoot => "overshoot",
            Metric::LambdaSlowReal => "lambda_slow_real",
            Metric::LambdaSlowImag => "lambda_slow_imag",
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Metric::ALL
            .into_iter()
            .find(|m| {
                m.name()
                    .replace('_', "")
                    .eq_ignore_ascii_case(&s.replace('_', ""))
            })
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    /// Values of every parameter that is not swept.
    pub fixed: SystemParams,
    pub epsilon: f64,
    /// Scan horizon for `τ_s`; `100/Δ` per point when unset.
    pub t_max: Option<f64>,
    pub metrics: Vec<Metric>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), String> {
        self.axis1.validate()?;
        self.axis2.validate()?;
        if self.axis1.param == self.axis2.param {
            return Err("the two axes must sweep different parameters".to_string());
        }
        if self.metrics.is_empty() {
            return Err("no metrics requested".to_string());
        }
        if !(self.epsilon > 0.0) {
            return Err("epsilon must be > 0".to_string());
        }
        Ok(())
    }

    fn point(&self, v1: f64, v2: f64) -> (SystemParams, f64) {
        let mut p = self.fixed;
        let mut eps = self.epsilon;
        for (axis, v) in [(self.axis1, v1), (self.axis2, v2)] {
            match axis.param {
                Param::NTh => p.n_th = v,
                Param::OmegaOver2Pi => p = p.with_omega_mhz(v),
                Param::DeltaOver2Pi => p = p.with_delta_mhz(v),
                Param::Epsilon => eps = v,
            }
        }
        (p, eps)
    }

    /// Whether an EP curve is produced: `N_th` and `Ω` swept at `δ = 0`.
    pub fn has_ep_curve(&self) -> bool {
        let params = [self.axis1.param, self.axis2.param];
        params.contains(&Param::NTh)
            && params.contains(&Param::OmegaOver2Pi)
            && self.fixed.delta == 0.0
    }
}

/// One grid point. Metric fields are `None` when not requested or when the
/// evaluation failed before reaching them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub nth: f64,
    pub omega_over_2pi_mhz: f64,
    pub delta_over_2pi_mhz: f64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub delta_slow: Option<f64>,
    pub delta_l2: Option<f64>,
    pub e_s_ev: Option<f64>,
    pub tau_s_us: Option<f64>,
    pub p_s_ev_per_us: Option<f64>,
    pub c_l1: Option<f64>,
    pub s_von: Option<f64>,
    pub overshoot: Option<bool>,
    pub lambda_slow_real: Option<f64>,
    pub lambda_slow_imag: Option<f64>,
    pub status: String,
}

impl Row {
    fn empty(p: &SystemParams, eps: f64) -> Self {
        Row {
            nth: p.n_th,
            omega_over_2pi_mhz: p.omega_mhz(),
            delta_over_2pi_mhz: p.delta_mhz(),
            epsilon: eps,
            delta: None,
            delta_slow: None,
            delta_l2: None,
            e_s_ev: None,
            tau_s_us: None,
            p_s_ev_per_us: None,
            c_l1: None,
            s_von: None,
            overshoot: None,
            lambda_slow_real: None,
            lambda_slow_imag: None,
            status: "ok".to_string(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// Cells in [`CSV_HEADER`] order.
    pub fn csv_cells(&self) -> Vec<Cell> {
        vec![
            self.nth.into(),
            self.omega_over_2pi_mhz.into(),
            self.delta_over_2pi_mhz.into(),
            self.epsilon.into(),
            self.delta.into(),
            self.delta_slow.into(),
            self.delta_l2.into(),
            self.e_s_ev.into(),
            self.tau_s_us.into(),
            self.p_s_ev_per_us.into(),
            self.c_l1.into(),
            self.s_von.into(),
            self.overshoot.into(),
            self.status.clone().into(),
        ]
    }
}

/// Short machine-readable label for a failure.
pub fn status_of(e: &Error) -> &'static str {
    match e {
        Error::NotConverged { .. } => "not_converged",
        Error::DegenerateSteadyState { .. } => "degenerate_steady_state",
        Error::InvalidParams { .. } => "invalid_params",
        Error::PositivityViolated { .. } => "positivity_violated",
        Error::EigNoConvergence { .. } => "eig_no_convergence",
        _ => "numerical_error",
    }
}

/// All requested metrics at one parameter point.
pub fn evaluate_point(p: &SystemParams, eps: f64, metrics: &[Metric], t_max: Option<f64>) -> Row {
    let mut row = Row::empty(p, eps);
    let a = match PointAnalysis::new(p) {
        Ok(a) => a,
        Err(e) => {
            row.status = status_of(&e).to_string();
            return row;
        }
    };
    let wants = |m| metrics.contains(&m);
    let g = a.gaps;
    let slow = a.spectra.dominant_slow();
    row.delta = wants(Metric::Delta).then_some(g.delta);
    row.delta_slow = wants(Metric::DeltaSlow).then_some(g.delta_slow);
    row.delta_l2 = wants(Metric::DeltaL2).then_some(g.delta_l2);
    row.lambda_slow_real = wants(Metric::LambdaSlowReal).then_some(slow.re);
    row.lambda_slow_imag = wants(Metric::LambdaSlowImag).then_some(slow.im);
    row.c_l1 = wants(Metric::CL1).then(|| l1_coherence(&a.steady));
    row.s_von = wants(Metric::SVon).then(|| von_neumann_entropy(&a.steady));
    let charging = wants(Metric::TauS) || wants(Metric::PS) || wants(Metric::Overshoot);
    row.e_s_ev = wants(Metric::ES).then(|| qbattery_core::model::energy(&a.steady, p));
    if charging {
        let opts = ChargingOptions {
            t_max,
            track_overshoot: wants(Metric::Overshoot),
        };
        match charging_metrics_for(&a, &DensityMatrix::basis(0), eps, &opts) {
            Ok(m) => {
                row.tau_s_us = wants(Metric::TauS).then_some(m.tau_s);
                row.p_s_ev_per_us = wants(Metric::PS).then_some(m.p_s);
                row.overshoot = wants(Metric::Overshoot).then_some(m.overshoot);
            }
            Err(e) => row.status = status_of(&e).to_string(),
        }
    }
    row
}

/// An EP location in axis order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpPoint {
    pub axis1: f64,
    pub axis2: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub rows: Vec<Row>,
    pub ep_curve: Option<Vec<EpPoint>>,
    /// Resolved inputs; excludes anything run-dependent so that output files
    /// are reproducible.
    pub metadata: Value,
    pub wall_time_s: f64,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    pub fn table(&self) -> Table {
        let header: Vec<&str> = CSV_HEADER.split(',').collect();
        let mut t = Table::new(&header);
        for r in &self.rows {
            t.push(r.csv_cells());
        }
        t.with_metadata(self.metadata.clone())
    }

    /// JSON records carry every row field, including the slow eigenvalue.
    pub fn to_json(&self) -> Value {
        json!({
            "metadata": self.metadata,
            "records": self.rows,
            "ep_curve": self.ep_curve,
        })
    }

    pub fn ep_table(&self) -> Option<Table> {
        let curve = self.ep_curve.as_ref()?;
        let m = &self.metadata;
        let h1 = format!("{}_ep", m["axis1"]["param"].as_str().unwrap_or("axis1"));
        let h2 = m["axis2"]["param"].as_str().unwrap_or("axis2").to_string();
        let mut t = Table::new(&[h1, h2]);
        for e in curve {
            t.push(vec![e.axis1.into(), e.axis2.into()]);
        }
        Some(t)
    }
}

/// Everything needed to reproduce a sweep, minus the wall time.
pub fn metadata(spec: &SweepSpec) -> Value {
    let p = &spec.fixed;
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "axis1": spec.axis1,
        "axis2": spec.axis2,
        "epsilon": spec.epsilon,
        "t_max_us": spec.t_max,
        "metrics": spec.metrics,
        "initial_state": "ground",
        "fixed": {
            "gamma20_per_us": p.gamma20,
            "gamma21_per_us": p.gamma21,
            "gamma10_per_us": p.gamma10,
            "nth": p.n_th,
            "omega_over_2pi_mhz": p.omega_mhz(),
            "delta_over_2pi_mhz": p.delta_mhz(),
            "e1_ev": p.e1,
            "e2_ev": p.e2,
        },
    })
}

fn ep_curve(spec: &SweepSpec) -> Vec<EpPoint> {
    let (nth_axis, omega_axis, nth_first) = if spec.axis1.param == Param::NTh {
        (spec.axis1, spec.axis2, true)
    } else {
        (spec.axis2, spec.axis1, false)
    };
    let located: Vec<Option<f64>> = omega_axis
        .values()
        .par_iter()
        .map(|&w| {
            let p = spec.fixed.with_omega_mhz(w);
            locate_ep(&p, nth_axis.min, nth_axis.max)
                .ok()
                .map(|ep| ep.n_th_ep)
        })
        .collect();
    omega_axis
        .values()
        .into_iter()
        .zip(located)
        .filter_map(|(w, n)| {
            n.map(|n| {
                if nth_first {
                    EpPoint { axis1: n, axis2: w }
                } else {
                    EpPoint { axis1: w, axis2: n }
                }
            })
        })
        .collect()
}

/// Evaluates every grid point on `threads` workers. Row order is axis 1
/// outer, axis 2 inner, both ascending, whatever the thread count.
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> anyhow::Result<SweepResult> {
    spec.validate().map_err(anyhow::Error::msg)?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()?;
    let v1 = spec.axis1.values();
    let v2 = spec.axis2.values();
    let grid: Vec<(f64, f64)> = v1
        .iter()
        .flat_map(|&a| v2.iter().map(move |&b| (a, b)))
        .collect();
    let (rows, ep) = pool.install(|| {
        let rows: Vec<Row> = grid
            .par_iter()
            .map(|&(a, b)| {
                let (p, eps) = spec.point(a, b);
                evaluate_point(&p, eps, &spec.metrics, spec.t_max)
            })
            .collect();
        let ep = spec.has_ep_curve().then(|| ep_curve(spec));
        (rows, ep)
    });
    Ok(SweepResult {
        rows,
        ep_curve: ep,
        metadata: metadata(spec),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a: AxisSpec = "nth:0.1:20:5".parse().unwrap();
        assert_eq!(a, AxisSpec::linear(Param::NTh, 0.1, 20.0, 5));
        let b: AxisSpec = "epsilon:1e-8:1e-4:5:log".parse().unwrap();
        let v = b.values();
        assert_eq!(v[0], 1e-8);
        assert_eq!(v[4], 1e-4);
        assert!((v[1] / 1e-7 - 1.0).abs() < 1e-12);
        assert!("nth:1:0:5".parse::<AxisSpec>().is_err());
        assert!("nth:0:1:1".parse::<AxisSpec>().is_err());
        assert!("epsilon:0:1:3:log".parse::<AxisSpec>().is_err());
        assert!("bogus:0:1:3".parse::<AxisSpec>().is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
    }

    #[test]
    fn point_mapping() {
        let spec = SweepSpec {
            axis1: AxisSpec::linear(Param::DeltaOver2Pi, -1.0, 1.0, 2),
            axis2: AxisSpec::log(Param::Epsilon, 1e-6, 1e-4, 3),
            fixed: SystemParams::ca40(),
            epsilon: 1e-8,
            t_max: None,
            metrics: vec![Metric::Delta],
        };
        let (p, eps) = spec.point(-1.0, 1e-5);
        assert!((p.delta_mhz() + 1.0).abs() < 1e-12);
        assert_eq!(eps, 1e-5);
        assert!(!spec.has_ep_curve());
    }

    #[test]
    fn degenerate_point_is_flagged_not_fatal() {
        let p = SystemParams {
            n_th: 0.0,
            omega_rabi: 0.0,
            gamma10: 0.0,
            ..SystemParams::ca40()
        };
        let row = evaluate_point(&p, 1e-8, &Metric::ALL, None);
        assert_eq!(row.status, "degenerate_steady_state");
        assert_eq!(row.delta, None);
    }
}
