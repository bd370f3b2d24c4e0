//! The `qbattery` command line.
//!
//! Exit codes: 0 on success, 2 on argument errors, 1 on numerical failures
//! (after writing whatever partial output exists).

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use qbattery_core::dynamics::{
    charging_metrics, default_t_max, default_time_grid, propagate_partial,
};
use qbattery_core::liouvillian::build_liouvillian;
use qbattery_core::model::{angular_from_mhz, Observables};
use qbattery_core::slow_sector::{
    cardano_roots, cubic_coefficients, kappa_eff, kappa_eff_asymptotic, locate_ep, sigma_rate,
    slow_eigenvalues, CoefficientSource,
};
use qbattery_core::spectrum::{steady_state, BlockSpectra};
use qbattery_core::{DensityMatrix, SystemParams};
use serde_json::json;

use crate::config::{ArgError, GlobalArgs, Settings};
use crate::emit::{Cell, Format, Table};
use crate::presets::{run_preset, Preset, PresetOptions, GRID};
use crate::sweep::{run_sweep, status_of, AxisSpec, Metric, SweepSpec};

#[derive(Parser, Debug)]
#[command(
    name = "qbattery",
    version,
    about = "Spectral analysis and charging dynamics of a three-level dissipative quantum battery"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Initial {
    /// |0><0|
    Ground,
    /// |1><1|
    Storage,
    /// |2><2|
    Excited,
    /// 1/3
    Mixed,
}

impl Initial {
    fn state(self) -> DensityMatrix {
        match self {
            Initial::Ground => DensityMatrix::basis(0),
            Initial::Storage => DensityMatrix::basis(1),
            Initial::Excited => DensityMatrix::basis(2),
            Initial::Mixed => DensityMatrix::maximally_mixed(),
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenvalues of the full Liouvillian and of its three blocks
    Spectrum,
    /// Steady state and its observables
    Steady,
    /// Trajectory of the state, energy and distance to the steady state
    Propagate {
        #[arg(long, value_enum, default_value_t = Initial::Ground)]
        initial: Initial,
    },
    /// Stored energy, charging time and power
    Metrics {
        #[arg(long, value_enum, default_value_t = Initial::Ground)]
        initial: Initial,
    },
    /// Cubic coefficients, Cardano roots and adiabatic rates of the slow block
    SlowSector,
    /// Exceptional point along N_th at fixed drive, or its trajectory over a drive range
    Ep {
        /// N_th search interval as lo:hi
        #[arg(long, value_parser = parse_range, default_value = "0.1:20")]
        nth_range: (f64, f64),
        /// Omega/2pi range in MHz as lo:hi; gives an EP trajectory
        #[arg(long, value_parser = parse_range)]
        omega_range: Option<(f64, f64)>,
        /// Points along --omega-range
        #[arg(long, default_value_t = 40)]
        omega_count: usize,
    },
    /// Two-dimensional parameter sweep
    Sweep {
        /// name:min:max:count[:linear|log], name one of n_th, omega_over_2pi, delta_over_2pi, epsilon
        #[arg(long)]
        axis1: AxisSpec,
        #[arg(long)]
        axis2: AxisSpec,
        /// Comma-separated metrics [default: all]
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<Metric>,
    },
    /// Named dataset (fig2a..fig8); --out names the output directory
    Preset {
        /// fig2a, fig2b, fig2c, fig2d, fig3, fig4, fig5, fig6, fig7 or fig8
        name: Preset,
        /// Points per axis of the 2-D maps
        #[arg(long, default_value_t = GRID)]
        grid: usize,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("`{s}`: expected lo:hi"))?;
    let a: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("`{a}` is not a number"))?;
    let b: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("`{b}` is not a number"))?;
    if !(a < b) {
        return Err(format!("`{s}`: need lo < hi"));
    }
    Ok((a, b))
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    Args(ArgError),
    Numerical(anyhow::Error),
}

impl From<ArgError> for Failure {
    fn from(e: ArgError) -> Self {
        Failure::Args(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Numerical(e)
    }
}

impl From<qbattery_core::Error> for Failure {
    fn from(e: qbattery_core::Error) -> Self {
        Failure::Numerical(e.into())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Numerical(e.into())
    }
}

/// Parses `argv` (including the program name), runs and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(Failure::Args(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn write_output(settings: &Settings, bytes: &[u8]) -> io::Result<()> {
    match &settings.out {
        Some(path) => fs::write(path, bytes),
        None => io::stdout().lock().write_all(bytes),
    }
}

fn emit(settings: &Settings, table: &Table) -> Result<(), Failure> {
    let mut buf = Vec::new();
    table.write(settings.format, &mut buf)?;
    write_output(settings, &buf)?;
    Ok(())
}

fn params_json(p: &SystemParams) -> serde_json::Value {
    json!({
        "gamma20_per_us": p.gamma20,
        "gamma21_per_us": p.gamma21,
        "gamma10_per_us": p.gamma10,
        "nth": p.n_th,
        "omega_over_2pi_mhz": p.omega_mhz(),
        "delta_over_2pi_mhz": p.delta_mhz(),
    })
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    let s = Settings::from_args(&cli.global)?;
    let p = s.params;
    match &cli.command {
        Command::Spectrum => spectrum(&s),
        Command::Steady => {
            let rho = steady_state(&build_liouvillian(&p)?)?;
            let obs = Observables::of(&rho, &p);
            let mut t = Table::key_value();
            t.kv("e_s_ev", obs.energy);
            t.kv("c_l1", obs.l1_coherence);
            t.kv("s_von", obs.entropy);
            t.kv("hs_norm", obs.hs_norm);
            for i in 0..3 {
                for j in 0..3 {
                    t.kv(&format!("rho{i}{j}_re"), rho.get(i, j).re);
                    t.kv(&format!("rho{i}{j}_im"), rho.get(i, j).im);
                }
            }
            emit(&s, &t)
        }
        Command::Propagate { initial } => propagate_cmd(&s, *initial),
        Command::Metrics { initial } => {
            let mut t = Table::key_value();
            let result = charging_metrics(&initial.state(), &p, s.epsilon, s.t_max);
            match &result {
                Ok(m) => {
                    t.kv("e_s_ev", m.e_s);
                    t.kv("tau_s_us", m.tau_s);
                    t.kv("p_s_ev_per_us", m.p_s);
                    t.kv("tau_gap_ref_us", m.tau_gap_ref);
                    t.kv("p_gap_ref_ev_per_us", m.p_gap_ref);
                    t.kv("epsilon", m.epsilon);
                    t.kv("overshoot", m.overshoot);
                    t.kv("status", "ok");
                }
                Err(e) => {
                    t.kv("epsilon", s.epsilon);
                    t.kv("status", status_of(e));
                }
            }
            emit(&s, &t)?;
            result.map(|_| ()).map_err(Failure::from)
        }
        Command::SlowSector => slow_sector_cmd(&s),
        Command::Ep {
            nth_range,
            omega_range,
            omega_count,
        } => ep_cmd(&s, *nth_range, *omega_range, *omega_count),
        Command::Sweep {
            axis1,
            axis2,
            metrics,
        } => {
            let spec = SweepSpec {
                axis1: *axis1,
                axis2: *axis2,
                fixed: p,
                epsilon: s.epsilon,
                t_max: s.t_max,
                metrics: if metrics.is_empty() {
                    Metric::ALL.to_vec()
                } else {
                    metrics.clone()
                },
            };
            spec.validate()
                .map_err(|m| ArgError::new("--axis1/--axis2/--metrics", m))?;
            let result = run_sweep(&spec, s.threads)?;
            match s.format {
                Format::Csv => emit(&s, &result.table())?,
                Format::Json => {
                    let text = serde_json::to_string_pretty(&result.to_json())
                        .map_err(anyhow::Error::from)?
                        + "\n";
                    write_output(&s, text.as_bytes())?;
                }
            }
            if let Some(out) = &s.out {
                let meta = json!({ "sweep": result.metadata, "wall_time_s": result.wall_time_s, "threads": s.threads });
                fs::write(
                    sidecar(out, "meta.json"),
                    serde_json::to_string_pretty(&meta).map_err(anyhow::Error::from)? + "\n",
                )?;
                if let (Format::Csv, Some(ep)) = (s.format, result.ep_table()) {
                    fs::write(sidecar(out, "ep.csv"), ep.to_csv())?;
                }
            }
            let failures = result.failures();
            if failures > 0 {
                return Err(anyhow::anyhow!(
                    "{failures} of {} grid points failed; see the status column",
                    result.rows.len()
                )
                .into());
            }
            Ok(())
        }
        Command::Preset { name, grid } => {
            if *grid < 2 {
                return Err(ArgError::new("--grid", "must be at least 2").into());
            }
            let dir = s.out.clone().unwrap_or_else(|| PathBuf::from(name.name()));
            let opts = PresetOptions {
                base: p,
                grid: *grid,
                threads: s.threads,
                format: s.format,
            };
            let report = run_preset(*name, &opts, &dir)
                .with_context(|| format!("preset {}", name.name()))?;
            for f in &report.files {
                eprintln!("wrote {}", f.display());
            }
            if report.failures > 0 {
                return Err(anyhow::anyhow!(
                    "{} grid points failed; see the status columns",
                    report.failures
                )
                .into());
            }
            Ok(())
        }
    }
}

/// `out.csv` → `out.csv.<suffix>`.
fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn spectrum(s: &Settings) -> Result<(), Failure> {
    let sop = build_liouvillian(&s.params)?;
    let spectra = BlockSpectra::compute(&sop)?;
    let mut t = Table::new(&["block", "index", "re_lambda", "im_lambda"]);
    for (name, values) in [
        ("full", &spectra.full),
        ("l5", &spectra.l5),
        ("l2_left", &spectra.l2_left),
        ("l2_right", &spectra.l2_right),
    ] {
        for (k, z) in values.iter().enumerate() {
            t.push(vec![name.into(), k.into(), z.re.into(), z.im.into()]);
        }
    }
    let gaps = spectra.gaps().ok();
    let meta = json!({
        "params": params_json(&s.params),
        "zero_modes": spectra.zero_mode_count(),
        "delta": gaps.map(|g| g.delta),
        "delta_slow": gaps.map(|g| g.delta_slow),
        "delta_l2": gaps.map(|g| g.delta_l2),
    });
    emit(s, &t.with_metadata(meta))
}

fn propagate_cmd(s: &Settings, initial: Initial) -> Result<(), Failure> {
    let p = s.params;
    let t_max = match s.t_max {
        Some(t) => t,
        None => default_t_max(&p)?,
    };
    let grid = default_time_grid(t_max, s.points)?;
    let (traj, failure) = propagate_partial(&initial.state(), &p, &grid)?;
    let mut t = Table::new(&[
        "t_us",
        "energy_ev",
        "hs_distance",
        "rho00",
        "rho11",
        "rho22",
        "rho01_re",
        "rho01_im",
        "rho02_re",
        "rho02_im",
        "rho12_re",
        "rho12_im",
        "status",
    ]);
    for (k, rho) in traj.states.iter().enumerate() {
        let mut row: Vec<Cell> = vec![
            traj.times[k].into(),
            traj.energies[k].into(),
            traj.hs_distances[k].into(),
        ];
        for i in 0..3 {
            row.push(rho.get(i, i).re.into());
        }
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            row.push(rho.get(i, j).re.into());
            row.push(rho.get(i, j).im.into());
        }
        row.push("ok".into());
        t.push(row);
    }
    if let Some(e) = &failure {
        let mut row = vec![Cell::Empty; 12];
        row.push(status_of(e).into());
        t.push(row);
    }
    emit(s, &t)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn slow_sector_cmd(s: &Settings) -> Result<(), Failure> {
    let p = s.params;
    let mut t = Table::key_value();
    let slow = slow_eigenvalues(&p)?;
    t.kv("analytic", slow.analytic);
    if slow.analytic {
        let c = cubic_coefficients(&p)?;
        t.kv("a", c.a);
        t.kv("p_coef", c.p_coef);
        t.kv("r_coef", c.r_coef);
        t.kv("p", c.p());
        t.kv("q", c.q());
        t.kv("discriminant", c.discriminant);
        t.kv(
            "coefficient_source",
            match c.source {
                CoefficientSource::ClosedForm => "closed_form",
                CoefficientSource::CharacteristicPolynomial => "characteristic_polynomial",
            },
        );
        t.kv("consistency_error", c.consistency_error);
        for (k, r) in cardano_roots(&c).iter().enumerate() {
            t.kv(&format!("root{k}_re"), r.re);
            t.kv(&format!("root{k}_im"), r.im);
        }
        t.kv("sigma_rate", sigma_rate(&p)?);
    } else {
        for (k, r) in slow.values.iter().enumerate() {
            t.kv(&format!("lambda{k}_re"), r.re);
            t.kv(&format!("lambda{k}_im"), r.im);
        }
    }
    t.kv("delta_slow", slow.gap());
    t.kv("kappa_eff", kappa_eff(&p));
    t.kv("kappa_eff_asymptotic", kappa_eff_asymptotic(&p));
    emit(s, &t)
}

fn ep_cmd(
    s: &Settings,
    nth: (f64, f64),
    omega: Option<(f64, f64)>,
    count: usize,
) -> Result<(), Failure> {
    if s.params.delta != 0.0 {
        return Err(ArgError::new("--delta", "EP search requires zero detuning").into());
    }
    if nth.0 < 0.0 {
        return Err(ArgError::new("--nth-range", "lower end must be >= 0").into());
    }
    let Some((w0, w1)) = omega else {
        let ep = locate_ep(&s.params, nth.0, nth.1)?;
        let mut t = Table::key_value();
        t.kv("omega_over_2pi_mhz", s.params.omega_mhz());
        t.kv("nth_ep", ep.n_th_ep);
        t.kv("lambda_ep", ep.lambda_ep);
        t.kv("kernel_dim", ep.kernel_dim);
        t.kv("discriminant_residual", ep.discriminant_residual);
        t.kv("sigma_min", ep.sigma_min);
        t.kv("sigma_second", ep.sigma_second);
        t.kv("sqrt_fit_exponent", ep.sqrt_fit_exponent);
        t.kv("c1", ep.c1);
        t.kv("c2", ep.c2);
        return emit(s, &t);
    };
    if count < 2 {
        return Err(ArgError::new("--omega-count", "must be at least 2").into());
    }
    let mut t = Table::new(&["omega_over_2pi_mhz", "nth_ep", "lambda_ep", "status"]);
    for k in 0..count {
        let w = w0 + (w1 - w0) * k as f64 / (count - 1) as f64;
        let mut p = s.params;
        p.omega_rabi = angular_from_mhz(w);
        match locate_ep(&p, nth.0, nth.1) {
            Ok(ep) => t.push(vec![
                w.into(),
                ep.n_th_ep.into(),
                ep.lambda_ep.into(),
                "ok".into(),
            ]),
            Err(e) => t.push(vec![
                w.into(),
                Cell::Empty,
                Cell::Empty,
                no_ep_status(&e).into(),
            ]),
        }
    }
    emit(s, &t)
}

fn no_ep_status(e: &qbattery_core::Error) -> &'static str {
    match e {
        qbattery_core::Error::NoSignChange { .. } => "no_ep_in_range",
        qbattery_core::Error::NotAnExceptionalPoint { .. } => "not_an_ep",
        other => status_of(other),
    }
}
