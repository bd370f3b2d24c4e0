//! Named datasets (`fig2a` … `fig8`) on fixed grids.
//!
//! Axis ranges: `N_th ∈ [0.1, 20]`, `Ω/2π ∈ [1, 40] MHz`,
//! `δ/2π ∈ [−20, 20] MHz`, with 101 points per axis unless overridden. Line cuts use `Ω/2π = 20 MHz`, `δ = 0`, and the charging
//! threshold is `ε = 1e-8` unless a preset varies it.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::Context;
use qbattery_core::dynamics::propagate;
use qbattery_core::liouvillian::build_liouvillian;
use qbattery_core::model::energy;
use qbattery_core::slow_sector::locate_ep;
use qbattery_core::spectrum::{BlockSpectra, PointAnalysis, ZERO_MODE_TOL};
use qbattery_core::{DensityMatrix, SystemParams, C64};
use serde_json::{json, Value};

use crate::emit::{Format, Table};
use crate::sweep::{run_sweep, AxisSpec, Metric, Param, SweepResult, SweepSpec};

pub const NTH_RANGE: (f64, f64) = (0.1, 20.0);
pub const OMEGA_RANGE: (f64, f64) = (1.0, 40.0);
pub const DELTA_RANGE: (f64, f64) = (-20.0, 20.0);
pub const GRID: usize = 101;
/// `N_th` points at spacing 0.05 over [`NTH_RANGE`].
pub const FINE_NTH_COUNT: usize = 399;
pub const LINE_OMEGA_MHZ: f64 = 20.0;
pub const PRESET_EPSILON: f64 = 1e-8;
/// Occupations traced in the time-domain presets.
pub const HIGHLIGHT_NTH: [f64; 5] = [1.0, 2.0, 4.8, 8.0, 16.0];
pub const FIG5_EPSILON: (f64, f64, usize) = (1e-8, 1e-4, 5);
pub const FIG7_EPSILON: [f64; 4] = [1e-4, 1e-5, 1e-6, 1e-7];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl Preset {
    pub const ALL: [Preset; 10] = [
        Preset::Fig2a,
        Preset::Fig2b,
        Preset::Fig2c,
        Preset::Fig2d,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
        Preset::Fig8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig2c => "fig2c",
            Preset::Fig2d => "fig2d",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                format!(
                    "unknown preset `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Clone, Debug)]
pub struct PresetOptions {
    /// Rates and level energies; drive, detuning and occupation are set per
    /// preset.
    pub base: SystemParams,
    /// Points per axis for the 2-D maps.
    pub grid: usize,
    pub threads: usize,
    pub format: Format,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions {
            base: SystemParams::ca40(),
            grid: GRID,
            threads: 1,
            format: Format::Csv,
        }
    }
}

fn line_params(base: &SystemParams) -> SystemParams {
    base.with_omega_mhz(LINE_OMEGA_MHZ).with_delta_mhz(0.0)
}

fn nth_axis(count: usize) -> AxisSpec {
    AxisSpec::linear(Param::NTh, NTH_RANGE.0, NTH_RANGE.1, count)
}

/// `(N_th, Ω)` map at `δ = 0`.
pub fn plane_spec(
    base: &SystemParams,
    grid: usize,
    metrics: Vec<Metric>,
    epsilon: f64,
) -> SweepSpec {
    SweepSpec {
        axis1: nth_axis(grid),
        axis2: AxisSpec::linear(Param::OmegaOver2Pi, OMEGA_RANGE.0, OMEGA_RANGE.1, grid),
        fixed: base.with_delta_mhz(0.0),
        epsilon,
        t_max: None,
        metrics,
    }
}

pub fn fig6_spec(base: &SystemParams, grid: usize) -> SweepSpec {
    plane_spec(
        base,
        grid,
        vec![
            Metric::PS,
            Metric::ES,
            Metric::CL1,
            Metric::SVon,
            Metric::TauS,
        ],
        PRESET_EPSILON,
    )
}

pub fn fig7_spec(base: &SystemParams, grid: usize, epsilon: f64) -> SweepSpec {
    plane_spec(base, grid, vec![Metric::TauS], epsilon)
}

pub fn fig8_spec(base: &SystemParams, grid: usize) -> SweepSpec {
    SweepSpec {
        axis1: nth_axis(grid),
        axis2: AxisSpec::linear(Param::DeltaOver2Pi, DELTA_RANGE.0, DELTA_RANGE.1, grid),
        fixed: base.with_omega_mhz(LINE_OMEGA_MHZ),
        epsilon: PRESET_EPSILON,
        t_max: None,
        metrics: vec![Metric::DeltaSlow, Metric::TauS, Metric::PS, Metric::ES],
    }
}

pub fn fig5_spec(base: &SystemParams, grid: usize) -> SweepSpec {
    SweepSpec {
        axis1: nth_axis(grid),
        axis2: AxisSpec::log(
            Param::Epsilon,
            FIG5_EPSILON.0,
            FIG5_EPSILON.1,
            FIG5_EPSILON.2,
        ),
        fixed: line_params(base),
        epsilon: PRESET_EPSILON,
        t_max: None,
        metrics: vec![
            Metric::Delta,
            Metric::DeltaSlow,
            Metric::ES,
            Metric::TauS,
            Metric::PS,
        ],
    }
}

/// Files written by a preset.
#[derive(Clone, Debug, Default)]
pub struct PresetReport {
    pub files: Vec<PathBuf>,
    /// Grid points whose evaluation failed.
    pub failures: usize,
}

struct Writer<'a> {
    dir: &'a Path,
    format: Format,
    report: PresetReport,
}

impl Writer<'_> {
    fn table(&mut self, stem: &str, table: &Table) -> anyhow::Result<()> {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let path = self.dir.join(format!("{stem}.{ext}"));
        let file =
            fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        table.write(self.format, std::io::BufWriter::new(file))?;
        self.report.files.push(path);
        Ok(())
    }

    fn meta(&mut self, stem: &str, meta: &Value) -> anyhow::Result<()> {
        let path = self.dir.join(format!("{stem}.meta.json"));
        fs::write(&path, serde_json::to_string_pretty(meta)? + "\n")?;
        self.report.files.push(path);
        Ok(())
    }

    fn sweep(&mut self, stem: &str, result: &SweepResult, note: &str) -> anyhow::Result<()> {
        self.report.failures += result.failures();
        self.table(stem, &result.table())?;
        if let Some(ep) = result.ep_table() {
            self.table(&format!("{stem}_ep"), &ep)?;
        }
        let meta = json!({
            "preset": stem,
            "grid": note,
            "sweep": result.metadata,
            "wall_time_s": result.wall_time_s,
        });
        self.meta(stem, &meta)
    }
}

/// Runs `preset`, writing its files into `dir` (created if missing).
pub fn run_preset(
    preset: Preset,
    opts: &PresetOptions,
    dir: &Path,
) -> anyhow::Result<PresetReport> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut w = Writer {
        dir,
        format: opts.format,
        report: PresetReport::default(),
    };
    let base = &opts.base;
    let name = preset.name();
    let map_note = format!(
        "{g}x{g}: n_th linear [{}, {}], omega_over_2pi linear [{}, {}] MHz, delta = 0",
        NTH_RANGE.0,
        NTH_RANGE.1,
        OMEGA_RANGE.0,
        OMEGA_RANGE.1,
        g = opts.grid
    );
    match preset {
        Preset::Fig2a => {
            let start = Instant::now();
            let (table, ep) = fig2a_table(base)?;
            w.table(name, &table)?;
            w.meta(
                name,
                &json!({
                    "preset": name,
                    "grid": format!("n_th linear [{}, {}], {FINE_NTH_COUNT} points; omega_over_2pi = {LINE_OMEGA_MHZ} MHz, delta = 0", NTH_RANGE.0, NTH_RANGE.1),
                    "nth_ep": ep,
                    "wall_time_s": start.elapsed().as_secs_f64(),
                }),
            )?;
        }
        Preset::Fig2b | Preset::Fig2c | Preset::Fig2d => {
            let metric = match preset {
                Preset::Fig2b => Metric::Delta,
                Preset::Fig2c => Metric::DeltaSlow,
                _ => Metric::DeltaL2,
            };
            let spec = plane_spec(base, opts.grid, vec![metric], PRESET_EPSILON);
            w.sweep(name, &run_sweep(&spec, opts.threads)?, &map_note)?;
        }
        Preset::Fig3 => fig3(base, &mut w)?,
        Preset::Fig4 => fig4(base, opts.grid, &mut w)?,
        Preset::Fig5 => {
            let result = run_sweep(&fig5_spec(base, opts.grid), opts.threads)?;
            let note = format!(
                "n_th linear [{}, {}], {} points; epsilon log [{:e}, {:e}], {} points; omega_over_2pi = {LINE_OMEGA_MHZ} MHz, delta = 0",
                NTH_RANGE.0, NTH_RANGE.1, opts.grid, FIG5_EPSILON.0, FIG5_EPSILON.1, FIG5_EPSILON.2
            );
            w.sweep(name, &result, &note)?;
            w.table("fig5_rescaled", &fig5_rescaled(&result))?;
        }
        Preset::Fig6 => {
            w.sweep(
                name,
                &run_sweep(&fig6_spec(base, opts.grid), opts.threads)?,
                &map_note,
            )?;
        }
        Preset::Fig7 => {
            for eps in FIG7_EPSILON {
                let stem = format!("fig7_eps{eps:.0e}");
                w.sweep(
                    &stem,
                    &run_sweep(&fig7_spec(base, opts.grid, eps), opts.threads)?,
                    &map_note,
                )?;
            }
        }
        Preset::Fig8 => {
            let note = format!(
                "{g}x{g}: n_th linear [{}, {}], delta_over_2pi linear [{}, {}] MHz, omega_over_2pi = {LINE_OMEGA_MHZ} MHz",
                NTH_RANGE.0,
                NTH_RANGE.1,
                DELTA_RANGE.0,
                DELTA_RANGE.1,
                g = opts.grid
            );
            w.sweep(
                name,
                &run_sweep(&fig8_spec(base, opts.grid), opts.threads)?,
                &note,
            )?;
        }
    }
    Ok(w.report)
}

fn nonzero(values: &[C64]) -> Vec<C64> {
    values
        .iter()
        .copied()
        .filter(|z| z.norm() >= ZERO_MODE_TOL)
        .collect()
}

/// Nonzero eigenvalues of each block along `N_th` at the line-cut drive.
fn fig2a_table(base: &SystemParams) -> anyhow::Result<(Table, Option<f64>)> {
    let p0 = line_params(base);
    let mut t = Table::new(&["nth", "block", "mode", "re_lambda", "im_lambda"]);
    for n in nth_axis(FINE_NTH_COUNT).values() {
        let s = BlockSpectra::compute(&build_liouvillian(&p0.with_n_th(n))?)?;
        for (block, values) in [
            ("l5", nonzero(&s.l5)),
            ("l2_left", s.l2_left),
            ("l2_right", s.l2_right),
        ] {
            for (k, z) in values.iter().enumerate() {
                t.push(vec![
                    n.into(),
                    block.into(),
                    k.into(),
                    z.re.into(),
                    z.im.into(),
                ]);
            }
        }
    }
    let ep = locate_ep(&p0, NTH_RANGE.0, NTH_RANGE.1)
        .ok()
        .map(|e| e.n_th_ep);
    Ok((t, ep))
}

fn uniform(t_max: f64, points: usize) -> Vec<f64> {
    qbattery_core::dynamics::uniform_grid(t_max, points)
}

/// Normalized energy curves at the highlighted occupations and the slow gap
/// along `N_th` for the inset.
fn fig3(base: &SystemParams, w: &mut Writer<'_>) -> anyhow::Result<()> {
    let start = Instant::now();
    let p0 = line_params(base);
    let mut slowest = f64::INFINITY;
    for n in HIGHLIGHT_NTH {
        slowest = slowest.min(PointAnalysis::new(&p0.with_n_th(n))?.gaps.delta);
    }
    let t_end = 20.0 / slowest;
    let times = uniform(t_end, 1001);
    let mut curves = Table::new(&["nth", "t_us", "energy_ev", "e_over_es"]);
    for n in HIGHLIGHT_NTH {
        let p = p0.with_n_th(n);
        let traj = propagate(&DensityMatrix::basis(0), &p, &times)?;
        let e_s = energy(&traj.steady, &p);
        for (t, e) in traj.times.iter().zip(&traj.energies) {
            curves.push(vec![n.into(), (*t).into(), (*e).into(), (e / e_s).into()]);
        }
    }
    w.table("fig3_energy", &curves)?;
    let mut inset = Table::new(&["nth", "delta_slow", "highlighted"]);
    let mut grid = nth_axis(FINE_NTH_COUNT).values();
    grid.extend(HIGHLIGHT_NTH);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    for n in grid {
        let g = PointAnalysis::new(&p0.with_n_th(n))?.gaps;
        inset.push(vec![
            n.into(),
            g.delta_slow.into(),
            HIGHLIGHT_NTH.contains(&n).into(),
        ]);
    }
    w.table("fig3_inset", &inset)?;
    let ep = locate_ep(&p0, NTH_RANGE.0, NTH_RANGE.1)
        .ok()
        .map(|e| e.n_th_ep);
    w.meta(
        "fig3",
        &json!({
            "preset": "fig3",
            "nth_values": HIGHLIGHT_NTH,
            "time_grid": format!("uniform [0, {t_end}] us, 1001 points (20 / smallest gap)"),
            "inset_grid": format!("n_th linear [{}, {}], {FINE_NTH_COUNT} points plus highlighted values", NTH_RANGE.0, NTH_RANGE.1),
            "omega_over_2pi_mhz": LINE_OMEGA_MHZ,
            "delta_over_2pi_mhz": 0.0,
            "nth_ep": ep,
            "wall_time_s": start.elapsed().as_secs_f64(),
        }),
    )
}

/// Distance to the steady state versus time and `N_th`, with the
/// `exp(−Δ_slow t)` reference.
fn fig4(base: &SystemParams, grid: usize, w: &mut Writer<'_>) -> anyhow::Result<()> {
    let start = Instant::now();
    let p0 = line_params(base);
    let header = ["nth", "t_us", "hs_distance", "slow_reference"];
    let map_t_end = 0.3;
    let map_times = uniform(map_t_end, 301);
    let mut map = Table::new(&header);
    for n in nth_axis(grid).values() {
        let p = p0.with_n_th(n);
        let slow = PointAnalysis::new(&p)?.gaps.delta_slow;
        let traj = propagate(&DensityMatrix::basis(0), &p, &map_times)?;
        for (t, d) in traj.times.iter().zip(&traj.hs_distances) {
            map.push(vec![
                n.into(),
                (*t).into(),
                (*d).into(),
                (-slow * t).exp().into(),
            ]);
        }
    }
    w.table("fig4_map", &map)?;
    let mut cuts = Table::new(&header);
    for n in HIGHLIGHT_NTH {
        let p = p0.with_n_th(n);
        let slow = PointAnalysis::new(&p)?.gaps.delta_slow;
        let traj = propagate(&DensityMatrix::basis(0), &p, &uniform(25.0 / slow, 1001))?;
        for (t, d) in traj.times.iter().zip(&traj.hs_distances) {
            cuts.push(vec![
                n.into(),
                (*t).into(),
                (*d).into(),
                (-slow * t).exp().into(),
            ]);
        }
    }
    w.table("fig4_cuts", &cuts)?;
    let ep = locate_ep(&p0, NTH_RANGE.0, NTH_RANGE.1)
        .ok()
        .map(|e| e.n_th_ep);
    w.meta(
        "fig4",
        &json!({
            "preset": "fig4",
            "map_grid": format!("n_th linear [{}, {}], {grid} points; t uniform [0, {map_t_end}] us, 301 points", NTH_RANGE.0, NTH_RANGE.1),
            "cuts": format!("n_th in {HIGHLIGHT_NTH:?}; t uniform [0, 25 / delta_slow], 1001 points"),
            "omega_over_2pi_mhz": LINE_OMEGA_MHZ,
            "nth_ep": ep,
            "wall_time_s": start.elapsed().as_secs_f64(),
        }),
    )
}

/// `τ_s/ln(1/ε)` and `P_s·ln(1/ε)` next to their gap references.
fn fig5_rescaled(result: &SweepResult) -> Table {
    let mut t = Table::new(&[
        "nth",
        "epsilon",
        "tau_s_over_ln_inv_eps_us",
        "p_s_times_ln_inv_eps_ev_per_us",
        "inv_delta_us",
        "e_s_delta_ev_per_us",
        "tau_gap_ref_us",
        "p_gap_ref_ev_per_us",
    ]);
    for r in &result.rows {
        let l = (1.0 / r.epsilon).ln();
        let inv_delta = r.delta.map(|d| 1.0 / d);
        let e_delta = r.e_s_ev.zip(r.delta).map(|(e, d)| e * d);
        t.push(vec![
            r.nth.into(),
            r.epsilon.into(),
            r.tau_s_us.map(|x| x / l).into(),
            r.p_s_ev_per_us.map(|x| x * l).into(),
            inv_delta.into(),
            e_delta.into(),
            inv_delta.map(|x| x * l).into(),
            e_delta.map(|x| x / l).into(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("fig9".parse::<Preset>().is_err());
    }

    #[test]
    fn fine_axis_has_requested_spacing() {
        let v = nth_axis(FINE_NTH_COUNT).values();
        assert!((v[1] - v[0] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn fig7_stems() {
        assert_eq!(format!("fig7_eps{:.0e}", 1e-4), "fig7_eps1e-4");
    }
}
