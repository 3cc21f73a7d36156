//! Scenario dispatch and result files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use asph_core::operators::{hessian, laplacian_trace};
use asph_core::solvers::{
    rectangle_band_solution, rescale_potential, rmse, run_contaminant_benchmark, run_rectangle_benchmark,
    run_transmembrane_benchmark, ContaminantConfig, ContaminantRun, RectangleConfig, RectangleRun, TransmembraneConfig,
    TransmembraneRun, RECTANGLE_STEADY_STATE,
};
use asph_core::{
    build_neighbor_lists, compute_correction_matrices, generate_lattice, LatticeSpec, MetricsSummary, ParticleSet,
    SpatialVector, SymmetricTensor,
};

use crate::config::{Scenario, ScenarioConfig};
use crate::output::{format_value, write_cross_section, write_snapshot, write_table};

/// Outcome of one scenario run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub metrics: MetricsSummary,
    /// Every file written, metrics file included.
    pub files: Vec<PathBuf>,
    pub wall_seconds: f64,
}

pub const METRICS_FILE: &str = "metrics.txt";
pub const TIMING_FILE: &str = "timing.txt";

fn time_tag(t: f64) -> String {
    format!("{t}").replace('.', "p")
}

/// Laplacian of `x² + y²` on the unit square with spacing `dp_y` and
/// `dp_x = ratio · dp_y`.
#[derive(Clone, Debug)]
pub struct PatchResult {
    pub particles: ParticleSet,
    pub phi: Vec<f64>,
    pub rate: Vec<f64>,
    pub flagged: Vec<bool>,
    pub max_error_regular: f64,
    pub max_error_flagged: f64,
}

impl PatchResult {
    pub const EXACT: f64 = 4.0;

    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|f| **f).count()
    }

    pub fn flagged_fraction(&self) -> f64 {
        self.flagged_count() as f64 / self.particles.len() as f64
    }
}

pub fn run_patch(dp_y: f64, ratio: f64) -> Result<PatchResult> {
    let spec = LatticeSpec::new(&[0.0, 0.0], &[1.0, 1.0], &[ratio * dp_y, dp_y])?;
    let ps = generate_lattice(&spec)?;
    let nl = build_neighbor_lists(&ps);
    let b = compute_correction_matrices(&ps, &nl);
    let phi: Vec<f64> = ps.positions().iter().map(|p| p[0] * p[0] + p[1] * p[1]).collect();
    let h = hessian(&ps, &nl, &b, &phi);
    let rate = laplacian_trace(&h.values);
    let flagged: Vec<bool> = h.fallback.iter().zip(&b.singular).map(|(a, b)| *a || *b).collect();
    let (mut max_error_regular, mut max_error_flagged) = (0.0f64, 0.0f64);
    for (r, f) in rate.iter().zip(&flagged) {
        let e = (r / PatchResult::EXACT - 1.0).abs();
        if *f {
            max_error_flagged = max_error_flagged.max(e);
        } else {
            max_error_regular = max_error_regular.max(e);
        }
    }
    Ok(PatchResult { particles: ps, phi, rate, flagged, max_error_regular, max_error_flagged })
}

fn extremes(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

fn diffusion_tensor(cfg: &ScenarioConfig) -> SymmetricTensor {
    SymmetricTensor::new_2d(cfg.diffusion[0], cfg.diffusion[1], cfg.diffusion[2])
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate().map_err(anyhow::Error::msg)?;
    std::fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let start = Instant::now();
    let mut out = Outputs { dir: &cfg.out_dir, files: Vec::new() };
    let mut metrics = match cfg.scenario {
        Scenario::Patch => patch(cfg, &mut out)?,
        Scenario::Rectangle => rectangle(cfg, &mut out)?,
        Scenario::GaussianDiag | Scenario::GaussianFull => contaminant(cfg, &mut out)?,
        Scenario::AlievPanfilov2d => transmembrane(cfg, &mut out)?,
    };
    metrics.push("scenario", cfg.scenario);
    let metrics_path = out.path(METRICS_FILE);
    metrics.write(&metrics_path)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let timing_path = out.path(TIMING_FILE);
    std::fs::write(&timing_path, format!("wall_seconds = {wall_seconds:.3}\n"))
        .with_context(|| format!("writing {}", timing_path.display()))?;
    Ok(RunReport { metrics, files: out.files, wall_seconds })
}

fn patch(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<MetricsSummary> {
    let r = run_patch(cfg.dp, cfg.ratio)?;
    let exact = vec![PatchResult::EXACT; r.rate.len()];
    let flags: Vec<f64> = r.flagged.iter().map(|f| f64::from(u8::from(*f))).collect();
    let path = out.path(&format!("patch_r{}.{}", cfg.ratio, cfg.format.extension()));
    write_snapshot(&r.particles, &[("phi", &r.phi), ("dphi_dt", &r.rate), ("flagged", &flags)], cfg.format, &path)?;
    let (lo, hi) = extremes(&r.rate);
    let mut m = MetricsSummary {
        particle_count: r.particles.len(),
        dt: 0.0,
        steps: 0,
        rmse: rmse(&r.rate, &exact)?,
        min_field: lo,
        max_field: hi,
        flagged_particles: r.flagged_count(),
        extra: Vec::new(),
    };
    m.push("max_rel_error_regular", format_value(r.max_error_regular));
    m.push("max_rel_error_flagged", format_value(r.max_error_flagged));
    Ok(m)
}

fn rectangle_config(cfg: &ScenarioConfig) -> RectangleConfig {
    RectangleConfig {
        ny: cfg.ny,
        ratio: cfg.ratio,
        t_end: cfg.t_end,
        snapshot_times: cfg.snapshots.clone(),
        dt_safety: cfg.dt_safety,
        ..Default::default()
    }
}

/// Error against the analytic band solution at the last snapshot, or at
/// the final time when no snapshot was taken.
pub fn rectangle_error(run: &RectangleRun, t_end: f64) -> Result<f64> {
    Ok(match run.snapshots.iter().rfind(|s| s.time > 0.0) {
        Some(s) => run.rmse_at(s)?,
        None => rmse(run.final_field(), &run.analytic(t_end))?,
    })
}

fn rectangle(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<MetricsSummary> {
    let run = run_rectangle_benchmark(&rectangle_config(cfg))?;
    for s in &run.snapshots {
        let tag = time_tag(s.time);
        let path = out.path(&format!("snapshot_t{tag}.{}", cfg.format.extension()));
        write_snapshot(&run.particles, &[("phi", &s.values)], cfg.format, &path)?;
        write_cross_section(&run.profile(s), &out.path(&format!("profile_t{tag}.csv")))?;
    }
    let (lo, hi) = extremes(run.final_field());
    let mut m = MetricsSummary {
        particle_count: run.particles.len(),
        dt: run.dt,
        steps: run.steps,
        rmse: rectangle_error(&run, cfg.t_end)?,
        min_field: lo,
        max_field: hi,
        flagged_particles: run.flagged,
        extra: Vec::new(),
    };
    let final_vs = |target: f64| run.final_field().iter().map(|v| (v / target - 1.0).abs()).fold(0.0, f64::max);
    m.push("uniform_state", format_value(RECTANGLE_STEADY_STATE));
    m.push("max_rel_deviation_from_uniform_state", format_value(final_vs(RECTANGLE_STEADY_STATE)));
    m.push("max_rel_deviation_from_0.1", format_value(final_vs(0.1)));
    m.push("initial_mass", format_value(run.initial_mass));
    m.push("final_mass", format_value(run.final_mass));
    m.push("analytic_at_center_t_end", format_value(rectangle_band_solution(0.5, cfg.t_end)));
    Ok(m)
}

pub fn contaminant_config(cfg: &ScenarioConfig) -> ContaminantConfig {
    ContaminantConfig {
        diffusion: diffusion_tensor(cfg),
        dx: cfg.dp,
        t_init: cfg.t_init,
        t_end: cfg.t_end,
        dt_safety: cfg.dt_safety,
        snapshot_times: cfg.snapshots.clone(),
        ..ContaminantConfig::diagonal()
    }
}

/// `(Σ(t_end) − Σ(t_init)) / (2·D·Δt)` entry by entry, `(11, 12, 22)`.
/// Entries with a zero diffusion coefficient report the raw growth.
pub fn covariance_growth_ratio(run: &ContaminantRun, d: &SymmetricTensor, dt: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (k, (a, b)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
        let growth = run.final_moments.covariance.get(a, b) - run.initial.covariance.get(a, b);
        let expected = 2.0 * d.get(a, b) * dt;
        out[k] = if expected == 0.0 { growth } else { growth / expected };
    }
    out
}

fn contaminant(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<MetricsSummary> {
    let ccfg = contaminant_config(cfg);
    let run = run_contaminant_benchmark(&ccfg)?;
    for s in &run.snapshots {
        let analytic = run.analytic(s.time);
        let path = out.path(&format!("snapshot_t{}.{}", time_tag(s.time), cfg.format.extension()));
        write_snapshot(&run.particles, &[("c", &s.values), ("analytic", &analytic)], cfg.format, &path)?;
    }
    let sx = run.cross_section_x();
    let sy = run.cross_section_y();
    write_cross_section(&sx, &out.path("cross_section_y100.csv"))?;
    write_cross_section(&sy, &out.path("cross_section_x100.csv"))?;
    let (lo, hi) = extremes(run.final_field());
    let mut m = MetricsSummary {
        particle_count: run.particles.len(),
        dt: run.dt,
        steps: run.steps,
        rmse: run.rmse()?,
        min_field: lo,
        max_field: hi,
        flagged_particles: run.flagged,
        extra: Vec::new(),
    };
    let growth = covariance_growth_ratio(&run, &ccfg.diffusion, ccfg.t_end - ccfg.t_init);
    m.push("peak_rel_error_y100", format_value(ContaminantRun::peak_error(&sx)));
    m.push("peak_rel_error_x100", format_value(ContaminantRun::peak_error(&sy)));
    m.push("covariance_growth_ratio_11", format_value(growth[0]));
    m.push("covariance_growth_ratio_12", format_value(growth[1]));
    m.push("covariance_growth_ratio_22", format_value(growth[2]));
    m.push("mass_drift", format_value(run.mass_drift()));
    m.push("worst_min_over_max", format_value(run.worst_min_ratio));
    m.push("max_non_increasing", run.max_non_increasing);
    Ok(m)
}

fn transmembrane(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<MetricsSummary> {
    let tcfg = TransmembraneConfig {
        dp: cfg.dp,
        t_end: cfg.t_end,
        probe: SpatialVector::new_2d(cfg.probe[0], cfg.probe[1]),
        snapshot_times: cfg.snapshots.clone(),
        dt_safety: cfg.dt_safety,
        d_iso: cfg.diffusion[0],
        ..Default::default()
    };
    let run = run_transmembrane_benchmark(&tcfg)?;
    write_table(
        &["t", "vm", "vm_mv"],
        run.probe_series.iter().map(|(t, v)| vec![*t, *v, rescale_potential(*v)]),
        &out.path("probe.csv"),
    )?;
    for s in &run.snapshots {
        let mv: Vec<f64> = s.values.iter().map(|v| rescale_potential(*v)).collect();
        let path = out.path(&format!("snapshot_t{}.{}", time_tag(s.time), cfg.format.extension()));
        write_snapshot(&run.particles, &[("vm", &s.values), ("vm_mv", &mv)], cfg.format, &path)?;
    }
    let (peak_t, peak) = probe_peak(&run);
    let probe_pos = run.particles.position(run.probe_index);
    let mut m = MetricsSummary {
        particle_count: run.particles.len(),
        dt: run.dt,
        steps: run.steps,
        rmse: f64::NAN,
        min_field: run.vm_min,
        max_field: run.vm_max,
        flagged_particles: run.flagged,
        extra: Vec::new(),
    };
    m.push("w_min", format_value(run.w_min));
    m.push("probe_x", format_value(probe_pos[0]));
    m.push("probe_y", format_value(probe_pos[1]));
    m.push("probe_peak", format_value(peak));
    m.push("probe_peak_time", format_value(peak_t));
    m.push("probe_final", format_value(run.probe_series.last().map_or(f64::NAN, |p| p.1)));
    Ok(m)
}

pub fn probe_peak(run: &TransmembraneRun) -> (f64, f64) {
    run.probe_series.iter().fold((0.0, f64::NEG_INFINITY), |best, p| if p.1 > best.1 { *p } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_tags_are_filename_safe() {
        assert_eq!(time_tag(0.02), "0p02");
        assert_eq!(time_tag(1920.0), "1920");
    }

    #[test]
    fn coarse_patch_is_exact() {
        let r = run_patch(0.1, 2.0).unwrap();
        assert!(r.max_error_regular < 1e-6);
        assert_eq!(r.flagged_count(), 0);
    }
}
