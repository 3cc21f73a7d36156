//! End-to-end benchmark problems on regular lattices.
//!
//! All time-dependent runs impose zero-flux walls through mirror images
//! (see [`crate::neighbors::build_neighbor_lists_mirrored`]) and step with a
//! precomputed stencil.

use crate::error::{Error, Result};
use crate::neighbors::{build_neighbor_lists_mirrored, MirrorBox};
use crate::operators::compute_correction_matrices;
use crate::particles::{generate_lattice, LatticeSpec, ParticleSet};
use crate::solvers::electro::{AlievPanfilovParams, ElectroState, ReactionDiffusion, REACTION_DT_CAP};
use crate::solvers::metrics::{field_covariance, rmse, FieldMoments};
use crate::solvers::reference::{rectangle_band_solution, GaussianReference, RECTANGLE_STEADY_STATE};
use crate::solvers::{march, stable_dt, DiffusionStepper, DiffusionTensor, DEFAULT_DT_SAFETY};
use crate::stencil::LaplacianStencil;
use crate::tensor::{SpatialVector, SymmetricTensor};

/// Field values captured at one output time.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossSectionPoint {
    pub coordinate: f64,
    pub numeric: f64,
    pub analytic: f64,
}

fn sorted_stops(times: &[f64], t_start: f64, t_end: f64) -> Vec<f64> {
    let mut stops: Vec<f64> = times.iter().copied().filter(|t| *t >= t_start && *t <= t_end).collect();
    stops.push(t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops
}

/// Indices of the particle row/column closest to `value` along `axis`,
/// ordered by the other coordinate. Ties go to the lower line.
fn line_through(ps: &ParticleSet, axis: usize, value: f64) -> Vec<usize> {
    let gap = ps.positions().iter().map(|p| (p[axis] - value).abs()).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * gap.max(value.abs()).max(f64::MIN_POSITIVE);
    let best =
        ps.positions().iter().map(|p| p[axis]).filter(|c| (c - value).abs() <= gap + tol).fold(f64::INFINITY, f64::min);
    let other = 1 - axis;
    let mut idx: Vec<usize> = (0..ps.len()).filter(|&i| ps.position(i)[axis] == best).collect();
    idx.sort_by(|&a, &b| ps.position(a)[other].total_cmp(&ps.position(b)[other]));
    idx
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Strip `[0, 1] × [0, 0.1]` with a unit band in the middle.
#[derive(Clone, Debug, PartialEq)]
pub struct RectangleConfig {
    pub ny: usize,
    pub ratio: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub dt_safety: f64,
    pub smoothing_ratio: f64,
}

impl Default for RectangleConfig {
    fn default() -> Self {
        RectangleConfig {
            ny: 20,
            ratio: 4.0,
            t_end: 2.0,
            snapshot_times: vec![0.0, 0.02, 0.04, 0.2],
            dt_safety: DEFAULT_DT_SAFETY,
            smoothing_ratio: crate::kernel::DEFAULT_SMOOTHING_RATIO,
        }
    }
}

impl RectangleConfig {
    pub const LENGTH: f64 = 1.0;
    pub const WIDTH: f64 = 0.1;
}

#[derive(Clone, Debug)]
pub struct RectangleRun {
    /// Final state in the field `phi`.
    pub particles: ParticleSet,
    pub dt: f64,
    pub steps: usize,
    pub flagged: usize,
    pub snapshots: Vec<Snapshot>,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// Particle row nearest the strip's mid-line, ordered by x.
    pub profile_row: Vec<usize>,
}

impl RectangleRun {
    pub fn final_field(&self) -> &[f64] {
        self.particles.field("phi").expect("rectangle runs store phi")
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.time - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    /// Analytic band solution at every particle.
    pub fn analytic(&self, t: f64) -> Vec<f64> {
        self.particles.positions().iter().map(|p| rectangle_band_solution(p[0], t)).collect()
    }

    pub fn rmse_at(&self, snapshot: &Snapshot) -> Result<f64> {
        rmse(&snapshot.values, &self.analytic(snapshot.time))
    }

    /// Largest relative deviation of the final field from the uniform state.
    pub fn steady_deviation(&self) -> f64 {
        self.final_field().iter().map(|v| (v / RECTANGLE_STEADY_STATE - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn profile(&self, snapshot: &Snapshot) -> Vec<CrossSectionPoint> {
        self.profile_row
            .iter()
            .map(|&i| {
                let x = self.particles.position(i)[0];
                CrossSectionPoint {
                    coordinate: x,
                    numeric: snapshot.values[i],
                    analytic: rectangle_band_solution(x, snapshot.time),
                }
            })
            .collect()
    }
}

pub fn run_rectangle_benchmark(cfg: &RectangleConfig) -> Result<RectangleRun> {
    if cfg.ny < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 rows, got {}", cfg.ny)));
    }
    check_positive("t_end", cfg.t_end)?;
    check_positive("dt_safety", cfg.dt_safety)?;
    let spec = LatticeSpec::anisotropic_2d(RectangleConfig::LENGTH, RectangleConfig::WIDTH, cfg.ny, cfg.ratio)?
        .with_smoothing_ratio(cfg.smoothing_ratio);
    let mut ps = generate_lattice(&spec)?;
    let walls = MirrorBox::new(&spec.lower[..2], &spec.upper[..2]);
    let nl = build_neighbor_lists_mirrored(&ps, &walls);
    let b = compute_correction_matrices(&ps, &nl);
    let d = DiffusionTensor::isotropic(2, 1.0)?;
    let mut stepper = DiffusionStepper::new(LaplacianStencil::uniform(&ps, &nl, &b, d.tensor()));
    let flagged = stepper.stencil().flagged_count() + b.flagged_count();
    let dt = stable_dt(&ps, d.max_eigenvalue(), cfg.dt_safety);

    let mut phi: Vec<f64> =
        ps.positions().iter().map(|p| if (0.4..=0.6).contains(&p[0]) { 1.0 } else { 0.0 }).collect();
    let initial_mass = ps.integrate(&phi);
    let stops = sorted_stops(&cfg.snapshot_times, 0.0, cfg.t_end);
    let wanted = |t: f64| cfg.snapshot_times.iter().any(|s| (s - t).abs() <= 1e-12 * t.abs().max(1.0));
    let mut snapshots = Vec::new();
    let phi_cell = std::cell::RefCell::new(&mut phi);
    let (_, steps) = march(
        0.0,
        &stops,
        dt,
        |h| stepper.step(phi_cell.borrow_mut().as_mut_slice(), h),
        |_, t| {
            if wanted(t) {
                snapshots.push(Snapshot { time: t, values: phi_cell.borrow().to_vec() });
            }
        },
    );
    let profile_row = line_through(&ps, 1, 0.5 * RectangleConfig::WIDTH);
    let final_mass = ps.integrate(&phi);
    ps.set_field("phi", phi)?;
    Ok(RectangleRun { particles: ps, dt, steps, flagged, snapshots, initial_mass, final_mass, profile_row })
}

/// Point-source release on a `200 m × 200 m` square, started from the
/// analytic solution at `t_init`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContaminantConfig {
    pub diffusion: SymmetricTensor,
    pub dx: f64,
    pub t_init: f64,
    pub t_end: f64,
    pub dt_safety: f64,
    pub snapshot_times: Vec<f64>,
    pub smoothing_ratio: f64,
}

impl ContaminantConfig {
    pub const LENGTH: f64 = 200.0;

    pub fn diagonal() -> Self {
        Self::with_tensor(SymmetricTensor::diagonal(&[0.1, 0.01]))
    }

    pub fn full() -> Self {
        Self::with_tensor(SymmetricTensor::new_2d(0.1, 0.03, 0.03))
    }

    fn with_tensor(diffusion: SymmetricTensor) -> Self {
        ContaminantConfig {
            diffusion,
            dx: 1.0,
            t_init: 120.0,
            t_end: 1920.0,
            dt_safety: DEFAULT_DT_SAFETY,
            snapshot_times: vec![120.0, 1920.0],
            smoothing_ratio: crate::kernel::DEFAULT_SMOOTHING_RATIO,
        }
    }

    pub fn center() -> SpatialVector {
        SpatialVector::new_2d(0.5 * Self::LENGTH, 0.5 * Self::LENGTH)
    }
}

#[derive(Clone, Debug)]
pub struct ContaminantRun {
    /// Final state in the field `c`.
    pub particles: ParticleSet,
    pub reference: GaussianReference,
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
    pub flagged: usize,
    pub snapshots: Vec<Snapshot>,
    pub initial: FieldMoments,
    pub final_moments: FieldMoments,
    pub initial_max: f64,
    /// Smallest `min c / max c` seen over all steps.
    pub worst_min_ratio: f64,
    /// Whether `max c` never increased from one step to the next.
    pub max_non_increasing: bool,
}

impl ContaminantRun {
    pub fn final_field(&self) -> &[f64] {
        self.particles.field("c").expect("contaminant runs store c")
    }

    pub fn analytic(&self, t: f64) -> Vec<f64> {
        self.particles.positions().iter().map(|p| self.reference.value(p, t)).collect()
    }

    pub fn rmse(&self) -> Result<f64> {
        rmse(self.final_field(), &self.analytic(self.t_end))
    }

    fn section(&self, axis: usize) -> Vec<CrossSectionPoint> {
        let c = self.final_field();
        line_through(&self.particles, axis, ContaminantConfig::center()[axis])
            .into_iter()
            .map(|i| {
                let p = self.particles.position(i);
                CrossSectionPoint {
                    coordinate: p[1 - axis],
                    numeric: c[i],
                    analytic: self.reference.value(&p, self.t_end),
                }
            })
            .collect()
    }

    /// Final profile along x through the row nearest `y = 100 m`.
    pub fn cross_section_x(&self) -> Vec<CrossSectionPoint> {
        self.section(1)
    }

    /// Final profile along y through the column nearest `x = 100 m`.
    pub fn cross_section_y(&self) -> Vec<CrossSectionPoint> {
        self.section(0)
    }

    /// Relative difference of the numeric and analytic maxima along a section.
    pub fn peak_error(section: &[CrossSectionPoint]) -> f64 {
        let numeric = section.iter().map(|p| p.numeric).fold(f64::NEG_INFINITY, f64::max);
        let analytic = section.iter().map(|p| p.analytic).fold(f64::NEG_INFINITY, f64::max);
        (numeric - analytic).abs() / analytic
    }

    pub fn mass_drift(&self) -> f64 {
        (self.final_moments.mass - self.initial.mass).abs() / self.initial.mass
    }
}

pub fn run_contaminant_benchmark(cfg: &ContaminantConfig) -> Result<ContaminantRun> {
    check_positive("dx", cfg.dx)?;
    check_positive("t_init", cfg.t_init)?;
    check_positive("dt_safety", cfg.dt_safety)?;
    if !(cfg.t_end >= cfg.t_init) {
        return Err(Error::InvalidParameter("t_end must not precede t_init".into()));
    }
    let d = DiffusionTensor::new(cfg.diffusion)?;
    let l = ContaminantConfig::LENGTH;
    let cells = l / cfg.dx;
    if (cells - cells.round()).abs() > 1e-9 * cells {
        return Err(Error::InvalidLattice(format!("spacing {} does not divide {l}", cfg.dx)));
    }
    let spec = LatticeSpec::new(&[0.0, 0.0], &[l, l], &[cfg.dx, cfg.dx])?.with_smoothing_ratio(cfg.smoothing_ratio);
    let mut ps = generate_lattice(&spec)?;
    let walls = MirrorBox::new(&[0.0, 0.0], &[l, l]);
    let nl = build_neighbor_lists_mirrored(&ps, &walls);
    let b = compute_correction_matrices(&ps, &nl);
    let mut stepper = DiffusionStepper::new(LaplacianStencil::uniform(&ps, &nl, &b, d.tensor()));
    let flagged = stepper.stencil().flagged_count() + b.flagged_count();
    let dt = stable_dt(&ps, d.max_eigenvalue(), cfg.dt_safety);
    let reference = GaussianReference::new(d, ContaminantConfig::center(), cfg.t_init);

    let mut c: Vec<f64> = ps.positions().iter().map(|p| reference.value(p, cfg.t_init)).collect();
    let initial = field_covariance(&ps, &c)?;
    let extremes =
        |c: &[f64]| c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let (lo0, initial_max) = extremes(&c);
    let mut worst_min_ratio = lo0 / initial_max;
    let mut last_max = initial_max;
    let mut max_non_increasing = true;
    let stops = sorted_stops(&cfg.snapshot_times, cfg.t_init, cfg.t_end);
    let wanted = |t: f64| cfg.snapshot_times.iter().any(|s| (s - t).abs() <= 1e-12 * t.abs().max(1.0));
    let mut snapshots = Vec::new();
    let field = std::cell::RefCell::new(&mut c);
    let (_, steps) = march(
        cfg.t_init,
        &stops,
        dt,
        |h| {
            let mut c = field.borrow_mut();
            stepper.step(c.as_mut_slice(), h);
            let (lo, hi) = extremes(c.as_slice());
            worst_min_ratio = worst_min_ratio.min(lo / hi);
            max_non_increasing &= hi <= last_max;
            last_max = hi;
        },
        |_, t| {
            if wanted(t) {
                snapshots.push(Snapshot { time: t, values: field.borrow().to_vec() });
            }
        },
    );
    let final_moments = field_covariance(&ps, &c)?;
    ps.set_field("c", c)?;
    Ok(ContaminantRun {
        particles: ps,
        reference,
        t_end: cfg.t_end,
        dt,
        steps,
        flagged,
        snapshots,
        initial,
        final_moments,
        initial_max,
        worst_min_ratio,
        max_non_increasing,
    })
}

/// Excitation spreading from the `(1, 0)` corner of the unit square.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmembraneConfig {
    pub dp: f64,
    pub t_end: f64,
    pub probe: SpatialVector,
    pub snapshot_times: Vec<f64>,
    /// Spacing of the recorded probe samples.
    pub probe_interval: f64,
    pub dt_safety: f64,
    pub params: AlievPanfilovParams,
    pub d_iso: f64,
    pub d_ani: f64,
    pub fiber: SpatialVector,
    pub smoothing_ratio: f64,
}

impl Default for TransmembraneConfig {
    fn default() -> Self {
        TransmembraneConfig {
            dp: 0.01,
            t_end: 16.0,
            probe: SpatialVector::new_2d(0.3, 0.7),
            snapshot_times: vec![0.0, 0.5, 2.5, 7.0, 10.0, 14.0],
            probe_interval: 0.01,
            dt_safety: DEFAULT_DT_SAFETY,
            params: AlievPanfilovParams::default(),
            d_iso: 1.0,
            d_ani: 0.0,
            fiber: SpatialVector::new_2d(1.0, 0.0),
            smoothing_ratio: crate::kernel::DEFAULT_SMOOTHING_RATIO,
        }
    }
}

/// Initial potential `exp(−((x−1)² + y²)/0.25)`.
pub fn transmembrane_initial_potential(p: &SpatialVector) -> f64 {
    (-((p[0] - 1.0).powi(2) + p[1] * p[1]) / 0.25).exp()
}

#[derive(Clone, Debug)]
pub struct TransmembraneRun {
    /// Final state in the fields `vm` and `w`.
    pub particles: ParticleSet,
    pub probe_index: usize,
    /// `(t, V_m)` at the probe particle.
    pub probe_series: Vec<(f64, f64)>,
    pub snapshots: Vec<Snapshot>,
    pub vm_min: f64,
    pub vm_max: f64,
    pub w_min: f64,
    pub dt: f64,
    pub steps: usize,
    pub flagged: usize,
}

pub fn run_transmembrane_benchmark(cfg: &TransmembraneConfig) -> Result<TransmembraneRun> {
    check_positive("dp", cfg.dp)?;
    check_positive("t_end", cfg.t_end)?;
    check_positive("probe_interval", cfg.probe_interval)?;
    let spec = LatticeSpec::new(&[0.0, 0.0], &[1.0, 1.0], &[cfg.dp, cfg.dp])?.with_smoothing_ratio(cfg.smoothing_ratio);
    let mut ps = generate_lattice(&spec)?;
    let walls = MirrorBox::new(&[0.0, 0.0], &[1.0, 1.0]);
    let nl = build_neighbor_lists_mirrored(&ps, &walls);
    let b = compute_correction_matrices(&ps, &nl);
    let vm: Vec<f64> = ps.positions().iter().map(transmembrane_initial_potential).collect();
    let mut state = ElectroState::new(vm, vec![0.0; ps.len()], cfg.d_iso)?;
    if cfg.d_ani != 0.0 {
        let f = cfg.fiber * (1.0 / cfg.fiber.norm());
        state = state.with_fibers(cfg.d_ani, vec![f; ps.len()])?;
    }
    let mut solver = ReactionDiffusion::new(&ps, &nl, &b, &state, cfg.params)?;
    let flagged = solver.stencil().flagged_count() + b.flagged_count();
    let dt = stable_dt(&ps, state.max_conductivity(2), cfg.dt_safety).min(REACTION_DT_CAP);
    let probe_index = ps.nearest(&cfg.probe).ok_or(Error::EmptyDomain { axis: 0 })?;

    let n_probe = (cfg.t_end / cfg.probe_interval).round() as usize;
    let mut stops: Vec<f64> =
        (0..=n_probe).map(|k| k as f64 * cfg.probe_interval).filter(|t| *t <= cfg.t_end).collect();
    stops.extend(cfg.snapshot_times.iter().copied().filter(|t| *t >= 0.0 && *t <= cfg.t_end));
    stops.push(cfg.t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * dt);

    let wanted = |t: f64| cfg.snapshot_times.iter().any(|s| (s - t).abs() <= 1e-9 * dt);
    let mut probe_series = Vec::with_capacity(stops.len());
    let mut snapshots = Vec::new();
    let (mut vm_min, mut vm_max, mut w_min) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    let mut track = |s: &ElectroState| {
        for (v, w) in s.vm.iter().zip(&s.w) {
            vm_min = vm_min.min(*v);
            vm_max = vm_max.max(*v);
            w_min = w_min.min(*w);
        }
    };
    track(&state);
    let cell = std::cell::RefCell::new(&mut state);
    let (_, steps) = march(
        0.0,
        &stops,
        dt,
        |h| {
            let mut s = cell.borrow_mut();
            solver.step(&mut s, h);
            track(&s);
        },
        |_, t| {
            let s = cell.borrow();
            probe_series.push((t, s.vm[probe_index]));
            if wanted(t) {
                snapshots.push(Snapshot { time: t, values: s.vm.clone() });
            }
        },
    );
    ps.set_field("vm", state.vm)?;
    ps.set_field("w", state.w)?;
    Ok(TransmembraneRun {
        particles: ps,
        probe_index,
        probe_series,
        snapshots,
        vm_min,
        vm_max,
        w_min,
        dt,
        steps,
        flagged,
    })
}
