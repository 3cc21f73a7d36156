//! Explicit time integration, reference solutions and error metrics.

mod benchmarks;
mod electro;
mod metrics;
mod reference;

pub use benchmarks::{
    run_contaminant_benchmark, run_rectangle_benchmark, run_transmembrane_benchmark, ContaminantConfig, ContaminantRun,
    CrossSectionPoint, RectangleConfig, RectangleRun, Snapshot, TransmembraneConfig, TransmembraneRun,
};
pub use electro::{
    aliev_panfilov_rhs, rescale_potential, step_reaction, step_reaction_diffusion, AlievPanfilovParams, ElectroState,
    ReactionDiffusion, REACTION_DT_CAP,
};
pub use metrics::{field_covariance, rmse, FieldMoments, MetricsSummary};
pub use reference::{rectangle_band_solution, GaussianReference, RECTANGLE_STEADY_STATE};

use rayon::prelude::*;

use crate::error::Result;
use crate::neighbors::NeighborLists;
use crate::operators::{anisotropic_laplacian_trace, CorrectionMatrices};
use crate::particles::ParticleSet;
use crate::stencil::LaplacianStencil;
use crate::tensor::{cholesky, LowerTriangular, SpatialVector, SymmetricTensor};

/// Default fraction of the explicit stability estimate used as time step.
pub const DEFAULT_DT_SAFETY: f64 = 0.25;

/// SPD diffusion tensor with its cached Cholesky factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionTensor {
    d: SymmetricTensor,
    l: LowerTriangular,
}

impl DiffusionTensor {
    pub fn new(d: SymmetricTensor) -> Result<Self> {
        let l = cholesky(&d)?;
        Ok(DiffusionTensor { d, l })
    }

    pub fn isotropic(dim: usize, k: f64) -> Result<Self> {
        Self::new(SymmetricTensor::diagonal(&[k; 3][..dim]))
    }

    /// `d_iso·I + d_ani·f⊗f` for a unit fiber direction `f`.
    pub fn fiber(dim: usize, d_iso: f64, d_ani: f64, f: &SpatialVector) -> Result<Self> {
        let mut d = SymmetricTensor::diagonal(&[d_iso; 3][..dim]);
        for r in 0..dim {
            for c in r..dim {
                d.set(r, c, d.get(r, c) + d_ani * f[r] * f[c]);
            }
        }
        Self::new(d)
    }

    pub fn tensor(&self) -> &SymmetricTensor {
        &self.d
    }

    pub fn cholesky(&self) -> &LowerTriangular {
        &self.l
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.d.max_eigenvalue()
    }

    pub fn dim(&self) -> usize {
        self.d.dim
    }
}

/// `safety · min_i h_min,i² / λ_max(D)` with `h_min = 1/λ_max(G)`.
pub fn stable_dt(ps: &ParticleSet, d_max_eig: f64, safety: f64) -> f64 {
    let h = ps.smoothing().iter().map(|g| g.min_semi_axis()).fold(f64::INFINITY, f64::min);
    safety * h * h / d_max_eig
}

/// One forward-Euler step `c + dt·∇·(D∇c)` through the direct Hessian route.
pub fn step_diffusion(
    ps: &ParticleSet,
    nl: &NeighborLists,
    b: &CorrectionMatrices,
    field: &[f64],
    d: &DiffusionTensor,
    dt: f64,
) -> Vec<f64> {
    let rate = anisotropic_laplacian_trace(ps, nl, b, field, d);
    field.par_iter().zip(&rate).map(|(c, r)| c + dt * r).collect()
}

/// Forward-Euler diffusion through a precomputed stencil.
#[derive(Clone, Debug)]
pub struct DiffusionStepper {
    stencil: LaplacianStencil,
    rate: Vec<f64>,
}

impl DiffusionStepper {
    pub fn new(stencil: LaplacianStencil) -> Self {
        let n = stencil.len();
        DiffusionStepper { stencil, rate: vec![0.0; n] }
    }

    pub fn stencil(&self) -> &LaplacianStencil {
        &self.stencil
    }

    pub fn step(&mut self, field: &mut [f64], dt: f64) {
        self.stencil.apply(field, &mut self.rate);
        field.par_iter_mut().zip(&self.rate).for_each(|(c, r)| *c += dt * r);
    }
}

/// Advances from `t` through each stop in `stops` (ascending), shortening the
/// step that would overshoot a stop. `observe` runs at every stop.
pub(crate) fn march(
    t0: f64,
    stops: &[f64],
    dt: f64,
    mut step: impl FnMut(f64),
    mut observe: impl FnMut(usize, f64),
) -> (f64, usize) {
    let mut t = t0;
    let mut steps = 0usize;
    for (k, &stop) in stops.iter().enumerate() {
        while stop - t > 1e-9 * dt {
            let h = dt.min(stop - t);
            step(h);
            steps += 1;
            t += h;
        }
        if (stop - t).abs() <= 1e-9 * dt {
            t = stop;
        }
        observe(k, t);
    }
    (t, steps)
}
