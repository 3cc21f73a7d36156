//! Aliev–Panfilov kinetics coupled to anisotropic diffusion.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::neighbors::NeighborLists;
use crate::operators::CorrectionMatrices;
use crate::particles::ParticleSet;
use crate::solvers::DiffusionTensor;
use crate::stencil::LaplacianStencil;
use crate::tensor::{SpatialVector, SymmetricTensor};

/// Largest reaction sub-step, in nondimensional time.
pub const REACTION_DT_CAP: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlievPanfilovParams {
    pub k: f64,
    pub a: f64,
    pub b: f64,
    pub eps0: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl Default for AlievPanfilovParams {
    fn default() -> Self {
        AlievPanfilovParams { k: 8.0, a: 0.15, b: 0.15, eps0: 0.034, mu1: 0.2, mu2: 0.3 }
    }
}

impl AlievPanfilovParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.k, self.a, self.b, self.eps0, self.mu1, self.mu2];
        if all.iter().any(|v| !v.is_finite()) || !(self.mu2 > 0.0) {
            return Err(Error::InvalidParameter(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Ionic current and gate rate `(I_ion, dw/dt)` at `(V, w)`.
pub fn aliev_panfilov_rhs(v: f64, w: f64, p: &AlievPanfilovParams) -> (f64, f64) {
    let i_ion = -p.k * v * (v - p.a) * (v - 1.0) - w * v;
    let eps = p.eps0 + p.mu1 * w / (p.mu2 + v);
    let dw = eps * (-p.k * v * (v - p.b - 1.0) - w);
    (i_ion, dw)
}

/// Potential in millivolts, `100·V − 80`.
pub fn rescale_potential(vm: f64) -> f64 {
    100.0 * vm - 80.0
}

/// Transmembrane potential, gate variable and conduction parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ElectroState {
    pub vm: Vec<f64>,
    pub w: Vec<f64>,
    pub cm: f64,
    pub d_iso: f64,
    pub d_ani: f64,
    /// Unit fiber direction per particle; required when `d_ani ≠ 0`.
    pub fibers: Option<Vec<SpatialVector>>,
}

impl ElectroState {
    pub fn new(vm: Vec<f64>, w: Vec<f64>, d_iso: f64) -> Result<Self> {
        if vm.len() != w.len() {
            return Err(Error::LengthMismatch { left: vm.len(), right: w.len() });
        }
        Ok(ElectroState { vm, w, cm: 1.0, d_iso, d_ani: 0.0, fibers: None })
    }

    pub fn with_fibers(mut self, d_ani: f64, fibers: Vec<SpatialVector>) -> Result<Self> {
        if fibers.len() != self.vm.len() {
            return Err(Error::LengthMismatch { left: self.vm.len(), right: fibers.len() });
        }
        if let Some(f) = fibers.iter().find(|f| (f.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::InvalidParameter(format!("fiber {f:?} is not unit length")));
        }
        self.d_ani = d_ani;
        self.fibers = Some(fibers);
        Ok(self)
    }

    /// Conductivity `d_iso·I + d_ani·f_i⊗f_i` at particle `i`.
    pub fn conductivity(&self, dim: usize, i: usize) -> SymmetricTensor {
        let mut d = SymmetricTensor::diagonal(&[self.d_iso; 3][..dim]);
        if let Some(f) = self.fibers.as_ref().map(|f| f[i]) {
            for r in 0..dim {
                for c in r..dim {
                    d.set(r, c, d.get(r, c) + self.d_ani * f[r] * f[c]);
                }
            }
        }
        d
    }

    /// Largest conductivity eigenvalue over all particles.
    pub fn max_conductivity(&self, dim: usize) -> f64 {
        if self.fibers.is_none() {
            return self.d_iso;
        }
        (0..self.vm.len()).map(|i| self.conductivity(dim, i).max_eigenvalue()).fold(0.0, f64::max)
    }
}

/// Explicit reaction sub-step of length `dt` for every particle.
pub fn step_reaction(state: &mut ElectroState, params: &AlievPanfilovParams, dt: f64) {
    let cm = state.cm;
    state.vm.par_iter_mut().zip(state.w.par_iter_mut()).for_each(|(v, w)| {
        let (i_ion, dw) = aliev_panfilov_rhs(*v, *w, params);
        *v += dt * i_ion / cm;
        *w += dt * dw;
    });
}

/// Strang-split step: half reaction, full diffusion, half reaction.
#[derive(Clone, Debug)]
pub struct ReactionDiffusion {
    stencil: LaplacianStencil,
    params: AlievPanfilovParams,
    rate: Vec<f64>,
}

impl ReactionDiffusion {
    pub fn new(
        ps: &ParticleSet,
        nl: &NeighborLists,
        b: &CorrectionMatrices,
        state: &ElectroState,
        params: AlievPanfilovParams,
    ) -> Result<Self> {
        params.validate()?;
        for i in 0..ps.len() {
            let d = state.conductivity(ps.dim(), i);
            if !d.is_finite() || d.min_eigenvalue() < -1e-12 * d.max_eigenvalue().abs() {
                DiffusionTensor::new(d)?;
            }
        }
        let stencil = LaplacianStencil::assemble(ps, nl, b, |i| state.conductivity(ps.dim(), i));
        Ok(ReactionDiffusion { rate: vec![0.0; ps.len()], stencil, params })
    }

    pub fn stencil(&self) -> &LaplacianStencil {
        &self.stencil
    }

    pub fn params(&self) -> &AlievPanfilovParams {
        &self.params
    }

    pub fn step(&mut self, state: &mut ElectroState, dt: f64) {
        step_reaction(state, &self.params, 0.5 * dt);
        self.stencil.apply(&state.vm, &mut self.rate);
        let scale = dt / state.cm;
        state.vm.par_iter_mut().zip(&self.rate).for_each(|(v, r)| *v += scale * r);
        step_reaction(state, &self.params, 0.5 * dt);
    }
}

/// One Strang-split step, assembling the operator for this call only.
pub fn step_reaction_diffusion(
    state: &ElectroState,
    ps: &ParticleSet,
    nl: &NeighborLists,
    b: &CorrectionMatrices,
    params: &AlievPanfilovParams,
    dt: f64,
) -> Result<ElectroState> {
    let mut next = state.clone();
    ReactionDiffusion::new(ps, nl, b, state, *params)?.step(&mut next, dt);
    Ok(next)
}
