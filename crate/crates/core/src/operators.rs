//! Corrected SPH gradients, Hessian recovery and Laplacians.
//!
//! The Hessian at particle `i` comes from a small dense system built from
//! kernel-weighted second-order Taylor residuals over its neighbors. The
//! first-derivative part of each residual is removed with the corrected
//! gradient, so the recovered Hessian is exact whenever the field is a
//! global quadratic, including at particles with truncated support.
//!
//! Separations inside the system are `d = r_j − r_i`. The transformed route
//! replaces `d` by `L⁻¹d` and pulls kernel gradients back with `Lᵀ`, which
//! keeps `d·∇W` invariant and therefore keeps quadratic exactness.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::neighbors::NeighborLists;
use crate::particles::ParticleSet;
use crate::solvers::DiffusionTensor;
use crate::tensor::{
    packed_len, packed_pairs, DenseMatrix, LuFactors, SpatialVector, SquareMatrix, SymmetricTensor, MAX_SYSTEM,
};

/// Moment systems with a larger 1-norm condition estimate use the fallback.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Per-particle kernel gradient correction `B_i`.
#[derive(Clone, Debug)]
pub struct CorrectionMatrices {
    pub matrices: Vec<SquareMatrix>,
    /// Particles whose moment sum was singular and received the identity.
    pub singular: Vec<bool>,
}

impl CorrectionMatrices {
    pub fn get(&self, i: usize) -> &SquareMatrix {
        &self.matrices[i]
    }

    /// Corrected kernel gradient `B_iᵀ ∇W`.
    #[inline]
    pub fn correct(&self, i: usize, gradient: &SpatialVector) -> SpatialVector {
        self.matrices[i].tr_mul_vec(gradient)
    }

    pub fn flagged_count(&self) -> usize {
        self.singular.iter().filter(|s| **s).count()
    }

    pub fn mark(&self, ps: &mut ParticleSet) {
        for (f, s) in ps.flags_mut().iter_mut().zip(&self.singular) {
            f.singular_correction |= *s;
        }
    }

    /// Identity everywhere, for comparisons against the uncorrected kernel.
    pub fn identity(n: usize, dim: usize) -> Self {
        CorrectionMatrices { matrices: vec![SquareMatrix::identity(dim); n], singular: vec![false; n] }
    }
}

pub fn compute_correction_matrices(ps: &ParticleSet, nl: &NeighborLists) -> CorrectionMatrices {
    let dim = ps.dim();
    let volumes = ps.volumes();
    let (matrices, singular) = (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let mut sum = SquareMatrix::zeros(dim);
            for nb in nl.neighbors(i) {
                let d = -nb.r_ij;
                sum.add_scaled(&d.outer(&nb.kernel.gradient, dim), volumes[nb.j]);
            }
            match sum.inverse().filter(SquareMatrix::is_finite) {
                Some(b) => (b, false),
                None => (SquareMatrix::identity(dim), true),
            }
        })
        .unzip();
    CorrectionMatrices { matrices, singular }
}

/// `Σ_j V_j (φ_j − φ_i) B_iᵀ∇W_ij`; exact for affine fields.
pub fn corrected_gradient(
    ps: &ParticleSet,
    nl: &NeighborLists,
    b: &CorrectionMatrices,
    field: &[f64],
) -> Vec<SpatialVector> {
    let volumes = ps.volumes();
    (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let mut e = SpatialVector::ZERO;
            for nb in nl.neighbors(i) {
                e += b.correct(i, &nb.kernel.gradient) * (volumes[nb.j] * (field[nb.j] - field[i]));
            }
            e
        })
        .collect()
}

/// Uncorrected symmetric-average gradient `2 Σ_j V_j (f_i + f_j)/2 ∇W_ij`.
pub fn weak_gradient(ps: &ParticleSet, nl: &NeighborLists, field: &[f64]) -> Vec<SpatialVector> {
    let volumes = ps.volumes();
    (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let mut g = SpatialVector::ZERO;
            for nb in nl.neighbors(i) {
                g += nb.kernel.gradient * (volumes[nb.j] * (field[i] + field[nb.j]));
            }
            g
        })
        .collect()
}

/// Hessian in packed form: `[H11, H22, (H33), 2H12, (2H23, 2H31)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianPacked {
    pub dim: usize,
    pub values: [f64; MAX_SYSTEM],
}

impl HessianPacked {
    pub fn zeros(dim: usize) -> Self {
        HessianPacked { dim, values: [0.0; MAX_SYSTEM] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..packed_len(self.dim)]
    }

    pub fn to_tensor(&self) -> SymmetricTensor {
        let mut h = SymmetricTensor::zeros(self.dim);
        for (p, &(m, n)) in packed_pairs(self.dim).iter().enumerate() {
            let v = if m == n { self.values[p] } else { 0.5 * self.values[p] };
            h.set(m, n, v);
        }
        h
    }

    pub fn trace(&self) -> f64 {
        self.values[..self.dim].iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Recovered Hessians plus the particles that fell back to the isotropic form.
#[derive(Clone, Debug)]
pub struct HessianField {
    pub values: Vec<HessianPacked>,
    pub fallback: Vec<bool>,
}

impl HessianField {
    pub fn flagged_count(&self) -> usize {
        self.fallback.iter().filter(|f| **f).count()
    }

    pub fn mark(&self, ps: &mut ParticleSet) {
        for (f, s) in ps.flags_mut().iter_mut().zip(&self.fallback) {
            f.hessian_fallback |= *s;
        }
    }
}

/// Coordinates in which the moment system is assembled.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Frame {
    l_inv: SquareMatrix,
    l_t: SquareMatrix,
}

impl Frame {
    pub(crate) fn physical(dim: usize) -> Self {
        Frame { l_inv: SquareMatrix::identity(dim), l_t: SquareMatrix::identity(dim) }
    }

    pub(crate) fn isotropic_for(d: &DiffusionTensor) -> Self {
        let l = d.cholesky().as_matrix();
        Frame { l_inv: l.inverse().expect("Cholesky factor is invertible"), l_t: l.transpose() }
    }

    #[inline]
    pub(crate) fn separation(&self, r_ij: &SpatialVector) -> SpatialVector {
        self.l_inv.mul_vec(&(-*r_ij))
    }

    #[inline]
    pub(crate) fn gradient(&self, g: &SpatialVector) -> SpatialVector {
        self.l_t.mul_vec(g)
    }
}

#[inline]
pub(crate) fn monomials(d: &SpatialVector, dim: usize) -> [f64; MAX_SYSTEM] {
    let mut s = [0.0; MAX_SYSTEM];
    for (p, &(m, n)) in packed_pairs(dim).iter().enumerate() {
        s[p] = d[m] * d[n];
    }
    s
}

/// Per-particle Hessian system `M·h = rhs`.
#[derive(Clone, Debug)]
pub struct MomentSystem {
    pub m: DenseMatrix,
    pub rhs: [f64; MAX_SYSTEM],
    /// Corrected first-gradient sum.
    pub e: SpatialVector,
    /// `Σ_k V_k d_k^m d_k^n ∇̃W_k` for each packed pair.
    pub a: [SpatialVector; MAX_SYSTEM],
}

impl MomentSystem {
    pub fn assemble(ps: &ParticleSet, nl: &NeighborLists, b: &CorrectionMatrices, field: &[f64], i: usize) -> Self {
        Self::assemble_in(ps, nl, b, field, i, &Frame::physical(ps.dim()))
    }

    pub(crate) fn assemble_in(
        ps: &ParticleSet,
        nl: &NeighborLists,
        b: &CorrectionMatrices,
        field: &[f64],
        i: usize,
        frame: &Frame,
    ) -> Self {
        let dim = ps.dim();
        let n = packed_len(dim);
        let volumes = ps.volumes();
        let neighbors = nl.neighbors(i);

        let mut e = SpatialVector::ZERO;
        let mut a = [SpatialVector::ZERO; MAX_SYSTEM];
        for nb in neighbors {
            let d = frame.separation(&nb.r_ij);
            let g = frame.gradient(&b.correct(i, &nb.kernel.gradient));
            let v = volumes[nb.j];
            e += g * (v * (field[nb.j] - field[i]));
            let s = monomials(&d, dim);
            for p in 0..n {
                a[p] += g * (v * s[p]);
            }
        }

        let mut m = DenseMatrix::zeros(n);
        let mut rhs = [0.0; MAX_SYSTEM];
        for nb in neighbors {
            let d = frame.separation(&nb.r_ij);
            let g = frame.gradient(&b.correct(i, &nb.kernel.gradient));
            let r2 = d.norm_squared();
            let w = volumes[nb.j] * d.dot(&g) / (r2 * r2);
            let s = monomials(&d, dim);
            let mut c = [0.0; MAX_SYSTEM];
            for p in 0..n {
                c[p] = s[p] - d.dot(&a[p]);
            }
            m.add_outer(w, &s, &c);
            let residual = 2.0 * w * (field[nb.j] - field[i] - d.dot(&e));
            for p in 0..n {
                rhs[p] += residual * s[p];
            }
        }
        MomentSystem { m, rhs, e, a }
    }

    /// Solution, or `None` when singular or worse conditioned than
    /// [`CONDITION_LIMIT`].
    pub fn solve(&self) -> Option<[f64; MAX_SYSTEM]> {
        let lu = LuFactors::factor(&self.m).ok()?;
        let condition = self.m.norm_one() * lu.inverse_norm_one_estimate();
        if !(condition <= CONDITION_LIMIT) {
            return None;
        }
        let x = lu.solve(&self.rhs);
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

/// `2 Σ_j V_j (φ_i − φ_j)(r_ij·∇W_ij)/|r_ij|²`, the Laplacian of an
/// isotropic kernel with unit coefficient.
pub(crate) fn pairwise_laplacian(ps: &ParticleSet, nl: &NeighborLists, field: &[f64], i: usize) -> f64 {
    let volumes = ps.volumes();
    nl.neighbors(i)
        .iter()
        .map(|nb| {
            let r = nb.r_ij;
            2.0 * volumes[nb.j] * (field[i] - field[nb.j]) * r.dot(&nb.kernel.gradient) / r.norm_squared()
        })
        .sum()
}

pub fn hessian(ps: &ParticleSet, nl: &NeighborLists, b: &CorrectionMatrices, field: &[f64]) -> HessianField {
    let dim = ps.dim();
    let (values, fallback) = (0..ps.len())
        .into_par_iter()
        .map(|i| match MomentSystem::assemble(ps, nl, b, field, i).solve() {
            Some(x) => (HessianPacked { dim, values: x }, false),
            None => {
                let per_axis = pairwise_laplacian(ps, nl, field, i) / dim as f64;
                let mut h = HessianPacked::zeros(dim);
                h.values[..dim].fill(per_axis);
                (h, true)
            }
        })
        .unzip();
    HessianField { values, fallback }
}

pub fn laplacian_trace(h: &[HessianPacked]) -> Vec<f64> {
    h.iter().map(HessianPacked::trace).collect()
}

/// Classical single-sum Laplacian `∇·(d∇φ)` for isotropic kernels.
pub fn cleary_monaghan_laplacian(ps: &ParticleSet, nl: &NeighborLists, field: &[f64], d: f64) -> Result<Vec<f64>> {
    if let Some(i) = ps.smoothing().iter().position(|g| !g.is_isotropic()) {
        return Err(Error::AnisotropicKernelUnsupported(i));
    }
    Ok((0..ps.len()).into_par_iter().map(|i| d * pairwise_laplacian(ps, nl, field, i)).collect())
}

/// `∇·(D∇φ) = tr(D·H)` from the recovered Hessian.
pub fn anisotropic_laplacian_trace(
    ps: &ParticleSet,
    nl: &NeighborLists,
    b: &CorrectionMatrices,
    field: &[f64],
    d: &DiffusionTensor,
) -> Vec<f64> {
    let h = hessian(ps, nl, b, field);
    h.values.iter().map(|hp| d.tensor().contract(&hp.to_tensor())).collect()
}

/// `∇·(D∇φ)` as the plain Laplacian in coordinates `X = L⁻¹x`, `D = L·Lᵀ`.
pub fn anisotropic_laplacian_transform(
    ps: &ParticleSet,
    nl: &NeighborLists,
    b: &CorrectionMatrices,
    field: &[f64],
    d: &DiffusionTensor,
) -> Vec<f64> {
    let dim = ps.dim();
    let frame = Frame::isotropic_for(d);
    (0..ps.len())
        .into_par_iter()
        .map(|i| match MomentSystem::assemble_in(ps, nl, b, field, i, &frame).solve() {
            Some(x) => x[..dim].iter().sum(),
            None => d.tensor().trace() * pairwise_laplacian(ps, nl, field, i) / dim as f64,
        })
        .collect()
}
