//! Anisotropic Wendland C2 kernel.
//!
//! Separations are mapped to normalized positions `η = G·r` by a symmetric
//! positive-definite smoothing tensor `G`; the kernel is the usual Wendland
//! C2 profile in `|η|` with compact support `|η| ≤ 2`. The dimensional
//! constant carries `det(G)` exactly once, which is what makes the kernel
//! integrate to one over its ellipsoidal support.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tensor::{SpatialVector, SquareMatrix, SymmetricTensor};

/// Radius of the kernel support in normalized coordinates.
pub const SUPPORT_RADIUS: f64 = 2.0;

/// Default ratio between smoothing length and particle spacing, per axis.
pub const DEFAULT_SMOOTHING_RATIO: f64 = 1.3;

/// Linear map from real to normalized positions, with its determinant cached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingTensor {
    g: SymmetricTensor,
    det_g: f64,
}

impl SmoothingTensor {
    /// Wraps an SPD tensor; fails if `g` is not positive definite.
    pub fn from_tensor(g: SymmetricTensor) -> Result<Self> {
        crate::tensor::cholesky(&g)?;
        let det_g = g.determinant();
        Ok(SmoothingTensor { g, det_g })
    }

    pub fn isotropic(dim: usize, h: f64) -> Result<Self> {
        Self::axis_aligned(&[h; 3][..dim])
    }

    /// Kernel frame aligned with the coordinate axes: `G = diag(1/h_k)`.
    pub fn axis_aligned(h: &[f64]) -> Result<Self> {
        if h.is_empty() || h.len() > 3 {
            return Err(Error::UnsupportedDimension(h.len()));
        }
        let mut inv = [0.0; 3];
        for (k, hk) in h.iter().enumerate() {
            if !(*hk > 0.0) || !hk.is_finite() {
                return Err(Error::NonPositiveLength(*hk));
            }
            inv[k] = 1.0 / hk;
        }
        let g = SymmetricTensor::diagonal(&inv[..h.len()]);
        Ok(SmoothingTensor { g, det_g: inv[..h.len()].iter().product() })
    }

    pub fn tensor(&self) -> &SymmetricTensor {
        &self.g
    }

    pub fn det_g(&self) -> f64 {
        self.det_g
    }

    pub fn dim(&self) -> usize {
        self.g.dim
    }

    pub fn normalize(&self, r: &SpatialVector) -> SpatialVector {
        self.g.mul_vec(r)
    }

    /// `|G·r|`.
    pub fn eta(&self, r: &SpatialVector) -> f64 {
        self.normalize(r).norm()
    }

    pub fn value(&self, r: &SpatialVector) -> f64 {
        kernel_value(self, r)
    }

    pub fn gradient(&self, r: &SpatialVector) -> SpatialVector {
        kernel_gradient(self, r)
    }

    /// Half-width of the support's bounding box along `axis`.
    pub fn support_half_extent(&self, axis: usize) -> f64 {
        let inv = self.g.to_matrix().inverse().expect("smoothing tensor is SPD");
        let sq: f64 = (0..self.dim()).map(|m| inv.m[axis][m] * inv.m[axis][m]).sum();
        SUPPORT_RADIUS * sq.sqrt()
    }

    /// Shortest smoothing semi-axis, `1/λ_max(G)`.
    pub fn min_semi_axis(&self) -> f64 {
        1.0 / self.g.max_eigenvalue()
    }

    /// Longest smoothing semi-axis, `1/λ_min(G)`.
    pub fn max_semi_axis(&self) -> f64 {
        1.0 / self.g.min_eigenvalue()
    }

    pub fn is_isotropic(&self) -> bool {
        let d0 = self.g.get(0, 0);
        let tol = 1e-12 * d0.abs();
        (0..self.dim()).all(|r| {
            (0..self.dim()).all(|c| {
                let expected = if r == c { d0 } else { 0.0 };
                (self.g.get(r, c) - expected).abs() <= tol
            })
        })
    }

    /// Mirror image `P·G·P` for the reflection `P` flipping the flagged axes.
    pub fn reflected(&self, flip: [bool; 3]) -> SmoothingTensor {
        let mut g = self.g;
        for r in 0..self.dim() {
            for c in r..self.dim() {
                if flip[r] != flip[c] {
                    g.set(r, c, -self.g.get(r, c));
                }
            }
        }
        SmoothingTensor { g, det_g: self.det_g }
    }
}

/// Builds the 2D tensor for semi-axes `h1`, `h2` with the major axis rotated
/// by `theta` from the x-axis.
pub fn build_g_2d(h1: f64, h2: f64, theta: f64) -> Result<SmoothingTensor> {
    for h in [h1, h2] {
        if !(h > 0.0) {
            return Err(Error::NonPositiveLength(h));
        }
    }
    let (s, c) = theta.sin_cos();
    let (a, b) = (1.0 / h1, 1.0 / h2);
    let g = SymmetricTensor::new_2d(a * c * c + b * s * s, (a - b) * c * s, a * s * s + b * c * c);
    Ok(SmoothingTensor { g, det_g: a * b })
}

/// Builds the 3D tensor for smoothing lengths `(h1, h2, h3)` in the kernel
/// frame and rotation angles `(omega, psi, chi)` to the real frame.
pub fn build_g_3d(h1: f64, h2: f64, h3: f64, omega: f64, psi: f64, chi: f64) -> Result<SmoothingTensor> {
    for h in [h1, h2, h3] {
        if !(h > 0.0) {
            return Err(Error::NonPositiveLength(h));
        }
    }
    let (w2, w1) = omega.sin_cos();
    let (p2, p1) = psi.sin_cos();
    let (c2, c1) = chi.sin_cos();
    // Kernel-frame axes expressed in the real frame.
    let axes = [
        [w1 * p1, w2 * p1, -p2],
        [w1 * p2 * c2 - w2 * c1, w2 * p2 * c2 + w1 * c1, p1 * c2],
        [w1 * p2 * c1 + w2 * c2, w2 * p2 * c1 - w1 * c2, p1 * c1],
    ];
    let inv = [1.0 / h1, 1.0 / h2, 1.0 / h3];
    let mut g = SymmetricTensor::zeros(3);
    for r in 0..3 {
        for c in r..3 {
            g.set(r, c, (0..3).map(|k| inv[k] * axes[k][r] * axes[k][c]).sum());
        }
    }
    Ok(SmoothingTensor { g, det_g: inv.iter().product() })
}

/// Normalization constant of the profile before the `det(G)` factor.
pub fn wendland_constant(dim: usize) -> f64 {
    match dim {
        1 => 0.75,
        2 => 7.0 / (4.0 * PI),
        _ => 21.0 / (16.0 * PI),
    }
}

#[inline]
fn profile(eta: f64) -> f64 {
    let q = 1.0 - 0.5 * eta;
    let q2 = q * q;
    q2 * q2 * (1.0 + 2.0 * eta)
}

#[inline]
fn profile_derivative(eta: f64) -> f64 {
    let q = 1.0 - 0.5 * eta;
    -5.0 * eta * q * q * q
}

pub fn kernel_value(g: &SmoothingTensor, r: &SpatialVector) -> f64 {
    let eta = g.eta(r);
    if eta > SUPPORT_RADIUS {
        return 0.0;
    }
    wendland_constant(g.dim()) * g.det_g * profile(eta)
}

pub fn kernel_gradient(g: &SmoothingTensor, r: &SpatialVector) -> SpatialVector {
    let eta_vec = g.normalize(r);
    let eta = eta_vec.norm();
    if eta == 0.0 || eta > SUPPORT_RADIUS {
        return SpatialVector::ZERO;
    }
    let scale = wendland_constant(g.dim()) * g.det_g * profile_derivative(eta) / eta;
    g.tensor().mul_vec(&eta_vec) * scale
}

/// Kernel value and gradient for one particle pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KernelSample {
    pub value: f64,
    pub gradient: SpatialVector,
}

/// Average of the kernels of both particles, evaluated at `r_ij = r_i − r_j`.
pub fn symmetrized_pair(gi: &SmoothingTensor, gj: &SmoothingTensor, r_ij: &SpatialVector) -> KernelSample {
    KernelSample {
        value: 0.5 * (kernel_value(gi, r_ij) + kernel_value(gj, r_ij)),
        gradient: (kernel_gradient(gi, r_ij) + kernel_gradient(gj, r_ij)) * 0.5,
    }
}

/// `R(θ)·diag(1/h1, 1/h2)·R(θ)ᵀ`, kept separate from [`build_g_2d`] as a
/// cross-check of the closed-form entries.
pub fn rotated_diagonal_2d(h1: f64, h2: f64, theta: f64) -> SquareMatrix {
    let (s, c) = theta.sin_cos();
    let rot = SquareMatrix::from_rows(2, &[&[c, -s], &[s, c]]);
    let diag = SquareMatrix::from_rows(2, &[&[1.0 / h1, 0.0], &[0.0, 1.0 / h2]]);
    rot.mul_mat(&diag).mul_mat(&rot.transpose())
}
