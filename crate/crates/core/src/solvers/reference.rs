//! Closed-form solutions used as references.

use std::f64::consts::PI;

use crate::solvers::DiffusionTensor;
use crate::tensor::{SpatialVector, SquareMatrix};

/// Point release of unit mass diffusing in the plane from `origin`.
#[derive(Clone, Copy, Debug)]
pub struct GaussianReference {
    pub diffusion: DiffusionTensor,
    pub origin: SpatialVector,
    /// Time at which the numerical run is initialized.
    pub start_time: f64,
    d_inv: SquareMatrix,
    det_d: f64,
}

impl GaussianReference {
    pub fn new(diffusion: DiffusionTensor, origin: SpatialVector, start_time: f64) -> Self {
        let m = diffusion.tensor().to_matrix();
        let d_inv = m.inverse().expect("diffusion tensor is SPD");
        GaussianReference { diffusion, origin, start_time, d_inv, det_d: m.determinant() }
    }

    /// `(4πt)⁻¹ det(D)^{-1/2} exp(−(x−x₀)ᵀD⁻¹(x−x₀)/(4t))`.
    pub fn value(&self, x: &SpatialVector, t: f64) -> f64 {
        let r = *x - self.origin;
        let q = r.dot(&self.d_inv.mul_vec(&r));
        (-q / (4.0 * t)).exp() / (4.0 * PI * t * self.det_d.sqrt())
    }

    /// Covariance `2·D·t` of the distribution at time `t`.
    pub fn covariance(&self, t: f64) -> crate::tensor::SymmetricTensor {
        let mut c = *self.diffusion.tensor();
        for r in 0..c.dim {
            for k in r..c.dim {
                c.set(r, k, 2.0 * t * c.get(r, k));
            }
        }
        c
    }
}

/// Uniform state reached by the band initial condition on the unit-length strip.
pub const RECTANGLE_STEADY_STATE: f64 = 0.2;

/// Insulated unit interval with `φ = 1` on `[0.4, 0.6]` at `t = 0` and unit
/// diffusivity, by cosine series.
pub fn rectangle_band_solution(x: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return if (0.4..=0.6).contains(&x) { 1.0 } else { 0.0 };
    }
    let mut sum = RECTANGLE_STEADY_STATE;
    for n in 1..100_000 {
        let k = n as f64 * PI;
        let decay = (-k * k * t).exp();
        if decay < 1e-18 {
            break;
        }
        let coeff = 2.0 * ((0.6 * k).sin() - (0.4 * k).sin()) / k;
        sum += coeff * (k * x).cos() * decay;
    }
    sum
}
