//! Anisotropic smoothed particle hydrodynamics for diffusion problems.
//!
//! Particles carry an ellipsoidal smoothing tensor `G`; second derivatives
//! come from a corrected moment system that is exact for quadratic fields,
//! and anisotropic diffusion `∇·(D∇φ)` follows either by contracting the
//! Hessian with `D` or by solving in the frame where `D` is the identity.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod kernel;
pub mod neighbors;
pub mod operators;
pub mod particles;
pub mod solvers;
pub mod stencil;
pub mod tensor;

pub use error::{Error, Result, TensorError};
pub use kernel::{KernelSample, SmoothingTensor};
pub use neighbors::{build_neighbor_lists, build_neighbor_lists_mirrored, MirrorBox, Neighbor, NeighborLists};
pub use operators::{compute_correction_matrices, CorrectionMatrices, HessianField, HessianPacked};
pub use particles::{generate_lattice, LatticeSpec, ParticleFlags, ParticleSet};
pub use solvers::{DiffusionTensor, MetricsSummary};
pub use stencil::LaplacianStencil;
pub use tensor::{SpatialVector, SquareMatrix, SymmetricTensor};
