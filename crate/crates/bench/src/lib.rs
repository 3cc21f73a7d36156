//! Shared fixtures for the operator benchmarks.

use asph_core::{
    build_neighbor_lists, compute_correction_matrices, generate_lattice, CorrectionMatrices, LatticeSpec,
    NeighborLists, ParticleSet,
};

/// Unit-square lattice with spacing `dp`, its neighbor lists and
/// correction matrices.
pub fn unit_square(dp: f64) -> (ParticleSet, NeighborLists, CorrectionMatrices) {
    let ps = generate_lattice(&LatticeSpec::new(&[0.0, 0.0], &[1.0, 1.0], &[dp, dp]).expect("valid lattice"))
        .expect("non-empty lattice");
    let nl = build_neighbor_lists(&ps);
    let b = compute_correction_matrices(&ps, &nl);
    (ps, nl, b)
}

/// `sin(πx)·sin(πy)` sampled at every particle.
pub fn sine_field(ps: &ParticleSet) -> Vec<f64> {
    use std::f64::consts::PI;
    ps.positions().iter().map(|p| (PI * p[0]).sin() * (PI * p[1]).sin()).collect()
}
