//! Precomputed linear form of the anisotropic Laplacian.
//!
//! The recovered Hessian is linear in the field differences `φ_j − φ_i`, so
//! `tr(D_i·H_i)` collapses to `Σ_j a_ij (φ_j − φ_i)` with coefficients that
//! depend on geometry only. Assembling the coefficients once turns every
//! time step into a sparse product.

use rayon::prelude::*;

use crate::neighbors::NeighborLists;
use crate::operators::{monomials, pairwise_laplacian, CorrectionMatrices, CONDITION_LIMIT};
use crate::particles::ParticleSet;
use crate::tensor::{packed_len, packed_pairs, DenseMatrix, LuFactors, SpatialVector, SymmetricTensor, MAX_SYSTEM};

/// Row-compressed coefficients of `∇·(D∇φ)`.
#[derive(Clone, Debug)]
pub struct LaplacianStencil {
    offsets: Vec<usize>,
    columns: Vec<u32>,
    weights: Vec<f64>,
    fallback: Vec<bool>,
}

struct Row {
    entries: Vec<(u32, f64)>,
    fallback: bool,
}

fn contraction(d: &SymmetricTensor) -> [f64; MAX_SYSTEM] {
    let mut c = [0.0; MAX_SYSTEM];
    for (p, &(m, n)) in packed_pairs(d.dim).iter().enumerate() {
        c[p] = d.get(m, n);
    }
    c
}

fn assemble_row(ps: &ParticleSet, nl: &NeighborLists, b: &CorrectionMatrices, d: &SymmetricTensor, i: usize) -> Row {
    let dim = ps.dim();
    let n = packed_len(dim);
    let volumes = ps.volumes();
    let neighbors = nl.neighbors(i);

    let mut a = [SpatialVector::ZERO; MAX_SYSTEM];
    let mut geometry = Vec::with_capacity(neighbors.len());
    for nb in neighbors {
        let sep = -nb.r_ij;
        let g = b.correct(i, &nb.kernel.gradient);
        let v = volumes[nb.j];
        let s = monomials(&sep, dim);
        for p in 0..n {
            a[p] += g * (v * s[p]);
        }
        let r2 = sep.norm_squared();
        geometry.push((sep, g, s, v * sep.dot(&g) / (r2 * r2)));
    }

    let mut m = DenseMatrix::zeros(n);
    // t[p] = Σ_l 2 w_l s_l[p] d_l
    let mut t = [SpatialVector::ZERO; MAX_SYSTEM];
    for (sep, _, s, w) in &geometry {
        let mut c = [0.0; MAX_SYSTEM];
        for p in 0..n {
            c[p] = s[p] - sep.dot(&a[p]);
            t[p] += *sep * (2.0 * w * s[p]);
        }
        m.add_outer(*w, s, &c);
    }

    let solved = LuFactors::factor(&m).ok().and_then(|lu| {
        let condition = m.norm_one() * lu.inverse_norm_one_estimate();
        (condition <= CONDITION_LIMIT).then(|| lu.solve_transposed(&contraction(d)))
    });

    let mut entries: Vec<(u32, f64)> = match solved {
        Some(y) => neighbors
            .iter()
            .zip(&geometry)
            .map(|(nb, (_, g, s, w))| {
                let v = volumes[nb.j];
                let coeff: f64 = (0..n).map(|p| y[p] * (2.0 * w * s[p] - v * t[p].dot(g))).sum();
                (nb.j as u32, coeff)
            })
            .collect(),
        None => {
            let scale = d.trace() / dim as f64;
            neighbors
                .iter()
                .map(|nb| {
                    let r = nb.r_ij;
                    let coeff = -2.0 * volumes[nb.j] * r.dot(&nb.kernel.gradient) / r.norm_squared();
                    (nb.j as u32, scale * coeff)
                })
                .collect()
        }
    };
    entries.sort_by_key(|e| e.0);
    entries.dedup_by(|next, kept| {
        if next.0 == kept.0 {
            kept.1 += next.1;
            true
        } else {
            false
        }
    });
    entries.retain(|e| e.0 as usize != i);
    Row { entries, fallback: solved.is_none() }
}

impl LaplacianStencil {
    /// Coefficients for a per-particle diffusion tensor `coefficient(i)`.
    pub fn assemble<F>(ps: &ParticleSet, nl: &NeighborLists, b: &CorrectionMatrices, coefficient: F) -> Self
    where
        F: Fn(usize) -> SymmetricTensor + Sync,
    {
        let rows: Vec<Row> =
            (0..ps.len()).into_par_iter().map(|i| assemble_row(ps, nl, b, &coefficient(i), i)).collect();
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let nnz = rows.iter().map(|r| r.entries.len()).sum();
        let mut columns = Vec::with_capacity(nnz);
        let mut weights = Vec::with_capacity(nnz);
        let mut fallback = Vec::with_capacity(rows.len());
        for row in rows {
            for (c, w) in row.entries {
                columns.push(c);
                weights.push(w);
            }
            offsets.push(columns.len());
            fallback.push(row.fallback);
        }
        LaplacianStencil { offsets, columns, weights, fallback }
    }

    pub fn uniform(ps: &ParticleSet, nl: &NeighborLists, b: &CorrectionMatrices, d: &SymmetricTensor) -> Self {
        Self::assemble(ps, nl, b, |_| *d)
    }

    pub fn len(&self) -> usize {
        self.fallback.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fallback.is_empty()
    }

    pub fn nonzeros(&self) -> usize {
        self.weights.len()
    }

    pub fn fallback(&self) -> &[bool] {
        &self.fallback
    }

    pub fn flagged_count(&self) -> usize {
        self.fallback.iter().filter(|f| **f).count()
    }

    /// `(column, weight)` pairs of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.columns[range.clone()].iter().map(|c| *c as usize).zip(self.weights[range].iter().copied())
    }

    /// Diagonal entry of the equivalent matrix, `−Σ_j a_ij`.
    pub fn diagonal(&self, i: usize) -> f64 {
        -self.row(i).map(|(_, w)| w).sum::<f64>()
    }

    /// Largest Gershgorin radius `2 Σ_j |a_ij|`, a bound on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.len()).map(|i| self.row(i).map(|(_, w)| 2.0 * w.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn apply(&self, field: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let fi = field[i];
            let mut acc = 0.0;
            for k in self.offsets[i]..self.offsets[i + 1] {
                acc += self.weights[k] * (field[self.columns[k] as usize] - fi);
            }
            *o = acc;
        });
    }

    pub fn evaluate(&self, field: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; field.len()];
        self.apply(field, &mut out);
        out
    }
}

/// Fallback Laplacian of a single particle, exposed for diagnostics.
pub fn isotropic_fallback(ps: &ParticleSet, nl: &NeighborLists, field: &[f64], i: usize) -> f64 {
    pairwise_laplacian(ps, nl, field, i)
}
