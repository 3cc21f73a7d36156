//! Small dense linear algebra for 1–3 dimensional particle problems.
//!
//! Spatial quantities are stored zero-padded to three components so that the
//! same code path serves 1D, 2D and 3D; the active dimension travels with the
//! tensor types (or with the owning particle set for vectors). The moment
//! systems of the Hessian recovery are at most 6×6 and are solved with
//! partially pivoted Gaussian elimination.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::TensorError;

/// Largest supported moment system (3D Hessian, six unknowns).
pub const MAX_SYSTEM: usize = 6;

/// Relative pivot magnitude below which a dense system is declared singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// Number of independent entries of a symmetric `dim`×`dim` tensor.
pub const fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Index pairs of the packed ordering `[11, 22, 33, 12, 23, 31]`, truncated
/// to the active dimension.
pub fn packed_pairs(dim: usize) -> &'static [(usize, usize)] {
    match dim {
        1 => &[(0, 0)],
        2 => &[(0, 0), (1, 1), (0, 1)],
        _ => &[(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (2, 0)],
    }
}

/// A position or direction, zero-padded to three components.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpatialVector(pub [f64; 3]);

impl SpatialVector {
    pub const ZERO: SpatialVector = SpatialVector([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        SpatialVector([x, y, z])
    }

    pub fn new_2d(x: f64, y: f64) -> Self {
        SpatialVector([x, y, 0.0])
    }

    pub fn dot(&self, other: &SpatialVector) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn outer(&self, other: &SpatialVector, dim: usize) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.m[r][c] = self.0[r] * other.0[c];
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for SpatialVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for SpatialVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for SpatialVector {
    type Output = SpatialVector;
    fn add(self, o: SpatialVector) -> SpatialVector {
        SpatialVector([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl AddAssign for SpatialVector {
    fn add_assign(&mut self, o: SpatialVector) {
        for k in 0..3 {
            self.0[k] += o.0[k];
        }
    }
}

impl Sub for SpatialVector {
    type Output = SpatialVector;
    fn sub(self, o: SpatialVector) -> SpatialVector {
        SpatialVector([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl SubAssign for SpatialVector {
    fn sub_assign(&mut self, o: SpatialVector) {
        for k in 0..3 {
            self.0[k] -= o.0[k];
        }
    }
}

impl Neg for SpatialVector {
    type Output = SpatialVector;
    fn neg(self) -> SpatialVector {
        SpatialVector([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for SpatialVector {
    type Output = SpatialVector;
    fn mul(self, s: f64) -> SpatialVector {
        SpatialVector([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<SpatialVector> for f64 {
    type Output = SpatialVector;
    fn mul(self, v: SpatialVector) -> SpatialVector {
        v * self
    }
}

/// General `dim`×`dim` matrix (correction matrices, smoothing maps).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SquareMatrix {
    pub dim: usize,
    pub m: [[f64; 3]; 3],
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix { dim, m: [[0.0; 3]; 3] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut s = Self::zeros(dim);
        for k in 0..dim {
            s.m[k][k] = 1.0;
        }
        s
    }

    pub fn from_rows(dim: usize, rows: &[&[f64]]) -> Self {
        let mut s = Self::zeros(dim);
        for (r, row) in rows.iter().enumerate().take(dim) {
            for (c, v) in row.iter().enumerate().take(dim) {
                s.m[r][c] = *v;
            }
        }
        s
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                t.m[c][r] = self.m[r][c];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &SpatialVector) -> SpatialVector {
        let mut out = SpatialVector::ZERO;
        for r in 0..self.dim {
            let mut acc = 0.0;
            for c in 0..self.dim {
                acc += self.m[r][c] * v.0[c];
            }
            out.0[r] = acc;
        }
        out
    }

    /// `selfᵀ · v` without forming the transpose.
    pub fn tr_mul_vec(&self, v: &SpatialVector) -> SpatialVector {
        let mut out = SpatialVector::ZERO;
        for c in 0..self.dim {
            let mut acc = 0.0;
            for r in 0..self.dim {
                acc += self.m[r][c] * v.0[r];
            }
            out.0[c] = acc;
        }
        out
    }

    pub fn mul_mat(&self, o: &SquareMatrix) -> SquareMatrix {
        let mut out = SquareMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.m[r][c] = (0..self.dim).map(|k| self.m[r][k] * o.m[k][c]).sum();
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> SquareMatrix {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn add_scaled(&mut self, o: &SquareMatrix, s: f64) {
        for r in 0..3 {
            for c in 0..3 {
                self.m[r][c] += s * o.m[r][c];
            }
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        match self.dim {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        let mut a: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                a = a.max(self.m[r][c].abs());
            }
        }
        a
    }

    /// Adjugate inverse; `None` when the determinant is negligible relative
    /// to the entry scale.
    pub fn inverse(&self) -> Option<SquareMatrix> {
        let scale = self.max_abs();
        let det = self.determinant();
        if scale == 0.0 || !det.is_finite() || det.abs() <= 1e-12 * scale.powi(self.dim as i32) {
            return None;
        }
        let m = &self.m;
        let mut inv = SquareMatrix::zeros(self.dim);
        match self.dim {
            1 => inv.m[0][0] = 1.0 / m[0][0],
            2 => {
                inv.m[0][0] = m[1][1] / det;
                inv.m[0][1] = -m[0][1] / det;
                inv.m[1][0] = -m[1][0] / det;
                inv.m[1][1] = m[0][0] / det;
            }
            _ => {
                for r in 0..3 {
                    for c in 0..3 {
                        let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
                        let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
                        inv.m[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }
}

/// Symmetric tensor stored as its packed upper triangle `[11, 22, 33, 12, 23, 31]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricTensor {
    pub dim: usize,
    packed: [f64; 6],
}

impl SymmetricTensor {
    pub fn zeros(dim: usize) -> Self {
        SymmetricTensor { dim, packed: [0.0; 6] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&[1.0; 3][..dim])
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut t = Self::zeros(entries.len());
        for (k, v) in entries.iter().enumerate() {
            t.set(k, k, *v);
        }
        t
    }

    /// 2D tensor `[[a11, a12], [a12, a22]]`.
    pub fn new_2d(a11: f64, a12: f64, a22: f64) -> Self {
        let mut t = Self::zeros(2);
        t.set(0, 0, a11);
        t.set(0, 1, a12);
        t.set(1, 1, a22);
        t
    }

    /// Symmetric part of a square matrix.
    pub fn from_matrix(m: &SquareMatrix) -> Self {
        let mut t = Self::zeros(m.dim);
        for r in 0..m.dim {
            for c in r..m.dim {
                t.set(r, c, 0.5 * (m.m[r][c] + m.m[c][r]));
            }
        }
        t
    }

    fn slot(dim: usize, r: usize, c: usize) -> usize {
        let (a, b) = if r <= c { (r, c) } else { (c, r) };
        if a == b {
            return a;
        }
        match (dim, a, b) {
            (2, 0, 1) => 2,
            (_, 0, 1) => 3,
            (_, 1, 2) => 4,
            _ => 5,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.packed[Self::slot(self.dim, r, c)]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.packed[Self::slot(self.dim, r, c)] = v;
    }

    /// Packed entries for the active dimension.
    pub fn packed(&self) -> &[f64] {
        &self.packed[..packed_len(self.dim)]
    }

    pub fn to_matrix(&self) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                m.m[r][c] = self.get(r, c);
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &SpatialVector) -> SpatialVector {
        self.to_matrix().mul_vec(v)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    pub fn determinant(&self) -> f64 {
        self.to_matrix().determinant()
    }

    /// Full contraction `A : B = Σ_mn A_mn B_mn`.
    pub fn contract(&self, o: &SymmetricTensor) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                acc += self.get(r, c) * o.get(r, c);
            }
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.packed.iter().all(|v| v.is_finite())
    }

    /// Largest eigenvalue, closed form for dim ≤ 3.
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    fn eigenvalues(&self) -> Vec<f64> {
        match self.dim {
            1 => vec![self.get(0, 0)],
            2 => {
                let (a, b, d) = (self.get(0, 0), self.get(0, 1), self.get(1, 1));
                let mean = 0.5 * (a + d);
                let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
                vec![mean - rad, mean + rad]
            }
            _ => {
                // Trigonometric solution of the characteristic cubic.
                let p1 = self.get(0, 1).powi(2) + self.get(0, 2).powi(2) + self.get(1, 2).powi(2);
                let q = self.trace() / 3.0;
                if p1 == 0.0 {
                    return (0..3).map(|k| self.get(k, k)).collect();
                }
                let p2 = (0..3).map(|k| (self.get(k, k) - q).powi(2)).sum::<f64>() + 2.0 * p1;
                let p = (p2 / 6.0).sqrt();
                let mut b = self.to_matrix();
                for k in 0..3 {
                    b.m[k][k] -= q;
                }
                let r = (b.scale(1.0 / p).determinant() / 2.0).clamp(-1.0, 1.0);
                let phi = r.acos() / 3.0;
                let e1 = q + 2.0 * p * phi.cos();
                let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
                vec![e1, 3.0 * q - e1 - e3, e3]
            }
        }
    }
}

/// Lower-triangular factor, zero above the diagonal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerTriangular {
    pub dim: usize,
    pub m: [[f64; 3]; 3],
}

impl LowerTriangular {
    pub fn identity(dim: usize) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (k, row) in m.iter_mut().enumerate().take(dim) {
            row[k] = 1.0;
        }
        LowerTriangular { dim, m }
    }

    pub fn as_matrix(&self) -> SquareMatrix {
        SquareMatrix { dim: self.dim, m: self.m }
    }

    /// `L · Lᵀ`.
    pub fn reconstruct(&self) -> SymmetricTensor {
        let m = self.as_matrix();
        SymmetricTensor::from_matrix(&m.mul_mat(&m.transpose()))
    }

    /// Solves `L x = b` by forward substitution.
    pub fn solve(&self, b: &SpatialVector) -> SpatialVector {
        let mut x = SpatialVector::ZERO;
        for r in 0..self.dim {
            let mut acc = b.0[r];
            for c in 0..r {
                acc -= self.m[r][c] * x.0[c];
            }
            x.0[r] = acc / self.m[r][r];
        }
        x
    }
}

/// Cholesky factor `L` with `L·Lᵀ = D`.
pub fn cholesky(d: &SymmetricTensor) -> Result<LowerTriangular, TensorError> {
    let dim = d.dim;
    let mut l = LowerTriangular { dim, m: [[0.0; 3]; 3] };
    for c in 0..dim {
        let mut pivot = d.get(c, c);
        for k in 0..c {
            pivot -= l.m[c][k] * l.m[c][k];
        }
        if !(pivot > 0.0) {
            return Err(TensorError::NotPositiveDefinite { pivot: c, value: pivot });
        }
        let diag = pivot.sqrt();
        l.m[c][c] = diag;
        for r in (c + 1)..dim {
            let mut acc = d.get(r, c);
            for k in 0..c {
                acc -= l.m[r][k] * l.m[c][k];
            }
            l.m[r][c] = acc / diag;
        }
    }
    Ok(l)
}

/// Row-major dense `n`×`n` matrix with `n ≤ 6`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub a: [[f64; MAX_SYSTEM]; MAX_SYSTEM],
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_SYSTEM, "dense systems are limited to {MAX_SYSTEM} unknowns");
        DenseMatrix { n, a: [[0.0; MAX_SYSTEM]; MAX_SYSTEM] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for k in 0..n {
            m.a[k][k] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let mut m = Self::zeros(rows.len());
        for (r, row) in rows.iter().enumerate() {
            m.a[r][..row.len()].copy_from_slice(row);
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for r in 0..self.n {
            for c in 0..self.n {
                t.a[c][r] = self.a[r][c];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64]) -> [f64; MAX_SYSTEM] {
        let mut out = [0.0; MAX_SYSTEM];
        for (r, o) in out.iter_mut().enumerate().take(self.n) {
            *o = (0..self.n).map(|c| self.a[r][c] * x[c]).sum();
        }
        out
    }

    /// Rank-one update `self += w · u vᵀ`.
    pub fn add_outer(&mut self, w: f64, u: &[f64], v: &[f64]) {
        for r in 0..self.n {
            let wu = w * u[r];
            for c in 0..self.n {
                self.a[r][c] += wu * v[c];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        let mut a: f64 = 0.0;
        for r in 0..self.n {
            for c in 0..self.n {
                a = a.max(self.a[r][c].abs());
            }
        }
        a
    }

    pub fn norm_one(&self) -> f64 {
        (0..self.n).map(|c| (0..self.n).map(|r| self.a[r][c].abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// LU factorization with partial pivoting, `P·M = L·U`.
#[derive(Clone, Copy, Debug)]
pub struct LuFactors {
    n: usize,
    lu: [[f64; MAX_SYSTEM]; MAX_SYSTEM],
    perm: [usize; MAX_SYSTEM],
}

impl LuFactors {
    pub fn factor(m: &DenseMatrix) -> Result<Self, TensorError> {
        let n = m.n;
        let scale = m.max_abs();
        let threshold = PIVOT_TOLERANCE * scale;
        let mut lu = m.a;
        let mut perm = [0usize; MAX_SYSTEM];
        for (k, p) in perm.iter_mut().enumerate() {
            *p = k;
        }
        for k in 0..n {
            let (mut best, mut best_abs) = (k, lu[k][k].abs());
            for r in (k + 1)..n {
                if lu[r][k].abs() > best_abs {
                    best = r;
                    best_abs = lu[r][k].abs();
                }
            }
            if !(best_abs > threshold) {
                return Err(TensorError::SingularSystem { column: k });
            }
            if best != k {
                lu.swap(best, k);
                perm.swap(best, k);
            }
            let pivot = lu[k][k];
            for r in (k + 1)..n {
                let f = lu[r][k] / pivot;
                lu[r][k] = f;
                for c in (k + 1)..n {
                    lu[r][c] -= f * lu[k][c];
                }
            }
        }
        Ok(LuFactors { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> [f64; MAX_SYSTEM] {
        let n = self.n;
        let mut x = [0.0; MAX_SYSTEM];
        for r in 0..n {
            let mut acc = b[self.perm[r]];
            for c in 0..r {
                acc -= self.lu[r][c] * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in (r + 1)..n {
                acc -= self.lu[r][c] * x[c];
            }
            x[r] = acc / self.lu[r][r];
        }
        x
    }

    /// Solves `Mᵀ x = b` with the same factors.
    pub fn solve_transposed(&self, b: &[f64]) -> [f64; MAX_SYSTEM] {
        let n = self.n;
        // Uᵀ y = b
        let mut y = [0.0; MAX_SYSTEM];
        for r in 0..n {
            let mut acc = b[r];
            for c in 0..r {
                acc -= self.lu[c][r] * y[c];
            }
            y[r] = acc / self.lu[r][r];
        }
        // Lᵀ z = y
        for r in (0..n).rev() {
            let mut acc = y[r];
            for c in (r + 1)..n {
                acc -= self.lu[c][r] * y[c];
            }
            y[r] = acc;
        }
        let mut x = [0.0; MAX_SYSTEM];
        for r in 0..n {
            x[self.perm[r]] = y[r];
        }
        x
    }

    /// Hager–Higham estimate of ‖M⁻¹‖₁.
    pub fn inverse_norm_one_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = [0.0; MAX_SYSTEM];
        x[..n].fill(1.0 / n as f64);
        let mut estimate = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            estimate = y[..n].iter().map(|v| v.abs()).sum::<f64>();
            let mut sign = [0.0; MAX_SYSTEM];
            for k in 0..n {
                sign[k] = if y[k] >= 0.0 { 1.0 } else { -1.0 };
            }
            let z = self.solve_transposed(&sign);
            let (mut jmax, mut zmax) = (0, z[0].abs());
            for (k, zk) in z.iter().enumerate().take(n).skip(1) {
                if zk.abs() > zmax {
                    jmax = k;
                    zmax = zk.abs();
                }
            }
            let ztx: f64 = (0..n).map(|k| z[k] * x[k]).sum();
            if zmax <= ztx {
                break;
            }
            x = [0.0; MAX_SYSTEM];
            x[jmax] = 1.0;
        }
        // Higham's alternative vector guards against pathological cancellations.
        let mut alt = [0.0; MAX_SYSTEM];
        for (k, a) in alt.iter_mut().enumerate().take(n) {
            let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
            *a = sgn * (1.0 + k as f64 / (n.max(2) - 1) as f64);
        }
        let y = self.solve(&alt);
        let alt_est = 2.0 * y[..n].iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        estimate.max(alt_est)
    }
}

/// Solution of a dense system together with a 1-norm condition estimate.
#[derive(Clone, Copy, Debug)]
pub struct DenseSolution {
    pub x: [f64; MAX_SYSTEM],
    pub condition: f64,
}

/// Solves `M·x = b` by partially pivoted elimination.
pub fn solve_dense(m: &DenseMatrix, b: &[f64]) -> Result<DenseSolution, TensorError> {
    let lu = LuFactors::factor(m)?;
    let x = lu.solve(b);
    let condition = m.norm_one() * lu.inverse_norm_one_estimate();
    Ok(DenseSolution { x, condition })
}

/// Estimate of κ₁(M); `+∞` for singular matrices.
pub fn condition_estimate(m: &DenseMatrix) -> f64 {
    match LuFactors::factor(m) {
        Ok(lu) => m.norm_one() * lu.inverse_norm_one_estimate(),
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn frob_rel(a: &SymmetricTensor, b: &SymmetricTensor) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for r in 0..a.dim {
            for c in 0..a.dim {
                num += (a.get(r, c) - b.get(r, c)).powi(2);
                den += b.get(r, c).powi(2);
            }
        }
        (num / den).sqrt()
    }

    #[test]
    fn cholesky_of_diagonal_tensor() {
        let l = cholesky(&SymmetricTensor::diagonal(&[0.1, 0.01])).unwrap();
        assert_relative_eq!(l.m[0][0], 0.1f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(l.m[1][1], 0.1, epsilon = 1e-15);
        assert_eq!(l.m[1][0], 0.0);
        assert_relative_eq!(l.m[0][0], 0.316228, epsilon = 1e-6);
    }

    #[test]
    fn cholesky_of_identity_is_identity() {
        for dim in 1..=3 {
            let l = cholesky(&SymmetricTensor::identity(dim)).unwrap();
            assert_eq!(l, LowerTriangular::identity(dim));
        }
    }

    #[test]
    fn cholesky_of_full_tensor() {
        let d = SymmetricTensor::new_2d(0.1, 0.03, 0.03);
        let l = cholesky(&d).unwrap();
        assert_relative_eq!(l.m[0][0], 0.316228, epsilon = 1e-6);
        assert_relative_eq!(l.m[1][0], 0.094868, epsilon = 1e-6);
        assert_relative_eq!(l.m[1][1], 0.144914, epsilon = 1e-6);
        assert!(frob_rel(&l.reconstruct(), &d) < 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let d = SymmetricTensor::new_2d(1.0, 2.0, 1.0);
        assert!(matches!(cholesky(&d), Err(TensorError::NotPositiveDefinite { .. })));
        let d = SymmetricTensor::diagonal(&[1.0, -1e-3, 2.0]);
        assert!(matches!(cholesky(&d), Err(TensorError::NotPositiveDefinite { pivot: 1, .. })));
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let s = solve_dense(&DenseMatrix::identity(3), &[4.0, 2.0, 0.0]).unwrap();
        assert_eq!(&s.x[..3], &[4.0, 2.0, 0.0]);
        assert_relative_eq!(s.condition, 1.0, epsilon = 1e-14);
        let m = DenseMatrix::from_rows(&[&[2.0, 0.0, 0.0], &[0.0, 4.0, 0.0], &[0.0, 0.0, 8.0]]);
        let s = solve_dense(&m, &[2.0, 4.0, 8.0]).unwrap();
        for v in &s.x[..3] {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn solve_six_by_six_with_known_solution() {
        let mut m = DenseMatrix::zeros(6);
        for r in 0..6 {
            for c in 0..6 {
                m.a[r][c] = ((r * 7 + c * 3) % 5) as f64 * 0.3 + if r == c { 4.0 } else { 0.0 };
            }
        }
        let h = [1.5, -2.0, 0.25, 3.0, -0.75, 0.1];
        let b = m.mul_vec(&h);
        let s = solve_dense(&m, &b[..6]).unwrap();
        for k in 0..6 {
            assert!((s.x[k] - h[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn transposed_solve_matches_transpose() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0, 0.5], &[0.0, 3.0, 1.0], &[4.0, 1.0, 2.0]]);
        let lu = LuFactors::factor(&m).unwrap();
        let b = [1.0, -1.0, 2.0];
        let x = lu.solve_transposed(&b);
        let back = m.transpose().mul_vec(&x);
        for k in 0..3 {
            assert_relative_eq!(back[k], b[k], epsilon = 1e-13);
        }
    }

    #[test]
    fn condition_of_simple_matrices() {
        assert_relative_eq!(condition_estimate(&DenseMatrix::identity(3)), 1.0, epsilon = 1e-14);
        let m = DenseMatrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1e-8, 0.0], &[0.0, 0.0, 1.0]]);
        let k = condition_estimate(&m);
        assert!(k > 1e7 && k < 1e9, "{k}");
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], &[0.0, 1.0, 1.0]]);
        assert!(condition_estimate(&m).is_infinite());
        assert!(matches!(solve_dense(&m, &[1.0, 1.0, 1.0]), Err(TensorError::SingularSystem { .. })));
    }

    #[test]
    fn symmetric_eigenvalues() {
        let t = SymmetricTensor::new_2d(0.1, 0.03, 0.03);
        let tr = t.trace();
        let det = t.determinant();
        let (lo, hi) = (t.min_eigenvalue(), t.max_eigenvalue());
        assert_relative_eq!(lo + hi, tr, epsilon = 1e-15);
        assert_relative_eq!(lo * hi, det, epsilon = 1e-15);
        let mut t3 = SymmetricTensor::diagonal(&[3.0, 1.0, 2.0]);
        t3.set(0, 1, 0.5);
        t3.set(1, 2, -0.25);
        let m = t3.to_matrix();
        for lambda in [t3.min_eigenvalue(), t3.max_eigenvalue()] {
            let mut shifted = m;
            for k in 0..3 {
                shifted.m[k][k] -= lambda;
            }
            assert!(shifted.determinant().abs() < 1e-12);
        }
    }

    #[test]
    fn square_inverse() {
        let m = SquareMatrix::from_rows(3, &[&[2.0, 1.0, 0.0], &[0.5, 3.0, 1.0], &[0.0, 1.0, 4.0]]);
        let inv = m.inverse().unwrap();
        let id = m.mul_mat(&inv);
        for r in 0..3 {
            for c in 0..3 {
                let e = if r == c { 1.0 } else { 0.0 };
                assert!((id.m[r][c] - e).abs() < 1e-14);
            }
        }
        assert!(SquareMatrix::zeros(2).inverse().is_none());
    }

    fn spd_strategy(dim: usize) -> impl Strategy<Value = SymmetricTensor> {
        (prop::collection::vec(-2.0f64..2.0, dim * dim), 1e-3f64..1.0).prop_map(move |(a, eps)| {
            let mut t = SymmetricTensor::zeros(dim);
            for r in 0..dim {
                for c in r..dim {
                    let v: f64 = (0..dim).map(|k| a[k * dim + r] * a[k * dim + c]).sum();
                    t.set(r, c, v + if r == c { eps } else { 0.0 });
                }
            }
            t
        })
    }

    proptest! {
        #[test]
        fn cholesky_reconstructs_spd_2d(d in spd_strategy(2)) {
            let l = cholesky(&d).unwrap();
            prop_assert!(frob_rel(&l.reconstruct(), &d) < 1e-12);
        }

        #[test]
        fn cholesky_reconstructs_spd_3d(d in spd_strategy(3)) {
            let l = cholesky(&d).unwrap();
            prop_assert!(frob_rel(&l.reconstruct(), &d) < 1e-12);
            for k in 0..3 {
                prop_assert!(l.m[k][k] > 0.0);
            }
        }

        #[test]
        fn solve_recovers_known_vector(
            entries in prop::collection::vec(-1.0f64..1.0, 36),
            h in prop::collection::vec(-10.0f64..10.0, 6),
        ) {
            let mut m = DenseMatrix::zeros(6);
            for r in 0..6 {
                for c in 0..6 {
                    m.a[r][c] = entries[r * 6 + c] + if r == c { 3.0 } else { 0.0 };
                }
            }
            prop_assume!(condition_estimate(&m) < 1e6);
            let b = m.mul_vec(&h);
            let s = solve_dense(&m, &b[..6]).unwrap();
            for k in 0..6 {
                prop_assert!((s.x[k] - h[k]).abs() < 1e-9);
            }
        }

        #[test]
        fn condition_estimate_within_factor_ten(entries in prop::collection::vec(-1.0f64..1.0, 9)) {
            let mut m = DenseMatrix::zeros(3);
            let mut sq = SquareMatrix::zeros(3);
            for r in 0..3 {
                for c in 0..3 {
                    m.a[r][c] = entries[r * 3 + c];
                    sq.m[r][c] = entries[r * 3 + c];
                }
            }
            let inv = sq.inverse();
            prop_assume!(inv.is_some());
            let inv = inv.unwrap();
            let inv_norm = (0..3).map(|c| (0..3).map(|r| inv.m[r][c].abs()).sum::<f64>()).fold(0.0, f64::max);
            let exact = m.norm_one() * inv_norm;
            let est = condition_estimate(&m);
            prop_assert!(est <= exact * (1.0 + 1e-8) && est >= exact / 10.0, "est {} exact {}", est, exact);
        }
    }
}
