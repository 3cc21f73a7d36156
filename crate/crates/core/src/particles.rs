//! Particle containers and lattice generation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kernel::{SmoothingTensor, DEFAULT_SMOOTHING_RATIO};
use crate::tensor::SpatialVector;

/// Per-particle diagnostics raised by operator passes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParticleFlags {
    pub singular_correction: bool,
    pub hessian_fallback: bool,
}

impl ParticleFlags {
    pub fn any(&self) -> bool {
        self.singular_correction || self.hessian_fallback
    }
}

/// Struct-of-arrays particle storage. Positions, volumes and smoothing
/// tensors are fixed after construction; named scalar fields can be added
/// and replaced.
#[derive(Clone, Debug)]
pub struct ParticleSet {
    dim: usize,
    positions: Vec<SpatialVector>,
    volumes: Vec<f64>,
    smoothing: Vec<SmoothingTensor>,
    fields: BTreeMap<String, Vec<f64>>,
    flags: Vec<ParticleFlags>,
}

impl ParticleSet {
    pub fn new(
        dim: usize,
        positions: Vec<SpatialVector>,
        volumes: Vec<f64>,
        smoothing: Vec<SmoothingTensor>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let n = positions.len();
        for len in [volumes.len(), smoothing.len()] {
            if len != n {
                return Err(Error::LengthMismatch { left: n, right: len });
            }
        }
        if let Some(v) = volumes.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("particle volume must be positive, got {v}")));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("non-finite particle position".into()));
        }
        if let Some(g) = smoothing.iter().find(|g| g.dim() != dim) {
            return Err(Error::UnsupportedDimension(g.dim()));
        }
        Ok(ParticleSet {
            dim,
            positions,
            volumes,
            smoothing,
            fields: BTreeMap::new(),
            flags: vec![Default::default(); n],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[SpatialVector] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> SpatialVector {
        self.positions[i]
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn smoothing(&self) -> &[SmoothingTensor] {
        &self.smoothing
    }

    pub fn flags(&self) -> &[ParticleFlags] {
        &self.flags
    }

    pub fn flags_mut(&mut self) -> &mut [ParticleFlags] {
        &mut self.flags
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|f| f.any()).count()
    }

    pub fn field(&self, name: &str) -> Result<&[f64]> {
        self.fields.get(name).map(Vec::as_slice).ok_or_else(|| Error::UnknownField(name.to_owned()))
    }

    pub fn field_mut(&mut self, name: &str) -> Result<&mut Vec<f64>> {
        self.fields.get_mut(name).ok_or_else(|| Error::UnknownField(name.to_owned()))
    }

    pub fn set_field(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch { left: self.len(), right: values.len() });
        }
        self.fields.insert(name.to_owned(), values);
        Ok(())
    }

    /// Evaluates `f` at every particle position and stores the result.
    pub fn set_field_with(&mut self, name: &str, f: impl Fn(&SpatialVector) -> f64) {
        let values = self.positions.iter().map(f).collect();
        self.fields.insert(name.to_owned(), values);
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.keys().map(String::as_str)
    }

    /// Index of the particle closest to `point`. Distances equal up to
    /// rounding count as ties, which go to the lowest index.
    pub fn nearest(&self, point: &SpatialVector) -> Option<usize> {
        let dist: Vec<f64> = self.positions.iter().map(|p| (*p - *point).norm()).collect();
        let best = dist.iter().copied().fold(f64::INFINITY, f64::min);
        let tol = 1e-9 * best.max(point.norm()).max(f64::MIN_POSITIVE);
        dist.iter().position(|d| *d <= best + tol)
    }

    /// Σ V_i f_i.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.volumes.iter().zip(values).map(|(v, f)| v * f).sum()
    }
}

/// Regular lattice description: bounds and spacing per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub dim: usize,
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub spacing: [f64; 3],
    /// Smoothing length divided by spacing, applied per axis.
    pub smoothing_ratio: f64,
}

impl LatticeSpec {
    pub fn new(lower: &[f64], upper: &[f64], spacing: &[f64]) -> Result<Self> {
        let dim = lower.len();
        if !(1..=3).contains(&dim) || upper.len() != dim || spacing.len() != dim {
            return Err(Error::InvalidLattice("bounds and spacing must share a dimension in 1..=3".into()));
        }
        let mut spec = LatticeSpec {
            dim,
            lower: [0.0; 3],
            upper: [0.0; 3],
            spacing: [0.0; 3],
            smoothing_ratio: DEFAULT_SMOOTHING_RATIO,
        };
        for k in 0..dim {
            if !(upper[k] > lower[k]) {
                return Err(Error::InvalidLattice(format!("degenerate bounds on axis {k}")));
            }
            if !(spacing[k] > 0.0) {
                return Err(Error::InvalidLattice(format!("spacing on axis {k} must be positive")));
            }
            spec.lower[k] = lower[k];
            spec.upper[k] = upper[k];
            spec.spacing[k] = spacing[k];
        }
        Ok(spec)
    }

    /// Rectangle `[0, lx] × [0, ly]` with `ny` rows and `dp_x = ratio · dp_y`.
    pub fn anisotropic_2d(lx: f64, ly: f64, ny: usize, ratio: f64) -> Result<Self> {
        if !(ratio >= 1.0) {
            return Err(Error::InvalidLattice(format!("anisotropic ratio must be >= 1, got {ratio}")));
        }
        if ny == 0 {
            return Err(Error::EmptyDomain { axis: 1 });
        }
        let dp_y = ly / ny as f64;
        Self::new(&[0.0, 0.0], &[lx, ly], &[ratio * dp_y, dp_y])
    }

    pub fn with_smoothing_ratio(mut self, ratio: f64) -> Self {
        self.smoothing_ratio = ratio;
        self
    }

    /// `dp_x / dp_y` for 2D lattices.
    pub fn anisotropic_ratio(&self) -> f64 {
        self.spacing[0] / self.spacing[1]
    }

    pub fn counts(&self) -> [usize; 3] {
        let mut n = [1; 3];
        for (k, nk) in n.iter_mut().enumerate().take(self.dim) {
            let cells = (self.upper[k] - self.lower[k]) / self.spacing[k];
            *nk = (cells + 1e-9).floor() as usize;
        }
        n
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|k| self.upper[k] - self.lower[k]).product()
    }
}

/// Fills the box with particles at cell centers, offset half a spacing from
/// the lower bound on every axis.
pub fn generate_lattice(spec: &LatticeSpec) -> Result<ParticleSet> {
    let counts = spec.counts();
    for (axis, n) in counts.iter().enumerate().take(spec.dim) {
        if *n == 0 {
            return Err(Error::EmptyDomain { axis });
        }
    }
    let total: usize = counts.iter().product();
    let volume: f64 = spec.spacing[..spec.dim].iter().product();
    let h: Vec<f64> = spec.spacing[..spec.dim].iter().map(|dp| spec.smoothing_ratio * dp).collect();
    let g = SmoothingTensor::axis_aligned(&h)?;
    let mut positions = Vec::with_capacity(total);
    for ix in 0..counts[0] {
        for iy in 0..counts[1] {
            for iz in 0..counts[2] {
                let mut p = SpatialVector::ZERO;
                for (k, idx) in [ix, iy, iz].into_iter().enumerate().take(spec.dim) {
                    p[k] = spec.lower[k] + (idx as f64 + 0.5) * spec.spacing[k];
                }
                positions.push(p);
            }
        }
    }
    ParticleSet::new(spec.dim, positions, vec![volume; total], vec![g; total])
}
