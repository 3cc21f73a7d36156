use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::particles::ParticleSet;
use crate::tensor::{SpatialVector, SymmetricTensor};

/// Normalized error `‖ref − num‖₂ / ‖ref‖₂`.
pub fn rmse(numeric: &[f64], reference: &[f64]) -> Result<f64> {
    if numeric.len() != reference.len() {
        return Err(Error::LengthMismatch { left: numeric.len(), right: reference.len() });
    }
    let den: f64 = reference.iter().map(|r| r * r).sum();
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    let num: f64 = numeric.iter().zip(reference).map(|(n, r)| (r - n) * (r - n)).sum();
    Ok((num / den).sqrt())
}

/// Mass, centroid and central second moment of a concentration field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldMoments {
    pub mass: f64,
    pub centroid: SpatialVector,
    pub covariance: SymmetricTensor,
}

/// Volume- and concentration-weighted centroid and covariance.
pub fn field_covariance(ps: &ParticleSet, field: &[f64]) -> Result<FieldMoments> {
    let dim = ps.dim();
    let mass = ps.integrate(field);
    if !(mass > 0.0) {
        return Err(Error::NonPositiveMass);
    }
    let mut centroid = SpatialVector::ZERO;
    for ((p, v), c) in ps.positions().iter().zip(ps.volumes()).zip(field) {
        centroid += *p * (v * c / mass);
    }
    let mut cov = SymmetricTensor::zeros(dim);
    for r in 0..dim {
        for k in r..dim {
            let s: f64 = ps
                .positions()
                .iter()
                .zip(ps.volumes())
                .zip(field)
                .map(|((p, v), c)| v * c * (p[r] - centroid[r]) * (p[k] - centroid[k]))
                .sum();
            cov.set(r, k, s / mass);
        }
    }
    Ok(FieldMoments { mass, centroid, covariance: cov })
}

/// Run summary written as `key = value` lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsSummary {
    pub particle_count: usize,
    pub dt: f64,
    pub steps: usize,
    pub rmse: f64,
    pub min_field: f64,
    pub max_field: f64,
    pub flagged_particles: usize,
    /// Scenario-specific entries, written after the standard keys.
    pub extra: Vec<(String, String)>,
}

impl MetricsSummary {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.extra.push((key.to_owned(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "particle_count = {}", self.particle_count);
        let _ = writeln!(s, "dt = {:.16e}", self.dt);
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "rmse = {:.16e}", self.rmse);
        let _ = writeln!(s, "min_field = {:.16e}", self.min_field);
        let _ = writeln!(s, "max_field = {:.16e}", self.max_field);
        let _ = writeln!(s, "flagged_particles = {}", self.flagged_particles);
        for (k, v) in &self.extra {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|source| Error::Io { path: path.display().to_string(), source })
    }

    /// Parses `key = value` lines back into pairs, in file order.
    pub fn parse(text: &str) -> Vec<(String, String)> {
        text.lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
            .collect()
    }
}
