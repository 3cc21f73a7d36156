//! Resolution studies: error per spacing and the fitted order.

use anyhow::{bail, Result};
use asph_core::operators::{hessian, laplacian_trace};
use asph_core::solvers::{rmse, run_contaminant_benchmark, run_rectangle_benchmark, RectangleConfig};
use asph_core::{build_neighbor_lists, compute_correction_matrices, generate_lattice, LatticeSpec};

use crate::config::{Scenario, ScenarioConfig};
use crate::scenario::{contaminant_config, rectangle_error, run_patch};

/// Errors below this are treated as exact.
pub const ERROR_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    /// Hessian trace of `sin(πx)·sin(πy)` on interior particles.
    Sine,
    /// Hessian trace of `x² + y²`.
    Quadratic,
    Scenario(Scenario),
}

impl std::str::FromStr for Study {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sine" => Ok(Study::Sine),
            "quadratic" => Ok(Study::Quadratic),
            other => other.parse().map(Study::Scenario).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// `(spacing, error)` per resolution.
    pub rows: Vec<(f64, f64)>,
    /// Least-squares slope of `log error` against `log spacing`; `None`
    /// when every error is at the floor.
    pub order: Option<f64>,
}

impl ConvergenceReport {
    pub fn order_label(&self) -> String {
        self.order.map_or_else(|| "exact".to_owned(), |o| format!("{o:.4}"))
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fitted_order(rows: &[(f64, f64)]) -> Option<f64> {
    if rows.iter().all(|r| r.1 <= ERROR_FLOOR) || rows.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|(x, y)| (x.ln(), y.max(ERROR_FLOOR).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Normalized error of the Laplacian of `sin(πx)sin(πy)` on particles at
/// least `margin` from the walls, and the maximum absolute error there.
pub fn sine_laplacian_error(dp: f64, margin: f64) -> Result<(f64, f64)> {
    use std::f64::consts::PI;
    let ps = generate_lattice(&LatticeSpec::new(&[0.0, 0.0], &[1.0, 1.0], &[dp, dp])?)?;
    let nl = build_neighbor_lists(&ps);
    let b = compute_correction_matrices(&ps, &nl);
    let phi: Vec<f64> = ps.positions().iter().map(|p| (PI * p[0]).sin() * (PI * p[1]).sin()).collect();
    let lap = laplacian_trace(&hessian(&ps, &nl, &b, &phi).values);
    let inside: Vec<usize> = (0..ps.len())
        .filter(|&i| (0..2).all(|k| ps.position(i)[k] >= margin && ps.position(i)[k] <= 1.0 - margin))
        .collect();
    let numeric: Vec<f64> = inside.iter().map(|&i| lap[i]).collect();
    let exact: Vec<f64> = inside.iter().map(|&i| -2.0 * PI * PI * phi[i]).collect();
    let max = numeric.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((rmse(&numeric, &exact)?, max))
}

/// Runs `study` at each spacing. Spacings must halve from one entry to the
/// next; for the rectangle they are vertical spacings `0.1 / N_y`.
pub fn convergence_study(study: Study, base: &ScenarioConfig, spacings: &[f64]) -> Result<ConvergenceReport> {
    if spacings.len() < 3 {
        bail!("a convergence study needs at least 3 resolutions, got {}", spacings.len());
    }
    for w in spacings.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            bail!("spacings must halve between resolutions ({} -> {})", w[0], w[1]);
        }
    }
    let mut rows = Vec::with_capacity(spacings.len());
    for &dp in spacings {
        let err = match study {
            Study::Sine => sine_laplacian_error(dp, 0.2)?.0,
            Study::Quadratic => {
                let r = run_patch(dp, 1.0)?;
                rmse(&r.rate, &vec![4.0; r.rate.len()])?
            }
            Study::Scenario(Scenario::Rectangle) => {
                let ny = (0.1 / dp).round() as usize;
                let cfg = RectangleConfig {
                    ny,
                    ratio: base.ratio,
                    t_end: base.snapshots.iter().copied().filter(|t| *t > 0.0).fold(0.0, f64::max).max(1e-3),
                    snapshot_times: base.snapshots.clone(),
                    dt_safety: base.dt_safety,
                    ..Default::default()
                };
                let run = run_rectangle_benchmark(&cfg)?;
                rectangle_error(&run, cfg.t_end)?
            }
            Study::Scenario(Scenario::GaussianDiag | Scenario::GaussianFull) => {
                let mut cfg = base.clone();
                cfg.dp = dp;
                run_contaminant_benchmark(&contaminant_config(&cfg))?.rmse()?
            }
            Study::Scenario(s) => bail!("no convergence study for scenario `{s}`"),
        };
        rows.push((dp, err));
    }
    let order = fitted_order(&rows);
    Ok(ConvergenceReport { rows, order })
}
