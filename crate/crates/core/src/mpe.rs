// SPDX-License-Identifier: Apache-2.0

//! Minimal polynomial extrapolation (MPE) of vector sequences.
//!
//! From `x_0, ..., x_{k+1}` with differences `d_i = x_{i+1} - x_i`, MPE finds
//! `c_0, ..., c_{k-1}` minimizing `|sum_{i<k} c_i d_i + d_k|`, sets `c_k = 1`,
//! normalizes `g = c / sum(c)` and returns `sum_{i<=k} g_i x_i`. For an affine
//! map whose error has a minimal polynomial of degree at most `k`, the result
//! is the fixed point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpeConfig {
    /// Number `k` of difference vectors combined per cycle; `k + 1` base steps are taken.
    pub width: usize,
    /// Seed the next cycle from the extrapolated vector.
    pub restart: bool,
    /// Relative singular-value cutoff for the least-squares solve.
    pub ls_tolerance: f64,
    /// Reject extrapolants that raise the residual.
    pub safeguard: bool,
}

impl Default for MpeConfig {
    fn default() -> Self {
        Self {
            width: 6,
            restart: true,
            ls_tolerance: 1e-13,
            safeguard: true,
        }
    }
}

impl MpeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::Config("MPE width must be at least 1".into()));
        }
        if !(self.ls_tolerance > 0.0 && self.ls_tolerance < 1.0) {
            return Err(Error::Config(format!(
                "MPE least-squares tolerance must lie in (0, 1), got {}",
                self.ls_tolerance
            )));
        }
        Ok(())
    }
}

/// Extrapolated limit of `vectors = [x_0, ..., x_{k+1}]`.
pub fn mpe_extrapolate(vectors: &[Vec<f64>], ls_tolerance: f64) -> Result<Vec<f64>> {
    if vectors.len() < 3 {
        return Err(Error::Argument(format!(
            "MPE needs at least 3 vectors, got {}",
            vectors.len()
        )));
    }
    let dim = vectors[0].len();
    if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Argument(
            "MPE vectors must share a nonzero dimension".into(),
        ));
    }
    let k = vectors.len() - 2;
    let diffs = DMatrix::from_fn(dim, k + 1, |r, c| vectors[c + 1][r] - vectors[c][r]);
    if diffs.iter().all(|&d| d == 0.0) {
        return Ok(vectors[0].clone());
    }

    let basis = diffs.columns(0, k).into_owned();
    let rhs: DVector<f64> = -diffs.column(k);
    let svd = basis.svd(true, true);
    let cutoff = ls_tolerance * svd.singular_values.max();
    let mut coeffs: Vec<f64> = match svd.solve(&rhs, cutoff.max(f64::MIN_POSITIVE)) {
        Ok(sol) => sol.iter().copied().collect(),
        Err(e) => return Err(Error::Consistency(format!("MPE least squares failed: {e}"))),
    };
    coeffs.push(1.0);
    let total: f64 = coeffs.iter().sum();
    let mass: f64 = coeffs.iter().map(|c| c.abs()).sum();
    if !total.is_finite() || total.abs() <= 1e-14 * mass {
        return Err(Error::Consistency(
            "MPE coefficients sum to zero; sequence has no extrapolated limit".into(),
        ));
    }
    let mut out = vec![0.0; dim];
    for (x, c) in vectors.iter().zip(&coeffs) {
        let g = c / total;
        out.iter_mut().zip(x).for_each(|(o, xi)| *o += g * xi);
    }
    Ok(out)
}

/// Result of one extrapolation cycle.
#[derive(Debug, Clone)]
pub struct CycleOutcome {
    pub state: Vec<f64>,
    /// Whether the extrapolated vector was kept.
    pub accepted: bool,
    /// Residuals of the seed, each base iterate, and the extrapolant.
    pub base_residuals: Vec<f64>,
    pub extrapolated_residual: Option<f64>,
}

/// Runs `width + 1` steps of `step` from `x`, extrapolates, and keeps the
/// extrapolant unless the safeguard finds it raises the residual above both
/// the seed and the last plain iterate.
pub fn accelerated_solve_cycle<S, R>(
    mut step: S,
    residual: R,
    x: &[f64],
    cfg: &MpeConfig,
) -> Result<CycleOutcome>
where
    S: FnMut(&[f64]) -> Result<Vec<f64>>,
    R: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    let mut seq = vec![x.to_vec()];
    let mut residuals = vec![residual(x)];
    for _ in 0..=cfg.width {
        let next = step(seq.last().unwrap())?;
        residuals.push(residual(&next));
        seq.push(next);
    }
    let last = seq.last().unwrap().clone();
    let last_res = *residuals.last().unwrap();
    let Ok(candidate) = mpe_extrapolate(&seq, cfg.ls_tolerance) else {
        return Ok(CycleOutcome {
            state: last,
            accepted: false,
            base_residuals: residuals,
            extrapolated_residual: None,
        });
    };
    let cand_res = residual(&candidate);
    let bound = residuals[0].min(last_res) * (1.0 + 1e-12);
    let accepted = cand_res.is_finite() && (!cfg.safeguard || cand_res <= bound);
    Ok(CycleOutcome {
        state: if accepted { candidate } else { last },
        accepted,
        base_residuals: residuals,
        extrapolated_residual: Some(cand_res),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_sequence() {
        let v = vec![1.0, -2.0, 3.5];
        let out = mpe_extrapolate(&[v.clone(), v.clone(), v.clone()], 1e-13).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn geometric_scalar_sequence() {
        let (limit, ratio) = (0.75, 0.6);
        let xs: Vec<Vec<f64>> = (0..3).map(|i| vec![limit + f64::powi(ratio, i)]).collect();
        let out = mpe_extrapolate(&xs, 1e-13).unwrap();
        assert_relative_eq!(out[0], limit, epsilon = 1e-14);
    }

    #[test]
    fn too_few_vectors() {
        assert!(mpe_extrapolate(&[vec![1.0], vec![2.0]], 1e-13).is_err());
        assert!(mpe_extrapolate(&[vec![1.0], vec![2.0], vec![1.0, 2.0]], 1e-13).is_err());
    }

    #[test]
    fn converged_cycle_is_stationary() {
        let x = vec![2.0, -1.0];
        let out = accelerated_solve_cycle(
            |v: &[f64]| Ok(v.to_vec()),
            |_| 0.0,
            &x,
            &MpeConfig::default(),
        )
        .unwrap();
        assert_eq!(out.state, x);
    }

    #[test]
    fn invalid_config() {
        let cfg = MpeConfig {
            width: 0,
            ..MpeConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
