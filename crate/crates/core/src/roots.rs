// SPDX-License-Identifier: Apache-2.0

//! Real roots of real polynomials: companion-matrix eigenvalues polished by
//! Newton's method on the original coefficients.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative residual bound for accepting a polished root.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealRoot {
    pub value: f64,
    /// `|P(value)|`.
    pub residual: f64,
    /// Number of eigenvalues that collapsed onto this root.
    pub multiplicity: usize,
}

/// `P(z)` for ascending coefficients `a_0 + a_1 z + ...`.
pub fn horner(coeffs: &[f64], z: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, a| acc * z + a)
}

/// `(P(z), P'(z))` in one pass.
fn horner_with_derivative(coeffs: &[f64], z: f64) -> (f64, f64) {
    coeffs
        .iter()
        .rev()
        .fold((0.0, 0.0), |(p, dp), a| (p * z + a, dp * z + p))
}

/// Natural magnitude of the terms of `P` at `z`, floored at 1.
pub fn evaluation_scale(coeffs: &[f64], z: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| a.abs() * z.abs().powi(k as i32))
        .sum::<f64>()
        .max(1.0)
}

fn polish(coeffs: &[f64], start: f64) -> f64 {
    let mut z = start;
    let mut best = (horner(coeffs, z).abs(), z);
    for _ in 0..100 {
        let (p, dp) = horner_with_derivative(coeffs, z);
        if p == 0.0 || dp == 0.0 || !dp.is_finite() {
            break;
        }
        let next = z - p / dp;
        if !next.is_finite() {
            break;
        }
        let r = horner(coeffs, next).abs();
        if r < best.0 {
            best = (r, next);
        }
        if (next - z).abs() <= 1e-16 * (1.0 + z.abs()) {
            break;
        }
        z = next;
    }
    best.1
}

/// All real roots of the polynomial with ascending coefficients `coeffs`,
/// sorted ascending.
///
/// Complex-conjugate pairs are discarded. Roots that cannot be polished to a
/// residual below `ROOT_RESIDUAL_TOL` times the evaluation scale are dropped.
pub fn real_roots(coeffs: &[f64]) -> Result<Vec<RealRoot>> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Argument(
            "polynomial coefficients must be finite".into(),
        ));
    }
    let Some(top) = coeffs.iter().rposition(|&c| c != 0.0) else {
        return Err(Error::Argument("polynomial is identically zero".into()));
    };
    let trimmed = &coeffs[..=top];
    let zero_mult = trimmed.iter().position(|&c| c != 0.0).unwrap_or(0);
    let reduced = &trimmed[zero_mult..];
    let degree = reduced.len() - 1;

    let mut candidates: Vec<f64> = Vec::new();
    if degree == 1 {
        candidates.push(-reduced[0] / reduced[1]);
    } else if degree > 1 {
        let lead = reduced[degree];
        let mut companion = DMatrix::<f64>::zeros(degree, degree);
        for i in 1..degree {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..degree {
            companion[(i, degree - 1)] = -reduced[i] / lead;
        }
        for ev in companion.complex_eigenvalues().iter() {
            if ev.im.abs() <= 1e-5 * (1.0 + ev.re.abs()) {
                candidates.push(ev.re);
            }
        }
    }

    let mut roots: Vec<RealRoot> = Vec::new();
    if zero_mult > 0 {
        roots.push(RealRoot {
            value: 0.0,
            residual: 0.0,
            multiplicity: zero_mult,
        });
    }
    for c in candidates {
        let z = polish(trimmed, c);
        let residual = horner(trimmed, z).abs();
        if residual > ROOT_RESIDUAL_TOL * evaluation_scale(trimmed, z) {
            continue;
        }
        match roots
            .iter_mut()
            .find(|r| (r.value - z).abs() <= 1e-6 * (1.0 + z.abs()))
        {
            Some(r) => {
                r.multiplicity += 1;
                if residual < r.residual {
                    r.value = z;
                    r.residual = residual;
                }
            }
            None => roots.push(RealRoot {
                value: z,
                residual,
                multiplicity: 1,
            }),
        }
    }
    roots.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(roots)
}
