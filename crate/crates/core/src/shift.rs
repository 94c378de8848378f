// SPDX-License-Identifier: Apache-2.0

//! Constant solutions of the integrated profile equation and the shifted
//! problem obtained by subtracting one of them.
//!
//! A profile `phi` of speed `c` satisfies `-c phi - L phi + f(phi) = A`.
//! A constant `C` with `-c C + f(C) = A` turns this into
//! `(c + L - f'(C)) psi = sum_j b_j psi^j` for `psi = phi - C`, with
//! `b_j = f^(j)(C) / j!`.

use crate::error::{Error, Result};
use crate::models::ScalarModel;
use crate::roots::{evaluation_scale, horner, real_roots, ROOT_RESIDUAL_TOL};
use crate::spectral::{
    apply_multiplier, dealiased_powers, FourierMultiplier, PeriodicGrid, SpectralField,
};

/// Smallest admissible `|c + alpha(xi) - f'(C)|` on a bound grid.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantBranch {
    pub value: f64,
    pub residual: f64,
    pub multiplicity_hint: usize,
}

/// Ascending coefficients of `P(z) = -A - c z + f(z)`.
pub fn constant_polynomial(model: &ScalarModel, speed: f64, a: f64) -> Vec<f64> {
    let mut coeffs = model.nonlinearity.monomials();
    coeffs[0] -= a;
    coeffs[1] -= speed;
    coeffs
}

/// Real constant solutions, sorted by `|C|` ascending.
pub fn find_constants(model: &ScalarModel, speed: f64, a: f64) -> Result<Vec<ConstantBranch>> {
    if !(speed > 0.0 && speed.is_finite()) || !a.is_finite() {
        return Err(Error::Argument(format!(
            "speed must be positive and A finite, got c = {speed}, A = {a}"
        )));
    }
    let poly = constant_polynomial(model, speed, a);
    let mut branches: Vec<ConstantBranch> = real_roots(&poly)?
        .into_iter()
        .map(|r| ConstantBranch {
            value: r.value,
            residual: r.residual,
            multiplicity_hint: r.multiplicity,
        })
        .collect();
    branches.sort_by(|x, y| x.value.abs().total_cmp(&y.value.abs()));
    Ok(branches)
}

/// The profile equation rewritten around a constant branch.
#[derive(Debug, Clone)]
pub struct ShiftedProblem {
    pub speed: f64,
    pub constant: f64,
    pub a: f64,
    /// `f'(C)`.
    pub linear_shift: f64,
    /// `b_j = f^(j)(C)/j!`; entry `j - 2` is degree `j`.
    pub term_coeffs: Vec<f64>,
    pub model: ScalarModel,
}

impl ShiftedProblem {
    /// Symbol `c + alpha(xi) - f'(C)` of the shifted linear operator.
    pub fn linear_symbol(&self) -> FourierMultiplier {
        self.model
            .dispersion
            .shifted(self.speed - self.linear_shift)
    }

    /// Exponent `j/(j-1)` attached to the degree-`j` term.
    pub fn exponents(&self) -> Vec<f64> {
        (2..self.term_coeffs.len() + 2)
            .map(|j| j as f64 / (j as f64 - 1.0))
            .collect()
    }

    /// Highest degree in the shifted nonlinearity.
    pub fn max_degree(&self) -> usize {
        self.term_coeffs.len() + 1
    }

    /// Symbol values on `grid`, rejecting any below [`DENOMINATOR_GUARD`] in magnitude.
    pub fn bind(&self, grid: &PeriodicGrid) -> Result<Vec<f64>> {
        let values = self.linear_symbol().sample(grid)?;
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| v.abs() <= DENOMINATOR_GUARD)
        {
            return Err(Error::Singular(format!(
                "shifted symbol is {v:e} at wavenumber {}",
                grid.wavenumbers()[k]
            )));
        }
        Ok(values)
    }

    /// `N(psi) = sum_j b_j psi^j`, dealiased.
    pub fn nonlinearity(&self, psi: &SpectralField) -> Result<SpectralField> {
        let powers = dealiased_powers(psi, self.max_degree())?;
        let mut out = SpectralField::zeros(psi.grid());
        for (b, pw) in self.term_coeffs.iter().zip(&powers[1..]) {
            out = out.axpy(*b, pw)?;
        }
        Ok(out)
    }
}

pub fn build_shifted(
    model: &ScalarModel,
    speed: f64,
    a: f64,
    branch: &ConstantBranch,
) -> Result<ShiftedProblem> {
    let poly = constant_polynomial(model, speed, a);
    let scale = evaluation_scale(&poly, branch.value);
    let residual = horner(&poly, branch.value).abs();
    if residual > ROOT_RESIDUAL_TOL * scale {
        return Err(Error::Argument(format!(
            "C = {} is not a constant solution (residual {residual:e})",
            branch.value
        )));
    }
    let nl = &model.nonlinearity;
    let term_coeffs = nl.taylor_coeffs(branch.value);
    if term_coeffs.last().copied().unwrap_or(0.0) == 0.0 {
        return Err(Error::Argument(
            "leading shifted coefficient vanishes".into(),
        ));
    }
    Ok(ShiftedProblem {
        speed,
        constant: branch.value,
        a,
        linear_shift: nl.derivative(1, branch.value)?,
        term_coeffs,
        model: model.clone(),
    })
}

/// Full-equation residual `-c phi - L phi + f(phi) - A` for a full profile
/// `phi`, with the flux evaluated by dealiased powers.
pub fn profile_residual(
    model: &ScalarModel,
    speed: f64,
    a: f64,
    phi: &SpectralField,
) -> Result<SpectralField> {
    let grid = phi.grid();
    let monomials = model.nonlinearity.monomials();
    let powers = dealiased_powers(phi, monomials.len() - 1)?;
    let mut g = apply_multiplier(&model.dispersion, phi)?.scaled(-1.0);
    g = g.axpy(-speed, phi)?;
    for (k, pw) in powers.iter().enumerate().skip(1) {
        g = g.axpy(monomials[k + 1], pw)?;
    }
    g.axpy(-a, &SpectralField::constant(grid, 1.0))
}

/// Residual norms of a problem posed in full and in shifted variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftCheck {
    pub full: f64,
    pub shifted: f64,
    /// Norm of the mismatch between the two residual fields, after matching
    /// sign conventions.
    pub difference: f64,
}

/// Compares the full-equation residual at `psi + C` with the shifted
/// residual at `psi`; the two formulations agree algebraically, with the
/// full residual equal to minus the shifted one.
pub fn shift_equivalence_residual(sp: &ShiftedProblem, psi: &SpectralField) -> Result<ShiftCheck> {
    let grid = psi.grid();
    let phi = psi.axpy(sp.constant, &SpectralField::constant(grid, 1.0))?;
    let full = profile_residual(&sp.model, sp.speed, sp.a, &phi)?;
    let shifted = apply_multiplier(&sp.linear_symbol(), psi)?;
    let shifted = &shifted - &sp.nonlinearity(psi)?;
    Ok(ShiftCheck {
        full: full.norm(),
        shifted: shifted.norm(),
        difference: (&full + &shifted).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn branch(value: f64) -> ConstantBranch {
        ConstantBranch {
            value,
            residual: 0.0,
            multiplicity_hint: 1,
        }
    }

    #[test]
    fn quadratic_branches() {
        let m = ScalarModel::fkdv(0.8, 3).unwrap();
        let b = find_constants(&m, 1.0, 0.0).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].value, 0.0);
        assert_relative_eq!(b[1].value, 2.0, epsilon = 1e-14);

        let b = find_constants(&m, 1.0, 1.0).unwrap();
        assert_relative_eq!(b[0].value, 1.0 - 3f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(b[1].value, 1.0 + 3f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn cubic_branch_matches_bisection() {
        let g = |z: f64| z.powi(3) / 3.0 - z - 1.0;
        let (mut lo, mut hi) = (2.0, 2.2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(lo) * g(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let m = ScalarModel::fkdv(1.5, 4).unwrap();
        let b = find_constants(&m, 1.0, 1.0).unwrap();
        assert_eq!(b.len(), 1);
        assert_relative_eq!(b[0].value, 0.5 * (lo + hi), epsilon = 1e-13);
        assert_relative_eq!(b[0].value, 2.103803, epsilon = 1e-6);
    }

    #[test]
    fn rejects_nonpositive_speed() {
        let m = ScalarModel::fkdv(1.0, 3).unwrap();
        assert!(find_constants(&m, 0.0, 1.0).is_err());
        assert!(find_constants(&m, -1.0, 1.0).is_err());
    }

    #[test]
    fn shifted_coefficients() {
        let m3 = ScalarModel::fkdv(0.8, 3).unwrap();
        let sp = build_shifted(&m3, 1.0, 0.0, &branch(0.0)).unwrap();
        assert_eq!(sp.linear_shift, 0.0);
        assert_eq!(sp.term_coeffs, vec![0.5]);

        let c = 1.0 + 3f64.sqrt();
        let sp = build_shifted(&m3, 1.0, 1.0, &branch(c)).unwrap();
        assert_relative_eq!(sp.linear_shift, c, epsilon = 1e-15);

        // C = 2 solves C^3/3 - C - A = 0 for A = 2/3.
        let m4 = ScalarModel::fkdv(1.5, 4).unwrap();
        let sp = build_shifted(&m4, 1.0, 2.0 / 3.0, &branch(2.0)).unwrap();
        assert_relative_eq!(sp.linear_shift, 4.0, epsilon = 1e-14);
        assert_relative_eq!(sp.term_coeffs[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(sp.term_coeffs[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(sp.exponents(), vec![2.0, 1.5]);
    }

    #[test]
    fn build_rejects_non_root() {
        let m = ScalarModel::fkdv(0.8, 3).unwrap();
        assert!(build_shifted(&m, 1.0, 1.0, &branch(0.5)).is_err());
    }

    #[test]
    fn binding_detects_vanishing_symbol() {
        // c - f'(C) = 1 - 2 = -1, and |xi|^2 = 1 at xi = 1 on an l = pi grid.
        let m = ScalarModel::fkdv(2.0, 3).unwrap();
        let sp = build_shifted(&m, 1.0, 0.0, &branch(2.0)).unwrap();
        let grid = PeriodicGrid::new(std::f64::consts::PI, 16).unwrap();
        assert!(matches!(sp.bind(&grid), Err(Error::Singular(_))));
    }

    #[test]
    fn zero_perturbation_has_zero_residuals() {
        let m = ScalarModel::fkdv(0.8, 3).unwrap();
        let b = find_constants(&m, 1.0, 1.0).unwrap();
        let sp = build_shifted(&m, 1.0, 1.0, &b[0]).unwrap();
        let grid = PeriodicGrid::new(10.0, 32).unwrap();
        let check = shift_equivalence_residual(&sp, &SpectralField::zeros(&grid)).unwrap();
        assert!(check.full < 1e-14);
        assert_eq!(check.shifted, 0.0);
    }

    #[test]
    fn residual_fields_agree_on_a_perturbation() {
        let m = ScalarModel::fkdv(1.5, 4).unwrap();
        let b = find_constants(&m, 1.0, 1.0).unwrap();
        let sp = build_shifted(&m, 1.0, 1.0, &b[0]).unwrap();
        let grid = PeriodicGrid::new(20.0, 128).unwrap();
        let psi = SpectralField::from_fn(&grid, |x| 0.5 * (0.3 * x).cos() + 0.2 * (0.9 * x).sin());
        let check = shift_equivalence_residual(&sp, &psi).unwrap();
        assert!(check.full > 0.1);
        assert!(check.difference < 1e-12 * check.full);
    }
}
