// SPDX-License-Identifier: Apache-2.0

//! Benchmark fixtures shared by the criterion targets.

use ptwave_core::shift::{build_shifted, find_constants};
use ptwave_core::{PeriodicGrid, Result, ScalarModel, ShiftedProblem, SpectralField};

/// KdV on the zero branch (`mu = 2`, `p = 3`, `c = 1`, `A = 0`) over `[-l, l]`.
pub fn kdv_problem(l: f64, n: usize) -> Result<(ShiftedProblem, PeriodicGrid)> {
    let model = ScalarModel::fkdv(2.0, 3)?;
    let branch = find_constants(&model, 1.0, 0.0)?
        .into_iter()
        .find(|b| b.value == 0.0)
        .expect("zero is a constant solution when A = 0");
    Ok((
        build_shifted(&model, 1.0, 0.0, &branch)?,
        PeriodicGrid::new(l, n)?,
    ))
}

/// Smooth localized test field.
pub fn bump(grid: &PeriodicGrid) -> SpectralField {
    SpectralField::from_fn(grid, |x| 2.0 * (-x * x / 4.0).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_on_the_zero_branch() {
        let (sp, grid) = kdv_problem(20.0, 64).unwrap();
        assert_eq!(sp.constant, 0.0);
        assert_eq!(bump(&grid).values().unwrap().len(), 64);
    }
}
