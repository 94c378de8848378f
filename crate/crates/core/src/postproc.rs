// SPDX-License-Identifier: Apache-2.0

//! Diagnostics of computed profiles and CSV output.

use std::io::Write;

use serde::Serialize;

use crate::boussinesq::{integrated_flux, BoussinesqParams};
use crate::error::Result;
use crate::models::ScalarModel;
use crate::petviashvili::IterationTrace;
use crate::shift::profile_residual;
use crate::spectral::{mode_of_slot, spectral_derivative, SpectralField};

/// `(phi(x_j), phi'(x_j))` at every node.
pub fn phase_portrait(field: &SpectralField) -> Result<Vec<(f64, f64)>> {
    let v = field.values()?;
    let dv = spectral_derivative(field).values()?;
    Ok(v.into_iter().zip(dv).collect())
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Nodal mean and spread of `-c phi - L phi + f(phi)` for a full profile
/// `phi`; constant and equal to `A` on an exact traveling wave.
pub fn reconstruct_constant(
    model: &ScalarModel,
    speed: f64,
    phi: &SpectralField,
) -> Result<(f64, f64)> {
    let g = profile_residual(model, speed, 0.0, phi)?;
    Ok(mean_std(&g.values()?))
}

/// Nodal means and spreads of the two integrated fluxes, equal to
/// `(A1, A2)` on an exact traveling wave.
pub fn reconstruct_pair(
    params: &BoussinesqParams,
    speed: f64,
    eta: &SpectralField,
    w: &SpectralField,
) -> Result<[(f64, f64); 2]> {
    let (g1, g2) = integrated_flux(params, speed, eta, w)?;
    Ok([mean_std(&g1.values()?), mean_std(&g2.values()?)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileMetrics {
    pub max: f64,
    pub min: f64,
    /// Node of the maximum.
    pub peak_location: f64,
    /// `|{e > 0.95 max e}| / |{e > 0.5 max e}|` for the excursion
    /// `e = phi - min phi`; 1 for constant fields.
    pub plateau_ratio: f64,
    /// Largest coefficient with `|n| > N/4` relative to the largest overall.
    pub tail_ratio: f64,
}

impl ProfileMetrics {
    pub fn amplitude(&self) -> f64 {
        self.max - self.min
    }

    /// Whether the profile is constant to `tol` relative to its size.
    pub fn is_flat(&self, tol: f64) -> bool {
        self.amplitude() <= tol * (1.0 + self.max.abs().max(self.min.abs()))
    }
}

/// Measure of `{x : v(x) > level}` for periodic samples, linear between nodes.
fn level_width(values: &[f64], level: f64, spacing: f64) -> f64 {
    let n = values.len();
    let mut total = 0.0;
    for j in 0..n {
        let (a, b) = (values[j] - level, values[(j + 1) % n] - level);
        total += if a > 0.0 && b > 0.0 {
            1.0
        } else if a > 0.0 {
            a / (a - b)
        } else if b > 0.0 {
            b / (b - a)
        } else {
            0.0
        };
    }
    total * spacing
}

pub fn profile_metrics(field: &SpectralField) -> Result<ProfileMetrics> {
    let grid = field.grid();
    let v = field.values()?;
    let (imax, &max) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grids have at least 8 nodes");
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let amp = max - min;
    let plateau_ratio = if amp <= 1e-14 * (1.0 + max.abs()) {
        1.0
    } else {
        let h = grid.spacing();
        level_width(&v, min + 0.95 * amp, h) / level_width(&v, min + 0.5 * amp, h)
    };
    let n = grid.n_modes();
    let biggest = field.max_abs_coeff();
    let tail = field
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(k, _)| mode_of_slot(*k, n).unsigned_abs() as usize > n / 4)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    Ok(ProfileMetrics {
        max,
        min,
        peak_location: grid.nodes()[imax],
        plateau_ratio,
        tail_ratio: if biggest > 0.0 { tail / biggest } else { 0.0 },
    })
}

/// Formats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `x,<names...>` rows, one per node.
pub fn write_profile_csv<W: Write>(
    out: W,
    names: &[&str],
    fields: &[&SpectralField],
) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    let mut header = vec!["x"];
    header.extend_from_slice(names);
    wr.write_record(&header)?;
    let grid = fields[0].grid();
    let columns = fields
        .iter()
        .map(|f| f.values())
        .collect::<Result<Vec<_>>>()?;
    for (j, x) in grid.nodes().iter().enumerate() {
        let mut row = vec![fmt_f64(*x)];
        row.extend(columns.iter().map(|c| fmt_f64(c[j])));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_portrait_csv<W: Write>(out: W, portrait: &[(f64, f64)]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["value", "derivative"])?;
    for (v, d) in portrait {
        wr.write_record([fmt_f64(*v), fmt_f64(*d)])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(out: W, trace: &IterationTrace) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["iter", "res", "sfe", "s", "kind"])?;
    for row in &trace.rows {
        wr.write_record([
            row.iter.to_string(),
            fmt_f64(row.res),
            fmt_f64(row.sfe),
            fmt_f64(row.s),
            row.kind.as_str().to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads the `x` column and the named columns of a profile CSV.
pub fn read_profile_csv<R: std::io::Read>(
    input: R,
    names: &[&str],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    use crate::error::Error;
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("profile CSV has no column {name:?}")))
    };
    let xi = index("x")?;
    let cols = names.iter().map(|n| index(n)).collect::<Result<Vec<_>>>()?;
    let mut xs = Vec::new();
    let mut data = vec![Vec::new(); names.len()];
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("bad number in profile CSV row {}", line + 2)))
        };
        xs.push(parse(xi)?);
        for (d, &c) in data.iter_mut().zip(&cols) {
            d.push(parse(c)?);
        }
    }
    Ok((xs, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::PeriodicGrid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn cosine_portrait_is_an_ellipse() {
        let l = 3.0;
        let grid = PeriodicGrid::new(l, 64).unwrap();
        let f = SpectralField::from_fn(&grid, |x| (PI * x / l).cos());
        for (v, d) in phase_portrait(&f).unwrap() {
            assert_relative_eq!(v * v + (d * l / PI).powi(2), 1.0, epsilon = 1e-12);
        }
        let c = SpectralField::constant(&grid, 2.5);
        for (v, d) in phase_portrait(&c).unwrap() {
            assert_relative_eq!(v, 2.5, epsilon = 1e-14);
            assert!(d.abs() < 1e-14);
        }
    }

    #[test]
    fn constant_branch_reconstructs_a() {
        let m = ScalarModel::fkdv(0.8, 3).unwrap();
        let c = 1.0 - 3f64.sqrt();
        let grid = PeriodicGrid::new(10.0, 32).unwrap();
        let (mean, std) =
            reconstruct_constant(&m, 1.0, &SpectralField::constant(&grid, c)).unwrap();
        assert_relative_eq!(mean, 1.0, epsilon = 1e-14);
        assert!(std < 1e-14);

        let noisy = SpectralField::from_fn(&grid, |x| c + 0.1 * (0.7 * x).sin().powi(3));
        assert!(reconstruct_constant(&m, 1.0, &noisy).unwrap().1 > 1e-3);
    }

    #[test]
    fn sech2_plateau_ratio() {
        let grid = PeriodicGrid::new(40.0, 2048).unwrap();
        let f = SpectralField::from_fn(&grid, |x| 1.0 / x.cosh().powi(2));
        let m = profile_metrics(&f).unwrap();
        let expected = (1.0 / 0.95f64.sqrt()).acosh() / 2f64.sqrt().acosh();
        assert_relative_eq!(m.plateau_ratio, expected, epsilon = 1e-3);
        assert_relative_eq!(m.max, 1.0, epsilon = 1e-12);
        assert_eq!(m.peak_location, 0.0);
        assert!(m.tail_ratio < 1e-12);
    }

    #[test]
    fn flat_top_and_constant_plateaus() {
        let grid = PeriodicGrid::new(40.0, 1024).unwrap();
        let box_like = SpectralField::from_fn(&grid, |x| {
            0.5 * ((2.0 * (x + 15.0)).tanh() - (2.0 * (x - 15.0)).tanh())
        });
        assert!(profile_metrics(&box_like).unwrap().plateau_ratio > 0.9);
        let c = profile_metrics(&SpectralField::constant(&grid, -3.0)).unwrap();
        assert_eq!(c.plateau_ratio, 1.0);
        assert!(c.is_flat(1e-12));
    }

    #[test]
    fn csv_round_trip() {
        let grid = PeriodicGrid::new(2.0, 8).unwrap();
        let f = SpectralField::from_fn(&grid, |x| (PI * x / 2.0).sin() + 0.25);
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &["phi"], &[&f]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,phi\n"));
        let (xs, cols) = read_profile_csv(buf.as_slice(), &["phi"]).unwrap();
        assert_eq!(xs, grid.nodes());
        assert_eq!(cols[0], f.values().unwrap());
    }
}
