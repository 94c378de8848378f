// SPDX-License-Identifier: Apache-2.0

//! Periodic traveling waves of the extended Boussinesq system for interfacial
//! waves between two fluid layers,
//!
//! ```text
//! eta_t = -d1 W_x - d2 W_xxx - d4 (W eta)_x + d5 (W eta^2)_x
//! W_t   = -eta_x / d1 - d3 W_xxt - (d4/2) (W^2)_x + d5 (W^2 eta)_x
//! ```
//!
//! Profiles of speed `c` satisfy, after one integration,
//!
//! ```text
//! c eta - d1 W - d2 W''   - d4 W eta + d5 W eta^2 = A1
//! -eta/d1 + c W + c d3 W'' - (d4/2) W^2 + d5 W^2 eta = A2
//! ```
//!
//! and are computed as `(C1 + eta~, C2 + W~)` around a constant solution.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpe::MpeConfig;
use crate::petviashvili::{
    factor_power, run, Breakdown, Evaluation, FixedPointProblem, IterationSettings, IterationTrace,
    Outcome, SolveResult,
};
use crate::roots::{evaluation_scale, real_roots, ROOT_RESIDUAL_TOL};
use crate::shift::ShiftCheck;
use crate::spectral::{dealiased_bivariate, inner_product, PeriodicGrid, SpectralField};

/// Smallest admissible `|det|` of a per-mode matrix.
pub const DETERMINANT_GUARD: f64 = 1e-12;

/// Physical parameters: density ratio `r`, depth ratio `h` and the
/// interface-depth parameter `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoussinesqParams {
    pub r: f64,
    pub h: f64,
    pub s: f64,
    d: [f64; 5],
}

impl BoussinesqParams {
    pub fn new(r: f64, h: f64, s: f64) -> Result<Self> {
        if !(r > 0.0 && h > 0.0 && r.is_finite() && h.is_finite() && s.is_finite()) {
            return Err(Error::Argument(format!(
                "need r > 0, H > 0 and finite s, got r = {r}, H = {h}, s = {s}"
            )));
        }
        let rh = r + h;
        let d1 = h / rh;
        let d = [
            d1,
            h * h / (2.0 * rh * rh) * (s + 2.0 / 3.0 * (1.0 + r * h)),
            s * d1 / 2.0,
            (h * h - r) / (rh * rh),
            r * (1.0 + h).powi(2) / rh.powi(3),
        ];
        Ok(Self { r, h, s, d })
    }

    /// The shallow-interface choice `s = -(1 + r H)`.
    pub fn lower_s(r: f64, h: f64) -> Result<Self> {
        Self::new(r, h, -(1.0 + r * h))
    }

    pub fn d1(&self) -> f64 {
        self.d[0]
    }
    pub fn d2(&self) -> f64 {
        self.d[1]
    }
    pub fn d3(&self) -> f64 {
        self.d[2]
    }
    pub fn d4(&self) -> f64 {
        self.d[3]
    }
    pub fn d5(&self) -> f64 {
        self.d[4]
    }

    pub fn vmax(&self) -> f64 {
        boussinesq_vmax(self.r, self.h)
    }

    /// Admissible interval `[-(1 + rH), -(2/3)(1 + rH)]` for `s`.
    pub fn s_range(&self) -> (f64, f64) {
        let b = 1.0 + self.r * self.h;
        (-b, -2.0 / 3.0 * b)
    }

    /// A message when `s` lies outside [`Self::s_range`].
    pub fn range_warning(&self) -> Option<String> {
        let (lo, hi) = self.s_range();
        let slack = 1e-12 * lo.abs();
        (self.s < lo - slack || self.s > hi + slack).then(|| {
            format!(
                "s = {} lies outside the modelled range [{lo}, {hi}]",
                self.s
            )
        })
    }
}

/// `1 + (H^2 - r)^2 / (8 r H (1 + H)^2)`.
pub fn boussinesq_vmax(r: f64, h: f64) -> f64 {
    1.0 + (h * h - r).powi(2) / (8.0 * r * h * (1.0 + h).powi(2))
}

/// A constant solution `(C1, C2)` with the residuals of both algebraic equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoussinesqConstants {
    pub c1: f64,
    pub c2: f64,
    pub residuals: [f64; 2],
}

#[derive(Debug, Clone, Default)]
pub struct ConstantSearch {
    /// Sorted by `|C1|`.
    pub pairs: Vec<BoussinesqConstants>,
    /// Roots of the quintic that could not be turned into a pair.
    pub warnings: Vec<String>,
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(acc: &mut Vec<f64>, p: &[f64], scale: f64) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0.0);
    }
    acc.iter_mut().zip(p).for_each(|(a, x)| *a += scale * x);
}

/// Ascending coefficients of the quintic whose roots are the admissible `C1`.
pub fn constant_quintic(p: &BoussinesqParams, speed: f64, a1: f64, a2: f64) -> Vec<f64> {
    let (d1, d4, d5) = (p.d1(), p.d4(), p.d5());
    let q = [d1, d4, -d5];
    let lin = [-a1, speed];
    let q2 = poly_mul(&q, &q);
    let mut out = vec![0.0; 6];
    poly_add(&mut out, &poly_mul(&[0.0, 1.0], &q2), -1.0 / d1);
    poly_add(&mut out, &poly_mul(&lin, &q), speed);
    poly_add(
        &mut out,
        &poly_mul(&[-d4 / 2.0, d5], &poly_mul(&lin, &lin)),
        1.0,
    );
    poly_add(&mut out, &q2, -a2);
    out
}

/// Residuals of the two algebraic equations at `(c1, c2)`, each relative to
/// the magnitude of its terms.
fn algebraic_residuals(
    p: &BoussinesqParams,
    speed: f64,
    a1: f64,
    a2: f64,
    c1: f64,
    c2: f64,
) -> [f64; 2] {
    let (d1, d4, d5) = (p.d1(), p.d4(), p.d5());
    let t1 = [speed * c1, -d1 * c2, -d4 * c1 * c2, d5 * c1 * c1 * c2, -a1];
    let t2 = [
        -c1 / d1,
        speed * c2,
        -d4 / 2.0 * c2 * c2,
        d5 * c1 * c2 * c2,
        -a2,
    ];
    let rel = |t: &[f64]| {
        let scale = t.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        t.iter().sum::<f64>().abs() / scale
    };
    [rel(&t1), rel(&t2)]
}

/// Constant solutions of the profile system for speed `speed` and
/// integration constants `(a1, a2)`.
pub fn find_boussinesq_constants(
    p: &BoussinesqParams,
    speed: f64,
    a1: f64,
    a2: f64,
) -> Result<ConstantSearch> {
    if !(speed.is_finite() && a1.is_finite() && a2.is_finite()) {
        return Err(Error::Argument(
            "speed and integration constants must be finite".into(),
        ));
    }
    if (speed * speed - 1.0).abs() <= 1e-14 {
        return Err(Error::Argument(
            "c^2 = 1 makes the constant system degenerate".into(),
        ));
    }
    let poly = constant_quintic(p, speed, a1, a2);
    let mut search = ConstantSearch::default();
    for root in real_roots(&poly)? {
        let c1 = root.value;
        let q = p.d1() + p.d4() * c1 - p.d5() * c1 * c1;
        if q.abs() <= 1e-12 * evaluation_scale(&[p.d1(), p.d4(), p.d5()], c1) {
            search.warnings.push(format!(
                "discarded C1 = {c1}: d1 + d4 C1 - d5 C1^2 vanishes"
            ));
            continue;
        }
        let c2 = (speed * c1 - a1) / q;
        let residuals = algebraic_residuals(p, speed, a1, a2, c1, c2);
        if residuals
            .iter()
            .any(|r| r.is_nan() || *r > ROOT_RESIDUAL_TOL)
        {
            search.warnings.push(format!(
                "discarded C1 = {c1}: algebraic residuals {residuals:?}"
            ));
            continue;
        }
        search.pairs.push(BoussinesqConstants { c1, c2, residuals });
    }
    search
        .pairs
        .sort_by(|x, y| x.c1.abs().total_cmp(&y.c1.abs()));
    Ok(search)
}

/// The profile system written for the differences from a constant solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoussinesqShifted {
    pub params: BoussinesqParams,
    pub speed: f64,
    pub a1: f64,
    pub a2: f64,
    pub constants: BoussinesqConstants,
}

impl BoussinesqShifted {
    pub fn new(
        params: BoussinesqParams,
        speed: f64,
        a1: f64,
        a2: f64,
        constants: BoussinesqConstants,
    ) -> Result<Self> {
        let res = algebraic_residuals(&params, speed, a1, a2, constants.c1, constants.c2);
        if res.iter().any(|r| r.is_nan() || *r > ROOT_RESIDUAL_TOL) {
            return Err(Error::Argument(format!(
                "({}, {}) is not a constant solution (residuals {res:?})",
                constants.c1, constants.c2
            )));
        }
        Ok(Self {
            params,
            speed,
            a1,
            a2,
            constants,
        })
    }

    /// Linearization of the nonlinear terms at the constant, moved to the left.
    pub fn coupling(&self) -> [[f64; 2]; 2] {
        let p = &self.params;
        let (c1, c2) = (self.constants.c1, self.constants.c2);
        let (d4, d5) = (p.d4(), p.d5());
        [
            [(-d4 + 2.0 * d5 * c1) * c2, c1 * (-d4 + d5 * c1)],
            [d5 * c2 * c2, 2.0 * c2 * (-d4 / 2.0 + d5 * c1)],
        ]
    }

    /// Bivariate terms `(coefficient, power of eta~, power of W~)` of the
    /// degree-2 and degree-3 parts of each component.
    #[allow(clippy::type_complexity)]
    fn term_table(&self) -> [[Vec<(f64, u32, u32)>; 2]; 2] {
        let p = &self.params;
        let (c1, c2) = (self.constants.c1, self.constants.c2);
        let (d4, d5) = (p.d4(), p.d5());
        [
            [
                vec![(-d5 * c2, 2, 0), (d4 - 2.0 * d5 * c1, 1, 1)],
                vec![(d4 / 2.0 - d5 * c1, 0, 2), (-2.0 * d5 * c2, 1, 1)],
            ],
            [vec![(-d5, 2, 1)], vec![(-d5, 1, 2)]],
        ]
    }
}

/// Fourier image at wavenumber `k` of the linear operator acting on the differences.
pub fn mode_matrix(sh: &BoussinesqShifted, k: f64) -> [[f64; 2]; 2] {
    let p = &sh.params;
    let c = sh.speed;
    let k2 = k * k;
    let m = sh.coupling();
    [
        [c + m[0][0], -(p.d1() - p.d2() * k2) + m[0][1]],
        [-1.0 / p.d1() + m[1][0], c * (1.0 - p.d3() * k2) + m[1][1]],
    ]
}

/// A pair of fields on one grid.
#[derive(Debug, Clone)]
pub struct FieldPair {
    pub eta: SpectralField,
    pub w: SpectralField,
}

impl FieldPair {
    pub fn new(eta: SpectralField, w: SpectralField) -> Result<Self> {
        if !eta.grid().same_as(w.grid()) {
            return Err(Error::Config(
                "pair components live on different grids".into(),
            ));
        }
        Ok(Self { eta, w })
    }

    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self {
            eta: SpectralField::zeros(grid),
            w: SpectralField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.eta.grid()
    }

    pub fn norm(&self) -> f64 {
        self.eta.norm().hypot(self.w.norm())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            eta: self.eta.scaled(factor),
            w: self.w.scaled(factor),
        }
    }

    pub fn axpy(&self, factor: f64, other: &FieldPair) -> Result<Self> {
        Ok(Self {
            eta: self.eta.axpy(factor, &other.eta)?,
            w: self.w.axpy(factor, &other.w)?,
        })
    }

    /// Sum of the componentwise inner products.
    pub fn inner(&self, other: &FieldPair) -> Result<f64> {
        Ok(inner_product(&self.eta, &other.eta)? + inner_product(&self.w, &other.w)?)
    }
}

/// Degree-2 and degree-3 parts of the shifted nonlinearity, dealiased.
pub fn boussinesq_nonlinearity(
    sh: &BoussinesqShifted,
    u: &FieldPair,
) -> Result<(FieldPair, FieldPair)> {
    let [quad, cubic] = sh.term_table();
    let part = |terms: &[Vec<(f64, u32, u32)>; 2]| -> Result<FieldPair> {
        Ok(FieldPair {
            eta: dealiased_bivariate(&u.eta, &u.w, &terms[0])?,
            w: dealiased_bivariate(&u.eta, &u.w, &terms[1])?,
        })
    };
    Ok((part(&quad)?, part(&cubic)?))
}

/// Shifted system bound to a grid, with per-mode matrices in FFT slot order.
#[derive(Debug, Clone)]
pub struct BoussinesqIteration {
    shifted: BoussinesqShifted,
    grid: PeriodicGrid,
    matrices: Vec<[[f64; 2]; 2]>,
}

impl BoussinesqIteration {
    pub fn new(sh: &BoussinesqShifted, grid: &PeriodicGrid) -> Result<Self> {
        let matrices: Vec<_> = grid
            .wavenumbers()
            .iter()
            .map(|&k| mode_matrix(sh, k))
            .collect();
        for (m, &k) in matrices.iter().zip(grid.wavenumbers()) {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.is_nan() || det.abs() <= DETERMINANT_GUARD {
                return Err(Error::Singular(format!(
                    "mode matrix determinant is {det:e} at wavenumber {k}"
                )));
            }
        }
        Ok(Self {
            shifted: *sh,
            grid: grid.clone(),
            matrices,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn apply_linear(&self, u: &FieldPair) -> Result<FieldPair> {
        let (e, w) = (u.eta.coeffs(), u.w.coeffs());
        let mut out_e = Vec::with_capacity(e.len());
        let mut out_w = Vec::with_capacity(e.len());
        for ((m, a), b) in self.matrices.iter().zip(e).zip(w) {
            out_e.push(a * m[0][0] + b * m[0][1]);
            out_w.push(a * m[1][0] + b * m[1][1]);
        }
        Ok(FieldPair {
            eta: SpectralField::from_coeffs(&self.grid, out_e)?,
            w: SpectralField::from_coeffs(&self.grid, out_w)?,
        })
    }

    /// Solves the per-mode systems `M(k) x_k = rhs_k`.
    pub fn solve_linear(&self, rhs: &FieldPair) -> Result<FieldPair> {
        let (e, w) = self.solve_coeffs(rhs.eta.coeffs(), rhs.w.coeffs());
        Ok(FieldPair {
            eta: SpectralField::from_coeffs_symmetrized(&self.grid, e)?,
            w: SpectralField::from_coeffs_symmetrized(&self.grid, w)?,
        })
    }

    fn solve_coeffs(&self, e: &[Complex64], w: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut xe = Vec::with_capacity(e.len());
        let mut xw = Vec::with_capacity(e.len());
        for ((m, a), b) in self.matrices.iter().zip(e).zip(w) {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            xe.push((a * m[1][1] - b * m[0][1]) / det);
            xw.push((b * m[0][0] - a * m[1][0]) / det);
        }
        (xe, xw)
    }

    pub fn nonlinearity(&self, u: &FieldPair) -> Result<FieldPair> {
        let (n2, n3) = boussinesq_nonlinearity(&self.shifted, u)?;
        n2.axpy(1.0, &n3)
    }

    pub fn residual_norm(&self, u: &FieldPair) -> Result<f64> {
        let lu = self.apply_linear(u)?;
        Ok(lu.axpy(-1.0, &self.nonlinearity(u)?)?.norm())
    }
}

impl FixedPointProblem for BoussinesqIteration {
    type State = FieldPair;

    fn evaluate(&self, u: &FieldPair) -> Result<Evaluation<FieldPair>> {
        let (n2, n3) = boussinesq_nonlinearity(&self.shifted, u)?;
        let total = n2.axpy(1.0, &n3)?;
        let lu = self.apply_linear(u)?;
        let residual = lu.axpy(-1.0, &total)?.norm();
        let num = lu.inner(u)?;
        let den = total.inner(u)?;
        let factor = (den.abs() > 1e-300 && num.is_finite() && den.is_finite()).then(|| num / den);
        let next = match factor {
            None => Err(Breakdown::SingularQuotient),
            Some(s) => self.next_from(s, &n2, &n3),
        };
        Ok(Evaluation {
            residual,
            factor,
            next,
        })
    }

    fn to_vector(&self, u: &FieldPair) -> Result<Vec<f64>> {
        let mut v = u.eta.values()?;
        v.extend(u.w.values()?);
        Ok(v)
    }

    fn state_from_vector(&self, v: &[f64]) -> Result<FieldPair> {
        let n = self.grid.n_modes();
        if v.len() != 2 * n {
            return Err(Error::Argument(format!(
                "expected {} values, got {}",
                2 * n,
                v.len()
            )));
        }
        Ok(FieldPair {
            eta: SpectralField::from_values(&self.grid, &v[..n])?,
            w: SpectralField::from_values(&self.grid, &v[n..])?,
        })
    }

    fn magnitude(&self, u: &FieldPair) -> f64 {
        u.norm()
    }
}

impl BoussinesqIteration {
    fn next_from(
        &self,
        s: f64,
        n2: &FieldPair,
        n3: &FieldPair,
    ) -> std::result::Result<FieldPair, Breakdown> {
        let w2 = factor_power(s, 2.0).ok_or(Breakdown::NegativeFactor(s))?;
        let w3 = factor_power(s, 1.5).ok_or(Breakdown::NegativeFactor(s))?;
        let combine = |a: &SpectralField, b: &SpectralField| -> Vec<Complex64> {
            a.coeffs()
                .iter()
                .zip(b.coeffs())
                .map(|(x, y)| x * w2 + y * w3)
                .collect()
        };
        let (e, w) = self.solve_coeffs(&combine(&n2.eta, &n3.eta), &combine(&n2.w, &n3.w));
        let finite = |v: &[Complex64]| v.iter().all(|c| c.re.is_finite() && c.im.is_finite());
        if !finite(&e) || !finite(&w) {
            return Err(Breakdown::NonFinite);
        }
        Ok(FieldPair {
            eta: SpectralField::from_coeffs_symmetrized(&self.grid, e)
                .map_err(|_| Breakdown::NonFinite)?,
            w: SpectralField::from_coeffs_symmetrized(&self.grid, w)
                .map_err(|_| Breakdown::NonFinite)?,
        })
    }
}

/// Converged or final profiles, in full variables.
#[derive(Debug, Clone)]
pub struct BoussinesqSolution {
    pub eta: SpectralField,
    pub w: SpectralField,
    /// Differences from the constant solution.
    pub shifted: FieldPair,
    pub trace: IterationTrace,
}

/// Iterates the shifted system on `grid` from `u0` and adds the constants back.
pub fn solve_boussinesq(
    sh: &BoussinesqShifted,
    grid: &PeriodicGrid,
    u0: &FieldPair,
    settings: &IterationSettings,
    accel: Option<&MpeConfig>,
) -> Result<BoussinesqSolution> {
    if !u0.grid().same_as(grid) {
        return Err(Error::Config(
            "initial pair lives on a different grid".into(),
        ));
    }
    let res = match BoussinesqIteration::new(sh, grid) {
        Ok(problem) => run(&problem, u0, settings, accel)?,
        Err(Error::Singular(_)) => SolveResult {
            state: u0.clone(),
            trace: IterationTrace {
                rows: Vec::new(),
                outcome: Outcome::SingularDenominator,
            },
            iterates: Vec::new(),
        },
        Err(e) => return Err(e),
    };
    let one = SpectralField::constant(grid, 1.0);
    Ok(BoussinesqSolution {
        eta: res.state.eta.axpy(sh.constants.c1, &one)?,
        w: res.state.w.axpy(sh.constants.c2, &one)?,
        shifted: res.state,
        trace: res.trace,
    })
}

/// Left side minus nonlinear terms of the integrated profile system at
/// full profiles `(eta, w)`; constant and equal to `(A1, A2)` on a solution.
pub fn integrated_flux(
    p: &BoussinesqParams,
    speed: f64,
    eta: &SpectralField,
    w: &SpectralField,
) -> Result<(SpectralField, SpectralField)> {
    let grid = eta.grid();
    let k2: Vec<f64> = grid.wavenumbers().iter().map(|k| k * k).collect();
    let mut g1 = Vec::with_capacity(k2.len());
    let mut g2 = Vec::with_capacity(k2.len());
    for ((a, b), k2) in eta.coeffs().iter().zip(w.coeffs()).zip(&k2) {
        g1.push(a * speed - b * (p.d1() - p.d2() * k2));
        g2.push(-a / p.d1() + b * speed * (1.0 - p.d3() * k2));
    }
    let (d4, d5) = (p.d4(), p.d5());
    let n1 = dealiased_bivariate(eta, w, &[(-d4, 1, 1), (d5, 2, 1)])?;
    let n2 = dealiased_bivariate(eta, w, &[(-d4 / 2.0, 0, 2), (d5, 1, 2)])?;
    Ok((
        SpectralField::from_coeffs(grid, g1)?.axpy(1.0, &n1)?,
        SpectralField::from_coeffs(grid, g2)?.axpy(1.0, &n2)?,
    ))
}

/// Compares the full-system residual at `(eta~ + C1, W~ + C2)` with the
/// shifted residual at `(eta~, W~)`.
pub fn system_shift_equivalence(sh: &BoussinesqShifted, u: &FieldPair) -> Result<ShiftCheck> {
    let grid = u.grid();
    let one = SpectralField::constant(grid, 1.0);
    let eta = u.eta.axpy(sh.constants.c1, &one)?;
    let w = u.w.axpy(sh.constants.c2, &one)?;
    let (g1, g2) = integrated_flux(&sh.params, sh.speed, &eta, &w)?;
    let full = FieldPair {
        eta: g1.axpy(-sh.a1, &one)?,
        w: g2.axpy(-sh.a2, &one)?,
    };
    let it = BoussinesqIteration::new(sh, grid)?;
    let shifted = it.apply_linear(u)?.axpy(-1.0, &it.nonlinearity(u)?)?;
    Ok(ShiftCheck {
        full: full.norm(),
        shifted: shifted.norm(),
        difference: full.axpy(-1.0, &shifted)?.norm(),
    })
}

/// Initial pairs for the shifted system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairSeed {
    /// `a sech^2(k x)` on `eta~` with `a = |c|`, `k = sqrt(|c|)/2`, and `W~ = (c/d1) eta~`.
    #[default]
    Sech2,
    /// Two-term Stokes expansion of the small-amplitude wave bifurcating
    /// from the fundamental mode `pi / l`.
    Stokes,
}

impl PairSeed {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sech2 => "sech2",
            Self::Stokes => "stokes",
        }
    }
}

pub fn boussinesq_seed(
    sh: &BoussinesqShifted,
    grid: &PeriodicGrid,
    profile: PairSeed,
) -> Result<FieldPair> {
    match profile {
        PairSeed::Sech2 => {
            let c = sh.speed;
            let k = c.abs().sqrt() / 2.0;
            let eta = SpectralField::from_fn(grid, |x| c.abs() / (k * x).cosh().powi(2));
            let w = eta.scaled(c / sh.params.d1());
            Ok(FieldPair { eta, w })
        }
        PairSeed::Stokes => stokes_pair(sh, grid),
    }
}

type Mat2 = [[f64; 2]; 2];

fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn solve2(m: &Mat2, r: [f64; 2]) -> [f64; 2] {
    let d = det2(m);
    [
        (r[0] * m[1][1] - r[1] * m[0][1]) / d,
        (r[1] * m[0][0] - r[0] * m[1][0]) / d,
    ]
}

/// Kernel vector of the singular matrix `m` (or of its transpose).
fn null_vector(m: &Mat2, transpose: bool) -> [f64; 2] {
    let (a, b, c, d) = if transpose {
        (m[0][0], m[1][0], m[0][1], m[1][1])
    } else {
        (m[0][0], m[0][1], m[1][0], m[1][1])
    };
    let v = if a.abs() + b.abs() >= c.abs() + d.abs() {
        [b, -a]
    } else {
        [d, -c]
    };
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// `eps v cos(kx) + eps^2 (a0 + a2 cos 2kx)` with `k = pi/l`, where `v` spans
/// the near-kernel of the mode matrix at `k` and `eps` solves the cubic-order
/// amplitude equation projected on the adjoint near-kernel.
fn stokes_pair(sh: &BoussinesqShifted, grid: &PeriodicGrid) -> Result<FieldPair> {
    let k = std::f64::consts::PI / grid.half_length();
    let m = mode_matrix(sh, k);
    let half_trace = 0.5 * (m[0][0] + m[1][1]);
    let disc = half_trace * half_trace - det2(&m);
    if disc < 0.0 {
        return Err(Error::Argument(format!(
            "mode matrix at k = {k} has complex eigenvalues; no Stokes seed"
        )));
    }
    let lam = [half_trace - disc.sqrt(), half_trace + disc.sqrt()]
        .into_iter()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    let shifted = [[m[0][0] - lam, m[0][1]], [m[1][0], m[1][1] - lam]];
    let v = null_vector(&shifted, false);
    let w = null_vector(&shifted, true);

    let [quad, cubic] = sh.term_table();
    let bilinear = |x: [f64; 2], y: [f64; 2]| -> [f64; 2] {
        let eval = |terms: &[(f64, u32, u32)]| -> f64 {
            terms
                .iter()
                .map(|&(c, a, b)| {
                    c * match (a, b) {
                        (2, 0) => x[0] * y[0],
                        (0, 2) => x[1] * y[1],
                        _ => 0.5 * (x[0] * y[1] + x[1] * y[0]),
                    }
                })
                .sum()
        };
        [eval(&quad[0]), eval(&quad[1])]
    };
    let cube = |terms: &[(f64, u32, u32)]| -> f64 {
        terms
            .iter()
            .map(|&(c, a, b)| c * v[0].powi(a as i32) * v[1].powi(b as i32))
            .sum()
    };
    let q = bilinear(v, v);
    let half_q = [0.5 * q[0], 0.5 * q[1]];
    let (m0, m2) = (mode_matrix(sh, 0.0), mode_matrix(sh, 2.0 * k));
    if det2(&m0).abs() <= DETERMINANT_GUARD || det2(&m2).abs() <= DETERMINANT_GUARD {
        return Err(Error::Singular(
            "Stokes seed needs invertible modes 0 and 2k".into(),
        ));
    }
    let a0 = solve2(&m0, half_q);
    let a2 = solve2(&m2, half_q);
    let (b0, b2) = (bilinear(v, a0), bilinear(v, a2));
    let r = [
        2.0 * b0[0] + b2[0] + 0.75 * cube(&cubic[0]),
        2.0 * b0[1] + b2[1] + 0.75 * cube(&cubic[1]),
    ];
    let eps2 = lam * (w[0] * v[0] + w[1] * v[1]) / (w[0] * r[0] + w[1] * r[1]);
    if !(eps2 > 0.0 && eps2.is_finite()) {
        return Err(Error::Argument(format!(
            "no small-amplitude wave of half-period {} bifurcates here (eps^2 = {eps2:e})",
            grid.half_length()
        )));
    }
    let eps = eps2.sqrt();
    let component = |i: usize| {
        SpectralField::from_fn(grid, |x| {
            eps * v[i] * (k * x).cos() + eps2 * (a0[i] + a2[i] * (2.0 * k * x).cos())
        })
    };
    Ok(FieldPair {
        eta: component(0),
        w: component(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig3() -> (BoussinesqParams, f64) {
        let p = BoussinesqParams::lower_s(0.8, 0.95).unwrap();
        let c = p.vmax() - 1e-4;
        (p, c)
    }

    #[test]
    fn coefficients() {
        let p = BoussinesqParams::new(0.8, 0.95, -1.76).unwrap();
        assert_relative_eq!(p.d1(), 0.95 / 1.75, epsilon = 1e-15);
        assert!((p.d1() - 0.542857).abs() < 5e-7);
        assert_relative_eq!(p.d3(), -1.76 * p.d1() / 2.0, epsilon = 1e-15);
        assert!(p.range_warning().is_none());
        assert!(BoussinesqParams::new(0.8, 0.95, 0.0)
            .unwrap()
            .range_warning()
            .is_some());
        assert!(BoussinesqParams::new(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn vmax_values() {
        assert!((boussinesq_vmax(0.8, 0.95) - 1.000454).abs() < 5e-7);
        assert!((boussinesq_vmax(0.8, 1.8) - 1.065919).abs() < 5e-7);
        assert_eq!(boussinesq_vmax(0.25, 0.5), 1.0);
    }

    #[test]
    fn homogeneous_constants_contain_origin() {
        let (p, c) = fig3();
        let found = find_boussinesq_constants(&p, c, 0.0, 0.0).unwrap();
        assert_eq!(found.pairs[0].c1, 0.0);
        assert_eq!(found.pairs[0].c2, 0.0);
    }

    #[test]
    fn unit_speed_is_rejected() {
        let (p, _) = fig3();
        assert!(find_boussinesq_constants(&p, 1.0, -1.0, -2.0).is_err());
        assert!(find_boussinesq_constants(&p, -1.0, -1.0, -2.0).is_err());
    }

    #[test]
    fn zero_mode_matrix() {
        let (p, c) = fig3();
        let zero = BoussinesqConstants {
            c1: 0.0,
            c2: 0.0,
            residuals: [0.0; 2],
        };
        let sh = BoussinesqShifted::new(p, c, 0.0, 0.0, zero).unwrap();
        let m = mode_matrix(&sh, 0.0);
        assert_eq!(m, [[c, -p.d1()], [-1.0 / p.d1(), c]]);
        assert_relative_eq!(
            m[0][0] * m[1][1] - m[0][1] * m[1][0],
            c * c - 1.0,
            epsilon = 1e-15
        );
        assert_eq!(mode_matrix(&sh, 1.3), mode_matrix(&sh, -1.3));

        let unit = BoussinesqShifted::new(p, 1.0, 0.0, 0.0, zero).unwrap();
        let grid = PeriodicGrid::new(10.0, 16).unwrap();
        assert!(matches!(
            BoussinesqIteration::new(&unit, &grid),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn per_mode_solve_inverts_matrix() {
        let (p, c) = fig3();
        let found = find_boussinesq_constants(&p, c, -1.0, -2.0).unwrap();
        let sh = BoussinesqShifted::new(p, c, -1.0, -2.0, found.pairs[0]).unwrap();
        let grid = PeriodicGrid::new(12.0, 32).unwrap();
        let it = BoussinesqIteration::new(&sh, &grid).unwrap();
        let rhs = FieldPair {
            eta: SpectralField::from_fn(&grid, |x| (0.5 * x).sin() + 0.2),
            w: SpectralField::from_fn(&grid, |x| (-x * x / 8.0).exp()),
        };
        let x = it.solve_linear(&rhs).unwrap();
        let back = it.apply_linear(&x).unwrap();
        assert!(back.axpy(-1.0, &rhs).unwrap().norm() < 1e-12);
    }

    #[test]
    fn degree_partition_is_homogeneous() {
        let (p, c) = fig3();
        let found = find_boussinesq_constants(&p, c, -1.0, -2.0).unwrap();
        let sh = BoussinesqShifted::new(p, c, -1.0, -2.0, found.pairs[0]).unwrap();
        let grid = PeriodicGrid::new(12.0, 32).unwrap();
        let u = FieldPair {
            eta: SpectralField::from_fn(&grid, |x| (0.5 * x).cos() - 0.3),
            w: SpectralField::from_fn(&grid, |x| 0.7 * (x / 3.0).sin()),
        };
        let (n2, n3) = boussinesq_nonlinearity(&sh, &u).unwrap();
        let total = |v: &FieldPair| {
            let (a, b) = boussinesq_nonlinearity(&sh, v).unwrap();
            a.axpy(1.0, &b).unwrap()
        };
        let expected = n2.scaled(4.0).axpy(8.0, &n3).unwrap();
        assert!(total(&u.scaled(2.0)).axpy(-1.0, &expected).unwrap().norm() < 1e-12);

        let (z2, z3) = boussinesq_nonlinearity(&sh, &FieldPair::zeros(&grid)).unwrap();
        assert_eq!(z2.norm() + z3.norm(), 0.0);
    }

    #[test]
    fn shift_equivalence_on_smooth_pair() {
        let (p, c) = fig3();
        let found = find_boussinesq_constants(&p, c, -1.0, -2.0).unwrap();
        let sh = BoussinesqShifted::new(p, c, -1.0, -2.0, found.pairs[0]).unwrap();
        let grid = PeriodicGrid::new(12.0, 64).unwrap();
        let u = FieldPair {
            eta: SpectralField::from_fn(&grid, |x| 0.4 * (std::f64::consts::PI * x / 12.0).cos()),
            w: SpectralField::from_fn(&grid, |x| 0.1 * (std::f64::consts::PI * x / 6.0).sin()),
        };
        let check = system_shift_equivalence(&sh, &u).unwrap();
        assert!(check.full > 1e-3);
        assert!(check.difference < 1e-12 * (1.0 + check.full));
    }

    fn fig4_far_branch() -> BoussinesqShifted {
        let p = BoussinesqParams::lower_s(0.8, 1.8).unwrap();
        let c = p.vmax() - 1e-4;
        let found = find_boussinesq_constants(&p, c, 1.0, 1.0).unwrap();
        BoussinesqShifted::new(p, c, 1.0, 1.0, found.pairs[2]).unwrap()
    }

    #[test]
    fn stokes_pair_is_small_near_bifurcation() {
        let sh = fig4_far_branch();
        // First zero of the determinant along k.
        let (mut lo, mut hi) = (1.0, 3.0);
        assert!(det2(&mode_matrix(&sh, lo)) > 0.0 && det2(&mode_matrix(&sh, hi)) < 0.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if det2(&mode_matrix(&sh, mid)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lcrit = std::f64::consts::PI / lo;
        let near = PeriodicGrid::new(1.0005 * lcrit, 32).unwrap();
        let u0 = boussinesq_seed(&sh, &near, PairSeed::Stokes).unwrap();
        let it = BoussinesqIteration::new(&sh, &near).unwrap();
        let amp = u0.norm();
        assert!(amp > 1e-3 && amp < 0.5, "amplitude {amp}");
        // Residual is O(eps^3) smaller than the seed.
        assert!(it.residual_norm(&u0).unwrap() < amp.powi(3));

        let sub = PeriodicGrid::new(0.99 * lcrit, 32).unwrap();
        assert!(boussinesq_seed(&sh, &sub, PairSeed::Stokes).is_err());
    }
}
