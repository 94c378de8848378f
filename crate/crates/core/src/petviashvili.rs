// SPDX-License-Identifier: Apache-2.0

//! Extended Petviashvili iteration for `L u = sum_j N_j(u)` with homogeneous
//! terms `N_j` of degree `j`.
//!
//! Each step computes the stabilizing factor `s(u) = <Lu, u> / <N(u), u>`
//! once and solves `L u_next = sum_j s(u)^(j/(j-1)) N_j(u)` mode by mode. The
//! residual `|Lu - N(u)|` and the factor discrepancy `|s - 1|` are recorded
//! at every evaluated iterate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpe::{mpe_extrapolate, MpeConfig};
use crate::shift::ShiftedProblem;
use crate::spectral::{dealiased_powers, inner_product, PeriodicGrid, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterationSettings {
    pub max_iter: usize,
    pub tol_res: f64,
    pub tol_sfe: f64,
    /// Iterates whose norm exceeds this are declared divergent.
    pub divergence_cap: f64,
    /// Keep every evaluated iterate alongside the trace.
    pub record_iterates: bool,
}

impl Default for IterationSettings {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol_res: 1e-12,
            tol_sfe: 1e-12,
            divergence_cap: 1e8,
            record_iterates: false,
        }
    }
}

impl IterationSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        for (name, v) in [
            ("tol_res", self.tol_res),
            ("tol_sfe", self.tol_sfe),
            ("divergence_cap", self.divergence_cap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Converged,
    MaxIter,
    Diverged,
    SingularDenominator,
    SignBreakdown,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::MaxIter => "max-iter",
            Outcome::Diverged => "diverged",
            Outcome::SingularDenominator => "singular-denominator",
            Outcome::SignBreakdown => "sign-breakdown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    /// Produced by a plain iteration step (or the initial iterate).
    Base,
    /// Extrapolated vector accepted as the next seed.
    Extrapolated,
    /// Extrapolated vector evaluated and discarded by the safeguard.
    Rejected,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Base => "base",
            Self::Extrapolated => "extrapolated",
            Self::Rejected => "rejected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub res: f64,
    pub sfe: f64,
    pub s: f64,
    pub kind: RowKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub rows: Vec<TraceRow>,
    pub outcome: Outcome,
}

impl IterationTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Number of evaluated iterates.
    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    /// First iteration index at which both residual and discrepancy fall to `tol`.
    pub fn first_below(&self, tol: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.res <= tol && r.sfe <= tol)
            .map(|r| r.iter)
    }
}

/// `|s - 1|`.
pub fn sfe(s_value: f64) -> f64 {
    (s_value - 1.0).abs()
}

/// Why a step could not be taken from an evaluated iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Breakdown {
    SingularQuotient,
    NegativeFactor(f64),
    NonFinite,
}

impl Breakdown {
    fn outcome(self) -> Outcome {
        match self {
            Breakdown::SingularQuotient => Outcome::SingularDenominator,
            Breakdown::NegativeFactor(_) => Outcome::SignBreakdown,
            Breakdown::NonFinite => Outcome::Diverged,
        }
    }

    fn into_error(self) -> Error {
        match self {
            Breakdown::SingularQuotient => {
                Error::Breakdown("<N(u), u> vanishes; stabilizing factor undefined".into())
            }
            Breakdown::NegativeFactor(s) => Error::Breakdown(format!(
                "stabilizing factor {s} is negative and a fractional exponent is required"
            )),
            Breakdown::NonFinite => Error::Breakdown("non-finite iterate".into()),
        }
    }
}

/// Everything computed at one iterate.
#[derive(Debug, Clone)]
pub struct Evaluation<S> {
    pub residual: f64,
    pub factor: Option<f64>,
    pub next: std::result::Result<S, Breakdown>,
}

/// A profile equation solvable by the stabilized fixed-point driver.
pub trait FixedPointProblem {
    type State: Clone;

    /// Residual, stabilizing factor and next iterate at `u`.
    fn evaluate(&self, u: &Self::State) -> Result<Evaluation<Self::State>>;

    /// Flattens a state into real node values, used for extrapolation.
    fn to_vector(&self, u: &Self::State) -> Result<Vec<f64>>;

    fn state_from_vector(&self, v: &[f64]) -> Result<Self::State>;

    fn magnitude(&self, u: &Self::State) -> f64;
}

/// `s^exponent`, with even integer exponents allowed for negative `s`.
pub(crate) fn factor_power(s: f64, exponent: f64) -> Option<f64> {
    if exponent == 2.0 {
        Some(s * s)
    } else if s < 0.0 {
        None
    } else {
        Some(s.powf(exponent))
    }
}

/// Scalar shifted problem bound to a grid.
#[derive(Debug, Clone)]
pub struct ScalarIteration {
    grid: PeriodicGrid,
    symbol: Vec<f64>,
    terms: Vec<f64>,
    exponents: Vec<f64>,
}

impl ScalarIteration {
    pub fn new(sp: &ShiftedProblem, grid: &PeriodicGrid) -> Result<Self> {
        Ok(Self {
            grid: grid.clone(),
            symbol: sp.bind(grid)?,
            terms: sp.term_coeffs.clone(),
            exponents: sp.exponents(),
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Shifted linear symbol values in FFT slot order.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// Homogeneous parts `N_j(u) = b_j u^j`.
    pub fn terms_of(&self, u: &SpectralField) -> Result<Vec<SpectralField>> {
        let powers = dealiased_powers(u, self.terms.len() + 1)?;
        Ok(self
            .terms
            .iter()
            .zip(&powers[1..])
            .map(|(b, pw)| pw.scaled(*b))
            .collect())
    }

    pub fn apply_linear(&self, u: &SpectralField) -> SpectralField {
        u.weighted(&self.symbol)
    }

    pub fn nonlinearity(&self, u: &SpectralField) -> Result<SpectralField> {
        let parts = self.terms_of(u)?;
        let mut total = SpectralField::zeros(&self.grid);
        for part in &parts {
            total = total.axpy(1.0, part)?;
        }
        Ok(total)
    }

    pub fn residual_norm(&self, u: &SpectralField) -> Result<f64> {
        Ok((&self.apply_linear(u) - &self.nonlinearity(u)?).norm())
    }

    pub fn stabilizing_factor(&self, u: &SpectralField) -> Result<f64> {
        self.evaluate(u)?
            .factor
            .ok_or_else(|| Breakdown::SingularQuotient.into_error())
    }

    pub fn step(&self, u: &SpectralField) -> Result<SpectralField> {
        self.evaluate(u)?.next.map_err(Breakdown::into_error)
    }
}

impl FixedPointProblem for ScalarIteration {
    type State = SpectralField;

    fn evaluate(&self, u: &SpectralField) -> Result<Evaluation<SpectralField>> {
        let parts = self.terms_of(u)?;
        let mut total = SpectralField::zeros(&self.grid);
        for part in &parts {
            total = total.axpy(1.0, part)?;
        }
        let lu = self.apply_linear(u);
        let residual = (&lu - &total).norm();
        let num = inner_product(&lu, u)?;
        let den = inner_product(&total, u)?;
        let factor = (den.abs() > 1e-300 && num.is_finite() && den.is_finite()).then(|| num / den);
        let next = match factor {
            None => Err(Breakdown::SingularQuotient),
            Some(s) => self.next_from(s, &parts),
        };
        Ok(Evaluation {
            residual,
            factor,
            next,
        })
    }

    fn to_vector(&self, u: &SpectralField) -> Result<Vec<f64>> {
        u.values()
    }

    fn state_from_vector(&self, v: &[f64]) -> Result<SpectralField> {
        SpectralField::from_values(&self.grid, v)
    }

    fn magnitude(&self, u: &SpectralField) -> f64 {
        u.norm()
    }
}

impl ScalarIteration {
    fn next_from(
        &self,
        s: f64,
        parts: &[SpectralField],
    ) -> std::result::Result<SpectralField, Breakdown> {
        let mut rhs = vec![Complex64::new(0.0, 0.0); self.grid.n_modes()];
        for (part, &alpha) in parts.iter().zip(&self.exponents) {
            let w = factor_power(s, alpha).ok_or(Breakdown::NegativeFactor(s))?;
            rhs.iter_mut()
                .zip(part.coeffs())
                .for_each(|(r, c)| *r += c * w);
        }
        rhs.iter_mut().zip(&self.symbol).for_each(|(r, d)| *r /= d);
        if rhs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Breakdown::NonFinite);
        }
        SpectralField::from_coeffs_symmetrized(&self.grid, rhs).map_err(|_| Breakdown::NonFinite)
    }
}

/// Stabilizing factor `s(u)` of the shifted problem on `u`'s grid.
pub fn stabilizing_factor(sp: &ShiftedProblem, u: &SpectralField) -> Result<f64> {
    ScalarIteration::new(sp, u.grid())?.stabilizing_factor(u)
}

/// One extended Petviashvili step on `u`'s grid.
pub fn petviashvili_step(sp: &ShiftedProblem, u: &SpectralField) -> Result<SpectralField> {
    ScalarIteration::new(sp, u.grid())?.step(u)
}

/// Euclidean norm of the coefficients of `L~ u - N(u)`.
pub fn residual_norm(sp: &ShiftedProblem, u: &SpectralField) -> Result<f64> {
    ScalarIteration::new(sp, u.grid())?.residual_norm(u)
}

/// Final state, trace and (optionally) every evaluated iterate.
#[derive(Debug, Clone)]
pub struct SolveResult<S> {
    pub state: S,
    pub trace: IterationTrace,
    pub iterates: Vec<S>,
}

struct Recorder<'a, S> {
    settings: &'a IterationSettings,
    rows: Vec<TraceRow>,
    iterates: Vec<S>,
}

impl<S: Clone> Recorder<'_, S> {
    fn push(&mut self, state: &S, ev: &Evaluation<S>, kind: RowKind) {
        let s = ev.factor.unwrap_or(f64::NAN);
        self.rows.push(TraceRow {
            iter: self.rows.len(),
            res: ev.residual,
            sfe: sfe(s),
            s,
            kind,
        });
        if self.settings.record_iterates {
            self.iterates.push(state.clone());
        }
    }

    fn exhausted(&self) -> bool {
        self.rows.len() >= self.settings.max_iter
    }

    fn converged(&self, ev: &Evaluation<S>) -> bool {
        ev.residual <= self.settings.tol_res
            && ev.factor.is_some_and(|s| sfe(s) <= self.settings.tol_sfe)
    }

    fn finish(self, state: S, outcome: Outcome) -> SolveResult<S> {
        SolveResult {
            state,
            trace: IterationTrace {
                rows: self.rows,
                outcome,
            },
            iterates: self.iterates,
        }
    }
}

fn diverged<P: FixedPointProblem>(
    problem: &P,
    state: &P::State,
    ev: &Evaluation<P::State>,
    cap: f64,
) -> bool {
    let m = problem.magnitude(state);
    !ev.residual.is_finite() || !m.is_finite() || m > cap
}

/// Iterates `problem` from `u0` until both tolerances are met or a
/// non-convergent outcome is reached, optionally cycling through MPE.
pub fn run<P: FixedPointProblem>(
    problem: &P,
    u0: &P::State,
    settings: &IterationSettings,
    accel: Option<&MpeConfig>,
) -> Result<SolveResult<P::State>> {
    settings.validate()?;
    if problem.magnitude(u0) == 0.0 {
        return Err(Error::Argument("initial iterate must be nonzero".into()));
    }
    let mut rec = Recorder {
        settings,
        rows: Vec::new(),
        iterates: Vec::new(),
    };
    match accel {
        None => run_plain(problem, u0.clone(), rec),
        Some(cfg) => {
            cfg.validate()?;
            let seed_ev = problem.evaluate(u0)?;
            rec.push(u0, &seed_ev, RowKind::Base);
            run_mpe(problem, u0.clone(), seed_ev, cfg, rec)
        }
    }
}

fn run_plain<P: FixedPointProblem>(
    problem: &P,
    mut u: P::State,
    mut rec: Recorder<'_, P::State>,
) -> Result<SolveResult<P::State>> {
    loop {
        if rec.exhausted() {
            return Ok(rec.finish(u, Outcome::MaxIter));
        }
        let ev = problem.evaluate(&u)?;
        rec.push(&u, &ev, RowKind::Base);
        if rec.converged(&ev) {
            return Ok(rec.finish(u, Outcome::Converged));
        }
        if diverged(problem, &u, &ev, rec.settings.divergence_cap) {
            return Ok(rec.finish(u, Outcome::Diverged));
        }
        match ev.next {
            Ok(next) => u = next,
            Err(b) => return Ok(rec.finish(u, b.outcome())),
        }
    }
}

fn run_mpe<P: FixedPointProblem>(
    problem: &P,
    mut seed: P::State,
    mut seed_ev: Evaluation<P::State>,
    cfg: &MpeConfig,
    mut rec: Recorder<'_, P::State>,
) -> Result<SolveResult<P::State>> {
    let cap = rec.settings.divergence_cap;
    loop {
        let mut vectors = vec![problem.to_vector(&seed)?];
        let mut cur = seed.clone();
        let mut cur_ev = seed_ev.clone();
        for _ in 0..=cfg.width {
            if rec.converged(&cur_ev) {
                return Ok(rec.finish(cur, Outcome::Converged));
            }
            if diverged(problem, &cur, &cur_ev, cap) {
                return Ok(rec.finish(cur, Outcome::Diverged));
            }
            let next = match cur_ev.next {
                Ok(next) => next,
                Err(b) => return Ok(rec.finish(cur, b.outcome())),
            };
            if rec.exhausted() {
                return Ok(rec.finish(next, Outcome::MaxIter));
            }
            cur_ev = problem.evaluate(&next)?;
            rec.push(&next, &cur_ev, RowKind::Base);
            cur = next;
            vectors.push(problem.to_vector(&cur)?);
        }
        if rec.converged(&cur_ev) {
            return Ok(rec.finish(cur, Outcome::Converged));
        }
        if diverged(problem, &cur, &cur_ev, cap) {
            return Ok(rec.finish(cur, Outcome::Diverged));
        }

        if !rec.exhausted() {
            if let Ok(y) = mpe_extrapolate(&vectors, cfg.ls_tolerance) {
                let ys = problem.state_from_vector(&y)?;
                let y_ev = problem.evaluate(&ys)?;
                let bound = seed_ev.residual.min(cur_ev.residual) * (1.0 + 1e-12);
                let accepted = y_ev.residual.is_finite()
                    && (!cfg.safeguard || y_ev.residual <= bound)
                    && problem.magnitude(&ys) <= cap;
                let kind = if accepted {
                    RowKind::Extrapolated
                } else {
                    RowKind::Rejected
                };
                rec.push(&ys, &y_ev, kind);
                if accepted && rec.converged(&y_ev) {
                    return Ok(rec.finish(ys, Outcome::Converged));
                }
                if accepted && cfg.restart {
                    seed = ys;
                    seed_ev = y_ev;
                    continue;
                }
            }
        }
        seed = cur;
        seed_ev = cur_ev;
    }
}

/// Solves the shifted scalar problem on `grid` from `u0`; the returned
/// profile is the shifted variable `phi - C`.
pub fn solve(
    sp: &ShiftedProblem,
    grid: &PeriodicGrid,
    u0: &SpectralField,
    settings: &IterationSettings,
    accel: Option<&MpeConfig>,
) -> Result<(SpectralField, IterationTrace)> {
    let res = solve_detailed(sp, grid, u0, settings, accel)?;
    Ok((res.state, res.trace))
}

pub fn solve_detailed(
    sp: &ShiftedProblem,
    grid: &PeriodicGrid,
    u0: &SpectralField,
    settings: &IterationSettings,
    accel: Option<&MpeConfig>,
) -> Result<SolveResult<SpectralField>> {
    if !u0.grid().same_as(grid) {
        return Err(Error::Config(
            "initial iterate lives on a different grid".into(),
        ));
    }
    let problem = match ScalarIteration::new(sp, grid) {
        Ok(p) => p,
        Err(Error::Singular(_)) => {
            return Ok(SolveResult {
                state: u0.clone(),
                trace: IterationTrace {
                    rows: Vec::new(),
                    outcome: Outcome::SingularDenominator,
                },
                iterates: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };
    run(&problem, u0, settings, accel)
}

/// Initial iterate shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedProfile {
    /// `a sech^2(k x)` with `a = c`, `k = sqrt(c)/2`.
    #[default]
    Sech2,
    /// `a exp(-(k x)^2)` with the same `a`, `k`.
    Gaussian,
    /// `a cos(pi x / l)` with `a = c`.
    Cos,
    /// Two-term Stokes expansion of the small-amplitude wave bifurcating
    /// from the fundamental mode `pi / l`.
    Stokes,
}

impl SeedProfile {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sech2 => "sech2",
            Self::Gaussian => "gaussian",
            Self::Cos => "cos",
            Self::Stokes => "stokes",
        }
    }
}

/// Initial iterate for the shifted problem `sp` on `grid`.
pub fn seed_field(
    sp: &ShiftedProblem,
    grid: &PeriodicGrid,
    profile: SeedProfile,
) -> Result<SpectralField> {
    let amp = sp.speed;
    let k = sp.speed.sqrt() / 2.0;
    let l = grid.half_length();
    Ok(match profile {
        SeedProfile::Sech2 => SpectralField::from_fn(grid, |x| amp / (k * x).cosh().powi(2)),
        SeedProfile::Gaussian => SpectralField::from_fn(grid, |x| amp * (-(k * x).powi(2)).exp()),
        SeedProfile::Cos => {
            SpectralField::from_fn(grid, |x| amp * (std::f64::consts::PI * x / l).cos())
        }
        SeedProfile::Stokes => stokes_seed(sp, grid)?,
    })
}

/// `eps cos(kx) + eps^2 (a0 + a2 cos 2kx)` with `k = pi/l`, where `eps` solves
/// the cubic-order amplitude equation of `L~ psi = b2 psi^2 + b3 psi^3`.
fn stokes_seed(sp: &ShiftedProblem, grid: &PeriodicGrid) -> Result<SpectralField> {
    let symbol = sp.linear_symbol();
    let k = std::f64::consts::PI / grid.half_length();
    let b2 = sp.term_coeffs[0];
    let b3 = sp.term_coeffs.get(1).copied().unwrap_or(0.0);
    let (l0, l1, l2) = (symbol.eval(0.0), symbol.eval(k), symbol.eval(2.0 * k));
    if l0 == 0.0 || l2 == 0.0 || b2 == 0.0 {
        return Err(Error::Argument(
            "Stokes seed needs a quadratic term and nonzero symbol at 0 and 2k".into(),
        ));
    }
    let a0 = b2 / (2.0 * l0);
    let a2 = b2 / (2.0 * l2);
    let eps2 = l1 / (b2 * (2.0 * a0 + a2) + 0.75 * b3);
    if !(eps2 > 0.0 && eps2.is_finite()) {
        return Err(Error::Argument(format!(
            "no small-amplitude wave of half-period {} bifurcates here (eps^2 = {eps2:e})",
            grid.half_length()
        )));
    }
    let eps = eps2.sqrt();
    Ok(SpectralField::from_fn(grid, |x| {
        eps * (k * x).cos() + eps2 * (a0 + a2 * (2.0 * k * x).cos())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ScalarModel;
    use crate::shift::{build_shifted, find_constants};
    use approx::assert_relative_eq;

    fn kdv_problem() -> ShiftedProblem {
        let m = ScalarModel::fkdv(2.0, 3).unwrap();
        let b = find_constants(&m, 1.0, 0.0).unwrap();
        build_shifted(&m, 1.0, 0.0, &b[0]).unwrap()
    }

    #[test]
    fn sfe_values() {
        assert_eq!(sfe(1.0), 0.0);
        assert_relative_eq!(sfe(0.9), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn factor_of_exact_solution_is_one() {
        // 3 sech^2(x/2) solves psi - psi'' = psi^2/2 up to exponentially small periodic tails.
        let grid = PeriodicGrid::new(50.0, 512).unwrap();
        let exact = SpectralField::from_fn(&grid, |x| 3.0 / (x / 2.0).cosh().powi(2));
        let sp = kdv_problem();
        assert_relative_eq!(
            stabilizing_factor(&sp, &exact).unwrap(),
            1.0,
            epsilon = 1e-10
        );
        assert!(residual_norm(&sp, &exact).unwrap() < 1e-10);
    }

    #[test]
    fn single_term_factor_homogeneity() {
        let grid = PeriodicGrid::new(20.0, 128).unwrap();
        let u = SpectralField::from_fn(&grid, |x| 1.0 + 0.5 * (-x * x / 4.0).exp());
        let sp = kdv_problem();
        let s1 = stabilizing_factor(&sp, &u).unwrap();
        for lambda in [0.5, 3.0] {
            let s = stabilizing_factor(&sp, &u.scaled(lambda)).unwrap();
            assert_relative_eq!(s, s1 / lambda, max_relative = 1e-12);
        }
    }

    #[test]
    fn max_iter_one_records_one_row() {
        let grid = PeriodicGrid::new(50.0, 256).unwrap();
        let sp = kdv_problem();
        let u0 = seed_field(&sp, &grid, SeedProfile::Sech2).unwrap();
        let settings = IterationSettings {
            max_iter: 1,
            ..Default::default()
        };
        let (_, trace) = solve(&sp, &grid, &u0, &settings, None).unwrap();
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.outcome, Outcome::MaxIter);
    }

    #[test]
    fn zero_seed_rejected() {
        let grid = PeriodicGrid::new(50.0, 64).unwrap();
        let sp = kdv_problem();
        let err = solve(
            &sp,
            &grid,
            &SpectralField::zeros(&grid),
            &Default::default(),
            None,
        );
        assert!(matches!(err, Err(Error::Argument(_))));
    }

    #[test]
    fn settings_validation() {
        let bad = IterationSettings {
            max_iter: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = IterationSettings {
            tol_res: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn singular_symbol_is_reported_as_outcome() {
        let m = ScalarModel::fkdv(2.0, 3).unwrap();
        let b = find_constants(&m, 1.0, 0.0).unwrap();
        let sp = build_shifted(&m, 1.0, 0.0, &b[1]).unwrap();
        let grid = PeriodicGrid::new(std::f64::consts::PI, 16).unwrap();
        let u0 = seed_field(&sp, &grid, SeedProfile::Cos).unwrap();
        let (_, trace) = solve(&sp, &grid, &u0, &Default::default(), None).unwrap();
        assert_eq!(trace.outcome, Outcome::SingularDenominator);
    }

    #[test]
    fn negative_factor_with_fractional_exponent_breaks_down() {
        assert_eq!(factor_power(-0.5, 2.0), Some(0.25));
        assert_eq!(factor_power(-0.5, 1.5), None);
        assert_relative_eq!(factor_power(4.0, 1.5).unwrap(), 8.0);
    }

    #[test]
    fn stokes_seed_balances_fundamental_mode() {
        // p = 4, mu = 1.5, A = c = 1 near the first bifurcation point.
        let m = ScalarModel::fkdv(1.5, 4).unwrap();
        let b = find_constants(&m, 1.0, 1.0).unwrap();
        let sp = build_shifted(&m, 1.0, 1.0, &b[0]).unwrap();
        let kstar = (sp.linear_shift - 1.0).powf(1.0 / 1.5);
        let l = 1.0005 * std::f64::consts::PI / kstar;
        let grid = PeriodicGrid::new(l, 64).unwrap();
        let u0 = seed_field(&sp, &grid, SeedProfile::Stokes).unwrap();
        let it = ScalarIteration::new(&sp, &grid).unwrap();
        let r = &it.apply_linear(&u0) - &it.nonlinearity(&u0).unwrap();
        // Residual is O(eps^4) while the seed is O(eps).
        let eps = 2.0 * u0.coeff(1).norm();
        assert!(eps > 1e-3 && eps < 0.1);
        assert!(r.coeff(1).norm() < 10.0 * eps.powi(4));

        let far = PeriodicGrid::new(0.9 * std::f64::consts::PI / kstar, 64).unwrap();
        assert!(seed_field(&sp, &far, SeedProfile::Stokes).is_err());
    }
}
