// SPDX-License-Identifier: Apache-2.0

//! Fourier pseudospectral machinery on a uniform periodic grid.
//!
//! A real function on `[-l, l)` is stored through its discrete Fourier
//! coefficients `c_n`, `n = -N/2 .. N/2-1`, of the basis `exp(i n pi x / l)`.
//! The forward transform carries the `1/N` factor so `c_0` is the mean of the
//! node values. Coefficients are kept in FFT order: slot `k` holds mode `k`
//! for `k < N/2` and mode `k - N` otherwise, so slot `N/2` is the Nyquist
//! mode `-N/2`.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Symmetry and imaginary-residue tolerance for real-valued fields.
pub const REALNESS_TOL: f64 = 1e-10;

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plans(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = planner().lock().unwrap_or_else(|e| e.into_inner());
    (planner.plan_fft_forward(len), planner.plan_fft_inverse(len))
}

/// Signed mode number stored in FFT slot `k` of a length-`len` array.
#[inline]
pub fn mode_of_slot(k: usize, len: usize) -> i64 {
    if k < len / 2 {
        k as i64
    } else {
        k as i64 - len as i64
    }
}

/// FFT slot holding signed mode `n` of a length-`len` array.
#[inline]
pub fn slot_of_mode(n: i64, len: usize) -> usize {
    n.rem_euclid(len as i64) as usize
}

/// Smallest even length `>= min` whose prime factors are 2, 3 or 5.
pub fn fast_even_len(min: usize) -> usize {
    let mut m = min.max(2);
    loop {
        if m.is_multiple_of(2) {
            let mut r = m;
            for f in [2, 3, 5] {
                while r.is_multiple_of(f) {
                    r /= f;
                }
            }
            if r == 1 {
                return m;
            }
        }
        m += 1;
    }
}

struct GridInner {
    half_length: f64,
    n_modes: usize,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform grid `x_j = -l + 2lj/N` on one period `[-l, l)`.
///
/// Cloning is cheap; clones share the node array and FFT plans.
#[derive(Clone)]
pub struct PeriodicGrid(Arc<GridInner>);

impl PeriodicGrid {
    pub fn new(half_length: f64, n_modes: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::Config(format!(
                "grid half length must be positive and finite, got {half_length}"
            )));
        }
        if n_modes < 8 || !n_modes.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "grid size must be even and at least 8, got {n_modes}"
            )));
        }
        let h = 2.0 * half_length / n_modes as f64;
        let nodes = (0..n_modes).map(|j| -half_length + h * j as f64).collect();
        let wavenumbers = (0..n_modes)
            .map(|k| mode_of_slot(k, n_modes) as f64 * std::f64::consts::PI / half_length)
            .collect();
        let (forward, inverse) = plans(n_modes);
        Ok(Self(Arc::new(GridInner {
            half_length,
            n_modes,
            nodes,
            wavenumbers,
            forward,
            inverse,
        })))
    }

    pub fn half_length(&self) -> f64 {
        self.0.half_length
    }

    pub fn n_modes(&self) -> usize {
        self.0.n_modes
    }

    pub fn nodes(&self) -> &[f64] {
        &self.0.nodes
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.0.half_length / self.0.n_modes as f64
    }

    /// Wavenumber `n pi / l` of every FFT slot.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.0.wavenumbers
    }

    pub fn same_as(&self, other: &PeriodicGrid) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.n_modes == other.0.n_modes && self.0.half_length == other.0.half_length)
    }

    fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "grid mismatch: ({}, {}) vs ({}, {})",
                self.half_length(),
                self.n_modes(),
                other.half_length(),
                other.n_modes()
            )))
        }
    }
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("half_length", &self.0.half_length)
            .field("n_modes", &self.0.n_modes)
            .finish()
    }
}

/// Real periodic function held as conjugate-symmetric Fourier coefficients.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: PeriodicGrid,
    coeffs: Vec<Complex64>,
}

/// Enforces `c(-n) = conj(c(n))` and real zero/Nyquist modes.
fn symmetrize(coeffs: &mut [Complex64]) {
    let len = coeffs.len();
    coeffs[0].im = 0.0;
    coeffs[len / 2].im = 0.0;
    for k in 1..len / 2 {
        let a = coeffs[k];
        let b = coeffs[len - k].conj();
        let avg = (a + b) * 0.5;
        coeffs[k] = avg;
        coeffs[len - k] = avg.conj();
    }
}

/// Largest deviation from conjugate symmetry.
fn symmetry_defect(coeffs: &[Complex64]) -> f64 {
    let len = coeffs.len();
    let mut defect = coeffs[0].im.abs().max(coeffs[len / 2].im.abs());
    for k in 1..len / 2 {
        defect = defect.max((coeffs[k] - coeffs[len - k].conj()).norm());
    }
    defect
}

/// Alternating sign `(-1)^n` that converts between grid-origin and FFT phases.
#[inline]
fn parity(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Node values of a length-`len` coefficient array on the grid `x_j = -l + 2lj/len`.
fn synthesize(coeffs: &[Complex64], plan: &dyn Fft<f64>) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * parity(k))
        .collect();
    plan.process(&mut buf);
    buf
}

fn analyze(values: impl Iterator<Item = f64>, plan: &dyn Fft<f64>, len: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.map(|v| Complex64::new(v, 0.0)).collect();
    plan.process(&mut buf);
    let scale = 1.0 / len as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= parity(k) * scale;
    }
    buf
}

/// Coefficients of the real node values `values` on `grid`.
pub fn forward_transform(values: &[f64], grid: &PeriodicGrid) -> Result<SpectralField> {
    let n = grid.n_modes();
    if values.len() != n {
        return Err(Error::Config(format!(
            "expected {n} node values, got {}",
            values.len()
        )));
    }
    let mut coeffs = analyze(values.iter().copied(), grid.0.forward.as_ref(), n);
    symmetrize(&mut coeffs);
    Ok(SpectralField {
        grid: grid.clone(),
        coeffs,
    })
}

/// Node values of `field`.
pub fn inverse_transform(field: &SpectralField) -> Result<Vec<f64>> {
    let scale = field.max_abs_coeff().max(1.0);
    let defect = symmetry_defect(&field.coeffs);
    if defect > REALNESS_TOL * scale {
        return Err(Error::Consistency(format!(
            "coefficients violate conjugate symmetry by {defect:e}"
        )));
    }
    let buf = synthesize(&field.coeffs, field.grid.0.inverse.as_ref());
    let residue = buf.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    if residue > REALNESS_TOL * scale {
        return Err(Error::Consistency(format!(
            "imaginary residue {residue:e} after synthesis"
        )));
    }
    Ok(buf.into_iter().map(|z| z.re).collect())
}

impl SpectralField {
    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n_modes()],
        }
    }

    pub fn constant(grid: &PeriodicGrid, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    pub fn from_values(grid: &PeriodicGrid, values: &[f64]) -> Result<Self> {
        forward_transform(values, grid)
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.nodes().iter().map(|&x| f(x)).collect();
        forward_transform(&values, grid).expect("length matches grid")
    }

    /// Builds a field from coefficients in FFT slot order.
    pub fn from_coeffs(grid: &PeriodicGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_modes() {
            return Err(Error::Config(format!(
                "expected {} coefficients, got {}",
                grid.n_modes(),
                coeffs.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Builds a field from FFT-ordered coefficients and projects onto the
    /// conjugate-symmetric subspace.
    pub fn from_coeffs_symmetrized(
        grid: &PeriodicGrid,
        mut coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        if coeffs.len() != grid.n_modes() {
            return Err(Error::Config(format!(
                "expected {} coefficients, got {}",
                grid.n_modes(),
                coeffs.len()
            )));
        }
        symmetrize(&mut coeffs);
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Coefficients in FFT slot order.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `n`, for `-N/2 <= n < N/2`.
    pub fn coeff(&self, n: i64) -> Complex64 {
        let len = self.coeffs.len();
        assert!(
            n >= -(len as i64) / 2 && n < len as i64 / 2,
            "mode {n} outside the representable band"
        );
        self.coeffs[slot_of_mode(n, len)]
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        inverse_transform(self)
    }

    pub fn symmetry_defect(&self) -> f64 {
        symmetry_defect(&self.coeffs)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &SpectralField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * factor)
                .collect(),
        })
    }

    /// Multiplies slot `k` by `weights[k]`.
    pub fn weighted(&self, weights: &[f64]) -> Self {
        debug_assert_eq!(weights.len(), self.coeffs.len());
        Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(weights)
                .map(|(c, w)| c * w)
                .collect(),
        }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs).expect("fields on different grids")
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs).expect("fields on different grids")
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

/// Real even Fourier symbol of a linear operator, `(Lv)^(xi) = symbol(xi) v^(xi)`.
#[derive(Clone)]
pub struct FourierMultiplier {
    symbol: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    label: String,
}

impl FourierMultiplier {
    pub fn new(
        label: impl Into<String>,
        symbol: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            symbol: Arc::new(symbol),
            label: label.into(),
        }
    }

    /// `coefficient * |xi|^exponent`, with the value at `xi = 0` pinned to 0.
    pub fn power_law(coefficient: f64, exponent: f64) -> Self {
        Self::new(format!("{coefficient}|xi|^{exponent}"), move |xi: f64| {
            if xi == 0.0 {
                0.0
            } else {
                coefficient * xi.abs().powf(exponent)
            }
        })
    }

    /// Sum of power-law terms `(coefficient, exponent)`.
    pub fn power_sum(terms: &[(f64, f64)]) -> Self {
        let terms = terms.to_vec();
        let label = terms
            .iter()
            .map(|(c, e)| format!("{c}|xi|^{e}"))
            .collect::<Vec<_>>()
            .join(" + ");
        Self::new(label, move |xi: f64| {
            if xi == 0.0 {
                return 0.0;
            }
            terms.iter().map(|(c, e)| c * xi.abs().powf(*e)).sum()
        })
    }

    /// The symbol `offset + symbol(xi)`.
    pub fn shifted(&self, offset: f64) -> Self {
        let inner = Arc::clone(&self.symbol);
        Self::new(format!("{offset} + ({})", self.label), move |xi| {
            offset + inner(xi)
        })
    }

    pub fn eval(&self, xi: f64) -> f64 {
        (self.symbol)(xi)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Symbol values at every wavenumber of `grid`, in FFT slot order.
    pub fn sample(&self, grid: &PeriodicGrid) -> Result<Vec<f64>> {
        grid.wavenumbers()
            .iter()
            .map(|&xi| {
                let v = self.eval(xi);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Operator(format!(
                        "symbol '{}' is not finite at wavenumber {xi}",
                        self.label
                    )))
                }
            })
            .collect()
    }

    /// Whether `symbol(xi) == symbol(-xi)` (to `tol` relative) on the grid wavenumbers.
    pub fn is_even_on(&self, grid: &PeriodicGrid, tol: f64) -> bool {
        grid.wavenumbers().iter().all(|&xi| {
            let (a, b) = (self.eval(xi), self.eval(-xi));
            (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
        })
    }
}

impl fmt::Debug for FourierMultiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierMultiplier")
            .field("label", &self.label)
            .finish()
    }
}

/// Applies the multiplier `m` mode by mode.
pub fn apply_multiplier(m: &FourierMultiplier, field: &SpectralField) -> Result<SpectralField> {
    let weights = m.sample(&field.grid)?;
    Ok(field.weighted(&weights))
}

/// Spectral `d/dx`; the Nyquist mode is dropped to keep the output real.
pub fn spectral_derivative(field: &SpectralField) -> SpectralField {
    let len = field.coeffs.len();
    let coeffs = field
        .coeffs
        .iter()
        .zip(field.grid.wavenumbers())
        .enumerate()
        .map(|(k, (c, &xi))| {
            if k == len / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, xi)
            }
        })
        .collect();
    SpectralField {
        grid: field.grid.clone(),
        coeffs,
    }
}

/// `Re sum_n a_n conj(b_n)` over all represented modes.
pub fn inner_product(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    a.grid.check_same(&b.grid)?;
    Ok(a.coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum())
}

/// Highest product degree supported by [`dealiased_product`].
pub const MAX_PRODUCT_DEGREE: usize = 6;

/// Padded length that keeps degree-`q` products alias-free on the retained band.
pub fn padded_len(n_modes: usize, degree: usize) -> usize {
    fast_even_len((degree + 1) * n_modes / 2 + 1)
}

/// Zero-pads FFT-ordered coefficients to length `m`, splitting the Nyquist
/// coefficient evenly between modes `-N/2` and `+N/2`.
fn pad(coeffs: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = coeffs.len();
    let half = n / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    out[..half].copy_from_slice(&coeffs[..half]);
    for k in half + 1..n {
        out[m - (n - k)] = coeffs[k];
    }
    let nyq = coeffs[half] * 0.5;
    out[half] = nyq;
    out[m - half] = nyq;
    out
}

/// Truncates FFT-ordered length-`m` coefficients back to `n`, folding the
/// `+N/2` mode onto the stored Nyquist slot.
fn truncate(coeffs: &[Complex64], n: usize) -> Vec<Complex64> {
    let m = coeffs.len();
    let half = n / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    out[..half].copy_from_slice(&coeffs[..half]);
    for k in half + 1..n {
        out[k] = coeffs[m - (n - k)];
    }
    out[half] = coeffs[m - half] + coeffs[half];
    out
}

/// Node values of `field` on the padded grid of length `m`.
fn padded_values(field: &SpectralField, m: usize, inverse: &dyn Fft<f64>) -> Vec<f64> {
    synthesize(&pad(&field.coeffs, m), inverse)
        .into_iter()
        .map(|z| z.re)
        .collect()
}

fn project_back(
    grid: &PeriodicGrid,
    values: impl Iterator<Item = f64>,
    m: usize,
    forward: &dyn Fft<f64>,
) -> SpectralField {
    let mut coeffs = truncate(&analyze(values, forward, m), grid.n_modes());
    symmetrize(&mut coeffs);
    SpectralField {
        grid: grid.clone(),
        coeffs,
    }
}

/// Pointwise product of `fields.len()` factors, evaluated on a zero-padded
/// grid so that no product mode aliases onto the retained band.
pub fn dealiased_product(fields: &[&SpectralField]) -> Result<SpectralField> {
    let q = fields.len();
    if !(2..=MAX_PRODUCT_DEGREE).contains(&q) {
        return Err(Error::Argument(format!(
            "product degree must be in 2..={MAX_PRODUCT_DEGREE}, got {q}"
        )));
    }
    let grid = fields[0].grid.clone();
    for f in &fields[1..] {
        grid.check_same(&f.grid)?;
    }
    let m = padded_len(grid.n_modes(), q);
    let (forward, inverse) = plans(m);
    let mut acc = padded_values(fields[0], m, inverse.as_ref());
    for f in &fields[1..] {
        let v = padded_values(f, m, inverse.as_ref());
        acc.iter_mut().zip(v).for_each(|(a, b)| *a *= b);
    }
    Ok(project_back(&grid, acc.into_iter(), m, forward.as_ref()))
}

/// Dealiased powers `u^1 ..= u^max_degree` of one field, sharing a single padded grid.
///
/// Entry `j - 1` of the result is `u^j`.
pub fn dealiased_powers(field: &SpectralField, max_degree: usize) -> Result<Vec<SpectralField>> {
    if !(1..=MAX_PRODUCT_DEGREE).contains(&max_degree) {
        return Err(Error::Argument(format!(
            "power degree must be in 1..={MAX_PRODUCT_DEGREE}, got {max_degree}"
        )));
    }
    let mut out = vec![field.clone()];
    if max_degree == 1 {
        return Ok(out);
    }
    let grid = field.grid.clone();
    let m = padded_len(grid.n_modes(), max_degree);
    let (forward, inverse) = plans(m);
    let base = padded_values(field, m, inverse.as_ref());
    let mut acc = base.clone();
    for _ in 2..=max_degree {
        acc.iter_mut().zip(&base).for_each(|(a, b)| *a *= b);
        out.push(project_back(
            &grid,
            acc.iter().copied(),
            m,
            forward.as_ref(),
        ));
    }
    Ok(out)
}

/// Dealiased evaluation of a polynomial in two fields, `sum c * u^a * v^b`,
/// with each entry of `terms` given as `(c, a, b)`.
///
/// Used for the two-component nonlinearities, where several mixed products
/// share one padded grid.
pub fn dealiased_bivariate(
    u: &SpectralField,
    v: &SpectralField,
    terms: &[(f64, u32, u32)],
) -> Result<SpectralField> {
    let grid = u.grid.clone();
    grid.check_same(&v.grid)?;
    let degree = terms
        .iter()
        .map(|&(_, a, b)| (a + b) as usize)
        .max()
        .unwrap_or(0);
    if degree > MAX_PRODUCT_DEGREE {
        return Err(Error::Argument(format!(
            "monomial degree {degree} exceeds {MAX_PRODUCT_DEGREE}"
        )));
    }
    if degree <= 1 {
        let mut acc = SpectralField::zeros(&grid);
        for &(c, a, b) in terms {
            acc = match (a, b) {
                (0, 0) => acc.axpy(c, &SpectralField::constant(&grid, 1.0))?,
                (1, 0) => acc.axpy(c, u)?,
                _ => acc.axpy(c, v)?,
            };
        }
        return Ok(acc);
    }
    let m = padded_len(grid.n_modes(), degree);
    let (forward, inverse) = plans(m);
    let uv = padded_values(u, m, inverse.as_ref());
    let vv = padded_values(v, m, inverse.as_ref());
    let values = uv.iter().zip(&vv).map(|(&x, &y)| {
        terms
            .iter()
            .map(|&(c, a, b)| c * x.powi(a as i32) * y.powi(b as i32))
            .sum::<f64>()
    });
    Ok(project_back(&grid, values, m, forward.as_ref()))
}
