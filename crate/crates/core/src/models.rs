// SPDX-License-Identifier: Apache-2.0

//! Scalar model class `u_t - L u_x + f(u)_x = 0` with a polynomial flux and an
//! even dispersion symbol, the fractional KdV instance, and its
//! existence/stability classifiers.

use crate::error::{Error, Result};
use crate::spectral::FourierMultiplier;

/// Polynomial flux `f(z) = 3 g3 z^2 + ... + p gp z^(p-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialNonlinearity {
    /// `gammas[i]` is the coefficient with index `i + 3`.
    gammas: Vec<f64>,
}

impl PolynomialNonlinearity {
    /// Checked constructor: all coefficients nonnegative and the leading one positive.
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        let nl = Self::permissive(gammas)?;
        let p = nl.degree();
        if nl.gammas.iter().any(|&g| g < 0.0) || nl.gamma(p) <= 0.0 {
            return Err(Error::Argument(format!(
                "flux coefficients must be nonnegative with a positive leading term, got {:?}",
                nl.gammas
            )));
        }
        Ok(nl)
    }

    /// Accepts any finite coefficients with a nonzero leading term.
    pub fn permissive(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::Argument(
                "flux needs at least one coefficient".into(),
            ));
        }
        if gammas.len() + 2 > crate::spectral::MAX_PRODUCT_DEGREE + 1 {
            return Err(Error::Argument(format!(
                "flux degree p = {} exceeds the supported maximum {}",
                gammas.len() + 2,
                crate::spectral::MAX_PRODUCT_DEGREE + 1
            )));
        }
        if gammas.iter().any(|g| !g.is_finite()) || *gammas.last().unwrap() == 0.0 {
            return Err(Error::Argument(format!(
                "flux coefficients must be finite with a nonzero leading term, got {gammas:?}"
            )));
        }
        Ok(Self { gammas })
    }

    /// `f(u) = u^(p-1) / (p-1)`.
    pub fn pure_power(p: usize) -> Result<Self> {
        if p < 3 {
            return Err(Error::Argument(format!(
                "power p must be at least 3, got {p}"
            )));
        }
        let mut gammas = vec![0.0; p - 2];
        gammas[p - 3] = 1.0 / (p * (p - 1)) as f64;
        Self::new(gammas)
    }

    /// The index `p` of the leading coefficient.
    pub fn degree(&self) -> usize {
        self.gammas.len() + 2
    }

    /// Coefficient `gamma_j`, zero outside `3..=p`.
    pub fn gamma(&self, j: usize) -> f64 {
        if j < 3 {
            0.0
        } else {
            self.gammas.get(j - 3).copied().unwrap_or(0.0)
        }
    }

    /// Smallest index with a positive coefficient.
    pub fn p0(&self) -> usize {
        (3..=self.degree())
            .find(|&j| self.gamma(j) > 0.0)
            .unwrap_or(self.degree())
    }

    /// Whether the coefficients satisfy the sign conditions of the model class.
    pub fn satisfies_sign_conditions(&self) -> bool {
        self.gammas.iter().all(|&g| g >= 0.0) && self.gamma(self.degree()) > 0.0
    }

    /// Monomial coefficients `a_k` of `f(z) = sum a_k z^k`, `k = 0 ..= p-1`.
    pub fn monomials(&self) -> Vec<f64> {
        let p = self.degree();
        (0..p)
            .map(|k| {
                if k < 2 {
                    0.0
                } else {
                    (k + 1) as f64 * self.gamma(k + 1)
                }
            })
            .collect()
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.monomials()
            .iter()
            .rev()
            .fold(0.0, |acc, a| acc * z + a)
    }

    /// `f^(order)(c) = sum_l l(l-1)...(l-order) gamma_l c^(l-order-1)`.
    pub fn derivative(&self, order: usize, c: f64) -> Result<f64> {
        let p = self.degree();
        if order == 0 || order > p - 1 {
            return Err(Error::Argument(format!(
                "derivative order must be in 1..={}, got {order}",
                p - 1
            )));
        }
        Ok((order + 1..=p)
            .map(|l| {
                let falling: f64 = (l - order..=l).map(|i| i as f64).product();
                falling * self.gamma(l) * c.powi((l - order - 1) as i32)
            })
            .sum())
    }

    /// Taylor coefficients `f^(j)(c) / j!` for `j = 2 ..= p-1`; entry `j - 2` is order `j`.
    pub fn taylor_coeffs(&self, c: f64) -> Vec<f64> {
        (2..self.degree())
            .map(|j| {
                let factorial: f64 = (1..=j).map(|i| i as f64).product();
                self.derivative(j, c).expect("order in range") / factorial
            })
            .collect()
    }
}

/// Power-law exponents of the dispersion symbol near zero (`s_tilde`) and at
/// infinity (`s`), in the form `alpha(xi) ~ |xi|^(2s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionExponents {
    pub near_zero: f64,
    pub at_infinity: f64,
}

/// One member of the scalar model class.
#[derive(Debug, Clone)]
pub struct ScalarModel {
    pub nonlinearity: PolynomialNonlinearity,
    pub dispersion: FourierMultiplier,
    pub exponents: Option<DispersionExponents>,
    /// Exponent `mu` when the symbol is exactly `|xi|^mu`.
    pub power_law: Option<f64>,
}

const SYMBOL_PROBES: [f64; 6] = [1e-3, 0.1, 0.7, 1.0, 3.3, 25.0];

impl ScalarModel {
    /// Checks `alpha(0) = 0` and evenness on a handful of sample wavenumbers.
    pub fn new(
        nonlinearity: PolynomialNonlinearity,
        dispersion: FourierMultiplier,
        exponents: Option<DispersionExponents>,
    ) -> Result<Self> {
        let at_zero = dispersion.eval(0.0);
        if at_zero != 0.0 {
            return Err(Error::Operator(format!(
                "dispersion symbol must vanish at zero, got {at_zero}"
            )));
        }
        for xi in SYMBOL_PROBES {
            let (a, b) = (dispersion.eval(xi), dispersion.eval(-xi));
            if !a.is_finite() || (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                return Err(Error::Operator(format!(
                    "dispersion symbol must be finite and even, got {a} and {b} at +/-{xi}"
                )));
            }
        }
        Ok(Self {
            nonlinearity,
            dispersion,
            exponents,
            power_law: None,
        })
    }

    /// Fractional KdV: symbol `|xi|^mu`, flux `u^(p-1)/(p-1)`.
    pub fn fkdv(mu: f64, p: usize) -> Result<Self> {
        if !(mu > 0.0 && mu <= 2.0) {
            return Err(Error::Argument(format!("mu must lie in (0, 2], got {mu}")));
        }
        let mut model = Self::new(
            PolynomialNonlinearity::pure_power(p)?,
            FourierMultiplier::power_law(1.0, mu),
            None,
        )?;
        model.power_law = Some(mu);
        Ok(model)
    }

    pub fn degree(&self) -> usize {
        self.nonlinearity.degree()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub verdict: Verdict,
    /// True when the verdict comes from sampling rather than an exact inequality.
    pub heuristic: bool,
    pub detail: String,
}

impl HypothesisCheck {
    fn exact(holds: bool, detail: String) -> Self {
        Self {
            verdict: if holds {
                Verdict::Holds
            } else {
                Verdict::Fails
            },
            heuristic: false,
            detail,
        }
    }
}

/// Outcome of checking the flux sign conditions and the small- and
/// large-wavenumber growth conditions on the dispersion symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub flux: HypothesisCheck,
    pub small_wavenumber: HypothesisCheck,
    pub large_wavenumber: HypothesisCheck,
    /// Sampled range of `alpha(xi)/|xi|^(2s)` on `[1e2, 1e6]`, when sampled.
    pub large_ratio_range: Option<(f64, f64)>,
}

fn log_samples(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(move |i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
}

pub fn check_hypotheses(model: &ScalarModel) -> HypothesisReport {
    let nl = &model.nonlinearity;
    let p = nl.degree() as f64;
    let p0 = nl.p0() as f64;
    let flux = HypothesisCheck::exact(
        nl.satisfies_sign_conditions(),
        format!("coefficients {:?}", nl.gammas),
    );

    if let Some(mu) = model.power_law {
        // |xi|^mu / |xi|^(2 s~) -> 0 needs some s~ >= (p0-2)/4 with 2 s~ < mu.
        let small = HypothesisCheck::exact(
            mu > (p0 - 2.0) / 2.0,
            format!("mu = {mu} > (p0 - 2)/2 = {}", (p0 - 2.0) / 2.0),
        );
        let large = HypothesisCheck::exact(
            mu >= (p - 2.0) / 2.0,
            format!("mu = {mu} >= (p - 2)/2 = {}", (p - 2.0) / 2.0),
        );
        return HypothesisReport {
            flux,
            small_wavenumber: small,
            large_wavenumber: large,
            large_ratio_range: None,
        };
    }

    let Some(exps) = model.exponents else {
        let missing = HypothesisCheck {
            verdict: Verdict::Inconclusive,
            heuristic: false,
            detail: "no power-law exponents declared for the symbol".into(),
        };
        return HypothesisReport {
            flux,
            small_wavenumber: missing.clone(),
            large_wavenumber: missing,
            large_ratio_range: None,
        };
    };

    let alpha = |xi: f64| model.dispersion.eval(xi);

    let small = if exps.near_zero < (p0 - 2.0) / 4.0 {
        HypothesisCheck::exact(
            false,
            format!(
                "declared s~ = {} < (p0 - 2)/4 = {}",
                exps.near_zero,
                (p0 - 2.0) / 4.0
            ),
        )
    } else {
        let ratio = |xi: f64| alpha(xi).abs() / xi.powf(2.0 * exps.near_zero);
        let (r_small, r_big) = (ratio(1e-6), ratio(1e-2));
        let holds = r_small <= 1e-12 || r_small < 0.5 * r_big;
        HypothesisCheck {
            verdict: if holds {
                Verdict::Holds
            } else {
                Verdict::Fails
            },
            heuristic: true,
            detail: format!("alpha/|xi|^(2s~): {r_big:e} at 1e-2, {r_small:e} at 1e-6"),
        }
    };

    let (large, range) = if exps.at_infinity < (p - 2.0) / 4.0 {
        (
            HypothesisCheck::exact(
                false,
                format!(
                    "declared s = {} < (p - 2)/4 = {}",
                    exps.at_infinity,
                    (p - 2.0) / 4.0
                ),
            ),
            None,
        )
    } else {
        let (lo, hi) = log_samples(1e2, 1e6, 41)
            .map(|xi| alpha(xi) / xi.powf(2.0 * exps.at_infinity))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r), hi.max(r))
            });
        let holds = lo > 0.0 && hi.is_finite() && hi / lo < 1e3;
        (
            HypothesisCheck {
                verdict: if holds {
                    Verdict::Holds
                } else {
                    Verdict::Fails
                },
                heuristic: true,
                detail: format!("alpha/|xi|^(2s) ranges over [{lo:e}, {hi:e}] on [1e2, 1e6]"),
            },
            Some((lo, hi)),
        )
    };

    HypothesisReport {
        flux,
        small_wavenumber: small,
        large_wavenumber: large,
        large_ratio_range: range,
    }
}

/// Largest flux power with known existence of periodic waves for fractional KdV.
pub fn fkdv_p_max(mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu <= 2.0) {
        return Err(Error::Argument(format!("mu must lie in (0, 2], got {mu}")));
    }
    Ok(if mu < 1.0 {
        2.0 / (1.0 - mu)
    } else {
        f64::INFINITY
    })
}

/// Critical power separating spectrally stable from unstable waves.
pub fn fkdv_p_star(mu: f64) -> f64 {
    let two_mu = 2f64.powf(mu);
    ((3.0 + mu) * two_mu - 2.0 * mu + (mu - 1.0) * 2.0 * two_mu) / (2.0 + (mu - 1.0) * two_mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    /// Parameters outside the ranges the classification covers, including
    /// the boundary `p = p*(mu)`.
    OutsideTheory,
}

pub fn fkdv_stability(mu: f64, p: f64) -> Stability {
    if mu.is_nan() || mu <= 0.5 || !p.is_finite() {
        return Stability::OutsideTheory;
    }
    if mu < 1.0 {
        return Stability::Unstable;
    }
    if mu == 1.0 {
        return Stability::OutsideTheory;
    }
    let critical = fkdv_p_star(mu);
    if p >= 1.0 && p < critical {
        Stability::Stable
    } else if p > critical {
        Stability::Unstable
    } else {
        Stability::OutsideTheory
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flux_values() {
        let p3 = PolynomialNonlinearity::pure_power(3).unwrap();
        let p4 = PolynomialNonlinearity::pure_power(4).unwrap();
        assert_relative_eq!(p3.eval(2.0), 2.0, epsilon = 1e-15);
        assert_relative_eq!(p4.eval(3.0), 9.0, epsilon = 1e-14);
        assert_eq!(p3.eval(0.0), 0.0);
        assert_eq!(p4.eval(0.0), 0.0);
    }

    #[test]
    fn flux_derivatives() {
        let p3 = PolynomialNonlinearity::pure_power(3).unwrap();
        for c in [-1.5, 0.0, 2.7] {
            assert_relative_eq!(p3.derivative(1, c).unwrap(), c, epsilon = 1e-15);
        }
        let p4 = PolynomialNonlinearity::pure_power(4).unwrap();
        assert_relative_eq!(p4.derivative(1, 2.0).unwrap(), 4.0, epsilon = 1e-14);
        let b = p4.taylor_coeffs(2.0);
        assert_relative_eq!(b[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(b[1], 1.0 / 3.0, epsilon = 1e-15);
        assert!(p4.derivative(0, 1.0).is_err());
        assert!(p4.derivative(4, 1.0).is_err());
    }

    #[test]
    fn sign_conditions_enforced() {
        assert!(PolynomialNonlinearity::new(vec![-1.0, 1.0]).is_err());
        assert!(PolynomialNonlinearity::new(vec![1.0, 0.0]).is_err());
        let nl = PolynomialNonlinearity::permissive(vec![-1.0, 1.0]).unwrap();
        assert!(!nl.satisfies_sign_conditions());
        assert_eq!(
            PolynomialNonlinearity::new(vec![0.0, 0.0, 2.0])
                .unwrap()
                .p0(),
            5
        );
    }

    #[test]
    fn model_requires_vanishing_even_symbol() {
        let nl = PolynomialNonlinearity::pure_power(3).unwrap();
        let shifted = FourierMultiplier::power_law(1.0, 2.0).shifted(1.0);
        assert!(ScalarModel::new(nl.clone(), shifted, None).is_err());
        let odd = FourierMultiplier::new("xi^3", |xi: f64| xi.powi(3));
        assert!(ScalarModel::new(nl, odd, None).is_err());
        assert!(ScalarModel::fkdv(0.0, 3).is_err());
        assert!(ScalarModel::fkdv(2.5, 3).is_err());
    }

    #[test]
    fn hypotheses_for_power_laws() {
        let r = check_hypotheses(&ScalarModel::fkdv(2.0, 3).unwrap());
        assert_eq!(r.large_wavenumber.verdict, Verdict::Holds);
        assert_eq!(r.small_wavenumber.verdict, Verdict::Holds);
        assert_eq!(r.flux.verdict, Verdict::Holds);
        let r = check_hypotheses(&ScalarModel::fkdv(0.2, 6).unwrap());
        assert_eq!(r.large_wavenumber.verdict, Verdict::Fails);
        assert!(!r.large_wavenumber.heuristic);
    }

    #[test]
    fn sampled_hypotheses() {
        let nl = PolynomialNonlinearity::pure_power(3).unwrap();
        let kdv = FourierMultiplier::new("xi^2", |xi: f64| xi * xi);
        let exps = DispersionExponents {
            near_zero: 0.25,
            at_infinity: 1.0,
        };
        let model = ScalarModel::new(nl.clone(), kdv.clone(), Some(exps)).unwrap();
        let r = check_hypotheses(&model);
        assert_eq!(r.large_wavenumber.verdict, Verdict::Holds);
        assert!(r.large_wavenumber.heuristic);
        let (lo, hi) = r.large_ratio_range.unwrap();
        assert_relative_eq!(lo, 1.0, epsilon = 1e-12);
        assert_relative_eq!(hi, 1.0, epsilon = 1e-12);
        assert_eq!(r.small_wavenumber.verdict, Verdict::Holds);

        let inconclusive = ScalarModel::new(nl, kdv, None).unwrap();
        let r = check_hypotheses(&inconclusive);
        assert_eq!(r.large_wavenumber.verdict, Verdict::Inconclusive);
        assert_eq!(r.small_wavenumber.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn p_max_values() {
        assert_relative_eq!(fkdv_p_max(0.5).unwrap(), 4.0);
        assert_relative_eq!(fkdv_p_max(0.9).unwrap(), 20.0, epsilon = 1e-12);
        assert_eq!(fkdv_p_max(1.0).unwrap(), f64::INFINITY);
        assert_eq!(fkdv_p_max(2.0).unwrap(), f64::INFINITY);
        assert!(fkdv_p_max(0.0).is_err());
        assert!(fkdv_p_max(2.1).is_err());
    }

    #[test]
    fn critical_power_and_classes() {
        assert_relative_eq!(fkdv_p_star(1.0), 3.0, epsilon = 1e-15);
        assert_relative_eq!(fkdv_p_star(2.0), 4.0, epsilon = 1e-15);
        for p in [1.0, 3.0, 7.5] {
            assert_eq!(fkdv_stability(0.8, p), Stability::Unstable);
        }
        assert_eq!(fkdv_stability(2.0, 3.0), Stability::Stable);
        assert_eq!(fkdv_stability(2.0, 5.0), Stability::Unstable);
        assert_eq!(fkdv_stability(2.0, 4.0), Stability::OutsideTheory);
        assert_eq!(fkdv_stability(0.4, 3.0), Stability::OutsideTheory);
        assert_eq!(fkdv_stability(1.5, 0.5), Stability::OutsideTheory);
    }
}
