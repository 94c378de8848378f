// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a TOML document with flat sections
//!
//! ```toml
//! [model]      # kind = "fkdv" | "boussinesq" | "custom"
//! kind = "fkdv"
//! mu = 0.8
//! p = 3
//!
//! [wave]       # speed may be "vmax-1e-4" for the Boussinesq model
//! speed = 1.0
//! a = 1.0
//! branch = 0
//!
//! [grid]
//! l = 50.0
//! n = 512
//!
//! [iteration]  # max_iter, tol_res, tol_sfe, divergence_cap
//! [mpe]        # enabled, width, restart, ls_tolerance, safeguard
//! [seed]       # profile = "sech2" | "gaussian" | "cos" | "stokes"
//! [output]     # dir
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::boussinesq::{BoussinesqParams, PairSeed};
use crate::error::{Error, Result};
use crate::models::{DispersionExponents, PolynomialNonlinearity, ScalarModel};
use crate::mpe::MpeConfig;
use crate::petviashvili::{IterationSettings, SeedProfile};
use crate::spectral::{FourierMultiplier, PeriodicGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Fkdv,
    Boussinesq,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Defaults to `-(1 + r h)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Custom flux coefficients `gamma_3, gamma_4, ...`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flux: Option<Vec<f64>>,
    /// Custom symbol `sum coefficient * |xi|^exponent` as `[coefficient, exponent]` pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<Vec<[f64; 2]>>,
}

/// A literal speed or `"vmax"`, `"vmax-<delta>"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Speed {
    Value(f64),
    Expr(String),
}

impl Speed {
    /// `Some(delta)` for a `vmax - delta` expression.
    pub fn vmax_offset(&self) -> Result<Option<f64>> {
        let Speed::Expr(text) = self else {
            return Ok(None);
        };
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let rest = compact.strip_prefix("vmax").ok_or_else(|| {
            Error::Config(format!(
                "speed must be a number or \"vmax-<delta>\", got {text:?}"
            ))
        })?;
        if rest.is_empty() {
            return Ok(Some(0.0));
        }
        let delta = rest
            .strip_prefix('-')
            .and_then(|d| d.parse::<f64>().ok())
            .filter(|d| d.is_finite())
            .ok_or_else(|| Error::Config(format!("cannot parse speed expression {text:?}")))?;
        Ok(Some(delta))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSection {
    pub speed: Speed,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
    /// Index into the constant solutions sorted by magnitude.
    #[serde(default)]
    pub branch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub l: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpeSection {
    pub enabled: bool,
    pub width: usize,
    pub restart: bool,
    pub ls_tolerance: f64,
    pub safeguard: bool,
}

impl Default for MpeSection {
    fn default() -> Self {
        let d = MpeConfig::default();
        Self {
            enabled: false,
            width: d.width,
            restart: d.restart,
            ls_tolerance: d.ls_tolerance,
            safeguard: d.safeguard,
        }
    }
}

impl MpeSection {
    pub fn config(&self) -> Option<MpeConfig> {
        self.enabled.then_some(MpeConfig {
            width: self.width,
            restart: self.restart,
            ls_tolerance: self.ls_tolerance,
            safeguard: self.safeguard,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    pub profile: SeedProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub model: ModelSection,
    pub wave: WaveSection,
    pub grid: GridSection,
    #[serde(default)]
    pub iteration: IterationSettings,
    #[serde(default)]
    pub mpe: MpeSection,
    #[serde(default)]
    pub seed: SeedSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_name() -> String {
    "run".into()
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone)]
pub enum Problem {
    Scalar {
        model: ScalarModel,
        speed: f64,
        a: f64,
        seed: SeedProfile,
    },
    System {
        params: BoussinesqParams,
        speed: f64,
        a1: f64,
        a2: f64,
        seed: PairSeed,
    },
}

fn require<T: Copy>(value: Option<T>, what: &str, kind: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("model kind {kind} needs `{what}`")))
}

fn finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Config(format!("{what} must be finite, got {value}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.problem()?;
        self.iteration.validate()?;
        if let Some(m) = self.mpe.config() {
            m.validate()?;
        }
        Ok(())
    }

    /// Grids are powers of two so that every preset and sweep shares FFT plans.
    pub fn grid(&self) -> Result<PeriodicGrid> {
        let GridSection { l, n } = self.grid;
        if !(n >= 8 && n.is_power_of_two()) {
            return Err(Error::Config(format!(
                "grid.n must be a power of two of at least 8, got {n}"
            )));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Config(format!("grid.l must be positive, got {l}")));
        }
        PeriodicGrid::new(l, n)
    }

    pub fn problem(&self) -> Result<Problem> {
        let m = &self.model;
        let w = &self.wave;
        let offset = w.speed.vmax_offset()?;
        let literal = |kind: &str| -> Result<f64> {
            match (&w.speed, offset) {
                (Speed::Value(v), _) => finite(*v, "wave.speed"),
                _ => Err(Error::Config(format!(
                    "speed expressions in vmax are only valid for the boussinesq model, not {kind}"
                ))),
            }
        };
        let scalar_seed = self.seed.profile;
        match m.kind {
            ModelKind::Fkdv | ModelKind::Custom => {
                let kind = if m.kind == ModelKind::Fkdv {
                    "fkdv"
                } else {
                    "custom"
                };
                let model = if m.kind == ModelKind::Fkdv {
                    let mu = finite(require(m.mu, "mu", kind)?, "model.mu")?;
                    ScalarModel::fkdv(mu, require(m.p, "p", kind)?)
                        .map_err(|e| Error::Config(e.to_string()))?
                } else {
                    custom_model(m)?
                };
                if w.a1.is_some() || w.a2.is_some() {
                    return Err(Error::Config(format!(
                        "a1/a2 are not used by {kind}; use `a`"
                    )));
                }
                Ok(Problem::Scalar {
                    model,
                    speed: literal(kind)?,
                    a: finite(w.a.unwrap_or(0.0), "wave.a")?,
                    seed: scalar_seed,
                })
            }
            ModelKind::Boussinesq => {
                let r = require(m.r, "r", "boussinesq")?;
                let h = require(m.h, "h", "boussinesq")?;
                let params = match m.s {
                    Some(s) => BoussinesqParams::new(r, h, s),
                    None => BoussinesqParams::lower_s(r, h),
                }
                .map_err(|e| Error::Config(e.to_string()))?;
                let speed = match offset {
                    Some(delta) => params.vmax() - delta,
                    None => literal("boussinesq")?,
                };
                if w.a.is_some() {
                    return Err(Error::Config("boussinesq uses a1 and a2, not a".into()));
                }
                let seed = match scalar_seed {
                    SeedProfile::Sech2 => PairSeed::Sech2,
                    SeedProfile::Stokes => PairSeed::Stokes,
                    other => {
                        return Err(Error::Config(format!(
                            "seed profile {} is not available for the boussinesq model",
                            other.as_str()
                        )))
                    }
                };
                Ok(Problem::System {
                    params,
                    speed,
                    a1: finite(w.a1.unwrap_or(0.0), "wave.a1")?,
                    a2: finite(w.a2.unwrap_or(0.0), "wave.a2")?,
                    seed,
                })
            }
        }
    }

    /// Bundled configurations for the four experiments.
    pub fn preset(name: &str) -> Result<Self> {
        let fkdv = |mu: f64, p: usize| ModelSection {
            kind: ModelKind::Fkdv,
            mu: Some(mu),
            p: Some(p),
            r: None,
            h: None,
            s: None,
            flux: None,
            symbol: None,
        };
        let bous = |h: f64| ModelSection {
            kind: ModelKind::Boussinesq,
            r: Some(0.8),
            h: Some(h),
            s: Some(-(1.0 + 0.8 * h)),
            mu: None,
            p: None,
            flux: None,
            symbol: None,
        };
        let scalar_wave = WaveSection {
            speed: Speed::Value(1.0),
            a: Some(1.0),
            a1: None,
            a2: None,
            branch: 0,
        };
        let system_wave = |a1: f64, a2: f64, branch: usize| WaveSection {
            speed: Speed::Expr("vmax-1e-4".into()),
            a: None,
            a1: Some(a1),
            a2: Some(a2),
            branch,
        };
        let mpe_on = MpeSection {
            enabled: true,
            ..MpeSection::default()
        };
        let build = |name: &str,
                     model: ModelSection,
                     wave: WaveSection,
                     l: f64,
                     n: usize,
                     seed: SeedProfile| RunConfig {
            name: name.into(),
            model,
            wave,
            grid: GridSection { l, n },
            iteration: IterationSettings::default(),
            mpe: mpe_on,
            seed: SeedSection { profile: seed },
            output: OutputSection {
                dir: PathBuf::from("out").join(name),
            },
        };
        // The p = 4 waves and the far Boussinesq branch exist only near their
        // bifurcation periods, so those presets use short cells and Stokes seeds.
        let cfg = match name {
            // The fig1 wave decays algebraically; 4096 nodes resolve it to a 1e-9 spectral tail.
            "fig1" => build(
                "fig1",
                fkdv(0.8, 3),
                scalar_wave,
                50.0,
                4096,
                SeedProfile::Sech2,
            ),
            "fig2" | "fig2a" => build(
                "fig2a",
                fkdv(1.5, 4),
                scalar_wave,
                1.5,
                256,
                SeedProfile::Stokes,
            ),
            "fig2b" => build(
                "fig2b",
                fkdv(1.2, 4),
                scalar_wave,
                1.2,
                256,
                SeedProfile::Stokes,
            ),
            "fig3" => build(
                "fig3",
                bous(0.95),
                system_wave(-1.0, -2.0, 0),
                60.0,
                512,
                SeedProfile::Sech2,
            ),
            "fig4" => build(
                "fig4",
                bous(1.8),
                system_wave(1.0, 1.0, 2),
                1.55,
                256,
                SeedProfile::Stokes,
            ),
            other => {
                return Err(Error::Config(format!(
                    "unknown preset {other:?}; available: {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(cfg)
    }
}

pub const PRESETS: [&str; 6] = ["fig1", "fig2", "fig2a", "fig2b", "fig3", "fig4"];

fn custom_model(m: &ModelSection) -> Result<ScalarModel> {
    let flux = m
        .flux
        .clone()
        .ok_or_else(|| Error::Config("model kind custom needs `flux`".into()))?;
    let symbol = m
        .symbol
        .clone()
        .ok_or_else(|| Error::Config("model kind custom needs `symbol`".into()))?;
    if symbol.is_empty() || symbol.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config(
            "symbol terms must be finite and nonempty".into(),
        ));
    }
    if symbol.iter().any(|t| t[1] <= 0.0) {
        return Err(Error::Config("symbol exponents must be positive".into()));
    }
    let terms: Vec<(f64, f64)> = symbol.iter().map(|t| (t[0], t[1])).collect();
    let active = || terms.iter().filter(|t| t.0 != 0.0).map(|t| t.1);
    let exponents = DispersionExponents {
        near_zero: active().fold(f64::INFINITY, f64::min) / 2.0,
        at_infinity: active().fold(0.0, f64::max) / 2.0,
    };
    let nl = PolynomialNonlinearity::permissive(flux).map_err(|e| Error::Config(e.to_string()))?;
    ScalarModel::new(nl, FourierMultiplier::power_sum(&terms), Some(exponents))
        .map_err(|e| Error::Config(e.to_string()))
}
