//! TOML experiment configuration.
//!
//! `model`, `model.leverage` and `grid` are required tables; every other field
//! falls back to the base case (`S0 = 1`, `v0 = 0.025`, `k = 8`,
//! `theta = 0.02`, `xi = 0.2`, `rho = -0.1`, `T = 1`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spdv_core::convergence::{LadderSpec, StrongErrorMethod, WeakSampling};
use spdv_core::leverage::{
    arctan_max_leverage, constant_leverage, estimate_constants, svi_leverage, GridSpec, SviSlice,
};
use spdv_core::pricing::{PayoffKind, PayoffSpec};
use spdv_core::{
    CirParams, DriftFunction, LeverageConstants, LeverageFunction, MaxMode, SimGrid, SpdvModel, VarianceScheme,
};

use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "one")]
    pub s0: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub cir: CirConfig,
    #[serde(default)]
    pub drift: DriftConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leverage: Option<LeverageConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirConfig {
    #[serde(default = "default_v0")]
    pub v0: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_xi")]
    pub xi: f64,
}

impl Default for CirConfig {
    fn default() -> Self {
        Self { v0: default_v0(), k: default_k(), theta: default_theta(), xi: default_xi() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `values[i]` on `[starts[i], starts[i+1])`.
    PiecewiseTime { starts: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeverageKind {
    Constant,
    Svi,
    ArctanMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeverageConfig {
    pub kind: LeverageKind,
    /// Level of a constant leverage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Spot and running-maximum SVI slices, in that order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slices: Option<[SviConfig; 2]>,
    /// Clamp bounds of the SVI arguments. Default `s0 exp(-+ 3 sqrt(v0 T))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    /// Replace the declared constants with a grid extraction.
    #[serde(default)]
    pub estimate_constants: bool,
    /// Explicit constants, overriding the declared ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SviConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl SviConfig {
    pub const REFERENCE: Self = Self { a: 1.0, b: 2.0, c: 0.0, d: 0.0, e: 0.25 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub sigma_max: f64,
    #[serde(default)]
    pub c_sigma_t: f64,
    pub c_sigma_x: f64,
    pub c_sigma_m: f64,
    #[serde(default)]
    pub jump_constants: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    #[default]
    Fte,
    Bem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxModeConfig {
    #[default]
    Nodes,
    Bridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_paths")]
    pub paths: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub max_mode: MaxModeConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingConfig {
    Independent,
    #[default]
    Coupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffConfig {
    #[serde(default = "default_payoff_kind")]
    pub kind: PayoffKindConfig,
    /// Strike or barrier.
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub discount: f64,
}

impl Default for PayoffConfig {
    fn default() -> Self {
        Self { kind: default_payoff_kind(), level: default_level(), discount: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKindConfig {
    EuropeanCall,
    EuropeanPut,
    NoTouchUp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    /// Moment orders for strong ladders and critical-time tables.
    #[serde(default = "default_orders")]
    pub p: Vec<f64>,
    #[serde(default)]
    pub payoff: PayoffConfig,
    #[serde(default = "default_base_n")]
    pub base_n: usize,
    #[serde(default = "default_n_levels")]
    pub n_levels: usize,
    /// Mean-reversion speeds for strong-order sweeps. Empty means `model.cir.k`.
    #[serde(default)]
    pub k_sweep: Vec<f64>,
    #[serde(default)]
    pub sampling: SamplingConfig,
    /// Bootstrap resamples for strong-ladder standard errors; delta method when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    /// Max modes for weak ladders. Empty means `grid.max_mode`.
    #[serde(default)]
    pub max_modes: Vec<MaxModeConfig>,
    #[serde(default = "default_grid_points")]
    pub critical_grid_points: usize,
}

impl Default for ExperimentBlock {
    fn default() -> Self {
        Self {
            p: default_orders(),
            payoff: PayoffConfig::default(),
            base_n: default_base_n(),
            n_levels: default_n_levels(),
            k_sweep: Vec::new(),
            sampling: SamplingConfig::default(),
            bootstrap: None,
            max_modes: Vec::new(),
            critical_grid_points: default_grid_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub dump_paths: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir(), dump_paths: false }
    }
}

fn one() -> f64 {
    1.0
}
fn default_rho() -> f64 {
    -0.1
}
fn default_v0() -> f64 {
    0.025
}
fn default_k() -> f64 {
    8.0
}
fn default_theta() -> f64 {
    0.02
}
fn default_xi() -> f64 {
    0.2
}
fn default_steps() -> usize {
    64
}
fn default_paths() -> u64 {
    100_000
}
fn default_payoff_kind() -> PayoffKindConfig {
    PayoffKindConfig::EuropeanCall
}
fn default_level() -> f64 {
    0.9
}
fn default_orders() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn default_base_n() -> usize {
    16
}
fn default_n_levels() -> usize {
    6
}
fn default_grid_points() -> usize {
    512
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Config(e.message().to_string()))?;
        cfg.check_required()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical serialization, leaving out the `output` block.
    pub fn digest(&self) -> String {
        let experiment = Self { output: OutputConfig::default(), ..self.clone() };
        hex::encode(Sha256::digest(experiment.to_toml().as_bytes()))
    }

    fn check_required(&self) -> Result<(), LabError> {
        let model = self.model.as_ref().ok_or_else(|| missing("model"))?;
        model.leverage.as_ref().ok_or_else(|| missing("model.leverage"))?;
        self.grid.as_ref().ok_or_else(|| missing("grid"))?;
        Ok(())
    }

    pub fn model_config(&self) -> Result<&ModelConfig, LabError> {
        self.model.as_ref().ok_or_else(|| missing("model"))
    }

    pub fn grid_config(&self) -> Result<&GridConfig, LabError> {
        self.grid.as_ref().ok_or_else(|| missing("grid"))
    }

    fn grid_config_mut(&mut self) -> Result<&mut GridConfig, LabError> {
        self.grid.as_mut().ok_or_else(|| missing("grid"))
    }

    /// Seeds are limited to `0..=i64::MAX`, the TOML integer range.
    pub fn set_seed(&mut self, seed: u64) -> Result<(), LabError> {
        self.grid_config_mut()?.seed = toml_int(seed, "seed")?;
        Ok(())
    }

    pub fn set_paths(&mut self, paths: u64) -> Result<(), LabError> {
        self.grid_config_mut()?.paths = toml_int(paths, "paths")?;
        Ok(())
    }

    /// Model with leverage constants resolved (declared, estimated or explicit).
    pub fn build_model(&self) -> Result<SpdvModel, LabError> {
        let m = self.model_config()?;
        let horizon = self.grid_config()?.horizon;
        let cir = CirParams::new(m.cir.v0, m.cir.k, m.cir.theta, m.cir.xi).map_err(LabError::invalid)?;
        let leverage = m.leverage.as_ref().ok_or_else(|| missing("model.leverage"))?;
        let leverage = leverage.build(m.s0, m.cir.v0, horizon)?;
        SpdvModel::new(m.s0, m.rho, cir, m.drift.build()?, leverage).map_err(LabError::invalid)
    }

    pub fn build_grid(&self) -> Result<SimGrid, LabError> {
        let g = self.grid_config()?;
        if !(g.horizon > 0.0 && g.horizon.is_finite()) {
            return Err(LabError::Config("grid.horizon must be positive".into()));
        }
        if g.paths == 0 {
            return Err(LabError::Config("grid.paths must be positive".into()));
        }
        Ok(SimGrid::new(g.horizon, g.steps, g.paths, g.seed)
            .with_scheme(g.scheme.into())
            .with_max_mode(g.max_mode.into()))
    }

    pub fn payoff(&self) -> Result<PayoffSpec, LabError> {
        let p = &self.experiment.payoff;
        let kind = match p.kind {
            PayoffKindConfig::EuropeanCall => PayoffKind::EuropeanCall,
            PayoffKindConfig::EuropeanPut => PayoffKind::EuropeanPut,
            PayoffKindConfig::NoTouchUp => PayoffKind::NoTouchUp,
        };
        Ok(PayoffSpec::new(kind, p.level).map_err(LabError::invalid)?.with_discount(p.discount))
    }

    pub fn ladder(&self) -> Result<LadderSpec, LabError> {
        let spec = LadderSpec::new(self.experiment.base_n, self.experiment.n_levels);
        spec.validate().map_err(LabError::invalid)?;
        Ok(spec)
    }

    pub fn orders(&self) -> Result<&[f64], LabError> {
        let p = &self.experiment.p;
        if p.is_empty() {
            return Err(LabError::Config("experiment.p must list at least one order".into()));
        }
        if p.iter().any(|p| !(*p >= 1.0 && p.is_finite())) {
            return Err(LabError::Config("experiment.p entries must be finite and at least 1".into()));
        }
        Ok(p)
    }

    pub fn strong_method(&self) -> StrongErrorMethod {
        match self.experiment.bootstrap {
            Some(resamples) => StrongErrorMethod::Bootstrap { resamples },
            None => StrongErrorMethod::Delta,
        }
    }

    pub fn sampling(&self) -> WeakSampling {
        match self.experiment.sampling {
            SamplingConfig::Independent => WeakSampling::Independent,
            SamplingConfig::Coupled => WeakSampling::Coupled,
        }
    }

    pub fn max_modes(&self) -> Result<Vec<MaxMode>, LabError> {
        if self.experiment.max_modes.is_empty() {
            Ok(vec![self.grid_config()?.max_mode.into()])
        } else {
            Ok(self.experiment.max_modes.iter().map(|m| (*m).into()).collect())
        }
    }

    /// Mean-reversion speeds of a strong-order sweep.
    pub fn k_values(&self) -> Result<Vec<f64>, LabError> {
        if self.experiment.k_sweep.is_empty() {
            Ok(vec![self.model_config()?.cir.k])
        } else {
            Ok(self.experiment.k_sweep.clone())
        }
    }
}

impl LeverageConfig {
    pub fn build(&self, s0: f64, v0: f64, horizon: f64) -> Result<LeverageFunction, LabError> {
        let f = match self.kind {
            LeverageKind::Constant => {
                let value = self
                    .value
                    .ok_or_else(|| missing("model.leverage.value"))?;
                constant_leverage(value).map_err(LabError::invalid)?
            }
            LeverageKind::ArctanMax => arctan_max_leverage(s0).map_err(LabError::invalid)?,
            LeverageKind::Svi => {
                let [a, b] = self.slices.unwrap_or([SviConfig::REFERENCE; 2]);
                let width = 3.0 * (v0 * horizon).sqrt();
                let s_min = self.s_min.unwrap_or(s0 * (-width).exp());
                let s_max = self.s_max.unwrap_or(s0 * width.exp());
                svi_leverage([a.into(), b.into()], s0, s_min, s_max).map_err(LabError::invalid)?
            }
        };
        match (&self.constants, self.estimate_constants) {
            (Some(_), true) => Err(LabError::Config(
                "model.leverage: `constants` and `estimate_constants` are mutually exclusive".into(),
            )),
            (Some(c), false) => Ok(f.with_constants(c.into()).map_err(LabError::invalid)?),
            (None, true) => {
                let constants = estimate_constants(&f, &GridSpec::for_function(&f, s0, v0, horizon)).map_err(LabError::invalid)?;
                Ok(f.with_constants(constants).map_err(LabError::invalid)?)
            }
            (None, false) => Ok(f),
        }
    }
}

impl DriftConfig {
    pub fn build(&self) -> Result<DriftFunction, LabError> {
        Ok(match self {
            DriftConfig::Zero => DriftFunction::Zero,
            DriftConfig::Constant { value } => {
                if !value.is_finite() {
                    return Err(LabError::Config("model.drift.value must be finite".into()));
                }
                DriftFunction::Constant(*value)
            }
            DriftConfig::PiecewiseTime { starts, values } => DriftFunction::piecewise(starts.clone(), values.clone()).map_err(LabError::invalid)?,
        })
    }
}

impl From<SviConfig> for SviSlice {
    fn from(s: SviConfig) -> Self {
        SviSlice { a: s.a, b: s.b, c: s.c, d: s.d, e: s.e }
    }
}

impl From<&ConstantsConfig> for LeverageConstants {
    fn from(c: &ConstantsConfig) -> Self {
        LeverageConstants {
            sigma_max: c.sigma_max,
            c_sigma_t: c.c_sigma_t,
            c_sigma_x: c.c_sigma_x,
            c_sigma_m: c.c_sigma_m,
            jump_constants: c.jump_constants.clone(),
        }
    }
}

impl From<SchemeConfig> for VarianceScheme {
    fn from(s: SchemeConfig) -> Self {
        match s {
            SchemeConfig::Fte => VarianceScheme::Fte,
            SchemeConfig::Bem => VarianceScheme::Bem,
        }
    }
}

impl From<MaxModeConfig> for MaxMode {
    fn from(m: MaxModeConfig) -> Self {
        match m {
            MaxModeConfig::Nodes => MaxMode::Nodes,
            MaxModeConfig::Bridge => MaxMode::BrownianBridge,
        }
    }
}

fn toml_int(v: u64, name: &str) -> Result<u64, LabError> {
    if v > i64::MAX as u64 {
        Err(LabError::Config(format!("{name} must not exceed {}", i64::MAX)))
    } else {
        Ok(v)
    }
}

fn missing(field: &str) -> LabError {
    LabError::Config(format!("missing required field `{field}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [model.leverage]
        kind = "arctan_max"

        [grid]
    "#;

    #[test]
    fn empty_config_names_first_missing_field() {
        let err = ExperimentConfig::from_toml("").unwrap_err();
        assert!(matches!(err, LabError::Config(ref m) if m.contains("`model`")), "{err}");
        let err = ExperimentConfig::from_toml("[model]\ns0 = 1.0\n[grid]\n").unwrap_err();
        assert!(err.to_string().contains("`model.leverage`"), "{err}");
        let err = ExperimentConfig::from_toml("[model.leverage]\nkind = \"svi\"\n").unwrap_err();
        assert!(err.to_string().contains("`grid`"), "{err}");
    }

    #[test]
    fn defaults_fill_the_base_case() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let m = cfg.model.as_ref().unwrap();
        assert_eq!((m.s0, m.rho), (1.0, -0.1));
        assert_eq!(m.cir, CirConfig { v0: 0.025, k: 8.0, theta: 0.02, xi: 0.2 });
        let g = cfg.grid.as_ref().unwrap();
        assert_eq!(g.horizon, 1.0);
        assert_eq!(g.scheme, SchemeConfig::Fte);
        assert_eq!(cfg.experiment.p, vec![1.0, 2.0]);
        let model = cfg.build_model().unwrap();
        assert!((model.cir.feller_ratio() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_is_lossless() {
        let text = r#"
            # comments are allowed
            [model]
            s0 = 100.0
            rho = -0.5
            drift = { kind = "piecewise_time", starts = [0.0, 0.5], values = [0.01, 0.02] }
            [model.cir]
            k = 0.25
            [model.leverage]
            kind = "svi"
            s_min = 0.5
            constants = { sigma_max = 2.0, c_sigma_x = 0.5, c_sigma_m = 0.5 }
            [grid]
            steps = 32
            scheme = "bem"
            max_mode = "bridge"
            [experiment]
            k_sweep = [8.0, 0.25]
            bootstrap = 200
            max_modes = ["nodes", "bridge"]
            payoff = { kind = "no_touch_up", level = 1.2 }
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.digest(), again.digest());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = ExperimentConfig::from_toml(&format!("{MINIMAL}\nstepz = 3\n")).unwrap_err();
        assert!(matches!(err, LabError::Config(_)));
    }

    #[test]
    fn digest_tracks_overrides() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let d0 = cfg.digest();
        cfg.output.dir = "elsewhere".into();
        assert_eq!(d0, cfg.digest());
        cfg.set_seed(7).unwrap();
        assert_ne!(d0, cfg.digest());
        assert!(matches!(cfg.set_seed(u64::MAX), Err(LabError::Config(_))));
        assert_eq!(cfg.digest().len(), 64);
    }

    #[test]
    fn svi_defaults_use_reference_slices_and_clamps() {
        let text = "[model.leverage]\nkind = \"svi\"\n[grid]\n";
        let model = ExperimentConfig::from_toml(text).unwrap().build_model().unwrap();
        let (lo, hi) = model.leverage.clamp_bounds().unwrap();
        let w = 3.0 * 0.025f64.sqrt();
        assert!((lo - (-w).exp()).abs() < 1e-14 && (hi - w.exp()).abs() < 1e-14);
    }

    #[test]
    fn constants_override_and_estimate_conflict() {
        let text = "[model.leverage]\nkind = \"arctan_max\"\nestimate_constants = true\n\
                    constants = { sigma_max = 1.0, c_sigma_x = 0.0, c_sigma_m = 0.0 }\n[grid]\n";
        let err = ExperimentConfig::from_toml(text).unwrap().build_model().unwrap_err();
        assert!(matches!(err, LabError::Config(_)));

        let text = "[model.leverage]\nkind = \"constant\"\nvalue = 1.5\n\
                    constants = { sigma_max = 2.0, c_sigma_x = 0.1, c_sigma_m = 0.2 }\n[grid]\n";
        let model = ExperimentConfig::from_toml(text).unwrap().build_model().unwrap();
        assert_eq!(model.leverage.constants().c_sigma_m, 0.2);
    }

    #[test]
    fn invalid_values_map_to_config_errors() {
        let text = "[model.leverage]\nkind = \"constant\"\n[grid]\n";
        assert!(matches!(
            ExperimentConfig::from_toml(text).unwrap().build_model(),
            Err(LabError::Config(m)) if m.contains("value")
        ));
        let text = "[model]\nrho = 2.0\n[model.leverage]\nkind = \"arctan_max\"\n[grid]\n";
        assert!(matches!(ExperimentConfig::from_toml(text).unwrap().build_model(), Err(LabError::Config(_))));
    }
}
