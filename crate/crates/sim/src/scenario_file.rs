//! TOML scenario files.
//!
//! A file names a preset and overrides any subset of its fields. Powers are
//! given in dBm (static BS power in dBW), gains in dB; everything is
//! converted to linear units here and nowhere else.
//!
//! ```toml
//! preset = "reduced"
//! rng_seed = 7
//!
//! [dims]
//! n_elems = 32
//!
//! [radio]
//! noise_power_dbm = -80.0
//! power_cap_dbm = 0.0
//!
//! [rice]
//! bs_irs = "inf"
//!
//! [solver]
//! alpha = "spectral"
//! beta = "rayleigh"
//! ```

use std::path::Path;

use cellfree_core::math;
use cellfree_core::scenario::{
    AlphaRule, ApgStepRule, BetaRule, Dims, MuRule, Point3, PowerNorm, RiceFactor, SystemConfig,
};
use serde::Deserialize;

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub preset: Option<String>,
    pub rng_seed: Option<u64>,
    #[serde(default)]
    pub dims: DimsSection,
    #[serde(default)]
    pub radio: RadioSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub pathloss: PathlossSection,
    #[serde(default)]
    pub rice: RiceSection,
    #[serde(default)]
    pub lorentzian: LorentzianSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub energy: EnergySection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsSection {
    pub n_bs: Option<usize>,
    pub n_tx: Option<usize>,
    pub n_users: Option<usize>,
    pub n_rx: Option<usize>,
    pub n_irs: Option<usize>,
    pub n_elems: Option<usize>,
    pub n_tones: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub carrier_hz: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub noise_power_dbm: Option<f64>,
    /// Same cap for every BS.
    pub power_cap_dbm: Option<f64>,
    /// One cap per BS; takes precedence over `power_cap_dbm`.
    pub power_caps_dbm: Option<Vec<f64>>,
    /// Weights ξ, tone-major.
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub bs_positions: Option<Vec<[f64; 3]>>,
    pub irs_positions: Option<Vec<[f64; 3]>>,
    pub user_positions: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossSection {
    pub c0_db: Option<f64>,
    pub d0_m: Option<f64>,
    pub exp_bs_user: Option<f64>,
    pub exp_irs_user: Option<f64>,
    pub exp_bs_irs: Option<f64>,
}

/// A Rice factor: a number, or the string `"inf"` for pure LoS.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RiceValue {
    Finite(f64),
    Named(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiceSection {
    pub bs_user: Option<RiceValue>,
    pub irs_user: Option<RiceValue>,
    pub bs_irs: Option<RiceValue>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorentzianSection {
    pub varphi: Option<f64>,
    pub psi_hz: Option<f64>,
    pub quality: Option<f64>,
}

/// A rule given by name or as a constant.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RuleValue {
    Constant(f64),
    Named(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// `"spectral"`, `"bs_count"` or a constant.
    pub alpha: Option<RuleValue>,
    /// Multiplier for the spectral α rule.
    pub alpha_scale: Option<f64>,
    /// `"spectral"`, `"rayleigh"` or a constant.
    pub beta: Option<RuleValue>,
    /// `"lipschitz"` or the constant ϖ (step `1/ϖ`).
    pub apg_step: Option<RuleValue>,
    /// Scale `s` of `μ = s N_b² / ϕᴴQϕ`.
    pub mu_scale: Option<f64>,
    /// Fixed μ; takes precedence over `mu_scale`.
    pub mu: Option<f64>,
    pub frcg_initial_fraction: Option<f64>,
    pub frcg_max_halvings: Option<u32>,
    pub outer_iters: Option<usize>,
    pub cadmm_iters: Option<usize>,
    pub apg_iters: Option<usize>,
    pub frcg_iters: Option<usize>,
    pub passive_rounds: Option<usize>,
    pub outer_tol: Option<f64>,
    pub inner_tol: Option<f64>,
    pub cadmm_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySection {
    pub lambda_hat: Option<f64>,
    pub p_bs_dbw: Option<f64>,
    pub p_user_dbm: Option<f64>,
    pub p_irs_elem_dbm: Option<f64>,
    /// `"squared"` or `"literal"`.
    pub norm: Option<String>,
}

fn bad(msg: impl Into<String>) -> SimError {
    SimError::Scenario(msg.into())
}

fn points(v: &[[f64; 3]]) -> Vec<Point3> {
    v.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect()
}

fn rice(v: &RiceValue) -> Result<RiceFactor> {
    match v {
        RiceValue::Finite(e) => Ok(RiceFactor::Finite(*e)),
        RiceValue::Named(s) if matches!(s.as_str(), "inf" | "infinite" | "los") => Ok(RiceFactor::Infinite),
        RiceValue::Named(s) => Err(bad(format!("unknown Rice factor {s:?}"))),
    }
}

pub fn preset(name: &str) -> Result<SystemConfig> {
    match name {
        "reference" => Ok(SystemConfig::reference()),
        "reduced" => Ok(SystemConfig::reduced()),
        other => Err(bad(format!("unknown preset {other:?}"))),
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| SimError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Builds and validates the configuration.
    pub fn to_config(&self) -> Result<SystemConfig> {
        let base = preset(self.preset.as_deref().unwrap_or("reference"))?;
        let d = &self.dims;
        let dims = Dims {
            n_bs: d.n_bs.unwrap_or(base.dims.n_bs),
            n_tx: d.n_tx.unwrap_or(base.dims.n_tx),
            n_users: d.n_users.unwrap_or(base.dims.n_users),
            n_rx: d.n_rx.unwrap_or(base.dims.n_rx),
            n_irs: d.n_irs.unwrap_or(base.dims.n_irs),
            n_elems: d.n_elems.unwrap_or(base.dims.n_elems),
            n_tones: d.n_tones.unwrap_or(base.dims.n_tones),
        };
        let mut c = if dims == base.dims { base } else { SystemConfig::with_dims(dims) };
        if let Some(s) = self.rng_seed {
            c.rng_seed = s;
        }

        let r = &self.radio;
        if let Some(v) = r.carrier_hz {
            c.carrier_hz = v;
        }
        if let Some(v) = r.bandwidth_hz {
            c.bandwidth_hz = v;
        }
        if let Some(v) = r.noise_power_dbm {
            c.noise_power_w = math::dbm_to_watts(v);
        }
        if let Some(v) = r.power_cap_dbm {
            c.power_caps_w = vec![math::dbm_to_watts(v); dims.n_bs];
        }
        if let Some(v) = &r.power_caps_dbm {
            c.power_caps_w = v.iter().map(|&p| math::dbm_to_watts(p)).collect();
        }
        if let Some(v) = &r.weights {
            c.weights = v.clone();
        }

        let g = &self.geometry;
        if let Some(v) = &g.bs_positions {
            c.bs_positions = points(v);
        }
        if let Some(v) = &g.irs_positions {
            c.irs_positions = points(v);
        }
        if let Some(v) = &g.user_positions {
            c.user_positions = points(v);
        }

        let p = &self.pathloss;
        if let Some(v) = p.c0_db {
            c.pathloss.c0 = math::db_to_linear(v);
        }
        if let Some(v) = p.d0_m {
            c.pathloss.d0 = v;
        }
        if let Some(v) = p.exp_bs_user {
            c.pathloss.exp_bs_user = v;
        }
        if let Some(v) = p.exp_irs_user {
            c.pathloss.exp_irs_user = v;
        }
        if let Some(v) = p.exp_bs_irs {
            c.pathloss.exp_bs_irs = v;
        }

        if let Some(v) = &self.rice.bs_user {
            c.rice.bs_user = rice(v)?;
        }
        if let Some(v) = &self.rice.irs_user {
            c.rice.irs_user = rice(v)?;
        }
        if let Some(v) = &self.rice.bs_irs {
            c.rice.bs_irs = rice(v)?;
        }

        let l = &self.lorentzian;
        if let Some(v) = l.varphi {
            c.lorentzian.varphi = v;
        }
        if let Some(v) = l.psi_hz {
            c.lorentzian.psi = v;
        }
        if let Some(v) = l.quality {
            c.lorentzian.quality = v;
        }

        self.apply_solver(&mut c)?;

        let e = &self.energy;
        if let Some(v) = e.lambda_hat {
            c.energy.lambda_hat = v;
        }
        if let Some(v) = e.p_bs_dbw {
            c.energy.p_bs_w = math::db_to_linear(v);
        }
        if let Some(v) = e.p_user_dbm {
            c.energy.p_user_w = math::dbm_to_watts(v);
        }
        if let Some(v) = e.p_irs_elem_dbm {
            c.energy.p_irs_elem_w = math::dbm_to_watts(v);
        }
        if let Some(v) = &e.norm {
            c.energy.norm = match v.as_str() {
                "squared" => PowerNorm::Squared,
                "literal" => PowerNorm::Literal,
                other => return Err(bad(format!("unknown power norm {other:?}"))),
            };
        }

        c.validate()?;
        Ok(c)
    }

    fn apply_solver(&self, c: &mut SystemConfig) -> Result<()> {
        let s = &self.solver;
        let sp = &mut c.solver;
        let scale = s.alpha_scale.unwrap_or(1.0);
        match &s.alpha {
            None if s.alpha_scale.is_some() => sp.alpha_rule = AlphaRule::Spectral(scale),
            None => {}
            Some(RuleValue::Constant(a)) => sp.alpha_rule = AlphaRule::Constant(*a),
            Some(RuleValue::Named(n)) => {
                sp.alpha_rule = match n.as_str() {
                    "spectral" => AlphaRule::Spectral(scale),
                    "bs_count" => AlphaRule::BsCount,
                    other => return Err(bad(format!("unknown alpha rule {other:?}"))),
                }
            }
        }
        match &s.beta {
            None => {}
            Some(RuleValue::Constant(b)) => sp.beta_rule = BetaRule::Constant(*b),
            Some(RuleValue::Named(n)) => {
                sp.beta_rule = match n.as_str() {
                    "spectral" => BetaRule::SpectralBound,
                    "rayleigh" => BetaRule::Rayleigh,
                    other => return Err(bad(format!("unknown beta rule {other:?}"))),
                }
            }
        }
        match &s.apg_step {
            None => {}
            Some(RuleValue::Constant(v)) => sp.apg_step = ApgStepRule::Constant(*v),
            Some(RuleValue::Named(n)) if n == "lipschitz" => sp.apg_step = ApgStepRule::Lipschitz,
            Some(RuleValue::Named(n)) => return Err(bad(format!("unknown APG step rule {n:?}"))),
        }
        if let Some(v) = s.mu_scale {
            sp.mu_rule = MuRule::Scaled(v);
        }
        if let Some(v) = s.mu {
            sp.mu_rule = MuRule::Constant(v);
        }
        if let Some(v) = s.frcg_initial_fraction {
            sp.frcg_step.initial_fraction = v;
        }
        if let Some(v) = s.frcg_max_halvings {
            sp.frcg_step.max_halvings = v;
        }
        let caps = &mut sp.caps;
        for (src, dst) in [
            (s.outer_iters, &mut caps.outer),
            (s.cadmm_iters, &mut caps.cadmm),
            (s.apg_iters, &mut caps.apg),
            (s.frcg_iters, &mut caps.frcg),
            (s.passive_rounds, &mut caps.passive_rounds),
        ] {
            if let Some(v) = src {
                *dst = v;
            }
        }
        if let Some(v) = s.outer_tol {
            sp.tol.outer = v;
        }
        if let Some(v) = s.inner_tol {
            sp.tol.inner = v;
        }
        if s.cadmm_tol.is_some() {
            sp.tol.cadmm = s.cadmm_tol;
        }
        Ok(())
    }
}

/// Loads a scenario file, or the reference preset when no path is given.
pub fn load_config(path: Option<&Path>, seed_override: Option<u64>) -> Result<SystemConfig> {
    let mut c = match path {
        Some(p) => ScenarioFile::load(p)?.to_config()?,
        None => SystemConfig::reference(),
    };
    if let Some(s) = seed_override {
        c.rng_seed = s;
    }
    Ok(c)
}
