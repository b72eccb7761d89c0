//! Scenario configuration, node geometry, the OFDM tone grid and the
//! large-scale path-loss model.
//!
//! Everything here is in linear units: watts, linear gains, meters, Hz.
//! Decibel inputs are converted once by whoever builds the config.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{config_err, domain_err, Result};
use crate::math;

/// A point in the 3-D deployment, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        math::sqrt(dx * dx + dy * dy + dz * dz)
    }
}

/// Rice factor of one link class. `Infinite` selects the pure line-of-sight
/// branch of the Rician model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiceFactor {
    Finite(f64),
    Infinite,
}

impl RiceFactor {
    /// Amplitude weights `(√(ε/(1+ε)), √(1/(1+ε)))` applied to the LoS and
    /// scattered components.
    pub fn weights(self) -> (f64, f64) {
        match self {
            RiceFactor::Infinite => (1.0, 0.0),
            RiceFactor::Finite(e) => (math::sqrt(e / (1.0 + e)), math::sqrt(1.0 / (1.0 + e))),
        }
    }
}

/// Rice factors for the BS–user, IRS–user and BS–IRS links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiceFactors {
    pub bs_user: RiceFactor,
    pub irs_user: RiceFactor,
    pub bs_irs: RiceFactor,
}

/// Log-distance path loss `c0 · (d/d0)^(−ζ)` with one exponent per link class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    /// Linear gain at the reference distance.
    pub c0: f64,
    /// Reference distance, meters.
    pub d0: f64,
    pub exp_bs_user: f64,
    pub exp_irs_user: f64,
    pub exp_bs_irs: f64,
}

/// Counts that fix every array shape in the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n_bs: usize,
    pub n_tx: usize,
    pub n_users: usize,
    pub n_rx: usize,
    pub n_irs: usize,
    pub n_elems: usize,
    pub n_tones: usize,
}

impl Dims {
    /// Reflecting elements across all surfaces, `N_c · R`.
    pub fn n_refl(&self) -> usize {
        self.n_irs * self.n_elems
    }

    /// Length of the tone-major reflection vector, `M · N_c · R`.
    pub fn phi_len(&self) -> usize {
        self.n_tones * self.n_refl()
    }

    /// Transmit antennas across all BSs, `N_t · N_b`.
    pub fn n_tx_total(&self) -> usize {
        self.n_tx * self.n_bs
    }

    /// Length of the stacked precoder, `N_t · N_b · M · K`.
    pub fn precoder_len(&self) -> usize {
        self.n_tx_total() * self.n_tones * self.n_users
    }

    pub fn n_user_tones(&self) -> usize {
        self.n_users * self.n_tones
    }

    /// Tone-major position of `(k, m)` in per-user-per-tone arrays.
    #[inline]
    pub fn ut(&self, k: usize, m: usize) -> usize {
        m * self.n_users + k
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_bs", self.n_bs),
            ("n_tx", self.n_tx),
            ("n_users", self.n_users),
            ("n_rx", self.n_rx),
            ("n_irs", self.n_irs),
            ("n_elems", self.n_elems),
            ("n_tones", self.n_tones),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(config_err(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// How the CADMM penalty α is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaRule {
    /// `α = N_b`.
    BsCount,
    /// `α = s · λ_max(D)`, which keeps the penalty on the scale of the
    /// quadratic it is coupled to.
    Spectral(f64),
    Constant(f64),
}

/// How the CADMM linearization weight β is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaRule {
    /// Rayleigh quotient `Wᴴ D W / Wᴴ W` at the linearization anchor.
    Rayleigh,
    /// Largest eigenvalue of `D`, which makes the linearization a majorizer.
    SpectralBound,
    Constant(f64),
}

/// How the penalty weight μ of the passive problem is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuRule {
    /// `μ = s · N_b² / (ϕᴴ Q ϕ)`.
    Scaled(f64),
    Constant(f64),
}

/// Step size rule for the accelerated projected gradient on ϕ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApgStepRule {
    /// Constant step `1/ϖ`, halved after repeated objective increases.
    Constant(f64),
    /// Step `1/L` from the gradient's Lipschitz bound `2λ_max(Q) + 1/μ`.
    Lipschitz,
}

/// Line search used by the Fletcher–Reeves passes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrcgStepRule {
    /// Initial trial step as a fraction of `‖z‖ / ‖p‖`.
    pub initial_fraction: f64,
    pub max_halvings: u32,
}

impl Default for FrcgStepRule {
    fn default() -> Self {
        Self { initial_fraction: 0.1, max_halvings: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationCaps {
    /// Outer alternations (η, W, Φ).
    pub outer: usize,
    /// CADMM iterations per active solve.
    pub cadmm: usize,
    /// APG iterations per passive round.
    pub apg: usize,
    /// Fletcher–Reeves iterations per parameter pass.
    pub frcg: usize,
    /// APG/FRCG alternations per passive solve.
    pub passive_rounds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative WSR change that stops the outer loop.
    pub outer: f64,
    /// Relative penalty-objective change that stops the passive rounds.
    pub inner: f64,
    /// CADMM residual tolerance; `None` means `1e-6 · √dim` scaled by the
    /// precoder magnitude.
    pub cadmm: Option<f64>,
}

/// Solver hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub alpha_rule: AlphaRule,
    pub beta_rule: BetaRule,
    pub apg_step: ApgStepRule,
    pub mu_rule: MuRule,
    pub frcg_step: FrcgStepRule,
    pub caps: IterationCaps,
    pub tol: Tolerances,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            alpha_rule: AlphaRule::Spectral(1.0),
            beta_rule: BetaRule::SpectralBound,
            apg_step: ApgStepRule::Lipschitz,
            mu_rule: MuRule::Scaled(12.0),
            frcg_step: FrcgStepRule::default(),
            caps: IterationCaps { outer: 30, cadmm: 200, apg: 40, frcg: 5, passive_rounds: 5 },
            tol: Tolerances { outer: 1e-3, inner: 1e-4, cadmm: None },
        }
    }
}

/// Initial Lorentzian parameters shared by every element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianInit {
    pub varphi: f64,
    /// Resonance frequency, Hz.
    pub psi: f64,
    /// Quality factor; damping is `ψ / Q`.
    pub quality: f64,
}

impl LorentzianInit {
    pub fn kappa(&self) -> f64 {
        self.psi / self.quality
    }
}

/// Interpretation of the transmit-power term in the energy-efficiency
/// denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerNorm {
    /// `λ̂ · ‖W‖²` (radiated power).
    Squared,
    /// `λ̂ · ‖W‖` as literally written.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    /// Inverse power-amplifier efficiency.
    pub lambda_hat: f64,
    /// Static power per BS, watts.
    pub p_bs_w: f64,
    /// Power per user, watts.
    pub p_user_w: f64,
    /// Power per IRS element, watts.
    pub p_irs_elem_w: f64,
    pub norm: PowerNorm,
}

/// One complete scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub dims: Dims,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    /// Noise power σ², watts.
    pub noise_power_w: f64,
    /// Per-BS power caps, watts.
    pub power_caps_w: Vec<f64>,
    /// Weights ξ, tone-major (`m · K + k`).
    pub weights: Vec<f64>,
    pub bs_positions: Vec<Point3>,
    pub irs_positions: Vec<Point3>,
    pub user_positions: Vec<Point3>,
    pub pathloss: PathLossModel,
    pub rice: RiceFactors,
    pub lorentzian: LorentzianInit,
    pub solver: SolverParams,
    pub energy: EnergyModel,
    pub rng_seed: u64,
}

/// BS `j` (zero-based) of the reference deployment sits at `(40 j, −50, 3)`.
pub fn reference_bs_position(j: usize) -> Point3 {
    Point3::new(40.0 * j as f64, -50.0, 3.0)
}

/// The two reference IRS sites.
pub const REFERENCE_IRS_POSITIONS: [Point3; 2] =
    [Point3::new(30.0, 10.0, 6.0), Point3::new(130.0, 10.0, 6.0)];

/// Fixed user sites used by the power and element sweeps.
pub const FIXED_USER_POSITIONS: [Point3; 4] = [
    Point3::new(20.0, 0.0, 1.5),
    Point3::new(60.0, 0.0, 1.5),
    Point3::new(100.0, 0.0, 1.5),
    Point3::new(140.0, 0.0, 1.5),
];

pub const USER_HEIGHT_M: f64 = 1.5;
pub const USER_DISC_RADIUS_M: f64 = 10.0;

impl SystemConfig {
    /// Full-size reference scenario: 5 BSs × 2 antennas, 4 users × 2
    /// antennas, 2 IRSs × 100 elements, 16 tones.
    pub fn reference() -> Self {
        let dims = Dims {
            n_bs: 5,
            n_tx: 2,
            n_users: 4,
            n_rx: 2,
            n_irs: 2,
            n_elems: 100,
            n_tones: 16,
        };
        Self::with_dims(dims)
    }

    /// Desk-scale scenario: 2 BSs, 2 users, 1 IRS with 16 elements, 4 tones.
    pub fn reduced() -> Self {
        let dims = Dims {
            n_bs: 2,
            n_tx: 2,
            n_users: 2,
            n_rx: 2,
            n_irs: 1,
            n_elems: 16,
            n_tones: 4,
        };
        Self::with_dims(dims)
    }

    /// Reference constants with the given shape. Nodes are taken from the
    /// reference sites in order (cycling IRS sites, users on the fixed sites).
    pub fn with_dims(dims: Dims) -> Self {
        let bs_positions = (0..dims.n_bs).map(reference_bs_position).collect();
        let irs_positions = (0..dims.n_irs)
            .map(|i| {
                let base = REFERENCE_IRS_POSITIONS[i % 2];
                Point3::new(base.x + 200.0 * (i / 2) as f64, base.y, base.z)
            })
            .collect();
        let user_positions = (0..dims.n_users)
            .map(|k| {
                let base = FIXED_USER_POSITIONS[k % 4];
                Point3::new(base.x, base.y + 3.0 * (k / 4) as f64, base.z)
            })
            .collect();
        Self {
            dims,
            carrier_hz: 3.0e9,
            bandwidth_hz: 100.0e6,
            noise_power_w: math::dbm_to_watts(-80.0),
            power_caps_w: alloc::vec![math::dbm_to_watts(0.0); dims.n_bs],
            weights: alloc::vec![1.0; dims.n_user_tones()],
            bs_positions,
            irs_positions,
            user_positions,
            pathloss: PathLossModel {
                c0: math::db_to_linear(-30.0),
                d0: 1.0,
                exp_bs_user: 3.5,
                exp_irs_user: 2.8,
                exp_bs_irs: 2.2,
            },
            rice: RiceFactors {
                bs_user: RiceFactor::Finite(0.0),
                irs_user: RiceFactor::Finite(0.0),
                bs_irs: RiceFactor::Infinite,
            },
            lorentzian: LorentzianInit { varphi: 1.0, psi: 3.0e9, quality: 50.0 },
            solver: SolverParams::default(),
            energy: EnergyModel {
                lambda_hat: 1.2,
                p_bs_w: math::db_to_linear(9.0),
                p_user_w: math::dbm_to_watts(10.0),
                p_irs_elem_w: math::dbm_to_watts(10.0),
                norm: PowerNorm::Squared,
            },
            rng_seed: 1,
        }
    }

    pub fn weight(&self, k: usize, m: usize) -> f64 {
        self.weights[self.dims.ut(k, m)]
    }

    /// Places all users area-uniformly in a horizontal disc.
    pub fn place_users_in_disc<R: Rng + ?Sized>(
        &mut self,
        center_x: f64,
        center_y: f64,
        radius: f64,
        rng: &mut R,
    ) {
        self.user_positions = sample_users_in_disc(
            self.dims.n_users,
            center_x,
            center_y,
            radius,
            USER_HEIGHT_M,
            rng,
        );
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dims;
        d.validate()?;
        let positive = [
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_power_w", self.noise_power_w),
            ("pathloss.c0", self.pathloss.c0),
            ("pathloss.d0", self.pathloss.d0),
            ("pathloss.exp_bs_user", self.pathloss.exp_bs_user),
            ("pathloss.exp_irs_user", self.pathloss.exp_irs_user),
            ("pathloss.exp_bs_irs", self.pathloss.exp_bs_irs),
            ("lorentzian.varphi", self.lorentzian.varphi),
            ("lorentzian.psi", self.lorentzian.psi),
            ("lorentzian.quality", self.lorentzian.quality),
            ("energy.lambda_hat", self.energy.lambda_hat),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.power_caps_w.len() != d.n_bs {
            return Err(config_err(format!(
                "power_caps has {} entries, expected n_bs = {}",
                self.power_caps_w.len(),
                d.n_bs
            )));
        }
        if self.power_caps_w.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(config_err("power caps must be nonnegative and finite"));
        }
        if self.weights.len() != d.n_user_tones() {
            return Err(config_err(format!(
                "weights has {} entries, expected K·M = {}",
                self.weights.len(),
                d.n_user_tones()
            )));
        }
        if self.weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(config_err("weights must be strictly positive"));
        }
        for (name, n, got) in [
            ("bs_positions", d.n_bs, self.bs_positions.len()),
            ("irs_positions", d.n_irs, self.irs_positions.len()),
            ("user_positions", d.n_users, self.user_positions.len()),
        ] {
            if n != got {
                return Err(config_err(format!("{name} has {got} entries, expected {n}")));
            }
        }
        for (name, r) in [
            ("rice.bs_user", self.rice.bs_user),
            ("rice.irs_user", self.rice.irs_user),
            ("rice.bs_irs", self.rice.bs_irs),
        ] {
            if let RiceFactor::Finite(e) = r {
                if !(e >= 0.0 && e.is_finite()) {
                    return Err(config_err(format!("{name} must be nonnegative")));
                }
            }
        }
        let s = &self.solver;
        if let AlphaRule::Spectral(a) | AlphaRule::Constant(a) = s.alpha_rule {
            if !(a > 0.0) {
                return Err(config_err("alpha rule parameter must be positive"));
            }
        }
        if let BetaRule::Constant(b) = s.beta_rule {
            if !(b > 0.0) {
                return Err(config_err("constant beta must be positive"));
            }
        }
        if let ApgStepRule::Constant(v) = s.apg_step {
            if !(v > 0.0) {
                return Err(config_err("apg step parameter must be positive"));
            }
        }
        match s.mu_rule {
            MuRule::Scaled(x) | MuRule::Constant(x) if !(x > 0.0) => {
                return Err(config_err("mu rule parameter must be positive"));
            }
            _ => {}
        }
        if !(s.frcg_step.initial_fraction > 0.0) {
            return Err(config_err("frcg initial_fraction must be positive"));
        }
        let c = &s.caps;
        if c.outer == 0 || c.cadmm == 0 || c.apg == 0 || c.frcg == 0 || c.passive_rounds == 0 {
            return Err(config_err("iteration caps must be at least 1"));
        }
        if !(s.tol.outer > 0.0 && s.tol.inner > 0.0) {
            return Err(config_err("tolerances must be positive"));
        }
        if let Some(t) = s.tol.cadmm {
            if !(t > 0.0) {
                return Err(config_err("cadmm tolerance must be positive"));
            }
        }
        if self.energy.p_bs_w < 0.0 || self.energy.p_user_w < 0.0 || self.energy.p_irs_elem_w < 0.0
        {
            return Err(config_err("energy model powers must be nonnegative"));
        }
        Ok(())
    }
}

/// Draws `n` points area-uniformly in a disc (radius ∝ √u) at a fixed height.
pub fn sample_users_in_disc<R: Rng + ?Sized>(
    n: usize,
    center_x: f64,
    center_y: f64,
    radius: f64,
    height: f64,
    rng: &mut R,
) -> Vec<Point3> {
    (0..n)
        .map(|_| {
            let r = radius * math::sqrt(rng.random::<f64>());
            let theta = core::f64::consts::TAU * rng.random::<f64>();
            Point3::new(center_x + r * math::cos(theta), center_y + r * math::sin(theta), height)
        })
        .collect()
}

/// Center frequencies `f_m = f_c + (m − (M+1)/2) · B/M`, `m = 1..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub freqs: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(carrier_hz: f64, bandwidth_hz: f64, n_tones: usize) -> Result<Self> {
        if n_tones == 0 {
            return Err(config_err("n_tones must be at least 1"));
        }
        if !(bandwidth_hz > 0.0) || !(carrier_hz > 0.0) {
            return Err(config_err("carrier and bandwidth must be positive"));
        }
        let spacing = bandwidth_hz / n_tones as f64;
        let mid = (n_tones as f64 + 1.0) / 2.0;
        let freqs = (1..=n_tones)
            .map(|m| carrier_hz + (m as f64 - mid) * spacing)
            .collect();
        Ok(Self { freqs })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

pub fn build_frequency_grid(config: &SystemConfig) -> Result<FrequencyGrid> {
    FrequencyGrid::new(config.carrier_hz, config.bandwidth_hz, config.dims.n_tones)
}

/// Linear path gain `c0 · (d/d0)^(−ζ)`.
pub fn path_loss(distance: f64, exponent: f64, model: &PathLossModel) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(domain_err(format!("path loss needs a positive distance, got {distance}")));
    }
    Ok(model.c0 * math::powf(distance / model.d0, -exponent))
}

/// Pairwise link distances, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkDistances {
    /// `b · K + k`.
    pub bs_user: Vec<f64>,
    /// `i · K + k`.
    pub irs_user: Vec<f64>,
    /// `b · N_c + i`.
    pub bs_irs: Vec<f64>,
    n_users: usize,
    n_irs: usize,
}

impl LinkDistances {
    /// Uniform distances per link class, for experiments that fix link
    /// lengths instead of node positions.
    pub fn uniform(dims: &Dims, bs_user: f64, irs_user: f64, bs_irs: f64) -> Result<Self> {
        for d in [bs_user, irs_user, bs_irs] {
            if !(d > 0.0) {
                return Err(domain_err("link distances must be positive"));
            }
        }
        Ok(Self {
            bs_user: alloc::vec![bs_user; dims.n_bs * dims.n_users],
            irs_user: alloc::vec![irs_user; dims.n_irs * dims.n_users],
            bs_irs: alloc::vec![bs_irs; dims.n_bs * dims.n_irs],
            n_users: dims.n_users,
            n_irs: dims.n_irs,
        })
    }

    pub fn bs_user(&self, b: usize, k: usize) -> f64 {
        self.bs_user[b * self.n_users + k]
    }

    pub fn irs_user(&self, i: usize, k: usize) -> f64 {
        self.irs_user[i * self.n_users + k]
    }

    pub fn bs_irs(&self, b: usize, i: usize) -> f64 {
        self.bs_irs[b * self.n_irs + i]
    }
}

pub fn link_distances(config: &SystemConfig) -> Result<LinkDistances> {
    fn table(a: &[Point3], b: &[Point3], what: &str) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(a.len() * b.len());
        for (i, p) in a.iter().enumerate() {
            for (j, q) in b.iter().enumerate() {
                let d = p.distance(q);
                if !(d > 0.0) {
                    return Err(domain_err(format!("{what} pair ({i}, {j}) is coincident")));
                }
                out.push(d);
            }
        }
        Ok(out)
    }
    Ok(LinkDistances {
        bs_user: table(&config.bs_positions, &config.user_positions, "BS-user")?,
        irs_user: table(&config.irs_positions, &config.user_positions, "IRS-user")?,
        bs_irs: table(&config.bs_positions, &config.irs_positions, "BS-IRS")?,
        n_users: config.user_positions.len(),
        n_irs: config.irs_positions.len(),
    })
}
