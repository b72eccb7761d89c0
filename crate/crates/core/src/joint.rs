//! Alternating optimization of `η`, `W` and `Φ`.
//!
//! Each outer iteration sets `η = γ`, solves the precoder block with CADMM
//! and the reflection block with APG/FRCG. Two safeguards keep the surrogate
//! monotone when the inner solvers stop early: a precoder that raises `f₃`
//! is rejected, and a reflection vector that lowers `f₅` is pulled back to
//! the best point on the segment from the previous one.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::active::{cadmm_solve, CadmmParams, PrecoderStack};
use crate::channel::{EffectiveChannels, StackedChannels};
use crate::error::{Error, Result};
use crate::fp::{assemble_active, assemble_passive, surrogate_value, update_delta, update_eta, update_rho, zeta_from};
use crate::irs::{IrsState, LorentzianParams};
use crate::linalg::{dotc, is_finite, C64};
use crate::metrics::{all_sinr, weighted_sum_rate};
use crate::passive::{passive_solve, PassiveParams};
use crate::scenario::{build_frequency_grid, FrequencyGrid, SystemConfig};

/// Blocks of one outer iteration, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Eta,
    Delta,
    Precoder,
    Rho,
    Reflection,
}

/// Surrogate value after one block update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRecord {
    pub outer: usize,
    pub block: Block,
    pub surrogate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOptions {
    /// Optimize `Φ`; when false the reflection vector stays fixed.
    pub optimize_phi: bool,
    /// Record the surrogate after every block.
    pub record_blocks: bool,
}

impl Default for JointOptions {
    fn default() -> Self {
        Self { optimize_phi: true, record_blocks: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcome {
    pub w: PrecoderStack,
    pub irs: IrsState,
    /// True-channel WSR with the free `ϕ`, at the initial point and after
    /// every outer iteration.
    pub wsr_trace: Vec<f64>,
    /// True-channel WSR with the realizable coefficients `b` clipped to
    /// the disk.
    pub wsr_physical: f64,
    pub outer_iterations: usize,
    pub cadmm_iterations: usize,
    pub apg_iterations: usize,
    pub converged: bool,
    pub blocks: Vec<BlockRecord>,
}

impl JointOutcome {
    pub fn final_wsr(&self) -> f64 {
        self.wsr_trace.last().copied().unwrap_or(0.0)
    }
}

/// Feasible starting point: Gaussian precoder at full per-BS power and the
/// initial Lorentzian response projected onto the disk.
pub fn initial_point<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<(PrecoderStack, IrsState)> {
    let d = config.dims;
    let w = PrecoderStack::random_full_power(&d, &config.power_caps_w, rng);
    let grid = build_frequency_grid(config)?;
    let params = LorentzianParams::uniform(d.n_refl(), &config.lorentzian);
    Ok((w, IrsState::new(params, &grid)?))
}

fn wsr_on(config: &SystemConfig, chan: &StackedChannels, phi: &[C64], w: &PrecoderStack) -> Result<f64> {
    let eff = EffectiveChannels::new(chan, phi)?;
    Ok(weighted_sum_rate(&all_sinr(&eff, w, config.noise_power_w)?, &config.weights))
}

fn with_context(e: Error, outer: usize) -> Error {
    match e {
        Error::SolverFailure { stage, reason } => {
            Error::SolverFailure { stage, reason: format!("outer iteration {outer}: {reason}") }
        }
        other => other,
    }
}

/// Maximizer of the concave quadratic `f₅` on the segment `[old, new]`,
/// returned as the interpolation weight in `[0, 1]`.
fn segment_weight(quad: &crate::fp::PassiveQuadratic, old: &[C64], new: &[C64]) -> f64 {
    let dir: Vec<C64> = new.iter().zip(old).map(|(a, b)| a - b).collect();
    // f₅(old + t d) = f₅(old) + 2t Re{dᴴ(υ − Q old)} − t² dᴴ Q d
    let q_old = quad.apply_q(old);
    let r: Vec<C64> = quad.upsilon.iter().zip(&q_old).map(|(u, q)| u - q).collect();
    let lin = dotc(&dir, &r).re;
    let curv = quad.quad_form(&dir);
    if curv <= 0.0 {
        return if lin > 0.0 { 1.0 } else { 0.0 };
    }
    (lin / curv).clamp(0.0, 1.0)
}

struct Ctx<'a> {
    config: &'a SystemConfig,
    est: &'a StackedChannels,
    opts: &'a JointOptions,
    blocks: Vec<BlockRecord>,
}

impl Ctx<'_> {
    fn record(&mut self, outer: usize, block: Block, w: &PrecoderStack, phi: &[C64], eta: &[f64]) -> Result<()> {
        if self.opts.record_blocks {
            let eff = EffectiveChannels::new(self.est, phi)?;
            let s = surrogate_value(&eff, w, eta, &self.config.weights, self.config.noise_power_w)?;
            self.blocks.push(BlockRecord { outer, block, surrogate: s });
        }
        Ok(())
    }
}

/// Joint precoding design. `est` is what the optimizer sees; WSR is always
/// reported on `truth` (the two coincide without CSI error).
pub fn joint_optimize(
    config: &SystemConfig,
    est: &StackedChannels,
    truth: &StackedChannels,
    init_w: PrecoderStack,
    init_irs: IrsState,
    opts: &JointOptions,
) -> Result<JointOutcome> {
    config.validate()?;
    let grid: FrequencyGrid = build_frequency_grid(config)?;
    let d = config.dims;
    let sp = &config.solver;
    let noise = config.noise_power_w;
    let caps = &config.power_caps_w;
    let cadmm = CadmmParams {
        alpha_rule: sp.alpha_rule,
        beta_rule: sp.beta_rule,
        max_iter: sp.caps.cadmm,
        tol: sp.tol.cadmm,
    };
    let passive = PassiveParams {
        mu_rule: sp.mu_rule,
        apg_step: sp.apg_step,
        frcg_step: sp.frcg_step,
        n_bs: d.n_bs,
        apg_iters: sp.caps.apg,
        frcg_iters: sp.caps.frcg,
        rounds: sp.caps.passive_rounds,
        tol: sp.tol.inner,
    };

    let mut w = init_w;
    w.project_to_caps(caps);
    let mut irs = init_irs;
    let mut ctx = Ctx { config, est, opts, blocks: Vec::new() };
    let mut trace = alloc::vec![wsr_on(config, truth, &irs.phi, &w)?];
    let (mut cadmm_iterations, mut apg_iterations) = (0, 0);
    let mut converged = false;
    let mut outer = 0;

    while outer < sp.caps.outer {
        outer += 1;
        let eff = EffectiveChannels::new(est, &irs.phi)?;
        let eta = update_eta(&eff, &w, noise)?;
        let zeta = zeta_from(&eta, &config.weights);
        ctx.record(outer, Block::Eta, &w, &irs.phi, &eta)?;

        let delta = update_delta(&eff, &w, noise, &zeta)?;
        ctx.record(outer, Block::Delta, &w, &irs.phi, &eta)?;
        let aq = assemble_active(&eff, &delta, &zeta, noise)?;
        let out = cadmm_solve(&aq, caps, &w, &cadmm).map_err(|e| with_context(e, outer))?;
        cadmm_iterations += out.iterations;
        if aq.f3(&out.w.w) <= aq.f3(&w.w) {
            w = out.w;
        }
        ctx.record(outer, Block::Precoder, &w, &irs.phi, &eta)?;

        if opts.optimize_phi {
            let rho = update_rho(est, &irs.phi, &w, noise, &zeta)?;
            ctx.record(outer, Block::Rho, &w, &irs.phi, &eta)?;
            let pq = assemble_passive(est, &rho, &w, &zeta, noise)?;
            let res = passive_solve(&pq, &irs, &grid, &passive).map_err(|e| with_context(e, outer))?;
            apg_iterations += res.apg_iterations;
            let mut next = res.irs;
            if pq.f5(&next.phi) < pq.f5(&irs.phi) {
                let t = segment_weight(&pq, &irs.phi, &next.phi);
                next.phi = irs.phi.iter().zip(&next.phi).map(|(o, n)| o + (n - o) * t).collect();
            }
            if !is_finite(&next.phi) {
                return Err(Error::SolverFailure {
                    stage: "passive",
                    reason: format!("outer iteration {outer}: non-finite reflection vector"),
                });
            }
            irs = next;
            ctx.record(outer, Block::Reflection, &w, &irs.phi, &eta)?;
        }

        let wsr = wsr_on(config, truth, &irs.phi, &w)?;
        let prev = *trace.last().unwrap_or(&0.0);
        trace.push(wsr);
        if (wsr - prev).abs() <= sp.tol.outer * prev.abs().max(wsr.abs()) {
            converged = true;
            break;
        }
    }

    let wsr_physical = wsr_on(config, truth, &irs.physical_phi(), &w)?;
    Ok(JointOutcome {
        w,
        irs,
        wsr_trace: trace,
        wsr_physical,
        outer_iterations: outer,
        cadmm_iterations,
        apg_iterations,
        converged,
        blocks: ctx.blocks,
    })
}
