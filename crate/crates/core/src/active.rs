//! Active precoding: the stacked precoder and the consensus-ADMM solver for
//! `min Wᴴ D W − 2 Re{Cᴴ W}` subject to one power cap per BS.
//!
//! Every BS keeps a full copy `V_b` of the precoder, but only its own block
//! is constrained, so the copy update is a closed-form ball projection of
//! that block. The precoder update linearizes `Wᴴ D W` around the previous
//! iterate, so no matrix is ever inverted.

use alloc::vec::Vec;

use rand::Rng;

use crate::channel::complex_normal;
use crate::error::{config_err, dim_err, Error, Result};
use crate::fp::ActiveQuadratic;
use crate::linalg::{dist_sqr, is_finite, norm_sqr, C64, ZERO};
use crate::math;
use crate::scenario::{AlphaRule, BetaRule, Dims};

/// Precoder `W`, laid out tone-major, then user, then BS, then antenna:
/// entry `((m · K + k) · N_b + b) · N_t + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderStack {
    pub n_tx: usize,
    pub n_bs: usize,
    pub n_users: usize,
    pub n_tones: usize,
    pub w: Vec<C64>,
}

impl PrecoderStack {
    pub fn zeros(d: &Dims) -> Self {
        Self {
            n_tx: d.n_tx,
            n_bs: d.n_bs,
            n_users: d.n_users,
            n_tones: d.n_tones,
            w: alloc::vec![ZERO; d.precoder_len()],
        }
    }

    pub fn from_vec(d: &Dims, w: Vec<C64>) -> Result<Self> {
        if w.len() != d.precoder_len() {
            return Err(dim_err("precoder vector must have N_t·N_b·M·K entries"));
        }
        Ok(Self { w, ..Self::zeros(&Dims { n_tones: 0, ..*d }) }.with_tones(d.n_tones))
    }

    fn with_tones(mut self, n_tones: usize) -> Self {
        self.n_tones = n_tones;
        self
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    fn block(&self) -> usize {
        self.n_bs * self.n_tx
    }

    /// `w_{m,k}` across all BSs.
    pub fn user_tone(&self, m: usize, k: usize) -> &[C64] {
        let n = self.block();
        let off = (m * self.n_users + k) * n;
        &self.w[off..off + n]
    }

    /// `w_{b,m,k}`.
    pub fn bs_user_tone(&self, m: usize, k: usize, b: usize) -> &[C64] {
        let off = ((m * self.n_users + k) * self.n_bs + b) * self.n_tx;
        &self.w[off..off + self.n_tx]
    }

    /// `Σ_{k,m} ‖w_{b,m,k}‖²`.
    pub fn bs_power(&self, b: usize) -> f64 {
        bs_block_norm_sqr(&self.w, self.n_bs, self.n_tx, b)
    }

    pub fn per_bs_power(&self) -> Vec<f64> {
        (0..self.n_bs).map(|b| self.bs_power(b)).collect()
    }

    pub fn total_power(&self) -> f64 {
        norm_sqr(&self.w)
    }

    /// Scales down every BS block that exceeds its cap.
    pub fn project_to_caps(&mut self, caps: &[f64]) {
        for (b, &cap) in caps.iter().enumerate() {
            project_bs_block(&mut self.w, self.n_bs, self.n_tx, b, cap);
        }
    }

    /// I.i.d. complex Gaussian entries, each BS block then scaled to meet its
    /// cap with equality.
    pub fn random_full_power<R: Rng + ?Sized>(d: &Dims, caps: &[f64], rng: &mut R) -> Self {
        let mut out = Self::zeros(d);
        for z in out.w.iter_mut() {
            *z = complex_normal(rng);
        }
        for (b, &cap) in caps.iter().enumerate() {
            let p = out.bs_power(b);
            if p > 0.0 {
                scale_bs_block(&mut out.w, out.n_bs, out.n_tx, b, math::sqrt(cap.max(0.0) / p));
            }
        }
        out
    }
}

fn bs_chunks(n_bs: usize, n_tx: usize, b: usize, len: usize) -> impl Iterator<Item = core::ops::Range<usize>> {
    let stride = n_bs * n_tx;
    (0..len / stride).map(move |blk| {
        let off = blk * stride + b * n_tx;
        off..off + n_tx
    })
}

fn bs_block_norm_sqr(w: &[C64], n_bs: usize, n_tx: usize, b: usize) -> f64 {
    bs_chunks(n_bs, n_tx, b, w.len()).map(|r| norm_sqr(&w[r])).sum()
}

fn scale_bs_block(w: &mut [C64], n_bs: usize, n_tx: usize, b: usize, s: f64) {
    for r in bs_chunks(n_bs, n_tx, b, w.len()) {
        for z in &mut w[r] {
            *z *= s;
        }
    }
}

/// Projects BS `b`'s entries onto `{‖·‖² ≤ cap}` and returns the multiplier
/// `σ = ‖ε_b‖/√cap − 1` (zero when the constraint is slack).
fn project_bs_block(w: &mut [C64], n_bs: usize, n_tx: usize, b: usize, cap: f64) -> f64 {
    let p = bs_block_norm_sqr(w, n_bs, n_tx, b);
    if p <= cap {
        return 0.0;
    }
    if cap <= 0.0 {
        scale_bs_block(w, n_bs, n_tx, b, 0.0);
        return f64::INFINITY;
    }
    let norm = math::sqrt(p);
    let root = math::sqrt(cap);
    scale_bs_block(w, n_bs, n_tx, b, root / norm);
    norm / root - 1.0
}

/// Hyperparameters of one CADMM solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CadmmParams {
    pub alpha_rule: AlphaRule,
    pub beta_rule: BetaRule,
    pub max_iter: usize,
    /// Residual tolerance; `None` uses `1e-6 · √dim · √max_cap`.
    pub tol: Option<f64>,
}

/// Iteration state of the consensus ADMM.
#[derive(Debug, Clone, PartialEq)]
pub struct CadmmState {
    pub dims: Dims,
    /// Per-BS copies `V_b`.
    pub v: Vec<Vec<C64>>,
    /// Scaled duals `q_b`.
    pub q: Vec<Vec<C64>>,
    pub alpha: f64,
    pub beta: f64,
    /// Linearization anchor.
    pub w0: Vec<C64>,
    pub sigma_last: Vec<f64>,
    /// `max_b ‖W − V_b‖` after each dual update.
    pub residuals: Vec<f64>,
}

impl CadmmState {
    /// Copies start at the projected initial point, duals at zero.
    pub fn new(dims: Dims, init: &PrecoderStack, caps: &[f64], alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(config_err("CADMM requires alpha > 0 and beta > 0"));
        }
        if init.len() != dims.precoder_len() || caps.len() != dims.n_bs {
            return Err(dim_err("CADMM initial point or caps have the wrong size"));
        }
        let mut v0 = init.clone();
        v0.project_to_caps(caps);
        Ok(Self {
            dims,
            v: alloc::vec![v0.w; dims.n_bs],
            q: alloc::vec![alloc::vec![ZERO; dims.precoder_len()]; dims.n_bs],
            alpha,
            beta,
            w0: init.w.clone(),
            sigma_last: alloc::vec![0.0; dims.n_bs],
            residuals: Vec::new(),
        })
    }
}

/// `α` from the configured rule, with the same positivity guard as `β`.
pub fn cadmm_alpha(rule: AlphaRule, quad: &ActiveQuadratic) -> f64 {
    let a = match rule {
        AlphaRule::BsCount => quad.dims.n_bs as f64,
        AlphaRule::Spectral(s) => s * quad.lambda_max(),
        AlphaRule::Constant(a) => a,
    };
    if a > 0.0 {
        a
    } else {
        f64::MIN_POSITIVE
    }
}

/// `β` from the configured rule at anchor `w0`. The Rayleigh quotient is
/// floored at `1e-8 · tr(D) / dim` so it stays positive at `w0 = 0`.
pub fn cadmm_beta(rule: BetaRule, quad: &ActiveQuadratic, w0: &[C64]) -> f64 {
    let floor = 1e-8 * quad.trace() / w0.len().max(1) as f64;
    let raw = match rule {
        BetaRule::Rayleigh => {
            let n = norm_sqr(w0);
            if n > 0.0 {
                quad.quad_form(w0) / n
            } else {
                0.0
            }
        }
        BetaRule::SpectralBound => quad.lambda_max(),
        BetaRule::Constant(b) => return b,
    };
    let b = raw.max(floor);
    if b > 0.0 {
        b
    } else {
        f64::MIN_POSITIVE
    }
}

/// Linearized precoder update
/// `W = [β W₀ + C − D W₀ + α Σ_b (V_b − q_b)] / (N_b α + β)`.
pub fn w_update(state: &CadmmState, quad: &ActiveQuadratic) -> Result<PrecoderStack> {
    let den = state.dims.n_bs as f64 * state.alpha + state.beta;
    if !(den > 0.0) {
        return Err(config_err("N_b·alpha + beta must be positive"));
    }
    let dw = quad.apply_d(&state.w0);
    let mut w: Vec<C64> = state
        .w0
        .iter()
        .zip(&quad.c)
        .zip(&dw)
        .map(|((w0, c), d)| w0 * state.beta + c - d)
        .collect();
    for (v, q) in state.v.iter().zip(&state.q) {
        for ((wi, vi), qi) in w.iter_mut().zip(v).zip(q) {
            *wi += (vi - qi) * state.alpha;
        }
    }
    for wi in w.iter_mut() {
        *wi /= den;
    }
    PrecoderStack::from_vec(&state.dims, w)
}

/// Copy update: `V_b` is `ε_b = W + q_b` with BS `b`'s block projected onto
/// its power ball. Returns the new copies and multipliers.
pub fn v_update(state: &CadmmState, w_new: &PrecoderStack, caps: &[f64]) -> (Vec<Vec<C64>>, Vec<f64>) {
    let d = &state.dims;
    let mut vs = Vec::with_capacity(d.n_bs);
    let mut sigmas = Vec::with_capacity(d.n_bs);
    for (b, q) in state.q.iter().enumerate() {
        let mut eps: Vec<C64> = w_new.w.iter().zip(q).map(|(w, q)| w + q).collect();
        sigmas.push(project_bs_block(&mut eps, d.n_bs, d.n_tx, b, caps[b]));
        vs.push(eps);
    }
    (vs, sigmas)
}

/// `q_b ← q_b + W − V_b`; returns `max_b ‖W − V_b‖`.
pub fn dual_update(q: &mut [Vec<C64>], w_new: &[C64], v_new: &[Vec<C64>]) -> f64 {
    let mut worst = 0.0_f64;
    for (qb, vb) in q.iter_mut().zip(v_new) {
        let mut r = 0.0;
        for ((qi, wi), vi) in qb.iter_mut().zip(w_new).zip(vb) {
            let diff = wi - vi;
            r += diff.norm_sqr();
            *qi += diff;
        }
        worst = worst.max(math::sqrt(r));
    }
    worst
}

/// Result of a CADMM solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CadmmOutcome {
    pub w: PrecoderStack,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Vec<f64>,
}

/// Iteration count over which a steadily growing residual is treated as
/// divergence.
const DIVERGENCE_RUN: usize = 50;

/// Runs CADMM from `init` until both the consensus residual and the change
/// in `W` fall below tolerance, or the iteration cap is reached. The answer
/// is the final `W` with each BS block projected onto its cap.
pub fn cadmm_solve(
    quad: &ActiveQuadratic,
    caps: &[f64],
    init: &PrecoderStack,
    params: &CadmmParams,
) -> Result<CadmmOutcome> {
    let dims = quad.dims;
    if caps.iter().any(|c| !(*c >= 0.0)) {
        return Err(config_err("power caps must be non-negative"));
    }
    if !is_finite(&init.w) {
        return Err(Error::SolverFailure { stage: "cadmm", reason: "non-finite initial precoder".into() });
    }
    let beta = cadmm_beta(params.beta_rule, quad, &init.w);
    let alpha = cadmm_alpha(params.alpha_rule, quad);
    let mut state = CadmmState::new(dims, init, caps, alpha, beta)?;
    let max_cap = caps.iter().cloned().fold(0.0, f64::max);
    let tol = params
        .tol
        .unwrap_or(1e-6 * math::sqrt(dims.precoder_len() as f64) * math::sqrt(max_cap));

    let mut converged = false;
    let mut growth = 0usize;
    let mut iterations = 0;
    for _ in 0..params.max_iter {
        iterations += 1;
        let w_new = w_update(&state, quad)?;
        if !is_finite(&w_new.w) {
            return Err(Error::SolverFailure { stage: "cadmm", reason: "non-finite precoder iterate".into() });
        }
        let (v_new, sigmas) = v_update(&state, &w_new, caps);
        let primal = dual_update(&mut state.q, &w_new.w, &v_new);
        let change = math::sqrt(dist_sqr(&w_new.w, &state.w0));
        state.v = v_new;
        state.sigma_last = sigmas;
        if let Some(&prev) = state.residuals.last() {
            growth = if primal > prev { growth + 1 } else { 0 };
        }
        state.residuals.push(primal);
        state.w0 = w_new.w;
        if growth >= DIVERGENCE_RUN {
            return Err(Error::SolverFailure {
                stage: "cadmm",
                reason: alloc::format!("residual grew for {DIVERGENCE_RUN} consecutive iterations"),
            });
        }
        if primal < tol && change < tol {
            converged = true;
            break;
        }
    }
    let mut w = PrecoderStack::from_vec(&dims, state.w0)?;
    w.project_to_caps(caps);
    Ok(CadmmOutcome { w, iterations, converged, residuals: state.residuals })
}
