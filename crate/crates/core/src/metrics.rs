//! SINR, weighted sum-rate and energy efficiency.

use alloc::vec::Vec;

use crate::active::PrecoderStack;
use crate::channel::{EffectiveChannels, StackedChannels};
use crate::error::{dim_err, domain_err, Result};
use crate::linalg::{hermitian_solve, CMat, CVec, C64};
use crate::math;
use crate::scenario::{EnergyModel, PowerNorm, SystemConfig};

/// `E_{k,m} w_{m,j}` for every `j`: the signal of stream `j` at user `k`.
pub(crate) fn received_streams(eff: &EffectiveChannels, w: &PrecoderStack, k: usize, m: usize) -> Vec<CVec> {
    let e = eff.get(k, m);
    (0..w.n_users)
        .map(|j| {
            let x = CVec::from_column_slice(w.user_tone(m, j));
            e * x
        })
        .collect()
}

/// `Σ_{j ∈ streams} u_j u_jᴴ + σ² I`.
pub(crate) fn covariance<'a>(
    n_rx: usize,
    streams: impl Iterator<Item = &'a CVec>,
    noise: f64,
) -> CMat {
    let mut a = CMat::identity(n_rx, n_rx) * C64::from(noise);
    for u in streams {
        a += u * u.adjoint();
    }
    a
}

fn check_inputs(eff: &EffectiveChannels, w: &PrecoderStack, noise: f64) -> Result<()> {
    if !(noise > 0.0) {
        return Err(domain_err("noise power must be positive"));
    }
    if w.len() != eff.dims.precoder_len() {
        return Err(dim_err("precoder length does not match channel dimensions"));
    }
    Ok(())
}

/// SINR of user `k` on tone `m` with linear MMSE reception.
pub fn sinr(eff: &EffectiveChannels, w: &PrecoderStack, k: usize, m: usize, noise: f64) -> Result<f64> {
    check_inputs(eff, w, noise)?;
    let u = received_streams(eff, w, k, m);
    let a = covariance(eff.dims.n_rx, u.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, v)| v), noise);
    let x = hermitian_solve(&a, &u[k])?;
    Ok(u[k].dotc(&x).re.max(0.0))
}

/// All SINRs, tone-major (`m · K + k`).
pub fn all_sinr(eff: &EffectiveChannels, w: &PrecoderStack, noise: f64) -> Result<Vec<f64>> {
    let d = eff.dims;
    let mut out = Vec::with_capacity(d.n_user_tones());
    for m in 0..d.n_tones {
        for k in 0..d.n_users {
            out.push(sinr(eff, w, k, m, noise)?);
        }
    }
    Ok(out)
}

/// `Σ ξ log₂(1 + γ)`, bits/s/Hz.
pub fn weighted_sum_rate(gammas: &[f64], weights: &[f64]) -> f64 {
    gammas
        .iter()
        .zip(weights)
        .map(|(&g, &xi)| xi * math::log2(1.0 + g))
        .sum()
}

/// `R_sum / (λ̂ ‖W‖ᵖ + N_b P_B + K P_U + N_c R P_I)`, with `p = 2` or `1`
/// per the configured convention.
pub fn energy_efficiency(
    wsr: f64,
    w: &PrecoderStack,
    n_bs: usize,
    n_users: usize,
    n_refl: usize,
    model: &EnergyModel,
) -> f64 {
    let p = w.total_power();
    let tx = match model.norm {
        PowerNorm::Squared => p,
        PowerNorm::Literal => math::sqrt(p),
    };
    let den = model.lambda_hat * tx
        + n_bs as f64 * model.p_bs_w
        + n_users as f64 * model.p_user_w
        + n_refl as f64 * model.p_irs_elem_w;
    wsr / den
}

/// Evaluation of one operating point against (true) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// SINR per user and tone, tone-major.
    pub gamma: Vec<f64>,
    /// Weighted sum-rate, bits/s/Hz.
    pub wsr: f64,
    /// Energy efficiency, bits/s/Hz/W.
    pub ee: Option<f64>,
    /// Radiated power of each BS, watts.
    pub per_bs_power: Vec<f64>,
    /// Convention used for `ee`.
    pub power_norm: PowerNorm,
}

/// Evaluates WSR (and EE when requested) for precoder `w` and reflection
/// vector `phi` on channels `chan`.
pub fn evaluate(
    config: &SystemConfig,
    chan: &StackedChannels,
    phi: &[C64],
    w: &PrecoderStack,
    with_ee: bool,
) -> Result<MetricsReport> {
    let eff = EffectiveChannels::new(chan, phi)?;
    let gamma = all_sinr(&eff, w, config.noise_power_w)?;
    let wsr = weighted_sum_rate(&gamma, &config.weights);
    let d = config.dims;
    let ee = with_ee.then(|| energy_efficiency(wsr, w, d.n_bs, d.n_users, d.n_refl(), &config.energy));
    Ok(MetricsReport {
        gamma,
        wsr,
        ee,
        per_bs_power: w.per_bs_power(),
        power_norm: config.energy.norm,
    })
}
