//! Fractional-programming layer.
//!
//! The Lagrangian dual transform introduces `η` (one per user and tone) and
//! weights `ζ = ξ (1 + η)`. The complex quadratic transform then introduces
//! `δ` for the precoder block and `ρ` for the reflection block, each turning
//! `Σ ζ sᴴ A⁻¹ s` into a concave quadratic in the block variable:
//!
//! * precoder: `f₂(W) = −Wᴴ D W + 2 Re{Cᴴ W} − U`
//! * reflection: `f₅(ϕ) = −ϕᴴ Q ϕ + 2 Re{ϕᴴ υ} − P`
//!
//! `D` and `Q` are kept in factored form (sums of outer products), which is
//! both cheaper to apply and makes positive semidefiniteness structural.
//! The surrogate objective is evaluated in nats, where `η = γ` is its exact
//! maximizer; at that point it equals the WSR times `ln 2`.

use alloc::vec::Vec;

use crate::active::PrecoderStack;
use crate::channel::{EffectiveChannels, StackedChannels};
use crate::error::{dim_err, domain_err, Result};
use crate::linalg::{dotc, gram_lambda_max, hermitian_solve, CMat, CVec, C64, ZERO};
use crate::math;
use crate::metrics::{all_sinr, covariance, received_streams};
use crate::scenario::Dims;

/// Auxiliary variables of the transforms, all tone-major (`m · K + k`).
#[derive(Debug, Clone, PartialEq)]
pub struct FpAux {
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub delta: Vec<CVec>,
    pub rho: Vec<CVec>,
}

/// `η = γ`, the stationary point of the dual transform.
pub fn update_eta(eff: &EffectiveChannels, w: &PrecoderStack, noise: f64) -> Result<Vec<f64>> {
    all_sinr(eff, w, noise)
}

/// `ζ = ξ (1 + η)`.
pub fn zeta_from(eta: &[f64], weights: &[f64]) -> Vec<f64> {
    eta.iter().zip(weights).map(|(&e, &xi)| xi * (1.0 + e)).collect()
}

fn check(eff_dims: &Dims, w: &PrecoderStack, noise: f64, zeta: Option<&[f64]>) -> Result<()> {
    if !(noise > 0.0) {
        return Err(domain_err("noise power must be positive"));
    }
    if w.len() != eff_dims.precoder_len() {
        return Err(dim_err("precoder length does not match channel dimensions"));
    }
    if let Some(z) = zeta {
        if z.len() != eff_dims.n_user_tones() {
            return Err(dim_err("zeta length must be K·M"));
        }
    }
    Ok(())
}

/// `δ_{k,m} = √ζ (Σ_j u_j u_jᴴ + σ² I)⁻¹ u_k` with `u_j = Ĥᴴ_{k,m} w_{m,j}`.
pub fn update_delta(
    eff: &EffectiveChannels,
    w: &PrecoderStack,
    noise: f64,
    zeta: &[f64],
) -> Result<Vec<CVec>> {
    let d = eff.dims;
    check(&d, w, noise, Some(zeta))?;
    let mut out = Vec::with_capacity(d.n_user_tones());
    for m in 0..d.n_tones {
        for k in 0..d.n_users {
            let u = received_streams(eff, w, k, m);
            let a = covariance(d.n_rx, u.iter(), noise);
            let x = hermitian_solve(&a, &u[k])?;
            out.push(x * C64::from(math::sqrt(zeta[d.ut(k, m)])));
        }
    }
    Ok(out)
}

/// The precoder-block transform evaluated term by term:
/// `Σ 2√ζ Re{δᴴ u_k} − δᴴ (Σ_j u_j u_jᴴ + σ² I) δ`.
pub fn f2_value(
    eff: &EffectiveChannels,
    w: &PrecoderStack,
    delta: &[CVec],
    zeta: &[f64],
    noise: f64,
) -> Result<f64> {
    let d = eff.dims;
    check(&d, w, noise, Some(zeta))?;
    let mut total = 0.0;
    for m in 0..d.n_tones {
        for k in 0..d.n_users {
            let idx = d.ut(k, m);
            let u = received_streams(eff, w, k, m);
            let a = covariance(d.n_rx, u.iter(), noise);
            let dl = &delta[idx];
            total += 2.0 * math::sqrt(zeta[idx]) * dl.dotc(&u[k]).re;
            total -= dl.dotc(&(&a * dl)).re;
        }
    }
    Ok(total)
}

/// `f₃(W) = Wᴴ D W − 2 Re{Cᴴ W}` with `D = diag_m(I_K ⊗ d_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveQuadratic {
    pub dims: Dims,
    /// Generators of `d_m = Σ_k g g ᴴ`, `g = Ĥ_{k,m} δ_{k,m}`, at `m · K + k`.
    pub d_generators: Vec<Vec<C64>>,
    /// Linear coefficient, laid out like the precoder.
    pub c: Vec<C64>,
    /// Constant `Σ δᴴ Ξ δ`.
    pub u: f64,
}

impl ActiveQuadratic {
    /// `D x`.
    pub fn apply_d(&self, x: &[C64]) -> Vec<C64> {
        let d = &self.dims;
        let n = d.n_tx_total();
        let mut out = alloc::vec![ZERO; x.len()];
        for m in 0..d.n_tones {
            let gens = &self.d_generators[m * d.n_users..(m + 1) * d.n_users];
            for j in 0..d.n_users {
                let off = (m * d.n_users + j) * n;
                let xs = &x[off..off + n];
                let ys = &mut out[off..off + n];
                for g in gens {
                    let s = dotc(g, xs);
                    for (y, gi) in ys.iter_mut().zip(g) {
                        *y += gi * s;
                    }
                }
            }
        }
        out
    }

    /// `xᴴ D x`.
    pub fn quad_form(&self, x: &[C64]) -> f64 {
        let d = &self.dims;
        let n = d.n_tx_total();
        let mut total = 0.0;
        for m in 0..d.n_tones {
            let gens = &self.d_generators[m * d.n_users..(m + 1) * d.n_users];
            for j in 0..d.n_users {
                let off = (m * d.n_users + j) * n;
                let xs = &x[off..off + n];
                total += gens.iter().map(|g| dotc(g, xs).norm_sqr()).sum::<f64>();
            }
        }
        total
    }

    pub fn f3(&self, w: &[C64]) -> f64 {
        self.quad_form(w) - 2.0 * dotc(&self.c, w).re
    }

    /// `−f₃ − U`, the transformed objective at fixed `δ`.
    pub fn f2(&self, w: &[C64]) -> f64 {
        -self.f3(w) - self.u
    }

    /// `tr(D)`.
    pub fn trace(&self) -> f64 {
        let k = self.dims.n_users as f64;
        self.d_generators.iter().map(|g| k * crate::linalg::norm_sqr(g)).sum()
    }

    /// `λ_max(D) = max_m λ_max(d_m)`.
    pub fn lambda_max(&self) -> f64 {
        let d = &self.dims;
        (0..d.n_tones)
            .map(|m| {
                let gens: Vec<&[C64]> = self.d_generators[m * d.n_users..(m + 1) * d.n_users]
                    .iter()
                    .map(|g| g.as_slice())
                    .collect();
                gram_lambda_max(&gens)
            })
            .fold(0.0, f64::max)
    }

    /// Dense `D`, for checks on small instances.
    pub fn dense_d(&self) -> CMat {
        let d = &self.dims;
        let n = d.n_tx_total();
        let len = d.precoder_len();
        let mut out = CMat::zeros(len, len);
        for m in 0..d.n_tones {
            let mut dm = CMat::zeros(n, n);
            for g in &self.d_generators[m * d.n_users..(m + 1) * d.n_users] {
                let v = CVec::from_column_slice(g);
                dm += &v * v.adjoint();
            }
            for j in 0..d.n_users {
                let off = (m * d.n_users + j) * n;
                out.view_mut((off, off), (n, n)).copy_from(&dm);
            }
        }
        out
    }
}

/// Builds `D`, `C` and `U` from `δ`. The `√ζ` factor of the linear term is
/// folded into `C` so that `−Wᴴ D W + 2 Re{Cᴴ W} − U` reproduces the
/// transformed objective exactly.
pub fn assemble_active(
    eff: &EffectiveChannels,
    delta: &[CVec],
    zeta: &[f64],
    noise: f64,
) -> Result<ActiveQuadratic> {
    let d = eff.dims;
    if delta.len() != d.n_user_tones() || zeta.len() != d.n_user_tones() {
        return Err(dim_err("delta and zeta must have K·M entries"));
    }
    let n = d.n_tx_total();
    let mut gens = Vec::with_capacity(d.n_user_tones());
    let mut c = Vec::with_capacity(d.precoder_len());
    let mut u = 0.0;
    for m in 0..d.n_tones {
        for k in 0..d.n_users {
            let idx = d.ut(k, m);
            let g = eff.get(k, m).adjoint() * &delta[idx];
            debug_assert_eq!(g.len(), n);
            let s = math::sqrt(zeta[idx]);
            c.extend(g.iter().map(|z| z * s));
            u += noise * delta[idx].norm_squared();
            gens.push(g.as_slice().to_vec());
        }
    }
    Ok(ActiveQuadratic { dims: d, d_generators: gens, c, u })
}

/// `T_{k,m,j} = Σ_b (Hᴴ_{b,k,m} + Fᴴ_{k,m} Φᴴ_m G_{b,m}) w_{b,m,j}`, computed
/// from the constituent channels without forming the effective channel.
pub fn t_vectors(chan: &StackedChannels, phi: &[C64], w: &PrecoderStack, k: usize, m: usize) -> Vec<CVec> {
    let d = &chan.dims;
    let n = d.n_refl();
    let tone = &phi[m * n..(m + 1) * n];
    let f = chan.f(k, m);
    (0..d.n_users)
        .map(|j| {
            let mut t = CVec::zeros(d.n_rx);
            let mut cascade = CVec::zeros(n);
            for b in 0..d.n_bs {
                let wb = CVec::from_column_slice(w.bs_user_tone(m, j, b));
                t += chan.h(b, k, m).adjoint() * &wb;
                cascade += chan.g(b, m) * &wb;
            }
            for (z, p) in cascade.iter_mut().zip(tone) {
                *z *= p.conj();
            }
            t + f.adjoint() * cascade
        })
        .collect()
}

/// `ρ_{k,m} = √ζ (Σ_j T_j T_jᴴ + σ² I)⁻¹ T_k`.
pub fn update_rho(
    chan: &StackedChannels,
    phi: &[C64],
    w: &PrecoderStack,
    noise: f64,
    zeta: &[f64],
) -> Result<Vec<CVec>> {
    let d = chan.dims;
    check(&d, w, noise, Some(zeta))?;
    if phi.len() != d.phi_len() {
        return Err(dim_err("reflection vector length mismatch"));
    }
    let mut out = Vec::with_capacity(d.n_user_tones());
    for m in 0..d.n_tones {
        for k in 0..d.n_users {
            let t = t_vectors(chan, phi, w, k, m);
            let a = covariance(d.n_rx, t.iter(), noise);
            let x = hermitian_solve(&a, &t[k])?;
            out.push(x * C64::from(math::sqrt(zeta[d.ut(k, m)])));
        }
    }
    Ok(out)
}

/// The reflection-block transform evaluated term by term,
/// `Σ_{k,m} 2√ζ Re{ρᴴ T_k} − ρᴴ (Σ_j T_j T_jᴴ + σ² I) ρ`.
pub fn f5_direct(
    chan: &StackedChannels,
    phi: &[C64],
    w: &PrecoderStack,
    rho: &[CVec],
    zeta: &[f64],
    noise: f64,
) -> Result<f64> {
    let d = chan.dims;
    check(&d, w, noise, Some(zeta))?;
    let mut total = 0.0;
    for m in 0..d.n_tones {
        for k in 0..d.n_users {
            let idx = d.ut(k, m);
            let t = t_vectors(chan, phi, w, k, m);
            let a = covariance(d.n_rx, t.iter(), noise);
            let r = &rho[idx];
            total += 2.0 * math::sqrt(zeta[idx]) * r.dotc(&t[k]).re - r.dotc(&(&a * r)).re;
        }
    }
    Ok(total)
}

/// `f₅(ϕ) = −ϕᴴ Q ϕ + 2 Re{ϕᴴ υ} − P` with block-diagonal `Q = diag_m(Q_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveQuadratic {
    pub dims: Dims,
    /// `b_{k,m,j}` at `(m · K + k) · K + j`.
    pub b: Vec<C64>,
    /// `ϖ_{k,m,j}` (length `R N_c`), same layout as `b`.
    pub varpi: Vec<Vec<C64>>,
    /// `υ`, tone-major like `ϕ`.
    pub upsilon: Vec<C64>,
    pub p_const: f64,
}

impl PassiveQuadratic {
    fn tone_generators(&self, m: usize) -> &[Vec<C64>] {
        let kk = self.dims.n_users * self.dims.n_users;
        &self.varpi[m * kk..(m + 1) * kk]
    }

    /// `Q ϕ`.
    pub fn apply_q(&self, phi: &[C64]) -> Vec<C64> {
        let n = self.dims.n_refl();
        let mut out = alloc::vec![ZERO; phi.len()];
        for m in 0..self.dims.n_tones {
            let x = &phi[m * n..(m + 1) * n];
            let y = &mut out[m * n..(m + 1) * n];
            for g in self.tone_generators(m) {
                let s = dotc(g, x);
                for (yi, gi) in y.iter_mut().zip(g) {
                    *yi += gi * s;
                }
            }
        }
        out
    }

    /// `ϕᴴ Q ϕ`.
    pub fn quad_form(&self, phi: &[C64]) -> f64 {
        let n = self.dims.n_refl();
        (0..self.dims.n_tones)
            .map(|m| {
                let x = &phi[m * n..(m + 1) * n];
                self.tone_generators(m).iter().map(|g| dotc(g, x).norm_sqr()).sum::<f64>()
            })
            .sum()
    }

    /// `f₆(ϕ) = ϕᴴ Q ϕ − 2 Re{ϕᴴ υ}`.
    pub fn f6(&self, phi: &[C64]) -> f64 {
        self.quad_form(phi) - 2.0 * dotc(phi, &self.upsilon).re
    }

    pub fn f5(&self, phi: &[C64]) -> f64 {
        -self.f6(phi) - self.p_const
    }

    /// `λ_max(Q) = max_m λ_max(Q_m)`.
    pub fn lambda_max(&self) -> f64 {
        (0..self.dims.n_tones)
            .map(|m| {
                let gens: Vec<&[C64]> = self.tone_generators(m).iter().map(|g| g.as_slice()).collect();
                gram_lambda_max(&gens)
            })
            .fold(0.0, f64::max)
    }

    /// Dense `Q_m`, for checks on small instances.
    pub fn dense_q(&self, m: usize) -> CMat {
        let n = self.dims.n_refl();
        let mut q = CMat::zeros(n, n);
        for g in self.tone_generators(m) {
            let v = CVec::from_column_slice(g);
            q += &v * v.adjoint();
        }
        q
    }
}

/// Builds `b`, `ϖ`, `υ` and `P` from `ρ` at precoder `w`.
pub fn assemble_passive(
    chan: &StackedChannels,
    rho: &[CVec],
    w: &PrecoderStack,
    zeta: &[f64],
    noise: f64,
) -> Result<PassiveQuadratic> {
    let d = chan.dims;
    check(&d, w, noise, Some(zeta))?;
    if rho.len() != d.n_user_tones() {
        return Err(dim_err("rho must have K·M entries"));
    }
    let n = d.n_refl();
    let kk = d.n_users;
    let mut b = Vec::with_capacity(d.n_tones * kk * kk);
    let mut varpi = Vec::with_capacity(d.n_tones * kk * kk);
    let mut upsilon = alloc::vec![ZERO; d.phi_len()];
    let mut p_const = 0.0;
    for m in 0..d.n_tones {
        // Σ_b G_{b,m} w_{b,m,j} for each stream j
        let cascades: Vec<CVec> = (0..kk)
            .map(|j| {
                let mut acc = CVec::zeros(n);
                for bs in 0..d.n_bs {
                    acc += chan.g(bs, m) * CVec::from_column_slice(w.bs_user_tone(m, j, bs));
                }
                acc
            })
            .collect();
        for k in 0..kk {
            let idx = d.ut(k, m);
            let r = &rho[idx];
            let sz = math::sqrt(zeta[idx]);
            // (ρᴴ Fᴴ)_e = conj((F ρ)_e)
            let f_rho = chan.f(k, m) * r;
            p_const += noise * r.norm_squared();
            for (j, cascade) in cascades.iter().enumerate() {
                let mut bj = ZERO;
                for bs in 0..d.n_bs {
                    let wb = CVec::from_column_slice(w.bs_user_tone(m, j, bs));
                    bj += r.dotc(&(chan.h(bs, k, m).adjoint() * wb));
                }
                let v: Vec<C64> = f_rho.iter().zip(cascade.iter()).map(|(a, c)| a.conj() * c).collect();
                let ups = &mut upsilon[m * n..(m + 1) * n];
                if j == k {
                    for (u, vi) in ups.iter_mut().zip(&v) {
                        *u += vi * sz;
                    }
                    p_const -= 2.0 * sz * bj.re;
                }
                let bc = bj.conj();
                for (u, vi) in ups.iter_mut().zip(&v) {
                    *u -= bc * vi;
                }
                p_const += bj.norm_sqr();
                b.push(bj);
                varpi.push(v);
            }
        }
    }
    Ok(PassiveQuadratic { dims: d, b, varpi, upsilon, p_const })
}

/// Surrogate objective (natural-log units):
/// `Σ ξ ln(1+η) − Σ ξ η + Σ ξ (1+η) f_{k,m}` with
/// `f_{k,m} = u_kᴴ (Σ_j u_j u_jᴴ + σ² I)⁻¹ u_k`.
pub fn surrogate_value(
    eff: &EffectiveChannels,
    w: &PrecoderStack,
    eta: &[f64],
    weights: &[f64],
    noise: f64,
) -> Result<f64> {
    let d = eff.dims;
    check(&d, w, noise, Some(eta))?;
    if weights.len() != d.n_user_tones() {
        return Err(dim_err("weights must have K·M entries"));
    }
    let mut total = 0.0;
    for m in 0..d.n_tones {
        for k in 0..d.n_users {
            let idx = d.ut(k, m);
            let (xi, e) = (weights[idx], eta[idx]);
            let u = received_streams(eff, w, k, m);
            let fkm = if u[k].iter().all(|z| *z == ZERO) {
                0.0
            } else {
                let a = covariance(d.n_rx, u.iter(), noise);
                u[k].dotc(&hermitian_solve(&a, &u[k])?).re
            };
            total += xi * math::log1p(e) - xi * e + xi * (1.0 + e) * fkm;
        }
    }
    Ok(total)
}
