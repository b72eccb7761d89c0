//! Passive beamforming: accelerated projected gradient on the free
//! reflection vector `ϕ`, alternated with Fletcher–Reeves conjugate gradient
//! on the Lorentzian parameters.
//!
//! The objective is `f₇(ϕ) = f₆(ϕ) + ‖ϕ − b(φ, ψ, κ)‖² / (2μ)`. Gradients
//! with respect to `ϕ` use the real-pair convention: the returned complex
//! vector holds `∂f/∂Re ϕ + j ∂f/∂Im ϕ`, so `ϕ − s ∇` is a descent step and
//! `∇f₇ = 2 (Q ϕ − υ) + (ϕ − b)/μ`.

use alloc::vec::Vec;

use crate::error::{config_err, dim_err, Error, Result};
use crate::fp::PassiveQuadratic;
use crate::irs::{lorentzian_jacobian, lorentzian_response, project_unit_disk_in_place, IrsState, LorentzianParams, ParamKind};
use crate::linalg::{dist_sqr, C64};
use crate::math;
use crate::scenario::{ApgStepRule, FrequencyGrid, FrcgStepRule, MuRule};

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0) {
        return Err(config_err("penalty weight mu must be positive"));
    }
    Ok(())
}

/// `f₇(ϕ) = ϕᴴ Q ϕ − 2 Re{ϕᴴ υ} + ‖ϕ − b‖² / (2μ)`.
pub fn penalty_objective(phi: &[C64], quad: &PassiveQuadratic, b: &[C64], mu: f64) -> Result<f64> {
    check_mu(mu)?;
    if phi.len() != b.len() || phi.len() != quad.upsilon.len() {
        return Err(dim_err("penalty objective: length mismatch"));
    }
    Ok(quad.f6(phi) + dist_sqr(phi, b) / (2.0 * mu))
}

/// `∇f₇(ϕ) = 2 (Q ϕ − υ) + (ϕ − b)/μ`.
pub fn penalty_gradient(phi: &[C64], quad: &PassiveQuadratic, b: &[C64], mu: f64) -> Result<Vec<C64>> {
    check_mu(mu)?;
    if phi.len() != b.len() || phi.len() != quad.upsilon.len() {
        return Err(dim_err("penalty gradient: length mismatch"));
    }
    let qphi = quad.apply_q(phi);
    Ok(qphi
        .iter()
        .zip(&quad.upsilon)
        .zip(phi.iter().zip(b))
        .map(|((q, u), (p, bb))| (q - u) * 2.0 + (p - bb) / mu)
        .collect())
}

/// `L = 2 λ_max(Q) + 1/μ`, a Lipschitz bound of `∇f₇`.
pub fn penalty_lipschitz(quad: &PassiveQuadratic, mu: f64) -> f64 {
    2.0 * quad.lambda_max() + 1.0 / mu
}

/// `μ` from the configured rule at the current `ϕ`.
pub fn penalty_mu(rule: MuRule, quad: &PassiveQuadratic, phi: &[C64], n_bs: usize) -> f64 {
    match rule {
        MuRule::Constant(mu) => mu,
        MuRule::Scaled(s) => {
            let den = quad.quad_form(phi).max(1e-8);
            s * (n_bs * n_bs) as f64 / den
        }
    }
}

/// Momentum `d_j = (1 + √(1 + 4 d_{j−1}²)) / 2` and weight `t_j = (d_j − 1)/d_j`.
pub fn momentum_next(d: f64) -> (f64, f64) {
    let dn = (1.0 + math::sqrt(1.0 + 4.0 * d * d)) / 2.0;
    (dn, (dn - 1.0) / dn)
}

/// Consecutive objective increases after which a constant step is halved.
const APG_INCREASE_RUN: usize = 5;

/// Accelerated projected gradient state.
#[derive(Debug, Clone, PartialEq)]
pub struct ApgState {
    pub phi_curr: Vec<C64>,
    pub phi_prev: Vec<C64>,
    pub d: f64,
    pub t: f64,
    /// Gradient step `1/ϖ`.
    pub step: f64,
    pub mu: f64,
    /// Whether repeated increases halve the step and reset the momentum.
    pub safeguard: bool,
    increases: usize,
    last_value: f64,
}

impl ApgState {
    pub fn new(phi: Vec<C64>, step: f64, mu: f64, safeguard: bool) -> Result<Self> {
        check_mu(mu)?;
        if !(step > 0.0) {
            return Err(config_err("APG step must be positive"));
        }
        Ok(Self {
            phi_prev: phi.clone(),
            phi_curr: phi,
            d: 0.0,
            t: 0.0,
            step,
            mu,
            safeguard,
            increases: 0,
            last_value: f64::INFINITY,
        })
    }

    /// One iteration: extrapolate, take a gradient step, project onto the
    /// unit disk. Returns `f₇` at the new point.
    pub fn step(&mut self, quad: &PassiveQuadratic, b: &[C64]) -> Result<f64> {
        let (dn, t) = momentum_next(self.d);
        self.d = dn;
        self.t = t;
        let y: Vec<C64> = self
            .phi_curr
            .iter()
            .zip(&self.phi_prev)
            .map(|(c, p)| c + (c - p) * t)
            .collect();
        let g = penalty_gradient(&y, quad, b, self.mu)?;
        let mut next: Vec<C64> = y.iter().zip(&g).map(|(yi, gi)| yi - gi * self.step).collect();
        project_unit_disk_in_place(&mut next);
        self.phi_prev = core::mem::replace(&mut self.phi_curr, next);
        let value = penalty_objective(&self.phi_curr, quad, b, self.mu)?;
        if !value.is_finite() {
            return Err(Error::SolverFailure { stage: "apg", reason: "non-finite penalty objective".into() });
        }
        if self.safeguard {
            self.increases = if value > self.last_value { self.increases + 1 } else { 0 };
            if self.increases >= APG_INCREASE_RUN {
                self.step *= 0.5;
                self.d = 0.0;
                self.phi_prev = self.phi_curr.clone();
                self.increases = 0;
            }
        }
        self.last_value = value;
        Ok(value)
    }
}

/// `f₈ = ‖ϕ − b(φ, ψ, κ)‖²`.
pub fn f8_value(params: &LorentzianParams, phi: &[C64], grid: &FrequencyGrid) -> Result<f64> {
    let b = lorentzian_response(params, grid)?;
    if b.len() != phi.len() {
        return Err(dim_err("reflection vector length mismatch"));
    }
    Ok(dist_sqr(phi, &b))
}

/// Gradient of `f₈` with respect to one parameter vector:
/// `−2 Σ_m Re{conj(ϕ − b) · ∂b/∂z}` per element.
pub fn frcg_gradient_f8(
    kind: ParamKind,
    params: &LorentzianParams,
    phi: &[C64],
    grid: &FrequencyGrid,
) -> Result<Vec<f64>> {
    let n = params.len();
    if phi.len() != n * grid.len() {
        return Err(dim_err("reflection vector length mismatch"));
    }
    let b = lorentzian_response(params, grid)?;
    let jac = lorentzian_jacobian(params, grid)?;
    let dz = jac.get(kind);
    let mut g = alloc::vec![0.0; n];
    for (idx, ((p, bb), dj)) in phi.iter().zip(&b).zip(dz).enumerate() {
        g[idx % n] -= 2.0 * ((p - bb).conj() * dj).re;
    }
    Ok(g)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trial parameters `z + τ p`, with `φ` and `ψ` kept at least `floor`.
fn trial(params: &LorentzianParams, kind: ParamKind, p: &[f64], tau: f64, floor: &[f64]) -> LorentzianParams {
    let mut out = params.clone();
    let positive = kind != ParamKind::Kappa;
    for ((z, pi), fl) in out.get_mut(kind).iter_mut().zip(p).zip(floor) {
        *z += tau * pi;
        if positive && *z < *fl {
            *z = *fl;
        }
    }
    out
}

fn eval(params: &LorentzianParams, phi: &[C64], grid: &FrequencyGrid) -> f64 {
    f8_value(params, phi, grid).unwrap_or(f64::INFINITY)
}

/// Backtracking line search along `p` with a quadratic-interpolation trial.
/// Returns the accepted parameters and value, or `None` if no trial step
/// decreased `f₈`.
#[allow(clippy::too_many_arguments)]
fn line_search(
    params: &LorentzianParams,
    kind: ParamKind,
    p: &[f64],
    slope: f64,
    f0: f64,
    phi: &[C64],
    grid: &FrequencyGrid,
    rule: &FrcgStepRule,
    floor: &[f64],
) -> Option<(LorentzianParams, f64)> {
    let z = params.get(kind);
    let zn = math::sqrt(dot(z, z));
    let pn = math::sqrt(dot(p, p));
    let mut tau = if zn > 0.0 { rule.initial_fraction * zn / pn } else { rule.initial_fraction / pn };
    for _ in 0..=rule.max_halvings {
        let cand = trial(params, kind, p, tau, floor);
        let fc = eval(&cand, phi, grid);
        // minimizer of the quadratic through f(0), f'(0), f(τ)
        let curv = fc - f0 - slope * tau;
        let mut best = if fc < f0 { Some((cand, fc)) } else { None };
        if curv > 0.0 && fc.is_finite() {
            let ts = -slope * tau * tau / (2.0 * curv);
            if ts > 0.0 && ts.is_finite() {
                let c2 = trial(params, kind, p, ts, floor);
                let f2 = eval(&c2, phi, grid);
                if f2 < f0 && best.as_ref().is_none_or(|(_, fb)| f2 < *fb) {
                    best = Some((c2, f2));
                }
            }
        }
        if best.is_some() {
            return best;
        }
        tau *= 0.5;
    }
    None
}

/// Fletcher–Reeves conjugate gradient on one parameter vector for
/// `max_iter` iterations. The returned parameters never increase `f₈`.
pub fn frcg_solve(
    kind: ParamKind,
    params: &LorentzianParams,
    phi: &[C64],
    grid: &FrequencyGrid,
    max_iter: usize,
    rule: &FrcgStepRule,
) -> Result<LorentzianParams> {
    let floor: Vec<f64> = params.get(kind).iter().map(|v| 1e-6 * v.abs()).collect();
    let restart = params.len().max(1);
    let mut cur = params.clone();
    let mut f = f8_value(&cur, phi, grid)?;
    let mut g = frcg_gradient_f8(kind, &cur, phi, grid)?;
    let mut gn = dot(&g, &g);
    if gn == 0.0 {
        return Ok(cur);
    }
    let mut p: Vec<f64> = g.iter().map(|x| -x).collect();
    for it in 0..max_iter {
        let mut slope = dot(&g, &p);
        if slope >= 0.0 {
            p = g.iter().map(|x| -x).collect();
            slope = -gn;
        }
        let Some((next, fnext)) = line_search(&cur, kind, &p, slope, f, phi, grid, rule, &floor) else {
            break;
        };
        cur = next;
        f = fnext;
        let g_new = frcg_gradient_f8(kind, &cur, phi, grid)?;
        let gn_new = dot(&g_new, &g_new);
        if gn_new == 0.0 {
            break;
        }
        let lambda = if (it + 1) % restart == 0 { 0.0 } else { gn_new / gn };
        p = g_new.iter().zip(&p).map(|(gi, pi)| -gi + lambda * pi).collect();
        g = g_new;
        gn = gn_new;
    }
    Ok(cur)
}

/// Settings of one passive solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassiveParams {
    pub mu_rule: MuRule,
    pub apg_step: ApgStepRule,
    pub frcg_step: FrcgStepRule,
    pub n_bs: usize,
    pub apg_iters: usize,
    pub frcg_iters: usize,
    pub rounds: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassiveOutcome {
    pub irs: IrsState,
    pub mu: f64,
    pub apg_iterations: usize,
    /// `f₇` after each round.
    pub trace: Vec<f64>,
}

/// Alternates APG on `ϕ` with FRCG passes on `φ`, `ψ`, `κ` until the
/// relative change in `f₇` drops below tolerance or the round cap is hit.
pub fn passive_solve(
    quad: &PassiveQuadratic,
    irs: &IrsState,
    grid: &FrequencyGrid,
    params: &PassiveParams,
) -> Result<PassiveOutcome> {
    if irs.phi.len() != quad.upsilon.len() {
        return Err(dim_err("IRS state does not match the quadratic form"));
    }
    let mu = penalty_mu(params.mu_rule, quad, &irs.phi, params.n_bs);
    check_mu(mu)?;
    let (step, safeguard) = match params.apg_step {
        ApgStepRule::Constant(varpi) => (1.0 / varpi, true),
        ApgStepRule::Lipschitz => (1.0 / penalty_lipschitz(quad, mu), false),
    };
    let mut state = irs.clone();
    let mut prev = penalty_objective(&state.phi, quad, &state.b_cache, mu)?;
    let mut trace = Vec::new();
    let mut apg_iterations = 0;
    for _ in 0..params.rounds.max(1) {
        let mut apg = ApgState::new(state.phi.clone(), step, mu, safeguard)?;
        let mut best = (prev, state.phi.clone());
        for _ in 0..params.apg_iters {
            let v = apg.step(quad, &state.b_cache)?;
            apg_iterations += 1;
            if v < best.0 {
                best = (v, apg.phi_curr.clone());
            }
        }
        state.phi = best.1;
        for kind in ParamKind::ALL {
            state.params = frcg_solve(kind, &state.params, &state.phi, grid, params.frcg_iters, &params.frcg_step)?;
        }
        state.refresh(grid)?;
        let value = penalty_objective(&state.phi, quad, &state.b_cache, mu)?;
        if !value.is_finite() {
            return Err(Error::SolverFailure { stage: "passive", reason: "non-finite penalty objective".into() });
        }
        trace.push(value);
        let rel = (prev - value).abs() / prev.abs().max(f64::MIN_POSITIVE);
        prev = value;
        if rel < params.tol {
            break;
        }
    }
    Ok(PassiveOutcome { irs: state, mu, apg_iterations, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use crate::scenario::Dims;

    fn scalar_quad(q: f64, ups: C64) -> PassiveQuadratic {
        let d = Dims { n_bs: 1, n_tx: 1, n_users: 1, n_rx: 1, n_irs: 1, n_elems: 1, n_tones: 1 };
        PassiveQuadratic {
            dims: d,
            b: alloc::vec![ZERO],
            varpi: alloc::vec![alloc::vec![C64::new(math::sqrt(q), 0.0)]],
            upsilon: alloc::vec![ups],
            p_const: 0.0,
        }
    }

    #[test]
    fn penalty_examples() {
        let one = C64::new(1.0, 0.0);
        let q0 = scalar_quad(0.0, ZERO);
        assert_eq!(penalty_objective(&[one], &q0, &[one], 1.0).unwrap(), 0.0);
        assert_eq!(penalty_gradient(&[one], &q0, &[one], 1.0).unwrap()[0], ZERO);
        let q1 = scalar_quad(1.0, ZERO);
        assert!((penalty_objective(&[one], &q1, &[ZERO], 0.5).unwrap() - 2.0).abs() < 1e-15);
        let z = C64::new(0.3, -0.4);
        let g = penalty_gradient(&[z], &q1, &[z], 1.0).unwrap()[0];
        assert!((g - z * 2.0).norm() < 1e-15);
        assert!(penalty_objective(&[one], &q1, &[ZERO], 0.0).is_err());
    }

    #[test]
    fn momentum_sequence() {
        let (d1, t1) = momentum_next(0.0);
        assert_eq!((d1, t1), (1.0, 0.0));
        let (d2, t2) = momentum_next(d1);
        assert!((d2 - 1.618_033_988_749_895).abs() < 1e-12);
        assert!((t2 - 0.381_966_011_250_105).abs() < 1e-12);
    }

    #[test]
    fn apg_fixed_point() {
        let q0 = scalar_quad(0.0, ZERO);
        let z = C64::new(0.2, 0.5);
        let mut st = ApgState::new(alloc::vec![z], 1.0, 1.0, true).unwrap();
        st.step(&q0, &[z]).unwrap();
        assert_eq!(st.phi_curr[0], z);
    }

    #[test]
    fn frcg_one_dimensional_quadratic() {
        let grid = FrequencyGrid { freqs: alloc::vec![2.0] };
        let params = LorentzianParams { varphi: alloc::vec![1.0], psi: alloc::vec![3.0], kappa: alloc::vec![0.5] };
        // target reached exactly at φ = 0.7
        let target = LorentzianParams { varphi: alloc::vec![0.7], ..params.clone() };
        let phi = lorentzian_response(&target, &grid).unwrap();
        let rule = FrcgStepRule::default();
        let out = frcg_solve(ParamKind::Varphi, &params, &phi, &grid, 1, &rule).unwrap();
        assert!((out.varphi[0] - 0.7).abs() < 1e-12);
        let again = frcg_solve(ParamKind::Varphi, &out, &phi, &grid, 3, &rule).unwrap();
        assert!((again.varphi[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn passive_with_zero_quadratic_tracks_b() {
        let grid = FrequencyGrid { freqs: alloc::vec![1.0] };
        let params = LorentzianParams { varphi: alloc::vec![0.5], psi: alloc::vec![2.0], kappa: alloc::vec![1.0] };
        let irs = IrsState::with_phi(params, &grid, alloc::vec![C64::new(-0.9, 0.1)]).unwrap();
        let quad = scalar_quad(0.0, ZERO);
        let pp = PassiveParams {
            mu_rule: MuRule::Constant(1.0),
            apg_step: ApgStepRule::Lipschitz,
            frcg_step: FrcgStepRule::default(),
            n_bs: 1,
            apg_iters: 50,
            frcg_iters: 5,
            rounds: 10,
            tol: 0.0,
        };
        let out = passive_solve(&quad, &irs, &grid, &pp).unwrap();
        assert!(out.irs.penalty_residual() < 1e-6);
        assert!(out.irs.phi[0].norm() <= 1.0);
    }
}
