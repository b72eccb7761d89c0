//! Lorentzian metasurface model.
//!
//! Each element `(i, r)` carries an oscillator strength `φ`, a resonance
//! frequency `ψ` and a damping factor `κ`; on tone `f` it reflects with
//!
//! ```text
//! b(f) = φ f² / (ψ² − f² + j κ f)
//! ```
//!
//! All per-tone vectors here are tone-major: entry `m · N_c R + i · R + r`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{dim_err, domain_err, Result};
use crate::linalg::{C64, ZERO};
use crate::scenario::{FrequencyGrid, LorentzianInit};

/// Per-element Lorentzian parameters, IRS-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzianParams {
    pub varphi: Vec<f64>,
    pub psi: Vec<f64>,
    pub kappa: Vec<f64>,
}

/// Selects one of the three parameter vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Varphi,
    Psi,
    Kappa,
}

impl ParamKind {
    pub const ALL: [ParamKind; 3] = [ParamKind::Varphi, ParamKind::Psi, ParamKind::Kappa];
}

impl LorentzianParams {
    pub fn uniform(n_refl: usize, init: &LorentzianInit) -> Self {
        Self {
            varphi: alloc::vec![init.varphi; n_refl],
            psi: alloc::vec![init.psi; n_refl],
            kappa: alloc::vec![init.kappa(); n_refl],
        }
    }

    pub fn len(&self) -> usize {
        self.varphi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.varphi.is_empty()
    }

    pub fn get(&self, kind: ParamKind) -> &[f64] {
        match kind {
            ParamKind::Varphi => &self.varphi,
            ParamKind::Psi => &self.psi,
            ParamKind::Kappa => &self.kappa,
        }
    }

    pub fn get_mut(&mut self, kind: ParamKind) -> &mut Vec<f64> {
        match kind {
            ParamKind::Varphi => &mut self.varphi,
            ParamKind::Psi => &mut self.psi,
            ParamKind::Kappa => &mut self.kappa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.varphi.len();
        if self.psi.len() != n || self.kappa.len() != n {
            return Err(dim_err("Lorentzian parameter vectors differ in length"));
        }
        if self.varphi.iter().chain(&self.psi).any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(domain_err("oscillator strength and resonance must be positive"));
        }
        if self.kappa.iter().any(|v| !v.is_finite()) {
            return Err(domain_err("damping must be finite"));
        }
        Ok(())
    }
}

#[inline]
fn denominator(psi: f64, kappa: f64, f: f64) -> C64 {
    C64::new(psi * psi - f * f, kappa * f)
}

fn check_denominator(den: C64, e: usize, m: usize) -> Result<()> {
    if den == ZERO {
        return Err(domain_err(format!("zero Lorentzian denominator at element {e}, tone {m}")));
    }
    Ok(())
}

/// Reflection coefficients of every element on every tone, tone-major.
///
/// Only shapes are checked, so parameters that have drifted during
/// optimization can still be evaluated; a zero denominator is an error.
pub fn lorentzian_response(params: &LorentzianParams, grid: &FrequencyGrid) -> Result<Vec<C64>> {
    let n = params.len();
    if params.psi.len() != n || params.kappa.len() != n {
        return Err(dim_err("Lorentzian parameter vectors differ in length"));
    }
    let mut out = Vec::with_capacity(n * grid.len());
    for (m, &f) in grid.freqs.iter().enumerate() {
        let f2 = f * f;
        for e in 0..n {
            let den = denominator(params.psi[e], params.kappa[e], f);
            check_denominator(den, e, m)?;
            out.push(C64::from(params.varphi[e] * f2) / den);
        }
    }
    Ok(out)
}

/// Partial derivatives of each tone-major coefficient with respect to the
/// parameters of its own element.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzianJacobian {
    pub d_varphi: Vec<C64>,
    pub d_psi: Vec<C64>,
    pub d_kappa: Vec<C64>,
}

impl LorentzianJacobian {
    pub fn get(&self, kind: ParamKind) -> &[C64] {
        match kind {
            ParamKind::Varphi => &self.d_varphi,
            ParamKind::Psi => &self.d_psi,
            ParamKind::Kappa => &self.d_kappa,
        }
    }
}

/// With `D = ψ² − f² + jκf`: `∂/∂φ = f²/D`, `∂/∂ψ = −2ψ φ f²/D²`,
/// `∂/∂κ = −j f · φ f²/D²`.
pub fn lorentzian_jacobian(
    params: &LorentzianParams,
    grid: &FrequencyGrid,
) -> Result<LorentzianJacobian> {
    let n = params.len();
    if params.psi.len() != n || params.kappa.len() != n {
        return Err(dim_err("Lorentzian parameter vectors differ in length"));
    }
    let total = n * grid.len();
    let mut jac = LorentzianJacobian {
        d_varphi: Vec::with_capacity(total),
        d_psi: Vec::with_capacity(total),
        d_kappa: Vec::with_capacity(total),
    };
    for (m, &f) in grid.freqs.iter().enumerate() {
        let f2 = f * f;
        for e in 0..n {
            let den = denominator(params.psi[e], params.kappa[e], f);
            check_denominator(den, e, m)?;
            let inv = den.inv();
            let num = params.varphi[e] * f2;
            let inv2 = inv * inv;
            jac.d_varphi.push(inv * f2);
            jac.d_psi.push(inv2 * (-2.0 * params.psi[e] * num));
            jac.d_kappa.push(inv2 * C64::new(0.0, -f * num));
        }
    }
    Ok(jac)
}

/// Nearest point of the closed unit disk. Interior points, including zero,
/// are returned unchanged.
#[inline]
pub fn project_unit_disk_scalar(z: C64) -> C64 {
    let r = z.norm();
    if r > 1.0 {
        z / r
    } else {
        z
    }
}

pub fn project_unit_disk(v: &[C64]) -> Vec<C64> {
    v.iter().map(|&z| project_unit_disk_scalar(z)).collect()
}

pub fn project_unit_disk_in_place(v: &mut [C64]) {
    for z in v {
        *z = project_unit_disk_scalar(*z);
    }
}

/// Passive-beamforming state: the free reflection vector `ϕ` and the
/// Lorentzian parameters with their induced coefficients `b(φ, ψ, κ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsState {
    pub params: LorentzianParams,
    /// Free variable ϕ, tone-major, `|ϕ| ≤ 1`.
    pub phi: Vec<C64>,
    /// `b(φ, ψ, κ)`, same layout as `phi`.
    pub b_cache: Vec<C64>,
}

impl IrsState {
    /// Initial state: `b` from the parameters and `ϕ` its disk projection.
    pub fn new(params: LorentzianParams, grid: &FrequencyGrid) -> Result<Self> {
        params.validate()?;
        let b_cache = lorentzian_response(&params, grid)?;
        let phi = project_unit_disk(&b_cache);
        Ok(Self { params, phi, b_cache })
    }

    /// State with a prescribed reflection vector (e.g. random phases or no
    /// IRS), keeping the parameters for bookkeeping only.
    pub fn with_phi(params: LorentzianParams, grid: &FrequencyGrid, phi: Vec<C64>) -> Result<Self> {
        let mut s = Self::new(params, grid)?;
        if phi.len() != s.phi.len() {
            return Err(dim_err("reflection vector length mismatch"));
        }
        s.phi = phi;
        Ok(s)
    }

    /// Recomputes `b` after a parameter change.
    pub fn refresh(&mut self, grid: &FrequencyGrid) -> Result<()> {
        self.b_cache = lorentzian_response(&self.params, grid)?;
        Ok(())
    }

    /// `‖ϕ − b‖`.
    pub fn penalty_residual(&self) -> f64 {
        crate::math::sqrt(crate::linalg::dist_sqr(&self.phi, &self.b_cache))
    }

    /// Physically realizable coefficients: `b` projected onto the disk.
    pub fn physical_phi(&self) -> Vec<C64> {
        project_unit_disk(&self.b_cache)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(varphi: f64, psi: f64, kappa: f64) -> LorentzianParams {
        LorentzianParams { varphi: alloc::vec![varphi], psi: alloc::vec![psi], kappa: alloc::vec![kappa] }
    }

    fn grid_at(f: f64) -> FrequencyGrid {
        FrequencyGrid { freqs: alloc::vec![f] }
    }

    #[test]
    fn resonance_value() {
        let r = lorentzian_response(&one(1.0, 3e9, 6e7), &grid_at(3e9)).unwrap();
        assert!((r[0] - C64::new(0.0, -50.0)).norm() < 1e-9);
    }

    #[test]
    fn zero_strength_gives_zero() {
        let g = FrequencyGrid::new(3e9, 1e8, 8).unwrap();
        let p = LorentzianParams {
            varphi: alloc::vec![0.0; 3],
            psi: alloc::vec![3e9; 3],
            kappa: alloc::vec![6e7; 3],
        };
        assert!(lorentzian_response(&p, &g).unwrap().iter().all(|z| *z == ZERO));
        let j = lorentzian_jacobian(&p, &g).unwrap();
        assert!(j.d_psi.iter().chain(&j.d_kappa).all(|z| *z == ZERO));
        assert!(j.d_varphi.iter().all(|z| z.norm() > 0.0));
    }

    #[test]
    fn low_frequency_vanishes() {
        let r = lorentzian_response(&one(1.0, 3e9, 6e7), &grid_at(1.0)).unwrap();
        assert!(r[0].norm() < 1e-18);
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(lorentzian_response(&one(1.0, 3e9, 0.0), &grid_at(3e9)).is_err());
        assert!(lorentzian_jacobian(&one(1.0, 3e9, 0.0), &grid_at(3e9)).is_err());
    }

    #[test]
    fn jacobian_at_resonance() {
        let j = lorentzian_jacobian(&one(1.0, 3e9, 6e7), &grid_at(3e9)).unwrap();
        // f²/(jκf) = −j f/κ
        assert!((j.d_varphi[0] - C64::new(0.0, -50.0)).norm() < 1e-9);
    }

    #[test]
    fn magnitude_formula_and_peak() {
        let p = one(1.3, 3e9, 4e7);
        let g = FrequencyGrid::new(3e9, 3e8, 61).unwrap();
        let r = lorentzian_response(&p, &g).unwrap();
        let mut best = (0, 0.0);
        for (m, (&f, z)) in g.freqs.iter().zip(&r).enumerate() {
            let want = 1.3 * f * f
                / libm::sqrt((9e18 - f * f) * (9e18 - f * f) + 16e14 * f * f);
            assert!((z.norm() - want).abs() < 1e-9 * want);
            if z.norm() > best.1 {
                best = (m, z.norm());
            }
        }
        assert!((g.freqs[best.0] - 3e9).abs() <= 1e7);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_unit_disk_scalar(C64::new(3.0, 4.0)), C64::new(0.6, 0.8));
        assert_eq!(project_unit_disk_scalar(C64::new(0.5, 0.0)), C64::new(0.5, 0.0));
        assert_eq!(project_unit_disk_scalar(ZERO), ZERO);
        let v = [C64::new(2.0, -2.0), C64::new(0.1, 0.2)];
        let p = project_unit_disk(&v);
        assert_eq!(project_unit_disk(&p), p);
    }

    #[test]
    fn initial_state_is_projected_response() {
        let init = LorentzianInit { varphi: 1.0, psi: 3e9, quality: 50.0 };
        let g = FrequencyGrid::new(3e9, 1e8, 16).unwrap();
        let s = IrsState::new(LorentzianParams::uniform(4, &init), &g).unwrap();
        assert_eq!(s.phi.len(), 64);
        assert!(s.b_cache.iter().all(|z| z.norm() > 1.0));
        assert!(s.phi.iter().all(|z| z.norm() <= 1.0 + 1e-12));
        assert!(s.penalty_residual() > 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(one(-1.0, 3e9, 1.0).validate().is_err());
        assert!(one(1.0, 0.0, 1.0).validate().is_err());
        one(1.0, 1.0, -1.0).validate().unwrap();
    }
}
