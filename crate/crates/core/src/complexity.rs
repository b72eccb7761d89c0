//! Complex-multiplication counts of the joint design and of the
//! primal-dual subgradient reference, evaluated in exact integer arithmetic.

use alloc::format;
use alloc::string::String;

use crate::error::{config_err, Result};
use crate::scenario::Dims;

/// Iteration counts entering the operation counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityInputs {
    /// Outer iterations of the joint design.
    pub outer: u64,
    /// CADMM iterations.
    pub cadmm: u64,
    /// APG iterations.
    pub apg: u64,
    /// FRCG iterations.
    pub frcg: u64,
    /// Outer iterations of the reference method.
    pub pds_outer: u64,
    /// Active-block iterations of the reference method.
    pub pds_active: u64,
    /// Passive-block iterations of the reference method.
    pub pds_passive: u64,
}

impl Default for ComplexityInputs {
    fn default() -> Self {
        Self { outer: 10, cadmm: 35, apg: 40, frcg: 5, pds_outer: 15, pds_active: 11, pds_passive: 15 }
    }
}

impl ComplexityInputs {
    pub fn validate(&self) -> Result<()> {
        let all = [self.outer, self.cadmm, self.apg, self.frcg, self.pds_outer, self.pds_active, self.pds_passive];
        if all.contains(&0) {
            return Err(config_err("iteration counts must be at least 1"));
        }
        Ok(())
    }
}

/// Per-variable counts for one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableCounts {
    pub eta: u128,
    pub delta: u128,
    pub w: u128,
    pub rho: u128,
    pub phi: u128,
    pub varphi: u128,
    pub psi: u128,
    pub kappa: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityReport {
    pub per_variable: VariableCounts,
    pub proposed: u128,
    pub pds: u128,
}

impl ComplexityReport {
    /// `proposed / pds` as an exact fraction.
    pub fn ccr(&self) -> (u128, u128) {
        (self.proposed, self.pds)
    }

    /// CCR in percent, rounded half-up to `decimals` places.
    pub fn ccr_percent(&self, decimals: u32) -> String {
        let scale = 10u128.pow(decimals);
        let v = (self.proposed * 100 * scale * 2 + self.pds) / (self.pds * 2);
        if decimals == 0 {
            format!("{v}%")
        } else {
            format!("{}.{:0width$}%", v / scale, v % scale, width = decimals as usize)
        }
    }
}

pub fn complexity_report(d: &Dims, it: &ComplexityInputs) -> Result<ComplexityReport> {
    d.validate()?;
    it.validate()?;
    let u = |x: usize| x as u128;
    let (nt, nb, m, k, nr) = (u(d.n_tx), u(d.n_bs), u(d.n_tones), u(d.n_users), u(d.n_rx));
    let ncr = u(d.n_irs) * u(d.n_elems);
    let (i_oc, i_w, i_phi, i_1) = (it.outer as u128, it.cadmm as u128, it.apg as u128, it.frcg as u128);
    let ntnbmk = nt * nb * m * k;
    let per_variable = VariableCounts {
        eta: m * k * (k * nr * nt * nb + nr.pow(3) + (k + 1) * nr * nr + nr),
        delta: m * k * (k * nr * nt * nb + nr.pow(3) + (k + 1) * nr * nr),
        w: ntnbmk * ntnbmk + i_w * ntnbmk,
        rho: m * k * (nr.pow(3) + (k + 1) * nr * nr),
        phi: i_phi * (ncr * ncr + 2 * ncr),
        varphi: 3 * i_1 * ncr,
        psi: 3 * i_1 * ncr,
        kappa: 3 * i_1 * ncr,
    };
    let proposed = i_oc * (ntnbmk * ntnbmk + i_w * ntnbmk + i_phi * (ncr * ncr + 2 * ncr + 9 * i_1 * ncr));
    let pds = it.pds_outer as u128
        * (it.pds_active as u128 * ntnbmk * ntnbmk + it.pds_passive as u128 * ncr * ncr);
    Ok(ComplexityReport { per_variable, proposed, pds })
}

/// Scientific notation with the mantissa's trailing zeros removed,
/// e.g. `24080000 → "2.408E+7"`.
pub fn format_sci(v: u128) -> String {
    if v == 0 {
        return String::from("0E+0");
    }
    let digits = format!("{v}");
    let exp = digits.len() - 1;
    let frac = digits[1..].trim_end_matches('0');
    if frac.is_empty() {
        format!("{}E+{exp}", &digits[..1])
    } else {
        format!("{}.{frac}E+{exp}", &digits[..1])
    }
}
