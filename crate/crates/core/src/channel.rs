//! Per-tone frequency-domain channels: synthesis under the Rician model,
//! IRS stacking, effective (direct + cascaded) channels, and the CSI-error
//! perturbation.
//!
//! Stored orientations follow the conventions of the precoding problem:
//! `H_{b,k,m}` is `N_t × N_r` (so `Hᴴ` maps BS antennas to user antennas),
//! `G_{b,i,m}` is `R × N_t`, and `F_{i,k,m}` is `R × N_r`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{dim_err, domain_err, Result};
use crate::linalg::{CMat, C64, ZERO};
use crate::math;
use crate::scenario::{
    link_distances, path_loss, Dims, FrequencyGrid, LinkDistances, Point3, RiceFactor,
    SystemConfig,
};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Constituent link matrices for every tone.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub dims: Dims,
    /// `H_{b,k,m}` at `(m · N_b + b) · K + k`, each `N_t × N_r`.
    pub direct: Vec<CMat>,
    /// `G_{b,i,m}` at `(m · N_b + b) · N_c + i`, each `R × N_t`.
    pub bs_irs: Vec<CMat>,
    /// `F_{i,k,m}` at `(m · N_c + i) · K + k`, each `R × N_r`.
    pub irs_user: Vec<CMat>,
}

impl ChannelSet {
    pub fn zeros(dims: Dims) -> Self {
        let d = dims;
        Self {
            dims,
            direct: alloc::vec![CMat::zeros(d.n_tx, d.n_rx); d.n_tones * d.n_bs * d.n_users],
            bs_irs: alloc::vec![CMat::zeros(d.n_elems, d.n_tx); d.n_tones * d.n_bs * d.n_irs],
            irs_user: alloc::vec![CMat::zeros(d.n_elems, d.n_rx); d.n_tones * d.n_irs * d.n_users],
        }
    }

    #[inline]
    pub fn direct_index(&self, b: usize, k: usize, m: usize) -> usize {
        (m * self.dims.n_bs + b) * self.dims.n_users + k
    }

    #[inline]
    pub fn bs_irs_index(&self, b: usize, i: usize, m: usize) -> usize {
        (m * self.dims.n_bs + b) * self.dims.n_irs + i
    }

    #[inline]
    pub fn irs_user_index(&self, i: usize, k: usize, m: usize) -> usize {
        (m * self.dims.n_irs + i) * self.dims.n_users + k
    }

    pub fn h(&self, b: usize, k: usize, m: usize) -> &CMat {
        &self.direct[self.direct_index(b, k, m)]
    }

    pub fn g(&self, b: usize, i: usize, m: usize) -> &CMat {
        &self.bs_irs[self.bs_irs_index(b, i, m)]
    }

    pub fn f(&self, i: usize, k: usize, m: usize) -> &CMat {
        &self.irs_user[self.irs_user_index(i, k, m)]
    }

    /// Copy with every BS–user link blocked.
    pub fn without_direct(&self) -> Self {
        let mut out = self.clone();
        for h in &mut out.direct {
            h.fill(ZERO);
        }
        out
    }

    /// Checks every matrix shape and that all entries are finite.
    pub fn validate(&self) -> Result<()> {
        let d = &self.dims;
        let expect = [
            ("direct", self.direct.len(), d.n_tones * d.n_bs * d.n_users, d.n_tx, d.n_rx),
            ("bs_irs", self.bs_irs.len(), d.n_tones * d.n_bs * d.n_irs, d.n_elems, d.n_tx),
            ("irs_user", self.irs_user.len(), d.n_tones * d.n_irs * d.n_users, d.n_elems, d.n_rx),
        ];
        for (name, len, want, rows, cols) in expect {
            if len != want {
                return Err(dim_err(format!("{name}: {len} matrices, expected {want}")));
            }
            let mats = match name {
                "direct" => &self.direct,
                "bs_irs" => &self.bs_irs,
                _ => &self.irs_user,
            };
            for mat in mats {
                if mat.nrows() != rows || mat.ncols() != cols {
                    return Err(dim_err(format!(
                        "{name}: matrix is {}x{}, expected {rows}x{cols}",
                        mat.nrows(),
                        mat.ncols()
                    )));
                }
                if mat.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(domain_err(format!("{name}: non-finite entry")));
                }
            }
        }
        Ok(())
    }
}

/// Standard circularly-symmetric complex Gaussian, `CN(0, 1)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    // column-major fill, matching nalgebra storage
    let mut m = CMat::zeros(rows, cols);
    for z in m.iter_mut() {
        *z = complex_normal(rng);
    }
    m
}

/// Half-wavelength ULA along the x axis: `[exp(jπ (f/f_c) n cos θ)]_n`,
/// where `cos θ` is the x-component of the unit vector towards the peer.
fn ula_response(n: usize, cos_axis: f64, freq: f64, carrier: f64) -> Vec<C64> {
    let phase = core::f64::consts::PI * (freq / carrier) * cos_axis;
    (0..n)
        .map(|i| {
            let a = phase * i as f64;
            C64::new(math::cos(a), math::sin(a))
        })
        .collect()
}

/// Unit-modulus rank-one LoS matrix from a transmitting array to a receiving
/// array, `n_rx × n_tx`, including the propagation phase at `freq`.
fn los_matrix(
    tx: Point3,
    n_tx: usize,
    rx: Point3,
    n_rx: usize,
    distance: f64,
    freq: f64,
    carrier: f64,
) -> CMat {
    let span = tx.distance(&rx);
    let cos_tx = if span > 0.0 { (rx.x - tx.x) / span } else { 0.0 };
    let cos_rx = -cos_tx;
    let a_tx = ula_response(n_tx, cos_tx, freq, carrier);
    let a_rx = ula_response(n_rx, cos_rx, freq, carrier);
    let delay = -core::f64::consts::TAU * freq * distance / SPEED_OF_LIGHT;
    let common = C64::new(math::cos(delay), math::sin(delay));
    CMat::from_fn(n_rx, n_tx, |r, t| common * a_rx[r] * a_tx[t].conj())
}

/// One link class: generates the downlink matrix `n_rx × n_tx` for all tones
/// with a shared scattered component.
#[allow(clippy::too_many_arguments)]
fn link_over_tones<R: Rng + ?Sized>(
    tx: Point3,
    n_tx: usize,
    rx: Point3,
    n_rx: usize,
    distance: f64,
    exponent: f64,
    rice: RiceFactor,
    config: &SystemConfig,
    grid: &FrequencyGrid,
    rng: &mut R,
) -> Result<Vec<CMat>> {
    let gain = math::sqrt(path_loss(distance, exponent, &config.pathloss)?);
    let (w_los, w_nlos) = rice.weights();
    let nlos = gaussian_matrix(n_rx, n_tx, rng);
    Ok(grid
        .freqs
        .iter()
        .map(|&f| {
            let mut h = nlos.clone() * C64::from(w_nlos);
            if w_los > 0.0 {
                h += los_matrix(tx, n_tx, rx, n_rx, distance, f, config.carrier_hz) * C64::from(w_los);
            }
            h * C64::from(gain)
        })
        .collect())
}

/// Draws all channels of a scenario from node positions.
pub fn sample_channels<R: Rng + ?Sized>(
    config: &SystemConfig,
    grid: &FrequencyGrid,
    rng: &mut R,
) -> Result<ChannelSet> {
    let dist = link_distances(config)?;
    sample_channels_with_distances(config, grid, &dist, rng)
}

/// Draws all channels using the given link distances for path loss and
/// propagation phase (positions still set the LoS angles).
///
/// Draw order is fixed: BS–user links (BS-major), BS–IRS, then IRS–user.
pub fn sample_channels_with_distances<R: Rng + ?Sized>(
    config: &SystemConfig,
    grid: &FrequencyGrid,
    dist: &LinkDistances,
    rng: &mut R,
) -> Result<ChannelSet> {
    let d = config.dims;
    if grid.len() != d.n_tones {
        return Err(dim_err("frequency grid length differs from n_tones"));
    }
    let pl = &config.pathloss;
    let mut set = ChannelSet::zeros(d);
    for b in 0..d.n_bs {
        for k in 0..d.n_users {
            let tones = link_over_tones(
                config.bs_positions[b],
                d.n_tx,
                config.user_positions[k],
                d.n_rx,
                dist.bs_user(b, k),
                pl.exp_bs_user,
                config.rice.bs_user,
                config,
                grid,
                rng,
            )?;
            for (m, hd) in tones.into_iter().enumerate() {
                let idx = set.direct_index(b, k, m);
                set.direct[idx] = hd.adjoint();
            }
        }
    }
    for b in 0..d.n_bs {
        for i in 0..d.n_irs {
            let tones = link_over_tones(
                config.bs_positions[b],
                d.n_tx,
                config.irs_positions[i],
                d.n_elems,
                dist.bs_irs(b, i),
                pl.exp_bs_irs,
                config.rice.bs_irs,
                config,
                grid,
                rng,
            )?;
            for (m, g) in tones.into_iter().enumerate() {
                let idx = set.bs_irs_index(b, i, m);
                set.bs_irs[idx] = g;
            }
        }
    }
    for i in 0..d.n_irs {
        for k in 0..d.n_users {
            let tones = link_over_tones(
                config.irs_positions[i],
                d.n_elems,
                config.user_positions[k],
                d.n_rx,
                dist.irs_user(i, k),
                pl.exp_irs_user,
                config.rice.irs_user,
                config,
                grid,
                rng,
            )?;
            for (m, fd) in tones.into_iter().enumerate() {
                let idx = set.irs_user_index(i, k, m);
                set.irs_user[idx] = fd.adjoint();
            }
        }
    }
    Ok(set)
}

fn perturb<R: Rng + ?Sized>(h: &CMat, omega: f64, rng: &mut R) -> CMat {
    let n = h.len();
    if n == 0 {
        return h.clone();
    }
    let total = h.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let std = math::sqrt(omega * total / n as f64);
    let mut out = h.clone();
    for z in out.iter_mut() {
        *z += complex_normal(rng) * std;
    }
    out
}

/// Imperfect CSI: every link matrix gets an independent additive error with
/// total variance `ω · ‖H‖²_F` spread evenly over its entries.
pub fn apply_csi_error<R: Rng + ?Sized>(
    chan: &ChannelSet,
    omega: f64,
    rng: &mut R,
) -> Result<ChannelSet> {
    if !(omega >= 0.0) || !omega.is_finite() {
        return Err(domain_err(format!("CSI error level must be nonnegative, got {omega}")));
    }
    if omega == 0.0 {
        return Ok(chan.clone());
    }
    let mut out = chan.clone();
    for h in out.direct.iter_mut().chain(out.bs_irs.iter_mut()).chain(out.irs_user.iter_mut()) {
        *h = perturb(h, omega, rng);
    }
    Ok(out)
}

/// Channels with the IRS dimension stacked: `F_{k,m}` is `(R N_c) × N_r`
/// and `G_{b,m}` is `(R N_c) × N_t`, IRS-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedChannels {
    pub dims: Dims,
    /// Same layout as [`ChannelSet::direct`].
    pub direct: Vec<CMat>,
    /// `F_{k,m}` at `m · K + k`.
    pub irs_user: Vec<CMat>,
    /// `G_{b,m}` at `m · N_b + b`.
    pub bs_irs: Vec<CMat>,
}

impl StackedChannels {
    pub fn new(set: &ChannelSet) -> Self {
        let d = set.dims;
        let n = d.n_refl();
        let mut irs_user = Vec::with_capacity(d.n_tones * d.n_users);
        let mut bs_irs = Vec::with_capacity(d.n_tones * d.n_bs);
        for m in 0..d.n_tones {
            for k in 0..d.n_users {
                let mut s = CMat::zeros(n, d.n_rx);
                for i in 0..d.n_irs {
                    s.rows_mut(i * d.n_elems, d.n_elems).copy_from(set.f(i, k, m));
                }
                irs_user.push(s);
            }
            for b in 0..d.n_bs {
                let mut s = CMat::zeros(n, d.n_tx);
                for i in 0..d.n_irs {
                    s.rows_mut(i * d.n_elems, d.n_elems).copy_from(set.g(b, i, m));
                }
                bs_irs.push(s);
            }
        }
        Self { dims: d, direct: set.direct.clone(), irs_user, bs_irs }
    }

    pub fn h(&self, b: usize, k: usize, m: usize) -> &CMat {
        let d = &self.dims;
        &self.direct[(m * d.n_bs + b) * d.n_users + k]
    }

    pub fn f(&self, k: usize, m: usize) -> &CMat {
        &self.irs_user[m * self.dims.n_users + k]
    }

    pub fn g(&self, b: usize, m: usize) -> &CMat {
        &self.bs_irs[m * self.dims.n_bs + b]
    }
}

/// `Ĥᴴ_{b,k,m} = Hᴴ + Fᴴ_{k,m} Φᴴ_m G_{b,m}` (`N_r × N_t`), where
/// `phi_tone` holds the `R N_c` reflection coefficients of tone `m`.
pub fn effective_channel(
    chan: &StackedChannels,
    phi_tone: &[C64],
    b: usize,
    k: usize,
    m: usize,
) -> Result<CMat> {
    let d = &chan.dims;
    if phi_tone.len() != d.n_refl() {
        return Err(dim_err(format!(
            "reflection vector has {} entries, expected {}",
            phi_tone.len(),
            d.n_refl()
        )));
    }
    if b >= d.n_bs || k >= d.n_users || m >= d.n_tones {
        return Err(dim_err("effective_channel: index out of range"));
    }
    let mut out = chan.h(b, k, m).adjoint();
    let f = chan.f(k, m);
    let g = chan.g(b, m);
    for (e, &p) in phi_tone.iter().enumerate() {
        if p == ZERO {
            continue;
        }
        let pc = p.conj();
        for a in 0..d.n_rx {
            let fa = f[(e, a)].conj() * pc;
            for t in 0..d.n_tx {
                out[(a, t)] += fa * g[(e, t)];
            }
        }
    }
    Ok(out)
}

/// Effective channels of every user and tone, concatenated over BSs:
/// `E_{k,m} = Ĥᴴ_{k,m}` is `N_r × (N_t N_b)`, BS-major columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    pub dims: Dims,
    /// `E_{k,m}` at `m · K + k`.
    pub mats: Vec<CMat>,
}

impl EffectiveChannels {
    /// `phi` is the tone-major reflection vector of length `M R N_c`.
    pub fn new(chan: &StackedChannels, phi: &[C64]) -> Result<Self> {
        let d = chan.dims;
        if phi.len() != d.phi_len() {
            return Err(dim_err(format!(
                "reflection vector has {} entries, expected {}",
                phi.len(),
                d.phi_len()
            )));
        }
        let n = d.n_refl();
        let mut mats = Vec::with_capacity(d.n_user_tones());
        for m in 0..d.n_tones {
            let tone = &phi[m * n..(m + 1) * n];
            for k in 0..d.n_users {
                let mut e = CMat::zeros(d.n_rx, d.n_tx_total());
                for b in 0..d.n_bs {
                    let blk = effective_channel(chan, tone, b, k, m)?;
                    e.columns_mut(b * d.n_tx, d.n_tx).copy_from(&blk);
                }
                mats.push(e);
            }
        }
        Ok(Self { dims: d, mats })
    }

    pub fn get(&self, k: usize, m: usize) -> &CMat {
        &self.mats[self.dims.ut(k, m)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_dims() -> Dims {
        Dims { n_bs: 1, n_tx: 1, n_users: 1, n_rx: 1, n_irs: 1, n_elems: 1, n_tones: 1 }
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn scalar_effective_channel_conjugates_phi() {
        let mut set = ChannelSet::zeros(scalar_dims());
        // Hᴴ = 1, Fᴴ = 2, G = 3
        set.direct[0][(0, 0)] = c(1.0, 0.0);
        set.irs_user[0][(0, 0)] = c(2.0, 0.0);
        set.bs_irs[0][(0, 0)] = c(3.0, 0.0);
        let st = StackedChannels::new(&set);
        let e = effective_channel(&st, &[c(0.0, 1.0)], 0, 0, 0).unwrap();
        assert_eq!(e[(0, 0)], c(1.0, -6.0));
        let e0 = effective_channel(&st, &[ZERO], 0, 0, 0).unwrap();
        assert_eq!(e0[(0, 0)], c(1.0, 0.0));
        let cascaded = effective_channel(&StackedChannels::new(&set.without_direct()), &[c(0.0, 1.0)], 0, 0, 0)
            .unwrap();
        assert_eq!(cascaded[(0, 0)], c(0.0, -6.0));
    }

    #[test]
    fn effective_channel_rejects_bad_phi() {
        let set = ChannelSet::zeros(scalar_dims());
        let st = StackedChannels::new(&set);
        assert!(effective_channel(&st, &[ZERO, ZERO], 0, 0, 0).is_err());
    }

    fn rayleigh_config() -> SystemConfig {
        let mut cfg = SystemConfig::reduced();
        cfg.rice.bs_user = RiceFactor::Finite(0.0);
        cfg.rice.irs_user = RiceFactor::Finite(0.0);
        cfg.rice.bs_irs = RiceFactor::Finite(0.0);
        cfg
    }

    #[test]
    fn pure_los_has_no_scattering() {
        let mut cfg = SystemConfig::reduced();
        cfg.rice.bs_irs = RiceFactor::Infinite;
        let grid = crate::scenario::build_frequency_grid(&cfg).unwrap();
        let set = sample_channels(&cfg, &grid, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let dist = link_distances(&cfg).unwrap();
        for m in 0..cfg.dims.n_tones {
            let g = set.g(1, 0, m);
            let expect = math::sqrt(path_loss(dist.bs_irs(1, 0), 2.2, &cfg.pathloss).unwrap());
            for z in g.iter() {
                assert!((z.norm() - expect).abs() < 1e-12 * expect);
            }
            // rank one
            let r = g.column(0).clone_owned();
            for t in 1..cfg.dims.n_tx {
                let ratio = g[(0, t)] / g[(0, 0)];
                for e in 0..cfg.dims.n_elems {
                    assert!((g[(e, t)] - r[e] * ratio).norm() < 1e-12 * expect);
                }
            }
        }
    }

    #[test]
    fn rayleigh_entry_variance_matches_path_loss() {
        let mut cfg = rayleigh_config();
        cfg.dims.n_elems = 64;
        cfg.dims.n_tones = 1;
        cfg.weights = alloc::vec![1.0; cfg.dims.n_user_tones()];
        let grid = crate::scenario::build_frequency_grid(&cfg).unwrap();
        let dist = link_distances(&cfg).unwrap();
        let l = path_loss(dist.bs_irs(0, 0), cfg.pathloss.exp_bs_irs, &cfg.pathloss).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut acc = 0.0;
        let mut count = 0usize;
        while count < 20_000 {
            let set = sample_channels(&cfg, &grid, &mut rng).unwrap();
            for z in set.g(0, 0, 0).iter() {
                acc += z.norm_sqr();
                count += 1;
            }
        }
        let var = acc / count as f64;
        assert!((var / l - 1.0).abs() < 0.03, "variance ratio {}", var / l);
    }

    #[test]
    fn rice_weights() {
        let (a, b) = RiceFactor::Finite(1.0).weights();
        assert!((a - 0.5f64.sqrt()).abs() < 1e-15 && (b - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(RiceFactor::Infinite.weights(), (1.0, 0.0));
        assert_eq!(RiceFactor::Finite(0.0).weights(), (0.0, 1.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = SystemConfig::reduced();
        let grid = crate::scenario::build_frequency_grid(&cfg).unwrap();
        let a = sample_channels(&cfg, &grid, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_channels(&cfg, &grid, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
    }

    #[test]
    fn csi_error_zero_and_scaling() {
        let cfg = rayleigh_config();
        let grid = crate::scenario::build_frequency_grid(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let set = sample_channels(&cfg, &grid, &mut rng).unwrap();
        assert_eq!(apply_csi_error(&set, 0.0, &mut rng).unwrap(), set);
        assert!(apply_csi_error(&set, -0.1, &mut rng).is_err());

        let zero = ChannelSet::zeros(cfg.dims);
        assert_eq!(apply_csi_error(&zero, 0.3, &mut rng).unwrap(), zero);

        let h = set.h(0, 0, 0).clone();
        let hn = h.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let trials = 10_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let p = perturb(&h, 0.2, &mut rng);
            acc += (p - &h).iter().map(|z| z.norm_sqr()).sum::<f64>() / hn;
        }
        let ratio = acc / trials as f64;
        assert!((ratio - 0.2).abs() < 0.2 * 0.03, "ratio {ratio}");
    }
}
