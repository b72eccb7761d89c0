//! Reference schemes compared against the joint design.

use alloc::vec::Vec;

use rand::Rng;

use crate::channel::{ChannelSet, StackedChannels};
use crate::error::Result;
use crate::irs::{IrsState, LorentzianParams};
use crate::joint::{initial_point, joint_optimize, JointOptions, JointOutcome};
use crate::linalg::{C64, ZERO};
use crate::math;
use crate::metrics::{evaluate, MetricsReport};
use crate::scenario::{build_frequency_grid, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaselineKind {
    /// Joint active and passive design.
    Optimized,
    /// Unit-modulus reflection with uniform random phases; precoder only.
    RandomPhase,
    /// Reflection switched off; precoder only.
    WithoutIrs,
    /// Direct links removed; joint design.
    WithoutDirectLink,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] =
        [Self::Optimized, Self::RandomPhase, Self::WithoutIrs, Self::WithoutDirectLink];

    pub fn name(self) -> &'static str {
        match self {
            Self::Optimized => "optimized",
            Self::RandomPhase => "random_phase",
            Self::WithoutIrs => "without_irs",
            Self::WithoutDirectLink => "without_direct_link",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Outcome of one baseline run.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub kind: BaselineKind,
    pub joint: JointOutcome,
    /// Metrics of the final point on the true channels.
    pub report: MetricsReport,
}

/// Channels as seen by the optimizer and as used for reporting.
#[derive(Debug, Clone, Copy)]
pub struct ChannelPair<'a> {
    pub est: &'a ChannelSet,
    pub truth: &'a ChannelSet,
}

/// Runs one baseline. The random draws (initial precoder, random phases)
/// come from `rng` in a fixed order, so a seeded generator makes the result
/// reproducible.
pub fn run_baseline<R: Rng + ?Sized>(
    kind: BaselineKind,
    config: &SystemConfig,
    chan: ChannelPair<'_>,
    with_ee: bool,
    rng: &mut R,
) -> Result<BaselineResult> {
    let d = config.dims;
    let (w0, mut irs) = initial_point(config, rng)?;
    let grid = build_frequency_grid(config)?;
    let params = || LorentzianParams::uniform(d.n_refl(), &config.lorentzian);
    let mut opts = JointOptions::default();
    let (est, truth) = match kind {
        BaselineKind::WithoutDirectLink => (chan.est.without_direct(), chan.truth.without_direct()),
        _ => (chan.est.clone(), chan.truth.clone()),
    };
    match kind {
        BaselineKind::Optimized | BaselineKind::WithoutDirectLink => {}
        BaselineKind::RandomPhase => {
            let phi: Vec<C64> = (0..d.phi_len())
                .map(|_| {
                    let th = rng.random::<f64>() * core::f64::consts::TAU;
                    C64::new(math::cos(th), math::sin(th))
                })
                .collect();
            irs = IrsState::with_phi(params(), &grid, phi)?;
            opts.optimize_phi = false;
        }
        BaselineKind::WithoutIrs => {
            irs = IrsState::with_phi(params(), &grid, alloc::vec![ZERO; d.phi_len()])?;
            opts.optimize_phi = false;
        }
    }
    let est_st = StackedChannels::new(&est);
    let truth_st = StackedChannels::new(&truth);
    let joint = joint_optimize(config, &est_st, &truth_st, w0, irs, &opts)?;
    let report = evaluate(config, &truth_st, &joint.irs.phi, &joint.w, with_ee)?;
    Ok(BaselineResult { kind, joint, report })
}
