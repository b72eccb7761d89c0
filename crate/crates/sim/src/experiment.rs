//! Monte-Carlo experiment sweeps.
//!
//! Every (sweep point, trial) pair is an independent job. Trial `t` uses
//! seed `base_seed ^ t` at every sweep point, so points share channel draws
//! where the geometry allows. Within a job, separate ChaCha streams feed user
//! placement, channel synthesis, CSI error and each baseline, so results do
//! not depend on which baselines are requested or on scheduling.

use std::io::Write;

use cellfree_core::baseline::{run_baseline, BaselineKind, ChannelPair};
use cellfree_core::channel::{apply_csi_error, sample_channels, sample_channels_with_distances, ChannelSet};
use cellfree_core::complexity::{complexity_report, format_sci, ComplexityInputs, ComplexityReport};
use cellfree_core::math;
use cellfree_core::scenario::{build_frequency_grid, LinkDistances, SystemConfig, USER_DISC_RADIUS_M};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    DistanceSweep,
    IterationTrace,
    CsiSweep,
    PowerSweep,
    ElementSweep,
    EeGrid,
    ComplexityReport,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::DistanceSweep,
        Self::IterationTrace,
        Self::CsiSweep,
        Self::PowerSweep,
        Self::ElementSweep,
        Self::EeGrid,
        Self::ComplexityReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::DistanceSweep => "distance_sweep",
            Self::IterationTrace => "iteration_trace",
            Self::CsiSweep => "csi_sweep",
            Self::PowerSweep => "power_sweep",
            Self::ElementSweep => "element_sweep",
            Self::EeGrid => "ee_grid",
            Self::ComplexityReport => "complexity_report",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn sweep_name(self) -> &'static str {
        match self {
            Self::DistanceSweep => "distance_m",
            Self::IterationTrace => "outer_iter",
            Self::CsiSweep => "csi_error",
            Self::PowerSweep => "power_cap_dbm",
            Self::ElementSweep => "n_elems",
            Self::EeGrid => "n_irs",
            Self::ComplexityReport => "",
        }
    }

    fn default_values(self) -> Vec<f64> {
        match self {
            Self::DistanceSweep => (0..8).map(|i| 10.0 + 20.0 * i as f64).collect(),
            Self::CsiSweep => vec![0.0, 0.1, 0.2, 0.3],
            Self::PowerSweep => vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            Self::ElementSweep => vec![16.0, 32.0, 48.0, 64.0],
            Self::EeGrid => vec![2.0, 6.0, 10.0, 14.0, 18.0, 22.0],
            Self::IterationTrace | Self::ComplexityReport => Vec::new(),
        }
    }
}

pub const DEFAULT_TRIALS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub values: Vec<f64>,
    pub trials: usize,
    pub baselines: Vec<BaselineKind>,
    /// BS counts of the energy-efficiency grid.
    pub ee_bs_counts: Vec<usize>,
    pub complexity: ComplexityInputs,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            values: kind.default_values(),
            trials: DEFAULT_TRIALS,
            baselines: BaselineKind::ALL.to_vec(),
            ee_bs_counts: vec![1, 3, 5, 7],
            complexity: ComplexityInputs::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::Experiment(m.to_string()));
        if self.kind == ExperimentKind::ComplexityReport {
            return self.complexity.validate().map_err(Into::into);
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.baselines.is_empty() {
            return bad("at least one baseline is required");
        }
        let needs_values = !matches!(self.kind, ExperimentKind::IterationTrace);
        if needs_values && self.values.is_empty() {
            return bad("sweep needs at least one value");
        }
        let ok = |v: f64| match self.kind {
            ExperimentKind::DistanceSweep => v.is_finite() && v >= 0.0,
            ExperimentKind::CsiSweep => v.is_finite() && v >= 0.0,
            ExperimentKind::PowerSweep => v.is_finite() && v.abs() <= 100.0,
            ExperimentKind::ElementSweep | ExperimentKind::EeGrid => v >= 1.0 && v.fract() == 0.0,
            _ => true,
        };
        if !self.values.iter().all(|&v| ok(v)) {
            return bad("sweep value out of range");
        }
        if self.kind == ExperimentKind::EeGrid && self.ee_bs_counts.contains(&0) {
            return bad("BS counts must be at least 1");
        }
        Ok(())
    }
}

/// One CSV data row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment: &'static str,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub trial: usize,
    pub baseline: &'static str,
    pub wsr_bps_hz: f64,
    pub ee_bps_hz_w: f64,
    pub outer_iters: usize,
    pub cadmm_iters: usize,
    pub apg_iters: usize,
    pub penalty_residual: f64,
    pub max_bs_power_w: f64,
    pub seed: u64,
    pub wsr_physical_bps_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentOutput {
    Rows(Vec<Row>),
    Complexity(ComplexityReport),
}

/// Stream ids inside a trial's ChaCha generator.
const STREAM_GEOMETRY: u64 = 0;
const STREAM_CHANNEL: u64 = 1;
const STREAM_CSI: u64 = 2;
const STREAM_BASELINE: u64 = 16;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Scenario of one sweep point.
struct Point {
    label: String,
    value: f64,
    config: SystemConfig,
    csi: f64,
    /// Link-distance override (energy-efficiency grid).
    distances: Option<LinkDistances>,
    /// Whether users are redrawn in the disc centered at `(value, 0)`.
    disc: bool,
}

fn points(spec: &ExperimentSpec, base: &SystemConfig) -> Result<Vec<Point>> {
    let k = spec.kind;
    let plain = |value: f64, config: SystemConfig| Point {
        label: k.sweep_name().to_string(),
        value,
        config,
        csi: 0.0,
        distances: None,
        disc: false,
    };
    let mut out = Vec::new();
    match k {
        ExperimentKind::IterationTrace => out.push(plain(0.0, base.clone())),
        ExperimentKind::DistanceSweep => {
            for &v in &spec.values {
                out.push(Point { disc: true, ..plain(v, base.clone()) });
            }
        }
        ExperimentKind::CsiSweep => {
            for &v in &spec.values {
                out.push(Point { csi: v, ..plain(v, base.clone()) });
            }
        }
        ExperimentKind::PowerSweep => {
            for &v in &spec.values {
                let mut c = base.clone();
                c.power_caps_w = vec![math::dbm_to_watts(v); c.dims.n_bs];
                out.push(plain(v, c));
            }
        }
        ExperimentKind::ElementSweep => {
            for &v in &spec.values {
                let mut c = base.clone();
                c.dims.n_elems = v as usize;
                out.push(plain(v, c));
            }
        }
        ExperimentKind::EeGrid => {
            for &nb in &spec.ee_bs_counts {
                for &v in &spec.values {
                    let mut dims = base.dims;
                    dims.n_bs = nb;
                    dims.n_irs = v as usize;
                    dims.n_tones = 1;
                    dims.n_tx = 1;
                    dims.n_rx = 1;
                    dims.n_elems = 20;
                    let mut c = SystemConfig::with_dims(dims);
                    c.solver = base.solver;
                    c.energy = base.energy;
                    c.rng_seed = base.rng_seed;
                    let dist = LinkDistances::uniform(&dims, 110.0, 15.0, 110.0)?;
                    out.push(Point {
                        label: format!("n_irs|n_bs={nb}"),
                        distances: Some(dist),
                        ..plain(v, c)
                    });
                }
            }
        }
        ExperimentKind::ComplexityReport => {}
    }
    for p in &out {
        p.config.validate()?;
    }
    Ok(out)
}

fn run_job(spec: &ExperimentSpec, p: &Point, trial: usize, base_seed: u64) -> Result<Vec<Row>> {
    let seed = base_seed ^ trial as u64;
    let mut config = p.config.clone();
    if p.disc {
        config.place_users_in_disc(p.value, 0.0, USER_DISC_RADIUS_M, &mut rng(seed, STREAM_GEOMETRY));
    }
    let grid = build_frequency_grid(&config)?;
    let mut chan_rng = rng(seed, STREAM_CHANNEL);
    let truth: ChannelSet = match &p.distances {
        Some(d) => sample_channels_with_distances(&config, &grid, d, &mut chan_rng)?,
        None => sample_channels(&config, &grid, &mut chan_rng)?,
    };
    let est = apply_csi_error(&truth, p.csi, &mut rng(seed, STREAM_CSI))?;
    let mut rows = Vec::new();
    for &kind in &spec.baselines {
        let mut brng = rng(seed, STREAM_BASELINE + kind as u64);
        let res = run_baseline(kind, &config, ChannelPair { est: &est, truth: &truth }, true, &mut brng)?;
        let powers = &res.report.per_bs_power;
        for (b, (&pw, &cap)) in powers.iter().zip(&config.power_caps_w).enumerate() {
            if pw > cap * (1.0 + 1e-9) {
                return Err(SimError::Core(cellfree_core::Error::SolverFailure {
                    stage: "report",
                    reason: format!("BS {b} power {pw:e} W exceeds cap {cap:e} W"),
                }));
            }
        }
        let j = &res.joint;
        let row = Row {
            experiment: spec.kind.name(),
            sweep_name: p.label.clone(),
            sweep_value: p.value,
            trial,
            baseline: kind.name(),
            wsr_bps_hz: res.report.wsr,
            ee_bps_hz_w: res.report.ee.unwrap_or(f64::NAN),
            outer_iters: j.outer_iterations,
            cadmm_iters: j.cadmm_iterations,
            apg_iters: j.apg_iterations,
            penalty_residual: j.irs.penalty_residual(),
            max_bs_power_w: powers.iter().cloned().fold(0.0, f64::max),
            seed,
            wsr_physical_bps_hz: j.wsr_physical,
        };
        if spec.kind == ExperimentKind::IterationTrace {
            for (it, &w) in j.wsr_trace.iter().enumerate() {
                rows.push(Row { sweep_value: it as f64, wsr_bps_hz: w, ..row.clone() });
            }
        } else {
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Runs every (point, trial) job in parallel; rows come back ordered by
/// point, trial, then baseline.
pub fn run_experiment(spec: &ExperimentSpec, config: &SystemConfig) -> Result<ExperimentOutput> {
    spec.validate()?;
    if spec.kind == ExperimentKind::ComplexityReport {
        return Ok(ExperimentOutput::Complexity(complexity_report(&config.dims, &spec.complexity)?));
    }
    let pts = points(spec, config)?;
    let jobs: Vec<(usize, usize)> = (0..pts.len()).flat_map(|p| (0..spec.trials).map(move |t| (p, t))).collect();
    let rows: Vec<Vec<Row>> = jobs
        .par_iter()
        .map(|&(p, t)| run_job(spec, &pts[p], t, config.rng_seed))
        .collect::<Result<_>>()?;
    Ok(ExperimentOutput::Rows(rows.into_iter().flatten().collect()))
}

/// Writes rows with the fixed column order; undefined EE is left empty.
pub fn write_rows<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "experiment",
        "sweep_name",
        "sweep_value",
        "trial",
        "baseline",
        "wsr_bps_hz",
        "ee_bps_hz_w",
        "outer_iters",
        "cadmm_iters",
        "apg_iters",
        "penalty_residual",
        "max_bs_power_w",
        "seed",
        "wsr_physical_bps_hz",
    ])?;
    for r in rows {
        let ee = if r.ee_bps_hz_w.is_finite() { r.ee_bps_hz_w.to_string() } else { String::new() };
        w.write_record([
            r.experiment.to_string(),
            r.sweep_name.clone(),
            r.sweep_value.to_string(),
            r.trial.to_string(),
            r.baseline.to_string(),
            r.wsr_bps_hz.to_string(),
            ee,
            r.outer_iters.to_string(),
            r.cadmm_iters.to_string(),
            r.apg_iters.to_string(),
            r.penalty_residual.to_string(),
            r.max_bs_power_w.to_string(),
            r.seed.to_string(),
            r.wsr_physical_bps_hz.to_string(),
        ])?;
    }
    w.flush().map_err(|e| SimError::Csv(e.into()))?;
    Ok(())
}

/// Per-variable and overall counts, one `item,value` pair per line.
pub fn write_complexity<W: Write>(report: &ComplexityReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["item", "value"])?;
    let v = &report.per_variable;
    for (name, count) in [
        ("eta", v.eta),
        ("delta", v.delta),
        ("w", v.w),
        ("rho", v.rho),
        ("phi", v.phi),
        ("varphi", v.varphi),
        ("psi", v.psi),
        ("kappa", v.kappa),
        ("overall_proposed", report.proposed),
        ("overall_pds", report.pds),
    ] {
        w.write_record([name.to_string(), count.to_string()])?;
    }
    w.write_record(["ccr_percent".to_string(), report.ccr_percent(4)])?;
    w.flush().map_err(|e| SimError::Csv(e.into()))?;
    Ok(())
}

/// Human-readable summary printed by the `complexity` subcommand.
pub fn complexity_summary(report: &ComplexityReport) -> String {
    format!(
        "proposed {}\npds {}\nccr {}\n",
        format_sci(report.proposed),
        format_sci(report.pds),
        report.ccr_percent(4)
    )
}

impl ExperimentOutput {
    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        match self {
            ExperimentOutput::Rows(r) => write_rows(r, out),
            ExperimentOutput::Complexity(c) => write_complexity(c, out),
        }
    }
}
