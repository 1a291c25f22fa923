//! Learned collision detection with a certificate.
//!
//! [`lbcd`] draws `m` uniform configurations, keeps those with clearance
//! strictly above δ, checks the two failure conditions
//!
//! - C1: the tolerable interior error `ε_int` is not positive;
//! - C2: fewer interior samples than the sample bound at `ε_int`;
//!
//! and otherwise trains a hard-margin SVM on the grid features of the
//! interior samples. [`adaptive_lcd`] retries with `m ← 2m, δ ← δ/2` until
//! a run succeeds or a resource limit is hit.

mod model_file;

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::featuremap::{FeatureMapError, FeatureMapParams, DEFAULT_FEATURE_CAP};
use crate::rng::{derive_seed, RNG_ALGORITHM};
use crate::scene::{Label, SampleChunks, SceneError, SceneOracle};
use crate::stats::{
    interior_error_with_z, sample_complexity_bound, required_samples, GuaranteeParams,
    InteriorEstimate, StatsError,
};
use crate::svm::{train_hard_svm, LinearModel, SvmConfig, SvmError, TrainingSet};

pub use model_file::{load_model, model_to_string, parse_model, save_model, ModelFileError};

/// Points generated and labelled per batch.
const SAMPLE_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// C1/C2 gate training; a returned model carries the certificate.
    Certified,
    /// C1/C2 are computed and reported but do not block training.
    Empirical,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Certified => "certified",
            Mode::Empirical => "empirical",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "certified" => Some(Mode::Certified),
            "empirical" => Some(Mode::Empirical),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbcdConfig {
    pub mode: Mode,
    pub svm: SvmConfig,
    pub feature_cap: usize,
    /// Largest number of samples a single run may draw.
    pub sample_budget: u64,
    /// Largest `|S_interior| · n^d` the training matrix may hold.
    pub max_training_entries: usize,
}

impl Default for LbcdConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Certified,
            svm: SvmConfig::default(),
            feature_cap: DEFAULT_FEATURE_CAP,
            sample_budget: 1_000_000_000,
            max_training_entries: 1 << 28,
        }
    }
}

/// Interior statistics and the C1/C2 verdict of one draw.
#[derive(Debug, Clone, PartialEq)]
pub struct GuaranteeReport {
    pub sample_count: u64,
    pub interior_count: u64,
    pub p_hat: f64,
    pub z: f64,
    pub epsilon_interior: f64,
    /// Sample bound at `ε_int`; `+∞` when C1 holds or the bound overflows.
    pub required_m: f64,
    pub c1: bool,
    pub c2: bool,
    pub normal_approx_valid: bool,
    pub confidence: f64,
}

impl GuaranteeReport {
    pub fn compute(
        epsilon: f64,
        xi: f64,
        delta: f64,
        d: usize,
        interior_count: u64,
        sample_count: u64,
    ) -> Result<Self, StatsError> {
        let est = InteriorEstimate::new(interior_count, sample_count, xi)?;
        GuaranteeParams::new(epsilon, xi, delta, d)?;
        let epsilon_interior = interior_error_with_z(epsilon, est.z, interior_count, sample_count);
        let c1 = !(epsilon_interior > 0.0);
        let required_m = if c1 {
            f64::INFINITY
        } else {
            sample_complexity_bound(&GuaranteeParams::new(epsilon_interior, xi, delta, d)?)
        };
        let c2 = match required_samples(required_m) {
            Some(req) => interior_count < req,
            None => true,
        };
        Ok(Self {
            sample_count,
            interior_count,
            p_hat: est.p_hat,
            z: est.z,
            epsilon_interior,
            required_m,
            c1,
            c2,
            normal_approx_valid: est.normal_approx_valid,
            confidence: 1.0 - xi,
        })
    }

    pub fn failed(&self) -> bool {
        self.c1 || self.c2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Fail,
    Trained,
    Infeasible,
}

impl TraceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceStatus::Fail => "fail",
            TraceStatus::Trained => "trained",
            TraceStatus::Infeasible => "infeasible",
        }
    }
}

/// One call of [`lbcd`] inside [`adaptive_lcd`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: u32,
    pub m: u64,
    pub delta: f64,
    pub seed: u64,
    pub status: TraceStatus,
    pub report: Option<GuaranteeReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub scene_id: String,
    pub seed: u64,
    pub m: u64,
    pub delta: f64,
    pub epsilon: f64,
    pub xi: f64,
    pub rng: String,
    pub mode: Mode,
    pub feature_cap: usize,
    pub trace: Vec<TraceEntry>,
    /// Free-form `key=value` notes (e.g. configuration overrides).
    pub notes: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedLcd {
    pub model: LinearModel,
    pub featuremap: FeatureMapParams,
    pub guarantee: GuaranteeReport,
    pub provenance: Provenance,
}

impl TrainedLcd {
    pub fn mode(&self) -> Mode {
        self.provenance.mode
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64, LcdError> {
        let phi = self.featuremap.phi(x)?;
        Ok(self.model.decision_value(&phi)?)
    }

    /// Forbidden iff `w·φ(x) + b ≥ 0`.
    pub fn classify(&self, x: &[f64]) -> Result<Label, LcdError> {
        self.decision_value(x).map(Label::from_decision)
    }

    /// Classifies many points with one feature buffer per worker.
    pub fn classify_many(&self, points: &[f64]) -> Result<Vec<Label>, LcdError> {
        let d = self.featuremap.d();
        if !points.len().is_multiple_of(d) {
            return Err(FeatureMapError::DimensionMismatch {
                expected: d,
                got: points.len() % d,
            }
            .into());
        }
        for chunk in points.chunks(d) {
            self.featuremap.cell_of(chunk)?;
        }
        let dim = self.featuremap.feature_dim();
        Ok(points
            .par_chunks(d)
            .map_init(
                || vec![0.0; dim],
                |buf, x| {
                    self.featuremap.phi_into(x, buf);
                    Label::from_decision(self.model.decision_value_unchecked(buf))
                },
            )
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InfeasibleReason {
    /// The requested `m`, or in the adaptive loop the sample bound at ε
    /// (a floor for any certified run at that δ), exceeds the budget.
    SampleBudget { required: f64, budget: u64 },
    FeatureCap { n: usize, d: usize, cap: usize },
    TrainingSize { entries: u128, cap: usize },
    IterationCap(u32),
    SampleOverflow,
}

impl fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfeasibleReason::SampleBudget { required, budget } => {
                write!(f, "needs at least {required:.6e} samples, budget is {budget}")
            }
            InfeasibleReason::FeatureCap { n, d, cap } => {
                write!(f, "feature dimension {n}^{d} exceeds the cap of {cap}")
            }
            InfeasibleReason::TrainingSize { entries, cap } => {
                write!(f, "training matrix of {entries} entries exceeds the cap of {cap}")
            }
            InfeasibleReason::IterationCap(cap) => write!(f, "no success within {cap} iterations"),
            InfeasibleReason::SampleOverflow => f.write_str("sample count overflowed"),
        }
    }
}

#[derive(Debug, Error)]
pub enum LcdError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible-at-this-scale: {reason}")]
    Infeasible {
        reason: InfeasibleReason,
        trace: Vec<TraceEntry>,
    },
    #[error("hard-margin training failed: {0}")]
    Separability(SvmError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    FeatureMap(#[from] FeatureMapError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Model(#[from] ModelFileError),
}

impl From<SvmError> for LcdError {
    fn from(e: SvmError) -> Self {
        LcdError::Separability(e)
    }
}

/// Result of one `(δ, m)` run.
#[derive(Debug, Clone)]
pub enum LbcdOutcome {
    Trained(Box<TrainedLcd>),
    Fail(GuaranteeReport),
}

/// Inputs of one `(δ, m)` run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbcdParams {
    pub epsilon: f64,
    pub xi: f64,
    pub delta: f64,
    pub m: u64,
    pub seed: u64,
}

fn infeasible(reason: InfeasibleReason) -> LcdError {
    LcdError::Infeasible {
        reason,
        trace: Vec::new(),
    }
}

fn validate(p: &LbcdParams, d: usize) -> Result<(), LcdError> {
    if !(p.epsilon > 0.0 && p.epsilon < 1.0) {
        return Err(LcdError::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {}",
            p.epsilon
        )));
    }
    if !(p.xi > 0.0 && p.xi < 1.0) {
        return Err(LcdError::InvalidParameter(format!("xi must lie in (0, 1), got {}", p.xi)));
    }
    let root_d = (d as f64).sqrt();
    if !(p.delta > 0.0 && p.delta < root_d) {
        return Err(LcdError::InvalidParameter(format!(
            "delta must lie in (0, {root_d}), got {}",
            p.delta
        )));
    }
    if p.m == 0 {
        return Err(LcdError::InvalidParameter("m must be at least 1".into()));
    }
    Ok(())
}

/// Interior samples (clearance `> δ`) of the seeded draw, with labels, in
/// draw order. One oracle call per sample.
pub fn interior_samples(
    scene: &SceneOracle,
    m: u64,
    seed: u64,
    delta: f64,
) -> Result<(Vec<f64>, Vec<Label>), SceneError> {
    let d = scene.dim();
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for chunk in SampleChunks::new(d, m, seed, SAMPLE_CHUNK)? {
        let results: Vec<(Label, f64)> = chunk
            .par_chunks(d)
            .map(|x| scene.label_clearance_unchecked(x))
            .collect();
        for (x, (label, cl)) in chunk.chunks(d).zip(results) {
            if cl > delta {
                coords.extend_from_slice(x);
                labels.push(label);
            }
        }
    }
    Ok((coords, labels))
}

/// One `(δ, m)` learning run.
pub fn lbcd(
    scene: &SceneOracle,
    params: &LbcdParams,
    config: &LbcdConfig,
) -> Result<LbcdOutcome, LcdError> {
    let d = scene.dim();
    validate(params, d)?;
    let featuremap = match FeatureMapParams::derive(d, params.delta, config.feature_cap) {
        Ok(f) => f,
        Err(FeatureMapError::CapExceeded { n, d, cap }) => {
            return Err(infeasible(InfeasibleReason::FeatureCap { n, d, cap }))
        }
        Err(e) => return Err(e.into()),
    };
    if params.m > config.sample_budget {
        return Err(infeasible(InfeasibleReason::SampleBudget {
            required: params.m as f64,
            budget: config.sample_budget,
        }));
    }

    let (coords, labels) = interior_samples(scene, params.m, params.seed, params.delta)?;
    let interior = labels.len() as u64;
    let report =
        GuaranteeReport::compute(params.epsilon, params.xi, params.delta, d, interior, params.m)?;
    log::info!(
        "lbcd: m={} delta={} interior={} p_hat={:.6} eps_int={:.6e} required_m={:.6e} c1={} c2={}",
        params.m,
        params.delta,
        interior,
        report.p_hat,
        report.epsilon_interior,
        report.required_m,
        report.c1,
        report.c2
    );
    if config.mode == Mode::Certified && report.failed() {
        return Ok(LbcdOutcome::Fail(report));
    }

    let dim = featuremap.feature_dim();
    let entries = interior as u128 * dim as u128;
    if entries > config.max_training_entries as u128 {
        return Err(infeasible(InfeasibleReason::TrainingSize {
            entries,
            cap: config.max_training_entries,
        }));
    }
    let mut features = vec![0.0; labels.len() * dim];
    features
        .par_chunks_mut(dim.max(1))
        .zip(coords.par_chunks(d))
        .for_each(|(out, x)| featuremap.phi_into(x, out));
    let mut data = TrainingSet::with_capacity(dim, labels.len());
    for (row, label) in features.chunks(dim).zip(&labels) {
        data.push_label(row, *label)?;
    }
    drop(features);
    let model = train_hard_svm(&data, &config.svm)?;
    log::info!(
        "lbcd: trained on {} samples, {} support vectors, margin {:.6e}",
        data.len(),
        model.diagnostics.support_vectors,
        model.diagnostics.margin
    );

    Ok(LbcdOutcome::Trained(Box::new(TrainedLcd {
        model,
        featuremap,
        guarantee: report,
        provenance: Provenance {
            scene_id: scene.id(),
            seed: params.seed,
            m: params.m,
            delta: params.delta,
            epsilon: params.epsilon,
            xi: params.xi,
            rng: RNG_ALGORITHM.to_string(),
            mode: config.mode,
            feature_cap: config.feature_cap,
            trace: Vec::new(),
            notes: Vec::new(),
        },
    })))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub m0: u64,
    /// Starting δ; `None` means `√d/4`.
    pub delta0: Option<f64>,
    pub iteration_cap: u32,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            m0: 1000,
            delta0: None,
            iteration_cap: 20,
        }
    }
}

/// Sample bound at ε itself. Since `ε_int ≤ ε` and the bound falls with
/// ε, no certified run at this δ can need fewer interior samples.
pub fn certified_sample_floor(epsilon: f64, xi: f64, delta: f64, d: usize) -> Result<f64, LcdError> {
    Ok(sample_complexity_bound(&GuaranteeParams::new(epsilon, xi, delta, d)?))
}

/// Seed of the `k`-th adaptive iteration; the first one uses `seed` as is.
pub fn iteration_seed(seed: u64, k: u32) -> u64 {
    if k == 0 {
        seed
    } else {
        derive_seed(seed, &format!("adaptive/{k}"))
    }
}

/// Repeats [`lbcd`] with `m ← 2m, δ ← δ/2` after every failure.
pub fn adaptive_lcd(
    scene: &SceneOracle,
    epsilon: f64,
    xi: f64,
    seed: u64,
    adaptive: &AdaptiveConfig,
    config: &LbcdConfig,
) -> Result<TrainedLcd, LcdError> {
    let d = scene.dim();
    let mut m = adaptive.m0;
    let mut delta = adaptive.delta0.unwrap_or((d as f64).sqrt() / 4.0);
    let mut trace = Vec::new();
    for k in 0..adaptive.iteration_cap {
        let run_seed = iteration_seed(seed, k);
        let params = LbcdParams {
            epsilon,
            xi,
            delta,
            m,
            seed: run_seed,
        };
        let entry = |status, report| TraceEntry {
            iteration: k,
            m,
            delta,
            seed: run_seed,
            status,
            report,
        };
        if config.mode == Mode::Certified {
            let floor = certified_sample_floor(epsilon, xi, delta, d)?;
            if !(floor <= config.sample_budget as f64) {
                trace.push(entry(TraceStatus::Infeasible, None));
                return Err(LcdError::Infeasible {
                    reason: InfeasibleReason::SampleBudget {
                        required: floor,
                        budget: config.sample_budget,
                    },
                    trace,
                });
            }
        }
        match lbcd(scene, &params, config) {
            Ok(LbcdOutcome::Trained(mut lcd)) => {
                trace.push(entry(TraceStatus::Trained, Some(lcd.guarantee.clone())));
                lcd.provenance.trace = trace;
                return Ok(*lcd);
            }
            Ok(LbcdOutcome::Fail(report)) => {
                log::info!(
                    "adaptive: iteration {k} failed (c1={}, c2={}); m -> 2m, delta -> delta/2",
                    report.c1,
                    report.c2
                );
                trace.push(entry(TraceStatus::Fail, Some(report)));
            }
            Err(LcdError::Infeasible { reason, .. }) => {
                trace.push(entry(TraceStatus::Infeasible, None));
                return Err(LcdError::Infeasible { reason, trace });
            }
            Err(e) => return Err(e),
        }
        m = match m.checked_mul(2) {
            Some(v) => v,
            None => {
                return Err(LcdError::Infeasible {
                    reason: InfeasibleReason::SampleOverflow,
                    trace,
                })
            }
        };
        delta /= 2.0;
    }
    Err(LcdError::Infeasible {
        reason: InfeasibleReason::IterationCap(adaptive.iteration_cap),
        trace,
    })
}
