//! Monte-Carlo estimates and parameter sweeps over a scene.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::featuremap::{build_reference_separator, FeatureMapError, FeatureMapParams};
use crate::lcd::{LcdError, TrainedLcd};
use crate::rng::derive_seed;
use crate::scene::{Label, SampleChunks, SceneError, SceneOracle};
use crate::stats::{
    binomial_upper_bound, interior_error, sample_complexity_bound, GuaranteeParams, StatsError,
};

/// Confidence parameter of the half-widths attached to Monte-Carlo fractions.
pub const CI_XI: f64 = 0.05;

pub const DEFAULT_MC_SAMPLES: u64 = 100_000;

const CHUNK: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    FeatureMap(#[from] FeatureMapError),
    #[error(transparent)]
    Lcd(#[from] LcdError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write output: {0}")]
    Csv(#[from] csv::Error),
    #[error("no δ-interior point found in {draws} draws")]
    EmptyInterior { draws: u64 },
}

/// A Monte-Carlo fraction with its normal-approximation half-width at
/// confidence `1 − CI_XI`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fraction {
    pub value: f64,
    pub half_width: f64,
    pub hits: u64,
    pub samples: u64,
}

impl Fraction {
    fn new(hits: u64, samples: u64) -> Self {
        let value = hits as f64 / samples as f64;
        let upper = binomial_upper_bound(value, samples, CI_XI)
            .expect("fraction in [0,1] with samples ≥ 1")
            .upper;
        Self {
            value,
            half_width: upper - value,
            hits,
            samples,
        }
    }
}

/// Sorted clearances of one seeded uniform draw.
///
/// Every `p(δ)` read off a profile uses the same points, so the estimate is
/// exactly weakly decreasing in δ.
#[derive(Debug, Clone)]
pub struct ClearanceProfile {
    clearances: Vec<f64>,
    seed: u64,
    dim: usize,
}

impl ClearanceProfile {
    pub fn sample(scene: &SceneOracle, samples: u64, seed: u64) -> Result<Self, ExperimentError> {
        let d = scene.dim();
        let mut clearances = Vec::with_capacity(samples.min(1 << 24) as usize);
        for chunk in SampleChunks::new(d, samples, seed, CHUNK)? {
            let part: Vec<f64> = chunk
                .par_chunks(d)
                .map(|x| scene.label_clearance_unchecked(x).1)
                .collect();
            clearances.extend(part);
        }
        clearances.sort_by(f64::total_cmp);
        Ok(Self {
            clearances,
            seed,
            dim: d,
        })
    }

    pub fn samples(&self) -> u64 {
        self.clearances.len() as u64
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of samples with clearance `≥ δ`.
    pub fn interior_count(&self, delta: f64) -> u64 {
        let below = self.clearances.partition_point(|&c| c < delta);
        (self.clearances.len() - below) as u64
    }

    pub fn fraction(&self, delta: f64) -> Fraction {
        Fraction::new(self.interior_count(delta), self.samples())
    }
}

/// Fraction of uniform samples with clearance `≥ δ`.
pub fn estimate_interior_fraction(
    scene: &SceneOracle,
    delta: f64,
    samples: u64,
    seed: u64,
) -> Result<Fraction, ExperimentError> {
    if samples == 0 {
        return Err(ExperimentError::InvalidParameter(
            "samples must be at least 1".into(),
        ));
    }
    Ok(ClearanceProfile::sample(scene, samples, seed)?.fraction(delta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleBound {
    Samples(f64),
    Infeasible,
}

impl SampleBound {
    pub fn value(self) -> Option<f64> {
        match self {
            SampleBound::Samples(m) => Some(m),
            SampleBound::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub delta: f64,
    pub p_hat: f64,
    pub eps_interior: f64,
    pub m_bound: SampleBound,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams {
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub xi: f64,
    pub samples: u64,
    pub seed: u64,
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
pub fn delta_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// One row per `(ε, δ)`: ε in the given order, δ ascending within each ε.
///
/// All rows share a single clearance profile drawn with `seed`.
pub fn sweep(scene: &SceneOracle, params: &SweepParams) -> Result<Vec<SweepRow>, ExperimentError> {
    let d = scene.dim();
    let root_d = (d as f64).sqrt();
    if params.deltas.is_empty() {
        return Err(ExperimentError::InvalidParameter("empty delta grid".into()));
    }
    if params.deltas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::InvalidParameter(
            "delta grid must be strictly increasing".into(),
        ));
    }
    if params.deltas.iter().any(|&x| !(x > 0.0 && x < root_d)) {
        return Err(ExperimentError::InvalidParameter(format!(
            "delta grid must lie in (0, {root_d})"
        )));
    }
    if params.samples == 0 {
        return Err(ExperimentError::InvalidParameter(
            "samples must be at least 1".into(),
        ));
    }
    for &eps in &params.epsilons {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(ExperimentError::InvalidParameter(format!(
                "epsilon must lie in (0, 1), got {eps}"
            )));
        }
    }
    crate::stats::z_critical(params.xi)?;

    let profile = ClearanceProfile::sample(scene, params.samples, params.seed)?;
    let mut rows = Vec::with_capacity(params.epsilons.len() * params.deltas.len());
    for &eps in &params.epsilons {
        let block: Vec<SweepRow> = params
            .deltas
            .par_iter()
            .map(|&delta| sweep_row(&profile, eps, delta, params.xi))
            .collect::<Result<_, _>>()?;
        rows.extend(block);
    }
    Ok(rows)
}

fn sweep_row(
    profile: &ClearanceProfile,
    epsilon: f64,
    delta: f64,
    xi: f64,
) -> Result<SweepRow, ExperimentError> {
    let interior = profile.interior_count(delta);
    let total = profile.samples();
    let eps_interior = interior_error(epsilon, xi, interior, total)?;
    let m_bound = if eps_interior > 0.0 {
        let bound = GuaranteeParams::new(eps_interior.min(1.0), xi, delta, profile.dim())
            .map(|p| sample_complexity_bound(&p))?;
        if bound.is_finite() {
            SampleBound::Samples(bound)
        } else {
            SampleBound::Infeasible
        }
    } else {
        SampleBound::Infeasible
    };
    Ok(SweepRow {
        epsilon,
        delta,
        p_hat: interior as f64 / total as f64,
        eps_interior,
        m_bound,
        samples: total,
        seed: profile.seed(),
    })
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes rows as CSV with 17 significant digits per real.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "epsilon",
        "delta",
        "p_hat",
        "eps_interior",
        "m_bound",
        "samples",
        "seed",
    ])?;
    for r in rows {
        let m = match r.m_bound {
            SampleBound::Samples(m) => num(m),
            SampleBound::Infeasible => "infeasible".to_string(),
        };
        w.write_record([
            num(r.epsilon),
            num(r.delta),
            num(r.p_hat),
            num(r.eps_interior),
            m,
            r.samples.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<(), ExperimentError> {
    let file = std::fs::File::create(path)?;
    write_sweep_csv(rows, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMaxEstimate {
    /// Largest bracketed δ with `p̂(δ) ≥ 1 − ε`.
    pub delta_max: f64,
    /// First δ found with `p̂(δ) < 1 − ε` (√d when degenerate).
    pub upper: f64,
    /// `p̂` at `delta_max`, with its half-width.
    pub p_at_estimate: Fraction,
    /// Every δ satisfies the constraint, e.g. a single-class scene.
    pub degenerate: bool,
}

/// Bisection over `(0, √d)` for the largest δ with `p̂(δ) ≥ 1 − ε`.
///
/// The bracket only ever shrinks, so a tighter tolerance refines the
/// bracket of a looser one.
pub fn estimate_delta_max(
    scene: &SceneOracle,
    epsilon: f64,
    samples: u64,
    seed: u64,
    tolerance: f64,
) -> Result<DeltaMaxEstimate, ExperimentError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(ExperimentError::InvalidParameter(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if !(tolerance > 0.0) {
        return Err(ExperimentError::InvalidParameter(
            "tolerance must be positive".into(),
        ));
    }
    if samples == 0 {
        return Err(ExperimentError::InvalidParameter(
            "samples must be at least 1".into(),
        ));
    }
    let profile = ClearanceProfile::sample(scene, samples, seed)?;
    let target = 1.0 - epsilon;
    let ok = |delta: f64| profile.fraction(delta).value >= target;
    let root_d = (scene.dim() as f64).sqrt();
    if ok(root_d) {
        return Ok(DeltaMaxEstimate {
            delta_max: root_d,
            upper: root_d,
            p_at_estimate: profile.fraction(root_d),
            degenerate: true,
        });
    }
    let (mut lo, mut hi) = (0.0, root_d);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DeltaMaxEstimate {
        delta_max: lo,
        upper: hi,
        p_at_estimate: profile.fraction(lo),
        degenerate: false,
    })
}

/// Held-out 0-1 loss of a trained model, split at the model's δ.
///
/// "Positive" means predicted forbidden.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub test_count: u64,
    pub delta: f64,
    pub xi: f64,
    pub seed: u64,
    pub interior_count: u64,
    pub boundary_count: u64,
    pub errors_interior: u64,
    pub errors_boundary: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub loss: f64,
    pub loss_interior: f64,
    pub loss_boundary: f64,
    pub loss_bound: f64,
    pub loss_interior_bound: f64,
    pub loss_boundary_bound: f64,
}

impl EvalReport {
    pub fn errors(&self) -> u64 {
        self.errors_interior + self.errors_boundary
    }

    /// Checks `n·L = n_int·L_int + n_bnd·L_bnd` on the integer counts it
    /// is built from, and that the losses are those count ratios.
    pub fn decomposition_holds(&self) -> bool {
        let ratio = |e: u64, n: u64| if n == 0 { 0.0 } else { e as f64 / n as f64 };
        self.interior_count + self.boundary_count == self.test_count
            && self.false_positives + self.false_negatives == self.errors()
            && self.loss == ratio(self.errors(), self.test_count)
            && self.loss_interior == ratio(self.errors_interior, self.interior_count)
            && self.loss_boundary == ratio(self.errors_boundary, self.boundary_count)
    }

    /// `key=value` lines in a fixed order.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("test_count", self.test_count.to_string()),
            ("delta", num(self.delta)),
            ("xi", num(self.xi)),
            ("seed", self.seed.to_string()),
            ("interior_count", self.interior_count.to_string()),
            ("boundary_count", self.boundary_count.to_string()),
            ("errors", self.errors().to_string()),
            ("errors_interior", self.errors_interior.to_string()),
            ("errors_boundary", self.errors_boundary.to_string()),
            ("false_positives", self.false_positives.to_string()),
            ("false_negatives", self.false_negatives.to_string()),
            ("loss", num(self.loss)),
            ("loss_interior", num(self.loss_interior)),
            ("loss_boundary", num(self.loss_boundary)),
            ("loss_bound", num(self.loss_bound)),
            ("loss_interior_bound", num(self.loss_interior_bound)),
            ("loss_boundary_bound", num(self.loss_boundary_bound)),
            ("decomposition_ok", self.decomposition_holds().to_string()),
        ]
    }
}

/// Seed of the evaluation stream for a model trained with `training_seed`.
pub fn evaluation_seed(training_seed: u64, seed: u64) -> u64 {
    derive_seed(derive_seed(training_seed, "eval"), &seed.to_string())
}

/// Draws `test_count` fresh points and scores the model against exact labels.
pub fn evaluate(
    lcd: &TrainedLcd,
    scene: &SceneOracle,
    test_count: u64,
    seed: u64,
) -> Result<EvalReport, ExperimentError> {
    let d = scene.dim();
    if d != lcd.featuremap.d() {
        return Err(ExperimentError::InvalidParameter(format!(
            "scene has dimension {d}, model has {}",
            lcd.featuremap.d()
        )));
    }
    if test_count == 0 {
        return Err(ExperimentError::InvalidParameter(
            "test_count must be at least 1".into(),
        ));
    }
    let delta = lcd.provenance.delta;
    let xi = lcd.provenance.xi;
    let eval_seed = evaluation_seed(lcd.provenance.seed, seed);

    let (mut n_int, mut e_int, mut e_bnd, mut fp, mut fne) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for chunk in SampleChunks::new(d, test_count, eval_seed, CHUNK)? {
        let predicted = lcd.classify_many(&chunk)?;
        let truth: Vec<(Label, f64)> = chunk
            .par_chunks(d)
            .map(|x| scene.label_clearance_unchecked(x))
            .collect();
        for (p, (t, cl)) in predicted.into_iter().zip(truth) {
            let interior = cl >= delta;
            n_int += u64::from(interior);
            if p != t {
                if interior {
                    e_int += 1;
                } else {
                    e_bnd += 1;
                }
                if p == Label::Forbidden {
                    fp += 1;
                } else {
                    fne += 1;
                }
            }
        }
    }
    let n_bnd = test_count - n_int;
    let ratio = |e: u64, n: u64| if n == 0 { 0.0 } else { e as f64 / n as f64 };
    let bound = |e: u64, n: u64| -> Result<f64, StatsError> {
        if n == 0 {
            return Ok(1.0);
        }
        Ok(binomial_upper_bound(ratio(e, n), n, xi)?.upper)
    };
    Ok(EvalReport {
        test_count,
        delta,
        xi,
        seed: eval_seed,
        interior_count: n_int,
        boundary_count: n_bnd,
        errors_interior: e_int,
        errors_boundary: e_bnd,
        false_positives: fp,
        false_negatives: fne,
        loss: ratio(e_int + e_bnd, test_count),
        loss_interior: ratio(e_int, n_int),
        loss_boundary: ratio(e_bnd, n_bnd),
        loss_bound: bound(e_int + e_bnd, test_count)?,
        loss_interior_bound: bound(e_int, n_int)?,
        loss_boundary_bound: bound(e_bnd, n_bnd)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub n: usize,
    pub gamma_star: f64,
    pub min_margin: f64,
    /// Point attaining `min_margin`.
    pub argmin: Vec<f64>,
    pub interior_points: u64,
    pub draws: u64,
    pub violations: u64,
}

impl MarginReport {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.min_margin >= self.gamma_star
    }
}

/// Builds the reference separator for `δ` and records `y·(α̂·φ(x))` on
/// `points` uniformly drawn δ-interior configurations (clearance `≥ δ`).
pub fn verify_margin(
    scene: &SceneOracle,
    delta: f64,
    points: u64,
    seed: u64,
    feature_cap: usize,
) -> Result<MarginReport, ExperimentError> {
    if points == 0 {
        return Err(ExperimentError::InvalidParameter(
            "at least one point is needed".into(),
        ));
    }
    let d = scene.dim();
    let params = FeatureMapParams::derive(d, delta, feature_cap)?;
    let sep = build_reference_separator(
        scene,
        &params,
        crate::featuremap::DEFAULT_PROBES_PER_CELL,
    )?;
    let gamma_star = params.margin_lower_bound();
    let dim = params.feature_dim();
    let max_draws = points.saturating_mul(10_000);

    let mut report = MarginReport {
        n: params.n(),
        gamma_star,
        min_margin: f64::INFINITY,
        argmin: Vec::new(),
        interior_points: 0,
        draws: 0,
        violations: 0,
    };
    for chunk in SampleChunks::new(d, max_draws, seed, CHUNK)? {
        let scored: Vec<Option<f64>> = chunk
            .par_chunks(d)
            .map_init(
                || vec![0.0; dim],
                |buf, x| {
                    let (label, cl) = scene.label_clearance_unchecked(x);
                    (cl >= delta).then(|| {
                        params.phi_into(x, buf);
                        f64::from(label.y()) * sep.normalized_score(buf)
                    })
                },
            )
            .collect();
        for (x, s) in chunk.chunks(d).zip(scored) {
            report.draws += 1;
            let Some(s) = s else { continue };
            report.interior_points += 1;
            if s < gamma_star {
                report.violations += 1;
            }
            if s < report.min_margin {
                report.min_margin = s;
                report.argmin = x.to_vec();
            }
            if report.interior_points == points {
                return Ok(report);
            }
        }
    }
    if report.interior_points == 0 {
        return Err(ExperimentError::EmptyInterior {
            draws: report.draws,
        });
    }
    Ok(report)
}
