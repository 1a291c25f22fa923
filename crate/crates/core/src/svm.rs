//! Hard-margin linear SVM on explicit feature vectors.
//!
//! The hard margin is the `C → ∞` limit of the soft-margin dual
//!
//! ```text
//! min_α  ½ αᵀQα − Σ α_i    s.t.  0 ≤ α_i ≤ C,  Σ y_i α_i = 0,   Q_ij = y_i y_j x_i·x_j
//! ```
//!
//! solved with a large box `C` by sequential minimal optimisation using
//! second-order working-pair selection. Any multiplier stuck at `C`, any
//! training mistake or running out of iterations is reported as
//! non-separable data. Without a bias the equality constraint disappears
//! and single coordinates are updated instead of pairs.

use thiserror::Error;

use crate::scene::Label;

/// Curvature floor for degenerate pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonSeparableCause {
    /// A multiplier reached the box bound `C`.
    BoxBound,
    /// A training point is on the wrong side after convergence.
    TrainingError,
    /// The KKT gap was still above tolerance at the iteration cap.
    IterationCap,
}

#[derive(Debug, Error, PartialEq)]
pub enum SvmError {
    #[error("training set needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("training set holds a single class")]
    SingleClass,
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sample {0} has a non-finite feature")]
    NonFinite(usize),
    #[error("sample {index} has label {label}, expected -1 or +1")]
    InvalidLabel { index: usize, label: i8 },
    #[error("data not separable ({cause:?}); worst violating sample {worst_index}")]
    NonSeparable {
        cause: NonSeparableCause,
        worst_index: usize,
        iterations: u64,
    },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    /// Box bound standing in for `C = ∞`.
    pub c: f64,
    /// Stopping tolerance on the KKT gap.
    pub kkt_tol: f64,
    /// Cap on pair (or coordinate) updates.
    pub max_iterations: u64,
    /// Fit a bias `b`; `false` fixes `b = 0`.
    pub use_bias: bool,
    /// Kernel-column cache size in `f64` entries.
    pub cache_entries: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1e6,
            kkt_tol: 1e-6,
            max_iterations: 10_000_000,
            use_bias: true,
            cache_entries: 1 << 25,
        }
    }
}

impl SvmConfig {
    fn validate(&self) -> Result<(), SvmError> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(SvmError::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if !(self.kkt_tol.is_finite() && self.kkt_tol > 0.0) {
            return Err(SvmError::InvalidConfig(format!(
                "KKT tolerance must be positive, got {}",
                self.kkt_tol
            )));
        }
        if self.max_iterations == 0 {
            return Err(SvmError::InvalidConfig("iteration cap must be positive".into()));
        }
        Ok(())
    }
}

/// Feature vectors with ±1 labels, stored row-major.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<i8>,
}

impl TrainingSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, m: usize) -> Self {
        Self {
            dim,
            features: Vec::with_capacity(dim * m),
            labels: Vec::with_capacity(m),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: &[i8]) -> Result<Self, SvmError> {
        if rows.len() != labels.len() {
            return Err(SvmError::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let dim = rows.first().map_or(0, Vec::len);
        let mut set = Self::with_capacity(dim, rows.len());
        for (row, &y) in rows.iter().zip(labels) {
            set.push(row, y)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, features: &[f64], y: i8) -> Result<(), SvmError> {
        if features.len() != self.dim {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim,
                got: features.len(),
            });
        }
        let index = self.labels.len();
        if y != 1 && y != -1 {
            return Err(SvmError::InvalidLabel { index, label: y });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFinite(index));
        }
        self.features.extend_from_slice(features);
        self.labels.push(y);
        Ok(())
    }

    pub fn push_label(&mut self, features: &[f64], label: Label) -> Result<(), SvmError> {
        self.push(features, label.y())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics {
    pub iterations: u64,
    /// Final KKT gap `m(α) − M(α)` (largest projected gradient without bias).
    pub kkt_gap: f64,
    /// Largest `|y_i f(x_i) − 1|` over support vectors together with
    /// `max(0, 1 − y_i f(x_i))` over all samples.
    pub max_kkt_violation: f64,
    /// `min_i y_i f(x_i)`.
    pub min_functional_margin: f64,
    /// `1/‖w‖`.
    pub margin: f64,
    pub support_vectors: usize,
    pub c: f64,
    pub kkt_tol: f64,
    pub max_iterations: u64,
    pub use_bias: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub diagnostics: SolverDiagnostics,
}

impl LinearModel {
    /// `w·features + b`.
    pub fn decision_value(&self, features: &[f64]) -> Result<f64, SvmError> {
        if features.len() != self.w.len() {
            return Err(SvmError::DimensionMismatch {
                expected: self.w.len(),
                got: features.len(),
            });
        }
        Ok(self.decision_value_unchecked(features))
    }

    pub fn decision_value_unchecked(&self, features: &[f64]) -> f64 {
        dot(&self.w, features) + self.b
    }

    /// Forbidden iff the decision value is `≥ 0`.
    pub fn classify(&self, features: &[f64]) -> Result<Label, SvmError> {
        self.decision_value(features).map(Label::from_decision)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LRU cache of Gram-matrix columns `K_{·t} = x_·x_t`.
struct ColumnCache<'a> {
    data: &'a TrainingSet,
    slab: Vec<f64>,
    slot_of: Vec<usize>,
    owner: Vec<usize>,
    stamp: Vec<u64>,
    clock: u64,
}

impl<'a> ColumnCache<'a> {
    const EMPTY: usize = usize::MAX;

    fn new(data: &'a TrainingSet, entries: usize) -> Self {
        let m = data.len();
        let slots = (entries / m.max(1)).clamp(2, m.max(2));
        Self {
            data,
            slab: vec![0.0; slots * m],
            slot_of: vec![Self::EMPTY; m],
            owner: vec![Self::EMPTY; slots],
            stamp: vec![0; slots],
            clock: 0,
        }
    }

    fn load(&mut self, t: usize, keep: usize) {
        self.clock += 1;
        let m = self.data.len();
        if self.slot_of[t] != Self::EMPTY {
            self.stamp[self.slot_of[t]] = self.clock;
            return;
        }
        let keep_slot = if keep < m { self.slot_of[keep] } else { Self::EMPTY };
        let slot = (0..self.owner.len())
            .filter(|&s| s != keep_slot)
            .min_by_key(|&s| (self.owner[s] != Self::EMPTY, self.stamp[s]))
            .expect("cache holds at least two slots");
        if self.owner[slot] != Self::EMPTY {
            self.slot_of[self.owner[slot]] = Self::EMPTY;
        }
        self.owner[slot] = t;
        self.slot_of[t] = slot;
        self.stamp[slot] = self.clock;
        let xt = self.data.row(t);
        let col = &mut self.slab[slot * m..(slot + 1) * m];
        for (k, v) in col.iter_mut().enumerate() {
            *v = dot(self.data.row(k), xt);
        }
    }

    fn column(&self, t: usize) -> &[f64] {
        let m = self.data.len();
        let slot = self.slot_of[t];
        &self.slab[slot * m..(slot + 1) * m]
    }
}

struct Solver<'a> {
    data: &'a TrainingSet,
    y: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    diag: Vec<f64>,
    cache: ColumnCache<'a>,
    c: f64,
}

impl<'a> Solver<'a> {
    fn new(data: &'a TrainingSet, config: &SvmConfig) -> Self {
        let m = data.len();
        Self {
            data,
            y: data.labels.iter().map(|&v| f64::from(v)).collect(),
            alpha: vec![0.0; m],
            grad: vec![-1.0; m],
            diag: (0..m).map(|i| dot(data.row(i), data.row(i))).collect(),
            cache: ColumnCache::new(data, config.cache_entries),
            c: config.c,
        }
    }

    fn in_up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.c) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn in_low(&self, t: usize) -> bool {
        (self.y[t] < 0.0 && self.alpha[t] < self.c) || (self.y[t] > 0.0 && self.alpha[t] > 0.0)
    }

    /// `(m(α), M(α))` over the up/low index sets.
    fn extremes(&self) -> (f64, usize, f64) {
        let mut gmax = f64::NEG_INFINITY;
        let mut imax = usize::MAX;
        let mut gmin = f64::INFINITY;
        for t in 0..self.y.len() {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) && v > gmax {
                gmax = v;
                imax = t;
            }
            if self.in_low(t) && v < gmin {
                gmin = v;
            }
        }
        (gmax, imax, gmin)
    }

    fn select_pair(&mut self, tol: f64) -> Option<(usize, usize, f64)> {
        let (gmax, i, gmin) = self.extremes();
        if i == usize::MAX || gmax - gmin < tol {
            return None;
        }
        self.cache.load(i, usize::MAX);
        let ki = self.cache.column(i);
        let mut best = f64::INFINITY;
        let mut j = usize::MAX;
        for t in 0..self.y.len() {
            if !self.in_low(t) {
                continue;
            }
            let b = gmax + self.y[t] * self.grad[t];
            if b > 0.0 {
                let a = self.diag[i] + self.diag[t] - 2.0 * ki[t];
                let a = if a > 0.0 { a } else { TAU };
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        (j != usize::MAX).then_some((i, j, gmax - gmin))
    }

    fn update_pair(&mut self, i: usize, j: usize) {
        self.cache.load(i, usize::MAX);
        self.cache.load(j, i);
        let c = self.c;
        let (yi, yj) = (self.y[i], self.y[j]);
        let kij = self.cache.column(i)[j];
        let old_i = self.alpha[i];
        let old_j = self.alpha[j];
        let (mut ai, mut aj) = (old_i, old_j);
        if yi != yj {
            let quad = self.diag[i] + self.diag[j] + 2.0 * yi * yj * kij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = self.diag[i] + self.diag[j] - 2.0 * yi * yj * kij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let di = (ai - old_i) * yi;
        let dj = (aj - old_j) * yj;
        let ki = self.cache.column(i);
        let kj = self.cache.column(j);
        for (t, g) in self.grad.iter_mut().enumerate() {
            *g += self.y[t] * (ki[t] * di + kj[t] * dj);
        }
    }

    /// Largest projected-gradient magnitude and its index (no-bias mode).
    fn worst_coordinate(&self) -> (f64, usize) {
        let mut worst = 0.0;
        let mut idx = usize::MAX;
        for t in 0..self.y.len() {
            let g = self.grad[t];
            let pg = if self.alpha[t] <= 0.0 {
                g.min(0.0)
            } else if self.alpha[t] >= self.c {
                g.max(0.0)
            } else {
                g
            };
            if pg.abs() > worst {
                worst = pg.abs();
                idx = t;
            }
        }
        (worst, idx)
    }

    fn update_coordinate(&mut self, i: usize) {
        self.cache.load(i, usize::MAX);
        let q = if self.diag[i] > 0.0 { self.diag[i] } else { TAU };
        let old = self.alpha[i];
        let new = (old - self.grad[i] / q).clamp(0.0, self.c);
        self.alpha[i] = new;
        let d = (new - old) * self.y[i];
        let ki = self.cache.column(i);
        for (t, g) in self.grad.iter_mut().enumerate() {
            *g += self.y[t] * ki[t] * d;
        }
    }

    fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.data.dim()];
        for (t, &a) in self.alpha.iter().enumerate() {
            if a != 0.0 {
                let s = a * self.y[t];
                for (wk, xk) in w.iter_mut().zip(self.data.row(t)) {
                    *wk += s * xk;
                }
            }
        }
        w
    }

    /// Replaces the incrementally updated gradient by `y_t w·x_t − 1`.
    fn refresh_gradient(&mut self, w: &[f64]) {
        for t in 0..self.y.len() {
            self.grad[t] = self.y[t] * dot(w, self.data.row(t)) - 1.0;
        }
    }

    fn bias(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        for t in 0..self.y.len() {
            let yg = self.y[t] * self.grad[t];
            if self.alpha[t] > 0.0 && self.alpha[t] < self.c {
                sum += yg;
                count += 1;
            } else if (self.alpha[t] >= self.c) == (self.y[t] < 0.0) {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        }
        let rho = if count > 0 {
            sum / count as f64
        } else {
            (ub + lb) / 2.0
        };
        -rho
    }
}

/// Trains the maximal-margin separator of `data`.
pub fn train_hard_svm(data: &TrainingSet, config: &SvmConfig) -> Result<LinearModel, SvmError> {
    config.validate()?;
    let m = data.len();
    if m < 2 {
        return Err(SvmError::TooFewSamples(m));
    }
    let pos = data.labels.iter().any(|&y| y > 0);
    let neg = data.labels.iter().any(|&y| y < 0);
    if !(pos && neg) {
        return Err(SvmError::SingleClass);
    }

    let mut solver = Solver::new(data, config);
    let mut iterations = 0u64;
    let mut gap;
    let mut w;
    loop {
        if config.use_bias {
            while iterations < config.max_iterations {
                match solver.select_pair(config.kkt_tol) {
                    Some((i, j, _)) => {
                        solver.update_pair(i, j);
                        iterations += 1;
                    }
                    None => break,
                }
            }
        } else {
            while iterations < config.max_iterations {
                let (worst, i) = solver.worst_coordinate();
                if worst < config.kkt_tol {
                    break;
                }
                solver.update_coordinate(i);
                iterations += 1;
            }
        }
        w = solver.weights();
        solver.refresh_gradient(&w);
        gap = if config.use_bias {
            let (gmax, _, gmin) = solver.extremes();
            (gmax - gmin).max(0.0)
        } else {
            solver.worst_coordinate().0
        };
        if gap < config.kkt_tol || iterations >= config.max_iterations {
            break;
        }
        log::debug!("svm: gradient drift left gap {gap:e}, resuming");
    }
    let b = if config.use_bias { solver.bias() } else { 0.0 };

    let mut min_margin = f64::INFINITY;
    let mut worst_index = 0;
    let mut max_violation: f64 = 0.0;
    for t in 0..m {
        let yf = solver.y[t] * (dot(&w, data.row(t)) + b);
        if yf < min_margin {
            min_margin = yf;
            worst_index = t;
        }
        max_violation = max_violation.max(1.0 - yf);
        if solver.alpha[t] > 0.0 {
            max_violation = max_violation.max((yf - 1.0).abs());
        }
    }

    let fail = |cause| SvmError::NonSeparable {
        cause,
        worst_index,
        iterations,
    };
    if let Some(t) = (0..m).find(|&t| solver.alpha[t] >= config.c) {
        log::debug!("svm: multiplier {t} at the box bound");
        return Err(fail(NonSeparableCause::BoxBound));
    }
    let mistake = (0..m).any(|t| {
        let label = Label::from_decision(dot(&w, data.row(t)) + b);
        label.y() != data.labels[t]
    });
    if mistake {
        return Err(fail(NonSeparableCause::TrainingError));
    }
    if gap >= config.kkt_tol {
        return Err(fail(NonSeparableCause::IterationCap));
    }

    let norm = dot(&w, &w).sqrt();
    let diagnostics = SolverDiagnostics {
        iterations,
        kkt_gap: gap,
        max_kkt_violation: max_violation,
        min_functional_margin: min_margin,
        margin: 1.0 / norm,
        support_vectors: solver.alpha.iter().filter(|&&a| a > 0.0).count(),
        c: config.c,
        kkt_tol: config.kkt_tol,
        max_iterations: config.max_iterations,
        use_bias: config.use_bias,
    };
    Ok(LinearModel { w, b, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn set(points: &[(f64, i8)]) -> TrainingSet {
        let rows: Vec<Vec<f64>> = points.iter().map(|p| vec![p.0]).collect();
        let labels: Vec<i8> = points.iter().map(|p| p.1).collect();
        TrainingSet::from_rows(&rows, &labels).unwrap()
    }

    #[test]
    fn symmetric_pair() {
        let model = train_hard_svm(&set(&[(-1.0, -1), (1.0, 1)]), &SvmConfig::default()).unwrap();
        assert!((model.w[0] - 1.0).abs() < 1e-9);
        assert!(model.b.abs() < 1e-9);
        assert!((model.diagnostics.margin - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shifted_pair() {
        let model = train_hard_svm(&set(&[(0.0, -1), (2.0, 1)]), &SvmConfig::default()).unwrap();
        assert!((model.w[0] - 1.0).abs() < 1e-9);
        assert!((model.b + 1.0).abs() < 1e-9);
    }

    #[test]
    fn identical_points_are_not_separable() {
        let err = train_hard_svm(&set(&[(0.0, -1), (0.0, 1)]), &SvmConfig::default()).unwrap_err();
        assert!(matches!(err, SvmError::NonSeparable { .. }), "{err:?}");
    }

    #[test]
    fn xor_is_not_separable() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let err = train_hard_svm(
            &TrainingSet::from_rows(&rows, &[1, 1, -1, -1]).unwrap(),
            &SvmConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SvmError::NonSeparable { .. }));
    }

    #[test]
    fn input_errors() {
        let cfg = SvmConfig::default();
        assert_eq!(
            train_hard_svm(&set(&[(0.0, 1), (1.0, 1)]), &cfg),
            Err(SvmError::SingleClass)
        );
        assert_eq!(train_hard_svm(&set(&[(0.0, 1)]), &cfg), Err(SvmError::TooFewSamples(1)));
        let mut s = TrainingSet::new(2);
        assert!(s.push(&[0.0], 1).is_err());
        assert!(s.push(&[0.0, f64::NAN], 1).is_err());
        assert!(s.push(&[0.0, 0.0], 0).is_err());
    }

    #[test]
    fn decision_examples() {
        let model = train_hard_svm(&set(&[(0.0, -1), (2.0, 1)]), &SvmConfig::default()).unwrap();
        let tie = LinearModel {
            w: vec![1.0],
            b: -1.0,
            diagnostics: model.diagnostics.clone(),
        };
        assert_eq!(tie.decision_value(&[1.0]).unwrap(), 0.0);
        assert_eq!(tie.classify(&[1.0]).unwrap(), Label::Forbidden);
        let free = LinearModel { b: 0.0, ..tie };
        assert_eq!(free.decision_value(&[-0.5]).unwrap(), -0.5);
        assert_eq!(free.classify(&[-0.5]).unwrap(), Label::Free);
        assert!(free.decision_value(&[1.0, 2.0]).is_err());
        let sv = model.decision_value(&[2.0]).unwrap();
        assert!((sv - 1.0).abs() < 1e-6);
    }

    #[test]
    fn homogeneous_mode() {
        let cfg = SvmConfig {
            use_bias: false,
            ..SvmConfig::default()
        };
        let model = train_hard_svm(&set(&[(-2.0, -1), (1.0, 1), (3.0, 1)]), &cfg).unwrap();
        assert_eq!(model.b, 0.0);
        assert!((model.w[0] - 1.0).abs() < 1e-6);
        // with b = 0 a point at the origin can never be separated
        assert!(train_hard_svm(&set(&[(0.0, -1), (1.0, 1)]), &cfg).is_err());
    }

    fn random_separable(rng: &mut impl Rng, m: usize, dim: usize) -> TrainingSet {
        loop {
            let normal: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
            let mut set = TrainingSet::new(dim);
            while set.len() < m {
                let x: Vec<f64> = (0..dim).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
                let s = dot(&normal, &x) + 0.1;
                if s.abs() >= 0.05 {
                    set.push(&x, if s > 0.0 { 1 } else { -1 }).unwrap();
                }
            }
            if set.labels().contains(&1) && set.labels().contains(&-1) {
                return set;
            }
        }
    }

    #[test]
    fn random_instances_satisfy_kkt() {
        let mut rng = crate::rng::seeded_rng(7);
        for _ in 0..50 {
            let m = rng.random_range(4..40);
            let dim = rng.random_range(1..6);
            let data = random_separable(&mut rng, m, dim);
            let model = train_hard_svm(&data, &SvmConfig::default()).unwrap();
            assert!(model.diagnostics.min_functional_margin >= 1.0 - 1e-6);
            assert!(model.diagnostics.max_kkt_violation <= 1e-6);
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = crate::rng::seeded_rng(3);
        let data = random_separable(&mut rng, 60, 4);
        let a = train_hard_svm(&data, &SvmConfig::default()).unwrap();
        let b = train_hard_svm(&data, &SvmConfig::default()).unwrap();
        assert_eq!(a.w.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   b.w.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(a.b.to_bits(), b.b.to_bits());
    }

    #[test]
    fn small_cache_matches_large_cache() {
        let mut rng = crate::rng::seeded_rng(11);
        let data = random_separable(&mut rng, 80, 3);
        let big = train_hard_svm(&data, &SvmConfig::default()).unwrap();
        let small = train_hard_svm(
            &data,
            &SvmConfig {
                cache_entries: 3 * 80,
                ..SvmConfig::default()
            },
        )
        .unwrap();
        assert_eq!(big, small);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn scaling_features(seed in any::<u64>(), c in 0.1f64..10.0) {
            let mut rng = crate::rng::seeded_rng(seed);
            let data = random_separable(&mut rng, 20, 2);
            let mut scaled = TrainingSet::new(2);
            for i in 0..data.len() {
                let row: Vec<f64> = data.row(i).iter().map(|v| v * c).collect();
                scaled.push(&row, data.labels()[i]).unwrap();
            }
            let cfg = SvmConfig { kkt_tol: 1e-9, ..SvmConfig::default() };
            let a = train_hard_svm(&data, &cfg).unwrap();
            let b = train_hard_svm(&scaled, &cfg).unwrap();
            let wn = dot(&a.w, &a.w).sqrt();
            for k in 0..2 {
                prop_assert!((b.w[k] * c - a.w[k]).abs() <= 1e-5 * wn);
            }
            prop_assert!((a.b - b.b).abs() <= 1e-5 * (1.0 + a.b.abs()));
            for i in 0..data.len() {
                let la = a.classify(data.row(i)).unwrap();
                let lb = b.classify(scaled.row(i)).unwrap();
                prop_assert_eq!(la, lb);
            }
        }
    }
}
