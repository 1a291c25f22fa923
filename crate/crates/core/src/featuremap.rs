//! Grid cells, the Gaussian feature map and the reference separator.
//!
//! The C-space `[0,1]^d` is cut into `n^d` half-open cells of side `1/n`
//! (the top face is closed so `x_j = 1` falls in cell `n`). Every cell
//! center contributes one feature `exp(−‖center − x‖² / σ²)`. Features
//! are listed in row-major cell order, last axis fastest.
//!
//! With `n = ⌈√d/δ⌉` no cell can hold both a free and a forbidden point of
//! clearance `≥ δ`, which is what makes the ±1/0 cell labelling of
//! [`build_reference_separator`] well defined.

use rayon::prelude::*;
use thiserror::Error;

use crate::scene::{Label, SceneError, SceneOracle};

/// Largest feature dimension `n^d` accepted unless configured otherwise.
pub const DEFAULT_FEATURE_CAP: usize = 1_000_000;

/// Probes per cell used by [`build_reference_separator`] by default.
pub const DEFAULT_PROBES_PER_CELL: usize = 9;

#[derive(Debug, Error)]
pub enum FeatureMapError {
    #[error("dimension mismatch: feature map has d={expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {index} = {value} lies outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("delta must lie in (0, sqrt(d)] = (0, {max}], got {delta}")]
    InvalidDelta { delta: f64, max: f64 },
    #[error("feature dimension {n}^{d} exceeds the cap of {cap} entries")]
    CapExceeded { n: usize, d: usize, cap: usize },
    #[error("invalid feature map parameters: {0}")]
    InvalidParams(String),
    #[error("cell index {0:?} is outside [1, n]^d")]
    IndexOutOfRange(Vec<usize>),
    #[error("cell {0:?} holds both free and forbidden probes of clearance >= delta")]
    MixedCell(Vec<usize>),
    #[error("feature map was not derived from a clearance delta")]
    MissingDelta,
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// One-based cell index `⟨i_1, …, i_d⟩ ∈ [n]^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellIndex(pub Vec<usize>);

/// `(d, n, σ)` of the feature map, plus the δ it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapParams {
    d: usize,
    n: usize,
    sigma: f64,
    delta: Option<f64>,
}

impl FeatureMapParams {
    pub fn new(d: usize, n: usize, sigma: f64, cap: usize) -> Result<Self, FeatureMapError> {
        if d == 0 || n == 0 {
            return Err(FeatureMapError::InvalidParams(format!(
                "need d >= 1 and n >= 1, got d={d}, n={n}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(FeatureMapError::InvalidParams(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        match u32::try_from(d).ok().and_then(|e| n.checked_pow(e)) {
            Some(dim) if dim <= cap => Ok(Self {
                d,
                n,
                sigma,
                delta: None,
            }),
            _ => Err(FeatureMapError::CapExceeded { n, d, cap }),
        }
    }

    /// `n = ⌈√d/δ⌉`, `σ² = 2δ²/ln(9n^d)`.
    ///
    /// σ uses the given δ, not the (smaller) δ implied by the rounded n.
    pub fn derive(d: usize, delta: f64, cap: usize) -> Result<Self, FeatureMapError> {
        let root_d = (d as f64).sqrt();
        if d == 0 || !(delta > 0.0 && delta <= root_d) {
            return Err(FeatureMapError::InvalidDelta { delta, max: root_d });
        }
        let n_real = (root_d / delta).ceil();
        if n_real > usize::MAX as f64 {
            return Err(FeatureMapError::CapExceeded { n: usize::MAX, d, cap });
        }
        let n = n_real as usize;
        let log_term = 9f64.ln() + d as f64 * (n as f64).ln();
        let sigma = (2.0 * delta * delta / log_term).sqrt();
        let mut params = Self::new(d, n, sigma, cap)?;
        params.delta = Some(delta);
        Ok(params)
    }

    /// Rebuilds params from persisted fields without re-deriving σ.
    pub fn from_parts(
        d: usize,
        n: usize,
        sigma: f64,
        delta: Option<f64>,
        cap: usize,
    ) -> Result<Self, FeatureMapError> {
        let mut params = Self::new(d, n, sigma, cap)?;
        params.delta = delta;
        Ok(params)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    /// `n^d`, the length of a feature vector.
    pub fn feature_dim(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    fn check(&self, x: &[f64]) -> Result<(), FeatureMapError> {
        if x.len() != self.d {
            return Err(FeatureMapError::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        for (index, &value) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(FeatureMapError::OutOfRange { index, value });
            }
        }
        Ok(())
    }

    fn axis_cell(&self, v: f64) -> usize {
        ((v * self.n as f64).floor() as usize).min(self.n - 1)
    }

    pub fn cell_of(&self, x: &[f64]) -> Result<CellIndex, FeatureMapError> {
        self.check(x)?;
        Ok(CellIndex(x.iter().map(|&v| self.axis_cell(v) + 1).collect()))
    }

    pub fn cell_center(&self, i: &CellIndex) -> Result<Vec<f64>, FeatureMapError> {
        if i.0.len() != self.d || i.0.iter().any(|&k| k == 0 || k > self.n) {
            return Err(FeatureMapError::IndexOutOfRange(i.0.clone()));
        }
        Ok(i.0
            .iter()
            .map(|&k| (k as f64 - 0.5) / self.n as f64)
            .collect())
    }

    /// Position of a cell in the feature vector.
    pub fn linear_index(&self, i: &CellIndex) -> usize {
        i.0.iter().fold(0, |acc, &k| acc * self.n + (k - 1))
    }

    pub fn cell_from_linear(&self, mut idx: usize) -> CellIndex {
        let mut out = vec![0; self.d];
        for slot in out.iter_mut().rev() {
            *slot = idx % self.n + 1;
            idx /= self.n;
        }
        CellIndex(out)
    }

    pub fn phi(&self, x: &[f64]) -> Result<Vec<f64>, FeatureMapError> {
        self.check(x)?;
        let mut out = vec![0.0; self.feature_dim()];
        self.phi_into(x, &mut out);
        Ok(out)
    }

    /// Writes φ(x) into `out` (length `n^d`). `x` must already be valid.
    ///
    /// The Gaussian factorises over axes, so the vector is the tensor
    /// product of `d` per-axis responses. Entries for centers far from `x`
    /// can underflow to `0.0` when σ is small.
    pub fn phi_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.feature_dim());
        let n = self.n;
        let inv_s2 = 1.0 / (self.sigma * self.sigma);
        let mut axis = vec![0.0; n];
        out[0] = 1.0;
        let mut len = 1;
        for &xj in x {
            for (k, a) in axis.iter_mut().enumerate() {
                let diff = (k as f64 + 0.5) / n as f64 - xj;
                *a = (-diff * diff * inv_s2).exp();
            }
            for idx in (0..len).rev() {
                let base = out[idx];
                for k in (0..n).rev() {
                    out[idx * n + k] = base * axis[k];
                }
            }
            len *= n;
        }
    }

    /// `γ* = 8 / (9^{9/8} · n^{5d/8})`.
    pub fn margin_lower_bound(&self) -> f64 {
        (8f64.ln() - 1.125 * 9f64.ln() - 0.625 * self.d as f64 * (self.n as f64).ln()).exp()
    }
}

/// Cell labelling `g ∈ {−1, 0, +1}^{n^d}` in feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSeparator {
    alpha: Vec<i8>,
    norm: f64,
}

impl ReferenceSeparator {
    pub fn alpha(&self) -> &[i8] {
        &self.alpha
    }

    /// `‖α‖₂` before normalisation.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }

    /// `α̂·φ(x)` with `α̂ = α/‖α‖` (zero for an all-zero labelling).
    pub fn normalized_score(&self, features: &[f64]) -> f64 {
        if self.norm == 0.0 {
            return 0.0;
        }
        let dot: f64 = self
            .alpha
            .iter()
            .zip(features)
            .map(|(&a, &f)| f64::from(a) * f)
            .sum();
        dot / self.norm
    }
}

/// Probe offsets inside the unit cell, center first.
///
/// An odd perfect power `probes = s^d` (`s ≥ 3`) gives the centered `s^d`
/// lattice, which contains the center. Any other count gives the center
/// followed by `probes − 1` Halton points.
pub fn cell_probe_offsets(d: usize, probes: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.5; d]];
    if probes <= 1 {
        return out;
    }
    if let Some(s) = odd_root(probes, d) {
        let mut idx = vec![0usize; d];
        for _ in 0..probes {
            let p: Vec<f64> = idx.iter().map(|&k| (k as f64 + 0.5) / s as f64).collect();
            if p.iter().any(|&v| v != 0.5) {
                out.push(p);
            }
            for j in (0..d).rev() {
                idx[j] += 1;
                if idx[j] < s {
                    break;
                }
                idx[j] = 0;
            }
        }
        return out;
    }
    let primes = first_primes(d);
    for k in 1..probes as u64 {
        out.push(primes.iter().map(|&b| radical_inverse(k, b)).collect());
    }
    out
}

fn odd_root(count: usize, d: usize) -> Option<usize> {
    let guess = (count as f64).powf(1.0 / d as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1)
        .find(|&s| s >= 3 && s % 2 == 1 && s.checked_pow(d as u32) == Some(count))
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= candidate).all(|&p| !candidate.is_multiple_of(p)) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Labels every cell `+1` (a probe in the forbidden δ-interior), `−1` (a
/// probe in the free δ-interior) or `0` (only δ-boundary probes).
///
/// Interior membership is `clearance ≥ δ` with δ taken from `params`.
pub fn build_reference_separator(
    scene: &SceneOracle,
    params: &FeatureMapParams,
    probes_per_cell: usize,
) -> Result<ReferenceSeparator, FeatureMapError> {
    if scene.dim() != params.d {
        return Err(FeatureMapError::DimensionMismatch {
            expected: params.d,
            got: scene.dim(),
        });
    }
    let delta = params.delta.ok_or(FeatureMapError::MissingDelta)?;
    let offsets = cell_probe_offsets(params.d, probes_per_cell.max(1));
    let h = 1.0 / params.n as f64;

    let alpha = (0..params.feature_dim())
        .into_par_iter()
        .map(|idx| {
            let cell = params.cell_from_linear(idx);
            let mut forb = false;
            let mut free = false;
            let mut probe = vec![0.0; params.d];
            for off in &offsets {
                for (j, p) in probe.iter_mut().enumerate() {
                    *p = ((cell.0[j] - 1) as f64 + off[j]) * h;
                }
                let (label, cl) = scene.label_clearance_unchecked(&probe);
                if cl >= delta {
                    match label {
                        Label::Forbidden => forb = true,
                        Label::Free => free = true,
                    }
                }
            }
            match (forb, free) {
                (true, true) => Err(FeatureMapError::MixedCell(cell.0)),
                (true, false) => Ok(1i8),
                (false, true) => Ok(-1i8),
                (false, false) => Ok(0i8),
            }
        })
        .collect::<Result<Vec<i8>, _>>()?;

    let norm = (alpha.iter().filter(|&&a| a != 0).count() as f64).sqrt();
    Ok(ReferenceSeparator { alpha, norm })
}
