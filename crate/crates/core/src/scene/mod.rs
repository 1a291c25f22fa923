//! C-space scenes: exact collision oracles and clearance.
//!
//! The C-space is the unit hypercube `[0,1]^d` with the Euclidean metric
//! and no wraparound. Forbidden regions are closed, so boundary points are
//! labelled [`Label::Forbidden`]. `clearance(x)` is the distance from `x`
//! to the nearest configuration of the opposite label; it is exact for the
//! disc and box-union scenes and grid-approximated for the two-link arm.

mod boxes;
mod disc;
mod edt;
mod file;
mod two_link;

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::rng::{fnv1a64, seeded_rng};

pub use boxes::BoxUnion;
pub use disc::Disc;
pub use file::{load_scene, parse_scene};
pub use two_link::{TwoLink, DEFAULT_GRID_RESOLUTION};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("dimension mismatch: scene has d={expected}, configuration has {got} coordinates")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {index} = {value} lies outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("a configuration needs at least one coordinate")]
    EmptyConfiguration,
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("invalid scene geometry: {0}")]
    InvalidGeometry(String),
    #[error("scene file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported scene file header `{0}` (expected `SCENE v1 <kind> d=<d>`)")]
    Version(String),
    #[error("cannot parse configuration `{0}`: expected comma-separated decimals")]
    BadConfiguration(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Collision label: `+1` forbidden, `-1` free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Forbidden,
    Free,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Forbidden => 1.0,
            Label::Free => -1.0,
        }
    }

    /// `+1` for forbidden, `−1` for free.
    pub fn y(self) -> i8 {
        match self {
            Label::Forbidden => 1,
            Label::Free => -1,
        }
    }

    /// Sign rule with ties going to forbidden.
    pub fn from_decision(value: f64) -> Self {
        if value >= 0.0 {
            Label::Forbidden
        } else {
            Label::Free
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Label::Forbidden => Label::Free,
            Label::Free => Label::Forbidden,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Forbidden => "FORBIDDEN",
            Label::Free => "FREE",
        })
    }
}

/// A point of the C-space `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration(Vec<f64>);

impl Configuration {
    pub fn new(coords: Vec<f64>) -> Result<Self, SceneError> {
        if coords.is_empty() {
            return Err(SceneError::EmptyConfiguration);
        }
        check_unit_cube(&coords)?;
        Ok(Self(coords))
    }

    /// Parses `"c1,c2,..."`. Only `.` is accepted as the decimal separator.
    pub fn parse(text: &str) -> Result<Self, SceneError> {
        let coords = parse_decimal_list(text)
            .ok_or_else(|| SceneError::BadConfiguration(text.to_string()))?;
        Self::new(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Configuration {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Comma-separated decimals with a dot separator; `None` on any bad or
/// non-finite token.
pub fn parse_decimal_list(text: &str) -> Option<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            let plain = !tok.is_empty()
                && tok
                    .chars()
                    .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
            if plain {
                tok.parse::<f64>().ok().filter(|v| v.is_finite())
            } else {
                None
            }
        })
        .collect()
}

fn check_unit_cube(x: &[f64]) -> Result<(), SceneError> {
    for (index, &value) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(SceneError::OutOfRange { index, value });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    Disc,
    BoxUnion,
    TwoLink,
}

impl SceneKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SceneKind::Disc => "disc",
            SceneKind::BoxUnion => "box-union",
            SceneKind::TwoLink => "two-link",
        }
    }
}

/// Ground-truth collision checker `CD`: label plus clearance.
///
/// Immutable after construction; every query is read-only.
#[derive(Debug, Clone)]
pub enum SceneOracle {
    Disc(Disc),
    BoxUnion(BoxUnion),
    TwoLink(TwoLink),
}

impl SceneOracle {
    pub fn disc(center: Vec<f64>, radius: f64) -> Result<Self, SceneError> {
        Disc::new(center, radius).map(Self::Disc)
    }

    pub fn box_union(dim: usize, boxes: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self, SceneError> {
        BoxUnion::new(dim, boxes).map(Self::BoxUnion)
    }

    pub fn kind(&self) -> SceneKind {
        match self {
            SceneOracle::Disc(_) => SceneKind::Disc,
            SceneOracle::BoxUnion(_) => SceneKind::BoxUnion,
            SceneOracle::TwoLink(_) => SceneKind::TwoLink,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SceneOracle::Disc(s) => s.dim(),
            SceneOracle::BoxUnion(s) => s.dim(),
            SceneOracle::TwoLink(_) => 2,
        }
    }

    /// Validates dimension and range of a query point.
    pub fn check(&self, x: &[f64]) -> Result<(), SceneError> {
        if x.len() != self.dim() {
            return Err(SceneError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        check_unit_cube(x)
    }

    pub fn label(&self, x: &[f64]) -> Result<Label, SceneError> {
        self.check(x)?;
        Ok(self.label_unchecked(x))
    }

    pub fn clearance(&self, x: &[f64]) -> Result<f64, SceneError> {
        self.check(x)?;
        Ok(self.label_clearance_unchecked(x).1)
    }

    /// Label and clearance from a single oracle call.
    pub fn label_clearance(&self, x: &[f64]) -> Result<(Label, f64), SceneError> {
        self.check(x)?;
        Ok(self.label_clearance_unchecked(x))
    }

    pub(crate) fn label_unchecked(&self, x: &[f64]) -> Label {
        match self {
            SceneOracle::Disc(s) => s.label(x),
            SceneOracle::BoxUnion(s) => s.label(x),
            SceneOracle::TwoLink(s) => s.label(x),
        }
    }

    pub(crate) fn label_clearance_unchecked(&self, x: &[f64]) -> (Label, f64) {
        match self {
            SceneOracle::Disc(s) => s.label_clearance(x),
            SceneOracle::BoxUnion(s) => s.label_clearance(x),
            SceneOracle::TwoLink(s) => s.label_clearance(x),
        }
    }

    /// `m` i.i.d. uniform configurations, in draw order.
    pub fn sample_uniform(&self, m: usize, seed: u64) -> Result<Vec<Configuration>, SceneError> {
        sample_uniform(self.dim(), m, seed)
    }

    /// Canonical scene-file text for this scene.
    pub fn to_scene_file(&self) -> String {
        file::write_scene(self)
    }

    /// Stable identifier: kind plus the FNV-1a hash of the canonical text.
    pub fn id(&self) -> String {
        format!(
            "{}-{:016x}",
            self.kind().as_str(),
            fnv1a64(self.to_scene_file().as_bytes())
        )
    }
}

/// `m` i.i.d. uniform points of `[0,1]^dim`, deterministic in `seed`.
pub fn sample_uniform(dim: usize, m: usize, seed: u64) -> Result<Vec<Configuration>, SceneError> {
    if m == 0 {
        return Err(SceneError::EmptySample);
    }
    if dim == 0 {
        return Err(SceneError::EmptyConfiguration);
    }
    let mut rng = seeded_rng(seed);
    Ok((0..m)
        .map(|_| Configuration((0..dim).map(|_| rng.random::<f64>()).collect()))
        .collect())
}

/// The points of [`sample_uniform`] in order, as flat row-major chunks of
/// at most `chunk` points each.
pub struct SampleChunks {
    rng: rand_chacha::ChaCha8Rng,
    dim: usize,
    remaining: u64,
    chunk: usize,
}

impl SampleChunks {
    pub fn new(dim: usize, m: u64, seed: u64, chunk: usize) -> Result<Self, SceneError> {
        if m == 0 {
            return Err(SceneError::EmptySample);
        }
        if dim == 0 {
            return Err(SceneError::EmptyConfiguration);
        }
        Ok(Self {
            rng: seeded_rng(seed),
            dim,
            remaining: m,
            chunk: chunk.max(1),
        })
    }
}

impl Iterator for SampleChunks {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.remaining == 0 {
            return None;
        }
        let take = self.remaining.min(self.chunk as u64) as usize;
        self.remaining -= take as u64;
        Some((0..take * self.dim).map(|_| self.rng.random::<f64>()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc() -> SceneOracle {
        SceneOracle::disc(vec![0.5, 0.5], 0.25).unwrap()
    }

    #[test]
    fn disc_labels() {
        let s = disc();
        assert_eq!(s.label(&[0.5, 0.5]).unwrap(), Label::Forbidden);
        assert_eq!(s.label(&[0.0, 0.0]).unwrap(), Label::Free);
        // closed obstacle
        assert_eq!(s.label(&[0.75, 0.5]).unwrap(), Label::Forbidden);
    }

    #[test]
    fn disc_clearance_examples() {
        let s = disc();
        assert!((s.clearance(&[0.5, 0.5]).unwrap() - 0.25).abs() < 1e-15);
        assert!((s.clearance(&[0.9, 0.5]).unwrap() - 0.15).abs() < 1e-12);
        assert_eq!(s.clearance(&[0.75, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn query_validation() {
        let s = disc();
        assert!(matches!(
            s.label(&[0.5]),
            Err(SceneError::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(
            s.clearance(&[0.5, 1.5]),
            Err(SceneError::OutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_rejects_empty() {
        let s = disc();
        assert!(matches!(s.sample_uniform(0, 1), Err(SceneError::EmptySample)));
        let a = s.sample_uniform(50, 9).unwrap();
        let b = s.sample_uniform(50, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, s.sample_uniform(50, 10).unwrap());
        assert!(a.iter().all(|c| c.dim() == 2));
    }

    #[test]
    fn forbidden_fraction_matches_disc_area() {
        let s = disc();
        let pts = s.sample_uniform(100_000, 2024).unwrap();
        let forb = pts
            .iter()
            .filter(|c| s.label(c.coords()).unwrap() == Label::Forbidden)
            .count();
        let frac = forb as f64 / pts.len() as f64;
        let area = std::f64::consts::PI * 0.25 * 0.25;
        assert!((frac - area).abs() < 0.005, "fraction {frac} vs {area}");
    }

    #[test]
    fn configuration_parsing() {
        let c = Configuration::parse("0.25, 0.75").unwrap();
        assert_eq!(c.coords(), &[0.25, 0.75]);
        // dot is the only decimal separator: "0,25" is two coordinates
        assert!(matches!(
            Configuration::parse("0,25"),
            Err(SceneError::OutOfRange { .. })
        ));
        assert!(Configuration::parse("0.5;0.5").is_err());
        assert!(Configuration::parse("").is_err());
        assert!(Configuration::parse("nan,0.1").is_err());
    }

    #[test]
    fn chunks_follow_sample_order() {
        let all = sample_uniform(3, 10, 42).unwrap();
        let flat: Vec<f64> = SampleChunks::new(3, 10, 42, 4).unwrap().flatten().collect();
        let expected: Vec<f64> = all.iter().flat_map(|c| c.coords().to_vec()).collect();
        assert_eq!(flat, expected);
        let sizes: Vec<usize> = SampleChunks::new(3, 10, 42, 4).unwrap().map(|c| c.len()).collect();
        assert_eq!(sizes, vec![12, 12, 6]);
    }

    #[test]
    fn scene_id_is_stable() {
        assert_eq!(disc().id(), disc().id());
        let other = SceneOracle::disc(vec![0.5, 0.5], 0.2).unwrap();
        assert_ne!(disc().id(), other.id());
        assert!(disc().id().starts_with("disc-"));
    }
}
