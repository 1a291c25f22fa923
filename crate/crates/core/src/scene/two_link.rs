use std::f64::consts::PI;
use std::sync::Arc;

use super::edt::{feature_transform, NO_SITE};
use super::{Label, SceneError};

pub const DEFAULT_GRID_RESOLUTION: usize = 1024;

/// Planar two-link arm among disc obstacles.
///
/// Configuration `x ∈ [0,1]²` maps affinely to joint angles
/// `θ_j = −π + 2π·x_j` (`θ₂` relative to the first link). The seam at
/// `x_j ∈ {0, 1}` is not identified: the C-space metric stays Euclidean on
/// the square.
///
/// Labels are exact (forward kinematics against the obstacles). Clearance
/// is the distance from `x` to the nearest cell center of opposite label on
/// a `res × res` label grid, so it is within half a cell diagonal of the
/// grid-free value.
#[derive(Debug, Clone)]
pub struct TwoLink {
    lengths: [f64; 2],
    base: [f64; 2],
    obstacles: Vec<[f64; 3]>,
    grid: Arc<ClearanceGrid>,
}

#[derive(Debug)]
struct ClearanceGrid {
    res: usize,
    forbidden: Vec<bool>,
    nearest_forbidden: Vec<u32>,
    nearest_free: Vec<u32>,
}

impl TwoLink {
    pub fn new(
        lengths: [f64; 2],
        base: [f64; 2],
        obstacles: Vec<[f64; 3]>,
        resolution: usize,
    ) -> Result<Self, SceneError> {
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(SceneError::InvalidGeometry(
                "link lengths must be positive".into(),
            ));
        }
        if base.iter().any(|b| !b.is_finite()) {
            return Err(SceneError::InvalidGeometry("base must be finite".into()));
        }
        for (k, o) in obstacles.iter().enumerate() {
            if o.iter().any(|v| !v.is_finite()) || o[2] <= 0.0 {
                return Err(SceneError::InvalidGeometry(format!(
                    "obstacle {k} needs a finite center and positive radius"
                )));
            }
        }
        if !(2..=8192).contains(&resolution) {
            return Err(SceneError::InvalidGeometry(format!(
                "clearance grid resolution must lie in [2, 8192], got {resolution}"
            )));
        }
        let mut scene = Self {
            lengths,
            base,
            obstacles,
            grid: Arc::new(ClearanceGrid {
                res: 0,
                forbidden: Vec::new(),
                nearest_forbidden: Vec::new(),
                nearest_free: Vec::new(),
            }),
        };
        scene.grid = Arc::new(scene.build_grid(resolution));
        Ok(scene)
    }

    fn build_grid(&self, res: usize) -> ClearanceGrid {
        let h = 1.0 / res as f64;
        let forbidden: Vec<bool> = (0..res * res)
            .map(|i| {
                let x = [((i / res) as f64 + 0.5) * h, ((i % res) as f64 + 0.5) * h];
                self.collides(&x)
            })
            .collect();
        let free: Vec<bool> = forbidden.iter().map(|f| !f).collect();
        ClearanceGrid {
            res,
            nearest_forbidden: feature_transform(&forbidden, res),
            nearest_free: feature_transform(&free, res),
            forbidden,
        }
    }

    pub fn lengths(&self) -> [f64; 2] {
        self.lengths
    }

    pub fn base(&self) -> [f64; 2] {
        self.base
    }

    pub fn obstacles(&self) -> &[[f64; 3]] {
        &self.obstacles
    }

    pub fn resolution(&self) -> usize {
        self.grid.res
    }

    pub fn joint_angles(x: &[f64]) -> [f64; 2] {
        [-PI + 2.0 * PI * x[0], -PI + 2.0 * PI * x[1]]
    }

    /// Elbow and end-effector positions in the workspace.
    pub fn forward_kinematics(&self, x: &[f64]) -> ([f64; 2], [f64; 2]) {
        let [t1, t2] = Self::joint_angles(x);
        let elbow = [
            self.base[0] + self.lengths[0] * t1.cos(),
            self.base[1] + self.lengths[0] * t1.sin(),
        ];
        let tip = [
            elbow[0] + self.lengths[1] * (t1 + t2).cos(),
            elbow[1] + self.lengths[1] * (t1 + t2).sin(),
        ];
        (elbow, tip)
    }

    fn collides(&self, x: &[f64]) -> bool {
        let (elbow, tip) = self.forward_kinematics(x);
        self.obstacles.iter().any(|&[cx, cy, r]| {
            let c = [cx, cy];
            segment_distance_sq(self.base, elbow, c) <= r * r
                || segment_distance_sq(elbow, tip, c) <= r * r
        })
    }

    pub(super) fn label(&self, x: &[f64]) -> Label {
        if self.collides(x) {
            Label::Forbidden
        } else {
            Label::Free
        }
    }

    pub(super) fn label_clearance(&self, x: &[f64]) -> (Label, f64) {
        let label = self.label(x);
        let g = &*self.grid;
        let cell = |v: f64| ((v * g.res as f64) as usize).min(g.res - 1);
        let idx = cell(x[0]) * g.res + cell(x[1]);
        let site = match label {
            Label::Forbidden => g.nearest_free[idx],
            Label::Free => g.nearest_forbidden[idx],
        };
        if site == NO_SITE {
            return (label, f64::INFINITY);
        }
        let h = 1.0 / g.res as f64;
        let site = site as usize;
        let cx = ((site / g.res) as f64 + 0.5) * h;
        let cy = ((site % g.res) as f64 + 0.5) * h;
        (label, (x[0] - cx).hypot(x[1] - cy))
    }

    /// Fraction of grid cells whose center is forbidden.
    pub fn grid_forbidden_fraction(&self) -> f64 {
        let g = &*self.grid;
        g.forbidden.iter().filter(|&&f| f).count() as f64 / g.forbidden.len() as f64
    }
}

fn segment_distance_sq(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    d[0] * d[0] + d[1] * d[1]
}
