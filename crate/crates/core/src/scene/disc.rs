use super::{Label, SceneError};

/// A closed ball obstacle lying inside the unit cube.
///
/// Containment in `[0,1]^d` keeps `|‖x − c‖ − r|` the exact clearance: the
/// nearest opposite-label point always lies on the sphere inside the cube.
#[derive(Debug, Clone, PartialEq)]
pub struct Disc {
    center: Vec<f64>,
    radius: f64,
}

impl Disc {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self, SceneError> {
        if center.is_empty() {
            return Err(SceneError::InvalidGeometry("disc center is empty".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(SceneError::InvalidGeometry(format!(
                "disc radius must be positive, got {radius}"
            )));
        }
        for (j, &c) in center.iter().enumerate() {
            if !(c.is_finite() && c - radius >= 0.0 && c + radius <= 1.0) {
                return Err(SceneError::InvalidGeometry(format!(
                    "disc must lie inside the unit cube (axis {j}: center {c}, radius {radius})"
                )));
            }
        }
        Ok(Self { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn distance_to_center(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub(super) fn label(&self, x: &[f64]) -> Label {
        if self.distance_to_center(x) <= self.radius {
            Label::Forbidden
        } else {
            Label::Free
        }
    }

    pub(super) fn label_clearance(&self, x: &[f64]) -> (Label, f64) {
        let dist = self.distance_to_center(x);
        let label = if dist <= self.radius {
            Label::Forbidden
        } else {
            Label::Free
        };
        (label, (dist - self.radius).abs())
    }
}
