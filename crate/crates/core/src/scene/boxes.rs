use super::{Label, SceneError};

/// Union of closed axis-aligned boxes, clipped to the unit cube.
///
/// Clearance is exact: all box faces split each axis into intervals, and
/// the product cells of that decomposition are wholly forbidden or wholly
/// free. The distance to the opposite label is the distance to the
/// nearest opposite cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxUnion {
    dim: usize,
    boxes: Vec<AaBox>,
    free_cells: Vec<AaBox>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AaBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AaBox {
    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }

    fn distance_sq(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&lo, &hi))| {
                let gap = if v < lo {
                    lo - v
                } else if v > hi {
                    v - hi
                } else {
                    0.0
                };
                gap * gap
            })
            .sum()
    }
}

const MAX_CELLS: usize = 1 << 20;

impl BoxUnion {
    pub fn new(dim: usize, boxes: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self, SceneError> {
        if dim == 0 {
            return Err(SceneError::InvalidGeometry("dimension must be at least 1".into()));
        }
        let mut clipped = Vec::with_capacity(boxes.len());
        for (k, (lo, hi)) in boxes.into_iter().enumerate() {
            if lo.len() != dim || hi.len() != dim {
                return Err(SceneError::InvalidGeometry(format!(
                    "box {k} needs {dim} lower and {dim} upper bounds"
                )));
            }
            let lo: Vec<f64> = lo.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            let hi: Vec<f64> = hi.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
                return Err(SceneError::InvalidGeometry(format!(
                    "box {k} is empty inside the unit cube"
                )));
            }
            clipped.push(AaBox { lo, hi });
        }

        let breaks: Vec<Vec<f64>> = (0..dim)
            .map(|j| {
                let mut b: Vec<f64> = vec![0.0, 1.0];
                for bx in &clipped {
                    b.push(bx.lo[j]);
                    b.push(bx.hi[j]);
                }
                b.sort_by(f64::total_cmp);
                b.dedup();
                b
            })
            .collect();
        let total: usize = breaks.iter().map(|b| b.len() - 1).product();
        if total > MAX_CELLS {
            return Err(SceneError::InvalidGeometry(format!(
                "box decomposition needs {total} cells (limit {MAX_CELLS})"
            )));
        }

        let mut free_cells = Vec::new();
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let lo: Vec<f64> = (0..dim).map(|j| breaks[j][idx[j]]).collect();
            let hi: Vec<f64> = (0..dim).map(|j| breaks[j][idx[j] + 1]).collect();
            let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
            if !clipped.iter().any(|b| b.contains(&mid)) {
                free_cells.push(AaBox { lo, hi });
            }
            for j in (0..dim).rev() {
                idx[j] += 1;
                if idx[j] < breaks[j].len() - 1 {
                    break;
                }
                idx[j] = 0;
            }
        }

        Ok(Self {
            dim,
            boxes: clipped,
            free_cells,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[AaBox] {
        &self.boxes
    }

    pub(super) fn label(&self, x: &[f64]) -> Label {
        if self.boxes.iter().any(|b| b.contains(x)) {
            Label::Forbidden
        } else {
            Label::Free
        }
    }

    pub(super) fn label_clearance(&self, x: &[f64]) -> (Label, f64) {
        let label = self.label(x);
        let opposite = match label {
            Label::Forbidden => &self.free_cells,
            Label::Free => &self.boxes,
        };
        let d2 = opposite
            .iter()
            .map(|b| b.distance_sq(x))
            .fold(f64::INFINITY, f64::min);
        (label, d2.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_boxes() -> BoxUnion {
        BoxUnion::new(
            2,
            vec![
                (vec![0.2, 0.2], vec![0.5, 0.4]),
                (vec![0.4, 0.3], vec![0.6, 0.8]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn labels_and_exact_clearance() {
        let s = two_boxes();
        assert_eq!(s.label(&[0.3, 0.3]), Label::Forbidden);
        assert_eq!(s.label(&[0.1, 0.1]), Label::Free);
        // free point: distance to nearest box corner (0.2, 0.2)
        let (_, c) = s.label_clearance(&[0.1, 0.1]);
        assert!((c - (0.02f64).sqrt()).abs() < 1e-12);
        // inside the overlap: nearest free point across x = 0.6 or y = 0.4 ...
        let (l, c) = s.label_clearance(&[0.45, 0.35]);
        assert_eq!(l, Label::Forbidden);
        // free region below y=0.2 is 0.15 away, x>0.6 is 0.15 away, x<0.2 is 0.25 away,
        // the notch at x<0.4,y>0.4 is at distance hypot(0.05, 0.05)
        assert!((c - (0.005f64).sqrt()).abs() < 1e-12, "{c}");
    }

    #[test]
    fn boundary_is_forbidden_with_zero_clearance() {
        let s = two_boxes();
        assert_eq!(s.label_clearance(&[0.2, 0.3]), (Label::Forbidden, 0.0));
    }

    #[test]
    fn cube_covering_box_has_no_free_space() {
        let s = BoxUnion::new(1, vec![(vec![-1.0], vec![2.0])]).unwrap();
        assert_eq!(s.label_clearance(&[0.3]), (Label::Forbidden, f64::INFINITY));
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(BoxUnion::new(2, vec![(vec![0.5, 0.5], vec![0.5, 0.7])]).is_err());
        assert!(BoxUnion::new(2, vec![(vec![1.5, 0.1], vec![2.0, 0.7])]).is_err());
        assert!(BoxUnion::new(2, vec![(vec![0.1], vec![0.7])]).is_err());
    }
}
