//! Exhaustive maximal-margin search over candidate support sets.
//!
//! For every subset `S` of at most `dim + 1` points holding both labels,
//! the equality-constrained problem `y_i(w·x_i + b) = 1 (i ∈ S)`,
//! `w = Σ_S λ_i y_i x_i`, `Σ_S λ_i y_i = 0` is solved as a linear system.
//! Each solution that satisfies all constraints is a valid separator, and
//! the maximal-margin one is among them, so the smallest feasible `‖w‖`
//! gives the optimum.

use nalgebra::{DMatrix, DVector};

pub struct Separator {
    pub w: Vec<f64>,
    pub b: f64,
    pub margin: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn subsets(m: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<usize>, usize)> = vec![(Vec::new(), 0)];
    while let Some((cur, start)) = stack.pop() {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == max_size {
            continue;
        }
        for k in start..m {
            let mut next = cur.clone();
            next.push(k);
            stack.push((next, k + 1));
        }
    }
    out
}

pub fn max_margin(points: &[Vec<f64>], labels: &[i8]) -> Option<Separator> {
    let dim = points[0].len();
    let y: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
    let mut best: Option<Separator> = None;
    for s in subsets(points.len(), dim + 1) {
        let pos = s.iter().any(|&i| y[i] > 0.0);
        let neg = s.iter().any(|&i| y[i] < 0.0);
        if !(pos && neg) {
            continue;
        }
        let k = s.len();
        let mut a = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut rhs = DVector::<f64>::zeros(k + 1);
        for (r, &i) in s.iter().enumerate() {
            for (c, &j) in s.iter().enumerate() {
                a[(r, c)] = y[i] * y[j] * dot(&points[i], &points[j]);
            }
            a[(r, k)] = y[i];
            rhs[r] = 1.0;
            a[(k, r)] = y[i];
        }
        let Some(sol) = a.lu().solve(&rhs) else { continue };
        if sol.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let mut w = vec![0.0; dim];
        for (r, &i) in s.iter().enumerate() {
            for (wk, xk) in w.iter_mut().zip(&points[i]) {
                *wk += sol[r] * y[i] * xk;
            }
        }
        let b = sol[k];
        let feasible = points
            .iter()
            .zip(&y)
            .all(|(x, &yi)| yi * (dot(&w, x) + b) >= 1.0 - 1e-9);
        let norm = dot(&w, &w).sqrt();
        if feasible && norm > 0.0 && best.as_ref().is_none_or(|bst| 1.0 / norm > bst.margin) {
            best = Some(Separator {
                w,
                b,
                margin: 1.0 / norm,
            });
        }
    }
    best
}

/// Random instance with a gap of at least `gap` around a random hyperplane.
pub fn random_instance(
    rng: &mut impl rand::Rng,
    max_points: usize,
    max_dim: usize,
    gap: f64,
) -> (Vec<Vec<f64>>, Vec<i8>) {
    let dim = rng.random_range(1..=max_dim);
    let m = rng.random_range(2..=max_points);
    let normal: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let nn = dot(&normal, &normal).sqrt();
    let offset = (rng.random::<f64>() - 0.5) * nn;
    loop {
        let mut pts = Vec::with_capacity(m);
        let mut ys = Vec::with_capacity(m);
        while pts.len() < m {
            let x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let s = (dot(&normal, &x) + offset) / nn;
            if s.abs() < gap {
                continue;
            }
            ys.push(if s > 0.0 { 1 } else { -1 });
            pts.push(x);
        }
        if ys.contains(&1) && ys.contains(&-1) {
            return (pts, ys);
        }
    }
}
