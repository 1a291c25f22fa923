//! Standard-normal upper quantile by adaptive Simpson integration of the
//! density followed by bisection.

fn pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = pdf(lm);
    let frm = pdf(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    adaptive(a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `∫_0^z φ(t) dt`.
pub fn central_mass(z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let (fa, fm, fb) = (pdf(0.0), pdf(z / 2.0), pdf(z));
    adaptive(0.0, z, fa, fm, fb, simpson(0.0, z, fa, fm, fb), 1e-15, 50)
}

/// `z` with `P(Z > z) = ξ/2`, i.e. `∫_0^z φ = (1 − ξ)/2`.
pub fn upper_quantile(xi: f64) -> f64 {
    let target = 0.5 * (1.0 - xi);
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if central_mass(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}
