//! Exact Euclidean feature transform on a square 2-D grid.
//!
//! Separable lower-envelope construction (Felzenszwalb–Huttenlocher) that
//! keeps, for every cell, the index of its nearest site instead of only
//! the distance.

pub(super) const NO_SITE: u32 = u32::MAX;

/// Nearest-site index for every cell of a `res × res` grid (row-major,
/// second axis fastest). `NO_SITE` when the grid holds no site at all.
pub(super) fn feature_transform(is_site: &[bool], res: usize) -> Vec<u32> {
    debug_assert_eq!(is_site.len(), res * res);

    // Pass 1: nearest site along the second axis, per row.
    let mut row_site = vec![NO_SITE; res * res];
    for r in 0..res {
        let row = &is_site[r * res..(r + 1) * res];
        let out = &mut row_site[r * res..(r + 1) * res];
        let mut last: Option<usize> = None;
        for c in 0..res {
            if row[c] {
                last = Some(c);
            }
            if let Some(l) = last {
                out[c] = l as u32;
            }
        }
        let mut next: Option<usize> = None;
        for c in (0..res).rev() {
            if row[c] {
                next = Some(c);
            }
            if let Some(n) = next {
                let better = out[c] == NO_SITE || n - c < c - out[c] as usize;
                if better {
                    out[c] = n as u32;
                }
            }
        }
    }

    // Pass 2: lower envelope of parabolas along the first axis, per column.
    let mut nearest = vec![NO_SITE; res * res];
    let mut v = vec![0usize; res];
    let mut z = vec![0f64; res + 1];
    let mut g = vec![0f64; res];
    for c in 0..res {
        for r in 0..res {
            let s = row_site[r * res + c];
            g[r] = if s == NO_SITE {
                f64::INFINITY
            } else {
                let d = s as f64 - c as f64;
                d * d
            };
        }
        let mut k: isize = -1;
        for q in 0..res {
            if !g[q].is_finite() {
                continue;
            }
            loop {
                if k < 0 {
                    k = 0;
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                let p = v[k as usize];
                let s = ((g[q] + (q * q) as f64) - (g[p] + (p * p) as f64))
                    / (2.0 * (q as f64 - p as f64));
                if s <= z[k as usize] {
                    k -= 1;
                } else {
                    k += 1;
                    v[k as usize] = q;
                    z[k as usize] = s;
                    z[k as usize + 1] = f64::INFINITY;
                    break;
                }
            }
        }
        if k < 0 {
            continue;
        }
        let mut j = 0usize;
        for q in 0..res {
            while z[j + 1] < q as f64 {
                j += 1;
            }
            let p = v[j];
            nearest[q * res + c] = (p * res) as u32 + row_site[p * res + c];
        }
    }
    nearest
}
