//! One-dimensional minimization of convex objectives.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search on `[lo, hi]`; returns the best point seen.
/// Ties go to the smaller abscissa.
pub(crate) fn golden(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut best = better((lo, f(lo)), (hi, f(hi)));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    best = better(best, better((x1, f1), (x2, f2)));
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
            best = better(best, (x1, f1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
            best = better(best, (x2, f2));
        }
    }
    best
}

fn better(p: (f64, f64), q: (f64, f64)) -> (f64, f64) {
    if q.1 < p.1 || (q.1 == p.1 && q.0 < p.0) {
        q
    } else {
        p
    }
}

/// Index of the smallest value, ties to the lowest index.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Minimizes a convex `f` starting from `x0`, growing a bracket of initial
/// half-width `scale` until it encloses the minimum, then refining to `tol`.
pub(crate) fn minimize_convex(f: &impl Fn(f64) -> f64, x0: f64, scale: f64, tol: f64) -> (f64, f64) {
    let mut width = scale.abs().max(tol);
    let f0 = f(x0);
    let mut lo = x0 - width;
    let mut hi = x0 + width;
    for _ in 0..200 {
        let grows_left = f(lo) >= f0;
        let grows_right = f(hi) >= f0;
        if grows_left && grows_right {
            break;
        }
        width *= 2.0;
        if !grows_left {
            lo = x0 - width;
        }
        if !grows_right {
            hi = x0 + width;
        }
    }
    golden(f, lo, hi, tol)
}
