//! Sup-norm recovery of the nearest family member and the bound verdicts.
//!
//! For fixed `a` the best `phi` is the per-sum-group midrange of
//! `f - a * (x^alpha + y^alpha + z^alpha)`, so the minimax problem reduces to
//! a convex one-dimensional objective in `a`: the largest group half-range.

use serde::Serialize;

use crate::constants::{bound_for, BoundSpec};
use crate::error::{Error, Result};
use crate::map_collect;
use crate::model::{AlphaCase, Box3, Interpolation, Regime, SolutionFamily, SumFunction, TripleFn};
use crate::residuals::{measure_eps, EpsPair};
use crate::search::{argmin, golden, minimize_convex};

/// Samples sharing one value of `x + y + z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumGroup {
    pub key: f64,
    pub members: Vec<usize>,
}

/// Groups sample indices by their coordinate sum, matched to `knots`.
/// Only nonempty groups are returned, in increasing key order.
pub fn bucket_by_sum(samples: &[[f64; 3]], knots: &[f64]) -> Result<Vec<SumGroup>> {
    if knots.is_empty() {
        return Err(Error::usage("sum grouping needs at least one knot"));
    }
    let spacing = knots
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let tol = if spacing.is_finite() { 1e-9 * spacing } else { 1e-9 * knots[0].abs().max(1.0) };
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); knots.len()];
    for (idx, p) in samples.iter().enumerate() {
        let s = p[0] + p[1] + p[2];
        let k = knots.partition_point(|&kn| kn < s);
        let nearest = [k.checked_sub(1), (k < knots.len()).then_some(k)]
            .into_iter()
            .flatten()
            .min_by(|&i, &j| (knots[i] - s).abs().total_cmp(&(knots[j] - s).abs()))
            .expect("knots are nonempty");
        if (knots[nearest] - s).abs() > tol {
            return Err(Error::usage(format!(
                "sample ({}, {}, {}) has sum {s} off the knot lattice",
                p[0], p[1], p[2]
            )));
        }
        members[nearest].push(idx);
    }
    Ok(knots
        .iter()
        .zip(members)
        .filter(|(_, m)| !m.is_empty())
        .map(|(&key, members)| SumGroup { key, members })
        .collect())
}

/// Per-group midrange and half-range of the residual values.
pub fn phi_midrange(groups: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut mid = Vec::with_capacity(groups.len());
    let mut half = Vec::with_capacity(groups.len());
    for g in groups {
        let (lo, hi) = min_max(g).ok_or_else(|| Error::usage("empty sum group"))?;
        mid.push(0.5 * (lo + hi));
        half.push(0.5 * (hi - lo));
    }
    Ok((mid, half))
}

fn min_max(v: &[f64]) -> Option<(f64, f64)> {
    let first = *v.first()?;
    Some(v.iter().fold((first, first), |(lo, hi), &x| (lo.min(x), hi.max(x))))
}

/// Range of the outer search over `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchRange {
    pub lo: f64,
    pub hi: f64,
    /// Coarse grid points before bracketed refinement.
    pub coarse: usize,
    /// Final bracket width.
    pub tol: f64,
}

impl Default for SearchRange {
    fn default() -> Self {
        Self {
            lo: -1000.0,
            hi: 1000.0,
            coarse: 401,
            tol: 1e-12,
        }
    }
}

impl SearchRange {
    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo >= self.hi {
            return Err(Error::usage(format!(
                "search range needs lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.coarse < 3 || !(self.tol > 0.0) {
            return Err(Error::usage("search needs >= 3 coarse points and a positive tolerance"));
        }
        Ok(())
    }
}

/// Best family member over a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyFit {
    pub best_a: f64,
    pub phi: SumFunction,
    /// Achieved `sup |f - (a * power_sum + phi(sum))|` over the lattice.
    pub sup_error: f64,
    pub worst_point: [f64; 3],
}

impl FamilyFit {
    pub fn family(&self, alpha: f64) -> Result<SolutionFamily> {
        SolutionFamily::new(self.best_a, alpha, self.phi.clone())
    }
}

/// Lattice samples with their sum group, value and power sum.
struct Samples {
    points: Vec<[f64; 3]>,
    group: Vec<usize>,
    value: Vec<f64>,
    power: Vec<f64>,
    keys: Vec<f64>,
}

impl Samples {
    fn collect<F: TripleFn + Sync + ?Sized>(f: &F, alpha: f64, b: &Box3) -> Result<Self> {
        let g = b.grid();
        let points = b.points();
        let values = map_collect(&points, |&[x, y, z]| f.eval3(x, y, z));
        let mut value = Vec::with_capacity(points.len());
        for (v, p) in values.into_iter().zip(&points) {
            let v = v?;
            if !v.is_finite() {
                return Err(Error::Measurement {
                    what: "the fitted function",
                    x: p[0],
                    y: p[1],
                    z: p[2],
                });
            }
            value.push(v);
        }
        // index of (i, j, k) in lexicographic order is (i g + j) g + k
        let group = (0..points.len()).map(|idx| idx / (g * g) + (idx / g) % g + idx % g).collect();
        let power = points.iter().map(|&p| SolutionFamily::power_sum(alpha, p)).collect();
        Ok(Self {
            points,
            group,
            value,
            power,
            keys: b.sum_knots(),
        })
    }

    fn group_bounds(&self, a: f64) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.keys.len()];
        let mut hi = vec![f64::NEG_INFINITY; self.keys.len()];
        for i in 0..self.value.len() {
            let r = self.value[i] - a * self.power[i];
            let g = self.group[i];
            lo[g] = lo[g].min(r);
            hi[g] = hi[g].max(r);
        }
        (lo, hi)
    }

    fn objective(&self, a: f64) -> f64 {
        let (lo, hi) = self.group_bounds(a);
        lo.iter().zip(&hi).map(|(l, h)| 0.5 * (h - l)).fold(0.0, f64::max)
    }

    fn identifiable(&self) -> bool {
        let scale = self.power.iter().fold(0.0f64, |m, p| m.max(p.abs())).max(1.0);
        let mut lo = vec![f64::INFINITY; self.keys.len()];
        let mut hi = vec![f64::NEG_INFINITY; self.keys.len()];
        for (&g, &p) in self.group.iter().zip(&self.power) {
            lo[g] = lo[g].min(p);
            hi[g] = hi[g].max(p);
        }
        lo.iter().zip(&hi).any(|(l, h)| h - l > 1e-12 * scale)
    }

    fn finish(&self, a: f64) -> Result<FamilyFit> {
        let (lo, hi) = self.group_bounds(a);
        let phi_values: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
        let mut sup_error = 0.0;
        let mut worst_point = self.points[0];
        for i in 0..self.value.len() {
            let d = (self.value[i] - a * self.power[i] - phi_values[self.group[i]]).abs();
            if d > sup_error {
                sup_error = d;
                worst_point = self.points[i];
            }
        }
        Ok(FamilyFit {
            best_a: a,
            phi: SumFunction::new(self.keys.clone(), phi_values, Interpolation::NearestBucket)?,
            sup_error,
            worst_point,
        })
    }
}

/// Minimax fit of `a (x^alpha + y^alpha + z^alpha) + phi(x + y + z)` to `f`
/// on the lattice of `b`. For `alpha = 0` the power sum is constant and `a`
/// is fixed at 0.
pub fn fit_family<F: TripleFn + Sync + ?Sized>(
    f: &F,
    alpha: f64,
    b: &Box3,
    search: &SearchRange,
) -> Result<FamilyFit> {
    let case = AlphaCase::new(alpha)?;
    search.validate()?;
    let samples = Samples::collect(f, alpha, b)?;
    if case.regime() == Regime::Zero {
        return samples.finish(0.0);
    }
    if !samples.identifiable() {
        return Err(Error::IllPosed(
            "every sum group has a single power sum, so a is unconstrained".into(),
        ));
    }
    let n = search.coarse;
    let grid: Vec<f64> = (0..n)
        .map(|i| search.lo + (search.hi - search.lo) * i as f64 / (n - 1) as f64)
        .collect();
    let coarse = map_collect(&grid, |&a| samples.objective(a));
    let k = argmin(&coarse);
    if k == 0 || k == n - 1 {
        return Err(Error::WidenRange {
            what: "coefficient a",
            boundary: grid[k],
        });
    }
    let (a, _) = golden(&|a| samples.objective(a), grid[k - 1], grid[k + 1], search.tol);
    samples.finish(a)
}

/// Exhaustive oracle for [`fit_family`]: groups samples by sorting their
/// floating sums and evaluates the objective at every `a` in `a_grid`.
/// Ties go to the smaller `a`.
pub fn brute_force_fit<F: TripleFn + ?Sized>(
    f: &F,
    alpha: f64,
    b: &Box3,
    a_grid: &[f64],
) -> Result<(FamilyFit, f64)> {
    AlphaCase::new(alpha)?;
    if a_grid.is_empty() {
        return Err(Error::usage("brute-force fit needs a nonempty a grid"));
    }
    let mut rows = Vec::new();
    for p in b.points() {
        let v = f.eval3(p[0], p[1], p[2])?;
        let power: f64 = p.iter().map(|t| t.powf(alpha)).sum();
        rows.push((p[0] + p[1] + p[2], v, power, p));
    }
    rows.sort_by(|x, y| x.0.total_cmp(&y.0));
    let tol = 1e-6 * b.step();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..rows.len() {
        match groups.last_mut() {
            Some(g) if rows[i].0 - rows[g[0]].0 <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let objective = |a: f64| {
        let mut worst = 0.0f64;
        for g in &groups {
            let r: Vec<f64> = g.iter().map(|&i| rows[i].1 - a * rows[i].2).collect();
            let (lo, hi) = min_max(&r).expect("groups are nonempty");
            worst = worst.max(0.5 * (hi - lo));
        }
        worst
    };
    let mut best = (a_grid[0], objective(a_grid[0]));
    for &a in &a_grid[1..] {
        let v = objective(a);
        if v < best.1 || (v == best.1 && a < best.0) {
            best = (a, v);
        }
    }
    let a = best.0;
    let residuals: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| g.iter().map(|&i| rows[i].1 - a * rows[i].2).collect())
        .collect();
    let (mid, _) = phi_midrange(&residuals)?;
    let keys: Vec<f64> = groups.iter().map(|g| rows[g[0]].0).collect();
    let mut sup_error = 0.0;
    let mut worst_point = rows[0].3;
    for (g, m) in groups.iter().zip(&mid) {
        for &i in g {
            let d = (rows[i].1 - a * rows[i].2 - m).abs();
            if d > sup_error {
                sup_error = d;
                worst_point = rows[i].3;
            }
        }
    }
    let fit = FamilyFit {
        best_a: a,
        phi: SumFunction::new(keys, mid, Interpolation::NearestBucket)?,
        sup_error,
        worst_point,
    };
    Ok((fit, best.1))
}

/// Minimax fit of `a t^alpha + b ((1-t)^alpha - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HFit {
    pub a: f64,
    pub b: f64,
    pub sup_error: f64,
}

struct HSamples {
    p: Vec<f64>,
    q: Vec<f64>,
    h: Vec<f64>,
}

impl HSamples {
    fn new(samples: &[(f64, f64)], alpha: f64) -> Result<Self> {
        if alpha == 0.0 || alpha == 1.0 || !alpha.is_finite() {
            return Err(Error::usage(format!(
                "the two-parameter fit needs alpha not in {{0, 1}}, got {alpha}"
            )));
        }
        let mut xs = Vec::with_capacity(samples.len());
        for &(t, v) in samples {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::domain(format!("abscissa {t} is outside ]0, 1[")));
            }
            if !v.is_finite() {
                return Err(Error::usage(format!("sample value at {t} is not finite")));
            }
            xs.push(t);
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        if xs.len() < 3 {
            return Err(Error::IllPosed(format!(
                "{} distinct abscissas cannot pin two coefficients in sup norm",
                xs.len()
            )));
        }
        Ok(Self {
            p: samples.iter().map(|&(t, _)| t.powf(alpha)).collect(),
            q: samples.iter().map(|&(t, _)| (1.0 - t).powf(alpha) - 1.0).collect(),
            h: samples.iter().map(|&(_, v)| v).collect(),
        })
    }

    fn sup(&self, a: f64, b: f64) -> f64 {
        (0..self.h.len())
            .map(|i| (self.h[i] - a * self.p[i] - b * self.q[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Least-squares start `(a, b)`.
    fn least_squares(&self) -> (f64, f64) {
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
        let (pp, pq, qq) = (dot(&self.p, &self.p), dot(&self.p, &self.q), dot(&self.q, &self.q));
        let (ph, qh) = (dot(&self.p, &self.h), dot(&self.q, &self.h));
        let det = pp * qq - pq * pq;
        if det.abs() <= 1e-14 * pp * qq || !det.is_finite() {
            return (0.0, 0.0);
        }
        ((ph * qq - qh * pq) / det, (qh * pp - ph * pq) / det)
    }

    fn scale(&self) -> f64 {
        self.h.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0)
    }
}

/// Nested convex searches: outer over `b`, inner over `a`.
pub fn fit_h_family(samples: &[(f64, f64)], alpha: f64) -> Result<HFit> {
    let hs = HSamples::new(samples, alpha)?;
    let (a0, b0) = hs.least_squares();
    let tol = 1e-13 * (1.0 + a0.abs().max(b0.abs()));
    let step = 0.1 * hs.scale();
    let inner = |b: f64| minimize_convex(&|a| hs.sup(a, b), a0, step, tol);
    let (b, _) = minimize_convex(&|b| inner(b).1, b0, step, tol);
    let (a, _) = inner(b);
    Ok(HFit {
        a,
        b,
        sup_error: hs.sup(a, b),
    })
}

/// Exhaustive oracle for [`fit_h_family`] over a product grid.
pub fn brute_force_h_fit(
    samples: &[(f64, f64)],
    alpha: f64,
    a_grid: &[f64],
    b_grid: &[f64],
) -> Result<HFit> {
    let hs = HSamples::new(samples, alpha)?;
    if a_grid.is_empty() || b_grid.is_empty() {
        return Err(Error::usage("brute-force fit needs nonempty grids"));
    }
    let mut best = HFit {
        a: a_grid[0],
        b: b_grid[0],
        sup_error: f64::INFINITY,
    };
    for &a in a_grid {
        for &b in b_grid {
            let s = hs.sup(a, b);
            if s < best.sup_error {
                best = HFit { a, b, sup_error: s };
            }
        }
    }
    Ok(best)
}

/// Best constant in sup norm: `(midrange, half-range)`.
pub fn fit_h_const(values: &[f64]) -> Result<(f64, f64)> {
    let (lo, hi) = min_max(values).ok_or_else(|| Error::usage("constant fit needs samples"))?;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::usage("constant fit needs finite samples"));
    }
    Ok((0.5 * (lo + hi), 0.5 * (hi - lo)))
}

/// Fit, measured tolerances and the bound verdict for one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub best_a: f64,
    pub phi: SumFunction,
    pub sup_error: f64,
    pub worst_point: [f64; 3],
    pub eps: EpsPair,
    pub bound: BoundSpec,
    pub bound_value: f64,
    pub pass: bool,
}

/// Slack allowed on a bound comparison.
pub fn bound_slack(bound_value: f64) -> f64 {
    1e-9 * (1.0 + bound_value)
}

/// Measures `(eps1, eps2)`, fits the family and compares the achieved sup
/// distance with the regime's stability bound.
pub fn verdict<F: TripleFn + Sync + ?Sized>(
    f: &F,
    case: &AlphaCase,
    b: &Box3,
    n: Option<u32>,
    search: &SearchRange,
) -> Result<FitReport> {
    if let (Regime::PositiveNotOne, Some(n)) = (case.regime(), n) {
        if b.n() > n as f64 {
            return Err(Error::usage(format!(
                "box edge {} exceeds the bound's box index n = {n}",
                b.n()
            )));
        }
    }
    let bound = bound_for(case, n)?;
    let eps = measure_eps(f, case.alpha(), b)?;
    let fit = fit_family(f, case.alpha(), b, search)?;
    let bound_value = bound.value(eps.eps1, eps.eps2);
    Ok(FitReport {
        best_a: fit.best_a,
        phi: fit.phi,
        sup_error: fit.sup_error,
        worst_point: fit.worst_point,
        eps,
        pass: fit.sup_error <= bound_value + bound_slack(bound_value),
        bound,
        bound_value,
    })
}
