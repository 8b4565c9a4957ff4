//! Constructive sum-function for near-associative interval functions.
//!
//! Given `A: (U+V) x W -> R` and `B: U x (V+W) -> R` with
//! `|A(u+v, w) - B(u, v+w)| <= eps`, the construction covers `W` by
//! interleaved windows `[w1_k, w2_k]` shorter than `V`, reads candidate
//! sum-functions `phi_{i,k}(xi) = A(xi - w_{i,k}, w_{i,k})` off `A`, glues them
//! per window and then across windows, and reports the sup deviations of the
//! result from `A` and `B`.
//!
//! All intervals are lattices sharing one step, and every set operation is
//! carried out on integer lattice indices: `u_i + v_j + w_k` has index
//! `i + j + k` on `U+V+W`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Interpolation, SumFunction};
use crate::perturb::{splitmix64, NoiseField, NoiseMode};

const LATTICE_TOL: f64 = 1e-9;

/// Closed lattice interval `lo, lo + step, ..., hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalSpec {
    lo: f64,
    hi: f64,
    step: f64,
    len: usize,
}

impl IntervalSpec {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || lo >= hi {
            return Err(Error::usage(format!(
                "interval needs lo < hi and step > 0, got [{lo}, {hi}] step {step}"
            )));
        }
        let steps = (hi - lo) / step;
        let rounded = steps.round();
        if (steps - rounded).abs() > LATTICE_TOL * steps.max(1.0) || rounded < 1.0 {
            return Err(Error::usage(format!(
                "interval [{lo}, {hi}] is not closed by step {step}"
            )));
        }
        Ok(Self {
            lo,
            hi,
            step,
            len: rounded as usize + 1,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of steps, `(hi - lo) / step`.
    pub fn steps(&self) -> usize {
        self.len - 1
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.len {
            self.hi
        } else {
            self.lo + i as f64 * self.step
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    pub fn index_of(&self, x: f64) -> Option<usize> {
        let k = ((x - self.lo) / self.step).round();
        if k < 0.0 || k as usize >= self.len {
            return None;
        }
        let k = k as usize;
        ((self.point(k) - x).abs() <= LATTICE_TOL * self.step).then_some(k)
    }

    fn same_step(&self, other: &IntervalSpec) -> bool {
        (self.step - other.step).abs() <= LATTICE_TOL * self.step
    }

    /// Minkowski sum on the shared lattice.
    pub fn sum(&self, other: &IntervalSpec) -> Result<IntervalSpec> {
        if !self.same_step(other) {
            return Err(Error::usage(format!(
                "lattice mismatch: steps {} and {}",
                self.step, other.step
            )));
        }
        IntervalSpec::new(self.lo + other.lo, self.hi + other.hi, self.step)
    }

    fn matches(&self, other: &IntervalSpec) -> bool {
        self.same_step(other)
            && self.len == other.len
            && (self.lo - other.lo).abs() <= LATTICE_TOL * self.step
    }

    /// `self` is a lattice-aligned subinterval of `outer`; returns its offset.
    fn offset_in(&self, outer: &IntervalSpec) -> Option<usize> {
        if !self.same_step(outer) {
            return None;
        }
        let off = outer.index_of(self.lo)?;
        (off + self.len <= outer.len).then_some(off)
    }
}

/// Two-argument function tabulated on a product of lattices (row-major in
/// the first argument).
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalFn2 {
    dom1: IntervalSpec,
    dom2: IntervalSpec,
    table: Vec<f64>,
}

impl IntervalFn2 {
    pub fn new(dom1: IntervalSpec, dom2: IntervalSpec, table: Vec<f64>) -> Result<Self> {
        if table.len() != dom1.len() * dom2.len() {
            return Err(Error::usage(format!(
                "table has {} entries, lattice has {}",
                table.len(),
                dom1.len() * dom2.len()
            )));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("interval-function values must be finite"));
        }
        Ok(Self { dom1, dom2, table })
    }

    pub fn from_fn(
        dom1: IntervalSpec,
        dom2: IntervalSpec,
        g: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut table = Vec::with_capacity(dom1.len() * dom2.len());
        for p in dom1.points() {
            for q in dom2.points() {
                table.push(g(p, q));
            }
        }
        Self::new(dom1, dom2, table)
    }

    pub fn dom1(&self) -> &IntervalSpec {
        &self.dom1
    }

    pub fn dom2(&self) -> &IntervalSpec {
        &self.dom2
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.dom2.len() + j]
    }

    pub fn eval(&self, p: f64, q: f64) -> Result<f64> {
        match (self.dom1.index_of(p), self.dom2.index_of(q)) {
            (Some(i), Some(j)) => Ok(self.at(i, j)),
            _ => Err(Error::domain(format!("({p}, {q}) is off the lattice"))),
        }
    }
}

/// Window `[w1, w2]` of the cover of `W`, with lattice indices into `W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverWindow {
    pub w1: f64,
    pub w2: f64,
    pub i1: usize,
    pub i2: usize,
}

/// Interleaved cover of `W` by windows strictly shorter than `V`.
///
/// Windows have `d` steps, where `d` is the largest step count strictly below
/// the length of `V` (or all of `W` if that is shorter), and start every
/// `d / 2` steps; the last window is right-aligned on `W`.
pub fn cover_w(w: &IntervalSpec, v: &IntervalSpec) -> Result<Vec<CoverWindow>> {
    let ratio = (v.hi() - v.lo()) / w.step();
    let below_v = (ratio - LATTICE_TOL).ceil() as usize - 1;
    let total = w.steps();
    let window = |i1: usize, i2: usize| CoverWindow {
        w1: w.point(i1),
        w2: w.point(i2),
        i1,
        i2,
    };
    if total <= below_v {
        return Ok(vec![window(0, total)]);
    }
    if below_v < 2 {
        return Err(Error::Construction(format!(
            "V has length {} but interleaved windows on step {} need at least 3 steps",
            v.hi() - v.lo(),
            w.step()
        )));
    }
    let d = below_v;
    let stride = d / 2;
    let mut out = Vec::new();
    let mut start = 0;
    while start + d < total {
        out.push(window(start, start + d));
        start += stride;
    }
    out.push(window(total - d, total));
    Ok(out)
}

/// Output of the construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GlueResult {
    /// Glued sum-function on the `U+V+W` lattice.
    pub phi: SumFunction,
    /// `sup |A(p, q) - phi(p + q)|`.
    pub dev_a: f64,
    /// `sup |B(t, s) - phi(t + s)|`.
    pub dev_b: f64,
    /// Worst `(p, q)` for `dev_a` and `(t, s)` for `dev_b`.
    pub worst_a: (f64, f64),
    pub worst_b: (f64, f64),
    /// Measured `sup |A(u+v, w) - B(u, v+w)|` over the instance.
    pub eps_measured: f64,
    pub cover: Vec<CoverWindow>,
}

impl GlueResult {
    /// Whether `dev_b <= eps` and `dev_a <= 2 eps` (with 1e-12 arithmetic slack).
    pub fn within_bounds(&self, eps: f64) -> bool {
        self.dev_b <= eps + 1e-12 && self.dev_a <= 2.0 * eps + 1e-12
    }
}

/// One compact instance `(A, B)` over lattice intervals `U, V, W`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlueInstance {
    pub a: IntervalFn2,
    pub b: IntervalFn2,
    pub u: IntervalSpec,
    pub v: IntervalSpec,
    pub w: IntervalSpec,
}

impl GlueInstance {
    /// Checks that `A` lives on `(U+V) x W` and `B` on `U x (V+W)`.
    pub fn new(
        a: IntervalFn2,
        b: IntervalFn2,
        u: IntervalSpec,
        v: IntervalSpec,
        w: IntervalSpec,
    ) -> Result<Self> {
        let uv = u.sum(&v)?;
        let vw = v.sum(&w)?;
        if !u.same_step(&w) {
            return Err(Error::usage("lattice mismatch between U and W"));
        }
        if !(a.dom1.matches(&uv) && a.dom2.matches(&w)) {
            return Err(Error::usage("A must be tabulated on (U+V) x W"));
        }
        if !(b.dom1.matches(&u) && b.dom2.matches(&vw)) {
            return Err(Error::usage("B must be tabulated on U x (V+W)"));
        }
        Ok(Self { a, b, u, v, w })
    }

    /// Recovers `U, V, W` from the domains of `A` and `B`.
    pub fn from_tables(a: IntervalFn2, b: IntervalFn2) -> Result<Self> {
        let u = b.dom1;
        let w = a.dom2;
        let step = u.step();
        let v = IntervalSpec::new(a.dom1.lo() - u.lo(), a.dom1.hi() - u.hi(), step)
            .map_err(|e| Error::usage(format!("cannot recover V from the tables: {e}")))?;
        Self::new(a, b, u, v, w)
    }

    /// `A = g(p + q) + noise` and `B = g(t + s) + independent noise` with
    /// `g(xi) = xi^2`, on `U = [0, u_len]`, `V = [0, v_len]`, `W = [0, w_len]`.
    pub fn seeded(seed: u64, amplitude: f64, lengths: [f64; 3], step: f64) -> Result<Self> {
        let [u, v, w] = [lengths[0], lengths[1], lengths[2]].map(|len| IntervalSpec::new(0.0, len, step));
        let (u, v, w) = (u?, v?, w?);
        let res = step / 4.0;
        let noise_a = NoiseField::new(seed, amplitude, res, NoiseMode::General)?;
        let noise_b = NoiseField::new(splitmix64(seed ^ 0x0B0B_0B0B), amplitude, res, NoiseMode::General)?;
        let g = |xi: f64| xi * xi;
        let a = IntervalFn2::from_fn(u.sum(&v)?, w, |p, q| g(p + q) + noise_a.noise_at2(p, q))?;
        let b = IntervalFn2::from_fn(u, v.sum(&w)?, |t, s| g(t + s) + noise_b.noise_at2(t, s))?;
        Self::new(a, b, u, v, w)
    }

    pub fn sum_lattice(&self) -> IntervalSpec {
        // shapes were checked in `new`
        self.u
            .sum(&self.v)
            .and_then(|uv| uv.sum(&self.w))
            .expect("instance lattices share a step")
    }

    /// Measured hypothesis: `sup |A(u+v, w) - B(u, v+w)|` and its witness.
    pub fn measure_eps(&self) -> (f64, (f64, f64, f64)) {
        let (nu, nv, nw) = (self.u.len(), self.v.len(), self.w.len());
        let mut best = 0.0;
        let mut witness = (self.u.point(0), self.v.point(0), self.w.point(0));
        for i in 0..nu {
            for j in 0..nv {
                for k in 0..nw {
                    let d = (self.a.at(i + j, k) - self.b.at(i, j + k)).abs();
                    if d > best {
                        best = d;
                        witness = (self.u.point(i), self.v.point(j), self.w.point(k));
                    }
                }
            }
        }
        (best, witness)
    }

    /// Exhaustive deviations of a tabulated `phi` (indexed on `U+V+W`).
    fn deviations(&self, phi: &[f64]) -> ((f64, (f64, f64)), (f64, (f64, f64))) {
        let uv = self.a.dom1;
        let vw = self.b.dom2;
        let mut dev_a = (0.0, (uv.point(0), self.w.point(0)));
        for p in 0..uv.len() {
            for q in 0..self.w.len() {
                let d = (self.a.at(p, q) - phi[p + q]).abs();
                if d > dev_a.0 {
                    dev_a = (d, (uv.point(p), self.w.point(q)));
                }
            }
        }
        let mut dev_b = (0.0, (self.u.point(0), vw.point(0)));
        for t in 0..self.u.len() {
            for s in 0..vw.len() {
                let d = (self.b.at(t, s) - phi[t + s]).abs();
                if d > dev_b.0 {
                    dev_b = (d, (self.u.point(t), vw.point(s)));
                }
            }
        }
        (dev_a, dev_b)
    }

    fn finish(&self, phi: Vec<f64>, cover: Vec<CoverWindow>) -> Result<GlueResult> {
        let (eps_measured, _) = self.measure_eps();
        let ((dev_a, worst_a), (dev_b, worst_b)) = self.deviations(&phi);
        let lattice = self.sum_lattice();
        Ok(GlueResult {
            phi: SumFunction::new(lattice.points(), phi, Interpolation::NearestBucket)?,
            dev_a,
            dev_b,
            worst_a,
            worst_b,
            eps_measured,
            cover,
        })
    }
}

/// Glued values of `phi` on `U+V+W` (index space) for one instance.
fn glue_indices(inst: &GlueInstance, cover: &[CoverWindow]) -> Vec<f64> {
    let n_uv = inst.a.dom1.len();
    let n_sum = inst.sum_lattice().len();
    // phi_{i,k}(xi) = A(xi - w_{i,k}, w_{i,k}) for xi in U+V+w_{i,k}
    let candidate = |xi: usize, wi: usize| inst.a.at(xi - wi, wi);
    // phi_k: phi_{1,k} exactly on (U+V+w1) \ (U+V+w2) = [i1, i2), else phi_{2,k}
    let window_value = |xi: usize, win: &CoverWindow| {
        if xi >= win.i1 && xi < win.i2 {
            candidate(xi, win.i1)
        } else {
            candidate(xi, win.i2)
        }
    };
    (0..n_sum)
        .map(|xi| {
            // phi = phi_K with K the largest window whose U+V+W^(K) holds xi;
            // this is phi_k on exclusive regions and phi_max(i,j) on overlaps.
            let win = cover
                .iter()
                .rev()
                .find(|c| xi >= c.i1 && xi <= c.i2 + n_uv - 1)
                .expect("the cover spans W, so U+V+W is covered");
            window_value(xi, win)
        })
        .collect()
}

/// Builds `phi` on `U+V+W` from `A` and `B` as in the constructive argument.
///
/// Fails with [`Error::HypothesisViolation`] (and the witness triple) if the
/// measured associativity residual exceeds `eps`.
pub fn build_phi(inst: &GlueInstance, eps: f64) -> Result<GlueResult> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::usage(format!("eps must be finite and >= 0, got {eps}")));
    }
    let (measured, (u, v, w)) = inst.measure_eps();
    if measured > eps * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::HypothesisViolation {
            measured,
            eps,
            u,
            v,
            w,
        });
    }
    let cover = cover_w(&inst.w, &inst.v)?;
    let phi = glue_indices(inst, &cover);
    inst.finish(phi, cover)
}

/// Patches the per-instance constructions of an increasing sequence of
/// instances: `phi = phi_1` on the first sum lattice and `phi_n` on each new
/// part of the `n`-th. Deviations are measured on the last (union) instance.
pub fn extend_phi_nested(instances: &[GlueInstance], eps: f64) -> Result<GlueResult> {
    let last = instances
        .last()
        .ok_or_else(|| Error::usage("nested extension needs at least one instance"))?;
    let union = last.sum_lattice();
    let mut phi = vec![f64::NAN; union.len()];
    let mut covered: Option<(usize, usize)> = None;
    let mut cover = Vec::new();
    for (n, inst) in instances.iter().enumerate() {
        if n > 0 {
            check_nested(&instances[n - 1], inst)?;
        }
        check_restriction(inst, last)?;
        let res = build_phi(inst, eps)?;
        let lat = inst.sum_lattice();
        let off = lat
            .offset_in(&union)
            .ok_or_else(|| Error::usage("instance sum lattice is not inside the union"))?;
        for (i, &val) in res.phi.values().iter().enumerate() {
            let g = off + i;
            let old = covered.is_some_and(|(lo, hi)| g >= lo && g <= hi);
            if !old {
                phi[g] = val;
            }
        }
        let span = (off, off + lat.len() - 1);
        covered = Some(match covered {
            None => span,
            Some((lo, hi)) => (lo.min(span.0), hi.max(span.1)),
        });
        cover = res.cover;
    }
    last.finish(phi, cover)
}

fn check_nested(inner: &GlueInstance, outer: &GlueInstance) -> Result<()> {
    let nested = inner.u.offset_in(&outer.u).is_some()
        && inner.v.offset_in(&outer.v).is_some()
        && inner.w.offset_in(&outer.w).is_some();
    if nested {
        Ok(())
    } else {
        Err(Error::usage("instances are not nested (U_n, V_n, W_n must increase)"))
    }
}

/// The tables of `inner` must be restrictions of the tables of `outer`.
fn check_restriction(inner: &GlueInstance, outer: &GlueInstance) -> Result<()> {
    for (small, big, name) in [(&inner.a, &outer.a, "A"), (&inner.b, &outer.b, "B")] {
        let (o1, o2) = match (small.dom1.offset_in(&big.dom1), small.dom2.offset_in(&big.dom2)) {
            (Some(o1), Some(o2)) => (o1, o2),
            _ => return Err(Error::usage(format!("{name} domains are not nested"))),
        };
        for i in 0..small.dom1.len() {
            for j in 0..small.dom2.len() {
                if small.at(i, j) != big.at(i + o1, j + o2) {
                    return Err(Error::usage(format!(
                        "{name} of a smaller instance is not a restriction of the larger one"
                    )));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::{NoiseField, NoiseMode};

    fn spec(lo: f64, hi: f64) -> IntervalSpec {
        IntervalSpec::new(lo, hi, 0.125).unwrap()
    }

    fn instance(
        u: IntervalSpec,
        v: IntervalSpec,
        w: IntervalSpec,
        ga: impl Fn(f64, f64) -> f64,
        gb: impl Fn(f64, f64) -> f64,
    ) -> GlueInstance {
        let a = IntervalFn2::from_fn(u.sum(&v).unwrap(), w, ga).unwrap();
        let b = IntervalFn2::from_fn(u, v.sum(&w).unwrap(), gb).unwrap();
        GlueInstance::new(a, b, u, v, w).unwrap()
    }

    /// Independent restatement of the cover conditions.
    fn admissible(cover: &[CoverWindow], w: &IntervalSpec, v_len: f64) -> bool {
        let short = cover.iter().all(|c| c.w2 - c.w1 < v_len);
        let union = cover.first().map(|c| c.w1) == Some(w.lo())
            && cover.last().map(|c| c.w2) == Some(w.hi())
            && cover.windows(2).all(|p| p[1].w1 <= p[0].w2);
        let interleaved = cover
            .windows(2)
            .all(|p| p[0].w1 < p[1].w1 && p[1].w1 < p[0].w2 && p[0].w2 < p[1].w2);
        short && union && interleaved
    }

    #[test]
    fn interval_spec_lattice() {
        let s = IntervalSpec::new(0.5, 1.5, 0.25).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.index_of(1.0), Some(2));
        assert_eq!(s.index_of(1.1), None);
        assert_eq!(s.index_of(2.0), None);
        assert!(IntervalSpec::new(0.0, 1.0, 0.3).is_err());
        assert!(IntervalSpec::new(1.0, 1.0, 0.5).is_err());
        assert!(s.sum(&IntervalSpec::new(0.0, 1.0, 0.5).unwrap()).is_err());
    }

    #[test]
    fn cover_example() {
        let w = IntervalSpec::new(0.0, 1.0, 0.25).unwrap();
        let v = IntervalSpec::new(0.0, 0.6, 0.2).unwrap();
        let cover = cover_w(&w, &v).unwrap();
        let pairs: Vec<(f64, f64)> = cover.iter().map(|c| (c.w1, c.w2)).collect();
        assert_eq!(pairs, vec![(0.0, 0.5), (0.25, 0.75), (0.5, 1.0)]);
        assert!(admissible(&cover, &w, 0.6));
    }

    #[test]
    fn short_w_needs_one_window() {
        let w = IntervalSpec::new(0.0, 0.5, 0.125).unwrap();
        let v = spec(0.0, 1.0);
        let cover = cover_w(&w, &v).unwrap();
        assert_eq!(cover.len(), 1);
        assert_eq!((cover[0].w1, cover[0].w2), (0.0, 0.5));
    }

    #[test]
    fn too_short_v_is_rejected() {
        let w = spec(0.0, 2.0);
        let v = spec(0.0, 0.25);
        assert!(matches!(cover_w(&w, &v), Err(Error::Construction(_))));
    }

    #[test]
    fn covers_are_admissible_across_sizes() {
        for w_steps in 1..=24 {
            for v_steps in 3..=16 {
                let w = spec(0.0, 0.125 * w_steps as f64);
                let v = spec(0.25, 0.25 + 0.125 * v_steps as f64);
                let cover = cover_w(&w, &v).unwrap();
                assert!(admissible(&cover, &w, v.hi() - v.lo()), "{w_steps} {v_steps}");
            }
        }
    }

    #[test]
    fn exact_sum_instance_factors() {
        let inst = instance(spec(0.0, 1.0), spec(0.0, 1.5), spec(0.0, 2.0), |p, q| p + q, |t, s| t + s);
        let res = build_phi(&inst, 0.0).unwrap();
        assert_eq!(res.dev_a, 0.0);
        assert_eq!(res.dev_b, 0.0);
        let lat = inst.sum_lattice();
        for (xi, val) in lat.points().iter().zip(res.phi.values()) {
            assert!((xi - val).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_square_instance_factors() {
        let g = |xi: f64| xi * xi;
        let inst = instance(spec(0.5, 1.5), spec(0.0, 1.0), spec(0.25, 2.0), |p, q| g(p + q), |t, s| g(t + s));
        let res = build_phi(&inst, 0.0).unwrap();
        assert!(res.dev_a <= 1e-12 && res.dev_b <= 1e-12);
        for (xi, val) in inst.sum_lattice().points().iter().zip(res.phi.values()) {
            assert!((g(*xi) - val).abs() < 1e-12);
        }
    }

    #[test]
    fn hypothesis_violation_names_the_witness() {
        let inst = instance(spec(0.0, 1.0), spec(0.0, 1.0), spec(0.0, 1.0), |p, q| p + q, |t, s| {
            if t == 0.5 && s == 1.0 {
                t + s + 1.0
            } else {
                t + s
            }
        });
        match build_phi(&inst, 0.5) {
            Err(Error::HypothesisViolation { measured, u, .. }) => {
                assert_eq!(measured, 1.0);
                assert_eq!(u, 0.5);
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_lattices_are_usage_errors() {
        let u = spec(0.0, 1.0);
        let v = spec(0.0, 1.0);
        let w = spec(0.0, 1.0);
        let a = IntervalFn2::from_fn(u.sum(&v).unwrap(), w, |p, q| p + q).unwrap();
        let b_bad = IntervalFn2::from_fn(u, w, |t, s| t + s).unwrap();
        assert!(matches!(GlueInstance::new(a, b_bad, u, v, w), Err(Error::Usage(_))));
    }

    #[test]
    fn tables_recover_the_intervals() {
        let inst = instance(spec(0.25, 1.0), spec(0.0, 0.75), spec(0.5, 2.0), |p, q| p * q, |t, s| t - s);
        let again = GlueInstance::from_tables(inst.a.clone(), inst.b.clone()).unwrap();
        assert_eq!(again, inst);
    }

    #[test]
    fn single_instance_extension_matches_build() {
        let field = NoiseField::new(4, 0.01, 0.125 / 4.0, NoiseMode::General).unwrap();
        let inst = instance(
            spec(0.0, 1.0),
            spec(0.0, 1.0),
            spec(0.0, 1.5),
            |p, q| (p + q).sin() + field.noise_at2(p, q),
            |t, s| (t + s).sin() + field.noise_at2(t + 7.0, s),
        );
        let (eps, _) = inst.measure_eps();
        assert_eq!(extend_phi_nested(std::slice::from_ref(&inst), eps).unwrap(), build_phi(&inst, eps).unwrap());
    }

    #[test]
    fn nested_exact_instances_give_identity() {
        let outer = instance(spec(0.0, 1.0), spec(0.0, 1.0), spec(0.0, 2.0), |p, q| p + q, |t, s| t + s);
        let inner = instance(spec(0.0, 0.5), spec(0.0, 0.75), spec(0.0, 1.0), |p, q| p + q, |t, s| t + s);
        let res = extend_phi_nested(&[inner, outer.clone()], 0.0).unwrap();
        assert_eq!((res.dev_a, res.dev_b), (0.0, 0.0));
        for (xi, val) in outer.sum_lattice().points().iter().zip(res.phi.values()) {
            assert!((xi - val).abs() < 1e-12);
        }
    }

    #[test]
    fn non_nested_instances_are_rejected() {
        let first = instance(spec(0.0, 1.0), spec(0.0, 1.0), spec(0.0, 2.0), |p, q| p + q, |t, s| t + s);
        let second = instance(spec(0.0, 0.5), spec(0.0, 0.75), spec(0.0, 1.0), |p, q| p + q, |t, s| t + s);
        assert!(matches!(extend_phi_nested(&[first, second], 0.0), Err(Error::Usage(_))));
    }

    #[test]
    fn construction_is_deterministic() {
        let field = NoiseField::new(77, 0.05, 0.125 / 4.0, NoiseMode::General).unwrap();
        let make = || {
            instance(
                spec(0.0, 0.75),
                spec(0.0, 1.0),
                spec(0.0, 2.0),
                |p, q| (p + q).powi(2) + field.noise_at2(p, q),
                |t, s| (t + s).powi(2) + field.noise_at2(t + 11.0, s),
            )
        };
        let (eps, _) = make().measure_eps();
        let r1 = build_phi(&make(), eps).unwrap();
        let r2 = build_phi(&make(), eps).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.phi.values().iter().zip(r2.phi.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
