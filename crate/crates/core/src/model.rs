//! Domain model: the exponent, sampling lattices, sum-functions and the
//! three-argument candidate functions whose residuals are measured.
//!
//! Every candidate is evaluable on the closed positive octant with at most one
//! zero coordinate. Power terms of zero coordinates are dropped (`0^alpha` is
//! read as `0` for every `alpha`), which is the extension under which the
//! closed-form solutions also satisfy the boundary-evaluated terms of the
//! equation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::NoiseField;

/// Sign class of the exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Negative,
    Zero,
    PositiveNotOne,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Negative => "negative",
            Regime::Zero => "zero",
            Regime::PositiveNotOne => "positive",
        }
    }
}

/// An exponent `alpha != 1` together with its regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaCase {
    alpha: f64,
    regime: Regime,
}

impl AlphaCase {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::usage(format!("alpha must be finite, got {alpha}")));
        }
        if alpha == 1.0 {
            return Err(Error::Regime {
                alpha,
                what: "the stability results (alpha = 1 is excluded)",
            });
        }
        let regime = if alpha < 0.0 {
            Regime::Negative
        } else if alpha == 0.0 {
            Regime::Zero
        } else {
            Regime::PositiveNotOne
        };
        Ok(Self { alpha, regime })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }
}

/// `t^alpha` with the zero-coordinate convention `0^alpha = 0`.
#[inline]
pub fn power_term(t: f64, alpha: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if alpha == 0.0 {
        1.0
    } else {
        t.powf(alpha)
    }
}

/// Cubic sampling lattice `{lo + i (n - lo) / (grid - 1)}^3` inside `]0, n]^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    lo: f64,
    n: f64,
    grid: usize,
}

impl Box3 {
    pub fn new(lo: f64, n: f64, grid: usize) -> Result<Self> {
        if !(lo.is_finite() && n.is_finite()) || lo <= 0.0 || lo >= n {
            return Err(Error::usage(format!(
                "box needs 0 < lo < n, got lo = {lo}, n = {n}"
            )));
        }
        if grid < 2 {
            return Err(Error::usage(format!("box grid must be >= 2, got {grid}")));
        }
        Ok(Self { lo, n, grid })
    }

    /// Box with the default clip `lo = n / grid`.
    pub fn with_default_lo(n: f64, grid: usize) -> Result<Self> {
        Self::new(n / grid as f64, n, grid)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn step(&self) -> f64 {
        (self.n - self.lo) / (self.grid - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        debug_assert!(i < self.grid);
        if i + 1 == self.grid {
            self.n
        } else {
            self.lo + (self.n - self.lo) * i as f64 / (self.grid - 1) as f64
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.grid).map(|i| self.coord(i)).collect()
    }

    /// All lattice triples in lexicographic index order.
    pub fn points(&self) -> Vec<[f64; 3]> {
        let c = self.coords();
        let mut out = Vec::with_capacity(self.grid.pow(3));
        for &x in &c {
            for &y in &c {
                for &z in &c {
                    out.push([x, y, z]);
                }
            }
        }
        out
    }

    /// Knots `3 lo + k step` of the triple-sum lattice.
    pub fn sum_knots(&self) -> Vec<f64> {
        let step = self.step();
        (0..=3 * (self.grid - 1))
            .map(|k| 3.0 * self.lo + k as f64 * step)
            .collect()
    }
}

/// Interior grid of `D° = {(x, y) : x, y, x + y in ]0, 1[}` with spacing `1/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexGrid {
    m: usize,
    points: Vec<(f64, f64)>,
}

impl SimplexGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::usage(format!(
                "simplex grid needs m >= 3 to have interior points, got {m}"
            )));
        }
        let mf = m as f64;
        let mut points = Vec::new();
        for i in 1..m {
            for j in 1..m - i {
                points.push((i as f64 / mf, j as f64 / mf));
            }
        }
        Ok(Self { m, points })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    NearestBucket,
    PiecewiseLinear,
}

/// A tabulated function of the coordinate sum `s = x + y + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    interpolation: Interpolation,
}

impl SumFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::usage(format!(
                "sum-function needs matching non-empty knots/values, got {} and {}",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::usage("sum-function entries must be finite"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::usage("sum-function knots must be strictly increasing"));
        }
        Ok(Self {
            knots,
            values,
            interpolation,
        })
    }

    /// Constant function `c` on `[lo, hi]`.
    pub fn constant(c: f64, lo: f64, hi: f64) -> Result<Self> {
        if lo < hi {
            Self::new(vec![lo, hi], vec![c, c], Interpolation::PiecewiseLinear)
        } else {
            Self::new(vec![lo], vec![c], Interpolation::NearestBucket)
        }
    }

    /// Tabulate `g` at the given knots.
    pub fn from_fn(
        knots: Vec<f64>,
        interpolation: Interpolation,
        g: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = knots.iter().map(|&s| g(s)).collect();
        Self::new(knots, values, interpolation)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn span(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    fn span_slack(&self) -> f64 {
        let (lo, hi) = self.span();
        1e-9 * lo.abs().max(hi.abs()).max(1.0)
    }

    pub fn contains(&self, s: f64) -> bool {
        let (lo, hi) = self.span();
        let tol = self.span_slack();
        s >= lo - tol && s <= hi + tol
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        if !self.contains(s) {
            let (lo, hi) = self.span();
            return Err(Error::domain(format!(
                "sum {s} outside the sum-function span [{lo}, {hi}]"
            )));
        }
        let k = &self.knots;
        // index of the first knot > s
        let upper = k.partition_point(|&t| t <= s);
        if upper == 0 {
            return Ok(self.values[0]);
        }
        if upper == k.len() {
            return Ok(self.values[k.len() - 1]);
        }
        let (i, j) = (upper - 1, upper);
        Ok(match self.interpolation {
            Interpolation::NearestBucket => {
                if s - k[i] <= k[j] - s {
                    self.values[i]
                } else {
                    self.values[j]
                }
            }
            Interpolation::PiecewiseLinear => {
                let t = (s - k[i]) / (k[j] - k[i]);
                self.values[i] + t * (self.values[j] - self.values[i])
            }
        })
    }
}

/// `a x^alpha + a y^alpha + a z^alpha + phi(x + y + z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFamily {
    pub a: f64,
    pub alpha: f64,
    pub phi: SumFunction,
}

impl SolutionFamily {
    /// Family without the boundary-closure requirement (fitted members).
    pub fn new(a: f64, alpha: f64, phi: SumFunction) -> Result<Self> {
        AlphaCase::new(alpha)?;
        if !a.is_finite() {
            return Err(Error::usage("family coefficient a must be finite"));
        }
        Ok(Self { a, alpha, phi })
    }

    /// Value `phi(1)` must take for the extended family to solve the equation
    /// including its boundary terms.
    pub fn closure_value(a: f64) -> f64 {
        -a
    }

    /// Exact solution: checks the closure `phi(1) = -a`.
    pub fn closed(a: f64, alpha: f64, phi: SumFunction) -> Result<Self> {
        let fam = Self::new(a, alpha, phi)?;
        let at_one = fam.phi.eval(1.0)?;
        let want = Self::closure_value(a);
        if (at_one - want).abs() > 1e-12 * (1.0 + want.abs()) {
            return Err(Error::usage(format!(
                "exact family needs phi(1) = {want}, got {at_one}"
            )));
        }
        Ok(fam)
    }

    /// Exact solution with constant `phi = -a` on `[lo, hi]` (must contain 1).
    pub fn closed_constant(a: f64, alpha: f64, lo: f64, hi: f64) -> Result<Self> {
        let phi = SumFunction::constant(Self::closure_value(a), lo.min(1.0), hi.max(1.0))?;
        Self::closed(a, alpha, phi)
    }

    /// Exact solution whose `phi` is `g` shifted so that the closure holds.
    pub fn closed_from_fn(
        a: f64,
        alpha: f64,
        knots: Vec<f64>,
        interpolation: Interpolation,
        g: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let raw = SumFunction::from_fn(knots, interpolation, g)?;
        let shift = raw.eval(1.0)? - Self::closure_value(a);
        let values = raw.values().iter().map(|v| v - shift).collect();
        let phi = SumFunction::new(raw.knots().to_vec(), values, interpolation)?;
        Self::closed(a, alpha, phi)
    }

    /// Exact closed family covering every sum the residual sweep over `b` touches.
    pub fn closed_constant_for_box(a: f64, alpha: f64, b: &Box3) -> Result<Self> {
        Self::closed_constant(a, alpha, 3.0 * b.lo(), 3.0 * b.n())
    }

    /// `x^alpha + y^alpha + z^alpha` under the zero convention, summed in
    /// sorted-coordinate order so that the value is permutation invariant.
    pub fn power_sum(alpha: f64, p: [f64; 3]) -> f64 {
        let s = sorted(p);
        power_term(s[0], alpha) + power_term(s[1], alpha) + power_term(s[2], alpha)
    }

    pub fn value(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        let s = sorted([x, y, z]);
        let phi = self.phi.eval(s[0] + s[1] + s[2])?;
        Ok(self.a * Self::power_sum(self.alpha, s) + phi)
    }
}

#[inline]
pub(crate) fn sorted(mut p: [f64; 3]) -> [f64; 3] {
    if p[0] > p[1] {
        p.swap(0, 1);
    }
    if p[1] > p[2] {
        p.swap(1, 2);
    }
    if p[0] > p[1] {
        p.swap(0, 1);
    }
    p
}

/// A three-argument function that can be queried on the closed octant.
pub trait TripleFn {
    fn eval3(&self, x: f64, y: f64, z: f64) -> Result<f64>;
}

impl<F> TripleFn for F
where
    F: Fn(f64, f64, f64) -> f64,
{
    fn eval3(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        Ok(self(x, y, z))
    }
}

/// Candidate function: optional exact part plus optional bounded noise.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyFn {
    pub family: Option<SolutionFamily>,
    pub noise: Option<NoiseField>,
    pub domain: Box3,
}

impl EntropyFn {
    pub fn exact(family: SolutionFamily, domain: Box3) -> Self {
        Self {
            family: Some(family),
            noise: None,
            domain,
        }
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        check_octant_point(x, y, z)?;
        let mut v = match &self.family {
            Some(fam) => fam.value(x, y, z)?,
            None => 0.0,
        };
        if let Some(noise) = &self.noise {
            v += noise.noise_at(x, y, z);
        }
        Ok(v)
    }
}

impl TripleFn for EntropyFn {
    fn eval3(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        self.eval(x, y, z)
    }
}

pub(crate) fn check_octant_point(x: f64, y: f64, z: f64) -> Result<()> {
    if [x, y, z].iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::domain(format!(
            "({x}, {y}, {z}) is not in the closed positive octant"
        )));
    }
    let zeros = [x, y, z].iter().filter(|v| **v == 0.0).count();
    if zeros > 1 {
        return Err(Error::domain(format!(
            "({x}, {y}, {z}) has more than one zero coordinate"
        )));
    }
    Ok(())
}

/// `max |g(p)|` over the samples. A NaN value makes the result NaN.
pub fn sup_over<P>(samples: &[P], g: impl Fn(&P) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::usage("sup over an empty sample list"));
    }
    let mut best = 0.0f64;
    for p in samples {
        let v = g(p).abs();
        if v.is_nan() {
            return Ok(f64::NAN);
        }
        best = best.max(v);
    }
    Ok(best)
}
