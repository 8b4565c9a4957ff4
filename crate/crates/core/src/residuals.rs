//! Residuals of every hypothesis and intermediate inequality used in the
//! stability argument, and their sup-norm measurement over lattices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::glue::IntervalFn2;
use crate::map_collect;
use crate::model::{check_octant_point, power_term, Box3, SimplexGrid, TripleFn};

/// Measured tolerance pair: equation residual sup and symmetry residual sup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsPair {
    pub eps1: f64,
    pub eps2: f64,
}

impl EpsPair {
    pub const ZERO: EpsPair = EpsPair {
        eps1: 0.0,
        eps2: 0.0,
    };

    pub fn max(self, other: EpsPair) -> EpsPair {
        EpsPair {
            eps1: self.eps1.max(other.eps1),
            eps2: self.eps2.max(other.eps2),
        }
    }
}

const PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn check_positive(x: f64, y: f64, z: f64) -> Result<()> {
    if !(x > 0.0 && y > 0.0 && z > 0.0) || !(x + y + z).is_finite() {
        return Err(Error::domain(format!(
            "({x}, {y}, {z}) must have strictly positive coordinates"
        )));
    }
    Ok(())
}

/// Signed residual `f(x,y,z) - f(x,y+z,0) - (y+z)^alpha f(0, y/(y+z), z/(y+z))`.
pub fn entropy_residual<F: TripleFn + ?Sized>(
    f: &F,
    alpha: f64,
    x: f64,
    y: f64,
    z: f64,
) -> Result<f64> {
    check_positive(x, y, z)?;
    let s = y + z;
    Ok(f.eval3(x, y, z)? - f.eval3(x, s, 0.0)? - power_term(s, alpha) * f.eval3(0.0, y / s, z / s)?)
}

/// Spread `max - min` of `f` over the six permutations of `(x, y, z)`, for
/// `x, y, z > 0`. Its sup over a permutation-closed set equals the sup of
/// `|f(p) - f(sigma p)|`, and it does not depend on the order of the input.
pub fn symmetry_residual<F: TripleFn + ?Sized>(f: &F, x: f64, y: f64, z: f64) -> Result<f64> {
    check_positive(x, y, z)?;
    symmetry_defect(f, [x, y, z])
}

/// Symmetry residual that also accepts one zero coordinate.
pub(crate) fn symmetry_defect<F: TripleFn + ?Sized>(f: &F, p: [f64; 3]) -> Result<f64> {
    check_octant_point(p[0], p[1], p[2])?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in &PERMS {
        let v = f.eval3(p[s[0]], p[s[1]], p[s[2]])?;
        if v.is_nan() {
            return Ok(f64::NAN);
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

fn check_open_simplex(x: f64, y: f64) -> Result<()> {
    if !(x > 0.0 && y > 0.0 && x + y < 1.0) {
        return Err(Error::domain(format!(
            "({x}, {y}) is not in the open simplex x, y, x + y in ]0, 1["
        )));
    }
    Ok(())
}

/// Signed residual of the parametric fundamental equation of information,
/// `h(x) + (1-x)^a h(y/(1-x)) - h(y) - (1-y)^a h(x/(1-y))`.
pub fn fundamental_residual(h: impl Fn(f64) -> f64, alpha: f64, x: f64, y: f64) -> Result<f64> {
    check_open_simplex(x, y)?;
    Ok(h(x) + power_term(1.0 - x, alpha) * h(y / (1.0 - x))
        - h(y)
        - power_term(1.0 - y, alpha) * h(x / (1.0 - y)))
}

/// `|A(u+v, w) - B(u, v+w)|` on the lattices of `A` and `B`.
pub fn assoc_residual(a: &IntervalFn2, b: &IntervalFn2, u: f64, v: f64, w: f64) -> Result<f64> {
    Ok((a.eval(u + v, w)? - b.eval(u, v + w)?).abs())
}

fn finite(what: &'static str, p: [f64; 3], v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Measurement {
            what,
            x: p[0],
            y: p[1],
            z: p[2],
        })
    }
}

/// Boundary points reached by the equation at a positive triple.
fn derived_boundary_points(p: [f64; 3]) -> [[f64; 3]; 2] {
    let [x, y, z] = p;
    let s = y + z;
    [[x, s, 0.0], [0.0, y / s, z / s]]
}

fn reduce_max(values: Vec<Result<(f64, f64)>>) -> Result<EpsPair> {
    let mut eps = EpsPair::ZERO;
    for v in values {
        let (e1, e2) = v?;
        eps.eps1 = eps.eps1.max(e1);
        eps.eps2 = eps.eps2.max(e2);
    }
    Ok(eps)
}

/// Equation and symmetry residuals at one positive triple. The symmetry part
/// also covers the boundary points the equation evaluates there.
fn residual_pair<F: TripleFn + ?Sized>(f: &F, alpha: f64, p: [f64; 3]) -> Result<(f64, f64)> {
    let e1 = finite("the entropy residual", p, entropy_residual(f, alpha, p[0], p[1], p[2])?.abs())?;
    let mut e2 = finite("the symmetry residual", p, symmetry_defect(f, p)?)?;
    for q in derived_boundary_points(p) {
        e2 = e2.max(finite("the symmetry residual", q, symmetry_defect(f, q)?)?);
    }
    Ok((e1, e2))
}

/// Measured `(eps1, eps2)` over the box lattice and its derived boundary points.
pub fn measure_eps<F: TripleFn + Sync + ?Sized>(f: &F, alpha: f64, b: &Box3) -> Result<EpsPair> {
    let points = b.points();
    reduce_max(map_collect(&points, |&p| residual_pair(f, alpha, p)))
}

/// Every point a chain audit over `(b, simplex)` evaluates `f` at, split into
/// the positive triples (where the equation hypothesis applies) and the
/// boundary points `(0, u, v)`.
fn audit_points(b: &Box3, simplex: &SimplexGrid) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
    let mut positive = Vec::new();
    let mut boundary = Vec::new();
    let h_point = |t: f64| [0.0, 1.0 - t, t];
    for [x, y, z] in b.points() {
        boundary.push([0.0, x, y + z]);
        boundary.push([0.0, y, x + z]);
        boundary.push(h_point(y / (y + z)));
        boundary.push(h_point(x / (x + z)));
    }
    for &(x, y) in simplex.points() {
        let z = 1.0 - x - y;
        positive.push([x, y, z]);
        positive.push([y, x, z]);
        boundary.push([0.0, x, 1.0 - x]);
        boundary.push([0.0, y, 1.0 - y]);
        for t in [x, y, y / (1.0 - x), x / (1.0 - y)] {
            boundary.push(h_point(t));
        }
    }
    (positive, boundary)
}

/// `(eps1, eps2)` measured on a sample set containing every point the chain
/// audit over `(b, simplex)` touches: the box lattice, the simplex triples
/// `(x, y, 1-x-y)` in both orders, and all boundary evaluation points.
pub fn measure_eps_covering<F: TripleFn + Sync + ?Sized>(
    f: &F,
    alpha: f64,
    b: &Box3,
    simplex: &SimplexGrid,
) -> Result<EpsPair> {
    let base = measure_eps(f, alpha, b)?;
    let (positive, boundary) = audit_points(b, simplex);
    let extra = reduce_max(map_collect(&positive, |&p| residual_pair(f, alpha, p)))?;
    let edge = reduce_max(map_collect(&boundary, |&q| {
        Ok((0.0, finite("the symmetry residual", q, symmetry_defect(f, q)?)?))
    }))?;
    Ok(base.max(extra).max(edge))
}

/// Measured sup of one intermediate inequality against its permitted bound
/// and against a bound that follows from the triangle inequality alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainStep {
    pub measured: f64,
    pub permitted: f64,
    pub provable: f64,
}

fn within(measured: f64, bound: f64) -> bool {
    measured <= bound + 1e-9 * bound + 1e-12
}

impl ChainStep {
    pub fn holds(&self) -> bool {
        within(self.measured, self.permitted)
    }

    pub fn holds_provable(&self) -> bool {
        within(self.measured, self.provable)
    }
}

/// The four intermediate inequalities leading from the three-variable
/// hypotheses to the fundamental equation for `h(t) = f(0, 1-t, t)`:
///
/// 1. `|f(x,y,z) - F(x,y+z) - (y+z)^a h(y/(y+z))| <= e1 + e2` on the box,
/// 2. the `x <-> y` exchange of (1), `<= e1 + 2 e2` on the box,
/// 3. (2) restricted to `x + y + z = 1`, `<= e1 + 2 e2` on the simplex,
/// 4. the fundamental equation residual of `h`, `<= e1 + 4 e2` on the simplex,
///
/// where `F(u, v) = f(0, u, v)`.
///
/// The provable bounds account for the weighted symmetry swap inside
/// `h(y/(y+z)) = f(0, z/(y+z), y/(y+z))` and for both residuals in the
/// exchange: with `M = max (y+z)^a` over the samples they are `e1 + (1+M) e2`,
/// `2 e1 + (3+2M) e2`, `2 e1 + (3+2M) e2` and `2 e1 + (5+2M) e2`. They hold
/// in exact arithmetic; in floating point `1 - y/(y+z)` may differ from
/// `z/(y+z)` by an ulp, which a discontinuous `f` can turn into a visible gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainAudit {
    pub reduction: ChainStep,
    pub exchange: ChainStep,
    pub simplex: ChainStep,
    pub fundamental: ChainStep,
}

impl ChainAudit {
    pub fn steps(&self) -> [(&'static str, ChainStep); 4] {
        [
            ("reduction", self.reduction),
            ("exchange", self.exchange),
            ("simplex", self.simplex),
            ("fundamental", self.fundamental),
        ]
    }

    pub fn all_hold(&self) -> bool {
        self.steps().iter().all(|(_, s)| s.holds())
    }

    pub fn all_hold_provable(&self) -> bool {
        self.steps().iter().all(|(_, s)| s.holds_provable())
    }
}

/// Label attached to chain-audit domain errors.
fn labelled<T>(step: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("chain step `{step}`: {m}")),
        other => other,
    })
}

pub fn audit_chain<F: TripleFn + Sync + ?Sized>(
    f: &F,
    alpha: f64,
    eps: EpsPair,
    b: &Box3,
    simplex: &SimplexGrid,
) -> Result<ChainAudit> {
    let big_f = |u: f64, v: f64| f.eval3(0.0, u, v);
    let h = |t: f64| f.eval3(0.0, 1.0 - t, t);
    // F(x, y+z) + (y+z)^a h(y/(y+z))
    let split = |x: f64, y: f64, z: f64| -> Result<f64> {
        let s = y + z;
        Ok(big_f(x, s)? + power_term(s, alpha) * h(y / s)?)
    };

    let points = b.points();
    let box_rows = map_collect(&points, |&[x, y, z]| -> Result<(f64, f64)> {
        let r15 = labelled("reduction", (|| Ok(f.eval3(x, y, z)? - split(x, y, z)?))())?;
        let r16 = labelled("exchange", (|| Ok(split(x, y, z)? - split(y, x, z)?))())?;
        Ok((
            finite("the reduction step", [x, y, z], r15.abs())?,
            finite("the exchange step", [x, y, z], r16.abs())?,
        ))
    });
    let box_max = reduce_max(box_rows)?;

    let simplex_rows = map_collect(simplex.points(), |&(x, y)| -> Result<(f64, f64)> {
        let z = 1.0 - x - y;
        let r17 = labelled(
            "simplex",
            (|| {
                Ok(big_f(x, 1.0 - x)? + power_term(1.0 - x, alpha) * h(y / (1.0 - x))?
                    - big_f(y, 1.0 - y)?
                    - power_term(1.0 - y, alpha) * h(x / (1.0 - y))?)
            })(),
        )?;
        let r18 = labelled(
            "fundamental",
            (|| {
                Ok(h(x)? + power_term(1.0 - x, alpha) * h(y / (1.0 - x))?
                    - h(y)?
                    - power_term(1.0 - y, alpha) * h(x / (1.0 - y))?)
            })(),
        )?;
        Ok((
            finite("the simplex step", [x, y, z], r17.abs())?,
            finite("the fundamental step", [x, y, z], r18.abs())?,
        ))
    });
    let simplex_max = reduce_max(simplex_rows)?;

    let weight = |t: f64| power_term(t, alpha);
    let m_box = points
        .iter()
        .map(|&[x, y, z]| weight(y + z).max(weight(x + z)))
        .fold(0.0f64, f64::max);
    let m_simplex = simplex
        .points()
        .iter()
        .map(|&(x, y)| weight(1.0 - x).max(weight(1.0 - y)))
        .fold(0.0f64, f64::max);

    let EpsPair { eps1, eps2 } = eps;
    Ok(ChainAudit {
        reduction: ChainStep {
            measured: box_max.eps1,
            permitted: eps1 + eps2,
            provable: eps1 + (1.0 + m_box) * eps2,
        },
        exchange: ChainStep {
            measured: box_max.eps2,
            permitted: eps1 + 2.0 * eps2,
            provable: 2.0 * eps1 + (3.0 + 2.0 * m_box) * eps2,
        },
        simplex: ChainStep {
            measured: simplex_max.eps1,
            permitted: eps1 + 2.0 * eps2,
            provable: 2.0 * eps1 + (3.0 + 2.0 * m_simplex) * eps2,
        },
        fundamental: ChainStep {
            measured: simplex_max.eps2,
            permitted: eps1 + 4.0 * eps2,
            provable: 2.0 * eps1 + (5.0 + 2.0 * m_simplex) * eps2,
        },
    })
}
