//! Closed-form stability constants and the bound table per regime.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AlphaCase, Regime};

/// Superstability constant of the parametric fundamental equation,
/// `|2^(1-a) - 1|^-1 (3 + 12 2^a + 32 3^(a+1) / |2^-a - 1|)`, for `a > 0, a != 1`.
pub fn k_const(alpha: f64) -> Result<f64> {
    if alpha == 0.0 || alpha == 1.0 {
        return Err(Error::Singularity {
            alpha,
            reason: "a denominator |2^(1-alpha) - 1| or |2^(-alpha) - 1| vanishes".into(),
        });
    }
    if !(alpha > 0.0) {
        return Err(Error::Regime {
            alpha,
            what: "the superstability constant (alpha > 0)",
        });
    }
    let outer = (2f64.powf(1.0 - alpha) - 1.0).abs();
    let inner = (2f64.powf(-alpha) - 1.0).abs();
    let k = (3.0 + 12.0 * 2f64.powf(alpha) + 32.0 * 3f64.powf(alpha + 1.0) / inner) / outer;
    if !k.is_finite() {
        return Err(Error::Singularity {
            alpha,
            reason: "the constant overflows".into(),
        });
    }
    Ok(k)
}

fn check_box_index(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::usage("box index n must be a positive integer"));
    }
    Ok(n as f64)
}

fn finite_or_singular(alpha: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Singularity {
            alpha,
            reason: "the constant overflows".into(),
        })
    }
}

/// Coefficient of `eps1` on `]0, n]^3`: `2 + 7 2^a n^a K(a)`.
pub fn c_n(alpha: f64, n: u32) -> Result<f64> {
    let k = k_const(alpha)?;
    let n = check_box_index(n)?;
    finite_or_singular(alpha, 2.0 + 7.0 * 2f64.powf(alpha) * n.powf(alpha) * k)
}

/// Coefficient of `eps2` on `]0, n]^3`: `4 + 7 2^(a+2) n^a K(a)`.
pub fn d_n(alpha: f64, n: u32) -> Result<f64> {
    let k = k_const(alpha)?;
    let n = check_box_index(n)?;
    finite_or_singular(alpha, 4.0 + 7.0 * 2f64.powf(alpha + 2.0) * n.powf(alpha) * k)
}

/// Intermediate associativity tolerance on `eps1`: `1 + 3 2^(a+1) n^a K(a)`.
pub fn a_n(alpha: f64, n: u32) -> Result<f64> {
    let k = k_const(alpha)?;
    let n = check_box_index(n)?;
    finite_or_singular(alpha, 1.0 + 3.0 * 2f64.powf(alpha + 1.0) * n.powf(alpha) * k)
}

/// Intermediate associativity tolerance on `eps2`: `3 + 3 2^(a+3) n^a K(a)`.
pub fn b_n(alpha: f64, n: u32) -> Result<f64> {
    let k = k_const(alpha)?;
    let n = check_box_index(n)?;
    finite_or_singular(alpha, 3.0 + 3.0 * 2f64.powf(alpha + 3.0) * n.powf(alpha) * k)
}

/// Bound `coef_eps1 * eps1 + coef_eps2 * eps2` on the sup distance to the
/// nearest exact solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSpec {
    pub regime: Regime,
    pub alpha: f64,
    pub n: Option<u32>,
    pub coef_eps1: f64,
    pub coef_eps2: f64,
    pub label: String,
}

impl BoundSpec {
    pub fn value(&self, eps1: f64, eps2: f64) -> f64 {
        self.coef_eps1 * eps1 + self.coef_eps2 * eps2
    }
}

pub fn bound_for(case: &AlphaCase, n: Option<u32>) -> Result<BoundSpec> {
    let alpha = case.alpha();
    let (c1, c2, label) = match (case.regime(), n) {
        (Regime::Negative, None) => (2.0, 3.0, "stability:alpha<0:2e1+3e2".to_string()),
        (Regime::Zero, None) => (191.0, 1263.0, "stability:alpha=0:191e1+1263e2".to_string()),
        (Regime::PositiveNotOne, Some(n)) => (
            c_n(alpha, n)?,
            d_n(alpha, n)?,
            format!("stability:alpha>0:c_{n}e1+d_{n}e2"),
        ),
        (Regime::PositiveNotOne, None) => {
            return Err(Error::usage("alpha > 0 needs a box index n"))
        }
        (_, Some(_)) => {
            return Err(Error::usage(
                "a box index n is only meaningful for alpha > 0",
            ))
        }
    };
    Ok(BoundSpec {
        regime: case.regime(),
        alpha,
        n,
        coef_eps1: c1,
        coef_eps2: c2,
        label,
    })
}

/// Coefficients obtained by re-adding the displayed `alpha = 0` chain:
/// `(e1 + e2) + [(e1 + 2 e2) + 2 * 63 (e1 + 4 e2)] + 63 (e1 + 4 e2)`.
pub const ZERO_REGIME_RECOMPUTED: (f64, f64) = (191.0, 759.0);

fn check_pairs(pairs: &[(f64, f64)]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::usage("defect check needs at least one pair"));
    }
    Ok(())
}

/// `sup |mu(xy) - mu(x) mu(y)|` over the pairs.
pub fn check_multiplicative(mu: impl Fn(f64) -> f64, pairs: &[(f64, f64)]) -> Result<f64> {
    check_pairs(pairs)?;
    Ok(pairs
        .iter()
        .map(|&(x, y)| (mu(x * y) - mu(x) * mu(y)).abs())
        .fold(0.0, f64::max))
}

/// `sup |l(xy) - l(x) - l(y)|` over the pairs.
pub fn check_logarithmic(l: impl Fn(f64) -> f64, pairs: &[(f64, f64)]) -> Result<f64> {
    check_pairs(pairs)?;
    Ok(pairs
        .iter()
        .map(|&(x, y)| (l(x * y) - l(x) - l(y)).abs())
        .fold(0.0, f64::max))
}
