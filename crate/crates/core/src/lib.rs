//! Numerical laboratory for the Hyers–Ulam stability of the modified entropy
//! equation
//!
//! ```text
//! f(x, y, z) = f(x, y + z, 0) + (y + z)^alpha f(0, y / (y + z), z / (y + z))
//! ```
//!
//! on the positive octant. The crate measures equation and symmetry residuals
//! of candidate functions, recovers the nearest exact solution in the sup
//! norm, glues sum-functions out of near-associative interval functions, and
//! checks measured distances against the closed-form stability constants.
//!
//! Modules:
//! - [`model`]: exponent, lattices, sum-functions, candidate functions.
//! - [`constants`]: `K(alpha)`, `c_n`, `d_n` and the bound table.
//! - [`residuals`]: residual evaluators, `(eps1, eps2)` measurement, chain audit.
//! - [`glue`]: constructive sum-function from near-associative `A`, `B`.
//! - [`perturb`]: deterministic bounded noise fields.
//! - [`fit`]: sup-norm recovery of family members and the bound verdicts.
//! - [`cli`]: the `modent` command-line front end and its file formats.

pub mod cli;
pub mod constants;
pub mod error;
pub mod fit;
pub mod glue;
pub mod model;
pub mod perturb;
pub mod residuals;
mod search;
pub mod tables;

pub use error::{Error, Result};
pub use model::{AlphaCase, Box3, EntropyFn, Regime, SimplexGrid, SolutionFamily, SumFunction};

/// Evaluates `f` over `items`, in parallel when the `parallel` feature is on.
/// The output order matches the input order.
pub(crate) fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
