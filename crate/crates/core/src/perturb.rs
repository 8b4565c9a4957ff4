//! Deterministic bounded noise keyed on quantized coordinates.
//!
//! A perturbed candidate must still be a genuine function: the same point has
//! to return the same value however it was reached. Noise is therefore a pure
//! function of `(seed, floor(x / resolution), ...)`, mixed with SplitMix64.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sorted, Box3, EntropyFn, SolutionFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Independent values for every ordered cell triple.
    General,
    /// Depends on the sorted cell triple only; symmetry residuals vanish.
    Symmetric,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(NoiseMode::General),
            "symmetric" => Ok(NoiseMode::Symmetric),
            other => Err(Error::usage(format!(
                "noise mode must be `general` or `symmetric`, got `{other}`"
            ))),
        }
    }
}

impl NoiseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseMode::General => "general",
            NoiseMode::Symmetric => "symmetric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseField {
    seed: u64,
    amplitude: f64,
    resolution: f64,
    mode: NoiseMode,
}

impl NoiseField {
    pub fn new(seed: u64, amplitude: f64, resolution: f64, mode: NoiseMode) -> Result<Self> {
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::usage(format!(
                "noise amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        if !resolution.is_finite() || resolution <= 0.0 {
            return Err(Error::usage(format!(
                "noise resolution must be positive, got {resolution}"
            )));
        }
        Ok(Self {
            seed,
            amplitude,
            resolution,
            mode,
        })
    }

    /// Field with the default resolution of a quarter lattice step.
    pub fn for_box(seed: u64, amplitude: f64, b: &Box3, mode: NoiseMode) -> Result<Self> {
        Self::new(seed, amplitude, b.step() / 4.0, mode)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    fn cell(&self, t: f64) -> i64 {
        (t / self.resolution).floor() as i64
    }

    /// Noise value in `[-amplitude, amplitude]` at a point of the closed octant.
    pub fn noise_at(&self, x: f64, y: f64, z: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let coords = match self.mode {
            NoiseMode::General => [x, y, z],
            NoiseMode::Symmetric => sorted([x, y, z]),
        };
        let mut h = splitmix64(self.seed);
        for c in coords {
            h = splitmix64(h ^ self.cell(c) as u64);
        }
        self.amplitude * signed_unit(h)
    }

    /// Two-argument variant used for interval-function instances.
    pub fn noise_at2(&self, p: f64, q: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let mut h = splitmix64(self.seed ^ 0xA5A5_5A5A_C3C3_3C3C);
        for c in [p, q] {
            h = splitmix64(h ^ self.cell(c) as u64);
        }
        self.amplitude * signed_unit(h)
    }
}

/// Maps 53 high bits to `[-1, 1)`.
#[inline]
fn signed_unit(h: u64) -> f64 {
    let u = (h >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * u - 1.0
}

#[inline]
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Exact family plus the noise field, on the family's intended box.
pub fn perturb(family: SolutionFamily, field: NoiseField, domain: Box3) -> EntropyFn {
    EntropyFn {
        family: Some(family),
        noise: Some(field),
        domain,
    }
}
