use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic linear elastic material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Material {
    /// Pa
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    /// kg/m³
    pub density: f64,
    /// Pa
    pub yield_strength: f64,
}

impl Default for Material {
    /// ABS-like printing plastic.
    fn default() -> Self {
        Self {
            young_modulus: 2.4e9,
            poisson_ratio: 0.35,
            density: 1040.0,
            yield_strength: 48e6,
        }
    }
}

impl Material {
    pub fn validate(&self) -> Result<()> {
        if !(self.young_modulus > 0.0 && self.young_modulus.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "young_modulus must be positive, got {}",
                self.young_modulus
            )));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(Error::InvalidInput(format!(
                "poisson_ratio must lie in (-1, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        if !(self.yield_strength > 0.0 && self.yield_strength.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "yield_strength must be positive, got {}",
                self.yield_strength
            )));
        }
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "density must be non-negative, got {}",
                self.density
            )));
        }
        Ok(())
    }

    /// Lamé parameters `(λ, μ)`.
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.young_modulus, self.poisson_ratio);
        let mu = e / (2.0 * (1.0 + nu));
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        (lambda, mu)
    }

    pub fn shear_modulus(&self) -> f64 {
        self.lame().1
    }

    /// `σ = λ tr(ε) I + 2μ ε`.
    pub fn stress(&self, strain: &Matrix3<f64>) -> Matrix3<f64> {
        let (lambda, mu) = self.lame();
        Matrix3::identity() * (lambda * strain.trace()) + strain * (2.0 * mu)
    }
}
