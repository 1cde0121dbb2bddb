use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five positive constants of the coupled system: mass `m`, frequency
/// `omega`, coupling `e`, Chern-Simons constant `kappa` and gauge coupling `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub m: f64,
    pub omega: f64,
    pub e: f64,
    pub kappa: f64,
    pub q: f64,
}

impl PhysicalParams {
    pub fn new(m: f64, omega: f64, e: f64, kappa: f64, q: f64) -> Result<Self> {
        let p = Self { m, omega, e, kappa, q };
        p.validate()?;
        Ok(p)
    }

    /// m = omega = kappa = q = 1 with the given coupling.
    pub fn unit(e: f64) -> Result<Self> {
        Self::new(1.0, 1.0, e, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("m", self.m),
            ("omega", self.omega),
            ("e", self.e),
            ("kappa", self.kappa),
            ("q", self.q),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParam { name, value });
            }
        }
        Ok(())
    }

    pub fn with_e(&self, e: f64) -> Result<Self> {
        Self::new(self.m, self.omega, e, self.kappa, self.q)
    }

    /// Screening mass of the neutral field, `kappa * q`.
    pub fn screening(&self) -> f64 {
        self.kappa * self.q
    }

    /// `1 + kappa q / 2m`, the factor multiplying every neutral-field coupling.
    pub fn neutral_factor(&self) -> f64 {
        1.0 + self.kappa * self.q / (2.0 * self.m)
    }

    /// `e^4 / (4 m kappa^2)`, prefactor of the Chern-Simons energy.
    pub fn cs_prefactor(&self) -> f64 {
        self.e.powi(4) / (4.0 * self.m * self.kappa * self.kappa)
    }

    /// `e^3 / (m kappa^2)`, prefactor of the electric potential.
    pub fn a0_prefactor(&self) -> f64 {
        self.e.powi(3) / (self.m * self.kappa * self.kappa)
    }
}
