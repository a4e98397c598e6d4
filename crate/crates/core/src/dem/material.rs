//! Particle material parameters and effective pair properties.

use serde::{Deserialize, Serialize};

use super::DemError;

/// Material parameters shared by all particles in a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Particle density (kg/m^3).
    pub density: f64,
    /// Young's modulus (Pa).
    pub youngs_modulus: f64,
    /// Poisson's ratio, in (0, 0.5).
    pub poisson_ratio: f64,
    /// Surface energy density of cemented contacts (J/m^2).
    pub surface_energy_density: f64,
    /// Sliding friction coefficient.
    pub friction_coefficient: f64,
    /// Restitution coefficient, in (0, 1].
    pub restitution_coefficient: f64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), DemError> {
        let positive = [
            ("density", self.density),
            ("youngs_modulus", self.youngs_modulus),
            ("surface_energy_density", self.surface_energy_density),
            ("friction_coefficient", self.friction_coefficient),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(DemError::InvalidMaterial(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return Err(DemError::InvalidMaterial(format!(
                "poisson_ratio must lie in (0, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        if !(self.restitution_coefficient > 0.0 && self.restitution_coefficient <= 1.0) {
            return Err(DemError::InvalidMaterial(format!(
                "restitution_coefficient must lie in (0, 1], got {}",
                self.restitution_coefficient
            )));
        }
        Ok(())
    }

    /// Effective Young's modulus for a contact between two particles of this
    /// material: `1/E* = (1-nu^2)/E + (1-nu^2)/E`.
    pub fn effective_youngs_pair(&self) -> f64 {
        let compliance = (1.0 - self.poisson_ratio * self.poisson_ratio) / self.youngs_modulus;
        1.0 / (2.0 * compliance)
    }

    /// Effective Young's modulus for a particle against a rigid wall.
    pub fn effective_youngs_wall(&self) -> f64 {
        self.youngs_modulus / (1.0 - self.poisson_ratio * self.poisson_ratio)
    }
}

/// Effective radius of two contacting spheres.
pub fn effective_radius(r_i: f64, r_j: f64) -> f64 {
    r_i * r_j / (r_i + r_j)
}

/// Effective mass of a contacting pair.
pub fn effective_mass(m_i: f64, m_j: f64) -> f64 {
    m_i * m_j / (m_i + m_j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub fn table_material() -> MaterialParams {
        MaterialParams {
            density: 2605.0,
            youngs_modulus: 2e10,
            poisson_ratio: 0.3,
            surface_energy_density: 60.0,
            friction_coefficient: 0.2,
            restitution_coefficient: 0.8,
        }
    }

    #[test]
    fn effective_modulus_same_material() {
        let m = table_material();
        assert_relative_eq!(
            m.effective_youngs_pair(),
            1.0989010989010989e10,
            max_relative = 1e-12
        );
        assert!(m.effective_youngs_wall() > m.effective_youngs_pair());
    }

    #[test]
    fn effective_radius_equal_spheres_is_half() {
        assert_relative_eq!(effective_radius(2.5e-4, 2.5e-4), 1.25e-4);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut m = table_material();
        m.poisson_ratio = 0.5;
        assert!(m.validate().is_err());
        let mut m = table_material();
        m.restitution_coefficient = 0.0;
        assert!(m.validate().is_err());
        let mut m = table_material();
        m.density = -1.0;
        assert!(m.validate().is_err());
        assert!(table_material().validate().is_ok());
    }
}
