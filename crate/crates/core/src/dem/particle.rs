//! Particle state: the DEM degree of freedom.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::Vec3;

/// A spherical particle. `mass` and `inertia` are derived from the radius and
/// material density at construction and kept consistent thereafter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub id: u32,
    pub position: Vec3,
    pub velocity: Vec3,
    pub angular_velocity: Vec3,
    pub radius: f64,
    pub mass: f64,
    pub inertia: f64,
    /// Cleared once the particle is produced/removed from the domain.
    pub alive: bool,
}

impl Particle {
    pub fn new(id: u32, position: Vec3, radius: f64, density: f64) -> Self {
        let mass = density * sphere_volume(radius);
        Self {
            id,
            position,
            velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            radius,
            mass,
            inertia: 0.4 * mass * radius * radius,
            alive: true,
        }
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn volume(&self) -> f64 {
        sphere_volume(self.radius)
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * self.velocity.norm_squared()
            + 0.5 * self.inertia * self.angular_velocity.norm_squared()
    }
}

pub fn sphere_volume(radius: f64) -> f64 {
    4.0 / 3.0 * PI * radius.powi(3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derived_mass_and_inertia() {
        let p = Particle::new(0, Vec3::zeros(), 2.5e-4, 2605.0);
        let expected_mass = 2605.0 * 4.0 / 3.0 * PI * 2.5e-4f64.powi(3);
        assert_relative_eq!(p.mass, expected_mass, max_relative = 1e-15);
        assert_relative_eq!(
            p.inertia,
            0.4 * expected_mass * 2.5e-4 * 2.5e-4,
            max_relative = 1e-15
        );
        assert!(p.alive);
    }
}
