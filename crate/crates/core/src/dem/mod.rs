//! Discrete-element solid phase: particle state, neighbor search, contact laws
//! (Hertz and JKR with brittle bond breakage), servo-controlled walls, and
//! explicit time integration under the Rayleigh step limit.

pub mod bonds;
pub mod contact;
pub mod forces;
pub mod material;
pub mod particle;
pub mod walls;
pub mod world;

pub use bonds::{pair_key, BondPair, BondRegistry};
pub use contact::{detect_contacts, Contact, ContactPair};
pub use forces::{
    damping_coefficient, hertz_normal_force, jkr_contact_radius, jkr_critical_radius,
    jkr_normal_force, jkr_overlap, linear_contact_force, pull_off_force,
};
pub use material::{effective_mass, effective_radius, MaterialParams};
pub use particle::{sphere_volume, Particle};
pub use walls::{ServoWall, WallAperture, WallBox, WallId, ALL_WALLS};
pub use world::{check_dem_timestep, BondBreakEvent, DemParams, DemWorld, StepEvents};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DemError {
    #[error("DEM time step {dt} s exceeds the admissible limit {limit} s")]
    TimestepTooLarge { dt: f64, limit: f64 },
    #[error("servo update on fixed wall {0:?}")]
    FixedWall(WallId),
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn table_material() -> MaterialParams {
        MaterialParams {
            density: 2605.0,
            youngs_modulus: 2e10,
            poisson_ratio: 0.3,
            surface_energy_density: 60.0,
            friction_coefficient: 0.2,
            restitution_coefficient: 0.8,
        }
    }

    fn open_box() -> WallBox {
        WallBox::fixed(Vec3::repeat(-1.0), Vec3::repeat(1.0))
    }

    fn table5_radii() -> Vec<f64> {
        [0.3e-3, 0.36e-3, 0.4e-3, 0.44e-3, 0.5e-3, 0.55e-3, 0.6e-3, 0.71e-3]
            .iter()
            .map(|d| d / 2.0)
            .collect()
    }

    fn table5_fractions() -> Vec<f64> {
        vec![0.058, 0.075, 0.088, 0.1216, 0.2264, 0.1705, 0.121, 0.1395]
    }

    #[test]
    fn rayleigh_beta_value() {
        // beta = 0.8766 + 0.163 * 0.3
        let p = vec![Particle::new(0, Vec3::zeros(), 1e-3, 2605.0)];
        let (dt_c, _) = check_dem_timestep(&p, &table_material(), 1e-9, 0.25);
        let beta = 0.8766 + 0.163 * 0.3;
        assert_relative_eq!(beta, 0.9255, max_relative = 1e-12);
        let g = 2e10 / (2.0 * 0.7);
        let expect = std::f64::consts::PI * 1e-3 / beta * (2605.0f64 / g).sqrt();
        assert_relative_eq!(dt_c, expect, max_relative = 1e-12);
    }

    #[test]
    fn rayleigh_for_reference_psd() {
        // One particle per size class, weighted by class mass fraction via
        // duplicated mass weighting: build a pack whose mass-weighted mean
        // radius equals sum(f_i d_i)/2 by construction.
        let radii = table5_radii();
        let fractions = table5_fractions();
        // counts proportional to f_i / r_i^3 give mass weights ~ f_i
        let mut particles = Vec::new();
        let mut id = 0u32;
        for (r, f) in radii.iter().zip(&fractions) {
            let count = (1e4 * f / r.powi(3) * 1e-12).round().max(1.0) as usize;
            for _ in 0..count {
                particles.push(Particle::new(id, Vec3::zeros(), *r, 2605.0));
                id += 1;
            }
        }
        let (dt_c, ok) = check_dem_timestep(&particles, &table_material(), 5e-8, 0.25);
        // Direct evaluation with the mass-weighted mean radius 0.25586 mm
        // gives 3.709e-7 s; the integer class counts land close to it.
        assert_relative_eq!(dt_c, 3.708788979079853e-7, max_relative = 2e-3);
        assert!(ok, "5e-8 s must sit below a quarter of the Rayleigh step");
        assert!(5e-8 < 0.25 * dt_c);
    }

    #[test]
    fn rayleigh_scales_linearly_with_radius() {
        let p1 = vec![Particle::new(0, Vec3::zeros(), 1e-3, 2605.0)];
        let p2 = vec![Particle::new(0, Vec3::zeros(), 2e-3, 2605.0)];
        let (a, _) = check_dem_timestep(&p1, &table_material(), 1e-9, 0.25);
        let (b, _) = check_dem_timestep(&p2, &table_material(), 1e-9, 0.25);
        assert_relative_eq!(b / a, 2.0, max_relative = 1e-12);
    }

    /// Material soft enough that a 1 ms step passes the Rayleigh gate.
    fn soft_material() -> MaterialParams {
        MaterialParams {
            youngs_modulus: 1e3,
            ..table_material()
        }
    }

    #[test]
    fn free_fall_single_step() {
        let p = Particle::new(0, Vec3::zeros(), 1e-3, 2605.0);
        let mass = p.mass;
        let mut world = DemWorld::new(vec![p], soft_material(), open_box(), DemParams::default());
        let gravity = Vec3::new(0.0, 0.0, -9.81 * mass);
        world.step(&[gravity], 1e-3).unwrap();
        let p = &world.particles[0];
        assert_relative_eq!(p.velocity.z, -9.81e-3, max_relative = 1e-12);
        assert_relative_eq!(p.position.z, -9.81e-6, max_relative = 1e-12);
    }

    #[test]
    fn zero_forces_is_a_fixed_point() {
        let p = Particle::new(0, Vec3::new(0.1, 0.2, 0.3), 1e-3, 2605.0);
        let mut world = DemWorld::new(vec![p], soft_material(), open_box(), DemParams::default());
        let before = world.particles[0].clone();
        for _ in 0..10 {
            world.step(&[Vec3::zeros()], 1e-3).unwrap();
        }
        assert_eq!(world.particles[0], before);
    }

    #[test]
    fn timestep_gate_rejects_large_dt() {
        let p = Particle::new(0, Vec3::zeros(), 1e-4, 2605.0);
        let mut world = DemWorld::new(vec![p], table_material(), open_box(), DemParams::default());
        let err = world.step(&[Vec3::zeros()], 1.0).unwrap_err();
        assert!(matches!(err, DemError::TimestepTooLarge { .. }));
    }

    #[test]
    fn newtons_third_law_on_random_cluster() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let particles: Vec<Particle> = (0..120)
            .map(|id| {
                let mut p = Particle::new(
                    id,
                    Vec3::new(
                        rng.gen_range(0.0..2.0e-3),
                        rng.gen_range(0.0..2.0e-3),
                        rng.gen_range(0.0..2.0e-3),
                    ),
                    rng.gen_range(1.0e-4..2.5e-4),
                    2605.0,
                );
                p.velocity = Vec3::new(
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(-0.1..0.1),
                );
                p
            })
            .collect();
        // Far-away walls: only particle-particle interactions act.
        let mut world = DemWorld::new(
            particles,
            table_material(),
            open_box(),
            DemParams::default(),
        );
        // Capture net momentum change over one unforced step; internal forces
        // must cancel pairwise.
        let momentum_before: Vec3 = world
            .particles
            .iter()
            .map(|p| p.mass * p.velocity)
            .sum();
        let zeros = vec![Vec3::zeros(); world.particles.len()];
        let events = world.step(&zeros, 1e-8).unwrap();
        assert!(events.particle_contacts > 0, "cluster must overlap");
        let momentum_after: Vec3 = world
            .particles
            .iter()
            .map(|p| p.mass * p.velocity)
            .sum();
        let scale: f64 = world
            .particles
            .iter()
            .map(|p| (p.mass * p.velocity).norm())
            .sum();
        assert!(
            (momentum_after - momentum_before).norm() <= 1e-10 * scale,
            "net internal impulse {:?} vs scale {scale}",
            momentum_after - momentum_before
        );
    }

    #[test]
    fn kinetic_energy_dissipates_in_closed_box() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let spacing = 4.5e-4;
        let particles: Vec<Particle> = (0..27)
            .map(|id| {
                let i = id % 3;
                let j = (id / 3) % 3;
                let k = id / 9;
                let mut p = Particle::new(
                    id as u32,
                    Vec3::new(
                        2.25e-4 + i as f64 * spacing,
                        2.25e-4 + j as f64 * spacing,
                        2.25e-4 + k as f64 * spacing,
                    ),
                    2e-4,
                    2605.0,
                );
                p.velocity = Vec3::new(
                    rng.gen_range(-0.2..0.2),
                    rng.gen_range(-0.2..0.2),
                    rng.gen_range(-0.2..0.2),
                );
                p
            })
            .collect();
        let walls = WallBox::fixed(Vec3::zeros(), Vec3::repeat(2.0 * spacing + 2.25e-4 + 4.5e-4));
        let mut world = DemWorld::new(
            particles,
            // Soften the contacts so a few thousand steps cover several
            // well-resolved collisions.
            MaterialParams {
                youngs_modulus: 1e8,
                ..table_material()
            },
            walls,
            DemParams::default(),
        );
        let zeros = vec![Vec3::zeros(); world.particles.len()];
        let ke0 = world.total_kinetic_energy();
        let (dt_c, _) = check_dem_timestep(&world.particles, &world.material, 0.0, 0.25);
        let dt = 0.05 * dt_c;
        let mut max_ke: f64 = 0.0;
        for _ in 0..8000 {
            world.step(&zeros, dt).unwrap();
            max_ke = max_ke.max(world.total_kinetic_energy());
        }
        let ke_end = world.total_kinetic_energy();
        // No energy creation (starting from zero overlap, elastic energy is
        // bounded by the initial kinetic energy) and visible dissipation.
        assert!(max_ke <= ke0 * (1.0 + 1e-6), "max {} vs {}", max_ke, ke0);
        assert!(ke_end < 0.9 * ke0, "end {} vs {}", ke_end, ke0);
    }

    #[test]
    fn bonded_pair_breaks_at_pull_off() {
        // Two huge-density bonded particles pulled apart kinematically; the
        // recorded breakage force must land on 3 pi gamma R* within 1%.
        let r = 2.5e-4;
        let density = 1e15; // quasi-static: contact forces barely move them
        let mut pi = Particle::new(0, Vec3::zeros(), r, density);
        let mut pj = Particle::new(1, Vec3::new(2.0 * r - 1e-8, 0.0, 0.0), r, density);
        let pull = 2.5e-3; // m/s, each particle
        pi.velocity = Vec3::new(-pull, 0.0, 0.0);
        pj.velocity = Vec3::new(pull, 0.0, 0.0);
        let mut world = DemWorld::new(
            vec![pi, pj],
            table_material(),
            open_box(),
            DemParams::default(),
        );
        world.bonds.bond(0, 1);
        let zeros = vec![Vec3::zeros(); 2];
        let expected = pull_off_force(r / 2.0, 60.0);
        let mut recorded = None;
        for _ in 0..100_000 {
            // Kinematic driving: reset the pull velocities each step.
            world.particles[0].velocity = Vec3::new(-pull, 0.0, 0.0);
            world.particles[1].velocity = Vec3::new(pull, 0.0, 0.0);
            let ev = world.step(&zeros, 5e-8).unwrap();
            if let Some(b) = ev.broken_bonds.first() {
                recorded = Some(b.tensile_force);
                break;
            }
        }
        let force = recorded.expect("bond must break under separation");
        assert_relative_eq!(force, expected, max_relative = 0.01);
        assert_eq!(world.bonds.bond_count(), 0);
        assert_eq!(world.bonds.broken_count(), 1);
    }

    #[test]
    fn bond_count_monotone_under_stepping() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        let particles: Vec<Particle> = (0..40)
            .map(|id| {
                let mut p = Particle::new(
                    id,
                    Vec3::new(
                        rng.gen_range(0.0..1.2e-3),
                        rng.gen_range(0.0..1.2e-3),
                        rng.gen_range(0.0..1.2e-3),
                    ),
                    1.5e-4,
                    2605.0,
                );
                p.velocity = Vec3::new(
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(-0.05..0.05),
                );
                p
            })
            .collect();
        let mut world = DemWorld::new(
            particles,
            MaterialParams {
                surface_energy_density: 0.01, // weak cement: breakage expected
                youngs_modulus: 1e8,
                ..table_material()
            },
            open_box(),
            DemParams::default(),
        );
        world.cement();
        let mut last = world.bonds.bond_count();
        let initial = last;
        let zeros = vec![Vec3::zeros(); world.particles.len()];
        let (dt_c, _) = check_dem_timestep(&world.particles, &world.material, 0.0, 0.25);
        for _ in 0..3000 {
            world.step(&zeros, 0.1 * dt_c).unwrap();
            let now = world.bonds.bond_count();
            assert!(now <= last, "bond count must never grow");
            last = now;
        }
        assert!(initial > 0);
    }

    #[test]
    fn cement_bonds_only_contacting_pairs() {
        let particles = vec![
            Particle::new(0, Vec3::zeros(), 2.5e-4, 2605.0),
            Particle::new(1, Vec3::new(4.5e-4, 0.0, 0.0), 2.5e-4, 2605.0),
            Particle::new(2, Vec3::new(5.0e-3, 0.0, 0.0), 2.5e-4, 2605.0),
        ];
        let mut world = DemWorld::new(
            particles,
            table_material(),
            open_box(),
            DemParams::default(),
        );
        assert_eq!(world.cement(), 1);
        assert!(world.bonds.is_bonded(0, 1));
        assert!(!world.bonds.is_bonded(1, 2));
    }

    #[test]
    fn separated_particles_cement_to_zero_bonds() {
        let particles = vec![
            Particle::new(0, Vec3::zeros(), 1e-4, 2605.0),
            Particle::new(1, Vec3::new(1.0e-3, 0.0, 0.0), 1e-4, 2605.0),
        ];
        let mut world = DemWorld::new(
            particles,
            table_material(),
            open_box(),
            DemParams::default(),
        );
        assert_eq!(world.cement(), 0);
    }

    #[test]
    fn removed_particle_leaves_all_accounting() {
        let particles = vec![
            Particle::new(0, Vec3::zeros(), 2.5e-4, 2605.0),
            Particle::new(1, Vec3::new(4.5e-4, 0.0, 0.0), 2.5e-4, 2605.0),
        ];
        let mut world = DemWorld::new(
            particles,
            table_material(),
            open_box(),
            DemParams::default(),
        );
        world.cement();
        let solid_before = world.total_solid_volume();
        world.remove_particle(1);
        assert_eq!(world.bonds.bond_count(), 0);
        assert!(world.total_solid_volume() < solid_before);
        let zeros = vec![Vec3::zeros(); 2];
        let ev = world.step(&zeros, 5e-8).unwrap();
        assert_eq!(ev.particle_contacts, 0);
        let dead = &world.particles[1];
        assert!(!dead.alive);
    }

    #[test]
    fn free_fall_energy_example_abs() {
        // Position after one semi-implicit step uses the updated velocity.
        let p = Particle::new(0, Vec3::zeros(), 1e-3, 2605.0);
        let m = p.mass;
        let mut w = DemWorld::new(vec![p], soft_material(), open_box(), DemParams::default());
        w.step(&[Vec3::new(0.0, 0.0, -9.81 * m)], 1e-3).unwrap();
        assert_abs_diff_eq!(w.particles[0].position.z, -9.81e-6, epsilon = 1e-18);
    }
}
