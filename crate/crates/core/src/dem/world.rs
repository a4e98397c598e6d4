//! The assembled DEM system: particles, bonds, walls, contact history, and the
//! explicit time integrator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::bonds::BondRegistry;
use super::contact::{detect_contacts, pair_relative_velocity, Contact, ContactPair};
use super::forces::{
    cap_tangential, damping_coefficient, hertz_normal_force, hertz_stiffness, jkr_contact_radius,
    jkr_critical_radius, jkr_normal_force, pull_off_force,
};
use super::material::{effective_mass, effective_radius, MaterialParams};
use super::particle::Particle;
use super::walls::{WallBox, WallId};
use super::DemError;
use crate::Vec3;

/// Contacts below this count are always processed sequentially; the rayon
/// dispatch overhead dominates otherwise.
const PARALLEL_CONTACT_THRESHOLD: usize = 8192;

/// Key of the per-pair tangential-displacement history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HistoryKey {
    Pair(u32, u32),
    Wall(u32, WallId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemParams {
    /// Admissible fraction of the Rayleigh critical time step.
    pub rayleigh_fraction: f64,
    /// Ratio k_t/k_n of the tangential to normal contact stiffness.
    pub tangential_stiffness_ratio: f64,
    /// Allow data-parallel force evaluation. Results are identical either way:
    /// forces are computed in a map over the sorted contact list and reduced
    /// sequentially in list order.
    pub parallel: bool,
}

impl Default for DemParams {
    fn default() -> Self {
        Self {
            rayleigh_fraction: 0.25,
            tangential_stiffness_ratio: 2.0 / 7.0,
            parallel: false,
        }
    }
}

/// A bond that broke during a step, with the tensile force it carried.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondBreakEvent {
    pub i: u32,
    pub j: u32,
    pub tensile_force: f64,
}

/// Per-step outcome summary.
#[derive(Debug, Clone, Default)]
pub struct StepEvents {
    pub broken_bonds: Vec<BondBreakEvent>,
    /// Geometric particle-particle contacts this step (bonded or not).
    pub particle_contacts: usize,
    /// Particle-wall contacts this step.
    pub wall_contacts: usize,
}

/// The DEM solid phase.
#[derive(Debug, Clone)]
pub struct DemWorld {
    pub particles: Vec<Particle>,
    pub material: MaterialParams,
    pub bonds: BondRegistry,
    pub walls: WallBox,
    pub params: DemParams,
    /// Accumulated tangential displacement per active contact.
    pub(crate) tangential_history: BTreeMap<HistoryKey, Vec3>,
}

struct ContactOutcome {
    force_on_first: Vec3,
    torque_first: Vec3,
    torque_second: Vec3,
    normal_force_magnitude: f64,
    history: Option<(HistoryKey, Vec3)>,
}

impl DemWorld {
    pub fn new(
        particles: Vec<Particle>,
        material: MaterialParams,
        walls: WallBox,
        params: DemParams,
    ) -> Self {
        // Particle ids double as vector indices everywhere.
        for (idx, p) in particles.iter().enumerate() {
            assert_eq!(p.id as usize, idx, "particle ids must equal their index");
        }
        Self {
            particles,
            material,
            bonds: BondRegistry::new(),
            walls,
            params,
            tangential_history: BTreeMap::new(),
        }
    }

    pub fn alive_count(&self) -> usize {
        self.particles.iter().filter(|p| p.alive).count()
    }

    pub fn max_alive_diameter(&self) -> f64 {
        self.particles
            .iter()
            .filter(|p| p.alive)
            .map(|p| p.diameter())
            .fold(0.0, f64::max)
    }

    pub fn total_alive_mass(&self) -> f64 {
        self.particles
            .iter()
            .filter(|p| p.alive)
            .map(|p| p.mass)
            .sum()
    }

    pub fn total_solid_volume(&self) -> f64 {
        self.particles
            .iter()
            .filter(|p| p.alive)
            .map(|p| p.volume())
            .sum()
    }

    pub fn total_kinetic_energy(&self) -> f64 {
        self.particles
            .iter()
            .filter(|p| p.alive)
            .map(|p| p.kinetic_energy())
            .sum()
    }

    /// Porosity of the current wall box: `1 - solid volume / box volume`.
    pub fn porosity(&self) -> f64 {
        1.0 - self.total_solid_volume() / self.walls.volume()
    }

    /// Cement the sample: every geometrically contacting pair becomes a bond.
    /// Returns the number of bonds created.
    pub fn cement(&mut self) -> usize {
        let cutoff = self.max_alive_diameter();
        if cutoff == 0.0 {
            return 0;
        }
        let contacts = super::contact::pair_contacts_grid(&self.particles, cutoff);
        let mut created = 0;
        for c in &contacts {
            if let ContactPair::Particles(i, j) = c.pair {
                if self.bonds.bond(i, j) {
                    created += 1;
                }
            }
        }
        created
    }

    /// Remove a particle from the system (produced through the outlet).
    /// Its bonds are retired and it stops participating in any interaction.
    pub fn remove_particle(&mut self, id: u32) {
        let p = &mut self.particles[id as usize];
        debug_assert_eq!(p.id, id);
        p.alive = false;
        self.bonds.remove_particle(id);
    }

    /// One semi-implicit Euler step: `v += (f/m) dt`, then `x += v dt`, and the
    /// same for rotation. `external_forces\[i\]` must hold every non-contact
    /// force on particle i (gravity plus fluid forces); it is indexed by
    /// particle index and ignored for dead particles.
    pub fn step(&mut self, external_forces: &[Vec3], dt: f64) -> Result<StepEvents, DemError> {
        assert_eq!(external_forces.len(), self.particles.len());
        let (dt_c, ok) = check_dem_timestep(
            &self.particles,
            &self.material,
            dt,
            self.params.rayleigh_fraction,
        );
        if !ok {
            return Err(DemError::TimestepTooLarge {
                dt,
                limit: self.params.rayleigh_fraction * dt_c,
            });
        }

        self.walls.reset_accumulated_forces();
        let cutoff = self.max_alive_diameter();
        let contacts = detect_contacts(&self.particles, &self.walls, cutoff);

        let n = self.particles.len();
        let mut force = vec![Vec3::zeros(); n];
        let mut torque = vec![Vec3::zeros(); n];
        let mut events = StepEvents::default();
        let mut new_history: BTreeMap<HistoryKey, Vec3> = BTreeMap::new();

        // Unbonded contact pass: pure map over the sorted contact list, then a
        // sequential reduction in list order so results are independent of the
        // thread count.
        let outcomes: Vec<Option<ContactOutcome>> =
            if self.params.parallel && contacts.len() >= PARALLEL_CONTACT_THRESHOLD {
                contacts
                    .par_iter()
                    .map(|c| self.evaluate_contact(c, dt))
                    .collect()
            } else {
                contacts
                    .iter()
                    .map(|c| self.evaluate_contact(c, dt))
                    .collect()
            };

        for (contact, outcome) in contacts.iter().zip(outcomes) {
            match contact.pair {
                ContactPair::Particles(i, j) => {
                    events.particle_contacts += 1;
                    let Some(out) = outcome else { continue };
                    force[i as usize] += out.force_on_first;
                    force[j as usize] -= out.force_on_first;
                    torque[i as usize] += out.torque_first;
                    torque[j as usize] += out.torque_second;
                    if let Some((key, disp)) = out.history {
                        new_history.insert(key, disp);
                    }
                }
                ContactPair::Wall(i, wall_id) => {
                    events.wall_contacts += 1;
                    let Some(out) = outcome else { continue };
                    force[i as usize] += out.force_on_first;
                    torque[i as usize] += out.torque_first;
                    self.walls.wall_mut(wall_id).accumulated_force +=
                        out.normal_force_magnitude;
                    if let Some((key, disp)) = out.history {
                        new_history.insert(key, disp);
                    }
                }
            }
        }

        // Bond pass: cohesive pairs interact through the JKR law regardless of
        // geometric contact, and snap once the tensile maximum is passed.
        // Breakage events are applied at a single point after the loop.
        let e_star = self.material.effective_youngs_pair();
        let gamma = self.material.surface_energy_density;
        for &(i, j) in self.bonds.iter() {
            let pi = &self.particles[i as usize];
            let pj = &self.particles[j as usize];
            if !pi.alive || !pj.alive {
                continue;
            }
            let d = pj.position - pi.position;
            let dist = d.norm();
            if dist == 0.0 {
                continue;
            }
            let normal = d / dist;
            let overlap = pi.radius + pj.radius - dist;
            let r_star = effective_radius(pi.radius, pj.radius);
            let a_c = jkr_critical_radius(e_star, r_star, gamma);

            let Some(a) = jkr_contact_radius(overlap, e_star, r_star, gamma) else {
                // Stretched past the end of the JKR branch within one step;
                // the bond passed through its force maximum on the way.
                events.broken_bonds.push(BondBreakEvent {
                    i,
                    j,
                    tensile_force: pull_off_force(r_star, gamma),
                });
                continue;
            };
            let f_jkr = jkr_normal_force(a, e_star, r_star, gamma);
            if a < a_c && f_jkr < 0.0 {
                // Past the tensile maximum: brittle breakage.
                events.broken_bonds.push(BondBreakEvent {
                    i,
                    j,
                    tensile_force: f_jkr.abs(),
                });
                continue;
            }

            let m_star = effective_mass(pi.mass, pj.mass);
            let rel = pair_relative_velocity(pi, pj, &normal);
            let k_n = hertz_stiffness(a, e_star);
            let eta_n = damping_coefficient(self.material.restitution_coefficient, k_n, m_star);
            let v_n = rel.dot(&normal);
            let f_normal = -(f_jkr + eta_n * v_n) * normal;

            let key = HistoryKey::Pair(i, j);
            let (f_tangential, new_disp) =
                self.tangential_force(key, &normal, &rel, k_n, m_star, f_normal.norm(), dt);
            new_history.insert(key, new_disp);

            force[i as usize] += f_normal + f_tangential;
            force[j as usize] -= f_normal + f_tangential;
            torque[i as usize] += (pi.radius * normal).cross(&f_tangential);
            torque[j as usize] += (pj.radius * normal).cross(&f_tangential);
        }

        for ev in &events.broken_bonds {
            self.bonds.break_bond(ev.i, ev.j);
        }
        self.tangential_history = new_history;

        // Integration. Dead particles are skipped entirely.
        let integrate = |(p, (f, t)): (&mut Particle, (&Vec3, &Vec3))| {
            if !p.alive {
                return;
            }
            let idx = p.id as usize;
            let total = f + external_forces[idx];
            p.velocity += total / p.mass * dt;
            p.position += p.velocity * dt;
            p.angular_velocity += t / p.inertia * dt;
        };
        if self.params.parallel && n >= PARALLEL_CONTACT_THRESHOLD {
            self.particles
                .par_iter_mut()
                .zip(force.par_iter().zip(torque.par_iter()))
                .for_each(integrate);
        } else {
            self.particles
                .iter_mut()
                .zip(force.iter().zip(torque.iter()))
                .for_each(integrate);
        }

        Ok(events)
    }

    /// Hertzian normal force, dashpot, and tangential slider for an unbonded
    /// contact. Returns `None` for bonded pairs (handled by the bond pass).
    fn evaluate_contact(&self, contact: &Contact, dt: f64) -> Option<ContactOutcome> {
        match contact.pair {
            ContactPair::Particles(i, j) => {
                if self.bonds.is_bonded(i, j) {
                    return None;
                }
                let pi = &self.particles[i as usize];
                let pj = &self.particles[j as usize];
                let e_star = self.material.effective_youngs_pair();
                let r_star = effective_radius(pi.radius, pj.radius);
                let m_star = effective_mass(pi.mass, pj.mass);
                let a = (r_star * contact.overlap).sqrt();
                let k_n = hertz_stiffness(a, e_star);
                let eta_n =
                    damping_coefficient(self.material.restitution_coefficient, k_n, m_star);
                let f_hertz = hertz_normal_force(contact.overlap, e_star, r_star);
                let v_n = contact.relative_velocity.dot(&contact.normal);
                let f_normal = -(f_hertz + eta_n * v_n) * contact.normal;

                let key = HistoryKey::Pair(i, j);
                let (f_tangential, new_disp) = self.tangential_force(
                    key,
                    &contact.normal,
                    &contact.relative_velocity,
                    k_n,
                    m_star,
                    f_normal.norm(),
                    dt,
                );
                Some(ContactOutcome {
                    force_on_first: f_normal + f_tangential,
                    torque_first: (pi.radius * contact.normal).cross(&f_tangential),
                    torque_second: (pj.radius * contact.normal).cross(&f_tangential),
                    normal_force_magnitude: f_normal.norm(),
                    history: Some((key, new_disp)),
                })
            }
            ContactPair::Wall(i, wall_id) => {
                let p = &self.particles[i as usize];
                let e_star = self.material.effective_youngs_wall();
                let r_star = p.radius;
                let m_star = p.mass;
                let a = (r_star * contact.overlap).sqrt();
                let k_n = hertz_stiffness(a, e_star);
                let eta_n =
                    damping_coefficient(self.material.restitution_coefficient, k_n, m_star);
                let f_hertz = hertz_normal_force(contact.overlap, e_star, r_star);
                let v_n = contact.relative_velocity.dot(&contact.normal);
                let f_normal = -(f_hertz + eta_n * v_n) * contact.normal;

                let key = HistoryKey::Wall(i, wall_id);
                let (f_tangential, new_disp) = self.tangential_force(
                    key,
                    &contact.normal,
                    &contact.relative_velocity,
                    k_n,
                    m_star,
                    f_normal.norm(),
                    dt,
                );
                Some(ContactOutcome {
                    force_on_first: f_normal + f_tangential,
                    torque_first: (p.radius * contact.normal).cross(&f_tangential),
                    torque_second: Vec3::zeros(),
                    normal_force_magnitude: f_normal.norm(),
                    history: Some((key, new_disp)),
                })
            }
        }
    }

    /// Spring-dashpot-slider tangential force with Coulomb cap and history
    /// windup clamp. Returns the force on the first body and the updated
    /// accumulated displacement.
    fn tangential_force(
        &self,
        key: HistoryKey,
        normal: &Vec3,
        rel_velocity: &Vec3,
        k_n: f64,
        m_star: f64,
        normal_force: f64,
        dt: f64,
    ) -> (Vec3, Vec3) {
        let k_t = self.params.tangential_stiffness_ratio * k_n;
        let eta_t = damping_coefficient(self.material.restitution_coefficient, k_t, m_star);
        let v_n = rel_velocity.dot(normal);
        let v_t = rel_velocity - v_n * normal;

        let prev = self
            .tangential_history
            .get(&key)
            .copied()
            .unwrap_or_else(Vec3::zeros);
        // Keep the accumulated displacement in the current tangent plane.
        let mut disp = prev - prev.dot(normal) * normal;
        disp += v_t * dt;

        let trial = -(k_t * disp + eta_t * v_t);
        let limit = self.material.friction_coefficient * normal_force;
        let f_t = cap_tangential(trial, limit);
        // When sliding, rewind the spring so it carries exactly the Coulomb
        // force; prevents unbounded windup.
        if k_t > 0.0 && trial.norm() > limit {
            disp = -(f_t + eta_t * v_t) / k_t;
        }
        (f_t, disp)
    }
}

/// Rayleigh critical time step and admissibility of `dt`.
///
/// `dt_c = pi R_bar / beta * sqrt(rho_p / G)` with `beta = 0.8766 + 0.163 nu`
/// and `R_bar` the mass-weighted mean radius of the alive particles. The shear
/// modulus is taken as `G = E / (2(1 - nu))`; compared with the textbook
/// `E / (2(1 + nu))` this gives the smaller, more conservative critical step.
pub fn check_dem_timestep(
    particles: &[Particle],
    material: &MaterialParams,
    dt: f64,
    fraction: f64,
) -> (f64, bool) {
    let mut mass_sum = 0.0;
    let mut weighted_radius = 0.0;
    for p in particles.iter().filter(|p| p.alive) {
        mass_sum += p.mass;
        weighted_radius += p.mass * p.radius;
    }
    if mass_sum == 0.0 {
        return (f64::INFINITY, true);
    }
    let r_bar = weighted_radius / mass_sum;
    let beta = 0.8766 + 0.163 * material.poisson_ratio;
    let shear_modulus = material.youngs_modulus / (2.0 * (1.0 - material.poisson_ratio));
    let dt_c = std::f64::consts::PI * r_bar / beta * (material.density / shear_modulus).sqrt();
    (dt_c, dt <= fraction * dt_c)
}
