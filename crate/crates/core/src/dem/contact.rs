//! Broad-phase contact detection on a uniform cell grid.
//!
//! The cell edge is at least the search cutoff, so scanning the 27-cell
//! neighborhood finds exactly the pairs a brute-force all-pairs scan would.

use serde::{Deserialize, Serialize};

use super::bonds::pair_key;
use super::particle::Particle;
use super::walls::{WallBox, WallId, ALL_WALLS};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContactPair {
    /// Particle-particle contact, ids normalized (small first).
    Particles(u32, u32),
    Wall(u32, WallId),
}

/// One geometric contact. `normal` points from particle i toward particle j
/// (or from the particle into the wall); `overlap >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    pub pair: ContactPair,
    pub normal: Vec3,
    pub overlap: f64,
    /// Relative velocity of i with respect to j (or to the wall) at the
    /// contact point, including rotational contributions.
    pub relative_velocity: Vec3,
    /// Accumulated tangential displacement; filled in by the force pass from
    /// the contact history.
    pub tangential_displacement: Vec3,
}

/// Relative velocity of particle i with respect to particle j at the contact
/// point: `v_i - v_j + omega_i x (r_i n) + omega_j x (r_j n)`.
pub fn pair_relative_velocity(pi: &Particle, pj: &Particle, normal: &Vec3) -> Vec3 {
    pi.velocity - pj.velocity
        + pi.angular_velocity.cross(&(pi.radius * normal))
        + pj.angular_velocity.cross(&(pj.radius * normal))
}

/// Detect all particle-particle and particle-wall contacts.
///
/// `cutoff` must be at least the largest particle diameter; the cell grid then
/// reproduces the brute-force pair set exactly.
pub fn detect_contacts(particles: &[Particle], walls: &WallBox, cutoff: f64) -> Vec<Contact> {
    let mut contacts = pair_contacts_grid(particles, cutoff);
    contacts.extend(wall_contacts(particles, walls));
    contacts
}

/// Particle-particle contacts via the cell grid, sorted by pair id.
pub fn pair_contacts_grid(particles: &[Particle], cutoff: f64) -> Vec<Contact> {
    let alive: Vec<usize> = (0..particles.len())
        .filter(|&i| particles[i].alive)
        .collect();
    if alive.is_empty() {
        return Vec::new();
    }

    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for &i in &alive {
        lo = lo.inf(&particles[i].position);
        hi = hi.sup(&particles[i].position);
    }
    let edge = cutoff.max(1e-300);
    // A pathologically spread-out configuration (or a blown-up integration)
    // would ask for more cells than particles can usefully occupy; fall back
    // to the all-pairs scan rather than allocating a huge grid.
    let mut cell_total = 1.0f64;
    for a in 0..3 {
        cell_total *= ((hi[a] - lo[a]) / edge).floor() + 1.0;
    }
    if !cell_total.is_finite() || cell_total > (16 * alive.len().max(64)) as f64 {
        return pair_contacts_brute_force(particles);
    }
    let dims: [usize; 3] =
        core::array::from_fn(|a| (((hi[a] - lo[a]) / edge).floor() as usize + 1).max(1));
    let cell_of = |p: &Vec3| -> [usize; 3] {
        core::array::from_fn(|a| (((p[a] - lo[a]) / edge) as usize).min(dims[a] - 1))
    };
    let flat = |c: [usize; 3]| (c[2] * dims[1] + c[1]) * dims[0] + c[0];

    let mut cells: Vec<Vec<u32>> = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
    for &i in &alive {
        cells[flat(cell_of(&particles[i].position))].push(i as u32);
    }

    let mut contacts = Vec::new();
    for &i in &alive {
        let pi = &particles[i];
        let c = cell_of(&pi.position);
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let nx = c[0] as i64 + dx;
                    let ny = c[1] as i64 + dy;
                    let nz = c[2] as i64 + dz;
                    if nx < 0
                        || ny < 0
                        || nz < 0
                        || nx >= dims[0] as i64
                        || ny >= dims[1] as i64
                        || nz >= dims[2] as i64
                    {
                        continue;
                    }
                    for &j in &cells[flat([nx as usize, ny as usize, nz as usize])] {
                        let j = j as usize;
                        if j <= i {
                            continue;
                        }
                        if let Some(contact) = try_pair(pi, &particles[j]) {
                            contacts.push(contact);
                        }
                    }
                }
            }
        }
    }
    contacts.sort_by(|a, b| a.pair.cmp(&b.pair));
    contacts
}

/// Brute-force all-pairs scan; the oracle the cell grid must match.
pub fn pair_contacts_brute_force(particles: &[Particle]) -> Vec<Contact> {
    let mut contacts = Vec::new();
    for i in 0..particles.len() {
        if !particles[i].alive {
            continue;
        }
        for j in (i + 1)..particles.len() {
            if !particles[j].alive {
                continue;
            }
            if let Some(contact) = try_pair(&particles[i], &particles[j]) {
                contacts.push(contact);
            }
        }
    }
    contacts.sort_by(|a, b| a.pair.cmp(&b.pair));
    contacts
}

fn try_pair(pi: &Particle, pj: &Particle) -> Option<Contact> {
    let d = pj.position - pi.position;
    let dist = d.norm();
    let overlap = pi.radius + pj.radius - dist;
    if overlap < 0.0 || dist == 0.0 {
        return None;
    }
    let normal = d / dist;
    let (a, b) = pair_key(pi.id, pj.id);
    // Normal always points from the smaller id to the larger.
    let normal = if a == pi.id { normal } else { -normal };
    let (first, second) = if a == pi.id { (pi, pj) } else { (pj, pi) };
    Some(Contact {
        pair: ContactPair::Particles(a, b),
        normal,
        overlap,
        relative_velocity: pair_relative_velocity(first, second, &normal),
        tangential_displacement: Vec3::zeros(),
    })
}

/// Particle-wall contacts, in (particle, wall) order.
pub fn wall_contacts(particles: &[Particle], walls: &WallBox) -> Vec<Contact> {
    let mut contacts = Vec::new();
    for p in particles.iter().filter(|p| p.alive) {
        for id in ALL_WALLS {
            let wall = walls.wall(id);
            if let Some(overlap) = wall.overlap(&p.position, p.radius) {
                let normal = wall.outward_normal();
                let rel = p.velocity - wall.velocity_vector()
                    + p.angular_velocity.cross(&(p.radius * normal));
                contacts.push(Contact {
                    pair: ContactPair::Wall(p.id, id),
                    normal,
                    overlap,
                    relative_velocity: rel,
                    tangential_displacement: Vec3::zeros(),
                });
            }
        }
    }
    contacts
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn particle(id: u32, x: f64, y: f64, z: f64, r: f64) -> Particle {
        Particle::new(id, Vec3::new(x, y, z), r, 2605.0)
    }

    #[test]
    fn separated_pair_has_no_contact() {
        // Radii 0.25 mm, centers 0.6 mm apart: gap of 0.1 mm.
        let ps = vec![
            particle(0, 0.0, 0.0, 0.0, 2.5e-4),
            particle(1, 6e-4, 0.0, 0.0, 2.5e-4),
        ];
        let walls = WallBox::fixed(Vec3::repeat(-1.0), Vec3::repeat(1.0));
        assert!(detect_contacts(&ps, &walls, 1e-3).is_empty());
    }

    #[test]
    fn touching_pair_overlap() {
        // Same radii at 0.45 mm separation: overlap 0.05 mm.
        let ps = vec![
            particle(0, 0.0, 0.0, 0.0, 2.5e-4),
            particle(1, 4.5e-4, 0.0, 0.0, 2.5e-4),
        ];
        let walls = WallBox::fixed(Vec3::repeat(-1.0), Vec3::repeat(1.0));
        let contacts = detect_contacts(&ps, &walls, 1e-3);
        assert_eq!(contacts.len(), 1);
        assert_eq!(contacts[0].pair, ContactPair::Particles(0, 1));
        assert_abs_diff_eq!(contacts[0].overlap, 5e-5, epsilon = 1e-15);
    }

    #[test]
    fn grid_matches_brute_force_on_random_packs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..5 {
            let n = 100 + case * 80; // up to 420 particles
            let ps: Vec<Particle> = (0..n)
                .map(|id| {
                    particle(
                        id as u32,
                        rng.gen_range(0.0..5e-3),
                        rng.gen_range(0.0..5e-3),
                        rng.gen_range(0.0..5e-3),
                        rng.gen_range(1.5e-4..3.55e-4),
                    )
                })
                .collect();
            let cutoff = 2.0 * 3.55e-4;
            let grid = pair_contacts_grid(&ps, cutoff);
            let brute = pair_contacts_brute_force(&ps);
            assert_eq!(grid.len(), brute.len());
            for (g, b) in grid.iter().zip(&brute) {
                assert_eq!(g.pair, b.pair);
                assert_eq!(g.overlap, b.overlap);
            }
        }
    }

    #[test]
    fn dead_particles_are_invisible() {
        let mut ps = vec![
            particle(0, 0.0, 0.0, 0.0, 2.5e-4),
            particle(1, 4.5e-4, 0.0, 0.0, 2.5e-4),
        ];
        ps[1].alive = false;
        let walls = WallBox::fixed(Vec3::repeat(-1.0), Vec3::repeat(1.0));
        assert!(detect_contacts(&ps, &walls, 1e-3).is_empty());
    }
}
