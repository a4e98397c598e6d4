//! Contact force laws: linear spring-dashpot-slider, Hertz, and the cohesive
//! JKR law with brittle breakage at the pull-off force.
//!
//! Sign conventions: contact normals point from particle i to particle j (or
//! from a particle into a wall). Scalar normal forces are positive in
//! repulsion; the JKR force goes negative under net adhesion.

use std::f64::consts::PI;

use crate::Vec3;

/// Relative tolerance of the JKR overlap -> contact-radius inversion.
const JKR_INVERSION_TOL: f64 = 1e-12;

/// Hertzian normal force magnitude `(4/3) E* sqrt(R*) delta^(3/2)`.
pub fn hertz_normal_force(overlap: f64, e_star: f64, r_star: f64) -> f64 {
    if overlap <= 0.0 {
        return 0.0;
    }
    4.0 / 3.0 * e_star * r_star.sqrt() * overlap.powf(1.5)
}

/// Hertz tangent stiffness dF/d(delta) at the given overlap, expressed through
/// the contact radius `a = sqrt(R* delta)`: `k_n = 2 E* a`.
pub fn hertz_stiffness(contact_radius: f64, e_star: f64) -> f64 {
    2.0 * e_star * contact_radius
}

/// JKR normal force as a function of the contact radius:
/// `4 E* a^3 / (3 R*) - sqrt(16 pi gamma E* a^3)`.
///
/// Negative values denote net attraction. With `gamma = 0` this reduces to the
/// Hertz force for the same contact radius.
pub fn jkr_normal_force(contact_radius: f64, e_star: f64, r_star: f64, gamma: f64) -> f64 {
    let a3 = contact_radius.powi(3);
    4.0 * e_star * a3 / (3.0 * r_star) - (16.0 * PI * gamma * e_star * a3).sqrt()
}

/// Maximum tensile force a JKR contact sustains: `3 pi gamma R*`.
///
/// A bond breaks, irreversibly, once its tensile force reaches this magnitude.
pub fn pull_off_force(r_star: f64, gamma: f64) -> f64 {
    3.0 * PI * gamma * r_star
}

/// Contact radius at which the JKR force attains its tensile maximum
/// (`-3 pi gamma R*`): `a_c = (9 pi gamma R*^2 / (4 E*))^(1/3)`.
pub fn jkr_critical_radius(e_star: f64, r_star: f64, gamma: f64) -> f64 {
    (9.0 * PI * gamma * r_star * r_star / (4.0 * e_star)).cbrt()
}

/// Smallest contact radius on the displacement-stable JKR branch,
/// `a_min = (pi gamma R*^2 / (4 E*))^(1/3)`, where d(delta)/da vanishes.
pub fn jkr_min_radius(e_star: f64, r_star: f64, gamma: f64) -> f64 {
    (PI * gamma * r_star * r_star / (4.0 * e_star)).cbrt()
}

/// JKR overlap as a function of contact radius:
/// `delta = a^2/R* - sqrt(4 pi gamma a / E*)`.
pub fn jkr_overlap(contact_radius: f64, e_star: f64, r_star: f64, gamma: f64) -> f64 {
    contact_radius * contact_radius / r_star
        - (4.0 * PI * gamma * contact_radius / e_star).sqrt()
}

/// Invert the JKR overlap relation on the branch `a >= a_min` by safeguarded
/// Newton iteration with a bisection fallback.
///
/// Returns `None` when the requested overlap lies below the minimum the JKR
/// curve supports (the contact has geometrically detached).
pub fn jkr_contact_radius(overlap: f64, e_star: f64, r_star: f64, gamma: f64) -> Option<f64> {
    if gamma == 0.0 {
        return if overlap >= 0.0 {
            Some((r_star * overlap).sqrt())
        } else {
            None
        };
    }
    let a_min = jkr_min_radius(e_star, r_star, gamma);
    let g = |a: f64| jkr_overlap(a, e_star, r_star, gamma) - overlap;
    if g(a_min) > 0.0 {
        return None;
    }

    // Bracket the root: grow the upper bound until the overlap is exceeded.
    let mut hi = 2.0 * a_min + (r_star * overlap.max(0.0)).sqrt();
    for _ in 0..200 {
        if g(hi) >= 0.0 {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = a_min;
    let mut a = 0.5 * (lo + hi);
    for _ in 0..200 {
        let ga = g(a);
        if ga > 0.0 {
            hi = a;
        } else {
            lo = a;
        }
        let slope = 2.0 * a / r_star - (PI * gamma / (e_star * a)).sqrt();
        let newton = a - ga / slope;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - a).abs() <= JKR_INVERSION_TOL * next.abs() {
            return Some(next);
        }
        a = next;
    }
    Some(a)
}

/// Linear spring-dashpot-slider contact law.
///
/// Returns `(normal, tangential)` force vectors acting on particle i, given the
/// unit normal i -> j, the overlap, the relative velocity of i with respect to
/// j at the contact point, and the accumulated tangential displacement. The
/// tangential magnitude is capped by the Coulomb limit `mu |f_n|`.
pub fn linear_contact_force(
    normal: Vec3,
    overlap: f64,
    rel_velocity: Vec3,
    tangential_disp: Vec3,
    k_n: f64,
    k_t: f64,
    eta_n: f64,
    eta_t: f64,
    mu: f64,
) -> (Vec3, Vec3) {
    let v_n = rel_velocity.dot(&normal);
    let f_normal = -(k_n * overlap + eta_n * v_n) * normal;
    let v_t = rel_velocity - v_n * normal;
    let trial = -(k_t * tangential_disp + eta_t * v_t);
    let f_tangential = cap_tangential(trial, mu * f_normal.norm());
    (f_normal, f_tangential)
}

/// Clamp a trial tangential force to the Coulomb limit, preserving direction.
pub fn cap_tangential(trial: Vec3, coulomb_limit: f64) -> Vec3 {
    let mag = trial.norm();
    if mag > coulomb_limit && mag > 0.0 {
        trial * (coulomb_limit / mag)
    } else {
        trial
    }
}

/// Dashpot coefficient reproducing the given restitution for a linear contact,
/// via the logarithmic-decrement relation:
/// `eta = 2 |ln e| sqrt(m* k / (pi^2 + ln^2 e))`.
pub fn damping_coefficient(restitution: f64, stiffness: f64, m_star: f64) -> f64 {
    if restitution >= 1.0 {
        return 0.0;
    }
    let ln_e = restitution.ln();
    2.0 * ln_e.abs() * (m_star * stiffness / (PI * PI + ln_e * ln_e)).sqrt()
}
