//! Drag closure for creeping flow of a power-law fluid around a sphere.

use crate::Vec3;

/// Shape factor of the power-law drag coefficient:
/// `chi(n) = 6^((n-1)/2) * (3 / (n^2 + n + 1))^(n+1)`.
///
/// Equals 1 exactly in the Newtonian limit.
pub fn chi(n: f64) -> f64 {
    6f64.powf((n - 1.0) / 2.0) * (3.0 / (n * n + n + 1.0)).powf(n + 1.0)
}

/// Particle Reynolds number of a power-law fluid:
/// `Re_p = rho_f d_p^n |du|^(2-n) / k`; zero at zero slip velocity.
pub fn particle_reynolds(rho_f: f64, d_p: f64, slip_speed: f64, k: f64, n: f64) -> f64 {
    if slip_speed == 0.0 {
        return 0.0;
    }
    rho_f * d_p.powf(n) * slip_speed.powf(2.0 - n) / k
}

/// Drag force on a sphere in creeping power-law flow.
///
/// The closure chain `f_d = pi d^2 (rho/8) |du| du C_d` with
/// `C_d = 24 chi(n) / Re_p` collapses algebraically to
/// `f_d = 3 pi chi(n) k d^(2-n) |du|^(n-1) du`, which avoids the 0/0 at zero
/// slip; the magnitude scales as `|du|^n`, so the force vanishes continuously.
/// For n = 1 this is exactly Stokes drag `3 pi mu d du`.
pub fn drag_force(
    rho_f: f64,
    d_p: f64,
    fluid_velocity: Vec3,
    particle_velocity: Vec3,
    k: f64,
    n: f64,
) -> Vec3 {
    let _ = rho_f; // cancels out of the creeping-flow closure
    let slip = fluid_velocity - particle_velocity;
    let speed = slip.norm();
    if speed == 0.0 {
        return Vec3::zeros();
    }
    3.0 * std::f64::consts::PI * chi(n) * k * d_p.powf(2.0 - n) * speed.powf(n - 1.0) * slip
}
