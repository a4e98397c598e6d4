//! Planar boundary walls with optional stress servo control.

use serde::{Deserialize, Serialize};

use super::DemError;
use crate::Vec3;

/// Identifies one of the six box walls. The index order is the serialization
/// and iteration order everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WallId {
    XMin = 0,
    XMax = 1,
    YMin = 2,
    YMax = 3,
    ZMin = 4,
    ZMax = 5,
}

pub const ALL_WALLS: [WallId; 6] = [
    WallId::XMin,
    WallId::XMax,
    WallId::YMin,
    WallId::YMax,
    WallId::ZMin,
    WallId::ZMax,
];

impl WallId {
    pub fn axis(self) -> usize {
        match self {
            WallId::XMin | WallId::XMax => 0,
            WallId::YMin | WallId::YMax => 1,
            WallId::ZMin | WallId::ZMax => 2,
        }
    }

    /// Outward unit normal (pointing out of the domain).
    pub fn outward_normal(self) -> Vec3 {
        let mut n = Vec3::zeros();
        let sign = match self {
            WallId::XMin | WallId::YMin | WallId::ZMin => -1.0,
            _ => 1.0,
        };
        n[self.axis()] = sign;
        n
    }
}

/// Circular aperture in a wall plane. Particles whose center projects inside
/// the circle do not contact the wall (and may exit through it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallAperture {
    /// Point on the wall plane marking the hole axis.
    pub center: Vec3,
    pub radius: f64,
}

impl WallAperture {
    /// In-plane distance from the hole axis for a point.
    pub fn axis_distance(&self, wall: WallId, point: &Vec3) -> f64 {
        let axis = wall.axis();
        let mut d = point - self.center;
        d[axis] = 0.0;
        d.norm()
    }

    pub fn contains(&self, wall: WallId, point: &Vec3) -> bool {
        self.axis_distance(wall, point) <= self.radius
    }
}

/// A planar wall, optionally servo-controlled to a target normal stress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServoWall {
    pub id: WallId,
    /// Coordinate of the wall plane along its axis.
    pub coordinate: f64,
    pub target_stress: f64,
    /// Displacement per unit stress error (m/Pa) applied each DEM step.
    pub gain: f64,
    /// Displacement clamp per DEM step (m).
    pub max_step: f64,
    pub fixed: bool,
    /// |normal contact force| accumulated over the current step (N).
    pub accumulated_force: f64,
    /// Wall speed along the inward normal (m/s), used in contact damping.
    pub velocity: f64,
    pub aperture: Option<WallAperture>,
}

impl ServoWall {
    pub fn fixed_at(id: WallId, coordinate: f64) -> Self {
        Self {
            id,
            coordinate,
            target_stress: 0.0,
            gain: 0.0,
            max_step: 0.0,
            fixed: true,
            accumulated_force: 0.0,
            velocity: 0.0,
            aperture: None,
        }
    }

    pub fn outward_normal(&self) -> Vec3 {
        self.id.outward_normal()
    }

    /// Signed overlap of a sphere with this wall (>= 0 in contact). The
    /// aperture, when present, exempts particles whose center projects into it.
    pub fn overlap(&self, center: &Vec3, radius: f64) -> Option<f64> {
        if let Some(hole) = &self.aperture {
            if hole.contains(self.id, center) {
                return None;
            }
        }
        let axis = self.id.axis();
        let outward_sign = self.id.outward_normal()[axis];
        let distance = (self.coordinate - center[axis]) * outward_sign;
        let overlap = radius - distance;
        if overlap >= 0.0 {
            Some(overlap)
        } else {
            None
        }
    }

    /// One servo update: displace the wall along its inward normal by
    /// `gain * (target - measured)`, clamped to `max_step`. Returns the (signed)
    /// inward displacement; positive compresses the domain.
    pub fn servo_update(&mut self, measured_stress: f64, dt: f64) -> Result<f64, DemError> {
        if self.fixed {
            return Err(DemError::FixedWall(self.id));
        }
        let displacement =
            (self.gain * (self.target_stress - measured_stress)).clamp(-self.max_step, self.max_step);
        self.displace_inward(displacement);
        self.velocity = if dt > 0.0 { displacement / dt } else { 0.0 };
        Ok(displacement)
    }

    /// Move the wall along its inward normal by `distance` (m).
    pub fn displace_inward(&mut self, distance: f64) {
        let axis = self.id.axis();
        let outward_sign = self.id.outward_normal()[axis];
        self.coordinate -= outward_sign * distance;
    }

    /// Wall velocity as a vector (m/s).
    pub fn velocity_vector(&self) -> Vec3 {
        -self.outward_normal() * self.velocity
    }
}

/// The six walls bounding the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallBox {
    pub walls: [ServoWall; 6],
}

impl WallBox {
    /// Build a box of fixed walls spanning `[lo, hi]`.
    pub fn fixed(lo: Vec3, hi: Vec3) -> Self {
        let coord = |id: WallId| match id {
            WallId::XMin => lo.x,
            WallId::XMax => hi.x,
            WallId::YMin => lo.y,
            WallId::YMax => hi.y,
            WallId::ZMin => lo.z,
            WallId::ZMax => hi.z,
        };
        Self {
            walls: ALL_WALLS.map(|id| ServoWall::fixed_at(id, coord(id))),
        }
    }

    pub fn wall(&self, id: WallId) -> &ServoWall {
        &self.walls[id as usize]
    }

    pub fn wall_mut(&mut self, id: WallId) -> &mut ServoWall {
        &mut self.walls[id as usize]
    }

    pub fn lo(&self) -> Vec3 {
        Vec3::new(
            self.wall(WallId::XMin).coordinate,
            self.wall(WallId::YMin).coordinate,
            self.wall(WallId::ZMin).coordinate,
        )
    }

    pub fn hi(&self) -> Vec3 {
        Vec3::new(
            self.wall(WallId::XMax).coordinate,
            self.wall(WallId::YMax).coordinate,
            self.wall(WallId::ZMax).coordinate,
        )
    }

    pub fn extents(&self) -> Vec3 {
        self.hi() - self.lo()
    }

    pub fn volume(&self) -> f64 {
        let e = self.extents();
        e.x * e.y * e.z
    }

    /// Current area of a wall, from the span of the two transverse axes.
    pub fn area(&self, id: WallId) -> f64 {
        let e = self.extents();
        match id.axis() {
            0 => e.y * e.z,
            1 => e.x * e.z,
            _ => e.x * e.y,
        }
    }

    /// Normal stress measured on a wall from its accumulated contact force.
    pub fn measured_stress(&self, id: WallId) -> f64 {
        self.wall(id).accumulated_force / self.area(id)
    }

    pub fn reset_accumulated_forces(&mut self) {
        for w in &mut self.walls {
            w.accumulated_force = 0.0;
        }
    }
}
