//! Per-face boundary conditions and the rasterized circular outlet.

use serde::{Deserialize, Serialize};

use super::CfdError;

/// Boundary condition on one grid face. `VelocityInlet` speeds are positive
/// into the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FaceBc {
    NoSlip,
    VelocityInlet(f64),
    PressureOutlet(f64),
    Periodic,
    /// No-slip wall except a set of face cells held at fixed pressure,
    /// approximating a circular hole.
    OutletHole { pressure: f64, mask: OutletMask },
}

/// Rasterization of a circular hole onto the face cells.
///
/// `open` flags the cells whose centers fall inside the circle (these become
/// pressure outlets); `open_fraction` refines each face cell on a sub-grid and
/// records the fraction of its area inside the circle, so the resolved open
/// area can be reported independently of the bulk grid resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutletMask {
    /// Face-cell grid dimensions (transverse axes in ascending axis order).
    pub dims: [usize; 2],
    pub open: Vec<bool>,
    pub open_fraction: Vec<f64>,
}

impl OutletMask {
    /// Rasterize a circle of the given center/radius (face-plane coordinates,
    /// ascending axis order) onto a face of `dims` cells of size `cell`.
    /// `subsamples` is the per-axis sub-grid resolution used for areas.
    pub fn rasterize_circle(
        dims: [usize; 2],
        cell: [f64; 2],
        center: [f64; 2],
        radius: f64,
        subsamples: usize,
    ) -> Self {
        let s = subsamples.max(1);
        let mut open = vec![false; dims[0] * dims[1]];
        let mut open_fraction = vec![0.0; dims[0] * dims[1]];
        for b in 0..dims[1] {
            for a in 0..dims[0] {
                let idx = b * dims[0] + a;
                let ca = (a as f64 + 0.5) * cell[0] - center[0];
                let cb = (b as f64 + 0.5) * cell[1] - center[1];
                open[idx] = (ca * ca + cb * cb).sqrt() <= radius;
                let mut inside = 0usize;
                for sb in 0..s {
                    for sa in 0..s {
                        let pa = (a as f64 + (sa as f64 + 0.5) / s as f64) * cell[0] - center[0];
                        let pb = (b as f64 + (sb as f64 + 0.5) / s as f64) * cell[1] - center[1];
                        if (pa * pa + pb * pb).sqrt() <= radius {
                            inside += 1;
                        }
                    }
                }
                open_fraction[idx] = inside as f64 / (s * s) as f64;
            }
        }
        Self {
            dims,
            open,
            open_fraction,
        }
    }

    pub fn is_open(&self, a: usize, b: usize) -> bool {
        self.open[b * self.dims[0] + a]
    }

    pub fn open_cell_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    /// Hole area resolved on the refined sub-grid (m^2), given the cell sizes.
    pub fn resolved_open_area(&self, cell: [f64; 2]) -> f64 {
        self.open_fraction.iter().sum::<f64>() * cell[0] * cell[1]
    }

    /// Hole area of the masked (bulk) cells actually used as outlets.
    pub fn masked_area(&self, cell: [f64; 2]) -> f64 {
        self.open_cell_count() as f64 * cell[0] * cell[1]
    }
}

/// Boundary conditions for all six faces, ordered `-x,+x,-y,+y,-z,+z` (the
/// wall-id order used on the DEM side).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub faces: [FaceBc; 6],
}

impl BoundarySpec {
    pub fn validate(&self) -> Result<(), CfdError> {
        for axis in 0..3 {
            let lo = matches!(self.faces[2 * axis], FaceBc::Periodic);
            let hi = matches!(self.faces[2 * axis + 1], FaceBc::Periodic);
            if lo != hi {
                return Err(CfdError::InvalidBoundary(format!(
                    "periodic faces must come in opposing pairs (axis {axis})"
                )));
            }
        }
        Ok(())
    }

    pub fn all_no_slip() -> Self {
        Self {
            faces: core::array::from_fn(|_| FaceBc::NoSlip),
        }
    }

    /// True when some face fixes the pressure level.
    pub fn has_pressure_reference(&self) -> bool {
        self.faces.iter().any(|f| {
            matches!(f, FaceBc::PressureOutlet(_)) || matches!(f, FaceBc::OutletHole { .. })
        })
    }
}
