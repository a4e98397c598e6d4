//! Structured Cartesian grid holding the averaged fluid fields.

use serde::{Deserialize, Serialize};

use super::CfdError;
use crate::Vec3;

/// Cell-centered fluid state on a structured grid, plus the face-normal
/// velocities the pressure-correction solver maintains between steps.
///
/// Cell `(i, j, k)` lives at flat index `(k*ny + j)*nx + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidGrid {
    pub dims: [usize; 3],
    /// Cell size per axis (m).
    pub cell_size: Vec3,
    /// Position of the low corner of the grid (m).
    pub origin: Vec3,
    pub u: Vec<Vec3>,
    pub p: Vec<f64>,
    /// Void fraction, clamped to (0, 1].
    pub alpha: Vec<f64>,
    /// Void fraction at the previous coupling step (for the transient term).
    pub alpha_prev: Vec<f64>,
    /// Apparent viscosity (Pa*s).
    pub mu: Vec<f64>,
    /// Volumetric momentum source from the particles (N/m^3).
    pub source: Vec<Vec3>,
    /// Face-normal velocity components (+axis direction) on x/y/z faces.
    pub face_u: Vec<f64>,
    pub face_v: Vec<f64>,
    pub face_w: Vec<f64>,
}

impl FluidGrid {
    pub fn new(dims: [usize; 3], origin: Vec3, extent: Vec3) -> Result<Self, CfdError> {
        for (axis, &n) in dims.iter().enumerate() {
            if n < 3 {
                return Err(CfdError::InvalidGrid(format!(
                    "need at least 3 cells per axis, got {n} on axis {axis}"
                )));
            }
        }
        for axis in 0..3 {
            if !(extent[axis] > 0.0) {
                return Err(CfdError::InvalidGrid(format!(
                    "grid extent must be positive, got {} on axis {axis}",
                    extent[axis]
                )));
            }
        }
        let [nx, ny, nz] = dims;
        let n = nx * ny * nz;
        Ok(Self {
            dims,
            cell_size: Vec3::new(
                extent.x / nx as f64,
                extent.y / ny as f64,
                extent.z / nz as f64,
            ),
            origin,
            u: vec![Vec3::zeros(); n],
            p: vec![0.0; n],
            alpha: vec![1.0; n],
            alpha_prev: vec![1.0; n],
            mu: vec![0.0; n],
            source: vec![Vec3::zeros(); n],
            face_u: vec![0.0; (nx + 1) * ny * nz],
            face_v: vec![0.0; nx * (ny + 1) * nz],
            face_w: vec![0.0; nx * ny * (nz + 1)],
        })
    }

    pub fn cell_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    /// Flat index on the x-face array; `i` ranges over `0..=nx`.
    #[inline]
    pub fn fx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * (self.dims[0] + 1) + i
    }

    #[inline]
    pub fn fy(&self, i: usize, j: usize, k: usize) -> usize {
        (k * (self.dims[1] + 1) + j) * self.dims[0] + i
    }

    #[inline]
    pub fn fz(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin
            + Vec3::new(
                (i as f64 + 0.5) * self.cell_size.x,
                (j as f64 + 0.5) * self.cell_size.y,
                (k as f64 + 0.5) * self.cell_size.z,
            )
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size.x * self.cell_size.y * self.cell_size.z
    }

    /// Area of a face orthogonal to the given axis.
    pub fn face_area(&self, axis: usize) -> f64 {
        match axis {
            0 => self.cell_size.y * self.cell_size.z,
            1 => self.cell_size.x * self.cell_size.z,
            _ => self.cell_size.x * self.cell_size.y,
        }
    }

    pub fn min_cell_edge(&self) -> f64 {
        self.cell_size.x.min(self.cell_size.y).min(self.cell_size.z)
    }

    pub fn extent(&self) -> Vec3 {
        Vec3::new(
            self.cell_size.x * self.dims[0] as f64,
            self.cell_size.y * self.dims[1] as f64,
            self.cell_size.z * self.dims[2] as f64,
        )
    }

    /// Cell containing a point, clamped into the grid.
    pub fn cell_of_point(&self, point: &Vec3) -> [usize; 3] {
        core::array::from_fn(|a| {
            let rel = (point[a] - self.origin[a]) / self.cell_size[a];
            (rel.max(0.0) as usize).min(self.dims[a] - 1)
        })
    }

    pub fn mean_alpha(&self) -> f64 {
        self.alpha.iter().sum::<f64>() / self.alpha.len() as f64
    }

    pub fn min_alpha(&self) -> f64 {
        self.alpha.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Write the per-cell snapshot CSV:
    /// `i,j,k,x,y,z,ux,uy,uz,p,alpha_f,mu,gamma_dot`.
    pub fn write_snapshot_csv<W: std::io::Write>(
        &self,
        gamma_dot: &[f64],
        mut w: W,
    ) -> std::io::Result<()> {
        writeln!(w, "i,j,k,x,y,z,ux,uy,uz,p,alpha_f,mu,gamma_dot")?;
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    let c = self.idx(i, j, k);
                    let x = self.cell_center(i, j, k);
                    writeln!(
                        w,
                        "{},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                        i, j, k, x.x, x.y, x.z,
                        self.u[c].x, self.u[c].y, self.u[c].z,
                        self.p[c], self.alpha[c], self.mu[c], gamma_dot[c]
                    )?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_grids() {
        assert!(FluidGrid::new([2, 3, 3], Vec3::zeros(), Vec3::repeat(1.0)).is_err());
        assert!(FluidGrid::new([3, 3, 3], Vec3::zeros(), Vec3::repeat(1.0)).is_ok());
    }

    #[test]
    fn reference_grid_spacing() {
        // 17 x 8.8 x 17 mm split into 12 x 6 x 12 cells.
        let g = FluidGrid::new(
            [12, 6, 12],
            Vec3::zeros(),
            Vec3::new(0.017, 0.0088, 0.017),
        )
        .unwrap();
        approx::assert_relative_eq!(g.cell_size.x, 0.017 / 12.0, max_relative = 1e-12);
        approx::assert_relative_eq!(g.min_cell_edge(), 0.017 / 12.0, max_relative = 1e-12);
        assert_eq!(g.cell_count(), 864);
    }

    #[test]
    fn point_location_clamps() {
        let g = FluidGrid::new([4, 4, 4], Vec3::zeros(), Vec3::repeat(1.0)).unwrap();
        assert_eq!(g.cell_of_point(&Vec3::new(0.1, 0.1, 0.1)), [0, 0, 0]);
        assert_eq!(g.cell_of_point(&Vec3::new(2.0, 0.6, -1.0)), [3, 2, 0]);
    }
}
