//! Staggered polar finite-volume grid on the unit disk.
//!
//! Cells are annular sectors `[i/nr, (i+1)/nr] x [j dtheta, (j+1) dtheta]`,
//! flattened ring-major as `i * ntheta + j`. No cell center sits at `r = 0` or
//! `r = 1`, and cell areas are the exact sector areas so they sum to `pi`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::Vec2;

/// A face shared by two cells, or a cell and the outer circle (`outer == None`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    /// Cell on the inner / lower-angle side.
    pub inner: usize,
    /// Cell on the outer / higher-angle side, `None` on the boundary circle.
    pub outer: Option<usize>,
    /// Face length (arc length for radial faces, `dr` for angular faces).
    pub length: f64,
    /// Distance between the two adjacent cell centers along the face normal.
    pub spacing: f64,
    /// Unit normal pointing from `inner` to `outer`.
    pub normal: Vec2,
    /// Face midpoint.
    pub midpoint: Vec2,
    pub kind: FaceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Radial,
    Angular,
}

#[derive(Debug, Clone)]
pub struct ConfigGrid {
    pub nr: usize,
    pub ntheta: usize,
    pub dr: f64,
    pub dtheta: f64,
    /// Radial cell centers, the root-mean-square radius of each annulus, so
    /// that any function of `|R|^2` that is linear on a ring is sampled at its
    /// cell average.
    pub r_centers: Vec<f64>,
    /// Radial face positions `i / nr`, length `nr + 1`.
    pub r_faces: Vec<f64>,
    /// Angular cell centers `(j + 1/2) dtheta`.
    pub theta_centers: Vec<f64>,
    /// Cell areas, ring-major.
    pub cell_areas: Vec<f64>,
    /// Cartesian cell centers, ring-major.
    pub centers: Vec<Vec2>,
    /// Interior faces followed by the `ntheta` boundary faces on `r = 1`.
    pub faces: Vec<Face>,
}

impl ConfigGrid {
    pub fn new(nr: usize, ntheta: usize) -> Result<Self> {
        if nr < 4 || ntheta < 4 {
            return Err(Error::Config(format!(
                "configuration grid needs nr >= 4 and ntheta >= 4, got {nr} x {ntheta}"
            )));
        }
        let dr = 1.0 / nr as f64;
        let dtheta = 2.0 * PI / ntheta as f64;
        let r_faces: Vec<f64> = (0..=nr).map(|i| i as f64 * dr).collect();
        let r_centers: Vec<f64> =
            (0..nr).map(|i| (0.5 * (r_faces[i] * r_faces[i] + r_faces[i + 1] * r_faces[i + 1])).sqrt()).collect();
        let theta_centers: Vec<f64> = (0..ntheta).map(|j| (j as f64 + 0.5) * dtheta).collect();

        let mut cell_areas = Vec::with_capacity(nr * ntheta);
        let mut centers = Vec::with_capacity(nr * ntheta);
        for i in 0..nr {
            let area = 0.5 * (r_faces[i + 1] * r_faces[i + 1] - r_faces[i] * r_faces[i]) * dtheta;
            for &theta in &theta_centers {
                cell_areas.push(area);
                centers.push([r_centers[i] * theta.cos(), r_centers[i] * theta.sin()]);
            }
        }

        let mut faces = Vec::with_capacity(2 * nr * ntheta);
        // Radial faces between ring i and ring i + 1.
        for i in 0..nr - 1 {
            let rf = r_faces[i + 1];
            for (j, &theta) in theta_centers.iter().enumerate() {
                let (s, c) = theta.sin_cos();
                faces.push(Face {
                    inner: i * ntheta + j,
                    outer: Some((i + 1) * ntheta + j),
                    length: rf * dtheta,
                    spacing: r_centers[i + 1] - r_centers[i],
                    normal: [c, s],
                    midpoint: [rf * c, rf * s],
                    kind: FaceKind::Radial,
                });
            }
        }
        // Angular faces between sector j and sector j + 1 (periodic).
        for i in 0..nr {
            let rc = r_centers[i];
            let rm = 0.5 * (r_faces[i] + r_faces[i + 1]);
            for j in 0..ntheta {
                let theta = (j + 1) as f64 * dtheta;
                let (s, c) = theta.sin_cos();
                faces.push(Face {
                    inner: i * ntheta + j,
                    outer: Some(i * ntheta + (j + 1) % ntheta),
                    length: dr,
                    spacing: rc * dtheta,
                    normal: [-s, c],
                    midpoint: [rm * c, rm * s],
                    kind: FaceKind::Angular,
                });
            }
        }
        // Boundary circle: zero flux by construction, kept for bookkeeping.
        for (j, &theta) in theta_centers.iter().enumerate() {
            let (s, c) = theta.sin_cos();
            faces.push(Face {
                inner: (nr - 1) * ntheta + j,
                outer: None,
                length: dtheta,
                spacing: 1.0 - r_centers[nr - 1],
                normal: [c, s],
                midpoint: [c, s],
                kind: FaceKind::Radial,
            });
        }

        Ok(Self { nr, ntheta, dr, dtheta, r_faces, r_centers, theta_centers, cell_areas, centers, faces })
    }

    pub fn len(&self) -> usize {
        self.nr * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ntheta + j
    }

    /// Radius of the center of cell `c`.
    #[inline]
    pub fn radius(&self, c: usize) -> f64 {
        self.r_centers[c / self.ntheta]
    }

    /// Largest cell diameter (outer-ring arc and radial extent).
    pub fn max_cell_diameter(&self) -> f64 {
        (self.dr * self.dr + self.dtheta * self.dtheta).sqrt()
    }

    /// Samples `f(R)` at every cell center.
    pub fn sample<F: Fn(Vec2) -> f64>(&self, f: F) -> Vec<f64> {
        self.centers.iter().map(|&p| f(p)).collect()
    }

    /// Midpoint rule `sum_c values[c] * area[c]`.
    pub fn quadrature(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::Shape { expected: self.len(), got: values.len() });
        }
        Ok(self.quadrature_unchecked(values))
    }

    pub(crate) fn quadrature_unchecked(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.cell_areas).map(|(v, a)| v * a).sum()
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::Shape { expected: self.len(), got: len })
        }
    }
}

/// Free-function form of [`ConfigGrid::new`].
pub fn build_config_grid(nr: usize, ntheta: usize) -> Result<ConfigGrid> {
    ConfigGrid::new(nr, ntheta)
}

/// Free-function form of [`ConfigGrid::quadrature`].
pub fn quadrature(values: &[f64], grid: &ConfigGrid) -> Result<f64> {
    grid.quadrature(values)
}
