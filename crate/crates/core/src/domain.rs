//! Channel domain, quadrature grid, and physical-space fields.
//!
//! The domain is an x-periodic channel [0, length_x) × [0, wall_gap] with
//! two solid walls (y = 0 and y = wall_gap). Quadrature is a tensor grid:
//! uniform (trapezoid) in x, Gauss–Legendre in y.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendre::gauss_legendre;

/// Dimensionless tolerances used by basis/extension validation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    pub ortho: f64,
    pub div: f64,
    pub bc: f64,
    pub trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { ortho: 1e-10, div: 1e-10, bc: 1e-8, trace: 1e-10 }
    }
}

/// Channel geometry and resolution.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DomainSpec {
    /// Period of the channel in x.
    pub length_x: f64,
    /// Distance between the walls y = 0 and y = wall_gap.
    pub wall_gap: f64,
    /// Fourier modes in x (even; wavenumbers 0..=n_x/2 are available).
    pub n_x: usize,
    /// Wall-normal modes per wavenumber block.
    pub n_y: usize,
}

impl DomainSpec {
    pub fn new(length_x: f64, wall_gap: f64, n_x: usize, n_y: usize) -> Result<Self> {
        if !(length_x > 0.0) {
            return Err(Error::NonpositiveCoefficient { name: "length_x", value: length_x });
        }
        if !(wall_gap > 0.0) {
            return Err(Error::NonpositiveCoefficient { name: "wall_gap", value: wall_gap });
        }
        if n_x < 2 || n_x % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "n_x must be an even integer >= 2, got {n_x}"
            )));
        }
        if n_y < 2 {
            return Err(Error::InvalidParameter(format!("n_y must be >= 2, got {n_y}")));
        }
        Ok(Self { length_x, wall_gap, n_x, n_y })
    }

    /// Largest x-wavenumber index carried by the discretization.
    pub fn m_max(&self) -> usize {
        self.n_x / 2
    }

    /// Total number of Stokes modes the discretization can deliver.
    pub fn capacity(&self) -> usize {
        // mean-flow block + (cos, sin) pair per nonzero wavenumber
        self.n_y + 2 * self.n_y * self.m_max()
    }

    /// Build the quadrature grid for this domain.
    ///
    /// The y rule is exact for polynomials up to degree 4·n_y + 17, which
    /// covers quartic products of the wall-normal basis; the x rule is exact
    /// for trigonometric products with total wavenumber < n_qx.
    pub fn grid(&self) -> Grid {
        let n_qx = (4 * self.m_max() + 4).max(16);
        let n_qy = 2 * self.n_y + 10;
        Grid::new(self, n_qx, n_qy)
    }

    /// Grid at a custom resolution (used by oracle-style cross checks).
    pub fn grid_with(&self, n_qx: usize, n_qy: usize) -> Grid {
        Grid::new(self, n_qx, n_qy)
    }

    /// Stable content hash of the geometry and resolution.
    pub fn content_hash(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64; // FNV-1a
        for bits in [
            self.length_x.to_bits(),
            self.wall_gap.to_bits(),
            self.n_x as u64,
            self.n_y as u64,
        ] {
            for byte in bits.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

/// Tensor quadrature grid (trapezoid × Gauss–Legendre).
#[derive(Debug, Clone)]
pub struct Grid {
    pub length_x: f64,
    pub wall_gap: f64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Gauss–Legendre weights mapped to [0, wall_gap].
    pub wy: Vec<f64>,
    /// Uniform x weight (length_x / n_qx).
    pub wx: f64,
    id: u64,
}

impl Grid {
    fn new(dom: &DomainSpec, n_qx: usize, n_qy: usize) -> Self {
        let (s, w) = gauss_legendre(n_qy);
        let half = 0.5 * dom.wall_gap;
        let ys: Vec<f64> = s.iter().map(|si| half * (si + 1.0)).collect();
        let wy: Vec<f64> = w.iter().map(|wi| half * wi).collect();
        let xs: Vec<f64> = (0..n_qx).map(|i| dom.length_x * i as f64 / n_qx as f64).collect();
        let id = dom
            .content_hash()
            .wrapping_mul(31)
            .wrapping_add(n_qx as u64)
            .wrapping_mul(31)
            .wrapping_add(n_qy as u64);
        Self { length_x: dom.length_x, wall_gap: dom.wall_gap, xs, ys, wy, wx: dom.length_x / n_qx as f64, id }
    }

    pub fn n_x(&self) -> usize {
        self.xs.len()
    }

    pub fn n_y(&self) -> usize {
        self.ys.len()
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    #[inline]
    pub fn weight(&self, iy: usize) -> f64 {
        self.wx * self.wy[iy]
    }

    /// ∫ a·b over the domain for scalar samples.
    pub fn dot_scalar(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.len());
        let ny = self.n_y();
        let mut acc = 0.0;
        for ix in 0..self.n_x() {
            for iy in 0..ny {
                let idx = ix * ny + iy;
                acc += self.weight(iy) * a[idx] * b[idx];
            }
        }
        acc
    }

    /// Quadrature of an arbitrary scalar integrand given by samples.
    pub fn integral(&self, a: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.len());
        let ny = self.n_y();
        let mut acc = 0.0;
        for ix in 0..self.n_x() {
            for iy in 0..ny {
                acc += self.weight(iy) * a[ix * ny + iy];
            }
        }
        acc
    }
}

/// Vector field sampled on a quadrature grid (component arrays, x-major).
#[derive(Debug, Clone)]
pub struct GridField {
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    grid_id: u64,
}

impl GridField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { ux: vec![0.0; grid.len()], uy: vec![0.0; grid.len()], grid_id: grid.id() }
    }

    pub fn from_components(grid: &Grid, ux: Vec<f64>, uy: Vec<f64>) -> Result<Self> {
        if ux.len() != grid.len() || uy.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "component length {} / {} does not match grid size {}",
                ux.len(),
                uy.len(),
                grid.len()
            )));
        }
        if ux.iter().chain(uy.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample in grid field".into()));
        }
        Ok(Self { ux, uy, grid_id: grid.id() })
    }

    /// Evaluate a closure (x, y) -> (ux, uy) on every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let ny = grid.n_y();
        let mut ux = vec![0.0; grid.len()];
        let mut uy = vec![0.0; grid.len()];
        for (ix, &x) in grid.xs.iter().enumerate() {
            for (iy, &y) in grid.ys.iter().enumerate() {
                let (a, b) = f(x, y);
                ux[ix * ny + iy] = a;
                uy[ix * ny + iy] = b;
            }
        }
        Self { ux, uy, grid_id: grid.id() }
    }

    pub fn grid_id(&self) -> u64 {
        self.grid_id
    }

    /// L² inner product of two vector fields on the same grid.
    pub fn dot(&self, other: &Self, grid: &Grid) -> f64 {
        grid.dot_scalar(&self.ux, &other.ux) + grid.dot_scalar(&self.uy, &other.uy)
    }

    pub fn norm_l2(&self, grid: &Grid) -> f64 {
        self.dot(self, grid).max(0.0).sqrt()
    }

    /// Lᵖ norm by quadrature of |u|ᵖ with |u| the pointwise Euclidean magnitude.
    pub fn norm_lp(&self, grid: &Grid, p: f64) -> f64 {
        assert!(p >= 1.0);
        let ny = grid.n_y();
        let mut acc = 0.0;
        for ix in 0..grid.n_x() {
            for iy in 0..ny {
                let idx = ix * ny + iy;
                let mag = (self.ux[idx] * self.ux[idx] + self.uy[idx] * self.uy[idx]).sqrt();
                acc += grid.weight(iy) * mag.powf(p);
            }
        }
        acc.powf(1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn domain_invariants_enforced() {
        assert!(DomainSpec::new(0.0, 1.0, 4, 8).is_err());
        assert!(DomainSpec::new(1.0, -1.0, 4, 8).is_err());
        assert!(DomainSpec::new(1.0, 1.0, 3, 8).is_err());
        assert!(DomainSpec::new(1.0, 1.0, 4, 1).is_err());
        assert!(DomainSpec::new(6.28, 1.0, 8, 12).is_ok());
    }

    #[test]
    fn grid_integrates_separable_products_exactly() {
        let dom = DomainSpec::new(2.0 * std::f64::consts::PI, 1.0, 8, 10).unwrap();
        let grid = dom.grid();
        // cos(2x)² · y³ integrates to (L/2) · H⁴/4
        let ny = grid.n_y();
        let mut vals = vec![0.0; grid.len()];
        for (ix, &x) in grid.xs.iter().enumerate() {
            for (iy, &y) in grid.ys.iter().enumerate() {
                vals[ix * ny + iy] = (2.0 * x).cos().powi(2) * y.powi(3);
            }
        }
        let exact = (dom.length_x / 2.0) * 0.25;
        assert_abs_diff_eq!(grid.integral(&vals), exact, epsilon = 1e-12);
    }

    #[test]
    fn lp_norm_matches_closed_form_for_smooth_field() {
        let dom = DomainSpec::new(2.0 * std::f64::consts::PI, 1.0, 8, 24).unwrap();
        let grid = dom.grid();
        let h = dom.wall_gap;
        let f = GridField::from_fn(&grid, |_, y| ((std::f64::consts::PI * y / h).sin(), 0.0));
        // ∫ sin⁴ over one half-period: 3H/8, times L
        let l4 = (dom.length_x * 3.0 * h / 8.0).powf(0.25);
        assert_abs_diff_eq!(f.norm_lp(&grid, 4.0), l4, epsilon = 1e-9);
        let l1 = dom.length_x * 2.0 * h / std::f64::consts::PI;
        assert_abs_diff_eq!(f.norm_lp(&grid, 1.0), l1, epsilon = 1e-9);
    }

    #[test]
    fn content_hash_distinguishes_domains() {
        let a = DomainSpec::new(1.0, 1.0, 4, 8).unwrap();
        let b = DomainSpec::new(1.0, 1.0, 4, 9).unwrap();
        assert_ne!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash(), a.clone().content_hash());
    }
}
