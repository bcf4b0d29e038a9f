//! Uniform cell-centred grids on the line or on a radial half-line, and
//! densities sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::profiles::sphere_area;

const MODULE: &str = "functionals";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    Cartesian1d,
    /// Radially symmetric functions on `R^dim`.
    Radial { dim: u32 },
}

impl Geometry {
    pub fn dim(&self) -> u32 {
        match *self {
            Geometry::Cartesian1d => 1,
            Geometry::Radial { dim } => dim,
        }
    }
}

/// Node `i` sits at `origin + (i + 1/2) spacing`. Radial grids always have
/// `origin = 0`, so the first node is at `spacing/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub geometry: Geometry,
    pub nodes: usize,
    pub spacing: f64,
    pub origin: f64,
}

impl Grid {
    pub fn new(geometry: Geometry, nodes: usize, spacing: f64, origin: f64) -> Result<Self> {
        if nodes < 4 {
            return Err(domain(MODULE, format!("grid needs at least 4 nodes, got {nodes}")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(domain(MODULE, format!("grid spacing {spacing} must be positive")));
        }
        if !origin.is_finite() {
            return Err(domain(MODULE, "grid origin must be finite"));
        }
        match geometry {
            Geometry::Radial { dim: 0 } => Err(domain(MODULE, "radial dimension must be at least 1")),
            Geometry::Radial { .. } if origin != 0.0 => {
                Err(domain(MODULE, "radial grids start at r = 0"))
            }
            _ => Ok(Self { geometry, nodes, spacing, origin }),
        }
    }

    /// `nodes` cells covering `[-radius, radius]`.
    pub fn cartesian(nodes: usize, radius: f64) -> Result<Self> {
        Self::new(Geometry::Cartesian1d, nodes, 2.0 * radius / nodes as f64, -radius)
    }

    /// `nodes` cells covering `[0, radius]` in `R^dim`.
    pub fn radial(dim: u32, nodes: usize, radius: f64) -> Result<Self> {
        Self::new(Geometry::Radial { dim }, nodes, radius / nodes as f64, 0.0)
    }

    pub fn dim(&self) -> u32 {
        self.geometry.dim()
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.geometry, Geometry::Radial { .. })
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.spacing
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.coordinate(i)).collect()
    }

    /// Largest `|x|` covered by the grid.
    pub fn extent(&self) -> f64 {
        let right = self.origin + self.nodes as f64 * self.spacing;
        right.abs().max(self.origin.abs())
    }

    /// Quadrature weights: `spacing` on the line, `|S^{n-1}| r^{n-1} spacing`
    /// on radial grids.
    pub fn weights(&self) -> Vec<f64> {
        match self.geometry {
            Geometry::Cartesian1d => vec![self.spacing; self.nodes],
            Geometry::Radial { dim } => {
                let area = sphere_area(dim);
                let k = dim as i32 - 1;
                (0..self.nodes)
                    .map(|i| area * self.coordinate(i).powi(k) * self.spacing)
                    .collect()
            }
        }
    }

    /// The same node layout dilated by `a`.
    pub fn dilated(&self, a: f64) -> Self {
        Self {
            spacing: self.spacing * a,
            origin: self.origin * a,
            ..*self
        }
    }

    /// First derivative: second-order central differences, one-sided
    /// second-order at the ends, mirror ghost `g(-r) = g(r)` at the radial
    /// origin.
    pub fn derivative(&self, g: &[f64]) -> Vec<f64> {
        let n = g.len();
        let h = self.spacing;
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            out[i] = (g[i + 1] - g[i - 1]) / (2.0 * h);
        }
        out[0] = if self.is_radial() {
            (g[1] - g[0]) / (2.0 * h)
        } else {
            (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h)
        };
        out[n - 1] = (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) / (2.0 * h);
        out
    }

    /// Second derivative with the same boundary treatment as [`Self::derivative`].
    pub fn second_derivative(&self, g: &[f64]) -> Vec<f64> {
        let n = g.len();
        let h2 = self.spacing * self.spacing;
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            out[i] = (g[i + 1] - 2.0 * g[i] + g[i - 1]) / h2;
        }
        out[0] = if self.is_radial() {
            (g[1] - g[0]) / h2
        } else {
            (2.0 * g[0] - 5.0 * g[1] + 4.0 * g[2] - g[3]) / h2
        };
        out[n - 1] = (2.0 * g[n - 1] - 5.0 * g[n - 2] + 4.0 * g[n - 3] - g[n - 4]) / h2;
        out
    }

    /// Indices read by the derivative stencils at node `i`.
    pub(crate) fn stencil(&self, i: usize) -> std::ops::RangeInclusive<usize> {
        let last = self.nodes - 1;
        match i {
            0 if self.is_radial() => 0..=1,
            0 => 0..=3,
            i if i == last => last - 3..=last,
            i => i - 1..=i + 1,
        }
    }
}

/// Nonnegative samples of a density with finite positive mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    grid: Grid,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes {
            return Err(domain(
                MODULE,
                format!("{} values for a grid of {} nodes", values.len(), grid.nodes),
            ));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(domain(MODULE, format!("density value {v} at node {i} is negative or not finite")));
        }
        let field = Self { grid, values };
        let mass = field.mass();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(domain(MODULE, format!("density mass {mass} must be finite and positive")));
        }
        Ok(field)
    }

    /// Samples `f(coordinate)` at every node; for radial grids the argument is `r`.
    pub fn sample(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.nodes).map(|i| f(grid.coordinate(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> u32 {
        self.grid.dim()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Weighted sum of the samples.
    pub fn mass(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, u)| w * u)
            .sum()
    }

    /// The field divided by its mass.
    pub fn normalized(mut self) -> Self {
        let m = self.mass();
        self.values.iter_mut().for_each(|v| *v /= m);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_validation() {
        assert!(Grid::cartesian(3, 1.0).is_err());
        assert!(Grid::cartesian(16, 0.0).is_err());
        assert!(Grid::new(Geometry::Radial { dim: 3 }, 16, 0.1, 0.5).is_err());
        assert!(Grid::radial(0, 16, 1.0).is_err());
        let g = Grid::radial(3, 10, 1.0).unwrap();
        assert_relative_eq!(g.coordinate(0), 0.05);
        assert_relative_eq!(g.extent(), 1.0);
    }

    #[test]
    fn uniform_density_mass() {
        let l = 2.5;
        let grid = Grid::cartesian(100, l).unwrap();
        let f = DensityField::sample(grid, |_| 1.0 / (2.0 * l)).unwrap();
        assert_relative_eq!(f.mass(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn radial_weights_integrate_ball_volume() {
        // Even integrands make the midpoint rule in r spectrally accurate.
        let grid = Grid::radial(3, 400, 8.0).unwrap();
        let f = DensityField::sample(grid, |r| (-r * r).exp()).unwrap();
        assert_relative_eq!(f.mass(), std::f64::consts::PI.powf(1.5), max_relative = 1e-12);
    }

    #[test]
    fn derivatives_exact_on_quadratics() {
        for grid in [Grid::cartesian(12, 3.0).unwrap(), Grid::radial(3, 12, 3.0).unwrap()] {
            let x = grid.coordinates();
            let g: Vec<f64> = x.iter().map(|x| 1.0 + 0.5 * x - 2.0 * x * x).collect();
            let g = if grid.is_radial() {
                x.iter().map(|x| 1.0 - 2.0 * x * x).collect()
            } else {
                g
            };
            let slope = if grid.is_radial() { 0.0 } else { 0.5 };
            for (i, d) in grid.derivative(&g).iter().enumerate() {
                assert_relative_eq!(*d, slope - 4.0 * x[i], epsilon = 1e-12);
            }
            for d in grid.second_derivative(&g) {
                assert_relative_eq!(d, -4.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn rejects_bad_values() {
        let grid = Grid::cartesian(8, 1.0).unwrap();
        assert!(DensityField::new(grid, vec![0.0; 8]).is_err());
        assert!(DensityField::new(grid, vec![1.0; 7]).is_err());
        let mut v = vec![1.0; 8];
        v[3] = -1e-3;
        assert!(DensityField::new(grid, v.clone()).is_err());
        v[3] = f64::NAN;
        assert!(DensityField::new(grid, v).is_err());
    }
}
