//! Initial data: analytic sources and seeded Gaussian mixtures.
//!
//! Mixture components are drawn with ChaCha8 from fixed ranges, so a seed
//! determines the density bit for bit: 2 to 5 components, weights in
//! `[0.2, 1]`, centres in `[-2, 2]` (radial: shells at radius `[0, 2]`) and
//! widths in `[0.3, 1]`. Sampled fields are renormalized to unit mass.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::grid::{DensityField, Grid};
use crate::profiles::{BarenblattSpec, Convention, HeatKernelSpec};

const MODULE: &str = "pme_solver";

pub const MIN_COMPONENTS: usize = 2;
pub const MAX_COMPONENTS: usize = 5;
pub const WEIGHT_RANGE: (f64, f64) = (0.2, 1.0);
pub const CENTRE_RANGE: (f64, f64) = (-2.0, 2.0);
pub const WIDTH_RANGE: (f64, f64) = (0.3, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub centre: f64,
    pub width: f64,
}

/// Bump shape of each mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// `exp(-(x-m)^2/(2 s^2))`, positive everywhere.
    #[default]
    Gaussian,
    /// `(1 - ((x-m)/s)^2)_+^2`, compactly supported.
    Compact,
    /// `(1 + ((x-m)/s)^2)^{-decay}`: the Barenblatt tail of fast diffusion,
    /// with `decay = 1/(1-p)`.
    Algebraic { decay: f64 },
}

impl Shape {
    /// Gaussian for `p >= 1`; matching algebraic tails for `p < 1`, where the
    /// explicit step scales like `(min u / max u)^{1-p}` and Gaussian tails
    /// would stall it.
    pub fn for_exponent(p: f64) -> Self {
        if p < 1.0 { Self::Algebraic { decay: 1.0 / (1.0 - p) } } else { Self::Gaussian }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub components: Vec<Component>,
    pub shape: Shape,
}

fn draw(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    rng.random_range(range.0..=range.1)
}

impl Mixture {
    /// 2 to 5 components of the given shape.
    pub fn random(seed: u64, shape: Shape) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.random_range(MIN_COMPONENTS..=MAX_COMPONENTS);
        Self::draw_components(&mut rng, count, shape)
    }

    /// Exactly two components with the given shape.
    pub fn two_bump(seed: u64, shape: Shape) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::draw_components(&mut rng, 2, shape)
    }

    fn draw_components(rng: &mut ChaCha8Rng, count: usize, shape: Shape) -> Self {
        let components = (0..count)
            .map(|_| Component {
                weight: draw(rng, WEIGHT_RANGE),
                centre: draw(rng, CENTRE_RANGE),
                width: draw(rng, WIDTH_RANGE),
            })
            .collect();
        Self { components, shape }
    }

    fn bump(&self, z: f64) -> f64 {
        match self.shape {
            Shape::Gaussian => (-0.5 * z * z).exp(),
            Shape::Compact => {
                let s = 1.0 - z * z;
                if s > 0.0 { s * s } else { 0.0 }
            }
            Shape::Algebraic { decay } => (1.0 + z * z).powf(-decay),
        }
    }

    /// Unnormalized density. On radial grids each component is the even
    /// shell `b((r-|m|)/s) + b((r+|m|)/s)`, smooth at the origin.
    pub fn evaluate(&self, x: f64, radial: bool) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let shell = if radial {
                    let m = c.centre.abs();
                    self.bump((x - m) / c.width) + self.bump((x + m) / c.width)
                } else {
                    self.bump((x - c.centre) / c.width)
                };
                c.weight * shell
            })
            .sum()
    }

    pub fn sample(&self, grid: Grid) -> Result<DensityField> {
        let radial = grid.is_radial();
        Ok(DensityField::sample(grid, |x| self.evaluate(x, radial))?.normalized())
    }
}

/// The initial-data menu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    /// The self-similar source at `t_start`.
    Barenblatt,
    /// The heat kernel at `t_start` (any `p`).
    Gaussian,
    /// A seeded mixture of 2 to 5 bumps shaped by [`Shape::for_exponent`].
    Mixture { seed: u64 },
    /// Two seeded bumps; `compact` selects the compactly supported shape,
    /// otherwise [`Shape::for_exponent`] applies.
    TwoBump { seed: u64, compact: bool },
    /// Samples loaded from a two-column file.
    File(PathBuf),
}

impl std::str::FromStr for InitialData {
    type Err = crate::Error;

    /// `barenblatt`, `gaussian`, `mixture`, `two-bump`, `compact-two-bump`,
    /// or `file:PATH`; seeds are attached separately.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "barenblatt" => Ok(Self::Barenblatt),
            "gaussian" => Ok(Self::Gaussian),
            "mixture" => Ok(Self::Mixture { seed: 0 }),
            "two-bump" => Ok(Self::TwoBump { seed: 0, compact: false }),
            "compact-two-bump" => Ok(Self::TwoBump { seed: 0, compact: true }),
            _ => match s.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(Self::File(PathBuf::from(path))),
                _ => Err(domain(
                    "cli",
                    format!(
                        "unknown initial data '{s}'; expected barenblatt, gaussian, mixture, \
                         two-bump, compact-two-bump or file:PATH"
                    ),
                )),
            },
        }
    }
}

impl InitialData {
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            Self::Mixture { .. } => Self::Mixture { seed },
            Self::TwoBump { compact, .. } => Self::TwoBump { seed, compact },
            other => other,
        }
    }

    /// Samples the data on `grid`; file data must already match the grid.
    pub fn sample(&self, grid: Grid, p: f64, t_start: f64) -> Result<DensityField> {
        let n = grid.dim();
        let field = match self {
            Self::Barenblatt => {
                if p == 1.0 {
                    return Self::Gaussian.sample(grid, p, t_start);
                }
                if !(t_start > 0.0) {
                    return Err(domain(MODULE, "Barenblatt initial data needs t_start > 0"));
                }
                let spec = BarenblattSpec::new(p, n, Convention::SelfSimilar)?;
                let values = grid
                    .coordinates()
                    .iter()
                    .map(|x| spec.self_similar(x.abs(), t_start))
                    .collect::<Result<Vec<f64>>>()?;
                DensityField::new(grid, values)?
            }
            Self::Gaussian => {
                let spec = HeatKernelSpec::new(n, t_start)?;
                DensityField::sample(grid, |x| spec.density(x.abs()))?
            }
            Self::Mixture { seed } => Mixture::random(*seed, Shape::for_exponent(p)).sample(grid)?,
            Self::TwoBump { seed, compact } => {
                let shape = if *compact { Shape::Compact } else { Shape::for_exponent(p) };
                Mixture::two_bump(*seed, shape).sample(grid)?
            }
            Self::File(path) => {
                let loaded = crate::io::read_profile(path, grid.geometry)?;
                if loaded.grid().nodes != grid.nodes
                    || (loaded.grid().spacing - grid.spacing).abs() > 1e-9 * grid.spacing
                {
                    return Err(domain(
                        MODULE,
                        format!(
                            "profile file {} has {} nodes at spacing {}, grid expects {} at {}",
                            path.display(),
                            loaded.grid().nodes,
                            loaded.grid().spacing,
                            grid.nodes,
                            grid.spacing
                        ),
                    ));
                }
                loaded
            }
        };
        Ok(field.normalized())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn seeds_are_reproducible() {
        assert_eq!(Mixture::random(7, Shape::Gaussian), Mixture::random(7, Shape::Gaussian));
        assert_ne!(Mixture::random(7, Shape::Gaussian), Mixture::random(8, Shape::Gaussian));
        for seed in 0..50 {
            let m = Mixture::random(seed, Shape::Gaussian);
            assert!((MIN_COMPONENTS..=MAX_COMPONENTS).contains(&m.components.len()));
            for c in &m.components {
                assert!(c.weight >= 0.2 && c.weight <= 1.0);
                assert!(c.centre.abs() <= 2.0);
                assert!(c.width >= 0.3 && c.width <= 1.0);
            }
        }
    }

    #[test]
    fn sampled_mixtures_have_unit_mass() {
        let f = Mixture::random(3, Shape::Gaussian).sample(Grid::cartesian(512, 8.0).unwrap()).unwrap();
        assert_relative_eq!(f.mass(), 1.0, max_relative = 1e-14);
        let g = Mixture::random(3, Shape::for_exponent(0.8)).sample(Grid::radial(3, 512, 8.0).unwrap()).unwrap();
        assert_relative_eq!(g.mass(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn radial_shells_are_even() {
        let m = Mixture::two_bump(1, Shape::Gaussian);
        assert_relative_eq!(m.evaluate(0.3, true), m.evaluate(-0.3, true), max_relative = 1e-15);
    }

    #[test]
    fn compact_bumps_vanish_outside() {
        let m = Mixture::two_bump(5, Shape::Compact);
        assert_eq!(m.evaluate(10.0, false), 0.0);
    }

    #[test]
    fn fast_diffusion_shape_has_barenblatt_tails() {
        assert_eq!(Shape::for_exponent(1.5), Shape::Gaussian);
        let m = Mixture::two_bump(2, Shape::for_exponent(0.8));
        // (1 + z^2)^{-5} decays like |x|^{-10}.
        let ratio = m.evaluate(2000.0, false) / m.evaluate(1000.0, false);
        assert_relative_eq!(ratio, 2f64.powi(-10), max_relative = 1e-3);
    }

    #[test]
    fn parses_menu() {
        assert_eq!("barenblatt".parse::<InitialData>().unwrap(), InitialData::Barenblatt);
        assert_eq!(
            "file:/tmp/u.csv".parse::<InitialData>().unwrap(),
            InitialData::File("/tmp/u.csv".into())
        );
        assert!("file:".parse::<InitialData>().is_err());
        assert!("bogus".parse::<InitialData>().is_err());
    }

    #[test]
    fn barenblatt_data_matches_profile() {
        let grid = Grid::cartesian(1024, 4.0).unwrap();
        let f = InitialData::Barenblatt.sample(grid, 2.0, 1.0).unwrap();
        assert_relative_eq!(f.mass(), 1.0, max_relative = 1e-14);
        let g = InitialData::Gaussian.sample(grid, 2.0, 0.5).unwrap();
        assert!(g.max() > 0.0);
    }
}
