//! Explicit finite-volume solver for `u_t = Δ(u^p)` on the line or in radial
//! symmetry.
//!
//! The update is `u_i += dt (F_{i+1/2} - F_{i-1/2}) / w_i` with face fluxes
//! `F = A (v_{i+1} - v_i)/h`, `v = u^p`, and `w_i` the quadrature weights of
//! the grid. Radial face areas are `A_{k} = n W_{k-1} / r_k` where `W` is the
//! cumulative cell volume; this makes the stencil exact on quadratics at the
//! origin and reduces to `r_i r_{i+1}` (n = 3) and `r_{i+1/2}` (n = 2).
//! Fluxes telescope, so the weighted mass only changes through the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::functionals::FunctionalSnapshot;
use crate::grid::{DensityField, Geometry, Grid};
use crate::profiles::{sphere_area, BarenblattSpec, Coefficients, Convention};

const MODULE: &str = "pme_solver";

/// Most negative value accepted after a step, relative to the field maximum.
pub const NEGATIVITY_TOL: f64 = 1e-14;
pub const MAX_REJECTIONS: usize = 40;
/// Accumulated leak estimate above which a run is flagged.
pub const LEAK_WARNING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// No flux through the domain edge; leakage is only monitored.
    #[default]
    ZeroFlux,
    /// Homogeneous Dirichlet ghost cell; mass leaves through the edge.
    Absorbing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    pub p: f64,
    pub cfl_safety: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Ordered times in `[t_start, t_end]` at which functionals are recorded.
    pub snapshot_times: Vec<f64>,
    pub boundary: Boundary,
    /// Also compute `D_p` at every snapshot.
    pub with_dissipation: bool,
}

impl DiffusionParams {
    /// `count` equally spaced snapshots from `t_start` to `t_end` inclusive.
    pub fn uniform(p: f64, t_start: f64, t_end: f64, count: usize) -> Self {
        let times = if count < 2 {
            vec![t_end]
        } else {
            (0..count)
                .map(|k| {
                    if k == count - 1 {
                        t_end
                    } else {
                        t_start + (t_end - t_start) * k as f64 / (count - 1) as f64
                    }
                })
                .collect()
        };
        Self {
            p,
            cfl_safety: 0.45,
            t_start,
            t_end,
            snapshot_times: times,
            boundary: Boundary::ZeroFlux,
            with_dissipation: false,
        }
    }

    /// `count` snapshots spaced evenly in `log t`.
    pub fn geometric(p: f64, t_start: f64, t_end: f64, count: usize) -> Self {
        let mut params = Self::uniform(p, t_start, t_end, count);
        if count >= 2 && t_start > 0.0 {
            let ratio = (t_end / t_start).ln();
            params.snapshot_times = (0..count)
                .map(|k| {
                    if k == count - 1 {
                        t_end
                    } else {
                        t_start * (ratio * k as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect();
        }
        params
    }

    pub fn validate(&self, n: u32) -> Result<()> {
        Coefficients::new(self.p, n)?;
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(domain(MODULE, format!("cfl_safety = {} must lie in (0, 1)", self.cfl_safety)));
        }
        if !(self.t_start >= 0.0 && self.t_start.is_finite()) {
            return Err(domain(MODULE, format!("t_start = {} must be nonnegative", self.t_start)));
        }
        if !(self.t_end > self.t_start && self.t_end.is_finite()) {
            return Err(domain(
                MODULE,
                format!("t_end = {} must exceed t_start = {}", self.t_end, self.t_start),
            ));
        }
        let mut last = self.t_start;
        for &t in &self.snapshot_times {
            if !(t >= last && t <= self.t_end) {
                return Err(domain(
                    MODULE,
                    format!("snapshot times must be ordered within [t_start, t_end]; got {t}"),
                ));
            }
            last = t;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub t: f64,
    pub values: Vec<f64>,
    pub step_count: usize,
    pub rejected_steps: usize,
    /// Mass that actually left through the boundary.
    pub boundary_flux: f64,
    /// Mass a whole-space solution would have carried out of the domain,
    /// estimated from the outward gradient of `u^p` at the edges.
    pub leak_estimate: f64,
    /// Smallest `min(u)/max(u)` over all accepted steps.
    pub worst_min_ratio: f64,
}

impl SolverState {
    pub fn new(field: &DensityField, t: f64) -> Self {
        Self {
            t,
            values: field.values().to_vec(),
            step_count: 0,
            rejected_steps: 0,
            boundary_flux: 0.0,
            leak_estimate: 0.0,
            worst_min_ratio: 0.0,
        }
    }

    /// The state as a density, with the admissible round-off negatives clipped.
    pub fn field(&self, grid: Grid) -> Result<DensityField> {
        DensityField::new(grid, self.values.iter().map(|v| v.max(0.0)).collect())
    }
}

/// Precomputed geometry of one discretization.
#[derive(Debug, Clone)]
pub struct PmeSolver {
    grid: Grid,
    p: f64,
    boundary: Boundary,
    volumes: Vec<f64>,
    /// `faces[k]` separates cells `k-1` and `k`; `faces[0]` and
    /// `faces[nodes]` are the domain edges.
    faces: Vec<f64>,
    geometric_factor: f64,
}

impl PmeSolver {
    pub fn new(grid: Grid, p: f64, boundary: Boundary) -> Result<Self> {
        Coefficients::new(p, grid.dim())?;
        let volumes = grid.weights();
        let h = grid.spacing;
        let faces = match grid.geometry {
            Geometry::Cartesian1d => vec![1.0; grid.nodes + 1],
            Geometry::Radial { dim } => {
                let n = f64::from(dim);
                let mut faces = vec![0.0; grid.nodes + 1];
                let mut cumulative = 0.0;
                for k in 1..=grid.nodes {
                    cumulative += volumes[k - 1];
                    faces[k] = n * cumulative / (k as f64 * h);
                }
                faces
            }
        };
        let geometric_factor = match grid.geometry {
            Geometry::Cartesian1d => 1.0,
            Geometry::Radial { dim } => f64::from(dim),
        };
        Ok(Self { grid, p, boundary, volumes, faces, geometric_factor })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mass(&self, values: &[f64]) -> f64 {
        self.volumes.iter().zip(values).map(|(w, u)| w * u).sum()
    }

    /// Largest stable step: `cfl h^2 / (2 D_geom p max u^{p-1})`. For `p < 1`
    /// the diffusivity `p u^{p-1}` peaks at the smallest value.
    pub fn stable_dt(&self, values: &[f64], cfl_safety: f64) -> Result<f64> {
        let max = values.iter().copied().fold(0.0, f64::max);
        if !(max > 0.0) {
            return Err(domain(MODULE, "CFL step undefined: max(u) = 0"));
        }
        let diffusivity = if self.p == 1.0 {
            1.0
        } else if self.p > 1.0 {
            self.p * max.powf(self.p - 1.0)
        } else {
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            if !(min > 0.0) {
                return Err(domain(
                    MODULE,
                    "fast diffusion (p < 1) needs strictly positive data on the whole grid",
                ));
            }
            self.p * min.powf(self.p - 1.0)
        };
        let h = self.grid.spacing;
        Ok(cfl_safety * h * h / (2.0 * self.geometric_factor * diffusivity))
    }

    fn fluxes(&self, values: &[f64]) -> (Vec<f64>, f64) {
        let n = values.len();
        let h = self.grid.spacing;
        let p = self.p;
        let v: Vec<f64> = values
            .iter()
            .map(|&u| {
                let u = u.max(0.0);
                if p == 1.0 {
                    u
                } else if p == 2.0 {
                    u * u
                } else {
                    u.powf(p)
                }
            })
            .collect();
        let mut flux = vec![0.0; n + 1];
        for k in 1..n {
            flux[k] = self.faces[k] * (v[k] - v[k - 1]) / h;
        }
        // Outward flux a whole-space solution would carry through each open
        // edge, from the one-sided gradient of v there.
        let left = if self.grid.is_radial() {
            0.0
        } else {
            (self.faces[0] * (v[1] - v[0]) / h).max(0.0)
        };
        let right = (self.faces[n] * (v[n - 2] - v[n - 1]) / h).max(0.0);
        if self.boundary == Boundary::Absorbing {
            // Homogeneous Dirichlet ghost cell.
            if !self.grid.is_radial() {
                flux[0] = self.faces[0] * v[0] / h;
            }
            flux[n] = -self.faces[n] * v[n - 1] / h;
        }
        (flux, left + right)
    }

    /// One explicit step of length `dt` without acceptance checks.
    fn trial(&self, state: &SolverState, dt: f64) -> (Vec<f64>, f64, f64) {
        let (flux, leak_rate) = self.fluxes(&state.values);
        let n = state.values.len();
        let next: Vec<f64> = (0..n)
            .map(|i| state.values[i] + dt * (flux[i + 1] - flux[i]) / self.volumes[i])
            .collect();
        let outflow = dt * (flux[0] - flux[n]);
        (next, outflow, dt * leak_rate)
    }

    /// Advances by `dt`, halving it while the update goes negative.
    /// Returns the step length actually taken.
    pub fn step(&self, state: &mut SolverState, dt: f64) -> Result<f64> {
        let mut dt = dt;
        for rejection in 0..=MAX_REJECTIONS {
            let (next, outflow, leak) = self.trial(state, dt);
            let max = next.iter().copied().fold(0.0, f64::max);
            let min = next.iter().copied().fold(f64::INFINITY, f64::min);
            let admissible = min >= -NEGATIVITY_TOL * max && next.iter().all(|v| v.is_finite());
            if admissible {
                state.values = next;
                state.t += dt;
                state.step_count += 1;
                state.rejected_steps += rejection;
                state.boundary_flux += outflow;
                state.leak_estimate += leak;
                if max > 0.0 {
                    state.worst_min_ratio = state.worst_min_ratio.min(min / max);
                }
                return Ok(dt);
            }
            if rejection == MAX_REJECTIONS {
                return Err(Error::Stability {
                    t: state.t,
                    rejections: MAX_REJECTIONS,
                    min_value: min,
                });
            }
            dt *= 0.5;
        }
        unreachable!()
    }

    /// Steps until `state.t == target`, landing exactly on it.
    pub fn advance_to(&self, state: &mut SolverState, target: f64, cfl_safety: f64) -> Result<()> {
        while state.t < target {
            let remaining = target - state.t;
            let dt = self.stable_dt(&state.values, cfl_safety)?;
            if dt >= remaining {
                self.step(state, remaining)?;
                // Rejections may have shortened the final step.
                if (target - state.t).abs() <= 1e-14 * target.abs().max(1.0) {
                    state.t = target;
                }
            } else {
                self.step(state, dt)?;
            }
        }
        Ok(())
    }
}

/// Unclipped CFL step for a field; [`PmeSolver::advance_to`] clips it to the
/// next snapshot time.
pub fn cfl_dt(field: &DensityField, params: &DiffusionParams) -> Result<f64> {
    let solver = PmeSolver::new(*field.grid(), params.p, params.boundary)?;
    solver.stable_dt(field.values(), params.cfl_safety)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunWarning {
    /// The leak estimate exceeded [`LEAK_WARNING`]: the domain is too small
    /// for the whole-space problem.
    BoundaryLeak { leak_estimate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub field: DensityField,
    pub functionals: FunctionalSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub p: f64,
    pub grid: Grid,
    pub cfl_safety: f64,
    pub boundary: Boundary,
    pub snapshots: Vec<SnapshotRecord>,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    pub boundary_flux: f64,
    pub leak_estimate: f64,
    pub worst_min_ratio: f64,
    pub warnings: Vec<RunWarning>,
}

impl Run {
    pub fn series(&self) -> Vec<FunctionalSnapshot> {
        self.snapshots.iter().map(|s| s.functionals).collect()
    }

    /// `|mass + outflow - initial| / initial`.
    pub fn mass_drift(&self) -> f64 {
        (self.final_mass + self.boundary_flux - self.initial_mass).abs() / self.initial_mass
    }
}

/// Integrates from `params.t_start` and records functionals at every
/// snapshot time.
pub fn evolve(f0: &DensityField, params: &DiffusionParams) -> Result<Run> {
    let grid = *f0.grid();
    params.validate(grid.dim())?;
    let mass = f0.mass();
    if (mass - 1.0).abs() > 1e-6 {
        return Err(domain(MODULE, format!("initial data must have unit mass, got {mass}")));
    }
    let solver = PmeSolver::new(grid, params.p, params.boundary)?;
    let mut state = SolverState::new(f0, params.t_start);
    let initial_mass = solver.mass(&state.values);
    let mut snapshots = Vec::with_capacity(params.snapshot_times.len());
    for &t in &params.snapshot_times {
        solver.advance_to(&mut state, t, params.cfl_safety)?;
        let field = state.field(grid)?;
        let functionals = FunctionalSnapshot::compute(&field, params.p, state.t, params.with_dissipation)?;
        snapshots.push(SnapshotRecord { field, functionals });
    }
    solver.advance_to(&mut state, params.t_end, params.cfl_safety)?;
    let mut warnings = Vec::new();
    if state.leak_estimate > LEAK_WARNING {
        warnings.push(RunWarning::BoundaryLeak { leak_estimate: state.leak_estimate });
    }
    Ok(Run {
        p: params.p,
        grid,
        cfl_safety: params.cfl_safety,
        boundary: params.boundary,
        snapshots,
        initial_mass,
        final_mass: solver.mass(&state.values),
        steps: state.step_count,
        rejected_steps: state.rejected_steps,
        boundary_flux: state.boundary_flux,
        leak_estimate: state.leak_estimate,
        worst_min_ratio: state.worst_min_ratio,
        warnings,
    })
}

/// Domain sizing for fast diffusion, from the envelope
/// `(C_p + |x|^2)^{1/(p-1)} <= |x|^{-2b}`, `b = 1/(1-p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuardReport {
    pub compact_support: bool,
    /// Upper bound on the profile mass beyond the grid extent.
    pub tail_mass_outside: f64,
    /// Radius beyond which the profile mass is below `tol`.
    pub recommended_radius: f64,
    /// Radius beyond which `∫u^p` of the profile is below `tol`; `None`
    /// when `p <= n/(n+2)`.
    pub p_integral_radius: Option<f64>,
    pub sufficient: bool,
}

pub fn fast_diffusion_guard(p: f64, grid: &Grid, tol: f64, require_moments: bool) -> Result<GuardReport> {
    let n = grid.dim();
    let nf = f64::from(n);
    if require_moments && p <= nf / (nf + 2.0) {
        return Err(domain(
            MODULE,
            format!("p = {p} <= n/(n+2): the Barenblatt second moment diverges"),
        ));
    }
    if p > 1.0 {
        let spec = BarenblattSpec::new(p, n, Convention::Standard)?;
        let support = spec.support_radius().unwrap_or(0.0);
        return Ok(GuardReport {
            compact_support: true,
            tail_mass_outside: 0.0,
            recommended_radius: support,
            p_integral_radius: Some(support),
            sufficient: true,
        });
    }
    Coefficients::new(p, n)?;
    if p == 1.0 {
        return Err(domain(MODULE, "p = 1 has Gaussian tails; no Barenblatt envelope"));
    }
    let area = sphere_area(n);
    let b = 1.0 / (1.0 - p);
    // ∫_R^∞ |S| r^{n-1} r^{-2k} dr = |S| R^{n-2k} / (2k - n)
    let tail = |k: f64, r: f64| area * r.powf(nf - 2.0 * k) / (2.0 * k - nf);
    let radius_for = |k: f64| (tol * (2.0 * k - nf) / area).powf(1.0 / (nf - 2.0 * k));
    let extent = grid.extent();
    let tail_mass_outside = tail(b, extent);
    let recommended_radius = radius_for(b);
    let p_integral_radius = (2.0 * b * p > nf).then(|| radius_for(b * p));
    Ok(GuardReport {
        compact_support: false,
        tail_mass_outside,
        recommended_radius,
        p_integral_radius,
        sufficient: extent >= recommended_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bump(grid: Grid) -> DensityField {
        DensityField::sample(grid, |x| (-(x * x)).exp() + 0.3 * (-(x - 1.5f64).powi(2) * 4.0).exp())
            .unwrap()
            .normalized()
    }

    #[test]
    fn constant_field_is_stationary() {
        let grid = Grid::cartesian(64, 2.0).unwrap();
        let f = DensityField::sample(grid, |_| 0.25).unwrap();
        let solver = PmeSolver::new(grid, 2.0, Boundary::ZeroFlux).unwrap();
        let mut state = SolverState::new(&f, 0.0);
        let dt = solver.stable_dt(&state.values, 0.45).unwrap();
        solver.step(&mut state, dt).unwrap();
        assert!(state.values.iter().all(|&v| v == 0.25));
    }

    #[test]
    fn radial_face_areas() {
        let grid = Grid::radial(3, 10, 1.0).unwrap();
        let s = PmeSolver::new(grid, 2.0, Boundary::ZeroFlux).unwrap();
        let area = sphere_area(3);
        for k in 1..=10 {
            let expected = area * grid.coordinate(k - 1) * (grid.coordinate(k - 1) + grid.spacing);
            assert_relative_eq!(s.faces[k], expected, max_relative = 1e-12);
        }
        let grid = Grid::radial(2, 10, 1.0).unwrap();
        let s = PmeSolver::new(grid, 2.0, Boundary::ZeroFlux).unwrap();
        for k in 1..=10 {
            assert_relative_eq!(s.faces[k], 2.0 * std::f64::consts::PI * k as f64 * 0.1, max_relative = 1e-12);
        }
    }

    #[test]
    fn radial_laplacian_exact_on_quadratics() {
        // u = v for p = 1; Δ(c r^2) = 2 n c everywhere including the first cell.
        for dim in [1u32, 2, 3, 5] {
            let grid = Grid::radial(dim, 20, 2.0).unwrap();
            let f = DensityField::sample(grid, |r| 5.0 - r * r).unwrap();
            let solver = PmeSolver::new(grid, 1.0, Boundary::ZeroFlux).unwrap();
            let mut state = SolverState::new(&f, 0.0);
            let dt = 1e-6;
            solver.step(&mut state, dt).unwrap();
            for i in 0..19 {
                let rate = (state.values[i] - f.values()[i]) / dt;
                assert_relative_eq!(rate, -2.0 * f64::from(dim), max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn dt_scaling_laws() {
        let params = DiffusionParams::uniform(2.0, 1.0, 2.0, 2);
        let coarse = bump(Grid::cartesian(128, 6.0).unwrap());
        let fine = bump(Grid::cartesian(256, 6.0).unwrap());
        let ratio = cfl_dt(&coarse, &params).unwrap() / cfl_dt(&fine, &params).unwrap();
        // Same samples up to resolution, so max(u) differs slightly.
        assert_relative_eq!(ratio, 4.0, max_relative = 1e-2);
        let heat = DiffusionParams::uniform(1.0, 1.0, 2.0, 2);
        let scaled = DensityField::new(*coarse.grid(), coarse.values().iter().map(|v| 3.0 * v).collect()).unwrap();
        assert_eq!(cfl_dt(&coarse, &heat).unwrap(), cfl_dt(&scaled, &heat).unwrap());
        let zero = DensityField::new(Grid::cartesian(8, 1.0).unwrap(), vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let fast = DiffusionParams::uniform(0.8, 1.0, 2.0, 2);
        assert!(cfl_dt(&zero, &fast).is_err());
    }

    #[test]
    fn single_step_conserves_mass() {
        let spec = BarenblattSpec::new(2.0, 1, Convention::SelfSimilar).unwrap();
        let grid = Grid::cartesian(512, 5.0).unwrap();
        let f = DensityField::sample(grid, |x| spec.self_similar(x.abs(), 1.0).unwrap()).unwrap();
        let solver = PmeSolver::new(grid, 2.0, Boundary::ZeroFlux).unwrap();
        let mut state = SolverState::new(&f, 1.0);
        let m0 = solver.mass(&state.values);
        let dt = solver.stable_dt(&state.values, 0.45).unwrap();
        solver.step(&mut state, dt).unwrap();
        assert!((solver.mass(&state.values) - m0).abs() <= 1e-14 * m0);
    }

    #[test]
    fn absorbing_boundary_ledger() {
        let grid = Grid::cartesian(64, 2.0).unwrap();
        let f = DensityField::sample(grid, |x| 1.0 + 0.1 * x).unwrap().normalized();
        let solver = PmeSolver::new(grid, 1.0, Boundary::Absorbing).unwrap();
        let mut state = SolverState::new(&f, 0.0);
        let m0 = solver.mass(&state.values);
        solver.advance_to(&mut state, 0.05, 0.45).unwrap();
        assert!(state.boundary_flux > 0.0);
        assert!((solver.mass(&state.values) + state.boundary_flux - m0).abs() < 1e-13);
    }

    #[test]
    fn stability_error_after_rejections() {
        let grid = Grid::cartesian(32, 1.0).unwrap();
        let mut values = vec![0.0; 32];
        values[16] = 1.0;
        let f = DensityField::new(grid, values).unwrap();
        let solver = PmeSolver::new(grid, 2.0, Boundary::ZeroFlux).unwrap();
        let mut state = SolverState::new(&f, 0.0);
        // An absurd step is halved until admissible.
        let taken = solver.step(&mut state, 1.0).unwrap();
        assert!(taken < 1.0 && state.rejected_steps > 0);
        let mut state = SolverState::new(&f, 0.0);
        assert!(matches!(solver.step(&mut state, 1e30), Err(Error::Stability { .. })));
    }

    #[test]
    fn params_validation() {
        let grid = Grid::cartesian(64, 4.0).unwrap();
        let f = bump(grid);
        let mut params = DiffusionParams::uniform(2.0, 2.0, 1.0, 3);
        assert!(evolve(&f, &params).is_err());
        params = DiffusionParams::uniform(2.0, 1.0, 1.1, 3);
        params.cfl_safety = 1.5;
        assert!(evolve(&f, &params).is_err());
        params = DiffusionParams::uniform(0.0, 1.0, 1.1, 3);
        assert!(evolve(&f, &params).is_err());
        let heavy = DensityField::new(grid, f.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        assert!(evolve(&heavy, &DiffusionParams::uniform(2.0, 1.0, 1.1, 3)).is_err());
    }

    #[test]
    fn guard_reports() {
        let grid = Grid::cartesian(64, 4.0).unwrap();
        let r = fast_diffusion_guard(2.0, &grid, 1e-6, true).unwrap();
        assert!(r.compact_support && r.tail_mass_outside == 0.0);
        let r9 = fast_diffusion_guard(0.9, &grid, 1e-6, true).unwrap();
        let r8 = fast_diffusion_guard(0.8, &grid, 1e-6, true).unwrap();
        assert!(!r9.compact_support);
        assert!(r8.recommended_radius > r9.recommended_radius);
        let radial = Grid::radial(3, 64, 4.0).unwrap();
        assert!(fast_diffusion_guard(0.55, &radial, 1e-6, true).is_err());
        assert!(fast_diffusion_guard(0.55, &radial, 1e-6, false).unwrap().p_integral_radius.is_none());
    }
}
