//! Pass/fail verdicts over snapshot series, analytic profiles and single
//! densities.
//!
//! Time derivatives use the three-point formulas on the recorded snapshot
//! times, so the checks stay second-order accurate on non-uniform series.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::functionals::{
    centre_of_mass, dissipation, fisher_p, power_integral, self_similar_rescale, sobolev_pair, upsilon,
    FunctionalSnapshot,
};
use crate::grid::DensityField;
use crate::profiles::{gamma_const, BarenblattSpec, Coefficients, Convention};

const MODULE: &str = "verification";

/// Default tolerances.
pub const CONCAVITY_TOL: f64 = 1e-6;
pub const DEBRUIJN_TOL: f64 = 1e-2;
pub const DISSIPATION_TOL: f64 = 5e-2;
pub const ISOPERIMETRIC_TOL: f64 = 1e-3;
pub const UPSILON_TOL: f64 = 1e-8;
pub const CONVERGENCE_TARGET: f64 = 1e-2;
pub const CONVERGENCE_SLACK: f64 = 1e-6;
/// Smallest `D_p` accepted as a denominator.
pub const DEGENERATE_FLOOR: f64 = 1e-300;

/// One machine-readable check outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    /// The worst observed statistic (residual, violation or margin).
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(check: &str, value: f64, tolerance: f64, passed: bool, detail: impl Into<String>) -> Self {
        Self { check: check.to_string(), value, tolerance, passed, detail: detail.into() }
    }
}

fn require(needed: usize, got: usize) -> Result<()> {
    if got < needed {
        Err(Error::InsufficientData { needed, got })
    } else {
        Ok(())
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain(MODULE, "snapshot times must be strictly increasing"));
    }
    Ok(())
}

/// Three-point second derivative at every interior time.
pub fn second_differences(times: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    require(3, times.len().min(values.len()))?;
    check_times(times)?;
    Ok((1..times.len() - 1)
        .map(|k| {
            let (h0, h1) = (times[k] - times[k - 1], times[k + 1] - times[k]);
            let s0 = (values[k] - values[k - 1]) / h0;
            let s1 = (values[k + 1] - values[k]) / h1;
            2.0 * (s1 - s0) / (h0 + h1)
        })
        .collect())
}

/// Three-point first derivative at every interior time; second order on
/// non-uniform spacing.
pub fn central_derivatives(times: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    require(3, times.len().min(values.len()))?;
    check_times(times)?;
    Ok((1..times.len() - 1)
        .map(|k| {
            let (h0, h1) = (times[k] - times[k - 1], times[k + 1] - times[k]);
            let s0 = (values[k] - values[k - 1]) / h0;
            let s1 = (values[k + 1] - values[k]) / h1;
            (h1 * s0 + h0 * s1) / (h0 + h1)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    /// Interior times.
    pub times: Vec<f64>,
    /// Second differences divided by `scale`.
    pub normalized: Vec<f64>,
    /// `max |first difference| / (t_last - t_first)`, a curvature unit.
    pub scale: f64,
    pub max_violation: f64,
    pub worst_time: f64,
    pub verdict: Verdict,
}

/// Concavity of an arbitrary series: every normalized second difference
/// must be at most `tol`.
pub fn concavity_of(times: &[f64], values: &[f64], tol: f64) -> Result<ConcavityReport> {
    let d2 = second_differences(times, values)?;
    let max_slope = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| ((v[1] - v[0]) / (t[1] - t[0])).abs())
        .fold(0.0, f64::max);
    let span = times[times.len() - 1] - times[0];
    let scale = if max_slope > 0.0 { max_slope / span } else { 1.0 };
    let normalized: Vec<f64> = d2.iter().map(|d| d / scale).collect();
    let (worst, max_violation) = normalized
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    let worst_time = times[worst + 1];
    let passed = max_violation <= tol;
    Ok(ConcavityReport {
        times: times[1..times.len() - 1].to_vec(),
        normalized,
        scale,
        max_violation,
        worst_time,
        verdict: Verdict::new(
            "concavity",
            max_violation,
            tol,
            passed,
            format!("largest normalized second difference of N_p at t = {worst_time}"),
        ),
    })
}

pub fn concavity_report(series: &[FunctionalSnapshot], tol: f64) -> Result<ConcavityReport> {
    let t: Vec<f64> = series.iter().map(|s| s.t).collect();
    let n: Vec<f64> = series.iter().map(|s| s.n_p).collect();
    concavity_of(&t, &n, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub differences: Vec<f64>,
    pub max_increase: f64,
    pub verdict: Verdict,
}

/// `Υ_p(t_{k+1}) <= Υ_p(t_k) + tol` for every consecutive pair.
pub fn upsilon_monotone(series: &[FunctionalSnapshot], tol: f64) -> Result<MonotoneReport> {
    require(2, series.len())?;
    let differences: Vec<f64> = series.windows(2).map(|w| w[1].upsilon - w[0].upsilon).collect();
    let max_increase = differences.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(MonotoneReport {
        verdict: Verdict::new(
            "upsilon-monotone",
            max_increase,
            tol,
            max_increase <= tol,
            "largest increase of N_p I_p between snapshots",
        ),
        differences,
        max_increase,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub verdict: Verdict,
}

fn identity_report(
    check: &str,
    times: &[f64],
    derivative: &[f64],
    expected: &[f64],
    tol: f64,
) -> Result<IdentityReport> {
    let residuals: Vec<f64> = derivative
        .iter()
        .zip(expected)
        .map(|(d, e)| (d - e).abs() / e.abs())
        .collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(IdentityReport {
        times: times.to_vec(),
        verdict: Verdict::new(check, max_residual, tol, max_residual <= tol, "max relative residual"),
        residuals,
        max_residual,
    })
}

/// `dH_p/dt = I_p` at interior snapshots (Shannon quantities at `p = 1`).
pub fn debruijn_check(series: &[FunctionalSnapshot], tol: f64) -> Result<IdentityReport> {
    require(3, series.len())?;
    let t: Vec<f64> = series.iter().map(|s| s.t).collect();
    let h: Vec<f64> = series.iter().map(|s| s.h_p).collect();
    let dh = central_derivatives(&t, &h)?;
    let interior = &series[1..series.len() - 1];
    let i: Vec<f64> = interior.iter().map(|s| s.i_p).collect();
    identity_report("debruijn", &t[1..t.len() - 1], &dh, &i, tol)
}

/// `-dF_p/dt = D_p` at interior snapshots.
pub fn dissipation_check(series: &[FunctionalSnapshot], tol: f64) -> Result<IdentityReport> {
    require(3, series.len())?;
    let t: Vec<f64> = series.iter().map(|s| s.t).collect();
    let f: Vec<f64> = series.iter().map(|s| -s.f_p).collect();
    let df = central_derivatives(&t, &f)?;
    let interior = &series[1..series.len() - 1];
    let d = interior
        .iter()
        .map(|s| {
            let d = s.d_p.ok_or_else(|| domain(MODULE, "snapshot series was recorded without D_p"))?;
            if d.abs() < DEGENERATE_FLOOR {
                Err(Error::Degenerate(format!("D_p = {d} at t = {}", s.t)))
            } else {
                Ok(d)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    identity_report("dissipation", &t[1..t.len() - 1], &df, &d, tol)
}

/// Both sides of the concavity condition and the inequalities that lead to
/// it, for one density. Margins are `lhs - rhs`; a nonnegative margin means
/// the inequality holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionChain {
    pub sigma: f64,
    pub z: f64,
    pub f_p: f64,
    pub d_p: f64,
    pub hessian_sq: f64,
    pub laplacian_sq: f64,
    /// `|D^2 g|^2 >= (Δg)^2 / n`, integrated against `u^p`.
    pub trace_margin: f64,
    /// `Z ∫u^p (Δg)^2 >= F_p^2`.
    pub cauchy_schwarz_margin: f64,
    /// `D_p >= 2(1/n + p - 1) ∫u^p (Δg)^2`.
    pub dissipation_lower_bound: f64,
    /// `D_p Z >= (sigma + p - 1) F_p^2`.
    pub condition_margin: f64,
    /// `d^2 N_p/dt^2` implied by `(Z, F_p, D_p)` at `sigma = nu`.
    pub predicted_curvature: f64,
}

impl ConditionChain {
    pub fn relative_condition_margin(&self) -> f64 {
        self.condition_margin / (self.d_p * self.z).abs()
    }
}

/// Evaluates the chain with `sigma` (defaults to `nu`).
pub fn concavity_condition_chain(f: &DensityField, p: f64, sigma: Option<f64>) -> Result<ConditionChain> {
    if p == 1.0 {
        return Err(domain(MODULE, "the condition chain is stated for p != 1"));
    }
    let c = Coefficients::new(p, f.dim())?;
    let n = c.dim();
    let sigma = sigma.unwrap_or(c.nu);
    let diss = dissipation(f, p)?;
    let z = power_integral(f, p);
    let (f_p, _) = fisher_p(f, p)?;
    let n_p = (c.nu * z.ln() / (1.0 - p)).exp();
    let lower = 2.0 * (1.0 / n + p - 1.0) * diss.laplacian_sq;
    Ok(ConditionChain {
        sigma,
        z,
        f_p,
        d_p: diss.d_p,
        hessian_sq: diss.hessian_sq,
        laplacian_sq: diss.laplacian_sq,
        trace_margin: diss.hessian_sq - diss.laplacian_sq / n,
        cauchy_schwarz_margin: z * diss.laplacian_sq - f_p * f_p,
        dissipation_lower_bound: lower,
        condition_margin: diss.d_p * z - (sigma + p - 1.0) * f_p * f_p,
        predicted_curvature: n_p * c.nu * ((c.nu + p - 1.0) * f_p * f_p - diss.d_p * z) / (z * z),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub times: Vec<f64>,
    /// `D_p / (2(1/n + p - 1) ∫u^p (Δg)^2) - 1` per snapshot.
    pub relative_margins: Vec<f64>,
    pub verdict: Verdict,
}

/// The trace lower bound on `D_p` at each `(t, field)`.
pub fn trace_bound_check(snapshots: &[(f64, &DensityField)], p: f64, tol: f64) -> Result<TraceReport> {
    require(1, snapshots.len())?;
    let mut times = Vec::new();
    let mut margins = Vec::new();
    for (t, f) in snapshots {
        let chain = concavity_condition_chain(f, p, None)?;
        times.push(*t);
        margins.push((chain.d_p - chain.dissipation_lower_bound) / chain.d_p.abs());
    }
    let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TraceReport {
        times,
        relative_margins: margins,
        verdict: Verdict::new(
            "trace-bound",
            worst,
            tol,
            worst >= -tol,
            "smallest relative margin of D_p over its trace lower bound",
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricReport {
    pub upsilon: f64,
    pub gamma: f64,
    pub margin: f64,
    pub relative_margin: f64,
    pub verdict: Verdict,
}

/// `Υ_p(f) - gamma_{n,p} >= -rel_tol gamma_{n,p}`; needs `p > n/(n+2)`.
pub fn isoperimetric_check(f: &DensityField, p: f64, rel_tol: f64) -> Result<IsoperimetricReport> {
    let n = f64::from(f.dim());
    if p <= n / (n + 2.0) {
        return Err(domain(
            MODULE,
            format!("p = {p} <= n/(n+2) = {}: the Barenblatt second moment is unbounded", n / (n + 2.0)),
        ));
    }
    let gamma = gamma_const(p, f.dim())?;
    let ups = upsilon(f, p)?;
    let margin = ups - gamma;
    let relative_margin = margin / gamma;
    Ok(IsoperimetricReport {
        upsilon: ups,
        gamma,
        margin,
        relative_margin,
        verdict: Verdict::new(
            "isoperimetric",
            relative_margin,
            rel_tol,
            relative_margin >= -rel_tol,
            "(N_p I_p - gamma) / gamma",
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub times: Vec<f64>,
    /// L1 distance between the rescaled solution and the time-one profile.
    pub distances: Vec<f64>,
    pub max_increase: f64,
    pub final_distance: f64,
    /// `(Υ_p - gamma) / gamma` at the last snapshot.
    pub final_upsilon_gap: f64,
    pub verdicts: Vec<Verdict>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// L1 distance of `self_similar_rescale(f, t)` to the self-similar profile
/// centred at the (conserved) centre of mass.
pub fn rescaled_distance(f: &DensityField, t: f64, p: f64) -> Result<f64> {
    let spec = BarenblattSpec::new(p, f.dim(), Convention::SelfSimilar)?;
    let u = self_similar_rescale(f, t, p)?;
    let centre = centre_of_mass(&u);
    let grid = u.grid();
    let w = grid.weights();
    Ok(u.values()
        .iter()
        .enumerate()
        .map(|(i, v)| w[i] * (v - spec.profile((grid.coordinate(i) - centre).abs())).abs())
        .sum())
}

/// Rescaled L1 distances must be nonincreasing within `slack` and end below
/// `target`; `Υ_p` at the end must lie within `upsilon_tol gamma` of gamma.
pub fn barenblatt_convergence(
    snapshots: &[(f64, &DensityField)],
    p: f64,
    target: f64,
    slack: f64,
    upsilon_tol: f64,
) -> Result<ConvergenceReport> {
    require(2, snapshots.len())?;
    let mut times = Vec::with_capacity(snapshots.len());
    let mut distances = Vec::with_capacity(snapshots.len());
    for (t, f) in snapshots {
        times.push(*t);
        distances.push(rescaled_distance(f, *t, p)?);
    }
    check_times(&times)?;
    let max_increase = distances.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let final_distance = distances[distances.len() - 1];
    let last = snapshots[snapshots.len() - 1].1;
    let gamma = gamma_const(p, last.dim())?;
    let final_upsilon_gap = (upsilon(last, p)? - gamma) / gamma;
    let verdicts = vec![
        Verdict::new(
            "convergence-monotone",
            max_increase,
            slack,
            max_increase <= slack,
            "largest increase of the rescaled L1 distance",
        ),
        Verdict::new(
            "convergence-distance",
            final_distance,
            target,
            final_distance < target,
            format!("rescaled L1 distance at t = {}", times[times.len() - 1]),
        ),
        Verdict::new(
            "convergence-upsilon",
            final_upsilon_gap,
            upsilon_tol,
            final_upsilon_gap.abs() < upsilon_tol,
            "(N_p I_p - gamma) / gamma at the last snapshot",
        ),
    ];
    Ok(ConvergenceReport { times, distances, max_increase, final_distance, final_upsilon_gap, verdicts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    pub dirichlet: f64,
    pub sobolev_rhs: f64,
    pub deficit: f64,
    pub relative_deficit: f64,
    pub substitution_residual: f64,
    pub verdict: Verdict,
}

/// `∫|∇g|^2 - S_n (∫g^{2*})^{2/2*} >= -tol` relative to the right side.
pub fn sobolev_check(g: &DensityField, tol: f64) -> Result<SobolevReport> {
    let pair = sobolev_pair(g)?;
    let relative_deficit = pair.deficit() / pair.sobolev_rhs;
    Ok(SobolevReport {
        dirichlet: pair.dirichlet,
        sobolev_rhs: pair.sobolev_rhs,
        deficit: pair.deficit(),
        relative_deficit,
        substitution_residual: pair.substitution_residual(),
        verdict: Verdict::new(
            "sobolev",
            relative_deficit,
            tol,
            relative_deficit >= -tol,
            "relative Sobolev deficit",
        ),
    })
}

/// Tolerances for [`ExperimentReport::from_series`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub concavity: f64,
    pub debruijn: f64,
    pub dissipation: f64,
    pub isoperimetric: f64,
    pub upsilon: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            concavity: CONCAVITY_TOL,
            debruijn: DEBRUIJN_TOL,
            dissipation: DISSIPATION_TOL,
            isoperimetric: ISOPERIMETRIC_TOL,
            upsilon: UPSILON_TOL,
        }
    }
}

/// Which series checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Concavity,
    Debruijn,
    Dissipation,
    UpsilonMonotone,
    Isoperimetric,
}

impl std::str::FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "concavity" => Ok(Self::Concavity),
            "debruijn" => Ok(Self::Debruijn),
            "dissipation" => Ok(Self::Dissipation),
            "upsilon" | "upsilon-monotone" => Ok(Self::UpsilonMonotone),
            "isoperimetric" => Ok(Self::Isoperimetric),
            other => Err(domain(
                "cli",
                format!(
                    "unknown check '{other}'; expected concavity, debruijn, dissipation, \
                     upsilon or isoperimetric"
                ),
            )),
        }
    }
}

/// A series together with the verdicts derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub p: f64,
    pub n: u32,
    pub series: Vec<FunctionalSnapshot>,
    pub second_differences: Vec<f64>,
    pub upsilon_differences: Vec<f64>,
    pub debruijn_residuals: Vec<f64>,
    pub dissipation_residuals: Vec<f64>,
    /// `(Υ_p - gamma)/gamma` per snapshot when `p > n/(n+2)`.
    pub isoperimetric_margins: Vec<f64>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    /// Runs the requested checks; the result depends only on the inputs.
    pub fn from_series(
        series: &[FunctionalSnapshot],
        p: f64,
        n: u32,
        checks: &[Check],
        tol: &Tolerances,
    ) -> Result<Self> {
        let mut report = Self {
            p,
            n,
            series: series.to_vec(),
            second_differences: Vec::new(),
            upsilon_differences: Vec::new(),
            debruijn_residuals: Vec::new(),
            dissipation_residuals: Vec::new(),
            isoperimetric_margins: Vec::new(),
            verdicts: Vec::new(),
        };
        for check in checks {
            match check {
                Check::Concavity => {
                    let r = concavity_report(series, tol.concavity)?;
                    report.second_differences = r.normalized;
                    report.verdicts.push(r.verdict);
                }
                Check::Debruijn => {
                    let r = debruijn_check(series, tol.debruijn)?;
                    report.debruijn_residuals = r.residuals;
                    report.verdicts.push(r.verdict);
                }
                Check::Dissipation => {
                    let r = dissipation_check(series, tol.dissipation)?;
                    report.dissipation_residuals = r.residuals;
                    report.verdicts.push(r.verdict);
                }
                Check::UpsilonMonotone => {
                    let r = upsilon_monotone(series, tol.upsilon)?;
                    report.upsilon_differences = r.differences;
                    report.verdicts.push(r.verdict);
                }
                Check::Isoperimetric => {
                    let nf = f64::from(n);
                    if p <= nf / (nf + 2.0) {
                        return Err(domain(
                            MODULE,
                            format!("isoperimetric check needs p > n/(n+2) = {}", nf / (nf + 2.0)),
                        ));
                    }
                    let gamma = gamma_const(p, n)?;
                    report.isoperimetric_margins =
                        series.iter().map(|s| (s.upsilon - gamma) / gamma).collect();
                    let worst = report.isoperimetric_margins.iter().copied().fold(f64::INFINITY, f64::min);
                    report.verdicts.push(Verdict::new(
                        "isoperimetric",
                        worst,
                        tol.isoperimetric,
                        worst >= -tol.isoperimetric,
                        "smallest (N_p I_p - gamma) / gamma over the series",
                    ));
                }
            }
        }
        Ok(report)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// A fixed-width table with one row per verdict.
    pub fn summary_table(&self) -> String {
        summary_table(&self.verdicts)
    }
}

pub fn summary_table(verdicts: &[Verdict]) -> String {
    let mut out = format!("{:<22} {:>14} {:>12}  {}\n", "check", "value", "tolerance", "result");
    for v in verdicts {
        out.push_str(&format!(
            "{:<22} {:>14.6e} {:>12.3e}  {}\n",
            v.check,
            v.value,
            v.tolerance,
            if v.passed { "PASS" } else { "FAIL" }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::assert_relative_eq;

    fn snap(t: f64, n_p: f64, h_p: f64, i_p: f64, upsilon: f64) -> FunctionalSnapshot {
        FunctionalSnapshot { t, mass: 1.0, e_p: 0.0, h_p, n_p, f_p: 0.0, i_p, d_p: None, upsilon }
    }

    #[test]
    fn second_differences_exact_on_quadratics() {
        let t = [0.0, 0.1, 0.35, 0.4, 1.0];
        let v: Vec<f64> = t.iter().map(|t| 3.0 * t * t - t + 2.0).collect();
        for d in second_differences(&t, &v).unwrap() {
            assert_relative_eq!(d, 6.0, max_relative = 1e-12);
        }
        for (k, d) in central_derivatives(&t, &v).unwrap().iter().enumerate() {
            assert_relative_eq!(*d, 6.0 * t[k + 1] - 1.0, max_relative = 1e-12);
        }
        assert!(matches!(
            second_differences(&t[..2], &v[..2]),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
        assert!(second_differences(&[0.0, 0.0, 1.0], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn concavity_controls() {
        let t: Vec<f64> = (0..33).map(|k| 1.0 + k as f64 / 32.0).collect();
        let linear: Vec<f64> = t.iter().map(|t| 41.7 * t).collect();
        let r = concavity_of(&t, &linear, CONCAVITY_TOL).unwrap();
        assert!(r.verdict.passed && r.max_violation.abs() < 1e-12);
        let convex: Vec<f64> = t.iter().map(|t| t * t).collect();
        let r = concavity_of(&t, &convex, CONCAVITY_TOL).unwrap();
        assert!(!r.verdict.passed);
        assert_relative_eq!(r.max_violation, 2.0 / (t[31] + t[32]), max_relative = 1e-9);
        let concave: Vec<f64> = t.iter().map(|t| t.sqrt()).collect();
        assert!(concavity_of(&t, &concave, CONCAVITY_TOL).unwrap().verdict.passed);
    }

    #[test]
    fn upsilon_controls() {
        let down: Vec<_> = (0..5).map(|k| snap(k as f64, 1.0, 0.0, 1.0, 10.0 - k as f64)).collect();
        assert!(upsilon_monotone(&down, 0.0).unwrap().verdict.passed);
        let up: Vec<_> = down.iter().rev().enumerate().map(|(k, s)| FunctionalSnapshot { t: k as f64, ..*s }).collect();
        assert!(!upsilon_monotone(&up, 1e-3).unwrap().verdict.passed);
        assert!(upsilon_monotone(&down[..1], 0.0).is_err());
    }

    #[test]
    fn debruijn_on_exact_heat_series() {
        // H = (1/2) log(4 pi e t), I = 1/(2t) for the one-dimensional kernel.
        let series = |dt: f64| -> Vec<FunctionalSnapshot> {
            (0..=8)
                .map(|k| {
                    let t = 1.0 + dt * k as f64;
                    let h = 0.5 * (4.0 * std::f64::consts::PI * std::f64::consts::E * t).ln();
                    snap(t, 0.0, h, 0.5 / t, 0.0)
                })
                .collect()
        };
        let coarse = debruijn_check(&series(0.1), 1e-2).unwrap();
        let fine = debruijn_check(&series(0.05), 1e-2).unwrap();
        assert!(coarse.verdict.passed);
        let ratio = coarse.residuals[0] / fine.residuals[1];
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn dissipation_needs_dp() {
        let series: Vec<_> = (0..4).map(|k| snap(k as f64, 1.0, 0.0, 1.0, 1.0)).collect();
        assert!(dissipation_check(&series, 0.1).is_err());
        let zero: Vec<_> = series.iter().map(|s| FunctionalSnapshot { d_p: Some(0.0), ..*s }).collect();
        assert!(matches!(dissipation_check(&zero, 0.1), Err(Error::Degenerate(_))));
    }

    fn barenblatt(p: f64, n: u32, nodes: usize, radius: f64) -> DensityField {
        let spec = BarenblattSpec::new(p, n, Convention::Standard).unwrap();
        let r = spec.support_radius().unwrap_or(radius);
        DensityField::sample(Grid::radial(n, nodes, r).unwrap(), |x| spec.profile(x)).unwrap()
    }

    #[test]
    fn chain_is_tight_on_barenblatt() {
        for (p, n) in [(2.0, 1), (1.5, 3), (0.9, 1)] {
            let f = barenblatt(p, n, 4096, 40.0);
            let chain = concavity_condition_chain(&f, p, None).unwrap();
            assert!(chain.relative_condition_margin().abs() < 1e-3, "{p} {n} {chain:?}");
            assert!(chain.trace_margin.abs() <= 1e-3 * chain.hessian_sq);
            let sharper = concavity_condition_chain(&f, p, Some(chain.sigma + 0.1)).unwrap();
            assert!(sharper.condition_margin < 0.0);
        }
    }

    #[test]
    fn isoperimetric_on_barenblatt_and_domain() {
        let f = barenblatt(2.0, 1, 4096, 0.0);
        let r = isoperimetric_check(&f, 2.0, 1e-4).unwrap();
        assert!(r.relative_margin.abs() < 1e-4 && r.verdict.passed);
        let g = DensityField::sample(Grid::radial(3, 256, 10.0).unwrap(), |x| (-x * x).exp()).unwrap();
        assert!(isoperimetric_check(&g, 0.55, 1e-3).is_err());
    }

    #[test]
    fn convergence_of_the_profile_itself() {
        let spec = BarenblattSpec::new(2.0, 1, Convention::SelfSimilar).unwrap();
        let grid = Grid::cartesian(4096, 6.0).unwrap();
        let fields: Vec<(f64, DensityField)> = [1.0, 2.0, 8.0]
            .iter()
            .map(|&t| (t, DensityField::sample(grid, |x| spec.self_similar(x.abs(), t).unwrap()).unwrap()))
            .collect();
        let refs: Vec<(f64, &DensityField)> = fields.iter().map(|(t, f)| (*t, f)).collect();
        let r = barenblatt_convergence(&refs, 2.0, 1e-2, 1e-3, 1e-2).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.final_distance < 1e-3);
    }

    #[test]
    fn report_is_deterministic_and_tabulated() {
        let series: Vec<_> = (0..6)
            .map(|k| {
                let t = 1.0 + 0.1 * k as f64;
                snap(t, 3.0 * t, (3.0 * t).ln(), 1.0 / t, 3.0)
            })
            .collect();
        let checks = [Check::Concavity, Check::UpsilonMonotone, Check::Debruijn];
        let a = ExperimentReport::from_series(&series, 2.0, 1, &checks, &Tolerances::default()).unwrap();
        let b = ExperimentReport::from_series(&series, 2.0, 1, &checks, &Tolerances::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.verdicts.len(), 3);
        assert!(a.summary_table().contains("concavity"));
        assert!("nonsense".parse::<Check>().is_err());
    }
}
