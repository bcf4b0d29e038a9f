//! Verdicts on solver output and analytic data.

use renyi_core::functionals::rescale;
use renyi_core::initial::InitialData;
use renyi_core::profiles::{BarenblattSpec, Convention};
use renyi_core::solver::{evolve, DiffusionParams};
use renyi_core::verification::{
    concavity_condition_chain, concavity_report, dissipation_check, isoperimetric_check,
    sobolev_check, upsilon_monotone, ExperimentReport, Check, Tolerances,
};
use renyi_core::{DensityField, Grid};

#[test]
fn analytic_barenblatt_series_is_linear_and_upsilon_constant() {
    let spec = BarenblattSpec::new(1.5, 1, Convention::SelfSimilar).unwrap();
    let grid = Grid::cartesian(4096, 6.0).unwrap();
    let series: Vec<_> = (0..9)
        .map(|k| {
            let t = 1.0 + 0.125 * k as f64;
            let f = DensityField::sample(grid, |x| spec.self_similar(x.abs(), t).unwrap()).unwrap();
            renyi_core::functionals::FunctionalSnapshot::compute(&f, 1.5, t, false).unwrap()
        })
        .collect();
    let r = concavity_report(&series, 1e-6).unwrap();
    assert!(r.max_violation.abs() < 1e-4, "{}", r.max_violation);
    let gamma = renyi_core::profiles::gamma_const(1.5, 1).unwrap();
    assert!(upsilon_monotone(&series, 1e-4 * gamma).unwrap().verdict.passed);
}

#[test]
fn mixture_flow_passes_concavity_and_upsilon_monotone() {
    let grid = Grid::cartesian(512, 6.0).unwrap();
    let f = InitialData::TwoBump { seed: 9, compact: false }.sample(grid, 1.5, 0.0).unwrap();
    let run = evolve(&f, &DiffusionParams::uniform(1.5, 0.0, 0.25, 17)).unwrap();
    let series = run.series();
    let checks = [Check::Concavity, Check::UpsilonMonotone, Check::Isoperimetric, Check::Debruijn];
    let report = ExperimentReport::from_series(&series, 1.5, 1, &checks, &Tolerances::default()).unwrap();
    let failing: Vec<_> = report.verdicts.iter().filter(|v| !v.passed).collect();
    assert!(failing.is_empty(), "{failing:?}");
    // Reversed in time, Υ increases.
    let mut reversed = series.clone();
    reversed.reverse();
    for (k, s) in reversed.iter_mut().enumerate() {
        s.t = k as f64;
    }
    assert!(!upsilon_monotone(&reversed, 1e-8).unwrap().verdict.passed);
}

#[test]
fn curvature_sign_agrees_with_condition_chain() {
    let grid = Grid::cartesian(512, 6.0).unwrap();
    let f = InitialData::TwoBump { seed: 3, compact: false }.sample(grid, 2.0, 0.0).unwrap();
    let run = evolve(&f, &DiffusionParams::uniform(2.0, 0.0, 0.25, 9)).unwrap();
    let concave = concavity_report(&run.series(), 1e-6).unwrap().verdict.passed;
    let predicted = run
        .snapshots
        .iter()
        .all(|s| concavity_condition_chain(&s.field, 2.0, None).unwrap().predicted_curvature <= 0.0);
    assert!(concave && predicted);
}

#[test]
fn chain_margins_on_mixtures() {
    for p in [0.8, 1.5, 2.0] {
        for seed in 0..10u64 {
            for grid in [Grid::cartesian(1024, 20.0).unwrap(), Grid::radial(3, 1024, 20.0).unwrap()] {
                let f = InitialData::Mixture { seed }.sample(grid, p, 0.0).unwrap();
                let c = concavity_condition_chain(&f, p, None).unwrap();
                assert!(c.trace_margin >= -1e-8 * c.hessian_sq);
                assert!(c.cauchy_schwarz_margin >= -1e-8 * c.z * c.laplacian_sq);
                assert!(c.relative_condition_margin() >= -1e-8, "p {p} seed {seed}: {c:?}");
            }
        }
    }
}

#[test]
fn dissipation_residual_shrinks_under_refinement() {
    let residual = |nodes: usize, snaps: usize| {
        let grid = Grid::cartesian(nodes, 6.0).unwrap();
        let f = InitialData::TwoBump { seed: 1, compact: false }.sample(grid, 0.9, 0.0).unwrap();
        let mut params = DiffusionParams::uniform(0.9, 0.0, 0.3, snaps);
        params.snapshot_times = (0..snaps).map(|k| 0.3 - 0.2 * (snaps - 1 - k) as f64 / (snaps - 1) as f64).collect();
        params.with_dissipation = true;
        dissipation_check(&evolve(&f, &params).unwrap().series(), 5e-2).unwrap().max_residual
    };
    let coarse = residual(256, 9);
    let fine = residual(512, 17);
    assert!(fine < coarse, "{fine} vs {coarse}");
}

#[test]
fn isoperimetric_margin_is_dilation_invariant() {
    let grid = Grid::cartesian(2048, 8.0).unwrap();
    let f = InitialData::Mixture { seed: 5 }.sample(grid, 1.5, 0.0).unwrap();
    let a = isoperimetric_check(&f, 1.5, 1e-3).unwrap();
    let b = isoperimetric_check(&rescale(&f, 3.0).unwrap(), 1.5, 1e-3).unwrap();
    assert!((a.margin - b.margin).abs() <= 1e-10 * a.gamma);
}

#[test]
fn sobolev_extremal_is_sharp() {
    // g = (1 + r^2)^{-(n-2)/2}; the Dirichlet tail beyond R is about 4 pi / R.
    let grid = Grid::radial(3, 1 << 18, 8000.0).unwrap();
    let g = DensityField::sample(grid, |r| (1.0 + r * r).powf(-0.5)).unwrap();
    let r = sobolev_check(&g, 1e-3).unwrap();
    assert!(r.relative_deficit.abs() < 1e-3, "{r:?}");
    assert!(r.substitution_residual < 1e-3);
}

#[test]
fn sobolev_deficit_nonnegative_on_bumps() {
    for seed in 0..10u64 {
        let grid = Grid::radial(3, 2048, 12.0).unwrap();
        let g = InitialData::Mixture { seed }.sample(grid, 2.0, 0.0).unwrap();
        let r = sobolev_check(&g, 0.0).unwrap();
        assert!(r.verdict.passed && r.relative_deficit > 0.0, "seed {seed}: {r:?}");
        assert!(r.substitution_residual < 1e-2);
    }
    let line = Grid::cartesian(64, 1.0).unwrap();
    let g = DensityField::sample(line, |x| 1.0 + x * x).unwrap();
    assert!(sobolev_check(&g, 0.0).is_err());
}
