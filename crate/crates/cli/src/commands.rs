//! Subcommand implementations. Every output is a deterministic function of
//! the resolved configuration, so identical configs give identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use renyi_core::functionals::FunctionalSnapshot;
use renyi_core::initial::InitialData;
use renyi_core::io::{
    key_values_to_string, parse_key_values, read_profile, read_snapshots, write_profile,
    write_snapshots,
};
use renyi_core::profiles::{
    barenblatt_a, barenblatt_c, coefficients, gamma_const, shannon_heat_entropy_power, sobolev_constant, sobolev_gamma,
    BarenblattSpec, Convention, HeatKernelSpec,
};
use renyi_core::solver::{evolve as run_solver, Run, RunWarning};
use renyi_core::verification::{summary_table, ExperimentReport, Verdict};
use renyi_core::{DensityField, Geometry};

use crate::config::{config_hash, Experiment, Flags, GeometryKind, Settings, ROUNDTRIP};
use crate::Failure;

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("io: {}: {e}", path.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| io_failure(path, e))
}

fn experiment_dir(root: &Path, kind: &str, hash: &str) -> Result<PathBuf, Failure> {
    let dir = root.join(format!("{kind}-{hash}"));
    create_dir(&dir)?;
    Ok(dir)
}

// ---------------------------------------------------------------- constants

/// Pairs tabulated when none are configured.
const DEFAULT_PAIRS: [(f64, u32); 6] = [(2.0, 1), (1.5, 2), (0.9, 1), (0.7166666666666667, 3), (3.0, 3), (1.0 / 3.0, 3)];

#[derive(Serialize)]
struct ConstantsConfig<'a> {
    pairs: &'a [(f64, u32)],
}

fn constants_row(p: f64, n: u32) -> Result<String, String> {
    let c = coefficients(p, n).map_err(|e| e.to_string())?;
    let a = barenblatt_a(p, n).map_err(|e| e.to_string())?;
    let cp = barenblatt_c(p, n).map_err(|e| e.to_string())?;
    let spec = BarenblattSpec::new(p, n, Convention::Standard).map_err(|e| e.to_string())?;
    let h = spec.entropy().map_err(|e| e.to_string())?;
    let i = spec.fisher().map_err(|e| e.to_string())?;
    let gamma = gamma_const(p, n).map_err(|e| e.to_string())?;
    Ok(format!("{p},{n},{},{},{a},{cp},{h},{i},{gamma},", c.mu, c.nu))
}

pub fn constants(flags: &Flags) -> Result<(), Failure> {
    let settings = Settings::resolve(flags)?;
    let pairs: Vec<(f64, u32)> = match &settings.pairs {
        Some(pairs) => pairs.clone(),
        None if settings.p_given || settings.dim_given => settings
            .p
            .iter()
            .flat_map(|&p| settings.dims.iter().map(move |&n| (p, n)))
            .collect(),
        None => DEFAULT_PAIRS.to_vec(),
    };
    let mut table = String::from("p,n,mu,nu,A_p,C_p,Hp_B,Ip_B,gamma,note\n");
    let mut dims: Vec<u32> = Vec::new();
    for &(p, n) in &pairs {
        match constants_row(p, n) {
            Ok(row) => table.push_str(&row),
            Err(e) => table.push_str(&format!("{p},{n},,,,,,,,\"{}\"", e.replace('"', "'"))),
        }
        table.push('\n');
        if n > 2 && !dims.contains(&n) {
            dims.push(n);
        }
    }
    // For n > 2 the exponent (n-1)/n is the Sobolev case; its row carries S_n.
    let mut sobolev = String::from("n,S_n,gamma_critical,chain_S_n\n");
    for n in dims {
        let (s, g) = (sobolev_constant(n), sobolev_gamma(n));
        if let (Ok(s), Ok(g)) = (s, g) {
            let nf = f64::from(n);
            let chain = ((nf - 2.0) / (2.0 * nf - 2.0)).powi(2) * g;
            let _ = writeln!(sobolev, "{n},{s},{g},{chain}");
            if let Ok(row) = constants_row((nf - 1.0) / nf, n) {
                let _ = writeln!(table, "{row}sobolev S_{n}={s}");
            }
        }
    }
    let dir = experiment_dir(&settings.out, "constants", &config_hash(&ConstantsConfig { pairs: &pairs }))?;
    write(&dir.join("constants.csv"), &table)?;
    write(&dir.join("sobolev.csv"), &sobolev)?;
    print!("{table}\n{sobolev}");
    println!("output: {}", dir.display());
    Ok(())
}

// --------------------------------------------------------------- barenblatt

pub fn barenblatt(flags: &Flags) -> Result<(), Failure> {
    let settings = Settings::resolve(flags)?;
    let exp = settings.experiment()?;
    if !(exp.t_start > 0.0) {
        return Err(Failure::Config(format!(
            "analytic_profiles: the profile is dumped at t_start, which must be positive (got {})",
            exp.t_start
        )));
    }
    let grid = exp.grid()?;
    let (p, n, t) = (exp.p, exp.dim, exp.t_start);
    let field = InitialData::Barenblatt.sample(grid, p, t).map_err(Failure::config)?;
    let mut meta: Vec<(String, String)> = vec![
        ("p".into(), p.to_string()),
        ("n".into(), n.to_string()),
        ("t".into(), t.to_string()),
    ];
    let c = coefficients(p, n).map_err(Failure::config)?;
    meta.push(("mu".into(), c.mu.to_string()));
    meta.push(("nu".into(), c.nu.to_string()));
    // Analytic values along the source solution at time t.
    let (h_exact, i_exact) = if p == 1.0 {
        let heat = HeatKernelSpec::new(n, t).map_err(Failure::config)?;
        let (h, _) = shannon_heat_entropy_power(&heat);
        (h, f64::from(n) / (2.0 * t))
    } else {
        let spec = BarenblattSpec::new(p, n, Convention::SelfSimilar).map_err(Failure::config)?;
        meta.push(("kappa".into(), spec.kappa.to_string()));
        meta.push(("A_p".into(), spec.a_p.to_string()));
        meta.push(("C_p".into(), spec.c_p.to_string()));
        meta.push(("C_self_similar".into(), spec.constant.to_string()));
        if let Some(r) = spec.support_radius() {
            meta.push(("support_radius".into(), (r * t.powf(1.0 / c.mu)).to_string()));
        }
        let nf = f64::from(n);
        let h = spec.entropy().map_err(Failure::config)? + nf / c.mu * t.ln();
        let i = spec.fisher().map_err(Failure::config)? * t.powf(-2.0 / c.mu) / t.powf(nf * (p - 1.0) / c.mu);
        meta.push(("gamma".into(), gamma_const(p, n).map_err(Failure::config)?.to_string()));
        (h, i)
    };
    let snap = FunctionalSnapshot::compute(&field, p, t, false).map_err(Failure::config)?;
    meta.push(("Hp_exact".into(), h_exact.to_string()));
    meta.push(("Hp_quadrature".into(), snap.h_p.to_string()));
    meta.push(("Ip_exact".into(), i_exact.to_string()));
    meta.push(("Ip_quadrature".into(), snap.i_p.to_string()));
    meta.push(("Np_exact".into(), (c.nu * h_exact).exp().to_string()));
    meta.push(("Np_quadrature".into(), snap.n_p.to_string()));
    meta.push(("upsilon_quadrature".into(), snap.upsilon.to_string()));
    meta.push(("mass_quadrature".into(), snap.mass.to_string()));
    let dir = experiment_dir(&settings.out, "barenblatt", &exp.hash())?;
    write_profile(&dir.join("profile.csv"), &field).map_err(Failure::config)?;
    let text = key_values_to_string(&meta);
    write(&dir.join("values"), &text)?;
    print!("{text}");
    println!("output: {}", dir.display());
    Ok(())
}

// ------------------------------------------------------------------- evolve

/// The initial field; file data brings its own grid.
fn initial_field(exp: &Experiment) -> Result<DensityField, Failure> {
    let data = exp.initial_data()?;
    match &data {
        InitialData::File(path) => {
            let f = read_profile(path, exp.geometry()).map_err(Failure::config)?;
            Ok(f.normalized())
        }
        _ => data.sample(exp.grid()?, exp.p, exp.t_start).map_err(Failure::config),
    }
}

fn run_meta(exp: &Experiment, run: &Run, hash: &str) -> Vec<(String, String)> {
    let g = run.grid;
    let geometry = match g.geometry {
        Geometry::Cartesian1d => "cartesian1d".to_string(),
        Geometry::Radial { .. } => "radial".to_string(),
    };
    let warnings: Vec<String> = run
        .warnings
        .iter()
        .map(|w| match w {
            RunWarning::BoundaryLeak { leak_estimate } => format!("boundary-leak({leak_estimate})"),
        })
        .collect();
    vec![
        ("config_hash".into(), hash.to_string()),
        ("p".into(), exp.p.to_string()),
        ("n".into(), exp.dim.to_string()),
        ("geometry".into(), geometry),
        ("nodes".into(), g.nodes.to_string()),
        ("spacing".into(), g.spacing.to_string()),
        ("origin".into(), g.origin.to_string()),
        ("extent".into(), g.extent().to_string()),
        ("t_start".into(), exp.t_start.to_string()),
        ("t_end".into(), exp.t_end.to_string()),
        ("snapshots".into(), run.snapshots.len().to_string()),
        ("initial".into(), exp.initial.clone()),
        ("seed".into(), exp.seed.to_string()),
        ("cfl_safety".into(), run.cfl_safety.to_string()),
        ("boundary".into(), format!("{:?}", run.boundary)),
        ("steps".into(), run.steps.to_string()),
        ("rejected_steps".into(), run.rejected_steps.to_string()),
        ("initial_mass".into(), run.initial_mass.to_string()),
        ("final_mass".into(), run.final_mass.to_string()),
        ("boundary_flux".into(), run.boundary_flux.to_string()),
        ("leak_estimate".into(), run.leak_estimate.to_string()),
        ("mass_drift".into(), run.mass_drift().to_string()),
        ("worst_min_ratio".into(), run.worst_min_ratio.to_string()),
        ("warnings".into(), warnings.join(";")),
    ]
}

#[derive(Serialize)]
struct VerdictRecord<'a> {
    config_hash: &'a str,
    p: f64,
    n: u32,
    passed: bool,
    verdicts: &'a [Verdict],
}

fn write_verdicts(dir: &Path, hash: &str, p: f64, n: u32, verdicts: &[Verdict]) -> Result<bool, Failure> {
    let passed = verdicts.iter().all(|v| v.passed);
    let record = VerdictRecord { config_hash: hash, p, n, passed, verdicts };
    let json = serde_json::to_string_pretty(&record).map_err(Failure::config)?;
    write(&dir.join("verdicts.json"), json + "\n")?;
    write(&dir.join("summary.txt"), summary_table(verdicts))?;
    Ok(passed)
}

/// Result of one experiment, also used as a sweep row.
pub struct Outcome {
    pub dir: PathBuf,
    pub run: Run,
    pub verdicts: Vec<Verdict>,
    pub report: Option<ExperimentReport>,
}

pub fn run_experiment(exp: &Experiment, root: &Path) -> Result<Outcome, Failure> {
    let f0 = initial_field(exp)?;
    let run = run_solver(&f0, &exp.params()).map_err(Failure::from_core)?;
    let hash = exp.hash();
    let dir = experiment_dir(root, "evolve", &hash)?;
    let series = run.series();
    write_snapshots(&dir.join("snapshots.csv"), &series).map_err(Failure::config)?;
    let profiles = dir.join("profiles");
    create_dir(&profiles)?;
    for (k, s) in run.snapshots.iter().enumerate() {
        write_profile(&profiles.join(format!("profile_{k:04}.csv")), &s.field).map_err(Failure::config)?;
    }
    write(&dir.join("run_meta"), key_values_to_string(&run_meta(exp, &run, &hash)))?;
    let checks = exp.core_checks()?;
    let mut verdicts = Vec::new();
    let mut report = None;
    if !checks.is_empty() {
        let r = ExperimentReport::from_series(&series, exp.p, exp.dim, &checks, &exp.tolerances)
            .map_err(Failure::config)?;
        verdicts.extend(r.verdicts.iter().cloned());
        report = Some(r);
    }
    if exp.checks.iter().any(|c| c == ROUNDTRIP) {
        verdicts.push(roundtrip_verdict(&dir, exp.p, exp.geometry())?);
    }
    if !exp.checks.is_empty() {
        write_verdicts(&dir, &hash, exp.p, exp.dim, &verdicts)?;
    }
    Ok(Outcome { dir, run, verdicts, report })
}

pub fn evolve(flags: &Flags) -> Result<(), Failure> {
    let settings = Settings::resolve(flags)?;
    let exp = settings.experiment()?;
    let outcome = run_experiment(&exp, &settings.out)?;
    for w in &outcome.run.warnings {
        eprintln!("warning: {w:?}");
    }
    println!(
        "steps {}  rejected {}  mass drift {:e}",
        outcome.run.steps,
        outcome.run.rejected_steps,
        outcome.run.mass_drift()
    );
    if !outcome.verdicts.is_empty() {
        print!("{}", summary_table(&outcome.verdicts));
    }
    println!("output: {}", outcome.dir.display());
    if outcome.verdicts.iter().all(|v| v.passed) {
        Ok(())
    } else {
        Err(Failure::Verdict("at least one verdict failed".into()))
    }
}

// ------------------------------------------------------------------- verify

/// Recomputes every profile's functionals and compares them with the table.
fn roundtrip_verdict(dir: &Path, p: f64, geometry: Geometry) -> Result<Verdict, Failure> {
    let series = read_snapshots(&dir.join("snapshots.csv")).map_err(Failure::config)?;
    let mut worst = 0.0f64;
    for (k, stored) in series.iter().enumerate() {
        let path = dir.join("profiles").join(format!("profile_{k:04}.csv"));
        let field = read_profile(&path, geometry).map_err(Failure::config)?;
        let again = FunctionalSnapshot::compute(&field, p, stored.t, stored.d_p.is_some())
            .map_err(Failure::config)?;
        let pairs = [
            (again.mass, stored.mass),
            (again.e_p, stored.e_p),
            (again.h_p, stored.h_p),
            (again.n_p, stored.n_p),
            (again.f_p, stored.f_p),
            (again.i_p, stored.i_p),
            (again.upsilon, stored.upsilon),
            (again.d_p.unwrap_or(0.0), stored.d_p.unwrap_or(0.0)),
        ];
        for (a, b) in pairs {
            worst = worst.max((a - b).abs() / b.abs().max(1e-300));
        }
    }
    Ok(Verdict {
        check: ROUNDTRIP.into(),
        value: worst,
        tolerance: 1e-12,
        passed: worst <= 1e-12,
        detail: "max relative mismatch of recomputed functionals".into(),
    })
}

pub fn verify(flags: &Flags) -> Result<(), Failure> {
    let mut settings = Settings::resolve(flags)?;
    let input = settings
        .input
        .clone()
        .ok_or_else(|| Failure::Config("cli: verify needs --input DIR|CSV".into()))?;
    let (dir, csv) = if input.is_dir() {
        (Some(input.clone()), input.join("snapshots.csv"))
    } else {
        (None, input.clone())
    };
    // Run metadata supplies p, n and geometry unless flags override them.
    let mut geometry_name = None;
    if let Some(d) = &dir {
        let meta_path = d.join("run_meta");
        if meta_path.exists() {
            let text = fs::read_to_string(&meta_path).map_err(|e| io_failure(&meta_path, e))?;
            let meta = parse_key_values(&text).map_err(Failure::config)?;
            let get = |k: &str| meta.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone());
            if !settings.p_given {
                if let Some(p) = get("p").and_then(|v| v.parse().ok()) {
                    settings.p = vec![p];
                }
            }
            if !settings.dim_given {
                if let Some(n) = get("n").and_then(|v| v.parse().ok()) {
                    settings.dims = vec![n];
                }
            }
            geometry_name = get("geometry");
        }
    }
    if settings.geometry.is_none() {
        if let Some(g) = geometry_name {
            settings.geometry = Some(g.parse()?);
        }
    }
    if settings.checks.is_empty() {
        settings.checks = vec!["concavity".into(), "upsilon".into()];
    }
    // Validation covers the model and check names; timing fields of an
    // existing table are read from the table itself.
    let exp = settings.experiment()?;
    let series = read_snapshots(&csv).map_err(|e| Failure::Config(format!("{}: {e}", csv.display())))?;
    let checks = exp.core_checks()?;
    let mut verdicts = Vec::new();
    if !checks.is_empty() {
        let report = ExperimentReport::from_series(&series, exp.p, exp.dim, &checks, &exp.tolerances)
            .map_err(Failure::config)?;
        verdicts.extend(report.verdicts);
    }
    if exp.checks.iter().any(|c| c == ROUNDTRIP) {
        let d = dir.as_ref().ok_or_else(|| {
            Failure::Config("cli: the roundtrip check needs a run directory as --input".into())
        })?;
        verdicts.push(roundtrip_verdict(d, exp.p, exp.geometry())?);
    }
    let contents = fs::read(&csv).map_err(|e| io_failure(&csv, e))?;
    #[derive(Serialize)]
    struct VerifyConfig<'a> {
        experiment: &'a Experiment,
        table: String,
    }
    let hash = config_hash(&VerifyConfig { experiment: &exp, table: config_hash(&contents) });
    let out = experiment_dir(&settings.out, "verify", &hash)?;
    let passed = write_verdicts(&out, &hash, exp.p, exp.dim, &verdicts)?;
    print!("{}", summary_table(&verdicts));
    println!("output: {}", out.display());
    if passed {
        Ok(())
    } else {
        Err(Failure::Verdict("at least one verdict failed".into()))
    }
}

// -------------------------------------------------------------------- sweep

/// Checks run per sweep row when none are configured.
const SWEEP_CHECKS: [&str; 3] = ["concavity", "upsilon", "isoperimetric"];

struct Row {
    p: f64,
    n: u32,
    geometry: GeometryKind,
    seed: u64,
    status: Result<Outcome, Failure>,
    note: String,
}

fn sweep_row(settings: &Settings, p: f64, n: u32, seed: u64, root: &Path) -> Row {
    let mut note = String::new();
    let mut s = settings.clone();
    let nf = f64::from(n);
    if s.checks.is_empty() {
        s.checks = SWEEP_CHECKS.iter().map(|c| c.to_string()).collect();
    }
    if s.checks.iter().any(|c| c == "isoperimetric") && (p == 1.0 || p <= nf / (nf + 2.0)) {
        s.checks.retain(|c| c != "isoperimetric");
        note = format!("isoperimetric skipped: needs p > n/(n+2) = {} and p != 1", nf / (nf + 2.0));
    }
    let geometry = s.geometry.unwrap_or(if n == 1 { GeometryKind::Cartesian1d } else { GeometryKind::Radial });
    let status = s.experiment_for(p, n, seed).and_then(|exp| run_experiment(&exp, root));
    Row { p, n, geometry, seed, status, note }
}

fn verdict_value(verdicts: &[Verdict], name: &str) -> String {
    verdicts.iter().find(|v| v.check == name).map(|v| v.value.to_string()).unwrap_or_default()
}

pub fn sweep(flags: &Flags) -> Result<(), Failure> {
    let mut settings = Settings::resolve(flags)?;
    if !settings.seeds_given {
        settings.seeds = crate::config::defaults::SWEEP_SEEDS.to_vec();
    }
    if !settings.p_given {
        settings.p = vec![0.8, 1.0, 1.5, 2.0];
    }
    if !settings.dim_given {
        settings.dims = vec![1, 3];
    }
    if settings.initial == crate::config::defaults::INITIAL && !flags_set_initial(flags) {
        settings.initial = "mixture".into();
    }
    let mut grid_points = Vec::new();
    for &p in &settings.p {
        for &n in &settings.dims {
            for &seed in &settings.seeds {
                grid_points.push((p, n, seed));
            }
        }
    }
    #[derive(Serialize)]
    struct SweepConfig<'a> {
        rows: &'a [(f64, u32, u64)],
        template: Experiment,
    }
    let template = Experiment {
        p: 0.0,
        dim: 0,
        geometry: settings.geometry.unwrap_or(GeometryKind::Cartesian1d),
        nodes: settings.nodes,
        radius: settings.radius,
        t_start: settings.t_start,
        t_end: settings.t_end,
        snapshots: settings.snapshots,
        cfl: settings.cfl,
        boundary: settings.boundary,
        initial: settings.initial.clone(),
        seed: 0,
        checks: settings.checks.clone(),
        with_dissipation: settings.with_dissipation,
        tolerances: settings.tolerances,
    };
    let dir = experiment_dir(
        &settings.out,
        "sweep",
        &config_hash(&SweepConfig { rows: &grid_points, template }),
    )?;
    let rows_dir = dir.join("rows");
    create_dir(&rows_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(Failure::config)?;
    let rows: Vec<Row> = pool.install(|| {
        grid_points
            .par_iter()
            .map(|&(p, n, seed)| sweep_row(&settings, p, n, seed, &rows_dir))
            .collect()
    });

    let mut table = String::from(
        "p,n,geometry,seed,status,steps,concavity,upsilon_increase,isoperimetric_margin,passed,dir,note\n",
    );
    // The aggregate exit code is the most severe row outcome.
    let mut code = 0u8;
    let mut min_margin = f64::INFINITY;
    for row in &rows {
        let geometry = match row.geometry {
            GeometryKind::Cartesian1d => "cartesian1d",
            GeometryKind::Radial => "radial",
        };
        match &row.status {
            Ok(o) => {
                let passed = o.verdicts.iter().all(|v| v.passed);
                if !passed {
                    code = code.max(3);
                }
                let margin = verdict_value(&o.verdicts, "isoperimetric");
                if let Ok(m) = margin.parse::<f64>() {
                    min_margin = min_margin.min(m);
                }
                let rel = o.dir.strip_prefix(&dir).unwrap_or(&o.dir);
                let _ = writeln!(
                    table,
                    "{},{},{geometry},{},ok,{},{},{},{margin},{passed},{},{}",
                    row.p,
                    row.n,
                    row.seed,
                    o.run.steps,
                    verdict_value(&o.verdicts, "concavity"),
                    verdict_value(&o.verdicts, "upsilon-monotone"),
                    rel.display(),
                    row.note
                );
            }
            Err(f) => {
                code = code.max(f.exit_code());
                let _ = writeln!(
                    table,
                    "{},{},{geometry},{},\"{}\",,,,,false,,{}",
                    row.p,
                    row.n,
                    row.seed,
                    f.message().replace('"', "'"),
                    row.note
                );
            }
        }
    }
    write(&dir.join("sweep.csv"), &table)?;
    print!("{table}");
    println!("rows: {}", rows.len());
    if min_margin.is_finite() {
        println!("min isoperimetric margin/gamma: {}", min_margin);
    }
    println!("output: {}", dir.display());
    match code {
        0 => Ok(()),
        2 => Err(Failure::Stability("at least one sweep row hit a stability error".into())),
        3 => Err(Failure::Verdict("at least one sweep row failed a verdict".into())),
        _ => Err(Failure::Config("at least one sweep row was rejected".into())),
    }
}

fn flags_set_initial(flags: &Flags) -> bool {
    flags.initial.is_some()
        || flags
            .config
            .as_ref()
            .and_then(|p| crate::config::FileConfig::load(p).ok())
            .is_some_and(|c| c.initial.kind.is_some())
}
