//! Configuration: a TOML file with `key = value` sections, overridden by
//! command-line flags, resolved into validated experiment specs.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use renyi_core::initial::InitialData;
use renyi_core::profiles::Coefficients;
use renyi_core::solver::{Boundary, DiffusionParams};
use renyi_core::verification::{Check, Tolerances};
use renyi_core::{Geometry, Grid};

use crate::Failure;

/// Flags shared by every subcommand; each subcommand reads the ones it needs.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Diffusion exponent; a comma-separated list for `sweep` and `constants`.
    #[arg(long)]
    pub p: Option<String>,
    /// Space dimension; a comma-separated list for `sweep` and `constants`.
    #[arg(long)]
    pub dim: Option<String>,
    /// `cartesian1d` or `radial`.
    #[arg(long)]
    pub geometry: Option<String>,
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Half-width of the cartesian domain or outer radius of the radial one.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long = "t-start")]
    pub t_start: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub snapshots: Option<usize>,
    /// `barenblatt`, `gaussian`, `mixture`, `two-bump`, `compact-two-bump`
    /// or `file:PATH`.
    #[arg(long)]
    pub initial: Option<String>,
    /// Mixture seed; a comma-separated list for `sweep`.
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub cfl: Option<f64>,
    /// `zero-flux` or `absorbing`.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Comma-separated checks: concavity, debruijn, dissipation, upsilon,
    /// isoperimetric, and for `verify` also roundtrip.
    #[arg(long)]
    pub verify: Option<String>,
    /// Record `D_p` in every snapshot.
    #[arg(long = "with-dissipation")]
    pub with_dissipation: bool,
    #[arg(long = "tol-concavity")]
    pub tol_concavity: Option<f64>,
    #[arg(long = "tol-debruijn")]
    pub tol_debruijn: Option<f64>,
    #[arg(long = "tol-dissipation")]
    pub tol_dissipation: Option<f64>,
    #[arg(long = "tol-isoperimetric")]
    pub tol_isoperimetric: Option<f64>,
    #[arg(long = "tol-upsilon")]
    pub tol_upsilon: Option<f64>,
    /// Root directory for experiment outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Concurrent sweep rows.
    #[arg(long)]
    pub workers: Option<usize>,
    /// `p:n` pairs for `constants`, comma separated.
    #[arg(long)]
    pub pairs: Option<String>,
    /// Run directory or snapshot CSV for `verify`.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub constants: ConstantsSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub p: Option<f64>,
    pub dim: Option<u32>,
    pub geometry: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nodes: Option<usize>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub snapshots: Option<usize>,
    pub cfl: Option<f64>,
    pub boundary: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub checks: Option<Vec<String>>,
    pub with_dissipation: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub concavity: Option<f64>,
    pub debruijn: Option<f64>,
    pub dissipation: Option<f64>,
    pub isoperimetric: Option<f64>,
    pub upsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub p: Option<Vec<f64>>,
    pub dim: Option<Vec<u32>>,
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub pairs: Option<Vec<(f64, u32)>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cli: cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Failure::Config(format!("cli: invalid config {}: {e}", path.display())))
    }
}

/// Defaults for anything neither the file nor the flags specify.
pub mod defaults {
    pub const P: f64 = 2.0;
    pub const DIM: u32 = 1;
    pub const NODES: usize = 1024;
    pub const RADIUS: f64 = 6.0;
    pub const T_START: f64 = 1.0;
    pub const T_END: f64 = 2.0;
    pub const SNAPSHOTS: usize = 17;
    pub const CFL: f64 = 0.45;
    pub const INITIAL: &str = "barenblatt";
    pub const OUT: &str = "runs";
    pub const SWEEP_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
}

fn parse_list<T: std::str::FromStr>(flag: &str, text: &str) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Failure::Config(format!("cli: --{flag} value '{}' is not valid", s.trim())))
        })
        .collect()
}

fn single<T: Copy>(flag: &str, values: Vec<T>) -> Result<T, Failure> {
    match values.as_slice() {
        [v] => Ok(*v),
        _ => Err(Failure::Config(format!("cli: --{flag} takes a single value for this subcommand"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Cartesian1d,
    Radial,
}

impl std::str::FromStr for GeometryKind {
    type Err = Failure;
    fn from_str(s: &str) -> Result<Self, Failure> {
        match s {
            "cartesian1d" => Ok(Self::Cartesian1d),
            "radial" => Ok(Self::Radial),
            other => Err(Failure::Config(format!(
                "cli: unknown geometry '{other}'; expected cartesian1d or radial"
            ))),
        }
    }
}

fn parse_boundary(s: &str) -> Result<Boundary, Failure> {
    match s {
        "zero-flux" => Ok(Boundary::ZeroFlux),
        "absorbing" => Ok(Boundary::Absorbing),
        other => Err(Failure::Config(format!(
            "cli: unknown boundary '{other}'; expected zero-flux or absorbing"
        ))),
    }
}

/// Merged configuration before it is split into experiments.
#[derive(Debug, Clone)]
pub struct Settings {
    pub p: Vec<f64>,
    pub dims: Vec<u32>,
    pub geometry: Option<GeometryKind>,
    pub nodes: usize,
    pub radius: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub snapshots: usize,
    pub cfl: f64,
    pub boundary: Boundary,
    pub initial: String,
    pub seeds: Vec<u64>,
    pub seeds_given: bool,
    pub checks: Vec<String>,
    pub with_dissipation: bool,
    pub tolerances: Tolerances,
    pub out: PathBuf,
    pub workers: usize,
    pub pairs: Option<Vec<(f64, u32)>>,
    pub input: Option<PathBuf>,
    pub p_given: bool,
    pub dim_given: bool,
}

impl Settings {
    pub fn resolve(flags: &Flags) -> Result<Self, Failure> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let p = match &flags.p {
            Some(s) => Some(parse_list("p", s)?),
            None => file.sweep.p.clone().or(file.model.p.map(|p| vec![p])),
        };
        let dims = match &flags.dim {
            Some(s) => Some(parse_list("dim", s)?),
            None => file.sweep.dim.clone().or(file.model.dim.map(|d| vec![d])),
        };
        let seeds = match &flags.seed {
            Some(s) => Some(parse_list("seed", s)?),
            None => file.sweep.seeds.clone().or(file.initial.seed.map(|s| vec![s])),
        };
        let geometry = flags
            .geometry
            .clone()
            .or(file.model.geometry.clone())
            .map(|g| g.parse())
            .transpose()?;
        let boundary = parse_boundary(
            flags.boundary.as_deref().or(file.time.boundary.as_deref()).unwrap_or("zero-flux"),
        )?;
        let checks = match &flags.verify {
            Some(s) => s.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect(),
            None => file.verify.checks.clone().unwrap_or_default(),
        };
        let with_dissipation = flags.with_dissipation
            || file.verify.with_dissipation.unwrap_or(false)
            || checks.iter().any(|c| c == "dissipation");
        let mut tolerances = Tolerances::default();
        let t = &file.tolerances;
        tolerances.concavity = flags.tol_concavity.or(t.concavity).unwrap_or(tolerances.concavity);
        tolerances.debruijn = flags.tol_debruijn.or(t.debruijn).unwrap_or(tolerances.debruijn);
        tolerances.dissipation = flags.tol_dissipation.or(t.dissipation).unwrap_or(tolerances.dissipation);
        tolerances.isoperimetric =
            flags.tol_isoperimetric.or(t.isoperimetric).unwrap_or(tolerances.isoperimetric);
        tolerances.upsilon = flags.tol_upsilon.or(t.upsilon).unwrap_or(tolerances.upsilon);
        let pairs = match &flags.pairs {
            Some(s) => Some(
                s.split(',')
                    .map(|pair| {
                        let (p, n) = pair.split_once(':').ok_or_else(|| {
                            Failure::Config(format!("cli: --pairs entry '{pair}' is not p:n"))
                        })?;
                        let p = parse_list::<f64>("pairs", p)?[0];
                        let n = parse_list::<u32>("pairs", n)?[0];
                        Ok((p, n))
                    })
                    .collect::<Result<Vec<_>, Failure>>()?,
            ),
            None => file.constants.pairs.clone(),
        };
        let workers = flags.workers.or(file.output.workers).unwrap_or(1);
        if workers == 0 {
            return Err(Failure::Config("cli: --workers must be at least 1".into()));
        }
        Ok(Self {
            p_given: p.is_some(),
            dim_given: dims.is_some(),
            p: p.unwrap_or_else(|| vec![defaults::P]),
            dims: dims.unwrap_or_else(|| vec![defaults::DIM]),
            geometry,
            nodes: flags.nodes.or(file.grid.nodes).unwrap_or(defaults::NODES),
            radius: flags.radius.or(file.grid.radius).unwrap_or(defaults::RADIUS),
            t_start: flags.t_start.or(file.time.t_start).unwrap_or(defaults::T_START),
            t_end: flags.t_end.or(file.time.t_end).unwrap_or(defaults::T_END),
            snapshots: flags.snapshots.or(file.time.snapshots).unwrap_or(defaults::SNAPSHOTS),
            cfl: flags.cfl.or(file.time.cfl).unwrap_or(defaults::CFL),
            boundary,
            initial: flags
                .initial
                .clone()
                .or(file.initial.kind.clone())
                .unwrap_or_else(|| defaults::INITIAL.to_string()),
            seeds_given: seeds.is_some(),
            seeds: seeds.unwrap_or_else(|| vec![0]),
            checks,
            with_dissipation,
            tolerances,
            out: flags.out.clone().or(file.output.dir.clone()).unwrap_or_else(|| defaults::OUT.into()),
            workers,
            pairs,
            input: flags.input.clone(),
        })
    }

    /// The single experiment described by scalar settings.
    pub fn experiment(&self) -> Result<Experiment, Failure> {
        let p = single("p", self.p.clone())?;
        let dim = single("dim", self.dims.clone())?;
        let seed = single("seed", self.seeds.clone())?;
        self.experiment_for(p, dim, seed)
    }

    pub fn experiment_for(&self, p: f64, dim: u32, seed: u64) -> Result<Experiment, Failure> {
        let geometry = self.geometry.unwrap_or(if dim == 1 {
            GeometryKind::Cartesian1d
        } else {
            GeometryKind::Radial
        });
        let exp = Experiment {
            p,
            dim,
            geometry,
            nodes: self.nodes,
            radius: self.radius,
            t_start: self.t_start,
            t_end: self.t_end,
            snapshots: self.snapshots,
            cfl: self.cfl,
            boundary: self.boundary,
            initial: self.initial.clone(),
            seed,
            checks: self.checks.clone(),
            with_dissipation: self.with_dissipation,
            tolerances: self.tolerances,
        };
        exp.validate()?;
        Ok(exp)
    }
}

/// One fully specified run; its JSON form names the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub p: f64,
    pub dim: u32,
    pub geometry: GeometryKind,
    pub nodes: usize,
    pub radius: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub snapshots: usize,
    pub cfl: f64,
    pub boundary: Boundary,
    pub initial: String,
    pub seed: u64,
    pub checks: Vec<String>,
    pub with_dissipation: bool,
    pub tolerances: Tolerances,
}

pub const ROUNDTRIP: &str = "roundtrip";

impl Experiment {
    pub fn geometry(&self) -> Geometry {
        match self.geometry {
            GeometryKind::Cartesian1d => Geometry::Cartesian1d,
            GeometryKind::Radial => Geometry::Radial { dim: self.dim },
        }
    }

    pub fn grid(&self) -> Result<Grid, Failure> {
        let grid = match self.geometry {
            GeometryKind::Cartesian1d => Grid::cartesian(self.nodes, self.radius),
            GeometryKind::Radial => Grid::radial(self.dim, self.nodes, self.radius),
        };
        grid.map_err(Failure::config)
    }

    pub fn initial_data(&self) -> Result<InitialData, Failure> {
        Ok(self.initial.parse::<InitialData>().map_err(Failure::config)?.with_seed(self.seed))
    }

    pub fn params(&self) -> DiffusionParams {
        let mut params = DiffusionParams::uniform(self.p, self.t_start, self.t_end, self.snapshots);
        params.cfl_safety = self.cfl;
        params.boundary = self.boundary;
        params.with_dissipation = self.with_dissipation;
        params
    }

    /// Core checks requested, without the CLI-only round trip.
    pub fn core_checks(&self) -> Result<Vec<Check>, Failure> {
        self.checks
            .iter()
            .filter(|c| c.as_str() != ROUNDTRIP)
            .map(|c| c.parse().map_err(Failure::config))
            .collect()
    }

    /// Every precondition that can be checked before computing anything.
    pub fn validate(&self) -> Result<(), Failure> {
        if self.geometry == GeometryKind::Cartesian1d && self.dim != 1 {
            return Err(Failure::Config(format!(
                "functionals: cartesian1d geometry needs dim = 1, got dim = {}",
                self.dim
            )));
        }
        Coefficients::new(self.p, self.dim).map_err(Failure::config)?;
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Failure::Config(format!("functionals: radius = {} must be positive", self.radius)));
        }
        self.grid()?;
        self.params().validate(self.dim).map_err(Failure::config)?;
        if self.snapshots == 0 {
            return Err(Failure::Config("pme_solver: at least one snapshot is required".into()));
        }
        let initial = self.initial_data()?;
        if matches!(initial, InitialData::Barenblatt | InitialData::Gaussian) && !(self.t_start > 0.0) {
            return Err(Failure::Config(format!(
                "pme_solver: {} initial data needs t_start > 0, got {}",
                self.initial, self.t_start
            )));
        }
        let checks = self.core_checks()?;
        let needs_three = checks
            .iter()
            .any(|c| matches!(c, Check::Concavity | Check::Debruijn | Check::Dissipation));
        if needs_three && self.snapshots < 3 {
            return Err(Failure::Config(format!(
                "verification: the requested checks need at least 3 snapshots, got {}",
                self.snapshots
            )));
        }
        if checks.contains(&Check::UpsilonMonotone) && self.snapshots < 2 {
            return Err(Failure::Config("verification: upsilon check needs at least 2 snapshots".into()));
        }
        if checks.contains(&Check::Isoperimetric) {
            let n = f64::from(self.dim);
            if self.p == 1.0 || self.p <= n / (n + 2.0) {
                return Err(Failure::Config(format!(
                    "verification: isoperimetric check needs p > n/(n+2) = {} and p != 1, got p = {}",
                    n / (n + 2.0),
                    self.p
                )));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the JSON form.
    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("configs serialize");
    let digest = Sha256::digest(json.as_bytes());
    hex::encode(digest)[..16].to_string()
}
