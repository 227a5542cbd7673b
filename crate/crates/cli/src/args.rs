use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use distilkit::distillability::SearchOptions;
use distilkit::states::{construct_state, StateFamily, StateFile};
use distilkit::symmetry::{Ensemble, EnsembleFile, MemberRef};
use distilkit::BipartiteState;

use crate::output::{CliError, Staged};

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Werner,
    Isotropic,
    MaxEntangled,
    Product,
    Random,
    RandomPpt,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Local dimension.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Werner antisymmetric weight.
    #[arg(long)]
    pub p: Option<f64>,
    /// Isotropic overlap with φ_d.
    #[arg(long)]
    pub f: Option<f64>,
    /// Product state labels.
    #[arg(long, default_value_t = 0)]
    pub a: usize,
    #[arg(long, default_value_t = 0)]
    pub b: usize,
    /// Environment dimension of induced random states.
    #[arg(long)]
    pub env: Option<usize>,
    #[arg(long)]
    pub max_attempts: Option<usize>,
}

impl FamilyArgs {
    pub fn spec(&self) -> Result<Option<StateFamily>, CliError> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| CliError::Usage(format!("--family needs --{flag}")))
        };
        let d = self.d;
        Ok(Some(match self.family {
            None => return Ok(None),
            Some(Family::Werner) => StateFamily::Werner { d, p: need(self.p, "p")? },
            Some(Family::Isotropic) => StateFamily::Isotropic { d, f: need(self.f, "f")? },
            Some(Family::MaxEntangled) => StateFamily::MaxEntangled { d },
            Some(Family::Product) => StateFamily::ProductPure { d, a: self.a, b: self.b },
            Some(Family::Random) => StateFamily::RandomMixed { d, env_dim: self.env },
            Some(Family::RandomPpt) => StateFamily::RandomPpt {
                d,
                env_dim: self.env,
                max_attempts: self.max_attempts,
            },
        }))
    }

    pub fn build(&self, seed: u64) -> Result<BipartiteState, CliError> {
        let spec = self
            .spec()?
            .ok_or_else(|| CliError::Usage("--family is required".into()))?;
        construct_state(&spec, Some(seed)).stage("state")
    }
}

/// A state given either as a file or as a family.
#[derive(Args, Debug, Clone, Serialize)]
pub struct StateArgs {
    /// State JSON file (a bare state or an artifact with a `state` field).
    #[arg(long, conflicts_with = "family")]
    pub state: Option<PathBuf>,
    #[command(flatten)]
    pub family: FamilyArgs,
}

impl StateArgs {
    pub fn load(&self, seed: u64) -> Result<BipartiteState, CliError> {
        match &self.state {
            Some(path) => load_state(path),
            None if self.family.family.is_some() => self.family.build(seed),
            None => Err(CliError::Usage("give --state FILE or --family".into())),
        }
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("parsing {}: {e}", path.display())))
}

/// Unwraps the first of `keys` present if the document is an artifact.
fn payload(mut doc: Value, keys: &[&str]) -> Value {
    for key in keys {
        if let Some(inner) = doc.get_mut(*key) {
            if inner.is_object() {
                return inner.take();
            }
        }
    }
    doc
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Reads a bare state file or an artifact holding one under `state` or `rho`.
pub fn load_state(path: &Path) -> Result<BipartiteState, CliError> {
    let file: StateFile = serde_json::from_value(payload(read_json(path)?, &["state", "rho"]))
        .map_err(|e| input_err(path, e))?;
    BipartiteState::try_from(file).map_err(|e| input_err(path, e))
}

/// Member paths resolve relative to the ensemble file and may be artifacts.
pub fn load_ensemble(path: &Path) -> Result<Ensemble, CliError> {
    let file: EnsembleFile = serde_json::from_value(payload(read_json(path)?, &["ensemble"]))
        .map_err(|e| input_err(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let members = file
        .members
        .into_iter()
        .map(|m| match m {
            MemberRef::Path(p) => load_state(&base.join(p)),
            MemberRef::Inline(f) => BipartiteState::try_from(f).map_err(|e| input_err(path, e)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ensemble::new(file.weights, members).map_err(|e| input_err(path, e))
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

impl SearchArgs {
    pub fn options(&self) -> SearchOptions {
        SearchOptions {
            restarts: self.restarts,
            iters: self.iters,
            tol: self.tol,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SearchCmd {
    #[command(flatten)]
    pub input: StateArgs,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FdArgs {
    #[command(flatten)]
    pub input: StateArgs,
    /// Target dimension D of the maximally entangled state.
    #[arg(long)]
    pub target_dim: usize,
    /// Threshold λ; defaults to 1/D.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct NcopyArgs {
    #[command(flatten)]
    pub input: StateArgs,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SymmetrizeArgs {
    #[command(flatten)]
    pub input: StateArgs,
    /// Permute the A factors and the B factors independently.
    #[arg(long)]
    pub double: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MixpowArgs {
    #[arg(long)]
    pub ensemble: PathBuf,
    #[arg(long)]
    pub k: usize,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
pub struct DefinettiArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub n: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DefcloseArgs {
    #[command(flatten)]
    pub input: StateArgs,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Candidate ensemble size.
    #[arg(long)]
    pub support: Option<usize>,
    /// Number of pairs of the parent symmetric state, to report the bound.
    #[arg(long)]
    pub parent_n: Option<usize>,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
pub struct FrameArgs {
    #[arg(long)]
    pub dim_a: usize,
    /// Omit for a single-system frame.
    #[arg(long)]
    pub dim_b: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TomoSimArgs {
    #[command(flatten)]
    pub input: StateArgs,
    #[arg(long)]
    pub shots: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub input: StateArgs,
    /// Ensemble source instead of a single state.
    #[arg(long, conflicts_with_all = ["state", "family"])]
    pub ensemble: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    /// Copies handed to the distillability test.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
pub struct ChernoffArgs {
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub n: u64,
    /// Number of outcomes.
    #[arg(long, default_value_t = 16)]
    pub cardinality: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ActivateCheckArgs {
    #[arg(long)]
    pub rho: PathBuf,
    #[arg(long)]
    pub sigma: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ActivateSearchArgs {
    #[arg(long)]
    pub sigma: PathBuf,
    /// Total candidate activators.
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
    #[arg(long, default_value_t = 21)]
    pub sweep_points: usize,
    #[arg(long, default_value_t = 0.5)]
    pub random_fraction: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct JamArgs {
    #[arg(long)]
    pub rho: PathBuf,
    #[arg(long)]
    pub sigma: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOver {
    F2,
    Ppt,
    Undistill1,
    TomoPipeline,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    P,
    F,
    Shots,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepArgs {
    /// Quantity computed on each row.
    #[arg(long, value_enum)]
    pub over: SweepOver,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    #[arg(long, requires_all = ["to", "step"], conflicts_with = "values")]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Explicit comma-separated values.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Rows per parameter value, each with its own seed.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Shots for tomo-pipeline rows when not swept.
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    #[command(flatten)]
    pub search: SearchArgs,
}
