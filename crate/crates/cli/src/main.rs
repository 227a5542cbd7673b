//! Batch front end for the distilkit library.
//!
//! Exit codes: 0 success, 1 violation or activator found, 2 usage or input
//! error, 3 numerical or capacity error.

mod args;
mod commands;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use args::*;
use output::CliError;

#[derive(Parser, Debug)]
#[command(name = "distilkit", version, about = "Bipartite distillability toolkit")]
struct Cli {
    /// Base seed recorded in every artifact.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output artifact path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, env = "DISTILKIT_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Construct a named or random state.
    State(FamilyArgs),
    /// Singlet fraction F₂ by see-saw over local filters.
    F2(SearchCmd),
    /// Fully entangled fraction F_D against a threshold.
    Fd(FdArgs),
    /// Partial-transpose test.
    Ppt(StateArgs),
    /// Single-copy distillability test (Schmidt-rank-2 search).
    Undistill1(SearchCmd),
    /// n-copy distillability test.
    Ncopy(NcopyArgs),
    /// Average over pair permutations.
    Symmetrize(SymmetrizeArgs),
    /// Mixture of k-th tensor powers of an ensemble.
    Mixpow(MixpowArgs),
    /// Finite de Finetti bound 4 d⁴ k / n.
    DefinettiBound(DefinettiArgs),
    /// Distance from a symmetric state to mixtures of product powers.
    Defclose(DefcloseArgs),
    /// Minimal informationally complete product frame and its duals.
    TomoFrame(FrameArgs),
    /// Simulated frame measurements, written as outcome counts.
    TomoSim(TomoSimArgs),
    /// Estimate-then-filter pipeline.
    TomoPipeline(PipelineArgs),
    /// Large-deviation tail bound.
    Chernoff(ChernoffArgs),
    /// Evaluate the activation protocol for one activator/target pair.
    ActivateCheck(ActivateCheckArgs),
    /// Search for an activator of a target.
    ActivateSearch(ActivateSearchArgs),
    /// Check the Jamiolkowski proportionality on random operators.
    JamCheck(JamArgs),
    /// Parameter sweep written as CSV.
    Sweep(SweepArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::State(_) => "state",
            Command::F2(_) => "f2",
            Command::Fd(_) => "fd",
            Command::Ppt(_) => "ppt",
            Command::Undistill1(_) => "undistill1",
            Command::Ncopy(_) => "ncopy",
            Command::Symmetrize(_) => "symmetrize",
            Command::Mixpow(_) => "mixpow",
            Command::DefinettiBound(_) => "definetti-bound",
            Command::Defclose(_) => "defclose",
            Command::TomoFrame(_) => "tomo-frame",
            Command::TomoSim(_) => "tomo-sim",
            Command::TomoPipeline(_) => "tomo-pipeline",
            Command::Chernoff(_) => "chernoff",
            Command::ActivateCheck(_) => "activate-check",
            Command::ActivateSearch(_) => "activate-search",
            Command::JamCheck(_) => "jam-check",
            Command::Sweep(_) => "sweep",
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let ctx = output::Context {
        command: cli.command.name(),
        seed: cli.seed,
        out: cli.out.clone(),
    };
    use commands as c;
    match &cli.command {
        Command::State(a) => c::state(&ctx, a),
        Command::F2(a) => c::f2(&ctx, a),
        Command::Fd(a) => c::fd(&ctx, a),
        Command::Ppt(a) => c::ppt(&ctx, a),
        Command::Undistill1(a) => c::undistill1(&ctx, a),
        Command::Ncopy(a) => c::ncopy(&ctx, a),
        Command::Symmetrize(a) => c::symmetrize(&ctx, a),
        Command::Mixpow(a) => c::mixpow(&ctx, a),
        Command::DefinettiBound(a) => c::definetti(&ctx, a),
        Command::Defclose(a) => c::defclose(&ctx, a),
        Command::TomoFrame(a) => c::tomo_frame(&ctx, a),
        Command::TomoSim(a) => c::tomo_sim(&ctx, a),
        Command::TomoPipeline(a) => c::tomo_pipeline(&ctx, a),
        Command::Chernoff(a) => c::chernoff(&ctx, a),
        Command::ActivateCheck(a) => c::activate_check(&ctx, a),
        Command::ActivateSearch(a) => c::activate_search(&ctx, a),
        Command::JamCheck(a) => c::jam(&ctx, a),
        Command::Sweep(a) => sweep::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error [{name}] {e}");
            ExitCode::from(e.code())
        }
    }
}
