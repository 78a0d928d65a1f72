//! `wmr`: command-line front end for weak monotone rearrangements.

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "wmr", version, about = "Weak monotone rearrangement between discrete measures on the line")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Potential function u(y) = ∫|x − y| dm(x) at its breakpoints
    Potential {
        measure: PathBuf,
        #[command(flatten)]
        opts: Common,
    },
    /// Decide whether the first measure is below the second in convex order
    CheckOrder {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        opts: Common,
    },
    /// Irreducible intervals of a convex-ordered pair
    Irreducible {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        opts: Common,
    },
    /// Solve the weak transport problem and emit the rearrangement
    Wmr {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        opts: Common,
    },
    /// Optimal value only
    Value {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        opts: Common,
    },
    /// Reverse problem: the smallest admissible target and its map
    Reverse {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        opts: Common,
    },
    /// Concatenate the rearrangement with a martingale coupling of (T(μ), ν)
    Compose {
        #[command(flatten)]
        pair: Pair,
        /// martingale coupling CSV `source_atom,target_atom,mass`; built when omitted
        #[arg(long)]
        coupling: Option<PathBuf>,
        #[command(flatten)]
        opts: Common,
    },
    /// Check a coupling of (μ, ν) for optimality
    Certify {
        #[command(flatten)]
        pair: Pair,
        /// coupling CSV `source_atom,target_atom,mass`
        #[arg(long)]
        coupling: PathBuf,
        #[command(flatten)]
        opts: Common,
    },
    /// Run a perturbation ladder and report value, optimizer and map gaps
    Stability {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_enum, default_value_t = LadderKind::Shift)]
        ladder: LadderKind,
        #[arg(long, value_enum, default_value_t = SideArg::Nu)]
        side: SideArg,
        /// number of rungs
        #[arg(long, default_value_t = 10)]
        rungs: usize,
        /// Wasserstein exponent of the ladder's convergence
        #[arg(long, default_value_t = 2.0)]
        ladder_rho: f64,
        #[command(flatten)]
        opts: Common,
    },
    /// Graph of the map with martingale regions and contractive parts
    Plot {
        #[command(flatten)]
        pair: Pair,
        /// companion CSV path (defaults to the SVG path with a .csv extension)
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        opts: Common,
    },
}

#[derive(Args, Debug)]
pub struct Pair {
    /// source measure CSV (`atom,weight`)
    pub mu: PathBuf,
    /// target measure CSV (`atom,weight`)
    pub nu: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, value_enum, default_value_t = CostKind::Quadratic)]
    pub cost: CostKind,
    /// exponent for `--cost power`
    #[arg(long)]
    pub rho: Option<f64>,
    /// absolute tolerance for order checks and verifiers
    #[arg(long)]
    pub tol: Option<f64>,
    /// embed admissibility, characterization and certificate reports
    #[arg(long)]
    pub verify: bool,
    /// also solve under other costs and compare the pushforwards
    #[arg(long)]
    pub verify_theta: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    Quadratic,
    Quartic,
    Power,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Shift,
    Empirical,
    Quantize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideArg {
    Mu,
    Nu,
    Both,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
