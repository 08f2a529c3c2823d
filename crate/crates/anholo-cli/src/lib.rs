//! Command surface of the `anholo` tool: scenario loading, the five command
//! families and report export.

pub mod commands;
pub mod report;
pub mod scenario;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{execute, Outcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "anholo", version, about = "Geometry, mechanics and gravity on Lie algebroids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structure equations, calculus, regularity and homogeneity checks.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Lagrange mechanics: Hessian, canonical N-connection, geodesic flow, structure pack.
    Mech {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        op: MechOp,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// d-connections, torsion, curvature and metrization of a d-metric.
    Geom {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        op: GeomOp,
        /// which d-metric of the scenario to use
        #[arg(long, value_enum, default_value_t = MetricChoice::Auto)]
        metric: MetricChoice,
    },
    /// Hamilton mechanics: Legendre transform, flow, Poisson brackets, dual structure pack.
    Ham {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        op: HamOp,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Off-diagonal 4D ansatz: Ricci components, field equations, vacuum solutions, extraction.
    Grav {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        op: GravOp,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// scenario file, or the name of a bundled scenario
    pub scenario: String,
    /// write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// write the time series or grid table as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// override the scenario seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// override the number of sample points
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct FlowArgs {
    /// final time
    #[arg(long = "t")]
    pub t: Option<f64>,
    /// RK4 step
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechOp {
    Hessian,
    Nconnection,
    Geodesic,
    Pack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeomOp {
    Connection,
    Torsion,
    Curvature,
    Metrize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HamOp {
    Legendre,
    Flow,
    Poisson,
    Pack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GravOp {
    Ricci,
    Check,
    Solve,
    Extract,
    Crosscheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricChoice {
    /// explicit d-metric, else the ansatz, else a Sasaki lift, else the dual metric
    Auto,
    Dmetric,
    Ansatz,
    Sasaki,
    Dual,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Verify { common }
            | Command::Mech { common, .. }
            | Command::Geom { common, .. }
            | Command::Ham { common, .. }
            | Command::Grav { common, .. } => common,
        }
    }
}
