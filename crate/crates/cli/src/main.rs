mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use singfol::Error;

/// Computations on singular foliations given by polynomial vector fields.
#[derive(Parser, Debug)]
#[command(name = "singfol", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Integration and correction tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Seed for randomized leaf tracing.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Default jet order for holonomy computations.
    #[arg(long, global = true, default_value_t = 2)]
    pub jet_order: u32,
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write trajectories or samples as CSV to this file.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the involutivity certificate.
    Verify {
        #[arg(long)]
        foliation: PathBuf,
    },
    /// Sample a leaf by random flows.
    Leaf {
        #[arg(long)]
        foliation: PathBuf,
        #[arg(long)]
        at: String,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
    },
    /// Fiber of the foliation at a rational point.
    Fiber {
        #[arg(long)]
        foliation: PathBuf,
        #[arg(long)]
        at: String,
    },
    /// Integrate the base curve of a path.
    Flow {
        #[arg(long)]
        path: PathBuf,
        /// Foliation for a path file that does not name one.
        #[arg(long)]
        foliation: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Holonomy jet of a path between default slices.
    Holonomy {
        #[arg(long)]
        path: PathBuf,
        /// Foliation for a path file that does not name one.
        #[arg(long)]
        foliation: Option<PathBuf>,
        /// Jet order (defaults to --jet-order).
        #[arg(long)]
        order: Option<u32>,
        #[arg(long, default_value_t = singfol::holonomy::DEFAULT_EXTENT)]
        extent: f64,
    },
    /// Test whether a variation is an F-homotopy.
    Homotopy {
        #[arg(long)]
        variation: PathBuf,
        /// Foliation for a path file that does not name one.
        #[arg(long)]
        foliation: Option<PathBuf>,
        #[arg(long, default_value_t = singfol::fpath::variation::TAU_MEM)]
        tau: f64,
    },
    /// Check the anchor condition of an A-path.
    #[command(alias = "apath-check")]
    Apath {
        #[arg(long)]
        path: PathBuf,
        /// Foliation for a path file that does not name one.
        #[arg(long)]
        foliation: Option<PathBuf>,
    },
    /// Test whether a variation is an A-homotopy.
    Ahomotopy {
        #[arg(long)]
        variation: PathBuf,
        /// Foliation for a path file that does not name one.
        #[arg(long)]
        foliation: Option<PathBuf>,
        #[arg(long, default_value_t = singfol::fpath::variation::TAU_MEM)]
        tau: f64,
    },
    /// Path-holonomy bisubmersion at a point.
    Bisub {
        #[arg(long)]
        foliation: PathBuf,
        #[arg(long)]
        center: String,
        #[arg(long, default_value_t = 10.0)]
        c_radius: f64,
        #[arg(long, default_value_t = 0.5)]
        y_radius: f64,
        /// Check the bisubmersion condition on sample points.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        /// A point `c1,..,cm;y1,..,yn` with `y` in ambient coordinates. Repeated points are composed, the last one acting first.
        #[arg(long)]
        psi: Vec<String>,
    },
    /// Verify a morphism of foliated manifolds.
    Morphism {
        #[arg(long)]
        morphism: PathBuf,
    },
    /// Push a path forward along a morphism.
    Pushforward {
        #[arg(long)]
        morphism: PathBuf,
        #[arg(long)]
        path: PathBuf,
        /// Treat the path as projectable and push the F-path itself.
        #[arg(long)]
        projectable: bool,
        /// With --projectable, drop coefficients on vertical generators.
        #[arg(long)]
        drop_vertical: bool,
    },
}

/// Input problems exit with 2; failed checks and numerical failures with 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_)
        | Error::Parse(_)
        | Error::Invalid(_)
        | Error::DimensionMismatch { .. }
        | Error::OutOfChart { .. }
        | Error::NonRationalPoint
        | Error::EndpointMismatch(_)
        | Error::SliceMismatch(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !(cli.global.tol > 0.0) {
        eprintln!("error: --tol must be positive");
        return ExitCode::from(2);
    }
    match commands::run(&cli) {
        Ok(ok) => ExitCode::from(if ok { 0 } else { 1 }),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
