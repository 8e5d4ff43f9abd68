mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit status for malformed command lines (BSD `EX_USAGE`).
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_UNCERTIFIED: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "repvol", version, about = "Volumes of representations by angle censuses in hyperbolic space")]
pub struct Cli {
    /// Worker threads for the sampling loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Sampling {
    /// Monte Carlo samples per angle.
    #[arg(long, default_value_t = repvol::simplex::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct MapInput {
    #[arg(long)]
    pub complex: PathBuf,
    #[arg(long)]
    pub map: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Single geodesic simplices.
    #[command(subcommand)]
    Simplex(SimplexCmd),
    /// Combinatorics of a complex.
    #[command(subcommand)]
    Complex(ComplexCmd),
    /// Equivariant maps.
    #[command(subcommand)]
    Map(MapCmd),
    /// Angle census at every face class (or one).
    Census {
        #[command(flatten)]
        input: MapInput,
        #[command(flatten)]
        sampling: Sampling,
        /// Only this face class.
        #[arg(long)]
        face: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Volume of the representation and its integrality verdict.
    Volume {
        #[command(flatten)]
        input: MapInput,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, value_enum, default_value_t = VolumeMethod::Both)]
        method: VolumeMethod,
        /// Test integrality of `denominator * normalized volume`.
        #[arg(long)]
        denominator: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check census entries and the Gauss-Bonnet volume of a geometric map.
    GaussBonnet {
        #[command(flatten)]
        input: MapInput,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Toric-cusp experiments.
    #[command(subcommand)]
    CuspLab(CuspCmd),
    /// Bundled fixtures.
    #[command(subcommand)]
    Fixtures(FixturesCmd),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeMethod {
    Census,
    Simplices,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexVolumeMethod {
    Hopf,
    Mc,
}

#[derive(Subcommand, Debug)]
pub enum SimplexCmd {
    /// Interior angle at every face.
    Angles {
        #[arg(long)]
        simplex: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Volume {
        #[arg(long)]
        simplex: PathBuf,
        #[arg(long, value_enum, default_value_t = SimplexVolumeMethod::Hopf)]
        method: SimplexVolumeMethod,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Generalized angle sum, which vanishes in odd dimension.
    GramEuler {
        #[arg(long)]
        simplex: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Write a random compact simplex.
    Random {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ComplexCmd {
    Validate {
        #[arg(long)]
        complex: PathBuf,
        /// Accept unglued facets even without cusp ends.
        #[arg(long)]
        allow_boundary: bool,
    },
    /// Euler characteristic and face-class counts.
    Chi {
        #[arg(long)]
        complex: PathBuf,
    },
    /// Link of a face, given by its vertex ids.
    Link {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long, value_delimiter = ',')]
        face: Vec<usize>,
    },
}

#[derive(Subcommand, Debug)]
pub enum MapCmd {
    /// Equivariance, star closure and non-degeneracy.
    Check {
        #[command(flatten)]
        input: MapInput,
    },
    /// Move vertex images randomly within a radius.
    Perturb {
        #[command(flatten)]
        input: MapInput,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only vertices sharing a simplex with the cusps of these ends.
        #[arg(long, value_delimiter = ',')]
        ends: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum CuspCmd {
    /// Cusp censuses along f_k with radius delta/k.
    Limit {
        #[arg(long)]
        experiment: PathBuf,
        /// Schedule 1, 2, 4, ... up to this k instead of the stored one.
        #[arg(long)]
        kmax: Option<usize>,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a gnuplot script plotting the series.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Cusp census of a covering against the degree times the base census.
    Covering {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        base_map: PathBuf,
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        cover_map: PathBuf,
        #[arg(long)]
        covering: PathBuf,
        /// Expected covering degree; must match the covering file.
        #[arg(long)]
        deg: Option<usize>,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum FixturesCmd {
    /// Write a bundled fixture as JSON files into a directory.
    Emit {
        #[arg(value_enum)]
        name: commands::FixtureName,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("repvol: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("repvol: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
