//! `qi-lab`: build spaces, run constructions and measurements, fit growth laws.
//!
//! | Exit code | Meaning |
//! |-----------|---------|
//! | 0 | success |
//! | 1 | usage error (bad flags, bad config, unreadable input) |
//! | 2 | computation error |
//! | 3 | a regime check failed under `run --assert` |

mod commands;
mod config;
mod netio;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "qi-lab", version, about = "Quasi-isometry experiments on finite hyperbolic nets")]
pub struct Cli {
    /// Flat `key = value` file supplying any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Build a net and write its points (and optionally edges) as CSV.
    Space(SpaceCmd),
    #[command(subcommand)]
    Embed(EmbedCmd),
    #[command(subcommand)]
    Distort(DistortCmd),
    #[command(subcommand)]
    Poincare(PoincareCmd),
    #[command(subcommand)]
    Boundary(BoundaryCmd),
    #[command(subcommand)]
    Sepvol(SepvolCmd),
    /// Fit growth models to two columns of a CSV file.
    Fit(FitCmd),
    /// Run an R-sweep experiment and write one CSV row per radius.
    Run(RunCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceChoice {
    H2,
    Tree,
    Zmu,
}

#[derive(Debug, Clone, Args)]
pub struct SpaceArgs {
    #[arg(long, value_enum, default_value = "h2")]
    pub space: SpaceChoice,
    /// Exponents of Z_μ, ascending.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 1.0])]
    pub mu: Vec<f64>,
    #[arg(long, default_value_t = 4.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mesh: f64,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    /// Use the double cover of Z_μ.
    #[arg(long)]
    pub cover: bool,
    /// Maximum number of points.
    #[arg(long, default_value_t = qi_core::spaces::DEFAULT_POINT_CAP)]
    pub cap: usize,
}

#[derive(Debug, Args)]
pub struct SpaceCmd {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Points CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Edge CSV.
    #[arg(long)]
    pub edges: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MapOutputs {
    /// Map CSV `domain_id,codomain_id`.
    #[arg(long)]
    pub map_out: Option<PathBuf>,
    #[arg(long)]
    pub domain_out: Option<PathBuf>,
    #[arg(long)]
    pub codomain_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThetaChoice {
    Identity,
    ZmuIdentity,
    Biholder,
    Unipotent,
}

#[derive(Debug, Subcommand)]
pub enum EmbedCmd {
    /// Generations on ℍ² spheres of radius k√R joined to a closest parent.
    SqrtTree {
        #[arg(long, default_value_t = 9.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.5)]
        mesh: f64,
        #[command(flatten)]
        outputs: MapOutputs,
    },
    /// Tree ball of depth R placed on ℍ² circles.
    TreeToH2 {
        #[arg(long, default_value_t = 3)]
        degree: u32,
        #[arg(long, default_value_t = 4)]
        radius: u32,
        #[command(flatten)]
        outputs: MapOutputs,
    },
    /// Radial extension of a boundary map on a sampled Z_μ net.
    Radial {
        #[arg(long, value_enum, default_value = "identity")]
        theta: ThetaChoice,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0])]
        mu: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 1.0])]
        mu_prime: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, default_value_t = 8.0)]
        radius: f64,
        #[arg(long, default_value_t = 1.0)]
        mesh: f64,
        #[arg(long, default_value_t = 300)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        outputs: MapOutputs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveChoice {
    Sum,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VisualChoice {
    Standard,
    Unipotent,
}

#[derive(Debug, Subcommand)]
pub enum DistortCmd {
    /// Optimal (λ, c) constants of a map between two point files.
    Measure {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        codomain: PathBuf,
        #[arg(long)]
        domain_edges: Option<PathBuf>,
        #[arg(long)]
        codomain_edges: Option<PathBuf>,
        /// Exponents for Z points in the domain.
        #[arg(long, value_delimiter = ',')]
        domain_mu: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        codomain_mu: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "standard")]
        codomain_visual: VisualChoice,
        #[arg(long, value_enum, default_value = "sum")]
        objective: ObjectiveChoice,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnergyChoice {
    /// Ball-kernel seminorm.
    Kernel,
    /// Edge-gradient energy of the net.
    Gradient,
    /// Edge-gradient energy of the uniform-column Z_μ net, by modes.
    Columns,
}

#[derive(Debug, Subcommand)]
pub enum PoincareCmd {
    /// Exact C₂ by the second eigenvalue.
    P2 {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum, default_value = "kernel")]
        energy: EnergyChoice,
        /// Kernel width; twice the mesh when absent.
        #[arg(long)]
        width: Option<f64>,
        /// Sparse-triplet CSV `i,j,value` of the kernel.
        #[arg(long)]
        kernel_out: Option<PathBuf>,
    },
    /// Lower bound on C_p by Rayleigh-quotient ascent.
    Ascent {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        width: Option<f64>,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Test function e^{iπx_n} on the double cover of Z_μ.
    Testfn {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 1.0])]
        mu: Vec<f64>,
        #[arg(long, default_value_t = 4.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.25)]
        mesh: f64,
        #[arg(long, default_value_t = 3.0)]
        p: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum BoundaryCmd {
    /// K(R) curve as CSV `R,K,method,grid_n,seed`.
    Kr {
        #[arg(long, value_enum, default_value = "unipotent")]
        theta: ThetaChoice,
        #[arg(long = "r-list", visible_alias = "R-list", value_delimiter = ',', required = true)]
        r_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0])]
        mu: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 1.0])]
        mu_prime: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, default_value_t = 1024)]
        grid_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SepvolCmd {
    /// Covering and packing counts.
    Vol {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
    },
    /// Separation upper and lower bounds.
    Sep {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
    },
    /// Check 2λa + c ≥ log_d(S/V_c).
    TreeBound {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        vc: f64,
        #[arg(long, default_value_t = 3)]
        degree: u32,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Least c with the polynomial-volume inequality.
    GrowthBound {
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        #[arg(long, default_value_t = 100.0)]
        radius: f64,
    },
    /// Check R ≤ 12λ₂c₁ + 4c₂.
    Connectivity {
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda2: f64,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 0.0)]
        c2: f64,
    },
}

#[derive(Debug, Args)]
pub struct FitCmd {
    /// CSV file, `-` for standard input.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "R")]
    pub x: String,
    #[arg(long, default_value = "total")]
    pub y: String,
}

#[derive(Debug, Args)]
pub struct RunCmd {
    #[arg(long)]
    pub experiment: String,
    #[arg(long = "r-list", visible_alias = "R-list", value_delimiter = ',', required = true)]
    pub r_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0])]
    pub mu: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 1.0])]
    pub mu_prime: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub mesh: f64,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1024)]
    pub grid_n: usize,
    #[arg(long, value_enum, default_value = "unipotent")]
    pub theta: ThetaChoice,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 300)]
    pub samples: usize,
    /// CSV output; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Evaluate the regime checks; exit 3 if any fails.
    #[arg(long = "assert")]
    pub assert_mode: bool,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match with_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Assert) => ExitCode::from(3),
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(commands::Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn with_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let path = argv.iter().enumerate().find_map(|(i, a)| {
        a.strip_prefix("--config=").map(String::from).or_else(|| (a == "--config").then(|| argv.get(i + 1).cloned()).flatten())
    });
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let entries = config::parse(&text).map_err(|e| e.to_string())?;
    config::merge(argv, &entries, &Cli::command()).map_err(|e| e.to_string())
}
