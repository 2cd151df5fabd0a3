mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "willmore-lab", version, about = "Willmore energy, conformal families and cubical audits in S³")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a surface mesh in the S3MESH v1 format.
    Gen(GenArgs),
    /// Area, Willmore energy and traceless curvature of a surface.
    Energy(EnergyArgs),
    /// Check the area bound of the canonical family on a (v, t) grid.
    Sweep(SweepArgs),
    /// Degree of the extended Gauss map.
    Degree(DegreeArgs),
    /// Exactness of conformal images of caps and the asymptotic image rate.
    SphereCheck(SphereCheckArgs),
    /// Symmetric-difference volumes of boundary blow-up limits.
    Blowup(BlowupArgs),
    /// Descend the Willmore energy on a parametric family or a mesh.
    Optimize(OptimizeArgs),
    /// Exhaustive cubical-complex audits.
    Cubical(CubicalArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Energy(_) => "energy",
            Command::Sweep(_) => "sweep",
            Command::Degree(_) => "degree",
            Command::SphereCheck(_) => "sphere-check",
            Command::Blowup(_) => "blowup",
            Command::Optimize(_) => "optimize",
            Command::Cubical(_) => "cubical",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Gen(a) => &a.common,
            Command::Energy(a) => &a.common,
            Command::Sweep(a) => &a.common,
            Command::Degree(a) => &a.common,
            Command::SphereCheck(a) => &a.common,
            Command::Blowup(a) => &a.common,
            Command::Optimize(a) => &a.common,
            Command::Cubical(a) => &a.common,
        }
    }
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct Common {
    /// key = value file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path for the command's artifact (mesh, CSV or JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed; required by sampling commands.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "WILLMORE_LAB_WORKERS")]
    pub workers: Option<usize>,
    /// Tolerance of the command's main check.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct SurfaceArgs {
    /// Read an S3MESH file; curvatures are estimated by local fitting.
    #[arg(long = "in", conflicts_with = "surface")]
    pub input: Option<PathBuf>,
    /// Generator name: clifford/flat, gsphere/sphere, revolution.
    #[arg(long)]
    pub surface: Option<String>,
    #[arg(long, default_value_t = 128)]
    pub res: usize,
    /// Flat torus radius.
    #[arg(long)]
    pub a: Option<f64>,
    /// Sphere radius, or tube radius of a torus of revolution.
    #[arg(long = "r")]
    pub r: Option<f64>,
    /// Center distance of a torus of revolution.
    #[arg(long = "R")]
    pub big_r: Option<f64>,
}

#[derive(Args, Serialize, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Debug)]
pub struct EnergyArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Points per axis of the cubical v grid.
    #[arg(long, default_value_t = 3)]
    pub vgrid: usize,
    /// Half-width of the v grid cube.
    #[arg(long, default_value_t = 0.25)]
    pub vhalf: f64,
    /// Points of the t grid on [−π, π].
    #[arg(long, default_value_t = 17)]
    pub tgrid: usize,
    /// Also report mass concentration for these geodesic radii.
    #[arg(long, value_delimiter = ',')]
    pub radii: Vec<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Debug)]
pub struct DegreeArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Monte Carlo samples for vol(A) and vol(A*).
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
    /// Tube half-width.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Debug)]
pub struct SphereCheckArgs {
    /// Random (v, cap) pairs.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Approach angles θ = arctan(t/s) for the rate fit.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0,0.785398163397,-0.785398163397")]
    pub theta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125")]
    pub s: Vec<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Debug)]
pub struct BlowupArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
    /// Level t of the sublevel set.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t: f64,
    /// Approach slopes k (use inf or -inf for normal approaches).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0,1,inf")]
    pub k: Vec<f64>,
    /// Also run the radial approach to a point of A.
    #[arg(long)]
    pub radial: bool,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.02")]
    pub s: Vec<f64>,
    /// Mesh vertex used as the boundary point p.
    #[arg(long, default_value_t = 0)]
    pub vertex: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Parametric,
    Mesh,
}

#[derive(Args, Serialize, Debug)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, value_enum, default_value_t = Mode::Parametric)]
    pub mode: Mode,
    /// Parametric family: flat or revolution.
    #[arg(long, default_value = "flat")]
    pub family: String,
    /// Starting parameters of the family.
    #[arg(long, value_delimiter = ',', default_value = "0.3")]
    pub start: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub grad_tol: f64,
    /// Normal perturbation of the Clifford start in mesh mode.
    #[arg(long, default_value_t = 0.01)]
    pub amp: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum Audit {
    All,
    Boundary,
    Counts,
    Composition,
    Fineness,
    Retraction,
}

#[derive(Args, Serialize, Debug)]
pub struct CubicalArgs {
    #[arg(long, value_enum, default_value_t = Audit::All)]
    pub audit: Audit,
    #[command(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    let args = match config::expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            println!("{}", output::error_json("", "config", &format!("{e:#}")));
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    let name = cli.command.name();
    if let Some(n) = cli.command.common().workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            println!("{}", output::error_json(name, "workers", &e.to_string()));
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli.command) {
        Ok(record) => {
            let text = record.to_json();
            println!("{text}");
            if record.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let kind = match e.downcast_ref::<willmore_lab::Error>() {
                Some(err) => commands::error_kind(err),
                None => "usage",
            };
            println!("{}", output::error_json(name, kind, &format!("{e:#}")));
            ExitCode::from(2)
        }
    }
}
