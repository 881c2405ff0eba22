use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "hbl", version, about = "Self-similar blowup with a Hénon-type nonlinearity: profiles, spectra, bounds and evolution")]
pub struct Cli {
    /// Output directory
    #[arg(long, global = true, env = "HBL_OUT_DIR", default_value = "hbl-out")]
    pub out: PathBuf,

    /// Plain key=value file of flag defaults; command-line flags win
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Tabulate the profile φ, the potential V and the symmetry mode g
    Profile(ProfileArgs),
    /// Lowest eigenvalues of the radial operators by both solvers
    Spectrum(SpectrumArgs),
    /// Bound on the number of negative ℓ = 1 eigenvalues
    Ggmt(GgmtArgs),
    /// Negative-eigenvalue count against the coupling c and its crossing
    Scan(ScanArgs),
    /// Linear, similarity-variable or physical time evolution
    Evolve(EvolveArgs),
    /// Aggregate a results directory into report.md
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Profile(_) => "profile",
            Command::Spectrum(_) => "spectrum",
            Command::Ggmt(_) => "ggmt",
            Command::Scan(_) => "scan",
            Command::Evolve(_) => "evolve",
            Command::Report(_) => "report",
        }
    }
}

pub const SUBCOMMANDS: &[&str] = &["profile", "spectrum", "ggmt", "scan", "evolve", "report"];

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ProfileArgs {
    /// Spatial dimension
    #[arg(long, default_value_t = 3)]
    pub d: u32,
    /// Odd nonlinearity power
    #[arg(long, default_value_t = 3)]
    pub p: u32,
    /// Coupling, 0 < c < p/d²
    #[arg(long, default_value_t = 0.3)]
    pub c: f64,
    /// Last sample radius
    #[arg(long, default_value_t = 10.0)]
    pub r_max: f64,
    /// Number of rows, starting at r = 0
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SpectrumArgs {
    #[arg(long, default_value_t = 3)]
    pub p: u32,
    #[arg(long, default_value_t = 0.3)]
    pub c: f64,
    /// Angular indices (repeatable or comma separated)
    #[arg(long, value_delimiter = ',', default_values_t = [0u32])]
    pub ell: Vec<u32>,
    /// Eigenvalues per operator
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Use the c = 0 limiting operators; --p and --c are ignored
    #[arg(long)]
    pub limit: bool,
    /// Also solve the supersymmetric partner of the ℓ = 0 operator
    #[arg(long)]
    pub susy: bool,
    /// Dirichlet radius
    #[arg(long, default_value_t = hbl_core::spectral::DEFAULT_R_MAX)]
    pub r_max: f64,
    /// Interior nodes of the coarsest grid
    #[arg(long, default_value_t = hbl_core::spectral::DEFAULT_N)]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConventionArg {
    Both,
    Theorem,
    Appendix,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct GgmtArgs {
    /// Coupling at p = 3
    #[arg(long, default_value_t = 0.09)]
    pub c: f64,
    /// Split parameter δ ∈ (0, 9/4)
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Exponent κ ∈ [1.5, 5]
    #[arg(long, default_value_t = 1.5)]
    pub kappa: f64,
    /// Prefactor normalisation
    #[arg(long, value_enum, default_value_t = ConventionArg::Both)]
    pub convention: ConventionArg,
    /// Minimise G over a (δ, κ) grid
    #[arg(long)]
    pub optimize: bool,
    #[arg(long, default_value_t = 0.25)]
    pub delta_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 0.25)]
    pub delta_step: f64,
    #[arg(long, default_value_t = 1.5)]
    pub kappa_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub kappa_max: f64,
    #[arg(long, default_value_t = 0.25)]
    pub kappa_step: f64,
    /// Skip the cross-check against the measured ℓ = 1 count
    #[arg(long)]
    pub no_count: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 3)]
    pub p: u32,
    #[arg(long, default_value_t = 1)]
    pub ell: u32,
    #[arg(long, default_value_t = 0.05)]
    pub c_lo: f64,
    #[arg(long, default_value_t = 0.25)]
    pub c_hi: f64,
    /// Samples of the eigenvalue curve
    #[arg(long, default_value_t = 40)]
    pub points: usize,
    #[arg(long, default_value_t = hbl_core::spectral::DEFAULT_R_MAX)]
    pub r_max: f64,
    #[arg(long, default_value_t = hbl_core::spectral::DEFAULT_N)]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Linear,
    Similarity,
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeArg {
    /// Second-order differences, forward Euler
    Euler2,
    /// Fourth-order differences, classical Runge–Kutta
    Rk4,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EvolveArgs {
    #[arg(long, value_enum, default_value_t = Mode::Similarity)]
    pub mode: Mode,
    #[arg(long, default_value_t = 3)]
    pub p: u32,
    #[arg(long, default_value_t = 0.3)]
    pub c: f64,
    /// Angular index (linear mode only)
    #[arg(long, default_value_t = 0)]
    pub ell: u32,
    /// none | gauss:<amp> | eig:<k> | bump:<amp>:<center>:<width>
    #[arg(long, default_value = "gauss:0.01")]
    pub perturb: String,
    /// End of the similarity-time window
    #[arg(long, default_value_t = hbl_core::evolution::DEFAULT_TAU_END)]
    pub tau_end: f64,
    /// Physical-time limit
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    /// Tune the blowup time so the unstable coefficient vanishes
    #[arg(long = "tune-T")]
    pub tune_t: bool,
    /// Blowup time used without tuning
    #[arg(long = "blowup-time", default_value_t = 1.0)]
    pub blowup_time: f64,
    /// Half width of the tuning interval around T = 1
    #[arg(long, default_value_t = 0.05)]
    pub half_width: f64,
    #[arg(long, default_value_t = hbl_core::evolution::DEFAULT_DTAU)]
    pub dtau: f64,
    /// Similarity-grid radius
    #[arg(long, default_value_t = 12.0)]
    pub r_max: f64,
    /// Similarity-grid interior nodes
    #[arg(long, default_value_t = 1199)]
    pub n: usize,
    /// Steps between history rows
    #[arg(long, default_value_t = 100)]
    pub record_every: usize,
    /// Physical grid spacing
    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
    /// Physical-grid radius
    #[arg(long, default_value_t = 8.0)]
    pub phys_r_max: f64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Rk4)]
    pub scheme: SchemeArg,
    /// Diffusive step is dt-factor · h²/4
    #[arg(long, default_value_t = 1.0)]
    pub dt_factor: f64,
    /// Physical runs stop at this sup norm
    #[arg(long, default_value_t = 60.0)]
    pub stop_sup: f64,
    /// Snapshot spacing in t; zero disables the rescaled-error checkpoints
    #[arg(long, default_value_t = 0.0)]
    pub snapshot_every: f64,
    /// Checkpoints sit at τ = k · checkpoint-step
    #[arg(long, default_value_t = 0.25)]
    pub checkpoint_step: f64,
    #[arg(long, default_value_t = 8)]
    pub checkpoints: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ReportArgs {
    /// Results directory to read; defaults to --out
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Run the default pipeline into the directory first
    #[arg(long)]
    pub pipeline: bool,
}
