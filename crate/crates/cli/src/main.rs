use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod settings;

use settings::{CliError, Settings};

#[derive(Parser, Debug)]
#[command(name = "h3spec", version, about = "Length spectra and trace-formula eigenvalues of hyperbolic 3-manifolds")]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command. Each one may also be given as
/// `key=value` (dashes replaced by underscores) in `--config`.
#[derive(Args, Debug, Default)]
pub struct Shared {
    /// key=value config file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Length cutoff l_cut
    #[arg(long, global = true)]
    pub cutoff: Option<f64>,
    /// Tiling mode: rigorous or quick
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Tiling radius override
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub kmin: Option<f64>,
    #[arg(long, global = true)]
    pub kmax: Option<f64>,
    #[arg(long, global = true)]
    pub kstep: Option<f64>,
    /// Maximum number of group elements in the tiling
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    #[arg(long, global = true)]
    pub dedup_tol: Option<f64>,
    #[arg(long, global = true)]
    pub merge_tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tile a generator file and write its length spectrum
    Lengths { generators: PathBuf },
    /// Smoothed staircase and eigenvalues from a length spectrum
    Eigen {
        spectrum: PathBuf,
        /// Manifold volume
        #[arg(long)]
        volume: Option<f64>,
        /// Assumed multiplicity for the precision estimate
        #[arg(long)]
        multiplicity: Option<u32>,
        /// Orbit kernel: quadrature or stationary
        #[arg(long)]
        htilde: Option<String>,
        /// Smoothing width below the switch: c2,c1,c0
        #[arg(long)]
        eps_low: Option<String>,
        /// Smoothing width above the switch: s,e
        #[arg(long)]
        eps_high: Option<String>,
        /// Leave out the shortest orbit class
        #[arg(long)]
        drop_shortest: bool,
    },
    /// Classical staircase and averaged multiplicities of a length spectrum
    Stats {
        spectrum: PathBuf,
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        fit_min: Option<f64>,
        #[arg(long)]
        fit_max: Option<f64>,
        /// Grid step of the N(l) table
        #[arg(long)]
        lstep: Option<f64>,
    },
    /// Zeta-function ratio and spectral distance against the Weyl sequence
    Measures {
        eigenvalues: PathBuf,
        /// Volume of the Weyl reference
        #[arg(long)]
        ref_volume: Option<f64>,
        #[arg(long)]
        smin: Option<f64>,
        #[arg(long)]
        smax: Option<f64>,
        #[arg(long)]
        sstep: Option<f64>,
        /// Number of eigenvalues used (default: all)
        #[arg(long)]
        terms: Option<usize>,
    },
    /// Fit a diameter/volume/k1 relation to a manifold catalog
    Fit {
        catalog: PathBuf,
        /// One of k1-diameter, k1-diameter-cusp, volume-diameter,
        /// thin-volume, volume-k1, k1-volume-cusp
        #[arg(long)]
        model: Option<String>,
        /// Comma-separated free parameters
        #[arg(long)]
        free: Option<String>,
        /// Fixed parameter values, e.g. --set v_c=2.03
        #[arg(long = "set")]
        set: Vec<String>,
        /// Number of points in the curve table
        #[arg(long)]
        curve_points: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let s = Settings::load(&cli.shared)?;
    let threads: usize = s.get("threads", cli.shared.threads, 0)?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Lengths { generators } => commands::lengths(&s, &generators),
        Command::Eigen {
            spectrum,
            volume,
            multiplicity,
            htilde,
            eps_low,
            eps_high,
            drop_shortest,
        } => commands::eigen(
            &s,
            &spectrum,
            commands::EigenArgs {
                volume,
                multiplicity,
                htilde,
                eps_low,
                eps_high,
                drop_shortest,
            },
        ),
        Command::Stats {
            spectrum,
            window,
            fit_min,
            fit_max,
            lstep,
        } => commands::stats(&s, &spectrum, window, (fit_min, fit_max), lstep),
        Command::Measures {
            eigenvalues,
            ref_volume,
            smin,
            smax,
            sstep,
            terms,
        } => commands::measures(&s, &eigenvalues, ref_volume, (smin, smax, sstep), terms),
        Command::Fit {
            catalog,
            model,
            free,
            set,
            curve_points,
        } => commands::fit(&s, &catalog, model, free, &set, curve_points),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
