//! Command-line entry point: loads parameter presets or config files, runs
//! one scenario, and writes plot-ready CSV data plus a JSON run manifest.
//! Identical configuration and seed reproduce outputs byte for byte.

mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scenarios::{RunError, ScenarioArgs};

#[derive(Parser, Debug)]
#[command(
    name = "rydramsey",
    version,
    about = "Photon-pair correlations from Rydberg slow-light storage",
    long_about = "Computes the two-photon correlations of light restored after a \
storage–π/2–interaction–π/2 sequence in a Rydberg EIT medium, both from the \
analytic pair treatment and from exact small-ensemble quantum evolution."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Named built-in parameter preset (available: rb87-sec5)
    #[arg(long, global = true, default_value = "rb87-sec5")]
    preset: String,

    /// JSON parameter file overriding the preset
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// RNG seed; required by the stochastic scenarios (g2, oracle-compare)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory [env: RYDRAMSEY_OUT, default: ./out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Run even when the regime checks fail hard
    #[arg(long, global = true)]
    force: bool,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derive group velocity, characteristic radius, loss scales and the
    /// dilute-gas figures of merit from the physical parameters
    Derive,

    /// Band-averaged second-order correlation of the restored light from a
    /// sampled atom cloud
    G2 {
        /// Atoms to sample
        #[arg(long, default_value_t = 2000)]
        atoms: usize,
        /// Delay grid start (μs)
        #[arg(long, default_value_t = 1.4)]
        tau_min_us: f64,
        /// Delay grid end (μs)
        #[arg(long, default_value_t = 6.0)]
        tau_max_us: f64,
        /// Delay grid points
        #[arg(long, default_value_t = 60)]
        points: usize,
        /// Fixed band half-width (μm) instead of the automatic policy
        #[arg(long)]
        band_half_width_um: Option<f64>,
    },

    /// Two-curve CSV of the lossless and loss-modified pair correlation
    /// |I(z)|², |I'(z)|² on z ∈ [0.05, 3] r_c
    Fig3 {
        /// Loss length L/√α in units of r_c
        #[arg(long, default_value_t = 0.5)]
        loss_length: f64,
        /// Grid points
        #[arg(long, default_value_t = 2000)]
        points: usize,
    },

    /// First-order correlation of the restored light and its spectrum
    Spectrum {
        /// Delay grid end in units of r_c/v_g0
        #[arg(long, default_value_t = 40.0)]
        tau_max_rc: f64,
        /// Delay grid points
        #[arg(long, default_value_t = 501)]
        points: usize,
    },

    /// Exact small-N evolution versus the pair formulas for the atomic
    /// second-order correlation
    OracleCompare {
        /// Atom count (exact evolution, ≤ 10)
        #[arg(long, default_value_t = 6)]
        atoms: usize,
        /// Probe ratio ε = Ω_p0/Ω_c
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Segment length in units of r_c (default 0.25·atoms)
        #[arg(long)]
        segment_rc: Option<f64>,
        /// Also export the final many-body state as
        /// (configuration, re, im) triplets
        #[arg(long)]
        dump_state: bool,
    },

    /// Regime diagnostics: dilute-gas conditions, norm-defect estimates,
    /// and the volume-integral self-check
    Validity {
        /// Delay times to check against the loss bound (μs)
        #[arg(long, value_delimiter = ',', default_value = "1.3")]
        tau_us: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let out_dir = cli
        .out
        .or_else(|| std::env::var_os("RYDRAMSEY_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let args = ScenarioArgs {
        preset: cli.preset,
        config: cli.config,
        seed: cli.seed,
        out_dir,
        force: cli.force,
    };
    let result = match cli.command {
        Command::Derive => scenarios::run_derive(&args),
        Command::G2 {
            atoms,
            tau_min_us,
            tau_max_us,
            points,
            band_half_width_um,
        } => scenarios::run_g2(&args, atoms, tau_min_us, tau_max_us, points, band_half_width_um),
        Command::Fig3 {
            loss_length,
            points,
        } => scenarios::run_fig3(&args, loss_length, points),
        Command::Spectrum { tau_max_rc, points } => {
            scenarios::run_spectrum(&args, tau_max_rc, points)
        }
        Command::OracleCompare {
            atoms,
            epsilon,
            segment_rc,
            dump_state,
        } => scenarios::run_oracle_compare(&args, atoms, epsilon, segment_rc, dump_state),
        Command::Validity { tau_us } => scenarios::run_validity(&args, &tau_us),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Regime(msg)) => {
            eprintln!("regime check failed: {msg}");
            eprintln!("rerun with --force to proceed anyway");
            ExitCode::from(3)
        }
        Err(RunError::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
