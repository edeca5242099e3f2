use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "ionhom", version, about = "Ion-cavity photon emission, two-photon interference and time-tag analysis")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Configuration layering shared by every subcommand.
#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// Built-in parameter set: fig2_basic, fig2_extended, fig3_extended or figA5.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// TOML configuration, or an output file with an embedded configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set source.omega="40 MHz"`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub sets: Vec<String>,
    /// Output directory (output.dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Turn sampling and truncation warnings into errors (output.strict).
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Photon wavepackets, coincidence densities and V(T) for two sources.
    Simulate,
    /// V and P_succ over drive strengths and windows, with the constrained optimum.
    Sweep {
        /// Sweep configuration (the keys of the [sweep] section).
        #[arg(long)]
        sweep: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Golden-section refinement around the grid optimum (sweep.refine).
        #[arg(long)]
        refine: bool,
    },
    /// Histograms and experimental visibility from a time-tag file.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// Detector dark-count rate to subtract, in counts per second.
        #[arg(long, value_name = "HZ")]
        subtract_dark: Option<f64>,
        /// Threads for histogram accumulation.
        #[arg(long, default_value_t = 1)]
        shards: usize,
    },
    /// Remote-entanglement fidelity and heralded swap rate.
    Estimate {
        /// Visibility V(T) (link.v).
        #[arg(long)]
        v: Option<f64>,
        /// Attempt rate in 1/s (link.r_gen).
        #[arg(long)]
        rgen: Option<f64>,
        /// Coincidence probability per attempt (link.c_perp).
        #[arg(long)]
        cperp: Option<f64>,
        /// Fiber length in km (link.fiber_km).
        #[arg(long)]
        fiber_km: Option<f64>,
        /// Photon arms that traverse the fiber, 1 or 2 (link.attenuated_arms).
        #[arg(long)]
        arms: Option<u32>,
        /// Dark-count rate in 1/s (link.dark_rate).
        #[arg(long)]
        dark_rate: Option<f64>,
    },
    /// Synthetic time-tag stream drawn from the model.
    Sample {
        /// Number of trigger periods (sample.trials).
        #[arg(long)]
        trials: Option<u64>,
        /// Random seed (sample.seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; defaults to timetags.csv in the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}
