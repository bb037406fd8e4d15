use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod run;

/// Drift-jump process with stochastic resets: figure data and self-checks.
#[derive(Parser, Debug)]
#[command(name = "resetwalk", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Drift velocity.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma_drift: Option<f64>,
    /// Jump rate.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda_jump: Option<f64>,
    /// Reset rate.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda_reset: Option<f64>,
    /// Rate of the exponential jump sizes.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub jump_gamma: Option<f64>,
    /// Start and reset point.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long, global = true)]
    pub y0: Option<f64>,
    /// Observable sign: plus or minus.
    #[arg(long, global = true)]
    pub sign: Option<String>,
    /// Upper boundary of the exit interval [0, b].
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// Observation time (stationary, path) or largest time (survival).
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Monte Carlo path count.
    #[arg(long, global = true)]
    pub n: Option<u64>,
    #[arg(long, global = true, default_value_t = resetwalk_core::checks::DEFAULT_SEED)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat key=value parameter file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Report,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetMode {
    /// T(0) against the reset rate for several drifts.
    Fig3,
    /// T(x) against the start for several reset rates.
    Fig4,
    /// One start point with the given parameters.
    Point,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Stationary density of Y: analytic, single-exponent references, histogram.
    Stationary {
        /// Histogram bins per decade of y.
        #[arg(long, default_value_t = 10)]
        per_decade: usize,
        /// Decades of y covered by the histogram.
        #[arg(long, default_value_t = 4.0)]
        decades: f64,
    },
    /// Mean exit time from [0, b].
    Met {
        #[arg(long, value_enum, default_value_t = MetMode::Fig3)]
        mode: MetMode,
        /// Points per curve in the figure modes.
        #[arg(long, default_value_t = 16)]
        points: usize,
    },
    /// Survival probability in [0, b] on a time grid.
    Survival {
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Run the self-check suite.
    Check {
        /// Run only these checks (comma separated or repeated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Include the extra checks in a full run.
        #[arg(long)]
        all: bool,
    },
    /// Dump the events of one trajectory.
    Path {
        /// Path index under the seed.
        #[arg(long, default_value_t = 0)]
        stream: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run::dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
