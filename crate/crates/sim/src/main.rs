use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use uwsvd::channel::ChannelModel;
use uwsvd::detect::Mode;
use uwsvd::solvers::Algorithm;
use uwsvd_sim::{run_config, CoordsSelection, Experiment, Overrides, SimConfig};

#[derive(Parser)]
#[command(
    name = "uwsvd-sim",
    version,
    about = "Monte Carlo experiments for UW-SVD assisted MIMO detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical CDFs of cond(A) and cond(Phi).
    CondCdf(Common),
    /// SER versus iteration for each solver and coordinate system.
    SerCurve(Common),
    /// SER versus iteration with imperfect channel estimates.
    EstError(Common),
    /// Numerical checks of the conditioning results.
    TheoryCheck(Common),
    /// Complexity table with measured counters.
    Flops(Common),
    /// Run the experiment named in the config file.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_model)]
    model: Option<ChannelModel>,
    #[arg(long = "rho-corr")]
    rho_corr: Option<f64>,
    /// Comma-separated SNR grid in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    /// QAM order (4, 16 or 64).
    #[arg(long = "mod")]
    qam: Option<usize>,
    /// Comma-separated solver list.
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<Algorithm>>,
    #[arg(long)]
    coords: Option<CoordsSelection>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Comma-separated estimation-error ratios in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    varpi: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<ChannelModel, String> {
    let id: u8 = s
        .parse()
        .map_err(|_| format!("model must be 1, 2, 3 or 4, got {s:?}"))?;
    ChannelModel::try_from(id)
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "zf" => Ok(Mode::Zf),
        "lmmse" => Ok(Mode::Lmmse),
        _ => Err(format!("mode must be zf or lmmse, got {s:?}")),
    }
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            model: self.model,
            rho_corr: self.rho_corr,
            snr_db: self.snr.clone(),
            qam_order: self.qam,
            solvers: self.solvers.clone(),
            coords: self.coords,
            mode: self.mode,
            iterations: self.iterations,
            varpi_db: self.varpi.clone(),
            trials: self.trials,
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let (experiment, common) = match &cli.command {
        Command::CondCdf(c) => (Some(Experiment::CondCdf), c),
        Command::SerCurve(c) => (Some(Experiment::SerCurve), c),
        Command::EstError(c) => (Some(Experiment::EstError), c),
        Command::TheoryCheck(c) => (Some(Experiment::TheoryCheck), c),
        Command::Flops(c) => (Some(Experiment::Flops), c),
        Command::Run(c) => (None, c),
    };
    let mut config = match &common.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    config.apply(&common.overrides());
    let (report, files) = run_config(&config, experiment)?;
    for line in &report.lines {
        println!("{line}");
    }
    for f in &files {
        println!("wrote {}", f.display());
    }
    Ok(!report.failed)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
