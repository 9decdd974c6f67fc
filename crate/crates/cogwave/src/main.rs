//! `cogwave` command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cogwave::commands::{self, parse_stopband, DesignConfig, EvaluateConfig, Outcome};
use cogwave::io;
use cogwave::manifest::Manifest;
use cogwave::sim::Scenario;

/// Notched constant-modulus MIMO radar sequence design and coexistence
/// simulation.
///
/// Exit status: 0 on success, 1 on a usage, configuration or input error,
/// 2 when the run completed with warnings (design not converged within
/// `max_sweeps`, or sensing left no usable band).
#[derive(Debug, Parser)]
#[command(name = "cogwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Design sequence sets by coordinate descent.
    ///
    /// The JSON config holds `m`, `n`, `theta` (a number or an array), and
    /// optionally `levels`, `seed`, `zeta`, `max_sweeps`, `grid_points`,
    /// `stopbands` and `mask_file`. Writes `sequences.csv`, `trace.csv` and
    /// `design.json` (under `theta_<value>/` for an array), `mask.json` and
    /// `manifest.json`.
    Design {
        /// Design config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Extra normalized stopband `lo:hi`; repeatable.
        #[arg(long = "stopband", value_parser = parse_stopband)]
        stopbands: Vec<[f64; 2]>,
        /// Mask file from `sense`; replaces the config's `mask_file`.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Report SILR, ICCL, ISL and cross-correlation peaks of a sequence set.
    ///
    /// Writes `report.json`, `psd_m<m>.csv` per sequence, `xcorr_<a>_<b>.csv`
    /// per pair (including autocorrelations) and `manifest.json`.
    Evaluate {
        /// Sequence CSV as written by `design`.
        #[arg(long)]
        sequences: PathBuf,
        /// Mask file.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Normalized stopband `lo:hi`; repeatable.
        #[arg(long = "stopband", value_parser = parse_stopband)]
        stopbands: Vec<[f64; 2]>,
        /// PSD length.
        #[arg(long, default_value_t = 1024)]
        nfft: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Energy-detect occupied bands and write the mask for `design`.
    ///
    /// The JSON config sets the capture (`sample_rate_hz`, `n_samples`,
    /// `noise_power_dbm`, `seed`), the detector (`bin_hz`, `threshold_db`),
    /// the radar band (`radar_center_hz`, `radar_bandwidth_hz`, `n`) and a
    /// `source`: `"silence"`, `{"lte": {...}}`, `{"tone": {...}}`,
    /// `{"comb": {...}}` or `{"file": {"path": ...}}`. Writes
    /// `periodogram.csv`, `bands.csv`, `mask.json` and `manifest.json`.
    Sense {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the four-step radar/communications coexistence experiment.
    ///
    /// Without `--config` the built-in desk-scale scenario is used. Writes
    /// the sensed `bands.csv` and `mask.json`, both sequence sets, the design
    /// `trace.csv`, per-trial `step1.csv`..`step4.csv`, `summary.csv`,
    /// range-Doppler maps `rd_*.csv` and `manifest.json`.
    Simulate {
        /// Scenario (JSON); missing fields take desk-scale defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the number of Monte-Carlo trials.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a manifest, regenerating its outputs.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the built-in desk-scale scenario as JSON.
    Scenario,
}

fn run(command: Command) -> cogwave::Result<Option<Outcome>> {
    Ok(Some(match command {
        Command::Design {
            config,
            stopbands,
            mask,
            out,
        } => {
            let mut cfg: DesignConfig = io::read_json(&config)?;
            cfg.stopbands.extend(stopbands);
            if mask.is_some() {
                cfg.mask_file = mask;
            }
            commands::design(cfg, &out)?
        }
        Command::Evaluate {
            sequences,
            mask,
            stopbands,
            nfft,
            out,
        } => commands::evaluate(
            EvaluateConfig {
                sequences,
                stopbands,
                mask_file: mask,
                nfft,
            },
            &out,
        )?,
        Command::Sense { config, out } => commands::sense(io::read_json(&config)?, &out)?,
        Command::Simulate { config, trials, out } => {
            let mut scenario: Scenario = match config {
                Some(path) => io::read_json(&path)?,
                None => Scenario::desk_scale(),
            };
            if let Some(t) = trials {
                scenario.trials = t;
            }
            commands::simulate(scenario, &out)?
        }
        Command::Replay { manifest, out } => commands::replay(&Manifest::load(&manifest)?, &out)?,
        Command::Scenario => {
            println!("{}", serde_json::to_string_pretty(&Scenario::desk_scale()).expect("scenario serializes"));
            return Ok(None);
        }
    }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(outcome)) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if outcome.warnings.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
