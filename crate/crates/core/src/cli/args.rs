use std::path::PathBuf;

use clap::{Parser, Subcommand};

use super::{cmd_decompose, generate_network, read_file, run_experiment, to_json, verify_report, write_file, CliError, ExperimentConfig};
use crate::iqc::{assemble, Formulation, HermitianAffineLMI};
use crate::model::{AugmentedNetwork, Frequency, Network, NetworkFile};
use crate::solver::{AnalysisReport, Mode};

#[derive(Debug, Parser)]
#[command(name = "iqc-chordal", version, about = "Robust stability certificates for sparse interconnections")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random network.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Network file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze a network (generated from the config unless --network is given).
    Analyze {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        formulation: Option<Formulation>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Output directory for the report and statistics files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the clique decomposition of an LMI.
    Decompose {
        /// LMI file.
        #[arg(long, conflicts_with = "network")]
        lmi: Option<PathBuf>,
        #[arg(long, requires = "omega")]
        network: Option<PathBuf>,
        /// Frequency (a number or "inf").
        #[arg(long)]
        omega: Option<Frequency>,
        #[arg(long, default_value = "sparse")]
        formulation: Formulation,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify the certificates of an analysis report.
    Verify {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

fn load_network(path: &std::path::Path) -> Result<(Network, Option<AugmentedNetwork>), CliError> {
    let file = NetworkFile::from_json(&read_file(path)?)?;
    Ok((file.to_network()?, file.to_augmented()?))
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig, CliError> {
    match path {
        Some(p) => ExperimentConfig::read(p),
        None => Ok(ExperimentConfig::default()),
    }
}

/// Runs one command; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Generate { config, seed, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let net = generate_network(&cfg)?;
            write_file(&out, &NetworkFile::from_network(&net).to_json())?;
            println!("subsystems={} edges={}", net.len(), net.coupling_edges().len());
            Ok(0)
        }
        Command::Analyze { config, network, seed, formulation, mode, epsilon, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
                cfg.solver.seed = s;
            }
            if let Some(f) = formulation {
                cfg.formulation = f;
            }
            if let Some(m) = mode {
                cfg.mode = m;
            }
            if let Some(e) = epsilon {
                cfg.solver.epsilon = e;
            }
            if out.is_some() {
                cfg.output_dir = out;
            }
            let (net, aug) = match &network {
                Some(p) => {
                    let (n, a) = load_network(p)?;
                    (Some(n), a)
                }
                None => (None, None),
            };
            let result = run_experiment(&cfg, net, aug.as_ref())?;
            println!("{}", result.summary.line());
            Ok(if result.report.is_certified() { 0 } else { 1 })
        }
        Command::Decompose { lmi, network, omega, formulation, out } => {
            let lmi = match (lmi, network, omega) {
                (Some(p), _, _) => HermitianAffineLMI::from_json(&read_file(&p)?)?,
                (None, Some(p), Some(w)) => {
                    let (net, aug) = load_network(&p)?;
                    assemble(&net, aug.as_ref(), formulation, w)?
                }
                _ => return Err(CliError::Input("decompose needs --lmi or --network with --omega".into())),
            };
            let dump = cmd_decompose(&lmi)?;
            let text = to_json(&dump);
            match out {
                Some(p) => write_file(&p, &text)?,
                None => println!("{text}"),
            }
            Ok(0)
        }
        Command::Verify { network, report } => {
            let (net, aug) = load_network(&network)?;
            let report: AnalysisReport =
                serde_json::from_str(&read_file(&report)?).map_err(|e| CliError::Input(format!("report: {e}")))?;
            let checks = verify_report(&net, aug.as_ref(), &report)?;
            for (w, r) in &checks {
                println!("omega={w} lambda_max={:.6e} {}", r.lambda_max, if r.pass { "pass" } else { "FAIL" });
            }
            let all = checks.iter().all(|(_, r)| r.pass);
            let complete = checks.len() == report.frequencies.len();
            println!("verified={}/{}", checks.iter().filter(|(_, r)| r.pass).count(), report.frequencies.len());
            Ok(if all && complete { 0 } else { 1 })
        }
    }
}
