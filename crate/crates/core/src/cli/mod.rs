//! Command-line front end: network generation, experiment runs and the
//! clique statistics files.

mod args;
mod generate;

pub use args::{run, Cli, Command};
pub use generate::{generate_network, peak_gain};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chordal::{build_clique_tree, chordal_embed, extract_cliques};
use crate::decomp::{decompose, DecompositionDump};
use crate::iqc::{assemble, sparsity_pattern, Formulation, FrequencyGrid, HermitianAffineLMI, IqcError};
use crate::model::{AugmentedNetwork, Frequency, ModelError, Network};
use crate::solver::{
    analyze, analyze_pattern, verify, verify_decomposed, AnalysisReport, Mode, SolverError, SolverOptions, VerificationReport,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Solver(e.into())
    }
}

impl From<IqcError> for CliError {
    fn from(e: IqcError) -> Self {
        CliError::Solver(e.into())
    }
}

impl CliError {
    /// 2 for input errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(SolverError::Numerics(_) | SolverError::Internal(_)) => 3,
            CliError::Solver(SolverError::Iqc(IqcError::Model(
                ModelError::Numerics(_) | ModelError::Evaluation { .. } | ModelError::WellPosedness { .. },
            ))) => 3,
            _ => 2,
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Log-spaced grid description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub include_zero: bool,
    pub include_inf: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { min: 1e-2, max: 1e2, points: 10, include_zero: true, include_inf: true }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<FrequencyGrid, CliError> {
        Ok(FrequencyGrid::logspace(self.min, self.max, self.points, self.include_zero, self.include_inf)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of subsystems `N`.
    pub subsystems: usize,
    pub state_dim: usize,
    /// Largest degree of a non-hub subsystem.
    pub degree_cap: usize,
    /// Subsystems allowed (and made) to exceed the degree cap.
    pub hub_count: usize,
    /// Target mean degree of the random graph.
    pub mean_degree: f64,
    /// Peak gain of each `G_pq` is drawn from `[½, 1] ×` this.
    pub uncertainty_gain: f64,
    /// Peak gain of the coupling channels `G_pw`, `G_zq`.
    pub coupling_gain: f64,
    pub grid: GridSpec,
    pub formulation: Formulation,
    pub mode: Mode,
    pub solver: SolverOptions,
    pub seed: u64,
    /// Where `run_experiment` writes its files.
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            subsystems: 20,
            state_dim: 2,
            degree_cap: 11,
            hub_count: 0,
            mean_degree: 3.0,
            uncertainty_gain: 0.5,
            coupling_gain: 0.3,
            grid: GridSpec::default(),
            formulation: Formulation::Sparse,
            mode: Mode::Centralized,
            solver: SolverOptions::default(),
            seed: 0,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.subsystems == 0 {
            return Err(CliError::Input("subsystems must be at least 1".into()));
        }
        if self.degree_cap == 0 {
            return Err(CliError::Input("degree_cap must be at least 1".into()));
        }
        if self.hub_count > self.subsystems {
            return Err(CliError::Input(format!("{} hubs among {} subsystems", self.hub_count, self.subsystems)));
        }
        if !(self.mean_degree.is_finite() && self.mean_degree >= 0.0) {
            return Err(CliError::Input("mean_degree must be nonnegative".into()));
        }
        if !(self.uncertainty_gain > 0.0 && self.coupling_gain >= 0.0) {
            return Err(CliError::Input("gains must be positive".into()));
        }
        if self.grid.build()?.is_empty() {
            return Err(CliError::Input("frequency grid is empty".into()));
        }
        self.solver.validate()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&read_file(path)?)
    }
}

/// Headline counts of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub lmi_dimension: usize,
    pub variables: usize,
    pub cliques: usize,
    pub coupling_count: usize,
    pub certified: bool,
    pub certified_frequencies: usize,
    pub frequencies: usize,
    pub max_iterations: usize,
}

impl Summary {
    pub fn from_report(report: &AnalysisReport) -> Self {
        let d = &report.decomposition;
        Self {
            lmi_dimension: d.dimension,
            variables: d.variables,
            cliques: d.cliques,
            coupling_count: d.coupling_count,
            certified: report.is_certified(),
            certified_frequencies: report.frequencies.iter().filter(|f| f.certificate.is_some()).count(),
            frequencies: report.frequencies.len(),
            max_iterations: report.frequencies.iter().map(|f| f.iterations).max().unwrap_or(0),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "dimension={} variables={} cliques={} coupling={} certified={}/{} max_iterations={} verdict={}",
            self.lmi_dimension,
            self.variables,
            self.cliques,
            self.coupling_count,
            self.certified_frequencies,
            self.frequencies,
            self.max_iterations,
            if self.certified { "certified_on_grid" } else { "not_certified" }
        )
    }
}

/// Per-clique rows: `clique,dimension,local_variables,coupling_count,subsystems,residual`.
pub fn clique_csv(dump: &DecompositionDump) -> String {
    let mut out = String::from("clique,dimension,local_variables,coupling_count,subsystems,residual\n");
    for c in &dump.clique_records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.id,
            c.dimension,
            c.local_variables,
            c.coupling_count,
            c.subsystems.len(),
            c.residual.len()
        );
    }
    out
}

/// Two-column histogram `value,count`.
pub fn histogram_csv(values: impl IntoIterator<Item = usize>) -> String {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut out = String::from("value,count\n");
    for (v, c) in counts {
        let _ = writeln!(out, "{v},{c}");
    }
    out
}

pub struct ExperimentOutput {
    pub network: Network,
    pub report: AnalysisReport,
    pub summary: Summary,
}

/// Generates (unless `network` is given) and analyzes a network, writing
/// `network.json`, `report.json`, `cliques.csv`, the three histogram files
/// and `summary.txt` when an output directory is configured.
pub fn run_experiment(cfg: &ExperimentConfig, network: Option<Network>, aug: Option<&AugmentedNetwork>) -> Result<ExperimentOutput, CliError> {
    cfg.validate()?;
    let network = match network {
        Some(n) => n,
        None => generate_network(cfg)?,
    };
    let grid = cfg.grid.build()?;
    let report = analyze(&network, aug, &grid, cfg.formulation, cfg.mode, &cfg.solver)?;
    let summary = Summary::from_report(&report);
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        let file = match aug {
            Some(a) => crate::model::NetworkFile::from_augmented(a),
            None => crate::model::NetworkFile::from_network(&network),
        };
        write_file(&dir.join("network.json"), &file.to_json())?;
        write_file(&dir.join("report.json"), &to_json(&report))?;
        let dump = &report.decomposition;
        write_file(&dir.join("cliques.csv"), &clique_csv(dump))?;
        write_file(&dir.join("hist_dimension.csv"), &histogram_csv(dump.clique_records.iter().map(|c| c.dimension)))?;
        write_file(&dir.join("hist_variables.csv"), &histogram_csv(dump.clique_records.iter().map(|c| c.local_variables)))?;
        write_file(&dir.join("hist_subsystems.csv"), &histogram_csv(dump.clique_records.iter().map(|c| c.subsystems.len())))?;
        write_file(&dir.join("summary.txt"), &format!("{}\n", summary.line()))?;
    }
    Ok(ExperimentOutput { network, report, summary })
}

pub(crate) fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialize")
}

/// Decomposition dump of one LMI along the clique tree of its own pattern.
pub fn cmd_decompose(lmi: &HermitianAffineLMI) -> Result<DecompositionDump, CliError> {
    let emb = chordal_embed(&sparsity_pattern(lmi));
    let tree = build_clique_tree(&extract_cliques(&emb), lmi.dim()).map_err(SolverError::from)?;
    Ok(decompose(lmi, &tree).map_err(SolverError::from)?.dump())
}

/// Re-verifies every certificate of `report` against LMIs rebuilt from the
/// network. Decomposed certificates are checked block by block along the
/// clique tree of the report's grid.
pub fn verify_report(
    net: &Network,
    aug: Option<&AugmentedNetwork>,
    report: &AnalysisReport,
) -> Result<Vec<(Frequency, VerificationReport)>, CliError> {
    let omegas: Vec<Frequency> = report.frequencies.iter().map(|f| f.omega).collect();
    let lmis: Vec<HermitianAffineLMI> =
        omegas.iter().map(|&w| assemble(net, aug, report.formulation, w)).collect::<Result<_, _>>()?;
    let needs_tree = report.frequencies.iter().any(|f| f.certificate.as_ref().is_some_and(|c| c.d.is_some()));
    let tree = if needs_tree { Some(analyze_pattern(&lmis)?) } else { None };
    let tol = report.options.tol_feasibility;
    let mut out = Vec::new();
    for (rec, lmi) in report.frequencies.iter().zip(&lmis) {
        let Some(cert) = &rec.certificate else { continue };
        let v = match (&cert.d, &tree) {
            (Some(_), Some(t)) => verify_decomposed(lmi, &decompose(lmi, t).map_err(SolverError::from)?, cert, tol)?,
            _ => verify(lmi, cert, tol)?,
        };
        out.push((rec.omega, v));
    }
    Ok(out)
}
