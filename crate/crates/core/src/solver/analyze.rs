use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::centralized::solve_centralized_run;
use super::distributed::solve_distributed_run;
use super::{AgentRecord, Certificate, SolveOutcome, SolverError, SolverOptions, Termination};
use crate::chordal::{build_clique_tree, chordal_embed, extract_cliques, CliqueTree, SparsityGraph};
use crate::decomp::{decompose, DecompositionDump};
use crate::iqc::{assemble, sparsity_pattern, Formulation, FrequencyGrid, HermitianAffineLMI};
use crate::model::{AugmentedNetwork, Frequency, Network};

/// Which solver `analyze` runs at each frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Centralized,
    Distributed,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "centralized" => Ok(Mode::Centralized),
            "distributed" => Ok(Mode::Distributed),
            _ => Err(format!("unknown mode '{s}' (expected centralized or distributed)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Centralized => "centralized",
            Mode::Distributed => "distributed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyStatus {
    Certified,
    NoCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRecord {
    pub index: usize,
    pub omega: Frequency,
    pub status: FrequencyStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<Termination>,
    /// Certified `λ_max`, or the best one seen when no certificate was found.
    pub lambda_max: Option<f64>,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedOnGrid,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub verdict: Verdict,
    pub formulation: Formulation,
    pub mode: Mode,
    pub options: SolverOptions,
    pub frequencies: Vec<FrequencyRecord>,
    /// Decomposition of the first grid LMI along the shared clique tree.
    pub decomposition: DecompositionDump,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agents: Vec<AgentRecord>,
}

impl AnalysisReport {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::CertifiedOnGrid
    }
}

/// Clique tree of the chordal embedding of the union of the LMI patterns.
pub fn analyze_pattern(lmis: &[HermitianAffineLMI]) -> Result<CliqueTree, SolverError> {
    let n = lmis.first().map_or(0, |l| l.dim());
    if lmis.iter().any(|l| l.dim() != n) {
        return Err(SolverError::Dimension("grid LMIs differ in dimension".into()));
    }
    let edges: Vec<(usize, usize)> = lmis.iter().flat_map(|l| sparsity_pattern(l).edges().to_vec()).collect();
    let emb = chordal_embed(&SparsityGraph::new(n, edges));
    Ok(build_clique_tree(&extract_cliques(&emb), n)?)
}

/// Gridded robust-stability analysis: one LMI per grid frequency, solved
/// centrally or by one agent per clique; certified on the grid iff every
/// frequency yields a verified certificate.
pub fn analyze(
    net: &Network,
    aug: Option<&AugmentedNetwork>,
    grid: &FrequencyGrid,
    formulation: Formulation,
    mode: Mode,
    opts: &SolverOptions,
) -> Result<AnalysisReport, SolverError> {
    opts.validate()?;
    let lmis: Vec<HermitianAffineLMI> =
        grid.par_iter().map(|&w| assemble(net, aug, formulation, w)).collect::<Result<_, _>>()?;
    let tree = analyze_pattern(&lmis)?;
    let first = decompose(&lmis[0], &tree)?;
    let dump = first.dump();

    let runs: Vec<super::SolveRun> = lmis
        .par_iter()
        .map(|lmi| match mode {
            Mode::Centralized => solve_centralized_run(lmi, opts),
            Mode::Distributed => solve_distributed_run(lmi, &decompose(lmi, &tree)?, opts),
        })
        .collect::<Result<_, _>>()?;

    let mut agents = Vec::new();
    let frequencies: Vec<FrequencyRecord> = runs
        .into_iter()
        .enumerate()
        .map(|(index, run)| {
            if agents.is_empty() {
                agents = run.agents;
            }
            match run.outcome {
                SolveOutcome::Certified(c) => FrequencyRecord {
                    index,
                    omega: c.omega,
                    status: FrequencyStatus::Certified,
                    reason: None,
                    lambda_max: Some(c.lambda_max),
                    iterations: c.iterations,
                    certificate: Some(c),
                },
                SolveOutcome::NoCertificate(n) => FrequencyRecord {
                    index,
                    omega: n.omega,
                    status: FrequencyStatus::NoCertificate,
                    reason: Some(n.reason),
                    lambda_max: n.best_lambda_max,
                    iterations: n.iterations,
                    certificate: None,
                },
            }
        })
        .collect();
    let verdict = if frequencies.iter().all(|f| f.status == FrequencyStatus::Certified) {
        Verdict::CertifiedOnGrid
    } else {
        Verdict::NotCertified
    };
    Ok(AnalysisReport { verdict, formulation, mode, options: *opts, frequencies, decomposition: dump, agents })
}
