//! IQC multipliers and the per-frequency LMI formulations.
//!
//! Every formulation is assembled from one primitive: for a multiplier block
//! acting on signals `a = F_a v` and `b = F_b v`, the quadratic form
//! `[a; b]* Π [a; b]` is affine in the multiplier parameters, and each
//! parameter contributes one sparse Hermitian coefficient.

mod assemble;
mod grid;
mod hermitian;
mod lmi;

pub use assemble::{assemble, assemble_augmented, assemble_lumped, assemble_sparse, sparsity_pattern};
pub use grid::FrequencyGrid;
pub use hermitian::{SparseHermitian, TripletMatrix};
pub use lmi::{HermitianAffineLMI, LmiFile, MultiplierSite, VariableKind, VariableMeta};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, Network, UncertaintyKind, UncertaintySpec};
use crate::numerics::{CMatrix, J};

#[derive(Debug, Error)]
pub enum IqcError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid frequency grid: {0}")]
    Grid(String),
    #[error("multiplier does not match the network: {0}")]
    Multiplier(String),
    #[error("invalid LMI: {0}")]
    Format(String),
}

/// Which LMI to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Dense test on the lumped transfer matrix.
    Lumped,
    /// Sparse test with the interconnection kept as a lossless constraint.
    Sparse,
    /// Test on the augmented description with interconnection multipliers.
    Augmented,
}

impl std::str::FromStr for Formulation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lumped" => Ok(Formulation::Lumped),
            "sparse" => Ok(Formulation::Sparse),
            "augmented" => Ok(Formulation::Augmented),
            _ => Err(format!("unknown formulation '{s}' (expected lumped, sparse or augmented)")),
        }
    }
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Formulation::Lumped => "lumped",
            Formulation::Sparse => "sparse",
            Formulation::Augmented => "augmented",
        })
    }
}

/// Parametrized multiplier class for one uncertainty block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierFamily {
    /// `[[x I, j y I], [−j y I, −x I]]`, `x ≥ 0`: constant real gains in `[−1, 1]`.
    DgScaling,
    /// `[[−X, X], [X, −X]]`, `X` real diagonal and sign-free: the identity map.
    Lossless,
}

impl MultiplierFamily {
    pub fn for_kind(kind: UncertaintyKind) -> Self {
        match kind {
            UncertaintyKind::NormalizedScalarGain => MultiplierFamily::DgScaling,
            UncertaintyKind::Identity => MultiplierFamily::Lossless,
        }
    }

    /// Number of real parameters for a block of dimension `dim`.
    pub fn parameter_count(&self, dim: usize) -> usize {
        match self {
            MultiplierFamily::DgScaling => 2,
            MultiplierFamily::Lossless => dim,
        }
    }

    /// `Π` as a dense `2d × 2d` matrix for the given parameters.
    pub fn pi(&self, dim: usize, params: &[f64]) -> CMatrix {
        let mut pi = CMatrix::zeros(2 * dim, 2 * dim);
        match self {
            MultiplierFamily::DgScaling => {
                let (x, y) = (params[0], params[1]);
                for k in 0..dim {
                    pi[(k, k)] = x.into();
                    pi[(dim + k, dim + k)] = (-x).into();
                    pi[(k, dim + k)] = J * y;
                    pi[(dim + k, k)] = -J * y;
                }
            }
            MultiplierFamily::Lossless => {
                for k in 0..dim {
                    let x = params[k];
                    pi[(k, k)] = (-x).into();
                    pi[(dim + k, dim + k)] = (-x).into();
                    pi[(k, dim + k)] = x.into();
                    pi[(dim + k, k)] = x.into();
                }
            }
        }
        pi
    }
}

/// Multiplier family per subsystem (and per interconnection, if augmented).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub subsystems: Vec<(MultiplierFamily, usize)>,
}

impl MultiplierSpec {
    pub fn from_uncertainty(specs: &[UncertaintySpec]) -> Self {
        Self { subsystems: specs.iter().map(|s| (MultiplierFamily::for_kind(s.kind), s.dim)).collect() }
    }

    /// Default multipliers for the subsystem uncertainties of `net`.
    pub fn for_network(net: &Network) -> Self {
        let specs: Vec<UncertaintySpec> = net.subsystems().iter().map(|s| s.uncertainty()).collect();
        Self::from_uncertainty(&specs)
    }

    fn check(&self, dims: impl Iterator<Item = usize>, what: &str) -> Result<(), IqcError> {
        let dims: Vec<usize> = dims.collect();
        if dims.len() != self.subsystems.len() || dims.iter().zip(&self.subsystems).any(|(d, s)| *d != s.1) {
            return Err(IqcError::Multiplier(format!(
                "{what} dimensions {dims:?} vs multiplier dimensions {:?}",
                self.subsystems.iter().map(|s| s.1).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }
}
