use serde::{Deserialize, Serialize};

use super::{Formulation, IqcError, SparseHermitian, TripletMatrix};
use crate::model::Frequency;
use crate::numerics::CMatrix;

/// What a scalar decision variable parametrizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariableKind {
    /// `x` of a D–G scaling (constrained `x ≥ 0`).
    DgX,
    /// `y` of a D–G scaling.
    DgY,
    /// One diagonal entry of a lossless multiplier, for LMI index `channel`.
    Lossless { channel: usize },
}

/// Whether a multiplier belongs to a subsystem uncertainty or to an interconnection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierSite {
    Subsystem,
    Interconnection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMeta {
    #[serde(flatten)]
    pub kind: VariableKind,
    pub site: MultiplierSite,
    pub subsystem: usize,
    pub nonneg: bool,
}

/// `y ↦ Σ y_i Q_i + W` at one frequency; feasibility asks for `⪯ −εI`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianAffineLMI {
    pub omega: Frequency,
    pub formulation: Formulation,
    pub w: SparseHermitian,
    pub coeffs: Vec<SparseHermitian>,
    pub vars: Vec<VariableMeta>,
    /// Subsystem whose channel each LMI index belongs to.
    pub index_owner: Vec<usize>,
    /// Every entry depends on the whole network (lumped form).
    pub dense_coupling: bool,
}

impl HermitianAffineLMI {
    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    pub fn num_vars(&self) -> usize {
        self.coeffs.len()
    }

    /// Checks dimensions and variable metadata.
    pub fn validate(&self) -> Result<(), IqcError> {
        let n = self.dim();
        if self.coeffs.len() != self.vars.len() {
            return Err(IqcError::Format(format!(
                "{} coefficients but {} variable records",
                self.coeffs.len(),
                self.vars.len()
            )));
        }
        if let Some(k) = self.coeffs.iter().position(|q| q.dim() != n) {
            return Err(IqcError::Format(format!("coefficient {k} has dimension {} not {n}", self.coeffs[k].dim())));
        }
        if self.index_owner.len() != n {
            return Err(IqcError::Format(format!("{} index owners for dimension {n}", self.index_owner.len())));
        }
        Ok(())
    }

    /// Dense value `Q(y) + W`.
    pub fn eval(&self, y: &[f64]) -> CMatrix {
        assert_eq!(y.len(), self.num_vars(), "variable vector length");
        let mut out = self.w.to_dense();
        for (q, &yi) in self.coeffs.iter().zip(y) {
            if yi != 0.0 {
                q.add_to_dense(yi, &mut out);
            }
        }
        out
    }

    /// Largest absolute entry over `W` and all coefficients.
    pub fn scale(&self) -> f64 {
        std::iter::once(&self.w)
            .chain(&self.coeffs)
            .flat_map(|m| m.upper_entries().map(|(_, v)| v.norm()))
            .fold(0.0, f64::max)
    }

    pub fn to_file(&self) -> LmiFile {
        LmiFile {
            n: self.dim(),
            omega: self.omega,
            formulation: self.formulation,
            w: self.w.to_triplets(),
            coeffs: self.coeffs.iter().map(SparseHermitian::to_triplets).collect(),
            variables: self.vars.clone(),
            index_owner: self.index_owner.clone(),
            dense_coupling: self.dense_coupling,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("LMI serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, IqcError> {
        let file: LmiFile = serde_json::from_str(text).map_err(|e| IqcError::Format(e.to_string()))?;
        file.to_lmi()
    }
}

/// Serialized LMI: upper-triangle triplets with separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmiFile {
    pub n: usize,
    pub omega: Frequency,
    pub formulation: Formulation,
    pub w: TripletMatrix,
    pub coeffs: Vec<TripletMatrix>,
    pub variables: Vec<VariableMeta>,
    pub index_owner: Vec<usize>,
    #[serde(default)]
    pub dense_coupling: bool,
}

impl LmiFile {
    pub fn to_lmi(&self) -> Result<HermitianAffineLMI, IqcError> {
        let conv = |t: &TripletMatrix| {
            if t.n != self.n {
                return Err(IqcError::Format(format!("matrix of dimension {} in an LMI of dimension {}", t.n, self.n)));
            }
            SparseHermitian::from_triplets(t).map_err(IqcError::Format)
        };
        let lmi = HermitianAffineLMI {
            omega: self.omega,
            formulation: self.formulation,
            w: conv(&self.w)?,
            coeffs: self.coeffs.iter().map(conv).collect::<Result<_, _>>()?,
            vars: self.variables.clone(),
            index_owner: self.index_owner.clone(),
            dense_coupling: self.dense_coupling,
        };
        lmi.validate()?;
        Ok(lmi)
    }
}
