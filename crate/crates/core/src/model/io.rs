use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{augment, AugmentedNetwork, Interconnection, ModelError, Network, StateSpace, Subsystem, UncertaintySpec};
use crate::numerics::RMatrix;

/// One realization with flat row-major matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceFile {
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsystemFile {
    pub g_pq: StateSpaceFile,
    pub g_pw: StateSpaceFile,
    pub g_zq: StateSpaceFile,
    pub g_zw: StateSpaceFile,
    pub uncertainty: UncertaintySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaEntry {
    Pair([usize; 2]),
    Valued(usize, usize, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFile {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<GammaEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub subsystems: Vec<SubsystemFile>,
    pub gamma: GammaFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interconnection_uncertainty: Option<Vec<UncertaintySpec>>,
}

fn matrix(rows: usize, cols: usize, data: &[f64], name: &str) -> Result<RMatrix, ModelError> {
    if data.len() != rows * cols {
        return Err(ModelError::Format(format!(
            "matrix {name} has {} entries, expected {rows}x{cols}",
            data.len()
        )));
    }
    Ok(RMatrix::from_row_slice(rows, cols, data))
}

fn flat(m: &RMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        out.extend(m.row(r).iter().copied());
    }
    out
}

impl StateSpaceFile {
    pub fn from_state_space(ss: &StateSpace) -> Self {
        Self {
            states: ss.states(),
            inputs: ss.inputs(),
            outputs: ss.outputs(),
            a: flat(ss.a()),
            b: flat(ss.b()),
            c: flat(ss.c()),
            d: flat(ss.d()),
        }
    }

    pub fn to_state_space(&self) -> Result<StateSpace, ModelError> {
        let (n, m, p) = (self.states, self.inputs, self.outputs);
        StateSpace::new(
            matrix(n, n, &self.a, "a")?,
            matrix(n, m, &self.b, "b")?,
            matrix(p, n, &self.c, "c")?,
            matrix(p, m, &self.d, "d")?,
        )
    }
}

impl NetworkFile {
    pub fn from_network(net: &Network) -> Self {
        let subsystems = net
            .subsystems()
            .iter()
            .map(|s| SubsystemFile {
                g_pq: StateSpaceFile::from_state_space(s.g_pq()),
                g_pw: StateSpaceFile::from_state_space(s.g_pw()),
                g_zq: StateSpaceFile::from_state_space(s.g_zq()),
                g_zw: StateSpaceFile::from_state_space(s.g_zw()),
                uncertainty: s.uncertainty(),
            })
            .collect();
        let g = net.gamma();
        let gamma = GammaFile {
            rows: g.rows(),
            cols: g.cols(),
            entries: g.entries().iter().map(|&(r, c)| GammaEntry::Pair([r, c])).collect(),
        };
        Self { subsystems, gamma, interconnection_uncertainty: None }
    }

    pub fn from_augmented(aug: &AugmentedNetwork) -> Self {
        let mut f = Self::from_network(aug.base());
        f.interconnection_uncertainty = Some(aug.interconnection_uncertainty().to_vec());
        f
    }

    pub fn to_network(&self) -> Result<Network, ModelError> {
        let mut subsystems = Vec::with_capacity(self.subsystems.len());
        for (i, s) in self.subsystems.iter().enumerate() {
            let ctx = |e: ModelError| ModelError::Format(format!("subsystem {i}: {e}"));
            subsystems.push(
                Subsystem::new(
                    s.g_pq.to_state_space().map_err(ctx)?,
                    s.g_pw.to_state_space().map_err(ctx)?,
                    s.g_zq.to_state_space().map_err(ctx)?,
                    s.g_zw.to_state_space().map_err(ctx)?,
                    s.uncertainty,
                )
                .map_err(ctx)?,
            );
        }
        let triplets: Vec<(usize, usize, f64)> = self
            .gamma
            .entries
            .iter()
            .map(|e| match *e {
                GammaEntry::Pair([r, c]) => (r, c, 1.0),
                GammaEntry::Valued(r, c, v) => (r, c, v),
            })
            .collect();
        let gamma = Interconnection::from_triplets(self.gamma.rows, self.gamma.cols, &triplets)?;
        Network::new(subsystems, gamma)
    }

    pub fn to_augmented(&self) -> Result<Option<AugmentedNetwork>, ModelError> {
        match &self.interconnection_uncertainty {
            None => Ok(None),
            Some(specs) => Ok(Some(augment(&self.to_network()?, specs.clone())?)),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network file serializes") + "\n"
    }

    pub fn read(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Format(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ModelError::Format(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json())
            .map_err(|e| ModelError::Format(format!("cannot write {}: {e}", path.display())))
    }
}

impl Network {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: NetworkFile = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        file.to_network()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NetworkFile::from_network(self)).expect("network serializes")
    }

    pub fn read(path: &Path) -> Result<Self, ModelError> {
        NetworkFile::read(path)?.to_network()
    }

    pub fn write(&self, path: &Path) -> Result<(), ModelError> {
        NetworkFile::from_network(self).write(path)
    }
}
