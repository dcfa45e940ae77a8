//! Robust stability certificates for sparse interconnections of uncertain
//! linear systems.
//!
//! The crate assembles frequency-gridded IQC feasibility problems, splits
//! them along a clique tree of their chordal sparsity pattern and solves
//! them either centrally or with one simulated agent per clique.

pub mod chordal;
pub mod cli;
pub mod decomp;
pub mod iqc;
pub mod model;
pub mod numerics;
pub mod solver;
