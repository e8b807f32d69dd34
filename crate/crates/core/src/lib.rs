//! Simulation toolkit for quantum process tomography with imperfect,
//! possibly correlated state preparators.
//!
//! The library models the full preparation / evolution / trace pipeline
//! `E = Tr_B ∘ U ∘ P`, represents linear maps on operators jointly as
//! superoperator and Choi matrix, detects and decomposes non-completely
//! positive behaviour, and reconstructs maps from tomography assignments
//! by linear inversion (optionally with simulated finite measurement
//! statistics).

pub mod channels;
pub mod dynamics;
pub mod error;
pub mod json;
pub mod linalg;
pub mod prep;
pub mod sampling;
pub mod states;
pub mod tomography;

pub use channels::{KrausSet, NcpDecomposition, QuantumMap};
pub use dynamics::{DynamicsSetup, FXiSplit, PositivityReport, SamplingSpec, TimeFamily};
pub use error::{QptError, Result};
pub use linalg::{CMatrix, CVector, HermitianEig};
pub use prep::{Compatibility, PrepRequest, Preparator};
pub use states::{BipartiteState, BlochVector, CorrelationMatrix, DensityMatrix, OperatorBasis};
pub use tomography::{Assignment, Diagnosis, TomographyReport};
