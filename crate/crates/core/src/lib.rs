pub mod circuit;
pub mod density;
pub mod error;
pub mod extrap;
pub mod noise;
pub mod pauli;
pub mod pcs;
pub mod shadow;
pub mod sim;
pub mod statevector;
pub mod tableau;

#[cfg(test)]
mod test_oracle;

pub use circuit::{Circuit, Gate};
pub use error::{Error, Result};
pub use extrap::{fit, pce_pipeline, zne_pipeline, FitKind, FitResult, Series};
pub use noise::NoiseModel;
pub use pauli::{Pauli, PauliString};
pub use pcs::{build_sandwich, find_check_pair, markov_logical_error, max_checks, CheckBasis, MarkovModel, SandwichPlan, Scope};
pub use shadow::{EstimatorConfig, Protection, RsCalibration, ShadowNoise};
pub use sim::{expectation_z_basis, run_shots, ExpectationEstimate, PauliChannel, ShotRecord, Simulator};
pub use tableau::{CliffordGate, CliffordTableau};
