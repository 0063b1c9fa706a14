//! Experiment manifests: JSON, with per-experiment defaults under any
//! fields the file leaves out.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pce_core::noise::GaussianSpec;
use pce_core::{FitKind, NoiseModel, PauliString, Protection};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Heatmap,
    MarkovCheck,
    ShadowCompare,
    Pce,
    Zne,
    GenCircuit,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Heatmap,
        Experiment::MarkovCheck,
        Experiment::ShadowCompare,
        Experiment::Pce,
        Experiment::Zne,
        Experiment::GenCircuit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Heatmap => "heatmap",
            Experiment::MarkovCheck => "markov-check",
            Experiment::ShadowCompare => "shadow-compare",
            Experiment::Pce => "pce",
            Experiment::Zne => "zne",
            Experiment::GenCircuit => "gen-circuit",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| BenchError::Manifest(format!("unknown experiment '{s}'")))
    }
}

/// State preparation for shadow experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrepSpec {
    /// X on qubits 0 and 1, RY on the last qubit, CX ladder, then a
    /// compiled `exp(-i phi Z..Z / 2)` entangler.
    Checkable { theta: f64, phi: f64 },
    /// Layered RY/RZ rotations and CX chains with seeded angles.
    Layered { layers: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowSettings {
    pub prep: PrepSpec,
    pub n_groups: usize,
    pub shadow_circuits: usize,
    pub shots_per_circuit: usize,
    pub subset_sizes: Vec<usize>,
    /// Layer counts 1..=checks_used feed the extrapolation; default
    /// `max(3, n / 2)`.
    pub checks_used: Option<usize>,
    /// Clifford-only layers implemented physically; default `n` up to four
    /// qubits, else `checks_used`.
    pub implemented_layers: Option<usize>,
    pub calibration_rounds: usize,
    pub global_depolarizing: f64,
    pub model: FitKind,
    /// Empty selects every single-Z and double-Z string.
    pub observables: Vec<PauliString>,
    pub protections: Vec<Protection>,
    pub sample_log: bool,
}

impl Default for ShadowSettings {
    fn default() -> Self {
        ShadowSettings {
            prep: PrepSpec::Checkable { theta: 0.9, phi: 0.4 },
            n_groups: 20,
            shadow_circuits: 10_000,
            shots_per_circuit: 100,
            subset_sizes: vec![100, 400, 1000, 4000, 10_000],
            checks_used: None,
            implemented_layers: None,
            calibration_rounds: 100_000,
            global_depolarizing: 0.0,
            model: FitKind::Exponential,
            observables: Vec::new(),
            protections: vec![Protection::CliffordOnly, Protection::FullCircuit],
            sample_log: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub experiment: Experiment,
    pub seed: u64,
    pub qubits: Vec<usize>,
    pub depths: Vec<usize>,
    pub noise: NoiseModel,
    /// Noise JSON file replacing `noise` when set; relative to the manifest.
    pub noise_file: Option<PathBuf>,
    /// Total shots per mitigated estimate (heatmap, pce, zne) or per check
    /// count (markov-check).
    pub shots: usize,
    pub circuits_per_cell: usize,
    /// Check layers used by check extrapolation; default `max(3, n / 2)`.
    pub checks: Option<usize>,
    pub pce_model: FitKind,
    pub scale_sets: Vec<Vec<f64>>,
    pub models: Vec<FitKind>,
    /// Payload circuit in text form for pce/zne; random when absent.
    pub circuit_file: Option<PathBuf>,
    pub mirror: bool,
    pub epsilons: Vec<f64>,
    pub max_layers: usize,
    pub shadow: ShadowSettings,
    pub out_dir: PathBuf,
}

pub fn paper_scale_sets() -> Vec<Vec<f64>> {
    vec![
        vec![1.0, 1.1, 1.2],
        vec![1.0, 1.2, 1.6],
        vec![1.0, 3.0, 5.0],
        vec![1.0, 2.0, 3.0, 4.0, 5.0],
        vec![1.0, 3.0, 5.0, 7.0, 9.0],
        vec![1.0, 1.1, 1.2, 1.3, 1.4],
        vec![1.0, 1.2, 1.5, 1.8, 2.0],
    ]
}

pub const DESK_QUBITS: [usize; 3] = [4, 6, 8];
pub const DESK_DEPTHS: [usize; 3] = [10, 25, 40];
pub const FULL_QUBITS: [usize; 5] = [4, 6, 8, 10, 12];
pub const FULL_DEPTHS: [usize; 5] = [10, 20, 30, 40, 50];

/// Default check count for extrapolation on `n` qubits.
pub fn default_checks(n: usize) -> usize {
    (n / 2).max(3).min(n)
}

impl Manifest {
    pub fn for_experiment(experiment: Experiment) -> Self {
        let base = Manifest {
            experiment,
            seed: 2024,
            qubits: DESK_QUBITS.to_vec(),
            depths: DESK_DEPTHS.to_vec(),
            noise: NoiseModel::uniform(5e-4, 5e-3),
            noise_file: None,
            shots: 50_000,
            circuits_per_cell: 20,
            checks: None,
            pce_model: FitKind::Exponential,
            scale_sets: paper_scale_sets(),
            models: vec![FitKind::Richardson, FitKind::Linear, FitKind::Exponential],
            circuit_file: None,
            mirror: false,
            epsilons: vec![0.1],
            max_layers: 4,
            shadow: ShadowSettings::default(),
            out_dir: PathBuf::from("results").join(experiment.name()),
        };
        match experiment {
            Experiment::Heatmap => base,
            Experiment::MarkovCheck => Manifest {
                qubits: vec![8],
                depths: vec![10],
                noise: NoiseModel::noiseless(),
                epsilons: vec![0.0, 0.1],
                ..base
            },
            Experiment::ShadowCompare => Manifest {
                qubits: vec![4],
                depths: Vec::new(),
                noise: NoiseModel::uniform(0.002, 0.02),
                ..base
            },
            Experiment::Pce => Manifest {
                qubits: vec![8],
                depths: vec![40],
                models: vec![FitKind::Linear, FitKind::Exponential],
                ..base
            },
            Experiment::Zne => Manifest {
                qubits: vec![8],
                depths: vec![40],
                scale_sets: vec![vec![1.0, 3.0, 5.0]],
                ..base
            },
            Experiment::GenCircuit => Manifest { qubits: vec![4], depths: vec![10], ..base },
        }
    }

    /// Parses a manifest, filling absent fields from the defaults of its
    /// `experiment`.
    pub fn from_json(text: &str) -> Result<Self> {
        let given: Value = serde_json::from_str(text)?;
        let Value::Object(given) = given else {
            return Err(BenchError::Manifest("manifest must be a JSON object".into()));
        };
        let kind: Experiment = match given.get("experiment") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => return Err(BenchError::Manifest("manifest lacks 'experiment'".into())),
        };
        let mut merged = serde_json::to_value(Manifest::for_experiment(kind))?;
        let Value::Object(ref mut target) = merged else { unreachable!("manifest serializes to an object") };
        for (key, value) in given {
            match (target.get_mut(&key), value) {
                (Some(Value::Object(inner)), Value::Object(patch)) if key == "shadow" => {
                    for (k, v) in patch {
                        inner.insert(k, v);
                    }
                }
                (_, value) => {
                    target.insert(key, value);
                }
            }
        }
        Ok(serde_json::from_value(merged)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        let mut m = Manifest::from_json(&text)?;
        if let (Some(file), Some(dir)) = (&m.noise_file, path.parent()) {
            if file.is_relative() {
                m.noise_file = Some(dir.join(file));
            }
        }
        if let (Some(file), Some(dir)) = (&m.circuit_file, path.parent()) {
            if file.is_relative() {
                m.circuit_file = Some(dir.join(file));
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The gate noise, read from `noise_file` when one is named.
    pub fn noise_model(&self) -> Result<NoiseModel> {
        match &self.noise_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
                Ok(serde_json::from_str(&text)?)
            }
            None => Ok(self.noise.clone()),
        }
    }

    pub fn use_full_grid(&mut self) {
        self.qubits = FULL_QUBITS.to_vec();
        self.depths = FULL_DEPTHS.to_vec();
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Manifest(msg));
        if self.qubits.is_empty() || self.qubits.contains(&0) {
            return bad("qubits must list positive counts".into());
        }
        let needs_depth = !matches!(self.experiment, Experiment::ShadowCompare);
        let uses_file = matches!(self.experiment, Experiment::Pce | Experiment::Zne) && self.circuit_file.is_some();
        if needs_depth && !uses_file && self.depths.is_empty() {
            return bad("depths must not be empty".into());
        }
        if self.shots == 0 {
            return bad("shots must be positive".into());
        }
        if self.experiment == Experiment::Heatmap && self.circuits_per_cell == 0 {
            return bad("circuits_per_cell must be positive".into());
        }
        for set in &self.scale_sets {
            pce_core::extrap::validate_scales(set)?;
        }
        if self.epsilons.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return bad("epsilons must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// The Gaussian-inhomogeneous noise of the shadow experiments.
pub fn gaussian_shadow_noise(seed: u64) -> NoiseModel {
    NoiseModel::gaussian(GaussianSpec { mean1: 0.002, sd1: 0.0005, mean2: 0.02, sd2: 0.005, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_bit_exactly() {
        for kind in Experiment::ALL {
            let mut m = Manifest::for_experiment(kind);
            m.noise.p1 = 0.1 + 0.2;
            m.scale_sets.push(vec![1.0, 1.0 + f64::EPSILON]);
            let text = m.to_json().unwrap();
            let back = Manifest::from_json(&text).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.to_json().unwrap(), text);
        }
    }

    #[test]
    fn partial_manifests_take_experiment_defaults() {
        let m = Manifest::from_json(r#"{"experiment": "markov-check", "seed": 5, "shadow": {"n_groups": 10}}"#).unwrap();
        assert_eq!(m.seed, 5);
        assert_eq!(m.qubits, vec![8]);
        assert!(m.noise.is_noiseless());
        assert_eq!(m.shadow.n_groups, 10);
        assert_eq!(m.shadow.shadow_circuits, 10_000);
        assert!(Manifest::from_json(r#"{"seed": 5}"#).is_err());
        assert!(Manifest::from_json(r#"{"experiment": "heatmap", "bogus": 1}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut m = Manifest::for_experiment(Experiment::Zne);
        assert!(m.validate().is_ok());
        m.scale_sets = vec![vec![1.5, 2.0]];
        assert!(m.validate().is_err());
        assert_eq!("shadow-compare".parse::<Experiment>().unwrap(), Experiment::ShadowCompare);
        assert_eq!(default_checks(4), 3);
        assert_eq!(default_checks(8), 4);
        assert_eq!(default_checks(12), 6);
        assert_eq!(default_checks(2), 2);
    }
}
