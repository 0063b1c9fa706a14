//! Depolarizing noise tables.
//!
//! Rate lookup for a gate site: single-qubit sites use the qubit's `p1`
//! override or the global `p1`. Two-qubit sites use an explicit edge entry if
//! present, otherwise the mean of the two qubits' `p2` overrides (falling back
//! to the global `p2` for a qubit without one). Idle qubits never accrue noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest rate a sampled value is clamped to.
const MAX_RATE: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitRates {
    pub qubit: usize,
    pub p1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeRate {
    pub qubits: [usize; 2],
    pub p2: f64,
}

/// Per-qubit `p1` and per-edge `p2` drawn from normal distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mean1: f64,
    pub sd1: f64,
    pub mean2: f64,
    pub sd2: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(default)]
    pub p1: f64,
    #[serde(default)]
    pub p2: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_qubit: Vec<QubitRates>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_edge: Vec<EdgeRate>,
    #[serde(default = "default_true")]
    pub noisy_checks: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<GaussianSpec>,
}

fn default_true() -> bool {
    true
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::noiseless()
    }
}

fn check_rate(name: &str, p: f64) -> Result<()> {
    if (0.0..1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::arg(format!("{name} = {p} outside [0, 1)")))
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel::uniform(0.0, 0.0)
    }

    pub fn uniform(p1: f64, p2: f64) -> Self {
        NoiseModel { p1, p2, per_qubit: vec![], per_edge: vec![], noisy_checks: true, gaussian: None }
    }

    pub fn with_noisy_checks(mut self, noisy: bool) -> Self {
        self.noisy_checks = noisy;
        self
    }

    /// Homogeneous means with a Gaussian spec attached; rates are drawn on
    /// [`NoiseModel::materialize`].
    pub fn gaussian(spec: GaussianSpec) -> Self {
        NoiseModel { gaussian: Some(spec), ..NoiseModel::uniform(spec.mean1, spec.mean2) }
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0
            && self.p2 == 0.0
            && self.per_qubit.iter().all(|r| r.p1 == 0.0 && r.p2.unwrap_or(0.0) == 0.0)
            && self.per_edge.iter().all(|e| e.p2 == 0.0)
            && self.gaussian.is_none_or(|g| g.mean1 == 0.0 && g.sd1 == 0.0 && g.mean2 == 0.0 && g.sd2 == 0.0)
    }

    /// Fills the per-qubit and per-edge tables from the Gaussian spec for an
    /// `n`-qubit register. Qubit `b` draws its `p1` and then `p2` for the
    /// pairs `(0, b) .. (b - 1, b)`, so a smaller register sees a prefix of
    /// the same draws. Draws are clamped to `[0, 1)`. Models without a spec
    /// are returned unchanged.
    pub fn materialize(&self, n: usize) -> Result<NoiseModel> {
        let Some(spec) = self.gaussian else {
            return Ok(self.clone());
        };
        let d1 = Normal::new(spec.mean1, spec.sd1).map_err(|e| Error::arg(e.to_string()))?;
        let d2 = Normal::new(spec.mean2, spec.sd2).map_err(|e| Error::arg(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let clamp = |v: f64| v.clamp(0.0, MAX_RATE);
        let mut per_qubit = Vec::with_capacity(n);
        let mut per_edge = Vec::new();
        for b in 0..n {
            per_qubit.push(QubitRates { qubit: b, p1: clamp(d1.sample(&mut rng)), p2: None });
            for a in 0..b {
                per_edge.push(EdgeRate { qubits: [a, b], p2: clamp(d2.sample(&mut rng)) });
            }
        }
        Ok(NoiseModel { per_qubit, per_edge, ..self.clone() })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_rate("p1", self.p1)?;
        check_rate("p2", self.p2)?;
        for r in &self.per_qubit {
            if r.qubit >= n {
                return Err(Error::arg(format!("noise override for undeclared qubit {}", r.qubit)));
            }
            check_rate("per_qubit p1", r.p1)?;
            if let Some(p) = r.p2 {
                check_rate("per_qubit p2", p)?;
            }
        }
        for e in &self.per_edge {
            if e.qubits[0] >= n || e.qubits[1] >= n || e.qubits[0] == e.qubits[1] {
                return Err(Error::arg(format!("bad noise edge {:?}", e.qubits)));
            }
            check_rate("per_edge p2", e.p2)?;
        }
        if let Some(g) = self.gaussian {
            for (name, v) in [("mean1", g.mean1), ("sd1", g.sd1), ("mean2", g.mean2), ("sd2", g.sd2)] {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::arg(format!("gaussian {name} = {v}")));
                }
            }
        }
        Ok(())
    }

    /// Rate lookup table for an `n_data + n_ancilla` register. A Gaussian
    /// spec is materialized over the whole register first if needed.
    pub fn resolve(&self, n_data: usize, n_ancilla: usize) -> Result<ResolvedNoise> {
        let n = n_data + n_ancilla;
        let model = if self.gaussian.is_some() && self.per_qubit.is_empty() && self.per_edge.is_empty() {
            self.materialize(n)?
        } else {
            self.clone()
        };
        model.validate(n)?;
        let mut p1 = vec![model.p1; n];
        let mut q2 = vec![model.p2; n];
        for r in &model.per_qubit {
            p1[r.qubit] = r.p1;
            if let Some(p) = r.p2 {
                q2[r.qubit] = p;
            }
        }
        let mut p2 = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                p2[a * n + b] = 0.5 * (q2[a] + q2[b]);
            }
        }
        for e in &model.per_edge {
            let [a, b] = e.qubits;
            p2[a * n + b] = e.p2;
            p2[b * n + a] = e.p2;
        }
        Ok(ResolvedNoise { n, n_data, p1, p2, noisy_checks: model.noisy_checks })
    }
}

/// Noise table bound to a concrete register.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedNoise {
    n: usize,
    n_data: usize,
    p1: Vec<f64>,
    p2: Vec<f64>,
    noisy_checks: bool,
}

impl ResolvedNoise {
    pub fn p1(&self, q: usize) -> f64 {
        self.p1[q]
    }

    pub fn p2(&self, a: usize, b: usize) -> f64 {
        self.p2[a * self.n + b]
    }

    /// Rate of the depolarizing site following a gate on `support`. Sites
    /// touching an ancilla are check gates.
    pub fn site_rate(&self, support: &[usize]) -> f64 {
        if !self.noisy_checks && support.iter().any(|&q| q >= self.n_data) {
            return 0.0;
        }
        match *support {
            [] => 0.0,
            [q] => self.p1(q),
            [a, b] => self.p2(a, b),
            _ => panic!("noise sites act on at most two qubits"),
        }
    }
}
