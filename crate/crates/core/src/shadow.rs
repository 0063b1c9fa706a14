//! Classical shadows over the global Clifford group: collection (optionally
//! check-protected), median-of-means estimation, robust-shadow calibration
//! and check-count extrapolation of shadow estimates.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::extrap::{derive_seed, fit, FitKind, FitResult, Series, DEFAULT_B_BOUNDS};
use crate::noise::NoiseModel;
use crate::pauli::PauliString;
use crate::pcs::{build_sandwich, default_rights, max_checks, CheckBasis, SandwichPlan, Scope};
use crate::sim::{z_eigenvalue, Engine, PauliChannel, Simulator};
use crate::statevector::StateVector;
use crate::tableau::{random_clifford_gates, CliffordTableau};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimatorConfig {
    pub n_groups: usize,
    pub shadow_circuits: usize,
    pub shots_per_circuit: usize,
    /// Numbers of shadow circuits `N` at which estimates are reported.
    pub subset_sizes: Vec<usize>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            n_groups: 20,
            shadow_circuits: 10_000,
            shots_per_circuit: 100,
            subset_sizes: vec![100, 400, 1000, 4000, 10_000],
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_groups == 0 || self.shadow_circuits == 0 || self.shots_per_circuit == 0 {
            return Err(Error::arg("estimator counts must be positive"));
        }
        for &n in &self.subset_sizes {
            if n == 0 || n % self.n_groups != 0 || n > self.shadow_circuits {
                return Err(Error::arg(format!(
                    "subset size {n} must be a positive multiple of {} up to {}",
                    self.n_groups, self.shadow_circuits
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protection {
    None,
    CliffordOnly,
    FullCircuit,
}

impl fmt::Display for Protection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protection::None => "none",
            Protection::CliffordOnly => "clifford_only",
            Protection::FullCircuit => "full_circuit",
        })
    }
}

impl FromStr for Protection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Protection::None),
            "clifford_only" => Ok(Protection::CliffordOnly),
            "full_circuit" => Ok(Protection::FullCircuit),
            other => Err(Error::arg(format!("unknown protection '{other}'"))),
        }
    }
}

/// Gate noise plus an optional global depolarizing channel applied once
/// right after the shadow unitary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShadowNoise {
    pub gates: NoiseModel,
    pub global_depolarizing: f64,
}

impl From<NoiseModel> for ShadowNoise {
    fn from(gates: NoiseModel) -> Self {
        ShadowNoise { gates, global_depolarizing: 0.0 }
    }
}

impl ShadowNoise {
    pub fn global(p: f64) -> Self {
        ShadowNoise { gates: NoiseModel::noiseless(), global_depolarizing: p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShadowSample {
    /// Data outcome, bit `j` for qubit `j`.
    pub outcome: u64,
    pub kept: bool,
}

/// One shadow circuit: the sampled unitary and its shots.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowCircuit {
    pub index: usize,
    /// Seed the unitary was drawn from.
    pub seed: u64,
    pub clifford: CliffordTableau,
    pub protected: bool,
    pub layers: usize,
    pub samples: Vec<ShadowSample>,
}

pub const SAMPLE_LOG_HEADER: &str = "circuit_idx,seed,clifford_id,outcome_bits,kept,layers";
pub const ESTIMATES_HEADER: &str = "observable,N,method,estimate,abs_error";

fn bit_string(bits: u64, n: usize) -> String {
    (0..n).map(|q| if bits >> q & 1 == 1 { '1' } else { '0' }).collect()
}

impl ShadowCircuit {
    /// Sample-log rows, one per shot.
    pub fn log_rows(&self) -> impl Iterator<Item = String> + '_ {
        let id = self.clifford.id();
        let n = self.clifford.num_qubits();
        self.samples.iter().map(move |s| {
            format!("{},{},{},{},{},{}", self.index, self.seed, id, bit_string(s.outcome, n), s.kept, self.layers)
        })
    }
}

pub fn estimate_row(observable: &PauliString, n: usize, method: &str, estimate: f64, exact: f64) -> String {
    format!("{observable},{n},{method},{estimate},{}", (estimate - exact).abs())
}

fn unitary_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, 2 * index as u64)
}

fn shot_stream(seed: u64, index: usize) -> u64 {
    derive_seed(seed, 2 * index as u64 + 1)
}

/// The sampled unitary of shadow circuit `index` as gates and tableau.
pub fn shadow_unitary(n: usize, seed: u64, index: usize) -> Result<(Circuit, CliffordTableau)> {
    let mut rng = ChaCha8Rng::seed_from_u64(unitary_seed(seed, index));
    let gates = random_clifford_gates(n, &mut rng)?;
    let tableau = CliffordTableau::from_gates(n, &gates)?;
    let circuit = Circuit::from_gates(n, 0, gates.into_iter().map(Gate::try_from).collect::<Result<Vec<_>>>()?)?;
    Ok((circuit, tableau))
}

fn run_shadow_circuit(
    prep: &Circuit,
    unitary: &Circuit,
    noise: &ShadowNoise,
    protection: Protection,
    layers: usize,
    shots: usize,
    shot_seed: u64,
) -> Result<Vec<ShadowSample>> {
    let n = prep.n_data();
    let (rights, scope) = match protection {
        Protection::None => (Vec::new(), Scope::CliffordOnly),
        Protection::CliffordOnly => (default_rights(n, layers, CheckBasis::ZBasis)?, Scope::CliffordOnly),
        Protection::FullCircuit => (default_rights(n, layers, CheckBasis::ZBasis)?, Scope::FullCircuit),
    };
    let plan = SandwichPlan::new(prep, unitary, &rights, scope)?;
    let circuit = build_sandwich(&plan)?;
    let channels = if noise.global_depolarizing > 0.0 {
        vec![PauliChannel::depolarizing(plan.payload_end_index(), (0..n).collect(), noise.global_depolarizing)]
    } else {
        Vec::new()
    };
    let records = Simulator::with_channels(&circuit, &noise.gates, &channels, Engine::Auto)?.run(shots, shot_seed)?;
    Ok(records.iter().map(|r| ShadowSample { outcome: r.data_bits, kept: r.kept() }).collect())
}

/// Runs `cfg.shadow_circuits` shadow circuits of `shots_per_circuit` shots.
/// Circuit `i` draws its unitary and shot seeds from `(seed, i)` alone, so
/// every protection mode and layer count sees the same unitaries.
pub fn collect_shadows(
    prep: &Circuit,
    noise: &ShadowNoise,
    cfg: &EstimatorConfig,
    protection: Protection,
    layers: usize,
    seed: u64,
) -> Result<Vec<ShadowCircuit>> {
    let n = prep.n_data();
    if prep.n_ancilla() != 0 || prep.has_measurements() {
        return Err(Error::arg("shadow prep must be a unitary data-only circuit"));
    }
    if layers > max_checks(n, CheckBasis::ZBasis) {
        return Err(Error::arg(format!("{layers} layers exceed the {n}-check budget")));
    }
    if protection == Protection::None && layers != 0 {
        return Err(Error::arg("unprotected shadows take no check layers"));
    }
    (0..cfg.shadow_circuits)
        .map(|i| {
            let (unitary, clifford) = shadow_unitary(n, seed, i)?;
            let samples = run_shadow_circuit(prep, &unitary, noise, protection, layers, cfg.shots_per_circuit, shot_stream(seed, i))?;
            Ok(ShadowCircuit {
                index: i,
                seed: unitary_seed(seed, i),
                clifford,
                protected: protection != Protection::None && layers > 0,
                layers,
                samples,
            })
        })
        .collect()
}

/// `<b| U O U^dag |b>` for a Pauli `O`: zero unless the image is diagonal.
pub fn snapshot_overlap(clifford: &CliffordTableau, observable: &PauliString, outcome: u64) -> Result<f64> {
    let image = clifford.conjugate(observable)?;
    if !image.is_diagonal() {
        return Ok(0.0);
    }
    let sign = match image.phase() {
        0 => 1.0,
        2 => -1.0,
        _ => return Err(Error::arg("observable must be Hermitian")),
    };
    Ok(sign * z_eigenvalue(&image.unsigned(), outcome))
}

fn check_observable(observable: &PauliString, n: usize) -> Result<()> {
    if observable.num_qubits() != n {
        return Err(Error::Dimension { expected: n, found: observable.num_qubits() });
    }
    if observable.is_identity() {
        return Err(Error::arg("observable must be traceless"));
    }
    Ok(())
}

/// Kept-shot snapshot values `coeff <b|U O U^dag|b>` of the first
/// `n_circuits` circuits, grouped by circuit.
fn snapshot_groups(circuits: &[ShadowCircuit], observable: &PauliString, n_circuits: usize, coeff: f64) -> Result<Vec<Vec<f64>>> {
    if n_circuits > circuits.len() {
        return Err(Error::arg(format!("{n_circuits} circuits requested, {} collected", circuits.len())));
    }
    circuits[..n_circuits]
        .iter()
        .map(|c| {
            check_observable(observable, c.clifford.num_qubits())?;
            let image = c.clifford.conjugate(observable)?;
            if !image.is_diagonal() {
                return Ok(c.samples.iter().filter(|s| s.kept).map(|_| 0.0).collect());
            }
            let sign = if image.phase() == 2 { -coeff } else { coeff };
            let diag = image.unsigned();
            Ok(c.samples.iter().filter(|s| s.kept).map(|s| sign * z_eigenvalue(&diag, s.outcome)).collect())
        })
        .collect()
}

/// Snapshot estimates `(d + 1) <b|U O U^dag|b>` of every kept shot.
pub fn snapshot_values(circuits: &[ShadowCircuit], observable: &PauliString, n_circuits: usize) -> Result<Vec<f64>> {
    let d = (1u64 << observable.num_qubits()) as f64;
    Ok(snapshot_groups(circuits, observable, n_circuits, d + 1.0)?.concat())
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Median over `n_groups` equal blocks of circuits of the per-block mean.
fn median_of_means(per_circuit: &[Vec<f64>], n_groups: usize) -> Result<f64> {
    if n_groups == 0 || per_circuit.len() < n_groups || !per_circuit.len().is_multiple_of(n_groups) {
        return Err(Error::arg(format!("{} circuits do not split into {n_groups} groups", per_circuit.len())));
    }
    let size = per_circuit.len() / n_groups;
    let mut means = per_circuit
        .chunks(size)
        .enumerate()
        .map(|(g, chunk)| {
            let count: usize = chunk.iter().map(Vec::len).sum();
            if count == 0 {
                return Err(Error::PostSelectionStarved { context: Some(format!("shadow group {g}")) });
            }
            Ok(chunk.iter().flatten().sum::<f64>() / count as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(median(&mut means))
}

/// Median-of-means shadow estimate of `<O>` from the first `n_circuits`
/// circuits, kept shots only.
pub fn estimate_pauli(circuits: &[ShadowCircuit], observable: &PauliString, n_circuits: usize, n_groups: usize) -> Result<f64> {
    let d = (1u64 << observable.num_qubits()) as f64;
    median_of_means(&snapshot_groups(circuits, observable, n_circuits, d + 1.0)?, n_groups)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsCalibration {
    /// Estimated eigenvalue of the twirled shadow channel.
    pub f_hat: f64,
    pub std_error: f64,
    pub rounds: usize,
    pub n_qubits: usize,
    /// Accuracy target used by [`RsCalibration::required_rounds`].
    pub epsilon: f64,
    pub delta: f64,
    pub f_z: f64,
}

impl RsCalibration {
    pub fn required_rounds(&self) -> Result<u64> {
        rs_sample_count(self.epsilon, self.delta, (1u64 << self.n_qubits) as f64, self.f_z)
    }
}

/// Calibration on `|0^n>`: each round samples a noisy unitary, measures
/// once and scores `(d |<b|U|0>|^2 - 1) / (d - 1)` with the ideal amplitude.
/// Round `r` uses the same stream as shadow circuit `r`.
pub fn rs_calibrate(noise: &ShadowNoise, n: usize, rounds: usize, n_groups: usize, seed: u64) -> Result<RsCalibration> {
    if n_groups == 0 || rounds < n_groups {
        return Err(Error::arg(format!("{rounds} rounds for {n_groups} groups")));
    }
    let d = (1u64 << n) as f64;
    let empty = Circuit::new(n, 0);
    let scores = (0..rounds)
        .map(|r| {
            let (unitary, clifford) = shadow_unitary(n, seed, r)?;
            let sample = run_shadow_circuit(&empty, &unitary, noise, Protection::None, 0, 1, shot_stream(seed, r))?[0];
            Ok((d * clifford.basis_probability(sample.outcome) - 1.0) / (d - 1.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    let base = rounds / n_groups;
    let extra = rounds % n_groups;
    let mut means = Vec::with_capacity(n_groups);
    let mut start = 0;
    for g in 0..n_groups {
        let len = base + usize::from(g < extra);
        means.push(scores[start..start + len].iter().sum::<f64>() / len as f64);
        start += len;
    }
    let mean = scores.iter().sum::<f64>() / rounds as f64;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (rounds.max(2) - 1) as f64;
    Ok(RsCalibration {
        f_hat: median(&mut means),
        std_error: (std::f64::consts::FRAC_PI_2 * var / rounds as f64).sqrt(),
        rounds,
        n_qubits: n,
        epsilon: 0.1,
        delta: 0.05,
        f_z: 1.0,
    })
}

/// Robust-shadow estimate: snapshot coefficient `1 / f_hat` instead of `d + 1`.
pub fn rs_estimate(circuits: &[ShadowCircuit], observable: &PauliString, cal: &RsCalibration, n_circuits: usize, n_groups: usize) -> Result<f64> {
    if !(cal.f_hat > 0.0) {
        return Err(Error::DegenerateCalibration(cal.f_hat));
    }
    median_of_means(&snapshot_groups(circuits, observable, n_circuits, 1.0 / cal.f_hat)?, n_groups)
}

/// `ceil(136 ln(2/delta) (1 + eps^2) (1 + 1/d)^2 / (eps^2 (f_z - 1/d)^2))`.
pub fn rs_sample_count(epsilon: f64, delta: f64, d: f64, f_z: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::arg(format!("epsilon {epsilon} and delta {delta} must lie in (0, 1)")));
    }
    if !(d >= 2.0) || !(f_z > 1.0 / d) {
        return Err(Error::arg(format!("need d >= 2 and f_z > 1/d, got d={d}, f_z={f_z}")));
    }
    let r = 136.0 * (2.0 / delta).ln() * (1.0 + epsilon * epsilon) * (1.0 + 1.0 / d).powi(2)
        / (epsilon * epsilon * (f_z - 1.0 / d).powi(2));
    Ok(r.ceil() as u64)
}

/// Shadows with 1..=`checks_used` layers; entry `m - 1` holds `m` layers.
pub fn collect_layer_series(
    prep: &Circuit,
    noise: &ShadowNoise,
    cfg: &EstimatorConfig,
    protection: Protection,
    checks_used: usize,
    seed: u64,
) -> Result<Vec<Vec<ShadowCircuit>>> {
    if protection == Protection::None {
        return Err(Error::arg("check extrapolation needs a protected scope"));
    }
    (1..=checks_used).map(|m| collect_shadows(prep, noise, cfg, protection, m, seed)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PceShadowEstimate {
    pub observable: PauliString,
    /// Shadow estimates with 1, 2, ... layers.
    pub per_layer: Vec<f64>,
    pub fit: FitResult,
}

/// Fits per-layer shadow estimates and extrapolates to `max_checks(n)`.
pub fn pce_extrapolate(
    series: &[Vec<ShadowCircuit>],
    observable: &PauliString,
    n_circuits: usize,
    n_groups: usize,
    model: FitKind,
) -> Result<PceShadowEstimate> {
    let per_layer = series
        .iter()
        .enumerate()
        .map(|(j, circuits)| {
            estimate_pauli(circuits, observable, n_circuits, n_groups).map_err(|e| match e {
                Error::PostSelectionStarved { context } => Error::PostSelectionStarved {
                    context: Some(format!("{} check layers, {}", j + 1, context.unwrap_or_default())),
                },
                e => e,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = (1..=per_layer.len()).map(|m| m as f64).collect();
    let target = max_checks(observable.num_qubits(), CheckBasis::ZBasis) as f64;
    if model == FitKind::Richardson {
        return Err(Error::arg("check extrapolation supports linear and exponential models"));
    }
    let fit = fit(&Series::from_xy(&xs, &per_layer)?, model, target, DEFAULT_B_BOUNDS)?;
    Ok(PceShadowEstimate { observable: *observable, per_layer, fit })
}

/// Collects 1..=`checks_used` layers and extrapolates every observable at
/// `N = cfg.shadow_circuits`.
#[allow(clippy::too_many_arguments)]
pub fn pce_shadow_estimate(
    prep: &Circuit,
    noise: &ShadowNoise,
    cfg: &EstimatorConfig,
    protection: Protection,
    checks_used: usize,
    model: FitKind,
    observables: &[PauliString],
    seed: u64,
) -> Result<Vec<PceShadowEstimate>> {
    let series = collect_layer_series(prep, noise, cfg, protection, checks_used, seed)?;
    observables
        .iter()
        .map(|o| pce_extrapolate(&series, o, cfg.shadow_circuits, cfg.n_groups, model))
        .collect()
}

/// Every single-Z and double-Z string on `n` qubits.
pub fn default_observables(n: usize) -> Vec<PauliString> {
    let mut out: Vec<PauliString> = (0..n).map(|q| PauliString::z_on(n, [q])).collect();
    for a in 0..n {
        for b in a + 1..n {
            out.push(PauliString::z_on(n, [a, b]));
        }
    }
    out
}

/// Exact `<O>` of `prep |0^n>`.
pub fn ideal_expectations(prep: &Circuit, observables: &[PauliString]) -> Result<Vec<f64>> {
    if prep.has_measurements() {
        return Err(Error::arg("prep must be unitary"));
    }
    let mut sv = StateVector::zero(prep.num_qubits())?;
    for op in prep.lower() {
        sv.apply_unitary(&op.prim);
    }
    observables.iter().map(|o| sv.expectation(o)).collect()
}

/// Non-Clifford prep whose first `n - 1` single-qubit Z checks survive the
/// full-circuit scope: X on qubits 0 and 1, `RY(theta)` on the last qubit and
/// a CX ladder down to qubit 0, followed by the entangler
/// `exp(-i phi Z..Z / 2)` compiled as ladder, `RZ(phi)` on qubit 0, unladder.
pub fn checkable_prep(n: usize, theta: f64, phi: f64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::arg("checkable prep needs at least 2 qubits"));
    }
    let mut c = Circuit::new(n, 0);
    c.push(Gate::X(0))?;
    c.push(Gate::X(1))?;
    c.push(Gate::Ry(n - 1, theta))?;
    for _ in 0..2 {
        for q in (1..n).rev() {
            c.push(Gate::Cx(q, q - 1))?;
        }
    }
    c.push(Gate::Rz(0, phi))?;
    for q in 1..n {
        c.push(Gate::Cx(q, q - 1))?;
    }
    c.meta.label = Some(format!("checkable_prep(theta={theta}, phi={phi})"));
    Ok(c)
}

/// Layered RY/RZ rotations with CX chains; angles uniform in `[-pi, pi)`.
pub fn layered_prep(n: usize, layers: usize, seed: u64) -> Result<Circuit> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n, 0);
    let pi = std::f64::consts::PI;
    for _ in 0..layers {
        for q in 0..n {
            c.push(Gate::Ry(q, rng.random_range(-pi..pi)))?;
            c.push(Gate::Rz(q, rng.random_range(-pi..pi)))?;
        }
        for q in 0..n.saturating_sub(1) {
            c.push(Gate::Cx(q, q + 1))?;
        }
    }
    c.meta.label = Some("layered_prep".into());
    c.meta.seed = Some(seed);
    c.meta.depth = Some(layers);
    Ok(c)
}
