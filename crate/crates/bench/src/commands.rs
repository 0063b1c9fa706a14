//! Experiment drivers. Each returns an in-memory report whose CSV files are
//! a pure function of the manifest.

use std::fs;
use std::path::Path;

use pce_core::circuit::random_clifford_circuit;
use pce_core::extrap::{derive_seed, pce_series, zne_series, FIT_CSV_HEADER};
use pce_core::pcs::default_rights;
use pce_core::shadow::{
    checkable_prep, collect_layer_series, collect_shadows, default_observables, estimate_pauli, estimate_row,
    ideal_expectations, layered_prep, pce_extrapolate, rs_calibrate, rs_estimate, ShadowCircuit, ESTIMATES_HEADER,
    SAMPLE_LOG_HEADER,
};
use pce_core::sim::Engine;
use pce_core::{
    expectation_z_basis, fit, markov_logical_error, run_shots, build_sandwich, CheckBasis, Circuit, EstimatorConfig,
    ExpectationEstimate, FitKind, FitResult, MarkovModel, PauliChannel, PauliString, Protection, RsCalibration,
    SandwichPlan, Scope, Series, ShadowNoise, Simulator,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{BenchError, Result};
use crate::manifest::{default_checks, Experiment, Manifest, PrepSpec};

pub const HEATMAP_HEADER: &str = "n,depth,pce_err,best_zne_err,best_zne_label,diff";
pub const HEATMAP_DETAIL_HEADER: &str = "n,depth,circuit_idx,attempt,seed,method,estimate,abs_error";
pub const MARKOV_HEADER: &str = "m,epsilon,kept,logical_errors,empirical,predicted,std_error";
pub const SHADOW_SUMMARY_HEADER: &str = "N,method,mean_abs_error";
pub const POINTS_HEADER: &str = "layers,estimate,std_error,kept_shots,total_shots";
pub const ZNE_POINTS_HEADER: &str = "scales,scale,estimate,std_error";
pub const CIRCUIT_INDEX_HEADER: &str = "n,depth,seed,file,ideal_zn";

/// Named output files, in emission order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Output {
    pub files: Vec<(String, String)>,
}

impl Output {
    fn push(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

fn all_z(n: usize) -> PauliString {
    PauliString::z_on(n, 0..n)
}

fn scales_label(scales: &[f64]) -> String {
    scales.iter().map(f64::to_string).collect::<Vec<_>>().join("-")
}

/// Runs the manifest's experiment and renders its files, including the
/// effective manifest.
pub fn run(m: &Manifest) -> Result<Output> {
    m.validate()?;
    let mut out = match m.experiment {
        Experiment::Heatmap => heatmap(m)?.output(),
        Experiment::MarkovCheck => markov_output(&markov_check(m)?),
        Experiment::ShadowCompare => shadow_compare(m)?.output(),
        Experiment::Pce => pce(m)?.output(),
        Experiment::Zne => zne(m)?.output(),
        Experiment::GenCircuit => gen_circuit(m)?,
    };
    out.push("manifest.json", m.to_json()? + "\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitRun {
    /// Sampling attempt that produced the circuit.
    pub attempt: u64,
    pub seed: u64,
    pub unmitigated: f64,
    pub pce: f64,
    /// Estimates in the order of [`HeatmapCell::zne_labels`].
    pub zne: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapCell {
    pub n: usize,
    pub depth: usize,
    pub checks: usize,
    pub zne_labels: Vec<String>,
    pub circuits: Vec<CircuitRun>,
}

fn mean_abs_error(values: impl Iterator<Item = f64>, exact: f64) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + (v - exact).abs(), c + 1));
    sum / count as f64
}

impl HeatmapCell {
    pub fn pce_err(&self) -> f64 {
        mean_abs_error(self.circuits.iter().map(|c| c.pce), 1.0)
    }

    pub fn unmitigated_err(&self) -> f64 {
        mean_abs_error(self.circuits.iter().map(|c| c.unmitigated), 1.0)
    }

    pub fn zne_errs(&self) -> Vec<f64> {
        (0..self.zne_labels.len()).map(|j| mean_abs_error(self.circuits.iter().map(|c| c.zne[j]), 1.0)).collect()
    }

    /// Minimum mean error over ZNE variants; the first wins ties.
    pub fn best_zne(&self) -> (String, f64) {
        let errs = self.zne_errs();
        let mut best = 0;
        for (j, &e) in errs.iter().enumerate() {
            if e < errs[best] {
                best = j;
            }
        }
        (self.zne_labels[best].clone(), errs[best])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapReport {
    pub cells: Vec<HeatmapCell>,
}

impl HeatmapReport {
    pub fn output(&self) -> Output {
        let mut out = Output::default();
        out.push(
            "heatmap.csv",
            csv(
                HEATMAP_HEADER,
                self.cells.iter().map(|c| {
                    let (label, best) = c.best_zne();
                    let pce = c.pce_err();
                    format!("{},{},{pce},{best},{label},{}", c.n, c.depth, best - pce)
                }),
            ),
        );
        let mut rows = Vec::new();
        for cell in &self.cells {
            for (i, run) in cell.circuits.iter().enumerate() {
                let prefix = format!("{},{},{i},{},{}", cell.n, cell.depth, run.attempt, run.seed);
                rows.push(format!("{prefix},unmitigated,{},{}", run.unmitigated, (run.unmitigated - 1.0).abs()));
                rows.push(format!("{prefix},pce,{},{}", run.pce, (run.pce - 1.0).abs()));
                for (label, v) in cell.zne_labels.iter().zip(&run.zne) {
                    rows.push(format!("{prefix},zne_{label},{v},{}", (v - 1.0).abs()));
                }
            }
        }
        out.push("heatmap_detail.csv", csv(HEATMAP_DETAIL_HEADER, rows));
        out
    }
}

/// Seed of the `attempt`-th circuit draw of cell `(n, depth)`.
pub fn cell_circuit_seed(seed: u64, n: usize, depth: usize, attempt: u64) -> u64 {
    derive_seed(derive_seed(derive_seed(seed, n as u64), depth as u64), attempt)
}

/// First `count` random Clifford circuits of the cell with ideal
/// `<Z...Z> = +1`, with their attempt indices.
pub fn plus_one_circuits(seed: u64, n: usize, depth: usize, count: usize) -> Result<Vec<(u64, u64, Circuit)>> {
    let cap = 1000 * count as u64;
    let mut out = Vec::with_capacity(count);
    for attempt in 0..cap {
        let s = cell_circuit_seed(seed, n, depth, attempt);
        let mut c = random_clifford_circuit(n, depth, &mut ChaCha8Rng::seed_from_u64(s))?;
        if c.ideal_expectation(&all_z(n))? == 1.0 {
            c.meta.seed = Some(s);
            out.push((attempt, s, c));
            if out.len() == count {
                return Ok(out);
            }
        }
    }
    Err(BenchError::Cell { n, depth, msg: format!("found {} of {count} +1 circuits in {cap} attempts", out.len()) })
}

pub fn heatmap(m: &Manifest) -> Result<HeatmapReport> {
    let noise = m.noise_model()?;
    let mut zne_labels = Vec::new();
    for scales in &m.scale_sets {
        for model in &m.models {
            zne_labels.push(format!("{model}_{}", scales_label(scales)));
        }
    }
    let mut cells = Vec::new();
    for &n in &m.qubits {
        for &depth in &m.depths {
            let checks = m.checks.unwrap_or_else(|| default_checks(n));
            let cell_err = |e: pce_core::Error| BenchError::Cell { n, depth, msg: e.to_string() };
            let mut circuits = Vec::new();
            for (attempt, s, c) in plus_one_circuits(m.seed, n, depth, m.circuits_per_cell)? {
                let obs = all_z(n);
                let raw = expectation_z_basis(&run_shots(&c, &noise, m.shots, derive_seed(s, 1))?, &obs, false)?.value;
                let points = pce_series(&c, &noise, checks, m.shots, derive_seed(s, 2)).map_err(cell_err)?;
                let xs: Vec<f64> = (1..=checks).map(|k| k as f64).collect();
                let pce = fit(&Series::from_estimates(&xs, &points)?, m.pce_model, n as f64, pce_core::extrap::DEFAULT_B_BOUNDS)?.extrapolated;
                let mut zne = Vec::new();
                for (j, scales) in m.scale_sets.iter().enumerate() {
                    let est = zne_series(&c, &noise, scales, m.shots, derive_seed(s, 10 + j as u64))?;
                    let series = Series::from_estimates(scales, &est)?;
                    for &model in &m.models {
                        zne.push(fit(&series, model, 0.0, pce_core::extrap::DEFAULT_B_BOUNDS)?.extrapolated);
                    }
                }
                circuits.push(CircuitRun { attempt, seed: s, unmitigated: raw, pce, zne });
            }
            cells.push(HeatmapCell { n, depth, checks, zne_labels: zne_labels.clone(), circuits });
        }
    }
    Ok(HeatmapReport { cells })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovRow {
    pub m: usize,
    pub epsilon: f64,
    pub kept: usize,
    pub logical_errors: usize,
    pub empirical: f64,
    pub predicted: f64,
    pub std_error: f64,
}

/// Noiseless random Clifford payload, one Pauli error of probability
/// `epsilon` on the whole data register right after it, and `m` single-qubit
/// Z checks. A kept shot carrying the error is a logical error.
pub fn markov_check(m: &Manifest) -> Result<Vec<MarkovRow>> {
    let n = m.qubits[0];
    let depth = m.depths[0];
    if m.max_layers > n {
        return Err(BenchError::Manifest(format!("max_layers {} exceeds {n} qubits", m.max_layers)));
    }
    let noise = m.noise_model()?;
    let payload = random_clifford_circuit(n, depth, &mut ChaCha8Rng::seed_from_u64(derive_seed(m.seed, 0)))?;
    let empty = Circuit::new(n, 0);
    let mut rows = Vec::new();
    for (i, &epsilon) in m.epsilons.iter().enumerate() {
        for layers in 0..=m.max_layers {
            let rights = default_rights(n, layers, CheckBasis::ZBasis)?;
            let plan = SandwichPlan::new(&empty, &payload, &rights, Scope::FullCircuit)?;
            let circuit = build_sandwich(&plan)?;
            let channel = PauliChannel::pauli_error(plan.payload_end_index(), (0..n).collect(), epsilon);
            let stream = 1 + 1000 * i as u64 + layers as u64;
            let records = Simulator::with_channels(&circuit, &noise, &[channel], Engine::Auto)?.run(m.shots, derive_seed(m.seed, stream))?;
            let kept = records.iter().filter(|r| r.kept()).count();
            if kept == 0 {
                return Err(pce_core::Error::PostSelectionStarved { context: Some(format!("{layers} check layers")) }.into());
            }
            let logical_errors = records.iter().filter(|r| r.kept() && r.faults > 0).count();
            let empirical = logical_errors as f64 / kept as f64;
            rows.push(MarkovRow {
                m: layers,
                epsilon,
                kept,
                logical_errors,
                empirical,
                predicted: markov_logical_error(&MarkovModel::perfect(epsilon), layers)?,
                std_error: (empirical * (1.0 - empirical) / kept as f64).sqrt(),
            });
        }
    }
    Ok(rows)
}

pub fn markov_output(rows: &[MarkovRow]) -> Output {
    let mut out = Output::default();
    out.push(
        "markov.csv",
        csv(
            MARKOV_HEADER,
            rows.iter().map(|r| {
                format!("{},{},{},{},{},{},{}", r.m, r.epsilon, r.kept, r.logical_errors, r.empirical, r.predicted, r.std_error)
            }),
        ),
    );
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowRow {
    pub observable: PauliString,
    pub n_circuits: usize,
    pub method: String,
    pub estimate: f64,
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowReport {
    pub rows: Vec<ShadowRow>,
    pub methods: Vec<String>,
    pub subset_sizes: Vec<usize>,
    pub calibration: RsCalibration,
    pub logs: Vec<(String, String)>,
}

impl ShadowReport {
    /// Mean absolute error over observables of `method` at `N` circuits.
    pub fn mean_error(&self, method: &str, n_circuits: usize) -> Option<f64> {
        let errs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.n_circuits == n_circuits)
            .map(|r| (r.estimate - r.exact).abs())
            .collect();
        (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
    }

    pub fn output(&self) -> Output {
        let mut out = Output::default();
        out.push(
            "shadow_estimates.csv",
            csv(
                ESTIMATES_HEADER,
                self.rows.iter().map(|r| estimate_row(&r.observable, r.n_circuits, &r.method, r.estimate, r.exact)),
            ),
        );
        let mut summary = Vec::new();
        for &n in &self.subset_sizes {
            for method in &self.methods {
                if let Some(e) = self.mean_error(method, n) {
                    summary.push(format!("{n},{method},{e}"));
                }
            }
        }
        out.push("shadow_summary.csv", csv(SHADOW_SUMMARY_HEADER, summary));
        let c = &self.calibration;
        out.push(
            "rs_calibration.csv",
            csv("f_hat,std_error,rounds", [format!("{},{},{}", c.f_hat, c.std_error, c.rounds)]),
        );
        for (name, contents) in &self.logs {
            out.push(name, contents.clone());
        }
        out
    }
}

pub fn build_prep(spec: &PrepSpec, n: usize) -> Result<Circuit> {
    Ok(match *spec {
        PrepSpec::Checkable { theta, phi } => checkable_prep(n, theta, phi)?,
        PrepSpec::Layered { layers, seed } => layered_prep(n, layers, seed)?,
    })
}

fn sample_log(circuits: &[&[ShadowCircuit]]) -> String {
    csv(SAMPLE_LOG_HEADER, circuits.iter().flat_map(|cs| cs.iter().flat_map(|c| c.log_rows())))
}

/// Unmitigated, robust-shadow, implemented-check and extrapolated-check
/// shadow estimates over the manifest's N schedule.
pub fn shadow_compare(m: &Manifest) -> Result<ShadowReport> {
    let s = &m.shadow;
    let n = m.qubits[0];
    let cfg = EstimatorConfig {
        n_groups: s.n_groups,
        shadow_circuits: s.shadow_circuits,
        shots_per_circuit: s.shots_per_circuit,
        subset_sizes: s.subset_sizes.clone(),
    };
    cfg.validate()?;
    let prep = build_prep(&s.prep, n)?;
    let observables = if s.observables.is_empty() { default_observables(n) } else { s.observables.clone() };
    let exact = ideal_expectations(&prep, &observables)?;
    let noise = ShadowNoise { gates: m.noise_model()?, global_depolarizing: s.global_depolarizing };
    let checks_used = s.checks_used.unwrap_or_else(|| default_checks(n));
    let implemented = s.implemented_layers.unwrap_or(if n <= 4 { n } else { checks_used });

    let plain = collect_shadows(&prep, &noise, &cfg, Protection::None, 0, m.seed)?;
    let calibration = rs_calibrate(&noise, n, s.calibration_rounds, s.n_groups, derive_seed(m.seed, 1))?;
    let mut methods = vec!["unmitigated".to_string(), "robust".to_string()];
    let mut layered = Vec::new();
    for &protection in &s.protections {
        if protection == Protection::None {
            continue;
        }
        let layers = match protection {
            Protection::CliffordOnly => checks_used.max(implemented),
            _ => checks_used,
        };
        let series = collect_layer_series(&prep, &noise, &cfg, protection, layers, m.seed)?;
        for k in 1..=layers {
            methods.push(format!("{protection}_{k}"));
        }
        methods.push(format!("{protection}_extrap"));
        layered.push((protection, series));
    }

    let mut rows = Vec::new();
    for &size in &cfg.subset_sizes {
        for (obs, &want) in observables.iter().zip(&exact) {
            let mut push = |method: String, estimate: f64| {
                rows.push(ShadowRow { observable: *obs, n_circuits: size, method, estimate, exact: want })
            };
            push("unmitigated".into(), estimate_pauli(&plain, obs, size, cfg.n_groups)?);
            push("robust".into(), rs_estimate(&plain, obs, &calibration, size, cfg.n_groups)?);
            for (protection, series) in &layered {
                for (k, circuits) in series.iter().enumerate() {
                    push(format!("{protection}_{}", k + 1), estimate_pauli(circuits, obs, size, cfg.n_groups)?);
                }
                let extrap = pce_extrapolate(&series[..checks_used], obs, size, cfg.n_groups, s.model)?;
                push(format!("{protection}_extrap"), extrap.fit.extrapolated);
            }
        }
    }

    let mut logs = Vec::new();
    if s.sample_log {
        logs.push(("shadow_samples_none.csv".to_string(), sample_log(&[&plain])));
        for (protection, series) in &layered {
            let parts: Vec<&[ShadowCircuit]> = series.iter().map(Vec::as_slice).collect();
            logs.push((format!("shadow_samples_{protection}.csv"), sample_log(&parts)));
        }
    }
    Ok(ShadowReport { rows, methods, subset_sizes: cfg.subset_sizes, calibration, logs })
}

/// The pce/zne payload: the manifest's circuit file, or a seeded random
/// Clifford circuit (mirrored on request).
pub fn load_payload(m: &Manifest) -> Result<Circuit> {
    let c = match &m.circuit_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
            text.parse::<Circuit>()?
        }
        None => {
            let seed = derive_seed(m.seed, 0);
            let mut c = random_clifford_circuit(m.qubits[0], m.depths[0], &mut ChaCha8Rng::seed_from_u64(seed))?;
            c.meta.seed = Some(seed);
            c
        }
    };
    Ok(if m.mirror { c.mirror()? } else { c })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PceReport {
    pub points: Vec<ExpectationEstimate>,
    pub fits: Vec<FitResult>,
}

impl PceReport {
    pub fn output(&self) -> Output {
        let mut out = Output::default();
        out.push("pce.csv", csv(FIT_CSV_HEADER, self.fits.iter().map(FitResult::csv_row)));
        out.push(
            "pce_points.csv",
            csv(
                POINTS_HEADER,
                self.points.iter().enumerate().map(|(k, e)| {
                    format!("{},{},{},{},{}", k + 1, e.value, e.std_error, e.kept_shots, e.total_shots)
                }),
            ),
        );
        out
    }
}

pub fn pce(m: &Manifest) -> Result<PceReport> {
    let payload = load_payload(m)?;
    let n = payload.n_data();
    let checks = m.checks.unwrap_or_else(|| default_checks(n));
    let points = pce_series(&payload, &m.noise_model()?, checks, m.shots, derive_seed(m.seed, 1))?;
    let xs: Vec<f64> = (1..=checks).map(|k| k as f64).collect();
    let series = Series::from_estimates(&xs, &points)?;
    let fits = m
        .models
        .iter()
        .filter(|&&k| k != FitKind::Richardson)
        .map(|&k| fit(&series, k, n as f64, pce_core::extrap::DEFAULT_B_BOUNDS))
        .collect::<pce_core::Result<Vec<_>>>()?;
    Ok(PceReport { points, fits })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZneReport {
    /// Per scale set: scales, estimates and one fit per model.
    pub sets: Vec<(Vec<f64>, Vec<ExpectationEstimate>, Vec<FitResult>)>,
}

impl ZneReport {
    pub fn output(&self) -> Output {
        let mut out = Output::default();
        let mut fits = Vec::new();
        let mut points = Vec::new();
        for (scales, estimates, results) in &self.sets {
            let label = scales_label(scales);
            fits.extend(results.iter().map(|f| format!("{label},{}", f.csv_row())));
            for (s, e) in scales.iter().zip(estimates) {
                points.push(format!("{label},{s},{},{}", e.value, e.std_error));
            }
        }
        out.push("zne.csv", csv(&format!("scales,{FIT_CSV_HEADER}"), fits));
        out.push("zne_points.csv", csv(ZNE_POINTS_HEADER, points));
        out
    }
}

pub fn zne(m: &Manifest) -> Result<ZneReport> {
    let payload = load_payload(m)?;
    let noise = m.noise_model()?;
    let mut sets = Vec::new();
    for (j, scales) in m.scale_sets.iter().enumerate() {
        let estimates = zne_series(&payload, &noise, scales, m.shots, derive_seed(m.seed, 10 + j as u64))?;
        let series = Series::from_estimates(scales, &estimates)?;
        let fits = m
            .models
            .iter()
            .map(|&k| fit(&series, k, 0.0, pce_core::extrap::DEFAULT_B_BOUNDS))
            .collect::<pce_core::Result<Vec<_>>>()?;
        sets.push((scales.clone(), estimates, fits));
    }
    Ok(ZneReport { sets })
}

/// Writes one seeded random Clifford circuit per (qubits, depth) pair.
pub fn gen_circuit(m: &Manifest) -> Result<Output> {
    let mut out = Output::default();
    let mut index = Vec::new();
    for &n in &m.qubits {
        for &depth in &m.depths {
            let seed = cell_circuit_seed(m.seed, n, depth, 0);
            let mut c = random_clifford_circuit(n, depth, &mut ChaCha8Rng::seed_from_u64(seed))?;
            c.meta.seed = Some(seed);
            if m.mirror {
                c = c.mirror()?;
            }
            let name = format!("circuit_n{n}_d{depth}.txt");
            index.push(format!("{n},{depth},{seed},{name},{}", c.ideal_expectation(&all_z(n))?));
            out.push(&name, c.to_text());
        }
    }
    out.push("circuits.csv", csv(CIRCUIT_INDEX_HEADER, index));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: Experiment) -> Manifest {
        let mut m = Manifest::for_experiment(kind);
        m.shots = 2000;
        m
    }

    #[test]
    fn plus_one_circuits_are_deterministic_and_valid() {
        let a = plus_one_circuits(3, 4, 10, 3).unwrap();
        let b = plus_one_circuits(3, 4, 10, 3).unwrap();
        assert_eq!(a, b);
        for (_, _, c) in &a {
            assert_eq!(c.ideal_expectation(&all_z(4)).unwrap(), 1.0);
        }
        assert!(a.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn tiny_heatmap_renders() {
        let mut m = small(Experiment::Heatmap);
        m.qubits = vec![4];
        m.depths = vec![5];
        m.circuits_per_cell = 2;
        m.scale_sets = vec![vec![1.0, 3.0, 5.0], vec![1.0, 1.2, 1.6]];
        let out = run(&m).unwrap();
        let heat = out.get("heatmap.csv").unwrap();
        assert!(heat.starts_with(HEATMAP_HEADER));
        assert_eq!(heat.lines().count(), 2);
        let detail = out.get("heatmap_detail.csv").unwrap();
        assert_eq!(detail.lines().count(), 1 + 2 * (2 + 6));
        assert_eq!(out, run(&m).unwrap());
    }

    #[test]
    fn markov_rows_cover_every_layer_count() {
        let mut m = small(Experiment::MarkovCheck);
        m.qubits = vec![4];
        m.max_layers = 2;
        let rows = markov_check(&m).unwrap();
        assert_eq!(rows.len(), 2 * 3);
        for r in rows.iter().filter(|r| r.epsilon == 0.0) {
            assert_eq!(r.logical_errors, 0);
            assert_eq!(r.kept, 2000);
        }
        m.max_layers = 5;
        assert!(markov_check(&m).is_err());
    }

    #[test]
    fn tiny_shadow_compare_has_all_methods() {
        let mut m = small(Experiment::ShadowCompare);
        m.shadow.shadow_circuits = 40;
        m.shadow.shots_per_circuit = 5;
        m.shadow.subset_sizes = vec![20, 40];
        m.shadow.calibration_rounds = 200;
        m.shadow.sample_log = true;
        let report = shadow_compare(&m).unwrap();
        let want = [
            "unmitigated", "robust", "clifford_only_1", "clifford_only_2", "clifford_only_3", "clifford_only_4",
            "clifford_only_extrap", "full_circuit_1", "full_circuit_2", "full_circuit_3", "full_circuit_extrap",
        ];
        assert_eq!(report.methods, want);
        assert_eq!(report.rows.len(), 2 * 10 * want.len());
        let out = report.output();
        assert_eq!(out.get("shadow_samples_none.csv").unwrap().lines().count(), 1 + 40 * 5);
        assert_eq!(out.get("shadow_samples_full_circuit.csv").unwrap().lines().count(), 1 + 3 * 40 * 5);
        assert!(report.mean_error("robust", 40).is_some());
        assert!(report.mean_error("robust", 41).is_none());
    }

    #[test]
    fn pce_and_zne_commands() {
        let mut m = small(Experiment::Pce);
        m.qubits = vec![4];
        m.depths = vec![5];
        let p = pce(&m).unwrap();
        assert_eq!(p.points.len(), 3);
        assert_eq!(p.fits.len(), 2);
        let mut z = small(Experiment::Zne);
        z.qubits = vec![4];
        z.depths = vec![5];
        z.mirror = true;
        let r = zne(&z).unwrap();
        let csv = r.output();
        assert!(csv.get("zne.csv").unwrap().starts_with("scales,kind,"));
        assert_eq!(csv.get("zne.csv").unwrap().lines().count(), 1 + 3);
    }

    #[test]
    fn gen_circuit_round_trips_text() {
        let m = small(Experiment::GenCircuit);
        let out = gen_circuit(&m).unwrap();
        let text = out.get("circuit_n4_d10.txt").unwrap();
        let c: Circuit = text.parse().unwrap();
        assert_eq!(c.to_text(), text);
        assert!(out.get("circuits.csv").unwrap().starts_with(CIRCUIT_INDEX_HEADER));
    }
}
