//! Model fitting and extrapolation for check-count (PCE) and noise-scale
//! (ZNE) series.
//!
//! Fits are unweighted least squares; the standard errors carried by a
//! [`Series`] are reported but never used. The exponential model
//! `a b^x + c` is fitted by scanning `b` over a grid and solving the linear
//! problem in `(a, c)` exactly at each grid point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::pauli::PauliString;
use crate::pcs::{build_sandwich, default_rights, max_checks, CheckBasis, SandwichPlan, Scope};
use crate::sim::{expectation_z_basis, splitmix64, ExpectationEstimate, Simulator};

pub const DEFAULT_B_BOUNDS: (f64, f64) = (0.6, 1.2);
pub const B_GRID_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    points: Vec<Point>,
}

impl Series {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::arg("series needs at least one point"));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.value.is_finite()) {
            return Err(Error::arg("series contains non-finite values"));
        }
        if points.windows(2).any(|w| w[1].x <= w[0].x) {
            return Err(Error::arg("series abscissas must be strictly increasing"));
        }
        Ok(Series { points })
    }

    /// Points with zero standard error.
    pub fn from_xy(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::arg("abscissa and value counts differ"));
        }
        Series::new(xs.iter().zip(ys).map(|(&x, &value)| Point { x, value, std_error: 0.0 }).collect())
    }

    pub fn from_estimates(xs: &[f64], estimates: &[ExpectationEstimate]) -> Result<Self> {
        if xs.len() != estimates.len() {
            return Err(Error::arg("abscissa and estimate counts differ"));
        }
        Series::new(
            xs.iter()
                .zip(estimates)
                .map(|(&x, e)| Point { x, value: e.value, std_error: e.std_error })
                .collect(),
        )
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.x)
    }

    fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitKind {
    Linear,
    Exponential,
    Richardson,
}

impl fmt::Display for FitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitKind::Linear => "linear",
            FitKind::Exponential => "exponential",
            FitKind::Richardson => "richardson",
        })
    }
}

impl FromStr for FitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(FitKind::Linear),
            "exponential" => Ok(FitKind::Exponential),
            "richardson" => Ok(FitKind::Richardson),
            other => Err(Error::arg(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub kind: FitKind,
    /// `(alpha, beta)`, `(a, b, c)` or the Richardson weights.
    pub params: Vec<f64>,
    pub residual_ss: f64,
    pub target: f64,
    pub extrapolated: f64,
}

pub const FIT_CSV_HEADER: &str = "kind,a|alpha,b|beta,c,residual_ss,target,extrapolated";

impl FitResult {
    /// Model value at `x`; Richardson has no curve and yields `None`.
    pub fn evaluate(&self, x: f64) -> Option<f64> {
        match self.kind {
            FitKind::Linear => Some(self.params[0] + self.params[1] * x),
            FitKind::Exponential => Some(self.params[0] * self.params[1].powf(x) + self.params[2]),
            FitKind::Richardson => None,
        }
    }

    /// One row under [`FIT_CSV_HEADER`]. Richardson weights are joined with
    /// `;` in the first parameter column.
    pub fn csv_row(&self) -> String {
        let cols = match self.kind {
            FitKind::Linear => [self.params[0].to_string(), self.params[1].to_string(), String::new()],
            FitKind::Exponential => [self.params[0].to_string(), self.params[1].to_string(), self.params[2].to_string()],
            FitKind::Richardson => [
                self.params.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
                String::new(),
                String::new(),
            ],
        };
        format!("{},{},{},{},{},{},{}", self.kind, cols[0], cols[1], cols[2], self.residual_ss, self.target, self.extrapolated)
    }
}

/// Least-squares line through `(x, y)`: returns `(intercept, slope, rss)`.
/// A degenerate abscissa set gives slope 0.
fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 1e-300 * (1.0 + mx * mx) && sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    (intercept, slope, rss)
}

pub fn fit_linear(s: &Series, target: f64) -> Result<FitResult> {
    if s.len() < 2 {
        return Err(Error::arg("linear fit needs at least 2 points"));
    }
    let xs: Vec<f64> = s.xs().collect();
    let ys: Vec<f64> = s.ys().collect();
    let (alpha, beta, rss) = ols(&xs, &ys);
    Ok(FitResult {
        kind: FitKind::Linear,
        params: vec![alpha, beta],
        residual_ss: rss,
        target,
        extrapolated: alpha + beta * target,
    })
}

/// Grid points `lo, lo + step, ...` up to `hi`, with `hi` always included.
fn b_grid(bounds: (f64, f64), step: f64) -> Result<Vec<f64>> {
    let (lo, hi) = bounds;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo <= 0.0 {
        return Err(Error::arg(format!("empty or invalid b bounds [{lo}, {hi}]")));
    }
    if !(step > 0.0) {
        return Err(Error::arg("grid step must be positive"));
    }
    let steps = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| lo + i as f64 * step).collect();
    if hi - grid[steps] > 1e-12 {
        grid.push(hi);
    }
    Ok(grid)
}

/// Exponential fit over an explicit grid step.
pub fn fit_exponential_grid(s: &Series, target: f64, bounds: (f64, f64), step: f64) -> Result<FitResult> {
    if s.len() < 3 {
        return Err(Error::arg("exponential fit needs at least 3 points"));
    }
    let grid = b_grid(bounds, step)?;
    let xs: Vec<f64> = s.xs().collect();
    let ys: Vec<f64> = s.ys().collect();
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sst: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let tol = 1e-24 * (1.0 + sst);
    let mut best: Option<(f64, f64, f64, f64)> = None;
    let mut basis = vec![0.0; xs.len()];
    for &b in &grid {
        for (u, &x) in basis.iter_mut().zip(&xs) {
            *u = b.powf(x);
        }
        let (c, a, rss) = ols(&basis, &ys);
        if best.is_none_or(|(_, _, _, r)| rss < r - tol) {
            best = Some((a, b, c, rss));
        }
    }
    let (a, b, c, rss) = best.expect("grid is never empty");
    Ok(FitResult {
        kind: FitKind::Exponential,
        params: vec![a, b, c],
        residual_ss: rss,
        target,
        extrapolated: a * b.powf(target) + c,
    })
}

pub fn fit_exponential(s: &Series, target: f64, bounds: (f64, f64)) -> Result<FitResult> {
    fit_exponential_grid(s, target, bounds, B_GRID_STEP)
}

/// Weights `gamma_i = prod_{j != i} c_j / (c_j - c_i)` solving the
/// zero-noise Vandermonde system.
pub fn richardson_weights(scales: &[f64]) -> Result<Vec<f64>> {
    if scales.len() < 2 {
        return Err(Error::arg("Richardson extrapolation needs at least 2 points"));
    }
    let mut out = Vec::with_capacity(scales.len());
    for (i, &ci) in scales.iter().enumerate() {
        let mut g = 1.0;
        for (j, &cj) in scales.iter().enumerate() {
            if i != j {
                if cj == ci {
                    return Err(Error::Singular(format!("duplicate scale {ci}")));
                }
                g *= cj / (cj - ci);
            }
        }
        out.push(g);
    }
    Ok(out)
}

pub fn richardson(s: &Series) -> Result<FitResult> {
    let xs: Vec<f64> = s.xs().collect();
    let weights = richardson_weights(&xs)?;
    let extrapolated = weights.iter().zip(s.ys()).map(|(g, y)| g * y).sum();
    Ok(FitResult { kind: FitKind::Richardson, params: weights, residual_ss: 0.0, target: 0.0, extrapolated })
}

/// Fits `kind` and extrapolates to `target` (Richardson always targets 0).
pub fn fit(s: &Series, kind: FitKind, target: f64, b_bounds: (f64, f64)) -> Result<FitResult> {
    match kind {
        FitKind::Linear => fit_linear(s, target),
        FitKind::Exponential => fit_exponential(s, target, b_bounds),
        FitKind::Richardson => richardson(s),
    }
}

/// Seed of an independent stream `stream` under `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master).wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

fn all_z(n: usize) -> PauliString {
    PauliString::z_on(n, 0..n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PceOutcome {
    pub fit: FitResult,
    /// Post-selected `<Z...Z>` with 1, 2, ... layers.
    pub estimates: Vec<ExpectationEstimate>,
}

/// Post-selected `<Z^n>` of `payload` sandwiched by 1..=`checks_used`
/// single-qubit Z checks, `shots_total / checks_used` shots each.
pub fn pce_series(payload: &Circuit, noise: &NoiseModel, checks_used: usize, shots_total: usize, seed: u64) -> Result<Vec<ExpectationEstimate>> {
    let n = payload.n_data();
    if checks_used == 0 || checks_used > max_checks(n, CheckBasis::ZBasis) {
        return Err(Error::arg(format!("checks_used {checks_used} outside 1..={n}")));
    }
    let shots = shots_total / checks_used;
    if shots == 0 {
        return Err(Error::arg("shot budget smaller than the number of circuits"));
    }
    let empty = Circuit::new(n, 0);
    let obs = all_z(n);
    (1..=checks_used)
        .map(|m| {
            let rights = default_rights(n, m, CheckBasis::ZBasis)?;
            let plan = SandwichPlan::new(&empty, payload, &rights, Scope::FullCircuit)?;
            let circuit = build_sandwich(&plan)?;
            let records = Simulator::new(&circuit, noise)?.run(shots, derive_seed(seed, m as u64))?;
            expectation_z_basis(&records, &obs, true).map_err(|e| match e {
                Error::PostSelectionStarved { .. } => Error::PostSelectionStarved { context: Some(format!("{m} check layers")) },
                e => e,
            })
        })
        .collect()
}

/// Check-count extrapolation to `max_checks(n, z_basis)`.
pub fn pce_pipeline(
    payload: &Circuit,
    noise: &NoiseModel,
    checks_used: usize,
    model: FitKind,
    shots_total: usize,
    seed: u64,
) -> Result<PceOutcome> {
    let need = match model {
        FitKind::Linear => 2,
        FitKind::Exponential => 3,
        FitKind::Richardson => return Err(Error::arg("check extrapolation supports linear and exponential models")),
    };
    if checks_used < need {
        return Err(Error::arg(format!("{model} check extrapolation needs at least {need} check counts")));
    }
    let estimates = pce_series(payload, noise, checks_used, shots_total, seed)?;
    let xs: Vec<f64> = (1..=checks_used).map(|m| m as f64).collect();
    let series = Series::from_estimates(&xs, &estimates)?;
    let target = max_checks(payload.n_data(), CheckBasis::ZBasis) as f64;
    Ok(PceOutcome { fit: fit(&series, model, target, DEFAULT_B_BOUNDS)?, estimates })
}

pub fn validate_scales(scales: &[f64]) -> Result<()> {
    if scales.first() != Some(&1.0) || scales.windows(2).any(|w| w[1] <= w[0]) || scales.iter().any(|s| !s.is_finite()) {
        return Err(Error::arg(format!("scale factors {scales:?} must start at 1 and increase strictly")));
    }
    Ok(())
}

/// Unmitigated `<Z^n>` of the globally folded payload at each scale,
/// `shots_total / scales.len()` shots each.
pub fn zne_series(payload: &Circuit, noise: &NoiseModel, scales: &[f64], shots_total: usize, seed: u64) -> Result<Vec<ExpectationEstimate>> {
    validate_scales(scales)?;
    let shots = shots_total / scales.len();
    if shots == 0 {
        return Err(Error::arg("shot budget smaller than the number of circuits"));
    }
    let obs = all_z(payload.n_data());
    scales
        .iter()
        .enumerate()
        .map(|(i, &scale)| {
            let folded = payload.fold_global(scale)?;
            let records = Simulator::new(&folded, noise)?.run(shots, derive_seed(seed, i as u64))?;
            expectation_z_basis(&records, &obs, false)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZneOutcome {
    pub fit: FitResult,
    pub estimates: Vec<ExpectationEstimate>,
}

/// Zero-noise extrapolation; linear and exponential models target scale 0.
pub fn zne_pipeline(
    payload: &Circuit,
    noise: &NoiseModel,
    scales: &[f64],
    model: FitKind,
    shots_total: usize,
    seed: u64,
) -> Result<ZneOutcome> {
    let estimates = zne_series(payload, noise, scales, shots_total, seed)?;
    let series = Series::from_estimates(scales, &estimates)?;
    Ok(ZneOutcome { fit: fit(&series, model, 0.0, DEFAULT_B_BOUNDS)?, estimates })
}
