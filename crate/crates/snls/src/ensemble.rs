//! Monte Carlo orchestration over independent noise paths: moment estimates
//! of path functionals, the additive mass-drift identity, Stratonovich mass
//! conservation under refinement, and stopping-time monotonicity experiments.
//!
//! Paths are embarrassingly parallel. Per-path seeds derive deterministically
//! from the base seed (base ⊕ index), results are collected in path order,
//! and aggregation is associative, so reports are byte-identical regardless
//! of scheduling or the `parallel` feature.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map_indexed;
use crate::noise::{hs_norm, NoiseMode, NoiseSource, RecordedNoise, WienerState};
use crate::norms::{energy, mass, sobolev_norm};
use crate::stepper::{evolve, evolve_truncated, SolverState, StepperConfig, TruncationConfig};
use crate::torus::{Sign, SpectralField, TorusSpec};

/// Path functionals tracked by the driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    Mass,
    Energy,
    /// H^s norm at the given regularity.
    Hs(f64),
}

impl Observable {
    pub fn label(&self) -> String {
        match self {
            Observable::Mass => "mass".to_string(),
            Observable::Energy => "energy".to_string(),
            Observable::Hs(s) => format!("hs({s})"),
        }
    }

    fn evaluate(&self, field: &SpectralField, cfg: &EnsembleConfig) -> f64 {
        match self {
            Observable::Mass => mass(field),
            Observable::Energy => {
                let nl = cfg
                    .stepper
                    .nl
                    .unwrap_or(crate::torus::NonlinearitySpec { k: 1, sign: Sign::Defocusing });
                energy(field, &nl)
            }
            Observable::Hs(s) => sobolev_norm(field, *s),
        }
    }
}

/// Deterministic initial data families.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero,
    Constant { re: f64, im: f64 },
    /// Smooth field with exponentially decaying coefficients
    /// û(n) = amplitude·e^{-decay·|n|}·e^{i·0.4·Σn_j}.
    Smooth { amplitude: f64, decay: f64 },
}

impl InitialData {
    pub fn build(&self, spec: &TorusSpec) -> SpectralField {
        match self {
            InitialData::Zero => SpectralField::zeros(spec),
            InitialData::Constant { re, im } => {
                let mut f = SpectralField::zeros(spec);
                let zero = vec![0i32; spec.dim()];
                f.set(&zero, Complex64::new(*re, *im)).unwrap();
                f
            }
            InitialData::Smooth { amplitude, decay } => {
                let coeffs = spec
                    .modes()
                    .iter()
                    .map(|n| {
                        let len: f64 = n[..spec.dim()]
                            .iter()
                            .map(|&c| f64::from(c) * f64::from(c))
                            .sum::<f64>()
                            .sqrt();
                        let twist: f64 = 0.4 * n[..spec.dim()].iter().map(|&c| f64::from(c)).sum::<f64>();
                        Complex64::from_polar(amplitude * (-decay * len).exp(), twist)
                    })
                    .collect();
                SpectralField::from_coeffs(spec, coeffs).unwrap()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub torus: TorusSpec,
    pub u0: InitialData,
    pub paths: usize,
    pub base_seed: u64,
    pub stepper: StepperConfig,
    pub horizon: f64,
    /// Observer stride in steps.
    pub stride: usize,
    pub observables: Vec<Observable>,
    pub moment_orders: Vec<u32>,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        if self.paths < 1 {
            violations.push("paths must be ≥ 1".to_string());
        }
        if !(self.horizon >= 0.0) {
            violations.push("horizon must be non-negative".to_string());
        }
        if self.stride == 0 {
            violations.push("stride must be ≥ 1".to_string());
        }
        if self.moment_orders.iter().any(|&m| m == 0) {
            violations.push("moment orders must be ≥ 1".to_string());
        }
        if let Err(e) = self.stepper.validate() {
            violations.push(e.to_string());
        }
        // Energy-moment runs require a defocusing nonlinearity: the energy
        // of focusing paths is unbounded below and the a priori bounds do
        // not apply.
        if self.observables.contains(&Observable::Energy) {
            match self.stepper.nl {
                Some(nl) if nl.sign == Sign::Defocusing => {}
                _ => violations.push(
                    "energy moments require a defocusing nonlinearity".to_string(),
                ),
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(violations))
        }
    }

    pub fn path_seed(&self, path: usize) -> u64 {
        self.base_seed ^ path as u64
    }

    fn make_state(&self, path: usize) -> SolverState {
        let field = self.u0.build(&self.torus);
        match &self.stepper.noise {
            Some(spec) => {
                let wiener = WienerState::with_mode(
                    &self.torus,
                    self.path_seed(path),
                    spec.mode.requires_real_noise(),
                );
                SolverState::with_noise(field, 0.0, NoiseSource::Live(wiener))
            }
            None => SolverState::new(field, 0.0),
        }
    }
}

/// Everything recorded about one path.
#[derive(Debug, Clone)]
pub struct PathSummary {
    pub path: usize,
    pub seed: u64,
    /// Per observable: running sup over the observed samples.
    pub sups: Vec<f64>,
    /// Per observable: the full observed series (aligned with `times`).
    pub series: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    /// Set when the path stopped early (blow-up or propagated error).
    pub event: Option<PathEvent>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PathEvent {
    pub path: usize,
    pub kind: String,
    pub t: f64,
}

/// Runs every path of the configuration and returns the raw summaries in
/// path order.
pub fn run_paths(cfg: &EnsembleConfig) -> Result<Vec<PathSummary>> {
    cfg.validate()?;
    Ok(map_indexed(cfg.paths, |path| run_single_path(cfg, path)))
}

/// Sequential reference executor (always available; used by the benches).
pub fn run_paths_seq(cfg: &EnsembleConfig) -> Result<Vec<PathSummary>> {
    cfg.validate()?;
    Ok((0..cfg.paths).map(|path| run_single_path(cfg, path)).collect())
}

/// Explicit data-parallel executor.
#[cfg(feature = "parallel")]
pub fn run_paths_par(cfg: &EnsembleConfig) -> Result<Vec<PathSummary>> {
    use rayon::prelude::*;
    cfg.validate()?;
    Ok((0..cfg.paths)
        .into_par_iter()
        .map(|path| run_single_path(cfg, path))
        .collect())
}

fn run_single_path(cfg: &EnsembleConfig, path: usize) -> PathSummary {
    let mut state = cfg.make_state(path);
    let obs_count = cfg.observables.len();
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); obs_count];
    let mut times = Vec::new();

    // Initial sample.
    times.push(state.t);
    for (slot, obs) in series.iter_mut().zip(&cfg.observables) {
        slot.push(obs.evaluate(&state.field, cfg));
    }

    let mut event = None;
    {
        let observables = &cfg.observables;
        let series_ref = &mut series;
        let times_ref = &mut times;
        let mut observer = |t: f64, field: &SpectralField| {
            times_ref.push(t);
            for (slot, obs) in series_ref.iter_mut().zip(observables) {
                slot.push(obs.evaluate(field, cfg));
            }
        };
        if let Err(err) = evolve(
            &mut state,
            &cfg.stepper,
            cfg.horizon,
            cfg.stride,
            Some(&mut observer),
        ) {
            event = Some(PathEvent {
                path,
                kind: match &err {
                    Error::BlowUp { .. } => "blow-up".to_string(),
                    other => other.to_string(),
                },
                t: state.t,
            });
        }
    }

    let sups = series
        .iter()
        .map(|s| s.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    PathSummary {
        path,
        seed: cfg.path_seed(path),
        sups,
        series,
        times,
        event,
    }
}

/// Moment statistics of one observable at one order.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MomentStats {
    pub observable: String,
    pub m: u32,
    /// Mean over completed paths of sup_{t ≤ T} X^m.
    pub estimate: f64,
    /// Sample standard error of that mean.
    pub se: f64,
    pub paths: usize,
    pub events: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EnsembleReport {
    pub config_hash: String,
    pub seed: u64,
    pub observables: Vec<MomentStats>,
    /// Drift residual series [t, r(t), SE(t)] (additive runs; empty otherwise).
    pub drift: Vec<[f64; 3]>,
    pub events: Vec<PathEvent>,
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Runs the ensemble and aggregates sup-moment statistics. Blow-up paths are
/// excluded from the aggregates and listed as events.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleReport> {
    run_ensemble_hashed(cfg, String::new())
}

/// As `run_ensemble` with an externally supplied configuration hash to embed
/// in the report.
pub fn run_ensemble_hashed(cfg: &EnsembleConfig, config_hash: String) -> Result<EnsembleReport> {
    let summaries = run_paths(cfg)?;
    let events: Vec<PathEvent> = summaries.iter().filter_map(|s| s.event.clone()).collect();
    let ok: Vec<&PathSummary> = summaries.iter().filter(|s| s.event.is_none()).collect();

    let mut observables = Vec::new();
    for (oi, obs) in cfg.observables.iter().enumerate() {
        for &m in &cfg.moment_orders {
            let values: Vec<f64> = ok.iter().map(|s| s.sups[oi].powi(m as i32)).collect();
            let (estimate, se) = mean_and_se(&values);
            observables.push(MomentStats {
                observable: obs.label(),
                m,
                estimate,
                se,
                paths: ok.len(),
                events: events.len(),
            });
        }
    }

    let drift = if matches!(
        cfg.stepper.noise.as_ref().map(|n| n.mode),
        Some(NoiseMode::AdditiveIto)
    ) && cfg.observables.contains(&Observable::Mass)
    {
        drift_series(cfg, &summaries)?
    } else {
        Vec::new()
    };

    Ok(EnsembleReport {
        config_hash,
        seed: cfg.base_seed,
        observables,
        drift,
        events,
    })
}

fn mass_index(cfg: &EnsembleConfig) -> Option<usize> {
    cfg.observables.iter().position(|o| *o == Observable::Mass)
}

fn drift_series(cfg: &EnsembleConfig, summaries: &[PathSummary]) -> Result<Vec<[f64; 3]>> {
    let oi = mass_index(cfg)
        .ok_or_else(|| Error::invalid("observables", "drift residual requires the mass observable"))?;
    let noise = cfg
        .stepper
        .noise
        .as_ref()
        .ok_or_else(|| Error::invalid("noise", "drift residual requires additive noise"))?;
    if noise.mode != NoiseMode::AdditiveIto {
        return Err(Error::invalid("noise", "drift residual requires additive noise"));
    }
    let ok: Vec<&PathSummary> = summaries.iter().filter(|s| s.event.is_none()).collect();
    if ok.is_empty() {
        return Ok(Vec::new());
    }
    let m0 = mass(&cfg.u0.build(&cfg.torus));
    let rate = hs_norm(&noise.op, 0.0).powi(2);
    let len = ok.iter().map(|s| s.times.len()).min().unwrap_or(0);
    let mut out = Vec::with_capacity(len);
    for ti in 0..len {
        let t = ok[0].times[ti];
        let values: Vec<f64> = ok.iter().map(|s| s.series[oi][ti]).collect();
        let (mean, se) = mean_and_se(&values);
        out.push([t, mean - m0 - rate * t, se]);
    }
    Ok(out)
}

/// Residual series r(t) = mean[M(u(t))] - M(u₀) - ‖φ‖²_{HS}·t with standard
/// errors, for additive-noise runs. The identity holds for the full
/// nonlinear equation because the Hamiltonian terms are mass-neutral.
pub fn drift_check(cfg: &EnsembleConfig) -> Result<Vec<[f64; 3]>> {
    match cfg.stepper.noise.as_ref().map(|n| n.mode) {
        Some(NoiseMode::AdditiveIto) => {}
        other => {
            return Err(Error::invalid(
                "noise",
                format!("drift_check requires additive noise, got {other:?}"),
            ))
        }
    }
    let summaries = run_paths(cfg)?;
    drift_series(cfg, &summaries)
}

/// Per-path max relative mass drift max_t |M(u(t)) - M(u₀)|/M(u₀) for the
/// Stratonovich real-noise midpoint scheme.
pub fn strat_mass_conservation_check(cfg: &EnsembleConfig) -> Result<Vec<f64>> {
    match cfg.stepper.noise.as_ref().map(|n| n.mode) {
        Some(NoiseMode::MultiplicativeStratReal) => {}
        other => {
            return Err(Error::invalid(
                "noise",
                format!("Stratonovich check requires real multiplicative noise, got {other:?}"),
            ))
        }
    }
    let oi_cfg = {
        let mut c = cfg.clone();
        if mass_index(cfg).is_none() {
            c.observables.push(Observable::Mass);
        }
        c
    };
    let oi = mass_index(&oi_cfg).unwrap();
    let summaries = run_paths(&oi_cfg)?;
    let m0 = mass(&cfg.u0.build(&cfg.torus));
    Ok(summaries
        .iter()
        .map(|s| {
            s.series[oi]
                .iter()
                .map(|m| (m - m0).abs() / m0)
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Coupled dt-refinement of the Stratonovich mass drift: for each path one
/// Brownian path is sampled at dt/`factor` resolution and replayed at both
/// resolutions. Returns per-path max relative drifts (coarse, fine).
pub fn strat_refinement_drifts(
    cfg: &EnsembleConfig,
    factor: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match cfg.stepper.noise.as_ref().map(|n| n.mode) {
        Some(NoiseMode::MultiplicativeStratReal) => {}
        other => {
            return Err(Error::invalid(
                "noise",
                format!("Stratonovich check requires real multiplicative noise, got {other:?}"),
            ))
        }
    }
    if factor < 2 {
        return Err(Error::invalid("factor", "refinement factor must be ≥ 2"));
    }
    cfg.validate()?;
    let dt_fine = cfg.stepper.dt / factor as f64;
    let fine_steps = ((cfg.horizon / dt_fine) - 1e-9).ceil() as usize;

    let results = map_indexed(cfg.paths, |path| -> Result<(f64, f64)> {
        let mut wiener = WienerState::with_mode(&cfg.torus, cfg.path_seed(path), true);
        let recorded = RecordedNoise::record(&mut wiener, dt_fine, fine_steps)?;
        let mut drifts = [0.0f64; 2];
        for (slot, dt) in [(0usize, cfg.stepper.dt), (1usize, dt_fine)] {
            let mut state = SolverState::with_noise(
                cfg.u0.build(&cfg.torus),
                0.0,
                NoiseSource::Recorded(recorded.replay()),
            );
            let mut stepper = cfg.stepper.clone();
            stepper.dt = dt;
            let m0 = mass(&state.field);
            let mut max_drift: f64 = 0.0;
            let mut observer = |_t: f64, field: &SpectralField| {
                let d = (mass(field) - m0).abs() / m0;
                if d > max_drift {
                    max_drift = d;
                }
            };
            evolve(&mut state, &stepper, cfg.horizon, 1, Some(&mut observer))?;
            drifts[slot] = max_drift;
        }
        Ok((drifts[0], drifts[1]))
    });

    let mut coarse = Vec::with_capacity(cfg.paths);
    let mut fine = Vec::with_capacity(cfg.paths);
    for r in results {
        let (c, f) = r?;
        coarse.push(c);
        fine.push(f);
    }
    Ok((coarse, fine))
}

/// Stopping times τ_R per path for a list of cutoff radii, with common noise
/// across the radii (same per-path seed). `violations` counts pairs with
/// R_i < R_j but τ_{R_i} > τ_{R_j}.
#[derive(Debug, Clone, Serialize)]
pub struct TauTable {
    pub radii: Vec<f64>,
    /// taus[path][radius index]
    pub taus: Vec<Vec<Option<f64>>>,
    pub violations: usize,
}

pub fn tau_monotonicity_check(
    radii: &[f64],
    cfg: &EnsembleConfig,
    trunc_s: f64,
    trunc_b: f64,
) -> Result<TauTable> {
    match cfg.stepper.noise.as_ref().map(|n| n.mode) {
        Some(NoiseMode::MultiplicativeIto) | Some(NoiseMode::MultiplicativeStratReal) => {}
        other => {
            return Err(Error::invalid(
                "noise",
                format!("truncated runs require multiplicative noise, got {other:?}"),
            ))
        }
    }
    cfg.validate()?;
    if radii.is_empty() {
        return Err(Error::invalid("R", "at least one cutoff radius required"));
    }
    let steps = ((cfg.horizon / cfg.stepper.dt) - 1e-9).ceil() as usize;
    let real = cfg
        .stepper
        .noise
        .as_ref()
        .map(|n| n.mode.requires_real_noise())
        .unwrap_or(false);

    let taus: Vec<Result<Vec<Option<f64>>>> = map_indexed(cfg.paths, |path| {
        let mut wiener = WienerState::with_mode(&cfg.torus, cfg.path_seed(path), real);
        let recorded = RecordedNoise::record(&mut wiener, cfg.stepper.dt, steps)?;
        let mut row = Vec::with_capacity(radii.len());
        for &r in radii {
            let trunc = TruncationConfig::new(r, trunc_s, trunc_b)?;
            let mut state = SolverState::with_noise(
                cfg.u0.build(&cfg.torus),
                0.0,
                NoiseSource::Recorded(recorded.replay()),
            );
            let (_, tau) =
                evolve_truncated(&mut state, &cfg.stepper, &trunc, cfg.horizon, cfg.stride)?;
            row.push(tau);
        }
        Ok(row)
    });

    let mut table = Vec::with_capacity(cfg.paths);
    for row in taus {
        table.push(row?);
    }

    let mut violations = 0usize;
    for row in &table {
        for i in 0..radii.len() {
            for j in 0..radii.len() {
                if radii[i] < radii[j] {
                    if let (Some(ti), Some(tj)) = (row[i], row[j]) {
                        if ti > tj + 1e-12 {
                            violations += 1;
                        }
                    }
                    // τ_{R_i} finite while τ_{R_j} is none is fine; the
                    // larger radius was simply never reached. The reverse
                    // (τ_{R_j} finite, τ_{R_i} none) is a violation.
                    if row[i].is_none() && row[j].is_some() {
                        violations += 1;
                    }
                }
            }
        }
    }
    Ok(TauTable {
        radii: radii.to_vec(),
        taus: table,
        violations,
    })
}
