//! Smoothing operators, cylindrical Wiener increments and the additive
//! stochastic convolution.
//!
//! Normalization convention: each modal Brownian motion β_n is complex with
//! independent standard real and imaginary parts, so E|β_n(t)|² = 2t. Under
//! this convention the mass of a linear additive solution drifts at exactly
//! ‖φ‖²_{HS(L²;L²)} per unit time, which is the identity the ensemble module
//! verifies against a scalar oracle.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::torus::{semigroup_inplace, SpectralField, TorusSpec};

/// The smoothing operator φ applied to the noise, stored on the truncated
/// mode set. Diagonal operators act as φe_n = m(n)e_n (translation
/// invariant); dense operators store every column φ̂e_j(n).
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothingOperator {
    Diagonal {
        spec: TorusSpec,
        multipliers: Vec<f64>,
    },
    Dense {
        spec: TorusSpec,
        /// Column-major: entry (n, j) = matrix[j * modes + n] is φ̂e_j(n).
        matrix: Vec<Complex64>,
    },
}

impl SmoothingOperator {
    pub fn diagonal(spec: &TorusSpec, multipliers: Vec<f64>) -> Result<Self> {
        if multipliers.len() != spec.mode_count() {
            return Err(Error::GridMismatch {
                got: multipliers.len(),
                expect: spec.mode_count(),
            });
        }
        if multipliers.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::invalid("multipliers", "entries must be finite and ≥ 0"));
        }
        Ok(SmoothingOperator::Diagonal {
            spec: spec.clone(),
            multipliers,
        })
    }

    /// Diagonal operator with multiplier m(n) computed per mode.
    pub fn diagonal_from_fn(spec: &TorusSpec, f: impl Fn(&[i32]) -> f64) -> Result<Self> {
        let multipliers = spec
            .modes()
            .iter()
            .map(|n| f(&n[..spec.dim()]))
            .collect::<Vec<_>>();
        Self::diagonal(spec, multipliers)
    }

    pub fn dense(spec: &TorusSpec, matrix: Vec<Complex64>) -> Result<Self> {
        let m = spec.mode_count();
        if matrix.len() != m * m {
            return Err(Error::GridMismatch {
                got: matrix.len(),
                expect: m * m,
            });
        }
        if matrix.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("operator matrix"));
        }
        Ok(SmoothingOperator::Dense {
            spec: spec.clone(),
            matrix,
        })
    }

    pub fn zero(spec: &TorusSpec) -> Self {
        SmoothingOperator::Diagonal {
            spec: spec.clone(),
            multipliers: vec![0.0; spec.mode_count()],
        }
    }

    pub fn spec(&self) -> &TorusSpec {
        match self {
            SmoothingOperator::Diagonal { spec, .. } => spec,
            SmoothingOperator::Dense { spec, .. } => spec,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, SmoothingOperator::Diagonal { .. })
    }

    /// Squared column norm Σ_j |φ̂e_j(n)|² at output mode n.
    pub fn column_power(&self, n: usize) -> f64 {
        match self {
            SmoothingOperator::Diagonal { multipliers, .. } => {
                multipliers[n] * multipliers[n]
            }
            SmoothingOperator::Dense { spec, matrix } => {
                let m = spec.mode_count();
                (0..m).map(|j| matrix[j * m + n].norm_sqr()).sum()
            }
        }
    }

    /// Applies φ to a modal coefficient vector.
    pub fn apply(&self, input: &[Complex64]) -> Vec<Complex64> {
        match self {
            SmoothingOperator::Diagonal { multipliers, .. } => input
                .iter()
                .zip(multipliers)
                .map(|(v, m)| v * m)
                .collect(),
            SmoothingOperator::Dense { spec, matrix } => {
                let m = spec.mode_count();
                let mut out = vec![Complex64::default(); m];
                for (j, &w) in input.iter().enumerate() {
                    if w == Complex64::default() {
                        continue;
                    }
                    let col = &matrix[j * m..(j + 1) * m];
                    for (o, &c) in out.iter_mut().zip(col) {
                        *o += c * w;
                    }
                }
                out
            }
        }
    }
}

/// Hilbert-Schmidt norm of φ as a map L² → H^s over the truncated mode set:
/// sqrt(Σ_j ‖φ e_j‖²_{H^s}).
pub fn hs_norm(op: &SmoothingOperator, s: f64) -> f64 {
    let spec = op.spec();
    match op {
        SmoothingOperator::Diagonal { multipliers, .. } => multipliers
            .iter()
            .enumerate()
            .map(|(n, m)| m * m * spec.jb2(n).powf(s))
            .sum::<f64>()
            .sqrt(),
        SmoothingOperator::Dense { matrix, .. } => {
            let m = spec.mode_count();
            let mut total = 0.0;
            for j in 0..m {
                for n in 0..m {
                    total += matrix[j * m + n].norm_sqr() * spec.jb2(n).powf(s);
                }
            }
            total.sqrt()
        }
    }
}

/// Hilbert-Schmidt-type norm of φ as a map L² → FL^{s,r}:
/// sqrt(Σ_j ‖φ e_j‖²_{FL^{s,r}}). Coincides with `hs_norm` at r = 2.
pub fn flsr_norm(op: &SmoothingOperator, s: f64, r: f64) -> Result<f64> {
    if r < 1.0 {
        return Err(Error::invalid("r", "Lebesgue exponent must be ≥ 1"));
    }
    let spec = op.spec();
    let m = spec.mode_count();
    let column_flsr_sq = |column: &dyn Fn(usize) -> f64| -> f64 {
        let mut acc = 0.0;
        for n in 0..m {
            let w = spec.jb2(n).powf(s / 2.0) * column(n);
            acc += w.powf(r);
        }
        acc.powf(2.0 / r)
    };
    let total = match op {
        SmoothingOperator::Diagonal { multipliers, .. } => (0..m)
            .map(|j| {
                let mag = multipliers[j];
                if mag == 0.0 {
                    0.0
                } else {
                    // A diagonal column is a single mode: ‖φe_j‖ = ⟨j⟩^s m(j).
                    (spec.jb2(j).powf(s / 2.0) * mag).powi(2)
                }
            })
            .sum::<f64>(),
        SmoothingOperator::Dense { matrix, .. } => (0..m)
            .map(|j| column_flsr_sq(&|n| matrix[j * m + n].norm()))
            .sum::<f64>(),
    };
    Ok(total.sqrt())
}

/// Seedable stream of cylindrical Wiener increments with per-mode running
/// Brownian values. Single-owner: ensembles create one per path.
#[derive(Debug, Clone)]
pub struct WienerState {
    spec: TorusSpec,
    rng: ChaCha12Rng,
    seed: u64,
    beta: Vec<Complex64>,
    t: f64,
    real_noise: bool,
}

impl WienerState {
    pub fn new(spec: &TorusSpec, seed: u64) -> Self {
        Self::with_mode(spec, seed, false)
    }

    /// `real_noise` enforces conjugate-symmetric increments
    /// Δβ_{-n} = conj(Δβ_n), so the sampled physical noise is real-valued.
    pub fn with_mode(spec: &TorusSpec, seed: u64, real_noise: bool) -> Self {
        WienerState {
            spec: spec.clone(),
            rng: ChaCha12Rng::seed_from_u64(seed),
            seed,
            beta: vec![Complex64::default(); spec.mode_count()],
            t: 0.0,
            real_noise,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn is_real_noise(&self) -> bool {
        self.real_noise
    }

    /// Accumulated Brownian values β_n(t).
    pub fn beta(&self) -> &[Complex64] {
        &self.beta
    }

    /// Draws one increment vector Δβ over a step of length dt: independent
    /// complex Gaussians with E[Δβ] = 0 and E|Δβ|² = 2dt per mode (real and
    /// imaginary parts independent N(0, dt)). Advances internal time.
    pub fn sample_increment(&mut self, dt: f64) -> Result<Vec<Complex64>> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", "noise step must be positive and finite"));
        }
        let sd = dt.sqrt();
        let count = self.spec.mode_count();
        let mut incr = vec![Complex64::default(); count];
        if self.real_noise {
            // Draw the half-space {n : first nonzero component > 0} plus the
            // origin; mirror modes take the conjugate value.
            for idx in 0..count {
                let n = self.spec.mode(idx);
                let d = self.spec.dim();
                match half_space_class(&n[..d]) {
                    HalfSpace::Origin => {
                        let g: f64 = self.rng.sample(StandardNormal);
                        // Real-valued Brownian at the zero mode, variance
                        // matched to E|Δβ|² = 2dt.
                        incr[idx] = Complex64::new(std::f64::consts::SQRT_2 * sd * g, 0.0);
                    }
                    HalfSpace::Positive => {
                        let re: f64 = self.rng.sample(StandardNormal);
                        let im: f64 = self.rng.sample(StandardNormal);
                        incr[idx] = Complex64::new(sd * re, sd * im);
                    }
                    HalfSpace::Negative => {}
                }
            }
            for idx in 0..count {
                let n = self.spec.mode(idx);
                let d = self.spec.dim();
                if half_space_class(&n[..d]) == HalfSpace::Negative {
                    let mut neg = [0i32; crate::torus::MAX_DIM];
                    for (a, b) in neg.iter_mut().zip(n.iter()) {
                        *a = -b;
                    }
                    let mirror = self.spec.index_of(&neg[..d]).expect("mirror mode in cube");
                    incr[idx] = incr[mirror].conj();
                }
            }
        } else {
            for slot in incr.iter_mut() {
                let re: f64 = self.rng.sample(StandardNormal);
                let im: f64 = self.rng.sample(StandardNormal);
                *slot = Complex64::new(sd * re, sd * im);
            }
        }
        for (b, d) in self.beta.iter_mut().zip(&incr) {
            *b += d;
        }
        self.t += dt;
        Ok(incr)
    }
}

#[derive(PartialEq, Eq)]
enum HalfSpace {
    Origin,
    Positive,
    Negative,
}

fn half_space_class(n: &[i32]) -> HalfSpace {
    for &c in n {
        if c > 0 {
            return HalfSpace::Positive;
        }
        if c < 0 {
            return HalfSpace::Negative;
        }
    }
    HalfSpace::Origin
}

/// Noise increments consumed by the integrators. `Live` draws from a Wiener
/// stream; `Recorded` replays a pre-sampled fine path, aggregating
/// consecutive fine increments so that runs at dt and dt/2 (etc.) are coupled
/// to the same Brownian path.
#[derive(Debug, Clone)]
pub enum NoiseSource {
    Live(WienerState),
    Recorded(RecordedNoise),
}

impl NoiseSource {
    pub fn next_increment(&mut self, dt: f64) -> Result<Vec<Complex64>> {
        match self {
            NoiseSource::Live(w) => w.sample_increment(dt),
            NoiseSource::Recorded(r) => r.next_increment(dt),
        }
    }
}

/// A Brownian path pre-sampled at a fine resolution.
#[derive(Debug, Clone)]
pub struct RecordedNoise {
    dt_fine: f64,
    increments: Arc<Vec<Vec<Complex64>>>,
    cursor: usize,
}

impl RecordedNoise {
    /// Samples `steps` fine increments of length `dt_fine` from `w`.
    pub fn record(w: &mut WienerState, dt_fine: f64, steps: usize) -> Result<Self> {
        let mut increments = Vec::with_capacity(steps);
        for _ in 0..steps {
            increments.push(w.sample_increment(dt_fine)?);
        }
        Ok(RecordedNoise {
            dt_fine,
            increments: Arc::new(increments),
            cursor: 0,
        })
    }

    /// Fresh replay cursor over the same recorded path.
    pub fn replay(&self) -> Self {
        RecordedNoise {
            dt_fine: self.dt_fine,
            increments: Arc::clone(&self.increments),
            cursor: 0,
        }
    }

    pub fn next_increment(&mut self, dt: f64) -> Result<Vec<Complex64>> {
        let ratio = dt / self.dt_fine;
        let agg = ratio.round() as usize;
        if agg == 0 || (ratio - agg as f64).abs() > 1e-9 * agg as f64 {
            return Err(Error::invalid(
                "dt",
                format!("step {dt} is not an integer multiple of the recorded resolution {}", self.dt_fine),
            ));
        }
        if self.cursor + agg > self.increments.len() {
            return Err(Error::invalid("dt", "recorded noise path exhausted"));
        }
        let modes = self.increments[0].len();
        let mut out = vec![Complex64::default(); modes];
        for step in 0..agg {
            for (o, v) in out.iter_mut().zip(&self.increments[self.cursor + step]) {
                *o += v;
            }
        }
        self.cursor += agg;
        Ok(out)
    }
}

/// Noise configuration: integration sense and smoothing operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    AdditiveIto,
    MultiplicativeIto,
    MultiplicativeStratReal,
}

impl NoiseMode {
    pub fn label(self) -> &'static str {
        match self {
            NoiseMode::AdditiveIto => "additive-ito",
            NoiseMode::MultiplicativeIto => "multiplicative-ito",
            NoiseMode::MultiplicativeStratReal => "multiplicative-stratonovich-real",
        }
    }

    pub fn requires_real_noise(self) -> bool {
        matches!(self, NoiseMode::MultiplicativeStratReal)
    }
}

#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub op: SmoothingOperator,
}

impl NoiseSpec {
    pub fn new(mode: NoiseMode, op: SmoothingOperator) -> Result<Self> {
        if mode.requires_real_noise() {
            // Real spatial noise needs a real, even multiplier so that the
            // smoothed field keeps the conjugate symmetry of the increments.
            match &op {
                SmoothingOperator::Diagonal { spec, multipliers } => {
                    for (idx, n) in spec.modes().iter().enumerate() {
                        let mut neg = [0i32; crate::torus::MAX_DIM];
                        for (a, b) in neg.iter_mut().zip(n.iter()) {
                            *a = -b;
                        }
                        let mirror = spec.index_of(&neg[..spec.dim()]).expect("mirror in cube");
                        if (multipliers[idx] - multipliers[mirror]).abs() > 1e-14 {
                            return Err(Error::invalid(
                                "operator",
                                "Stratonovich real noise requires an even diagonal multiplier",
                            ));
                        }
                    }
                }
                SmoothingOperator::Dense { .. } => {
                    return Err(Error::invalid(
                        "operator",
                        "Stratonovich real noise requires a diagonal (translation invariant) operator",
                    ));
                }
            }
        }
        Ok(NoiseSpec { mode, op })
    }
}

/// One update of the additive stochastic convolution:
/// Ψ ↦ S(dt)Ψ + φ·ΔW, with ΔW a fresh increment from `src`. The per-mode
/// variance added is 2dt·Σ_j|φ̂e_j(n)|², matching the modal Itô integral of
/// the exact convolution in distribution.
pub fn convolve_additive_step(
    psi: &SpectralField,
    op: &SmoothingOperator,
    src: &mut NoiseSource,
    dt: f64,
) -> Result<SpectralField> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "time step must be positive"));
    }
    if psi.spec() != op.spec() {
        return Err(Error::SpecMismatch);
    }
    let incr = src.next_increment(dt)?;
    let forced = op.apply(&incr);
    let mut out = psi.clone();
    semigroup_inplace(&mut out, dt);
    for (c, f) in out.coeffs_mut().iter_mut().zip(&forced) {
        *c += f;
    }
    Ok(out)
}
