//! Numerical probing of dispersive inequalities: empirical constants for the
//! periodic Strichartz estimate, the L⁴ space-time bound, Fourier-Lebesgue
//! product estimates and the multilinear space-time estimate, plus the
//! singular Beta-integral identity used by the factorization method.
//!
//! These sweeps produce bounded-constant evidence, not proofs: each returns
//! the empirical max/mean of a normalized ratio over random fields, and the
//! acceptance suite asserts non-growth of the max across a cutoff sweep
//! against thresholds pinned by a committed pilot run.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map_indexed;
use crate::norms::{fl_norm, sobolev_norm, xsb_norm, Trajectory, Window};
use crate::torus::{
    apply_semigroup, pointwise_product, project_leq, to_physical_sized, SpectralField, TorusSpec,
};

/// Outcome of one ratio sweep at a fixed cutoff.
#[derive(Debug, Clone, Serialize)]
pub struct RatioSweep {
    pub n: u32,
    pub ratios: Vec<f64>,
    pub profile: String,
    pub seed: u64,
}

impl RatioSweep {
    pub fn max(&self) -> f64 {
        self.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.ratios.iter().sum::<f64>() / self.ratios.len() as f64
    }
}

/// Decay exponents of the random-field variance profiles ⟨n⟩^{-2γ} cycled
/// through a sweep: γ ∈ {0, s, s+1}.
fn profiles(s: f64) -> [f64; 3] {
    [0.0, s, s + 1.0]
}

fn profile_label(s: f64) -> String {
    let p = profiles(s);
    format!("jb-decay:{},{},{}", p[0], p[1], p[2])
}

/// Random field with independent complex Gaussian coefficients of variance
/// ⟨n⟩^{-2γ}.
pub fn gaussian_field(spec: &TorusSpec, gamma: f64, rng: &mut ChaCha12Rng) -> SpectralField {
    let coeffs = (0..spec.mode_count())
        .map(|idx| {
            let sd = spec.jb2(idx).powf(-gamma / 2.0) / std::f64::consts::SQRT_2;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sd * re, sd * im)
        })
        .collect();
    SpectralField::from_coeffs(spec, coeffs).unwrap()
}

/// Picks a fast FFT length ≥ `min` (2^a·3^b·5^c).
fn fast_size(min: usize) -> usize {
    let mut n = min;
    loop {
        let mut m = n;
        for p in [2usize, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Space-time L^p norm of the free evolution S(t)f over [0,T]×T^d by padded
/// quadrature: the spatial grid is large enough to make |S(t)f|^p a mean of
/// an alias-free trig polynomial, the time integral is a uniform Riemann sum
/// over `time_samples` points.
fn free_evolution_lp(f: &SpectralField, p: f64, t_horizon: f64, time_samples: usize) -> f64 {
    let spec = f.spec();
    let n = spec.cutoff() as usize;
    let min_grid = (p.ceil() as usize * n + 1).max(spec.side());
    let sizes = vec![fast_size(min_grid); spec.dim()];
    let dt = t_horizon / time_samples as f64;
    let mut acc = 0.0;
    for m in 0..time_samples {
        let t = (m as f64 + 0.5) * dt;
        let ut = apply_semigroup(f, t);
        let grid = to_physical_sized(&ut, &sizes).expect("finite field");
        let total: usize = sizes.iter().product();
        let mean: f64 = grid.iter().map(|v| v.norm_sqr().powf(p / 2.0)).sum::<f64>() / total as f64;
        acc += mean * dt;
    }
    acc.powf(1.0 / p)
}

/// Empirical constants of ‖S(t)P_{≤N}f‖_{L^p_{t,x}} ≤ C N^{d/2-(d+2)/p+ε}‖f‖_{L²}
/// over random Gaussian data, with ε = 0.05 and the time horizon `t_horizon`.
pub fn strichartz_ratio(
    spec: &TorusSpec,
    p: f64,
    samples: usize,
    t_horizon: f64,
    seed: u64,
) -> Result<RatioSweep> {
    let d = spec.dim() as f64;
    let admissible = 2.0 * (d + 2.0) / d;
    if p < admissible - 1e-12 {
        return Err(Error::invalid(
            "p",
            format!("Lebesgue exponent {p} below the admissible threshold {admissible}"),
        ));
    }
    if samples < 1 {
        return Err(Error::invalid("samples", "at least one sample required"));
    }
    let eps = 0.05;
    let n = spec.cutoff();
    let exponent = d / 2.0 - (d + 2.0) / p + eps;
    let normalizer = f64::from(n).powf(exponent);
    let gammas = profiles(0.0);
    let time_samples = (8.0 * f64::from(n) * f64::from(n) * t_horizon).max(512.0) as usize;

    let ratios = map_indexed(samples, |i| {
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e3779b97f4a7c15));
        let f = project_leq(&gaussian_field(spec, gammas[i % 3], &mut rng), n);
        let l2 = f.l2_sq().sqrt();
        if l2 == 0.0 {
            return 0.0;
        }
        free_evolution_lp(&f, p, t_horizon, time_samples) / (normalizer * l2)
    });

    Ok(RatioSweep {
        n,
        ratios,
        profile: profile_label(0.0),
        seed,
    })
}

/// A band-limited space-time field u(t) = Σ_n a_n e^{i(ω(n)+δ_n)t} e_n:
/// random modal amplitudes riding the dispersive phase with random
/// modulations δ_n.
pub fn modulated_trajectory(
    spec: &TorusSpec,
    gamma: f64,
    delta_spread: f64,
    len: usize,
    dt: f64,
    rng: &mut ChaCha12Rng,
) -> Trajectory {
    let amp = gaussian_field(spec, gamma, rng);
    let deltas: Vec<f64> = (0..spec.mode_count())
        .map(|_| rng.gen_range(-delta_spread..delta_spread))
        .collect();
    let mut traj = Trajectory::new(spec);
    for m in 0..len {
        let t = m as f64 * dt;
        let coeffs = amp
            .coeffs()
            .iter()
            .enumerate()
            .map(|(idx, a)| a * Complex64::from_polar(1.0, (spec.omega(idx) + deltas[idx]) * t))
            .collect();
        traj.push(t, SpectralField::from_coeffs(spec, coeffs).unwrap())
            .unwrap();
    }
    traj
}

/// Space-time L⁴ norm of a sampled trajectory by padded quadrature.
pub fn trajectory_l4(traj: &Trajectory) -> Result<f64> {
    let dt = traj.uniform_dt()?;
    let spec = traj.spec();
    let sizes = vec![fast_size(4 * spec.cutoff() as usize + 1); spec.dim()];
    let total: usize = sizes.iter().product();
    let mut acc = 0.0;
    for f in traj.fields() {
        let grid = to_physical_sized(f, &sizes)?;
        acc += grid.iter().map(|v| v.norm_sqr() * v.norm_sqr()).sum::<f64>() / total as f64 * dt;
    }
    Ok(acc.powf(0.25))
}

/// Empirical max of ‖u‖_{L⁴_{t,x}} / ‖u‖_{X^{0,3/8}} over a trajectory
/// ensemble (one-dimensional tori only).
pub fn l4_xsb_ratio(trajs: &[Trajectory]) -> Result<RatioSweep> {
    if trajs.is_empty() {
        return Err(Error::invalid("trajectories", "empty ensemble"));
    }
    let spec = trajs[0].spec().clone();
    if spec.dim() != 1 {
        return Err(Error::invalid("d", "the L⁴ bound is probed on one-dimensional tori"));
    }
    let mut ratios = Vec::with_capacity(trajs.len());
    for traj in trajs {
        let denom = xsb_norm(traj, 0.0, 0.375, Window::Sharp)?;
        if denom == 0.0 {
            return Err(Error::invalid("trajectory", "zero field has an undefined ratio"));
        }
        ratios.push(trajectory_l4(traj)? / denom);
    }
    Ok(RatioSweep {
        n: spec.cutoff(),
        ratios,
        profile: "external".to_string(),
        seed: 0,
    })
}

/// Builds the random trajectory ensemble and evaluates `l4_xsb_ratio`.
pub fn l4_xsb_ratio_random(
    spec: &TorusSpec,
    samples: usize,
    t_horizon: f64,
    seed: u64,
) -> Result<RatioSweep> {
    if spec.dim() != 1 {
        return Err(Error::invalid("d", "the L⁴ bound is probed on one-dimensional tori"));
    }
    let n = spec.cutoff();
    let gammas = profiles(0.0);
    let len = ((8.0 * f64::from(n) * f64::from(n) * t_horizon).max(512.0) as usize).next_power_of_two();
    let dt = t_horizon / len as f64;
    let ratios_nested = map_indexed(samples, |i| -> Result<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e3779b97f4a7c15));
        let traj = modulated_trajectory(spec, gammas[i % 3], 8.0, len, dt, &mut rng);
        let denom = xsb_norm(&traj, 0.0, 0.375, Window::Sharp)?;
        Ok(trajectory_l4(&traj)? / denom)
    });
    let mut ratios = Vec::with_capacity(samples);
    for r in ratios_nested {
        ratios.push(r?);
    }
    Ok(RatioSweep {
        n,
        ratios,
        profile: profile_label(0.0),
        seed,
    })
}

/// Validates the hypothesis range of the product estimate
/// ‖fu‖_{H^s} ≲ ‖f‖_{FL^{s,r}}‖u‖_{H^s}.
fn validate_product_range(d: f64, s: f64, r: f64) -> Result<()> {
    if !(0.0..=d / 2.0).contains(&s) {
        return Err(Error::invalid("s", format!("requires 0 ≤ s ≤ d/2 = {}", d / 2.0)));
    }
    if s == 0.0 {
        if (r - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("r", "s = 0 requires r = 1"));
        }
    } else {
        let upper = d / (d - s);
        if !(1.0..upper).contains(&r) {
            return Err(Error::invalid(
                "r",
                format!("requires 1 ≤ r < d/(d-s) = {upper}"),
            ));
        }
    }
    Ok(())
}

/// Empirical max of ‖fu‖_{H^s} / (‖f‖_{FL^{s,r}}‖u‖_{H^s}) over random
/// Gaussian pairs, with the product dealiased.
pub fn product_ratio(
    spec: &TorusSpec,
    s: f64,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<RatioSweep> {
    validate_product_range(spec.dim() as f64, s, r)?;
    let gammas = profiles(s);
    let ratios_nested = map_indexed(samples, |i| -> Result<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e3779b97f4a7c15));
        let f = gaussian_field(spec, gammas[i % 3], &mut rng);
        let u = gaussian_field(spec, gammas[(i + 1) % 3], &mut rng);
        let fu = pointwise_product(&f, &u)?;
        let denom = fl_norm(&f, s, r)? * sobolev_norm(&u, s);
        if denom == 0.0 {
            return Ok(0.0);
        }
        Ok(sobolev_norm(&fu, s) / denom)
    });
    let mut ratios = Vec::with_capacity(samples);
    for v in ratios_nested {
        ratios.push(v?);
    }
    Ok(RatioSweep {
        n: spec.cutoff(),
        ratios,
        profile: profile_label(s),
        seed,
    })
}

/// Critical Sobolev regularity s_crit = d/2 - 1/k.
pub fn s_crit(d: usize, k: u32) -> f64 {
    d as f64 / 2.0 - 1.0 / f64::from(k)
}

const MULTILINEAR_MAX_CUTOFF: u32 = 8;
const MULTILINEAR_MAX_POWER: u32 = 2;

fn validate_multilinear(spec: &TorusSpec, k: u32, s: f64, b: f64, bp: f64) -> Result<()> {
    if k < 1 || k > MULTILINEAR_MAX_POWER {
        return Err(Error::invalid("k", "multilinear sweeps support 1 ≤ k ≤ 2"));
    }
    if spec.cutoff() > MULTILINEAR_MAX_CUTOFF {
        return Err(Error::invalid(
            "N",
            "the (2k+1)-fold product is formed by brute force; N ≤ 8 required",
        ));
    }
    if s < 0.0 || s <= s_crit(spec.dim(), k) {
        return Err(Error::invalid(
            "s",
            format!("requires s ≥ 0 and s > s_crit = {}", s_crit(spec.dim(), k)),
        ));
    }
    if spec.dim() == 1 && k == 1 {
        if b < 0.375 || bp > 0.625 {
            return Err(Error::invalid("b", "the cubic case requires b ≥ 3/8 and b' ≤ 5/8"));
        }
    } else if !(0.0..0.5).contains(&b) || !(0.5..1.0).contains(&bp) {
        return Err(Error::invalid("b", "requires 0 ≤ b < 1/2 < b' < 1"));
    }
    Ok(())
}

/// Time grid used by the multilinear sweep.
pub fn multilinear_grid(spec: &TorusSpec, t_horizon: f64) -> (usize, f64) {
    let n = spec.cutoff();
    let len = ((16.0 * f64::from(n) * f64::from(n) * t_horizon).max(256.0) as usize).next_power_of_two();
    (len, t_horizon / len as f64)
}

/// Pointwise product u₁ū₂u₃⋯u_{2k+1} of sampled trajectories (factors with
/// even 1-based index conjugated), dealiased and re-projected per sample.
pub fn multilinear_product(factors: &[Trajectory]) -> Result<Trajectory> {
    let spec = factors[0].spec().clone();
    let len = factors[0].len();
    let k = factors.len() / 2;
    let grid = fast_size((2 * k + 2) * spec.cutoff() as usize + 1);
    let sizes = vec![grid; spec.dim()];
    let total: usize = sizes.iter().product();
    let mut product = Trajectory::new(&spec);
    for m in 0..len {
        let mut acc = vec![Complex64::new(1.0, 0.0); total];
        for (j, traj) in factors.iter().enumerate() {
            let g = to_physical_sized(&traj.fields()[m], &sizes)?;
            if j % 2 == 1 {
                for (a, v) in acc.iter_mut().zip(&g) {
                    *a *= v.conj();
                }
            } else {
                for (a, v) in acc.iter_mut().zip(&g) {
                    *a *= v;
                }
            }
        }
        let field = crate::torus::spectral_from_samples(&acc, &spec, &sizes)?;
        product.push(factors[0].times()[m], field)?;
    }
    Ok(product)
}

/// Empirical max over random space-time fields of
/// ‖u₁ū₂⋯u_{2k+1}‖_{X^{s,b'-1}} / Π‖u_j‖_{X^{s,b}}.
pub fn multilinear_ratio(
    spec: &TorusSpec,
    k: u32,
    s: f64,
    b: f64,
    bp: f64,
    samples: usize,
    t_horizon: f64,
    seed: u64,
) -> Result<RatioSweep> {
    validate_multilinear(spec, k, s, b, bp)?;
    let gammas = profiles(s);
    let (len, dt) = multilinear_grid(spec, t_horizon);
    let factor_count = (2 * k + 1) as usize;

    let ratios_nested = map_indexed(samples, |i| -> Result<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e3779b97f4a7c15));
        let factors: Vec<Trajectory> = (0..factor_count)
            .map(|j| modulated_trajectory(spec, gammas[(i + j) % 3], 4.0, len, dt, &mut rng))
            .collect();
        let mut denom = 1.0;
        for f in &factors {
            denom *= xsb_norm(f, s, b, Window::Sharp)?;
        }
        let product = multilinear_product(&factors)?;
        let num = xsb_norm(&product, s, bp - 1.0, Window::Raw)?;
        if num == 0.0 {
            return Ok(0.0);
        }
        Ok(num / denom)
    });
    let mut ratios = Vec::with_capacity(samples);
    for v in ratios_nested {
        ratios.push(v?);
    }
    Ok(RatioSweep {
        n: spec.cutoff(),
        ratios,
        profile: profile_label(s),
        seed,
    })
}

/// Adaptive quadrature of ∫_μ^t (t-t')^{α-1}(t'-μ)^{-α} dt', which must equal
/// π/sin(πα) independently of (t, μ). Endpoint substitutions remove both
/// algebraic singularities before the adaptive pass.
pub fn factorization_check(alpha: f64, t: f64, mu: f64) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::invalid("alpha", "requires 0 < α < 1"));
    }
    if !(0.0 <= mu && mu < t) {
        return Err(Error::invalid("mu", "requires 0 ≤ μ < t"));
    }
    let span = t - mu;

    // Left half, singular at t' = μ: substitute t' = μ + z^p with
    // p(1-α) = 1, so (t'-μ)^{-α} dt' = p dz and the integrand becomes
    // p (t - μ - z^p)^{α-1}, smooth on the half.
    let p = 1.0 / (1.0 - alpha);
    let z_max = (0.5 * span).powf(1.0 / p);
    let left = adaptive_simpson(
        &|z: f64| p * (t - mu - z.powf(p)).powf(alpha - 1.0),
        0.0,
        z_max,
        1e-10,
        48,
    );

    // Right half, singular at t' = t: substitute t - t' = w^q with qα = 1,
    // giving q (t' - μ)^{-α} = q (t - μ - w^q)^{-α}.
    let q = 1.0 / alpha;
    let w_max = (0.5 * span).powf(1.0 / q);
    let right = adaptive_simpson(
        &|w: f64| q * (t - mu - w.powf(q)).powf(-alpha),
        0.0,
        w_max,
        1e-10,
        48,
    );

    Ok(left + right)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
            + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
    }
}
