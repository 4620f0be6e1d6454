//! Shared helpers and independent oracles for the integration and acceptance
//! suites. Everything here provides a second route to quantities the library
//! computes, and stays independent of the implementation paths it checks.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use snls::torus::{NonlinearitySpec, SpectralField, TorusSpec, MAX_DIM};

pub fn report(name: &str, pass: bool) {
    println!("{}: {name}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion failed: {name}");
}

pub fn random_field(spec: &TorusSpec, seed: u64) -> SpectralField {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let coeffs = (0..spec.mode_count())
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    SpectralField::from_coeffs(spec, coeffs).unwrap()
}

pub fn max_coeff_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Brute-force (2k+1)-fold convolution of the signed nonlinearity ±|u|^{2k}u:
/// Σ û(n₁)conj(û(n₂))û(n₃)⋯ over every tuple with n₁-n₂+n₃-⋯ = n, formed by
/// repeated modal convolutions without any FFT.
pub fn convolution_nonlinearity(f: &SpectralField, nl: &NonlinearitySpec) -> SpectralField {
    let spec = f.spec();
    let d = spec.dim();

    // Sparse modal map keyed by the (unbounded) integer frequency.
    type Key = [i32; MAX_DIM];
    use std::collections::HashMap;
    let mut acc: HashMap<Key, Complex64> = HashMap::new();
    for (idx, &c) in f.coeffs().iter().enumerate() {
        if c != Complex64::default() {
            acc.insert(spec.mode(idx), c);
        }
    }
    let base = acc.clone();
    let conj_base: HashMap<Key, Complex64> = base
        .iter()
        .map(|(k, v)| {
            let mut neg = [0i32; MAX_DIM];
            for (a, b) in neg.iter_mut().zip(k.iter()) {
                *a = -b;
            }
            (neg, v.conj())
        })
        .collect();

    let convolve = |lhs: &HashMap<Key, Complex64>, rhs: &HashMap<Key, Complex64>| {
        let mut out: HashMap<Key, Complex64> = HashMap::new();
        for (ka, va) in lhs {
            for (kb, vb) in rhs {
                let mut key = [0i32; MAX_DIM];
                for i in 0..d {
                    key[i] = ka[i] + kb[i];
                }
                *out.entry(key).or_default() += va * vb;
            }
        }
        out
    };

    // |u|^{2k}u = u·(ū·u)^k: starting from û, convolve k times with the
    // conjugate-reflected spectrum and k times with the plain one.
    for _ in 0..nl.k {
        acc = convolve(&acc, &conj_base);
        acc = convolve(&acc, &base);
    }

    let mut out = SpectralField::zeros(spec);
    let sign = nl.sign.coefficient();
    for (key, value) in acc {
        if let Some(idx) = spec.index_of(&key[..d]) {
            out.coeffs_mut()[idx] = sign * value;
        }
    }
    out
}

/// ½‖∇u‖² by fourth-order central finite differences on a refined physical
/// grid, in the library's absorbed units: the derivative of e^{2πi n x/α} is
/// taken as (i n/α)·e, so the physical difference quotient is divided by 2π.
pub fn fd_gradient_energy(f: &SpectralField, refine: usize) -> f64 {
    let spec = f.spec();
    let d = spec.dim();
    let sizes: Vec<usize> = vec![refine * spec.side(); d];
    let grid = snls::torus::to_physical_sized(f, &sizes).unwrap();
    let total: usize = sizes.iter().product();
    let mut acc = 0.0;
    for axis in 0..d {
        let len = sizes[axis];
        let stride: usize = sizes[axis + 1..].iter().product();
        let outer: usize = sizes[..axis].iter().product();
        let h = spec.periods()[axis] / len as f64;
        let scale = 1.0 / (2.0 * std::f64::consts::PI * h);
        for o in 0..outer {
            for i in 0..stride {
                let base = o * len * stride + i;
                let at = |j: usize| grid[base + (j % len) * stride];
                for j in 0..len {
                    // (-u₊₂ + 8u₊₁ - 8u₋₁ + u₋₂) / 12h, periodic wrap.
                    let diff = (-at(j + 2) + at(j + 1) * 8.0 - at(j + len - 1) * 8.0
                        + at(j + len - 2))
                        / 12.0
                        * scale;
                    acc += diff.norm_sqr();
                }
            }
        }
    }
    0.5 * acc / total as f64
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    snls::ensemble::mean_and_se(values)
}
