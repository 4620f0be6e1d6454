//! Shared FFT plans and a small n-dimensional transform built from 1-D passes.
//!
//! Sizes are tiny (a few hundred points per axis at most), so lines are
//! gathered into a scratch buffer, transformed, and scattered back rather
//! than using strided kernels.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type PlanKey = (usize, bool);

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Unnormalized 1-D DFT in place. Forward uses the kernel e^{-2πi jm/M},
/// inverse uses e^{+2πi jm/M}.
pub fn fft_1d(data: &mut [Complex64], inverse: bool) {
    plan(data.len(), inverse).process(data);
}

/// Unnormalized DFT along every axis of a row-major array with the given
/// dimensions. `dims` lists axis lengths, slowest axis first.
pub fn fft_nd(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    debug_assert_eq!(data.len(), dims.iter().product::<usize>());
    let rank = dims.len();
    for axis in 0..rank {
        let len = dims[axis];
        if len == 1 {
            continue;
        }
        let stride: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        let fft = plan(len, inverse);
        let mut line = vec![Complex64::default(); len];
        for o in 0..outer {
            for i in 0..stride {
                let base = o * len * stride + i;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, value) in line.iter().enumerate() {
                    data[base + j * stride] = *value;
                }
            }
        }
    }
}
