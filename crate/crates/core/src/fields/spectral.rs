//! Multidimensional complex FFTs over the periodic lattice.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

fn transform(grid: &Grid, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
    let n = grid.n();
    let d = grid.dim();
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for axis in 0..d {
        let inner = grid.stride(axis);
        if inner == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let block = n * inner;
        let mut lines = vec![Complex64::default(); block];
        for chunk in data.chunks_mut(block) {
            // [n][inner] -> [inner][n]
            for j in 0..n {
                for k in 0..inner {
                    lines[k * n + j] = chunk[j * inner + k];
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            for j in 0..n {
                for k in 0..inner {
                    chunk[j * inner + k] = lines[k * n + j];
                }
            }
        }
    }
}

/// Unnormalized forward transform of real nodal values.
pub(crate) fn forward(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(grid, &mut data, &plans(grid.n()).0);
    data
}

/// Inverse transform, normalized, keeping the real part.
pub(crate) fn inverse(grid: &Grid, mut data: Vec<Complex64>) -> Vec<f64> {
    transform(grid, &mut data, &plans(grid.n()).1);
    let scale = 1.0 / grid.len() as f64;
    data.into_iter().map(|c| c.re * scale).collect()
}

/// Signed mode index of position `j` along an axis; Nyquist maps to `+n/2`.
pub(crate) fn mode_index(n: usize, j: usize) -> isize {
    if j <= n / 2 {
        j as isize
    } else {
        j as isize - n as isize
    }
}

/// Angular wavenumber of position `j`.
pub(crate) fn wavenumber(grid: &Grid, j: usize) -> f64 {
    2.0 * PI / grid.box_length() * mode_index(grid.n(), j) as f64
}

/// Wavenumber used for odd derivatives: the Nyquist mode has no
/// real-valued derivative and is dropped.
pub(crate) fn derivative_wavenumber(grid: &Grid, j: usize) -> f64 {
    if j == grid.n() / 2 {
        0.0
    } else {
        wavenumber(grid, j)
    }
}

/// Per-axis table of derivative wavenumbers.
pub(crate) fn derivative_table(grid: &Grid) -> Vec<f64> {
    (0..grid.n()).map(|j| derivative_wavenumber(grid, j)).collect()
}

/// Per-axis table of full wavenumbers squared.
pub(crate) fn k2_table(grid: &Grid) -> Vec<f64> {
    (0..grid.n())
        .map(|j| wavenumber(grid, j).powi(2))
        .collect()
}

/// 2/3-rule mask: true where the mode survives.
pub(crate) fn dealias_keep(grid: &Grid, flat: usize) -> bool {
    let idx = grid.unravel(flat);
    let n = grid.n() as isize;
    (0..grid.dim()).all(|a| 3 * mode_index(grid.n(), idx[a]).abs() <= n)
}

/// Applies a real multiplier built from the multi-index to a spectrum.
pub(crate) fn apply_multiplier(
    grid: &Grid,
    data: &mut [Complex64],
    mult: impl Fn(&[usize; 3]) -> Complex64,
) {
    for (i, c) in data.iter_mut().enumerate() {
        *c *= mult(&grid.unravel(i));
    }
}
