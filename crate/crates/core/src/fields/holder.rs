use serde::{Deserialize, Serialize};

use super::{FieldError, ScalarField};

/// Empirical Hölder regularity of a lattice field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    /// Regression slope, clamped to `(0, 1]`.
    pub exponent: f64,
    /// `max_k  M(s_k) / s_k^exponent` over the scales used.
    pub constant: f64,
    /// Physical separations `h·2^k`.
    pub scales_used: Vec<f64>,
    /// Maximal increment observed at each separation.
    pub max_increments: Vec<f64>,
}

const MIN_EXPONENT: f64 = 1e-6;

/// Least-squares slope of `log max|f(x + s e_a) − f(x)|` against `log s`
/// over `log₂(n) − 3` dyadic separations `s = h·2^k`, `k = 0..log₂(n) − 3`.
///
/// Increments do not wrap around the box, so non-periodic samples (such
/// as a raw Brownian sheet) are measured without a spurious seam.
pub fn estimate_holder(f: &ScalarField) -> Result<HolderEstimate, FieldError> {
    f.check_finite()?;
    let grid = *f.grid();
    let n = grid.n();
    if n < 64 {
        return Err(FieldError::Precondition(format!(
            "Hölder estimation needs n >= 64, got {n}"
        )));
    }
    let k_max = n.trailing_zeros() as usize - 4;
    let v = f.values();
    let mut scales = Vec::with_capacity(k_max + 1);
    let mut incs = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let sep = 1usize << k;
        let mut worst: f64 = 0.0;
        for axis in 0..grid.dim() {
            let stride = grid.stride(axis);
            for i in 0..grid.len() {
                let j = (i / stride) % n;
                if j + sep < n {
                    worst = worst.max((v[i + sep * stride] - v[i]).abs());
                }
            }
        }
        if worst == 0.0 {
            return Err(FieldError::Degenerate(format!(
                "no variation at separation {sep} cells"
            )));
        }
        scales.push(sep as f64 * grid.spacing());
        incs.push(worst);
    }
    let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = incs.iter().map(|m| m.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let exponent = (sxy / sxx).clamp(MIN_EXPONENT, 1.0);
    let constant = scales
        .iter()
        .zip(&incs)
        .map(|(s, m)| m / s.powf(exponent))
        .fold(0.0, f64::max);
    Ok(HolderEstimate {
        exponent,
        constant,
        scales_used: scales,
        max_increments: incs,
    })
}
