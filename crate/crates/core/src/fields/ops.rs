use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectral;
use super::{FieldError, Grid, ScalarField, VectorField};

/// Spatial differentiation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiffScheme {
    /// Fourier collocation; exact for resolved modes.
    #[default]
    Spectral,
    /// Second-order centered differences.
    Central2,
    /// Fourth-order centered differences.
    Central4,
}

impl DiffScheme {
    /// Weights `w_m` of `∂f ≈ Σ_m w_m (f_{+m} − f_{−m}) / h`, `m = 1, 2, ..`.
    fn first_weights(self) -> &'static [f64] {
        match self {
            DiffScheme::Central4 => &[2.0 / 3.0, -1.0 / 12.0],
            _ => &[0.5],
        }
    }

    /// Weights `w_m` of `∂²f ≈ Σ_m w_m (f_{+m} − 2f + f_{−m}) / h²`.
    fn second_weights(self) -> &'static [f64] {
        match self {
            DiffScheme::Central4 => &[4.0 / 3.0, -1.0 / 12.0],
            _ => &[1.0],
        }
    }

    /// `λ(θ)` with `∂² e^{ikx} ≈ −λ(kh) / h² e^{ikx}` for the finite-difference
    /// schemes.
    pub(crate) fn second_symbol(self, theta: f64) -> f64 {
        self.second_weights()
            .iter()
            .enumerate()
            .map(|(m, w)| 2.0 * w * (1.0 - ((m + 1) as f64 * theta).cos()))
            .sum()
    }
}

/// How products and derivatives are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discretization {
    pub scheme: DiffScheme,
    /// 2/3-rule truncation of products (spectral scheme only).
    pub dealias: bool,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            scheme: DiffScheme::Spectral,
            dealias: true,
        }
    }
}

impl Discretization {
    pub fn spectral() -> Self {
        Self::default()
    }

    pub fn central2() -> Self {
        Self {
            scheme: DiffScheme::Central2,
            dealias: false,
        }
    }

    pub fn central4() -> Self {
        Self {
            scheme: DiffScheme::Central4,
            dealias: false,
        }
    }
}

/// All first partial derivatives from one forward transform.
fn spectral_gradient(f: &ScalarField) -> Vec<ScalarField> {
    let grid = *f.grid();
    let spec = spectral::forward(&grid, f.values());
    let kd = spectral::derivative_table(&grid);
    (0..grid.dim())
        .map(|axis| {
            let mut s = spec.clone();
            spectral::apply_multiplier(&grid, &mut s, |idx| Complex64::new(0.0, kd[idx[axis]]));
            ScalarField::from_raw(grid, spectral::inverse(&grid, s))
        })
        .collect()
}

/// Flat indices of the nodes `m` cells above and below `i` along `axis`.
fn neighbours(grid: &Grid, i: usize, axis: usize, m: usize) -> (usize, usize) {
    let n = grid.n();
    let stride = grid.stride(axis);
    let j = (i / stride) % n;
    let base = i - j * stride;
    (base + ((j + m) % n) * stride, base + ((j + n - m) % n) * stride)
}

fn central_derivative(f: &ScalarField, axis: usize, scheme: DiffScheme) -> ScalarField {
    let grid = *f.grid();
    let inv = 1.0 / grid.spacing();
    let weights = scheme.first_weights();
    let v = f.values();
    let out = (0..grid.len())
        .map(|i| {
            let mut acc = 0.0;
            for (m, w) in weights.iter().enumerate() {
                let (up, down) = neighbours(&grid, i, axis, m + 1);
                acc += w * (v[up] - v[down]);
            }
            acc * inv
        })
        .collect();
    ScalarField::from_raw(grid, out)
}

fn central_laplacian(f: &ScalarField, scheme: DiffScheme) -> ScalarField {
    let grid = *f.grid();
    let inv = 1.0 / grid.spacing().powi(2);
    let weights = scheme.second_weights();
    let v = f.values();
    let out = (0..grid.len())
        .map(|i| {
            let mut acc = 0.0;
            for axis in 0..grid.dim() {
                for (m, w) in weights.iter().enumerate() {
                    let (up, down) = neighbours(&grid, i, axis, m + 1);
                    acc += w * (v[up] - 2.0 * v[i] + v[down]);
                }
            }
            acc * inv
        })
        .collect();
    ScalarField::from_raw(grid, out)
}

/// `∂f/∂x_a` for every axis.
pub fn gradient(f: &ScalarField, scheme: DiffScheme) -> Result<VectorField, FieldError> {
    f.check_finite()?;
    let grid = *f.grid();
    let comps = match scheme {
        DiffScheme::Spectral => spectral_gradient(f),
        fd => (0..grid.dim()).map(|a| central_derivative(f, a, fd)).collect(),
    };
    Ok(VectorField::from_raw(grid, comps))
}

/// Discrete Laplacian.
///
/// The spectral symbol is `-Σ k_a²` with the Nyquist wavenumber dropped on
/// each axis, so that it coincides with `divergence(gradient(f))`.
pub fn laplacian(f: &ScalarField, scheme: DiffScheme) -> Result<ScalarField, FieldError> {
    f.check_finite()?;
    let grid = *f.grid();
    Ok(match scheme {
        DiffScheme::Spectral => {
            let mut spec = spectral::forward(&grid, f.values());
            let kd = spectral::derivative_table(&grid);
            let d = grid.dim();
            spectral::apply_multiplier(&grid, &mut spec, |idx| {
                Complex64::new(-(0..d).map(|a| kd[idx[a]] * kd[idx[a]]).sum::<f64>(), 0.0)
            });
            ScalarField::from_raw(grid, spectral::inverse(&grid, spec))
        }
        fd => central_laplacian(f, fd),
    })
}

pub fn divergence(v: &VectorField, scheme: DiffScheme) -> Result<ScalarField, FieldError> {
    v.check_finite()?;
    let grid = *v.grid();
    let mut acc = vec![0.0; grid.len()];
    for (a, comp) in v.components().iter().enumerate() {
        let da = match scheme {
            DiffScheme::Spectral => {
                let mut spec = spectral::forward(&grid, comp.values());
                let kd = spectral::derivative_table(&grid);
                spectral::apply_multiplier(&grid, &mut spec, |idx| Complex64::new(0.0, kd[idx[a]]));
                spectral::inverse(&grid, spec)
            }
            fd => central_derivative(comp, a, fd).into_values(),
        };
        for (s, x) in acc.iter_mut().zip(da) {
            *s += x;
        }
    }
    Ok(ScalarField::from_raw(grid, acc))
}

/// Jacobian `J[i][j] = ∂_j y_i`.
pub fn jacobian(y: &VectorField, scheme: DiffScheme) -> Result<Vec<Vec<ScalarField>>, FieldError> {
    y.components()
        .iter()
        .map(|c| gradient(c, scheme).map(VectorField::into_components))
        .collect()
}

/// Zeroes the upper third of modes on every axis.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let mut spec = spectral::forward(&grid, f.values());
    for (i, c) in spec.iter_mut().enumerate() {
        if !spectral::dealias_keep(&grid, i) {
            *c = Complex64::default();
        }
    }
    ScalarField::from_raw(grid, spectral::inverse(&grid, spec))
}

/// `Σ_j v_j J_ij` given a precomputed Jacobian of `y`.
pub(crate) fn contract(v: &VectorField, jac: &[Vec<ScalarField>]) -> VectorField {
    let grid = *v.grid();
    let d = grid.dim();
    let comps = (0..d)
        .map(|i| {
            let vals = (0..grid.len())
                .map(|x| {
                    (0..d)
                        .map(|j| v.component(j).values()[x] * jac[i][j].values()[x])
                        .sum()
                })
                .collect();
            ScalarField::from_raw(grid, vals)
        })
        .collect();
    VectorField::from_raw(grid, comps)
}

/// Transport term `(v, ∂ₓ) y`: component `i` is `Σ_j v_j ∂_j y_i`.
pub fn advect(
    v: &VectorField,
    y: &VectorField,
    disc: Discretization,
) -> Result<VectorField, FieldError> {
    if v.grid() != y.grid() {
        return Err(FieldError::GridMismatch);
    }
    v.check_finite()?;
    let jac = jacobian(y, disc.scheme)?;
    let out = contract(v, &jac);
    Ok(if disc.dealias && disc.scheme == DiffScheme::Spectral {
        VectorField::from_raw(
            *out.grid(),
            out.components().iter().map(dealias).collect(),
        )
    } else {
        out
    })
}

/// `max_{i<j, x} |∂_i y_j − ∂_j y_i|`; zero exactly for discrete gradients.
pub fn curl_defect(y: &VectorField, scheme: DiffScheme) -> Result<f64, FieldError> {
    let grid: Grid = *y.grid();
    let d = grid.dim();
    if d < 2 {
        return Err(FieldError::UnsupportedDimension(d));
    }
    let jac = jacobian(y, scheme)?;
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            // ∂_i y_j − ∂_j y_i = J[j][i] − J[i][j]
            for (a, b) in jac[j][i].values().iter().zip(jac[i][j].values()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}
