//! Exact potential solutions through the Cole–Hopf substitution.
//!
//! For `y₀ = ∇ψ₀` and no noise, `y = −2ν ∇u / u` where `u` solves the heat
//! equation `∂_t u = νΔu` with `u₀ = exp(−ψ₀ / (2ν))`. The heat flow is
//! applied with the exact Fourier multiplier `exp(−ν|k|²t)`, so the only
//! errors are spatial truncation and the final logarithmic derivative.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::spectral;
use crate::fields::{
    contract, curl_defect, gradient, jacobian, laplacian, DiffScheme, FieldError, ScalarField,
    VectorField,
};
use crate::noise::TimeGrid;
use crate::solver::{StepDiagnostics, Trajectory};

/// Smallest admissible value of the heat variable.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ColeHopfError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("heat variable underflows (min u = {min_u:e}); use a larger viscosity or a smaller potential amplitude")]
    Underflow { min_u: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialInit {
    pub psi0: ScalarField,
    pub nu: f64,
}

/// `u₀ = exp(−(ψ₀ − c)/(2ν))`; the gauge `c` centers the exponent and
/// drops out of `∇u/u`.
fn initial_heat(init: &PotentialInit) -> Result<Vec<f64>, ColeHopfError> {
    let v = init.psi0.values();
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let c = 0.5 * (hi + lo);
    let u: Vec<f64> = v.iter().map(|p| (-(p - c) / (2.0 * init.nu)).exp()).collect();
    let min_u = u.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_u >= UNDERFLOW_THRESHOLD) || u.iter().any(|x| !x.is_finite()) {
        return Err(ColeHopfError::Underflow { min_u });
    }
    Ok(u)
}

/// Potential velocity trajectory on `time_grid`, a snapshot at every node.
pub fn solve_potential(init: &PotentialInit, time_grid: &TimeGrid) -> Result<Trajectory, ColeHopfError> {
    if !(init.nu.is_finite() && init.nu > 0.0) {
        return Err(ColeHopfError::Parameter(format!("viscosity {} must be positive", init.nu)));
    }
    init.psi0.check_finite()?;
    let grid = *init.psi0.grid();
    let d = grid.dim();
    let u0 = initial_heat(init)?;
    let u_hat = spectral::forward(&grid, &u0);
    let k2: Vec<f64> = {
        let per_axis = spectral::k2_table(&grid);
        (0..grid.len())
            .map(|i| {
                let idx = grid.unravel(i);
                (0..d).map(|a| per_axis[idx[a]]).sum()
            })
            .collect()
    };
    let mut ys = Vec::with_capacity(time_grid.n_steps() + 1);
    let mut diags = Vec::with_capacity(time_grid.n_steps() + 1);
    for k in 0..=time_grid.n_steps() {
        let t = time_grid.time(k);
        let spec: Vec<Complex64> = u_hat
            .iter()
            .zip(&k2)
            .map(|(c, q)| c * (-init.nu * q * t).exp())
            .collect();
        let u = ScalarField::new(grid, spectral::inverse(&grid, spec))?;
        let min_u = u.values().iter().copied().fold(f64::INFINITY, f64::min);
        if !(min_u >= UNDERFLOW_THRESHOLD) {
            return Err(ColeHopfError::Underflow { min_u });
        }
        // ∇u/u = ∇ ln u; differentiating ln u keeps the mixed partials
        // symmetric, so the discrete curl vanishes to round-off.
        let log_u = u.map(f64::ln);
        let y = gradient(&log_u, DiffScheme::Spectral)?.scale(-2.0 * init.nu);
        diags.push(StepDiagnostics {
            time: t,
            sup_y: y.sup_norm(),
            curl_defect: if d >= 2 {
                Some(curl_defect(&y, DiffScheme::Spectral)?)
            } else {
                None
            },
            energy: (d == 1).then(|| {
                grid.spacing() * y.component(0).values().iter().map(|v| v * v).sum::<f64>()
            }),
            boundary_max: 0.0,
            growth: 0.0,
        });
        ys.push(y);
    }
    Ok(Trajectory::from_velocity(
        *time_grid,
        (0..=time_grid.n_steps()).collect(),
        ys,
        diags,
    ))
}

/// Residual of the Burgers operator at one interior snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub time: f64,
    /// `sup_x |∂_t y − νΔy + (y, ∂ₓ)y|`
    pub sup: f64,
}

/// Plugs consecutive snapshots into `∂_t y − νΔy + (y, ∂ₓ)y`, with `∂_t`
/// taken by centered differences, at every interior snapshot.
pub fn residual_check(traj: &Trajectory, nu: f64) -> Result<Vec<ResidualPoint>, ColeHopfError> {
    let idx = traj.snapshot_indices();
    let ys = traj.y();
    let times = traj.snapshot_times();
    let mut out = Vec::new();
    for i in 1..idx.len().saturating_sub(1) {
        let span = times[i + 1] - times[i - 1];
        let dtdy = ys[i + 1].sub(&ys[i - 1])?.scale(1.0 / span);
        let y = &ys[i];
        let lap = y
            .components()
            .iter()
            .map(|c| laplacian(c, DiffScheme::Spectral))
            .collect::<Result<Vec<_>, _>>()?;
        let adv = contract(y, &jacobian(y, DiffScheme::Spectral)?);
        let r = dtdy.sub(&VectorField::new(lap)?.scale(nu))?.add(&adv)?;
        out.push(ResidualPoint {
            time: times[i],
            sup: r.sup_norm(),
        });
    }
    Ok(out)
}
