//! Time integration of the noise-shifted equation.
//!
//! Writing `y = ŷ + η` and substituting into the integral form of the
//! equation removes the time-rough term:
//!
//! ```text
//! ∂_t ŷ = νΔŷ − (ŷ + η, ∂ₓ)ŷ + f(t, x, ŷ),
//! f     = νΔη − (η, ∂ₓ)η − (ŷ, ∂ₓ)η,
//! ```
//!
//! where `((v, ∂ₓ)w)_i = Σ_j v_j ∂_j w_i`. The transport terms add up to
//! `(y, ∂ₓ)y`, so the right-hand side equals `νΔy − (y, ∂ₓ)y`.
//!
//! Diffusion is treated implicitly (Crank–Nicolson) or exactly (integrating
//! factor); transport and forcing by Heun's predictor-corrector, with the
//! corrector evaluated at `η(t_{n+1})`. A fully explicit SSP-RK2 variant
//! with centered differences is provided for non-smooth data: under its
//! step restrictions each stage is a convex combination of neighbouring
//! values, so the discrete maximum principle holds exactly.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::spectral;
use crate::fields::{
    contract, curl_defect, dealias, jacobian, laplacian, DiffScheme, Discretization, FieldError, Grid,
    ScalarField, VectorField,
};
use crate::noise::{eta_calculus, EtaCalculus, NoiseError, NoisePath, TimeGrid};

/// Boundary-strip activity above which `solve` records a warning.
pub const BOUNDARY_WARNING: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver parameter: {0}")]
    Parameter(String),
    #[error("step size {dt} too large at t = {time}; use dt <= {suggested}")]
    StepSize { dt: f64, suggested: f64, time: f64 },
    #[error("solution diverged at t = {time}")]
    Divergence { time: f64 },
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    /// Crank–Nicolson diffusion, Heun transport.
    #[default]
    ImexCn,
    /// Integrating-factor diffusion, Heun transport.
    Etd,
    /// Explicit two-stage strong-stability-preserving Runge–Kutta.
    SspRk2,
    /// Integrating-factor diffusion, classical fourth-order Runge–Kutta
    /// transport; half-step noise is interpolated linearly between nodes.
    IfRk4,
}

fn default_stride() -> usize {
    1
}

fn default_strip() -> usize {
    2
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub nu: f64,
    pub dt: f64,
    #[serde(default)]
    pub scheme: TimeScheme,
    #[serde(default)]
    pub discretization: Discretization,
    pub cfl_safety: f64,
    /// Store a snapshot every this many steps (the final state is always kept).
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Width in cells of the strip monitored along the box faces.
    #[serde(default = "default_strip")]
    pub strip_width: usize,
    /// Transport and forcing terms; off leaves the heat equation.
    #[serde(default = "default_true")]
    pub nonlinear: bool,
}

impl SolverConfig {
    pub fn new(nu: f64, dt: f64) -> Self {
        Self {
            nu,
            dt,
            scheme: TimeScheme::ImexCn,
            discretization: Discretization::spectral(),
            cfl_safety: 1.0,
            snapshot_stride: 1,
            strip_width: 2,
            nonlinear: true,
        }
    }

    pub fn with_scheme(mut self, scheme: TimeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_discretization(mut self, disc: Discretization) -> Self {
        self.discretization = disc;
        self
    }

    pub fn with_snapshot_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(SolverError::Parameter(format!("viscosity {} must be positive", self.nu)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SolverError::Parameter(format!("dt {} must be positive", self.dt)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(SolverError::Parameter(format!(
                "cfl_safety {} must lie in (0, 1]",
                self.cfl_safety
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(SolverError::Parameter("snapshot stride must be positive".into()));
        }
        Ok(())
    }
}

/// Diagnostics recorded at every time node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub time: f64,
    pub sup_y: f64,
    /// Only for `d >= 2`.
    pub curl_defect: Option<f64>,
    /// `∫|y|²`, only for `d = 1`.
    pub energy: Option<f64>,
    /// `max |y|` over nodes within the monitored strip.
    pub boundary_max: f64,
    /// Smallest `C` with `(f, ŷ) <= C (1 + |ŷ|²)` at every node.
    pub growth: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    time_grid: TimeGrid,
    snapshot_indices: Vec<usize>,
    yhat: Vec<VectorField>,
    y: Vec<VectorField>,
    diagnostics: Vec<StepDiagnostics>,
    warnings: Vec<String>,
}

impl Trajectory {
    /// Trajectory with `ŷ = y`, as produced by exact noiseless solutions.
    pub(crate) fn from_velocity(
        time_grid: TimeGrid,
        snapshot_indices: Vec<usize>,
        y: Vec<VectorField>,
        diagnostics: Vec<StepDiagnostics>,
    ) -> Self {
        Self {
            time_grid,
            snapshot_indices,
            yhat: y.clone(),
            y,
            diagnostics,
            warnings: Vec::new(),
        }
    }

    /// Rebuilds a trajectory from stored `ŷ` snapshots; `y = ŷ + η` is
    /// recomputed and no diagnostics are attached.
    pub fn from_snapshots(
        snapshot_indices: Vec<usize>,
        yhat: Vec<VectorField>,
        eta_path: &NoisePath,
    ) -> Result<Self, SolverError> {
        let tg = *eta_path.time_grid();
        if snapshot_indices.len() != yhat.len() || yhat.is_empty() {
            return Err(SolverError::Parameter("snapshot indices and fields differ in number".into()));
        }
        if snapshot_indices.windows(2).any(|w| w[0] >= w[1])
            || snapshot_indices.last().is_some_and(|&k| k > tg.n_steps())
        {
            return Err(SolverError::Parameter("snapshot indices must increase within the time grid".into()));
        }
        let y = snapshot_indices
            .iter()
            .zip(&yhat)
            .map(|(&k, f)| {
                if f.grid() != eta_path.grid() {
                    return Err(FieldError::GridMismatch);
                }
                f.add(eta_path.eta(k))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            time_grid: tg,
            snapshot_indices,
            yhat,
            y,
            diagnostics: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn grid(&self) -> &Grid {
        self.y[0].grid()
    }

    /// Time-grid indices of the stored snapshots, ascending.
    pub fn snapshot_indices(&self) -> &[usize] {
        &self.snapshot_indices
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshot_indices.iter().map(|&k| self.time_grid.time(k)).collect()
    }

    pub fn yhat(&self) -> &[VectorField] {
        &self.yhat
    }

    pub fn y(&self) -> &[VectorField] {
        &self.y
    }

    /// Snapshot stored at time-grid index `k`, if any.
    pub fn y_at_index(&self, k: usize) -> Option<&VectorField> {
        self.snapshot_indices
            .binary_search(&k)
            .ok()
            .map(|i| &self.y[i])
    }

    pub fn yhat_at_index(&self, k: usize) -> Option<&VectorField> {
        self.snapshot_indices
            .binary_search(&k)
            .ok()
            .map(|i| &self.yhat[i])
    }

    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Largest growth constant observed over the run.
    pub fn growth_constant(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.growth).fold(0.0, f64::max)
    }
}

/// `sup_x |y(t_k, x)|` at every time node.
pub fn max_norm_series(traj: &Trajectory) -> Vec<f64> {
    traj.diagnostics.iter().map(|d| d.sup_y).collect()
}

/// `f = νΔη − (η, ∂ₓ)η − (ŷ, ∂ₓ)η`, evaluated pointwise from the
/// precomputed derivatives of `η`.
pub fn forcing_f(calc: &EtaCalculus, yhat: &VectorField, nu: f64) -> Result<VectorField, SolverError> {
    if calc.eta.grid() != yhat.grid() {
        return Err(FieldError::GridMismatch.into());
    }
    let v = calc.eta.add(yhat)?;
    let transport = contract(&v, &calc.jacobian);
    Ok(calc.laplacian.scale(nu).sub(&transport)?)
}

/// Explicit part `−(ŷ + η, ∂ₓ)ŷ + f`, products dealiased when configured.
fn explicit_rhs(
    yhat: &VectorField,
    calc: &EtaCalculus,
    cfg: &SolverConfig,
) -> Result<VectorField, SolverError> {
    let disc = cfg.discretization;
    let y = yhat.add(&calc.eta)?;
    let jy = jacobian(yhat, disc.scheme)?;
    // (y, ∂)ŷ + (y, ∂)η = (ŷ+η, ∂)ŷ + (η, ∂)η + (ŷ, ∂)η
    let mut products = contract(&y, &jy).add(&contract(&y, &calc.jacobian))?;
    if disc.dealias && disc.scheme == DiffScheme::Spectral {
        products = VectorField::new(products.components().iter().map(dealias).collect())?;
    }
    Ok(calc.laplacian.scale(cfg.nu).sub(&products)?)
}

/// Diffusion symbol `λ(k)` with `Δ e^{ikx} = −λ(k) e^{ikx}`.
fn diffusion_symbol(grid: &Grid, scheme: DiffScheme) -> Vec<f64> {
    let d = grid.dim();
    let h = grid.spacing();
    let per_axis: Vec<f64> = match scheme {
        DiffScheme::Spectral => spectral::k2_table(grid),
        fd => (0..grid.n())
            .map(|j| fd.second_symbol(spectral::wavenumber(grid, j) * h) / (h * h))
            .collect(),
    };
    (0..grid.len())
        .map(|i| {
            let idx = grid.unravel(i);
            (0..d).map(|a| per_axis[idx[a]]).sum()
        })
        .collect()
}

fn spectra(f: &VectorField) -> Vec<Vec<Complex64>> {
    f.components()
        .iter()
        .map(|c| spectral::forward(c.grid(), c.values()))
        .collect()
}

fn from_spectra(grid: &Grid, s: Vec<Vec<Complex64>>) -> VectorField {
    VectorField::from_raw(
        *grid,
        s.into_iter()
            .map(|c| ScalarField::from_raw(*grid, spectral::inverse(grid, c)))
            .collect(),
    )
}

/// Builds a spectrum mode by mode from the same mode of several inputs.
fn map_modes(
    inputs: &[&Vec<Vec<Complex64>>],
    f: impl Fn(&[Complex64], usize) -> Complex64,
) -> Vec<Vec<Complex64>> {
    let mut buf = vec![Complex64::default(); inputs.len()];
    (0..inputs[0].len())
        .map(|c| {
            (0..inputs[0][c].len())
                .map(|i| {
                    for (b, inp) in buf.iter_mut().zip(inputs) {
                        *b = inp[c][i];
                    }
                    f(&buf, i)
                })
                .collect()
        })
        .collect()
}

fn explicit_limit(grid: &Grid, cfg: &SolverConfig) -> f64 {
    let lmax = diffusion_symbol(grid, cfg.discretization.scheme)
        .into_iter()
        .fold(0.0, f64::max);
    2.0 / (cfg.nu * lmax)
}

/// Largest step accepted for a state of sup-norm `speed`.
fn cfl_limit(grid: &Grid, cfg: &SolverConfig, speed: f64) -> f64 {
    cfg.cfl_safety * grid.spacing() / speed.max(1.0)
}

/// Advances `ŷ(t_k)` to `ŷ(t_{k+1})`.
pub fn step(
    yhat: &VectorField,
    eta_path: &NoisePath,
    k: usize,
    cfg: &SolverConfig,
) -> Result<VectorField, SolverError> {
    cfg.validate()?;
    let grid = *yhat.grid();
    if *eta_path.grid() != grid {
        return Err(FieldError::GridMismatch.into());
    }
    let tg = eta_path.time_grid();
    if k >= tg.n_steps() {
        return Err(SolverError::Parameter(format!("no step after index {k}")));
    }
    let time = tg.time(k);
    yhat.check_finite().map_err(|_| SolverError::Divergence { time })?;
    let dt = cfg.dt;
    let speed = yhat.add(eta_path.eta(k))?.sup_norm();
    let mut limit = cfl_limit(&grid, cfg, speed);
    if cfg.scheme == TimeScheme::SspRk2 {
        limit = limit.min(explicit_limit(&grid, cfg));
    }
    if dt > limit * (1.0 + 1e-12) {
        return Err(SolverError::StepSize {
            dt,
            suggested: limit,
            time,
        });
    }
    let now = eta_calculus(eta_path, k)?;
    let next = eta_calculus(eta_path, k + 1)?;
    let rhs = |state: &VectorField, calc: &EtaCalculus| -> Result<VectorField, SolverError> {
        if cfg.nonlinear {
            explicit_rhs(state, calc, cfg)
        } else {
            Ok(VectorField::zeros(grid))
        }
    };
    let out = match cfg.scheme {
        TimeScheme::SspRk2 => {
            let op = |state: &VectorField, calc: &EtaCalculus| -> Result<VectorField, SolverError> {
                let lap = state
                    .components()
                    .iter()
                    .map(|c| laplacian(c, cfg.discretization.scheme))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(VectorField::new(lap)?.scale(cfg.nu).add(&rhs(state, calc)?)?)
            };
            let stage = yhat.axpy(dt, &op(yhat, now)?)?;
            let stage2 = stage.axpy(dt, &op(&stage, next)?)?;
            yhat.scale(0.5).axpy(0.5, &stage2)?
        }
        TimeScheme::ImexCn | TimeScheme::Etd => {
            let lam = diffusion_symbol(&grid, cfg.discretization.scheme);
            let y0 = spectra(yhat);
            let n0 = spectra(&rhs(yhat, now)?);
            let (pred, corr): (
                Box<dyn Fn(Complex64, Complex64, f64) -> Complex64>,
                Box<dyn Fn(Complex64, Complex64, Complex64, f64) -> Complex64>,
            ) = match cfg.scheme {
                TimeScheme::ImexCn => (
                    Box::new(move |y, n, l| {
                        let a = 0.5 * dt * cfg.nu * l;
                        (y * (1.0 - a) + n * dt) / (1.0 + a)
                    }),
                    Box::new(move |y, n0, n1, l| {
                        let a = 0.5 * dt * cfg.nu * l;
                        (y * (1.0 - a) + (n0 + n1) * (0.5 * dt)) / (1.0 + a)
                    }),
                ),
                _ => (
                    Box::new(move |y, n, l| (y + n * dt) * (-cfg.nu * l * dt).exp()),
                    Box::new(move |y, n0, n1, l| {
                        let e = (-cfg.nu * l * dt).exp();
                        y * e + (n0 * e + n1) * (0.5 * dt)
                    }),
                ),
            };
            let star: Vec<Vec<Complex64>> = y0
                .iter()
                .zip(&n0)
                .map(|(yc, nc)| {
                    yc.iter()
                        .zip(nc)
                        .zip(&lam)
                        .map(|((&y, &n), &l)| pred(y, n, l))
                        .collect()
                })
                .collect();
            let star = from_spectra(&grid, star);
            let n1 = spectra(&rhs(&star, next)?);
            let out: Vec<Vec<Complex64>> = y0
                .iter()
                .zip(&n0)
                .zip(&n1)
                .map(|((yc, a), b)| {
                    yc.iter()
                        .zip(a)
                        .zip(b)
                        .zip(&lam)
                        .map(|(((&y, &p), &q), &l)| corr(y, p, q, l))
                        .collect()
                })
                .collect();
            from_spectra(&grid, out)
        }
        TimeScheme::IfRk4 => {
            let lam = diffusion_symbol(&grid, cfg.discretization.scheme);
            let half: Vec<f64> = lam.iter().map(|l| (-0.5 * cfg.nu * l * dt).exp()).collect();
            let mid = EtaCalculus::midpoint(now, next)?;
            let y0 = spectra(yhat);
            let a = spectra(&rhs(yhat, now)?);
            let s1 = map_modes(&[&y0, &a], |v, i| half[i] * (v[0] + v[1] * (0.5 * dt)));
            let b = spectra(&rhs(&from_spectra(&grid, s1), &mid)?);
            let s2 = map_modes(&[&y0, &b], |v, i| half[i] * v[0] + v[1] * (0.5 * dt));
            let c = spectra(&rhs(&from_spectra(&grid, s2), &mid)?);
            let s3 = map_modes(&[&y0, &c], |v, i| {
                let e = half[i] * half[i];
                e * v[0] + v[1] * (half[i] * dt)
            });
            let d = spectra(&rhs(&from_spectra(&grid, s3), next)?);
            let out = map_modes(&[&y0, &a, &b, &c, &d], |v, i| {
                let e = half[i] * half[i];
                e * v[0] + (e * v[1] + 2.0 * half[i] * (v[2] + v[3]) + v[4]) * (dt / 6.0)
            });
            from_spectra(&grid, out)
        }
    };
    out.check_finite().map_err(|_| SolverError::Divergence { time: tg.time(k + 1) })?;
    Ok(out)
}

fn diagnose(
    yhat: &VectorField,
    y: &VectorField,
    calc: &EtaCalculus,
    time: f64,
    cfg: &SolverConfig,
) -> Result<StepDiagnostics, SolverError> {
    let grid = *y.grid();
    let mag = y.magnitude();
    let curl = if grid.dim() >= 2 {
        Some(curl_defect(y, cfg.discretization.scheme)?)
    } else {
        None
    };
    let energy = (grid.dim() == 1).then(|| {
        grid.spacing() * y.component(0).values().iter().map(|v| v * v).sum::<f64>()
    });
    let boundary_max = mag
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.in_boundary_strip(*i, cfg.strip_width))
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    let f = forcing_f(calc, yhat, cfg.nu)?;
    let growth = (0..grid.len())
        .map(|i| {
            let fy: f64 = (0..grid.dim())
                .map(|a| f.component(a).values()[i] * yhat.component(a).values()[i])
                .sum();
            let y2: f64 = (0..grid.dim())
                .map(|a| yhat.component(a).values()[i].powi(2))
                .sum();
            fy / (1.0 + y2)
        })
        .fold(0.0, f64::max);
    Ok(StepDiagnostics {
        time,
        sup_y: mag.sup_norm(),
        curl_defect: curl,
        energy,
        boundary_max,
        growth,
    })
}

/// Integrates from `ŷ(0) = φ` over the noise path's time grid.
pub fn solve(phi: &VectorField, eta_path: &NoisePath, cfg: &SolverConfig) -> Result<Trajectory, SolverError> {
    cfg.validate()?;
    let grid = *phi.grid();
    if *eta_path.grid() != grid {
        return Err(FieldError::GridMismatch.into());
    }
    phi.check_finite()?;
    let tg = *eta_path.time_grid();
    if ((tg.dt() - cfg.dt) / cfg.dt).abs() > 1e-9 {
        return Err(SolverError::Parameter(format!(
            "solver dt {} differs from the noise time step {}",
            cfg.dt,
            tg.dt()
        )));
    }
    let mut indices = Vec::new();
    let mut yhats = Vec::new();
    let mut ys = Vec::new();
    let mut diags = Vec::with_capacity(tg.n_steps() + 1);
    let mut warnings = Vec::new();
    let mut state = phi.clone();
    for k in 0..=tg.n_steps() {
        let calc = eta_calculus(eta_path, k)?;
        let y = state.add(eta_path.eta(k))?;
        let diag = diagnose(&state, &y, calc, tg.time(k), cfg)?;
        if diag.boundary_max > BOUNDARY_WARNING && warnings.is_empty() {
            warnings.push(format!(
                "boundary strip activity {:.3e} at t = {}; the periodic box may be truncating the solution",
                diag.boundary_max,
                tg.time(k)
            ));
        }
        diags.push(diag);
        if k % cfg.snapshot_stride == 0 || k == tg.n_steps() {
            indices.push(k);
            yhats.push(state.clone());
            ys.push(y);
        }
        if k < tg.n_steps() {
            state = step(&state, eta_path, k, cfg)?;
        }
    }
    Ok(Trajectory {
        time_grid: tg,
        snapshot_indices: indices,
        yhat: yhats,
        y: ys,
        diagnostics: diags,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn zero_path(grid: Grid, t: f64, dt: f64) -> NoisePath {
        NoisePath::zero(grid, TimeGrid::from_step(t, dt).unwrap())
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.0, 1e-3).validate().is_err());
        assert!(SolverConfig::new(0.1, -1.0).validate().is_err());
        let mut c = SolverConfig::new(0.1, 1e-3);
        c.cfl_safety = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_forcing_without_noise() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let path = zero_path(g, 0.1, 0.01);
        let calc = eta_calculus(&path, 0).unwrap();
        let y = VectorField::from_fn(g, |x| vec![x[0].sin(), x[1].cos()]);
        assert_eq!(forcing_f(calc, &y, 0.3).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn constant_state_is_stationary() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let path = zero_path(g, 0.05, 0.01);
        let phi = VectorField::constant(g, &[0.7, -0.2]);
        for scheme in [TimeScheme::ImexCn, TimeScheme::Etd, TimeScheme::SspRk2] {
            let cfg = SolverConfig::new(0.1, 0.01).with_scheme(scheme);
            let traj = solve(&phi, &path, &cfg).unwrap();
            for y in traj.y() {
                assert!(crate::fields::sup_distance(y, &phi).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn step_size_error_suggests_dt() {
        let g = Grid::new(1, 64, 2.0 * PI).unwrap();
        let path = zero_path(g, 1.0, 0.5);
        let phi = VectorField::constant(g, &[10.0]);
        match step(&phi, &path, 0, &SolverConfig::new(0.1, 0.5)) {
            Err(SolverError::StepSize { suggested, .. }) => {
                assert!((suggested - g.spacing() / 10.0).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn etd_heat_factor_is_exact() {
        let g = Grid::new(1, 32, 2.0 * PI).unwrap();
        let path = zero_path(g, 0.1, 0.01);
        let phi = VectorField::from_fn(g, |x| vec![(3.0 * x[0]).sin()]);
        let mut cfg = SolverConfig::new(0.2, 0.01).with_scheme(TimeScheme::Etd);
        cfg.nonlinear = false;
        let next = step(&phi, &path, 0, &cfg).unwrap();
        let factor = (-0.2 * 9.0 * 0.01f64).exp();
        for i in 0..g.len() {
            let expect = factor * phi.component(0).values()[i];
            assert!((next.component(0).values()[i] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn dt_must_match_noise_grid() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let path = zero_path(g, 0.1, 0.01);
        let phi = VectorField::zeros(g);
        assert!(matches!(
            solve(&phi, &path, &SolverConfig::new(0.1, 0.02)),
            Err(SolverError::Parameter(_))
        ));
    }
}
