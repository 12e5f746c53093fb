//! Monte Carlo check of a computed solution through its forward-backward
//! stochastic representation.
//!
//! Let `ȳ(τ,x) = ŷ(T−τ,x)` and `η̄(τ,x) = η(T−τ,x)`. Reversing time in the
//! equation for `ŷ` gives
//!
//! ```text
//! ∂_τ ȳ + νΔȳ − (ȳ + η̄, ∂ₓ)ȳ + f̄ = 0,   ȳ(T) = φ,
//! ```
//!
//! so with `dX = −(ȳ + η̄)(s, X) ds + √(2ν) dW`, `X_τ = x`, the
//! Feynman–Kac formula yields
//!
//! ```text
//! ȳ(τ,x) = E[ φ(X_T) + ∫_τ^T f̄(s, X_s, ȳ(s, X_s)) ds ].
//! ```
//!
//! Both sides are computed independently: the left from the solver, the
//! right by Euler–Maruyama paths through the interpolated solver field.
//! The martingale term of the backward equation has zero mean and is never
//! simulated.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{interpolate_into, FieldError, Grid, VectorField};
use crate::noise::{eta_calculus, NoiseError, NoisePath};
use crate::rng;
use crate::solver::{forcing_f, SolverError, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FbsdeError {
    #[error("invalid Monte Carlo parameter: {0}")]
    Parameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt_mc: f64,
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
}

impl McConfig {
    pub fn validate(&self) -> Result<(), FbsdeError> {
        if self.n_paths < 100 {
            return Err(FbsdeError::Parameter(format!(
                "need at least 100 paths, got {}",
                self.n_paths
            )));
        }
        if self.antithetic && self.n_paths % 2 != 0 {
            return Err(FbsdeError::Parameter("antithetic sampling needs an even path count".into()));
        }
        if !(self.dt_mc.is_finite() && self.dt_mc > 0.0) {
            return Err(FbsdeError::Parameter(format!("dt_mc {} must be positive", self.dt_mc)));
        }
        Ok(())
    }
}

/// Piecewise-linear-in-time field sampled at increasing times.
struct Timeline {
    times: Vec<f64>,
    fields: Vec<VectorField>,
}

impl Timeline {
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64], scratch: &mut [f64]) -> Result<(), FieldError> {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return interpolate_into(&self.fields[0], x, out);
        }
        if t >= self.times[n - 1] {
            return interpolate_into(&self.fields[n - 1], x, out);
        }
        let hi = self.times.partition_point(|&s| s <= t).min(n - 1);
        let lo = hi - 1;
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        interpolate_into(&self.fields[lo], x, out)?;
        interpolate_into(&self.fields[hi], x, scratch)?;
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o = (1.0 - w) * *o + w * *s;
        }
        Ok(())
    }
}

/// Interpolated solver fields in forward (un-reversed) time.
struct Fields {
    grid: Grid,
    horizon: f64,
    yhat: Timeline,
    eta: Timeline,
    forcing: Timeline,
    phi: VectorField,
}

impl Fields {
    fn new(traj: &Trajectory, eta_path: &NoisePath, nu: f64) -> Result<Self, FbsdeError> {
        let grid = *traj.grid();
        if *eta_path.grid() != grid {
            return Err(FieldError::GridMismatch.into());
        }
        let tg = *eta_path.time_grid();
        if tg != *traj.time_grid() {
            return Err(FbsdeError::Precondition(
                "trajectory and noise path use different time grids".into(),
            ));
        }
        let idx = traj.snapshot_indices();
        if idx.first() != Some(&0) {
            return Err(FbsdeError::Precondition("trajectory lacks the initial snapshot".into()));
        }
        let forcing = idx
            .iter()
            .zip(traj.yhat())
            .map(|(&k, yh)| Ok(forcing_f(eta_calculus(eta_path, k)?, yh, nu)?))
            .collect::<Result<Vec<_>, FbsdeError>>()?;
        let eta = if eta_path.is_zero_kind() {
            Timeline {
                times: vec![0.0],
                fields: vec![eta_path.eta(0).clone()],
            }
        } else {
            Timeline {
                times: (0..=tg.n_steps()).map(|k| tg.time(k)).collect(),
                fields: (0..=tg.n_steps()).map(|k| eta_path.eta(k).clone()).collect(),
            }
        };
        Ok(Self {
            grid,
            horizon: tg.horizon(),
            yhat: Timeline {
                times: traj.snapshot_times(),
                fields: traj.yhat().to_vec(),
            },
            eta,
            forcing: Timeline {
                times: traj.snapshot_times(),
                fields: forcing,
            },
            phi: traj.yhat()[0].clone(),
        })
    }

    fn max_snapshot_gap(&self) -> f64 {
        self.yhat
            .times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// Forward paths started at `(τ, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    /// `X_T` per path, not wrapped into the box.
    pub endpoints: Vec<Vec<f64>>,
    /// `φ(X_T) + ∫ f̄ ds` per path.
    pub values: Vec<Vec<f64>>,
    /// Euler–Maruyama step count.
    pub n_steps: usize,
    /// Paths that left the box or entered its boundary strip.
    pub escaped: usize,
}

fn check_query(fields: &Fields, tau: f64, x: &[f64], mc: &McConfig) -> Result<usize, FbsdeError> {
    mc.validate()?;
    let t = fields.horizon;
    if !(tau >= 0.0 && tau < t) {
        return Err(FbsdeError::Precondition(format!("τ = {tau} outside [0, {t})")));
    }
    if t - tau < 2.0 * mc.dt_mc {
        return Err(FbsdeError::Precondition(format!(
            "T − τ = {} shorter than two Monte Carlo steps",
            t - tau
        )));
    }
    let d = fields.grid.dim();
    let l = fields.grid.box_length();
    if x.len() != d || x.iter().any(|v| !(0.0..l).contains(v)) {
        return Err(FbsdeError::Precondition(format!("start point {x:?} outside the box")));
    }
    if fields.max_snapshot_gap() > 4.0 * mc.dt_mc * (1.0 + 1e-9) {
        return Err(FbsdeError::Precondition(format!(
            "snapshot spacing {} exceeds 4·dt_mc",
            fields.max_snapshot_gap()
        )));
    }
    Ok(((t - tau) / mc.dt_mc - 1e-9).ceil() as usize)
}

fn run_paths(
    fields: &Fields,
    tau: f64,
    x: &[f64],
    nu: f64,
    mc: &McConfig,
    n_steps: usize,
) -> Result<PathEnsemble, FbsdeError> {
    let d = fields.grid.dim();
    let l = fields.grid.box_length();
    let strip = 2.0 * fields.grid.spacing();
    let h = (fields.horizon - tau) / n_steps as f64;
    let diffusion = (2.0 * nu * h).sqrt();
    let groups = if mc.antithetic { mc.n_paths / 2 } else { mc.n_paths };
    let signs: &[f64] = if mc.antithetic { &[1.0, -1.0] } else { &[1.0] };
    type PathOut = (Vec<f64>, Vec<f64>, bool);
    let per_group: Vec<Result<Vec<PathOut>, FieldError>> = (0..groups)
        .into_par_iter()
        .map(|g| {
            let mut normals = vec![0.0; n_steps * d];
            let mut rng = rng::stream(mc.seed, "fbsde/paths", g as u64);
            for z in normals.iter_mut() {
                *z = rng.sample(StandardNormal);
            }
            let mut a = vec![0.0; d];
            let mut b = vec![0.0; d];
            let mut scratch = vec![0.0; d];
            signs
                .iter()
                .map(|&sign| {
                    let mut pos = x.to_vec();
                    let mut integral = vec![0.0; d];
                    let mut escaped = false;
                    for j in 0..n_steps {
                        let s = tau + j as f64 * h;
                        let t = fields.horizon - s;
                        fields.forcing.eval(t, &pos, &mut a, &mut scratch)?;
                        for (acc, v) in integral.iter_mut().zip(&a) {
                            *acc += h * v;
                        }
                        fields.yhat.eval(t, &pos, &mut a, &mut scratch)?;
                        fields.eta.eval(t, &pos, &mut b, &mut scratch)?;
                        for c in 0..d {
                            pos[c] += -(a[c] + b[c]) * h + diffusion * sign * normals[j * d + c];
                            if pos[c] < strip || pos[c] > l - strip {
                                escaped = true;
                            }
                        }
                    }
                    interpolate_into(&fields.phi, &pos, &mut a)?;
                    let value = a.iter().zip(&integral).map(|(p, i)| p + i).collect();
                    Ok((pos, value, escaped))
                })
                .collect()
        })
        .collect();
    let mut endpoints = Vec::with_capacity(mc.n_paths);
    let mut values = Vec::with_capacity(mc.n_paths);
    let mut escaped = 0;
    for group in per_group {
        for (pos, value, esc) in group? {
            endpoints.push(pos);
            values.push(value);
            escaped += esc as usize;
        }
    }
    Ok(PathEnsemble {
        endpoints,
        values,
        n_steps,
        escaped,
    })
}

/// Euler–Maruyama paths of `dX = −(ȳ + η̄) ds + √(2ν) dW` from `X_τ = x`.
/// Path group `g` (a single path, or an antithetic pair) draws from
/// stream `g` of `mc.seed`, so results do not depend on the thread count.
pub fn simulate_forward(
    traj: &Trajectory,
    eta_path: &NoisePath,
    nu: f64,
    tau: f64,
    x: &[f64],
    mc: &McConfig,
) -> Result<PathEnsemble, FbsdeError> {
    let fields = Fields::new(traj, eta_path, nu)?;
    let n_steps = check_query(&fields, tau, x, mc)?;
    run_paths(&fields, tau, x, nu, mc, n_steps)
}

/// One row of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McVerifyRow {
    pub tau: f64,
    pub x: Vec<f64>,
    /// Monte Carlo estimate of `E[φ(X_T) + ∫ f̄ ds]`, per component.
    pub estimate: Vec<f64>,
    /// `ȳ(τ, x)` from the solver, per component.
    pub solver_value: Vec<f64>,
    /// Euclidean norm of `estimate − solver_value`.
    pub residual: f64,
    /// Standard error per component.
    pub stderr_components: Vec<f64>,
    /// Euclidean norm of the per-component standard errors.
    pub stderr: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub escaped: usize,
    /// Set when the standard error exceeds half of `sup|φ|`.
    pub inconclusive: bool,
}

impl McVerifyRow {
    /// Whether `residual <= k·stderr + slack`.
    pub fn within(&self, k: f64, slack: f64) -> bool {
        self.residual <= k * self.stderr + slack
    }
}

fn summarize(values: &[Vec<f64>], antithetic: bool, d: usize) -> (Vec<f64>, Vec<f64>) {
    // antithetic pairs are averaged first: one independent sample per pair
    let samples: Vec<Vec<f64>> = if antithetic {
        values
            .chunks(2)
            .map(|p| (0..d).map(|c| 0.5 * (p[0][c] + p[1][c])).collect())
            .collect()
    } else {
        values.to_vec()
    };
    let m = samples.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|c| samples.iter().map(|s| s[c]).sum::<f64>() / m)
        .collect();
    let se = (0..d)
        .map(|c| {
            let var = samples.iter().map(|s| (s[c] - mean[c]).powi(2)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        })
        .collect();
    (mean, se)
}

/// Compares `ȳ(τ, x)` with its Monte Carlo representation.
pub fn verify_point(
    traj: &Trajectory,
    eta_path: &NoisePath,
    nu: f64,
    tau: f64,
    x: &[f64],
    mc: &McConfig,
) -> Result<McVerifyRow, FbsdeError> {
    let fields = Fields::new(traj, eta_path, nu)?;
    verify_with(&fields, nu, tau, x, mc)
}

fn verify_with(fields: &Fields, nu: f64, tau: f64, x: &[f64], mc: &McConfig) -> Result<McVerifyRow, FbsdeError> {
    let n_steps = check_query(fields, tau, x, mc)?;
    let ens = run_paths(fields, tau, x, nu, mc, n_steps)?;
    let d = fields.grid.dim();
    let (estimate, se) = summarize(&ens.values, mc.antithetic, d);
    let mut solver_value = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    fields
        .yhat
        .eval(fields.horizon - tau, x, &mut solver_value, &mut scratch)?;
    let residual = estimate
        .iter()
        .zip(&solver_value)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let stderr = se.iter().map(|s| s * s).sum::<f64>().sqrt();
    Ok(McVerifyRow {
        tau,
        x: x.to_vec(),
        estimate,
        solver_value,
        residual,
        stderr_components: se,
        stderr,
        n_paths: mc.n_paths,
        n_steps,
        escaped: ens.escaped,
        inconclusive: stderr > 0.5 * fields.phi.sup_norm(),
    })
}

/// Verification of several query points against one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McVerifyReport {
    pub rows: Vec<McVerifyRow>,
    /// How the acceptance slack is composed.
    pub tolerance_note: String,
}

pub const TOLERANCE_NOTE: &str = "residual <= 3 stderr + slack; the slack covers the first-order \
weak error of Euler-Maruyama, multilinear interpolation of the solver field in space and linear \
interpolation in time, none of which average out with more paths";

/// Runs [`verify_point`] at every query; query `i` uses the seed derived
/// from `mc.seed` and `i`.
pub fn verify_points(
    traj: &Trajectory,
    eta_path: &NoisePath,
    nu: f64,
    queries: &[(f64, Vec<f64>)],
    mc: &McConfig,
) -> Result<McVerifyReport, FbsdeError> {
    let fields = Fields::new(traj, eta_path, nu)?;
    let rows = queries
        .iter()
        .enumerate()
        .map(|(i, (tau, x))| {
            let cfg = McConfig {
                seed: rng::derive_seed(mc.seed, &format!("fbsde/query/{i}")),
                ..*mc
            };
            verify_with(&fields, nu, *tau, x, &cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(McVerifyReport {
        rows,
        tolerance_note: TOLERANCE_NOTE.into(),
    })
}

/// One member `m` of a mollified family.
#[derive(Debug, Clone, Copy)]
pub struct FamilyMember<'a> {
    pub traj: &'a Trajectory,
    pub phi: &'a VectorField,
    pub eta: &'a NoisePath,
    pub nu: f64,
}

/// Per-member data of [`uniform_bound_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberBound {
    pub sup_phi: f64,
    /// `sup_t sup_x |y|`
    pub observed: f64,
    pub sup_eta: f64,
    pub sup_grad_eta: f64,
    /// `sup |νΔη − (η, ∂ₓ)η|`
    pub sup_drift_forcing: f64,
    /// Gronwall envelope, present when the noise is not identically zero.
    pub envelope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub pass: bool,
    /// `max_m sup_t sup_x |y_m|`
    pub observed: f64,
    /// `max_m sup|φ_m|`
    pub sup_phi: f64,
    pub members: Vec<MemberBound>,
    pub derivation: String,
}

pub const ENVELOPE_DERIVATION: &str = "At a spatial maximum of |ŷ|² the transport term vanishes \
and νΔ|ŷ|² − 2ν|∂ŷ|² <= 0, so M(t) = sup|ŷ|² obeys M' <= 2(ŷ, f). With f = g − (ŷ,∂)η, \
g = νΔη − (η,∂)η, A = sup|g|² and G = sup|∂η| (Frobenius), 2(ŷ,g) <= M + A and \
−2(ŷ,(ŷ,∂)η) <= 2G M. Gronwall gives M(t) <= (M(0) + A t) exp((1 + 2G) t), hence \
sup|y| <= sup|η| + sqrt((sup|φ|² + A T) exp((1 + 2G) T)).";

/// Checks that the family is bounded uniformly in `m`: by the largest
/// `sup|φ_m|` when there is no noise, by each member's Gronwall envelope
/// otherwise.
pub fn uniform_bound_check(family: &[FamilyMember<'_>]) -> Result<BoundVerdict, FbsdeError> {
    if family.len() < 3 {
        return Err(FbsdeError::Precondition(format!(
            "need at least 3 family members, got {}",
            family.len()
        )));
    }
    let mut members = Vec::with_capacity(family.len());
    let mut noiseless = true;
    for m in family {
        let observed = m
            .traj
            .diagnostics()
            .iter()
            .map(|d| d.sup_y)
            .fold(0.0, f64::max);
        let sup_phi = m.phi.sup_norm();
        let tg = m.eta.time_grid();
        let (mut se, mut sg, mut sa) = (0.0f64, 0.0f64, 0.0f64);
        for k in 0..=tg.n_steps() {
            let c = eta_calculus(m.eta, k)?;
            se = se.max(c.eta.sup_norm());
            let grid = *c.eta.grid();
            for i in 0..grid.len() {
                let fro: f64 = c
                    .jacobian
                    .iter()
                    .flatten()
                    .map(|f| f.values()[i].powi(2))
                    .sum::<f64>()
                    .sqrt();
                sg = sg.max(fro);
            }
            let g = forcing_f(c, &VectorField::zeros(grid), m.nu)?;
            sa = sa.max(g.sup_norm());
            if m.eta.is_zero_kind() {
                break;
            }
        }
        let is_zero = se == 0.0 && sg == 0.0 && sa == 0.0;
        noiseless &= is_zero;
        let t = tg.horizon();
        let envelope = (!is_zero).then(|| {
            se + ((sup_phi * sup_phi + sa * sa * t) * ((1.0 + 2.0 * sg) * t).exp()).sqrt()
        });
        members.push(MemberBound {
            sup_phi,
            observed,
            sup_eta: se,
            sup_grad_eta: sg,
            sup_drift_forcing: sa,
            envelope,
        });
    }
    let observed = members.iter().map(|m| m.observed).fold(0.0, f64::max);
    let sup_phi = members.iter().map(|m| m.sup_phi).fold(0.0, f64::max);
    let pass = if noiseless {
        observed <= (1.0 + 1e-6) * sup_phi
    } else {
        members
            .iter()
            .all(|m| m.observed <= m.envelope.unwrap_or((1.0 + 1e-6) * m.sup_phi))
    };
    Ok(BoundVerdict {
        pass,
        observed,
        sup_phi,
        members,
        derivation: ENVELOPE_DERIVATION.into(),
    })
}
