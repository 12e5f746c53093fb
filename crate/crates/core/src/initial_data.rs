//! Initial data: fractional Brownian sheets, cutting functions,
//! mollification, and analytic potential or vortical fields.

use std::f64::consts::PI;

use log::warn;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{gradient, DiffScheme, FieldError, Grid, ScalarField, VectorField};
use crate::rng;

/// Largest per-component point count synthesized by exact factorization.
pub const CHOLESKY_POINT_LIMIT: usize = 4096;

/// Diagonal jitter, relative to the largest variance.
const CHOLESKY_JITTER: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InitError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("synthesis failed: {0}")]
    Synthesis(String),
    #[error("grid of {points} points exceeds the exact-synthesis limit of {limit}")]
    Size { points: usize, limit: usize },
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FbsMethod {
    #[default]
    Cholesky,
    SpectralApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbsParams {
    pub hurst: f64,
    pub seed: u64,
    pub method: FbsMethod,
}

fn check_hurst(h: f64) -> Result<(), InitError> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(InitError::Parameter(format!("Hurst index {h} not in (0, 1)")))
    }
}

/// Ball cut-off: `ζ = 1` on `B(center, r_inner)`, `ζ = 0` off `B(center, r_outer)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub r_inner: f64,
    pub r_outer: f64,
    pub center: Vec<f64>,
}

impl CutoffSpec {
    /// Concentric cut-off centered in the box.
    pub fn centered(grid: &Grid, r_inner: f64, r_outer: f64) -> Self {
        Self {
            r_inner,
            r_outer,
            center: vec![0.5 * grid.box_length(); grid.dim()],
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<(), InitError> {
        if !(self.r_inner > 0.0 && self.r_inner < self.r_outer) {
            return Err(InitError::Parameter(format!(
                "cut-off radii must satisfy 0 < r_inner < r_outer, got {} and {}",
                self.r_inner, self.r_outer
            )));
        }
        if self.center.len() != grid.dim() {
            return Err(InitError::Parameter(format!(
                "cut-off center has {} coordinates on a {}-d grid",
                self.center.len(),
                grid.dim()
            )));
        }
        let l = grid.box_length();
        if self
            .center
            .iter()
            .any(|&c| c - self.r_outer <= 0.0 || c + self.r_outer >= l)
        {
            return Err(InitError::Parameter(
                "outer cut-off ball must lie strictly inside the box".into(),
            ));
        }
        Ok(())
    }
}

/// Product-form fractional Brownian sheet covariance
/// `∏ ½(|x_a|^{2H} + |x'_a|^{2H} − |x_a − x'_a|^{2H})`.
pub fn fbs_covariance(x: &[f64], xp: &[f64], hurst: f64) -> Result<f64, InitError> {
    check_hurst(hurst)?;
    if x.len() != xp.len() {
        return Err(InitError::Parameter("coordinate length mismatch".into()));
    }
    let two_h = 2.0 * hurst;
    Ok(x.iter()
        .zip(xp)
        .map(|(&a, &b)| 0.5 * (a.abs().powf(two_h) + b.abs().powf(two_h) - (a - b).abs().powf(two_h)))
        .product())
}

/// Reusable sheet synthesizer: the factorization is computed once and
/// shared across seeds.
#[derive(Debug, Clone)]
pub struct FbsSampler {
    grid: Grid,
    hurst: f64,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    /// Lower Cholesky factor of the 1-d covariance on nodes `1..n`; the
    /// sheet covariance is its `d`-fold Kronecker power.
    Cholesky(DMatrix<f64>),
    /// Per-axis spectral amplitudes.
    Spectral(Vec<f64>),
}

impl FbsSampler {
    pub fn new(grid: Grid, hurst: f64, method: FbsMethod) -> Result<Self, InitError> {
        check_hurst(hurst)?;
        let kind = match method {
            FbsMethod::Cholesky => {
                if grid.len() > CHOLESKY_POINT_LIMIT {
                    return Err(InitError::Size {
                        points: grid.len(),
                        limit: CHOLESKY_POINT_LIMIT,
                    });
                }
                SamplerKind::Cholesky(axis_factor(&grid, hurst)?)
            }
            FbsMethod::SpectralApprox => SamplerKind::Spectral(spectral_amplitudes(&grid, hurst)),
        };
        Ok(Self { grid, hurst, kind })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// One sheet realization for the stream `(seed, label)`.
    pub fn sample_labeled(&self, seed: u64, label: &str) -> ScalarField {
        let mut rng = rng::stream(seed, label, 0);
        match &self.kind {
            SamplerKind::Cholesky(l) => self.sample_cholesky(l, &mut rng),
            SamplerKind::Spectral(amp) => self.sample_spectral(amp, &mut rng),
        }
    }

    pub fn sample(&self, seed: u64) -> ScalarField {
        self.sample_labeled(seed, "fbs/sheet")
    }

    fn sample_cholesky(&self, l: &DMatrix<f64>, rng: &mut impl Rng) -> ScalarField {
        let grid = self.grid;
        let d = grid.dim();
        let m = grid.n() - 1;
        let total = m.pow(d as u32);
        let mut w: Vec<f64> = (0..total).map(|_| rng.sample(StandardNormal)).collect();
        // mode-a product with the axis factor, one axis at a time
        let mut line = vec![0.0; m];
        for axis in 0..d {
            let inner = m.pow((d - 1 - axis) as u32);
            let outer = total / (m * inner);
            for o in 0..outer {
                for k in 0..inner {
                    let base = o * m * inner + k;
                    for (i, li) in line.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for j in 0..=i {
                            acc += l[(i, j)] * w[base + j * inner];
                        }
                        *li = acc;
                    }
                    for (i, li) in line.iter().enumerate() {
                        w[base + i * inner] = *li;
                    }
                }
            }
        }
        let mut values = vec![0.0; grid.len()];
        for (flat, v) in values.iter_mut().enumerate() {
            let idx = grid.unravel(flat);
            if idx[..d].iter().all(|&i| i > 0) {
                let inner_flat = idx[..d].iter().fold(0, |acc, &i| acc * m + (i - 1));
                *v = w[inner_flat];
            }
        }
        ScalarField::from_raw(grid, values)
    }

    fn sample_spectral(&self, amp: &[f64], rng: &mut impl Rng) -> ScalarField {
        let grid = self.grid;
        let d = grid.dim();
        let big_n = grid.len() as f64;
        let coeffs: Vec<Complex64> = (0..grid.len())
            .map(|flat| {
                let idx = grid.unravel(flat);
                let a: f64 = idx[..d].iter().map(|&j| amp[j]).product();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                // E|ξ|² = 2, so the real part carries variance Σ a²|e^{ikx} − 1|²
                Complex64::new(re, im) * (a * big_n)
            })
            .collect();
        let g = crate::fields::spectral::inverse(&grid, coeffs);
        // inclusion–exclusion anchoring on the coordinate hyperplanes
        let values = (0..grid.len())
            .map(|flat| {
                let idx = grid.unravel(flat);
                let mut acc = 0.0;
                for mask in 0..(1usize << d) {
                    let mut j = idx;
                    for (a, ja) in j.iter_mut().enumerate().take(d) {
                        if mask >> a & 1 == 1 {
                            *ja = 0;
                        }
                    }
                    let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * g[grid.ravel(&j)];
                }
                acc
            })
            .collect();
        ScalarField::from_raw(grid, values)
    }
}

fn axis_factor(grid: &Grid, hurst: f64) -> Result<DMatrix<f64>, InitError> {
    let m = grid.n() - 1;
    let h = grid.spacing();
    let two_h = 2.0 * hurst;
    let mut c = DMatrix::from_fn(m, m, |i, j| {
        let s = (i + 1) as f64 * h;
        let t = (j + 1) as f64 * h;
        0.5 * (s.powf(two_h) + t.powf(two_h) - (s - t).abs().powf(two_h))
    });
    let jitter = CHOLESKY_JITTER * (m as f64 * h).powf(two_h);
    for i in 0..m {
        c[(i, i)] += jitter;
    }
    c.cholesky()
        .map(|ch| ch.l())
        .ok_or_else(|| InitError::Synthesis("covariance not positive definite after jitter".into()))
}

/// Amplitude per axis position for the spectral approximation:
/// `√(c_H |k|^{−2H−1} Δk)` with the fBm spectral constant
/// `c_H = Γ(2H+1) sin(πH) / 2π`; the zero mode is excluded.
fn spectral_amplitudes(grid: &Grid, hurst: f64) -> Vec<f64> {
    let dk = 2.0 * PI / grid.box_length();
    let c_h = gamma(2.0 * hurst + 1.0) * (PI * hurst).sin() / (2.0 * PI);
    (0..grid.n())
        .map(|j| {
            let k = crate::fields::spectral::wavenumber(grid, j).abs();
            if k == 0.0 {
                0.0
            } else {
                (c_h * k.powf(-2.0 * hurst - 1.0) * dk).sqrt()
            }
        })
        .collect()
}

/// Lanczos approximation of Γ for positive arguments.
fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Samples a fractional Brownian sheet anchored at the origin corner.
pub fn sample_fbs(grid: &Grid, params: &FbsParams) -> Result<ScalarField, InitError> {
    Ok(FbsSampler::new(*grid, params.hurst, params.method)?.sample(params.seed))
}

/// Normalized discrete bump `exp(−1/(1−|u|²))`, `u = offset·h/radius`.
#[derive(Debug, Clone)]
pub struct BumpKernel {
    radius: f64,
    offsets: Vec<[isize; 3]>,
    weights: Vec<f64>,
}

impl BumpKernel {
    pub fn new(grid: &Grid, radius: f64) -> Self {
        let h = grid.spacing();
        let d = grid.dim();
        let reach = (radius / h).ceil() as isize;
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let span = -reach..=reach;
        let mut push = |o: [isize; 3]| {
            let r2: f64 = o[..d].iter().map(|&k| (k as f64 * h / radius).powi(2)).sum();
            if r2 < 1.0 {
                offsets.push(o);
                weights.push((-1.0 / (1.0 - r2)).exp());
            }
        };
        for i in span.clone() {
            if d == 1 {
                push([i, 0, 0]);
                continue;
            }
            for j in span.clone() {
                if d == 2 {
                    push([i, j, 0]);
                    continue;
                }
                for k in span.clone() {
                    push([i, j, k]);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self {
            radius,
            offsets,
            weights,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn offsets(&self) -> &[[isize; 3]] {
        &self.offsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Periodic convolution written as `f(x) + Σ w_o (f(x+o) − f(x))`, so
    /// constants pass through bit-exactly.
    pub fn apply(&self, f: &ScalarField) -> ScalarField {
        let grid = *f.grid();
        let v = f.values();
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let idx = grid.unravel(i);
                let base = v[i];
                let mut acc = 0.0;
                for (o, w) in self.offsets.iter().zip(&self.weights) {
                    acc += w * (v[grid.ravel_offset(&idx, o)] - base);
                }
                base + acc
            })
            .collect();
        ScalarField::from_raw(grid, values)
    }

    /// Plain periodic correlation `Σ w_o f(x+o)` without the constant trick.
    pub fn apply_plain(&self, f: &ScalarField) -> ScalarField {
        let grid = *f.grid();
        let v = f.values();
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let idx = grid.unravel(i);
                self.offsets
                    .iter()
                    .zip(&self.weights)
                    .map(|(o, w)| w * v[grid.ravel_offset(&idx, o)])
                    .sum()
            })
            .collect();
        ScalarField::from_raw(grid, values)
    }
}

/// Smooth cut-off `ζ = 1_{B_mid} ∗ ρ_w` with `B_mid` the ball of radius
/// `(r_inner + r_outer)/2` and `w = (r_outer − r_inner)/2`.
///
/// Evaluated as `(S − S_out)/S`, where `S` is the kernel mass and `S_out`
/// the mass falling outside the ball, both accumulated in the same order;
/// this makes `ζ` exactly 1 on the inner ball and exactly 0 off the outer.
pub fn cutting_function(grid: &Grid, spec: &CutoffSpec) -> Result<ScalarField, InitError> {
    spec.validate(grid)?;
    let width = spec.r_outer - spec.r_inner;
    if width < 4.0 * grid.spacing() {
        return Err(InitError::Resolution(format!(
            "transition width {width} below 4h = {}",
            4.0 * grid.spacing()
        )));
    }
    let r_mid = 0.5 * (spec.r_inner + spec.r_outer);
    let d = grid.dim();
    let inside: Vec<bool> = (0..grid.len())
        .map(|i| grid.periodic_distance(&grid.coords(i)[..d], &spec.center) < r_mid)
        .collect();
    let raw = BumpKernel::new(grid, 0.5 * width);
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let idx = grid.unravel(i);
            let mut total = 0.0;
            let mut outside = 0.0;
            for (o, w) in raw.offsets.iter().zip(&raw.weights) {
                total += w;
                if !inside[grid.ravel_offset(&idx, o)] {
                    outside += w;
                }
            }
            ((total - outside) / total).clamp(0.0, 1.0)
        })
        .collect();
    Ok(ScalarField::from_raw(*grid, values))
}

/// Fields that can be mollified componentwise.
pub trait Mollify: Sized {
    fn mollify_with(&self, kernel: &BumpKernel) -> Self;
    fn grid_spacing(&self) -> f64;
    fn grid_ref(&self) -> &Grid;
}

impl Mollify for ScalarField {
    fn mollify_with(&self, kernel: &BumpKernel) -> Self {
        kernel.apply(self)
    }
    fn grid_spacing(&self) -> f64 {
        self.grid().spacing()
    }
    fn grid_ref(&self) -> &Grid {
        self.grid()
    }
}

impl Mollify for VectorField {
    fn mollify_with(&self, kernel: &BumpKernel) -> Self {
        VectorField::new(self.components().iter().map(|c| kernel.apply(c)).collect())
            .expect("components share a grid")
    }
    fn grid_spacing(&self) -> f64 {
        self.grid().spacing()
    }
    fn grid_ref(&self) -> &Grid {
        self.grid()
    }
}

/// Convolution with the normalized bump of radius `epsilon`; radii below
/// `2h` leave the field unchanged.
pub fn mollify<F: Mollify + Clone>(f: &F, epsilon: f64) -> F {
    if !(epsilon >= 2.0 * f.grid_spacing()) {
        warn!(
            "mollification radius {epsilon} below 2h = {}; field left unchanged",
            2.0 * f.grid_spacing()
        );
        return f.clone();
    }
    f.mollify_with(&BumpKernel::new(f.grid_ref(), epsilon))
}

/// What [`make_initial`] should build.
#[derive(Debug, Clone)]
pub enum InitialSpec {
    /// `φ_a = ζ · W^H_a`, one independent sheet per component.
    FbsCutoff {
        fbs: FbsParams,
        cutoff: CutoffSpec,
    },
    /// `φ = ∇ψ` (spectral gradient).
    Potential { psi: ScalarField },
    /// A caller-supplied field.
    Custom { field: VectorField },
}

pub fn make_initial(grid: &Grid, spec: &InitialSpec) -> Result<VectorField, InitError> {
    match spec {
        InitialSpec::FbsCutoff { fbs, cutoff } => {
            let zeta = cutting_function(grid, cutoff)?;
            let sampler = FbsSampler::new(*grid, fbs.hurst, fbs.method)?;
            let comps = (0..grid.dim())
                .map(|a| {
                    let sheet = sampler.sample_labeled(fbs.seed, &format!("fbs/component/{a}"));
                    let vals = sheet
                        .values()
                        .iter()
                        .zip(zeta.values())
                        .map(|(w, z)| w * z)
                        .collect();
                    ScalarField::from_raw(*grid, vals)
                })
                .collect();
            Ok(VectorField::new(comps)?)
        }
        InitialSpec::Potential { psi } => {
            if psi.grid() != grid {
                return Err(FieldError::GridMismatch.into());
            }
            Ok(gradient(psi, DiffScheme::Spectral)?)
        }
        InitialSpec::Custom { field } => {
            if field.grid() != grid {
                return Err(FieldError::GridMismatch.into());
            }
            field.check_finite()?;
            Ok(field.clone())
        }
    }
}

/// `ψ(x) = A ∏_a cos(2π m_a x_a / L)`; `m_a = 0` contributes a factor 1.
pub fn cosine_potential(grid: &Grid, amplitude: f64, modes: &[u32]) -> ScalarField {
    let w = 2.0 * PI / grid.box_length();
    ScalarField::from_fn(*grid, |x| {
        amplitude
            * x.iter()
                .zip(modes)
                .map(|(xa, &m)| (w * m as f64 * xa).cos())
                .product::<f64>()
    })
}

/// Taylor–Green-type vortex of wavenumber `mode`:
/// `(sin x cos y [cos z], −cos x sin y [cos z], 0)` scaled by `amplitude`.
/// Divergence-free with curl magnitude up to `2·amplitude·k`.
pub fn vortex_field(grid: &Grid, amplitude: f64, mode: u32) -> Result<VectorField, InitError> {
    let d = grid.dim();
    if d < 2 {
        return Err(InitError::Parameter("a vortex needs d >= 2".into()));
    }
    let k = 2.0 * PI * mode as f64 / grid.box_length();
    Ok(VectorField::from_fn(*grid, |x| {
        let z = if d == 3 { (k * x[2]).cos() } else { 1.0 };
        let mut v = vec![
            amplitude * (k * x[0]).sin() * (k * x[1]).cos() * z,
            -amplitude * (k * x[0]).cos() * (k * x[1]).sin() * z,
        ];
        if d == 3 {
            v.push(0.0);
        }
        v
    }))
}
