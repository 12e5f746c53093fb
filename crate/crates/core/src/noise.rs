//! The additive forcing process `η(t,x)`.
//!
//! Three forms are supported: no noise, a finite sum of stochastic
//! integrals `Σ_i ∫₀ᵗ a_i(s) G_i(x) ζ(x) dB^i_s`, and space-time white
//! noise regularized in space by a bump mollifier and cut off by `ζ`.
//! Time integrals are left-point (Itô) sums on the solver's time grid, and
//! every increment is drawn from a counter-addressed stream keyed by its
//! time index, so a path can be partially regenerated.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{jacobian, laplacian, DiffScheme, FieldError, Grid, ScalarField, VectorField};
use crate::initial_data::{cutting_function, BumpKernel, CutoffSpec, InitError};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("invalid noise parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Uniform time grid `t_k = T·k/n_steps` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self, NoiseError> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(NoiseError::Parameter(format!("horizon {horizon} must be positive")));
        }
        if n_steps == 0 {
            return Err(NoiseError::Parameter("need at least one time step".into()));
        }
        Ok(Self { horizon, n_steps })
    }

    /// Grid with step `dt`; `T/dt` must be an integer to 1e-9 relative.
    pub fn from_step(horizon: f64, dt: f64) -> Result<Self, NoiseError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(NoiseError::Parameter(format!("dt {dt} must be positive")));
        }
        let ratio = horizon / dt;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(NoiseError::Parameter(format!(
                "horizon {horizon} is not an integer multiple of dt {dt}"
            )));
        }
        Self::new(horizon, n as usize)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.horizon
        } else {
            self.horizon * k as f64 / self.n_steps as f64
        }
    }

    /// Index of the node at `t`, if `t` is on the grid (to 1e-9·dt).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let s = t / self.dt();
        let k = s.round();
        if k < 0.0 || k > self.n_steps as f64 || (s - k).abs() > 1e-9 {
            None
        } else {
            Some(k as usize)
        }
    }
}

/// Time amplitude `a_i(t)` of a stochastic-integral mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeAmplitude {
    Constant { value: f64 },
    /// `mean + amplitude·sin(omega·t)`
    Sinusoid { mean: f64, amplitude: f64, omega: f64 },
}

impl TimeAmplitude {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeAmplitude::Constant { value } => value,
            TimeAmplitude::Sinusoid { mean, amplitude, omega } => mean + amplitude * (omega * t).sin(),
        }
    }
}

/// Analytic spatial profile shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileShape {
    /// `exp(−|x − center|² / (2 width²))`
    Gaussian { center: Vec<f64>, width: f64 },
    /// `∏_a cos(2π m_a x_a / L + phase)`
    Cosine { modes: Vec<u32>, phase: f64 },
}

/// One mode `a(t) · amplitude ⊗ shape(x) · ζ(x)` of the stochastic integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseMode {
    /// Direction and size, one entry per velocity component.
    pub amplitude: Vec<f64>,
    pub shape: ProfileShape,
    pub time: TimeAmplitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Zero,
    BrownianIntegral { modes: Vec<NoiseMode> },
    RegularizedWhite { epsilon: f64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub cutoff: Option<CutoffSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn zero() -> Self {
        Self {
            kind: NoiseKind::Zero,
            cutoff: None,
            seed: 0,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<(), NoiseError> {
        let d = grid.dim();
        let cutoff = || {
            self.cutoff
                .as_ref()
                .ok_or_else(|| NoiseError::Parameter("non-zero noise requires a cut-off".into()))
        };
        match &self.kind {
            NoiseKind::Zero => Ok(()),
            NoiseKind::BrownianIntegral { modes } => {
                cutoff()?.validate(grid)?;
                if modes.is_empty() {
                    return Err(NoiseError::Parameter("need at least one mode".into()));
                }
                for m in modes {
                    if m.amplitude.len() != d {
                        return Err(NoiseError::Parameter(format!(
                            "mode amplitude has {} entries on a {d}-d grid",
                            m.amplitude.len()
                        )));
                    }
                    match &m.shape {
                        ProfileShape::Gaussian { center, width } => {
                            if center.len() != d || !(*width > 0.0) {
                                return Err(NoiseError::Parameter("bad Gaussian profile".into()));
                            }
                        }
                        ProfileShape::Cosine { modes, .. } => {
                            if modes.len() != d {
                                return Err(NoiseError::Parameter("bad cosine profile".into()));
                            }
                        }
                    }
                }
                Ok(())
            }
            NoiseKind::RegularizedWhite { epsilon, amplitude } => {
                cutoff()?.validate(grid)?;
                if !(*epsilon >= 2.0 * grid.spacing()) {
                    return Err(NoiseError::Parameter(format!(
                        "regularization radius {epsilon} below 2h = {}",
                        2.0 * grid.spacing()
                    )));
                }
                if !amplitude.is_finite() {
                    return Err(NoiseError::Parameter("amplitude must be finite".into()));
                }
                Ok(())
            }
        }
    }
}

/// Spatial profile `amplitude ⊗ shape · ζ` of a mode.
pub fn mode_profile(grid: &Grid, mode: &NoiseMode, zeta: &ScalarField) -> VectorField {
    let l = grid.box_length();
    let shape = |x: &[f64]| -> f64 {
        match &mode.shape {
            ProfileShape::Gaussian { center, width } => {
                let r = grid.periodic_distance(x, center);
                (-0.5 * (r / width).powi(2)).exp()
            }
            ProfileShape::Cosine { modes, phase } => x
                .iter()
                .zip(modes)
                .map(|(xa, &m)| (2.0 * PI * m as f64 * xa / l + phase).cos())
                .product(),
        }
    };
    let d = grid.dim();
    let comps = (0..d)
        .map(|a| {
            let vals = (0..grid.len())
                .map(|i| mode.amplitude[a] * shape(&grid.coords(i)[..d]) * zeta.values()[i])
                .collect();
            ScalarField::from_raw(*grid, vals)
        })
        .collect();
    VectorField::from_raw(*grid, comps)
}

/// `η`, its Jacobian `J[i][j] = ∂_j η_i` and `Δη` at one time node.
#[derive(Debug, Clone)]
pub struct EtaCalculus {
    pub eta: VectorField,
    pub jacobian: Vec<Vec<ScalarField>>,
    pub laplacian: VectorField,
}

impl EtaCalculus {
    pub fn compute(eta: &VectorField, scheme: DiffScheme) -> Result<Self, FieldError> {
        let jac = jacobian(eta, scheme)?;
        let lap = eta
            .components()
            .iter()
            .map(|c| laplacian(c, scheme))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            eta: eta.clone(),
            jacobian: jac,
            laplacian: VectorField::new(lap)?,
        })
    }

    /// Average of two nodes, used for half steps.
    pub fn midpoint(a: &Self, b: &Self) -> Result<Self, FieldError> {
        let avg = |x: &VectorField, y: &VectorField| x.scale(0.5).axpy(0.5, y);
        let jacobian = a
            .jacobian
            .iter()
            .zip(&b.jacobian)
            .map(|(ra, rb)| {
                ra.iter()
                    .zip(rb)
                    .map(|(p, q)| p.scale(0.5).axpy(0.5, q))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            eta: avg(&a.eta, &b.eta)?,
            jacobian,
            laplacian: avg(&a.laplacian, &b.laplacian)?,
        })
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Zero(VectorField),
    Fields(Vec<VectorField>),
}

/// `η(t_k, ·)` at every node of a time grid.
#[derive(Debug)]
pub struct NoisePath {
    grid: Grid,
    time_grid: TimeGrid,
    spec: Option<NoiseSpec>,
    /// `(first increment index, seed)`, sorted by index.
    segments: Vec<(usize, u64)>,
    mollified: bool,
    storage: Storage,
    scheme: DiffScheme,
    calculus: Vec<OnceLock<EtaCalculus>>,
}

impl Clone for NoisePath {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid,
            time_grid: self.time_grid,
            spec: self.spec.clone(),
            segments: self.segments.clone(),
            mollified: self.mollified,
            storage: self.storage.clone(),
            scheme: self.scheme,
            calculus: fresh_cache(&self.time_grid),
        }
    }
}

fn fresh_cache(tg: &TimeGrid) -> Vec<OnceLock<EtaCalculus>> {
    (0..=tg.n_steps()).map(|_| OnceLock::new()).collect()
}

impl NoisePath {
    /// Path with explicitly supplied fields, one per time node.
    pub fn from_fields(
        grid: Grid,
        time_grid: TimeGrid,
        fields: Vec<VectorField>,
    ) -> Result<Self, NoiseError> {
        if fields.len() != time_grid.n_steps() + 1 {
            return Err(NoiseError::Parameter(format!(
                "{} fields for {} time nodes",
                fields.len(),
                time_grid.n_steps() + 1
            )));
        }
        for f in &fields {
            if *f.grid() != grid {
                return Err(FieldError::GridMismatch.into());
            }
            f.check_finite()?;
        }
        Ok(Self {
            grid,
            time_grid,
            spec: None,
            segments: Vec::new(),
            mollified: false,
            storage: Storage::Fields(fields),
            scheme: DiffScheme::Spectral,
            calculus: fresh_cache(&time_grid),
        })
    }

    /// Identically zero path.
    pub fn zero(grid: Grid, time_grid: TimeGrid) -> Self {
        Self {
            grid,
            time_grid,
            spec: Some(NoiseSpec::zero()),
            segments: vec![(0, 0)],
            mollified: false,
            storage: Storage::Zero(VectorField::zeros(grid)),
            scheme: DiffScheme::Spectral,
            calculus: fresh_cache(&time_grid),
        }
    }

    /// Sets the differentiation scheme used by [`eta_calculus`].
    pub fn with_scheme(mut self, scheme: DiffScheme) -> Self {
        if scheme != self.scheme {
            self.scheme = scheme;
            self.calculus = fresh_cache(&self.time_grid);
        }
        self
    }

    pub fn scheme(&self) -> DiffScheme {
        self.scheme
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn spec(&self) -> Option<&NoiseSpec> {
        self.spec.as_ref()
    }

    pub fn segments(&self) -> &[(usize, u64)] {
        &self.segments
    }

    pub fn is_zero_kind(&self) -> bool {
        matches!(self.storage, Storage::Zero(_))
    }

    /// `η(t_k, ·)`.
    pub fn eta(&self, k: usize) -> &VectorField {
        match &self.storage {
            Storage::Zero(z) => z,
            Storage::Fields(f) => &f[k],
        }
    }

    pub fn sup_norm(&self) -> f64 {
        (0..=self.time_grid.n_steps())
            .map(|k| self.eta(k).sup_norm())
            .fold(0.0, f64::max)
    }
}

fn seed_for(segments: &[(usize, u64)], k: usize) -> u64 {
    segments
        .iter()
        .rev()
        .find(|(start, _)| *start <= k)
        .map(|s| s.1)
        .unwrap_or(0)
}

/// Precomputed spatial ingredients for generating increments.
enum Generator {
    Brownian {
        profiles: Vec<VectorField>,
        amplitudes: Vec<TimeAmplitude>,
    },
    White {
        kernel: BumpKernel,
        zeta: ScalarField,
        amplitude: f64,
    },
}

impl Generator {
    fn new(grid: &Grid, spec: &NoiseSpec) -> Result<Option<Self>, NoiseError> {
        Ok(match &spec.kind {
            NoiseKind::Zero => None,
            NoiseKind::BrownianIntegral { modes } => {
                let zeta = cutting_function(grid, spec.cutoff.as_ref().expect("validated"))?;
                Some(Generator::Brownian {
                    profiles: modes.iter().map(|m| mode_profile(grid, m, &zeta)).collect(),
                    amplitudes: modes.iter().map(|m| m.time).collect(),
                })
            }
            NoiseKind::RegularizedWhite { epsilon, amplitude } => Some(Generator::White {
                kernel: BumpKernel::new(grid, *epsilon),
                zeta: cutting_function(grid, spec.cutoff.as_ref().expect("validated"))?,
                amplitude: *amplitude,
            }),
        })
    }

    /// `η(t_{k+1}) = η(t_k) + increment_k`, with the increment drawn from
    /// stream `k` of `seed`.
    fn advance(&self, prev: &VectorField, tg: &TimeGrid, k: usize, seed: u64) -> VectorField {
        let grid = *prev.grid();
        let dt = tg.dt();
        match self {
            Generator::Brownian { profiles, amplitudes } => {
                let mut rng = rng::stream(seed, "noise/brownian", k as u64);
                let coefs: Vec<f64> = amplitudes
                    .iter()
                    .map(|a| {
                        let z: f64 = rng.sample(StandardNormal);
                        a.eval(tg.time(k)) * dt.sqrt() * z
                    })
                    .collect();
                let comps = (0..grid.dim())
                    .map(|c| {
                        let vals = (0..grid.len())
                            .map(|x| {
                                let mut v = prev.component(c).values()[x];
                                for (p, w) in profiles.iter().zip(&coefs) {
                                    v += w * p.component(c).values()[x];
                                }
                                v
                            })
                            .collect();
                        ScalarField::from_raw(grid, vals)
                    })
                    .collect();
                VectorField::from_raw(grid, comps)
            }
            Generator::White { kernel, zeta, amplitude } => {
                let mut rng = rng::stream(seed, "noise/white", k as u64);
                // lattice white noise has variance h^{-d} per node
                let cell = grid.spacing().powi(grid.dim() as i32);
                let scale = amplitude * (dt / cell).sqrt();
                let comps = (0..grid.dim())
                    .map(|c| {
                        let xi: Vec<f64> = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
                        let smooth = kernel.apply_plain(&ScalarField::from_raw(grid, xi));
                        let vals = prev
                            .component(c)
                            .values()
                            .iter()
                            .zip(smooth.values())
                            .zip(zeta.values())
                            .map(|((p, s), z)| p + scale * z * s)
                            .collect();
                        ScalarField::from_raw(grid, vals)
                    })
                    .collect();
                VectorField::from_raw(grid, comps)
            }
        }
    }
}

/// Builds `η` on `time_grid` for `spec`; deterministic in `spec.seed`.
pub fn build_noise(grid: &Grid, time_grid: &TimeGrid, spec: &NoiseSpec) -> Result<NoisePath, NoiseError> {
    spec.validate(grid)?;
    let segments = vec![(0, spec.seed)];
    let storage = match Generator::new(grid, spec)? {
        None => Storage::Zero(VectorField::zeros(*grid)),
        Some(gen) => {
            let mut fields = Vec::with_capacity(time_grid.n_steps() + 1);
            fields.push(VectorField::zeros(*grid));
            accumulate(&gen, time_grid, &segments, &mut fields);
            Storage::Fields(fields)
        }
    };
    Ok(NoisePath {
        grid: *grid,
        time_grid: *time_grid,
        spec: Some(spec.clone()),
        segments,
        mollified: false,
        storage,
        scheme: DiffScheme::Spectral,
        calculus: fresh_cache(time_grid),
    })
}

fn accumulate(gen: &Generator, tg: &TimeGrid, segments: &[(usize, u64)], fields: &mut Vec<VectorField>) {
    while fields.len() <= tg.n_steps() {
        let k = fields.len() - 1;
        let next = gen.advance(&fields[k], tg, k, seed_for(segments, k));
        fields.push(next);
    }
}

/// `(η, ∂ₓη, Δη)` at node `k`, computed once and cached on the path.
pub fn eta_calculus(path: &NoisePath, k: usize) -> Result<&EtaCalculus, NoiseError> {
    if k > path.time_grid.n_steps() {
        return Err(NoiseError::Parameter(format!("time index {k} beyond grid")));
    }
    let slot = match path.storage {
        Storage::Zero(_) => 0,
        Storage::Fields(_) => k,
    };
    if let Some(c) = path.calculus[slot].get() {
        return Ok(c);
    }
    let computed = EtaCalculus::compute(path.eta(k), path.scheme)?;
    Ok(path.calculus[slot].get_or_init(|| computed))
}

/// Smooths a path in time (bump kernel of radius `delta_t`, constant
/// extension past both ends) and in space (bump of radius `delta_x`).
/// A radius of zero skips that direction.
pub fn mollify_path(path: &NoisePath, delta_t: f64, delta_x: f64) -> Result<NoisePath, NoiseError> {
    let tg = path.time_grid;
    let dt = tg.dt();
    if delta_t != 0.0 && !(delta_t >= 2.0 * dt * (1.0 - 1e-12)) {
        return Err(NoiseError::Parameter(format!("time radius {delta_t} must be 0 or >= 2dt")));
    }
    let h = path.grid.spacing();
    if delta_x != 0.0 && !(delta_x >= 2.0 * h * (1.0 - 1e-12)) {
        return Err(NoiseError::Parameter(format!("space radius {delta_x} must be 0 or >= 2h")));
    }
    let storage = match &path.storage {
        Storage::Zero(z) => Storage::Zero(z.clone()),
        Storage::Fields(fields) => {
            let time_smoothed: Vec<VectorField> = if delta_t == 0.0 {
                fields.clone()
            } else {
                let reach = (delta_t / dt).ceil() as isize;
                let mut offs = Vec::new();
                let mut ws = Vec::new();
                for j in -reach..=reach {
                    let u = j as f64 * dt / delta_t;
                    if u * u < 1.0 {
                        offs.push(j);
                        ws.push((-1.0 / (1.0 - u * u)).exp());
                    }
                }
                let total: f64 = ws.iter().sum();
                ws.iter_mut().for_each(|w| *w /= total);
                let last = tg.n_steps() as isize;
                (0..fields.len())
                    .map(|k| {
                        let base = &fields[k];
                        let comps = (0..path.grid.dim())
                            .map(|c| {
                                let b = base.component(c).values();
                                let mut acc = vec![0.0; b.len()];
                                for (j, w) in offs.iter().zip(&ws) {
                                    let src = (k as isize + j).clamp(0, last) as usize;
                                    let s = fields[src].component(c).values();
                                    for ((a, si), bi) in acc.iter_mut().zip(s).zip(b) {
                                        *a += w * (si - bi);
                                    }
                                }
                                ScalarField::from_raw(
                                    path.grid,
                                    b.iter().zip(&acc).map(|(bi, a)| bi + a).collect(),
                                )
                            })
                            .collect();
                        VectorField::from_raw(path.grid, comps)
                    })
                    .collect()
            };
            let smoothed = if delta_x == 0.0 {
                time_smoothed
            } else {
                let kernel = BumpKernel::new(&path.grid, delta_x);
                time_smoothed
                    .iter()
                    .map(|f| {
                        VectorField::from_raw(
                            path.grid,
                            f.components().iter().map(|c| kernel.apply(c)).collect(),
                        )
                    })
                    .collect()
            };
            Storage::Fields(smoothed)
        }
    };
    Ok(NoisePath {
        grid: path.grid,
        time_grid: tg,
        spec: path.spec.clone(),
        segments: path.segments.clone(),
        mollified: delta_t != 0.0 || delta_x != 0.0,
        storage,
        scheme: path.scheme,
        calculus: fresh_cache(&tg),
    })
}

/// Replaces every increment after `t_star` with draws from `new_seed`;
/// fields at `t ≤ t_star` are copied bit-for-bit.
pub fn reseed_suffix(path: &NoisePath, t_star: f64, new_seed: u64) -> Result<NoisePath, NoiseError> {
    let tg = path.time_grid;
    let k_star = tg
        .index_of(t_star)
        .ok_or_else(|| NoiseError::Parameter(format!("t* = {t_star} is not a time-grid node")))?;
    if path.mollified {
        return Err(NoiseError::Parameter("cannot reseed a mollified path".into()));
    }
    let mut segments: Vec<(usize, u64)> = path
        .segments
        .iter()
        .copied()
        .filter(|(start, _)| *start < k_star)
        .collect();
    segments.push((k_star, new_seed));
    let storage = match (&path.storage, &path.spec) {
        (Storage::Zero(z), _) => Storage::Zero(z.clone()),
        (Storage::Fields(fields), Some(spec)) => {
            let gen = Generator::new(&path.grid, spec)?.expect("non-zero kind stores fields");
            let mut out: Vec<VectorField> = fields[..=k_star].to_vec();
            accumulate(&gen, &tg, &segments, &mut out);
            Storage::Fields(out)
        }
        (Storage::Fields(_), None) => {
            return Err(NoiseError::Parameter(
                "explicit paths have no random increments to reseed".into(),
            ))
        }
    };
    Ok(NoisePath {
        grid: path.grid,
        time_grid: tg,
        spec: path.spec.clone(),
        segments,
        mollified: false,
        storage,
        scheme: path.scheme,
        calculus: fresh_cache(&tg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Grid, TimeGrid, CutoffSpec) {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let tg = TimeGrid::new(0.2, 10).unwrap();
        let c = CutoffSpec::centered(&g, 0.2, 0.45);
        (g, tg, c)
    }

    fn brownian(cutoff: CutoffSpec, seed: u64) -> NoiseSpec {
        NoiseSpec {
            kind: NoiseKind::BrownianIntegral {
                modes: vec![NoiseMode {
                    amplitude: vec![1.0, -0.5],
                    shape: ProfileShape::Cosine { modes: vec![1, 0], phase: 0.0 },
                    time: TimeAmplitude::Constant { value: 1.0 },
                }],
            },
            cutoff: Some(cutoff),
            seed,
        }
    }

    #[test]
    fn time_grid_rules() {
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(-1.0, 3).is_err());
        let tg = TimeGrid::from_step(1.0, 1e-3).unwrap();
        assert_eq!(tg.n_steps(), 1000);
        assert_eq!(tg.time(1000), 1.0);
        assert!(TimeGrid::from_step(1.0, 0.3).is_err());
        assert_eq!(tg.index_of(0.5), Some(500));
        assert_eq!(tg.index_of(0.50005), None);
    }

    #[test]
    fn zero_kind_is_zero() {
        let (g, tg, _) = setup();
        let p = build_noise(&g, &tg, &NoiseSpec::zero()).unwrap();
        for k in 0..=tg.n_steps() {
            assert_eq!(p.eta(k).sup_norm(), 0.0);
        }
        let c = eta_calculus(&p, 3).unwrap();
        assert_eq!(c.laplacian.sup_norm(), 0.0);
        assert!(c.jacobian.iter().flatten().all(|f| f.sup_norm() == 0.0));
    }

    #[test]
    fn starts_at_zero_and_is_deterministic() {
        let (g, tg, c) = setup();
        let a = build_noise(&g, &tg, &brownian(c.clone(), 5)).unwrap();
        let b = build_noise(&g, &tg, &brownian(c.clone(), 5)).unwrap();
        assert_eq!(a.eta(0).sup_norm(), 0.0);
        for k in 0..=tg.n_steps() {
            assert!(a.eta(k).bit_eq(b.eta(k)));
        }
        let white = NoiseSpec {
            kind: NoiseKind::RegularizedWhite { epsilon: 0.15, amplitude: 1.0 },
            cutoff: Some(c),
            seed: 1,
        };
        let w = build_noise(&g, &tg, &white).unwrap();
        assert_eq!(w.eta(0).sup_norm(), 0.0);
        assert!(w.eta(5).sup_norm() > 0.0);
    }

    #[test]
    fn support_inside_outer_ball() {
        let (g, tg, c) = setup();
        for spec in [
            brownian(c.clone(), 2),
            NoiseSpec {
                kind: NoiseKind::RegularizedWhite { epsilon: 0.15, amplitude: 1.0 },
                cutoff: Some(c.clone()),
                seed: 2,
            },
        ] {
            let p = build_noise(&g, &tg, &spec).unwrap();
            for k in 0..=tg.n_steps() {
                for i in 0..g.len() {
                    if g.periodic_distance(&g.coords(i)[..2], &c.center) > c.r_outer {
                        assert!(p.eta(k).at(i).iter().all(|v| *v == 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let (g, tg, c) = setup();
        let mut s = brownian(c.clone(), 0);
        s.cutoff = None;
        assert!(build_noise(&g, &tg, &s).is_err());
        let s = NoiseSpec {
            kind: NoiseKind::BrownianIntegral { modes: vec![] },
            cutoff: Some(c.clone()),
            seed: 0,
        };
        assert!(build_noise(&g, &tg, &s).is_err());
        let s = NoiseSpec {
            kind: NoiseKind::RegularizedWhite { epsilon: 0.05, amplitude: 1.0 },
            cutoff: Some(c),
            seed: 0,
        };
        assert!(matches!(build_noise(&g, &tg, &s), Err(NoiseError::Parameter(_))));
    }

    #[test]
    fn reseed_edge_cases() {
        let (g, tg, c) = setup();
        let p = build_noise(&g, &tg, &brownian(c, 3)).unwrap();
        let same = reseed_suffix(&p, tg.horizon(), 99).unwrap();
        let fresh = reseed_suffix(&p, 0.0, 99).unwrap();
        for k in 0..=tg.n_steps() {
            assert!(same.eta(k).bit_eq(p.eta(k)));
        }
        assert_eq!(fresh.eta(0).sup_norm(), 0.0);
        assert!(!fresh.eta(4).bit_eq(p.eta(4)));
        assert!(reseed_suffix(&p, 0.013, 1).is_err());
    }

    #[test]
    fn mollify_path_preconditions() {
        let (g, tg, c) = setup();
        let p = build_noise(&g, &tg, &brownian(c, 3)).unwrap();
        assert!(mollify_path(&p, 0.5 * tg.dt(), 0.0).is_err());
        assert!(mollify_path(&p, 0.0, g.spacing()).is_err());
        let m = mollify_path(&p, 0.0, 0.0).unwrap();
        assert!(m.eta(7).bit_eq(p.eta(7)));
        let z = mollify_path(&NoisePath::zero(g, tg), 4.0 * tg.dt(), 0.2).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        let m = mollify_path(&p, 3.0 * tg.dt(), 0.2).unwrap();
        assert!(m.sup_norm() <= p.sup_norm() * (1.0 + 1e-12));
        assert!(reseed_suffix(&m, 0.1, 4).is_err());
    }
}
