//! JSON run configuration.
//!
//! A config has fixed sections `grid`, `time`, `physics`, `initial`,
//! `noise`, `mc` and `study`, plus a top-level `seed` used by the
//! multi-seed studies. Every field has a default, so a file only needs
//! the values it changes; command-line flags are applied on top.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use burgers_core::fbsde::McConfig;
use burgers_core::fields::{Discretization, Grid};
use burgers_core::initial_data::{CutoffSpec, FbsMethod};
use burgers_core::noise::{NoiseSpec, TimeGrid};
use burgers_core::solver::{SolverConfig, TimeScheme};
use serde::{Deserialize, Serialize};

use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub d: usize,
    pub n: usize,
    pub box_length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            d: 1,
            n: 256,
            box_length: 2.0 * PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub horizon: f64,
    pub dt: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsSection {
    pub nu: f64,
    pub scheme: TimeScheme,
    pub discretization: Discretization,
    pub cfl_safety: f64,
    pub snapshot_stride: usize,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self {
            nu: 0.1,
            scheme: TimeScheme::ImexCn,
            discretization: Discretization::spectral(),
            cfl_safety: 1.0,
            snapshot_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSection {
    Zero,
    /// `amplitude · ∏ cos(2π m_a x_a / L)`
    Cosine { amplitude: f64, modes: Vec<u32> },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    /// Cut-off fractional Brownian sheet, one sheet per component.
    Fbs {
        hurst: f64,
        seed: u64,
        #[serde(default)]
        method: FbsMethod,
        r_inner: f64,
        r_outer: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// Gradient of a potential.
    Potential { psi: PsiSection },
    /// Non-potential vortex of the given amplitude and wavenumber.
    Vortex { amplitude: f64, mode: u32 },
    Constant { value: Vec<f64> },
    File { path: PathBuf },
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection::Potential {
            psi: PsiSection::Cosine {
                amplitude: 1.0,
                modes: vec![1],
            },
        }
    }
}

impl InitialSection {
    pub fn cutoff(&self, grid: &Grid) -> Option<CutoffSpec> {
        match self {
            InitialSection::Fbs {
                r_inner,
                r_outer,
                center,
                ..
            } => Some(match center {
                Some(c) => CutoffSpec {
                    r_inner: *r_inner,
                    r_outer: *r_outer,
                    center: c.clone(),
                },
                None => CutoffSpec::centered(grid, *r_inner, *r_outer),
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub n_paths: usize,
    pub dt_mc: f64,
    pub seed: u64,
    pub antithetic: bool,
    /// Number of query points.
    pub points: usize,
    /// Query times as fractions of the horizon, used cyclically.
    pub tau_fractions: Vec<f64>,
    /// Absolute slack added to `3·stderr`.
    pub slack: f64,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            n_paths: 20_000,
            dt_mc: 2e-3,
            seed: 0,
            antithetic: true,
            points: 10,
            tau_fractions: vec![0.0, 0.25, 0.5],
            slack: 5e-3,
        }
    }
}

impl McSection {
    pub fn mc_config(&self) -> McConfig {
        McConfig {
            n_paths: self.n_paths,
            dt_mc: self.dt_mc,
            seed: self.seed,
            antithetic: self.antithetic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    /// Mollification levels `m = 0..levels`.
    pub levels: usize,
    /// `ε₀` in grid cells; `ε_m = ε₀ h 2^{−m}`.
    pub eps0_cells: f64,
    /// Time mollification radius at level 0, in time steps; levels whose
    /// radius falls below two steps are not smoothed in time.
    pub eps0_steps: f64,
    /// Reseeding time; defaults to half the horizon.
    pub t_star: Option<f64>,
    pub reseed: u64,
    /// Sup-distance tolerance of the Cole–Hopf comparison.
    pub tolerance: f64,
    /// Also run at `2n` and require the error to drop by `refine_ratio`.
    pub refine: bool,
    pub refine_ratio: f64,
    /// Seeds of the noise statistics study.
    pub noise_seeds: usize,
    pub noise_probes: usize,
    pub hursts: Vec<f64>,
    pub holder_n: usize,
    pub holder_seeds: usize,
    pub holder_tolerance: f64,
    /// Trajectory directory checked by `verify-fbsde`.
    pub traj_dir: Option<PathBuf>,
    /// Field file read by `estimate-holder`.
    pub field_file: Option<PathBuf>,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            levels: 4,
            eps0_cells: 8.0,
            eps0_steps: 0.0,
            t_star: None,
            reseed: 1,
            tolerance: 1e-3,
            refine: false,
            refine_ratio: 4.0,
            noise_seeds: 1000,
            noise_probes: 5,
            hursts: vec![0.3, 0.5, 0.7],
            holder_n: 1024,
            holder_seeds: 20,
            holder_tolerance: 0.1,
            traj_dir: None,
            field_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub seed: u64,
    pub grid: GridSection,
    pub time: TimeSection,
    pub physics: PhysicsSection,
    pub initial: InitialSection,
    pub noise: NoiseSpec,
    pub mc: McSection,
    pub study: StudySection,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            grid: GridSection::default(),
            time: TimeSection::default(),
            physics: PhysicsSection::default(),
            initial: InitialSection::default(),
            noise: NoiseSpec::zero(),
            mc: McSection::default(),
            study: StudySection::default(),
        }
    }
}

impl LabConfig {
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| LabError::Parameter(format!("{}: {e}", path.display())))
    }

    pub fn grid(&self) -> Result<Grid, LabError> {
        Ok(Grid::new(self.grid.d, self.grid.n, self.grid.box_length)?)
    }

    pub fn time_grid(&self) -> Result<TimeGrid, LabError> {
        Ok(TimeGrid::from_step(self.time.horizon, self.time.dt)?)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            nu: self.physics.nu,
            dt: self.time.dt,
            scheme: self.physics.scheme,
            discretization: self.physics.discretization,
            cfl_safety: self.physics.cfl_safety,
            snapshot_stride: self.physics.snapshot_stride,
            strip_width: 2,
            nonlinear: true,
        }
    }

    /// Canonical JSON text; its hash identifies the run.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
