//! The harness commands. Each one reads only its effective config (and
//! the input files the config names), writes data files plus a manifest
//! into an output directory, and reports an optional verdict.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use burgers_core::colehopf::{residual_check, solve_potential, PotentialInit};
use burgers_core::fbsde::{uniform_bound_check, verify_points, FamilyMember};
use burgers_core::fields::{
    curl_defect, estimate_holder, sup_distance, DiffScheme, Grid, ScalarField, VectorField,
};
use burgers_core::initial_data::{
    cosine_potential, cutting_function, make_initial, mollify, vortex_field, BumpKernel,
    CutoffSpec, FbsMethod, FbsParams, FbsSampler, InitialSpec,
};
use burgers_core::noise::{
    build_noise, mode_profile, mollify_path, reseed_suffix, NoiseKind, NoiseMode, NoisePath,
    NoiseSpec, ProfileShape, TimeAmplitude, TimeGrid,
};
use burgers_core::rng;
use burgers_core::solver::{max_norm_series, solve, Trajectory};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{InitialSection, LabConfig, PsiSection};
use crate::error::LabError;
use crate::fieldfile;
use crate::manifest::{sha256_hex, FileEntry, RunManifest};
use crate::table::{fmt_f64, fmt_opt, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    GenerateInitial,
    Simulate,
    VerifyColehopf,
    VerifyFbsde,
    StudyMollification,
    CheckCausality,
    EstimateHolder,
    StudyNoise,
    StudyHolder,
}

impl CommandKind {
    pub const ALL: [CommandKind; 9] = [
        CommandKind::GenerateInitial,
        CommandKind::Simulate,
        CommandKind::VerifyColehopf,
        CommandKind::VerifyFbsde,
        CommandKind::StudyMollification,
        CommandKind::CheckCausality,
        CommandKind::EstimateHolder,
        CommandKind::StudyNoise,
        CommandKind::StudyHolder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::GenerateInitial => "generate-initial",
            CommandKind::Simulate => "simulate",
            CommandKind::VerifyColehopf => "verify-colehopf",
            CommandKind::VerifyFbsde => "verify-fbsde",
            CommandKind::StudyMollification => "study-mollification",
            CommandKind::CheckCausality => "check-causality",
            CommandKind::EstimateHolder => "estimate-holder",
            CommandKind::StudyNoise => "study-noise",
            CommandKind::StudyHolder => "study-holder",
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CommandKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CommandKind::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| LabError::Parameter(format!("unknown command {s:?}")))
    }
}

/// Boundary-strip activity above which `simulate` reports a notice.
pub const BOUNDARY_NOTICE: f64 = 1e-8;

/// Result of a command that ran to completion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub manifest: RunManifest,
    pub summary: Vec<String>,
    /// `None` for commands without a pass/fail rule.
    pub verdict: Option<bool>,
}

/// Collects output files, input checksums and summary lines.
struct Ctx {
    out: PathBuf,
    files: Vec<String>,
    inputs: Vec<FileEntry>,
    summary: Vec<String>,
    steps: usize,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn vector(&mut self, name: &str, f: &VectorField) -> Result<(), LabError> {
        fieldfile::write_vector(&self.path(name), f)?;
        self.files.push(name.into());
        Ok(())
    }

    fn table(&mut self, name: &str, t: &Table) -> Result<(), LabError> {
        t.write(&self.path(name))?;
        self.files.push(name.into());
        Ok(())
    }

    fn note(&mut self, line: String) {
        self.summary.push(line);
    }

    fn input(&mut self, path: &Path) -> Result<(), LabError> {
        let entry = FileEntry::of(path, path.display().to_string())?;
        if !self.inputs.contains(&entry) {
            self.inputs.push(entry);
        }
        Ok(())
    }

    fn read_field(&mut self, path: &Path) -> Result<fieldfile::FieldData, LabError> {
        self.input(path)?;
        fieldfile::read(path)
    }
}

/// Runs `kind` with `cfg`, writing into `out` (created if missing).
pub fn run(kind: CommandKind, cfg: &LabConfig, out: &Path) -> Result<Outcome, LabError> {
    fs::create_dir_all(out).map_err(|e| LabError::io(out, e))?;
    let start = Instant::now();
    let mut ctx = Ctx {
        out: out.to_path_buf(),
        files: Vec::new(),
        inputs: Vec::new(),
        summary: Vec::new(),
        steps: 0,
    };
    let verdict = match kind {
        CommandKind::GenerateInitial => generate_initial(cfg, &mut ctx)?,
        CommandKind::Simulate => simulate(cfg, &mut ctx)?,
        CommandKind::VerifyColehopf => verify_colehopf(cfg, &mut ctx)?,
        CommandKind::VerifyFbsde => verify_fbsde(cfg, &mut ctx)?,
        CommandKind::StudyMollification => study_mollification(cfg, &mut ctx)?,
        CommandKind::CheckCausality => check_causality(cfg, &mut ctx)?,
        CommandKind::EstimateHolder => estimate_holder_cmd(cfg, &mut ctx)?,
        CommandKind::StudyNoise => study_noise(cfg, &mut ctx)?,
        CommandKind::StudyHolder => study_holder(cfg, &mut ctx)?,
    };
    let files = ctx
        .files
        .iter()
        .map(|name| FileEntry::of(&ctx.path(name), name.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: kind.name().into(),
        config_hash: sha256_hex(cfg.canonical_json().as_bytes()),
        master_seed: cfg.seed,
        config: cfg.clone(),
        inputs: ctx.inputs,
        files,
        step_count: ctx.steps,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    manifest.write(out)?;
    Ok(Outcome {
        manifest,
        summary: ctx.summary,
        verdict,
    })
}

/// Re-runs the command recorded in a manifest into `out`. Inputs must
/// still match their recorded checksums.
pub fn replay(manifest_path: &Path, out: &Path) -> Result<Outcome, LabError> {
    let m = RunManifest::read(manifest_path)?;
    for input in &m.inputs {
        let now = FileEntry::of(Path::new(&input.path), input.path.clone())?;
        if now != *input {
            return Err(LabError::Parameter(format!(
                "input {} changed since the recorded run",
                input.path
            )));
        }
    }
    let kind: CommandKind = m.command.parse()?;
    run(kind, &m.config, out)
}

fn psi_field(psi: &PsiSection, grid: &Grid, ctx: &mut Ctx) -> Result<ScalarField, LabError> {
    Ok(match psi {
        PsiSection::Zero => ScalarField::zeros(*grid),
        PsiSection::Cosine { amplitude, modes } => {
            if modes.len() != grid.dim() {
                return Err(LabError::Parameter(format!(
                    "{} cosine modes on a {}-d grid",
                    modes.len(),
                    grid.dim()
                )));
            }
            cosine_potential(grid, *amplitude, modes)
        }
        PsiSection::File { path } => {
            let f = ctx.read_field(path)?.into_scalar()?;
            if f.grid() != grid {
                return Err(LabError::Parameter(format!(
                    "potential file {} does not match the configured grid",
                    path.display()
                )));
            }
            f
        }
    })
}

fn initial_field(cfg: &LabConfig, grid: &Grid, ctx: &mut Ctx) -> Result<VectorField, LabError> {
    let spec = match &cfg.initial {
        InitialSection::Fbs {
            hurst,
            seed,
            method,
            ..
        } => InitialSpec::FbsCutoff {
            fbs: FbsParams {
                hurst: *hurst,
                seed: *seed,
                method: *method,
            },
            cutoff: cfg.initial.cutoff(grid).expect("fbs has a cut-off"),
        },
        InitialSection::Potential { psi } => InitialSpec::Potential {
            psi: psi_field(psi, grid, ctx)?,
        },
        InitialSection::Vortex { amplitude, mode } => InitialSpec::Custom {
            field: vortex_field(grid, *amplitude, *mode)?,
        },
        InitialSection::Constant { value } => {
            if value.len() != grid.dim() {
                return Err(LabError::Parameter("constant needs one value per component".into()));
            }
            InitialSpec::Custom {
                field: VectorField::constant(*grid, value),
            }
        }
        InitialSection::File { path } => InitialSpec::Custom {
            field: ctx.read_field(path)?.into_vector()?,
        },
    };
    Ok(make_initial(grid, &spec)?)
}

fn noise_path(cfg: &LabConfig, grid: &Grid, tg: &TimeGrid) -> Result<NoisePath, LabError> {
    Ok(build_noise(grid, tg, &cfg.noise)?.with_scheme(cfg.physics.discretization.scheme))
}

fn diagnostics_table(traj: &Trajectory) -> Table {
    let mut t = Table::new(&[
        "index",
        "time",
        "sup_y",
        "curl_defect",
        "energy",
        "boundary_max",
        "growth",
    ]);
    for (k, d) in traj.diagnostics().iter().enumerate() {
        t.push(vec![
            k.to_string(),
            fmt_f64(d.time),
            fmt_f64(d.sup_y),
            fmt_opt(d.curl_defect),
            fmt_opt(d.energy),
            fmt_f64(d.boundary_max),
            fmt_f64(d.growth),
        ]);
    }
    t
}

/// Largest one-step increase of the sup-norm series.
fn worst_increase(series: &[f64]) -> f64 {
    series
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn holder_rows(f: &VectorField) -> Vec<(usize, Option<(f64, f64)>)> {
    f.components()
        .iter()
        .enumerate()
        .map(|(a, c)| (a, estimate_holder(c).ok().map(|e| (e.exponent, e.constant))))
        .collect()
}

fn generate_initial(cfg: &LabConfig, ctx: &mut Ctx) -> Result<Option<bool>, LabError> {
    let grid = cfg.grid()?;
    let phi = initial_field(cfg, &grid, ctx)?;
    ctx.vector("initial.npbf", &phi)?;
    let mut t = Table::new(&["component", "exponent", "constant"]);
    for (a, est) in holder_rows(&phi) {
        match est {
            Some((e, c)) => {
                ctx.note(format!("component {a}: Hölder exponent {e:.4}, constant {c:.4}"));
                t.push(vec![a.to_string(), fmt_f64(e), fmt_f64(c)]);
            }
            None => {
                ctx.note(format!("component {a}: Hölder exponent not estimable"));
                t.push(vec![a.to_string(), String::new(), String::new()]);
            }
        }
    }
    ctx.table("holder.csv", &t)?;
    if grid.dim() >= 2 {
        let c = curl_defect(&phi, DiffScheme::Spectral)?;
        ctx.note(format!("curl defect {c:.6e}"));
    }
    ctx.note(format!("sup|φ| = {:.6e}", phi.sup_norm()));
    Ok(None)
}

fn simulate(cfg: &LabConfig, ctx: &mut Ctx) -> Result<Option<bool>, LabError> {
    let grid = cfg.grid()?;
    let tg = cfg.time_grid()?;
    let phi = initial_field(cfg, &grid, ctx)?;
    let path = noise_path(cfg, &grid, &tg)?;
    let traj = solve(&phi, &path, &cfg.solver())?;
    ctx.steps = tg.n_steps();
    ctx.vector("phi.npbf", &phi)?;
    for (i, &k) in traj.snapshot_indices().iter().enumerate() {
        ctx.vector(&format!("y_{k:06}.npbf"), &traj.y()[i])?;
        ctx.vector(&format!("yhat_{k:06}.npbf"), &traj.yhat()[i])?;
    }
    ctx.table("diagnostics.csv", &diagnostics_table(&traj))?;
    let series = max_norm_series(&traj);
    ctx.note(format!(
        "{} steps, final sup|y| = {:.6e}, largest one-step increase of sup|y| = {:.3e}",
        tg.n_steps(),
        series.last().copied().unwrap_or(0.0),
        worst_increase(&series)
    ));
    for w in traj.warnings() {
        ctx.note(format!("warning: {w}"));
    }
    let strip = traj
        .diagnostics()
        .iter()
        .map(|d| d.boundary_max)
        .fold(0.0, f64::max);
    if strip > BOUNDARY_NOTICE {
        log::warn!("boundary strip activity reaches {strip:.3e}; consider a larger box");
        ctx.note(format!("boundary strip activity reaches {strip:.3e}"));
    }
    Ok(None)
}

struct ColeHopfRun {
    max_err: f64,
    max_oracle_curl: f64,
    max_solver_curl: f64,
    sup_phi: f64,
}

fn colehopf_at(
    cfg: &LabConfig,
    grid: &Grid,
    psi: ScalarField,
    distances: &mut Table,
    residuals: &mut Table,
    ctx: &mut Ctx,
) -> Result<ColeHopfRun, LabError> {
    let tg = cfg.time_grid()?;
    let stride = cfg.physics.snapshot_stride;
    if tg.n_steps() % stride != 0 {
        return Err(LabError::Parameter(format!(
            "snapshot stride {stride} does not divide the {} steps",
            tg.n_steps()
        )));
    }
    let oracle_tg = TimeGrid::new(tg.horizon(), tg.n_steps() / stride)?;
    let nu = cfg.physics.nu;
    let oracle = solve_potential(&PotentialInit { psi0: psi.clone(), nu }, &oracle_tg)?;
    let phi = make_initial(grid, &InitialSpec::Potential { psi })?;
    let path = noise_path(cfg, grid, &tg)?;
    if !path.is_zero_kind() {
        return Err(LabError::Parameter("the Cole–Hopf comparison needs zero noise".into()));
    }
    let traj = solve(&phi, &path, &cfg.solver())?;
    ctx.steps += tg.n_steps();
    let cell = grid.spacing().powi(grid.dim() as i32);
    let mut run = ColeHopfRun {
        max_err: 0.0,
        max_oracle_curl: 0.0,
        max_solver_curl: 0.0,
        sup_phi: phi.sup_norm(),
    };
    for (j, exact) in oracle.y().iter().enumerate() {
        let k = j * stride;
        let y = traj
            .y_at_index(k)
            .ok_or_else(|| LabError::Parameter(format!("no solver snapshot at step {k}")))?;
        let diff = y.sub(exact)?;
        let linf = diff.sup_norm();
        let l2 = (cell
            * diff
                .components()
                .iter()
                .flat_map(|c| c.values())
                .map(|v| v * v)
                .sum::<f64>())
        .sqrt();
        let oc = oracle.diagnostics()[j].curl_defect;
        let sc = traj.diagnostics()[k].curl_defect;
        run.max_err = run.max_err.max(linf);
        run.max_oracle_curl = run.max_oracle_curl.max(oc.unwrap_or(0.0));
        distances.push(vec![
            grid.n().to_string(),
            k.to_string(),
            fmt_f64(tg.time(k)),
            fmt_f64(linf),
            fmt_f64(l2),
            fmt_opt(oc),
            fmt_opt(sc),
        ]);
    }
    run.max_solver_curl = traj
        .diagnostics()
        .iter()
        .filter_map(|d| d.curl_defect)
        .fold(0.0, f64::max);
    for r in residual_check(&oracle, nu)? {
        residuals.push(vec![grid.n().to_string(), fmt_f64(r.time), fmt_f64(r.sup)]);
    }
    ctx.table(&format!("diagnostics_n{}.csv", grid.n()), &diagnostics_table(&traj))?;
    Ok(run)
}

fn verify_colehopf(cfg: &LabConfig, ctx: &mut Ctx) -> Result<Option<bool>, LabError> {
    let psi = match &cfg.initial {
        InitialSection::Potential { psi } => psi.clone(),
        _ => {
            return Err(LabError::Parameter(
                "verify-colehopf needs a potential initial condition".into(),
            ))
        }
    };
    let mut distances = Table::new(&[
        "n",
        "index",
        "time",
        "linf",
        "l2",
        "oracle_curl_defect",
        "solver_curl_defect",
    ]);
    let mut residuals = Table::new(&["n", "time", "oracle_residual"]);
    let grid = cfg.grid()?;
    let psi0 = psi_field(&psi, &grid, ctx)?;
    let base = colehopf_at(cfg, &grid, psi0, &mut distances, &mut residuals, ctx)?;
    let tol = cfg.study.tolerance;
    let mut pass = base.max_err <= tol;
    ctx.note(format!(
        "n = {}: max sup distance {:.6e} (tolerance {tol:e})",
        grid.n(),
        base.max_err
    ));
    if grid.dim() >= 2 {
        let oracle_ok = base.max_oracle_curl <= 1e-10;
        let solver_ok = base.max_solver_curl <= 1e-4 * base.sup_phi;
        ctx.note(format!(
            "curl defect: oracle {:.3e}, solver {:.3e} (limit {:.3e})",
            base.max_oracle_curl,
            base.max_solver_curl,
            1e-4 * base.sup_phi
        ));
        pass &= oracle_ok && solver_ok;
    }
    if cfg.study.refine {
        if matches!(psi, PsiSection::File { .. }) {
            return Err(LabError::Parameter(
                "refinement needs an analytic potential, not a file".into(),
            ));
        }
        let fine = Grid::new(grid.dim(), 2 * grid.n(), grid.box_length())?;
        let psi1 = psi_field(&psi, &fine, ctx)?;
        let refined = colehopf_at(cfg, &fine, psi1, &mut distances, &mut residuals, ctx)?;
        let ratio = base.max_err / refined.max_err;
        ctx.note(format!(
            "n = {}: max sup distance {:.6e}; error ratio {ratio:.3} (required >= {})",
            fine.n(),
            refined.max_err,
            cfg.study.refine_ratio
        ));
        pass &= ratio >= cfg.study.refine_ratio;
    }
    ctx.table("distances.csv", &distances)?;
    ctx.table("oracle_residual.csv", &residuals)?;
    Ok(Some(pass))
}

/// Reloads a `simulate` output directory as a trajectory plus its noise.
fn load_trajectory(dir: &Path, ctx: &mut Ctx) -> Result<(LabConfig, Trajectory, NoisePath), LabError> {
    let m = RunManifest::read(dir)?;
    if m.command != CommandKind::Simulate.name() {
        return Err(LabError::Parameter(format!(
            "{} holds a {} run, not a simulation",
            dir.display(),
            m.command
        )));
    }
    let sim = m.config.clone();
    let grid = sim.grid()?;
    let tg = sim.time_grid()?;
    let path = noise_path(&sim, &grid, &tg)?;
    let mut indices = Vec::new();
    let mut fields = Vec::new();
    for f in &m.files {
        if let Some(k) = f
            .path
            .strip_prefix("yhat_")
            .and_then(|s| s.strip_suffix(".npbf"))
        {
            let k: usize = k
                .parse()
                .map_err(|_| LabError::Format(format!("bad snapshot name {}", f.path)))?;
            let p = dir.join(&f.path);
            let entry = FileEntry::of(&p, p.display().to_string())?;
            if entry.sha256 != f.sha256 {
                return Err(LabError::Format(format!("{} does not match its manifest", f.path)));
            }
            ctx.inputs.push(entry);
            indices.push(k);
            fields.push(fieldfile::read(&p)?.into_vector()?);
        }
    }
    let traj = Trajectory::from_snapshots(indices, fields, &path)?;
    Ok((sim, traj, path))
}

fn verify_fbsde(cfg: &LabConfig, ctx: &mut Ctx) -> Result<Option<bool>, LabError> {
    let dir = cfg
        .study
        .traj_dir
        .clone()
        .ok_or_else(|| LabError::Parameter("verify-fbsde needs a trajectory directory".into()))?;
    let (sim, traj, path) = load_trajectory(&dir, ctx)?;
    let grid = *traj.grid();
    let horizon = traj.time_grid().horizon();
    let l = grid.box_length();
    if cfg.mc.tau_fractions.is_empty() {
        return Err(LabError::Parameter("need at least one query time".into()));
    }
    let queries: Vec<(f64, Vec<f64>)> = (0..cfg.mc.points)
        .map(|i| {
            let mut r = rng::stream(cfg.mc.seed, "fbsde/query-points", i as u64);
            let x = (0..grid.dim())
                .map(|_| l * (0.1 + 0.8 * r.random::<f64>()))
                .collect();
            let frac = cfg.mc.tau_fractions[i % cfg.mc.tau_fractions.len()];
            (frac * horizon, x)
        })
        .collect();
    let report = verify_points(&traj, &path, sim.physics.nu, &queries, &cfg.mc.mc_config())?;
    let d = grid.dim();
    let mut header: Vec<String> = vec!["tau".into()];
    header.extend((0..d).map(|a| format!("x{a}")));
    header.extend((0..d).map(|a| format!("estimate{a}")));
    header.extend((0..d).map(|a| format!("solver{a}")));
    header.extend(
        ["residual", "stderr", "n_paths", "n_steps", "escaped", "inconclusive", "pass"]
            .map(String::from),
    );
    let mut t = Table {
        header,
        rows: Vec::new(),
    };
    let mut pass = true;
    for row in &report.rows {
        let ok = row.within(3.0, cfg.mc.slack) && !row.inconclusive;
        pass &= ok;
        let mut cells = vec![fmt_f64(row.tau)];
        cells.extend(row.x.iter().map(|v| fmt_f64(*v)));
        cells.extend(row.estimate.iter().map(|v| fmt_f64(*v)));
        cells.extend(row.solver_value.iter().map(|v| fmt_f64(*v)));
        cells.extend([
            fmt_f64(row.residual),
            fmt_f64(row.stderr),
            row.n_paths.to_string(),
            row.n_steps.to_string(),
            row.escaped.to_string(),
            row.inconclusive.to_string(),
            ok.to_string(),
        ]);
        t.push(cells);
        ctx.steps += row.n_steps * row.n_paths;
        ctx.note(format!(
            "τ = {:.4}, x = {:?}: residual {:.3e}, stderr {:.3e}, {}",
            row.tau,
            row.x.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            row.residual,
            row.stderr,
            if ok { "ok" } else { "FAIL" }
        ));
    }
    ctx.note(format!("tolerance: {}", report.tolerance_note));
    ctx.table("report.csv", &t)?;
    Ok(Some(pass))
}

fn study_mollification(cfg: &LabConfig, ctx: &mut Ctx) -> Result<Option<bool>, LabError> {
    let levels = cfg.study.levels;
    if levels < 3 {
        return Err(LabError::Parameter(format!("need at least 3 levels, got {levels}")));
    }
    let grid = cfg.grid()?;
    let tg = cfg.time_grid()?;
    let h = grid.spacing();
    let phi = initial_field(cfg, &grid, ctx)?;
    let path = noise_path(cfg, &grid, &tg)?;
    let solver = cfg.solver();
    let mut phis = Vec::with_capacity(levels);
    let mut paths = Vec::with_capacity(levels);
    let mut trajs = Vec::with_capacity(levels);
    let mut eps = Vec::with_capacity(levels);
    for m in 0..levels {
        let e = cfg.study.eps0_cells * h / 2f64.powi(m as i32);
        let phi_m = mollify(&phi, e);
        let path_m = if path.is_zero_kind() {
            path.clone()
        } else {
            let dx = if e >= 2.0 * h { e } else { 0.0 };
            let dt_m = cfg.study.eps0_steps * tg.dt() / 2f64.powi(m as i32);
            let dt_m = if dt_m >= 2.0 * tg.dt() { dt_m } else { 0.0 };
            mollify_path(&path, dt_m, dx)?
        };
        let traj = solve(&phi_m, &path_m, &solver)?;
        ctx.steps += tg.n_steps();
        ctx.vector(&format!("y_final_m{m}.npbf"), traj.y().last().expect("final snapshot"))?;
        ctx.table(&format!("diagnostics_m{m}.csv"), &diagnostics_table(&traj))?;
        eps.push(e);
        phis.push(phi_m);
        paths.push(path_m);
        trajs.push(traj);
    }
    let finals: Vec<&VectorField> = trajs.iter().map(|t| t.y().last().expect("final")).collect();
    let dists = finals
        .windows(2)
        .map(|w| sup_distance(w[0], w[1]))
        .collect::<Result<Vec<_>, _>>()?;
    let family: Vec<FamilyMember<'_>> = (0..levels)
        .map(|m| FamilyMember {
            traj: &trajs[m],
            phi: &phis[m],
            eta: &paths[m],
            nu: cfg.physics.nu,
        })
        .collect();
    let bound = uniform_bound_check(&family)?;
    let mut t = Table::new(&["m", "epsilon", "sup_phi", "sup_y", "dist_next", "holder_exponent"]);
    for m in 0..levels {
        let holder = holder_rows(finals[m])
            .into_iter()
            .filter_map(|(_, e)| e.map(|(x, _)| x))
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))));
        t.push(vec![
            m.to_string(),
            fmt_f64(eps[m]),
            fmt_f64(bound.members[m].sup_phi),
            fmt_f64(bound.members[m].observed),
            fmt_opt(dists.get(m).copied()),
            fmt_opt(holder),
        ]);
    }
    ctx.table("table.csv", &t)?;
    let mut b = Table::new(&["m", "sup_phi", "observed", "sup_eta", "sup_grad_eta", "sup_drift_forcing", "envelope"]);
    for (m, mb) in bound.members.iter().enumerate() {
        b.push(vec![
            m.to_string(),
            fmt_f64(mb.sup_phi),
            fmt_f64(mb.observed),
            fmt_f64(mb.sup_eta),
            fmt_f64(mb.sup_grad_eta),
            fmt_f64(mb.sup_drift_forcing),
            fmt_opt(mb.envelope),
        ]);
    }
    ctx.table("bound.csv", &b)?;
    let at_floor = dists.iter().all(|&d| d <= 1e-8);
    let contracting = dists.windows(2).all(|w| w[1] < 0.8 * w[0]);
    let pass = bound.pass && (at_floor || contracting);
    let ratios: Vec<String> = dists.windows(2).map(|w| format!("{:.3}", w[1] / w[0])).collect();
    let shown: Vec<String> = dists.iter().map(|d| format!("{d:.3e}")).collect();
    ctx.note(format!("distances at T: {shown:?}; ratios {ratios:?}"));
    ctx.note(format!(
        "uniform bound: observed {:.6e} vs sup|φ_m| {:.6e}: {}",
        bound.observed,
        bound.sup_phi,
        if bound.pass { "ok" } else { "FAIL" }
    ));
    Ok(Some(pass))
}

fn check_causality(cfg: &LabConfig, ctx: &mut Ctx) -> Result<Option<bool>, LabError> {
    let grid = cfg.grid()?;
    let tg = cfg.time_grid()?;
    let phi = initial_field(cfg, &grid, ctx)?;
    let path = noise_path(cfg, &grid, &tg)?;
    let t_star = cfg.study.t_star.unwrap_or(0.5 * tg.horizon());
    let k_star = tg
        .index_of(t_star)
        .ok_or_else(|| LabError::Parameter(format!("t* = {t_star} is not on the time grid")))?;
    let other = reseed_suffix(&path, t_star, cfg.study.reseed)?.with_scheme(path.scheme());
    let solver = cfg.solver();
    let a = solve(&phi, &path, &solver)?;
    let b = solve(&phi, &other, &solver)?;
    ctx.steps = 2 * tg.n_steps();
    let mut t = Table::new(&["index", "time", "after_t_star", "bit_equal", "sup_diff"]);
    let mut prefix_equal = true;
    let mut suffix_diff: f64 = 0.0;
    for (i, &k) in a.snapshot_indices().iter().enumerate() {
        let eq = a.y()[i].bit_eq(&b.y()[i]) && a.yhat()[i].bit_eq(&b.yhat()[i]);
        let diff = sup_distance(&a.y()[i], &b.y()[i])?;
        if k <= k_star {
            prefix_equal &= eq;
        } else {
            suffix_diff = suffix_diff.max(diff);
        }
        t.push(vec![
            k.to_string(),
            fmt_f64(tg.time(k)),
            (k > k_star).to_string(),
            eq.to_string(),
            fmt_f64(diff),
        ]);
    }
    ctx.table("causality.csv", &t)?;
    let silent = path.sup_norm() == 0.0 && other.sup_norm() == 0.0;
    let pass = prefix_equal && (k_star == tg.n_steps() || suffix_diff > 1e-8 || silent);
    ctx.note(format!(
        "t* = {t_star}: prefix bit-identical {prefix_equal}, largest later difference {suffix_diff:.3e}"
    ));
    Ok(Some(pass))
}

fn estimate_holder_cmd(cfg: &LabConfig, ctx: &mut Ctx) -> Result<Option<bool>, LabError> {
    let path = cfg
        .study
        .field_file
        .clone()
        .ok_or_else(|| LabError::Parameter("estimate-holder needs a field file".into()))?;
    let data = ctx.read_field(&path)?;
    let mut summary = Table::new(&["component", "exponent", "constant"]);
    let mut scales = Table::new(&["component", "scale", "max_increment"]);
    for (a, c) in data.components.iter().enumerate() {
        let est = estimate_holder(c)?;
        ctx.note(format!(
            "component {a}: exponent {:.4}, constant {:.4}",
            est.exponent, est.constant
        ));
        summary.push(vec![a.to_string(), fmt_f64(est.exponent), fmt_f64(est.constant)]);
        for (s, m) in est.scales_used.iter().zip(&est.max_increments) {
            scales.push(vec![a.to_string(), fmt_f64(*s), fmt_f64(*m)]);
        }
    }
    ctx.table("holder.csv", &summary)?;
    ctx.table("holder_scales.csv", &scales)?;
    Ok(None)
}

/// Interior probe nodes spread along the diagonal of the box.
fn probe_nodes(grid: &Grid, count: usize) -> Vec<usize> {
    let n = grid.n() as f64;
    (0..count)
        .map(|p| {
            let frac = 0.5 + 0.05 * (p as f64 - (count as f64 - 1.0) / 2.0);
            let j = (frac * n).round() as usize;
            let mut idx = [0usize; 3];
            for (a, v) in idx.iter_mut().enumerate().take(grid.dim()) {
                // skew the axes so probes are not all on one line
                *v = (j + a * (p % 2)) % grid.n();
            }
            grid.ravel(&idx[..grid.dim()])
        })
        .collect()
}

fn default_cutoff(grid: &Grid, spec: &NoiseSpec) -> CutoffSpec {
    spec.cutoff.clone().unwrap_or_else(|| {
        let l = grid.box_length();
        CutoffSpec::centered(grid, 0.2 * l, 0.45 * l)
    })
}

/// Single-mode stochastic integral with `a ≡ 1`.
pub fn default_brownian(grid: &Grid, cutoff: CutoffSpec, seed: u64) -> NoiseSpec {
    let l = grid.box_length();
    let mut amplitude = vec![0.0; grid.dim()];
    amplitude[0] = 1.0;
    if grid.dim() > 1 {
        amplitude[1] = -0.5;
    }
    NoiseSpec {
        kind: NoiseKind::BrownianIntegral {
            modes: vec![NoiseMode {
                amplitude,
                shape: ProfileShape::Gaussian {
                    center: cutoff.center.clone(),
                    width: 0.15 * l,
                },
                time: TimeAmplitude::Constant { value: 1.0 },
            }],
        },
        cutoff: Some(cutoff),
        seed,
    }
}

pub fn default_white(grid: &Grid, cutoff: CutoffSpec, seed: u64) -> NoiseSpec {
    NoiseSpec {
        kind: NoiseKind::RegularizedWhite {
            epsilon: 3.0 * grid.spacing(),
            amplitude: 1.0,
        },
        cutoff: Some(cutoff),
        seed,
    }
}

/// Standard error of a sample variance of `n` Gaussian draws.
fn variance_stderr(var: f64, n: usize) -> f64 {
    var * (2.0 / (n as f64 - 1.0)).sqrt()
}

fn study_noise(cfg: &LabConfig, ctx: &mut Ctx) -> Result<Option<bool>, LabError> {
    let grid = cfg.grid()?;
    let tg = cfg.time_grid()?;
    let seeds = cfg.study.noise_seeds;
    if seeds < 10 {
        return Err(LabError::Parameter("need at least 10 seeds".into()));
    }
    let probes = probe_nodes(&grid, cfg.study.noise_probes);
    let cutoff = default_cutoff(&grid, &cfg.noise);
    let brownian = match cfg.noise.kind {
        NoiseKind::BrownianIntegral { .. } => cfg.noise.clone(),
        _ => default_brownian(&grid, cutoff.clone(), 0),
    };
    let white = match cfg.noise.kind {
        NoiseKind::RegularizedWhite { .. } => cfg.noise.clone(),
        _ => default_white(&grid, cutoff.clone(), 0),
    };
    let seed_of = |label: &str, s: usize| rng::derive_seed(cfg.seed, &format!("study-noise/{label}/{s}"));
    let mut pass = true;

    // stochastic integral: Var η_0(T, x) = Σ_i G_i0(x)² Σ_k a_i(t_k)² dt
    let samples: Vec<Vec<f64>> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let spec = NoiseSpec {
                seed: seed_of("brownian", s),
                ..brownian.clone()
            };
            let p = build_noise(&grid, &tg, &spec)?;
            let last = p.eta(tg.n_steps());
            Ok(probes.iter().map(|&i| last.component(0).values()[i]).collect())
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    ctx.steps += seeds * tg.n_steps();
    let zeta = cutting_function(&grid, brownian.cutoff.as_ref().expect("validated"))?;
    let modes = match &brownian.kind {
        NoiseKind::BrownianIntegral { modes } => modes.clone(),
        _ => unreachable!("brownian spec"),
    };
    let mut t = Table::new(&["probe", "node", "oracle_variance", "sample_variance", "stderr", "pass"]);
    for (p, &node) in probes.iter().enumerate() {
        let oracle: f64 = modes
            .iter()
            .map(|m| {
                let g = mode_profile(&grid, m, &zeta).component(0).values()[node];
                let quad: f64 = (0..tg.n_steps()).map(|k| m.time.eval(tg.time(k)).powi(2)).sum();
                g * g * quad * tg.dt()
            })
            .sum();
        let xs: Vec<f64> = samples.iter().map(|s| s[p]).collect();
        let mean = xs.iter().sum::<f64>() / seeds as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (seeds as f64 - 1.0);
        let se = variance_stderr(oracle, seeds);
        let ok = (var - oracle).abs() <= 3.0 * se;
        pass &= ok;
        t.push(vec![
            p.to_string(),
            node.to_string(),
            fmt_f64(oracle),
            fmt_f64(var),
            fmt_f64(se),
            ok.to_string(),
        ]);
        ctx.note(format!(
            "isometry probe {p}: oracle {oracle:.5e}, sample {var:.5e}, stderr {se:.2e} {}",
            if ok { "ok" } else { "FAIL" }
        ));
    }
    ctx.table("isometry.csv", &t)?;

    // regularized white noise: covariance of one increment between x and
    // its neighbour along the first axis
    let (eps, amp) = match white.kind {
        NoiseKind::RegularizedWhite { epsilon, amplitude } => (epsilon, amplitude),
        _ => unreachable!("white spec"),
    };
    let one_step = TimeGrid::new(tg.dt(), 1)?;
    let partner = |i: usize| grid.ravel_offset(&grid.unravel(i), &[1, 0, 0]);
    let samples: Vec<Vec<(f64, f64)>> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let spec = NoiseSpec {
                seed: seed_of("white", s),
                ..white.clone()
            };
            let p = build_noise(&grid, &one_step, &spec)?;
            let inc = p.eta(1).component(0).values();
            Ok(probes.iter().map(|&i| (inc[i], inc[partner(i)])).collect())
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    ctx.steps += seeds;
    let kernel = BumpKernel::new(&grid, eps);
    let zeta = cutting_function(&grid, white.cutoff.as_ref().expect("validated"))?;
    let scale = amp * amp * tg.dt() / grid.spacing().powi(grid.dim() as i32);
    let weights_at = |x: usize| -> HashMap<usize, f64> {
        let idx = grid.unravel(x);
        kernel
            .offsets()
            .iter()
            .zip(kernel.weights())
            .map(|(o, w)| (grid.ravel_offset(&idx, o), *w))
            .collect()
    };
    let mut t = Table::new(&[
        "probe",
        "node",
        "partner",
        "oracle_covariance",
        "sample_covariance",
        "stderr",
        "pass",
    ]);
    for (p, &node) in probes.iter().enumerate() {
        let other = partner(node);
        let wa = weights_at(node);
        let wb = weights_at(other);
        let overlap = |u: &HashMap<usize, f64>, v: &HashMap<usize, f64>| -> f64 {
            let mut keys: Vec<_> = u.keys().copied().collect();
            keys.sort_unstable();
            keys.iter()
                .filter_map(|k| v.get(k).map(|w| u[k] * w))
                .sum()
        };
        let za = zeta.values()[node];
        let zb = zeta.values()[other];
        let cov = scale * za * zb * overlap(&wa, &wb);
        let var_a = scale * za * za * overlap(&wa, &wa);
        let var_b = scale * zb * zb * overlap(&wb, &wb);
        let n = seeds as f64;
        let ma = samples.iter().map(|s| s[p].0).sum::<f64>() / n;
        let mb = samples.iter().map(|s| s[p].1).sum::<f64>() / n;
        let sample = samples
            .iter()
            .map(|s| (s[p].0 - ma) * (s[p].1 - mb))
            .sum::<f64>()
            / (n - 1.0);
        let se = ((var_a * var_b + cov * cov) / (n - 1.0)).sqrt();
        let ok = (sample - cov).abs() <= 3.0 * se;
        pass &= ok;
        t.push(vec![
            p.to_string(),
            node.to_string(),
            other.to_string(),
            fmt_f64(cov),
            fmt_f64(sample),
            fmt_f64(se),
            ok.to_string(),
        ]);
        ctx.note(format!(
            "covariance probe {p}: oracle {cov:.5e}, sample {sample:.5e}, stderr {se:.2e} {}",
            if ok { "ok" } else { "FAIL" }
        ));
    }
    ctx.table("covariance.csv", &t)?;
    Ok(Some(pass))
}

fn study_holder(cfg: &LabConfig, ctx: &mut Ctx) -> Result<Option<bool>, LabError> {
    let grid = Grid::new(1, cfg.study.holder_n, 1.0)?;
    let seeds = cfg.study.holder_seeds;
    if seeds == 0 {
        return Err(LabError::Parameter("need at least one seed".into()));
    }
    let mut per_seed = Table::new(&["hurst", "seed_index", "exponent"]);
    let mut summary = Table::new(&["hurst", "mean_exponent", "deviation", "pass"]);
    let mut pass = true;
    for &hurst in &cfg.study.hursts {
        let sampler = FbsSampler::new(grid, hurst, FbsMethod::Cholesky)?;
        let exps: Vec<f64> = (0..seeds)
            .into_par_iter()
            .map(|s| {
                let seed = rng::derive_seed(cfg.seed, &format!("study-holder/{s}"));
                estimate_holder(&sampler.sample(seed)).map(|e| e.exponent)
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (s, e) in exps.iter().enumerate() {
            per_seed.push(vec![fmt_f64(hurst), s.to_string(), fmt_f64(*e)]);
        }
        let mean = exps.iter().sum::<f64>() / seeds as f64;
        let ok = (mean - hurst).abs() <= cfg.study.holder_tolerance;
        pass &= ok;
        summary.push(vec![
            fmt_f64(hurst),
            fmt_f64(mean),
            fmt_f64(mean - hurst),
            ok.to_string(),
        ]);
        ctx.note(format!(
            "H = {hurst}: mean exponent {mean:.4} over {seeds} samples {}",
            if ok { "ok" } else { "FAIL" }
        ));
    }
    ctx.table("holder_samples.csv", &per_seed)?;
    ctx.table("holder_calibration.csv", &summary)?;
    Ok(Some(pass))
}
