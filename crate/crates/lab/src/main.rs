use std::path::PathBuf;
use std::process::ExitCode;

use burgers_core::fields::{DiffScheme, Discretization};
use burgers_core::initial_data::{CutoffSpec, FbsMethod};
use burgers_core::noise::NoiseSpec;
use burgers_core::solver::TimeScheme;
use burgers_lab::commands::{default_brownian, default_white};
use burgers_lab::config::{InitialSection, PsiSection};
use burgers_lab::{replay, run, CommandKind, LabConfig, LabError, Outcome, THREADS_ENV};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "burgers-lab", version, about = "Stochastic Burgers experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample an initial condition and report its regularity.
    GenerateInitial(Opts),
    /// Integrate the equation and save snapshots.
    Simulate(Opts),
    /// Compare against the exact potential solution.
    VerifyColehopf(Opts),
    /// Check a saved trajectory against its Monte Carlo representation.
    VerifyFbsde(Opts),
    /// Solve along a sequence of mollified data.
    StudyMollification(Opts),
    /// Reseed the noise after t* and compare trajectories.
    CheckCausality(Opts),
    /// Estimate the Hölder exponent of a field file.
    EstimateHolder(Opts),
    /// Compare noise sample statistics with their closed forms.
    StudyNoise(Opts),
    /// Calibrate the Hölder estimator on sampled sheets.
    StudyHolder(Opts),
    /// Re-run a recorded command from its manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Spectral,
    Central2,
    Central4,
}

#[derive(Clone, Copy, ValueEnum)]
enum TimeArg {
    ImexCn,
    Etd,
    SspRk2,
    IfRk4,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Zero,
    Brownian,
    White,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Fbs,
    Potential,
    Vortex,
}

#[derive(Args)]
struct Opts {
    /// JSON config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    box_length: Option<f64>,
    /// Time horizon.
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, value_enum)]
    scheme: Option<SpaceArg>,
    #[arg(long, value_enum)]
    time_scheme: Option<TimeArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Initial condition kind.
    #[arg(long, value_enum, alias = "kind")]
    init: Option<InitArg>,
    #[arg(long = "H", alias = "hurst")]
    hurst: Option<f64>,
    /// Potential for a potential initial condition: `zero`, `cos`, or a field file.
    #[arg(long)]
    psi: Option<String>,
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    refine: bool,
    #[arg(long)]
    traj: Option<PathBuf>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    dt_mc: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    t_star: Option<f64>,
    #[arg(long)]
    field: Option<PathBuf>,
}

fn psi_arg(value: &str, d: usize) -> PsiSection {
    match value {
        "zero" => PsiSection::Zero,
        "cos" => PsiSection::Cosine {
            amplitude: 1.0,
            modes: vec![1; d],
        },
        path => PsiSection::File { path: path.into() },
    }
}

impl Opts {
    fn config(&self) -> Result<LabConfig, LabError> {
        let mut cfg = match &self.config {
            Some(p) => LabConfig::load(p)?,
            None => LabConfig::default(),
        };
        if let Some(v) = self.d {
            cfg.grid.d = v;
        }
        if let Some(v) = self.n {
            cfg.grid.n = v;
        }
        if let Some(v) = self.box_length {
            cfg.grid.box_length = v;
        }
        if let Some(v) = self.horizon {
            cfg.time.horizon = v;
        }
        if let Some(v) = self.dt {
            cfg.time.dt = v;
        }
        if let Some(v) = self.nu {
            cfg.physics.nu = v;
        }
        if let Some(s) = self.scheme {
            cfg.physics.discretization = match s {
                SpaceArg::Spectral => Discretization::spectral(),
                SpaceArg::Central2 => Discretization::central2(),
                SpaceArg::Central4 => Discretization::central4(),
            };
        }
        if let Some(s) = self.time_scheme {
            cfg.physics.scheme = match s {
                TimeArg::ImexCn => TimeScheme::ImexCn,
                TimeArg::Etd => TimeScheme::Etd,
                TimeArg::SspRk2 => TimeScheme::SspRk2,
                TimeArg::IfRk4 => TimeScheme::IfRk4,
            };
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        let grid = cfg.grid()?;
        let l = cfg.grid.box_length;
        match self.init {
            Some(InitArg::Fbs) => {
                cfg.initial = InitialSection::Fbs {
                    hurst: self.hurst.unwrap_or(0.5),
                    seed: cfg.seed,
                    method: FbsMethod::default(),
                    r_inner: 0.2 * l,
                    r_outer: 0.4 * l,
                    center: None,
                };
            }
            Some(InitArg::Potential) => {
                cfg.initial = InitialSection::Potential {
                    psi: psi_arg(self.psi.as_deref().unwrap_or("cos"), cfg.grid.d),
                };
            }
            Some(InitArg::Vortex) => {
                cfg.initial = InitialSection::Vortex {
                    amplitude: 0.5,
                    mode: 1,
                };
            }
            None => {
                if let Some(psi) = &self.psi {
                    cfg.initial = InitialSection::Potential {
                        psi: psi_arg(psi, cfg.grid.d),
                    };
                }
                if let (Some(h), InitialSection::Fbs { hurst, .. }) = (self.hurst, &mut cfg.initial) {
                    *hurst = h;
                }
            }
        }
        if let Some(kind) = self.noise {
            let cutoff = cfg
                .noise
                .cutoff
                .clone()
                .unwrap_or_else(|| CutoffSpec::centered(&grid, 0.2 * l, 0.45 * l));
            let seed = cfg.seed;
            cfg.noise = match kind {
                NoiseArg::Zero => NoiseSpec::zero(),
                NoiseArg::Brownian => default_brownian(&grid, cutoff, seed),
                NoiseArg::White => default_white(&grid, cutoff, seed),
            };
        }
        if let Some(v) = self.tol {
            cfg.study.tolerance = v;
        }
        cfg.study.refine |= self.refine;
        if let Some(v) = &self.traj {
            cfg.study.traj_dir = Some(v.clone());
        }
        if let Some(v) = self.points {
            cfg.mc.points = v;
        }
        if let Some(v) = self.paths {
            cfg.mc.n_paths = v;
        }
        if let Some(v) = self.dt_mc {
            cfg.mc.dt_mc = v;
        }
        if let Some(v) = self.levels {
            cfg.study.levels = v;
        }
        if let Some(v) = self.t_star {
            cfg.study.t_star = Some(v);
        }
        if let Some(v) = &self.field {
            cfg.study.field_file = Some(v.clone());
        }
        if cfg.physics.discretization.scheme != DiffScheme::Spectral {
            cfg.physics.discretization.dealias = false;
        }
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<Outcome, LabError> {
    let (kind, opts) = match cli.command {
        Cmd::Replay { manifest, out } => return replay(&manifest, &out),
        Cmd::GenerateInitial(o) => (CommandKind::GenerateInitial, o),
        Cmd::Simulate(o) => (CommandKind::Simulate, o),
        Cmd::VerifyColehopf(o) => (CommandKind::VerifyColehopf, o),
        Cmd::VerifyFbsde(o) => (CommandKind::VerifyFbsde, o),
        Cmd::StudyMollification(o) => (CommandKind::StudyMollification, o),
        Cmd::CheckCausality(o) => (CommandKind::CheckCausality, o),
        Cmd::EstimateHolder(o) => (CommandKind::EstimateHolder, o),
        Cmd::StudyNoise(o) => (CommandKind::StudyNoise, o),
        Cmd::StudyHolder(o) => (CommandKind::StudyHolder, o),
    };
    let cfg = opts.config()?;
    run(kind, &cfg, &opts.out)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(threads) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match execute(cli) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            match outcome.verdict {
                Some(true) => {
                    println!("verdict: pass");
                    ExitCode::SUCCESS
                }
                Some(false) => {
                    println!("verdict: FAIL");
                    ExitCode::from(5)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", e.machine_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
