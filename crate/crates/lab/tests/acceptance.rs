//! End-to-end acceptance runs. Each criterion prints one PASS/FAIL line;
//! the target exits with failure if any criterion fails. It runs without
//! the libtest harness so the report is never captured.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use burgers_core::fields::Discretization;
use burgers_core::initial_data::{CutoffSpec, FbsMethod};
use burgers_core::solver::TimeScheme;
use burgers_lab::commands::default_brownian;
use burgers_lab::config::{InitialSection, PsiSection};
use burgers_lab::manifest::{RunManifest, MANIFEST_NAME};
use burgers_lab::table::Table;
use burgers_lab::{replay, run, CommandKind, LabConfig, LabError, Outcome};

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// A command run on one worker thread, remembered for the replay check.
struct Recorded {
    label: String,
    dir: PathBuf,
    outcome: Outcome,
    elapsed: Duration,
}

struct Suite {
    root: tempfile::TempDir,
    runs: Vec<Recorded>,
    lines: Vec<(usize, bool, String)>,
}

impl Suite {
    fn exec(&mut self, label: &str, kind: CommandKind, cfg: &LabConfig) -> Result<usize, LabError> {
        let dir = self.root.path().join(label);
        let start = Instant::now();
        let outcome = pool(1).install(|| run(kind, cfg, &dir))?;
        self.runs.push(Recorded {
            label: label.into(),
            dir,
            outcome,
            elapsed: start.elapsed(),
        });
        Ok(self.runs.len() - 1)
    }

    fn report(&mut self, criterion: usize, pass: bool, detail: String) {
        println!(
            "criterion {criterion}: {} - {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        self.lines.push((criterion, pass, detail));
    }

    fn table(&self, run: usize, name: &str) -> Table {
        Table::read(&self.runs[run].dir.join(name)).expect("output table")
    }
}

fn at(values: &[f64], times: &[f64], t: f64) -> f64 {
    let i = times
        .iter()
        .position(|s| (s - t).abs() < 1e-9)
        .unwrap_or_else(|| panic!("no row at t = {t}"));
    values[i]
}

/// Rows of `distances.csv` belonging to resolution `n`.
fn rows_for(t: &Table, n: usize) -> (Vec<f64>, Vec<f64>) {
    let ns = t.column("n").unwrap();
    let times = t.column("time").unwrap();
    let linf = t.column("linf").unwrap();
    let keep: Vec<usize> = (0..ns.len()).filter(|&i| ns[i] == n as f64).collect();
    (
        keep.iter().map(|&i| times[i]).collect(),
        keep.iter().map(|&i| linf[i]).collect(),
    )
}

/// Largest one-step increase of `sup_y`, relative to its initial value.
fn max_relative_increase(t: &Table) -> f64 {
    let sup = t.column("sup_y").unwrap();
    let phi = sup[0].max(f64::MIN_POSITIVE);
    sup.windows(2)
        .map(|w| (w[1] - w[0]) / phi)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn criterion_1(s: &mut Suite) -> Result<(), LabError> {
    let mut cfg = LabConfig::default();
    cfg.grid.n = 256;
    cfg.physics.nu = 0.1;
    cfg.physics.scheme = TimeScheme::IfRk4;
    cfg.physics.discretization = Discretization::central4();
    cfg.time.horizon = 1.0;
    cfg.time.dt = 1e-3;
    cfg.initial = InitialSection::Potential {
        psi: PsiSection::Cosine {
            amplitude: 1.0,
            modes: vec![1],
        },
    };
    cfg.study.tolerance = 1e-3;
    cfg.study.refine = true;
    cfg.study.refine_ratio = 4.0;
    let r = s.exec("c1", CommandKind::VerifyColehopf, &cfg)?;
    let t = s.table(r, "distances.csv");
    let (tc, ec) = rows_for(&t, 256);
    let (tf, ef) = rows_for(&t, 512);
    let mut pass = s.runs[r].outcome.verdict == Some(true);
    let mut parts = Vec::new();
    for tt in [0.25, 0.5, 1.0] {
        let coarse = at(&ec, &tc, tt);
        let fine = at(&ef, &tf, tt);
        pass &= coarse <= 1e-3 && coarse / fine >= 4.0;
        parts.push(format!("t={tt}: {coarse:.2e}, ratio {:.1}", coarse / fine));
    }
    let secs = s.runs[r].elapsed.as_secs_f64();
    pass &= secs < 10.0;
    s.report(
        1,
        pass,
        format!("{}; both resolutions in {secs:.2} s on one thread", parts.join("; ")),
    );
    Ok(())
}

fn criterion_2(s: &mut Suite) -> Result<(), LabError> {
    let mut cfg = LabConfig::default();
    cfg.grid.d = 2;
    cfg.grid.n = 128;
    cfg.physics.nu = 0.1;
    cfg.physics.snapshot_stride = 50;
    cfg.time.horizon = 0.5;
    cfg.time.dt = 1e-3;
    cfg.initial = InitialSection::Potential {
        psi: PsiSection::Cosine {
            amplitude: 1.0,
            modes: vec![1, 1],
        },
    };
    cfg.study.tolerance = 5e-3;
    let r = s.exec("c2", CommandKind::VerifyColehopf, &cfg)?;
    let t = s.table(r, "distances.csv");
    let err = t.column("linf")?.into_iter().fold(0.0, f64::max);
    let oracle_curl = t.column("oracle_curl_defect")?.into_iter().fold(0.0, f64::max);
    let diag = s.table(r, "diagnostics_n128.csv");
    let sup = diag.column("sup_y")?;
    let solver_curl = diag.column("curl_defect")?.into_iter().fold(0.0, f64::max);
    let pass = s.runs[r].outcome.verdict == Some(true)
        && err <= 5e-3
        && oracle_curl <= 1e-10
        && solver_curl <= 1e-4 * sup[0];
    s.report(
        2,
        pass,
        format!(
            "sup distance {err:.2e}, oracle curl defect {oracle_curl:.1e}, solver curl defect {solver_curl:.1e} (limit {:.1e})",
            1e-4 * sup[0]
        ),
    );
    Ok(())
}

fn criterion_3(s: &mut Suite) -> Result<(), LabError> {
    let mut cfg = LabConfig::default();
    cfg.grid.d = 2;
    cfg.grid.n = 64;
    cfg.physics.nu = 0.2;
    cfg.time.horizon = 0.5;
    cfg.time.dt = 2e-3;
    cfg.initial = InitialSection::Vortex {
        amplitude: 0.5,
        mode: 1,
    };
    let sim = s.exec("c3-sim", CommandKind::Simulate, &cfg)?;
    let curl = s
        .table(sim, "diagnostics.csv")
        .column("curl_defect")?
        .first()
        .copied()
        .unwrap_or(0.0);
    cfg.study.traj_dir = Some(s.runs[sim].dir.clone());
    cfg.mc.n_paths = 20_000;
    cfg.mc.dt_mc = 2e-3;
    cfg.mc.seed = 7;
    cfg.mc.points = 10;
    cfg.mc.tau_fractions = vec![0.0, 0.25, 0.5];
    cfg.mc.slack = 5e-3;
    let r = s.exec("c3-fbsde", CommandKind::VerifyFbsde, &cfg)?;
    let t = s.table(r, "report.csv");
    let res = t.column("residual")?;
    let se = t.column("stderr")?;
    let all_within = res.iter().zip(&se).all(|(r, e)| *r <= 3.0 * e + 5e-3);
    let worst = res.iter().copied().fold(0.0, f64::max);
    let secs = s.runs[r].elapsed.as_secs_f64();
    let pass = s.runs[r].outcome.verdict == Some(true)
        && all_within
        && res.len() == 10
        && curl > 0.1
        && secs < 60.0;
    s.report(
        3,
        pass,
        format!(
            "initial curl defect {curl:.3}; {} points, largest residual {worst:.2e}; Monte Carlo {secs:.1} s on one thread",
            res.len()
        ),
    );
    Ok(())
}

fn criterion_4(s: &mut Suite) -> Result<(), LabError> {
    let mut cfg = LabConfig::default();
    cfg.grid.d = 2;
    cfg.grid.n = 64;
    cfg.grid.box_length = 1.0;
    cfg.physics.nu = 0.05;
    cfg.physics.scheme = TimeScheme::SspRk2;
    cfg.physics.discretization = Discretization::central2();
    cfg.time.horizon = 0.1;
    cfg.time.dt = 1e-3;
    cfg.initial = InitialSection::Fbs {
        hurst: 0.5,
        seed: 11,
        method: FbsMethod::Cholesky,
        r_inner: 0.2,
        r_outer: 0.4,
        center: None,
    };
    cfg.study.levels = 4;
    cfg.study.eps0_cells = 8.0;
    let r = s.exec("c4", CommandKind::StudyMollification, &cfg)?;
    let t = s.table(r, "table.csv");
    let dists: Vec<f64> = t.column("dist_next")?.into_iter().filter(|d| !d.is_nan()).collect();
    let ratios: Vec<f64> = dists.windows(2).map(|w| w[1] / w[0]).collect();
    let sup_phi = t.column("sup_phi")?.into_iter().fold(0.0, f64::max);
    let sup_y = (0..4)
        .map(|m| {
            s.table(r, &format!("diagnostics_m{m}.csv"))
                .column("sup_y")
                .unwrap()
                .into_iter()
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let pass = s.runs[r].outcome.verdict == Some(true)
        && dists.len() == 3
        && ratios.iter().all(|q| *q < 0.8)
        && sup_y <= (1.0 + 1e-6) * sup_phi;
    s.report(
        4,
        pass,
        format!(
            "distances {:?}, ratios {:?}; max sup|y_m| {sup_y:.6} vs max sup|φ_m| {sup_phi:.6}",
            dists.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>(),
            ratios.iter().map(|q| format!("{q:.2}")).collect::<Vec<_>>()
        ),
    );
    Ok(())
}

fn criterion_5(s: &mut Suite) {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut series = 0;
    for rec in &s.runs {
        let deterministic = rec.outcome.manifest.config.noise.kind
            == burgers_core::noise::NoiseKind::Zero;
        if !deterministic {
            continue;
        }
        for f in &rec.outcome.manifest.files {
            if f.path.starts_with("diagnostics") {
                let t = Table::read(&rec.dir.join(&f.path)).unwrap();
                worst = worst.max(max_relative_increase(&t));
                series += 1;
            }
        }
    }
    let pass = series > 0 && worst <= 1e-6;
    s.report(
        5,
        pass,
        format!("{series} zero-noise sup|y| series; largest one-step increase {worst:.2e}·sup|φ|"),
    );
}

fn criterion_6(s: &mut Suite) -> Result<(), LabError> {
    let mut cfg = LabConfig::default();
    cfg.seed = 3;
    cfg.grid.d = 2;
    cfg.grid.n = 64;
    cfg.physics.nu = 0.2;
    cfg.time.horizon = 0.5;
    cfg.time.dt = 2e-3;
    cfg.initial = InitialSection::Vortex {
        amplitude: 0.5,
        mode: 1,
    };
    let grid = cfg.grid()?;
    cfg.noise = default_brownian(&grid, CutoffSpec::centered(&grid, 0.2 * 2.0 * PI, 0.45 * 2.0 * PI), 3);
    cfg.study.t_star = Some(0.25);
    let r = s.exec("c6", CommandKind::CheckCausality, &cfg)?;
    let t = s.table(r, "causality.csv");
    let after = t.column("sup_diff")?;
    let times = t.column("time")?;
    let eq = &t.rows;
    let prefix = eq
        .iter()
        .zip(&times)
        .filter(|(_, tt)| **tt <= 0.25 + 1e-12)
        .all(|(row, _)| row[3] == "true");
    let later = after
        .iter()
        .zip(&times)
        .filter(|(_, tt)| **tt > 0.25 + 1e-12)
        .map(|(d, _)| *d)
        .fold(0.0, f64::max);
    let pass = s.runs[r].outcome.verdict == Some(true) && prefix && later > 1e-8;
    s.report(
        6,
        pass,
        format!("prefix bit-identical {prefix}; largest later sup difference {later:.3e}"),
    );
    Ok(())
}

fn criterion_7(s: &mut Suite) -> Result<(), LabError> {
    let mut cfg = LabConfig::default();
    cfg.grid.d = 2;
    cfg.grid.n = 32;
    cfg.time.horizon = 0.5;
    cfg.time.dt = 2e-3;
    cfg.study.noise_seeds = 1000;
    cfg.study.noise_probes = 5;
    let r = s.exec("c7", CommandKind::StudyNoise, &cfg)?;
    let iso = s.table(r, "isometry.csv");
    let cov = s.table(r, "covariance.csv");
    let z = |t: &Table, a: &str, b: &str| -> f64 {
        let x = t.column(a).unwrap();
        let y = t.column(b).unwrap();
        let e = t.column("stderr").unwrap();
        (0..x.len()).map(|i| ((x[i] - y[i]) / e[i]).abs()).fold(0.0, f64::max)
    };
    let zi = z(&iso, "sample_variance", "oracle_variance");
    let zc = z(&cov, "sample_covariance", "oracle_covariance");
    let secs = s.runs[r].elapsed.as_secs_f64();
    let pass = s.runs[r].outcome.verdict == Some(true)
        && iso.rows.len() == 5
        && cov.rows.len() == 5
        && zi <= 3.0
        && zc <= 3.0
        && secs < 30.0;
    s.report(
        7,
        pass,
        format!("worst |z|: isometry {zi:.2}, covariance {zc:.2}; {secs:.1} s on one thread"),
    );
    Ok(())
}

fn criterion_8(s: &mut Suite) -> Result<(), LabError> {
    let mut cfg = LabConfig::default();
    cfg.study.hursts = vec![0.3, 0.5, 0.7];
    cfg.study.holder_n = 1024;
    cfg.study.holder_seeds = 20;
    cfg.study.holder_tolerance = 0.1;
    let r = s.exec("c8", CommandKind::StudyHolder, &cfg)?;
    let t = s.table(r, "holder_calibration.csv");
    let hs = t.column("hurst")?;
    let means = t.column("mean_exponent")?;
    let pass = s.runs[r].outcome.verdict == Some(true)
        && hs.iter().zip(&means).all(|(h, m)| (m - h).abs() <= 0.1);
    let detail = hs
        .iter()
        .zip(&means)
        .map(|(h, m)| format!("H={h}: {m:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    s.report(8, pass, detail);
    Ok(())
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    match (fs::read(a), fs::read(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn criterion_9(s: &mut Suite) -> Result<(), LabError> {
    let eight = pool(8);
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for rec in &s.runs {
        let again = s.root.path().join(format!("{}-replay", rec.label));
        let manifest = rec.dir.join(MANIFEST_NAME);
        let outcome = eight.install(|| replay(&manifest, &again))?;
        let first = RunManifest::read(&manifest)?;
        if outcome.manifest.config_hash != first.config_hash || outcome.manifest.files.len() != first.files.len() {
            mismatched.push(format!("{}: inventory", rec.label));
        }
        for f in &first.files {
            compared += 1;
            if !same_bytes(&rec.dir.join(&f.path), &again.join(&f.path)) {
                mismatched.push(format!("{}/{}", rec.label, f.path));
            }
        }
    }
    let pass = mismatched.is_empty() && compared > 0;
    s.report(
        9,
        pass,
        if pass {
            format!("{} runs, {compared} files bit-identical after replay on 8 threads", s.runs.len())
        } else {
            format!("differing: {mismatched:?}")
        },
    );
    Ok(())
}

fn main() -> std::process::ExitCode {
    let mut s = Suite {
        root: tempfile::tempdir().expect("scratch directory"),
        runs: Vec::new(),
        lines: Vec::new(),
    };
    let steps: [(usize, fn(&mut Suite) -> Result<(), LabError>); 7] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    for (c, f) in steps {
        if let Err(e) = f(&mut s) {
            s.report(c, false, format!("error: {e}"));
        }
    }
    criterion_5(&mut s);
    if let Err(e) = criterion_9(&mut s) {
        s.report(9, false, format!("error: {e}"));
    }
    s.lines.sort_by_key(|l| l.0);
    println!("summary:");
    for (c, pass, detail) in &s.lines {
        println!("  {c}: {} ({detail})", if *pass { "PASS" } else { "FAIL" });
    }
    let failed: Vec<usize> = s.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    if failed.is_empty() {
        std::process::ExitCode::SUCCESS
    } else {
        eprintln!("failed criteria: {failed:?}");
        std::process::ExitCode::FAILURE
    }
}
