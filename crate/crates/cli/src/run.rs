//! Subcommand dispatch and artifact writing.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use cqnls::dynamics::{evolve, DynamicsError, EvolutionConfig, TrajectoryDiagnostics};
use cqnls::functionals::{diagnostics, Diagnostics};
use cqnls::grid::{embed, make_grid, GridError};
use cqnls::params::{linf_constants, reduce, sound_speed, ParamsError};
use cqnls::snapshot::{Snapshot, SnapshotError};
use cqnls::solvers::{
    continuation, find_negative_endpoint, make_ansatz, newton_refine, path_max, AnsatzSpec, EndpointSearch, Method,
    SolveReport, SolverConfig, SolverError,
};
use cqnls::verify::{battery, constants_scan, BatteryConfig, CheckReport, ScanRow, Threshold};
use cqnls::{fmt_g17, ComplexField, CubicQuinticParams, Grid, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{parse_config, ConfigError, RunConfig, ScanSection, ValidationError};

#[derive(Debug, Parser)]
#[command(
    name = "cqnls",
    version,
    about = "Traveling waves of the cubic-quintic Schrodinger equation"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step; overrides the config value.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving CSV files and snapshots.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce [params] to the normalized problem and print its constants.
    Reduce,
    /// Compute a traveling wave and write its report and snapshot.
    Solve,
    /// Evolve a snapshot in time.
    Evolve {
        #[arg(long)]
        input: PathBuf,
    },
    /// Print the functionals of a snapshot.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the check battery and the parameter-space scans.
    Verify {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Tabulate the sup-norm constants over an (A, c) grid.
    Scan,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Params(_) => 3,
            RunError::Grid(_) | RunError::Snapshot(_) => 4,
            RunError::Solver(_) => 5,
            RunError::Dynamics(_) => 6,
            RunError::Io { .. } => 7,
        }
    }
}

/// Exit status of a finished subcommand.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_snapshot(path: &Path) -> Result<Snapshot, RunError> {
    Snapshot::load(path).map_err(|e| match e {
        SnapshotError::Io(source) => RunError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other.into(),
    })
}

fn missing(key: &str, message: &str) -> RunError {
    RunError::Config(ConfigError::Validation(vec![ValidationError {
        key: key.into(),
        message: message.into(),
    }]))
}

/// Reads the configuration named by `cli` (empty when none) and applies
/// the command-line seed.
pub fn load_config(cli: &Cli) -> Result<RunConfig, RunError> {
    let text = match &cli.config {
        Some(p) => fs::read_to_string(p).map_err(io_err(p))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Runs the subcommand of `cli`, writing human-readable output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<u8, RunError> {
    let cfg = load_config(cli)?;
    let out_dir = cli.out.clone();
    let mut ctx = Context {
        cfg: &cfg,
        out: out_dir,
        stdout,
    };
    match &cli.command {
        Command::Reduce => ctx.reduce(),
        Command::Solve => ctx.solve(),
        Command::Evolve { input } => ctx.evolve(input),
        Command::Diagnose { input } => ctx.diagnose(input),
        Command::Verify { input } => ctx.verify(input.as_deref()),
        Command::Scan => ctx.scan(),
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    out: Option<PathBuf>,
    stdout: &'a mut dyn Write,
}

fn grid_header(seed: u64, g: &Grid, a: f64, c: f64) -> String {
    let mut s = format!(
        "# seed={seed} d={} N={} L={} n1={} nt={}",
        g.dim(),
        g.half_length(),
        g.period(),
        g.n1(),
        g.nt()
    );
    let _ = write!(s, " A={a} c={c}");
    s
}

fn csv_join(values: &[f64]) -> String {
    values.iter().map(|x| fmt_g17(*x)).collect::<Vec<_>>().join(",")
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

impl Context<'_> {
    fn out_dir(&self) -> Result<PathBuf, RunError> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(dir)
    }

    fn write_file(&self, name: &str, contents: &str) -> Result<PathBuf, RunError> {
        let path = self.out_dir()?.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        Ok(path)
    }

    fn save_snapshot(&self, name: &str, snap: &Snapshot) -> Result<PathBuf, RunError> {
        let path = self.out_dir()?.join(name);
        snap.save(&path).map_err(|e| match e {
            SnapshotError::Io(source) => RunError::Io {
                path: path.clone(),
                source,
            },
            other => other.into(),
        })?;
        Ok(path)
    }

    fn say(&mut self, text: &str) -> Result<(), RunError> {
        self.stdout
            .write_all(text.as_bytes())
            .map_err(io_err(Path::new("<stdout>")))
    }

    fn reduce(&mut self) -> Result<u8, RunError> {
        let p = self
            .cfg
            .params
            .as_ref()
            .ok_or_else(|| missing("params", "reduce needs a [params] section"))?;
        let coeffs = CubicQuinticParams::new(p.alpha1, p.alpha3, p.alpha5);
        let r = reduce(&coeffs, p.c)?;
        let k = linf_constants(r.a, r.c)?;
        let fields = [
            ("A", r.a),
            ("gamma", r.gamma),
            ("vs", r.sound_speed),
            ("r1", k.r1),
            ("r2", k.r2),
            ("r3", k.r3),
            ("rbar", k.rbar),
        ];
        let mut text = String::new();
        for (name, v) in fields {
            let _ = writeln!(text, "{name}={v}");
        }
        self.say(&text)?;
        if self.out.is_some() {
            let mut csv = format!(
                "# seed={} alpha1={} alpha3={} alpha5={} c={}\n",
                self.cfg.seed, p.alpha1, p.alpha3, p.alpha5, p.c
            );
            csv.push_str("A,gamma,vs,r1,r2,r3,rbar\n");
            csv.push_str(&csv_join(&fields.map(|f| f.1)));
            csv.push('\n');
            self.write_file("reduce.csv", &csv)?;
        }
        Ok(EXIT_OK)
    }

    /// `(A, c)` of the solve, from `[solve]` or the reduced `[params]`.
    fn solve_parameters(&self) -> Result<(f64, f64), RunError> {
        let s = &self.cfg.solve;
        let params_c = self.cfg.params.as_ref().map(|p| p.c);
        let c = s.c.or(params_c).unwrap_or(0.0);
        let a = match (s.a, &self.cfg.params) {
            (Some(a), _) => a,
            (None, Some(p)) => reduce(&CubicQuinticParams::new(p.alpha1, p.alpha3, p.alpha5), c)?.a,
            (None, None) => return Err(missing("solve.A", "set solve.A or provide a [params] section")),
        };
        Ok((a, c))
    }

    fn jitter(&self, psi: &mut ComplexField) {
        let amp = self.cfg.solve.jitter;
        if amp == 0.0 {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let g = *psi.grid();
        let r = g.row_len();
        let rows = g.interior_rows();
        for v in &mut psi.values_mut()[rows.start * r..rows.end * r] {
            *v += C64::new(rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp));
        }
    }

    fn solve(&mut self) -> Result<u8, RunError> {
        let s = self.cfg.solve.clone();
        let (a, c) = self.solve_parameters()?;
        let vs = sound_speed(a);
        if !(0.0..vs).contains(&c) {
            return Err(SolverError::SubsonicRequired { c, sound_speed: vs }.into());
        }
        let grid = make_grid(s.d, s.n, s.l, s.n1, s.nt)?;
        let scfg = SolverConfig {
            max_iters: s.max_iters,
            step0: s.step0,
            tol_residual: s.tol,
            backtrack: s.backtrack,
            preconditioner: s.preconditioner,
            newton_switch: s.newton_switch,
            ..SolverConfig::default()
        };
        let c_start = if s.continuation_steps > 1 { 0.0 } else { c };
        let (start, peak) = if s.mountain_pass {
            let defaults = EndpointSearch::default();
            let search = EndpointSearch {
                family: s.family,
                amplitudes: vec![s.amplitude],
                widths: s.width.map_or(defaults.widths.clone(), |w| vec![w]),
                slopes: s.slope.map_or(defaults.slopes.clone(), |k| vec![k]),
                separation: s.separation,
                budget: s.budget,
                ..defaults
            };
            let ep = find_negative_endpoint(c_start, a, &grid, &search)?;
            let mut psi0 = ep.psi0;
            self.jitter(&mut psi0);
            let pm = path_max(&psi0, c_start, a, s.path_samples);
            (pm.peak_field(&psi0), Some((ep.t_star, pm.t_peak, pm.chi)))
        } else {
            let spec = AnsatzSpec {
                family: s.family,
                amplitude: s.amplitude,
                width: s.width.unwrap_or(2.0),
                separation: s.separation,
                slope: s.slope.unwrap_or(0.0),
                center: [0.0; 3],
            };
            let mut psi = embed(&make_ansatz(&spec, &grid)?);
            self.jitter(&mut psi);
            (psi, None)
        };

        let header = grid_header(self.cfg.seed, &grid, a, c);
        let report = if s.continuation_steps > 1 {
            let steps = continuation(0.0, c, s.continuation_steps, a, &start, &scfg);
            let mut csv = format!("{header}\nc,status,{}\n", Diagnostics::CSV_HEADER);
            for st in &steps {
                match &st.outcome {
                    Ok(rep) => {
                        let status = if rep.converged { "converged" } else { "not_converged" };
                        let _ = writeln!(csv, "{},{status},{}", fmt_g17(st.c), rep.diagnostics.csv_row());
                    }
                    Err(e) => {
                        let _ = writeln!(csv, "{},{},{}", fmt_g17(st.c), error_tag(e), ["NaN"; 8].join(","));
                    }
                }
            }
            self.write_file("continuation.csv", &csv)?;
            steps.into_iter().last().expect("at least two steps").outcome?
        } else {
            newton_refine(&start, c, a, &scfg)?
        };

        self.write_file("solve.csv", &solve_csv(&header, &report, peak))?;
        let mut hist = format!("{header}\niteration,residual_norm\n");
        for (k, r) in report.residual_history.iter().enumerate() {
            let _ = writeln!(hist, "{k},{}", fmt_g17(*r));
        }
        self.write_file("solve_history.csv", &hist)?;
        self.save_snapshot("solution.cqwf", &Snapshot::new(report.field.clone(), a, c))?;
        let d = &report.diagnostics;
        let summary = format!(
            "converged={} iterations={} residual_norm={:e} E={} P={} Ic={}\n",
            report.converged, report.iterations, d.residual_norm, d.energy, d.momentum, d.lagrangian
        );
        self.say(&summary)?;
        Ok(EXIT_OK)
    }

    fn evolve(&mut self, input: &Path) -> Result<u8, RunError> {
        let snap = load_snapshot(input)?;
        let e = &self.cfg.evolve;
        let ecfg = EvolutionConfig {
            dt: e.dt,
            t_final: e.t_final,
            monitor_stride: e.stride,
        };
        let (field, traj) = evolve(&snap.field, &ecfg, snap.a)?;
        let header = grid_header(self.cfg.seed, snap.grid(), snap.a, snap.c);
        let mut csv = format!(
            "{header} dt={} T={} stride={}\n{}\n",
            e.dt,
            e.t_final,
            e.stride,
            TrajectoryDiagnostics::CSV_HEADER
        );
        for r in &traj.rows {
            csv.push_str(&csv_join(&[r.t, r.energy, r.momentum, r.sup_mod, r.boundary_deviation]));
            csv.push('\n');
        }
        self.write_file("trajectory.csv", &csv)?;
        self.save_snapshot("final.cqwf", &Snapshot::new(field, snap.a, snap.c))?;
        let summary = format!(
            "rows={} energy_drift={:e} momentum_drift={:e}\n",
            traj.rows.len(),
            traj.energy_drift(),
            traj.momentum_drift()
        );
        self.say(&summary)?;
        Ok(EXIT_OK)
    }

    fn diagnose(&mut self, input: &Path) -> Result<u8, RunError> {
        let snap = load_snapshot(input)?;
        let d = diagnostics(&snap.field, snap.c, snap.a);
        let header = grid_header(self.cfg.seed, snap.grid(), snap.a, snap.c);
        let csv = format!("{header}\n{}\n{}\n", Diagnostics::CSV_HEADER, d.csv_row());
        self.say(&csv)?;
        if self.out.is_some() {
            self.write_file("diagnostics.csv", &csv)?;
        }
        Ok(EXIT_OK)
    }

    fn verify(&mut self, input: Option<&Path>) -> Result<u8, RunError> {
        let v = &self.cfg.verify;
        let bcfg = BatteryConfig {
            delta: v.delta,
            pohozaev_tol: v.pohozaev_tol,
            lagrangian_tol: v.lagrangian_tol,
            identity_samples: v.identity_samples,
            identity_tol: v.identity_tol,
            seed: self.cfg.seed,
            ..BatteryConfig::default()
        };
        let mut header = format!("# seed={}", self.cfg.seed);
        let mut checks = Vec::new();
        if let Some(path) = input {
            let snap = load_snapshot(path)?;
            header = grid_header(self.cfg.seed, snap.grid(), snap.a, snap.c);
            checks.extend(battery(&snap.field, snap.c, snap.a, &bcfg));
        }
        checks.extend(scan_checks(&self.cfg.scan));

        let mut csv = format!("{header}\ncheck,applicable,pass,margin,tolerance,context\n");
        for ch in &checks {
            let context = ch
                .context
                .iter()
                .map(|(k, x)| format!("{k}={}", fmt_g17(*x)))
                .collect::<Vec<_>>()
                .join(";");
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{context}",
                ch.name,
                ch.applicable,
                ch.pass,
                fmt_g17(ch.margin),
                fmt_g17(ch.tolerance)
            );
        }
        self.write_file("verify.csv", &csv)?;
        let failed: Vec<&CheckReport> = checks.iter().filter(|c| c.applicable && !c.pass).collect();
        let mut text = String::new();
        for ch in &checks {
            let status = match (ch.applicable, ch.pass) {
                (false, _) => "SKIP",
                (true, true) => "PASS",
                (true, false) => "FAIL",
            };
            let _ = writeln!(text, "{status} {} margin={:e}", ch.name, ch.margin);
        }
        self.say(&text)?;
        Ok(if failed.is_empty() { EXIT_OK } else { EXIT_CHECK_FAILED })
    }

    fn scan(&mut self) -> Result<u8, RunError> {
        let sc = &self.cfg.scan;
        let (rows, thresholds) = run_scan(sc);
        let header = format!(
            "# seed={} A=[{},{}]x{} c=[{},{}]x{} c_relative={} s_max={} samples={}",
            self.cfg.seed,
            sc.a_min,
            sc.a_max,
            sc.a_count,
            sc.c_min,
            sc.c_max,
            sc.c_count,
            sc.c_relative,
            sc.s_max,
            sc.samples
        );
        let mut csv = format!("{header}\n{}\n", ScanRow::CSV_HEADER);
        for r in &rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                fmt_g17(r.a),
                fmt_g17(r.c),
                fmt_g17(r.r1),
                fmt_g17(r.r2),
                fmt_g17(r.r3),
                r.ordered,
                fmt_g17(r.keylem_margin)
            );
        }
        self.write_file("scan.csv", &csv)?;
        let mut tcsv = format!("{header}\nA,c_star,first_on_grid\n");
        for t in &thresholds {
            let _ = writeln!(
                tcsv,
                "{},{},{}",
                fmt_g17(t.a),
                fmt_g17(t.c_star),
                fmt_g17(t.first_on_grid.unwrap_or(f64::NAN))
            );
        }
        self.write_file("thresholds.csv", &tcsv)?;
        let ordered = rows.iter().filter(|r| r.ordered).count();
        self.say(&format!("rows={} ordered={ordered}\n", rows.len()))?;
        Ok(EXIT_OK)
    }
}

fn error_tag(e: &SolverError) -> &'static str {
    match e {
        SolverError::FamilyDimensionMismatch { .. } => "family_dimension_mismatch",
        SolverError::InvalidAnsatz(_) => "invalid_ansatz",
        SolverError::NotFound { .. } => "not_found",
        SolverError::Stagnation { .. } => "stagnation",
        SolverError::LinearSolveFailure { .. } => "linear_solve_failure",
        SolverError::Divergence { .. } => "divergence",
        SolverError::SubsonicRequired { .. } => "subsonic_required",
        SolverError::InvalidConfig(_) => "invalid_config",
    }
}

fn solve_csv(header: &str, rep: &SolveReport, peak: Option<(f64, f64, f64)>) -> String {
    let (t_star, t_peak, chi) = peak.unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    let method = match rep.method {
        Method::Descent => "descent",
        Method::Newton => "newton",
    };
    let fallback = match &rep.fallback {
        None => "none",
        Some(cqnls::solvers::Fallback::LinearSolveFailure { .. }) => "linear_solve_failure",
        Some(cqnls::solvers::Fallback::LineSearchFailure) => "line_search_failure",
        Some(cqnls::solvers::Fallback::Divergence { .. }) => "divergence",
    };
    format!(
        "{header}\nconverged,method,fallback,iterations,{},t_star,t_peak,chi\n{},{method},{fallback},{},{},{}\n",
        Diagnostics::CSV_HEADER,
        rep.converged,
        rep.iterations,
        rep.diagnostics.csv_row(),
        csv_join(&[t_star, t_peak, chi])
    )
}

/// Scan rows and the ordering thresholds of every `A`.
fn run_scan(sc: &ScanSection) -> (Vec<ScanRow>, Vec<Threshold>) {
    let mut rows = Vec::new();
    let mut thresholds = Vec::new();
    for a in linspace(sc.a_min, sc.a_max, sc.a_count) {
        let scale = if sc.c_relative { sound_speed(a) } else { 1.0 };
        let cs: Vec<f64> = linspace(sc.c_min, sc.c_max, sc.c_count)
            .into_iter()
            .map(|f| f * scale)
            .collect();
        let table = constants_scan(&[a], &cs, sc.s_max, sc.samples);
        rows.extend(table.rows);
        thresholds.extend(table.thresholds);
    }
    (rows, thresholds)
}

/// Ordering and key-inequality checks over the subsonic part of the scan grid.
fn scan_checks(sc: &ScanSection) -> Vec<CheckReport> {
    let (rows, _) = run_scan(sc);
    let subsonic: Vec<&ScanRow> = rows.iter().filter(|r| r.c < sound_speed(r.a)).collect();
    let gap = subsonic
        .iter()
        .map(|r| {
            if r.ordered {
                (r.r2 - r.r1).min(r.r3 - r.r2)
            } else {
                -1.0
            }
        })
        .fold(f64::INFINITY, f64::min);
    let keylem = subsonic.iter().map(|r| r.keylem_margin).fold(f64::INFINITY, f64::min);
    let n = subsonic.len() as f64;
    let make = |name: &str, margin: f64| CheckReport {
        name: name.into(),
        pass: margin >= 0.0,
        margin,
        tolerance: 0.0,
        applicable: !subsonic.is_empty(),
        context: vec![("rows".into(), n)],
    };
    vec![make("scan_ordering", gap), make("scan_keylem", keylem)]
}
