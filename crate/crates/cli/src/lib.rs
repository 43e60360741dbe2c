//! Command-line front end: reads a key-value run file, dispatches to the
//! numeric modules and writes CSV/JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bloch_purity::bangbang::{synthesize, ControlSign, SwitchOptions, SynthesisOptions};
use bloch_purity::io::{self, KeyValues, ModelSource};
use bloch_purity::ritz::{RitzProblem, SolveOptions};
use bloch_purity::{build_dissipation, CubicVariant, Error, PlanarSystem};
use nalgebra::Vector2;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::NoConvergence { .. } | Error::Integration { .. }) => EXIT_NO_CONVERGENCE,
            CliError::Core(Error::ChimneyViolation { .. } | Error::NonMonotoneRadius { .. }) => EXIT_INFEASIBLE,
            _ => EXIT_INVALID,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Model,
    Apogee,
    Simulate,
    Constant,
    Ritz,
    Bangbang,
}

impl std::str::FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "model" => Command::Model,
            "apogee" => Command::Apogee,
            "simulate" => Command::Simulate,
            "constant" => Command::Constant,
            "ritz" => Command::Ritz,
            "bangbang" => Command::Bangbang,
            other => {
                return Err(CliError::Config(format!(
                    "unknown command '{other}' (expected model, apogee, simulate, constant, ritz or bangbang)"
                )))
            }
        })
    }
}

const OPTION_KEYS: &[&str] = &[
    "command",
    "order",
    "restarts",
    "seed",
    "dt",
    "horizon",
    "t_min",
    "scan_step",
    "cubic_variant",
    "initial_sign",
    "eps",
    "delta",
    "max_switches",
    "q0",
    "controls",
    "samples",
    "out",
];

/// Everything a run needs, after merging the file with command-line overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelSource,
    pub order: usize,
    pub restarts: usize,
    pub seed: u64,
    pub dt: f64,
    pub horizon: f64,
    pub t_min: f64,
    pub scan_step: f64,
    pub cubic_variant: CubicVariant,
    pub initial_sign: ControlSign,
    pub eps: f64,
    pub delta: f64,
    pub max_switches: usize,
    pub q0: Option<Vector2<f64>>,
    /// Piecewise-constant control file for `simulate`, relative to the run file.
    pub controls: Option<PathBuf>,
    /// Angular samples of the chimney profile.
    pub samples: usize,
    pub out: PathBuf,
}

/// Values given on the command line; they win over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub command: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub order: Option<usize>,
    pub restarts: Option<usize>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub initial_sign: Option<String>,
    pub cubic_variant: Option<String>,
}

impl RunConfig {
    pub fn from_file(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_text(&text, base, overrides)
    }

    pub fn from_text(text: &str, base: &Path, ov: &Overrides) -> CliResult<Self> {
        let kv = KeyValues::parse(text)?;
        if kv.is_empty() {
            return Err(CliError::Config("the run file is empty".into()));
        }
        for e in kv.entries() {
            if !(OPTION_KEYS.contains(&e.key.as_str()) || io::is_model_key(&e.key)) {
                return Err(Error::Parse {
                    line: e.line,
                    msg: format!("unknown key '{}'", e.key),
                }
                .into());
            }
        }
        let command: Command = match (&ov.command, kv.str("command")) {
            (Some(c), _) => c.parse()?,
            (None, Some(c)) => c.parse()?,
            (None, None) => return Err(CliError::Config("no command given".into())),
        };
        let model = io::load_model(&kv)?;

        let q0 = match kv.reals("q0")? {
            None => None,
            Some(v) if v.len() == 2 => Some(Vector2::new(v[0], v[1])),
            Some(v) => {
                return Err(CliError::Config(format!("q0 needs 2 components, got {}", v.len())));
            }
        };
        let initial_sign = match &ov.initial_sign {
            Some(s) => s.parse()?,
            None => kv.parsed::<ControlSign>("initial_sign")?.unwrap_or(ControlSign::Plus),
        };
        let cubic_variant = match &ov.cubic_variant {
            Some(s) => s.parse()?,
            None => kv.parsed::<CubicVariant>("cubic_variant")?.unwrap_or_default(),
        };
        let cfg = Self {
            command,
            model,
            order: ov.order.map_or_else(|| kv.parsed("order"), |v| Ok(Some(v)))?.unwrap_or(7),
            restarts: ov.restarts.map_or_else(|| kv.parsed("restarts"), |v| Ok(Some(v)))?.unwrap_or(25),
            seed: ov.seed.map_or_else(|| kv.parsed("seed"), |v| Ok(Some(v)))?.unwrap_or(0),
            dt: ov.dt.map_or_else(|| kv.f64("dt"), |v| Ok(Some(v)))?.unwrap_or(1e-3),
            horizon: ov.horizon.map_or_else(|| kv.f64("horizon"), |v| Ok(Some(v)))?.unwrap_or(6.0),
            t_min: kv.f64("t_min")?.unwrap_or(1e-6),
            scan_step: kv.f64("scan_step")?.unwrap_or(1e-3),
            cubic_variant,
            initial_sign,
            eps: kv.f64("eps")?.unwrap_or(1e-3),
            delta: kv.f64("delta")?.unwrap_or(1e-3),
            max_switches: kv.parsed("max_switches")?.unwrap_or(8),
            q0,
            controls: kv.str("controls").map(|p| base.join(p)),
            samples: kv.parsed("samples")?.unwrap_or(720),
            out: ov
                .out
                .clone()
                .unwrap_or_else(|| base.join(kv.str("out").unwrap_or("out"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.order == 0 || self.order > 12 {
            return bad(format!("order must be in 1..=12, got {}", self.order));
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        for (name, v) in [("dt", self.dt), ("horizon", self.horizon), ("t_min", self.t_min), ("scan_step", self.scan_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.eps > 0.0 && self.eps < 1.0) || !(0.0..1.0).contains(&self.delta) {
            return bad("eps must lie in (0, 1) and delta in [0, 1)".into());
        }
        if self.samples < 3 {
            return bad("samples must be at least 3".into());
        }
        if self.command == Command::Simulate && self.controls.is_none() {
            return bad("simulate needs a 'controls' file".into());
        }
        Ok(())
    }

    fn planar(&self) -> CliResult<PlanarSystem> {
        Ok(self.model.planar()?)
    }

    fn start(&self, p: &PlanarSystem) -> CliResult<Vector2<f64>> {
        match self.q0 {
            Some(q) => Ok(q),
            None => Ok(p.endpoints(self.eps, self.delta)?.0),
        }
    }
}

/// Text for the diagnostic stream and the files that were written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub written: Vec<PathBuf>,
}

impl Outcome {
    fn write(&mut self, dir: &Path, name: &str, contents: &str) -> CliResult<()> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.stdout.push_str(s.as_ref());
        self.stdout.push('\n');
    }
}

pub fn run(cfg: &RunConfig) -> CliResult<Outcome> {
    let mut out = Outcome::default();
    match cfg.command {
        Command::Model => run_model(cfg, &mut out)?,
        Command::Apogee => run_apogee(cfg, &mut out)?,
        Command::Simulate => run_simulate(cfg, &mut out)?,
        Command::Constant => run_constant(cfg, &mut out)?,
        Command::Ritz => run_ritz(cfg, &mut out)?,
        Command::Bangbang => run_bangbang(cfg, &mut out)?,
    }
    Ok(out)
}

fn fmt_vec(v: impl IntoIterator<Item = f64>) -> String {
    let parts: Vec<String> = v.into_iter().map(io::fmt_g9).collect();
    format!("[{}]", parts.join(", "))
}

fn describe_planar(p: &PlanarSystem, out: &mut Outcome) {
    out.line(format!(
        "planar: b1 = {}, b2 = {}, alpha1 = {}, alpha2 = {}",
        io::fmt_g9(p.b1),
        io::fmt_g9(p.b2),
        io::fmt_g9(p.alpha1),
        io::fmt_g9(p.alpha2)
    ));
    match p.drift_reaches_apogee() {
        Some(case) => out.line(format!("uncontrolled flow reaches the apogee: {}", case.label())),
        None => out.line("uncontrolled flow does not reach the apogee"),
    }
}

fn run_model(cfg: &RunConfig, out: &mut Outcome) -> CliResult<()> {
    match &cfg.model {
        ModelSource::Planar(p) => describe_planar(p, out),
        ModelSource::Lindblad(spec) => {
            let m = build_dissipation(spec)?;
            out.line(format!("lindblad operators: {}", m.lindblad_count));
            out.line(format!("b = {}", fmt_vec(m.b.iter().copied())));
            for (name, mat) in [("A", m.a), ("B", m.matrix)] {
                for r in 0..3 {
                    let label = if r == 0 { format!("{name} = ") } else { "    ".into() };
                    out.line(format!("{label}{}", fmt_vec(mat.row(r).iter().copied())));
                }
            }
            if m.lindblad_count == 1 {
                let red = m.reduce_to_planar()?;
                describe_planar(&red.system, out);
                out.line(format!("dropped axis rate = {}", io::fmt_g9(red.dropped_rate)));
            }
        }
    }
    Ok(())
}

fn run_apogee(cfg: &RunConfig, out: &mut Outcome) -> CliResult<()> {
    let planar = match &cfg.model {
        ModelSource::Planar(p) => Some(*p),
        ModelSource::Lindblad(spec) => {
            let m = build_dissipation(spec)?;
            let geo = m.apogee()?;
            out.line(format!("apogee = {}", fmt_vec(geo.apogee.iter().copied())));
            out.line(format!("radius = {}", io::fmt_g9(geo.apogee_radius)));
            if m.lindblad_count == 1 {
                Some(m.reduce_to_planar()?.system)
            } else {
                None
            }
        }
    };
    if let Some(p) = planar {
        let geo = p.apogee()?;
        if geo.degenerate {
            out.line("b = 0: the chimney is degenerate and the apogee is the origin");
        }
        out.line(format!("q_apogee = {}", fmt_vec(geo.apogee.iter().copied())));
        out.line(format!("radius = {}", io::fmt_g9(geo.apogee_radius)));
        let profile = p.drift().radius_profile(cfg.samples)?;
        out.write(&cfg.out, "chimney.csv", &io::chimney_csv(&profile))?;
    }
    Ok(())
}

fn run_simulate(cfg: &RunConfig, out: &mut Outcome) -> CliResult<()> {
    let p = cfg.planar()?;
    let path = cfg.controls.as_ref().expect("validated");
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let schedule = io::read_control_schedule(&text)?;
    let q0 = cfg.start(&p)?;
    let traj = p.integrate(q0, |t| io::control_at(&schedule, t), cfg.dt, cfg.horizon)?;
    let last = traj.last().expect("non-empty trajectory");
    out.line(format!(
        "t = {}: q = {}, purity = {}",
        io::fmt_g9(last.t),
        fmt_vec(last.q.iter().copied()),
        io::fmt_g9(last.purity)
    ));
    out.write(&cfg.out, "trajectory.csv", &io::trajectory_csv(&traj))?;
    Ok(())
}

fn run_constant(cfg: &RunConfig, out: &mut Outcome) -> CliResult<()> {
    let p = cfg.planar()?;
    let a = p.constant_control_analysis(cfg.cubic_variant)?;
    out.line(format!("cubic ({:?}): {}", cfg.cubic_variant, fmt_vec([a.a, a.b, a.c, a.d])));
    out.line(format!("real roots: {}", fmt_vec(a.real_roots.iter().copied())));
    out.line(format!("roots in [-1, 1]: {}", fmt_vec(a.roots_in_unit_interval.iter().copied())));
    out.line(format!("condition: {}", a.condition_case.label()));
    if !a.conditions_agree {
        out.line("warning: the closed-form condition disagrees with the direct root count");
    }
    if let Some(u) = a.selected_root {
        let q = p.constant_control_fixed_point(u);
        out.line(format!("u = {} steers to {}", io::fmt_g9(u), fmt_vec(q.iter().copied())));
    }
    Ok(())
}

fn run_ritz(cfg: &RunConfig, out: &mut Outcome) -> CliResult<()> {
    let p = cfg.planar()?;
    let prob = RitzProblem::from_system(p, cfg.order, cfg.eps, cfg.delta)?;
    let sol = prob.solve(&SolveOptions {
        restarts: cfg.restarts,
        seed: cfg.seed,
        ..SolveOptions::default()
    })?;
    let mut summary = String::new();
    let _ = write!(
        summary,
        "order {}: time = {}, energy = {}, nu = {:.3e} ({} of {} restarts converged)",
        sol.order,
        io::fmt_g9(sol.best.time),
        io::fmt_g9(sol.best.energy),
        sol.best.nu,
        sol.candidates.len(),
        cfg.restarts
    );
    out.line(summary);
    out.line(format!("c = {}", fmt_vec(sol.best.c.iter().copied())));
    out.write(&cfg.out, "ritz.json", &io::ritz_json(&sol))?;
    out.write(&cfg.out, "ritz_trajectory.csv", &io::trajectory_csv(&sol.trajectory))?;
    out.write(&cfg.out, "ritz_control.csv", &io::control_profile_csv(&sol.profile))?;
    Ok(())
}

fn run_bangbang(cfg: &RunConfig, out: &mut Outcome) -> CliResult<()> {
    let p = cfg.planar()?;
    let q0 = match cfg.q0 {
        Some(q) => q,
        None if p.b().norm() == 0.0 => {
            return Err(CliError::Config("b = 0: give the initial state with 'q0'".into()));
        }
        None => cfg.start(&p)?,
    };
    let opts = SynthesisOptions {
        dt: cfg.dt,
        max_switches: cfg.max_switches,
        switch: SwitchOptions {
            t_min: cfg.t_min,
            scan_step: cfg.scan_step,
            ..SwitchOptions::default()
        },
    };
    let syn = synthesize(q0, cfg.initial_sign, &p, cfg.horizon, &opts)?;
    out.line(format!(
        "initial sign {}: {} switches within {}",
        cfg.initial_sign,
        syn.schedule.switches.len(),
        io::fmt_g9(cfg.horizon)
    ));
    for (k, s) in syn.schedule.switches.iter().enumerate() {
        out.line(format!(
            "switch {}: t = {}, gap = {}, q = {}",
            k + 1,
            io::fmt_g9(s.t),
            io::fmt_g9(s.gap),
            fmt_vec(s.q.iter().copied())
        ));
    }
    out.write(&cfg.out, "schedule.json", &io::schedule_json(&syn.schedule))?;
    out.write(&cfg.out, "bangbang_arcs.csv", &io::arcs_csv(&syn.arcs))?;
    out.write(&cfg.out, "bangbang_plus.csv", &io::trajectory_csv(&syn.never_switch[0]))?;
    out.write(&cfg.out, "bangbang_minus.csv", &io::trajectory_csv(&syn.never_switch[1]))?;
    Ok(())
}
