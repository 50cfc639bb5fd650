//! Experiment runner behind the `normflow` binary.
//!
//! A run is described by an optional TOML file plus command-line
//! overrides. Every field has a default, and the fully resolved
//! configuration is echoed into `summary.json`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::activation::Smoothing;
use crate::dynamics::{
    gd_run, integrate_flow, AnnProblem, FlowConfig, GammaSchedule, Integrator, Termination, TrajectoryRecord,
};
use crate::error::{Error, Result};
use crate::one_neuron::{draw_initial, run_from, BoundednessConfig, BoundednessReport, OneNeuron};
use crate::output::{json_bytes, trajectory_csv_bytes, write_file};
use crate::params::{Architecture, ParamVector};
use crate::quadrature::{InputMeasure, QuadratureSettings};
use crate::realization::Objective;
use crate::seeding::stream_rng;
use crate::target::{Profile, TargetFunction};
use crate::verify::{Suite, VerifyReport, VerifySettings, DEFAULT_SEED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Flow,
    Gd,
    OneNeuron,
    Verify,
}

const CONFIG_DEFAULTS: &str = "\
Config file defaults:
  architecture = [1, 8, 1]        ([1, 1, 1] in one-neuron mode)
  measure      = uniform on [0, 1]^input_dim
  target       = abs-offset, center 0.3
  smoothing    = none (exact ReLU)
  quadrature   = nodes_per_axis 2048, panel_order 4, exact_order 3
  flow         = t_end 1 (100 one-neuron), step 1e-3, rk4, reproject, gamma 1, record_every 1
  gd           = steps 1000, gamma 0.1
  one_neuron   = trajectories 1, slack 1e-6, conservation_rate 1e-6, tail_fraction 0.1
  init         = scale 1, random state
  seed         = 20240601, output_dir = out";

/// Command line of the `normflow` binary.
#[derive(Debug, Parser)]
#[command(
    name = "normflow",
    version,
    about = "Normalized gradient flow and descent for ReLU networks",
    after_help = CONFIG_DEFAULTS
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the projected gradient flow of a network.
    Flow(RunArgs),
    /// Run normalized gradient descent on a network.
    Gd(RunArgs),
    /// Integrate the one-neuron flow and check its Lyapunov monitors.
    OneNeuron(RunArgs),
    /// Run the property suite and write a pass/fail report.
    Verify(RunArgs),
}

impl Command {
    pub fn mode(&self) -> Mode {
        match self {
            Command::Flow(_) => Mode::Flow,
            Command::Gd(_) => Mode::Gd,
            Command::OneNeuron(_) => Mode::OneNeuron,
            Command::Verify(_) => Mode::Verify,
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Flow(a) | Command::Gd(a) | Command::OneNeuron(a) | Command::Verify(a) => a,
        }
    }
}

/// Flags shared by all subcommands. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Root seed [default: 20240601].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Time horizon [default: 1; 100 for one-neuron].
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Step size [default: 1e-3].
    #[arg(long)]
    pub step: Option<f64>,
    /// Time stepper [default: rk4].
    #[arg(long, value_parser = ["euler", "rk4"])]
    pub integrator: Option<String>,
    /// Skip the retraction after each step.
    #[arg(long)]
    pub no_reproject: bool,
    /// Step factor: a number or "rescaled" [default: 1; 0.1 for gd].
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
}

/// Partial flow settings; unset fields keep the mode default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowOverrides {
    pub t_end: Option<f64>,
    pub step: Option<f64>,
    pub integrator: Option<Integrator>,
    pub reproject: Option<bool>,
    pub gamma: Option<GammaSchedule>,
    pub record_every: Option<usize>,
}

impl FlowOverrides {
    fn apply(&self, mut cfg: FlowConfig) -> FlowConfig {
        if let Some(v) = self.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = self.step {
            cfg.step = v;
        }
        if let Some(v) = self.integrator {
            cfg.integrator = v;
        }
        if let Some(v) = self.reproject {
            cfg.reproject = v;
        }
        if let Some(v) = &self.gamma {
            cfg.gamma = v.clone();
        }
        if let Some(v) = self.record_every {
            cfg.record_every = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GdConfig {
    pub steps: usize,
    pub gamma: GammaSchedule,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self { steps: 1000, gamma: GammaSchedule::Constant(0.1) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OneNeuronSettings {
    /// Number of seeded trajectories.
    pub trajectories: usize,
    pub slack: f64,
    pub conservation_rate: f64,
    pub tail_fraction: f64,
}

impl Default for OneNeuronSettings {
    fn default() -> Self {
        let b = BoundednessConfig::default();
        Self { trajectories: 1, slack: b.slack, conservation_rate: b.conservation_rate, tail_fraction: b.tail_fraction }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    /// Standard deviation of the Gaussian raw draw.
    pub scale: f64,
    /// Explicit raw initial vector; replaces the random draw.
    pub state: Option<Vec<f64>>,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { scale: 1.0, state: None }
    }
}

/// Configuration as written in a file; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub architecture: Option<Vec<usize>>,
    pub measure: Option<InputMeasure>,
    pub target: Option<Profile>,
    pub quadrature: Option<QuadratureSettings>,
    /// Smoothing parameter `r` of the activation; exact ReLU when unset.
    pub smoothing: Option<u64>,
    pub flow: FlowOverrides,
    pub gd: GdConfig,
    pub one_neuron: OneNeuronSettings,
    pub init: InitConfig,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// Configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub mode: Mode,
    pub architecture: Vec<usize>,
    pub measure: InputMeasure,
    pub target: Profile,
    pub quadrature: QuadratureSettings,
    pub smoothing: Option<u64>,
    pub flow: FlowConfig,
    pub gd: GdConfig,
    pub one_neuron: OneNeuronSettings,
    pub init: InitConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config { field: field.into(), reason: reason.into() }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err("config", e.to_string().trim_end()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fold command-line flags into the file settings.
    pub fn with_args(mut self, args: &RunArgs) -> Result<Self> {
        if let Some(s) = args.seed {
            self.seed = Some(s);
        }
        if let Some(o) = &args.out {
            self.output_dir = Some(o.clone());
        }
        if let Some(t) = args.t_end {
            self.flow.t_end = Some(t);
        }
        if let Some(h) = args.step {
            self.flow.step = Some(h);
        }
        if let Some(i) = &args.integrator {
            self.flow.integrator = Some(i.parse()?);
        }
        if args.no_reproject {
            self.flow.reproject = Some(false);
        }
        if let Some(g) = &args.gamma {
            let g: GammaSchedule = g.parse()?;
            self.flow.gamma = Some(g.clone());
            self.gd.gamma = g;
        }
        Ok(self)
    }

    /// Fill defaults for `mode` and validate.
    pub fn resolve(&self, mode: Mode) -> Result<ResolvedConfig> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(config_err("mode", format!("file says {m:?} but the subcommand is {mode:?}")));
            }
        }
        let one = mode == Mode::OneNeuron;
        let architecture = match (&self.architecture, one) {
            (Some(a), true) if a.as_slice() != [1, 1, 1] => {
                return Err(config_err("architecture", "one-neuron mode requires (1, 1, 1)"));
            }
            (Some(a), _) => a.clone(),
            (None, true) => vec![1, 1, 1],
            (None, false) => vec![1, 8, 1],
        };
        Architecture::new(&architecture).map_err(|e| config_err("architecture", e.to_string()))?;
        let measure = match &self.measure {
            Some(m) => {
                if one && *m != InputMeasure::unit_interval() {
                    return Err(config_err("measure", "one-neuron mode requires the uniform measure on [0, 1]"));
                }
                m.clone()
            }
            None => InputMeasure::uniform(0.0, 1.0, architecture[0])?,
        };
        measure.validate().map_err(|e| config_err("measure", e.to_string()))?;
        if measure.dim() != architecture[0] {
            return Err(config_err("measure", "dimension differs from the input width"));
        }
        let target = self.target.clone().unwrap_or(Profile::AbsOffset { center: 0.3 });
        target.validate().map_err(|e| config_err("target", e.to_string()))?;
        let base = if one { BoundednessConfig::default().flow } else { FlowConfig::default() };
        let flow = self.flow.apply(base);
        flow.validate()?;
        self.gd.gamma.validate()?;
        if self.one_neuron.trajectories == 0 {
            return Err(config_err("one_neuron.trajectories", "must be ≥ 1"));
        }
        if !(self.init.scale.is_finite() && self.init.scale > 0.0) {
            return Err(config_err("init.scale", "must be finite and > 0"));
        }
        if self.smoothing == Some(0) {
            return Err(config_err("smoothing", "r must be ≥ 1"));
        }
        Ok(ResolvedConfig {
            mode,
            architecture,
            measure,
            target,
            quadrature: self.quadrature.unwrap_or_default(),
            smoothing: self.smoothing,
            flow,
            gd: self.gd.clone(),
            one_neuron: self.one_neuron.clone(),
            init: self.init.clone(),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            output_dir: self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
        })
    }
}

/// Contents of `summary.json` for one trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub termination: Termination,
    pub rows: usize,
    pub steps_taken: usize,
    pub sup_norm: f64,
    pub initial_risk: f64,
    pub final_risk: f64,
    pub max_risk_increase: f64,
    pub max_psi_dev: f64,
    pub degenerate_at: Option<f64>,
}

impl TrajectorySummary {
    pub fn of(rec: &TrajectoryRecord) -> Self {
        Self {
            termination: rec.termination.clone(),
            rows: rec.len(),
            steps_taken: rec.steps_taken,
            sup_norm: rec.sup_norm(),
            initial_risk: rec.risk.first().copied().unwrap_or(f64::NAN),
            final_risk: rec.risk.last().copied().unwrap_or(f64::NAN),
            max_risk_increase: if rec.len() > 1 { rec.max_risk_increase() } else { 0.0 },
            max_psi_dev: rec.max_psi_dev(),
            degenerate_at: rec.degenerate_at,
        }
    }
}

#[derive(Serialize)]
struct NetworkSummary<'a> {
    seed: u64,
    config: &'a ResolvedConfig,
    #[serde(flatten)]
    trajectory: TrajectorySummary,
}

#[derive(Serialize)]
struct OneNeuronSummary<'a> {
    seed: u64,
    config: &'a ResolvedConfig,
    fbar: f64,
    lipschitz: f64,
    blow_ups: usize,
    monitor_violations: usize,
    sup_norm: f64,
    runs: Vec<OneNeuronRun>,
}

#[derive(Serialize)]
struct OneNeuronRun {
    directory: Option<String>,
    #[serde(flatten)]
    trajectory: TrajectorySummary,
    report: BoundednessReport,
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    seed: u64,
    config: &'a ResolvedConfig,
    all_passed: bool,
    passed: usize,
    failed: Vec<u8>,
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Human-readable lines for stdout.
    pub lines: Vec<String>,
    /// False only for a verify run with failing criteria.
    pub success: bool,
}

fn network_problem(cfg: &ResolvedConfig) -> Result<AnnProblem> {
    let arch = Arc::new(Architecture::new(&cfg.architecture)?);
    let out_dim = arch.output_dim();
    let obj =
        Objective::new(cfg.measure.clone(), TargetFunction::profile(cfg.target.clone(), out_dim)?, cfg.quadrature)?;
    let problem = AnnProblem::new(obj, ParamVector::zeros(arch))?;
    Ok(match cfg.smoothing {
        Some(r) => problem.with_smoothing(Smoothing::Smoothed(r)),
        None => problem,
    })
}

fn network_init(cfg: &ResolvedConfig) -> Result<Vec<f64>> {
    let arch = Arc::new(Architecture::new(&cfg.architecture)?);
    match &cfg.init.state {
        Some(v) if v.len() != arch.param_count() => {
            Err(config_err("init.state", format!("expected {} entries, got {}", arch.param_count(), v.len())))
        }
        Some(v) => Ok(v.clone()),
        None => Ok(ParamVector::sample_normal(arch, &mut stream_rng(cfg.seed, 0), cfg.init.scale).into_values()),
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// Execute a resolved configuration and write its artifacts.
pub fn run(cfg: &ResolvedConfig) -> Result<RunOutcome> {
    prepare_dir(&cfg.output_dir)?;
    match cfg.mode {
        Mode::Flow | Mode::Gd => run_network(cfg),
        Mode::OneNeuron => run_one_neuron(cfg),
        Mode::Verify => run_verify(cfg),
    }
}

fn run_network(cfg: &ResolvedConfig) -> Result<RunOutcome> {
    let problem = network_problem(cfg)?;
    let xi = network_init(cfg)?;
    let rec = if cfg.mode == Mode::Gd {
        gd_run(&problem, &xi, cfg.gd.steps, &cfg.gd.gamma)?
    } else {
        integrate_flow(&problem, &xi, &cfg.flow)?
    };
    write_file(&cfg.output_dir.join("trajectory.csv"), &trajectory_csv_bytes(&rec)?)?;
    let summary = NetworkSummary { seed: cfg.seed, config: cfg, trajectory: TrajectorySummary::of(&rec) };
    write_file(&cfg.output_dir.join("summary.json"), &json_bytes(&summary)?)?;
    let s = &summary.trajectory;
    Ok(RunOutcome {
        lines: vec![format!(
            "{}: {} rows, risk {:.6e} -> {:.6e}, sup-norm {:.6}, max ψ deviation {:.1e}",
            rec.termination, s.rows, s.initial_risk, s.final_risk, s.sup_norm, s.max_psi_dev
        )],
        success: true,
    })
}

fn run_one_neuron(cfg: &ResolvedConfig) -> Result<RunOutcome> {
    let problem = OneNeuron::new(cfg.target.clone())?;
    let bcfg = BoundednessConfig {
        flow: cfg.flow.clone(),
        slack: cfg.one_neuron.slack,
        conservation_rate: cfg.one_neuron.conservation_rate,
        tail_fraction: cfg.one_neuron.tail_fraction,
        init_scale: cfg.init.scale,
    };
    let count = cfg.one_neuron.trajectories;
    if let Some(v) = &cfg.init.state {
        if v.len() != 3 {
            return Err(config_err("init.state", format!("expected 3 entries, got {}", v.len())));
        }
        if count != 1 {
            return Err(config_err("one_neuron.trajectories", "an explicit init.state allows one trajectory"));
        }
    }
    let results: Vec<(TrajectoryRecord, BoundednessReport)> = {
        use rayon::prelude::*;
        (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let xi = match &cfg.init.state {
                    Some(v) => v.clone(),
                    None => draw_initial(&mut stream_rng(cfg.seed, i), cfg.init.scale).to_vec(),
                };
                run_from(&problem, &xi, &bcfg)
            })
            .collect::<Result<_>>()?
    };
    let mut runs = Vec::with_capacity(count);
    for (i, (rec, report)) in results.into_iter().enumerate() {
        let directory = (count > 1).then(|| format!("run_{i:04}"));
        let dir = match &directory {
            Some(d) => cfg.output_dir.join(d),
            None => cfg.output_dir.clone(),
        };
        prepare_dir(&dir)?;
        write_file(&dir.join("trajectory.csv"), &trajectory_csv_bytes(&rec)?)?;
        runs.push(OneNeuronRun { directory, trajectory: TrajectorySummary::of(&rec), report });
    }
    let summary = OneNeuronSummary {
        seed: cfg.seed,
        config: cfg,
        fbar: problem.fbar(),
        lipschitz: problem.lipschitz(),
        blow_ups: runs.iter().filter(|r| r.report.termination.is_blow_up()).count(),
        monitor_violations: runs.iter().map(|r| r.report.lyapunov_violations).sum(),
        sup_norm: runs.iter().map(|r| r.report.sup_norm).fold(0.0, f64::max),
        runs,
    };
    write_file(&cfg.output_dir.join("summary.json"), &json_bytes(&summary)?)?;
    Ok(RunOutcome {
        lines: vec![format!(
            "{} trajectories: blow-ups {}, monitor violations {}, sup-norm {:.6}",
            count, summary.blow_ups, summary.monitor_violations, summary.sup_norm
        )],
        success: true,
    })
}

fn run_verify(cfg: &ResolvedConfig) -> Result<RunOutcome> {
    let suite = Suite::new(VerifySettings { seed: cfg.seed });
    let report: VerifyReport = suite.run_all()?;
    write_file(&cfg.output_dir.join("verify_report.json"), &json_bytes(&report)?)?;
    let summary = VerifySummary {
        seed: cfg.seed,
        config: cfg,
        all_passed: report.all_passed,
        passed: report.criteria.iter().filter(|c| c.passed).count(),
        failed: report.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect(),
    };
    write_file(&cfg.output_dir.join("summary.json"), &json_bytes(&summary)?)?;
    Ok(RunOutcome { lines: report.criteria.iter().map(|c| c.line()).collect(), success: report.all_passed })
}

/// Parse, resolve and run one command. Exit codes: 0 success, 1 failing
/// verify criteria, 2 invalid configuration or I/O failure.
pub fn main_with(cli: Cli) -> i32 {
    let mode = cli.command.mode();
    let args = cli.command.args();
    let resolved = (|| {
        let file = match &args.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        file.with_args(args)?.resolve(mode)
    })();
    let cfg = match resolved {
        Ok(c) => c,
        Err(e) => {
            eprintln!("normflow: {e}");
            return 2;
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.success {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("normflow: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let c = ExperimentConfig::default().resolve(Mode::Flow).unwrap();
        assert_eq!(c.architecture, vec![1, 8, 1]);
        assert_eq!(c.flow, FlowConfig::default());
        let o = ExperimentConfig::default().resolve(Mode::OneNeuron).unwrap();
        assert_eq!(o.architecture, vec![1, 1, 1]);
        assert_eq!(o.flow.t_end, 100.0);
    }

    #[test]
    fn one_neuron_rejects_other_shapes() {
        let c = ExperimentConfig::from_toml("architecture = [1, 2, 1]").unwrap();
        match c.resolve(Mode::OneNeuron) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "architecture"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_named() {
        let e = ExperimentConfig::from_toml("[flow]\nstepsize = 0.1").unwrap_err();
        assert!(e.to_string().contains("stepsize"), "{e}");
    }

    #[test]
    fn invalid_step_is_named() {
        let c = ExperimentConfig::from_toml("[flow]\nstep = -1.0").unwrap();
        match c.resolve(Mode::Flow) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "step"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flags_override_file() {
        let c = ExperimentConfig::from_toml("seed = 1\n[flow]\nt_end = 2.0\ngamma = 0.5").unwrap();
        let args = RunArgs {
            seed: Some(9),
            t_end: Some(3.0),
            gamma: Some("rescaled".into()),
            no_reproject: true,
            ..RunArgs::default()
        };
        let r = c.with_args(&args).unwrap().resolve(Mode::Flow).unwrap();
        assert_eq!(r.seed, 9);
        assert_eq!(r.flow.t_end, 3.0);
        assert_eq!(r.flow.gamma, GammaSchedule::Rescaled);
        assert!(!r.flow.reproject);
    }

    #[test]
    fn full_file_parses() {
        let text = r#"
            mode = "flow"
            architecture = [2, 4, 1]
            smoothing = 100
            seed = 5
            output_dir = "runs/a"
            [measure]
            kind = "uniform"
            a = 0.0
            b = 1.0
            dim = 2
            [target]
            kind = "piecewise-linear"
            knots = [[0.0, 0.0], [0.5, 1.0], [1.0, 0.0]]
            [quadrature]
            nodes_per_axis = 32
            [flow]
            integrator = "euler"
            gamma = "rescaled"
            [gd]
            steps = 10
            [init]
            scale = 0.5
        "#;
        let r = ExperimentConfig::from_toml(text).unwrap().resolve(Mode::Flow).unwrap();
        assert_eq!(r.quadrature.nodes_per_axis, 32);
        assert_eq!(r.quadrature.panel_order, QuadratureSettings::default().panel_order);
        assert_eq!(r.flow.integrator, Integrator::Euler);
        assert_eq!(r.smoothing, Some(100));
        assert!(matches!(r.target, Profile::PiecewiseLinear { .. }));
    }
}
