//! Fixed-step integration of the projected flow `dΘ/dt = −γ G(Θ)` and the
//! normalized gradient descent map `ϑ ↦ φ(ϑ − γ G(ϑ))`.
//!
//! Both drivers are generic over [`FlowProblem`], which supplies the risk,
//! the raw and projected gradients, the retraction and the constraint
//! diagnostics. [`AnnProblem`] covers general networks; the one-neuron module
//! provides a closed-form specialization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::activation::Smoothing;
use crate::error::{Error, Result};
use crate::gradients::{norm, risk_and_gradient};
use crate::manifold::{grad_psi, project_gradient, psi_max_dev, renormalize_phi, rescale_full};
use crate::params::ParamVector;
use crate::realization::Objective;

/// `‖G‖` at or below this counts as stationary.
pub const STATIONARY_TOL: f64 = 1e-12;
/// Any state component above this in magnitude counts as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e12;
/// Upper cap on the rescaled step factor.
pub const GAMMA_CAP: f64 = 1e6;

/// Risk and gradients at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub risk: f64,
    /// Unprojected gradient `𝒢`.
    pub raw: Vec<f64>,
    /// Projected gradient `G`.
    pub projected: Vec<f64>,
}

impl Evaluation {
    pub fn grad_norm(&self) -> f64 {
        norm(&self.projected)
    }

    pub fn raw_grad_norm(&self) -> f64 {
        norm(&self.raw)
    }
}

/// A constrained risk-minimization problem in flat coordinates.
pub trait FlowProblem: Sync {
    fn dim(&self) -> usize;

    /// Column names for the state coordinates.
    fn param_names(&self) -> Vec<String> {
        (1..=self.dim()).map(|j| format!("theta{j}")).collect()
    }

    fn evaluate(&self, state: &[f64]) -> Result<Evaluation>;

    /// Retraction onto the constraint set.
    fn renormalize(&self, state: &[f64]) -> Vec<f64>;

    /// Maximal deviation of the constraint functions from 1.
    fn constraint_dev(&self, state: &[f64]) -> f64;

    /// Starting point of the dynamics for the raw draw `ξ`.
    fn initial_state(&self, xi: &[f64]) -> Result<Vec<f64>>;

    /// Sparse gradients of the constraint functions.
    fn normals(&self, state: &[f64]) -> Vec<Vec<(usize, f64)>>;

    /// True when a constrained sub-vector has collapsed to zero.
    fn degenerate(&self, _state: &[f64]) -> bool {
        false
    }

    fn extra_names(&self) -> Vec<String> {
        Vec::new()
    }

    fn extras(&self, _state: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    /// Optional categorical label per state.
    fn tag(&self, _state: &[f64]) -> Option<String> {
        None
    }
}

/// `max_n |⟨G, n⟩|` over the constraint normals.
pub fn tangency_residual<P: FlowProblem + ?Sized>(problem: &P, state: &[f64]) -> Result<f64> {
    let ev = problem.evaluate(state)?;
    Ok(problem
        .normals(state)
        .iter()
        .map(|n| n.iter().map(|&(p, g)| g * ev.projected[p]).sum::<f64>().abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            _ => Err(Error::Config { field: "integrator".into(), reason: format!("expected euler or rk4, got {s:?}") }),
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrator::Euler => "euler",
            Integrator::Rk4 => "rk4",
        })
    }
}

/// Step factor `γ`: constant, per-step list (last entry repeats) or the
/// rescaled ratio `‖𝒢‖²/‖G‖²` capped at [`GAMMA_CAP`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaRepr", into = "GammaRepr")]
pub enum GammaSchedule {
    Constant(f64),
    List(Vec<f64>),
    Rescaled,
}

impl Default for GammaSchedule {
    fn default() -> Self {
        GammaSchedule::Constant(1.0)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GammaRepr {
    Num(f64),
    List(Vec<f64>),
    Word(String),
}

impl TryFrom<GammaRepr> for GammaSchedule {
    type Error = Error;

    fn try_from(r: GammaRepr) -> Result<Self> {
        let g = match r {
            GammaRepr::Num(x) => GammaSchedule::Constant(x),
            GammaRepr::List(v) => GammaSchedule::List(v),
            GammaRepr::Word(w) => w.parse()?,
        };
        g.validate()?;
        Ok(g)
    }
}

impl From<GammaSchedule> for GammaRepr {
    fn from(g: GammaSchedule) -> Self {
        match g {
            GammaSchedule::Constant(x) => GammaRepr::Num(x),
            GammaSchedule::List(v) => GammaRepr::List(v),
            GammaSchedule::Rescaled => GammaRepr::Word("rescaled".into()),
        }
    }
}

impl FromStr for GammaSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "rescaled" {
            return Ok(GammaSchedule::Rescaled);
        }
        let g = s.parse::<f64>().map(GammaSchedule::Constant).map_err(|_| Error::Config {
            field: "gamma".into(),
            reason: format!("expected a number or \"rescaled\", got {s:?}"),
        })?;
        g.validate()?;
        Ok(g)
    }
}

impl GammaSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::Config { field: "gamma".into(), reason });
        match self {
            GammaSchedule::Constant(x) if !(x.is_finite() && *x >= 0.0) => {
                bad(format!("{x} is not a finite value ≥ 0"))
            }
            GammaSchedule::List(v) if v.is_empty() => bad("empty list".into()),
            GammaSchedule::List(v) if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) => {
                bad("list entries must be finite and ≥ 0".into())
            }
            _ => Ok(()),
        }
    }

    fn at(&self, n: usize, ev: &Evaluation) -> f64 {
        match self {
            GammaSchedule::Constant(x) => *x,
            GammaSchedule::List(v) => v[n.min(v.len() - 1)],
            GammaSchedule::Rescaled => gamma_ratio(&ev.raw, &ev.projected).unwrap_or(0.0),
        }
    }
}

/// `min(‖raw‖²/‖projected‖², GAMMA_CAP)`; fails with [`Error::Stationary`]
/// when `‖projected‖ ≤ STATIONARY_TOL`.
pub fn gamma_ratio(raw: &[f64], projected: &[f64]) -> Result<f64> {
    let p = norm(projected);
    if p <= STATIONARY_TOL {
        return Err(Error::Stationary);
    }
    let r = norm(raw);
    Ok(((r / p) * (r / p)).min(GAMMA_CAP))
}

/// `‖𝒢(θ)‖²/‖G(θ)‖²` for a network problem.
pub fn rescaled_gamma(obj: &Objective, theta: &ParamVector) -> Result<f64> {
    let raw = risk_and_gradient(obj, theta, Smoothing::Exact)?.gradient;
    let projected = project_gradient(theta, &raw)?;
    gamma_ratio(&raw, &projected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub t_end: f64,
    pub step: f64,
    pub integrator: Integrator,
    /// Apply the retraction after every step.
    pub reproject: bool,
    pub gamma: GammaSchedule,
    pub record_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            step: 1e-3,
            integrator: Integrator::Rk4,
            reproject: true,
            gamma: GammaSchedule::Constant(1.0),
            record_every: 1,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(Error::Config { field: field.into(), reason: reason.into() });
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad("t_end", "must be finite and > 0");
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad("step", "must be finite and > 0");
        }
        if self.step > self.t_end {
            return bad("step", "must not exceed t_end");
        }
        if self.record_every == 0 {
            return bad("record_every", "must be ≥ 1");
        }
        self.gamma.validate()
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn step_count(&self) -> usize {
        let n = self.t_end / self.step;
        let r = n.round();
        if (n - r).abs() <= 1e-9 * n.max(1.0) {
            r as usize
        } else {
            n.ceil() as usize
        }
    }

    fn time(&self, n: usize, steps: usize) -> f64 {
        if n >= steps {
            self.t_end
        } else {
            (n as f64 * self.step).min(self.t_end)
        }
    }
}

/// Why a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    Stationary { t: f64 },
    Diverged { t: f64 },
    NonFinite { t: f64 },
    Aborted { t: f64, message: String },
}

impl Termination {
    pub fn is_blow_up(&self) -> bool {
        matches!(self, Termination::Diverged { .. } | Termination::NonFinite { .. })
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Completed => write!(f, "completed"),
            Termination::Stationary { t } => write!(f, "stationary at t = {t}"),
            Termination::Diverged { t } => write!(f, "diverged at t = {t}"),
            Termination::NonFinite { t } => write!(f, "non-finite state at t = {t}"),
            Termination::Aborted { t, message } => write!(f, "aborted at t = {t}: {message}"),
        }
    }
}

/// Recorded time series. Row `n` of every column belongs to `times[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub param_names: Vec<String>,
    pub extra_names: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub risk: Vec<f64>,
    pub psi_max_dev: Vec<f64>,
    /// `‖G‖`.
    pub grad_norm: Vec<f64>,
    /// `‖𝒢‖`.
    pub raw_grad_norm: Vec<f64>,
    pub extras: Vec<Vec<f64>>,
    pub tags: Vec<String>,
    pub termination: Termination,
    /// First time a constrained sub-vector was found to be zero.
    pub degenerate_at: Option<f64>,
    pub steps_taken: usize,
}

impl TrajectoryRecord {
    fn new<P: FlowProblem + ?Sized>(problem: &P) -> Self {
        Self {
            param_names: problem.param_names(),
            extra_names: problem.extra_names(),
            times: Vec::new(),
            states: Vec::new(),
            risk: Vec::new(),
            psi_max_dev: Vec::new(),
            grad_norm: Vec::new(),
            raw_grad_norm: Vec::new(),
            extras: Vec::new(),
            tags: Vec::new(),
            termination: Termination::Completed,
            degenerate_at: None,
            steps_taken: 0,
        }
    }

    fn push<P: FlowProblem + ?Sized>(&mut self, problem: &P, t: f64, state: &[f64], ev: &Evaluation) {
        self.times.push(t);
        self.states.push(state.to_vec());
        self.risk.push(ev.risk);
        self.psi_max_dev.push(problem.constraint_dev(state));
        self.grad_norm.push(ev.grad_norm());
        self.raw_grad_norm.push(ev.raw_grad_norm());
        self.extras.push(problem.extras(state));
        if let Some(tag) = problem.tag(state) {
            self.tags.push(tag);
        }
        if self.degenerate_at.is_none() && problem.degenerate(state) {
            log::warn!("zero constrained sub-vector at t = {t}");
            self.degenerate_at = Some(t);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// Column `name` of the extra channels.
    pub fn extra(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.extra_names.iter().position(|n| n == name)?;
        Some(self.extras.iter().map(|row| row[j]).collect())
    }

    pub fn state_norms(&self) -> Vec<f64> {
        self.states.iter().map(|s| norm(s)).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.state_norms().into_iter().fold(0.0, f64::max)
    }

    /// `sup_{s ≤ t} ‖Θ(s)‖` over recorded times `≤ t`.
    pub fn running_sup_until(&self, t: f64) -> f64 {
        self.times.iter().zip(&self.states).take_while(|(&s, _)| s <= t).map(|(_, x)| norm(x)).fold(0.0, f64::max)
    }

    pub fn max_psi_dev(&self) -> f64 {
        self.psi_max_dev.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `𝓛(Θ_{t_{j+1}}) − 𝓛(Θ_{t_j})` over consecutive rows.
    pub fn max_risk_increase(&self) -> f64 {
        self.risk.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_state(state: &[f64]) -> Option<fn(f64) -> Termination> {
    if state.iter().any(|x| !x.is_finite()) {
        Some(|t| Termination::NonFinite { t })
    } else if state.iter().any(|x| x.abs() > DIVERGENCE_BOUND) {
        Some(|t| Termination::Diverged { t })
    } else {
        None
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
}

fn velocity(schedule: &GammaSchedule, n: usize, ev: &Evaluation) -> Vec<f64> {
    let g = schedule.at(n, ev);
    ev.projected.iter().map(|v| -g * v).collect()
}

/// Integrates `dΘ/dt = −γ G(Θ)` from `Θ_0 = initial_state(ξ)`.
///
/// Numerical failures end the run with a [`Termination`] and keep the
/// record up to the last valid state. Invalid configurations are errors.
pub fn integrate_flow<P: FlowProblem + ?Sized>(problem: &P, xi: &[f64], cfg: &FlowConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let mut rec = TrajectoryRecord::new(problem);
    let mut state = problem.initial_state(xi)?;
    let mut ev = problem.evaluate(&state)?;
    rec.push(problem, 0.0, &state, &ev);
    let steps = cfg.step_count();

    for n in 0..steps {
        let t0 = cfg.time(n, steps);
        if ev.grad_norm() <= STATIONARY_TOL {
            rec.termination = Termination::Stationary { t: t0 };
            if *rec.times.last().expect("non-empty") < cfg.t_end {
                rec.push(problem, cfg.t_end, &state, &ev);
            }
            return Ok(rec);
        }
        let t1 = cfg.time(n + 1, steps);
        let h = t1 - t0;
        let stepped = match cfg.integrator {
            Integrator::Euler => Ok(axpy(&state, h, &velocity(&cfg.gamma, n, &ev))),
            Integrator::Rk4 => rk4_step(problem, &cfg.gamma, n, &state, &ev, h),
        };
        let mut next = match stepped {
            Ok(s) => s,
            Err(e) => {
                rec.termination = abort(t0, e);
                return Ok(rec);
            }
        };
        if cfg.reproject {
            next = problem.renormalize(&next);
        }
        if let Some(term) = check_state(&next) {
            rec.termination = term(t1);
            return Ok(rec);
        }
        ev = match problem.evaluate(&next) {
            Ok(ev) => ev,
            Err(e) => {
                rec.termination = abort(t1, e);
                return Ok(rec);
            }
        };
        state = next;
        rec.steps_taken = n + 1;
        if (n + 1) % cfg.record_every == 0 || n + 1 == steps {
            rec.push(problem, t1, &state, &ev);
        }
    }
    Ok(rec)
}

fn abort(t: f64, e: Error) -> Termination {
    match e {
        Error::NonFinite(_) => Termination::NonFinite { t },
        e => Termination::Aborted { t, message: e.to_string() },
    }
}

fn rk4_step<P: FlowProblem + ?Sized>(
    problem: &P,
    gamma: &GammaSchedule,
    n: usize,
    state: &[f64],
    ev: &Evaluation,
    h: f64,
) -> Result<Vec<f64>> {
    let k1 = velocity(gamma, n, ev);
    let k2 = velocity(gamma, n, &problem.evaluate(&axpy(state, h / 2.0, &k1))?);
    let k3 = velocity(gamma, n, &problem.evaluate(&axpy(state, h / 2.0, &k2))?);
    let k4 = velocity(gamma, n, &problem.evaluate(&axpy(state, h, &k3))?);
    Ok(state.iter().enumerate().map(|(j, x)| x + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])).collect())
}

/// Normalized gradient descent `ϑ_{n+1} = φ(ϑ_n − γ_n G(ϑ_n))` for `steps`
/// iterations. Row `n` of the record is iterate `n` at time `n`.
pub fn gd_run<P: FlowProblem + ?Sized>(
    problem: &P,
    xi: &[f64],
    steps: usize,
    gammas: &GammaSchedule,
) -> Result<TrajectoryRecord> {
    gammas.validate()?;
    let mut rec = TrajectoryRecord::new(problem);
    let mut state = problem.initial_state(xi)?;
    let mut ev = problem.evaluate(&state)?;
    rec.push(problem, 0.0, &state, &ev);
    for n in 0..steps {
        if ev.grad_norm() <= STATIONARY_TOL {
            rec.termination = Termination::Stationary { t: n as f64 };
            if n < steps {
                rec.push(problem, steps as f64, &state, &ev);
            }
            return Ok(rec);
        }
        let t1 = (n + 1) as f64;
        let next = problem.renormalize(&axpy(&state, 1.0, &velocity(gammas, n, &ev)));
        if let Some(term) = check_state(&next) {
            rec.termination = term(t1);
            return Ok(rec);
        }
        ev = match problem.evaluate(&next) {
            Ok(ev) => ev,
            Err(e) => {
                rec.termination = abort(t1, e);
                return Ok(rec);
            }
        };
        state = next;
        rec.steps_taken = n + 1;
        rec.push(problem, t1, &state, &ev);
    }
    Ok(rec)
}

/// A network trained on an [`Objective`] under the unit-norm constraints.
#[derive(Debug, Clone)]
pub struct AnnProblem {
    objective: Objective,
    template: ParamVector,
    smoothing: Smoothing,
}

impl AnnProblem {
    pub fn new(objective: Objective, template: ParamVector) -> Result<Self> {
        objective.check_shapes(&template)?;
        Ok(Self { objective, template, smoothing: Smoothing::Exact })
    }

    /// Use `∇𝓛_r` instead of `𝒢`.
    pub fn with_smoothing(mut self, smoothing: Smoothing) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn theta(&self, state: &[f64]) -> Result<ParamVector> {
        self.template.with_values(state.to_vec())
    }
}

impl FlowProblem for AnnProblem {
    fn dim(&self) -> usize {
        self.template.len()
    }

    fn evaluate(&self, state: &[f64]) -> Result<Evaluation> {
        let theta = self.theta(state)?;
        let rg = risk_and_gradient(&self.objective, &theta, self.smoothing)?;
        let projected = project_gradient(&theta, &rg.gradient)?;
        Ok(Evaluation { risk: rg.risk, raw: rg.gradient, projected })
    }

    fn renormalize(&self, state: &[f64]) -> Vec<f64> {
        renormalize_phi(&self.theta(state).expect("state length")).into_values()
    }

    fn constraint_dev(&self, state: &[f64]) -> f64 {
        psi_max_dev(&self.theta(state).expect("state length"))
    }

    fn initial_state(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let xi = self.theta(xi)?;
        if xi.min_hidden_norm() == 0.0 {
            log::warn!("initial draw has a zero hidden sub-vector; the invariance guarantees need nonzero ones");
        }
        Ok(rescale_full(&xi).into_values())
    }

    fn normals(&self, state: &[f64]) -> Vec<Vec<(usize, f64)>> {
        let theta = self.theta(state).expect("state length");
        theta.arch().hidden_keys().map(|k| grad_psi(&theta, k).expect("hidden key")).collect()
    }

    fn degenerate(&self, state: &[f64]) -> bool {
        self.theta(state).map(|t| t.min_hidden_norm() == 0.0).unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Architecture;
    use crate::quadrature::{InputMeasure, QuadratureSettings};
    use crate::target::{Profile, TargetFunction};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn problem(dims: &[usize], profile: Profile) -> (AnnProblem, Arc<Architecture>) {
        let arch = Arc::new(Architecture::new(dims).unwrap());
        let obj = Objective::new(
            InputMeasure::uniform(0.0, 1.0, dims[0]).unwrap(),
            TargetFunction::profile(profile, *dims.last().unwrap()).unwrap(),
            QuadratureSettings::default().with_nodes_per_axis(64),
        )
        .unwrap();
        (AnnProblem::new(obj, ParamVector::zeros(arch.clone())).unwrap(), arch)
    }

    #[test]
    fn gamma_parsing() {
        assert_eq!("rescaled".parse::<GammaSchedule>().unwrap(), GammaSchedule::Rescaled);
        assert_eq!("0.5".parse::<GammaSchedule>().unwrap(), GammaSchedule::Constant(0.5));
        assert!("-1".parse::<GammaSchedule>().is_err());
        assert!("fast".parse::<GammaSchedule>().is_err());
        #[derive(Deserialize)]
        struct W {
            g: GammaSchedule,
        }
        let w: W = toml::from_str("g = [0.1, 0.2]").unwrap();
        assert_eq!(w.g, GammaSchedule::List(vec![0.1, 0.2]));
        let w: W = toml::from_str("g = \"rescaled\"").unwrap();
        assert_eq!(w.g, GammaSchedule::Rescaled);
    }

    #[test]
    fn gamma_ratio_cases() {
        assert_eq!(gamma_ratio(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(gamma_ratio(&[1.0, 0.0], &[0.0, 0.0]), Err(Error::Stationary));
        // tangent part carries cos²α = 0.36 of the squared norm
        let raw = [0.6, 0.8];
        let proj = [0.6, 0.0];
        assert_abs_diff_eq!(gamma_ratio(&raw, &proj).unwrap(), 1.0 / 0.36, epsilon = 1e-14);
    }

    #[test]
    fn rescaled_gamma_on_normal_direction() {
        // a gradient that only moves along V's normal has G = 0
        let (p, arch) = problem(&[1, 1, 1], Profile::Constant { value: 0.0 });
        let th = ParamVector::new(arch, vec![0.6, 0.8, 0.0, 0.0]).unwrap();
        assert_eq!(rescaled_gamma(p.objective(), &th), Err(Error::Stationary));
    }

    #[test]
    fn config_validation() {
        assert!(FlowConfig::default().validate().is_ok());
        let c = FlowConfig { step: 2.0, ..FlowConfig::default() };
        assert!(c.validate().is_err());
        let c = FlowConfig { record_every: 0, ..FlowConfig::default() };
        assert!(c.validate().is_err());
        assert_eq!(FlowConfig::default().step_count(), 1000);
        let c = FlowConfig { t_end: 1.0, step: 0.3, ..FlowConfig::default() };
        assert_eq!(c.step_count(), 4);
        assert_eq!(c.time(4, 4), 1.0);
    }

    #[test]
    fn stationary_dead_network() {
        let (p, arch) = problem(&[1, 2, 1], Profile::Constant { value: 0.0 });
        let xi = ParamVector::new(arch, vec![-1.0, -1.0, -1.0, -2.0, 0.5, 0.5, 0.0]).unwrap();
        let rec = integrate_flow(&p, xi.as_slice(), &FlowConfig::default()).unwrap();
        assert_eq!(rec.len(), 2);
        assert_eq!(rec.states[0], rec.states[1]);
        assert_eq!(rec.times, vec![0.0, 1.0]);
        assert!(matches!(rec.termination, Termination::Stationary { .. }));
    }

    #[test]
    fn flow_invariants_shallow() {
        let (p, arch) = problem(&[1, 8, 1], Profile::AbsOffset { center: 0.3 });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xi = ParamVector::sample_normal(arch, &mut rng, 1.0);
        let cfg = FlowConfig { reproject: false, ..FlowConfig::default() };
        let rec = integrate_flow(&p, xi.as_slice(), &cfg).unwrap();
        assert_eq!(rec.termination, Termination::Completed);
        assert_eq!(rec.len(), 1001);
        assert!(rec.max_psi_dev() <= 1e-6, "{}", rec.max_psi_dev());
        assert!(rec.max_risk_increase() <= 1e-8);
        for s in rec.states.iter().step_by(100) {
            assert!(tangency_residual(&p, s).unwrap() <= 1e-12);
        }
        let cfg = FlowConfig::default();
        let rec = integrate_flow(&p, xi.as_slice(), &cfg).unwrap();
        assert!(rec.max_psi_dev() <= 1e-12);
    }

    #[test]
    fn euler_and_record_every() {
        let (p, arch) = problem(&[1, 3, 1], Profile::Affine { slope: 1.0, intercept: 0.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xi = ParamVector::sample_normal(arch, &mut rng, 1.0);
        let cfg = FlowConfig {
            integrator: Integrator::Euler,
            record_every: 10,
            t_end: 0.5,
            step: 1e-2,
            ..FlowConfig::default()
        };
        let rec = integrate_flow(&p, xi.as_slice(), &cfg).unwrap();
        assert_eq!(rec.len(), 6);
        assert!(rec.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn gd_zero_gamma_is_fixed() {
        let (p, arch) = problem(&[1, 3, 1], Profile::Affine { slope: 1.0, intercept: 0.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xi = ParamVector::sample_normal(arch, &mut rng, 1.0);
        let rec = gd_run(&p, xi.as_slice(), 5, &GammaSchedule::Constant(0.0)).unwrap();
        let first = &rec.states[0];
        for s in &rec.states {
            for (a, b) in s.iter().zip(first) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn gd_keeps_unit_norms_and_descends() {
        let (p, arch) = problem(&[1, 4, 1], Profile::AbsOffset { center: 0.5 });
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xi = ParamVector::sample_normal(arch, &mut rng, 1.0);
        let rec = gd_run(&p, xi.as_slice(), 1000, &GammaSchedule::Constant(1e-3)).unwrap();
        assert!(rec.max_psi_dev() <= 1e-14);
        assert!(rec.risk.last().unwrap() < &rec.risk[0]);
    }

    #[test]
    fn divergence_guard() {
        let (p, arch) = problem(&[1, 1, 1], Profile::Affine { slope: 1.0, intercept: 0.0 });
        let xi = ParamVector::new(arch, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let rec = gd_run(&p, xi.as_slice(), 50, &GammaSchedule::Constant(1e14)).unwrap();
        assert!(rec.termination.is_blow_up(), "{:?}", rec.termination);
    }
}
