//! Finite-horizon boundedness runs of the one-neuron flow.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::monitors::{theta3_bound, MonitorKind, MonitorWindows};
use super::{classify, OneNeuron, Regime};
use crate::dynamics::{integrate_flow, FlowConfig, Integrator, Termination, TrajectoryRecord};
use crate::error::Result;
use crate::seeding::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundednessConfig {
    pub flow: FlowConfig,
    /// Allowed increase of a monotone quantity per recorded step.
    pub slack: f64,
    /// Allowed drift rate of the conserved quantity per unit time.
    pub conservation_rate: f64,
    /// Trailing fraction of the horizon used for the plateau test.
    pub tail_fraction: f64,
    /// Standard deviation of the raw initial draw.
    pub init_scale: f64,
}

impl Default for BoundednessConfig {
    fn default() -> Self {
        Self {
            flow: FlowConfig { t_end: 100.0, step: 1e-3, integrator: Integrator::Rk4, ..FlowConfig::default() },
            slack: 1e-6,
            conservation_rate: 1e-6,
            tail_fraction: 0.1,
            init_scale: 1.0,
        }
    }
}

/// Fraction of the horizon spent in each regime.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RegimeOccupancy {
    pub empty: f64,
    pub full: f64,
    pub right: f64,
    pub left: f64,
}

/// Counts for one monitor over a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorTally {
    pub kind: MonitorKind,
    /// Consecutive record pairs with both states inside the window.
    pub checked: usize,
    pub violations: usize,
    /// Largest increase (monotone) or drift rate (conservation) seen.
    pub worst: f64,
    /// Sum of the positive per-step increases.
    pub total_increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub initial_state: Vec<f64>,
    pub initial_norm: f64,
    pub sup_norm: f64,
    /// `sup ‖Θ‖` before the trailing window.
    pub sup_norm_before_tail: f64,
    /// Relative growth of the running sup over the trailing window.
    pub tail_increase: f64,
    pub termination: Termination,
    pub regime_occupancy: RegimeOccupancy,
    pub monitors: Vec<MonitorTally>,
    pub bound_checks: usize,
    pub bound_violations: usize,
    pub max_circle_dev: f64,
    pub max_risk_increase: f64,
    /// Monotone-monitor, conservation and bound violations combined.
    pub lyapunov_violations: usize,
}

impl BoundednessReport {
    pub fn tally(&self, kind: MonitorKind) -> Option<&MonitorTally> {
        self.monitors.iter().find(|m| m.kind == kind)
    }
}

/// Raw initial draw `ξ ~ N(0, scale² I₃)` from `rng`.
pub fn draw_initial<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> [f64; 3] {
    std::array::from_fn(|_| scale * rng.sample::<f64, _>(StandardNormal))
}

/// Evaluate every monitor along a recorded one-neuron trajectory.
pub fn analyze_trajectory(problem: &OneNeuron, rec: &TrajectoryRecord, cfg: &BoundednessConfig) -> BoundednessReport {
    let windows = MonitorWindows::scan(problem);
    let mut tallies: Vec<MonitorTally> = MonitorKind::MONOTONE
        .into_iter()
        .chain(std::iter::once(MonitorKind::Conservation))
        .map(|kind| MonitorTally { kind, checked: 0, violations: 0, worst: f64::NEG_INFINITY, total_increase: 0.0 })
        .collect();
    let mut occupancy = RegimeOccupancy::default();
    let initial_risk = rec.risk.first().copied().unwrap_or(0.0);
    let (mut bound_checks, mut bound_violations) = (0, 0);

    for (j, state) in rec.states.iter().enumerate() {
        if let Some(b) = theta3_bound(problem, initial_risk, state) {
            bound_checks += 1;
            if state[2].abs() > b * (1.0 + 1e-9) + 1e-12 {
                bound_violations += 1;
            }
        }
        let Some(next) = rec.states.get(j + 1) else { break };
        let dt = rec.times[j + 1] - rec.times[j];
        match classify(state) {
            Regime::Empty => occupancy.empty += dt,
            Regime::Full => occupancy.full += dt,
            Regime::Right { .. } => occupancy.right += dt,
            Regime::Left { .. } => occupancy.left += dt,
        }
        for t in tallies.iter_mut() {
            if !(windows.applies(t.kind, state) && windows.applies(t.kind, next)) {
                continue;
            }
            t.checked += 1;
            let change = t.kind.quantity(next) - t.kind.quantity(state);
            let (score, bad) = if t.kind == MonitorKind::Conservation {
                let rate = change.abs() / dt;
                (rate, rate > cfg.conservation_rate)
            } else {
                (change, change > cfg.slack)
            };
            t.worst = t.worst.max(score);
            t.total_increase += change.max(0.0);
            if bad {
                t.violations += 1;
            }
        }
    }
    let horizon = rec.times.last().copied().unwrap_or(0.0);
    if horizon > 0.0 {
        occupancy.empty /= horizon;
        occupancy.full /= horizon;
        occupancy.right /= horizon;
        occupancy.left /= horizon;
    }
    let sup_norm = rec.sup_norm();
    let cut = (1.0 - cfg.tail_fraction) * cfg.flow.t_end;
    let before = rec.running_sup_until(cut);
    let lyapunov_violations = tallies.iter().map(|t| t.violations).sum::<usize>() + bound_violations;
    let initial_state = rec.states.first().cloned().unwrap_or_default();
    BoundednessReport {
        initial_norm: crate::gradients::norm(&initial_state),
        initial_state,
        sup_norm,
        sup_norm_before_tail: before,
        tail_increase: if before > 0.0 { (sup_norm - before) / before } else { 0.0 },
        termination: rec.termination.clone(),
        regime_occupancy: occupancy,
        monitors: tallies,
        bound_checks,
        bound_violations,
        max_circle_dev: rec.max_psi_dev(),
        max_risk_increase: rec.max_risk_increase().max(0.0),
        lyapunov_violations,
    }
}

/// Integrate from the raw draw `ξ` and analyze the trajectory.
pub fn run_from(
    problem: &OneNeuron,
    xi: &[f64],
    cfg: &BoundednessConfig,
) -> Result<(TrajectoryRecord, BoundednessReport)> {
    let rec = integrate_flow(problem, xi, &cfg.flow)?;
    let report = analyze_trajectory(problem, &rec, cfg);
    Ok((rec, report))
}

/// One run with `ξ` drawn from stream 0 of `init_seed`.
pub fn boundedness_experiment(
    problem: &OneNeuron,
    init_seed: u64,
    cfg: &BoundednessConfig,
) -> Result<BoundednessReport> {
    let xi = draw_initial(&mut stream_rng(init_seed, 0), cfg.init_scale);
    Ok(run_from(problem, &xi, cfg)?.1)
}

/// `count` runs with `ξ` drawn from streams `0..count` of `root_seed`. The
/// result order and values do not depend on thread scheduling.
pub fn boundedness_batch(
    problem: &OneNeuron,
    root_seed: u64,
    count: usize,
    cfg: &BoundednessConfig,
) -> Result<Vec<BoundednessReport>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let xi = draw_initial(&mut stream_rng(root_seed, i), cfg.init_scale);
            run_from(problem, &xi, cfg).map(|(_, r)| r)
        })
        .collect()
}
