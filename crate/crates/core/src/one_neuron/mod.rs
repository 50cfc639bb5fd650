//! Shallow network with one hidden neuron on `[0, 1]`.
//!
//! The state is `θ = (θ₁, θ₂, θ₃)`: inner weight, inner bias and outer
//! weight. The outer bias is pinned to `f̄ = ∫₀¹ f`, the input measure is
//! Lebesgue on `[0, 1]` and the constraint set is the cylinder
//! `ℳ = {θ₁² + θ₂² = 1}`. All integrals are computed exactly by splitting
//! `[0, 1]` at the breakpoint `q = −θ₂/θ₁` and at the target's knots.

mod experiment;
mod monitors;

pub use experiment::{
    analyze_trajectory, boundedness_batch, boundedness_experiment, draw_initial, run_from, BoundednessConfig,
    BoundednessReport, MonitorTally, RegimeOccupancy,
};
pub use monitors::{lyapunov, theta3_bound, LyapunovValues, MonitorKind, MonitorWindows};

use std::sync::Arc;

use serde::Serialize;

use crate::dynamics::{Evaluation, FlowProblem};
use crate::error::{Error, Result};
use crate::params::{Architecture, ParamVector};
use crate::quadrature::{segment_cuts, GaussLegendre, InputMeasure, QuadratureSettings};
use crate::realization::Objective;
use crate::target::{Profile, TargetFunction};

/// Tolerance on `|θ₁² + θ₂² − 1|` for membership in `ℳ`.
pub const ON_MANIFOLD_TOL: f64 = 1e-9;

/// `q^θ = −θ₂/θ₁`, or `+∞` when `θ₁ = 0`.
pub fn breakpoint(theta: &[f64]) -> f64 {
    if theta[0] != 0.0 {
        -theta[1] / theta[0]
    } else {
        f64::INFINITY
    }
}

/// `g(θ) = θ₁² + θ₂²`.
pub fn circle_g(theta: &[f64]) -> f64 {
    theta[0] * theta[0] + theta[1] * theta[1]
}

/// Shape of the activity set `I^θ = {s ∈ [0,1] : θ₁s + θ₂ > 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "lowercase")]
pub enum Regime {
    Empty,
    /// `I^θ ⊇ (0, 1)`.
    Full,
    /// `I^θ = (q, 1]`.
    Right {
        q: f64,
    },
    /// `I^θ = [0, q)`.
    Left {
        q: f64,
    },
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Empty => "empty",
            Regime::Full => "full",
            Regime::Right { .. } => "right",
            Regime::Left { .. } => "left",
        }
    }

    /// Closure `[lo, hi]` of the activity set; `lo = hi` when empty.
    pub fn activity_bounds(&self) -> (f64, f64) {
        match *self {
            Regime::Empty => (0.0, 0.0),
            Regime::Full => (0.0, 1.0),
            Regime::Right { q } => (q, 1.0),
            Regime::Left { q } => (0.0, q),
        }
    }

    /// `μ(I^θ)`.
    pub fn activity_measure(&self) -> f64 {
        let (lo, hi) = self.activity_bounds();
        hi - lo
    }
}

pub fn classify(theta: &[f64]) -> Regime {
    let (t1, t2) = (theta[0], theta[1]);
    if t1 == 0.0 {
        return if t2 > 0.0 { Regime::Full } else { Regime::Empty };
    }
    let q = -t2 / t1;
    if t1 > 0.0 {
        if q <= 0.0 {
            Regime::Full
        } else if q >= 1.0 {
            Regime::Empty
        } else {
            Regime::Right { q }
        }
    } else if q >= 1.0 {
        Regime::Full
    } else if q <= 0.0 {
        Regime::Empty
    } else {
        Regime::Left { q }
    }
}

/// `m(θ) = ∫₀¹ max(θ₁s + θ₂, 0) ds` in closed form.
pub fn mean_m(theta: &[f64]) -> f64 {
    let t1 = theta[0];
    match classify(theta) {
        Regime::Empty => 0.0,
        Regime::Full => t1 / 2.0 + theta[1],
        Regime::Right { q } => t1 / 2.0 * (1.0 - q) * (1.0 - q),
        Regime::Left { q } => -t1 / 2.0 * q * q,
    }
}

/// Closed forms of `∫₀¹ a`, `∫_I (a − m)` and `∫₀¹ (a − m)²` with
/// `a(s) = max(θ₁s + θ₂, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedIntegrals {
    pub m: f64,
    pub centered_first_moment: f64,
    pub centered_second_moment: f64,
}

/// Requires a right or left regime.
pub fn closed_integrals(theta: &[f64]) -> Result<ClosedIntegrals> {
    let t1 = theta[0];
    match classify(theta) {
        Regime::Right { q } => {
            let p = 1.0 - q;
            Ok(ClosedIntegrals {
                m: t1 / 2.0 * p * p,
                centered_first_moment: t1 / 2.0 * p * p * q,
                centered_second_moment: t1 * t1 * p * p * p * (1.0 / 12.0 + q / 4.0),
            })
        }
        Regime::Left { q } => {
            let a = t1.abs();
            Ok(ClosedIntegrals {
                m: a / 2.0 * q * q,
                centered_first_moment: a / 2.0 * (1.0 - q) * q * q,
                centered_second_moment: t1 * t1 * q * q * q * (1.0 / 3.0 - q / 4.0),
            })
        }
        other => Err(Error::WrongRegime { expected: "right or left", found: other.name().into() }),
    }
}

/// `∫_I (αx + β)² dx ≥ (α²/12) μ(I)³` on `I = [lo, hi]`.
pub fn affine_integral_bound_check(alpha: f64, beta: f64, interval: (f64, f64)) -> bool {
    let (lo, hi) = interval;
    let len = (hi - lo).abs();
    // exact integral of the square about the midpoint
    let c = alpha * (lo + hi) / 2.0 + beta;
    let integral = c * c * len + alpha * alpha * len * len * len / 12.0;
    let bound = alpha * alpha / 12.0 * len * len * len;
    integral >= bound * (1.0 - 4.0 * f64::EPSILON)
}

/// Risk and gradients of the one-neuron problem at one `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneNeuronEval {
    pub risk: f64,
    /// `∇𝓛(θ)`.
    pub loss_gradient: [f64; 3],
    /// The explicit projected gradient `𝔊(θ)`.
    pub explicit_gradient: [f64; 3],
    pub regime: Regime,
}

/// The one-neuron problem for a fixed target profile.
#[derive(Debug, Clone)]
pub struct OneNeuron {
    profile: Profile,
    fbar: f64,
    knots: Vec<f64>,
    gl: GaussLegendre,
    lipschitz: f64,
    l2_deviation: f64,
}

impl OneNeuron {
    pub fn new(profile: Profile) -> Result<Self> {
        profile.validate()?;
        let fbar = profile.integral(0.0, 1.0);
        let knots: Vec<f64> = profile.breakpoints().into_iter().filter(|k| *k > 0.0 && *k < 1.0).collect();
        let order = profile.degree().max(1) + 1;
        let gl = GaussLegendre::new(order);
        let mut var = 0.0;
        for w in segment_cuts(0.0, 1.0, &knots).windows(2) {
            var += gl.integrate(w[0], w[1], |s| (profile.eval(s) - fbar).powi(2));
        }
        Ok(Self { lipschitz: profile.lipschitz_bound(0.0, 1.0), profile, fbar, knots, gl, l2_deviation: var.sqrt() })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// `f̄ = ∫₀¹ f`.
    pub fn fbar(&self) -> f64 {
        self.fbar
    }

    pub fn target(&self, s: f64) -> f64 {
        self.profile.eval(s)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `‖f − f̄‖_{L²([0,1])}`.
    pub fn l2_deviation(&self) -> f64 {
        self.l2_deviation
    }

    /// Gauss-Legendre nodes on `[lo, hi]`, split at the target's knots.
    pub(crate) fn for_each_node<F: FnMut(f64, f64)>(&self, lo: f64, hi: f64, mut g: F) {
        if hi <= lo {
            return;
        }
        let cuts = segment_cuts(lo, hi, &self.knots);
        let nodes = self.gl.nodes();
        let weights = self.gl.weights();
        for w in cuts.windows(2) {
            let (c, r) = ((w[0] + w[1]) / 2.0, (w[1] - w[0]) / 2.0);
            for (x, wt) in nodes.iter().zip(weights) {
                g(c + r * x, r * wt);
            }
        }
    }

    /// Exact `∫_lo^hi h(s) ds` for `h` polynomial between knots of degree at
    /// most `2·max(deg f, 1) + 1`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut h: F) -> f64 {
        let mut acc = 0.0;
        self.for_each_node(lo, hi, |s, w| acc += w * h(s));
        acc
    }

    pub fn evaluate(&self, theta: &[f64]) -> OneNeuronEval {
        let (t1, t2, t3) = (theta[0], theta[1], theta[2]);
        let regime = classify(theta);
        let (lo, hi) = regime.activity_bounds();
        let m = if hi > lo { t1 * (hi * hi - lo * lo) / 2.0 + t2 * (hi - lo) } else { 0.0 };
        let (mut risk, mut rbar, mut k, mut j0, mut j1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut cuts = vec![0.0];
        if hi > lo {
            cuts.extend([lo, hi]);
        }
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for w in cuts.windows(2) {
            let active = hi > lo && w[0] >= lo && w[1] <= hi;
            self.for_each_node(w[0], w[1], |s, wt| {
                let a = if active { (t1 * s + t2).max(0.0) } else { 0.0 };
                let res = t3 * (a - m) + self.fbar - self.profile.eval(s);
                risk += wt * res * res;
                rbar += wt * res;
                k += wt * res * (a - m);
                if active {
                    j0 += wt * res;
                    j1 += wt * res * s;
                }
            });
        }
        // ∂m/∂θ₁ = ∫_I s, ∂m/∂θ₂ = μ(I)
        let dm1 = (hi * hi - lo * lo) / 2.0;
        let dm2 = hi - lo;
        OneNeuronEval {
            risk,
            loss_gradient: [2.0 * t3 * (j1 - rbar * dm1), 2.0 * t3 * (j0 - rbar * dm2), 2.0 * k],
            explicit_gradient: [
                2.0 * t3 * (t2 * t2 * j1 - t1 * t2 * j0),
                2.0 * t3 * (t1 * t1 * j0 - t1 * t2 * j1),
                2.0 * k,
            ],
            regime,
        }
    }

    /// `𝓛(θ)`.
    pub fn risk_1n(&self, theta: &[f64]) -> f64 {
        self.evaluate(theta).risk
    }

    /// `𝔊(θ)` from the explicit integral formulas; requires `θ ∈ ℳ`.
    pub fn grad_1n(&self, theta: &[f64]) -> Result<[f64; 3]> {
        check_len(theta)?;
        if (circle_g(theta) - 1.0).abs() > ON_MANIFOLD_TOL {
            return Err(Error::Precondition(format!("θ₁² + θ₂² = {} is not on the unit circle", circle_g(theta))));
        }
        Ok(self.evaluate(theta).explicit_gradient)
    }

    /// `(𝔊₁, 𝔊₃)` from the regime-specific closed forms. Right and left
    /// regimes only.
    pub fn closed_gradient(&self, theta: &[f64]) -> Result<(f64, f64)> {
        let (t1, t2, t3) = (theta[0], theta[1], theta[2]);
        let fb = self.fbar;
        let dev_terms = |lo: f64, hi: f64| {
            let g1 = self.integrate(lo, hi, |s| (fb - self.target(s)) * (t2 * t2 * s - t1 * t2));
            let g3 = self.integrate(lo, hi, |s| (fb - self.target(s)) * (t1 * s + t2));
            (g1, g3)
        };
        match classify(theta) {
            Regime::Right { q } => {
                let p = 1.0 - q;
                let (d1, d3) = dev_terms(q, 1.0);
                let g1 = 2.0 * t3 * (t1 * t2 * t2 * t3 / 12.0 * p * p * (7.0 + 2.0 * q + 3.0 * q * q) + d1);
                let g3 = 2.0 * t1 * t1 * t3 * p * p * p * (1.0 / 12.0 + q / 4.0) + 2.0 * d3;
                Ok((g1, g3))
            }
            Regime::Left { q } => {
                let (d1, d3) = dev_terms(0.0, q);
                let poly = 6.0 - 6.0 * q + 2.0 * q * q - 3.0 * q * q * q;
                let g1 = 2.0 * t3 * (-t1 * t1 * t1 * t3 / 12.0 * q * q * q * poly + d1);
                let g3 = 2.0 * t1 * t1 * t3 * q * q * q * (1.0 / 3.0 - q / 4.0) + 2.0 * d3;
                Ok((g1, g3))
            }
            other => Err(Error::WrongRegime { expected: "right or left", found: other.name().into() }),
        }
    }

    /// The same problem as a `(1, 1, 1)` network with outer bias `f̄`.
    pub fn as_network(&self) -> Result<(Objective, ParamVector)> {
        let obj = Objective::new(
            InputMeasure::unit_interval(),
            TargetFunction::scalar(self.profile.clone())?,
            QuadratureSettings::default(),
        )?;
        let arch = Arc::new(Architecture::new(&[1, 1, 1])?);
        Ok((obj, ParamVector::zeros(arch)))
    }

    /// Network coordinates `(θ₁, θ₂, θ₃, f̄)`.
    pub fn network_params(&self, template: &ParamVector, theta: &[f64]) -> Result<ParamVector> {
        check_len(theta)?;
        template.with_values(vec![theta[0], theta[1], theta[2], self.fbar])
    }
}

fn check_len(theta: &[f64]) -> Result<()> {
    if theta.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: theta.len(), context: "one-neuron state" });
    }
    Ok(())
}

impl FlowProblem for OneNeuron {
    fn dim(&self) -> usize {
        3
    }

    fn evaluate(&self, state: &[f64]) -> Result<Evaluation> {
        check_len(state)?;
        if state[0] == 0.0 && state[1] == 0.0 {
            return Err(Error::Precondition("θ₁ = θ₂ = 0".into()));
        }
        let ev = OneNeuron::evaluate(self, state);
        if !ev.risk.is_finite() || ev.explicit_gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("one-neuron gradient"));
        }
        Ok(Evaluation { risk: ev.risk, raw: ev.loss_gradient.to_vec(), projected: ev.explicit_gradient.to_vec() })
    }

    fn renormalize(&self, state: &[f64]) -> Vec<f64> {
        let n = circle_g(state).sqrt();
        if n == 0.0 {
            return state.to_vec();
        }
        vec![state[0] / n, state[1] / n, state[2]]
    }

    fn constraint_dev(&self, state: &[f64]) -> f64 {
        (circle_g(state) - 1.0).abs()
    }

    /// `Ψ₁(ξ)`: normalize `(ξ₁, ξ₂)` and absorb its norm into `ξ₃`.
    fn initial_state(&self, xi: &[f64]) -> Result<Vec<f64>> {
        check_len(xi)?;
        let n = circle_g(xi).sqrt();
        if n == 0.0 {
            return Err(Error::Precondition("initial (θ₁, θ₂) is zero".into()));
        }
        Ok(vec![xi[0] / n, xi[1] / n, xi[2] * n])
    }

    fn normals(&self, state: &[f64]) -> Vec<Vec<(usize, f64)>> {
        vec![vec![(0, 2.0 * state[0]), (1, 2.0 * state[1])]]
    }

    fn degenerate(&self, state: &[f64]) -> bool {
        state[0] == 0.0 && state[1] == 0.0
    }

    fn extra_names(&self) -> Vec<String> {
        ["q", "e_full", "v_right", "v_left"].map(String::from).to_vec()
    }

    fn extras(&self, state: &[f64]) -> Vec<f64> {
        let l = lyapunov(state);
        vec![breakpoint(state), l.e_full.unwrap_or(f64::NAN), l.v_right, l.v_left]
    }

    fn tag(&self, state: &[f64]) -> Option<String> {
        Some(classify(state).name().into())
    }
}
