//! Conserved and monotone quantities along the one-neuron flow, and the
//! state windows in which each one applies.
//!
//! Windows depend on the target. With `σ = sign(f(1) − f̄)` the right-hand
//! monitors apply while `I^θ` hugs the right end of `[0, 1]`:
//! `θ₃²` is non-increasing when `σθ₃ ≤ 0`, and `θ₃² − (5/8)(θ₁ − 2^{−1/2})²`
//! when `σθ₃ > 0`. The left end mirrors this with `σ = sign(f(0) − f̄)` and
//! `θ₃² + (5/8)θ₁²`. Window widths come from scanning `f` on a uniform grid.

use serde::Serialize;

use super::{classify, OneNeuron, Regime};

const GRID: usize = 10_000;
const FIVE_EIGHTHS: f64 = 5.0 / 8.0;

/// Candidate Lyapunov quantities at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovValues {
    /// `θ₃² + ln(1 − θ₁²)`; `None` when `|θ₁| ≥ 1`.
    pub e_full: Option<f64>,
    /// `θ₃² − (5/8)(θ₁ − 2^{−1/2})²`.
    pub v_right: f64,
    /// `θ₃² + (5/8)θ₁²`.
    pub v_left: f64,
}

pub fn lyapunov(theta: &[f64]) -> LyapunovValues {
    let (t1, t3) = (theta[0], theta[2]);
    let d = t1 - std::f64::consts::FRAC_1_SQRT_2;
    LyapunovValues {
        e_full: (t1.abs() < 1.0).then(|| t3 * t3 + (1.0 - t1 * t1).ln()),
        v_right: t3 * t3 - FIVE_EIGHTHS * d * d,
        v_left: t3 * t3 + FIVE_EIGHTHS * t1 * t1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonitorKind {
    /// `θ₃²` near the right end with `σθ₃ ≤ 0`.
    Case1Right,
    /// `v_right` near the right end with `σθ₃ > 0`.
    Case2Right,
    /// `θ₃²` near the left end with `σθ₃ ≤ 0`.
    Case1Left,
    /// `v_left` near the left end with `σθ₃ > 0`.
    Case2Left,
    /// `θ₃²` when `f̄ = f(1)`, `I ⊆ [1/2, 1]` and `|θ₃| ≥ 4·Lip(f)`.
    EndpointRight,
    /// `θ₃²` when `f̄ = f(0)`, `I ⊆ [0, 1/2]` and `|θ₃| ≥ 4·Lip(f)`.
    EndpointLeft,
    /// `e_full` while `q ∉ (0, 1)` and `|θ₁| < 1`; conserved.
    Conservation,
}

impl MonitorKind {
    pub const MONOTONE: [MonitorKind; 6] = [
        MonitorKind::Case1Right,
        MonitorKind::Case2Right,
        MonitorKind::Case1Left,
        MonitorKind::Case2Left,
        MonitorKind::EndpointRight,
        MonitorKind::EndpointLeft,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MonitorKind::Case1Right => "case1-right",
            MonitorKind::Case2Right => "case2-right",
            MonitorKind::Case1Left => "case1-left",
            MonitorKind::Case2Left => "case2-left",
            MonitorKind::EndpointRight => "endpoint-right",
            MonitorKind::EndpointLeft => "endpoint-left",
            MonitorKind::Conservation => "conservation",
        }
    }

    /// The monitored quantity.
    pub fn quantity(&self, theta: &[f64]) -> f64 {
        let l = lyapunov(theta);
        match self {
            MonitorKind::Case2Right => l.v_right,
            MonitorKind::Case2Left => l.v_left,
            MonitorKind::Conservation => l.e_full.unwrap_or(f64::NAN),
            _ => theta[2] * theta[2],
        }
    }
}

/// Target-dependent window parameters. `None` marks a monitor as not
/// applicable for this target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorWindows {
    /// `sign(f(1) − f̄)`, 0 when equal.
    pub sigma_right: f64,
    /// `sign(f(0) − f̄)`, 0 when equal.
    pub sigma_left: f64,
    pub case1_right: Option<f64>,
    pub case2_right: Option<f64>,
    pub case1_left: Option<f64>,
    pub case2_left: Option<f64>,
    /// `4·Lip(f)`, set only when `f̄ = f(1)`.
    pub endpoint_right: Option<f64>,
    /// `4·Lip(f)`, set only when `f̄ = f(0)`.
    pub endpoint_left: Option<f64>,
}

fn sign(x: f64) -> f64 {
    if x.abs() <= 1e-12 {
        0.0
    } else {
        x.signum()
    }
}

/// Largest grid widths `(ε₁, ε₂)` below 1/2 such that `g > 0` on the grid of
/// `[0, ε₁]`, and additionally `0.9·sup g < inf g` on `[0, ε₂]`.
fn scan_widths<G: Fn(f64) -> f64>(g: G) -> (Option<f64>, Option<f64>) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut e1, mut e2) = (None, None);
    let mut ratio_ok = true;
    for j in 0..GRID / 2 {
        let v = g(j as f64 / GRID as f64);
        if !(v > 0.0) {
            break;
        }
        lo = lo.min(v);
        hi = hi.max(v);
        ratio_ok &= 0.9 * hi < lo;
        if j > 0 {
            e1 = Some(j as f64 / GRID as f64);
            if ratio_ok {
                e2 = e1;
            }
        }
    }
    (e1, e2)
}

fn right_conditions(q: f64) -> bool {
    let t1sq = 1.0 / (1.0 + q * q);
    let r = (2.0 * (1.0 + q * q)).sqrt();
    5.0 * t1sq * (1.0 + q) / (8.0 + 4.0 * r) * q * (2.0 + q + q * q) >= 10.0 / 9.0
        && 5.0 * (1.0 + q) / (8.0 + 4.0 * r) <= FIVE_EIGHTHS
        && 1.0 / 6.0 + q / 2.0 > FIVE_EIGHTHS
}

fn left_conditions(q: f64) -> bool {
    let t1sq = 1.0 / (1.0 + q * q);
    1.25 * t1sq * (2.0 + q * q) > 20.0 / 9.0 && -4.0 / 3.0 + q + 1.25 * t1sq * (1.0 + 2.0 * q) < 0.0
}

/// Largest grid width `w` such that `cond(d)` holds for every grid distance
/// `d ∈ (0, w]` from the endpoint.
fn geometric_width<C: Fn(f64) -> bool>(cond: C) -> f64 {
    let mut w = 0.0;
    for j in 1..GRID {
        let d = j as f64 / GRID as f64;
        if !cond(d) {
            break;
        }
        w = d;
    }
    w
}

impl MonitorWindows {
    pub fn scan(problem: &OneNeuron) -> Self {
        let fb = problem.fbar();
        let sr = sign(problem.target(1.0) - fb);
        let sl = sign(problem.target(0.0) - fb);
        let (c1r, c2r) = if sr != 0.0 { scan_widths(|d| sr * (problem.target(1.0 - d) - fb)) } else { (None, None) };
        let (c1l, c2l) = if sl != 0.0 { scan_widths(|d| sl * (problem.target(d) - fb)) } else { (None, None) };
        let eta_r = geometric_width(|d| right_conditions(1.0 - d));
        let eta_l = geometric_width(left_conditions);
        let positive = |x: f64| (x > 0.0).then_some(x);
        let c = 4.0 * problem.lipschitz();
        Self {
            sigma_right: sr,
            sigma_left: sl,
            case1_right: c1r,
            case2_right: c2r.and_then(|e| positive(e.min(eta_r))),
            case1_left: c1l,
            case2_left: c2l.and_then(|e| positive(e.min(eta_l))),
            endpoint_right: (sr == 0.0).then_some(c),
            endpoint_left: (sl == 0.0).then_some(c),
        }
    }

    /// Whether `kind`'s hypotheses hold at `θ`.
    pub fn applies(&self, kind: MonitorKind, theta: &[f64]) -> bool {
        let t3 = theta[2];
        let regime = classify(theta);
        match (kind, regime) {
            (MonitorKind::Case1Right, Regime::Right { q }) => {
                self.case1_right.is_some_and(|e| q >= 1.0 - e) && self.sigma_right * t3 <= 0.0
            }
            (MonitorKind::Case2Right, Regime::Right { q }) => {
                self.case2_right.is_some_and(|e| q >= 1.0 - e) && self.sigma_right * t3 > 0.0
            }
            (MonitorKind::Case1Left, Regime::Left { q }) => {
                self.case1_left.is_some_and(|e| q <= e) && self.sigma_left * t3 <= 0.0
            }
            (MonitorKind::Case2Left, Regime::Left { q }) => {
                self.case2_left.is_some_and(|e| q <= e) && self.sigma_left * t3 > 0.0
            }
            (MonitorKind::EndpointRight, Regime::Right { q }) => {
                self.endpoint_right.is_some_and(|c| q >= 0.5 && t3.abs() >= c)
            }
            (MonitorKind::EndpointLeft, Regime::Left { q }) => {
                self.endpoint_left.is_some_and(|c| q <= 0.5 && t3.abs() >= c)
            }
            (MonitorKind::Conservation, Regime::Full | Regime::Empty) => theta[0].abs() < 1.0,
            _ => false,
        }
    }

    pub fn applicable(&self, theta: &[f64]) -> Vec<MonitorKind> {
        MonitorKind::MONOTONE
            .into_iter()
            .chain(std::iter::once(MonitorKind::Conservation))
            .filter(|k| self.applies(*k, theta))
            .collect()
    }
}

/// Upper bound on `|θ₃|` implied by `𝓛(θ) ≤ 𝓛(Θ(0))`, where available:
/// `√24 (√𝓛₀ + C) μ(I)^{−3/2}` for `μ(I) ∈ (0, 1)` and
/// `√12 (√𝓛₀ + C)/|θ₁|` in the full regime, with `C = ‖f − f̄‖_{L²}`.
pub fn theta3_bound(problem: &OneNeuron, initial_risk: f64, theta: &[f64]) -> Option<f64> {
    let k = initial_risk.sqrt() + problem.l2_deviation();
    match classify(theta) {
        Regime::Right { q } => Some(24f64.sqrt() * k * (1.0 - q).powf(-1.5)),
        Regime::Left { q } => Some(24f64.sqrt() * k * q.powf(-1.5)),
        Regime::Full if theta[0] != 0.0 => Some(12f64.sqrt() * k / theta[0].abs()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::Profile;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lyapunov_examples() {
        let l = lyapunov(&[0.0, 1.0, 2.0]);
        assert_eq!(l.e_full, Some(4.0));
        let l = lyapunov(&[std::f64::consts::FRAC_1_SQRT_2, 0.3, 1.5]);
        assert_abs_diff_eq!(l.v_right, 2.25, epsilon = 1e-15);
        assert_eq!(lyapunov(&[0.0, 1.0, 0.0]).v_left, 0.0);
        assert_eq!(lyapunov(&[1.0, 0.0, 0.0]).e_full, None);
    }

    #[test]
    fn windows_for_identity_target() {
        let p = OneNeuron::new(Profile::Affine { slope: 1.0, intercept: 0.0 }).unwrap();
        let w = MonitorWindows::scan(&p);
        assert_eq!((w.sigma_right, w.sigma_left), (1.0, -1.0));
        assert_eq!(w.case1_right, Some(0.4999));
        // 0.9·0.5 < 0.5 − ε needs ε < 0.05
        assert_eq!(w.case2_right, Some(0.0499));
        assert_eq!(w.case1_left, Some(0.4999));
        assert!(w.endpoint_right.is_none());
        assert!(w.case2_left.unwrap() > 0.0);
    }

    #[test]
    fn geometric_thresholds() {
        // 1/6 + q/2 > 5/8 forces q > 11/12
        let eta = geometric_width(|d| right_conditions(1.0 - d));
        assert!(eta < 1.0 / 12.0 && eta > 0.0);
        assert!(geometric_width(left_conditions) > 0.0);
    }

    #[test]
    fn endpoint_window() {
        // f̄ = f(1) = 1/2, Lipschitz constant 3/2
        let p = OneNeuron::new(Profile::PiecewiseLinear { knots: vec![(0.0, 0.0), (0.5, 0.75), (1.0, 0.5)] }).unwrap();
        assert_abs_diff_eq!(p.fbar(), 0.5, epsilon = 1e-15);
        let w = MonitorWindows::scan(&p);
        assert_eq!(w.sigma_right, 0.0);
        assert_eq!(w.endpoint_right, Some(6.0));
        assert!(w.applies(MonitorKind::EndpointRight, &[0.8, -0.6, 9.0]));
        assert!(!w.applies(MonitorKind::EndpointRight, &[0.8, -0.6, 5.0]));
    }

    #[test]
    fn applicability() {
        let p = OneNeuron::new(Profile::Affine { slope: 1.0, intercept: 0.0 }).unwrap();
        let w = MonitorWindows::scan(&p);
        let q: f64 = 0.97;
        let t1 = 1.0 / (1.0 + q * q).sqrt();
        assert_eq!(w.applicable(&[t1, -q * t1, -1.0]), vec![MonitorKind::Case1Right]);
        assert_eq!(w.applicable(&[t1, -q * t1, 1.0]), vec![MonitorKind::Case2Right]);
        assert_eq!(w.applicable(&[0.6, 0.8, 1.0]), vec![MonitorKind::Conservation]);
        assert!(w.applicable(&[0.6, -0.3, 1.0]).is_empty());
    }
}
