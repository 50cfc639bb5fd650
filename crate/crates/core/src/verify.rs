//! Property suite exercising every invariant of the library at desk scale.
//!
//! Each criterion draws its randomness from its own stream of one root seed
//! and returns a [`CriterionOutcome`]. One-neuron trajectories are shared by
//! the criteria that inspect them.

use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::activation::Smoothing;
use crate::dynamics::{integrate_flow, AnnProblem, FlowConfig, GammaSchedule, Integrator, GAMMA_CAP};
use crate::error::{Error, Result};
use crate::gradients::{fd_gradient, generalized_gradient, risk_and_gradient};
use crate::manifold::{grad_psi, project_gradient, rescale_full};
use crate::one_neuron::{
    affine_integral_bound_check, boundedness_batch, closed_integrals, mean_m, BoundednessConfig, BoundednessReport,
    MonitorKind, OneNeuron,
};
use crate::output::{json_bytes, trajectory_csv_bytes};
use crate::params::{Architecture, ParamVector};
use crate::quadrature::{GaussLegendre, InputMeasure, QuadratureSettings};
use crate::realization::{forward, Objective};
use crate::seeding::stream_rng;
use crate::target::{Profile, TargetFunction};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Network shapes used by the network-level criteria.
pub const ARCHITECTURES: [&[usize]; 3] = [&[1, 1, 1], &[1, 8, 1], &[2, 4, 4, 1]];

pub const CRITERIA: [(u8, &str); 14] = [
    (1, "rescaling preserves the realization"),
    (2, "rescaled neurons have unit norm"),
    (3, "flow stays on the constraint set"),
    (4, "risk is non-increasing along trajectories"),
    (5, "projected gradient is tangent"),
    (6, "smoothed gradient matches finite differences"),
    (7, "one-neuron gradient matches the projected network gradient"),
    (8, "one-neuron closed-form integrals"),
    (9, "conservation in the full regime"),
    (10, "Lyapunov monotonicity in regime windows"),
    (11, "boundedness over a finite horizon"),
    (12, "affine integral lower bound"),
    (13, "rescaled flow dissipates the full gradient norm"),
    (14, "fixed-seed runs are byte-identical"),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifySettings {
    pub seed: u64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub measured: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub detail: String,
    /// Wall-clock budget in seconds, when one applies.
    pub runtime_limit: Option<f64>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CriterionOutcome {
    /// Numerical check and runtime budget both met.
    pub fn within_budget(&self) -> bool {
        self.runtime_limit.is_none_or(|l| self.elapsed.as_secs_f64() <= l)
    }

    /// One human-readable status line.
    pub fn line(&self) -> String {
        let ok = self.passed && self.within_budget();
        format!(
            "[{}] C{:02} {}: measured {:.3e} (tolerance {:.1e}, n = {}, {:.2} s) {}",
            if ok { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.tolerance,
            self.samples,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub all_passed: bool,
    pub criteria: Vec<CriterionOutcome>,
}

/// Numerical part of a [`CriterionOutcome`].
struct Measured {
    measured: f64,
    tolerance: f64,
    samples: usize,
    ok: bool,
    detail: String,
}

impl Measured {
    fn at_most(measured: f64, tolerance: f64, samples: usize, detail: String) -> Self {
        Self { ok: measured <= tolerance && samples > 0, measured, tolerance, samples, detail }
    }
}

/// Trajectories per Lyapunov target in the boundedness batch.
pub const BOUNDEDNESS_COUNTS: [usize; 3] = [34, 33, 33];

/// Trajectories per Lyapunov target used for the monotonicity check; the
/// first ones of each boundedness batch.
pub const LYAPUNOV_COUNT: usize = 20;

/// The one-neuron trajectories shared by criteria 4, 10 and 11.
#[derive(Debug, Clone)]
pub struct OneNeuronSuite {
    /// `(target label, reports)` for the Lyapunov targets, 100 in total.
    pub lyapunov: Vec<(String, Vec<BoundednessReport>)>,
    /// Further Lipschitz targets, reported but not asserted on.
    pub extra: Vec<(String, Vec<BoundednessReport>)>,
}

impl OneNeuronSuite {
    /// The 100 trajectories of the boundedness batch.
    pub fn boundedness(&self) -> impl Iterator<Item = &BoundednessReport> {
        self.lyapunov.iter().flat_map(|(_, r)| r)
    }

    /// The first [`LYAPUNOV_COUNT`] trajectories of each Lyapunov target.
    pub fn monotonicity(&self) -> impl Iterator<Item = &BoundednessReport> {
        self.lyapunov.iter().flat_map(|(_, r)| &r[..LYAPUNOV_COUNT])
    }

    pub fn all(&self) -> impl Iterator<Item = &BoundednessReport> {
        self.lyapunov.iter().chain(&self.extra).flat_map(|(_, r)| r)
    }
}

/// Targets `s`, `|s − 0.3|` and `1 − s`.
pub fn lyapunov_targets() -> Vec<(&'static str, Profile)> {
    vec![
        ("s", Profile::Affine { slope: 1.0, intercept: 0.0 }),
        ("|s-0.3|", Profile::AbsOffset { center: 0.3 }),
        ("1-s", Profile::Affine { slope: -1.0, intercept: 1.0 }),
    ]
}

/// Additional targets: zero, `|s − 0.5|`, `s²` and a tent with `f̄ = f(1)`.
pub fn extra_targets() -> Vec<(&'static str, Profile)> {
    vec![
        ("zero", Profile::Constant { value: 0.0 }),
        ("|s-0.5|", Profile::AbsOffset { center: 0.5 }),
        ("s^2", Profile::Polynomial { coeffs: vec![0.0, 0.0, 1.0] }),
        ("tent", Profile::PiecewiseLinear { knots: vec![(0.0, 0.0), (0.5, 0.75), (1.0, 0.5)] }),
    ]
}

/// Objective on `[0, 1]^dim` with target `|x₁ − 0.3|` and a 64-node grid
/// per axis off the exact path.
pub fn network_objective(dim: usize) -> Result<Objective> {
    Objective::new(
        InputMeasure::uniform(0.0, 1.0, dim)?,
        TargetFunction::profile(Profile::AbsOffset { center: 0.3 }, 1)?,
        QuadratureSettings::default().with_nodes_per_axis(64),
    )
}

fn arch(dims: &[usize]) -> Result<Arc<Architecture>> {
    Ok(Arc::new(Architecture::new(dims)?))
}

/// Uniform grid with `n` points per axis on `[0, 1]^dim`.
fn grid(dim: usize, n: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut pts = vec![Vec::new()];
    for _ in 0..dim {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    pts
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Random piecewise-linear target on `[0, 1]` with 2 to 5 knots.
pub fn random_piecewise_linear<R: Rng + ?Sized>(rng: &mut R) -> Profile {
    let interior = rng.gen_range(0..=3);
    let mut xs: Vec<f64> = (0..interior).map(|_| rng.gen_range(0.02..0.98)).collect();
    xs.push(0.0);
    xs.push(1.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let knots = xs.into_iter().map(|x| (x, rng.gen_range(-2.0..2.0))).collect();
    Profile::PiecewiseLinear { knots }
}

/// A state on the unit circle with `θ₃ ~ U(−3, 3)`.
fn circle_state<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    [phi.cos(), phi.sin(), rng.gen_range(-3.0..3.0)]
}

/// Runs the suite. Each criterion is computed at most once per instance.
pub struct Suite {
    settings: VerifySettings,
    one_neuron: OnceLock<std::result::Result<OneNeuronSuite, Error>>,
    ann_risk_increase: OnceLock<f64>,
}

impl Suite {
    pub fn new(settings: VerifySettings) -> Self {
        Self { settings, one_neuron: OnceLock::new(), ann_risk_increase: OnceLock::new() }
    }

    fn rng(&self, criterion: u64) -> ChaCha8Rng {
        stream_rng(self.settings.seed, criterion)
    }

    /// The one-neuron trajectories at `T = 100`.
    pub fn one_neuron_suite(&self) -> Result<&OneNeuronSuite> {
        self.one_neuron
            .get_or_init(|| {
                let cfg = BoundednessConfig::default();
                let batch = |targets: Vec<(&str, Profile)>, counts: &[usize], offset: u64| {
                    targets
                        .into_iter()
                        .zip(counts)
                        .enumerate()
                        .map(|(i, ((label, profile), &count))| {
                            let p = OneNeuron::new(profile)?;
                            let root = self.settings.seed.wrapping_add(offset + i as u64);
                            Ok((label.to_string(), boundedness_batch(&p, root, count, &cfg)?))
                        })
                        .collect::<Result<Vec<_>>>()
                };
                Ok(OneNeuronSuite {
                    lyapunov: batch(lyapunov_targets(), &BOUNDEDNESS_COUNTS, 1000)?,
                    extra: batch(extra_targets(), &[10; 4], 2000)?,
                })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn run_all(&self) -> Result<VerifyReport> {
        let criteria = CRITERIA.iter().map(|&(id, _)| self.run(id)).collect::<Result<Vec<_>>>()?;
        Ok(VerifyReport { seed: self.settings.seed, all_passed: criteria.iter().all(|c| c.passed), criteria })
    }

    pub fn run(&self, id: u8) -> Result<CriterionOutcome> {
        let name = CRITERIA
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, n)| n.to_string())
            .ok_or_else(|| Error::Precondition(format!("unknown criterion {id}")))?;
        let start = Instant::now();
        let (m, limit) = match id {
            1 => (self.rescaling_realization()?, Some(10.0)),
            2 => (self.rescaling_unit_norm()?, None),
            3 => (self.flow_invariance()?, Some(60.0)),
            4 => (self.monotone_risk()?, None),
            5 => (self.tangency()?, None),
            6 => (self.finite_differences()?, None),
            7 => (self.one_neuron_gradient()?, Some(10.0)),
            8 => (self.closed_forms()?, None),
            9 => (self.conservation()?, None),
            10 => (self.lyapunov_monotonicity()?, None),
            11 => (self.boundedness()?, None),
            12 => (self.affine_bound()?, None),
            13 => (self.rescaled_dissipation()?, None),
            _ => (self.determinism()?, None),
        };
        Ok(CriterionOutcome {
            id,
            name,
            passed: m.ok,
            measured: m.measured,
            tolerance: m.tolerance,
            samples: m.samples,
            detail: m.detail,
            runtime_limit: limit,
            elapsed: start.elapsed(),
        })
    }

    fn rescaling_draws(&self) -> Result<Vec<ParamVector>> {
        let mut rng = self.rng(1);
        let archs = ARCHITECTURES.iter().map(|d| arch(d)).collect::<Result<Vec<_>>>()?;
        Ok((0..200).map(|i| ParamVector::sample_normal(archs[i % 3].clone(), &mut rng, 1.0)).collect())
    }

    fn rescaling_realization(&self) -> Result<Measured> {
        let objs = [network_objective(1)?, network_objective(2)?];
        let grids = [grid(1, 101), grid(2, 101)];
        let mut worst = 0.0f64;
        let draws = self.rescaling_draws()?;
        for theta in &draws {
            let d = theta.arch().input_dim() - 1;
            let before = objs[d].realize_many(theta, &grids[d], Smoothing::Exact)?;
            let after = objs[d].realize_many(&rescale_full(theta), &grids[d], Smoothing::Exact)?;
            for (a, b) in before.iter().zip(&after) {
                worst = worst.max((a[0] - b[0]).abs() / (1.0 + a[0].abs()));
            }
        }
        Ok(Measured::at_most(worst, 1e-10, draws.len(), "relative grid deviation".into()))
    }

    fn rescaling_unit_norm(&self) -> Result<Measured> {
        let mut worst = 0.0f64;
        let mut n = 0;
        for theta in self.rescaling_draws()? {
            if theta.min_hidden_norm() < 1e-8 {
                continue;
            }
            n += 1;
            let r = rescale_full(&theta);
            for key in r.arch().hidden_keys() {
                let v = r.neuron_subvector(key)?;
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                worst = worst.max((norm - 1.0).abs());
            }
        }
        Ok(Measured::at_most(worst, 1e-12, n, "max | ‖V‖ − 1 |".into()))
    }

    fn ann_problem(dims: &[usize]) -> Result<AnnProblem> {
        let a = arch(dims)?;
        AnnProblem::new(network_objective(dims[0])?, ParamVector::zeros(a))
    }

    fn flow_invariance(&self) -> Result<Measured> {
        let mut rng = self.rng(3);
        let (mut free, mut retracted, mut risk_inc) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
        let mut parts = Vec::new();
        for dims in ARCHITECTURES {
            let problem = Self::ann_problem(dims)?;
            let xi = ParamVector::sample_normal(arch(dims)?, &mut rng, 1.0).into_values();
            let mut devs = [0.0; 2];
            for (j, reproject) in [false, true].into_iter().enumerate() {
                let cfg = FlowConfig {
                    t_end: 1.0,
                    step: 1e-3,
                    integrator: Integrator::Rk4,
                    reproject,
                    ..FlowConfig::default()
                };
                let rec = integrate_flow(&problem, &xi, &cfg)?;
                if rec.termination.is_blow_up() {
                    return Err(Error::Precondition(format!("flow on {dims:?} ended: {}", rec.termination)));
                }
                devs[j] = rec.max_psi_dev();
                risk_inc = risk_inc.max(rec.max_risk_increase());
            }
            free = free.max(devs[0]);
            retracted = retracted.max(devs[1]);
            parts.push(format!("{dims:?}: {:.1e}/{:.1e}", devs[0], devs[1]));
        }
        let _ = self.ann_risk_increase.set(risk_inc);
        let mut m = Measured::at_most(free, 1e-6, 6, format!("without/with retraction {}", parts.join(", ")));
        m.ok &= retracted <= 1e-12;
        Ok(m)
    }

    fn monotone_risk(&self) -> Result<Measured> {
        if self.ann_risk_increase.get().is_none() {
            self.flow_invariance()?;
        }
        let ann = *self.ann_risk_increase.get().expect("set by flow_invariance");
        let suite = self.one_neuron_suite()?;
        let one = suite.all().map(|r| r.max_risk_increase).fold(f64::NEG_INFINITY, f64::max);
        let n = 6 + suite.all().count();
        Ok(Measured::at_most(
            ann.max(one).max(0.0),
            1e-8,
            n,
            format!("network flows {ann:.1e}, one-neuron flows {one:.1e}"),
        ))
    }

    fn tangency(&self) -> Result<Measured> {
        let mut rng = self.rng(5);
        let mut worst = 0.0f64;
        let mut n = 0;
        for dims in ARCHITECTURES {
            let obj = network_objective(dims[0])?;
            let a = arch(dims)?;
            for _ in 0..1000 {
                let theta = rescale_full(&ParamVector::sample_normal(a.clone(), &mut rng, 1.0));
                let g = project_gradient(&theta, &generalized_gradient(&obj, &theta)?)?;
                for key in a.hidden_keys() {
                    let dot: f64 = grad_psi(&theta, key)?.iter().map(|&(p, v)| v * g[p]).sum();
                    worst = worst.max(dot.abs());
                }
                n += 1;
            }
        }
        Ok(Measured::at_most(worst, 1e-12, n, "max |⟨G, ∇ψ⟩|".into()))
    }

    /// No node pre-activation within `delta` of a kink of `ℜ_r`.
    fn smooth_region(obj: &Objective, theta: &ParamVector, s: Smoothing, delta: f64) -> Result<bool> {
        if obj.uses_exact_rule(theta) {
            return Ok(true);
        }
        let w = s.window();
        for (x, _) in obj.node_rule(theta, s).iter() {
            let fp = forward(theta, x, s)?;
            if fp.pre.iter().flatten().any(|&z| z.abs() < delta || (z - w).abs() < delta) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn finite_differences(&self) -> Result<Measured> {
        let mut rng = self.rng(6);
        let s = Smoothing::Smoothed(100);
        let mut worst = 0.0f64;
        let (mut accepted, mut rejected) = (0, 0);
        while accepted < 100 {
            let dims = ARCHITECTURES[accepted % 3];
            let obj = network_objective(dims[0])?;
            let theta = ParamVector::sample_normal(arch(dims)?, &mut rng, 1.0);
            if !Self::smooth_region(&obj, &theta, s, 1e-4)? {
                rejected += 1;
                if rejected > 100_000 {
                    return Err(Error::Precondition("no smooth-region samples found".into()));
                }
                continue;
            }
            let an = risk_and_gradient(&obj, &theta, s)?.gradient;
            let fd = fd_gradient(&obj, &theta, s, 1e-5)?;
            worst = worst.max(max_abs_diff(&an, &fd) / max_abs(&an).max(1e-12));
            accepted += 1;
        }
        Ok(Measured::at_most(
            worst,
            1e-4,
            accepted,
            format!("max |∇𝓛_r − FD|∞ / |∇𝓛_r|∞, {rejected} draws rejected near kinks"),
        ))
    }

    fn one_neuron_gradient(&self) -> Result<Measured> {
        let mut rng = self.rng(7);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let p = OneNeuron::new(random_piecewise_linear(&mut rng))?;
            let theta = circle_state(&mut rng);
            let explicit = p.grad_1n(&theta)?;
            let (obj, template) = p.as_network()?;
            let net = p.network_params(&template, &theta)?;
            let g = project_gradient(&net, &generalized_gradient(&obj, &net)?)?;
            worst = worst.max(max_abs_diff(&explicit, &g[..3]));
        }
        Ok(Measured::at_most(worst, 1e-9, 1000, "componentwise max deviation".into()))
    }

    fn closed_forms(&self) -> Result<Measured> {
        let mut rng = self.rng(8);
        let gl = GaussLegendre::new(3);
        let mut worst = 0.0f64;
        for i in 0..10_000 {
            let q: f64 = rng.gen_range(1e-3..1.0 - 1e-3);
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let n = (1.0 + q * q).sqrt();
            let theta = [sign / n, -sign * q / n, 0.0];
            let a = |s: f64| (theta[0] * s + theta[1]).max(0.0);
            let (lo, hi) = if sign > 0.0 { (q, 1.0) } else { (0.0, q) };
            let m = gl.integrate(0.0, q, a) + gl.integrate(q, 1.0, a);
            let first = gl.integrate(lo, hi, |s| a(s) - m);
            let second = gl.integrate(0.0, q, |s| (a(s) - m).powi(2)) + gl.integrate(q, 1.0, |s| (a(s) - m).powi(2));
            let c = closed_integrals(&theta)?;
            worst = worst
                .max((c.m - m).abs())
                .max((mean_m(&theta) - m).abs())
                .max((c.centered_first_moment - first).abs())
                .max((c.centered_second_moment - second).abs());
        }
        Ok(Measured::at_most(worst, 1e-12, 10_000, "right and left regimes".into()))
    }

    fn conservation(&self) -> Result<Measured> {
        let cfg = BoundednessConfig {
            flow: FlowConfig { t_end: 10.0, step: 1e-4, ..BoundednessConfig::default().flow },
            ..BoundednessConfig::default()
        };
        let (mut worst, mut checked, mut violations) = (0.0f64, 0, 0);
        for (i, (_, profile)) in lyapunov_targets().into_iter().enumerate() {
            let p = OneNeuron::new(profile)?;
            for r in boundedness_batch(&p, self.settings.seed.wrapping_add(900 + i as u64), 5, &cfg)? {
                let t = r.tally(MonitorKind::Conservation).expect("conservation tally");
                checked += t.checked;
                violations += t.violations;
                if t.checked > 0 {
                    worst = worst.max(t.worst);
                }
            }
        }
        let mut m = Measured::at_most(worst, 1e-6, checked, "max |ΔE_full|/Δt per step".into());
        m.ok &= violations == 0;
        Ok(m)
    }

    fn lyapunov_monotonicity(&self) -> Result<Measured> {
        let suite = self.one_neuron_suite()?;
        let mut worst = f64::NEG_INFINITY;
        let (mut checked, mut violations) = (0, 0);
        let mut parts = Vec::new();
        for kind in MonitorKind::MONOTONE {
            let (mut c, mut total) = (0, 0.0f64);
            for r in suite.monotonicity() {
                let t = r.tally(kind).expect("monotone tally");
                c += t.checked;
                violations += t.violations;
                if t.checked > 0 {
                    worst = worst.max(t.worst);
                    total = total.max(t.total_increase);
                }
            }
            checked += c;
            parts.push(format!("{} {c} steps (max cumulative rise {total:.1e})", kind.name()));
        }
        let mut m = Measured::at_most(worst.max(0.0), 1e-6, checked, parts.join(", "));
        m.ok &= violations == 0;
        Ok(m)
    }

    fn boundedness(&self) -> Result<Measured> {
        let suite = self.one_neuron_suite()?;
        let reports: Vec<&BoundednessReport> = suite.boundedness().collect();
        let blow_ups = reports.iter().filter(|r| r.termination.is_blow_up()).count();
        let violations: usize = reports.iter().map(|r| r.lyapunov_violations).sum();
        let worst_tail = reports.iter().map(|r| r.tail_increase).fold(0.0, f64::max);
        let sup = reports.iter().map(|r| r.sup_norm).fold(0.0, f64::max);
        let extra: Vec<&BoundednessReport> = suite.extra.iter().flat_map(|(_, r)| r).collect();
        let extra_blow_ups = extra.iter().filter(|r| r.termination.is_blow_up()).count();
        let extra_violations: usize = extra.iter().map(|r| r.lyapunov_violations).sum();
        let extra_tail = extra.iter().map(|r| r.tail_increase).fold(0.0, f64::max);
        let mut m = Measured::at_most(
            worst_tail,
            0.01,
            reports.len(),
            format!(
                "tail growth of running sup; blow-ups {blow_ups}, monitor violations {violations}, max sup {sup:.4}; \
                 unasserted extra targets: {} runs, blow-ups {extra_blow_ups}, violations {extra_violations}, \
                 tail growth {extra_tail:.1e}",
                extra.len()
            ),
        );
        m.ok &= blow_ups == 0 && violations == 0 && reports.len() == 100;
        Ok(m)
    }

    fn affine_bound(&self) -> Result<Measured> {
        let mut rng = self.rng(12);
        let mut violations = 0usize;
        for _ in 0..100_000 {
            let alpha: f64 = rng.gen_range(-10.0..10.0);
            let beta: f64 = rng.gen_range(-10.0..10.0);
            let x: f64 = rng.gen_range(-2.0..2.0);
            let y: f64 = rng.gen_range(-2.0..2.0);
            if !affine_integral_bound_check(alpha, beta, (x.min(y), x.max(y))) {
                violations += 1;
            }
        }
        Ok(Measured::at_most(violations as f64, 0.0, 100_000, "violations".into()))
    }

    fn rescaled_dissipation(&self) -> Result<Measured> {
        let mut rng = self.rng(13);
        let cfg = FlowConfig { t_end: 1.0, step: 1e-4, gamma: GammaSchedule::Rescaled, ..FlowConfig::default() };
        let mut worst = 0.0f64;
        let mut n = 0;
        for (_, profile) in lyapunov_targets() {
            let p = OneNeuron::new(profile)?;
            for _ in 0..3 {
                let xi: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
                let rec = integrate_flow(&p, &xi, &cfg)?;
                for j in 1..rec.len().saturating_sub(1) {
                    let raw2 = rec.raw_grad_norm[j].powi(2);
                    let proj2 = rec.grad_norm[j].powi(2);
                    let smooth = rec.tags[j - 1] == rec.tags[j] && rec.tags[j] == rec.tags[j + 1];
                    if !smooth || raw2 < 1e-10 || raw2 >= 0.5 * GAMMA_CAP * proj2 {
                        continue;
                    }
                    let fd = (rec.risk[j + 1] - rec.risk[j - 1]) / (rec.times[j + 1] - rec.times[j - 1]);
                    worst = worst.max((fd + raw2).abs() / raw2);
                    n += 1;
                }
            }
        }
        Ok(Measured::at_most(worst, 0.02, n, "relative |d𝓛/dt + ‖𝒢‖²|".into()))
    }

    fn determinism_artifacts(&self) -> Result<Vec<Vec<u8>>> {
        let mut rng = self.rng(14);
        let p = OneNeuron::new(Profile::AbsOffset { center: 0.3 })?;
        let xi: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let one = integrate_flow(&p, &xi, &FlowConfig::default())?;
        let ann = Self::ann_problem(&[1, 8, 1])?;
        let xi = ParamVector::sample_normal(arch(&[1, 8, 1])?, &mut rng, 1.0).into_values();
        let net = integrate_flow(&ann, &xi, &FlowConfig { t_end: 0.1, ..FlowConfig::default() })?;
        let cfg = BoundednessConfig {
            flow: FlowConfig { t_end: 10.0, ..BoundednessConfig::default().flow },
            ..BoundednessConfig::default()
        };
        let batch = boundedness_batch(&p, self.settings.seed, 8, &cfg)?;
        Ok(vec![trajectory_csv_bytes(&one)?, trajectory_csv_bytes(&net)?, json_bytes(&batch)?])
    }

    fn determinism(&self) -> Result<Measured> {
        let a = self.determinism_artifacts()?;
        let b = self.determinism_artifacts()?;
        let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        let bytes: usize = a.iter().map(Vec::len).sum();
        Ok(Measured::at_most(
            differing as f64,
            0.0,
            a.len(),
            format!("differing artifacts over two runs, {bytes} bytes each"),
        ))
    }
}

/// Full suite at `settings`.
pub fn run_suite(settings: VerifySettings) -> Result<VerifyReport> {
    Suite::new(settings).run_all()
}
