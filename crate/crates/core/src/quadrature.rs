//! Input measures and the node rules used to integrate against them.
//!
//! Three rules are available:
//!
//! * discrete measures integrate exactly as weighted sums;
//! * uniform measures on an interval with declared breakpoints use
//!   Gauss-Legendre on every segment between breakpoints, exact for piecewise
//!   polynomials of degree `≤ 2n − 1`;
//! * everything else uses a composite Gauss-Legendre tensor grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule via Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess for the i-th largest root
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            nodes[n - 1 - i] = -x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        // ascending order
        nodes.reverse();
        weights.reverse();
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Push the rule mapped onto `[lo, hi]` into `points`/`weights`.
    pub fn push_segment(&self, lo: f64, hi: f64, points: &mut Vec<f64>, weights: &mut Vec<f64>) {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            points.push(mid + half * x);
            weights.push(half * w);
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut g: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        half * self.nodes.iter().zip(&self.weights).map(|(x, w)| w * g(mid + half * x)).sum::<f64>()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Resolution knobs for the quadrature rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSettings {
    /// Nodes per axis of the composite tensor grid.
    pub nodes_per_axis: usize,
    /// Gauss-Legendre points per composite panel.
    pub panel_order: usize,
    /// Minimum Gauss-Legendre points per segment on the breakpoint-exact path.
    pub exact_order: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self { nodes_per_axis: 2048, panel_order: 4, exact_order: 3 }
    }
}

impl QuadratureSettings {
    pub fn with_nodes_per_axis(mut self, n: usize) -> Self {
        self.nodes_per_axis = n;
        self
    }
}

/// A finite measure `μ` on the box `[a, b]^{ℓ_0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputMeasure {
    /// Lebesgue measure restricted to the box.
    Uniform { a: f64, b: f64, dim: usize },
    /// `Σ_n w_n δ_{x_n}` with all `x_n` in the box.
    Discrete { a: f64, b: f64, points: Vec<Vec<f64>>, weights: Vec<f64> },
}

impl InputMeasure {
    pub fn uniform(a: f64, b: f64, dim: usize) -> Result<Self> {
        let m = InputMeasure::Uniform { a, b, dim };
        m.validate()?;
        Ok(m)
    }

    pub fn unit_interval() -> Self {
        InputMeasure::Uniform { a: 0.0, b: 1.0, dim: 1 }
    }

    pub fn discrete(a: f64, b: f64, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let m = InputMeasure::Discrete { a, b, points, weights };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.bounds();
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidMeasure(format!("box bounds must satisfy a < b, got [{a}, {b}]")));
        }
        match self {
            InputMeasure::Uniform { dim, .. } => {
                if *dim == 0 {
                    return Err(Error::InvalidMeasure("dimension must be positive".into()));
                }
            }
            InputMeasure::Discrete { points, weights, .. } => {
                if points.len() != weights.len() {
                    return Err(Error::InvalidMeasure(format!(
                        "{} points but {} weights",
                        points.len(),
                        weights.len()
                    )));
                }
                let dim = points.first().map(|p| p.len()).unwrap_or(1);
                for (p, w) in points.iter().zip(weights) {
                    if p.len() != dim || dim == 0 {
                        return Err(Error::InvalidMeasure("points have inconsistent dimension".into()));
                    }
                    if !(w.is_finite() && *w >= 0.0) {
                        return Err(Error::InvalidMeasure(format!("weight {w} is not a finite nonnegative number")));
                    }
                    if p.iter().any(|x| !(a..=b).contains(x)) {
                        return Err(Error::InvalidMeasure(format!("point {p:?} outside the box [{a}, {b}]")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            InputMeasure::Uniform { a, b, .. } | InputMeasure::Discrete { a, b, .. } => (*a, *b),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            InputMeasure::Uniform { dim, .. } => *dim,
            InputMeasure::Discrete { points, .. } => points.first().map(|p| p.len()).unwrap_or(1),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            InputMeasure::Uniform { a, b, dim } => (b - a).powi(*dim as i32),
            InputMeasure::Discrete { weights, .. } => weights.iter().sum(),
        }
    }

    /// Whether the breakpoint-exact segment rule applies.
    pub fn supports_exact_segments(&self) -> bool {
        matches!(self, InputMeasure::Uniform { dim: 1, .. })
    }

    /// Node rule for this measure. `breakpoints` is honoured only on the
    /// breakpoint-exact path (uniform, one-dimensional); `segment_order` is
    /// the Gauss-Legendre order per segment there.
    pub fn nodes(&self, settings: &QuadratureSettings, breakpoints: Option<&[f64]>, segment_order: usize) -> NodeSet {
        match self {
            InputMeasure::Discrete { points, weights, .. } => {
                let dim = self.dim();
                NodeSet { dim, points: points.iter().flatten().copied().collect(), weights: weights.clone() }
            }
            InputMeasure::Uniform { a, b, dim } => match (breakpoints, *dim) {
                (Some(bp), 1) => segment_rule(*a, *b, bp, segment_order.max(settings.exact_order)),
                _ => tensor_grid(*a, *b, *dim, settings),
            },
        }
    }
}

/// Flattened quadrature nodes: `points[n*dim..(n+1)*dim]` with weight `weights[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, n: usize) -> &[f64] {
        &self.points[n * self.dim..(n + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points.chunks_exact(self.dim.max(1)).zip(self.weights.iter().copied())
    }
}

/// Sorted, deduplicated cut points of `[a, b]` from the breakpoints inside it.
pub fn segment_cuts(a: f64, b: f64, breakpoints: &[f64]) -> Vec<f64> {
    let mut cuts: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    cuts.push(a);
    cuts.extend(breakpoints.iter().copied().filter(|x| x.is_finite() && *x > a && *x < b));
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite cuts"));
    cuts.dedup();
    cuts
}

fn segment_rule(a: f64, b: f64, breakpoints: &[f64], order: usize) -> NodeSet {
    let gl = GaussLegendre::new(order);
    let cuts = segment_cuts(a, b, breakpoints);
    let mut points = Vec::with_capacity((cuts.len() - 1) * order);
    let mut weights = Vec::with_capacity(points.capacity());
    for w in cuts.windows(2) {
        gl.push_segment(w[0], w[1], &mut points, &mut weights);
    }
    NodeSet { dim: 1, points, weights }
}

fn tensor_grid(a: f64, b: f64, dim: usize, settings: &QuadratureSettings) -> NodeSet {
    let order = settings.panel_order.max(1);
    let panels = settings.nodes_per_axis.div_ceil(order).max(1);
    let gl = GaussLegendre::new(order);
    let (mut axis_pts, mut axis_w) = (Vec::new(), Vec::new());
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        gl.push_segment(lo, lo + h, &mut axis_pts, &mut axis_w);
    }
    let per_axis = axis_pts.len();
    let total = per_axis.pow(dim as u32);
    let mut points = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for &i in &idx {
            points.push(axis_pts[i]);
            w *= axis_w[i];
        }
        weights.push(w);
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < per_axis {
                break;
            }
            *slot = 0;
        }
    }
    NodeSet { dim, points, weights }
}

/// `∫ g dμ` for a vector-valued `g` with `m` components.
///
/// `breakpoints` declares where `g` may fail to be polynomial (only used for
/// one-dimensional uniform measures); `degree` is the polynomial degree of `g`
/// on each piece, which fixes the Gauss-Legendre order of the exact path.
pub fn integrate<F>(
    measure: &InputMeasure,
    m: usize,
    breakpoints: Option<&[f64]>,
    degree: usize,
    settings: &QuadratureSettings,
    mut g: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let nodes = measure.nodes(settings, breakpoints, degree / 2 + 1);
    let mut acc = vec![0.0; m];
    let mut buf = vec![0.0; m];
    for (x, w) in nodes.iter() {
        if w == 0.0 {
            continue;
        }
        g(x, &mut buf);
        for (a, v) in acc.iter_mut().zip(&buf) {
            if !v.is_finite() {
                return Err(Error::NonFinite("integrand"));
            }
            *a += w * v;
        }
    }
    Ok(acc)
}
