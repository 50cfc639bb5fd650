//! Forward pass of the mean-centred ReLU network and the risk functional.
//!
//! Hidden layers are ordinary `x ↦ ℜ_r(W x + b)` maps. The last affine layer
//! acts on the last hidden activations minus their integral against the
//! input measure `μ`; the integral is taken against `μ` itself, not its
//! normalisation.

use crate::activation::Smoothing;
use crate::error::{Error, Result};
use crate::params::ParamVector;
use crate::quadrature::{InputMeasure, NodeSet, QuadratureSettings};
use crate::target::TargetFunction;

/// Pre- and post-activations of the hidden layers `1..L-1` at one input.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl ForwardPass {
    pub fn last_hidden(&self) -> &[f64] {
        self.post.last().expect("at least one hidden layer")
    }
}

/// `y = W x + b` for layer `k`.
#[inline]
fn affine(theta: &ParamVector, k: usize, x: &[f64], y: &mut [f64]) {
    let w = theta.layer_weights(k);
    let b = theta.layer_biases(k);
    let cols = x.len();
    for (i, yi) in y.iter_mut().enumerate() {
        let row = &w[i * cols..(i + 1) * cols];
        *yi = b[i] + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
    }
}

/// Hidden-layer pass at `x`, without the final centred layer.
pub fn forward(theta: &ParamVector, x: &[f64], smoothing: Smoothing) -> Result<ForwardPass> {
    let arch = theta.arch();
    if x.len() != arch.input_dim() {
        return Err(Error::DimensionMismatch { expected: arch.input_dim(), got: x.len(), context: "network input" });
    }
    let hidden = arch.depth() - 1;
    let mut pre = Vec::with_capacity(hidden);
    let mut post: Vec<Vec<f64>> = Vec::with_capacity(hidden);
    for k in 1..=hidden {
        let input = if k == 1 { x } else { &post[k - 2] };
        let mut z = vec![0.0; arch.width(k)];
        affine(theta, k, input, &mut z);
        let a = z.iter().map(|&v| smoothing.act(v)).collect();
        pre.push(z);
        post.push(a);
    }
    Ok(ForwardPass { pre, post })
}

/// Hidden pre/post-activations for every node, stored layer by layer as
/// flat `n × ℓ_k` arrays.
#[derive(Debug, Clone)]
pub(crate) struct BatchForward {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

pub(crate) fn forward_batch(theta: &ParamVector, nodes: &NodeSet, smoothing: Smoothing) -> BatchForward {
    let arch = theta.arch();
    let hidden = arch.depth() - 1;
    let n = nodes.len();
    let mut pre: Vec<Vec<f64>> = Vec::with_capacity(hidden);
    let mut post: Vec<Vec<f64>> = Vec::with_capacity(hidden);
    for k in 1..=hidden {
        let width = arch.width(k);
        let in_width = arch.width(k - 1);
        let mut z = vec![0.0; n * width];
        for p in 0..n {
            let input = if k == 1 { nodes.point(p) } else { &post[k - 2][p * in_width..(p + 1) * in_width] };
            affine(theta, k, input, &mut z[p * width..(p + 1) * width]);
        }
        let a: Vec<f64> = z.iter().map(|&v| smoothing.act(v)).collect();
        pre.push(z);
        post.push(a);
    }
    BatchForward { pre, post }
}

/// Input measure, target and quadrature resolution of a training problem.
#[derive(Debug, Clone)]
pub struct Objective {
    measure: InputMeasure,
    target: TargetFunction,
    quad: QuadratureSettings,
}

impl Objective {
    pub fn new(measure: InputMeasure, target: TargetFunction, quad: QuadratureSettings) -> Result<Self> {
        measure.validate()?;
        Ok(Self { measure, target, quad })
    }

    pub fn measure(&self) -> &InputMeasure {
        &self.measure
    }

    pub fn target(&self) -> &TargetFunction {
        &self.target
    }

    pub fn quadrature(&self) -> &QuadratureSettings {
        &self.quad
    }

    pub(crate) fn check_shapes(&self, theta: &ParamVector) -> Result<()> {
        let arch = theta.arch();
        if arch.input_dim() != self.measure.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.measure.dim(),
                got: arch.input_dim(),
                context: "input dimension vs measure",
            });
        }
        if arch.output_dim() != self.target.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.target.output_dim(),
                got: arch.output_dim(),
                context: "output dimension vs target",
            });
        }
        Ok(())
    }

    /// Whether integrals for `theta` are computed exactly by splitting the
    /// input interval at every neuron and target breakpoint.
    pub fn uses_exact_rule(&self, theta: &ParamVector) -> bool {
        self.measure.supports_exact_segments() && theta.arch().depth() == 2 && self.target.breakpoints().is_some()
    }

    /// Quadrature nodes for integrals of risk-type integrands at `theta`.
    pub fn node_rule(&self, theta: &ParamVector, smoothing: Smoothing) -> NodeSet {
        if !self.uses_exact_rule(theta) {
            return self.measure.nodes(&self.quad, None, self.quad.exact_order);
        }
        let arch = theta.arch();
        let mut bps = self.target.breakpoints().unwrap_or_default();
        let w = theta.layer_weights(1);
        let b = theta.layer_biases(1);
        let window = smoothing.window();
        for i in 0..arch.width(1) {
            if w[i] != 0.0 {
                bps.push(-b[i] / w[i]);
                if window > 0.0 {
                    bps.push((window - b[i]) / w[i]);
                }
            }
        }
        // residual degree D; risk and gradient integrands have degree ≤ 2D + 1
        let d = smoothing.piece_degree().max(self.target.degree().unwrap_or(1));
        self.measure.nodes(&self.quad, Some(&bps), d + 1)
    }

    fn mean_from_batch(theta: &ParamVector, nodes: &NodeSet, batch: &BatchForward) -> Result<Vec<f64>> {
        let width = theta.arch().width(theta.arch().depth() - 1);
        let last = batch.post.last().expect("hidden layer");
        let mut m = vec![0.0; width];
        for (p, &w) in nodes.weights.iter().enumerate() {
            for (mi, a) in m.iter_mut().zip(&last[p * width..(p + 1) * width]) {
                *mi += w * a;
            }
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hidden mean"));
        }
        Ok(m)
    }

    /// `∫ 𝔐(𝒩^{L-1}(y)) μ(dy)`.
    pub fn hidden_mean(&self, theta: &ParamVector, smoothing: Smoothing) -> Result<Vec<f64>> {
        self.check_shapes(theta)?;
        let nodes = self.node_rule(theta, smoothing);
        let batch = forward_batch(theta, &nodes, smoothing);
        Self::mean_from_batch(theta, &nodes, &batch)
    }

    /// Output layer applied to centred hidden activations.
    pub(crate) fn output(theta: &ParamVector, hidden: &[f64], mean: &[f64], out: &mut [f64]) {
        let arch = theta.arch();
        let l = arch.depth();
        let w = theta.layer_weights(l);
        let b = theta.layer_biases(l);
        let cols = hidden.len();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &w[i * cols..(i + 1) * cols];
            *o = b[i] + row.iter().zip(hidden.iter().zip(mean)).map(|(wij, (h, m))| wij * (h - m)).sum::<f64>();
        }
    }

    /// Network output `𝒩^{L,θ}_r(x)`.
    pub fn realize(&self, theta: &ParamVector, x: &[f64], smoothing: Smoothing) -> Result<Vec<f64>> {
        let mean = self.hidden_mean(theta, smoothing)?;
        self.realize_with_mean(theta, x, &mean, smoothing)
    }

    /// Output at many inputs sharing one hidden-mean computation.
    pub fn realize_many(&self, theta: &ParamVector, xs: &[Vec<f64>], smoothing: Smoothing) -> Result<Vec<Vec<f64>>> {
        let mean = self.hidden_mean(theta, smoothing)?;
        xs.iter().map(|x| self.realize_with_mean(theta, x, &mean, smoothing)).collect()
    }

    fn realize_with_mean(
        &self,
        theta: &ParamVector,
        x: &[f64],
        mean: &[f64],
        smoothing: Smoothing,
    ) -> Result<Vec<f64>> {
        let fp = forward(theta, x, smoothing)?;
        let mut out = vec![0.0; theta.arch().output_dim()];
        Self::output(theta, fp.last_hidden(), mean, &mut out);
        Ok(out)
    }

    /// `𝓛_r(θ) = ∫ ‖𝒩^{L,θ}_r(x) − f(x)‖² μ(dx)`.
    pub fn risk(&self, theta: &ParamVector, smoothing: Smoothing) -> Result<f64> {
        self.check_shapes(theta)?;
        let nodes = self.node_rule(theta, smoothing);
        let batch = forward_batch(theta, &nodes, smoothing);
        let mean = Self::mean_from_batch(theta, &nodes, &batch)?;
        let arch = theta.arch();
        let width = arch.width(arch.depth() - 1);
        let last = batch.post.last().expect("hidden layer");
        let mut out = vec![0.0; arch.output_dim()];
        let mut f = vec![0.0; arch.output_dim()];
        let mut risk = 0.0;
        for (p, (x, w)) in nodes.iter().enumerate() {
            Self::output(theta, &last[p * width..(p + 1) * width], &mean, &mut out);
            self.target.eval_into(x, &mut f);
            risk += w * out.iter().zip(&f).map(|(o, t)| (o - t) * (o - t)).sum::<f64>();
        }
        if !risk.is_finite() {
            return Err(Error::NonFinite("risk"));
        }
        Ok(risk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Architecture;
    use crate::target::Profile;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn theta(dims: &[usize], v: &[f64]) -> ParamVector {
        ParamVector::new(Arc::new(Architecture::new(dims).unwrap()), v.to_vec()).unwrap()
    }

    fn unit_objective(profile: Profile) -> Objective {
        Objective::new(
            InputMeasure::unit_interval(),
            TargetFunction::scalar(profile).unwrap(),
            QuadratureSettings::default(),
        )
        .unwrap()
    }

    #[test]
    fn forward_examples() {
        let fp = forward(&theta(&[1, 1, 1], &[1.0, 0.0, 1.0, 0.0]), &[0.5], Smoothing::Exact).unwrap();
        assert_eq!(fp.pre[0], vec![0.5]);
        assert_eq!(fp.post[0], vec![0.5]);
        let fp = forward(&theta(&[1, 1, 1], &[1.0, -1.0, 1.0, 0.0]), &[0.5], Smoothing::Exact).unwrap();
        assert_eq!(fp.post[0], vec![0.0]);
        // rows (1,0) and (-1,1): weights (1,-1), biases (0,1)
        let fp = forward(&theta(&[1, 2, 1], &[1.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0]), &[0.25], Smoothing::Exact).unwrap();
        assert_eq!(fp.post[0], vec![0.25, 0.75]);
        assert!(forward(&theta(&[1, 1, 1], &[1.0, 0.0, 1.0, 0.0]), &[0.5, 0.5], Smoothing::Exact).is_err());
    }

    #[test]
    fn hidden_mean_examples() {
        let obj = unit_objective(Profile::Constant { value: 0.0 });
        let m = obj.hidden_mean(&theta(&[1, 1, 1], &[1.0, 0.0, 7.0, 3.0]), Smoothing::Exact).unwrap();
        assert_abs_diff_eq!(m[0], 0.5, epsilon = 1e-15);
        let m = obj.hidden_mean(&theta(&[1, 1, 1], &[1.0, -0.5, 7.0, 3.0]), Smoothing::Exact).unwrap();
        assert_abs_diff_eq!(m[0], 0.125, epsilon = 1e-15);

        let empty = Objective::new(
            InputMeasure::discrete(0.0, 1.0, vec![vec![0.2], vec![0.9]], vec![0.0, 0.0]).unwrap(),
            TargetFunction::zero(1),
            QuadratureSettings::default(),
        )
        .unwrap();
        let m = empty.hidden_mean(&theta(&[1, 2, 1], &[1.0, 2.0, 0.5, 0.5, 1.0, 1.0, 0.0]), Smoothing::Exact).unwrap();
        assert_eq!(m, vec![0.0, 0.0]);
    }

    #[test]
    fn hidden_mean_is_not_normalised() {
        let obj = Objective::new(
            InputMeasure::uniform(0.0, 2.0, 1).unwrap(),
            TargetFunction::zero(1),
            QuadratureSettings::default(),
        )
        .unwrap();
        // ∫_0^2 s ds = 2, the average would be 1
        let m = obj.hidden_mean(&theta(&[1, 1, 1], &[1.0, 0.0, 1.0, 0.0]), Smoothing::Exact).unwrap();
        assert_abs_diff_eq!(m[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn realize_examples() {
        let obj = unit_objective(Profile::Constant { value: 0.0 });
        // all-zero weights: hidden activation is constant ReLU(b1); unit mass cancels it
        let th = theta(&[1, 2, 1], &[0.0, 0.0, 0.7, -0.2, 0.0, 0.0, 1.25]);
        for x in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(obj.realize(&th, &[x], Smoothing::Exact).unwrap()[0], 1.25, epsilon = 1e-15);
        }
        let th = theta(&[1, 1, 1], &[1.0, 0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(obj.realize(&th, &[0.75], Smoothing::Exact).unwrap()[0], 0.25, epsilon = 1e-15);

        let a = theta(&[1, 1, 1], &[3.0, 4.0, 2.0, 5.0]);
        let b = theta(&[1, 1, 1], &[0.6, 0.8, 10.0, 5.0]);
        for x in [0.0, 0.5, 1.0] {
            assert_abs_diff_eq!(
                obj.realize(&a, &[x], Smoothing::Exact).unwrap()[0],
                obj.realize(&b, &[x], Smoothing::Exact).unwrap()[0],
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn risk_examples() {
        let obj = unit_objective(Profile::Constant { value: 0.0 });
        let th = theta(&[1, 1, 1], &[1.0, 0.0, 1.0, 0.0]);
        // ∫_0^1 (s − 1/2)² ds
        assert_abs_diff_eq!(obj.risk(&th, Smoothing::Exact).unwrap(), 1.0 / 12.0, epsilon = 1e-15);
        let th = theta(&[1, 1, 1], &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(obj.risk(&th, Smoothing::Exact).unwrap(), 0.0);

        // f equal to the realization itself: x ↦ max(x − 0.5, 0) − 1/8 + 0.3
        let th = theta(&[1, 1, 1], &[1.0, -0.5, 1.0, 0.3]);
        let obj = unit_objective(Profile::PiecewiseLinear { knots: vec![(0.0, 0.175), (0.5, 0.175), (1.0, 0.675)] });
        assert_abs_diff_eq!(obj.risk(&th, Smoothing::Exact).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn shape_errors() {
        let obj = unit_objective(Profile::Constant { value: 0.0 });
        let th = ParamVector::zeros(Arc::new(Architecture::new(&[2, 1, 1]).unwrap()));
        assert!(matches!(obj.risk(&th, Smoothing::Exact), Err(Error::DimensionMismatch { .. })));
        let th = ParamVector::zeros(Arc::new(Architecture::new(&[1, 1, 2]).unwrap()));
        assert!(obj.hidden_mean(&th, Smoothing::Exact).is_err());
    }
}
