//! Gradients of the risk.
//!
//! [`risk_and_gradient`] runs reverse-mode differentiation through the
//! centred network over the quadrature nodes. For exact ReLU the activation
//! derivative is `𝟙_{(0,∞)}`, which yields the generalized gradient `𝒢`. The
//! hidden-mean term depends on `θ` and is differentiated too: every node's
//! output residual is replaced by its deviation from the `μ`-integral of the
//! residuals before it is pushed back through the hidden layers.

use crate::activation::Smoothing;
use crate::error::{Error, Result};
use crate::params::ParamVector;
use crate::realization::{forward_batch, Objective};

/// Risk value and its gradient at one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskGradient {
    pub risk: f64,
    pub gradient: Vec<f64>,
}

/// `(𝓛_r(θ), ∇𝓛_r(θ))`; with [`Smoothing::Exact`] the gradient is `𝒢(θ)`.
pub fn risk_and_gradient(obj: &Objective, theta: &ParamVector, smoothing: Smoothing) -> Result<RiskGradient> {
    obj.check_shapes(theta)?;
    let arch = theta.arch();
    let depth = arch.depth();
    let out_dim = arch.output_dim();
    let last_w = arch.width(depth - 1);

    let nodes = obj.node_rule(theta, smoothing);
    let n = nodes.len();
    let batch = forward_batch(theta, &nodes, smoothing);
    let last = batch.post.last().expect("hidden layer");

    let mut mean = vec![0.0; last_w];
    for (p, &w) in nodes.weights.iter().enumerate() {
        for (m, a) in mean.iter_mut().zip(&last[p * last_w..(p + 1) * last_w]) {
            *m += w * a;
        }
    }

    // residuals r_p = 𝒩(x_p) − f(x_p)
    let mut resid = vec![0.0; n * out_dim];
    let mut f = vec![0.0; out_dim];
    let mut risk = 0.0;
    let mut resid_mean = vec![0.0; out_dim];
    for (p, (x, w)) in nodes.iter().enumerate() {
        let r = &mut resid[p * out_dim..(p + 1) * out_dim];
        Objective::output(theta, &last[p * last_w..(p + 1) * last_w], &mean, r);
        obj.target().eval_into(x, &mut f);
        for ((ri, fi), rm) in r.iter_mut().zip(&f).zip(resid_mean.iter_mut()) {
            *ri -= fi;
            risk += w * *ri * *ri;
            *rm += w * *ri;
        }
    }

    let mut grad = vec![0.0; arch.param_count()];

    // output layer: ∂/∂W_L = 2 ∫ r (a − m)ᵀ, ∂/∂b_L = 2 ∫ r
    for i in 0..out_dim {
        for j in 0..last_w {
            let mut acc = 0.0;
            for (p, &w) in nodes.weights.iter().enumerate() {
                acc += w * resid[p * out_dim + i] * (last[p * last_w + j] - mean[j]);
            }
            grad[arch.w_pos(depth, i, j)] = 2.0 * acc;
        }
        grad[arch.b_pos(depth, i)] = 2.0 * resid_mean[i];
    }

    // hidden layers, node by node with centred residuals
    let w_out = theta.layer_weights(depth);
    let max_width = (1..depth).map(|k| arch.width(k)).max().unwrap_or(0);
    let mut delta = vec![0.0; max_width];
    let mut delta_prev = vec![0.0; max_width];
    for p in 0..n {
        let w = nodes.weights[p];
        if w == 0.0 {
            continue;
        }
        for (j, d) in delta.iter_mut().enumerate().take(last_w) {
            let mut acc = 0.0;
            for i in 0..out_dim {
                acc += w_out[i * last_w + j] * (resid[p * out_dim + i] - resid_mean[i]);
            }
            *d = 2.0 * w * acc;
        }
        for k in (1..depth).rev() {
            let width = arch.width(k);
            let in_width = arch.width(k - 1);
            let z = &batch.pre[k - 1][p * width..(p + 1) * width];
            for (d, &zi) in delta.iter_mut().zip(z) {
                *d *= smoothing.deriv(zi);
            }
            let input: &[f64] =
                if k == 1 { nodes.point(p) } else { &batch.post[k - 2][p * in_width..(p + 1) * in_width] };
            for i in 0..width {
                let d = delta[i];
                if d == 0.0 {
                    continue;
                }
                let base = arch.w_pos(k, i, 0);
                for (j, &xj) in input.iter().enumerate() {
                    grad[base + j] += d * xj;
                }
                grad[arch.b_pos(k, i)] += d;
            }
            if k > 1 {
                let wk = theta.layer_weights(k);
                for (j, dp) in delta_prev.iter_mut().enumerate().take(in_width) {
                    *dp = (0..width).map(|i| wk[i * in_width + j] * delta[i]).sum();
                }
                std::mem::swap(&mut delta, &mut delta_prev);
            }
        }
    }

    if !risk.is_finite() {
        return Err(Error::NonFinite("risk"));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(RiskGradient { risk, gradient: grad })
}

/// `𝒢(θ)`, the exact-ReLU limit of the smoothed gradients.
pub fn generalized_gradient(obj: &Objective, theta: &ParamVector) -> Result<Vec<f64>> {
    Ok(risk_and_gradient(obj, theta, Smoothing::Exact)?.gradient)
}

/// Central differences of `g` at `point`.
pub fn central_differences<F>(point: &[f64], h: f64, mut g: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Precondition(format!("step h = {h} must be positive")));
    }
    let mut x = point.to_vec();
    let mut out = Vec::with_capacity(point.len());
    for j in 0..point.len() {
        x[j] = point[j] + h;
        let up = g(&x)?;
        x[j] = point[j] - h;
        let down = g(&x)?;
        x[j] = point[j];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Central-difference gradient of `𝓛_r`. Requires finite `r`, since `𝓛_∞`
/// need not be differentiable.
pub fn fd_gradient(obj: &Objective, theta: &ParamVector, smoothing: Smoothing, h: f64) -> Result<Vec<f64>> {
    if smoothing.is_exact() {
        return Err(Error::Precondition("finite differences need a smoothed risk (finite r)".into()));
    }
    central_differences(theta.as_slice(), h, |x| obj.risk(&theta.with_values(x.to_vec())?, smoothing))
}

/// Agreement of smoothed gradients at increasing `r` with `𝒢`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCheck {
    /// `‖∇𝓛_r(θ) − 𝒢(θ)‖` for each probed `r`.
    pub deviations: Vec<(u64, f64)>,
    /// False when the smoothed gradients disagree with each other beyond
    /// tolerance, i.e. `θ` is likely outside the convergence set.
    pub converged: bool,
}

/// Probe `r ∈ {10³, 10⁴, 10⁵}` and flag `θ` where the smoothed gradients do
/// not settle within `tol · (1 + ‖𝒢‖)`.
pub fn gradient_convergence(obj: &Objective, theta: &ParamVector, tol: f64) -> Result<ConvergenceCheck> {
    let exact = generalized_gradient(obj, theta)?;
    let scale = 1.0 + norm(&exact);
    let mut deviations = Vec::new();
    let mut grads = Vec::new();
    for r in [1_000u64, 10_000, 100_000] {
        let g = risk_and_gradient(obj, theta, Smoothing::Smoothed(r))?.gradient;
        deviations.push((r, dist(&g, &exact)));
        grads.push(g);
    }
    let converged = dist(&grads[1], &grads[2]) <= tol * scale && deviations[2].1 <= tol * scale;
    Ok(ConvergenceCheck { deviations, converged })
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
