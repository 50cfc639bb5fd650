//! Test-side oracles written independently of the library internals.
#![allow(dead_code)]

/// Offset of layer `k`'s weight block in the flat parameter vector.
pub fn layer_offset(dims: &[usize], k: usize) -> usize {
    (1..k).map(|j| dims[j] * dims[j - 1] + dims[j]).sum()
}

/// Flat index of `W^k[i][j]`.
pub fn w_index(dims: &[usize], k: usize, i: usize, j: usize) -> usize {
    layer_offset(dims, k) + i * dims[k - 1] + j
}

/// Flat index of `b^k[i]`.
pub fn b_index(dims: &[usize], k: usize, i: usize) -> usize {
    layer_offset(dims, k) + dims[k] * dims[k - 1] + i
}

/// Flat indices of neuron `(k, i)`'s incoming weights and bias.
pub fn neuron_indices(dims: &[usize], k: usize, i: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dims[k - 1]).map(|j| w_index(dims, k, i, j)).collect();
    idx.push(b_index(dims, k, i));
    idx
}

pub fn neuron_norm(theta: &[f64], dims: &[usize], k: usize, i: usize) -> f64 {
    neuron_indices(dims, k, i).iter().map(|&p| theta[p] * theta[p]).sum::<f64>().sqrt()
}

/// `max |‖V^k_i‖² − 1|` over hidden neurons.
pub fn psi_deviation(theta: &[f64], dims: &[usize]) -> f64 {
    let mut worst = 0.0f64;
    for k in 1..dims.len() - 1 {
        for i in 0..dims[k] {
            worst = worst.max((neuron_norm(theta, dims, k, i).powi(2) - 1.0).abs());
        }
    }
    worst
}

/// Layer-by-layer balancing: normalize every hidden neuron and push its
/// norm into the next layer's incoming weights.
pub fn balance(theta: &[f64], dims: &[usize]) -> Vec<f64> {
    let mut t = theta.to_vec();
    for k in 1..dims.len() - 1 {
        for i in 0..dims[k] {
            let n = neuron_norm(&t, dims, k, i);
            if n == 0.0 {
                continue;
            }
            for p in neuron_indices(dims, k, i) {
                t[p] /= n;
            }
            for j in 0..dims[k + 1] {
                t[w_index(dims, k + 1, j, i)] *= n;
            }
        }
    }
    t
}

/// Three-point Gauss-Legendre rule on `[lo, hi]`.
pub fn gl3<F: Fn(f64) -> f64>(lo: f64, hi: f64, f: F) -> f64 {
    const X: f64 = 0.774_596_669_241_483_4; // sqrt(3/5)
    let (c, r) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    r * (5.0 / 9.0 * f(c - r * X) + 8.0 / 9.0 * f(c) + 5.0 / 9.0 * f(c + r * X))
}

/// Simpson's rule on one panel; exact for cubics.
pub fn simpson<F: Fn(f64) -> f64>(lo: f64, hi: f64, f: F) -> f64 {
    (hi - lo) / 6.0 * (f(lo) + 4.0 * f((lo + hi) / 2.0) + f(hi))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_fd<F: FnMut(&[f64]) -> f64>(x: &[f64], h: f64, mut f: F) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|j| {
            p[j] = x[j] + h;
            let up = f(&p);
            p[j] = x[j] - h;
            let down = f(&p);
            p[j] = x[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `E = θ₃² + ln(1 − θ₁²)`.
pub fn e_full(t: &[f64]) -> f64 {
    t[2] * t[2] + (1.0 - t[0] * t[0]).ln()
}

/// True when `θ₁s + θ₂` has no sign change inside `(0, 1)`.
pub fn no_interior_kink(t: &[f64]) -> bool {
    t[0] == 0.0 || {
        let q = -t[1] / t[0];
        !(q > 0.0 && q < 1.0)
    }
}
