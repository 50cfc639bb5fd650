//! Unit-norm neuron constraints and the maps that respect them.
//!
//! The constraint set is `{θ : ψ^k_i(θ) = 1 for all (k,i) ∈ Λ}` with
//! `ψ^k_i(θ) = ‖V^k_i‖²`. Each `∇ψ^k_i` lives on the coordinates of its own
//! sub-vector, so the normals are pairwise orthogonal and projecting them out
//! one by one is an orthogonal projection.

use crate::error::{Error, Result};
use crate::params::{NeuronKey, ParamVector};

/// `ρ(x) = x/‖x‖`, with `ρ(0) = 0`.
pub fn rho(x: &[f64]) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d = if n == 0.0 { 1.0 } else { n };
    x.iter().map(|v| v / d).collect()
}

/// `ψ^k_i(θ) = ‖V^k_i‖²`, for any neuron including the output layer.
pub fn psi(theta: &ParamVector, key: NeuronKey) -> Result<f64> {
    theta.arch().validate_key(key)?;
    Ok(theta.subvector_norm_sq(key))
}

/// Sparse `∇ψ^k_i(θ)`: 0-based positions of `V^k_i` paired with `2V^k_i`.
pub fn grad_psi(theta: &ParamVector, key: NeuronKey) -> Result<Vec<(usize, f64)>> {
    theta.arch().validate_key(key)?;
    let v = theta.as_slice();
    Ok(theta.arch().subvector_positions(key).map(|p| (p, 2.0 * v[p])).collect())
}

/// Dense form of [`grad_psi`].
pub fn grad_psi_dense(theta: &ParamVector, key: NeuronKey) -> Result<Vec<f64>> {
    let mut out = vec![0.0; theta.len()];
    for (p, g) in grad_psi(theta, key)? {
        out[p] = g;
    }
    Ok(out)
}

/// `max_{(k,i) ∈ Λ} |ψ^k_i(θ) − 1|`.
pub fn psi_max_dev(theta: &ParamVector) -> f64 {
    theta.arch().hidden_keys().map(|key| (theta.subvector_norm_sq(key) - 1.0).abs()).fold(0.0, f64::max)
}

fn check_len(theta: &ParamVector, g: &[f64]) -> Result<()> {
    if g.len() != theta.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), got: g.len(), context: "gradient" });
    }
    Ok(())
}

/// `G = g − Σ_{Λ} ⟨ρ(∇ψ^k_i), g⟩ ρ(∇ψ^k_i)`.
pub fn project_gradient(theta: &ParamVector, raw: &[f64]) -> Result<Vec<f64>> {
    check_len(theta, raw)?;
    let arch = theta.arch();
    let v = theta.as_slice();
    let mut out = raw.to_vec();
    for key in arch.hidden_keys() {
        let norm = theta.subvector_norm_sq(key).sqrt();
        if norm == 0.0 {
            continue;
        }
        let dot: f64 = arch.subvector_positions(key).map(|p| v[p] * raw[p]).sum::<f64>() / norm;
        for p in arch.subvector_positions(key) {
            out[p] -= dot * v[p] / norm;
        }
    }
    Ok(out)
}

/// `g − Σ_{Λ} ‖∇ψ‖⁻² ⟨g, ∇ψ⟩ ∇ψ`, skipping vanishing normals. Agrees with
/// [`project_gradient`] for every `θ`, since both remove the component along
/// the same direction.
pub fn project_gradient_normal_form(theta: &ParamVector, raw: &[f64]) -> Result<Vec<f64>> {
    check_len(theta, raw)?;
    let mut out = raw.to_vec();
    for key in theta.arch().hidden_keys() {
        let n = grad_psi(theta, key)?;
        let nn: f64 = n.iter().map(|(_, g)| g * g).sum();
        if nn == 0.0 {
            continue;
        }
        let c = n.iter().map(|&(p, g)| g * raw[p]).sum::<f64>() / nn;
        for (p, g) in n {
            out[p] -= c * g;
        }
    }
    Ok(out)
}

/// `φ(θ)`: every hidden sub-vector replaced by `ρ(V)`.
pub fn renormalize_phi(theta: &ParamVector) -> ParamVector {
    let mut out = theta.clone();
    let arch = theta.arch_arc().clone();
    let vals = out.as_mut_slice();
    for key in arch.hidden_keys() {
        let n = theta.subvector_norm_sq(key).sqrt();
        if n == 0.0 {
            continue;
        }
        for p in arch.subvector_positions(key) {
            vals[p] /= n;
        }
    }
    out
}

/// One cascade step at layer `k`: normalize layer `k` and scale incoming
/// weight `j` of layer `k+1` by the old `‖V^k_j‖`.
pub fn rescale_layer(theta: &ParamVector, k: usize) -> Result<ParamVector> {
    let arch = theta.arch_arc().clone();
    let depth = arch.depth();
    if k == 0 || k >= depth {
        return Err(Error::IndexOutOfRange(format!("rescaling layer {k} not in 1..{depth}")));
    }
    let width = arch.width(k);
    let norms: Vec<f64> = (1..=width).map(|i| theta.subvector_norm_sq(NeuronKey::new(k, i)).sqrt()).collect();
    let mut out = theta.clone();
    let vals = out.as_mut_slice();
    for (i, &n) in norms.iter().enumerate() {
        if n == 0.0 {
            continue;
        }
        for p in arch.subvector_positions(NeuronKey::new(k, i + 1)) {
            vals[p] /= n;
        }
    }
    for i in 0..arch.width(k + 1) {
        for (j, &n) in norms.iter().enumerate() {
            vals[arch.w_pos(k + 1, i, j)] *= n;
        }
    }
    Ok(out)
}

/// `Ψ_k(θ)`: the steps at layers `1, …, k` applied in order. `Ψ_0` is the
/// identity.
pub fn rescale_cascade(theta: &ParamVector, k: usize) -> Result<ParamVector> {
    let depth = theta.arch().depth();
    if k >= depth {
        return Err(Error::IndexOutOfRange(format!("cascade depth {k} not in 0..{depth}")));
    }
    let mut out = theta.clone();
    for layer in 1..=k {
        out = rescale_layer(&out, layer)?;
    }
    Ok(out)
}

/// `Ψ_{L−1}(θ)`.
pub fn rescale_full(theta: &ParamVector) -> ParamVector {
    let depth = theta.arch().depth();
    rescale_cascade(theta, depth - 1).expect("depth ≥ 2")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Architecture;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn theta(dims: &[usize], v: &[f64]) -> ParamVector {
        ParamVector::new(Arc::new(Architecture::new(dims).unwrap()), v.to_vec()).unwrap()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn psi_and_gradient() {
        let th = theta(&[1, 1, 1], &[3.0, 4.0, 2.0, 5.0]);
        let key = NeuronKey::new(1, 1);
        assert_eq!(psi(&th, key).unwrap(), 25.0);
        assert_eq!(grad_psi(&th, key).unwrap(), vec![(0, 6.0), (1, 8.0)]);
        let z = theta(&[1, 1, 1], &[0.0, 0.0, 2.0, 5.0]);
        assert_eq!(psi(&z, key).unwrap(), 0.0);
        assert_eq!(grad_psi_dense(&z, key).unwrap(), vec![0.0; 4]);
        assert_eq!(psi(&th, NeuronKey::new(2, 1)).unwrap(), 29.0);
        assert!(psi(&th, NeuronKey::new(3, 1)).is_err());
    }

    #[test]
    fn rho_values() {
        assert_eq!(rho(&[3.0, 4.0]), vec![0.6, 0.8]);
        assert_eq!(rho(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(rho(&[0.0, 1.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn projection_examples() {
        let th = theta(&[1, 2, 1], &[0.3, -1.2, 0.7, 0.4, 1.5, 2.0, -0.3]);
        let key = NeuronKey::new(1, 2);
        let g = grad_psi_dense(&th, key).unwrap();
        let pg = project_gradient(&th, &g).unwrap();
        for p in th.arch().subvector_positions(key) {
            assert_abs_diff_eq!(pg[p], 0.0, epsilon = 1e-15);
        }
        let out_only = vec![0.0, 0.0, 0.0, 0.0, 1.0, -2.0, 3.0];
        assert_eq!(project_gradient(&th, &out_only).unwrap(), out_only);
        assert!(project_gradient(&th, &[1.0]).is_err());
    }

    #[test]
    fn phi_examples() {
        let th = theta(&[1, 1, 1], &[3.0, 4.0, 2.0, 5.0]);
        assert_eq!(renormalize_phi(&th).as_slice(), &[0.6, 0.8, 2.0, 5.0]);
        let unit = theta(&[1, 1, 1], &[0.6, 0.8, 2.0, 5.0]);
        for (a, b) in renormalize_phi(&unit).as_slice().iter().zip(unit.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let z = theta(&[1, 2, 1], &[0.0, 3.0, 0.0, 4.0, 1.0, 1.0, 1.0]);
        assert_eq!(renormalize_phi(&z).as_slice(), &[0.0, 0.6, 0.0, 0.8, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn cascade_examples() {
        let th = theta(&[1, 1, 1], &[3.0, 4.0, 2.0, 5.0]);
        assert_eq!(rescale_cascade(&th, 1).unwrap().as_slice(), &[0.6, 0.8, 10.0, 5.0]);
        assert_eq!(rescale_cascade(&th, 0).unwrap().as_slice(), th.as_slice());
        let unit = theta(&[1, 1, 1], &[0.6, 0.8, 2.0, 5.0]);
        for (a, b) in rescale_full(&unit).as_slice().iter().zip(unit.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        // dead neuron 1 kills its outgoing weight
        let z = theta(&[1, 2, 1], &[0.0, 3.0, 0.0, 4.0, 7.0, 2.0, 1.0]);
        assert_eq!(rescale_full(&z).as_slice(), &[0.0, 0.6, 0.0, 0.8, 0.0, 10.0, 1.0]);
        assert!(rescale_layer(&th, 2).is_err());
        assert!(rescale_cascade(&th, 2).is_err());
    }

    #[test]
    fn cascade_unit_norms_deep() {
        let arch = Arc::new(Architecture::new(&[2, 4, 3, 2]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let th = rescale_full(&ParamVector::sample_normal(arch.clone(), &mut rng, 2.0));
            assert!(psi_max_dev(&th) <= 1e-12);
        }
    }

    fn arb_theta() -> impl Strategy<Value = (ParamVector, Vec<f64>, Vec<f64>)> {
        prop_oneof![Just(vec![1, 1, 1]), Just(vec![1, 3, 1]), Just(vec![2, 3, 2, 1])].prop_flat_map(|dims| {
            let arch = Arc::new(Architecture::new(&dims).unwrap());
            let d = arch.param_count();
            (
                prop::collection::vec(-3.0..3.0f64, d),
                prop::collection::vec(-3.0..3.0f64, d),
                prop::collection::vec(-3.0..3.0f64, d),
            )
                .prop_map(move |(t, a, b)| (ParamVector::new(arch.clone(), t).unwrap(), a, b))
        })
    }

    proptest! {
        #[test]
        fn projection_is_orthogonal_projector((th, a, b) in arb_theta()) {
            let pa = project_gradient(&th, &a).unwrap();
            let pb = project_gradient(&th, &b).unwrap();
            let ppa = project_gradient(&th, &pa).unwrap();
            for (x, y) in pa.iter().zip(&ppa) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            prop_assert!((dot(&pa, &b) - dot(&a, &pb)).abs() <= 1e-10);
            prop_assert!(dot(&pa, &pa).sqrt() <= dot(&a, &a).sqrt() + 1e-12);
            let alt = project_gradient_normal_form(&th, &a).unwrap();
            for (x, y) in pa.iter().zip(&alt) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn phi_idempotent((th, _a, _b) in arb_theta()) {
            let once = renormalize_phi(&th);
            let twice = renormalize_phi(&once);
            for (x, y) in once.as_slice().iter().zip(twice.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-15);
            }
        }

        #[test]
        fn normals_pairwise_orthogonal((th, _a, _b) in arb_theta()) {
            let keys: Vec<_> = th.arch().hidden_keys().collect();
            for (i, &k1) in keys.iter().enumerate() {
                for &k2 in &keys[i + 1..] {
                    let g1 = grad_psi_dense(&th, k1).unwrap();
                    let g2 = grad_psi_dense(&th, k2).unwrap();
                    prop_assert_eq!(dot(&g1, &g2), 0.0);
                }
            }
        }

        #[test]
        fn projected_vectors_are_tangent((th, a, _b) in arb_theta()) {
            let th = rescale_full(&th);
            let pa = project_gradient(&th, &a).unwrap();
            for key in th.arch().hidden_keys() {
                let n = grad_psi_dense(&th, key).unwrap();
                prop_assert!(dot(&pa, &n).abs() <= 1e-12);
            }
        }
    }
}
