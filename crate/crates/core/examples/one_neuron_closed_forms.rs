//! One-neuron problem: regimes, closed-form integrals, and the explicit
//! projected gradient next to the projected network gradient.

use normflow::gradients::generalized_gradient;
use normflow::one_neuron::{classify, closed_integrals, lyapunov, OneNeuron};
use normflow::Profile;

fn main() -> normflow::Result<()> {
    let problem = OneNeuron::new(Profile::AbsOffset { center: 0.3 })?;
    let (obj, template) = problem.as_network()?;
    println!(
        "f̄ = {:.6}, ‖f − f̄‖ = {:.6}, Lipschitz {:.1}",
        problem.fbar(),
        problem.l2_deviation(),
        problem.lipschitz()
    );

    for phi in [0.3f64, 1.2, 2.5, 3.6, 5.0, 5.9] {
        let theta = [phi.cos(), phi.sin(), 0.8];
        let ev = problem.evaluate(&theta);
        print!("φ = {phi:.1} regime {:<6} risk {:.6}", classify(&theta).name(), ev.risk);
        if let Ok(c) = closed_integrals(&theta) {
            print!(" m {:.5} ∫(a−m)² {:.5}", c.m, c.centered_second_moment);
        }
        let net = generalized_gradient(&obj, &problem.network_params(&template, &theta)?)?;
        let k = (net[0] * theta[0] + net[1] * theta[1]) / (theta[0] * theta[0] + theta[1] * theta[1]);
        let projected = [net[0] - k * theta[0], net[1] - k * theta[1], net[2]];
        let gap = ev.explicit_gradient.iter().zip(&projected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let v = lyapunov(&theta);
        println!(" |𝔊 − P𝒢| {gap:.1e} V_right {:+.4} V_left {:+.4}", v.v_right, v.v_left);
    }
    Ok(())
}
