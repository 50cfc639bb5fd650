//! Smoothed-ReLU gradients against central differences, and their approach
//! to the generalized gradient as the smoothing parameter grows.

use std::sync::Arc;

use normflow::gradients::{fd_gradient, generalized_gradient, gradient_convergence, risk_and_gradient};
use normflow::seeding::stream_rng;
use normflow::{
    Architecture, InputMeasure, Objective, ParamVector, Profile, QuadratureSettings, Smoothing, TargetFunction,
};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn main() -> normflow::Result<()> {
    let arch = Arc::new(Architecture::new(&[1, 4, 1])?);
    let obj = Objective::new(
        InputMeasure::unit_interval(),
        TargetFunction::profile(Profile::AbsOffset { center: 0.6 }, 1)?,
        QuadratureSettings::default(),
    )?;
    let mut rng = stream_rng(11, 0);
    for _ in 0..3 {
        let theta = ParamVector::sample_normal(arch.clone(), &mut rng, 1.0);
        for r in [10, 100, 1000] {
            let s = Smoothing::Smoothed(r);
            let an = risk_and_gradient(&obj, &theta, s)?.gradient;
            let fd = fd_gradient(&obj, &theta, s, 1e-5)?;
            println!("r = {r:>4}: max |analytic − fd| = {:.2e}", max_diff(&an, &fd));
        }
        let exact = generalized_gradient(&obj, &theta)?;
        let check = gradient_convergence(&obj, &theta, 1e-3)?;
        let devs: Vec<String> = check.deviations.iter().map(|(r, d)| format!("r={r}: {d:.2e}")).collect();
        println!(
            "‖𝒢‖ = {:.4}; distance to 𝒢 {}; converged {}\n",
            exact.iter().map(|x| x * x).sum::<f64>().sqrt(),
            devs.join(", "),
            check.converged
        );
    }
    Ok(())
}
