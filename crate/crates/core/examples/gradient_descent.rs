//! Normalized gradient descent with constant and rescaled step factors.
//!
//! Usage: `cargo run --release --example gradient_descent [steps]`

use std::sync::Arc;

use normflow::dynamics::{gd_run, AnnProblem, GammaSchedule};
use normflow::seeding::stream_rng;
use normflow::{Architecture, InputMeasure, Objective, ParamVector, Profile, QuadratureSettings, TargetFunction};

fn main() -> normflow::Result<()> {
    let steps: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let arch = Arc::new(Architecture::new(&[1, 6, 1])?);
    let obj = Objective::new(
        InputMeasure::unit_interval(),
        TargetFunction::profile(Profile::Polynomial { coeffs: vec![0.0, 1.0, -1.0] }, 1)?,
        QuadratureSettings::default(),
    )?;
    let problem = AnnProblem::new(obj, ParamVector::zeros(arch.clone()))?;
    let xi = ParamVector::sample_normal(arch, &mut stream_rng(1, 0), 1.0).into_values();

    let schedules = [
        ("γ = 0.05", GammaSchedule::Constant(0.05)),
        ("γ = 0.2", GammaSchedule::Constant(0.2)),
        ("γ decaying", GammaSchedule::List((0..steps).map(|n| 0.5 / (1.0 + n as f64).sqrt()).collect())),
    ];
    for (label, gamma) in schedules {
        let rec = gd_run(&problem, &xi, steps, &gamma)?;
        let checkpoints: Vec<String> = [0, steps / 10, steps / 2, rec.len() - 1]
            .iter()
            .map(|&n| format!("{:.4e}", rec.risk[n.min(rec.len() - 1)]))
            .collect();
        println!("{label:<11} {}: risk {}", rec.termination, checkpoints.join(" -> "));
    }
    Ok(())
}
