//! Normalized gradient flow for a shallow network, with and without the
//! per-step retraction.
//!
//! Usage: `cargo run --release --example normalized_flow [seed] [t_end]`

use std::sync::Arc;

use normflow::dynamics::{integrate_flow, AnnProblem, FlowConfig, Integrator};
use normflow::seeding::stream_rng;
use normflow::{Architecture, InputMeasure, Objective, ParamVector, Profile, QuadratureSettings, TargetFunction};

fn main() -> normflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);
    let t_end: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(5.0);

    let arch = Arc::new(Architecture::new(&[1, 8, 1])?);
    let obj = Objective::new(
        InputMeasure::unit_interval(),
        TargetFunction::profile(Profile::AbsOffset { center: 0.3 }, 1)?,
        QuadratureSettings::default(),
    )?;
    let problem = AnnProblem::new(obj, ParamVector::zeros(arch.clone()))?;
    let xi = ParamVector::sample_normal(arch, &mut stream_rng(seed, 0), 1.0).into_values();

    for (label, integrator, reproject) in [
        ("rk4 + retraction", Integrator::Rk4, true),
        ("rk4, free", Integrator::Rk4, false),
        ("euler, free", Integrator::Euler, false),
    ] {
        let cfg = FlowConfig { t_end, step: 1e-3, integrator, reproject, ..FlowConfig::default() };
        let rec = integrate_flow(&problem, &xi, &cfg)?;
        println!(
            "{label:<17} {}: risk {:.6e} -> {:.6e}, max risk rise {:+.1e}, max ψ deviation {:.1e}",
            rec.termination,
            rec.risk[0],
            rec.risk[rec.len() - 1],
            rec.max_risk_increase(),
            rec.max_psi_dev()
        );
    }
    Ok(())
}
