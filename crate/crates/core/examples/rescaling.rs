//! Layer-wise rescaling: neuron norms before and after, and the unchanged
//! realization.

use std::sync::Arc;

use normflow::manifold::{psi, rescale_cascade, rescale_full};
use normflow::seeding::stream_rng;
use normflow::{
    Architecture, InputMeasure, Objective, ParamVector, Profile, QuadratureSettings, Smoothing, TargetFunction,
};

fn main() -> normflow::Result<()> {
    let arch = Arc::new(Architecture::new(&[2, 3, 3, 1])?);
    let theta = ParamVector::sample_normal(arch.clone(), &mut stream_rng(5, 0), 2.0);
    let obj = Objective::new(
        InputMeasure::uniform(0.0, 1.0, 2)?,
        TargetFunction::profile(Profile::Constant { value: 0.0 }, 1)?,
        QuadratureSettings::default().with_nodes_per_axis(128),
    )?;

    let stages = [
        ("original", theta.clone()),
        ("after layer 1", rescale_cascade(&theta, 1)?),
        ("after layer 2", rescale_full(&theta)),
    ];
    for (label, t) in &stages {
        let norms: Vec<String> = arch.hidden_keys().map(|k| format!("{:.4}", psi(t, k).unwrap().sqrt())).collect();
        println!("{label:<14} neuron norms [{}]", norms.join(", "));
    }

    let probe = [vec![0.1, 0.9], vec![0.5, 0.5], vec![0.8, 0.2]];
    let before = obj.realize_many(&theta, &probe, Smoothing::Exact)?;
    let after = obj.realize_many(&stages[2].1, &probe, Smoothing::Exact)?;
    for ((x, a), b) in probe.iter().zip(&before).zip(&after) {
        println!("N({:?}) = {:+.12} before, {:+.12} after", x, a[0], b[0]);
    }
    Ok(())
}
