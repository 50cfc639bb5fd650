//! Seeded boundedness batch for the one-neuron flow.
//!
//! Usage: `cargo run --release --example one_neuron_boundedness [count] [t_end]`

use normflow::one_neuron::{boundedness_batch, BoundednessConfig, MonitorKind, OneNeuron};
use normflow::Profile;

fn main() -> normflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let t_end: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(100.0);
    let mut cfg = BoundednessConfig::default();
    cfg.flow.t_end = t_end;

    let targets = [
        ("s", Profile::Affine { slope: 1.0, intercept: 0.0 }),
        ("|s-0.3|", Profile::AbsOffset { center: 0.3 }),
        ("1-s", Profile::Affine { slope: -1.0, intercept: 1.0 }),
    ];
    for (name, profile) in targets {
        let problem = OneNeuron::new(profile)?;
        let reports = boundedness_batch(&problem, 2024, count, &cfg)?;
        let blow_ups = reports.iter().filter(|r| r.termination.is_blow_up()).count();
        let worst_tail = reports.iter().map(|r| r.tail_increase).fold(0.0, f64::max);
        let max_sup = reports.iter().map(|r| r.sup_norm).fold(0.0, f64::max);
        println!(
            "f = {name}: {count} runs, blow-ups {blow_ups}, max sup {max_sup:.4}, worst tail growth {worst_tail:.2e}"
        );
        for kind in MonitorKind::MONOTONE.into_iter().chain([MonitorKind::Conservation]) {
            let (checked, violations, worst) = reports
                .iter()
                .filter_map(|r| r.tally(kind))
                .fold((0, 0, f64::NEG_INFINITY), |(c, v, w), t| (c + t.checked, v + t.violations, w.max(t.worst)));
            println!("  {:<16} checked {checked:>9} violations {violations:>6} worst {worst:+.3e}", kind.name());
        }
        let bound_violations: usize = reports.iter().map(|r| r.bound_violations).sum();
        let bound_checks: usize = reports.iter().map(|r| r.bound_checks).sum();
        println!("  theta3 bound     checked {bound_checks:>9} violations {bound_violations:>6}");
    }
    Ok(())
}
