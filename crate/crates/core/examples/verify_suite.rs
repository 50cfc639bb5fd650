//! Runs the full property suite and prints one line per criterion.
//!
//! Usage: `cargo run --release --example verify_suite [seed] [criterion ...]`

use normflow::verify::{Suite, VerifySettings, CRITERIA, DEFAULT_SEED};

fn main() -> normflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(DEFAULT_SEED);
    let mut ids: Vec<u8> = args.filter_map(|a| a.parse().ok()).collect();
    if ids.is_empty() {
        ids = CRITERIA.iter().map(|(id, _)| *id).collect();
    }
    let suite = Suite::new(VerifySettings { seed });
    for id in ids {
        println!("{}", suite.run(id)?.line());
    }
    Ok(())
}
