//! Simulated and closed-form sum SE versus relay antenna count.
//!
//!     cargo run --release --example sweep_m -- 2000

use mwrelay::prelude::*;

fn main() -> Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let users = 10;
    let beta = LargeScaleProfile::uniform(users);
    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>10}",
        "M", "conv MC", "conv CF", "prop MC", "prop CF"
    );
    for m in (50..=500).step_by(50) {
        let cfg = SystemConfig::from_db(m, users, 0.0, 10.0)?;
        let mc = montecarlo::estimate_rates(&cfg, &beta, McOptions::new(trials, 1))?;
        let mut line = format!("{m:>5}");
        for scheme in [Scheme::Conventional, Scheme::Proposed] {
            let sim = mc.sum_se(scheme)?.sum;
            let cf = montecarlo::analytic_sum_se(&cfg, &beta, scheme)?.sum;
            line += &format!(" {sim:>10.3} {cf:>10.3}");
        }
        println!("{line}");
    }
    Ok(())
}
