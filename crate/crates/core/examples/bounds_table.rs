//! Closed-form bounds and large-array limits at the default operating point.

use mwrelay::prelude::*;

fn main() -> Result<()> {
    let users = 10;
    let beta = LargeScaleProfile::uniform(users);
    for m in [50, 100, 300] {
        let cfg = SystemConfig::from_db(m, users, 0.0, 10.0)?;
        let r = BoundReport::new(beta.beta(), cfg.user_power, cfg.relay_power, m)?;
        println!("M = {m}");
        println!("  uplink bound        {:.4}", r.uplink[0]);
        println!("  conventional bound  {:.4}", r.conventional[0][0]);
        let row: Vec<String> = r.proposed_row(1).iter().map(|x| format!("{x:.4}")).collect();
        println!("  proposed slots      {}", row.join(" "));
        for scheme in [Scheme::Conventional, Scheme::Proposed] {
            let s = montecarlo::analytic_sum_se(&cfg, &beta, scheme)?;
            println!("  {scheme:<13} sum    {:.3} (pre-log {:.4})", s.sum, s.pre_log);
        }
    }
    let (m1, m2) = bounds::inverse_norm_moments(50, 1.0)?;
    println!("E 1/||g||^2 = {m1:.6}, E 1/||g||^4 = {m2:.8} at M = 50");
    Ok(())
}
