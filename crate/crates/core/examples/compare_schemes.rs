//! Ratio of proposed to conventional sum SE for several user counts.

use mwrelay::prelude::*;

fn main() -> Result<()> {
    for users in [4, 6, 10, 14] {
        let cfg = SystemConfig::from_db(100, users, 0.0, 10.0)?;
        let beta = LargeScaleProfile::uniform(users);
        let mc = montecarlo::estimate_rates(&cfg, &beta, McOptions::new(2000, 5))?;
        let conv = mc.sum_se(Scheme::Conventional)?;
        let prop = mc.sum_se(Scheme::Proposed)?;
        println!(
            "K = {users:>2}: conventional {:.2}, proposed {:.2}, ratio {:.3} (pre-log ratio {:.3})",
            conv.sum,
            prop.sum,
            prop.sum / conv.sum,
            prop.pre_log / conv.pre_log
        );
    }
    Ok(())
}
