//! Large-array behaviour: inverse norm moments, the trace-lemma statistic,
//! and the scaled ZF noise gain compared with its claimed limit.

use mwrelay::prelude::*;

fn main() -> Result<()> {
    let (e1, e2) = montecarlo::estimate_inverse_norm_moments(50, 1.0, 200_000, 1, None)?;
    let (c1, c2) = bounds::inverse_norm_moments(50, 1.0)?;
    println!("E 1/||g||^2: {:.6e} ± {:.1e} vs {c1:.6e}", e1.mean, e1.stderr);
    println!("E 1/||g||^4: {:.6e} ± {:.1e} vs {c2:.6e}", e2.mean, e2.stderr);

    let users = 10;
    let beta = LargeScaleProfile::uniform(users);
    let idx = SlotIndexer::new(users)?;
    let limit = 1.0 / bounds::zf_limit_sum(beta.beta(), &idx, 1, 1);
    for m in [64, 256, 1024] {
        let ch = ChannelRealization::draw(m, &beta, 9, 0);
        let stat = bounds::trace_lemma_statistic(&ch, 1, 1)?;
        let cfg = SystemConfig::new(m, users, 1.0, 10.0)?;
        let ng = montecarlo::estimate_scaled_noise_gain(&cfg, &beta, 1, McOptions::new(200, 4))?;
        println!(
            "M = {m:>4}: (1/M)|g_1^H g_2|^2 = {stat:.3}, M * noise gain[1] = {} (claimed limit {limit:.3})",
            ng[0]
        );
    }
    Ok(())
}
