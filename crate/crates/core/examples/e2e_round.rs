//! Symbol-level rounds: noiseless recovery through SIC and ZF, then QPSK
//! symbol-error rates with noise.

use mwrelay::prelude::*;

fn main() -> Result<()> {
    for users in [2, 5, 8] {
        let cfg = SystemConfig::new(32, users, 1.0, 10.0)?;
        let r = e2e::run_round_noiseless(&cfg, &LargeScaleProfile::uniform(users), 42)?;
        println!(
            "K = {users}: slots {}, ZF used {}, all recovered {}, max deviation {:.2e}",
            r.slots_used,
            r.zf_invoked,
            r.all_recovered(),
            r.max_deviation
        );
    }

    let users = 6;
    let beta = LargeScaleProfile::uniform(users);
    for m in [16, 32, 64] {
        let cfg = SystemConfig::new(m, users, 1.0, 1.0)?;
        let ser = e2e::run_round_noisy(&cfg, &beta, cfg.relay_power, 1000, 3)?;
        println!("M = {m:>2}: mean SER {:.4}", ser.mean());
    }
    Ok(())
}
