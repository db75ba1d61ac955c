//! Instantaneous rates on one channel draw: uplink MRC, both broadcast
//! schemes and the zero-forcing outputs of the proposed scheme.

use mwrelay::prelude::*;

fn main() -> Result<()> {
    let cfg = SystemConfig::from_db(64, 6, 0.0, 10.0)?;
    let profile = LargeScaleProfile::uniform(cfg.users);
    let ch = ChannelRealization::draw(cfg.antennas, &profile, 3, 0);
    let gram = Gram::new(&ch);
    let idx = SlotIndexer::new(cfg.users)?;
    let beta = profile.beta();

    for k in 1..=cfg.users {
        let ul = rates::instantaneous_se(rates::uplink_sinr(&gram, cfg.user_power, k)?);
        let mut conv = Vec::new();
        let mut prop = Vec::new();
        for t in 1..cfg.users {
            conv.push(rates::instantaneous_se(rates::conventional_dl_sinr(
                &gram,
                beta,
                cfg.relay_power,
                k,
                t,
            )?));
        }
        for t in 1..=idx.sic_slots() {
            prop.push(rates::instantaneous_se(rates::proposed_dl_sinr(
                &gram,
                beta,
                cfg.relay_power,
                k,
                t,
            )?));
        }
        let stage = rates::build_zf_stage(&gram, k, &idx)?;
        for n in 1..=stage.unknowns() {
            prop.push(rates::instantaneous_se(rates::zf_sinr(
                &stage,
                beta,
                cfg.relay_power,
                cfg.antennas,
                n,
            )?));
        }
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" ");
        println!("user {k}: UL {ul:.2} | conv [{}] | prop [{}]", fmt(&conv), fmt(&prop));
        println!(
            "        M * noise gain {:?}",
            stage.noise_gain().iter().map(|g| g * 64.0).collect::<Vec<_>>()
        );
    }
    Ok(())
}
