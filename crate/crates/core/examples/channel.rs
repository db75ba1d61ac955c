//! Draw a large-scale profile from the default cell geometry, save it in the
//! plain-text format, and check the small-scale statistics of one channel.

use mwrelay::prelude::*;

fn main() -> Result<()> {
    let geometry = GeometryModel::default();
    let profile = channel::draw_large_scale(&geometry, 10, 2024)?;
    println!("geometry: {geometry:?}");
    print!("beta (one per line):\n{}", profile.to_text());

    let back = LargeScaleProfile::from_text(&profile.to_text())?;
    assert_eq!(back.beta(), profile.beta());

    let uniform = LargeScaleProfile::uniform(4);
    let ch = ChannelRealization::draw(256, &uniform, 7, 0);
    for k in 1..=4 {
        let energy: f64 = ch.column(k).iter().map(|z| z.norm_sqr()).sum();
        println!("||g_{k}||^2 / M = {:.3}", energy / 256.0);
    }
    println!("10 dB -> {} linear", db_to_linear(10.0));
    Ok(())
}
