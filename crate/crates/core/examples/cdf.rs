//! Distribution of the sum SE over random user placements and its
//! 5th percentile.

use mwrelay::prelude::*;

fn main() -> Result<()> {
    let source = ProfileSource::Geometry(GeometryModel::default());
    for users in [5, 7, 10] {
        let cfg = SystemConfig::from_db(100, users, 0.0, 10.0)?;
        for scheme in [Scheme::Conventional, Scheme::Proposed] {
            let r = montecarlo::cdf_experiment(&cfg, &source, scheme, 300, 200, 11, None)?;
            let median = montecarlo::quantile_sorted(&r.samples, 0.5);
            println!("K = {users:>2} {scheme:<12}: p5 {:.3}, median {median:.3}", r.p5);
        }
    }
    Ok(())
}
