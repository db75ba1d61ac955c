use mwrelay::prelude::*;

const GOLDEN: &str = include_str!("data/geometry_k10_seed2024.txt");

#[test]
fn default_geometry_profile_is_frozen() {
    let profile = channel::draw_large_scale(&GeometryModel::default(), 10, 2024).unwrap();
    let golden = LargeScaleProfile::from_text(GOLDEN).unwrap();
    assert_eq!(profile.beta(), golden.beta());
}

#[test]
fn profile_text_round_trip_is_exact() {
    let g = GeometryModel {
        shadowing_sigma_db: 3.0,
        ..GeometryModel::default()
    };
    for seed in 0..20 {
        let p = channel::draw_large_scale(&g, 6, seed).unwrap();
        let back = LargeScaleProfile::from_text(&p.to_text()).unwrap();
        assert_eq!(p.beta(), back.beta());
    }
}

#[test]
fn no_shadowing_at_reference_distance_gives_unit_gain() {
    let g = GeometryModel {
        cell_radius: 100.0 + 1e-9,
        exclusion_radius: 100.0,
        shadowing_sigma_db: 0.0,
        ..GeometryModel::default()
    };
    let p = channel::draw_large_scale(&g, 8, 3).unwrap();
    assert!(p.beta().iter().all(|b| (b - 1.0).abs() < 1e-9));
}

#[test]
fn small_scale_draws_do_not_depend_on_call_order() {
    let profile = LargeScaleProfile::uniform(4);
    let late = ChannelRealization::draw(8, &profile, 5, 77);
    for t in 0..77 {
        let _ = ChannelRealization::draw(8, &profile, 5, t);
    }
    assert_eq!(late.matrix(), ChannelRealization::draw(8, &profile, 5, 77).matrix());
}
