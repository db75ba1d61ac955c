use mwrelay::linalg::HermitianFactor;
use mwrelay::prelude::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn stage_for(m: usize, users: usize, seed: u64, k: usize) -> (ChannelRealization, ZfStage) {
    let profile = LargeScaleProfile::uniform(users);
    let ch = ChannelRealization::draw(m, &profile, seed, 0);
    let idx = SlotIndexer::new(users).unwrap();
    let stage = rates::build_zf_stage(&Gram::new(&ch), k, &idx).unwrap();
    (ch, stage)
}

#[test]
fn noise_gain_matches_dense_inverse() {
    for seed in 0..20 {
        let (_, stage) = stage_for(8, 5, seed, 1 + (seed as usize % 5));
        let inv = stage.gram().clone().try_inverse().expect("invertible");
        for (n, g) in stage.noise_gain().iter().enumerate() {
            assert!(rel(*g, inv[(n, n)].re) < 1e-10, "seed {seed}: {g} vs {}", inv[(n, n)]);
        }
    }
}

#[test]
fn gram_is_independent_of_row_order() {
    let (_, stage) = stage_for(12, 9, 4, 3);
    let a = stage.matrix();
    let rows = a.nrows();
    let reversed = DMatrix::from_fn(rows, a.ncols(), |r, c| a[(rows - 1 - r, c)]);
    let g2 = reversed.adjoint() * &reversed;
    let scale = stage.gram().camax();
    assert!((stage.gram() - g2).camax() <= 1e-12 * scale);
}

#[test]
fn matrix_entries_follow_offsets() {
    let users = 9;
    let (ch, stage) = stage_for(12, users, 5, 4);
    let idx = SlotIndexer::new(users).unwrap();
    let gram = Gram::new(&ch);
    let a = stage.matrix();
    for m in 1..=idx.sic_slots() {
        for n in 1..=idx.zf_unknowns() {
            let off = idx.zf_coefficient_offset(m, n).unwrap();
            let partner = idx.partner(4, off as i64);
            assert_eq!(a[(m - 1, n - 1)], gram.inner(4, partner));
        }
    }
}

#[test]
fn combiner_rows_carry_the_noise_gain() {
    for seed in 0..10 {
        let (_, stage) = stage_for(16, 10, seed, 2);
        let z = stage.combiner();
        for (n, g) in stage.noise_gain().iter().enumerate() {
            let row: f64 = z.row(n).iter().map(|c| c.norm_sqr()).sum();
            assert!(rel(row, *g) < 1e-10);
        }
        let prod = &z * stage.matrix();
        let eye = DMatrix::<Complex64>::identity(prod.nrows(), prod.ncols());
        assert!((prod - eye).camax() <= 1e-9);
    }
}

#[test]
fn k3_noise_gain_is_one_over_cross_gain() {
    let (ch, stage) = stage_for(6, 3, 8, 2);
    let gram = Gram::new(&ch);
    let partner = partner_index(2, 1, 3);
    assert!(rel(stage.noise_gain()[0], 1.0 / gram.cross_gain(2, partner)) < 1e-12);
}

#[test]
fn homogeneity_under_channel_scaling() {
    let users = 7;
    let profile = LargeScaleProfile::uniform(users);
    let idx = SlotIndexer::new(users).unwrap();
    let ch = ChannelRealization::draw(20, &profile, 2, 0);
    let c = Complex64::new(0.6, -1.3);
    let c4 = c.norm_sqr().powi(2);
    let scaled = ch.scaled(c);
    for k in 1..=users {
        let s1 = rates::build_zf_stage(&Gram::new(&ch), k, &idx).unwrap();
        let s2 = rates::build_zf_stage(&Gram::new(&scaled), k, &idx).unwrap();
        for n in 1..=s1.unknowns() {
            assert!(rel(s2.noise_gain()[n - 1], s1.noise_gain()[n - 1] / c4) < 1e-10);
            let r1 = rates::zf_sinr(&s1, profile.beta(), 10.0, 20, n).unwrap();
            let r2 = rates::zf_sinr(&s2, profile.beta(), 10.0, 20, n).unwrap();
            assert!(rel(r2, r1 * c4) < 1e-10);
        }
    }
}

#[test]
fn conventional_sinr_matches_brute_force() {
    let users = 3;
    let beta = [0.5, 1.0, 2.0];
    let profile = LargeScaleProfile::new(beta.to_vec(), channel::Provenance::Loaded).unwrap();
    let ch = ChannelRealization::draw(4, &profile, 17, 0);
    let gram = Gram::new(&ch);
    let c = 10.0 / (4.0 * 3.5);
    for k in 1..=users {
        for t in 1..users {
            // beam i carries x_{j(i,t)}; drop the desired symbol and the user's own
            let desired = partner_index(k as i64, t as i64, users);
            let mut interference = 0.0;
            for i in 1..=users {
                let carried = partner_index(i as i64, t as i64, users);
                if carried != desired && carried != k {
                    interference += gram.cross_gain(k, i);
                }
            }
            let expected = c * gram.norm_sqr(k).powi(2) / (c * interference + 1.0);
            let got = rates::conventional_dl_sinr(&gram, &beta, 10.0, k, t).unwrap();
            assert!(rel(got, expected) < 1e-12);
        }
        // t = t' = 1 for K = 3
        let got = rates::proposed_dl_sinr(&gram, &beta, 10.0, k, 1).unwrap();
        let conv = rates::conventional_dl_sinr(&gram, &beta, 10.0, k, 1).unwrap();
        assert_eq!(got, conv);
    }
}

#[test]
fn precoder_power_is_relay_power_on_average() {
    let beta = vec![0.2, 1.0, 3.0, 0.7, 1.5];
    let profile = LargeScaleProfile::new(beta.clone(), channel::Provenance::Loaded).unwrap();
    let symbols: Vec<Complex64> = (0..5).map(|i| Complex64::from_polar(1.0, 0.7 * i as f64)).collect();
    let p_r = 10.0;
    let trials = 10_000;
    let mut total = 0.0;
    for trial in 0..trials {
        let ch = ChannelRealization::draw(16, &profile, 31, trial);
        let s = rates::relay_precode(&ch, &beta, p_r, &rates::slot_assignment(&symbols, 2)).unwrap();
        total += s.norm_squared();
    }
    let mean = total / trials as f64;
    assert!(rel(mean, p_r) < 0.02, "mean power {mean}");
}

#[test]
fn hermitian_factor_agrees_with_nalgebra_cholesky() {
    let (_, stage) = stage_for(20, 12, 3, 6);
    let ours = HermitianFactor::new(stage.gram()).unwrap();
    let theirs = stage.gram().clone().cholesky().unwrap().inverse();
    for (n, d) in ours.inverse_diagonal().iter().enumerate() {
        assert!(rel(*d, theirs[(n, n)].re) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sic_never_loses_to_conventional(seed in any::<u64>(), users in 3usize..12, extra in 0usize..20) {
        let m = users + extra + 1;
        let profile = LargeScaleProfile::uniform(users);
        let ch = ChannelRealization::draw(m, &profile, seed, 0);
        let gram = Gram::new(&ch);
        let idx = SlotIndexer::new(users).unwrap();
        for k in 1..=users {
            let mut prev = 0.0;
            for t in 1..=idx.sic_slots() {
                let p = rates::proposed_dl_sinr(&gram, profile.beta(), 10.0, k, t).unwrap();
                let c = rates::conventional_dl_sinr(&gram, profile.beta(), 10.0, k, t).unwrap();
                prop_assert!(p >= c);
                prop_assert!(p >= prev);
                prev = p;
            }
        }
    }

    #[test]
    fn zf_inverts_the_residual_system(seed in any::<u64>(), users in 3usize..=12, extra in 0usize..40) {
        let m = (users + extra).min(64);
        let profile = LargeScaleProfile::uniform(users);
        let ch = ChannelRealization::draw(m, &profile, seed, 1);
        let idx = SlotIndexer::new(users).unwrap();
        let gram = Gram::new(&ch);
        for k in 1..=users {
            let stage = rates::build_zf_stage(&gram, k, &idx).unwrap();
            let prod = stage.combiner() * stage.matrix();
            let eye = DMatrix::<Complex64>::identity(prod.nrows(), prod.ncols());
            prop_assert!((prod - eye).camax() <= 1e-9);
            prop_assert!(stage.noise_gain().iter().all(|g| *g > 0.0));
        }
    }
}
