use glil::band::VolatilityBand;
use glil::lil::{
    gaussian_abs_moment, lil_statistic, moment_ratio_check, sample_trajectory, sample_trajectory_with, LILReport,
    Noise, TrajectoryOptions,
};
use glil::strategy::AdversaryStrategy;
use proptest::prelude::*;

#[test]
fn statistic_oracle() {
    // 30 / sqrt(200 ln ln 100)
    assert_eq!(lil_statistic(30.0, 100).unwrap(), 1.716_568_727_018_882_7);
    assert!(lil_statistic(1.0, 2).is_err());
}

#[test]
fn gaussian_moments_match_closed_forms() {
    assert!((gaussian_abs_moment(2.0) - 1.0).abs() < 1e-12);
    assert!((gaussian_abs_moment(4.0) - 3.0).abs() < 1e-12);
    assert!((gaussian_abs_moment(3.0) - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
}

#[test]
fn degenerate_band_makes_every_strategy_the_same_walk() {
    let band = VolatilityBand::point(0.8).unwrap();
    let reference = sample_trajectory(&AdversaryStrategy::Constant { sigma: 0.8 }, &band, 20_000, 3).unwrap();
    for text in ["feedback:0.1", "random:2", "block:0.2"] {
        for s in AdversaryStrategy::parse_list(text, 5).unwrap() {
            let t = sample_trajectory(&s, &band, 20_000, 3).unwrap();
            assert_eq!(t.sums, reference.sums, "{}", s.label());
            assert_eq!(t.tail_sup, reference.tail_sup);
        }
    }
}

/// Rare long excursions put a single path well outside the band now and
/// then, so the concentration is checked across many seeds.
#[test]
fn degenerate_band_histogram_concentrates() {
    let band = VolatilityBand::point(1.0).unwrap();
    let mut outside: Vec<f64> = (0..40)
        .map(|seed| {
            let t = sample_trajectory(&AdversaryStrategy::Constant { sigma: 1.0 }, &band, 1_000_000, seed).unwrap();
            LILReport::from_trajectory(&t, &band).histogram.mass_outside(-1.2, 1.2)
        })
        .collect();
    let concentrated = outside.iter().filter(|&&m| m < 0.01).count();
    assert!(concentrated >= 30, "{outside:?}");
    outside.sort_by(f64::total_cmp);
    assert!(outside[20] < 0.01);
}

#[test]
fn histogram_counts_every_tail_checkpoint() {
    let band = VolatilityBand::new(0.5, 1.0).unwrap();
    let t = sample_trajectory(&AdversaryStrategy::Constant { sigma: 1.0 }, &band, 100_000, 1).unwrap();
    let report = LILReport::from_trajectory(&t, &band);
    let tail = t.checkpoints.iter().filter(|&&n| n >= 317).count() as u64;
    assert_eq!(report.histogram.total(), tail);
    assert!(report.tail_inf <= report.tail_sup);
}

#[test]
fn moments_scale_with_sigma_to_the_r() {
    let n = [50, 400];
    let m = [0, 20];
    let unit = VolatilityBand::point(1.0).unwrap();
    let half = VolatilityBand::point(0.5).unwrap();
    let a = moment_ratio_check(&unit, &AdversaryStrategy::Constant { sigma: 1.0 }, 3.0, &n, &m, 2000, 11).unwrap();
    let b = moment_ratio_check(&half, &AdversaryStrategy::Constant { sigma: 0.5 }, 3.0, &n, &m, 2000, 11).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert!((y.ratio / x.ratio - 0.125).abs() < 1e-12);
    }
}

#[test]
fn moment_order_must_exceed_two() {
    let band = VolatilityBand::new(0.5, 1.0).unwrap();
    assert!(moment_ratio_check(&band, &AdversaryStrategy::Constant { sigma: 1.0 }, 2.0, &[10], &[0], 10, 0).is_err());
}

#[test]
fn gaussian_noise_stays_truncated() {
    let band = VolatilityBand::new(0.5, 1.0).unwrap();
    let opts = TrajectoryOptions {
        noise: Noise::Gaussian,
        ..TrajectoryOptions::default()
    };
    let t = sample_trajectory_with(&AdversaryStrategy::Constant { sigma: 1.0 }, &band, 50_000, 4, &opts).unwrap();
    assert!(t.max_abs_increment <= 6.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn increments_are_bounded_by_sigma_hi(lo in 0.1f64..1.0, t in 0.0f64..1.0, seed in any::<u64>(), pick in 0usize..4) {
        let band = VolatilityBand::new(lo, lo + t).unwrap();
        let s = &match pick {
            0 => AdversaryStrategy::Feedback { target: 0.0, gain: 4.0 },
            1 => AdversaryStrategy::Random { seed },
            2 => AdversaryStrategy::BlockTarget { target: 0.0, growth: 1.5 },
            _ => AdversaryStrategy::Periodic { schedule: vec![band.hi(), band.lo(), band.hi()] },
        };
        let traj = sample_trajectory(s, &band, 5_000, seed).unwrap();
        prop_assert!(traj.max_abs_increment <= band.hi() + 1e-12);
    }

    #[test]
    fn antithetic_noise_negates_the_path(seed in any::<u64>(), sigma in 0.5f64..1.0) {
        let band = VolatilityBand::new(0.5, 1.0).unwrap();
        let s = AdversaryStrategy::Constant { sigma };
        let flipped = TrajectoryOptions { antithetic: true, ..TrajectoryOptions::default() };
        let a = sample_trajectory(&s, &band, 20_000, seed).unwrap();
        let b = sample_trajectory_with(&s, &band, 20_000, seed, &flipped).unwrap();
        prop_assert!(a.sums.iter().zip(&b.sums).all(|(x, y)| *x == -*y));
        prop_assert_eq!(a.tail_sup, -b.tail_inf);
        prop_assert_eq!(a.tail_inf, -b.tail_sup);
    }

    #[test]
    fn trajectories_are_reproducible(seed in any::<u64>()) {
        let band = VolatilityBand::new(0.5, 1.0).unwrap();
        let s = AdversaryStrategy::Feedback { target: 0.2, gain: 1.0 };
        prop_assert_eq!(sample_trajectory(&s, &band, 5_000, seed).unwrap(), sample_trajectory(&s, &band, 5_000, seed).unwrap());
    }
}
