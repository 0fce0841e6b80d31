use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use vortexlab::constants::SI;
use vortexlab::device::derive_scales;
use vortexlab::energetics::{degenerate_depths, Landscape, PinningSite};
use vortexlab::jumps::{
    dwell_lengths, dwell_statistics, effective_temperature, iq_cluster, latching_filter, simulate_trajectory,
    thermal_population, JumpError, ReadoutModel, TelegraphParams,
};
use vortexlab::tunneling::{
    find_sweet_spot, solve_at_field, two_level_reduction, DoubleWell, Grid, TunnelModel, TwoLevel,
};
use vortexlab::DeviceModel;

struct Well {
    land: Landscape,
    grid: Grid,
    model: TunnelModel,
    reduced: TwoLevel,
}

fn pinned_double_well() -> Well {
    let device = DeviceModel::reference();
    let scales = derive_scales(&device, &SI).unwrap();
    let (x_bar, delta, sigma, b0) = (1.2e-6, 12e-9, 4e-9, 130e-6);
    let (vl, vr) = degenerate_depths(0.02 * scales.eps0, x_bar, delta, b0, 0.0, &scales, &device).unwrap();
    let sites = vec![
        PinningSite::new(x_bar - delta / 2.0, 0.0, vl, sigma),
        PinningSite::new(x_bar + delta / 2.0, 0.0, vr, sigma),
    ];
    let land = Landscape::new(device, scales, sites.clone(), 0.0).unwrap();
    let model = TunnelModel::from_pinning(&sites[0], 1.5e-9).unwrap();
    let half = delta / 2.0 + 6.0 * sigma;
    let grid = Grid::line(x_bar - half, x_bar + half, 512, 0.0).unwrap();
    let sweet = find_sweet_spot(&land, &grid, &model, b0 - 50e-6, b0 + 50e-6, 1e-9).unwrap();
    let reduced = two_level_reduction(&sweet, &DoubleWell::from_sites(&sites).unwrap(), &land).unwrap();
    Well { land, grid, model, reduced }
}

#[test]
fn degeneracy_gap_is_twice_delta() {
    let w = pinned_double_well();
    let at = solve_at_field(&w.land, &w.grid, &w.model, w.reduced.b_sweet, 2).unwrap();
    assert!((at.splitting() / (2.0 * w.reduced.delta) - 1.0).abs() < 1e-9);
    let t = w.reduced;
    let b = t.b_sweet + 2.0 * t.delta / t.slope;
    assert!((t.energy_gap(b) / (8f64.sqrt() * t.delta) - 1.0).abs() < 1e-12);
}

#[test]
fn deep_detuning_follows_asymmetry() {
    let w = pinned_double_well();
    let t = w.reduced;
    for k in [-12.0, 12.0] {
        let b = t.b_sweet + k * t.delta / t.slope.abs();
        let r = solve_at_field(&w.land, &w.grid, &w.model, b, 2).unwrap();
        let eps = t.epsilon(b).abs();
        assert!((r.splitting() / eps - 1.0).abs() < 0.05, "k = {k}: {} vs {eps}", r.splitting());
    }
}

fn readout() -> ReadoutModel {
    ReadoutModel::symmetric(6.0, 1.0, 2e-6, 5e-6).unwrap()
}

#[test]
fn never_excited_without_upward_rate() {
    let tg = TelegraphParams::new(f64::INFINITY, 135e-6).unwrap();
    let tr = simulate_trajectory(&tg, &readout(), 0.05, 1).unwrap();
    assert!(tr.true_states.unwrap().iter().all(|s| !s));
}

#[test]
fn generator_dwell_means() {
    let tg = TelegraphParams::new(570e-6, 135e-6).unwrap();
    let ro = readout();
    let tr = simulate_trajectory(&tg, &ro, 5.0, 8).unwrap();
    let states = tr.true_states.unwrap();
    let (ground, excited) = dwell_lengths(&states);
    for (runs, truth) in [(ground, 570e-6), (excited, 135e-6)] {
        let n = runs.len() as f64;
        let mean = runs.iter().sum::<usize>() as f64 * ro.spacing / n;
        // dwells on the sampling lattice are biased by half a sample at most
        let se = mean / n.sqrt() + 0.5 * ro.spacing;
        assert!((mean - truth).abs() <= 3.0 * se, "{mean} vs {truth}");
    }
    let p_e = states.iter().filter(|s| **s).count() as f64 / states.len() as f64;
    let stationary = tg.stationary_excited();
    // correlated samples: one effective sample per correlation time
    let n_eff = 5.0 / tg.t1();
    let se = (stationary * (1.0 - stationary) / n_eff).sqrt();
    assert!((p_e - stationary).abs() <= 3.0 * se);
}

#[test]
fn seeds_fix_trajectories() {
    let tg = TelegraphParams::new(570e-6, 135e-6).unwrap();
    let a = simulate_trajectory(&tg, &readout(), 0.02, 4).unwrap();
    let b = simulate_trajectory(&tg, &readout(), 0.02, 4).unwrap();
    let c = simulate_trajectory(&tg, &readout(), 0.02, 5).unwrap();
    assert_eq!(a.iq, b.iq);
    assert_ne!(a.true_states, c.true_states);
}

#[test]
fn clean_points_are_assigned_exactly() {
    let ro = readout();
    let truth: Vec<bool> = (0..200).map(|i| (i / 7) % 3 == 0).collect();
    let pts: Vec<Complex64> = truth.iter().map(|&s| if s { ro.center_e } else { ro.center_g }).collect();
    assert_eq!(latching_filter(&pts, &ro, 1.5).unwrap(), truth);
}

#[test]
fn middle_points_hold_state() {
    let ro = readout();
    let mid = 0.5 * (ro.center_g + ro.center_e);
    let pts = [ro.center_e, mid, mid, ro.center_g, mid];
    assert_eq!(latching_filter(&pts, &ro, 1.5).unwrap(), [true, true, true, false, false]);
}

#[test]
fn dwell_fit_round_trip() {
    let spacing = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let up = Exp::<f64>::new(1.0 / 570e-6).unwrap();
    let down = Exp::<f64>::new(1.0 / 135e-6).unwrap();
    let mut states = Vec::new();
    for _ in 0..3000 {
        let g = ((up.sample(&mut rng) / spacing).round() as usize).max(1);
        let e = ((down.sample(&mut rng) / spacing).round() as usize).max(1);
        states.extend(std::iter::repeat_n(false, g));
        states.extend(std::iter::repeat_n(true, e));
    }
    let s = dwell_statistics(&states, spacing).unwrap();
    assert!((s.t_up.mean - 570e-6).abs() <= 3.0 * s.t_up.std_error);
    assert!((s.t_down.mean - 135e-6).abs() <= 3.0 * s.t_down.std_error);
}

#[test]
fn harmonic_combination() {
    assert!((TelegraphParams::new(200e-6, 200e-6).unwrap().t1() - 100e-6).abs() < 1e-18);
    let t1 = TelegraphParams::new(570e-6, 135e-6).unwrap().t1();
    assert!((t1 - 109e-6).abs() < 0.5e-6);
}

fn two_clouds(p_e: f64, n: usize, seed: u64) -> (Vec<Complex64>, Complex64, Complex64) {
    let (g, e) = (Complex64::new(-3.0, 1.0), Complex64::new(3.0, 1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let pts = (0..n)
        .map(|i| {
            let c = if (i as f64 + 0.5) / n as f64 > 1.0 - p_e { e } else { g };
            c + Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng))
        })
        .collect();
    (pts, g, e)
}

#[test]
fn clusters_recover_population() {
    let (pts, g, e) = two_clouds(0.215, 20_000, 2);
    let c = iq_cluster(&pts, None).unwrap();
    assert!((c.p_e - 0.215).abs() < 0.01);
    assert!((c.center_g - g).norm() < 0.05 && (c.center_e - e).norm() < 0.05);
    let hinted = iq_cluster(&pts, Some(e)).unwrap();
    assert!((hinted.p_e - 0.785).abs() < 0.01);
    assert!((hinted.p_e + c.p_e - 1.0).abs() < 1e-9);
}

#[test]
fn single_cloud_is_degenerate() {
    let (pts, _, _) = two_clouds(0.0, 5000, 6);
    assert!(matches!(iq_cluster(&pts, None), Err(JumpError::Clustering(_))));
}

#[test]
fn temperature_values() {
    let p = thermal_population(74e-3, 2e9, &SI).unwrap();
    assert!((p - 0.215).abs() < 1e-3);
    assert!(thermal_population(1e-4, 2e9, &SI).unwrap() < 1e-100);
    assert!(matches!(
        effective_temperature(0.7, 2e9, &SI),
        Err(JumpError::PopulationInversion { .. })
    ));
}

proptest! {
    #[test]
    fn temperature_round_trip(t in 5e-3f64..2.0, f in 0.1e9f64..20e9) {
        let p = thermal_population(t, f, &SI).unwrap();
        prop_assume!(p > 1e-300);
        let back = effective_temperature(p, f, &SI).unwrap();
        prop_assert!((back / t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn filter_is_causal(seed in 0u64..1000, cut in 10usize..400) {
        let ro = readout();
        let tg = TelegraphParams::new(100e-6, 50e-6).unwrap();
        let tr = simulate_trajectory(&tg, &ro, 500.0 * ro.spacing, seed).unwrap();
        let full = latching_filter(&tr.iq, &ro, 1.5).unwrap();
        let mut altered = tr.iq.clone();
        for z in altered.iter_mut().skip(cut) {
            *z = -*z;
        }
        let part = latching_filter(&altered, &ro, 1.5).unwrap();
        prop_assert_eq!(&full[..cut], &part[..cut]);
    }

    #[test]
    fn t1_below_both_means(up in 1e-5f64..1e-3, down in 1e-5f64..1e-3) {
        let t1 = TelegraphParams::new(up, down).unwrap().t1();
        prop_assert!(t1 <= up && t1 <= down);
    }
}
