mod common;

use proptest::prelude::*;
use rand::Rng;
use srb::classifier::{build_graph, build_vertices, classify_with_grid, Direction, Orientation};
use srb::error::Error;
use srb::interval_maps::{beta, beta_bounds, MonotoneMap, Sign};
use srb::market::{
    build_market_ifs, g_function, generalized_kelly_check, kelly_rule, market_map,
    simulate_market_stream,
};
use srb::numeric::log_sigmoid;
use srb::orbit_engine::{
    empirical_measure, push_forward, sample_orbit_stream, weak_distance, EmpiricalMeasure,
};
use srb::stats::{arcsine_path, exponent_series};

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn splines_are_increasing_with_fixed_ends(seed in any::<u64>()) {
        let m = random_spline(&mut rng(seed, 0));
        prop_assert_eq!((m.apply(0.0), m.apply(1.0)), (0.0, 1.0));
        let mut r = rng(seed, 1);
        for _ in 0..500 {
            let (a, b): (f64, f64) = (r.random(), r.random());
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(m.apply(lo) <= m.apply(hi));
        }
    }

    #[test]
    fn fixed_points_and_gap_signs(seed in any::<u64>()) {
        let m = random_spline(&mut rng(seed, 0));
        let set = m.fixed_point_set().unwrap();
        for p in &set.points {
            let tol = if p.tangent { 1e-6 } else { 1e-9 };
            prop_assert!((m.apply(p.value) - p.value).abs() <= tol);
        }
        for g in &set.gaps {
            let mid = 0.5 * (g.lo + g.hi);
            let d = m.apply(mid) - mid;
            match g.sign {
                Sign::Up => prop_assert!(d > 0.0),
                Sign::Down => prop_assert!(d < 0.0),
            }
        }
    }

    #[test]
    fn interval_graphs_respect_orientation(seed in any::<u64>()) {
        let ifs = random_spline_ifs(&mut rng(seed, 0));
        let v = build_vertices(&ifs).unwrap();
        for (dir, passive) in [(Direction::Down, Orientation::Up), (Direction::Up, Orientation::Down)] {
            let g = build_graph(&v, dir).unwrap();
            for x in &v {
                if x.orientation == passive {
                    prop_assert_eq!(g.out_degree(x.id), 0);
                }
            }
            for &(a, b) in &g.edges {
                prop_assert_ne!(v[a].map, v[b].map);
            }
        }
    }

    #[test]
    fn classification_respects_the_bs_bound(seed in any::<u64>()) {
        let ifs = random_spline_ifs(&mut rng(seed, 0));
        match classify_with_grid(&ifs, 2000) {
            Ok(rep) => prop_assert!(rep.srb_measures().len() <= rep.bs_bound),
            Err(e) => prop_assert!(!matches!(e, Error::Inconsistent(_)), "{e}"),
        }
    }

    #[test]
    fn orbits_are_monotone_in_the_start(seed in any::<u64>(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let ifs = random_spline_ifs(&mut rng(seed, 0));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let o1 = sample_orbit_stream(&ifs, lo, 300, seed, 3).unwrap();
        let o2 = sample_orbit_stream(&ifs, hi, 300, seed, 3).unwrap();
        prop_assert_eq!(&o1.symbols, &o2.symbols);
        for (x, y) in o1.states.iter().zip(&o2.states) {
            prop_assert!(ordered_up_to_rounding(*x, *y), "{} > {}", x, y);
        }
    }

    #[test]
    fn transfer_operator_conserves_mass(seed in any::<u64>()) {
        let ifs = random_spline_ifs(&mut rng(seed, 0));
        let o = sample_orbit_stream(&ifs, 0.5, 200, seed, 0).unwrap();
        let m = empirical_measure(&o);
        prop_assert!((push_forward(&ifs, &m).total_mass() - 1.0).abs() < 1e-12);
        let d0 = EmpiricalMeasure::dirac(0.0);
        prop_assert_eq!(weak_distance(&push_forward(&ifs, &d0), &d0), 0.0);
    }

    #[test]
    fn exponent_identity_along_orbits(seed in any::<u64>(), r0 in 0.01..0.99f64) {
        let ifs = random_spline_ifs(&mut rng(seed, 0));
        let o = sample_orbit_stream(&ifs, r0, 200, seed, 1).unwrap();
        let s = exponent_series(&o, &ifs).unwrap();
        let ln_r0 = r0.ln();
        for t in 0..s.ln_alpha_cum.len() {
            if (1e-8..=1.0 - 1e-8).contains(&o.states[t]) {
                let want = log_sigmoid(o.log_odds[t]);
                let got = s.ln_alpha_cum[t].exp() * ln_r0;
                prop_assert!((got - want).abs() <= 1e-8 * want.abs(), "t={} {} {}", t, got, want);
            }
        }
    }

    #[test]
    fn exponent_bounds_cover_samples(seed in any::<u64>()) {
        let m = random_spline(&mut rng(seed, 0));
        let bb = beta_bounds(&m, (0.0, 1.0), 2000).unwrap();
        let mut r = rng(seed, 2);
        for _ in 0..200 {
            let x: f64 = r.random_range(0.001..0.999);
            let b = beta(&m, x).unwrap();
            // Grid-sound only: allow the variation within one grid cell.
            prop_assert!(b >= bb.b * (1.0 - 1e-2) && b <= bb.big_b * (1.0 + 1e-2));
        }
    }

    #[test]
    fn market_shares_are_conserved(seed in any::<u64>()) {
        let mut r = rng(seed, 0);
        let model = random_market(&mut r, 4, 4);
        let n = r.random_range(2..=4);
        let strategies: Vec<_> = (0..n).map(|_| random_strategy(&mut r, model.assets())).collect();
        let w0: Vec<f64> = (0..n).map(|_| 0.1 + r.random::<f64>()).collect();
        let traj = simulate_market_stream(&model, &strategies, &w0, 300, seed, 0).unwrap();
        prop_assert!(traj.max_share_error <= 1e-12);
        prop_assert!(traj.max_clearing_error <= 1e-12);
        prop_assert!(traj.shares.iter().flatten().all(|&x| x > 0.0));
    }

    #[test]
    fn two_investor_market_is_the_interval_orbit(seed in any::<u64>()) {
        let mut r = rng(seed, 0);
        let model = random_market(&mut r, 4, 4);
        let (a, b) = (random_strategy(&mut r, model.assets()), random_strategy(&mut r, model.assets()));
        let w1 = 0.05 + 0.9 * r.random::<f64>();
        let mi = build_market_ifs(&model, &a, &b).unwrap();
        let traj = simulate_market_stream(&model, &[a, b], &[w1, 1.0 - w1], 300, seed, 5).unwrap();
        let orbit = sample_orbit_stream(&mi.ifs, traj.shares[0][0], 300, seed, 5).unwrap();
        prop_assert_eq!(&traj.symbols, &orbit.symbols);
        for (row, x) in traj.shares.iter().zip(&orbit.states) {
            prop_assert!((row[0] - x).abs() <= 1e-12);
        }
    }

    #[test]
    fn market_maps_and_g(seed in any::<u64>()) {
        let mut r = rng(seed, 0);
        let (row, a, b) = random_market_map(&mut r, 4);
        let m = market_map(&row, &a, &b).unwrap();
        prop_assert_eq!((m.apply(0.0), m.apply(1.0)), (0.0, 1.0));
        let v = random_simplex(&mut r, row.len(), 0.2);
        prop_assert!((g_function(&a, &b, &v, 1.0).unwrap() - 1.0).abs() <= 1e-12);
        let g: Vec<f64> = (0..=200).map(|i| g_function(&a, &b, &v, i as f64 / 200.0).unwrap()).collect();
        for w in g.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12);
        }
        // Termwise success without aggregate success would be an error.
        prop_assert!(generalized_kelly_check(&a, &b, &v).is_ok());
        let same = market_map(&row, &a, &a).unwrap();
        prop_assert!(same.is_identity());
    }

    #[test]
    fn kelly_is_a_strategy(seed in any::<u64>()) {
        let model = random_market(&mut rng(seed, 0), 4, 4);
        let k = kelly_rule(&model);
        prop_assert!((k.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let c = generalized_kelly_check(&k, &random_strategy(&mut rng(seed, 1), model.assets()), &model.expected_payoffs()).unwrap();
        prop_assert!(c.termwise_ok && c.aggregate_ok);
    }

    #[test]
    fn quadratic_variation_sandwich(seed in any::<u64>(), d in 0.2..1.0f64, spread in 1.0..4.0f64) {
        let big_d = d * spread;
        let mut r = rng(seed, 0);
        let steps = std::iter::repeat_with(move || {
            let c = r.random_range(d..=big_d);
            let x = if r.random::<bool>() { c.sqrt() } else { -c.sqrt() };
            (x, c)
        });
        let p = arcsine_path(steps, 500.0, d, big_d).unwrap();
        prop_assert!(p.sandwich_ok);
        prop_assert!(p.l_n >= 0.0 && p.l_n <= 1.0 + big_d / 500.0);
    }
}

#[test]
fn identity_maps_have_no_fixed_set() {
    assert!(matches!(
        MonotoneMap::identity().fixed_point_set(),
        Err(Error::DegenerateFixedSet { .. })
    ));
}
