mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::{majorant_by_closure, one_dimensional_lcmle, SpiderNode};
use orthant::lcmle::{fit, least_concave_majorant, sigma, tv_distance, FitOptions, SpiderConcaveFn, SpiderLeg};
use orthant::simlab::{fit_replicate, DensitySpec};
use orthant::{Error, OrthantComplex, Point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spider(k: usize) -> OrthantComplex {
    OrthantComplex::spider(k).unwrap()
}

fn points(c: &OrthantComplex, v: &[(usize, f64)]) -> Vec<Point> {
    v.iter().map(|&(l, u)| c.axis_point(l, u).unwrap()).collect()
}

/// Distinct coordinates on one leg with empirical weights.
fn distinct(coords: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut m: BTreeMap<u64, usize> = BTreeMap::new();
    for &u in coords {
        *m.entry(u.to_bits()).or_default() += 1;
    }
    let n = coords.len() as f64;
    (m.keys().map(|&b| f64::from_bits(b)).collect(), m.values().map(|&c| c as f64 / n).collect())
}

#[test]
fn one_leg_fits_match_the_classical_estimator() {
    let datasets: [&[f64]; 5] = [
        &[0.2, 0.8],
        &[0.1, 0.4, 0.5, 0.9, 1.7],
        &[0.3, 0.35, 0.4, 1.2, 2.0, 2.1],
        &[0.0, 0.5, 0.6, 0.7, 1.5],
        &[0.5, 0.5, 1.0, 1.1, 3.0, 0.9],
    ];
    let c = spider(3);
    for (i, data) in datasets.iter().enumerate() {
        let sample: Vec<Point> = data.iter().map(|&u| c.axis_point(1, u).unwrap()).collect();
        let r = fit(&c, &sample, &FitOptions::default()).unwrap();
        let (pos, w) = distinct(data);
        let want = one_dimensional_lcmle(&pos, &w);
        for (&u, &v) in pos.iter().zip(&want) {
            let got = r.psi.value(1, u);
            assert!((got - v).abs() < 1e-4, "dataset {i} at {u}: fit {got}, oracle {v}");
        }
        for (leg, knots) in r.psi.legs().iter().enumerate() {
            if leg != 1 {
                assert!(knots.knots.is_empty());
            }
        }
    }
}

#[test]
fn majorant_examples() {
    let f = least_concave_majorant(3, &[(0, 1.0, 0.0), (1, 1.0, 0.0), (2, 1.0, -3.0)]).unwrap();
    let mut nodes: Vec<SpiderNode> = vec![None];
    for leg in 0..3 {
        nodes.extend((1..=40).map(|i| Some((leg, i as f64 / 40.0))));
    }
    let want = majorant_by_closure(&[(0, 1.0, 0.0), (1, 1.0, 0.0), (2, 1.0, -3.0)], &nodes);
    for (n, w) in nodes.iter().zip(&want) {
        let got = n.map_or(f.origin_value(), |(l, u)| f.value(l, u));
        assert!((got - w).abs() < 1e-12, "{n:?}: {got} vs {w}");
    }
    assert!((f.value(2, 0.5) + 1.5).abs() < 1e-15);
}

#[test]
fn integral_and_evaluation_examples() {
    let half_line = SpiderConcaveFn::new(0.0, vec![SpiderLeg { knots: vec![], final_slope: Some(-1.0) }]).unwrap();
    assert!((half_line.integrate_exp().unwrap() - 1.0).abs() < 1e-15);
    let unit = SpiderConcaveFn::new(0.0, vec![SpiderLeg { knots: vec![(1.0, 0.0)], final_slope: None }]).unwrap();
    assert!((unit.integrate_exp().unwrap() - 1.0).abs() < 1e-15);
    let tent = SpiderConcaveFn::new(0.0, vec![SpiderLeg { knots: vec![], final_slope: Some(-1.0) }; 3]).unwrap();
    assert!((tent.integrate_exp().unwrap() - 3.0).abs() < 1e-15);
    let c = spider(3);
    assert_eq!(tent.evaluate(&c.origin()), 1.0);
    assert!((tent.evaluate(&c.axis_point(2, 2.0).unwrap()) - 0.13534).abs() < 1e-5);
    let u1 = SpiderConcaveFn::new(0.0, vec![SpiderLeg { knots: vec![(1.0, 0.0)], final_slope: None }; 3]).unwrap();
    assert_eq!(u1.evaluate(&c.axis_point(0, 1.5).unwrap()), 0.0);
}

/// Piecewise-linear interpolant of `g` on `[0, max]` with `m` pieces per leg
/// and a final tangent slope.
fn interpolant(g: impl Fn(usize, f64) -> f64, legs: usize, m: usize, max: f64) -> orthant::Result<SpiderConcaveFn> {
    let legs = (0..legs)
        .map(|l| {
            let knots: Vec<(f64, f64)> = (1..=m).map(|i| i as f64 * max / m as f64).map(|u| (u, g(l, u))).collect();
            let (a, b) = (knots[m - 2], knots[m - 1]);
            SpiderLeg { final_slope: Some((b.1 - a.1) / (b.0 - a.0)), knots }
        })
        .collect();
    SpiderConcaveFn::new(g(0, 0.0), legs)
}

#[test]
fn gaussian_type_log_density_is_spider_concave() {
    let c = Arc::new(spider(3));
    let f1 = DensitySpec::f1(c.clone(), 1e-12).unwrap();
    let log_f1 = |l: usize, u: f64| f1.eval(&c.axis_point(l, u).unwrap()).unwrap().ln();
    assert!(interpolant(log_f1, 3, 200, 4.0).is_ok());
    // the two-mode mixture is not log-concave across the origin
    let f2 = DensitySpec::f2(c.clone(), 1e-12).unwrap();
    let log_f2 = |l: usize, u: f64| f2.eval(&c.axis_point(l, u).unwrap()).unwrap().ln();
    assert!(matches!(interpolant(log_f2, 3, 200, 4.0), Err(Error::InvalidConcaveFn(_))));
}

#[test]
fn fits_on_simulated_data_are_normalized_with_hull_support() {
    let c = Arc::new(spider(3));
    for truth in [DensitySpec::f1(c.clone(), 1e-12).unwrap(), DensitySpec::f2(c.clone(), 1e-12).unwrap()] {
        for s in 0..5 {
            let (sample, r) = fit_replicate(&truth, 1000, 11, s, &FitOptions::default()).unwrap();
            assert!((r.integral - 1.0).abs() <= 1e-6);
            for leg in 0..3 {
                let max = sample.iter().filter_map(|p| p.leg()).filter(|p| p.0 == leg).map(|p| p.1).fold(0.0, f64::max);
                assert_eq!(r.psi.domain_start(leg), Some(0.0));
                assert_eq!(r.psi.domain_end(leg), Some(max));
            }
        }
    }
}

#[test]
fn tv_shrinks_with_sample_size() {
    let c = Arc::new(spider(3));
    let f1 = DensitySpec::f1(c.clone(), 1e-12).unwrap();
    let median = |n: usize| {
        let mut tv: Vec<f64> = (0..9)
            .map(|s| {
                let (_, r) = fit_replicate(&f1, n, 3, s, &FitOptions::default()).unwrap();
                tv_distance(&DensitySpec::fitted(c.clone(), r.psi).unwrap(), &f1, 1e-8).unwrap()
            })
            .collect();
        tv.sort_by(f64::total_cmp);
        tv[4]
    };
    let (a, b) = (median(100), median(1000));
    assert!(b < a, "median TV {a} at N = 100, {b} at N = 1000");
}

/// Domain of the hull of a spider sample, per leg.
fn hull_domain(k: usize, sample: &[(usize, f64)]) -> Vec<(Option<f64>, Option<f64>)> {
    let occupied: Vec<usize> = (0..k).filter(|&l| sample.iter().any(|&(m, u)| m == l && u > 0.0)).collect();
    let at_origin = sample.iter().any(|&(_, u)| u == 0.0);
    let max = |l: usize| sample.iter().filter(|p| p.0 == l).map(|p| p.1).fold(0.0, f64::max);
    let min = |l: usize| sample.iter().filter(|p| p.0 == l && p.1 > 0.0).map(|p| p.1).fold(f64::INFINITY, f64::min);
    (0..k)
        .map(|l| {
            let on_leg = occupied.contains(&l);
            if occupied.len() >= 2 {
                (Some(0.0), Some(if on_leg { max(l) } else { 0.0 }))
            } else if on_leg {
                (Some(if at_origin { 0.0 } else { min(l) }), Some(max(l)))
            } else if at_origin {
                (Some(0.0), Some(0.0))
            } else {
                (None, None)
            }
        })
        .collect()
}

fn sample_strategy() -> impl Strategy<Value = (usize, Vec<(usize, f64)>)> {
    (3usize..=5).prop_flat_map(|k| {
        let coord = prop_oneof![1 => Just(0.0), 2 => (1u32..=8).prop_map(|i| i as f64 * 0.25), 6 => 0.01f64..3.0];
        (Just(k), prop::collection::vec((0..k, coord), 2..40))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_invariants((k, raw) in sample_strategy(), seed in any::<u64>()) {
        let c = spider(k);
        let sample = points(&c, &raw);
        let distinct_positions: std::collections::HashSet<(usize, u64)> =
            raw.iter().map(|&(l, u)| if u == 0.0 { (0, 0) } else { (l, u.to_bits()) }).collect();
        let r = match fit(&c, &sample, &FitOptions::default()) {
            Err(Error::LcmleNonexistent) => {
                prop_assert_eq!(distinct_positions.len(), 1);
                return Ok(());
            }
            other => other.unwrap(),
        };
        prop_assert!(distinct_positions.len() >= 2);
        prop_assert!((r.integral - 1.0).abs() <= 1e-6, "integral {}", r.integral);

        let domain = hull_domain(k, &raw);
        for (leg, &(start, end)) in domain.iter().enumerate() {
            prop_assert_eq!(r.psi.domain_start(leg), start, "leg {}", leg);
            prop_assert_eq!(r.psi.domain_end(leg), end, "leg {}", leg);
        }

        // the fit is the majorant of its own lifted values
        let y: Vec<f64> = sample.iter().map(|p| r.psi.value_at(p)).collect();
        let best = sigma(&c, &sample, &y).unwrap();
        prop_assert!((best - (r.objective - 1.0)).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let z: Vec<f64> = y.iter().map(|v| v + rng.random_range(-0.05..0.05)).collect();
            prop_assert!(sigma(&c, &sample, &z).unwrap() <= best + 1e-9);
        }
    }

    #[test]
    fn majorant_dominates_and_is_least((k, raw) in sample_strategy(), seed in any::<u64>()) {
        let distinct_positions: std::collections::HashSet<(usize, u64)> =
            raw.iter().map(|&(l, u)| if u == 0.0 { (0, 0) } else { (l, u.to_bits()) }).collect();
        prop_assume!(distinct_positions.len() >= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lifted: Vec<(usize, f64, f64)> = raw.iter().map(|&(l, u)| (l, u, rng.random_range(-2.0..1.0))).collect();
        let m = least_concave_majorant(k, &lifted).unwrap();
        for &(l, u, y) in &lifted {
            prop_assert!(m.value(l, u) >= y - 1e-12);
        }
        // every knot is attained by a lifted point
        for (l, leg) in m.legs().iter().enumerate() {
            for &(u, v) in &leg.knots {
                let top = lifted.iter().filter(|p| p.0 == l && p.1 == u).map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!((top - v).abs() < 1e-12, "knot ({}, {}) at {} but data max {}", l, u, v, top);
            }
        }
        let mut nodes: Vec<SpiderNode> = vec![None];
        for leg in 0..k {
            let mut coords: Vec<f64> = (1..=12).map(|i| i as f64 * 0.25).collect();
            coords.extend(raw.iter().filter(|p| p.0 == leg && p.1 > 0.0).map(|p| p.1));
            coords.sort_by(f64::total_cmp);
            coords.dedup();
            nodes.extend(coords.into_iter().map(|u| Some((leg, u))));
        }
        let want = majorant_by_closure(&lifted, &nodes);
        for (n, w) in nodes.iter().zip(&want) {
            let got = n.map_or(m.origin_value(), |(l, u)| m.value(l, u));
            if w.is_finite() {
                prop_assert!((got - w).abs() < 1e-9, "{:?}: {} vs {}", n, got, w);
            } else {
                prop_assert_eq!(got, f64::NEG_INFINITY, "{:?}", n);
            }
        }
    }
}
